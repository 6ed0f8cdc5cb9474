//! Long-format CSV input and output.
//!
//! Review files carry one row per (product, reviewer, question) with the
//! columns `product_id, reviewer_id, question_id, answer,
//! final_classification` and optionally `team`, `period` and `group`.
//! Row numbers in errors count data rows from 1, not counting the header.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use crate::did::DidObservation;
use crate::error::{Error, Result};
use crate::model::{Group, ReviewRecord};

pub const REQUIRED_COLUMNS: [&str; 5] = [
    "product_id",
    "reviewer_id",
    "question_id",
    "answer",
    "final_classification",
];

struct Header {
    columns: BTreeMap<String, usize>,
}

impl Header {
    fn read<R: Read>(reader: &mut csv::Reader<R>) -> Result<Self> {
        let headers = reader.headers()?.clone();
        if headers.is_empty() || headers.iter().all(str::is_empty) {
            return Err(Error::Empty("input has no header row".into()));
        }
        let columns = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        Ok(Self { columns })
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.columns
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }

    fn has(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    ReaderBuilder::new().trim(Trim::All).from_reader(input)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn field(record: &StringRecord, index: usize) -> String {
    record.get(index).unwrap_or("").to_string()
}

fn optional_field(record: &StringRecord, index: Option<usize>) -> Option<String> {
    index
        .and_then(|i| record.get(i))
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

fn parse_period(text: &str, row: usize) -> Result<i64> {
    text.parse().map_err(|_| Error::BadRow {
        row,
        detail: format!("period `{text}` is not an integer"),
    })
}

fn parse_group(text: &str, row: usize) -> Result<Group> {
    text.parse().map_err(|_| Error::BadRow {
        row,
        detail: format!("group `{text}` is neither treated nor control"),
    })
}

pub fn ingest_csv<R: Read>(input: R) -> Result<Vec<ReviewRecord>> {
    let mut rdr = reader(input);
    let header = Header::read(&mut rdr)?;
    let required = REQUIRED_COLUMNS
        .iter()
        .map(|c| header.require(c))
        .collect::<Result<Vec<_>>>()?;
    let team = header.optional("team");
    let period = header.optional("period");
    let group = header.optional("group");

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_number = i + 1;
        let row = row.map_err(|e| Error::BadRow {
            row: row_number,
            detail: e.to_string(),
        })?;
        let mut record = ReviewRecord::new(
            field(&row, required[0]),
            field(&row, required[1]),
            field(&row, required[2]),
            field(&row, required[3]),
            field(&row, required[4]),
        );
        record.team = optional_field(&row, team);
        record.period = optional_field(&row, period)
            .map(|p| parse_period(&p, row_number))
            .transpose()?;
        record.group = optional_field(&row, group)
            .map(|g| parse_group(&g, row_number))
            .transpose()?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Empty("input has no data rows".into()));
    }
    Ok(records)
}

pub fn ingest_csv_path(path: impl AsRef<Path>) -> Result<Vec<ReviewRecord>> {
    ingest_csv(open(path.as_ref())?)
}

/// Reads `product_id, classification` pairs.
pub fn read_ground_truth<R: Read>(input: R) -> Result<BTreeMap<String, String>> {
    let mut rdr = reader(input);
    let header = Header::read(&mut rdr)?;
    let product = header.require("product_id")?;
    let class = header.require("classification")?;
    let mut truth = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row_number = i + 1;
        let row = row.map_err(|e| Error::BadRow {
            row: row_number,
            detail: e.to_string(),
        })?;
        let id = field(&row, product);
        if truth.insert(id.clone(), field(&row, class)).is_some() {
            return Err(Error::BadRow {
                row: row_number,
                detail: format!("product `{id}` listed twice"),
            });
        }
    }
    if truth.is_empty() {
        return Err(Error::Empty("ground truth has no data rows".into()));
    }
    Ok(truth)
}

pub fn read_ground_truth_path(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    read_ground_truth(open(path.as_ref())?)
}

/// True when the header names an `outcome` column, i.e. the file is a
/// pre-aggregated DiD panel rather than review records.
pub fn is_outcome_panel<R: Read>(input: R) -> Result<bool> {
    let mut rdr = reader(input);
    Ok(Header::read(&mut rdr)?.has("outcome"))
}

/// Reads `group, period, outcome` rows.
pub fn read_outcome_panel<R: Read>(input: R) -> Result<Vec<DidObservation>> {
    let mut rdr = reader(input);
    let header = Header::read(&mut rdr)?;
    let group = header.require("group")?;
    let period = header.require("period")?;
    let outcome = header.require("outcome")?;
    let mut observations = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_number = i + 1;
        let row = row.map_err(|e| Error::BadRow {
            row: row_number,
            detail: e.to_string(),
        })?;
        let value = field(&row, outcome);
        observations.push(DidObservation {
            group: parse_group(&field(&row, group), row_number)?,
            period: parse_period(&field(&row, period), row_number)?,
            outcome: value.parse().map_err(|_| Error::BadRow {
                row: row_number,
                detail: format!("outcome `{value}` is not a number"),
            })?,
        });
    }
    if observations.is_empty() {
        return Err(Error::Empty("panel has no data rows".into()));
    }
    Ok(observations)
}

/// Writes records in input order. Optional columns appear only when some
/// record fills them.
pub fn write_records_csv<W: Write>(records: &[ReviewRecord], output: W) -> Result<()> {
    let with_team = records.iter().any(|r| r.team.is_some());
    let with_period = records.iter().any(|r| r.period.is_some());
    let with_group = records.iter().any(|r| r.group.is_some());
    let mut wtr = WriterBuilder::new().from_writer(output);
    let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
    if with_team {
        header.push("team");
    }
    if with_period {
        header.push("period");
    }
    if with_group {
        header.push("group");
    }
    wtr.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.product_id.clone(),
            r.reviewer_id.clone(),
            r.question_id.clone(),
            r.answer.clone(),
            r.final_classification.clone(),
        ];
        if with_team {
            row.push(r.team.clone().unwrap_or_default());
        }
        if with_period {
            row.push(r.period.map(|p| p.to_string()).unwrap_or_default());
        }
        if with_group {
            row.push(r.group.map(|g| g.as_str().to_string()).unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_ground_truth_csv<W: Write>(truth: &BTreeMap<String, String>, output: W) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(output);
    wtr.write_record(["product_id", "classification"])?;
    for (product, class) in truth {
        wtr.write_record([product, class])?;
    }
    wtr.flush()?;
    Ok(())
}
