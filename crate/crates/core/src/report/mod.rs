//! CSV ingestion, the audit pipeline and report rendering.

mod audit;
mod ingest;
mod render;

pub use audit::{
    canonicalize, chi_square_by_question, default_bias_factors, error_extrapolation, round_significant, run_audit,
    team_comparison, AuditOptions, AuditReport, DatasetSummary, ErrorExtrapolation, Section, TeamComparison,
    TeamErrorSummary, SCHEMA_VERSION, SIGNIFICANT_DIGITS,
};
pub use ingest::{
    ingest_csv, ingest_csv_path, is_outcome_panel, read_ground_truth, read_ground_truth_path, read_outcome_panel,
    write_ground_truth_csv, write_records_csv, REQUIRED_COLUMNS,
};
pub(crate) use render::test_name;
pub use render::{emit_report, format_number, parse_report, render_text, to_json, ReportFormat};
