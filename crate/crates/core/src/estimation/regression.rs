use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A diagonal entry of R below this fraction of its column norm marks a
/// linearly dependent column.
const RANK_TOLERANCE: f64 = 1e-10;
/// Logistic coefficients beyond this max-norm are treated as separation.
pub const SEPARATION_BOUND: f64 = 30.0;
pub const DEFAULT_LOGISTIC_MAX_ITER: usize = 100;
pub const DEFAULT_LOGISTIC_TOL: f64 = 1e-10;

/// Covariate rows without the intercept column, plus column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Design {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(i) = rows.iter().position(|r| r.len() != names.len()) {
            return Err(Error::InvalidSample(format!(
                "design row {i} has {} values, expected {}",
                rows[i].len(),
                names.len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("design contains a non-finite value".into()));
        }
        Ok(Self { names, rows })
    }

    /// Columns named `x1`, `x2`, ...
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        Self::new((1..=p).map(|j| format!("x{j}")).collect(), rows)
    }

    /// An empty design: the model has only an intercept.
    pub fn intercept_only(n: usize) -> Self {
        Self {
            names: Vec::new(),
            rows: vec![Vec::new(); n],
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.names.len()
    }

    /// Row-major matrix with a leading column of ones.
    pub fn with_intercept(&self) -> DMatrix<f64> {
        let p = self.n_columns() + 1;
        DMatrix::from_fn(
            self.rows.len(),
            p,
            |i, j| if j == 0 { 1.0 } else { self.rows[i][j - 1] },
        )
    }

    fn column_name(&self, j: usize) -> String {
        if j == 0 {
            "intercept".into()
        } else {
            self.names[j - 1].clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ols,
    Logistic,
}

/// Fitted coefficients, intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub model: ModelKind,
    pub design_column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Absent for OLS when there are no residual degrees of freedom.
    pub standard_errors: Option<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub n_observations: usize,
    pub residual_sum_squares: Option<f64>,
    pub r_squared: Option<f64>,
    pub log_likelihood: Option<f64>,
}

impl RegressionFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    /// Coefficient of a named design column.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        let j = self.design_column_names.iter().position(|n| n == name)?;
        Some(self.coefficients[j + 1])
    }

    pub fn standard_error(&self, name: &str) -> Option<f64> {
        let j = self.design_column_names.iter().position(|n| n == name)?;
        self.standard_errors.as_ref().map(|se| se[j + 1])
    }

    /// Linear predictor for one covariate row (without intercept).
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        self.coefficients[0] + row.iter().zip(&self.coefficients[1..]).map(|(x, b)| x * b).sum::<f64>()
    }
}

struct LeastSquares {
    beta: DVector<f64>,
    /// (XᵀX)⁻¹ of the (weighted) system.
    inverse_gram: DMatrix<f64>,
}

fn check_rank(x: &DMatrix<f64>, design: &Design) -> Result<()> {
    let r = x.clone().qr().r();
    for j in 0..x.ncols() {
        let norm = x.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * norm {
            return Err(Error::RankDeficient {
                index: j,
                name: design.column_name(j),
            });
        }
    }
    Ok(())
}

// Householder QR solve of min ||x b − y||.
fn least_squares(x: DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
    let p = x.ncols();
    let qr = x.qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * y;
    let beta = r.solve_upper_triangular(&qty).expect("full-rank R");
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(p, p)).expect("full-rank R");
    let inverse_gram = &r_inv * r_inv.transpose();
    LeastSquares { beta, inverse_gram }
}

fn check_shape(design: &Design, n_response: usize) -> Result<()> {
    if design.n_rows() != n_response {
        return Err(Error::InvalidSample(format!(
            "design has {} rows but response has {}",
            design.n_rows(),
            n_response
        )));
    }
    if design.n_rows() < design.n_columns() + 1 {
        return Err(Error::InvalidSample(format!(
            "need at least {} rows for {} columns plus intercept, got {}",
            design.n_columns() + 1,
            design.n_columns(),
            design.n_rows()
        )));
    }
    Ok(())
}

/// Ordinary least squares with an implicit intercept.
pub fn ols_fit(design: &Design, response: &[f64]) -> Result<RegressionFit> {
    check_shape(design, response.len())?;
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSample("response contains a non-finite value".into()));
    }
    let x = design.with_intercept();
    check_rank(&x, design)?;
    let (n, p) = (x.nrows(), x.ncols());
    let y = DVector::from_column_slice(response);
    let fit = least_squares(x.clone(), &y);
    let residuals = &y - &x * &fit.beta;
    let rss = residuals.norm_squared();
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let standard_errors = (n > p).then(|| {
        let sigma2 = rss / (n - p) as f64;
        (0..p).map(|j| (sigma2 * fit.inverse_gram[(j, j)]).sqrt()).collect()
    });
    Ok(RegressionFit {
        model: ModelKind::Ols,
        design_column_names: design.names().to_vec(),
        coefficients: fit.beta.iter().copied().collect(),
        standard_errors,
        converged: true,
        iterations: 1,
        n_observations: n,
        residual_sum_squares: Some(rss),
        r_squared: (tss > 0.0).then(|| 1.0 - rss / tss),
        log_likelihood: None,
    })
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

// ln(1 + e^eta) without overflow
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

/// Logistic regression by iteratively reweighted least squares.
///
/// Converges when the largest coefficient change falls below `tol`. A
/// coefficient max-norm above [`SEPARATION_BOUND`] is reported as separation,
/// as is an unconverged fit whose linear predictor already sorts every
/// label onto its own side of zero (the MLE is then infinite).
pub fn logistic_fit(design: &Design, labels: &[u8], max_iter: usize, tol: f64) -> Result<RegressionFit> {
    check_shape(design, labels.len())?;
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(Error::InvalidSample(format!(
            "label {i} is {}, expected 0 or 1",
            labels[i]
        )));
    }
    let x = design.with_intercept();
    check_rank(&x, design)?;
    let (n, p) = (x.nrows(), x.ncols());
    let y = DVector::from_iterator(n, labels.iter().map(|&l| l as f64));

    let mut beta = DVector::zeros(p);
    let mut converged = false;
    let mut iterations = 0;
    let mut last: Option<LeastSquares> = None;
    while iterations < max_iter {
        iterations += 1;
        let eta = &x * &beta;
        let mut wx = x.clone();
        let mut wz = DVector::zeros(n);
        for i in 0..n {
            let mu = sigmoid(eta[i]);
            let w = (mu * (1.0 - mu)).max(1e-300);
            let sw = w.sqrt();
            wx.row_mut(i).scale_mut(sw);
            wz[i] = sw * (eta[i] + (y[i] - mu) / w);
        }
        let step = least_squares(wx, &wz);
        let change = (&step.beta - &beta).amax();
        beta = step.beta.clone();
        last = Some(step);
        let norm = beta.amax();
        if !norm.is_finite() || norm > SEPARATION_BOUND {
            return Err(Error::Separation {
                norm,
                bound: SEPARATION_BOUND,
            });
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged && separates(&(&x * &beta), &y) {
        return Err(Error::Separation {
            norm: beta.amax(),
            bound: SEPARATION_BOUND,
        });
    }

    // standard errors from the information matrix at the final coefficients
    let eta = &x * &beta;
    let mut wx = x.clone();
    let mut log_likelihood = 0.0;
    for i in 0..n {
        let mu = sigmoid(eta[i]);
        wx.row_mut(i).scale_mut((mu * (1.0 - mu)).sqrt());
        log_likelihood += y[i] * eta[i] - softplus(eta[i]);
    }
    let information = if wx.iter().all(|v| v.is_finite()) {
        least_squares(wx, &DVector::zeros(n)).inverse_gram
    } else {
        last.expect("at least one iteration").inverse_gram
    };
    let standard_errors = (0..p).map(|j| information[(j, j)].sqrt()).collect();

    Ok(RegressionFit {
        model: ModelKind::Logistic,
        design_column_names: design.names().to_vec(),
        coefficients: beta.iter().copied().collect(),
        standard_errors: Some(standard_errors),
        converged,
        iterations,
        n_observations: n,
        residual_sum_squares: None,
        r_squared: None,
        log_likelihood: Some(log_likelihood),
    })
}

// Xβ ≠ 0 with η ≥ 0 on every positive and η ≤ 0 on every negative label
fn separates(eta: &DVector<f64>, y: &DVector<f64>) -> bool {
    eta.iter().any(|&e| e != 0.0)
        && eta
            .iter()
            .zip(y.iter())
            .all(|(&e, &l)| if l > 0.5 { e >= 0.0 } else { e <= 0.0 })
}

/// Gradient of the logistic log-likelihood, `Xᵀ (y − μ)`, intercept first.
pub fn logistic_gradient(design: &Design, labels: &[u8], coefficients: &[f64]) -> Vec<f64> {
    let x = design.with_intercept();
    let beta = DVector::from_column_slice(coefficients);
    let eta = &x * beta;
    let resid = DVector::from_iterator(
        labels.len(),
        labels.iter().zip(eta.iter()).map(|(&l, &e)| l as f64 - sigmoid(e)),
    );
    (x.transpose() * resid).iter().copied().collect()
}

pub fn predict_probability(fit: &RegressionFit, row: &[f64]) -> f64 {
    sigmoid(fit.linear_predictor(row))
}
