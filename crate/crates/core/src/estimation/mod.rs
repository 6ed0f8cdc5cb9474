//! Error-rate extrapolation and bias-factor modelling.

mod bias;
mod binomial;
mod regression;

pub use bias::{bias_factor_report, BiasFactorReport, Factor, FactorCoefficient, ModelOutcome};
pub use binomial::{binomial_cdf, binomial_ci, BinomialInterval, CiMethod};
pub use regression::{
    logistic_fit, logistic_gradient, ols_fit, predict_probability, Design, ModelKind, RegressionFit,
    DEFAULT_LOGISTIC_MAX_ITER, DEFAULT_LOGISTIC_TOL, SEPARATION_BOUND,
};
