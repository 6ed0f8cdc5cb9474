use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{incomplete_beta_pair, tail_probability, Distribution, Tail, TailProbabilityQuery};

/// Bisection stops once the bracket is narrower than this.
const BISECTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    #[default]
    ClopperPearson,
    Wilson,
}

/// Confidence interval for an error rate `x / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialInterval {
    pub x: u64,
    pub n: u64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: CiMethod,
}

impl BinomialInterval {
    pub fn estimate(&self) -> f64 {
        self.x as f64 / self.n as f64
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `P(X ≤ k)` for `X ~ Binomial(n, p)`, via `I_{1−p}(n − k, k + 1)`.
/// Returned as `(cdf, 1 − cdf)`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> Result<(f64, f64)> {
    if k >= n {
        return Ok((1.0, 0.0));
    }
    incomplete_beta_pair(1.0 - p, p, (n - k) as f64, k as f64 + 1.0)
}

// Root of a monotone function on [lo, hi] whose sign changes across the bracket.
fn bisect(mut lo: f64, mut hi: f64, increasing: bool, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let above = f(mid)? > 0.0;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn binomial_ci(x: u64, n: u64, level: f64, method: CiMethod) -> Result<BinomialInterval> {
    if n == 0 || x > n {
        return Err(Error::Domain {
            function: "binomial_ci",
            detail: format!("need 0 <= x <= n and n >= 1, got x = {x}, n = {n}"),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain {
            function: "binomial_ci",
            detail: format!("confidence level must lie in (0, 1), got {level}"),
        });
    }
    let half_alpha = (1.0 - level) / 2.0;
    let p_hat = x as f64 / n as f64;
    let (lower, upper) = match method {
        CiMethod::ClopperPearson => {
            let lower = if x == 0 {
                0.0
            } else {
                // P(X ≥ x) = α/2, increasing in p
                bisect(0.0, p_hat, true, |p| Ok(binomial_cdf(x - 1, n, p)?.1 - half_alpha))?
            };
            let upper = if x == n {
                1.0
            } else {
                // P(X ≤ x) = α/2, decreasing in p
                bisect(p_hat, 1.0, false, |p| Ok(binomial_cdf(x, n, p)?.0 - half_alpha))?
            };
            (lower, upper)
        }
        CiMethod::Wilson => {
            let z = normal_upper_quantile(half_alpha)?;
            let nf = n as f64;
            let z2 = z * z;
            let denom = 1.0 + z2 / nf;
            let centre = (p_hat + z2 / (2.0 * nf)) / denom;
            let margin = z / denom * (p_hat * (1.0 - p_hat) / nf + z2 / (4.0 * nf * nf)).sqrt();
            let lower = if x == 0 {
                0.0
            } else {
                (centre - margin).clamp(0.0, p_hat)
            };
            let upper = if x == n {
                1.0
            } else {
                (centre + margin).clamp(p_hat, 1.0)
            };
            (lower, upper)
        }
    };
    Ok(BinomialInterval {
        x,
        n,
        level,
        lower,
        upper,
        method,
    })
}

// z with P(Z > z) = tail, by bisection on the normal tail.
fn normal_upper_quantile(tail: f64) -> Result<f64> {
    let upper = |z: f64| tail_probability(&TailProbabilityQuery::new(Distribution::StandardNormal, z, Tail::Upper));
    bisect(-40.0, 40.0, false, |z| Ok(upper(z)? - tail))
}
