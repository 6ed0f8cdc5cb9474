//! Reference implementations used as oracles. Each one avoids the
//! library's numerics: closed-form sums, brute-force enumeration, or
//! direct quadrature of a density.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Mean observed agreement by enumerating every ordered pair of distinct
/// raters within each subject.
pub fn pair_count_p_bar(counts: &[Vec<u32>]) -> f64 {
    let mut total = 0.0;
    for row in counts {
        let labels: Vec<usize> = row
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| std::iter::repeat_n(j, c as usize))
            .collect();
        let n = labels.len();
        let mut agree = 0u64;
        for a in 0..n {
            for b in 0..n {
                if a != b && labels[a] == labels[b] {
                    agree += 1;
                }
            }
        }
        total += agree as f64 / (n * (n - 1)) as f64;
    }
    total / counts.len() as f64
}

/// Fleiss kappa with p̄ from pair counting and p̄_e from tallying ratings.
pub fn kappa_oracle(counts: &[Vec<u32>]) -> f64 {
    let k = counts[0].len();
    let mut per_category = vec![0u64; k];
    let mut all = 0u64;
    for row in counts {
        for (j, &c) in row.iter().enumerate() {
            per_category[j] += c as u64;
            all += c as u64;
        }
    }
    let p_e: f64 = per_category.iter().map(|&c| (c as f64 / all as f64).powi(2)).sum();
    let p = pair_count_p_bar(counts);
    (p - p_e) / (1.0 - p_e)
}

/// Γ(k/2) for a positive integer k, from Γ(1/2) = √π and Γ(1) = 1.
pub fn gamma_half(k: u32) -> f64 {
    let (mut value, mut arg) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while arg < k as f64 / 2.0 {
        value *= arg;
        arg += 1.0;
    }
    value
}

pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, eps, 50)
}

/// Chi-square(k) upper tail by integrating the density under x = u².
pub fn chi_square_upper_oracle(k: u32, x: f64) -> f64 {
    let norm = 2f64.powf(k as f64 / 2.0) * gamma_half(k);
    let density = |u: f64| 2.0 * u.powi(k as i32 - 1) * (-u * u / 2.0).exp() / norm;
    1.0 - integrate(density, 0.0, x.sqrt(), 1e-15)
}

/// Student-t(ν) upper tail at t ≥ 0 by integrating the density.
pub fn student_t_upper_oracle(nu: u32, t: f64) -> f64 {
    let v = nu as f64;
    let c = gamma_half(nu + 1) / ((v * PI).sqrt() * gamma_half(nu));
    let density = |x: f64| c * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0);
    0.5 - integrate(density, 0.0, t, 1e-15)
}

/// I_x(a, b) for positive integers via the binomial identity
/// I_x(a, b) = Σ_{j=a}^{a+b−1} C(a+b−1, j) x^j (1−x)^{a+b−1−j}.
pub fn beta_oracle(x: f64, a: u64, b: u64) -> f64 {
    let m = a + b - 1;
    (a..=m)
        .map(|j| {
            let ln_c = ln_factorial(m) - ln_factorial(j) - ln_factorial(m - j);
            (ln_c + j as f64 * x.ln() + (m - j) as f64 * (1.0 - x).ln()).exp()
        })
        .sum()
}

/// Q(s, x) for a positive integer s: e^{−x} Σ_{k<s} x^k / k!.
pub fn gamma_q_oracle(s: u64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..s {
        term *= x / k as f64;
        sum += term;
    }
    (-x).exp() * sum
}

/// Standard normal upper tail from the Maclaurin series of erf.
pub fn normal_upper_oracle(z: f64) -> f64 {
    let x = z / 2f64.sqrt();
    let mut sum = 0.0;
    let mut power = x;
    let mut factorial = 1.0;
    for n in 0..200 {
        if n > 0 {
            factorial *= n as f64;
            power *= x * x;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * power / (factorial * (2 * n + 1) as f64);
    }
    0.5 - sum / PI.sqrt()
}

/// P(X ≤ k) for X ~ Binomial(n, p) by direct pmf summation.
pub fn binomial_cdf_oracle(k: u64, n: u64, p: f64) -> f64 {
    (0..=k.min(n))
        .map(|i| {
            let ln_c = ln_factorial(n) - ln_factorial(i) - ln_factorial(n - i);
            let ln_p = if i == 0 { 0.0 } else { i as f64 * p.ln() };
            let ln_q = if n - i == 0 {
                0.0
            } else {
                (n - i) as f64 * (1.0 - p).ln()
            };
            (ln_c + ln_p + ln_q).exp()
        })
        .sum()
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f changes sign on [lo, hi]; f(lo) > 0
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact-tail Clopper–Pearson interval by bisection on pmf sums.
pub fn clopper_pearson_oracle(x: u64, n: u64, level: f64) -> (f64, f64) {
    let tail = (1.0 - level) / 2.0;
    let lower = if x == 0 {
        0.0
    } else {
        // P(X ≥ x; p) rises with p
        bisect(|p| tail - (1.0 - binomial_cdf_oracle(x - 1, n, p)), 0.0, 1.0)
    };
    let upper = if x == n {
        1.0
    } else {
        // P(X ≤ x; p) falls with p
        bisect(|p| binomial_cdf_oracle(x, n, p) - tail, 0.0, 1.0)
    };
    (lower, upper)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Total sum of squares about the grand mean.
pub fn total_sum_squares(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let m = mean(&all);
    all.iter().map(|x| (x - m).powi(2)).sum()
}

/// Within-group SSE as Σ (n_i − 1) s_i².
pub fn sse_from_variances(groups: &[Vec<f64>]) -> f64 {
    groups
        .iter()
        .map(|g| {
            let m = mean(g);
            let s2 = g.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (g.len() - 1) as f64;
            (g.len() - 1) as f64 * s2
        })
        .sum()
}
