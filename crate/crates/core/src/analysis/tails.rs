use rand::Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TailError {
    #[error("success probabilities must lie in (0, 1]")]
    BadProbability,
    #[error("empty probability list")]
    Empty,
    #[error("lambda {0} outside the admissible range")]
    BadLambda(f64),
    #[error("need n >= 3 and k > 0")]
    BadThresholdArgs,
}

fn exponent(ps: &[f64], lambda: f64) -> Result<f64, TailError> {
    if ps.is_empty() {
        return Err(TailError::Empty);
    }
    if ps.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(TailError::BadProbability);
    }
    let mu: f64 = ps.iter().map(|p| 1.0 / p).sum();
    let pmin = ps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(pmin * mu * (lambda - 1.0 - lambda.ln()))
}

/// Upper bound on `P(X ≥ λμ)` for `X` a sum of independent geometric
/// variables with success probabilities `ps` and mean `μ`; `λ ≥ 1`.
pub fn geom_tail_upper(ps: &[f64], lambda: f64) -> Result<f64, TailError> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(TailError::BadLambda(lambda));
    }
    Ok((-exponent(ps, lambda)?).exp())
}

/// Upper bound on `P(X ≤ λμ)`; `0 < λ ≤ 1`.
pub fn geom_tail_lower(ps: &[f64], lambda: f64) -> Result<f64, TailError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(TailError::BadLambda(lambda));
    }
    Ok((-exponent(ps, lambda)?).exp())
}

/// The `λ ≥ 1` with `λ − 1 − ln λ = k`, by bisection to `1e-10`.
pub fn solve_lambda(k: f64) -> f64 {
    let g = |l: f64| l - 1.0 - l.ln() - k;
    let mut lo = 1.0;
    let mut hi = 2.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `l` with `P(X ≥ l·n ln n) ≤ n^{-k}` for `X = Σ Geom(i/n)`: `l = 2λ`.
pub fn harmonic_tail_threshold(n: u64, k: f64) -> Result<f64, TailError> {
    if n < 3 || k.is_nan() || k <= 0.0 {
        return Err(TailError::BadThresholdArgs);
    }
    Ok(2.0 * solve_lambda(k))
}

/// `p_i = i/n` for `i = 1..=n`.
pub fn coupon_probs(n: u64) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / n as f64).collect()
}

/// One sample of `Σ Geom(p_i)`, each counting trials up to and including
/// the first success.
pub fn sample_geom_sum<R: Rng + ?Sized>(ps: &[f64], rng: &mut R) -> u64 {
    ps.iter()
        .map(|&p| {
            if p >= 1.0 {
                1
            } else {
                Geometric::new(p).expect("p in (0, 1)").sample(rng) + 1
            }
        })
        .sum()
}
