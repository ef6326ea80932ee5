//! Analytic and brute-force ground truths used to check the estimators.
//!
//! Built-in models supply their autocovariance sequence together with the
//! operator-norm bound `lambda` and `|f0|^2 = gamma_0`, giving the geometric
//! envelope `|gamma_h| <= |f0|^2 lambda^h` used for truncating infinite sums.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use libm::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::estimators::BatchSchedule;
use crate::samplers::{toy_chain, NormalSource, RngStream};

/// Default truncation tolerance for infinite autocovariance sums.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Autocovariance sequence of a stationary chain with a geometric envelope.
#[derive(Clone)]
pub struct AutocovModel {
    gamma: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    pub lambda_bound: f64,
    pub f0_norm2: f64,
}

impl fmt::Debug for AutocovModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AutocovModel")
            .field("lambda_bound", &self.lambda_bound)
            .field("f0_norm2", &self.f0_norm2)
            .finish_non_exhaustive()
    }
}

impl AutocovModel {
    pub fn new(
        gamma: impl Fn(usize) -> f64 + Send + Sync + 'static,
        lambda_bound: f64,
        f0_norm2: f64,
    ) -> Self {
        Self {
            gamma: Arc::new(gamma),
            lambda_bound,
            f0_norm2,
        }
    }

    /// The toy Gibbs chain with `f(x) = x`: `gamma_h = 2^-(1+h)`, `lambda = 1/2`.
    pub fn toy() -> Self {
        Self::new(toy_autocovariance, 0.5, 0.5)
    }

    /// Independent draws with variance `v`.
    pub fn white_noise(v: f64) -> Self {
        Self::new(move |h| if h == 0 { v } else { 0.0 }, 0.0, v)
    }

    /// Stationary AR(1) `x' = rho x + N(0, tau2)`.
    pub fn ar1(rho: f64, tau2: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::InvalidRho(rho));
        }
        let gamma0 = tau2 / (1.0 - rho * rho);
        Ok(Self::new(
            move |h| gamma0 * rho.powi(h as i32),
            rho.abs(),
            gamma0,
        ))
    }

    pub fn gamma(&self, h: usize) -> f64 {
        (self.gamma)(h)
    }

    /// Checks the envelope `|gamma_h| <= f0_norm2 lambda^h` for `h <= max_lag`.
    pub fn envelope_holds(&self, max_lag: usize) -> bool {
        (0..=max_lag).all(|h| {
            let bound = self.f0_norm2 * self.lambda_bound.powi(h as i32);
            self.gamma(h).abs() <= bound * (1.0 + 1e-12) + 1e-300
        })
    }

    // Smallest H with c * lambda^(H+1) / (1 - lambda) < tol.
    fn truncation_lag(&self, c: f64, tol: f64) -> Result<usize> {
        let lambda = self.lambda_bound;
        if !(lambda < 1.0) {
            return Err(Error::NonConvergent(lambda));
        }
        let mut h = 0usize;
        let mut power = lambda;
        while c * power / (1.0 - lambda) >= tol {
            h += 1;
            power *= lambda;
            if h > 10_000_000 {
                return Err(Error::NonConvergent(lambda));
            }
        }
        Ok(h)
    }
}

/// `2^-(1+h)`
pub fn toy_autocovariance(h: usize) -> f64 {
    0.5f64.powi(h.min(2000) as i32 + 1)
}

/// Closed-form MCMC variance of a stationary AR(1), `gamma_0 (1 + rho) / (1 - rho)`.
pub fn ar1_sigma2(rho: f64, tau2: f64) -> f64 {
    tau2 / (1.0 - rho * rho) * (1.0 + rho) / (1.0 - rho)
}

/// A truncated infinite series with a rigorous bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSum {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// `sigma^2 = gamma_0 + 2 sum_{k>=1} gamma_k`, truncated once the geometric
/// tail bound drops below `tol`.
pub fn sigma2_from_autocov(model: &AutocovModel, tol: f64) -> Result<TruncatedSum> {
    let c = 2.0 * model.f0_norm2;
    let h = model.truncation_lag(c, tol)?;
    let value = model.gamma(0) + 2.0 * (1..=h).map(|k| model.gamma(k)).sum::<f64>();
    let lambda = model.lambda_bound;
    Ok(TruncatedSum {
        value,
        tail_bound: c * lambda.powi(h as i32 + 1) / (1.0 - lambda),
        terms: h + 1,
    })
}

/// `b E(Ybar_1^2) = gamma_0 + (2/b) sum_{k=1}^{b-1} (b-k) gamma_k`.
pub fn analytic_batch_second_moment(model: &AutocovModel, b: usize) -> f64 {
    let b = b.max(1);
    let bf = b as f64;
    model.gamma(0)
        + 2.0 / bf * (1..b).map(|k| (bf - k as f64) * model.gamma(k)).sum::<f64>()
}

/// `(2 sqrt(a) / b) |f0|^2 lambda / (1 - lambda)^2`, an upper bound on
/// `|shifted_bias|` from `sum_k k lambda^k = lambda / (1 - lambda)^2`.
pub fn bias_upper_bound(a: usize, b: usize, lambda_bound: f64, f0_norm2: f64) -> f64 {
    let l = lambda_bound;
    2.0 * (a as f64).sqrt() / b as f64 * f0_norm2 * l / ((1.0 - l) * (1.0 - l))
}

/// Signed `sqrt(a) (b E(Ybar_1^2) - sigma^2)`, evaluated as
/// `-(2 sqrt(a) / b) (sum_{k<b} k gamma_k + b sum_{k>=b} gamma_k)`.
pub fn shifted_bias(model: &AutocovModel, schedule: &BatchSchedule, tol: f64) -> Result<f64> {
    let a = schedule.num_batches as f64;
    let b = schedule.batch_size;
    let bf = b as f64;
    let lead = 2.0 * a.sqrt() / bf;
    // Truncate the tail sum so that lead * b * |omitted| < tol.
    let h = model.truncation_lag(lead * bf * model.f0_norm2, tol)?.max(b);
    let head: f64 = (1..b).map(|k| k as f64 * model.gamma(k)).sum();
    let tail: f64 = (b..=h).map(|k| model.gamma(k)).sum();
    Ok(-lead * (head + bf * tail))
}

/// Monte Carlo average with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub batch_size: usize,
}

/// Produces a centered trace (`Y_i = f(X_i) - E f`) of the requested length.
pub trait ChainFactory: Sync {
    fn trace(&self, rng: &mut RngStream, len: usize) -> Vec<f64>;
}

impl<F> ChainFactory for F
where
    F: Fn(&mut RngStream, usize) -> Vec<f64> + Sync,
{
    fn trace(&self, rng: &mut RngStream, len: usize) -> Vec<f64> {
        self(rng, len)
    }
}

/// Toy chain started from its stationary law `N(0, 1/2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StationaryToy;

impl ChainFactory for StationaryToy {
    fn trace(&self, rng: &mut RngStream, len: usize) -> Vec<f64> {
        let init = 0.5f64.sqrt() * rng.standard_normal();
        toy_chain(len, 0, init, rng)
            .expect("toy chain parameters are valid")
            .into_values()
    }
}

/// Independent `N(0, v)` draws.
#[derive(Debug, Clone, Copy)]
pub struct WhiteNoise(pub f64);

impl ChainFactory for WhiteNoise {
    fn trace(&self, rng: &mut RngStream, len: usize) -> Vec<f64> {
        let sd = self.0.sqrt();
        (0..len).map(|_| sd * rng.standard_normal()).collect()
    }
}

fn replicate_average<C, G>(
    factory: &C,
    len: usize,
    replicates: usize,
    base_seed: u64,
    stat: G,
) -> (f64, f64)
where
    C: ChainFactory + ?Sized,
    G: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(base_seed, r);
            stat(&factory.trace(&mut rng, len))
        })
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn batch_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Monte Carlo estimate of `E(b^2 Ybar_1^4)` over single-batch traces of length `b`.
pub fn empirical_fourth_moment<C: ChainFactory + ?Sized>(
    factory: &C,
    b: usize,
    replicates: usize,
    base_seed: u64,
) -> MomentEstimate {
    let bf = b as f64;
    let (mean, std_error) = replicate_average(factory, b, replicates, base_seed, |t| {
        let m = batch_mean(t);
        bf * bf * m.powi(4)
    });
    MomentEstimate {
        mean,
        std_error,
        replicates,
        batch_size: b,
    }
}

/// Monte Carlo estimate of `E(b^2 Ybar_1^2 Ybar_2^2)` over two adjacent batches.
pub fn empirical_cross_moment<C: ChainFactory + ?Sized>(
    factory: &C,
    b: usize,
    replicates: usize,
    base_seed: u64,
) -> MomentEstimate {
    let bf = b as f64;
    let (mean, std_error) = replicate_average(factory, 2 * b, replicates, base_seed, |t| {
        let m1 = batch_mean(&t[..b]);
        let m2 = batch_mean(&t[b..]);
        bf * bf * m1 * m1 * m2 * m2
    });
    MomentEstimate {
        mean,
        std_error,
        replicates,
        batch_size: b,
    }
}

/// Outcome of comparing a Monte Carlo moment with its large-`b` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentLimitCheck {
    pub estimate: MomentEstimate,
    pub limit: f64,
    /// `|estimate(b) - estimate(b/2)|`, a proxy for the finite-`b` gap.
    pub slack: f64,
    /// `4 (std_error + slack)`
    pub tolerance: f64,
    pub passed: bool,
}

/// Accept when `|estimate - limit| <= 4 (SE + slack)`.
pub fn check_moment_limit(
    estimate: MomentEstimate,
    half_batch: MomentEstimate,
    limit: f64,
) -> MomentLimitCheck {
    let slack = (estimate.mean - half_batch.mean).abs();
    let tolerance = 4.0 * (estimate.std_error + slack);
    MomentLimitCheck {
        estimate,
        limit,
        slack,
        tolerance,
        passed: (estimate.mean - limit).abs() <= tolerance,
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// CDF of `X` where `1/X ~ Gamma(shape, rate)`: `Q(shape, rate / x)`.
pub fn inverse_gamma_cdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_ur(shape, rate / x)
    }
}

/// Inverse-Gaussian CDF with mean `mu` and shape `lambda`.
pub fn inverse_gaussian_cdf(x: f64, mu: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = (lambda / x).sqrt();
    normal_cdf(s * (x / mu - 1.0)) + (2.0 * lambda / mu).exp() * normal_cdf(-s * (x / mu + 1.0))
}

/// Solve `cdf(x) = p` on `[lo, hi]` by bisection.
pub fn quantile_by_bisection(cdf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Matrix inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("matrix is not square".into()));
    }
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        if aug[pivot][col].abs() < 1e-300 {
            return Err(Error::NumericalBreakdown("singular matrix".into()));
        }
        aug.swap(col, pivot);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                if f != 0.0 {
                    let pivot = aug[col].clone();
                    for (v, p) in aug[row].iter_mut().zip(&pivot) {
                        *v -= f * p;
                    }
                }
            }
        }
    }
    Ok(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}
