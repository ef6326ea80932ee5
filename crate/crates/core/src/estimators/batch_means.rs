use serde::{Deserialize, Serialize};

use super::schedule::BatchSchedule;
use super::trace::ChainTrace;
use crate::error::{Error, Result};

/// A batch means variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmEstimate {
    pub sigma2_hat: f64,
    pub schedule: BatchSchedule,
    /// Mean of the batch means, i.e. the average of the values actually used.
    pub chain_mean: f64,
}

/// Non-overlapping batch means estimate `b/(a-1) * sum_k (Zbar_k - Zbar)^2`.
///
/// Only the first `a * b` values enter the estimate; any trailing remainder is
/// ignored.
pub fn batch_means_estimate(trace: &ChainTrace, schedule: &BatchSchedule) -> Result<BmEstimate> {
    let needed = schedule.used();
    if trace.len() < needed {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            needed,
        });
    }
    let b = schedule.batch_size;
    let means: Vec<f64> = trace.values()[..needed]
        .chunks_exact(b)
        .map(|chunk| chunk.iter().sum::<f64>() / b as f64)
        .collect();
    estimate_from_batch_means(&means, schedule)
}

/// `(a-1)/a` times the batch means estimate.
pub fn modified_batch_means_estimate(
    trace: &ChainTrace,
    schedule: &BatchSchedule,
) -> Result<BmEstimate> {
    let est = batch_means_estimate(trace, schedule)?;
    let a = schedule.num_batches as f64;
    Ok(BmEstimate {
        sigma2_hat: est.sigma2_hat * (a - 1.0) / a,
        ..est
    })
}

/// Estimate from precomputed batch sums (one per batch, in order).
pub fn estimate_from_batch_sums(sums: &[f64], schedule: &BatchSchedule) -> Result<BmEstimate> {
    if sums.len() != schedule.num_batches {
        return Err(Error::TraceTooShort {
            len: sums.len() * schedule.batch_size,
            needed: schedule.used(),
        });
    }
    let b = schedule.batch_size as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / b).collect();
    estimate_from_batch_means(&means, schedule)
}

fn estimate_from_batch_means(means: &[f64], schedule: &BatchSchedule) -> Result<BmEstimate> {
    let a = means.len() as f64;
    let grand = means.iter().sum::<f64>() / a;
    let ss: f64 = means.iter().map(|m| (m - grand) * (m - grand)).sum();
    let sigma2_hat = schedule.batch_size as f64 / (a - 1.0) * ss;
    if !sigma2_hat.is_finite() || !grand.is_finite() {
        return Err(Error::NumericalBreakdown(
            "batch means estimate overflowed".into(),
        ));
    }
    Ok(BmEstimate {
        sigma2_hat,
        schedule: *schedule,
        chain_mean: grand,
    })
}

/// Streams values into per-batch sums for a fixed schedule.
///
/// Values past the last complete batch are counted but not summed.
#[derive(Debug, Clone)]
pub struct BatchAccumulator {
    schedule: BatchSchedule,
    sums: Vec<f64>,
    current: f64,
    in_batch: usize,
    seen: usize,
}

impl BatchAccumulator {
    pub fn new(schedule: BatchSchedule) -> Self {
        Self {
            schedule,
            sums: Vec::with_capacity(schedule.num_batches),
            current: 0.0,
            in_batch: 0,
            seen: 0,
        }
    }

    pub fn push(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFiniteInput { index: self.seen });
        }
        self.seen += 1;
        if self.sums.len() == self.schedule.num_batches {
            return Ok(());
        }
        self.current += value;
        self.in_batch += 1;
        if self.in_batch == self.schedule.batch_size {
            self.sums.push(self.current);
            self.current = 0.0;
            self.in_batch = 0;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<BmEstimate> {
        estimate_from_batch_sums(&self.sums, &self.schedule)
    }
}

/// Monte Carlo standard error of the chain mean, `sqrt(sigma2_hat / n)`.
pub fn mcmcse(est: &BmEstimate) -> f64 {
    (est.sigma2_hat / est.schedule.n as f64).sqrt()
}

/// Sample variance with divisor `n - 1`, computed in two passes.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Effective sample size `n * var(trace) / sigma2_hat`.
pub fn ess(trace: &ChainTrace, sigma2_hat: f64) -> Result<f64> {
    if !(sigma2_hat > 0.0) {
        return Err(Error::ZeroVarianceEstimate);
    }
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            needed: 2,
        });
    }
    Ok(trace.len() as f64 * sample_variance(trace.values()) / sigma2_hat)
}

/// Biased (divisor `n`) sample autocovariance at lag `h`.
pub fn sample_autocovariance(trace: &ChainTrace, h: usize) -> Result<f64> {
    let n = trace.len();
    if h >= n {
        return Err(Error::LagTooLarge { lag: h, len: n });
    }
    let v = trace.values();
    let mean = trace.mean();
    let s: f64 = v[..n - h]
        .iter()
        .zip(&v[h..])
        .map(|(x, y)| (x - mean) * (y - mean))
        .sum();
    Ok(s / n as f64)
}
