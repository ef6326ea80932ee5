use serde::{Deserialize, Serialize};

use super::batch_means::BmEstimate;
use super::quantile::normal_quantile;
use crate::error::{Error, Result};

/// Normal-approximation interval for the MCMC variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    /// `max(lower, 0)`
    pub truncated_lower: f64,
}

impl ConfidenceInterval {
    /// Whether `value` lies in the raw (untruncated) closed interval.
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `sigma2_hat +/- z * sqrt(2/a) * sigma2_hat`, from the limiting law
/// `sqrt(a) (sigma2_hat - sigma2) -> N(0, 2 sigma2^2)`.
pub fn variance_ci(est: &BmEstimate, level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let a = est.schedule.num_batches;
    if a < 2 {
        return Err(Error::ScheduleDegenerate {
            n: est.schedule.n,
            b: est.schedule.batch_size,
            a,
        });
    }
    let z = normal_quantile(0.5 * (1.0 + level));
    let half = z * (2.0 / a as f64).sqrt() * est.sigma2_hat;
    let lower = est.sigma2_hat - half;
    Ok(ConfidenceInterval {
        lower,
        upper: est.sigma2_hat + half,
        level,
        truncated_lower: lower.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{BatchSchedule, ScheduleRule};

    fn est(sigma2_hat: f64, a: usize) -> BmEstimate {
        BmEstimate {
            sigma2_hat,
            schedule: BatchSchedule {
                n: 10 * a,
                batch_size: 10,
                num_batches: a,
                rule: ScheduleRule::Fixed(10),
            },
            chain_mean: 0.0,
        }
    }

    #[test]
    fn documented_interval() {
        let ci = variance_ci(&est(1.5, 100), 0.95).unwrap();
        assert!((ci.lower - 1.084_228_852_695_096_7).abs() < 1e-12);
        assert!((ci.upper - 1.915_771_147_304_903_3).abs() < 1e-12);
        assert_eq!(ci.truncated_lower, ci.lower);
        assert!(ci.contains(1.5));
    }

    #[test]
    fn zero_estimate() {
        let ci = variance_ci(&est(0.0, 37), 0.9).unwrap();
        assert_eq!((ci.lower, ci.upper, ci.truncated_lower), (0.0, 0.0, 0.0));
    }

    #[test]
    fn width_scales_with_inverse_root_a() {
        let w100 = variance_ci(&est(2.0, 100), 0.95).unwrap().width();
        let w400 = variance_ci(&est(2.0, 400), 0.95).unwrap().width();
        assert!((w400 - w100 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn truncation_and_levels() {
        let ci = variance_ci(&est(1.0, 2), 0.99).unwrap();
        assert!(ci.lower < 0.0);
        assert_eq!(ci.truncated_lower, 0.0);
        assert!(ci.contains(1.0));
        for level in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                variance_ci(&est(1.0, 10), level),
                Err(Error::InvalidLevel(_))
            ));
        }
    }
}
