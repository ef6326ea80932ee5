//! Batch means estimation of the asymptotic variance of ergodic averages.
//!
//! Everything here is a pure function of its inputs.

mod batch_means;
mod interval;
mod quantile;
mod schedule;
mod trace;

pub use batch_means::{
    batch_means_estimate, estimate_from_batch_sums, ess, mcmcse, modified_batch_means_estimate,
    sample_autocovariance, sample_variance, BatchAccumulator, BmEstimate,
};
pub use interval::{variance_ci, ConfidenceInterval};
pub use quantile::normal_quantile;
pub use schedule::{batch_schedule, BatchSchedule, ScheduleRule};
pub use trace::ChainTrace;
