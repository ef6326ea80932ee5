//! Replicated experiments: many independent chains, batch means estimates at
//! several checkpoints and batch rules, coverage tables and histogram data.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    batch_means_estimate, batch_schedule, variance_ci, BmEstimate, ChainTrace, ScheduleRule,
};
use crate::oracles::{ar1_sigma2, normal_cdf, sigma2_from_autocov, AutocovModel, DEFAULT_TAIL_TOLERANCE};
use crate::samplers::{
    ar1_chain, toy_chain, LassoChain, LassoData, LassoModes, LassoState, NormalSource, RngStream,
};

/// Chain to replicate. Every model reports a scalar functional per iteration:
/// the state itself for the autoregressive chains, the log-likelihood for the lasso.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Toy,
    Ar1 { rho: f64, tau2: f64 },
    Lasso {
        data: Arc<LassoData>,
        modes: LassoModes,
    },
}

impl ModelSpec {
    /// Known MCMC variance of the reported functional, if any.
    pub fn truth(&self) -> Option<f64> {
        match self {
            ModelSpec::Toy => sigma2_from_autocov(&AutocovModel::toy(), DEFAULT_TAIL_TOLERANCE)
                .ok()
                .map(|s| s.value),
            ModelSpec::Ar1 { rho, tau2 } => Some(ar1_sigma2(*rho, *tau2)),
            ModelSpec::Lasso { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Toy => "toy",
            ModelSpec::Ar1 { .. } => "ar1",
            ModelSpec::Lasso { .. } => "lasso",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub replicates: usize,
    pub burn_in: usize,
    /// Ascending chain lengths (after burn-in) at which to estimate.
    pub checkpoints: Vec<usize>,
    pub rules: Vec<ScheduleRule>,
    pub level: f64,
    pub base_seed: u64,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.replicates == 0 {
            return invalid("replicates must be positive".into());
        }
        if self.workers == 0 {
            return invalid("workers must be positive".into());
        }
        if self.checkpoints.is_empty() {
            return invalid("at least one checkpoint is required".into());
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("checkpoints must be strictly ascending".into());
        }
        if self.rules.is_empty() {
            return invalid("at least one batch rule is required".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return invalid(format!("level must lie in (0, 1), got {}", self.level));
        }
        for &n in &self.checkpoints {
            for &rule in &self.rules {
                batch_schedule(n, rule)
                    .map_err(|e| Error::ConfigInvalid(format!("checkpoint {n}, rule {rule}: {e}")))?;
            }
        }
        if let ModelSpec::Ar1 { rho, tau2 } = self.model {
            if !(rho.abs() < 1.0) {
                return Err(Error::InvalidRho(rho));
            }
            if !(tau2 > 0.0 && tau2.is_finite()) {
                return invalid(format!("tau2 must be > 0, got {tau2}"));
            }
        }
        Ok(())
    }

    pub fn max_checkpoint(&self) -> usize {
        *self.checkpoints.last().unwrap_or(&0)
    }

    /// Iterations each replicate runs, burn-in included.
    pub fn total_iterations(&self) -> usize {
        self.burn_in + self.max_checkpoint()
    }
}

/// Result of one (replicate, checkpoint, rule) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CellOutcome {
    Ok(BmEstimate),
    Failed { error: String },
}

#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub checkpoints: Vec<usize>,
    pub rules: Vec<ScheduleRule>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Stream id used by each replicate, in replicate order.
    pub stream_ids: Vec<u64>,
    cells: Vec<CellOutcome>,
    pub elapsed: Duration,
}

impl ReplicationResult {
    pub fn cell(&self, replicate: usize, checkpoint: usize, rule: usize) -> &CellOutcome {
        let per_rep = self.checkpoints.len() * self.rules.len();
        &self.cells[replicate * per_rep + checkpoint * self.rules.len() + rule]
    }

    fn index_of(&self, n: usize, rule: ScheduleRule) -> Result<(usize, usize)> {
        let c = self
            .checkpoints
            .iter()
            .position(|&x| x == n)
            .ok_or_else(|| Error::MissingCells(format!("no checkpoint n = {n}")))?;
        let k = self
            .rules
            .iter()
            .position(|&r| r == rule)
            .ok_or_else(|| Error::MissingCells(format!("no rule {rule}")))?;
        Ok((c, k))
    }

    /// Successful estimates for `(n, rule)` in replicate order, and the failure count.
    pub fn estimates(&self, n: usize, rule: ScheduleRule) -> Result<(Vec<BmEstimate>, usize)> {
        let (c, k) = self.index_of(n, rule)?;
        let mut ok = Vec::with_capacity(self.replicates);
        let mut failed = 0;
        for r in 0..self.replicates {
            match self.cell(r, c, k) {
                CellOutcome::Ok(est) => ok.push(*est),
                CellOutcome::Failed { .. } => failed += 1,
            }
        }
        Ok((ok, failed))
    }

    /// All cells as `(replicate, n, rule, outcome)` in storage order.
    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize, ScheduleRule, &CellOutcome)> {
        let nc = self.checkpoints.len();
        let nk = self.rules.len();
        self.cells.iter().enumerate().map(move |(i, cell)| {
            let r = i / (nc * nk);
            let c = (i / nk) % nc;
            let k = i % nk;
            (r, self.checkpoints[c], self.rules[k], cell)
        })
    }
}

fn replicate_trace(config: &ExperimentConfig, rng: &mut RngStream) -> (Vec<f64>, Option<Error>) {
    let n = config.max_checkpoint();
    let trace = match &config.model {
        ModelSpec::Toy => {
            let init = rng.standard_normal();
            toy_chain(n, config.burn_in, init, rng)
        }
        ModelSpec::Ar1 { rho, tau2 } => {
            let init = rng.standard_normal();
            ar1_chain(*rho, *tau2, n, config.burn_in, init, rng)
        }
        ModelSpec::Lasso { data, modes } => {
            let init = LassoState::initial(data.p(), rng);
            return match LassoChain::new(data, *modes, init) {
                Ok(mut chain) => chain.run(n, config.burn_in, rng),
                Err(e) => (Vec::new(), Some(e)),
            };
        }
    };
    match trace {
        Ok(t) => (t.into_values(), None),
        Err(e) => (Vec::new(), Some(e)),
    }
}

fn run_replicate(config: &ExperimentConfig, replicate: u64) -> Vec<CellOutcome> {
    let mut rng = RngStream::new(config.base_seed, replicate);
    let (values, failure) = replicate_trace(config, &mut rng);
    cells_from_trace(values, failure.as_ref(), &config.checkpoints, &config.rules)
}

// Checkpoints beyond the end of a chain that stopped early become failed cells.
fn cells_from_trace(
    values: Vec<f64>,
    failure: Option<&Error>,
    checkpoints: &[usize],
    rules: &[ScheduleRule],
) -> Vec<CellOutcome> {
    let available = values.len();
    let trace = ChainTrace::new(values).ok();
    let mut out = Vec::with_capacity(checkpoints.len() * rules.len());
    for &n in checkpoints {
        for &rule in rules {
            let outcome = match &trace {
                Some(t) if available >= n => batch_schedule(n, rule)
                    .and_then(|s| batch_means_estimate(t, &s))
                    .map(CellOutcome::Ok)
                    .unwrap_or_else(|e| CellOutcome::Failed {
                        error: e.to_string(),
                    }),
                _ => CellOutcome::Failed {
                    error: match failure {
                        Some(e) => format!("chain stopped after {available} iterations: {e}"),
                        None => format!("chain produced only {available} values"),
                    },
                },
            };
            out.push(outcome);
        }
    }
    out
}

/// Run every replicate on its own stream `(base_seed, replicate)`.
///
/// Replicates are spread over `workers` threads; results are gathered in
/// replicate order, so the output does not depend on the worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReplicationResult> {
    config.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    let per_replicate: Vec<Vec<CellOutcome>> = pool.install(|| {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| run_replicate(config, r))
            .collect()
    });
    Ok(ReplicationResult {
        checkpoints: config.checkpoints.clone(),
        rules: config.rules.clone(),
        replicates: config.replicates,
        base_seed: config.base_seed,
        stream_ids: (0..config.replicates as u64).collect(),
        cells: per_replicate.into_iter().flatten().collect(),
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n: usize,
    pub rule: ScheduleRule,
    pub coverage: f64,
    /// Intervals evaluated (successful cells).
    pub interval_count: usize,
    /// Cells excluded because the chain or estimate failed.
    pub failed_count: usize,
}

/// Fraction of raw (untruncated) intervals containing `truth`, per `(n, rule)`.
pub fn compute_coverage(
    result: &ReplicationResult,
    truth: f64,
    level: f64,
) -> Result<Vec<CoverageRow>> {
    if !truth.is_finite() {
        return Err(Error::InvalidParameter(format!("truth {truth} is not finite")));
    }
    let mut rows = Vec::new();
    for &n in &result.checkpoints {
        for &rule in &result.rules {
            let (ests, failed_count) = result.estimates(n, rule)?;
            if ests.is_empty() {
                return Err(Error::MissingCells(format!(
                    "every cell failed at n = {n}, rule {rule}"
                )));
            }
            let mut hits = 0usize;
            for est in &ests {
                if variance_ci(est, level)?.contains(truth) {
                    hits += 1;
                }
            }
            rows.push(CoverageRow {
                n,
                rule,
                coverage: hits as f64 / ests.len() as f64,
                interval_count: ests.len(),
                failed_count,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StandardizationMode {
    /// Center and scale with the known MCMC variance.
    ExactTruth(f64),
    /// Center and scale with the replicate-average estimate at the largest checkpoint.
    Approximate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationRecord {
    pub mode: String,
    pub n: usize,
    pub rule: ScheduleRule,
    pub num_batches: usize,
    /// Center subtracted from each estimate.
    pub mean: f64,
    /// Divisor, `sigma2 * sqrt(2 / a_n)`.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub values: Vec<f64>,
    pub record: StandardizationRecord,
}

/// `(sigma2_hat_r - center) / (sigma2 * sqrt(2 / a_n))` for every successful replicate.
pub fn standardize(
    result: &ReplicationResult,
    n: usize,
    rule: ScheduleRule,
    mode: StandardizationMode,
) -> Result<Standardized> {
    let (ests, _) = result.estimates(n, rule)?;
    if ests.is_empty() {
        return Err(Error::MissingCells(format!("no estimates at n = {n}, rule {rule}")));
    }
    let (sigma2, mode_name) = match mode {
        StandardizationMode::ExactTruth(s) => (s, "exact-truth"),
        StandardizationMode::Approximate => {
            let largest = result.max_checkpoint();
            let (top, _) = result.estimates(largest, rule)?;
            if top.is_empty() {
                return Err(Error::MissingCells(format!(
                    "no estimates at n = {largest}, rule {rule}"
                )));
            }
            (
                top.iter().map(|e| e.sigma2_hat).sum::<f64>() / top.len() as f64,
                "approximate",
            )
        }
    };
    let a = ests[0].schedule.num_batches;
    let sd = sigma2 * (2.0 / a as f64).sqrt();
    Ok(Standardized {
        values: ests.iter().map(|e| (e.sigma2_hat - sigma2) / sd).collect(),
        record: StandardizationRecord {
            mode: mode_name.into(),
            n,
            rule,
            num_batches: a,
            mean: sigma2,
            sd,
        },
    })
}

impl ReplicationResult {
    pub fn max_checkpoint(&self) -> usize {
        *self.checkpoints.last().unwrap_or(&0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramExport {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub non_finite: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<StandardizationRecord>,
}

impl HistogramExport {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Equal-width bins over `[lo, hi]`; each bin is `[left, right)` except the
/// last, which also includes `hi`.
pub fn histogram_export(values: &[f64], bins: usize, range: (f64, f64)) -> Result<HistogramExport> {
    let (lo, hi) = range;
    if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidRange { lo, hi, bins });
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    edges[bins] = hi;
    let mut h = HistogramExport {
        bin_edges: edges,
        counts: vec![0; bins],
        underflow: 0,
        overflow: 0,
        non_finite: 0,
        standardization: None,
    };
    for &v in values {
        if !v.is_finite() {
            h.non_finite += 1;
        } else if v < lo {
            h.underflow += 1;
        } else if v > hi {
            h.overflow += 1;
        } else {
            let mut i = (((v - lo) / width) as usize).min(bins - 1);
            while i > 0 && v < h.bin_edges[i] {
                i -= 1;
            }
            while i + 1 < bins && v >= h.bin_edges[i + 1] {
                i += 1;
            }
            h.counts[i] += 1;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalitySummary {
    pub count: usize,
    pub mean: f64,
    /// Sample variance (divisor `count - 1`).
    pub variance: f64,
    /// Kolmogorov-Smirnov distance to the standard normal.
    pub ks_distance: f64,
}

pub fn ks_distance_standard_normal(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub fn normality_summary(values: &[f64]) -> NormalitySummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    NormalitySummary {
        count: values.len(),
        mean,
        variance,
        ks_distance: ks_distance_standard_normal(values),
    }
}
