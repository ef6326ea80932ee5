use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::ConfigEcho;
use crate::error::Result;
use crate::estimators::{mcmcse, BmEstimate, ConfidenceInterval, ScheduleRule};
use crate::harness::{CellOutcome, CoverageRow, HistogramExport, ReplicationResult};

pub const TOOL_NAME: &str = "bmclt";

/// Reals in CSV output use 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// A single-trace estimate with its interval and derived summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub n: usize,
    pub rule: ScheduleRule,
    pub batch_size: usize,
    pub num_batches: usize,
    pub sigma2_hat: f64,
    pub modified_sigma2_hat: f64,
    pub chain_mean: f64,
    pub ci: ConfidenceInterval,
    pub mcmcse: f64,
    /// Absent when the variance estimate is zero.
    pub ess: Option<f64>,
}

impl EstimateRecord {
    pub fn new(est: &BmEstimate, ci: ConfidenceInterval, sample_variance: f64) -> Self {
        let a = est.schedule.num_batches as f64;
        let n = est.schedule.n;
        Self {
            n,
            rule: est.schedule.rule,
            batch_size: est.schedule.batch_size,
            num_batches: est.schedule.num_batches,
            sigma2_hat: est.sigma2_hat,
            modified_sigma2_hat: est.sigma2_hat * (a - 1.0) / a,
            chain_mean: est.chain_mean,
            ci,
            mcmcse: mcmcse(est),
            ess: (est.sigma2_hat > 0.0).then(|| n as f64 * sample_variance / est.sigma2_hat),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub replicate: usize,
    pub n: usize,
    pub rule: ScheduleRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_batches: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<ConfidenceInterval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything a CLI run produces, serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub tool: String,
    pub version: String,
    pub base_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<EstimateRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stream_ids: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coverage: Vec<CoverageRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histograms: Vec<HistogramExport>,
}

impl ResultDocument {
    pub fn new(base_seed: Option<u64>) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            base_seed,
            config: None,
            estimates: Vec::new(),
            stream_ids: Vec::new(),
            cells: Vec::new(),
            coverage: Vec::new(),
            histograms: Vec::new(),
        }
    }

    /// Document for an experiment. Cells carry raw intervals at `level`.
    pub fn from_experiment(
        echo: ConfigEcho,
        result: &ReplicationResult,
        level: f64,
        coverage: Vec<CoverageRow>,
        histograms: Vec<HistogramExport>,
    ) -> Result<Self> {
        let mut doc = Self::new(Some(result.base_seed));
        doc.config = Some(echo);
        doc.stream_ids = result.stream_ids.clone();
        doc.coverage = coverage;
        doc.histograms = histograms;
        for (replicate, n, rule, cell) in result.iter_cells() {
            let mut rec = CellRecord {
                replicate,
                n,
                rule,
                batch_size: None,
                num_batches: None,
                sigma2_hat: None,
                chain_mean: None,
                ci: None,
                error: None,
            };
            match cell {
                CellOutcome::Ok(est) => {
                    rec.batch_size = Some(est.schedule.batch_size);
                    rec.num_batches = Some(est.schedule.num_batches);
                    rec.sigma2_hat = Some(est.sigma2_hat);
                    rec.chain_mean = Some(est.chain_mean);
                    rec.ci = Some(crate::estimators::variance_ci(est, level)?);
                }
                CellOutcome::Failed { error } => rec.error = Some(error.clone()),
            }
            doc.cells.push(rec);
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::error::Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

pub fn write_trace_csv(mut out: impl Write, values: &[f64]) -> Result<()> {
    writeln!(out, "value")?;
    for v in values {
        writeln!(out, "{}", format_real(*v))?;
    }
    Ok(())
}

pub fn write_coverage_csv(mut out: impl Write, rows: &[CoverageRow]) -> Result<()> {
    writeln!(out, "n,rule,coverage,interval_count,failed_count")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            r.rule,
            format_real(r.coverage),
            r.interval_count,
            r.failed_count
        )?;
    }
    Ok(())
}

/// One row per bin, plus underflow/overflow rows with infinite edges.
pub fn write_histogram_csv(mut out: impl Write, h: &HistogramExport) -> Result<()> {
    writeln!(out, "left,right,count")?;
    let lo = h.bin_edges.first().copied().unwrap_or(f64::NEG_INFINITY);
    let hi = h.bin_edges.last().copied().unwrap_or(f64::INFINITY);
    writeln!(out, "-inf,{},{}", format_real(lo), h.underflow)?;
    for (i, c) in h.counts.iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            format_real(h.bin_edges[i]),
            format_real(h.bin_edges[i + 1]),
            c
        )?;
    }
    writeln!(out, "{},inf,{}", format_real(hi), h.overflow)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{batch_schedule, variance_ci};
    use proptest::prelude::*;

    fn record(sigma2_hat: f64, chain_mean: f64, var: f64) -> EstimateRecord {
        let est = BmEstimate {
            sigma2_hat,
            schedule: batch_schedule(1000, ScheduleRule::Pow(0.4)).unwrap(),
            chain_mean,
        };
        EstimateRecord::new(&est, variance_ci(&est, 0.95).unwrap(), var)
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
        assert_eq!(format_real(1.5), "1.5000000000000000e0");
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE] {
            assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
        }
    }

    proptest! {
        #[test]
        fn document_round_trip(
            s in 0.0f64..1e12,
            m in -1e300f64..1e300,
            v in 1e-300f64..1e300,
            seed in any::<u64>(),
        ) {
            let mut doc = ResultDocument::new(Some(seed));
            doc.estimates.push(record(s, m, v));
            let back = ResultDocument::from_json(&doc.to_json()).unwrap();
            prop_assert_eq!(back, doc);
        }
    }
}
