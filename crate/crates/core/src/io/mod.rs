//! File formats: trace and regression CSVs, experiment configs, result documents.

mod config;
mod document;
mod lasso_csv;
mod trace;

pub use config::{load_config, parse_config, ConfigEcho, LoadedConfig, OutputOptions};
pub use document::{
    format_real, write_coverage_csv, write_histogram_csv, write_trace_csv, CellRecord,
    EstimateRecord, ResultDocument, TOOL_NAME,
};
pub use lasso_csv::{parse_matrix, read_lasso_csv};
pub use trace::{parse_trace, read_trace_csv, stream_estimate};
