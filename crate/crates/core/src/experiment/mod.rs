//! End-to-end experiment: configuration, the query loop and reports.

mod config;
mod report;
mod runner;

pub use config::{Budget, DataSource, ExperimentConfig};
pub use report::{
    read_records, render_table, summarize, write_outputs, write_records, ConfigSummary, HomophilyRow, MeanStd, Phase,
    Record, Summary, CSV_HEADER,
};
pub use runner::{load_graph, run_experiment, run_seed};
