//! Benchmark harness for RGBW remosaic algorithms: dataset generation and
//! ingestion, scoring runs, leaderboard reports and the `rgbwkit` CLI.

pub mod bench;
pub mod cli;
pub mod config;
pub mod generate;
pub mod ingest;
pub mod report;

pub use bench::{extrapolate_runtime, run_benchmark, score_predictions, BenchOptions, BenchmarkReport};
pub use generate::{generate_dataset, DatasetSpec};
pub use ingest::{ingest, DatasetManifest};
pub use report::{emit_report, ReportFormat};
