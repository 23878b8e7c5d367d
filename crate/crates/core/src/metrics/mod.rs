//! De novo generation metrics over samples of generated strings.

mod fingerprint;
mod report;
pub(crate) use report::csv_field;

pub use fingerprint::{environment_ids, fingerprint, tanimoto, Fingerprint, FINGERPRINT_BITS, FINGERPRINT_RADIUS};
pub use report::{
    diversity, metric_report, metrics_csv, novelty, sweep_reports, uniqueness, validity, GenerationSample, GroupBy,
    MetricCounts, MetricError, MetricReport, ReferenceSet, SampleLine, SweepRow, DIVERSITY_EXACT_LIMIT,
};
