//! Config-driven studies, JSON reports, CSV series and consolidated summaries.

mod config;
mod report;
mod run;

pub use config::{
    ExperimentConfig, GeneratorConfig, GridConfig, GridKind, LawConfig, Ladders, Params, StudyKind, Tolerances,
};
pub use report::{read_report, summarize, write_outputs, Quantity, Series, StudyReport, Summary, SummaryRow, Verdict};
pub use run::{generate_fields, run_study, run_to_json};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Bundled example configuration for each study kind; small enough to run in seconds.
pub fn example_toml(kind: StudyKind) -> &'static str {
    match kind {
        StudyKind::Rates => include_str!("../../configs/rates.toml"),
        StudyKind::Vacuum => include_str!("../../configs/vacuum.toml"),
        StudyKind::Counterexample => include_str!("../../configs/counterexample.toml"),
        StudyKind::Budget => include_str!("../../configs/budget.toml"),
        StudyKind::Qns => include_str!("../../configs/qns.toml"),
        StudyKind::Boundary => include_str!("../../configs/boundary.toml"),
        StudyKind::Ns => include_str!("../../configs/ns.toml"),
    }
}

pub fn example_config(kind: StudyKind) -> ExperimentConfig {
    ExperimentConfig::from_toml(example_toml(kind)).expect("bundled configs are valid")
}
