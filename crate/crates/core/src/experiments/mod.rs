//! Counting, equidistribution and well-roundedness experiments.
//!
//! Every experiment returns a report that renders as a CSV table, a JSON summary
//! `{"schema": 1, "experiment", "params", "verdicts"}` and a long-format CSV
//! `variable,T_or_m,value` for plotting.

pub mod counting;
pub mod equidist;
pub mod regions;
pub mod wellround;

use serde::{Deserialize, Serialize};

pub use counting::{counting_experiment, CountingReport};
pub use equidist::{denominator_experiment, equidist_experiment, DiscrepancyReport, EquidistParams};
pub use regions::Region;
pub use wellround::{well_rounded_check, BallFamily, Kappa, WellRoundedReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: u32,
    pub experiment: String,
    pub params: serde_json::Value,
    pub verdicts: serde_json::Value,
}

impl Summary {
    pub fn new(experiment: &str, params: serde_json::Value, verdicts: serde_json::Value) -> Self {
        Summary { schema: SCHEMA_VERSION, experiment: experiment.to_string(), params, verdicts }
    }
}

/// Shortest round-trip decimal form, so equal values always print identically.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn long_csv(rows: &[(&str, f64, f64)]) -> String {
    let mut out = String::from("variable,T_or_m,value\n");
    for (name, x, v) in rows {
        out.push_str(&format!("{name},{},{}\n", fmt_f64(*x), fmt_f64(*v)));
    }
    out
}
