//! Checkers for the conditions under which each learned initializer helps.

mod arg_init;
mod ordering;
mod request;
mod stats;
mod val_init;
mod vanilla;

use serde::{Deserialize, Serialize};

pub use arg_init::{check_prop6, unit_ball_volume, ArgNoise, Prop6Config, Prop6Report};
pub use ordering::{
    check_prop1, check_prop2, estimate_gamma, DiscreteLandscape, OrderingModel, Prop1Report, Prop2Report, Selection,
};
pub use request::{run_checker, Checker, CheckerOutcome, OrderingSpec};
pub use stats::{fisher_z_interval, mean_ci, mean_se, normal_quantile, paired_ci, pearson, Interval};
pub use val_init::{check_prop5, selection_correlation, NoisyPredictor, Prop5Report, SelectionCorrelation};
pub use vanilla::{check_prop3, Prop3Report, MIN_SAMPLES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Confirmed,
    Violated,
    /// The premise failed, so the conclusion is not expected to hold.
    PreconditionViolated,
    /// The statistic is undefined on this sample.
    Skipped,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Confirmed => "confirmed",
            Verdict::Violated => "violated",
            Verdict::PreconditionViolated => "precondition_violated",
            Verdict::Skipped => "skipped",
        }
    }
}
