//! Scenario-based robustness unit tests: scenario files, success predicates,
//! the rollout scoring protocol and reports.

mod predicate;
mod run;
mod scenario;

pub use predicate::{PredicateTracker, SuccessPredicate};
pub use run::{
    aggregate, child_seed, run_rollout, run_scenario, run_suite, RolloutRecord, ScenarioResult,
    TestReport, VariantResult, REPORT_FORMAT,
};
pub use scenario::{
    append_variant, bundled_suite, capture_scenario, load_suite, Category, Scenario, ScenarioError,
    DEFAULT_ROLLOUTS_PER_VARIANT, SCENARIO_EXTENSION,
};
