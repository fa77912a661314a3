//! Scenario files and run traces.

pub mod scenario;
pub mod trace;

pub use scenario::{load_scenario, reference_scenario, EventSpec, ScenarioError, ScenarioFile, Violation, REFERENCE_SCENARIO, SCHEMA_VERSION};
pub use trace::{fmt4, report_json, write_trace, TraceError, TraceFormat};

use crate::orchestrator::{run_events, RunError, Trace};
use crate::scalar::Real;

/// Replays the scenario's events from its initial state.
pub fn run<T: Real>(scenario: &ScenarioFile<T>) -> Result<Trace<T>, RunError<T>> {
    run_events(scenario.initial_state(), &scenario.context_events())
}
