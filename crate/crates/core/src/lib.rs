#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraints;
pub mod cost;
pub mod io;
pub mod model;
pub mod orchestrator;
pub mod placement;
pub mod scalar;

pub use io::{load_scenario, run, ScenarioFile};
pub use scalar::Real;

pub type Scenario = io::ScenarioFile<f64>;
pub type Scenario32 = io::ScenarioFile<f32>;
pub type State = orchestrator::OrchestratorState<f64>;
pub type State32 = orchestrator::OrchestratorState<f32>;
pub type Report = orchestrator::StepReport<f64>;
pub type RunTrace = orchestrator::Trace<f64>;
pub type RunTrace32 = orchestrator::Trace<f32>;
pub type Candidate = orchestrator::CandidateScore<f64>;
