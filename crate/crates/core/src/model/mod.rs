//! Domain vocabulary and per-user quantities: engagement, weight, latency,
//! throughput and QoS.

mod engagement;
mod qos;
mod resources;
mod topology;
mod user;

use thiserror::Error;

pub use engagement::{
    compute_uel, compute_weight, DeploymentMode, Distribution, ExtraColumn, ExtraFactor, Processing,
    ScoreTable, UelWeights, WeightCombiner, WEIGHT_SUM_TOLERANCE,
};
pub use qos::{throughput_demand, user_latency, user_qos, ThroughputTable};
pub use resources::ResourceVector;
pub use topology::{net_latency, Access, Interface, Latency, Link, NodeSpec, Route, RouteTable, Tier, Topology};
pub use user::{ContentDescriptor, Interaction, Perception, Role, UserProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("score table has no `{column}` entry for `{key}`")]
    MissingScore { column: &'static str, key: String },
    #[error("unknown UE `{0}`")]
    UnknownUe(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}
