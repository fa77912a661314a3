use serde::{Deserialize, Serialize};

use super::resources::ResourceVector;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Participant,
    Producer,
    Audience,
    Moderator,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Participant => "Participant",
            Role::Producer => "Producer",
            Role::Audience => "Audience",
            Role::Moderator => "Moderator",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interaction {
    NtoM,
    OneToN,
    None,
}

impl Interaction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Interaction::NtoM => "NtoM",
            Interaction::OneToN => "OneToN",
            Interaction::None => "None",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Perception {
    PointCloud,
    Avatar3D,
    None,
}

impl Perception {
    pub fn as_str(&self) -> &'static str {
        match self {
            Perception::PointCloud => "PointCloud",
            Perception::Avatar3D => "Avatar3D",
            Perception::None => "None",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContentDescriptor<T> {
    #[serde(default)]
    pub static_complexity: T,
    #[serde(default)]
    pub dynamic_complexity: T,
    #[serde(default)]
    pub fg_consistency: bool,
    #[serde(default)]
    pub bg_consistency: bool,
}

impl<T: Real> ContentDescriptor<T> {
    /// Demand multiplier used when content scaling is enabled for resource checks.
    pub fn complexity(&self) -> T {
        self.static_complexity + self.dynamic_complexity
    }
}

/// One XR participant and the context that drives its weight and demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct UserProfile<T> {
    pub id: String,
    pub role: Role,
    pub interaction: Interaction,
    pub self_perception: Perception,
    /// How others perceive this user; same as `self_perception` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub others_perception: Option<Perception>,
    pub quality_profile: String,
    /// Latency budget, ms.
    pub l_max: T,
    /// Processing latency contribution, ms.
    pub l_proc: T,
    /// Minimum throughput, Mbps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub th_min: Option<T>,
    pub r_usage: ResourceVector<T>,
    #[serde(default)]
    pub content: ContentDescriptor<T>,
    /// Fidelity (1) versus latency (0) preference.
    #[serde(default = "neutral_preference")]
    pub prefs: T,
    /// UE identifier in the topology.
    pub attachment: String,
}

fn neutral_preference<T: Real>() -> T {
    T::lit(0.5)
}

impl<T: Real> UserProfile<T> {
    pub fn others_perception(&self) -> Perception {
        self.others_perception.unwrap_or(self.self_perception)
    }
}
