//! User engagement level and the per-user weight derived from it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::user::UserProfile;
use super::ModelError;
use crate::scalar::Real;

/// Tolerance on the weight-sum invariant of a [`ScoreTable`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UelWeights<T> {
    pub role: T,
    pub interaction: T,
    pub quality: T,
    pub perception: T,
}

/// Factors that can be scored on top of the four base columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraFactor {
    /// Keyed by perception label.
    OthersPerception,
    /// Keyed by `"true"` / `"false"`.
    ForegroundConsistency,
    BackgroundConsistency,
    /// Scored by the complexity value itself, clamped to `[0, 1]`.
    StaticComplexity,
    DynamicComplexity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraColumn<T> {
    pub factor: ExtraFactor,
    pub weight: T,
    #[serde(default)]
    pub scores: BTreeMap<String, T>,
}

/// Lookup tables that turn a user's context into an engagement level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable<T> {
    pub role: BTreeMap<String, T>,
    pub interaction: BTreeMap<String, T>,
    pub quality: BTreeMap<String, T>,
    pub perception: BTreeMap<String, T>,
    pub weights: UelWeights<T>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<ExtraColumn<T>>,
}

impl<T: Real> ScoreTable<T> {
    fn columns(&self) -> [(&'static str, &BTreeMap<String, T>); 4] {
        [
            ("role", &self.role),
            ("interaction", &self.interaction),
            ("quality", &self.quality),
            ("perception", &self.perception),
        ]
    }

    pub fn weight_sum(&self) -> T {
        let w = &self.weights;
        self.extra
            .iter()
            .fold(w.role + w.interaction + w.quality + w.perception, |acc, c| acc + c.weight)
    }

    /// Checks score ranges and the weight sum. Returns `(locator, message)` pairs.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let in_unit = |x: T| x >= T::zero() && x <= T::one();
        for (name, column) in self.columns() {
            for (key, score) in column {
                if !in_unit(*score) {
                    out.push((format!("{name}.{key}"), format!("score {score} outside [0, 1]")));
                }
            }
        }
        for (i, col) in self.extra.iter().enumerate() {
            for (key, score) in &col.scores {
                if !in_unit(*score) {
                    out.push((format!("extra[{i}].scores.{key}"), format!("score {score} outside [0, 1]")));
                }
            }
            if !in_unit(col.weight) {
                out.push((format!("extra[{i}].weight"), format!("weight {} outside [0, 1]", col.weight)));
            }
        }
        let w = &self.weights;
        for (name, v) in [
            ("role", w.role),
            ("interaction", w.interaction),
            ("quality", w.quality),
            ("perception", w.perception),
        ] {
            if !in_unit(v) {
                out.push((format!("weights.{name}"), format!("weight {v} outside [0, 1]")));
            }
        }
        let sum = self.weight_sum();
        if (sum - T::one()).abs().as_f64() > WEIGHT_SUM_TOLERANCE {
            out.push(("weights".into(), format!("weights sum to {sum}, expected 1")));
        }
        out
    }
}

fn lookup<T: Real>(column: &'static str, table: &BTreeMap<String, T>, key: &str) -> Result<T, ModelError> {
    table.get(key).copied().ok_or_else(|| ModelError::MissingScore {
        column,
        key: key.to_string(),
    })
}

/// Weighted sum of the user's role, interaction, quality and perception
/// scores, plus any extra columns configured on the table.
pub fn compute_uel<T: Real>(user: &UserProfile<T>, table: &ScoreTable<T>) -> Result<T, ModelError> {
    let w = &table.weights;
    let mut uel = w.quality * lookup("quality", &table.quality, &user.quality_profile)?
        + w.role * lookup("role", &table.role, user.role.as_str())?
        + w.interaction * lookup("interaction", &table.interaction, user.interaction.as_str())?
        + w.perception * lookup("perception", &table.perception, user.self_perception.as_str())?;
    for col in &table.extra {
        let flag = |b: bool| if b { "true" } else { "false" };
        let score = match col.factor {
            ExtraFactor::OthersPerception => {
                lookup("others_perception", &col.scores, user.others_perception().as_str())?
            }
            ExtraFactor::ForegroundConsistency => {
                lookup("fg_consistency", &col.scores, flag(user.content.fg_consistency))?
            }
            ExtraFactor::BackgroundConsistency => {
                lookup("bg_consistency", &col.scores, flag(user.content.bg_consistency))?
            }
            ExtraFactor::StaticComplexity => user.content.static_complexity.unit_clamp(),
            ExtraFactor::DynamicComplexity => user.content.dynamic_complexity.unit_clamp(),
        };
        uel += col.weight * score;
    }
    Ok(uel)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    FullyDistributed,
    #[default]
    PartiallyDistributed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Processing {
    #[default]
    Centralised,
    Distributed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DeploymentMode<T> {
    #[serde(default)]
    pub mode: Distribution,
    /// Offloading level in `[0, 1]`.
    #[serde(default = "full_offload")]
    pub uol: T,
    /// Metadata only.
    #[serde(default)]
    pub processing: Processing,
}

fn full_offload<T: Real>() -> T {
    T::one()
}

impl<T: Real> Default for DeploymentMode<T> {
    fn default() -> Self {
        Self {
            mode: Distribution::default(),
            uol: T::one(),
            processing: Processing::default(),
        }
    }
}

/// How a user's weight is formed from engagement, offloading and preference.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightCombiner<T> {
    /// Weight equals engagement level.
    #[default]
    Engagement,
    /// `uel * uol * g(prefs)` with `g(p) = clamp(1 + slope * (p - 0.5), 0, 1)`.
    /// `slope = 0` makes `g` identically one.
    Extended {
        #[serde(default)]
        slope: T,
    },
}

impl<T: Real> WeightCombiner<T> {
    pub fn preference_gain(&self, prefs: T) -> T {
        match self {
            WeightCombiner::Engagement => T::one(),
            WeightCombiner::Extended { slope } => (T::one() + *slope * (prefs - T::lit(0.5))).unit_clamp(),
        }
    }
}

/// Per-user weight `w_u`.
pub fn compute_weight<T: Real>(uel: T, mode: &DeploymentMode<T>, prefs: T, combiner: &WeightCombiner<T>) -> T {
    match combiner {
        WeightCombiner::Engagement => uel,
        WeightCombiner::Extended { .. } => (uel * mode.uol * combiner.preference_gain(prefs)).unit_clamp(),
    }
}
