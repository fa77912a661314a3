//! Placement cost, its normalizer, and rescheduling overhead.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NodeSpec, Tier, Topology, UserProfile};
use crate::placement::{Assignment, Placement};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("user `{user}` is assigned to `{node}`, which is not part of placement `{placement}`")]
    ForeignNode {
        placement: String,
        user: String,
        node: String,
    },
    #[error("placement `{placement}` references unknown node `{node}`")]
    UnknownNode { placement: String, node: String },
    #[error("cost normalizer undefined for placement `{0}` with no users")]
    UndefinedNormalizer(String),
    #[error("cost normalizer for placement `{0}` is not strictly positive")]
    NonPositiveNormalizer(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostBreakdown<T> {
    pub compute_cost: T,
    pub energy_cost: T,
    pub total: T,
}

/// Hourly cost of one node serving `users`: resource prices times summed
/// demand, plus the node's energy term.
pub fn node_cost<'a, T: Real>(
    node: &NodeSpec<T>,
    users: impl IntoIterator<Item = &'a UserProfile<T>>,
) -> CostBreakdown<T> {
    let compute_cost = users
        .into_iter()
        .fold(T::zero(), |acc, u| acc + node.price.dot(&u.r_usage));
    let energy_cost = node.energy_cost();
    CostBreakdown {
        compute_cost,
        energy_cost,
        total: compute_cost + energy_cost,
    }
}

fn check_assignment<T: Real>(
    placement: &Placement,
    assignment: &Assignment,
    topo: &Topology<T>,
) -> Result<(), CostError> {
    for (user, node) in assignment {
        if !placement.node_set.contains(node) {
            return Err(CostError::ForeignNode {
                placement: placement.id.clone(),
                user: user.clone(),
                node: node.clone(),
            });
        }
    }
    match placement.node_set.iter().find(|n| topo.node(n).is_none()) {
        Some(node) => Err(CostError::UnknownNode {
            placement: placement.id.clone(),
            node: node.clone(),
        }),
        None => Ok(()),
    }
}

/// Sum of node costs over the placement's node set.
pub fn placement_cost<T: Real>(
    placement: &Placement,
    assignment: &Assignment,
    users: &[UserProfile<T>],
    topo: &Topology<T>,
) -> Result<T, CostError> {
    check_assignment(placement, assignment, topo)?;
    Ok(placement.node_set.iter().fold(T::zero(), |acc, id| {
        let node = topo.node(id).expect("checked above");
        let served = users
            .iter()
            .filter(|u| assignment.get(&u.id).map(String::as_str) == Some(id.as_str()));
        acc + node_cost(node, served).total
    }))
}

/// Cost when every user consumes the full capacity of its serving node.
///
/// The price-capacity product is summed once per user, so the normalizer
/// grows with the number of users even on a single node.
pub fn placement_cost_max<T: Real>(
    placement: &Placement,
    assignment: &Assignment,
    topo: &Topology<T>,
) -> Result<T, CostError> {
    check_assignment(placement, assignment, topo)?;
    if assignment.is_empty() {
        return Err(CostError::UndefinedNormalizer(placement.id.clone()));
    }
    let per_user = assignment.values().fold(T::zero(), |acc, id| {
        let node = topo.node(id).expect("checked above");
        acc + node.price.dot(&node.r_max)
    });
    let energy = placement
        .node_set
        .iter()
        .fold(T::zero(), |acc, id| acc + topo.node(id).expect("checked above").energy_cost());
    let max = per_user + energy;
    if max > T::zero() {
        Ok(max)
    } else {
        Err(CostError::NonPositiveNormalizer(placement.id.clone()))
    }
}

pub fn normalized_placement_cost<T: Real>(cost: T, cost_max: T) -> T {
    let ratio = cost / cost_max;
    if ratio > T::one() {
        warn!("placement cost {cost} exceeds its normalizer {cost_max}; clamping to 1");
        T::one()
    } else if ratio < T::zero() {
        warn!("placement cost {cost} is negative; clamping normalized cost to 0");
        T::zero()
    } else {
        ratio
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverheadMode {
    /// Constant overheads whenever scaling / migration happens.
    #[default]
    FixedConstants,
    /// Constants scaled by `1000 * t_action / l_max` (seconds against ms).
    TimeBased,
}

/// Overrides the migration constant for a specific tier transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierMigration<T> {
    pub from: Tier,
    pub to: Tier,
    pub overhead: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OverheadModel<T> {
    #[serde(default = "default_scaling")]
    pub scaling_overhead: T,
    #[serde(default = "default_migration")]
    pub migration_overhead: T,
    /// Defaults to `scaling_overhead + migration_overhead`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ro_normalizer: Option<T>,
    #[serde(default)]
    pub mode: OverheadMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub migration_by_tier: Vec<TierMigration<T>>,
}

fn default_scaling<T: Real>() -> T {
    T::lit(0.5)
}

fn default_migration<T: Real>() -> T {
    T::one()
}

impl<T: Real> Default for OverheadModel<T> {
    fn default() -> Self {
        Self {
            scaling_overhead: default_scaling(),
            migration_overhead: default_migration(),
            ro_normalizer: None,
            mode: OverheadMode::FixedConstants,
            migration_by_tier: Vec::new(),
        }
    }
}

impl<T: Real> OverheadModel<T> {
    pub fn normalizer(&self) -> T {
        self.ro_normalizer
            .unwrap_or(self.scaling_overhead + self.migration_overhead)
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("scaling_overhead", self.scaling_overhead),
            ("migration_overhead", self.migration_overhead),
        ] {
            if !(v >= T::zero()) {
                out.push((name.to_string(), format!("{v} must be >= 0")));
            }
        }
        for (i, o) in self.migration_by_tier.iter().enumerate() {
            if !(o.overhead >= T::zero()) {
                out.push((format!("migration_by_tier[{i}].overhead"), "must be >= 0".to_string()));
            }
        }
        if !(self.normalizer() > T::zero()) {
            out.push(("ro_normalizer".to_string(), "must be > 0".to_string()));
        }
        out
    }
}

/// Inputs the time-based and tier-aware overhead modes need.
#[derive(Clone, Copy, Debug)]
pub struct OverheadContext<'a, T> {
    pub topology: &'a Topology<T>,
    /// Tightest latency budget among active users, ms.
    pub l_max_ms: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReschedulingCost<T> {
    pub scaling: T,
    pub migration: T,
    pub total: T,
    pub normalized: T,
}

fn max_t_action<'a, T: Real>(topo: &Topology<T>, nodes: impl IntoIterator<Item = &'a String>) -> T {
    nodes
        .into_iter()
        .filter_map(|n| topo.node(n))
        .fold(T::zero(), |acc, n| acc.max(n.t_action))
}

/// Overhead of moving to `candidate` from `current`. No current placement
/// (initial deployment) counts as a migration.
pub fn rescheduling_overhead<T: Real>(
    candidate: &Placement,
    current: Option<&Placement>,
    needs_scaling: bool,
    model: &OverheadModel<T>,
    ctx: &OverheadContext<'_, T>,
) -> ReschedulingCost<T> {
    let migrating = current.is_none_or(|c| c.id != candidate.id);
    let tier_of = |p: &Placement| p.node_set.first().and_then(|n| ctx.topology.node(n)).map(|n| n.tier);
    let migration_base = current
        .and_then(|c| {
            let (from, to) = (tier_of(c)?, tier_of(candidate)?);
            model
                .migration_by_tier
                .iter()
                .find(|o| o.from == from && o.to == to)
                .map(|o| o.overhead)
        })
        .unwrap_or(model.migration_overhead);

    let (time_scale, migration_scale) = match model.mode {
        OverheadMode::FixedConstants => (T::one(), T::one()),
        OverheadMode::TimeBased => {
            let per_ms = |t: T| {
                if ctx.l_max_ms.is_finite() && ctx.l_max_ms > T::zero() {
                    T::lit(1000.0) * t / ctx.l_max_ms
                } else {
                    T::zero()
                }
            };
            let t_scale = max_t_action(ctx.topology, &candidate.node_set);
            let t_move = current
                .map(|c| max_t_action(ctx.topology, &c.node_set))
                .unwrap_or_else(T::zero)
                .max(t_scale);
            (per_ms(t_scale), per_ms(t_move))
        }
    };

    let scaling = if needs_scaling {
        model.scaling_overhead * time_scale
    } else {
        T::zero()
    };
    let migration = if migrating {
        migration_base * migration_scale
    } else {
        T::zero()
    };
    let total = scaling + migration;
    ReschedulingCost {
        scaling,
        migration,
        total,
        normalized: (total / model.normalizer()).unit_clamp(),
    }
}
