//! The five placement constraints and the policy that turns their outcomes
//! into a verdict.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::{placement_cost, rescheduling_overhead, CostError, OverheadContext, OverheadModel, ReschedulingCost};
use crate::model::{throughput_demand, user_latency, Latency, ResourceVector, RouteTable, ThroughputTable, Topology, UserProfile};
use crate::placement::{Assignment, Placement};
use crate::scalar::{infinite, Real};

/// Constraint identifiers, declared in evaluation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintId {
    Qosc,
    Pcc,
    Rac,
    Soc,
    Moc,
}

impl ConstraintId {
    pub const ALL: [ConstraintId; 5] = [Self::Qosc, Self::Pcc, Self::Rac, Self::Soc, Self::Moc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Qosc => "QoSC",
            Self::Pcc => "PCC",
            Self::Rac => "RAC",
            Self::Soc => "SOC",
            Self::Moc => "MOC",
        }
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness<T> {
    /// Failure discards the placement.
    #[default]
    Hard,
    /// Failure subtracts `penalty` from the placement score.
    Soft { penalty: T },
    Off,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StrictnessMap<T> {
    #[serde(default)]
    pub qosc: Strictness<T>,
    #[serde(default)]
    pub pcc: Strictness<T>,
    #[serde(default)]
    pub rac: Strictness<T>,
    #[serde(default)]
    pub soc: Strictness<T>,
    #[serde(default)]
    pub moc: Strictness<T>,
}

impl<T: Real> StrictnessMap<T> {
    pub fn get(&self, id: ConstraintId) -> Strictness<T> {
        match id {
            ConstraintId::Qosc => self.qosc,
            ConstraintId::Pcc => self.pcc,
            ConstraintId::Rac => self.rac,
            ConstraintId::Soc => self.soc,
            ConstraintId::Moc => self.moc,
        }
    }

    pub fn set(&mut self, id: ConstraintId, s: Strictness<T>) {
        match id {
            ConstraintId::Qosc => self.qosc = s,
            ConstraintId::Pcc => self.pcc = s,
            ConstraintId::Rac => self.rac = s,
            ConstraintId::Soc => self.soc = s,
            ConstraintId::Moc => self.moc = s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConstraintPolicy<T> {
    #[serde(default)]
    pub strictness: StrictnessMap<T>,
    /// Operating budget, currency per hour.
    #[serde(default = "infinite")]
    pub c_opex: T,
    /// Investment budget, currency.
    #[serde(default = "infinite")]
    pub c_capex: T,
    /// Currency per unit of capacity.
    #[serde(default)]
    pub capex_rate: ResourceVector<T>,
    #[serde(default = "infinite")]
    pub s_oh_max: T,
    #[serde(default = "infinite")]
    pub m_oh_max: T,
    /// Multiply each user's demand by its content complexity in resource checks.
    #[serde(default)]
    pub content_multiplier: bool,
}

impl<T: Real> Default for ConstraintPolicy<T> {
    fn default() -> Self {
        Self {
            strictness: StrictnessMap::default(),
            c_opex: T::infinity(),
            c_capex: T::infinity(),
            capex_rate: ResourceVector::zero(),
            s_oh_max: T::infinity(),
            m_oh_max: T::infinity(),
            content_multiplier: false,
        }
    }
}

impl<T: Real> ConstraintPolicy<T> {
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for id in ConstraintId::ALL {
            if let Strictness::Soft { penalty } = self.strictness.get(id) {
                if !(penalty >= T::zero()) || !penalty.is_finite() {
                    out.push((
                        format!("strictness.{}", id.as_str().to_lowercase()),
                        format!("penalty {penalty} must be finite and >= 0"),
                    ));
                }
            }
        }
        for (name, v) in [("c_opex", self.c_opex), ("c_capex", self.c_capex)] {
            if !(v > T::zero()) {
                out.push((name.to_string(), format!("budget {v} must be > 0 or inf")));
            }
        }
        for (name, v) in [("s_oh_max", self.s_oh_max), ("m_oh_max", self.m_oh_max)] {
            if !(v >= T::zero()) {
                out.push((name.to_string(), format!("threshold {v} must be >= 0")));
            }
        }
        if !self.capex_rate.is_non_negative() {
            out.push(("capex_rate".to_string(), "components must be >= 0".to_string()));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintCheck<T> {
    pub satisfied: bool,
    pub margin: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl<T: Real> ConstraintCheck<T> {
    fn new(satisfied: bool, margin: T, detail: Option<String>) -> Self {
        Self { satisfied, margin, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus<T> {
    Pass,
    Discard { constraint: ConstraintId, detail: String },
    Penalize { total_penalty: T },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict<T> {
    pub status: VerdictStatus<T>,
    pub per_constraint: BTreeMap<ConstraintId, ConstraintCheck<T>>,
}

impl<T: Real> Verdict<T> {
    pub fn is_discarded(&self) -> bool {
        matches!(self.status, VerdictStatus::Discard { .. })
    }

    pub fn penalty(&self) -> T {
        match self.status {
            VerdictStatus::Penalize { total_penalty } => total_penalty,
            _ => T::zero(),
        }
    }

    /// `"RAC: ..."` for discarded candidates.
    pub fn discard_reason(&self) -> Option<String> {
        match &self.status {
            VerdictStatus::Discard { constraint, detail } => Some(format!("{constraint}: {detail}")),
            _ => None,
        }
    }
}

/// Applies the policy to the five check outcomes. The first failing Hard
/// constraint (in evaluation order) discards; failing Soft ones add up.
pub fn verdict_from_checks<T: Real>(
    per_constraint: BTreeMap<ConstraintId, ConstraintCheck<T>>,
    policy: &ConstraintPolicy<T>,
) -> Verdict<T> {
    let mut penalty = T::zero();
    let mut discard = None;
    for (id, check) in &per_constraint {
        if check.satisfied {
            continue;
        }
        match policy.strictness.get(*id) {
            Strictness::Hard => {
                if discard.is_none() {
                    discard = Some((*id, check.detail.clone().unwrap_or_default()));
                }
            }
            Strictness::Soft { penalty: p } => penalty += p,
            Strictness::Off => {}
        }
    }
    let status = match discard {
        Some((constraint, detail)) => VerdictStatus::Discard { constraint, detail },
        None if penalty > T::zero() => VerdictStatus::Penalize { total_penalty: penalty },
        None => VerdictStatus::Pass,
    };
    Verdict { status, per_constraint }
}

/// Latency and throughput seen by one user under a placement.
#[derive(Clone, Debug, PartialEq)]
pub struct UserService<T> {
    pub user: String,
    pub node: String,
    pub l_u: Latency<T>,
    /// Achievable throughput, when anything is known about it.
    pub th: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QoscOutcome<T> {
    pub check: ConstraintCheck<T>,
    pub users: Vec<UserService<T>>,
}

/// Latency budget and minimum throughput for every user.
pub fn check_qosc<T: Real>(
    assignment: &Assignment,
    users: &[UserProfile<T>],
    routes: &RouteTable<T>,
    throughput: Option<&ThroughputTable<T>>,
) -> Result<QoscOutcome<T>, crate::model::ModelError> {
    let mut margin = T::infinity();
    let mut failures = Vec::new();
    let mut services = Vec::with_capacity(users.len());
    for u in users {
        let node = assignment
            .get(&u.id)
            .ok_or_else(|| crate::model::ModelError::UnknownNode(format!("<unassigned user {}>", u.id)))?;
        let route = routes.route(&u.attachment, node)?;
        let l_u = user_latency(u.l_proc, route.latency);
        let th = match (throughput, route.bottleneck_mbps) {
            (Some(t), cap) => {
                let demand = throughput_demand(u, Some(t));
                Some(cap.map_or(demand, |c| demand.min(c)))
            }
            (None, cap) => cap,
        };
        let user_margin = match l_u {
            Latency::Finite(l) => (u.l_max - l) / u.l_max,
            Latency::Unreachable => T::neg_infinity(),
        };
        margin = margin.min(user_margin);
        match l_u {
            Latency::Unreachable => failures.push(format!("{} cannot reach {node}", u.id)),
            Latency::Finite(l) if l > u.l_max => {
                failures.push(format!("{} latency {l} ms > {} ms", u.id, u.l_max))
            }
            _ => {}
        }
        if let (Some(th), Some(min)) = (th, u.th_min) {
            if th < min {
                failures.push(format!("{} throughput {th} Mbps < {min} Mbps", u.id));
            }
        }
        services.push(UserService {
            user: u.id.clone(),
            node: node.clone(),
            l_u,
            th,
        });
    }
    let detail = (!failures.is_empty()).then(|| failures.join("; "));
    Ok(QoscOutcome {
        check: ConstraintCheck::new(failures.is_empty(), margin, detail),
        users: services,
    })
}

/// Operating budget.
pub fn check_pcc<T: Real>(cost: T, policy: &ConstraintPolicy<T>) -> ConstraintCheck<T> {
    let satisfied = cost <= policy.c_opex;
    let margin = if policy.c_opex.is_infinite() {
        T::infinity()
    } else {
        (policy.c_opex - cost) / policy.c_opex
    };
    let detail = (!satisfied).then(|| format!("cost {cost}/h > budget {}/h", policy.c_opex));
    ConstraintCheck::new(satisfied, margin, detail)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RacOutcome<T> {
    pub check: ConstraintCheck<T>,
    /// Serving node to aggregated demand.
    pub demand: BTreeMap<String, ResourceVector<T>>,
    /// Nodes whose demand exceeds what is provisioned but fits capacity.
    pub scaling_nodes: Vec<String>,
}

impl<T: Real> RacOutcome<T> {
    pub fn needs_scaling(&self) -> bool {
        !self.scaling_nodes.is_empty()
    }
}

/// Capacity and investment limits per serving node.
pub fn check_rac<T: Real>(
    placement: &Placement,
    assignment: &Assignment,
    users: &[UserProfile<T>],
    topo: &Topology<T>,
    policy: &ConstraintPolicy<T>,
) -> Result<RacOutcome<T>, CostError> {
    let mut demand: BTreeMap<String, ResourceVector<T>> = placement
        .node_set
        .iter()
        .map(|n| (n.clone(), ResourceVector::zero()))
        .collect();
    for u in users {
        let Some(node) = assignment.get(&u.id) else { continue };
        let slot = demand.get_mut(node).ok_or_else(|| CostError::ForeignNode {
            placement: placement.id.clone(),
            user: u.id.clone(),
            node: node.clone(),
        })?;
        let factor = if policy.content_multiplier {
            u.content.complexity()
        } else {
            T::one()
        };
        *slot += u.r_usage * factor;
    }

    let mut failures = Vec::new();
    let mut scaling_nodes = Vec::new();
    let mut margin = T::infinity();
    let mut capacity = ResourceVector::zero();
    for (id, d) in &demand {
        let node = topo.node(id).ok_or_else(|| CostError::UnknownNode {
            placement: placement.id.clone(),
            node: id.clone(),
        })?;
        capacity += node.r_max;
        margin = margin.min(d.headroom_ratio(&node.r_max));
        if d.exceeds_any(&node.r_max) {
            failures.push(format!("{id} demand {d} exceeds capacity {}", node.r_max));
        } else if d.exceeds_any(&node.r_assigned) {
            scaling_nodes.push(id.clone());
        }
    }
    let capex = policy.capex_rate.dot(&capacity);
    if capex > policy.c_capex {
        failures.push(format!("capacity investment {capex} > budget {}", policy.c_capex));
    }
    let detail = (!failures.is_empty()).then(|| failures.join("; "));
    Ok(RacOutcome {
        check: ConstraintCheck::new(failures.is_empty(), margin, detail),
        demand,
        scaling_nodes,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocOutcome<T> {
    pub check: ConstraintCheck<T>,
    /// Scalable nodes in the placement.
    pub scalable_nodes: usize,
}

/// Scaling must be possible where needed and cheap enough.
pub fn check_soc<T: Real>(
    placement: &Placement,
    rac: &RacOutcome<T>,
    scaling_overhead: T,
    topo: &Topology<T>,
    policy: &ConstraintPolicy<T>,
) -> SocOutcome<T> {
    let scalable_nodes = placement
        .node_set
        .iter()
        .filter(|n| topo.node(n).is_some_and(|n| n.scalable))
        .count();
    let mut failures = Vec::new();
    if rac.needs_scaling() {
        for id in &rac.scaling_nodes {
            if !topo.node(id).is_some_and(|n| n.scalable) {
                failures.push(format!("{id} needs scaling but is not scalable"));
            }
        }
        if scaling_overhead > policy.s_oh_max {
            failures.push(format!("scaling overhead {scaling_overhead} > {}", policy.s_oh_max));
        }
    }
    let margin = policy.s_oh_max - scaling_overhead;
    let detail = (!failures.is_empty()).then(|| failures.join("; "));
    SocOutcome {
        check: ConstraintCheck::new(failures.is_empty(), margin, detail),
        scalable_nodes,
    }
}

/// Migration overhead threshold.
pub fn check_moc<T: Real>(migration_overhead: T, policy: &ConstraintPolicy<T>) -> ConstraintCheck<T> {
    let satisfied = migration_overhead <= policy.m_oh_max;
    let detail = (!satisfied).then(|| format!("migration overhead {migration_overhead} > {}", policy.m_oh_max));
    ConstraintCheck::new(satisfied, policy.m_oh_max - migration_overhead, detail)
}

/// Everything a candidate evaluation needs from the orchestrator state.
#[derive(Clone, Copy, Debug)]
pub struct CandidateContext<'a, T> {
    pub current: Option<&'a Placement>,
    pub users: &'a [UserProfile<T>],
    pub topology: &'a Topology<T>,
    pub routes: &'a RouteTable<T>,
    pub throughput: Option<&'a ThroughputTable<T>>,
    pub overhead: &'a OverheadModel<T>,
    pub policy: &'a ConstraintPolicy<T>,
}

impl<T: Real> CandidateContext<'_, T> {
    /// Tightest latency budget among active users.
    pub fn min_l_max(&self) -> T {
        self.users.iter().fold(T::infinity(), |acc, u| acc.min(u.l_max))
    }
}

/// Constraint outcomes plus the intermediate quantities scoring reuses.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<T> {
    pub assignment: Assignment,
    pub cost: T,
    pub qosc: QoscOutcome<T>,
    pub rac: RacOutcome<T>,
    pub scalable_nodes: usize,
    pub overhead: ReschedulingCost<T>,
    pub verdict: Verdict<T>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Runs QoSC, PCC, RAC, SOC and MOC in that order and applies the policy.
pub fn evaluate<T: Real>(placement: &Placement, ctx: &CandidateContext<'_, T>) -> Result<Evaluation<T>, EvaluationError> {
    let assignment = placement.assign(ctx.users.iter().map(|u| u.id.as_str()));
    let cost = placement_cost(placement, &assignment, ctx.users, ctx.topology)?;

    let qosc = check_qosc(&assignment, ctx.users, ctx.routes, ctx.throughput)?;
    let pcc = check_pcc(cost, ctx.policy);
    let rac = check_rac(placement, &assignment, ctx.users, ctx.topology, ctx.policy)?;
    let overhead = rescheduling_overhead(
        placement,
        ctx.current,
        rac.needs_scaling(),
        ctx.overhead,
        &OverheadContext {
            topology: ctx.topology,
            l_max_ms: ctx.min_l_max(),
        },
    );
    let soc = check_soc(placement, &rac, overhead.scaling, ctx.topology, ctx.policy);
    let moc = check_moc(overhead.migration, ctx.policy);

    let per_constraint = BTreeMap::from([
        (ConstraintId::Qosc, qosc.check.clone()),
        (ConstraintId::Pcc, pcc),
        (ConstraintId::Rac, rac.check.clone()),
        (ConstraintId::Soc, soc.check),
        (ConstraintId::Moc, moc),
    ]);
    let verdict = verdict_from_checks(per_constraint, ctx.policy);
    Ok(Evaluation {
        assignment,
        cost,
        qosc,
        rac,
        scalable_nodes: soc.scalable_nodes,
        overhead,
        verdict,
    })
}
