//! Best-placement search, the rescheduling decision, and the event-driven
//! loop that ties them together.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{evaluate, CandidateContext, ConstraintPolicy, EvaluationError, Verdict};
use crate::cost::{normalized_placement_cost, placement_cost_max, CostError, OverheadModel, ReschedulingCost};
use crate::model::{
    compute_uel, compute_weight, user_qos, DeploymentMode, Latency, ModelError, ResourceVector, RouteTable,
    ScoreTable, ThroughputTable, Topology, UserProfile, WeightCombiner,
};
use crate::placement::{compare_ids, Placement};
use crate::scalar::Real;

/// Relative weights of QoS, placement cost and rescheduling overhead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffVector<T> {
    pub alpha: T,
    pub beta: T,
    pub lambda: T,
}

impl<T: Real> TradeoffVector<T> {
    pub fn new(alpha: T, beta: T, lambda: T) -> Self {
        Self { alpha, beta, lambda }
    }

    pub fn scaled(self, c: T) -> Self {
        Self::new(self.alpha * c, self.beta * c, self.lambda * c)
    }

    pub fn is_valid(&self) -> bool {
        let parts = [self.alpha, self.beta, self.lambda];
        parts.iter().all(|x| *x >= T::zero() && x.is_finite()) && parts.iter().any(|x| *x > T::zero())
    }

    /// Scores closer than this are ties. Proportional to the weights so that
    /// rescaling the vector leaves tie decisions alone.
    pub fn tie_tolerance(&self) -> T {
        T::epsilon() * T::lit(16.0) * (self.alpha + self.beta + self.lambda)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReschedulingOp {
    None,
    Scaling,
    Migration,
    ScalingAndMigration,
}

impl ReschedulingOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "None",
            Self::Scaling => "Scaling",
            Self::Migration => "Migration",
            Self::ScalingAndMigration => "ScalingAndMigration",
        }
    }

    pub fn scales(&self) -> bool {
        matches!(self, Self::Scaling | Self::ScalingAndMigration)
    }

    pub fn migrates(&self) -> bool {
        matches!(self, Self::Migration | Self::ScalingAndMigration)
    }
}

impl fmt::Display for ReschedulingOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A change in the service context that re-triggers the loop.
#[derive(Clone, Debug, PartialEq)]
pub enum ContextEvent<T> {
    UserJoined(Box<UserProfile<T>>),
    UserLeft(String),
    NodeResourcesChanged {
        node: String,
        r_assigned: Option<ResourceVector<T>>,
        r_max: Option<ResourceVector<T>>,
    },
    LinkLatencyChanged {
        a: String,
        b: String,
        latency_ms: T,
    },
}

impl<T: Real> ContextEvent<T> {
    pub fn summary(&self) -> String {
        match self {
            Self::UserJoined(u) => format!("{} added", u.id),
            Self::UserLeft(id) => format!("{id} removed"),
            Self::NodeResourcesChanged { node, .. } => format!("{node} resources changed"),
            Self::LinkLatencyChanged { a, b, .. } => format!("link {a}-{b} latency changed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrchestratorError {
    #[error("topology has no compute nodes")]
    EmptyTopology,
    #[error("no active users to score")]
    EmptyService,
    #[error("no feasible placement: {}", .0.iter().map(|(p, r)| format!("{p} ({r})")).collect::<Vec<_>>().join(", "))]
    NoFeasiblePlacement(Vec<(String, String)>),
    #[error("user `{0}` is already active")]
    DuplicateUser(String),
    #[error("user `{0}` is not active")]
    UnknownUser(String),
    #[error("no link between `{0}` and `{1}`")]
    UnknownLink(String, String),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("scaling `{node}` to {demand} exceeds its capacity")]
    ScalingBeyondCapacity { node: String, demand: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

impl From<EvaluationError> for OrchestratorError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Cost(c) => Self::Cost(c),
            EvaluationError::Model(m) => Self::Model(m),
        }
    }
}

/// The orchestrator's view of the world between events.
#[derive(Clone, Debug, PartialEq)]
pub struct OrchestratorState<T> {
    pub topology: Topology<T>,
    /// Active users in join order.
    pub users: Vec<UserProfile<T>>,
    pub current: Option<Placement>,
    pub tradeoffs: TradeoffVector<T>,
    pub policy: ConstraintPolicy<T>,
    pub overhead: OverheadModel<T>,
    pub scores: ScoreTable<T>,
    pub deployment: DeploymentMode<T>,
    pub combiner: WeightCombiner<T>,
    pub throughput: Option<ThroughputTable<T>>,
    /// Multi-node placements supplied by configuration.
    pub explicit: Vec<Placement>,
    pub step: usize,
}

impl<T: Real> OrchestratorState<T> {
    pub fn new(topology: Topology<T>, scores: ScoreTable<T>, tradeoffs: TradeoffVector<T>) -> Self {
        Self {
            topology,
            users: Vec::new(),
            current: None,
            tradeoffs,
            policy: ConstraintPolicy::default(),
            overhead: OverheadModel::default(),
            scores,
            deployment: DeploymentMode::default(),
            combiner: WeightCombiner::default(),
            throughput: None,
            explicit: Vec::new(),
            step: 0,
        }
    }

    pub fn digest(&self) -> StateDigest<T> {
        StateDigest {
            j_current: self.current.as_ref().map(|p| p.id.clone()),
            active_users: self.users.iter().map(|u| u.id.clone()).collect(),
            r_assigned: self
                .topology
                .nodes
                .iter()
                .map(|n| (n.id.clone(), n.r_assigned))
                .collect(),
        }
    }

    fn routes(&self) -> Result<RouteTable<T>, ModelError> {
        RouteTable::build(&self.topology, self.users.iter().map(|u| u.attachment.as_str()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateDigest<T> {
    pub j_current: Option<String>,
    pub active_users: Vec<String>,
    pub r_assigned: BTreeMap<String, ResourceVector<T>>,
}

/// One user's contribution to a placement's QoS.
#[derive(Clone, Debug, PartialEq)]
pub struct UserTerm<T> {
    pub user: String,
    pub node: String,
    pub uel: T,
    pub weight: T,
    pub latency: Latency<T>,
    pub qos: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateScore<T> {
    pub placement_id: String,
    pub node_set: Vec<String>,
    pub qos_norm: T,
    pub cost_norm: T,
    pub ro_norm: T,
    pub penalty: T,
    /// Objective value; `None` when discarded.
    pub f: Option<T>,
    pub verdict: Verdict<T>,
    pub cost: T,
    pub cost_max: T,
    pub overhead: ReschedulingCost<T>,
    pub needs_scaling: bool,
    pub demand: BTreeMap<String, ResourceVector<T>>,
    pub users: Vec<UserTerm<T>>,
    pub tradeoffs: TradeoffVector<T>,
}

impl<T: Real> CandidateScore<T> {
    pub fn is_discarded(&self) -> bool {
        self.f.is_none()
    }

    /// Unpenalized objective from the normalized terms.
    pub fn raw_objective(&self) -> T {
        let h = &self.tradeoffs;
        h.alpha * self.qos_norm - h.beta * self.cost_norm - h.lambda * self.ro_norm
    }
}

/// Single-node placements for every node in lexicographic id order
/// (`PL1`, `PL2`, ...), followed by configured multi-node placements.
pub fn enumerate_candidates<T: Real>(state: &OrchestratorState<T>) -> Result<Vec<Placement>, OrchestratorError> {
    if state.topology.nodes.is_empty() {
        return Err(OrchestratorError::EmptyTopology);
    }
    let mut out: Vec<Placement> = state
        .topology
        .sorted_node_ids()
        .into_iter()
        .enumerate()
        .map(|(i, node)| Placement::single(format!("PL{}", i + 1), node))
        .collect();
    out.extend(state.explicit.iter().cloned());
    Ok(out)
}

fn score_with<T: Real>(
    candidate: &Placement,
    state: &OrchestratorState<T>,
    routes: &RouteTable<T>,
) -> Result<CandidateScore<T>, OrchestratorError> {
    if state.users.is_empty() {
        return Err(OrchestratorError::EmptyService);
    }
    let ctx = CandidateContext {
        current: state.current.as_ref(),
        users: &state.users,
        topology: &state.topology,
        routes,
        throughput: state.throughput.as_ref(),
        overhead: &state.overhead,
        policy: &state.policy,
    };
    let eval = evaluate(candidate, &ctx)?;

    let mut qos_sum = T::zero();
    let mut terms = Vec::with_capacity(state.users.len());
    for (u, service) in state.users.iter().zip(&eval.qosc.users) {
        let uel = compute_uel(u, &state.scores)?;
        let weight = compute_weight(uel, &state.deployment, u.prefs, &state.combiner);
        let qos = user_qos(service.l_u, u.l_max, service.th, u.th_min);
        qos_sum += weight * qos;
        terms.push(UserTerm {
            user: u.id.clone(),
            node: service.node.clone(),
            uel,
            weight,
            latency: service.l_u,
            qos,
        });
    }
    let qos_norm = qos_sum / T::from_count(state.users.len());
    let cost_max = placement_cost_max(candidate, &eval.assignment, &state.topology)?;
    let cost_norm = normalized_placement_cost(eval.cost, cost_max);
    let ro_norm = eval.overhead.normalized;
    let penalty = eval.verdict.penalty();
    let h = state.tradeoffs;
    let f = (!eval.verdict.is_discarded())
        .then(|| h.alpha * qos_norm - h.beta * cost_norm - h.lambda * ro_norm - penalty);

    Ok(CandidateScore {
        placement_id: candidate.id.clone(),
        node_set: candidate.node_set.clone(),
        qos_norm,
        cost_norm,
        ro_norm,
        penalty,
        f,
        needs_scaling: eval.rac.needs_scaling(),
        demand: eval.rac.demand,
        verdict: eval.verdict,
        cost: eval.cost,
        cost_max,
        overhead: eval.overhead,
        users: terms,
        tradeoffs: h,
    })
}

/// Scores one candidate against the current state.
pub fn score_candidate<T: Real>(
    candidate: &Placement,
    state: &OrchestratorState<T>,
) -> Result<CandidateScore<T>, OrchestratorError> {
    score_with(candidate, state, &state.routes()?)
}

/// Scores every candidate; the result is ordered by placement id.
pub fn score_all<T: Real>(state: &OrchestratorState<T>) -> Result<Vec<CandidateScore<T>>, OrchestratorError> {
    let routes = state.routes()?;
    let mut scores = enumerate_candidates(state)?
        .iter()
        .map(|p| score_with(p, state, &routes))
        .collect::<Result<Vec<_>, _>>()?;
    scores.sort_by(|a, b| compare_ids(&a.placement_id, &b.placement_id));
    Ok(scores)
}

/// Index of the best non-discarded score. Near-equal scores (within the
/// trade-off tie tolerance) prefer the incumbent, then the lowest id.
pub fn select_best<T: Real>(scores: &[CandidateScore<T>], current: Option<&str>, tol: T) -> Option<usize> {
    let best = scores.iter().filter_map(|s| s.f).fold(None, |acc: Option<T>, f| {
        Some(acc.map_or(f, |a| a.max(f)))
    })?;
    let tied = || {
        scores
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.f.is_some_and(|f| best - f <= tol))
    };
    tied()
        .find(|(_, s)| Some(s.placement_id.as_str()) == current)
        .or_else(|| {
            tied().min_by(|(_, a), (_, b)| compare_ids(&a.placement_id, &b.placement_id))
        })
        .map(|(i, _)| i)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection<T> {
    pub best: Placement,
    pub f_best: T,
    pub scores: Vec<CandidateScore<T>>,
}

impl<T: Real> Selection<T> {
    pub fn best_score(&self) -> &CandidateScore<T> {
        self.scores
            .iter()
            .find(|s| s.placement_id == self.best.id)
            .expect("selected placement is scored")
    }
}

/// Argmax of the objective over candidates that survive the constraints.
pub fn find_best_placement<T: Real>(state: &OrchestratorState<T>) -> Result<Selection<T>, OrchestratorError> {
    let scores = score_all(state)?;
    let current = state.current.as_ref().map(|p| p.id.as_str());
    match select_best(&scores, current, state.tradeoffs.tie_tolerance()) {
        Some(i) => {
            let best = enumerate_candidates(state)?
                .into_iter()
                .find(|p| p.id == scores[i].placement_id)
                .expect("scored placement was enumerated");
            Ok(Selection {
                best,
                f_best: scores[i].f.expect("selected score is feasible"),
                scores,
            })
        }
        None => Err(OrchestratorError::NoFeasiblePlacement(discard_reasons(&scores))),
    }
}

fn discard_reasons<T: Real>(scores: &[CandidateScore<T>]) -> Vec<(String, String)> {
    scores
        .iter()
        .map(|s| (s.placement_id.clone(), s.verdict.discard_reason().unwrap_or_default()))
        .collect()
}

/// Rescheduling truth table. `rac_ok` means the best placement's provisioned
/// resources already cover the demand. No current placement counts as a
/// different one.
pub fn decide_rescheduling(j_best: &Placement, j_current: Option<&Placement>, rac_ok: bool) -> ReschedulingOp {
    let same = j_current.is_some_and(|c| c.id == j_best.id);
    match (same, rac_ok) {
        (true, true) => ReschedulingOp::None,
        (true, false) => ReschedulingOp::Scaling,
        (false, true) => ReschedulingOp::Migration,
        (false, false) => ReschedulingOp::ScalingAndMigration,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingDelta<T> {
    pub node: String,
    pub before: ResourceVector<T>,
    pub after: ResourceVector<T>,
}

/// Performs `op`. Scaling raises `r_assigned` to exactly the demand on the
/// affected nodes (component-wise max); migration switches the current
/// placement.
pub fn apply_rescheduling<T: Real>(
    state: &mut OrchestratorState<T>,
    op: ReschedulingOp,
    j_best: &Placement,
    demand: &BTreeMap<String, ResourceVector<T>>,
) -> Result<Vec<ScalingDelta<T>>, OrchestratorError> {
    let mut deltas = Vec::new();
    if op.scales() {
        for id in &j_best.node_set {
            let Some(d) = demand.get(id) else { continue };
            let node = state
                .topology
                .node_mut(id)
                .ok_or_else(|| ModelError::UnknownNode(id.clone()))?;
            if d.exceeds_any(&node.r_max) {
                return Err(OrchestratorError::ScalingBeyondCapacity {
                    node: id.clone(),
                    demand: d.to_string(),
                });
            }
            let after = node.r_assigned.component_max(*d);
            if after != node.r_assigned {
                deltas.push(ScalingDelta {
                    node: id.clone(),
                    before: node.r_assigned,
                    after,
                });
                node.r_assigned = after;
            }
        }
    }
    if op.migrates() {
        state.current = Some(j_best.clone());
    }
    Ok(deltas)
}

/// Outcome of one pass through the loop.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport<T> {
    pub step: usize,
    pub event: String,
    /// Placement in effect before the decision.
    pub j_current: Option<String>,
    pub j_best: Option<String>,
    pub f_best: Option<T>,
    pub op: ReschedulingOp,
    pub candidates: Vec<CandidateScore<T>>,
    pub scaling: Vec<ScalingDelta<T>>,
    /// Every candidate was discarded; the service stays where it was.
    pub degraded: bool,
    /// No active users; nothing was scored.
    pub parked: bool,
    pub post_state: StateDigest<T>,
}

fn apply_event<T: Real>(state: &mut OrchestratorState<T>, event: &ContextEvent<T>) -> Result<(), OrchestratorError> {
    match event {
        ContextEvent::UserJoined(user) => {
            if state.users.iter().any(|u| u.id == user.id) {
                return Err(OrchestratorError::DuplicateUser(user.id.clone()));
            }
            if !state.topology.ue_attachments.contains_key(&user.attachment) {
                return Err(ModelError::UnknownUe(user.attachment.clone()).into());
            }
            compute_uel(user, &state.scores)?;
            state.users.push((**user).clone());
        }
        ContextEvent::UserLeft(id) => {
            let before = state.users.len();
            state.users.retain(|u| &u.id != id);
            if state.users.len() == before {
                return Err(OrchestratorError::UnknownUser(id.clone()));
            }
        }
        ContextEvent::NodeResourcesChanged { node, r_assigned, r_max } => {
            let n = state
                .topology
                .node_mut(node)
                .ok_or_else(|| ModelError::UnknownNode(node.clone()))?;
            let new_max = r_max.unwrap_or(n.r_max);
            let new_assigned = r_assigned.unwrap_or(n.r_assigned).component_min(new_max);
            if !new_max.is_non_negative() || !new_assigned.is_non_negative() {
                return Err(OrchestratorError::InvalidEvent(format!("negative resources for `{node}`")));
            }
            if let Some(a) = r_assigned {
                if a.exceeds_any(&new_max) {
                    return Err(OrchestratorError::InvalidEvent(format!(
                        "r_assigned {a} exceeds r_max {new_max} on `{node}`"
                    )));
                }
            }
            n.r_max = new_max;
            n.r_assigned = new_assigned;
        }
        ContextEvent::LinkLatencyChanged { a, b, latency_ms } => {
            if !(*latency_ms >= T::zero()) {
                return Err(OrchestratorError::InvalidEvent(format!("negative latency on {a}-{b}")));
            }
            let link = state
                .topology
                .links
                .iter_mut()
                .find(|l| l.connects(a, b))
                .ok_or_else(|| OrchestratorError::UnknownLink(a.clone(), b.clone()))?;
            link.latency_ms = *latency_ms;
        }
    }
    Ok(())
}

/// Applies the event, finds the best placement, reschedules, and reports.
/// An invalid event leaves the state untouched.
pub fn step<T: Real>(state: &mut OrchestratorState<T>, event: &ContextEvent<T>) -> Result<StepReport<T>, OrchestratorError> {
    let mut next = state.clone();
    apply_event(&mut next, event)?;
    next.step += 1;
    let j_current = next.current.as_ref().map(|p| p.id.clone());

    let mut report = StepReport {
        step: next.step,
        event: event.summary(),
        j_current,
        j_best: None,
        f_best: None,
        op: ReschedulingOp::None,
        candidates: Vec::new(),
        scaling: Vec::new(),
        degraded: false,
        parked: false,
        post_state: next.digest(),
    };

    if next.users.is_empty() {
        report.parked = true;
        *state = next;
        return Ok(report);
    }

    let scores = score_all(&next)?;
    let current = next.current.as_ref().map(|p| p.id.as_str());
    match select_best(&scores, current, next.tradeoffs.tie_tolerance()) {
        Some(i) => {
            let winner = &scores[i];
            let best = enumerate_candidates(&next)?
                .into_iter()
                .find(|p| p.id == winner.placement_id)
                .expect("scored placement was enumerated");
            let op = decide_rescheduling(&best, next.current.as_ref(), !winner.needs_scaling);
            report.scaling = apply_rescheduling(&mut next, op, &best, &winner.demand)?;
            report.j_best = Some(best.id.clone());
            report.f_best = winner.f;
            report.op = op;
        }
        None => report.degraded = true,
    }
    report.candidates = scores;
    report.post_state = next.digest();
    *state = next;
    Ok(report)
}

/// Ordered step reports for a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace<T> {
    pub reports: Vec<StepReport<T>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{} step(s) failed: {}", failures.len(), failures.iter().map(|(i, e)| format!("step {i}: {e}")).collect::<Vec<_>>().join("; "))]
pub struct RunError<T: Real> {
    /// Reports of the steps that did succeed.
    pub trace: Trace<T>,
    pub failures: Vec<(usize, OrchestratorError)>,
}

/// Folds [`step`] over the events. Failing events are skipped and collected
/// with their 1-based position.
pub fn run_events<T: Real>(
    mut state: OrchestratorState<T>,
    events: &[ContextEvent<T>],
) -> Result<Trace<T>, RunError<T>> {
    let mut trace = Trace::default();
    let mut failures = Vec::new();
    for (i, event) in events.iter().enumerate() {
        match step(&mut state, event) {
            Ok(r) => trace.reports.push(r),
            Err(e) => failures.push((i + 1, e)),
        }
    }
    if failures.is_empty() {
        Ok(trace)
    } else {
        Err(RunError { trace, failures })
    }
}

/// Orders scores by objective, best first; discarded last.
pub fn rank<T: Real>(scores: &[CandidateScore<T>]) -> Vec<&CandidateScore<T>> {
    let mut v: Vec<_> = scores.iter().collect();
    v.sort_by(|a, b| match (a.f, b.f) {
        (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(Ordering::Equal),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then_with(|| compare_ids(&a.placement_id, &b.placement_id)));
    v
}
