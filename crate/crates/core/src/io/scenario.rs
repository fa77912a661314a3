use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::ConstraintPolicy;
use crate::cost::OverheadModel;
use crate::model::{
    compute_uel, DeploymentMode, Distribution, Processing, ResourceVector, ScoreTable, ThroughputTable, Topology,
    UserProfile, WeightCombiner,
};
use crate::orchestrator::{ContextEvent, OrchestratorState, TradeoffVector};
use crate::placement::Placement;
use crate::scalar::Real;

pub const SCHEMA_VERSION: u32 = 1;

/// A scheduled context change, referencing entities by id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum EventSpec<T> {
    UserJoined {
        user: String,
    },
    UserLeft {
        user: String,
    },
    NodeResourcesChanged {
        node: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_assigned: Option<ResourceVector<T>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<ResourceVector<T>>,
    },
    LinkLatencyChanged {
        a: String,
        b: String,
        latency_ms: T,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct DeploymentSection<T> {
    #[serde(default)]
    pub mode: Distribution,
    #[serde(default = "one")]
    pub uol: T,
    #[serde(default)]
    pub processing: Processing,
    /// Points of presence for auto-enumerated placements. Only 1 is enumerated.
    #[serde(default = "one_pop")]
    pub pop: usize,
    #[serde(default)]
    pub combiner: WeightCombiner<T>,
}

fn one<T: Real>() -> T {
    T::one()
}

fn one_pop() -> usize {
    1
}

impl<T: Real> Default for DeploymentSection<T> {
    fn default() -> Self {
        Self {
            mode: Distribution::default(),
            uol: T::one(),
            processing: Processing::default(),
            pop: 1,
            combiner: WeightCombiner::default(),
        }
    }
}

impl<T: Real> DeploymentSection<T> {
    pub fn mode(&self) -> DeploymentMode<T> {
        DeploymentMode {
            mode: self.mode,
            uol: self.uol,
            processing: self.processing,
        }
    }
}

/// Everything needed to replay one orchestration experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct ScenarioFile<T> {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    pub tradeoffs: TradeoffVector<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput: Option<ThroughputTable<T>>,
    pub topology: Topology<T>,
    pub users: Vec<UserProfile<T>>,
    #[serde(default)]
    pub events: Vec<EventSpec<T>>,
    pub score_tables: ScoreTable<T>,
    #[serde(default)]
    pub policy: ConstraintPolicy<T>,
    #[serde(default)]
    pub overhead: OverheadModel<T>,
    #[serde(default)]
    pub deployment: DeploymentSection<T>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub placements: Vec<Placement>,
}

/// One invariant breach, located by a dotted path into the file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub locator: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.locator, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid scenario:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error("cannot serialize scenario: {0}")]
    Serialize(String),
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, locator: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            locator: locator.into(),
            message: message.into(),
        });
    }

    fn extend(&mut self, prefix: &str, items: Vec<(String, String)>) {
        for (loc, msg) in items {
            self.push(format!("{prefix}.{loc}"), msg);
        }
    }
}

fn bad_vector<T: Real>(v: &ResourceVector<T>) -> bool {
    !v.is_non_negative() || !v.is_finite()
}

impl<T: Real> ScenarioFile<T> {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        // Check the version before the full schema so old files get a clear error.
        #[derive(Deserialize)]
        struct Header {
            schema_version: Option<u32>,
        }
        let header: Header = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        match header.schema_version {
            Some(SCHEMA_VERSION) => {}
            Some(found) => {
                return Err(ScenarioError::SchemaVersion {
                    found,
                    expected: SCHEMA_VERSION,
                })
            }
            None => return Err(ScenarioError::Parse("missing `schema_version`".into())),
        }
        let scenario: Self = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        toml::to_string_pretty(self).map_err(|e| ScenarioError::Serialize(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let text = self.to_toml_string()?;
        std::fs::write(path, text).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Every invariant breach in the file.
    pub fn violations(&self) -> Vec<Violation> {
        let mut c = Collector(Vec::new());
        if self.schema_version != SCHEMA_VERSION {
            c.push("schema_version", format!("expected {SCHEMA_VERSION}"));
        }
        self.check_topology(&mut c);
        self.check_users(&mut c);
        self.check_events(&mut c);
        c.extend("score_tables", self.score_tables.violations());
        c.extend("policy", self.policy.violations());
        c.extend("overhead", self.overhead.violations());
        if !self.tradeoffs.is_valid() {
            c.push("tradeoffs", "weights must be finite, >= 0 and not all zero");
        }
        let d = &self.deployment;
        if !(d.uol >= T::zero() && d.uol <= T::one()) {
            c.push("deployment.uol", format!("{} outside [0, 1]", d.uol));
        }
        if d.pop == 0 {
            c.push("deployment.pop", "must be >= 1");
        } else if d.pop > 1 && self.placements.is_empty() {
            c.push("deployment.pop", "pop > 1 requires explicit [[placements]]");
        }
        if let WeightCombiner::Extended { slope } = d.combiner {
            if !(slope >= T::zero()) || !slope.is_finite() {
                c.push("deployment.combiner.slope", "must be finite and >= 0");
            }
        }
        if let Some(t) = &self.throughput {
            for (k, v) in t {
                if !(*v >= T::zero()) || !v.is_finite() {
                    c.push(format!("throughput.{k}"), "bitrate must be finite and >= 0");
                }
            }
        }
        self.check_placements(&mut c);
        c.0
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(v))
        }
    }

    fn check_topology(&self, c: &mut Collector) {
        let topo = &self.topology;
        if topo.nodes.is_empty() {
            c.push("topology.nodes", "at least one compute node is required");
        }
        let mut ids = BTreeSet::new();
        for (i, n) in topo.nodes.iter().enumerate() {
            let loc = format!("topology.nodes[{i}] ({})", n.id);
            if !ids.insert(n.id.as_str()) {
                c.push(&loc, "duplicate node id");
            }
            if topo.ue_attachments.contains_key(&n.id) {
                c.push(&loc, "node id collides with a UE id");
            }
            for (field, v) in [("r_max", &n.r_max), ("r_assigned", &n.r_assigned), ("price", &n.price)] {
                if bad_vector(v) {
                    c.push(format!("{loc}.{field}"), "components must be finite and >= 0");
                }
            }
            if n.r_assigned.exceeds_any(&n.r_max) {
                c.push(format!("{loc}.r_assigned"), format!("{} exceeds r_max {}", n.r_assigned, n.r_max));
            }
            if !(n.t_action >= T::zero()) {
                c.push(format!("{loc}.t_action"), "must be >= 0");
            }
            if !(n.energy_rate >= T::zero()) || !n.tariff.is_finite() {
                c.push(format!("{loc}.energy_rate"), "energy rate must be >= 0 and tariff finite");
            }
        }
        let known = |v: &str| ids.contains(v) || topo.ue_attachments.contains_key(v);
        for (i, l) in topo.links.iter().enumerate() {
            let loc = format!("topology.links[{i}]");
            if l.a == l.b {
                c.push(&loc, "endpoints must be distinct");
            }
            for end in [&l.a, &l.b] {
                if !known(end) {
                    c.push(&loc, format!("unknown endpoint `{end}`"));
                }
            }
            if !(l.latency_ms >= T::zero()) || !l.latency_ms.is_finite() {
                c.push(format!("{loc}.latency_ms"), "must be finite and >= 0");
            }
            if let Some(cap) = l.capacity_mbps {
                if !(cap > T::zero()) {
                    c.push(format!("{loc}.capacity_mbps"), "must be > 0");
                }
            }
        }
        let mut dangling = false;
        for (ue, node) in &topo.ue_attachments {
            if !ids.contains(node.as_str()) {
                dangling = true;
                let users: Vec<&str> = self
                    .users
                    .iter()
                    .filter(|u| &u.attachment == ue)
                    .map(|u| u.id.as_str())
                    .collect();
                let who = if users.is_empty() {
                    String::new()
                } else {
                    format!(" (used by {})", users.join(", "))
                };
                c.push(format!("topology.ue_attachments.{ue}"), format!("unknown node `{node}`{who}"));
            }
        }
        if !dangling && !topo.nodes.is_empty() {
            for (ue, node) in topo.unreachable_pairs() {
                c.push("topology.links", format!("node `{node}` is unreachable from UE `{ue}`"));
            }
        }
    }

    fn check_users(&self, c: &mut Collector) {
        let mut ids = BTreeSet::new();
        for (i, u) in self.users.iter().enumerate() {
            let loc = format!("users[{i}] ({})", u.id);
            if !ids.insert(u.id.as_str()) {
                c.push(&loc, "duplicate user id");
            }
            if !(u.l_max > T::zero()) || !u.l_max.is_finite() {
                c.push(format!("{loc}.l_max"), "must be finite and > 0");
            }
            if !(u.l_proc >= T::zero()) || !u.l_proc.is_finite() {
                c.push(format!("{loc}.l_proc"), "must be finite and >= 0");
            }
            if bad_vector(&u.r_usage) {
                c.push(format!("{loc}.r_usage"), "components must be finite and >= 0");
            }
            if !(u.prefs >= T::zero() && u.prefs <= T::one()) {
                c.push(format!("{loc}.prefs"), "must be in [0, 1]");
            }
            if let Some(th) = u.th_min {
                if !(th >= T::zero()) {
                    c.push(format!("{loc}.th_min"), "must be >= 0");
                }
            }
            let content = &u.content;
            for (f, v) in [
                ("static_complexity", content.static_complexity),
                ("dynamic_complexity", content.dynamic_complexity),
            ] {
                if !(v >= T::zero()) || !v.is_finite() {
                    c.push(format!("{loc}.content.{f}"), "must be finite and >= 0");
                }
            }
            match self.topology.ue_attachments.get(&u.attachment) {
                None => c.push(format!("{loc}.attachment"), format!("unknown UE `{}`", u.attachment)),
                Some(node) if self.topology.node(node).is_none() => c.push(
                    format!("{loc}.attachment"),
                    format!("UE `{}` attaches to unknown node `{node}`", u.attachment),
                ),
                Some(_) => {}
            }
            if let Err(e) = compute_uel(u, &self.score_tables) {
                c.push(&loc, e.to_string());
            }
        }
    }

    fn check_events(&self, c: &mut Collector) {
        let roster: BTreeSet<&str> = self.users.iter().map(|u| u.id.as_str()).collect();
        for (i, e) in self.events.iter().enumerate() {
            let loc = format!("events[{i}]");
            match e {
                EventSpec::UserJoined { user } | EventSpec::UserLeft { user } => {
                    if !roster.contains(user.as_str()) {
                        c.push(format!("{loc}.user"), format!("unknown user `{user}`"));
                    }
                }
                EventSpec::NodeResourcesChanged { node, r_assigned, r_max } => {
                    if self.topology.node(node).is_none() {
                        c.push(format!("{loc}.node"), format!("unknown node `{node}`"));
                    }
                    for v in r_assigned.iter().chain(r_max.iter()) {
                        if bad_vector(v) {
                            c.push(&loc, "resource components must be finite and >= 0");
                        }
                    }
                }
                EventSpec::LinkLatencyChanged { a, b, latency_ms } => {
                    if !self.topology.links.iter().any(|l| l.connects(a, b)) {
                        c.push(&loc, format!("no link between `{a}` and `{b}`"));
                    }
                    if !(*latency_ms >= T::zero()) || !latency_ms.is_finite() {
                        c.push(format!("{loc}.latency_ms"), "must be finite and >= 0");
                    }
                }
            }
        }
    }

    fn check_placements(&self, c: &mut Collector) {
        let n_auto = self.topology.nodes.len();
        let auto: BTreeSet<String> = (1..=n_auto).map(|i| format!("PL{i}")).collect();
        let mut seen = BTreeSet::new();
        for (i, p) in self.placements.iter().enumerate() {
            let loc = format!("placements[{i}] ({})", p.id);
            if auto.contains(&p.id) {
                c.push(&loc, "id collides with an auto-enumerated placement");
            }
            if !seen.insert(p.id.as_str()) {
                c.push(&loc, "duplicate placement id");
            }
            for msg in p.shape_errors() {
                c.push(&loc, msg);
            }
            for n in &p.node_set {
                if self.topology.node(n).is_none() {
                    c.push(format!("{loc}.node_set"), format!("unknown node `{n}`"));
                }
            }
        }
    }

    /// The orchestrator state before the first event.
    pub fn initial_state(&self) -> OrchestratorState<T> {
        let mut state = OrchestratorState::new(self.topology.clone(), self.score_tables.clone(), self.tradeoffs);
        state.policy = self.policy.clone();
        state.overhead = self.overhead.clone();
        state.deployment = self.deployment.mode();
        state.combiner = self.deployment.combiner.clone();
        state.throughput = self.throughput.clone();
        state.explicit = self.placements.clone();
        state
    }

    /// Resolves the event schedule against the user roster.
    pub fn context_events(&self) -> Vec<ContextEvent<T>> {
        let roster: BTreeMap<&str, &UserProfile<T>> = self.users.iter().map(|u| (u.id.as_str(), u)).collect();
        self.events
            .iter()
            .map(|e| match e {
                EventSpec::UserJoined { user } => match roster.get(user.as_str()) {
                    Some(u) => ContextEvent::UserJoined(Box::new((*u).clone())),
                    // Unreachable after validation; surfaces as a step error otherwise.
                    None => ContextEvent::UserLeft(user.clone()),
                },
                EventSpec::UserLeft { user } => ContextEvent::UserLeft(user.clone()),
                EventSpec::NodeResourcesChanged { node, r_assigned, r_max } => ContextEvent::NodeResourcesChanged {
                    node: node.clone(),
                    r_assigned: *r_assigned,
                    r_max: *r_max,
                },
                EventSpec::LinkLatencyChanged { a, b, latency_ms } => ContextEvent::LinkLatencyChanged {
                    a: a.clone(),
                    b: b.clone(),
                    latency_ms: *latency_ms,
                },
            })
            .collect()
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario<T: Real>(path: impl AsRef<Path>) -> Result<ScenarioFile<T>, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioFile::parse(&text)
}

/// The bundled reference scenario.
pub const REFERENCE_SCENARIO: &str = include_str!("../../scenarios/reference.scenario");

pub fn reference_scenario<T: Real>() -> ScenarioFile<T> {
    ScenarioFile::parse(REFERENCE_SCENARIO).expect("bundled reference scenario is valid")
}
