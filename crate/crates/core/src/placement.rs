use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// User id to serving node id.
pub type Assignment = BTreeMap<String, String>;

/// How users are spread over the nodes of a placement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentRule {
    AllToSingleNode(String),
    /// Users missing from the map are served by the first node of the set.
    Explicit(BTreeMap<String, String>),
}

/// A candidate set of serving nodes for the service.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub id: String,
    pub node_set: Vec<String>,
    pub assignment: AssignmentRule,
}

impl Placement {
    pub fn single(id: impl Into<String>, node: impl Into<String>) -> Self {
        let node = node.into();
        Self {
            id: id.into(),
            node_set: vec![node.clone()],
            assignment: AssignmentRule::AllToSingleNode(node),
        }
    }

    /// Number of points of presence.
    pub fn pop(&self) -> usize {
        self.node_set.len()
    }

    pub fn serving_node(&self, user: &str) -> &str {
        match &self.assignment {
            AssignmentRule::AllToSingleNode(node) => node,
            AssignmentRule::Explicit(map) => map
                .get(user)
                .map(String::as_str)
                .unwrap_or_else(|| self.node_set[0].as_str()),
        }
    }

    pub fn assign<'a>(&self, users: impl IntoIterator<Item = &'a str>) -> Assignment {
        users
            .into_iter()
            .map(|u| (u.to_string(), self.serving_node(u).to_string()))
            .collect()
    }

    /// Structural problems, independent of any topology.
    pub fn shape_errors(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.node_set.is_empty() {
            out.push("node_set is empty".to_string());
        }
        let mut sorted = self.node_set.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.node_set.len() {
            out.push("node_set has duplicates".to_string());
        }
        match &self.assignment {
            AssignmentRule::AllToSingleNode(node) => {
                if self.pop() != 1 || self.node_set[0] != *node {
                    out.push(format!("all_to_single_node `{node}` requires node_set = [\"{node}\"]"));
                }
            }
            AssignmentRule::Explicit(map) => {
                for (user, node) in map {
                    if !self.node_set.contains(node) {
                        out.push(format!("user `{user}` assigned to `{node}` outside node_set"));
                    }
                }
            }
        }
        out
    }
}

/// Natural ordering on placement ids: `PL2 < PL10`, plain text otherwise.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let digits = s.len() - s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then_with(|| a.cmp(b))
}
