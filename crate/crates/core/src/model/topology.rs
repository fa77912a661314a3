use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::resources::ResourceVector;
use super::ModelError;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    DataCenter,
    Edge,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Access {
    #[default]
    Closed,
    Open,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interface {
    Wireless,
    #[default]
    Wired,
}

/// A compute node that can host the service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec<T> {
    pub id: String,
    pub tier: Tier,
    /// Hard capacity.
    pub r_max: ResourceVector<T>,
    /// Currently provisioned resources; grows when the service scales.
    pub r_assigned: ResourceVector<T>,
    /// Currency per resource unit per hour.
    pub price: ResourceVector<T>,
    /// Energy units consumed per hour.
    #[serde(default)]
    pub energy_rate: T,
    /// Currency per energy unit. Negative values reward clean energy.
    #[serde(default)]
    pub tariff: T,
    #[serde(default = "default_true")]
    pub scalable: bool,
    /// Seconds needed to complete a scale or migrate actuation.
    #[serde(default)]
    pub t_action: T,
    #[serde(default)]
    pub access: Access,
    #[serde(default)]
    pub region: String,
    #[serde(default)]
    pub domain: String,
}

fn default_true() -> bool {
    true
}

impl<T: Real> NodeSpec<T> {
    /// Energy term of the node cost, `tariff * energy_rate`.
    pub fn energy_cost(&self) -> T {
        self.tariff * self.energy_rate
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link<T> {
    pub a: String,
    pub b: String,
    /// One-way latency in milliseconds.
    pub latency_ms: T,
    #[serde(default)]
    pub interface: Interface,
    /// Mbps; unlimited when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_mbps: Option<T>,
}

impl<T> Link<T> {
    pub fn connects(&self, x: &str, y: &str) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }
}

/// Network latency that keeps "unreachable" apart from "slow".
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Latency<T> {
    Finite(T),
    Unreachable,
}

impl<T: Real> Latency<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Latency::Finite(v) => Some(v),
            Latency::Unreachable => None,
        }
    }

    pub fn is_reachable(&self) -> bool {
        matches!(self, Latency::Finite(_))
    }

    /// Numeric view, `+inf` when unreachable.
    pub fn as_value(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }
}

impl<T: Real> Add for Latency<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Latency::Finite(a), Latency::Finite(b)) => Latency::Finite(a + b),
            _ => Latency::Unreachable,
        }
    }
}

impl<T: Real> fmt::Display for Latency<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Latency::Finite(v) => write!(f, "{v} ms"),
            Latency::Unreachable => f.write_str("unreachable"),
        }
    }
}

/// Shortest route from a UE to a node.
#[derive(Clone, Debug, PartialEq)]
pub struct Route<T> {
    pub latency: Latency<T>,
    /// Smallest link capacity on the route; `None` when no link on it is capped.
    pub bottleneck_mbps: Option<T>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Topology<T> {
    pub nodes: Vec<NodeSpec<T>>,
    #[serde(default)]
    pub links: Vec<Link<T>>,
    /// UE identifier to the node it attaches through.
    #[serde(default)]
    pub ue_attachments: BTreeMap<String, String>,
}

impl<T: Real> Topology<T> {
    pub fn node(&self, id: &str) -> Option<&NodeSpec<T>> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut NodeSpec<T>> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    /// Node ids in lexicographic order.
    pub fn sorted_node_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        ids.sort_unstable();
        ids
    }

    /// Every vertex of the latency graph: nodes, attached UEs and link endpoints.
    fn vertices(&self) -> BTreeSet<&str> {
        let mut v: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        v.extend(self.ue_attachments.keys().map(String::as_str));
        for l in &self.links {
            v.insert(&l.a);
            v.insert(&l.b);
        }
        v
    }

    /// Where shortest-path search starts for a UE: the UE vertex itself when a
    /// link touches it, otherwise its attachment node (zero access latency).
    fn source_for<'a>(&'a self, ue: &'a str) -> Result<&'a str, ModelError> {
        let host = self
            .ue_attachments
            .get(ue)
            .ok_or_else(|| ModelError::UnknownUe(ue.to_string()))?;
        if self.links.iter().any(|l| l.a == ue || l.b == ue) {
            Ok(ue)
        } else {
            Ok(host.as_str())
        }
    }

    /// Single-source shortest routes from a UE to every compute node.
    pub fn routes_from(&self, ue: &str) -> Result<BTreeMap<String, Route<T>>, ModelError> {
        let source = self.source_for(ue)?;
        let vertices: Vec<&str> = self.vertices().into_iter().collect();
        let index: BTreeMap<&str, usize> =
            vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let n = vertices.len();
        let mut adj: Vec<Vec<(usize, T, Option<T>)>> = vec![Vec::new(); n];
        for l in &self.links {
            let (a, b) = (index[l.a.as_str()], index[l.b.as_str()]);
            adj[a].push((b, l.latency_ms, l.capacity_mbps));
            adj[b].push((a, l.latency_ms, l.capacity_mbps));
        }

        // Dense Dijkstra; graphs here have tens of vertices.
        let mut dist = vec![T::infinity(); n];
        let mut bottleneck: Vec<Option<T>> = vec![None; n];
        let mut done = vec![false; n];
        dist[index[source]] = T::zero();
        loop {
            let next = (0..n)
                .filter(|&i| !done[i] && dist[i].is_finite())
                .min_by(|&i, &j| dist[i].partial_cmp(&dist[j]).unwrap().then(i.cmp(&j)));
            let Some(u) = next else { break };
            done[u] = true;
            for &(v, w, cap) in &adj[u] {
                let cand = dist[u] + w;
                if cand < dist[v] {
                    dist[v] = cand;
                    bottleneck[v] = match (bottleneck[u], cap) {
                        (Some(x), Some(y)) => Some(x.min(y)),
                        (x, y) => x.or(y),
                    };
                }
            }
        }

        Ok(self
            .nodes
            .iter()
            .map(|node| {
                let i = index[node.id.as_str()];
                let latency = if dist[i].is_finite() {
                    Latency::Finite(dist[i])
                } else {
                    Latency::Unreachable
                };
                (
                    node.id.clone(),
                    Route {
                        latency,
                        bottleneck_mbps: bottleneck[i],
                    },
                )
            })
            .collect())
    }

    /// Plain reachability between two graph vertices.
    pub(crate) fn vertex_reachable(&self, from: &str, to: &str) -> bool {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            for l in &self.links {
                let other = if l.a == v {
                    l.b.as_str()
                } else if l.b == v {
                    l.a.as_str()
                } else {
                    continue;
                };
                if seen.insert(other) {
                    stack.push(other);
                }
            }
        }
        false
    }

    /// UEs whose search source cannot reach `node`.
    pub(crate) fn unreachable_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for ue in self.ue_attachments.keys() {
            let Ok(src) = self.source_for(ue) else { continue };
            for node in &self.nodes {
                if !self.vertex_reachable(src, &node.id) {
                    out.push((ue.clone(), node.id.clone()));
                }
            }
        }
        out
    }
}

/// Shortest routes from a set of UEs to every node, computed once per step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RouteTable<T> {
    routes: BTreeMap<String, BTreeMap<String, Route<T>>>,
}

impl<T: Real> RouteTable<T> {
    pub fn build<'a>(topo: &Topology<T>, ues: impl IntoIterator<Item = &'a str>) -> Result<Self, ModelError> {
        let mut routes = BTreeMap::new();
        for ue in ues {
            if !routes.contains_key(ue) {
                routes.insert(ue.to_string(), topo.routes_from(ue)?);
            }
        }
        Ok(Self { routes })
    }

    pub fn route(&self, ue: &str, node: &str) -> Result<&Route<T>, ModelError> {
        self.routes
            .get(ue)
            .ok_or_else(|| ModelError::UnknownUe(ue.to_string()))?
            .get(node)
            .ok_or_else(|| ModelError::UnknownNode(node.to_string()))
    }
}

/// Minimum-sum-of-link-latencies from a UE to a compute node.
pub fn net_latency<T: Real>(topo: &Topology<T>, ue: &str, node: &str) -> Result<Latency<T>, ModelError> {
    if topo.node(node).is_none() {
        return Err(ModelError::UnknownNode(node.to_string()));
    }
    let routes = topo.routes_from(ue)?;
    Ok(routes[node].latency)
}
