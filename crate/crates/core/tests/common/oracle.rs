//! Brute-force reference scorer for single-node placements.
//!
//! Straight transcription of the objective: all-pairs latencies by
//! Floyd-Warshall, engagement as a plain weighted sum, weights equal to
//! engagement, linear QoS, price-times-demand cost over price-times-capacity
//! per user, fixed 0.5 / 1.0 overheads over 1.5. Every constraint is Hard with
//! unlimited budgets. Shares no code with the engine beyond the input types.

use std::collections::BTreeMap;

use continuum_core::model::{ScoreTable, Topology, UserProfile};

pub struct OracleConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct OracleCandidate {
    pub node: String,
    /// `None` when discarded.
    pub f: Option<f64>,
    pub needs_scaling: bool,
}

fn all_pairs(topo: &Topology<f64>) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut names: Vec<String> = topo.nodes.iter().map(|n| n.id.clone()).collect();
    for ue in topo.ue_attachments.keys() {
        names.push(ue.clone());
    }
    for l in &topo.links {
        names.push(l.a.clone());
        names.push(l.b.clone());
    }
    names.sort();
    names.dedup();
    let n = names.len();
    let idx = |s: &str| names.iter().position(|x| x == s).unwrap();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for l in &topo.links {
        let (a, b) = (idx(&l.a), idx(&l.b));
        d[a][b] = d[a][b].min(l.latency_ms);
        d[b][a] = d[b][a].min(l.latency_ms);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    (names, d)
}

fn uel(u: &UserProfile<f64>, t: &ScoreTable<f64>) -> f64 {
    let role = match u.role {
        continuum_core::model::Role::Participant => "Participant",
        continuum_core::model::Role::Producer => "Producer",
        continuum_core::model::Role::Audience => "Audience",
        continuum_core::model::Role::Moderator => "Moderator",
    };
    let inter = match u.interaction {
        continuum_core::model::Interaction::NtoM => "NtoM",
        continuum_core::model::Interaction::OneToN => "OneToN",
        continuum_core::model::Interaction::None => "None",
    };
    let perc = match u.self_perception {
        continuum_core::model::Perception::PointCloud => "PointCloud",
        continuum_core::model::Perception::Avatar3D => "Avatar3D",
        continuum_core::model::Perception::None => "None",
    };
    t.weights.quality * t.quality[&u.quality_profile]
        + t.weights.role * t.role[role]
        + t.weights.interaction * t.interaction[inter]
        + t.weights.perception * t.perception[perc]
}

/// Scores every node as a single-node placement.
pub fn score_all(
    topo: &Topology<f64>,
    users: &[UserProfile<f64>],
    table: &ScoreTable<f64>,
    current: Option<&str>,
    cfg: &OracleConfig,
) -> Vec<OracleCandidate> {
    let (names, d) = all_pairs(topo);
    let idx = |s: &str| names.iter().position(|x| x == s).unwrap();
    let mut nodes: Vec<_> = topo.nodes.iter().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let n_users = users.len() as f64;

    nodes
        .iter()
        .map(|node| {
            let mut vcpu = 0.0;
            let mut ram = 0.0;
            let mut gpu = 0.0;
            let mut qos_sum = 0.0;
            let mut latency_ok = true;
            for u in users {
                vcpu += u.r_usage.vcpu;
                ram += u.r_usage.ram;
                gpu += u.r_usage.gpu;
                let src = if topo.links.iter().any(|l| l.a == u.attachment || l.b == u.attachment) {
                    u.attachment.clone()
                } else {
                    topo.ue_attachments[&u.attachment].clone()
                };
                let l_u = u.l_proc + d[idx(&src)][idx(&node.id)];
                if !(l_u <= u.l_max) {
                    latency_ok = false;
                }
                let q = if l_u.is_finite() { (1.0 - l_u / u.l_max).max(0.0) } else { 0.0 };
                qos_sum += uel(u, table) * q;
            }
            let fits = vcpu <= node.r_max.vcpu && ram <= node.r_max.ram && gpu <= node.r_max.gpu;
            let needs_scaling = fits
                && (vcpu > node.r_assigned.vcpu || ram > node.r_assigned.ram || gpu > node.r_assigned.gpu);
            let discarded = !latency_ok || !fits || (needs_scaling && !node.scalable);

            let cost = node.price.vcpu * vcpu + node.price.ram * ram + node.price.gpu * gpu;
            let cost_max = n_users
                * (node.price.vcpu * node.r_max.vcpu + node.price.ram * node.r_max.ram + node.price.gpu * node.r_max.gpu);
            let cost_norm = (cost / cost_max).clamp(0.0, 1.0);
            let s_oh = if needs_scaling { 0.5 } else { 0.0 };
            let m_oh = if current == Some(node.id.as_str()) { 0.0 } else { 1.0 };
            let ro_norm = (s_oh + m_oh) / 1.5;
            let qos_norm = qos_sum / n_users;
            let f = cfg.alpha * qos_norm - cfg.beta * cost_norm - cfg.lambda * ro_norm;
            OracleCandidate {
                node: node.id.clone(),
                f: (!discarded).then_some(f),
                needs_scaling,
            }
        })
        .collect()
}

/// Argmax with incumbent-first, then lowest-position tie-break.
pub fn argmax(cands: &[OracleCandidate], current: Option<&str>, tol: f64) -> Option<usize> {
    let best = cands.iter().filter_map(|c| c.f).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    let tied: Vec<usize> = (0..cands.len())
        .filter(|&i| cands[i].f.is_some_and(|f| best - f <= tol))
        .collect();
    tied.iter()
        .copied()
        .find(|&i| Some(cands[i].node.as_str()) == current)
        .or_else(|| tied.first().copied())
}

/// Replays a join/leave sequence with minimal scaling. Returns per-step
/// candidate lists and chosen node.
pub fn replay(
    topo: &Topology<f64>,
    roster: &BTreeMap<String, UserProfile<f64>>,
    events: &[(bool, String)],
    table: &ScoreTable<f64>,
    cfg: &OracleConfig,
    tol: f64,
) -> Vec<(Vec<OracleCandidate>, Option<String>)> {
    let mut topo = topo.clone();
    let mut active: Vec<UserProfile<f64>> = Vec::new();
    let mut current: Option<String> = None;
    let mut out = Vec::new();
    for (join, id) in events {
        if *join {
            active.push(roster[id].clone());
        } else {
            active.retain(|u| &u.id != id);
        }
        if active.is_empty() {
            out.push((Vec::new(), current.clone()));
            continue;
        }
        let cands = score_all(&topo, &active, table, current.as_deref(), cfg);
        let pick = argmax(&cands, current.as_deref(), tol);
        if let Some(i) = pick {
            let chosen = cands[i].node.clone();
            if cands[i].needs_scaling {
                let (mut v, mut r, mut g) = (0.0, 0.0, 0.0);
                for u in &active {
                    v += u.r_usage.vcpu;
                    r += u.r_usage.ram;
                    g += u.r_usage.gpu;
                }
                let node = topo.nodes.iter_mut().find(|n| n.id == chosen).unwrap();
                node.r_assigned.vcpu = node.r_assigned.vcpu.max(v);
                node.r_assigned.ram = node.r_assigned.ram.max(r);
                node.r_assigned.gpu = node.r_assigned.gpu.max(g);
            }
            current = Some(chosen);
        }
        out.push((cands, current.clone()));
    }
    out
}
