//! Random valid scenarios for property tests.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use continuum_core::constraints::ConstraintPolicy;
use continuum_core::cost::OverheadModel;
use continuum_core::io::scenario::{DeploymentSection, EventSpec, SCHEMA_VERSION};
use continuum_core::io::ScenarioFile;
use continuum_core::model::{
    Access, ContentDescriptor, Interaction, Interface, Link, NodeSpec, Perception, ResourceVector, Role,
    ScoreTable, Tier, Topology, UelWeights, UserProfile,
};
use continuum_core::orchestrator::TradeoffVector;

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_nodes: usize,
    pub max_users: usize,
}

pub const DEFAULT_LIMITS: Limits = Limits {
    max_nodes: 8,
    max_users: 12,
};

pub const SMALL_LIMITS: Limits = Limits {
    max_nodes: 4,
    max_users: 3,
};

const ROLES: [(Role, &str); 4] = [
    (Role::Participant, "Participant"),
    (Role::Producer, "Producer"),
    (Role::Audience, "Audience"),
    (Role::Moderator, "Moderator"),
];
const INTERACTIONS: [(Interaction, &str); 3] = [
    (Interaction::NtoM, "NtoM"),
    (Interaction::OneToN, "OneToN"),
    (Interaction::None, "None"),
];
const PERCEPTIONS: [(Perception, &str); 3] = [
    (Perception::PointCloud, "PointCloud"),
    (Perception::Avatar3D, "Avatar3D"),
    (Perception::None, "None"),
];
const QUALITIES: [&str; 3] = ["QP1", "QP2", "QP3"];

fn score_table(rng: &mut ChaCha8Rng) -> ScoreTable<f64> {
    let mut col = |keys: &[&str]| -> BTreeMap<String, f64> {
        keys.iter().map(|k| (k.to_string(), rng.gen_range(0.0..=1.0))).collect()
    };
    let role = col(&ROLES.map(|r| r.1));
    let interaction = col(&INTERACTIONS.map(|r| r.1));
    let quality = col(&QUALITIES);
    let perception = col(&PERCEPTIONS.map(|r| r.1));
    let raw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.05..1.0));
    let total: f64 = raw.iter().sum();
    let w = raw.map(|x| x / total);
    ScoreTable {
        role,
        interaction,
        quality,
        perception,
        weights: UelWeights {
            role: w[0],
            interaction: w[1],
            quality: w[2],
            // Absorb rounding so the sum is exactly one.
            perception: 1.0 - w[0] - w[1] - w[2],
        },
        extra: Vec::new(),
    }
}

fn rv(rng: &mut ChaCha8Rng, vcpu: std::ops::Range<f64>, ram: std::ops::Range<f64>) -> ResourceVector<f64> {
    ResourceVector::new(rng.gen_range(vcpu), rng.gen_range(ram))
}

fn link(a: &str, b: &str, latency_ms: f64, interface: Interface) -> Link<f64> {
    Link {
        a: a.into(),
        b: b.into(),
        latency_ms,
        interface,
        capacity_mbps: None,
    }
}

/// A valid scenario drawn from `seed`. Policy, overhead and weighting stay at
/// their defaults.
pub fn scenario(seed: u64, limits: Limits) -> ScenarioFile<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nodes = rng.gen_range(1..=limits.max_nodes);
    let n_users = rng.gen_range(1..=limits.max_users);

    let nodes: Vec<NodeSpec<f64>> = (0..n_nodes)
        .map(|i| {
            let tier = if rng.gen_bool(0.4) { Tier::DataCenter } else { Tier::Edge };
            let id = match tier {
                Tier::DataCenter => format!("DC{}", i + 1),
                Tier::Edge => format!("E{}", i + 1),
            };
            let r_max = match tier {
                Tier::DataCenter => rv(&mut rng, 32.0..256.0, 32.0..512.0),
                Tier::Edge => rv(&mut rng, 4.0..48.0, 2.0..64.0),
            };
            let frac = rng.gen_range(0.0..=1.0);
            NodeSpec {
                id,
                tier,
                r_max,
                r_assigned: r_max.scaled(frac),
                price: rv(&mut rng, 0.001..0.2, 0.001..0.05),
                energy_rate: 0.0,
                tariff: 0.0,
                scalable: rng.gen_bool(0.85),
                t_action: rng.gen_range(0.0..5.0),
                access: Access::Closed,
                region: String::new(),
                domain: String::new(),
            }
        })
        .collect();

    let ids: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
    let mut links = Vec::new();
    for i in 1..n_nodes {
        let j = rng.gen_range(0..i);
        links.push(link(&ids[i], &ids[j], rng.gen_range(1.0..80.0), Interface::Wired));
    }
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            if rng.gen_bool(0.25) {
                links.push(link(&ids[i], &ids[j], rng.gen_range(1.0..80.0), Interface::Wired));
            }
        }
    }

    let mut ue_attachments = BTreeMap::new();
    let users: Vec<UserProfile<f64>> = (0..n_users)
        .map(|i| {
            let ue = format!("UE{}", i + 1);
            let home = ids.choose(&mut rng).unwrap().clone();
            if rng.gen_bool(0.8) {
                links.push(link(&ue, &home, rng.gen_range(1.0..20.0), Interface::Wireless));
                if n_nodes > 1 && rng.gen_bool(0.2) {
                    let other = ids.choose(&mut rng).unwrap();
                    if other != &home {
                        links.push(link(&ue, other, rng.gen_range(1.0..30.0), Interface::Wireless));
                    }
                }
            }
            ue_attachments.insert(ue.clone(), home);
            let l_max = rng.gen_range(100.0..1000.0);
            UserProfile {
                id: ue.clone(),
                role: ROLES.choose(&mut rng).unwrap().0,
                interaction: INTERACTIONS.choose(&mut rng).unwrap().0,
                self_perception: PERCEPTIONS.choose(&mut rng).unwrap().0,
                others_perception: None,
                quality_profile: QUALITIES.choose(&mut rng).unwrap().to_string(),
                l_max,
                l_proc: rng.gen_range(0.0..0.9) * l_max,
                th_min: None,
                r_usage: rv(&mut rng, 0.5..10.0, 0.05..2.0),
                content: ContentDescriptor::default(),
                prefs: rng.gen_range(0.0..=1.0),
                attachment: ue,
            }
        })
        .collect();
    links.shuffle(&mut rng);

    let mut order: Vec<String> = users.iter().map(|u| u.id.clone()).collect();
    order.shuffle(&mut rng);
    let mut events = Vec::new();
    let mut active: Vec<String> = Vec::new();
    for id in order {
        events.push(EventSpec::UserJoined { user: id.clone() });
        active.push(id);
        if rng.gen_bool(0.15) {
            let k = rng.gen_range(0..active.len());
            events.push(EventSpec::UserLeft { user: active.remove(k) });
        }
    }

    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: format!("random-{seed}"),
        notes: String::new(),
        tradeoffs: TradeoffVector::new(
            rng.gen_range(0.1..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
        ),
        throughput: None,
        topology: Topology {
            nodes,
            links,
            ue_attachments,
        },
        users,
        events,
        score_tables: score_table(&mut rng),
        policy: ConstraintPolicy::default(),
        overhead: OverheadModel::default(),
        deployment: DeploymentSection::default(),
        placements: Vec::new(),
    }
}

/// The same scenario with its node list shuffled.
pub fn permute_nodes(s: &ScenarioFile<f64>, seed: u64) -> ScenarioFile<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = s.clone();
    out.topology.nodes.shuffle(&mut rng);
    out
}

/// Join/leave events as `(joined, user id)` pairs.
pub fn membership_events(s: &ScenarioFile<f64>) -> Vec<(bool, String)> {
    s.events
        .iter()
        .map(|e| match e {
            EventSpec::UserJoined { user } => (true, user.clone()),
            EventSpec::UserLeft { user } => (false, user.clone()),
            other => panic!("unexpected event {other:?}"),
        })
        .collect()
}
