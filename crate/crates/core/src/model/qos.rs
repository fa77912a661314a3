use std::collections::BTreeMap;

use super::topology::Latency;
use super::user::UserProfile;
use crate::scalar::Real;

/// Bitrate in Mbps keyed by quality profile.
pub type ThroughputTable<T> = BTreeMap<String, T>;

/// End-to-end user latency: processing plus network.
pub fn user_latency<T: Real>(l_proc: T, l_net: Latency<T>) -> Latency<T> {
    Latency::Finite(l_proc) + l_net
}

/// Per-user QoS in `[0, 1]`.
///
/// The latency term is `max(0, 1 - l_u / l_max)`. When both throughput and
/// its minimum are known the result is capped by `min(1, th / th_min)`.
pub fn user_qos<T: Real>(l_u: Latency<T>, l_max: T, th: Option<T>, th_min: Option<T>) -> T {
    let q_latency = match l_u {
        Latency::Finite(l) => (T::one() - l / l_max).max(T::zero()),
        Latency::Unreachable => T::zero(),
    };
    match (th, th_min) {
        (Some(th), Some(min)) if min > T::zero() => q_latency.min((th / min).min(T::one())),
        _ => q_latency,
    }
    .unit_clamp()
}

/// Throughput the user's stream needs, looked up by quality profile.
/// Zero when no table is configured or the profile is not listed.
pub fn throughput_demand<T: Real>(user: &UserProfile<T>, table: Option<&ThroughputTable<T>>) -> T {
    table
        .and_then(|t| t.get(&user.quality_profile).copied())
        .unwrap_or_else(T::zero)
}
