mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::generator::{membership_events, permute_nodes, scenario, DEFAULT_LIMITS, SMALL_LIMITS};
use common::oracle::{self, OracleConfig};
use continuum_core::io::trace::{write_candidates_csv, write_report_json, write_summary_csv};
use continuum_core::io::ScenarioFile;
use continuum_core::model::compute_uel;
use continuum_core::orchestrator::{ReschedulingOp, Trace};
use continuum_core::{run, RunTrace};

fn trace_of(s: &ScenarioFile<f64>) -> RunTrace {
    run(s).expect("generated scenarios replay cleanly")
}

fn decisions(t: &Trace<f64>) -> Vec<(Option<String>, ReschedulingOp, bool)> {
    t.reports.iter().map(|r| (r.j_best.clone(), r.op, r.degraded)).collect()
}

fn bytes(t: &Trace<f64>) -> Vec<u8> {
    let mut out = Vec::new();
    write_candidates_csv(t, &mut out).unwrap();
    write_summary_csv(t, &mut out).unwrap();
    write_report_json(t, &mut out).unwrap();
    out
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn generated_scenarios_validate(seed in any::<u64>()) {
        let s = scenario(seed, DEFAULT_LIMITS);
        prop_assert!(s.violations().is_empty(), "{:?}", s.violations());
    }

    #[test]
    fn normalized_terms_stay_in_unit_interval(seed in any::<u64>()) {
        let s = scenario(seed, DEFAULT_LIMITS);
        for u in &s.users {
            prop_assert!(in_unit(compute_uel(u, &s.score_tables).unwrap()));
        }
        for r in &trace_of(&s).reports {
            for c in &r.candidates {
                prop_assert!(in_unit(c.qos_norm) && in_unit(c.cost_norm) && in_unit(c.ro_norm));
                for u in &c.users {
                    prop_assert!(in_unit(u.uel) && in_unit(u.weight) && in_unit(u.qos));
                }
            }
        }
    }

    #[test]
    fn selection_is_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0) {
        let s = scenario(seed, DEFAULT_LIMITS);
        let mut scaled = s.clone();
        scaled.tradeoffs = s.tradeoffs.scaled(c);
        prop_assert_eq!(decisions(&trace_of(&s)), decisions(&trace_of(&scaled)));
    }

    #[test]
    fn node_order_does_not_matter(seed in any::<u64>(), perm in any::<u64>()) {
        let s = scenario(seed, DEFAULT_LIMITS);
        let a = trace_of(&s);
        let b = trace_of(&permute_nodes(&s, perm));
        prop_assert_eq!(decisions(&a), decisions(&b));
        prop_assert_eq!(bytes(&a), bytes(&b));
    }

    #[test]
    fn identical_runs_serialize_identically(seed in any::<u64>()) {
        let s = scenario(seed, DEFAULT_LIMITS);
        prop_assert_eq!(bytes(&trace_of(&s)), bytes(&trace_of(&s.clone())));
    }

    #[test]
    fn scenario_toml_round_trips(seed in any::<u64>()) {
        let s = scenario(seed, DEFAULT_LIMITS);
        let back = ScenarioFile::<f64>::parse(&s.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn reports_are_self_consistent(seed in any::<u64>()) {
        let s = scenario(seed, DEFAULT_LIMITS);
        let mut r_max = BTreeMap::new();
        for n in &s.topology.nodes {
            r_max.insert(n.id.clone(), n.r_max);
        }
        for r in &trace_of(&s).reports {
            let Some(best) = &r.j_best else { continue };
            let w = r.candidates.iter().find(|c| &c.placement_id == best).unwrap();
            let f_best = r.f_best.unwrap();
            prop_assert_eq!(w.f, Some(f_best));
            for c in &r.candidates {
                if let Some(f) = c.f {
                    prop_assert!(f <= f_best + w.tradeoffs.tie_tolerance());
                    prop_assert!((f - (c.raw_objective() - c.penalty)).abs() < 1e-12);
                }
            }
            let same = r.j_current.as_deref() == Some(best.as_str());
            let expected = match (same, !w.needs_scaling) {
                (true, true) => ReschedulingOp::None,
                (true, false) => ReschedulingOp::Scaling,
                (false, true) => ReschedulingOp::Migration,
                (false, false) => ReschedulingOp::ScalingAndMigration,
            };
            prop_assert_eq!(r.op, expected);
            for d in &r.scaling {
                let demand = w.demand[&d.node];
                prop_assert_eq!(d.after, d.before.component_max(demand));
                prop_assert!(d.after.fits_within(&r_max[&d.node]));
            }
            if !r.op.scales() {
                prop_assert!(r.scaling.is_empty());
            }
        }
    }

    #[test]
    fn agrees_with_brute_force_oracle(seed in any::<u64>()) {
        let s = scenario(seed, SMALL_LIMITS);
        let trace = trace_of(&s);
        let cfg = OracleConfig { alpha: s.tradeoffs.alpha, beta: s.tradeoffs.beta, lambda: s.tradeoffs.lambda };
        let roster = s.users.iter().map(|u| (u.id.clone(), u.clone())).collect();
        let expected = oracle::replay(
            &s.topology, &roster, &membership_events(&s), &s.score_tables, &cfg, s.tradeoffs.tie_tolerance(),
        );
        prop_assert_eq!(expected.len(), trace.reports.len());
        for (r, (cands, chosen)) in trace.reports.iter().zip(&expected) {
            prop_assert_eq!(r.candidates.len(), cands.len());
            for (c, o) in r.candidates.iter().zip(cands) {
                prop_assert_eq!(&c.node_set, &vec![o.node.clone()]);
                match (c.f, o.f) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b),
                    (None, None) => {}
                    (a, b) => prop_assert!(false, "feasibility differs on {}: {:?} vs {:?}", o.node, a, b),
                }
            }
            let engine = r.post_state.j_current.as_ref().map(|id| {
                r.candidates.iter().find(|c| &c.placement_id == id).map(|c| c.node_set[0].clone())
            });
            if !r.parked {
                prop_assert_eq!(engine.flatten(), chosen.clone());
            }
        }
    }
}
