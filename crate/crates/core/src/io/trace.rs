use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::orchestrator::{CandidateScore, StepReport, Trace};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
    /// Both CSV files and the JSON report.
    All,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub const CANDIDATES_HEADER: [&str; 12] = [
    "step",
    "event",
    "placement",
    "nodes",
    "qos_norm",
    "cost_norm",
    "ro_norm",
    "penalty",
    "f",
    "discard_reason",
    "chosen",
    "op",
];

pub const SUMMARY_HEADER: [&str; 7] = ["time", "context_change", "j_current", "j_best", "f_best", "ro", "status"];

/// Four decimals, with negative zero printed as zero.
pub fn fmt4<T: Real>(x: T) -> String {
    let x = x.as_f64();
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn r4<T: Real>(x: T) -> Value {
    let x = x.as_f64();
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = fmt4(x).parse().unwrap_or(x);
    json!(rounded)
}

fn status<T>(r: &StepReport<T>) -> &'static str {
    if r.parked {
        "parked"
    } else if r.degraded {
        "degraded"
    } else {
        "ok"
    }
}

fn is_chosen<T>(r: &StepReport<T>, c: &CandidateScore<T>) -> bool {
    r.j_best.as_deref() == Some(c.placement_id.as_str())
}

pub fn write_candidates_csv<T: Real, W: Write>(trace: &Trace<T>, out: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CANDIDATES_HEADER)?;
    for r in &trace.reports {
        for c in &r.candidates {
            let step = r.step.to_string();
            let nodes = c.node_set.join("+");
            let f = c.f.map(fmt4).unwrap_or_default();
            let reason = c.verdict.discard_reason().unwrap_or_default();
            let chosen = is_chosen(r, c).to_string();
            w.write_record([
                step.as_str(),
                &r.event,
                &c.placement_id,
                &nodes,
                &fmt4(c.qos_norm),
                &fmt4(c.cost_norm),
                &fmt4(c.ro_norm),
                &fmt4(c.penalty),
                &f,
                &reason,
                &chosen,
                r.op.as_str(),
            ])?;
        }
    }
    w.flush().map_err(|source| TraceError::Io {
        path: PathBuf::from("candidates.csv"),
        source,
    })?;
    Ok(())
}

pub fn write_summary_csv<T: Real, W: Write>(trace: &Trace<T>, out: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in &trace.reports {
        let time = format!("t{}", r.step);
        let none = || "None".to_string();
        let j_current = r.j_current.clone().unwrap_or_else(none);
        let j_best = r.j_best.clone().unwrap_or_else(none);
        let f_best = r.f_best.map(fmt4).unwrap_or_else(none);
        w.write_record([
            time.as_str(),
            &r.event,
            &j_current,
            &j_best,
            &f_best,
            r.op.as_str(),
            status(r),
        ])?;
    }
    w.flush().map_err(|source| TraceError::Io {
        path: PathBuf::from("summary.csv"),
        source,
    })?;
    Ok(())
}

fn candidate_json<T: Real>(r: &StepReport<T>, c: &CandidateScore<T>) -> Value {
    let users: Vec<Value> = c
        .users
        .iter()
        .map(|u| {
            json!({
                "user": u.user,
                "node": u.node,
                "uel": r4(u.uel),
                "weight": r4(u.weight),
                "latency_ms": r4(u.latency.as_value()),
                "qos": r4(u.qos),
            })
        })
        .collect();
    let checks: Map<String, Value> = c
        .verdict
        .per_constraint
        .iter()
        .map(|(id, ch)| {
            let mut m = Map::new();
            m.insert("satisfied".into(), json!(ch.satisfied));
            m.insert("margin".into(), r4(ch.margin));
            if let Some(d) = &ch.detail {
                m.insert("detail".into(), json!(d));
            }
            (id.to_string(), Value::Object(m))
        })
        .collect();
    json!({
        "placement": c.placement_id,
        "nodes": c.node_set,
        "qos_norm": r4(c.qos_norm),
        "cost_norm": r4(c.cost_norm),
        "ro_norm": r4(c.ro_norm),
        "penalty": r4(c.penalty),
        "f": c.f.map(r4).unwrap_or(Value::Null),
        "discard_reason": c.verdict.discard_reason(),
        "chosen": is_chosen(r, c),
        "needs_scaling": c.needs_scaling,
        "cost": r4(c.cost),
        "cost_max": r4(c.cost_max),
        "overhead": {
            "scaling": r4(c.overhead.scaling),
            "migration": r4(c.overhead.migration),
            "total": r4(c.overhead.total),
        },
        "constraints": checks,
        "users": users,
    })
}

/// The full trace as a JSON value, numbers rounded to four decimals.
pub fn report_json<T: Real>(trace: &Trace<T>) -> Value {
    let steps: Vec<Value> = trace
        .reports
        .iter()
        .map(|r| {
            let scaling: Vec<Value> = r
                .scaling
                .iter()
                .map(|d| {
                    json!({
                        "node": d.node,
                        "before": { "vcpu": r4(d.before.vcpu), "ram": r4(d.before.ram), "gpu": r4(d.before.gpu) },
                        "after": { "vcpu": r4(d.after.vcpu), "ram": r4(d.after.ram), "gpu": r4(d.after.gpu) },
                    })
                })
                .collect();
            let assigned: Map<String, Value> = r
                .post_state
                .r_assigned
                .iter()
                .map(|(n, v)| (n.clone(), json!({ "vcpu": r4(v.vcpu), "ram": r4(v.ram), "gpu": r4(v.gpu) })))
                .collect();
            json!({
                "step": r.step,
                "event": r.event,
                "status": status(r),
                "j_current": r.j_current,
                "j_best": r.j_best,
                "f_best": r.f_best.map(r4).unwrap_or(Value::Null),
                "op": r.op.as_str(),
                "scaling": scaling,
                "candidates": r.candidates.iter().map(|c| candidate_json(r, c)).collect::<Vec<_>>(),
                "post_state": {
                    "j_current": r.post_state.j_current,
                    "active_users": r.post_state.active_users,
                    "r_assigned": assigned,
                },
            })
        })
        .collect();
    json!({ "steps": steps })
}

pub fn write_report_json<T: Real, W: Write>(trace: &Trace<T>, mut out: W) -> Result<(), TraceError> {
    serde_json::to_writer_pretty(&mut out, &report_json(trace))?;
    writeln!(out).map_err(|source| TraceError::Io {
        path: PathBuf::from("report.json"),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, TraceError> {
    File::create(path).map(BufWriter::new).map_err(|source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the requested files into `dir`, creating it if needed. Returns the
/// paths written.
pub fn write_trace<T: Real>(trace: &Trace<T>, dir: &Path, format: TraceFormat) -> Result<Vec<PathBuf>, TraceError> {
    std::fs::create_dir_all(dir).map_err(|source| TraceError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    if matches!(format, TraceFormat::Csv | TraceFormat::All) {
        let p = dir.join("candidates.csv");
        write_candidates_csv(trace, create(&p)?)?;
        written.push(p);
        let p = dir.join("summary.csv");
        write_summary_csv(trace, create(&p)?)?;
        written.push(p);
    }
    if matches!(format, TraceFormat::Json | TraceFormat::All) {
        let p = dir.join("report.json");
        write_report_json(trace, create(&p)?)?;
        written.push(p);
    }
    Ok(written)
}
