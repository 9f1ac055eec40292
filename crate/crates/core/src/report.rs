//! Stable JSON and CSV renderings of results.
//!
//! JSON documents carry `schema_version` and encode reals as strings with 17
//! significant digits (`"inf"` for infinity).

use serde_json::{json, Value};

use crate::exponent::{BoundCheck, Delta0Limit, ExponentReport, Sweep};
use crate::family::FamilySpec;
use crate::graph::{lift, EdgeSubset, Graph};
use crate::simulate::TailEstimate;

pub const SCHEMA_VERSION: u32 = 1;

pub fn real(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:.16e}", x)
    }
}

fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::String(real(x))).collect())
}

fn set_value(g: &Graph, set: EdgeSubset) -> Value {
    json!({ "edges": g.format_set(set), "bits": set.bits() })
}

pub fn graph_value(g: &Graph) -> Value {
    json!({
        "vertices": g.labels(),
        "edges": (0..g.edge_count()).map(|e| g.edge_label(e)).collect::<Vec<_>>(),
        "start": g.label(g.start_vertex()),
    })
}

pub fn family_value(g: &Graph, spec: &FamilySpec) -> Value {
    match spec {
        FamilySpec::EdgeCover => json!({ "kind": spec.name() }),
        FamilySpec::Hitting(t) | FamilySpec::SubgraphCover(t) => {
            json!({ "kind": spec.name(), "target": set_value(g, *t) })
        }
        FamilySpec::Custom(members) => json!({
            "kind": spec.name(),
            "members": members.iter().map(|&m| set_value(g, m)).collect::<Vec<_>>(),
        }),
    }
}

/// `u>v` names for lifted nodes.
fn node_names(g: &Graph, ids: &[usize]) -> Vec<String> {
    let s = lift(g);
    ids.iter()
        .map(|&z| {
            let d = s.node(z);
            format!("{}>{}", g.label(d.tail), g.label(d.head))
        })
        .collect()
}

pub fn bounds_value(checks: &[BoundCheck]) -> Value {
    Value::Array(
        checks
            .iter()
            .map(|c| json!({ "name": c.name, "holds": c.holds, "slack": real(c.slack) }))
            .collect(),
    )
}

pub fn exponent_value(g: &Graph, spec: &FamilySpec, r: &ExponentReport, bounds: &[BoundCheck]) -> Value {
    let nodes = node_names(g, &r.tilted.node_ids);
    json!({
        "delta": real(r.delta),
        "alpha_c": real(r.alpha_c),
        "rho_star": real(r.rho_star),
        "argmax_set": set_value(g, r.argmax_set),
        "per_set": r.per_set.iter().map(|p| json!({
            "set": set_value(g, p.set),
            "rho": real(p.rho),
            "alpha": real(-p.rho.ln()),
        })).collect::<Vec<_>>(),
        "per_initial_edge": r.per_initial_edge.iter().map(|p| json!({
            "edge": g.edge_label(p.edge),
            "alpha": real(p.alpha),
        })).collect::<Vec<_>>(),
        "eigenvectors": {
            "nodes": nodes,
            "right": reals(&r.spectral.right_vec),
            "left": reals(&r.spectral.left_vec),
            "iterations": r.spectral.iterations,
            "residual": real(r.spectral.residual),
        },
        "tilted": {
            "nodes": nodes,
            "mu_star": reals(&r.tilted.mu_star),
            "q_star": r.tilted.q_star.iter().map(|row| reals(row)).collect::<Vec<_>>(),
            "objective": real(r.tilted.objective),
        },
        "method_checks": {
            "spectral": real(r.alpha_c),
            "certificate_objective": real(r.method_checks.certificate_objective),
            "certificate_gap": real(r.method_checks.certificate_gap),
            "dv_oracle": real(r.method_checks.dv_oracle),
            "dv_oracle_gap": real(r.method_checks.dv_oracle_gap),
        },
        "bounds": bounds_value(bounds),
        "family": family_value(g, spec),
    })
}

/// Wraps a payload with the schema header.
pub fn document(kind: &str, g: &Graph, body: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "graph": graph_value(g),
        "result": body,
    })
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values are serializable");
    s.push('\n');
    s
}

pub fn delta0_text(limit: Delta0Limit) -> String {
    match limit {
        Delta0Limit::Infinite => "diverges".into(),
        Delta0Limit::Finite(v) => format!("{}", v),
    }
}

pub fn delta0_value(limit: Delta0Limit) -> Value {
    match limit {
        Delta0Limit::Infinite => json!({ "class": "diverges" }),
        Delta0Limit::Finite(v) => json!({ "class": "finite", "value": real(v) }),
    }
}

pub const SWEEP_HEADER: &str = "delta,alpha_c,rho_star,argmax_set_bits";

pub fn sweep_csv(sweep: &Sweep, limit: Delta0Limit) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in &sweep.reports {
        out.push_str(&format!("{},{},{},{}\n", r.delta, r.alpha_c, r.rho_star, r.argmax_set.bits()));
    }
    out.push_str(&format!(
        "# strictly_decreasing={} lipschitz={} delta0={}\n",
        sweep.strictly_decreasing,
        sweep.lipschitz,
        delta0_text(limit)
    ));
    out
}

pub fn sweep_value(g: &Graph, spec: &FamilySpec, sweep: &Sweep, limit: Delta0Limit) -> Value {
    json!({
        "family": family_value(g, spec),
        "rows": sweep.reports.iter().map(|r| json!({
            "delta": real(r.delta),
            "alpha_c": real(r.alpha_c),
            "rho_star": real(r.rho_star),
            "argmax_set": set_value(g, r.argmax_set),
        })).collect::<Vec<_>>(),
        "strictly_decreasing": sweep.strictly_decreasing,
        "lipschitz": sweep.lipschitz,
        "delta0": delta0_value(limit),
    })
}

pub const TAIL_HEADER: &str = "n,survival,stderr,trials,seed";

pub fn tail_csv(est: &TailEstimate) -> String {
    let mut out = String::from(TAIL_HEADER);
    out.push('\n');
    for ((n, p), se) in est.n_grid.iter().zip(&est.survival).zip(&est.stderr) {
        out.push_str(&format!("{},{},{},{},{}\n", n, p, se, est.trials, est.seed));
    }
    out
}

pub fn tail_value(est: &TailEstimate) -> Value {
    json!({
        "n_grid": est.n_grid,
        "survival": reals(&est.survival),
        "stderr": reals(&est.stderr),
        "trials": est.trials,
        "seed": est.seed,
    })
}
