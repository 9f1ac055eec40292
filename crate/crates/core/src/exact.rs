//! Exact survival probabilities by forward propagation over (directed edge, traversed set).

use std::collections::BTreeMap;

use crate::error::{check_delta, Error, Result};
use crate::family::FamilySpec;
use crate::graph::{lift, EdgeSubset, Graph};

pub const DEFAULT_EDGE_CAP: usize = 16;

/// `ℙ(𝒯 > n)` for `n = 0..=n_max`.
pub fn exact_tail(g: &Graph, delta: f64, spec: &FamilySpec, n_max: usize) -> Result<Vec<f64>> {
    exact_tail_with_cap(g, delta, spec, n_max, DEFAULT_EDGE_CAP)
}

pub fn exact_tail_with_cap(
    g: &Graph,
    delta: f64,
    spec: &FamilySpec,
    n_max: usize,
    cap: usize,
) -> Result<Vec<f64>> {
    check_delta(delta)?;
    if g.edge_count() > cap {
        return Err(Error::StateSpaceTooLarge { edges: g.edge_count(), cap });
    }
    if let FamilySpec::Custom(_) = spec {
        crate::family::enumerate_family(g, spec)?;
    }
    let s = lift(g);
    let size = s.len();
    let mut survival = Vec::with_capacity(n_max + 1);
    survival.push(1.0);
    if n_max == 0 {
        return Ok(survival);
    }

    let mut alive: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let start = g.start_vertex();
    let first = 1.0 / g.degree(start) as f64;
    for &(y, e) in g.adjacency(start) {
        let mask = EdgeSubset::singleton(e);
        if spec.admits(g, mask) {
            let z = s.index_of(g, start, y).expect("adjacent");
            alive.entry(mask.bits()).or_insert_with(|| vec![0.0; size])[z] += first;
        }
    }
    survival.push(total(&alive));

    for _ in 2..=n_max {
        let mut next: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for (&bits, mass) in &alive {
            let mask = EdgeSubset::from_bits(bits);
            for (z, &m) in mass.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let succ = s.successors(z);
                let weight = |w: usize| if mask.contains(s.node(w).edge_id) { delta } else { 1.0 };
                let norm: f64 = succ.iter().map(|&w| weight(w)).sum();
                for &w in succ {
                    let grown = mask.with(s.node(w).edge_id);
                    if !spec.admits(g, grown) {
                        continue;
                    }
                    next.entry(grown.bits()).or_insert_with(|| vec![0.0; size])[w] += m * weight(w) / norm;
                }
            }
        }
        alive = next;
        survival.push(total(&alive));
    }
    Ok(survival)
}

fn total(alive: &BTreeMap<u64, Vec<f64>>) -> f64 {
    alive.values().map(|v| v.iter().sum::<f64>()).sum()
}

/// Per-step decay rate `½ log(ℙ(𝒯 > n) / ℙ(𝒯 > n+2))` read off an exact tail.
///
/// Two steps are used because the one-step ratio oscillates on bipartite-like
/// blocks and never settles.
pub fn two_step_rate(tail: &[f64], n: usize) -> Option<f64> {
    let (a, b) = (*tail.get(n)?, *tail.get(n + 2)?);
    (a > 0.0 && b > 0.0).then(|| 0.5 * (a / b).ln())
}
