//! The critical exponent `α_c(δ)` and its certificates.

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;

use crate::error::{check_delta, Error, Result};
use crate::family::{classify_members, enumerate_family, Delta0Class, FamilySpec};
use crate::graph::{lift, EdgeSubset, Graph, LiftedGraph};
use crate::kernels::{kernel_on_s, relative_entropy_rate, restrict, restrict_to_nodes, SubstochasticBlock};
use crate::spectral::{dv_oracle, spectral_radius, tilted_certificate, SpectralResult, VariationalCertificate};

/// Relative gap under which two Perron roots count as tied.
const TIE_TOLERANCE: f64 = 1e-13;
const DV_ITERATIONS: usize = 400;
const DV_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetRadius {
    pub set: EdgeSubset,
    pub rho: f64,
}

/// Decay rate restricted to renewal sequences whose first edge is `edge`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialEdgeRate {
    pub edge: usize,
    /// `+∞` when no member of the family contains `edge`.
    pub alpha: f64,
}

/// Agreement between the spectral value and the two independent routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodChecks {
    pub certificate_objective: f64,
    pub certificate_gap: f64,
    pub dv_oracle: f64,
    pub dv_oracle_gap: f64,
}

#[derive(Debug, Clone)]
pub struct ExponentReport {
    pub delta: f64,
    pub alpha_c: f64,
    pub argmax_set: EdgeSubset,
    pub rho_star: f64,
    pub per_set: Vec<SetRadius>,
    pub per_initial_edge: Vec<InitialEdgeRate>,
    pub spectral: SpectralResult,
    pub tilted: VariationalCertificate,
    pub method_checks: MethodChecks,
}

fn set_block(g: &Graph, s: &LiftedGraph, set: EdgeSubset, delta: f64) -> Result<SubstochasticBlock> {
    let k = kernel_on_s(s, set, delta)?;
    restrict(g, s, &k, set)
}

pub fn alpha_c(g: &Graph, delta: f64, spec: &FamilySpec) -> Result<ExponentReport> {
    check_delta(delta)?;
    let members = enumerate_family(g, spec)?;
    if members.contains(&g.full_set()) {
        return Err(Error::FamilyNeverExits);
    }
    let s = lift(g);
    let per_set = members
        .par_iter()
        .map(|&set| {
            let block = set_block(g, &s, set, delta)?;
            Ok(SetRadius { set, rho: spectral_radius(&block)?.rho })
        })
        .collect::<Result<Vec<_>>>()?;

    let rho_star = per_set.iter().map(|r| r.rho).fold(0.0, f64::max);
    let argmax_set = per_set
        .iter()
        .filter(|r| r.rho >= rho_star * (1.0 - TIE_TOLERANCE))
        .map(|r| r.set)
        .min()
        .expect("family is nonempty");
    let alpha = -rho_star.ln();

    let per_initial_edge = g
        .incident(g.start_vertex())
        .iter()
        .map(|edge| {
            let best = per_set
                .iter()
                .filter(|r| r.set.contains(edge))
                .map(|r| r.rho)
                .fold(0.0, f64::max);
            InitialEdgeRate { edge, alpha: -best.ln() }
        })
        .collect();

    let block = set_block(g, &s, argmax_set, delta)?;
    let spectral = spectral_radius(&block)?;
    let tilted = tilted_certificate(&block, &spectral)?;
    let dv = dv_oracle(&block, DV_ITERATIONS, DV_TOLERANCE)?;
    let method_checks = MethodChecks {
        certificate_objective: tilted.objective,
        certificate_gap: (tilted.objective - alpha).abs(),
        dv_oracle: dv,
        dv_oracle_gap: (dv - alpha).abs(),
    };
    Ok(ExponentReport {
        delta,
        alpha_c: alpha,
        argmax_set,
        rho_star,
        per_set,
        per_initial_edge,
        spectral,
        tilted,
        method_checks,
    })
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub reports: Vec<ExponentReport>,
    /// α_c strictly decreases across every pair of distinct grid points.
    pub strictly_decreasing: bool,
    /// `|α_c(δ₂) − α_c(δ₁)| ≤ log(δ₂/δ₁)` for every pair.
    pub lipschitz: bool,
}

pub fn sweep_delta(g: &Graph, spec: &FamilySpec, grid: &[f64]) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty delta grid".into()));
    }
    for &d in grid {
        check_delta(d)?;
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("delta grid must be ascending".into()));
    }
    let reports = grid
        .iter()
        .map(|&d| alpha_c(g, d, spec))
        .collect::<Result<Vec<_>>>()?;
    let mut strictly_decreasing = true;
    let mut lipschitz = true;
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            if b.delta > a.delta && b.alpha_c >= a.alpha_c {
                strictly_decreasing = false;
            }
            let modulus = (b.delta / a.delta).ln();
            if (b.alpha_c - a.alpha_c).abs() > modulus + 1e-12 {
                lipschitz = false;
            }
        }
    }
    Ok(Sweep { reports, strictly_decreasing, lipschitz })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta0Limit {
    Infinite,
    Finite(f64),
}

/// `lim_{δ→0} α_c(δ)`: the simple-walk decay rate inside the interiors of the family.
pub fn limit_delta_zero(g: &Graph, spec: &FamilySpec) -> Result<Delta0Limit> {
    let members = enumerate_family(g, spec)?;
    if classify_members(g, &members) == Delta0Class::Diverges {
        return Ok(Delta0Limit::Infinite);
    }
    let s = lift(g);
    let srw = kernel_on_s(&s, g.full_set(), 1.0)?;
    let mut best = 0.0f64;
    for &set in &members {
        let interior = set.difference(g.boundary_edges(set));
        if interior.is_empty() {
            continue;
        }
        let block = restrict_to_nodes(&srw.matrix, s.nodes_over(interior));
        for component in strongly_connected_blocks(&block) {
            best = best.max(spectral_radius(&component)?.rho);
        }
    }
    if best > 0.0 {
        Ok(Delta0Limit::Finite(-best.ln()))
    } else {
        Ok(Delta0Limit::Infinite)
    }
}

fn strongly_connected_blocks(block: &SubstochasticBlock) -> Vec<SubstochasticBlock> {
    let n = block.len();
    let mut digraph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| digraph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if block.matrix[(i, j)] > 0.0 {
                digraph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&digraph)
        .into_iter()
        .filter(|c| c.len() > 1)
        .map(|c| {
            let mut local: Vec<usize> = c.iter().map(|v| v.index()).collect();
            local.sort_unstable();
            let ids = local.iter().map(|&i| block.node_ids[i]).collect();
            let m = DMatrix::from_fn(local.len(), local.len(), |a, b| block.matrix[(local[a], local[b])]);
            SubstochasticBlock { node_ids: ids, matrix: m }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub holds: bool,
    pub slack: f64,
}

/// Positivity of the exponent and the single-edge upper bound `log((b−1+δ)/δ)`.
pub fn bound_checks(report: &ExponentReport, g: &Graph, spec: &FamilySpec) -> Vec<BoundCheck> {
    let mut out = vec![BoundCheck {
        name: "alpha_positive",
        holds: report.alpha_c > 0.0,
        slack: report.alpha_c,
    }];
    let singleton_member = g
        .incident(g.start_vertex())
        .iter()
        .any(|e| spec.admits(g, EdgeSubset::singleton(e)));
    if singleton_member {
        let b = g.edge_count() as f64;
        let bound = ((b - 1.0 + report.delta) / report.delta).ln();
        let slack = bound - report.alpha_c;
        out.push(BoundCheck { name: "single_edge_upper", holds: slack >= -1e-12, slack });
    }
    out
}

/// One stage `(μ_k, r_k, E_k)` of a decomposition of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTerm {
    pub mu: Vec<f64>,
    pub weight: f64,
    pub set: EdgeSubset,
}

const MASS_TOLERANCE: f64 = 1e-9;
const SINKHORN_MAX_ITER: usize = 200_000;
const SINKHORN_TOLERANCE: f64 = 1e-14;

/// `Σ_k r_k inf_{q: μ_k q = μ_k} ∫ R(q ‖ p_{E_k}) dμ_k`, an upper bound for the
/// rate function at `mu`.
pub fn lambda_decomposed(
    g: &Graph,
    delta: f64,
    spec: &FamilySpec,
    mu: &[f64],
    decomposition: &[DecompositionTerm],
) -> Result<f64> {
    check_delta(delta)?;
    let s = lift(g);
    let size = s.len();
    let invalid = |msg: String| Err(Error::InvalidDecomposition(msg));
    if mu.len() != size || !is_probability(mu) {
        return invalid("mu is not a probability vector on the lifted graph".into());
    }
    if decomposition.len() != g.edge_count() {
        return invalid(format!("expected {} stages, got {}", g.edge_count(), decomposition.len()));
    }
    let first = decomposition[0].set;
    if first.len() != 1 || first.intersection(g.incident(g.start_vertex())).is_empty() {
        return invalid("first stage must be one start-incident edge".into());
    }
    for pair in decomposition.windows(2) {
        let (prev, next) = (pair[0].set, pair[1].set);
        let added = next.difference(prev);
        if !prev.is_subset(next) || added.len() != 1 || !added.is_subset(g.frontier(prev)) {
            return invalid(format!("stage {:?} does not grow {:?} by an adjacent edge", next, prev));
        }
    }
    let mut mixture = vec![0.0; size];
    let mut total_weight = 0.0;
    for (k, term) in decomposition.iter().enumerate() {
        if !term.weight.is_finite() || term.weight < 0.0 {
            return invalid(format!("stage {} has weight {}", k + 1, term.weight));
        }
        if term.mu.len() != size || !is_probability(&term.mu) {
            return invalid(format!("stage {} measure is not a probability vector", k + 1));
        }
        let support = s.nodes_over(term.set);
        if term.mu.iter().enumerate().any(|(z, &m)| m > 0.0 && !support.contains(&z)) {
            return invalid(format!("stage {} measure leaves its edge set", k + 1));
        }
        if term.weight > 0.0 && !spec.admits(g, term.set) {
            return invalid(format!("stage {} carries weight outside the family", k + 1));
        }
        total_weight += term.weight;
        for (acc, m) in mixture.iter_mut().zip(&term.mu) {
            *acc += term.weight * m;
        }
    }
    if (total_weight - 1.0).abs() > MASS_TOLERANCE {
        return invalid(format!("weights sum to {total_weight}"));
    }
    if mixture.iter().zip(mu).any(|(a, b)| (a - b).abs() > MASS_TOLERANCE) {
        return invalid("weighted stages do not reproduce mu".into());
    }
    let mut value = 0.0;
    for term in decomposition.iter().filter(|t| t.weight > 0.0) {
        let p = kernel_on_s(&s, term.set, delta)?;
        value += term.weight * invariant_entropy_infimum(&p.matrix, &term.mu);
    }
    Ok(value)
}

fn is_probability(v: &[f64]) -> bool {
    v.iter().all(|&x| x >= 0.0 && x.is_finite()) && (v.iter().sum::<f64>() - 1.0).abs() <= MASS_TOLERANCE
}

/// `inf { ∫ R(q ‖ p) dμ : μ q = μ }`, solved by Sinkhorn scaling of the flow
/// `F = diag(a) P diag(b)` to marginals `μ` on both sides. `+∞` when no such
/// flow is supported by `p`.
pub fn invariant_entropy_infimum(p: &DMatrix<f64>, mu: &[f64]) -> f64 {
    let support: Vec<usize> = (0..mu.len()).filter(|&z| mu[z] > 0.0).collect();
    let n = support.len();
    let m: Vec<f64> = support.iter().map(|&z| mu[z]).collect();
    let k = DMatrix::from_fn(n, n, |i, j| p[(support[i], support[j])]);
    let mut a = vec![1.0; n];
    let mut b = vec![1.0; n];
    let mut converged = false;
    for _ in 0..SINKHORN_MAX_ITER {
        for i in 0..n {
            let s: f64 = (0..n).map(|j| k[(i, j)] * b[j]).sum();
            if s == 0.0 {
                return f64::INFINITY;
            }
            a[i] = m[i] / s;
        }
        for j in 0..n {
            let s: f64 = (0..n).map(|i| a[i] * k[(i, j)]).sum();
            if s == 0.0 {
                return f64::INFINITY;
            }
            b[j] = m[j] / s;
        }
        let row_error = (0..n)
            .map(|i| (a[i] * (0..n).map(|j| k[(i, j)] * b[j]).sum::<f64>() - m[i]).abs())
            .fold(0.0, f64::max);
        if row_error <= SINKHORN_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return f64::INFINITY;
    }
    let q = DMatrix::from_fn(n, n, |i, j| a[i] * k[(i, j)] * b[j] / m[i]);
    relative_entropy_rate(&q, &k, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::kernels::embed_vector;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn cover() -> FamilySpec {
        FamilySpec::EdgeCover
    }

    #[test]
    fn triangle_closed_form() {
        for &d in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            let r = alpha_c(&k3(), d, &cover()).unwrap();
            assert_abs_diff_eq!(r.alpha_c, 0.5 * ((d + 1.0) / d).ln(), epsilon = 1e-12);
            assert_abs_diff_eq!(r.alpha_c, -r.rho_star.ln(), epsilon = 1e-15);
            assert!(r.method_checks.certificate_gap <= 1e-9);
            assert!(r.method_checks.dv_oracle_gap <= 1e-4);
        }
    }

    #[test]
    fn star_and_path_closed_forms() {
        let r = alpha_c(&s3(), 1.0, &cover()).unwrap();
        assert_abs_diff_eq!(r.alpha_c, 0.5 * 1.5f64.ln(), epsilon = 1e-12);
        let d = 0.3;
        let r = alpha_c(&p4(), d, &cover()).unwrap();
        let expected = -0.5 * ((1.0 + 2.0 * d) / (2.0 * (1.0 + d))).ln();
        assert_abs_diff_eq!(r.alpha_c, expected, epsilon = 1e-12);
    }

    #[test]
    fn hitting_single_edge() {
        let g = k3();
        let target = g.parse_edge_tokens("0-1").unwrap();
        let r = alpha_c(&g, 1.0, &FamilySpec::Hitting(target)).unwrap();
        assert_abs_diff_eq!(r.alpha_c, LN_2, epsilon = 1e-12);
        assert_eq!(r.argmax_set, target);
        // the other start-incident edge leaves the hitting family at once
        let other = g.edge_between(0, 2).unwrap();
        let rate = r.per_initial_edge.iter().find(|x| x.edge == other).unwrap();
        assert!(rate.alpha.is_infinite());
    }

    #[test]
    fn family_containing_everything_is_rejected() {
        let g = k3();
        let err = alpha_c(&g, 1.0, &FamilySpec::Hitting(g.full_set())).unwrap_err();
        assert_eq!(err, Error::FamilyNeverExits);
    }

    #[test]
    fn argmax_ties_pick_smallest_mask() {
        // both two-edge sets through the start tie on the triangle
        let r = alpha_c(&k3(), 1.0, &cover()).unwrap();
        let maximal: Vec<_> = r.per_set.iter().filter(|x| (x.rho - r.rho_star).abs() < 1e-12).collect();
        assert!(maximal.len() > 1);
        assert_eq!(r.argmax_set, maximal.iter().map(|x| x.set).min().unwrap());
    }

    #[test]
    fn sweep_triangle() {
        let grid = [0.5, 1.0, 2.0, 4.0];
        let sw = sweep_delta(&k3(), &cover(), &grid).unwrap();
        let expected = [0.5 * 3f64.ln(), 0.5 * LN_2, 0.5 * 1.5f64.ln(), 0.5 * 1.25f64.ln()];
        for (r, e) in sw.reports.iter().zip(expected) {
            assert_abs_diff_eq!(r.alpha_c, e, epsilon = 1e-12);
        }
        assert!(sw.strictly_decreasing && sw.lipschitz);
    }

    #[test]
    fn sweep_duplicates_and_bad_grids() {
        let sw = sweep_delta(&p4(), &cover(), &[1.5, 1.5]).unwrap();
        assert_eq!(sw.reports[0].alpha_c, sw.reports[1].alpha_c);
        assert!(sw.strictly_decreasing);
        assert_eq!(sweep_delta(&p4(), &cover(), &[0.0, 1.0]).unwrap_err(), Error::NonPositiveDelta(0.0));
        assert!(matches!(sweep_delta(&p4(), &cover(), &[2.0, 1.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn limits_at_zero() {
        assert_eq!(limit_delta_zero(&k3(), &cover()).unwrap(), Delta0Limit::Infinite);
        assert_eq!(limit_delta_zero(&s3(), &cover()).unwrap(), Delta0Limit::Infinite);
        match limit_delta_zero(&p4(), &cover()).unwrap() {
            Delta0Limit::Finite(v) => assert_abs_diff_eq!(v, 0.5 * LN_2, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
        let c4 = g(&[(0, 1), (1, 2), (2, 3), (3, 0)], 0);
        match limit_delta_zero(&c4, &cover()).unwrap() {
            Delta0Limit::Finite(v) => {
                assert_abs_diff_eq!(v, LN_2, epsilon = 1e-12);
                let near = alpha_c(&c4, 1e-6, &cover()).unwrap().alpha_c;
                assert!((near - v).abs() < 1e-4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounds() {
        let r = alpha_c(&k3(), 100.0, &cover()).unwrap();
        let checks = bound_checks(&r, &k3(), &cover());
        let upper = checks.iter().find(|c| c.name == "single_edge_upper").unwrap();
        assert!(upper.holds);
        assert_abs_diff_eq!(upper.slack + r.alpha_c, (102.0f64 / 100.0).ln(), epsilon = 1e-15);
        let r = alpha_c(&k3(), 1.0, &cover()).unwrap();
        let checks = bound_checks(&r, &k3(), &cover());
        assert!(checks.iter().all(|c| c.holds));
        let upper = checks.iter().find(|c| c.name == "single_edge_upper").unwrap();
        assert_abs_diff_eq!(upper.slack, 3f64.ln() - 0.5 * LN_2, epsilon = 1e-12);
    }

    fn uniform_on(s: &LiftedGraph, set: EdgeSubset) -> Vec<f64> {
        let nodes = s.nodes_over(set);
        let mut mu = vec![0.0; s.len()];
        for &z in &nodes {
            mu[z] = 1.0 / nodes.len() as f64;
        }
        mu
    }

    fn triangle_sequence(g: &Graph) -> Vec<EdgeSubset> {
        let ab = g.edge_between(0, 1).unwrap();
        let bc = g.edge_between(1, 2).unwrap();
        let s1 = EdgeSubset::singleton(ab);
        let s2 = s1.with(bc);
        vec![s1, s2, g.full_set()]
    }

    #[test]
    fn decomposition_at_certificate_recovers_alpha() {
        let g = k3();
        let s = lift(&g);
        let r = alpha_c(&g, 1.0, &cover()).unwrap();
        let seq = triangle_sequence(&g);
        assert_eq!(seq[1], r.argmax_set);
        let mu = embed_vector(&r.tilted.node_ids, &r.tilted.mu_star, s.len());
        let terms: Vec<_> = seq
            .iter()
            .map(|&set| {
                if set == seq[1] {
                    DecompositionTerm { mu: mu.clone(), weight: 1.0, set }
                } else {
                    DecompositionTerm { mu: uniform_on(&s, set), weight: 0.0, set }
                }
            })
            .collect();
        let v = lambda_decomposed(&g, 1.0, &cover(), &mu, &terms).unwrap();
        assert_abs_diff_eq!(v, r.alpha_c, epsilon = 1e-9);
    }

    #[test]
    fn decomposition_rejects_weight_outside_family() {
        let g = k3();
        let s = lift(&g);
        let seq = triangle_sequence(&g);
        let mu = vec![1.0 / s.len() as f64; s.len()];
        let terms: Vec<_> = seq
            .iter()
            .map(|&set| DecompositionTerm {
                mu: if set == g.full_set() { mu.clone() } else { uniform_on(&s, set) },
                weight: if set == g.full_set() { 1.0 } else { 0.0 },
                set,
            })
            .collect();
        assert!(matches!(
            lambda_decomposed(&g, 1.0, &cover(), &mu, &terms),
            Err(Error::InvalidDecomposition(_))
        ));
    }

    #[test]
    fn sinkhorn_matches_flip_entropy() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        // uniform mu is invariant for p itself
        assert_abs_diff_eq!(invariant_entropy_infimum(&p, &[0.5, 0.5]), 0.0, epsilon = 1e-12);
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        // mass on state 0 cannot be returned to
        assert!(invariant_entropy_infimum(&p, &[0.5, 0.5]).is_infinite());
    }
}
