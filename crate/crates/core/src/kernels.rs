//! Reinforced transition kernels on the graph and on its lifted graph.
//!
//! Both kernels weigh a move by `delta` when the edge it uses lies in the
//! traversed set and by `1` otherwise. All logarithms are natural.

use nalgebra::DMatrix;

use crate::error::{check_delta, Error, Result};
use crate::graph::{EdgeSubset, Graph, LiftedGraph};

fn weight(traversed: EdgeSubset, edge: usize, delta: f64) -> f64 {
    if traversed.contains(edge) {
        delta
    } else {
        1.0
    }
}

/// Vertex-level kernel `p̂_{E'}`; `traversed = E` gives the simple random walk.
#[derive(Debug, Clone)]
pub struct KernelG {
    pub matrix: DMatrix<f64>,
    pub traversed: EdgeSubset,
    pub delta: f64,
}

pub fn kernel_on_g(g: &Graph, traversed: EdgeSubset, delta: f64) -> Result<KernelG> {
    check_delta(delta)?;
    let n = g.vertex_count();
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        let total: f64 = g.adjacency(x).iter().map(|&(_, e)| weight(traversed, e, delta)).sum();
        for &(y, e) in g.adjacency(x) {
            matrix[(x, y)] = weight(traversed, e, delta) / total;
        }
    }
    Ok(KernelG { matrix, traversed, delta })
}

/// Kernel `p_{E'}` on the lifted graph, indexed by lifted node.
#[derive(Debug, Clone)]
pub struct KernelS {
    pub matrix: DMatrix<f64>,
    pub traversed: EdgeSubset,
    pub delta: f64,
}

pub fn kernel_on_s(s: &LiftedGraph, traversed: EdgeSubset, delta: f64) -> Result<KernelS> {
    check_delta(delta)?;
    let n = s.len();
    let mut matrix = DMatrix::zeros(n, n);
    for z in 0..n {
        let succ = s.successors(z);
        let total: f64 = succ
            .iter()
            .map(|&w| weight(traversed, s.node(w).edge_id, delta))
            .sum();
        for &w in succ {
            matrix[(z, w)] = weight(traversed, s.node(w).edge_id, delta) / total;
        }
    }
    Ok(KernelS { matrix, traversed, delta })
}

/// A kernel restricted to a subset of lifted nodes; mass leaving the subset is killed.
#[derive(Debug, Clone)]
pub struct SubstochasticBlock {
    /// Lifted node ids of the rows/columns, ascending.
    pub node_ids: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl SubstochasticBlock {
    /// Wraps an arbitrary nonnegative square matrix with row sums at most one.
    pub fn new(node_ids: Vec<usize>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != node_ids.len() {
            return Err(Error::InvalidArgument("block shape mismatch".into()));
        }
        if matrix.iter().any(|&x| x.is_nan() || x < 0.0) {
            return Err(Error::InvalidArgument("block has a negative or NaN entry".into()));
        }
        if matrix.row_iter().any(|r| r.sum() > 1.0 + 1e-12) {
            return Err(Error::InvalidArgument("block row sum exceeds one".into()));
        }
        Ok(SubstochasticBlock { node_ids, matrix })
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.row_iter().map(|r| r.sum()).collect()
    }

    /// Local indices of the rows that lose mass.
    pub fn leaky_rows(&self, tol: f64) -> Vec<usize> {
        self.row_sums()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 1.0 - tol)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_strongly_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return false;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for (j, flag) in seen.iter_mut().enumerate() {
                    let w = if forward { self.matrix[(i, j)] } else { self.matrix[(j, i)] };
                    if w > 0.0 && !*flag {
                        *flag = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        };
        reach(true) && reach(false)
    }
}

/// Restricts `k` to the lifted nodes over `set`.
pub fn restrict(g: &Graph, s: &LiftedGraph, k: &KernelS, set: EdgeSubset) -> Result<SubstochasticBlock> {
    if set.is_empty() {
        return Err(Error::EmptySubset);
    }
    if !g.is_connected_subset(set) {
        return Err(Error::DisconnectedSubset(set.bits()));
    }
    Ok(restrict_to_nodes(&k.matrix, s.nodes_over(set)))
}

pub(crate) fn restrict_to_nodes(matrix: &DMatrix<f64>, node_ids: Vec<usize>) -> SubstochasticBlock {
    let m = node_ids.len();
    let block = DMatrix::from_fn(m, m, |i, j| matrix[(node_ids[i], node_ids[j])]);
    SubstochasticBlock { node_ids, matrix: block }
}

/// Expands a block-local matrix to full lifted size (zeros elsewhere).
pub fn embed_block(node_ids: &[usize], local: &DMatrix<f64>, size: usize) -> DMatrix<f64> {
    let mut full = DMatrix::zeros(size, size);
    for (i, &a) in node_ids.iter().enumerate() {
        for (j, &b) in node_ids.iter().enumerate() {
            full[(a, b)] = local[(i, j)];
        }
    }
    full
}

/// Expands a block-local vector to full lifted size.
pub fn embed_vector(node_ids: &[usize], local: &[f64], size: usize) -> Vec<f64> {
    let mut full = vec![0.0; size];
    for (&z, &x) in node_ids.iter().zip(local) {
        full[z] = x;
    }
    full
}

/// `Σ_z μ(z) Σ_z' q(z,z') log(q(z,z') / p(z,z'))`, with `0 log 0 = 0`.
///
/// Returns `f64::INFINITY` when `q` charges a transition that `p` forbids
/// from a state carrying mass.
pub fn relative_entropy_rate(q: &DMatrix<f64>, p: &DMatrix<f64>, mu: &[f64]) -> f64 {
    assert_eq!(q.shape(), p.shape(), "kernel shapes differ");
    assert_eq!(mu.len(), q.nrows(), "measure length differs from kernel size");
    let mut total = 0.0;
    for (z, &mass) in mu.iter().enumerate() {
        if mass <= 0.0 {
            continue;
        }
        let mut row = 0.0;
        for w in 0..q.ncols() {
            let qw = q[(z, w)];
            if qw <= 0.0 {
                continue;
            }
            let pw = p[(z, w)];
            if pw <= 0.0 {
                return f64::INFINITY;
            }
            row += qw * (qw / pw).ln();
        }
        total += mass * row;
    }
    total
}

/// Reinforcement penalty carried by the directed boundary of `set`:
/// `∫ log((d - k + kδ)/(dδ)) dμ` over nodes whose edge is in `∂set`, where `d`
/// is the lifted out-degree and `k` the number of successors over `set`.
pub fn boundary_penalty(
    g: &Graph,
    s: &LiftedGraph,
    mu: &[f64],
    set: EdgeSubset,
    delta: f64,
) -> Result<f64> {
    check_delta(delta)?;
    if mu
        .iter()
        .enumerate()
        .any(|(z, &m)| m > 0.0 && !set.contains(s.node(z).edge_id))
    {
        return Err(Error::SupportViolation(set.bits()));
    }
    let boundary = g.boundary_edges(set);
    let mut total = 0.0;
    for z in s.nodes_over(boundary) {
        if mu[z] <= 0.0 {
            continue;
        }
        let d = s.out_degree(z) as f64;
        let k = s
            .successors(z)
            .iter()
            .filter(|&&w| set.contains(s.node(w).edge_id))
            .count() as f64;
        total += mu[z] * ((d - k + k * delta) / (d * delta)).ln();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::lift;
    use approx::assert_abs_diff_eq;

    #[test]
    fn g_kernel_examples() {
        let t = k3();
        let k = kernel_on_g(&t, EdgeSubset::singleton(0), 2.0).unwrap();
        assert_abs_diff_eq!(k.matrix[(1, 0)], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.matrix[(1, 2)], 1.0 / 3.0, epsilon = 1e-15);

        let srw = kernel_on_g(&p4(), EdgeSubset::singleton(1), 1.0).unwrap();
        assert_abs_diff_eq!(srw.matrix[(1, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(srw.matrix[(0, 1)], 1.0, epsilon = 1e-15);

        let star = s3();
        let k = kernel_on_g(&star, EdgeSubset::singleton(0), 3.0).unwrap();
        assert_abs_diff_eq!(k.matrix[(0, 1)], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(k.matrix[(0, 2)], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(k.matrix[(0, 3)], 0.2, epsilon = 1e-15);

        assert_eq!(kernel_on_g(&star, EdgeSubset::EMPTY, 0.0).unwrap_err().code(), "NonPositiveDelta");
    }

    #[test]
    fn s_kernel_examples() {
        let t = k3();
        let s = lift(&t);
        let uniform = kernel_on_s(&s, EdgeSubset::singleton(0), 1.0).unwrap();
        for z in 0..6 {
            for &w in s.successors(z) {
                assert_abs_diff_eq!(uniform.matrix[(z, w)], 0.5, epsilon = 1e-15);
            }
        }
        let delta = 2.7;
        let k = kernel_on_s(&s, EdgeSubset::singleton(0), delta).unwrap();
        let ab = s.index_of(&t, 0, 1).unwrap();
        let ba = s.index_of(&t, 1, 0).unwrap();
        let bc = s.index_of(&t, 1, 2).unwrap();
        assert_abs_diff_eq!(k.matrix[(ab, ba)], delta / (delta + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(k.matrix[(ab, bc)], 1.0 / (delta + 1.0), epsilon = 1e-15);

        let p3 = g(&[(0, 1), (1, 2)], 0);
        let s3l = lift(&p3);
        let k = kernel_on_s(&s3l, p3.full_set(), 4.0).unwrap();
        let ab = s3l.index_of(&p3, 0, 1).unwrap();
        let ba = s3l.index_of(&p3, 1, 0).unwrap();
        let bc = s3l.index_of(&p3, 1, 2).unwrap();
        assert_abs_diff_eq!(k.matrix[(ab, ba)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(k.matrix[(ab, bc)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn kernels_are_stochastic_and_project() {
        let graphs = [
            k3(),
            p4(),
            s3(),
            g(&[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 0),
            g(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2), (1, 3), (2, 4)], 0),
        ];
        for g in &graphs {
            let s = lift(g);
            for bits in 0..(1u64 << g.edge_count()) {
                let set = EdgeSubset::from_bits(bits);
                for delta in [0.1, 1.0, 3.0] {
                    let kg = kernel_on_g(g, set, delta).unwrap();
                    let ks = kernel_on_s(&s, set, delta).unwrap();
                    for z in 0..s.len() {
                        assert_abs_diff_eq!(ks.matrix.row(z).sum(), 1.0, epsilon = 1e-12);
                        for w in 0..s.len() {
                            if s.successors(z).contains(&w) {
                                let (x, y) = (s.node(w).tail, s.node(w).head);
                                assert_abs_diff_eq!(ks.matrix[(z, w)], kg.matrix[(x, y)], epsilon = 1e-15);
                            } else {
                                assert_eq!(ks.matrix[(z, w)], 0.0);
                            }
                        }
                    }
                    for x in 0..g.vertex_count() {
                        assert_abs_diff_eq!(kg.matrix.row(x).sum(), 1.0, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn restrict_examples() {
        let t = k3();
        let s = lift(&t);
        let k = kernel_on_s(&s, EdgeSubset::singleton(0), 1.0).unwrap();
        let b = restrict(&t, &s, &k, EdgeSubset::singleton(0)).unwrap();
        assert_eq!(b.matrix, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));

        let two = EdgeSubset::from_edges([0, 1]);
        let k = kernel_on_s(&s, two, 1.0).unwrap();
        let b = restrict(&t, &s, &k, two).unwrap();
        assert_eq!(b.len(), 4);
        let boundary_local: Vec<usize> = s
            .lifted_boundary(two)
            .iter()
            .map(|z| b.node_ids.iter().position(|x| x == z).unwrap())
            .collect();
        for (i, sum) in b.row_sums().into_iter().enumerate() {
            let want = if boundary_local.contains(&i) { 0.5 } else { 1.0 };
            assert_abs_diff_eq!(sum, want, epsilon = 1e-15);
        }
        assert_eq!(b.leaky_rows(1e-12), boundary_local);
        assert!(b.is_strongly_connected());

        let k = kernel_on_s(&s, t.full_set(), 1.7).unwrap();
        let full = restrict(&t, &s, &k, t.full_set()).unwrap();
        assert_eq!(full.matrix, k.matrix);

        assert_eq!(restrict(&t, &s, &k, EdgeSubset::EMPTY).unwrap_err(), Error::EmptySubset);
        let p = p4();
        let sp = lift(&p);
        let kp = kernel_on_s(&sp, p.full_set(), 1.0).unwrap();
        assert_eq!(
            restrict(&p, &sp, &kp, EdgeSubset::from_edges([0, 2])).unwrap_err().code(),
            "DisconnectedSubset"
        );
    }

    #[test]
    fn entropy_examples() {
        let t = k3();
        let s = lift(&t);
        let p = kernel_on_s(&s, EdgeSubset::singleton(0), 1.0).unwrap();
        let mu = vec![1.0 / 6.0; 6];
        assert_eq!(relative_entropy_rate(&p.matrix, &p.matrix, &mu), 0.0);

        // Deterministic flip on the single edge ab.
        let mut q = DMatrix::zeros(6, 6);
        q[(0, 1)] = 1.0;
        q[(1, 0)] = 1.0;
        let mut mu = vec![0.0; 6];
        mu[0] = 0.5;
        mu[1] = 0.5;
        assert_abs_diff_eq!(
            relative_entropy_rate(&q, &p.matrix, &mu),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );

        let mut bad = DMatrix::zeros(6, 6);
        bad[(0, 0)] = 1.0;
        assert_eq!(relative_entropy_rate(&bad, &p.matrix, &mu), f64::INFINITY);
    }

    #[test]
    fn penalty_examples() {
        let t = k3();
        let s = lift(&t);
        let set = EdgeSubset::singleton(0);
        let mu = vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(boundary_penalty(&t, &s, &mu, set, 1.0).unwrap(), 0.0);

        // a->b in K3 has d=2 and one successor (b->a) over {ab}.
        let point = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_abs_diff_eq!(
            boundary_penalty(&t, &s, &point, set, 2.0).unwrap(),
            (3.0f64 / 4.0).ln(),
            epsilon = 1e-15
        );

        // a->b in P4 sits on edge ab, which is interior to {ab, bc}.
        let p = p4();
        let sp = lift(&p);
        let mut interior = vec![0.0; 6];
        interior[0] = 1.0;
        assert_eq!(
            boundary_penalty(&p, &sp, &interior, EdgeSubset::from_edges([0, 1]), 5.0).unwrap(),
            0.0
        );

        let off = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert_eq!(
            boundary_penalty(&t, &s, &off, set, 2.0).unwrap_err(),
            Error::SupportViolation(1)
        );
    }
}
