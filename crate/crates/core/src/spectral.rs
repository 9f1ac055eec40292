//! Perron roots of substochastic blocks and the objects built from them.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::SubstochasticBlock;

/// Relative width of the Collatz–Wielandt bracket at which iteration stops.
pub const EIGEN_TOLERANCE: f64 = 1e-13;
pub const MAX_ITERATIONS: usize = 1_000_000;
/// Blocks up to this size fall back to a dense eigensolver if iteration stalls.
pub const DENSE_FALLBACK_MAX: usize = 64;

/// Perron root with positive right and left eigenvectors (each summing to one).
#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub rho: f64,
    pub right_vec: Vec<f64>,
    pub left_vec: Vec<f64>,
    pub iterations: usize,
    /// `max_i |(P h)_i - rho h_i|`.
    pub residual: f64,
}

/// Perron root of a strongly connected nonnegative block.
///
/// Iterates `v <- (P + cI) v` where the shift `c` tracks the lower
/// Collatz–Wielandt bound, so the period-2 blocks produced by single edges
/// converge as fast as aperiodic ones. If that stalls (nearly reducible
/// blocks at small δ), it switches to shift-and-invert steps
/// `v <- (σI - P)^{-1} v` with `σ` the upper Collatz–Wielandt bound, which
/// keep `v` positive and converge quadratically.
pub fn spectral_radius(block: &SubstochasticBlock) -> Result<SpectralResult> {
    if !block.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let p = &block.matrix;
    if p.nrows() == 1 {
        return Ok(SpectralResult {
            rho: p[(0, 0)],
            right_vec: vec![1.0],
            left_vec: vec![1.0],
            iterations: 0,
            residual: 0.0,
        });
    }
    let right = perron_iterate(p, EIGEN_TOLERANCE, MAX_ITERATIONS);
    let left = perron_iterate(&p.transpose(), EIGEN_TOLERANCE, MAX_ITERATIONS);
    let (rho, h, g, iterations) = match (right, left) {
        (Some((rho, h, i)), Some((_, g, j))) => (rho, h, g, i + j),
        _ if p.nrows() <= DENSE_FALLBACK_MAX => {
            let (rho, h, g) = dense_perron(p)?;
            (rho, h, g, MAX_ITERATIONS)
        }
        _ => return Err(Error::NoConvergence(MAX_ITERATIONS)),
    };
    let residual = max_residual(p, &h, rho);
    Ok(SpectralResult {
        rho,
        right_vec: h.iter().copied().collect(),
        left_vec: g.iter().copied().collect(),
        iterations,
        residual,
    })
}

/// Power steps tried before switching to shift-and-invert.
const POWER_PHASE: usize = 5_000;

fn bracket(p: &DMatrix<f64>, v: &DVector<f64>) -> (DVector<f64>, f64, f64) {
    let w = p * v;
    let (lo, hi) = w
        .iter()
        .zip(v.iter())
        .map(|(a, b)| a / b)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    (w, lo, hi)
}

fn perron_iterate(p: &DMatrix<f64>, tol: f64, max_iter: usize) -> Option<(f64, DVector<f64>, usize)> {
    let n = p.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for it in 1..=max_iter {
        let (w, lo, hi) = bracket(p, &v);
        if hi - lo <= tol * hi {
            let rho = w.sum() / v.sum();
            return Some((rho, v, it));
        }
        let next = if it <= POWER_PHASE {
            &w + &v * lo
        } else {
            let shifted = DMatrix::identity(n, n) * hi - p;
            let x = shifted.lu().solve(&v)?;
            if !x.iter().all(|&c| c > 0.0 && c.is_finite()) {
                return None;
            }
            x
        };
        v = &next / next.sum();
    }
    None
}

/// Largest eigenvalue modulus from a Schur decomposition of `P + cI`.
/// The shift breaks the modulus ties that stall unshifted QR on periodic blocks.
pub(crate) fn dense_spectral_radius(p: &DMatrix<f64>) -> Option<f64> {
    let n = p.nrows();
    [0.5, 1.0, 0.0].iter().find_map(|&c| {
        let schur = Schur::try_new(p + DMatrix::identity(n, n) * c, f64::EPSILON, 100_000)?;
        let shift = Complex::new(c, 0.0);
        Some(schur.complex_eigenvalues().iter().map(|z| (z - shift).norm()).fold(0.0, f64::max))
    })
}

fn dense_perron(p: &DMatrix<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let rho = dense_spectral_radius(p).ok_or(Error::NoConvergence(0))?;
    let null_vector = |m: DMatrix<f64>| -> Result<DVector<f64>> {
        let n = m.nrows();
        let shifted = m - DMatrix::identity(n, n) * rho;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::NoConvergence(0))?;
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        let mut v: DVector<f64> = v_t.row(idx).transpose();
        if v.sum() < 0.0 {
            v = -v;
        }
        let v = v.map(|x| x.max(0.0));
        Ok(&v / v.sum())
    };
    Ok((rho, null_vector(p.clone())?, null_vector(p.transpose())?))
}

fn max_residual(p: &DMatrix<f64>, h: &DVector<f64>, rho: f64) -> f64 {
    (p * h - h * rho).amax()
}

/// The tilted pair realizing the entropy infimum for one block.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalCertificate {
    /// Lifted node ids the vectors and matrix are indexed by.
    pub node_ids: Vec<usize>,
    pub mu_star: Vec<f64>,
    pub q_star: Vec<Vec<f64>>,
    pub objective: f64,
}

impl VariationalCertificate {
    pub fn q_matrix(&self) -> DMatrix<f64> {
        let n = self.node_ids.len();
        DMatrix::from_fn(n, n, |i, j| self.q_star[i][j])
    }
}

/// Doob transform of `block` by its Perron vector:
/// `q*(z,z') = P(z,z') h(z') / (rho h(z))`, `mu* ∝ g h`.
pub fn tilted_certificate(block: &SubstochasticBlock, sr: &SpectralResult) -> Result<VariationalCertificate> {
    let n = block.len();
    if sr.right_vec.len() != n || sr.left_vec.len() != n {
        return Err(Error::InvalidArgument("spectral result does not match block".into()));
    }
    if sr.rho.is_nan() || sr.rho <= 0.0 {
        return Err(Error::InvalidArgument("Perron root is zero".into()));
    }
    let h = &sr.right_vec;
    let q = DMatrix::from_fn(n, n, |i, j| block.matrix[(i, j)] * h[j] / (sr.rho * h[i]));
    // Renormalize rows against accumulated rounding.
    let q = DMatrix::from_fn(n, n, |i, j| q[(i, j)] / q.row(i).sum());
    let weights: Vec<f64> = sr.left_vec.iter().zip(h).map(|(a, b)| a * b).collect();
    let total: f64 = weights.iter().sum();
    let mu: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let objective = crate::kernels::relative_entropy_rate(&q, &block.matrix, &mu);
    Ok(VariationalCertificate {
        node_ids: block.node_ids.clone(),
        mu_star: mu,
        q_star: q.row_iter().map(|r| r.iter().copied().collect()).collect(),
        objective,
    })
}

/// Independent estimate of `-log rho` from the dual form
/// `sup_{u > 0} min_z log(u(z) / (P u)(z))`.
///
/// Candidate test functions are `u = (λI - P)^{-1} 1`, which is positive
/// exactly when `λ > rho`; bisection on `λ` drives `u` toward the optimum.
/// The returned value is the best dual objective seen, so it never exceeds
/// `-log rho` and is within `tolerance` of it on success.
pub fn dv_oracle(block: &SubstochasticBlock, iterations: usize, tolerance: f64) -> Result<f64> {
    if !block.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let p = &block.matrix;
    let n = p.nrows();
    let ones = DVector::from_element(n, 1.0);
    let objective = |u: &DVector<f64>| -> f64 {
        let pu = p * u;
        u.iter()
            .zip(pu.iter())
            .map(|(a, b)| (a / b).ln())
            .fold(f64::INFINITY, f64::min)
    };
    let candidate = |lambda: f64| -> Option<DVector<f64>> {
        let m = DMatrix::identity(n, n) * lambda - p;
        let u = m.lu().solve(&ones)?;
        u.iter().all(|&x| x > 0.0 && x.is_finite()).then_some(u)
    };
    let max_row = block.row_sums().into_iter().fold(0.0, f64::max);
    let mut hi = max_row * (1.0 + 1e-3) + 1e-300;
    let mut best = match candidate(hi) {
        Some(u) => objective(&u),
        None => return Err(Error::NoConvergence(0)),
    };
    let mut lo = 0.0f64;
    for _ in 0..iterations {
        if lo > 0.0 && (hi / lo).ln() <= tolerance {
            return Ok(best);
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        match candidate(mid) {
            Some(u) => {
                hi = mid;
                best = best.max(objective(&u));
            }
            None => lo = mid,
        }
    }
    Err(Error::NoConvergence(iterations))
}
