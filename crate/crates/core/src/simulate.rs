//! Trajectories of the once-reinforced walk and Monte Carlo tail estimates.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_delta, Error, Result};
use crate::family::FamilySpec;
use crate::graph::{lift, DirectedEdge, EdgeSubset, Graph};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Generator for trial `trial` under base seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone)]
pub struct WalkState {
    pub current: usize,
    pub previous_step: Option<DirectedEdge>,
    pub traversed: EdgeSubset,
    pub step: usize,
    pub rng: ChaCha8Rng,
}

impl WalkState {
    pub fn new(g: &Graph, rng: ChaCha8Rng) -> Self {
        WalkState {
            current: g.start_vertex(),
            previous_step: None,
            traversed: EdgeSubset::EMPTY,
            step: 0,
            rng,
        }
    }

    /// Probability of moving to each neighbor of `current`, in adjacency order.
    pub fn transition_probabilities(&self, g: &Graph, delta: f64) -> Vec<(usize, f64)> {
        let adj = g.adjacency(self.current);
        let weight = |e: usize| if self.traversed.contains(e) { delta } else { 1.0 };
        let total: f64 = adj.iter().map(|&(_, e)| weight(e)).sum();
        adj.iter().map(|&(y, e)| (y, weight(e) / total)).collect()
    }

    fn advance(&mut self, g: &Graph, delta: f64) {
        let adj = g.adjacency(self.current);
        let weight = |e: usize| if self.traversed.contains(e) { delta } else { 1.0 };
        let total: f64 = adj.iter().map(|&(_, e)| weight(e)).sum();
        let mut u = self.rng.gen::<f64>() * total;
        let mut choice = adj[adj.len() - 1];
        for &(y, e) in adj {
            let w = weight(e);
            if u < w {
                choice = (y, e);
                break;
            }
            u -= w;
        }
        let (head, edge_id) = choice;
        self.previous_step = Some(DirectedEdge { tail: self.current, head, edge_id });
        self.traversed = self.traversed.with(edge_id);
        self.current = head;
        self.step += 1;
    }
}

/// One step of the walk; the input state is left untouched.
pub fn step(state: &WalkState, g: &Graph, delta: f64) -> Result<WalkState> {
    check_delta(delta)?;
    let mut next = state.clone();
    next.advance(g, delta);
    Ok(next)
}

/// Renewal structure of a path: `times[0] = 0` and `times[k]` is the step
/// that first crosses the `k`-th distinct edge; `sets[k-1]` holds the first
/// `k` distinct edges, so `sets[k-1]` is complete at `times[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Renewals {
    pub times: Vec<usize>,
    pub sets: Vec<EdgeSubset>,
}

pub fn renewal_times(g: &Graph, vertices: &[usize]) -> Renewals {
    let mut times = vec![0];
    let mut sets = Vec::new();
    let mut seen = EdgeSubset::EMPTY;
    for (j, pair) in vertices.windows(2).enumerate() {
        let e = g.edge_between(pair[0], pair[1]).expect("consecutive vertices are adjacent");
        if !seen.contains(e) {
            seen = seen.with(e);
            times.push(j + 1);
            sets.push(seen);
        }
    }
    Renewals { times, sets }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub vertices: Vec<usize>,
    pub renewal_times: Vec<usize>,
    pub traversed_at_renewal: Vec<EdgeSubset>,
}

impl Trajectory {
    pub fn from_vertices(g: &Graph, vertices: Vec<usize>) -> Self {
        let Renewals { times, sets } = renewal_times(g, &vertices);
        Trajectory { vertices, renewal_times: times, traversed_at_renewal: sets }
    }

    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Stopped(usize),
    Censored,
}

/// First `n ≥ 1` at which the edges crossed in the first `n` steps leave the family.
fn stopping_step(
    g: &Graph,
    delta: f64,
    spec: &FamilySpec,
    max_steps: usize,
    state: &mut WalkState,
    mut record: impl FnMut(usize),
) -> Outcome {
    while state.step < max_steps {
        state.advance(g, delta);
        record(state.current);
        if !spec.admits(g, state.traversed) {
            return Outcome::Stopped(state.step);
        }
    }
    Outcome::Censored
}

fn check_spec(g: &Graph, spec: &FamilySpec) -> Result<()> {
    let full = g.full_set();
    match spec {
        FamilySpec::Hitting(t) | FamilySpec::SubgraphCover(t) if !t.is_subset(full) => {
            Err(Error::UnknownEdge(format!("{:?}", t.difference(full))))
        }
        FamilySpec::Custom(_) => crate::family::enumerate_family(g, spec).map(|_| ()),
        _ => Ok(()),
    }
}

pub fn run_until(
    g: &Graph,
    delta: f64,
    spec: &FamilySpec,
    max_steps: usize,
    seed: u64,
) -> Result<(Outcome, Trajectory)> {
    check_delta(delta)?;
    check_spec(g, spec)?;
    if max_steps == 0 {
        return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
    }
    let mut state = WalkState::new(g, trial_rng(seed, 0));
    let mut vertices = vec![state.current];
    let outcome = stopping_step(g, delta, spec, max_steps, &mut state, |v| vertices.push(v));
    Ok((outcome, Trajectory::from_vertices(g, vertices)))
}

/// `ℒⁿ`: fraction of the first `n` steps spent on each lifted node.
pub fn empirical_measure(g: &Graph, t: &Trajectory, n: usize) -> Result<Vec<f64>> {
    if n == 0 || n > t.len() {
        return Err(Error::HorizonTooLong { horizon: n, steps: t.len() });
    }
    let s = lift(g);
    let mut mu = vec![0.0; s.len()];
    for pair in t.vertices[..=n].windows(2) {
        let z = s.index_of(g, pair[0], pair[1]).expect("consecutive vertices are adjacent");
        mu[z] += 1.0;
    }
    for m in &mut mu {
        *m /= n as f64;
    }
    Ok(mu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub n_grid: Vec<usize>,
    pub survival: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

/// Fraction of independent trials with `𝒯 > n` for each `n` in the grid.
pub fn tail_estimate(
    g: &Graph,
    delta: f64,
    spec: &FamilySpec,
    n_grid: &[usize],
    trials: u64,
    seed: u64,
) -> Result<TailEstimate> {
    check_delta(delta)?;
    check_spec(g, spec)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("n grid must be nonempty and strictly ascending".into()));
    }
    let horizon = *n_grid.last().expect("nonempty");
    // counts[n] = trials stopping at step n; counts[horizon + 1] = survivors
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; horizon + 2],
            |mut acc, t| {
                let mut state = WalkState::new(g, trial_rng(seed, t));
                match stopping_step(g, delta, spec, horizon, &mut state, |_| {}) {
                    Outcome::Stopped(n) => acc[n] += 1,
                    Outcome::Censored => acc[horizon + 1] += 1,
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; horizon + 2],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = trials as f64;
    let mut survival = Vec::with_capacity(n_grid.len());
    let mut stderr = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let alive: u64 = counts[n + 1..].iter().sum();
        let p = alive as f64 / total;
        survival.push(p);
        stderr.push((p * (1.0 - p) / total).sqrt());
    }
    Ok(TailEstimate { n_grid: n_grid.to_vec(), survival, stderr, trials, seed })
}

/// Least-squares slope of `log survival` against `n` over horizons in `window`,
/// with its regression standard error.
pub fn fit_decay_rate(est: &TailEstimate, window: RangeInclusive<usize>) -> Result<(f64, f64)> {
    let points: Vec<(f64, f64)> = est
        .n_grid
        .iter()
        .zip(&est.survival)
        .filter(|(n, _)| window.contains(n))
        .map(|(&n, &p)| (n as f64, p))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(points.len()));
    }
    if let Some(&(n, _)) = points.iter().find(|(_, p)| *p <= 0.0) {
        return Err(Error::ZeroSurvivalInWindow(n as usize));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn reinforced_step_probabilities() {
        let g = k3();
        let ab = g.edge_between(0, 1).unwrap();
        let mut state = WalkState::new(&g, trial_rng(1, 0));
        state.current = 1;
        state.traversed = EdgeSubset::singleton(ab);
        let probs = state.transition_probabilities(&g, 2.0);
        let to = |v: usize| probs.iter().find(|x| x.0 == v).unwrap().1;
        assert_abs_diff_eq!(to(0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(to(2), 1.0 / 3.0, epsilon = 1e-15);

        let mut hits = 0;
        let trials = 60_000;
        for t in 0..trials {
            let mut s = state.clone();
            s.rng = trial_rng(5, t);
            if step(&s, &g, 2.0).unwrap().current == 0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        assert!((freq - 2.0 / 3.0).abs() < 4.0 * (2.0f64 / 9.0 / trials as f64).sqrt());
    }

    #[test]
    fn step_is_deterministic() {
        let g = k3();
        let state = WalkState::new(&g, trial_rng(9, 3));
        let a = step(&state, &g, 0.4).unwrap();
        let b = step(&state, &g, 0.4).unwrap();
        assert_eq!(a.current, b.current);
        assert_eq!(a.traversed, b.traversed);
        assert_eq!(a.step, 1);
        assert_eq!(step(&state, &g, -1.0).unwrap_err(), Error::NonPositiveDelta(-1.0));
    }

    #[test]
    fn neutral_delta_is_uniform() {
        let g = s3();
        let mut state = WalkState::new(&g, trial_rng(0, 0));
        state.traversed = EdgeSubset::singleton(0);
        for (_, p) in state.transition_probabilities(&g, 1.0) {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn stopping_examples() {
        let g = k3();
        for seed in 0..200 {
            let (out, _) = run_until(&g, 1.0, &FamilySpec::EdgeCover, 10_000, seed).unwrap();
            match out {
                Outcome::Stopped(n) => assert!(n >= 3),
                Outcome::Censored => panic!("censored"),
            }
        }
        let target = g.parse_edge_tokens("0-1").unwrap();
        let ac = g.edge_between(0, 2).unwrap();
        for seed in 0..200 {
            let (out, t) = run_until(&g, 1.0, &FamilySpec::Hitting(target), 10_000, seed).unwrap();
            if g.edge_between(t.vertices[0], t.vertices[1]) == Some(ac) {
                assert_eq!(out, Outcome::Stopped(1));
            }
        }
        let p = p4();
        let target = p.parse_edge_tokens("0-1").unwrap();
        let (out, _) = run_until(&p, 1.0, &FamilySpec::SubgraphCover(target), 10, 3).unwrap();
        assert_eq!(out, Outcome::Stopped(1));
        let (out, t) = run_until(&g, 1.0, &FamilySpec::EdgeCover, 2, 3).unwrap();
        assert_eq!(out, Outcome::Censored);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn renewal_examples() {
        let g = k3();
        let ab = g.edge_between(0, 1).unwrap();
        let ac = g.edge_between(0, 2).unwrap();
        let r = renewal_times(&g, &[0, 1, 0, 2]);
        assert_eq!(r.times, vec![0, 1, 3]);
        assert_eq!(r.sets, vec![EdgeSubset::singleton(ab), EdgeSubset::from_edges([ab, ac])]);
        assert_eq!(renewal_times(&g, &[0, 1, 2, 0]).times, vec![0, 1, 2, 3]);
        assert_eq!(renewal_times(&g, &[0, 1, 0, 1]).times, vec![0, 1]);
    }

    #[test]
    fn empirical_examples() {
        let g = k3();
        let s = lift(&g);
        let z = |a, b| s.index_of(&g, a, b).unwrap();
        let t = Trajectory::from_vertices(&g, vec![0, 1, 2]);
        let mu = empirical_measure(&g, &t, 2).unwrap();
        assert_eq!(mu[z(0, 1)], 0.5);
        assert_eq!(mu[z(1, 2)], 0.5);
        let mu = empirical_measure(&g, &t, 1).unwrap();
        assert_eq!(mu[z(0, 1)], 1.0);
        let t = Trajectory::from_vertices(&g, vec![0, 1, 0, 1]);
        let mu = empirical_measure(&g, &t, 3).unwrap();
        assert_abs_diff_eq!(mu[z(0, 1)], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mu[z(1, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(
            empirical_measure(&g, &t, 4).unwrap_err(),
            Error::HorizonTooLong { horizon: 4, steps: 3 }
        );
    }

    fn synthetic(c: f64, p: f64) -> TailEstimate {
        let n_grid: Vec<usize> = (1..=20).collect();
        TailEstimate {
            survival: n_grid.iter().map(|&n| c * p.powi(n as i32)).collect(),
            stderr: vec![0.0; n_grid.len()],
            n_grid,
            trials: 1,
            seed: 0,
        }
    }

    #[test]
    fn fit_synthetic_geometric() {
        let (slope, se) = fit_decay_rate(&synthetic(1.0, 0.5), 1..=20).unwrap();
        assert_abs_diff_eq!(slope, -std::f64::consts::LN_2, epsilon = 1e-12);
        assert!(se < 1e-6);
        let (slope, _) = fit_decay_rate(&synthetic(0.3, 0.8), 5..=15).unwrap();
        assert_abs_diff_eq!(slope, 0.8f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn fit_errors() {
        let est = synthetic(1.0, 0.5);
        assert_eq!(fit_decay_rate(&est, 1..=2).unwrap_err(), Error::InsufficientData(2));
        let mut est = est;
        est.survival[4] = 0.0;
        assert_eq!(fit_decay_rate(&est, 1..=10).unwrap_err(), Error::ZeroSurvivalInWindow(5));
    }

    #[test]
    fn tail_estimate_contract() {
        let g = k3();
        let spec = FamilySpec::EdgeCover;
        assert!(matches!(tail_estimate(&g, 1.0, &spec, &[3], 0, 1), Err(Error::InvalidArgument(_))));
        let a = tail_estimate(&g, 1.0, &spec, &[2, 3, 5], 20_000, 42).unwrap();
        let b = tail_estimate(&g, 1.0, &spec, &[2, 3, 5], 20_000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.survival[0], 1.0);
        assert!((a.survival[1] - 0.75).abs() < 4.0 * a.stderr[1]);
        assert!(a.survival.windows(2).all(|w| w[1] <= w[0]));
    }

    fn corpus() -> Vec<Graph> {
        vec![
            k3(),
            p4(),
            s3(),
            g(&[(0, 1), (1, 2), (2, 3), (3, 0)], 0),
            g(&[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 1),
            g(&[(0, 1), (1, 2), (2, 3), (3, 4)], 2),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn renewals_are_nested_growth(which in 0usize..6, delta in 0.05f64..5.0, seed in any::<u64>(), len in 1usize..60) {
            let g = &corpus()[which];
            let (_, t) = run_until(g, delta, &FamilySpec::EdgeCover, len, seed).unwrap();
            let r = renewal_times(g, &t.vertices);
            prop_assert_eq!(r.times[0], 0);
            prop_assert_eq!(r.times.len(), r.sets.len() + 1);
            prop_assert!(r.times.windows(2).all(|w| w[0] < w[1]));
            let first = r.sets[0];
            prop_assert_eq!(first.len(), 1);
            prop_assert!(first.is_subset(g.incident(g.start_vertex())));
            for (k, pair) in r.sets.windows(2).enumerate() {
                prop_assert!(pair[0].is_subset(pair[1]));
                prop_assert_eq!(pair[1].len(), k + 2);
                prop_assert!(pair[1].difference(pair[0]).is_subset(g.frontier(pair[0])));
            }
            for set in &r.sets {
                prop_assert!(g.is_connected_subset(*set));
            }
        }

        #[test]
        fn covered_walk_is_simple(which in 0usize..6, delta in 0.05f64..5.0, seed in any::<u64>()) {
            let g = &corpus()[which];
            let mut state = WalkState::new(g, trial_rng(seed, 0));
            while state.traversed != g.full_set() {
                state = step(&state, g, delta).unwrap();
            }
            for _ in 0..5 {
                let d = g.degree(state.current) as f64;
                for (_, p) in state.transition_probabilities(g, delta) {
                    prop_assert!((p - 1.0 / d).abs() < 1e-12);
                }
                state = step(&state, g, delta).unwrap();
            }
        }

        #[test]
        fn traversed_stays_admissible(which in 0usize..6, delta in 0.05f64..5.0, seed in any::<u64>()) {
            let g = &corpus()[which];
            let mut state = WalkState::new(g, trial_rng(seed, 1));
            let mut prev = EdgeSubset::EMPTY;
            for _ in 0..40 {
                state = step(&state, g, delta).unwrap();
                prop_assert!(g.is_admissible(state.traversed));
                prop_assert!(prev.is_subset(state.traversed));
                prev = state.traversed;
            }
        }
    }
}
