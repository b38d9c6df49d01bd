//! Hilbert-space k-means.
//!
//! States are compressed into `K` centroids with k-means++ seeding followed by
//! Lloyd iterations. The centroid of a cluster is the principal eigenvector of
//! the members' average projector, so a global phase on any member never moves
//! it. The objective is `sum_i (1 - |<s_i|c_a(i)>|^2)`, the summed squared
//! trace distance between each state and its centroid; both Lloyd steps
//! minimize it exactly, so its trace is non-increasing for exact metrics.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::embedding::QuantumMemory;
use crate::qudit::{fidelity_pure, same_dim, QuditState};
use crate::rng;
use crate::{Error, Result, C64};

/// Slack used when comparing a mean fidelity against the auto-K threshold.
pub const THRESHOLD_SLACK: f64 = 1e-12;
/// Eigenvalues this close to the maximum count as tied.
const EIGEN_TIE: f64 = 1e-12;

/// Distance used for k-means++ weighting and assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Metric {
    /// `1 - |<a|b>|^2`.
    #[default]
    FidelityDistance,
    /// `min_theta ||a - e^{i theta} b|| = sqrt(2 - 2|<a|b>|)`.
    Euclidean,
    /// `1 - F_hat` with `F_hat` estimated from `shots` SWAP-test outcomes.
    SwapTest { shots: u32 },
}

impl Metric {
    pub fn is_exact(&self) -> bool {
        !matches!(self, Metric::SwapTest { .. })
    }
}

/// How the number of clusters is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KMode {
    Fixed { k: usize },
    /// Smallest `K` whose mean intra-cluster fidelity reaches `threshold`.
    Auto { threshold: f64, k_max: usize },
}

impl Default for KMode {
    fn default() -> Self {
        KMode::Auto {
            threshold: 0.95,
            k_max: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterConfig {
    pub k_mode: KMode,
    pub metric: Metric,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    /// Independent k-means++ seedings per Lloyd call; the lowest final
    /// objective wins.
    pub restarts: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k_mode: KMode::default(),
            metric: Metric::default(),
            max_iters: 100,
            rel_tol: 1e-10,
            seed: 0,
            restarts: 10,
        }
    }
}

impl ClusterConfig {
    pub fn fixed(k: usize, seed: u64) -> Self {
        Self {
            k_mode: KMode::Fixed { k },
            seed,
            ..Self::default()
        }
    }

    pub fn auto(threshold: f64, k_max: usize, seed: u64) -> Self {
        Self {
            k_mode: KMode::Auto { threshold, k_max },
            seed,
            ..Self::default()
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidClusterConfig(msg));
        match self.k_mode {
            KMode::Fixed { k } if k < 1 => return bad("fixed K must be >= 1".into()),
            KMode::Auto { threshold, .. } if !(threshold > 0.0 && threshold <= 1.0) => {
                return bad(format!("threshold {threshold} outside (0, 1]"))
            }
            KMode::Auto { k_max, .. } if k_max < 1 => return bad("k_max must be >= 1".into()),
            _ => {}
        }
        if let Metric::SwapTest { shots } = self.metric {
            if shots < 1 {
                return bad("swap test needs at least one shot".into());
            }
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1".into());
        }
        if !(self.rel_tol > 0.0) {
            return bad(format!("rel_tol {} must be positive", self.rel_tol));
        }
        if self.restarts < 1 {
            return bad("restarts must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult {
    pub centroids: Vec<QuditState>,
    pub assignments: Vec<usize>,
    /// Objective after each Lloyd iteration.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub k_used: usize,
    /// False when assignments used estimated distances, which voids the
    /// non-increasing guarantee on `objective_trace`.
    pub objective_monotone: bool,
}

impl ClusterResult {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }

    /// Mean over states of `|<s_i|c_a(i)>|^2`.
    pub fn mean_intra_fidelity(&self, mem: &QuantumMemory) -> f64 {
        mean_intra_fidelity(mem.states(), &self.centroids, &self.assignments)
    }
}

/// Estimates `|<a|b>|^2` from `shots` SWAP tests; `P(0) = (1 + |<a|b>|^2) / 2`.
pub fn swap_test_overlap<R: Rng + ?Sized>(a: &QuditState, b: &QuditState, shots: u32, rng: &mut R) -> Result<f64> {
    if shots < 1 {
        return Err(Error::InvalidClusterConfig("swap test needs at least one shot".into()));
    }
    let f = fidelity_pure(a, b)?;
    let p0 = ((1.0 + f) / 2.0).clamp(0.0, 1.0);
    // the count of zero outcomes over independent shots
    let zeros = Binomial::new(u64::from(shots), p0)
        .expect("p0 lies in [0, 1]")
        .sample(rng);
    let m_hat = zeros as f64 / f64::from(shots);
    Ok((2.0 * m_hat - 1.0).clamp(0.0, 1.0))
}

/// Distance between two states under `metric`.
pub fn distance(a: &QuditState, b: &QuditState, metric: Metric, rng: Option<&mut dyn RngCore>) -> Result<f64> {
    match metric {
        Metric::FidelityDistance => Ok((1.0 - fidelity_pure(a, b)?).max(0.0)),
        Metric::Euclidean => {
            let overlap = a.inner(b)?.norm().min(1.0);
            Ok((2.0 - 2.0 * overlap).max(0.0).sqrt())
        }
        Metric::SwapTest { shots } => {
            let rng = rng.ok_or(Error::MissingRng)?;
            Ok(1.0 - swap_test_overlap(a, b, shots, rng)?)
        }
    }
}

/// k-means++ seeding. Returns indices into `states`.
fn kmeans_pp_indices(states: &[QuditState], k: usize, metric: Metric, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
    let n = states.len();
    if n == 0 {
        return Err(Error::EmptyMemory);
    }
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, x: n });
    }
    let mut chosen = vec![rng.random_range(0..n)];
    let mut is_chosen = vec![false; n];
    is_chosen[chosen[0]] = true;
    let mut nearest_sq = vec![f64::INFINITY; n];
    while chosen.len() < k {
        let last = &states[*chosen.last().expect("non-empty")];
        for i in 0..n {
            if !is_chosen[i] {
                let dist = distance(&states[i], last, metric, Some(&mut *rng))?;
                nearest_sq[i] = nearest_sq[i].min(dist * dist);
            }
        }
        let weights: Vec<f64> = (0..n).map(|i| if is_chosen[i] { 0.0 } else { nearest_sq[i] }).collect();
        let next = match WeightedIndex::new(&weights) {
            Ok(dist) => dist.sample(rng),
            // every remaining state duplicates a chosen one
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|&i| !is_chosen[i]).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        is_chosen[next] = true;
        chosen.push(next);
    }
    Ok(chosen)
}

/// k-means++ initial centroids drawn from the memory.
pub fn kmeans_pp_init(mem: &QuantumMemory, k: usize, metric: Metric, rng: &mut dyn RngCore) -> Result<Vec<QuditState>> {
    let idx = kmeans_pp_indices(mem.states(), k, metric, rng)?;
    Ok(idx.into_iter().map(|i| mem.states()[i].clone()).collect())
}

/// Principal eigenvector of `(1/n) sum_i |s_i><s_i|`.
pub fn centroid_update(members: &[&QuditState]) -> Result<QuditState> {
    let first = members.first().ok_or(Error::EmptyMemory)?;
    let d = first.dim();
    let mut acc = DMatrix::<C64>::zeros(d, d);
    for s in members {
        same_dim(d, s.dim())?;
        let v = s.vector();
        acc += v * v.adjoint();
    }
    acc.unscale_mut(members.len() as f64);
    let eig = SymmetricEigen::new(acc);
    let top = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let col = eig
        .eigenvalues
        .iter()
        .position(|&l| l >= top - EIGEN_TIE)
        .expect("at least one eigenvalue");
    let v = eig.eigenvectors.column(col).into_owned();
    let n = v.norm();
    Ok(QuditState::from_vector_unchecked(v.unscale(n)))
}

/// `sum_i (1 - |<s_i|c_a(i)>|^2)`.
pub fn objective(states: &[QuditState], centroids: &[QuditState], assignments: &[usize]) -> f64 {
    states
        .iter()
        .zip(assignments)
        .map(|(s, &a)| 1.0 - s.vector().dotc(centroids[a].vector()).norm_sqr())
        .sum()
}

pub fn mean_intra_fidelity(states: &[QuditState], centroids: &[QuditState], assignments: &[usize]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    1.0 - objective(states, centroids, assignments) / states.len() as f64
}

fn exact_distance(a: &QuditState, b: &QuditState) -> f64 {
    1.0 - a.vector().dotc(b.vector()).norm_sqr()
}

/// Nearest centroid per state, lowest index on ties, followed by repair of
/// empty clusters.
fn assign(
    states: &[QuditState],
    centroids: &mut [QuditState],
    metric: Metric,
    rng: &mut dyn RngCore,
) -> Result<Vec<usize>> {
    let k = centroids.len();
    let mut out = Vec::with_capacity(states.len());
    for s in states {
        let mut best = (0, f64::INFINITY);
        for (j, c) in centroids.iter().enumerate() {
            let dist = match metric {
                Metric::FidelityDistance => exact_distance(s, c),
                _ => distance(s, c, metric, Some(&mut *rng))?,
            };
            if dist < best.1 {
                best = (j, dist);
            }
        }
        out.push(best.0);
    }

    // Reseed each empty cluster at the state farthest from its centroid,
    // taken from a cluster that keeps at least one member.
    let mut counts = vec![0usize; k];
    for &a in &out {
        counts[a] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let donor = (0..states.len())
            .filter(|&i| counts[out[i]] >= 2)
            .map(|i| (i, exact_distance(&states[i], &centroids[out[i]])))
            .fold(None::<(usize, f64)>, |best, (i, dist)| match best {
                Some((_, bd)) if bd >= dist => best,
                _ => Some((i, dist)),
            });
        let Some((i, _)) = donor else {
            return Err(Error::TooManyClusters { k, x: states.len() });
        };
        counts[out[i]] -= 1;
        out[i] = j;
        counts[j] = 1;
        centroids[j] = states[i].clone();
    }
    Ok(out)
}

fn lloyd_once(states: &[QuditState], k: usize, cfg: &ClusterConfig, rng: &mut dyn RngCore) -> Result<ClusterResult> {
    let init = kmeans_pp_indices(states, k, cfg.metric, rng)?;
    let mut centroids: Vec<QuditState> = init.iter().map(|&i| states[i].clone()).collect();
    let mut assignments: Vec<usize> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let next = assign(states, &mut centroids, cfg.metric, rng)?;
        if next == assignments {
            break;
        }
        assignments = next;
        for (j, c) in centroids.iter_mut().enumerate() {
            let members: Vec<&QuditState> = states
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == j)
                .map(|(s, _)| s)
                .collect();
            *c = centroid_update(&members)?;
        }
        iterations += 1;
        let obj = objective(states, &centroids, &assignments);
        let settled = match trace.last() {
            Some(&prev) => obj <= 0.0 || (prev - obj) < cfg.rel_tol * prev,
            None => obj <= 0.0,
        };
        trace.push(obj);
        if settled {
            break;
        }
    }

    // Leave every state on its nearest centroid even when stopping early.
    let last = assign(states, &mut centroids, cfg.metric, rng)?;
    if last != assignments {
        assignments = last;
        trace.push(objective(states, &centroids, &assignments));
    }

    Ok(ClusterResult {
        centroids,
        assignments,
        objective_trace: trace,
        iterations_run: iterations,
        k_used: k,
        objective_monotone: cfg.metric.is_exact(),
    })
}

/// Lloyd clustering with a fixed `K` taken from `cfg` (or `k` for auto
/// configurations driven by [`select_k`]).
pub fn lloyd_cluster(mem: &QuantumMemory, cfg: &ClusterConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let k = match cfg.k_mode {
        KMode::Fixed { k } => k,
        KMode::Auto { .. } => {
            return Err(Error::InvalidClusterConfig("lloyd_cluster needs a fixed K".into()));
        }
    };
    lloyd_with_k(mem, k, cfg)
}

fn lloyd_with_k(mem: &QuantumMemory, k: usize, cfg: &ClusterConfig) -> Result<ClusterResult> {
    let states = mem.states();
    if states.is_empty() {
        return Err(Error::EmptyMemory);
    }
    if k > states.len() {
        return Err(Error::TooManyClusters { k, x: states.len() });
    }
    let mut stream = rng::from_seed(cfg.seed);
    let mut best: Option<ClusterResult> = None;
    for _ in 0..cfg.restarts {
        let run = lloyd_once(states, k, cfg, &mut stream)?;
        if best.as_ref().is_none_or(|b| run.final_objective() < b.final_objective()) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Runs Lloyd for `K = 1, 2, ...` and keeps the first result whose mean
/// intra-cluster fidelity reaches the threshold, capped at `min(k_max, X)`.
pub fn select_k(mem: &QuantumMemory, cfg: &ClusterConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let (threshold, k_max) = match cfg.k_mode {
        KMode::Auto { threshold, k_max } => (threshold, k_max),
        KMode::Fixed { k } => return lloyd_with_k(mem, k, cfg),
    };
    if mem.is_empty() {
        return Err(Error::EmptyMemory);
    }
    let cap = k_max.min(mem.len());
    let mut last = None;
    for k in 1..=cap {
        let result = lloyd_with_k(mem, k, cfg)?;
        if result.mean_intra_fidelity(mem) >= threshold - THRESHOLD_SLACK {
            return Ok(result);
        }
        last = Some(result);
    }
    Ok(last.expect("cap >= 1"))
}
