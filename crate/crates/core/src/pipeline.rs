//! End-to-end experiment: traffic, embedding, clustering, resource
//! accounting, transmission and metrics.
//!
//! Every `(d, round)` cell is independent. Traffic depends only on the master
//! seed and the round, so the semantic-agnostic baseline `C = X` is the same
//! for every dimension; clustering draws from a stream keyed by
//! `(master_seed, d, round)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    avg_teleport_fidelity, lambda_min, min_output_entropy, purification_rounds, TeleportationLink, PURIFICATION_MODEL,
};
use crate::clustering::{select_k, ClusterConfig, KMode, Metric};
use crate::embedding::{embed_dataset, ClassicalSample, EmbeddingKind, EmbeddingMap, QuantumMemory};
use crate::qudit::{fidelity_state_vs_density, QuditState};
use crate::rng::{self, derive_seed, Domain};
use crate::traffic::{generate_rounds, LoadKind, LoadProfile, RoundLoad, TrafficModel};
use crate::{Error, Result, C64};

/// Fractional golden ratio used to hash packet sizes into a jitter feature.
pub const GOLDEN_FRACTION: f64 = 0.618_033_988_7;
/// Number of features produced per packet.
pub const PACKET_FEATURES: usize = 3;

/// `(size / 128, (round mod 16) / 16, frac(size * 0.618...))`.
pub fn packet_to_features(size_bytes: f64, round_index: usize) -> Result<ClassicalSample> {
    if !(size_bytes > 0.0) || !size_bytes.is_finite() {
        return Err(Error::NonEmbeddable(format!("packet size {size_bytes} must be positive")));
    }
    let jitter = (size_bytes * GOLDEN_FRACTION).fract();
    ClassicalSample::new(
        vec![size_bytes / 128.0, (round_index % 16) as f64 / 16.0, jitter],
        format!("r{round_index}"),
    )
}

/// Clustering options shared by every cell; the seed is derived per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSettings {
    pub k_mode: KMode,
    pub metric: Metric,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub restarts: usize,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        let base = ClusterConfig::default();
        Self {
            k_mode: base.k_mode,
            metric: base.metric,
            max_iters: base.max_iters,
            rel_tol: base.rel_tol,
            restarts: base.restarts,
        }
    }
}

impl ClusterSettings {
    pub fn with_seed(&self, seed: u64) -> ClusterConfig {
        ClusterConfig {
            k_mode: self.k_mode,
            metric: self.metric,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            seed,
            restarts: self.restarts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficSettings {
    pub mean_bytes: f64,
    pub std_bytes: f64,
    pub rounds: usize,
    pub profile: LoadKind,
}

impl Default for TrafficSettings {
    fn default() -> Self {
        let profile = LoadProfile::default();
        Self {
            mean_bytes: crate::traffic::DEFAULT_MEAN_BYTES,
            std_bytes: crate::traffic::DEFAULT_STD_BYTES,
            rounds: profile.rounds,
            profile: profile.kind,
        }
    }
}

impl TrafficSettings {
    pub fn model(&self) -> Result<TrafficModel> {
        TrafficModel::new(self.mean_bytes, self.std_bytes)
    }

    pub fn load_profile(&self) -> Result<LoadProfile> {
        LoadProfile::new(self.profile, self.rounds)
    }
}

/// Full description of an experiment sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub traffic: TrafficSettings,
    pub embedding: EmbeddingKind,
    pub clustering: ClusterSettings,
    /// Device noise used for the minimal output entropy.
    pub device_lambda: f64,
    /// Link depolarizing probability.
    pub link_p: f64,
    pub purify_target: Option<f64>,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: vec![3, 10, 22],
            traffic: TrafficSettings::default(),
            embedding: EmbeddingKind::Amplitude,
            clustering: ClusterSettings::default(),
            device_lambda: 0.8,
            link_p: 0.2,
            purify_target: None,
            master_seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Checks every field; messages start with the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::InvalidConfig(format!("{key}: {msg}")));
        if self.dims.is_empty() {
            return bad("dims", "at least one dimension is required".into());
        }
        let probe = ClassicalSample::new(vec![1.0; PACKET_FEATURES], "probe")?;
        for &d in &self.dims {
            if d < 2 {
                return bad("dims", format!("d = {d} is below 2"));
            }
            let map = EmbeddingMap::new(self.embedding, d)?;
            if map.capacity() < PACKET_FEATURES {
                return bad(
                    "dims",
                    format!("d = {d} cannot hold {PACKET_FEATURES} packet features with the {:?} map", self.embedding),
                );
            }
            if !(self.device_lambda >= lambda_min(d) && self.device_lambda <= 1.0) {
                return bad(
                    "device_lambda",
                    format!("{} outside [{}, 1] for d = {d}", self.device_lambda, lambda_min(d)),
                );
            }
            map.embed(&probe)?;
        }
        if let Err(e) = self.traffic.model() {
            return bad("traffic", e.to_string());
        }
        if let Err(e) = self.traffic.load_profile() {
            return bad("traffic.profile", e.to_string());
        }
        if let Err(e) = self.clustering.with_seed(0).validate() {
            return bad("clustering", e.to_string());
        }
        if !(0.0..=1.0).contains(&self.link_p) {
            return bad("link_p", format!("{} outside [0, 1]", self.link_p));
        }
        if let Some(t) = self.purify_target {
            if !(t > 0.0 && t < 1.0) {
                return bad("purify_target", format!("{t} outside (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Metrics of one `(round, d)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub round_index: usize,
    pub d: usize,
    /// Samples in the round.
    pub x: usize,
    /// Semantic centroids found.
    pub k: usize,
    pub c_qsc: usize,
    pub c_baseline: usize,
    pub savings: f64,
    /// Set for rounds without traffic; their metrics are null.
    pub empty: bool,
    pub mean_intra_fidelity: Option<f64>,
    pub s_min: Option<f64>,
    pub link_fidelity: Option<f64>,
    pub pairs_consumed: usize,
    pub purification_rounds: usize,
    pub purification_model: Option<String>,
    pub lloyd_iterations: usize,
}

impl RoundReport {
    fn empty(round_index: usize, d: usize) -> Self {
        Self {
            round_index,
            d,
            x: 0,
            k: 0,
            c_qsc: 0,
            c_baseline: 0,
            savings: 0.0,
            empty: true,
            mean_intra_fidelity: None,
            s_min: None,
            link_fidelity: None,
            pairs_consumed: 0,
            purification_rounds: 0,
            purification_model: None,
            lloyd_iterations: 0,
        }
    }
}

/// Embeds a round's packets at dimension `d` and runs it.
pub fn run_round(load: &RoundLoad, d: usize, cfg: &ExperimentConfig) -> Result<RoundReport> {
    let samples = load
        .packet_sizes
        .iter()
        .map(|&s| packet_to_features(s, load.round_index))
        .collect::<Result<Vec<_>>>()?;
    let map = EmbeddingMap::new(cfg.embedding, d)?;
    let mem = embed_dataset(&samples, &map)?;
    run_memory_round(load.round_index, &mem, cfg)
}

/// Clusters already-embedded states and transmits the centroids.
pub fn run_memory_round(round_index: usize, mem: &QuantumMemory, cfg: &ExperimentConfig) -> Result<RoundReport> {
    let d = mem.dim();
    let x = mem.len();
    if x == 0 {
        return Ok(RoundReport::empty(round_index, d));
    }

    let seed = derive_seed(cfg.master_seed, Domain::Clustering, d as u64, round_index as u64);
    let mut cluster_cfg = cfg.clustering.with_seed(seed);
    if let KMode::Fixed { k } = cluster_cfg.k_mode {
        // a round smaller than the fixed K transmits every sample
        cluster_cfg.k_mode = KMode::Fixed { k: k.min(x) };
    }
    let clusters = select_k(mem, &cluster_cfg)?;
    let k = clusters.k_used;

    let (mut link, purification_pairs, purification_rounds_run) = match cfg.purify_target {
        Some(target) => {
            let f0 = avg_teleport_fidelity(cfg.link_p, d)?;
            let rounds = purification_rounds(f0, target, d)?;
            let budget = k << rounds;
            let raw = TeleportationLink::new(d, cfg.link_p, budget)?;
            let (purified, consumed) = raw.purify(target)?;
            (purified, consumed, rounds)
        }
        None => (TeleportationLink::new(d, cfg.link_p, k)?, 0, 0),
    };

    let mut fidelity_sum = 0.0;
    for c in &clusters.centroids {
        let received = link.teleport(c)?;
        fidelity_sum += fidelity_state_vs_density(c, &received)?;
    }

    Ok(RoundReport {
        round_index,
        d,
        x,
        k,
        c_qsc: k,
        c_baseline: x,
        savings: 1.0 - k as f64 / x as f64,
        empty: false,
        mean_intra_fidelity: Some(clusters.mean_intra_fidelity(mem)),
        s_min: Some(min_output_entropy(cfg.device_lambda, d)?),
        link_fidelity: Some(fidelity_sum / k as f64),
        pairs_consumed: k + purification_pairs,
        purification_rounds: purification_rounds_run,
        purification_model: cfg.purify_target.map(|_| PURIFICATION_MODEL.to_string()),
        lloyd_iterations: clusters.iterations_run,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundSummary {
    pub round_index: usize,
    pub x: usize,
    pub k: usize,
    pub savings: f64,
}

impl From<&RoundReport> for RoundSummary {
    fn from(r: &RoundReport) -> Self {
        Self {
            round_index: r.round_index,
            x: r.x,
            k: r.k,
            savings: r.savings,
        }
    }
}

/// Aggregates for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimSummary {
    pub d: usize,
    /// Mean over non-empty rounds.
    pub mean_savings: Option<f64>,
    pub total_c_qsc: usize,
    pub total_c_baseline: usize,
    /// Round with the most samples (earliest on ties).
    pub heavy_round: Option<RoundSummary>,
    /// Non-empty round with the fewest samples (earliest on ties).
    pub light_round: Option<RoundSummary>,
    pub s_min: f64,
    pub avg_link_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub generator: String,
    pub version: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub meta: ReportMeta,
    pub config: ExperimentConfig,
    /// Sorted by `(d, round)`.
    pub rounds: Vec<RoundReport>,
    pub summary: Vec<DimSummary>,
    pub mean_savings: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}

fn summarize(d: usize, rounds: &[&RoundReport], cfg: &ExperimentConfig) -> Result<DimSummary> {
    let filled: Vec<&&RoundReport> = rounds.iter().filter(|r| !r.empty).collect();
    let heavy = filled.iter().fold(None::<&RoundReport>, |best, r| match best {
        Some(b) if b.x >= r.x => Some(b),
        _ => Some(r),
    });
    let light = filled.iter().fold(None::<&RoundReport>, |best, r| match best {
        Some(b) if b.x <= r.x => Some(b),
        _ => Some(r),
    });
    Ok(DimSummary {
        d,
        mean_savings: mean(filled.iter().map(|r| r.savings)),
        total_c_qsc: rounds.iter().map(|r| r.c_qsc).sum(),
        total_c_baseline: rounds.iter().map(|r| r.c_baseline).sum(),
        heavy_round: heavy.map(RoundSummary::from),
        light_round: light.map(RoundSummary::from),
        s_min: min_output_entropy(cfg.device_lambda, d)?,
        avg_link_fidelity: avg_teleport_fidelity(cfg.link_p, d)?,
    })
}

/// Runs every `(d, round)` cell of the sweep.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let loads = generate_rounds(&cfg.traffic.model()?, &cfg.traffic.load_profile()?, cfg.master_seed)?;
    let cells: Vec<(usize, &RoundLoad)> = cfg
        .dims
        .iter()
        .flat_map(|&d| loads.iter().map(move |l| (d, l)))
        .collect();
    let mut rounds = cells
        .par_iter()
        .map(|&(d, load)| {
            run_round(load, d, cfg).map_err(|e| Error::Cell {
                dim: d,
                round: load.round_index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rounds.sort_by_key(|r| (r.d, r.round_index));

    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let summary = dims
        .iter()
        .map(|&d| {
            let of_d: Vec<&RoundReport> = rounds.iter().filter(|r| r.d == d).collect();
            summarize(d, &of_d, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        meta: ReportMeta {
            generator: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.master_seed,
        },
        config: cfg.clone(),
        mean_savings: mean(rounds.iter().filter(|r| !r.empty).map(|r| r.savings)),
        rounds,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyPoint {
    pub d: usize,
    pub lambda: f64,
    pub entropy_bits: f64,
}

/// `S_min(lambda, d)` over the grid, sorted by `(d, lambda)`.
pub fn entropy_curve(dims: &[usize], lambdas: &[f64]) -> Result<Vec<EntropyPoint>> {
    let mut out = Vec::with_capacity(dims.len() * lambdas.len());
    for &d in dims {
        for &lambda in lambdas {
            out.push(EntropyPoint {
                d,
                lambda,
                entropy_bits: min_output_entropy(lambda, d)?,
            });
        }
    }
    out.sort_by(|a, b| (a.d, a.lambda).partial_cmp(&(b.d, b.lambda)).expect("finite grid"));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityPoint {
    pub d: usize,
    pub p: f64,
    pub fidelity: f64,
}

/// Average teleportation fidelity over the grid, sorted by `(d, p)`.
pub fn fidelity_curve(dims: &[usize], ps: &[f64]) -> Result<Vec<FidelityPoint>> {
    let mut out = Vec::with_capacity(dims.len() * ps.len());
    for &d in dims {
        for &p in ps {
            out.push(FidelityPoint {
                d,
                p,
                fidelity: avg_teleport_fidelity(p, d)?,
            });
        }
    }
    out.sort_by(|a, b| (a.d, a.p).partial_cmp(&(b.d, b.p)).expect("finite grid"));
    Ok(out)
}

/// Synthetic clusterable data: tight groups around well-separated centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupScenario {
    pub dim: usize,
    pub groups: usize,
    pub samples: usize,
    /// Lower bound on each member's fidelity with its group center.
    pub min_fidelity: f64,
}

impl GroupScenario {
    /// The heavy round used to check resource savings: 65 samples in 9
    /// groups at `d = 10`.
    pub fn heavy_round() -> Self {
        Self {
            dim: 10,
            groups: 9,
            samples: 65,
            min_fidelity: 0.99,
        }
    }
}

/// Builds the states of a [`GroupScenario`] and their true group labels.
///
/// Centers are the first `groups` basis vectors when they fit, random states
/// otherwise. Member `i` belongs to group `i mod groups` and sits at angle
/// `theta <= acos(sqrt(min_fidelity))` from its center along a random
/// orthogonal direction.
pub fn synthetic_groups(scenario: &GroupScenario, seed: u64) -> Result<(QuantumMemory, Vec<usize>)> {
    let GroupScenario {
        dim,
        groups,
        samples,
        min_fidelity,
    } = *scenario;
    if groups < 1 || groups > samples.max(1) {
        return Err(Error::InvalidConfig(format!("groups: {groups} groups for {samples} samples")));
    }
    if !(min_fidelity > 0.0 && min_fidelity <= 1.0) {
        return Err(Error::InvalidConfig(format!("min_fidelity: {min_fidelity} outside (0, 1]")));
    }
    let mut r = rng::stream(derive_seed(seed, Domain::Scenario, dim as u64, groups as u64), 0);
    let centers: Vec<QuditState> = (0..groups)
        .map(|g| {
            if groups <= dim {
                QuditState::basis(dim, g)
            } else {
                random_state(dim, &mut r)
            }
        })
        .collect::<Result<_>>()?;
    let max_angle = min_fidelity.sqrt().acos();
    let mut states = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let g = i % groups;
        let c = centers[g].amplitudes();
        // random direction orthogonal to the center
        let w = random_state(dim, &mut r)?;
        let overlap: C64 = c.iter().zip(w.amplitudes()).map(|(a, b)| a.conj() * b).sum();
        let ortho: Vec<C64> = w.amplitudes().iter().zip(c).map(|(b, a)| b - a * overlap).collect();
        let norm = ortho.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        let theta = max_angle * r.random::<f64>();
        let amps: Vec<C64> = c
            .iter()
            .zip(&ortho)
            .map(|(a, o)| a * theta.cos() + o * (theta.sin() / norm))
            .collect();
        states.push(QuditState::normalized(amps)?);
        labels.push(g);
    }
    Ok((QuantumMemory::from_states(dim, states)?, labels))
}

fn random_state<R: Rng + ?Sized>(dim: usize, r: &mut R) -> Result<QuditState> {
    loop {
        let v: Vec<C64> = (0..dim)
            .map(|_| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
            .collect();
        if v.iter().map(C64::norm_sqr).sum::<f64>() > 1e-6 {
            return QuditState::normalized(v);
        }
    }
}
