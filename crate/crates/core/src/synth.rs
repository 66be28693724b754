//! Synthetic vector-autoregressive benchmarks with known ground truth.
//!
//! Networks are built from a small set of directed topologies, realized as
//! VAR(L) coefficient tensors, checked for stationarity via the companion
//! matrix, and simulated with Gaussian innovations after a burn-in. Because
//! the generating graph is known exactly, recovered connectivity can be
//! scored (ranking AUC, top-k precision), and two-class cohorts — identical
//! except for a handful of extra edges — give a controlled classification
//! problem.
//!
//! All randomness flows from explicit seeds through disjoint ChaCha streams
//! (see [`crate::seeding`]), so every artifact here is bit-reproducible.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ensemble::TimeSeriesEnsemble;
use crate::error::{Error, Result};
use crate::granger::ConnectivityMatrix;
use crate::par;
use crate::seeding::derive_tagged;

/// Directed wiring patterns for generated networks. All four are acyclic in
/// the node ordering, so the base dynamics are stationary by construction;
/// the stability check still runs because cohort deltas may close cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// `0 → 1 → 2 → …`
    Chain,
    /// Node 0 drives every other node.
    Hub,
    /// Each forward pair `(i, j)`, `i < j`, is an edge with probability
    /// `edge_density`.
    RandomDag,
    /// Two disjoint chains over the first and second half of the nodes.
    TwoCommunity,
}

/// Everything needed to realize one synthetic network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarNetworkSpec {
    pub n_nodes: usize,
    pub topology: Topology,
    /// Forward-pair edge probability; consulted only for
    /// [`Topology::RandomDag`].
    pub edge_density: f64,
    /// Magnitude of each coupling coefficient. Sign and lag placement are
    /// drawn per edge. Zero is allowed (a "null" network whose ground-truth
    /// edges carry no signal).
    pub coupling: f64,
    /// VAR order L ≥ 1.
    pub lag_order: usize,
    /// Innovation standard deviation, > 0.
    pub noise_sd: f64,
    /// Samples kept after burn-in.
    pub t_samples: usize,
    pub seed: u64,
}

/// The generating graph: `adjacency[(s, t)] = 1` iff the generator couples
/// series `s` into series `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub adjacency: Array2<u8>,
}

impl GroundTruth {
    /// Directed edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .indexed_iter()
            .filter(|(_, v)| **v != 0)
            .map(|((s, t), _)| (s, t))
            .collect()
    }
}

/// How well a connectivity estimate ranks true edges above non-edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryScore {
    /// Mann–Whitney AUC of edge vs non-edge scores (ties count ½).
    pub auc: f64,
    /// Fraction of the top `k` scored pairs that are true edges, with
    /// `k` = number of true edges.
    pub top_k_precision: f64,
    pub k: usize,
}

/// A generated two-class cohort plus the per-class generating graphs.
#[derive(Debug, Clone)]
pub struct CohortData {
    /// Labeled subjects: class 0 first, then class 1.
    pub subjects: Vec<(TimeSeriesEnsemble, u8)>,
    pub truth_class0: GroundTruth,
    pub truth_class1: GroundTruth,
}

/// Spec for a cohort whose two classes differ by a few extra edges.
#[derive(Debug, Clone)]
pub struct CohortSpec {
    pub base: VarNetworkSpec,
    /// Edges added for class 1; must not collide with base edges.
    pub delta_edges: Vec<(usize, usize)>,
    /// Magnitude of the added couplings.
    pub delta_coupling: f64,
    pub n_class0: usize,
    pub n_class1: usize,
    /// Std-dev of per-subject Gaussian jitter applied to every nonzero
    /// coefficient (0 disables jitter).
    pub subject_noise: f64,
    pub seed: u64,
}

impl VarNetworkSpec {
    fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidConfig { reason });
        if self.n_nodes < 2 {
            return fail(format!("n_nodes {} must be at least 2", self.n_nodes));
        }
        if self.lag_order == 0 {
            return fail("lag_order must be at least 1".into());
        }
        if self.t_samples < 2 {
            return fail(format!("t_samples {} must be at least 2", self.t_samples));
        }
        if !self.coupling.is_finite() {
            return fail(format!("coupling {} must be finite", self.coupling));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return fail(format!("noise_sd {} must be finite and > 0", self.noise_sd));
        }
        if matches!(self.topology, Topology::RandomDag)
            && !(self.edge_density.is_finite() && (0.0..=1.0).contains(&self.edge_density))
        {
            return fail(format!(
                "edge_density {} must lie in [0, 1]",
                self.edge_density
            ));
        }
        Ok(())
    }

    /// Directed edge list of the topology, in sorted (source, target) order.
    /// RandomDag consumes draws from `rng`; the other patterns are fixed.
    fn edges(&self, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
        let n = self.n_nodes;
        match self.topology {
            Topology::Chain => (0..n - 1).map(|i| (i, i + 1)).collect(),
            Topology::Hub => (1..n).map(|j| (0, j)).collect(),
            Topology::TwoCommunity => {
                let half = n / 2;
                let mut edges: Vec<(usize, usize)> =
                    (0..half.saturating_sub(1)).map(|i| (i, i + 1)).collect();
                edges.extend((half..n - 1).map(|i| (i, i + 1)));
                edges
            }
            Topology::RandomDag => {
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        if rng.random::<f64>() < self.edge_density {
                            edges.push((i, j));
                        }
                    }
                }
                edges
            }
        }
    }
}

/// Per-lag coefficient matrices; `coeffs[k][(t, s)]` multiplies series `s`
/// at lag `k+1` into series `t`.
type Coefficients = Vec<Array2<f64>>;

/// Build the coefficient tensor for a network: each edge gets magnitude
/// `coupling` at one uniformly drawn lag with a random sign.
///
/// Draw order (fixed for reproducibility): RandomDag pair decisions first,
/// then per edge — lag, then sign.
fn build_coefficients(spec: &VarNetworkSpec) -> Result<(Coefficients, GroundTruth)> {
    spec.validate()?;
    let n = spec.n_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = spec.edges(&mut rng);
    let mut coeffs: Coefficients = (0..spec.lag_order).map(|_| Array2::zeros((n, n))).collect();
    let mut adjacency = Array2::zeros((n, n));
    for (s, t) in &edges {
        let lag = rng.random_range(0..spec.lag_order);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        coeffs[lag][[*t, *s]] = sign * spec.coupling;
        adjacency[[*s, *t]] = 1;
    }
    Ok((coeffs, GroundTruth { adjacency }))
}

/// Spectral radius of the VAR companion matrix.
fn companion_radius(coeffs: &Coefficients) -> f64 {
    let n = coeffs[0].nrows();
    let l = coeffs.len();
    if l == 1 {
        return crate::linalg::spectral_radius(&coeffs[0]);
    }
    let dim = n * l;
    let mut companion = Array2::zeros((dim, dim));
    for (k, c) in coeffs.iter().enumerate() {
        companion
            .slice_mut(ndarray::s![..n, k * n..(k + 1) * n])
            .assign(c);
    }
    for i in n..dim {
        companion[[i, i - n]] = 1.0;
    }
    crate::linalg::spectral_radius(&companion)
}

/// Shrink all coefficients uniformly until the companion spectral radius is
/// below 0.95. Acyclic graphs have radius 0 and pass untouched.
fn stabilize(coeffs: &mut Coefficients) -> Result<f64> {
    const LIMIT: f64 = 0.95;
    for _ in 0..64 {
        let radius = companion_radius(coeffs);
        if radius < LIMIT {
            return Ok(radius);
        }
        let factor = 0.9 * LIMIT / radius;
        for c in coeffs.iter_mut() {
            c.mapv_inplace(|v| v * factor);
        }
    }
    Err(Error::InvalidConfig {
        reason: "coefficients could not be stabilized".into(),
    })
}

/// Simulate the VAR with zero prehistory, Gaussian innovations drawn from
/// `rng` (time-major, node-minor order), discarding a burn-in of
/// `10 · lag_order · n_nodes` steps.
fn simulate(
    coeffs: &Coefficients,
    noise_sd: f64,
    t_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<f64>> {
    let n = coeffs[0].nrows();
    let l = coeffs.len();
    let burn = 10 * l * n;
    let total = burn + t_samples;
    let mut x = Array2::zeros((n, total));
    let mut current = Array1::zeros(n);
    for t in 0..total {
        current.fill(0.0);
        for (k, c) in coeffs.iter().enumerate() {
            if t > k {
                let past = x.column(t - 1 - k);
                current += &c.dot(&past);
            }
        }
        for i in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            current[i] += noise_sd * z;
            if !current[i].is_finite() {
                return Err(Error::SimulationDiverged { step: t });
            }
        }
        x.column_mut(t).assign(&current);
    }
    Ok(x.slice(ndarray::s![.., burn..]).to_owned())
}

/// Generate several independent realizations of one network.
///
/// The coefficient template comes from `spec.seed`; realization `i` draws
/// its innovations from the derived stream `("subject", i)`, so adding more
/// subjects never perturbs earlier ones.
pub fn generate_var_subjects(
    spec: &VarNetworkSpec,
    count: usize,
) -> Result<(Vec<TimeSeriesEnsemble>, GroundTruth)> {
    if count == 0 {
        return Err(Error::InvalidConfig {
            reason: "subject count must be at least 1".into(),
        });
    }
    let (mut coeffs, truth) = build_coefficients(spec)?;
    stabilize(&mut coeffs)?;
    let results: Vec<Result<TimeSeriesEnsemble>> = par::map_indices(count, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_tagged(spec.seed, "subject", i as u64));
        let data = simulate(&coeffs, spec.noise_sd, spec.t_samples, &mut rng)?;
        TimeSeriesEnsemble::with_default_names(data, None)
    });
    let mut subjects = Vec::with_capacity(count);
    for r in results {
        subjects.push(r?);
    }
    Ok((subjects, truth))
}

/// Generate one realization of a network (the `count = 1` case of
/// [`generate_var_subjects`]).
pub fn generate_var(spec: &VarNetworkSpec) -> Result<(TimeSeriesEnsemble, GroundTruth)> {
    let (mut subjects, truth) = generate_var_subjects(spec, 1)?;
    Ok((subjects.pop().expect("one subject"), truth))
}

/// Score how well a connectivity estimate recovers the generating graph.
///
/// Off-diagonal entries are ranked; the AUC is the Mann–Whitney statistic
/// of edge scores vs non-edge scores with ties counting one half, and
/// top-k precision takes `k` = number of true edges (ranking ties broken by
/// ascending (row, col) so the result is deterministic).
pub fn score_recovery(conn: &ConnectivityMatrix, truth: &GroundTruth) -> Result<RecoveryScore> {
    let n = conn.n_series();
    if truth.adjacency.nrows() != n || truth.adjacency.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "ground truth size",
            expected: n,
            actual: truth.adjacency.nrows(),
        });
    }
    let mut edge_scores = Vec::new();
    let mut non_edge_scores = Vec::new();
    let mut ranked: Vec<(f64, usize, usize)> = Vec::new();
    for ((i, j), v) in conn.values().indexed_iter() {
        if i == j {
            continue;
        }
        ranked.push((*v, i, j));
        if truth.adjacency[[i, j]] != 0 {
            edge_scores.push(*v);
        } else {
            non_edge_scores.push(*v);
        }
    }
    let pairs = ranked.len();
    let k = edge_scores.len();
    if k == 0 || non_edge_scores.is_empty() {
        return Err(Error::DegenerateTruth { edges: k, pairs });
    }

    let mut wins = 0.0;
    for e in &edge_scores {
        for ne in &non_edge_scores {
            if e > ne {
                wins += 1.0;
            } else if e == ne {
                wins += 0.5;
            }
        }
    }
    let auc = wins / (k as f64 * non_edge_scores.len() as f64);

    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let hits = ranked
        .iter()
        .take(k)
        .filter(|(_, i, j)| truth.adjacency[[*i, *j]] != 0)
        .count();
    Ok(RecoveryScore {
        auc,
        top_k_precision: hits as f64 / k as f64,
        k,
    })
}

/// Generate a labeled two-class cohort.
///
/// Class 0 subjects realize the base network; class 1 subjects realize the
/// base network plus `delta_edges` at magnitude `delta_coupling` (lag and
/// sign drawn once per delta edge from the `("delta", ·)` stream). Each
/// subject's coefficients are then jittered (`subject_noise`), re-checked
/// for stability, and simulated with innovations from that subject's own
/// `("cohort-subject", i)` stream.
pub fn generate_two_class_cohort(spec: &CohortSpec) -> Result<CohortData> {
    if spec.n_class0 == 0 || spec.n_class1 == 0 {
        return Err(Error::InvalidConfig {
            reason: "both classes need at least one subject".into(),
        });
    }
    if !(spec.subject_noise.is_finite() && spec.subject_noise >= 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!("subject_noise {} must be finite and >= 0", spec.subject_noise),
        });
    }
    if !spec.delta_coupling.is_finite() {
        return Err(Error::InvalidConfig {
            reason: format!("delta_coupling {} must be finite", spec.delta_coupling),
        });
    }
    let (base_coeffs, truth0) = build_coefficients(&spec.base)?;
    let n = spec.base.n_nodes;
    let mut seen = std::collections::BTreeSet::new();
    for (s, t) in &spec.delta_edges {
        if *s >= n || *t >= n {
            return Err(Error::InvalidConfig {
                reason: format!("delta edge ({s}, {t}) out of range for {n} nodes"),
            });
        }
        if s == t {
            return Err(Error::InvalidConfig {
                reason: format!("delta edge ({s}, {t}) is a self-loop"),
            });
        }
        if truth0.adjacency[[*s, *t]] != 0 {
            return Err(Error::InvalidConfig {
                reason: format!("delta edge ({s}, {t}) already exists in the base network"),
            });
        }
        if !seen.insert((*s, *t)) {
            return Err(Error::InvalidConfig {
                reason: format!("delta edge ({s}, {t}) listed twice"),
            });
        }
    }

    let mut class1_coeffs = base_coeffs.clone();
    let mut truth1 = truth0.clone();
    let mut delta_rng = ChaCha8Rng::seed_from_u64(derive_tagged(spec.seed, "delta", 0));
    for (s, t) in &spec.delta_edges {
        let lag = delta_rng.random_range(0..spec.base.lag_order);
        let sign = if delta_rng.random::<bool>() { 1.0 } else { -1.0 };
        class1_coeffs[lag][[*t, *s]] = sign * spec.delta_coupling;
        truth1.adjacency[[*s, *t]] = 1;
    }

    let total = spec.n_class0 + spec.n_class1;
    let results: Vec<Result<(TimeSeriesEnsemble, u8)>> = par::map_indices(total, |i| {
        let label = u8::from(i >= spec.n_class0);
        let template = if label == 0 { &base_coeffs } else { &class1_coeffs };
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_tagged(spec.seed, "cohort-subject", i as u64));
        let mut coeffs = template.clone();
        if spec.subject_noise > 0.0 {
            for c in coeffs.iter_mut() {
                for v in c.iter_mut() {
                    if *v != 0.0 {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *v += spec.subject_noise * z;
                    }
                }
            }
        }
        stabilize(&mut coeffs)?;
        let data = simulate(&coeffs, spec.base.noise_sd, spec.base.t_samples, &mut rng)?;
        let ensemble = TimeSeriesEnsemble::with_default_names(data, None)?;
        Ok((ensemble, label))
    });

    let mut subjects = Vec::with_capacity(total);
    for r in results {
        subjects.push(r?);
    }
    Ok(CohortData {
        subjects,
        truth_class0: truth0,
        truth_class1: truth1,
    })
}
