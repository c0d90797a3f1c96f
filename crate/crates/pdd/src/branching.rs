//! Branching-diffusion estimators for semilinear initial-value problems.
//!
//! Problems of the form
//!
//! ```text
//! u_t = L u + c ( F(u) - u ),      F(v) = sum_k a_k v^k,
//! u(., 0) = psi,
//! ```
//!
//! with `L` the generator of the driving diffusion, admit a representation
//! by branching particle systems: a particle started at `x0` diffuses under
//! `L`, and the whole population branches at rate `c` times its size. At a
//! branching event one particle, chosen uniformly, is replaced by `k`
//! offspring at its position, with `k` drawn from the offspring law `q`.
//! Then
//!
//! ```text
//! u(x0, theta) = E[ prod_events (a_k / q_k)(X_event, theta - T_event)
//!                 * prod_alive  psi(X_i(theta)) ],
//! ```
//!
//! where the products run over events before `theta` and particles alive at
//! `theta`. When `a_k = q_k` (so `F` is the generating function of `q`)
//! every weight is one and the tree is *classical*; otherwise the tree is
//! *marked* and the weights can be negative or larger than one, in which
//! case the representation only stays square-integrable up to a horizon
//! bound. [`check_marked_assumptions`] computes that bound from the
//! majorizing growth function
//!
//! ```text
//! l0(s) = sum_k ||a_k||_inf s^k,
//! l(s)  = c ( l0(s ||psi||) / ||psi|| - s ):
//! ```
//!
//! if `l(1) <= 0` the expectation contracts for any horizon; if `l` has a
//! root beyond 1 the majorant stays bounded for any horizon; otherwise the
//! majorant blows up at `T* = integral from 1 to infinity of ds / l(s)` and
//! horizons beyond `T*` are refused by the estimators.
//!
//! One simulated tree serves every requested checkpoint: the population is
//! snapshotted whenever the clock crosses a checkpoint, so a single run
//! scores `u(x0, theta_i)` for all `theta_i` simultaneously. An optional
//! absorbing box freezes particles on contact; a frozen particle
//! contributes the Dirichlet datum `g(X_hit, theta - tau_hit)` to every
//! later checkpoint. The branching clock treats the population as constant
//! between events; absorptions inside an inter-event interval are resolved
//! at the interval's end, consistent with the discrete boundary test of the
//! path engine.
//!
//! If the population ever exceeds `prune_limit` the replicate is discarded
//! and rerun with a fresh random-stream epoch, keeping the estimate a pure
//! function of the stream key.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{PddError, Result};
use crate::feynman_kac::{SpaceTimeField, SpatialField};
use crate::geometry::{classify_point, BoundaryEvent, BoxDomain, FaceKind};
use crate::numerics::{adaptive_simpson, polyval, solve_dense, Welford};
use crate::rng::{RngStream, StreamSampler};
use crate::sde::DiffusionCoefficients;

/// One coefficient `a_k` of the nonlinearity, with its sup norm over the
/// domain and horizon (used by the well-posedness check).
#[derive(Clone)]
pub struct AlphaCoefficient {
    pub eval: SpaceTimeField,
    pub sup_norm: f64,
}

impl AlphaCoefficient {
    pub fn constant(v: f64) -> Self {
        Self {
            eval: Arc::new(move |_, _| v),
            sup_norm: v.abs(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }
}

/// A semilinear problem in branching-representation form.
///
/// `offspring[k]` is the probability of `k` offspring and `alphas[k]` the
/// matching coefficient of `F`; the two vectors share their indexing.
#[derive(Clone)]
pub struct BranchingSpec {
    pub coefficients: DiffusionCoefficients,
    pub intensity: f64,
    pub offspring: Vec<f64>,
    pub alphas: Vec<AlphaCoefficient>,
    pub terminal: SpatialField,
    pub terminal_sup: f64,
    pub dirichlet: Option<SpaceTimeField>,
    pub domain: Option<BoxDomain>,
    pub prune_limit: usize,
    pub driver_dt: Option<f64>,
    pub classical: bool,
    growth_cache: OnceLock<std::result::Result<GrowthClass, String>>,
}

const DEFAULT_PRUNE_LIMIT: usize = 100_000;

impl BranchingSpec {
    /// Classical tree: `F` is the generating function of the offspring law,
    /// so every branching weight is exactly one.
    pub fn classical(
        coefficients: DiffusionCoefficients,
        intensity: f64,
        offspring: Vec<f64>,
        terminal: SpatialField,
        terminal_sup: f64,
    ) -> Result<Self> {
        validate_law(&offspring)?;
        let alphas = offspring.iter().map(|&q| AlphaCoefficient::constant(q)).collect();
        Self::build(
            coefficients,
            intensity,
            offspring,
            alphas,
            terminal,
            terminal_sup,
            true,
        )
    }

    /// Marked tree: `F(v) = sum_k a_k v^k` with arbitrary real coefficients
    /// carried as weights `a_k / q_k` at the branching events.
    pub fn marked(
        coefficients: DiffusionCoefficients,
        intensity: f64,
        offspring: Vec<f64>,
        alphas: Vec<AlphaCoefficient>,
        terminal: SpatialField,
        terminal_sup: f64,
    ) -> Result<Self> {
        validate_law(&offspring)?;
        if alphas.len() != offspring.len() {
            return Err(PddError::InvalidArgument(
                "branching: alphas and offspring law must share their length".into(),
            ));
        }
        for (k, (a, &q)) in alphas.iter().zip(&offspring).enumerate() {
            if a.sup_norm > 0.0 && q == 0.0 {
                return Err(PddError::InvalidArgument(format!(
                    "branching: coefficient a_{k} is nonzero but {k} offspring \
                     have probability zero"
                )));
            }
            if !a.sup_norm.is_finite() || a.sup_norm < 0.0 {
                return Err(PddError::InvalidArgument(format!(
                    "branching: sup norm of a_{k} must be finite and nonnegative"
                )));
            }
        }
        Self::build(
            coefficients,
            intensity,
            offspring,
            alphas,
            terminal,
            terminal_sup,
            false,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        coefficients: DiffusionCoefficients,
        intensity: f64,
        offspring: Vec<f64>,
        alphas: Vec<AlphaCoefficient>,
        terminal: SpatialField,
        terminal_sup: f64,
        classical: bool,
    ) -> Result<Self> {
        if !(intensity > 0.0) || !intensity.is_finite() {
            return Err(PddError::InvalidArgument(
                "branching: intensity must be positive and finite".into(),
            ));
        }
        if !(terminal_sup > 0.0) || !terminal_sup.is_finite() {
            return Err(PddError::InvalidArgument(
                "branching: terminal sup norm must be positive and finite".into(),
            ));
        }
        Ok(Self {
            coefficients,
            intensity,
            offspring,
            alphas,
            terminal,
            terminal_sup,
            dirichlet: None,
            domain: None,
            prune_limit: DEFAULT_PRUNE_LIMIT,
            driver_dt: None,
            classical,
            growth_cache: OnceLock::new(),
        })
    }

    /// Truncate to an absorbing box with Dirichlet datum `g(x, t)` for the
    /// remaining time `t` at scoring.
    pub fn with_domain(mut self, domain: BoxDomain, dirichlet: SpaceTimeField) -> Result<Self> {
        if domain.dim() != self.coefficients.dim() {
            return Err(PddError::InvalidArgument(
                "branching: domain dimension does not match the driving diffusion".into(),
            ));
        }
        if domain.face_kinds().iter().any(|k| *k != FaceKind::Absorbing) {
            return Err(PddError::Unsupported(
                "branching trees support absorbing truncation only".into(),
            ));
        }
        self.domain = Some(domain);
        self.dirichlet = Some(dirichlet);
        Ok(self)
    }

    pub fn with_prune_limit(mut self, limit: usize) -> Result<Self> {
        if limit == 0 {
            return Err(PddError::InvalidArgument(
                "branching: prune limit must be at least 1".into(),
            ));
        }
        self.prune_limit = limit;
        Ok(self)
    }

    /// Substep length for the particle motion. Required when the driving
    /// coefficients depend on state or time; constant coefficients default
    /// to one exact Gaussian step per inter-event segment.
    pub fn with_driver_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(PddError::InvalidArgument(
                "branching: driver step must be positive".into(),
            ));
        }
        self.driver_dt = Some(dt);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coefficients.dim()
    }

    fn growth_class(&self) -> Result<GrowthClass> {
        self.growth_cache
            .get_or_init(|| compute_growth_class(self).map_err(|e| e.to_string()))
            .clone()
            .map_err(PddError::Divergence)
    }

    /// `l(s) = c (l0(s ||psi||)/||psi|| - s)` with `l0` built from the
    /// coefficient sup norms.
    fn majorant_rate(&self, s: f64) -> f64 {
        let psi = self.terminal_sup;
        let mut l0 = 0.0;
        let mut pow = 1.0;
        for a in &self.alphas {
            l0 += a.sup_norm * pow;
            pow *= s * psi;
        }
        self.intensity * (l0 / psi - s)
    }

    /// Degree of the sup-norm polynomial `l0`.
    fn majorant_degree(&self) -> usize {
        self.alphas
            .iter()
            .rposition(|a| a.sup_norm > 0.0)
            .unwrap_or(0)
    }
}

fn validate_law(offspring: &[f64]) -> Result<()> {
    if offspring.is_empty() {
        return Err(PddError::InvalidArgument(
            "branching: offspring law is empty".into(),
        ));
    }
    if offspring.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(PddError::InvalidArgument(
            "branching: offspring probabilities must lie in [0, 1]".into(),
        ));
    }
    let total: f64 = offspring.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(PddError::InvalidArgument(format!(
            "branching: offspring probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Lifetime of one particle in a finished tree.
#[derive(Debug, Clone, PartialEq)]
pub enum ParticleStatus {
    /// Still diffusing when the last checkpoint was taken.
    Alive,
    /// Frozen on the truncation boundary.
    Absorbed { time: f64, face: usize },
    /// Branched with zero offspring.
    Removed { time: f64 },
    /// Replaced by its offspring.
    Branched { time: f64 },
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub parent: Option<usize>,
    pub born: f64,
    /// Final recorded position: current position for live particles, the
    /// boundary hit point for absorbed ones, the event position otherwise.
    pub position: Vec<f64>,
    pub last_update: f64,
    pub status: ParticleStatus,
}

#[derive(Debug, Clone)]
pub struct BranchEvent {
    pub time: f64,
    pub particle: usize,
    pub offspring: usize,
    pub position: Vec<f64>,
}

/// Population state at one checkpoint: indices of live particles and their
/// positions at that instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub alive: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
}

/// A completed tree simulation over a set of checkpoints.
#[derive(Debug, Clone)]
pub struct ParticleTree {
    pub particles: Vec<Particle>,
    pub branch_events: Vec<BranchEvent>,
    pub checkpoints: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Number of pruned attempts discarded before this tree completed.
    pub restarts: u64,
}

impl ParticleTree {
    pub fn population_at(&self, checkpoint: usize) -> usize {
        self.snapshots[checkpoint].alive.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branch_events.len()
    }

    /// Particles never consumed by a branching event (alive or absorbed).
    pub fn final_population(&self) -> usize {
        self.particles
            .iter()
            .filter(|p| {
                matches!(
                    p.status,
                    ParticleStatus::Alive | ParticleStatus::Absorbed { .. }
                )
            })
            .count()
    }
}

const MAX_RESTART_EPOCHS: u64 = 1_000;

/// Replicate epochs fold into the high bits of the replicate key so a
/// restarted attempt draws a completely fresh stream.
const RESTART_EPOCH_SHIFT: u32 = 48;

/// Simulate one tree from `x0`, snapshotting the population at every
/// checkpoint. Checkpoints must be strictly increasing and nonnegative.
pub fn simulate_tree(
    spec: &BranchingSpec,
    x0: &[f64],
    checkpoints: &[f64],
    stream: RngStream,
) -> Result<ParticleTree> {
    if x0.len() != spec.dim() {
        return Err(PddError::InvalidArgument(
            "simulate_tree: start point dimension does not match the diffusion".into(),
        ));
    }
    if checkpoints.is_empty() {
        return Err(PddError::InvalidArgument(
            "simulate_tree: at least one checkpoint is required".into(),
        ));
    }
    if checkpoints[0] < 0.0 || !checkpoints.iter().all(|t| t.is_finite()) {
        return Err(PddError::InvalidArgument(
            "simulate_tree: checkpoints must be finite and nonnegative".into(),
        ));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PddError::InvalidArgument(
            "simulate_tree: checkpoints must be strictly increasing".into(),
        ));
    }
    if let Some(domain) = &spec.domain {
        if !domain.contains_strictly(x0) {
            return Err(PddError::InvalidArgument(
                "simulate_tree: start point must lie strictly inside the truncation box".into(),
            ));
        }
    }
    if !spec.coefficients.is_constant() && spec.driver_dt.is_none() {
        return Err(PddError::Config(
            "simulate_tree: state-dependent driving coefficients need a driver step".into(),
        ));
    }

    let base_replicate = stream.key().replicate;
    for epoch in 0..MAX_RESTART_EPOCHS {
        let epoch_stream = stream.with_replicate(base_replicate + (epoch << RESTART_EPOCH_SHIFT));
        if let Some(mut tree) = run_tree_once(spec, x0, checkpoints, epoch_stream)? {
            tree.restarts = epoch;
            return Ok(tree);
        }
    }
    Err(PddError::Divergence(format!(
        "simulate_tree: population exceeded the prune limit {} in {MAX_RESTART_EPOCHS} \
         consecutive attempts; the branching configuration explodes",
        spec.prune_limit
    )))
}

struct AdvanceWs {
    dw: Vec<f64>,
    drift: Vec<f64>,
    sigma: Vec<f64>,
}

impl AdvanceWs {
    fn new(dim: usize) -> Self {
        Self {
            dw: vec![0.0; dim],
            drift: vec![0.0; dim],
            sigma: vec![0.0; dim * dim],
        }
    }
}

/// One attempt; `None` means the population exceeded the prune limit.
fn run_tree_once(
    spec: &BranchingSpec,
    x0: &[f64],
    checkpoints: &[f64],
    stream: RngStream,
) -> Result<Option<ParticleTree>> {
    let mut particles = vec![Particle {
        parent: None,
        born: 0.0,
        position: x0.to_vec(),
        last_update: 0.0,
        status: ParticleStatus::Alive,
    }];
    // Lane 0 drives the population-level clock and event choices; particle
    // `i` diffuses on lane `i + 1`.
    let mut system = stream.with_particle(0).sampler();
    let mut samplers = vec![stream.with_particle(1).sampler()];
    let mut alive: Vec<usize> = vec![0];
    let mut branch_events = Vec::new();
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut ws = AdvanceWs::new(spec.dim());
    let mut t = 0.0;
    let mut chk = 0usize;

    while chk < checkpoints.len() {
        let next_event = if alive.is_empty() {
            f64::INFINITY
        } else {
            t + system.exponential(spec.intensity * alive.len() as f64)
        };
        while chk < checkpoints.len() && checkpoints[chk] <= next_event {
            let theta = checkpoints[chk];
            advance_alive(spec, &mut particles, &mut samplers, &mut alive, theta, &mut ws)?;
            snapshots.push(Snapshot {
                time: theta,
                alive: alive.clone(),
                coords: alive.iter().map(|&i| particles[i].position.clone()).collect(),
            });
            chk += 1;
        }
        if chk == checkpoints.len() {
            break;
        }
        advance_alive(spec, &mut particles, &mut samplers, &mut alive, next_event, &mut ws)?;
        t = next_event;
        if alive.is_empty() {
            continue;
        }
        let pick = system.uniform_index(alive.len());
        let parent = alive.swap_remove(pick);
        let count = system.discrete(&spec.offspring);
        let position = particles[parent].position.clone();
        particles[parent].status = if count == 0 {
            ParticleStatus::Removed { time: t }
        } else {
            ParticleStatus::Branched { time: t }
        };
        branch_events.push(BranchEvent {
            time: t,
            particle: parent,
            offspring: count,
            position: position.clone(),
        });
        for _ in 0..count {
            let id = particles.len();
            particles.push(Particle {
                parent: Some(parent),
                born: t,
                position: position.clone(),
                last_update: t,
                status: ParticleStatus::Alive,
            });
            samplers.push(stream.with_particle(id as u64 + 1).sampler());
            alive.push(id);
        }
        if alive.len() > spec.prune_limit {
            return Ok(None);
        }
    }

    Ok(Some(ParticleTree {
        particles,
        branch_events,
        checkpoints: checkpoints.to_vec(),
        snapshots,
        restarts: 0,
    }))
}

/// Move every live particle to path time `to`, freezing the ones that leave
/// the truncation box.
fn advance_alive(
    spec: &BranchingSpec,
    particles: &mut [Particle],
    samplers: &mut [StreamSampler],
    alive: &mut Vec<usize>,
    to: f64,
    ws: &mut AdvanceWs,
) -> Result<()> {
    let mut absorbed_any = false;
    for &idx in alive.iter() {
        let particle = &mut particles[idx];
        let sampler = &mut samplers[idx];
        advance_one(spec, particle, sampler, to, ws)?;
        if matches!(particle.status, ParticleStatus::Absorbed { .. }) {
            absorbed_any = true;
        }
    }
    if absorbed_any {
        alive.retain(|&i| particles[i].status == ParticleStatus::Alive);
    }
    Ok(())
}

fn advance_one(
    spec: &BranchingSpec,
    particle: &mut Particle,
    sampler: &mut StreamSampler,
    to: f64,
    ws: &mut AdvanceWs,
) -> Result<()> {
    let dim = spec.dim();
    while particle.last_update < to {
        let seg = match spec.driver_dt {
            Some(h) => h.min(to - particle.last_update),
            None => to - particle.last_update,
        };
        sampler.fill_gaussian_increment(seg, &mut ws.dw);
        spec.coefficients
            .drift_into(&particle.position, particle.last_update, &mut ws.drift);
        spec.coefficients
            .sigma_into(&particle.position, particle.last_update, &mut ws.sigma);
        for i in 0..dim {
            let mut dx = ws.drift[i] * seg;
            for j in 0..dim {
                dx += ws.sigma[i * dim + j] * ws.dw[j];
            }
            particle.position[i] += dx;
        }
        particle.last_update += seg;
        if let Some(domain) = &spec.domain {
            if let BoundaryEvent::Absorbing { face, hit_point } =
                classify_point(domain, &particle.position)
            {
                particle.position.copy_from_slice(&hit_point);
                particle.status = ParticleStatus::Absorbed {
                    time: particle.last_update,
                    face,
                };
                return Ok(());
            }
        }
    }
    Ok(())
}

/// Score a finished tree at each of its checkpoints.
///
/// The score at checkpoint `theta` multiplies the terminal datum over the
/// particles alive at `theta`, the Dirichlet datum `g(X_hit, theta - tau)`
/// over particles absorbed at `tau <= theta`, and the branching weight
/// `a_k / q_k` (evaluated at the event position and remaining time) over
/// events strictly before `theta`. Empty products are one.
pub fn score_tree(spec: &BranchingSpec, tree: &ParticleTree) -> Result<Vec<f64>> {
    if !spec.classical {
        if let Some(&last) = tree.checkpoints.last() {
            refuse_if_violated(spec, last)?;
        }
    }
    let mut scores = Vec::with_capacity(tree.snapshots.len());
    for snap in &tree.snapshots {
        let theta = snap.time;
        let mut score = 1.0;
        for coords in &snap.coords {
            score *= (spec.terminal)(coords);
        }
        for particle in &tree.particles {
            if let ParticleStatus::Absorbed { time, .. } = particle.status {
                if time <= theta {
                    let g = spec.dirichlet.as_ref().ok_or_else(|| {
                        PddError::MissingDatum(
                            "a particle was absorbed but the spec has no Dirichlet datum".into(),
                        )
                    })?;
                    score *= g(&particle.position, theta - time);
                }
            }
        }
        for event in &tree.branch_events {
            if event.time < theta {
                let q = spec.offspring[event.offspring];
                let a = (spec.alphas[event.offspring].eval)(&event.position, theta - event.time);
                score *= a / q;
            }
        }
        scores.push(score);
    }
    Ok(scores)
}

/// Pointwise estimates of `u(x0, theta_i)` for every checkpoint, from `n`
/// independent trees.
#[derive(Debug, Clone)]
pub struct BranchingEstimate {
    pub checkpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_samples: u64,
    /// Total pruned attempts across all replicates.
    pub restarts: u64,
    pub elapsed_seconds: f64,
}

/// Average `n` independent tree scores per checkpoint.
///
/// Replicate `r` draws from `stream.with_replicate(r)` and the reduction
/// runs in replicate order, so the result does not depend on the number of
/// worker threads.
pub fn estimate_branching(
    spec: &BranchingSpec,
    x0: &[f64],
    checkpoints: &[f64],
    n: u64,
    stream: RngStream,
) -> Result<BranchingEstimate> {
    if n < 2 {
        return Err(PddError::InvalidArgument(
            "estimate_branching needs at least 2 samples for a standard error".into(),
        ));
    }
    if !spec.classical {
        if let Some(&last) = checkpoints.last() {
            refuse_if_violated(spec, last)?;
        }
    }
    let started = Instant::now();
    let per_replicate: Vec<(Vec<f64>, u64)> = (0..n)
        .into_par_iter()
        .map(|r| {
            let tree = simulate_tree(spec, x0, checkpoints, stream.with_replicate(r))?;
            let scores = score_tree(spec, &tree)?;
            Ok((scores, tree.restarts))
        })
        .collect::<Result<_>>()?;
    let mut accs = vec![Welford::new(); checkpoints.len()];
    let mut restarts = 0u64;
    for (scores, r) in &per_replicate {
        for (acc, &s) in accs.iter_mut().zip(scores) {
            acc.push(s);
        }
        restarts += r;
    }
    Ok(BranchingEstimate {
        checkpoints: checkpoints.to_vec(),
        values: accs.iter().map(|a| a.mean()).collect(),
        std_errors: accs.iter().map(|a| a.std_error()).collect(),
        n_samples: n,
        restarts,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

fn refuse_if_violated(spec: &BranchingSpec, horizon: f64) -> Result<()> {
    if let GrowthClass::Explosive { t_star } = spec.growth_class()? {
        if horizon > t_star {
            return Err(PddError::AssumptionViolated(format!(
                "marked-tree horizon {horizon} exceeds the square-integrability bound \
                 T* = {t_star:.10}; the estimator variance is unbounded there"
            )));
        }
    }
    Ok(())
}

/// Qualitative behaviour of the majorant ODE `ds/dt = l(s)`, `s(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum GrowthClass {
    /// `l(1) <= 0`: the majorant never grows.
    ContractiveAtOne,
    /// `l` has a root beyond 1: the majorant saturates below it.
    RootBound { root: f64 },
    /// `l` is affine and positive: at most exponential growth.
    ExponentialOnly,
    /// `l > 0` with superlinear growth: blow-up at `t_star`.
    Explosive { t_star: f64 },
}

const ROOT_SCAN_FACTOR: f64 = 1.02;
const ROOT_SCAN_STEPS: usize = 2_400; // reaches ~4e20

fn compute_growth_class(spec: &BranchingSpec) -> Result<GrowthClass> {
    let l1 = spec.majorant_rate(1.0);
    if l1 <= 0.0 {
        return Ok(GrowthClass::ContractiveAtOne);
    }
    // Scan a multiplicative grid for a sign change of l.
    let mut lo = 1.0;
    let mut lo_val = l1;
    for _ in 0..ROOT_SCAN_STEPS {
        let hi = lo * ROOT_SCAN_FACTOR;
        let hi_val = spec.majorant_rate(hi);
        if hi_val <= 0.0 {
            let root = bisect_root(|s| spec.majorant_rate(s), lo, hi, lo_val);
            return Ok(GrowthClass::RootBound { root });
        }
        lo = hi;
        lo_val = hi_val;
        if !lo_val.is_finite() {
            break;
        }
    }
    if spec.majorant_degree() <= 1 {
        return Ok(GrowthClass::ExponentialOnly);
    }
    // l > 0 and superlinear: the blow-up time is
    //   T* = int_1^inf ds / l(s) = int_0^1 dt / (t^2 l(1/t)),
    // with the denominator expanded in powers of t so the t -> 0 end stays
    // finite in floating point.
    let c = spec.intensity;
    let psi = spec.terminal_sup;
    let sup_norms: Vec<f64> = spec.alphas.iter().map(|a| a.sup_norm).collect();
    let den = move |t: f64| {
        let mut acc = -t;
        for (k, &a) in sup_norms.iter().enumerate() {
            if a > 0.0 {
                acc += a * psi.powi(k as i32 - 1) * t.powi(2 - k as i32);
            }
        }
        c * acc
    };
    let t_star = adaptive_simpson(&move |t: f64| 1.0 / den(t), 0.0, 1.0, 1e-10)?;
    Ok(GrowthClass::Explosive { t_star })
}

fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, lo_val: f64) -> f64 {
    debug_assert!(lo_val > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Verdict of [`check_marked_assumptions`] for a specific horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionCase {
    /// `l(1) <= 0`: any horizon is admissible.
    Contraction,
    /// The majorant stays bounded (root beyond 1, or merely exponential
    /// growth): any horizon is admissible.
    BoundedGrowth,
    /// Blow-up exists but the horizon stays within the bound.
    WithinHorizonBound,
    /// The horizon exceeds the square-integrability bound.
    Violated,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionReport {
    pub case: AssumptionCase,
    pub l_at_one: f64,
    pub t_star: Option<f64>,
    pub horizon: f64,
    pub note: Option<String>,
}

impl AssumptionReport {
    pub fn admissible(&self) -> bool {
        self.case != AssumptionCase::Violated
    }
}

/// Classify the square-integrability of a marked-tree estimator at the
/// given horizon.
///
/// The verdict is advisory for classical specs (their weights are one, so
/// the score is bounded by data bounds); [`estimate_branching`] enforces it
/// for marked specs.
pub fn check_marked_assumptions(spec: &BranchingSpec, horizon: f64) -> Result<AssumptionReport> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(PddError::InvalidArgument(
            "check_marked_assumptions: horizon must be positive and finite".into(),
        ));
    }
    let l_at_one = spec.majorant_rate(1.0);
    let report = match spec.growth_class()? {
        GrowthClass::ContractiveAtOne => AssumptionReport {
            case: AssumptionCase::Contraction,
            l_at_one,
            t_star: None,
            horizon,
            note: (l_at_one == 0.0)
                .then(|| "the majorant rate vanishes exactly at 1: marginal contraction".into()),
        },
        GrowthClass::RootBound { root } => AssumptionReport {
            case: AssumptionCase::BoundedGrowth,
            l_at_one,
            t_star: None,
            horizon,
            note: Some(format!("the majorant saturates at {root:.6}")),
        },
        GrowthClass::ExponentialOnly => AssumptionReport {
            case: AssumptionCase::BoundedGrowth,
            l_at_one,
            t_star: None,
            horizon,
            note: Some("the majorant grows at most exponentially; no blow-up bound".into()),
        },
        GrowthClass::Explosive { t_star } => {
            if horizon > t_star {
                AssumptionReport {
                    case: AssumptionCase::Violated,
                    l_at_one,
                    t_star: Some(t_star),
                    horizon,
                    note: Some(format!(
                        "horizon {horizon} exceeds the square-integrability bound {t_star:.10}"
                    )),
                }
            } else {
                AssumptionReport {
                    case: AssumptionCase::WithinHorizonBound,
                    l_at_one,
                    t_star: Some(t_star),
                    horizon,
                    note: (horizon == t_star).then(|| {
                        "horizon sits exactly on the square-integrability bound; \
                         treat the variance estimate with care"
                            .into()
                    }),
                }
            }
        }
    };
    Ok(report)
}

/// Least-squares polynomial fit of `max(v, 0)` on `[-1, 1]` in the monomial
/// basis, using the exact moment integrals of the basis.
#[derive(Debug, Clone)]
pub struct PolynomialFit {
    /// Coefficients in increasing degree order.
    pub coeffs: Vec<f64>,
    pub interval: (f64, f64),
    /// Largest pointwise deviation from `max(v, 0)` over a dense sample of
    /// the interval.
    pub max_abs_residual: f64,
}

/// Continuous least-squares fit of the positive part on `[-1, 1]`.
///
/// The normal equations use the closed-form moments
/// `int_-1^1 v^(j+k) dv = 2/(j+k+1)` (even `j+k`, zero otherwise) and
/// `int_0^1 v^(k+1) dv = 1/(k+2)`, so the fit is exact up to the dense
/// solve.
pub fn fit_positive_part(degree: usize) -> Result<PolynomialFit> {
    let n = degree + 1;
    let mut gram = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for j in 0..n {
        for k in 0..n {
            if (j + k) % 2 == 0 {
                gram[j * n + k] = 2.0 / (j + k + 1) as f64;
            }
        }
        rhs[j] = 1.0 / (j + 2) as f64;
    }
    let coeffs = solve_dense(gram, rhs)?;
    let samples = 2_001;
    let mut max_abs_residual = 0.0f64;
    for i in 0..samples {
        let v = -1.0 + 2.0 * i as f64 / (samples - 1) as f64;
        let err = (polyval(&coeffs, v) - v.max(0.0)).abs();
        max_abs_residual = max_abs_residual.max(err);
    }
    Ok(PolynomialFit {
        coeffs,
        interval: (-1.0, 1.0),
        max_abs_residual,
    })
}
