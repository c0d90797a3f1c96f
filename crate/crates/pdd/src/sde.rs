//! Euler–Maruyama simulation of the path system behind the stochastic
//! representation of linear boundary-value problems.
//!
//! The state carries four components driven by one Brownian motion:
//!
//! ```text
//! dX  = b(X, t) dt + sigma(X, t) dW - n(X) dxi      (position)
//! dY  = c(X, t) Y dt + phi_R(X, t) Y dxi            (multiplicative weight)
//! dZ  = f(X, t) Y dt + psi_R(X, t) Y dxi            (accumulated source)
//! dxi = 1{X on reflecting boundary} d(local time)   (boundary clock)
//! ```
//!
//! Interior increments use the classical Euler–Maruyama update with all
//! coefficients evaluated at the step's left endpoint. Boundary handling is
//! discrete: a step that lands outside the domain is resolved at the end of
//! the step, either by stopping on an absorbing face (position projected
//! onto the face) or by reflecting symmetrically across a reflecting face,
//! in which case the overshoot distance is added to `xi` and the weight
//! updates above are applied with that increment. Both rules carry an
//! `O(sqrt(dt))` weak bias, which shrinks as the step is refined; callers
//! that need sharper boundary treatment must refine `dt`.
//!
//! Time arguments are plain path time. Callers whose problems run in
//! reversed time (initial-value problems scored through a terminal
//! functional) wrap their coefficient closures accordingly before handing
//! them to this module.

use std::sync::Arc;

use crate::error::{PddError, Result};
use crate::geometry::{classify_point, BoundaryEvent, BoxDomain};
use crate::rng::RngStream;

/// Drift and diffusion of the position process.
///
/// `drift` writes `b(x, t)` into a `dim` buffer; `sigma` writes the row-major
/// `dim x dim` diffusion matrix. `constant` marks coefficient functions that
/// do not depend on `(x, t)`, which lets callers that only need increments at
/// event times take a single exact Gaussian step over any interval.
#[derive(Clone)]
pub struct DiffusionCoefficients {
    pub(crate) drift: Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>,
    pub(crate) sigma: Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>,
    pub(crate) dim: usize,
    pub(crate) constant: bool,
}

impl DiffusionCoefficients {
    pub fn new(
        dim: usize,
        drift: Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>,
        sigma: Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>,
    ) -> Self {
        Self {
            drift,
            sigma,
            dim,
            constant: false,
        }
    }

    /// Constant drift vector and isotropic diffusion `sigma * I`.
    pub fn isotropic_constant(dim: usize, drift: Vec<f64>, sigma: f64) -> Self {
        assert_eq!(drift.len(), dim);
        let b = drift.clone();
        let drift_fn = Arc::new(move |_x: &[f64], _t: f64, out: &mut [f64]| {
            out.copy_from_slice(&b);
        });
        let sigma_fn = Arc::new(move |_x: &[f64], _t: f64, out: &mut [f64]| {
            out.fill(0.0);
            for i in 0..dim {
                out[i * dim + i] = sigma;
            }
        });
        Self {
            drift: drift_fn,
            sigma: sigma_fn,
            dim,
            constant: true,
        }
    }

    /// Standard Brownian driver scaled so the generator is
    /// `(sigma^2 / 2) * Laplacian`.
    pub fn brownian(dim: usize, sigma: f64) -> Self {
        Self::isotropic_constant(dim, vec![0.0; dim], sigma)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn drift_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        (self.drift)(x, t, out)
    }

    pub fn sigma_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        (self.sigma)(x, t, out)
    }
}

/// Scalar fields entering the weight and source components.
///
/// `c` and `f` act in the interior; `phi_r` and `psi_r` act only through the
/// boundary clock on reflecting faces (`phi_r <= 0` is assumed).
#[derive(Clone)]
pub struct ScalarDrivers {
    pub c: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
    pub f: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
    pub phi_r: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
    pub psi_r: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
}

impl ScalarDrivers {
    /// All four fields identically zero.
    pub fn zero() -> Self {
        let zero = Arc::new(|_: &[f64], _: f64| 0.0);
        Self {
            c: zero.clone(),
            f: zero.clone(),
            phi_r: zero.clone(),
            psi_r: zero,
        }
    }

    pub fn volume(
        c: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
        f: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
    ) -> Self {
        let zero = Arc::new(|_: &[f64], _: f64| 0.0);
        Self {
            c,
            f,
            phi_r: zero.clone(),
            psi_r: zero,
        }
    }
}

/// Instantaneous path state.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub x: Vec<f64>,
    pub y: f64,
    pub z: f64,
    pub xi: f64,
    pub t: f64,
}

impl PathState {
    pub fn new(start: &[f64]) -> Self {
        Self {
            x: start.to_vec(),
            y: 1.0,
            z: 0.0,
            xi: 0.0,
            t: 0.0,
        }
    }
}

/// Scratch buffers reused across steps to keep the hot loop allocation-free.
#[derive(Debug, Clone)]
pub struct SdeWorkspace {
    drift: Vec<f64>,
    sigma: Vec<f64>,
    dw: Vec<f64>,
}

impl SdeWorkspace {
    pub fn new(dim: usize) -> Self {
        Self {
            drift: vec![0.0; dim],
            sigma: vec![0.0; dim * dim],
            dw: vec![0.0; dim],
        }
    }
}

/// One interior Euler–Maruyama step with all coefficients at the left
/// endpoint:
///
/// ```text
/// X += b dt + sigma dW,   Y += c Y dt,   Z += f Y dt,   t += dt
/// ```
///
/// Boundary contributions to `Y`, `Z`, `xi` are applied separately by
/// [`simulate_path`] when a step crosses a reflecting face.
pub fn advance_state(
    state: &mut PathState,
    coeffs: &DiffusionCoefficients,
    scalars: &ScalarDrivers,
    dt: f64,
    dw: &[f64],
    ws: &mut SdeWorkspace,
) {
    let dim = coeffs.dim();
    debug_assert_eq!(dw.len(), dim);
    coeffs.drift_into(&state.x, state.t, &mut ws.drift);
    coeffs.sigma_into(&state.x, state.t, &mut ws.sigma);
    let cv = (scalars.c)(&state.x, state.t);
    let fv = (scalars.f)(&state.x, state.t);
    let y_old = state.y;
    for i in 0..dim {
        let mut dx = ws.drift[i] * dt;
        for j in 0..dim {
            dx += ws.sigma[i * dim + j] * dw[j];
        }
        state.x[i] += dx;
    }
    state.y += cv * y_old * dt;
    state.z += fv * y_old * dt;
    state.t += dt;
}

/// Apply the boundary-clock increment `dxi` at a reflecting contact point.
fn apply_boundary_increment(
    state: &mut PathState,
    scalars: &ScalarDrivers,
    hit_point: &[f64],
    dxi: f64,
) {
    let phi = (scalars.phi_r)(hit_point, state.t);
    let psi = (scalars.psi_r)(hit_point, state.t);
    let y_old = state.y;
    state.xi += dxi;
    state.y += phi * y_old * dxi;
    state.z += psi * y_old * dxi;
}

/// Time horizon of a path: finite for time-dependent problems, stationary
/// paths run until they are absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Stationary,
}

impl Horizon {
    pub fn is_stationary(&self) -> bool {
        matches!(self, Horizon::Stationary)
    }
}

/// Completed path: terminal state, the exit event (`BoundaryEvent::None`
/// means the horizon was reached), and the absorption time if any.
#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub terminal_state: PathState,
    pub exit: BoundaryEvent,
    pub exit_time: Option<f64>,
}

/// Upper bound on steps per path; reaching it means the configuration keeps
/// paths alive essentially forever.
const MAX_PATH_STEPS: u64 = 200_000_000;

/// Cap on reflections resolved within a single step.
const MAX_REFLECTIONS_PER_STEP: u32 = 10_000;

/// Simulate one path from `start` until absorption or the horizon.
///
/// Stationary horizons require at least one absorbing face, otherwise the
/// walk cannot terminate and the configuration is rejected. Absorption uses
/// the end-of-step convention: the exit time is the time at the end of the
/// crossing step and the exit point is the projection onto the face.
pub fn simulate_path(
    start: &[f64],
    coeffs: &DiffusionCoefficients,
    scalars: &ScalarDrivers,
    domain: &BoxDomain,
    horizon: Horizon,
    dt: f64,
    stream: RngStream,
) -> Result<PathOutcome> {
    if start.len() != domain.dim() || coeffs.dim() != domain.dim() {
        return Err(PddError::InvalidArgument(
            "simulate_path: dimension mismatch between start, coefficients, and domain".into(),
        ));
    }
    if !(dt > 0.0) {
        return Err(PddError::InvalidArgument(
            "simulate_path: step size must be positive".into(),
        ));
    }
    if horizon.is_stationary() && !domain.has_absorbing_face() {
        return Err(PddError::Unsupported(
            "stationary problems on purely reflecting domains have no absorbing exit; \
             the walk cannot terminate"
                .into(),
        ));
    }
    if let Horizon::Finite(t_end) = horizon {
        if !(t_end >= 0.0) {
            return Err(PddError::InvalidArgument(
                "simulate_path: horizon must be non-negative".into(),
            ));
        }
    }

    let mut state = PathState::new(start);
    let mut ws = SdeWorkspace::new(coeffs.dim());
    let mut sampler = stream.sampler();
    let mut steps: u64 = 0;

    loop {
        let step_dt = match horizon {
            Horizon::Finite(t_end) => {
                let remaining = t_end - state.t;
                if remaining <= 0.0 {
                    return Ok(PathOutcome {
                        terminal_state: state,
                        exit: BoundaryEvent::None,
                        exit_time: None,
                    });
                }
                remaining.min(dt)
            }
            Horizon::Stationary => dt,
        };
        sampler.fill_gaussian_increment(step_dt, &mut ws.dw);
        // `dw` aliasing: advance_state reads ws.drift/ws.sigma and the
        // increment; split the borrow by taking the increment out first.
        let dw = std::mem::take(&mut ws.dw);
        advance_state(&mut state, coeffs, scalars, step_dt, &dw, &mut ws);
        ws.dw = dw;
        steps += 1;

        // Resolve boundary contacts at the end of the step.
        let mut reflections = 0u32;
        loop {
            match classify_point(domain, &state.x) {
                BoundaryEvent::None => break,
                BoundaryEvent::Absorbing { face, hit_point } => {
                    state.x.copy_from_slice(&hit_point);
                    let exit_time = state.t;
                    return Ok(PathOutcome {
                        terminal_state: state,
                        exit: BoundaryEvent::Absorbing { face, hit_point },
                        exit_time: Some(exit_time),
                    });
                }
                BoundaryEvent::Reflecting { face, hit_point } => {
                    let axis = BoxDomain::face_axis(face);
                    let plane = domain.face_value(face);
                    let overshoot = (state.x[axis] - plane).abs();
                    state.x[axis] = 2.0 * plane - state.x[axis];
                    apply_boundary_increment(&mut state, scalars, &hit_point, overshoot);
                    reflections += 1;
                    if reflections > MAX_REFLECTIONS_PER_STEP {
                        return Err(PddError::Divergence(format!(
                            "simulate_path: more than {MAX_REFLECTIONS_PER_STEP} reflections \
                             in one step; step size {dt} is too large for this domain"
                        )));
                    }
                }
            }
        }

        if steps >= MAX_PATH_STEPS {
            return Err(PddError::HorizonExhausted(steps));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FaceKind;
    use crate::numerics::Welford;

    fn unit_interval() -> BoxDomain {
        BoxDomain::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn weight_component_compounds_like_euler() {
        // c = k constant, no boundary contact: Y = (1 + k h)^n after n steps.
        let k = 0.35;
        let coeffs = DiffusionCoefficients::brownian(1, 0.0);
        let scalars = ScalarDrivers {
            c: Arc::new(move |_, _| k),
            f: Arc::new(|_, _| 0.0),
            phi_r: Arc::new(|_, _| 0.0),
            psi_r: Arc::new(|_, _| 0.0),
        };
        let mut state = PathState::new(&[0.5]);
        let mut ws = SdeWorkspace::new(1);
        let h = 0.01;
        let n = 20;
        for _ in 0..n {
            advance_state(&mut state, &coeffs, &scalars, h, &[0.0], &mut ws);
        }
        let expected = (1.0 + k * h).powi(n);
        assert!((state.y - expected).abs() < 1e-12);
        assert!((state.t - h * n as f64).abs() < 1e-12);
    }

    #[test]
    fn source_component_accumulates_linearly() {
        // f = m constant, c = 0: Z = m * n * h.
        let m = -2.5;
        let coeffs = DiffusionCoefficients::brownian(1, 0.0);
        let scalars = ScalarDrivers {
            c: Arc::new(|_, _| 0.0),
            f: Arc::new(move |_, _| m),
            phi_r: Arc::new(|_, _| 0.0),
            psi_r: Arc::new(|_, _| 0.0),
        };
        let mut state = PathState::new(&[0.5]);
        let mut ws = SdeWorkspace::new(1);
        let h = 0.05;
        let n = 40;
        for _ in 0..n {
            advance_state(&mut state, &coeffs, &scalars, h, &[0.0], &mut ws);
        }
        assert!((state.z - m * h * n as f64).abs() < 1e-12);
        assert_eq!(state.y, 1.0);
    }

    #[test]
    fn deterministic_drift_moves_position() {
        let coeffs = DiffusionCoefficients::isotropic_constant(2, vec![1.0, -0.5], 0.0);
        let mut state = PathState::new(&[0.0, 0.0]);
        let mut ws = SdeWorkspace::new(2);
        let scalars = ScalarDrivers::zero();
        for _ in 0..10 {
            advance_state(&mut state, &coeffs, &scalars, 0.1, &[0.0, 0.0], &mut ws);
        }
        assert!((state.x[0] - 1.0).abs() < 1e-12);
        assert!((state.x[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_horizon_in_huge_domain_never_exits() {
        let domain = BoxDomain::interval(-1e10, 1e10).unwrap();
        let coeffs = DiffusionCoefficients::brownian(1, 1.0);
        let out = simulate_path(
            &[0.0],
            &coeffs,
            &ScalarDrivers::zero(),
            &domain,
            Horizon::Finite(1e-6),
            1e-7,
            RngStream::for_node(1, 0),
        )
        .unwrap();
        assert!(out.exit.is_none());
        assert_eq!(out.exit_time, None);
        assert!((out.terminal_state.t - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn paths_are_bitwise_deterministic() {
        let domain = unit_interval();
        let coeffs = DiffusionCoefficients::brownian(1, 1.0);
        let stream = RngStream::for_node(77, 5).with_replicate(3);
        let run = || {
            simulate_path(
                &[0.5],
                &coeffs,
                &ScalarDrivers::zero(),
                &domain,
                Horizon::Stationary,
                1e-3,
                stream,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.terminal_state.x, b.terminal_state.x);
        assert_eq!(a.terminal_state.t, b.terminal_state.t);
        assert_eq!(a.exit_time, b.exit_time);
    }

    #[test]
    fn gamblers_ruin_exit_probability() {
        // Driftless Brownian path from x in [0,1] exits right with
        // probability x. Start at 0.5 where symmetry kills the discrete
        // boundary-test bias.
        let domain = unit_interval();
        let coeffs = DiffusionCoefficients::brownian(1, 1.0);
        let scalars = ScalarDrivers::zero();
        let n = 100_000;
        let mut w = Welford::new();
        for r in 0..n {
            let stream = RngStream::for_node(314, 0).with_replicate(r);
            let out = simulate_path(
                &[0.5],
                &coeffs,
                &scalars,
                &domain,
                Horizon::Stationary,
                1.0 / 256.0,
                stream,
            )
            .unwrap();
            let right = match out.exit {
                BoundaryEvent::Absorbing { face, .. } => face == 1,
                _ => panic!("stationary path must absorb"),
            };
            w.push(if right { 1.0 } else { 0.0 });
        }
        let se = w.std_error();
        assert!(
            (w.mean() - 0.5).abs() <= 3.0 * se,
            "exit-right fraction {} vs 0.5 (se {})",
            w.mean(),
            se
        );
    }

    #[test]
    fn exit_probability_bias_shrinks_with_dt() {
        // From x = 0.3 the exact exit-right probability is 0.3; the
        // end-of-step boundary test inflates it by O(sqrt(dt)). Halving dt
        // twice must visibly shrink the inflation above Monte Carlo noise.
        let domain = unit_interval();
        let coeffs = DiffusionCoefficients::brownian(1, 1.0);
        let scalars = ScalarDrivers::zero();
        let n: u64 = 1_000_000;
        let estimate = |dt: f64, node: u64| {
            let mut hits = 0u64;
            for r in 0..n {
                let stream = RngStream::for_node(2718, node).with_replicate(r);
                let out = simulate_path(
                    &[0.3],
                    &coeffs,
                    &scalars,
                    &domain,
                    Horizon::Stationary,
                    dt,
                    stream,
                )
                .unwrap();
                if let BoundaryEvent::Absorbing { face: 1, .. } = out.exit {
                    hits += 1;
                }
            }
            hits as f64 / n as f64
        };
        let coarse = estimate(1.0 / 64.0, 0);
        let fine = estimate(1.0 / 256.0, 1);
        let err_coarse = (coarse - 0.3).abs();
        let err_fine = (fine - 0.3).abs();
        let noise = (0.3 * 0.7 / n as f64).sqrt();
        assert!(
            err_coarse > 10.0 * noise,
            "coarse bias {err_coarse} not resolvable above noise {noise}"
        );
        assert!(
            err_fine < err_coarse,
            "bias did not shrink: {err_fine} vs {err_coarse}"
        );
    }

    #[test]
    fn reflection_accumulates_boundary_clock_and_preserves_position() {
        // One reflecting face on the left: a step that overshoots it must
        // come back mirrored with xi increased by the overshoot.
        let domain = BoxDomain::new(
            vec![0.0],
            vec![1.0],
            vec![FaceKind::Reflecting, FaceKind::Absorbing],
        )
        .unwrap();
        let coeffs = DiffusionCoefficients::isotropic_constant(1, vec![-60.0], 0.0);
        // Deterministic drift pushes from 0.5 to -0.1 in one step of 0.01.
        let out = simulate_path(
            &[0.5],
            &coeffs,
            &ScalarDrivers::zero(),
            &domain,
            Horizon::Finite(0.01),
            0.01,
            RngStream::for_node(0, 0),
        )
        .unwrap();
        assert!((out.terminal_state.x[0] - 0.1).abs() < 1e-12);
        assert!((out.terminal_state.xi - 0.1).abs() < 1e-12);
        assert!(out.exit.is_none());
    }

    #[test]
    fn boundary_clock_is_monotone_under_nested_horizons() {
        // Same stream, horizons T and 2T with T a multiple of dt: the first
        // path is a bitwise prefix of the second, so xi(T) <= xi(2T).
        let domain = BoxDomain::new(
            vec![0.0],
            vec![0.2],
            vec![FaceKind::Reflecting, FaceKind::Reflecting],
        )
        .unwrap();
        let coeffs = DiffusionCoefficients::brownian(1, 1.0);
        let scalars = ScalarDrivers::zero();
        for seed in 0..20 {
            let stream = RngStream::for_node(99, seed);
            let run = |t_end: f64| {
                simulate_path(
                    &[0.1],
                    &coeffs,
                    &scalars,
                    &domain,
                    Horizon::Finite(t_end),
                    1e-3,
                    stream,
                )
                .unwrap()
                .terminal_state
            };
            let short = run(0.05);
            let long = run(0.10);
            assert!(short.xi >= 0.0);
            assert!(
                long.xi >= short.xi,
                "xi must be nondecreasing: {} then {}",
                short.xi,
                long.xi
            );
        }
    }

    proptest::proptest! {
        /// The boundary clock never decreases and the multiplicative weight
        /// stays positive whenever `c <= 0` and the step is small enough
        /// that `1 + c dt > 0`.
        #[test]
        fn clock_monotone_weight_positive(
            replicate in 0u64..200,
            c in -5.0f64..0.0,
            start in 0.02f64..0.18,
        ) {
            let domain = BoxDomain::new(
                vec![0.0],
                vec![0.2],
                vec![FaceKind::Reflecting, FaceKind::Reflecting],
            )
            .unwrap();
            let coeffs = DiffusionCoefficients::brownian(1, 1.0);
            let scalars = ScalarDrivers {
                c: Arc::new(move |_, _| c),
                f: Arc::new(|_, _| 1.0),
                phi_r: Arc::new(|_, _| -0.5),
                psi_r: Arc::new(|_, _| 0.0),
            };
            let out = simulate_path(
                &[start],
                &coeffs,
                &scalars,
                &domain,
                Horizon::Finite(0.05),
                1e-3,
                RngStream::for_node(4242, 0).with_replicate(replicate),
            )
            .unwrap();
            let s = out.terminal_state;
            proptest::prop_assert!(s.xi >= 0.0);
            proptest::prop_assert!(s.y > 0.0, "weight must stay positive, got {}", s.y);
            proptest::prop_assert!(s.y <= 1.0 + 1e-12);
            proptest::prop_assert!(s.z.is_finite());
        }
    }

    #[test]
    fn stationary_mode_rejects_purely_reflecting_domain() {
        let domain = BoxDomain::new(
            vec![0.0],
            vec![1.0],
            vec![FaceKind::Reflecting, FaceKind::Reflecting],
        )
        .unwrap();
        let coeffs = DiffusionCoefficients::brownian(1, 1.0);
        let err = simulate_path(
            &[0.5],
            &coeffs,
            &ScalarDrivers::zero(),
            &domain,
            Horizon::Stationary,
            1e-3,
            RngStream::for_node(0, 0),
        )
        .unwrap_err();
        assert!(matches!(err, PddError::Unsupported(_)));
    }
}
