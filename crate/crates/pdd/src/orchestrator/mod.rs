//! Two-stage orchestration of a full decomposed solve.
//!
//! Stage 1 prices the interface: for each interior cut the configured
//! pathwise estimator produces pointwise values at a short ladder of levels
//! (time levels for evolution problems, cross-coordinates for stationary
//! strips), and each cut's ladder is condensed into a least-squares
//! polynomial. Stage 2 then solves every subdomain *independently* with
//! classical deterministic schemes, reading boundary data on interface
//! faces from the stage-1 interpolants. No iteration between subdomains
//! ever happens: the decomposition is embarrassingly parallel after the
//! interface is priced.
//!
//! Determinism is a hard contract throughout: all randomness flows through
//! counter-derived streams keyed by `(node, replicate, particle)`, every
//! reduction runs in a fixed order, and subdomains exchange boundary data
//! only through the shared interpolant objects — so two runs with the same
//! settings produce bitwise-identical grids on any worker count, and
//! adjacent subdomains agree bitwise on their shared interface columns.

pub mod config;
pub mod interpolate;
pub mod problems;
pub mod timing;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::branching::{check_marked_assumptions, estimate_branching, AssumptionReport};
use crate::error::{PddError, Result};
use crate::feynman_kac::estimate_point;
use crate::geometry::{
    build_interface_grid, partition_box, BoxDomain, InterfaceGrid, InterfaceNodeValue, Partition,
};
use crate::pde::parabolic::{solve_parabolic_1d, ParabolicProblem1d, TimeFn};
use crate::pde::elliptic::{solve_elliptic_2d, EllipticProblem2d};
use crate::pde::GridSolution;
use crate::rng::RngStream;

pub use config::{PddConfig, RunSettings};
pub use interpolate::{default_degree, interpolants_from_grid, CutInterpolant};
pub use problems::{preset, Preset, ProblemKind, ReferenceSolution, Stage1, Stage2};
pub use timing::{idealized_stage_seconds, measure_speedup, StageTimings};

/// Grid-wide error against a known reference solution.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ErrorSummary {
    pub max_abs: f64,
    pub rms: f64,
}

/// Everything a finished run produced.
#[derive(Debug)]
pub struct PddRun {
    pub kind: ProblemKind,
    pub label: String,
    pub stationary: bool,
    pub subdomains: usize,
    /// Interior cut coordinates (empty for a monolithic run).
    pub cuts: Vec<f64>,
    /// Interface levels: times for evolution problems, axis-1 coordinates
    /// for stationary ones.
    pub levels: Vec<f64>,
    /// Stitched global solution. Axis 0 is the decomposition axis; axis 1
    /// is time (evolution) or the second spatial axis (stationary).
    pub solution: GridSolution,
    /// The priced interface (`None` for a monolithic run).
    pub interface: Option<InterfaceGrid>,
    pub timings: StageTimings,
    /// Growth/integrability report of the branching estimator, when one ran.
    pub assumption: Option<AssumptionReport>,
    /// Total pruned-and-restarted tree attempts across all cuts.
    pub restarts: u64,
    /// Largest standard error among the estimated interface nodes.
    pub max_interface_std_error: f64,
    /// Errors against the closed form, when the preset has one.
    pub errors: Option<ErrorSummary>,
}

/// Numeric parameters after problem-dependent defaults are applied.
struct EffectiveParams {
    mc_dt: f64,
    det_dx: f64,
    /// Crank-Nicolson step, snapped so every interface level lands exactly
    /// on a step boundary. Unused for stationary problems.
    det_dt: f64,
}

fn effective_params(settings: &RunSettings, preset: &Preset, levels: &[f64]) -> EffectiveParams {
    let width = preset.domain.hi()[0] - preset.domain.lo()[0];
    let mc_dt = settings.mc_dt.unwrap_or(match preset.kind {
        ProblemKind::Elliptic => 2e-5,
        _ => 1e-3,
    });
    let det_dx = settings.det_dx.unwrap_or(match preset.kind {
        ProblemKind::Elliptic => 1.0 / 64.0,
        _ => width / 512.0,
    });
    let det_dt = if preset.is_stationary() {
        0.0
    } else {
        let (lo, hi) = preset.level_span();
        let extent = hi - lo;
        let requested = settings.det_dt.unwrap_or(extent / 500.0);
        let per_level = extent / (levels.len() - 1) as f64;
        let m = ((per_level / requested - 1e-9).ceil()).max(1.0) as usize;
        extent / (m * (levels.len() - 1)) as f64
    };
    EffectiveParams {
        mc_dt,
        det_dx,
        det_dt,
    }
}

fn level_ladder(preset: &Preset, theta: usize) -> Vec<f64> {
    let (lo, hi) = preset.level_span();
    let mut levels: Vec<f64> = (0..theta)
        .map(|j| lo + (hi - lo) * j as f64 / (theta - 1) as f64)
        .collect();
    levels[0] = lo;
    levels[theta - 1] = hi;
    levels
}

/// Run the full two-stage pipeline described by `settings`.
pub fn run_pdd(settings: &RunSettings) -> Result<PddRun> {
    settings.validate()?;
    let preset = problems::preset(settings.kind, settings.domain.as_deref(), settings.horizon)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| PddError::Config(format!("worker pool: {e}")))?;
    pool.install(|| run_inner(settings, &preset))
}

fn run_inner(settings: &RunSettings, preset: &Preset) -> Result<PddRun> {
    let theta = settings.time_levels;
    let levels = level_ladder(preset, theta);
    let params = effective_params(settings, preset, &levels);
    let p = settings.subdomains;

    // --- Stage 1: price the interface. ---------------------------------
    let mut assumption = None;
    let mut restarts = 0;
    let mut stage1_units: Vec<f64> = Vec::new();
    let mut interface = None;
    let mut interpolants: Vec<CutInterpolant> = Vec::new();
    let mut partition: Option<Partition> = None;

    let stage1_start = Instant::now();
    if p > 1 {
        let part = partition_box(&preset.domain, 0, p)?;
        let grid = build_interface_grid(&part, &levels)?;
        let cuts = part.cut_points().to_vec();
        let mut values: Vec<Option<InterfaceNodeValue>> = vec![None; cuts.len() * theta];

        match &preset.stage1 {
            Stage1::Branching(spec) => {
                if preset.is_stationary() {
                    return Err(PddError::Unsupported(
                        "branching estimators apply to evolution problems only".into(),
                    ));
                }
                let report = check_marked_assumptions(spec, levels[theta - 1])?;
                if !report.admissible() {
                    return Err(PddError::AssumptionViolated(format!(
                        "horizon {} exceeds the square-integrability bound{}",
                        report.horizon,
                        report
                            .t_star
                            .map(|t| format!(" (blow-up time {t:.6})"))
                            .unwrap_or_default()
                    )));
                }
                assumption = Some(report);
                let initial = evolution_initial(preset)?;
                for (c, &cut) in cuts.iter().enumerate() {
                    let est = estimate_branching(
                        spec,
                        &[cut],
                        &levels[1..],
                        settings.mc_samples,
                        RngStream::for_node(settings.seed, c as u64),
                    )?;
                    restarts += est.restarts;
                    stage1_units.push(est.elapsed_seconds);
                    values[c * theta] = Some(InterfaceNodeValue {
                        estimate: initial(cut),
                        std_error: 0.0,
                        n_samples: 0,
                    });
                    for j in 1..theta {
                        values[c * theta + j] = Some(InterfaceNodeValue {
                            estimate: est.values[j - 1],
                            std_error: est.std_errors[j - 1],
                            n_samples: est.n_samples,
                        });
                    }
                }
            }
            Stage1::Linear(spec) => {
                if preset.is_stationary() {
                    let dirichlet = stationary_dirichlet(preset)?;
                    let (y_lo, y_hi) = preset.level_span();
                    for (c, &cut) in cuts.iter().enumerate() {
                        for (j, &y) in levels.iter().enumerate() {
                            values[c * theta + j] = if y == y_lo || y == y_hi {
                                Some(InterfaceNodeValue {
                                    estimate: dirichlet(cut, y),
                                    std_error: 0.0,
                                    n_samples: 0,
                                })
                            } else {
                                let est = estimate_point(
                                    spec,
                                    &[cut, y],
                                    0.0,
                                    settings.mc_samples,
                                    params.mc_dt,
                                    RngStream::for_node(settings.seed, (c * theta + j) as u64),
                                )?;
                                stage1_units.push(est.elapsed_seconds);
                                Some(InterfaceNodeValue {
                                    estimate: est.value,
                                    std_error: est.std_error,
                                    n_samples: est.n_samples,
                                })
                            };
                        }
                    }
                } else {
                    let initial = evolution_initial(preset)?;
                    for (c, &cut) in cuts.iter().enumerate() {
                        values[c * theta] = Some(InterfaceNodeValue {
                            estimate: initial(cut),
                            std_error: 0.0,
                            n_samples: 0,
                        });
                        for (j, &t) in levels.iter().enumerate().skip(1) {
                            let est = estimate_point(
                                spec,
                                &[cut],
                                t,
                                settings.mc_samples,
                                params.mc_dt,
                                RngStream::for_node(settings.seed, (c * theta + j) as u64),
                            )?;
                            stage1_units.push(est.elapsed_seconds);
                            values[c * theta + j] = Some(InterfaceNodeValue {
                                estimate: est.value,
                                std_error: est.std_error,
                                n_samples: est.n_samples,
                            });
                        }
                    }
                }
            }
        }

        let grid = grid.with_values(values)?;
        let degree = settings
            .interpolation_degree
            .unwrap_or_else(|| default_degree(theta));
        interpolants = interpolants_from_grid(&grid, degree)?;
        interface = Some(grid);
        partition = Some(part);
    }
    let stage1_wall = stage1_start.elapsed().as_secs_f64();

    // --- Stage 2: decoupled deterministic solves. -----------------------
    let stage2_start = Instant::now();
    let (solution, stage2_units) = match &preset.stage2 {
        Stage2::Parabolic {
            diffusion,
            reaction,
            initial,
            outer,
        } => {
            let strips: Vec<(f64, f64)> = match &partition {
                None => vec![(preset.domain.lo()[0], preset.domain.hi()[0])],
                Some(part) => part
                    .subdomains()
                    .iter()
                    .map(|s| (s.lo()[0], s.hi()[0]))
                    .collect(),
            };
            let (_, t_final) = preset.level_span();
            let solves: Vec<(GridSolution, f64)> = strips
                .par_iter()
                .enumerate()
                .map(|(i, &(x_lo, x_hi))| {
                    let left: TimeFn = if i == 0 {
                        outer.0.clone()
                    } else {
                        let it = interpolants[i - 1].clone();
                        Arc::new(move |t| it.eval(t))
                    };
                    let right: TimeFn = if i == strips.len() - 1 {
                        outer.1.clone()
                    } else {
                        let it = interpolants[i].clone();
                        Arc::new(move |t| it.eval(t))
                    };
                    let problem = ParabolicProblem1d {
                        x_lo,
                        x_hi,
                        diffusion: *diffusion,
                        reaction: reaction.clone(),
                        initial: initial.clone(),
                        left,
                        right,
                    };
                    let nx = (((x_hi - x_lo) / params.det_dx).round() as usize).max(2);
                    let t0 = Instant::now();
                    let sol =
                        solve_parabolic_1d(&problem, nx, params.det_dt, t_final, Some(&levels))?;
                    Ok((sol, t0.elapsed().as_secs_f64()))
                })
                .collect::<Result<_>>()?;
            stitch_axis0(solves)?
        }
        Stage2::Elliptic(global) => {
            let (y_lo, y_hi) = preset.level_span();
            let ny = (((y_hi - y_lo) / params.det_dx).round() as usize).max(2);
            let strips: Vec<BoxDomain> = match &partition {
                None => vec![preset.domain.clone()],
                Some(part) => part.subdomains().to_vec(),
            };
            let n_strips = strips.len();
            let solves: Vec<(GridSolution, f64)> = strips
                .par_iter()
                .enumerate()
                .map(|(i, strip)| {
                    let g = global.dirichlet.clone();
                    let left = (i > 0).then(|| (strip.lo()[0], interpolants[i - 1].clone()));
                    let right =
                        (i + 1 < n_strips).then(|| (strip.hi()[0], interpolants[i].clone()));
                    let dirichlet = Arc::new(move |x: f64, y: f64| {
                        // Global top/bottom rows (corners included) carry
                        // exact data; vertical interface faces read the
                        // fitted interpolants.
                        if y != y_lo && y != y_hi {
                            if let Some((cut, it)) = &left {
                                if x == *cut {
                                    return it.eval(y);
                                }
                            }
                            if let Some((cut, it)) = &right {
                                if x == *cut {
                                    return it.eval(y);
                                }
                            }
                        }
                        g(x, y)
                    });
                    let problem = EllipticProblem2d {
                        domain: strip.clone(),
                        a: global.a,
                        b1: global.b1.clone(),
                        b2: global.b2.clone(),
                        c: global.c.clone(),
                        f: global.f.clone(),
                        dirichlet,
                    };
                    let width = strip.hi()[0] - strip.lo()[0];
                    let nx = ((width / params.det_dx).round() as usize).max(2);
                    let t0 = Instant::now();
                    let sol = solve_elliptic_2d(&problem, nx, ny)?;
                    Ok((sol, t0.elapsed().as_secs_f64()))
                })
                .collect::<Result<_>>()?;
            stitch_axis0(solves)?
        }
    };
    let stage2_wall = stage2_start.elapsed().as_secs_f64();

    // --- Assemble the report. -------------------------------------------
    let max_interface_std_error = interface
        .as_ref()
        .map(|grid| {
            let mut worst = 0.0f64;
            for c in 0..grid.cuts().len() {
                for j in 0..grid.levels().len() {
                    if let Some(v) = grid.value(c, j) {
                        worst = worst.max(v.std_error);
                    }
                }
            }
            worst
        })
        .unwrap_or(0.0);

    let errors = preset.closed_form.as_ref().map(|truth| {
        let xs = &solution.axes[0];
        let ls = &solution.axes[1];
        let mut max_abs = 0.0f64;
        let mut sum_sq = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            for (j, &l) in ls.iter().enumerate() {
                let d = solution.values[i * ls.len() + j] - truth(x, l);
                max_abs = max_abs.max(d.abs());
                sum_sq += d * d;
            }
        }
        ErrorSummary {
            max_abs,
            rms: (sum_sq / (xs.len() * ls.len()) as f64).sqrt(),
        }
    });

    Ok(PddRun {
        kind: preset.kind,
        label: preset.label.clone(),
        stationary: preset.is_stationary(),
        subdomains: p,
        cuts: partition
            .as_ref()
            .map(|part| part.cut_points().to_vec())
            .unwrap_or_default(),
        levels,
        solution,
        interface,
        timings: StageTimings::from_units(
            settings.workers,
            stage1_wall,
            stage2_wall,
            stage1_units,
            stage2_units,
        ),
        assumption,
        restarts,
        max_interface_std_error,
        errors,
    })
}

/// Initial datum of an evolution preset, as a plain function of `x`.
fn evolution_initial(preset: &Preset) -> Result<impl Fn(f64) -> f64 + '_> {
    match &preset.stage2 {
        Stage2::Parabolic { initial, .. } => {
            let f = initial.clone();
            Ok(move |x: f64| f(x))
        }
        Stage2::Elliptic(_) => Err(PddError::Unsupported(
            "evolution pipeline reached with a stationary subdomain stage".into(),
        )),
    }
}

/// Boundary datum of a stationary preset, as a plain function of `(x, y)`.
fn stationary_dirichlet(preset: &Preset) -> Result<impl Fn(f64, f64) -> f64 + '_> {
    match &preset.stage2 {
        Stage2::Elliptic(problem) => {
            let g = problem.dirichlet.clone();
            Ok(move |x: f64, y: f64| g(x, y))
        }
        Stage2::Parabolic { .. } => Err(PddError::Unsupported(
            "stationary pipeline reached with an evolution subdomain stage".into(),
        )),
    }
}

/// Concatenate per-strip solutions along axis 0.
///
/// Adjacent strips share their cut column; both sides computed it from the
/// same boundary closure at the same coordinates, so the shared rows must
/// match bitwise — anything else is a determinism bug, not a tolerance
/// question. The duplicate row is dropped from the left strip.
fn stitch_axis0(solves: Vec<(GridSolution, f64)>) -> Result<(GridSolution, Vec<f64>)> {
    let mut units = Vec::with_capacity(solves.len());
    let mut xs: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut level_axis: Option<Vec<f64>> = None;
    let mut max_residual = 0.0f64;
    for (sol, unit) in solves {
        units.push(unit);
        let cols = sol.axes[1].len();
        match &level_axis {
            None => level_axis = Some(sol.axes[1].clone()),
            Some(axis) => {
                assert_eq!(
                    axis, &sol.axes[1],
                    "subdomain solves disagree on the level axis"
                );
            }
        }
        let skip = if xs.is_empty() {
            0
        } else {
            let last = xs.len() - 1;
            assert_eq!(
                xs[last], sol.axes[0][0],
                "adjacent subdomains disagree on the cut coordinate"
            );
            let shared_prev = &values[last * cols..(last + 1) * cols];
            let shared_next = &sol.values[0..cols];
            assert!(
                shared_prev == shared_next,
                "adjacent subdomains disagree on their shared interface column"
            );
            1
        };
        xs.extend_from_slice(&sol.axes[0][skip..]);
        values.extend_from_slice(&sol.values[skip * cols..]);
        max_residual = max_residual.max(sol.max_residual);
    }
    let level_axis = level_axis.ok_or_else(|| {
        PddError::InvalidArgument("stitch_axis0: no subdomain solutions".into())
    })?;
    Ok((
        GridSolution {
            axes: vec![xs, level_axis],
            values,
            max_residual,
        },
        units,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_settings(kind: ProblemKind) -> RunSettings {
        let mut s = RunSettings::default();
        s.kind = kind;
        s.workers = 2;
        s.seed = 11;
        s
    }

    #[test]
    fn heat_pdd_matches_closed_form() {
        // Two subdomains on [0, 1]: one cut at 1/2, modest sampling. The
        // single-mode solution is smooth, so even a low-degree fit in time
        // keeps the decomposed solve within a few times the Monte Carlo
        // noise floor.
        let mut s = quick_settings(ProblemKind::Heat);
        s.subdomains = 2;
        s.time_levels = 6;
        s.mc_samples = 4_000;
        s.mc_dt = Some(2e-5);
        s.det_dx = Some(1.0 / 128.0);
        s.det_dt = Some(1e-3);
        let run = run_pdd(&s).unwrap();
        assert_eq!(run.cuts, vec![0.5]);
        assert!(!run.stationary);
        let errors = run.errors.expect("heat has a closed form");
        // Monte Carlo noise at 4k samples dominates; the tolerance tracks
        // 3x the worst interface standard error plus scheme error.
        let tol = 3.0 * run.max_interface_std_error + 5e-3;
        assert!(
            errors.max_abs < tol,
            "max error {} vs tol {tol}",
            errors.max_abs
        );
        assert_eq!(run.solution.axes[1].len(), 6);
        assert!(run.interface.is_some());
    }

    #[test]
    fn monolithic_run_skips_the_interface_stage() {
        let mut s = quick_settings(ProblemKind::Heat);
        s.subdomains = 1;
        s.time_levels = 5;
        s.det_dx = Some(1.0 / 128.0);
        s.det_dt = Some(1e-3);
        let run = run_pdd(&s).unwrap();
        assert!(run.interface.is_none());
        assert!(run.cuts.is_empty());
        assert!(run.timings.stage1_unit_seconds.is_empty());
        assert_eq!(run.timings.stage2_unit_seconds.len(), 1);
        let errors = run.errors.unwrap();
        assert!(errors.max_abs < 1e-4, "pure scheme error, got {}", errors.max_abs);
    }

    #[test]
    fn worker_count_does_not_change_the_grid() {
        let mut s = quick_settings(ProblemKind::Heat);
        s.subdomains = 2;
        s.time_levels = 4;
        s.mc_samples = 400;
        s.mc_dt = Some(1e-3);
        s.det_dx = Some(1.0 / 64.0);
        s.det_dt = Some(5e-3);
        let a = run_pdd(&s.clone().with_workers(1)).unwrap();
        let b = run_pdd(&s.with_workers(4)).unwrap();
        assert_eq!(a.solution.values, b.solution.values);
        assert_eq!(a.solution.axes, b.solution.axes);
        let ga = a.interface.unwrap();
        let gb = b.interface.unwrap();
        for c in 0..ga.cuts().len() {
            for j in 0..ga.levels().len() {
                let va = ga.value(c, j).unwrap();
                let vb = gb.value(c, j).unwrap();
                assert_eq!(va.estimate.to_bits(), vb.estimate.to_bits());
                assert_eq!(va.std_error.to_bits(), vb.std_error.to_bits());
            }
        }
    }

    #[test]
    fn kpp_pdd_runs_end_to_end_with_branching_interface() {
        // Narrow domain keeps the trees cheap; the front is essentially
        // flat there, which is fine — the point is the full pipeline.
        let mut s = quick_settings(ProblemKind::Kpp);
        s.domain = Some(vec![-30.0, 10.0]);
        s.horizon = Some(0.5);
        s.subdomains = 2;
        s.time_levels = 4;
        s.mc_samples = 600;
        s.det_dx = Some(0.05);
        s.det_dt = Some(2e-3);
        let run = run_pdd(&s).unwrap();
        assert_eq!(run.cuts, vec![-10.0]);
        assert!(run.assumption.is_some(), "branching runs report growth class");
        let errors = run.errors.unwrap();
        let tol = 3.0 * run.max_interface_std_error + 5e-3;
        assert!(
            errors.max_abs < tol,
            "max error {} vs tol {tol}",
            errors.max_abs
        );
    }

    #[test]
    fn elliptic_pdd_stitches_strips_within_noise() {
        let mut s = quick_settings(ProblemKind::Elliptic);
        s.subdomains = 2;
        s.time_levels = 5;
        s.mc_samples = 1_500;
        s.mc_dt = Some(5e-5);
        s.det_dx = Some(1.0 / 48.0);
        let run = run_pdd(&s).unwrap();
        assert!(run.stationary);
        assert_eq!(run.cuts, vec![0.5]);
        let errors = run.errors.unwrap();
        let tol = 3.0 * run.max_interface_std_error + 0.02;
        assert!(
            errors.max_abs < tol,
            "max error {} vs tol {tol}",
            errors.max_abs
        );
        // Global solution spans the full square with the shared column
        // stitched once.
        assert_eq!(run.solution.axes[0].len(), 2 * 24 + 1);
        assert_eq!(run.solution.axes[1].len(), 48 + 1);
    }

    #[test]
    fn violated_growth_assumptions_refuse_to_run() {
        let mut s = quick_settings(ProblemKind::Cva);
        s.horizon = Some(0.6);
        s.subdomains = 2;
        s.time_levels = 3;
        s.mc_samples = 10;
        let err = run_pdd(&s).unwrap_err();
        assert!(matches!(err, PddError::AssumptionViolated(_)), "{err:?}");
        // The monolithic solve of the same problem never launches trees
        // and is allowed to proceed.
        let mut s1 = s.clone();
        s1.subdomains = 1;
        s1.det_dx = Some(0.1);
        s1.det_dt = Some(2e-3);
        assert!(run_pdd(&s1).is_ok());
    }

    #[test]
    fn cva_pdd_agrees_with_monolithic_solve() {
        // No closed form here: decompose, then compare against the
        // monolithic deterministic solve at the final time.
        let mut s = quick_settings(ProblemKind::Cva);
        s.subdomains = 2;
        s.time_levels = 4;
        s.mc_samples = 3_000;
        s.det_dx = Some(0.02);
        s.det_dt = Some(1e-3);
        let dec = run_pdd(&s).unwrap();
        let mono = run_pdd(&s.clone().with_subdomains(1)).unwrap();
        // Strip meshes anchor their coordinates at the cuts, so interior
        // points may differ from the monolithic mesh by an ulp; shapes and
        // coordinates still have to line up to solver precision.
        assert_eq!(dec.solution.shape(), mono.solution.shape());
        for (a, b) in dec.solution.axes[0].iter().zip(&mono.solution.axes[0]) {
            assert!((a - b).abs() < 1e-9);
        }
        let xs = &dec.solution.axes[0];
        let cols = dec.solution.axes[1].len();
        let mut worst = 0.0f64;
        for i in 0..xs.len() {
            let d = dec.solution.values[i * cols + cols - 1]
                - mono.solution.values[i * cols + cols - 1];
            worst = worst.max(d.abs());
        }
        let tol = 3.0 * dec.max_interface_std_error + 1e-3;
        assert!(worst < tol, "final-time disagreement {worst} vs tol {tol}");
        assert!(dec.assumption.unwrap().admissible());
    }
}
