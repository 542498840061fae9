//! Work-plan execution and deterministic artifact emission.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use tst_core::analysis::{self, CurvePoint, FidelityCurve};
use tst_core::binder::binder_amplitudes;
use tst_core::brute::{brute_force, GibbsModel};
use tst_core::energy::SpinModel;
use tst_core::env::ModelVariant;
use tst_core::lattice::build_lattice;
use tst_core::mc::{self, EngineKind};

use crate::config::{resolve_engine, ConfigError, EngineChoice, RunConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Engine(String),
    Io(std::io::Error),
    NoCrossing,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Engine(e) => write!(f, "engine failure: {e}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
            RunError::NoCrossing => write!(f, "no crossing found on the configured grid"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

pub fn spin_model(cfg: &RunConfig) -> SpinModel {
    match cfg.variant {
        ModelVariant::SuperLocal | ModelVariant::GeneralKernel => SpinModel::SuperLocal,
        ModelVariant::SuperImag => SpinModel::SuperImag { eta: cfg.eta },
        ModelVariant::OhmicLongrange => SpinModel::OhmicLongrange {
            f_bar_ratio: cfg.f_bar_ratio,
            phi_bar_ratio: cfg.phi_bar_ratio,
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub nx: usize,
    pub ny: usize,
    pub gamma: f64,
    pub fidelity: f64,
    pub stderr: f64,
    pub b_corr: f64,
    pub engine: EngineKind,
    pub seed: u64,
    pub valid: bool,
}

fn engine_kind(choice: EngineChoice) -> EngineKind {
    match choice {
        EngineChoice::Mc => EngineKind::Mc,
        EngineChoice::Binder => EngineKind::Binder,
        EngineChoice::Brute => EngineKind::Brute,
        EngineChoice::Auto => unreachable!("auto is resolved before execution"),
    }
}

/// One line of the resolved plan per (size, gamma) point.
pub fn plan(cfg: &RunConfig) -> Result<Vec<String>, RunError> {
    let mut lines = Vec::new();
    for &n in &cfg.sizes {
        let engine = resolve_engine(cfg, n)?;
        let states = match engine {
            EngineChoice::Brute => format!("2^{} states", 2 * n * n + 4),
            EngineChoice::Binder => format!("4^{n} table"),
            EngineChoice::Mc => format!(
                "{} proposals/sweep, {} sweeps",
                2 * n * n + 4,
                cfg.schedule.n_sweeps + cfg.schedule.n_burn
            ),
            EngineChoice::Auto => unreachable!(),
        };
        for (gi, &gamma) in cfg.gammas.iter().enumerate() {
            let seed = match engine {
                EngineChoice::Mc => mc::stream_seed(cfg.schedule.seed, n, n, gi),
                _ => cfg.schedule.seed,
            };
            lines.push(format!(
                "size {n}x{n}  gamma {gamma:.6}  engine {}  seed {seed}  [{states}]",
                engine_kind(engine)
            ));
        }
    }
    Ok(lines)
}

/// Execute every (size, gamma) point with the resolved engine. Exact engines
/// fan out over all points; Monte Carlo scans each size sequentially (warm
/// starts), sizes in parallel.
pub fn run_points(cfg: &RunConfig) -> Result<Vec<PointResult>, RunError> {
    let model = spin_model(cfg);
    let mut mc_sizes = Vec::new();
    let mut exact_work = Vec::new();
    for &n in &cfg.sizes {
        match resolve_engine(cfg, n)? {
            EngineChoice::Mc => mc_sizes.push(n),
            e => exact_work.push((n, e)),
        }
    }

    let exact_results: Result<Vec<PointResult>, RunError> = exact_work
        .par_iter()
        .flat_map(|&(n, engine)| {
            cfg.gammas
                .par_iter()
                .map(move |&gamma| exact_point(cfg, &model, n, engine, gamma))
        })
        .collect();
    let mut results = exact_results?;

    let mc_results: Result<Vec<Vec<PointResult>>, RunError> = mc_sizes
        .par_iter()
        .map(|&n| {
            let pts = mc::run_sweep(&[(n, n)], &model, &cfg.gammas, &cfg.schedule, cfg.warm_start)
                .map_err(|e| RunError::Engine(e.to_string()))?;
            Ok(pts
                .into_iter()
                .map(|p| PointResult {
                    nx: p.nx,
                    ny: p.ny,
                    gamma: p.gamma,
                    fidelity: p.estimate.fidelity,
                    stderr: p.estimate.stderr,
                    b_corr: p.estimate.b_corr_mean,
                    engine: EngineKind::Mc,
                    seed: p.seed,
                    valid: !p.estimate.non_ergodic_warning,
                })
                .collect())
        })
        .collect();
    for v in mc_results? {
        results.extend(v);
    }

    results.sort_by(|a, b| {
        (a.nx, a.ny)
            .cmp(&(b.nx, b.ny))
            .then(a.gamma.partial_cmp(&b.gamma).unwrap())
    });
    Ok(results)
}

fn exact_point(
    cfg: &RunConfig,
    model: &SpinModel,
    n: usize,
    engine: EngineChoice,
    gamma: f64,
) -> Result<PointResult, RunError> {
    let geom = build_lattice(n, n).map_err(|e| RunError::Engine(e.to_string()))?;
    let (fidelity, b_corr, valid) = match engine {
        EngineChoice::Brute => {
            let amp = brute_force(&geom, &GibbsModel::from_spin_model(model), gamma)
                .map_err(|e| RunError::Engine(e.to_string()))?;
            (amp.fidelity(), amp.b_corr.re, amp.is_valid())
        }
        EngineChoice::Binder => {
            if matches!(model, SpinModel::OhmicLongrange { .. }) {
                return Err(RunError::Engine(
                    "the recursion cannot run the long-range model".into(),
                ));
            }
            let amp = binder_amplitudes(&geom, model.j_complex(), gamma)
                .map_err(|e| RunError::Engine(e.to_string()))?;
            (amp.fidelity(), amp.b_corr.re, amp.is_valid())
        }
        _ => unreachable!(),
    };
    Ok(PointResult {
        nx: n,
        ny: n,
        gamma,
        fidelity,
        stderr: 0.0,
        b_corr,
        engine: engine_kind(engine),
        seed: cfg.schedule.seed,
        valid,
    })
}

/// Round-trip-safe decimal rendering (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn curves_csv(results: &[PointResult], version: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tst {version}");
    let _ = writeln!(out, "size_nx,size_ny,gamma,fidelity,stderr,engine,seed");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.nx,
            r.ny,
            fmt_f64(r.gamma),
            fmt_f64(r.fidelity),
            fmt_f64(r.stderr),
            r.engine,
            r.seed
        );
    }
    out
}

pub fn results_to_curves(results: &[PointResult]) -> Vec<FidelityCurve> {
    let mut curves: Vec<FidelityCurve> = Vec::new();
    for r in results {
        match curves
            .iter_mut()
            .find(|c| c.nx == r.nx && c.ny == r.ny)
        {
            Some(c) => c.points.push(CurvePoint {
                gamma: r.gamma,
                fidelity: r.fidelity,
                stderr: r.stderr,
            }),
            None => curves.push(FidelityCurve {
                nx: r.nx,
                ny: r.ny,
                points: vec![CurvePoint {
                    gamma: r.gamma,
                    fidelity: r.fidelity,
                    stderr: r.stderr,
                }],
            }),
        }
    }
    curves
}

#[derive(Debug, Serialize)]
pub struct ThresholdReport {
    pub gamma_c: f64,
    pub gamma_c_err: f64,
    pub lambda_c: Option<f64>,
    pub env: Option<tst_core::env::EnvironmentSpec>,
    pub crossings: Vec<tst_core::analysis::PairCrossing>,
    pub method_note: String,
    pub build: String,
}

/// Extract the threshold and back-convert to the physical coupling when an
/// environment block is available.
pub fn threshold_report(cfg: &RunConfig, results: &[PointResult]) -> Result<ThresholdReport, RunError> {
    let curves = results_to_curves(results);
    let mut res = analysis::find_crossing(&curves).map_err(|e| match e {
        analysis::AnalysisError::NoCrossing => RunError::NoCrossing,
        other => RunError::Engine(other.to_string()),
    })?;
    let mut env_echo = None;
    if let Some(env) = &cfg.env {
        let (f0, method) =
            analysis::onsite_kernel(env, 1e-10).map_err(|e| RunError::Engine(e.to_string()))?;
        let kernel = match cfg.variant {
            ModelVariant::OhmicLongrange => f0 / (1.0 + cfg.f_bar_ratio),
            _ => f0,
        };
        res.attach_lambda(kernel, &format!("{method:?} on-site kernel"));
        env_echo = Some(*env);
    }
    Ok(ThresholdReport {
        gamma_c: res.gamma_c,
        gamma_c_err: res.gamma_c_err,
        lambda_c: res.lambda_c,
        env: env_echo,
        crossings: res.pair_crossings,
        method_note: res.method_note,
        build: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Kernel dump rows for the configured distances.
pub fn kernels_csv(cfg: &RunConfig, version: &str) -> Result<String, RunError> {
    let env = cfg
        .env
        .as_ref()
        .ok_or_else(|| RunError::Engine("kernel dumps need an environment block".into()))?;
    let mut out = String::new();
    let _ = writeln!(out, "# tst {version}");
    let _ = writeln!(out, "distance,F_quad,F_closed,Phi_quad,Phi_closed,regime");
    let tol = 1e-8;
    for &d in &cfg.distances {
        let r = d * env.a;
        let fq = tst_core::env::f_quadrature(env, r, true, tol)
            .map(|k| fmt_f64(k.value))
            .unwrap_or_default();
        let fc = tst_core::env::f_closed_form(env, r, env.beta > 0.0)
            .map(|k| fmt_f64(k.value))
            .unwrap_or_default();
        let pq = tst_core::env::phi_quadrature(env, r, tol)
            .map(|k| fmt_f64(k.value))
            .unwrap_or_default();
        let pc = tst_core::env::phi_closed_form(env, r)
            .map(|k| fmt_f64(k.value))
            .unwrap_or_default();
        let tag = tst_core::env::classify_regime(env, r);
        let regime = format!(
            "{}-{}",
            match tag.thermal_flag {
                tst_core::env::ThermalFlag::Thermal => "thermal",
                tst_core::env::ThermalFlag::Vacuum => "vacuum",
            },
            match tag.causal_flag {
                tst_core::env::CausalFlag::Timelike => "timelike",
                tst_core::env::CausalFlag::Spacelike => "spacelike",
            }
        );
        let _ = writeln!(out, "{},{fq},{fc},{pq},{pc},{regime}", fmt_f64(r));
    }
    Ok(out)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}
