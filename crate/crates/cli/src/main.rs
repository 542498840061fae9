//! Command-line runner for kernel evaluation, fidelity sweeps, and threshold
//! extraction.
//!
//! Exit codes: 0 success, 2 configuration error, 3 engine failure,
//! 4 no crossing on the configured grid.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, preset, preset_names, EngineChoice, RunConfig};
use runner::{PointResult, RunError};

#[derive(Parser)]
#[command(name = "tst", version, about = "surface-code fidelity in a thermal bosonic bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Run configuration file (flat TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset shipped with the tool.
    #[arg(long)]
    preset: Option<String>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured engine (mc, binder, brute, auto).
    #[arg(long)]
    engine: Option<String>,
    /// Worker threads (falls back to TST_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved plan and write nothing.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the environment kernels at the configured distances.
    Kernels(CommonOpts),
    /// Fidelity at a single (size, gamma) point.
    Fidelity {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        gamma: f64,
    },
    /// Fidelity curves over the configured grid; writes curves.csv.
    Sweep(CommonOpts),
    /// Sweep plus crossing extraction; writes curves.csv and threshold.json.
    Threshold(CommonOpts),
    /// Cross-engine equivalence checks; nonzero exit on any failure.
    Validate {
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                RunError::Config(_) => 2u8,
                RunError::Engine(_) | RunError::Io(_) => 3u8,
                RunError::NoCrossing => 4u8,
            })
        }
    }
}

fn setup_threads(threads: Option<usize>) {
    let n = threads.or_else(|| {
        std::env::var("TST_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn load_config(common: &CommonOpts) -> Result<RunConfig, RunError> {
    let text = match (&common.config, &common.preset) {
        (Some(_), Some(_)) => {
            return Err(RunError::Config(config::ConfigError::Validation {
                field: "config".into(),
                msg: "give either --config or --preset, not both".into(),
            }))
        }
        (Some(path), None) => std::fs::read_to_string(path)?,
        (None, Some(name)) => preset(name)
            .ok_or_else(|| {
                RunError::Config(config::ConfigError::Validation {
                    field: "preset".into(),
                    msg: format!(
                        "unknown preset {name:?}; known: {}",
                        preset_names().join(", ")
                    ),
                })
            })?
            .to_string(),
        (None, None) => {
            return Err(RunError::Config(config::ConfigError::Validation {
                field: "config".into(),
                msg: "a --config file or --preset is required".into(),
            }))
        }
    };
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.schedule.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.display().to_string();
    }
    if let Some(engine) = &common.engine {
        cfg.engine = EngineChoice::parse(engine).ok_or_else(|| {
            RunError::Config(config::ConfigError::Validation {
                field: "engine".into(),
                msg: format!("unknown engine {engine:?}"),
            })
        })?;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Kernels(common) => {
            setup_threads(common.threads);
            let cfg = load_config(&common)?;
            if cfg.distances.is_empty() {
                return Err(RunError::Config(config::ConfigError::Validation {
                    field: "distances".into(),
                    msg: "the kernels command needs a `distances` list".into(),
                }));
            }
            let csv = runner::kernels_csv(&cfg, env!("CARGO_PKG_VERSION"))?;
            if common.dry_run {
                print!("{csv}");
            } else {
                let path = PathBuf::from(&cfg.out_dir).join("kernels.csv");
                runner::write_file(&path, &csv)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Fidelity {
            common,
            size,
            gamma,
        } => {
            setup_threads(common.threads);
            let mut cfg = load_config(&common)?;
            cfg.sizes = vec![size];
            cfg.gammas = vec![gamma];
            if common.dry_run {
                for line in runner::plan(&cfg)? {
                    println!("plan: {line}");
                }
                return Ok(());
            }
            let results = runner::run_points(&cfg)?;
            let json = serde_json::to_string_pretty(&results[0])
                .map_err(|e| RunError::Engine(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
        Command::Sweep(common) => {
            setup_threads(common.threads);
            let cfg = load_config(&common)?;
            if let Some(results) = run_or_plan(&cfg, common.dry_run)? {
                let csv = runner::curves_csv(&results, env!("CARGO_PKG_VERSION"));
                let path = PathBuf::from(&cfg.out_dir).join("curves.csv");
                runner::write_file(&path, &csv)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Threshold(common) => {
            setup_threads(common.threads);
            let cfg = load_config(&common)?;
            if let Some(results) = run_or_plan(&cfg, common.dry_run)? {
                let csv = runner::curves_csv(&results, env!("CARGO_PKG_VERSION"));
                let curves_path = PathBuf::from(&cfg.out_dir).join("curves.csv");
                runner::write_file(&curves_path, &csv)?;
                let report = runner::threshold_report(&cfg, &results)?;
                let json = serde_json::to_string_pretty(&report)
                    .map_err(|e| RunError::Engine(e.to_string()))?;
                let json_path = PathBuf::from(&cfg.out_dir).join("threshold.json");
                runner::write_file(&json_path, &format!("{json}\n"))?;
                println!(
                    "wrote {} and {} (gamma_c = {:.4} +- {:.4})",
                    curves_path.display(),
                    json_path.display(),
                    report.gamma_c,
                    report.gamma_c_err
                );
            }
            Ok(())
        }
        Command::Validate { threads } => {
            setup_threads(threads);
            validate()
        }
    }
}

fn run_or_plan(cfg: &RunConfig, dry_run: bool) -> Result<Option<Vec<PointResult>>, RunError> {
    if dry_run {
        for line in runner::plan(cfg)? {
            println!("plan: {line}");
        }
        return Ok(None);
    }
    Ok(Some(runner::run_points(cfg)?))
}

/// Oracle-equivalence suite: recursion vs enumeration on random complex
/// couplings, Monte Carlo vs enumeration at three couplings, and the
/// symmetry identities of the mass-field energy.
fn validate() -> Result<(), RunError> {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use tst_core::amplitude::{LogScaled, PATTERNS6};
    use tst_core::binder::binder_partition;
    use tst_core::brute::{brute_force, GibbsModel};
    use tst_core::energy::{massfield_energy, SpinModel};
    use tst_core::lattice::{build_lattice, MassFieldConfig};
    use tst_core::mc::{estimate_fidelity, McSchedule};

    let mut failures = 0usize;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("{}: {name}{}", if ok { "PASS" } else { "FAIL" }, detail);
        if !ok {
            failures += 1;
        }
    };

    {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x07ac1e);
        let mut worst = 0.0f64;
        for n in [2usize, 3] {
            let g = build_lattice(n, n).unwrap();
            for _ in 0..10 {
                let xi = rng.gen_range(0.05..1.3);
                let j = Complex64::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
                let exact = brute_force(&g, &GibbsModel::MassField { j }, xi).unwrap();
                for &p in &PATTERNS6 {
                    let c = binder_partition(&g, j, xi, p).unwrap();
                    worst = worst.max(LogScaled::rel_diff(c, exact.c(p).unwrap()));
                }
            }
        }
        report(
            "recursion-vs-enumeration",
            worst < 1e-10,
            format!(" (worst rel {worst:.2e})"),
        );
    }

    {
        let g = build_lattice(3, 3).unwrap();
        let mut worst = 0.0f64;
        for (i, xi) in [0.3, 0.8814, 1.5].into_iter().enumerate() {
            let exact = brute_force(
                &g,
                &GibbsModel::MassField {
                    j: Complex64::new(0.0, 0.0),
                },
                xi,
            )
            .unwrap();
            let sched = McSchedule::with_sweeps(200_000, 0xFACE + i as u64);
            let est = estimate_fidelity(&g, &SpinModel::SuperLocal, xi, &sched).unwrap();
            let dev = (est.b_corr_mean - exact.b_corr.re).abs() / est.b_corr_stderr.max(1e-6);
            worst = worst.max(dev);
        }
        report(
            "monte-carlo-vs-enumeration",
            worst < 3.0,
            format!(" (worst {worst:.2} sigma)"),
        );
    }

    {
        let g = build_lattice(3, 3).unwrap();
        let j = Complex64::new(0.2, -0.3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let m = MassFieldConfig::random(&g, &mut rng);
            let e = massfield_energy(&g, &m, j);
            let mut tr = m.clone();
            for v in tr.mu.iter_mut().chain(tr.nu.iter_mut()) {
                *v = -*v;
            }
            tr.alpha_t = -tr.alpha_t;
            tr.alpha_b = -tr.alpha_b;
            tr.beta_t = -tr.beta_t;
            tr.beta_b = -tr.beta_b;
            worst = worst.max((massfield_energy(&g, &tr, j) - e).norm());
            let swapped = MassFieldConfig {
                mu: m.nu.clone(),
                nu: m.mu.clone(),
                alpha_t: m.beta_t,
                alpha_b: m.beta_b,
                beta_t: m.alpha_t,
                beta_b: m.alpha_b,
            };
            worst = worst.max((massfield_energy(&g, &swapped, j) - e.conj()).norm());
        }
        report(
            "energy-symmetries",
            worst < 1e-12,
            format!(" (worst {worst:.2e})"),
        );
    }

    if failures == 0 {
        Ok(())
    } else {
        Err(RunError::Engine(format!(
            "{failures} validation check(s) failed"
        )))
    }
}
