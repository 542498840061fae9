//! Flat key-value run configuration. Unknown keys are rejected; every default
//! is echoed back into the resolved config so a run is fully described by it.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use tst_core::env::{EnvironmentSpec, ModelVariant, ReduceOptions};
use tst_core::mc::McSchedule;

#[derive(Debug)]
pub enum ConfigError {
    /// Syntax error with 1-based position.
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    /// A well-formed document that fails the schema.
    Validation { field: String, msg: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, col, msg } => {
                write!(f, "config parse error at line {line}, column {col}: {msg}")
            }
            ConfigError::Validation { field, msg } => {
                write!(f, "invalid config field `{field}`: {msg}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Mc,
    Binder,
    Brute,
    Auto,
}

impl EngineChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mc" => Some(EngineChoice::Mc),
            "binder" => Some(EngineChoice::Binder),
            "brute" => Some(EngineChoice::Brute),
            "auto" => Some(EngineChoice::Auto),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub variant: ModelVariant,
    pub env: Option<EnvironmentSpec>,
    /// Square lattice sizes (plaquette columns = rows).
    pub sizes: Vec<usize>,
    /// Dimensionless coupling grid (ascending).
    pub gammas: Vec<f64>,
    /// Imaginary nearest-neighbor ratio for the super_imag variant.
    pub eta: f64,
    pub f_bar_ratio: f64,
    pub phi_bar_ratio: f64,
    pub engine: EngineChoice,
    pub schedule: McSchedule,
    pub warm_start: bool,
    pub out_dir: String,
    /// Distances (in units of the qubit spacing) for kernel dumps.
    pub distances: Vec<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "variant",
    "sizes",
    "gammas",
    "gamma_min",
    "gamma_max",
    "gamma_step",
    "lambdas",
    "eta",
    "f_bar_ratio",
    "phi_bar_ratio",
    "engine",
    "seed",
    "n_sweeps",
    "n_burn",
    "n_bins",
    "measure_stride",
    "warm_start",
    "out_dir",
    "distances",
    "s",
    "beta",
    "delta",
    "v",
    "lambda_uv",
    "omega0",
    "a",
];

fn position(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, ch) in text.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn invalid(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        msg: msg.into(),
    }
}

fn get_f64(table: &toml::Table, key: &str) -> Result<Option<f64>, ConfigError> {
    match table.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_float()
            .or_else(|| v.as_integer().map(|i| i as f64))
            .map(Some)
            .ok_or_else(|| invalid(key, "expected a number")),
    }
}

fn get_u64(table: &toml::Table, key: &str) -> Result<Option<u64>, ConfigError> {
    match table.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_integer()
            .filter(|&i| i >= 0)
            .map(|i| Some(i as u64))
            .ok_or_else(|| invalid(key, "expected a nonnegative integer")),
    }
}

fn get_f64_list(table: &toml::Table, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    match table.get(key) {
        None => Ok(None),
        Some(v) => {
            let arr = v.as_array().ok_or_else(|| invalid(key, "expected a list"))?;
            let mut out = Vec::with_capacity(arr.len());
            for item in arr {
                out.push(
                    item.as_float()
                        .or_else(|| item.as_integer().map(|i| i as f64))
                        .ok_or_else(|| invalid(key, "expected numbers"))?,
                );
            }
            Ok(Some(out))
        }
    }
}

/// Parse and validate a flat TOML document into a fully resolved [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, col) = e
            .span()
            .map(|s| position(text, s.start))
            .unwrap_or((1, 1));
        ConfigError::Parse {
            line,
            col,
            msg: e.message().to_string(),
        }
    })?;

    let known: BTreeSet<&str> = KNOWN_KEYS.iter().copied().collect();
    for key in table.keys() {
        if !known.contains(key.as_str()) {
            return Err(invalid(key, "unknown key"));
        }
    }

    let variant = match table.get("variant").and_then(|v| v.as_str()) {
        Some("super_local") => ModelVariant::SuperLocal,
        Some("super_imag") => ModelVariant::SuperImag,
        Some("ohmic_longrange") => ModelVariant::OhmicLongrange,
        Some(other) => return Err(invalid("variant", format!("unknown variant {other:?}"))),
        None => return Err(invalid("variant", "required")),
    };

    let env = {
        let fields = ["s", "beta", "delta", "v", "lambda_uv", "omega0", "a"];
        let present: Vec<&str> = fields
            .iter()
            .copied()
            .filter(|k| table.contains_key(*k))
            .collect();
        if present.is_empty() {
            None
        } else if present.len() < fields.len() {
            return Err(invalid(
                "s",
                format!(
                    "environment block is incomplete: have {present:?}, need all of {fields:?}"
                ),
            ));
        } else {
            let g = |k| get_f64(&table, k).map(Option::unwrap);
            let env = EnvironmentSpec::new(
                g("s")?,
                g("beta")?,
                g("delta")?,
                g("v")?,
                g("lambda_uv")?,
                g("omega0")?,
                g("a")?,
            )
            .map_err(|e| invalid("s", e.to_string()))?;
            Some(env)
        }
    };

    let sizes: Vec<usize> = match table.get("sizes") {
        Some(v) => {
            let arr = v
                .as_array()
                .ok_or_else(|| invalid("sizes", "expected a list"))?;
            let mut out = Vec::new();
            for item in arr {
                let n = item
                    .as_integer()
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| invalid("sizes", "expected positive integers"))?;
                out.push(n as usize);
            }
            out
        }
        None => vec![2, 3],
    };

    let f_bar_ratio = get_f64(&table, "f_bar_ratio")?.unwrap_or(0.72);
    let phi_bar_ratio = get_f64(&table, "phi_bar_ratio")?.unwrap_or(0.0);
    let eta_explicit = get_f64(&table, "eta")?;

    // coupling grid: explicit gammas, a gamma range, or a lambda list mapped
    // through the environment kernels
    let explicit = get_f64_list(&table, "gammas")?;
    let lambdas = get_f64_list(&table, "lambdas")?;
    let gamma_min = get_f64(&table, "gamma_min")?;
    let gamma_max = get_f64(&table, "gamma_max")?;
    let gamma_step = get_f64(&table, "gamma_step")?;
    let range_given = gamma_min.is_some() || gamma_max.is_some() || gamma_step.is_some();
    let mut sources = 0;
    sources += explicit.is_some() as u32;
    sources += lambdas.is_some() as u32;
    sources += range_given as u32;
    if sources > 1 {
        return Err(invalid(
            "gammas",
            "give exactly one of `gammas`, `gamma_min/max/step`, or `lambdas`",
        ));
    }
    let gammas: Vec<f64> = if let Some(g) = explicit {
        g
    } else if let Some(ls) = lambdas {
        let env = env.as_ref().ok_or_else(|| {
            invalid("lambdas", "a full environment block is needed to map lambda")
        })?;
        let opts = ReduceOptions {
            f_bar_ratio,
            phi_bar_ratio,
            ..ReduceOptions::default()
        };
        let mut out = Vec::with_capacity(ls.len());
        for lam in ls {
            let m = tst_core::env::reduce_to_model_with(env, lam, variant, &opts)
                .map_err(|e| invalid("lambdas", e.to_string()))?;
            out.push(match variant {
                ModelVariant::OhmicLongrange => lam * lam * m.delta_f,
                _ => m.xi,
            });
        }
        out
    } else if range_given {
        let lo = gamma_min.ok_or_else(|| invalid("gamma_min", "required with a range"))?;
        let hi = gamma_max.ok_or_else(|| invalid("gamma_max", "required with a range"))?;
        let step = gamma_step.ok_or_else(|| invalid("gamma_step", "required with a range"))?;
        if !(step > 0.0 && hi >= lo) {
            return Err(invalid("gamma_step", "need gamma_max >= gamma_min, step > 0"));
        }
        let n = ((hi - lo) / step).round() as usize + 1;
        (0..n).map(|i| lo + step * i as f64).collect()
    } else {
        return Err(invalid(
            "gammas",
            "no coupling grid: give `gammas`, a gamma range, or `lambdas`",
        ));
    };
    if gammas.is_empty() {
        return Err(invalid("gammas", "empty grid"));
    }
    if gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("gammas", "grid must be strictly ascending"));
    }

    // eta: explicit, or derived from the environment for the imaginary variant
    let eta = match (variant, eta_explicit) {
        (ModelVariant::SuperImag, Some(e)) => e,
        (ModelVariant::SuperImag, None) => {
            let env = env
                .as_ref()
                .ok_or_else(|| invalid("eta", "needed (or derivable from an environment block)"))?;
            tst_core::env::reduce_to_model(env, 1.0, ModelVariant::SuperImag)
                .map_err(|e| invalid("eta", e.to_string()))?
                .eta
        }
        (_, Some(_)) => {
            return Err(invalid("eta", "only meaningful for variant = super_imag"));
        }
        (_, None) => 0.0,
    };

    let engine = match table.get("engine") {
        None => EngineChoice::Auto,
        Some(v) => {
            let s = v
                .as_str()
                .ok_or_else(|| invalid("engine", "expected a string"))?;
            EngineChoice::parse(s)
                .ok_or_else(|| invalid("engine", format!("unknown engine {s:?}")))?
        }
    };

    let n_sweeps = get_u64(&table, "n_sweeps")?.unwrap_or(1_000_000);
    let seed = get_u64(&table, "seed")?.unwrap_or(1);
    let mut schedule = McSchedule::with_sweeps(n_sweeps, seed);
    if let Some(b) = get_u64(&table, "n_burn")? {
        schedule.n_burn = b;
    }
    if let Some(b) = get_u64(&table, "n_bins")? {
        schedule.n_bins = b as usize;
    }
    if let Some(m) = get_u64(&table, "measure_stride")? {
        schedule.measure_stride = m;
    }
    schedule
        .validate()
        .map_err(|e| invalid("n_sweeps", e.to_string()))?;

    let warm_start = match table.get("warm_start") {
        None => true,
        Some(v) => v
            .as_bool()
            .ok_or_else(|| invalid("warm_start", "expected a boolean"))?,
    };

    let out_dir = table
        .get("out_dir")
        .map(|v| {
            v.as_str()
                .map(String::from)
                .ok_or_else(|| invalid("out_dir", "expected a string"))
        })
        .transpose()?
        .unwrap_or_else(|| "out".to_string());

    let distances = get_f64_list(&table, "distances")?.unwrap_or_default();

    let cfg = RunConfig {
        variant,
        env,
        sizes,
        gammas,
        eta,
        f_bar_ratio,
        phi_bar_ratio,
        engine,
        schedule,
        warm_start,
        out_dir,
        distances,
    };
    validate_engine_rules(&cfg)?;
    Ok(cfg)
}

/// Hard rules that hold regardless of the engine auto-resolution.
fn validate_engine_rules(cfg: &RunConfig) -> Result<(), ConfigError> {
    let complex = (cfg.variant == ModelVariant::SuperImag && cfg.eta != 0.0)
        || (cfg.variant == ModelVariant::OhmicLongrange && cfg.phi_bar_ratio != 0.0);
    if cfg.engine == EngineChoice::Mc && complex {
        return Err(invalid(
            "engine",
            "Monte Carlo cannot sample complex weights; use binder or brute",
        ));
    }
    if cfg.engine == EngineChoice::Binder && cfg.variant == ModelVariant::OhmicLongrange {
        return Err(invalid(
            "engine",
            "the recursion handles nearest-neighbor couplings only; the long-range model needs mc or brute",
        ));
    }
    Ok(())
}

/// Resolved engine for one lattice size.
pub fn resolve_engine(cfg: &RunConfig, n: usize) -> Result<EngineChoice, ConfigError> {
    let vars = 2 * n * n + 4;
    let complex = (cfg.variant == ModelVariant::SuperImag && cfg.eta != 0.0)
        || (cfg.variant == ModelVariant::OhmicLongrange && cfg.phi_bar_ratio != 0.0);
    let resolved = match cfg.engine {
        EngineChoice::Auto => {
            if vars <= 22 {
                EngineChoice::Brute
            } else if complex {
                if cfg.variant == ModelVariant::OhmicLongrange {
                    return Err(invalid(
                        "engine",
                        format!("no engine can run the complex long-range model at size {n}"),
                    ));
                }
                if n > tst_core::binder::MAX_WIDTH {
                    return Err(invalid(
                        "engine",
                        format!("size {n} exceeds the recursion width budget"),
                    ));
                }
                EngineChoice::Binder
            } else {
                EngineChoice::Mc
            }
        }
        e => e,
    };
    match resolved {
        EngineChoice::Brute if vars > tst_core::brute::MAX_VARIABLES => Err(invalid(
            "engine",
            format!("size {n} exceeds the enumeration budget"),
        )),
        EngineChoice::Binder if n > tst_core::binder::MAX_WIDTH => Err(invalid(
            "engine",
            format!("size {n} exceeds the recursion width budget"),
        )),
        e => Ok(e),
    }
}

/// Named presets shipped as data files in the repository.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "superohmic-fig2" => Some(include_str!("../presets/superohmic-fig2.toml")),
        "superohmic-eta-fig3" => Some(include_str!("../presets/superohmic-eta-fig3.toml")),
        "ohmic-fig4" => Some(include_str!("../presets/ohmic-fig4.toml")),
        _ => None,
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &["superohmic-fig2", "superohmic-eta-fig3", "ohmic-fig4"]
}
