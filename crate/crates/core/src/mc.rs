//! Metropolis sampling of the real-coupling models in mass-field variables.
//!
//! The walk proposes one flip per mass-field spin (both layers) and one per
//! boundary field each sweep, accepting with probability
//! `min(1, e^{-gamma dE})`. Energy deltas are computed from the expanded spin
//! layers, which are kept in sync incrementally together with the layer
//! magnetizations, so a proposal costs `O(degree)` for every model including
//! the long-range one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::energy::{MagnetizationCache, SpinModel};
use crate::lattice::{mass_to_spin, LatticeGeometry, MassFieldConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("the model carries imaginary couplings; Metropolis weights would not be positive")]
    ComplexCouplingRejected,
    #[error("bad schedule: {0}")]
    Schedule(String),
}

/// Sweep budget and reproducibility contract for one chain. The generator is
/// ChaCha8 seeded per stream; `run_sweep` derives one stream per
/// (size, coupling-index) as `seed ^ mix(nx, ny, index)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McSchedule {
    /// Measurement sweeps (after burn-in).
    pub n_sweeps: u64,
    /// Discarded equilibration sweeps.
    pub n_burn: u64,
    pub n_bins: usize,
    pub seed: u64,
    /// Sweeps between measurements.
    pub measure_stride: u64,
}

impl McSchedule {
    /// Burn-in defaults to 20% of the measurement budget; 32 bins, stride 1.
    pub fn with_sweeps(n_sweeps: u64, seed: u64) -> Self {
        McSchedule {
            n_sweeps,
            n_burn: n_sweeps / 5,
            n_bins: 32,
            seed,
            measure_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<(), McError> {
        if self.n_bins < 10 {
            return Err(McError::Schedule("n_bins must be at least 10".into()));
        }
        if self.measure_stride == 0 {
            return Err(McError::Schedule("measure_stride must be positive".into()));
        }
        if self.n_sweeps < self.n_bins as u64 * self.measure_stride {
            return Err(McError::Schedule(
                "n_sweeps must cover n_bins * measure_stride measurements".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Mc,
    Binder,
    Brute,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EngineKind::Mc => write!(f, "mc"),
            EngineKind::Binder => write!(f, "binder"),
            EngineKind::Brute => write!(f, "brute"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    pub stderr: f64,
    pub b_corr_mean: f64,
    pub b_corr_stderr: f64,
    pub acceptance_rate: f64,
    pub method: EngineKind,
    /// Set when some bin mean sits more than six binned sigmas from the
    /// global mean.
    pub non_ergodic_warning: bool,
    /// Mean absolute layer-product magnetization, an ordering diagnostic.
    pub order_param: f64,
}

/// Walker state: the mass fields plus the expanded layers and running sums
/// the energy deltas need.
#[derive(Debug, Clone)]
pub struct McState {
    pub cfg: MassFieldConfig,
    sigma: Vec<i8>,
    tau: Vec<i8>,
    onsite_sum: i64,
    cache: MagnetizationCache,
    rho_sum: i64,
}

impl McState {
    pub fn new(geom: &LatticeGeometry, cfg: MassFieldConfig) -> Self {
        let spins = mass_to_spin(geom, &cfg);
        let onsite_sum = spins
            .sigma
            .iter()
            .zip(&spins.tau)
            .map(|(&s, &t)| (s * t) as i64)
            .sum();
        let cache = MagnetizationCache::from_config(&spins);
        let rho_sum = cfg
            .mu
            .iter()
            .zip(&cfg.nu)
            .map(|(&a, &b)| (a * b) as i64)
            .sum();
        McState {
            cfg,
            sigma: spins.sigma,
            tau: spins.tau,
            onsite_sum,
            cache,
            rho_sum,
        }
    }

    pub fn cache(&self) -> MagnetizationCache {
        self.cache
    }

    /// Full recount of the incremental sums; used by the drift checks.
    pub fn recount(&self, geom: &LatticeGeometry) -> (i64, MagnetizationCache) {
        let spins = mass_to_spin(geom, &self.cfg);
        let onsite = spins
            .sigma
            .iter()
            .zip(&spins.tau)
            .map(|(&s, &t)| (s * t) as i64)
            .sum();
        (onsite, MagnetizationCache::from_config(&spins))
    }

    /// Unit-coupling energy of the current state under a real model.
    pub fn energy(&self, model: &SpinModel) -> f64 {
        let d = (self.cache.m_sigma - self.cache.m_tau) as f64;
        match *model {
            SpinModel::SuperLocal => -0.5 * self.onsite_sum as f64,
            SpinModel::OhmicLongrange { f_bar_ratio, .. } => {
                -0.5 * self.onsite_sum as f64 + 0.25 * f_bar_ratio * d * d
            }
            SpinModel::SuperImag { .. } => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Proposal {
    Mu(usize),
    Nu(usize),
    Field(usize), // 0 alpha_t, 1 alpha_b, 2 beta_t, 3 beta_b
}

fn check_real(model: &SpinModel) -> Result<f64, McError> {
    match *model {
        SpinModel::SuperLocal => Ok(0.0),
        SpinModel::OhmicLongrange {
            f_bar_ratio,
            phi_bar_ratio,
        } => {
            if phi_bar_ratio != 0.0 {
                Err(McError::ComplexCouplingRejected)
            } else {
                Ok(f_bar_ratio)
            }
        }
        SpinModel::SuperImag { eta } => {
            if eta != 0.0 {
                Err(McError::ComplexCouplingRejected)
            } else {
                Ok(0.0)
            }
        }
    }
}

fn propose(
    geom: &LatticeGeometry,
    state: &mut McState,
    q_ratio: f64,
    gamma: f64,
    rng: &mut ChaCha8Rng,
    prop: Proposal,
) -> bool {
    // gather the qubits whose sigma or tau flips, and which layer
    let (qubits, is_sigma): (&[usize], bool) = match prop {
        Proposal::Mu(p) => (&geom.plaq_incident_qubits[p], true),
        Proposal::Nu(p) => (&geom.plaq_incident_qubits[p], false),
        Proposal::Field(0) => (&geom.top_qubits, true),
        Proposal::Field(1) => (&geom.bottom_qubits, true),
        Proposal::Field(2) => (&geom.top_qubits, false),
        Proposal::Field(_) => (&geom.bottom_qubits, false),
    };
    let mut d_onsite = 0i64;
    let mut d_mag = 0i64;
    for &q in qubits {
        d_onsite += -2 * (state.sigma[q] * state.tau[q]) as i64;
        d_mag += -2 * (if is_sigma { state.sigma[q] } else { state.tau[q] }) as i64;
    }
    let d_old = (state.cache.m_sigma - state.cache.m_tau) as f64;
    let dd = if is_sigma { d_mag } else { -d_mag } as f64;
    let de = -0.5 * d_onsite as f64 + 0.25 * q_ratio * ((d_old + dd) * (d_old + dd) - d_old * d_old);

    let u: f64 = rng.gen();
    if u >= (-gamma * de).exp().min(1.0) {
        return false;
    }
    // apply
    for &q in qubits {
        if is_sigma {
            state.sigma[q] = -state.sigma[q];
        } else {
            state.tau[q] = -state.tau[q];
        }
    }
    state.onsite_sum += d_onsite;
    if is_sigma {
        state.cache.m_sigma += d_mag;
    } else {
        state.cache.m_tau += d_mag;
    }
    match prop {
        Proposal::Mu(p) => {
            state.rho_sum += -2 * (state.cfg.mu[p] * state.cfg.nu[p]) as i64;
            state.cfg.mu[p] = -state.cfg.mu[p];
        }
        Proposal::Nu(p) => {
            state.rho_sum += -2 * (state.cfg.mu[p] * state.cfg.nu[p]) as i64;
            state.cfg.nu[p] = -state.cfg.nu[p];
        }
        Proposal::Field(0) => state.cfg.alpha_t = -state.cfg.alpha_t,
        Proposal::Field(1) => state.cfg.alpha_b = -state.cfg.alpha_b,
        Proposal::Field(2) => state.cfg.beta_t = -state.cfg.beta_t,
        Proposal::Field(_) => state.cfg.beta_b = -state.cfg.beta_b,
    }
    true
}

/// One sweep: one proposal per mass-field spin in each layer plus one per
/// boundary field, targets drawn uniformly at random (a systematic scan
/// would freeze the boundary product at zero coupling, where every proposal
/// is accepted and each field flips exactly once per sweep). Returns the
/// number of accepted flips.
pub fn metropolis_sweep(
    geom: &LatticeGeometry,
    state: &mut McState,
    model: &SpinModel,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<usize, McError> {
    let q_ratio = check_real(model)?;
    let p = geom.plaquette_count();
    let total = 2 * p + 4;
    let mut accepted = 0;
    for _ in 0..total {
        let k = rng.gen_range(0..total);
        let prop = if k < p {
            Proposal::Mu(k)
        } else if k < 2 * p {
            Proposal::Nu(k - p)
        } else {
            Proposal::Field(k - 2 * p)
        };
        accepted += propose(geom, state, q_ratio, gamma, rng, prop) as usize;
    }
    Ok(accepted)
}

/// Binary append-only measurement trace: `(sweep u64, O f64, energy f64)`,
/// little endian.
pub struct TraceWriter<W: std::io::Write> {
    out: W,
}

impl<W: std::io::Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter { out }
    }

    pub fn record(&mut self, sweep: u64, o: f64, energy: f64) -> std::io::Result<()> {
        self.out.write_all(&sweep.to_le_bytes())?;
        self.out.write_all(&o.to_le_bytes())?;
        self.out.write_all(&energy.to_le_bytes())?;
        Ok(())
    }
}

/// Run one chain and estimate the fidelity with binned errors.
pub fn estimate_fidelity(
    geom: &LatticeGeometry,
    model: &SpinModel,
    gamma: f64,
    schedule: &McSchedule,
) -> Result<FidelityEstimate, McError> {
    let mut state = McState::new(geom, MassFieldConfig::uniform(geom));
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    estimate_fidelity_from(geom, model, gamma, schedule, &mut state, &mut rng, None::<&mut TraceWriter<std::io::Sink>>)
}

/// Same, continuing from a caller-supplied state and stream (warm starts),
/// optionally tracing every measurement.
pub fn estimate_fidelity_from<W: std::io::Write>(
    geom: &LatticeGeometry,
    model: &SpinModel,
    gamma: f64,
    schedule: &McSchedule,
    state: &mut McState,
    rng: &mut ChaCha8Rng,
    mut trace: Option<&mut TraceWriter<W>>,
) -> Result<FidelityEstimate, McError> {
    schedule.validate()?;
    check_real(model)?;
    if !(gamma >= 0.0) {
        return Err(McError::Schedule("gamma must be >= 0".into()));
    }
    for _ in 0..schedule.n_burn {
        metropolis_sweep(geom, state, model, gamma, rng)?;
    }
    let mut accepted = 0u64;
    let mut proposals = 0u64;
    let per_sweep = (2 * geom.plaquette_count() + 4) as u64;
    let mut series: Vec<f64> = Vec::new();
    let mut order_acc = 0.0f64;
    for sweep in 0..schedule.n_sweeps {
        accepted += metropolis_sweep(geom, state, model, gamma, rng)? as u64;
        proposals += per_sweep;
        if (sweep + 1) % schedule.measure_stride == 0 {
            let o = state.cfg.boundary_product() as f64;
            series.push(o);
            order_acc += state.rho_sum.unsigned_abs() as f64 / geom.plaquette_count() as f64;
            if let Some(t) = trace.as_deref_mut() {
                let _ = t.record(sweep + 1, o, state.energy(model));
            }
        }
    }

    // binning
    let n_bins = schedule.n_bins;
    let bin_len = series.len() / n_bins;
    let used = bin_len * n_bins;
    let mean: f64 = series[..used].iter().sum::<f64>() / used as f64;
    let mut bin_means = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let slice = &series[b * bin_len..(b + 1) * bin_len];
        bin_means.push(slice.iter().sum::<f64>() / bin_len as f64);
    }
    let var_bins: f64 = bin_means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>()
        / (n_bins as f64 - 1.0);
    let b_stderr = (var_bins / n_bins as f64).sqrt();
    let bin_sigma = var_bins.sqrt();
    let non_ergodic = bin_sigma > 0.0
        && bin_means
            .iter()
            .any(|m| (m - mean).abs() > 6.0 * bin_sigma);

    let fidelity = 1.0 / (1.0 + mean);
    let f_stderr = b_stderr / ((1.0 + mean) * (1.0 + mean));
    Ok(FidelityEstimate {
        fidelity,
        stderr: f_stderr,
        b_corr_mean: mean,
        b_corr_stderr: b_stderr,
        acceptance_rate: accepted as f64 / proposals as f64,
        method: EngineKind::Mc,
        non_ergodic_warning: non_ergodic,
        order_param: order_acc / series.len() as f64,
    })
}

/// splitmix64 finalizer; the per-point stream identity of `run_sweep`.
pub fn stream_seed(base: u64, nx: usize, ny: usize, gamma_index: usize) -> u64 {
    let mut z = (nx as u64)
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add((ny as u64).wrapping_mul(0xBF58476D1CE4E5B9))
        .wrapping_add(gamma_index as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    base ^ (z ^ (z >> 31))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub nx: usize,
    pub ny: usize,
    pub gamma: f64,
    pub seed: u64,
    pub estimate: FidelityEstimate,
}

/// One estimate per (size, gamma), scanning gammas in ascending order with a
/// warm start from the previous point of the same size.
pub fn run_sweep(
    sizes: &[(usize, usize)],
    model: &SpinModel,
    gamma_grid: &[f64],
    schedule: &McSchedule,
    warm_start: bool,
) -> Result<Vec<SweepPoint>, McError> {
    if gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(McError::Schedule("gamma grid must be ascending".into()));
    }
    let mut out = Vec::with_capacity(sizes.len() * gamma_grid.len());
    for &(nx, ny) in sizes {
        let geom = crate::lattice::build_lattice(nx, ny)
            .map_err(|e| McError::Schedule(e.to_string()))?;
        let mut state = McState::new(&geom, MassFieldConfig::uniform(&geom));
        for (gi, &gamma) in gamma_grid.iter().enumerate() {
            let seed = stream_seed(schedule.seed, nx, ny, gi);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if !warm_start {
                state = McState::new(&geom, MassFieldConfig::uniform(&geom));
            }
            let point = McSchedule {
                seed,
                ..*schedule
            };
            let est = estimate_fidelity_from(
                &geom,
                model,
                gamma,
                &point,
                &mut state,
                &mut rng,
                None::<&mut TraceWriter<std::io::Sink>>,
            )?;
            out.push(SweepPoint {
                nx,
                ny,
                gamma,
                seed,
                estimate: est,
            });
        }
    }
    Ok(out)
}
