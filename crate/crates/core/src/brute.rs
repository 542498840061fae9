//! Exhaustive enumeration over mass-field and boundary-field states: the
//! oracle every other engine is checked against.
//!
//! The state loop runs over the `2^(2 P)` mass-field configurations once and
//! reuses pattern-independent statistics for all sixteen boundary patterns,
//! so the cost is `O(2^(2P) * terms)` with no per-pattern re-enumeration.

use num_complex::Complex64;
use thiserror::Error;

use crate::amplitude::{all_patterns, assemble, AmplitudePair, LogScaled};
use crate::energy::SpinModel;
use crate::lattice::{LatticeGeometry, QubitKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BruteError {
    #[error("enumeration over {0} binary variables exceeds the 2^26 budget")]
    TooLarge(usize),
}

/// Weight model for the enumeration. Nearest-neighbor models run on the
/// mass-field energy (pair + diagonal + three-body + boundary rows); the
/// long-range model runs on the expanded spin configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GibbsModel {
    MassField { j: Complex64 },
    LongRange { f_bar_ratio: f64, phi_bar_ratio: f64 },
}

impl GibbsModel {
    pub fn from_spin_model(model: &SpinModel) -> GibbsModel {
        match *model {
            SpinModel::SuperLocal | SpinModel::SuperImag { .. } => GibbsModel::MassField {
                j: model.j_complex(),
            },
            SpinModel::OhmicLongrange {
                f_bar_ratio,
                phi_bar_ratio,
            } => GibbsModel::LongRange {
                f_bar_ratio,
                phi_bar_ratio,
            },
        }
    }
}

pub const MAX_VARIABLES: usize = 26;

/// Pattern-independent per-state statistics.
struct StateStats {
    /// Bulk part of the mass-field energy (everything without boundary fields).
    bulk: Complex64,
    /// Top/bottom sums: on-site `sum mu nu`, weighted `sum w mu`, `sum w nu`,
    /// and the two row three-body sums.
    t: [f64; 5],
    b: [f64; 5],
    /// Long-range pieces: bulk `sum sigma tau`, bulk magnetizations, and the
    /// boundary-row magnetization sums.
    pair_sum: i64,
    ms_bulk: i64,
    mt_bulk: i64,
    t_mu: i64,
    t_nu: i64,
    b_mu: i64,
    b_nu: i64,
}

struct Enumerator<'g> {
    geom: &'g LatticeGeometry,
    mu: Vec<i8>,
    nu: Vec<i8>,
}

impl<'g> Enumerator<'g> {
    fn new(geom: &'g LatticeGeometry) -> Self {
        let p = geom.plaquette_count();
        Enumerator {
            geom,
            mu: vec![1; p],
            nu: vec![1; p],
        }
    }

    fn decode(&mut self, bits: u64) {
        let p = self.geom.plaquette_count();
        for i in 0..p {
            self.mu[i] = if (bits >> i) & 1 == 1 { 1 } else { -1 };
            self.nu[i] = if (bits >> (p + i)) & 1 == 1 { 1 } else { -1 };
        }
    }

    fn stats(&self, j: Complex64) -> StateStats {
        let g = self.geom;
        let (mu, nu) = (&self.mu, &self.nu);
        let jc = j.conj();

        let mut pair_sum = 0i64;
        for &(a, b) in &g.plaq_pairs {
            pair_sum += (mu[a] * mu[b] * nu[a] * nu[b]) as i64;
        }
        let mut bulk = Complex64::new(
            0.5 * (g.qubit_count() as f64 - pair_sum as f64),
            0.0,
        );
        for &(a, b) in &g.diag_pairs {
            bulk += jc * (mu[a] * mu[b]) as f64 + j * (nu[a] * nu[b]) as f64;
        }
        let mut lsum = 0i64;
        for &(ma, n, mp) in &g.l_triples {
            lsum += (mu[ma] * mu[n] * nu[n] * nu[mp]) as i64;
        }
        bulk.re += -j.re * lsum as f64;

        let row = |plaqs: &[usize], pairs: &[(usize, usize)]| -> [f64; 5] {
            let mut t = [0.0f64; 5];
            for (i, &p) in plaqs.iter().enumerate() {
                let w = g.boundary_weight[i];
                t[0] += (mu[p] * nu[p]) as f64;
                t[1] += w * mu[p] as f64;
                t[2] += w * nu[p] as f64;
            }
            for &(a, b) in pairs {
                t[3] += (nu[a] * nu[b] * mu[b]) as f64;
                t[4] += (mu[a] * mu[b] * nu[b]) as f64;
            }
            t
        };
        let t = row(&g.top_plaquettes, &g.row_pairs_top);
        let b = row(&g.bottom_plaquettes, &g.row_pairs_bottom);

        let mut ms_bulk = 0i64;
        let mut mt_bulk = 0i64;
        for q in &g.qubits {
            if let QubitKind::Bulk { m, n } = q.kind {
                ms_bulk += (mu[m] * mu[n]) as i64;
                mt_bulk += (nu[m] * nu[n]) as i64;
            }
        }
        let sum_over = |plaqs: &[usize], layer: &[i8]| -> i64 {
            plaqs.iter().map(|&p| layer[p] as i64).sum()
        };
        StateStats {
            bulk,
            t,
            b,
            pair_sum,
            ms_bulk,
            mt_bulk,
            t_mu: sum_over(&g.top_plaquettes, mu),
            t_nu: sum_over(&g.top_plaquettes, nu),
            b_mu: sum_over(&g.bottom_plaquettes, mu),
            b_nu: sum_over(&g.bottom_plaquettes, nu),
        }
    }
}

/// Energy of one boundary pattern given the per-state statistics.
fn pattern_energy(model: &GibbsModel, s: &StateStats, pat: (i8, i8, i8, i8)) -> Complex64 {
    let (at, ab, bt, bb) = (pat.0 as f64, pat.1 as f64, pat.2 as f64, pat.3 as f64);
    match *model {
        GibbsModel::MassField { j } => {
            let jc = j.conj();
            let mut e = s.bulk;
            e.re += -0.5 * at * bt * s.t[0] - 0.5 * ab * bb * s.b[0];
            e += jc * (at * s.t[1] + ab * s.b[1]) + j * (bt * s.t[2] + bb * s.b[2]);
            e.re += -j.re * (at * s.t[3] + bt * s.t[4] + ab * s.b[3] + bb * s.b[4]);
            e
        }
        GibbsModel::LongRange {
            f_bar_ratio,
            phi_bar_ratio,
        } => {
            let onsite = s.pair_sum as f64 + at * bt * s.t[0] + ab * bb * s.b[0];
            let msig = s.ms_bulk as f64 + at * s.t_mu as f64 + ab * s.b_mu as f64;
            let mtau = s.mt_bulk as f64 + bt * s.t_nu as f64 + bb * s.b_nu as f64;
            let d = msig - mtau;
            Complex64::new(
                -0.5 * onsite + 0.25 * f_bar_ratio * d * d,
                0.25 * phi_bar_ratio * d * (msig + mtau),
            )
        }
    }
}

fn for_each_energy<F: FnMut(usize, Complex64)>(
    geom: &LatticeGeometry,
    model: &GibbsModel,
    mut f: F,
) -> Result<(), BruteError> {
    let nvars = geom.variable_count();
    if nvars > MAX_VARIABLES {
        return Err(BruteError::TooLarge(nvars));
    }
    let j = match model {
        GibbsModel::MassField { j } => *j,
        GibbsModel::LongRange { .. } => Complex64::new(0.0, 0.0),
    };
    let patterns = all_patterns();
    let mut en = Enumerator::new(geom);
    let nstates: u64 = 1 << (2 * geom.plaquette_count());
    for bits in 0..nstates {
        en.decode(bits);
        let stats = en.stats(j);
        for (pi, &pat) in patterns.iter().enumerate() {
            f(pi, pattern_energy(model, &stats, pat));
        }
    }
    Ok(())
}

/// Exact sums `c(alpha, beta) = sum_{mu, nu} e^{-xi E}` for all sixteen
/// boundary patterns, assembled into `z` and the boundary correlator.
pub fn brute_force(
    geom: &LatticeGeometry,
    model: &GibbsModel,
    xi: f64,
) -> Result<AmplitudePair, BruteError> {
    // pass 1: reference exponent
    let mut e_ref = f64::INFINITY;
    for_each_energy(geom, model, |_, e| {
        let x = xi * e.re;
        if x < e_ref {
            e_ref = x;
        }
    })?;
    // pass 2: scaled accumulation
    let mut acc = vec![Complex64::new(0.0, 0.0); 16];
    for_each_energy(geom, model, |pi, e| {
        let mag = (e_ref - xi * e.re).exp();
        let phase = -xi * e.im;
        acc[pi] += Complex64::new(mag * phase.cos(), mag * phase.sin());
    })?;
    let c_table = all_patterns()
        .into_iter()
        .zip(acc)
        .map(|(p, v)| (p, LogScaled::new(v, -e_ref)))
        .collect();
    Ok(assemble(c_table))
}

/// Analytic ensemble mean energy and heat capacity,
/// `E = sum E w / sum w` and `C = xi^2 (<E^2> - <E>^2)` with `w = e^{-xi E}`;
/// both are real because the state sum is conjugation symmetric.
pub fn brute_observables(
    geom: &LatticeGeometry,
    model: &GibbsModel,
    xi: f64,
) -> Result<(f64, f64), BruteError> {
    let mut e_ref = f64::INFINITY;
    for_each_energy(geom, model, |_, e| {
        let x = xi * e.re;
        if x < e_ref {
            e_ref = x;
        }
    })?;
    let mut z = Complex64::new(0.0, 0.0);
    let mut ez = Complex64::new(0.0, 0.0);
    let mut e2z = Complex64::new(0.0, 0.0);
    for_each_energy(geom, model, |_, e| {
        let mag = (e_ref - xi * e.re).exp();
        let phase = -xi * e.im;
        let w = Complex64::new(mag * phase.cos(), mag * phase.sin());
        z += w;
        ez += e * w;
        e2z += e * e * w;
    })?;
    let mean = (ez / z).re;
    let mean2 = (e2z / z).re;
    Ok((mean, xi * xi * (mean2 - mean * mean)))
}

/// Gibbs average of the absolute layer-product magnetization
/// `<|sum_m mu_m nu_m| / P>`, an order-parameter diagnostic for the
/// Monte Carlo tests.
pub fn brute_layer_product_order(
    geom: &LatticeGeometry,
    model: &GibbsModel,
    xi: f64,
) -> Result<f64, BruteError> {
    let nvars = geom.variable_count();
    if nvars > MAX_VARIABLES {
        return Err(BruteError::TooLarge(nvars));
    }
    let j = match model {
        GibbsModel::MassField { j } => *j,
        GibbsModel::LongRange { .. } => Complex64::new(0.0, 0.0),
    };
    let patterns = all_patterns();
    let p = geom.plaquette_count();
    let nstates: u64 = 1 << (2 * p);
    let mut e_ref = f64::INFINITY;
    for_each_energy(geom, model, |_, e| {
        let x = xi * e.re;
        if x < e_ref {
            e_ref = x;
        }
    })?;
    let mut en = Enumerator::new(geom);
    let mut num = 0.0;
    let mut den = 0.0;
    for bits in 0..nstates {
        en.decode(bits);
        let stats = en.stats(j);
        let rho: i64 = (0..p).map(|i| (en.mu[i] * en.nu[i]) as i64).sum();
        let obs = (rho.unsigned_abs() as f64) / p as f64;
        for &pat in &patterns {
            let e = pattern_energy(model, &stats, pat);
            let w = (e_ref - xi * e.re).exp() * (-xi * e.im).cos();
            num += w * obs;
            den += w;
        }
    }
    Ok(num / den)
}
