//! Exact row-by-row summation of the mass-field partition sums.
//!
//! The state table holds one complex amplitude per joint row configuration
//! (four states per site: the two layers' plaquette spins). A row transition
//! sweeps the new row site by site, carrying the partially built site so that
//! vertical, diagonal, three-body, and new-row horizontal terms can each be
//! applied at the first step where all their variables are in scope:
//!
//!   * site introduction binds the vertical pair, the right diagonal, and the
//!     L terms closed by the new site over the old row;
//!   * the pair step binds the left diagonal, the new-row horizontal pair,
//!     and the remaining L terms, then sums out the old site underneath;
//!   * row closure sums out the last old site with no extra weight.
//!
//! The table is renormalized by its largest modulus after every transition,
//! with the logs accumulated, so couplings far past the ordering transition
//! stay representable.

use num_complex::Complex64;
use thiserror::Error;

use crate::amplitude::{
    all_patterns, assemble, AmplitudePair, LogScaled, ObservableReport, Pattern, PATTERNS6,
};
use crate::lattice::LatticeGeometry;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BinderError {
    #[error("row width {0} exceeds the table budget (4^{0} states, cap {MAX_WIDTH})")]
    WidthTooLarge(usize),
}

/// Widest supported row: the working tables hold `5 * 16 * 4^width` bytes.
pub const MAX_WIDTH: usize = 13;

// site state s in 0..4 encodes (mu, nu) = (bit0, bit1) as +/-1
const MU: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];
const NU: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

#[inline]
fn site(f: usize, x: usize) -> usize {
    (f >> (2 * x)) & 3
}

#[inline]
fn set_site(f: usize, x: usize, v: usize) -> usize {
    (f & !(3 << (2 * x))) | (v << (2 * x))
}

struct Weights {
    j: Complex64,
    xi: f64,
}

impl Weights {
    fn e_pair(&self, a: usize, b: usize) -> Complex64 {
        Complex64::new(-0.5 * MU[a] * MU[b] * NU[a] * NU[b], 0.0)
    }

    fn e_diag(&self, a: usize, b: usize) -> Complex64 {
        self.j.conj() * (MU[a] * MU[b]) + self.j * (NU[a] * NU[b])
    }

    fn e_l(&self, m: usize, n: usize, k: usize) -> Complex64 {
        Complex64::new(-self.j.re * MU[m] * MU[n] * NU[n] * NU[k], 0.0)
    }

    fn boltz(&self, e: Complex64) -> Complex64 {
        let mag = (-self.xi * e.re).exp();
        let phase = -self.xi * e.im;
        Complex64::new(mag * phase.cos(), mag * phase.sin())
    }
}

/// Boundary-row energy for a given row state (weighted single-site terms,
/// on-site products, and the ordered in-row three-body terms).
fn boundary_row_energy(
    geom: &LatticeGeometry,
    w: &Weights,
    f: usize,
    alpha: f64,
    beta: f64,
) -> Complex64 {
    let nx = geom.nx;
    let mut e = Complex64::new(0.0, 0.0);
    for x in 0..nx {
        let s = site(f, x);
        let bw = geom.boundary_weight[x];
        e.re += -0.5 * alpha * beta * MU[s] * NU[s];
        e += w.j.conj() * (alpha * bw * MU[s]) + w.j * (beta * bw * NU[s]);
    }
    for x in 0..nx.saturating_sub(1) {
        let (a, b) = (site(f, x), site(f, x + 1));
        for (m, n) in [(a, b), (b, a)] {
            e.re += -w.j.re * (alpha * NU[m] * NU[n] * MU[n] + beta * MU[m] * MU[n] * NU[n]);
        }
    }
    e
}

fn horizontal_row_energy(geom: &LatticeGeometry, w: &Weights, f: usize) -> Complex64 {
    let mut e = Complex64::new(0.0, 0.0);
    for x in 0..geom.nx.saturating_sub(1) {
        e += w.e_pair(site(f, x), site(f, x + 1));
    }
    e
}

/// One partial sum `c(alpha_t, alpha_b, beta_t, beta_b)` over all mass-field
/// states for a fixed boundary pattern.
pub fn binder_partition(
    geom: &LatticeGeometry,
    j: Complex64,
    xi: f64,
    pattern: Pattern,
) -> Result<LogScaled, BinderError> {
    let nx = geom.nx;
    if nx > MAX_WIDTH {
        return Err(BinderError::WidthTooLarge(nx));
    }
    let w = Weights { j, xi };
    let dim = 1usize << (2 * nx);
    let (at, ab, bt, bb) = (
        pattern.0 as f64,
        pattern.1 as f64,
        pattern.2 as f64,
        pattern.3 as f64,
    );

    let mut table: Vec<Complex64> = (0..dim)
        .map(|f| {
            w.boltz(horizontal_row_energy(geom, &w, f) + boundary_row_energy(geom, &w, f, ab, bb))
        })
        .collect();
    let mut log_scale = 0.0f64;
    let rescale = |t: &mut [Complex64], ls: &mut f64| {
        let m = t.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if m > 0.0 {
            for c in t.iter_mut() {
                *c /= m;
            }
            *ls += m.ln();
        }
    };
    rescale(&mut table, &mut log_scale);

    // per-transition weight tables, identical for every bulk row pair
    // intro[o0][o1][n0]; mid[o][ox][op][c][n]; last[o][ox][c][n]
    let mut intro = vec![[Complex64::new(0.0, 0.0); 4]; 16];
    for o0 in 0..4 {
        for o1 in 0..4 {
            for n0 in 0..4 {
                let mut e = w.e_pair(o0, n0);
                if nx > 1 {
                    e += w.e_diag(n0, o1) + w.e_l(o1, o0, n0) + w.e_l(n0, o0, o1);
                }
                intro[o0 * 4 + o1][n0] = w.boltz(e);
            }
        }
    }
    let step_weight = |o: usize, ox: usize, op: Option<usize>, c: usize, n: usize| -> Complex64 {
        let mut e = w.e_pair(ox, n) + w.e_diag(n, o) + w.e_pair(c, n);
        e += w.e_l(o, ox, n) + w.e_l(n, ox, o);
        e += w.e_l(c, n, ox) + w.e_l(ox, n, c);
        e += w.e_l(n, c, o) + w.e_l(o, c, n);
        if let Some(op) = op {
            e += w.e_diag(n, op) + w.e_l(op, ox, n) + w.e_l(n, ox, op);
        }
        w.boltz(e)
    };
    let mut mid = vec![Complex64::new(0.0, 0.0); 4 * 4 * 4 * 4 * 4];
    let mut last = vec![Complex64::new(0.0, 0.0); 4 * 4 * 4 * 4];
    for o in 0..4 {
        for ox in 0..4 {
            for c in 0..4 {
                for n in 0..4 {
                    last[((o * 4 + ox) * 4 + c) * 4 + n] = step_weight(o, ox, None, c, n);
                    for op in 0..4 {
                        mid[(((o * 4 + ox) * 4 + op) * 4 + c) * 4 + n] =
                            step_weight(o, ox, Some(op), c, n);
                    }
                }
            }
        }
    }

    let mut buf_a = vec![Complex64::new(0.0, 0.0); dim * 4];
    let mut buf_b = vec![Complex64::new(0.0, 0.0); dim * 4];
    for _row in 0..geom.ny - 1 {
        // introduce site 0
        for f in 0..dim {
            let o0 = site(f, 0);
            let o1 = if nx > 1 { site(f, 1) } else { 0 };
            let wrow = &intro[o0 * 4 + o1];
            let t = table[f];
            for n0 in 0..4 {
                buf_a[f * 4 + n0] = t * wrow[n0];
            }
        }
        // pair steps: sum out the old site x-1, write the carried new value
        for x in 1..nx {
            for g in 0..dim {
                let cprev = site(g, x - 1);
                let ox = site(g, x);
                let op = if x + 1 < nx { Some(site(g, x + 1)) } else { None };
                for n in 0..4 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for o in 0..4 {
                        let fin = set_site(g, x - 1, o);
                        let wt = match op {
                            Some(op) => mid[(((o * 4 + ox) * 4 + op) * 4 + cprev) * 4 + n],
                            None => last[((o * 4 + ox) * 4 + cprev) * 4 + n],
                        };
                        acc += wt * buf_a[fin * 4 + cprev];
                    }
                    buf_b[g * 4 + n] = acc;
                }
            }
            std::mem::swap(&mut buf_a, &mut buf_b);
        }
        // closure: sum out the final old site, land the carry in its slot
        for (g, slot) in table.iter_mut().enumerate() {
            let c = site(g, nx - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for o in 0..4 {
                let fin = set_site(g, nx - 1, o);
                acc += buf_a[fin * 4 + c];
            }
            *slot = acc;
        }
        rescale(&mut table, &mut log_scale);
    }

    let mut total = Complex64::new(0.0, 0.0);
    for (f, t) in table.iter().enumerate() {
        total += t * w.boltz(boundary_row_energy(geom, &w, f, at, bt));
    }
    // constant N/2 term of the energy
    log_scale += -xi * 0.5 * geom.qubit_count() as f64;
    Ok(LogScaled::new(total, log_scale))
}

/// Partition sum and boundary correlator from the six representative
/// patterns.
pub fn binder_amplitudes(
    geom: &LatticeGeometry,
    j: Complex64,
    xi: f64,
) -> Result<AmplitudePair, BinderError> {
    let mut c_table = Vec::with_capacity(6);
    for &p in &PATTERNS6 {
        c_table.push((p, binder_partition(geom, j, xi, p)?));
    }
    Ok(assemble(c_table))
}

/// Same quantities from all sixteen patterns (no symmetry reduction); used to
/// validate the six-pattern assembly.
pub fn binder_amplitudes_full(
    geom: &LatticeGeometry,
    j: Complex64,
    xi: f64,
) -> Result<AmplitudePair, BinderError> {
    let mut c_table = Vec::with_capacity(16);
    for p in all_patterns() {
        c_table.push((p, binder_partition(geom, j, xi, p)?));
    }
    Ok(assemble(c_table))
}

fn ln_z(geom: &LatticeGeometry, j: Complex64, xi: f64) -> Result<f64, BinderError> {
    Ok(binder_amplitudes(geom, j, xi)?.z.ln_abs())
}

/// Fidelity `1 / (1 + B)` plus the effective energy `-d ln Z / d xi` and heat
/// capacity `-xi^2 dE/d xi` from centered finite differences (relative step
/// 1e-4, with one Richardson refinement when the halved step disagrees).
pub fn binder_fidelity(
    geom: &LatticeGeometry,
    j: Complex64,
    xi: f64,
) -> Result<ObservableReport, BinderError> {
    let amp = binder_amplitudes(geom, j, xi)?;
    let fidelity = amp.fidelity();
    let valid = amp.is_valid();

    let h = if xi > 0.0 { 1e-4 * xi } else { 1e-4 };
    let deriv = |step: f64| -> Result<(f64, f64), BinderError> {
        let lp = ln_z(geom, j, xi + step)?;
        let lm = ln_z(geom, j, (xi - step).max(0.0))?;
        let l0 = ln_z(geom, j, xi)?;
        let denom = step + step.min(xi);
        let first = (lp - lm) / denom;
        let second = (lp - 2.0 * l0 + lm) / (step * step);
        Ok((first, second))
    };
    let (d1, d2) = deriv(h)?;
    let (d1h, d2h) = deriv(h / 2.0)?;
    let pick = |coarse: f64, fine: f64| -> f64 {
        if (coarse - fine).abs() > 1e-6 * fine.abs().max(1e-9) {
            (4.0 * fine - coarse) / 3.0
        } else {
            fine
        }
    };
    let energy = -pick(d1, d1h);
    let heat_capacity = xi * xi * pick(d2, d2h);
    Ok(ObservableReport {
        energy,
        heat_capacity,
        fidelity,
        valid,
    })
}
