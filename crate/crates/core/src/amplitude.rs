//! Log-scaled complex sums and the assembly of partition sums and the
//! boundary correlator from the per-pattern partial sums `c(alpha, beta)`.

use num_complex::Complex64;

/// Boundary-field sign pattern `(alpha_t, alpha_b, beta_t, beta_b)`.
pub type Pattern = (i8, i8, i8, i8);

/// The six representative patterns; time-reversal and the top-bottom mirror
/// fold the full 16 onto these with multiplicities [2, 4, 4, 2, 2, 2].
pub const PATTERNS6: [Pattern; 6] = [
    (1, 1, 1, 1),
    (1, 1, 1, -1),
    (1, -1, 1, 1),
    (1, 1, -1, -1),
    (1, -1, 1, -1),
    (1, -1, -1, 1),
];

/// Multiplicity of each representative inside `z = 2 * sum(mult * c)`.
pub const MULT6: [f64; 6] = [1.0, 2.0, 2.0, 1.0, 1.0, 1.0];

pub fn all_patterns() -> Vec<Pattern> {
    let mut v = Vec::with_capacity(16);
    for at in [1i8, -1] {
        for ab in [1i8, -1] {
            for bt in [1i8, -1] {
                for bb in [1i8, -1] {
                    v.push((at, ab, bt, bb));
                }
            }
        }
    }
    v
}

pub fn pattern_sign(p: Pattern) -> f64 {
    (p.0 * p.1 * p.2 * p.3) as f64
}

/// A complex value `value * exp(log_scale)` with the magnitude factored out
/// for overflow safety.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaled {
    pub value: Complex64,
    pub log_scale: f64,
}

impl LogScaled {
    pub fn new(value: Complex64, log_scale: f64) -> Self {
        LogScaled { value, log_scale }
    }

    pub fn zero() -> Self {
        LogScaled {
            value: Complex64::new(0.0, 0.0),
            log_scale: 0.0,
        }
    }

    /// Collapse to a plain complex number (may overflow for large scales).
    pub fn to_complex(self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    pub fn ln_abs(self) -> f64 {
        self.value.norm().ln() + self.log_scale
    }

    /// Relative difference `|a - b| / |b|`, computed at a common scale.
    pub fn rel_diff(a: LogScaled, b: LogScaled) -> f64 {
        let scale = a.log_scale.max(b.log_scale);
        let av = a.value * (a.log_scale - scale).exp();
        let bv = b.value * (b.log_scale - scale).exp();
        (av - bv).norm() / bv.norm()
    }

    /// Weighted sum at a common scale.
    pub fn combine(terms: &[(f64, LogScaled)]) -> LogScaled {
        let scale = terms
            .iter()
            .map(|t| t.1.log_scale)
            .fold(f64::NEG_INFINITY, f64::max);
        if !scale.is_finite() {
            return LogScaled::zero();
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &(w, t) in terms {
            acc += w * t.value * (t.log_scale - scale).exp();
        }
        LogScaled::new(acc, scale)
    }
}

/// Partition sum, boundary correlator, and the per-pattern table they were
/// assembled from.
#[derive(Debug, Clone)]
pub struct AmplitudePair {
    pub z: LogScaled,
    /// The boundary correlator (a pure ratio, no scale).
    pub b_corr: Complex64,
    pub c_table: Vec<(Pattern, LogScaled)>,
    /// Largest `|Im| / |Re|` seen in `z` and `b_corr`.
    pub max_rel_imag: f64,
}

impl AmplitudePair {
    pub fn c(&self, p: Pattern) -> Option<LogScaled> {
        self.c_table.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }

    pub fn fidelity(&self) -> f64 {
        1.0 / (1.0 + self.b_corr.re)
    }

    /// A large imaginary leftover or a correlator at or below -1 means the
    /// ratio stopped being interpretable as a probability weight.
    pub fn is_valid(&self) -> bool {
        self.max_rel_imag <= 1e-6 && self.b_corr.re > -1.0 && self.b_corr.re >= -1e-6
    }
}

/// Assemble `z` and the correlator from per-pattern sums. Accepts either the
/// six representatives (with multiplicities) or all sixteen patterns.
pub fn assemble(c_table: Vec<(Pattern, LogScaled)>) -> AmplitudePair {
    let (z, b_num) = if c_table.len() == PATTERNS6.len() {
        let z_terms: Vec<(f64, LogScaled)> = c_table
            .iter()
            .zip(MULT6)
            .map(|((_, c), m)| (2.0 * m, *c))
            .collect();
        let b_terms: Vec<(f64, LogScaled)> = c_table
            .iter()
            .zip(MULT6)
            .map(|((p, c), m)| (2.0 * m * pattern_sign(*p), *c))
            .collect();
        (LogScaled::combine(&z_terms), LogScaled::combine(&b_terms))
    } else {
        let z_terms: Vec<(f64, LogScaled)> = c_table.iter().map(|(_, c)| (1.0, *c)).collect();
        let b_terms: Vec<(f64, LogScaled)> = c_table
            .iter()
            .map(|(p, c)| (pattern_sign(*p), *c))
            .collect();
        (LogScaled::combine(&z_terms), LogScaled::combine(&b_terms))
    };
    let b_corr = b_num.value * (b_num.log_scale - z.log_scale).exp() / z.value;
    let rel_imag = |v: Complex64| {
        if v.re == 0.0 && v.im == 0.0 {
            0.0
        } else {
            v.im.abs() / v.re.abs().max(f64::MIN_POSITIVE)
        }
    };
    let max_rel_imag = rel_imag(z.value).max(rel_imag(b_corr));
    AmplitudePair {
        z,
        b_corr,
        c_table,
        max_rel_imag,
    }
}

/// Energy, heat capacity, and fidelity from one engine run.
#[derive(Debug, Clone, Copy)]
pub struct ObservableReport {
    pub energy: f64,
    pub heat_capacity: f64,
    pub fidelity: f64,
    /// False when the correlator left `[0, 1]` beyond tolerance (possible for
    /// strong imaginary couplings); the numbers are reported regardless.
    pub valid: bool,
}
