//! Surface-code lattice geometry, mass-field configurations, and the
//! mass-field -> bilayer-spin mapping.
//!
//! Plaquettes live on an `nx * ny` grid, indexed `p = x + y * nx` with
//! `x in 0..nx`, `y in 0..ny` (row 0 is the bottom). Qubits sit on the edges
//! between neighboring plaquettes plus one dangling edge per top and bottom
//! plaquette. In midpoint coordinates (units of the qubit spacing `a`,
//! plaquette centers at integer points) a bulk qubit between plaquettes `m`
//! and `n` sits at their midpoint; the dangling qubit of a top/bottom
//! plaquette sits half a unit above/below its center.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("invalid lattice size: {0}")]
    InvalidSize(String),
    #[error("malformed configuration dump at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QubitKind {
    /// Edge shared by two plaquettes.
    Bulk { m: usize, n: usize },
    /// Dangling edge of a top-row plaquette; pairs with the `alpha_t`/`beta_t` fields.
    Top { m: usize },
    /// Dangling edge of a bottom-row plaquette; pairs with `alpha_b`/`beta_b`.
    Bottom { m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit {
    pub kind: QubitKind,
    /// Midpoint in units of `a`.
    pub pos: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct LatticeGeometry {
    pub nx: usize,
    pub ny: usize,
    pub qubits: Vec<Qubit>,
    /// Nearest-neighbor plaquette pairs; element `i` is the bulk qubit `i`
    /// (bulk qubits come first in `qubits`).
    pub plaq_pairs: Vec<(usize, usize)>,
    /// Plaquette indices of the top row (`y = ny - 1`), left to right.
    pub top_plaquettes: Vec<usize>,
    pub bottom_plaquettes: Vec<usize>,
    /// Qubit indices of the dangling top/bottom qubits, left to right.
    pub top_qubits: Vec<usize>,
    pub bottom_qubits: Vec<usize>,
    /// Diagonal (next-to-nearest) plaquette pairs.
    pub diag_pairs: Vec<(usize, usize)>,
    /// Directed L-shaped triples `(m, n, m')`: `m` adjacent to `n` along one
    /// axis, `n` adjacent to `m'` along the other, both directions listed.
    pub l_triples: Vec<(usize, usize, usize)>,
    /// Ordered adjacent plaquette pairs within the top/bottom rows.
    pub row_pairs_top: Vec<(usize, usize)>,
    pub row_pairs_bottom: Vec<(usize, usize)>,
    /// Per-column weight of the single-site boundary couplings: 1/2 at the
    /// corners, 1 in the interior (a width-1 lattice gets weight 1).
    pub boundary_weight: Vec<f64>,
    /// Unordered qubit pairs at separation `a / sqrt(2)`.
    pub nn_qubit_pairs: Vec<(usize, usize)>,
    /// Star incidence lists (bulk stars have 4 qubits, boundary stars 3).
    pub stars: Vec<Vec<usize>>,
    /// Canonical dual path for the logical flip operator: the leftmost column
    /// of qubits from the bottom dangling edge to the top one.
    pub gamma_path: Vec<usize>,
    /// For each plaquette, the qubits whose spin value involves it.
    pub plaq_incident_qubits: Vec<Vec<usize>>,
}

impl LatticeGeometry {
    pub fn plaquette_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    pub fn plaq_index(&self, x: usize, y: usize) -> usize {
        x + y * self.nx
    }

    /// Number of binary degrees of freedom in the mass-field representation.
    pub fn variable_count(&self) -> usize {
        2 * self.plaquette_count() + 4
    }
}

pub fn build_lattice(nx: usize, ny: usize) -> Result<LatticeGeometry, LatticeError> {
    if nx < 1 || ny < 1 {
        return Err(LatticeError::InvalidSize(format!("({nx}, {ny})")));
    }
    let pid = |x: usize, y: usize| x + y * nx;

    let mut qubits = Vec::new();
    let mut plaq_pairs = Vec::new();
    // horizontal neighbors, then vertical neighbors
    for y in 0..ny {
        for x in 0..nx.saturating_sub(1) {
            let (m, n) = (pid(x, y), pid(x + 1, y));
            plaq_pairs.push((m, n));
            qubits.push(Qubit {
                kind: QubitKind::Bulk { m, n },
                pos: (x as f64 + 0.5, y as f64),
            });
        }
    }
    for y in 0..ny.saturating_sub(1) {
        for x in 0..nx {
            let (m, n) = (pid(x, y), pid(x, y + 1));
            plaq_pairs.push((m, n));
            qubits.push(Qubit {
                kind: QubitKind::Bulk { m, n },
                pos: (x as f64, y as f64 + 0.5),
            });
        }
    }
    let mut top_qubits = Vec::new();
    let mut bottom_qubits = Vec::new();
    for x in 0..nx {
        let m = pid(x, ny - 1);
        top_qubits.push(qubits.len());
        qubits.push(Qubit {
            kind: QubitKind::Top { m },
            pos: (x as f64, (ny - 1) as f64 + 0.5),
        });
    }
    for x in 0..nx {
        let m = pid(x, 0);
        bottom_qubits.push(qubits.len());
        qubits.push(Qubit {
            kind: QubitKind::Bottom { m },
            pos: (x as f64, -0.5),
        });
    }

    let top_plaquettes: Vec<usize> = (0..nx).map(|x| pid(x, ny - 1)).collect();
    let bottom_plaquettes: Vec<usize> = (0..nx).map(|x| pid(x, 0)).collect();

    let mut diag_pairs = Vec::new();
    for y in 0..ny.saturating_sub(1) {
        for x in 0..nx {
            if x + 1 < nx {
                diag_pairs.push((pid(x, y), pid(x + 1, y + 1)));
            }
            if x >= 1 {
                diag_pairs.push((pid(x, y), pid(x - 1, y + 1)));
            }
        }
    }

    // directed L triples: middle n, one horizontal neighbor m, one vertical
    // neighbor m'; both (m, n, m') and (m', n, m) are listed
    let mut l_triples = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            let n = pid(x, y);
            let hs: Vec<usize> = [x.checked_sub(1), Some(x + 1)]
                .into_iter()
                .flatten()
                .filter(|&xx| xx < nx)
                .map(|xx| pid(xx, y))
                .collect();
            let vs: Vec<usize> = [y.checked_sub(1), Some(y + 1)]
                .into_iter()
                .flatten()
                .filter(|&yy| yy < ny)
                .map(|yy| pid(x, yy))
                .collect();
            for &m in &hs {
                for &mp in &vs {
                    l_triples.push((m, n, mp));
                    l_triples.push((mp, n, m));
                }
            }
        }
    }

    let row_pairs = |y: usize| -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for x in 0..nx.saturating_sub(1) {
            v.push((pid(x, y), pid(x + 1, y)));
            v.push((pid(x + 1, y), pid(x, y)));
        }
        v
    };
    let row_pairs_top = row_pairs(ny - 1);
    let row_pairs_bottom = row_pairs(0);

    let boundary_weight: Vec<f64> = if nx == 1 {
        vec![1.0]
    } else {
        (0..nx)
            .map(|x| if x == 0 || x == nx - 1 { 0.5 } else { 1.0 })
            .collect()
    };

    let mut nn_qubit_pairs = Vec::new();
    for i in 0..qubits.len() {
        for j in (i + 1)..qubits.len() {
            let dx = qubits[i].pos.0 - qubits[j].pos.0;
            let dy = qubits[i].pos.1 - qubits[j].pos.1;
            if (dx * dx + dy * dy - 0.5).abs() < 1e-9 {
                nn_qubit_pairs.push((i, j));
            }
        }
    }

    // stars: interior corner points; incident qubits are the edge midpoints
    // half a unit away along one axis
    let mut stars = Vec::new();
    for i in 1..nx {
        let cx = i as f64 - 0.5;
        for j in 0..=ny {
            let cy = j as f64 - 0.5;
            let mut inc = Vec::new();
            for (qi, q) in qubits.iter().enumerate() {
                let dx = (q.pos.0 - cx).abs();
                let dy = (q.pos.1 - cy).abs();
                if (dx < 1e-9 && (dy - 0.5).abs() < 1e-9) || (dy < 1e-9 && (dx - 0.5).abs() < 1e-9)
                {
                    inc.push(qi);
                }
            }
            if inc.len() >= 3 {
                stars.push(inc);
            }
        }
    }

    let mut gamma_path = vec![bottom_qubits[0]];
    for y in 0..ny - 1 {
        // vertical-neighbor qubit between (0, y) and (0, y + 1)
        let target = (0.0, y as f64 + 0.5);
        let qi = qubits
            .iter()
            .position(|q| (q.pos.0 - target.0).abs() < 1e-9 && (q.pos.1 - target.1).abs() < 1e-9)
            .expect("column qubit");
        gamma_path.push(qi);
    }
    gamma_path.push(top_qubits[0]);

    let mut plaq_incident_qubits = vec![Vec::new(); nx * ny];
    for (qi, q) in qubits.iter().enumerate() {
        match q.kind {
            QubitKind::Bulk { m, n } => {
                plaq_incident_qubits[m].push(qi);
                plaq_incident_qubits[n].push(qi);
            }
            QubitKind::Top { m } | QubitKind::Bottom { m } => plaq_incident_qubits[m].push(qi),
        }
    }

    Ok(LatticeGeometry {
        nx,
        ny,
        qubits,
        plaq_pairs,
        top_plaquettes,
        bottom_plaquettes,
        top_qubits,
        bottom_qubits,
        diag_pairs,
        l_triples,
        row_pairs_top,
        row_pairs_bottom,
        boundary_weight,
        nn_qubit_pairs,
        stars,
        gamma_path,
        plaq_incident_qubits,
    })
}

/// Unconstrained plaquette spins plus the four boundary fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFieldConfig {
    pub mu: Vec<i8>,
    pub nu: Vec<i8>,
    pub alpha_t: i8,
    pub alpha_b: i8,
    pub beta_t: i8,
    pub beta_b: i8,
}

impl MassFieldConfig {
    pub fn uniform(geom: &LatticeGeometry) -> Self {
        let p = geom.plaquette_count();
        MassFieldConfig {
            mu: vec![1; p],
            nu: vec![1; p],
            alpha_t: 1,
            alpha_b: 1,
            beta_t: 1,
            beta_b: 1,
        }
    }

    pub fn random<R: Rng>(geom: &LatticeGeometry, rng: &mut R) -> Self {
        let p = geom.plaquette_count();
        let spin = |rng: &mut R| if rng.gen::<bool>() { 1i8 } else { -1i8 };
        MassFieldConfig {
            mu: (0..p).map(|_| spin(rng)).collect(),
            nu: (0..p).map(|_| spin(rng)).collect(),
            alpha_t: spin(rng),
            alpha_b: spin(rng),
            beta_t: spin(rng),
            beta_b: spin(rng),
        }
    }

    /// The logical-flip correlator `alpha_t alpha_b beta_t beta_b`.
    pub fn boundary_product(&self) -> i8 {
        self.alpha_t * self.alpha_b * self.beta_t * self.beta_b
    }

    /// Plain-text snapshot, one variable per line (`mu x y v`, `nu x y v`,
    /// `bnd name v`), 1-based coordinates.
    pub fn dump(&self, geom: &LatticeGeometry) -> String {
        let mut out = String::new();
        for y in 0..geom.ny {
            for x in 0..geom.nx {
                let p = geom.plaq_index(x, y);
                out.push_str(&format!("mu {} {} {:+}\n", x + 1, y + 1, self.mu[p]));
            }
        }
        for y in 0..geom.ny {
            for x in 0..geom.nx {
                let p = geom.plaq_index(x, y);
                out.push_str(&format!("nu {} {} {:+}\n", x + 1, y + 1, self.nu[p]));
            }
        }
        out.push_str(&format!("bnd alpha_t {:+}\n", self.alpha_t));
        out.push_str(&format!("bnd alpha_b {:+}\n", self.alpha_b));
        out.push_str(&format!("bnd beta_t {:+}\n", self.beta_t));
        out.push_str(&format!("bnd beta_b {:+}\n", self.beta_b));
        out
    }

    pub fn parse(geom: &LatticeGeometry, text: &str) -> Result<Self, LatticeError> {
        let mut cfg = MassFieldConfig::uniform(geom);
        let parse_spin = |tok: &str, line: usize| -> Result<i8, LatticeError> {
            match tok.parse::<i32>() {
                Ok(1) => Ok(1),
                Ok(-1) => Ok(-1),
                _ => Err(LatticeError::ParseError {
                    line,
                    msg: format!("expected +1 or -1, got {tok:?}"),
                }),
            }
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                [kind @ ("mu" | "nu"), xs, ys, vs] => {
                    let x: usize = xs.parse().map_err(|_| LatticeError::ParseError {
                        line: lineno + 1,
                        msg: format!("bad x {xs:?}"),
                    })?;
                    let y: usize = ys.parse().map_err(|_| LatticeError::ParseError {
                        line: lineno + 1,
                        msg: format!("bad y {ys:?}"),
                    })?;
                    if x < 1 || x > geom.nx || y < 1 || y > geom.ny {
                        return Err(LatticeError::ParseError {
                            line: lineno + 1,
                            msg: format!("site ({x}, {y}) outside the lattice"),
                        });
                    }
                    let p = geom.plaq_index(x - 1, y - 1);
                    let v = parse_spin(vs, lineno + 1)?;
                    if *kind == "mu" {
                        cfg.mu[p] = v;
                    } else {
                        cfg.nu[p] = v;
                    }
                }
                ["bnd", name, vs] => {
                    let v = parse_spin(vs, lineno + 1)?;
                    match *name {
                        "alpha_t" => cfg.alpha_t = v,
                        "alpha_b" => cfg.alpha_b = v,
                        "beta_t" => cfg.beta_t = v,
                        "beta_b" => cfg.beta_b = v,
                        other => {
                            return Err(LatticeError::ParseError {
                                line: lineno + 1,
                                msg: format!("unknown boundary field {other:?}"),
                            })
                        }
                    }
                }
                _ => {
                    return Err(LatticeError::ParseError {
                        line: lineno + 1,
                        msg: format!("unrecognized line {line:?}"),
                    })
                }
            }
        }
        Ok(cfg)
    }
}

/// The two spin layers over the qubit sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BilayerSpinConfig {
    pub sigma: Vec<i8>,
    pub tau: Vec<i8>,
}

/// Expand a mass-field configuration into the qubit spins. The output
/// satisfies every star constraint by construction.
pub fn mass_to_spin(geom: &LatticeGeometry, m: &MassFieldConfig) -> BilayerSpinConfig {
    let n = geom.qubit_count();
    let mut sigma = vec![0i8; n];
    let mut tau = vec![0i8; n];
    for (qi, q) in geom.qubits.iter().enumerate() {
        let (s, t) = match q.kind {
            QubitKind::Bulk { m: a, n: b } => (m.mu[a] * m.mu[b], m.nu[a] * m.nu[b]),
            QubitKind::Top { m: a } => (m.mu[a] * m.alpha_t, m.nu[a] * m.beta_t),
            QubitKind::Bottom { m: a } => (m.mu[a] * m.alpha_b, m.nu[a] * m.beta_b),
        };
        sigma[qi] = s;
        tau[qi] = t;
    }
    BilayerSpinConfig { sigma, tau }
}

/// Product of a spin layer along the canonical dual path; equals
/// `alpha_t * alpha_b` (sigma layer) or `beta_t * beta_b` (tau layer) for any
/// mass-field configuration.
pub fn path_product(geom: &LatticeGeometry, layer: &[i8]) -> i8 {
    geom.gamma_path.iter().map(|&q| layer[q]).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn minimal_lattice_counts() {
        let g = build_lattice(1, 1).unwrap();
        assert_eq!(g.plaquette_count(), 1);
        assert_eq!(g.qubit_count(), 2);
        assert_eq!(g.variable_count(), 6); // 2^6 = 64 states
        assert!(g.stars.is_empty());
        assert!(build_lattice(0, 3).is_err());
    }

    #[test]
    fn incidence_structure() {
        let g = build_lattice(2, 2).unwrap();
        assert_eq!(g.plaquette_count(), 4);
        // every bulk qubit borders exactly two plaquettes, boundary one
        for q in &g.qubits {
            match q.kind {
                QubitKind::Bulk { m, n } => assert_ne!(m, n),
                QubitKind::Top { .. } | QubitKind::Bottom { .. } => {}
            }
        }
        assert_eq!(g.plaq_pairs.len(), 4);
        assert_eq!(g.top_qubits.len(), 2);
        assert_eq!(g.bottom_qubits.len(), 2);
        assert_eq!(g.qubit_count(), 8);
        // bulk stars touch exactly 4 qubits
        let g = build_lattice(3, 3).unwrap();
        let bulk_stars: Vec<_> = g.stars.iter().filter(|s| s.len() == 4).collect();
        let boundary_stars: Vec<_> = g.stars.iter().filter(|s| s.len() == 3).collect();
        assert_eq!(bulk_stars.len() + boundary_stars.len(), g.stars.len());
        assert_eq!(g.stars.len(), (3 - 1) * (3 + 1));
        assert_eq!(boundary_stars.len(), 2 * (3 - 1));
    }

    #[test]
    fn star_products_always_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (nx, ny) in [(3, 3), (4, 3), (4, 4)] {
            let g = build_lattice(nx, ny).unwrap();
            for _ in 0..200 {
                let m = MassFieldConfig::random(&g, &mut rng);
                let spins = mass_to_spin(&g, &m);
                for star in &g.stars {
                    let ps: i32 = star.iter().map(|&q| spins.sigma[q] as i32).product();
                    let pt: i32 = star.iter().map(|&q| spins.tau[q] as i32).product();
                    assert_eq!(ps, 1);
                    assert_eq!(pt, 1);
                }
            }
        }
    }

    #[test]
    fn logical_path_product_is_boundary_product() {
        let g = build_lattice(4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let m = MassFieldConfig::random(&g, &mut rng);
            let spins = mass_to_spin(&g, &m);
            assert_eq!(path_product(&g, &spins.sigma), m.alpha_t * m.alpha_b);
            assert_eq!(path_product(&g, &spins.tau), m.beta_t * m.beta_b);
        }
    }

    #[test]
    fn uniform_and_gauge_flip() {
        let g = build_lattice(3, 2).unwrap();
        let m = MassFieldConfig::uniform(&g);
        let spins = mass_to_spin(&g, &m);
        assert!(spins.sigma.iter().all(|&s| s == 1));
        // global mu flip with fixed boundaries: bulk sigma unchanged, boundary flipped
        let mut m2 = m.clone();
        for v in m2.mu.iter_mut() {
            *v = -*v;
        }
        let spins2 = mass_to_spin(&g, &m2);
        for (qi, q) in g.qubits.iter().enumerate() {
            match q.kind {
                QubitKind::Bulk { .. } => assert_eq!(spins2.sigma[qi], spins.sigma[qi]),
                _ => assert_eq!(spins2.sigma[qi], -spins.sigma[qi]),
            }
        }
        // flipping mu and both alpha fields together leaves sigma unchanged
        m2.alpha_t = -m2.alpha_t;
        m2.alpha_b = -m2.alpha_b;
        let spins3 = mass_to_spin(&g, &m2);
        assert_eq!(spins3.sigma, spins.sigma);
    }

    #[test]
    fn nn_pairs_are_perpendicular_midpoints() {
        let g = build_lattice(3, 2).unwrap();
        for &(i, j) in &g.nn_qubit_pairs {
            let dx = (g.qubits[i].pos.0 - g.qubits[j].pos.0).abs();
            let dy = (g.qubits[i].pos.1 - g.qubits[j].pos.1).abs();
            assert!((dx - 0.5).abs() < 1e-9 && (dy - 0.5).abs() < 1e-9);
        }
        // dangling qubits pair with the in-row vertical edges
        let g11 = build_lattice(1, 1).unwrap();
        assert!(g11.nn_qubit_pairs.is_empty());
    }

    #[test]
    fn dump_roundtrip() {
        let g = build_lattice(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = MassFieldConfig::random(&g, &mut rng);
        let text = m.dump(&g);
        let back = MassFieldConfig::parse(&g, &text).unwrap();
        assert_eq!(m, back);
        assert!(MassFieldConfig::parse(&g, "mu 9 9 +1").is_err());
        assert!(MassFieldConfig::parse(&g, "mu 1 1 3").is_err());
        assert!(MassFieldConfig::parse(&g, "what 1 1").is_err());
    }
}
