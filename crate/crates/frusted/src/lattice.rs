//! Bond lists (site-pair coupling graphs) for the three models, with
//! periodic boundary conditions.
//!
//! 4×4 lattices are numbered row-major, `site = 4*row + col`, and wrap on
//! both axes. The Shastry-Sutherland diagonals sit on plaquettes with
//! `(row + col)` even, alternating orientation with row parity, which makes
//! the J2 bonds a perfect matching of the 16 sites.

use crate::error::{Error, Result};

/// Which coupling constant a bond carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coupling {
    J1,
    J2,
}

/// An undirected site pair. Each bond is one summand of the Hamiltonian, so
/// duplicate pairs are legal where wraparound makes sums coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub coupling: Coupling,
}

impl Bond {
    fn new(a: usize, b: usize, coupling: Coupling) -> Self {
        assert_ne!(a, b, "bond endpoints must differ");
        Bond { a, b, coupling }
    }
}

/// The three lattice models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Chain1d,
    Square2d,
    ShastrySutherland,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Chain1d => "chain1d",
            ModelKind::Square2d => "square2d",
            ModelKind::ShastrySutherland => "ss",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "chain1d" => Ok(ModelKind::Chain1d),
            "square2d" => Ok(ModelKind::Square2d),
            "ss" => Ok(ModelKind::ShastrySutherland),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected chain1d|square2d|ss)"
            ))),
        }
    }
}

/// A model instance: lattice kind, size and couplings, with α = J2/J1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_sites: usize,
    pub j1: f64,
    pub alpha: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n_sites: usize, j1: f64, alpha: f64) -> Result<Self> {
        let spec = ModelSpec { kind, n_sites, j1, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j1 > 0.0) {
            return Err(Error::Config(format!("j1 must be positive, got {}", self.j1)));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        match self.kind {
            ModelKind::Chain1d => {
                // (i, i+2) wraps onto i itself below three sites.
                if self.n_sites < 3 {
                    return Err(Error::Config(format!(
                        "chain1d needs n_sites >= 3, got {}",
                        self.n_sites
                    )));
                }
            }
            ModelKind::Square2d | ModelKind::ShastrySutherland => {
                if self.n_sites != 16 {
                    return Err(Error::Config(format!(
                        "{} is defined on the 4x4 torus (n_sites = 16), got {}",
                        self.kind.label(),
                        self.n_sites
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn j2(&self) -> f64 {
        self.j1 * self.alpha
    }
}

/// The coupling graph of one model instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondList {
    pub n_sites: usize,
    pub bonds: Vec<Bond>,
}

impl BondList {
    /// (number of J1 bonds, number of J2 bonds)
    pub fn counts(&self) -> (usize, usize) {
        let j1 = self.bonds.iter().filter(|b| b.coupling == Coupling::J1).count();
        (j1, self.bonds.len() - j1)
    }

    pub fn j1_bonds(&self) -> impl Iterator<Item = &Bond> {
        self.bonds.iter().filter(|b| b.coupling == Coupling::J1)
    }

    pub fn j2_bonds(&self) -> impl Iterator<Item = &Bond> {
        self.bonds.iter().filter(|b| b.coupling == Coupling::J2)
    }
}

/// Build the bond list for a validated model spec.
pub fn build_bonds(spec: &ModelSpec) -> Result<BondList> {
    spec.validate()?;
    match spec.kind {
        ModelKind::Chain1d => Ok(chain_bonds(spec.n_sites)),
        ModelKind::Square2d => Ok(square_torus_bonds(4, 4)),
        ModelKind::ShastrySutherland => shastry_sutherland_bonds(4, 4),
    }
}

/// N nearest-neighbor bonds (i, i+1 mod N) and N next-nearest bonds
/// (i, i+2 mod N) on a periodic ring.
pub fn chain_bonds(n: usize) -> BondList {
    assert!(n >= 3);
    let mut bonds = Vec::with_capacity(2 * n);
    for i in 0..n {
        bonds.push(Bond::new(i, (i + 1) % n, Coupling::J1));
    }
    for i in 0..n {
        bonds.push(Bond::new(i, (i + 2) % n, Coupling::J2));
    }
    BondList { n_sites: n, bonds }
}

/// J1 on the edges of a rows×cols torus, J2 on both diagonals of every
/// plaquette. Rows and cols of at least 2; the 4×4 case is the Square2d model.
pub fn square_torus_bonds(rows: usize, cols: usize) -> BondList {
    assert!(rows >= 2 && cols >= 2);
    let site = |r: usize, c: usize| (r % rows) * cols + (c % cols);
    let mut bonds = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            bonds.push(Bond::new(site(r, c), site(r, c + 1), Coupling::J1));
            bonds.push(Bond::new(site(r, c), site(r + 1, c), Coupling::J1));
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            bonds.push(Bond::new(site(r, c), site(r + 1, c + 1), Coupling::J2));
            bonds.push(Bond::new(site(r, c + 1), site(r + 1, c), Coupling::J2));
        }
    }
    BondList { n_sites: rows * cols, bonds }
}

/// J1 torus grid plus one diagonal on each plaquette with (row+col) even,
/// the orientation alternating with row parity. Every site then belongs to
/// exactly one J2 dimer. Requires even rows and cols so the pattern closes
/// around the torus.
pub fn shastry_sutherland_bonds(rows: usize, cols: usize) -> Result<BondList> {
    if rows < 2 || cols < 2 || rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::Config(format!(
            "Shastry-Sutherland pattern needs even rows and cols >= 2, got {rows}x{cols}"
        )));
    }
    let site = |r: usize, c: usize| (r % rows) * cols + (c % cols);
    let mut bonds = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            bonds.push(Bond::new(site(r, c), site(r, c + 1), Coupling::J1));
            bonds.push(Bond::new(site(r, c), site(r + 1, c), Coupling::J1));
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            if (r + c) % 2 == 0 {
                if r % 2 == 0 {
                    bonds.push(Bond::new(site(r, c), site(r + 1, c + 1), Coupling::J2));
                } else {
                    bonds.push(Bond::new(site(r, c + 1), site(r + 1, c), Coupling::J2));
                }
            }
        }
    }
    Ok(BondList { n_sites: rows * cols, bonds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn unordered(b: &Bond) -> (usize, usize) {
        (b.a.min(b.b), b.a.max(b.b))
    }

    #[test]
    fn chain_n8_bond_sets() {
        let bl = chain_bonds(8);
        assert_eq!(bl.counts(), (8, 8));
        let j1: HashSet<_> = bl.j1_bonds().map(unordered).collect();
        let j2: HashSet<_> = bl.j2_bonds().map(unordered).collect();
        for i in 0..8 {
            assert!(j1.contains(&((i.min((i + 1) % 8)), i.max((i + 1) % 8))));
            assert!(j2.contains(&((i.min((i + 2) % 8)), i.max((i + 2) % 8))));
        }
    }

    #[test]
    fn chain_degrees_are_two_and_two() {
        for n in [5, 8, 9, 12] {
            let bl = chain_bonds(n);
            let mut d1 = vec![0usize; n];
            let mut d2 = vec![0usize; n];
            for b in &bl.bonds {
                let d = if b.coupling == Coupling::J1 { &mut d1 } else { &mut d2 };
                d[b.a] += 1;
                d[b.b] += 1;
            }
            assert!(d1.iter().all(|&d| d == 2), "J1 degree at n={n}");
            assert!(d2.iter().all(|&d| d == 2), "J2 degree at n={n}");
        }
    }

    /// Independent enumeration of the 4×4 torus: J1 edges are the site pairs
    /// at Manhattan displacement (0,±1)/(±1,0); J2 edges at (±1,±1).
    fn brute_force_torus_edges(rows: usize, cols: usize) -> (HashSet<(usize, usize)>, HashSet<(usize, usize)>) {
        let n = rows * cols;
        let mut nn = HashSet::new();
        let mut diag = HashSet::new();
        for p in 0..n {
            for q in 0..n {
                if p == q {
                    continue;
                }
                let (pr, pc) = (p / cols, p % cols);
                let (qr, qc) = (q / cols, q % cols);
                let dr = (pr as i64 - qr as i64).rem_euclid(rows as i64).min(
                    (qr as i64 - pr as i64).rem_euclid(rows as i64),
                );
                let dc = (pc as i64 - qc as i64).rem_euclid(cols as i64).min(
                    (qc as i64 - pc as i64).rem_euclid(cols as i64),
                );
                let key = (p.min(q), p.max(q));
                if dr + dc == 1 {
                    nn.insert(key);
                }
                if dr == 1 && dc == 1 {
                    diag.insert(key);
                }
            }
        }
        (nn, diag)
    }

    #[test]
    fn square2d_counts_match_brute_force() {
        let spec = ModelSpec::new(ModelKind::Square2d, 16, 1.0, 0.5).unwrap();
        let bl = build_bonds(&spec).unwrap();
        assert_eq!(bl.counts(), (32, 32));

        let (nn, diag) = brute_force_torus_edges(4, 4);
        // 4×4 torus has 32 distinct nearest-neighbor edges, each emitted once.
        assert_eq!(nn.len(), 32);
        let j1: Vec<_> = bl.j1_bonds().map(|b| unordered(b)).collect();
        assert_eq!(j1.len(), 32);
        assert_eq!(j1.iter().copied().collect::<HashSet<_>>(), nn);
        // 16 plaquettes × 2 diagonals land on the 32 distinct diagonal pairs.
        let j2: Vec<_> = bl.j2_bonds().map(|b| unordered(b)).collect();
        assert_eq!(j2.len(), 32);
        assert_eq!(j2.iter().copied().collect::<HashSet<_>>(), diag);
    }

    #[test]
    fn shastry_sutherland_perfect_matching() {
        let spec = ModelSpec::new(ModelKind::ShastrySutherland, 16, 1.0, 1.0).unwrap();
        let bl = build_bonds(&spec).unwrap();
        assert_eq!(bl.counts(), (32, 8));

        // Perfect matching: every site appears in exactly one J2 bond.
        let mut deg = HashMap::new();
        for b in bl.j2_bonds() {
            *deg.entry(b.a).or_insert(0usize) += 1;
            *deg.entry(b.b).or_insert(0usize) += 1;
        }
        assert_eq!(deg.len(), 16);
        assert!(deg.values().all(|&d| d == 1));

        // J2 bonds are plaquette diagonals.
        let (_, diag) = brute_force_torus_edges(4, 4);
        for b in bl.j2_bonds() {
            assert!(diag.contains(&unordered(b)), "{b:?} is not a diagonal");
        }

        // Removing the J2 bonds leaves the plain 4×4 torus grid.
        let (nn, _) = brute_force_torus_edges(4, 4);
        let j1: HashSet<_> = bl.j1_bonds().map(unordered).collect();
        assert_eq!(j1, nn);
    }

    #[test]
    fn bond_lists_are_deterministic() {
        for kind in [ModelKind::Chain1d, ModelKind::Square2d, ModelKind::ShastrySutherland] {
            let n = if kind == ModelKind::Chain1d { 10 } else { 16 };
            let spec = ModelSpec::new(kind, n, 1.0, 0.3).unwrap();
            assert_eq!(build_bonds(&spec).unwrap(), build_bonds(&spec).unwrap());
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ModelSpec::new(ModelKind::Square2d, 12, 1.0, 0.5).is_err());
        assert!(ModelSpec::new(ModelKind::ShastrySutherland, 20, 1.0, 0.5).is_err());
        assert!(ModelSpec::new(ModelKind::Chain1d, 2, 1.0, 0.5).is_err());
        assert!(ModelSpec::new(ModelKind::Chain1d, 8, 0.0, 0.5).is_err());
        assert!(ModelSpec::new(ModelKind::Chain1d, 8, 1.0, -0.1).is_err());
    }
}
