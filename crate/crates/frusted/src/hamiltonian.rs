//! Matrix-free application of H = J1 Σ σ⃗_i·σ⃗_j + J2 Σ σ⃗_k·σ⃗_l in the σ^z
//! product basis.
//!
//! Per bond, σ⃗_a·σ⃗_b = 2·SWAP_ab − 1 on the two-site subspace: basis states
//! with equal bits at (a, b) pick up +1, states with opposite bits pick up −1
//! plus a flip term of weight 2 to the bit-swapped partner. H is real in this
//! basis and conserves total σ^z.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::lattice::{build_bonds, BondList, Coupling, ModelSpec};

/// Below this dimension the apply kernel runs serially; rayon overhead
/// dominates tiny problems.
const PARALLEL_DIM_MIN: usize = 1 << 12;

/// A complex amplitude vector over the 2^N basis states of N spins.
///
/// Eigenvectors of the (real) Hamiltonians carry zero imaginary parts; the
/// complex type is kept because the concurrence spin-flip conjugates in this
/// fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wrap amplitudes for `n_sites` spins. Panics unless `amplitudes.len() == 2^n_sites`.
    pub fn new(n_sites: usize, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(
            amplitudes.len(),
            1usize << n_sites,
            "state vector length must be 2^n_sites"
        );
        StateVector { n_sites, amplitudes }
    }

    /// Zero vector.
    pub fn zero(n_sites: usize) -> Self {
        StateVector::new(n_sites, vec![Complex64::new(0.0, 0.0); 1 << n_sites])
    }

    /// The computational basis state with the given index.
    pub fn basis_state(n_sites: usize, index: usize) -> Self {
        let mut v = StateVector::zero(n_sites);
        v.amplitudes[index] = Complex64::new(1.0, 0.0);
        v
    }

    /// Build from real amplitudes (imaginary parts zero).
    pub fn from_real(n_sites: usize, re: &[f64]) -> Self {
        StateVector::new(n_sites, re.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    /// ⟨self | other⟩ with conjugation on `self`.
    pub fn dot(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.n_sites, other.n_sites);
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }
}

/// One bond prepared for the apply kernel.
#[derive(Debug, Clone, Copy)]
struct BondOp {
    a: u32,
    b: u32,
    mask: usize,
    /// 2·J of the bond, the flip-term coefficient.
    flip: f64,
}

/// Matrix-free H over a bond list. The diagonal is precomputed once.
#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    bonds: BondList,
    j1: f64,
    j2: f64,
    ops: Vec<BondOp>,
    diag: Vec<f64>,
}

impl HamiltonianOperator {
    pub fn new(bonds: BondList, j1: f64, j2: f64) -> Self {
        let dim = 1usize << bonds.n_sites;
        let ops: Vec<BondOp> = bonds
            .bonds
            .iter()
            .map(|b| {
                let j = match b.coupling {
                    Coupling::J1 => j1,
                    Coupling::J2 => j2,
                };
                BondOp {
                    a: b.a as u32,
                    b: b.b as u32,
                    mask: (1 << b.a) | (1 << b.b),
                    flip: 2.0 * j,
                }
            })
            .collect();
        let mut diag = vec![0.0; dim];
        for s in 0..dim {
            let mut d = 0.0;
            for op in &ops {
                let differ = ((s >> op.a) ^ (s >> op.b)) & 1;
                // σ^z σ^z: +J on equal bits, −J on opposite. flip/2 is J.
                d += if differ == 1 { -op.flip / 2.0 } else { op.flip / 2.0 };
            }
            diag[s] = d;
        }
        HamiltonianOperator { bonds, j1, j2, ops, diag }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let bonds = build_bonds(spec)?;
        Ok(HamiltonianOperator::new(bonds, spec.j1, spec.j2()))
    }

    pub fn n_sites(&self) -> usize {
        self.bonds.n_sites
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn bonds(&self) -> &BondList {
        &self.bonds
    }

    pub fn j1(&self) -> f64 {
        self.j1
    }

    pub fn j2(&self) -> f64 {
        self.j2
    }

    /// out = H·v on raw real amplitudes. Each output element is accumulated
    /// in a fixed bond order, so the result is deterministic under any
    /// thread count.
    pub fn apply_real(&self, v: &[f64], out: &mut [f64]) {
        let dim = self.dim();
        assert_eq!(v.len(), dim, "input dimension mismatch");
        assert_eq!(out.len(), dim, "output dimension mismatch");
        let kernel = |base: usize, chunk: &mut [f64]| {
            for (i, o) in chunk.iter_mut().enumerate() {
                let s = base + i;
                let mut acc = self.diag[s] * v[s];
                for op in &self.ops {
                    if ((s >> op.a) ^ (s >> op.b)) & 1 == 1 {
                        acc += op.flip * v[s ^ op.mask];
                    }
                }
                *o = acc;
            }
        };
        if dim < PARALLEL_DIM_MIN {
            kernel(0, out);
        } else {
            let chunk = 1 << 12;
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(ci, c)| kernel(ci * chunk, c));
        }
    }

    /// H·v for complex state vectors; real and imaginary parts are mapped
    /// independently since H is real.
    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(v.n_sites(), self.n_sites(), "state/operator site mismatch");
        let dim = self.dim();
        let re: Vec<f64> = v.amplitudes().iter().map(|a| a.re).collect();
        let im: Vec<f64> = v.amplitudes().iter().map(|a| a.im).collect();
        let mut ore = vec![0.0; dim];
        let mut oim = vec![0.0; dim];
        self.apply_real(&re, &mut ore);
        self.apply_real(&im, &mut oim);
        StateVector::new(
            v.n_sites(),
            ore.into_iter()
                .zip(oim)
                .map(|(r, i)| Complex64::new(r, i))
                .collect(),
        )
    }
}

/// The common Σσ^z/2 eigenvalue of `v`, or `None` if amplitudes spread over
/// more than one magnetization sector. Panics on the zero vector.
pub fn total_sz(v: &StateVector) -> Option<f64> {
    let n = v.n_sites();
    let mut sector: Option<u32> = None;
    for (s, a) in v.amplitudes().iter().enumerate() {
        if a.norm_sqr() > 1e-24 {
            let pop = (s as u64).count_ones();
            match sector {
                None => sector = Some(pop),
                Some(p) if p != pop => return None,
                _ => {}
            }
        }
    }
    let pop = sector.expect("total_sz of the zero vector");
    Some(pop as f64 - n as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{chain_bonds, square_torus_bonds, Bond, BondList};
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn single_bond(n: usize, a: usize, b: usize) -> BondList {
        BondList {
            n_sites: n,
            bonds: vec![Bond { a, b, coupling: Coupling::J1 }],
        }
    }

    #[test]
    fn two_site_flip_action() {
        // |01⟩ (site0 down, site1 up) has basis index 0b10 = 2; |10⟩ is 1.
        let h = HamiltonianOperator::new(single_bond(2, 0, 1), 1.0, 0.0);
        let out = h.apply(&StateVector::basis_state(2, 2));
        assert_eq!(out.amplitudes()[2], Complex64::new(-1.0, 0.0));
        assert_eq!(out.amplitudes()[1], Complex64::new(2.0, 0.0));
        assert_eq!(out.amplitudes()[0], Complex64::new(0.0, 0.0));
        assert_eq!(out.amplitudes()[3], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn two_site_singlet_and_triplet_eigenvalues() {
        let h = HamiltonianOperator::new(single_bond(2, 0, 1), 1.0, 0.0);
        let s = 0.5f64.sqrt();
        let singlet = StateVector::new(
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let hs = h.apply(&singlet);
        for (x, y) in hs.amplitudes().iter().zip(singlet.amplitudes()) {
            assert!((x - y * Complex64::new(-3.0, 0.0)).norm() < 1e-14);
        }
        for trip in [
            StateVector::basis_state(2, 0),
            StateVector::basis_state(2, 3),
        ] {
            let ht = h.apply(&trip);
            for (x, y) in ht.amplitudes().iter().zip(trip.amplitudes()) {
                assert!((x - y * Complex64::new(1.0, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn total_sz_examples() {
        // |0101⟩: sites 1 and 3 up → index 0b1010
        let v = StateVector::basis_state(4, 0b1010);
        assert_eq!(total_sz(&v), Some(0.0));
        let up = StateVector::basis_state(4, 0b1111);
        assert_eq!(total_sz(&up), Some(2.0));
        let s = 0.5f64.sqrt();
        let mixed = StateVector::new(
            2,
            vec![
                Complex64::new(s, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        assert_eq!(total_sz(&mixed), None);
    }

    #[test]
    #[should_panic(expected = "zero vector")]
    fn total_sz_rejects_zero_vector() {
        total_sz(&StateVector::zero(3));
    }

    #[test]
    #[should_panic(expected = "site mismatch")]
    fn apply_rejects_dimension_mismatch() {
        let h = HamiltonianOperator::new(single_bond(2, 0, 1), 1.0, 0.0);
        h.apply(&StateVector::zero(3));
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        StateVector::new(n, amps)
    }

    fn test_operators() -> Vec<HamiltonianOperator> {
        vec![
            HamiltonianOperator::new(chain_bonds(8), 1.0, 0.37),
            HamiltonianOperator::new(square_torus_bonds(2, 4), 1.0, 0.8),
        ]
    }

    #[test]
    fn hermiticity_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for h in test_operators() {
            for _ in 0..5 {
                let x = random_state(h.n_sites(), &mut rng);
                let y = random_state(h.n_sites(), &mut rng);
                let lhs = x.dot(&h.apply(&y));
                let rhs = y.dot(&h.apply(&x)).conj();
                let scale = x.norm() * y.norm() * (1.0 + h.j1().abs() + h.j2().abs());
                assert!((lhs - rhs).norm() <= 1e-12 * scale, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn magnetization_sector_is_conserved() {
        for h in test_operators() {
            let dim = h.dim();
            for s in (0..dim).step_by(dim / 16 + 1) {
                let out = h.apply(&StateVector::basis_state(h.n_sites(), s));
                let pop = (s as u64).count_ones();
                for (t, a) in out.amplitudes().iter().enumerate() {
                    if a.norm() > 0.0 {
                        assert_eq!((t as u64).count_ones(), pop, "sector broken: {s} -> {t}");
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn apply_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let h = HamiltonianOperator::new(chain_bonds(6), 1.0, 0.5);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_state(6, &mut rng);
            let y = random_state(6, &mut rng);
            let mut combo = StateVector::zero(6);
            for (c, (xa, ya)) in combo.amplitudes_mut().iter_mut()
                .zip(x.amplitudes().iter().zip(y.amplitudes())) {
                *c = a * xa + b * ya;
            }
            let lhs = h.apply(&combo);
            let hx = h.apply(&x);
            let hy = h.apply(&y);
            for ((l, xa), ya) in lhs.amplitudes().iter().zip(hx.amplitudes()).zip(hy.amplitudes()) {
                let rhs = a * xa + b * ya;
                prop_assert!((l - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
            }
        }
    }
}
