//! Lowest-k eigenpairs of a Hamiltonian, with degenerate levels resolved to
//! full multiplicity, plus a dense full-spectrum path for small systems.
//!
//! The iterative path is Lanczos with full reorthogonalization, thick
//! restarts, and deflation rounds: converged Ritz vectors are locked and each
//! new round starts from a fresh seeded random vector in the orthogonal
//! complement, so every member of a degenerate multiplet is found. A final
//! round proves that no eigenvalue below the last returned level was missed.

mod lanczos;

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianOperator, StateVector};

/// One degenerate level: a run of consecutive eigenpair indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Level {
    pub start: usize,
    pub len: usize,
}

impl Level {
    pub fn degeneracy(&self) -> usize {
        self.len
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors and the grouping of
/// indices into degenerate levels.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    pub levels: Vec<Level>,
}

impl EigenSolution {
    fn assemble(eigenvalues: Vec<f64>, eigenvectors: Vec<StateVector>) -> Self {
        let levels = group_levels(&eigenvalues);
        EigenSolution { eigenvalues, eigenvectors, levels }
    }

    pub fn level_energy(&self, level: usize) -> f64 {
        self.eigenvalues[self.levels[level].start]
    }

    pub fn level_vectors(&self, level: usize) -> &[StateVector] {
        let l = self.levels[level];
        &self.eigenvectors[l.start..l.start + l.len]
    }

    pub fn degeneracy(&self, level: usize) -> usize {
        self.levels[level].len
    }

    /// Energies of the distinct levels, ascending.
    pub fn level_energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| self.eigenvalues[l.start]).collect()
    }

    /// Largest |⟨v_i, v_j⟩ − δ_ij| over all pairs.
    pub fn max_ortho_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.eigenvectors.len() {
            for j in i..self.eigenvectors.len() {
                let g = self.eigenvectors[i].dot(&self.eigenvectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest ‖Hv − λv‖ / max(1, |λ|) over all pairs.
    pub fn max_relative_residual(&self, h: &HamiltonianOperator) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &lam) in self.eigenvectors.iter().zip(&self.eigenvalues) {
            let hv = h.apply(v);
            let mut r2 = 0.0;
            for (x, y) in hv.amplitudes().iter().zip(v.amplitudes()) {
                r2 += (x - y * Complex64::new(lam, 0.0)).norm_sqr();
            }
            worst = worst.max(r2.sqrt() / lam.abs().max(1.0));
        }
        worst
    }
}

/// Two eigenvalues belong to one level when they differ by less than this.
pub fn degeneracy_tolerance(ground_energy: f64) -> f64 {
    1e-8 * ground_energy.abs().max(1.0)
}

/// Group ascending eigenvalues into degenerate levels by gap.
pub fn group_levels(eigenvalues: &[f64]) -> Vec<Level> {
    if eigenvalues.is_empty() {
        return Vec::new();
    }
    let tol = degeneracy_tolerance(eigenvalues[0]);
    let mut levels = Vec::new();
    let mut start = 0;
    for i in 1..eigenvalues.len() {
        if eigenvalues[i] - eigenvalues[i - 1] > tol {
            levels.push(Level { start, len: i - start });
            start = i;
        }
    }
    levels.push(Level { start, len: eigenvalues.len() - start });
    levels
}

/// Tunables for the iterative solver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub k: usize,
    pub seed: u64,
    /// Per-pair residual target: ‖Hv − λv‖ ≤ residual_tol · max(1, |λ|).
    pub residual_tol: f64,
    /// Matvec budget, per requested eigenpair.
    pub max_matvecs_per_pair: usize,
    /// A degenerate level may push the returned count up to k + this.
    pub multiplet_slack: usize,
}

impl SolverOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        SolverOptions {
            k,
            seed,
            residual_tol: 1e-9,
            max_matvecs_per_pair: 5000,
            multiplet_slack: 8,
        }
    }
}

/// The k smallest eigenpairs (never truncating a degenerate multiplet), using
/// the default options and the given seed for the random start vectors.
pub fn lowest_k(h: &HamiltonianOperator, k: usize, seed: u64) -> Result<EigenSolution> {
    lowest_k_with(h, &SolverOptions::new(k, seed))
}

pub fn lowest_k_with(h: &HamiltonianOperator, opts: &SolverOptions) -> Result<EigenSolution> {
    if opts.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let (vals, vecs) = lanczos::solve_lowest(h, opts)?;
    let eigenvectors = vecs
        .into_iter()
        .map(|v| StateVector::from_real(h.n_sites(), &v))
        .collect();
    Ok(EigenSolution::assemble(vals, eigenvectors))
}

/// Densely diagonalize the full spectrum. Guarded to N ≤ 14; beyond that the
/// matrix no longer fits in desk-scale memory.
pub fn dense_all(h: &HamiltonianOperator) -> Result<EigenSolution> {
    if h.n_sites() > 14 {
        return Err(Error::Config(format!(
            "dense diagonalization refused for n_sites = {} (limit 14)",
            h.n_sites()
        )));
    }
    let dim = h.dim();
    let mut a = Array2::<f64>::zeros((dim, dim));
    let mut unit = vec![0.0; dim];
    // H is symmetric, so assembling the image of e_s as row s still yields
    // the matrix built column-by-column from `apply`.
    for s in 0..dim {
        unit[s] = 1.0;
        let row = a.row_mut(s).into_slice().expect("row-major layout");
        h.apply_real(&unit, row);
        unit[s] = 0.0;
    }
    let (vals, vecs) = a
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Solver(format!("dense eigensolve failed: {e}")))?;
    let eigenvalues: Vec<f64> = vals.to_vec();
    let eigenvectors: Vec<StateVector> = (0..dim)
        .map(|i| {
            let col: Vec<f64> = vecs.column(i).iter().copied().collect();
            StateVector::from_real(h.n_sites(), &col)
        })
        .collect();
    Ok(EigenSolution::assemble(eigenvalues, eigenvectors))
}
