//! Deflated thick-restart Lanczos on real amplitude vectors.
//!
//! Plain Lanczos cannot see the multiplicity of a degenerate eigenvalue: one
//! Krylov stream contains a single direction per eigenspace. The solver
//! therefore runs in rounds. Each round starts from a fresh seeded random
//! vector orthogonal to everything locked so far, builds a fully
//! reorthogonalized Krylov basis (thick-restarting when the basis fills up),
//! and locks Ritz pairs whose true residual passes the tolerance. Rounds
//! repeat until a final round proves the orthogonal complement holds nothing
//! below the last returned level.
//!
//! The projected matrix is filled with *measured* Gram-Schmidt coefficients,
//! which makes thick restarts trivial: after a restart the retained Ritz
//! values sit on the diagonal and the couplings to the continuation vector
//! re-appear through the next projection.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{degeneracy_tolerance, SolverOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianOperator;

/// Below this dimension all the vector helpers run serially.
const PARALLEL_DIM_MIN: usize = 1 << 13;
/// Ritz extraction cadence, in Lanczos steps.
const CHECK_EVERY: usize = 8;
/// Consecutive no-progress rounds tolerated before giving up.
const MAX_STALLED_ROUNDS: usize = 3;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense row-major stack of basis vectors.
struct RowMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    fn new(dim: usize) -> Self {
        RowMatrix { dim, data: Vec::new() }
    }

    fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn push_row(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim);
        self.data.extend_from_slice(v);
    }

    fn clear(&mut self) {
        self.data.clear();
    }

    /// coeffs[r] = row_r · w
    fn project_coeffs(&self, w: &[f64]) -> Vec<f64> {
        let rows = self.rows();
        if rows == 0 {
            return Vec::new();
        }
        if self.dim >= PARALLEL_DIM_MIN && rows >= 4 {
            (0..rows)
                .into_par_iter()
                .map(|r| dot(self.row(r), w))
                .collect()
        } else {
            (0..rows).map(|r| dot(self.row(r), w)).collect()
        }
    }

    /// w -= Σ_r coeffs[r] · row_r, accumulated in fixed row order per element.
    fn subtract_combination(&self, coeffs: &[f64], w: &mut [f64]) {
        let rows = self.rows();
        debug_assert_eq!(coeffs.len(), rows);
        if rows == 0 {
            return;
        }
        let dim = self.dim;
        let data = &self.data;
        let kernel = |base: usize, chunk: &mut [f64]| {
            for (r, &c) in coeffs.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let row = &data[r * dim + base..r * dim + base + chunk.len()];
                for (o, x) in chunk.iter_mut().zip(row) {
                    *o -= c * x;
                }
            }
        };
        if dim >= PARALLEL_DIM_MIN && rows >= 2 {
            let chunk = 1 << 13;
            w.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(ci, c)| kernel(ci * chunk, c));
        } else {
            kernel(0, w);
        }
    }

    /// Σ_r weights[r] · row_r
    fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let rows = self.rows();
        debug_assert_eq!(weights.len(), rows);
        let dim = self.dim;
        let data = &self.data;
        let kernel = |base: usize, chunk: &mut [f64]| {
            for (r, &c) in weights.iter().enumerate() {
                let row = &data[r * dim + base..r * dim + base + chunk.len()];
                for (o, x) in chunk.iter_mut().zip(row) {
                    *o += c * x;
                }
            }
        };
        if dim >= PARALLEL_DIM_MIN && rows >= 2 {
            let chunk = 1 << 13;
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(ci, c)| kernel(ci * chunk, c));
        } else {
            kernel(0, &mut out);
        }
        out
    }
}

/// Symmetric projected matrix, stored dense with a fixed stride.
struct ProjectedMatrix {
    stride: usize,
    a: Vec<f64>,
    n: usize,
}

impl ProjectedMatrix {
    fn new(stride: usize) -> Self {
        ProjectedMatrix { stride, a: vec![0.0; stride * stride], n: 0 }
    }

    fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.stride + j] = v;
        self.a[j * self.stride + i] = v;
        self.n = self.n.max(i + 1).max(j + 1);
    }

    fn clear(&mut self) {
        self.a.iter_mut().for_each(|x| *x = 0.0);
        self.n = 0;
    }

    /// Eigendecomposition of the leading m×m block, ascending.
    fn eigh(&self, m: usize) -> Result<(Vec<f64>, Array2<f64>)> {
        let mut block = Array2::<f64>::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                block[(i, j)] = self.a[i * self.stride + j];
            }
        }
        let (vals, vecs) = block
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Solver(format!("projected eigensolve failed: {e}")))?;
        Ok((vals.to_vec(), vecs))
    }
}

enum RoundEnd {
    /// Locked this many new eigenpairs.
    Progress(usize),
    /// The complement's smallest eigenvalue provably exceeds the cutoff.
    Separated,
    /// Nothing left: the locked set spans the whole space.
    Exhausted,
}

struct Engine<'a> {
    h: &'a HamiltonianOperator,
    dim: usize,
    tol_rel: f64,
    locked: RowMatrix,
    locked_vals: Vec<f64>,
    matvecs: usize,
    budget: usize,
    seed: u64,
    round_counter: u64,
    cycle_dim: usize,
}

impl<'a> Engine<'a> {
    fn matvec(&mut self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if self.matvecs >= self.budget {
            return Err(Error::Solver(format!(
                "matvec budget exhausted after {} applications with {} pairs locked",
                self.matvecs,
                self.locked_vals.len()
            )));
        }
        self.matvecs += 1;
        self.h.apply_real(v, out);
        Ok(())
    }

    fn tol_abs(&self, theta: f64) -> f64 {
        self.tol_rel * theta.abs().max(1.0)
    }

    /// A fresh normalized random vector orthogonal to the locked set and to
    /// `extra`, or None when the complement is numerically empty.
    fn random_in_complement(&mut self, extra: Option<&RowMatrix>) -> Option<Vec<f64>> {
        for _ in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ self.round_counter.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            self.round_counter += 1;
            let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            let n0 = norm(&v);
            v.iter_mut().for_each(|x| *x /= n0);
            for _ in 0..2 {
                let c = self.locked.project_coeffs(&v);
                self.locked.subtract_combination(&c, &mut v);
                if let Some(b) = extra {
                    let c = b.project_coeffs(&v);
                    b.subtract_combination(&c, &mut v);
                }
            }
            let n = norm(&v);
            if n > 1e-6 {
                v.iter_mut().for_each(|x| *x /= n);
                return Some(v);
            }
        }
        None
    }

    /// Orthogonalize `v` against locked vectors and `basis` (twice), in place.
    fn orthogonalize(&self, basis: &RowMatrix, v: &mut [f64]) {
        for _ in 0..2 {
            let c = self.locked.project_coeffs(v);
            self.locked.subtract_combination(&c, v);
            let c = basis.project_coeffs(v);
            basis.subtract_combination(&c, v);
        }
    }

    /// Verify a Ritz vector's true residual; lock it if it passes.
    fn try_lock_vector(&mut self, y: Vec<f64>) -> Result<Option<f64>> {
        let mut y = y;
        // Clean against already-locked vectors, then normalize.
        for _ in 0..2 {
            let c = self.locked.project_coeffs(&y);
            self.locked.subtract_combination(&c, &mut y);
        }
        let n = norm(&y);
        if n < 1e-8 {
            return Ok(None);
        }
        y.iter_mut().for_each(|x| *x /= n);
        let mut hy = vec![0.0; self.dim];
        self.matvec(&y, &mut hy)?;
        let theta = dot(&y, &hy);
        let mut r2 = 0.0;
        for (a, b) in hy.iter().zip(&y) {
            let d = a - theta * b;
            r2 += d * d;
        }
        let resid = r2.sqrt();
        if resid <= self.tol_abs(theta) {
            self.locked.push_row(&y);
            self.locked_vals.push(theta);
            Ok(Some(theta))
        } else {
            Ok(None)
        }
    }

    /// One deflation round. `cutoff`, when given, is the energy of the last
    /// wanted eigenpair: the round may end by proving the complement minimum
    /// sits above cutoff + 2·deg_tol.
    fn run_round(&mut self, cutoff: Option<f64>, want: usize) -> Result<RoundEnd> {
        let dim = self.dim;
        let cycle_dim = self.cycle_dim.min(dim);
        let mut basis = RowMatrix::new(dim);
        let mut tmat = ProjectedMatrix::new(cycle_dim + 1);

        match self.random_in_complement(None) {
            Some(q0) => basis.push_row(&q0),
            None => return Ok(RoundEnd::Exhausted),
        }

        let mut newly_locked = 0usize;
        let mut hq = vec![0.0; dim];
        let mut steps_since_check = 0usize;

        loop {
            // One Lanczos step on the last basis row.
            let j = basis.rows() - 1;
            self.matvec(basis.row(j), &mut hq)?;
            let mut w = hq.clone();
            let norm0 = norm(&w);
            let lc = self.locked.project_coeffs(&w);
            self.locked.subtract_combination(&lc, &mut w);
            let mut c = basis.project_coeffs(&w);
            basis.subtract_combination(&c, &mut w);
            if norm(&w) < 0.7 * norm0 {
                // Cancellation: one more Gram-Schmidt pass.
                let lc2 = self.locked.project_coeffs(&w);
                self.locked.subtract_combination(&lc2, &mut w);
                let c2 = basis.project_coeffs(&w);
                basis.subtract_combination(&c2, &mut w);
                for (ci, c2i) in c.iter_mut().zip(&c2) {
                    *ci += c2i;
                }
            }
            for (i, ci) in c.iter().enumerate() {
                tmat.set_sym(i, j, *ci);
            }
            let beta = norm(&w);
            steps_since_check += 1;

            let scale = self.locked_vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let breakdown = beta <= 1e-12 * scale.max(norm0);
            let at_capacity = basis.rows() == cycle_dim;

            if breakdown || at_capacity || steps_since_check >= CHECK_EVERY {
                steps_since_check = 0;
                let m = basis.rows();
                let (thetas, umat) = tmat.eigh(m)?;
                let deg_tol = degeneracy_tolerance(
                    self.locked_vals
                        .iter()
                        .copied()
                        .fold(thetas[0], f64::min),
                );

                // Lock converged Ritz pairs among the lowest few.
                let scan_to = m.min(want.saturating_sub(newly_locked) + 4);
                let mut locked_this_check = Vec::new();
                for i in 0..scan_to {
                    let est = beta * umat[(m - 1, i)].abs();
                    if breakdown || est < 0.6 * self.tol_abs(thetas[i]) {
                        let weights: Vec<f64> = (0..m).map(|r| umat[(r, i)]).collect();
                        let y = basis.combine(&weights);
                        if self.try_lock_vector(y)?.is_some() {
                            locked_this_check.push(i);
                            newly_locked += 1;
                        }
                    }
                }

                // Separation proof: the complement minimum is pinned by the
                // lowest unlocked Ritz value once its residual estimate is
                // small enough to trust its location.
                if let Some(cut) = cutoff {
                    if let Some(&i0) = (0..m)
                        .filter(|i| !locked_this_check.contains(i))
                        .collect::<Vec<_>>()
                        .first()
                    {
                        let est = beta * umat[(m - 1, i0)].abs();
                        let loose = 1e-6 * thetas[i0].abs().max(1.0);
                        if est < loose && thetas[i0] - est > cut + 2.0 * deg_tol {
                            return Ok(RoundEnd::Separated);
                        }
                    }
                }

                if newly_locked >= want && want > 0 {
                    return Ok(RoundEnd::Progress(newly_locked));
                }

                if breakdown {
                    // Krylov stream closed. Anything convergent was locked
                    // above; restart the stream with fresh randomness.
                    if self.locked.rows() == dim {
                        return Ok(if newly_locked > 0 {
                            RoundEnd::Progress(newly_locked)
                        } else {
                            RoundEnd::Exhausted
                        });
                    }
                    let retained = self.retain_after_check(&basis, &thetas, &umat, &locked_this_check, want);
                    match self.restart_basis(&mut basis, &mut tmat, retained, None) {
                        Ok(()) => continue,
                        Err(()) => {
                            return Ok(if newly_locked > 0 {
                                RoundEnd::Progress(newly_locked)
                            } else {
                                RoundEnd::Exhausted
                            });
                        }
                    }
                }

                if at_capacity || !locked_this_check.is_empty() {
                    let retained = self.retain_after_check(&basis, &thetas, &umat, &locked_this_check, want);
                    let mut cont = w.clone();
                    cont.iter_mut().for_each(|x| *x /= beta);
                    if self.restart_basis(&mut basis, &mut tmat, retained, Some(cont)).is_err() {
                        return Ok(if newly_locked > 0 {
                            RoundEnd::Progress(newly_locked)
                        } else {
                            RoundEnd::Exhausted
                        });
                    }
                    continue;
                }
                // Cadence check with nothing to act on: fall through and extend.
            }

            if basis.rows() < cycle_dim {
                let mut q = w;
                q.iter_mut().for_each(|x| *x /= beta);
                tmat.set_sym(j, j + 1, beta);
                basis.push_row(&q);
            }
        }
    }

    /// Materialize the lowest unlocked Ritz vectors to keep across a restart.
    fn retain_after_check(
        &self,
        basis: &RowMatrix,
        thetas: &[f64],
        umat: &Array2<f64>,
        locked_idx: &[usize],
        want: usize,
    ) -> Vec<(f64, Vec<f64>)> {
        let m = basis.rows();
        let keep = (want + 6).min(12).min(m);
        let mut out = Vec::new();
        for i in 0..m {
            if out.len() >= keep {
                break;
            }
            if locked_idx.contains(&i) {
                continue;
            }
            let weights: Vec<f64> = (0..m).map(|r| umat[(r, i)]).collect();
            out.push((thetas[i], basis.combine(&weights)));
        }
        out
    }

    /// Rebuild the basis from retained Ritz vectors plus a continuation
    /// vector (the normalized Lanczos residual, or fresh randomness after a
    /// breakdown). Err(()) means the complement is exhausted.
    #[allow(clippy::result_unit_err)]
    fn restart_basis(
        &mut self,
        basis: &mut RowMatrix,
        tmat: &mut ProjectedMatrix,
        retained: Vec<(f64, Vec<f64>)>,
        continuation: Option<Vec<f64>>,
    ) -> std::result::Result<(), ()> {
        let old = std::mem::replace(basis, RowMatrix::new(self.dim));
        drop(old);
        tmat.clear();
        for (idx, (theta, mut y)) in retained.into_iter().enumerate() {
            // Orthonormalize against locked and previously retained rows.
            self.orthogonalize(basis, &mut y);
            let n = norm(&y);
            if n < 1e-8 {
                continue;
            }
            y.iter_mut().for_each(|x| *x /= n);
            let row = basis.rows();
            debug_assert!(row <= idx + 1);
            basis.push_row(&y);
            tmat.set_sym(row, row, theta);
        }
        let mut cont = match continuation {
            Some(c) => c,
            None => match self.random_in_complement(Some(basis)) {
                Some(c) => c,
                None => return if basis.rows() > 0 { Ok(()) } else { Err(()) },
            },
        };
        self.orthogonalize(basis, &mut cont);
        let n = norm(&cont);
        if n > 1e-8 {
            cont.iter_mut().for_each(|x| *x /= n);
            basis.push_row(&cont);
        } else if basis.rows() == 0 {
            return Err(());
        }
        Ok(())
    }
}

/// Compute the k lowest eigenpairs with complete multiplets. Returns
/// ascending eigenvalues and matching eigenvectors; the count may exceed k by
/// up to `multiplet_slack` to avoid splitting a degenerate level.
pub(crate) fn solve_lowest(
    h: &HamiltonianOperator,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = h.dim();
    let k = opts.k.min(dim);
    let mut engine = Engine {
        h,
        dim,
        tol_rel: opts.residual_tol,
        locked: RowMatrix::new(dim),
        locked_vals: Vec::new(),
        matvecs: 0,
        budget: opts.max_matvecs_per_pair.saturating_mul(k + 1),
        seed: opts.seed,
        round_counter: 0,
        cycle_dim: (6 * k + 60).clamp(48, 132).min(dim),
    };

    let mut stalled = 0usize;
    loop {
        // Sort the locked values to plan this round.
        let mut order: Vec<usize> = (0..engine.locked_vals.len()).collect();
        order.sort_by(|&a, &b| engine.locked_vals[a].total_cmp(&engine.locked_vals[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| engine.locked_vals[i]).collect();

        let (cutoff, want, k_eff) = if sorted.len() < k {
            (None, k - sorted.len(), k)
        } else {
            // Extend k to the end of the level containing index k−1.
            let deg_tol = degeneracy_tolerance(sorted[0]);
            let mut k_eff = k;
            while k_eff < sorted.len() && sorted[k_eff] - sorted[k_eff - 1] <= deg_tol {
                k_eff += 1;
            }
            if k_eff > k + opts.multiplet_slack {
                return Err(Error::MultipletOverflow(format!(
                    "level at index {k} spans more than {} states",
                    opts.multiplet_slack
                )));
            }
            (Some(sorted[k_eff - 1]), 1, k_eff)
        };

        if sorted.len() == dim {
            return Ok(assemble(engine, &order, k_eff.min(dim)));
        }

        match engine.run_round(cutoff, want)? {
            RoundEnd::Progress(n) => {
                stalled = if n == 0 { stalled + 1 } else { 0 };
                if stalled >= MAX_STALLED_ROUNDS {
                    return Err(Error::Solver(format!(
                        "no progress after {} rounds ({} pairs locked)",
                        MAX_STALLED_ROUNDS,
                        sorted.len()
                    )));
                }
            }
            RoundEnd::Separated => {
                debug_assert!(sorted.len() >= k_eff);
                return Ok(assemble(engine, &order, k_eff));
            }
            RoundEnd::Exhausted => {
                let n = engine.locked_vals.len();
                if n == 0 {
                    return Err(Error::Solver("no eigenpairs could be locked".into()));
                }
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| engine.locked_vals[a].total_cmp(&engine.locked_vals[b]));
                return Ok(assemble(engine, &order, k_eff.min(n)));
            }
        }
    }
}

fn assemble(engine: Engine<'_>, order: &[usize], take: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut vals = Vec::with_capacity(take);
    let mut vecs = Vec::with_capacity(take);
    for &i in order.iter().take(take) {
        vals.push(engine.locked_vals[i]);
        vecs.push(engine.locked.row(i).to_vec());
    }
    (vals, vecs)
}
