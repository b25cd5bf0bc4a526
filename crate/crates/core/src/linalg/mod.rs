//! Sparse matrices and the linear solvers behind every slab solve.
//!
//! Systems are assembled into a CSR matrix whose pattern is fixed up front
//! from element connectivity and row-equilibrated before solving. The
//! default solver is a sparse LU; restarted GMRES with an ILU(0)
//! preconditioner and a banded LU on a reverse Cuthill-McKee ordering are
//! fallbacks.

mod banded;
mod gmres;
mod ilu;
mod sparse_lu;

pub use banded::{banded_lu_solve, reverse_cuthill_mckee};
pub use gmres::{gmres, GmresOptions, GmresReport};
pub use ilu::Ilu0;
pub use sparse_lu::sparse_lu_solve;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds the pattern of a block system: nodes `a` and `b` couple when
    /// they share an element, and every node carries `block` unknowns
    /// numbered `node * block + k`.
    pub fn from_elements<'a>(
        node_count: usize,
        elements: impl Iterator<Item = &'a [usize]>,
        block: usize,
    ) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        for el in elements {
            for &a in el {
                adj[a].extend_from_slice(el);
            }
        }
        for (i, list) in adj.iter_mut().enumerate() {
            list.push(i);
            list.sort_unstable();
            list.dedup();
        }
        let nrows = node_count * block;
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for list in &adj {
            for _ in 0..block {
                for &b in list {
                    cols.extend((0..block).map(|k| b * block + k));
                }
                row_ptr.push(cols.len());
            }
        }
        let vals = vec![T::zero(); cols.len()];
        CsrMatrix {
            nrows,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= nrows {
                return Err(Error::Assembly(format!(
                    "entry ({r}, {c}) outside a {nrows}x{nrows} matrix"
                )));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(CsrMatrix {
            nrows,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.cols
    }

    pub fn values(&self) -> &[T] {
        &self.vals
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.vals
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// Storage index of `(r, c)` if it is in the pattern.
    #[inline]
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].binary_search(&c).ok().map(|k| a + k)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.position(r, c).map_or(T::zero(), |k| self.vals[k])
    }

    /// Adds `v` at `(r, c)`; the entry must exist in the pattern.
    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: T) -> Result<()> {
        match self.position(r, c) {
            Some(k) => {
                self.vals[k] += v;
                Ok(())
            }
            None => Err(Error::Assembly(format!(
                "entry ({r}, {c}) not in sparsity pattern"
            ))),
        }
    }

    pub fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = T::zero());
    }

    /// Replaces row `r` by the identity row.
    pub fn set_identity_row(&mut self, r: usize) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        for k in a..b {
            self.vals[k] = if self.cols[k] == r {
                T::one()
            } else {
                T::zero()
            };
        }
    }

    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut s = T::zero();
            for k in a..b {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yr = s;
        }
    }

    /// `b - A x`.
    pub fn residual(&self, x: &[T], b: &[T]) -> Vec<T> {
        let mut ax = vec![T::zero(); self.nrows];
        self.mul_vec(x, &mut ax);
        b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect()
    }

    /// Diagonal storage indices; fails if a diagonal entry is missing.
    pub(crate) fn diagonal_positions(&self) -> Result<Vec<usize>> {
        (0..self.nrows)
            .map(|r| {
                self.position(r, r)
                    .ok_or_else(|| Error::Solver(format!("row {r} has no diagonal entry")))
            })
            .collect()
    }
}

pub(crate) fn norm2<T: Real>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: &'static str,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Systems with at most this many stored band entries may use the direct
/// fallback.
const BANDED_LIMIT: usize = 60_000_000;

/// Solves `A x = b` to relative residual `tol`, starting from `x`.
pub fn solve<T: Real>(a: &CsrMatrix<T>, b: &[T], x: &mut [T], tol: T) -> Result<SolveReport> {
    let n = a.nrows();
    if b.len() != n || x.len() != n {
        return Err(Error::Solver(format!(
            "dimension mismatch: matrix {n}, rhs {}, unknowns {}",
            b.len(),
            x.len()
        )));
    }
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(SolveReport {
            method: "trivial",
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    // Row equilibration keeps pivots well scaled when coefficients span many
    // orders of magnitude.
    let mut scaled = a.clone();
    let mut sb = b.to_vec();
    for r in 0..n {
        let (lo, hi) = (scaled.row_ptr[r], scaled.row_ptr[r + 1]);
        let m = scaled.vals[lo..hi]
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()));
        if m > T::zero() {
            let s = m.recip();
            scaled.vals[lo..hi].iter_mut().for_each(|v| *v *= s);
            sb[r] *= s;
        }
    }

    let direct_tol = tol.max(T::epsilon().sqrt());
    let direct = sparse_lu_solve(&scaled, &sb).and_then(|sol| {
        let rel = norm2(&scaled.residual(&sol, &sb)) / norm2(&sb);
        if rel <= direct_tol {
            Ok(sol)
        } else {
            Err(Error::Solver(format!(
                "sparse LU residual {:e}",
                rel.to_f64().unwrap_or(f64::NAN)
            )))
        }
    });
    let first_failure = match direct {
        Ok(sol) => {
            x.copy_from_slice(&sol);
            return Ok(SolveReport {
                method: "sparse-lu",
                iterations: 1,
                relative_residual: (norm2(&a.residual(x, b)) / bnorm)
                    .to_f64()
                    .unwrap_or(f64::NAN),
            });
        }
        Err(e) => e.to_string(),
    };
    iterative(a, b, &scaled, &sb, x, tol)
        .map_err(|e| Error::Solver(format!("{first_failure}; {e}")))
}

fn iterative<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    scaled: &CsrMatrix<T>,
    sb: &[T],
    x: &mut [T],
    tol: T,
) -> Result<SolveReport> {
    let bnorm = norm2(b);
    let gmres_result = Ilu0::new(scaled).and_then(|ilu| {
        let opts = GmresOptions {
            restart: 60,
            max_iter: 3000,
            tol,
        };
        gmres(scaled, sb, x, &ilu, &opts)
    });
    // Convergence is judged on the equilibrated system; a stall just short
    // of `tol` is accepted within a factor of ten.
    let accept = tol * T::lit(10.0);
    let report = match gmres_result {
        Ok(r) if r.relative_residual <= accept => r,
        other => {
            let why = match other {
                Ok(r) => format!(
                    "GMRES stalled at relative residual {:e}",
                    r.relative_residual.to_f64().unwrap_or(f64::NAN)
                ),
                Err(e) => e.to_string(),
            };
            return fallback(a, b, scaled, sb, x, tol, &why);
        }
    };
    let scaled_rel = norm2(&scaled.residual(x, sb)) / norm2(sb);
    if !(scaled_rel <= accept * T::lit(10.0)) {
        return fallback(
            a,
            b,
            scaled,
            sb,
            x,
            tol,
            &format!(
                "GMRES residual drift {:e}",
                scaled_rel.to_f64().unwrap_or(f64::NAN)
            ),
        );
    }
    let true_rel = norm2(&a.residual(x, b)) / bnorm;
    Ok(SolveReport {
        method: "gmres-ilu0",
        iterations: report.iterations,
        relative_residual: true_rel.to_f64().unwrap_or(f64::NAN),
    })
}

fn fallback<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    scaled: &CsrMatrix<T>,
    sb: &[T],
    x: &mut [T],
    tol: T,
    why: &str,
) -> Result<SolveReport> {
    let perm = reverse_cuthill_mckee(scaled);
    let band = banded::bandwidth(scaled, &perm);
    if a.nrows().saturating_mul(3 * band + 1) > BANDED_LIMIT {
        return Err(Error::Solver(format!(
            "{why}; system of {} unknowns too large for the direct fallback",
            a.nrows()
        )));
    }
    let sol = banded_lu_solve(scaled, sb, &perm)?;
    x.copy_from_slice(&sol);
    let rel = norm2(&scaled.residual(x, sb)) / norm2(sb);
    if !rel.is_finite() || rel > tol.max(T::epsilon().sqrt()) {
        return Err(Error::Solver(format!(
            "{why}; direct fallback reached only relative residual {:e}",
            rel.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(SolveReport {
        method: "banded-lu",
        iterations: 1,
        relative_residual: (norm2(&a.residual(x, b)) / norm2(b))
            .to_f64()
            .unwrap_or(f64::NAN),
    })
}
