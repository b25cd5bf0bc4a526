use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Incomplete LU factorization with the sparsity pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0<T> {
    lu: CsrMatrix<T>,
    diag: Vec<usize>,
}

impl<T: Real> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let mut lu = a.clone();
        let diag = lu.diagonal_positions()?;
        let n = lu.nrows();
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in lo..hi {
                marker[lu.cols[k]] = k;
            }
            for k in lo..hi {
                let j = lu.cols[k];
                if j >= i {
                    break;
                }
                let pivot = lu.vals[diag[j]];
                let lij = lu.vals[k] / pivot;
                lu.vals[k] = lij;
                for kk in diag[j] + 1..lu.row_ptr[j + 1] {
                    let c = lu.cols[kk];
                    let pos = marker[c];
                    if pos != usize::MAX {
                        let upd = lij * lu.vals[kk];
                        lu.vals[pos] -= upd;
                    }
                }
            }
            for k in lo..hi {
                marker[lu.cols[k]] = usize::MAX;
            }
            let d = lu.vals[diag[i]];
            if !d.is_finite() || d.abs() <= T::min_positive_value() {
                return Err(Error::Solver(format!("zero pivot in ILU(0) at row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// Solves `L U z = r` in place.
    pub fn apply(&self, z: &mut [T]) {
        let lu = &self.lu;
        let n = lu.nrows();
        for i in 0..n {
            let mut s = z[i];
            for k in lu.row_ptr[i]..self.diag[i] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = s / lu.vals[self.diag[i]];
        }
    }
}
