use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Direct solve by sparse LU with partial pivoting, carried out in double
/// precision whatever `T` is.
pub fn sparse_lu_solve<T: Real>(a: &CsrMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.nrows();
    let f64_of = |v: T| v.to_f64().unwrap_or(f64::NAN);
    let mut entries = Vec::with_capacity(a.nnz());
    for r in 0..n {
        let (cols, vals) = a.row(r);
        entries.extend(
            cols.iter()
                .zip(vals)
                .map(|(&c, &v)| Triplet::new(r, c, f64_of(v))),
        );
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
        .map_err(|e| Error::Solver(format!("sparse matrix construction failed: {e:?}")))?;
    // an exactly zero pivot panics inside the factorization
    let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| m.sp_lu()))
        .map_err(|_| Error::Solver("sparse LU hit a zero pivot (singular matrix)".into()))?
        .map_err(|e| Error::Solver(format!("sparse LU factorization failed: {e:?}")))?;
    let mut x = Mat::<f64>::from_fn(n, 1, |i, _| f64_of(b[i]));
    lu.solve_in_place(x.as_mut());
    let out: Vec<T> = (0..n).map(|i| T::lit(x[(i, 0)])).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver(
            "sparse LU produced non-finite values (singular matrix)".into(),
        ));
    }
    Ok(out)
}
