use super::{norm2, CsrMatrix, Ilu0};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions<T> {
    pub restart: usize,
    pub max_iter: usize,
    /// Relative residual target `|b - A x| / |b|`.
    pub tol: T,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresReport<T> {
    pub iterations: usize,
    pub relative_residual: T,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt.
pub fn gmres<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    x: &mut [T],
    precond: &Ilu0<T>,
    opts: &GmresOptions<T>,
) -> Result<GmresReport<T>> {
    let n = a.nrows();
    let m = opts.restart.max(1);
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(GmresReport {
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
        });
    }
    let mut v: Vec<Vec<T>> = vec![vec![T::zero(); n]; m + 1];
    let mut h = vec![vec![T::zero(); m]; m + 1];
    let (mut cs, mut sn) = (vec![T::zero(); m], vec![T::zero(); m]);
    let mut g = vec![T::zero(); m + 1];
    let mut w = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut total = 0;

    while total < opts.max_iter {
        let r = a.residual(x, b);
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(GmresReport {
                iterations: total,
                relative_residual: rel,
                converged: true,
            });
        }
        if !beta.is_finite() {
            return Err(Error::Solver("GMRES residual became non-finite".into()));
        }
        for (vi, ri) in v[0].iter_mut().zip(&r) {
            *vi = *ri / beta;
        }
        g.iter_mut().for_each(|e| *e = T::zero());
        g[0] = beta;

        let mut k_used = 0;
        for k in 0..m {
            z.copy_from_slice(&v[k]);
            precond.apply(&mut z);
            a.mul_vec(&z, &mut w);
            for j in 0..=k {
                let hjk = w.iter().zip(&v[j]).map(|(&p, &q)| p * q).sum::<T>();
                h[j][k] = hjk;
                for (wi, vj) in w.iter_mut().zip(&v[j]) {
                    *wi -= hjk * *vj;
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            if hn > T::zero() {
                for (vi, wi) in v[k + 1].iter_mut().zip(&w) {
                    *vi = *wi / hn;
                }
            }
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == T::zero() {
                cs[k] = T::one();
                sn[k] = T::zero();
            } else {
                cs[k] = h[k][k] / d;
                sn[k] = h[k + 1][k] / d;
            }
            h[k][k] = d;
            h[k + 1][k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            total += 1;
            k_used = k + 1;
            let est = g[k + 1].abs() / bnorm;
            if est <= opts.tol || hn == T::zero() || total >= opts.max_iter {
                break;
            }
        }

        // back substitution for the Krylov coefficients
        let mut y = vec![T::zero(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            if h[i][i] == T::zero() {
                return Err(Error::Solver(
                    "GMRES breakdown: singular Hessenberg matrix".into(),
                ));
            }
            y[i] = s / h[i][i];
        }
        w.iter_mut().for_each(|e| *e = T::zero());
        for (j, yj) in y.iter().enumerate() {
            for (wi, vj) in w.iter_mut().zip(&v[j]) {
                *wi += *yj * *vj;
            }
        }
        precond.apply(&mut w);
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += *wi;
        }
    }

    let r = a.residual(x, b);
    let final_rel = norm2(&r) / bnorm;
    Ok(GmresReport {
        iterations: total,
        relative_residual: final_rel,
        converged: final_rel <= opts.tol,
    })
}
