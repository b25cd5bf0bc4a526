use std::collections::VecDeque;

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Reverse Cuthill-McKee ordering of the symmetrized pattern. `perm[k]` is
/// the original index placed at position `k`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for &c in a.row(r).0 {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (adj[i].len(), i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut nb: Vec<usize> = adj[i].iter().copied().filter(|&j| !visited[j]).collect();
            nb.sort_by_key(|&j| (adj[j].len(), j));
            for j in nb {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Half bandwidth of `A` under the ordering `perm`.
pub(crate) fn bandwidth<T: Real>(a: &CsrMatrix<T>, perm: &[usize]) -> usize {
    let mut pos = vec![0; perm.len()];
    for (k, &i) in perm.iter().enumerate() {
        pos[i] = k;
    }
    (0..a.nrows())
        .flat_map(|r| a.row(r).0.iter().map(move |&c| (r, c)))
        .map(|(r, c)| pos[r].abs_diff(pos[c]))
        .max()
        .unwrap_or(0)
}

/// Direct solve by banded LU with partial pivoting after permuting rows and
/// columns symmetrically by `perm`.
pub fn banded_lu_solve<T: Real>(a: &CsrMatrix<T>, b: &[T], perm: &[usize]) -> Result<Vec<T>> {
    let n = a.nrows();
    let mut pos = vec![0; n];
    for (k, &i) in perm.iter().enumerate() {
        pos[i] = k;
    }
    let kl = bandwidth(a, perm);
    let ku = 2 * kl;
    let width = kl + ku + 1;
    // row i stores columns i - kl ..= i + ku at offsets 0..width
    let mut band = vec![T::zero(); n * width];
    let idx = |i: usize, j: usize| i * width + (j + kl - i);
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            band[idx(pos[r], pos[c])] += v;
        }
    }
    let mut rhs: Vec<T> = perm.iter().map(|&i| b[i]).collect();

    let scale = band.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    for k in 0..n {
        let last = (k + kl).min(n - 1);
        let mut p = k;
        let mut best = band[idx(k, k)].abs();
        for i in k + 1..=last {
            let v = band[idx(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > scale * T::epsilon() * T::from_count(n)) {
            return Err(Error::Solver(format!(
                "matrix is singular to working precision (pivot {k})"
            )));
        }
        let jmax = (k + ku).min(n - 1);
        if p != k {
            for j in k..=jmax {
                band.swap(idx(k, j), idx(p, j));
            }
            rhs.swap(k, p);
        }
        let pivot = band[idx(k, k)];
        for i in k + 1..=last {
            let f = band[idx(i, k)] / pivot;
            if f == T::zero() {
                continue;
            }
            band[idx(i, k)] = T::zero();
            for j in k + 1..=jmax {
                let u = band[idx(k, j)];
                band[idx(i, j)] -= f * u;
            }
            let rk = rhs[k];
            rhs[i] -= f * rk;
        }
    }
    let mut y = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..=(k + ku).min(n - 1) {
            s -= band[idx(k, j)] * y[j];
        }
        y[k] = s / band[idx(k, k)];
    }
    let mut x = vec![T::zero(); n];
    for (k, &i) in perm.iter().enumerate() {
        x[i] = y[k];
    }
    Ok(x)
}
