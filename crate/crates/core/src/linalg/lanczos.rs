use faer::{Mat, Side};

use super::Operator;
use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic pseudo-random start vector.
fn start_vector(n: usize) -> Vec<f64> {
    let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..n)
        .map(|_| {
            s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

fn sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::not_converged("dense eigensolver", format!("{e:?}")))?;
    let s = e.S().column_vector();
    let vals: Vec<f64> = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((vals, e.U().to_owned()))
}

fn project_out(w: &mut [f64], locked: &[Vec<f64>]) {
    for b in locked {
        let c = dot(b, w);
        for (wi, bi) in w.iter_mut().zip(b) {
            *wi -= c * bi;
        }
    }
}

/// The `k` smallest eigenpairs of a symmetric positive definite operator,
/// given the action of its inverse. Vectors have unit Euclidean norm.
///
/// Repeated passes in the orthogonal complement of the pairs already found
/// recover the partners of degenerate eigenvalues.
pub fn lanczos_smallest<F>(n: usize, k: usize, tol: f64, mut apply_inv: F) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: FnMut(&mut [f64]) -> Result<()>,
{
    if k == 0 || k > n {
        return Err(Error::param(format!("cannot compute {k} eigenpairs of a size-{n} operator")));
    }
    let (mut vals, mut vecs) = lanczos_pass(n, k, tol, &mut apply_inv, &[], 0)?;
    for pass in 1..6 {
        let want = k.min(n - vecs.len());
        if want == 0 {
            break;
        }
        let (nv, nvec) = lanczos_pass(n, want, tol, &mut apply_inv, &vecs, pass)?;
        let kth = vals[vals.len() - 1];
        let found = nv.iter().any(|v| *v < kth * (1.0 - 1e-10));
        let mut all: Vec<(f64, Vec<f64>)> = vals.into_iter().zip(vecs).chain(nv.into_iter().zip(nvec)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        all.truncate(k);
        vals = all.iter().map(|p| p.0).collect();
        vecs = all.into_iter().map(|p| p.1).collect();
        if !found {
            break;
        }
    }
    Ok((vals, vecs))
}

fn lanczos_pass<F>(
    n: usize,
    k: usize,
    tol: f64,
    apply_inv: &mut F,
    locked: &[Vec<f64>],
    seed: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: FnMut(&mut [f64]) -> Result<()>,
{
    let room = n - locked.len();
    let k = k.min(room);
    let max_steps = room.min((4 * k + 80).max(3 * k + 200));
    let mut v = start_vector(n);
    v.rotate_left(seed * 7919 % n.max(1));
    project_out(&mut v, locked);
    project_out(&mut v, locked);
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut next_check = (k + 10).min(max_steps);
    let (vals, vecs) = loop {
        let j = basis.len() - 1;
        let mut w = basis[j].clone();
        apply_inv(&mut w)?;
        project_out(&mut w, locked);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        for _ in 0..2 {
            project_out(&mut w, locked);
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let bnorm = dot(&w, &w).sqrt();
        let m = alpha.len();
        let exhausted = bnorm <= 1e-14 * a.abs() || m == max_steps;
        if m >= next_check || exhausted {
            let mut t = Mat::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let (vals, vecs) = sym_eigen(&t)?;
            let converged = m >= k
                && (0..k).all(|q| {
                    let idx = m - 1 - q;
                    (bnorm * vecs[(m - 1, idx)]).abs() <= tol * vals[idx].abs()
                });
            if converged || exhausted {
                if !converged && m < k {
                    return Err(Error::not_converged("lanczos", "Krylov space exhausted"));
                }
                if !converged {
                    return Err(Error::not_converged("lanczos", format!("{k} pairs not converged in {m} steps")));
                }
                break (vals, vecs);
            }
            next_check = (m + 10 + m / 4).min(max_steps);
        }
        beta.push(bnorm);
        basis.push(w.iter().map(|x| x / bnorm).collect());
    };
    let m = alpha.len();
    let mut out_vals = Vec::with_capacity(k);
    let mut out_vecs = Vec::with_capacity(k);
    for q in 0..k {
        let idx = m - 1 - q;
        out_vals.push(1.0 / vals[idx]);
        let mut x = vec![0.0; n];
        for (i, b) in basis.iter().enumerate().take(m) {
            let c = vecs[(i, idx)];
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += c * bi;
            }
        }
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        out_vecs.push(x);
    }
    Ok((out_vals, out_vecs))
}

/// The `k` smallest eigenpairs from a dense decomposition.
pub fn dense_eigen(op: &Operator, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.n;
    if k == 0 || k > n {
        return Err(Error::param(format!("cannot compute {k} eigenpairs of a size-{n} operator")));
    }
    let d = op.to_dense();
    let a = Mat::<f64>::from_fn(n, n, |i, j| d[i * n + j]);
    let (vals, vecs) = sym_eigen(&a)?;
    let out_vecs = (0..k).map(|q| (0..n).map(|i| vecs[(i, q)]).collect()).collect();
    Ok((vals[..k].to_vec(), out_vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainGrid, DomainKind, DomainSpec};
    use crate::linalg::Solver;

    #[test]
    fn lanczos_agrees_with_dense() {
        let g = DomainGrid::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.08)).unwrap();
        let s = Solver::new(&g).unwrap();
        let (dv, _) = dense_eigen(&s.op, 8).unwrap();
        let (lv, lvec) = lanczos_smallest(s.n(), 8, 1e-13, |x: &mut [f64]| s.apply_inverse(x)).unwrap();
        for q in 0..8 {
            assert!((dv[q] - lv[q]).abs() < 1e-9 * dv[q], "{q}: {} vs {}", dv[q], lv[q]);
            let mut y = vec![0.0; s.n()];
            s.op.apply(0.0, &lvec[q], &mut y);
            let rq = dot(&lvec[q], &y);
            assert!((rq - lv[q]).abs() < 1e-8 * lv[q]);
        }
    }
}
