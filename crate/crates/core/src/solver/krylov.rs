//! Right-preconditioned restarted GMRES and CG on the normal equations.

use rayon::prelude::*;

const CHUNK: usize = 1 << 14;

/// Deterministic parallel dot product (fixed chunking, sequential combine).
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yv, xv)| *yv += alpha * xv);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖` at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Restarted GMRES for `A P y = b`, returning `x = P y`.
pub(crate) fn gmres(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
    restart: usize,
) -> (Vec<f64>, KrylovOutcome) {
    let len = b.len();
    let mut x = vec![0.0; len];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return (x, KrylovOutcome { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let target = rel_tol * b_norm;
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut beta = b_norm;
    while iterations < max_iters {
        let m = restart.min(max_iters - iterations);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&precond(&basis[k]));
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(&w, v);
                h[i][k] = hik;
                axpy(-hik, v, &mut w);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= target || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back-substitute the small triangular system
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; len];
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &basis[j], &mut update);
        }
        axpy(1.0, &precond(&update), &mut x);
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bv, av)| bv - av).collect();
        beta = norm(&r);
        if beta <= target {
            return (x, KrylovOutcome { iterations, relative_residual: beta / b_norm, converged: true });
        }
    }
    (x, KrylovOutcome { iterations, relative_residual: beta / b_norm, converged: false })
}

/// CG on `(AP)^T (AP) y = (AP)^T b`, returning `x = P y`. `P` must be symmetric.
pub(crate) fn cgnr(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    apply_transpose: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> (Vec<f64>, KrylovOutcome) {
    let len = b.len();
    let b_norm = norm(b);
    let mut y = vec![0.0; len];
    if b_norm == 0.0 {
        return (y, KrylovOutcome { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let target = rel_tol * b_norm;
    let op = |v: &[f64]| apply(&precond(v));
    let op_t = |v: &[f64]| precond(&apply_transpose(v));
    let mut r = b.to_vec();
    let mut z = op_t(&r);
    let mut p = z.clone();
    let mut zz = dot(&z, &z);
    let mut r_norm = b_norm;
    let mut iterations = 0;
    while iterations < max_iters && r_norm > target {
        let q = op(&p);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = zz / qq;
        axpy(alpha, &p, &mut y);
        axpy(-alpha, &q, &mut r);
        z = op_t(&r);
        let zz_new = dot(&z, &z);
        let beta = zz_new / zz;
        zz = zz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(pv, zv)| *pv = zv + beta * *pv);
        r_norm = norm(&r);
        iterations += 1;
    }
    let x = precond(&y);
    let ax = apply(&x);
    let true_res = norm(&b.iter().zip(&ax).map(|(bv, av)| bv - av).collect::<Vec<_>>());
    let rel = true_res / b_norm;
    (x, KrylovOutcome { iterations, relative_residual: rel, converged: rel <= rel_tol * 10.0 && r_norm <= target })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(v: &[f64]) -> Vec<f64> {
        // nonsymmetric tridiagonal: 4 on diagonal, -1 below, -2 above
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut s = 4.0 * v[i];
                if i > 0 {
                    s -= v[i - 1];
                }
                if i + 1 < n {
                    s -= 2.0 * v[i + 1];
                }
                s
            })
            .collect()
    }

    fn tridiag_t(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut s = 4.0 * v[i];
                if i > 0 {
                    s -= 2.0 * v[i - 1];
                }
                if i + 1 < n {
                    s -= v[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn gmres_solves_nonsymmetric() {
        let b: Vec<f64> = (0..200).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let id = |v: &[f64]| v.to_vec();
        let (x, out) = gmres(&tridiag, &id, &b, 1e-12, 1000, 15);
        assert!(out.converged, "{out:?}");
        let r: f64 = tridiag(&x).iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        assert!(r <= 1e-11 * norm(&b));
    }

    #[test]
    fn cgnr_solves_nonsymmetric() {
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let id = |v: &[f64]| v.to_vec();
        let (x, out) = cgnr(&tridiag, &tridiag_t, &id, &b, 1e-11, 2000);
        assert!(out.converged, "{out:?}");
        let r: f64 = tridiag(&x).iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        assert!(r <= 1e-9 * norm(&b));
    }

    #[test]
    fn zero_rhs() {
        let id = |v: &[f64]| v.to_vec();
        let (x, out) = gmres(&tridiag, &id, &[0.0; 5], 1e-10, 10, 5);
        assert!(out.converged && x.iter().all(|v| *v == 0.0));
    }
}
