//! Sparse complex matrices and a restarted GMRES used by the steady-state
//! solver.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<C64>,
}

impl Csr {
    /// Keeps entries with |x| > `drop_tol`.
    pub fn from_dense(m: &DMatrix<C64>, drop_tol: f64) -> Self {
        let (nr, nc) = m.shape();
        let mut row_ptr = Vec::with_capacity(nr + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for r in 0..nr {
            for c in 0..nc {
                let v = m[(r, c)];
                if v.norm() > drop_tol {
                    col.push(c);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        Csr { nrows: nr, ncols: nc, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col[span.clone()].iter().copied().zip(self.val[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).find(|&(k, _)| k == c).map(|(_, v)| v).unwrap_or_default()
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> Csr {
        let mut count = vec![0usize; self.ncols + 1];
        for &c in &self.col {
            count[c + 1] += 1;
        }
        for k in 0..self.ncols {
            count[k + 1] += count[k];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut col = vec![0; self.nnz()];
        let mut val = vec![C64::default(); self.nnz()];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let k = next[c];
                col[k] = r;
                val[k] = v;
                next[c] += 1;
            }
        }
        Csr { nrows: self.ncols, ncols: self.nrows, row_ptr, col, val }
    }

    /// `self · x` for a dense column-major matrix.
    pub fn mul_dense(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.nrows, x.ncols());
        for j in 0..x.ncols() {
            let xc = x.column(j);
            let mut oc = out.column_mut(j);
            for r in 0..self.nrows {
                let mut acc = C64::default();
                for (c, v) in self.row(r) {
                    acc += v * xc[c];
                }
                oc[r] = acc;
            }
        }
        out
    }

    /// `x · self`, given `self_t` = transpose of `self`.
    pub fn dense_mul_t(x: &DMatrix<C64>, self_t: &Csr) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(x.nrows(), self_t.nrows);
        for k in 0..self_t.nrows {
            let mut oc = out.column_mut(k);
            for (l, v) in self_t.row(k) {
                oc.axpy(v, &x.column(l), C64::new(1.0, 0.0));
            }
        }
        out
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct GmresReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with right preconditioning, solving `A x = b` until
/// ‖b − A x‖₂ ≤ `tol`. `x` holds the initial guess on entry.
pub fn gmres(
    apply: &dyn Fn(&[C64]) -> Vec<C64>,
    precond: &dyn Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    x: &mut Vec<C64>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresReport {
    let n = b.len();
    let mut iterations = 0;
    loop {
        let ax = apply(x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta <= tol || iterations >= max_iter {
            return GmresReport { iterations, residual: beta, converged: beta <= tol };
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut z: Vec<Vec<C64>> = Vec::new();
        let mut h = vec![vec![C64::default(); restart]; restart + 1];
        let mut cs = vec![C64::default(); restart];
        let mut sn = vec![C64::default(); restart];
        let mut g = vec![C64::default(); restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..restart {
            iterations += 1;
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for i in 0..=k {
                let hik = dot(&v[i], &w);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[i][k] + sn[i].conj() * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = C64::new(1.0, 0.0);
                sn[k] = C64::default();
            } else {
                cs[k] = a / den;
                sn[k] = bb / den;
            }
            h[k][k] = cs[k].conj() * a + sn[k].conj() * bb;
            h[k + 1][k] = C64::default();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            if g[k + 1].norm() <= tol * 0.5 || hn == 0.0 || iterations >= max_iter {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        // back substitution
        let mut y = vec![C64::default(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&z[j]) {
                *xi += yj * zi;
            }
        }
        debug_assert_eq!(x.len(), n);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpvReport {
    pub steps: usize,
    pub rejected: usize,
    /// Sum of the local error estimates.
    pub error: f64,
}

/// w = exp(t A) v by restarted Krylov projection with local error control
/// (Sidje's expv). `anorm` is any upper estimate of ‖A‖_∞ and `tol` bounds
/// the local error per unit time.
pub fn expv(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    v: &[C64],
    t: f64,
    anorm: f64,
    tol: f64,
    m: usize,
) -> Result<(Vec<C64>, ExpvReport), String> {
    let n = v.len();
    let m = m.min(n).max(2);
    const BTOL: f64 = 1e-7;
    const GAMMA: f64 = 0.9;
    const DELTA: f64 = 1.2;
    const MAX_REJECT: usize = 10;
    let round2 = |x: f64| {
        let s = 10f64.powf(x.log10().floor() - 1.0);
        (x / s).ceil() * s
    };
    let mut w = v.to_vec();
    let mut beta = norm(&w);
    let mut rep = ExpvReport { steps: 0, rejected: 0, error: 0.0 };
    if beta == 0.0 || t == 0.0 {
        return Ok((w, rep));
    }
    let anorm = anorm.max(f64::MIN_POSITIVE);
    let fact = ((m as f64 + 1.0) / std::f64::consts::E).powf(m as f64 + 1.0) * (2.0 * std::f64::consts::PI * (m as f64 + 1.0)).sqrt();
    let mut t_new = round2((1.0 / anorm) * ((fact * tol) / (4.0 * beta * anorm)).powf(1.0 / m as f64));
    let mut t_now = 0.0;
    while t_now < t {
        rep.steps += 1;
        let mut t_step = (t - t_now).min(t_new);
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        basis.push(w.iter().map(|x| x / beta).collect());
        let mut h = DMatrix::<C64>::zeros(m + 2, m + 2);
        let mut mb = m;
        let mut k1 = 2;
        for j in 0..m {
            let mut p = apply(&basis[j]);
            for (i, vi) in basis.iter().enumerate() {
                let hij = dot(vi, &p);
                h[(i, j)] = hij;
                for (pk, vk) in p.iter_mut().zip(vi) {
                    *pk -= hij * vk;
                }
            }
            let s = norm(&p);
            if s < BTOL {
                k1 = 0;
                mb = j + 1;
                t_step = t - t_now;
                break;
            }
            h[(j + 1, j)] = C64::new(s, 0.0);
            basis.push(p.into_iter().map(|x| x / s).collect());
        }
        let mut avnorm = 0.0;
        if k1 != 0 {
            h[(m + 1, m)] = C64::new(1.0, 0.0);
            avnorm = norm(&apply(&basis[m]));
        }
        let mut rejects = 0;
        let (f, err_loc, xm) = loop {
            let mx = mb + k1;
            let f = (h.view((0, 0), (mx, mx)) * C64::new(t_step, 0.0)).exp();
            if k1 == 0 {
                break (f, BTOL, 1.0 / m as f64);
            }
            let phi1 = (f[(m, 0)] * beta).norm();
            let phi2 = (f[(m + 1, 0)] * beta * avnorm).norm();
            let (err, xm) = if phi1 > 10.0 * phi2 {
                (phi2, 1.0 / m as f64)
            } else if phi1 > phi2 {
                (phi1 * phi2 / (phi1 - phi2), 1.0 / m as f64)
            } else {
                (phi1, 1.0 / (m as f64 - 1.0))
            };
            if err <= DELTA * t_step * tol {
                break (f, err, xm);
            }
            if rejects == MAX_REJECT {
                return Err(format!("Krylov step rejected {MAX_REJECT} times at t = {t_now}"));
            }
            t_step = round2(GAMMA * t_step * (t_step * tol / err).powf(xm));
            rejects += 1;
            rep.rejected += 1;
        };
        let mx = mb + if k1 > 0 { k1 - 1 } else { 0 };
        let mut next = vec![C64::default(); n];
        for (i, vi) in basis.iter().take(mx).enumerate() {
            let c = f[(i, 0)] * beta;
            for (x, y) in next.iter_mut().zip(vi) {
                *x += c * y;
            }
        }
        w = next;
        beta = norm(&w);
        t_now += t_step;
        t_new = round2(GAMMA * t_step * (t_step * tol / err_loc.max(f64::MIN_POSITIVE)).powf(xm));
        rep.error += err_loc;
        if !beta.is_finite() {
            return Err("Krylov propagation produced non-finite values".into());
        }
    }
    Ok((w, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_products_match_dense() {
        let a = DMatrix::from_fn(5, 5, |r, c| if (r + 2 * c) % 3 == 0 { C64::new(r as f64, c as f64 - 1.0) } else { C64::default() });
        let x = DMatrix::from_fn(5, 5, |r, c| C64::new((r * c) as f64 * 0.1, r as f64 - c as f64));
        let s = Csr::from_dense(&a, 0.0);
        assert!((s.mul_dense(&x) - &a * &x).norm() < 1e-12);
        assert!((Csr::dense_mul_t(&x, &s.transpose()) - &x * &a).norm() < 1e-12);
        assert_eq!(s.get(0, 0), a[(0, 0)]);
    }

    #[test]
    fn expv_matches_dense_exponential() {
        let n = 12;
        let a = DMatrix::<C64>::from_fn(n, n, |i, j| {
            let x = ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5;
            let y = ((i * 5 + j * 2) % 13) as f64 / 13.0 - 0.5;
            C64::new(x - if i == j { 2.0 } else { 0.0 }, 3.0 * y)
        });
        let v: Vec<C64> = (0..n).map(|i| C64::new(1.0 / (i + 1) as f64, 0.0)).collect();
        let t = 1.7;
        let want = (&a * C64::new(t, 0.0)).exp() * nalgebra::DVector::from_vec(v.clone());
        let anorm = (0..n).map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        let apply = |x: &[C64]| (&a * nalgebra::DVector::from_vec(x.to_vec())).as_slice().to_vec();
        let (w, rep) = expv(apply, &v, t, anorm, 1e-12, 6).unwrap();
        let err = w.iter().zip(want.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err} after {} steps", rep.steps);
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                C64::new(4.0 + r as f64 * 0.1, 1.0)
            } else if c == r + 1 {
                C64::new(-1.0, 0.3)
            } else if r == c + 2 {
                C64::new(0.5, 0.0)
            } else {
                C64::default()
            }
        });
        let b: Vec<C64> = (0..n).map(|k| C64::new(1.0, k as f64 * 0.01)).collect();
        let apply = |x: &[C64]| (&a * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
        let ident = |x: &[C64]| x.to_vec();
        let mut x = vec![C64::default(); n];
        let rep = gmres(&apply, &ident, &b, &mut x, 1e-12, 8, 500);
        assert!(rep.converged, "{rep:?}");
        let r = apply(&x);
        assert!(r.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-10));
    }
}
