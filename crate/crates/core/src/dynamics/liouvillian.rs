use std::f64::consts::PI;

use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::Csr;

/// One term `coef · A ρ B`; `None` stands for the identity.
#[derive(Debug, Clone)]
struct Term {
    left: Option<Csr>,
    /// Transpose of the right factor, so that its columns are rows.
    right_t: Option<Csr>,
    coef: f64,
}

/// Lindblad generator in µs⁻¹ acting on density matrices,
/// L(ρ) = Kρ + ρK† + Σ γ cρc† with K = −i2π·10³ H − ½ Σ γ c†c.
///
/// Vectorization is column stacking: ρ_jk ↦ j + k·d.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dim: usize,
    terms: Vec<Term>,
    norm: f64,
}

impl Superoperator {
    /// `h` in GHz, collapse operators with rates in µs⁻¹.
    pub fn new(h: &DMatrix<C64>, collapses: &[(DMatrix<C64>, f64)], drop_tol: f64) -> Result<Self> {
        let d = h.nrows();
        let mut k = h * C64::new(0.0, -2.0 * PI * 1e3);
        for (c, rate) in collapses {
            if *rate < 0.0 {
                return Err(Error::Physicality(format!("negative collapse rate {rate}")));
            }
            if c.nrows() != d {
                return Err(Error::InvalidParameter("collapse operator dimension mismatch".into()));
            }
            k -= c.adjoint() * c * C64::new(0.5 * rate, 0.0);
        }
        let mut terms = vec![
            Term { left: Some(Csr::from_dense(&k, drop_tol)), right_t: None, coef: 1.0 },
            // ρK†: right factor K†, transposed = K*
            Term { left: None, right_t: Some(Csr::from_dense(&k.map(|z| z.conj()), drop_tol)), coef: 1.0 },
        ];
        for (c, rate) in collapses {
            if *rate == 0.0 {
                continue;
            }
            let cs = Csr::from_dense(c, drop_tol);
            // (c†)ᵀ = c*
            let ct = Csr::from_dense(&c.map(|z| z.conj()), drop_tol);
            terms.push(Term { left: Some(cs), right_t: Some(ct), coef: *rate });
        }
        Ok(Self::with_norm(d, terms))
    }

    /// From a precomputed K and jump list `(c, c*, rate)`.
    pub fn from_parts(k: Csr, jumps: Vec<(Csr, Csr, f64)>) -> Self {
        let d = k.nrows;
        let k_conj = Csr { val: k.val.iter().map(|z| z.conj()).collect(), ..k.clone() };
        let mut terms = vec![
            Term { left: Some(k), right_t: None, coef: 1.0 },
            Term { left: None, right_t: Some(k_conj), coef: 1.0 },
        ];
        for (c, c_conj, rate) in jumps {
            terms.push(Term { left: Some(c), right_t: Some(c_conj), coef: rate });
        }
        Self::with_norm(d, terms)
    }

    fn with_norm(dim: usize, terms: Vec<Term>) -> Self {
        let mut s = Superoperator { dim, terms, norm: 0.0 };
        s.norm = (0..dim)
            .flat_map(|j| (0..dim).map(move |k| (j, k)))
            .map(|(j, k)| s.diag(j, k).norm())
            .fold(0.0, f64::max);
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// max |L_ii|, a lower bound on every induced norm of L.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            let lhs = match &t.left {
                Some(a) => a.mul_dense(rho),
                None => rho.clone(),
            };
            let full = match &t.right_t {
                Some(bt) => Csr::dense_mul_t(&lhs, bt),
                None => lhs,
            };
            out.zip_apply(&full, |o, f| *o += f * t.coef);
        }
        out
    }

    /// Diagonal element L[(j,k),(j,k)].
    pub fn diag(&self, j: usize, k: usize) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                let a = t.left.as_ref().map_or(C64::new(1.0, 0.0), |a| a.get(j, j));
                let b = t.right_t.as_ref().map_or(C64::new(1.0, 0.0), |b| b.get(k, k));
                a * b * t.coef
            })
            .sum()
    }

    /// Entries of row (j,k) as ((m,l), value) pairs: L[(j,k),(m,l)] =
    /// Σ coef · A[j,m] · B[l,k].
    pub fn row_entries(&self, j: usize, k: usize, mut f: impl FnMut(usize, usize, C64)) {
        let one = C64::new(1.0, 0.0);
        for t in &self.terms {
            match (&t.left, &t.right_t) {
                (Some(a), Some(bt)) => {
                    for (m, av) in a.row(j) {
                        for (l, bv) in bt.row(k) {
                            f(m, l, av * bv * t.coef);
                        }
                    }
                }
                (Some(a), None) => {
                    for (m, av) in a.row(j) {
                        f(m, k, av * t.coef);
                    }
                }
                (None, Some(bt)) => {
                    for (l, bv) in bt.row(k) {
                        f(j, l, bv * t.coef);
                    }
                }
                (None, None) => f(j, k, one * t.coef),
            }
        }
    }

    /// Full sparse matrix in column-stacked ordering with row `replace_row`
    /// (if any) replaced by the trace functional.
    pub fn assemble(&self, replace_row: Option<usize>) -> Result<SparseColMat<usize, C64>> {
        let d = self.dim;
        let mut trip = Vec::new();
        for k in 0..d {
            for j in 0..d {
                let row = j + k * d;
                if Some(row) == replace_row {
                    continue;
                }
                self.row_entries(j, k, |m, l, v| trip.push(Triplet::new(row, m + l * d, v)));
            }
        }
        if let Some(r) = replace_row {
            for j in 0..d {
                trip.push(Triplet::new(r, j + j * d, C64::new(1.0, 0.0)));
            }
        }
        SparseColMat::try_new_from_triplets(d * d, d * d, &trip)
            .map_err(|e| Error::Solver(format!("sparse assembly: {e:?}")))
    }
}

/// Column-stacked vec of a square matrix.
pub fn vec_of(m: &DMatrix<C64>) -> Vec<C64> {
    m.as_slice().to_vec()
}

pub fn unvec(v: &[C64], d: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(d, d, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    fn random_op(d: usize, seed: u64) -> DMatrix<C64> {
        let mut s = seed;
        DMatrix::from_fn(d, d, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
            let b = ((s >> 13 & 0xffff) as f64 / 65536.0) - 0.5;
            C64::new(a, b)
        })
    }

    #[test]
    fn assembled_matrix_matches_apply() {
        let d = 4;
        let h0 = random_op(d, 1);
        let h = (&h0 + h0.adjoint()) * C64::new(0.001, 0.0);
        let c = random_op(d, 2);
        let sup = Superoperator::new(&h, &[(c, 0.7)], 0.0).unwrap();
        let rho = random_op(d, 3);
        let want = vec_of(&sup.apply(&rho));
        let m = sup.assemble(None).unwrap();
        let x = Mat::<C64>::from_fn(d * d, 1, |i, _| rho.as_slice()[i]);
        let y = &m * &x;
        for i in 0..d * d {
            assert!((y[(i, 0)] - want[i]).norm() < 1e-12);
        }
        // trace of L(ρ) vanishes
        assert!(sup.apply(&rho).trace().norm() < 1e-12);
    }
}
