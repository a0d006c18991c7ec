use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{Basis, OperatorMatrix};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Density matrix on a product or oscillator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
    basis: Basis,
}

impl DensityMatrix {
    /// Wraps a matrix without checking the physical invariants.
    pub fn from_entries(entries: DMatrix<C64>, basis: Basis) -> Result<Self> {
        if entries.nrows() != basis.dim() || entries.ncols() != basis.dim() {
            return Err(Error::InvalidParameter(format!(
                "density matrix is {}x{} but basis has dimension {}",
                entries.nrows(),
                entries.ncols(),
                basis.dim()
            )));
        }
        Ok(DensityMatrix { entries, basis })
    }

    /// |ψ⟩⟨ψ| for a normalized ψ.
    pub fn pure(psi: &DVector<C64>, basis: Basis) -> Result<Self> {
        let nrm = psi.norm();
        if (nrm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("state norm {nrm} != 1")));
        }
        Self::from_entries(psi * psi.adjoint(), basis)
    }

    /// |k⟩⟨k| for basis index `k`.
    pub fn basis_state(k: usize, basis: Basis) -> Result<Self> {
        let d = basis.dim();
        if k >= d {
            return Err(Error::Range { index: k, max: d - 1 });
        }
        let mut m = DMatrix::zeros(d, d);
        m[(k, k)] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { entries: m, basis })
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_jk|² for Hermitian ρ
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for k in j..d {
                worst = worst.max((self.entries[(j, k)] - self.entries[(k, j)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Checks trace, Hermiticity and positivity at the module tolerances.
    pub fn check(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Physicality(format!("trace {tr} differs from 1")));
        }
        let h = self.hermiticity_defect();
        if h > HERMITICITY_TOL {
            return Err(Error::Physicality(format!("Hermiticity defect {h:e}")));
        }
        let m = self.min_eigenvalue();
        if m < -POSITIVITY_TOL {
            return Err(Error::Physicality(format!("negative eigenvalue {m:e}")));
        }
        Ok(())
    }

    pub fn expect(&self, op: &OperatorMatrix) -> Result<C64> {
        if op.basis() != self.basis {
            return Err(Error::InvalidParameter("operator and state bases differ".into()));
        }
        // Tr(Aρ) = Σ_jk A_jk ρ_kj
        let a = op.entries();
        let mut acc = C64::default();
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                acc += a[(j, k)] * self.entries[(k, j)];
            }
        }
        Ok(acc)
    }

    /// Reduced oscillator state Tr_q ρ.
    pub fn oscillator_state(&self) -> DensityMatrix {
        match self.basis {
            Basis::Product { levels, n_max } => {
                let d = n_max + 1;
                let m = DMatrix::from_fn(d, d, |n, m| {
                    (0..levels).map(|x| self.entries[(n * levels + x, m * levels + x)]).sum()
                });
                DensityMatrix { entries: m, basis: Basis::Oscillator { n_max } }
            }
            _ => self.clone(),
        }
    }

    /// Reduced transmon state Tr_O ρ.
    pub fn transmon_state(&self) -> DensityMatrix {
        match self.basis {
            Basis::Product { levels, n_max } => {
                let m = DMatrix::from_fn(levels, levels, |x, y| {
                    (0..=n_max).map(|n| self.entries[(n * levels + x, n * levels + y)]).sum()
                });
                DensityMatrix { entries: m, basis: Basis::Transmon { levels } }
            }
            _ => self.clone(),
        }
    }

    /// Photon-number distribution p(n) of the oscillator.
    pub fn photon_distribution(&self) -> Vec<f64> {
        let o = self.oscillator_state();
        (0..o.dim()).map(|n| o.entries[(n, n)].re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.photon_distribution().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Coherent amplitude ⟨a⟩ of the oscillator.
    pub fn field_amplitude(&self) -> C64 {
        let o = self.oscillator_state();
        (1..o.dim()).map(|n| (n as f64).sqrt() * o.entries[(n, n - 1)]).sum()
    }
}

/// Total-variation distance ½ Σ |p − q| over the common support; mass of the
/// longer vector beyond the shorter one counts fully.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Poisson(λ) probabilities for n = 0..=n_max.
pub fn poisson(lambda: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut p = (-lambda).exp();
    for n in 0..=n_max {
        if n > 0 {
            p *= lambda / n as f64;
        }
        out.push(p);
    }
    out
}
