use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::liouvillian::{unvec, vec_of, Superoperator};
use super::state::DensityMatrix;
use super::{Drive, LindbladModel};
use crate::error::{Error, Result};
use crate::hilbert::{cavity_lowering, excitation_blocks, Basis};
use crate::linalg::{gmres, Csr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyMethod {
    /// Direct below `direct_limit` Liouvillian rows, iterative above.
    Auto,
    /// Sparse LU of the full Liouvillian in the product basis.
    Direct,
    /// Preconditioned GMRES in the dressed basis.
    Iterative,
}

#[derive(Debug, Clone)]
pub struct SteadyOptions {
    pub method: SteadyMethod,
    /// Residual bound ‖L(ρ)‖ ≤ tol · ‖L‖.
    pub tol: f64,
    /// Dressed-state pairs closer than this (MHz) are solved exactly in the
    /// preconditioner.
    pub slow_window_mhz: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub direct_limit: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            method: SteadyMethod::Auto,
            tol: 1e-10,
            slow_window_mhz: 2.0,
            restart: 40,
            max_iter: 2000,
            direct_limit: 6000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub rho: DensityMatrix,
    /// Frobenius norm of L(ρ).
    pub residual: f64,
    /// max |L_ii| in the solution basis.
    pub norm: f64,
    pub iterations: usize,
    pub method: SteadyMethod,
}

pub fn steady_state(m: &LindbladModel) -> Result<DensityMatrix> {
    steady_state_with(m, &SteadyOptions::default()).map(|r| r.rho)
}

pub fn steady_state_with(m: &LindbladModel, opts: &SteadyOptions) -> Result<SteadyReport> {
    if !m.collapses.iter().any(|c| c.rate > 0.0) {
        return Err(Error::Degeneracy("no dissipative channel, every diagonal state is stationary".into()));
    }
    let d = m.params.dim();
    let direct = match opts.method {
        SteadyMethod::Direct => true,
        SteadyMethod::Iterative => false,
        SteadyMethod::Auto => d * d <= opts.direct_limit,
    };
    if direct {
        steady_direct(m, opts)
    } else {
        DressedSolver::new(m)?.solve(m.nu_frame, m.drive, opts)
    }
}

fn lu_solve(a: &SparseColMat<usize, C64>, rhs: &[C64], refine: usize) -> Result<Vec<C64>> {
    let lu = a.sp_lu().map_err(|e| Error::Degeneracy(format!("singular Liouvillian ({e:?})")))?;
    let n = rhs.len();
    let b = Mat::<C64>::from_fn(n, 1, |i, _| rhs[i]);
    let mut x = lu.solve(&b);
    for _ in 0..refine {
        let r = &b - a * &x;
        x += lu.solve(&r);
    }
    let out: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degeneracy("singular Liouvillian (non-finite solution)".into()));
    }
    Ok(out)
}

fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn finish(
    rho: DMatrix<C64>,
    sup: &Superoperator,
    m: &LindbladModel,
    opts: &SteadyOptions,
    iterations: usize,
    method: SteadyMethod,
) -> Result<SteadyReport> {
    let residual = sup.apply(&rho).norm();
    if residual > opts.tol * sup.norm() {
        return Err(Error::Solver(format!(
            "steady-state residual {residual:e} above {:e}",
            opts.tol * sup.norm()
        )));
    }
    let rho = DensityMatrix::from_entries(rho, m.h_rot.basis())?;
    rho.check()?;
    Ok(SteadyReport { rho, residual, norm: sup.norm(), iterations, method })
}

fn steady_direct(m: &LindbladModel, opts: &SteadyOptions) -> Result<SteadyReport> {
    let sup = m.superoperator()?;
    let d = sup.dim();
    let solve_with_row = |row: usize| -> Result<DMatrix<C64>> {
        let a = sup.assemble(Some(row))?;
        let mut b = vec![C64::default(); d * d];
        b[row] = C64::new(1.0, 0.0);
        Ok(unvec(&lu_solve(&a, &b, 2)?, d))
    };
    let rho = solve_with_row(0)?;
    // a unique kernel gives the same answer whichever population row carries
    // the trace constraint
    let other = solve_with_row((d - 1) + (d - 1) * d)?;
    let spread = (&rho - &other).norm();
    if !(spread <= 1e-6) {
        return Err(Error::Degeneracy(format!("kernel dimension > 1 (solutions differ by {spread:e})")));
    }
    finish(hermitize(&rho), &sup, m, opts, 0, SteadyMethod::Direct)
}

/// Dressed basis of the undriven rotating-frame Hamiltonian together with the
/// dissipators written in it. Independent of the frame frequency and of the
/// drive, so one instance serves a whole frequency/power grid.
pub struct DressedSolver {
    dim: usize,
    basis: Basis,
    /// Columns are dressed states in the product basis.
    u: DMatrix<C64>,
    /// Dressed energies at `nu_ref` (MHz).
    energies: Vec<f64>,
    n_exc: Vec<usize>,
    nu_ref: f64,
    a: DMatrix<C64>,
    decay: DMatrix<C64>,
    jumps: Vec<(Csr, Csr, f64)>,
}

impl DressedSolver {
    pub fn new(m: &LindbladModel) -> Result<Self> {
        let p = &m.params;
        let d = p.dim();
        let blocks = excitation_blocks(&m.h_rot, p)?;
        let mut u = DMatrix::<C64>::zeros(d, d);
        let mut energies = Vec::with_capacity(d);
        let mut n_exc = Vec::with_capacity(d);
        for blk in &blocks {
            let s = blk.size();
            let re = DMatrix::from_fn(s, s, |r, c| blk.matrix[(r, c)].re * 1e3);
            let eig = SymmetricEigen::new(re);
            let mut order: Vec<usize> = (0..s).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
            for k in order {
                let col = energies.len();
                for (r, &i) in blk.indices.iter().enumerate() {
                    u[(i, col)] = C64::new(eig.eigenvectors[(r, k)], 0.0);
                }
                energies.push(eig.eigenvalues[k]);
                n_exc.push(blk.n_exc);
            }
        }
        let ut = u.adjoint();
        let dressed = |op: &DMatrix<C64>| &ut * op * &u;
        let clean = |x: DMatrix<C64>| {
            let scale = x.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            x.map(|z| if z.norm() <= 1e-15 * scale { C64::default() } else { z })
        };
        let a = clean(dressed(cavity_lowering(p).entries()));
        let mut decay = DMatrix::zeros(d, d);
        let mut jumps = Vec::new();
        for c in &m.collapses {
            if c.rate == 0.0 {
                continue;
            }
            let ct = clean(dressed(c.op.entries()));
            decay -= ct.adjoint() * &ct * C64::new(0.5 * c.rate, 0.0);
            jumps.push((Csr::from_dense(&ct, 0.0), Csr::from_dense(&ct.map(|z| z.conj()), 0.0), c.rate));
        }
        Ok(DressedSolver { dim: d, basis: m.h_rot.basis(), u, energies, n_exc, nu_ref: m.nu_frame, a, decay: clean(decay), jumps })
    }

    /// Dressed energies (MHz) in the frame rotating at `nu_frame`.
    pub fn energies_at(&self, nu_frame: f64) -> Vec<f64> {
        let shift = (nu_frame - self.nu_ref) * 1e3;
        self.energies.iter().zip(&self.n_exc).map(|(e, &n)| e - shift * n as f64).collect()
    }

    fn superoperator(&self, nu_frame: f64, drive: Option<Drive>) -> Result<(Superoperator, Vec<f64>)> {
        let e = self.energies_at(nu_frame);
        let mut k = self.decay.clone();
        for (j, ej) in e.iter().enumerate() {
            k[(j, j)] += C64::new(0.0, -2.0 * PI * ej);
        }
        if let Some(dr) = drive {
            if dr.eps_d != 0.0 {
                let ph = C64::from_polar(dr.eps_d, dr.phase);
                let hd = &self.a * ph + self.a.adjoint() * ph.conj();
                k += hd * C64::new(0.0, -2.0 * PI);
            }
        }
        Ok((Superoperator::from_parts(Csr::from_dense(&k, 0.0), self.jumps.clone()), e))
    }

    /// Steady state for the frame/drive frequency `nu_frame` (GHz).
    pub fn solve(&self, nu_frame: f64, drive: Option<Drive>, opts: &SteadyOptions) -> Result<SteadyReport> {
        let d = self.dim;
        let (sup, e) = self.superoperator(nu_frame, drive)?;

        // slow sector: pairs with |E_j − E_k| below the window
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&x, &y| e[x].total_cmp(&e[y]));
        let mut slow_of = vec![u32::MAX; d * d];
        let mut slow: Vec<usize> = Vec::new();
        let mut lo = 0;
        for (pos, &j) in order.iter().enumerate() {
            while e[j] - e[order[lo]] >= opts.slow_window_mhz {
                lo += 1;
            }
            for &k in &order[lo..=pos] {
                for (a, b) in [(j, k), (k, j)] {
                    let idx = a + b * d;
                    if slow_of[idx] == u32::MAX {
                        slow_of[idx] = slow.len() as u32;
                        slow.push(idx);
                    }
                }
            }
        }
        let trace_row = 0usize;
        let ns = slow.len();
        let mut trip = Vec::new();
        for (r, &idx) in slow.iter().enumerate() {
            if idx == trace_row {
                for j in 0..d {
                    trip.push(Triplet::new(r, slow_of[j + j * d] as usize, C64::new(1.0, 0.0)));
                }
                continue;
            }
            let (j, k) = (idx % d, idx / d);
            sup.row_entries(j, k, |m, l, v| {
                let c = slow_of[m + l * d];
                if c != u32::MAX {
                    trip.push(Triplet::new(r, c as usize, v));
                }
            });
        }
        let a_ss = SparseColMat::<usize, C64>::try_new_from_triplets(ns, ns, &trip)
            .map_err(|e| Error::Solver(format!("slow-sector assembly: {e:?}")))?;
        let lu = a_ss.sp_lu().map_err(|e| Error::Degeneracy(format!("singular slow sector ({e:?})")))?;
        let fast_diag: Vec<C64> = (0..d * d)
            .map(|idx| if slow_of[idx] == u32::MAX { sup.diag(idx % d, idx / d) } else { C64::default() })
            .collect();

        let apply = |x: &[C64]| -> Vec<C64> {
            let xm = unvec(x, d);
            let mut y = vec_of(&sup.apply(&xm));
            y[trace_row] = xm.trace();
            y
        };
        let precond = |r: &[C64]| -> Vec<C64> {
            let rs = Mat::<C64>::from_fn(ns, 1, |i, _| r[slow[i]]);
            let xs = lu.solve(&rs);
            let mut out: Vec<C64> = r.iter().zip(&fast_diag).map(|(v, dg)| if *dg == C64::default() { C64::default() } else { v / dg }).collect();
            for (i, &idx) in slow.iter().enumerate() {
                out[idx] = xs[(i, 0)];
            }
            out
        };
        let mut b = vec![C64::default(); d * d];
        b[trace_row] = C64::new(1.0, 0.0);
        let mut x = precond(&b);
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Degeneracy("singular slow sector (non-finite solution)".into()));
        }
        let target = opts.tol * sup.norm();
        let mut iterations = 0;
        let mut tol = 0.1 * target;
        let mut residual = f64::INFINITY;
        for _ in 0..4 {
            let rep = gmres(&apply, &precond, &b, &mut x, tol, opts.restart, opts.max_iter);
            iterations += rep.iterations;
            let xm = hermitize(&unvec(&x, d));
            residual = sup.apply(&xm).norm();
            if residual <= target {
                let rho = &self.u * xm * self.u.adjoint();
                return finish_dressed(hermitize(&rho), self.basis, residual, sup.norm(), iterations);
            }
            tol *= 0.1;
        }
        Err(Error::Solver(format!(
            "GMRES stalled after {iterations} iterations: residual {residual:e} > {target:e}"
        )))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn finish_dressed(rho: DMatrix<C64>, basis: Basis, residual: f64, norm: f64, iterations: usize) -> Result<SteadyReport> {
    let rho = DensityMatrix::from_entries(rho, basis)?;
    rho.check()?;
    Ok(SteadyReport { rho, residual, norm, iterations, method: SteadyMethod::Iterative })
}
