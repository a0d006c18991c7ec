use std::collections::HashMap;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64 as C64;

use super::liouvillian::{unvec, vec_of};
use super::state::DensityMatrix;
use super::LindbladModel;
use crate::error::{Error, Result};
use crate::linalg::expv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveMethod {
    /// Krylov when ‖L‖_∞ · t_end is below `krylov_limit`, implicit otherwise.
    Auto,
    /// TR-BDF2, or the trapezoidal rule without dissipation.
    Implicit,
    /// Krylov exponential of the Liouvillian.
    Krylov,
}

/// Step control for [`evolve_with`]. Implicit step sizes move on a
/// power-of-two ladder so factorizations are reused.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub method: EvolveMethod,
    /// Implicit: bound on the local error per step (max entry of ρ).
    /// Krylov: bound on the local error per µs (Frobenius norm).
    pub tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub krylov_dim: usize,
    pub krylov_limit: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            method: EvolveMethod::Auto,
            tol: 1e-8,
            h_init: 1.0 / 1024.0,
            h_min: 1e-9,
            h_max: 8.0,
            krylov_dim: 30,
            krylov_limit: 5e4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest |Tr ρ − 1| seen at the output times.
    pub max_trace_drift: f64,
}

pub fn evolve(m: &LindbladModel, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    evolve_with(m, rho0, t_grid, &EvolveOptions::default()).map(|t| t.states)
}

struct Stepper {
    n: usize,
    /// Implicit coefficient d in I − d h L.
    d: f64,
    bdf2: bool,
    l: SparseColMat<usize, C64>,
    l_trip: Vec<Triplet<usize, usize, C64>>,
    cache: HashMap<u64, Lu<usize, C64>>,
}

// TR-BDF2 with γ = 2 − √2; both implicit stages use I − d h L with d = γ/2.
// Without dissipation the plain trapezoidal step is used instead: its Cayley
// transform of the anti-Hermitian generator is unitary, so purity is kept.
const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

impl Stepper {
    fn lu(&mut self, h: f64) -> Result<&Lu<usize, C64>> {
        let key = h.to_bits();
        if !self.cache.contains_key(&key) {
            if self.cache.len() >= 12 {
                self.cache.clear();
            }
            let mut trip: Vec<Triplet<usize, usize, C64>> = self
                .l_trip
                .iter()
                .map(|t| Triplet::new(t.row, t.col, -t.val * (self.d * h)))
                .collect();
            trip.extend((0..self.n).map(|i| Triplet::new(i, i, C64::new(1.0, 0.0))));
            let m = SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
                .map_err(|e| Error::Solver(format!("step matrix: {e:?}")))?;
            let lu = m.sp_lu().map_err(|e| Error::Solver(format!("step factorization: {e:?}")))?;
            self.cache.insert(key, lu);
        }
        Ok(&self.cache[&key])
    }

    fn step(&mut self, y: &Mat<C64>, h: f64) -> Result<Mat<C64>> {
        let ly = &self.l * y;
        let n = self.n;
        let dh = self.d * h;
        let r1 = Mat::<C64>::from_fn(n, 1, |i, _| y[(i, 0)] + ly[(i, 0)] * dh);
        let bdf2 = self.bdf2;
        let lu = self.lu(h)?;
        let yg = lu.solve(&r1);
        if !bdf2 {
            return Ok(yg);
        }
        let w = GAMMA * (2.0 - GAMMA);
        let c = (1.0 - GAMMA).powi(2);
        let r2 = Mat::<C64>::from_fn(n, 1, |i, _| (yg[(i, 0)] - y[(i, 0)] * c) / w);
        Ok(lu.solve(&r2))
    }
}

fn max_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    (0..a.nrows()).map(|i| (a[(i, 0)] - b[(i, 0)]).norm()).fold(0.0, f64::max)
}

/// Integration of the master equation on `t_grid`: Krylov exponential or
/// adaptive TR-BDF2 (trapezoidal when no channel dissipates) with local error
/// from step doubling. No renormalization is applied; trace drift is reported.
pub fn evolve_with(m: &LindbladModel, rho0: &DensityMatrix, t_grid: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    if t_grid.is_empty() {
        return Ok(Trajectory { times: vec![], states: vec![], accepted_steps: 0, rejected_steps: 0, max_trace_drift: 0.0 });
    }
    if t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("time grid must be ascending from 0".into()));
    }
    if rho0.basis() != m.h_rot.basis() {
        return Err(Error::InvalidParameter("initial state basis does not match the model".into()));
    }
    let sup = m.superoperator()?;
    let d = sup.dim();
    let n = d * d;
    let l = sup.assemble(None)?;
    let l_trip: Vec<Triplet<usize, usize, C64>> = l
        .triplet_iter()
        .map(|t| Triplet::new(t.row, t.col, *t.val))
        .collect();
    let t_end = *t_grid.last().unwrap();
    let anorm = inf_norm(&l_trip, n);
    let krylov = match opts.method {
        EvolveMethod::Krylov => true,
        EvolveMethod::Implicit => false,
        EvolveMethod::Auto => anorm * t_end <= opts.krylov_limit,
    };
    if krylov {
        return evolve_krylov(&l, anorm, rho0, t_grid, opts, d);
    }
    let dissipative = m.collapses.iter().any(|c| c.rate > 0.0);
    let (d_coef, bdf2) = if dissipative { (GAMMA / 2.0, true) } else { (0.5, false) };
    let mut st = Stepper { n, d: d_coef, bdf2, l, l_trip, cache: HashMap::new() };

    let v0 = vec_of(rho0.entries());
    let mut y = Mat::<C64>::from_fn(n, 1, |i, _| v0[i]);
    let mut t = 0.0;
    let mut h = opts.h_init;
    let (mut accepted, mut rejected) = (0, 0);
    let mut states = Vec::with_capacity(t_grid.len());
    let mut drift = 0.0f64;
    for &t_out in t_grid {
        while t_out - t > 1e-12 * t_out.max(1.0) {
            let remaining = t_out - t;
            let h_try = h.min(remaining);
            let full = st.step(&y, h_try)?;
            let half1 = st.step(&y, h_try / 2.0)?;
            let half2 = st.step(&half1, h_try / 2.0)?;
            // both schemes are second order
            let err = max_diff(&full, &half2) / 3.0;
            if err <= opts.tol {
                y = half2;
                t += h_try;
                accepted += 1;
                if h_try == h && err < opts.tol / 8.0 && 2.0 * h <= opts.h_max {
                    h *= 2.0;
                }
            } else {
                rejected += 1;
                h = if h_try < h { ladder_below(h_try) } else { h / 2.0 };
                if h < opts.h_min {
                    return Err(Error::Stiffness { t, h });
                }
            }
        }
        t = t_out;
        let rho = unvec(&(0..n).map(|i| y[(i, 0)]).collect::<Vec<_>>(), d);
        let dm = DensityMatrix::from_entries(rho, rho0.basis())?;
        drift = drift.max((dm.trace() - C64::new(1.0, 0.0)).norm());
        states.push(dm);
    }
    Ok(Trajectory { times: t_grid.to_vec(), states, accepted_steps: accepted, rejected_steps: rejected, max_trace_drift: drift })
}

fn inf_norm(trip: &[Triplet<usize, usize, C64>], n: usize) -> f64 {
    let mut rows = vec![0.0; n];
    for t in trip {
        rows[t.row] += t.val.norm();
    }
    rows.into_iter().fold(0.0, f64::max)
}

fn evolve_krylov(
    l: &SparseColMat<usize, C64>,
    anorm: f64,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: &EvolveOptions,
    d: usize,
) -> Result<Trajectory> {
    let n = d * d;
    let apply = |x: &[C64]| -> Vec<C64> {
        let xm = Mat::<C64>::from_fn(n, 1, |i, _| x[i]);
        let y = l * &xm;
        (0..n).map(|i| y[(i, 0)]).collect()
    };
    let mut y = vec_of(rho0.entries());
    let mut t = 0.0;
    let (mut accepted, mut rejected) = (0, 0);
    let mut states = Vec::with_capacity(t_grid.len());
    let mut drift = 0.0f64;
    for &t_out in t_grid {
        if t_out > t {
            let (w, rep) = expv(apply, &y, t_out - t, anorm, opts.tol, opts.krylov_dim)
                .map_err(|e| Error::Solver(format!("Krylov propagation: {e}")))?;
            accepted += rep.steps;
            rejected += rep.rejected;
            y = w;
            t = t_out;
        }
        let dm = DensityMatrix::from_entries(unvec(&y, d), rho0.basis())?;
        drift = drift.max((dm.trace() - C64::new(1.0, 0.0)).norm());
        states.push(dm);
    }
    Ok(Trajectory { times: t_grid.to_vec(), states, accepted_steps: accepted, rejected_steps: rejected, max_trace_drift: drift })
}

/// Largest power of two strictly below `x`.
fn ladder_below(x: f64) -> f64 {
    let mut h = 2f64.powi(x.log2().floor() as i32);
    if h >= x {
        h /= 2.0;
    }
    h
}
