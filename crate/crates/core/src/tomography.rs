//! Field tomography from displaced photon-number statistics: POVMs
//! Π_{n,γ} = D(γ)†|n⟩⟨n|D(γ), maximum-likelihood reconstruction by the
//! diluted RρR iteration, fidelity and Wigner function.
//!
//! With this convention a coherent state |β⟩ probed at γ shows the photon
//! statistics of |β + γ⟩, so displacements near −β bring the field to low n.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::{poisson, DensityMatrix};
use crate::error::{Error, Result};
use crate::hilbert::{displacement_working_dim, Basis, Displacer};
use crate::io::CsvTable;

/// Truncated coherent state Σ e^{−|β|²/2} βⁿ/√n! |n⟩, renormalized.
pub fn coherent_state(beta: C64, n_max: usize) -> Result<DVector<C64>> {
    if beta.norm_sqr() > n_max as f64 / 4.0 {
        return Err(Error::Truncation(format!(
            "|beta|^2 = {:.3} exceeds n_max/4 = {:.3}",
            beta.norm_sqr(),
            n_max as f64 / 4.0
        )));
    }
    Ok(coherent_amplitudes(beta, n_max).normalize())
}

/// Unnormalized Fock amplitudes of |β⟩ for n ≤ n_max (no guard).
pub fn coherent_amplitudes(beta: C64, n_max: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n_max + 1);
    let mut c = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..=n_max {
        if n > 0 {
            c *= beta / (n as f64).sqrt();
        }
        v[n] = c;
    }
    v
}

/// |β⟩ computed on a wide space and cropped to `0..=n_trunc` without
/// renormalization, for comparison with states reconstructed at `n_trunc`.
pub fn coherent_target(beta: C64, n_trunc: usize) -> DVector<C64> {
    coherent_amplitudes(beta, n_trunc)
}

/// POVM for one displacement: rank-one elements v v† with v = D(γ)†|n⟩
/// restricted to `0..=n_trunc`, and the completeness remainder.
#[derive(Debug, Clone)]
pub struct DisplacedPovm {
    pub gamma: C64,
    pub vectors: Vec<DVector<C64>>,
    pub rest: DMatrix<C64>,
}

impl DisplacedPovm {
    pub fn element(&self, n: usize) -> DMatrix<C64> {
        let v = &self.vectors[n];
        v * v.adjoint()
    }
}

/// Π_{n,γ} for n ≤ `n_range` on Fock states `0..=n_trunc`, plus
/// Π_rest = I − Σ Π.
pub fn povm_elements(gamma: C64, n_range: usize, n_trunc: usize) -> Result<DisplacedPovm> {
    let disp = Displacer::new(displacement_working_dim(n_trunc.max(n_range), gamma));
    povm_with(&disp, gamma, n_range, n_trunc)
}

fn povm_with(disp: &Displacer, gamma: C64, n_range: usize, n_trunc: usize) -> Result<DisplacedPovm> {
    if n_range > n_trunc {
        return Err(Error::InvalidParameter(format!("n_range {n_range} > n_trunc {n_trunc}")));
    }
    let need = displacement_working_dim(n_trunc, gamma);
    if disp.n_work() < need {
        return Err(Error::Truncation(format!("working truncation {} < {need}", disp.n_work())));
    }
    let d = disp.full(gamma);
    let dim = n_trunc + 1;
    // D(γ)†|n⟩ has components conj(D[n, k])
    let vectors: Vec<DVector<C64>> = (0..=n_range)
        .map(|n| DVector::from_fn(dim, |k, _| d[(n, k)].conj()))
        .collect();
    let mut rest = DMatrix::<C64>::identity(dim, dim);
    for v in &vectors {
        rest -= v * v.adjoint();
    }
    let min = SymmetricEigen::new(rest.clone()).eigenvalues.min();
    if min < -1e-10 {
        return Err(Error::Truncation(format!("remainder POVM element has eigenvalue {min:e}")));
    }
    Ok(DisplacedPovm { gamma, vectors, rest })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomoRecord {
    pub gamma: C64,
    pub n: usize,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomogramDataset {
    pub records: Vec<TomoRecord>,
    pub n_range: usize,
    pub meta: String,
}

impl TomogramDataset {
    /// Records grouped by displacement, in first-appearance order.
    pub fn groups(&self) -> Vec<(C64, Vec<(usize, f64)>)> {
        let mut order: Vec<C64> = Vec::new();
        let mut map: BTreeMap<(u64, u64), Vec<(usize, f64)>> = BTreeMap::new();
        for r in &self.records {
            let key = (r.gamma.re.to_bits(), r.gamma.im.to_bits());
            let e = map.entry(key).or_default();
            if e.is_empty() {
                order.push(r.gamma);
            }
            e.push((r.n, r.f));
        }
        order
            .into_iter()
            .map(|g| {
                let v = map.remove(&(g.re.to_bits(), g.im.to_bits())).unwrap();
                (g, v)
            })
            .collect()
    }

    pub fn max_gamma(&self) -> f64 {
        self.records.iter().map(|r| r.gamma.norm()).fold(0.0, f64::max)
    }

    /// NaN and range checks, and Σ_n f ≤ 1 + 3σ per displacement.
    pub fn validate(&self, sigma_noise: f64) -> Result<()> {
        for r in &self.records {
            if !r.f.is_finite() || !r.gamma.re.is_finite() || !r.gamma.im.is_finite() {
                return Err(Error::Data(format!("non-finite record at gamma = {}, n = {}", r.gamma, r.n)));
            }
            if !(0.0..=1.0).contains(&r.f) {
                return Err(Error::Data(format!("frequency {} outside [0, 1]", r.f)));
            }
            if r.n > self.n_range {
                return Err(Error::Data(format!("n = {} above n_range = {}", r.n, self.n_range)));
            }
        }
        for (g, v) in self.groups() {
            let s: f64 = v.iter().map(|x| x.1).sum();
            if s > 1.0 + 3.0 * sigma_noise * (v.len() as f64).sqrt() + 1e-12 {
                return Err(Error::Data(format!("frequencies at gamma = {g} sum to {s}")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["re_gamma", "im_gamma", "n", "f"]);
        for r in &self.records {
            t.push(vec![
                format!("{:.15e}", r.gamma.re),
                format!("{:.15e}", r.gamma.im),
                r.n.to_string(),
                format!("{:.15e}", r.f),
            ]);
        }
        t
    }

    pub fn from_csv(t: &CsvTable, meta: &str) -> Result<Self> {
        let re = t.column("re_gamma")?;
        let im = t.column("im_gamma")?;
        let n = t.column("n")?;
        let f = t.column("f")?;
        let mut records = Vec::with_capacity(re.len());
        for k in 0..re.len() {
            if !(n[k] >= 0.0 && n[k].fract() == 0.0) {
                return Err(Error::Data(format!("row {}: bad photon number {}", k + 1, n[k])));
            }
            if f[k].is_nan() {
                return Err(Error::Data(format!("row {}: frequency is NaN", k + 1)));
            }
            records.push(TomoRecord { gamma: C64::new(re[k], im[k]), n: n[k] as usize, f: f[k] });
        }
        let n_range = records.iter().map(|r| r.n).max().unwrap_or(0);
        Ok(TomogramDataset { records, n_range, meta: meta.to_string() })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_csv().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&CsvTable::load(path)?, &path.display().to_string())
    }
}

/// `n_radii × n_angles` displacements on a disk of `radius` around `center`.
pub fn displacement_grid(center: C64, radius: f64, n_radii: usize, n_angles: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_radii * n_angles);
    for i in 1..=n_radii {
        let r = radius * i as f64 / n_radii as f64;
        for j in 0..n_angles {
            let th = 2.0 * PI * (j as f64 + 0.5 * (i % 2) as f64) / n_angles as f64;
            out.push(center + C64::from_polar(r, th));
        }
    }
    out
}

/// Default layout: 15 radii × 16 angles, radius 3, centred on −β_est.
pub fn default_grid(beta_est: C64) -> Vec<C64> {
    displacement_grid(-beta_est, 3.0, 15, 16)
}

/// Exact photon statistics of |β⟩ probed at each γ: Poisson(|β+γ|²), with
/// optional multiplicative Gaussian noise of relative size `sigma`.
pub fn synthesize_coherent<R: Rng>(
    beta: C64,
    grid: &[C64],
    n_range: usize,
    noise: Option<(f64, &mut R)>,
) -> TomogramDataset {
    let mut records = Vec::with_capacity(grid.len() * (n_range + 1));
    let mut noise = noise;
    for &g in grid {
        let p = poisson((beta + g).norm_sqr(), n_range);
        for (n, &pn) in p.iter().enumerate() {
            let f = match noise.as_mut() {
                Some((s, rng)) => {
                    let z: f64 = rng.sample(StandardNormal);
                    (pn * (1.0 + *s * z)).clamp(0.0, 1.0)
                }
                None => pn,
            };
            records.push(TomoRecord { gamma: g, n, f });
        }
    }
    TomogramDataset { records, n_range, meta: format!("coherent beta = {beta}") }
}

/// Exact statistics Tr[Π_{n,γ} ρ] of an oscillator state.
pub fn synthesize_from_state(rho: &DensityMatrix, grid: &[C64], n_range: usize) -> Result<TomogramDataset> {
    let n_trunc = rho.dim() - 1;
    let gmax = grid.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let disp = Displacer::new(displacement_working_dim(n_trunc, C64::new(gmax, 0.0)));
    let mut records = Vec::new();
    for &g in grid {
        let povm = povm_with(&disp, g, n_range, n_trunc)?;
        for (n, v) in povm.vectors.iter().enumerate() {
            let f = (v.adjoint() * rho.entries() * v)[(0, 0)].re.clamp(0.0, 1.0);
            records.push(TomoRecord { gamma: g, n, f });
        }
    }
    Ok(TomogramDataset { records, n_range, meta: "state".into() })
}

#[derive(Debug, Clone)]
pub struct MleOptions {
    pub max_iter: usize,
    /// Stop once the per-iteration log-likelihood gain falls below this.
    pub gain_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { max_iter: 5000, gain_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// Log-likelihood after each iteration (index 0 is the start).
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

struct Outcome {
    v: Vec<DVector<C64>>,
    f: Vec<f64>,
    f_rest: f64,
}

fn log_likelihood(outs: &[Outcome], rho: &DMatrix<C64>, weight: f64) -> (f64, DMatrix<C64>) {
    let d = rho.nrows();
    let parts: Vec<(f64, DMatrix<C64>)> = outs
        .par_iter()
        .map(|o| {
            let mut ll = 0.0;
            let mut r = DMatrix::<C64>::zeros(d, d);
            let mut psum = 0.0;
            let mut ws = Vec::with_capacity(o.v.len());
            for (v, &f) in o.v.iter().zip(&o.f) {
                let p = (v.adjoint() * rho * v)[(0, 0)].re.max(1e-300);
                psum += p;
                if f > 0.0 {
                    ll += f * p.ln();
                }
                ws.push(f / p);
            }
            let p_rest = (1.0 - psum).max(1e-300);
            let w_rest = if o.f_rest > 0.0 {
                ll += o.f_rest * p_rest.ln();
                o.f_rest / p_rest
            } else {
                0.0
            };
            // R_γ = w_rest I + Σ (w_n − w_rest) v v†
            for (v, w) in o.v.iter().zip(&ws) {
                r += v * v.adjoint() * C64::new(w - w_rest, 0.0);
            }
            for k in 0..d {
                r[(k, k)] += w_rest;
            }
            (ll, r)
        })
        .collect();
    let mut ll = 0.0;
    let mut r = DMatrix::<C64>::zeros(d, d);
    for (l, m) in parts {
        ll += l;
        r += m;
    }
    (ll * weight, r * C64::new(weight, 0.0))
}

fn rrr(r: &DMatrix<C64>, rho: &DMatrix<C64>, mu: Option<f64>) -> DMatrix<C64> {
    let d = rho.nrows();
    let rm = match mu {
        None => r.clone(),
        Some(mu) => (DMatrix::<C64>::identity(d, d) + r * C64::new(mu, 0.0)) * C64::new(1.0 / (1.0 + mu), 0.0),
    };
    let next = &rm * rho * &rm;
    let tr = next.trace().re;
    let out = next * C64::new(1.0 / tr, 0.0);
    (&out + out.adjoint()) * C64::new(0.5, 0.0)
}

/// Full rank check of the measurement map on Hermitian matrices of size d.
fn measurement_rank(outs: &[Outcome], d: usize) -> usize {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let herm_params = |m: &DMatrix<C64>| -> Vec<f64> {
        let mut r = Vec::with_capacity(d * d);
        for j in 0..d {
            r.push(m[(j, j)].re);
            for k in j + 1..d {
                r.push(2.0 * m[(j, k)].re);
                r.push(2.0 * m[(j, k)].im);
            }
        }
        r
    };
    for o in outs {
        for v in &o.v {
            rows.push(herm_params(&(v * v.adjoint())));
        }
    }
    let ncols = d * d;
    let m = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    // rank of MᵀM is the rank of M
    let g = m.transpose() * &m;
    let svd = SVD::new(g, false, false);
    let top = svd.singular_values.max();
    svd.singular_values.iter().filter(|&&s| s > 1e-12 * top).count()
}

/// Diluted RρR maximum-likelihood reconstruction on Fock states
/// `0..=n_trunc`. Unprobed outcomes per displacement are lumped into the
/// remainder element with frequency max(0, 1 − Σf).
pub fn mle_reconstruct(d: &TomogramDataset, n_trunc: usize) -> Result<MleResult> {
    mle_reconstruct_with(d, n_trunc, &MleOptions::default())
}

pub fn mle_reconstruct_with(data: &TomogramDataset, n_trunc: usize, opts: &MleOptions) -> Result<MleResult> {
    if data.records.is_empty() {
        return Err(Error::Data("empty tomogram".into()));
    }
    if data.records.iter().any(|r| r.f.is_nan()) {
        return Err(Error::Data("NaN frequency in tomogram".into()));
    }
    let dim = n_trunc + 1;
    let groups = data.groups();
    let disp = Displacer::new(displacement_working_dim(n_trunc, C64::new(data.max_gamma(), 0.0)));
    let outs: Vec<Outcome> = groups
        .par_iter()
        .map(|(g, recs)| {
            let n_hi = recs.iter().map(|r| r.0).max().unwrap_or(0);
            let povm = povm_with(&disp, *g, n_hi.min(n_trunc), n_trunc)?;
            let mut v = Vec::new();
            let mut f = Vec::new();
            for &(n, fr) in recs {
                if n <= n_trunc {
                    v.push(povm.vectors[n].clone());
                    f.push(fr);
                }
            }
            let f_rest = (1.0 - f.iter().sum::<f64>()).max(0.0);
            Ok(Outcome { v, f, f_rest })
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let rank = measurement_rank(&outs, dim);
    if rank < dim * dim {
        warnings.push(format!("under-determined: measurement map rank {rank} < {}", dim * dim));
    }

    let weight = 1.0 / outs.len() as f64;
    let mut rho = DMatrix::<C64>::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
    let (mut ll, mut r) = log_likelihood(&outs, &rho, weight);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut mu: Option<f64> = None;
        let (next, next_ll, next_r) = loop {
            let cand = rrr(&r, &rho, mu);
            let (cl, cr) = log_likelihood(&outs, &cand, weight);
            if cl >= ll {
                break (cand, cl, cr);
            }
            mu = Some(mu.map_or(0.5, |m| m / 2.0));
            if mu.unwrap() < 1e-8 {
                break (rho.clone(), ll, r.clone());
            }
        };
        let gain = next_ll - ll;
        if gain < 0.0 {
            return Err(Error::Solver(format!("log-likelihood decreased by {:e}", -gain)));
        }
        rho = next;
        ll = next_ll;
        r = next_r;
        history.push(ll);
        if gain < opts.gain_tol {
            converged = true;
            break;
        }
    }
    let rho = DensityMatrix::from_entries(rho, Basis::Oscillator { n_max: n_trunc })?;
    Ok(MleResult { rho, log_likelihood: history, iterations, converged, warnings })
}

fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut v = eig.eigenvectors.clone();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let mut c = v.column_mut(k);
        c *= C64::new(l.max(0.0).sqrt(), 0.0);
    }
    v * eig.eigenvectors.adjoint()
}

/// Tr √(√ρ σ √ρ) with σ = |t⟩⟨t|.
pub fn fidelity(rho: &DMatrix<C64>, target: &DVector<C64>) -> Result<f64> {
    if rho.nrows() != target.len() {
        return Err(Error::InvalidParameter(format!(
            "state dimension {} and target dimension {} differ",
            rho.nrows(),
            target.len()
        )));
    }
    let s = psd_sqrt(rho);
    let m = &s * (target * target.adjoint()) * &s;
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let f: f64 = SymmetricEigen::new(h).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(f.min(1.0))
}

/// W(α) = (2/π) Tr[D(α)† ρ D(α) P] on a working space wide enough for the grid.
pub fn wigner(rho: &DMatrix<C64>, grid: &[C64]) -> Vec<f64> {
    let d = rho.nrows();
    let amax = grid.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let nw = displacement_working_dim(d - 1, C64::new(amax, 0.0));
    let disp = Displacer::new(nw);
    let mut big = DMatrix::<C64>::zeros(nw + 1, nw + 1);
    big.view_mut((0, 0), (d, d)).copy_from(rho);
    grid.par_iter()
        .map(|&a| {
            let dm = disp.full(a);
            let m = dm.adjoint() * &big * &dm;
            let tr: f64 = (0..=nw).map(|n| if n % 2 == 0 { m[(n, n)].re } else { -m[(n, n)].re }).sum();
            2.0 / PI * tr
        })
        .collect()
}

/// Square grid of `n × n` points spanning `center ± half_width`.
pub fn square_grid(center: C64, half_width: f64, n: usize) -> Vec<C64> {
    let step = if n > 1 { 2.0 * half_width / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(center + C64::new(-half_width + j as f64 * step, -half_width + i as f64 * step));
        }
    }
    out
}

pub fn wigner_csv(grid: &[C64], w: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["re_alpha", "im_alpha", "W"]);
    for (a, v) in grid.iter().zip(w) {
        t.push(vec![format!("{:.6}", a.re), format!("{:.6}", a.im), format!("{v:.12e}")]);
    }
    t
}
