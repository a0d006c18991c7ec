//! Tomography run: prepare a field, record displaced photon-number
//! statistics, reconstruct by maximum likelihood.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fmt_f, Manifest, ScenarioOutput};
use crate::dynamics::{add_drive, evolve, rotating_frame, DensityMatrix};
use crate::error::{Error, Result};
use crate::hilbert::Basis;
use crate::params::SystemParams;
use crate::plot::heatmap;
use crate::spectrum::{kerr_report, ladders_numeric};
use crate::tomography::{
    coherent_target, default_grid, fidelity, mle_reconstruct_with, square_grid, synthesize_coherent, synthesize_from_state,
    wigner, wigner_csv, MleOptions, MleResult, TomogramDataset,
};

/// How the field is prepared before the tomogram is recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preparation {
    /// Exact coherent state |β⟩.
    Exact,
    /// Resonant drive of the full model from |g0⟩ for `duration` µs with the
    /// amplitude that takes a linear cavity to β.
    Driven { duration: f64 },
}

#[derive(Debug, Clone)]
pub struct TomographyRunOptions {
    pub preparation: Preparation,
    /// Highest photon number recorded per displacement.
    pub n_range: usize,
    /// Largest photon number of the reconstruction space.
    pub n_trunc: usize,
    /// Multiplicative Gaussian noise on every frequency.
    pub noise: Option<f64>,
    pub seed: u64,
    pub mle: MleOptions,
    /// Side of the square Wigner grid.
    pub wigner_points: usize,
}

impl Default for TomographyRunOptions {
    fn default() -> Self {
        TomographyRunOptions {
            preparation: Preparation::Exact,
            n_range: 7,
            n_trunc: 18,
            noise: None,
            seed: 0,
            mle: MleOptions::default(),
            wigner_points: 41,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TomographyRun {
    pub beta: C64,
    pub dataset: TomogramDataset,
    pub mle: MleResult,
    /// Fidelity of the reconstruction to |β⟩ cropped at `n_trunc`.
    pub fidelity: f64,
    /// Fidelity of the prepared state itself (1 for exact preparation).
    pub prepared_fidelity: f64,
    pub wigner_grid: Vec<C64>,
    pub wigner: Vec<f64>,
}

fn prepared_state(p: &SystemParams, beta: C64, duration: f64, n_trunc: usize) -> Result<DensityMatrix> {
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter(format!("preparation time {duration}")));
    }
    // H_d = ε(a + a†) moves a linear cavity to α = −i 2π ε t
    let eps = beta.norm() / (2.0 * std::f64::consts::PI * duration);
    let phase = -(beta * C64::new(0.0, 1.0)).arg();
    let n_est = beta.norm_sqr();
    let n_max = ((n_est + 6.0 * n_est.sqrt()).ceil() as usize + 4).max(n_trunc);
    let q = p.clone().with_n_max(n_max);
    let nu = kerr_report(&ladders_numeric(&q)?).nu_tilde_o;
    let m = add_drive(rotating_frame(&q, nu)?, eps, phase)?;
    let rho0 = DensityMatrix::basis_state(0, m.h_rot.basis())?;
    let out = evolve(&m, &rho0, &[0.0, duration])?;
    let osc = out[1].oscillator_state();
    let d = n_trunc + 1;
    DensityMatrix::from_entries(DMatrix::from_fn(d, d, |i, j| osc.entries()[(i, j)]), Basis::Oscillator { n_max: n_trunc })
}

/// Records the tomogram of the prepared field on 240 displacements around
/// −β, reconstructs it and compares with |β⟩.
pub fn tomography_run(p: &SystemParams, beta: C64, opts: &TomographyRunOptions) -> Result<TomographyRun> {
    let grid = default_grid(beta);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let target = coherent_target(beta, opts.n_trunc);
    let (dataset, prepared_fidelity) = match opts.preparation {
        Preparation::Exact => {
            let noise = opts.noise.map(|s| (s, &mut rng));
            (synthesize_coherent(beta, &grid, opts.n_range, noise), 1.0)
        }
        Preparation::Driven { duration } => {
            let rho = prepared_state(p, beta, duration, opts.n_trunc)?;
            let mut d = synthesize_from_state(&rho, &grid, opts.n_range)?;
            if let Some(s) = opts.noise {
                use rand_distr::{Distribution, StandardNormal};
                for r in &mut d.records {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    r.f = (r.f * (1.0 + s * z)).clamp(0.0, 1.0);
                }
            }
            let f = fidelity(rho.entries(), &target)?;
            (d, f)
        }
    };
    let mut run = tomography_from_data(dataset, beta, opts)?;
    run.prepared_fidelity = prepared_fidelity;
    Ok(run)
}

/// Reconstruction of a recorded tomogram, compared with |β⟩.
pub fn tomography_from_data(dataset: TomogramDataset, beta: C64, opts: &TomographyRunOptions) -> Result<TomographyRun> {
    dataset.validate(opts.noise.unwrap_or(0.0))?;
    let mle = mle_reconstruct_with(&dataset, opts.n_trunc, &opts.mle)?;
    let fid = fidelity(mle.rho.entries(), &coherent_target(beta, opts.n_trunc))?;
    let wigner_grid = square_grid(beta, 3.0, opts.wigner_points);
    let w = wigner(mle.rho.entries(), &wigner_grid);
    Ok(TomographyRun { beta, dataset, mle, fidelity: fid, prepared_fidelity: f64::NAN, wigner_grid, wigner: w })
}

impl TomographyRun {
    pub fn output(&self, p: &SystemParams, opts: &TomographyRunOptions) -> ScenarioOutput {
        let mut m = Manifest::new("tomo").with_params(p);
        m.set("seed", opts.seed);
        m.set("beta", format!("{}{:+}i", self.beta.re, self.beta.im));
        m.set("preparation", format!("{:?}", opts.preparation));
        m.set("n_range", opts.n_range);
        m.set("n_trunc", opts.n_trunc);
        m.set("noise", opts.noise.map_or("none".to_string(), |s| s.to_string()));
        m.set("displacements", self.dataset.groups().len());
        m.set("fidelity", fmt_f(self.fidelity));
        m.set("prepared_fidelity", fmt_f(self.prepared_fidelity));
        m.set("mle_iterations", self.mle.iterations);
        m.set("mle_converged", self.mle.converged);
        m.set("log_likelihood", fmt_f(*self.mle.log_likelihood.last().unwrap_or(&f64::NAN)));
        for (k, w) in self.mle.warnings.iter().enumerate() {
            m.set(&format!("warning.{k}"), w);
        }
        let n = opts.wigner_points;
        let (c, h) = (self.beta, 3.0);
        let svg = heatmap("Wigner function", (c.re - h, c.re + h), (c.im - h, c.im + h), n, n, &self.wigner);
        let rho = self.mle.rho.entries();
        let mut dm = crate::io::CsvTable::new(&["row", "col", "re", "im"]);
        for i in 0..rho.nrows() {
            for j in 0..rho.ncols() {
                dm.push(vec![i.to_string(), j.to_string(), fmt_f(rho[(i, j)].re), fmt_f(rho[(i, j)].im)]);
            }
        }
        ScenarioOutput {
            manifest: m,
            data: wigner_csv(&self.wigner_grid, &self.wigner),
            svg: Some(svg),
            extra: vec![("tomogram".into(), self.dataset.to_csv()), ("rho".into(), dm)],
        }
    }
}
