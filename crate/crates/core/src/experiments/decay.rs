//! Loss of coherence of the driven oscillator on its way to the steady state.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{fmt_f, Manifest, ScenarioOutput};
use crate::dynamics::{add_drive, drive_from_dbm, evolve_with, rotating_frame, DensityMatrix, DriveAnchor, EvolveOptions};
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::params::SystemParams;
use crate::plot::{line_chart, Series};
use crate::spectrum::{kerr_report, ladders_numeric};
use crate::tomography::coherent_amplitudes;

#[derive(Debug, Clone)]
pub struct DecayOptions {
    pub evolve: EvolveOptions,
    /// Fixed truncation; `None` sizes it from the linear-cavity photon number.
    pub n_max: Option<usize>,
    pub n_max_limit: usize,
    /// Drive frequency (GHz); `None` drives at the dressed oscillator frequency.
    pub nu_drive: Option<f64>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { evolve: EvolveOptions::default(), n_max: None, n_max_limit: 80, nu_drive: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayPoint {
    pub t: f64,
    /// Tr ρ² of the full state.
    pub purity: f64,
    pub oscillator_purity: f64,
    pub mean_n: f64,
    /// max_β ⟨β|ρ_osc|β⟩ and the maximizing β.
    pub coherent_fidelity: f64,
    pub beta: C64,
}

#[derive(Debug, Clone)]
pub struct DecayScan {
    pub eps_d: f64,
    pub nu_drive: f64,
    pub n_max: usize,
    pub points: Vec<DecayPoint>,
    pub max_trace_drift: f64,
}

/// Scan at input power `p1_dbm` on the given anchor.
pub fn coherence_decay_scan(p: &SystemParams, p1_dbm: f64, anchor: &DriveAnchor, t_list: &[f64]) -> Result<DecayScan> {
    coherence_decay_scan_with(p, drive_from_dbm(p1_dbm, anchor), t_list, &DecayOptions::default())
}

/// Evolves |g0⟩ under a constant drive of amplitude `eps_d` (MHz) and reports
/// purity, ⟨n⟩ and best coherent-state fidelity at every time in `t_list`.
pub fn coherence_decay_scan_with(p: &SystemParams, eps_d: f64, t_list: &[f64], opts: &DecayOptions) -> Result<DecayScan> {
    p.validate()?;
    if t_list.windows(2).any(|w| w[1] < w[0]) || t_list.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::InvalidParameter("t_list must be ascending from 0".into()));
    }
    let nu_drive = match opts.nu_drive {
        Some(nu) => nu,
        None => kerr_report(&ladders_numeric(&p.clone().with_n_max(p.n_max.max(8)))?).nu_tilde_o,
    };
    let n_max = match opts.n_max {
        Some(n) => n,
        None => {
            // resonant linear cavity: |α(t)| = (4πε/κ)(1 − e^{−κt/2})
            let t_end = t_list.last().copied().unwrap_or(0.0);
            let kappa = p.kappa();
            let amp = 4.0 * std::f64::consts::PI * eps_d / kappa * (1.0 - (-kappa * t_end / 2.0).exp());
            let n = amp * amp;
            let want = ((n + 6.0 * n.sqrt()).ceil() as usize + 4).max(8);
            if want > opts.n_max_limit {
                return Err(Error::Truncation(format!("drive needs n_max = {want} > {}", opts.n_max_limit)));
            }
            want
        }
    };
    let q = p.clone().with_n_max(n_max);
    let m = add_drive(rotating_frame(&q, nu_drive)?, eps_d, 0.0)?;
    let rho0 = DensityMatrix::basis_state(0, m.h_rot.basis())?;
    let traj = evolve_with(&m, &rho0, t_list, &opts.evolve)?;
    let points = traj
        .states
        .iter()
        .zip(&traj.times)
        .map(|(rho, &t)| {
            let osc = rho.oscillator_state();
            let (f, beta) = best_coherent(osc.entries(), osc.field_amplitude())?;
            Ok(DecayPoint {
                t,
                purity: rho.purity(),
                oscillator_purity: osc.purity(),
                mean_n: rho.mean_photon_number(),
                coherent_fidelity: f,
                beta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayScan { eps_d, nu_drive, n_max, points, max_trace_drift: traj.max_trace_drift })
}

struct Overlap<'a> {
    rho: &'a DMatrix<C64>,
}

impl Overlap<'_> {
    fn value(&self, beta: C64) -> f64 {
        let v = coherent_amplitudes(beta, self.rho.nrows() - 1);
        (v.adjoint() * self.rho * &v)[(0, 0)].re
    }
}

impl CostFunction for Overlap<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-self.value(C64::new(x[0], x[1])))
    }
}

/// max_β ⟨β|ρ|β⟩ by a simplex search started at β = ⟨a⟩.
pub fn best_coherent(rho: &DMatrix<C64>, start: C64) -> Result<(f64, C64)> {
    let cost = Overlap { rho };
    let s = 0.1 + 0.05 * start.norm();
    let simplex = vec![vec![start.re, start.im], vec![start.re + s, start.im], vec![start.re, start.im + s]];
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-12).map_err(|e| Error::Fit(e.to_string()))?;
    let res = Executor::new(cost, solver)
        .configure(|st| st.max_iters(2000))
        .run()
        .map_err(|e| Error::Fit(format!("coherent fidelity search: {e}")))?;
    let st = res.state();
    let x = st.best_param.clone().unwrap_or_else(|| vec![start.re, start.im]);
    let beta = C64::new(x[0], x[1]);
    Ok((Overlap { rho }.value(beta), beta))
}

impl DecayScan {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["t_us", "purity", "oscillator_purity", "mean_n", "coherent_fidelity", "re_beta", "im_beta"]);
        for p in &self.points {
            t.push(vec![
                format!("{}", p.t),
                fmt_f(p.purity),
                fmt_f(p.oscillator_purity),
                fmt_f(p.mean_n),
                fmt_f(p.coherent_fidelity),
                fmt_f(p.beta.re),
                fmt_f(p.beta.im),
            ]);
        }
        t
    }

    pub fn output(&self, p: &SystemParams, seed: u64) -> ScenarioOutput {
        let mut m = Manifest::new("decay").with_params(p);
        m.set("seed", seed);
        m.set("eps_d_mhz", fmt_f(self.eps_d));
        m.set("nu_drive_ghz", format!("{:.12}", self.nu_drive));
        m.set("n_max", self.n_max);
        m.set("max_trace_drift", format!("{:e}", self.max_trace_drift));
        let ser = |label: &str, f: fn(&DecayPoint) -> f64| Series {
            label: label.into(),
            points: self.points.iter().map(|d| (d.t, f(d))).collect(),
        };
        let svg = line_chart(
            "Coherence of the driven oscillator",
            "t (us)",
            "",
            &[ser("purity", |d| d.purity), ser("coherent fidelity", |d| d.coherent_fidelity)],
        );
        ScenarioOutput { manifest: m, data: self.to_csv(), svg: Some(svg), extra: vec![] }
    }
}
