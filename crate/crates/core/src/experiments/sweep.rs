//! Steady-state resonance curves of the driven oscillator versus input power.

use rayon::prelude::*;

use super::{fmt_f, Manifest, ScenarioOutput};
use crate::dynamics::{rotating_frame, DensityMatrix, Drive, DriveAnchor, DressedSolver, SteadyOptions, drive_from_dbm, linear_cavity_photons};
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::params::SystemParams;
use crate::plot::{line_chart, Series};
use crate::spectrum::{kerr_report, ladders_numeric};

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub steady: SteadyOptions,
    /// Fixed oscillator truncation; `None` picks it per power.
    pub n_max: Option<usize>,
    /// Zoom rounds around the sampled maximum, each adding four points.
    pub refine: usize,
    /// Accepted relative change of the peak ⟨n⟩ when n_max grows by 20%.
    pub convergence_tol: f64,
    pub anchor: Option<DriveAnchor>,
    /// Largest population allowed in the two highest Fock levels.
    pub tail_tol: f64,
    /// Upper bound for the automatic truncation.
    pub n_max_limit: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            steady: SteadyOptions::default(),
            n_max: None,
            refine: 2,
            convergence_tol: 1e-3,
            anchor: None,
            tail_tol: 1e-6,
            n_max_limit: 160,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepCurve {
    pub p1_dbm: f64,
    /// Drive amplitude in MHz.
    pub eps_d: f64,
    pub n_max: usize,
    /// Sampled drive frequencies (GHz), ascending, with ⟨n⟩ at each.
    pub nu: Vec<f64>,
    pub mean_n: Vec<f64>,
    pub nu_peak: f64,
    /// ν_peak − ν̃_O in Hz.
    pub peak_shift_hz: f64,
    /// ⟨n⟩ of the steady state driven at `nu_peak`.
    pub n_peak: f64,
    /// Oscillator photon distribution at the peak.
    pub p_inf: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Dressed oscillator frequency (GHz).
    pub nu_tilde_o: f64,
    pub k_series_hz: f64,
    pub curves: Vec<SweepCurve>,
}

/// Truncation holding ⟨n⟩ = `n` with five standard deviations of margin.
fn truncation_for(n: f64) -> usize {
    let n = n.max(0.0);
    ((n + 5.0 * n.sqrt()).ceil() as usize).max(6)
}

fn solve_point(s: &DressedSolver, nu: f64, eps_d: f64, opts: &SteadyOptions) -> Result<DensityMatrix> {
    s.solve(nu, Some(Drive { eps_d, phase: 0.0 }), opts).map(|r| r.rho)
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if a >= 0.0 {
        return x[1];
    }
    let v = 0.5 * (x[0] + x[1]) - d1 / (2.0 * a);
    v.clamp(x[0], x[2])
}

fn count_peaks(y: &[f64]) -> usize {
    let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..y.len())
        .filter(|&i| {
            let left = i == 0 || y[i] > y[i - 1];
            let right = i + 1 == y.len() || y[i] > y[i + 1];
            left && right && y[i] > 0.1 * top
        })
        .count()
}

struct Curve {
    nu: Vec<f64>,
    n: Vec<f64>,
    /// Largest population of the two top Fock levels over the samples.
    tail: f64,
}

fn tail_mass(pd: &[f64]) -> f64 {
    pd.iter().rev().take(2).sum()
}

fn sample(s: &DressedSolver, nus: &[f64], eps_d: f64, opts: &SteadyOptions, p1: f64) -> Result<Vec<(f64, f64)>> {
    nus.par_iter()
        .map(|&nu| {
            solve_point(s, nu, eps_d, opts)
                .map(|r| (r.mean_photon_number(), tail_mass(&r.photon_distribution())))
                .map_err(|e| e.context(format!("P1 = {p1} dBm, nu = {nu:.9} GHz")))
        })
        .collect()
}

fn curve_on(
    p: &SystemParams,
    n_max: usize,
    nu_grid: &[f64],
    eps_d: f64,
    p1: f64,
    opts: &SweepOptions,
) -> Result<(DressedSolver, Curve)> {
    let pn = p.clone().with_n_max(n_max);
    let s = DressedSolver::new(&rotating_frame(&pn, nu_grid[0])?)?;
    let c = curve_fixed(&s, nu_grid, eps_d, p1, opts)?;
    Ok((s, c))
}

fn curve_fixed(s: &DressedSolver, nu_grid: &[f64], eps_d: f64, p1: f64, opts: &SweepOptions) -> Result<Curve> {
    let ys = sample(s, nu_grid, eps_d, &opts.steady, p1)?;
    let mut c = Curve {
        nu: nu_grid.to_vec(),
        n: ys.iter().map(|y| y.0).collect(),
        tail: ys.iter().map(|y| y.1).fold(0.0, f64::max),
    };
    if c.tail > opts.tail_tol {
        return Ok(c);
    }
    for _ in 0..opts.refine {
        let i = argmax(&c.n);
        let h = if i + 1 < c.nu.len() { c.nu[i + 1] - c.nu[i] } else { c.nu[i] - c.nu[i - 1] };
        let h = if i > 0 { h.min(c.nu[i] - c.nu[i - 1]) } else { h };
        let extra: Vec<f64> = [-0.5, -0.25, 0.25, 0.5].iter().map(|f| c.nu[i] + f * h).collect();
        let ys = sample(s, &extra, eps_d, &opts.steady, p1)?;
        for (x, y) in extra.into_iter().zip(ys) {
            let k = c.nu.partition_point(|v| *v < x);
            c.nu.insert(k, x);
            c.n.insert(k, y.0);
            c.tail = c.tail.max(y.1);
        }
    }
    Ok(c)
}

fn argmax(y: &[f64]) -> usize {
    (0..y.len()).fold(0, |b, i| if y[i] > y[b] { i } else { b })
}

/// Peak frequency from the three highest samples.
fn peak_of(c: &Curve, p1: f64) -> Result<f64> {
    let peaks = count_peaks(&c.n);
    if peaks != 1 {
        return Err(Error::Domain(format!("P1 = {p1} dBm: resonance curve has {peaks} peaks in the window")));
    }
    let i = argmax(&c.n);
    if i == 0 || i + 1 == c.n.len() {
        return Err(Error::Domain(format!("P1 = {p1} dBm: maximum at the edge of the frequency window")));
    }
    Ok(parabola_vertex([c.nu[i - 1], c.nu[i], c.nu[i + 1]], [c.n[i - 1], c.n[i], c.n[i + 1]]))
}

/// Drive amplitude at which the full model, driven at its resonance peak,
/// holds ⟨n⟩ = 1 at the reference power. Starts from the linear-cavity value
/// and rescales by √(1/⟨n⟩) until the peak ⟨n⟩ is within 1e−9 of one.
pub fn calibrate_anchor(p: &SystemParams, nu_tilde_o: f64, opts: &SweepOptions) -> Result<DriveAnchor> {
    let mut anchor = DriveAnchor::linear_cavity(p);
    // ±2 linewidths around the dressed resonance
    let lw = p.kappa() / (2.0 * std::f64::consts::PI) * 1e-3;
    let grid: Vec<f64> = (0..21).map(|i| nu_tilde_o + (i as f64 - 10.0) * 0.2 * lw).collect();
    let sub = SweepOptions { anchor: Some(anchor), refine: opts.refine.max(2), ..opts.clone() };
    let pn = p.clone().with_n_max(opts.n_max.unwrap_or(12));
    let s = DressedSolver::new(&rotating_frame(&pn, nu_tilde_o)?)?;
    for _ in 0..20 {
        let c = curve_fixed(&s, &grid, anchor.eps_ref, anchor.p_ref_dbm, &sub)?;
        let nu_peak = peak_of(&c, anchor.p_ref_dbm)?;
        let n = solve_point(&s, nu_peak, anchor.eps_ref, &opts.steady)?.mean_photon_number();
        if (n - 1.0).abs() < 1e-9 {
            return Ok(anchor);
        }
        anchor.eps_ref /= n.sqrt();
    }
    Err(Error::Solver("drive anchor calibration did not converge".into()))
}

pub fn power_sweep(p: &SystemParams, p1_list: &[f64], nu_grid: &[f64]) -> Result<SweepResult> {
    power_sweep_with(p, p1_list, nu_grid, &SweepOptions::default())
}

/// Resonance curves ⟨n⟩(ν) at each input power, with peak position, peak ⟨n⟩
/// and peak photon distribution. Without a fixed truncation, n_max starts
/// from the smaller of the linear-cavity estimate and 16 photons, grows until
/// it covers the peak ⟨n⟩ with margin, and is accepted once a 20% larger
/// truncation changes the peak ⟨n⟩ by less than `convergence_tol`.
pub fn power_sweep_with(p: &SystemParams, p1_list: &[f64], nu_grid: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    p.validate()?;
    if nu_grid.len() < 3 || nu_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("frequency grid needs at least 3 ascending points".into()));
    }
    let kr = kerr_report(&ladders_numeric(&p.clone().with_levels(4).with_n_max(p.n_max.max(8)))?);
    let anchor = match opts.anchor {
        Some(a) => a,
        None => calibrate_anchor(p, kr.nu_tilde_o, opts)?,
    };
    let mut curves = Vec::with_capacity(p1_list.len());
    for &p1 in p1_list {
        let eps_d = drive_from_dbm(p1, &anchor);
        let mut n_max = match opts.n_max {
            Some(n) => n,
            None => truncation_for(linear_cavity_photons(eps_d, p.kappa(), 0.0).min(16.0)),
        };
        let fixed = opts.n_max.is_some();
        let grow = |n_max: usize, want: usize| -> Result<usize> {
            let next = want.max(n_max + 1);
            if next > opts.n_max_limit {
                return Err(Error::Truncation(format!("P1 = {p1} dBm needs n_max above {}", opts.n_max_limit)));
            }
            Ok(next)
        };
        let curve = loop {
            let (s, c) = curve_on(p, n_max, nu_grid, eps_d, p1, opts)?;
            let peak_n = c.n.iter().cloned().fold(0.0, f64::max);
            if !fixed && (c.tail > opts.tail_tol || truncation_for(peak_n) > n_max) {
                n_max = grow(n_max, truncation_for(peak_n).max((1.3 * n_max as f64).ceil() as usize))?;
                continue;
            }
            let nu_peak = peak_of(&c, p1)?;
            let rho = solve_point(&s, nu_peak, eps_d, &opts.steady).map_err(|e| e.context(format!("P1 = {p1} dBm, peak")))?;
            let n_peak = rho.mean_photon_number();
            if !fixed {
                let bigger = ((n_max as f64) * 1.2).ceil() as usize;
                let sb = DressedSolver::new(&rotating_frame(&p.clone().with_n_max(bigger), nu_grid[0])?)?;
                let nb = solve_point(&sb, nu_peak, eps_d, &opts.steady)?.mean_photon_number();
                if (nb - n_peak).abs() > opts.convergence_tol * n_peak.max(1e-12) {
                    n_max = grow(n_max, bigger)?;
                    continue;
                }
            }
            break SweepCurve {
                p1_dbm: p1,
                eps_d,
                n_max,
                nu: c.nu,
                mean_n: c.n,
                nu_peak,
                peak_shift_hz: (nu_peak - kr.nu_tilde_o) * 1e9,
                n_peak,
                p_inf: rho.photon_distribution(),
            };
        };
        curves.push(curve);
    }
    Ok(SweepResult { nu_tilde_o: kr.nu_tilde_o, k_series_hz: kr.k_series, curves })
}

impl SweepResult {
    /// Long format: one row per (P1, ν) sample.
    pub fn curves_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["p1_dbm", "nu_ghz", "detuning_hz", "mean_n"]);
        for c in &self.curves {
            for (nu, n) in c.nu.iter().zip(&c.mean_n) {
                t.push(vec![c.p1_dbm.to_string(), format!("{nu:.12}"), format!("{:.3}", (nu - self.nu_tilde_o) * 1e9), fmt_f(*n)]);
            }
        }
        t
    }

    pub fn peaks_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["p1_dbm", "eps_d_mhz", "n_max", "nu_peak_ghz", "peak_shift_hz", "n_peak", "kerr_bound_hz"]);
        for c in &self.curves {
            t.push(vec![
                c.p1_dbm.to_string(),
                fmt_f(c.eps_d),
                c.n_max.to_string(),
                format!("{:.12}", c.nu_peak),
                format!("{:.3}", c.peak_shift_hz),
                fmt_f(c.n_peak),
                format!("{:.3}", self.k_series_hz.abs() * c.n_peak),
            ]);
        }
        t
    }

    pub fn distributions_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["p1_dbm", "n", "p"]);
        for c in &self.curves {
            for (n, p) in c.p_inf.iter().enumerate() {
                t.push(vec![c.p1_dbm.to_string(), n.to_string(), fmt_f(*p)]);
            }
        }
        t
    }

    /// Slopes of the peak shift against peak ⟨n⟩ between consecutive powers
    /// (Hz per photon), each with the mean ⟨n⟩ of its interval.
    pub fn shift_slopes(&self) -> Vec<(f64, f64)> {
        self.curves
            .windows(2)
            .map(|w| {
                let dn = w[1].n_peak - w[0].n_peak;
                (0.5 * (w[0].n_peak + w[1].n_peak), (w[1].peak_shift_hz - w[0].peak_shift_hz) / dn)
            })
            .collect()
    }

    pub fn output(&self, p: &SystemParams, seed: u64) -> ScenarioOutput {
        let mut m = Manifest::new("sweep").with_params(p);
        m.set("seed", seed);
        m.set("nu_tilde_o_ghz", format!("{:.12}", self.nu_tilde_o));
        m.set("k_series_hz", format!("{:.3}", self.k_series_hz));
        m.set("powers_dbm", self.curves.iter().map(|c| c.p1_dbm.to_string()).collect::<Vec<_>>().join(","));
        let series: Vec<Series> = self
            .curves
            .iter()
            .map(|c| Series {
                label: format!("{} dBm", c.p1_dbm),
                points: c.nu.iter().zip(&c.mean_n).map(|(nu, n)| ((nu - self.nu_tilde_o) * 1e6, *n)).collect(),
            })
            .collect();
        ScenarioOutput {
            manifest: m,
            data: self.curves_csv(),
            svg: Some(line_chart("Steady-state resonance", "detuning from dressed oscillator (kHz)", "<n>", &series)),
            extra: vec![("peaks".into(), self.peaks_csv()), ("distributions".into(), self.distributions_csv())],
        }
    }
}
