//! Synthetic two-tone spectrum of the transmon with the oscillator in a
//! coherent state.

use num_complex::Complex64 as C64;

use super::{fmt_f, Manifest, ScenarioOutput};
use crate::dynamics::poisson;
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::params::SystemParams;
use crate::plot::{line_chart, Series};
use crate::spectrum::{ladders_numeric, Ladder};

/// Population left out of the spectrum.
const TAIL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPeak {
    pub n: usize,
    /// `Ladder::Plus` or `Ladder::Minus`; n = 0 has a single line.
    pub ladder: Ladder,
    pub nu: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct SpectroscopyTrace {
    pub beta: C64,
    /// Full width at half maximum of every line (GHz).
    pub fwhm: f64,
    pub peaks: Vec<SpectralPeak>,
    pub nu: Vec<f64>,
    pub signal: Vec<f64>,
}

/// Lines at ν_{±n} from the four-level numeric ladders with heights p_β(n)
/// and full width 1/(π T2*), sampled on `nu_grid`.
pub fn spectroscopy_trace(p: &SystemParams, beta: C64, nu_grid: &[f64]) -> Result<SpectroscopyTrace> {
    let lambda = beta.norm_sqr();
    // smallest photon number past which the Poisson tail is below TAIL
    let mut n_cut = 0;
    let mut acc = 0.0;
    let mut probe = poisson(lambda, (lambda + 20.0 * lambda.sqrt() + 20.0) as usize);
    while acc < 1.0 - TAIL && n_cut < probe.len() {
        acc += probe[n_cut];
        n_cut += 1;
    }
    let n_lines = n_cut.max(1);
    let mut q = p.clone().with_levels(4);
    q.n_max = q.n_max.max(n_lines + q.levels + 2);
    let lad = ladders_numeric(&q)?;
    if lad.n_top() < n_lines {
        return Err(Error::Truncation(format!("ladders stop at n = {}", lad.n_top())));
    }
    probe = poisson(lambda, n_lines);
    let mut peaks = Vec::new();
    for n in 0..n_lines {
        let a = probe[n];
        if n == 0 {
            peaks.push(SpectralPeak { n, ladder: Ladder::Plus, nu: lad.transition(Ladder::Plus, 0)?, amplitude: a });
            continue;
        }
        for ladder in [Ladder::Plus, Ladder::Minus] {
            peaks.push(SpectralPeak { n, ladder, nu: lad.transition(ladder, n)?, amplitude: a });
        }
    }
    let fwhm = 1.0 / (std::f64::consts::PI * p.t2s) * 1e-3;
    let hw2 = (fwhm / 2.0).powi(2);
    let signal = nu_grid
        .iter()
        .map(|&nu| peaks.iter().map(|pk| pk.amplitude * hw2 / ((nu - pk.nu).powi(2) + hw2)).sum())
        .collect();
    Ok(SpectroscopyTrace { beta, fwhm, peaks, nu: nu_grid.to_vec(), signal })
}

impl SpectroscopyTrace {
    pub fn peaks_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["n", "ladder", "nu_ghz", "amplitude"]);
        for pk in &self.peaks {
            let l = if pk.ladder == Ladder::Plus { "+" } else { "-" };
            t.push(vec![pk.n.to_string(), l.into(), format!("{:.12}", pk.nu), fmt_f(pk.amplitude)]);
        }
        t
    }

    pub fn output(&self, p: &SystemParams, seed: u64) -> ScenarioOutput {
        let mut m = Manifest::new("spectroscopy").with_params(p);
        m.set("seed", seed);
        m.set("beta", format!("{}{:+}i", self.beta.re, self.beta.im));
        m.set("fwhm_ghz", fmt_f(self.fwhm));
        let mut data = CsvTable::new(&["nu_ghz", "signal"]);
        for (nu, s) in self.nu.iter().zip(&self.signal) {
            data.push(vec![format!("{nu:.12}"), fmt_f(*s)]);
        }
        let pts = self.nu.iter().zip(&self.signal).map(|(a, b)| (*a, *b)).collect();
        ScenarioOutput {
            manifest: m,
            data,
            svg: Some(line_chart("Transmon spectrum", "probe frequency (GHz)", "signal", &[Series { label: "trace".into(), points: pts }])),
            extra: vec![("peaks".into(), self.peaks_csv())],
        }
    }
}

/// Uniform grid covering every line of a filling with `n_max` photons.
pub fn default_grid(p: &SystemParams, n_max: usize, points: usize) -> Vec<f64> {
    let half = ((2.0 * n_max as f64).sqrt() + 1.0) * p.g_o * 1e-3 + 0.01;
    let c = p.nu_ge;
    (0..points).map(|i| c - half + 2.0 * half * i as f64 / (points - 1) as f64).collect()
}
