//! Run configuration: a TOML file with one section per scenario. Unknown keys
//! are rejected and every key has a default, listed in [`KEYS`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::calibration::{DEVICE_C, DEVICE_K, DEVICE_SIGMA};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "csv+svg")]
    CsvSvg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "csv+svg" => Ok(Format::CsvSvg),
            _ => Err(format!("unknown format {s:?} (csv | csv+svg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Output directory; empty means `out/<subcommand>`.
    pub output: PathBuf,
    pub seed: u64,
    pub format: Format,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { output: PathBuf::new(), seed: 0, format: Format::Csv, jobs: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// numeric | exact3 | series
    pub method: String,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { method: "numeric".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectroscopySection {
    pub beta_re: f64,
    pub beta_im: f64,
    /// Probe window (GHz); equal bounds pick a window covering every line.
    pub nu_min: f64,
    pub nu_max: f64,
    pub points: usize,
}

impl Default for SpectroscopySection {
    fn default() -> Self {
        SpectroscopySection { beta_re: 4.5f64.sqrt(), beta_im: 0.0, nu_min: 0.0, nu_max: 0.0, points: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateSection {
    /// Measured signal CSV (columns n, A, s); empty synthesizes a dataset.
    pub data: PathBuf,
    pub c: Vec<f64>,
    pub k: f64,
    pub sigma: f64,
    pub a_max: f64,
    pub a_points: usize,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        CalibrateSection { data: PathBuf::new(), c: DEVICE_C.to_vec(), k: DEVICE_K, sigma: DEVICE_SIGMA, a_max: 1.5, a_points: 26 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomoSection {
    /// Measured tomogram CSV (columns re_gamma, im_gamma, n, f); empty
    /// synthesizes one.
    pub data: PathBuf,
    pub beta_re: f64,
    pub beta_im: f64,
    pub n_range: usize,
    pub n_trunc: usize,
    /// Relative Gaussian noise on synthetic frequencies.
    pub noise: f64,
    /// exact | driven
    pub preparation: String,
    /// Drive length for `driven` preparation (µs).
    pub duration: f64,
    pub wigner_points: usize,
}

impl Default for TomoSection {
    fn default() -> Self {
        TomoSection {
            data: PathBuf::new(),
            beta_re: -(5f64.sqrt()),
            beta_im: 2f64.sqrt(),
            n_range: 7,
            n_trunc: 18,
            noise: 0.0,
            preparation: "exact".into(),
            duration: 0.3,
            wigner_points: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub powers_dbm: Vec<f64>,
    /// Window relative to the dressed oscillator frequency (kHz).
    pub detuning_min_khz: f64,
    pub detuning_max_khz: f64,
    pub points: usize,
    pub refine: usize,
    /// Fixed truncation; 0 chooses it per power.
    pub n_max: usize,
    pub n_max_limit: usize,
    pub convergence_tol: f64,
    /// Drive amplitude at −149.6 dBm (MHz); 0 calibrates it to ⟨n⟩ = 1.
    pub anchor_eps_mhz: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            powers_dbm: vec![-135.0, -132.0, -129.0, -126.0],
            detuning_min_khz: -14.0,
            detuning_max_khz: 7.0,
            points: 15,
            refine: 2,
            n_max: 0,
            n_max_limit: 160,
            convergence_tol: 1e-3,
            anchor_eps_mhz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySection {
    /// Drive amplitude (MHz); 0 derives it from `p1_dbm` and the anchor.
    pub eps_d_mhz: f64,
    pub p1_dbm: f64,
    pub t_max_us: f64,
    pub points: usize,
    /// Fixed truncation; 0 sizes it from the drive.
    pub n_max: usize,
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection { eps_d_mhz: 0.0, p1_dbm: -149.6, t_max_us: 200.0, points: 41, n_max: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    /// Far-dispersive transmon anharmonicity (MHz); 0 reuses params.alpha.
    pub alpha_pp_mhz: f64,
    pub two_level_detunings_mhz: Vec<f64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { alpha_pp_mhz: 0.0, two_level_detunings_mhz: crate::spectrum::DEFAULT_TWO_LEVEL_DETUNINGS.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub params: SystemParams,
    pub spectrum: SpectrumSection,
    pub spectroscopy: SpectroscopySection,
    pub calibrate: CalibrateSection,
    pub tomo: TomoSection,
    pub sweep: SweepSection,
    pub decay: DecaySection,
    pub compare: CompareSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Every config key with its default and unit/meaning.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("run.output", "\"\"", "output directory; empty means out/<subcommand>"),
    ("run.seed", "0", "RNG seed"),
    ("run.format", "\"csv\"", "csv | csv+svg"),
    ("run.jobs", "0", "worker threads; 0 uses every core"),
    ("params.nu_o", "6.4", "oscillator frequency (GHz)"),
    ("params.nu_ge", "6.661", "transmon g-e frequency (GHz)"),
    ("params.alpha", "-261.0", "anharmonicity (MHz)"),
    ("params.g_o", "7.45", "coupling (MHz)"),
    ("params.h_offset", "-848.0", "h level relative to 3 nu_ge (MHz)"),
    ("params.levels", "4", "transmon levels, 3 or 4"),
    ("params.n_max", "30", "photon-number truncation"),
    ("params.t1", "1.9", "transmon T1 (us)"),
    ("params.t2s", "2.4", "transmon T2* (us)"),
    ("params.t_o", "54.0", "oscillator energy relaxation time (us)"),
    ("params.n_thermal", "0.0", "thermal photons of the oscillator bath"),
    ("spectrum.method", "\"numeric\"", "numeric | exact3 | series"),
    ("spectroscopy.beta_re", "2.1213203435596424", "Re beta of the oscillator filling"),
    ("spectroscopy.beta_im", "0.0", "Im beta"),
    ("spectroscopy.nu_min", "0.0", "probe window start (GHz); equal bounds pick a window"),
    ("spectroscopy.nu_max", "0.0", "probe window end (GHz)"),
    ("spectroscopy.points", "2001", "probe frequencies"),
    ("calibrate.data", "\"\"", "signal CSV (n, A, s); empty synthesizes"),
    ("calibrate.c", "[0.764, 0.835, 0.847, 0.846, 0.833, 0.854, 0.846, 0.834, 0.847, 0.832, 0.841]", "synthetic readout coefficients c_0..c_10"),
    ("calibrate.k", "2.29", "synthetic filling rate (1/V)"),
    ("calibrate.sigma", "0.006", "synthetic noise"),
    ("calibrate.a_max", "1.5", "largest amplitude (V)"),
    ("calibrate.a_points", "26", "amplitudes from 0 to a_max"),
    ("tomo.data", "\"\"", "tomogram CSV (re_gamma, im_gamma, n, f); empty synthesizes"),
    ("tomo.beta_re", "-2.23606797749979", "Re beta of the prepared field"),
    ("tomo.beta_im", "1.4142135623730951", "Im beta"),
    ("tomo.n_range", "7", "highest photon number recorded"),
    ("tomo.n_trunc", "18", "largest photon number of the reconstruction"),
    ("tomo.noise", "0.0", "relative noise on synthetic frequencies"),
    ("tomo.preparation", "\"exact\"", "exact | driven"),
    ("tomo.duration", "0.3", "drive length for driven preparation (us)"),
    ("tomo.wigner_points", "41", "side of the Wigner grid"),
    ("sweep.powers_dbm", "[-135.0, -132.0, -129.0, -126.0]", "input powers P1 (dBm)"),
    ("sweep.detuning_min_khz", "-14.0", "window start relative to the dressed oscillator (kHz)"),
    ("sweep.detuning_max_khz", "7.0", "window end (kHz)"),
    ("sweep.points", "15", "drive frequencies per power"),
    ("sweep.refine", "2", "zoom rounds around each maximum"),
    ("sweep.n_max", "0", "fixed truncation; 0 chooses it per power"),
    ("sweep.n_max_limit", "160", "largest automatic truncation"),
    ("sweep.convergence_tol", "0.001", "relative peak <n> change accepted at 1.2 n_max"),
    ("sweep.anchor_eps_mhz", "0.0", "drive at -149.6 dBm (MHz); 0 calibrates <n> = 1"),
    ("decay.eps_d_mhz", "0.0", "drive amplitude (MHz); 0 derives it from p1_dbm"),
    ("decay.p1_dbm", "-149.6", "input power (dBm)"),
    ("decay.t_max_us", "200.0", "last time (us)"),
    ("decay.points", "41", "output times from 0 to t_max_us"),
    ("decay.n_max", "0", "fixed truncation; 0 sizes it from the drive"),
    ("compare.alpha_pp_mhz", "0.0", "far-dispersive anharmonicity (MHz); 0 reuses params.alpha"),
    ("compare.two_level_detunings_mhz", "[100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0]", "two-level detunings (MHz)"),
];

/// Key table formatted for `--help`.
pub fn keys_help() -> String {
    let mut out = String::from("CONFIG KEYS (TOML, key = default: meaning)\n");
    for (k, d, doc) in KEYS {
        out.push_str(&format!("  {k} = {d}: {doc}\n"));
    }
    out
}
