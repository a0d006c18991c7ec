//! Simulated experiments: spectroscopy, readout calibration, tomography runs,
//! power sweeps and coherence-decay scans. Each scenario yields a
//! [`ScenarioOutput`] that can be written as `manifest`, `data.csv` and an
//! optional `plot.svg`.

pub mod calibration;
pub mod decay;
pub mod spectroscopy;
pub mod sweep;
pub mod tomo;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::params::SystemParams;

pub use calibration::{default_amplitudes, fit_calibration, synth_calibration, CalibrationDataset, FitResult};
pub use decay::{coherence_decay_scan, coherence_decay_scan_with, DecayOptions, DecayPoint, DecayScan};
pub use spectroscopy::{spectroscopy_trace, SpectroscopyTrace, SpectralPeak};
pub use sweep::{calibrate_anchor, power_sweep, power_sweep_with, SweepCurve, SweepOptions, SweepResult};
pub use tomo::{tomography_from_data, tomography_run, Preparation, TomographyRun, TomographyRunOptions};

/// Ordered key/value record written next to the data of every scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(scenario: &str) -> Self {
        let mut m = Manifest::default();
        m.set("scenario", scenario);
        m.set("efres_version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.entries.push((key.to_string(), v)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn with_params(mut self, p: &SystemParams) -> Self {
        self.set("params.nu_o", p.nu_o);
        self.set("params.nu_ge", p.nu_ge);
        self.set("params.alpha", p.alpha);
        self.set("params.g_o", p.g_o);
        self.set("params.h_offset", p.h_offset);
        self.set("params.levels", p.levels);
        self.set("params.n_max", p.n_max);
        self.set("params.t1", p.t1);
        self.set("params.t2s", p.t2s);
        self.set("params.t_o", p.t_o);
        self.set("params.n_thermal", p.n_thermal);
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub manifest: Manifest,
    pub data: CsvTable,
    pub svg: Option<String>,
    /// Extra named tables written beside `data.csv`.
    pub extra: Vec<(String, CsvTable)>,
}

impl ScenarioOutput {
    pub fn write(&self, dir: &Path, with_svg: bool) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| io_at(dir, e))?;
        let put = |name: &str, body: &str| fs::write(dir.join(name), body).map_err(|e| io_at(&dir.join(name), e));
        put("manifest", &self.manifest.render())?;
        self.data.save(&dir.join("data.csv"))?;
        for (name, t) in &self.extra {
            t.save(&dir.join(format!("{name}.csv")))?;
        }
        if with_svg {
            if let Some(svg) = &self.svg {
                put("plot.svg", svg)?;
            }
        }
        Ok(())
    }
}

fn io_at(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub(crate) fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}
