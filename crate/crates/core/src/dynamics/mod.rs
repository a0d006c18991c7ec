//! Lindblad dynamics of the driven, damped system in the frame rotating at the
//! drive frequency. Hamiltonians are in GHz, rates in µs⁻¹, times in µs and
//! drive amplitudes in MHz.

mod evolve;
mod liouvillian;
mod state;
mod steady;
#[cfg(test)]
mod solver_tests;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub use evolve::{evolve, evolve_with, EvolveMethod, EvolveOptions, Trajectory};
pub use liouvillian::{unvec, vec_of, Superoperator};
pub use state::{poisson, total_variation, DensityMatrix, HERMITICITY_TOL, POSITIVITY_TOL, TRACE_TOL};
pub use steady::{steady_state, steady_state_with, DressedSolver, SteadyMethod, SteadyOptions, SteadyReport};

use crate::error::{Error, Result};
use crate::hilbert::{build_hamiltonian_in_frame, cavity_lowering, transmon_lowering, transmon_number, OperatorMatrix};
use crate::io::CsvTable;
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    CavityDecay,
    CavityHeating,
    TransmonDecay,
    TransmonDephasing,
}

/// Jump operator `c` acting at `rate` in D[c]ρ = cρc† − ½{c†c, ρ}.
#[derive(Debug, Clone)]
pub struct Collapse {
    pub channel: Channel,
    pub op: OperatorMatrix,
    pub rate: f64,
}

/// Coherent cavity drive ε_d(e^{iφ}a + e^{−iφ}a†).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    /// Amplitude in MHz.
    pub eps_d: f64,
    pub phase: f64,
}

#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub params: SystemParams,
    /// Frame (drive) frequency in GHz.
    pub nu_frame: f64,
    /// Undriven rotating-frame Hamiltonian (GHz).
    pub h_rot: OperatorMatrix,
    pub collapses: Vec<Collapse>,
    pub drive: Option<Drive>,
}

impl LindbladModel {
    /// Drive detuning from the dressed oscillator frequency, in MHz.
    pub fn detuning_mhz(&self, nu_dressed: f64) -> f64 {
        (self.nu_frame - nu_dressed) * 1e3
    }

    /// Full rotating-frame Hamiltonian including the drive (GHz).
    pub fn hamiltonian(&self) -> DMatrix<C64> {
        let mut h = self.h_rot.entries().clone();
        if let Some(d) = self.drive {
            if d.eps_d != 0.0 {
                let a = cavity_lowering(&self.params).into_entries();
                let ph = C64::from_polar(d.eps_d * 1e-3, d.phase);
                h += &a * ph + a.adjoint() * ph.conj();
            }
        }
        h
    }

    pub fn with_collapses(mut self, collapses: Vec<Collapse>) -> Self {
        self.collapses = collapses;
        self
    }

    /// Keeps only the channels accepted by `keep`.
    pub fn filter_channels(mut self, keep: impl Fn(Channel) -> bool) -> Self {
        self.collapses.retain(|c| keep(c.channel));
        self
    }

    pub fn superoperator(&self) -> Result<Superoperator> {
        let ops: Vec<(DMatrix<C64>, f64)> =
            self.collapses.iter().map(|c| (c.op.entries().clone(), c.rate)).collect();
        Superoperator::new(&self.hamiltonian(), &ops, 0.0)
    }
}

/// Dissipation channels from the coherence times: cavity decay at 1/T_O,
/// transmon decay at 1/T1 and dephasing a_q†a_q at 2Γ_φ. A nonzero thermal
/// occupation adds the matching cavity heating channel.
pub fn collapse_ops(p: &SystemParams) -> Result<Vec<Collapse>> {
    p.validate()?;
    let gphi = p.dephasing_rate();
    if gphi < -1e-12 {
        return Err(Error::Physicality(format!("negative pure-dephasing rate {gphi}")));
    }
    let a = cavity_lowering(p);
    let mut out = vec![Collapse { channel: Channel::CavityDecay, op: a.clone(), rate: p.kappa() * (1.0 + p.n_thermal) }];
    if p.n_thermal > 0.0 {
        out.push(Collapse { channel: Channel::CavityHeating, op: a.adjoint(), rate: p.kappa() * p.n_thermal });
    }
    out.push(Collapse { channel: Channel::TransmonDecay, op: transmon_lowering(p), rate: 1.0 / p.t1 });
    out.push(Collapse { channel: Channel::TransmonDephasing, op: transmon_number(p), rate: 2.0 * gphi.max(0.0) });
    Ok(out)
}

/// H − ν_drive (a†a + a_q†a_q) with the standard collapse channels and no drive.
pub fn rotating_frame(p: &SystemParams, nu_drive: f64) -> Result<LindbladModel> {
    Ok(LindbladModel {
        params: p.clone(),
        nu_frame: nu_drive,
        h_rot: build_hamiltonian_in_frame(p, nu_drive)?,
        collapses: collapse_ops(p)?,
        drive: None,
    })
}

pub fn add_drive(mut m: LindbladModel, eps_d: f64, phase: f64) -> Result<LindbladModel> {
    if !(eps_d >= 0.0) || !phase.is_finite() {
        return Err(Error::InvalidParameter(format!("drive amplitude {eps_d} / phase {phase}")));
    }
    m.drive = Some(Drive { eps_d, phase });
    Ok(m)
}

/// Reference point of the dBm scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveAnchor {
    pub p_ref_dbm: f64,
    /// Drive amplitude at `p_ref_dbm`, in MHz.
    pub eps_ref: f64,
}

/// Power at which the resonantly driven cavity holds one photon.
pub const P_REF_DBM: f64 = -149.6;

impl DriveAnchor {
    /// Anchor at which a linear cavity with κ = 1/T_O, driven on resonance,
    /// holds ⟨n⟩ = 1: (4π ε_ref/κ)² = 1.
    pub fn linear_cavity(p: &SystemParams) -> Self {
        DriveAnchor { p_ref_dbm: P_REF_DBM, eps_ref: p.kappa() / (4.0 * PI) }
    }
}

/// ε_d(P) = ε_ref · 10^((P − P_ref)/20).
pub fn drive_from_dbm(p_dbm: f64, anchor: &DriveAnchor) -> f64 {
    anchor.eps_ref * 10f64.powf((p_dbm - anchor.p_ref_dbm) / 20.0)
}

/// Steady-state photon number of a linear cavity driven at detuning δ (MHz):
/// ε_d² / ((δ)² + (κ/4π)²).
pub fn linear_cavity_photons(eps_d: f64, kappa: f64, detuning_mhz: f64) -> f64 {
    let half = kappa / (4.0 * PI);
    eps_d * eps_d / (detuning_mhz * detuning_mhz + half * half)
}

/// Rows `x, <n>, purity, p0..p{n_show}` for a list of states, `x` being the
/// time or drive frequency.
pub fn states_csv(x_name: &str, xs: &[f64], states: &[DensityMatrix], n_show: usize) -> CsvTable {
    let mut header = vec![x_name.to_string(), "mean_n".into(), "purity".into()];
    header.extend((0..=n_show).map(|n| format!("p{n}")));
    let mut t = CsvTable { header, rows: Vec::new() };
    for (x, s) in xs.iter().zip(states) {
        let pd = s.photon_distribution();
        let mut row = vec![format!("{x:.9}"), format!("{:.9e}", s.mean_photon_number()), format!("{:.9e}", s.purity())];
        row.extend((0..=n_show).map(|n| format!("{:.9e}", pd.get(n).copied().unwrap_or(0.0))));
        t.rows.push(row);
    }
    t
}
