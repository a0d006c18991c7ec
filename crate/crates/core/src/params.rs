//! Physical constants of the coupled transmon–oscillator system.
//!
//! Units: oscillator and transmon frequencies in GHz, couplings and
//! anharmonicities in MHz, coherence times in µs. All Hamiltonians built from
//! these parameters are `H/h` in GHz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest reduced coupling |ε| accepted by [`SystemParams::validate`].
pub const MAX_REDUCED_COUPLING: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Oscillator frequency ν_O (GHz).
    pub nu_o: f64,
    /// Transmon g–e frequency ν_ge (GHz).
    pub nu_ge: f64,
    /// Anharmonicity α = ν_ef − ν_ge (MHz, signed).
    pub alpha: f64,
    /// Transmon–oscillator coupling g_O (MHz).
    pub g_o: f64,
    /// Energy of |h⟩ relative to 3ν_ge (MHz). Only used with four levels.
    pub h_offset: f64,
    /// Number of transmon levels kept (3 or 4).
    pub levels: usize,
    /// Photon-number truncation.
    pub n_max: usize,
    /// Transmon relaxation time T1 (µs).
    pub t1: f64,
    /// Transmon Ramsey time T2* (µs).
    pub t2s: f64,
    /// Oscillator energy relaxation time T_O (µs).
    pub t_o: f64,
    /// Thermal occupation of the oscillator bath.
    #[serde(default)]
    pub n_thermal: f64,
}

impl SystemParams {
    /// Measured values of the ef-resonant device, with ν_ge placed exactly at
    /// the ef-resonance ν_ge + α = ν_O.
    pub fn device() -> Self {
        let nu_o = 6.4;
        let alpha = -261.0;
        SystemParams {
            nu_o,
            nu_ge: nu_o - alpha * 1e-3,
            alpha,
            g_o: 7.45,
            h_offset: -848.0,
            levels: 4,
            n_max: 30,
            t1: 1.9,
            t2s: 2.4,
            t_o: 54.0,
            n_thermal: 0.0,
        }
    }

    /// Same device restricted to three transmon levels.
    pub fn device_three_level() -> Self {
        SystemParams { levels: 3, ..Self::device() }
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_coupling(mut self, g_o: f64) -> Self {
        self.g_o = g_o;
        self
    }

    /// Reduced coupling ε = −g_O/α.
    pub fn epsilon(&self) -> f64 {
        -self.g_o / self.alpha
    }

    /// Detuning Δ = ν_ge − ν_O in MHz.
    pub fn delta(&self) -> f64 {
        (self.nu_ge - self.nu_o) * 1e3
    }

    /// Distance from the ef-resonance, |(ν_ge + α) − ν_O| in MHz.
    pub fn ef_detuning(&self) -> f64 {
        (self.delta() + self.alpha).abs()
    }

    pub fn is_ef_resonant(&self) -> bool {
        self.ef_detuning() < 1e-9
    }

    /// Hilbert-space dimension `levels · (n_max + 1)`.
    pub fn dim(&self) -> usize {
        self.levels * (self.n_max + 1)
    }

    /// Pure-dephasing rate Γ_φ = 1/T2* − 1/(2T1) in µs⁻¹.
    pub fn dephasing_rate(&self) -> f64 {
        1.0 / self.t2s - 0.5 / self.t1
    }

    /// Oscillator energy decay rate κ = 1/T_O in µs⁻¹.
    pub fn kappa(&self) -> f64 {
        1.0 / self.t_o
    }

    /// Bare transmon level energies relative to |g⟩ in GHz.
    pub(crate) fn level_energy(&self, level: usize) -> f64 {
        match level {
            0 => 0.0,
            1 => self.nu_ge,
            2 => 2.0 * self.nu_ge + self.alpha * 1e-3,
            3 => 3.0 * self.nu_ge + self.h_offset * 1e-3,
            _ => unreachable!("level index checked by validate"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(3..=4).contains(&self.levels) {
            return bad(format!("levels must be 3 or 4, got {}", self.levels));
        }
        if self.n_max < 2 {
            return bad(format!("n_max must be at least 2, got {}", self.n_max));
        }
        for (name, v) in [
            ("nu_o", self.nu_o),
            ("nu_ge", self.nu_ge),
            ("alpha", self.alpha),
            ("g_o", self.g_o),
            ("h_offset", self.h_offset),
            ("t1", self.t1),
            ("t2s", self.t2s),
            ("t_o", self.t_o),
            ("n_thermal", self.n_thermal),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} is not finite"));
            }
        }
        if self.alpha == 0.0 {
            return bad("alpha must be nonzero".into());
        }
        if self.g_o < 0.0 {
            return bad(format!("g_o must be non-negative, got {}", self.g_o));
        }
        if self.epsilon().abs() >= MAX_REDUCED_COUPLING {
            return bad(format!(
                "reduced coupling |eps| = {:.4} exceeds the model limit {MAX_REDUCED_COUPLING}",
                self.epsilon().abs()
            ));
        }
        if self.t1 <= 0.0 || self.t2s <= 0.0 || self.t_o <= 0.0 {
            return bad("coherence times must be positive".into());
        }
        if self.n_thermal < 0.0 {
            return bad("n_thermal must be non-negative".into());
        }
        if self.t2s > 2.0 * self.t1 * (1.0 + 1e-12) {
            return Err(Error::Physicality(format!(
                "T2* = {} us exceeds 2 T1 = {} us",
                self.t2s,
                2.0 * self.t1
            )));
        }
        Ok(())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::device()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_coupling_of_device() {
        let p = SystemParams::device();
        assert!((p.epsilon() - 0.028544).abs() < 5e-6);
        assert!(p.is_ef_resonant());
        assert!((p.delta() - 261.0).abs() < 1e-9);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let p = SystemParams::device();
        assert!(SystemParams { alpha: 0.0, ..p.clone() }.validate().is_err());
        assert!(SystemParams { levels: 2, ..p.clone() }.validate().is_err());
        assert!(SystemParams { g_o: 60.0, ..p.clone() }.validate().is_err());
        assert!(matches!(
            SystemParams { t2s: 4.0, ..p.clone() }.validate(),
            Err(Error::Physicality(_))
        ));
        assert!(SystemParams { n_max: 1, ..p }.validate().is_err());
    }
}
