//! Photon-number readout calibration s(n, A) = c_n · Poisson(|kA|²; n).

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentOpt;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::poisson;
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::plot::{line_chart, Series};
use super::{fmt_f, Manifest, ScenarioOutput};

/// Readout coefficients c_0..c_10 of the measured device.
pub const DEVICE_C: [f64; 11] = [0.764, 0.835, 0.847, 0.846, 0.833, 0.854, 0.846, 0.834, 0.847, 0.832, 0.841];
/// Filling rate k in V⁻¹.
pub const DEVICE_K: f64 = 2.29;
/// Residual standard deviation of the measured calibration.
pub const DEVICE_SIGMA: f64 = 0.006;

/// 26 amplitudes evenly spaced over [0, 1.5] V.
pub fn default_amplitudes() -> Vec<f64> {
    (0..26).map(|i| 1.5 * i as f64 / 25.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTruth {
    pub c: Vec<f64>,
    pub k: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDataset {
    pub amplitudes: Vec<f64>,
    /// `s[(n, j)]` for photon number n and amplitude index j.
    pub s: DMatrix<f64>,
    pub truth: Option<CalibrationTruth>,
}

impl CalibrationDataset {
    pub fn validate(&self) -> Result<()> {
        if self.s.ncols() != self.amplitudes.len() || self.s.nrows() == 0 {
            return Err(Error::Data("signal grid does not match the amplitude list".into()));
        }
        if let Some(x) = self.s.iter().find(|x| !x.is_finite() || **x < 0.0 || **x > 1.0) {
            return Err(Error::Data(format!("signal value {x} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["n", "A", "s"]);
        for n in 0..self.s.nrows() {
            for (j, a) in self.amplitudes.iter().enumerate() {
                t.push(vec![n.to_string(), format!("{a:.6}"), format!("{:.12e}", self.s[(n, j)])]);
            }
        }
        t
    }

    /// Reads the long format written by [`Self::to_csv`]; the grid must be
    /// complete.
    pub fn from_csv(t: &CsvTable) -> Result<Self> {
        let n = t.column("n")?;
        let a = t.column("A")?;
        let s = t.column("s")?;
        let mut amps: Vec<f64> = Vec::new();
        for &x in &a {
            if !amps.iter().any(|y| (y - x).abs() < 1e-12) {
                amps.push(x);
            }
        }
        amps.sort_by(|x, y| x.total_cmp(y));
        let n_rows = n.iter().fold(0.0f64, |m, &x| m.max(x)) as usize + 1;
        let mut grid = DMatrix::from_element(n_rows, amps.len(), f64::NAN);
        for k in 0..n.len() {
            let j = amps.iter().position(|y| (y - a[k]).abs() < 1e-12).unwrap();
            grid[(n[k] as usize, j)] = s[k];
        }
        if grid.iter().any(|x| x.is_nan()) {
            return Err(Error::Data("calibration grid has gaps".into()));
        }
        let d = CalibrationDataset { amplitudes: amps, s: grid, truth: None };
        d.validate()?;
        Ok(d)
    }
}

fn model_column(k: f64, a: f64, n_rows: usize) -> Vec<f64> {
    poisson((k * a).powi(2), n_rows - 1)
}

/// s(n, A) = c_n Poisson(|kA|²; n) + N(0, σ²), clamped to [0, 1].
pub fn synth_calibration(c: &[f64], k: f64, sigma: f64, amplitudes: &[f64], seed: u64) -> Result<CalibrationDataset> {
    if c.is_empty() || c.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::InvalidParameter("coefficients must lie in (0, 1]".into()));
    }
    if !(k > 0.0) || !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("k = {k}, sigma = {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let rows = c.len();
    let mut s = DMatrix::zeros(rows, amplitudes.len());
    for (j, &a) in amplitudes.iter().enumerate() {
        let p = model_column(k, a, rows);
        for n in 0..rows {
            let eps = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            s[(n, j)] = (c[n] * p[n] + eps).clamp(0.0, 1.0);
        }
    }
    Ok(CalibrationDataset {
        amplitudes: amplitudes.to_vec(),
        s,
        truth: Some(CalibrationTruth { c: c.to_vec(), k, sigma }),
    })
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub c: Vec<f64>,
    pub k: f64,
    /// Standard deviation of the residuals s − model.
    pub residual_sigma: f64,
    /// Parameter covariance, ordered (c_0, …, c_10, k).
    pub covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    /// Jarque–Bera normality test of the residuals.
    pub normality_p: f64,
    pub sum_squares: f64,
}

impl FitResult {
    pub fn k_stderr(&self) -> f64 {
        let m = self.covariance.nrows();
        self.covariance[(m - 1, m - 1)].sqrt()
    }

    /// Structured text summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("k = {:.6} +/- {:.6} V^-1\n", self.k, self.k_stderr()));
        for (n, c) in self.c.iter().enumerate() {
            out.push_str(&format!("c_{n} = {c:.6} +/- {:.6}\n", self.covariance[(n, n)].sqrt()));
        }
        out.push_str(&format!("residual_sigma = {:.6}\n", self.residual_sigma));
        out.push_str(&format!("normality_p = {:.4}\n", self.normality_p));
        out
    }
}

/// Optimal c_n for fixed k and the resulting sum of squares.
fn inner(d: &CalibrationDataset, k: f64) -> (Vec<f64>, f64) {
    let rows = d.s.nrows();
    let cols: Vec<Vec<f64>> = d.amplitudes.iter().map(|&a| model_column(k, a, rows)).collect();
    let mut c = vec![0.0; rows];
    let mut ss = 0.0;
    for n in 0..rows {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, p) in cols.iter().enumerate() {
            num += d.s[(n, j)] * p[n];
            den += p[n] * p[n];
        }
        c[n] = if den > 0.0 { num / den } else { 0.0 };
        for (j, p) in cols.iter().enumerate() {
            ss += (d.s[(n, j)] - c[n] * p[n]).powi(2);
        }
    }
    (c, ss)
}

struct Profile<'a>(&'a CalibrationDataset);

impl CostFunction for Profile<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, k: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(inner(self.0, *k).1)
    }
}

const K_LO: f64 = 0.5;
const K_HI: f64 = 5.0;
const K_STARTS: usize = 46;

/// Separable least squares: closed-form c_n for each k, Brent search over k
/// in every bracket of a multistart grid on [0.5, 5] V⁻¹.
pub fn fit_calibration(d: &CalibrationDataset) -> Result<FitResult> {
    d.validate()?;
    let rows = d.s.nrows();
    for n in 0..rows {
        if (0..d.s.ncols()).all(|j| d.s[(n, j)] == 0.0) {
            return Err(Error::Fit(format!("signal row n = {n} is identically zero")));
        }
    }
    let grid: Vec<f64> = (0..K_STARTS).map(|i| K_LO + (K_HI - K_LO) * i as f64 / (K_STARTS - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&k| inner(d, k).1).collect();
    let mut best = (f64::INFINITY, grid[0]);
    for i in 0..K_STARTS {
        let is_min = (i == 0 || vals[i] <= vals[i - 1]) && (i + 1 == K_STARTS || vals[i] <= vals[i + 1]);
        if !is_min {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(K_STARTS - 1)];
        let solver = BrentOpt::new(lo, hi).set_tolerance(1e-14, 1e-14);
        let res = Executor::new(Profile(d), solver)
            .configure(|s| s.max_iters(500))
            .run()
            .map_err(|e| Error::Fit(format!("k search: {e}")))?;
        let st = res.state();
        if st.best_cost < best.0 {
            best = (st.best_cost, st.best_param.unwrap_or(grid[i]));
        }
    }
    let k = best.1;
    let (c, ss) = inner(d, k);

    let mut residuals = Vec::with_capacity(rows * d.amplitudes.len());
    // Jacobian of the model wrt (c_0..c_{rows-1}, k)
    let np = rows + 1;
    let mut jac = DMatrix::<f64>::zeros(rows * d.amplitudes.len(), np);
    let mut r = 0;
    for (j, &a) in d.amplitudes.iter().enumerate() {
        let p = model_column(k, a, rows);
        let lam = (k * a).powi(2);
        for n in 0..rows {
            residuals.push(d.s[(n, j)] - c[n] * p[n]);
            jac[(r, n)] = p[n];
            // d/dk Poisson(λ; n) = p (n/λ − 1) dλ/dk, dλ/dk = 2ka²
            let dp = if lam > 0.0 { p[n] * (n as f64 / lam - 1.0) * 2.0 * k * a * a } else { 0.0 };
            jac[(r, rows)] = c[n] * dp;
            r += 1;
        }
    }
    let m = residuals.len();
    let mean = residuals.iter().sum::<f64>() / m as f64;
    let var = residuals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    let residual_sigma = var.sqrt();
    let s2 = ss / (m as f64 - np as f64);
    let jtj = jac.transpose() * &jac;
    let covariance = jtj
        .clone()
        .try_inverse()
        .map(|inv| inv * s2)
        .unwrap_or_else(|| DMatrix::from_element(np, np, f64::NAN));
    let normality_p = jarque_bera(&residuals);
    Ok(FitResult { c, k, residual_sigma, covariance, residuals, normality_p, sum_squares: ss })
}

impl FitResult {
    /// Rows n, A, s, model, residual.
    pub fn residual_table(&self, d: &CalibrationDataset) -> CsvTable {
        let rows = d.s.nrows();
        let mut t = CsvTable::new(&["n", "A", "s", "model", "residual"]);
        for (j, &a) in d.amplitudes.iter().enumerate() {
            let p = model_column(self.k, a, rows);
            for n in 0..rows {
                let m = self.c[n] * p[n];
                t.push(vec![n.to_string(), format!("{a:.6}"), fmt_f(d.s[(n, j)]), fmt_f(m), fmt_f(d.s[(n, j)] - m)]);
            }
        }
        t
    }

    pub fn output(&self, d: &CalibrationDataset, seed: u64) -> ScenarioOutput {
        let mut m = Manifest::new("calibrate");
        m.set("seed", seed);
        if let Some(t) = &d.truth {
            m.set("truth.k", t.k);
            m.set("truth.sigma", t.sigma);
            m.set("truth.c", t.c.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
        }
        m.set("fit.k", fmt_f(self.k));
        m.set("fit.k_stderr", fmt_f(self.k_stderr()));
        for (n, c) in self.c.iter().enumerate() {
            m.set(&format!("fit.c_{n}"), fmt_f(*c));
        }
        m.set("fit.residual_sigma", fmt_f(self.residual_sigma));
        m.set("fit.normality_p", fmt_f(self.normality_p));
        let rows = d.s.nrows();
        let mut series = Vec::new();
        for n in 0..rows {
            series.push(Series {
                label: format!("n={n}"),
                points: d.amplitudes.iter().enumerate().map(|(j, &a)| (a, d.s[(n, j)])).collect(),
            });
        }
        let svg = line_chart("Photon-number readout calibration", "A (V)", "s(n, A)", &series);
        ScenarioOutput { manifest: m, data: self.residual_table(d), svg: Some(svg), extra: vec![] }
    }
}

/// p-value of the Jarque–Bera statistic (χ² with two degrees of freedom).
pub fn jarque_bera(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 1.0;
    }
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let jb = n / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
    let chi = ChiSquared::new(2.0).expect("two degrees of freedom");
    1.0 - chi.cdf(jb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_column() {
        let d = synth_calibration(&DEVICE_C, DEVICE_K, 0.0, &default_amplitudes(), 1).unwrap();
        assert_eq!(d.s[(0, 0)], DEVICE_C[0]);
        assert!((1..11).all(|n| d.s[(n, 0)] == 0.0));
    }

    #[test]
    fn partial_poisson_sums() {
        let amps = default_amplitudes();
        let d = synth_calibration(&DEVICE_C, DEVICE_K, 0.0, &amps, 1).unwrap();
        for (j, &a) in amps.iter().enumerate() {
            let lhs: f64 = (0..11).map(|n| d.s[(n, j)] / DEVICE_C[n]).sum();
            let rhs: f64 = poisson((DEVICE_K * a).powi(2), 10).iter().sum();
            assert!((lhs - rhs).abs() < 1e-12);
            assert!(rhs <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn noiseless_inversion() {
        let d = synth_calibration(&DEVICE_C, DEVICE_K, 0.0, &default_amplitudes(), 1).unwrap();
        let f = fit_calibration(&d).unwrap();
        assert!((f.k - DEVICE_K).abs() < 1e-8 * DEVICE_K, "{}", f.k);
        for (a, b) in f.c.iter().zip(DEVICE_C) {
            assert!((a - b).abs() < 1e-8 * b);
        }
    }

    #[test]
    fn zero_row_rejected() {
        let mut d = synth_calibration(&DEVICE_C, DEVICE_K, 0.0, &default_amplitudes(), 1).unwrap();
        d.s.row_mut(4).fill(0.0);
        match fit_calibration(&d) {
            Err(Error::Fit(m)) => assert!(m.contains("n = 4")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = synth_calibration(&DEVICE_C, DEVICE_K, 0.006, &default_amplitudes(), 5).unwrap();
        let back = CalibrationDataset::from_csv(&d.to_csv()).unwrap();
        assert!((back.s - &d.s).abs().max() < 1e-11);
        let mut t = d.to_csv();
        t.rows.pop();
        assert!(CalibrationDataset::from_csv(&t).is_err());
    }
}
