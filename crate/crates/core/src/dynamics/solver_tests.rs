use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::*;
use crate::hilbert::{Basis, Level};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn cavity_model(n_max: usize, eps_d: f64, phase: f64) -> LindbladModel {
    let p = SystemParams::device_three_level().with_n_max(n_max).with_coupling(0.0);
    let m = rotating_frame(&p, p.nu_o).unwrap();
    add_drive(m, eps_d, phase).unwrap()
}

/// Driven damped cavity built by hand on Fock states 0..=n_max with explicit
/// Kronecker products, solved densely with the trace row.
fn cavity_oracle(n_max: usize, eps_d: f64, kappa: f64) -> DMatrix<C64> {
    let d = n_max + 1;
    let mut a = DMatrix::<C64>::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    let h = (&a + a.adjoint()) * c(eps_d);
    let id = DMatrix::<C64>::identity(d, d);
    let ad = a.adjoint();
    let ada = &ad * &a;
    let w = C64::new(0.0, 2.0 * PI);
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-w);
    l += (a.map(|z| z.conj()).kronecker(&a) - id.kronecker(&ada) * c(0.5) - ada.transpose().kronecker(&id) * c(0.5)) * c(kappa);
    for j in 0..d {
        l[(0, j * d + j)] = c(1.0);
    }
    for k in 1..d * d {
        l[(0, k)] = if k % (d + 1) == 0 { c(1.0) } else { c(0.0) };
    }
    let mut b = DVector::<C64>::zeros(d * d);
    b[0] = c(1.0);
    let x = l.lu().solve(&b).unwrap();
    DMatrix::from_column_slice(d, d, x.as_slice())
}

#[test]
fn linear_cavity_matches_oracle() {
    let eps = 0.004;
    let m = cavity_model(3, eps, 0.0);
    let rho = steady_state(&m).unwrap();
    let osc = rho.oscillator_state();
    let want = cavity_oracle(3, eps, m.params.kappa());
    assert!((osc.entries() - &want).norm() < 1e-9, "{}", (osc.entries() - &want).norm());
}

#[test]
fn linear_cavity_closed_form() {
    let p = SystemParams::device_three_level();
    let anchor = DriveAnchor::linear_cavity(&p);
    let m = cavity_model(14, anchor.eps_ref, 0.0);
    let rho = steady_state(&m).unwrap();
    let n = rho.mean_photon_number();
    assert!((n - 1.0).abs() < 1e-8, "{n}");
    let pd = rho.photon_distribution();
    assert!((pd[0] - (-1f64).exp()).abs() < 1e-8);
    assert!(total_variation(&pd, &poisson(1.0, 14)) < 1e-8);
    // off resonance: ε²/(δ² + (κ/4π)²)
    let m = add_drive(rotating_frame(&m.params, m.params.nu_o + 2e-6).unwrap(), anchor.eps_ref, 0.0).unwrap();
    let n = steady_state(&m).unwrap().mean_photon_number();
    let want = linear_cavity_photons(anchor.eps_ref, p.kappa(), 2e-3);
    assert!((n - want).abs() < 1e-8 * want.max(1.0), "{n} vs {want}");
}

#[test]
fn drive_phase_rotates_amplitude() {
    let a0 = steady_state(&cavity_model(18, 0.002, 0.0)).unwrap();
    let a1 = steady_state(&cavity_model(18, 0.002, 0.7)).unwrap();
    let (f0, f1) = (a0.field_amplitude(), a1.field_amplitude());
    assert!((f1 - f0 * C64::from_polar(1.0, -0.7)).norm() < 1e-10);
    assert!((a0.mean_photon_number() - a1.mean_photon_number()).abs() < 1e-10);
    // α = −i4πε/κ
    let want = C64::new(0.0, -4.0 * PI * 0.002 / a0_kappa());
    assert!((f0 - want).norm() < 1e-6, "{f0} vs {want}");
}

fn a0_kappa() -> f64 {
    SystemParams::device_three_level().kappa()
}

#[test]
fn undriven_steady_state_is_ground() {
    let p = SystemParams::device().with_n_max(5);
    let rho = steady_state(&rotating_frame(&p, p.nu_o).unwrap()).unwrap();
    assert!((rho.entries()[(0, 0)] - c(1.0)).norm() < 1e-10);
    assert!(rho.purity() > 1.0 - 1e-10);
}

#[test]
fn iterative_matches_direct() {
    let p = SystemParams::device().with_n_max(10);
    let nu = p.nu_o - 0.2e-3;
    let m = add_drive(rotating_frame(&p, nu).unwrap(), 0.01, 0.3).unwrap();
    let direct = steady_state_with(&m, &SteadyOptions { method: SteadyMethod::Direct, ..Default::default() }).unwrap();
    let iter = steady_state_with(&m, &SteadyOptions { method: SteadyMethod::Iterative, ..Default::default() }).unwrap();
    let diff = (direct.rho.entries() - iter.rho.entries()).norm();
    assert!(diff < 1e-8, "{diff}");
    assert!(iter.residual <= 1e-10 * iter.norm);
    assert!(direct.residual <= 1e-10 * direct.norm);
    assert!(direct.rho.mean_photon_number() > 0.5);
}

#[test]
fn degenerate_kernel_detected() {
    let p = SystemParams::device_three_level().with_n_max(3);
    let m = rotating_frame(&p, p.nu_o).unwrap().filter_channels(|ch| ch == Channel::TransmonDephasing);
    assert!(matches!(steady_state(&m), Err(Error::Degeneracy(_))));
    let none = rotating_frame(&p, p.nu_o).unwrap().with_collapses(vec![]);
    assert!(matches!(steady_state(&none), Err(Error::Degeneracy(_))));
}

#[test]
fn ground_state_is_dark() {
    let p = SystemParams::device_three_level().with_n_max(4);
    let m = rotating_frame(&p, p.nu_o).unwrap();
    let rho0 = DensityMatrix::basis_state(0, m.h_rot.basis()).unwrap();
    let traj = evolve(&m, &rho0, &[0.0, 1.0, 5.0]).unwrap();
    for s in &traj {
        assert!((s.entries() - rho0.entries()).norm() < 1e-12);
    }
}

#[test]
fn resonant_drive_displaces_vacuum() {
    let eps = 0.5;
    let m = cavity_model(20, eps, 0.0).with_collapses(vec![]);
    let rho0 = DensityMatrix::basis_state(0, m.h_rot.basis()).unwrap();
    let ts = [0.0, 0.1, 0.2, 0.3];
    let traj = evolve(&m, &rho0, &ts).unwrap();
    for (t, s) in ts.iter().zip(&traj) {
        let want = (2.0 * PI * eps * t).powi(2);
        assert!((s.mean_photon_number() - want).abs() < 1e-5, "t={t}: {} vs {want}", s.mean_photon_number());
        let amp = s.field_amplitude();
        assert!((amp - C64::new(0.0, -2.0 * PI * eps * t)).norm() < 1e-5);
    }
}

#[test]
fn excited_transmon_decays_with_t1() {
    let p = SystemParams::device_three_level().with_n_max(2).with_coupling(0.0);
    let m = rotating_frame(&p, p.nu_o).unwrap().filter_channels(|ch| ch == Channel::TransmonDecay);
    let basis = m.h_rot.basis();
    let e0 = basis.index_of(Level::E, 0).unwrap();
    let rho0 = DensityMatrix::basis_state(e0, basis).unwrap();
    let ts: Vec<f64> = (0..6).map(|k| k as f64 * 0.8).collect();
    let traj = evolve(&m, &rho0, &ts).unwrap();
    for (t, s) in ts.iter().zip(&traj) {
        let pe = s.entries()[(e0, e0)].re;
        assert!((pe - (-t / p.t1).exp()).abs() < 1e-6, "t={t}: {pe}");
    }
}

#[test]
fn closed_evolution_keeps_purity() {
    let p = SystemParams::device_three_level().with_n_max(2);
    let m = rotating_frame(&p, p.nu_o).unwrap().with_collapses(vec![]);
    let basis = m.h_rot.basis();
    let mut psi = DVector::<C64>::zeros(basis.dim());
    psi[0] = c(0.6);
    psi[basis.index_of(Level::G, 1).unwrap()] = c(0.8);
    let rho0 = DensityMatrix::pure(&psi, basis).unwrap();
    let traj = evolve_with(&m, &rho0, &[0.0, 2.5, 10.0], &EvolveOptions::default()).unwrap();
    for s in &traj.states {
        assert!((s.purity() - 1.0).abs() < 1e-8, "{}", s.purity());
        assert!(s.hermiticity_defect() < 1e-9);
    }
    assert!(traj.max_trace_drift < 1e-8 * 10.0);
}

#[test]
fn long_evolution_reaches_steady_state() {
    let p = SystemParams::device_three_level().with_n_max(9);
    let anchor = DriveAnchor::linear_cavity(&p);
    let m = add_drive(rotating_frame(&p, p.nu_o - 0.2125e-3).unwrap(), anchor.eps_ref, 0.0).unwrap();
    let ss = steady_state(&m).unwrap();
    let rho0 = DensityMatrix::basis_state(0, m.h_rot.basis()).unwrap();
    let t_end = 10.0 * p.t_o;
    let traj = evolve_with(&m, &rho0, &[0.0, t_end / 2.0, t_end], &EvolveOptions::default()).unwrap();
    let last = traj.states.last().unwrap();
    let (a, b) = (last.mean_photon_number(), ss.mean_photon_number());
    assert!((a - b).abs() < 0.01 * b, "{a} vs {b}");
    assert!(traj.max_trace_drift < 1e-8 * t_end);
    for s in &traj.states {
        s.check().unwrap();
    }
}

#[test]
fn basis_mismatch_rejected() {
    let p = SystemParams::device_three_level().with_n_max(2);
    let m = rotating_frame(&p, p.nu_o).unwrap();
    let rho = DensityMatrix::basis_state(0, Basis::Product { levels: 3, n_max: 3 }).unwrap();
    assert!(evolve(&m, &rho, &[0.0, 1.0]).is_err());
    let ok = DensityMatrix::basis_state(0, m.h_rot.basis()).unwrap();
    assert!(evolve(&m, &ok, &[1.0, 0.5]).is_err());
}
