//! Randomized property checks shared by the property suite and the
//! acceptance runner. Each check draws `cases` inputs from a fixed seed.

use efres::dynamics::{add_drive, evolve_with, rotating_frame, DensityMatrix, EvolveOptions};
use efres::hilbert::{build_hamiltonian, displacement_working_dim, oscillator_lowering, Displacer};
use efres::tomography::{
    displacement_grid, mle_reconstruct_with, povm_elements, synthesize_coherent, wigner, MleOptions,
};
use efres::SystemParams;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Discrete, Poisson};

pub const CASES: u32 = 128;

fn runner(seed: u8, cases: u32) -> TestRunner {
    let cfg = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn report<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn complex(r: f64) -> impl Strategy<Value = C64> {
    (0.0..r, 0.0..std::f64::consts::TAU).prop_map(|(m, th)| C64::from_polar(m, th))
}

/// Random mixed state of dimension `d` from a Ginibre matrix.
fn random_state(d: usize, seed: u64) -> DMatrix<C64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<C64>::from_fn(d, d, |_, _| {
        C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

fn params() -> impl Strategy<Value = SystemParams> {
    (3usize..=4, 2usize..=5, 0.0..15.0f64, -320.0..-150.0f64, 0.5..3.0f64, 5.0..80.0f64).prop_map(
        |(levels, n_max, g, alpha, t1, t_o)| {
            let p = SystemParams::device();
            SystemParams {
                levels,
                n_max,
                g_o: g,
                alpha,
                nu_ge: p.nu_o - alpha * 1e-3,
                t1,
                t2s: 1.5 * t1,
                t_o,
                ..p
            }
        },
    )
}

/// Tr ρ(t) stays 1 and ρ(t) stays Hermitian under driven, damped evolution.
pub fn trace_preservation(cases: u32) -> Result<(), String> {
    report(runner(1, cases).run(&(params(), 0.0..3.0f64, 0.01..0.3f64), |(p, eps, t)| {
        let m = add_drive(rotating_frame(&p, p.nu_o).unwrap(), eps, 0.3).unwrap();
        let rho0 = DensityMatrix::basis_state(0, m.h_rot.basis()).unwrap();
        let tr = evolve_with(&m, &rho0, &[0.0, t], &EvolveOptions::default()).unwrap();
        let rho = &tr.states[1];
        prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-9, "trace {}", rho.trace());
        prop_assert!(rho.hermiticity_defect() < 1e-9);
        prop_assert!(rho.min_eigenvalue() > -1e-8);
        Ok(())
    }))
}

/// The Hamiltonian is Hermitian and the Liouvillian maps Hermitian matrices
/// to Hermitian, traceless ones.
pub fn hermiticity(cases: u32) -> Result<(), String> {
    report(runner(2, cases).run(&(params(), 0.0..2.0f64, any::<u64>()), |(p, eps, seed)| {
        let h = build_hamiltonian(&p).unwrap();
        prop_assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs().max(1.0));
        let m = add_drive(rotating_frame(&p, p.nu_o).unwrap(), eps, 1.1).unwrap();
        let rho = random_state(p.dim(), seed);
        let l = m.superoperator().unwrap().apply(&rho);
        let scale = l.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!((&l - l.adjoint()).iter().all(|z| z.norm() < 1e-10 * scale));
        prop_assert!(l.trace().norm() < 1e-10 * scale);
        Ok(())
    }))
}

/// Displaced photon-number elements with their remainder sum to the identity,
/// the remainder is positive, and on coherent states the elements give
/// Poisson(|α + γ|²).
pub fn povm_completeness(cases: u32) -> Result<(), String> {
    report(runner(3, cases).run(&(complex(3.0), complex(1.5), 0usize..8), |(gamma, alpha, n_range)| {
        let n_trunc = 20;
        let povm = povm_elements(gamma, n_range, n_trunc).unwrap();
        let mut sum = povm.rest.clone();
        for n in 0..=n_range {
            sum += povm.element(n);
        }
        let id = DMatrix::<C64>::identity(n_trunc + 1, n_trunc + 1);
        prop_assert!((&sum - &id).iter().all(|z| z.norm() < 1e-10));
        let rest_min = nalgebra::SymmetricEigen::new(povm.rest.clone()).eigenvalues.min();
        prop_assert!(rest_min > -1e-10, "{rest_min}");
        // |α⟩ from its Fock amplitudes, summed in log space
        let psi = DVector::<C64>::from_fn(n_trunc + 1, |k, _| {
            let lnf: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
            let mag = (-0.5 * alpha.norm_sqr() + k as f64 * alpha.norm().ln() - 0.5 * lnf).exp();
            C64::from_polar(if alpha.norm() == 0.0 { (k == 0) as u8 as f64 } else { mag }, k as f64 * alpha.arg())
        });
        let lambda = (alpha + gamma).norm_sqr();
        for n in 0..=n_range {
            let v = &povm.vectors[n];
            let p = (v.adjoint() * &psi)[(0, 0)].norm_sqr();
            let oracle = if lambda == 0.0 { (n == 0) as u8 as f64 } else { Poisson::new(lambda).unwrap().pmf(n as u64) };
            prop_assert!((p - oracle).abs() < 1e-7, "n {n} gamma {gamma} alpha {alpha}: {p} vs {oracle}");
        }
        Ok(())
    }))
}

/// Each RρR iteration does not lower the log-likelihood.
pub fn mle_monotonicity(cases: u32) -> Result<(), String> {
    report(runner(4, cases).run(&(complex(1.2), 0.0..0.02f64, any::<u64>()), |(beta, noise, seed)| {
        let grid = displacement_grid(-beta, 2.0, 3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = synthesize_coherent(beta, &grid, 4, Some((noise, &mut rng)));
        let r = mle_reconstruct_with(&d, 6, &MleOptions { max_iter: 40, gain_tol: 0.0 }).unwrap();
        for w in r.log_likelihood.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
        prop_assert!((r.rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-9);
        Ok(())
    }))
}

/// |W(α)| ≤ 2/π for any state.
pub fn wigner_bounds(cases: u32) -> Result<(), String> {
    report(runner(5, cases).run(&(1usize..9, any::<u64>(), proptest::collection::vec(complex(3.0), 1..6)), |(d, seed, pts)| {
        let rho = random_state(d, seed);
        let w = wigner(&rho, &pts);
        let bound = 2.0 / std::f64::consts::PI;
        prop_assert!(w.iter().all(|x| x.abs() <= bound + 1e-9), "{w:?}");
        Ok(())
    }))
}

/// D(γ) is unitary on the working space, equals the matrix exponential of
/// γa† − γ*a there, and crops |0⟩ to the truncated coherent state.
pub fn displacement_unitarity(cases: u32) -> Result<(), String> {
    report(runner(6, cases).run(&(complex(3.0), 2usize..10), |(gamma, n_max)| {
        let n_work = displacement_working_dim(n_max, gamma);
        let d = Displacer::new(n_work).full(gamma);
        let id = DMatrix::<C64>::identity(n_work + 1, n_work + 1);
        prop_assert!((d.adjoint() * &d - &id).iter().all(|z| z.norm() < 1e-10));
        let a = oscillator_lowering(n_work).into_entries();
        let x = (a.adjoint() * gamma - &a * gamma.conj()).exp();
        let low = Displacer::new(n_work).cropped(gamma, n_max).unwrap();
        let diff = (0..=n_max).flat_map(|i| (0..=n_max).map(move |j| (i, j))).map(|(i, j)| (low[(i, j)] - x[(i, j)]).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10, "gamma {gamma}: {diff:e}");
        // column 0 is |γ⟩, so its cropped weight is the Poisson CDF at n_max
        let c0 = low.column(0).norm().powi(2);
        let cdf = if gamma.norm() == 0.0 { 1.0 } else { (0..=n_max as u64).map(|n| Poisson::new(gamma.norm_sqr()).unwrap().pmf(n)).sum() };
        prop_assert!((c0 - cdf).abs() < 1e-10, "gamma {gamma}: {c0} vs {cdf}");
        Ok(())
    }))
}

#[allow(dead_code)]
pub const SUITES: [(&str, fn(u32) -> Result<(), String>); 6] = [
    ("trace preservation", trace_preservation),
    ("Hermiticity", hermiticity),
    ("POVM completeness", povm_completeness),
    ("MLE likelihood monotonicity", mle_monotonicity),
    ("Wigner bounds", wigner_bounds),
    ("displacement unitarity", displacement_unitarity),
];
