//! Steady state of the driven, damped system at the power holding one photon
//! at the resonance peak, compared with a Poisson distribution.

use efres::dynamics::{add_drive, poisson, rotating_frame, steady_state_with, total_variation, SteadyOptions, P_REF_DBM};
use efres::experiments::sweep::{calibrate_anchor, power_sweep_with, SweepOptions};
use efres::spectrum::{kerr_report, ladders_numeric};
use efres::SystemParams;

fn main() -> efres::Result<()> {
    let p = SystemParams::device().with_n_max(20);
    let nu = kerr_report(&ladders_numeric(&p)?).nu_tilde_o;
    let anchor = calibrate_anchor(&p, nu, &SweepOptions::default())?;
    println!("drive amplitude for <n> = 1: {:.6} MHz", anchor.eps_ref);

    // on the bare dressed frequency the drive is slightly off the shifted peak
    let m = add_drive(rotating_frame(&p, nu)?, anchor.eps_ref, 0.0)?;
    let r = steady_state_with(&m, &SteadyOptions::default())?;
    println!("at nu~_O: <n> = {:.4}, purity {:.4}, residual {:.1e}", r.rho.mean_photon_number(), r.rho.purity(), r.residual);

    let grid: Vec<f64> = (0..15).map(|i| nu + (i as f64 - 7.0) * 0.4e-6).collect();
    let opts = SweepOptions { anchor: Some(anchor), n_max: Some(20), ..Default::default() };
    let c = &power_sweep_with(&p, &[P_REF_DBM], &grid, &opts)?.curves[0];
    println!("at the peak ({:+.0} Hz): <n> = {:.4}", c.peak_shift_hz, c.n_peak);
    let pois = poisson(1.0, p.n_max);
    for n in 0..6 {
        println!("p({n}) = {:.5}   Poisson {:.5}", c.p_inf[n], pois[n]);
    }
    println!("total variation to Poisson(1): {:.4}", total_variation(&c.p_inf, &pois));
    Ok(())
}
