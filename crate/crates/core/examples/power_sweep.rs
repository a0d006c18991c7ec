//! Steady-state resonance curves of the oscillator at increasing drive power:
//! peak photon number, peak frequency and its shift per photon.

use efres::experiments::sweep::{power_sweep_with, SweepOptions};
use efres::spectrum::{kerr_report, ladders_numeric};
use efres::SystemParams;

fn main() -> efres::Result<()> {
    let p = SystemParams::device();
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let powers = if args.is_empty() { vec![-135.0, -126.0] } else { args };
    let nu0 = kerr_report(&ladders_numeric(&p)?).nu_tilde_o;
    let grid: Vec<f64> = (0..15).map(|i| nu0 + (-14.0 + 1.5 * i as f64) * 1e-6).collect();
    let r = power_sweep_with(&p, &powers, &grid, &SweepOptions::default())?;
    for c in &r.curves {
        println!(
            "P1 = {:6.1} dBm  eps = {:.5} MHz  n_max = {:3}  <n> = {:7.3}  shift = {:8.1} Hz",
            c.p1_dbm, c.eps_d, c.n_max, c.n_peak, c.peak_shift_hz
        );
    }
    for (n, slope) in r.shift_slopes() {
        println!("around <n> = {n:5.2}: {slope:7.1} Hz per photon");
    }
    Ok(())
}
