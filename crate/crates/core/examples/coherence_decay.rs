//! A resonant drive switched on at t = 0 builds a field that stays close to a
//! coherent state for a while; purity and best coherent overlap over time.

use efres::experiments::decay::{coherence_decay_scan_with, DecayOptions};
use efres::SystemParams;

fn main() -> efres::Result<()> {
    let p = SystemParams::device();
    let t: Vec<f64> = (0..=10).map(|i| 0.04 * i as f64).collect();
    let s = coherence_decay_scan_with(&p, 1.4, &t, &DecayOptions::default())?;
    println!("n_max = {}, trace drift {:.1e}", s.n_max, s.max_trace_drift);
    for d in &s.points {
        println!(
            "t = {:4.2} us  <n> = {:6.3}  purity {:.5}  coherent fidelity {:.5}  beta = {:.3}",
            d.t, d.mean_n, d.purity, d.coherent_fidelity, d.beta
        );
    }
    Ok(())
}
