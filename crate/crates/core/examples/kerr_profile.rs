//! Photon-number dependence of the Kerr coefficient with the fourth transmon
//! level included, and where it changes sign.

use efres::spectrum::{kerr_report, ladders_numeric};
use efres::SystemParams;

fn main() -> efres::Result<()> {
    let p = SystemParams::device().with_levels(4).with_n_max(40);
    let k = kerr_report(&ladders_numeric(&p)?);
    println!("dressed oscillator frequency: {:.9} GHz", k.nu_tilde_o);
    println!("series Kerr 2*alpha*eps^4:    {:.3} Hz", k.k_series);
    for &(n, kn) in k.k_n.iter().step_by(3) {
        println!("K_{n:<2} = {kn:9.2} Hz");
    }
    match k.sign_change_n {
        Some(n) => println!("Kerr changes sign at n = {n}"),
        None => println!("no sign change below n = {}", p.n_max),
    }

    let three = kerr_report(&ladders_numeric(&p.clone().with_levels(3))?);
    println!("three-level model sign change: {:?}", three.sign_change_n);
    Ok(())
}
