//! Kerr of the ef-resonant coupling against a far-dispersive transmon and a
//! two-level system, all at the same Fock-line separation.

use efres::spectrum::{compare_schemes, DEFAULT_TWO_LEVEL_DETUNINGS};
use efres::SystemParams;

fn main() -> efres::Result<()> {
    let p = SystemParams::device();
    let c = compare_schemes(p.alpha, p.g_o, p.alpha, &DEFAULT_TWO_LEVEL_DETUNINGS)?;
    println!("line separation S = {:.3} MHz", c.s);
    println!("ef-resonant K      = {:.1} Hz", c.k);
    println!("dispersive K''     = {:.1} Hz", c.k_dispersive);
    println!("K''/K              = {:.2}", c.reduction);
    for (d, k) in &c.two_level {
        println!("two-level, detuning {d:6.0} MHz: K' = {k:.1} Hz");
    }

    // the ratio (alpha/S)^2/2 grows quadratically as the coupling weakens
    for g in [2.0, 4.0, 7.45, 12.0] {
        let c = compare_schemes(p.alpha, g, p.alpha, &[])?;
        println!("g_O = {g:5.2} MHz  K''/K = {:8.1}", c.reduction);
    }
    Ok(())
}
