//! Dressed ladders of the three-level model: closed-form cubic roots, the
//! perturbative series and direct block diagonalization side by side.

use efres::hilbert::{build_hamiltonian, excitation_blocks, reassemble_blocks};
use efres::spectrum::{ladders_exact3, ladders_numeric, ladders_series, Ladder};
use efres::SystemParams;

fn main() -> efres::Result<()> {
    let p = SystemParams::device_three_level().with_n_max(12);
    let h = build_hamiltonian(&p)?;
    let blocks = excitation_blocks(&h, &p)?;
    let sizes: Vec<usize> = blocks.iter().map(|b| b.size()).collect();
    println!("block sizes: {sizes:?}");
    let back = reassemble_blocks(&blocks, h.basis());
    println!("reassembly error: {:.2e}", (back.entries() - h.entries()).map(|z| z.norm()).max());

    let exact = ladders_exact3(&p)?;
    let series = ladders_series(&p, 12)?;
    let numeric = ladders_numeric(&p)?;
    println!("\n n   g~ offset (MHz)      + offset      - offset   series err (Hz)  numeric err (Hz)");
    for n in 0..=series.n_top().min(numeric.n_top()).min(10) {
        let e = exact.offset_mhz(Ladder::Ground, n);
        println!(
            "{n:2}  {e:14.9}  {:12.6}  {:12.6}  {:14.3e}  {:14.3e}",
            exact.offset_mhz(Ladder::Plus, n),
            exact.offset_mhz(Ladder::Minus, n),
            (series.offset_mhz(Ladder::Ground, n) - e) * 1e6,
            (numeric.offset_mhz(Ladder::Ground, n) - e) * 1e6,
        );
    }

    println!("\nqubit lines g~n -> +(n+1), -(n+1) (GHz)");
    for n in 0..5 {
        println!("{n}  {:.6}  {:.6}", exact.transition(Ladder::Plus, n)?, exact.transition(Ladder::Minus, n)?);
    }
    Ok(())
}
