//! Qubit spectrum of a coherent field: Poisson-weighted lines on both dressed
//! ladders, broadened by the qubit linewidth.

use efres::experiments::spectroscopy::{default_grid, spectroscopy_trace};
use efres::SystemParams;
use num_complex::Complex64 as C64;

fn main() -> efres::Result<()> {
    let p = SystemParams::device();
    let beta = C64::new(2.0, 0.0);
    let grid = default_grid(&p, 12, 801);
    let tr = spectroscopy_trace(&p, beta, &grid)?;
    println!("linewidth {:.3} MHz, {} lines", tr.fwhm * 1e3, tr.peaks.len());
    for pk in tr.peaks.iter().filter(|pk| pk.amplitude > 0.01) {
        println!("n = {:2} {:?}: {:.6} GHz  weight {:.4}", pk.n, pk.ladder, pk.nu, pk.amplitude);
    }
    let (i, s) = tr.signal.iter().enumerate().fold((0, f64::MIN), |a, (i, &s)| if s > a.1 { (i, s) } else { a });
    println!("strongest response {s:.4} at {:.6} GHz", tr.nu[i]);

    let out = std::env::temp_dir().join("efres_spectroscopy");
    tr.output(&p, 0).write(&out, true)?;
    println!("wrote {}", out.display());
    Ok(())
}
