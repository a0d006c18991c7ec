//! Displaced photon-counting tomogram of a coherent field, reconstructed by
//! maximum likelihood, with and without measurement noise.

use efres::experiments::tomo::{tomography_run, Preparation, TomographyRunOptions};
use efres::SystemParams;
use num_complex::Complex64 as C64;

fn main() -> efres::Result<()> {
    let p = SystemParams::device();
    let beta = C64::new(-5f64.sqrt(), 2f64.sqrt());
    let cases = [
        ("noiseless", TomographyRunOptions::default()),
        ("0.6% noise", TomographyRunOptions { noise: Some(0.006), seed: 3, ..Default::default() }),
        ("driven", TomographyRunOptions { preparation: Preparation::Driven { duration: 0.3 }, ..Default::default() }),
    ];
    for (name, opts) in cases {
        let r = tomography_run(&p, beta, &opts)?;
        println!(
            "{name:10}  fidelity {:.5}  prepared {:.5}  MLE iterations {}  W max {:.3}",
            r.fidelity,
            r.prepared_fidelity,
            r.mle.iterations,
            r.wigner.iter().cloned().fold(f64::MIN, f64::max)
        );
        for w in &r.mle.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
