//! Synthetic Rabi-calibration data for the photon-number lines, fitted with a
//! common amplitude scale and one coefficient per line.

use efres::experiments::calibration::{default_amplitudes, fit_calibration, synth_calibration, DEVICE_C, DEVICE_K, DEVICE_SIGMA};

fn main() -> efres::Result<()> {
    let amps = default_amplitudes();
    let clean = synth_calibration(&DEVICE_C, DEVICE_K, 0.0, &amps, 0)?;
    let f = fit_calibration(&clean)?;
    println!("noiseless: k = {:.10} (true {DEVICE_K}), rms residual {:.1e}", f.k, f.residual_sigma);

    let noisy = synth_calibration(&DEVICE_C, DEVICE_K, DEVICE_SIGMA, &amps, 7)?;
    let f = fit_calibration(&noisy)?;
    println!("{}", f.summary());
    for (n, (c, c0)) in f.c.iter().zip(DEVICE_C.iter()).enumerate() {
        println!("c_{n:<2} fitted {c:.4}  true {c0:.4}");
    }
    Ok(())
}
