//! Command-line front end. Exit codes: 0 success, 2 configuration or usage
//! error, 3 numeric failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use num_complex::Complex64 as C64;

use crate::config::{keys_help, Format, RunConfig};
use crate::dynamics::{DriveAnchor, P_REF_DBM};
use crate::error::{Error, Result};
use crate::experiments::calibration::{fit_calibration, synth_calibration, CalibrationDataset};
use crate::experiments::decay::{coherence_decay_scan_with, DecayOptions};
use crate::experiments::spectroscopy::{default_grid, spectroscopy_trace};
use crate::experiments::sweep::{calibrate_anchor, power_sweep_with, SweepOptions};
use crate::experiments::tomo::{tomography_from_data, tomography_run, Preparation, TomographyRunOptions};
use crate::experiments::{Manifest, ScenarioOutput};
use crate::io::CsvTable;
use crate::params::SystemParams;
use crate::plot::{line_chart, Series};
use crate::spectrum::{compare_schemes, kerr_report, ladder_csv, ladders_exact3, ladders_numeric, ladders_series, transition_table};
use crate::tomography::TomogramDataset;

#[derive(Debug, Parser)]
#[command(name = "efres", version, about = "ef-resonant transmon-oscillator toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Load a named parameter set, replacing the [params] section.
    #[arg(long, global = true, value_parser = ["paper"])]
    params_preset: Option<String>,
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: every core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// csv | csv+svg
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Transmon levels (3 or 4).
    #[arg(long, global = true)]
    levels: Option<usize>,
    /// Use synthetic data even if a data file is configured.
    #[arg(long, global = true)]
    synthetic: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Dressed ladders, transition table and Kerr profile.
    Spectrum,
    /// Photon-number resolved transmon spectrum of a coherent filling.
    Spectroscopy,
    /// Fit of the photon-number readout calibration.
    Calibrate,
    /// Field tomography by maximum likelihood.
    Tomo,
    /// Steady-state resonance curves versus input power.
    Sweep,
    /// Purity and coherence of the driven oscillator versus time.
    Decay,
    /// Kerr constant of competing Fock-resolving schemes.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Spectroscopy => "spectroscopy",
            Command::Calibrate => "calibrate",
            Command::Tomo => "tomo",
            Command::Sweep => "sweep",
            Command::Decay => "decay",
            Command::Compare => "compare",
        }
    }
}

fn command() -> clap::Command {
    Cli::command().after_help(keys_help())
}

/// Exit code of an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match command().try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("efres {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.params_preset.is_some() {
        cfg.params = SystemParams::device();
    }
    if let Some(l) = cli.levels {
        cfg.params.levels = l;
    }
    if let Some(o) = &cli.output {
        cfg.run.output = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.run.jobs = j;
    }
    if let Some(f) = cli.format {
        cfg.run.format = f;
    }
    if cli.synthetic {
        cfg.calibrate.data = PathBuf::new();
        cfg.tomo.data = PathBuf::new();
    }
    cfg.params.validate().map_err(|e| Error::Config(format!("[params] {e}")))?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let out = pool.install(|| scenario(cli.command, &cfg))?;
    let dir = if cfg.run.output.as_os_str().is_empty() {
        Path::new("out").join(cli.command.name())
    } else {
        cfg.run.output.clone()
    };
    out.write(&dir, cfg.run.format == Format::CsvSvg)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn scenario(cmd: Command, cfg: &RunConfig) -> Result<ScenarioOutput> {
    let p = &cfg.params;
    let seed = cfg.run.seed;
    match cmd {
        Command::Spectrum => spectrum(cfg),
        Command::Spectroscopy => {
            let c = &cfg.spectroscopy;
            let beta = C64::new(c.beta_re, c.beta_im);
            let grid = if c.nu_max > c.nu_min {
                let k = c.points.max(2);
                (0..k).map(|i| c.nu_min + (c.nu_max - c.nu_min) * i as f64 / (k - 1) as f64).collect()
            } else {
                let n = beta.norm_sqr();
                default_grid(p, (n + 5.0 * n.sqrt()).ceil() as usize + 1, c.points.max(2))
            };
            let tr = spectroscopy_trace(p, beta, &grid)?;
            println!("{} lines, fwhm = {:.3} MHz", tr.peaks.len(), tr.fwhm * 1e3);
            Ok(tr.output(p, seed))
        }
        Command::Calibrate => {
            let c = &cfg.calibrate;
            let d = if c.data.as_os_str().is_empty() {
                let k = c.a_points.max(2);
                let amps: Vec<f64> = (0..k).map(|i| c.a_max * i as f64 / (k - 1) as f64).collect();
                synth_calibration(&c.c, c.k, c.sigma, &amps, seed).map_err(config_err)?
            } else {
                CalibrationDataset::from_csv(&CsvTable::load(&c.data).map_err(|e| data_err(&c.data, e))?)
                    .map_err(|e| data_err(&c.data, e))?
            };
            let fit = fit_calibration(&d)?;
            print!("{}", fit.summary());
            Ok(fit.output(&d, seed))
        }
        Command::Tomo => {
            let c = &cfg.tomo;
            let beta = C64::new(c.beta_re, c.beta_im);
            let preparation = match c.preparation.as_str() {
                "exact" => Preparation::Exact,
                "driven" => Preparation::Driven { duration: c.duration },
                other => return Err(Error::Config(format!("tomo.preparation = {other:?} (exact | driven)"))),
            };
            let opts = TomographyRunOptions {
                preparation,
                n_range: c.n_range,
                n_trunc: c.n_trunc,
                noise: (c.noise > 0.0).then_some(c.noise),
                seed,
                wigner_points: c.wigner_points.max(2),
                ..TomographyRunOptions::default()
            };
            let run = if c.data.as_os_str().is_empty() {
                tomography_run(p, beta, &opts)?
            } else {
                let d = TomogramDataset::load(&c.data).map_err(|e| data_err(&c.data, e))?;
                tomography_from_data(d, beta, &opts)?
            };
            println!("fidelity = {:.6}", run.fidelity);
            println!("mle_iterations = {}", run.mle.iterations);
            for w in &run.mle.warnings {
                eprintln!("warning: {w}");
            }
            Ok(run.output(p, &opts))
        }
        Command::Sweep => {
            let c = &cfg.sweep;
            let nu_t = kerr_report(&ladders_numeric(&p.clone().with_levels(4))?).nu_tilde_o;
            let k = c.points.max(3);
            let grid: Vec<f64> = (0..k)
                .map(|i| nu_t + (c.detuning_min_khz + (c.detuning_max_khz - c.detuning_min_khz) * i as f64 / (k - 1) as f64) * 1e-6)
                .collect();
            let opts = SweepOptions {
                n_max: (c.n_max > 0).then_some(c.n_max),
                refine: c.refine,
                convergence_tol: c.convergence_tol,
                anchor: (c.anchor_eps_mhz > 0.0).then_some(DriveAnchor { p_ref_dbm: P_REF_DBM, eps_ref: c.anchor_eps_mhz }),
                n_max_limit: c.n_max_limit,
                ..SweepOptions::default()
            };
            let r = power_sweep_with(p, &c.powers_dbm, &grid, &opts)?;
            for cv in &r.curves {
                println!(
                    "P1 = {} dBm: peak shift = {:.1} Hz, <n> = {:.4}, n_max = {}",
                    cv.p1_dbm, cv.peak_shift_hz, cv.n_peak, cv.n_max
                );
            }
            Ok(r.output(p, seed))
        }
        Command::Decay => {
            let c = &cfg.decay;
            let eps = if c.eps_d_mhz > 0.0 {
                c.eps_d_mhz
            } else {
                let nu_t = kerr_report(&ladders_numeric(&p.clone().with_levels(4))?).nu_tilde_o;
                let anchor = calibrate_anchor(p, nu_t, &SweepOptions::default())?;
                crate::dynamics::drive_from_dbm(c.p1_dbm, &anchor)
            };
            let k = c.points.max(2);
            let ts: Vec<f64> = (0..k).map(|i| c.t_max_us * i as f64 / (k - 1) as f64).collect();
            let opts = DecayOptions { n_max: (c.n_max > 0).then_some(c.n_max), ..DecayOptions::default() };
            let s = coherence_decay_scan_with(p, eps, &ts, &opts)?;
            if let Some(last) = s.points.last() {
                println!(
                    "t = {} us: purity = {:.6}, <n> = {:.4}, coherent fidelity = {:.6}",
                    last.t, last.purity, last.mean_n, last.coherent_fidelity
                );
            }
            Ok(s.output(p, seed))
        }
        Command::Compare => {
            let c = &cfg.compare;
            let app = if c.alpha_pp_mhz != 0.0 { c.alpha_pp_mhz } else { p.alpha };
            let r = compare_schemes(p.alpha, p.g_o, app, &c.two_level_detunings_mhz)?;
            let mut t = CsvTable::new(&["scheme", "detuning_mhz", "kerr_hz"]);
            t.push(vec!["ef_resonant".into(), String::new(), format!("{:.6}", r.k)]);
            t.push(vec!["dispersive_transmon".into(), String::new(), format!("{:.6}", r.k_dispersive)]);
            for (d, k) in &r.two_level {
                t.push(vec!["two_level".into(), d.to_string(), format!("{k:.6}")]);
            }
            println!("S = {:.4} MHz, K = {:.3} Hz, K'' = {:.3} Hz, K''/K = {:.3}", r.s, r.k, r.k_dispersive, r.reduction);
            let mut m = Manifest::new("compare").with_params(p);
            m.set("seed", seed);
            m.set("alpha_pp_mhz", app);
            m.set("selectivity_mhz", r.s);
            m.set("reduction", format!("{:.6}", r.reduction));
            let svg = line_chart(
                "Two-level Kerr versus detuning",
                "detuning (MHz)",
                "|K'| (Hz)",
                &[Series { label: "two-level".into(), points: r.two_level.iter().map(|(d, k)| (*d, k.abs())).collect() }],
            );
            Ok(ScenarioOutput { manifest: m, data: t, svg: Some(svg), extra: vec![] })
        }
    }
}

fn spectrum(cfg: &RunConfig) -> Result<ScenarioOutput> {
    let p = &cfg.params;
    let lad = match cfg.spectrum.method.as_str() {
        "numeric" => ladders_numeric(p)?,
        "exact3" => ladders_exact3(&p.clone().with_levels(3))?,
        "series" => ladders_series(&p.clone().with_levels(3), p.n_max)?,
        other => return Err(Error::Config(format!("spectrum.method = {other:?} (numeric | exact3 | series)"))),
    };
    let kr = kerr_report(&lad);
    println!("nu_tilde_o = {:.9} GHz", kr.nu_tilde_o);
    println!("K_series = {:.3} Hz", kr.k_series);
    match kr.sign_change_n {
        Some(n) => println!("K_n changes sign at n = {n}"),
        None => println!("K_n keeps its sign up to n = {}", lad.n_top().saturating_sub(1)),
    }
    let mut m = Manifest::new("spectrum").with_params(p);
    m.set("seed", cfg.run.seed);
    m.set("method", lad.method);
    m.set("nu_tilde_o_ghz", format!("{:.12}", kr.nu_tilde_o));
    m.set("k_series_hz", format!("{:.6}", kr.k_series));
    m.set("sign_change_n", kr.sign_change_n.map_or("none".to_string(), |n| n.to_string()));
    let mut tt = CsvTable::new(&["n", "nu_plus", "nu_minus", "approx_plus", "approx_minus", "parabolic_plus", "parabolic_minus"]);
    for r in transition_table(&lad) {
        tt.push(
            [r.nu_plus, r.nu_minus, r.approx_plus, r.approx_minus, r.parabolic_plus, r.parabolic_minus]
                .iter()
                .fold(vec![r.n.to_string()], |mut v, x| {
                    v.push(format!("{x:.12}"));
                    v
                }),
        );
    }
    let svg = line_chart(
        "Kerr profile",
        "n",
        "K_n (Hz)",
        &[Series { label: "K_n".into(), points: kr.k_n.iter().map(|(n, k)| (*n as f64, *k)).collect() }],
    );
    Ok(ScenarioOutput { manifest: m, data: ladder_csv(&lad), svg: Some(svg), extra: vec![("transitions".into(), tt)] })
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

fn data_err(path: &Path, e: Error) -> Error {
    match e {
        Error::Data(m) => Error::Config(format!("{}: {m}", path.display())),
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    }
}
