//! Command-line front end: subcommand dispatch, output files and the run
//! manifest.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{fit_decay, one_over_e_time, scan_alpha, FitMethod};
use crate::drive::{compile_iq, DriveScheme, LabFrameParams};
use crate::evolve::{
    ensemble_curve, fid_curve, hahn_echo_curve, verify_rwa, verify_second_frame, SimulationConfig,
};
use crate::spin::Axis;
use crate::{mhz_to_angular, Error, Result};
pub use config::FileConfig;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "CCDD_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "ccdd", version, about = "Continuous dynamical decoupling Monte Carlo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration; published parameters when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed, overriding `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Initial spin axis, overriding `run.init_axis`.
    #[arg(long)]
    pub init_axis: Option<Axis>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ensemble decoherence curve.
    Simulate(Common),
    /// Fitted decay time against modulation strength.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated alphas, overriding `scan.alphas`.
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Undriven free-induction decay.
    Fid(Common),
    /// Hahn-echo decay.
    Echo(Common),
    /// I/Q samples for the configured scheme.
    Waveform(Common),
    /// Rotating-wave and second-frame verification report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ω0/Ω1 ratios, overriding `verify.ratios`.
        #[arg(long)]
        ratios: Option<String>,
        /// Lab-frame window in µs, overriding `verify.window_us`.
        #[arg(long)]
        window_us: Option<f64>,
        /// Comma-separated alphas, overriding `verify.alphas`.
        #[arg(long)]
        alphas: Option<String>,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Simulate(c) | Command::Fid(c) | Command::Echo(c) | Command::Waveform(c) => c,
            Command::Scan { common, .. } | Command::Verify { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Scan { .. } => "scan",
            Command::Fid(_) => "fid",
            Command::Echo(_) => "echo",
            Command::Waveform(_) => "waveform",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Process exit code for an error: 2 for configuration, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 2,
        _ => 1,
    }
}

pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::config(key, "empty list"));
    }
    items
        .iter()
        .map(|x| x.parse::<f64>().map_err(|_| Error::config(key, format!("not a number: `{x}`"))))
        .collect()
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cmd: &Command) -> Result<FileConfig> {
    let common = cmd.common();
    let mut cfg = match &common.config {
        Some(p) => FileConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Error::config("--config", format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => FileConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(axis) = common.init_axis {
        cfg.run.init_axis = axis;
    }
    match cmd {
        Command::Scan { alphas: Some(a), .. } => cfg.scan.alphas = parse_list("scan.alphas", a)?,
        Command::Verify {
            ratios,
            window_us,
            alphas,
            ..
        } => {
            if let Some(r) = ratios {
                cfg.verify.ratios = parse_list("verify.ratios", r)?;
            }
            if let Some(w) = window_us {
                cfg.verify.window_us = Some(*w);
            }
            if let Some(a) = alphas {
                cfg.verify.alphas = parse_list("verify.alphas", a)?;
            }
        }
        _ => {}
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    version: String,
    master_seed: u64,
    bath_units: String,
    runtime_s: f64,
    config: Value,
    results: Value,
    outputs: Vec<String>,
}

/// Resolved parameters in both configured and internal units.
fn config_echo(file: &FileConfig, sim: Option<&SimulationConfig>) -> Value {
    let bath_internal = file.bath.diffusion_mhz3 * file.bath.units.diffusion_factor();
    let rabi = file.scheme.rabi_mhz;
    let mut v = json!({
        "file": serde_json::to_value(file).unwrap_or(Value::Null),
        "internal": {
            "rabi_rad_per_us": mhz_to_angular(rabi),
            "bath_diffusion_internal": bath_internal,
            "bath_std_rad_per_us": (0.5 * bath_internal * file.bath.tau_us).sqrt(),
            "amp_noise_std_rad_per_us": file.amp_noise.relative_error * mhz_to_angular(rabi),
            "hyperfine_centers_sigma_z_rad_per_us": file.hyperfine.centers_mhz.iter()
                .map(|c| crate::noise::detuning_sigma_z(*c)).collect::<Vec<_>>(),
        },
    });
    if let Some(s) = sim {
        v["internal"]["scheme"] = json!(s.scheme.name());
        v["internal"]["second_mhz"] = json!(s.scheme.second_mhz());
        v["internal"]["second_rad_per_us"] = json!(mhz_to_angular(s.scheme.second_mhz()));
        v["internal"]["dt_us"] = json!(s.dt_us);
        v["internal"]["config_hash"] = json!(s.hash());
    }
    v
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn fit_json<E: std::fmt::Display>(fit: &std::result::Result<crate::analysis::DecayFit, E>) -> Value {
    match fit {
        Ok(f) => serde_json::to_value(f).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Runs one subcommand and returns the manifest path.
pub fn run(cmd: &Command) -> Result<PathBuf> {
    let started = Instant::now();
    let file = resolve_config(cmd)?;
    let mut out = Outputs::new(&cmd.common().out)?;
    let mut sim_for_echo = None;

    let results = match cmd {
        Command::Simulate(_) => {
            let sim = file.simulation()?;
            let curve = ensemble_curve(&sim)?;
            out.write("curve.csv", |w| curve.write_csv(w))?;
            let fit = fit_decay(&curve, FitMethod::for_axis(sim.init_axis));
            sim_for_echo = Some(sim);
            json!({ "fit": fit_json(&fit) })
        }
        Command::Scan { .. } => {
            let sim = file.simulation()?;
            let scan = scan_alpha(&sim, &file.scan.alphas, sim.init_axis)?;
            out.write("scan.csv", |w| scan.write_csv(w))?;
            sim_for_echo = Some(sim);
            json!({
                "init_axis": scan.init_axis.to_string(),
                "best": scan.best().map(|(a, t)| json!({ "alpha": a, "T_decay_us": t })),
            })
        }
        Command::Fid(_) => {
            let sim = file.simulation()?;
            let fid = fid_curve(&sim, file.fid_run())?;
            out.write("fid.csv", |w| fid.write_csv(w))?;
            let t = one_over_e_time(&fid.curve.times, &fid.envelope, 0.0);
            sim_for_echo = Some(sim);
            json!({ "envelope_one_over_e_us": t })
        }
        Command::Echo(_) => {
            let sim = file.simulation()?;
            let echo = hahn_echo_curve(&sim, file.echo_run())?;
            out.write("echo.csv", |w| echo.write_csv(w))?;
            // coherence 2F − 1 falls to 1/e where F − 1/2 does
            let t = one_over_e_time(&echo.times, &echo.fidelity, 0.5);
            sim_for_echo = Some(sim);
            json!({ "coherence_one_over_e_us": t })
        }
        Command::Waveform(_) => {
            let scheme = file.scheme()?;
            let wf = &file.waveform;
            if !(wf.duration_us.is_finite() && wf.duration_us > 0.0) {
                return Err(Error::config("waveform.duration_us", "must be > 0"));
            }
            if !(wf.sample_period_ns.is_finite() && wf.sample_period_ns > 0.0) {
                return Err(Error::config("waveform.sample_period_ns", "must be > 0"));
            }
            let iq = compile_iq(&scheme, wf.duration_us, wf.sample_period_ns)?;
            out.write("iq.csv", |w| iq.write_csv(w))?;
            let meta = iq.metadata(&scheme, wf.duration_us);
            out.write("iq_metadata.json", |w| {
                serde_json::to_writer_pretty(&mut *w, &meta)?;
                writeln!(w)
            })?;
            json!({ "samples": iq.len() })
        }
        Command::Verify { .. } => {
            let report = verify_report(&file)?;
            out.write("verify.csv", |w| report.write_csv(w))?;
            print!("{}", report.table());
            let ok = report.passed();
            let v = json!({ "rwa_monotone": report.rwa_ok, "second_frame_monotone": report.second_ok });
            write_manifest(&mut out, cmd, &file, None, v, started)?;
            if !ok {
                return Err(Error::invalid("verification failed: deviations are not monotone"));
            }
            return Ok(out.dir.join("manifest.json"));
        }
    };
    write_manifest(&mut out, cmd, &file, sim_for_echo.as_ref(), results, started)
}

fn write_manifest(
    out: &mut Outputs,
    cmd: &Command,
    file: &FileConfig,
    sim: Option<&SimulationConfig>,
    results: Value,
    started: Instant,
) -> Result<PathBuf> {
    let resolved = file.to_toml();
    out.write("resolved_config.toml", |w| w.write_all(resolved.as_bytes()))?;
    let mut outputs = out.files.clone();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        command: cmd.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: file.run.seed,
        bath_units: file.bath.units.name().into(),
        runtime_s: started.elapsed().as_secs_f64(),
        config: config_echo(file, sim),
        results,
        outputs,
    };
    let path = out.dir.join("manifest.json");
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

/// Deviation rows for both verifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rwa: Vec<(f64, f64)>,
    pub second_frame: Vec<(f64, f64)>,
    pub rwa_ok: bool,
    pub second_ok: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rwa_ok && self.second_ok
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "check,parameter,deviation")?;
        for (r, d) in &self.rwa {
            writeln!(w, "rwa,{r:.16e},{d:.16e}")?;
        }
        for (a, d) in &self.second_frame {
            writeln!(w, "second_frame,{a:.16e},{d:.16e}")?;
        }
        Ok(())
    }

    pub fn table(&self) -> String {
        let mut s = String::from("check         parameter   deviation\n");
        for (r, d) in &self.rwa {
            s += &format!("rwa           w0/W1={r:<6} {d:.6e}\n");
        }
        s += &format!("rwa decreasing with ratio: {}\n", pass(self.rwa_ok));
        for (a, d) in &self.second_frame {
            s += &format!("second_frame  alpha={a:<6} {d:.6e}\n");
        }
        s += &format!("second_frame increasing with alpha: {}\n", pass(self.second_ok));
        s
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn verify_report(file: &FileConfig) -> Result<VerifyReport> {
    let v = &file.verify;
    let rabi = file.scheme.rabi_mhz;
    let window = v.window_us.unwrap_or(1.0 / rabi);
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::config("verify.window_us", format!("must be > 0, got {window}")));
    }
    if v.ratios.is_empty() || v.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::config("verify.ratios", "need positive ratios"));
    }
    if v.alphas.is_empty() || v.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::config("verify.alphas", "need alphas >= 0"));
    }
    if !(v.lab_steps_per_period >= 20.0) {
        return Err(Error::config("verify.lab_steps_per_period", "must be >= 20"));
    }
    if !(v.steps_per_period >= 20.0) {
        return Err(Error::config("verify.steps_per_period", "must be >= 20"));
    }
    if !(v.horizon_periods.is_finite() && v.horizon_periods > 0.0) {
        return Err(Error::config("verify.horizon_periods", "must be > 0"));
    }
    let base = file.scheme()?;
    let modulated = |alpha| match base {
        DriveScheme::SingleDrive { rabi_mhz } => DriveScheme::PhaseMod { rabi_mhz, alpha },
        other => other.with_alpha(alpha),
    };
    let rwa: Vec<(f64, f64)> = v
        .ratios
        .iter()
        .map(|&r| {
            let params = LabFrameParams {
                carrier_mhz: r * rabi,
                scheme: base,
            };
            verify_rwa(&params, window, 1.0 / (v.lab_steps_per_period * r * rabi)).map(|d| (r, d))
        })
        .collect::<Result<_>>()?;
    let delta = v.delta_omega1_relative * mhz_to_angular(rabi);
    let second_frame: Vec<(f64, f64)> = v
        .alphas
        .iter()
        .map(|&a| {
            verify_second_frame(&modulated(a), delta, v.horizon_periods / rabi, 1.0 / (v.steps_per_period * rabi))
                .map(|d| (a, d))
        })
        .collect::<Result<_>>()?;
    let mut by_ratio = rwa.clone();
    by_ratio.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rwa_ok = by_ratio.windows(2).all(|w| w[1].1 < w[0].1);
    let mut by_alpha = second_frame.clone();
    by_alpha.sort_by(|a, b| a.0.total_cmp(&b.0));
    let second_ok = by_alpha.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(VerifyReport {
        rwa,
        second_frame,
        rwa_ok,
        second_ok,
    })
}
