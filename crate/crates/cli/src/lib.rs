//! Command-line front end: config parsing, output handling and the
//! subcommands. The binary in `main.rs` only forwards to [`run`].

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use scs_collapse::algebra::Vec3;
use scs_collapse::cartan::cartan_decompose_unchecked;
use scs_collapse::coherent::{estimate_k_local, product_expectation, sample_product_q, write_samples_csv};
use scs_collapse::fokker_planck::{
    erfc_bound, gaussian_asymptote, solve_from_origin, tail_probability, RadialGrid, MASS_TOL,
};
use scs_collapse::geometry::{identity_suite, sl2r_viz_export};
use scs_collapse::povm_stats::{run_ensemble_with_workers, summarize, write_paths_csv, Verdict};
use scs_collapse::trajectory::{write_checkpoints_csv, KrausIntegrator, KrausPoint, SimConfig, WienerStream};
use scs_collapse::verify::{run_all, Scale, Tolerances, VerifyOptions, CRITERIA};
use scs_collapse::Error;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "scs-collapse", version, about = "Continuous isotropic spin measurement: simulations and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One seeded Kraus trajectory: Kraus and Cartan-coordinate CSVs.
    Trajectory(Opts),
    /// Trajectory ensemble: JSON summary, optional per-path CSV.
    Ensemble(Opts),
    /// Radial Fokker-Planck solve from the origin.
    Fp(Opts),
    /// Acceptance criteria with a JSON verdict file.
    Verify(Opts),
    /// Algebra and geometry identity table.
    Geometry(Opts),
    /// SL(2,R) torus visualization data.
    Viz(Opts),
    /// Product-state Q-sampling tomography.
    Tomography(Opts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Trajectory(_) => "trajectory",
            Command::Ensemble(_) => "ensemble",
            Command::Fp(_) => "fp",
            Command::Verify(_) => "verify",
            Command::Geometry(_) => "geometry",
            Command::Viz(_) => "viz",
            Command::Tomography(_) => "tomography",
        }
    }

    fn opts(&self) -> &Opts {
        match self {
            Command::Trajectory(o)
            | Command::Ensemble(o)
            | Command::Fp(o)
            | Command::Verify(o)
            | Command::Geometry(o)
            | Command::Viz(o)
            | Command::Tomography(o) => o,
        }
    }
}

/// Every flag is also a config-file key (same name, `-` or `_`).
#[derive(Args, Debug, Default)]
pub struct Opts {
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long = "T")]
    pub t_total: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub paths: Option<String>,
    /// Comma-separated spin values.
    #[arg(long)]
    pub j: Option<String>,
    /// Comma-separated checkpoint times.
    #[arg(long)]
    pub checkpoints: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub workers: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `name=value`, repeatable.
    #[arg(long)]
    pub tolerance: Vec<String>,
    /// Radial grid spacing (fp) or histogram bin width (ensemble).
    #[arg(long)]
    pub h: Option<String>,
    /// Reduced sample counts (verify).
    #[arg(long)]
    pub quick: bool,
    /// Comma-separated criterion numbers (verify).
    #[arg(long)]
    pub criteria: Option<String>,
    /// Also write per-path / per-sample CSV.
    #[arg(long)]
    pub raw: bool,
    /// Comma-separated radial values (viz).
    #[arg(long = "a-values")]
    pub a_values: Option<String>,
    /// Rows per radial value (viz).
    #[arg(long)]
    pub points: Option<String>,
    /// Bloch vectors `z x y;z x y;...` in (z, x, y) order (tomography).
    #[arg(long)]
    pub bloch: Option<String>,
    /// Comma-separated Pauli strings such as `310,002` (tomography).
    #[arg(long)]
    pub strings: Option<String>,
}

/// Fully resolved settings, echoed into every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub gamma: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub seed: u64,
    pub paths: usize,
    pub j: Vec<f64>,
    pub checkpoints: Vec<f64>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub h: Option<f64>,
    pub quick: bool,
    pub criteria: Vec<u8>,
    pub raw: bool,
    pub a_values: Vec<f64>,
    pub points: usize,
    pub bloch: Vec<Vec3>,
    pub strings: Vec<Vec<u8>>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Run(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(Error::Io(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

const KEYS: [&str; 18] = [
    "gamma", "dt", "T", "seed", "paths", "j", "checkpoints", "out", "workers", "h", "quick", "criteria", "raw",
    "a_values", "points", "bloch", "strings", "tolerance",
];

/// `key=value` lines, `#` comments, blank lines ignored. `tolerance` may repeat.
pub fn parse_config_file(text: &str) -> CliResult<(BTreeMap<String, String>, Vec<String>)> {
    let mut map = BTreeMap::new();
    let mut tolerances = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        let key = k.trim().replace('-', "_");
        let value = v.trim().to_string();
        if key == "tolerance" {
            tolerances.push(value);
        } else if let Some(name) = key.strip_prefix("tolerance.") {
            tolerances.push(format!("{name}={value}"));
        } else if KEYS.contains(&key.as_str()) {
            map.insert(key, value);
        } else {
            return Err(CliError::Usage(format!("config line {}: unknown key {key}", n + 1)));
        }
    }
    Ok((map, tolerances))
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse {key} = {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!("cannot parse {key} = {v:?} as a boolean"))),
    }
}

fn parse_bloch(v: &str) -> CliResult<Vec<Vec3>> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let c: Vec<f64> = s.split_whitespace().map(|x| parse("bloch", x)).collect::<CliResult<_>>()?;
            if c.len() != 3 {
                return Err(CliError::Usage(format!("Bloch vector {s:?} needs three components")));
            }
            Ok([c[0], c[1], c[2]])
        })
        .collect()
}

fn parse_strings(v: &str) -> CliResult<Vec<Vec<u8>>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .chars()
                .map(|c| match c.to_digit(10) {
                    Some(d) if d <= 3 => Ok(d as u8),
                    _ => Err(CliError::Usage(format!("Pauli string {s:?} must use digits 0-3"))),
                })
                .collect()
        })
        .collect()
}

/// All strings over `n` qubits with at most `k_max` non-identity factors.
pub fn strings_up_to(n: usize, k_max: usize) -> Vec<Vec<u8>> {
    let total = 4usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut s = vec![0u8; n];
            for slot in s.iter_mut().rev() {
                *slot = (code % 4) as u8;
                code /= 4;
            }
            s
        })
        .filter(|s| s.iter().filter(|&&m| m != 0).count() <= k_max)
        .collect()
}

pub fn resolve(command: &Command) -> CliResult<RunConfig> {
    let o = command.opts();
    let (mut map, mut tol_entries) = match &o.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            parse_config_file(&text)?
        }
        None => (BTreeMap::new(), Vec::new()),
    };
    let flags: [(&str, &Option<String>); 15] = [
        ("gamma", &o.gamma),
        ("dt", &o.dt),
        ("T", &o.t_total),
        ("seed", &o.seed),
        ("paths", &o.paths),
        ("j", &o.j),
        ("checkpoints", &o.checkpoints),
        ("out", &o.out),
        ("workers", &o.workers),
        ("h", &o.h),
        ("criteria", &o.criteria),
        ("a_values", &o.a_values),
        ("points", &o.points),
        ("bloch", &o.bloch),
        ("strings", &o.strings),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            map.insert(k.to_string(), v.clone());
        }
    }
    if o.quick {
        map.insert("quick".into(), "true".into());
    }
    if o.raw {
        map.insert("raw".into(), "true".into());
    }
    tol_entries.extend(o.tolerance.iter().cloned());

    let get = |k: &str| map.get(k).map(String::as_str);
    let mut tolerances = Tolerances::default();
    for entry in &tol_entries {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("tolerance {entry:?} must be name=value")))?;
        tolerances.set(name.trim(), parse("tolerance", value)?)?;
    }
    let t_total: f64 = get("T").map(|v| parse("T", v)).transpose()?.unwrap_or(1.0);
    let cfg = RunConfig {
        command: command.name().to_string(),
        gamma: get("gamma").map(|v| parse("gamma", v)).transpose()?.unwrap_or(1.0),
        dt: get("dt").map(|v| parse("dt", v)).transpose()?.unwrap_or(1e-3),
        t_total,
        seed: get("seed").map(|v| parse("seed", v)).transpose()?.unwrap_or(2024),
        paths: get("paths").map(|v| parse("paths", v)).transpose()?.unwrap_or(1000),
        j: get("j").map(|v| parse_list("j", v)).transpose()?.unwrap_or_default(),
        checkpoints: get("checkpoints").map(|v| parse_list("checkpoints", v)).transpose()?.unwrap_or_default(),
        out: PathBuf::from(get("out").unwrap_or(".")),
        workers: get("workers").map(|v| parse("workers", v)).transpose()?,
        tolerances: tolerances.0,
        h: get("h").map(|v| parse("h", v)).transpose()?,
        quick: get("quick").map(|v| parse_bool("quick", v)).transpose()?.unwrap_or(false),
        criteria: get("criteria").map(|v| parse_list("criteria", v)).transpose()?.unwrap_or_else(|| CRITERIA.to_vec()),
        raw: get("raw").map(|v| parse_bool("raw", v)).transpose()?.unwrap_or(false),
        a_values: get("a_values").map(|v| parse_list("a_values", v)).transpose()?.unwrap_or_else(|| {
            // cosh a = 2, 4, 16
            vec![2f64.acosh(), 4f64.acosh(), 16f64.acosh()]
        }),
        points: get("points").map(|v| parse("points", v)).transpose()?.unwrap_or(8),
        bloch: get("bloch").map(parse_bloch).transpose()?.unwrap_or_else(|| {
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, -0.48, 0.64]]
        }),
        strings: get("strings").map(parse_strings).transpose()?.unwrap_or_default(),
    };
    if cfg.workers == Some(0) {
        return Err(CliError::Usage("workers must be at least 1".into()));
    }
    if cfg.paths == 0 {
        return Err(CliError::Usage("paths must be at least 1".into()));
    }
    if let Some(&bad) = cfg.criteria.iter().find(|c| !CRITERIA.contains(c)) {
        return Err(CliError::Usage(format!("no criterion {bad}")));
    }
    Ok(cfg)
}

/// Output files written under temporary names and renamed on [`Outputs::commit`];
/// anything not committed is removed on drop.
pub struct Outputs {
    dir: PathBuf,
    pending: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            pending: Vec::new(),
            committed: false,
        })
    }

    pub fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let fin = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        let f = File::create(&tmp)?;
        self.pending.push((tmp, fin));
        Ok(BufWriter::new(f))
    }

    pub fn commit(mut self) -> CliResult<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (tmp, fin) in &self.pending {
            fs::rename(tmp, fin)?;
            done.push(fin.clone());
        }
        self.committed = true;
        Ok(done)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.pending {
                let _ = fs::remove_file(tmp);
            }
        }
    }
}

fn write_json<T: Serialize>(w: &mut impl Write, v: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *w, v).map_err(|e| CliError::Run(Error::Json(e)))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn echo(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn sim_config(cfg: &RunConfig, default_checkpoints: Vec<f64>) -> CliResult<SimConfig> {
    let times = if cfg.checkpoints.is_empty() {
        default_checkpoints
    } else {
        cfg.checkpoints.clone()
    };
    Ok(SimConfig::new(cfg.gamma, cfg.dt, cfg.t_total, cfg.seed)?.with_checkpoints(times)?)
}

pub const CARTAN_COLUMNS: &str = "t,a,nu_z,nu_x,nu_y,nv_z,nv_x,nv_y,dw_z,dw_x,dw_y";

fn cmd_trajectory(cfg: &RunConfig, out: &mut Outputs) -> CliResult<u8> {
    let base = SimConfig::new(cfg.gamma, cfg.dt, cfg.t_total, cfg.seed)?;
    let n = base.n_steps()?;
    // default: one row per step
    let defaults = (1..=n).map(|k| k as f64 * cfg.dt).collect();
    let sim = sim_config(cfg, defaults)?;
    let steps = sim.checkpoint_steps()?;
    let mut stream = WienerStream::new(sim.seed, sim.dt);
    let mut integ = KrausIntegrator::new(sim.gamma);
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| steps[i]);
    let mut points = vec![KrausPoint::identity(); steps.len()];
    let mut last_dw = vec![[0.0; 3]; steps.len()];
    let mut next = 0;
    let mut dw = [0.0; 3];
    for s in 0..=n {
        if s > 0 {
            dw = stream.next_increment();
            integ.step(&dw);
        }
        while next < order.len() && steps[order[next]] == s {
            points[order[next]] = *integ.state();
            last_dw[order[next]] = dw;
            next += 1;
        }
    }
    let config = echo(cfg);
    let mut k = out.create("kraus.csv")?;
    write_checkpoints_csv(&mut k, &config, &sim.checkpoint_times, &points)?;
    k.flush()?;
    let mut c = out.create("cartan.csv")?;
    writeln!(c, "# config: {config}")?;
    writeln!(c, "{CARTAN_COLUMNS}")?;
    for ((t, p), d) in sim.checkpoint_times.iter().zip(&points).zip(&last_dw) {
        let f = cartan_decompose_unchecked(p.matrix());
        let (u, v) = (f.povm_direction().0, f.postmeasurement_direction().0);
        writeln!(
            c,
            "{t},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
            f.a, u[0], u[1], u[2], v[0], v[1], v[2], d[0], d[1], d[2]
        )?;
    }
    c.flush()?;
    Ok(EXIT_PASS)
}

fn cmd_ensemble(cfg: &RunConfig, out: &mut Outputs) -> CliResult<u8> {
    let sim = sim_config(cfg, vec![cfg.t_total])?;
    let stats = run_ensemble_with_workers(&sim, cfg.paths, cfg.workers)?;
    let summary = summarize(&stats, cfg.h.unwrap_or(0.05));
    let mut w = out.create("ensemble.json")?;
    write_json(&mut w, &json!({ "config": echo(cfg), "summary": summary }))?;
    if cfg.raw {
        let mut p = out.create("paths.csv")?;
        write_paths_csv(&mut p, &stats, &echo(cfg))?;
        p.flush()?;
    }
    Ok(EXIT_PASS)
}

fn cmd_fp(cfg: &RunConfig, out: &mut Outputs) -> CliResult<u8> {
    let h = cfg.h.unwrap_or(0.01);
    let gt = cfg.gamma * cfg.t_total;
    let grid = RadialGrid::for_run(gt, h)?;
    let dt = 0.25 * h / cfg.gamma;
    let p = solve_from_origin(cfg.gamma, cfg.t_total, &grid, dt)?;
    let mass = p.mass();
    let eps = (-gt).exp();
    let tail = if gt > 0.0 && eps < 1.0 { Some(tail_probability(&p, eps)?) } else { None };
    let bound = if gt > 0.0 { erfc_bound(gt, eps).ok() } else { None };
    let gaussian_l1 = if gt >= 3.0 {
        Some(p.l1_distance(&gaussian_asymptote(cfg.gamma, cfg.t_total, &grid)?)?)
    } else {
        None
    };
    let report = json!({
        "config": echo(cfg),
        "gamma_t": gt,
        "grid": { "a_max": grid.a_max, "n_cells": grid.n_cells, "h": grid.h(), "dt": dt },
        "mass": mass,
        "mass_within_tolerance": (mass - 1.0).abs() <= MASS_TOL,
        "mean": p.mean(),
        "variance": p.variance(),
        "mode": p.mode(),
        "tail_probability_purity_above_exp_minus_gamma_t": tail,
        "erfc_bound": bound,
        "l1_to_gaussian_asymptote": gaussian_l1,
    });
    let mut w = out.create("fp.json")?;
    write_json(&mut w, &report)?;
    let mut c = out.create("fp.csv")?;
    p.write_csv(&mut c, &echo(cfg))?;
    c.flush()?;
    println!("conserved mass {mass:.12}");
    Ok(if (mass - 1.0).abs() <= MASS_TOL { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_verify(cfg: &RunConfig, out: &mut Outputs) -> CliResult<u8> {
    let opts = VerifyOptions {
        scale: if cfg.quick { Scale::Quick } else { Scale::Full },
        seed: cfg.seed,
        tolerances: Tolerances(cfg.tolerances.clone()),
        workers: cfg.workers,
    };
    let report = run_all(&cfg.criteria, &opts);
    for o in &report.outcomes {
        println!("{}", o.line());
    }
    let mut w = out.create("verdicts.json")?;
    write_json(&mut w, &json!({ "config": echo(cfg), "report": report }))?;
    Ok(match report.overall {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn cmd_geometry(cfg: &RunConfig, out: &mut Outputs) -> CliResult<u8> {
    let j_max = if cfg.j.is_empty() { 5.0 } else { cfg.j.iter().fold(0.0f64, |m, &j| m.max(j)) };
    let two_j = (2.0 * j_max).round();
    if !(two_j >= 1.0 && two_j <= scs_collapse::algebra::MAX_TWO_J as f64) {
        return Err(CliError::Usage(format!("j = {j_max} out of range")));
    }
    let report = identity_suite(two_j as u32)?;
    let limit = cfg.tolerances["c7_residual"];
    for r in &report.rows {
        println!("{:<50} 2j={:<3} {:.3e}", r.identity, r.two_j, r.residual);
    }
    let mut w = out.create("geometry.json")?;
    write_json(
        &mut w,
        &json!({ "config": echo(cfg), "limit": limit, "max_residual": report.max_residual(), "report": report }),
    )?;
    Ok(if report.max_residual() <= limit { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_viz(cfg: &RunConfig, out: &mut Outputs) -> CliResult<u8> {
    let mut w = out.create("sl2r_viz.csv")?;
    sl2r_viz_export(&mut w, &cfg.a_values, cfg.points, &echo(cfg))?;
    w.flush()?;
    Ok(EXIT_PASS)
}

fn cmd_tomography(cfg: &RunConfig, out: &mut Outputs) -> CliResult<u8> {
    let strings = if cfg.strings.is_empty() {
        strings_up_to(cfg.bloch.len(), 3)
    } else {
        cfg.strings.clone()
    };
    let samples = sample_product_q(&cfg.bloch, cfg.paths, cfg.seed)?;
    let mut rows = Vec::with_capacity(strings.len());
    for s in &strings {
        let e = estimate_k_local(&samples, s)?;
        let truth = product_expectation(&cfg.bloch, s)?;
        rows.push(json!({
            "string": s.iter().map(|d| char::from(b'0' + d)).collect::<String>(),
            "estimate": e.estimate,
            "std_error": e.std_error,
            "n": e.n,
            "exact": truth,
        }));
    }
    let mut w = out.create("tomography.json")?;
    write_json(&mut w, &json!({ "config": echo(cfg), "estimates": rows }))?;
    if cfg.raw {
        let mut c = out.create("samples.csv")?;
        write_samples_csv(&mut c, &samples, &echo(cfg))?;
        c.flush()?;
    }
    Ok(EXIT_PASS)
}

fn dispatch(command: &Command) -> CliResult<u8> {
    let cfg = resolve(command)?;
    let mut out = Outputs::new(&cfg.out)?;
    let code = match command {
        Command::Trajectory(_) => cmd_trajectory(&cfg, &mut out)?,
        Command::Ensemble(_) => cmd_ensemble(&cfg, &mut out)?,
        Command::Fp(_) => cmd_fp(&cfg, &mut out)?,
        Command::Verify(_) => cmd_verify(&cfg, &mut out)?,
        Command::Geometry(_) => cmd_geometry(&cfg, &mut out)?,
        Command::Viz(_) => cmd_viz(&cfg, &mut out)?,
        Command::Tomography(_) => cmd_tomography(&cfg, &mut out)?,
    };
    for p in out.commit()? {
        eprintln!("wrote {}", p.display());
    }
    Ok(code)
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Run(_) => EXIT_FAIL,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let text = "# run\ngamma = 2.0\nT=3 # trailing\n\ntolerance = c3_l1=0.1\ntolerance.c8_deviation = 0.5\n";
        let (m, t) = parse_config_file(text).unwrap();
        assert_eq!(m["gamma"], "2.0");
        assert_eq!(m["T"], "3");
        assert_eq!(t, vec!["c3_l1=0.1".to_string(), "c8_deviation=0.5".to_string()]);
        assert!(matches!(parse_config_file("bogus=1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config_file("gamma"), Err(CliError::Usage(_))));
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("scs-cli-unit-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let file = dir.join("run.cfg");
        fs::write(&file, "gamma=2\ndt=0.002\nseed=9\n").unwrap();
        let cmd = Command::Ensemble(Opts {
            config: Some(file),
            gamma: Some("3".into()),
            ..Default::default()
        });
        let cfg = resolve(&cmd).unwrap();
        assert_eq!(cfg.gamma, 3.0);
        assert_eq!(cfg.dt, 0.002);
        assert_eq!(cfg.seed, 9);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn list_parsers() {
        assert_eq!(parse_strings("310,002").unwrap(), vec![vec![3, 1, 0], vec![0, 0, 2]]);
        assert!(parse_strings("4").is_err());
        assert_eq!(parse_bloch("1 0 0; 0 1 0").unwrap().len(), 2);
        assert!(parse_bloch("1 0").is_err());
        assert_eq!(strings_up_to(3, 3).len(), 64);
        assert_eq!(strings_up_to(3, 1).len(), 10);
    }

    #[test]
    fn outputs_removed_without_commit() {
        let dir = std::env::temp_dir().join(format!("scs-cli-outputs-{}", std::process::id()));
        {
            let mut o = Outputs::new(&dir).unwrap();
            let mut w = o.create("x.csv").unwrap();
            writeln!(w, "partial").unwrap();
        }
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 0);
        fs::remove_dir_all(&dir).unwrap();
    }
}
