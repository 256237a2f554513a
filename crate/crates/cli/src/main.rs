use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shearflow::background::{decay_fit, fit_line};
use shearflow::error::{Error, Result};
use shearflow::harness::{self, SweepConfig};
use shearflow::records::DIAGNOSTICS_HEADER;
use shearflow::solver::{run, AmplitudeMode, PerturbationShape, SolverConfig, SolverState};
use shearflow::weights::{weight, weight_log_deriv, WeightParams};

#[derive(Parser)]
#[command(name = "shearflow", version, about = "Pseudospectral shear-flow runs and transition-threshold sweeps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and print its summary.
    Run(RunArgs),
    /// Bisect the transition amplitude over a viscosity grid and fit the exponent.
    Sweep(SweepArgs),
    /// Tabulate one mode's time weight as CSV.
    WeightsDump(WeightsDumpArgs),
    /// Fit a power law to a column of a diagnostics CSV.
    DecayFit(DecayFitArgs),
    /// Compare linearized runs against the exact per-mode decay factor.
    OracleCheck(OracleCheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Solver settings as TOML; absent keys take defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for the run record (config, diagnostics CSV, reports).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    /// Initial amplitude, in the units set by the config's amplitude mode.
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// Box aspect ratio Ly / Lx.
    #[arg(long, allow_negative_numbers = true)]
    aspect: Option<f64>,
    /// Drop the nonlinear term (pure linearized evolution).
    #[arg(long)]
    linear: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep settings as TOML; absent keys take defaults. The solver
    /// settings live under a [base] table.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory tree for per-run records plus the top-level summary CSV.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Bisection steps per viscosity.
    #[arg(long)]
    steps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct WeightsDumpArgs {
    #[arg(long, allow_negative_numbers = true)]
    nu: f64,
    /// Frequency of the mode being weighted.
    #[arg(long, allow_negative_numbers = true)]
    eta: f64,
    #[arg(long, default_value_t = 25.0)]
    t_max: f64,
    #[arg(long, default_value_t = 400)]
    samples: usize,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 6.0)]
    sigma: f64,
    #[arg(long, default_value_t = 4.0)]
    s: f64,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecayFitArgs {
    /// A diagnostics.csv written by `run`.
    #[arg(long, value_name = "FILE")]
    csv: PathBuf,
    /// Column to fit; see the CSV header line for names.
    #[arg(long)]
    column: String,
    #[arg(long)]
    t_min: f64,
    #[arg(long)]
    t_max: f64,
    /// Fit the slope against log(nu t) instead of log t.
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Viscosities to check; repeatable. Defaults to 1e-3 and 1e-2.
    #[arg(long = "nu", value_name = "NU")]
    nus: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    nx: usize,
    #[arg(long, default_value_t = 256)]
    ny: usize,
    #[arg(long, default_value_t = 2.0)]
    aspect: f64,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Largest acceptable relative error per tracked mode.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

fn load_toml<T>(path: Option<&Path>) -> Result<T>
where
    T: serde::de::DeserializeOwned + Default,
{
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg: SolverConfig = load_toml(a.config.as_deref())?;
    if let Some(v) = a.nu {
        cfg.nu = v;
    }
    if let Some(v) = a.eps {
        cfg.eps = v;
    }
    if let Some(v) = a.t_end {
        cfg.t_end = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.nx {
        cfg.grid.nx = v;
    }
    if let Some(v) = a.ny {
        cfg.grid.ny = v;
    }
    if let Some(v) = a.aspect {
        cfg.grid.l = v;
    }
    if a.linear {
        cfg.nonlinear = false;
    }
    cfg.validate()?;
    let record = harness::run_single(&cfg, a.out.as_deref())?;
    println!("{}", serde_json::to_string_pretty(&record.summary())?);
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg: SweepConfig = load_toml(a.config.as_deref())?;
    if let Some(v) = a.steps {
        cfg.bisection_steps = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    let outcome = harness::sweep(&cfg, a.out.as_deref())?;
    print!("{}", outcome.summary_csv);
    for entry in &outcome.entries {
        if let Some(err) = &entry.error {
            eprintln!("nu = {:.6e}: {err}", entry.nu);
        }
    }
    match &outcome.fit {
        Some(fit) => println!(
            "gamma = {:.6} +- {:.6} (2 sigma), intercept = {:.6}, r2 = {:.6}",
            fit.gamma,
            2.0 * fit.gamma_se,
            fit.intercept,
            fit.r2
        ),
        None => eprintln!("too few resolved thresholds for an exponent fit"),
    }
    Ok(())
}

fn cmd_weights_dump(a: WeightsDumpArgs) -> Result<()> {
    if a.samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    if !(a.t_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t-max must be positive, got {}",
            a.t_max
        )));
    }
    let p = WeightParams {
        nu: a.nu,
        beta: a.beta,
        sigma: a.sigma,
        s: a.s,
    };
    p.validate()?;
    let mut out = String::from("t,w,dt_log_w\n");
    for i in 0..=a.samples {
        let t = a.t_max * i as f64 / a.samples as f64;
        let w = weight(t, a.eta, &p);
        let dl = weight_log_deriv(t, a.eta, &p);
        out.push_str(&format!("{t:.12e},{w:.12e},{dl:.12e}\n"));
    }
    match a.out {
        Some(path) => std::fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn cmd_decay_fit(a: DecayFitArgs) -> Result<()> {
    if !(a.t_max > a.t_min) {
        return Err(Error::InvalidArgument(format!(
            "need t-min < t-max, got [{}, {}]",
            a.t_min, a.t_max
        )));
    }
    let text = std::fs::read_to_string(&a.csv)?;
    let mut lines = text.lines();
    let first = lines.next().unwrap_or("");
    if first.trim() != DIAGNOSTICS_HEADER {
        return Err(Error::InvalidArgument(format!(
            "{} does not start with {DIAGNOSTICS_HEADER:?}",
            a.csv.display()
        )));
    }
    let names = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("diagnostics CSV has no column line".into()))?;
    let cols: Vec<&str> = names.split(',').map(str::trim).collect();
    let idx = cols.iter().position(|c| *c == a.column).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no column {:?}; available: {}",
            a.column,
            cols.join(", ")
        ))
    })?;

    let mut series = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            continue;
        }
        let t: f64 = fields[0]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad time field {:?}", fields[0])))?;
        let v: f64 = fields[idx]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad value field {:?}", fields[idx])))?;
        if t >= a.t_min && t <= a.t_max && v > 0.0 && t > 0.0 {
            series.push((t, v));
        }
    }
    if series.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "only {} usable samples in [{}, {}]",
            series.len(),
            a.t_min,
            a.t_max
        )));
    }

    let (slope, se, r2) = match a.nu {
        Some(nu) => decay_fit(&series, nu, a.t_min, a.t_max)?,
        None => {
            let xs: Vec<f64> = series.iter().map(|(t, _)| t.ln()).collect();
            let ys: Vec<f64> = series.iter().map(|(_, v)| v.ln()).collect();
            let (slope, _, se, r2) = fit_line(&xs, &ys)?;
            (slope, se, r2)
        }
    };
    println!(
        "{}",
        serde_json::json!({
            "column": a.column,
            "points": series.len(),
            "against": if a.nu.is_some() { "log(nu t)" } else { "log t" },
            "slope": slope,
            "slope_se": se,
            "r2": r2,
        })
    );
    Ok(())
}

fn signed(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if i <= n / 2 {
        i
    } else {
        i - n
    }
}

/// Exact decay factor for one vorticity mode of the linearization around
/// Couette flow, integrated from time 0 to t at lab frequency eta0.
fn shear_heat_factor(nu: f64, t: f64, k: f64, eta0: f64) -> f64 {
    if k == 0.0 {
        (-nu * eta0 * eta0 * t).exp()
    } else {
        let a = eta0;
        let b = eta0 - k * t;
        (-nu * (k * k * t + (a * a * a - b * b * b) / (3.0 * k))).exp()
    }
}

fn oracle_max_rel_err(nu: f64, a: &OracleCheckArgs) -> Result<(f64, usize)> {
    let mut cfg = SolverConfig::default();
    cfg.grid.nx = a.nx;
    cfg.grid.ny = a.ny;
    cfg.grid.l = a.aspect;
    cfg.nu = nu;
    cfg.t_end = a.t_end;
    cfg.dt_max = 0.05;
    cfg.nonlinear = false;
    cfg.amplitude = AmplitudeMode::Raw;
    cfg.eps = 1.0;
    cfg.shape = PerturbationShape::RandomBand {
        k_max: 2,
        eta_max: 2.0,
    };
    cfg.seed = a.seed;
    cfg.diag.cadence = cfg.t_end;
    cfg.diag.frames = false;
    cfg.early_exit = false;
    cfg.validate()?;

    let initial = SolverState::init(&cfg)?.omega;
    let rec = run(&cfg)?;
    let fin = rec
        .final_omega
        .as_ref()
        .ok_or_else(|| Error::Numerical("run kept no final state".into()))?;
    let grid = fin.grid;
    let shift_units = rec.final_lag * grid.ly / grid.lx;
    if (shift_units - shift_units.round()).abs() > 1e-9 {
        return Err(Error::Numerical(
            "remap offset is not a whole number of grid shifts".into(),
        ));
    }
    let shift = shift_units.round() as i64;

    let floor = 1e-14 * initial.max_abs();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for ix in 0..grid.nx {
        let kap = signed(ix, grid.nx);
        for iy in 0..grid.ny {
            let c0 = initial.at(ix, iy);
            if c0.norm() <= floor {
                continue;
            }
            let jf = signed(iy, grid.ny) - kap * shift;
            let got = fin.at_signed(kap, jf).ok_or_else(|| {
                Error::Numerical(format!("tracked mode ({kap}, {jf}) moved off the grid"))
            })?;
            let expect = c0 * shear_heat_factor(nu, rec.final_t, grid.k(ix), grid.eta(iy));
            worst = worst.max((got - expect).norm() / expect.norm());
            checked += 1;
        }
    }
    Ok((worst, checked))
}

fn cmd_oracle_check(a: OracleCheckArgs) -> Result<()> {
    let nus = if a.nus.is_empty() {
        vec![1e-3, 1e-2]
    } else {
        a.nus.clone()
    };
    let mut overall = 0.0f64;
    for &nu in &nus {
        let (worst, checked) = oracle_max_rel_err(nu, &a)?;
        println!("nu = {nu:.6e}: max relative error {worst:.3e} over {checked} tracked modes");
        overall = overall.max(worst);
    }
    println!("max relative error {overall:.3e}");
    if overall > a.tol {
        return Err(Error::Numerical(format!(
            "oracle error {overall:.3e} exceeds tolerance {:.1e}",
            a.tol
        )));
    }
    Ok(())
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::WeightsDump(a) => cmd_weights_dump(a),
        Cmd::DecayFit(a) => cmd_decay_fit(a),
        Cmd::OracleCheck(a) => cmd_oracle_check(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            });
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
