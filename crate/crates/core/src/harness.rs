//! Threshold sweeps: amplitude bisection per viscosity, power-law exponent
//! fitting across the grid, and deterministic persistence of every probe run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::background::fit_line;
use crate::error::{Error, Result};
use crate::records::{Classification, RunRecord};
use crate::solver::{run_with_dir, SolverConfig};

pub const SWEEP_HEADER: &str = "# shearflow sweep v1";
pub const WORKERS_ENV: &str = "SHEARFLOW_WORKERS";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Strictly positive, strictly increasing viscosities.
    pub nu_grid: Vec<f64>,
    /// Initial amplitude bracket [lo, hi]; lo must classify stable and hi
    /// transitioned or the bisection refuses to guess.
    pub eps_bracket: [f64; 2],
    pub bisection_steps: u32,
    pub base: SolverConfig,
    /// Replaces the base config's seed for every probe run.
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            nu_grid: log_spaced(1e-4, 1e-2, 8),
            eps_bracket: [1e-2, 10.0],
            bisection_steps: 8,
            base: SolverConfig::default(),
            seed: 7,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu_grid.is_empty() {
            return Err(Error::InvalidConfig("empty viscosity grid".into()));
        }
        for w in self.nu_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidConfig(
                    "viscosity grid must be strictly increasing".into(),
                ));
            }
        }
        if !(self.nu_grid[0] > 0.0) {
            return Err(Error::InvalidConfig("viscosities must be positive".into()));
        }
        let [lo, hi] = self.eps_bracket;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidConfig(format!(
                "amplitude bracket [{lo}, {hi}] must satisfy 0 < lo < hi"
            )));
        }
        if self.bisection_steps == 0 {
            return Err(Error::InvalidConfig("need at least one bisection step".into()));
        }
        self.base.validate()
    }
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// One classified probe along a bisection path. `step` 0 and 1 are the
/// bracket ends; bisection proper starts at 2.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Probe {
    pub step: u32,
    pub eps: f64,
    pub classification: Classification,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub nu: f64,
    /// Geometric midpoint of the final bracket.
    pub eps_star: f64,
    pub bracket: [f64; 2],
    /// ln(hi/lo) of the final bracket; halves exactly per step.
    pub log_width: f64,
    /// Sorted by amplitude, the probe classifications form a stable prefix
    /// followed by a transitioned suffix.
    pub single_crossing: bool,
    pub probes: Vec<Probe>,
}

/// Failed runs count as transitioned for bracketing: a run that lost
/// finiteness certainly did not stay in the perturbative regime.
fn transitioned(c: Classification) -> bool {
    matches!(c, Classification::Transitioned | Classification::Failed)
}

pub fn single_crossing(probes: &[Probe]) -> bool {
    let mut sorted: Vec<&Probe> = probes.iter().collect();
    sorted.sort_by(|a, b| a.eps.partial_cmp(&b.eps).unwrap());
    let mut seen_transitioned = false;
    for p in sorted {
        let t = transitioned(p.classification);
        if seen_transitioned && !t {
            return false;
        }
        seen_transitioned |= t;
    }
    true
}

/// Log-amplitude bisection against an arbitrary classifier. The classifier
/// receives (nu, eps, step) so callers can persist each probe under a
/// deterministic key.
pub fn bisect_with<F>(nu: f64, cfg: &SweepConfig, classify: &F) -> Result<ThresholdResult>
where
    F: Fn(f64, f64, u32) -> Result<Classification>,
{
    cfg.validate()?;
    let [mut lo, mut hi] = cfg.eps_bracket;
    let mut probes = Vec::with_capacity(cfg.bisection_steps as usize + 2);

    let c_lo = classify(nu, lo, 0)?;
    probes.push(Probe {
        step: 0,
        eps: lo,
        classification: c_lo,
    });
    let c_hi = classify(nu, hi, 1)?;
    probes.push(Probe {
        step: 1,
        eps: hi,
        classification: c_hi,
    });
    if transitioned(c_lo) || !transitioned(c_hi) {
        return Err(Error::InvalidArgument(format!(
            "bracket invalid at nu = {nu:e}: eps = {lo:e} classified {c_lo}, \
             eps = {hi:e} classified {c_hi}; need stable at the low end and \
             transitioned at the high end"
        )));
    }

    for i in 0..cfg.bisection_steps {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        let c = classify(nu, mid, 2 + i)?;
        probes.push(Probe {
            step: 2 + i,
            eps: mid,
            classification: c,
        });
        if transitioned(c) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    Ok(ThresholdResult {
        nu,
        eps_star: (0.5 * (lo.ln() + hi.ln())).exp(),
        bracket: [lo, hi],
        log_width: (hi / lo).ln(),
        single_crossing: single_crossing(&probes),
        probes,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GammaFit {
    /// Slope of log eps_star against log nu.
    pub gamma: f64,
    /// Log-space intercept, i.e. ln of the power-law prefactor.
    pub intercept: f64,
    pub gamma_se: f64,
    pub r2: f64,
    /// Two-sigma band around the slope.
    pub ci: [f64; 2],
}

pub fn fit_gamma(thresholds: &[(f64, f64)]) -> Result<GammaFit> {
    if thresholds.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs at least 4 viscosity points, got {}",
            thresholds.len()
        )));
    }
    let xs: Vec<f64> = thresholds.iter().map(|(nu, _)| nu.ln()).collect();
    let ys: Vec<f64> = thresholds.iter().map(|(_, e)| e.ln()).collect();
    let (slope, intercept, se, r2) = fit_line(&xs, &ys)?;
    Ok(GammaFit {
        gamma: slope,
        intercept,
        gamma_se: se,
        r2,
        ci: [slope - 2.0 * se, slope + 2.0 * se],
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NuOutcome {
    pub nu: f64,
    pub threshold: Option<ThresholdResult>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub entries: Vec<NuOutcome>,
    pub fit: Option<GammaFit>,
    pub summary_csv: String,
}

fn worker_pool() -> Result<Option<rayon::ThreadPool>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => {
            let n: usize = v.parse().map_err(|_| {
                Error::InvalidArgument(format!("{WORKERS_ENV} = {v:?} is not a worker count"))
            })?;
            if n == 0 {
                return Err(Error::InvalidArgument(format!(
                    "{WORKERS_ENV} must be at least 1"
                )));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(Some(pool))
        }
    }
}

/// Sweep the viscosity grid, bisecting each threshold against the given
/// classifier. Viscosities run as independent jobs; results are merged back
/// in grid order so the outcome is deterministic regardless of scheduling.
pub fn sweep_with<F>(cfg: &SweepConfig, classify: &F) -> Result<SweepOutcome>
where
    F: Fn(f64, f64, u32) -> Result<Classification> + Sync,
{
    cfg.validate()?;
    let job = |nu: &f64| -> NuOutcome {
        match bisect_with(*nu, cfg, classify) {
            Ok(t) => NuOutcome {
                nu: *nu,
                threshold: Some(t),
                error: None,
            },
            Err(e) => NuOutcome {
                nu: *nu,
                threshold: None,
                error: Some(format!("{}: {e}", e.kind())),
            },
        }
    };
    let entries: Vec<NuOutcome> = match worker_pool()? {
        Some(pool) => pool.install(|| {
            use rayon::prelude::*;
            cfg.nu_grid.par_iter().map(job).collect()
        }),
        None => {
            use rayon::prelude::*;
            cfg.nu_grid.par_iter().map(job).collect()
        }
    };

    let points: Vec<(f64, f64)> = entries
        .iter()
        .filter_map(|e| e.threshold.as_ref().map(|t| (e.nu, t.eps_star)))
        .collect();
    let fit = if points.len() >= 4 {
        Some(fit_gamma(&points)?)
    } else {
        None
    };

    let mut csv = String::new();
    csv.push_str(SWEEP_HEADER);
    csv.push('\n');
    csv.push_str("nu,eps_star,bracket_lo,bracket_hi,probes,single_crossing,status\n");
    for e in &entries {
        match (&e.threshold, &e.error) {
            (Some(t), _) => csv.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{},{},ok\n",
                e.nu,
                t.eps_star,
                t.bracket[0],
                t.bracket[1],
                t.probes.len(),
                t.single_crossing as u8,
            )),
            (None, Some(err)) => csv.push_str(&format!(
                "{:.17e},nan,nan,nan,0,0,{}\n",
                e.nu,
                err.replace(',', ";").replace('\n', " "),
            )),
            (None, None) => unreachable!(),
        }
    }
    if let Some(f) = &fit {
        csv.push_str(&format!(
            "# gamma = {:.17e}, intercept = {:.17e}, se = {:.17e}, r2 = {:.17e}, ci = [{:.17e}, {:.17e}]\n",
            f.gamma, f.intercept, f.gamma_se, f.r2, f.ci[0], f.ci[1],
        ));
    } else {
        csv.push_str("# gamma fit skipped: fewer than 4 resolved thresholds\n");
    }

    Ok(SweepOutcome {
        entries,
        fit,
        summary_csv: csv,
    })
}

/// One full simulation with artifacts persisted under `dir` when given.
pub fn run_single(config: &SolverConfig, dir: Option<&Path>) -> Result<RunRecord> {
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    let record = run_with_dir(config, dir)?;
    if let Some(d) = dir {
        record.write_dir(d)?;
    }
    Ok(record)
}

fn probe_config(cfg: &SweepConfig, nu: f64, eps: f64) -> SolverConfig {
    let mut c = cfg.base.clone();
    c.nu = nu;
    c.eps = eps;
    c.seed = cfg.seed;
    c
}

fn real_classifier<'a>(
    cfg: &'a SweepConfig,
    out_dir: Option<&'a Path>,
) -> impl Fn(f64, f64, u32) -> Result<Classification> + Sync + 'a {
    move |nu, eps, step| {
        let c = probe_config(cfg, nu, eps);
        let dir = out_dir.map(|d| d.join(format!("nu_{nu:.6e}")).join(format!("step_{step:02}")));
        let record = run_single(&c, dir.as_deref())?;
        Ok(record.classification)
    }
}

pub fn bisect_threshold(
    nu: f64,
    cfg: &SweepConfig,
    out_dir: Option<&Path>,
) -> Result<ThresholdResult> {
    bisect_with(nu, cfg, &real_classifier(cfg, out_dir))
}

/// Full sweep against real simulations, with a per-run directory tree and a
/// top-level summary CSV when `out_dir` is given.
pub fn sweep(cfg: &SweepConfig, out_dir: Option<&Path>) -> Result<SweepOutcome> {
    if let Some(d) = out_dir {
        std::fs::create_dir_all(d)?;
    }
    let outcome = sweep_with(cfg, &real_classifier(cfg, out_dir))?;
    if let Some(d) = out_dir {
        std::fs::write(d.join("sweep_summary.csv"), &outcome.summary_csv)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(threshold: f64) -> impl Fn(f64, f64, u32) -> Result<Classification> + Sync {
        move |_nu, eps, _step| {
            Ok(if eps > threshold {
                Classification::Transitioned
            } else {
                Classification::Stable
            })
        }
    }

    fn synth_cfg(steps: u32) -> SweepConfig {
        SweepConfig {
            nu_grid: log_spaced(1e-4, 1e-2, 4),
            eps_bracket: [1e-2, 1.0],
            bisection_steps: steps,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn log_spacing_hits_both_ends_and_increases() {
        let g = log_spaced(1e-4, 1e-2, 8);
        assert_eq!(g.len(), 8);
        assert!((g[0] - 1e-4).abs() < 1e-19);
        assert!((g[7] - 1e-2).abs() < 1e-17);
        for w in g.windows(2) {
            assert!(w[1] > w[0]);
        }
        let r0 = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
    }

    #[test]
    fn bisection_brackets_a_planted_threshold() {
        let cfg = synth_cfg(8);
        let t = bisect_with(1e-3, &cfg, &planted(0.1)).unwrap();
        assert!(t.bracket[0] <= 0.1 && 0.1 <= t.bracket[1]);
        assert!(t.eps_star >= t.bracket[0] && t.eps_star <= t.bracket[1]);
        let span = (cfg.eps_bracket[1] / cfg.eps_bracket[0]).ln();
        assert!((t.log_width - span / 256.0).abs() < 1e-12);
        assert!(t.single_crossing);
        assert_eq!(t.probes.len(), 10);
    }

    #[test]
    fn bracket_width_halves_each_step() {
        for steps in [1, 3, 5, 12] {
            let cfg = synth_cfg(steps);
            let t = bisect_with(1e-3, &cfg, &planted(0.3)).unwrap();
            let span = (cfg.eps_bracket[1] / cfg.eps_bracket[0]).ln();
            let expect = span / 2f64.powi(steps as i32);
            assert!(
                (t.log_width - expect).abs() < 1e-12 * expect.max(1.0),
                "steps {steps}: width {} vs {expect}",
                t.log_width
            );
        }
    }

    #[test]
    fn constant_classifier_is_a_bracket_error_not_a_guess() {
        let cfg = synth_cfg(8);
        let all_stable = |_: f64, _: f64, _: u32| Ok(Classification::Stable);
        let err = bisect_with(1e-3, &cfg, &all_stable).unwrap_err();
        assert_eq!(err.kind(), "invalid-argument");
        assert!(err.to_string().contains("bracket"));
        let all_trans = |_: f64, _: f64, _: u32| Ok(Classification::Transitioned);
        assert!(bisect_with(1e-3, &cfg, &all_trans).is_err());
    }

    #[test]
    fn failed_runs_bracket_like_transitions() {
        let cfg = synth_cfg(4);
        let blows_up = |_nu: f64, eps: f64, _s: u32| {
            Ok(if eps > 0.2 {
                Classification::Failed
            } else {
                Classification::Stable
            })
        };
        let t = bisect_with(1e-3, &cfg, &blows_up).unwrap();
        assert!(t.bracket[0] <= 0.2 && 0.2 <= t.bracket[1]);
        assert!(t.single_crossing);
    }

    #[test]
    fn crossing_audit_rejects_interleaved_classifications() {
        let p = |eps: f64, c: Classification| Probe {
            step: 0,
            eps,
            classification: c,
        };
        use Classification::*;
        assert!(single_crossing(&[
            p(0.1, Stable),
            p(0.2, Stable),
            p(0.5, Transitioned)
        ]));
        assert!(!single_crossing(&[
            p(0.1, Stable),
            p(0.2, Transitioned),
            p(0.5, Stable)
        ]));
        assert!(single_crossing(&[p(0.3, Stable)]));
        assert!(single_crossing(&[p(0.2, Failed), p(0.1, Stable)]));
    }

    #[test]
    fn gamma_fit_recovers_planted_power_laws() {
        let nus = log_spaced(1e-4, 1e-2, 8);
        let cube: Vec<(f64, f64)> = nus.iter().map(|&n| (n, n.powf(1.0 / 3.0))).collect();
        let f = fit_gamma(&cube).unwrap();
        assert!((f.gamma - 1.0 / 3.0).abs() < 1e-12, "gamma {}", f.gamma);
        assert!(f.intercept.abs() < 1e-10);
        assert!(f.r2 > 1.0 - 1e-12);

        let half: Vec<(f64, f64)> = nus.iter().map(|&n| (n, 3.0 * n.sqrt())).collect();
        let f = fit_gamma(&half).unwrap();
        assert!((f.gamma - 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(f.ci[0] <= f.gamma && f.gamma <= f.ci[1]);
    }

    #[test]
    fn gamma_fit_needs_four_points() {
        let pts = [(1e-4, 0.1), (1e-3, 0.2), (1e-2, 0.4)];
        assert!(fit_gamma(&pts).is_err());
    }

    #[test]
    fn sweep_recovers_an_exponent_and_merges_deterministically() {
        let mut cfg = synth_cfg(16);
        cfg.eps_bracket = [1e-3, 1.0];
        let classify = |nu: f64, eps: f64, _s: u32| {
            Ok(if eps > nu.powf(1.0 / 3.0) {
                Classification::Transitioned
            } else {
                Classification::Stable
            })
        };
        let a = sweep_with(&cfg, &classify).unwrap();
        let b = sweep_with(&cfg, &classify).unwrap();
        assert_eq!(a.summary_csv, b.summary_csv);
        let nus: Vec<f64> = a.entries.iter().map(|e| e.nu).collect();
        assert_eq!(nus, cfg.nu_grid);
        let fit = a.fit.unwrap();
        // bisection resolves each threshold to half the final bracket
        assert!(
            (fit.gamma - 1.0 / 3.0).abs() < 1e-3,
            "gamma {}",
            fit.gamma
        );
        assert!(a.summary_csv.starts_with(SWEEP_HEADER));
        assert_eq!(a.entries.len(), 4);
        for e in &a.entries {
            assert!(e.threshold.is_some());
        }
    }

    #[test]
    fn sweep_keeps_going_past_an_unbracketable_viscosity() {
        let cfg = synth_cfg(6);
        // at the smallest viscosity nothing ever transitions
        let classify = |nu: f64, eps: f64, _s: u32| {
            Ok(if nu > 2e-4 && eps > 0.1 {
                Classification::Transitioned
            } else {
                Classification::Stable
            })
        };
        let out = sweep_with(&cfg, &classify).unwrap();
        assert!(out.entries[0].error.is_some());
        assert!(out.entries[1..].iter().all(|e| e.threshold.is_some()));
        assert!(out.fit.is_none());
        assert!(out.summary_csv.contains("invalid-argument"));
    }
}
