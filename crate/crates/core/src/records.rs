//! Run outcomes and their on-disk layout: one directory per run with a
//! config manifest, a versioned CSV of the diagnostic series, the bootstrap
//! report, and optional plain-text spectral checkpoints.

use std::fmt;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{BootstrapReport, DiagnosticFrame, MultiplierReport, BOOTSTRAP_NAMES};
use crate::error::{Error, Result};
use crate::solver::SolverConfig;
use crate::spectral::{Grid, SpectralField};

pub const DIAGNOSTICS_HEADER: &str = "# shearflow diagnostics v1";
pub const CHECKPOINT_HEADER: &str = "# shearflow spectral checkpoint v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Stable,
    Transitioned,
    Failed,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::Stable => "stable",
            Classification::Transitioned => "transitioned",
            Classification::Failed => "failed",
        };
        write!(f, "{s}")
    }
}

/// Everything one run produces. `final_omega` is kept in memory for oracle
/// comparisons and checkpointing but is not part of the JSON payload.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: SolverConfig,
    pub classification: Classification,
    pub failure: Option<String>,
    pub frames: Vec<DiagnosticFrame>,
    pub bootstrap: BootstrapReport,
    /// Frequency-inequality scan at the last diagnostic time.
    pub multipliers: Option<MultiplierReport>,
    pub initial_hsigma: f64,
    pub peak_hsigma: f64,
    pub initial_enstrophy_nonzero: f64,
    pub final_enstrophy_nonzero: f64,
    pub steps: u64,
    pub remaps: u64,
    pub final_t: f64,
    pub final_shear: f64,
    pub final_lag: f64,
    pub wall_secs: f64,
    pub version: String,
    #[serde(skip)]
    pub final_omega: Option<SpectralField>,
}

pub fn version_stamp() -> String {
    format!("shearflow {}", env!("CARGO_PKG_VERSION"))
}

fn push_f(s: &mut String, v: f64) {
    use fmt::Write;
    let _ = write!(s, ",{v:.17e}");
}

/// The diagnostic series as versioned CSV. Numeric payloads are printed with
/// 17 fractional digits so identical runs produce identical bytes and values
/// round-trip exactly.
pub fn diagnostics_csv(frames: &[DiagnosticFrame]) -> String {
    let mut out = String::new();
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    out.push_str(
        "t,e_sigma,a_sigma_omega_sq,ck_w,a_e_norm_sq,\
         ev_g,ev_h,ev_hbar,ev_h_m1,ev_hbar_m1,\
         enstrophy,enstrophy_nonzero,omega_hsigma,\
         vx_nonzero,vy,omega_nonzero,omega_zero_hs,env_vx,env_vy,env_omega,\
         frame_skew,phi_psi_gap,monotone_margin,frames_active",
    );
    for name in BOOTSTRAP_NAMES {
        out.push_str(",ratio_");
        out.push_str(&name.replace('-', "_"));
    }
    out.push_str(",flagged\n");
    for fr in frames {
        let mut line = format!("{:.17e}", fr.t);
        for v in [
            fr.e_sigma,
            fr.a_sigma_omega_sq,
            fr.ck_w,
            fr.a_e_norm_sq,
            fr.ev.g_hsigma_sq,
            fr.ev.h_hsigma_sq_scaled,
            fr.ev.hbar_hsigma_sq_scaled,
            fr.ev.h_hsigma_m1_sq,
            fr.ev.hbar_hsigma_m1_sq,
            fr.enstrophy,
            fr.enstrophy_nonzero,
            fr.omega_hsigma,
            fr.mode_norms.vx_nonzero,
            fr.mode_norms.vy,
            fr.mode_norms.omega_nonzero,
            fr.mode_norms.omega_zero_hs,
            fr.mode_norms.env_vx,
            fr.mode_norms.env_vy,
            fr.mode_norms.env_omega,
            fr.frame_skew,
            fr.phi_psi_gap,
            fr.monotone_margin,
        ] {
            push_f(&mut line, v);
        }
        line.push_str(if fr.frames_active { ",1" } else { ",0" });
        for r in fr.ratios {
            push_f(&mut line, r);
        }
        line.push_str(if fr.flagged { ",1" } else { ",0" });
        line.push('\n');
        out.push_str(&line);
    }
    out
}

/// Compact per-run summary for the top of a sweep directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub classification: Classification,
    pub failure: Option<String>,
    pub nu: f64,
    pub eps: f64,
    pub seed: u64,
    pub final_t: f64,
    pub steps: u64,
    pub remaps: u64,
    pub initial_hsigma: f64,
    pub peak_hsigma: f64,
    pub initial_enstrophy_nonzero: f64,
    pub final_enstrophy_nonzero: f64,
    pub bootstrap_max_ratio: f64,
    pub bootstrap_any_flagged: bool,
    pub wall_secs: f64,
    pub version: String,
}

impl RunRecord {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            classification: self.classification,
            failure: self.failure.clone(),
            nu: self.config.nu,
            eps: self.config.eps,
            seed: self.config.seed,
            final_t: self.final_t,
            steps: self.steps,
            remaps: self.remaps,
            initial_hsigma: self.initial_hsigma,
            peak_hsigma: self.peak_hsigma,
            initial_enstrophy_nonzero: self.initial_enstrophy_nonzero,
            final_enstrophy_nonzero: self.final_enstrophy_nonzero,
            bootstrap_max_ratio: self.bootstrap.max_ratio,
            bootstrap_any_flagged: self.bootstrap.any_flagged,
            wall_secs: self.wall_secs,
            version: self.version.clone(),
        }
    }

    /// Persist the run into `dir`: config.json, diagnostics.csv,
    /// bootstrap.json, summary.json, and a final checkpoint when the config
    /// asks for one and the state is present.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(&self.config)?,
        )?;
        fs::write(dir.join("diagnostics.csv"), diagnostics_csv(&self.frames))?;
        fs::write(
            dir.join("bootstrap.json"),
            serde_json::to_string_pretty(&self.bootstrap)?,
        )?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&self.summary())?,
        )?;
        if self.config.output.checkpoint == crate::solver::CheckpointFormat::SpectralText {
            if let Some(omega) = &self.final_omega {
                let meta = CheckpointMeta {
                    grid: omega.grid,
                    t: self.final_t,
                    nu: self.config.nu,
                    seed: self.config.seed,
                    shear: self.final_shear,
                    frame_lag: self.final_lag,
                };
                fs::write(dir.join("final.spec"), checkpoint_text(omega, &meta))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointMeta {
    pub grid: Grid,
    pub t: f64,
    pub nu: f64,
    pub seed: u64,
    pub shear: f64,
    pub frame_lag: f64,
}

/// Plain-text spectral dump: self-describing header, then one row per
/// nonzero coefficient as signed mode indices and the complex value.
pub fn checkpoint_text(omega: &SpectralField, meta: &CheckpointMeta) -> String {
    use fmt::Write;
    let g = omega.grid;
    let mut out = String::new();
    out.push_str(CHECKPOINT_HEADER);
    out.push('\n');
    let _ = writeln!(
        out,
        "# nx={} ny={} lx={:.17e} ly={:.17e}",
        g.nx, g.ny, g.lx, g.ly
    );
    let _ = writeln!(
        out,
        "# t={:.17e} nu={:.17e} seed={} shear={:.17e} frame_lag={:.17e}",
        meta.t, meta.nu, meta.seed, meta.shear, meta.frame_lag
    );
    out.push_str("# columns: sk se re im (k = sk*2pi/lx, eta = se*2pi/ly)\n");
    for ix in 0..g.nx {
        let sk = Grid::signed(ix, g.nx);
        for iy in 0..g.ny {
            let c = omega.at(ix, iy);
            if c != Complex64::default() {
                let se = Grid::signed(iy, g.ny);
                let _ = writeln!(out, "{sk} {se} {:.17e} {:.17e}", c.re, c.im);
            }
        }
    }
    out
}

fn header_fields(line: &str) -> Result<Vec<(String, String)>> {
    let body = line.trim_start_matches('#').trim();
    body.split_whitespace()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::Serialization(format!("malformed checkpoint header entry '{kv}'"))
            })?;
            Ok((k.to_string(), v.to_string()))
        })
        .collect()
}

fn take<'a, T: std::str::FromStr>(fields: &'a [(String, String)], key: &str) -> Result<T> {
    let v = fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Serialization(format!("checkpoint header misses '{key}'")))?;
    v.parse().map_err(|_| {
        Error::Serialization(format!("checkpoint header value '{v}' invalid for '{key}'"))
    })
}

pub fn parse_checkpoint(text: &str) -> Result<(CheckpointMeta, SpectralField)> {
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Serialization("empty checkpoint".into()))?;
    if first.trim() != CHECKPOINT_HEADER {
        return Err(Error::Serialization(format!(
            "not a spectral checkpoint (leading line '{first}')"
        )));
    }
    let g_line = lines
        .next()
        .ok_or_else(|| Error::Serialization("checkpoint truncated in header".into()))?;
    let m_line = lines
        .next()
        .ok_or_else(|| Error::Serialization("checkpoint truncated in header".into()))?;
    let gf = header_fields(g_line)?;
    let mf = header_fields(m_line)?;
    let grid = Grid::new(
        take(&gf, "nx")?,
        take(&gf, "ny")?,
        take(&gf, "lx")?,
        take(&gf, "ly")?,
    )?;
    let meta = CheckpointMeta {
        grid,
        t: take(&mf, "t")?,
        nu: take(&mf, "nu")?,
        seed: take(&mf, "seed")?,
        shear: take(&mf, "shear")?,
        frame_lag: take(&mf, "frame_lag")?,
    };
    let mut omega = SpectralField::zeros(grid);
    for line in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next = |what: &str| {
            it.next()
                .ok_or_else(|| Error::Serialization(format!("checkpoint row misses {what}")))
        };
        let sk: i64 = next("sk")?
            .parse()
            .map_err(|_| Error::Serialization("bad sk".into()))?;
        let se: i64 = next("se")?
            .parse()
            .map_err(|_| Error::Serialization("bad se".into()))?;
        let re: f64 = next("re")?
            .parse()
            .map_err(|_| Error::Serialization("bad re".into()))?;
        let im: f64 = next("im")?
            .parse()
            .map_err(|_| Error::Serialization("bad im".into()))?;
        let ix = crate::spectral::signed_to_pos(sk, grid.nx)
            .ok_or_else(|| Error::Serialization(format!("mode sk={sk} off the {0} grid", grid.nx)))?;
        let iy = crate::spectral::signed_to_pos(se, grid.ny)
            .ok_or_else(|| Error::Serialization(format!("mode se={se} off the {0} grid", grid.ny)))?;
        omega.c[grid.idx(ix, iy)] = Complex64::new(re, im);
    }
    Ok((meta, omega))
}
