use serde::{Deserialize, Serialize};

use crate::background::BackgroundProfile;
use crate::error::{Error, Result};
use crate::weights::WeightParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Integrating-factor classical RK4 (default).
    IfRk4,
    /// Integrating-factor SSP RK3.
    IfRk3,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationShape {
    /// Seeded random coefficients on 1 <= |k| <= k_max, |eta| <= eta_max.
    RandomBand { k_max: i64, eta_max: f64 },
    /// One Hermitian mode pair at signed indices (k, j).
    SingleMode { k: i64, j: i64 },
    /// Two mode pairs at (k, +-j), a tilted dipole.
    Dipole { k: i64, j: i64 },
    /// Real Gaussian profile in eta at fixed |k|, even in eta. Clean slopes
    /// for transient-decay measurements.
    EvenBand { k: i64, eta_width: f64 },
}

/// How `eps` sets the initial amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeMode {
    /// ||omega_0||_{H^sigma} = eps * nu^{1/3}.
    TheoremUnits,
    /// ||omega_0||_{H^sigma} = eps.
    Raw,
}

/// Which definition of the auxiliary profile f0 enters hbar = -(f0 + h)/t.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum F0Choice {
    /// f0 = x-averaged vorticity (equivalently -d/dy <v^x>). This is the
    /// choice under which the evolution identities for h and hbar close,
    /// so the residual checks converge. Default.
    MeanVorticity,
    /// f0 = (U' - 1) + h, kept as an alternate reading.
    ShearPlusH,
}

/// Coordinates used for the energy-functional norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyFrame {
    /// Norms of the profile composed through the coordinate map (slower).
    Mapped,
    /// Norms taken directly in shearing coordinates; the skew against the
    /// mapped value is measured and reported.
    Shear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpKind {
    /// 6th-order local Lagrange interpolation in y (default).
    Lagrange6,
    /// Exact trigonometric evaluation (slow, for cross-checks).
    Spectral,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// Box aspect: Ly = 2 pi l, Lx = 2 pi.
    pub l: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: 128,
            ny: 512,
            l: 4.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagConfig {
    pub sigma: f64,
    pub s: f64,
    pub beta: f64,
    /// Diagnostic cadence in simulation time.
    pub cadence: f64,
    /// When set, emit diagnostics every fixed number of steps instead.
    pub every_steps: Option<usize>,
    pub energy_frame: EnergyFrame,
    pub f0: F0Choice,
    pub interp: InterpKind,
    /// Earliest time at which 1/t coordinate-system quantities are formed.
    pub t_min_frames: f64,
    /// Disable to skip coordinate-system tracking entirely (cheaper runs).
    pub frames: bool,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig {
            sigma: 6.0,
            s: 4.0,
            beta: 0.5,
            cadence: 0.25,
            every_steps: None,
            energy_frame: EnergyFrame::Mapped,
            f0: F0Choice::MeanVorticity,
            interp: InterpKind::Lagrange6,
            t_min_frames: 1.0,
            frames: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyConfig {
    /// Transition when sup_t ||omega||_{H^sigma'} exceeds this multiple of
    /// the initial norm.
    pub growth_factor: f64,
    /// Transition when the nonzero-mode enstrophy at t_end exceeds this
    /// fraction of its initial value.
    pub tail_fraction: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            growth_factor: 10.0,
            tail_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointFormat {
    None,
    /// Plain text spectral dump with a self-describing header.
    SpectralText,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub checkpoint: CheckpointFormat,
    /// Checkpoint cadence in simulation time (0 disables mid-run dumps).
    pub checkpoint_every: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            checkpoint: CheckpointFormat::None,
            checkpoint_every: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundConfig {
    pub profile: BackgroundProfile,
    /// Rescale the profile to the smallness hypotheses before the run.
    pub scale_to_theorem: bool,
    /// eps used for that rescaling (defaults to the perturbation eps).
    pub theorem_eps: Option<f64>,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        BackgroundConfig {
            profile: BackgroundProfile::Couette,
            scale_to_theorem: true,
            theorem_eps: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub grid: GridConfig,
    pub nu: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub cfl: f64,
    pub integrator: Integrator,
    pub remap: bool,
    /// Advective nonlinearity on/off; the background coupling terms stay.
    pub nonlinear: bool,
    pub seed: u64,
    pub eps: f64,
    pub amplitude: AmplitudeMode,
    pub shape: PerturbationShape,
    pub background: BackgroundConfig,
    pub diag: DiagConfig,
    pub classify: ClassifyConfig,
    pub output: OutputConfig,
    /// Stop as soon as the growth classifier fires (saves sweep time).
    pub early_exit: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid: GridConfig::default(),
            nu: 1e-3,
            t_end: 20.0,
            dt_max: 0.05,
            cfl: 0.4,
            integrator: Integrator::IfRk4,
            remap: true,
            nonlinear: true,
            seed: 7,
            eps: 0.1,
            amplitude: AmplitudeMode::TheoremUnits,
            shape: PerturbationShape::RandomBand {
                k_max: 4,
                eta_max: 2.0,
            },
            background: BackgroundConfig::default(),
            diag: DiagConfig::default(),
            classify: ClassifyConfig::default(),
            output: OutputConfig::default(),
            early_exit: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidConfig(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.t_end > 0.0) || !(self.dt_max > 0.0) || !(self.cfl > 0.0) {
            return Err(Error::InvalidConfig(
                "t_end, dt_max, cfl must all be positive".into(),
            ));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be >= 0, got {}", self.eps)));
        }
        if self.diag.cadence <= 0.0 && self.diag.every_steps.is_none() {
            return Err(Error::InvalidConfig(
                "diagnostic cadence must be positive".into(),
            ));
        }
        if !(self.diag.sigma > self.diag.s) {
            return Err(Error::InvalidConfig(format!(
                "need sigma > s, got sigma={} s={}",
                self.diag.sigma, self.diag.s
            )));
        }
        // weight machinery needs nu > 0; allow nu = 0 runs with weight-based
        // diagnostics disabled (inviscid transient measurements)
        if self.nu > 0.0 {
            self.weight_params().validate()?;
        }
        crate::spectral::Grid::torus(self.grid.nx, self.grid.ny, self.grid.l)?;
        Ok(())
    }

    pub fn weight_params(&self) -> WeightParams {
        WeightParams {
            nu: self.nu,
            beta: self.diag.beta,
            sigma: self.diag.sigma,
            s: self.diag.s,
        }
    }

    /// Initial amplitude in H^sigma units implied by eps and the mode.
    pub fn target_norm(&self) -> f64 {
        match self.amplitude {
            AmplitudeMode::TheoremUnits => self.eps * self.nu.cbrt(),
            AmplitudeMode::Raw => self.eps,
        }
    }

    /// eps in theorem units regardless of the amplitude mode (used by the
    /// decay envelopes). For raw mode this is ||omega_0||_{H^sigma}/nu^{1/3}.
    pub fn eps_theorem(&self) -> f64 {
        match self.amplitude {
            AmplitudeMode::TheoremUnits => self.eps,
            AmplitudeMode::Raw => {
                if self.nu > 0.0 {
                    self.eps / self.nu.cbrt()
                } else {
                    self.eps
                }
            }
        }
    }
}
