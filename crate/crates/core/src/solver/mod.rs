//! Shearing-frame pseudospectral stepper and the run driver around it.

pub mod config;
pub mod ops;
pub mod run;
pub mod step;

pub use config::{
    AmplitudeMode, BackgroundConfig, CheckpointFormat, ClassifyConfig, DiagConfig, EnergyFrame,
    F0Choice, GridConfig, Integrator, InterpKind, OutputConfig, PerturbationShape, SolverConfig,
};
pub use run::{run, run_with_dir, SolverState};
pub use step::{step_if_rk3, step_if_rk4, StageRhs};
