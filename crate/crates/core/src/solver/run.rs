//! Run driver: initial data, the time loop with exact viscous factors and
//! remapping, per-step mean-flow bookkeeping, diagnostics at cadence, and
//! end-of-run classification.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;

use crate::background::BackgroundShear;
use crate::diagnostics::{self, BootstrapAccumulator, DiagnosticFrame, EvComponents};
use crate::error::Result;
use crate::frames::{map_to_frame, FrameFields, FrameInput, PsiIntegrator};
use crate::records::{
    checkpoint_text, version_stamp, CheckpointMeta, Classification, RunRecord,
};
use crate::spectral::{Fft1, Fft2, Grid, PhysicalField, SpectralField, Spectrum1d};
use crate::weights::WeightTable;

use super::config::{CheckpointFormat, EnergyFrame, Integrator, SolverConfig};
use super::ops::{self, RhsInputs};
use super::step::{step_if_rk3, step_if_rk4, StageRhs};

/// Mutable integration state. One state is owned by exactly one run.
pub struct SolverState {
    pub t: f64,
    /// Frame shear s with ds/dt = 1, reduced modulo grid shifts by remaps.
    pub shear: f64,
    /// Accumulated remap offset t - s; stored y-frequencies sit at
    /// eta + k * frame_lag in the straightened frame.
    pub frame_lag: f64,
    pub omega: SpectralField,
    pub remaps: u64,
    pub steps: u64,
}

impl SolverState {
    /// Initial perturbation: the configured shape scaled to the target
    /// H^sigma amplitude, Hermitian, mean-free, dealiased.
    pub fn init(config: &SolverConfig) -> Result<SolverState> {
        config.validate()?;
        let grid = Grid::torus(config.grid.nx, config.grid.ny, config.grid.l)?;
        let mut omega = ops::build_shape(grid, &config.shape, config.seed)?;
        omega.enforce_hermitian();
        omega.c[0] = Complex64::default();
        omega.dealias();
        let n0 = omega.sobolev_norm(config.diag.sigma);
        let target = config.target_norm();
        if n0 > 0.0 {
            omega.scale(if target > 0.0 { target / n0 } else { 0.0 });
        }
        Ok(SolverState {
            t: 0.0,
            shear: 0.0,
            frame_lag: 0.0,
            omega,
            remaps: 0,
            steps: 0,
        })
    }
}

/// Explicit right-hand side shared by all RK stages: advection nonlinearity
/// plus background coupling, with the background profiles heat-evolved to
/// each stage time.
struct Rhs {
    bg: BackgroundShear,
    nu: f64,
    nonlinear: bool,
    fft2: Fft2,
    fft1: Fft1,
}

impl StageRhs for Rhs {
    fn eval(
        &mut self,
        omega: &SpectralField,
        shear: f64,
        t: f64,
    ) -> Result<Option<SpectralField>> {
        if self.bg.is_couette() {
            let inputs = RhsInputs {
                utilde: None,
                usecond: None,
                nonlinear: self.nonlinear,
            };
            return ops::rhs_nonlinear(omega, shear, &inputs, &mut self.fft2);
        }
        let ut = self.bg.u_tilde(self.nu, t).to_phys(&mut self.fft1);
        let us = self.bg.u_second(self.nu, t).to_phys(&mut self.fft1);
        let inputs = RhsInputs {
            utilde: Some(&ut),
            usecond: Some(&us),
            nonlinear: self.nonlinear,
        };
        ops::rhs_nonlinear(omega, shear, &inputs, &mut self.fft2)
    }
}

/// x-averaged horizontal velocity from the vorticity zero mode:
/// <v^x>^(eta) = i omega^(0, eta) / eta.
fn mean_vx_of(omega: &SpectralField) -> Spectrum1d {
    let g = omega.grid;
    let mut s = Spectrum1d::zeros(g.ny, g.ly);
    for iy in 0..g.ny {
        let eta = g.eta(iy);
        if eta != 0.0 {
            let w = omega.at(0, iy);
            s.c[iy] = Complex64::new(-w.im / eta, w.re / eta);
        }
    }
    s
}

struct DiagCtx {
    fft1: Fft1,
    history: Vec<(f64, Spectrum1d)>,
    acc: BootstrapAccumulator,
    eps_t: f64,
}

/// Sobolev norm weighted at the frame labels eta + k*lag rather than the
/// stored frequencies.  The stored eta drifts with the accumulated shear, so
/// weighting it directly would read pure Orr tilting of a decaying field as
/// norm growth; the label eta + k*lag is invariant under that transport.
fn hsigma_in_frame(omega: &SpectralField, lag: f64, sigma: f64) -> f64 {
    let g = omega.grid;
    let mut acc = 0.0;
    for ix in 0..g.nx {
        let k = g.k(ix);
        for iy in 0..g.ny {
            let e = g.eta(iy) + k * lag;
            acc += (1.0 + k * k + e * e).powf(sigma) * omega.c[g.idx(ix, iy)].norm_sqr();
        }
    }
    acc.sqrt()
}

fn collect_diagnostic(
    config: &SolverConfig,
    state: &SolverState,
    bg: &BackgroundShear,
    psi: &PsiIntegrator,
    ctx: &mut DiagCtx,
) -> Result<DiagnosticFrame> {
    let t = state.t;
    let nu = config.nu;
    let d = &config.diag;
    let wp = config.weight_params();
    let grid = state.omega.grid;

    let mode_norms =
        diagnostics::decay_observables(&state.omega, state.shear, d.s, ctx.eps_t, nu, t)?;
    let enstrophy = state.omega.l2().powi(2);
    let enstrophy_nonzero = state.omega.nonzero_modes().l2().powi(2);
    let omega_hsigma = hsigma_in_frame(&state.omega, state.frame_lag, d.sigma);

    // Frame profiles, when tracking is on, t is past t_min, and the
    // coordinate map is comfortably monotone.
    let mut frames_active = false;
    let mut monotone_margin = 0.0;
    let mut phi_psi_gap = 0.0;
    let mut ev = EvComponents::default();
    let mut ff_opt: Option<FrameFields> = None;
    if d.frames && t >= d.t_min_frames {
        let u_tilde = bg.u_tilde(nu, t);
        let mut theta = u_tilde.clone();
        let psi_now = psi.psi(d.t_min_frames)?;
        theta.add_scaled(1.0, &psi_now);
        monotone_margin = theta.deriv().max_abs_phys(&mut ctx.fft1);
        if monotone_margin < 0.995 {
            let mean_vx = mean_vx_of(&state.omega);
            let mean_vorticity = state.omega.zero_mode();
            let input = FrameInput {
                t,
                nu,
                q: psi.q(),
                mean_vx: &mean_vx,
                mean_vorticity: &mean_vorticity,
                u_tilde: &u_tilde,
                history: &ctx.history,
                f0: d.f0,
                interp: d.interp,
                t_min: d.t_min_frames,
            };
            let ff = FrameFields::build(&input, &mut ctx.fft1)?;
            phi_psi_gap = ff.phi_psi_gap;
            ev = EvComponents::from_frames(&ff, d.sigma, nu);
            frames_active = true;
            ff_opt = Some(ff);
        }
    }

    // Weighted vorticity norms: the straightened-frame coefficients are
    // reached either by remapping stored frequencies (shear route) or by
    // composing through the coordinate map (mapped route).
    let a_sigma_omega_sq;
    let mut ck_w = 0.0;
    let mut a_e_norm_sq = 0.0;
    let mut frame_skew = 0.0;
    let mut sample = diagnostics::BootstrapSample {
        t,
        ..Default::default()
    };
    if nu > 0.0 {
        let shear_tbl = WeightTable::build(grid, t, state.frame_lag, &wp)?;
        let a_shear = diagnostics::a_sigma_norm_sq(&state.omega, &shear_tbl)?;
        let use_mapped = d.energy_frame == EnergyFrame::Mapped && frames_active;
        if use_mapped {
            let ff = ff_opt.as_ref().unwrap();
            let mapped = map_to_frame(
                &state.omega,
                &ff.theta,
                &ff.ystars,
                t,
                state.frame_lag,
                d.interp,
                &mut ctx.fft1,
            )?;
            let mapped_tbl = WeightTable::build(grid, t, 0.0, &wp)?;
            let a_map = diagnostics::a_sigma_norm_sq(&mapped, &mapped_tbl)?;
            frame_skew = (a_map - a_shear).abs() / a_map.max(a_shear).max(f64::MIN_POSITIVE);
            a_sigma_omega_sq = a_map;
            ck_w = diagnostics::ck_term(&mapped, &mapped_tbl)?;
            a_e_norm_sq = diagnostics::a_e_norm_sq(&mapped, &mapped_tbl)?;
            sample = diagnostics::bootstrap_sample(
                t,
                &mapped,
                &mapped_tbl,
                ff_opt.as_ref(),
                d.sigma,
                d.s,
                &wp,
            )?;
        } else {
            a_sigma_omega_sq = a_shear;
            ck_w = diagnostics::ck_term(&state.omega, &shear_tbl)?;
            a_e_norm_sq = diagnostics::a_e_norm_sq(&state.omega, &shear_tbl)?;
            sample = diagnostics::bootstrap_sample(
                t,
                &state.omega,
                &shear_tbl,
                ff_opt.as_ref(),
                d.sigma,
                d.s,
                &wp,
            )?;
        }
    } else {
        a_sigma_omega_sq = omega_hsigma * omega_hsigma;
    }

    let ratios = ctx.acc.push(&sample);
    let flagged = ratios.iter().any(|r| *r > 1.0);
    let e_sigma = 0.5 * a_sigma_omega_sq + ev.total();

    Ok(DiagnosticFrame {
        t,
        e_sigma,
        a_sigma_omega_sq,
        ev,
        ck_w,
        a_e_norm_sq,
        mode_norms,
        enstrophy,
        enstrophy_nonzero,
        omega_hsigma,
        frame_skew,
        phi_psi_gap,
        monotone_margin,
        frames_active,
        ratios,
        flagged,
    })
}

pub fn run(config: &SolverConfig) -> Result<RunRecord> {
    run_with_dir(config, None)
}

/// Full integration. When `dir` is given and checkpointing is configured,
/// mid-run spectral dumps land there as they are produced.
pub fn run_with_dir(config: &SolverConfig, dir: Option<&Path>) -> Result<RunRecord> {
    let started = Instant::now();
    let mut state = SolverState::init(config)?;
    let grid = state.omega.grid;
    let nu = config.nu;

    let mut fft1 = Fft1::new(grid.ny);
    let bg = {
        let mut b =
            BackgroundShear::from_profile(&config.background.profile, grid.ny, grid.ly, &mut fft1)?;
        if config.background.scale_to_theorem && !b.is_couette() {
            let eps_t = config.background.theorem_eps.unwrap_or(config.eps_theorem());
            if nu > 0.0 && eps_t > 0.0 {
                b.scale_to_theorem(eps_t, nu, config.diag.sigma, &mut fft1)?;
            }
        }
        b
    };

    let mut rhs = Rhs {
        bg: bg.clone(),
        nu,
        nonlinear: config.nonlinear,
        fft2: Fft2::new(grid),
        fft1: Fft1::new(grid.ny),
    };
    let mut fft2_diag = Fft2::new(grid);

    let mut psi = PsiIntegrator::new(nu, 0.0, mean_vx_of(&state.omega));
    let mut ctx = DiagCtx {
        fft1,
        history: Vec::new(),
        acc: BootstrapAccumulator::new(config.eps_theorem(), nu, config.diag.frames),
        eps_t: config.eps_theorem(),
    };
    if config.diag.frames {
        ctx.history.push((0.0, mean_vx_of(&state.omega)));
    }

    let initial_hsigma = hsigma_in_frame(&state.omega, state.frame_lag, config.diag.sigma);
    let initial_enstrophy_nonzero = state.omega.nonzero_modes().l2().powi(2);
    let mut peak_hsigma = initial_hsigma;

    let mut frames = Vec::new();
    frames.push(collect_diagnostic(config, &state, &bg, &psi, &mut ctx)?);

    let cadence = config.diag.cadence;
    let mut next_diag = cadence;
    let mut next_ckpt = if config.output.checkpoint_every > 0.0 {
        config.output.checkpoint_every
    } else {
        f64::INFINITY
    };
    let snap = 1e-9;
    let mut failure: Option<String> = None;
    let mut growth_fired = false;

    while state.t < config.t_end - snap {
        // Advective step bound; the stiff part is exact so pure linear
        // Couette is unconstrained.
        let mut dt = config.dt_max;
        if config.nonlinear || !bg.is_couette() {
            let (vx_p, vy_p) = if config.nonlinear {
                let phi = ops::biot_savart(&state.omega, state.shear);
                let (vx_h, vy_h) = ops::velocity(&phi, state.shear);
                (fft2_diag.inverse(&vx_h)?, fft2_diag.inverse(&vy_h)?)
            } else {
                (PhysicalField::zeros(grid), PhysicalField::zeros(grid))
            };
            let ut_phys = if bg.is_couette() {
                None
            } else {
                Some(bg.u_tilde(nu, state.t).to_phys(&mut ctx.fft1))
            };
            dt = dt.min(ops::cfl_dt(
                config.cfl,
                grid,
                &vx_p,
                &vy_p,
                ut_phys.as_deref(),
                state.shear,
            ));
        }
        dt = dt.min(config.t_end - state.t);
        if config.diag.every_steps.is_none() {
            dt = dt.min(next_diag - state.t);
        }
        dt = dt.min(next_ckpt - state.t);
        if !(dt > 0.0) || !dt.is_finite() {
            failure = Some(format!("time step degenerated to {dt} at t = {}", state.t));
            break;
        }

        let step_result = match config.integrator {
            Integrator::IfRk4 => {
                step_if_rk4(&mut state.omega, state.shear, state.t, dt, nu, &mut rhs)
            }
            Integrator::IfRk3 => {
                step_if_rk3(&mut state.omega, state.shear, state.t, dt, nu, &mut rhs)
            }
        };
        if let Err(e) = step_result {
            failure = Some(format!("step failed at t = {}: {e}", state.t));
            break;
        }
        state.t += dt;
        state.shear += dt;
        state.steps += 1;
        for target in [next_diag, next_ckpt, config.t_end] {
            if (state.t - target).abs() <= snap {
                state.t = target;
            }
        }

        if config.remap {
            state.remaps += ops::remap_state(
                &mut state.omega,
                &mut state.shear,
                &mut state.frame_lag,
            );
        }

        if !state.omega.is_finite() {
            failure = Some(format!("solution lost finiteness at t = {}", state.t));
            break;
        }

        let forcing = mean_vx_of(&state.omega);
        psi.advance(dt, &forcing);
        psi.sync_time(state.t);
        if config.diag.frames {
            ctx.history.push((state.t, forcing));
        }

        let due = match config.diag.every_steps {
            Some(n) => n > 0 && state.steps % n as u64 == 0,
            None => state.t >= next_diag - snap,
        };
        let last = state.t >= config.t_end - snap;
        if due || last {
            if config.diag.every_steps.is_none() {
                while next_diag <= state.t + snap {
                    next_diag += cadence;
                }
            }
            match collect_diagnostic(config, &state, &bg, &psi, &mut ctx) {
                Ok(fr) => {
                    peak_hsigma = peak_hsigma.max(fr.omega_hsigma);
                    frames.push(fr);
                }
                Err(e) => {
                    failure = Some(format!("diagnostics failed at t = {}: {e}", state.t));
                    break;
                }
            }
            if peak_hsigma > config.classify.growth_factor * initial_hsigma
                && initial_hsigma > 0.0
            {
                growth_fired = true;
                if config.early_exit {
                    break;
                }
            }
        }

        if state.t >= next_ckpt - snap {
            next_ckpt += config.output.checkpoint_every;
            if let Some(dir) = dir {
                if config.output.checkpoint == CheckpointFormat::SpectralText {
                    let meta = CheckpointMeta {
                        grid,
                        t: state.t,
                        nu,
                        seed: config.seed,
                        shear: state.shear,
                        frame_lag: state.frame_lag,
                    };
                    let name = format!("ckpt_t{:012.6}.spec", state.t);
                    std::fs::write(dir.join(name), checkpoint_text(&state.omega, &meta))?;
                }
            }
        }
    }

    let final_enstrophy_nonzero = state.omega.nonzero_modes().l2().powi(2);
    let classification = if failure.is_some() {
        Classification::Failed
    } else if growth_fired
        || (initial_enstrophy_nonzero > 0.0
            && final_enstrophy_nonzero
                > config.classify.tail_fraction * initial_enstrophy_nonzero)
    {
        Classification::Transitioned
    } else {
        Classification::Stable
    };

    let multipliers = if failure.is_none() {
        Some(diagnostics::multiplier_inequality_checks(
            &state.omega,
            state.t,
            &config.weight_params(),
        )?)
    } else {
        None
    };

    let record = RunRecord {
        config: config.clone(),
        classification,
        failure,
        frames,
        bootstrap: ctx.acc.report(),
        multipliers,
        initial_hsigma,
        peak_hsigma,
        initial_enstrophy_nonzero,
        final_enstrophy_nonzero,
        steps: state.steps,
        remaps: state.remaps,
        final_t: state.t,
        final_shear: state.shear,
        final_lag: state.frame_lag,
        wall_secs: started.elapsed().as_secs_f64(),
        version: version_stamp(),
        final_omega: Some(state.omega),
    };
    Ok(record)
}
