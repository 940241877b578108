//! Time stepping for the semi-discrete system.
//!
//! Two one-step schemes are available: Heun's method on the full right-hand
//! side, and the ARS(2,2,2) IMEX pair where only the constant-coefficient
//! diffusions δ∂ₓ²m and D∂ₓ²Γ are implicit. Positivity is enforced by rejecting
//! the step and halving dt, never by clipping, so every accepted state conserves
//! both masses to rounding.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{deviation_norms, dissipation, energy, fluid_mass, surfactant_mass, DeviationNorms, Dissipation};
use crate::discretize::{neumann_laplacian, rhs, rhs_explicit_part, Derivatives};
use crate::error::{Error, Field, Result};
use crate::model::{entropy_build, Entropy, Params, State};
use crate::tridiag::solve_neumann_implicit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[serde(rename = "explicit_rk2")]
    ExplicitRk2,
    #[default]
    Imex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Fraction of the explicit diffusive limit dx²/κ used per step.
    pub safety: f64,
    pub t_end: f64,
    /// The run stops once ‖rhs‖∞ drops below this (when `stop_on_steady`).
    pub steady_tol: f64,
    pub positivity_floor: f64,
    /// Trace sampling cadence in time units.
    pub sample_interval: f64,
    pub stop_on_steady: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            scheme: Scheme::Imex,
            dt_init: 1e-4,
            dt_min: 1e-12,
            dt_max: 1e-2,
            safety: 0.4,
            t_end: 1.0,
            steady_tol: 1e-10,
            positivity_floor: 1e-10,
            sample_interval: 0.01,
            stop_on_steady: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max && self.dt_max.is_finite()) {
            return bad(
                "dt_init",
                format!("need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}", self.dt_min, self.dt_init, self.dt_max),
            );
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety", format!("safety factor must lie in (0, 1), got {}", self.safety));
        }
        if !(self.steady_tol > 0.0) {
            return bad("steady_tol", format!("must be > 0, got {}", self.steady_tol));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end", format!("must be finite and >= 0, got {}", self.t_end));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return bad("sample_interval", format!("must be > 0, got {}", self.sample_interval));
        }
        if !(self.positivity_floor >= 0.0) {
            return bad("positivity_floor", format!("must be >= 0, got {}", self.positivity_floor));
        }
        Ok(())
    }
}

/// Why a step was refused. Not an error: the caller retries with a smaller dt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rejection {
    Positivity { field: Field, cell: usize, value: f64 },
    NonFinite { field: Field, cell: usize },
    /// Γ left the evaluation domain of the surface-tension law.
    OutOfDomain { cell: usize, value: f64 },
}

fn screen(state: &State, params: &Params, floor: f64) -> Result<(), Rejection> {
    for f in Field::ALL {
        if let Some(cell) = state.field(f).iter().position(|v| !v.is_finite()) {
            return Err(Rejection::NonFinite { field: f, cell });
        }
    }
    if let Some((field, cell, value)) = state.first_violation(floor) {
        return Err(Rejection::Positivity { field, cell, value });
    }
    let limit = params.sigma_law.domain_limit();
    if let Some(cell) = state.gamma.iter().position(|&g| g >= limit) {
        return Err(Rejection::OutOfDomain { cell, value: state.gamma[cell] });
    }
    Ok(())
}

fn as_rejection(err: Error) -> Rejection {
    match err {
        Error::Positivity { field, cell, value } => Rejection::Positivity { field, cell, value },
        Error::SurfaceTensionDomain { gamma, .. } => Rejection::OutOfDomain { cell: 0, value: gamma },
        _ => Rejection::NonFinite { field: Field::H, cell: 0 },
    }
}

fn axpy(state: &State, scale: f64, d: &Derivatives) -> State {
    let add = |u: &[f64], du: &[f64]| u.iter().zip(du).map(|(a, b)| a + scale * b).collect();
    State { h: add(&state.h, &d.dh), m: add(&state.m, &d.dm), gamma: add(&state.gamma, &d.dgamma), t: state.t }
}

fn heun(state: &State, params: &Params, cfg: &IntegratorConfig, dt: f64) -> Result<State, Rejection> {
    let k1 = rhs(state, params).map_err(as_rejection)?;
    let stage = axpy(state, dt, &k1);
    screen(&stage, params, cfg.positivity_floor)?;
    let k2 = rhs(&stage, params).map_err(as_rejection)?;
    let n = state.n_cells();
    let avg = Derivatives {
        dh: (0..n).map(|i| 0.5 * (k1.dh[i] + k2.dh[i])).collect(),
        dm: (0..n).map(|i| 0.5 * (k1.dm[i] + k2.dm[i])).collect(),
        dgamma: (0..n).map(|i| 0.5 * (k1.dgamma[i] + k2.dgamma[i])).collect(),
    };
    Ok(axpy(state, dt, &avg))
}

// ARS(2,2,2), solved for increments so that equilibria are exact fixed points.
fn ars222(state: &State, params: &Params, cfg: &IntegratorConfig, dt: f64) -> Result<State, Rejection> {
    let gamma = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let delta_hat = 1.0 - 1.0 / (2.0 * gamma);
    let n = state.n_cells();
    let dx = params.length / n as f64;
    let gdt = gamma * dt;

    let lin = |s: &State| -> (Vec<f64>, Vec<f64>) {
        let lm = neumann_laplacian(&s.m, dx).into_iter().map(|v| params.delta * v).collect();
        let lg = neumann_laplacian(&s.gamma, dx).into_iter().map(|v| params.d * v).collect();
        (lm, lg)
    };

    let e0 = rhs_explicit_part(state, params).map_err(as_rejection)?;
    let (lm0, lg0) = lin(state);
    let b1_m: Vec<f64> = (0..n).map(|i| gdt * (e0.dm[i] + lm0[i])).collect();
    let b1_g: Vec<f64> = (0..n).map(|i| gdt * (e0.dgamma[i] + lg0[i])).collect();
    let inc1 = Derivatives {
        dh: e0.dh.iter().map(|v| gdt * v).collect(),
        dm: solve_neumann_implicit(gdt * params.delta, dx, &b1_m),
        dgamma: solve_neumann_implicit(gdt * params.d, dx, &b1_g),
    };
    let y1 = axpy(state, 1.0, &inc1);
    screen(&y1, params, cfg.positivity_floor)?;

    let e1 = rhs_explicit_part(&y1, params).map_err(as_rejection)?;
    let (lm1, lg1) = lin(&y1);
    let ex = |a: f64, b: f64| dt * (delta_hat * a + (1.0 - delta_hat) * b);
    let b2_m: Vec<f64> =
        (0..n).map(|i| dt * (1.0 - gamma) * lm1[i] + gdt * lm0[i] + ex(e0.dm[i], e1.dm[i])).collect();
    let b2_g: Vec<f64> =
        (0..n).map(|i| dt * (1.0 - gamma) * lg1[i] + gdt * lg0[i] + ex(e0.dgamma[i], e1.dgamma[i])).collect();
    let inc2 = Derivatives {
        dh: (0..n).map(|i| ex(e0.dh[i], e1.dh[i])).collect(),
        dm: solve_neumann_implicit(gdt * params.delta, dx, &b2_m),
        dgamma: solve_neumann_implicit(gdt * params.d, dx, &b2_g),
    };
    Ok(axpy(state, 1.0, &inc2))
}

/// Advances `state` by `dt`. The returned state keeps `state.t`; the caller owns the clock.
pub fn step(state: &State, params: &Params, cfg: &IntegratorConfig, dt: f64) -> Result<State, Rejection> {
    let next = match cfg.scheme {
        Scheme::ExplicitRk2 => heun(state, params, cfg, dt)?,
        Scheme::Imex => ars222(state, params, cfg, dt)?,
    };
    screen(&next, params, cfg.positivity_floor)?;
    Ok(next)
}

/// safety·dx²/κ_max over the explicitly treated diagonal diffusivities of a(u).
pub fn stable_dt_estimate(state: &State, params: &Params, cfg: &IntegratorConfig) -> f64 {
    let n = state.n_cells();
    let dx = params.length / n as f64;
    let implicit = cfg.scheme == Scheme::Imex;
    let mut kappa: f64 = if implicit { 0.0 } else { params.delta };
    for i in 0..n {
        let (h, g) = (state.h[i], state.gamma[i]);
        let marangoni = -h * g * params.sigma_law.slope(g);
        let surface = if implicit { marangoni } else { params.d + marangoni };
        kappa = kappa.max(params.g * h * h * h / 3.0).max(surface);
    }
    if kappa > 0.0 {
        cfg.safety * dx * dx / kappa
    } else {
        f64::INFINITY
    }
}

/// Sampled scalar history of a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub times: Vec<f64>,
    pub fluid_mass: Vec<f64>,
    pub surfactant_mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation: Vec<Dissipation>,
    pub norms: Vec<DeviationNorms>,
    pub rhs_inf: Vec<f64>,
    /// Constant state the norms are measured against: the equilibrium with the initial masses.
    pub reference: [f64; 3],
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn l2_norms(&self) -> Vec<f64> {
        self.norms.iter().map(DeviationNorms::l2).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum HaltReason {
    Completed,
    Steady,
    PositivityLoss { step: usize, t: f64, field: Field, cell: usize, value: f64 },
    AdmissibilityLoss { step: usize, t: f64, cell: usize, value: f64 },
    NonFinite { step: usize, t: f64, field: Field, cell: usize },
}

impl HaltReason {
    pub fn label(&self) -> &'static str {
        match self {
            HaltReason::Completed => "completed",
            HaltReason::Steady => "steady",
            HaltReason::PositivityLoss { .. } => "positivity_loss",
            HaltReason::AdmissibilityLoss { .. } => "admissibility_loss",
            HaltReason::NonFinite { .. } => "non_finite",
        }
    }

    pub fn is_clean(&self) -> bool {
        matches!(self, HaltReason::Completed | HaltReason::Steady)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub state: State,
    pub halt: HaltReason,
}

/// Equilibrium with the same fluid and surfactant masses as `state`.
pub fn mass_matched_equilibrium(state: &State, params: &Params) -> [f64; 3] {
    let n = state.n_cells() as f64;
    let h = state.h.iter().sum::<f64>() / n;
    let eta = state.m.iter().zip(&state.gamma).map(|(a, b)| a + b).sum::<f64>() / n;
    [h, h / (params.beta + h) * eta, params.beta / (params.beta + h) * eta]
}

struct Recorder<'a> {
    params: &'a Params,
    entropy: Entropy,
    trace: RunTrace,
}

impl Recorder<'_> {
    fn record(&mut self, state: &State) -> Result<f64> {
        let p = self.params;
        let rhs_inf = rhs(state, p)?.norm_inf();
        let tr = &mut self.trace;
        tr.times.push(state.t);
        tr.fluid_mass.push(fluid_mass(state, p));
        tr.surfactant_mass.push(surfactant_mass(state, p));
        tr.energy.push(energy(state, p, &self.entropy)?);
        tr.dissipation.push(dissipation(state, p, &self.entropy)?);
        tr.norms.push(deviation_norms(state, p, tr.reference));
        tr.rhs_inf.push(rhs_inf);
        Ok(rhs_inf)
    }
}

pub fn run(state0: &State, params: &Params, cfg: &IntegratorConfig) -> Result<RunOutcome> {
    run_observed(state0, params, cfg, |_, _| {})
}

/// Runs to `cfg.t_end`, a steady state, or a halt. `observer` sees every sampled state.
pub fn run_observed<F>(state0: &State, params: &Params, cfg: &IntegratorConfig, mut observer: F) -> Result<RunOutcome>
where
    F: FnMut(&State, usize),
{
    params.validate()?;
    cfg.validate()?;
    state0.validate()?;
    let limit = params.sigma_law.domain_limit();
    if let Some(cell) = state0.gamma.iter().position(|&g| g >= limit) {
        return Err(Error::SurfaceTensionDomain { gamma: state0.gamma[cell], limit });
    }
    let entropy = entropy_build(&params.sigma_law)?;
    let mut rec = Recorder {
        params,
        entropy,
        trace: RunTrace { reference: mass_matched_equilibrium(state0, params), ..RunTrace::default() },
    };

    let t0 = state0.t;
    let mut state = state0.clone();
    let mut samples = 0usize;
    let residual0 = rec.record(&state)?;
    observer(&state, samples);
    if cfg.stop_on_steady && residual0 < cfg.steady_tol {
        return Ok(RunOutcome { trace: rec.trace, state, halt: HaltReason::Steady });
    }

    let t_end = t0 + cfg.t_end;
    let mut dt = cfg.dt_init;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let halt = loop {
        if state.t >= t_end {
            break HaltReason::Completed;
        }
        let target = (t0 + (samples + 1) as f64 * cfg.sample_interval).min(t_end);
        let remaining = target - state.t;
        let mut trial = dt.min(cfg.dt_max).min(stable_dt_estimate(&state, params, cfg));
        let mut landing = trial >= remaining;
        if landing {
            trial = remaining;
        }

        match step(&state, params, cfg, trial) {
            Ok(mut next) => {
                accepted += 1;
                next.t = if landing { target } else { state.t + trial };
                state = next;
                if !landing {
                    dt = 2.0 * trial;
                }
                if landing {
                    samples += 1;
                    let residual = rec.record(&state)?;
                    observer(&state, samples);
                    if cfg.stop_on_steady && residual < cfg.steady_tol {
                        break HaltReason::Steady;
                    }
                }
            }
            Err(rejection) => {
                rejected += 1;
                dt = 0.5 * trial;
                landing = false;
                if dt < cfg.dt_min {
                    let (step_idx, t) = (accepted, state.t);
                    break match rejection {
                        Rejection::Positivity { field, cell, value } => {
                            HaltReason::PositivityLoss { step: step_idx, t, field, cell, value }
                        }
                        Rejection::NonFinite { field, cell } => HaltReason::NonFinite { step: step_idx, t, field, cell },
                        Rejection::OutOfDomain { cell, value } => {
                            HaltReason::AdmissibilityLoss { step: step_idx, t, cell, value }
                        }
                    };
                }
                let _ = landing;
            }
        }
    };

    if !halt.is_clean() && rec.trace.times.last().is_some_and(|&t| state.t > t) {
        samples += 1;
        rec.record(&state)?;
        observer(&state, samples);
    }
    rec.trace.accepted_steps = accepted;
    rec.trace.rejected_steps = rejected;
    Ok(RunOutcome { trace: rec.trace, state, halt })
}
