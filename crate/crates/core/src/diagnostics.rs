//! Conserved masses, the entropy-based energy and its five dissipation terms,
//! steady-state classification and exponential decay fitting.
//!
//! Dissipation integrals are taken over interior faces with the same face
//! means and gradients the flux discretization uses, so the discrete energy
//! balance closes up to O(dx²) rather than exactly.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::discretize::{face_values, rhs};
use crate::error::{Error, Result};
use crate::integrate::RunTrace;
use crate::model::{Entropy, Params, State};

fn dx_of(state: &State, params: &Params) -> f64 {
    params.length / state.n_cells() as f64
}

/// ∫h dx.
pub fn fluid_mass(state: &State, params: &Params) -> f64 {
    state.h.iter().sum::<f64>() * dx_of(state, params)
}

/// ∫(Γ + m) dx, the total surfactant (m = hC₀/β).
pub fn surfactant_mass(state: &State, params: &Params) -> f64 {
    state.gamma.iter().zip(&state.m).map(|(g, m)| g + m).sum::<f64>() * dx_of(state, params)
}

/// Midpoint rule for ∫(φ(Γ) + (1/β)hφ(βm/h) + (G/2)h²) dx.
pub fn energy(state: &State, params: &Params, entropy: &Entropy) -> Result<f64> {
    state.validate()?;
    let beta = params.beta;
    let sum: f64 = (0..state.n_cells())
        .map(|i| {
            let (h, m, g) = (state.h[i], state.m[i], state.gamma[i]);
            entropy.phi(g) + h / beta * entropy.phi(beta * m / h) + 0.5 * params.g * h * h
        })
        .sum();
    Ok(sum * dx_of(state, params))
}

/// The five nonnegative dissipation integrals (leading minus signs dropped).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dissipation {
    /// D∫φ″(Γ)|∂ₓΓ|².
    pub surface_diffusion: f64,
    /// (δ/β)∫φ″(βm/h) h |∂ₓ(βm/h)|².
    pub bulk_diffusion: f64,
    /// (1/4)∫h|∂ₓσ(Γ)|².
    pub marangoni: f64,
    /// ∫(G/√3 h^{3/2}∂ₓh − √3/2 h^{1/2}∂ₓσ(Γ))².
    pub gravity_marangoni_square: f64,
    /// K∫(φ′(Γ) − φ′(βm/h))(Γ − βm/h).
    pub sorption: f64,
}

impl Dissipation {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.surface_diffusion,
            self.bulk_diffusion,
            self.marangoni,
            self.gravity_marangoni_square,
            self.sorption,
        ]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

/// Energy plus dissipation at one instant; `residual` is filled from a time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub dissipation: Dissipation,
    pub residual: Option<f64>,
}

pub fn dissipation(state: &State, params: &Params, entropy: &Entropy) -> Result<Dissipation> {
    state.validate()?;
    let fv = face_values(state, params)?;
    let n = state.n_cells();
    let dx = dx_of(state, params);
    let beta = params.beta;
    let conc: Vec<f64> = (0..n).map(|i| beta * state.m[i] / state.h[i]).collect();
    let sqrt3 = 3f64.sqrt();

    let mut d = Dissipation::default();
    for i in 1..n {
        let h = fv.h[i];
        let c_face = 0.5 * (conc[i - 1] + conc[i]);
        let dc = (conc[i] - conc[i - 1]) / dx;
        d.surface_diffusion += params.d * entropy.d2phi(fv.gamma[i]) * fv.dgamma[i] * fv.dgamma[i];
        d.bulk_diffusion += params.delta / beta * entropy.d2phi(c_face) * h * dc * dc;
        d.marangoni += 0.25 * h * fv.dsigma[i] * fv.dsigma[i];
        let sq = params.g / sqrt3 * h.powf(1.5) * fv.dh[i] - 0.5 * sqrt3 * h.sqrt() * fv.dsigma[i];
        d.gravity_marangoni_square += sq * sq;
    }
    for i in 0..n {
        let g = state.gamma[i];
        d.sorption += params.k * (entropy.dphi(g) - entropy.dphi(conc[i])) * (g - conc[i]);
    }
    d.surface_diffusion *= dx;
    d.bulk_diffusion *= dx;
    d.marangoni *= dx;
    d.gravity_marangoni_square *= dx;
    d.sorption *= dx;
    Ok(d)
}

pub fn energy_report(state: &State, params: &Params, entropy: &Entropy) -> Result<EnergyReport> {
    Ok(EnergyReport { energy: energy(state, params, entropy)?, dissipation: dissipation(state, params, entropy)?, residual: None })
}

// Derivative at `at` of the quadratic through three (t, e) points, written in
// differences so a constant series gives exactly zero.
fn quadratic_slope(t: [f64; 3], e: [f64; 3], at: f64) -> f64 {
    let w0 = ((at - t[1]) + (at - t[2])) / ((t[0] - t[1]) * (t[0] - t[2]));
    let w2 = ((at - t[0]) + (at - t[1])) / ((t[2] - t[0]) * (t[2] - t[1]));
    w0 * (e[0] - e[1]) + w2 * (e[2] - e[1])
}

/// d/dt energy + Σ dissipation at every sample, from sampled series.
///
/// Interior samples use the centred three-point derivative (exact central
/// difference on uniform spacing), the two ends one-sided three-point formulas.
pub fn energy_residual_series(times: &[f64], energy: &[f64], dissipation_total: &[f64]) -> Result<Vec<f64>> {
    let n = times.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    if energy.len() != n || dissipation_total.len() != n {
        return Err(Error::Shape { what: "energy series", got: energy.len().min(dissipation_total.len()), expected: n });
    }
    Ok((0..n)
        .map(|j| {
            let base = j.clamp(1, n - 2) - 1;
            let t = [times[base], times[base + 1], times[base + 2]];
            let e = [energy[base], energy[base + 1], energy[base + 2]];
            quadratic_slope(t, e, times[j]) + dissipation_total[j]
        })
        .collect())
}

/// Energy-equality residual along a recorded trajectory.
pub fn energy_residual(trace: &RunTrace) -> Result<Vec<f64>> {
    let totals: Vec<f64> = trace.dissipation.iter().map(Dissipation::total).collect();
    energy_residual_series(&trace.times, &trace.energy, &totals)
}

/// Outcome of a steady-state check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SteadyClass {
    NotSteady,
    SteadyConstant { h: f64, m: f64, gamma: f64 },
    /// rhs vanishes but the state is not a constant sorption equilibrium.
    SteadyNonconforming,
}

impl SteadyClass {
    pub fn label(&self) -> &'static str {
        match self {
            SteadyClass::NotSteady => "not_steady",
            SteadyClass::SteadyConstant { .. } => "steady_constant",
            SteadyClass::SteadyNonconforming => "steady_nonconforming",
        }
    }
}

// Shifted by the first entry so that constant vectors give their value exactly.
fn mean(v: &[f64]) -> f64 {
    let base = v[0];
    base + v.iter().map(|x| x - base).sum::<f64>() / v.len() as f64
}

fn max_deviation(v: &[f64], m: f64) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max((x - m).abs()))
}

pub fn classify_steady(state: &State, params: &Params, tol: f64) -> Result<SteadyClass> {
    state.validate()?;
    let (h, m, g) = (mean(&state.h), mean(&state.m), mean(&state.gamma));
    let flat = max_deviation(&state.h, h) <= tol && max_deviation(&state.m, m) <= tol && max_deviation(&state.gamma, g) <= tol;
    if flat && (params.beta * m - h * g).abs() <= tol {
        return Ok(SteadyClass::SteadyConstant { h, m, gamma: g });
    }
    if rhs(state, params)?.norm_inf() <= tol {
        Ok(SteadyClass::SteadyNonconforming)
    } else {
        Ok(SteadyClass::NotSteady)
    }
}

/// Distance from a constant reference state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviationNorms {
    pub l2_h: f64,
    pub l2_m: f64,
    pub l2_gamma: f64,
    /// L₂ of all three deviations plus the L₂ of their face gradients.
    pub h1: f64,
}

impl DeviationNorms {
    pub fn l2(&self) -> f64 {
        (self.l2_h * self.l2_h + self.l2_m * self.l2_m + self.l2_gamma * self.l2_gamma).sqrt()
    }
}

pub fn deviation_norms(state: &State, params: &Params, reference: [f64; 3]) -> DeviationNorms {
    let dx = dx_of(state, params);
    let l2 = |v: &[f64], r: f64| (v.iter().map(|x| (x - r) * (x - r)).sum::<f64>() * dx).sqrt();
    let grad2 = |v: &[f64]| v.windows(2).map(|w| ((w[1] - w[0]) / dx).powi(2)).sum::<f64>() * dx;
    let out = DeviationNorms {
        l2_h: l2(&state.h, reference[0]),
        l2_m: l2(&state.m, reference[1]),
        l2_gamma: l2(&state.gamma, reference[2]),
        h1: 0.0,
    };
    let grads = grad2(&state.h) + grad2(&state.m) + grad2(&state.gamma);
    DeviationNorms { h1: (out.l2().powi(2) + grads).sqrt(), ..out }
}

/// Least-squares decay rate of a norm series: ln‖·‖ ≈ a − ωt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub omega: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 5;

pub fn fit_decay_series(times: &[f64], norms: &[f64]) -> Result<DecayFit> {
    let n = times.len().min(norms.len());
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_FIT_SAMPLES, got: n });
    }
    if let Some(index) = norms[..n].iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveNorm { index, value: norms[index] });
    }
    let logs: Vec<f64> = norms[..n].iter().map(|v| v.ln()).collect();
    let tm = mean(&times[..n]);
    let lm = mean(&logs);
    let (mut stt, mut stl, mut sll) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (dt, dl) = (times[k] - tm, logs[k] - lm);
        stt += dt * dt;
        stl += dt * dl;
        sll += dl * dl;
    }
    let slope = stl / stt;
    let ss_res: f64 = (0..n).map(|k| (logs[k] - lm - slope * (times[k] - tm)).powi(2)).sum();
    let r_squared = if sll > 0.0 { 1.0 - ss_res / sll } else { 1.0 };
    Ok(DecayFit { omega: -slope, r_squared, samples: n })
}

/// Decay rate of the L₂ deviation norm over the sample index window.
pub fn fit_decay_rate(trace: &RunTrace, window: Range<usize>) -> Result<DecayFit> {
    let end = window.end.min(trace.times.len());
    let start = window.start.min(end);
    let norms: Vec<f64> = trace.norms[start..end].iter().map(DeviationNorms::l2).collect();
    fit_decay_series(&trace.times[start..end], &norms)
}
