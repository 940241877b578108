//! Finite-volume semi-discretization of the (h, m, Γ) system with no-flux walls.
//!
//! Face `i` sits at x = i·dx, so faces 0 and n are the walls and cells i−1, i meet
//! at interior face i. Every update is a difference of face fluxes, which makes the
//! cell sums of dh and of dm + dΓ telescope to zero.

use crate::error::{Error, Field, Result};
use crate::model::{Params, State};
use crate::par::{self, Execution};

/// Face-interpolated values, mobilities and gradients at all n+1 faces.
///
/// Wall entries carry the adjacent cell value and zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceValues {
    pub h: Vec<f64>,
    pub m: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma_prime: Vec<f64>,
    pub dh: Vec<f64>,
    pub dm: Vec<f64>,
    pub dgamma: Vec<f64>,
    /// ∂ₓσ(Γ) = σ′(Γ_face)·∂ₓΓ.
    pub dsigma: Vec<f64>,
}

/// Fluxes at all n+1 faces. Walls are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSet {
    pub flux_h: Vec<f64>,
    pub flux_m: Vec<f64>,
    pub flux_gamma: Vec<f64>,
}

/// Time derivatives of the three fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub dh: Vec<f64>,
    pub dm: Vec<f64>,
    pub dgamma: Vec<f64>,
}

impl Derivatives {
    pub fn zeros(n: usize) -> Self {
        Derivatives { dh: vec![0.0; n], dm: vec![0.0; n], dgamma: vec![0.0; n] }
    }

    pub fn norm_inf(&self) -> f64 {
        self.dh
            .iter()
            .chain(&self.dm)
            .chain(&self.dgamma)
            .fold(0.0f64, |acc, v| if v.is_nan() { f64::NAN } else { acc.max(v.abs()) })
    }

    pub fn field(&self, f: Field) -> &[f64] {
        match f {
            Field::H => &self.dh,
            Field::M => &self.dm,
            Field::Gamma => &self.dgamma,
        }
    }
}

fn check_heights(state: &State) -> Result<()> {
    match state.h.iter().position(|&h| !(h > 0.0)) {
        None => Ok(()),
        Some(cell) => Err(Error::Positivity { field: Field::H, cell, value: state.h[cell] }),
    }
}

fn check_shape(state: &State) -> Result<()> {
    let n = state.h.len();
    for (what, len) in [("m", state.m.len()), ("gamma", state.gamma.len())] {
        if len != n {
            return Err(Error::Shape { what, got: len, expected: n });
        }
    }
    Ok(())
}

/// Arithmetic face means and centred face gradients.
pub fn face_values(state: &State, params: &Params) -> Result<FaceValues> {
    check_shape(state)?;
    let n = state.n_cells();
    let dx = params.length / n as f64;
    let law = params.sigma_law;
    let mut fv = FaceValues {
        h: vec![0.0; n + 1],
        m: vec![0.0; n + 1],
        gamma: vec![0.0; n + 1],
        sigma_prime: vec![0.0; n + 1],
        dh: vec![0.0; n + 1],
        dm: vec![0.0; n + 1],
        dgamma: vec![0.0; n + 1],
        dsigma: vec![0.0; n + 1],
    };
    for (face, cell) in [(0, 0), (n, n - 1)] {
        fv.h[face] = state.h[cell];
        fv.m[face] = state.m[cell];
        fv.gamma[face] = state.gamma[cell];
        fv.sigma_prime[face] = law.sigma_prime(state.gamma[cell])?;
    }
    for i in 1..n {
        let (l, r) = (i - 1, i);
        fv.h[i] = 0.5 * (state.h[l] + state.h[r]);
        fv.m[i] = 0.5 * (state.m[l] + state.m[r]);
        fv.gamma[i] = 0.5 * (state.gamma[l] + state.gamma[r]);
        fv.dh[i] = (state.h[r] - state.h[l]) / dx;
        fv.dm[i] = (state.m[r] - state.m[l]) / dx;
        fv.dgamma[i] = (state.gamma[r] - state.gamma[l]) / dx;
        fv.sigma_prime[i] = law.sigma_prime(fv.gamma[i])?;
        fv.dsigma[i] = fv.sigma_prime[i] * fv.dgamma[i];
    }
    Ok(fv)
}

// Interior-face fluxes; mobilities are face means of the cell mobilities.
fn face_flux(state: &State, params: &Params, i: usize, dx: f64, linear_diffusion: bool) -> Result<[f64; 3]> {
    let (l, r) = (i - 1, i);
    let (hl, hr) = (state.h[l], state.h[r]);
    let (ml, mr) = (state.m[l], state.m[r]);
    let (gl, gr) = (state.gamma[l], state.gamma[r]);
    let mean = |a: f64, b: f64| 0.5 * (a + b);

    let hx = (hr - hl) / dx;
    let mx = (mr - ml) / dx;
    let gx = (gr - gl) / dx;
    let sx = params.sigma_law.sigma_prime(mean(gl, gr))? * gx;

    let h3 = mean(hl * hl * hl, hr * hr * hr);
    let h2 = mean(hl * hl, hr * hr);
    let h2m = mean(hl * hl * ml, hr * hr * mr);
    let hm = mean(hl * ml, hr * mr);
    let m_over_h = mean(ml / hl, mr / hr);
    let h2g = mean(hl * hl * gl, hr * hr * gr);
    let hg = mean(hl * gl, hr * gr);

    let g = params.g;
    let fh = g / 3.0 * h3 * hx - 0.5 * h2 * sx;
    let mut fm = g / 3.0 * h2m * hx - 0.5 * hm * sx - params.delta * m_over_h * hx;
    let mut fg = g / 2.0 * h2g * hx - hg * sx;
    if linear_diffusion {
        fm += params.delta * mx;
        fg += params.d * gx;
    }
    Ok([fh, fm, fg])
}

fn fluxes_with(state: &State, params: &Params, linear_diffusion: bool, exec: Execution) -> Result<FluxSet> {
    check_shape(state)?;
    check_heights(state)?;
    let n = state.n_cells();
    let dx = params.length / n as f64;
    let interior = par::map_range(exec.for_cells(n), n - 1, |k| {
        face_flux(state, params, k + 1, dx, linear_diffusion)
    });
    let mut set = FluxSet { flux_h: vec![0.0; n + 1], flux_m: vec![0.0; n + 1], flux_gamma: vec![0.0; n + 1] };
    for (k, f) in interior.into_iter().enumerate() {
        let [fh, fm, fg] = f?;
        set.flux_h[k + 1] = fh;
        set.flux_m[k + 1] = fm;
        set.flux_gamma[k + 1] = fg;
    }
    Ok(set)
}

/// Face fluxes of the three conservation laws.
pub fn compute_fluxes(state: &State, params: &Params) -> Result<FluxSet> {
    fluxes_with(state, params, true, Execution::Parallel)
}

/// Sorption exchange: (−K(βm/h − Γ), +K(βm/h − Γ)) per cell.
pub fn sorption_source(state: &State, params: &Params) -> Result<(Vec<f64>, Vec<f64>)> {
    check_shape(state)?;
    check_heights(state)?;
    let gap: Vec<f64> = (0..state.n_cells())
        .map(|i| params.k * (params.beta * state.m[i] / state.h[i] - state.gamma[i]))
        .collect();
    Ok((gap.iter().map(|g| -g).collect(), gap))
}

fn assemble(flux: &FluxSet, source: Option<&(Vec<f64>, Vec<f64>)>, dx: f64) -> Derivatives {
    let n = flux.flux_h.len() - 1;
    let div = |f: &[f64], i: usize| (f[i + 1] - f[i]) / dx;
    let mut out = Derivatives::zeros(n);
    for i in 0..n {
        out.dh[i] = div(&flux.flux_h, i);
        out.dm[i] = div(&flux.flux_m, i);
        out.dgamma[i] = div(&flux.flux_gamma, i);
    }
    if let Some((sm, sg)) = source {
        for i in 0..n {
            out.dm[i] += sm[i];
            out.dgamma[i] += sg[i];
        }
    }
    out
}

/// Full right-hand side with an explicit execution mode.
pub fn rhs_with(state: &State, params: &Params, exec: Execution) -> Result<Derivatives> {
    let flux = fluxes_with(state, params, true, exec)?;
    let source = sorption_source(state, params)?;
    Ok(assemble(&flux, Some(&source), params.length / state.n_cells() as f64))
}

/// Semi-discrete right-hand side d(h, m, Γ)/dt.
pub fn rhs(state: &State, params: &Params) -> Result<Derivatives> {
    rhs_with(state, params, Execution::Parallel)
}

/// Right-hand side without the linear diffusions δ∂ₓ²m and D∂ₓ²Γ (the IMEX explicit part).
pub fn rhs_explicit_part(state: &State, params: &Params) -> Result<Derivatives> {
    let flux = fluxes_with(state, params, false, Execution::Parallel)?;
    let source = sorption_source(state, params)?;
    Ok(assemble(&flux, Some(&source), params.length / state.n_cells() as f64))
}

/// Neumann second difference (u_{i+1} − 2u_i + u_{i−1})/dx², walls closed.
pub fn neumann_laplacian(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    let inv = 1.0 / (dx * dx);
    (0..n)
        .map(|i| {
            let left = if i > 0 { u[i - 1] - u[i] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] - u[i] } else { 0.0 };
            (left + right) * inv
        })
        .collect()
}
