//! Linear stability of the constant equilibria: the Jacobian of the discrete
//! right-hand side, its spectrum on the mass-constrained subspace, and the 3×3
//! weighted-energy matrix b_q.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eigen::{general_eigenvalues, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::model::{Grid, Params, State};

/// Constant steady state (h★, m★, Γ★) with total surfactant η★ = m★ + Γ★.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub h_star: f64,
    pub eta_star: f64,
    pub m_star: f64,
    pub gamma_star: f64,
}

impl Equilibrium {
    fn build(h_star: f64, eta_star: f64, params: &Params) -> Self {
        let b = params.beta;
        Equilibrium {
            h_star,
            eta_star,
            m_star: h_star / (b + h_star) * eta_star,
            gamma_star: b / (b + h_star) * eta_star,
        }
    }

    /// The surfactant-free state η★ = 0.
    pub fn surfactant_free(h_star: f64) -> Result<Self> {
        if !(h_star > 0.0 && h_star.is_finite()) {
            return Err(Error::InvalidParameter { name: "h_star", reason: format!("must be > 0, got {h_star}") });
        }
        Ok(Equilibrium { h_star, eta_star: 0.0, m_star: 0.0, gamma_star: 0.0 })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.h_star, self.m_star, self.gamma_star]
    }

    pub fn state(&self, n_cells: usize) -> State {
        State {
            h: vec![self.h_star; n_cells],
            m: vec![self.m_star; n_cells],
            gamma: vec![self.gamma_star; n_cells],
            t: 0.0,
        }
    }
}

pub fn equilibrium_from(h_star: f64, eta_star: f64, params: &Params) -> Result<Equilibrium> {
    params.validate()?;
    for (name, v) in [("h_star", h_star), ("eta_star", eta_star)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter { name, reason: format!("must be > 0, got {v}") });
        }
    }
    Ok(Equilibrium::build(h_star, eta_star, params))
}

/// Oblique projection removing the fluid-mass and surfactant-mass directions.
///
/// `v` is stacked as (h, m, Γ) cell vectors.
pub fn project_mean_zero(v: &[f64], eq: &Equilibrium, params: &Params) -> Result<Vec<f64>> {
    if !v.len().is_multiple_of(3) || v.is_empty() {
        return Err(Error::Shape { what: "stacked vector", got: v.len(), expected: 3 * (v.len() / 3).max(1) });
    }
    let n = v.len() / 3;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / n as f64;
    let h_mean = mean(&v[..n]);
    let eta = mean(&v[n..2 * n]) + mean(&v[2 * n..]);
    let denom = eq.h_star + params.beta;
    let (m_shift, g_shift) = (eq.h_star / denom * eta, params.beta / denom * eta);
    let mut out = v.to_vec();
    out[..n].iter_mut().for_each(|x| *x -= h_mean);
    out[n..2 * n].iter_mut().for_each(|x| *x -= m_shift);
    out[2 * n..].iter_mut().for_each(|x| *x -= g_shift);
    Ok(out)
}

/// Jacobian of the discrete right-hand side at an equilibrium, on stacked (h, m, Γ).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    pub n_cells: usize,
    pub dx: f64,
    pub equilibrium: Equilibrium,
    pub matrix: DMatrix<f64>,
}

impl LinearOperator {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(v)).iter().copied().collect()
    }

    pub fn size(&self) -> usize {
        3 * self.n_cells
    }
}

/// Diffusion matrix a(u★) of the linearized fluxes, rows (h, m, Γ).
pub fn diffusion_matrix(params: &Params, eq: &Equilibrium) -> Result<[[f64; 3]; 3]> {
    let (h, m, g) = (eq.h_star, eq.m_star, eq.gamma_star);
    let s = params.sigma_law.sigma_prime(g)?;
    let gg = params.g;
    Ok([
        [gg / 3.0 * h.powi(3), 0.0, -0.5 * h * h * s],
        [gg / 3.0 * h * h * m - params.delta * m / h, params.delta, -0.5 * h * m * s],
        [gg / 2.0 * h * h * g, 0.0, params.d - h * g * s],
    ])
}

/// Zero-order sorption coupling; the Jacobian carries it with a minus sign.
pub fn sorption_matrix(params: &Params, eq: &Equilibrium) -> [[f64; 3]; 3] {
    let (h, m) = (eq.h_star, eq.m_star);
    let (k, b) = (params.k, params.beta);
    [
        [0.0, 0.0, 0.0],
        [-k * b * m / (h * h), k * b / h, -k],
        [k * b * m / (h * h), -k * b / h, k],
    ]
}

pub fn assemble_linearized(grid: &Grid, params: &Params, eq: &Equilibrium) -> Result<LinearOperator> {
    let n = grid.n_cells;
    let a = diffusion_matrix(params, eq)?;
    let c = sorption_matrix(params, eq);
    let inv = 1.0 / (grid.dx * grid.dx);
    let mut j = DMatrix::<f64>::zeros(3 * n, 3 * n);
    for f in 0..3 {
        for g in 0..3 {
            for i in 0..n {
                let (row, col) = (f * n + i, g * n + i);
                if a[f][g] != 0.0 {
                    let neighbours = usize::from(i > 0) + usize::from(i + 1 < n);
                    j[(row, col)] -= a[f][g] * inv * neighbours as f64;
                    if i > 0 {
                        j[(row, col - 1)] += a[f][g] * inv;
                    }
                    if i + 1 < n {
                        j[(row, col + 1)] += a[f][g] * inv;
                    }
                }
                j[(row, col)] -= c[f][g];
            }
        }
    }
    Ok(LinearOperator { n_cells: n, dx: grid.dx, equilibrium: *eq, matrix: j })
}

fn reflect(m: &mut DMatrix<f64>, u: &DVector<f64>) {
    let norm2 = u.norm_squared();
    if norm2 == 0.0 {
        return;
    }
    // m ← H m H with H = I − 2uuᵀ/‖u‖².
    let left = u.transpose() * &*m;
    *m -= (2.0 / norm2) * u * left;
    let right = &*m * u;
    *m -= (2.0 / norm2) * right * u.transpose();
}

/// The operator restricted to range(P), in an orthonormal basis of that subspace.
pub fn restricted_matrix(op: &LinearOperator) -> DMatrix<f64> {
    let n = op.n_cells;
    let size = 3 * n;
    let mut c1 = DVector::<f64>::zeros(size);
    let mut c2 = DVector::<f64>::zeros(size);
    for i in 0..n {
        c1[i] = 1.0 / (n as f64).sqrt();
        c2[n + i] = 1.0 / (2.0 * n as f64).sqrt();
        c2[2 * n + i] = c2[n + i];
    }
    let mut m = op.matrix.clone();

    let mut u1 = c1.clone();
    u1[0] += 1.0;
    reflect(&mut m, &u1);
    let h1c2 = &c2 - (2.0 / u1.norm_squared()) * u1.dot(&c2) * &u1;
    let mut u2 = h1c2.clone();
    u2[0] = 0.0;
    u2[1] += if h1c2[1] >= 0.0 { u2.norm() } else { -u2.norm() };
    reflect(&mut m, &u2);

    m.view((2, 2), (size - 2, size - 2)).into_owned()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by real part, ascending.
    pub eigenvalues: Vec<Complex<f64>>,
    pub spectral_bound: f64,
    /// −spectral_bound when that is positive.
    pub omega0: Option<f64>,
}

pub fn spectrum(op: &LinearOperator) -> Result<Spectrum> {
    let eigenvalues = general_eigenvalues(&restricted_matrix(op))?;
    let spectral_bound = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let omega0 = (spectral_bound < 0.0).then_some(-spectral_bound);
    Ok(Spectrum { eigenvalues, spectral_bound, omega0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BqMatrix {
    pub q: f64,
    pub entries: [[f64; 3]; 3],
}

pub fn bq_matrix(q: f64, eq: &Equilibrium, params: &Params) -> Result<BqMatrix> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter { name: "q", reason: format!("weight must be > 0, got {q}") });
    }
    let (h, m, g) = (eq.h_star, eq.m_star, eq.gamma_star);
    let s = params.sigma_law.sigma_prime(g)?;
    let (gg, b, delta) = (params.g, params.beta, params.delta);
    let b12 = b * gg / 6.0 * h * h * m - delta * b / 2.0 * m / h;
    let b13 = gg / 4.0 * h.powi(3) * g - q / 4.0 * h * h * s;
    let b23 = -b / 4.0 * m * h * s;
    Ok(BqMatrix {
        q,
        entries: [
            [q * gg / 3.0 * h.powi(3), b12, b13],
            [b12, delta * b, b23],
            [b13, b23, params.d * h - h * h * g * s],
        ],
    })
}

/// 16GD/(3σ′(0)²), or +∞ when σ′(0) = 0.
pub fn q_admissible_max(params: &Params) -> Result<f64> {
    let s0 = params.sigma_law.sigma_prime(0.0)?;
    Ok(if s0 == 0.0 { f64::INFINITY } else { 16.0 * params.g * params.d / (3.0 * s0 * s0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub positive_definite: bool,
    pub eigenvalues: [f64; 3],
    pub leading_minors: [f64; 3],
    /// 1-based order of the first non-positive leading minor.
    pub failing_minor: Option<usize>,
    /// Whether the minor test and the eigenvalue test gave the same answer.
    pub methods_agree: bool,
}

pub fn bq_is_positive_definite(b: &[[f64; 3]; 3]) -> Result<Certificate> {
    let scale = b.iter().flatten().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    for r in 0..3 {
        for c in r + 1..3 {
            let gap = (b[r][c] - b[c][r]).abs();
            if gap > 1e-12 * scale {
                return Err(Error::Asymmetric { row: r, col: c, gap });
            }
        }
    }
    let minors = [
        b[0][0],
        b[0][0] * b[1][1] - b[0][1] * b[1][0],
        b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]),
    ];
    let failing_minor = minors.iter().position(|&v| v <= 0.0).map(|i| i + 1);
    let dense = DMatrix::from_fn(3, 3, |r, c| b[r][c]);
    let eig = symmetric_eigenvalues(&dense)?;
    let eigenvalues = [eig[0], eig[1], eig[2]];
    let by_minors = failing_minor.is_none();
    let by_eigs = eigenvalues[0] > 0.0;
    Ok(Certificate {
        positive_definite: by_minors && by_eigs,
        eigenvalues,
        leading_minors: minors,
        failing_minor,
        methods_agree: by_minors == by_eigs,
    })
}
