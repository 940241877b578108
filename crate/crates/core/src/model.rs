//! Parameters, surface-tension laws, the entropy function, the grid and the state container.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Field, Result};
use crate::quadrature;

/// Surface tension as a function of the surface surfactant concentration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceTensionLaw {
    /// σ(Γ) = 1 − Γ.
    #[default]
    Linear,
    /// σ(Γ) = (α+1)(1 + cΓ)^{-3} with c = ((α+1)/α)^{1/3} − 1.
    Sheludko { alpha: f64 },
    /// σ(Γ) = value. Switches Marangoni stresses off.
    Constant { value: f64 },
}

impl SurfaceTensionLaw {
    fn sheludko_c(alpha: f64) -> f64 {
        ((alpha + 1.0) / alpha).cbrt() - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SurfaceTensionLaw::Sheludko { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::InvalidParameter {
                    name: "alpha",
                    reason: format!("Sheludko shape parameter must be > 0, got {alpha}"),
                })
            }
            SurfaceTensionLaw::Constant { value } if !value.is_finite() => Err(Error::InvalidParameter {
                name: "value",
                reason: "constant surface tension must be finite".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Magnitude of the Sheludko singularity, 1/c; the evaluation domain is `[0, domain_limit)`.
    pub fn domain_limit(&self) -> f64 {
        match *self {
            SurfaceTensionLaw::Sheludko { alpha } => 1.0 / Self::sheludko_c(alpha),
            _ => f64::INFINITY,
        }
    }

    /// Upper end of the range used for sampling and entropy checks (90% of the domain limit).
    pub fn admissible_max(&self) -> f64 {
        0.9 * self.domain_limit()
    }

    fn check(&self, gamma: f64) -> Result<()> {
        let limit = self.domain_limit();
        if gamma.is_finite() && gamma >= 0.0 && gamma < limit {
            Ok(())
        } else {
            Err(Error::SurfaceTensionDomain { gamma, limit })
        }
    }

    pub fn sigma(&self, gamma: f64) -> Result<f64> {
        self.check(gamma)?;
        Ok(match *self {
            SurfaceTensionLaw::Linear => 1.0 - gamma,
            SurfaceTensionLaw::Sheludko { alpha } => {
                let c = Self::sheludko_c(alpha);
                (alpha + 1.0) * (1.0 + c * gamma).powi(-3)
            }
            SurfaceTensionLaw::Constant { value } => value,
        })
    }

    pub fn sigma_prime(&self, gamma: f64) -> Result<f64> {
        self.check(gamma)?;
        Ok(self.slope(gamma))
    }

    // σ′ without the domain check; valid for every gamma > 0.
    pub(crate) fn slope(&self, gamma: f64) -> f64 {
        match *self {
            SurfaceTensionLaw::Linear => -1.0,
            SurfaceTensionLaw::Sheludko { alpha } => {
                let c = Self::sheludko_c(alpha);
                -3.0 * c * (alpha + 1.0) * (1.0 + c * gamma).powi(-4)
            }
            SurfaceTensionLaw::Constant { .. } => 0.0,
        }
    }
}

/// Evaluates σ(Γ).
pub fn sigma_eval(law: &SurfaceTensionLaw, gamma: f64) -> Result<f64> {
    law.sigma(gamma)
}

/// Convex entropy φ with φ″(r)·r = −σ′(r), normalized by φ(1) = φ′(1) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entropy {
    /// φ(r) = r ln r − r + 1 (linear law).
    Logarithmic,
    /// φ ≡ 0 (constant surface tension).
    Flat,
    /// Any other law: φ′ and φ by adaptive quadrature of φ″ = −σ′(r)/r.
    Quadrature { law: SurfaceTensionLaw },
}

const ENTROPY_TOL: f64 = 1e-12;

impl Entropy {
    pub fn phi(&self, r: f64) -> f64 {
        match self {
            Entropy::Logarithmic => r * r.ln() - r + 1.0,
            Entropy::Flat => 0.0,
            Entropy::Quadrature { .. } => {
                // Repeated integration collapsed to one integral: φ(r) = ∫₁^r (r − s) φ″(s) ds.
                quadrature::integrate(|s| (r - s) * self.d2phi(s), 1.0, r, ENTROPY_TOL)
            }
        }
    }

    pub fn dphi(&self, r: f64) -> f64 {
        match self {
            Entropy::Logarithmic => r.ln(),
            Entropy::Flat => 0.0,
            Entropy::Quadrature { .. } => quadrature::integrate(|s| self.d2phi(s), 1.0, r, ENTROPY_TOL),
        }
    }

    pub fn d2phi(&self, r: f64) -> f64 {
        match self {
            Entropy::Logarithmic => 1.0 / r,
            Entropy::Flat => 0.0,
            Entropy::Quadrature { law } => -law.slope(r) / r,
        }
    }
}

/// Builds the entropy for `law`, refusing laws with σ′ > 0 anywhere on the admissible range.
pub fn entropy_build(law: &SurfaceTensionLaw) -> Result<Entropy> {
    law.validate()?;
    let top = law.admissible_max().min(10.0);
    let samples = 256;
    for k in 0..=samples {
        let r = 1e-3 * (top / 1e-3).powf(k as f64 / samples as f64);
        let slope = law.slope(r);
        if slope > 0.0 {
            return Err(Error::EntropyUndefined { at: r, slope });
        }
    }
    Ok(match law {
        SurfaceTensionLaw::Linear => Entropy::Logarithmic,
        SurfaceTensionLaw::Constant { .. } => Entropy::Flat,
        other => Entropy::Quadrature { law: *other },
    })
}

/// Dimensionless constants of the reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Gravity number.
    #[serde(rename = "G")]
    pub g: f64,
    /// Surface diffusivity.
    #[serde(rename = "D")]
    pub d: f64,
    /// Horizontal bulk diffusivity.
    pub delta: f64,
    /// Solubility ratio.
    pub beta: f64,
    /// Sorption rate ratio.
    #[serde(rename = "K")]
    pub k: f64,
    /// Domain length.
    #[serde(rename = "L")]
    pub length: f64,
    pub sigma_law: SurfaceTensionLaw,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            g: 1.0,
            d: 0.1,
            delta: 0.1,
            beta: 1.0,
            k: 1.0,
            length: 1.0,
            sigma_law: SurfaceTensionLaw::Linear,
        }
    }
}

impl Params {
    /// G ≥ 0 (G = 0 is allowed for decoupled test configurations), K ≥ 0, everything else > 0.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64, what: &str) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("{name} must be > 0 ({what}), got {v}") })
            }
        }
        fn non_negative(name: &'static str, v: f64, what: &str) -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("{name} must be >= 0 ({what}), got {v}") })
            }
        }
        non_negative("G", self.g, "gravity number")?;
        positive("D", self.d, "surface diffusivity")?;
        positive("delta", self.delta, "bulk diffusivity")?;
        positive("beta", self.beta, "degree of solubility of the surfactant")?;
        non_negative("K", self.k, "sorption rate ratio")?;
        positive("L", self.length, "domain length")?;
        self.sigma_law.validate()
    }
}

/// Uniform cell-centred grid on (0, L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n_cells: usize,
    pub length: f64,
    pub dx: f64,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(n_cells: usize, length: f64) -> Result<Self> {
        if n_cells < Self::MIN_CELLS {
            return Err(Error::InvalidParameter {
                name: "n_cells",
                reason: format!("need at least {} cells, got {n_cells}", Self::MIN_CELLS),
            });
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter { name: "L", reason: format!("length must be > 0, got {length}") });
        }
        Ok(Grid { n_cells, length, dx: length / n_cells as f64 })
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

/// Cell-averaged (h, m, Γ) at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub h: Vec<f64>,
    pub m: Vec<f64>,
    pub gamma: Vec<f64>,
    pub t: f64,
}

impl State {
    /// Builds a state at t = 0, checking lengths and strict positivity.
    pub fn new(h: Vec<f64>, m: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let state = State { h, m, gamma, t: 0.0 };
        state.validate()?;
        Ok(state)
    }

    pub fn constant(n_cells: usize, h: f64, m: f64, gamma: f64) -> Result<Self> {
        State::new(vec![h; n_cells], vec![m; n_cells], vec![gamma; n_cells])
    }

    pub fn n_cells(&self) -> usize {
        self.h.len()
    }

    pub fn field(&self, field: Field) -> &[f64] {
        match field {
            Field::H => &self.h,
            Field::M => &self.m,
            Field::Gamma => &self.gamma,
        }
    }

    pub fn grid(&self, params: &Params) -> Result<Grid> {
        Grid::new(self.n_cells(), params.length)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.h.len();
        if n < Grid::MIN_CELLS {
            return Err(Error::Shape { what: "h", got: n, expected: Grid::MIN_CELLS });
        }
        for (what, len) in [("m", self.m.len()), ("gamma", self.gamma.len())] {
            if len != n {
                return Err(Error::Shape { what, got: len, expected: n });
            }
        }
        self.check_floor(0.0)
    }

    /// First cell (in field order h, m, Γ) whose value is not strictly above `floor`.
    pub fn first_violation(&self, floor: f64) -> Option<(Field, usize, f64)> {
        Field::ALL.into_iter().find_map(|f| {
            self.field(f)
                .iter()
                .position(|&v| !(v > floor))
                .map(|i| (f, i, self.field(f)[i]))
        })
    }

    pub fn check_floor(&self, floor: f64) -> Result<()> {
        match self.first_violation(floor) {
            None => Ok(()),
            Some((field, cell, value)) => Err(Error::Positivity { field, cell, value }),
        }
    }
}

/// Bulk concentration C₀ = βm/h, cell by cell.
pub fn c0_from_state(state: &State, params: &Params) -> Result<Vec<f64>> {
    if let Some(cell) = state.h.iter().position(|&h| !(h > 0.0)) {
        return Err(Error::Positivity { field: Field::H, cell, value: state.h[cell] });
    }
    Ok(state.h.iter().zip(&state.m).map(|(&h, &m)| params.beta * m / h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sheludko() -> SurfaceTensionLaw {
        SurfaceTensionLaw::Sheludko { alpha: 1.0 }
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_eval(&SurfaceTensionLaw::Linear, 0.0).unwrap(), 1.0);
        assert_eq!(sigma_eval(&SurfaceTensionLaw::Linear, 0.25).unwrap(), 0.75);
        assert_eq!(sigma_eval(&sheludko(), 0.0).unwrap(), 2.0);
    }

    #[test]
    fn sheludko_domain_is_enforced() {
        let law = sheludko();
        let limit = law.domain_limit();
        assert!(matches!(law.sigma(limit), Err(Error::SurfaceTensionDomain { .. })));
        assert!(matches!(law.sigma(limit * 1.5), Err(Error::SurfaceTensionDomain { .. })));
        assert!(law.sigma(-0.1).is_err());
        assert!(law.sigma(law.admissible_max()).is_ok());
    }

    #[test]
    fn sheludko_slope_matches_finite_difference() {
        let law = sheludko();
        for &g in &[0.0, 0.1, 0.5, 1.0, 2.0] {
            let eps = 1e-6;
            let fd = (law.sigma(g + eps).unwrap() - law.sigma((g - eps).max(0.0)).unwrap())
                / (g + eps - (g - eps).max(0.0));
            assert!((fd - law.sigma_prime(g).unwrap()).abs() < 1e-6, "gamma={g}");
        }
    }

    #[test]
    fn shipped_laws_strictly_decrease() {
        for law in [SurfaceTensionLaw::Linear, sheludko(), SurfaceTensionLaw::Sheludko { alpha: 0.3 }] {
            let top = law.admissible_max().min(10.0);
            let mut prev = law.sigma(0.0).unwrap();
            for k in 1..=200 {
                let g = top * k as f64 / 200.0;
                assert!(law.sigma_prime(g).unwrap() < 0.0);
                let s = law.sigma(g).unwrap();
                assert!(s < prev);
                prev = s;
            }
        }
    }

    #[test]
    fn logarithmic_entropy_closed_form() {
        let e = entropy_build(&SurfaceTensionLaw::Linear).unwrap();
        assert_eq!(e.phi(1.0), 0.0);
        assert_eq!(e.dphi(1.0), 0.0);
        assert_eq!(e.d2phi(2.0) * 2.0, 1.0);
        assert_eq!(-SurfaceTensionLaw::Linear.sigma_prime(2.0).unwrap(), 1.0);
    }

    #[test]
    fn sheludko_entropy_satisfies_defining_relation() {
        let law = sheludko();
        let e = entropy_build(&law).unwrap();
        // Hand derivative: σ′(Γ) = −3c(α+1)(1+cΓ)^{-4}, α = 1, c = 2^{1/3} − 1.
        let c = 2f64.cbrt() - 1.0;
        let hand = -3.0 * c * 2.0 * (1.0 + c * 0.1f64).powi(-4);
        assert!((e.d2phi(0.1) * 0.1 + hand).abs() < 1e-10);
        assert!(e.phi(1.0).abs() < 1e-15);
        assert!(e.dphi(1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_entropy_reproduces_log_entropy_for_linear_law() {
        // The quadrature route must agree with the closed form when fed the linear law.
        let q = Entropy::Quadrature { law: SurfaceTensionLaw::Linear };
        let closed = Entropy::Logarithmic;
        for &r in &[0.01, 0.2, 0.9, 1.7, 6.0] {
            assert!((q.dphi(r) - closed.dphi(r)).abs() < 1e-11, "r={r}");
            assert!((q.phi(r) - closed.phi(r)).abs() < 1e-11, "r={r}");
        }
    }

    #[test]
    fn sheludko_entropy_derivatives_are_consistent() {
        let e = entropy_build(&sheludko()).unwrap();
        // Fourth-order central differences keep the stencil error below the tolerances.
        let d = |f: &dyn Fn(f64) -> f64, r: f64, eps: f64| {
            (-f(r + 2.0 * eps) + 8.0 * f(r + eps) - 8.0 * f(r - eps) + f(r - 2.0 * eps)) / (12.0 * eps)
        };
        for &r in &[0.05, 0.5, 2.0, 3.0] {
            let eps = 1e-3;
            let fd1 = d(&|x| e.phi(x), r, eps);
            let fd2 = d(&|x| e.dphi(x), r, eps);
            assert!((fd1 - e.dphi(r)).abs() < 1e-6, "r={r}");
            assert!((fd2 - e.d2phi(r)).abs() < 1e-5 * e.d2phi(r).max(1.0), "r={r}");
        }
    }

    #[test]
    fn entropy_is_convex_and_relation_holds_on_log_grid() {
        for law in [SurfaceTensionLaw::Linear, sheludko()] {
            let e = entropy_build(&law).unwrap();
            let top = law.admissible_max().min(10.0);
            for k in 0..=60 {
                let r = 0.01 * (1000.0f64).powf(k as f64 / 60.0);
                if r > top {
                    break;
                }
                assert!(e.d2phi(r) >= 0.0);
                assert!((e.d2phi(r) * r + law.sigma_prime(r).unwrap()).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn c0_examples() {
        let p = Params { beta: 1.0, ..Params::default() };
        let s = State { h: vec![1.0; 4], m: vec![0.05; 4], gamma: vec![0.05; 4], t: 0.0 };
        assert_eq!(c0_from_state(&s, &p).unwrap(), vec![0.05; 4]);

        let p = Params { beta: 0.5, ..Params::default() };
        let s = State { h: vec![2.0; 4], m: vec![0.04; 4], gamma: vec![0.01; 4], t: 0.0 };
        for c in c0_from_state(&s, &p).unwrap() {
            assert!((c - 0.01).abs() < 1e-17);
        }
    }

    #[test]
    fn c0_rejects_nonpositive_height() {
        let s = State { h: vec![1.0, 0.0, 1.0, 1.0], m: vec![0.1; 4], gamma: vec![0.1; 4], t: 0.0 };
        assert!(matches!(
            c0_from_state(&s, &Params::default()),
            Err(Error::Positivity { field: Field::H, cell: 1, .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(Params::default().validate().is_ok());
        let err = Params { beta: 0.0, ..Params::default() }.validate().unwrap_err();
        assert!(err.to_string().contains("beta must be > 0"));
        assert!(Params { k: 0.0, ..Params::default() }.validate().is_ok());
        assert!(Params { d: -1.0, ..Params::default() }.validate().is_err());
    }

    #[test]
    fn state_validation() {
        assert!(State::constant(3, 1.0, 1.0, 1.0).is_err());
        assert!(State::new(vec![1.0; 4], vec![1.0; 5], vec![1.0; 4]).is_err());
        assert!(matches!(
            State::new(vec![1.0; 4], vec![1.0; 4], vec![1.0, 1.0, -1e-3, 1.0]),
            Err(Error::Positivity { field: Field::Gamma, cell: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn c0_inverts_m_definition(
            h in proptest::collection::vec(0.01f64..10.0, 4..20),
            c0 in 0.001f64..5.0,
            beta in 0.05f64..20.0,
        ) {
            let n = h.len();
            let m: Vec<f64> = h.iter().map(|&h| h * c0 / beta).collect();
            let s = State { h, m, gamma: vec![1.0; n], t: 0.0 };
            let p = Params { beta, ..Params::default() };
            for c in c0_from_state(&s, &p).unwrap() {
                prop_assert!((c - c0).abs() <= 1e-14 * c0.max(1.0));
            }
        }
    }
}
