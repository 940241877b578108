//! JSON run configuration and initial-condition construction.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{mass_matched_equilibrium, IntegratorConfig};
use crate::linstab::{equilibrium_from, Equilibrium};
use crate::model::{entropy_build, Grid, Params, State};

/// Initial fields. Perturbations are relative: f = f★(1 + a·cos(kπx/L)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    PerturbedEquilibrium {
        h_star: f64,
        eta_star: f64,
        #[serde(default = "default_mode")]
        mode: u32,
        #[serde(default)]
        rel_amp_h: f64,
        #[serde(default)]
        rel_amp_m: f64,
        #[serde(default)]
        rel_amp_gamma: f64,
        /// Extra uniform cellwise noise of this relative size, drawn from the run seed.
        #[serde(default)]
        noise: f64,
    },
    /// CSV file with a header containing `h`, `m` and `gamma` columns, one row per cell.
    Arrays { path: PathBuf },
    Manufactured { profile: String },
}

fn default_mode() -> u32 {
    1
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::PerturbedEquilibrium {
            h_star: 1.0,
            eta_star: 0.01,
            mode: 1,
            rel_amp_h: 0.01,
            rel_amp_m: 0.01,
            rel_amp_gamma: 0.01,
            noise: 0.0,
        }
    }
}

pub const MANUFACTURED_PROFILES: [&str; 2] = ["cosine_stack", "surfactant_patch"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinstabOptions {
    /// q values as fractions of the admissible maximum.
    pub q_fractions: Vec<f64>,
    /// Additional absolute q values.
    pub q_values: Vec<f64>,
}

impl Default for LinstabOptions {
    fn default() -> Self {
        LinstabOptions { q_fractions: vec![0.25, 0.5, 0.75], q_values: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub params: Params,
    pub n_cells: usize,
    pub integrator: IntegratorConfig,
    pub initial: InitialCondition,
    /// Write a snapshot every this many trace samples (the last sample is always written).
    pub snapshot_every: usize,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub linstab: LinstabOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params::default(),
            n_cells: 64,
            integrator: IntegratorConfig::default(),
            initial: InitialCondition::default(),
            snapshot_every: 10,
            output_dir: None,
            seed: 0,
            linstab: LinstabOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked without building the initial state.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        entropy_build(&self.params.sigma_law)?;
        Grid::new(self.n_cells, self.params.length)?;
        self.integrator.validate()?;
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParameter { name: "snapshot_every", reason: "must be >= 1".into() });
        }
        match &self.initial {
            InitialCondition::PerturbedEquilibrium { h_star, eta_star, noise, .. } => {
                if !(*h_star > 0.0 && h_star.is_finite()) {
                    return Err(Error::InvalidParameter { name: "h_star", reason: format!("must be > 0, got {h_star}") });
                }
                if !(*eta_star >= 0.0 && eta_star.is_finite()) {
                    return Err(Error::InvalidParameter { name: "eta_star", reason: format!("must be >= 0, got {eta_star}") });
                }
                if !(*noise >= 0.0 && noise.is_finite()) {
                    return Err(Error::InvalidParameter { name: "noise", reason: format!("must be >= 0, got {noise}") });
                }
            }
            InitialCondition::Manufactured { profile } if !MANUFACTURED_PROFILES.contains(&profile.as_str()) => {
                return Err(Error::Config(format!(
                    "unknown manufactured profile {profile:?} (known: {})",
                    MANUFACTURED_PROFILES.join(", ")
                )));
            }
            _ => {}
        }
        for &f in &self.linstab.q_fractions {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidParameter { name: "q_fractions", reason: format!("must be > 0, got {f}") });
            }
        }
        for &q in &self.linstab.q_values {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::InvalidParameter { name: "q_values", reason: format!("must be > 0, got {q}") });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_cells, self.params.length)
    }

    /// Initial fields without the positivity check (sweeps report violations per run).
    pub fn initial_fields(&self) -> Result<State> {
        let grid = self.grid()?;
        let x = grid.centers();
        let n = grid.n_cells;
        let l = grid.length;
        let (h, m, gamma) = match &self.initial {
            InitialCondition::PerturbedEquilibrium { mode, rel_amp_h, rel_amp_m, rel_amp_gamma, noise, .. } => {
                let eq = self.equilibrium()?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let k = *mode as f64;
                let mut field = |star: f64, amp: f64| -> Vec<f64> {
                    x.iter()
                        .map(|&xi| {
                            let jitter = if *noise > 0.0 { noise * rng.random_range(-1.0..1.0) } else { 0.0 };
                            star * (1.0 + amp * (k * PI * xi / l).cos() + jitter)
                        })
                        .collect()
                };
                let mut h = field(eq.h_star, *rel_amp_h);
                let mut m = field(eq.m_star, *rel_amp_m);
                let mut gamma = field(eq.gamma_star, *rel_amp_gamma);
                correct_means(&mut h, &mut m, &mut gamma, &eq, &self.params);
                (h, m, gamma)
            }
            InitialCondition::Arrays { path } => read_arrays(path, n)?,
            InitialCondition::Manufactured { profile } => manufactured(profile, &x, l)?,
        };
        Ok(State { h, m, gamma, t: 0.0 })
    }

    pub fn initial_state(&self) -> Result<State> {
        let s = self.initial_fields()?;
        s.validate()?;
        Ok(s)
    }

    /// Equilibrium the run relaxes to: the configured one, or the mass-matched one.
    pub fn equilibrium(&self) -> Result<Equilibrium> {
        match &self.initial {
            InitialCondition::PerturbedEquilibrium { h_star, eta_star, .. } if *eta_star == 0.0 => {
                Equilibrium::surfactant_free(*h_star)
            }
            InitialCondition::PerturbedEquilibrium { h_star, eta_star, .. } => {
                equilibrium_from(*h_star, *eta_star, &self.params)
            }
            _ => {
                let s = self.initial_state()?;
                let [h, m, g] = mass_matched_equilibrium(&s, &self.params);
                equilibrium_from(h, m + g, &self.params)
            }
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// Shifts h to mean h★ and m+Γ to mean η★, splitting the surfactant shift in the ratio h★ : β.
fn correct_means(h: &mut [f64], m: &mut [f64], gamma: &mut [f64], eq: &Equilibrium, params: &Params) {
    let dh = eq.h_star - mean(h);
    h.iter_mut().for_each(|v| *v += dh);
    let total: Vec<f64> = m.iter().zip(gamma.iter()).map(|(a, b)| a + b).collect();
    let ds = eq.eta_star - mean(&total);
    let denom = eq.h_star + params.beta;
    m.iter_mut().for_each(|v| *v += ds * eq.h_star / denom);
    gamma.iter_mut().for_each(|v| *v += ds * params.beta / denom);
}

type Fields = (Vec<f64>, Vec<f64>, Vec<f64>);

fn manufactured(profile: &str, x: &[f64], l: f64) -> Result<Fields> {
    let c = |k: f64, xi: f64| (k * PI * xi / l).cos();
    match profile {
        "cosine_stack" => Ok((
            x.iter().map(|&xi| 1.0 + 0.1 * c(1.0, xi) + 0.05 * c(2.0, xi)).collect(),
            x.iter().map(|&xi| 0.005 * (1.0 + 0.2 * c(3.0, xi))).collect(),
            x.iter().map(|&xi| 0.005 * (1.0 - 0.2 * c(1.0, xi))).collect(),
        )),
        "surfactant_patch" => Ok((
            vec![1.0; x.len()],
            vec![0.001; x.len()],
            x.iter().map(|&xi| 0.001 + 0.02 * (-((xi - 0.5 * l) / (0.1 * l)).powi(2)).exp()).collect(),
        )),
        other => Err(Error::Config(format!("unknown manufactured profile {other:?}"))),
    }
}

fn read_arrays(path: &Path, n_cells: usize) -> Result<Fields> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read initial arrays {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::Config("initial arrays file is empty".into()))?.split(',').map(str::trim).collect();
    let col = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| Error::Config(format!("initial arrays file lacks a {name:?} column")))
    };
    let (ih, im, ig) = (col("h")?, col("m")?, col("gamma")?);
    let (mut h, mut m, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for (row, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("initial arrays row {}: bad value in column {}", row + 1, header[i])))
        };
        h.push(get(ih)?);
        m.push(get(im)?);
        g.push(get(ig)?);
    }
    if h.len() != n_cells {
        return Err(Error::Shape { what: "initial arrays rows", got: h.len(), expected: n_cells });
    }
    Ok((h, m, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn perturbed_state_has_exact_target_means() {
        let cfg = RunConfig {
            params: Params { beta: 0.5, ..Params::default() },
            initial: InitialCondition::PerturbedEquilibrium {
                h_star: 1.2,
                eta_star: 0.03,
                mode: 2,
                rel_amp_h: 0.1,
                rel_amp_m: -0.05,
                rel_amp_gamma: 0.2,
                noise: 0.01,
            },
            ..RunConfig::default()
        };
        let s = cfg.initial_state().unwrap();
        let n = s.n_cells() as f64;
        assert!((s.h.iter().sum::<f64>() / n - 1.2).abs() < 1e-14);
        let eta = s.m.iter().zip(&s.gamma).map(|(a, b)| a + b).sum::<f64>() / n;
        assert!((eta - 0.03).abs() < 1e-15);
    }

    #[test]
    fn noise_depends_on_seed_only() {
        let mut cfg = RunConfig::default();
        if let InitialCondition::PerturbedEquilibrium { noise, .. } = &mut cfg.initial {
            *noise = 0.05;
        }
        let a = cfg.initial_state().unwrap();
        assert_eq!(a, cfg.initial_state().unwrap());
        cfg.seed = 7;
        assert_ne!(a, cfg.initial_state().unwrap());
    }

    #[test]
    fn validation_reports_beta() {
        let cfg = RunConfig { params: Params { beta: 0.0, ..Params::default() }, ..RunConfig::default() };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("beta must be > 0"), "{msg}");
    }

    #[test]
    fn manufactured_profiles_are_positive() {
        for p in MANUFACTURED_PROFILES {
            let cfg = RunConfig { initial: InitialCondition::Manufactured { profile: p.into() }, ..RunConfig::default() };
            cfg.validate().unwrap();
            cfg.initial_state().unwrap();
            cfg.equilibrium().unwrap();
        }
        let bad = RunConfig { initial: InitialCondition::Manufactured { profile: "nope".into() }, ..RunConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn arrays_are_read_by_column_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("init.csv");
        let rows: String = (0..4).map(|i| format!("{},0.5,{},1.0,0.02\n", i, 1.0 + i as f64)).collect();
        std::fs::write(&path, format!("x,m,h,c0,gamma\n{rows}")).unwrap();
        let cfg = RunConfig { n_cells: 4, initial: InitialCondition::Arrays { path: path.clone() }, ..RunConfig::default() };
        let s = cfg.initial_state().unwrap();
        assert_eq!(s.h, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.m, vec![0.5; 4]);
        let wrong = RunConfig { n_cells: 8, ..cfg };
        assert!(wrong.initial_state().is_err());
    }
}
