//! The four subcommands as library functions.

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{InitialCondition, RunConfig};
use super::output::{fmt_f64, snapshot_csv, trace_csv, write_atomic, write_json, Table};
use crate::diagnostics::{classify_steady, fit_decay_series, MIN_FIT_SAMPLES};
use crate::error::{Error, Result};
use crate::integrate::{run_observed, HaltReason, RunOutcome, RunTrace};
use crate::linstab::{assemble_linearized, bq_is_positive_definite, bq_matrix, q_admissible_max, spectrum, Equilibrium};
use crate::model::Params;
use crate::par::{map_slice, with_threads, Execution};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_POSITIVITY: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;
pub const EXIT_EIGEN: i32 = 4;

pub fn exit_code(halt: &HaltReason) -> i32 {
    match halt {
        HaltReason::Completed | HaltReason::Steady => EXIT_OK,
        HaltReason::PositivityLoss { .. } | HaltReason::AdmissibilityLoss { .. } => EXIT_POSITIVITY,
        HaltReason::NonFinite { .. } => EXIT_NON_FINITE,
    }
}

pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::NoConvergence { .. } => EXIT_EIGEN,
        _ => EXIT_CONFIG,
    }
}

/// Progress lines on stderr unless quiet.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub quiet: bool,
}

impl Progress {
    pub fn line(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    #[serde(flatten)]
    pub config: &'a RunConfig,
    pub version: &'static str,
    pub halt_reason: Option<HaltReason>,
    pub exit_code: i32,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub samples: usize,
    pub snapshots: usize,
    pub error: Option<String>,
}

impl<'a> Manifest<'a> {
    fn failed(config: &'a RunConfig, err: &Error) -> Self {
        Manifest {
            config,
            version: VERSION,
            halt_reason: None,
            exit_code: error_exit_code(err),
            accepted_steps: 0,
            rejected_steps: 0,
            samples: 0,
            snapshots: 0,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub outcome: RunOutcome,
    pub exit_code: i32,
    pub snapshots: usize,
}

/// Runs `cfg` and writes trace.csv, snapshots/ and manifest.json under `out`.
pub fn simulate(cfg: &RunConfig, out: &Path, progress: Progress) -> Result<SimulationReport> {
    cfg.validate()?;
    let state0 = cfg.initial_state()?;
    let snap_dir = out.join("snapshots");
    fs::create_dir_all(&snap_dir)?;

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut written = Vec::new();
    let every = cfg.snapshot_every;
    let outcome = run_observed(&state0, &cfg.params, &cfg.integrator, |state, k| {
        if k % every != 0 || failure.borrow().is_some() {
            return;
        }
        let res = snapshot_csv(state, &cfg.params)
            .and_then(|text| write_atomic(&snap_dir.join(format!("{k:04}.csv")), text.as_bytes()));
        match res {
            Ok(()) => {
                written.push(k);
                progress.line(format!("sample {k:5}  t = {:.6e}", state.t));
            }
            Err(e) => *failure.borrow_mut() = Some(e),
        }
    })?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let last = outcome.trace.len() - 1;
    if written.last() != Some(&last) {
        let text = snapshot_csv(&outcome.state, &cfg.params)?;
        write_atomic(&snap_dir.join(format!("{last:04}.csv")), text.as_bytes())?;
        written.push(last);
    }

    write_atomic(&out.join("trace.csv"), trace_csv(&outcome.trace).as_bytes())?;
    let code = exit_code(&outcome.halt);
    let manifest = Manifest {
        config: cfg,
        version: VERSION,
        halt_reason: Some(outcome.halt),
        exit_code: code,
        accepted_steps: outcome.trace.accepted_steps,
        rejected_steps: outcome.trace.rejected_steps,
        samples: outcome.trace.len(),
        snapshots: written.len(),
        error: None,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    progress.line(format!(
        "{}: {} accepted / {} rejected steps, t = {:.6e}",
        outcome.halt.label(),
        outcome.trace.accepted_steps,
        outcome.trace.rejected_steps,
        outcome.state.t
    ));
    Ok(SimulationReport { outcome, exit_code: code, snapshots: written.len() })
}

pub fn resolve_out(cli_out: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    cli_out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))
}

pub fn cmd_simulate(mut cfg: RunConfig, out: &Path, progress: Progress) -> i32 {
    cfg.output_dir = Some(out.to_path_buf());
    match simulate(&cfg, out, progress) {
        Ok(report) => report.exit_code,
        Err(err) => {
            eprintln!("error: {err}");
            let _ = write_json(&out.join("manifest.json"), &Manifest::failed(&cfg, &err));
            error_exit_code(&err)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BqEntry {
    pub q: f64,
    pub fraction_of_q_max: Option<f64>,
    pub entries: [[f64; 3]; 3],
    pub positive_definite: bool,
    pub eigenvalues: [f64; 3],
    pub leading_minors: [f64; 3],
    pub failing_minor: Option<usize>,
    pub methods_agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayComparison {
    pub run_dir: String,
    pub omega_fit: Option<f64>,
    pub r_squared: Option<f64>,
    pub fit_window: Option<[f64; 2]>,
    pub fit_samples: usize,
    pub omega0_num: Option<f64>,
    pub spectral_bound: f64,
    pub ratio: Option<f64>,
    pub ratio_band: [f64; 2],
    pub insufficient_tail: bool,
    /// "decaying", "non_decaying" or "unknown".
    pub fit_stability: String,
    /// "stable" or "unstable".
    pub spectral_stability: String,
    /// "consistent", "inconsistent" or "insufficient_tail".
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinstabReport {
    pub version: String,
    pub params: Params,
    pub n_cells: usize,
    pub equilibrium: Equilibrium,
    pub q_max: Option<f64>,
    pub q_max_note: Option<String>,
    pub bq: Vec<BqEntry>,
    pub bq_note: Option<String>,
    pub spectral_bound: f64,
    pub omega0_num: Option<f64>,
    /// (re, im) pairs on the mass-constrained subspace, ascending real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub decay_comparison: Option<DecayComparison>,
}

pub fn linstab_report(cfg: &RunConfig, exec: Execution) -> Result<LinstabReport> {
    cfg.validate()?;
    let p = &cfg.params;
    let eq = cfg.equilibrium()?;
    let op = assemble_linearized(&cfg.grid()?, p, &eq)?;
    let spec = spectrum(&op)?;
    let q_max = q_admissible_max(p)?;

    let (q_max_field, q_max_note, bq_note, grid) = if q_max.is_finite() {
        let mut grid: Vec<(f64, Option<f64>)> = cfg.linstab.q_fractions.iter().map(|&f| (f * q_max, Some(f))).collect();
        grid.extend(cfg.linstab.q_values.iter().map(|&q| (q, None)));
        (Some(q_max), None, None, grid)
    } else {
        (
            None,
            Some("unbounded: sigma'(0) = 0".to_string()),
            Some("b_q check skipped because q_max is unbounded".to_string()),
            Vec::new(),
        )
    };
    let bq = map_slice(exec, &grid, |&(q, fraction)| -> Result<BqEntry> {
        let b = bq_matrix(q, &eq, p)?;
        let cert = bq_is_positive_definite(&b.entries)?;
        Ok(BqEntry {
            q,
            fraction_of_q_max: fraction,
            entries: b.entries,
            positive_definite: cert.positive_definite,
            eigenvalues: cert.eigenvalues,
            leading_minors: cert.leading_minors,
            failing_minor: cert.failing_minor,
            methods_agree: cert.methods_agree,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(LinstabReport {
        version: VERSION.to_string(),
        params: *p,
        n_cells: cfg.n_cells,
        equilibrium: eq,
        q_max: q_max_field,
        q_max_note,
        bq,
        bq_note,
        spectral_bound: spec.spectral_bound,
        omega0_num: spec.omega0,
        eigenvalues: spec.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
        decay_comparison: None,
    })
}

pub fn cmd_linstab(cfg: RunConfig, out: &Path, progress: Progress) -> i32 {
    let result = linstab_report(&cfg, Execution::Parallel).and_then(|report| {
        write_json(&out.join("linstab.json"), &report)?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            progress.line(format!(
                "spectral bound {:.6e}, omega0 {}, q_max {}",
                report.spectral_bound,
                report.omega0_num.map_or("none".into(), |w| format!("{w:.6e}")),
                report.q_max.map_or("unbounded".into(), |q| format!("{q:.6e}"))
            ));
            EXIT_OK
        }
        Err(err) => {
            eprintln!("error: {err}");
            error_exit_code(&err)
        }
    }
}

/// Fit window over a norm series: samples above 1e-9 of the peak, last half of them.
pub fn tail_window(norms: &[f64]) -> Option<std::ops::Range<usize>> {
    let peak = norms.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let end = norms.iter().position(|&v| !(v.is_finite() && v >= 1e-9 * peak)).unwrap_or(norms.len());
    let start = end / 2;
    (end - start >= MIN_FIT_SAMPLES).then_some(start..end)
}

pub const RATIO_BAND: [f64; 2] = [0.8, 1.2];

pub fn compare_decay(times: &[f64], norms: &[f64], spectral_bound: f64, omega0: Option<f64>, run_dir: &str) -> DecayComparison {
    let spectral_stability = if spectral_bound < 0.0 { "stable" } else { "unstable" }.to_string();
    let fit = tail_window(norms).and_then(|w| fit_decay_series(&times[w.clone()], &norms[w.clone()]).ok().map(|f| (f, w)));
    let Some((fit, w)) = fit else {
        return DecayComparison {
            run_dir: run_dir.to_string(),
            omega_fit: None,
            r_squared: None,
            fit_window: None,
            fit_samples: 0,
            omega0_num: omega0,
            spectral_bound,
            ratio: None,
            ratio_band: RATIO_BAND,
            insufficient_tail: true,
            fit_stability: "unknown".into(),
            spectral_stability,
            verdict: "insufficient_tail".into(),
        };
    };
    let decaying = fit.omega > 0.0;
    let ratio = omega0.map(|w0| fit.omega / w0);
    let consistent = match (decaying, ratio) {
        (true, Some(r)) => (RATIO_BAND[0]..=RATIO_BAND[1]).contains(&r),
        (false, _) => spectral_bound >= 0.0,
        (true, None) => false,
    };
    DecayComparison {
        run_dir: run_dir.to_string(),
        omega_fit: Some(fit.omega),
        r_squared: Some(fit.r_squared),
        fit_window: Some([times[w.start], times[w.end - 1]]),
        fit_samples: fit.samples,
        omega0_num: omega0,
        spectral_bound,
        ratio,
        ratio_band: RATIO_BAND,
        insufficient_tail: false,
        fit_stability: if decaying { "decaying" } else { "non_decaying" }.into(),
        spectral_stability,
        verdict: if consistent { "consistent" } else { "inconsistent" }.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// L₂ deviation norms per sample from a trace.csv.
pub fn trace_norms(table: &Table) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = table.column("t")?;
    let (a, b, c) = (table.column("l2_h")?, table.column("l2_m")?, table.column("l2_gamma")?);
    let norms = (0..t.len()).map(|k| (a[k] * a[k] + b[k] * b[k] + c[k] * c[k]).sqrt()).collect();
    Ok((t, norms))
}

pub fn compare(run_dir: &Path, linstab_dir: &Path) -> Result<DecayComparison> {
    let run_cfg = RunConfig::from_json(&read_text(&run_dir.join("manifest.json"))?)?;
    let report_path = linstab_dir.join("linstab.json");
    let mut report: LinstabReport = serde_json::from_str(&read_text(&report_path)?)?;
    if run_cfg.params != report.params || run_cfg.n_cells != report.n_cells {
        return Err(Error::Config(format!(
            "parameter mismatch between {} and {}",
            run_dir.display(),
            report_path.display()
        )));
    }
    let table = Table::parse(&read_text(&run_dir.join("trace.csv"))?)?;
    let (times, norms) = trace_norms(&table)?;
    let cmp = compare_decay(&times, &norms, report.spectral_bound, report.omega0_num, &run_dir.display().to_string());
    report.decay_comparison = Some(cmp.clone());
    write_json(&report_path, &report)?;
    Ok(cmp)
}

pub fn cmd_compare(run_dir: &Path, linstab_dir: &Path, progress: Progress) -> i32 {
    match compare(run_dir, linstab_dir) {
        Ok(c) => {
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
            progress.line(format!(
                "omega_fit {}  omega0_num {}  ratio {}  verdict {}",
                show(c.omega_fit),
                show(c.omega0_num),
                show(c.ratio),
                c.verdict
            ));
            EXIT_OK
        }
        Err(err) => {
            eprintln!("error: {err}");
            error_exit_code(&err)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Cartesian product; the first axis varies slowest.
    pub axes: Vec<Axis>,
    pub max_runs: usize,
    /// Tolerance for the final steady-state classification.
    pub classify_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { base: RunConfig::default(), axes: Vec::new(), max_runs: 256, classify_tol: 1e-8 }
    }
}

pub const AXIS_NAMES: [&str; 14] = [
    "G", "D", "delta", "beta", "K", "L", "h_star", "eta_star", "amp_h", "amp_m", "amp_gamma", "n_cells", "noise", "t_end",
];

fn apply_axis(cfg: &mut RunConfig, name: &str, value: f64) -> Result<()> {
    let p = &mut cfg.params;
    match name {
        "G" => p.g = value,
        "D" => p.d = value,
        "delta" => p.delta = value,
        "beta" => p.beta = value,
        "K" => p.k = value,
        "L" => p.length = value,
        "t_end" => cfg.integrator.t_end = value,
        "n_cells" => {
            if !(value >= 0.0 && value.fract() == 0.0) {
                return Err(Error::Config(format!("n_cells axis needs whole numbers, got {value}")));
            }
            cfg.n_cells = value as usize;
        }
        other => {
            let InitialCondition::PerturbedEquilibrium { h_star, eta_star, rel_amp_h, rel_amp_m, rel_amp_gamma, noise, .. } =
                &mut cfg.initial
            else {
                return Err(Error::Config(format!("axis {other:?} needs a perturbed_equilibrium initial condition")));
            };
            match other {
                "h_star" => *h_star = value,
                "eta_star" => *eta_star = value,
                "amp_h" => *rel_amp_h = value,
                "amp_m" => *rel_amp_m = value,
                "amp_gamma" => *rel_amp_gamma = value,
                "noise" => *noise = value,
                _ => return Err(Error::Config(format!("unknown sweep axis {other:?} (known: {})", AXIS_NAMES.join(", ")))),
            }
        }
    }
    Ok(())
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot parse sweep config: {e}")))
    }

    /// Expanded, validated run configurations in run-id order.
    pub fn expand(&self) -> Result<Vec<RunConfig>> {
        let total: usize = self.axes.iter().map(|a| a.values.len()).product();
        if total > self.max_runs {
            return Err(Error::Config(format!("sweep has {total} runs, cap is {}", self.max_runs)));
        }
        if !(self.classify_tol > 0.0) {
            return Err(Error::InvalidParameter { name: "classify_tol", reason: "must be > 0".into() });
        }
        let mut out = Vec::with_capacity(total);
        for id in 0..total {
            let mut cfg = self.base.clone();
            let mut rest = id;
            for axis in self.axes.iter().rev() {
                let k = rest % axis.values.len();
                rest /= axis.values.len();
                apply_axis(&mut cfg, &axis.name, axis.values[k])?;
            }
            cfg.seed = self.base.seed.wrapping_add(id as u64);
            cfg.validate().map_err(|e| Error::Config(format!("run {id}: {e}")))?;
            out.push(cfg);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run_id: usize,
    pub params: Params,
    pub h_star: f64,
    pub eta_star: f64,
    pub amps: [f64; 3],
    pub n_cells: usize,
    pub halt_reason: String,
    pub steady_verdict: String,
    pub omega_fit: f64,
    pub omega0_num: f64,
    pub max_mass_drift: f64,
    pub max_energy_increase: f64,
}

pub const SUMMARY_HEADER: &str = "run_id,G,D,delta,beta,K,L,h_star,eta_star,amp_h,amp_m,amp_gamma,n_cells,halt_reason,steady_verdict,omega_fit,omega0_num,max_mass_drift,max_energy_increase";

impl SummaryRow {
    pub fn csv(&self) -> String {
        let p = &self.params;
        let nums = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.run_id,
            nums(&[p.g, p.d, p.delta, p.beta, p.k, p.length, self.h_star, self.eta_star]),
            nums(&self.amps),
            self.n_cells,
            self.halt_reason,
            self.steady_verdict,
            nums(&[self.omega_fit, self.omega0_num]),
            fmt_f64(self.max_mass_drift),
            fmt_f64(self.max_energy_increase)
        )
    }
}

pub fn max_mass_drift(trace: &RunTrace) -> f64 {
    let rel = |series: &[f64]| {
        let base = series[0];
        series.iter().map(|v| (v - base).abs() / base.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
    };
    if trace.is_empty() {
        return f64::NAN;
    }
    rel(&trace.fluid_mass).max(rel(&trace.surfactant_mass))
}

pub fn max_energy_increase(trace: &RunTrace) -> f64 {
    trace.energy.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max)
}

fn sweep_one(id: usize, cfg: &RunConfig, out: &Path, classify_tol: f64) -> SummaryRow {
    let eq = cfg.equilibrium().ok();
    let (h_star, eta_star, amps) = match &cfg.initial {
        InitialCondition::PerturbedEquilibrium { h_star, eta_star, rel_amp_h, rel_amp_m, rel_amp_gamma, .. } => {
            (*h_star, *eta_star, [*rel_amp_h, *rel_amp_m, *rel_amp_gamma])
        }
        _ => (eq.map_or(f64::NAN, |e| e.h_star), eq.map_or(f64::NAN, |e| e.eta_star), [f64::NAN; 3]),
    };
    let mut row = SummaryRow {
        run_id: id,
        params: cfg.params,
        h_star,
        eta_star,
        amps,
        n_cells: cfg.n_cells,
        halt_reason: "error".into(),
        steady_verdict: "not_steady".into(),
        omega_fit: f64::NAN,
        omega0_num: f64::NAN,
        max_mass_drift: f64::NAN,
        max_energy_increase: f64::NAN,
    };
    let dir = out.join(format!("run_{id:04}"));
    let mut cfg = cfg.clone();
    cfg.output_dir = Some(dir.clone());

    if let Some(omega0) = eq
        .and_then(|e| assemble_linearized(&cfg.grid().ok()?, &cfg.params, &e).ok())
        .and_then(|op| spectrum(&op).ok())
        .and_then(|s| s.omega0)
    {
        row.omega0_num = omega0;
    }

    // A non-positive initial profile is reported as immediate positivity loss.
    match cfg.initial_fields().map(|s| s.first_violation(0.0)) {
        Ok(Some((field, cell, value))) => {
            row.halt_reason = "positivity_loss".into();
            let halt = HaltReason::PositivityLoss { step: 0, t: 0.0, field, cell, value };
            let manifest = Manifest { halt_reason: Some(halt), exit_code: exit_code(&halt), ..Manifest::failed(&cfg, &Error::Positivity { field, cell, value }) };
            let _ = write_json(&dir.join("manifest.json"), &manifest);
            return row;
        }
        Err(err) => {
            let _ = write_json(&dir.join("manifest.json"), &Manifest::failed(&cfg, &err));
            return row;
        }
        Ok(None) => {}
    }

    match simulate(&cfg, &dir, Progress { quiet: true }) {
        Ok(report) => {
            let tr = &report.outcome.trace;
            row.halt_reason = report.outcome.halt.label().into();
            row.steady_verdict = classify_steady(&report.outcome.state, &cfg.params, classify_tol)
                .map_or("error".into(), |c| c.label().to_string());
            let norms = tr.l2_norms();
            if let Some(w) = tail_window(&norms) {
                if let Ok(fit) = fit_decay_series(&tr.times[w.clone()], &norms[w]) {
                    row.omega_fit = fit.omega;
                }
            }
            row.max_mass_drift = max_mass_drift(tr);
            row.max_energy_increase = max_energy_increase(tr);
        }
        Err(err) => {
            let _ = write_json(&dir.join("manifest.json"), &Manifest::failed(&cfg, &err));
        }
    }
    row
}

/// Runs every configuration of the sweep and writes summary.csv.
pub fn sweep(cfg: &SweepConfig, out: &Path, exec: Execution, threads: Option<usize>, progress: Progress) -> Result<Vec<SummaryRow>> {
    let runs = cfg.expand()?;
    fs::create_dir_all(out)?;
    progress.line(format!("sweep: {} runs", runs.len()));
    let indexed: Vec<(usize, RunConfig)> = runs.into_iter().enumerate().collect();
    let rows = with_threads(threads, || {
        map_slice(exec, &indexed, |(id, run)| {
            let row = sweep_one(*id, run, out, cfg.classify_tol);
            progress.line(format!("run {id:4}: {}", row.halt_reason));
            row
        })
    });
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.csv());
        text.push('\n');
    }
    write_atomic(&out.join("summary.csv"), text.as_bytes())?;
    Ok(rows)
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var("LUBRISURF_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

pub fn cmd_sweep(cfg: SweepConfig, out: &Path, progress: Progress) -> i32 {
    match sweep(&cfg, out, Execution::Parallel, threads_from_env(), progress) {
        Ok(_) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            error_exit_code(&err)
        }
    }
}
