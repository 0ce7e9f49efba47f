//! Configuration documents, run orchestration and the CSV/JSON writers
//! behind the `dynblockade` binary.
//!
//! Every numeric CSV cell is written in scientific notation with 12
//! significant digits; missing correlation values are written as `nan`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{g2_two_time, population_n1, simulate, uniform_grid, InitialState, SystemParams, DEFAULT_STEP};
use crate::error::Error;
use crate::optimizer::{
    self, amplitudes_at, baseline_constant, robustness_sweep, sweep_duration_harmonics, BaselineOptions,
    OptimizationProblem,
};
use crate::waveform::{Constant, Coupling, HarmonicCoupling};

/// Shipped reference waveforms (`example1`, `example2`).
pub const PRESET_DATA: &str = include_str!("../data/table1.json");

#[derive(Debug, Deserialize)]
struct PresetFile {
    #[allow(dead_code)]
    version: u32,
    #[allow(dead_code)]
    description: String,
    records: std::collections::BTreeMap<String, HarmonicCoupling>,
}

/// Looks up a shipped waveform record by name.
pub fn preset_waveform(name: &str) -> Result<HarmonicCoupling, CliError> {
    let file: PresetFile = serde_json::from_str(PRESET_DATA).expect("shipped preset data parses");
    file.records
        .get(name)
        .cloned()
        .ok_or_else(|| CliError::Validation(format!("unknown preset '{name}' (expected example1 or example2)")))
}

/// System, initial state and waveform of a named reference configuration.
pub fn preset_config(name: &str) -> Result<(SystemParams, InitialSpec, HarmonicCoupling), CliError> {
    let w = preset_waveform(name)?;
    let (u, z0) = match name {
        "example1" => (1.0, 1.0),
        "example2" => (2.0 * std::f64::consts::PI * 1e-2, 0.95),
        _ => unreachable!("preset_waveform validated the name"),
    };
    Ok((SystemParams::symmetric(u, w.jmax), InitialSpec { alpha1: 0.1, z0 }, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Replay,
    Optimize,
    Sweep,
    Baseline,
    Robustness,
    Twotime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub alpha1: f64,
    pub z0: f64,
}

/// Either a shipped preset name, a harmonic record, or `{"constant": J}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WaveformSpec {
    Preset(String),
    Harmonic(HarmonicCoupling),
    Constant { constant: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "tau_T")]
    pub tau_t: Vec<f64>,
    pub p: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSpec {
    #[serde(default = "lo")]
    pub lo: f64,
    #[serde(default = "hi")]
    pub hi: f64,
    #[serde(default = "points21")]
    pub points: usize,
}

fn lo() -> f64 {
    0.8
}
fn hi() -> f64 {
    1.2
}
fn points21() -> usize {
    21
}

impl Default for RobustnessSpec {
    fn default() -> Self {
        Self { lo: lo(), hi: hi(), points: points21() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoTimeSpec {
    /// Detection time; defaults to the waveform horizon.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "tau_max")]
    pub tau_max: f64,
    #[serde(default = "points201")]
    pub points: usize,
}

fn tau_max() -> f64 {
    2.0
}
fn points201() -> usize {
    201
}

impl Default for TwoTimeSpec {
    fn default() -> Self {
        Self { t: None, tau_max: tau_max(), points: points201() }
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub system: Option<SystemParams>,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub waveform: Option<WaveformSpec>,
    #[serde(default)]
    pub problem: Option<OptimizationProblem>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub step: Option<f64>,
    /// End of simulated traces; defaults to the horizon plus 0.5 (or 4 for constant couplings).
    #[serde(default)]
    pub tau_end: Option<f64>,
    #[serde(default = "trace_dt")]
    pub trace_dt: f64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub robustness: Option<RobustnessSpec>,
    #[serde(default)]
    pub twotime: Option<TwoTimeSpec>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn trace_dt() -> f64 {
    0.01
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            system: None,
            initial: None,
            waveform: None,
            problem: None,
            output: default_output(),
            seed: None,
            step: None,
            tau_end: None,
            trace_dt: trace_dt(),
            sweep: None,
            robustness: None,
            twotime: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Fills system, initial state and waveform from a named preset where
    /// the document leaves them unset.
    pub fn apply_preset(&mut self, name: &str) -> Result<(), CliError> {
        let (system, initial, w) = preset_config(name)?;
        self.system.get_or_insert(system);
        self.initial.get_or_insert(initial);
        self.waveform.get_or_insert(WaveformSpec::Harmonic(w.clone()));
        if self.problem.is_none() && matches!(self.mode, Mode::Optimize | Mode::Sweep | Mode::Robustness) {
            let mut pr = OptimizationProblem::new(system, initial.alpha1, initial.z0, w.tau_t, w.p);
            pr.warm_starts.push(w);
            self.problem = Some(pr);
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        self.step.or(self.problem.as_ref().map(|p| p.step)).unwrap_or(DEFAULT_STEP)
    }

    fn system(&self) -> Result<SystemParams, CliError> {
        let s = self
            .system
            .or(self.problem.as_ref().map(|p| p.params))
            .ok_or_else(|| missing(self.mode, "system"))?;
        s.validate()?;
        Ok(s)
    }

    fn initial(&self) -> Result<InitialSpec, CliError> {
        self.initial
            .or(self.problem.as_ref().map(|p| InitialSpec { alpha1: p.alpha1, z0: p.z0 }))
            .ok_or_else(|| missing(self.mode, "initial"))
    }

    fn waveform(&self) -> Result<Waveform, CliError> {
        match self.waveform.as_ref().ok_or_else(|| missing(self.mode, "waveform"))? {
            WaveformSpec::Preset(name) => Ok(Waveform::Harmonic(preset_waveform(name)?)),
            WaveformSpec::Harmonic(h) => {
                h.validate()?;
                Ok(Waveform::Harmonic(h.clone()))
            }
            WaveformSpec::Constant { constant } => {
                if !constant.is_finite() {
                    return Err(CliError::Validation("constant coupling must be finite".into()));
                }
                Ok(Waveform::Constant(Constant(*constant)))
            }
        }
    }

    /// Optimization problem with the document-level seed and step applied.
    fn problem(&self) -> Result<OptimizationProblem, CliError> {
        let mut pr = self.problem.clone().ok_or_else(|| missing(self.mode, "problem"))?;
        if let Some(seed) = self.seed {
            pr.seed = seed;
        }
        if let Some(step) = self.step {
            pr.step = step;
        }
        pr.validate()?;
        Ok(pr)
    }

    /// Checks that every field the mode needs is present and valid, without
    /// running anything.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.step() > 0.0 && self.step().is_finite()) {
            return Err(CliError::Validation(format!("step must be positive, got {}", self.step())));
        }
        if !(self.trace_dt > 0.0 && self.trace_dt.is_finite()) {
            return Err(CliError::Validation(format!("trace_dt must be positive, got {}", self.trace_dt)));
        }
        if let Some(t) = self.tau_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Validation(format!("tau_end must be positive, got {t}")));
            }
        }
        match self.mode {
            Mode::Simulate | Mode::Replay | Mode::Twotime => {
                self.system()?;
                let i = self.initial()?;
                InitialState::from_imbalance(i.alpha1, i.z0)?;
                let w = self.waveform()?;
                if self.mode != Mode::Simulate && !matches!(w, Waveform::Harmonic(_)) {
                    return Err(CliError::Validation(format!("{:?} mode needs a harmonic waveform", self.mode)));
                }
                if let Some(tt) = self.twotime {
                    if tt.points < 2 || !(tt.tau_max > 0.0) {
                        return Err(CliError::Validation("twotime needs points >= 2 and tau_max > 0".into()));
                    }
                }
            }
            Mode::Baseline => {
                self.system()?;
                let i = self.initial()?;
                InitialState::from_imbalance(i.alpha1, i.z0)?;
            }
            Mode::Optimize => {
                self.problem()?;
            }
            Mode::Sweep => {
                self.problem()?;
                let s = self.sweep.as_ref().ok_or_else(|| missing(self.mode, "sweep"))?;
                if s.tau_t.is_empty() || s.p.is_empty() {
                    return Err(CliError::Validation("sweep lists must be non-empty".into()));
                }
            }
            Mode::Robustness => {
                self.problem()?;
                if !matches!(self.waveform()?, Waveform::Harmonic(_)) {
                    return Err(CliError::Validation("robustness mode needs a harmonic waveform".into()));
                }
            }
        }
        Ok(())
    }
}

fn missing(mode: Mode, field: &str) -> CliError {
    CliError::Validation(format!("{mode:?} mode requires '{field}'"))
}

enum Waveform {
    Harmonic(HarmonicCoupling),
    Constant(Constant),
}

impl Waveform {
    fn as_coupling(&self) -> &dyn Coupling {
        match self {
            Waveform::Harmonic(h) => h,
            Waveform::Constant(c) => c,
        }
    }

    fn horizon(&self) -> Option<f64> {
        match self {
            Waveform::Harmonic(h) => Some(h.tau_t),
            Waveform::Constant(_) => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Numerical(Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::StepTooLarge { .. }
            | Error::PopulationVanished { .. }
            | Error::NoMinimumFound { .. }
            | Error::NotConverged { .. } => CliError::Numerical(e),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

/// Files written by a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
}

/// `x` in scientific notation with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), fmt_num)
}

pub const TRACE_HEADER: &str = "tau,J,N1,g2,c20_abs2,c10_abs2,c11_abs2";

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).expect("report types serialize");
        body.push('\n');
        self.write(name, &body)
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Trace CSV of a waveform from `tau = 0` to `tau_end`.
pub fn trace_csv(
    coupling: &dyn Coupling,
    params: &SystemParams,
    initial: &InitialSpec,
    tau_end: f64,
    dt: f64,
    step: f64,
) -> Result<String, CliError> {
    let (init, one, two) = InitialState::from_imbalance(initial.alpha1, initial.z0)?;
    let n = ((tau_end / dt).round() as usize).max(1);
    let tr = simulate(&init.weights(), one, two, coupling, params, &uniform_grid(tau_end, n), step)?;
    let mut body = String::with_capacity(tr.len() * 130);
    body.push_str(TRACE_HEADER);
    body.push('\n');
    for i in 0..tr.len() {
        let t = tr.tau_grid[i];
        let a = tr.amplitudes(i);
        let g2 = crate::dynamics::g2_equal_time(&a).ok();
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{}",
            fmt_num(t),
            fmt_num(coupling.value(t)),
            fmt_num(population_n1(&a)),
            fmt_opt(g2),
            fmt_num(a.c20.norm_sqr()),
            fmt_num(a.c10.norm_sqr()),
            fmt_num(a.c11.norm_sqr())
        );
    }
    Ok(body)
}

#[derive(Debug, Serialize)]
struct ReplaySummary {
    #[serde(rename = "tau_T")]
    tau_t: Option<f64>,
    #[serde(rename = "g2_at_T")]
    g2_at_t: Option<f64>,
    #[serde(rename = "N1_at_T")]
    n1_at_t: Option<f64>,
    #[serde(rename = "jT_residual")]
    jt_residual: Option<f64>,
    j_range: Option<[f64; 2]>,
    box_residual: Option<f64>,
    step: f64,
}

/// Runs a validated configuration and writes its data files.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let step = config.step();
    let mut out = Writer::new(&config.output)?;
    match config.mode {
        Mode::Simulate | Mode::Replay => {
            let system = config.system()?;
            let initial = config.initial()?;
            let w = config.waveform()?;
            let tau_end = config.tau_end.unwrap_or_else(|| w.horizon().map_or(4.0, |t| t + 0.5));
            let trace = trace_csv(w.as_coupling(), &system, &initial, tau_end, config.trace_dt, step)?;
            out.write("trace.csv", &trace)?;
            let summary = match &w {
                Waveform::Harmonic(h) => {
                    let pr = OptimizationProblem::new(system, initial.alpha1, initial.z0, h.tau_t, h.p);
                    let a = amplitudes_at(h, &pr, h.tau_t, step)?;
                    let (lo, hi) = h.range_on_grid(20000);
                    ReplaySummary {
                        tau_t: Some(h.tau_t),
                        g2_at_t: crate::dynamics::g2_equal_time(&a).ok(),
                        n1_at_t: Some(population_n1(&a)),
                        jt_residual: Some(h.end_residual()),
                        j_range: Some([lo, hi]),
                        box_residual: Some(h.box_violation(20000)?),
                        step,
                    }
                }
                Waveform::Constant(_) => ReplaySummary {
                    tau_t: None,
                    g2_at_t: None,
                    n1_at_t: None,
                    jt_residual: None,
                    j_range: None,
                    box_residual: None,
                    step,
                },
            };
            out.json("summary.json", &summary)?;
        }
        Mode::Optimize => {
            let pr = config.problem()?;
            let report = optimizer::optimize(&pr)?;
            let initial = InitialSpec { alpha1: pr.alpha1, z0: pr.z0 };
            let tau_end = config.tau_end.unwrap_or(pr.tau_t + optimizer::TRACE_EXTENSION);
            let trace =
                trace_csv(&report.best_coefficients, &pr.params, &initial, tau_end, config.trace_dt, pr.step)?;
            out.json("report.json", &report)?;
            out.write("trace.csv", &trace)?;
        }
        Mode::Sweep => {
            let pr = config.problem()?;
            let spec = config.sweep.as_ref().expect("validated");
            let table = sweep_duration_harmonics(&pr, &spec.tau_t, &spec.p)?;
            let rows = table.cells.iter().map(|c| {
                vec![
                    fmt_num(c.tau_t),
                    c.p.to_string(),
                    fmt_opt(c.g2_at_t),
                    fmt_opt(c.objective),
                    c.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
                ]
            });
            out.write("sweep.csv", &csv("tau_T,p,g2_at_T,objective,error", rows))?;
            out.json("sweep.json", &table)?;
        }
        Mode::Baseline => {
            let system = config.system()?;
            let initial = config.initial()?;
            let opts = BaselineOptions { step, window: config.tau_end.unwrap_or(4.0), ..Default::default() };
            let b = baseline_constant(&system, initial.alpha1, initial.z0, &opts)?;
            let trace = trace_csv(&Constant(system.jmax), &system, &initial, opts.window, config.trace_dt, step)?;
            #[derive(Serialize)]
            struct Summary {
                jmax: f64,
                min_g2: f64,
                argmin_tau: f64,
            }
            out.json("baseline.json", &Summary { jmax: system.jmax, min_g2: b.min_g2, argmin_tau: b.argmin_tau })?;
            out.write("trace.csv", &trace)?;
        }
        Mode::Robustness => {
            let pr = config.problem()?;
            let Waveform::Harmonic(h) = config.waveform()? else { unreachable!("validated") };
            let spec = config.robustness.unwrap_or_default();
            let pts = robustness_sweep(&h, &pr, spec.lo, spec.hi, spec.points)?;
            let rows = pts.iter().map(|p| vec![fmt_num(p.ratio), fmt_num(p.u2), fmt_num(p.g2_at_t)]);
            out.write("robustness.csv", &csv("u2_over_u1,u2,g2_at_T", rows))?;
        }
        Mode::Twotime => {
            let system = config.system()?;
            let initial = config.initial()?;
            let Waveform::Harmonic(h) = config.waveform()? else { unreachable!("validated") };
            let spec = config.twotime.unwrap_or_default();
            let t = spec.t.unwrap_or(h.tau_t);
            let pr = OptimizationProblem::new(system, initial.alpha1, initial.z0, h.tau_t, h.p);
            let at_t = amplitudes_at(&h, &pr, t, step)?;
            let rows = uniform_grid(spec.tau_max, spec.points - 1)
                .into_iter()
                .map(|tau| Ok(vec![fmt_num(tau), fmt_num(g2_two_time(&at_t, t, tau, &h)?)]))
                .collect::<Result<Vec<_>, Error>>()?;
            out.write("twotime.csv", &csv("tau,g2_two_time", rows))?;
        }
    }
    Ok(RunOutcome { files: out.files })
}
