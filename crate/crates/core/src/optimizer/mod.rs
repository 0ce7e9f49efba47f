//! Coupling synthesis: multistart simplex search over the harmonic
//! coefficients, plus the constant-coupling baseline and parameter sweeps.
//!
//! The search variables are `a[1..=2p]`; `a0` is eliminated so that
//! `J(tau_T) = 0` holds exactly, and `0 <= J <= jmax` enters as a quadratic
//! penalty whose weight is doubled until a fine-grid audit passes.

mod baseline;
pub mod nelder_mead;
mod sweep;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    final_two_photon, g2_equal_time, simulate, uniform_grid, Amplitudes, InitialState, OnePhotonVector,
    SystemParams, TwoPhotonVector, DEFAULT_STEP,
};
use crate::error::{Error, Result};
use crate::waveform::{Coupling, HarmonicCoupling};

pub use baseline::{baseline_constant, Baseline, BaselineOptions};
pub use nelder_mead::{NelderMeadOptions, NelderMeadResult};
pub use sweep::{robustness_sweep, sweep_duration_harmonics, RobustnessPoint, SweepCell, SweepTable};

/// Box tolerance of the final feasibility audit, in units of `max(1, jmax)`.
pub const AUDIT_TOLERANCE: f64 = 1e-6;
/// Largest accepted relative change of `g2(T, T)` when the step is halved.
pub const STEP_HALVING_TOLERANCE: f64 = 1e-6;
/// `g2(T, T)` values below this are zero at the working step (the two-quantum
/// occupation is then under the integrator's absolute error squared), so the
/// step-halving comparison is skipped for them.
pub const G2_ROUNDOFF_FLOOR: f64 = 1e-14;
const MAX_PENALTY_DOUBLINGS: usize = 40;

fn default_alpha1() -> f64 {
    0.1
}
fn default_restarts() -> usize {
    32
}
fn default_step() -> f64 {
    DEFAULT_STEP
}
fn default_max_evals() -> usize {
    3000
}
fn default_box_grid() -> usize {
    2000
}
fn default_audit_grid() -> usize {
    20000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationProblem {
    pub params: SystemParams,
    pub z0: f64,
    #[serde(default = "default_alpha1")]
    pub alpha1: f64,
    #[serde(rename = "tau_T")]
    pub tau_t: f64,
    pub p: usize,
    /// Box-penalty multiplier; `1e3 / jmax^2` when absent.
    #[serde(default)]
    pub penalty_weight: Option<f64>,
    /// Number of random starts.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Objective evaluations allowed for the first descent of each start.
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    /// Extra starts taken from known waveforms (padded with zeros when they
    /// have fewer harmonics than `p`).
    #[serde(default)]
    pub warm_starts: Vec<HarmonicCoupling>,
    #[serde(default = "default_box_grid")]
    pub box_grid: usize,
    #[serde(default = "default_audit_grid")]
    pub audit_grid: usize,
}

impl OptimizationProblem {
    /// Problem with default search settings.
    pub fn new(params: SystemParams, alpha1: f64, z0: f64, tau_t: f64, p: usize) -> Self {
        Self {
            params,
            z0,
            alpha1,
            tau_t,
            p,
            penalty_weight: None,
            restarts: default_restarts(),
            seed: 0,
            step: DEFAULT_STEP,
            max_evals: default_max_evals(),
            warm_starts: Vec::new(),
            box_grid: default_box_grid(),
            audit_grid: default_audit_grid(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.tau_t > 0.0 && self.tau_t.is_finite()) {
            return bad(format!("tau_T must be positive, got {}", self.tau_t));
        }
        if self.p == 0 {
            return bad("p must be >= 1".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be >= 1".into());
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if self.box_grid < 100 || self.audit_grid < 100 {
            return bad("box grids need at least 100 points".into());
        }
        if let Some(w) = self.penalty_weight {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("penalty_weight must be positive, got {w}"));
            }
        }
        for w in &self.warm_starts {
            w.validate()?;
        }
        self.initial().map(|_| ())
    }

    pub fn initial(&self) -> Result<(InitialState, OnePhotonVector, TwoPhotonVector)> {
        InitialState::from_imbalance(self.alpha1, self.z0)
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight.unwrap_or_else(|| 1e3 / (self.params.jmax * self.params.jmax).max(f64::MIN_POSITIVE))
    }

    /// Objective of the zero waveform, `((1 + z0) / 2)^2`.
    pub fn zero_objective(&self) -> f64 {
        TwoPhotonVector::from_imbalance(self.z0).occupation_20()
    }

    fn audit_tolerance(&self) -> f64 {
        AUDIT_TOLERANCE * self.params.jmax.max(1.0)
    }
}

/// `x1^2 + x2^2` at `tau_T` plus the weighted box penalty.
pub fn objective(c: &HarmonicCoupling, problem: &OptimizationProblem) -> Result<f64> {
    let eval = Evaluator::new(problem)?;
    let (occ, viol) = eval.terms(c)?;
    Ok(occ + problem.penalty_weight() * viol)
}

/// Problem data reused across objective evaluations.
struct Evaluator<'a> {
    problem: &'a OptimizationProblem,
    two0: TwoPhotonVector,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a OptimizationProblem) -> Result<Self> {
        let (_, _, two0) = problem.initial()?;
        Ok(Self { problem, two0 })
    }

    fn occupation(&self, c: &HarmonicCoupling, step: f64) -> Result<f64> {
        let pr = &self.problem;
        final_two_photon(self.two0, c, pr.params.u1, pr.params.u2, pr.tau_t, step).map(|x| x.occupation_20())
    }

    /// `(occupation, box violation on the search grid)`.
    fn terms(&self, c: &HarmonicCoupling) -> Result<(f64, f64)> {
        Ok((self.occupation(c, self.problem.step)?, c.box_violation(self.problem.box_grid)?))
    }

    fn coupling(&self, free: &[f64]) -> Result<HarmonicCoupling> {
        HarmonicCoupling::from_free(free, self.problem.tau_t, self.problem.params.jmax)
    }

    fn feasible(&self, c: &HarmonicCoupling) -> bool {
        let (lo, hi) = c.range_on_grid(self.problem.audit_grid);
        let tol = self.problem.audit_tolerance();
        lo >= -tol && hi <= self.problem.params.jmax + tol
    }
}

/// Result of one local search.
#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    index: usize,
    free: Vec<f64>,
    occupation: f64,
    box_residual: f64,
    feasible: bool,
    evals: usize,
    weight: f64,
}

fn local_search(eval: &Evaluator, index: usize, start: &[f64], scale: &[f64]) -> Result<Candidate> {
    let pr = eval.problem;
    let mut weight = pr.penalty_weight();
    let mut x = start.to_vec();
    let mut evals = 0;
    let mut scale = scale.to_vec();
    let mut budget = pr.max_evals;
    let mut feasible = false;
    let mut failure = None;
    for _ in 0..=MAX_PENALTY_DOUBLINGS {
        // a few simplex restarts from the incumbent until progress stalls
        let mut f_prev = f64::INFINITY;
        for _ in 0..4 {
            let f = |free: &[f64]| match eval.coupling(free).and_then(|c| eval.terms(&c)) {
                Ok((occ, viol)) => occ + weight * viol,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            };
            let opts = NelderMeadOptions { max_evals: budget, f_tol: 1e-10, f_abs: 1e-300, x_tol: 1e-10 };
            let r = nelder_mead::minimize(f, &x, &scale, &opts);
            evals += r.evals;
            x = r.x;
            let stalled = r.f >= f_prev * (1.0 - 1e-4);
            f_prev = r.f;
            if stalled || evals >= 4 * pr.max_evals {
                break;
            }
            for (s, xi) in scale.iter_mut().zip(&x) {
                *s = (0.05 * xi.abs()).max(1e-3 * pr.params.jmax.max(1.0) / pr.tau_t);
            }
        }
        if eval.feasible(&eval.coupling(&x)?) {
            feasible = true;
            break;
        }
        weight *= 2.0;
        budget = (pr.max_evals / 4).max(200);
        for s in scale.iter_mut() {
            *s *= 0.1;
        }
    }
    let c = eval.coupling(&x)?;
    let occupation = match eval.occupation(&c, pr.step) {
        Ok(v) => v,
        Err(e) => return Err(failure.unwrap_or(e)),
    };
    Ok(Candidate {
        index,
        free: x,
        occupation,
        box_residual: c.box_violation(pr.audit_grid)?,
        feasible,
        evals,
        weight,
    })
}

/// Free coefficients of a warm-start record, adapted to `p` harmonics.
fn warm_free(record: &HarmonicCoupling, p: usize) -> Option<Vec<f64>> {
    (record.p <= p).then(|| {
        let mut free = record.free().to_vec();
        free.resize(2 * p, 0.0);
        free
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_coefficients: HarmonicCoupling,
    /// `x1^2 + x2^2` at `tau_T`, recomputed at half the search step.
    pub objective: f64,
    #[serde(rename = "g2_at_T")]
    pub g2_at_t: f64,
    /// Fine-grid integrated squared box excursion.
    pub box_residual: f64,
    #[serde(rename = "jT_residual")]
    pub jt_residual: f64,
    /// Minimum and maximum of `J` on the audit grid.
    pub j_range: [f64; 2],
    /// `(tau, g2(tau, tau))`; `None` where mode 1 is empty.
    pub g2_trace: Vec<(f64, Option<f64>)>,
    /// Constant `J = jmax` reference: `(min g2, argmin tau)`.
    pub baseline: Option<(f64, f64)>,
    pub evaluations: usize,
    /// Whether the search beat the zero waveform.
    pub improved: bool,
    pub final_penalty_weight: f64,
    pub warnings: Vec<String>,
}

/// Default end of the reported g2 trace past the horizon.
pub const TRACE_EXTENSION: f64 = 0.5;
const TRACE_POINTS_PER_UNIT: usize = 100;

pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationReport> {
    problem.validate()?;
    let eval = Evaluator::new(problem)?;
    let dim = 2 * problem.p;
    let mut warnings = Vec::new();

    let (best, evaluations, weight) = if problem.params.jmax == 0.0 {
        warnings.push("jmax = 0 forces J = 0".to_string());
        (None, 0, problem.penalty_weight())
    } else {
        let box_scale = problem.params.jmax / problem.tau_t;
        let mut starts: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for record in &problem.warm_starts {
            match warm_free(record, problem.p) {
                Some(free) => {
                    let scale = free.iter().map(|v| (0.05 * v.abs()).max(0.1 * box_scale)).collect();
                    starts.push((free, scale));
                }
                None => warnings.push(format!("warm start with p = {} skipped for p = {}", record.p, problem.p)),
            }
        }
        for r in 0..problem.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
            rng.set_stream(r as u64);
            let free: Vec<f64> = (0..dim).map(|_| rng.random_range(-box_scale..=box_scale)).collect();
            starts.push((free, vec![0.5 * box_scale; dim]));
        }

        let results: Vec<Result<Candidate>> =
            starts.par_iter().enumerate().map(|(i, (x0, s))| local_search(&eval, i, x0, s)).collect();
        let mut evaluations = 0;
        let mut candidates = Vec::new();
        for r in results {
            match r {
                Ok(c) => {
                    evaluations += c.evals;
                    candidates.push(c);
                }
                Err(e) => warnings.push(format!("start failed: {e}")),
            }
        }
        let infeasible = candidates.iter().filter(|c| !c.feasible).count();
        if infeasible > 0 {
            warnings.push(format!("{infeasible} starts ended infeasible and were discarded"));
        }
        let best = candidates
            .into_iter()
            .filter(|c| c.feasible && c.occupation.is_finite())
            .min_by(|a, b| {
                a.occupation
                    .total_cmp(&b.occupation)
                    .then(a.box_residual.total_cmp(&b.box_residual))
                    .then(a.index.cmp(&b.index))
            });
        let weight = best.as_ref().map_or(problem.penalty_weight(), |c| c.weight);
        (best, evaluations, weight)
    };

    let zero = HarmonicCoupling::zero(problem.p, problem.tau_t, problem.params.jmax);
    let (coupling, improved) = match best {
        Some(c) if c.occupation < problem.zero_objective() => (eval.coupling(&c.free)?, true),
        Some(_) | None => {
            if problem.params.jmax > 0.0 {
                warnings.push("no start improved on the zero waveform".to_string());
            }
            (zero, false)
        }
    };
    build_report(problem, coupling, evaluations, improved, weight, warnings)
}

/// `g2(T, T)` of a fixed waveform for the problem's system and initial state.
pub fn g2_at_horizon(c: &HarmonicCoupling, problem: &OptimizationProblem, step: f64) -> Result<f64> {
    let (init, one, two) = problem.initial()?;
    let tr = simulate(&init.weights(), one, two, c, &problem.params, &[0.0, c.tau_t], step)?;
    g2_equal_time(&tr.amplitudes(tr.len() - 1))
}

fn build_report(
    problem: &OptimizationProblem,
    coupling: HarmonicCoupling,
    evaluations: usize,
    improved: bool,
    final_penalty_weight: f64,
    mut warnings: Vec<String>,
) -> Result<OptimizationReport> {
    let eval = Evaluator::new(problem)?;
    let fine_step = 0.5 * problem.step;
    let objective = eval.occupation(&coupling, fine_step)?;
    let g2_fine = g2_at_horizon(&coupling, problem, fine_step)?;
    let g2_search = g2_at_horizon(&coupling, problem, problem.step)?;
    let relative = (g2_fine - g2_search).abs() / g2_fine.abs().max(f64::MIN_POSITIVE);
    if relative > STEP_HALVING_TOLERANCE && g2_fine.abs().max(g2_search.abs()) > G2_ROUNDOFF_FLOOR {
        return Err(Error::NotConverged { coarse: g2_search, fine: g2_fine, relative });
    }

    let (lo, hi) = coupling.range_on_grid(problem.audit_grid);
    let tol = problem.audit_tolerance();
    if lo < -tol || hi > problem.params.jmax + tol {
        return Err(Error::InvalidParameter(format!(
            "reported waveform fails the box audit: J in [{lo}, {hi}], jmax = {}",
            problem.params.jmax
        )));
    }

    let trace_end = problem.tau_t + TRACE_EXTENSION;
    let grid = uniform_grid(trace_end, ((trace_end * TRACE_POINTS_PER_UNIT as f64).round() as usize).max(1));
    let (init, one, two) = problem.initial()?;
    let tr = simulate(&init.weights(), one, two, &coupling, &problem.params, &grid, problem.step)?;
    let g2_trace = tr.tau_grid.iter().copied().zip(tr.g2()).collect();

    let baseline = match baseline_constant(&problem.params, problem.alpha1, problem.z0, &BaselineOptions {
        step: problem.step,
        ..BaselineOptions::default()
    }) {
        Ok(b) => Some((b.min_g2, b.argmin_tau)),
        Err(e) => {
            warnings.push(format!("baseline unavailable: {e}"));
            None
        }
    };

    Ok(OptimizationReport {
        box_residual: coupling.box_violation(problem.audit_grid)?,
        jt_residual: coupling.end_residual(),
        j_range: [lo, hi],
        best_coefficients: coupling,
        objective,
        g2_at_t: g2_fine,
        g2_trace,
        baseline,
        evaluations,
        improved,
        final_penalty_weight,
        warnings,
    })
}

/// State of the junction at `tau` under a fixed waveform.
pub fn amplitudes_at<C: Coupling + ?Sized>(
    coupling: &C,
    problem: &OptimizationProblem,
    tau: f64,
    step: f64,
) -> Result<Amplitudes> {
    let (init, one, two) = problem.initial()?;
    let grid = if tau > 0.0 { vec![0.0, tau] } else { vec![0.0] };
    let tr = simulate(&init.weights(), one, two, coupling, &problem.params, &grid, step)?;
    Ok(tr.amplitudes(tr.len() - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::Constant;

    fn strong() -> OptimizationProblem {
        OptimizationProblem::new(SystemParams::symmetric(1.0, 5.0), 0.1, 1.0, 2.6, 3)
    }

    #[test]
    fn zero_waveform_objective() {
        let pr = strong();
        let c = HarmonicCoupling::zero(3, 2.6, 5.0);
        assert!((objective(&c, &pr).unwrap() - 1.0).abs() < 1e-12);
        let mut weak = pr.clone();
        weak.z0 = 0.95;
        assert!((objective(&c, &weak).unwrap() - 0.950625).abs() < 1e-12);
        assert!((weak.zero_objective() - 0.950625).abs() < 1e-15);
    }

    #[test]
    fn penalty_is_added() {
        let pr = strong();
        // ramp to 2 * 2.6 * 2 = 10.4 > 5, then closes through the harmonics
        let c = HarmonicCoupling::from_free(&[0.0, 4.0, 0.0, 0.0, 0.0, 0.0], 2.6, 5.0).unwrap();
        let eval = Evaluator::new(&pr).unwrap();
        let (occ, viol) = eval.terms(&c).unwrap();
        assert!(viol > 0.0);
        assert!((objective(&c, &pr).unwrap() - (occ + 1e3 / 25.0 * viol)).abs() < 1e-12);
    }

    #[test]
    fn objective_is_deterministic() {
        let pr = strong();
        let c = HarmonicCoupling::from_free(&[1.0, -0.5, 0.2, 0.3, 0.0, 0.1], 2.6, 5.0).unwrap();
        assert_eq!(objective(&c, &pr).unwrap().to_bits(), objective(&c, &pr).unwrap().to_bits());
    }

    #[test]
    fn zero_ceiling_returns_zero_waveform() {
        let mut pr = strong();
        pr.params.jmax = 0.0;
        pr.z0 = 0.95;
        let r = optimize(&pr).unwrap();
        assert!(!r.improved);
        assert!(r.best_coefficients.a.iter().all(|&a| a == 0.0));
        assert!((r.objective - 0.950625).abs() < 1e-12);
    }

    #[test]
    fn warm_start_padding() {
        let rec = HarmonicCoupling::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], 1.0, 1.0).unwrap();
        assert_eq!(warm_free(&rec, 3).unwrap(), vec![2.0, 3.0, 4.0, 5.0, 0.0, 0.0]);
        assert!(warm_free(&rec, 1).is_none());
    }

    #[test]
    fn invalid_problems_are_rejected() {
        let mut pr = strong();
        pr.p = 0;
        assert!(pr.validate().is_err());
        let mut pr = strong();
        pr.restarts = 0;
        assert!(pr.validate().is_err());
        let mut pr = strong();
        pr.z0 = -1.0;
        assert!(pr.validate().is_err());
    }

    #[test]
    fn amplitudes_at_zero_is_initial_state() {
        let pr = strong();
        let a = amplitudes_at(&Constant(3.0), &pr, 0.0, DEFAULT_STEP).unwrap();
        assert!((a.c10 - Amplitudes::coherent(0.1, 0.0).c10).norm() < 1e-16);
    }
}
