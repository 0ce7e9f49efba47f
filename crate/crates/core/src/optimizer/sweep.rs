use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{g2_at_horizon, optimize, OptimizationProblem};
use crate::error::{Error, Result};
use crate::waveform::HarmonicCoupling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    #[serde(rename = "tau_T")]
    pub tau_t: f64,
    pub p: usize,
    #[serde(rename = "g2_at_T")]
    pub g2_at_t: Option<f64>,
    pub objective: Option<f64>,
    pub error: Option<String>,
    pub best: Option<HarmonicCoupling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, tau_t: f64, p: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.p == p && (c.tau_t - tau_t).abs() < 1e-9)
    }

    /// `g2(p = lo) / g2(p = hi)` at a given duration.
    pub fn improvement(&self, tau_t: f64, lo: usize, hi: usize) -> Option<f64> {
        Some(self.cell(tau_t, lo)?.g2_at_t? / self.cell(tau_t, hi)?.g2_at_t?)
    }
}

/// One optimization per `(tau_T, p)`. Durations are visited in the given
/// order for each `p`, each cell warm-started from the previous cell's
/// waveform on top of the template's own warm starts. Failures are recorded
/// in the cell and the sweep continues.
pub fn sweep_duration_harmonics(template: &OptimizationProblem, taus: &[f64], ps: &[usize]) -> Result<SweepTable> {
    if taus.is_empty() || ps.is_empty() {
        return Err(Error::InvalidParameter("sweep lists must be non-empty".into()));
    }
    let rows: Vec<Vec<SweepCell>> = ps
        .par_iter()
        .map(|&p| {
            let mut prev: Option<HarmonicCoupling> = None;
            taus.iter()
                .map(|&tau_t| {
                    let mut problem = template.clone();
                    problem.tau_t = tau_t;
                    problem.p = p;
                    if let Some(prev) = &prev {
                        problem.warm_starts.push(prev.clone());
                    }
                    match optimize(&problem) {
                        Ok(r) => {
                            if r.improved {
                                prev = Some(r.best_coefficients.clone());
                            }
                            log::info!("sweep cell tau_T = {tau_t}, p = {p}: g2 = {:e}", r.g2_at_t);
                            SweepCell {
                                tau_t,
                                p,
                                g2_at_t: Some(r.g2_at_t),
                                objective: Some(r.objective),
                                error: None,
                                best: Some(r.best_coefficients),
                            }
                        }
                        Err(e) => {
                            log::warn!("sweep cell tau_T = {tau_t}, p = {p} failed: {e}");
                            SweepCell { tau_t, p, g2_at_t: None, objective: None, error: Some(e.to_string()), best: None }
                        }
                    }
                })
                .collect()
        })
        .collect();
    let table = SweepTable { cells: rows.into_iter().flatten().collect() };
    for &tau in taus {
        for w in ps.windows(2) {
            if let Some(gain) = table.improvement(tau, w[0], w[1]) {
                if gain >= 10.0 {
                    log::info!("tau_T = {tau}: p = {} improves on p = {} by {gain:.1}x", w[1], w[0]);
                }
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    /// `u2 / u1`.
    pub ratio: f64,
    pub u2: f64,
    #[serde(rename = "g2_at_T")]
    pub g2_at_t: f64,
}

/// Re-simulates a fixed waveform with `u2` scanned over `[lo, hi] * u1`.
pub fn robustness_sweep(
    c: &HarmonicCoupling,
    problem: &OptimizationProblem,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<Vec<RobustnessPoint>> {
    if points < 2 || !(hi > lo) {
        return Err(Error::InvalidParameter("robustness sweep needs >= 2 points and hi > lo".into()));
    }
    (0..points)
        .into_par_iter()
        .map(|i| {
            let ratio = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let mut pr = problem.clone();
            pr.params.u2 = ratio * problem.params.u1;
            Ok(RobustnessPoint { ratio, u2: pr.params.u2, g2_at_t: g2_at_horizon(c, &pr, problem.step)? })
        })
        .collect()
}
