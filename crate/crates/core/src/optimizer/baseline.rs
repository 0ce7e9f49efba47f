use serde::{Deserialize, Serialize};

use crate::dynamics::{g2_equal_time, simulate, uniform_grid, InitialState, ManifoldWeights, SystemParams, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::waveform::Constant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineOptions {
    /// Simulated window `[0, window]`.
    pub window: f64,
    /// Spacing of the coarse scan.
    pub coarse_dt: f64,
    pub step: f64,
    /// Width of the final golden-section bracket.
    pub tau_tol: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self { window: 4.0, coarse_dt: 1e-3, step: DEFAULT_STEP, tau_tol: 1e-5 }
    }
}

/// Constant-coupling reference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub min_g2: f64,
    pub argmin_tau: f64,
    /// Coarse scan `(tau, g2)`, `None` where mode 1 is empty.
    pub trace: Vec<(f64, Option<f64>)>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Deepest interior minimum of `g2(t, t)` under `J = jmax` on the window,
/// refined by golden-section search around the best coarse sample.
pub fn baseline_constant(params: &SystemParams, alpha1: f64, z0: f64, opts: &BaselineOptions) -> Result<Baseline> {
    params.validate()?;
    if !(opts.window > 0.0 && opts.coarse_dt > 0.0 && opts.coarse_dt < opts.window) {
        return Err(Error::InvalidParameter("baseline window and scan spacing must be positive".into()));
    }
    let (init, one, two) = InitialState::from_imbalance(alpha1, z0)?;
    let coupling = Constant(params.jmax);
    let n = (opts.window / opts.coarse_dt).round() as usize;
    let tr = simulate(&init.weights(), one, two, &coupling, params, &uniform_grid(opts.window, n), opts.step)?;
    let g2 = tr.g2();

    let best = g2
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.map(|g| (i, g)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let i = match best {
        Some((i, _)) if i > 0 && i + 1 < g2.len() && g2[i - 1].is_some() && g2[i + 1].is_some() => i,
        _ => return Err(Error::NoMinimumFound { window: opts.window }),
    };

    // J is time independent, so g2 near the bracket follows from the state at its left edge
    let left = tr.tau_grid[i - 1];
    let (w, v1, v2) = ManifoldWeights::split(&tr.amplitudes(i - 1));
    let g2_after = |dt: f64| -> Result<f64> {
        if dt <= 0.0 {
            return g2_equal_time(&tr.amplitudes(i - 1));
        }
        let local = simulate(&w, v1, v2, &coupling, params, &[0.0, dt], opts.step)?;
        g2_equal_time(&local.amplitudes(1))
    };
    let (mut a, mut b) = (0.0, tr.tau_grid[i + 1] - left);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (g2_after(x1)?, g2_after(x2)?);
    while b - a > opts.tau_tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = g2_after(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = g2_after(x2)?;
        }
    }
    let (dt, min_g2) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let coarse_min = g2[i].expect("checked");
    let (argmin_tau, min_g2) = if min_g2 <= coarse_min { (left + dt, min_g2) } else { (tr.tau_grid[i], coarse_min) };

    let stride = ((0.01 / opts.coarse_dt).round() as usize).max(1);
    let trace = tr.tau_grid.iter().zip(&g2).step_by(stride).map(|(&t, &g)| (t, g)).collect();
    Ok(Baseline { min_g2, argmin_tau, trace })
}
