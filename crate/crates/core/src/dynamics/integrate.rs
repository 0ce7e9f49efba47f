//! Fixed-step classical Runge-Kutta on a grid of output times.
//!
//! Each output interval is split into the smallest number of equal steps not
//! exceeding the requested step, so every output time and every coupling
//! breakpoint is hit exactly.

use crate::error::{Error, Result};
use crate::waveform::Coupling;

/// Default integration step in units of `1/kappa`.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Allowed drift of the squared norm per unit time before the step is deemed too large.
pub const NORM_DRIFT_PER_TAU: f64 = 1e-8;

/// Sorted union of `outputs` and the coupling breakpoints inside `(0, tau_end)`.
pub(crate) fn merge_breakpoints<C: Coupling + ?Sized>(outputs: &[f64], coupling: &C) -> Result<Vec<f64>> {
    validate_grid(outputs)?;
    let tau_end = *outputs.last().expect("validated");
    let mut grid = outputs.to_vec();
    grid.extend(coupling.breakpoints(tau_end));
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.dedup();
    Ok(grid)
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::InvalidParameter("output grid must start at tau = 0".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("output grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn validate_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("integration step must be positive, got {step}")))
    }
}

fn norm_sq<const N: usize>(x: &[f64; N]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[inline]
fn axpy<const N: usize>(x: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| x[i] + a * k[i])
}

/// Integrates `dx/dtau = rhs(x, J(tau))` through the points of `grid`
/// (which must already contain the coupling breakpoints), calling `record`
/// at every grid point including the first. Returns the final state.
///
/// When `check_norm` is set the flow is assumed norm-preserving and a drift
/// beyond [`NORM_DRIFT_PER_TAU`] fails with [`Error::StepTooLarge`].
pub(crate) fn rk4_on_grid<const N: usize, C, F, R>(
    x0: [f64; N],
    coupling: &C,
    grid: &[f64],
    step: f64,
    check_norm: bool,
    rhs: F,
    mut record: R,
) -> Result<[f64; N]>
where
    C: Coupling + ?Sized,
    F: Fn(&[f64; N], f64) -> [f64; N],
    R: FnMut(f64, &[f64; N]),
{
    validate_step(step)?;
    let mut x = x0;
    record(grid[0], &x);
    let n0 = norm_sq(&x0);
    for w in grid.windows(2) {
        let (start, end) = (w[0], w[1]);
        let len = end - start;
        let n = ((len / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = len / n as f64;
        let mut j_start = coupling.value(start);
        for k in 0..n {
            let t = start + k as f64 * h;
            let last = k + 1 == n;
            let j_mid = coupling.value(t + 0.5 * h);
            let j_end = if last { coupling.left_value(end) } else { coupling.value(start + (k + 1) as f64 * h) };
            let k1 = rhs(&x, j_start);
            let k2 = rhs(&axpy(&x, 0.5 * h, &k1), j_mid);
            let k3 = rhs(&axpy(&x, 0.5 * h, &k2), j_mid);
            let k4 = rhs(&axpy(&x, h, &k3), j_end);
            x = std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]));
            j_start = j_end;
        }
        if check_norm {
            let drift = (norm_sq(&x) - n0).abs() / n0.max(f64::MIN_POSITIVE);
            let tolerance = NORM_DRIFT_PER_TAU * end.max(1.0);
            if !(drift <= tolerance) {
                return Err(Error::StepTooLarge { step, drift, tolerance });
            }
        }
        record(end, &x);
    }
    Ok(x)
}
