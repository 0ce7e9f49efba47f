//! Josephson coupling waveforms.
//!
//! The optimized coupling is written through its derivative,
//!
//! ```text
//! dJ/dtau = a0 + sum_{k=1..p} ( a_{2k-1} cos(k tau) + a_{2k} sin(k tau) ),
//! ```
//!
//! integrated in closed form from `J(0) = 0` and switched off (`J = 0`) for
//! `tau >= tau_T`. The harmonic basis has the fixed period `2 pi` in `tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A coupling waveform `J(tau)` in units of kappa.
pub trait Coupling: Sync {
    /// Right-continuous value at `tau`.
    fn value(&self, tau: f64) -> f64;

    /// Left limit at `tau`. Integrators use it for the last stage of a step
    /// that ends on a breakpoint, so a jump is never straddled.
    fn left_value(&self, tau: f64) -> f64 {
        self.value(tau)
    }

    /// Points in `(0, tau_end)` where the waveform may be discontinuous.
    fn breakpoints(&self, _tau_end: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Time after which the waveform is identically zero, if there is one.
    fn support_end(&self) -> Option<f64> {
        None
    }
}

/// `J(tau) = j` for all `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constant(pub f64);

impl Coupling for Constant {
    fn value(&self, _tau: f64) -> f64 {
        self.0
    }

    fn support_end(&self) -> Option<f64> {
        (self.0 == 0.0).then_some(0.0)
    }
}

/// Wraps a closure as a coupling. Used for smooth test waveforms.
pub struct FnCoupling<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> Coupling for FnCoupling<F> {
    fn value(&self, tau: f64) -> f64 {
        (self.0)(tau)
    }
}

/// Piecewise-constant coupling on `[edges[i], edges[i+1])`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Staircase {
    edges: Vec<f64>,
    values: Vec<f64>,
}

impl Staircase {
    /// `edges` must start at 0 and increase strictly; `values.len() + 1 == edges.len()`.
    pub fn new(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let tau_end = edges.last().copied().unwrap_or(0.0);
        if edges.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::SegmentGap {
                tau_end,
                reason: format!("{} edges for {} values", edges.len(), values.len()),
            });
        }
        if edges[0] != 0.0 {
            return Err(Error::SegmentGap { tau_end, reason: format!("first edge is {}, not 0", edges[0]) });
        }
        if let Some(w) = edges.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::SegmentGap {
                tau_end,
                reason: format!("edges not increasing at {} -> {}", w[0], w[1]),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite staircase value".into()));
        }
        Ok(Self { edges, values })
    }

    /// `n` equal segments on `[0, tau_end]`.
    pub fn uniform(tau_end: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        let edges = (0..=n).map(|i| tau_end * i as f64 / n as f64).collect();
        Self::new(edges, values)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Segments as `(start, end, value)`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.edges.windows(2).zip(&self.values).map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn duration(&self) -> f64 {
        *self.edges.last().expect("validated non-empty")
    }
}

impl Coupling for Staircase {
    fn value(&self, tau: f64) -> f64 {
        if tau < 0.0 || tau >= self.duration() {
            return 0.0;
        }
        // last edge <= tau
        let i = self.edges.partition_point(|&e| e <= tau) - 1;
        self.values[i]
    }

    fn left_value(&self, tau: f64) -> f64 {
        if tau <= 0.0 || tau > self.duration() {
            return 0.0;
        }
        // first edge >= tau closes the segment
        let i = self.edges.partition_point(|&e| e < tau) - 1;
        self.values[i]
    }

    fn breakpoints(&self, tau_end: f64) -> Vec<f64> {
        self.edges.iter().copied().filter(|&e| e > 0.0 && e < tau_end).collect()
    }

    fn support_end(&self) -> Option<f64> {
        let last = self.values.iter().rposition(|&v| v != 0.0);
        Some(last.map_or(0.0, |i| self.edges[i + 1]))
    }
}

/// Antiderivative of a truncated harmonic series, switched off at `tau_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicCoupling {
    /// Number of harmonics.
    pub p: usize,
    /// `a[0] .. a[2p]`.
    pub a: Vec<f64>,
    #[serde(rename = "tau_T")]
    pub tau_t: f64,
    pub jmax: f64,
}

impl HarmonicCoupling {
    pub fn new(a: Vec<f64>, tau_t: f64, jmax: f64) -> Result<Self> {
        if a.len() < 3 || a.len() % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "harmonic coefficient vector must have length 2p+1 with p >= 1, got {}",
                a.len()
            )));
        }
        let c = Self { p: (a.len() - 1) / 2, a, tau_t, jmax };
        c.validate()?;
        Ok(c)
    }

    /// Builds the waveform from `a[1..=2p]`, choosing `a0` so that `J(tau_T) = 0`.
    pub fn from_free(free: &[f64], tau_t: f64, jmax: f64) -> Result<Self> {
        if tau_t <= 0.0 {
            return Err(Error::InvalidParameter(format!("tau_T must be positive, got {tau_t}")));
        }
        let mut a = Vec::with_capacity(free.len() + 1);
        a.push(eliminate_a0(free, tau_t));
        a.extend_from_slice(free);
        Self::new(a, tau_t, jmax)
    }

    /// The all-zero waveform with `p` harmonics.
    pub fn zero(p: usize, tau_t: f64, jmax: f64) -> Self {
        Self { p, a: vec![0.0; 2 * p + 1], tau_t, jmax }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.a.len() != 2 * self.p + 1 {
            return Err(Error::InvalidParameter(format!(
                "p = {} needs {} coefficients, got {}",
                self.p,
                2 * self.p + 1,
                self.a.len()
            )));
        }
        if !(self.tau_t > 0.0 && self.tau_t.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau_T must be positive, got {}", self.tau_t)));
        }
        if !(self.jmax >= 0.0 && self.jmax.is_finite()) {
            return Err(Error::InvalidParameter(format!("jmax must be >= 0, got {}", self.jmax)));
        }
        if self.a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite harmonic coefficient".into()));
        }
        Ok(())
    }

    /// `a[1..=2p]`, the coefficients left free once `a0` is eliminated.
    pub fn free(&self) -> &[f64] {
        &self.a[1..]
    }

    /// Closed-form antiderivative, without the switch-off at `tau_T`.
    pub fn series(&self, tau: f64) -> f64 {
        self.a[0] * tau + harmonic_integral(&self.a[1..], tau)
    }

    /// `dJ/dtau` for `tau < tau_T`.
    pub fn derivative(&self, tau: f64) -> f64 {
        if tau >= self.tau_t {
            return 0.0;
        }
        let mut d = self.a[0];
        for (k, pair) in self.a[1..].chunks_exact(2).enumerate() {
            let kt = (k + 1) as f64 * tau;
            d += pair[0] * kt.cos() + pair[1] * kt.sin();
        }
        d
    }

    /// `|J(tau_T^-)|`, the residual of the end boundary condition.
    pub fn end_residual(&self) -> f64 {
        self.series(self.tau_t).abs()
    }

    /// Integrated squared excursion outside `[0, jmax]` on a uniform grid of
    /// `grid_points` points over `[0, tau_T]`, times the grid spacing.
    pub fn box_violation(&self, grid_points: usize) -> Result<f64> {
        if grid_points < 100 {
            return Err(Error::InvalidParameter(format!("box grid needs >= 100 points, got {grid_points}")));
        }
        let h = self.tau_t / (grid_points - 1) as f64;
        let sum: f64 = (0..grid_points)
            .map(|i| {
                let j = self.series(i as f64 * h);
                let lo = (-j).max(0.0);
                let hi = (j - self.jmax).max(0.0);
                lo * lo + hi * hi
            })
            .sum();
        Ok(sum * h)
    }

    /// Minimum and maximum of `J` on a uniform grid over `[0, tau_T]`.
    pub fn range_on_grid(&self, grid_points: usize) -> (f64, f64) {
        let n = grid_points.max(2);
        let h = self.tau_t / (n - 1) as f64;
        (0..n).map(|i| self.series(i as f64 * h)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
            (lo.min(j), hi.max(j))
        })
    }
}

impl Coupling for HarmonicCoupling {
    fn value(&self, tau: f64) -> f64 {
        if tau >= self.tau_t {
            0.0
        } else {
            self.series(tau)
        }
    }

    fn left_value(&self, tau: f64) -> f64 {
        if tau > self.tau_t {
            0.0
        } else {
            self.series(tau)
        }
    }

    fn breakpoints(&self, tau_end: f64) -> Vec<f64> {
        if self.tau_t < tau_end {
            vec![self.tau_t]
        } else {
            Vec::new()
        }
    }

    fn support_end(&self) -> Option<f64> {
        Some(self.tau_t)
    }
}

/// `sum_k a_{2k-1} sin(k tau)/k + a_{2k} (1 - cos(k tau))/k` for `free = a[1..]`.
fn harmonic_integral(free: &[f64], tau: f64) -> f64 {
    free.chunks_exact(2)
        .enumerate()
        .map(|(k, pair)| {
            let k = (k + 1) as f64;
            let (s, c) = (k * tau).sin_cos();
            (pair[0] * s + pair[1] * (1.0 - c)) / k
        })
        .sum()
}

/// The `a0` that makes `J(tau_T) = 0` given `a[1..=2p]`.
pub fn eliminate_a0(free: &[f64], tau_t: f64) -> f64 {
    -harmonic_integral(free, tau_t) / tau_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn zero_coefficients_give_zero_coupling() {
        let c = HarmonicCoupling::zero(3, 2.6, 5.0);
        for i in 0..50 {
            assert_eq!(c.value(i as f64 * 0.07), 0.0);
        }
        assert_eq!(c.box_violation(2000).unwrap(), 0.0);
    }

    #[test]
    fn pure_ramp() {
        let c = HarmonicCoupling::new(vec![1.5, 0.0, 0.0], 3.0, 5.0).unwrap();
        assert!((c.value(2.0) - 3.0).abs() < 1e-15);
        assert_eq!(c.value(3.0), 0.0);
        assert_eq!(c.value(10.0), 0.0);
        // 1.5 * 3 = 4.5 <= 5
        assert_eq!(c.box_violation(500).unwrap(), 0.0);
    }

    #[test]
    fn a0_over_full_period_is_zero() {
        assert!(eliminate_a0(&[0.0, 1.0], TAU).abs() < 1e-15);
    }

    #[test]
    fn a0_quarter_period() {
        assert!((eliminate_a0(&[1.0, 0.0], PI / 2.0) + 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn value_at_origin_is_exactly_zero() {
        let c = HarmonicCoupling::new(vec![3.0, -7.0, 2.5, 11.0, 0.25, -4.0, 9.0], 2.0, 1.0).unwrap();
        assert_eq!(c.value(0.0), 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let c = HarmonicCoupling::new(vec![258.3070, 15.5649, -432.1063, -236.09, -5.0417, 5.3701, 57.1314], 2.6, 5.0)
            .unwrap();
        let h = 1e-5;
        for i in 1..100 {
            let t = 0.025 * i as f64;
            let fd = (c.series(t + h) - c.series(t - h)) / (2.0 * h);
            // truncation ~ h^2 J''' / 6 with |J'''| <~ 1e3
            assert!((fd - c.derivative(t)).abs() < 1e-6 * (1.0 + c.derivative(t).abs()), "t={t}");
        }
    }

    #[test]
    fn left_value_keeps_the_jump() {
        let c = HarmonicCoupling::new(vec![1.0, 0.0, 0.0], 2.0, 5.0).unwrap();
        assert_eq!(c.value(2.0), 0.0);
        assert!((c.left_value(2.0) - 2.0).abs() < 1e-15);
        assert_eq!(c.breakpoints(3.0), vec![2.0]);
        assert!(c.breakpoints(2.0).is_empty());
    }

    #[test]
    fn box_violation_rejects_coarse_grid() {
        let c = HarmonicCoupling::zero(1, 1.0, 1.0);
        assert!(c.box_violation(99).is_err());
    }

    #[test]
    fn box_violation_detects_both_sides() {
        // J = 4 sin(tau): negative on (pi, 2pi), above 1 near pi/2
        let c = HarmonicCoupling::new(vec![0.0, 0.0, 4.0], 2.0 * PI, 1.0).unwrap();
        let v = c.box_violation(4000).unwrap();
        assert!(v > 1.0);
    }

    #[test]
    fn malformed_records_are_rejected() {
        assert!(HarmonicCoupling::new(vec![1.0, 2.0], 1.0, 1.0).is_err());
        assert!(HarmonicCoupling::new(vec![1.0, 2.0, 3.0], 0.0, 1.0).is_err());
        assert!(HarmonicCoupling::new(vec![1.0, 2.0, 3.0], 1.0, -1.0).is_err());
        let bad: std::result::Result<HarmonicCoupling, _> =
            serde_json::from_str(r#"{"p":1,"a":[0,0,0],"tau_T":1,"jmax":1,"extra":2}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn staircase_lookup() {
        let s = Staircase::new(vec![0.0, 1.0, 2.5], vec![3.0, -1.0]).unwrap();
        assert_eq!(s.value(0.0), 3.0);
        assert_eq!(s.value(1.0), -1.0);
        assert_eq!(s.left_value(1.0), 3.0);
        assert_eq!(s.left_value(2.5), -1.0);
        assert_eq!(s.value(2.5), 0.0);
        assert_eq!(s.support_end(), Some(2.5));
        assert_eq!(s.breakpoints(5.0), vec![1.0, 2.5]);
        assert!(Staircase::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(Staircase::new(vec![0.5, 1.0], vec![1.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn eliminated_waveform_closes_at_horizon(
            free in proptest::collection::vec(-500.0f64..500.0, 2..10usize),
            tau_t in 0.3f64..4.0,
        ) {
            let free = if free.len() % 2 == 1 { &free[..free.len() - 1] } else { &free[..] };
            let c = HarmonicCoupling::from_free(free, tau_t, 5.0).unwrap();
            let scale = 1.0 + free.iter().map(|x| x.abs()).sum::<f64>();
            proptest::prop_assert!(c.end_residual() < 1e-12 * scale);
            proptest::prop_assert_eq!(c.value(0.0), 0.0);
        }
    }
}
