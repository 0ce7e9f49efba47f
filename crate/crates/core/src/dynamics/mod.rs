//! Zero-, one- and two-quantum amplitude dynamics of the junction.
//!
//! Loss is uniform inside each photon-number manifold (`-i kappa/2` per
//! quantum), so the amplitudes factor into an analytic envelope times a
//! loss-free normalized vector:
//!
//! ```text
//! c10 = A1 e^{-tau/2} (y1 + i y2)    c01 = A1 e^{-tau/2} (y3 + i y4)
//! c20 = A2 e^{-tau}   (x1 + i x2)    c11 = A2 e^{-tau}   (x3 + i x4)
//! c02 = A2 e^{-tau}   (x5 + i x6)    c00 = const
//! ```
//!
//! Only the normalized vectors are integrated.

mod integrate;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::waveform::Coupling;

pub use integrate::{DEFAULT_STEP, NORM_DRIFT_PER_TAU};
pub(crate) use integrate::{merge_breakpoints, rk4_on_grid};

/// Hard ceiling on the total mean number of quanta.
pub const MAX_ALPHA_SQ: f64 = 0.1;
/// Above this the two-quantum truncation starts to lose accuracy; a warning is logged.
pub const WARN_ALPHA_SQ: f64 = 0.02;
/// Below this mode-1 population, correlation functions are not evaluated.
pub const N1_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Physical loss rate. It only fixes the time unit: every other rate here
    /// is already expressed in units of kappa and the dynamics use `tau = kappa t`.
    #[serde(default = "unit")]
    pub kappa: f64,
    pub u1: f64,
    pub u2: f64,
    pub jmax: f64,
}

fn unit() -> f64 {
    1.0
}

impl SystemParams {
    /// Equal nonlinearities `u` on both modes.
    pub fn symmetric(u: f64, jmax: f64) -> Self {
        Self { kappa: 1.0, u1: u, u2: u, jmax }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.jmax >= 0.0 && self.jmax.is_finite()) {
            return Err(Error::InvalidParameter(format!("jmax must be >= 0, got {}", self.jmax)));
        }
        if !self.u1.is_finite() || !self.u2.is_finite() {
            return Err(Error::InvalidParameter("nonlinearities must be finite".into()));
        }
        Ok(())
    }
}

/// Product of weak coherent states `|alpha1>|alpha2>` with real amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub alpha1: f64,
    pub alpha2: f64,
    /// `alpha1^2 + alpha2^2`.
    pub alpha_sq: f64,
    /// `(alpha1^2 - alpha2^2) / alpha_sq`.
    pub z0: f64,
    /// `e^{-alpha^2/2}`.
    pub c00: f64,
    /// One-quantum norm `e^{-alpha^2/2} alpha`.
    pub a1: f64,
    /// Two-quantum norm `e^{-alpha^2/2} alpha^2 / sqrt 2`.
    pub a2: f64,
}

impl InitialState {
    /// Mode-2 amplitude from `alpha1` and the imbalance `z0 in (-1, 1]`.
    pub fn from_imbalance(alpha1: f64, z0: f64) -> Result<(Self, OnePhotonVector, TwoPhotonVector)> {
        if !(z0 > -1.0 && z0 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "z0 must lie in (-1, 1] when alpha1 is given, got {z0}"
            )));
        }
        let alpha2 = alpha1.abs() * ((1.0 - z0) / (1.0 + z0)).sqrt();
        make_initial(alpha1, alpha2)
    }

    pub fn weights(&self) -> ManifoldWeights {
        ManifoldWeights { c00: Complex64::new(self.c00, 0.0), a1: self.a1, a2: self.a2 }
    }
}

/// Builds the coherent initial state and its normalized manifold vectors.
pub fn make_initial(alpha1: f64, alpha2: f64) -> Result<(InitialState, OnePhotonVector, TwoPhotonVector)> {
    if !alpha1.is_finite() || !alpha2.is_finite() {
        return Err(Error::InvalidParameter("coherent amplitudes must be finite".into()));
    }
    let alpha_sq = alpha1 * alpha1 + alpha2 * alpha2;
    if alpha_sq == 0.0 {
        return Err(Error::BothAmplitudesZero);
    }
    if alpha_sq > MAX_ALPHA_SQ {
        return Err(Error::ExcitationTooStrong { alpha_sq, limit: MAX_ALPHA_SQ });
    }
    if alpha_sq > WARN_ALPHA_SQ {
        log::warn!("alpha^2 = {alpha_sq} is not small; the two-quantum truncation may be inaccurate");
    }
    let alpha = alpha_sq.sqrt();
    let z0 = (alpha1 * alpha1 - alpha2 * alpha2) / alpha_sq;
    let c00 = (-0.5 * alpha_sq).exp();
    let state = InitialState { alpha1, alpha2, alpha_sq, z0, c00, a1: c00 * alpha, a2: c00 * alpha_sq / SQRT_2 };
    let one = OnePhotonVector([alpha1 / alpha, 0.0, alpha2 / alpha, 0.0]);
    // equals from_imbalance(z0) when alpha1 alpha2 >= 0, and keeps the sign of c11 otherwise
    let two = TwoPhotonVector([
        alpha1 * alpha1 / alpha_sq,
        0.0,
        SQRT_2 * alpha1 * alpha2 / alpha_sq,
        0.0,
        alpha2 * alpha2 / alpha_sq,
        0.0,
    ]);
    Ok((state, one, two))
}

/// Constant zero-quantum amplitude and the initial one/two-quantum norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldWeights {
    pub c00: Complex64,
    pub a1: f64,
    pub a2: f64,
}

impl ManifoldWeights {
    /// Splits arbitrary (complex) amplitudes into weights and normalized
    /// vectors. An empty manifold gets weight 0 and a unit placeholder vector.
    pub fn split(amps: &Amplitudes) -> (Self, OnePhotonVector, TwoPhotonVector) {
        let one = [amps.c10, amps.c01];
        let two = [amps.c20, amps.c11, amps.c02];
        let a1 = one.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let a2 = two.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let one = if a1 > 0.0 {
            OnePhotonVector::from_complex(one[0] / a1, one[1] / a1)
        } else {
            OnePhotonVector([1.0, 0.0, 0.0, 0.0])
        };
        let two = if a2 > 0.0 {
            TwoPhotonVector::from_complex(two[0] / a2, two[1] / a2, two[2] / a2)
        } else {
            TwoPhotonVector([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        };
        (Self { c00: amps.c00, a1, a2 }, one, two)
    }
}

/// Normalized `(Re c10, Im c10, Re c01, Im c01)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnePhotonVector(pub [f64; 4]);

impl OnePhotonVector {
    pub fn from_complex(c10: Complex64, c01: Complex64) -> Self {
        Self([c10.re, c10.im, c01.re, c01.im])
    }

    pub fn c10(&self) -> Complex64 {
        Complex64::new(self.0[0], self.0[1])
    }

    pub fn c01(&self) -> Complex64 {
        Complex64::new(self.0[2], self.0[3])
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

/// Normalized `(Re c20, Im c20, Re c11, Im c11, Re c02, Im c02)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonVector(pub [f64; 6]);

impl TwoPhotonVector {
    /// Initial vector of a coherent product state with imbalance `z0`.
    pub fn from_imbalance(z0: f64) -> Self {
        Self([(1.0 + z0) / 2.0, 0.0, ((1.0 - z0 * z0) / 2.0).max(0.0).sqrt(), 0.0, (1.0 - z0) / 2.0, 0.0])
    }

    pub fn from_complex(c20: Complex64, c11: Complex64, c02: Complex64) -> Self {
        Self([c20.re, c20.im, c11.re, c11.im, c02.re, c02.im])
    }

    pub fn c20(&self) -> Complex64 {
        Complex64::new(self.0[0], self.0[1])
    }

    pub fn c11(&self) -> Complex64 {
        Complex64::new(self.0[2], self.0[3])
    }

    pub fn c02(&self) -> Complex64 {
        Complex64::new(self.0[4], self.0[5])
    }

    /// `x1^2 + x2^2`, the normalized `|20>` occupation.
    pub fn occupation_20(&self) -> f64 {
        self.0[0] * self.0[0] + self.0[1] * self.0[1]
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

/// Physical amplitudes of the truncated state (resonance phases dropped).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Amplitudes {
    pub c00: Complex64,
    pub c10: Complex64,
    pub c01: Complex64,
    pub c20: Complex64,
    pub c11: Complex64,
    pub c02: Complex64,
}

impl Amplitudes {
    pub fn vacuum() -> Self {
        Self { c00: Complex64::new(1.0, 0.0), ..Self::default() }
    }

    /// Coherent product state truncated at two quanta.
    pub fn coherent(alpha1: f64, alpha2: f64) -> Self {
        let e = (-0.5 * (alpha1 * alpha1 + alpha2 * alpha2)).exp();
        let r = |x: f64| Complex64::new(e * x, 0.0);
        Self {
            c00: r(1.0),
            c10: r(alpha1),
            c01: r(alpha2),
            c20: r(alpha1 * alpha1 / SQRT_2),
            c11: r(alpha1 * alpha2),
            c02: r(alpha2 * alpha2 / SQRT_2),
        }
    }

    pub fn assemble(w: &ManifoldWeights, one: &OnePhotonVector, two: &TwoPhotonVector, tau: f64) -> Self {
        let e1 = w.a1 * (-0.5 * tau).exp();
        let e2 = w.a2 * (-tau).exp();
        Self {
            c00: w.c00,
            c10: one.c10() * e1,
            c01: one.c01() * e1,
            c20: two.c20() * e2,
            c11: two.c11() * e2,
            c02: two.c02() * e2,
        }
    }

    /// State after `delay` of free decay (coupling off).
    pub fn decayed(&self, delay: f64) -> Self {
        let e1 = (-0.5 * delay).exp();
        let e2 = (-delay).exp();
        Self {
            c00: self.c00,
            c10: self.c10 * e1,
            c01: self.c01 * e1,
            c20: self.c20 * e2,
            c11: self.c11 * e2,
            c02: self.c02 * e2,
        }
    }

    /// `(c00, c10, c01, c20, c11, c02)`.
    pub fn to_array(&self) -> [Complex64; 6] {
        [self.c00, self.c10, self.c01, self.c20, self.c11, self.c02]
    }

    pub fn from_array(c: [Complex64; 6]) -> Self {
        Self { c00: c[0], c10: c[1], c01: c[2], c20: c[3], c11: c[4], c02: c[5] }
    }
}

/// Mode-1 population `|c10|^2 + |c11|^2 + 2|c20|^2`.
pub fn population_n1(a: &Amplitudes) -> f64 {
    a.c10.norm_sqr() + a.c11.norm_sqr() + 2.0 * a.c20.norm_sqr()
}

/// Equal-time `g2 = 2|c20|^2 / N1^2` of mode 1.
pub fn g2_equal_time(a: &Amplitudes) -> Result<f64> {
    let n1 = population_n1(a);
    if !(n1 >= N1_FLOOR) {
        return Err(Error::PopulationVanished { n1, floor: N1_FLOOR });
    }
    Ok(2.0 * a.c20.norm_sqr() / (n1 * n1))
}

/// Two-time correlation `g2(t, t + tau)` of mode 1 from the state at `t`,
/// valid once the coupling has been switched off for good.
pub fn g2_two_time<C: Coupling + ?Sized>(at_t: &Amplitudes, t: f64, tau: f64, coupling: &C) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("delay must be >= 0, got {tau}")));
    }
    match coupling.support_end() {
        Some(end) if end <= t => {}
        _ => return Err(Error::CouplingActive { t }),
    }
    let n1 = population_n1(at_t);
    let later = population_n1(&at_t.decayed(tau));
    if !(n1 >= N1_FLOOR) || !(later >= N1_FLOOR) {
        return Err(Error::PopulationVanished { n1: n1.min(later), floor: N1_FLOOR });
    }
    Ok(2.0 * at_t.c20.norm_sqr() / (n1 * later * tau.exp()))
}

/// One-quantum state left in the junction after a mode-1 photodetection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub b10: Complex64,
    pub b01: Complex64,
}

impl ReducedState {
    /// Collapse of the state at the detection time.
    pub fn collapse(a: &Amplitudes) -> Result<Self> {
        let n1 = population_n1(a);
        if !(n1 >= N1_FLOOR) {
            return Err(Error::PopulationVanished { n1, floor: N1_FLOOR });
        }
        let s = n1.sqrt();
        Ok(Self { b10: a.c20 * SQRT_2 / s, b01: a.c11 / s })
    }

    /// Free decay by `delay` (coupling off).
    pub fn decayed(&self, delay: f64) -> Self {
        let e = (-0.5 * delay).exp();
        Self { b10: self.b10 * e, b01: self.b01 * e }
    }

    /// Evolves the reduced state from detection time `t` over `delay` under
    /// an arbitrary coupling, with one-quantum loss included.
    pub fn propagate<C: Coupling + ?Sized>(&self, coupling: &C, t: f64, delay: f64, step: f64) -> Result<Self> {
        let norm = (self.b10.norm_sqr() + self.b01.norm_sqr()).sqrt();
        if norm == 0.0 || delay == 0.0 {
            return Ok(*self);
        }
        let v0 = OnePhotonVector::from_complex(self.b10 / norm, self.b01 / norm);
        let shifted = Shifted { inner: coupling, offset: t };
        let v = evolve_one_photon(v0, &shifted, &[0.0, delay], step)?.last();
        let e = norm * (-0.5 * delay).exp();
        Ok(Self { b10: v.c10() * e, b01: v.c01() * e })
    }
}

/// Two-time correlation by explicit reduced-state propagation, valid for any
/// coupling (including one still active after `t`).
pub fn g2_two_time_propagated<C: Coupling + ?Sized>(
    init: &InitialState,
    coupling: &C,
    params: &SystemParams,
    t: f64,
    tau: f64,
    step: f64,
) -> Result<f64> {
    if !(t >= 0.0 && tau >= 0.0) {
        return Err(Error::InvalidParameter("detection time and delay must be >= 0".into()));
    }
    let (_, one, two) = make_initial(init.alpha1, init.alpha2)?;
    let grid: Vec<f64> = if t > 0.0 {
        if tau > 0.0 { vec![0.0, t, t + tau] } else { vec![0.0, t] }
    } else if tau > 0.0 {
        vec![0.0, tau]
    } else {
        vec![0.0]
    };
    let traj = simulate(&init.weights(), one, two, coupling, params, &grid, step)?;
    let at_t = traj.amplitudes_at(t).expect("t is on the grid");
    let later = traj.amplitudes_at(t + tau).expect("t + tau is on the grid");
    let b = ReducedState::collapse(&at_t)?.propagate(coupling, t, tau, step)?;
    let n1 = population_n1(&later);
    if !(n1 >= N1_FLOOR) {
        return Err(Error::PopulationVanished { n1, floor: N1_FLOOR });
    }
    Ok(b.b10.norm_sqr() / n1)
}

/// `J(offset + tau)`.
pub(crate) struct Shifted<'a, C: ?Sized> {
    pub inner: &'a C,
    pub offset: f64,
}

impl<C: Coupling + ?Sized> Coupling for Shifted<'_, C> {
    fn value(&self, tau: f64) -> f64 {
        self.inner.value(self.offset + tau)
    }

    fn left_value(&self, tau: f64) -> f64 {
        self.inner.left_value(self.offset + tau)
    }

    fn breakpoints(&self, tau_end: f64) -> Vec<f64> {
        self.inner
            .breakpoints(self.offset + tau_end)
            .into_iter()
            .map(|b| b - self.offset)
            .filter(|&b| b > 0.0 && b < tau_end)
            .collect()
    }

    fn support_end(&self) -> Option<f64> {
        self.inner.support_end().map(|e| (e - self.offset).max(0.0))
    }
}

#[inline]
fn one_photon_rhs(y: &[f64; 4], j: f64) -> [f64; 4] {
    [j * y[3], -j * y[2], j * y[1], -j * y[0]]
}

#[inline]
fn two_photon_rhs(x: &[f64; 6], j: f64, u1: f64, u2: f64) -> [f64; 6] {
    let sj = SQRT_2 * j;
    [
        2.0 * u1 * x[1] + sj * x[3],
        -2.0 * u1 * x[0] - sj * x[2],
        sj * (x[1] + x[5]),
        -sj * (x[0] + x[4]),
        sj * x[3] + 2.0 * u2 * x[5],
        -sj * x[2] - 2.0 * u2 * x[4],
    ]
}

/// States of a loss-free flow at the grid points (breakpoints included).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<V> {
    pub tau: Vec<f64>,
    pub states: Vec<V>,
}

impl<V: Copy> Trajectory<V> {
    pub fn last(&self) -> V {
        *self.states.last().expect("trajectory is never empty")
    }

    pub fn at(&self, tau: f64) -> Option<V> {
        self.tau.iter().position(|&t| t == tau).map(|i| self.states[i])
    }
}

/// Loss-free one-quantum flow `i d/dtau (c10, c01) = J sigma_x (c10, c01)`.
pub fn evolve_one_photon<C: Coupling + ?Sized>(
    v0: OnePhotonVector,
    coupling: &C,
    outputs: &[f64],
    step: f64,
) -> Result<Trajectory<OnePhotonVector>> {
    let grid = merge_breakpoints(outputs, coupling)?;
    let mut out = Trajectory { tau: Vec::with_capacity(grid.len()), states: Vec::with_capacity(grid.len()) };
    rk4_on_grid(v0.0, coupling, &grid, step, true, one_photon_rhs, |t, y| {
        out.tau.push(t);
        out.states.push(OnePhotonVector(*y));
    })?;
    Ok(out)
}

/// Loss-free two-quantum flow with per-mode nonlinearities `u1`, `u2`.
pub fn evolve_two_photon<C: Coupling + ?Sized>(
    v0: TwoPhotonVector,
    coupling: &C,
    u1: f64,
    u2: f64,
    outputs: &[f64],
    step: f64,
) -> Result<Trajectory<TwoPhotonVector>> {
    let grid = merge_breakpoints(outputs, coupling)?;
    let mut out = Trajectory { tau: Vec::with_capacity(grid.len()), states: Vec::with_capacity(grid.len()) };
    rk4_on_grid(v0.0, coupling, &grid, step, true, |x, j| two_photon_rhs(x, j, u1, u2), |t, x| {
        out.tau.push(t);
        out.states.push(TwoPhotonVector(*x));
    })?;
    Ok(out)
}

/// Two-quantum vector at `tau_end` without storing the path.
pub fn final_two_photon<C: Coupling + ?Sized>(
    v0: TwoPhotonVector,
    coupling: &C,
    u1: f64,
    u2: f64,
    tau_end: f64,
    step: f64,
) -> Result<TwoPhotonVector> {
    if !(tau_end >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau_end must be >= 0, got {tau_end}")));
    }
    if tau_end == 0.0 {
        return Ok(v0);
    }
    let grid = merge_breakpoints(&[0.0, tau_end], coupling)?;
    rk4_on_grid(v0.0, coupling, &grid, step, true, |x, j| two_photon_rhs(x, j, u1, u2), |_, _| {})
        .map(TwoPhotonVector)
}

/// Normalized one- and two-quantum vectors on a shared grid plus their envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldTrajectory {
    pub weights: ManifoldWeights,
    pub tau_grid: Vec<f64>,
    pub one_photon: Vec<OnePhotonVector>,
    pub two_photon: Vec<TwoPhotonVector>,
    /// `(e^{-tau/2}, e^{-tau})` per grid point.
    pub envelopes: Vec<(f64, f64)>,
}

impl ManifoldTrajectory {
    pub fn len(&self) -> usize {
        self.tau_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_grid.is_empty()
    }

    pub fn amplitudes(&self, i: usize) -> Amplitudes {
        Amplitudes::assemble(&self.weights, &self.one_photon[i], &self.two_photon[i], self.tau_grid[i])
    }

    pub fn amplitudes_at(&self, tau: f64) -> Option<Amplitudes> {
        self.tau_grid.iter().position(|&t| t == tau).map(|i| self.amplitudes(i))
    }

    pub fn n1(&self) -> Vec<f64> {
        (0..self.len()).map(|i| population_n1(&self.amplitudes(i))).collect()
    }

    /// Equal-time g2 per grid point; `None` where the population has vanished.
    pub fn g2(&self) -> Vec<Option<f64>> {
        (0..self.len()).map(|i| g2_equal_time(&self.amplitudes(i)).ok()).collect()
    }
}

/// Evolves both manifolds on `outputs` (plus coupling breakpoints).
pub fn simulate<C: Coupling + ?Sized>(
    weights: &ManifoldWeights,
    one: OnePhotonVector,
    two: TwoPhotonVector,
    coupling: &C,
    params: &SystemParams,
    outputs: &[f64],
    step: f64,
) -> Result<ManifoldTrajectory> {
    params.validate()?;
    let ones = evolve_one_photon(one, coupling, outputs, step)?;
    let twos = evolve_two_photon(two, coupling, params.u1, params.u2, outputs, step)?;
    debug_assert_eq!(ones.tau, twos.tau);
    let envelopes = ones.tau.iter().map(|&t| ((-0.5 * t).exp(), (-t).exp())).collect();
    Ok(ManifoldTrajectory {
        weights: *weights,
        tau_grid: ones.tau,
        one_photon: ones.states,
        two_photon: twos.states,
        envelopes,
    })
}

/// `n + 1` equally spaced points on `[0, tau_end]`.
pub fn uniform_grid(tau_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| if i == n { tau_end } else { tau_end * i as f64 / n as f64 }).collect()
}

/// Integrates the physical amplitudes directly, loss terms included. This
/// is the unfactored route; it exists to cross-check the envelope split.
pub fn evolve_amplitudes_direct<C: Coupling + ?Sized>(
    a0: &Amplitudes,
    coupling: &C,
    params: &SystemParams,
    tau_end: f64,
    step: f64,
) -> Result<Amplitudes> {
    params.validate()?;
    let (u1, u2) = (params.u1, params.u2);
    let c = a0.to_array();
    let x0: [f64; 10] = [
        c[1].re, c[1].im, c[2].re, c[2].im, c[3].re, c[3].im, c[4].re, c[4].im, c[5].re, c[5].im,
    ];
    let rhs = |x: &[f64; 10], j: f64| {
        let z = |k: usize| Complex64::new(x[2 * k], x[2 * k + 1]);
        let (c10, c01, c20, c11, c02) = (z(0), z(1), z(2), z(3), z(4));
        let mi = Complex64::new(0.0, -1.0);
        let sj = SQRT_2 * j;
        let d = [
            mi * (Complex64::new(0.0, -0.5) * c10 + j * c01),
            mi * (j * c10 + Complex64::new(0.0, -0.5) * c01),
            mi * (Complex64::new(2.0 * u1, -1.0) * c20 + sj * c11),
            mi * (sj * (c20 + c02) + Complex64::new(0.0, -1.0) * c11),
            mi * (sj * c11 + Complex64::new(2.0 * u2, -1.0) * c02),
        ];
        std::array::from_fn(|i| if i % 2 == 0 { d[i / 2].re } else { d[i / 2].im })
    };
    let grid = merge_breakpoints(&[0.0, tau_end], coupling)?;
    let x = rk4_on_grid(x0, coupling, &grid, step, false, rhs, |_, _| {})?;
    let z = |k: usize| Complex64::new(x[2 * k], x[2 * k + 1]);
    Ok(Amplitudes { c00: a0.c00, c10: z(0), c01: z(1), c20: z(2), c11: z(3), c02: z(4) })
}

#[cfg(test)]
mod tests;
