//! Reference propagator: the effective non-Hermitian Hamiltonian built on an
//! explicit Fock basis and exponentiated segment by segment. It shares no
//! code with the Runge-Kutta path and is used to validate it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::Amplitudes;
use crate::error::{Error, Result};
use crate::waveform::Staircase;

/// Two-mode Fock states `|i j>` with an index map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    states: Vec<(usize, usize)>,
}

impl FockBasis {
    /// All `|i j>` with `i + j <= max_total`, ordered by total number then by
    /// decreasing `i`: `|00>, |10>, |01>, |20>, |11>, |02>, ...`.
    pub fn manifold(max_total: usize) -> Self {
        let states = (0..=max_total).flat_map(|n| (0..=n).rev().map(move |i| (i, n - i))).collect();
        Self { states }
    }

    /// All `|i j>` with `i, j <= cutoff`.
    pub fn per_mode(cutoff: usize) -> Self {
        let mut states: Vec<(usize, usize)> =
            (0..=cutoff).flat_map(|i| (0..=cutoff).map(move |j| (i, j))).collect();
        states.sort_by_key(|&(i, j)| (i + j, std::cmp::Reverse(i)));
        Self { states }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        self.states.iter().position(|&s| s == (i, j))
    }

    /// Embeds truncated amplitudes; states beyond two quanta start empty.
    pub fn embed(&self, a: &Amplitudes) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dim());
        let labelled = [((0, 0), a.c00), ((1, 0), a.c10), ((0, 1), a.c01), ((2, 0), a.c20), ((1, 1), a.c11), ((0, 2), a.c02)];
        for ((i, j), c) in labelled {
            if let Some(k) = self.index(i, j) {
                v[k] = c;
            }
        }
        v
    }

    /// Reads the two-quantum-truncated amplitudes back out.
    pub fn extract(&self, v: &DVector<Complex64>) -> Amplitudes {
        let get = |i, j| self.index(i, j).map_or(Complex64::new(0.0, 0.0), |k| v[k]);
        Amplitudes { c00: get(0, 0), c10: get(1, 0), c01: get(0, 1), c20: get(2, 0), c11: get(1, 1), c02: get(0, 2) }
    }

    /// Squared weight of `v` on states with more than two quanta.
    pub fn weight_above_two(&self, v: &DVector<Complex64>) -> f64 {
        self.states.iter().zip(v.iter()).filter(|((i, j), _)| i + j > 2).map(|(_, c)| c.norm_sqr()).sum()
    }
}

/// Rates entering the effective Hamiltonian, all in the same unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRates {
    pub u1: f64,
    pub u2: f64,
    pub kappa: f64,
}

/// `H_eff = sum_i U_i n_i (n_i - 1) + J (a1^+ a2 + a1 a2^+) - i kappa/2 sum_i n_i`
/// (resonance terms dropped).
pub fn build_heff(basis: &FockBasis, rates: &OracleRates, j: f64) -> DMatrix<Complex64> {
    let d = basis.dim();
    let mut h = DMatrix::zeros(d, d);
    for (col, &(n1, n2)) in basis.states().iter().enumerate() {
        let (f1, f2) = (n1 as f64, n2 as f64);
        h[(col, col)] = Complex64::new(
            rates.u1 * f1 * (f1 - 1.0) + rates.u2 * f2 * (f2 - 1.0),
            -0.5 * rates.kappa * (f1 + f2),
        );
        // a1^+ a2 |n1 n2> = sqrt((n1+1) n2) |n1+1, n2-1>
        if n2 > 0 {
            if let Some(row) = basis.index(n1 + 1, n2 - 1) {
                h[(row, col)] += Complex64::new(j * ((f1 + 1.0) * f2).sqrt(), 0.0);
            }
        }
        // a1 a2^+ |n1 n2> = sqrt(n1 (n2+1)) |n1-1, n2+1>
        if n1 > 0 {
            if let Some(row) = basis.index(n1 - 1, n2 + 1) {
                h[(row, col)] += Complex64::new(j * (f1 * (f2 + 1.0)).sqrt(), 0.0);
            }
        }
    }
    h
}

/// `exp(-i H_eff dtau)`.
pub fn segment_propagator(h: &DMatrix<Complex64>, dtau: f64) -> DMatrix<Complex64> {
    (h * Complex64::new(0.0, -dtau)).exp()
}

/// Propagates `psi0` through a piecewise-constant schedule that must tile
/// exactly `[0, tau_end]`.
pub fn propagate(
    basis: &FockBasis,
    rates: &OracleRates,
    psi0: &DVector<Complex64>,
    schedule: &Staircase,
    tau_end: f64,
) -> Result<DVector<Complex64>> {
    if psi0.len() != basis.dim() {
        return Err(Error::InvalidParameter(format!(
            "state has dimension {}, basis has {}",
            psi0.len(),
            basis.dim()
        )));
    }
    let covered = schedule.duration();
    if (covered - tau_end).abs() > 1e-12 * tau_end.max(1.0) {
        return Err(Error::SegmentGap { tau_end, reason: format!("schedule ends at {covered}") });
    }
    let mut psi = psi0.clone();
    for (start, end, j) in schedule.segments() {
        let u = segment_propagator(&build_heff(basis, rates, j), end - start);
        psi = u * psi;
    }
    Ok(psi)
}

/// Convenience wrapper on the six-state basis with normalized loss `kappa = 1`.
pub fn propagate_amplitudes(a0: &Amplitudes, u1: f64, u2: f64, schedule: &Staircase) -> Result<Amplitudes> {
    let basis = FockBasis::manifold(2);
    let rates = OracleRates { u1, u2, kappa: 1.0 };
    let psi = propagate(&basis, &rates, &basis.embed(a0), schedule, schedule.duration())?;
    Ok(basis.extract(&psi))
}
