//! Bounded-budget Nelder-Mead simplex descent with dimension-adaptive
//! coefficients (Gao & Han, 2012).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when `f_max - f_min <= f_tol * |f_min| + f_abs` ...
    pub f_tol: f64,
    pub f_abs: f64,
    /// ... or when every vertex lies within `x_tol` (infinity norm) of the best.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 4000, f_tol: 1e-9, f_abs: 1e-300, x_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of edge
/// lengths `scale`. Non-finite objective values are treated as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], scale: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(n, scale.len());
    let evals = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    if n == 0 {
        let v = eval(x0);
        return NelderMeadResult { x: Vec::new(), f: v, evals: 1, converged: true };
    }

    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if scale[i] != 0.0 { scale[i] } else { 1e-3 };
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut converged = false;
    // vertices are compared by value; equal values keep insertion order
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    loop {
        order(&mut simplex);
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let spread_ok = worst - best <= opts.f_tol * best.abs() + opts.f_abs;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread_ok || size <= opts.x_tol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let centroid: Vec<f64> =
            (0..n).map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(alpha * beta);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(alpha * gamma);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-gamma);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x_best.iter().zip(&v.0).map(|(b, x)| b + delta * (x - b)).collect();
            let fx = eval(&x);
            *v = (x, fx);
        }
    }
    order(&mut simplex);
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult { x, f, evals: evals.get(), converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + 0.5 * (x[2] - 0.25).powi(2),
            &[0.0, 0.0, 0.0],
            &[0.5, 0.5, 0.5],
            &NelderMeadOptions { x_tol: 1e-10, f_tol: 1e-14, ..Default::default() },
        );
        assert!(r.converged);
        for (a, b) in r.x.iter().zip([1.0, -2.0, 0.25]) {
            assert!((a - b).abs() < 1e-6, "{:?}", r.x);
        }
    }

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.1, 0.1],
            &NelderMeadOptions { max_evals: 5000, x_tol: 1e-10, f_tol: 1e-14, ..Default::default() },
        );
        assert!(r.f < 1e-12, "{r:?}");
    }

    #[test]
    fn budget_is_respected() {
        let r = minimize(|x| x.iter().map(|v| v.abs()).sum(), &[5.0; 6], &[1.0; 6], &NelderMeadOptions {
            max_evals: 50,
            ..Default::default()
        });
        assert!(!r.converged);
        // an iteration started under budget adds at most two trial points plus a shrink
        assert!(r.evals <= 50 + 2 + 6);
    }

    #[test]
    fn nan_is_treated_as_worse() {
        let r = minimize(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) },
            &[1.0],
            &[0.5],
            &NelderMeadOptions::default(),
        );
        assert!((r.x[0] - 2.0).abs() < 1e-4);
    }
}
