//! Gradient-free hyperparameter optimization.
//!
//! Lengthscales are optimized in log-space with a Nelder–Mead simplex,
//! restarted from a Latin hypercube of starting points spanning
//! `[0.05 · range_j, 2 · range_j]` per dimension. The winner is the
//! restart with the best objective, ties broken by restart order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings for the multi-start Nelder–Mead search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of Latin-hypercube restarts.
    pub restarts: usize,
    /// Iteration cap per restart.
    pub max_iters: usize,
    /// Relative spread of simplex values at which a restart stops.
    pub ftol: f64,
    /// Seed for the restart Latin hypercube.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 250,
            ftol: 1e-10,
            seed: 0x0b5e,
        }
    }
}

/// One Nelder–Mead run from `x0`; minimizes `f`. Returns the best vertex.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_iters: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let fx0 = f(x0);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }

    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    };
    order(&mut simplex);

    for _ in 0..max_iters {
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if worst.is_finite() && (worst - best).abs() <= ftol * (best.abs() + 1e-12) {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for (v, _) in simplex.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }

        let at = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = at(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = at(2.0);
            let fe = f(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[dim].1 {
                let xc = at(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = at(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                let best_x = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = entry
                        .0
                        .iter()
                        .zip(&best_x)
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    let fv = f(&v);
                    *entry = (v, fv);
                }
            }
        }
        order(&mut simplex);
    }

    let (x, fx) = simplex.swap_remove(0);
    (x, fx)
}

/// Latin-hypercube start points inside `bounds`, in the optimizer's own
/// deterministic stream.
fn start_points(bounds: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let unit = crate::bench::lhs_sample(count, bounds.len(), &mut rng)
        .expect("start point sampling with valid arguments");
    (0..count)
        .map(|i| {
            bounds
                .iter()
                .enumerate()
                .map(|(j, (lo, hi))| lo + unit.row(i)[j] * (hi - lo))
                .collect()
        })
        .collect()
}

/// Multi-start minimization over a box. `f` may return `INFINITY` for
/// infeasible points. The search may leave the start box by a factor of
/// one hundred below and five above; the asymmetry blocks the degenerate
/// long-lengthscale ridge while leaving the short-lengthscale escape open
/// for data a smooth surface cannot explain. Errors if no restart ever
/// produced a finite value.
pub(crate) fn multistart_minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    bounds: &[(f64, f64)],
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, f64)> {
    let starts = start_points(bounds, cfg.restarts.max(1), cfg.seed);
    let below = 100.0f64.ln();
    let above = 5.0f64.ln();
    let clamp = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(bounds)
            .map(|(v, (lo, hi))| v.clamp(lo - below, hi + above))
            .collect()
    };
    let mut g = |x: &[f64]| f(&clamp(x));
    let step = 0.4;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in &starts {
        let (x, fx) = nelder_mead(&mut g, x0, step, cfg.max_iters, cfg.ftol);
        if fx.is_finite() && best.as_ref().is_none_or(|(_, b)| fx < *b) {
            best = Some((clamp(&x), fx));
        }
    }
    best.ok_or_else(|| {
        Error::Numerical("every optimizer restart failed to produce a finite objective".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let (x, fx) = nelder_mead(f, &[0.0, 0.0], 0.5, 400, 1e-12);
        assert!((x[0] - 1.5).abs() < 1e-4, "x = {x:?}");
        assert!((x[1] + 0.5).abs() < 1e-4);
        assert!(fx < 1e-7);
    }

    #[test]
    fn one_dimensional_descent() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(4);
        let (x, _) = nelder_mead(f, &[-1.0], 0.5, 500, 1e-14);
        assert!((x[0] - 2.0).abs() < 1e-2);
    }

    #[test]
    fn multistart_survives_infeasible_regions() {
        // Infinite objective on half the box still yields the feasible optimum.
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let cfg = OptimizerConfig::default();
        let (x, fx) = multistart_minimize(f, &[(-4.0, 4.0)], &cfg).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-3);
        assert!(fx < 1e-5);
    }

    #[test]
    fn multistart_all_infeasible_is_an_error() {
        let f = |_: &[f64]| f64::INFINITY;
        let cfg = OptimizerConfig::default();
        assert!(multistart_minimize(f, &[(0.0, 1.0)], &cfg).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let f = |x: &[f64]| x[0].powi(2) + (x[1] - 0.3).powi(2);
        let cfg = OptimizerConfig::default();
        let a = multistart_minimize(f, &[(-2.0, 2.0), (-2.0, 2.0)], &cfg).unwrap();
        let b = multistart_minimize(f, &[(-2.0, 2.0), (-2.0, 2.0)], &cfg).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn final_value_not_worse_than_any_start() {
        let f = |x: &[f64]| (x[0].sin() * 3.0) + x[0].powi(2) * 0.1;
        let cfg = OptimizerConfig::default();
        let starts = start_points(&[(-6.0, 6.0)], cfg.restarts, cfg.seed);
        let (_, fx) = multistart_minimize(f, &[(-6.0, 6.0)], &cfg).unwrap();
        for s in starts {
            assert!(fx <= f(&s) + 1e-12);
        }
    }
}
