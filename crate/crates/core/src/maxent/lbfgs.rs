//! Limited-memory BFGS with a backtracking Armijo line search.
//!
//! Only steps that strictly satisfy the sufficient-decrease condition are
//! accepted, so the recorded objective trace never increases.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop once `(f_prev - f) / |f_prev|` drops below this.
    pub tol: f64,
    pub max_backtracks: usize,
    pub armijo: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 10,
            max_iters: 200,
            tol: 1e-6,
            max_backtracks: 40,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    /// Objective at the start point and after every accepted step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f` starting from `x`, which is overwritten with the result.
/// `f(x, grad)` returns the objective and writes the gradient.
pub fn minimize<F>(x: &mut [f64], mut f: F, cfg: &LbfgsConfig) -> Result<Trace>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut fx = f(x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("objective is not finite at the start point ({fx})")));
    }
    let mut trace = Trace {
        objective: vec![fx],
        ..Trace::default()
    };
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha = vec![0.0; cfg.memory];

    while trace.iterations < cfg.max_iters {
        let gnorm2 = dot(&g, &g);
        if gnorm2 == 0.0 {
            trace.converged = true;
            break;
        }

        // Two-loop recursion: d = -H g.
        d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
        for (k, (s, y, rho)) in pairs.iter().enumerate().rev() {
            let a = rho * dot(s, &d);
            alpha[k] = a;
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for (k, (s, y, rho)) in pairs.iter().enumerate() {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (alpha[k] - b) * si);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -gnorm2;
        }

        let mut step = if pairs.is_empty() {
            (1.0 / gnorm2.sqrt()).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            x_new.iter_mut().zip(x.iter().zip(&d)).for_each(|(xn, (xi, di))| *xn = xi + step * di);
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + cfg.armijo * step * slope && f_new < fx {
                accepted = Some(f_new);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            // No representable decrease along the search direction.
            trace.converged = true;
            break;
        };
        if g_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("gradient became non-finite".into()));
        }

        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }

        let rel = (fx - f_new) / fx.abs().max(f64::MIN_POSITIVE);
        x.copy_from_slice(&x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        trace.objective.push(fx);
        trace.iterations += 1;
        if rel < cfg.tol {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let centre = [3.0, -1.0, 0.5];
        let scale = [1.0, 10.0, 100.0];
        let mut x = vec![0.0; 3];
        let trace = minimize(
            &mut x,
            |x, g| {
                let mut v = 1.0;
                for i in 0..3 {
                    let d = x[i] - centre[i];
                    v += 0.5 * scale[i] * d * d;
                    g[i] = scale[i] * d;
                }
                v
            },
            &LbfgsConfig {
                tol: 1e-15,
                ..LbfgsConfig::default()
            },
        )
        .unwrap();
        for i in 0..3 {
            assert!((x[i] - centre[i]).abs() < 1e-6, "{x:?}");
        }
        assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rosenbrock_is_monotone() {
        let mut x = vec![-1.2, 1.0];
        let trace = minimize(
            &mut x,
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2) + 1.0
            },
            &LbfgsConfig {
                tol: 1e-14,
                max_iters: 500,
                ..LbfgsConfig::default()
            },
        )
        .unwrap();
        assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
        assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] - 1.0).abs() < 1e-3, "{x:?}");
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let mut x = vec![0.0];
        let r = minimize(&mut x, |_, g| {
            g[0] = 0.0;
            f64::NAN
        }, &LbfgsConfig::default());
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}
