//! Box-projected BFGS for the low-dimensional likelihood optimizations.
//!
//! The estimators work on log-transformed parameters, so the box here is a
//! plain coordinate clamp. The objective returns `None` where it cannot be
//! evaluated (non-PD kernel matrix); the line search treats that as a failed
//! trial and backtracks.

/// One objective evaluation: value and gradient at a feasible point.
pub(crate) struct ObjEval {
    pub f: f64,
    pub grad: Vec<f64>,
}

pub(crate) struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxBounds {
    pub fn clamp(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *xi = xi.clamp(*lo, *hi);
        }
    }

    pub fn at_bound(&self, x: &[f64], tol: f64) -> Vec<bool> {
        x.iter()
            .zip(&self.lo)
            .zip(&self.hi)
            .map(|((xi, lo), hi)| (xi - lo).abs() <= tol || (hi - xi).abs() <= tol)
            .collect()
    }
}

pub(crate) struct BfgsOptions {
    pub max_iter: usize,
    pub f_tol_rel: f64,
    pub g_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 500,
            f_tol_rel: 1e-10,
            g_tol: 1e-6,
        }
    }
}

pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub converged: bool,
}

/// Projected gradient: zero out components that push against an active bound.
pub(crate) fn projected_gradient(x: &[f64], grad: &[f64], bounds: &BoxBounds) -> Vec<f64> {
    let tol = 1e-12;
    x.iter()
        .zip(grad)
        .zip(bounds.lo.iter().zip(&bounds.hi))
        .map(|((xi, gi), (lo, hi))| {
            if (xi - lo).abs() <= tol && *gi > 0.0 {
                0.0
            } else if (hi - xi).abs() <= tol && *gi < 0.0 {
                0.0
            } else {
                *gi
            }
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimize over a box from `x0` (clamped first). `obj` returns `None` where
/// the objective is undefined.
pub(crate) fn bfgs_minimize(
    obj: &mut dyn FnMut(&[f64]) -> Option<ObjEval>,
    x0: &[f64],
    bounds: &BoxBounds,
    opts: &BfgsOptions,
) -> Option<BfgsOutcome> {
    let dim = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut cur = obj(&x)?;
    // inverse Hessian approximation
    let mut h = vec![0.0f64; dim * dim];
    for i in 0..dim {
        h[i * dim + i] = 1.0;
    }
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let pg = projected_gradient(&x, &cur.grad, bounds);
        if norm(&pg) <= opts.g_tol {
            converged = true;
            break;
        }
        // p = -H g
        let mut p = vec![0.0f64; dim];
        for i in 0..dim {
            let mut s = 0.0;
            for j in 0..dim {
                s += h[i * dim + j] * cur.grad[j];
            }
            p[i] = -s;
        }
        // ensure descent; otherwise reset to steepest descent
        let mut slope: f64 = p.iter().zip(&cur.grad).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            for i in 0..dim {
                h[i * dim + i] = 1.0;
                for j in 0..dim {
                    if i != j {
                        h[i * dim + j] = 0.0;
                    }
                }
                p[i] = -cur.grad[i];
            }
            slope = -norm(&cur.grad).powi(2);
        }
        // projected backtracking line search (Armijo)
        let mut t = 1.0;
        let mut accepted: Option<(Vec<f64>, ObjEval)> = None;
        for _ in 0..60 {
            let mut xt: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + t * pi).collect();
            bounds.clamp(&mut xt);
            let step: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
            if norm(&step) < 1e-15 * (1.0 + norm(&x)) {
                break;
            }
            if let Some(ev) = obj(&xt) {
                let pred: f64 = step.iter().zip(&cur.grad).map(|(a, b)| a * b).sum();
                if ev.f <= cur.f + 1e-4 * pred || (pred >= 0.0 && ev.f < cur.f) {
                    accepted = Some((xt, ev));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((x_new, ev_new)) = accepted else {
            // no acceptable step along this direction
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = ev_new.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let f_drop = (cur.f - ev_new.f).abs();
        let f_scale = cur.f.abs().max(1.0);
        x = x_new;
        cur = ev_new;
        let _ = slope;
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            // BFGS inverse update: H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let mut hy = vec![0.0f64; dim];
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..dim {
                    acc += h[i * dim + j] * yv[j];
                }
                hy[i] = acc;
            }
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                for j in 0..dim {
                    h[i * dim + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }
        if f_drop < opts.f_tol_rel * f_scale {
            let pg = projected_gradient(&x, &cur.grad, bounds);
            converged = norm(&pg) <= opts.g_tol;
            break;
        }
    }
    if !converged {
        let pg = projected_gradient(&x, &cur.grad, bounds);
        converged = norm(&pg) <= opts.g_tol;
    }
    Some(BfgsOutcome {
        x,
        f: cur.f,
        grad: cur.grad,
        converged,
    })
}
