//! Maximum-likelihood estimation: fixed-φ MLE of (τ², σ²) over a box, joint
//! profile-likelihood MLE of (φ, η, σ²), and the no-nugget variant.
//!
//! All optimizers run on log-transformed parameters with box projection and a
//! deterministic multi-start schedule (variance heuristics × effective
//! ranges). The fixed-φ path works through one eigendecomposition of ρ(φ₁),
//! which makes every objective evaluation O(n); a Newton polish in the
//! original (τ², σ²) coordinates then drives the analytic score to zero well
//! below the reporting tolerance.

use crate::error::{Error, Result};
use crate::kernel::{phi_for_range, Correlation};
use crate::likelihood::profile_from_factor;
use crate::linalg::{
    cholesky, corr_dphi_from_dists, corr_matrix_from_dists, distance_matrix, eigen_sym_rotate,
    EigenSpectrum, LocationSet,
};
use crate::optim::{bfgs_minimize, BfgsOptions, BoxBounds, ObjEval};
use crate::stats;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// η̂ below this is reported as exactly zero.
const ETA_REPORT_ZERO: f64 = 1e-8;
/// Lower clamp on η during optimization.
const ETA_CLAMP: f64 = 1e-12;

/// Outcome of one maximum-likelihood fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub tau2_hat: f64,
    pub sigma2_hat: f64,
    pub phi_hat: f64,
    pub kappa_hat: f64,
    pub eta_hat: f64,
    pub neg_loglik: f64,
    pub converged: bool,
    pub n_evals: usize,
    pub hit_boundary: bool,
    /// Box D = [a,b]×[c,d] used by the fixed-φ fit, recorded for
    /// reproducibility; `None` for the profile fits.
    pub box_d: Option<[f64; 4]>,
}

/// Box D = [a,b] × [c,d] for the fixed-φ estimator, both intervals positive.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitBox {
    pub tau2: (f64, f64),
    pub sigma2: (f64, f64),
}

impl FitBox {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.tau2;
        let (c, d) = self.sigma2;
        if !(0.0 < a && a < b && b.is_finite() && 0.0 < c && c < d && d.is_finite()) {
            return Err(Error::domain(format!(
                "fit box requires 0 < a < b and 0 < c < d, got [{a},{b}]×[{c},{d}]"
            )));
        }
        Ok(())
    }
}

/// Default box [1e-4, 10·var(y)]² (sample variance, guarded away from zero).
pub fn default_fit_box(y: &Array1<f64>) -> FitBox {
    let v = {
        let sd = stats::sample_sd(y.as_slice().unwrap());
        if sd.is_nan() {
            1.0
        } else {
            sd * sd
        }
    };
    let hi = (10.0 * v).max(1e-3);
    FitBox {
        tau2: (1e-4, hi),
        sigma2: (1e-4, hi),
    }
}

/// Search bounds for the profile fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileBounds {
    pub phi: (f64, f64),
    pub eta: (f64, f64),
}

impl ProfileBounds {
    /// φ spans effective ranges from 3.0 down to 0.02 units; η from the
    /// optimizer clamp up to 1e3.
    pub fn for_smoothness(nu: f64) -> Result<Self> {
        Ok(ProfileBounds {
            phi: (phi_for_range(3.0, nu)?, phi_for_range(0.02, nu)?),
            eta: (ETA_CLAMP, 1e3),
        })
    }
}

// Half the mean squared nearest-neighbour increment: a cheap τ² heuristic
// used only to place optimizer starts.
fn nn_variogram(locs: &LocationSet, y: &Array1<f64>) -> f64 {
    let n = locs.n();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut jbest = i;
        for j in 0..n {
            if j != i {
                let dist = locs.dist(i, j);
                if dist < best {
                    best = dist;
                    jbest = j;
                }
            }
        }
        let dy = y[i] - y[jbest];
        acc += 0.5 * dy * dy;
    }
    acc / n as f64
}

// Eigen-path score pieces at (τ², σ²): value, gradient, Hessian of
// ℓ = Σ z²/(τ²+σ²λ) + Σ log(τ²+σ²λ).
struct EigenObjective<'a> {
    lam: &'a [f64],
    z2: Vec<f64>,
}

impl<'a> EigenObjective<'a> {
    fn new(spectrum: &'a EigenSpectrum, z: &Array1<f64>) -> Self {
        EigenObjective {
            lam: spectrum.values(),
            z2: z.iter().map(|v| v * v).collect(),
        }
    }

    fn value(&self, tau2: f64, sigma2: f64) -> Option<f64> {
        let mut f = 0.0;
        for (&l, &z2) in self.lam.iter().zip(&self.z2) {
            let v = tau2 + sigma2 * l;
            if v <= 0.0 {
                return None;
            }
            f += z2 / v + v.ln();
        }
        Some(f)
    }

    fn value_grad(&self, tau2: f64, sigma2: f64) -> Option<(f64, [f64; 2])> {
        let mut f = 0.0;
        let mut gt = 0.0;
        let mut gs = 0.0;
        for (&l, &z2) in self.lam.iter().zip(&self.z2) {
            let v = tau2 + sigma2 * l;
            if v <= 0.0 {
                return None;
            }
            let a = 1.0 / v;
            let s = a - z2 * a * a;
            f += z2 * a + v.ln();
            gt += s;
            gs += l * s;
        }
        Some((f, [gt, gs]))
    }

    fn grad_hess(&self, tau2: f64, sigma2: f64) -> Option<([f64; 2], [f64; 3])> {
        let mut gt = 0.0;
        let mut gs = 0.0;
        let (mut htt, mut hts, mut hss) = (0.0, 0.0, 0.0);
        for (&l, &z2) in self.lam.iter().zip(&self.z2) {
            let v = tau2 + sigma2 * l;
            if v <= 0.0 {
                return None;
            }
            let a = 1.0 / v;
            let a2 = a * a;
            let s = a - z2 * a2;
            let c = 2.0 * z2 * a2 * a - a2;
            gt += s;
            gs += l * s;
            htt += c;
            hts += l * c;
            hss += l * l * c;
        }
        Some(([gt, gs], [htt, hts, hss]))
    }
}

// Projected Newton on the eigen-path objective in original (τ², σ²)
// coordinates; quadratic convergence makes the final score ~1e-10.
fn newton_polish(
    obj: &EigenObjective,
    start: (f64, f64),
    lo: (f64, f64),
    hi: (f64, f64),
    evals: &mut usize,
) -> (f64, f64, f64, [f64; 2], bool) {
    let clamp = |t: f64, s: f64| {
        (
            t.clamp(lo.0, hi.0),
            s.clamp(lo.1, hi.1),
        )
    };
    let (mut t, mut s) = clamp(start.0, start.1);
    let mut f = obj.value(t, s).unwrap_or(f64::INFINITY);
    let mut grad = [f64::NAN, f64::NAN];
    let mut ok = false;
    for _ in 0..60 {
        *evals += 1;
        let Some((g, h)) = obj.grad_hess(t, s) else { break };
        grad = g;
        // projected gradient for the stopping test
        let mut pg = g;
        if (t - lo.0).abs() < 1e-14 && pg[0] > 0.0 {
            pg[0] = 0.0;
        }
        if (hi.0 - t).abs() < 1e-14 && pg[0] < 0.0 {
            pg[0] = 0.0;
        }
        if (s - lo.1).abs() < 1e-14 && pg[1] > 0.0 {
            pg[1] = 0.0;
        }
        if (hi.1 - s).abs() < 1e-14 && pg[1] < 0.0 {
            pg[1] = 0.0;
        }
        if (pg[0] * pg[0] + pg[1] * pg[1]).sqrt() < 1e-10 {
            ok = true;
            break;
        }
        // active-set reduced Newton: drop coordinates pinned at a bound
        let t_active = pg[0] == 0.0 && g[0] != 0.0;
        let s_active = pg[1] == 0.0 && g[1] != 0.0;
        let det = h[0] * h[2] - h[1] * h[1];
        let (mut dt, mut ds) = if t_active && !s_active && h[2] > 0.0 {
            (0.0, -g[1] / h[2])
        } else if s_active && !t_active && h[0] > 0.0 {
            (-g[0] / h[0], 0.0)
        } else if det > 0.0 && h[0] > 0.0 {
            (
                -(h[2] * g[0] - h[1] * g[1]) / det,
                -(-h[1] * g[0] + h[0] * g[1]) / det,
            )
        } else {
            // fall back to a scaled gradient step
            let scale = (t.abs() + s.abs()).max(1e-8);
            let gn = (pg[0] * pg[0] + pg[1] * pg[1]).sqrt().max(1e-30);
            (-pg[0] / gn * 0.1 * scale, -pg[1] / gn * 0.1 * scale)
        };
        let mut accepted = false;
        for _ in 0..40 {
            let (tn, sn) = clamp(t + dt, s + ds);
            if (tn - t).abs() < 1e-18 && (sn - s).abs() < 1e-18 {
                break;
            }
            *evals += 1;
            if let Some(fn_) = obj.value(tn, sn) {
                if fn_ <= f + 1e-12 * f.abs().max(1.0) {
                    t = tn;
                    s = sn;
                    f = fn_;
                    accepted = true;
                    break;
                }
            }
            dt *= 0.5;
            ds *= 0.5;
        }
        if !accepted {
            // converged as far as the line search can tell
            ok = (pg[0] * pg[0] + pg[1] * pg[1]).sqrt() < 1e-6;
            break;
        }
    }
    (t, s, f, grad, ok)
}

/// Maximum-likelihood estimate of (τ², σ²) with the decay fixed at φ₁,
/// minimizing ℓ over the box D.
pub fn fit_fixed_phi(
    phi1: f64,
    nu: f64,
    box_d: &FitBox,
    locs: &LocationSet,
    y: &Array1<f64>,
) -> Result<FitResult> {
    box_d.validate()?;
    if !phi1.is_finite() || phi1 <= 0.0 {
        return Err(Error::domain(format!("phi1 must be > 0, got {phi1}")));
    }
    if y.len() != locs.n() {
        return Err(Error::Dimension {
            expected: locs.n(),
            got: y.len(),
        });
    }
    let corr = Correlation::new(nu)?;
    let dists = distance_matrix(locs);
    let rho = corr_matrix_from_dists(&corr, phi1, &dists);
    let (spectrum, z) = eigen_sym_rotate(&rho, y)?;
    let obj = EigenObjective::new(&spectrum, &z);

    let (a, b) = box_d.tau2;
    let (c, d) = box_d.sigma2;
    let s2 = {
        let sd = stats::sample_sd(y.as_slice().unwrap());
        if sd.is_nan() || sd == 0.0 {
            1.0
        } else {
            sd * sd
        }
    };
    let v_nn = nn_variogram(locs, y).max(1e-8);
    let starts: [(f64, f64); 5] = [
        (v_nn, (s2 - v_nn).max(0.1 * s2)),
        (0.1 * s2, 0.9 * s2),
        (0.5 * s2, 0.5 * s2),
        (0.9 * s2, 0.1 * s2),
        (0.01 * s2, s2),
    ];
    let bounds = BoxBounds {
        lo: vec![a.ln(), c.ln()],
        hi: vec![b.ln(), d.ln()],
    };
    let mut n_evals = 0usize;
    let mut best: Option<(f64, f64, f64)> = None; // (f, tau2, sigma2)
    for &(t0, s0) in &starts {
        let x0 = [t0.clamp(a, b).ln(), s0.clamp(c, d).ln()];
        let mut eval = |x: &[f64]| {
            n_evals += 1;
            let (t, s) = (x[0].exp(), x[1].exp());
            let (f, g) = obj.value_grad(t, s)?;
            Some(ObjEval {
                f,
                grad: vec![g[0] * t, g[1] * s],
            })
        };
        if let Some(out) = bfgs_minimize(&mut eval, &x0, &bounds, &BfgsOptions::default()) {
            let (t, s) = (out.x[0].exp(), out.x[1].exp());
            if best.as_ref().is_none_or(|(bf, _, _)| out.f < *bf) {
                best = Some((out.f, t, s));
            }
        }
    }
    let Some((_, t_bfgs, s_bfgs)) = best else {
        return Err(Error::Estimation(
            "fit_fixed_phi: all starts failed to evaluate".to_string(),
        ));
    };
    let (tau2_hat, sigma2_hat, f, grad, polished) =
        newton_polish(&obj, (t_bfgs, s_bfgs), (a, c), (b, d), &mut n_evals);
    let tol = 1e-9;
    let hit_boundary = (tau2_hat - a).abs() <= tol * a.max(1.0)
        || (b - tau2_hat).abs() <= tol * b.max(1.0)
        || (sigma2_hat - c).abs() <= tol * c.max(1.0)
        || (d - sigma2_hat).abs() <= tol * d.max(1.0);
    let _ = grad;
    Ok(FitResult {
        tau2_hat,
        sigma2_hat,
        phi_hat: phi1,
        kappa_hat: sigma2_hat * phi1.powf(2.0 * nu),
        eta_hat: tau2_hat / sigma2_hat,
        neg_loglik: f,
        converged: polished,
        n_evals,
        hit_boundary,
        box_d: Some([a, b, c, d]),
    })
}

// Profile objective context: distances and data are fixed, (φ, η) vary.
struct ProfileContext<'a> {
    locs_n: usize,
    y: &'a Array1<f64>,
    corr: Correlation,
    dists: Array2<f64>,
}

impl<'a> ProfileContext<'a> {
    fn new(nu: f64, locs: &LocationSet, y: &'a Array1<f64>) -> Result<Self> {
        Ok(ProfileContext {
            locs_n: locs.n(),
            y,
            corr: Correlation::new(nu)?,
            dists: distance_matrix(locs),
        })
    }

    fn factor_at(&self, phi: f64, eta: f64) -> Option<crate::linalg::CovFactor> {
        let mut m = corr_matrix_from_dists(&self.corr, phi, &self.dists);
        for i in 0..self.locs_n {
            m[(i, i)] += eta;
        }
        cholesky(&m).ok()
    }

    fn value(&self, phi: f64, eta: f64) -> Option<(f64, f64)> {
        let factor = self.factor_at(phi, eta)?;
        profile_from_factor(&factor, self.y).ok()
    }

    // value, σ̂², and the gradient in (log φ, log η)
    fn value_grad(&self, phi: f64, eta: f64) -> Option<(f64, f64, [f64; 2])> {
        let factor = self.factor_at(phi, eta)?;
        let (value, sigma2_hat) = profile_from_factor(&factor, self.y).ok()?;
        let n = self.locs_n;
        let alpha = factor.solve_vec(self.y).ok()?;
        let quad = self.y.dot(&alpha);
        let minv = factor.inverse();
        let drho = corr_dphi_from_dists(&self.corr, phi, &self.dists);
        let mut tr_minv = 0.0;
        let mut tr_minv_drho = 0.0;
        for i in 0..n {
            tr_minv += minv[(i, i)];
            for j in (i + 1)..n {
                tr_minv_drho += 2.0 * minv[(i, j)] * drho[(i, j)];
            }
        }
        let drho_alpha = drho.dot(&alpha);
        let nf = n as f64;
        let dphi = tr_minv_drho - nf * alpha.dot(&drho_alpha) / quad;
        let deta = tr_minv - nf * alpha.dot(&alpha) / quad;
        Some((value, sigma2_hat, [dphi * phi, deta * eta]))
    }
}

/// Joint maximum-likelihood fit by quasi-Newton optimization of the profile
/// objective over (log φ, log η): five deterministic starts are screened by
/// objective value and the most promising are run to convergence; σ̂² follows
/// in closed form and a fixed-φ Newton polish tightens (τ̂², σ̂²).
pub fn fit_profile(
    nu: f64,
    locs: &LocationSet,
    y: &Array1<f64>,
    bounds: &ProfileBounds,
) -> Result<FitResult> {
    if locs.n() < 3 {
        return Err(Error::domain(format!(
            "fit_profile requires n >= 3, got {}",
            locs.n()
        )));
    }
    if y.len() != locs.n() {
        return Err(Error::Dimension {
            expected: locs.n(),
            got: y.len(),
        });
    }
    let (phi_lo, phi_hi) = bounds.phi;
    let (eta_lo_raw, eta_hi) = bounds.eta;
    let eta_lo = eta_lo_raw.max(ETA_CLAMP);
    if !(phi_lo > 0.0 && phi_lo < phi_hi && eta_lo < eta_hi) {
        return Err(Error::domain("invalid profile bounds".to_string()));
    }
    let ctx = ProfileContext::new(nu, locs, y)?;

    // start schedule: variance heuristics × effective ranges {0.1, 0.3, 0.8}
    let s2 = {
        let sd = stats::sample_sd(y.as_slice().unwrap());
        if sd.is_nan() || sd == 0.0 {
            1.0
        } else {
            sd * sd
        }
    };
    let v_nn = nn_variogram(locs, y);
    let eta_mid = (v_nn / (s2 - v_nn).max(0.05 * s2)).clamp(1e-6, 50.0);
    let eta_lo_start = (eta_mid / 30.0).max(1e-7);
    let eta_hi_start = (eta_mid * 30.0).min(100.0);
    let phi_r = |r: f64| phi_for_range(r, nu).map(|p| p.clamp(phi_lo, phi_hi));
    let starts = [
        (phi_r(0.3)?, eta_mid),
        (phi_r(0.1)?, eta_mid),
        (phi_r(0.8)?, eta_mid),
        (phi_r(0.3)?, eta_lo_start),
        (phi_r(0.3)?, eta_hi_start),
    ];

    let mut n_evals = 0usize;
    // screen by objective value
    let mut screened: Vec<(f64, (f64, f64))> = Vec::new();
    for &(p0, e0) in &starts {
        let e0 = e0.clamp(eta_lo, eta_hi);
        n_evals += 1;
        if let Some((f, _)) = ctx.value(p0, e0) {
            screened.push((f, (p0, e0)));
        }
    }
    if screened.is_empty() {
        return Err(Error::Estimation(
            "fit_profile: no start could be evaluated".to_string(),
        ));
    }
    screened.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let polish_count = if locs.n() < 200 { 3 } else { 2 };

    let opt_bounds = BoxBounds {
        lo: vec![phi_lo.ln(), eta_lo.ln()],
        hi: vec![phi_hi.ln(), eta_hi.ln()],
    };
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for (rank, &(_, (p0, e0))) in screened.iter().enumerate() {
        if rank >= polish_count && best.as_ref().is_some_and(|(_, _, conv)| *conv) {
            break;
        }
        let x0 = [p0.ln(), e0.ln()];
        let mut eval = |x: &[f64]| {
            n_evals += 1;
            let (phi, eta) = (x[0].exp(), x[1].exp());
            let (f, _, g) = ctx.value_grad(phi, eta)?;
            Some(ObjEval {
                f,
                grad: g.to_vec(),
            })
        };
        if let Some(out) = bfgs_minimize(&mut eval, &x0, &opt_bounds, &BfgsOptions::default()) {
            let better = best.as_ref().is_none_or(|(bf, _, _)| out.f < *bf);
            if better {
                best = Some((out.f, out.x.clone(), out.converged));
            }
        }
    }
    let Some((_, x, bfgs_converged)) = best else {
        return Err(Error::Estimation(
            "fit_profile: no start converged".to_string(),
        ));
    };
    let phi_hat = x[0].exp();
    let eta_hat_raw = x[1].exp();

    // polish (τ², σ²) at the selected φ via the eigen path
    let rho = corr_matrix_from_dists(&ctx.corr, phi_hat, &ctx.dists);
    let (spectrum, zrot) = eigen_sym_rotate(&rho, y)?;
    let obj = EigenObjective::new(&spectrum, &zrot);
    let (_, sigma2_bfgs) = ctx
        .value(phi_hat, eta_hat_raw)
        .ok_or_else(|| Error::Estimation("fit_profile: final point not evaluable".to_string()))?;
    let tau2_start = eta_hat_raw * sigma2_bfgs;
    let (tau2_hat, sigma2_hat, f, _, polished) = newton_polish(
        &obj,
        (tau2_start, sigma2_bfgs),
        (ETA_CLAMP * sigma2_bfgs, 1e-12),
        (1e9, 1e9),
        &mut n_evals,
    );
    let eta_hat = tau2_hat / sigma2_hat;
    let at = opt_bounds.at_bound(&x, 1e-9);
    let eta_at_clamp = eta_hat <= eta_lo * 1.0001;
    let hit_boundary = at.iter().any(|b| *b) || eta_at_clamp;
    let (tau2_rep, eta_rep) = if eta_hat < ETA_REPORT_ZERO {
        (0.0, 0.0)
    } else {
        (tau2_hat, eta_hat)
    };
    Ok(FitResult {
        tau2_hat: tau2_rep,
        sigma2_hat,
        phi_hat,
        kappa_hat: sigma2_hat * phi_hat.powf(2.0 * nu),
        eta_hat: eta_rep,
        neg_loglik: f,
        converged: bfgs_converged && polished,
        n_evals,
        hit_boundary,
        box_d: None,
    })
}

/// Profile fit with η pinned to 0: 1-D search over φ (coarse log-grid scan
/// plus golden-section refinement); the kernel matrix takes the diagonal
/// jitter policy when it is numerically singular.
pub fn fit_no_nugget(
    nu: f64,
    locs: &LocationSet,
    y: &Array1<f64>,
    phi_bounds: (f64, f64),
) -> Result<FitResult> {
    if y.len() != locs.n() {
        return Err(Error::Dimension {
            expected: locs.n(),
            got: y.len(),
        });
    }
    let (phi_lo, phi_hi) = phi_bounds;
    if !(phi_lo > 0.0 && phi_lo < phi_hi) {
        return Err(Error::domain("invalid phi bounds".to_string()));
    }
    let corr = Correlation::new(nu)?;
    let dists = distance_matrix(locs);
    let mut n_evals = 0usize;
    let mut eval = |phi: f64| -> Option<(f64, f64)> {
        n_evals += 1;
        let m = corr_matrix_from_dists(&corr, phi, &dists);
        let (factor, _) = crate::linalg::cholesky_with_jitter(&m, 1.0).ok()?;
        profile_from_factor(&factor, y).ok()
    };
    // coarse scan over log φ
    let grid = 12usize;
    let (llo, lhi) = (phi_lo.ln(), phi_hi.ln());
    let mut best_k = 0usize;
    let mut best_f = f64::INFINITY;
    let mut any = false;
    for k in 0..=grid {
        let phi = (llo + (lhi - llo) * k as f64 / grid as f64).exp();
        if let Some((f, _)) = eval(phi) {
            any = true;
            if f < best_f {
                best_f = f;
                best_k = k;
            }
        }
    }
    if !any {
        return Err(Error::Estimation(
            "fit_no_nugget: objective not evaluable anywhere in the φ bounds".to_string(),
        ));
    }
    // golden-section refinement inside the bracket around the best grid point
    let mut lo = llo + (lhi - llo) * best_k.saturating_sub(1) as f64 / grid as f64;
    let mut hi = llo + (lhi - llo) * (best_k + 1).min(grid) as f64 / grid as f64;
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let mut f1 = eval(x1.exp()).map(|v| v.0).unwrap_or(f64::INFINITY);
    let mut f2 = eval(x2.exp()).map(|v| v.0).unwrap_or(f64::INFINITY);
    let mut converged = false;
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-9 {
            converged = true;
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval(x1.exp()).map(|v| v.0).unwrap_or(f64::INFINITY);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval(x2.exp()).map(|v| v.0).unwrap_or(f64::INFINITY);
        }
    }
    let phi_hat = (0.5 * (lo + hi)).exp();
    let (f, sigma2_hat) = eval(phi_hat).ok_or_else(|| {
        Error::Estimation("fit_no_nugget: final point not evaluable".to_string())
    })?;
    let hit_boundary =
        (phi_hat / phi_lo) < 1.001 || (phi_hi / phi_hat) < 1.001;
    Ok(FitResult {
        tau2_hat: 0.0,
        sigma2_hat,
        phi_hat,
        kappa_hat: sigma2_hat * phi_hat.powf(2.0 * nu),
        eta_hat: 0.0,
        neg_loglik: f,
        converged,
        n_evals,
        hit_boundary,
        box_d: None,
    })
}
