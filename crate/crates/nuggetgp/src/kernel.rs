//! Matérn covariogram, nugget-augmented covariogram, spectral density, and the
//! effective-range ↔ decay conversion.
//!
//! Conventions: the covariogram is `K_w(x) = σ² ρ(φ‖x‖)` with correlation
//! `ρ(x) = x^ν K_ν(x) / (Γ(ν) 2^{ν−1})`, continuous at zero with `ρ(0) = 1`.
//! Distances are isotropic Euclidean. The nugget attaches to coincident
//! *observation indices* (same site), not merely to zero distance, so
//! duplicated coordinates remain distinguishable observations.

use crate::error::{Error, Result};
use crate::special::{bessel_k_nonneg, gamma_fn, ln_gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// Correlation level defining the effective range (correlation decays to 0.05).
pub const EFFECTIVE_RANGE_LEVEL: f64 = 0.05;

/// Matérn covariogram parameters: partial sill, decay, smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    sigma2: f64,
    phi: f64,
    nu: f64,
}

impl MaternParams {
    pub fn new(sigma2: f64, phi: f64, nu: f64) -> Result<Self> {
        for (name, v) in [("sigma2", sigma2), ("phi", phi), ("nu", nu)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::domain(format!(
                    "MaternParams requires {name} > 0, got {v}"
                )));
            }
        }
        Ok(MaternParams { sigma2, phi, nu })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Microergodic parameter κ = σ² φ^{2ν}.
    pub fn kappa(&self) -> f64 {
        self.sigma2 * self.phi.powf(2.0 * self.nu)
    }
}

/// Matérn parameters plus the nugget τ² (measurement-error variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyModelParams {
    pub matern: MaternParams,
    tau2: f64,
}

impl NoisyModelParams {
    pub fn new(matern: MaternParams, tau2: f64) -> Result<Self> {
        if !tau2.is_finite() || tau2 < 0.0 {
            return Err(Error::domain(format!(
                "NoisyModelParams requires tau2 >= 0, got {tau2}"
            )));
        }
        Ok(NoisyModelParams { matern, tau2 })
    }

    pub fn from_parts(tau2: f64, sigma2: f64, phi: f64, nu: f64) -> Result<Self> {
        NoisyModelParams::new(MaternParams::new(sigma2, phi, nu)?, tau2)
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    /// Noise-to-signal ratio η = τ²/σ².
    pub fn eta(&self) -> f64 {
        self.tau2 / self.matern.sigma2()
    }
}

/// Matérn correlation `ρ(x)` as a function of the scaled distance `x = φ‖x‖`,
/// with the (Γ, 2^{ν−1}) normalization precomputed once. Half-integer orders
/// take closed-form fast paths; everything else goes through `bessel_k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Correlation {
    nu: f64,
    kind: CorrKind,
}

#[derive(Debug, Clone, Copy)]
enum CorrKind {
    Half,
    ThreeHalves,
    FiveHalves,
    General { ln_norm: f64 },
}

impl Correlation {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::domain(format!("smoothness nu must be > 0, got {nu}")));
        }
        let kind = if nu == 0.5 {
            CorrKind::Half
        } else if nu == 1.5 {
            CorrKind::ThreeHalves
        } else if nu == 2.5 {
            CorrKind::FiveHalves
        } else {
            CorrKind::General {
                ln_norm: ln_gamma(nu)? + (nu - 1.0) * LN_2,
            }
        };
        Ok(Correlation { nu, kind })
    }

    /// ρ(x) for x ≥ 0; ρ(0) = 1.
    pub fn rho(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 1.0;
        }
        match self.kind {
            CorrKind::Half => (-x).exp(),
            CorrKind::ThreeHalves => (1.0 + x) * (-x).exp(),
            CorrKind::FiveHalves => (1.0 + x + x * x / 3.0) * (-x).exp(),
            CorrKind::General { ln_norm } => {
                match bessel_k_nonneg(self.nu, x) {
                    Ok(ev) => {
                        let lr = self.nu * x.ln() - ln_norm + ev.log_value;
                        lr.exp().min(1.0)
                    }
                    // x beyond any representable tail
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// dρ/dx, using d/dx [x^ν K_ν(x)] = −x^ν K_{ν−1}(x).
    pub fn drho_dx(&self, x: f64) -> f64 {
        if x == 0.0 {
            // One-sided limit; for ν < 1 the true derivative is −∞, but the
            // derivative matrix only ever multiplies zero diagonal distance.
            return 0.0;
        }
        match self.kind {
            CorrKind::Half => -(-x).exp(),
            CorrKind::ThreeHalves => -x * (-x).exp(),
            CorrKind::FiveHalves => -(x / 3.0) * (1.0 + x) * (-x).exp(),
            CorrKind::General { ln_norm } => {
                let order = (self.nu - 1.0).abs(); // K_{−a} = K_a
                match bessel_k_nonneg(order, x) {
                    Ok(ev) => -(self.nu * x.ln() - ln_norm + ev.log_value).exp(),
                    Err(_) => 0.0,
                }
            }
        }
    }
}

/// Matérn covariogram `K_w(dist)`; equals σ² at zero distance.
pub fn matern_cov(params: &MaternParams, dist: f64) -> Result<f64> {
    if !dist.is_finite() || dist < 0.0 {
        return Err(Error::domain(format!("matern_cov requires finite dist >= 0, got {dist}")));
    }
    let corr = Correlation::new(params.nu)?;
    Ok(params.sigma2 * corr.rho(params.phi * dist))
}

/// Covariogram of the observed process: Matérn plus nugget on coincident sites.
pub fn noisy_cov(params: &NoisyModelParams, dist: f64, same_site: bool) -> Result<f64> {
    if same_site && dist != 0.0 {
        return Err(Error::domain(format!(
            "same_site requires dist = 0, got {dist}"
        )));
    }
    let base = matern_cov(&params.matern, dist)?;
    Ok(if same_site { base + params.tau2 } else { base })
}

/// Matérn spectral density in dimension `d`,
/// `f(u) = C σ² φ^{2ν} / (φ² + u²)^{ν + d/2}` with
/// `C = Γ(ν + d/2) / (Γ(ν) π^{d/2})`, so that `f` Fourier-inverts back to the
/// covariogram.
pub fn spectral_density(params: &MaternParams, d: usize, u: f64) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return Err(Error::domain(format!("dimension must be 1, 2, or 3, got {d}")));
    }
    if !u.is_finite() || u < 0.0 {
        return Err(Error::domain(format!("frequency must be finite and >= 0, got {u}")));
    }
    let nu = params.nu;
    let half_d = d as f64 / 2.0;
    let c = gamma_fn(nu + half_d)? / (gamma_fn(nu)? * PI.powf(half_d));
    let num = c * params.sigma2 * params.phi.powf(2.0 * nu);
    Ok(num / (params.phi * params.phi + u * u).powf(nu + half_d))
}

/// Decay φ such that the correlation at `range` equals `level` (default 0.05
/// defines the effective range). Bracketed bisection on the scaled distance.
pub fn phi_from_effective_range(range: f64, nu: f64, level: f64) -> Result<f64> {
    if !range.is_finite() || range <= 0.0 {
        return Err(Error::domain(format!("range must be > 0, got {range}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("level must be in (0,1), got {level}")));
    }
    let corr = Correlation::new(nu)?;
    // ρ is strictly decreasing with ρ(0) = 1, ρ(∞) = 0; find x with ρ(x) = level.
    let mut lo = 1e-10;
    let mut hi = 1.0;
    let mut tries = 0;
    while corr.rho(hi) > level {
        hi *= 2.0;
        tries += 1;
        if tries > 80 {
            return Err(Error::numeric(format!(
                "phi_from_effective_range: no upper bracket (nu={nu}, level={level}, hi={hi})"
            )));
        }
    }
    if corr.rho(lo) < level {
        return Err(Error::numeric(format!(
            "phi_from_effective_range: no lower bracket (nu={nu}, level={level})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if corr.rho(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi) / range)
}

/// φ for the default 0.05 effective-range level.
pub fn phi_for_range(range: f64, nu: f64) -> Result<f64> {
    phi_from_effective_range(range, nu, EFFECTIVE_RANGE_LEVEL)
}
