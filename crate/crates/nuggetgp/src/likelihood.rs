//! Exact Gaussian negative log-likelihood (rescaled), its analytic gradient,
//! the profile likelihood in (φ, η), and an eigenvalue-path evaluation used to
//! cross-check the Cholesky path.
//!
//! The objective is `ℓ(τ², σ², φ) = log det V + yᵀ V⁻¹ y` with
//! `V = τ² I + σ² ρ(φ)`; surfaces for plotting are emitted as `−ℓ/2`.

use crate::error::{Error, Result};
use crate::kernel::{Correlation, NoisyModelParams};
use crate::linalg::{
    cholesky, corr_dphi_from_dists, corr_matrix_from_dists, distance_matrix, CovFactor,
    EigenSpectrum, LocationSet,
};
use ndarray::{Array1, Array2};

/// Value and analytic partial derivatives of the rescaled negative
/// log-likelihood at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct LikelihoodEval {
    pub value: f64,
    pub grad_tau2: f64,
    pub grad_sigma2: f64,
    pub grad_phi: f64,
}

fn check_lengths(locs: &LocationSet, y: &Array1<f64>) -> Result<()> {
    if y.len() != locs.n() {
        return Err(Error::Dimension {
            expected: locs.n(),
            got: y.len(),
        });
    }
    Ok(())
}

fn noisy_matrix_from_corr(rho: &Array2<f64>, sigma2: f64, tau2: f64) -> Array2<f64> {
    let n = rho.nrows();
    let mut v = rho * sigma2;
    for i in 0..n {
        v[(i, i)] += tau2;
    }
    v
}

/// `ℓ = log det V + yᵀV⁻¹y` with analytic gradients.
///
/// The φ-gradient uses the exact identity d/dx [x^ν K_ν(x)] = −x^ν K_{ν−1}(x)
/// rather than a finite difference; the derivative matrix costs one extra
/// kernel pass.
pub fn neg_loglik(
    params: &NoisyModelParams,
    locs: &LocationSet,
    y: &Array1<f64>,
) -> Result<LikelihoodEval> {
    check_lengths(locs, y)?;
    let corr = Correlation::new(params.matern.nu())?;
    let dists = distance_matrix(locs);
    let rho = corr_matrix_from_dists(&corr, params.matern.phi(), &dists);
    let v = noisy_matrix_from_corr(&rho, params.matern.sigma2(), params.tau2());
    let factor = cholesky(&v)?;
    let alpha = factor.solve_vec(y)?;
    let value = factor.logdet() + y.dot(&alpha);

    let vinv = factor.inverse();
    let n = locs.n();
    let drho = corr_dphi_from_dists(&corr, params.matern.phi(), &dists);
    let mut tr_vinv = 0.0;
    let mut tr_vinv_rho = 0.0;
    let mut tr_vinv_drho = 0.0;
    for i in 0..n {
        tr_vinv += vinv[(i, i)];
        tr_vinv_rho += vinv[(i, i)] * rho[(i, i)];
        for j in (i + 1)..n {
            tr_vinv_rho += 2.0 * vinv[(i, j)] * rho[(i, j)];
            tr_vinv_drho += 2.0 * vinv[(i, j)] * drho[(i, j)];
        }
    }
    let alpha_sq = alpha.dot(&alpha);
    let rho_alpha = rho.dot(&alpha);
    let drho_alpha = drho.dot(&alpha);
    let grad_tau2 = tr_vinv - alpha_sq;
    let grad_sigma2 = tr_vinv_rho - alpha.dot(&rho_alpha);
    let grad_phi = params.matern.sigma2() * (tr_vinv_drho - alpha.dot(&drho_alpha));
    Ok(LikelihoodEval {
        value,
        grad_tau2,
        grad_sigma2,
        grad_phi,
    })
}

/// Value-only `ℓ` (skips the inverse needed by the gradient).
pub fn neg_loglik_value(
    params: &NoisyModelParams,
    locs: &LocationSet,
    y: &Array1<f64>,
) -> Result<f64> {
    check_lengths(locs, y)?;
    let corr = Correlation::new(params.matern.nu())?;
    let dists = distance_matrix(locs);
    let rho = corr_matrix_from_dists(&corr, params.matern.phi(), &dists);
    let v = noisy_matrix_from_corr(&rho, params.matern.sigma2(), params.tau2());
    let factor = cholesky(&v)?;
    Ok(factor.logdet() + factor.quad_form(y)?)
}

/// `ℓ` through the eigenvalue path: `spectrum` holds the eigenvalues of the
/// correlation matrix ρ(φ) and `z = Qᵀy` the data rotated into its eigenbasis,
/// so one decomposition serves every (τ², σ²) on a grid:
/// `ℓ = Σ z_i²/(τ² + σ²λ_i) + Σ log(τ² + σ²λ_i)`.
pub fn neg_loglik_eigenpath(
    params: &NoisyModelParams,
    spectrum: &EigenSpectrum,
    z: &Array1<f64>,
) -> Result<f64> {
    if z.len() != spectrum.n() {
        return Err(Error::Dimension {
            expected: spectrum.n(),
            got: z.len(),
        });
    }
    let tau2 = params.tau2();
    let sigma2 = params.matern.sigma2();
    let mut value = 0.0;
    for (i, (&lam, zi)) in spectrum.values().iter().zip(z.iter()).enumerate() {
        let v = tau2 + sigma2 * lam;
        if v <= 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        value += zi * zi / v + v.ln();
    }
    Ok(value)
}

/// Profile objective in (φ, η = τ²/σ²): σ² is maximized out in closed form,
/// `σ̂² = yᵀ{ρ(φ)+ηI}⁻¹y / n`, and the returned value is
/// `log det{ρ(φ)+ηI} + n log σ̂² + n`, i.e. −2·log-profile-likelihood up to a
/// constant.
pub fn profile_neg_loglik(
    phi: f64,
    eta: f64,
    nu: f64,
    locs: &LocationSet,
    y: &Array1<f64>,
) -> Result<(f64, f64)> {
    check_lengths(locs, y)?;
    if !phi.is_finite() || phi <= 0.0 {
        return Err(Error::domain(format!("phi must be > 0, got {phi}")));
    }
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::domain(format!("eta must be >= 0, got {eta}")));
    }
    let corr = Correlation::new(nu)?;
    let dists = distance_matrix(locs);
    let m = {
        let mut m = corr_matrix_from_dists(&corr, phi, &dists);
        for i in 0..locs.n() {
            m[(i, i)] += eta;
        }
        m
    };
    let factor = cholesky(&m)?;
    profile_from_factor(&factor, y)
}

/// Shared tail of the profile evaluation once ρ(φ)+ηI is factored.
pub(crate) fn profile_from_factor(factor: &CovFactor, y: &Array1<f64>) -> Result<(f64, f64)> {
    let n = y.len() as f64;
    let quad = factor.quad_form(y)?;
    if quad <= 0.0 {
        return Err(Error::numeric("profile likelihood: yᵀM⁻¹y not positive"));
    }
    let sigma2_hat = quad / n;
    Ok((factor.logdet() + n * sigma2_hat.ln() + n, sigma2_hat))
}
