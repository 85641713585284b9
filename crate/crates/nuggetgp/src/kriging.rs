//! Universal kriging of the latent field at unobserved locations, exact mean
//! squared prediction error under true or misspecified parameters, efficiency
//! ratios, and the infinite-grid reference MSE.
//!
//! The predictor is `Ẑ = γᵀ Γ⁻¹ y` with `γ_i = K_w(s₀ − s_i)` (no nugget in
//! γ) and `Γ = K_n + τ² I`. Predictions target the latent field `w`; the
//! observed-value target `y₀ = w₀ + ε₀` shares the point prediction and adds
//! τ₀² to the error variance.

use crate::error::{Error, Result};
use crate::kernel::{Correlation, NoisyModelParams};
use crate::linalg::{build_cov_matrix, cholesky, CovFactor, LocationSet};
use ndarray::{Array1, Array2};
use serde::Serialize;

/// What the squared prediction error is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PredictTarget {
    /// The smooth latent field w(s₀).
    Latent,
    /// The observed process y(s₀) = w(s₀) + ε(s₀); adds τ₀² to the MSPE.
    Observed,
}

/// Point prediction with its exact error variance under the true model and
/// the variance the fitted model asserts for itself.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PredictionResult {
    pub z_hat: f64,
    /// MSPE of the (possibly misspecified) predictor under the true model.
    pub mspe: f64,
    /// MSPE of the optimal predictor under the true model.
    pub mspe_at_truth: f64,
}

/// Kriging weights machinery for one (params, locations) pair; the Γ factor
/// is built once and shared across prediction sites.
pub struct KrigingModel<'a> {
    params: NoisyModelParams,
    locs: &'a LocationSet,
    corr: Correlation,
    factor: CovFactor,
}

impl<'a> KrigingModel<'a> {
    pub fn new(params: NoisyModelParams, locs: &'a LocationSet) -> Result<Self> {
        let gamma_mat = build_cov_matrix(&params, locs);
        let factor = cholesky(&gamma_mat)?;
        Ok(KrigingModel {
            params,
            locs,
            corr: Correlation::new(params.matern.nu())?,
            factor,
        })
    }

    pub fn params(&self) -> &NoisyModelParams {
        &self.params
    }

    /// γ_i = K_w(s₀ − s_i) under this model's Matérn parameters.
    pub fn gamma(&self, s0: &[f64]) -> Array1<f64> {
        let sigma2 = self.params.matern.sigma2();
        let phi = self.params.matern.phi();
        Array1::from_vec(
            (0..self.locs.n())
                .map(|i| sigma2 * self.corr.rho(phi * self.locs.dist_to_point(i, s0)))
                .collect(),
        )
    }

    /// Kriging weights u = Γ⁻¹γ(s₀).
    pub fn weights(&self, s0: &[f64]) -> Result<Array1<f64>> {
        self.factor.solve_vec(&self.gamma(s0))
    }

    /// Ẑ(s₀) = γᵀΓ⁻¹y.
    pub fn predict(&self, y: &Array1<f64>, s0: &[f64]) -> Result<f64> {
        if y.len() != self.locs.n() {
            return Err(Error::Dimension {
                expected: self.locs.n(),
                got: y.len(),
            });
        }
        Ok(self.weights(s0)?.dot(y))
    }

    /// The MSPE this model asserts for its own predictor at s₀
    /// (σ² − γᵀΓ⁻¹γ, plus τ² for the observed target).
    pub fn mspe_asserted(&self, s0: &[f64], target: PredictTarget) -> Result<f64> {
        let gamma = self.gamma(s0);
        let quad = self.factor.quad_form(&gamma)?;
        let base = self.params.matern.sigma2() - quad;
        Ok(match target {
            PredictTarget::Latent => base,
            PredictTarget::Observed => base + self.params.tau2(),
        })
    }
}

/// Exact MSPE of a (possibly misspecified) predictor evaluated under the true
/// model; caches the true latent covariance for repeated sites.
pub struct MspeEvaluator<'a> {
    model: &'a KrigingModel<'a>,
    truth: NoisyModelParams,
    truth_corr: Correlation,
    k0: Array2<f64>,
}

impl<'a> MspeEvaluator<'a> {
    pub fn new(model: &'a KrigingModel<'a>, truth: NoisyModelParams) -> Result<Self> {
        let latent = NoisyModelParams::new(truth.matern, 0.0)?;
        let k0 = build_cov_matrix(&latent, model.locs);
        Ok(MspeEvaluator {
            model,
            truth,
            truth_corr: Correlation::new(truth.matern.nu())?,
            k0,
        })
    }

    fn gamma_truth(&self, s0: &[f64]) -> Array1<f64> {
        let sigma2 = self.truth.matern.sigma2();
        let phi = self.truth.matern.phi();
        Array1::from_vec(
            (0..self.model.locs.n())
                .map(|i| {
                    sigma2 * self.truth_corr.rho(phi * self.model.locs.dist_to_point(i, s0))
                })
                .collect(),
        )
    }

    /// Var_truth{Ẑ(fit) − w₀} = σ₀² − 2uᵀγ₀ + uᵀK₀u + τ₀²uᵀu, u = Γ_fit⁻¹γ_fit.
    pub fn mspe(&self, s0: &[f64], target: PredictTarget) -> Result<f64> {
        let u = self.model.weights(s0)?;
        let gamma0 = self.gamma_truth(s0);
        let k0u = self.k0.dot(&u);
        let base = self.truth.matern.sigma2() - 2.0 * u.dot(&gamma0)
            + u.dot(&k0u)
            + self.truth.tau2() * u.dot(&u);
        Ok(match target {
            PredictTarget::Latent => base,
            PredictTarget::Observed => base + self.truth.tau2(),
        })
    }
}

/// Ẑ(s₀) = γᵀΓ⁻¹y with the Γ factor built for this call.
pub fn krig_predict(
    fit_params: &NoisyModelParams,
    locs: &LocationSet,
    y: &Array1<f64>,
    s0: &[f64],
) -> Result<f64> {
    if locs.n() == 0 {
        return Ok(0.0);
    }
    KrigingModel::new(*fit_params, locs)?.predict(y, s0)
}

/// Exact MSPE of the fitted predictor under the true model (latent target).
pub fn krig_mspe(
    fit_params: &NoisyModelParams,
    true_params: &NoisyModelParams,
    locs: &LocationSet,
    s0: &[f64],
) -> Result<f64> {
    if locs.n() == 0 {
        return Ok(true_params.matern.sigma2());
    }
    let model = KrigingModel::new(*fit_params, locs)?;
    MspeEvaluator::new(&model, *true_params)?.mspe(s0, PredictTarget::Latent)
}

/// Prediction plus both error variances at one site.
pub fn predict_at(
    fit_params: &NoisyModelParams,
    true_params: &NoisyModelParams,
    locs: &LocationSet,
    y: &Array1<f64>,
    s0: &[f64],
    target: PredictTarget,
) -> Result<PredictionResult> {
    if locs.n() == 0 {
        let prior = match target {
            PredictTarget::Latent => true_params.matern.sigma2(),
            PredictTarget::Observed => true_params.matern.sigma2() + true_params.tau2(),
        };
        return Ok(PredictionResult {
            z_hat: 0.0,
            mspe: prior,
            mspe_at_truth: prior,
        });
    }
    let model = KrigingModel::new(*fit_params, locs)?;
    let z_hat = model.predict(y, s0)?;
    let mspe = MspeEvaluator::new(&model, *true_params)?.mspe(s0, target)?;
    let truth_model = KrigingModel::new(*true_params, locs)?;
    let mspe_at_truth = MspeEvaluator::new(&truth_model, *true_params)?.mspe(s0, target)?;
    Ok(PredictionResult {
        z_hat,
        mspe,
        mspe_at_truth,
    })
}

/// Efficiency ratios at s₀:
/// i) MSPE of the fitted predictor under truth over the MSPE of the optimal
///    predictor under truth;
/// ii) the MSPE the fitted model asserts for its own predictor over the MSPE
///     that predictor realizes under truth.
pub fn efficiency_ratios(
    fit_params: &NoisyModelParams,
    true_params: &NoisyModelParams,
    locs: &LocationSet,
    s0: &[f64],
) -> Result<(f64, f64)> {
    let fit_model = KrigingModel::new(*fit_params, locs)?;
    let truth_model = KrigingModel::new(*true_params, locs)?;
    let mspe_fit = MspeEvaluator::new(&fit_model, *true_params)?.mspe(s0, PredictTarget::Latent)?;
    let mspe_opt =
        MspeEvaluator::new(&truth_model, *true_params)?.mspe(s0, PredictTarget::Latent)?;
    if mspe_opt <= 1e-300 {
        return Err(Error::numeric(
            "efficiency_ratios: optimal MSPE is zero (degenerate site)".to_string(),
        ));
    }
    let asserted = fit_model.mspe_asserted(s0, PredictTarget::Latent)?;
    if mspe_fit <= 1e-300 {
        return Err(Error::numeric(
            "efficiency_ratios: realized MSPE is zero (degenerate site)".to_string(),
        ));
    }
    Ok((mspe_fit / mspe_opt, asserted / mspe_fit))
}

/// Reference mean squared error of the best linear unbiased predictor from an
/// infinite regular grid with spacing δ:
/// `(2πc)^{1/α} / (α sin(π/α)) · (δτ²)^{1−1/α}` with α = 2ν+1 and
/// c the spectral tail constant `C σ² φ^{2ν}`.
pub fn stein_grid_mse(c: f64, alpha: f64, delta: f64, tau2: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::domain(format!("alpha must be > 1, got {alpha}")));
    }
    for (name, v) in [("c", c), ("delta", delta), ("tau2", tau2)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::domain(format!("{name} must be > 0, got {v}")));
        }
    }
    let two_pi_c = 2.0 * std::f64::consts::PI * c;
    Ok(two_pi_c.powf(1.0 / alpha) / (alpha * (std::f64::consts::PI / alpha).sin())
        * (delta * tau2).powf(1.0 - 1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{matern_cov, MaternParams};
    use crate::special::gamma_fn;

    struct Lcg(u64);
    impl Lcg {
        fn next_f64(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn params(tau2: f64, sigma2: f64, phi: f64, nu: f64) -> NoisyModelParams {
        NoisyModelParams::new(MaternParams::new(sigma2, phi, nu).unwrap(), tau2).unwrap()
    }

    #[test]
    fn exact_interpolation_without_nugget() {
        let locs = LocationSet::new(1, vec![0.2, 0.5, 0.8]).unwrap();
        let y = Array1::from_vec(vec![1.5, -0.3, 0.9]);
        let p = params(0.0, 1.0, 4.0, 0.5);
        let got = krig_predict(&p, &locs, &y, &[0.2]).unwrap();
        assert!((got - 1.5).abs() < 1e-9, "got {got}");
        // and the MSPE at a data site under the truth collapses to zero
        let m = krig_mspe(&p, &p, &locs, &[0.2]).unwrap();
        assert!(m.abs() < 1e-9, "mspe {m}");
    }

    #[test]
    fn scalar_prediction() {
        let locs = LocationSet::new(1, vec![0.3]).unwrap();
        let y = Array1::from_vec(vec![2.0]);
        let p = params(0.2, 1.0, 3.0, 0.5);
        let got = krig_predict(&p, &locs, &y, &[0.7]).unwrap();
        let want = matern_cov(&p.matern, 0.4).unwrap() / 1.2 * 2.0;
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn three_point_hand_solve() {
        // exponential kernel, hand 3×3 linear algebra via Cramer's rule
        let locs = LocationSet::new(1, vec![0.0, 0.5, 1.0]).unwrap();
        let y = Array1::from_vec(vec![1.0, 2.0, -1.0]);
        let (tau2, sigma2, phi) = (0.3, 1.4, 2.0);
        let p = params(tau2, sigma2, phi, 0.5);
        let s0 = [0.25];
        let got = krig_predict(&p, &locs, &y, &s0).unwrap();

        let k = |d: f64| sigma2 * (-phi * d).exp();
        let g = [k(0.25), k(0.25), k(0.75)];
        // Γ rows
        let a = [
            [sigma2 + tau2, k(0.5), k(1.0)],
            [k(0.5), sigma2 + tau2, k(0.5)],
            [k(1.0), k(0.5), sigma2 + tau2],
        ];
        let det3 = |m: &[[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d0 = det3(&a);
        let mut x = [0.0f64; 3];
        for c in 0..3 {
            let mut m = a;
            for r in 0..3 {
                m[r][c] = y[r];
            }
            x[c] = det3(&m) / d0;
        }
        let want = g[0] * x[0] + g[1] * x[1] + g[2] * x[2];
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn empty_design_returns_prior_variance() {
        let locs = LocationSet::new(1, vec![]).unwrap();
        let p = params(0.2, 1.3, 3.0, 0.5);
        assert_eq!(krig_mspe(&p, &p, &locs, &[0.5]).unwrap(), 1.3);
        let r = predict_at(&p, &p, &locs, &Array1::zeros(0), &[0.5], PredictTarget::Observed)
            .unwrap();
        assert_eq!(r.mspe, 1.5);
        assert_eq!(r.z_hat, 0.0);
    }

    #[test]
    fn mspe_at_truth_matches_reduced_form() {
        // Eq-8-style three-term expression collapses to σ₀² − γᵀΓ⁻¹γ at truth
        let mut rng = Lcg(42);
        let locs = LocationSet::new(2, (0..80).map(|_| rng.next_f64()).collect()).unwrap();
        let truth = params(0.2, 1.0, 7.489, 0.5);
        let model = KrigingModel::new(truth, &locs).unwrap();
        let eval = MspeEvaluator::new(&model, truth).unwrap();
        for s0 in [[0.25, 0.25], [0.5, 0.5], [0.93, 0.11]] {
            let full = eval.mspe(&s0, PredictTarget::Latent).unwrap();
            let reduced = model.mspe_asserted(&s0, PredictTarget::Latent).unwrap();
            assert!(
                (full - reduced).abs() < 1e-10,
                "at {s0:?}: {full} vs {reduced}"
            );
            assert!(full >= 0.0);
        }
    }

    #[test]
    fn blue_optimality_under_misspecification() {
        let mut rng = Lcg(7);
        let locs = LocationSet::new(2, (0..60).map(|_| rng.next_f64()).collect()).unwrap();
        let truth = params(0.2, 1.0, 7.489, 0.5);
        let s0 = [0.4, 0.6];
        let opt = krig_mspe(&truth, &truth, &locs, &s0).unwrap();
        for _ in 0..20 {
            let t = 0.05 + rng.next_f64();
            let s = 0.3 + 2.0 * rng.next_f64();
            let f = 2.0 + 12.0 * rng.next_f64();
            let fit = params(t, s, f, 0.5);
            let m = krig_mspe(&fit, &truth, &locs, &s0).unwrap();
            assert!(
                m >= opt - 1e-10,
                "misspecified ({t},{s},{f}) beat the BLUE: {m} < {opt}"
            );
        }
    }

    #[test]
    fn efficiency_ratios_identity_at_truth() {
        let mut rng = Lcg(3);
        let locs = LocationSet::new(2, (0..50).map(|_| rng.next_f64()).collect()).unwrap();
        let truth = params(0.2, 1.0, 7.489, 0.5);
        let (r1, r2) = efficiency_ratios(&truth, &truth, &locs, &[0.33, 0.77]).unwrap();
        assert!((r1 - 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_mspe_matches_analytic() {
        // joint simulation of (w at sites, w₀) plus independent noise; the
        // empirical squared error of the misspecified predictor matches the
        // exact expression within Monte Carlo error
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12345);
        let normal = rand_distr::StandardNormal;
        let gauss = |r: &mut rand_chacha::ChaCha8Rng| -> f64 { normal.sample(r) };
        let n = 60;
        let locs = {
            let mut c = Vec::with_capacity(2 * n);
            for _ in 0..2 * n {
                c.push(rand::Rng::random::<f64>(&mut rng));
            }
            LocationSet::new(2, c).unwrap()
        };
        let s0 = [0.45, 0.55];
        let truth = params(0.25, 1.0, 6.0, 0.5);
        let fit = params(0.6, 1.3, 4.0, 0.5);

        // joint latent covariance over sites ∪ {s0}
        let mut joint = Array2::zeros((n + 1, n + 1));
        let latent = params(0.0, 1.0, 6.0, 0.5);
        for i in 0..n {
            for j in 0..n {
                joint[(i, j)] = matern_cov(&latent.matern, locs.dist(i, j)).unwrap();
            }
            let d0 = locs.dist_to_point(i, &s0);
            joint[(i, n)] = matern_cov(&latent.matern, d0).unwrap();
            joint[(n, i)] = joint[(i, n)];
        }
        joint[(n, n)] = 1.0;
        let (jf, _) = crate::linalg::cholesky_with_jitter(&joint, 1.0).unwrap();

        let model = KrigingModel::new(fit, &locs).unwrap();
        let analytic = MspeEvaluator::new(&model, truth)
            .unwrap()
            .mspe(&s0, PredictTarget::Latent)
            .unwrap();

        let reps = 1500;
        let mut errs = Vec::with_capacity(reps);
        for _ in 0..reps {
            let zv = Array1::from_vec((0..n + 1).map(|_| gauss(&mut rng)).collect());
            let w = jf.lower().dot(&zv);
            let mut y = Array1::zeros(n);
            for i in 0..n {
                y[i] = w[i] + truth.tau2().sqrt() * gauss(&mut rng);
            }
            let zhat = model.predict(&y, &s0).unwrap();
            let e = zhat - w[n];
            errs.push(e * e);
        }
        let mean = crate::stats::mean(&errs);
        let se = crate::stats::sample_sd(&errs) / (reps as f64).sqrt();
        assert!(
            (mean - analytic).abs() < 3.0 * se,
            "empirical {mean} vs analytic {analytic} (se {se})"
        );
    }

    #[test]
    fn stein_reference_value_and_scaling() {
        let v = stein_grid_mse(1.0, 2.0, 0.01, 0.2).unwrap();
        assert!((v - 0.056049912163979287).abs() < 1e-12);
        // doubling δ scales by 2^{1−1/α}
        let v2 = stein_grid_mse(1.0, 2.0, 0.02, 0.2).unwrap();
        assert!((v2 / v - 2f64.powf(0.5)).abs() < 1e-12);
        assert!(stein_grid_mse(1.0, 1.0, 0.01, 0.2).is_err());
        assert!(stein_grid_mse(1.0, 0.5, 0.01, 0.2).is_err());
    }

    #[test]
    fn stein_matches_dense_grid_blue() {
        // observations at δj on [0,1] minus the prediction site, δ = 1/2000;
        // the exact BLUE MSPE approaches the infinite-grid expression
        let nu = 0.5;
        let (sigma2, tau2) = (1.0, 0.2);
        let phi = 2.996;
        let delta = 1.0 / 2000.0;
        let mut coords: Vec<f64> = Vec::new();
        let s0 = 0.5;
        let m = 2000usize;
        for j in 0..=m {
            let x = j as f64 * delta;
            if (x - s0).abs() > 1e-12 {
                coords.push(x);
            }
        }
        let locs = LocationSet::new(1, coords).unwrap();
        let truth = params(tau2, sigma2, phi, nu);
        let model = KrigingModel::new(truth, &locs).unwrap();
        let blue = model.mspe_asserted(&[s0], PredictTarget::Latent).unwrap();

        let c_norm = gamma_fn(nu + 0.5).unwrap()
            / (gamma_fn(nu).unwrap() * std::f64::consts::PI.sqrt());
        let c = c_norm * sigma2 * phi.powf(2.0 * nu);
        let reference = stein_grid_mse(c, 2.0 * nu + 1.0, delta, tau2).unwrap();
        assert!(
            (blue - reference).abs() / reference < 0.10,
            "dense-grid BLUE {blue} vs reference {reference}"
        );
    }
}
