//! Empirical verification of the kernel-matrix eigenvalue decay law
//! `λ_i^{(n)} ≍ n · i^{−2ν/d−1}` on regular grids, the related sum
//! asymptotics, and estimation of the CLT constants c₁, c₂, c₃.
//!
//! Everything here works on the noiseless kernel matrix `K_n = σ² ρ(φ)`;
//! spectra come from the dense symmetric eigensolver, so the feasible n is
//! bounded by the O(n³) decomposition (a few thousand).

use crate::error::{Error, Result};
use crate::estimate::FitResult;
use crate::kernel::Correlation;
use crate::linalg::{eigen_sym, EigenSpectrum};
use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

/// Scaled-eigenvalue ratios `λ_i / (n · i^{−2ν/d−1})` at the probe indices.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub n: usize,
    pub nu: f64,
    pub d: usize,
    /// probe exponents α with their indices i = round(n^α) and ratio values
    pub alphas: Vec<f64>,
    pub indices: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// The Lemma-style spectral sums at one (τ², σ², spectrum) and the derived
/// CLT constants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaSums {
    pub sum_a2: f64,
    pub sum_lam_a2: f64,
    pub sum_b: f64,
    pub sum_b2: f64,
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub c3_hat: f64,
}

/// Round-half-down index i = round(n^α), clamped into [1, n].
pub fn probe_index(n: usize, alpha: f64) -> usize {
    let t = (n as f64).powf(alpha);
    let i = (t - 0.5).ceil() as usize;
    i.clamp(1, n)
}

/// Regular grid [0,1)^d ∩ n^{−1/d} Z^d as flat coordinates; `n` must be a
/// d-th power for d > 1.
pub(crate) fn regular_grid_coords(d: usize, n: usize) -> Result<Vec<f64>> {
    match d {
        1 => Ok((0..n).map(|i| i as f64 / n as f64).collect()),
        2 => {
            let m = (n as f64).sqrt().round() as usize;
            if m * m != n {
                return Err(Error::config(format!(
                    "regular grid in d=2 needs a square n, got {n}"
                )));
            }
            let mut c = Vec::with_capacity(2 * n);
            for i in 0..m {
                for j in 0..m {
                    c.push(i as f64 / m as f64);
                    c.push(j as f64 / m as f64);
                }
            }
            Ok(c)
        }
        3 => {
            let m = (n as f64).cbrt().round() as usize;
            if m * m * m != n {
                return Err(Error::config(format!(
                    "regular grid in d=3 needs a cubic n, got {n}"
                )));
            }
            let mut c = Vec::with_capacity(3 * n);
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        c.push(i as f64 / m as f64);
                        c.push(j as f64 / m as f64);
                        c.push(k as f64 / m as f64);
                    }
                }
            }
            Ok(c)
        }
        _ => Err(Error::config(format!("dimension must be 1..3, got {d}"))),
    }
}

// K_n on the 1-d regular grid is Toeplitz: n kernel evaluations fill the
// whole matrix.
fn kernel_matrix_grid_1d(corr: &Correlation, sigma2: f64, phi: f64, n: usize) -> Array2<f64> {
    let lags: Vec<f64> = (0..n)
        .map(|k| sigma2 * corr.rho(phi * k as f64 / n as f64))
        .collect();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = lags[i.abs_diff(j)];
        }
    }
    m
}

fn kernel_matrix_grid(
    corr: &Correlation,
    sigma2: f64,
    phi: f64,
    d: usize,
    n: usize,
) -> Result<Array2<f64>> {
    if d == 1 {
        return Ok(kernel_matrix_grid_1d(corr, sigma2, phi, n));
    }
    let coords = regular_grid_coords(d, n)?;
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[(i, i)] = sigma2;
        for j in (i + 1)..n {
            let mut s = 0.0;
            for k in 0..d {
                let diff = coords[i * d + k] - coords[j * d + k];
                s += diff * diff;
            }
            let v = sigma2 * corr.rho(phi * s.sqrt());
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Spectrum of the noiseless kernel matrix on the regular grid.
pub fn grid_spectrum(nu: f64, sigma2: f64, phi: f64, d: usize, n: usize) -> Result<EigenSpectrum> {
    if n > 4000 {
        return Err(Error::config(format!(
            "dense eigensolve capped at n = 4000, got {n}"
        )));
    }
    let corr = Correlation::new(nu)?;
    let k = kernel_matrix_grid(&corr, sigma2, phi, d, n)?;
    eigen_sym(&k)
}

/// Decay-law scan: for each n in `n_list`, the ratios
/// `λ_i/(n·i^{−2ν/d−1})` at i = round(n^α), α in `alpha_list`. Scan items run
/// in parallel; output order follows `n_list`.
pub fn decay_scan(
    nu: f64,
    sigma2: f64,
    phi: f64,
    d: usize,
    n_list: &[usize],
    alpha_list: &[f64],
) -> Result<Vec<DecayReport>> {
    n_list
        .par_iter()
        .map(|&n| {
            let spectrum = grid_spectrum(nu, sigma2, phi, d, n)?;
            let mut indices = Vec::with_capacity(alpha_list.len());
            let mut lambdas = Vec::with_capacity(alpha_list.len());
            let mut ratios = Vec::with_capacity(alpha_list.len());
            for &alpha in alpha_list {
                let i = probe_index(n, alpha);
                let lam = spectrum.values()[i - 1];
                let scale = n as f64 * (i as f64).powf(-2.0 * nu / d as f64 - 1.0);
                indices.push(i);
                lambdas.push(lam);
                ratios.push(lam / scale);
            }
            Ok(DecayReport {
                n,
                nu,
                d,
                alphas: alpha_list.to_vec(),
                indices,
                lambdas,
                ratios,
            })
        })
        .collect()
}

/// Spectral sums behind the consistency/CLT arguments, evaluated at (τ², σ²)
/// on a unit-variance spectrum:
/// `a_i = 1/(τ² + σ²λ_i)`, `b_i = λ_i a_i`,
/// `c₁ = Σa²/n`, `c₂ = Σa⁴/n`, `c₃ = Σb²/n^{1/(1+2ν/d)}`.
pub fn lemma_sums(
    tau2: f64,
    sigma2: f64,
    spectrum: &EigenSpectrum,
    nu: f64,
    d: usize,
) -> LemmaSums {
    let n = spectrum.n() as f64;
    let mut sum_a2 = 0.0;
    let mut sum_a4 = 0.0;
    let mut sum_lam_a2 = 0.0;
    let mut sum_b = 0.0;
    let mut sum_b2 = 0.0;
    for &lam in spectrum.values() {
        let a = 1.0 / (tau2 + sigma2 * lam);
        let a2 = a * a;
        let b = lam * a;
        sum_a2 += a2;
        sum_a4 += a2 * a2;
        sum_lam_a2 += lam * a2;
        sum_b += b;
        sum_b2 += b * b;
    }
    let rate = 1.0 / (1.0 + 2.0 * nu / d as f64);
    LemmaSums {
        sum_a2,
        sum_lam_a2,
        sum_b,
        sum_b2,
        c1_hat: sum_a2 / n,
        c2_hat: sum_a4 / n,
        c3_hat: sum_b2 / n.powf(rate),
    }
}

/// CLT-predicted standard deviations at sample size n:
/// `sd(τ̂²) = τ₀²√(2c₂)/(c₁√n)` and
/// `sd(κ̂) = φ₁^{2ν}√(2/c₃) · n^{−1/(2+4ν/d)}`.
pub fn clt_predicted_sd(
    lemma: &LemmaSums,
    tau2_0: f64,
    phi1: f64,
    nu: f64,
    d: usize,
    n: usize,
) -> Result<(f64, f64)> {
    if !(lemma.c1_hat > 0.0 && lemma.c2_hat > 0.0 && lemma.c3_hat > 0.0) {
        return Err(Error::numeric(
            "clt_predicted_sd requires positive c-estimates".to_string(),
        ));
    }
    let nf = n as f64;
    let sd_tau2 = tau2_0 * (2.0 * lemma.c2_hat).sqrt() / (lemma.c1_hat * nf.sqrt());
    let rate = 1.0 / (2.0 + 4.0 * nu / d as f64);
    let sd_kappa = phi1.powf(2.0 * nu) * (2.0 / lemma.c3_hat).sqrt() * nf.powf(-rate);
    Ok((sd_tau2, sd_kappa))
}

/// Stationarity residuals of a fit in the eigenbasis: the τ²- and σ²-scores
/// of the eigen-path objective with the rotated data playing the role of the
/// whitened variables. Both vanish at a valid interior stationary point.
pub fn score_residuals(
    fit: &FitResult,
    spectrum: &EigenSpectrum,
    y_rotated: &Array1<f64>,
) -> Result<(f64, f64)> {
    if y_rotated.len() != spectrum.n() {
        return Err(Error::Dimension {
            expected: spectrum.n(),
            got: y_rotated.len(),
        });
    }
    let tau2 = fit.tau2_hat;
    let sigma2 = fit.sigma2_hat;
    let mut resid_tau2 = 0.0;
    let mut resid_sigma2 = 0.0;
    for (&lam, z) in spectrum.values().iter().zip(y_rotated.iter()) {
        let v = tau2 + sigma2 * lam;
        if v <= 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: 0 });
        }
        let a = 1.0 / v;
        let s = a - z * z * a * a;
        resid_tau2 += s;
        resid_sigma2 += lam * s;
    }
    Ok((resid_tau2, resid_sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{fit_fixed_phi, FitBox};
    use crate::kernel::{MaternParams, NoisyModelParams};
    use crate::linalg::{cholesky, eigen_sym_rotate, LocationSet};

    #[test]
    fn probe_index_rounding() {
        assert_eq!(probe_index(4, 0.5), 2);
        assert_eq!(probe_index(9, 0.5), 3);
        assert_eq!(probe_index(1, 0.75), 1);
        assert_eq!(probe_index(100, 0.5), 10);
        assert_eq!(probe_index(1000, 0.0), 1);
        assert_eq!(probe_index(8, 1.0), 8);
        // tie rule is round-half-down: ceil(t − 1/2)
        assert_eq!((2.5f64 - 0.5).ceil() as usize, 2);
        assert_eq!((2.5000001f64 - 0.5).ceil() as usize, 3);
    }

    #[test]
    fn regular_grid_shapes() {
        let g1 = regular_grid_coords(1, 4).unwrap();
        assert_eq!(g1, vec![0.0, 0.25, 0.5, 0.75]);
        let g2 = regular_grid_coords(2, 9).unwrap();
        assert_eq!(g2.len(), 18);
        assert!(regular_grid_coords(2, 10).is_err());
        let g3 = regular_grid_coords(3, 27).unwrap();
        assert_eq!(g3.len(), 81);
        assert!(regular_grid_coords(3, 26).is_err());
    }

    #[test]
    fn decay_scan_single_point() {
        // n = 1 → ratio = λ₁/(1·1) = σ²
        let reports = decay_scan(0.9, 1.7, 1.0, 1, &[1], &[0.5]).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].indices, vec![1]);
        assert!((reports[0].ratios[0] - 1.7).abs() < 1e-12);
    }

    #[test]
    fn decay_ratios_bounded_and_flattening() {
        // ν=0.9, d=1 scan: the α=0.75 ratio settles as n grows and the whole
        // scan stays within a uniform band (Corollary-style upper bound).
        let n_list = [100usize, 200, 400, 800];
        let reports = decay_scan(0.9, 1.0, 1.0, 1, &n_list, &[0.5, 0.75, 0.9]).unwrap();
        let mut all_ratios = Vec::new();
        let mut mid_ratios = Vec::new();
        for r in &reports {
            all_ratios.extend(r.ratios.iter().copied());
            mid_ratios.push(r.ratios[1]);
        }
        for &r in &all_ratios {
            assert!(r > 0.0 && r.is_finite());
        }
        let max = all_ratios.iter().fold(0.0f64, |a, &b| a.max(b));
        let min = all_ratios.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(max / min < 50.0, "ratios spread too wide: {min}..{max}");
        // flattening: relative change between consecutive n shrinks
        let change1 = (mid_ratios[1] - mid_ratios[0]).abs() / mid_ratios[0];
        let change_last = (mid_ratios[3] - mid_ratios[2]).abs() / mid_ratios[2];
        assert!(
            change_last < change1,
            "no flattening: {change1} vs {change_last}"
        );
    }

    #[test]
    fn lemma_sums_hand_cases() {
        // all λ = 0 → Σa² = n/τ⁴, sums of b vanish
        let spec = EigenSpectrum::from_descending(vec![0.0; 6]);
        let s = lemma_sums(0.5, 1.0, &spec, 0.5, 1);
        assert!((s.sum_a2 - 6.0 / 0.25).abs() < 1e-12); // n/τ⁴ with τ⁴ = (τ²)²
        assert_eq!(s.sum_b, 0.0);
        assert_eq!(s.sum_b2, 0.0);

        // n = 2 hand case: λ = (1, 0), τ² = σ² = 1 → Σa² = 1/4 + 1
        let spec2 = EigenSpectrum::from_descending(vec![1.0, 0.0]);
        let s2 = lemma_sums(1.0, 1.0, &spec2, 0.5, 1);
        assert!((s2.sum_a2 - 1.25).abs() < 1e-15);
        assert!((s2.sum_lam_a2 - 0.25).abs() < 1e-15);
        assert!((s2.sum_b - 0.5).abs() < 1e-15);
        assert!((s2.sum_b2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lemma_sum_a2_stabilizes_on_grid() {
        // Σa²/n settles as n grows (ν = 1/2, d = 1 regular grid)
        let mut vals = Vec::new();
        for &n in &[200usize, 400, 800] {
            let spec = grid_spectrum(0.5, 1.0, 1.0, 1, n).unwrap();
            let s = lemma_sums(0.2, 1.0, &spec, 0.5, 1);
            vals.push(s.sum_a2 / n as f64);
        }
        let rel = (vals[2] - vals[1]).abs() / vals[1];
        assert!(rel < 0.05, "Σa²/n not stabilizing: {vals:?}");
    }

    #[test]
    fn clt_sd_scaling_laws() {
        let spec = grid_spectrum(0.5, 1.0, 1.0, 1, 400).unwrap();
        let s = lemma_sums(0.2, 1.0, &spec, 0.5, 1);
        let (sd_t_1, sd_k_1) = clt_predicted_sd(&s, 0.2, 7.489, 0.5, 1, 400).unwrap();
        let (sd_t_2, sd_k_2) = clt_predicted_sd(&s, 0.2, 7.489, 0.5, 1, 800).unwrap();
        // doubling n scales sd(τ̂²) by 2^{-1/2} exactly
        assert!((sd_t_2 / sd_t_1 - 0.5f64.sqrt()).abs() < 1e-12);
        // κ̂ rate exponent 1/(2+4ν/d): 1/4 at ν=1/2, d=1 (the OU rate)
        assert!((sd_k_2 / sd_k_1 - 2f64.powf(-0.25)).abs() < 1e-12);
        // d=2: exponent 1/3
        let (_, sd_k2_1) = clt_predicted_sd(&s, 0.2, 7.489, 0.5, 2, 400).unwrap();
        let (_, sd_k2_2) = clt_predicted_sd(&s, 0.2, 7.489, 0.5, 2, 800).unwrap();
        assert!((sd_k2_2 / sd_k2_1 - 2f64.powf(-1.0 / 3.0)).abs() < 1e-12);
        // degenerate c-estimates rejected
        let bad = LemmaSums {
            sum_a2: 0.0,
            sum_lam_a2: 0.0,
            sum_b: 0.0,
            sum_b2: 0.0,
            c1_hat: 0.0,
            c2_hat: 1.0,
            c3_hat: 1.0,
        };
        assert!(clt_predicted_sd(&bad, 0.2, 7.489, 0.5, 1, 100).is_err());
    }

    #[test]
    fn score_residuals_vanish_at_fit_and_grow_under_perturbation() {
        struct Lcg(u64);
        impl Lcg {
            fn next_f64(&mut self) -> f64 {
                self.0 = self
                    .0
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (self.0 >> 11) as f64 / (1u64 << 53) as f64
            }
            fn next_gauss(&mut self) -> f64 {
                let u1 = self.next_f64().max(1e-12);
                let u2 = self.next_f64();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            }
        }
        let mut rng = Lcg(2026);
        let locs = LocationSet::new(2, (0..120).map(|_| rng.next_f64()).collect()).unwrap();
        let truth = NoisyModelParams::new(MaternParams::new(1.0, 6.0, 0.5).unwrap(), 0.4)
            .unwrap();
        let v = crate::linalg::build_cov_matrix(&truth, &locs);
        let f = cholesky(&v).unwrap();
        let zn = Array1::from_vec((0..60).map(|_| rng.next_gauss()).collect());
        let y = f.lower().dot(&zn);

        let box_d = FitBox {
            tau2: (1e-6, 50.0),
            sigma2: (1e-6, 50.0),
        };
        let fit = fit_fixed_phi(6.0, 0.5, &box_d, &locs, &y).unwrap();
        assert!(fit.converged && !fit.hit_boundary);

        let corr = Correlation::new(0.5).unwrap();
        let dists = crate::linalg::distance_matrix(&locs);
        let rho = crate::linalg::corr_matrix_from_dists(&corr, 6.0, &dists);
        let (spec, z) = eigen_sym_rotate(&rho, &y).unwrap();
        let (rt, rs) = score_residuals(&fit, &spec, &z).unwrap();
        let n = locs.n() as f64;
        assert!(rt.abs() <= 1e-6 * n, "resid_tau2 {rt}");
        assert!(rs.abs() <= 1e-6 * n, "resid_sigma2 {rs}");

        // internal identity: resid_sigma2 is exactly the σ²-partial of the
        // eigen-path objective
        let h = 1e-5 * fit.sigma2_hat;
        let p_up = NoisyModelParams::new(
            MaternParams::new(fit.sigma2_hat + h, 6.0, 0.5).unwrap(),
            fit.tau2_hat,
        )
        .unwrap();
        let p_dn = NoisyModelParams::new(
            MaternParams::new(fit.sigma2_hat - h, 6.0, 0.5).unwrap(),
            fit.tau2_hat,
        )
        .unwrap();
        let fd = (crate::likelihood::neg_loglik_eigenpath(&p_up, &spec, &z).unwrap()
            - crate::likelihood::neg_loglik_eigenpath(&p_dn, &spec, &z).unwrap())
            / (2.0 * h);
        assert!(
            (fd - rs).abs() < 1e-4 * fd.abs().max(1e-3),
            "σ²-score {rs} vs FD {fd}"
        );

        // perturbing τ̂² strictly increases the τ²-residual
        let mut bumped = fit.clone();
        bumped.tau2_hat += 0.01;
        let (rt_b, _) = score_residuals(&bumped, &spec, &z).unwrap();
        assert!(rt_b.abs() > rt.abs());
    }
}
