//! Data-generating process, sampling designs, the replication engine, and
//! summary statistics for the simulation studies.
//!
//! Determinism contract: every random quantity comes from a ChaCha stream
//! seeded by a SHA-256 hash of (master seed, purpose labels), so any cell of
//! any study is re-runnable in isolation and results are identical across
//! runs and worker counts. Replicates are independent tasks; summaries reduce
//! in replicate-index order.

use crate::error::{Error, Result};
use crate::estimate::{
    default_fit_box, fit_fixed_phi, fit_no_nugget, fit_profile, FitResult, ProfileBounds,
};
use crate::kernel::{Correlation, NoisyModelParams};
use crate::kriging::{KrigingModel, MspeEvaluator, PredictTarget};
use crate::likelihood::neg_loglik_eigenpath;
use crate::linalg::{
    cholesky_with_jitter, corr_matrix_from_dists, distance_matrix, eigen_sym_rotate,
    LocationSet,
};
use crate::stats;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// 32-byte seed derived from the master seed and a purpose path, so any
/// sub-stream is reconstructible in isolation.
pub fn derive_seed(master: u64, parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in parts {
        h.update([0x1f]);
        h.update(p.as_bytes());
    }
    h.finalize().into()
}

/// Sampling design families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// 67×67 grid with coordinates 0.005(0.015)0.995 in each axis, uniform
    /// [−0.005, 0.005]² perturbations, ≥ 0.005 separation enforced, and a
    /// random subset of n points.
    PerturbedGrid2d,
    /// [0,1)^d ∩ n^{−1/d}Z^d.
    RegularGrid,
    /// n iid uniform points in [0,1]^d.
    UniformRandom,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
}

const PGRID_SIDE: usize = 67;
const PGRID_MIN_SEP: f64 = 0.005;

fn perturbed_grid(n: usize, seed: u64) -> Result<LocationSet> {
    let total = PGRID_SIDE * PGRID_SIDE;
    if n > total {
        return Err(Error::config(format!(
            "perturbed grid holds {total} points, requested {n}"
        )));
    }
    let mut rng = ChaCha8Rng::from_seed(derive_seed(seed, &["perturbed_grid"]));
    let base: Vec<(f64, f64)> = (0..PGRID_SIDE)
        .flat_map(|i| {
            (0..PGRID_SIDE).map(move |j| (0.005 + 0.015 * i as f64, 0.005 + 0.015 * j as f64))
        })
        .collect();
    let mut pts: Vec<(f64, f64)> = base
        .iter()
        .map(|&(x, y)| {
            (
                x + rng.random_range(-0.005..=0.005),
                y + rng.random_range(-0.005..=0.005),
            )
        })
        .collect();
    // rejection-resample perturbations of points violating the separation
    for _sweep in 0..100 {
        let mut violators = Vec::new();
        'outer: for (i, &(xi, yi)) in pts.iter().enumerate() {
            // only neighbours within one grid cell can violate 0.005
            let gi = i / PGRID_SIDE;
            let gj = i % PGRID_SIDE;
            for di in gi.saturating_sub(1)..=(gi + 1).min(PGRID_SIDE - 1) {
                for dj in gj.saturating_sub(1)..=(gj + 1).min(PGRID_SIDE - 1) {
                    let k = di * PGRID_SIDE + dj;
                    if k == i {
                        continue;
                    }
                    let (xk, yk) = pts[k];
                    let dist = ((xi - xk).powi(2) + (yi - yk).powi(2)).sqrt();
                    if dist < PGRID_MIN_SEP {
                        violators.push(i);
                        continue 'outer;
                    }
                }
            }
        }
        if violators.is_empty() {
            break;
        }
        for &i in &violators {
            let (bx, by) = base[i];
            pts[i] = (
                bx + rng.random_range(-0.005..=0.005),
                by + rng.random_range(-0.005..=0.005),
            );
        }
    }
    // seeded Fisher–Yates, then the first n points
    let mut order: Vec<usize> = (0..total).collect();
    for i in (1..total).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut coords = Vec::with_capacity(2 * n);
    for &idx in order.iter().take(n) {
        coords.push(pts[idx].0);
        coords.push(pts[idx].1);
    }
    LocationSet::new(2, coords)
}

/// Build a sampling design; deterministic in the spec (including its seed).
pub fn make_design(spec: &DesignSpec) -> Result<LocationSet> {
    match spec.kind {
        DesignKind::PerturbedGrid2d => {
            if spec.d != 2 {
                return Err(Error::config(format!(
                    "perturbed_grid_2d requires d = 2, got {}",
                    spec.d
                )));
            }
            perturbed_grid(spec.n, spec.seed)
        }
        DesignKind::RegularGrid => {
            let coords = crate::eigendiag::regular_grid_coords(spec.d, spec.n)?;
            LocationSet::new(spec.d, coords)
        }
        DesignKind::UniformRandom => {
            let mut rng = ChaCha8Rng::from_seed(derive_seed(spec.seed, &["uniform_random"]));
            for _try in 0..10 {
                let coords: Vec<f64> =
                    (0..spec.n * spec.d).map(|_| rng.random::<f64>()).collect();
                if let Ok(l) = LocationSet::new(spec.d, coords) {
                    return Ok(l);
                }
            }
            Err(Error::numeric(
                "uniform_random design kept producing duplicate points".to_string(),
            ))
        }
    }
}

/// Sampler for y = w + ε over a fixed design: the latent Cholesky factor is
/// built once and reused across replicates.
pub struct GpSampler {
    lower: Array2<f64>,
    tau: f64,
    n: usize,
}

impl GpSampler {
    pub fn new(params: &NoisyModelParams, locs: &LocationSet) -> Result<Self> {
        let latent = NoisyModelParams::new(params.matern, 0.0)?;
        let k = crate::linalg::build_cov_matrix(&latent, locs);
        let (factor, _) = cholesky_with_jitter(&k, params.matern.sigma2())?;
        Ok(GpSampler {
            lower: factor.lower().clone(),
            tau: params.tau2().sqrt(),
            n: locs.n(),
        })
    }

    /// y = L z₁ + τ z₂ from the seeded stream; prefixes of y are valid
    /// samples over location prefixes because L is lower triangular.
    pub fn sample(&self, seed: u64) -> Array1<f64> {
        let mut rng = ChaCha8Rng::from_seed(derive_seed(seed, &["gp_sample"]));
        let z1 = Array1::from_vec(
            (0..self.n)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        );
        let mut y = self.lower.dot(&z1);
        for v in y.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += self.tau * e;
        }
        y
    }
}

/// One draw of the observed process over the locations.
pub fn sample_gp(params: &NoisyModelParams, locs: &LocationSet, seed: u64) -> Result<Array1<f64>> {
    Ok(GpSampler::new(params, locs)?.sample(seed))
}

/// Estimator used per replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Profile,
    FixedPhi,
    NoNugget,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Profile => "profile",
            Estimator::FixedPhi => "fixed-phi",
            Estimator::NoNugget => "no-nugget",
        }
    }
}

/// One generating-parameter setting of the study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Setting {
    pub id: String,
    pub tau2_0: f64,
    pub sigma2_0: f64,
    pub phi_0: f64,
    pub nu: f64,
}

impl Setting {
    pub fn params(&self) -> Result<NoisyModelParams> {
        NoisyModelParams::from_parts(self.tau2_0, self.sigma2_0, self.phi_0, self.nu)
    }

    pub fn kappa_0(&self) -> f64 {
        self.sigma2_0 * self.phi_0.powf(2.0 * self.nu)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationPlan {
    pub settings: Vec<Setting>,
    pub n_list: Vec<usize>,
    pub n_reps: usize,
    pub estimator: Estimator,
    pub master_seed: u64,
    pub design: DesignKind,
    pub design_d: usize,
    /// φ₁ for the fixed-φ estimator; `None` uses each setting's true φ₀.
    pub fixed_phi: Option<f64>,
}

/// Per-replicate fit record (kept for rate/normality diagnostics).
#[derive(Debug, Clone, Serialize)]
pub struct ReplicateRecord {
    pub setting_id: String,
    pub n: usize,
    pub rep: usize,
    pub fit: Option<FitResult>,
    pub fail_reason: Option<String>,
}

/// Percentiles/bias/SD of one estimated quantity in one (setting, n) cell.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationSummary {
    pub setting_id: String,
    pub estimator: String,
    pub quantity: String,
    pub n: usize,
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub bias: f64,
    pub sd: f64,
    pub n_replicates: usize,
    pub n_failed: usize,
    /// false when more than 10% of the fits in the cell failed
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationOutcome {
    pub summaries: Vec<ReplicationSummary>,
    pub records: Vec<ReplicateRecord>,
}

fn fit_one(
    plan: &ReplicationPlan,
    setting: &Setting,
    locs: &LocationSet,
    y: &Array1<f64>,
) -> Result<FitResult> {
    match plan.estimator {
        Estimator::Profile => {
            let bounds = ProfileBounds::for_smoothness(setting.nu)?;
            fit_profile(setting.nu, locs, y, &bounds)
        }
        Estimator::FixedPhi => {
            let phi1 = plan.fixed_phi.unwrap_or(setting.phi_0);
            fit_fixed_phi(phi1, setting.nu, &default_fit_box(y), locs, y)
        }
        Estimator::NoNugget => {
            let b = ProfileBounds::for_smoothness(setting.nu)?;
            fit_no_nugget(setting.nu, locs, y, b.phi)
        }
    }
}

/// Run the replication study: one design per setting, `n_reps` GP draws over
/// the largest n, fits on nested prefixes for each n in `n_list`. Replicates
/// run in parallel; outputs are ordered and independent of the worker count.
pub fn run_replications(plan: &ReplicationPlan) -> Result<ReplicationOutcome> {
    if plan.n_reps == 0 {
        return Err(Error::config("n_reps must be >= 1".to_string()));
    }
    if plan.n_list.is_empty() {
        return Err(Error::config("n_list must not be empty".to_string()));
    }
    let n_max = *plan.n_list.iter().max().unwrap();
    let mut all_records = Vec::new();
    let mut summaries = Vec::new();
    for setting in &plan.settings {
        let params = setting.params()?;
        let design_seed = u64::from_le_bytes(
            derive_seed(plan.master_seed, &["design", &setting.id])[..8]
                .try_into()
                .expect("8 bytes"),
        );
        let locs = make_design(&DesignSpec {
            kind: plan.design,
            d: plan.design_d,
            n: n_max,
            seed: design_seed,
        })?;
        let sampler = GpSampler::new(&params, &locs)?;
        let prefixes: Vec<LocationSet> = plan
            .n_list
            .iter()
            .map(|&n| locs.prefix(n))
            .collect::<Result<_>>()?;

        let records: Vec<Vec<ReplicateRecord>> = (0..plan.n_reps)
            .into_par_iter()
            .map(|rep| {
                let rep_seed = u64::from_le_bytes(
                    derive_seed(
                        plan.master_seed,
                        &["rep", &setting.id, &n_max.to_string(), &rep.to_string()],
                    )[..8]
                        .try_into()
                        .expect("8 bytes"),
                );
                let y_full = sampler.sample(rep_seed);
                plan.n_list
                    .iter()
                    .zip(&prefixes)
                    .map(|(&n, pl)| {
                        let y = Array1::from_vec(y_full.as_slice().unwrap()[..n].to_vec());
                        match fit_one(plan, setting, pl, &y) {
                            Ok(fit) if fit.converged => ReplicateRecord {
                                setting_id: setting.id.clone(),
                                n,
                                rep,
                                fit: Some(fit),
                                fail_reason: None,
                            },
                            Ok(fit) => ReplicateRecord {
                                setting_id: setting.id.clone(),
                                n,
                                rep,
                                fit: None,
                                fail_reason: Some(format!(
                                    "did not converge (n_evals {})",
                                    fit.n_evals
                                )),
                            },
                            Err(e) => ReplicateRecord {
                                setting_id: setting.id.clone(),
                                n,
                                rep,
                                fit: None,
                                fail_reason: Some(e.to_string()),
                            },
                        }
                    })
                    .collect()
            })
            .collect();

        for &n in &plan.n_list {
            let cell: Vec<&ReplicateRecord> = records
                .iter()
                .flatten()
                .filter(|r| r.n == n)
                .collect();
            let n_failed = cell.iter().filter(|r| r.fit.is_none()).count();
            let ok: Vec<&FitResult> = cell.iter().filter_map(|r| r.fit.as_ref()).collect();
            let valid = n_failed * 10 <= cell.len();
            let kappa_0 = setting.kappa_0();
            for (quantity, values, truth) in [
                (
                    "tau2_hat",
                    ok.iter().map(|f| f.tau2_hat).collect::<Vec<_>>(),
                    setting.tau2_0,
                ),
                (
                    "sigma2_hat",
                    ok.iter().map(|f| f.sigma2_hat).collect::<Vec<_>>(),
                    setting.sigma2_0,
                ),
                (
                    "phi_hat",
                    ok.iter().map(|f| f.phi_hat).collect::<Vec<_>>(),
                    setting.phi_0,
                ),
                (
                    "kappa_hat",
                    ok.iter().map(|f| f.kappa_hat).collect::<Vec<_>>(),
                    kappa_0,
                ),
            ] {
                let s = if values.is_empty() {
                    ReplicationSummary {
                        setting_id: setting.id.clone(),
                        estimator: plan.estimator.name().to_string(),
                        quantity: quantity.to_string(),
                        n,
                        p5: f64::NAN,
                        p25: f64::NAN,
                        p50: f64::NAN,
                        p75: f64::NAN,
                        p95: f64::NAN,
                        bias: f64::NAN,
                        sd: f64::NAN,
                        n_replicates: 0,
                        n_failed,
                        valid: false,
                    }
                } else {
                    ReplicationSummary {
                        setting_id: setting.id.clone(),
                        estimator: plan.estimator.name().to_string(),
                        quantity: quantity.to_string(),
                        n,
                        p5: stats::percentile(&values, 5.0),
                        p25: stats::percentile(&values, 25.0),
                        p50: stats::percentile(&values, 50.0),
                        p75: stats::percentile(&values, 75.0),
                        p95: stats::percentile(&values, 95.0),
                        bias: stats::mean(&values) - truth,
                        sd: stats::sample_sd(&values),
                        n_replicates: values.len(),
                        n_failed,
                        valid,
                    }
                };
                summaries.push(s);
            }
        }
        all_records.extend(records.into_iter().flatten());
    }
    Ok(ReplicationOutcome {
        summaries,
        records: all_records,
    })
}

/// Which parameter the surface holds fixed at its generating value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceFixed {
    /// σ² = σ₀²; axes (φ, τ²)
    Sigma2,
    /// κ = κ₀, i.e. σ² = κ₀/φ^{2ν}; axes (φ, τ²)
    Kappa,
    /// τ² = τ₀²; axes (φ, σ²)
    Tau2,
}

/// Inclusive linear grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Log-likelihood surface (−ℓ/2) over (φ, other) with one parameter pinned at
/// its generating value.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceGrid {
    pub axis1_name: String,
    pub axis1: Vec<f64>,
    pub axis2_name: String,
    pub axis2: Vec<f64>,
    /// row-major over (axis1, axis2)
    pub values: Vec<f64>,
    /// false where the covariance was numerically non-PD (value is NaN)
    pub ok: Vec<bool>,
    pub fixed_desc: String,
}

impl SurfaceGrid {
    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis2.len() + j]
    }
}

/// Map −ℓ/2 over the grid, reusing one eigendecomposition per φ. Columns run
/// in parallel.
pub fn likelihood_surface(
    truth: &Setting,
    locs: &LocationSet,
    y: &Array1<f64>,
    phi_grid: &GridSpec,
    other_grid: &GridSpec,
    fixed: SurfaceFixed,
) -> Result<SurfaceGrid> {
    if y.len() != locs.n() {
        return Err(Error::Dimension {
            expected: locs.n(),
            got: y.len(),
        });
    }
    let corr = Correlation::new(truth.nu)?;
    let dists = distance_matrix(locs);
    let phis = phi_grid.values();
    let others = other_grid.values();
    let kappa_0 = truth.kappa_0();

    let columns: Vec<Result<Vec<(f64, bool)>>> = phis
        .par_iter()
        .map(|&phi| {
            let rho = corr_matrix_from_dists(&corr, phi, &dists);
            let (spectrum, z) = eigen_sym_rotate(&rho, y)?;
            let mut col = Vec::with_capacity(others.len());
            for &other in &others {
                let (tau2, sigma2) = match fixed {
                    SurfaceFixed::Sigma2 => (other, truth.sigma2_0),
                    SurfaceFixed::Kappa => (other, kappa_0 / phi.powf(2.0 * truth.nu)),
                    SurfaceFixed::Tau2 => (truth.tau2_0, other),
                };
                let entry = NoisyModelParams::from_parts(tau2.max(0.0), sigma2, phi, truth.nu)
                    .ok()
                    .and_then(|p| neg_loglik_eigenpath(&p, &spectrum, &z).ok());
                match entry {
                    Some(l) => col.push((-0.5 * l, true)),
                    None => col.push((f64::NAN, false)),
                }
            }
            Ok(col)
        })
        .collect();

    let axis2_name = match fixed {
        SurfaceFixed::Sigma2 | SurfaceFixed::Kappa => "tau2",
        SurfaceFixed::Tau2 => "sigma2",
    };
    let fixed_desc = match fixed {
        SurfaceFixed::Sigma2 => format!("sigma2={}", truth.sigma2_0),
        SurfaceFixed::Kappa => format!("kappa={kappa_0}"),
        SurfaceFixed::Tau2 => format!("tau2={}", truth.tau2_0),
    };
    let mut values = Vec::with_capacity(phis.len() * others.len());
    let mut ok = Vec::with_capacity(phis.len() * others.len());
    for col in columns {
        for (v, flag) in col? {
            values.push(v);
            ok.push(flag);
        }
    }
    Ok(SurfaceGrid {
        axis1_name: "phi".to_string(),
        axis1: phis,
        axis2_name: axis2_name.to_string(),
        axis2: others,
        values,
        ok,
        fixed_desc,
    })
}

/// One MSPE table row: the error variance a model's predictor realizes under
/// the truth and the variance the model asserts for itself.
#[derive(Debug, Clone, Serialize)]
pub struct MspeSweepRow {
    pub n: usize,
    pub s0: Vec<f64>,
    pub model: String,
    pub mspe: f64,
    pub mspe_asserted: f64,
}

/// MSPE over nested design prefixes at the hold-out points, at the truth and
/// at each supplied (label, params) model.
pub fn mspe_sweep(
    truth: &NoisyModelParams,
    fits: &[(String, NoisyModelParams)],
    design: &LocationSet,
    n_list: &[usize],
    holdout: &[Vec<f64>],
) -> Result<Vec<MspeSweepRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        let locs = design.prefix(n)?;
        let truth_model = KrigingModel::new(*truth, &locs)?;
        let truth_eval = MspeEvaluator::new(&truth_model, *truth)?;
        for s0 in holdout {
            rows.push(MspeSweepRow {
                n,
                s0: s0.clone(),
                model: "truth".to_string(),
                mspe: truth_eval.mspe(s0, PredictTarget::Latent)?,
                mspe_asserted: truth_model.mspe_asserted(s0, PredictTarget::Latent)?,
            });
        }
        for (label, fit) in fits {
            let fit_model = KrigingModel::new(*fit, &locs)?;
            let fit_eval = MspeEvaluator::new(&fit_model, *truth)?;
            for s0 in holdout {
                rows.push(MspeSweepRow {
                    n,
                    s0: s0.clone(),
                    model: label.clone(),
                    mspe: fit_eval.mspe(s0, PredictTarget::Latent)?,
                    mspe_asserted: fit_model.mspe_asserted(s0, PredictTarget::Latent)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Evaluation grid of m×m points over [0,1]².
pub fn square_grid_points(m: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            pts.push(vec![
                (i as f64 + 0.5) / m as f64,
                (j as f64 + 0.5) / m as f64,
            ]);
        }
    }
    pts
}
