//! Declarative experiment configurations (TOML or JSON, one file per
//! experiment) with validation. Command-line flags may override the seed and
//! output directory; everything else lives in the file.

use crate::error::{Error, Result};
use crate::kernel::phi_for_range;
use crate::simstudy::{DesignKind, Estimator, GridSpec, Setting, SurfaceFixed};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One generating-parameter setting; exactly one of `phi` / `range` is given
/// (`range` is converted through the 0.05-correlation effective range).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingConfig {
    pub tau2: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub range: Option<f64>,
}

fn default_sigma2() -> f64 {
    1.0
}

impl SettingConfig {
    pub fn resolve_phi(&self, nu: f64) -> Result<f64> {
        match (self.phi, self.range) {
            (Some(phi), None) => Ok(phi),
            (None, Some(range)) => phi_for_range(range, nu),
            _ => Err(Error::config(
                "each setting needs exactly one of `phi` or `range`".to_string(),
            )),
        }
    }

    pub fn to_setting(&self, nu: f64) -> Result<Setting> {
        if !(self.tau2 >= 0.0) {
            return Err(Error::config(format!("tau2 must be >= 0, got {}", self.tau2)));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::config(format!(
                "sigma2 must be > 0, got {}",
                self.sigma2
            )));
        }
        let phi = self.resolve_phi(nu)?;
        if !(phi > 0.0) {
            return Err(Error::config(format!("phi must be > 0, got {phi}")));
        }
        let id = match self.range {
            Some(r) => format!("tau2_{}-range_{}", self.tau2, r),
            None => format!("tau2_{}-phi_{}", self.tau2, phi),
        };
        Ok(Setting {
            id,
            tau2_0: self.tau2,
            sigma2_0: self.sigma2,
            phi_0: phi,
            nu,
        })
    }
}

/// `simulate` command: replication study over a settings grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub estimator: Estimator,
    pub n_reps: usize,
    pub n_list: Vec<usize>,
    pub nu: f64,
    #[serde(default = "default_design")]
    pub design: DesignKind,
    #[serde(default = "default_d")]
    pub d: usize,
    pub settings: Vec<SettingConfig>,
    /// φ₁ for the fixed-φ estimator; defaults to each setting's true φ₀.
    #[serde(default)]
    pub fixed_phi: Option<f64>,
    /// Also write each replicate's dataset as CSV.
    #[serde(default)]
    pub write_datasets: bool,
}

fn default_design() -> DesignKind {
    DesignKind::PerturbedGrid2d
}

fn default_d() -> usize {
    2
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::config(format!("nu must be > 0, got {}", self.nu)));
        }
        if self.n_reps == 0 {
            return Err(Error::config("n_reps must be >= 1".to_string()));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n == 0) {
            return Err(Error::config("n_list must hold positive sizes".to_string()));
        }
        if self.settings.is_empty() {
            return Err(Error::config("at least one setting is required".to_string()));
        }
        for s in &self.settings {
            s.to_setting(self.nu)?;
        }
        if let Some(p) = self.fixed_phi {
            if !(p > 0.0) {
                return Err(Error::config(format!("fixed_phi must be > 0, got {p}")));
            }
        }
        Ok(())
    }
}

/// `eigscan` command: eigenvalue decay scan on regular grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigscanConfig {
    pub seed: u64,
    pub nu_list: Vec<f64>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_one")]
    pub phi: f64,
    #[serde(default = "default_one_usize")]
    pub d: usize,
    pub n_list: Vec<usize>,
    pub alpha_list: Vec<f64>,
    /// Optional (τ², σ²) at which the spectral sums and CLT constants are
    /// estimated at the largest n.
    #[serde(default)]
    pub lemma_tau2: Option<f64>,
}

fn default_one() -> f64 {
    1.0
}

fn default_one_usize() -> usize {
    1
}

impl EigscanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu_list.is_empty() || self.nu_list.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::config("nu_list must hold positive orders".to_string()));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n == 0) {
            return Err(Error::config("n_list must hold positive sizes".to_string()));
        }
        if self.alpha_list.is_empty()
            || self
                .alpha_list
                .iter()
                .any(|&a| !(0.0..=1.0).contains(&a))
        {
            return Err(Error::config("alpha_list must lie in [0, 1]".to_string()));
        }
        if !(1..=3).contains(&self.d) {
            return Err(Error::config(format!("d must be 1..3, got {}", self.d)));
        }
        Ok(())
    }
}

/// Inclusive linear grid range in a config file.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridRange {
    pub fn to_spec(self) -> Result<GridSpec> {
        if self.count == 0 || !(self.min <= self.max) {
            return Err(Error::config(format!(
                "bad grid range [{}, {}] x {}",
                self.min, self.max, self.count
            )));
        }
        Ok(GridSpec {
            min: self.min,
            max: self.max,
            count: self.count,
        })
    }
}

/// `likmap` command: interpolated log-likelihood surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikmapConfig {
    pub seed: u64,
    pub nu: f64,
    pub setting: SettingConfig,
    /// design size the realization is drawn over
    #[serde(default = "default_n_data")]
    pub n_data: usize,
    /// observations used for the surface (a seeded random subset)
    pub n: usize,
    pub fixed: SurfaceFixed,
    pub phi_grid: GridRange,
    pub other_grid: GridRange,
}

fn default_n_data() -> usize {
    1600
}

impl LikmapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::config(format!("nu must be > 0, got {}", self.nu)));
        }
        if self.n == 0 || self.n > self.n_data {
            return Err(Error::config(format!(
                "need 0 < n <= n_data, got n={} n_data={}",
                self.n, self.n_data
            )));
        }
        self.setting.to_setting(self.nu)?;
        self.phi_grid.to_spec()?;
        self.other_grid.to_spec()?;
        Ok(())
    }
}

/// A named (possibly misspecified) model for kriging comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitModelConfig {
    pub label: String,
    pub tau2: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub range: Option<f64>,
}

/// `krig` command: MSPE sweeps and efficiency ratios.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrigConfig {
    pub seed: u64,
    pub nu: f64,
    pub truth: SettingConfig,
    #[serde(default = "default_one_usize")]
    pub d: usize,
    pub n_list: Vec<usize>,
    /// hold-out points in d=1 (defaults to {0.25, 0.5, 0.75})
    #[serde(default = "default_holdout_1d")]
    pub holdout: Vec<f64>,
    /// evaluation grid side in d=2 (m×m)
    #[serde(default = "default_grid_m")]
    pub grid_m: usize,
    #[serde(default)]
    pub fits: Vec<FitModelConfig>,
}

fn default_holdout_1d() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_grid_m() -> usize {
    50
}

impl KrigConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::config(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(1..=2).contains(&self.d) {
            return Err(Error::config(format!(
                "kriging sweeps support d = 1 or 2, got {}",
                self.d
            )));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n == 0) {
            return Err(Error::config("n_list must hold positive sizes".to_string()));
        }
        self.truth.to_setting(self.nu)?;
        for f in &self.fits {
            let sc = SettingConfig {
                tau2: f.tau2,
                sigma2: f.sigma2,
                phi: f.phi,
                range: f.range,
            };
            sc.to_setting(self.nu)?;
        }
        Ok(())
    }
}

/// Parse a config from a string in the given format.
pub fn parse_config_str<T: DeserializeOwned>(text: &str, toml_format: bool) -> Result<T> {
    if toml_format {
        toml::from_str(text).map_err(|e| Error::config(format!("TOML parse error: {e}")))
    } else {
        serde_json::from_str(text).map_err(|e| Error::config(format!("JSON parse error: {e}")))
    }
}

/// Load a config file; the extension picks the format (.toml / .json).
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => parse_config_str(&text, true),
        Some("json") => parse_config_str(&text, false),
        other => Err(Error::config(format!(
            "config must be .toml or .json, got {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_config_roundtrip_and_validation() {
        let text = r#"
seed = 20260810
estimator = "profile"
n_reps = 5
n_list = [100]
nu = 0.5

[[settings]]
tau2 = 0.2
range = 0.4
"#;
        let cfg: SimulateConfig = parse_config_str(text, true).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.design, DesignKind::PerturbedGrid2d);
        let s = cfg.settings[0].to_setting(0.5).unwrap();
        assert!((s.phi_0 - 7.489).abs() < 1e-3);

        // JSON round-trip through serde
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SimulateConfig = parse_config_str(&json, false).unwrap();
        back.validate().unwrap();
        assert_eq!(back.n_reps, 5);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad_nu = r#"
seed = 1
estimator = "profile"
n_reps = 5
n_list = [100]
nu = -0.5
[[settings]]
tau2 = 0.2
range = 0.4
"#;
        let cfg: SimulateConfig = parse_config_str(bad_nu, true).unwrap();
        assert!(cfg.validate().is_err());

        let both = SettingConfig {
            tau2: 0.2,
            sigma2: 1.0,
            phi: Some(7.489),
            range: Some(0.4),
        };
        assert!(both.to_setting(0.5).is_err());
        let neither = SettingConfig {
            tau2: 0.2,
            sigma2: 1.0,
            phi: None,
            range: None,
        };
        assert!(neither.to_setting(0.5).is_err());

        assert!(parse_config_str::<SimulateConfig>("seed = \"zzz\"", true).is_err());
        assert!(parse_config_str::<SimulateConfig>("{not json", false).is_err());
    }

    #[test]
    fn eigscan_and_grid_validation() {
        let cfg = EigscanConfig {
            seed: 1,
            nu_list: vec![0.9, 1.5],
            sigma2: 1.0,
            phi: 1.0,
            d: 1,
            n_list: vec![100, 200],
            alpha_list: vec![0.5, 0.75, 0.9],
            lemma_tau2: Some(0.2),
        };
        cfg.validate().unwrap();
        let mut bad = cfg.clone();
        bad.alpha_list = vec![1.5];
        assert!(bad.validate().is_err());
        assert!(GridRange {
            min: 2.0,
            max: 1.0,
            count: 5
        }
        .to_spec()
        .is_err());
    }
}
