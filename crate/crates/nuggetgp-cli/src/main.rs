//! Command-line entry point: orchestrates the simulation studies and emits
//! CSV/JSON artifacts plus a run manifest per invocation.
//!
//! Exit codes: 0 ok, 1 runtime error, 2 config/input error, 3 fit did not
//! converge (best-effort result still printed).

use clap::{Parser, Subcommand};
use nuggetgp::config::{
    load_config, EigscanConfig, KrigConfig, LikmapConfig, SimulateConfig,
};
use nuggetgp::eigendiag::{clt_predicted_sd, decay_scan, grid_spectrum, lemma_sums};
use nuggetgp::error::Error;
use nuggetgp::estimate::{
    default_fit_box, fit_fixed_phi, fit_no_nugget, fit_profile, FitResult, ProfileBounds,
};
use nuggetgp::report::{
    dataset_csv, decay_csv, format_float, mspe_csv, parse_data_csv, summaries_csv, surface_csv,
    RunManifest,
};
use nuggetgp::simstudy::{
    derive_seed, likelihood_surface, make_design, mspe_sweep, run_replications, sample_gp,
    square_grid_points, DesignKind, DesignSpec, Estimator, ReplicationPlan, Setting,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "nuggetgp", version, about = "Matérn-with-nugget Gaussian process engine")]
struct Cli {
    /// Worker threads (results are independent of this)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for emitted files
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Override the master seed from the config file
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replication study: datasets and/or Tables-style summaries
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Maximum-likelihood fit of one dataset CSV (columns x[,y[,z]],value)
    Fit {
        data: PathBuf,
        /// Matérn smoothness (fixed, not estimated)
        #[arg(long)]
        nu: f64,
        /// profile | fixed-phi | no-nugget
        #[arg(long, default_value = "profile")]
        mode: String,
        /// φ₁ for --mode fixed-phi
        #[arg(long)]
        phi_fixed: Option<f64>,
        /// Write the FitResult JSON here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalue decay scan over regular grids
    Eigscan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Interpolated log-likelihood surface (−ℓ/2)
    Likmap {
        #[arg(long)]
        config: PathBuf,
    },
    /// Kriging MSPE sweep and efficiency ratios
    Krig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        // results do not depend on the pool size; ignore re-init in tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) | Error::Dimension { .. } => {
                    ExitCode::from(2)
                }
                Error::Estimation(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Command::Simulate { config } => cmd_simulate(&config, cli.seed, &cli.out_dir),
        Command::Fit {
            data,
            nu,
            mode,
            phi_fixed,
            out,
        } => cmd_fit(&data, nu, &mode, phi_fixed, out.as_deref()),
        Command::Eigscan { config } => cmd_eigscan(&config, cli.seed, &cli.out_dir),
        Command::Likmap { config } => cmd_likmap(&config, cli.seed, &cli.out_dir),
        Command::Krig { config } => cmd_krig(&config, cli.seed, &cli.out_dir),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_output(
    manifest: &mut RunManifest,
    dir: &Path,
    name: &str,
    body: &str,
) -> Result<(), Error> {
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    manifest.record_output(&path);
    Ok(())
}

// Run `work`, then write the manifest whether it succeeded or not.
fn with_manifest(
    mut manifest: RunManifest,
    dir: &Path,
    work: impl FnOnce(&mut RunManifest) -> Result<(), Error>,
) -> Result<ExitCode, Error> {
    ensure_dir(dir)?;
    let outcome = work(&mut manifest);
    manifest.status = match &outcome {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("error: {e}"),
    };
    manifest.write(&dir.join("manifest.json"))?;
    outcome.map(|()| ExitCode::SUCCESS)
}

fn cmd_simulate(config: &Path, seed_flag: Option<u64>, out_dir: &Path) -> Result<ExitCode, Error> {
    let mut cfg: SimulateConfig = load_config(config)?;
    if let Some(s) = seed_flag {
        cfg.seed = s;
    }
    cfg.validate()?;
    let settings: Vec<Setting> = cfg
        .settings
        .iter()
        .map(|s| s.to_setting(cfg.nu))
        .collect::<Result<_, _>>()?;
    let plan = ReplicationPlan {
        settings: settings.clone(),
        n_list: cfg.n_list.clone(),
        n_reps: cfg.n_reps,
        estimator: cfg.estimator,
        master_seed: cfg.seed,
        design: cfg.design,
        design_d: cfg.d,
        fixed_phi: cfg.fixed_phi,
    };
    let manifest = RunManifest::new(
        "simulate",
        cfg.seed,
        serde_json::to_value(&cfg).expect("config serializes"),
    );
    with_manifest(manifest, out_dir, |manifest| {
        if cfg.write_datasets {
            let t0 = Instant::now();
            let n_max = *cfg.n_list.iter().max().unwrap();
            for setting in &settings {
                let design_seed = u64::from_le_bytes(
                    derive_seed(cfg.seed, &["design", &setting.id])[..8]
                        .try_into()
                        .expect("8 bytes"),
                );
                let locs = make_design(&DesignSpec {
                    kind: cfg.design,
                    d: cfg.d,
                    n: n_max,
                    seed: design_seed,
                })?;
                let params = setting.params()?;
                for rep in 0..cfg.n_reps {
                    let rep_seed = u64::from_le_bytes(
                        derive_seed(
                            cfg.seed,
                            &["rep", &setting.id, &n_max.to_string(), &rep.to_string()],
                        )[..8]
                            .try_into()
                            .expect("8 bytes"),
                    );
                    let y = sample_gp(&params, &locs, rep_seed)?;
                    let name = format!("data_{}_rep{rep}.csv", setting.id);
                    write_output(manifest, out_dir, &name, &dataset_csv(&locs, &y))?;
                }
            }
            manifest.record_stage("datasets", t0.elapsed().as_secs_f64());
        }
        let t0 = Instant::now();
        let outcome = run_replications(&plan)?;
        manifest.record_stage("fits", t0.elapsed().as_secs_f64());
        write_output(
            manifest,
            out_dir,
            "summary.csv",
            &summaries_csv(&outcome.summaries),
        )?;
        // per-replicate estimates (histogram / QQ material)
        let mut est = String::from(
            "setting_id,n,rep,tau2_hat,sigma2_hat,phi_hat,kappa_hat,converged,fail_reason\n",
        );
        for r in &outcome.records {
            match &r.fit {
                Some(f) => {
                    let _ = writeln!(
                        est,
                        "{},{},{},{},{},{},{},{},",
                        r.setting_id,
                        r.n,
                        r.rep,
                        format_float(f.tau2_hat),
                        format_float(f.sigma2_hat),
                        format_float(f.phi_hat),
                        format_float(f.kappa_hat),
                        f.converged,
                    );
                }
                None => {
                    let _ = writeln!(
                        est,
                        "{},{},{},,,,,false,{}",
                        r.setting_id,
                        r.n,
                        r.rep,
                        r.fail_reason.as_deref().unwrap_or(""),
                    );
                }
            }
        }
        write_output(manifest, out_dir, "estimates.csv", &est)?;
        Ok(())
    })
}

fn cmd_fit(
    data: &Path,
    nu: f64,
    mode: &str,
    phi_fixed: Option<f64>,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Config(format!("--nu must be > 0, got {nu}")));
    }
    let text = std::fs::read_to_string(data)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", data.display())))?;
    let (locs, y) = parse_data_csv(&text)?;
    let fit: FitResult = match mode {
        "profile" => fit_profile(nu, &locs, &y, &ProfileBounds::for_smoothness(nu)?)?,
        "fixed-phi" => {
            let phi1 = phi_fixed.ok_or_else(|| {
                Error::Config("--mode fixed-phi requires --phi-fixed".to_string())
            })?;
            fit_fixed_phi(phi1, nu, &default_fit_box(&y), &locs, &y)?
        }
        "no-nugget" => {
            let b = ProfileBounds::for_smoothness(nu)?;
            fit_no_nugget(nu, &locs, &y, b.phi)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown mode {other:?} (profile | fixed-phi | no-nugget)"
            )))
        }
    };
    let json = serde_json::to_string_pretty(&fit)
        .map_err(|e| Error::Numeric(format!("serialize fit: {e}")))?;
    match out {
        Some(p) => std::fs::write(p, &json)?,
        None => println!("{json}"),
    }
    if fit.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("fit did not converge; best-effort result written");
        Ok(ExitCode::from(3))
    }
}

fn cmd_eigscan(config: &Path, seed_flag: Option<u64>, out_dir: &Path) -> Result<ExitCode, Error> {
    let mut cfg: EigscanConfig = load_config(config)?;
    if let Some(s) = seed_flag {
        cfg.seed = s;
    }
    cfg.validate()?;
    let manifest = RunManifest::new(
        "eigscan",
        cfg.seed,
        serde_json::to_value(&cfg).expect("config serializes"),
    );
    with_manifest(manifest, out_dir, |manifest| {
        let t0 = Instant::now();
        for &nu in &cfg.nu_list {
            let reports = decay_scan(nu, cfg.sigma2, cfg.phi, cfg.d, &cfg.n_list, &cfg.alpha_list)?;
            let name = format!("decay_nu{nu}.csv");
            write_output(manifest, out_dir, &name, &decay_csv(&reports))?;
        }
        manifest.record_stage("scan", t0.elapsed().as_secs_f64());
        if let Some(tau2) = cfg.lemma_tau2 {
            let t0 = Instant::now();
            let n_big = *cfg.n_list.iter().max().unwrap();
            let mut body = String::from(
                "nu,n,tau2,sum_a2,sum_lam_a2,sum_b,sum_b2,c1_hat,c2_hat,c3_hat,sd_tau2_pred,sd_kappa_pred\n",
            );
            for &nu in &cfg.nu_list {
                let spectrum = grid_spectrum(nu, 1.0, cfg.phi, cfg.d, n_big)?;
                let sums = lemma_sums(tau2, cfg.sigma2, &spectrum, nu, cfg.d);
                let (sd_t, sd_k) =
                    clt_predicted_sd(&sums, tau2, cfg.phi, nu, cfg.d, n_big)?;
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    format_float(nu),
                    n_big,
                    format_float(tau2),
                    format_float(sums.sum_a2),
                    format_float(sums.sum_lam_a2),
                    format_float(sums.sum_b),
                    format_float(sums.sum_b2),
                    format_float(sums.c1_hat),
                    format_float(sums.c2_hat),
                    format_float(sums.c3_hat),
                    format_float(sd_t),
                    format_float(sd_k),
                );
            }
            write_output(manifest, out_dir, "lemma.csv", &body)?;
            manifest.record_stage("lemma", t0.elapsed().as_secs_f64());
        }
        Ok(())
    })
}

fn cmd_likmap(config: &Path, seed_flag: Option<u64>, out_dir: &Path) -> Result<ExitCode, Error> {
    let mut cfg: LikmapConfig = load_config(config)?;
    if let Some(s) = seed_flag {
        cfg.seed = s;
    }
    cfg.validate()?;
    let manifest = RunManifest::new(
        "likmap",
        cfg.seed,
        serde_json::to_value(&cfg).expect("config serializes"),
    );
    with_manifest(manifest, out_dir, |manifest| {
        let setting = cfg.setting.to_setting(cfg.nu)?;
        let design_seed = u64::from_le_bytes(
            derive_seed(cfg.seed, &["design", &setting.id])[..8]
                .try_into()
                .expect("8 bytes"),
        );
        let locs_full = make_design(&DesignSpec {
            kind: DesignKind::PerturbedGrid2d,
            d: 2,
            n: cfg.n_data,
            seed: design_seed,
        })?;
        let rep_seed = u64::from_le_bytes(
            derive_seed(cfg.seed, &["rep", &setting.id, &cfg.n_data.to_string(), "0"])[..8]
                .try_into()
                .expect("8 bytes"),
        );
        let y_full = sample_gp(&setting.params()?, &locs_full, rep_seed)?;
        // the design order is already a seeded shuffle, so the prefix is a
        // seeded random subset of the realization
        let locs = locs_full.prefix(cfg.n)?;
        let y = ndarray::Array1::from_vec(y_full.as_slice().unwrap()[..cfg.n].to_vec());
        let t0 = Instant::now();
        let surface = likelihood_surface(
            &setting,
            &locs,
            &y,
            &cfg.phi_grid.to_spec()?,
            &cfg.other_grid.to_spec()?,
            cfg.fixed,
        )?;
        manifest.record_stage("surface", t0.elapsed().as_secs_f64());
        write_output(manifest, out_dir, "surface.csv", &surface_csv(&surface))?;
        Ok(())
    })
}

fn cmd_krig(config: &Path, seed_flag: Option<u64>, out_dir: &Path) -> Result<ExitCode, Error> {
    let mut cfg: KrigConfig = load_config(config)?;
    if let Some(s) = seed_flag {
        cfg.seed = s;
    }
    cfg.validate()?;
    let manifest = RunManifest::new(
        "krig",
        cfg.seed,
        serde_json::to_value(&cfg).expect("config serializes"),
    );
    with_manifest(manifest, out_dir, |manifest| {
        let truth_setting = cfg.truth.to_setting(cfg.nu)?;
        let truth = truth_setting.params()?;
        let n_max = *cfg.n_list.iter().max().unwrap();
        let design_seed = u64::from_le_bytes(
            derive_seed(cfg.seed, &["krig_design", &truth_setting.id])[..8]
                .try_into()
                .expect("8 bytes"),
        );
        let design = make_design(&DesignSpec {
            kind: if cfg.d == 1 {
                DesignKind::UniformRandom
            } else {
                DesignKind::PerturbedGrid2d
            },
            d: cfg.d,
            n: n_max,
            seed: design_seed,
        })?;
        let holdout: Vec<Vec<f64>> = if cfg.d == 1 {
            cfg.holdout.iter().map(|&x| vec![x]).collect()
        } else {
            square_grid_points(cfg.grid_m)
        };
        let fits: Vec<(String, nuggetgp::NoisyModelParams)> = cfg
            .fits
            .iter()
            .map(|f| {
                let sc = nuggetgp::config::SettingConfig {
                    tau2: f.tau2,
                    sigma2: f.sigma2,
                    phi: f.phi,
                    range: f.range,
                };
                let s = sc.to_setting(cfg.nu)?;
                Ok((f.label.clone(), s.params()?))
            })
            .collect::<Result<_, Error>>()?;
        let t0 = Instant::now();
        let rows = mspe_sweep(&truth, &fits, &design, &cfg.n_list, &holdout)?;
        manifest.record_stage("sweep", t0.elapsed().as_secs_f64());
        write_output(manifest, out_dir, "mspe.csv", &mspe_csv(&rows))?;

        // aggregate efficiency ratios per (n, model), means over hold-outs
        let mut ratios = String::from("n,model,mean_mspe,mean_mspe_truth,ratio_i,ratio_ii\n");
        for &n in &cfg.n_list {
            let truth_mean = {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.n == n && r.model == "truth")
                    .map(|r| r.mspe)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            for (label, _) in &fits {
                let sel: Vec<&nuggetgp::simstudy::MspeSweepRow> = rows
                    .iter()
                    .filter(|r| r.n == n && &r.model == label)
                    .collect();
                let mean_mspe = sel.iter().map(|r| r.mspe).sum::<f64>() / sel.len() as f64;
                let mean_asserted =
                    sel.iter().map(|r| r.mspe_asserted).sum::<f64>() / sel.len() as f64;
                let _ = writeln!(
                    ratios,
                    "{},{},{},{},{},{}",
                    n,
                    label,
                    format_float(mean_mspe),
                    format_float(truth_mean),
                    format_float(mean_mspe / truth_mean),
                    format_float(mean_asserted / mean_mspe),
                );
            }
        }
        write_output(manifest, out_dir, "ratios.csv", &ratios)?;
        Ok(())
    })
}
