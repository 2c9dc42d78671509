//! The five subcommands. Each writes its CSV and returns the sidecar summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use zmt_core::linalg;
use zmt_core::snapshot::write_snapshots;
use zmt_core::toy::{fidelity, full_state, make_virtual_loop};
use zmt_core::z2::report::{comparison_stats, write_comparison, write_records};
use zmt_core::z2::{
    evolve_with, EvolveConfig, EvolveFailure, Method, Trajectory, UnitCell, UpdateOptions,
};
use zmt_core::zmt::cost::candidate_at;
use zmt_core::zmt::{
    gauge_probe, gradient_subspace, lowest_modes, zmt_cut, BondEnvironment, ZmtSettings,
};

use crate::config::RunConfig;

/// Outcome of a subcommand that ran to completion or failed numerically.
pub struct RunOutput {
    pub summary: Value,
    pub outputs: Vec<PathBuf>,
    /// Set when the run failed; becomes exit code 1.
    pub failure: Option<Failure>,
}

pub struct Failure {
    pub message: String,
    pub step: Option<usize>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn evolve_config(cfg: &RunConfig, method: Method) -> EvolveConfig {
    EvolveConfig::new(
        cfg.params(),
        UpdateOptions::new(Some(cfg.bond_dim), method, cfg.kappa),
        cfg.noise,
        cfg.seed,
    )
}

type Snapshots = Vec<(usize, UnitCell)>;

/// Runs one trajectory, keeping a copy of the cell every `snapshot_every` steps.
fn run_trajectory(
    cfg: &RunConfig,
    method: Method,
) -> (Result<Trajectory, EvolveFailure>, Snapshots) {
    let mut snaps = Vec::new();
    let result = evolve_with(&evolve_config(cfg, method), |step, cell, records| {
        let mean = records.iter().map(|r| r.delta_final).sum::<f64>() / records.len().max(1) as f64;
        log::info!(
            "{method} step {step} beta {:.4} mean delta_final {mean:.3e}",
            cell.beta
        );
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
            snaps.push((step, cell.clone()));
        }
    });
    (result, snaps)
}

fn write_cell_snapshots(cfg: &RunConfig, tag: &str, snaps: &Snapshots) -> Result<Vec<PathBuf>> {
    snaps
        .iter()
        .map(|(step, cell)| {
            let path = cfg.sibling(&format!("{tag}.step{step:05}.snap"));
            let mut out = create(&path)?;
            write_snapshots(&cell.tensors, &mut out)?;
            out.flush()?;
            Ok(path)
        })
        .collect()
}

fn trajectory_summary(t: &Trajectory) -> Value {
    json!({
        "final_beta": t.final_beta,
        "log_scale": t.log_scale,
        "min_metric_floor": t.min_metric_floor,
        "records": t.records.len(),
        "fallbacks": t.records.iter().filter(|r| r.fallback).count(),
        "step_averages": t.averages,
    })
}

fn split(result: Result<Trajectory, EvolveFailure>) -> (Trajectory, Option<Failure>) {
    match result {
        Ok(t) => (t, None),
        Err(e) => {
            let failure = Failure {
                message: e.to_string(),
                step: Some(e.step),
            };
            (*e.partial, Some(failure))
        }
    }
}

pub fn evolve(cfg: &RunConfig) -> Result<RunOutput> {
    let (result, snaps) = run_trajectory(cfg, cfg.method);
    let (traj, failure) = split(result);
    let mut out = create(&cfg.out_path)?;
    write_records(&traj.records, &mut out)?;
    out.flush()?;
    let mut outputs = vec![cfg.out_path.clone()];
    outputs.extend(write_cell_snapshots(cfg, "", &snaps)?);
    Ok(RunOutput {
        summary: trajectory_summary(&traj),
        outputs,
        failure,
    })
}

pub fn compare(cfg: &RunConfig) -> Result<RunOutput> {
    let ((zmt, zmt_snaps), (svd, svd_snaps)) = std::thread::scope(|s| {
        let z = s.spawn(|| run_trajectory(cfg, Method::Zmt));
        let v = s.spawn(|| run_trajectory(cfg, Method::Svd));
        (
            z.join().expect("zmt trajectory thread"),
            v.join().expect("svd trajectory thread"),
        )
    });
    let (zmt, zmt_failure) = split(zmt);
    let (svd, svd_failure) = split(svd);

    let mut out = create(&cfg.out_path)?;
    let both: Vec<_> = zmt.records.iter().chain(&svd.records).cloned().collect();
    write_records(&both, &mut out)?;
    out.flush()?;
    let compare_path = cfg.sibling(".compare.csv");
    let mut cmp = create(&compare_path)?;
    write_comparison(&zmt.averages, &svd.averages, &mut cmp)?;
    cmp.flush()?;

    let mut outputs = vec![cfg.out_path.clone(), compare_path];
    outputs.extend(write_cell_snapshots(cfg, ".zmt", &zmt_snaps)?);
    outputs.extend(write_cell_snapshots(cfg, ".svd", &svd_snaps)?);
    let (win_fraction, mean_ratio) = comparison_stats(&zmt.averages, &svd.averages);
    Ok(RunOutput {
        summary: json!({
            "win_fraction": win_fraction,
            "mean_ratio_svd_over_zmt": mean_ratio,
            "zmt": trajectory_summary(&zmt),
            "svd": trajectory_summary(&svd),
        }),
        outputs,
        failure: zmt_failure.or(svd_failure),
    })
}

pub fn toy(cfg: &RunConfig) -> Result<RunOutput> {
    const BOND: &str = "b01";
    let fixture = make_virtual_loop(cfg.bond_dim, cfg.loop_dim, 2, cfg.noise, cfg.seed)?;
    let original = fixture.network();
    let settings = ZmtSettings {
        kappa: cfg.kappa,
        ..ZmtSettings::default()
    };
    let mut out = create(&cfg.out_path)?;
    writeln!(
        out,
        "cut,d_before,d_after,f_relative,f_realized,kappa_used,cg_iters,fallback"
    )?;
    let mut net = original.clone();
    let mut f_values = Vec::new();
    let mut cut = 0;
    while net.bond_dim(BOND)? > cfg.bond_dim {
        cut += 1;
        let step = zmt_cut(&net, BOND, &settings)?;
        let r = &step.record;
        writeln!(
            out,
            "{cut},{},{},{:.12e},{:.12e},{},{},{}",
            r.d_before,
            r.d_after,
            r.f_relative,
            r.f_realized,
            r.kappa_used,
            r.cg_iterations,
            r.fallback_used
        )?;
        f_values.push(r.f_relative);
        net = step.network;
    }
    out.flush()?;
    let fid = fidelity(&full_state(&original)?, &full_state(&net)?)?;
    Ok(RunOutput {
        summary: json!({
            "initial_bond_dim": cfg.bond_dim * cfg.loop_dim,
            "final_bond_dim": net.bond_dim(BOND)?,
            "f_sequence": f_values,
            "fidelity": fid,
        }),
        outputs: vec![cfg.out_path.clone()],
        failure: None,
    })
}

pub fn gauge(cfg: &RunConfig) -> Result<RunOutput> {
    const TRIALS: usize = 5;
    let net = make_virtual_loop(cfg.bond_dim, cfg.loop_dim, 2, cfg.noise, cfg.seed)?.network();
    let dim = net.bond_dim("b01")?;
    // the full mode space makes the optimum independent of the gauge
    let settings = ZmtSettings {
        kappa: dim * dim,
        ..ZmtSettings::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = create(&cfg.out_path)?;
    writeln!(
        out,
        "trial,condition_number,f_original,f_gauged,spectrum_distance,f_relative_difference,agree"
    )?;
    let (mut trials, mut agreed) = (0, 0);
    while trials < TRIALS {
        let g = DMatrix::identity(dim, dim)
            + DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-0.3..0.3));
        if linalg::condition_number(&g).map_or(true, |c| c >= 10.0) {
            continue;
        }
        let p = gauge_probe(&net, "b01", &g, &settings)?;
        trials += 1;
        let agree = p.spectrum_distance() <= 1e-6 && p.f_relative_difference() <= 1e-8;
        agreed += usize::from(agree);
        if !agree {
            log::warn!(
                "gauge trial {trials}: {:?} vs {:?}",
                p.mus_original,
                p.mus_gauged
            );
        }
        writeln!(
            out,
            "{trials},{:.6e},{:.12e},{:.12e},{:.6e},{:.6e},{agree}",
            p.condition_number,
            p.f_original,
            p.f_gauged,
            p.spectrum_distance(),
            p.f_relative_difference()
        )?;
    }
    out.flush()?;
    Ok(RunOutput {
        summary: json!({ "trials": trials, "agreeing": agreed, "bond_dim": dim }),
        outputs: vec![cfg.out_path.clone()],
        failure: None,
    })
}

pub fn grad_check(cfg: &RunConfig) -> Result<RunOutput> {
    const INSTANCES: usize = 20;
    const TOL: f64 = 1e-5;
    let dim = cfg.bond_dim.max(2);
    let kappa = cfg.kappa.min(dim * dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = create(&cfg.out_path)?;
    writeln!(out, "instance,emax,max_relative_error")?;
    let (mut done, mut worst) = (0, 0.0f64);
    while done < INSTANCES {
        let a = DMatrix::from_fn(dim * dim, dim * dim, |_, _| rng.gen_range(-1.0..=1.0));
        let env = BondEnvironment::from_gram(dim, &a * a.transpose())?;
        let basis = lowest_modes(&env, kappa, 1e-12)?;
        let alpha: Vec<f64> = (0..kappa).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let Ok(cand) = candidate_at(&alpha, &basis) else {
            continue;
        };
        let e = cand.emax_value();
        let spectrum = linalg::eigenvalues_general(&cand.z)?;
        if spectrum
            .iter()
            .filter(|v| (v.re - e).abs() + v.im.abs() < 0.05 * e.abs())
            .count()
            != 1
        {
            continue;
        }
        let grad = gradient_subspace(&cand, &basis)?;
        let scale = grad
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let h = 1e-6;
        let mut err = 0.0f64;
        for m in 0..kappa {
            let mut plus = alpha.clone();
            plus[m] += h;
            let mut minus = alpha.clone();
            minus[m] -= h;
            let fd = (candidate_at(&plus, &basis)?.f - candidate_at(&minus, &basis)?.f) / (2.0 * h);
            err = err.max((fd - grad[m]).abs() / scale);
        }
        done += 1;
        worst = worst.max(err);
        writeln!(out, "{done},{e:.12e},{err:.6e}")?;
    }
    out.flush()?;
    let failure = (worst >= TOL).then(|| Failure {
        message: format!("max relative gradient error {worst:.3e} is not below {TOL:e}"),
        step: None,
    });
    Ok(RunOutput {
        summary: json!({ "instances": INSTANCES, "max_relative_error": worst, "tolerance": TOL, "pass": worst < TOL }),
        outputs: vec![cfg.out_path.clone()],
        failure,
    })
}
