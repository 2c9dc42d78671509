//! Second-order Trotter evolution of the unit cell in imaginary time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cell::{electric_half_step, initial_state, PlaquetteSpec, UnitCell, ABCD, CDAB};
use super::model::ModelParams;
use super::mpo::build_plaquette_mpo;
use super::ntu::{apply_and_truncate_plaquette, ErrorRecord, UpdateOptions};
use crate::error::{ZmtError, ZmtResult};
use crate::tensor::Tensor;

fn magnetic_pass(
    cell: UnitCell,
    order: [&PlaquetteSpec; 2],
    epsilon: f64,
    opts: &UpdateOptions,
    step: usize,
    beta: f64,
) -> ZmtResult<(UnitCell, Vec<ErrorRecord>)> {
    let mpo = build_plaquette_mpo(epsilon);
    let mut records = Vec::with_capacity(8);
    let mut cell = cell;
    for spec in order {
        let (next, recs) = apply_and_truncate_plaquette(&cell, spec, &mpo, opts, step, beta)?;
        cell = next;
        records.extend(recs);
    }
    Ok((cell, records))
}

/// One step: electric quarter step, the `abcd` then `cdab` plaquette passes,
/// another electric quarter step, then per-tensor normalization.
/// `step` labels the records.
pub fn trotter_step(
    cell: &UnitCell,
    params: &ModelParams,
    opts: &UpdateOptions,
    step: usize,
) -> ZmtResult<(UnitCell, Vec<ErrorRecord>)> {
    let beta = cell.beta + params.dbeta;
    let half = electric_half_step(cell, params.dbeta)?;
    let (mid, records) = magnetic_pass(half, [&ABCD, &CDAB], params.epsilon(), opts, step, beta)?;
    let mut out = electric_half_step(&mid, params.dbeta)?;
    out.beta = beta;
    out.normalize();
    Ok((out, records))
}

/// Formal inverse of [`trotter_step`]: negated electric argument and
/// `epsilon -> -epsilon`, with the factors in reverse order.
pub fn inverse_trotter_step(
    cell: &UnitCell,
    params: &ModelParams,
    opts: &UpdateOptions,
) -> ZmtResult<(UnitCell, Vec<ErrorRecord>)> {
    let beta = cell.beta - params.dbeta;
    let half = electric_half_step(cell, -params.dbeta)?;
    let (mid, records) = magnetic_pass(half, [&CDAB, &ABCD], -params.epsilon(), opts, 0, beta)?;
    let mut out = electric_half_step(&mid, -params.dbeta)?;
    out.beta = beta;
    out.normalize();
    Ok((out, records))
}

/// Mean truncation errors of one step over the eight bonds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepAverage {
    pub step: usize,
    pub beta: f64,
    pub delta_initial: f64,
    pub delta_final: f64,
}

pub fn step_averages(records: &[ErrorRecord]) -> Vec<StepAverage> {
    let mut out: Vec<StepAverage> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for r in records {
        match out.last_mut() {
            Some(avg) if avg.step == r.step => {
                avg.delta_initial += r.delta_initial;
                avg.delta_final += r.delta_final;
                *counts.last_mut().expect("paired") += 1;
            }
            _ => {
                out.push(StepAverage {
                    step: r.step,
                    beta: r.beta,
                    delta_initial: r.delta_initial,
                    delta_final: r.delta_final,
                });
                counts.push(1);
            }
        }
    }
    for (avg, n) in out.iter_mut().zip(counts) {
        avg.delta_initial /= n as f64;
        avg.delta_final /= n as f64;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveConfig {
    pub params: ModelParams,
    pub update: UpdateOptions,
    pub kappa: usize,
    /// Amplitude of uniform noise added to the initial tensors.
    pub noise: f64,
    pub seed: u64,
}

impl EvolveConfig {
    pub fn new(params: ModelParams, update: UpdateOptions, noise: f64, seed: u64) -> Self {
        let kappa = update.zmt.kappa;
        Self {
            params,
            update,
            kappa,
            noise,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub records: Vec<ErrorRecord>,
    pub averages: Vec<StepAverage>,
    pub final_beta: f64,
    pub log_scale: f64,
    /// Lowest metric eigenvalue over `norm_scale` seen in any ZMT cut.
    pub min_metric_floor: Option<f64>,
    #[serde(skip)]
    pub final_cell: Option<UnitCell>,
}

/// A numerical failure during [`evolve_with`], with everything computed so far.
#[derive(Debug, thiserror::Error)]
#[error("step {step} failed: {source}")]
pub struct EvolveFailure {
    pub step: usize,
    #[source]
    pub source: ZmtError,
    pub partial: Box<Trajectory>,
}

fn perturbed_initial_state(noise: f64, seed: u64) -> ZmtResult<UnitCell> {
    let mut cell = initial_state();
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &mut cell.tensors {
            let data = t
                .data()
                .iter()
                .map(|x| x + rng.gen_range(-noise..=noise))
                .collect();
            *t = Tensor::new(t.axes(), t.shape(), data)?;
        }
        cell.normalize();
        cell.log_scale = 0.0;
    }
    Ok(cell)
}

fn summarize(records: Vec<ErrorRecord>, cell: Option<&UnitCell>) -> Trajectory {
    let averages = step_averages(&records);
    let min_metric_floor = records
        .iter()
        .filter_map(|r| r.metric_floor)
        .reduce(f64::min);
    Trajectory {
        averages,
        final_beta: cell.map_or(0.0, |c| c.beta),
        log_scale: cell.map_or(0.0, |c| c.log_scale),
        min_metric_floor,
        final_cell: cell.cloned(),
        records,
    }
}

/// Runs Trotter steps until `beta_max`, calling `observer` after every step.
pub fn evolve_with(
    config: &EvolveConfig,
    mut observer: impl FnMut(usize, &UnitCell, &[ErrorRecord]),
) -> Result<Trajectory, EvolveFailure> {
    let fail =
        |step: usize, source: ZmtError, records: Vec<ErrorRecord>, cell: Option<&UnitCell>| {
            EvolveFailure {
                step,
                source,
                partial: Box::new(summarize(records, cell)),
            }
        };
    let steps = config
        .params
        .validate()
        .and_then(|_| config.params.steps())
        .map_err(|e| fail(0, e, vec![], None))?;
    let mut cell =
        perturbed_initial_state(config.noise, config.seed).map_err(|e| fail(0, e, vec![], None))?;
    let mut records = Vec::new();
    for step in 1..=steps {
        match trotter_step(&cell, &config.params, &config.update, step) {
            Ok((next, recs)) => {
                if next
                    .tensors
                    .iter()
                    .any(|t| t.data().iter().any(|x| !x.is_finite()))
                {
                    let err =
                        ZmtError::Tensor(crate::error::TensorError::NonFinite("evolved tensor"));
                    return Err(fail(step, err, records, Some(&cell)));
                }
                observer(step, &next, &recs);
                records.extend(recs);
                cell = next;
            }
            Err(e) => return Err(fail(step, e, records, Some(&cell))),
        }
    }
    Ok(summarize(records, Some(&cell)))
}

pub fn evolve(config: &EvolveConfig) -> Result<Trajectory, EvolveFailure> {
    evolve_with(config, |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::z2::ntu::Method;

    #[test]
    fn averages_group_by_step() {
        let rec = |step, d| ErrorRecord {
            step,
            beta: step as f64,
            bond: "x".into(),
            method: Method::Svd,
            delta_initial: d,
            delta_final: d / 2.0,
            cg_iters: 0,
            fallback: false,
            d_before: 2,
            d_after: 1,
            metric_floor: None,
            singular_environment: false,
        };
        let avg = step_averages(&[rec(1, 1.0), rec(1, 3.0), rec(2, 4.0)]);
        assert_eq!(avg.len(), 2);
        assert_eq!(avg[0].delta_initial, 2.0);
        assert_eq!(avg[1].delta_final, 2.0);
    }

    #[test]
    fn zero_dbeta_step_is_identity_up_to_scale() {
        let cell = initial_state();
        let p = ModelParams {
            g: 3.0,
            dbeta: 0.0,
            beta_max: 0.0,
        };
        let opts = UpdateOptions::new(Some(4), Method::Svd, 5);
        let (out, recs) = trotter_step(&cell, &p, &opts, 1).unwrap();
        assert_eq!(recs.len(), 8);
        for r in &recs {
            assert_eq!(r.delta_final, 0.0);
        }
        // the identity pMPO still doubles the ring bonds; compare the torus states
        let a = out.torus_network().unwrap().contract().unwrap();
        let b = cell.torus_network().unwrap().contract().unwrap();
        let fid = crate::toy::fidelity(&a, &b).unwrap();
        assert!((fid - 1.0).abs() < 1e-12);
    }
}
