//! Zero-mode truncation of a single bond.
//!
//! Cutting a bond defines the states `psi_ij`; a (near-)null vector `Z` of their
//! Gram matrix `g` lets the bond matrix `delta_ij` be replaced by the singular
//! `delta_ij - Z_ij / E_max`, whose null direction is then dropped. When no exact
//! zero mode exists, `Z` is optimized inside the span of the `kappa` lowest
//! modes of `g` to minimize the truncation error `f = N / E_max^2`.

pub mod cost;
pub mod gauge;
pub mod metric;
pub mod modes;
pub mod optimize;
pub mod reduce;
pub mod truncate;

use serde::Serialize;

pub use cost::{gradient_full, gradient_subspace, truncation_error, CostEval, ZCandidate};
pub use gauge::{gauge_probe, GaugeProbe};
pub use metric::{build_metric, BondEnvironment, Closure};
pub use modes::{lowest_modes, ModeBasis};
pub use optimize::{optimize_candidate, CgOptions, OptimizeOutcome, StopReason};
pub use reduce::{reduce_iteratively, ReductionReport};
pub use truncate::{apply_insertion, svd_truncate, truncate_bond, TruncationFactors};

use crate::error::{ZmtError, ZmtResult};
use crate::network::Network;

pub const DEFAULT_KAPPA: usize = 5;
pub const DEFAULT_REGULARIZATION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ZmtSettings {
    pub kappa: usize,
    /// Relative shift `reg`; the metric gets `reg * norm_scale / D^2` on its diagonal.
    pub regularization: f64,
    pub cg: CgOptions,
    /// Widen the mode subspace when its best cut is far above its metric
    /// eigenvalues (all usable combinations have a tiny `E_max`).
    pub escalate_kappa: bool,
}

impl Default for ZmtSettings {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            regularization: DEFAULT_REGULARIZATION,
            cg: CgOptions::default(),
            escalate_kappa: true,
        }
    }
}

/// Rounds an even `kappa` up to the next odd value.
pub fn normalize_kappa(kappa: usize) -> usize {
    if kappa.is_multiple_of(2) {
        kappa + 1
    } else {
        kappa
    }
}

/// Diagnostic record for one single-dimension cut.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TruncationRecord {
    pub bond: String,
    pub d_before: usize,
    pub d_after: usize,
    /// Size of the mode subspace the cut came from.
    pub kappa_used: usize,
    pub f_initial_mode: f64,
    pub f_optimized: f64,
    /// `f_optimized / <psi|psi>`.
    pub f_relative: f64,
    /// Error of the rank `D-1` insertion actually applied, over `<psi|psi>`.
    /// Equals `f_relative` unless the dropped singular value is not a null
    /// direction (a near-defective `E_max`).
    pub f_realized: f64,
    pub cg_iterations: usize,
    pub fallback_used: bool,
    /// Real and imaginary parts of the retained insertion eigenvalues.
    pub mus: Vec<(f64, f64)>,
    /// Lowest metric eigenvalue over its `norm_scale`.
    pub metric_floor: f64,
}

/// Result of [`zmt_cut`]: the network with the bond reduced by one and the
/// record describing the cut.
#[derive(Clone, Debug)]
pub struct CutOutcome {
    pub network: Network,
    pub record: TruncationRecord,
}

/// One ZMT step `D -> D-1` on `bond`. Falls back to SVD truncation when no
/// basis combination has a usable real eigenvalue.
pub fn zmt_cut(net: &Network, bond: &str, settings: &ZmtSettings) -> ZmtResult<CutOutcome> {
    let d = net.bond_dim(bond)?;
    if d < 2 {
        return Err(ZmtError::BondTooSmall(d));
    }
    let env = build_metric(net, bond, Closure::Identity)?;
    let norm = env.state_norm_sq().abs().max(f64::MIN_POSITIVE);
    let mut kappa = settings.kappa.min(d * d);
    let mut best: Option<ModeCut> = None;
    let mut metric_floor;
    loop {
        let basis = lowest_modes(&env, kappa, settings.regularization)?;
        metric_floor = basis.metric_floor;
        // the best any combination of these modes can reach is about the
        // largest of their metric eigenvalues
        let reachable = basis.metric_weights().last().copied().unwrap_or(0.0);
        if let Some(cut) = cut_in_basis(&env, &basis, settings)? {
            if best.as_ref().is_none_or(|b| cut.realized < b.realized) {
                best = Some(cut);
            }
        }
        let realized = best.as_ref().map_or(f64::INFINITY, |b| b.realized);
        let hopeless = realized > ESCALATION_RATIO * reachable + settings.regularization * norm;
        if !settings.escalate_kappa || !hopeless || kappa == d * d {
            break;
        }
        kappa = (2 * kappa + 1).min(d * d);
        log::debug!("bond {bond}: cut loses {realized:.3e}, widening the mode subspace to {kappa}");
    }
    let Some(cut) = best else {
        log::warn!("bond {bond}: no real eigenvalue in the mode ladder, using SVD");
        let network = svd_truncate(net, bond, d - 1)?;
        let err = network_distance_sq(net, &network)?;
        return Ok(CutOutcome {
            network,
            record: TruncationRecord {
                bond: bond.to_string(),
                d_before: d,
                d_after: d - 1,
                kappa_used: kappa,
                f_initial_mode: f64::NAN,
                f_optimized: err,
                f_relative: err / norm,
                f_realized: err / norm,
                cg_iterations: 0,
                fallback_used: true,
                mus: vec![],
                metric_floor,
            },
        });
    };
    let network = apply_insertion(net, bond, &cut.factors.left, &cut.factors.right)?;
    Ok(CutOutcome {
        network,
        record: TruncationRecord {
            bond: bond.to_string(),
            d_before: d,
            d_after: d - 1,
            kappa_used: cut.kappa,
            f_initial_mode: cut.outcome.f_initial,
            f_optimized: cut.outcome.candidate.f,
            f_relative: cut.outcome.candidate.f / norm,
            f_realized: cut.realized / norm,
            cg_iterations: cut.outcome.iterations,
            fallback_used: false,
            mus: cut.factors.mus.iter().map(|m| (m.re, m.im)).collect(),
            metric_floor,
        },
    })
}

/// Realized error above `ESCALATION_RATIO` times the largest mode weight
/// triggers a wider mode subspace.
const ESCALATION_RATIO: f64 = 1e3;

struct ModeCut {
    outcome: OptimizeOutcome,
    factors: TruncationFactors,
    realized: f64,
    kappa: usize,
}

/// Optimized cut within one mode basis; `None` when no combination has a
/// usable real eigenvalue.
fn cut_in_basis(
    env: &BondEnvironment,
    basis: &ModeBasis,
    settings: &ZmtSettings,
) -> ZmtResult<Option<ModeCut>> {
    let outcome = match optimize_candidate(basis, &settings.cg) {
        Ok(out) => out,
        Err(ZmtError::NoUsableMode) => return Ok(None),
        Err(e) => return Err(e),
    };
    let kappa = basis.kappa();
    let mut factors = truncate_bond(&outcome.candidate)?;
    let mut realized = realized_error(env, &factors);
    let norm = env.state_norm_sq().abs().max(f64::MIN_POSITIVE);
    if realized > 10.0 * outcome.candidate.f + settings.regularization * norm {
        // E_max sits in a near-defective cluster, so the dropped singular
        // direction is not null; use the single mode whose cut loses least
        for k in 0..kappa {
            let mut alpha = vec![0.0; kappa];
            alpha[k] = 1.0;
            let Ok(c) = cost::candidate_at(&alpha, basis) else {
                continue;
            };
            let Ok(alt) = truncate_bond(&c) else { continue };
            let err = realized_error(env, &alt);
            if err < realized {
                realized = err;
                factors = alt;
            }
        }
    }
    Ok(Some(ModeCut {
        outcome,
        factors,
        realized,
        kappa,
    }))
}

/// `vec(X)^T g vec(X)` for the removed part `X = I - left * right`.
fn realized_error(env: &BondEnvironment, factors: &TruncationFactors) -> f64 {
    let d = factors.left.nrows();
    let removed = nalgebra::DMatrix::identity(d, d) - &factors.left * &factors.right;
    env.quadratic_form(&removed).max(0.0)
}

/// `|a - b|^2` for two networks with identical open labels.
pub fn network_distance_sq(a: &Network, b: &Network) -> ZmtResult<f64> {
    let aa = a.norm_sq()?;
    let bb = b.norm_sq()?;
    let ab = a.inner(b)?;
    Ok((aa + bb - 2.0 * ab).max(0.0))
}
