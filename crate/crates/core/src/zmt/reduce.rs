use serde::Serialize;

use super::{zmt_cut, TruncationRecord, ZmtSettings};
use crate::error::ZmtResult;
use crate::network::Network;

#[derive(Clone, Debug, Default, Serialize)]
pub struct ReductionReport {
    /// Accepted cuts, in order.
    pub steps: Vec<TruncationRecord>,
    /// Relative error of the first rejected candidate, if any.
    pub rejected_f: Option<f64>,
}

impl ReductionReport {
    pub fn f_values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.f_relative).collect()
    }
}

/// Repeats single-dimension ZMT cuts on `bond` while the optimized relative
/// error `f / <psi|psi>` stays at or below `f_tol` and the bond is longer than 1.
pub fn reduce_iteratively(
    net: &Network,
    bond: &str,
    settings: &ZmtSettings,
    f_tol: f64,
) -> ZmtResult<(Network, ReductionReport)> {
    let mut current = net.clone();
    let mut report = ReductionReport::default();
    while current.bond_dim(bond)? > 1 {
        let cut = zmt_cut(&current, bond, settings)?;
        if cut.record.fallback_used || cut.record.f_relative > f_tol {
            report.rejected_f = Some(cut.record.f_relative);
            break;
        }
        current = cut.network;
        report.steps.push(cut.record);
    }
    Ok((current, report))
}
