//! Plaquette update: absorb the pMPO into one plaquette, then truncate each
//! of its four bonds inside the plaquette environment and refine the two
//! bond tensors by alternating least squares.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cell::{BondSpec, PlaquetteSpec, UnitCell, SITE_AXES, SITE_NAMES, SPIN};
use super::mpo::PlaquetteMPO;
use crate::error::{ZmtError, ZmtResult};
use crate::linalg;
use crate::network::{overlap, Network};
use crate::tensor::{AxisGroup, Tensor};
use crate::zmt::{svd_truncate, zmt_cut, ZmtSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Zmt,
    Svd,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Zmt => "zmt",
            Method::Svd => "svd",
        })
    }
}

impl FromStr for Method {
    type Err = ZmtError;

    fn from_str(s: &str) -> ZmtResult<Self> {
        match s {
            "zmt" => Ok(Method::Zmt),
            "svd" => Ok(Method::Svd),
            other => Err(ZmtError::InvalidParameter(format!(
                "method must be zmt or svd, got '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlsOptions {
    pub sweeps: usize,
    /// Stop once a sweep improves `delta` by less than this fraction.
    pub rel_improvement: f64,
    /// Pseudo-inverse cutoff relative to the largest singular value.
    pub cutoff: f64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self {
            sweeps: 2,
            rel_improvement: 1e-8,
            cutoff: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpdateOptions {
    /// Bond dimension cap; `None` lets bonds grow without truncation.
    pub d_max: Option<usize>,
    pub method: Method,
    #[serde(skip)]
    pub zmt: ZmtSettings,
    pub als: AlsOptions,
}

impl UpdateOptions {
    pub fn new(d_max: Option<usize>, method: Method, kappa: usize) -> Self {
        Self {
            d_max,
            method,
            zmt: ZmtSettings {
                kappa,
                ..ZmtSettings::default()
            },
            als: AlsOptions::default(),
        }
    }
}

/// Truncation error of one bond in one Trotter step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub step: usize,
    pub beta: f64,
    pub bond: String,
    pub method: Method,
    pub delta_initial: f64,
    pub delta_final: f64,
    pub cg_iters: usize,
    pub fallback: bool,
    pub d_before: usize,
    pub d_after: usize,
    /// Lowest metric eigenvalue over `norm_scale` among the ZMT cuts.
    pub metric_floor: Option<f64>,
    /// Whether the least-squares cutoff discarded directions.
    pub singular_environment: bool,
}

fn plaquette_label(spec: &PlaquetteSpec, site: usize, bond: &BondSpec) -> String {
    if spec.bonds.iter().any(|b| b.name == bond.name) {
        bond.name.to_string()
    } else {
        format!("{}@{}", bond.name, SITE_NAMES[site])
    }
}

fn leg_of(site: usize, label: &str) -> Option<&'static str> {
    let name = label.split('@').next()?;
    super::cell::all_bonds().find(|b| b.name == name).map(|b| {
        if b.from.0 == site {
            b.from.1
        } else {
            b.to.1
        }
    })
}

/// Ring tensors of `spec` with the pMPO absorbed and its loop index fused
/// into the ring bonds (bond index major, loop index minor).
pub fn absorb_mpo(cell: &UnitCell, spec: &PlaquetteSpec, mpo: &PlaquetteMPO) -> ZmtResult<Network> {
    let mut ring = Vec::with_capacity(4);
    for (k, &site) in spec.sites.iter().enumerate() {
        let t = cell.labelled(site, |b| plaquette_label(spec, site, b))?;
        let spin = format!("{SPIN}:{}", SITE_NAMES[site]);
        let w = mpo.ops[k].clone().relabel(|l| format!("\u{0}mpo_{l}"))?;
        let t = t
            .contract(&w, &[(spin.as_str(), "\u{0}mpo_in")])?
            .renamed("\u{0}mpo_out", &spin)?;
        let bond_in = spec.bonds[(k + 3) % 4].name;
        let bond_out = spec.bonds[k].name;
        let groups: Vec<AxisGroup> = t
            .axes()
            .iter()
            .filter(|a| !a.starts_with('\u{0}'))
            .map(|a| {
                if a == bond_in {
                    AxisGroup::new(a, &[a, "\u{0}mpo_j_in"])
                } else if a == bond_out {
                    AxisGroup::new(a, &[a, "\u{0}mpo_j_out"])
                } else {
                    AxisGroup::new(a, &[a])
                }
            })
            .collect();
        ring.push(t.fuse(&groups)?.0);
    }
    Network::new(ring)
}

/// Writes ring tensors back into the cell.
fn store_ring(cell: &mut UnitCell, spec: &PlaquetteSpec, net: &Network) -> ZmtResult<()> {
    for (k, &site) in spec.sites.iter().enumerate() {
        let t = net.tensor(k).clone().relabel(|l| {
            if let Some((base, _)) = l.split_once(':') {
                return base.to_string();
            }
            leg_of(site, l)
                .expect("plaquette labels map to legs")
                .to_string()
        })?;
        cell.tensors[site] = t.permuted(&SITE_AXES)?;
    }
    Ok(())
}

/// `|Psi_T - Psi_V| / |Psi_T|` for two networks differing only in the two
/// tensors on `bond`. The difference is formed on the merged two-site tensor
/// so that small errors do not cancel.
pub fn relative_delta(target: &Network, trial: &Network, bond: &str) -> ZmtResult<f64> {
    let (a, b) = target.bond_ends(bond)?;
    let theta_t = target
        .tensor(a)
        .contract(target.tensor(b), &[(bond, bond)])?;
    let theta_v = trial.tensor(a).contract(trial.tensor(b), &[(bond, bond)])?;
    let diff = theta_t.add_scaled(&theta_v, -1.0)?;
    let mut rest: Vec<Tensor> = (0..target.len())
        .filter(|&k| k != a && k != b)
        .map(|k| target.tensor(k).clone())
        .collect();
    rest.push(diff);
    let num = Network::new(rest)?.norm_sq()?.max(0.0);
    let den = target.norm_sq()?;
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

/// One least-squares update of tensor `x` of `trial` towards `target`.
/// Returns the new tensor and whether the cutoff discarded directions.
fn als_update(
    target: &Network,
    trial: &Network,
    x: usize,
    cutoff: f64,
) -> ZmtResult<(Tensor, bool)> {
    let xt = trial.tensor(x);
    let rest: Vec<usize> = (0..trial.len()).filter(|&k| k != x).collect();
    let bond_legs: Vec<String> = xt
        .axes()
        .iter()
        .filter(|l| rest.iter().any(|&k| trial.tensor(k).has_axis(l)))
        .cloned()
        .collect();
    let open_legs: Vec<String> = xt
        .axes()
        .iter()
        .filter(|l| !bond_legs.contains(l))
        .cloned()
        .collect();
    let ket_tag = |l: &str| format!("{l}\u{0}ket");
    let bra_tag = |l: &str| format!("{l}\u{0}bra");
    let tagged = |tag: &dyn Fn(&str) -> String| -> ZmtResult<Vec<Tensor>> {
        rest.iter()
            .map(|&k| {
                Ok(trial.tensor(k).clone().relabel(|l| {
                    if bond_legs.iter().any(|b| b == l) {
                        tag(l)
                    } else {
                        l.to_string()
                    }
                })?)
            })
            .collect()
    };
    let ket_rest = tagged(&ket_tag)?;
    let bra_rest = tagged(&bra_tag)?;
    let ket_names: Vec<String> = bond_legs.iter().map(|l| ket_tag(l)).collect();
    let bra_names: Vec<String> = bond_legs.iter().map(|l| bra_tag(l)).collect();

    let n = overlap(&ket_rest, &bra_rest)?
        .matrixize(&ket_names, &bra_names)?
        .matrix;
    let n = (&n + n.transpose()) * 0.5;
    let w = overlap(target.tensors(), &bra_rest)?;
    let wm = w.matrixize(&open_legs, &bra_names)?;
    let sol = linalg::lstsq(&n, &wm.matrix.transpose(), cutoff)?;
    let svals = linalg::svd(&n)?.s;
    let singular = svals.last().is_some_and(|&s| s <= cutoff * svals[0]);
    let cols: Vec<(String, usize)> = bond_legs
        .iter()
        .map(|l| Ok((l.clone(), xt.dim(l)?)))
        .collect::<ZmtResult<_>>()?;
    let new = Tensor::from_matrixization(&sol.transpose(), &wm.row_axes, &cols)?;
    Ok((new.permuted(xt.axes())?, singular))
}

/// Alternating least squares on the two tensors of `bond`. Never returns a
/// network worse than `trial`.
pub fn optimize_pair(
    target: &Network,
    trial: Network,
    bond: &str,
    opts: &AlsOptions,
) -> ZmtResult<(Network, f64, bool)> {
    let (a, b) = trial.bond_ends(bond)?;
    let mut best = trial.clone();
    let mut best_delta = relative_delta(target, &trial, bond)?;
    let mut current = trial;
    let mut singular = false;
    for _ in 0..opts.sweeps {
        let start = best_delta;
        for x in [a, b] {
            let (t, s) = als_update(target, &current, x, opts.cutoff)?;
            singular |= s;
            current = current.with_tensor(x, t)?;
        }
        let delta = relative_delta(target, &current, bond)?;
        if delta < best_delta {
            best_delta = delta;
            best = current.clone();
        }
        if start - best_delta <= opts.rel_improvement * start {
            break;
        }
    }
    Ok((best, best_delta, singular))
}

struct CutResult {
    network: Network,
    cg_iters: usize,
    fallback: bool,
    metric_floor: Option<f64>,
}

fn truncate_to(
    net: &Network,
    bond: &str,
    target: usize,
    opts: &UpdateOptions,
) -> ZmtResult<CutResult> {
    match opts.method {
        Method::Svd => Ok(CutResult {
            network: svd_truncate(net, bond, target)?,
            cg_iters: 0,
            fallback: false,
            metric_floor: None,
        }),
        Method::Zmt => {
            let mut current = net.clone();
            let mut cg_iters = 0;
            let mut fallback = false;
            let mut floor = f64::INFINITY;
            while current.bond_dim(bond)? > target {
                // balanced gauge on the cut bond: the mode subspace is not gauge
                // invariant, and a skewed gauge inflates tr g far above <psi|psi>
                let dim = current.bond_dim(bond)?;
                current = svd_truncate(&current, bond, dim)?;
                let cut = zmt_cut(&current, bond, &opts.zmt)?;
                cg_iters += cut.record.cg_iterations;
                fallback |= cut.record.fallback_used;
                floor = floor.min(cut.record.metric_floor);
                current = cut.network;
            }
            // the refinement is conditioned by the gauge the cuts leave behind
            let dim = current.bond_dim(bond)?;
            current = svd_truncate(&current, bond, dim)?;
            Ok(CutResult {
                network: current,
                cg_iters,
                fallback,
                metric_floor: Some(floor),
            })
        }
    }
}

/// Applies the pMPO to plaquette `spec` and truncates its four bonds in ring
/// order. `step` and `beta` only label the returned records.
pub fn apply_and_truncate_plaquette(
    cell: &UnitCell,
    spec: &PlaquetteSpec,
    mpo: &PlaquetteMPO,
    opts: &UpdateOptions,
    step: usize,
    beta: f64,
) -> ZmtResult<(UnitCell, Vec<ErrorRecord>)> {
    let mut net = absorb_mpo(cell, spec, mpo)?;
    let mut records = Vec::with_capacity(4);
    for bond in &spec.bonds {
        let d_before = net.bond_dim(bond.name)?;
        let target = opts.d_max.map_or(d_before, |m| m.min(d_before));
        let mut record = ErrorRecord {
            step,
            beta,
            bond: bond.name.to_string(),
            method: opts.method,
            delta_initial: 0.0,
            delta_final: 0.0,
            cg_iters: 0,
            fallback: false,
            d_before,
            d_after: d_before,
            metric_floor: None,
            singular_environment: false,
        };
        if target < d_before {
            let cut = truncate_to(&net, bond.name, target, opts)?;
            let delta_initial = relative_delta(&net, &cut.network, bond.name)?;
            let (refined, delta_final, singular) =
                optimize_pair(&net, cut.network, bond.name, &opts.als)?;
            record.delta_initial = delta_initial;
            record.delta_final = delta_final;
            record.cg_iters = cut.cg_iters;
            record.fallback = cut.fallback;
            record.d_after = target;
            record.metric_floor = cut.metric_floor;
            record.singular_environment = singular;
            net = refined;
        }
        records.push(record);
    }
    let mut out = cell.clone();
    store_ring(&mut out, spec, &net)?;
    Ok((out, records))
}
