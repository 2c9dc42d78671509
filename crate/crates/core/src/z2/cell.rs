//! The 2x2 unit cell of site tensors and its bond geometry.
//!
//! Layout of the cell on the square lattice:
//!
//! ```text
//! a b
//! d c
//! ```
//!
//! The `abcd` plaquette is the cell itself. The `cdab` plaquette is the one
//! shifted by one site down and right, with corners `c, d, a, b` going
//! clockwise. Every one of the eight bonds of the cell belongs to exactly one
//! of the two plaquettes.

use nalgebra::DMatrix;
use serde::Serialize;

use super::model::exp_sigma_x;
use crate::error::ZmtResult;
use crate::network::Network;
use crate::tensor::Tensor;

pub const UP: &str = "up";
pub const LEFT: &str = "left";
pub const DOWN: &str = "down";
pub const RIGHT: &str = "right";
pub const SPIN: &str = "spin";
pub const ANCILLA: &str = "ancilla";
pub const SITE_AXES: [&str; 6] = [UP, LEFT, DOWN, RIGHT, SPIN, ANCILLA];

pub const SITE_NAMES: [&str; 4] = ["a", "b", "c", "d"];

/// One bond of the cell: `(site, leg)` at each end. The ring runs from the
/// first end to the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BondSpec {
    pub name: &'static str,
    pub from: (usize, &'static str),
    pub to: (usize, &'static str),
}

/// Corner order and ring bonds of one plaquette orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlaquetteSpec {
    pub name: &'static str,
    /// Corners in ring order; bond `k` joins corners `k` and `k + 1`.
    pub sites: [usize; 4],
    pub bonds: [BondSpec; 4],
}

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const D: usize = 3;

pub const ABCD: PlaquetteSpec = PlaquetteSpec {
    name: "abcd",
    sites: [A, B, C, D],
    bonds: [
        BondSpec {
            name: "abcd/a'b'",
            from: (A, RIGHT),
            to: (B, LEFT),
        },
        BondSpec {
            name: "abcd/b'c'",
            from: (B, DOWN),
            to: (C, UP),
        },
        BondSpec {
            name: "abcd/c'd'",
            from: (C, LEFT),
            to: (D, RIGHT),
        },
        BondSpec {
            name: "abcd/d'a'",
            from: (D, UP),
            to: (A, DOWN),
        },
    ],
};

pub const CDAB: PlaquetteSpec = PlaquetteSpec {
    name: "cdab",
    sites: [C, D, A, B],
    bonds: [
        BondSpec {
            name: "cdab/c'd'",
            from: (C, RIGHT),
            to: (D, LEFT),
        },
        BondSpec {
            name: "cdab/d'a'",
            from: (D, DOWN),
            to: (A, UP),
        },
        BondSpec {
            name: "cdab/a'b'",
            from: (A, LEFT),
            to: (B, RIGHT),
        },
        BondSpec {
            name: "cdab/b'c'",
            from: (B, UP),
            to: (C, DOWN),
        },
    ],
};

pub const PLAQUETTES: [PlaquetteSpec; 2] = [ABCD, CDAB];

/// All eight bonds, `abcd` first.
pub fn all_bonds() -> impl Iterator<Item = BondSpec> {
    PLAQUETTES.into_iter().flat_map(|p| p.bonds)
}

/// The bond attached to `(site, leg)`.
pub fn bond_at(site: usize, leg: &str) -> BondSpec {
    all_bonds()
        .find(|b| b.from == (site, leg) || b.to == (site, leg))
        .expect("every leg of the cell is bonded")
}

/// Unit cell of the purification `|psi_SA>`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitCell {
    /// Tensors `a, b, c, d` with axes [`SITE_AXES`].
    pub tensors: [Tensor; 4],
    pub beta: f64,
    /// Sum of the logarithms of all normalization factors removed so far.
    pub log_scale: f64,
}

impl UnitCell {
    pub fn a(&self) -> &Tensor {
        &self.tensors[A]
    }

    pub fn b(&self) -> &Tensor {
        &self.tensors[B]
    }

    pub fn c(&self) -> &Tensor {
        &self.tensors[C]
    }

    pub fn d(&self) -> &Tensor {
        &self.tensors[D]
    }

    pub fn bond_dim(&self, bond: &BondSpec) -> usize {
        self.tensors[bond.from.0]
            .dim(bond.from.1)
            .expect("site axes")
    }

    /// Checks that every bond has matching lengths at both ends.
    pub fn is_consistent(&self) -> bool {
        all_bonds().all(|b| {
            self.tensors[b.from.0].dim(b.from.1).ok() == self.tensors[b.to.0].dim(b.to.1).ok()
        }) && self
            .tensors
            .iter()
            .all(|t| t.dim(SPIN).ok() == Some(2) && t.dim(ANCILLA).ok() == Some(2))
    }

    /// Rescales each tensor to unit Frobenius norm, adding the logarithms of
    /// the removed factors to `log_scale`.
    pub fn normalize(&mut self) {
        for t in &mut self.tensors {
            let n = t.norm();
            if n > 0.0 && n.is_finite() {
                t.scale(1.0 / n);
                self.log_scale += n.ln();
            }
        }
    }

    /// The four tensors with every leg renamed to its bond label and the
    /// physical legs to `spin:a`, `ancilla:a`, ... This is the 2x2 torus.
    pub fn torus_network(&self) -> ZmtResult<Network> {
        let tensors = (0..4)
            .map(|k| self.labelled(k, |b| b.name.to_string()))
            .collect::<ZmtResult<Vec<_>>>()?;
        Network::new(tensors)
    }

    /// Tensor `k` with bond legs named by `bond_label` and physical legs suffixed by site.
    pub fn labelled(
        &self,
        k: usize,
        bond_label: impl Fn(&BondSpec) -> String,
    ) -> ZmtResult<Tensor> {
        Ok(self.tensors[k].clone().relabel(|l| match l {
            SPIN | ANCILLA => format!("{l}:{}", SITE_NAMES[k]),
            leg => bond_label(&bond_at(k, leg)),
        })?)
    }
}

/// Infinite-temperature product state: bond dimension 1, each site holding
/// `(|up,up> + |down,down>) / sqrt 2` of spin and ancilla.
pub fn initial_state() -> UnitCell {
    let t = Tensor::from_fn(&SITE_AXES, &[1, 1, 1, 1, 2, 2], |ix| {
        if ix[4] == ix[5] {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            0.0
        }
    })
    .expect("static shape");
    UnitCell {
        tensors: [t.clone(), t.clone(), t.clone(), t],
        beta: 0.0,
        log_scale: 0.0,
    }
}

/// Applies `op` to the spin leg of every site.
pub fn apply_spin_operator(cell: &UnitCell, op: &DMatrix<f64>) -> ZmtResult<UnitCell> {
    let mut out = cell.clone();
    let t = op.transpose();
    for x in &mut out.tensors {
        *x = x.apply_on_axis(SPIN, &t)?;
    }
    Ok(out)
}

/// Multiplies every spin leg by `exp(dbeta/4 sigma_x)`.
pub fn electric_half_step(cell: &UnitCell, dbeta: f64) -> ZmtResult<UnitCell> {
    if dbeta == 0.0 {
        return Ok(cell.clone());
    }
    apply_spin_operator(cell, &exp_sigma_x(dbeta / 4.0))
}
