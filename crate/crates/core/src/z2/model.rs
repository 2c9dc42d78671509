//! Parameters and dense single-plaquette operators of the Z2 gauge model.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ZmtError, ZmtResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub g: f64,
    pub dbeta: f64,
    pub beta_max: f64,
}

impl ModelParams {
    pub fn new(g: f64, dbeta: f64, beta_max: f64) -> ZmtResult<Self> {
        let p = Self { g, dbeta, beta_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> ZmtResult<()> {
        if !self.dbeta.is_finite() || self.dbeta <= 0.0 {
            return Err(ZmtError::InvalidParameter(format!(
                "dbeta must be positive, got {}",
                self.dbeta
            )));
        }
        if !self.g.is_finite() {
            return Err(ZmtError::InvalidParameter("g must be finite".into()));
        }
        if !self.beta_max.is_finite() || self.beta_max < 0.0 {
            return Err(ZmtError::InvalidParameter(format!(
                "beta_max must be non-negative, got {}",
                self.beta_max
            )));
        }
        self.steps()?;
        Ok(())
    }

    /// `epsilon = g * dbeta / 2`.
    pub fn epsilon(&self) -> f64 {
        self.g * self.dbeta / 2.0
    }

    /// Number of Trotter steps to reach `beta_max`; it must be a whole multiple of `dbeta`.
    pub fn steps(&self) -> ZmtResult<usize> {
        let n = self.beta_max / self.dbeta;
        let r = n.round();
        if (n - r).abs() > 1e-9 * n.max(1.0) {
            return Err(ZmtError::InvalidParameter(format!(
                "beta_max {} is not a multiple of dbeta {}",
                self.beta_max, self.dbeta
            )));
        }
        Ok(r as usize)
    }
}

pub fn sigma_x() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn sigma_z() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// `exp(t sigma_x) = cosh t I + sinh t sigma_x`.
pub fn exp_sigma_x(t: f64) -> DMatrix<f64> {
    DMatrix::identity(2, 2) * t.cosh() + sigma_x() * t.sinh()
}

/// Kronecker product of a list of operators, first factor most significant.
pub fn kron_all(ops: &[DMatrix<f64>]) -> DMatrix<f64> {
    ops.iter()
        .fold(DMatrix::identity(1, 1), |acc, op| acc.kronecker(op))
}

/// Operator acting as `op` on each listed site of an `n`-site register.
pub fn on_sites(op: &DMatrix<f64>, sites: &[usize], n: usize) -> DMatrix<f64> {
    let ops: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            if sites.contains(&k) {
                op.clone()
            } else {
                DMatrix::identity(2, 2)
            }
        })
        .collect();
    kron_all(&ops)
}

#[derive(Clone, Debug)]
pub struct ModelOperators {
    pub sigma_x: DMatrix<f64>,
    pub sigma_z: DMatrix<f64>,
    /// `sigma_x` on all four corners.
    pub a_p: DMatrix<f64>,
    /// `sigma_z` on all four corners.
    pub b_p: DMatrix<f64>,
    /// `(1 + A_p) / 2`.
    pub gauss_projector_factor: DMatrix<f64>,
}

pub fn model_operators() -> ModelOperators {
    let sites = [0, 1, 2, 3];
    let a_p = on_sites(&sigma_x(), &sites, 4);
    let b_p = on_sites(&sigma_z(), &sites, 4);
    let gauss_projector_factor = (DMatrix::identity(16, 16) + &a_p) / 2.0;
    ModelOperators {
        sigma_x: sigma_x(),
        sigma_z: sigma_z(),
        a_p,
        b_p,
        gauss_projector_factor,
    }
}

/// Corner sites of the plaquette with top-left corner `(r, c)` on an
/// `l x l` periodic lattice, as site indices `r * l + c`.
pub fn plaquette_sites(r: usize, c: usize, l: usize) -> [usize; 4] {
    let s = |r: usize, c: usize| (r % l) * l + (c % l);
    [s(r, c), s(r, c + 1), s(r + 1, c), s(r + 1, c + 1)]
}

/// Largest commutator entry `|[A_q, B_p]|` over all pairs of overlapping black
/// (`r + c` odd) and white (`r + c` even) plaquettes of an `l x l` periodic
/// lattice. Each pair is checked densely on the union of its two supports.
/// Returns the number of overlapping pairs and the largest entry.
pub fn max_gauss_commutator(l: usize) -> (usize, f64) {
    let mut pairs = 0;
    let mut worst = 0.0f64;
    for rw in 0..l {
        for cw in 0..l {
            if (rw + cw) % 2 != 0 {
                continue;
            }
            let white = plaquette_sites(rw, cw, l);
            for rb in 0..l {
                for cb in 0..l {
                    if (rb + cb) % 2 != 1 {
                        continue;
                    }
                    let black = plaquette_sites(rb, cb, l);
                    if !white.iter().any(|s| black.contains(s)) {
                        continue;
                    }
                    let mut support: Vec<usize> = white.iter().chain(&black).copied().collect();
                    support.sort_unstable();
                    support.dedup();
                    let local = |sites: &[usize; 4]| -> Vec<usize> {
                        sites
                            .iter()
                            .map(|s| support.iter().position(|x| x == s).expect("in support"))
                            .collect()
                    };
                    let n = support.len();
                    let b = on_sites(&sigma_z(), &local(&white), n);
                    let a = on_sites(&sigma_x(), &local(&black), n);
                    let comm = &a * &b - &b * &a;
                    worst = worst.max(comm.amax());
                    pairs += 1;
                }
            }
        }
    }
    (pairs, worst)
}
