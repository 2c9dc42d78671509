//! Truncation error `f = N / E_max^2` of a candidate `Z` and its gradients.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::metric::BondEnvironment;
use super::modes::ModeBasis;
use crate::error::{ZmtError, ZmtResult};
use crate::linalg::{self, EigenPairGeneral};

/// Eigenvalues with `|Im| <= REAL_TOL * spectral radius` count as real.
pub const REAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CostEval {
    pub f: f64,
    pub n: f64,
    pub emax: EigenPairGeneral,
}

/// A candidate zero mode: the subspace coefficients, the matrix they build,
/// and its truncation error.
#[derive(Clone, Debug)]
pub struct ZCandidate {
    pub alpha: Vec<f64>,
    pub z: DMatrix<f64>,
    pub emax: EigenPairGeneral,
    pub f: f64,
    pub n: f64,
}

impl ZCandidate {
    pub fn emax_value(&self) -> f64 {
        self.emax.value_re
    }
}

/// The real eigenvalue of largest magnitude.
pub fn largest_real_eigenvalue(z: &DMatrix<f64>) -> ZmtResult<f64> {
    let values = linalg::eigenvalues_general(z)?;
    let radius = values.iter().fold(0.0f64, |r, v| r.max(v.norm()));
    values
        .iter()
        .filter(|v| v.im.abs() <= REAL_TOL * radius)
        .map(|v| v.re)
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .filter(|e| *e != 0.0)
        .ok_or(ZmtError::NoRealEigenvalue)
}

pub fn truncation_error(z: &DMatrix<f64>, env: &BondEnvironment) -> ZmtResult<CostEval> {
    let e = largest_real_eigenvalue(z)?;
    let emax = linalg::eigen_pair(z, Complex64::new(e, 0.0))?;
    let n = env.quadratic_form(z);
    let ev = emax.value_re;
    if ev == 0.0 || !ev.is_finite() {
        return Err(ZmtError::NoRealEigenvalue);
    }
    Ok(CostEval {
        f: n / (ev * ev),
        n,
        emax,
    })
}

/// `df/dZ_ij = 2 (g Z - f E L R^T)_ij / E^2` for real `Z`, with `L^T R = 1`.
pub fn gradient_from_eval(
    z: &DMatrix<f64>,
    env: &BondEnvironment,
    eval: &CostEval,
) -> ZmtResult<DMatrix<f64>> {
    if eval.emax.is_degenerate() {
        return Err(ZmtError::DegenerateEigenvalue(eval.emax.overlap));
    }
    let e = eval.emax.value_re;
    let d = z.nrows();
    let gz = env.apply(z);
    let (l, r) = (&eval.emax.left_re, &eval.emax.right_re);
    Ok(DMatrix::from_fn(d, d, |i, j| {
        2.0 * (gz[(i, j)] - eval.f * e * l[i] * r[j]) / (e * e)
    }))
}

pub fn gradient_full(z: &DMatrix<f64>, env: &BondEnvironment) -> ZmtResult<DMatrix<f64>> {
    let eval = truncation_error(z, env)?;
    gradient_from_eval(z, env, &eval)
}

/// Projection of the full gradient onto the basis modes, `G_m = sum Z^m_ij G_ij`.
pub fn project_gradient(grad: &DMatrix<f64>, basis: &ModeBasis) -> Vec<f64> {
    basis
        .modes
        .iter()
        .map(|m| m.component_mul(grad).sum())
        .collect()
}

pub fn gradient_subspace(candidate: &ZCandidate, basis: &ModeBasis) -> ZmtResult<Vec<f64>> {
    if candidate.emax.is_degenerate() {
        return Err(ZmtError::DegenerateEigenvalue(candidate.emax.overlap));
    }
    let e = candidate.emax.value_re;
    let (l, r) = (&candidate.emax.left_re, &candidate.emax.right_re);
    let weights = basis.metric_weights();
    Ok(basis
        .modes
        .iter()
        .zip(&candidate.alpha)
        .zip(&weights)
        .map(|((m, a), w)| {
            let de: f64 = (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)] * l[i] * r[j])
                .sum();
            2.0 * (w * a - candidate.f * e * de) / (e * e)
        })
        .collect())
}

/// Evaluates the candidate built from `alpha` within the mode subspace.
pub fn candidate_at(alpha: &[f64], basis: &ModeBasis) -> ZmtResult<ZCandidate> {
    let z = basis.combine(alpha);
    let e = largest_real_eigenvalue(&z)?;
    let emax = linalg::eigen_pair(&z, Complex64::new(e, 0.0))?;
    let ev = emax.value_re;
    if ev == 0.0 || !ev.is_finite() {
        return Err(ZmtError::NoRealEigenvalue);
    }
    // the modes diagonalize g, so N is a weighted sum of squares; this avoids
    // the cancellation in Z.gZ when N is tiny
    let n: f64 = basis
        .metric_weights()
        .iter()
        .zip(alpha)
        .map(|(w, a)| w * a * a)
        .sum();
    Ok(ZCandidate {
        alpha: alpha.to_vec(),
        z,
        emax,
        f: n / (ev * ev),
        n,
    })
}
