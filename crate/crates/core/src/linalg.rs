//! Dense decompositions on `nalgebra` matrices: SVD, symmetric and general
//! eigenproblems, QR and pseudo-inverse least squares.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Result, TensorError};
use crate::tensor::Matrixization;

const MAX_SWEEPS: usize = 10_000;

/// Thin SVD `m = u * diag(s) * v^T` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(TensorError::NonFinite("svd input"));
    }
    let dec = m
        .clone()
        .try_svd(true, true, f64::EPSILON, MAX_SWEEPS)
        .ok_or(TensorError::NoConvergence("svd"))?;
    let u = dec.u.ok_or(TensorError::NoConvergence("svd"))?;
    let vt = dec.v_t.ok_or(TensorError::NoConvergence("svd"))?;
    let sv = dec.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let s: Vec<f64> = order.iter().map(|&k| sv[k].max(0.0)).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
    Ok(Svd { u, s, v })
}

impl Matrixization {
    pub fn svd(&self) -> Result<Svd> {
        svd(&self.matrix)
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues. The input is
/// symmetrized as `(m + m^T)/2` first.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

pub fn eig_sym(m: &DMatrix<f64>) -> Result<SymEig> {
    let (r, c) = m.shape();
    if r != c {
        return Err(TensorError::NotSquare { rows: r, cols: c });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(TensorError::NonFinite("eig_sym input"));
    }
    let sym = (m + m.transpose()) * 0.5;
    let dec = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS)
        .ok_or(TensorError::NoConvergence("eig_sym"))?;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = order.iter().map(|&k| dec.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(r, r, |i, j| dec.eigenvectors[(i, order[j])]);
    Ok(SymEig { values, vectors })
}

/// One eigenvalue of a general real matrix with its left and right
/// eigenvectors, stored as real/imaginary parts.
///
/// For a simple eigenvalue the vectors are bi-normalized so that
/// `sum_j left_j * right_j = 1` (no conjugation). `overlap` is that sum
/// before normalization, computed with unit-norm vectors; a magnitude below
/// [`DEGENERATE_OVERLAP`] marks a defective or degenerate eigenvalue, in which
/// case the vectors are left unit-normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairGeneral {
    pub value_re: f64,
    pub value_im: f64,
    pub right_re: Vec<f64>,
    pub right_im: Vec<f64>,
    pub left_re: Vec<f64>,
    pub left_im: Vec<f64>,
    pub overlap: f64,
}

pub const DEGENERATE_OVERLAP: f64 = 1e-10;

impl EigenPairGeneral {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }

    pub fn is_real(&self) -> bool {
        self.value_im == 0.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.overlap.abs() < DEGENERATE_OVERLAP
    }

    pub fn right(&self) -> Vec<Complex64> {
        zip_complex(&self.right_re, &self.right_im)
    }

    pub fn left(&self) -> Vec<Complex64> {
        zip_complex(&self.left_re, &self.left_im)
    }
}

fn zip_complex(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter()
        .zip(im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect()
}

/// Quasi-triangular real Schur factor. The QR iteration in nalgebra can
/// stall on a defective cluster; shifting by a multiple of the identity
/// leaves the Schur vectors unchanged and often lets it converge.
fn schur_factor(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mean = m.trace() / n as f64;
    let scale = m.amax();
    [0.0, mean, mean.round(), mean + scale, mean - scale]
        .into_iter()
        .find_map(|shift| {
            let shifted = m - DMatrix::identity(n, n) * shift;
            Schur::try_new(shifted, f64::EPSILON, MAX_SWEEPS)
                .map(|s| s.unpack().1 + DMatrix::identity(n, n) * shift)
        })
}

/// Eigenvalues of a general real matrix, via the real Schur form.
pub fn eigenvalues_general(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let (r, c) = m.shape();
    if r != c {
        return Err(TensorError::NotSquare { rows: r, cols: c });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(TensorError::NonFinite("eig_general input"));
    }
    if r == 1 {
        return Ok(vec![Complex64::new(m[(0, 0)], 0.0)]);
    }
    let Some(t) = schur_factor(m) else {
        // nalgebra's eigenvalue-only path skips accumulating the Schur vectors
        // and converges on inputs where the full decomposition stalls
        log::debug!("real Schur decomposition stalled; using the eigenvalue-only iteration");
        return Ok(m.clone().complex_eigenvalues().iter().copied().collect());
    };
    // read eigenvalues off the quasi-triangular factor, 1x1 and 2x2 blocks
    let mut out = Vec::with_capacity(r);
    let mut k = 0;
    while k < r {
        if k + 1 < r && t[(k + 1, k)] != 0.0 {
            let (a, b, c, d) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k)], t[(k + 1, k + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                out.push(Complex64::new(half_tr + s, 0.0));
                out.push(Complex64::new(half_tr - s, 0.0));
            } else {
                let s = (-disc).sqrt();
                out.push(Complex64::new(half_tr, s));
                out.push(Complex64::new(half_tr, -s));
            }
            k += 2;
        } else {
            out.push(Complex64::new(t[(k, k)], 0.0));
            k += 1;
        }
    }
    Ok(out)
}

/// Left and right eigenvectors for a known eigenvalue `lambda` of `m`.
///
/// The vectors are the singular vectors of `m - lambda I` (or its real 2n
/// embedding for complex `lambda`) belonging to the smallest singular value.
/// For a simple real eigenvalue the value is refined by the Rayleigh quotient
/// `L^T m R / L^T R`.
pub fn eigen_pair(m: &DMatrix<f64>, lambda: Complex64) -> Result<EigenPairGeneral> {
    let n = m.nrows();
    if lambda.im == 0.0 {
        let mut shifted = m.clone();
        for k in 0..n {
            shifted[(k, k)] -= lambda.re;
        }
        // the left null vector is taken from a second decomposition: U columns
        // for tiny singular values lose accuracy
        let mut right: DVector<f64> = svd(&shifted)?.v.column(n - 1).into_owned();
        let mut left: DVector<f64> = svd(&shifted.transpose())?.v.column(n - 1).into_owned();
        right /= right.norm();
        left /= left.norm();
        let overlap = left.dot(&right);
        let mut value = lambda.re;
        if overlap.abs() >= DEGENERATE_OVERLAP {
            value = left.dot(&(m * &right)) / overlap;
            left /= overlap;
        }
        Ok(EigenPairGeneral {
            value_re: value,
            value_im: 0.0,
            right_re: right.as_slice().to_vec(),
            right_im: vec![0.0; n],
            left_re: left.as_slice().to_vec(),
            left_im: vec![0.0; n],
            overlap,
        })
    } else {
        let (a, b) = (lambda.re, lambda.im);
        let k = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (br, bc) = (r / n, c / n);
            let (i, j) = (r % n, c % n);
            let diag = if i == j { 1.0 } else { 0.0 };
            match (br, bc) {
                (0, 0) | (1, 1) => m[(i, j)] - a * diag,
                (0, 1) => b * diag,
                _ => -b * diag,
            }
        });
        let v = svd(&k)?.v.column(2 * n - 1).into_owned();
        let u = svd(&k.transpose())?.v.column(2 * n - 1).into_owned();
        let right: Vec<Complex64> = (0..n).map(|i| Complex64::new(v[i], v[n + i])).collect();
        // the left singular vector solves (m^T - conj(lambda)) w = 0, so L = conj(w)
        let left: Vec<Complex64> = (0..n).map(|i| Complex64::new(u[i], -u[n + i])).collect();
        let norm = |x: &[Complex64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let (nr, nl) = (norm(&right), norm(&left));
        let right: Vec<Complex64> = right.iter().map(|z| z / nr).collect();
        let mut left: Vec<Complex64> = left.iter().map(|z| z / nl).collect();
        let s: Complex64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
        if s.norm() >= DEGENERATE_OVERLAP {
            left.iter_mut().for_each(|z| *z /= s);
        }
        Ok(EigenPairGeneral {
            value_re: a,
            value_im: b,
            right_re: right.iter().map(|z| z.re).collect(),
            right_im: right.iter().map(|z| z.im).collect(),
            left_re: left.iter().map(|z| z.re).collect(),
            left_im: left.iter().map(|z| z.im).collect(),
            overlap: s.norm(),
        })
    }
}

/// Full spectrum of a general real matrix with left and right eigenvectors.
///
/// Eigenvalues whose imaginary part is below `1e-12` times the spectral
/// radius are treated as real.
pub fn eig_general(m: &DMatrix<f64>) -> Result<Vec<EigenPairGeneral>> {
    let values = eigenvalues_general(m)?;
    let radius = values.iter().fold(0.0f64, |r, z| r.max(z.norm()));
    values
        .into_iter()
        .map(|z| {
            let z = if z.im.abs() <= 1e-12 * radius {
                Complex64::new(z.re, 0.0)
            } else {
                z
            };
            let pair = eigen_pair(m, z)?;
            if pair.is_degenerate() {
                log::warn!(
                    "eigenvalue {z} is degenerate: |sum L_j R_j| = {:.3e}",
                    pair.overlap
                );
            }
            Ok(pair)
        })
        .collect()
}

/// Minimizes `|a x - b|` with the pseudo-inverse of `a`, discarding singular
/// values below `cutoff * s_max`.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>, cutoff: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != b.nrows() {
        return Err(TensorError::AxisLengthMismatch {
            a: "A rows".into(),
            b: "b rows".into(),
            dim_a: a.nrows(),
            dim_b: b.nrows(),
        });
    }
    let dec = svd(a)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let mut x = DMatrix::zeros(a.ncols(), b.ncols());
    if smax == 0.0 {
        return Ok(x);
    }
    let utb = dec.u.transpose() * b;
    for (k, &s) in dec.s.iter().enumerate() {
        if s > cutoff * smax {
            let row = utb.row(k) / s;
            x += dec.v.column(k) * row;
        }
    }
    Ok(x)
}

/// Thin QR: `m = q * r` with `q` having orthonormal columns.
pub fn qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let dec = m.clone().qr();
    (dec.q(), dec.r())
}

/// Ratio of the largest to the smallest singular value.
pub fn condition_number(m: &DMatrix<f64>) -> Result<f64> {
    let s = svd(m)?.s;
    let lo = *s.last().unwrap_or(&0.0);
    Ok(if lo == 0.0 { f64::INFINITY } else { s[0] / lo })
}
