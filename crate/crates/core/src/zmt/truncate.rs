use nalgebra::DMatrix;
use num_complex::Complex64;

use super::cost::ZCandidate;
use crate::error::{ZmtError, ZmtResult};
use crate::linalg;
use crate::network::Network;
use crate::tensor::Tensor;

/// Factors of the singular insertion `I - Z/E_max` with its null direction
/// dropped. `left` is absorbed into the first tensor on the bond, `right`
/// into the second.
#[derive(Clone, Debug)]
pub struct TruncationFactors {
    /// `D x (D-1)`, `U diag(sqrt(lambda))`.
    pub left: DMatrix<f64>,
    /// `(D-1) x D`, `diag(sqrt(lambda)) V^T`.
    pub right: DMatrix<f64>,
    /// Retained singular values, descending.
    pub lambdas: Vec<f64>,
    /// The discarded (smallest) singular value.
    pub discarded: f64,
    /// Nonzero eigenvalues of the insertion, sorted.
    pub mus: Vec<Complex64>,
    pub f_initial: f64,
    /// Set when `lambda_{D-1}` and `lambda_D` are nearly equal.
    pub ambiguous_discard: bool,
}

/// Orders a spectrum by real part, then imaginary part.
pub fn sort_spectrum(mus: &mut [Complex64]) {
    mus.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

pub fn truncate_bond(candidate: &ZCandidate) -> ZmtResult<TruncationFactors> {
    let d = candidate.z.nrows();
    if d < 2 {
        return Err(ZmtError::BondTooSmall(d));
    }
    let e = candidate.emax.value_re;
    if e == 0.0 || !candidate.emax.is_real() {
        return Err(ZmtError::NoRealEigenvalue);
    }
    let m = DMatrix::identity(d, d) - &candidate.z / e;
    let svd = linalg::svd(&m)?;
    let keep = d - 1;
    let lambdas = svd.s[..keep].to_vec();
    let discarded = svd.s[keep];
    let ambiguous_discard = lambdas[keep - 1] < discarded * (1.0 + 1e-8);
    if ambiguous_discard {
        log::warn!(
            "near-degenerate discard: lambda_(D-1) = {:.6e}, lambda_D = {discarded:.6e}",
            lambdas[keep - 1]
        );
    }
    let mut left = svd.u.columns(0, keep).into_owned();
    let mut right = svd.v.columns(0, keep).transpose();
    for (k, l) in lambdas.iter().enumerate() {
        let s = l.sqrt();
        left.column_mut(k).scale_mut(s);
        right.row_mut(k).scale_mut(s);
    }
    let mut mus = linalg::eigenvalues_general(&m)?;
    let null = mus
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, _)| k)
        .expect("nonempty spectrum");
    mus.remove(null);
    sort_spectrum(&mut mus);
    Ok(TruncationFactors {
        left,
        right,
        lambdas,
        discarded,
        mus,
        f_initial: candidate.f,
        ambiguous_discard,
    })
}

/// Inserts `left * right` on `bond`, absorbing `left` into the first tensor
/// and `right` into the second. The bond keeps its label with the new length.
pub fn apply_insertion(
    net: &Network,
    bond: &str,
    left: &DMatrix<f64>,
    right: &DMatrix<f64>,
) -> ZmtResult<Network> {
    let (a, b) = net.bond_ends(bond)?;
    let ta = net.tensor(a).apply_on_axis(bond, left)?;
    let tb = net.tensor(b).apply_on_axis(bond, &right.transpose())?;
    let mut tensors = net.tensors().to_vec();
    tensors[a] = ta;
    tensors[b] = tb;
    Network::new(tensors)
}

/// Labels and lengths of the axes other than the bond.
type OtherAxes = Vec<(String, usize)>;

fn split_off_bond(t: &Tensor, bond: &str) -> ZmtResult<(OtherAxes, DMatrix<f64>)> {
    let others: Vec<&str> = t
        .axes()
        .iter()
        .map(|s| s.as_str())
        .filter(|&l| l != bond)
        .collect();
    let m = t.matrixize(&others, &[bond])?;
    Ok((m.row_axes, m.matrix))
}

/// Environment-free truncation: QR-split both bond tensors, SVD the bond
/// matrix `R_A R_B^T` and keep the `target` largest singular values.
pub fn svd_truncate(net: &Network, bond: &str, target: usize) -> ZmtResult<Network> {
    let (a, b) = net.bond_ends(bond)?;
    let (rows_a, ma) = split_off_bond(net.tensor(a), bond)?;
    let (rows_b, mb) = split_off_bond(net.tensor(b), bond)?;
    let (qa, ra) = linalg::qr(&ma);
    let (qb, rb) = linalg::qr(&mb);
    let svd = linalg::svd(&(ra * rb.transpose()))?;
    let keep = target.min(svd.s.len()).max(1);
    let mut ua = svd.u.columns(0, keep).into_owned();
    let mut vb = svd.v.columns(0, keep).into_owned();
    for k in 0..keep {
        let s = svd.s[k].sqrt();
        ua.column_mut(k).scale_mut(s);
        vb.column_mut(k).scale_mut(s);
    }
    let rebuild = |rows: &[(String, usize)], m: DMatrix<f64>, like: &Tensor| -> ZmtResult<Tensor> {
        let t = Tensor::from_matrixization(&m, rows, &[(bond.to_string(), keep)])?;
        Ok(t.permuted(like.axes())?)
    };
    let ta = rebuild(&rows_a, qa * ua, net.tensor(a))?;
    let tb = rebuild(&rows_b, qb * vb, net.tensor(b))?;
    let mut tensors = net.tensors().to_vec();
    tensors[a] = ta;
    tensors[b] = tb;
    Network::new(tensors)
}
