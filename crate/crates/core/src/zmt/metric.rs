use nalgebra::DMatrix;

use crate::error::{ZmtError, ZmtResult};
use crate::linalg;
use crate::network::{bra_label, overlap, Network};
use crate::tensor::Tensor;

const CUT_I: &str = "\u{0}cut_i";
const CUT_J: &str = "\u{0}cut_j";
const CUT_IP: &str = "\u{0}cut_i'";
const CUT_JP: &str = "\u{0}cut_j'";

/// How open legs of the neighborhood are closed when forming the metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Closure {
    /// Every open leg is traced against its conjugate, so the metric is the
    /// exact Gram matrix of the cut states.
    #[default]
    Identity,
}

/// The Gram matrix `g_{ij,i'j'} = <psi_ij|psi_i'j'>` of the states obtained by
/// cutting one bond. Index `i` belongs to the first tensor on the bond, `j` to
/// the second; the flattened row index is `i * D + j`.
#[derive(Clone, Debug)]
pub struct BondEnvironment {
    /// Axes `(i, j, i', j')`.
    pub half_overlap: Tensor,
    pub dim: usize,
    /// `sum_ij g_{ij,ij}`, the scale used by relative tolerances.
    pub norm_scale: f64,
    gram: DMatrix<f64>,
}

impl BondEnvironment {
    /// Wraps an explicit `D^2 x D^2` Gram matrix.
    pub fn from_gram(dim: usize, gram: DMatrix<f64>) -> ZmtResult<Self> {
        let n = dim * dim;
        if gram.shape() != (n, n) {
            return Err(ZmtError::InvalidNetwork(format!(
                "metric of shape {:?} for bond dimension {dim}",
                gram.shape()
            )));
        }
        let half_overlap = Tensor::from_fn(&["i", "j", "i'", "j'"], &[dim; 4], |ix| {
            gram[(ix[0] * dim + ix[1], ix[2] * dim + ix[3])]
        })?;
        let norm_scale = gram.trace();
        Ok(Self {
            half_overlap,
            dim,
            norm_scale,
            gram,
        })
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `<psi|psi>` for the uncut network, `sum_{i,i'} g_{ii,i'i'}`.
    pub fn state_norm_sq(&self) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            for k in 0..d {
                s += self.gram[(i * d + i, k * d + k)];
            }
        }
        s
    }

    /// Largest entry of `|g - g^T|` relative to `norm_scale`.
    pub fn asymmetry(&self) -> f64 {
        let diff = &self.gram - self.gram.transpose();
        diff.amax() / self.norm_scale.abs().max(f64::MIN_POSITIVE)
    }

    /// Lowest eigenvalue of `g` divided by `norm_scale`.
    pub fn lowest_eigenvalue_ratio(&self) -> ZmtResult<f64> {
        let e = linalg::eig_sym(&self.gram)?;
        Ok(e.values[0] / self.norm_scale.abs().max(f64::MIN_POSITIVE))
    }

    /// `g Z` reshaped back to a `D x D` matrix.
    pub fn apply(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let v = flatten(z);
        let gv = &self.gram * v;
        unflatten(gv.as_slice(), self.dim)
    }

    /// `N = sum Z_ij g_{ij,i'j'} Z_i'j'`.
    pub fn quadratic_form(&self, z: &DMatrix<f64>) -> f64 {
        let v = flatten(z);
        v.dot(&(&self.gram * &v))
    }
}

/// Row-major flattening `Z_ij -> v[i * D + j]`.
pub fn flatten(z: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    let d = z.nrows();
    nalgebra::DVector::from_fn(d * z.ncols(), |k, _| z[(k / d, k % d)])
}

pub fn unflatten(v: &[f64], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| v[i * dim + j])
}

/// Contracts the network with the bond `bond` cut open against its conjugate.
pub fn build_metric(net: &Network, bond: &str, closure: Closure) -> ZmtResult<BondEnvironment> {
    let Closure::Identity = closure;
    let (a, b) = net.bond_ends(bond)?;
    if !net.connected_without(bond, a, b) {
        return Err(ZmtError::InvalidCut(bond.to_string()));
    }
    let dim = net.bond_dim(bond)?;
    let mut ket = net.tensors().to_vec();
    let mut bra = net.tensors().to_vec();
    ket[a].rename(bond, CUT_I)?;
    ket[b].rename(bond, CUT_J)?;
    bra[a].rename(bond, CUT_IP)?;
    bra[b].rename(bond, CUT_JP)?;
    let g = overlap(&ket, &bra)?;
    // the bra cut legs appear once in the bra list, so they keep their names
    debug_assert!(!g.has_axis(&bra_label(CUT_IP)));
    let m = g.matrixize(&[CUT_I, CUT_J], &[CUT_IP, CUT_JP])?;
    let half_overlap = g
        .permuted(&[CUT_I, CUT_J, CUT_IP, CUT_JP])?
        .relabel(|l| match l {
            CUT_I => "i".into(),
            CUT_J => "j".into(),
            CUT_IP => "i'".into(),
            _ => "j'".into(),
        })?;
    let gram = m.matrix;
    let norm_scale = gram.trace();
    Ok(BondEnvironment {
        half_overlap,
        dim,
        norm_scale,
        gram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(axes: &[&str], shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(axes, shape, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn plaquette(d: usize, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Network::new(vec![
            random(&["p0", "b30", "b01"], &[2, d, d], &mut rng),
            random(&["p1", "b01", "b12"], &[2, d, d], &mut rng),
            random(&["p2", "b12", "b23"], &[2, d, d], &mut rng),
            random(&["p3", "b23", "b30"], &[2, d, d], &mut rng),
        ])
        .unwrap()
    }

    #[test]
    fn single_state_metric() {
        let net = plaquette(1, 3);
        let env = build_metric(&net, "b01", Closure::Identity).unwrap();
        let n = net.norm_sq().unwrap();
        assert_eq!(env.gram().shape(), (1, 1));
        assert!((env.gram()[(0, 0)] - n).abs() < 1e-13 * n);
    }

    #[test]
    fn metric_matches_cut_state_vectors() {
        // oracle: build every psi_ij as a full state vector and take overlaps
        let net = plaquette(2, 7);
        let env = build_metric(&net, "b01", Closure::Identity).unwrap();
        let d = 2;
        let mut states = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let a = net
                    .tensor(0)
                    .select("b01", &[i])
                    .unwrap()
                    .renamed("b01", "x")
                    .unwrap();
                let b = net
                    .tensor(1)
                    .select("b01", &[j])
                    .unwrap()
                    .renamed("b01", "y")
                    .unwrap();
                // contract in a different order than the metric: sites 2,3 first
                let rest = net.tensor(2).contract_shared(net.tensor(3)).unwrap();
                let psi = rest
                    .contract_shared(&b)
                    .unwrap()
                    .contract_shared(&a)
                    .unwrap()
                    .permuted(&["p0", "p1", "p2", "p3", "x", "y"])
                    .unwrap();
                states.push(psi.into_data());
            }
        }
        for r in 0..d * d {
            for c in 0..d * d {
                let dot: f64 = states[r].iter().zip(&states[c]).map(|(x, y)| x * y).sum();
                assert!((env.gram()[(r, c)] - dot).abs() < 1e-12);
            }
        }
        assert!(env.asymmetry() < 1e-10);
        assert!(env.lowest_eigenvalue_ratio().unwrap() > -1e-10);
        assert!((env.state_norm_sq() - net.norm_sq().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tree_bond_is_invalid_cut() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::new(vec![
            random(&["p0", "x"], &[2, 2], &mut rng),
            random(&["x", "p1"], &[2, 2], &mut rng),
        ])
        .unwrap();
        assert_eq!(
            build_metric(&net, "x", Closure::Identity).unwrap_err(),
            ZmtError::InvalidCut("x".into())
        );
    }

    #[test]
    fn quadratic_form_and_apply_agree() {
        let env = build_metric(&plaquette(3, 11), "b12", Closure::Identity).unwrap();
        let z = DMatrix::from_fn(3, 3, |i, j| (i as f64) - 0.5 * j as f64);
        let n = env.quadratic_form(&z);
        let gz = env.apply(&z);
        assert!((n - z.component_mul(&gz).sum()).abs() < 1e-12 * n.abs().max(1.0));
    }
}
