//! Periodic MPO for the plaquette evolution operator `exp(epsilon B_p)`.

use nalgebra::DMatrix;

use super::model::sigma_z;
use crate::error::ZmtResult;
use crate::network::contract_all;
use crate::tensor::Tensor;

/// Loop (MPO bond) dimension.
pub const MPO_RANK: usize = 2;

#[derive(Clone, Debug)]
pub struct PlaquetteMPO {
    pub epsilon: f64,
    /// One tensor per corner with axes `(out, in, j_in, j_out)`.
    pub ops: Vec<Tensor>,
}

impl PlaquetteMPO {
    /// The `2 x 2` operator of channel `j` on corner `site`.
    pub fn channel(&self, site: usize, j: usize) -> DMatrix<f64> {
        channel_op(self.epsilon, site, j)
    }

    /// Contracts the loop index around the four corners into a `16 x 16`
    /// matrix, first corner most significant.
    pub fn contract_dense(&self) -> ZmtResult<DMatrix<f64>> {
        let ring: Vec<Tensor> = self
            .ops
            .iter()
            .enumerate()
            .map(|(k, t)| {
                t.clone().relabel(|l| match l {
                    "out" => format!("o{k}"),
                    "in" => format!("i{k}"),
                    "j_in" => format!("j{k}"),
                    _ => format!("j{}", (k + 1) % 4),
                })
            })
            .collect::<Result<_, _>>()?;
        let full = contract_all(ring)?;
        Ok(full
            .matrixize(&["o0", "o1", "o2", "o3"], &["i0", "i1", "i2", "i3"])?
            .matrix)
    }
}

/// `O^1 = cosh(eps)^(1/4) I`, `O^2 = sinh(eps)^(1/4) sigma_z`. For negative
/// `eps` the sign of `sinh` is carried by corner 0 alone.
fn channel_op(epsilon: f64, site: usize, j: usize) -> DMatrix<f64> {
    if j == 0 {
        DMatrix::identity(2, 2) * epsilon.cosh().powf(0.25)
    } else {
        let s = epsilon.sinh();
        let sign = if site == 0 && s < 0.0 { -1.0 } else { 1.0 };
        sigma_z() * (sign * s.abs().powf(0.25))
    }
}

pub fn build_plaquette_mpo(epsilon: f64) -> PlaquetteMPO {
    let ops = (0..4)
        .map(|site| {
            Tensor::from_fn(
                &["out", "in", "j_in", "j_out"],
                &[2, 2, MPO_RANK, MPO_RANK],
                |ix| {
                    if ix[2] == ix[3] {
                        channel_op(epsilon, site, ix[2])[(ix[0], ix[1])]
                    } else {
                        0.0
                    }
                },
            )
            .expect("static shape")
        })
        .collect();
    PlaquetteMPO { epsilon, ops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::z2::model::model_operators;

    #[test]
    fn zero_epsilon_is_identity() {
        let u = build_plaquette_mpo(0.0).contract_dense().unwrap();
        assert_eq!(u, DMatrix::identity(16, 16));
    }

    #[test]
    fn matches_closed_form_and_exponential() {
        let b = model_operators().b_p;
        for eps in [0.0152219, 1.0, -0.3] {
            let u = build_plaquette_mpo(eps).contract_dense().unwrap();
            let closed = DMatrix::identity(16, 16) * eps.cosh() + &b * eps.sinh();
            assert!((&u - &closed).amax() < 1e-14, "eps={eps}");
            let dense = (&b * eps).exp();
            assert!((&u - &dense).amax() < 1e-14, "eps={eps}");
        }
    }

    #[test]
    fn inverse_epsilon_inverts() {
        let u = build_plaquette_mpo(0.2).contract_dense().unwrap();
        let v = build_plaquette_mpo(-0.2).contract_dense().unwrap();
        assert!((u * v - DMatrix::identity(16, 16)).amax() < 1e-14);
    }
}
