use nalgebra::DMatrix;

use super::metric::{unflatten, BondEnvironment};
use crate::error::{ZmtError, ZmtResult};
use crate::linalg;

/// The lowest eigenmodes of the regularized metric, each reshaped to a
/// `D x D` matrix.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    pub modes: Vec<DMatrix<f64>>,
    /// Eigenvalues of the regularized metric, ascending.
    pub eigenvalues: Vec<f64>,
    /// Absolute shift added to the diagonal of `g`.
    pub regularization: f64,
    /// Lowest eigenvalue of the unregularized metric over `norm_scale`.
    pub metric_floor: f64,
}

impl ModeBasis {
    pub fn kappa(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.modes[0].nrows()
    }

    /// Unregularized metric eigenvalues of the modes, clamped at zero.
    pub fn metric_weights(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|v| (v - self.regularization).max(0.0))
            .collect()
    }

    /// `sum_m alpha_m Z^m`.
    pub fn combine(&self, alpha: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut z = DMatrix::zeros(d, d);
        for (a, m) in alpha.iter().zip(&self.modes) {
            z += m * *a;
        }
        z
    }
}

/// Eigenpairs of `g + reg * (norm_scale / D^2) * I`, the `kappa` smallest.
pub fn lowest_modes(env: &BondEnvironment, kappa: usize, reg: f64) -> ZmtResult<ModeBasis> {
    let n = env.dim * env.dim;
    if kappa == 0 || kappa > n {
        return Err(ZmtError::KappaTooLarge { kappa, max: n });
    }
    let shift = reg * env.norm_scale / n as f64;
    let mut g = env.gram().clone();
    for k in 0..n {
        g[(k, k)] += shift;
    }
    let e = linalg::eig_sym(&g)?;
    let modes = (0..kappa)
        .map(|m| unflatten(e.vectors.column(m).as_slice(), env.dim))
        .collect();
    let scale = env.norm_scale.abs().max(f64::MIN_POSITIVE);
    Ok(ModeBasis {
        modes,
        eigenvalues: e.values[..kappa].to_vec(),
        regularization: shift,
        metric_floor: (e.values[0] - shift) / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isotropic_metric() {
        let env = BondEnvironment::from_gram(2, DMatrix::identity(4, 4)).unwrap();
        let b = lowest_modes(&env, 3, 1e-12).unwrap();
        for v in &b.eigenvalues {
            assert!((v - (1.0 + 1e-12)).abs() < 1e-14);
        }
        for (i, a) in b.modes.iter().enumerate() {
            for (j, c) in b.modes.iter().enumerate() {
                let dot = a.component_mul(c).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn matches_explicit_regularized_eigensolve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(6, 9, |_, _| rng.gen_range(-1.0..1.0));
        let g = x.transpose() * x;
        let env = BondEnvironment::from_gram(3, g.clone()).unwrap();
        let reg = 1e-3;
        let b = lowest_modes(&env, 5, reg).unwrap();
        let shifted = &g + DMatrix::identity(9, 9) * (reg * g.trace() / 9.0);
        let direct = linalg::eig_sym(&shifted).unwrap();
        for k in 0..5 {
            assert!((b.eigenvalues[k] - direct.values[k]).abs() < 1e-12);
        }
        // rank 6 Gram in 9 dimensions: three exact zero modes
        assert!(b.metric_floor.abs() < 1e-12);
    }

    #[test]
    fn kappa_bounds() {
        let env = BondEnvironment::from_gram(2, DMatrix::identity(4, 4)).unwrap();
        assert_eq!(
            lowest_modes(&env, 5, 0.0).unwrap_err(),
            ZmtError::KappaTooLarge { kappa: 5, max: 4 }
        );
        assert!(lowest_modes(&env, 4, 0.0).is_ok());
    }
}
