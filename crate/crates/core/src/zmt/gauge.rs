use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{build_metric, lowest_modes, optimize_candidate, truncate_bond, Closure, ZmtSettings};
use crate::error::{ZmtError, ZmtResult};
use crate::linalg;
use crate::network::Network;

#[derive(Clone, Debug, Serialize)]
pub struct GaugeProbe {
    pub mus_original: Vec<(f64, f64)>,
    pub mus_gauged: Vec<(f64, f64)>,
    pub f_original: f64,
    pub f_gauged: f64,
    pub condition_number: f64,
}

impl GaugeProbe {
    /// Largest distance between matched eigenvalues of the two spectra.
    pub fn spectrum_distance(&self) -> f64 {
        let a: Vec<Complex64> = self
            .mus_original
            .iter()
            .map(|&(r, i)| Complex64::new(r, i))
            .collect();
        let b: Vec<Complex64> = self
            .mus_gauged
            .iter()
            .map(|&(r, i)| Complex64::new(r, i))
            .collect();
        matched_distance(&a, &b)
    }

    pub fn f_relative_difference(&self) -> f64 {
        let scale = self.f_original.abs().max(self.f_gauged.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.f_original - self.f_gauged).abs() / scale
        }
    }
}

/// Greedy nearest-neighbour matching; spectra here have at most a few dozen entries.
pub fn matched_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

fn optimal_spectrum(
    net: &Network,
    bond: &str,
    settings: &ZmtSettings,
) -> ZmtResult<(Vec<(f64, f64)>, f64)> {
    let env = build_metric(net, bond, Closure::Identity)?;
    let d = env.dim;
    let basis = lowest_modes(&env, settings.kappa.min(d * d), settings.regularization)?;
    let out = optimize_candidate(&basis, &settings.cg)?;
    let factors = truncate_bond(&out.candidate)?;
    Ok((
        factors.mus.iter().map(|m| (m.re, m.im)).collect(),
        out.candidate.f,
    ))
}

/// Runs the optimization with and without a gauge transformation
/// `gauge^-1 gauge` inserted on `bond` and returns both insertion spectra.
pub fn gauge_probe(
    net: &Network,
    bond: &str,
    gauge: &DMatrix<f64>,
    settings: &ZmtSettings,
) -> ZmtResult<GaugeProbe> {
    let cond = linalg::condition_number(gauge)?;
    if !cond.is_finite() || cond > 1e12 {
        return Err(ZmtError::SingularGauge(cond));
    }
    let inv = gauge
        .clone()
        .try_inverse()
        .ok_or(ZmtError::SingularGauge(cond))?;
    let gauged = super::apply_insertion(net, bond, &inv, gauge)?;
    let (mus_original, f_original) = optimal_spectrum(net, bond, settings)?;
    let (mus_gauged, f_gauged) = optimal_spectrum(&gauged, bond, settings)?;
    Ok(GaugeProbe {
        mus_original,
        mus_gauged,
        f_original,
        f_gauged,
        condition_number: cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::make_virtual_loop;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_settings(d: usize) -> ZmtSettings {
        ZmtSettings {
            kappa: d * d,
            ..ZmtSettings::default()
        }
    }

    #[test]
    fn identity_gauge_gives_identical_spectra() {
        let net = make_virtual_loop(2, 2, 2, 1e-3, 3).unwrap().network();
        let probe = gauge_probe(&net, "b01", &DMatrix::identity(4, 4), &full_settings(4)).unwrap();
        assert!(probe.spectrum_distance() < 1e-12);
        assert!(probe.f_relative_difference() < 1e-12);
    }

    #[test]
    fn permutation_and_random_gauges() {
        // f near 1e-5 keeps metric round-off well below the compared digits
        let net = make_virtual_loop(2, 2, 2, 0.1, 3).unwrap().network();
        let perm = DMatrix::from_fn(4, 4, |i, j| if j == (i + 1) % 4 { 1.0 } else { 0.0 });
        let probe = gauge_probe(&net, "b01", &perm, &full_settings(4)).unwrap();
        assert!(probe.spectrum_distance() < 1e-6, "{probe:?}");

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = DMatrix::identity(4, 4) + DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-0.3..0.3));
        let probe = gauge_probe(&net, "b01", &g, &full_settings(4)).unwrap();
        assert!(probe.condition_number < 10.0);
        assert!(probe.spectrum_distance() < 1e-6, "{probe:?}");
        assert!(probe.f_relative_difference() < 1e-8, "{probe:?}");
    }

    #[test]
    fn singular_gauge_is_rejected() {
        let net = make_virtual_loop(2, 1, 2, 0.0, 3).unwrap().network();
        let g = DMatrix::from_element(2, 2, 1.0);
        assert!(matches!(
            gauge_probe(&net, "b01", &g, &ZmtSettings::default()),
            Err(ZmtError::SingularGauge(_))
        ));
    }
}
