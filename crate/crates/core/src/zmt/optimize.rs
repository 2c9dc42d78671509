//! Nonlinear conjugate gradient over the subspace coefficients `alpha`.
//!
//! Polak-Ribiere+ directions with a diagonal preconditioner, restarted every
//! `kappa` iterations and whenever the direction stops descending. The line search is Armijo backtracking;
//! each accepted trial is refined by one quadratic-interpolation step when
//! that lowers `f` further.

use super::cost::{candidate_at, gradient_subspace, ZCandidate};
use super::modes::ModeBasis;
use crate::error::{ZmtError, ZmtResult};

#[derive(Clone, Debug, PartialEq)]
pub struct CgOptions {
    pub max_iter: usize,
    /// Stop once `|G_m| <= grad_tol * f` (with `alpha` kept at unit norm).
    pub grad_tol: f64,
    pub armijo: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Restart period; `None` restarts every `kappa` iterations.
    pub restart_every: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-10,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
            restart_every: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The line search found no decrease (round-off floor).
    Stalled,
    /// `E_max` became degenerate, so the gradient is unavailable.
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub candidate: ZCandidate,
    /// Error of the best single-mode initialization.
    pub f_initial: f64,
    /// Starting coefficients (a basis vector, or a sign/pair combination).
    pub alpha_initial: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn unit(k: usize, kappa: usize) -> Vec<f64> {
    let mut v = vec![0.0; kappa];
    v[k] = 1.0;
    v
}

/// Best starting point: single modes first, then sign flips, then normalized
/// pairwise sums and differences.
fn initial_candidate(basis: &ModeBasis) -> ZmtResult<ZCandidate> {
    let kappa = basis.kappa();
    // candidates whose N differ by less than the regularization are treated as
    // tied; among those the largest |E| (at unit |alpha|) keeps I - Z/E best
    // conditioned
    let tie = basis.regularization;
    let best = |starts: Vec<Vec<f64>>| {
        let cands: Vec<ZCandidate> = starts
            .into_iter()
            .filter_map(|a| candidate_at(&a, basis).ok())
            .filter(|c| c.f.is_finite())
            .collect();
        let n_min = cands.iter().map(|c| c.n).fold(f64::INFINITY, f64::min);
        cands
            .into_iter()
            .filter(|c| c.n <= n_min + tie)
            .max_by(|a, b| {
                let ka = a.emax_value().abs() / norm(&a.alpha);
                let kb = b.emax_value().abs() / norm(&b.alpha);
                ka.total_cmp(&kb)
            })
    };
    if let Some(c) = best((0..kappa).map(|k| unit(k, kappa)).collect()) {
        return Ok(c);
    }
    if let Some(c) = best(
        (0..kappa)
            .map(|k| unit(k, kappa).iter().map(|x| -x).collect())
            .collect(),
    ) {
        return Ok(c);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut pairs = Vec::new();
    for m in 0..kappa {
        for n in m + 1..kappa {
            for sign in [1.0, -1.0] {
                let mut a = vec![0.0; kappa];
                a[m] = s;
                a[n] = sign * s;
                pairs.push(a);
            }
        }
    }
    best(pairs).ok_or(ZmtError::NoUsableMode)
}

/// Minimizes the truncation error over `Z = sum_m alpha_m Z^m`.
///
/// Returns [`ZmtError::NoUsableMode`] when no starting combination has a real
/// eigenvalue; the caller is expected to fall back to SVD truncation.
pub fn optimize_candidate(basis: &ModeBasis, opts: &CgOptions) -> ZmtResult<OptimizeOutcome> {
    let init = initial_candidate(basis)?;
    let f_initial = init.f;
    let alpha_initial = init.alpha.clone();
    let kappa = basis.kappa();
    let restart = opts.restart_every.unwrap_or(kappa).max(1);

    let mut cur = init;
    let mut grad = match gradient_subspace(&cur, basis) {
        Ok(g) => g,
        Err(ZmtError::DegenerateEigenvalue(_)) => {
            return Ok(finish(
                cur,
                f_initial,
                alpha_initial,
                0,
                StopReason::Degenerate,
            ));
        }
        Err(e) => return Err(e),
    };
    // diagonal preconditioner from the mode weights; the N part of the
    // curvature along mode m is proportional to its metric eigenvalue
    let weights = basis.metric_weights();
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    let floor = cur.n.max(f64::EPSILON * wmax).max(f64::MIN_POSITIVE);
    let pc: Vec<f64> = weights.iter().map(|w| floor / (w + floor)).collect();
    let precond = |g: &[f64]| -> Vec<f64> { g.iter().zip(&pc).map(|(g, p)| g * p).collect() };

    let mut pgrad = precond(&grad);
    let mut dir: Vec<f64> = pgrad.iter().map(|g| -g).collect();
    let mut f_prev: Option<f64> = None;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    for it in 0..opts.max_iter {
        if norm(&grad) <= opts.grad_tol * cur.f {
            stop = StopReason::Converged;
            break;
        }
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            dir = pgrad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &pgrad);
        }
        let dn = norm(&dir);
        let mut t = 0.1 / dn;
        if let Some(fp) = f_prev {
            let guess = 2.0 * (cur.f - fp) / slope;
            if guess.is_finite() && guess > 0.0 {
                t = (1.01 * guess).min(1.0 / dn);
            }
        }
        let Some(next) = line_search(&cur, &dir, slope, t, basis, opts) else {
            stop = StopReason::Stalled;
            break;
        };
        iterations = it + 1;

        // f is scale invariant; keep alpha on the unit sphere
        let s = norm(&next.alpha);
        let alpha: Vec<f64> = next.alpha.iter().map(|a| a / s).collect();
        let next = match candidate_at(&alpha, basis) {
            Ok(c) if c.f <= next.f * (1.0 + 1e-12) + f64::MIN_POSITIVE => c,
            _ => next,
        };
        let new_grad = match gradient_subspace(&next, basis) {
            Ok(g) => g,
            Err(ZmtError::DegenerateEigenvalue(_)) => {
                cur = next;
                stop = StopReason::Degenerate;
                break;
            }
            Err(e) => return Err(e),
        };
        let new_pgrad = precond(&new_grad);
        let gg = dot(&grad, &pgrad);
        let beta = if (it + 1) % restart == 0 || gg == 0.0 {
            0.0
        } else {
            let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            (dot(&new_pgrad, &y) / gg).max(0.0)
        };
        dir = new_pgrad
            .iter()
            .zip(&dir)
            .map(|(g, d)| -g + beta * d)
            .collect();
        f_prev = Some(cur.f);
        cur = next;
        grad = new_grad;
        pgrad = new_pgrad;
    }
    Ok(finish(cur, f_initial, alpha_initial, iterations, stop))
}

fn finish(
    mut cand: ZCandidate,
    f_initial: f64,
    alpha_initial: Vec<f64>,
    iterations: usize,
    stop: StopReason,
) -> OptimizeOutcome {
    // report Z with unit entrywise norm; f does not change
    let s = cand.z.norm();
    if s > 0.0 && s.is_finite() {
        cand.z /= s;
        cand.alpha.iter_mut().for_each(|a| *a /= s);
        cand.n /= s * s;
        let e = cand.emax.value_re / s;
        cand.emax.value_re = e;
        // rescaling Z leaves the eigenvectors unchanged
    }
    OptimizeOutcome {
        candidate: cand,
        f_initial,
        alpha_initial,
        iterations,
        stop,
    }
}

fn line_search(
    cur: &ZCandidate,
    dir: &[f64],
    slope: f64,
    mut t: f64,
    basis: &ModeBasis,
    opts: &CgOptions,
) -> Option<ZCandidate> {
    let f0 = cur.f;
    let trial = |t: f64| {
        let a: Vec<f64> = cur.alpha.iter().zip(dir).map(|(x, d)| x + t * d).collect();
        candidate_at(&a, basis).ok().filter(|c| c.f.is_finite())
    };
    let armijo = |t: f64, f: f64| f <= f0 + opts.armijo * t * slope;
    for _ in 0..opts.max_backtracks {
        let Some(c) = trial(t) else {
            t *= opts.shrink;
            continue;
        };
        // quadratic model through f(0), f'(0) and f(t)
        let curv = (c.f - f0 - slope * t) / (t * t);
        let tq = if curv > 0.0 {
            -slope / (2.0 * curv)
        } else {
            f64::NAN
        };
        let refined = if tq.is_finite() && (tq - t).abs() > 0.01 * t {
            trial(tq).filter(|q| armijo(tq, q.f))
        } else {
            None
        };
        let accepted = armijo(t, c.f).then_some(c);
        let best = match (accepted, refined) {
            (Some(a), Some(b)) => Some(if b.f < a.f { b } else { a }),
            (a, b) => a.or(b),
        };
        if let Some(b) = best {
            if b.f < f0 {
                return Some(b);
            }
        }
        t = if tq.is_finite() && tq < t {
            tq.max(t * 0.1)
        } else {
            t * opts.shrink
        };
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zmt::metric::BondEnvironment;
    use crate::zmt::modes::lowest_modes;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_env(d: usize, rank: usize, seed: u64) -> BondEnvironment {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(rank, d * d, |_, _| rng.gen_range(-1.0..1.0));
        BondEnvironment::from_gram(d, x.transpose() * x).unwrap()
    }

    #[test]
    fn single_mode_is_fixed_point() {
        let env = random_env(3, 20, 1);
        let basis = lowest_modes(&env, 1, 1e-12).unwrap();
        let out = optimize_candidate(&basis, &CgOptions::default()).unwrap();
        assert!((out.candidate.f - out.f_initial).abs() <= 1e-12 * out.f_initial);
        assert!((out.candidate.z.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_zero_mode_gives_zero_error() {
        let env = random_env(3, 6, 2);
        let basis = lowest_modes(&env, 3, 1e-12).unwrap();
        let out = optimize_candidate(&basis, &CgOptions::default()).unwrap();
        assert!(out.candidate.f < 1e-12 * env.norm_scale);
    }

    #[test]
    fn never_increases_error_and_converges() {
        for seed in 0..10 {
            let env = random_env(4, 25, 100 + seed);
            let basis = lowest_modes(&env, 5, 1e-12).unwrap();
            let out = optimize_candidate(&basis, &CgOptions::default()).unwrap();
            assert!(out.candidate.f <= out.f_initial);
            let g = gradient_subspace(&out.candidate, &basis).unwrap();
            if out.stop == StopReason::Converged {
                assert!(norm(&g) <= 1e-10 * out.candidate.f * 10.0);
            }
        }
    }
}
