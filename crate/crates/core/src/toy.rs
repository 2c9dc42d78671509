//! Small loopy fixtures with known compressibility.
//!
//! [`make_virtual_loop`] builds a four-site ring whose bonds carry an extra
//! index `j` that runs around the ring without touching any physical leg. The
//! network then represents `sum_j |psi_j>` with all `|psi_j>` identical, so
//! each fused bond of length `D*d` can be cut back to `D` without error.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ZmtError, ZmtResult};
use crate::network::Network;
use crate::tensor::Tensor;

/// Largest total physical dimension [`full_state`] will build.
pub const FULL_STATE_LIMIT: usize = 1 << 20;

pub const RING_BONDS: [&str; 4] = ["b01", "b12", "b23", "b30"];

pub fn physical_label(site: usize) -> String {
    format!("p{site}")
}

/// Left and right ring bonds of `site`.
pub fn site_bonds(site: usize) -> (&'static str, &'static str) {
    (RING_BONDS[(site + 3) % 4], RING_BONDS[site])
}

#[derive(Clone, Debug)]
pub struct LoopPlaquette {
    /// Site tensors with axes `(p_k, left bond, right bond)`; bond index major,
    /// loop index minor.
    pub tensors: Vec<Tensor>,
    /// The single-component tensors (bond length `D`), scaled like `tensors`.
    pub components: Vec<Tensor>,
    pub bond_dim: usize,
    pub loop_dim: usize,
    pub physical_dims: Vec<usize>,
    pub noise: f64,
    pub seed: u64,
}

impl LoopPlaquette {
    pub fn network(&self) -> Network {
        Network::new(self.tensors.clone()).expect("ring labels are consistent")
    }

    /// The ring of one loop component; identical for every `j` at zero noise.
    pub fn component_network(&self) -> Network {
        Network::new(self.components.clone()).expect("ring labels are consistent")
    }

    pub fn full_state(&self) -> ZmtResult<Tensor> {
        full_state(&self.network())
    }

    pub fn component_state(&self) -> ZmtResult<Tensor> {
        full_state(&self.component_network())
    }
}

fn uniform(rng: &mut ChaCha8Rng, amp: f64) -> f64 {
    if amp == 0.0 {
        0.0
    } else {
        rng.gen_range(-amp..=amp)
    }
}

pub fn make_virtual_loop(
    bond_dim: usize,
    loop_dim: usize,
    phys_dim: usize,
    noise: f64,
    seed: u64,
) -> ZmtResult<LoopPlaquette> {
    if bond_dim == 0 || loop_dim == 0 || phys_dim == 0 {
        return Err(ZmtError::InvalidNetwork(
            "bond, loop and physical dimensions must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dd, d) = (bond_dim, loop_dim);
    let mut components = Vec::with_capacity(4);
    let mut tensors = Vec::with_capacity(4);
    for site in 0..4 {
        let (l, r) = site_bonds(site);
        let p = physical_label(site);
        let shape = [phys_dim, dd, dd];
        let data: Vec<f64> = (0..phys_dim * dd * dd)
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect();
        let base = Tensor::new(&[p.as_str(), l, r], &shape, data)?;
        let fused = Tensor::from_fn(&[p.as_str(), l, r], &[phys_dim, dd * d, dd * d], |ix| {
            let (bl, jl) = (ix[1] / d, ix[1] % d);
            let (br, jr) = (ix[2] / d, ix[2] % d);
            if jl == jr {
                base.get(&[ix[0], bl, br])
            } else {
                0.0
            }
        })?;
        components.push(base);
        tensors.push(fused);
    }
    for t in &mut tensors {
        let noisy: Vec<f64> = t
            .data()
            .iter()
            .map(|x| x + uniform(&mut rng, noise))
            .collect();
        *t = Tensor::new(t.axes(), t.shape(), noisy)?;
    }
    let norm = Network::new(tensors.clone())?.norm_sq()?.sqrt();
    if norm > 0.0 && norm.is_finite() {
        let s = norm.powf(-0.25);
        tensors.iter_mut().for_each(|t| t.scale(s));
        components.iter_mut().for_each(|t| t.scale(s));
    }
    Ok(LoopPlaquette {
        tensors,
        components,
        bond_dim,
        loop_dim,
        physical_dims: vec![phys_dim; 4],
        noise,
        seed,
    })
}

/// Exact contraction of `net` over its bonds; the result carries the open labels.
pub fn full_state(net: &Network) -> ZmtResult<Tensor> {
    let mut total: usize = 1;
    for label in net.open_labels() {
        let (k, _) = (0..net.len())
            .map(|k| (k, net.tensor(k).dim(&label)))
            .find(|(_, d)| d.is_ok())
            .expect("open label belongs to a tensor");
        total = total.saturating_mul(net.tensor(k).dim(&label)?);
    }
    if total > FULL_STATE_LIMIT {
        return Err(ZmtError::SizeGuard(total));
    }
    Ok(net.contract()?)
}

/// `|<a|b>| / (|a| |b|)` for two states with the same labels.
pub fn fidelity(a: &Tensor, b: &Tensor) -> ZmtResult<f64> {
    let b = b.permuted(a.axes())?;
    let ab: f64 = a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum();
    Ok(ab.abs() / (a.norm() * b.norm()))
}

/// Grows `bond` by `extra` dimensions without changing the state: inserts
/// `P Q = I` with a random `D x (D+extra)` matrix `P` and its pseudo-inverse `Q`.
pub fn plant_redundant_dimensions(
    net: &Network,
    bond: &str,
    extra: usize,
    seed: u64,
) -> ZmtResult<Network> {
    let d = net.bond_dim(bond)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = DMatrix::from_fn(d, d + extra, |_, _| rng.gen_range(-1.0..=1.0));
    let q = p
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| ZmtError::InvalidNetwork(e.to_string()))?;
    crate::zmt::apply_insertion(net, bond, &p, &q)
}

/// Random ring with bond length `bond_dim` on every bond and no redundancy.
pub fn random_ring(bond_dim: usize, phys_dim: usize, seed: u64) -> ZmtResult<Network> {
    Ok(make_virtual_loop(bond_dim, 1, phys_dim, 0.0, seed)?.network())
}
