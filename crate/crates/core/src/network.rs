//! Closed tensor networks described by axis labels.
//!
//! A label carried by exactly two tensors is a bond and is summed over when
//! the network is contracted. A label carried by one tensor is open (physical,
//! ancilla, or an external bond that is treated like a physical index).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Result, TensorError, ZmtError, ZmtResult};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    tensors: Vec<Tensor>,
}

/// Label of the bra copy of a bond inside an overlap diagram.
pub fn bra_label(label: &str) -> String {
    format!("{label}\u{0}'")
}

fn label_counts<'a>(tensors: impl IntoIterator<Item = &'a Tensor>) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for t in tensors {
        for a in t.axes() {
            *counts.entry(a.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

impl Network {
    pub fn new(tensors: Vec<Tensor>) -> ZmtResult<Self> {
        let counts = label_counts(&tensors);
        if let Some((l, n)) = counts.iter().find(|(_, &n)| n > 2) {
            return Err(ZmtError::InvalidNetwork(format!(
                "label '{l}' appears {n} times"
            )));
        }
        for (label, _) in counts.iter().filter(|(_, &n)| n == 2) {
            let dims: Vec<usize> = tensors.iter().filter_map(|t| t.dim(label).ok()).collect();
            if dims[0] != dims[1] {
                return Err(TensorError::AxisLengthMismatch {
                    a: label.to_string(),
                    b: label.to_string(),
                    dim_a: dims[0],
                    dim_b: dims[1],
                }
                .into());
            }
        }
        Ok(Self { tensors })
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, k: usize) -> &Tensor {
        &self.tensors[k]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn into_tensors(self) -> Vec<Tensor> {
        self.tensors
    }

    /// Replaces tensor `k`, revalidating the network.
    pub fn with_tensor(&self, k: usize, t: Tensor) -> ZmtResult<Self> {
        let mut tensors = self.tensors.clone();
        tensors[k] = t;
        Self::new(tensors)
    }

    pub fn bonds(&self) -> Vec<String> {
        label_counts(&self.tensors)
            .into_iter()
            .filter(|(_, n)| *n == 2)
            .map(|(l, _)| l.to_string())
            .collect()
    }

    pub fn open_labels(&self) -> Vec<String> {
        let counts = label_counts(&self.tensors);
        self.tensors
            .iter()
            .flat_map(|t| t.axes().iter())
            .filter(|a| counts[a.as_str()] == 1)
            .cloned()
            .collect()
    }

    /// Indices of the two tensors joined by `bond`, in network order.
    pub fn bond_ends(&self, bond: &str) -> ZmtResult<(usize, usize)> {
        let ends: Vec<usize> = (0..self.tensors.len())
            .filter(|&k| self.tensors[k].has_axis(bond))
            .collect();
        match ends.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(ZmtError::NotABond(bond.to_string())),
        }
    }

    pub fn bond_dim(&self, bond: &str) -> ZmtResult<usize> {
        let (a, _) = self.bond_ends(bond)?;
        Ok(self.tensors[a].dim(bond)?)
    }

    /// Whether tensors `a` and `b` stay connected once `bond` is removed.
    pub fn connected_without(&self, bond: &str, a: usize, b: usize) -> bool {
        let n = self.tensors.len();
        let mut seen = vec![false; n];
        let mut stack = vec![a];
        seen[a] = true;
        while let Some(k) = stack.pop() {
            for (j, t) in self.tensors.iter().enumerate() {
                if seen[j] {
                    continue;
                }
                let linked = self.tensors[k]
                    .axes()
                    .iter()
                    .any(|l| l != bond && t.has_axis(l));
                if linked {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen[b]
    }

    /// Exact contraction over all bonds; the result carries the open labels.
    pub fn contract(&self) -> Result<Tensor> {
        contract_all(self.tensors.clone())
    }

    /// `<self|self>` with every open label traced against its conjugate.
    pub fn norm_sq(&self) -> Result<f64> {
        let t = overlap(&self.tensors, &self.tensors)?;
        Ok(t.scalar_value().expect("closed overlap diagram"))
    }

    /// `<other|self>`; both networks must expose the same open labels.
    pub fn inner(&self, other: &Network) -> Result<f64> {
        let t = overlap(&self.tensors, &other.tensors)?;
        t.scalar_value()
            .ok_or_else(|| TensorError::UnknownAxis(t.axes().join(",")))
    }
}

/// Builds the overlap diagram `<bra|ket>`: labels shared inside `bra` are
/// renamed with [`bra_label`], every other bra label is matched to the ket by
/// name (identity closure of open legs).
pub fn overlap(ket: &[Tensor], bra: &[Tensor]) -> Result<Tensor> {
    let counts = label_counts(bra);
    let mut all: Vec<Tensor> = ket.to_vec();
    for t in bra {
        let t = t.clone().relabel(|l| {
            if counts[l] == 2 {
                bra_label(l)
            } else {
                l.to_string()
            }
        })?;
        all.push(t);
    }
    contract_all(all)
}

/// Contracts a list of tensors over every label shared by two of them,
/// greedily picking the pair with the smallest intermediate.
pub fn contract_all(mut tensors: Vec<Tensor>) -> Result<Tensor> {
    if tensors.is_empty() {
        return Ok(Tensor::scalar(1.0));
    }
    while tensors.len() > 1 {
        let mut best: Option<(usize, usize, usize, usize)> = None;
        for i in 0..tensors.len() {
            for j in i + 1..tensors.len() {
                let (a, b) = (&tensors[i], &tensors[j]);
                let shared: BTreeSet<&str> = a
                    .axes()
                    .iter()
                    .filter(|l| b.has_axis(l))
                    .map(|l| l.as_str())
                    .collect();
                if shared.is_empty() {
                    continue;
                }
                let kdim: usize = shared.iter().map(|l| a.dim(l).unwrap()).product();
                let out = a.len() / kdim * (b.len() / kdim);
                let cost = out * kdim;
                if best.is_none_or(|(_, _, o, c)| (out, cost) < (o, c)) {
                    best = Some((i, j, out, cost));
                }
            }
        }
        let (i, j) = match best {
            Some((i, j, _, _)) => (i, j),
            None => {
                // disconnected pieces: take the outer product of the two smallest
                let mut order: Vec<usize> = (0..tensors.len()).collect();
                order.sort_by_key(|&k| tensors[k].len());
                (order[0].min(order[1]), order[0].max(order[1]))
            }
        };
        let b = tensors.remove(j);
        let a = tensors.remove(i);
        tensors.push(a.contract_shared(&b)?);
    }
    Ok(tensors.pop().expect("one tensor left"))
}
