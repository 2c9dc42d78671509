//! Dense real tensors with labeled axes.
//!
//! Data is stored row-major over the declared axis order. Contraction pairs
//! axes by label; the result carries the unpaired axes of the left operand
//! followed by those of the right operand.

use std::collections::HashSet;

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Result, TensorError};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    axes: Vec<String>,
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// One output axis of [`Tensor::fuse`]: the new label and its members, in
/// row-major order (first member varies slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct AxisGroup {
    pub name: String,
    pub members: Vec<String>,
}

impl AxisGroup {
    pub fn new(name: &str, members: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            members: members.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// What [`Tensor::fuse`] needs to remember to undo itself.
#[derive(Clone, Debug, PartialEq)]
pub struct FuseRecord {
    groups: Vec<(String, Vec<(String, usize)>)>,
}

/// A tensor flattened into a matrix by partitioning its axes into row and
/// column groups.
#[derive(Clone, Debug)]
pub struct Matrixization {
    pub row_axes: Vec<(String, usize)>,
    pub col_axes: Vec<(String, usize)>,
    pub matrix: DMatrix<f64>,
}

impl Matrixization {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

fn check_labels(axes: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for a in axes {
        if !seen.insert(a.as_str()) {
            return Err(TensorError::DuplicateAxis(a.clone()));
        }
    }
    Ok(())
}

impl Tensor {
    pub fn new<S: AsRef<str>>(axes: &[S], shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let axes: Vec<String> = axes.iter().map(|a| a.as_ref().to_string()).collect();
        if axes.len() != shape.len() {
            return Err(TensorError::RankMismatch {
                shape: shape.len(),
                axes: axes.len(),
            });
        }
        check_labels(&axes)?;
        if let Some(k) = shape.iter().position(|&n| n == 0) {
            return Err(TensorError::ZeroLengthAxis(axes[k].clone()));
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                len: data.len(),
                expected,
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite("Tensor::new"));
        }
        Ok(Self {
            axes,
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros<S: AsRef<str>>(axes: &[S], shape: &[usize]) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(axes, shape, vec![0.0; n])
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn<S: AsRef<str>>(
        axes: &[S],
        shape: &[usize],
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            for k in (0..shape.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(axes, shape, data)
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            axes: vec![],
            shape: vec![],
            data: vec![value],
        }
    }

    /// The `n`x`n` identity with axes `(row, col)`.
    pub fn identity(n: usize, row: &str, col: &str) -> Result<Self> {
        Self::from_fn(
            &[row, col],
            &[n, n],
            |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 },
        )
    }

    /// Wraps a matrix as a rank-2 tensor with the given axis labels.
    pub fn from_matrix(m: &DMatrix<f64>, row: &str, col: &str) -> Result<Self> {
        let (r, c) = m.shape();
        // nalgebra stores column-major; the transpose's storage is our row-major layout
        let data = m.transpose().as_slice().to_vec();
        Self::new(&[row, col], &[r, c], data)
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn has_axis(&self, label: &str) -> bool {
        self.axes.iter().any(|a| a == label)
    }

    pub fn axis_index(&self, label: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| TensorError::UnknownAxis(label.to_string()))
    }

    pub fn dim(&self, label: &str) -> Result<usize> {
        Ok(self.shape[self.axis_index(label)?])
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let strides = row_major_strides(&self.shape);
        let off: usize = index.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[off]
    }

    /// The single entry of a rank-0 tensor.
    pub fn scalar_value(&self) -> Option<f64> {
        (self.axes.is_empty()).then(|| self.data[0])
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale(factor);
        self
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        self.data.iter_mut().for_each(|x| *x = f(*x));
    }

    pub fn rename(&mut self, from: &str, to: &str) -> Result<()> {
        let k = self.axis_index(from)?;
        if from != to && self.has_axis(to) {
            return Err(TensorError::DuplicateAxis(to.to_string()));
        }
        self.axes[k] = to.to_string();
        Ok(())
    }

    pub fn renamed(mut self, from: &str, to: &str) -> Result<Self> {
        self.rename(from, to)?;
        Ok(self)
    }

    /// Relabels every axis through `f`.
    pub fn relabel(mut self, f: impl Fn(&str) -> String) -> Result<Self> {
        self.axes = self.axes.iter().map(|a| f(a)).collect();
        check_labels(&self.axes)?;
        Ok(self)
    }

    /// Reorders axes to the given label order.
    pub fn permuted<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.rank() {
            return Err(TensorError::NotAPartition);
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|l| self.axis_index(l.as_ref()))
            .collect::<Result<_>>()?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if seen[p] {
                return Err(TensorError::NotAPartition);
            }
            seen[p] = true;
        }
        Ok(self.permute_by_index(&perm))
    }

    fn permute_by_index(&self, perm: &[usize]) -> Self {
        let axes: Vec<String> = perm.iter().map(|&p| self.axes[p].clone()).collect();
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Self {
                axes,
                shape,
                data: self.data.clone(),
            };
        }
        let src_strides = row_major_strides(&self.shape);
        let strides: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let n = self.data.len();
        let mut data = Vec::with_capacity(n);
        let rank = shape.len();
        let last = rank - 1;
        let (inner_len, inner_stride) = (shape[last], strides[last]);
        let mut idx = vec![0usize; rank];
        let mut off = 0usize;
        let outer = n / inner_len;
        for _ in 0..outer {
            let mut o = off;
            for _ in 0..inner_len {
                data.push(self.data[o]);
                o += inner_stride;
            }
            for k in (0..last).rev() {
                idx[k] += 1;
                off += strides[k];
                if idx[k] < shape[k] {
                    break;
                }
                off -= strides[k] * shape[k];
                idx[k] = 0;
            }
        }
        Self { axes, shape, data }
    }

    /// Flattens into a matrix with the listed row axes (in order) and the
    /// listed column axes (in order).
    pub fn matrixize<S: AsRef<str>, T: AsRef<str>>(
        &self,
        row_axes: &[S],
        col_axes: &[T],
    ) -> Result<Matrixization> {
        let order: Vec<&str> = row_axes
            .iter()
            .map(|s| s.as_ref())
            .chain(col_axes.iter().map(|s| s.as_ref()))
            .collect();
        let p = self.permuted(&order)?;
        let nr = row_axes.len();
        let rows: usize = p.shape[..nr].iter().product();
        let cols: usize = p.shape[nr..].iter().product();
        // row-major (rows x cols) data is the column-major storage of the transpose
        let matrix = DMatrixView::from_slice(&p.data, cols, rows).transpose();
        let tag = |range: std::ops::Range<usize>| -> Vec<(String, usize)> {
            range.map(|k| (p.axes[k].clone(), p.shape[k])).collect()
        };
        Ok(Matrixization {
            row_axes: tag(0..nr),
            col_axes: tag(nr..p.rank()),
            matrix,
        })
    }

    /// Inverse of [`Tensor::matrixize`] given the row/column axis layout.
    pub fn from_matrixization(
        matrix: &DMatrix<f64>,
        row_axes: &[(String, usize)],
        col_axes: &[(String, usize)],
    ) -> Result<Self> {
        let rows: usize = row_axes.iter().map(|a| a.1).product();
        let cols: usize = col_axes.iter().map(|a| a.1).product();
        if matrix.nrows() != rows || matrix.ncols() != cols {
            return Err(TensorError::SplitMismatch(format!(
                "matrix {}x{} vs layout {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                rows,
                cols
            )));
        }
        let axes: Vec<&str> = row_axes
            .iter()
            .chain(col_axes)
            .map(|a| a.0.as_str())
            .collect();
        let shape: Vec<usize> = row_axes.iter().chain(col_axes).map(|a| a.1).collect();
        let data = matrix.transpose().as_slice().to_vec();
        Self::new(&axes, &shape, data)
    }

    /// Sums over the paired axes. The result carries the unpaired axes of `self`
    /// followed by the unpaired axes of `other`.
    pub fn contract(&self, other: &Tensor, pairs: &[(&str, &str)]) -> Result<Tensor> {
        let mut pa = Vec::with_capacity(pairs.len());
        let mut pb = Vec::with_capacity(pairs.len());
        for &(la, lb) in pairs {
            let ia = self.axis_index(la)?;
            let ib = other.axis_index(lb)?;
            if self.shape[ia] != other.shape[ib] {
                return Err(TensorError::AxisLengthMismatch {
                    a: la.to_string(),
                    b: lb.to_string(),
                    dim_a: self.shape[ia],
                    dim_b: other.shape[ib],
                });
            }
            if pa.contains(&ia) {
                return Err(TensorError::DuplicateAxis(la.to_string()));
            }
            if pb.contains(&ib) {
                return Err(TensorError::DuplicateAxis(lb.to_string()));
            }
            pa.push(ia);
            pb.push(ib);
        }
        let free_a: Vec<usize> = (0..self.rank()).filter(|k| !pa.contains(k)).collect();
        let free_b: Vec<usize> = (0..other.rank()).filter(|k| !pb.contains(k)).collect();

        let mut axes: Vec<String> = free_a.iter().map(|&k| self.axes[k].clone()).collect();
        axes.extend(free_b.iter().map(|&k| other.axes[k].clone()));
        check_labels(&axes)?;
        let mut shape: Vec<usize> = free_a.iter().map(|&k| self.shape[k]).collect();
        shape.extend(free_b.iter().map(|&k| other.shape[k]));

        let m: usize = free_a.iter().map(|&k| self.shape[k]).product();
        let n: usize = free_b.iter().map(|&k| other.shape[k]).product();
        let kdim: usize = pa.iter().map(|&k| self.shape[k]).product();

        let perm_a: Vec<usize> = free_a.iter().chain(&pa).copied().collect();
        let perm_b: Vec<usize> = pb.iter().chain(&free_b).copied().collect();
        let a = self.permute_by_index(&perm_a);
        let b = other.permute_by_index(&perm_b);

        // C = A(m x k) B(k x n) in row-major equals C^T = B^T A^T in column-major
        let at = DMatrixView::from_slice(&a.data, kdim, m);
        let bt = DMatrixView::from_slice(&b.data, n, kdim);
        let ct = bt * at;
        let data = ct.as_slice().to_vec();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite("contract"));
        }
        Ok(Tensor { axes, shape, data })
    }

    /// Contracts over every label the two tensors share.
    pub fn contract_shared(&self, other: &Tensor) -> Result<Tensor> {
        let shared: Vec<(&str, &str)> = self
            .axes
            .iter()
            .filter(|a| other.has_axis(a))
            .map(|a| (a.as_str(), a.as_str()))
            .collect();
        self.contract(other, &shared)
    }

    /// Merges axis groups into single axes. Groups must cover every axis
    /// exactly once; the output axes follow the group order.
    pub fn fuse(&self, groups: &[AxisGroup]) -> Result<(Tensor, FuseRecord)> {
        let members: Vec<&str> = groups
            .iter()
            .flat_map(|g| g.members.iter().map(|s| s.as_str()))
            .collect();
        let set: HashSet<&str> = members.iter().copied().collect();
        if members.len() != self.rank()
            || set.len() != members.len()
            || groups.iter().any(|g| g.members.is_empty())
        {
            return Err(TensorError::NotAPartition);
        }
        let p = self
            .permuted(&members)
            .map_err(|_| TensorError::NotAPartition)?;
        let mut record = Vec::with_capacity(groups.len());
        let mut shape = Vec::with_capacity(groups.len());
        for g in groups {
            let parts: Vec<(String, usize)> = g
                .members
                .iter()
                .map(|m| Ok((m.clone(), self.dim(m)?)))
                .collect::<Result<_>>()?;
            shape.push(parts.iter().map(|p| p.1).product());
            record.push((g.name.clone(), parts));
        }
        let names: Vec<&str> = groups.iter().map(|g| g.name.as_str()).collect();
        let fused = Tensor::new(&names, &shape, p.data)?;
        Ok((fused, FuseRecord { groups: record }))
    }

    /// Undoes [`Tensor::fuse`]. The tensor may have been permuted since, as long
    /// as each fused axis is still present with its recorded length.
    pub fn split(&self, record: &FuseRecord) -> Result<Tensor> {
        let names: Vec<&str> = record.groups.iter().map(|g| g.0.as_str()).collect();
        let p = self
            .permuted(&names)
            .map_err(|e| TensorError::SplitMismatch(e.to_string()))?;
        let mut axes = Vec::new();
        let mut shape = Vec::new();
        for (k, (name, parts)) in record.groups.iter().enumerate() {
            let n: usize = parts.iter().map(|p| p.1).product();
            if p.shape[k] != n {
                return Err(TensorError::SplitMismatch(format!(
                    "axis '{name}' has length {} but record expects {n}",
                    p.shape[k]
                )));
            }
            for (m, d) in parts {
                axes.push(m.clone());
                shape.push(*d);
            }
        }
        Tensor::new(&axes, &shape, p.data)
    }

    /// Keeps only the listed positions along one axis.
    pub fn select(&self, axis: &str, indices: &[usize]) -> Result<Tensor> {
        let k = self.axis_index(axis)?;
        let len = self.shape[k];
        if let Some(&bad) = indices.iter().find(|&&i| i >= len) {
            return Err(TensorError::IndexOutOfRange {
                axis: axis.to_string(),
                index: bad,
                len,
            });
        }
        let outer: usize = self.shape[..k].iter().product();
        let inner: usize = self.shape[k + 1..].iter().product();
        let mut data = Vec::with_capacity(outer * indices.len() * inner);
        for o in 0..outer {
            for &i in indices {
                let start = (o * len + i) * inner;
                data.extend_from_slice(&self.data[start..start + inner]);
            }
        }
        let mut shape = self.shape.clone();
        shape[k] = indices.len();
        Tensor::new(&self.axes, &shape, data)
    }

    /// Entrywise `self + factor * other`, aligning `other` by labels.
    pub fn add_scaled(&self, other: &Tensor, factor: f64) -> Result<Tensor> {
        let o = other.permuted(&self.axes)?;
        if o.shape != self.shape {
            return Err(TensorError::AxisLengthMismatch {
                a: self.axes.join(","),
                b: other.axes.join(","),
                dim_a: self.len(),
                dim_b: other.len(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&o.data)
            .map(|(x, y)| x + factor * y)
            .collect();
        Ok(Tensor {
            axes: self.axes.clone(),
            shape: self.shape.clone(),
            data,
        })
    }

    /// Largest absolute entrywise difference after aligning labels.
    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        let d = self.add_scaled(other, -1.0)?;
        Ok(d.data.iter().fold(0.0f64, |m, x| m.max(x.abs())))
    }

    /// Applies a matrix to one axis: `out[.., k, ..] = sum_i t[.., i, ..] m[i, k]`.
    /// The axis keeps its label and position.
    pub fn apply_on_axis(&self, axis: &str, m: &DMatrix<f64>) -> Result<Tensor> {
        let k = self.axis_index(axis)?;
        if m.nrows() != self.shape[k] {
            return Err(TensorError::AxisLengthMismatch {
                a: axis.to_string(),
                b: "matrix rows".to_string(),
                dim_a: self.shape[k],
                dim_b: m.nrows(),
            });
        }
        let tmp = "\u{0}apply";
        let mt = Tensor::from_matrix(m, tmp, "\u{0}apply_out")?;
        let r = self.contract(&mt, &[(axis, tmp)])?;
        let r = r.renamed("\u{0}apply_out", axis)?;
        r.permuted(&self.axes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(axes: &[&str], shape: &[usize], seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(axes, shape, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn identity_composition() {
        let a = Tensor::identity(2, "i", "j").unwrap();
        let b = Tensor::identity(2, "j", "k").unwrap();
        let c = a.contract(&b, &[("j", "j")]).unwrap();
        assert_eq!(c.axes(), &["i", "k"]);
        assert_eq!(c, Tensor::identity(2, "i", "k").unwrap());
    }

    #[test]
    fn vector_norm_squared() {
        let v = Tensor::new(&["x"], &[3], vec![1.0, 2.0, 2.0]).unwrap();
        let s = v.contract(&v, &[("x", "x")]).unwrap();
        assert_eq!(s.scalar_value(), Some(9.0));
    }

    #[test]
    fn matmul_against_naive_loops() {
        let a = random(&["i", "k"], &[2, 3], 1);
        let b = random(&["k", "j"], &[3, 4], 2);
        let c = a.contract(&b, &[("k", "k")]).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a.get(&[i, k]) * b.get(&[k, j]);
                }
                assert!((c.get(&[i, j]) - s).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn contraction_errors() {
        let a = random(&["i", "k"], &[2, 3], 1);
        let b = random(&["k", "i"], &[2, 2], 2);
        assert!(matches!(
            a.contract(&b, &[("k", "k")]),
            Err(TensorError::AxisLengthMismatch { .. })
        ));
        let b = random(&["k", "i"], &[3, 2], 2);
        assert!(matches!(
            a.contract(&b, &[("k", "k")]),
            Err(TensorError::DuplicateAxis(_))
        ));
    }

    #[test]
    fn fuse_row_major_law() {
        let t = Tensor::from_fn(&["a", "b"], &[2, 3], |ix| (10 * ix[0] + ix[1]) as f64).unwrap();
        let (f, rec) = t.fuse(&[AxisGroup::new("k", &["a", "b"])]).unwrap();
        assert_eq!(f.shape(), &[6]);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(f.get(&[3 * i + j]), (10 * i + j) as f64);
            }
        }
        assert_eq!(f.split(&rec).unwrap(), t);
    }

    #[test]
    fn fuse_bond_with_loop_index() {
        let t = random(&["p", "i", "j"], &[3, 2, 2], 5);
        let (f, _) = t
            .fuse(&[
                AxisGroup::new("p", &["p"]),
                AxisGroup::new("k", &["i", "j"]),
            ])
            .unwrap();
        assert_eq!(f.dim("k").unwrap(), 4);
    }

    #[test]
    fn fuse_rejects_non_cover() {
        let t = random(&["a", "b", "c"], &[2, 3, 4], 3);
        assert_eq!(
            t.fuse(&[AxisGroup::new("x", &["a", "b"])]).unwrap_err(),
            TensorError::NotAPartition
        );
        assert_eq!(
            t.fuse(&[
                AxisGroup::new("x", &["a", "b"]),
                AxisGroup::new("y", &["b", "c"])
            ])
            .unwrap_err(),
            TensorError::NotAPartition
        );
    }

    #[test]
    fn matrixize_round_trip() {
        let t = random(&["a", "b", "c"], &[2, 3, 4], 7);
        let m = t.matrixize(&["c", "a"], &["b"]).unwrap();
        assert_eq!((m.rows(), m.cols()), (8, 3));
        assert!((m.matrix[(3, 2)] - t.get(&[1, 2, 1])).abs() == 0.0);
        let back = Tensor::from_matrixization(&m.matrix, &m.row_axes, &m.col_axes).unwrap();
        assert_eq!(back.permuted(&["a", "b", "c"]).unwrap(), t);
    }

    #[test]
    fn select_slices_axis() {
        let t = Tensor::from_fn(&["a", "b"], &[3, 2], |ix| (ix[0] * 2 + ix[1]) as f64).unwrap();
        let s = t.select("a", &[2, 0]).unwrap();
        assert_eq!(s.data(), &[4.0, 5.0, 0.0, 1.0]);
    }

    #[test]
    fn new_rejects_bad_input() {
        assert!(Tensor::new(&["a", "a"], &[1, 1], vec![0.0]).is_err());
        assert!(Tensor::new(&["a"], &[2], vec![0.0]).is_err());
        assert!(Tensor::new(&["a"], &[1], vec![f64::NAN]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn fuse_split_round_trip(d0 in 1usize..4, d1 in 1usize..4, d2 in 1usize..4, seed in 0u64..1000) {
            let t = random(&["a", "b", "c"], &[d0, d1, d2], seed);
            let (f, rec) = t.fuse(&[AxisGroup::new("x", &["c", "a"]), AxisGroup::new("y", &["b"])]).unwrap();
            proptest::prop_assert_eq!(f.split(&rec).unwrap().permuted(&["a", "b", "c"]).unwrap(), t);
        }

        #[test]
        fn contraction_is_bilinear(seed in 0u64..1000, alpha in -3.0f64..3.0) {
            let a = random(&["i", "k", "l"], &[2, 3, 2], seed);
            let b = random(&["i", "k", "l"], &[2, 3, 2], seed + 1);
            let c = random(&["k", "m", "l"], &[3, 4, 2], seed + 2);
            let pairs = [("k", "k"), ("l", "l")];
            let lhs = a.clone().scaled(alpha).add_scaled(&b, 1.0).unwrap().contract(&c, &pairs).unwrap();
            let rhs = a.contract(&c, &pairs).unwrap().scaled(alpha)
                .add_scaled(&b.contract(&c, &pairs).unwrap(), 1.0).unwrap();
            proptest::prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        }

        #[test]
        fn contraction_order_independent(seed in 0u64..1000) {
            let a = random(&["i", "j"], &[3, 4], seed);
            let b = random(&["j", "k", "p"], &[4, 2, 3], seed + 1);
            let c = random(&["k", "l"], &[2, 5], seed + 2);
            let left = a.contract_shared(&b).unwrap().contract_shared(&c).unwrap();
            let right = a.contract_shared(&b.contract_shared(&c).unwrap()).unwrap();
            proptest::prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
        }
    }
}
