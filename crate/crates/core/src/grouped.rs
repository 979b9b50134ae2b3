//! Grouped vectors: a flat coefficient vector split into contiguous,
//! non-overlapping groups.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Partition of `0..d` into `m` contiguous nonempty groups.
///
/// Group `i` covers `offsets[i]..offsets[i + 1]`. The offsets are shared
/// behind an `Arc` so cloning a partition is cheap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPartition {
    offsets: Arc<[usize]>,
}

impl GroupPartition {
    pub fn from_offsets(offsets: Vec<usize>) -> Result<Self> {
        if offsets.len() < 2 {
            return Err(Error::InvalidGroups(
                "a partition needs at least one group".into(),
            ));
        }
        if offsets[0] != 0 {
            return Err(Error::InvalidGroups("offsets must start at 0".into()));
        }
        if let Some(w) = offsets.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGroups(format!(
                "offsets must be strictly increasing, found {} followed by {}",
                w[0], w[1]
            )));
        }
        Ok(Self {
            offsets: offsets.into(),
        })
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        let mut acc = 0;
        for &s in sizes {
            acc += s;
            offsets.push(acc);
        }
        Self::from_offsets(offsets)
    }

    /// `groups` groups of `size` entries each.
    pub fn uniform(groups: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidGroups("group size must be positive".into()));
        }
        Self::from_offsets((0..=groups).map(|i| i * size).collect())
    }

    /// A single group spanning `0..d`.
    pub fn single(d: usize) -> Result<Self> {
        Self::from_offsets(vec![0, d])
    }

    pub fn num_groups(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn group_size(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Iterates over the per-group slices of `data`.
    pub fn slices<'a>(&'a self, data: &'a [f64]) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.offsets.windows(2).map(move |w| &data[w[0]..w[1]])
    }
}

/// A real vector together with its group partition.
///
/// When built from arbitrary group ids the entries are permuted so each group
/// is contiguous; `permutation[k]` is the original index of `data[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedVector {
    data: Vec<f64>,
    partition: GroupPartition,
    permutation: Option<Arc<[usize]>>,
}

impl GroupedVector {
    pub fn new(data: Vec<f64>, partition: GroupPartition) -> Result<Self> {
        if data.len() != partition.dim() {
            return Err(Error::DimensionMismatch {
                expected: partition.dim(),
                found: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("entry {k} of grouped vector")));
        }
        Ok(Self {
            data,
            partition,
            permutation: None,
        })
    }

    pub fn zeros(partition: GroupPartition) -> Self {
        Self {
            data: vec![0.0; partition.dim()],
            partition,
            permutation: None,
        }
    }

    /// Replaces the data, keeping partition and permutation. Panics on a
    /// length mismatch.
    pub fn with_data(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len(), "grouped vector length changed");
        Self {
            data,
            partition: self.partition.clone(),
            permutation: self.permutation.clone(),
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_groups(&self) -> usize {
        self.partition.num_groups()
    }

    pub fn group(&self, i: usize) -> &[f64] {
        &self.data[self.partition.range(i)]
    }

    pub fn groups(&self) -> impl Iterator<Item = &[f64]> {
        self.partition.slices(&self.data)
    }

    /// Data in the caller's original entry order.
    pub fn to_original_order(&self) -> Vec<f64> {
        match &self.permutation {
            None => self.data.clone(),
            Some(perm) => {
                let mut out = vec![0.0; self.data.len()];
                for (k, &orig) in perm.iter().enumerate() {
                    out[orig] = self.data[k];
                }
                out
            }
        }
    }

    /// Sequential left-to-right inner product.
    pub fn dot(&self, other: &GroupedVector) -> f64 {
        dot(&self.data, &other.data)
    }
}

/// Builds a grouped vector from per-entry group ids `0..m`, stably permuting
/// entries so each group is contiguous.
pub fn make_grouped(data: &[f64], group_ids: &[usize]) -> Result<GroupedVector> {
    if data.len() != group_ids.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: group_ids.len(),
        });
    }
    if data.is_empty() {
        return Err(Error::InvalidGroups("no entries".into()));
    }
    let m = group_ids.iter().copied().max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; m];
    for &id in group_ids {
        counts[id] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidGroups(format!(
            "group id {empty} is unused; ids must cover 0..{}",
            m - 1
        )));
    }
    let partition = GroupPartition::from_sizes(&counts)?;
    let mut cursor: Vec<usize> = partition.offsets()[..m].to_vec();
    let mut permutation = vec![0usize; data.len()];
    let mut grouped = vec![0.0; data.len()];
    for (orig, &id) in group_ids.iter().enumerate() {
        let k = cursor[id];
        cursor[id] += 1;
        permutation[k] = orig;
        grouped[k] = data[orig];
    }
    let mut out = GroupedVector::new(grouped, partition)?;
    out.permutation = Some(permutation.into());
    Ok(out)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}
