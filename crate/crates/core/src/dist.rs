//! Finite joint distributions `p(s, x̂)` and deterministic merges of the
//! released alphabet.
//!
//! A [`JointPmf`] is stored column-major: every released symbol owns one
//! contiguous column of `|S|` probabilities. Merging a [`MergeSet`] sums its
//! columns into one composite symbol placed at the position of the smallest
//! merged index; all other columns keep their relative order.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Tolerance on `Σ p = 1` accepted at construction.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Separator used for composite labels of merged symbols.
pub const MERGE_SEPARATOR: &str = "+";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PmfError {
    #[error("joint pmf has no entries")]
    Empty,
    #[error("row {row} has {got} entries, expected {expected}")]
    ShapeMismatch { row: usize, got: usize, expected: usize },
    #[error("entry p[{row}][{col}] = {value} is negative or not finite")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("duplicate symbol label `{0}`")]
    DuplicateLabel(String),
    #[error("merge set must contain at least two symbols, got {0}")]
    MergeTooSmall(usize),
    #[error("symbol index {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// Which marginal of the joint an entropy refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    S,
    X,
}

/// Ordered list of unique symbol labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I, T>(symbols: I) -> Result<Self, PmfError>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        let mut seen = HashSet::with_capacity(symbols.len());
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return Err(PmfError::DuplicateLabel(s.clone()));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// Labels `"1"`, `"2"`, ..., `"n"`.
    pub fn numbered(n: usize) -> Self {
        Alphabet { symbols: (1..=n).map(|i| i.to_string()).collect() }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.symbols
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }
}

/// A set of column indices selected for merging. Always sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct MergeSet {
    indices: Vec<usize>,
}

impl MergeSet {
    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        MergeSet { indices }
    }

    pub fn empty() -> Self {
        MergeSet::default()
    }

    pub fn full(n: usize) -> Self {
        MergeSet { indices: (0..n).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    fn check_range(&self, size: usize) -> Result<(), PmfError> {
        match self.indices.last() {
            Some(&index) if index >= size => Err(PmfError::IndexOutOfRange { index, size }),
            _ => Ok(()),
        }
    }
}

impl From<Vec<usize>> for MergeSet {
    fn from(v: Vec<usize>) -> Self {
        MergeSet::new(v)
    }
}

impl fmt::Display for MergeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Disjoint blocks covering the whole released alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<MergeSet>,
}

impl Partition {
    /// Validates that `blocks` partition `{0, .., n-1}`.
    pub fn new(blocks: Vec<MergeSet>, n: usize) -> Result<Self, PmfError> {
        let mut seen = vec![false; n];
        for block in &blocks {
            if block.is_empty() {
                return Err(PmfError::InvalidPartition("empty block".into()));
            }
            for &i in block.indices() {
                if i >= n {
                    return Err(PmfError::InvalidPartition(format!(
                        "index {i} out of range for alphabet of size {n}"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(PmfError::InvalidPartition(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(PmfError::InvalidPartition(format!("index {missing} not covered")));
        }
        Ok(Partition { blocks })
    }

    pub fn singletons(n: usize) -> Self {
        Partition { blocks: (0..n).map(|i| MergeSet::new([i])).collect() }
    }

    pub fn blocks(&self) -> &[MergeSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// `p · log2 p` with the `0 · log 0 = 0` convention.
#[inline]
pub fn plog2p(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a probability vector.
pub fn entropy_of(p: &[f64]) -> f64 {
    let h: f64 = -p.iter().map(|&q| plog2p(q)).sum::<f64>();
    h.max(0.0)
}

/// Finite joint distribution over a sensitive alphabet `S` and the current
/// released alphabet `X̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    s_alphabet: Alphabet,
    x_alphabet: Alphabet,
    /// Column-major: `cols[x][s] = p(s, x)`.
    cols: Vec<Vec<f64>>,
}

impl JointPmf {
    /// Builds a joint from row-major probabilities (`rows[s][x]`).
    ///
    /// Released symbols with zero marginal are dropped.
    pub fn new(s_alphabet: Alphabet, x_alphabet: Alphabet, rows: &[Vec<f64>]) -> Result<Self, PmfError> {
        let cols = Self::transpose_checked(&s_alphabet, &x_alphabet, rows)?;
        let total: f64 = cols.iter().flatten().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(PmfError::NotNormalized(total));
        }
        Ok(Self::drop_empty(s_alphabet, x_alphabet, cols))
    }

    /// Builds a joint from nonnegative weights (for example counts), dividing
    /// by their total.
    pub fn from_weights(s_alphabet: Alphabet, x_alphabet: Alphabet, rows: &[Vec<f64>]) -> Result<Self, PmfError> {
        let mut cols = Self::transpose_checked(&s_alphabet, &x_alphabet, rows)?;
        let total: f64 = cols.iter().flatten().sum();
        if total.is_nan() || total <= 0.0 || !total.is_finite() {
            return Err(PmfError::NotNormalized(total));
        }
        for v in cols.iter_mut().flatten() {
            *v /= total;
        }
        Ok(Self::drop_empty(s_alphabet, x_alphabet, cols))
    }

    /// Joint with numbered labels on both axes.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, PmfError> {
        let ns = rows.len();
        let nx = rows.first().map_or(0, Vec::len);
        Self::new(Alphabet::numbered(ns), Alphabet::numbered(nx), rows)
    }

    fn transpose_checked(s: &Alphabet, x: &Alphabet, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, PmfError> {
        if s.is_empty() || x.is_empty() {
            return Err(PmfError::Empty);
        }
        if rows.len() != s.len() {
            return Err(PmfError::ShapeMismatch { row: rows.len(), got: rows.len(), expected: s.len() });
        }
        let mut cols = vec![vec![0.0; s.len()]; x.len()];
        for (si, row) in rows.iter().enumerate() {
            if row.len() != x.len() {
                return Err(PmfError::ShapeMismatch { row: si, got: row.len(), expected: x.len() });
            }
            for (xi, &v) in row.iter().enumerate() {
                if v.is_nan() || v < 0.0 || !v.is_finite() {
                    return Err(PmfError::InvalidEntry { row: si, col: xi, value: v });
                }
                cols[xi][si] = v;
            }
        }
        Ok(cols)
    }

    fn drop_empty(s_alphabet: Alphabet, x_alphabet: Alphabet, cols: Vec<Vec<f64>>) -> Self {
        let mut labels = Vec::with_capacity(cols.len());
        let mut kept = Vec::with_capacity(cols.len());
        for (label, col) in x_alphabet.symbols.into_iter().zip(cols) {
            if col.iter().sum::<f64>() > 0.0 {
                labels.push(label);
                kept.push(col);
            }
        }
        JointPmf { s_alphabet, x_alphabet: Alphabet { symbols: labels }, cols: kept }
    }

    pub fn s_alphabet(&self) -> &Alphabet {
        &self.s_alphabet
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn s_len(&self) -> usize {
        self.s_alphabet.len()
    }

    pub fn x_len(&self) -> usize {
        self.cols.len()
    }

    /// `p(s, x̂)`.
    pub fn p(&self, s: usize, x: usize) -> f64 {
        self.cols[x][s]
    }

    /// Column of `p(·, x̂)` values.
    pub fn column(&self, x: usize) -> &[f64] {
        &self.cols[x]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// Row-major copy of the probabilities.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.s_len()).map(|s| self.cols.iter().map(|c| c[s]).collect()).collect()
    }

    pub fn s_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.s_len()];
        for col in &self.cols {
            for (acc, &v) in m.iter_mut().zip(col) {
                *acc += v;
            }
        }
        m
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        self.cols.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.cols.iter().flatten().sum()
    }

    pub fn entropy(&self, axis: Axis) -> f64 {
        match axis {
            Axis::S => entropy_of(&self.s_marginal()),
            Axis::X => entropy_of(&self.x_marginal()),
        }
    }

    /// `I(S; X̂)` in bits.
    pub fn mutual_information(&self) -> f64 {
        let ps = self.s_marginal();
        let mut mi = 0.0;
        for col in &self.cols {
            let px: f64 = col.iter().sum();
            for (&p, &q) in col.iter().zip(&ps) {
                if p > 0.0 {
                    mi += p * (p / (q * px)).log2();
                }
            }
        }
        let hs = entropy_of(&ps);
        let hx = entropy_of(&self.x_marginal());
        let upper = hs.min(hx);
        debug_assert!(mi > -1e-9 && mi < upper + 1e-9, "mutual information {mi} outside [0, {upper}]");
        mi.clamp(0.0, upper)
    }

    /// Merges the columns in `w` into one composite symbol.
    pub fn merge(&self, w: &MergeSet) -> Result<JointPmf, PmfError> {
        if w.len() < 2 {
            return Err(PmfError::MergeTooSmall(w.len()));
        }
        w.check_range(self.x_len())?;
        let first = w.indices()[0];
        let mut merged = vec![0.0; self.s_len()];
        for &i in w.indices() {
            for (acc, &v) in merged.iter_mut().zip(&self.cols[i]) {
                *acc += v;
            }
        }
        let label = self.composite_label(w.indices());
        let mut labels = Vec::with_capacity(self.x_len() - w.len() + 1);
        let mut cols = Vec::with_capacity(labels.capacity());
        let mut merged = Some((label, merged));
        for (i, col) in self.cols.iter().enumerate() {
            if i == first {
                let (label, col) = merged.take().expect("merged column placed once");
                labels.push(label);
                cols.push(col);
            } else if !w.contains(i) {
                labels.push(self.x_alphabet.symbols[i].clone());
                cols.push(col.clone());
            }
        }
        let x_alphabet = Alphabet::new(labels)?;
        Ok(JointPmf { s_alphabet: self.s_alphabet.clone(), x_alphabet, cols })
    }

    /// Applies a hard clustering: each block becomes one released symbol,
    /// ordered by the smallest index it contains.
    pub fn apply_partition(&self, part: &Partition) -> Result<JointPmf, PmfError> {
        let part = Partition::new(part.blocks.clone(), self.x_len())?;
        let mut blocks: Vec<&MergeSet> = part.blocks.iter().collect();
        blocks.sort_by_key(|b| b.indices()[0]);
        let mut labels = Vec::with_capacity(blocks.len());
        let mut cols = Vec::with_capacity(blocks.len());
        for block in blocks {
            let mut col = vec![0.0; self.s_len()];
            for &i in block.indices() {
                for (acc, &v) in col.iter_mut().zip(&self.cols[i]) {
                    *acc += v;
                }
            }
            labels.push(self.composite_label(block.indices()));
            cols.push(col);
        }
        let x_alphabet = Alphabet::new(labels)?;
        Ok(JointPmf { s_alphabet: self.s_alphabet.clone(), x_alphabet, cols })
    }

    fn composite_label(&self, indices: &[usize]) -> String {
        indices
            .iter()
            .map(|&i| self.x_alphabet.symbols[i].as_str())
            .collect::<Vec<_>>()
            .join(MERGE_SEPARATOR)
    }
}

/// Free-function form of [`JointPmf::entropy`].
pub fn entropy(pmf: &JointPmf, axis: Axis) -> f64 {
    pmf.entropy(axis)
}

/// Free-function form of [`JointPmf::mutual_information`].
pub fn mutual_information(pmf: &JointPmf) -> f64 {
    pmf.mutual_information()
}

/// Canonical four-symbol fixture whose `X` marginal is `(0.2, 0.3, 0.1, 0.4)`.
pub fn fixture_d1() -> JointPmf {
    JointPmf::new(
        Alphabet::new(["0", "1"]).expect("unique"),
        Alphabet::numbered(4),
        &[vec![0.1, 0.2, 0.0, 0.3], vec![0.1, 0.1, 0.1, 0.1]],
    )
    .expect("fixture is a valid pmf")
}
