//! Problem instances, spin vectors and the bias-free Ising Hamiltonian
//! `H(s) = -sum_{i<j} J_ij s_i s_j`.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::{COEFF_MAX, MAX_SPINS};

/// A symmetric integer coupling matrix with zero diagonal and entries in
/// `[-15, 15]`, stored densely in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemInstance {
    n: usize,
    couplings: Vec<i8>,
    seed: u64,
    label: String,
}

impl ProblemInstance {
    /// An instance with no couplings.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            couplings: vec![0; n * n],
            seed: 0,
            label: String::new(),
        }
    }

    /// Builds an instance from upper- or lower-triangular edge triples.
    ///
    /// Each unordered pair may appear at most once. Zero weights are accepted
    /// and leave the pair uncoupled.
    pub fn from_edges(n: usize, edges: &[(usize, usize, i64)]) -> Result<Self> {
        let mut inst = Self::zeros(n);
        let mut seen = BTreeSet::new();
        for &(a, b, w) in edges {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, n });
            }
            if i == j {
                return Err(Error::SelfLoop { i, j });
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEdge { i, j });
            }
            inst.set(i, j, w)?;
        }
        Ok(inst)
    }

    /// Builds an instance from a full row-major matrix, checking every invariant.
    pub fn from_dense(n: usize, couplings: Vec<i8>) -> Result<Self> {
        check_dense(n, &couplings)?;
        Ok(Self {
            n,
            couplings,
            seed: 0,
            label: String::new(),
        })
    }

    /// Sets `J[i][j] = J[j][i] = w`.
    pub fn set(&mut self, i: usize, j: usize, w: i64) -> Result<()> {
        let n = self.n;
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { index: i.max(j), n });
        }
        if i == j {
            return Err(Error::SelfLoop { i, j });
        }
        if w.abs() > COEFF_MAX as i64 {
            return Err(Error::CoefficientRange { i, j, value: w });
        }
        self.couplings[i * n + j] = w as i8;
        self.couplings[j * n + i] = w as i8;
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> i8 {
        self.couplings[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i8] {
        &self.couplings[i * self.n..(i + 1) * self.n]
    }

    pub fn couplings(&self) -> &[i8] {
        &self.couplings
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Nonzero upper-triangular pairs as `(i, j, J_ij)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n).filter_map(move |j| {
                let w = self.coupling(i, j);
                (w != 0).then_some((i, j, w))
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Realized density: nonzero pairs over `n(n-1)/2`.
    pub fn density(&self) -> f64 {
        let pairs = self.n * self.n.saturating_sub(1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }

    /// `sum_{i<j} |J_ij|`, an upper bound on `|H|`.
    pub fn abs_coupling_sum(&self) -> i64 {
        self.edges().map(|(_, _, w)| (w as i64).abs()).sum()
    }

    /// Re-checks the symmetry, diagonal and range invariants.
    pub fn validate(&self) -> Result<()> {
        check_dense(self.n, &self.couplings)
    }
}

fn check_dense(n: usize, couplings: &[i8]) -> Result<()> {
    if couplings.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            actual: couplings.len(),
        });
    }
    for i in 0..n {
        if couplings[i * n + i] != 0 {
            return Err(Error::SelfLoop { i, j: i });
        }
        for j in (i + 1)..n {
            let w = couplings[i * n + j];
            if !(-COEFF_MAX..=COEFF_MAX).contains(&w) {
                return Err(Error::CoefficientRange {
                    i,
                    j,
                    value: w as i64,
                });
            }
            if couplings[j * n + i] != w {
                return Err(Error::Asymmetric { i, j });
            }
        }
    }
    Ok(())
}

/// A configuration of `n` spins, each exactly -1 or +1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some((index, &value)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::InvalidSpin { index, value });
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Spin `i` is +1 when bit `i` of `bits` is set.
    pub fn from_bits(bits: u64, n: usize) -> Result<Self> {
        if n > MAX_SPINS {
            return Err(Error::TooManySpins {
                n,
                limit: MAX_SPINS,
            });
        }
        Ok(Self(
            (0..n)
                .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        ))
    }

    /// Inverse of [`SpinVector::from_bits`]; only defined for `n <= 64`.
    pub fn to_bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0u64, |acc, (i, _)| acc | 1 << i)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    /// The globally flipped configuration `-s`.
    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

impl fmt::Display for SpinVector {
    /// `1` for +1 and `0` for -1, spin 0 first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl core::str::FromStr for SpinVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(index, c)| match c {
                '1' | '+' => Ok(1),
                '0' | '-' => Ok(-1),
                _ => Err(Error::InvalidSpin { index, value: 0 }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

fn check_len(inst: &ProblemInstance, s: &SpinVector) -> Result<()> {
    if s.len() != inst.n() {
        return Err(Error::DimensionMismatch {
            expected: inst.n(),
            actual: s.len(),
        });
    }
    Ok(())
}

/// `H(s) = -sum_{i<j} J_ij s_i s_j`.
pub fn hamiltonian(inst: &ProblemInstance, s: &SpinVector) -> Result<i64> {
    check_len(inst, s)?;
    inst.validate()?;
    Ok(energy_unchecked(inst, s.as_slice()))
}

pub(crate) fn energy_unchecked(inst: &ProblemInstance, s: &[i8]) -> i64 {
    let mut h = 0i64;
    for i in 0..inst.n() {
        let row = inst.row(i);
        for j in (i + 1)..inst.n() {
            h -= (row[j] as i64) * (s[i] as i64) * (s[j] as i64);
        }
    }
    h
}

/// `sum_{j != i} J_ij s_j`.
pub fn local_field(inst: &ProblemInstance, s: &SpinVector, i: usize) -> Result<i64> {
    check_len(inst, s)?;
    if i >= inst.n() {
        return Err(Error::IndexOutOfRange {
            index: i,
            n: inst.n(),
        });
    }
    Ok(field_unchecked(inst, s.as_slice(), i))
}

#[inline]
pub(crate) fn field_unchecked(inst: &ProblemInstance, s: &[i8], i: usize) -> i64 {
    inst.row(i)
        .iter()
        .zip(s)
        .map(|(&w, &sj)| (w as i64) * (sj as i64))
        .sum()
}

/// Energy change from flipping spin `k`: `2 s_k h_k`, with the field taken
/// before the flip.
pub fn flip_delta(inst: &ProblemInstance, s: &SpinVector, k: usize) -> Result<i64> {
    Ok(2 * s.get(k) as i64 * local_field(inst, s, k)?)
}

/// Rounds to the nearest coefficient level, ties away from zero, clamped to
/// `[-15, 15]`.
pub fn quantize_coeff(x: f64) -> Result<i8> {
    if !x.is_finite() {
        return Err(Error::NonFinite("coefficient"));
    }
    let limit = COEFF_MAX as f64;
    Ok(libm::round(x).clamp(-limit, limit) as i8)
}

/// An undirected weighted graph for Max-Cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxCutGraph {
    n: usize,
    edges: Vec<(usize, usize, i64)>,
}

impl MaxCutGraph {
    /// Edges must satisfy `i < j < n` with no repeated pair.
    pub fn new(n: usize, edges: Vec<(usize, usize, i64)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(i, j, _) in &edges {
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, n });
            }
            if i >= j {
                return Err(Error::SelfLoop { i, j });
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEdge { i, j });
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, i64)] {
        &self.edges
    }

    pub fn total_weight(&self) -> i64 {
        self.edges.iter().map(|e| e.2).sum()
    }
}

/// Max-Cut to bias-free Ising: `J_ij = -W_ij`.
pub fn maxcut_to_ising(g: &MaxCutGraph) -> Result<ProblemInstance> {
    let mut inst = ProblemInstance::zeros(g.n());
    for &(i, j, w) in g.edges() {
        if w.abs() > COEFF_MAX as i64 {
            return Err(Error::CoefficientRange { i, j, value: w });
        }
        inst.set(i, j, -w)?;
    }
    Ok(inst)
}

/// Total weight of edges whose endpoints carry opposite spins.
pub fn cut_value(g: &MaxCutGraph, s: &SpinVector) -> Result<i64> {
    if s.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: s.len(),
        });
    }
    Ok(g.edges()
        .iter()
        .filter(|&&(i, j, _)| s.get(i) != s.get(j))
        .map(|e| e.2)
        .sum())
}
