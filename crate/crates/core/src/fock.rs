//! Exterior and symmetric algebras over a finite basis: multivectors, Wick
//! pairings, creation and annihilation operators, induced operators.
//!
//! A multivector over `V` and one over `V*` share the same representation;
//! the pairing between them is the Wick determinant (fermions) or the
//! un-normalized Wick permanent (bosons), so `⟨ẽ1ẽ1|e1e1⟩ = 2`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{determinant, permanent, DenseOperator};
use crate::C64;

/// Coefficients with modulus below this are dropped.
pub const ZERO_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermionic,
    Bosonic,
}

impl Statistics {
    pub const ALL: [Statistics; 2] = [Statistics::Fermionic, Statistics::Bosonic];

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Fermionic => "fermionic",
            Statistics::Bosonic => "bosonic",
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Statistics {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fermionic" => Ok(Statistics::Fermionic),
            "bosonic" => Ok(Statistics::Bosonic),
            other => Err(Error::Unknown {
                kind: "statistics",
                name: other.to_string(),
            }),
        }
    }
}

/// Canonically ordered basis monomial. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    indices: Vec<usize>,
    statistics: Statistics,
}

impl MultiIndex {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn grade(&self) -> usize {
        self.indices.len()
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Multiplicities of each index value (all 1 for fermions).
    pub fn multiplicities(&self) -> Vec<usize> {
        multiplicities(&self.indices)
    }
}

fn multiplicities(sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&x| x == sorted[i]).count();
        out.push(j);
        i += j;
    }
    out
}

/// Sorts `indices`, returning the canonical monomial and the reordering sign;
/// the sign is 0 for a repeated fermionic index.
pub fn canonicalize(indices: &[usize], statistics: Statistics, dim: usize) -> Result<(MultiIndex, i8)> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
        return Err(Error::IndexOutOfRange { index: bad, dim });
    }
    let (sorted, sign) = sort_with_sign(indices, statistics);
    Ok((
        MultiIndex {
            indices: sorted,
            statistics,
        },
        sign,
    ))
}

fn sort_with_sign(indices: &[usize], statistics: Statistics) -> (Vec<usize>, i8) {
    let mut v = indices.to_vec();
    let mut sign = 1i8;
    // insertion sort counts transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    match statistics {
        Statistics::Bosonic => (v, 1),
        Statistics::Fermionic => {
            if v.windows(2).any(|w| w[0] == w[1]) {
                (v, 0)
            } else {
                (v, sign)
            }
        }
    }
}

/// Finite linear combination of canonical monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Multivector {
    statistics: Statistics,
    dim: usize,
    terms: BTreeMap<Vec<usize>, C64>,
}

impl Multivector {
    pub fn zero(statistics: Statistics, dim: usize) -> Self {
        Self {
            statistics,
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(statistics: Statistics, dim: usize) -> Self {
        let mut m = Self::zero(statistics, dim);
        m.terms.insert(Vec::new(), C64::new(1.0, 0.0));
        m
    }

    /// The monomial `e_{i1} e_{i2} …` in the given (not necessarily sorted) order.
    pub fn monomial(statistics: Statistics, dim: usize, indices: &[usize]) -> Result<Self> {
        let (mi, sign) = canonicalize(indices, statistics, dim)?;
        let mut m = Self::zero(statistics, dim);
        m.add_term(mi.indices, C64::new(sign as f64, 0.0));
        Ok(m)
    }

    /// Grade-1 element with the given coordinates.
    pub fn from_vector(statistics: Statistics, coords: &[C64]) -> Self {
        let mut m = Self::zero(statistics, coords.len());
        for (i, &c) in coords.iter().enumerate() {
            m.add_term(vec![i], c);
        }
        m
    }

    /// Product `v_1 v_2 … v_k` of grade-1 factors.
    pub fn from_factors(statistics: Statistics, dim: usize, factors: &[Vec<C64>]) -> Result<Self> {
        let mut acc = Self::vacuum(statistics, dim);
        for f in factors.iter().rev() {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: f.len(),
                });
            }
            acc = create(&Self::from_vector(statistics, f), &acc)?;
        }
        Ok(acc)
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic order of their index lists.
    pub fn terms(&self) -> impl Iterator<Item = (&[usize], C64)> + '_ {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn coefficient(&self, indices: &[usize]) -> C64 {
        self.terms.get(indices).copied().unwrap_or_default()
    }

    pub fn grades(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().map(Vec::len)
    }

    pub fn max_grade(&self) -> usize {
        self.grades().max().unwrap_or(0)
    }

    /// Component of the given grade.
    pub fn grade_part(&self, grade: usize) -> Self {
        Self {
            statistics: self.statistics,
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.len() == grade)
                .map(|(k, &c)| (k.clone(), c))
                .collect(),
        }
    }

    fn add_term(&mut self, key: Vec<usize>, c: C64) {
        if c.norm() < ZERO_THRESHOLD {
            return;
        }
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.norm() < ZERO_THRESHOLD {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.statistics != other.statistics {
            return Err(Error::StatisticsMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero(self.statistics, self.dim);
        for (k, &c) in &self.terms {
            out.add_term(k.clone(), c * s);
        }
        out
    }

    /// `k`-th power in the algebra (`vacuum` for `k = 0`).
    pub fn power(&self, k: usize) -> Self {
        let mut acc = Self::vacuum(self.statistics, self.dim);
        for _ in 0..k {
            acc = create(self, &acc).expect("same space");
        }
        acc
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Wick pairing `det` or `per` of `⟨w_i|v_j⟩`.
pub fn wick_pair(w: &[Vec<C64>], v: &[Vec<C64>], statistics: Statistics) -> Result<C64> {
    if w.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: v.len(),
        });
    }
    let k = w.len();
    if k == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let dim = w[0].len();
    if let Some(bad) = w.iter().chain(v).find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: bad.len(),
        });
    }
    let m = DenseOperator::from_fn(k, |i, j| dot(&w[i], &v[j]));
    match statistics {
        Statistics::Fermionic => Ok(determinant(&m)),
        Statistics::Bosonic => permanent(&m),
    }
}

/// Bilinear `Σ_i w_i v_i`.
pub fn dot(w: &[C64], v: &[C64]) -> C64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `⟨w^k|v^k⟩ = k!⟨w|v⟩^k` for bosonic grade-1 `w`, `v`.
pub fn power_pairing(w: &[C64], v: &[C64], k: usize) -> C64 {
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    dot(w, v).powu(k as u32) * fact
}

/// Pairing of two canonical monomials.
fn monomial_pairing(w: &[usize], v: &[usize], statistics: Statistics) -> f64 {
    if w != v {
        return 0.0;
    }
    match statistics {
        Statistics::Fermionic => 1.0,
        Statistics::Bosonic => multiplicities(w)
            .into_iter()
            .map(|m| (1..=m).map(|j| j as f64).product::<f64>())
            .product(),
    }
}

/// Bilinear pairing of `w ∈ ΛV*` (or `SV*`) with `v`.
pub fn pair_multivectors(w: &Multivector, v: &Multivector) -> Result<C64> {
    w.check_compatible(v)?;
    let mut total = C64::new(0.0, 0.0);
    for (kw, &cw) in &w.terms {
        if let Some(&cv) = v.terms.get(kw) {
            total += cw * cv * monomial_pairing(kw, kw, w.statistics);
        }
    }
    Ok(total)
}

/// Product of two canonical monomials with its reordering sign, `None` when
/// it vanishes.
pub fn multiply_monomials(a: &[usize], b: &[usize], statistics: Statistics) -> Option<(Vec<usize>, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut swaps = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            if statistics == Statistics::Fermionic && j < b.len() && a[i] == b[j] {
                return None;
            }
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining elements of a
            swaps += a.len() - i;
            out.push(b[j]);
            j += 1;
        }
    }
    let sign = match statistics {
        Statistics::Fermionic if swaps % 2 == 1 => -1.0,
        _ => 1.0,
    };
    Some((out, sign))
}

/// `C(v) x = v · x`.
pub fn create(v: &Multivector, x: &Multivector) -> Result<Multivector> {
    v.check_compatible(x)?;
    let mut out = Multivector::zero(x.statistics, x.dim);
    for (kv, &cv) in &v.terms {
        for (kx, &cx) in &x.terms {
            if let Some((key, sign)) = multiply_monomials(kv, kx, x.statistics) {
                out.add_term(key, cv * cx * sign);
            }
        }
    }
    Ok(out)
}

/// Removes one copy of `i` from a canonical monomial: the interior
/// derivative for fermions, `∂/∂x_i` for bosons.
fn derive(monomial: &[usize], i: usize, statistics: Statistics) -> Option<(Vec<usize>, f64)> {
    let pos = monomial.iter().position(|&x| x == i)?;
    let mut rest = monomial.to_vec();
    rest.remove(pos);
    let factor = match statistics {
        Statistics::Fermionic => {
            if pos % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        Statistics::Bosonic => monomial.iter().filter(|&&x| x == i).count() as f64,
    };
    Some((rest, factor))
}

/// `A(ẽ_W)` applied to a canonical monomial: derivations for `W[0]`,
/// `W[1]`, … in that order.
pub fn annihilate_monomial(w: &[usize], x: &[usize], statistics: Statistics) -> Option<(Vec<usize>, f64)> {
    let mut cur = x.to_vec();
    let mut coeff = 1.0;
    for &i in w {
        let (rest, f) = derive(&cur, i, statistics)?;
        cur = rest;
        coeff *= f;
    }
    Some((cur, coeff))
}

/// `A(w) x`, the transpose of left multiplication by `w` on the dual algebra:
/// `⟨y|A(w)x⟩ = ⟨w·y|x⟩`. Hence `A(w₁w₂) = A(w₂)A(w₁)`.
pub fn annihilate(w: &Multivector, x: &Multivector) -> Result<Multivector> {
    w.check_compatible(x)?;
    let mut out = Multivector::zero(x.statistics, x.dim);
    for (kw, &cw) in &w.terms {
        for (kx, &cx) in &x.terms {
            if let Some((key, f)) = annihilate_monomial(kw, kx, x.statistics) {
                out.add_term(key, cw * cx * f);
            }
        }
    }
    Ok(out)
}

/// `ρ̄ x`, applying `ρ` to every factor.
pub fn apply_induced(rho: &DenseOperator, x: &Multivector) -> Result<Multivector> {
    if rho.dim() != x.dim {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: x.dim,
        });
    }
    let images: Vec<Multivector> = (0..x.dim)
        .map(|j| Multivector::from_vector(x.statistics, &rho.column(j)))
        .collect();
    let mut out = Multivector::zero(x.statistics, x.dim);
    for (k, &c) in &x.terms {
        let mut acc = Multivector::vacuum(x.statistics, x.dim);
        for &j in k.iter().rev() {
            acc = create(&images[j], &acc)?;
        }
        out = out.add(&acc.scale(c))?;
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of `Λ^n V` or `S^n V` for `dim V = dim`.
pub fn graded_dimension(dim: usize, n: usize, statistics: Statistics) -> usize {
    match statistics {
        Statistics::Fermionic => binomial(dim, n),
        Statistics::Bosonic => {
            if dim == 0 {
                usize::from(n == 0)
            } else {
                binomial(dim + n - 1, n)
            }
        }
    }
}

fn graded_keys(dim: usize, n: usize, statistics: Statistics) -> Vec<Vec<usize>> {
    fn rec(dim: usize, n: usize, start: usize, strict: bool, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(dim, n, if strict { i + 1 } else { i }, strict, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(graded_dimension(dim, n, statistics));
    rec(
        dim,
        n,
        0,
        statistics == Statistics::Fermionic,
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// Lexicographically ordered canonical basis of grade `n`.
pub fn graded_basis(dim: usize, n: usize, statistics: Statistics) -> Vec<MultiIndex> {
    graded_keys(dim, n, statistics)
        .into_iter()
        .map(|indices| MultiIndex { indices, statistics })
        .collect()
}

/// One grade of the induced operator together with its basis. The matrix is
/// stored transposed so that columns `ρ̄ e_J` are contiguous.
#[derive(Debug, Clone)]
pub struct GradeBlock {
    pub grade: usize,
    pub basis: Vec<Vec<usize>>,
    pub index: HashMap<Vec<usize>, usize>,
    transposed: DenseOperator,
}

impl GradeBlock {
    /// Matrix element `⟨e_row|ρ̄ e_col⟩`.
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.transposed[(col, row)]
    }

    /// Coordinates of `ρ̄ e_col`.
    pub fn column(&self, col: usize) -> &[C64] {
        self.transposed.row(col)
    }

    pub fn matrix(&self) -> DenseOperator {
        self.transposed.transpose()
    }

    pub fn trace(&self) -> C64 {
        self.transposed.trace()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coefficient vector of the grade-`grade` part of `x` in this basis.
    pub fn coordinates(&self, x: &Multivector) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.basis.len()];
        for (k, c) in x.terms() {
            if let Some(&i) = self.index.get(k) {
                out[i] = c;
            }
        }
        out
    }
}

/// Iterator over the grade blocks of `ρ̄`, grade 0 upward. Each block is
/// built from the previous one via `ρ̄(e_j e_J) = ρ(e_j) · ρ̄(e_J)`.
pub struct InducedBlocks<'a> {
    rho: &'a DenseOperator,
    statistics: Statistics,
    prev: Option<Rc<GradeBlock>>,
}

impl<'a> InducedBlocks<'a> {
    pub fn new(rho: &'a DenseOperator, statistics: Statistics) -> Self {
        Self {
            rho,
            statistics,
            prev: None,
        }
    }
}

impl Iterator for InducedBlocks<'_> {
    type Item = Rc<GradeBlock>;

    fn next(&mut self) -> Option<Rc<GradeBlock>> {
        let dim = self.rho.dim();
        let next = match self.prev.take() {
            None => GradeBlock {
                grade: 0,
                basis: vec![Vec::new()],
                index: HashMap::from([(Vec::new(), 0)]),
                transposed: DenseOperator::identity(1),
            },
            Some(prev) => {
                let n = prev.grade + 1;
                if self.statistics == Statistics::Fermionic && n > dim {
                    return None;
                }
                next_block(self.rho, self.statistics, &prev, n)
            }
        };
        let next = Rc::new(next);
        self.prev = Some(Rc::clone(&next));
        Some(next)
    }
}

fn next_block(rho: &DenseOperator, statistics: Statistics, prev: &GradeBlock, n: usize) -> GradeBlock {
    const NONE: u32 = u32::MAX;
    let dim = rho.dim();
    let basis = graded_keys(dim, n, statistics);
    let index: HashMap<Vec<usize>, usize> = basis.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    // insertion table: e_i · e_K = sign · e_target for K in the previous basis
    let mut table = vec![(NONE, 0.0f64); prev.basis.len() * dim];
    for (kidx, k) in prev.basis.iter().enumerate() {
        for i in 0..dim {
            let pos = k.partition_point(|&x| x < i);
            if statistics == Statistics::Fermionic && k.get(pos) == Some(&i) {
                continue;
            }
            let mut key = k.clone();
            key.insert(pos, i);
            let sign = match statistics {
                Statistics::Fermionic if pos % 2 == 1 => -1.0,
                _ => 1.0,
            };
            table[kidx * dim + i] = (index[&key] as u32, sign);
        }
    }
    let size = basis.len();
    let mut transposed = DenseOperator::zeros(size);
    let mut column = vec![C64::new(0.0, 0.0); size];
    for (col, key) in basis.iter().enumerate() {
        let j = key[0];
        let source = prev.column(prev.index[&key[1..]]);
        let rho_col: Vec<C64> = (0..dim).map(|i| rho[(i, j)]).collect();
        column.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (kidx, &c) in source.iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let row = &table[kidx * dim..(kidx + 1) * dim];
            for (&(target, sign), &r) in row.iter().zip(&rho_col) {
                if target != NONE {
                    column[target as usize] += r * c * sign;
                }
            }
        }
        transposed.row_mut(col).copy_from_slice(&column);
    }
    GradeBlock {
        grade: n,
        basis,
        index,
        transposed,
    }
}

/// Matrix of `ρ̄` on grade `n` in the lexicographic basis; the 0×0 operator
/// when a fermionic grade exceeds `dim`.
pub fn induce(rho: &DenseOperator, n: usize, statistics: Statistics) -> DenseOperator {
    InducedBlocks::new(rho, statistics)
        .nth(n)
        .map(|b| b.matrix())
        .unwrap_or_else(|| DenseOperator::zeros(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: Statistics = Statistics::Fermionic;
    const B: Statistics = Statistics::Bosonic;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn mono(s: Statistics, dim: usize, idx: &[usize]) -> Multivector {
        Multivector::monomial(s, dim, idx).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        let (m, s) = canonicalize(&[1, 0], F, 3).unwrap();
        assert_eq!((m.indices(), s), (&[0, 1][..], -1));
        assert_eq!(canonicalize(&[0, 0], F, 3).unwrap().1, 0);
        let (m, s) = canonicalize(&[1, 0, 0], B, 3).unwrap();
        assert_eq!((m.indices(), s), (&[0, 0, 1][..], 1));
        assert!(matches!(
            canonicalize(&[3], F, 3),
            Err(Error::IndexOutOfRange { index: 3, dim: 3 })
        ));
    }

    #[test]
    fn wick_pair_examples() {
        let e1 = vec![c(1.0), c(0.0)];
        let e2 = vec![c(0.0), c(1.0)];
        let w = [e1.clone(), e2.clone()];
        assert_eq!(wick_pair(&w, &[e1.clone(), e2.clone()], F).unwrap(), c(1.0));
        assert_eq!(wick_pair(&w, &[e2.clone(), e1.clone()], F).unwrap(), c(-1.0));
        assert_eq!(wick_pair(&[], &[], B).unwrap(), c(1.0));
        assert!(wick_pair(&w, &[e1], F).is_err());
    }

    #[test]
    fn bosonic_power_pairing() {
        let w = vec![c(0.3), c(-1.1)];
        let v = vec![c(2.0), c(0.7)];
        for k in 0..6 {
            let ws = vec![w.clone(); k];
            let vs = vec![v.clone(); k];
            let direct = wick_pair(&ws, &vs, B).unwrap();
            assert!((direct - power_pairing(&w, &v, k)).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn pairing_grade_orthogonality() {
        let vac = Multivector::vacuum(F, 2);
        assert_eq!(pair_multivectors(&vac, &vac).unwrap(), c(1.0));
        assert_eq!(
            pair_multivectors(&mono(F, 2, &[0]), &mono(F, 2, &[0, 1])).unwrap(),
            c(0.0)
        );
        assert!(pair_multivectors(&mono(F, 2, &[0]), &mono(B, 2, &[0])).is_err());
    }

    #[test]
    fn creation_examples() {
        let vac = Multivector::vacuum(F, 2);
        let e1 = mono(F, 2, &[0]);
        let e2 = mono(F, 2, &[1]);
        assert_eq!(create(&e1, &vac).unwrap(), e1);
        assert!(create(&e1, &e1).unwrap().is_zero());
        let sum = create(&e1, &e2).unwrap().add(&create(&e2, &e1).unwrap()).unwrap();
        assert!(sum.is_zero());
    }

    #[test]
    fn annihilation_examples() {
        let e12 = mono(F, 2, &[0, 1]);
        assert_eq!(annihilate(&mono(F, 2, &[0]), &e12).unwrap(), mono(F, 2, &[1]));
        assert_eq!(
            annihilate(&mono(F, 2, &[1]), &e12).unwrap(),
            mono(F, 2, &[0]).scale(c(-1.0))
        );
        let x2 = mono(B, 1, &[0, 0]);
        assert_eq!(
            annihilate(&mono(B, 1, &[0]), &x2).unwrap(),
            mono(B, 1, &[0]).scale(c(2.0))
        );
    }

    #[test]
    fn graded_basis_examples() {
        let keys = |d, n, s| -> Vec<Vec<usize>> {
            graded_basis(d, n, s)
                .into_iter()
                .map(|m| m.indices().to_vec())
                .collect()
        };
        assert_eq!(keys(2, 2, F), vec![vec![0, 1]]);
        assert_eq!(keys(2, 2, B), vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
        assert_eq!(graded_basis(4, 3, F).len(), 4);
        assert_eq!(graded_dimension(3, 5, B), 21);
    }

    #[test]
    fn induce_examples() {
        let rho = DenseOperator::from_real_rows(&[vec![0.2, -1.0], vec![0.5, 0.3]]).unwrap();
        assert_eq!(induce(&rho, 0, B), DenseOperator::identity(1));
        assert_eq!(induce(&rho, 1, F), rho);
        let d = DenseOperator::diagonal(&[c(2.0), c(3.0)]);
        assert_eq!(induce(&d, 2, B), DenseOperator::diagonal(&[c(4.0), c(6.0), c(9.0)]));
        assert_eq!(induce(&d, 3, F).dim(), 0);
        let det = induce(&rho, 2, F)[(0, 0)];
        assert!((det - determinant(&rho)).norm() < 1e-15);
    }

    #[test]
    fn induced_block_matches_apply_induced() {
        let rho = DenseOperator::from_fn(3, |i, j| {
            C64::new(0.1 * (i as f64) - 0.3 * j as f64, 0.2 + 0.05 * (i * j) as f64)
        });
        for s in Statistics::ALL {
            let block = InducedBlocks::new(&rho, s).nth(2).unwrap();
            for (col, key) in block.basis.iter().enumerate() {
                let image = apply_induced(&rho, &mono(s, 3, key)).unwrap();
                let coords = block.coordinates(&image);
                for (row, &val) in coords.iter().enumerate() {
                    assert!((block.entry(row, col) - val).norm() < 1e-14);
                }
            }
        }
    }
}
