//! Dense complex linear algebra: LU determinant, Ryser permanent, resolvent
//! solves, power traces and the partition sums turning power traces into
//! elementary or complete symmetric functions.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Statistics;
use crate::C64;

/// Largest matrix size accepted by [`permanent`].
pub const PERMANENT_CAP: usize = 20;

/// Resolvent solves are rejected above this condition estimate; with double
/// precision it bounds the relative error near 1e-6.
pub const CONDITION_CAP: f64 = 4.5e9;

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseOperator {
    dim: usize,
    entries: Vec<C64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let entries = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        Self { dim, entries }
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
            entries.extend(row);
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSpec("non-finite matrix entry".into()));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Covector times matrix: `(wᵀ M)_j = Σ_i w_i M_ij`.
    pub fn vecmat(&self, w: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, w.len());
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (i, &wi) in w.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += wi * m;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Submatrix with the given row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: cols.len(),
            });
        }
        Ok(Self::from_fn(rows.len(), |i, j| self[(rows[i], cols[j])]))
    }

    /// Upper estimate of the spectral radius from `‖ρ^(2^k)‖_F^(1/2^k)`.
    pub fn spectral_radius_estimate(&self) -> f64 {
        let mut m = self.clone();
        let mut log_scale = 0.0_f64;
        let mut power = 1.0_f64;
        let mut best = self.frobenius_norm();
        for _ in 0..7 {
            let norm = m.frobenius_norm();
            if norm == 0.0 {
                return 0.0;
            }
            m = m.scale(C64::new(1.0 / norm, 0.0));
            log_scale += norm.ln();
            m = m.matmul(&m);
            log_scale *= 2.0;
            power *= 2.0;
            let est = ((log_scale + m.frobenius_norm().max(f64::MIN_POSITIVE).ln()) / power).exp();
            best = best.min(est);
        }
        best
    }
}

impl Index<(usize, usize)> for DenseOperator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for DenseOperator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.dim + j]
    }
}

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseOperator,
    perm: Vec<usize>,
    parity: f64,
    singular: bool,
}

impl Lu {
    pub fn new(m: &DenseOperator) -> Self {
        let n = m.dim();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| lu[(a, k)].norm().total_cmp(&lu[(b, k)].norm()))
                .unwrap_or(k);
            if lu[(p, k)].norm() == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                parity = -parity;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Self {
            lu,
            perm,
            parity,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> C64 {
        if self.singular {
            return C64::new(0.0, 0.0);
        }
        (0..self.lu.dim())
            .map(|i| self.lu[(i, i)])
            .fold(C64::new(self.parity, 0.0), |acc, d| acc * d)
    }

    /// Solves `M x = b`; `None` when a pivot vanished exactly.
    pub fn solve(&self, b: &[C64]) -> Option<Vec<C64>> {
        if self.singular {
            return None;
        }
        let n = self.lu.dim();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<DenseOperator> {
        let n = self.lu.dim();
        let mut inv = DenseOperator::zeros(n);
        for j in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            let col = self.solve(&e)?;
            for (i, c) in col.into_iter().enumerate() {
                inv[(i, j)] = c;
            }
        }
        Some(inv)
    }
}

pub fn determinant(m: &DenseOperator) -> C64 {
    Lu::new(m).determinant()
}

/// Permanent by Ryser's inclusion-exclusion with Gray-code subset order.
pub fn permanent(m: &DenseOperator) -> Result<C64> {
    let n = m.dim();
    if n > PERMANENT_CAP {
        return Err(Error::PermanentTooLarge {
            size: n,
            cap: PERMANENT_CAP,
        });
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for step in 1u64..(1u64 << n) {
        let next = step ^ (step >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let sign = if next & (1 << col) != 0 { 1.0 } else { -1.0 };
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += m[(i, col)] * sign;
        }
        gray = next;
        let prod = row_sums.iter().fold(C64::new(1.0, 0.0), |a, &b| a * b);
        if gray.count_ones() % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

/// Which resolvent `(1 ± ρ)` to solve with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    /// `+` for fermions, `−` for bosons.
    pub fn for_statistics(s: Statistics) -> Self {
        match s {
            Statistics::Fermionic => Sign::Plus,
            Statistics::Bosonic => Sign::Minus,
        }
    }
}

/// `1 ± ρ`.
pub fn shifted_identity(rho: &DenseOperator, sign: Sign) -> DenseOperator {
    DenseOperator::identity(rho.dim()).add_scaled(rho, C64::new(sign.as_f64(), 0.0))
}

/// Factorization of `1 ± ρ` that passed the condition guard.
#[derive(Debug, Clone)]
pub struct Resolvent {
    lu: Lu,
    inverse: DenseOperator,
}

impl Resolvent {
    pub fn new(rho: &DenseOperator, sign: Sign) -> Result<Self> {
        let m = shifted_identity(rho, sign);
        let lu = Lu::new(&m);
        let singular = Error::SingularResolvent {
            sign: sign.symbol(),
            condition: f64::INFINITY,
        };
        let inverse = lu.inverse().ok_or(singular.clone())?;
        let condition = m.inf_norm() * inverse.inf_norm();
        if !condition.is_finite() || condition > CONDITION_CAP {
            return Err(Error::SingularResolvent {
                sign: sign.symbol(),
                condition,
            });
        }
        Ok(Self { lu, inverse })
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.lu.solve(v).expect("factorization checked at construction")
    }

    pub fn inverse(&self) -> &DenseOperator {
        &self.inverse
    }
}

/// Solves `(1 ± ρ) x = v`.
pub fn resolvent_apply(rho: &DenseOperator, sign: Sign, v: &[C64]) -> Result<Vec<C64>> {
    if v.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: v.len(),
        });
    }
    Ok(Resolvent::new(rho, sign)?.apply(v))
}

/// Classical adjugate, `adj(M) M = det(M) 1`, by cofactors.
pub fn adjugate(m: &DenseOperator) -> DenseOperator {
    let n = m.dim();
    if n == 1 {
        return DenseOperator::identity(1);
    }
    DenseOperator::from_fn(n, |i, j| {
        let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
        let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
        let minor = m.select(&rows, &cols).expect("equal lengths");
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        determinant(&minor) * sign
    })
}

/// `p_l = Tr ρ^l` for `l = 1..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTraces(Vec<C64>);

impl PowerTraces {
    pub fn from_values(values: Vec<C64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `p_l`, 1-based.
    pub fn get(&self, l: usize) -> C64 {
        self.0[l - 1]
    }

    pub fn values(&self) -> &[C64] {
        &self.0
    }
}

pub fn power_traces(rho: &DenseOperator, len: usize) -> PowerTraces {
    let mut out = Vec::with_capacity(len);
    let mut power = rho.clone();
    for l in 1..=len {
        out.push(power.trace());
        if l < len {
            power = power.matmul(rho);
        }
    }
    PowerTraces(out)
}

/// Calls `f` with every multiplicity vector `m` (`m[j-1] = n_j`) satisfying
/// `Σ j n_j = n`.
pub fn for_each_partition(n: usize, mut f: impl FnMut(&[usize])) {
    fn rec(rest: usize, part: usize, mult: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if part == 0 {
            if rest == 0 {
                f(mult);
            }
            return;
        }
        for k in 0..=rest / part {
            mult[part - 1] = k;
            rec(rest - k * part, part - 1, mult, f);
        }
        mult[part - 1] = 0;
    }
    let mut mult = vec![0; n];
    rec(n, n, &mut mult, &mut f);
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn cycle_index(p: &PowerTraces, n: usize, statistics: Statistics) -> Result<C64> {
    if p.len() < n {
        return Err(Error::InsufficientPowerTraces {
            needed: n,
            available: p.len(),
        });
    }
    let mut total = C64::new(0.0, 0.0);
    for_each_partition(n, |mult| {
        let mut weight = 1.0;
        let mut sign_exp = 0;
        let mut term = C64::new(1.0, 0.0);
        for (idx, &k) in mult.iter().enumerate() {
            let l = idx + 1;
            if k == 0 {
                continue;
            }
            weight /= factorial(k) * (l as f64).powi(k as i32);
            sign_exp += (l - 1) * k;
            term *= p.get(l).powu(k as u32);
        }
        if statistics == Statistics::Fermionic && sign_exp % 2 == 1 {
            weight = -weight;
        }
        total += term * weight;
    });
    Ok(total)
}

/// `e_n` of the eigenvalues, from power traces.
pub fn elementary_from_power(p: &PowerTraces, n: usize) -> Result<C64> {
    cycle_index(p, n, Statistics::Fermionic)
}

/// `h_n` of the eigenvalues, from power traces.
pub fn complete_from_power(p: &PowerTraces, n: usize) -> Result<C64> {
    cycle_index(p, n, Statistics::Bosonic)
}

/// Dispatches to [`elementary_from_power`] or [`complete_from_power`].
pub fn symmetric_from_power(p: &PowerTraces, n: usize, statistics: Statistics) -> Result<C64> {
    cycle_index(p, n, statistics)
}

/// `[e_0, …, e_n]` (fermionic) or `[h_0, …, h_n]` (bosonic) by the Newton
/// recursion `r·x_r = Σ_{i=1}^{r} (±1)^{i−1} p_i x_{r−i}`.
pub fn symmetric_sequence(p: &PowerTraces, n: usize, statistics: Statistics) -> Result<Vec<C64>> {
    if p.len() < n {
        return Err(Error::InsufficientPowerTraces {
            needed: n,
            available: p.len(),
        });
    }
    let mut out = vec![C64::new(1.0, 0.0)];
    for r in 1..=n {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..=r {
            let term = p.get(i) * out[r - i];
            if statistics == Statistics::Fermionic && i % 2 == 0 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        out.push(acc / r as f64);
    }
    Ok(out)
}
