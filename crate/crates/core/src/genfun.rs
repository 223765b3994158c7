//! Finite-dimensional generating-function calculus. An operator `A` on `ℂ^N`
//! is encoded as the Laurent kernel `Ã(x, y) = Σ A_ij y^j x^{−i−1}`; formal
//! integration extracts the coefficient of `x^{−1}`, so composition, traces
//! and the reproducing kernel reduce to coefficient bookkeeping.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::Statistics;
use crate::linalg::{DenseOperator, Lu};
use crate::C64;

/// Largest `n` and `N` accepted by [`graded_residue_trace`].
pub const GRADED_RESIDUE_CAP: (usize, usize) = (3, 4);

fn is_zero(z: C64) -> bool {
    z.re == 0.0 && z.im == 0.0
}

/// Finite Laurent polynomial in one variable.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i32, C64>,
}

impl LaurentPoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i32, C64)>) -> Self {
        let mut p = Self::new();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// `Σ_{i<len} c_i x^i`.
    pub fn polynomial(coeffs: &[C64]) -> Self {
        Self::from_terms(coeffs.iter().enumerate().map(|(i, &c)| (i as i32, c)))
    }

    pub fn add_term(&mut self, exponent: i32, c: C64) {
        let entry = self.coeffs.entry(exponent).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if is_zero(*entry) {
            self.coeffs.remove(&exponent);
        }
    }

    pub fn coefficient(&self, exponent: i32) -> C64 {
        self.coeffs.get(&exponent).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.coeffs.iter().map(|(&e, &c)| (e, c))
    }

    /// `(lowest, highest)` exponent, `None` when zero.
    pub fn exponent_range(&self) -> Option<(i32, i32)> {
        Some((*self.coeffs.keys().next()?, *self.coeffs.keys().next_back()?))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for (e1, c1) in self.terms() {
            for (e2, c2) in other.terms() {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

/// `∫ F(x) dx`: the coefficient of `x^{−1}`.
pub fn formal_integral(f: &LaurentPoly) -> C64 {
    f.coefficient(-1)
}

/// Laurent kernel in `(x, y)`, keyed by `(x exponent, y exponent)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaurentKernel {
    dim: usize,
    coeffs: BTreeMap<(i32, i32), C64>,
}

impl LaurentKernel {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, x_exp: i32, y_exp: i32, c: C64) {
        let entry = self.coeffs.entry((x_exp, y_exp)).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if is_zero(*entry) {
            self.coeffs.remove(&(x_exp, y_exp));
        }
    }

    pub fn coefficient(&self, x_exp: i32, y_exp: i32) -> C64 {
        self.coeffs.get(&(x_exp, y_exp)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i32, i32), C64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    /// `K(x, x)`.
    pub fn diagonal(&self) -> LaurentPoly {
        LaurentPoly::from_terms(self.terms().map(|((a, b), c)| (a + b, c)))
    }

    /// `∫ K(x, u) P(u) du` as a polynomial in `x`.
    pub fn apply(&self, p: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::new();
        for ((ex, ey), c) in self.terms() {
            let residue = p.coefficient(-1 - ey);
            if !is_zero(residue) {
                out.add_term(ex, c * residue);
            }
        }
        out
    }

    /// `∫ P(u) K(u, v) du` as a polynomial in `v`.
    pub fn integrate_first(&self, p: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::new();
        for ((ex, ey), c) in self.terms() {
            let residue = p.coefficient(-1 - ex);
            if !is_zero(residue) {
                out.add_term(ey, c * residue);
            }
        }
        out
    }
}

/// `Ã(x, y) = Σ A_ij y^j x^{−i−1}`.
pub fn kernel_of(a: &DenseOperator) -> LaurentKernel {
    let mut k = LaurentKernel::zero(a.dim());
    for i in 0..a.dim() {
        for (j, &c) in a.row(i).iter().enumerate() {
            k.add_term(-(i as i32) - 1, j as i32, c);
        }
    }
    k
}

/// Inverse of [`kernel_of`]; fails on terms outside the `N × N` window.
pub fn operator_of(k: &LaurentKernel) -> Result<DenseOperator> {
    let n = k.dim();
    let mut a = DenseOperator::zeros(n);
    for ((ex, ey), c) in k.terms() {
        let i = -1 - ex;
        if i < 0 || i as usize >= n || ey < 0 || ey as usize >= n {
            return Err(Error::InvalidSpec(format!(
                "term x^{ex} y^{ey} lies outside the {n}×{n} window"
            )));
        }
        a[(i as usize, ey as usize)] = c;
    }
    Ok(a)
}

/// `C(x, y) = ∫ Ã(x, z) B̃(z, y) dz`, the kernel of `A·B`.
pub fn compose_kernels(a: &LaurentKernel, b: &LaurentKernel) -> Result<LaurentKernel> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut by_z: BTreeMap<i32, Vec<(i32, C64)>> = BTreeMap::new();
    for ((ez, ey), c) in b.terms() {
        by_z.entry(ez).or_default().push((ey, c));
    }
    let mut out = LaurentKernel::zero(a.dim());
    for ((ex, ez), ca) in a.terms() {
        if let Some(row) = by_z.get(&(-1 - ez)) {
            for &(ey, cb) in row {
                out.add_term(ex, ey, ca * cb);
            }
        }
    }
    Ok(out)
}

/// `Tr A = ∫ Ã(x, x) dx`.
pub fn residue_trace(a: &DenseOperator) -> C64 {
    formal_integral(&kernel_of(a).diagonal())
}

/// `d(x, y) = (1/x) Σ_{i<N} (y/x)^i`, the kernel of the identity.
pub fn d_tensor(n: usize) -> LaurentKernel {
    let mut k = LaurentKernel::zero(n);
    for i in 0..n as i32 {
        k.add_term(-i - 1, i, C64::new(1.0, 0.0));
    }
    k
}

/// `∫ d(u, v) P(u) du` as a polynomial in `v`. Equals `P` exactly when `P`
/// is a polynomial of degree `< N`; higher and negative powers are dropped.
pub fn reproduce(n: usize, p: &LaurentPoly) -> LaurentPoly {
    d_tensor(n).integrate_first(p)
}

/// Vectors `v_0..v_{N−1}` and covectors `w_1..w_N` with generating series
/// `α(y) = Σ v_i y^i` and `β(x) = Σ w_j x^{−j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingBasis {
    pub vectors: Vec<Vec<C64>>,
    pub covectors: Vec<Vec<C64>>,
}

impl GeneratingBasis {
    pub fn new(vectors: Vec<Vec<C64>>, covectors: Vec<Vec<C64>>) -> Result<Self> {
        let n = vectors.len();
        if covectors.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: covectors.len(),
            });
        }
        if let Some(bad) = vectors.iter().chain(&covectors).find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                left: n,
                right: bad.len(),
            });
        }
        Ok(Self { vectors, covectors })
    }

    /// Standard basis and its dual; the Gram kernel is `d(x, y)`.
    pub fn standard(n: usize) -> Self {
        let e = |i: usize| {
            (0..n)
                .map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect::<Vec<_>>()
        };
        Self {
            vectors: (0..n).map(e).collect(),
            covectors: (0..n).map(e).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// `⟨β(x)|B α(y)⟩ = Σ ⟨w_{a+1}|B v_b⟩ x^{−a−1} y^b`.
    pub fn sandwich(&self, b: &DenseOperator) -> LaurentKernel {
        let n = self.dim();
        let mut k = LaurentKernel::zero(n);
        for (a, w) in self.covectors.iter().enumerate() {
            for (bi, v) in self.vectors.iter().enumerate() {
                k.add_term(-(a as i32) - 1, bi as i32, crate::fock::dot(w, &b.matvec(v)));
            }
        }
        k
    }

    /// Gram kernel `g(x, y) = ⟨β(x)|α(y)⟩`.
    pub fn gram_kernel(&self) -> LaurentKernel {
        self.sandwich(&DenseOperator::identity(self.dim()))
    }
}

/// `Tr A = ∫ (g^{−1} ∘ h)(x, x) dx` with `h(x, y) = ⟨β(x)|Aα(y)⟩` and `g^{−1}`
/// the kernel of the inverse Gram coefficient matrix.
pub fn gram_inverse_trace(a: &DenseOperator, basis: &GeneratingBasis) -> Result<C64> {
    if a.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: basis.dim(),
        });
    }
    let g = operator_of(&basis.gram_kernel())?;
    let lu = Lu::new(&g);
    let g_inv = lu.inverse().ok_or(Error::VanishingDeterminant {
        value: lu.determinant().norm(),
    })?;
    let composed = compose_kernels(&kernel_of(&g_inv), &basis.sandwich(a))?;
    Ok(formal_integral(&composed.diagonal()))
}

/// Laurent polynomial in several variables.
#[derive(Debug, Clone, PartialEq)]
struct MultiLaurent {
    coeffs: BTreeMap<Vec<i32>, C64>,
}

impl MultiLaurent {
    fn one(vars: usize) -> Self {
        Self {
            coeffs: BTreeMap::from([(vec![0; vars], C64::new(1.0, 0.0))]),
        }
    }

    /// Multiplies by `K(x_i, x_j)`.
    fn times_kernel(&self, k: &LaurentKernel, i: usize, j: usize) -> Self {
        let mut coeffs: BTreeMap<Vec<i32>, C64> = BTreeMap::new();
        for (exps, &c) in &self.coeffs {
            for ((ex, ey), ck) in k.terms() {
                let mut e = exps.clone();
                e[i] += ex;
                e[j] += ey;
                *coeffs.entry(e).or_default() += c * ck;
            }
        }
        coeffs.retain(|_, c| !is_zero(*c));
        Self { coeffs }
    }

    /// Coefficient of `Π x_i^{−1}`.
    fn residue(&self, vars: usize) -> C64 {
        self.coeffs.get(&vec![-1; vars]).copied().unwrap_or_default()
    }
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            out.push((prefix.clone(), sign));
            return;
        }
        for j in 0..n {
            if used[j] {
                continue;
            }
            // inversions contributed by placing j after the current prefix
            let inv = prefix.iter().filter(|&&p| p > j).count();
            used[j] = true;
            prefix.push(j);
            rec(prefix, used, if inv % 2 == 1 { -sign } else { sign }, out);
            prefix.pop();
            used[j] = false;
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], 1.0, &mut out);
    out
}

/// `(1/n!) ∫…∫ ⟨β(x_1)…β(x_n)|Ā α(x_1)…α(x_n)⟩`, the pairing of products
/// being `det` or `per` of `Ã(x_i, x_j)`.
pub fn graded_residue_trace(a: &DenseOperator, n: usize, statistics: Statistics) -> Result<C64> {
    let (n_cap, dim_cap) = GRADED_RESIDUE_CAP;
    if n > n_cap || a.dim() > dim_cap {
        return Err(Error::InvalidSpec(format!(
            "graded residue traces are limited to n ≤ {n_cap}, N ≤ {dim_cap}"
        )));
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let k = kernel_of(a);
    let mut total = C64::new(0.0, 0.0);
    for (sigma, sign) in permutations(n) {
        let mut prod = MultiLaurent::one(n);
        for (i, &s) in sigma.iter().enumerate() {
            prod = prod.times_kernel(&k, i, s);
        }
        let weight = match statistics {
            Statistics::Fermionic => sign,
            Statistics::Bosonic => 1.0,
        };
        total += prod.residue(n) * weight;
    }
    let fact: f64 = (1..=n).map(|j| j as f64).product();
    Ok(total / fact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::determinant;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn formal_integral_examples() {
        assert_eq!(formal_integral(&LaurentPoly::from_terms([(-1, c(1.0))])), c(1.0));
        assert_eq!(formal_integral(&LaurentPoly::from_terms([(2, c(1.0))])), c(0.0));
        assert_eq!(
            formal_integral(&LaurentPoly::from_terms([(-1, c(3.0)), (-2, c(5.0))])),
            c(3.0)
        );
    }

    #[test]
    fn identity_kernel_is_d() {
        assert_eq!(kernel_of(&DenseOperator::identity(2)), d_tensor(2));
        assert_eq!(residue_trace(&DenseOperator::identity(3)), c(3.0));
        let shift = DenseOperator::from_real_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]]).unwrap();
        assert_eq!(residue_trace(&shift), c(0.0));
    }

    #[test]
    fn reproducing_window() {
        let p = LaurentPoly::polynomial(&[c(0.0), c(1.0)]);
        assert_eq!(reproduce(2, &p), p);
        assert_eq!(
            reproduce(3, &LaurentPoly::polynomial(&[c(4.0)])),
            LaurentPoly::polynomial(&[c(4.0)])
        );
        let cubic = LaurentPoly::polynomial(&[c(1.0), c(0.0), c(0.0), c(2.0)]);
        assert_ne!(reproduce(2, &cubic), cubic);
        assert_eq!(reproduce(2, &cubic), LaurentPoly::polynomial(&[c(1.0)]));
    }

    #[test]
    fn operator_of_rejects_out_of_window_terms() {
        let mut k = LaurentKernel::zero(2);
        k.add_term(1, 0, c(1.0));
        assert!(operator_of(&k).is_err());
    }

    #[test]
    fn small_graded_residues() {
        let a = DenseOperator::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(graded_residue_trace(&a, 1, Statistics::Bosonic).unwrap(), c(5.0));
        assert!((graded_residue_trace(&a, 2, Statistics::Fermionic).unwrap() - determinant(&a)).norm() < 1e-14);
        // S²: a11² + a11 a22 + a22² + a12 a21
        assert!((graded_residue_trace(&a, 2, Statistics::Bosonic).unwrap() - c(1.0 + 4.0 + 16.0 + 6.0)).norm() < 1e-14);
        assert!(graded_residue_trace(&DenseOperator::identity(5), 2, Statistics::Bosonic).is_err());
    }

    #[test]
    fn gram_scaling_leaves_trace() {
        let a = DenseOperator::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut basis = GeneratingBasis::standard(2);
        assert_eq!(gram_inverse_trace(&a, &basis).unwrap(), c(5.0));
        for w in &mut basis.covectors {
            for x in w.iter_mut() {
                *x *= 2.0;
            }
        }
        assert!((gram_inverse_trace(&a, &basis).unwrap() - c(5.0)).norm() < 1e-14);
    }
}
