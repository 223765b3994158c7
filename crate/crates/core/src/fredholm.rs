//! Second-kind Fredholm equations on `[a, b]`: determinant and minor series,
//! their permanent analogues, series solutions and a dense Nyström baseline.
//!
//! With Gauss-Legendre nodes `ξ_i`, weights `μ_i` and `M_ij = K(ξ_i, ξ_j) μ_j`,
//! the order-`n` determinant term `(1/n!) Σ_tuples Π μ · det K` equals the
//! elementary symmetric function `e_n` of the eigenvalues of `M`, and the
//! permanent term equals `h_n`. Both come from power traces of `M`. Bordered
//! terms use `d = K(s,t)`, `b_k = K(s, ξ_k) μ_k`, `c_k = K(ξ_k, t)`:
//!
//! * minor:      `d·e_n − Σ_{j<n} (−1)^j e_{n−1−j} · b M^j c`
//! * permanent:  `d·h_n + Σ_{j<n} h_{n−1−j} · b M^j c`

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Statistics;
use crate::linalg::{power_traces, symmetric_sequence, DenseOperator, Lu, PERMANENT_CAP};
use crate::quadrature::QuadratureRule;
use crate::C64;

/// Default series order for the determinant and minor.
pub const DEFAULT_DET_ORDER: usize = 10;
/// Default series order for the permanent and its minor.
pub const DEFAULT_PERM_ORDER: usize = 8;
/// `|D|` below this is treated as a vanishing determinant.
pub const VANISHING_DETERMINANT: f64 = 1e-12;

/// `Σ coeff · x^px · y^py`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableTerm {
    pub coeff: f64,
    pub px: u32,
    pub py: u32,
}

/// Kernel registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum KernelKind {
    Zero,
    /// `c·x·y`
    Product {
        c: f64,
    },
    /// `amp·exp(−α(x−y)²)`
    Gaussian {
        amp: f64,
        alpha: f64,
    },
    /// `amp·cos(freq·(x−y))`, rank two
    Cosine {
        amp: f64,
        freq: f64,
    },
    Separable {
        terms: Vec<SeparableTerm>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub a: f64,
    pub b: f64,
    pub kind: KernelKind,
}

impl KernelSpec {
    pub fn new(a: f64, b: f64, kind: KernelKind) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidSpec(format!("kernel domain [{a}, {b}]")));
        }
        let finite = match &kind {
            KernelKind::Zero => true,
            KernelKind::Product { c } => c.is_finite(),
            KernelKind::Gaussian { amp, alpha } => amp.is_finite() && alpha.is_finite(),
            KernelKind::Cosine { amp, freq } => amp.is_finite() && freq.is_finite(),
            KernelKind::Separable { terms } => terms.iter().all(|t| t.coeff.is_finite()),
        };
        if !finite {
            return Err(Error::InvalidSpec("non-finite kernel parameter".into()));
        }
        Ok(Self { a, b, kind })
    }

    /// Kernel on `[0, 1]`.
    pub fn unit(kind: KernelKind) -> Self {
        Self::new(0.0, 1.0, kind).expect("valid domain")
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            KernelKind::Zero => 0.0,
            KernelKind::Product { c } => c * x * y,
            KernelKind::Gaussian { amp, alpha } => amp * (-alpha * (x - y).powi(2)).exp(),
            KernelKind::Cosine { amp, freq } => amp * (freq * (x - y)).cos(),
            KernelKind::Separable { terms } => terms
                .iter()
                .map(|t| t.coeff * x.powi(t.px as i32) * y.powi(t.py as i32))
                .sum(),
        }
    }

    /// Upper bound for `|K|` on the domain, for the Hadamard estimate.
    pub fn sup_bound(&self) -> f64 {
        let r = self.a.abs().max(self.b.abs());
        match &self.kind {
            KernelKind::Zero => 0.0,
            KernelKind::Product { c } => c.abs() * r * r,
            KernelKind::Gaussian { amp, alpha } => {
                if *alpha >= 0.0 {
                    amp.abs()
                } else {
                    amp.abs() * (-alpha * (self.b - self.a).powi(2)).exp()
                }
            }
            KernelKind::Cosine { amp, .. } => amp.abs(),
            KernelKind::Separable { terms } => terms
                .iter()
                .map(|t| t.coeff.abs() * r.powi(t.px as i32) * r.powi(t.py as i32))
                .sum(),
        }
    }
}

fn parse_params(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got `{p}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad number `{v}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// `name[:key=value,...]`, e.g. `product:c=0.5`, `gaussian:amp=1,alpha=2,a=0,b=1`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let params = parse_params(rest)?;
        let get = |key: &str, default: f64| params.iter().find(|(k, _)| k == key).map_or(default, |(_, v)| *v);
        let known: &[&str] = match name {
            "zero" => &["a", "b"],
            "product" => &["a", "b", "c"],
            "gaussian" => &["a", "b", "amp", "alpha"],
            "cosine" => &["a", "b", "amp", "freq"],
            other => {
                return Err(Error::Unknown {
                    kind: "kernel",
                    name: other.to_string(),
                })
            }
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::InvalidSpec(format!(
                "unknown parameter `{k}` for kernel `{name}`"
            )));
        }
        let kind = match name {
            "zero" => KernelKind::Zero,
            "product" => KernelKind::Product { c: get("c", 1.0) },
            "gaussian" => KernelKind::Gaussian {
                amp: get("amp", 1.0),
                alpha: get("alpha", 1.0),
            },
            _ => KernelKind::Cosine {
                amp: get("amp", 1.0),
                freq: get("freq", 1.0),
            },
        };
        KernelSpec::new(get("a", 0.0), get("b", 1.0), kind)
    }
}

/// Right-hand sides `f` understood by the solvers and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RealFn {
    Constant(f64),
    /// `x^k`
    Power(u32),
    /// `e^{c x}`
    Exp(f64),
    /// `sin(ω x)`
    Sin(f64),
    /// `cos(ω x)`
    Cos(f64),
}

impl RealFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RealFn::Constant(c) => c,
            RealFn::Power(k) => x.powi(k as i32),
            RealFn::Exp(c) => (c * x).exp(),
            RealFn::Sin(w) => (w * x).sin(),
            RealFn::Cos(w) => (w * x).cos(),
        }
    }
}

impl FromStr for RealFn {
    type Err = Error;

    /// `one`, `x`, `x^k`, `exp`, `sin`, `cos`, or a number.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "one" => return Ok(RealFn::Constant(1.0)),
            "x" => return Ok(RealFn::Power(1)),
            "exp" => return Ok(RealFn::Exp(1.0)),
            "sin" => return Ok(RealFn::Sin(1.0)),
            "cos" => return Ok(RealFn::Cos(1.0)),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("x^") {
            return k
                .parse()
                .map(RealFn::Power)
                .map_err(|_| Error::InvalidSpec(format!("bad exponent in `{s}`")));
        }
        s.parse().map(RealFn::Constant).map_err(|_| Error::Unknown {
            kind: "function",
            name: s.to_string(),
        })
    }
}

impl fmt::Display for RealFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealFn::Constant(c) => write!(f, "{c}"),
            RealFn::Power(k) => write!(f, "x^{k}"),
            RealFn::Exp(c) => write!(f, "exp({c}x)"),
            RealFn::Sin(w) => write!(f, "sin({w}x)"),
            RealFn::Cos(w) => write!(f, "cos({w}x)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FredholmResult {
    pub value: C64,
    pub per_order_terms: Vec<C64>,
    pub n_max: usize,
    /// `(1/n!) n^{n/2} (sup|K|·(b−a))^n` for each order.
    pub hadamard_bounds: Vec<f64>,
}

impl FredholmResult {
    fn new(terms: Vec<C64>, kernel: &KernelSpec) -> Self {
        let scale = kernel.sup_bound() * (kernel.b - kernel.a);
        let hadamard_bounds = (0..terms.len())
            .map(|n| {
                let fact: f64 = (1..=n).map(|j| j as f64).product();
                (n as f64).powf(n as f64 / 2.0) * scale.powi(n as i32) / fact
            })
            .collect();
        Self {
            value: terms.iter().sum(),
            n_max: terms.len().saturating_sub(1),
            per_order_terms: terms,
            hadamard_bounds,
        }
    }
}

/// Discretized operator `M = K W` on the quadrature nodes.
#[derive(Debug, Clone)]
struct Discretized {
    kernel: KernelSpec,
    rule: QuadratureRule,
    /// `K(ξ_i, ξ_j)`
    kmat: DenseOperator,
    /// `K(ξ_i, ξ_j) μ_j`
    m: DenseOperator,
}

impl Discretized {
    fn new(kernel: &KernelSpec, rule: &QuadratureRule) -> Result<Self> {
        if (rule.a - kernel.a).abs() > 1e-12 || (rule.b - kernel.b).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "quadrature on [{}, {}] but kernel on [{}, {}]",
                rule.a, rule.b, kernel.a, kernel.b
            )));
        }
        let q = rule.len();
        let kmat = DenseOperator::from_fn(q, |i, j| C64::new(kernel.eval(rule.nodes[i], rule.nodes[j]), 0.0));
        let m = DenseOperator::from_fn(q, |i, j| kmat[(i, j)] * rule.weights[j]);
        Ok(Self {
            kernel: kernel.clone(),
            rule: rule.clone(),
            kmat,
            m,
        })
    }

    fn symmetric_terms(&self, n_max: usize, statistics: Statistics) -> Vec<C64> {
        let p = power_traces(&self.m, n_max.max(1));
        symmetric_sequence(&p, n_max, statistics).expect("enough power traces")
    }

    /// `b M^j` for `j < n_max`, with `b_k = K(s, ξ_k) μ_k`.
    fn border_rows(&self, s: f64, n_max: usize) -> Vec<Vec<C64>> {
        let mut row: Vec<C64> = self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(&x, &w)| C64::new(self.kernel.eval(s, x) * w, 0.0))
            .collect();
        let mut out = Vec::with_capacity(n_max);
        for _ in 0..n_max {
            let next = self.m.vecmat(&row);
            out.push(row);
            row = next;
        }
        out
    }

    fn border_column(&self, t: f64) -> Vec<C64> {
        self.rule
            .nodes
            .iter()
            .map(|&x| C64::new(self.kernel.eval(x, t), 0.0))
            .collect()
    }

    fn spectral_check(&self) -> Result<()> {
        let radius = self.m.spectral_radius_estimate();
        if radius >= 1.0 {
            return Err(Error::Divergent { radius });
        }
        Ok(())
    }
}

fn bordered_terms(d: f64, rows: &[Vec<C64>], col: &[C64], sym: &[C64], statistics: Statistics) -> Vec<C64> {
    let bmc: Vec<C64> = rows.iter().map(|r| crate::fock::dot(r, col)).collect();
    (0..sym.len())
        .map(|n| {
            let mut term = sym[n] * d;
            for j in 0..n {
                let x = sym[n - 1 - j] * bmc[j];
                match statistics {
                    Statistics::Fermionic if j % 2 == 1 => term += x,
                    Statistics::Fermionic => term -= x,
                    Statistics::Bosonic => term += x,
                }
            }
            term
        })
        .collect()
}

/// Determinant series `Σ_n (1/n!) ∫ det[K(ξ_i, ξ_j)]`.
pub fn fredholm_determinant(kernel: &KernelSpec, rule: &QuadratureRule, n_max: usize) -> Result<FredholmResult> {
    let disc = Discretized::new(kernel, rule)?;
    Ok(FredholmResult::new(
        disc.symmetric_terms(n_max, Statistics::Fermionic),
        kernel,
    ))
}

/// Bordered-determinant series for the minor at `(s, t)`.
pub fn fredholm_minor(
    kernel: &KernelSpec,
    rule: &QuadratureRule,
    s: f64,
    t: f64,
    n_max: usize,
) -> Result<FredholmResult> {
    let disc = Discretized::new(kernel, rule)?;
    let sym = disc.symmetric_terms(n_max, Statistics::Fermionic);
    let terms = bordered_terms(
        kernel.eval(s, t),
        &disc.border_rows(s, n_max),
        &disc.border_column(t),
        &sym,
        Statistics::Fermionic,
    );
    Ok(FredholmResult::new(terms, kernel))
}

fn check_perm_order(n_max: usize) -> Result<()> {
    if n_max > PERMANENT_CAP {
        return Err(Error::PermanentTooLarge {
            size: n_max,
            cap: PERMANENT_CAP,
        });
    }
    Ok(())
}

/// Permanent series `Σ_n (1/n!) ∫ per[K(ξ_i, ξ_j)]`.
pub fn fredholm_permanent(kernel: &KernelSpec, rule: &QuadratureRule, n_max: usize) -> Result<FredholmResult> {
    check_perm_order(n_max)?;
    let disc = Discretized::new(kernel, rule)?;
    disc.spectral_check()?;
    Ok(FredholmResult::new(
        disc.symmetric_terms(n_max, Statistics::Bosonic),
        kernel,
    ))
}

/// Bordered-permanent series at `(s, t)`.
pub fn permanent_minor(
    kernel: &KernelSpec,
    rule: &QuadratureRule,
    s: f64,
    t: f64,
    n_max: usize,
) -> Result<FredholmResult> {
    check_perm_order(n_max)?;
    let disc = Discretized::new(kernel, rule)?;
    disc.spectral_check()?;
    let sym = disc.symmetric_terms(n_max, Statistics::Bosonic);
    let terms = bordered_terms(
        kernel.eval(s, t),
        &disc.border_rows(s, n_max),
        &disc.border_column(t),
        &sym,
        Statistics::Bosonic,
    );
    Ok(FredholmResult::new(terms, kernel))
}

/// `det(I + W^{1/2} K W^{1/2})` of the symmetrized discretization.
pub fn discretized_determinant(kernel: &KernelSpec, rule: &QuadratureRule) -> Result<C64> {
    let sym = symmetrized(kernel, rule)?;
    Ok(Lu::new(&DenseOperator::identity(rule.len()).add_scaled(&sym, C64::new(1.0, 0.0))).determinant())
}

/// `1 / det(I − W^{1/2} K W^{1/2})`, the permanent series limit.
pub fn discretized_permanent_limit(kernel: &KernelSpec, rule: &QuadratureRule) -> Result<C64> {
    let sym = symmetrized(kernel, rule)?;
    Ok(
        Lu::new(&DenseOperator::identity(rule.len()).add_scaled(&sym, C64::new(-1.0, 0.0)))
            .determinant()
            .inv(),
    )
}

fn symmetrized(kernel: &KernelSpec, rule: &QuadratureRule) -> Result<DenseOperator> {
    Discretized::new(kernel, rule)?;
    let sq: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    Ok(DenseOperator::from_fn(rule.len(), |i, j| {
        C64::new(sq[i] * kernel.eval(rule.nodes[i], rule.nodes[j]) * sq[j], 0.0)
    }))
}

/// Which second-kind equation: `φ + ∫Kφ = f` or `φ − ∫Kφ = f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationSign {
    Plus,
    Minus,
}

impl EquationSign {
    fn as_f64(self) -> f64 {
        match self {
            EquationSign::Plus => 1.0,
            EquationSign::Minus => -1.0,
        }
    }
}

impl FromStr for EquationSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(EquationSign::Plus),
            "minus" | "-" => Ok(EquationSign::Minus),
            other => Err(Error::Unknown {
                kind: "sign",
                name: other.to_string(),
            }),
        }
    }
}

/// Solution sampled at the quadrature nodes, with an evaluator elsewhere.
#[derive(Debug, Clone)]
pub struct Solution {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// `max_i |φ_i ± Σ_j μ_j K(ξ_i, ξ_j) φ_j − f(ξ_i)|`.
    pub residual: f64,
    evaluator: Evaluator,
}

#[derive(Debug, Clone)]
enum Evaluator {
    /// `φ(s) = f(s) ∓ Σ_j μ_j (minor(s, ξ_j)/D) f(ξ_j)`
    Series {
        disc: Box<Discretized>,
        f: RealFn,
        sign: EquationSign,
        sym: Vec<C64>,
        denominator: C64,
    },
    /// `φ(s) = f(s) ∓ Σ_j μ_j K(s, ξ_j) φ_j`
    Nystrom {
        kernel: KernelSpec,
        rule: QuadratureRule,
        f: RealFn,
        sign: EquationSign,
    },
}

impl Solution {
    pub fn evaluate(&self, s: f64) -> f64 {
        match &self.evaluator {
            Evaluator::Series {
                disc,
                f,
                sign,
                sym,
                denominator,
            } => {
                let statistics = match sign {
                    EquationSign::Plus => Statistics::Fermionic,
                    EquationSign::Minus => Statistics::Bosonic,
                };
                let n_max = sym.len() - 1;
                let rows = disc.border_rows(s, n_max);
                let mut acc = 0.0;
                for (j, (&x, &w)) in disc.rule.nodes.iter().zip(&disc.rule.weights).enumerate() {
                    let col = disc.kmat.column(j);
                    let minor: C64 = bordered_terms(disc.kernel.eval(s, x), &rows, &col, sym, statistics)
                        .iter()
                        .sum();
                    acc += w * (minor / denominator).re * f.eval(x);
                }
                f.eval(s) - sign.as_f64() * acc
            }
            Evaluator::Nystrom { kernel, rule, f, sign } => {
                let sum: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .zip(&self.values)
                    .map(|((&x, &w), &phi)| w * kernel.eval(s, x) * phi)
                    .sum();
                f.eval(s) - sign.as_f64() * sum
            }
        }
    }

    pub fn max_node_difference(&self, other: &Solution) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn residual(kernel: &KernelSpec, rule: &QuadratureRule, f: RealFn, sign: EquationSign, phi: &[f64]) -> f64 {
    rule.nodes
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let integral: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .zip(phi)
                .map(|((&x, &w), &p)| w * kernel.eval(xi, x) * p)
                .sum();
            (phi[i] + sign.as_f64() * integral - f.eval(xi)).abs()
        })
        .fold(0.0, f64::max)
}

fn series_solve(
    kernel: &KernelSpec,
    f: RealFn,
    rule: &QuadratureRule,
    n_max: usize,
    sign: EquationSign,
) -> Result<Solution> {
    let disc = Discretized::new(kernel, rule)?;
    let statistics = match sign {
        EquationSign::Plus => Statistics::Fermionic,
        EquationSign::Minus => {
            check_perm_order(n_max)?;
            disc.spectral_check()?;
            Statistics::Bosonic
        }
    };
    let sym = disc.symmetric_terms(n_max, statistics);
    let denominator: C64 = sym.iter().sum();
    if denominator.norm() < VANISHING_DETERMINANT {
        return Err(Error::VanishingDeterminant {
            value: denominator.norm(),
        });
    }
    let q = rule.len();
    let fv: Vec<f64> = rule.nodes.iter().map(|&x| f.eval(x)).collect();
    // minor matrix at all node pairs: rows b M^j are rows of M^{j+1}
    let mut powers = Vec::with_capacity(n_max);
    let mut p = disc.m.clone();
    for _ in 0..n_max {
        powers.push(p.matmul(&disc.kmat));
        p = p.matmul(&disc.m);
    }
    let mut values = Vec::with_capacity(q);
    for i in 0..q {
        let mut acc = 0.0;
        for j in 0..q {
            let bmc: Vec<C64> = powers.iter().map(|pk| pk[(i, j)]).collect();
            let d = disc.kmat[(i, j)];
            let mut minor = C64::new(0.0, 0.0);
            for n in 0..=n_max {
                minor += sym[n] * d;
                for jj in 0..n {
                    let x = sym[n - 1 - jj] * bmc[jj];
                    match statistics {
                        Statistics::Fermionic if jj % 2 == 1 => minor += x,
                        Statistics::Fermionic => minor -= x,
                        Statistics::Bosonic => minor += x,
                    }
                }
            }
            acc += rule.weights[j] * (minor / denominator).re * fv[j];
        }
        values.push(fv[i] - sign.as_f64() * acc);
    }
    let residual = residual(kernel, rule, f, sign, &values);
    Ok(Solution {
        nodes: rule.nodes.clone(),
        values,
        residual,
        evaluator: Evaluator::Series {
            disc: Box::new(disc),
            f,
            sign,
            sym,
            denominator,
        },
    })
}

/// `φ(s) = f(s) − ∫ (D_{s,t}/D) f(t) dt`, solving `φ + ∫Kφ = f`.
pub fn solve_plus(kernel: &KernelSpec, f: RealFn, rule: &QuadratureRule, n_max: usize) -> Result<Solution> {
    series_solve(kernel, f, rule, n_max, EquationSign::Plus)
}

/// `φ(s) = f(s) + ∫ (P_{s,t}/P) f(t) dt`, solving `φ − ∫Kφ = f`.
pub fn solve_minus(kernel: &KernelSpec, f: RealFn, rule: &QuadratureRule, n_max: usize) -> Result<Solution> {
    series_solve(kernel, f, rule, n_max, EquationSign::Minus)
}

/// Dense baseline: solves `(I ± K W) φ = f` at the nodes.
pub fn nystrom_solve(kernel: &KernelSpec, f: RealFn, rule: &QuadratureRule, sign: EquationSign) -> Result<Solution> {
    let disc = Discretized::new(kernel, rule)?;
    let system = DenseOperator::identity(rule.len()).add_scaled(&disc.m, C64::new(sign.as_f64(), 0.0));
    let rhs: Vec<C64> = rule.nodes.iter().map(|&x| C64::new(f.eval(x), 0.0)).collect();
    let lu = Lu::new(&system);
    let x = lu.solve(&rhs).ok_or(Error::VanishingDeterminant { value: 0.0 })?;
    let values: Vec<f64> = x.iter().map(|z| z.re).collect();
    let residual = residual(kernel, rule, f, sign, &values);
    Ok(Solution {
        nodes: rule.nodes.clone(),
        values,
        residual,
        evaluator: Evaluator::Nystrom {
            kernel: kernel.clone(),
            rule: rule.clone(),
            f,
            sign,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    fn rule(q: usize) -> QuadratureRule {
        gauss_legendre(q, 0.0, 1.0).unwrap()
    }

    #[test]
    fn zero_kernel() {
        let k = KernelSpec::unit(KernelKind::Zero);
        let r = rule(8);
        assert_eq!(fredholm_determinant(&k, &r, 5).unwrap().value, C64::new(1.0, 0.0));
        assert_eq!(fredholm_minor(&k, &r, 0.3, 0.4, 5).unwrap().value, C64::new(0.0, 0.0));
        assert_eq!(fredholm_permanent(&k, &r, 5).unwrap().value, C64::new(1.0, 0.0));
        let sol = solve_plus(&k, RealFn::Power(2), &r, 5).unwrap();
        for (x, v) in sol.nodes.iter().zip(&sol.values) {
            assert_eq!(*v, x * x);
        }
        assert_eq!(
            solve_minus(&k, RealFn::Exp(1.0), &r, 5).unwrap().evaluate(0.5),
            0.5f64.exp()
        );
    }

    #[test]
    fn first_order_term_is_the_kernel_trace() {
        let k = KernelSpec::unit(KernelKind::Gaussian { amp: 0.7, alpha: 2.0 });
        let r = rule(16);
        let res = fredholm_determinant(&k, &r, 3).unwrap();
        let trace = r.integrate(|x| k.eval(x, x));
        assert!((res.per_order_terms[1].re - trace).abs() < 1e-14);
    }

    #[test]
    fn rank_one_product_kernel() {
        // K = c·xy: D = 1 + c/3, D_{s,t} = c·st, P = 1/(1 − c/3)
        let k = KernelSpec::unit(KernelKind::Product { c: 1.0 });
        let r = rule(12);
        assert!((fredholm_determinant(&k, &r, 10).unwrap().value.re - 4.0 / 3.0).abs() < 1e-13);
        let m = fredholm_minor(&k, &r, 0.3, 0.7, 10).unwrap();
        assert!((m.value.re - 0.21).abs() < 1e-13);
        let sol = solve_plus(&k, RealFn::Power(1), &r, 10).unwrap();
        for (x, v) in sol.nodes.iter().zip(&sol.values) {
            assert!((v - 0.75 * x).abs() < 1e-13);
        }
        assert!((sol.evaluate(0.123) - 0.75 * 0.123).abs() < 1e-13);
        assert!(sol.residual < 1e-13);

        let half = KernelSpec::unit(KernelKind::Product { c: 0.5 });
        let p = fredholm_permanent(&half, &r, 20).unwrap();
        assert!((p.value.re - 1.2).abs() < 1e-10);
        // P_{s,t} = c·st/(1 − c/3)²
        let pm = permanent_minor(&half, &r, 0.4, 0.9, 20).unwrap();
        assert!((pm.value.re - 0.5 * 0.36 / (5.0f64 / 6.0).powi(2)).abs() < 1e-10);
        // φ − ½∫xyφ = x  ⇒  φ = (6/5)x
        let minus = solve_minus(&half, RealFn::Power(1), &r, 20).unwrap();
        assert!((minus.evaluate(0.5) - 0.6).abs() < 1e-10);
    }

    #[test]
    fn series_matches_dense_linear_algebra() {
        let k = KernelSpec::unit(KernelKind::Gaussian { amp: 1.0, alpha: 1.0 });
        let r = rule(24);
        let d = fredholm_determinant(&k, &r, 14).unwrap().value;
        assert!((d - discretized_determinant(&k, &r).unwrap()).norm() < 1e-9);
        let a = solve_plus(&k, RealFn::Exp(1.0), &r, 14).unwrap();
        let b = nystrom_solve(&k, RealFn::Exp(1.0), &r, EquationSign::Plus).unwrap();
        assert!(a.max_node_difference(&b) < 1e-8);
        assert!((a.evaluate(0.37) - b.evaluate(0.37)).abs() < 1e-8);
        for (t, h) in d_terms(&k, &r)
            .iter()
            .zip(&fredholm_determinant(&k, &r, 8).unwrap().hadamard_bounds)
        {
            assert!(t.norm() <= *h * (1.0 + 1e-12));
        }
    }

    fn d_terms(k: &KernelSpec, r: &QuadratureRule) -> Vec<C64> {
        fredholm_determinant(k, r, 8).unwrap().per_order_terms
    }

    #[test]
    fn kernel_parsing() {
        let k: KernelSpec = "product:c=0.5".parse().unwrap();
        assert_eq!(k.kind, KernelKind::Product { c: 0.5 });
        let g: KernelSpec = "gaussian:amp=2,alpha=3,b=2".parse().unwrap();
        assert_eq!((g.a, g.b), (0.0, 2.0));
        assert!("bogus".parse::<KernelSpec>().is_err());
        assert!("product:z=1".parse::<KernelSpec>().is_err());
        assert!("product:a=1,b=0".parse::<KernelSpec>().is_err());
        assert_eq!("x^3".parse::<RealFn>().unwrap(), RealFn::Power(3));
        assert_eq!("2.5".parse::<RealFn>().unwrap(), RealFn::Constant(2.5));
    }

    #[test]
    fn vanishing_determinant_is_reported() {
        // 1 + c/3 = 0
        let k = KernelSpec::unit(KernelKind::Product { c: -3.0 });
        assert!(matches!(
            solve_plus(&k, RealFn::Power(1), &rule(8), 4),
            Err(Error::VanishingDeterminant { .. })
        ));
    }

    #[test]
    fn permanent_rejects_large_kernels() {
        let k = KernelSpec::unit(KernelKind::Product { c: 4.0 });
        assert!(matches!(
            fredholm_permanent(&k, &rule(8), 4),
            Err(Error::Divergent { .. })
        ));
        let small = KernelSpec::unit(KernelKind::Product { c: 0.1 });
        assert!(matches!(
            fredholm_permanent(&small, &rule(8), 21),
            Err(Error::PermanentTooLarge { .. })
        ));
    }
}
