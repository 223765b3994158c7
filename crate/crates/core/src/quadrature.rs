//! Gauss-Legendre rules and adaptive Gauss-Kronrod (7/15) integration.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Nodes and positive weights on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `q`-point Gauss-Legendre rule on `[a, b]`, nodes ascending.
pub fn gauss_legendre(q: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if q == 0 || !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidSpec(format!("quadrature q={q} on [{a}, {b}]")));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[q - 1 - i] = mid + half * x;
        weights[i] = w * half;
        weights[q - 1 - i] = w * half;
    }
    Ok(QuadratureRule { a, b, nodes, weights })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> (C64, f64) {
    let c = (a + b) / 2.0;
    let h = (b - a) / 2.0;
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    ((kronrod * h), ((kronrod - gauss) * h).norm())
}

struct Segment {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: C64,
    pub error: f64,
    pub segments: usize,
}

/// Adaptive G7/K15 over `[a, b]`, bisecting the worst segment until the
/// summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> C64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Integral> {
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::from([Segment { a, b, value, error }]);
    loop {
        let total: C64 = heap.iter().map(|s| s.value).sum();
        let err: f64 = heap.iter().map(|s| s.error).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::TruncationInsufficient("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.norm()) || heap.len() >= max_segments {
            if err > abs_tol.max(rel_tol * total.norm()) * 1e3 {
                return Err(Error::TruncationInsufficient(format!(
                    "adaptive quadrature stalled with error {err:.3e}"
                )));
            }
            return Ok(Integral {
                value: total,
                error: err,
                segments: heap.len(),
            });
        }
        let worst = heap.pop().expect("non-empty");
        let m = (worst.a + worst.b) / 2.0;
        for (lo, hi) in [(worst.a, m), (m, worst.b)] {
            let (value, error) = gk15(&f, lo, hi);
            heap.push(Segment {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_weights_and_polynomials() {
        for q in [1, 2, 5, 16, 32, 64] {
            let r = gauss_legendre(q, 0.0, 2.0).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            let deg = 2 * q - 1;
            let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert!((r.integrate(|x| x.powi(deg as i32)) - exact).abs() < 1e-12 * exact);
        }
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |x: f64| C64::new(1.0 / (1e-4 + x * x), 0.0);
        let r = integrate_adaptive(f, -1.0, 1.0, 1e-13, 1e-13, 2000).unwrap();
        let exact = 2.0 * (1.0 / 1e-4f64.sqrt()) * (1.0 / 1e-4f64.sqrt()).atan();
        assert!((r.value.re - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn adaptive_exponential() {
        let r = integrate_adaptive(|x| C64::new(0.0, x).exp(), 0.0, PI, 1e-14, 1e-14, 100).unwrap();
        assert!((r.value - C64::new(0.0, 2.0)).norm() < 1e-13);
    }
}
