//! Vertex-operator trace ratios as infinite products, the multiple-gamma
//! (Barnes-type) products that control their convergence, and an independent
//! evaluation through a damped, truncated bosonic Fock space.
//!
//! Modes are 1-based in formulas (`a_{±I}`, `I ≥ 1`) and stored 0-based.
//! Creation coordinates of `ã_−(u) = Σ a_{−I} u^I / I` are `u^I / I`; with the
//! pairing `⟨a_{−m}|a_n⟩ = n δ_{nm}` the covector of `ã_+(v)` is `v^{−I}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Statistics;
use crate::linalg::DenseOperator;
use crate::quadrature::integrate_adaptive;
use crate::rng::complex_in;
use crate::trace::{resolvent_pairing, Order};
use crate::C64;

/// Relative tolerance for the power-sum constraint.
pub const POWER_SUM_TOL: f64 = 1e-12;
const RICHARDSON_LEVELS: usize = 6;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `Π_{k ∈ ℕ^n} Π_m (a_m + k·ω) / Π_p (b_p + k·ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarnesSpec {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub omega: Vec<C64>,
}

impl BarnesSpec {
    pub fn new(a: Vec<C64>, b: Vec<C64>, omega: Vec<C64>) -> Result<Self> {
        let spec = Self { a, b, omega };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.b.len() {
            return Err(Error::InvalidSpec(format!(
                "numerator and denominator need equal lengths ({} vs {})",
                self.a.len(),
                self.b.len()
            )));
        }
        if self.omega.is_empty() {
            return Err(Error::InvalidSpec("at least one direction ω is required".into()));
        }
        if let Some(w) = self.omega.iter().find(|w| !(w.re < 0.0)) {
            return Err(Error::InvalidSpec(format!("direction ω = {w} must have Re ω < 0")));
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.omega.len()
    }

    /// `Σ b^q − Σ a^q`.
    fn power_sum_gap(&self, q: u32) -> (C64, f64) {
        let sa: C64 = self.a.iter().map(|z| z.powu(q)).sum();
        let sb: C64 = self.b.iter().map(|z| z.powu(q)).sum();
        let scale: f64 = self.a.iter().chain(&self.b).map(|z| z.norm().powi(q as i32)).sum();
        (sb - sa, scale)
    }
}

/// Whether the power sums agree for `q = 0..=n`, and the first failing `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Admissibility {
    pub converges: bool,
    pub failing_q: Option<usize>,
}

pub fn barnes_converges(spec: &BarnesSpec) -> Admissibility {
    let failing_q = (0..=spec.depth()).find(|&q| {
        let (gap, scale) = spec.power_sum_gap(q as u32);
        gap.norm() > POWER_SUM_TOL * scale.max(1.0)
    });
    Admissibility {
        converges: failing_q.is_none(),
        failing_q,
    }
}

fn require_admissible(spec: &BarnesSpec) -> Result<()> {
    spec.validate()?;
    match barnes_converges(spec).failing_q {
        Some(q) => Err(Error::NotAdmissible { q }),
        None => Ok(()),
    }
}

/// Infinite-product estimate: `value ≈ exp(log_value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductEstimate {
    pub value: C64,
    pub log_value: C64,
    /// Estimated absolute error of `log_value`.
    pub tail_estimate: f64,
    pub shells_used: usize,
}

/// Default box size per direction for [`barnes_product`].
pub fn default_box(depth: usize) -> usize {
    match depth {
        1 => 4096,
        2 => 1024,
        _ => 64,
    }
}

/// Partial products over boxes `[0, K]^n` for `K = K_max/2^i`, extrapolated
/// in `1/K` by Richardson's scheme.
pub fn barnes_product(spec: &BarnesSpec, k_max: usize) -> Result<ProductEstimate> {
    require_admissible(spec)?;
    let levels = RICHARDSON_LEVELS.min((k_max.max(1) as f64).log2() as usize).max(1);
    let n = spec.depth();

    // shell sums over {k : max_j k_j = r}
    let mut shells = vec![zero(); k_max + 1];
    let mut k = vec![0usize; n];
    loop {
        let z: C64 = k.iter().zip(&spec.omega).map(|(&kj, w)| w * kj as f64).sum();
        let shell = *k.iter().max().expect("n ≥ 1");
        let mut term = zero();
        for (a, b) in spec.a.iter().zip(&spec.b) {
            let (num, den) = (a + z, b + z);
            if num == zero() || den == zero() {
                return Err(Error::Pole { shell });
            }
            term += (num / den).ln();
        }
        shells[shell] += term;
        // odometer
        let mut j = 0;
        while j < n && k[j] == k_max {
            k[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
        k[j] += 1;
    }
    let mut prefix = Vec::with_capacity(k_max + 1);
    let mut acc = zero();
    for s in &shells {
        acc += s;
        prefix.push(acc);
    }
    if !acc.re.is_finite() || !acc.im.is_finite() {
        return Err(Error::TailGrowing);
    }

    let sizes: Vec<usize> = (0..levels).rev().map(|i| k_max >> i).collect();
    let base: Vec<C64> = sizes.iter().map(|&s| prefix[s]).collect();
    if levels >= 3 {
        let d1 = (base[levels - 1] - base[levels - 2]).norm();
        let d2 = (base[levels - 2] - base[levels - 3]).norm();
        if d1 > d2 * 1.5 && d1 > 1e-14 {
            return Err(Error::TailGrowing);
        }
    }
    let mut table = vec![base];
    for j in 1..levels {
        let prev = &table[j - 1];
        let factor = (1u64 << j) as f64 - 1.0;
        let row: Vec<C64> = (0..levels)
            .map(|i| {
                if i < j {
                    zero()
                } else {
                    prev[i] + (prev[i] - prev[i - 1]) / factor
                }
            })
            .collect();
        table.push(row);
    }
    let last = levels - 1;
    let log_value = table[last][last];
    let tail_estimate = if levels > 1 {
        (table[last][last] - table[last - 1][last - 1]).norm()
    } else {
        f64::INFINITY
    };
    Ok(ProductEstimate {
        value: log_value.exp(),
        log_value,
        tail_estimate,
        shells_used: k_max + 1,
    })
}

/// `(e^z − 1)/z`.
fn exprel(z: C64) -> C64 {
    if z.norm() < 0.5 {
        let mut term = one();
        let mut sum = one();
        for k in 2..24 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarnesIntegral {
    pub value: C64,
    pub log_value: C64,
    pub error: f64,
    pub segments: usize,
}

/// `exp ∫_0^∞ (Σ_p e^{b_p x} − Σ_m e^{a_m x}) / (x Π_j (1 − e^{ω_j x})) dx`,
/// from `ln(a/b) = ∫_0^∞ (e^{bx} − e^{ax})/x dx` for `Re a, Re b < 0`.
pub fn barnes_integral(spec: &BarnesSpec) -> Result<BarnesIntegral> {
    require_admissible(spec)?;
    let decay = spec
        .a
        .iter()
        .chain(&spec.b)
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min);
    if spec.a.is_empty() {
        return Ok(BarnesIntegral {
            value: one(),
            log_value: zero(),
            error: 0.0,
            segments: 0,
        });
    }
    if !(decay > 0.0) {
        return Err(Error::InvalidSpec("integral form needs Re a_m, Re b_p < 0".into()));
    }
    let n = spec.depth();

    // small-x series: Σ_{q>n} ΔP_q x^{q−n−1}/q! / Π(−ω_j E(ω_j x))
    let radius = spec.a.iter().chain(&spec.b).map(|z| z.norm()).fold(1.0, f64::max);
    let mut coeffs = Vec::new();
    let mut fact = 1.0;
    for q in 1..400u32 {
        fact *= q as f64;
        if q as usize <= n {
            continue;
        }
        let (gap, _) = spec.power_sum_gap(q);
        coeffs.push(gap / fact);
        if radius.powi(q as i32) / fact * 2.0 * spec.a.len() as f64 <= 1e-18 {
            break;
        }
    }
    let series = |x: f64| -> C64 {
        let mut num = zero();
        let mut xp = 1.0;
        for c in &coeffs {
            num += c * xp;
            xp *= x;
        }
        let den: C64 = spec.omega.iter().map(|w| -w * exprel(w * x)).product();
        num / den
    };
    let direct = |x: f64| -> C64 {
        let num: C64 =
            spec.b.iter().map(|z| (z * x).exp()).sum::<C64>() - spec.a.iter().map(|z| (z * x).exp()).sum::<C64>();
        let den: C64 = spec.omega.iter().map(|w| one() - (w * x).exp()).product();
        num / (den * x)
    };
    let upper = 1.0f64.max(40.0 / decay);
    let head = integrate_adaptive(series, 0.0, 1.0, 1e-14, 1e-13, 2000)?;
    let tail = integrate_adaptive(direct, 1.0, upper, 1e-14, 1e-13, 4000)?;
    let log_value = head.value + tail.value;
    Ok(BarnesIntegral {
        value: log_value.exp(),
        log_value,
        error: head.error + tail.error,
        segments: head.segments + tail.segments,
    })
}

/// Seeded admissible spec of depth 1 or 2 with three-element lists at depth 2
/// (`c + r ζ^k` for a primitive cube root `ζ` share `p_1`, `p_2` for all `r`).
pub fn random_admissible_spec<R: Rng>(rng: &mut R, depth: usize) -> Result<BarnesSpec> {
    let centre = C64::new(rng.gen_range(-3.5..=-2.0), rng.gen_range(-1.0..=1.0));
    let mut radius = || {
        let r = complex_in(rng, 0.7);
        if r.norm() < 0.1 {
            r + C64::new(0.2, 0.0)
        } else {
            r
        }
    };
    let (ra, rb) = (radius(), radius());
    let roots: Vec<C64> = match depth {
        1 => vec![one(), -one()],
        2 => (0..3)
            .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0))
            .collect(),
        _ => {
            return Err(Error::InvalidSpec(format!(
                "random specs support depth 1 or 2, got {depth}"
            )))
        }
    };
    let a = roots.iter().map(|z| centre + ra * z).collect();
    let b = roots.iter().map(|z| centre + rb * z).collect();
    let omega = (0..depth)
        .map(|_| C64::new(rng.gen_range(-2.0..=-0.5), rng.gen_range(-1.0..=1.0)))
        .collect();
    BarnesSpec::new(a, b, omega)
}

/// Insertions `exp(k_i ã_−(α_i))`, `exp(l_j ã_+(β_j))` and the shift `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub alpha: Vec<C64>,
    pub k: Vec<i32>,
    pub beta: Vec<C64>,
    pub l: Vec<i32>,
    pub gamma: C64,
}

impl VertexSpec {
    pub fn new(alpha: Vec<C64>, k: Vec<i32>, beta: Vec<C64>, l: Vec<i32>, gamma: C64) -> Result<Self> {
        let spec = Self {
            alpha,
            k,
            beta,
            l,
            gamma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.len() != self.k.len() || self.beta.len() != self.l.len() {
            return Err(Error::InvalidSpec(
                "each insertion point needs exactly one exponent".into(),
            ));
        }
        let sk: i32 = self.k.iter().sum();
        let sl: i32 = self.l.iter().sum();
        if sk != 0 || sl != 0 {
            return Err(Error::InvalidSpec(format!(
                "exponent constraint Σk_i = 0 and Σl_j = 0 violated (Σk = {sk}, Σl = {sl})"
            )));
        }
        if self.gamma == zero() {
            return Err(Error::InvalidSpec("shift γ must be non-zero".into()));
        }
        Ok(())
    }

    /// `(β_j − α_i, k_i l_j)` over all pairs with a non-zero exponent.
    fn pairs(&self) -> Vec<(C64, i32)> {
        let mut out = Vec::new();
        for (a, &k) in self.alpha.iter().zip(&self.k) {
            for (b, &l) in self.beta.iter().zip(&self.l) {
                if k * l != 0 {
                    out.push((b - a, k * l));
                }
            }
        }
        out
    }

    /// The product from `m = start` as a depth-1 spec with `ω = −γ`.
    pub fn to_barnes(&self, start: usize) -> Result<BarnesSpec> {
        self.validate()?;
        let shift = self.gamma * start as f64;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (d, e) in self.pairs() {
            let target = if e < 0 { &mut a } else { &mut b };
            target.extend(std::iter::repeat(d - shift).take(e.unsigned_abs() as usize));
        }
        BarnesSpec::new(a, b, vec![-self.gamma])
    }
}

/// Hurwitz zeta `Σ_{k≥0} (a + k)^{−s}` for integer `s ≥ 2`, `a ≥ 1`, by
/// Euler–Maclaurin after ten explicit terms.
pub fn hurwitz_zeta(s: u32, a: f64) -> f64 {
    const B2K: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let s_f = s as f64;
    let n = 10;
    let mut sum: f64 = (0..n).map(|k| (a + k as f64).powf(-s_f)).sum();
    let x = a + n as f64;
    sum += x.powf(1.0 - s_f) / (s_f - 1.0) + 0.5 * x.powf(-s_f);
    // B_{2j}/(2j)! · s(s+1)…(s+2j−2) · x^{−s−2j+1}
    let mut rising = s_f;
    let mut fact = 2.0;
    for (j, b) in B2K.iter().enumerate() {
        let j = j + 1;
        if j > 1 {
            rising *= (s_f + 2.0 * j as f64 - 3.0) * (s_f + 2.0 * j as f64 - 2.0);
            fact *= (2 * j - 1) as f64 * (2 * j) as f64;
        }
        sum += b / fact * rising * x.powf(-s_f - 2.0 * j as f64 + 1.0);
    }
    sum
}

/// `value` includes an analytic tail correction when one is available;
/// `partial` is the bare truncated product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VertexProduct {
    pub value: C64,
    pub partial: C64,
    pub tail_estimate: f64,
    pub shells_used: usize,
}

/// `Π_{m=1}^{∞} Π_{i,j} (β_j − α_i − mγ)^{−k_i l_j}`.
pub fn vertex_trace_ratio(spec: &VertexSpec, m_max: usize) -> Result<VertexProduct> {
    vertex_trace_ratio_from(spec, 1, m_max)
}

/// Same product from `m = start`; integer powers throughout, so no branch
/// choice is involved.
pub fn vertex_trace_ratio_from(spec: &VertexSpec, start: usize, m_max: usize) -> Result<VertexProduct> {
    spec.validate()?;
    let pairs = spec.pairs();
    let mut partial = one();
    let mut last_log = 0.0;
    for m in start..=m_max {
        let mut shell = one();
        for &(d, e) in &pairs {
            let f = d - spec.gamma * m as f64;
            if f.norm() <= 1e-14 * d.norm().max(1.0) {
                return Err(Error::Pole { shell: m });
            }
            shell *= f.powi(-e);
        }
        last_log = shell.ln().norm();
        partial *= shell;
    }
    let shells_used = (m_max + 1).saturating_sub(start);
    let dmax = pairs.iter().map(|(d, _)| d.norm()).fold(0.0, f64::max);
    let a = (m_max.max(start.saturating_sub(1)) + 1) as f64;
    if pairs.is_empty() {
        return Ok(VertexProduct {
            value: partial,
            partial,
            tail_estimate: 0.0,
            shells_used,
        });
    }
    if a * spec.gamma.norm() > 2.0 * dmax {
        // log of the remaining shells: Σ_q P_q/(q γ^q) ζ(q, M+1), P_1 = 0
        let mut correction = zero();
        for q in 2..200u32 {
            let pq: C64 = pairs.iter().map(|&(d, e)| d.powu(q) * e as f64).sum();
            let term = pq / (spec.gamma.powu(q) * q as f64) * hurwitz_zeta(q, a);
            correction += term;
            if term.norm() < 1e-18 * correction.norm().max(1e-300) || term.norm() < 1e-300 {
                break;
            }
        }
        let value = partial * correction.exp();
        Ok(VertexProduct {
            value,
            partial,
            tail_estimate: (value - partial).norm(),
            shells_used,
        })
    } else {
        // shells decay like m^{−2}: remaining log ≈ M·|log F_M|
        Ok(VertexProduct {
            value: partial,
            partial,
            tail_estimate: last_log * a * partial.norm(),
            shells_used,
        })
    }
}

/// Insertions `exp(k_j ã_−(w_j))` and `η_+^{p_k}(z_k)` with step `ℏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSpec {
    pub w: Vec<C64>,
    pub k: Vec<i32>,
    pub z: Vec<C64>,
    pub p: Vec<i32>,
    pub hbar: C64,
    pub gamma: C64,
}

impl EtaSpec {
    pub fn validate(&self) -> Result<()> {
        if self.w.len() != self.k.len() || self.z.len() != self.p.len() {
            return Err(Error::InvalidSpec(
                "each insertion point needs exactly one exponent".into(),
            ));
        }
        let sk: i32 = self.k.iter().sum();
        let sp: i32 = self.p.iter().sum();
        if sk != 0 || sp != 0 {
            return Err(Error::InvalidSpec(format!(
                "exponent constraint Σk_j = 0 and Σp_k = 0 violated (Σk = {sk}, Σp = {sp})"
            )));
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(C64, i32)> {
        let mut out = Vec::new();
        for (w, &k) in self.w.iter().zip(&self.k) {
            for (z, &p) in self.z.iter().zip(&self.p) {
                if k * p != 0 {
                    out.push((z - w, k * p));
                }
            }
        }
        out
    }

    fn factor(&self, m: usize, k: usize) -> Result<C64> {
        let mut f = one();
        for (d, e) in self.pairs() {
            let base = d - self.gamma * m as f64 - self.hbar * (2 * k) as f64;
            let num = base - self.hbar;
            if base == zero() || num == zero() {
                return Err(Error::Pole { shell: m.max(k) });
            }
            f *= (num / base).powi(e);
        }
        Ok(f)
    }

    /// Depth-2 spec with `ω = (−γ, −2ℏ)`, starting at `m = 1`, `k = 0`.
    pub fn to_barnes(&self) -> Result<BarnesSpec> {
        self.validate()?;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (d, e) in self.pairs() {
            let base = d - self.gamma;
            let (num, den) = if e > 0 {
                (base - self.hbar, base)
            } else {
                (base, base - self.hbar)
            };
            let times = e.unsigned_abs() as usize;
            a.extend(std::iter::repeat(num).take(times));
            b.extend(std::iter::repeat(den).take(times));
        }
        BarnesSpec::new(a, b, vec![-self.gamma, -self.hbar * 2.0])
    }
}

/// Direct double product over `1 ≤ m ≤ M`, `0 ≤ k ≤ K`; the tail estimate is
/// the change from the half-size box.
pub fn eta_trace_ratio(spec: &EtaSpec, m_max: usize, k_max: usize) -> Result<VertexProduct> {
    spec.validate()?;
    let mut full = one();
    let mut half = one();
    for m in 1..=m_max {
        for k in 0..=k_max {
            let f = spec.factor(m, k)?;
            full *= f;
            if m <= m_max / 2 && k <= k_max / 2 {
                half *= f;
            }
        }
    }
    Ok(VertexProduct {
        value: full,
        partial: full,
        tail_estimate: (full - half).norm(),
        shells_used: m_max,
    })
}

/// `Π_{n=0}^{N} e^{g(u − v − nγ)}` with an algebraic tail fit `|g_n| ~ C n^{−p}`.
pub fn pairing_product(g: impl Fn(C64) -> C64, u: C64, v: C64, gamma: C64, n_max: usize) -> Result<VertexProduct> {
    let mut sum = zero();
    let mut mags = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let term = g(u - v - gamma * n as f64);
        if !term.re.is_finite() || !term.im.is_finite() {
            return Err(Error::Pole { shell: n });
        }
        mags.push(term.norm());
        sum += term;
    }
    let tail = match (n_max, mags.as_slice()) {
        (n, [.., prev, last]) if n >= 2 => {
            if *last == 0.0 {
                0.0
            } else {
                let p = (prev / last).ln() / (n as f64 / (n as f64 - 1.0)).ln();
                if p > 1.0 {
                    last * n as f64 / (p - 1.0)
                } else {
                    f64::INFINITY
                }
            }
        }
        _ => f64::INFINITY,
    };
    let value = sum.exp();
    Ok(VertexProduct {
        value,
        partial: value,
        tail_estimate: tail * value.norm(),
        shells_used: n_max + 1,
    })
}

/// `e^{γd}` on creation coordinates: `S[I][J] = (J/I) C(I,J) γ^{I−J}` for
/// modes `I ≥ J`. There is no constant mode, so `S·c(u) = c(u + γ) − c(γ)`;
/// the offset cancels on combinations `Σ k_i c(α_i)` with `Σ k_i = 0`.
pub fn shift_matrix(gamma: C64, modes: usize) -> DenseOperator {
    DenseOperator::from_fn(modes, |i, j| {
        if j > i {
            return zero();
        }
        let (big, small) = (i + 1, j + 1);
        let mut binom = 1.0;
        for r in 0..small {
            binom = binom * (big - r) as f64 / (r + 1) as f64;
        }
        gamma.powu((big - small) as u32) * (binom * small as f64 / big as f64)
    })
}

/// Coordinates `u^I / I` of `ã_−(u)`.
pub fn minus_coordinates(u: C64, modes: usize) -> Vec<C64> {
    (1..=modes).map(|i| u.powu(i as u32) / i as f64).collect()
}

/// Covector `v^{−I}` of `ã_+(v)` under `⟨a_{−m}|a_n⟩ = n δ_{nm}`.
pub fn plus_weights(v: C64, modes: usize) -> Vec<C64> {
    (1..=modes).map(|i| v.powi(-(i as i32))).collect()
}

/// Truncation: `modes` oscillators, exponentials cut at total degree
/// `degree`, damping `T_t a_I = t^I a_I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedBoson {
    pub modes: usize,
    pub degree: usize,
    pub t: f64,
}

impl TruncatedBoson {
    pub fn new(modes: usize, degree: usize, t: f64) -> Result<Self> {
        if modes == 0 || degree == 0 {
            return Err(Error::InvalidSpec("modes and degree must be at least 1".into()));
        }
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidSpec(format!("damping t = {t} must lie in (0, 1)")));
        }
        Ok(Self { modes, degree, t })
    }

    /// `ρ_t = T_t · e^{γd}`.
    pub fn damped_shift(&self, gamma: C64) -> DenseOperator {
        let s = shift_matrix(gamma, self.modes);
        DenseOperator::from_fn(self.modes, |i, j| s[(i, j)] * self.t.powi(i as i32 + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizedTrace {
    pub value: C64,
    /// `x = ⟨w|ρ_t(1−ρ_t)^{-1}v⟩`; the untruncated value is `e^x`.
    pub exponent: C64,
}

/// `Tr(ρ̄_t C(e^v) A(e^w)) / Tr ρ̄_t` with `v = Σ k_i ã_−(α_i)` and
/// `w = Σ l_j ã_+(β_j)`, the exponentials cut at degree `D`. Grade `k` gives
/// `per` of a constant `k×k` matrix `= k! x^k`, divided by `(k!)²`.
pub fn regularized_truncated_trace(spec: &VertexSpec, trunc: &TruncatedBoson) -> Result<RegularizedTrace> {
    spec.validate()?;
    let n = trunc.modes;
    // modes rescaled by r^{−I}, r = min|β_j|, which leaves ⟨w|ρ^m v⟩ unchanged
    let r = spec.beta.iter().map(|b| b.norm()).fold(f64::INFINITY, f64::min);
    let r = if r.is_finite() && r > 0.0 { r } else { 1.0 };
    let scale: Vec<f64> = (1..=n).map(|i| r.powi(-(i as i32))).collect();
    let mut v = vec![zero(); n];
    for (a, &k) in spec.alpha.iter().zip(&spec.k) {
        for ((vi, c), s) in v.iter_mut().zip(minus_coordinates(*a, n)).zip(&scale) {
            *vi += c * (k as f64 * s);
        }
    }
    let mut w = vec![zero(); n];
    for (b, &l) in spec.beta.iter().zip(&spec.l) {
        for ((wi, c), s) in w.iter_mut().zip(plus_weights(*b, n)).zip(&scale) {
            *wi += c * (l as f64 / s);
        }
    }
    let damped = trunc.damped_shift(spec.gamma);
    let rho = DenseOperator::from_fn(n, |i, j| damped[(i, j)] * (scale[i] / scale[j]));
    let x = resolvent_pairing(&rho, Statistics::Bosonic, Order::CA, &w, &v)?;
    let mut term = one();
    let mut value = one();
    for k in 1..=trunc.degree {
        term = term * x / k as f64;
        value += term;
    }
    Ok(RegularizedTrace { value, exponent: x })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementStep {
    pub truncation: TruncatedBoson,
    pub value: C64,
    /// `|value − previous value|`; infinite for the first step.
    pub change: f64,
}

/// Evaluates a refinement sequence and fails unless successive changes shrink.
pub fn refine(spec: &VertexSpec, steps: &[TruncatedBoson]) -> Result<Vec<RefinementStep>> {
    let mut out: Vec<RefinementStep> = Vec::with_capacity(steps.len());
    for &truncation in steps {
        let value = regularized_truncated_trace(spec, &truncation)?.value;
        let change = out.last().map_or(f64::INFINITY, |p| (value - p.value).norm());
        if let Some(prev) = out.last() {
            if change > prev.change {
                return Err(Error::TruncationInsufficient(format!(
                    "change {change:.3e} at {truncation:?} exceeds previous {:.3e}",
                    prev.change
                )));
            }
        }
        out.push(RefinementStep {
            truncation,
            value,
            change,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn real(xs: &[f64]) -> Vec<C64> {
        xs.iter().map(|&x| c(x, 0.0)).collect()
    }

    #[test]
    fn admissibility_examples() {
        let perm = BarnesSpec::new(real(&[1.0, 2.0]), real(&[2.0, 1.0]), real(&[-1.0, -1.5, -2.0])).unwrap();
        assert!(barnes_converges(&perm).converges);
        let one_dir = BarnesSpec::new(real(&[1.0, 3.0]), real(&[2.0, 2.0]), real(&[-1.0])).unwrap();
        assert!(barnes_converges(&one_dir).converges);
        let two_dir = BarnesSpec::new(real(&[1.0, 3.0]), real(&[2.0, 2.0]), real(&[-1.0, -2.0])).unwrap();
        assert_eq!(barnes_converges(&two_dir).failing_q, Some(2));
        assert!(matches!(
            barnes_product(&two_dir, 64),
            Err(Error::NotAdmissible { q: 2 })
        ));
        assert!(matches!(barnes_integral(&two_dir), Err(Error::NotAdmissible { q: 2 })));
    }

    #[test]
    fn equal_lists_give_one() {
        let spec = BarnesSpec::new(real(&[-1.0, -2.0]), real(&[-1.0, -2.0]), real(&[-1.0])).unwrap();
        assert_eq!(barnes_product(&spec, 256).unwrap().value, one());
        assert_eq!(barnes_integral(&spec).unwrap().value, one());
    }

    #[test]
    fn depth_one_matches_gamma_ratio() {
        // Π_k (a1 − k)(a2 − k)/((b1 − k)(b2 − k)) = Γ(−b1)Γ(−b2)/(Γ(−a1)Γ(−a2))
        // with a = (−1.5, −2.5), b = (−1, −3): Γ(1)Γ(3)/(Γ(1.5)Γ(2.5)) = 16/(3π)
        let spec = BarnesSpec::new(real(&[-1.5, -2.5]), real(&[-1.0, -3.0]), real(&[-1.0])).unwrap();
        let expected = 16.0 / (3.0 * std::f64::consts::PI);
        let p = barnes_product(&spec, 4096).unwrap();
        assert!((p.value.re - expected).abs() < 1e-9, "{p:?}");
        let i = barnes_integral(&spec).unwrap();
        assert!((i.value.re - expected).abs() < 1e-10, "{i:?}");
    }

    #[test]
    fn product_and_integral_agree_on_random_specs() {
        let tree = SeedTree::new(7);
        for depth in [1, 2] {
            let mut rng = tree.stream(&format!("depth{depth}"));
            for _ in 0..3 {
                let spec = random_admissible_spec(&mut rng, depth).unwrap();
                let p = barnes_product(&spec, default_box(depth)).unwrap();
                let i = barnes_integral(&spec).unwrap();
                assert!(crate::rel_err(p.value, i.value) < 1e-6, "{spec:?}: {p:?} vs {i:?}");
            }
        }
    }

    #[test]
    fn hurwitz_zeta_values() {
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((hurwitz_zeta(2, 1.0) - z2).abs() < 1e-14);
        assert!((hurwitz_zeta(2, 3.0) - (z2 - 1.25)).abs() < 1e-14);
        assert!((hurwitz_zeta(4, 1.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-14);
    }

    fn sample_spec() -> VertexSpec {
        VertexSpec::new(
            vec![c(0.3, 0.1), c(-0.2, 0.05)],
            vec![1, -1],
            vec![c(2.0, 0.3), c(2.5, -0.4)],
            vec![1, -1],
            c(0.7, 0.2),
        )
        .unwrap()
    }

    #[test]
    fn vertex_product_tail_and_barnes_reduction() {
        let spec = sample_spec();
        let long = vertex_trace_ratio(&spec, 200_000).unwrap();
        let short = vertex_trace_ratio(&spec, 60).unwrap();
        assert!((short.value - long.value).norm() < 1e-12);
        assert!((short.partial - long.partial).norm() > 1e-6);
        let barnes = barnes_product(&spec.to_barnes(1).unwrap(), 4096).unwrap();
        assert!(crate::rel_err(barnes.value, short.value) < 1e-9);
        let trivial = VertexSpec::new(
            vec![c(0.1, 0.0), c(0.2, 0.0)],
            vec![0, 0],
            vec![c(1.0, 0.0)],
            vec![0],
            c(1.0, 0.0),
        )
        .unwrap();
        assert_eq!(vertex_trace_ratio(&trivial, 10).unwrap().value, one());
    }

    #[test]
    fn vertex_spec_errors() {
        let err = VertexSpec::new(vec![c(0.1, 0.0)], vec![1], vec![c(1.0, 0.0)], vec![0], c(1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("Σk"));
        // β − α − γ = 0
        let pole = VertexSpec::new(
            vec![c(0.0, 0.0), c(0.5, 0.0)],
            vec![1, -1],
            vec![c(1.0, 0.0), c(3.0, 0.0)],
            vec![1, -1],
            c(1.0, 0.0),
        )
        .unwrap();
        assert!(matches!(vertex_trace_ratio(&pole, 5), Err(Error::Pole { shell: 1 })));
    }

    #[test]
    fn shift_matrix_substitutes() {
        let gamma = c(0.3, -0.2);
        let s = shift_matrix(gamma, 6);
        let u = c(0.4, 0.7);
        let lhs = s.matvec(&minus_coordinates(u, 6));
        let rhs = minus_coordinates(u + gamma, 6);
        let offset = minus_coordinates(gamma, 6);
        for ((a, b), o) in lhs.iter().zip(&rhs).zip(&offset) {
            assert!((a - (b - o)).norm() < 1e-14);
        }
        assert_eq!(shift_matrix(zero(), 4), DenseOperator::identity(4));
        // mode 2 row: (u+γ)²/2 = u²/2 + γu + γ²/2
        assert!((s[(1, 0)] - gamma).norm() < 1e-15);
    }

    #[test]
    fn log_pairing_series() {
        let (u, v) = (c(0.2, 0.1), c(1.5, -0.3));
        let modes = 60;
        let pair = crate::fock::dot(&plus_weights(v, modes), &minus_coordinates(u, modes));
        assert!((pair + (one() - u / v).ln()).norm() < 1e-14);
        // shifting a difference ã_−(u) − ã_−(u') moves both arguments by γ
        let (gamma, u2) = (c(0.1, 0.05), c(-0.3, 0.2));
        let diff: Vec<C64> = minus_coordinates(u, modes)
            .iter()
            .zip(minus_coordinates(u2, modes))
            .map(|(a, b)| a - b)
            .collect();
        let shifted = crate::fock::dot(&plus_weights(v, modes), &shift_matrix(gamma, modes).matvec(&diff));
        let expected = ((one() - (u2 + gamma) / v) / (one() - (u + gamma) / v)).ln();
        assert!((shifted - expected).norm() < 1e-12);
    }

    #[test]
    fn eta_reduces_to_barnes() {
        let spec = EtaSpec {
            w: vec![c(0.1, 0.2), c(-0.3, 0.1)],
            k: vec![1, -1],
            z: vec![c(0.5, -0.1), c(0.2, 0.3)],
            p: vec![1, -1],
            hbar: c(0.6, 0.1),
            gamma: c(0.75, -0.25),
        };
        let direct = eta_trace_ratio(&spec, 400, 400).unwrap();
        let barnes = barnes_product(&spec.to_barnes().unwrap(), 1024);
        let barnes = barnes.unwrap();
        assert!((direct.value - barnes.value).norm() <= 2.0 * direct.tail_estimate + 1e-6);
        let trivial = EtaSpec { p: vec![0, 0], ..spec };
        assert_eq!(eta_trace_ratio(&trivial, 10, 10).unwrap().value, one());
    }

    #[test]
    fn regularized_trace_is_trivial_without_insertions() {
        let spec = VertexSpec::new(vec![c(0.1, 0.0)], vec![0], vec![c(1.0, 0.0)], vec![0], c(0.1, 0.0)).unwrap();
        let t = TruncatedBoson::new(8, 8, 0.9).unwrap();
        assert_eq!(regularized_truncated_trace(&spec, &t).unwrap().value, one());
        assert!(TruncatedBoson::new(8, 8, 1.0).is_err());
    }
}
