//! Graded and full Fock traces, computed by brute-force block assembly and by
//! closed forms, plus the operator traces `Tr ρ̄ A(w) C(v)` and
//! `Tr ρ̄ C(v) A(w)`.
//!
//! Closed forms: with `R = (1 ± ρ)^{-1}` (AC order) or `R = ρ(1 ± ρ)^{-1}`
//! (CA order), the trace of a monomial pair equals `Tr ρ̄ · det/per R[W, V]`.
//! The sign is `+` for fermions, `−` for bosons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{annihilate_monomial, graded_dimension, multiply_monomials, InducedBlocks, Multivector, Statistics};
use crate::linalg::{
    adjugate, determinant, permanent, power_traces, shifted_identity, symmetric_from_power, symmetric_sequence,
    DenseOperator, Resolvent, Sign,
};
use crate::{rel_err, C64};

/// Bosonic sums stop at this grade even if the tail bound asks for more.
pub const MAX_BOSONIC_CUTOFF: usize = 400;

/// Absolute tail target used to pick the bosonic cutoff automatically.
pub const DEFAULT_TAIL_TARGET: f64 = 1e-10;

/// Operator order inside the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    /// `ρ̄ A(w) C(v)`
    AC,
    /// `ρ̄ C(v) A(w)`
    CA,
}

impl Order {
    pub fn name(self) -> &'static str {
        match self {
            Order::AC => "AC",
            Order::CA => "CA",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceRequest {
    pub rho: DenseOperator,
    pub w: Multivector,
    pub v: Multivector,
    pub statistics: Statistics,
    pub order: Order,
    /// Highest grade summed for bosons; `None` picks it from the tail bound.
    pub bosonic_cutoff: Option<usize>,
}

impl TraceRequest {
    pub fn new(rho: DenseOperator, w: Multivector, v: Multivector, order: Order) -> Result<Self> {
        let statistics = v.statistics();
        if w.statistics() != statistics {
            return Err(Error::StatisticsMismatch);
        }
        for d in [w.dim(), v.dim()] {
            if d != rho.dim() {
                return Err(Error::DimensionMismatch {
                    left: rho.dim(),
                    right: d,
                });
            }
        }
        Ok(Self {
            rho,
            w,
            v,
            statistics,
            order,
            bosonic_cutoff: None,
        })
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.bosonic_cutoff = Some(cutoff);
        self
    }

    /// Cutoff and the corresponding tail bound (0 for fermions).
    pub fn truncation(&self) -> Result<(usize, f64)> {
        if self.statistics == Statistics::Fermionic {
            return Ok((self.rho.dim(), 0.0));
        }
        let scale = pairing_scale(&self.w, &self.v);
        let extra = self.v.max_grade().max(self.w.max_grade());
        let bound = BosonicTail::new(&self.rho, extra, scale)?;
        let cutoff = match self.bosonic_cutoff {
            Some(d) => d.max(extra),
            None => bound.auto_cutoff(DEFAULT_TAIL_TARGET).max(extra),
        };
        Ok((cutoff, bound.tail(cutoff)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub brute_force: C64,
    pub closed_form: C64,
    pub tail_bound: f64,
    pub relative_error: f64,
    pub cutoff: usize,
}

/// Tail of `Σ_n C(n+m−1, n) s^n` scaled by a prefactor, where `s` bounds
/// both the spectral radius and `‖ρ‖₂`.
#[derive(Debug, Clone, Copy)]
pub struct BosonicTail {
    s: f64,
    m: usize,
    prefactor: f64,
    radius: f64,
}

impl BosonicTail {
    /// `extra_grade` is the grade of the inserted operators.
    pub fn new(rho: &DenseOperator, extra_grade: usize, prefactor: f64) -> Result<Self> {
        let radius = rho.spectral_radius_estimate();
        if radius >= 1.0 {
            return Err(Error::Divergent { radius });
        }
        let fact: f64 = (1..=extra_grade).map(|j| j as f64).product();
        Ok(Self {
            s: rho.frobenius_norm(),
            m: rho.dim() + extra_grade,
            prefactor: prefactor * fact,
            radius,
        })
    }

    fn term(&self, n: usize, s: f64) -> f64 {
        // C(n+m−1, n) s^n in logs
        let m = self.m as f64;
        let log_binom = ln_gamma(n as f64 + m) - ln_gamma(n as f64 + 1.0) - ln_gamma(m);
        (log_binom + n as f64 * s.ln()).exp()
    }

    fn tail_with(&self, cutoff: usize, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        let mut n = cutoff + 1;
        loop {
            let t = self.term(n, s);
            total += t;
            // terms decrease once n > (m−1)s/(1−s)
            let ratio = (n as f64 + self.m as f64) / (n as f64 + 1.0) * s;
            if ratio < 1.0 && t * ratio / (1.0 - ratio) < 1e-3 * total.max(1e-300) {
                total += t * ratio / (1.0 - ratio);
                break;
            }
            if n > cutoff + 100_000 {
                return f64::INFINITY;
            }
            n += 1;
        }
        self.prefactor * total
    }

    /// Rigorous bound on everything above grade `cutoff`; infinite when
    /// `‖ρ‖_F ≥ 1`.
    pub fn tail(&self, cutoff: usize) -> f64 {
        self.tail_with(cutoff, self.s)
    }

    /// Smallest cutoff whose tail is below `target` (using the spectral
    /// radius estimate when the norm bound is useless).
    pub fn auto_cutoff(&self, target: f64) -> usize {
        let s = if self.s < 1.0 { self.s } else { self.radius };
        let mut d = 0;
        while d < MAX_BOSONIC_CUTOFF && self.tail_with(d, s) > target {
            d += if d < 16 { 1 } else { 4 };
        }
        d.min(MAX_BOSONIC_CUTOFF)
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn pairing_scale(w: &Multivector, v: &Multivector) -> f64 {
    let mut total = 0.0;
    for (kw, cw) in w.terms() {
        for (kv, cv) in v.terms() {
            if kw.len() == kv.len() {
                total += cw.norm() * cv.norm();
            }
        }
    }
    total
}

/// `Tr ρ̄` on grade `n`: diagonal sum of the induced block.
pub fn graded_trace(rho: &DenseOperator, n: usize, statistics: Statistics) -> C64 {
    match InducedBlocks::new(rho, statistics).nth(n) {
        Some(block) => block.trace(),
        None => C64::new(0.0, 0.0),
    }
}

/// Graded traces for all grades `0..=max_grade`, sharing one block sweep.
pub fn graded_traces(rho: &DenseOperator, max_grade: usize, statistics: Statistics) -> Vec<C64> {
    let mut out: Vec<C64> = InducedBlocks::new(rho, statistics)
        .take(max_grade + 1)
        .map(|b| b.trace())
        .collect();
    out.resize(max_grade + 1, C64::new(0.0, 0.0));
    out
}

/// `Tr ρ̄` on grade `n` from power traces (cycle-index partition sum).
pub fn graded_trace_cycle_index(rho: &DenseOperator, n: usize, statistics: Statistics) -> C64 {
    let p = power_traces(rho, n.max(1));
    symmetric_from_power(&p, n, statistics).expect("enough power traces")
}

/// Full Fock trace: exact for fermions, truncated at `cutoff` for bosons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockTrace {
    pub value: C64,
    pub tail_bound: f64,
    pub cutoff: usize,
}

pub fn fock_trace(rho: &DenseOperator, statistics: Statistics, cutoff: Option<usize>) -> Result<FockTrace> {
    match statistics {
        Statistics::Fermionic => {
            let n = rho.dim();
            Ok(FockTrace {
                value: graded_traces(rho, n, statistics).into_iter().sum(),
                tail_bound: 0.0,
                cutoff: n,
            })
        }
        Statistics::Bosonic => {
            let tail = BosonicTail::new(rho, 0, 1.0)?;
            let d = cutoff.unwrap_or_else(|| tail.auto_cutoff(DEFAULT_TAIL_TARGET));
            Ok(FockTrace {
                value: graded_traces(rho, d, statistics).into_iter().sum(),
                tail_bound: tail.tail(d),
                cutoff: d,
            })
        }
    }
}

/// `det(1+ρ)` for fermions, `1/det(1−ρ)` for bosons.
pub fn fock_trace_exact(rho: &DenseOperator, statistics: Statistics) -> Result<C64> {
    match statistics {
        Statistics::Fermionic => Ok(determinant(&shifted_identity(rho, Sign::Plus))),
        Statistics::Bosonic => {
            let radius = rho.spectral_radius_estimate();
            if radius >= 1.0 {
                return Err(Error::Divergent { radius });
            }
            Ok(determinant(&shifted_identity(rho, Sign::Minus)).inv())
        }
    }
}

/// Brute-force traces of several operator insertions over the same `ρ`,
/// summed over grades `0..=cutoff`. Each grade block is built once.
pub fn bruteforce_traces(
    rho: &DenseOperator,
    statistics: Statistics,
    cutoff: usize,
    insertions: &[(&Multivector, &Multivector, Order)],
) -> Result<Vec<C64>> {
    for (w, v, _) in insertions {
        for x in [*w, *v] {
            if x.statistics() != statistics {
                return Err(Error::StatisticsMismatch);
            }
            if x.dim() != rho.dim() {
                return Err(Error::DimensionMismatch {
                    left: rho.dim(),
                    right: x.dim(),
                });
            }
        }
    }
    type Terms = Vec<(Vec<usize>, C64)>;
    let terms = |m: &Multivector| -> Terms { m.terms().map(|(k, c)| (k.to_vec(), c)).collect() };
    let prepared: Vec<(Terms, Terms, Order)> = insertions.iter().map(|(w, v, o)| (terms(w), terms(v), *o)).collect();
    let mut totals = vec![C64::new(0.0, 0.0); insertions.len()];
    let max_grade = match statistics {
        Statistics::Fermionic => rho.dim(),
        Statistics::Bosonic => cutoff,
    };
    for block in InducedBlocks::new(rho, statistics).take(max_grade + 1) {
        for (slot, (w, v, order)) in totals.iter_mut().zip(&prepared) {
            for (row, key) in block.basis.iter().enumerate() {
                for (kw, cw) in w {
                    if kw.len() > key.len() + v.iter().map(|t| t.0.len()).max().unwrap_or(0) {
                        continue;
                    }
                    for (kv, cv) in v {
                        if kw.len() != kv.len() {
                            continue;
                        }
                        let image = match order {
                            Order::AC => multiply_monomials(kv, key, statistics).and_then(|(m, s1)| {
                                annihilate_monomial(kw, &m, statistics).map(|(r, s2)| (r, s1 * s2))
                            }),
                            Order::CA => annihilate_monomial(kw, key, statistics)
                                .and_then(|(m, s1)| multiply_monomials(kv, &m, statistics).map(|(r, s2)| (r, s1 * s2))),
                        };
                        if let Some((k, s)) = image {
                            let col = block.index[&k];
                            *slot += block.entry(row, col) * cw * cv * s;
                        }
                    }
                }
            }
        }
    }
    Ok(totals)
}

/// Left-hand side of the trace identities, by explicit block assembly.
pub fn trace_op_bruteforce(req: &TraceRequest) -> Result<C64> {
    let (cutoff, _) = req.truncation()?;
    let out = bruteforce_traces(&req.rho, req.statistics, cutoff, &[(&req.w, &req.v, req.order)])?;
    Ok(out[0])
}

/// `Σ` over equal-grade term pairs of `c_w c_v · det/per R[W, V]`.
fn pairing_with(r: &DenseOperator, w: &Multivector, v: &Multivector, statistics: Statistics) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for (kw, cw) in w.terms() {
        for (kv, cv) in v.terms() {
            if kw.len() != kv.len() {
                continue;
            }
            let sub = r.select(kw, kv)?;
            let f = match statistics {
                Statistics::Fermionic => determinant(&sub),
                Statistics::Bosonic => permanent(&sub)?,
            };
            total += cw * cv * f;
        }
    }
    Ok(total)
}

/// `R = (1±ρ)^{-1}` (AC) or `ρ(1±ρ)^{-1}` (CA).
pub fn resolvent_kernel(rho: &DenseOperator, statistics: Statistics, order: Order) -> Result<DenseOperator> {
    let res = Resolvent::new(rho, Sign::for_statistics(statistics))?;
    Ok(match order {
        Order::AC => res.inverse().clone(),
        Order::CA => rho.matmul(res.inverse()),
    })
}

/// Right-hand side of the trace identities.
pub fn trace_op_closed_form(req: &TraceRequest) -> Result<C64> {
    let stats = req.statistics;
    match resolvent_kernel(&req.rho, stats, req.order) {
        Ok(r) => Ok(fock_trace_exact(&req.rho, stats)? * pairing_with(&r, &req.w, &req.v, stats)?),
        Err(Error::SingularResolvent { .. })
            if stats == Statistics::Fermionic && req.w.max_grade() <= 1 && req.v.max_grade() <= 1 =>
        {
            // Tr ρ̄ · R = adj(1+ρ) (AC) or ρ adj(1+ρ) (CA) on grade 1
            let shifted = shifted_identity(&req.rho, Sign::Plus);
            let adj = adjugate(&shifted);
            let r1 = match req.order {
                Order::AC => adj,
                Order::CA => req.rho.matmul(&adj),
            };
            let det = determinant(&shifted);
            let grade0 = req.w.coefficient(&[]) * req.v.coefficient(&[]);
            let grade0 = if req.order == Order::AC {
                grade0 * det
            } else {
                C64::new(0.0, 0.0)
            };
            Ok(grade0 + pairing_with(&r1, &req.w.grade_part(1), &req.v.grade_part(1), stats)?)
        }
        Err(e) => Err(e),
    }
}

/// Both sides with the bosonic tail bound.
pub fn compare(req: &TraceRequest) -> Result<TraceReport> {
    let (cutoff, tail_bound) = req.truncation()?;
    let brute_force = trace_op_bruteforce(req)?;
    let closed_form = trace_op_closed_form(req)?;
    Ok(TraceReport {
        brute_force,
        closed_form,
        tail_bound,
        relative_error: rel_err(brute_force, closed_form),
        cutoff,
    })
}

/// Fixed-grade trace `Tr_n ρ̄ A(w₁…w_k) C(v₁…v_k)` through the expansion
/// `Σ_{r+Σq_j=n} Tr_r ρ̄ · det/per[⟨w_i|(∓ρ)^{q_j} v_j⟩]`
/// (`−ρ` for fermions, `+ρ` for bosons).
pub fn graded_decomposition(
    rho: &DenseOperator,
    ws: &[Vec<C64>],
    vs: &[Vec<C64>],
    n: usize,
    statistics: Statistics,
) -> Result<C64> {
    Ok(graded_decomposition_upto(rho, ws, vs, n, statistics)?[n])
}

/// [`graded_decomposition`] for every grade `0..=max_n` at once.
pub fn graded_decomposition_upto(
    rho: &DenseOperator,
    ws: &[Vec<C64>],
    vs: &[Vec<C64>],
    max_n: usize,
    statistics: Statistics,
) -> Result<Vec<C64>> {
    if ws.len() != vs.len() {
        return Err(Error::LengthMismatch {
            left: ws.len(),
            right: vs.len(),
        });
    }
    let dim = rho.dim();
    if let Some(bad) = ws.iter().chain(vs).find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: bad.len(),
        });
    }
    let k = vs.len();
    let step = match statistics {
        Statistics::Fermionic => rho.scale(C64::new(-1.0, 0.0)),
        Statistics::Bosonic => rho.clone(),
    };
    // pairs[q][i][j] = ⟨w_i|step^q v_j⟩
    let mut cols: Vec<Vec<C64>> = vs.to_vec();
    let mut pairs = Vec::with_capacity(max_n + 1);
    for _ in 0..=max_n {
        pairs.push(
            ws.iter()
                .map(|w| cols.iter().map(|c| crate::fock::dot(w, c)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        cols = cols.iter().map(|c| step.matvec(c)).collect();
    }
    let traces = symmetric_sequence(&power_traces(rho, max_n.max(1)), max_n, statistics)?;
    // by_used[s] = Σ over q-tuples with Σq = s of det/per
    let mut by_used = vec![C64::new(0.0, 0.0); max_n + 1];
    let mut qs = vec![0usize; k];
    compositions(&mut qs, 0, max_n, &mut |qs| {
        let m = DenseOperator::from_fn(k, |i, j| pairs[qs[j]][i][j]);
        let f = match statistics {
            Statistics::Fermionic => Ok(determinant(&m)),
            Statistics::Bosonic => permanent(&m),
        }?;
        by_used[qs.iter().sum::<usize>()] += f;
        Ok(())
    })?;
    Ok((0..=max_n)
        .map(|n| (0..=n).map(|s| traces[n - s] * by_used[s]).sum())
        .collect())
}

/// Visits every tuple with entries summing to at most `budget`.
fn compositions(
    qs: &mut Vec<usize>,
    pos: usize,
    budget: usize,
    f: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if pos == qs.len() {
        return f(qs);
    }
    for q in 0..=budget {
        qs[pos] = q;
        compositions(qs, pos + 1, budget - q, f)?;
    }
    qs[pos] = 0;
    Ok(())
}

/// `exp⟨w|(1−ρ)^{-1}v⟩`: the bosonic trace ratio of `e^{A(w)} e^{C(v)}`.
pub fn exp_trace_ratio(rho: &DenseOperator, w: &[C64], v: &[C64]) -> Result<C64> {
    Ok(resolvent_pairing(rho, Statistics::Bosonic, Order::AC, w, v)?.exp())
}

/// `⟨w|R v⟩` for grade-1 `w`, `v` with `R` as in [`resolvent_kernel`].
pub fn resolvent_pairing(
    rho: &DenseOperator,
    statistics: Statistics,
    order: Order,
    w: &[C64],
    v: &[C64],
) -> Result<C64> {
    if w.len() != rho.dim() || v.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: w.len().max(v.len()),
        });
    }
    let res = Resolvent::new(rho, Sign::for_statistics(statistics))?;
    let x = res.apply(v);
    let x = match order {
        Order::AC => x,
        Order::CA => rho.matvec(&x),
    };
    Ok(crate::fock::dot(w, &x))
}

/// `(1/n!) Σ_{l ∈ [N]^n} det/per[⟨ẽ_{l_j}|ρ e_{l_i}⟩]`.
pub fn wick_gram_trace(rho: &DenseOperator, n: usize, statistics: Statistics) -> Result<C64> {
    let dim = rho.dim();
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if dim == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut total = C64::new(0.0, 0.0);
    let mut l = vec![0usize; n];
    loop {
        let sub = DenseOperator::from_fn(n, |i, j| rho[(l[j], l[i])]);
        total += match statistics {
            Statistics::Fermionic => determinant(&sub),
            Statistics::Bosonic => permanent(&sub)?,
        };
        let mut i = 0;
        loop {
            if i == n {
                let fact: f64 = (1..=n).map(|j| j as f64).product();
                return Ok(total / fact);
            }
            l[i] += 1;
            if l[i] < dim {
                break;
            }
            l[i] = 0;
            i += 1;
        }
    }
}

/// `(1/k!) k^{k/2} (Σ_i ‖row_i‖)^k`, bounding `|Tr_{Λ^k} ρ̄|`.
pub fn hadamard_bound(rho: &DenseOperator, k: usize) -> f64 {
    let s: f64 = (0..rho.dim())
        .map(|i| rho.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .sum();
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    (k as f64).powf(k as f64 / 2.0) * s.powi(k as i32) / fact
}

/// Dimension of the grade-`n` block; re-exported for reports.
pub fn block_dimension(dim: usize, n: usize, statistics: Statistics) -> usize {
    graded_dimension(dim, n, statistics)
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: Statistics = Statistics::Fermionic;
    const B: Statistics = Statistics::Bosonic;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn scalar(x: f64) -> DenseOperator {
        DenseOperator::diagonal(&[c(x)])
    }

    #[test]
    fn graded_trace_examples() {
        let rho = scalar(0.3);
        assert_eq!(graded_trace(&rho, 0, F), c(1.0));
        let total: C64 = (0..=1).map(|n| graded_trace(&rho, n, F)).sum();
        assert!((total - c(1.3)).norm() < 1e-15);
        let d = DenseOperator::diagonal(&[c(1.0), c(2.0)]);
        assert!((fock_trace(&d, F, None).unwrap().value - c(6.0)).norm() < 1e-14);
        assert_eq!(graded_trace(&d, 3, F), c(0.0));
    }

    #[test]
    fn bosonic_fock_trace_one_dim() {
        let ft = fock_trace(&scalar(0.5), B, None).unwrap();
        assert!((ft.value - c(2.0)).norm() <= ft.tail_bound + 1e-14);
        assert!(ft.tail_bound < 1e-9);
        let d = DenseOperator::diagonal(&[c(0.5), c(1.0 / 3.0)]);
        let ft = fock_trace(&d, B, None).unwrap();
        assert!((ft.value - c(3.0)).norm() <= ft.tail_bound + 1e-12);
        assert!(matches!(
            fock_trace(&scalar(1.0), B, None),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn fermionic_one_dim_operator_trace() {
        let rho = scalar(0.7);
        let w = Multivector::from_vector(F, &[c(1.0)]);
        let v = Multivector::from_vector(F, &[c(1.0)]);
        let req = TraceRequest::new(rho, w, v, Order::AC).unwrap();
        assert!((trace_op_bruteforce(&req).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((trace_op_closed_form(&req).unwrap() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn bosonic_one_dim_derivative_trace() {
        let lambda = 0.5;
        for k in 0..=4usize {
            let w = Multivector::monomial(B, 1, &vec![0; k]).unwrap();
            let v = w.clone();
            let req = TraceRequest::new(scalar(lambda), w, v, Order::AC).unwrap();
            let fact: f64 = (1..=k).map(|j| j as f64).product();
            let expect = c(fact / (1.0 - lambda).powi(k as i32 + 1));
            let rep = compare(&req).unwrap();
            assert!((rep.closed_form - expect).norm() < 1e-12 * expect.norm());
            assert!((rep.brute_force - expect).norm() < rep.tail_bound + 1e-12 * expect.norm());
        }
    }

    #[test]
    fn grade_mismatch_traces_vanish() {
        let rho = DenseOperator::from_real_rows(&[vec![0.1, 0.2], vec![-0.3, 0.2]]).unwrap();
        let w = Multivector::monomial(F, 2, &[0]).unwrap();
        let v = Multivector::monomial(F, 2, &[0, 1]).unwrap();
        let req = TraceRequest::new(rho, w, v, Order::AC).unwrap();
        assert_eq!(trace_op_bruteforce(&req).unwrap(), c(0.0));
        assert_eq!(trace_op_closed_form(&req).unwrap(), c(0.0));
    }

    #[test]
    fn singular_resolvent_adjugate_fallback() {
        let rho = DenseOperator::from_real_rows(&[vec![-1.0, 0.3], vec![0.0, 0.5]]).unwrap();
        for order in [Order::AC, Order::CA] {
            let w = Multivector::from_vector(F, &[c(0.4), c(1.0)]);
            let v = Multivector::from_vector(F, &[c(1.0), c(-0.2)]);
            let req = TraceRequest::new(rho.clone(), w, v, order).unwrap();
            let rep = compare(&req).unwrap();
            assert!(rep.relative_error < 1e-12, "{order:?}: {rep:?}");
        }
    }

    #[test]
    fn wick_gram_examples() {
        let rho = DenseOperator::from_real_rows(&[vec![0.1, 0.7], vec![-0.4, 0.9]]).unwrap();
        assert!((wick_gram_trace(&rho, 1, F).unwrap() - rho.trace()).norm() < 1e-15);
        assert!((wick_gram_trace(&rho, 2, F).unwrap() - determinant(&rho)).norm() < 1e-15);
        let b = wick_gram_trace(&rho, 2, B).unwrap();
        assert!((b - graded_trace(&rho, 2, B)).norm() < 1e-14);
    }

    #[test]
    fn exp_ratio_trivial_cases() {
        let w = vec![c(0.5), c(1.0)];
        let v = vec![c(2.0), c(-1.0)];
        let zero = DenseOperator::zeros(2);
        assert!((exp_trace_ratio(&zero, &w, &v).unwrap() - crate::fock::dot(&w, &v).exp()).norm() < 1e-15);
        let r = DenseOperator::from_real_rows(&[vec![0.1, 0.2], vec![0.0, 0.3]]).unwrap();
        assert_eq!(exp_trace_ratio(&r, &w, &[c(0.0), c(0.0)]).unwrap(), c(1.0));
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        for n in 1..20usize {
            let f: f64 = (1..n).map(|j| j as f64).product();
            assert!((ln_gamma(n as f64) - f.ln()).abs() < 1e-12 * f.ln().abs().max(1.0));
        }
    }
}
