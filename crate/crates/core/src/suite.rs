//! Seeded identity harness: evaluates every trace identity on pseudo-random
//! inputs and reports one row per (identity, statistics, N, grade).

use serde::Serialize;

use crate::error::Result;
use crate::fock::{annihilate, create, pair_multivectors, Multivector, Statistics};
use crate::linalg::{determinant, shifted_identity, DenseOperator, Sign};
use crate::rng::{complex_matrix, complex_vector, matrix_with_norm, SeedTree};
use crate::trace::{
    bruteforce_traces, fock_trace, fock_trace_exact, graded_decomposition_upto, graded_trace_cycle_index,
    graded_traces, hadamard_bound, trace_op_closed_form, wick_gram_trace, Order, TraceRequest,
};
use crate::{rel_err, C64};

/// Largest `N^grade` for which the repeated-index Wick sum is evaluated.
const WICK_BUDGET: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub identity: String,
    pub statistics: Statistics,
    #[serde(rename = "N")]
    pub n: usize,
    pub grade: usize,
    pub value: C64,
    pub reference: C64,
    pub rel_err: f64,
    /// Allowed `|value − reference|`, including any truncation tail.
    pub allowed: f64,
    pub pass: bool,
}

/// Tolerances per identity family; `override_all` replaces every one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteTolerances {
    pub fermionic_trace: f64,
    pub bosonic_trace: f64,
    pub cycle_index: f64,
    pub algebra: f64,
    pub override_all: Option<f64>,
}

impl Default for SuiteTolerances {
    fn default() -> Self {
        Self {
            fermionic_trace: 1e-10,
            bosonic_trace: 1e-8,
            cycle_index: 1e-9,
            algebra: 1e-12,
            override_all: None,
        }
    }
}

impl SuiteTolerances {
    fn pick(&self, tol: f64) -> f64 {
        self.override_all.unwrap_or(tol)
    }

    fn trace(&self, s: Statistics) -> f64 {
        self.pick(match s {
            Statistics::Fermionic => self.fermionic_trace,
            Statistics::Bosonic => self.bosonic_trace,
        })
    }
}

struct Rows<'a> {
    out: Vec<SuiteRow>,
    statistics: Statistics,
    n: usize,
    grade: usize,
    tol: &'a SuiteTolerances,
}

impl Rows<'_> {
    /// Passes when `|value − reference| ≤ tail + tol·max(1, |reference|)`.
    fn push(&mut self, identity: &str, value: C64, reference: C64, tol: f64, tail: f64) {
        let allowed = tail + tol * reference.norm().max(1.0);
        let diff = (value - reference).norm();
        self.out.push(SuiteRow {
            identity: identity.to_string(),
            statistics: self.statistics,
            n: self.n,
            grade: self.grade,
            value,
            reference,
            rel_err: rel_err(value, reference),
            allowed,
            pass: diff <= allowed,
        });
    }
}

impl Rows<'_> {
    /// Passes when `value ≤ bound`.
    fn push_bound(&mut self, identity: &str, value: f64, bound: f64) {
        self.out.push(SuiteRow {
            identity: identity.to_string(),
            statistics: self.statistics,
            n: self.n,
            grade: self.grade,
            value: C64::new(value, 0.0),
            reference: C64::new(bound, 0.0),
            rel_err: (value - bound).max(0.0) / bound.max(1.0),
            allowed: bound,
            pass: value <= bound,
        });
    }
}

fn random_rho(tree: &SeedTree, statistics: Statistics, n: usize) -> DenseOperator {
    let mut rng = tree.stream("rho");
    match statistics {
        Statistics::Fermionic => complex_matrix(&mut rng, n, 0.5),
        Statistics::Bosonic => matrix_with_norm(&mut rng, n, 0.5),
    }
}

/// Runs every identity on each `(statistics, N, grade)` cell.
pub fn identity_suite(
    seed: u64,
    n_list: &[usize],
    grade_list: &[usize],
    statistics_list: &[Statistics],
    tol: &SuiteTolerances,
) -> Result<Vec<SuiteRow>> {
    let root = SeedTree::new(seed);
    let mut rows = Vec::new();
    for &statistics in statistics_list {
        for &n in n_list {
            if n == 0 {
                continue;
            }
            let cell = root.child(statistics.name()).child(&format!("N{n}"));
            let rho = random_rho(&cell, statistics, n);
            rows.extend(whole_space_rows(&rho, statistics, n, tol)?);
            for &grade in grade_list {
                if statistics == Statistics::Fermionic && grade > n {
                    continue;
                }
                let tree = cell.child(&format!("grade{grade}"));
                rows.extend(grade_rows(&tree, &rho, statistics, n, grade, tol)?);
            }
        }
    }
    rows.sort_by(|a, b| (&a.identity, a.statistics, a.n, a.grade).cmp(&(&b.identity, b.statistics, b.n, b.grade)));
    Ok(rows)
}

fn whole_space_rows(
    rho: &DenseOperator,
    statistics: Statistics,
    n: usize,
    tol: &SuiteTolerances,
) -> Result<Vec<SuiteRow>> {
    let mut rows = Rows {
        out: Vec::new(),
        statistics,
        n,
        grade: 0,
        tol,
    };
    let ft = fock_trace(rho, statistics, None)?;
    let exact = fock_trace_exact(rho, statistics)?;
    rows.push(
        "fock_trace_determinant",
        ft.value,
        exact,
        rows.tol.trace(statistics),
        ft.tail_bound,
    );
    if statistics == Statistics::Fermionic {
        let traces = graded_traces(rho, n, statistics);
        for (k, t) in traces.iter().enumerate() {
            rows.grade = k;
            let bound = hadamard_bound(rho, k);
            rows.push_bound("hadamard_bound", t.norm(), bound);
        }
        rows.grade = 0;
        let det = determinant(&shifted_identity(rho, Sign::Plus));
        rows.push(
            "graded_sum_determinant",
            traces.iter().sum(),
            det,
            rows.tol.trace(statistics),
            0.0,
        );
    }
    Ok(rows.out)
}

fn grade_rows(
    tree: &SeedTree,
    rho: &DenseOperator,
    statistics: Statistics,
    n: usize,
    grade: usize,
    tol: &SuiteTolerances,
) -> Result<Vec<SuiteRow>> {
    let mut rows = Rows {
        out: Vec::new(),
        statistics,
        n,
        grade,
        tol,
    };
    let cyc_tol = tol.pick(tol.cycle_index);
    let alg_tol = tol.pick(tol.algebra);
    let trace_tol = tol.trace(statistics);

    let diag = graded_traces(rho, grade, statistics)[grade];
    rows.push(
        "cycle_index",
        graded_trace_cycle_index(rho, grade, statistics),
        diag,
        cyc_tol,
        0.0,
    );
    if n.checked_pow(grade as u32).is_some_and(|c| c <= WICK_BUDGET) {
        rows.push(
            "wick_gram_trace",
            wick_gram_trace(rho, grade, statistics)?,
            diag,
            cyc_tol,
            0.0,
        );
    }

    let mut rng = tree.stream("insertions");
    let ws: Vec<Vec<C64>> = (0..grade).map(|_| complex_vector(&mut rng, n, 1.0)).collect();
    let vs: Vec<Vec<C64>> = (0..grade).map(|_| complex_vector(&mut rng, n, 1.0)).collect();
    let w = Multivector::from_factors(statistics, n, &ws)?;
    let v = Multivector::from_factors(statistics, n, &vs)?;

    let ac = TraceRequest::new(rho.clone(), w.clone(), v.clone(), Order::AC)?;
    let ca = TraceRequest::new(rho.clone(), w.clone(), v.clone(), Order::CA)?;
    let (cutoff, tail) = ac.truncation()?;
    let brute = bruteforce_traces(rho, statistics, cutoff, &[(&w, &v, Order::AC), (&w, &v, Order::CA)])?;
    rows.push(
        "trace_identity_ac",
        brute[0],
        trace_op_closed_form(&ac)?,
        trace_tol,
        tail,
    );
    rows.push(
        "trace_identity_ca",
        brute[1],
        trace_op_closed_form(&ca)?,
        trace_tol,
        tail,
    );
    let decomposed: C64 = graded_decomposition_upto(rho, &ws, &vs, cutoff, statistics)?
        .into_iter()
        .sum();
    rows.push("graded_decomposition", decomposed, brute[0], trace_tol, tail);

    // (anti)commutation and duality on a random test element of this grade
    let x = Multivector::from_factors(
        statistics,
        n,
        &(0..grade).map(|_| complex_vector(&mut rng, n, 1.0)).collect::<Vec<_>>(),
    )?;
    let w1 = Multivector::from_vector(statistics, &complex_vector(&mut rng, n, 1.0));
    let v1 = Multivector::from_vector(statistics, &complex_vector(&mut rng, n, 1.0));
    let ac_x = annihilate(&w1, &create(&v1, &x)?)?;
    let ca_x = create(&v1, &annihilate(&w1, &x)?)?;
    let combined = match statistics {
        Statistics::Fermionic => ac_x.add(&ca_x)?,
        Statistics::Bosonic => ac_x.add(&ca_x.scale(C64::new(-1.0, 0.0)))?,
    };
    let expected = x.scale(pair_multivectors(&w1, &v1)?);
    let defect = combined.add(&expected.scale(C64::new(-1.0, 0.0)))?;
    let name = match statistics {
        Statistics::Fermionic => "anticommutator",
        Statistics::Bosonic => "commutator",
    };
    rows.push(
        name,
        C64::new(defect.max_abs(), 0.0),
        C64::new(0.0, 0.0),
        alg_tol * expected.max_abs().max(1.0),
        0.0,
    );

    // ⟨y|A(w)x'⟩ = ⟨w·y|x'⟩ with w of this grade, y of grade 1
    let y = Multivector::from_vector(statistics, &complex_vector(&mut rng, n, 1.0));
    let xp = create(&v1, &x)?;
    let lhs = pair_multivectors(&y, &annihilate(&w, &xp)?)?;
    let rhs = pair_multivectors(&create(&w, &y)?, &xp)?;
    rows.push("annihilation_duality", lhs, rhs, alg_tol, 0.0);
    Ok(rows.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_lists_give_empty_report() {
        let rows = identity_suite(42, &[], &[0, 1], &Statistics::ALL, &SuiteTolerances::default()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let tol = SuiteTolerances::default();
        let a = identity_suite(42, &[1, 2, 3], &[0, 1, 2], &Statistics::ALL, &tol).unwrap();
        let b = identity_suite(42, &[1, 2, 3], &[0, 1, 2], &Statistics::ALL, &tol).unwrap();
        assert_eq!(a, b);
        for row in &a {
            assert!(row.pass, "{row:?}");
        }
        let strict = SuiteTolerances {
            override_all: Some(1e-30),
            ..tol
        };
        let c = identity_suite(42, &[3], &[2], &[Statistics::Fermionic], &strict).unwrap();
        assert!(c.iter().any(|r| !r.pass));
    }
}
