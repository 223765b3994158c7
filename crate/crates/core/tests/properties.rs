use focktrace::fock::{annihilate, create, graded_basis, induce, pair_multivectors, wick_pair};
use focktrace::fredholm::{fredholm_determinant, fredholm_minor, fredholm_permanent, KernelKind, KernelSpec};
use focktrace::genfun::{compose_kernels, kernel_of, operator_of, residue_trace};
use focktrace::linalg::{determinant, permanent, DenseOperator};
use focktrace::quadrature::gauss_legendre;
use focktrace::rng::{complex_matrix, complex_vector, SeedTree};
use focktrace::trace::{graded_trace, graded_trace_cycle_index};
use focktrace::vertex::{eta_trace_ratio, vertex_trace_ratio, EtaSpec, VertexSpec};
use focktrace::{Multivector, Statistics, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn statistics() -> impl Strategy<Value = Statistics> {
    prop_oneof![Just(Statistics::Fermionic), Just(Statistics::Bosonic)]
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

fn max_diff(a: &Multivector, b: &Multivector) -> f64 {
    a.add(&b.scale(c(-1.0, 0.0))).unwrap().max_abs()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn parity(p: &[usize]) -> f64 {
    let inversions = (0..p.len())
        .flat_map(|i| (i + 1..p.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| p[i] > p[j])
        .count();
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A random element of grades `0..=max_grade`.
fn random_element(seed: u64, statistics: Statistics, dim: usize, max_grade: usize) -> Multivector {
    let mut rng = SeedTree::new(seed).stream("element");
    let mut x = Multivector::zero(statistics, dim);
    for g in 0..=max_grade {
        for idx in graded_basis(dim, g, statistics) {
            let coeff = complex_vector(&mut rng, 1, 1.0)[0];
            let mono = Multivector::monomial(statistics, dim, idx.indices())
                .unwrap()
                .scale(coeff);
            x = x.add(&mono).unwrap();
        }
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_relations(seed in any::<u64>(), dim in 1usize..4, stats in statistics()) {
        let mut rng = SeedTree::new(seed).stream("vectors");
        let u = complex_vector(&mut rng, dim, 1.0);
        let v = complex_vector(&mut rng, dim, 1.0);
        let x = random_element(seed ^ 1, stats, dim, 2);
        let cu = Multivector::from_vector(stats, &u);
        let cv = Multivector::from_vector(stats, &v);
        // annihilators, creators and their mixed products
        let ac = annihilate(&cu, &create(&cv, &x).unwrap()).unwrap();
        let ca = create(&cv, &annihilate(&cu, &x).unwrap()).unwrap();
        let pairing = focktrace::fock::dot(&u, &v);
        let expected = x.scale(pairing);
        let mixed = match stats {
            Statistics::Fermionic => ac.add(&ca).unwrap(),
            Statistics::Bosonic => ac.add(&ca.scale(c(-1.0, 0.0))).unwrap(),
        };
        prop_assert!(max_diff(&mixed, &expected) < 1e-10);

        let sign = match stats { Statistics::Fermionic => c(1.0, 0.0), Statistics::Bosonic => c(-1.0, 0.0) };
        let cc = create(&cu, &create(&cv, &x).unwrap()).unwrap()
            .add(&create(&cv, &create(&cu, &x).unwrap()).unwrap().scale(sign)).unwrap();
        prop_assert!(cc.max_abs() < 1e-10);
        let aa = annihilate(&cu, &annihilate(&cv, &x).unwrap()).unwrap()
            .add(&annihilate(&cv, &annihilate(&cu, &x).unwrap()).unwrap().scale(sign)).unwrap();
        prop_assert!(aa.max_abs() < 1e-10);
    }

    #[test]
    fn annihilation_is_dual_to_creation(seed in any::<u64>(), dim in 1usize..4, stats in statistics()) {
        let w = random_element(seed, stats, dim, 1);
        let x = random_element(seed ^ 2, stats, dim, 2);
        let y = random_element(seed ^ 3, stats, dim, 3);
        let lhs = pair_multivectors(&y, &annihilate(&w, &x).unwrap()).unwrap();
        let rhs = pair_multivectors(&create(&w, &y).unwrap(), &x).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10));
    }

    #[test]
    fn wick_pairing_matches_product_pairing(seed in any::<u64>(), dim in 1usize..4, k in 0usize..4, stats in statistics()) {
        let mut rng = SeedTree::new(seed).stream("factors");
        let ws: Vec<Vec<C64>> = (0..k).map(|_| complex_vector(&mut rng, dim, 1.0)).collect();
        let vs: Vec<Vec<C64>> = (0..k).map(|_| complex_vector(&mut rng, dim, 1.0)).collect();
        let w = Multivector::from_factors(stats, dim, &ws).unwrap();
        let v = Multivector::from_factors(stats, dim, &vs).unwrap();
        let paired = pair_multivectors(&w, &v).unwrap();
        prop_assert!(close(paired, wick_pair(&ws, &vs, stats).unwrap(), 1e-10));
    }

    #[test]
    fn determinant_and_permanent_match_permutation_sums(seed in any::<u64>(), n in 1usize..6) {
        let m = complex_matrix(&mut SeedTree::new(seed).stream("m"), n, 1.0);
        let (mut det, mut per) = (c(0.0, 0.0), c(0.0, 0.0));
        for p in permutations(n) {
            let term: C64 = p.iter().enumerate().map(|(i, &j)| m.row(i)[j]).product();
            det += term * parity(&p);
            per += term;
        }
        prop_assert!(close(determinant(&m), det, 1e-10));
        prop_assert!(close(permanent(&m).unwrap(), per, 1e-10));
    }

    #[test]
    fn cycle_index_matches_induced_trace(seed in any::<u64>(), dim in 1usize..5, n in 0usize..5, stats in statistics()) {
        let rho = complex_matrix(&mut SeedTree::new(seed).stream("rho"), dim, 0.7);
        let brute = induce(&rho, n, stats).trace();
        prop_assert!(close(graded_trace_cycle_index(&rho, n, stats), brute, 1e-9));
        prop_assert!(close(graded_trace(&rho, n, stats), brute, 1e-9));
    }

    #[test]
    fn induced_operator_is_multiplicative(seed in any::<u64>(), dim in 1usize..4, n in 0usize..4, stats in statistics()) {
        let tree = SeedTree::new(seed);
        let a = complex_matrix(&mut tree.stream("a"), dim, 1.0);
        let b = complex_matrix(&mut tree.stream("b"), dim, 1.0);
        let lhs = induce(&a.matmul(&b), n, stats);
        let rhs = induce(&a, n, stats).matmul(&induce(&b, n, stats));
        prop_assert!(lhs.add_scaled(&rhs, c(-1.0, 0.0)).frobenius_norm() <= 1e-9 * rhs.frobenius_norm().max(1.0));
    }

    #[test]
    fn rank_one_fredholm_series(cc in -0.6f64..0.6, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let kernel = KernelSpec::unit(KernelKind::Product { c: cc });
        let rule = gauss_legendre(12, 0.0, 1.0).unwrap();
        let d = fredholm_determinant(&kernel, &rule, 6).unwrap().value;
        prop_assert!(close(d, c(1.0 + cc / 3.0, 0.0), 1e-12));
        let minor = fredholm_minor(&kernel, &rule, s, t, 6).unwrap().value;
        prop_assert!(close(minor, c(cc * s * t, 0.0), 1e-12));
        let p = fredholm_permanent(&kernel, &rule, 20).unwrap().value;
        prop_assert!(close(p, c(1.0 / (1.0 - cc / 3.0), 0.0), 1e-9));
    }

    #[test]
    fn fredholm_determinant_of_sum_of_rank_ones(a in -0.5f64..0.5, b in -0.5f64..0.5) {
        // K = a·x·y + b: determinant is det(I + G) for the 2×2 Gram system
        let kernel = KernelSpec::unit(KernelKind::Separable {
            terms: vec![
                focktrace::fredholm::SeparableTerm { coeff: a, px: 1, py: 1 },
                focktrace::fredholm::SeparableTerm { coeff: b, px: 0, py: 0 },
            ],
        });
        let rule = gauss_legendre(12, 0.0, 1.0).unwrap();
        let d = fredholm_determinant(&kernel, &rule, 6).unwrap().value;
        let gram = DenseOperator::from_real_rows(&[vec![1.0 + a / 3.0, a / 2.0], vec![b / 2.0, 1.0 + b]]).unwrap();
        prop_assert!(close(d, determinant(&gram), 1e-12));
    }

    #[test]
    fn kernel_round_trip_and_composition(seed in any::<u64>(), n in 1usize..6) {
        let tree = SeedTree::new(seed);
        let a = complex_matrix(&mut tree.stream("a"), n, 1.0);
        let b = complex_matrix(&mut tree.stream("b"), n, 1.0);
        let d = complex_matrix(&mut tree.stream("d"), n, 1.0);
        let back = operator_of(&kernel_of(&a)).unwrap();
        prop_assert!(back.add_scaled(&a, c(-1.0, 0.0)).frobenius_norm() < 1e-14);

        let (ka, kb, kd) = (kernel_of(&a), kernel_of(&b), kernel_of(&d));
        let ab = compose_kernels(&ka, &kb).unwrap();
        prop_assert!(operator_of(&ab).unwrap().add_scaled(&a.matmul(&b), c(-1.0, 0.0)).frobenius_norm() < 1e-12);
        let left = compose_kernels(&ab, &kd).unwrap();
        let right = compose_kernels(&ka, &compose_kernels(&kb, &kd).unwrap()).unwrap();
        let diff = operator_of(&left).unwrap().add_scaled(&operator_of(&right).unwrap(), c(-1.0, 0.0));
        prop_assert!(diff.frobenius_norm() < 1e-11);

        prop_assert!(close(residue_trace(&a.matmul(&b)), residue_trace(&b.matmul(&a)), 1e-12));
    }

    #[test]
    fn eta_insertions_at_equal_points_merge(
        w0 in (-0.5f64..0.5, -0.5f64..0.5),
        z0 in (-0.5f64..0.5, 1.0f64..2.0),
        z1 in (-0.5f64..0.5, -2.0f64..-1.0),
    ) {
        let w = vec![c(w0.0, w0.1), c(-w0.0, 0.3)];
        let (z0, z1) = (c(z0.0, z0.1), c(z1.0, z1.1));
        let hbar = c(0.05, 0.01);
        let gamma = c(0.3, 0.2);
        let split = EtaSpec { w: w.clone(), k: vec![1, -1], z: vec![z0, z0, z1], p: vec![1, 1, -2], hbar, gamma };
        let merged = EtaSpec { w, k: vec![1, -1], z: vec![z0, z1], p: vec![2, -2], hbar, gamma };
        let a = eta_trace_ratio(&split, 40, 40).unwrap().value;
        let b = eta_trace_ratio(&merged, 40, 40).unwrap().value;
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn vertex_ratio_is_invariant_under_relabeling(
        a in (-0.3f64..0.3, -0.3f64..0.3),
        b in (-0.3f64..0.3, -0.3f64..0.3),
        g in (0.2f64..0.8, -0.3f64..0.3),
    ) {
        let alpha = vec![c(a.0, a.1), c(b.0, b.1)];
        let beta = vec![c(2.0, 0.3), c(2.5, -0.4)];
        let gamma = c(g.0, g.1);
        let spec = VertexSpec::new(alpha.clone(), vec![1, -1], beta.clone(), vec![1, -1], gamma).unwrap();
        let swapped = VertexSpec::new(
            vec![alpha[1], alpha[0]], vec![-1, 1], vec![beta[1], beta[0]], vec![-1, 1], gamma,
        ).unwrap();
        let x = vertex_trace_ratio(&spec, 300).unwrap().value;
        let y = vertex_trace_ratio(&swapped, 300).unwrap().value;
        prop_assert!(close(x, y, 1e-12));
    }
}
