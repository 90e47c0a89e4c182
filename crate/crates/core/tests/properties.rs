use std::collections::BTreeSet;

use multent_core::analysis::{self, ARM_ORDER};
use multent_core::coupled::{self, CoupledGraph};
use multent_core::entropy;
use multent_core::pattern::{self, build_lattice, count_series};
use multent_core::relation::{self, GammaSet, SmoothSequence};
use multent_core::{ConstraintSystem, Convention, TransitionMatrix};
use num_bigint::BigUint;
use proptest::prelude::*;

const GAMMAS: [&[u64]; 4] = [&[2], &[2, 3], &[2, 3, 5], &[2, 8]];

fn gamma(raw: &[u64]) -> GammaSet {
    GammaSet::new(raw).unwrap()
}

fn small_system() -> impl Strategy<Value = (usize, u32, Vec<u64>, Convention)> {
    (
        0..GAMMAS.len(),
        prop_oneof![Just(2u32), Just(3u32)],
        prop_oneof![Just(vec![0u64]), Just(vec![0u64, 2])],
        prop_oneof![Just(Convention::Inclusive), Just(Convention::Strict)],
    )
}

fn matrix_from_bits(bits: u8) -> TransitionMatrix {
    TransitionMatrix::new(
        (0..2)
            .map(|r| (0..2).map(|c| bits >> (2 * r + c) & 1 == 1).collect())
            .collect(),
    )
    .unwrap()
}

/// Maximal runs `i, Qi, Q²i, …` inside the vertex set.
fn multiplicative_runs(g: &CoupledGraph) -> Vec<usize> {
    let set: BTreeSet<u64> = g.vertices.iter().copied().collect();
    g.vertices
        .iter()
        .filter(|&&v| v % g.q != 0 || !set.contains(&(v / g.q)))
        .map(|&v| {
            let mut len = 0;
            let mut x = v;
            while set.contains(&x) {
                len += 1;
                x *= g.q;
            }
            len
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn elimination_matches_enumeration((gi, n, allowed, conv) in small_system(), k in 1usize..=24) {
        let g = gamma(GAMMAS[gi]);
        let cs = ConstraintSystem::new(n, allowed).unwrap();
        let lat = build_lattice(&g, k, conv).unwrap();
        let cap = if n == 2 { 24 } else { 16 };
        prop_assume!(lat.len() <= cap);
        let fast = pattern::count_patterns(&lat, &cs).unwrap();
        let slow = pattern::brute_force_count(&lat, &cs).unwrap();
        prop_assert_eq!(fast.exact, slow.exact);
    }

    #[test]
    fn range_decomposition_partitions(gi in 0..GAMMAS.len(), n in 1u64..=100_000) {
        let g = gamma(GAMMAS[gi]);
        let chains = relation::decompose_range(n, &g).unwrap();
        let q = SmoothSequence::up_to(g.prime_base(), n).unwrap().values;
        let mut seen = vec![false; n as usize + 1];
        for c in &chains {
            prop_assert!(c.length >= 1);
            for &m in &q[..c.length] {
                let v = (c.root * m) as usize;
                prop_assert!(!seen[v]);
                seen[v] = true;
            }
            // maximal: the next element leaves the range
            if let Some(&next) = q.get(c.length) {
                prop_assert!(c.root * next > n);
            }
        }
        prop_assert!(seen[1..].iter().all(|&b| b));
    }

    #[test]
    fn copy_counts_match_decomposition(gi in 0..GAMMAS.len(), n in 1u64..=20_000, k in 1usize..=12) {
        let g = gamma(GAMMAS[gi]);
        let direct = relation::decompose_range(n, &g).unwrap().iter().filter(|c| c.length == k).count() as u64;
        prop_assert_eq!(relation::copy_count(k, n, &g).unwrap().alpha, direct);
    }

    #[test]
    fn counts_grow_by_at_most_n((gi, n, allowed, _) in small_system(), k_max in 2usize..=30) {
        let g = gamma(GAMMAS[gi]);
        let cs = ConstraintSystem::new(n, allowed).unwrap();
        let b = count_series(&g, &cs, k_max, Convention::Inclusive).unwrap();
        let q = SmoothSequence::generate(g.prime_base(), k_max).unwrap().values;
        let shape = pattern::basic_shape(&g).values;
        let top = *shape.iter().max().unwrap();
        for k in 1..k_max {
            prop_assert!(b[k].exact >= b[k - 1].exact);
            prop_assert!(b[k].exact <= &b[k - 1].exact * n);
            // the new cell closes an instance only if it is `top·m` for a lattice cell m
            let v = q[k];
            let closes = v.is_multiple_of(top) && q[..k].contains(&(v / top));
            if !closes {
                prop_assert_eq!(&b[k].exact, &(&b[k - 1].exact * n));
            }
        }
    }

    #[test]
    fn sequence_count_matches_enumeration(gi in 0..GAMMAS.len(), n in 1u64..=22) {
        let g = gamma(GAMMAS[gi]);
        let cs = ConstraintSystem::binary();
        prop_assert_eq!(
            entropy::sequence_count_exact(&g, &cs, n).unwrap().exact,
            entropy::sequence_count_naive(&g, &cs, n).unwrap().exact
        );
    }

    #[test]
    fn ternary_sequence_count(gi in 0..GAMMAS.len(), n in 1u64..=13, wide in any::<bool>()) {
        let g = gamma(GAMMAS[gi]);
        let cs = ConstraintSystem::new(3, if wide { vec![0, 2] } else { vec![0] }).unwrap();
        prop_assert_eq!(
            entropy::sequence_count_exact(&g, &cs, n).unwrap().exact,
            entropy::sequence_count_naive(&g, &cs, n).unwrap().exact
        );
    }

    #[test]
    fn coupled_count_is_root_invariant(bits in 0u8..16, c_mask in 1u8..4, (q, k) in prop_oneof![
        (Just(2u64), 2usize..=4),
        (Just(3u64), 2usize..=3),
    ]) {
        let allowed: Vec<u64> = (0..2).filter(|x| c_mask >> x & 1 == 1).collect();
        let cs = ConstraintSystem::new(2, allowed).unwrap().with_sft(matrix_from_bits(bits)).unwrap();
        let roots: Vec<u64> = (2..200)
            .filter(|&l| coupled::build_coupled_graph(q, l, k).is_ok())
            .take(10)
            .collect();
        prop_assert_eq!(roots.len(), 10);
        let reference = coupled::count_coupled_patterns(&coupled::build_coupled_graph(q, roots[0], k).unwrap(), &cs).unwrap();
        for &l in &roots[1..] {
            let g = coupled::build_coupled_graph(q, l, k).unwrap();
            prop_assert_eq!(&coupled::count_coupled_patterns(&g, &cs).unwrap().exact, &reference.exact);
        }
    }

    #[test]
    fn coupled_count_matches_enumeration(bits in 0u8..16, c_mask in 1u8..4, q in 2u64..=3, k in 1usize..=3, shift in 0u64..6) {
        let allowed: Vec<u64> = (0..2).filter(|x| c_mask >> x & 1 == 1).collect();
        let cs = ConstraintSystem::new(2, allowed).unwrap().with_sft(matrix_from_bits(bits)).unwrap();
        let root = coupled::canonical_root(q, k).unwrap() + shift;
        prop_assume!(!root.is_multiple_of(q));
        let Ok(g) = coupled::build_coupled_graph(q, root, k) else { return Ok(()) };
        prop_assume!(g.len() <= 20);
        prop_assert_eq!(
            coupled::count_coupled_patterns(&g, &cs).unwrap().exact,
            coupled::brute_force_coupled(&g, &cs).unwrap().exact
        );
    }

    #[test]
    fn independent_graphs_multiply(bits in 0u8..16, k in 1usize..=3, a in 3u64..40, gap in 1u64..40) {
        let cs = ConstraintSystem::binary().with_sft(matrix_from_bits(bits)).unwrap();
        let b = a + gap;
        let (Ok(ga), Ok(gb)) = (coupled::build_coupled_graph(2, a, k), coupled::build_coupled_graph(2, b, k)) else {
            return Ok(());
        };
        let sa: BTreeSet<u64> = ga.vertices.iter().copied().collect();
        let sb: BTreeSet<u64> = gb.vertices.iter().copied().collect();
        prop_assume!(coupled::independence_check(&sa, &sb, 2));
        let joint = CoupledGraph::induced(2, sa.union(&sb).copied());
        let prod = coupled::count_coupled_patterns(&ga, &cs).unwrap().exact
            * coupled::count_coupled_patterns(&gb, &cs).unwrap().exact;
        prop_assert_eq!(coupled::count_coupled_patterns(&joint, &cs).unwrap().exact, prod);
    }

    #[test]
    fn sandwich_is_consistent(bits in 0u8..16, k1 in 2usize..=5, k2 in 2usize..=5) {
        let m = matrix_from_bits(bits);
        let cs = ConstraintSystem::binary().with_sft(m.clone()).unwrap();
        let a = coupled::entropy_bounds(2, &cs, k1).unwrap();
        let b = coupled::entropy_bounds(2, &cs, k2).unwrap();
        prop_assert_eq!(a.lower_certified, m.allows(0, 0) && m.allows(0, 1) && m.allows(1, 0));
        prop_assert!(a.lower <= a.upper + 1e-12);
        if a.lower_certified {
            prop_assert!(a.lower <= b.upper + 1e-12);
        }
    }

    #[test]
    fn conservation_of_cells(q in 2u64..=4, k in 1u64..=6, extra in 1u64..=20) {
        let n = k + extra;
        let c = coupled::copy_count_coupled(q, k, n).unwrap();
        let unused = coupled::unused_vertex_count(q, k, n).unwrap();
        let size = coupled::lattice_size(q, k as u32);
        prop_assert_eq!(c.alpha * size + unused, BigUint::from(q).pow(n as u32));
    }

    #[test]
    fn factorisation_is_unique(i in 1u64..1_000_000) {
        prop_assume!(i % 2 != 0 && i % 3 != 0);
        let r = analysis::classify_arms(i).unwrap();
        for arm in r.arms {
            if arm.value == 0 {
                prop_assert_eq!(arm.landing, None);
                continue;
            }
            // recompute by trial division
            let (mut a, mut b, mut j) = (0u32, 0u32, arm.value);
            while j % 2 == 0 { j /= 2; a += 1; }
            while j % 3 == 0 { j /= 3; b += 1; }
            let l = 2u64.pow(a) * 3u64.pow(b);
            prop_assert_eq!(l * j, arm.value);
            prop_assert!(j % 2 != 0 && j % 3 != 0);
            prop_assert_eq!(arm.landing, (l <= 4).then_some((l, j)));
        }
    }
}

#[test]
fn single_multiplier_is_fibonacci() {
    let g = gamma(&[2]);
    let b = count_series(&g, &ConstraintSystem::binary(), 40, Convention::Inclusive).unwrap();
    let fib = entropy::golden_counts(40);
    assert_eq!(b.into_iter().map(|c| c.exact).collect::<Vec<_>>(), fib);
}

#[test]
fn closed_form_matches_engine() {
    for (q, terms) in [(2u64, 30), (3, 30), (5, 25)] {
        let closed = entropy::closed_form_xq0(q, terms).unwrap();
        let engine = entropy::partial_entropy(
            &gamma(&[q]),
            &ConstraintSystem::binary(),
            terms,
            Convention::Inclusive,
        )
        .unwrap()
        .value;
        assert!(
            (closed - engine).abs() < 1e-12,
            "Q = {q}: {closed} vs {engine}"
        );
    }
    // Γ = {4} runs over the prime base {2}: same limit, different partial sums
    let closed = entropy::closed_form_xq0(4, 30).unwrap();
    let est = entropy::partial_entropy(
        &gamma(&[4]),
        &ConstraintSystem::binary(),
        60,
        Convention::Inclusive,
    )
    .unwrap();
    assert!(est.value <= closed + 1e-12);
    assert!(closed <= est.value + est.tail_bound + 1e-12);
}

#[test]
fn beta_is_the_euler_product() {
    for raw in [
        &[2u64][..],
        &[2, 3],
        &[2, 3, 5],
        &[2, 8],
        &[6, 10],
        &[3, 5, 7, 11],
    ] {
        let g = gamma(raw);
        let euler = g
            .prime_base()
            .iter()
            .fold(relation::rational(1, 1), |acc, &p| {
                acc * relation::rational(p - 1, p)
            });
        assert_eq!(relation::beta(&g), euler);
    }
}

#[test]
fn smooth_sequence_is_complete() {
    for raw in GAMMAS {
        let g = gamma(raw);
        let seq = SmoothSequence::up_to(g.prime_base(), 5000).unwrap().values;
        let direct: Vec<u64> = (1..=5000u64)
            .filter(|&v| {
                let mut x = v;
                for &p in g.prime_base() {
                    while x % p == 0 {
                        x /= p;
                    }
                }
                x == 1
            })
            .collect();
        assert_eq!(seq, direct);
    }
}

#[test]
fn full_matrix_reduces_to_multiplicative_runs() {
    let cs = ConstraintSystem::binary()
        .with_sft(TransitionMatrix::full(2))
        .unwrap();
    let fib = entropy::golden_counts(12);
    for (q, k) in [(2u64, 2usize), (2, 3), (2, 4), (2, 5), (3, 2), (3, 3)] {
        let g = coupled::build_coupled_graph(q, coupled::canonical_root(q, k).unwrap(), k).unwrap();
        let want: BigUint = multiplicative_runs(&g)
            .iter()
            .map(|&len| fib[len - 1].clone())
            .product();
        assert_eq!(
            coupled::count_coupled_patterns(&g, &cs).unwrap().exact,
            want,
            "Q = {q}, k = {k}"
        );
    }
}

#[test]
fn vertex_count_formula() {
    for q in 2..=4u64 {
        for k in 1..=10usize {
            let root = coupled::canonical_root(q, k).unwrap();
            let g = coupled::build_coupled_graph(q, root, k).unwrap();
            assert_eq!(
                BigUint::from(g.len()),
                coupled::lattice_size(q, k as u32),
                "Q = {q}, k = {k}"
            );
        }
    }
}

#[test]
fn arm_table_symmetry() {
    // column pairs (c·i + 1, c·i − 1) swap between the two halves, rows mirror j ↔ 11 − j
    for row in 0..12usize {
        for (col, &(c, s)) in ARM_ORDER.iter().enumerate() {
            let partner = ARM_ORDER
                .iter()
                .position(|&(c2, s2)| c2 == c && s2 == -s)
                .unwrap();
            let i1 = 6 * row as u64 + 1 + 72 * 3;
            let i2 = 6 * (11 - row) as u64 + 5 + 72 * 3;
            let a = analysis::classify_arms(i1).unwrap().labels()[col];
            let b = analysis::classify_arms(i2).unwrap().labels()[partner];
            assert_eq!(a, b, "row {row}, column {col}");
        }
    }
}
