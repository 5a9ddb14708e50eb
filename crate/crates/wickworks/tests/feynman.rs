use num_traits::One;
use proptest::prelude::*;
use wickworks::feynman::{
    canonical, ck_coproduct, coassociativity, contract, degree, degree_symbolic, generate_diagrams,
    generate_with_loops, isomorphic_brute, named, valuate, Antipode, Diagram, Forest, ForestSum,
};
use wickworks::rational::ri;
use wickworks::torusfield::lambda;

/// Σ over edge momenta in [−N, N] conserved at every vertex of Π 1/λ, d = 1.
fn brute_force_d1(g: &Diagram, n: i64) -> f64 {
    let e = g.edges.len();
    let nv = g.num_vertices();
    let mut k = vec![-n; e];
    let mut total = 0.0;
    loop {
        let mut flow = vec![0i64; nv];
        for (i, &(a, b)) in g.edges.iter().enumerate() {
            flow[a] += k[i];
            flow[b] -= k[i];
        }
        if flow.iter().all(|&f| f == 0) {
            total += k
                .iter()
                .map(|&p| 1.0 / lambda(1, &[p, 0, 0]))
                .product::<f64>();
        }
        let mut i = 0;
        loop {
            if i == e {
                return total;
            }
            k[i] += 1;
            if k[i] <= n {
                break;
            }
            k[i] = -n;
            i += 1;
        }
    }
}

fn diagram(max_v: usize, max_e: usize, loops: bool) -> impl Strategy<Value = Diagram> {
    (2..=max_v).prop_flat_map(move |n| {
        proptest::collection::vec((0..n, 0..n), 1..=max_e)
            .prop_filter("no isolated vertices", move |es| {
                (0..n).all(|v| es.iter().any(|&(a, b)| a == v || b == v))
            })
            .prop_filter("loops", move |es| loops || es.iter().all(|&(a, b)| a != b))
            .prop_map(move |es| Diagram::from_edges(n, &es))
    })
}

fn connected(max_v: usize, max_e: usize) -> impl Strategy<Value = Diagram> {
    diagram(max_v, max_e, false).prop_filter("connected", |g| g.is_connected())
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

#[test]
fn named_diagrams_against_brute_force() {
    for g in [
        named::single_edge(),
        named::fgii(),
        named::fgiii(),
        named::fgiv(),
        named::fgvi(),
        named::fgiiiplus(),
    ] {
        let m = valuate(&g, 1.0, 2).unwrap();
        let b = brute_force_d1(&g, 2);
        assert!((m - b).abs() < 1e-12 * b, "{g}: {m} vs {b}");
    }
}

#[test]
fn vacuum_counts_sum_to_matchings() {
    // with loops, Σ counts over classes is (4n−1)!!
    let mut df = ri(1);
    for n in 1..=3usize {
        for j in [4 * n - 3, 4 * n - 1] {
            df *= ri(j as i64);
        }
        assert_eq!(generate_with_loops(&vec![4; n], &[]).unwrap().total(), df);
    }
    let s = generate_diagrams(&[4, 4, 4, 4], &[]).unwrap();
    assert_eq!(s.coeff(&named::k4_doubled()), ri(248832));
    assert_eq!(s.coeff(&named::doubled_square()), ri(62208));
    assert_eq!(s.coeff(&named::bubble_ring()), ri(55296));
    let pair = named::fgiv().disjoint_union(&named::fgiv());
    assert_eq!(s.coeff(&pair), ri(1728));
}

#[test]
fn antipode_of_primitive_and_bubble_chain() {
    let ap = Antipode::new(3.0);
    // FGIII is primitive at d = 3
    let s = ap.of(&named::fgiii()).unwrap();
    assert_eq!(s, ForestSum::single(Forest::of(&named::fgiii()), ri(-1)));
    let c = ck_coproduct(&named::fgiiiplus(), 3.0);
    assert_eq!(c.len(), 3);
}

fn antipode_identities(g: &Diagram, d: f64) -> (ForestSum, ForestSum) {
    let ap = Antipode::new(d);
    let mut left = ForestSum::zero();
    let mut right = ForestSum::zero();
    for ((a, b), c) in ck_coproduct(g, d) {
        left = left.plus(&ap.of_forest(&a).unwrap().mul_forest(&b).scale(&c));
        right = right.plus(&ap.of_forest(&b).unwrap().mul_forest(&a).scale(&c));
    }
    (left, right)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn valuation_matches_brute_force(g in diagram(4, 6, true)) {
        let m = valuate(&g, 1.0, 2).unwrap();
        let b = brute_force_d1(&g, 2);
        prop_assert!((m - b).abs() <= 1e-11 * b.abs().max(1.0), "{} vs {}", m, b);
    }

    #[test]
    fn canonical_form_is_invariant((g, p) in diagram(5, 8, true).prop_flat_map(|g| { let n = g.num_vertices(); (Just(g), permutation(n)) })) {
        let h = g.permuted(&p);
        prop_assert_eq!(canonical(&g), canonical(&h));
        prop_assert!(isomorphic_brute(&g, &h));
        prop_assert_eq!(valuate(&g, 2.0, 3).unwrap(), valuate(&h, 2.0, 3).unwrap());
    }

    #[test]
    fn canonical_separates_non_isomorphic(a in diagram(4, 6, false), b in diagram(4, 6, false)) {
        prop_assert_eq!(canonical(&a) == canonical(&b), isomorphic_brute(&a, &b));
    }

    #[test]
    fn degree_is_additive_under_contraction(g in connected(5, 9), mask in 0u32..32, d in 1usize..=4) {
        let n = g.num_vertices();
        let set: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        prop_assume!(set.len() >= 2 && set.len() < n && g.induced(&set).is_connected());
        let d = d as f64;
        let sub = g.induced(&set);
        let q = contract(&g, &[set]);
        prop_assert!((degree(&g, d) - degree(&sub, d) - degree(&q, d)).abs() < 1e-12);
        let (a, b) = degree_symbolic(&g);
        prop_assert_eq!(a as f64 * d + b as f64, degree(&g, d));
    }

    #[test]
    fn disconnected_valuation_factorises(a in connected(3, 4), b in connected(3, 4)) {
        let u = a.disjoint_union(&b);
        let lhs = valuate(&u, 1.0, 4).unwrap();
        let rhs = valuate(&a, 1.0, 4).unwrap() * valuate(&b, 1.0, 4).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }
}

/// Vacuum diagrams with k arity-4 and j arity-2 vertices, and two-point ones.
fn phi4_class() -> Vec<Diagram> {
    let mut out = Vec::new();
    for (k, j) in [
        (2, 0),
        (3, 0),
        (4, 0),
        (2, 1),
        (2, 2),
        (3, 1),
        (1, 2),
        (0, 3),
    ] {
        let mut ar = vec![4u32; k];
        ar.extend(std::iter::repeat_n(2u32, j));
        out.extend(
            generate_diagrams(&ar, &[])
                .unwrap()
                .iter()
                .map(|(g, _)| g.clone()),
        );
    }
    for k in 1..=3 {
        out.extend(
            generate_diagrams(&vec![4; k], &["x", "y"])
                .unwrap()
                .iter()
                .map(|(g, _)| g.clone()),
        );
    }
    out
}

#[test]
fn coproduct_is_coassociative_on_phi4_diagrams() {
    let class = phi4_class();
    assert!(class.len() > 10, "{}", class.len());
    for d in [3.0] {
        for g in &class {
            let (l, r) = coassociativity(g, d);
            assert_eq!(l, r, "d = {d}, {g}");
        }
    }
}

#[test]
fn antipode_is_convolution_inverse_on_phi4_diagrams() {
    for d in [3.0] {
        for g in phi4_class().iter().filter(|g| g.is_connected()) {
            let (l, r) = antipode_identities(g, d);
            assert!(l.is_zero(), "S⋆id at d = {d}, {g}: {}", l.format());
            assert!(r.is_zero(), "id⋆S at d = {d}, {g}: {}", r.format());
        }
    }
}

#[test]
fn forest_sum_unit() {
    let one = ForestSum::one();
    assert_eq!(one.coeff(&Forest::one()), wickworks::Rational::one());
}
