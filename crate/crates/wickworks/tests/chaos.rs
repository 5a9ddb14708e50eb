use num_traits::Zero;
use proptest::prelude::*;
use wickworks::chaos::{
    chaos_multiply, chaos_preimage, expectation, inner, moment_equivalence_report, ou_semigroup,
    sym_inner, wick_product, wiener_isometry, ChaosElement, ChaosElementF64, MultiIndex,
    MultiplyRoute,
};
use wickworks::mpoly::MPoly;
use wickworks::pairings::{gaussian_poly_expectation, CovMatrix};
use wickworks::rational::{factorial, rbig, ri, rq, to_f64};
use wickworks::Rational;

const DIM: usize = 3;

fn rat() -> impl Strategy<Value = Rational> {
    (-7i64..=7, 1i64..=4).prop_map(|(n, d)| rq(n, d))
}

fn index(max: u32) -> impl Strategy<Value = MultiIndex> {
    proptest::collection::vec(0u32..=max, DIM)
        .prop_filter("bounded order", move |k| k.iter().sum::<u32>() <= max)
        .prop_map(|k| MultiIndex::from_dense(&k))
}

fn element(max: u32) -> impl Strategy<Value = ChaosElement> {
    proptest::collection::vec((index(max), rat()), 1..5).prop_map(|terms| {
        let mut e = ChaosElement::new(DIM).unwrap();
        for (k, c) in terms {
            e.add_term(k, c).unwrap();
        }
        e
    })
}

fn homogeneous(n: u32) -> impl Strategy<Value = ChaosElement> {
    proptest::collection::vec((index(n), rat()), 1..4).prop_map(move |terms| {
        let mut e = ChaosElement::new(DIM).unwrap();
        for (k, c) in terms {
            if k.order() == n as usize {
                e.add_term(k, c).unwrap();
            }
        }
        if e.is_zero() {
            e.add_term(MultiIndex::from_dense(&[n, 0, 0]), ri(1))
                .unwrap();
        }
        e
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn multiplication_routes_agree(f in element(4), g in element(4)) {
        let a = chaos_multiply(&f, &g, MultiplyRoute::Contraction).unwrap();
        prop_assert_eq!(&a, &chaos_multiply(&f, &g, MultiplyRoute::Direct).unwrap());
        prop_assert_eq!(a.to_poly(), &f.to_poly() * &g.to_poly());
    }

    #[test]
    fn polynomial_round_trip(f in element(5)) {
        prop_assert_eq!(ChaosElement::from_poly(DIM, &f.to_poly()).unwrap(), f);
    }

    #[test]
    fn inner_is_gaussian_expectation(f in element(3), g in element(3)) {
        let e = gaussian_poly_expectation(&CovMatrix::identity(DIM), &(&f.to_poly() * &g.to_poly())).unwrap();
        prop_assert_eq!(inner(&f, &g), e);
        prop_assert_eq!(expectation(&f), f.coeff(&MultiIndex::zero()));
    }

    #[test]
    fn isometry_preserves_inner_products(f in homogeneous(3), g in homogeneous(3)) {
        let pf = chaos_preimage(&f, 3);
        let pg = chaos_preimage(&g, 3);
        prop_assert_eq!(wiener_isometry(&pf, false).unwrap(), f.clone());
        // E[Î(f) Î(g)] = n!⟨f, g⟩
        prop_assert_eq!(inner(&f, &g), rbig(factorial(3)) * sym_inner(&pf, &pg));
    }

    #[test]
    fn wick_product_is_top_grade(f in homogeneous(2), g in homogeneous(2)) {
        let w = wick_product(&f, &g).unwrap();
        let prod = chaos_multiply(&f, &g, MultiplyRoute::Direct).unwrap();
        prop_assert_eq!(w, prod.grade_part(4));
    }

    #[test]
    fn moment_equivalence(f in homogeneous(2), p in 1usize..=3) {
        let (lhs, rhs) = moment_equivalence_report(&f, p).unwrap();
        prop_assert!(lhs <= rhs);
    }

    #[test]
    fn ou_semigroup_property(f in element(4), s in 0.0f64..1.5, t in 0.0f64..1.5) {
        let ts = ou_semigroup(&f, t + s).unwrap();
        let t_then_s = wickworks::chaos::ou_semigroup_f64(&ou_semigroup(&f, t).unwrap(), s).unwrap();
        let x = [0.3, -0.7, 1.1];
        prop_assert!((ts.eval(&x) - t_then_s.eval(&x)).abs() < 1e-9 * (1.0 + ts.eval(&x).abs()));
        prop_assert!((ts.expectation() - to_f64(&expectation(&f))).abs() < 1e-12);
    }
}

#[test]
fn ou_limits() {
    let f = ChaosElement::from_poly(DIM, &(&MPoly::var(0).pow(3) + &MPoly::var(1))).unwrap();
    let id = ou_semigroup(&f, 0.0).unwrap();
    let exact = ChaosElementF64::from_exact(&f);
    let x = [0.5, 0.25, -2.0];
    assert!((id.eval(&x) - exact.eval(&x)).abs() < 1e-12);
    assert!(ou_semigroup(&f, 40.0).unwrap().eval(&x).abs() < 1e-12);
    assert!(expectation(&f).is_zero());
}
