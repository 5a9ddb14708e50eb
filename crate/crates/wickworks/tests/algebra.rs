use std::collections::BTreeMap;

use num_traits::Zero;
use proptest::prelude::*;
use wickworks::cumulants::{self, Functional};
use wickworks::mpoly::MPoly;
use wickworks::pairings::{self, CovMatrix};
use wickworks::polyalg::{self, Polynomial};
use wickworks::rational::{factorial, rbig, ri, rq};
use wickworks::Rational;

fn rat() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=6).prop_map(|(n, d)| rq(n, d))
}

fn cov(dim: usize) -> impl Strategy<Value = CovMatrix> {
    proptest::collection::vec(rat(), dim * dim).prop_map(move |a| {
        let e = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        (0..dim).fold(Rational::zero(), |s, k| {
                            s + &a[i * dim + k] * &a[j * dim + k]
                        })
                    })
                    .collect()
            })
            .collect();
        CovMatrix::new(e).unwrap()
    })
}

fn poly(vars: usize, max_deg: u32) -> impl Strategy<Value = MPoly> {
    proptest::collection::vec(
        (
            rat(),
            proptest::collection::vec(0..vars, 0..=max_deg as usize),
        ),
        1..5,
    )
    .prop_map(|terms| {
        let mut p = MPoly::zero();
        for (c, idx) in terms {
            p = &p
                + &idx
                    .iter()
                    .fold(MPoly::constant(c), |m, &i| &m * &MPoly::var(i));
        }
        p
    })
}

/// Gaussian expectation of a univariate polynomial from the moment sequence alone.
fn expect_by_moments(p: &Polynomial) -> Rational {
    p.coeffs()
        .iter()
        .enumerate()
        .fold(Rational::zero(), |acc, (k, c)| {
            acc + c * rbig(wickworks::rational::gaussian_moment(k))
        })
}

#[test]
fn hermite_routes_to_thirty() {
    for n in 0..=30 {
        assert_eq!(polyalg::hermite(n), polyalg::hermite_explicit(n), "n = {n}");
    }
    for n in 0..=12 {
        assert_eq!(
            polyalg::hermite(n),
            pairings::hermite_from_matchings(n),
            "n = {n}"
        );
    }
}

#[test]
fn gaussian_moments_double_factorial() {
    let mu = cumulants::moments_from_cumulants(&Functional::gaussian_cumulants(14)).unwrap();
    let mut df = ri(1);
    for k in 0..=7 {
        if k > 0 {
            df *= ri(2 * k as i64 - 1);
        }
        assert_eq!(mu.get(2 * k).unwrap(), &MPoly::constant(df.clone()));
        assert!(mu.get(2 * k + 1).map_or(true, |v| v.is_zero()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_lowers_index(n in 1usize..25) {
        prop_assert_eq!(polyalg::hermite(n).derivative(), polyalg::hermite(n - 1).scale(&ri(n as i64)));
    }

    #[test]
    fn product_sum_matches_multiplication(n in 0usize..9, m in 0usize..9) {
        let c = polyalg::hermite_product(n, m);
        prop_assert_eq!(polyalg::hermite_series_to_poly(&c), &polyalg::hermite(n) * &polyalg::hermite(m));
        prop_assert!(c.keys().all(|k| (k + n + m) % 2 == 0 && *k <= n + m));
    }

    #[test]
    fn monomial_expansion_inverts(n in 0usize..15) {
        let c: BTreeMap<usize, Rational> = polyalg::monomial_to_hermite(n);
        prop_assert_eq!(polyalg::hermite_series_to_poly(&c), Polynomial::monomial(n, ri(1)));
    }

    #[test]
    fn orthogonality_by_moments(n in 0usize..14, m in 0usize..14) {
        let e = expect_by_moments(&(&polyalg::hermite(n) * &polyalg::hermite(m)));
        let want = if n == m { rbig(factorial(n)) } else { Rational::zero() };
        prop_assert_eq!(e, want);
    }

    #[test]
    fn scaled_hermite_is_centered(n in 1usize..12, s in rat()) {
        let s2 = &s * &s + ri(1);
        let h = polyalg::hermite_scaled(n, &s2);
        // E[h(σX)] with X standard: substitute x → σ-scaled moments
        let mut e = Rational::zero();
        for (k, c) in h.coeffs().iter().enumerate() {
            e += c * wickworks::rational::rpow(&s2, k / 2) * rbig(wickworks::rational::gaussian_moment(k));
        }
        prop_assert!(e.is_zero());
    }

    #[test]
    fn leonov_shiryaev_round_trip(v in proptest::collection::vec(rat(), 8)) {
        let mut full = vec![Rational::zero()];
        full.extend(v);
        let kappa = Functional::from_rationals(&full);
        let mu = cumulants::moments_from_cumulants(&kappa).unwrap();
        prop_assert_eq!(cumulants::cumulants_from_moments(&mu).unwrap(), kappa.clone());
        prop_assert_eq!(cumulants::exp_star(&kappa).unwrap(), mu);
    }

    #[test]
    fn convolution_inverse(v in proptest::collection::vec(rat(), 6)) {
        let mut full = vec![ri(1)];
        full.extend(v);
        let phi = Functional::from_rationals(&full);
        let inv = cumulants::conv_inverse(&phi).unwrap();
        prop_assert_eq!(cumulants::convolve(&phi, &inv).unwrap(), Functional::unit(6));
        prop_assert_eq!(inv, cumulants::conv_inverse_neumann(&phi).unwrap());
    }

    #[test]
    fn integration_by_parts(c in cov(3), i in 0usize..3, p in poly(3, 5)) {
        let (l, r) = pairings::ibp_check(&c, i, &p).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn odd_moments_vanish(c in cov(3), idx in proptest::collection::vec(0usize..3, 1..4)) {
        let odd: Vec<usize> = if idx.len() % 2 == 1 { idx } else { idx[1..].to_vec() };
        prop_assert!(pairings::isserlis_moment(&c, &odd).unwrap().is_zero());
    }

    #[test]
    fn isserlis_routes(c in cov(3), exps in proptest::collection::vec(0u32..4, 3)) {
        let indices: Vec<usize> = exps.iter().enumerate().flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize)).collect();
        prop_assert_eq!(pairings::isserlis_moment(&c, &indices).unwrap(), pairings::isserlis_monomial(&c, &exps));
    }
}
