//! Cross-module oracle suite: every acceptance criterion as an executable check.
//!
//! Each check recomputes its quantity by at least two independent routes (or
//! against a closed form) and reports a one-line verdict.

use std::collections::BTreeSet;
use std::time::Instant;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::chaos::{self, ChaosElement, MultiIndex, MultiplyRoute};
use crate::cumulants::{self, Functional, BELL_X};
use crate::error::{Error, Result};
use crate::feynman::{
    bphz_valuate, canonical, degree_symbolic, generate_diagrams, generate_with_loops, named,
    valuate, valuate_position_mc, weinberg_check, Antipode, Valuator,
};
use crate::mpoly::MPoly;
use crate::pairings::{self, CovMatrix};
use crate::phi4;
use crate::polyalg::{self, Polynomial};
use crate::rational::{factorial, gaussian_moment, rbig, ri, rq, Rational};
use crate::torusfield;

pub const VERIFY_SCHEMA: &str = "wickworks.verify/1";
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const CRITERIA: usize = 18;

/// Hermite table rows 0..=8 as printed.
pub const HERMITE_TABLE: [&str; 9] = [
    "1",
    "x",
    "x^2 - 1",
    "x^3 - 3x",
    "x^4 - 6x^2 + 3",
    "x^5 - 10x^3 + 15x",
    "x^6 - 15x^4 + 45x^2 - 15",
    "x^7 - 21x^5 + 105x^3 - 105x",
    "x^8 - 28x^6 + 210x^4 -420x^2 + 105",
];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{:>2} {} {:<28} {:>7.2}s  {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }

    /// As [`line`](Self::line) without the wall-clock column, so output is reproducible.
    pub fn line_untimed(&self) -> String {
        format!(
            "{:>2} {} {:<28} {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

pub fn criterion_name(id: usize) -> Option<&'static str> {
    Some(match id {
        1 => "hermite-routes",
        2 => "hermite-orthogonality",
        3 => "product-sum",
        4 => "leonov-shiryaev",
        5 => "isserlis-ibp",
        6 => "chaos-multiplication",
        7 => "moment-equivalence",
        8 => "ou-mehler",
        9 => "c-log-law",
        10 => "wick-variance-bound",
        11 => "feynman-coefficients",
        12 => "momentum-vs-position",
        13 => "linked-cluster",
        14 => "degrees-weinberg",
        15 => "bphz",
        16 => "phi4-3-commutativity",
        17 => "mc-asymptotics",
        18 => "thresholds-bell",
        _ => return None,
    })
}

pub fn run_criterion(id: usize, seed: u64) -> Result<CriterionResult> {
    let name = criterion_name(id).ok_or_else(|| Error::Invalid(format!("no criterion {id}")))?;
    let start = Instant::now();
    let outcome = match id {
        1 => hermite_routes(),
        2 => orthogonality(),
        3 => product_sum(),
        4 => leonov_shiryaev(seed),
        5 => isserlis_ibp(seed),
        6 => chaos_multiplication(seed),
        7 => moment_equivalence(seed),
        8 => ou_mehler(seed),
        9 => c_log_law(),
        10 => wick_variance_bound(),
        11 => feynman_coefficients(),
        12 => momentum_vs_position(seed),
        13 => linked_cluster(),
        14 => degrees_weinberg(),
        15 => bphz(),
        16 => commutativity(),
        17 => mc_asymptotics(seed),
        _ => thresholds_bell(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Ok(CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
        seconds,
    })
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    (1..=CRITERIA)
        .map(|id| run_criterion(id, seed).expect("ids are in range"))
        .collect()
}

/// Report object; wall-clock seconds are included only when `timings` is set.
pub fn to_json(results: &[CriterionResult], seed: u64, timings: bool) -> Value {
    let criteria: Vec<Value> = results
        .iter()
        .map(|r| {
            let mut v =
                json!({ "id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail });
            if timings {
                v["seconds"] = json!(r.seconds);
            }
            v
        })
        .collect();
    json!({
        "schema": VERIFY_SCHEMA,
        "seed": seed,
        "passed": results.iter().filter(|r| r.passed).count(),
        "total": results.len(),
        "criteria": criteria,
    })
}

type Outcome = Result<(bool, String)>;

/// Parses the table's textual form, e.g. "x^4 - 6x^2 + 3".
pub fn parse_polynomial(s: &str) -> Result<Polynomial> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut coeffs: Vec<Rational> = Vec::new();
    let mut rest = compact.as_str();
    while !rest.is_empty() {
        let (sign, body) = match rest.as_bytes()[0] {
            b'-' => (-1, &rest[1..]),
            b'+' => (1, &rest[1..]),
            _ => (1, rest),
        };
        let end = body.find(['+', '-']).unwrap_or(body.len());
        let term = &body[..end];
        rest = &body[end..];
        let bad = || Error::Invalid(format!("cannot parse term {term:?}"));
        let (c, power) = match term.find('x') {
            None => (term.parse::<i64>().map_err(|_| bad())?, 0),
            Some(i) => {
                let c = if i == 0 {
                    1
                } else {
                    term[..i].parse::<i64>().map_err(|_| bad())?
                };
                let p = match &term[i + 1..] {
                    "" => 1,
                    e => e
                        .strip_prefix('^')
                        .ok_or_else(bad)?
                        .parse::<usize>()
                        .map_err(|_| bad())?,
                };
                (c, p)
            }
        };
        if coeffs.len() <= power {
            coeffs.resize(power + 1, Rational::zero());
        }
        coeffs[power] += ri(sign * c);
    }
    Ok(Polynomial::new(coeffs))
}

fn hermite_routes() -> Outcome {
    let start = Instant::now();
    for n in 0..=20 {
        let h = polyalg::hermite(n);
        if h != polyalg::hermite_explicit(n) || h != polyalg::gram_schmidt_hermite(n) {
            return Ok((false, format!("routes differ at n = {n}")));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    for (n, row) in HERMITE_TABLE.iter().enumerate() {
        if parse_polynomial(row)? != polyalg::hermite(n) {
            return Ok((false, format!("table row {n} differs")));
        }
    }
    Ok((
        secs < 5.0,
        "n ≤ 20 three routes equal; table rows 0..8 match".to_string(),
    ))
}

fn orthogonality() -> Outcome {
    let start = Instant::now();
    let h: Vec<Polynomial> = (0..=12).map(polyalg::hermite).collect();
    for n in 0..=12 {
        for m in 0..=12 {
            let e = polyalg::gaussian_expectation(&(&h[n] * &h[m]));
            let expect = if n == m {
                rbig(factorial(n))
            } else {
                Rational::zero()
            };
            if e != expect {
                return Ok((false, format!("E[H_{n} H_{m}] = {e}")));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((secs < 5.0, "E[H_n H_m] = n!δ for n, m ≤ 12".to_string()))
}

fn product_sum() -> Outcome {
    let c = polyalg::hermite_product(4, 4);
    let want = [(8, 1), (6, 16), (4, 72), (2, 96), (0, 24)];
    let ok = c.len() == want.len() && want.iter().all(|&(k, v)| c.get(&k) == Some(&ri(v)));
    let via_poly =
        polyalg::hermite_series_to_poly(&c) == &polyalg::hermite(4) * &polyalg::hermite(4);
    let shown: Vec<String> = c.iter().rev().map(|(k, v)| format!("{v}·H{k}")).collect();
    Ok((ok && via_poly, shown.join(" + ")))
}

fn rand_rational(rng: &mut ChaCha8Rng) -> Rational {
    rq(rng.random_range(-9..=9), rng.random_range(1..=5))
}

fn leonov_shiryaev(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..100 {
        let mut v = vec![Rational::zero()];
        v.extend((1..=10).map(|_| rand_rational(&mut rng)));
        let kappa = Functional::from_rationals(&v);
        let mu = cumulants::moments_from_cumulants(&kappa)?;
        if cumulants::cumulants_from_moments(&mu)? != kappa {
            return Ok((false, format!("round trip failed on trial {trial}")));
        }
    }
    let mu = cumulants::moments_from_cumulants(&Functional::gaussian_cumulants(12))?;
    for k in 0..=6 {
        let n = 2 * k;
        let double_factorial = rbig(factorial(n))
            / (rbig(factorial(k)) * rbig(num_bigint::BigInt::from(2u32).pow(k as u32)));
        if mu.get(n)? != &MPoly::constant(double_factorial.clone())
            || double_factorial != rbig(gaussian_moment(n))
        {
            return Ok((false, format!("Gaussian moment of order {n} wrong")));
        }
    }
    Ok((
        true,
        "100 random degree-10 cumulant sets round-trip; (2k)!/(k!2^k) for k ≤ 6".into(),
    ))
}

fn random_cov(rng: &mut ChaCha8Rng, n: usize) -> Result<CovMatrix> {
    let a: Vec<Vec<Rational>> = (0..n)
        .map(|_| (0..n).map(|_| rand_rational(rng)).collect())
        .collect();
    let c = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Rational::zero(), |acc, k| acc + &a[i][k] * &a[j][k]))
                .collect()
        })
        .collect();
    CovMatrix::new(c)
}

fn random_poly(rng: &mut ChaCha8Rng, vars: usize, max_deg: u32, terms: usize) -> MPoly {
    let mut p = MPoly::zero();
    for _ in 0..terms {
        let deg = rng.random_range(0..=max_deg);
        let mut m = MPoly::constant(rand_rational(rng));
        for _ in 0..deg {
            m = &m * &MPoly::var(rng.random_range(0..vars));
        }
        p = &p + &m;
    }
    p
}

fn isserlis_ibp(seed: u64) -> Outcome {
    // symbolic covariance: C_ij is the variable 4i + j (i < j)
    let sym = |i: usize, j: usize| MPoly::var(4 * i.min(j) + i.max(j));
    let mut lhs = MPoly::zero();
    for m in pairings::enumerate_matchings(4, true) {
        lhs = &lhs
            + &m.pairs
                .iter()
                .fold(MPoly::one(), |acc, &(i, j)| &acc * &sym(i, j));
    }
    let rhs =
        &(&(&sym(0, 1) * &sym(2, 3)) + &(&sym(0, 2) * &sym(1, 3))) + &(&sym(0, 3) * &sym(1, 2));
    if lhs != rhs {
        return Ok((
            false,
            "four-point pairing sum differs from C12C34 + C13C24 + C14C23".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5);
    for trial in 0..50 {
        let dim = rng.random_range(1..=3);
        let c = random_cov(&mut rng, dim)?;
        let i = rng.random_range(0..dim);
        let p = random_poly(&mut rng, dim, 5, 4);
        let (a, b) = pairings::ibp_check(&c, i, &p)?;
        if a != b {
            return Ok((
                false,
                format!("integration by parts fails on trial {trial}"),
            ));
        }
        if trial < 10 {
            let c4 = random_cov(&mut rng, 4)?;
            let vals: Vec<Rational> = (0..16)
                .map(|k| {
                    if k / 4 < k % 4 {
                        c4.get(k / 4, k % 4).clone()
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            if pairings::isserlis_moment(&c4, &[0, 1, 2, 3])? != rhs.eval(&vals) {
                return Ok((
                    false,
                    "isserlis_moment disagrees with the four-point formula".into(),
                ));
            }
        }
    }
    Ok((
        true,
        "four-point formula symbolic; IBP exact on 50 random (C, i, p), deg p ≤ 5".into(),
    ))
}

fn multi_indices(dim: usize, max_order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut k = vec![0u32; dim];
    loop {
        if k.iter().sum::<u32>() as usize <= max_order {
            out.push(MultiIndex::from_dense(&k));
        }
        let mut i = 0;
        loop {
            if i == dim {
                return out;
            }
            k[i] += 1;
            if k[i] as usize <= max_order {
                break;
            }
            k[i] = 0;
            i += 1;
        }
    }
}

fn chaos_multiplication(seed: u64) -> Outcome {
    let start = Instant::now();
    let mut pairs = 0usize;
    for dim in 1..=3 {
        let basis = multi_indices(dim, 4);
        for a in &basis {
            let f = ChaosElement::phi(dim, a.clone())?;
            for b in &basis {
                let g = ChaosElement::phi(dim, b.clone())?;
                if chaos::chaos_multiply(&f, &g, MultiplyRoute::Contraction)?
                    != chaos::chaos_multiply(&f, &g, MultiplyRoute::Direct)?
                {
                    return Ok((
                        false,
                        format!("routes differ for {a:?} × {b:?} in dimension {dim}"),
                    ));
                }
                pairs += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x60 + dim as u64));
        for _ in 0..20 {
            let mut el = || -> Result<ChaosElement> {
                let mut e = ChaosElement::new(dim)?;
                for _ in 0..4 {
                    e.add_term(
                        basis[rng.random_range(0..basis.len())].clone(),
                        rand_rational(&mut rng),
                    )?;
                }
                Ok(e)
            };
            let (f, g) = (el()?, el()?);
            let prod = chaos::chaos_multiply(&f, &g, MultiplyRoute::Contraction)?;
            if prod != chaos::chaos_multiply(&f, &g, MultiplyRoute::Direct)? {
                return Ok((
                    false,
                    format!("routes differ on a random pair in dimension {dim}"),
                ));
            }
            if prod.to_poly() != &f.to_poly() * &g.to_poly() {
                return Ok((
                    false,
                    "product does not match polynomial multiplication".into(),
                ));
            }
            pairs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        secs < 60.0,
        format!("{pairs} products equal by both routes"),
    ))
}

fn moment_equivalence(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7);
    let mut tight = f64::INFINITY;
    for trial in 0..100 {
        let n = 1 + trial % 3;
        let p = 1 + (trial / 3) % 3;
        let mut f = ChaosElement::new(2)?;
        for k in multi_indices(2, n).into_iter().filter(|k| k.order() == n) {
            f.add_term(k, rand_rational(&mut rng))?;
        }
        if f.is_zero() {
            f.add_term(MultiIndex::from_dense(&[n as u32, 0]), ri(1))?;
        }
        let (lhs, rhs) = chaos::moment_equivalence_report(&f, p)?;
        if lhs > rhs {
            return Ok((
                false,
                format!("E[F^{}] > bound on trial {trial} (n = {n}, p = {p})", 2 * p),
            ));
        }
        if rhs.is_positive() {
            tight = tight.min(crate::rational::to_f64(&(&rhs / &lhs)));
        }
    }
    Ok((
        true,
        format!("100 elements, n, p ≤ 3; smallest rhs/lhs = {tight:.3}"),
    ))
}

fn ou_mehler(seed: u64) -> Outcome {
    let start = Instant::now();
    let x0 = MPoly::var(0);
    let x1 = MPoly::var(1);
    let tests = [
        polyalg::hermite(3).compose(&x0),
        &x0.pow(2) * &x1,
        &(&x0.pow(4) - &x1) + &(&x0 * &x1).scale(&rq(1, 2)),
    ];
    let grid = vec![vec![0.0, 0.0], vec![0.5, -1.0], vec![1.5, 0.3]];
    let mut worst: f64 = 0.0;
    for (i, f) in tests.iter().enumerate() {
        for (j, &t) in [0.25, 1.0].iter().enumerate() {
            let pts = chaos::mehler_mc(
                f,
                2,
                t,
                &grid,
                100_000,
                seed.wrapping_add((10 * i + j) as u64),
            )?;
            for p in pts {
                let z = (p.estimate - p.reference).abs() / p.stderr;
                worst = worst.max(z);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 4.0 && secs < 30.0,
        format!("max |MC − spectral|/stderr = {worst:.2} over 18 points"),
    ))
}

fn c_log_law() -> Outcome {
    let target = std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI);
    let ns = [8usize, 16, 32, 64, 128];
    let c: Vec<f64> = ns
        .iter()
        .map(|&n| torusfield::c_variance(2, n))
        .collect::<Result<_>>()?;
    let diffs: Vec<String> = c
        .windows(2)
        .map(|w| format!("{:.5}", w[1] - w[0]))
        .collect();
    let rel = ((c[4] - c[3]) - target).abs() / target;
    Ok((
        rel < 0.05,
        format!(
            "C_2N − C_N = [{}], target {target:.5}, rel error at 128 = {rel:.4}",
            diffs.join(", ")
        ),
    ))
}

fn wick_variance_bound() -> Outcome {
    let ns = [8usize, 16, 32, 64, 128];
    let mut ok = true;
    let mut parts = Vec::new();
    for order in 2..=4 {
        let v: Vec<f64> = ns
            .iter()
            .map(|&n| torusfield::wick_integral_variance(2, n, order))
            .collect::<Result<_>>()?;
        let increasing = v.windows(2).all(|w| w[1] > w[0]);
        let rel = (v[4] - v[3]) / v[4];
        ok &= increasing && rel < 0.02;
        parts.push(format!("n={order}: {:.6} (64→128 {:.2e})", v[4], rel));
    }
    Ok((ok, parts.join("; ")))
}

fn feynman_coefficients() -> Outcome {
    let two = generate_diagrams(&[4, 4], &[])?;
    let three = generate_diagrams(&[4, 4, 4], &[])?;
    let c24 = two.coeff(&named::fgiv());
    let c1728 = three.connected_part().coeff(&named::fgvi());
    let series = phi4::partition_ratio_series(1.0, 8, 3)?;
    let f2 = series.coefficient(2).and_then(phi4::displayed_factor);
    let f3 = series.coefficient(3).and_then(phi4::displayed_factor);
    let ok = two.len() == 1
        && c24 == ri(24)
        && c1728 == ri(1728)
        && f2 == Some(ri(12))
        && f3 == Some(ri(-288));
    let show = |f: Option<Rational>| f.map_or("none".to_string(), |r| r.to_string());
    Ok((
        ok,
        format!(
            "counts {c24}, {c1728}; series factors α²: {} α³: {}",
            show(f2),
            show(f3)
        ),
    ))
}

fn momentum_vs_position(seed: u64) -> Outcome {
    let mut ok = valuate(&named::single_edge(), 1.0, 8)? == 1.0;
    let mut parts = Vec::new();
    for (i, (name, g)) in [
        ("single-edge", named::single_edge()),
        ("FGII", named::fgii()),
        ("FGIV", named::fgiv()),
        ("FGVI", named::fgvi()),
    ]
    .into_iter()
    .enumerate()
    {
        let m = valuate(&g, 1.0, 8)?;
        let (e, se) = valuate_position_mc(&g, 1, 8, 100_000, seed.wrapping_add(i as u64))?;
        let z = (m - e).abs() / se;
        ok &= z <= 4.0;
        parts.push(format!("{name} {m:.6} vs {e:.6}±{se:.1e} ({z:.2}σ)"));
    }
    Ok((ok, parts.join("; ")))
}

fn linked_cluster() -> Outcome {
    let r = phi4::linked_cluster(1.0, 8, 4)?;
    let fgiv = named::fgiv();
    let pair = canonical(&fgiv.disjoint_union(&fgiv));
    let dis = &r.disconnected[4];
    let factor = dis.coeff(&pair) / (ri(24) * ri(24));
    let only = dis.len() == 1;
    let lower_empty = r.disconnected[..4].iter().all(|s| s.is_empty());
    let ok = r.routes_agree && r.exp_roundtrip && factor == ri(3) && only && lower_empty;
    Ok((
        ok,
        format!(
            "connected ≡ log⋆ through order 4: {}; order-4 disconnected = {}·(24·FGIV)²",
            r.routes_agree, factor
        ),
    ))
}

fn degree_text((a, b): (i64, i64)) -> String {
    format!("{b}{a:+}d")
}

fn degrees_weinberg() -> Outcome {
    let mut ok = degree_symbolic(&named::fgiii()) == (-2, 6)
        && degree_symbolic(&named::fgiiiplus()) == (-3, 10);
    let classes = phi4::mass_type_classes(4)?;
    let mut rows = Vec::new();
    for (v, want) in [(2usize, (-2i64, 6i64)), (3, (-3, 10)), (4, (-4, 14))] {
        let degs: BTreeSet<(i64, i64)> = classes
            .iter()
            .filter(|c| c.vertices == v)
            .map(|c| c.degree_symbolic)
            .collect();
        ok &= degs.len() == 1 && degs.contains(&want);
        rows.push(
            degs.iter()
                .map(|&d| degree_text(d))
                .collect::<Vec<_>>()
                .join("/"),
        );
    }
    let mut checked = 0;
    for k in 1..=3 {
        for (g, _) in generate_with_loops(&vec![4; k], &[])?.iter() {
            ok &= weinberg_check(g, 1.0);
            checked += 1;
        }
    }
    Ok((
        ok,
        format!(
            "mass rows {}; Weinberg holds on {checked} d=1 vacuum classes (self-loops included)",
            rows.join(", ")
        ),
    ))
}

fn bphz() -> Outcome {
    let ap = Antipode::new(3.0);
    let g3 = named::fgiii();
    let g3p = named::fgiiiplus();
    let symbolic_zero = ap.bphz_symbolic(&g3)?.is_zero() && ap.bphz_lemma(&g3)?.is_zero();
    let ns = [4usize, 8, 16, 32];
    let mut v3 = Vec::new();
    let mut v3p = Vec::new();
    let mut ren = Vec::new();
    let mut zero_numeric = true;
    let mut routes = 0.0f64;
    for &n in &ns {
        let val = Valuator::new(3.0, n)?;
        v3.push(val.value(&g3)?);
        v3p.push(val.value(&g3p)?);
        let (z, _) = bphz_valuate(&g3, &val, &ap)?;
        zero_numeric &= z == 0.0;
        if n >= 16 {
            let (direct, lemma) = bphz_valuate(&g3p, &val, &ap)?;
            routes = routes.max((direct - lemma).abs());
            ren.push(direct);
        }
    }
    let sub = phi4::growth_fit(&ns, &v3);
    let full = phi4::growth_fit(&ns, &v3p);
    let ratio = full.log_slope / sub.log_slope;
    let inc = (ren[1] - ren[0]).abs() / ren[1].abs();
    let ok =
        symbolic_zero && zero_numeric && (ratio - 1.0).abs() < 0.1 && inc < 0.1 && routes < 1e-12;
    Ok((
        ok,
        format!(
            "BPHZ(FGIII) ≡ 0; log-slope FGIIIplus/FGIII = {ratio:.4}; BPHZ(FGIIIplus) 16→32 rel increment {inc:.2e}"
        ),
    ))
}

fn commutativity() -> Outcome {
    let r = phi4::wick_map_commutativity_check(8, 4)?;
    let worst = r.max_relative();
    Ok((
        worst < 1e-8 && r.rows.len() == 4,
        format!("N = 8, orders ≤ 4, max relative difference {worst:.2e}"),
    ))
}

fn mc_asymptotics(seed: u64) -> Outcome {
    let a = phi4::asymptotic_check(8, &[0.02, 0.05, 0.1], 100_000, seed, 1.0)?;
    let mut parts: Vec<String> = a
        .rows
        .iter()
        .map(|r| {
            format!(
                "α={}: |Δ|={:.2e} ≤ {:.2e}",
                r.alpha,
                r.difference.abs(),
                r.bound
            )
        })
        .collect();
    let d2: Vec<phi4::McEstimate> = [8usize, 16]
        .iter()
        .map(|&n| phi4::mc_partition_ratio(2, n, 0.05, 20_000, seed))
        .collect::<Result<_>>()?;
    let bounded = d2
        .iter()
        .all(|e| e.estimate.is_finite() && e.estimate > 0.0 && e.estimate < 2.0);
    let spread = (d2[0].estimate - d2[1].estimate).abs();
    let joint = d2[0].stderr.hypot(d2[1].stderr);
    let stable = spread <= 4.0 * joint;
    parts.push(format!(
        "d=2 α=0.05: N=8 {:.5}±{:.1e}, N=16 {:.5}±{:.1e}",
        d2[0].estimate, d2[0].stderr, d2[1].estimate, d2[1].stderr
    ));
    Ok((
        a.passed() && bounded && stable,
        format!("C = |c₄| = {:.1}; {}", a.c, parts.join("; ")),
    ))
}

fn thresholds_bell() -> Outcome {
    let ok_d = phi4::d_star_m(2) == ri(3)
        && phi4::d_star_m(3) == rq(10, 3)
        && phi4::d_star_m(4) == rq(7, 2);
    let x = MPoly::var(BELL_X);
    let y2 = MPoly::var(2);
    let y3 = MPoly::var(3);
    let expect = &(&x * &y2.pow(2)).scale(&ri(15)) + &(&x.pow(2) * &y3).scale(&ri(10));
    let b = cumulants::incomplete_bell(5, 3)?;
    Ok((
        ok_d && b == expect,
        format!(
            "d*_m = {}, {}, {}; B_5,3 = {}",
            phi4::d_star_m(2),
            phi4::d_star_m(3),
            phi4::d_star_m(4),
            b.format_with(&|i| if i == BELL_X {
                "x".into()
            } else {
                format!("y{i}")
            })
        ),
    ))
}
