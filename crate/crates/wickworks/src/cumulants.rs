//! Linear functionals on ℝ[x] under binomial convolution: moments, cumulants,
//! exp⋆/log⋆, the Wick map and Bell polynomials.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::mpoly::{MPoly, Monomial};
use crate::rational::{binomial, factorial, gaussian_moment, rbig, ri, Rational};

/// Value ring of functionals: polynomials in formal symbols.
pub type RingElem = MPoly;

/// Variable index used for x inside Bell polynomials; y_m uses index m.
pub const BELL_X: usize = 1;

/// φ(x^n) for n = 0..=D.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Functional {
    values: Vec<RingElem>,
}

impl Functional {
    pub fn new(values: Vec<RingElem>) -> Self {
        assert!(
            !values.is_empty(),
            "a functional needs at least the degree-0 value"
        );
        Functional { values }
    }

    pub fn from_rationals(v: &[Rational]) -> Self {
        Self::new(v.iter().map(|c| MPoly::constant(c.clone())).collect())
    }

    pub fn zero(degree: usize) -> Self {
        Self::new(vec![MPoly::zero(); degree + 1])
    }

    /// The counit 𝟙: 1 on x⁰, zero elsewhere. Neutral for convolution.
    pub fn unit(degree: usize) -> Self {
        let mut f = Self::zero(degree);
        f.values[0] = MPoly::one();
        f
    }

    pub fn gaussian_moments(degree: usize) -> Self {
        Self::new(
            (0..=degree)
                .map(|n| MPoly::constant(rbig(gaussian_moment(n))))
                .collect(),
        )
    }

    pub fn gaussian_cumulants(degree: usize) -> Self {
        let mut f = Self::zero(degree);
        if degree >= 2 {
            f.values[2] = MPoly::one();
        }
        f
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<&RingElem> {
        self.values
            .get(n)
            .ok_or(Error::BeyondTruncation(n, self.degree()))
    }

    pub fn values(&self) -> &[RingElem] {
        &self.values
    }

    pub fn set(&mut self, n: usize, v: RingElem) {
        self.values[n] = v;
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_degree(self, other)?;
        Ok(Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_degree(self, other)?;
        Ok(Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.values.iter().map(|v| v.scale(c)).collect())
    }

    /// Coefficients of Λ(φ)(t) = Σ φ(x^n) t^n / n!.
    pub fn lambda_series(&self) -> Vec<RingElem> {
        self.values
            .iter()
            .enumerate()
            .map(|(n, v)| v.scale(&Rational::new(1.into(), factorial(n))))
            .collect()
    }
}

fn same_degree(a: &Functional, b: &Functional) -> Result<()> {
    if a.degree() != b.degree() {
        return Err(Error::DegreeMismatch(a.degree(), b.degree()));
    }
    Ok(())
}

/// (φ⋆ψ)(x^n) = Σ_k C(n,k) φ(x^k) ψ(x^{n−k}).
pub fn convolve(phi: &Functional, psi: &Functional) -> Result<Functional> {
    same_degree(phi, psi)?;
    let d = phi.degree();
    let mut out = Vec::with_capacity(d + 1);
    for n in 0..=d {
        let mut acc = MPoly::zero();
        for k in 0..=n {
            if phi.values[k].is_zero() || psi.values[n - k].is_zero() {
                continue;
            }
            acc = &acc + &(&phi.values[k] * &psi.values[n - k]).scale(&rbig(binomial(n, k)));
        }
        out.push(acc);
    }
    Ok(Functional::new(out))
}

pub fn conv_power(phi: &Functional, k: usize) -> Functional {
    let mut acc = Functional::unit(phi.degree());
    for _ in 0..k {
        acc = convolve(&acc, phi).expect("same degree");
    }
    acc
}

fn require_value(phi: &Functional, n: usize, want: &Rational, what: &str) -> Result<()> {
    if phi.values[n] != MPoly::constant(want.clone()) {
        return Err(Error::Precondition(format!(
            "{what}: φ(x^{n}) must equal {want}"
        )));
    }
    Ok(())
}

/// Convolution inverse by solving (φ⋆ψ)(x^n) = δ_{n0} degree by degree.
pub fn conv_inverse(phi: &Functional) -> Result<Functional> {
    require_value(phi, 0, &Rational::one(), "conv_inverse")?;
    let d = phi.degree();
    let mut psi: Vec<MPoly> = vec![MPoly::one()];
    for n in 1..=d {
        let mut acc = MPoly::zero();
        for k in 1..=n {
            acc = &acc - &(&phi.values[k] * &psi[n - k]).scale(&rbig(binomial(n, k)));
        }
        psi.push(acc);
    }
    Ok(Functional::new(psi))
}

/// Neumann series Σ_k (𝟙 − φ)^{⋆k}; finite because (𝟙 − φ) vanishes on x⁰.
pub fn conv_inverse_neumann(phi: &Functional) -> Result<Functional> {
    require_value(phi, 0, &Rational::one(), "conv_inverse")?;
    let d = phi.degree();
    let delta = Functional::unit(d).sub(phi)?;
    let mut acc = Functional::zero(d);
    for k in 0..=d {
        acc = acc.add(&conv_power(&delta, k))?;
    }
    Ok(acc)
}

/// exp⋆(φ) = Σ_k φ^{⋆k}/k!, requires φ(x⁰) = 0.
pub fn exp_star(phi: &Functional) -> Result<Functional> {
    require_value(phi, 0, &Rational::zero(), "exp_star")?;
    let d = phi.degree();
    let mut acc = Functional::zero(d);
    let mut power = Functional::unit(d);
    for k in 0..=d {
        if k > 0 {
            power = convolve(&power, phi)?;
        }
        acc = acc.add(&power.scale(&Rational::new(1.into(), factorial(k))))?;
    }
    Ok(acc)
}

/// log⋆(φ) = Σ_{k≥1} (−1)^{k+1}/k (φ − 𝟙)^{⋆k}, requires φ(x⁰) = 1.
pub fn log_star(phi: &Functional) -> Result<Functional> {
    require_value(phi, 0, &Rational::one(), "log_star")?;
    let d = phi.degree();
    let delta = phi.sub(&Functional::unit(d))?;
    let mut acc = Functional::zero(d);
    let mut power = Functional::unit(d);
    for k in 1..=d {
        power = convolve(&power, &delta)?;
        let sign = if k % 2 == 1 { ri(1) } else { ri(-1) };
        acc = acc.add(&power.scale(&(sign / ri(k as i64))))?;
    }
    Ok(acc)
}

pub fn moments_from_cumulants(kappa: &Functional) -> Result<Functional> {
    exp_star(kappa)
}

pub fn cumulants_from_moments(mu: &Functional) -> Result<Functional> {
    log_star(mu)
}

/// Polynomial in x with ring coefficients; `coeffs[j]` multiplies x^j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WickPoly {
    pub coeffs: Vec<RingElem>,
}

impl WickPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Flatten to one multivariate polynomial, x becoming variable `xvar`.
    pub fn to_mpoly(&self, xvar: usize) -> MPoly {
        self.coeffs
            .iter()
            .enumerate()
            .fold(MPoly::zero(), |acc, (j, c)| {
                &acc + &(c * &MPoly::term(Monomial::var_pow(xvar, j as u32), Rational::one()))
            })
    }
}

fn check_centered_cumulants(kappa: &Functional) -> Result<()> {
    require_value(kappa, 0, &Rational::zero(), "wick_map")?;
    if kappa.degree() >= 1 {
        require_value(kappa, 1, &Rational::zero(), "wick_map")?;
    }
    Ok(())
}

fn binomial_against(f: &Functional, n: usize) -> WickPoly {
    let coeffs = (0..=n)
        .map(|j| f.values[n - j].scale(&rbig(binomial(n, j))))
        .collect();
    WickPoly { coeffs }
}

/// 𝒲(x^n) = Σ_k C(n,k) μ^{−1}(x^k) x^{n−k} with μ = exp⋆ κ.
pub fn wick_map(kappa: &Functional, n: usize) -> Result<WickPoly> {
    check_centered_cumulants(kappa)?;
    if n > kappa.degree() {
        return Err(Error::BeyondTruncation(n, kappa.degree()));
    }
    let mu_inv = exp_star(&kappa.scale(&ri(-1)))?;
    Ok(binomial_against(&mu_inv, n))
}

/// 𝒲^{−1}(x^n) = Σ_k C(n,k) μ(x^k) x^{n−k}.
pub fn wick_inverse(kappa: &Functional, n: usize) -> Result<WickPoly> {
    check_centered_cumulants(kappa)?;
    if n > kappa.degree() {
        return Err(Error::BeyondTruncation(n, kappa.degree()));
    }
    let mu = exp_star(kappa)?;
    Ok(binomial_against(&mu, n))
}

/// Apply 𝒲^{−1} linearly to a polynomial in x.
pub fn apply_wick_inverse(kappa: &Functional, p: &WickPoly) -> Result<WickPoly> {
    let mut out = vec![MPoly::zero(); p.coeffs.len()];
    for (j, c) in p.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let w = wick_inverse(kappa, j)?;
        for (i, wi) in w.coeffs.iter().enumerate() {
            out[i] = &out[i] + &(c * wi);
        }
    }
    Ok(WickPoly { coeffs: out })
}

/// Δ(x^n) = Σ_k C(n,k) x^k ⊗ x^{n−k}, as (k, n−k, coefficient).
pub fn coproduct(n: usize) -> Vec<(usize, usize, Rational)> {
    (0..=n).map(|k| (k, n - k, rbig(binomial(n, k)))).collect()
}

pub fn counit(n: usize) -> Rational {
    if n == 0 {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Antipode x^n ↦ (−1)^n x^n, returned as the scalar multiplying x^n.
pub fn antipode(n: usize) -> Rational {
    if n % 2 == 0 {
        ri(1)
    } else {
        ri(-1)
    }
}

/// (Δ⊗id)Δ(x^n) and (id⊗Δ)Δ(x^n) as tables (a, b, c) → coefficient.
pub fn coassociativity_tables(
    n: usize,
) -> (
    std::collections::BTreeMap<(usize, usize, usize), Rational>,
    std::collections::BTreeMap<(usize, usize, usize), Rational>,
) {
    use std::collections::BTreeMap;
    let mut left = BTreeMap::new();
    let mut right = BTreeMap::new();
    for (k, rest, c) in coproduct(n) {
        for (a, b, c2) in coproduct(k) {
            *left.entry((a, b, rest)).or_insert_with(Rational::zero) += &c * &c2;
        }
        for (b, cc, c2) in coproduct(rest) {
            *right.entry((k, b, cc)).or_insert_with(Rational::zero) += &c * &c2;
        }
    }
    (left, right)
}

/// Cumulant functional κ(x^m) = y_m for 2 ≤ m ≤ degree, with y_m the variable of index m.
pub fn bell_cumulants(degree: usize) -> Functional {
    let mut k = Functional::zero(degree);
    for m in 2..=degree {
        k.values[m] = MPoly::var(m);
    }
    k
}

/// Complete Bell polynomial B_n(x, y₂, …, y_n), x being variable 1 and y_m variable m.
///
/// Computed as the Wick map with κ(x^m) = −y_m, so that B_n(x, −y₂, …) is the Wick map
/// with κ(x^m) = y_m.
pub fn complete_bell(n: usize) -> RingElem {
    let kappa = bell_cumulants(n.max(1)).scale(&ri(-1));
    let w = wick_map(&kappa, n).expect("κ is centered");
    w.to_mpoly(BELL_X)
}

/// Homogeneous part of degree k of B_n, every variable counting 1.
pub fn incomplete_bell(n: usize, k: usize) -> Result<RingElem> {
    if k > n {
        return Err(Error::Invalid(format!("k = {k} exceeds n = {n}")));
    }
    Ok(complete_bell(n).homogeneous_part(k as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{hermite, hermite_scaled};
    use crate::rational::rq;

    fn rationals(v: &[i64]) -> Functional {
        Functional::from_rationals(&v.iter().map(|&x| ri(x)).collect::<Vec<_>>())
    }

    #[test]
    fn unit_is_neutral() {
        let phi = rationals(&[1, 2, -3, 5, 7]);
        assert_eq!(convolve(&Functional::unit(4), &phi).unwrap(), phi);
        assert!(convolve(&phi, &Functional::unit(3)).is_err());
    }

    #[test]
    fn gaussian_self_convolution() {
        let mu = Functional::gaussian_moments(2);
        let c = convolve(&mu, &mu).unwrap();
        assert_eq!(c.get(2).unwrap(), &MPoly::constant(ri(2)));
    }

    #[test]
    fn inverses() {
        let mu = Functional::gaussian_moments(10);
        let inv = conv_inverse(&mu).unwrap();
        assert_eq!(convolve(&mu, &inv).unwrap(), Functional::unit(10));
        assert_eq!(inv, conv_inverse_neumann(&mu).unwrap());
        assert_eq!(
            conv_inverse(&Functional::unit(3)).unwrap(),
            Functional::unit(3)
        );
        assert!(conv_inverse(&rationals(&[2, 1])).is_err());
    }

    #[test]
    fn gaussian_exp_log() {
        let kappa = Functional::gaussian_cumulants(12);
        let mu = exp_star(&kappa).unwrap();
        for k in 0..=6 {
            let expect = Rational::new(
                factorial(2 * k),
                factorial(k) * (num_bigint::BigInt::one() << k),
            );
            assert_eq!(mu.get(2 * k).unwrap(), &MPoly::constant(expect));
        }
        assert_eq!(log_star(&mu).unwrap(), kappa);
        assert_eq!(exp_star(&Functional::zero(4)).unwrap(), Functional::unit(4));
    }

    #[test]
    fn poisson_bell_number() {
        let kappa = rationals(&[0, 1, 1, 1, 1]);
        let mu = moments_from_cumulants(&kappa).unwrap();
        assert_eq!(mu.get(3).unwrap(), &MPoly::constant(ri(5)));
        assert_eq!(mu.get(4).unwrap(), &MPoly::constant(ri(15)));
    }

    #[test]
    fn wick_map_gaussian_and_scaled() {
        let kappa = Functional::gaussian_cumulants(12);
        for n in 0..=12 {
            let w = wick_map(&kappa, n).unwrap();
            let expect = hermite(n);
            for j in 0..=n {
                assert_eq!(w.coeffs[j], MPoly::constant(expect.coeff(j)));
            }
        }
        let mut k2 = Functional::zero(3);
        k2.set(2, MPoly::var(2));
        let w = wick_map(&k2, 3).unwrap();
        assert_eq!(w.coeffs[1], MPoly::var(2).scale(&ri(-3)));
        assert_eq!(w.coeffs[3], MPoly::one());
        let h = hermite_scaled(3, &rq(2, 3));
        let y = [ri(0), ri(0), rq(2, 3)];
        for j in 0..=3 {
            assert_eq!(w.coeffs[j].eval(&y), h.coeff(j));
        }
    }

    #[test]
    fn bell_example() {
        let x = MPoly::var(BELL_X);
        let y2 = MPoly::var(2);
        let y3 = MPoly::var(3);
        let expect = &(&x * &y2.pow(2)).scale(&ri(15)) + &(&x.pow(2) * &y3).scale(&ri(10));
        assert_eq!(incomplete_bell(5, 3).unwrap(), expect);
        assert!(incomplete_bell(2, 3).is_err());
    }

    #[test]
    fn bell_reduces_to_scaled_hermite() {
        for n in 0..=8 {
            let b = complete_bell(n);
            let mut sub = b.clone();
            sub = sub.substitute(2, &MPoly::var(2).scale(&ri(-1)));
            for m in 3..=n {
                sub = sub.substitute(m, &MPoly::zero());
            }
            let h = hermite_scaled(n, &ri(1));
            let expect = h.compose(&MPoly::var(BELL_X));
            let sub = sub.substitute(2, &MPoly::one());
            assert_eq!(sub, expect, "n={n}");
        }
    }

    #[test]
    fn hopf_tables() {
        for n in 0..=8 {
            let (l, r) = coassociativity_tables(n);
            assert_eq!(l, r);
        }
        assert_eq!(counit(0), ri(1));
        assert_eq!(antipode(3), ri(-1));
        // m(S⊗id)Δ = counit
        for n in 0..=6 {
            let s: Rational = coproduct(n)
                .into_iter()
                .fold(Rational::zero(), |acc, (k, _, c)| acc + c * antipode(k));
            assert_eq!(s, counit(n));
        }
    }
}
