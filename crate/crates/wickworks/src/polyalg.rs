//! Exact univariate polynomials and the Hermite calculus.
//!
//! Hermite polynomials here are the probabilists' ones, monic and orthogonal
//! for the standard Gaussian weight.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpoly::{MPoly, Monomial};
use crate::rational::{binomial, factorial, gaussian_moment, rbig, ri, rpow, Rational};

/// Dense polynomial, `coeffs[i]` multiplies x^i. The leading coefficient is nonzero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| ri(v)).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn x() -> Self {
        Self::monomial(1, Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial(n: usize, c: Rational) -> Self {
        let mut v = vec![Rational::zero(); n + 1];
        v[n] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul_x(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![Rational::zero()];
        v.extend(self.coeffs.iter().cloned());
        Self::new(v)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * ri(i as i64))
                .collect(),
        )
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + crate::rational::to_f64(c))
    }

    pub fn pow(&self, e: usize) -> Self {
        (0..e).fold(Self::one(), |acc, _| &acc * self)
    }

    /// View as a multivariate polynomial in variable `var`.
    pub fn to_mpoly(&self, var: usize) -> MPoly {
        let mut out = MPoly::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            out.add_term(Monomial::var_pow(var, i as u32), c.clone());
        }
        out
    }

    /// p(q) for a multivariate argument q.
    pub fn compose(&self, q: &MPoly) -> MPoly {
        self.coeffs.iter().rev().fold(MPoly::zero(), |acc, c| {
            &(&acc * q) + &MPoly::constant(c.clone())
        })
    }
}

impl fmt::Display for Polynomial {
    /// Descending powers, e.g. `1x^4 -6x^2 +3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            if !first {
                write!(f, " ")?;
            }
            let mag = c.abs();
            match i {
                0 => write!(f, "{sign}{mag}")?,
                1 => write!(f, "{sign}{mag}x")?,
                _ => write!(f, "{sign}{mag}x^{i}")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut v = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Polynomial::new(v)
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

/// H_n by the three-term recurrence H_{n+1} = x H_n − n H_{n−1}.
pub fn hermite(n: usize) -> Polynomial {
    let mut prev = Polynomial::one();
    if n == 0 {
        return prev;
    }
    let mut cur = Polynomial::x();
    for k in 1..n {
        let next = &cur.mul_x() - &prev.scale(&ri(k as i64));
        prev = cur;
        cur = next;
    }
    cur
}

/// n! Σ_k (−1)^k σ^{2k} / (2^k k! (n−2k)!) x^{n−2k}
pub fn hermite_scaled(n: usize, sigma2: &Rational) -> Polynomial {
    let nf = factorial(n);
    let mut v = vec![Rational::zero(); n + 1];
    for k in 0..=n / 2 {
        let den = (BigInt::one() << k) * factorial(k) * factorial(n - 2 * k);
        let mut c = Rational::new(nf.clone(), den) * rpow(sigma2, k);
        if k % 2 == 1 {
            c = -c;
        }
        v[n - 2 * k] = c;
    }
    Polynomial::new(v)
}

pub fn hermite_explicit(n: usize) -> Polynomial {
    hermite_scaled(n, &Rational::one())
}

/// E[p(X)] for X ~ N(0,1).
pub fn gaussian_expectation(p: &Polynomial) -> Rational {
    p.coeffs()
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 2 == 0)
        .fold(Rational::zero(), |acc, (i, c)| {
            acc + c * rbig(gaussian_moment(i))
        })
}

/// Gram–Schmidt on 1, x, …, x^n under ⟨p, q⟩ = E[p(X) q(X)]; returns the n-th vector.
pub fn gram_schmidt_hermite(n: usize) -> Polynomial {
    let mut basis: Vec<(Polynomial, Rational)> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let v = Polynomial::monomial(j, Rational::one());
        let mut u = v.clone();
        for (uk, norm) in &basis {
            let proj = gaussian_expectation(&(&v * uk)) / norm;
            u = &u - &uk.scale(&proj);
        }
        let norm = gaussian_expectation(&(&u * &u));
        basis.push((u, norm));
    }
    basis.pop().map(|(u, _)| u).unwrap_or_default()
}

/// Coefficients c_m with x^n = Σ c_m H_m(x).
pub fn monomial_to_hermite(n: usize) -> BTreeMap<usize, Rational> {
    let nf = factorial(n);
    (0..=n / 2)
        .map(|k| {
            let den = (BigInt::one() << k) * factorial(k) * factorial(n - 2 * k);
            (n - 2 * k, Rational::new(nf.clone(), den))
        })
        .collect()
}

/// H_n H_m = Σ_p p! C(n,p) C(m,p) H_{n+m−2p}.
pub fn hermite_product(n: usize, m: usize) -> BTreeMap<usize, Rational> {
    (0..=n.min(m))
        .map(|p| {
            (
                n + m - 2 * p,
                rbig(factorial(p) * binomial(n, p) * binomial(m, p)),
            )
        })
        .collect()
}

/// Expand Σ_m c_m H_m into the monomial basis.
pub fn hermite_series_to_poly(c: &BTreeMap<usize, Rational>) -> Polynomial {
    c.iter().fold(Polynomial::zero(), |acc, (&m, cm)| {
        &acc + &hermite(m).scale(cm)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    /// Annihilation a = d/dx.
    A,
    /// Creation a† = x − d/dx.
    ADagger,
    /// Ornstein–Uhlenbeck generator L = d²/dx² − x d/dx = −a†a.
    L,
}

pub fn apply_operator(op: Operator, p: &Polynomial) -> Polynomial {
    match op {
        Operator::A => p.derivative(),
        Operator::ADagger => &p.mul_x() - &p.derivative(),
        Operator::L => &p.derivative().derivative() - &p.derivative().mul_x(),
    }
}

/// Both sides of H_n(x+y; σ₁²+σ₂²) = Σ_m C(n,m) H_m(x;σ₁²) H_{n−m}(y;σ₂²),
/// as polynomials in the variables x = 0, y = 1.
pub fn hermite_binomial_lhs_rhs(n: usize, s1: &Rational, s2: &Rational) -> (MPoly, MPoly) {
    let x = MPoly::var(0);
    let y = MPoly::var(1);
    let lhs = hermite_scaled(n, &(s1 + s2)).compose(&(&x + &y));
    let mut rhs = MPoly::zero();
    for m in 0..=n {
        let a = hermite_scaled(m, s1).to_mpoly(0);
        let b = hermite_scaled(n - m, s2).to_mpoly(1);
        rhs = &rhs + &(&a * &b).scale(&rbig(binomial(n, m)));
    }
    (lhs, rhs)
}

/// Both sides of H_n(Σ a_i x_i) = Σ_{|k|=n} (n!/k!) a^k Π H_{k_i}(x_i), which holds when Σ a_i² = 1.
pub fn hermite_multinomial_lhs_rhs(n: usize, a: &[Rational]) -> Result<(MPoly, MPoly)> {
    let norm: Rational = a
        .iter()
        .map(|ai| ai * ai)
        .fold(Rational::zero(), |s, v| s + v);
    if !norm.is_one() {
        return Err(Error::Precondition(format!("Σ a_i² = {norm}, expected 1")));
    }
    let arg = a.iter().enumerate().fold(MPoly::zero(), |acc, (i, ai)| {
        &acc + &MPoly::var(i).scale(ai)
    });
    let lhs = hermite(n).compose(&arg);
    let mut rhs = MPoly::zero();
    for k in compositions(n, a.len()) {
        let mut coef = rbig(factorial(n));
        let mut term = MPoly::one();
        for (i, &ki) in k.iter().enumerate() {
            coef = coef / rbig(factorial(ki)) * rpow(&a[i], ki);
            term = &term * &hermite(ki).to_mpoly(i);
        }
        rhs = &rhs + &term.scale(&coef);
    }
    Ok((lhs, rhs))
}

/// All weak compositions of n into `parts` nonnegative parts.
pub fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Truncated power series in t with polynomial-in-x coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BivariateSeries {
    /// (degree in t, degree in x) → coefficient.
    coeffs: BTreeMap<(usize, usize), Rational>,
    order: usize,
}

impl BivariateSeries {
    pub fn zero(order: usize) -> Self {
        BivariateSeries {
            coeffs: BTreeMap::new(),
            order,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, t: usize, x: usize) -> Rational {
        self.coeffs
            .get(&(t, x))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, t: usize, x: usize, c: Rational) {
        if t > self.order || c.is_zero() {
            return;
        }
        let e = self.coeffs.entry((t, x)).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&(t, x));
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.order.min(other.order));
        for (&(t1, x1), c1) in &self.coeffs {
            for (&(t2, x2), c2) in &other.coeffs {
                out.add_term(t1 + t2, x1 + x2, c1 * c2);
            }
        }
        out
    }

    /// Coefficient of t^n as a polynomial in x.
    pub fn t_coefficient(&self, n: usize) -> Polynomial {
        let deg = self
            .coeffs
            .keys()
            .filter(|(t, _)| *t == n)
            .map(|(_, x)| *x)
            .max();
        match deg {
            None => Polynomial::zero(),
            Some(d) => Polynomial::new((0..=d).map(|x| self.get(n, x)).collect()),
        }
    }
}

/// e^{tx − t²/2} truncated at t-order `order`, computed as Σ_j (tx − t²/2)^j / j!.
pub fn hermite_generating_function(order: usize) -> BivariateSeries {
    let mut base = BivariateSeries::zero(order);
    base.add_term(1, 1, Rational::one());
    base.add_term(2, 0, Rational::new((-1).into(), 2.into()));
    let mut out = BivariateSeries::zero(order);
    out.add_term(0, 0, Rational::one());
    let mut power = out.clone();
    for j in 1..=order {
        power = power.mul(&base);
        let inv = Rational::new(1.into(), factorial(j));
        for (&(t, x), c) in &power.coeffs {
            out.add_term(t, x, c * &inv);
        }
    }
    out
}
