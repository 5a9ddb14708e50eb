//! Matchings of finite sets and exact Gaussian expectations via Isserlis' theorem.
//!
//! Indices are 0-based throughout.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::mpoly::{MPoly, Monomial};
use crate::polyalg::Polynomial;
use crate::rational::{factorial, rbig, ri, rpow, Rational};

/// A partition of {0, …, n−1} into pairs and singletons.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matching {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    pub singletons: Vec<usize>,
}

impl Matching {
    pub fn is_perfect(&self) -> bool {
        self.singletons.is_empty()
    }
}

/// Streaming enumeration; the smallest unassigned index is always decided first,
/// pairing partners in increasing order before the singleton option.
pub struct Matchings {
    n: usize,
    perfect_only: bool,
    /// mate[i] = Some(j) paired, Some(i) singleton, None undecided.
    mate: Vec<Option<usize>>,
    /// Decision stack: (index, option tried) where option is a partner or n for singleton.
    stack: Vec<(usize, usize)>,
    started: bool,
    done: bool,
}

pub fn enumerate_matchings(n: usize, perfect_only: bool) -> Matchings {
    Matchings {
        n,
        perfect_only,
        mate: vec![None; n],
        stack: Vec::new(),
        started: false,
        done: perfect_only && n % 2 == 1,
    }
}

impl Matchings {
    fn first_free(&self) -> Option<usize> {
        self.mate.iter().position(|m| m.is_none())
    }

    fn apply(&mut self, i: usize, opt: usize) {
        if opt == self.n {
            self.mate[i] = Some(i);
        } else {
            self.mate[i] = Some(opt);
            self.mate[opt] = Some(i);
        }
    }

    fn undo(&mut self, i: usize, opt: usize) {
        self.mate[i] = None;
        if opt != self.n {
            self.mate[opt] = None;
        }
    }

    /// Smallest valid option for index i strictly greater than `after` (None = from start).
    fn next_option(&self, i: usize, after: Option<usize>) -> Option<usize> {
        let start = after.map_or(i + 1, |a| a + 1);
        for j in start..self.n {
            if self.mate[j].is_none() {
                return Some(j);
            }
        }
        let singleton_ok = !self.perfect_only;
        match after {
            Some(a) if a == self.n => None,
            _ if singleton_ok => Some(self.n),
            _ => None,
        }
    }

    /// Fill all undecided indices with their first option. Returns false on dead end.
    fn descend(&mut self) -> bool {
        while let Some(i) = self.first_free() {
            match self.next_option(i, None) {
                Some(opt) => {
                    self.apply(i, opt);
                    self.stack.push((i, opt));
                }
                None => return false,
            }
        }
        true
    }

    /// Advance the deepest decision that still has alternatives.
    fn backtrack(&mut self) -> bool {
        while let Some((i, opt)) = self.stack.pop() {
            self.undo(i, opt);
            if let Some(next) = self.next_option(i, Some(opt)) {
                self.apply(i, next);
                self.stack.push((i, next));
                return true;
            }
        }
        false
    }

    fn current(&self) -> Matching {
        let mut pairs = Vec::new();
        let mut singletons = Vec::new();
        for (i, m) in self.mate.iter().enumerate() {
            let j = m.expect("complete");
            if j == i {
                singletons.push(i);
            } else if i < j {
                pairs.push((i, j));
            }
        }
        Matching {
            n: self.n,
            pairs,
            singletons,
        }
    }
}

impl Iterator for Matchings {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if self.done {
            return None;
        }
        loop {
            let ok = if !self.started {
                self.started = true;
                true
            } else {
                self.backtrack()
            };
            if !ok {
                self.done = true;
                return None;
            }
            if self.descend() {
                return Some(self.current());
            }
        }
    }
}

/// Symmetric covariance matrix; positive semi-definiteness is not checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CovMatrix {
    entries: Vec<Vec<Rational>>,
}

impl CovMatrix {
    pub fn new(entries: Vec<Vec<Rational>>) -> Result<Self> {
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Invalid("covariance matrix must be square".into()));
            }
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(Error::Invalid("covariance matrix must be symmetric".into()));
                }
            }
        }
        Ok(CovMatrix { entries })
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n)
            .map(|i| (0..n).map(|j| if i == j { ri(1) } else { ri(0) }).collect())
            .collect();
        CovMatrix { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim(),
            });
        }
        Ok(())
    }
}

/// E[X_{i₁} ⋯ X_{i_m}] as the sum over perfect matchings of the positions.
pub fn isserlis_moment(c: &CovMatrix, indices: &[usize]) -> Result<Rational> {
    for &i in indices {
        c.check(i)?;
    }
    let mut acc = Rational::zero();
    for m in enumerate_matchings(indices.len(), true) {
        let mut t = Rational::one();
        for &(a, b) in &m.pairs {
            t *= c.get(indices[a], indices[b]);
        }
        acc += t;
    }
    Ok(acc)
}

/// E[Π X_i^{a_i}] by summing over symmetric pair-count matrices instead of matchings.
///
/// A count matrix m with row sums a (diagonal counted twice) arises from
/// Π a_i! / (Π_{i<j} m_ij! · Π_i m_ii! 2^{m_ii}) perfect matchings.
pub fn isserlis_monomial(c: &CovMatrix, exps: &[u32]) -> Rational {
    let total: u32 = exps.iter().sum();
    if total % 2 == 1 {
        return Rational::zero();
    }
    let n = exps.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let mut remaining: Vec<u32> = exps.to_vec();
    let prefactor: BigInt = exps
        .iter()
        .fold(BigInt::one(), |a, &e| a * factorial(e as usize));
    let mut acc = Rational::zero();
    let mut counts = vec![0u32; pairs.len()];
    rec_pairs(c, &pairs, 0, &mut remaining, &mut counts, &mut acc);
    acc * rbig(prefactor)
}

fn rec_pairs(
    c: &CovMatrix,
    pairs: &[(usize, usize)],
    idx: usize,
    remaining: &mut [u32],
    counts: &mut [u32],
    acc: &mut Rational,
) {
    if idx == pairs.len() {
        if remaining.iter().all(|&r| r == 0) {
            let mut t = Rational::one();
            for (p, &(i, j)) in pairs.iter().enumerate() {
                let m = counts[p] as usize;
                if m == 0 {
                    continue;
                }
                let mut den = factorial(m);
                if i == j {
                    den <<= m;
                }
                t = t * rpow(c.get(i, j), m) / rbig(den);
            }
            *acc += t;
        }
        return;
    }
    let (i, j) = pairs[idx];
    // Once every pair touching index i has been decided, i must be exhausted.
    let max = if c.get(i, j).is_zero() {
        0
    } else if i == j {
        remaining[i] / 2
    } else {
        remaining[i].min(remaining[j])
    };
    for m in 0..=max {
        if i == j {
            remaining[i] -= 2 * m;
        } else {
            remaining[i] -= m;
            remaining[j] -= m;
        }
        counts[idx] = m;
        let last_for_i = idx + 1 == pairs.len() || pairs[idx + 1].0 != i;
        if !last_for_i || remaining[i] == 0 {
            rec_pairs(c, pairs, idx + 1, remaining, counts, acc);
        }
        if i == j {
            remaining[i] += 2 * m;
        } else {
            remaining[i] += m;
            remaining[j] += m;
        }
    }
    counts[idx] = 0;
}

/// E[p(X)] for X ~ N(0, C), variable i of `p` standing for X_i.
pub fn gaussian_poly_expectation(c: &CovMatrix, p: &MPoly) -> Result<Rational> {
    if p.num_vars() > c.dim() {
        return Err(Error::IndexOutOfRange {
            index: p.num_vars() - 1,
            dim: c.dim(),
        });
    }
    let mut acc = Rational::zero();
    for (m, coef) in p.terms() {
        let mut exps = m.exps().to_vec();
        exps.resize(c.dim(), 0);
        let v = isserlis_monomial(c, &exps);
        if !v.is_zero() {
            acc += coef * v;
        }
    }
    Ok(acc)
}

/// Both sides of E[X_i p(X)] = Σ_j C_ij E[∂_j p(X)].
pub fn ibp_check(c: &CovMatrix, i: usize, p: &MPoly) -> Result<(Rational, Rational)> {
    c.check(i)?;
    let lhs = gaussian_poly_expectation(c, &(&MPoly::var(i) * p))?;
    let mut rhs = Rational::zero();
    for j in 0..c.dim() {
        if c.get(i, j).is_zero() {
            continue;
        }
        rhs += c.get(i, j) * gaussian_poly_expectation(c, &p.derivative(j))?;
    }
    Ok((lhs, rhs))
}

/// Σ over all matchings of [n] of (−1)^{#pairs} x^{#singletons}; equals H_n.
pub fn hermite_from_matchings(n: usize) -> Polynomial {
    let mut counts = vec![0i64; n + 1];
    for m in enumerate_matchings(n, false) {
        let k = m.pairs.len();
        counts[n - 2 * k] += if k % 2 == 0 { 1 } else { -1 };
    }
    Polynomial::new(counts.into_iter().map(ri).collect())
}

/// Monomial X_{i₁}⋯X_{i_m} as a polynomial.
pub fn monomial_of_indices(indices: &[usize]) -> MPoly {
    indices.iter().fold(MPoly::one(), |acc, &i| {
        &acc * &MPoly::term(Monomial::var(i), Rational::one())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::hermite;
    use crate::rational::{gaussian_moment, rq};
    use std::collections::HashSet;

    #[test]
    fn counts() {
        assert_eq!(enumerate_matchings(4, true).count(), 3);
        assert_eq!(enumerate_matchings(4, false).count(), 10);
        assert_eq!(enumerate_matchings(6, true).count(), 15);
        assert_eq!(enumerate_matchings(5, true).count(), 0);
        assert_eq!(enumerate_matchings(0, true).count(), 1);
        for n in (2..=12).step_by(2) {
            assert_eq!(
                BigInt::from(enumerate_matchings(n, true).count()),
                gaussian_moment(n)
            );
        }
    }

    #[test]
    fn no_duplicates_and_canonical_first() {
        let all: Vec<_> = enumerate_matchings(6, false).collect();
        let set: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
        assert_eq!(all.len(), 76);
        assert_eq!(all[0].pairs, vec![(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn four_point() {
        let c = CovMatrix::new(vec![
            vec![ri(2), ri(3), ri(5), ri(7)],
            vec![ri(3), ri(11), ri(13), ri(17)],
            vec![ri(5), ri(13), ri(19), ri(23)],
            vec![ri(7), ri(17), ri(23), ri(29)],
        ])
        .unwrap();
        let v = isserlis_moment(&c, &[0, 1, 2, 3]).unwrap();
        assert_eq!(v, ri(3 * 23 + 5 * 17 + 7 * 13));
        assert_eq!(isserlis_moment(&c, &[0, 1, 2]).unwrap(), ri(0));
    }

    #[test]
    fn repeated_index_and_fast_route() {
        let c = CovMatrix::identity(1);
        for k in 0..=6 {
            let v = isserlis_moment(&c, &vec![0; 2 * k]).unwrap();
            assert_eq!(v, rbig(gaussian_moment(2 * k)));
            assert_eq!(isserlis_monomial(&c, &[2 * k as u32]), v);
        }
        let c = CovMatrix::new(vec![
            vec![ri(2), rq(1, 2), ri(0)],
            vec![rq(1, 2), ri(1), ri(-1)],
            vec![ri(0), ri(-1), ri(3)],
        ])
        .unwrap();
        let idx = [0, 0, 1, 1, 1, 2];
        assert_eq!(
            isserlis_monomial(&c, &[2, 3, 1]),
            isserlis_moment(&c, &idx).unwrap()
        );
    }

    #[test]
    fn expectations_and_ibp() {
        let c = CovMatrix::identity(2);
        let x1 = MPoly::var(0);
        let x2 = MPoly::var(1);
        assert_eq!(
            gaussian_poly_expectation(&c, &(&x1.pow(2) * &x2.pow(2))).unwrap(),
            ri(1)
        );
        let h3 = hermite(3).compose(&x1);
        assert_eq!(gaussian_poly_expectation(&c, &(&h3 * &h3)).unwrap(), ri(6));
        assert_eq!(ibp_check(&c, 0, &MPoly::one()).unwrap(), (ri(0), ri(0)));
        assert_eq!(
            ibp_check(&c, 0, &(&x1 * &x2.pow(2))).unwrap(),
            (ri(1), ri(1))
        );
    }

    #[test]
    fn combinatorial_hermite() {
        for n in 0..=10 {
            assert_eq!(hermite_from_matchings(n), hermite(n));
        }
    }
}
