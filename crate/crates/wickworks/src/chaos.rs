//! Finite-dimensional Fock space over ℝ^N.
//!
//! Random variables are linear combinations of Φ_k = Π_i H_{k_i}(X_i) with
//! X_1, …, X_N independent standard normals. Symmetric tensors store the
//! tensor's value at each sorted index tuple (not the orbit sum). The
//! unnormalised isometry Î_n = √n!·I_n is used everywhere, so every
//! coefficient stays rational.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mc::run_batched;
use crate::mpoly::MPoly;
use crate::pairings::{gaussian_poly_expectation, CovMatrix};
use crate::polyalg::{hermite, hermite_product, monomial_to_hermite};
use crate::rational::{binomial, factorial, rbig, ri, rpow, to_f64, Rational};

pub const MAX_GRADE: usize = 8;
pub const MAX_DIM: usize = 6;

/// Sparse multi-index: basis index → positive exponent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(BTreeMap<usize, u32>);

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex(BTreeMap::new())
    }

    pub fn unit(i: usize) -> Self {
        Self::from_pairs(&[(i, 1)])
    }

    pub fn from_pairs(p: &[(usize, u32)]) -> Self {
        MultiIndex(p.iter().filter(|(_, e)| *e > 0).cloned().collect())
    }

    pub fn from_dense(k: &[u32]) -> Self {
        MultiIndex(
            k.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| (i, e))
                .collect(),
        )
    }

    /// Multiplicities of a sorted index tuple.
    pub fn from_tuple(t: &[usize]) -> Self {
        let mut m = BTreeMap::new();
        for &i in t {
            *m.entry(i).or_insert(0) += 1;
        }
        MultiIndex(m)
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0.get(&i).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|(&i, &e)| (i, e))
    }

    pub fn order(&self) -> usize {
        self.0.values().map(|&e| e as usize).sum()
    }

    /// k! = Π k_i!
    pub fn factorial(&self) -> BigInt {
        self.0
            .values()
            .fold(BigInt::one(), |a, &e| a * factorial(e as usize))
    }

    /// Sorted tuple with each index repeated by its multiplicity.
    pub fn tuple(&self) -> Vec<usize> {
        self.0
            .iter()
            .flat_map(|(&i, &e)| std::iter::repeat_n(i, e as usize))
            .collect()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.keys().next_back().copied()
    }
}

/// General tensor in (ℝ^N)^{⊗n} as a sparse map over index tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    pub dim: usize,
    pub rank: usize,
    coeffs: BTreeMap<Vec<usize>, Rational>,
}

impl Tensor {
    pub fn new(dim: usize, rank: usize) -> Self {
        Tensor {
            dim,
            rank,
            coeffs: BTreeMap::new(),
        }
    }

    /// e_{i₁} ⊗ ⋯ ⊗ e_{i_n}
    pub fn basis(dim: usize, idx: &[usize]) -> Result<Self> {
        let mut t = Self::new(dim, idx.len());
        t.add(idx.to_vec(), Rational::one())?;
        Ok(t)
    }

    pub fn add(&mut self, key: Vec<usize>, v: Rational) -> Result<()> {
        if key.len() != self.rank {
            return Err(Error::Invalid(format!(
                "tuple of length {} in rank-{} tensor",
                key.len(),
                self.rank
            )));
        }
        if let Some(&bad) = key.iter().find(|&&i| i >= self.dim) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                dim: self.dim,
            });
        }
        add_entry(&mut self.coeffs, key, v);
        Ok(())
    }

    pub fn get(&self, key: &[usize]) -> Rational {
        self.coeffs.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &Rational)> {
        self.coeffs.iter()
    }

    pub fn tensor_product(&self, other: &Tensor) -> Result<Tensor> {
        if self.dim != other.dim {
            return Err(Error::Invalid("dimension mismatch".into()));
        }
        let mut out = Tensor::new(self.dim, self.rank + other.rank);
        for (a, va) in &self.coeffs {
            for (b, vb) in &other.coeffs {
                let mut k = a.clone();
                k.extend_from_slice(b);
                add_entry(&mut out.coeffs, k, va * vb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Tensor {
        let mut out = Tensor::new(self.dim, self.rank);
        for (k, v) in &self.coeffs {
            add_entry(&mut out.coeffs, k.clone(), v * c);
        }
        out
    }

    pub fn plus(&self, other: &Tensor) -> Tensor {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            add_entry(&mut out.coeffs, k.clone(), v.clone());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

fn add_entry<K: Ord>(m: &mut BTreeMap<K, Rational>, k: K, v: Rational) {
    if v.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match m.entry(k) {
        Entry::Vacant(e) => {
            e.insert(v);
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += v;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

/// Symmetric tensor keyed by sorted tuples; the stored value is the tensor entry at that tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymTensor {
    pub dim: usize,
    pub rank: usize,
    coeffs: BTreeMap<Vec<usize>, Rational>,
}

impl SymTensor {
    pub fn new(dim: usize, rank: usize) -> Self {
        SymTensor {
            dim,
            rank,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn scalar(dim: usize, c: Rational) -> Self {
        let mut t = Self::new(dim, 0);
        add_entry(&mut t.coeffs, Vec::new(), c);
        t
    }

    /// h^{⊗n} for h ∈ ℝ^N.
    pub fn power(h: &[Rational], n: usize) -> Self {
        let dim = h.len();
        let mut t = Self::new(dim, n);
        for k in crate::polyalg::compositions(n, dim) {
            let mi = MultiIndex::from_dense(&k.iter().map(|&e| e as u32).collect::<Vec<_>>());
            let v = k
                .iter()
                .enumerate()
                .fold(Rational::one(), |acc, (i, &e)| acc * rpow(&h[i], e));
            add_entry(&mut t.coeffs, mi.tuple(), v);
        }
        t
    }

    pub fn get(&self, sorted: &[usize]) -> Rational {
        self.coeffs
            .get(sorted)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &Rational)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Set the value at a tuple (sorted internally).
    pub fn set(&mut self, mut key: Vec<usize>, v: Rational) -> Result<()> {
        if key.len() != self.rank {
            return Err(Error::Invalid("wrong tuple length".into()));
        }
        if let Some(&bad) = key.iter().find(|&&i| i >= self.dim) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                dim: self.dim,
            });
        }
        key.sort_unstable();
        self.coeffs.remove(&key);
        add_entry(&mut self.coeffs, key, v);
        Ok(())
    }

    /// Every index tuple with its value.
    pub fn to_full(&self) -> Tensor {
        let mut t = Tensor::new(self.dim, self.rank);
        for (k, v) in &self.coeffs {
            for p in distinct_permutations(k) {
                t.coeffs.insert(p, v.clone());
            }
        }
        t
    }

    pub fn to_tensor(&self) -> Tensor {
        self.to_full()
    }
}

/// Distinct rearrangements of a sorted tuple, in lexicographic order.
pub fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        let n = cur.len();
        if n < 2 {
            return out;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Π = (1/n!) Σ_σ: entry r contributes v·k!/n! to the sorted key, k the multiplicities of r.
pub fn symmetrize(raw: &Tensor) -> SymTensor {
    let mut out = SymTensor::new(raw.dim, raw.rank);
    let nf = factorial(raw.rank);
    for (k, v) in &raw.coeffs {
        let mut s = k.clone();
        s.sort_unstable();
        let w = Rational::new(MultiIndex::from_tuple(&s).factorial(), nf.clone());
        add_entry(&mut out.coeffs, s, v * w);
    }
    out
}

/// Inner product on (ℝ^N)^{⊗n}: Σ over all tuples, i.e. orbit sizes n!/k! times stored products.
pub fn sym_inner(f: &SymTensor, g: &SymTensor) -> Rational {
    if f.rank != g.rank {
        return Rational::zero();
    }
    let nf = factorial(f.rank);
    let mut acc = Rational::zero();
    for (k, a) in &f.coeffs {
        if let Some(b) = g.coeffs.get(k) {
            acc += a * b * Rational::new(nf.clone(), MultiIndex::from_tuple(k).factorial());
        }
    }
    acc
}

/// Random variable Σ_k c_k Φ_k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaosElement {
    pub dim: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl ChaosElement {
    pub fn new(dim: usize) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::Invalid(format!(
                "dimension {dim} exceeds the cap {MAX_DIM}"
            )));
        }
        Ok(ChaosElement {
            dim,
            terms: BTreeMap::new(),
        })
    }

    fn raw(dim: usize) -> Self {
        ChaosElement {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Rational) -> Result<Self> {
        let mut e = Self::new(dim)?;
        e.add_term(MultiIndex::zero(), c)?;
        Ok(e)
    }

    /// X_i = Φ_{e_i}.
    pub fn var(dim: usize, i: usize) -> Result<Self> {
        Self::phi(dim, MultiIndex::unit(i))
    }

    /// Φ_k.
    pub fn phi(dim: usize, k: MultiIndex) -> Result<Self> {
        let mut e = Self::new(dim)?;
        e.add_term(k, Rational::one())?;
        Ok(e)
    }

    pub fn add_term(&mut self, k: MultiIndex, c: Rational) -> Result<()> {
        if let Some(i) = k.max_index() {
            if i >= self.dim {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.dim,
                });
            }
        }
        add_entry(&mut self.terms, k, c);
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: &MultiIndex) -> Rational {
        self.terms.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn plus(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &o.terms {
            add_entry(&mut out.terms, k.clone(), v.clone());
        }
        out
    }

    pub fn minus(&self, o: &Self) -> Self {
        self.plus(&o.scale(&ri(-1)))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::raw(self.dim);
        for (k, v) in &self.terms {
            add_entry(&mut out.terms, k.clone(), v * c);
        }
        out
    }

    pub fn grades(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.terms.keys().map(|k| k.order()).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    pub fn max_grade(&self) -> usize {
        self.terms.keys().map(|k| k.order()).max().unwrap_or(0)
    }

    /// Projection P_n on the n-th chaos.
    pub fn grade_part(&self, n: usize) -> Self {
        let mut out = Self::raw(self.dim);
        for (k, v) in &self.terms {
            if k.order() == n {
                out.terms.insert(k.clone(), v.clone());
            }
        }
        out
    }

    pub fn homogeneous_grade(&self) -> Option<usize> {
        match self.grades().as_slice() {
            [] => Some(0),
            [g] => Some(*g),
            _ => None,
        }
    }

    /// Expand into an ordinary polynomial in X_0, …, X_{N−1}.
    pub fn to_poly(&self) -> MPoly {
        let mut out = MPoly::zero();
        for (k, c) in &self.terms {
            let t = k.entries().fold(MPoly::one(), |acc, (i, e)| {
                &acc * &hermite(e as usize).to_mpoly(i)
            });
            out = &out + &t.scale(c);
        }
        out
    }

    /// Inverse of [`to_poly`](Self::to_poly): rewrite each monomial in the Hermite basis.
    pub fn from_poly(dim: usize, p: &MPoly) -> Result<Self> {
        let mut out = Self::new(dim)?;
        if p.num_vars() > dim {
            return Err(Error::IndexOutOfRange {
                index: p.num_vars() - 1,
                dim,
            });
        }
        for (m, c) in p.terms() {
            let mut acc: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
            acc.insert(MultiIndex::zero(), c.clone());
            for (i, &e) in m.exps().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let exp = monomial_to_hermite(e as usize);
                let mut next = BTreeMap::new();
                for (k, v) in &acc {
                    for (&deg, cm) in &exp {
                        let mut kk = k.clone();
                        if deg > 0 {
                            kk.0.insert(i, deg as u32);
                        }
                        add_entry(&mut next, kk, v * cm);
                    }
                }
                acc = next;
            }
            for (k, v) in acc {
                add_entry(&mut out.terms, k, v);
            }
        }
        Ok(out)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                k.entries().fold(to_f64(c), |acc, (i, e)| {
                    acc * hermite(e as usize).eval_f64(x[i])
                })
            })
            .sum()
    }
}

/// Î_n f = Σ_{sorted s} f(s)·(n!/k(s)!)·Φ_{k(s)}.
///
/// `normalized = true` asks for I_n = Î_n/√n!, which is only rational for n ≤ 1.
pub fn wiener_isometry(f: &SymTensor, normalized: bool) -> Result<ChaosElement> {
    if normalized && f.rank > 1 {
        return Err(Error::Precondition(format!(
            "I_{} involves 1/√{}!, which is irrational; use the unnormalised isometry",
            f.rank, f.rank
        )));
    }
    let mut out = ChaosElement::new(f.dim)?;
    let nf = factorial(f.rank);
    for (s, v) in &f.coeffs {
        let k = MultiIndex::from_tuple(s);
        let w = Rational::new(nf.clone(), k.factorial());
        out.add_term(k, v * w)?;
    }
    Ok(out)
}

/// Symmetric tensor f_n with Î_n f_n = P_n F.
pub fn chaos_preimage(f: &ChaosElement, n: usize) -> SymTensor {
    let mut t = SymTensor::new(f.dim, n);
    let nf = factorial(n);
    for (k, c) in &f.terms {
        if k.order() == n {
            let w = Rational::new(k.factorial(), nf.clone());
            add_entry(&mut t.coeffs, k.tuple(), c * w);
        }
    }
    t
}

/// Shuffle-sum contraction for general tensors.
///
/// For p-subsets S of f's slots and T of g's slots, and σ ∈ 𝔖_p, the slots in S
/// receive k₁…k_p in order, the slots in T receive k_{σ(1)}…k_{σ(p)}, and the
/// free slots keep their relative order: f's free indices first, then g's.
pub fn contract_shuffle(f: &Tensor, g: &Tensor, p: usize) -> Result<Tensor> {
    check_contract(f.dim, g.dim, f.rank, g.rank, p)?;
    let (n, m) = (f.rank, g.rank);
    let subsets_f = subsets(n, p);
    let subsets_g = subsets(m, p);
    let perms = permutations(p);
    let mut out = Tensor::new(f.dim, n + m - 2 * p);
    for (r, a) in &f.coeffs {
        for s_set in &subsets_f {
            let kf: Vec<usize> = s_set.iter().map(|&i| r[i]).collect();
            let free_f: Vec<usize> = (0..n)
                .filter(|i| !s_set.contains(i))
                .map(|i| r[i])
                .collect();
            for (s, b) in &g.coeffs {
                for t_set in &subsets_g {
                    let kg: Vec<usize> = t_set.iter().map(|&i| s[i]).collect();
                    let free_g: Vec<usize> = (0..m)
                        .filter(|i| !t_set.contains(i))
                        .map(|i| s[i])
                        .collect();
                    for sigma in &perms {
                        if (0..p).all(|t| kg[t] == kf[sigma[t]]) {
                            let mut key = free_f.clone();
                            key.extend_from_slice(&free_g);
                            add_entry(&mut out.coeffs, key, a * b);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// f ⋆_p g for symmetric f, g: p!·C(n,p)·C(m,p)·Σ_k f(k, i) g(k, j).
pub fn contract(f: &SymTensor, g: &SymTensor, p: usize) -> Result<Tensor> {
    check_contract(f.dim, g.dim, f.rank, g.rank, p)?;
    let (n, m) = (f.rank, g.rank);
    let weight = rbig(factorial(p) * binomial(n, p) * binomial(m, p));
    let ff = f.to_full();
    let gg = g.to_full();
    let mut by_prefix: BTreeMap<&[usize], Vec<(&[usize], &Rational)>> = BTreeMap::new();
    for (s, b) in &gg.coeffs {
        by_prefix.entry(&s[..p]).or_default().push((&s[p..], b));
    }
    let mut out = Tensor::new(f.dim, n + m - 2 * p);
    for (r, a) in &ff.coeffs {
        if let Some(list) = by_prefix.get(&r[..p]) {
            for (j, b) in list {
                let mut key = r[p..].to_vec();
                key.extend_from_slice(j);
                add_entry(&mut out.coeffs, key, a * *b * &weight);
            }
        }
    }
    Ok(out)
}

fn check_contract(df: usize, dg: usize, n: usize, m: usize, p: usize) -> Result<()> {
    if df != dg {
        return Err(Error::Invalid(format!("dimension mismatch: {df} vs {dg}")));
    }
    if p > n.min(m) {
        return Err(Error::Invalid(format!(
            "contraction order {p} exceeds min({n}, {m})"
        )));
    }
    Ok(())
}

fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    rec(0, n, p, &mut cur, &mut out);
    out
}

fn permutations(p: usize) -> Vec<Vec<usize>> {
    distinct_permutations(&(0..p).collect::<Vec<_>>())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultiplyRoute {
    /// Σ_p Î_{n+m−2p}(f ⋆_p g) on the tensor preimages.
    Contraction,
    /// Coordinate-wise Hermite product formula.
    Direct,
}

pub fn chaos_multiply(
    f: &ChaosElement,
    g: &ChaosElement,
    route: MultiplyRoute,
) -> Result<ChaosElement> {
    if f.dim != g.dim {
        return Err(Error::Invalid("dimension mismatch".into()));
    }
    if f.max_grade() + g.max_grade() > MAX_GRADE {
        return Err(Error::Invalid(format!(
            "product grade exceeds the cap {MAX_GRADE}"
        )));
    }
    match route {
        MultiplyRoute::Direct => Ok(multiply_direct(f, g)),
        MultiplyRoute::Contraction => multiply_contraction(f, g),
    }
}

fn multiply_direct(f: &ChaosElement, g: &ChaosElement) -> ChaosElement {
    let mut out = ChaosElement::raw(f.dim);
    for (k, a) in &f.terms {
        for (l, b) in &g.terms {
            let mut acc: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
            acc.insert(MultiIndex::zero(), a * b);
            for i in 0..f.dim {
                let (ki, li) = (k.get(i) as usize, l.get(i) as usize);
                if ki == 0 && li == 0 {
                    continue;
                }
                let prod = hermite_product(ki, li);
                let mut next = BTreeMap::new();
                for (kk, v) in &acc {
                    for (&deg, c) in &prod {
                        let mut nk = kk.clone();
                        if deg > 0 {
                            nk.0.insert(i, deg as u32);
                        }
                        add_entry(&mut next, nk, v * c);
                    }
                }
                acc = next;
            }
            for (kk, v) in acc {
                add_entry(&mut out.terms, kk, v);
            }
        }
    }
    out
}

fn multiply_contraction(f: &ChaosElement, g: &ChaosElement) -> Result<ChaosElement> {
    let mut out = ChaosElement::new(f.dim)?;
    for n in f.grades() {
        let fn_ = chaos_preimage(f, n);
        for m in g.grades() {
            let gm = chaos_preimage(g, m);
            for p in 0..=n.min(m) {
                let h = contract(&fn_, &gm, p)?;
                out = out.plus(&wiener_isometry(&symmetrize(&h), false)?);
            }
        }
    }
    Ok(out)
}

/// Î_n(f) ◇ Î_m(g) = Î_{n+m}(f ⊗ g).
pub fn wick_product(f: &ChaosElement, g: &ChaosElement) -> Result<ChaosElement> {
    let n = f
        .homogeneous_grade()
        .ok_or_else(|| Error::Precondition("left factor is not homogeneous".into()))?;
    let m = g
        .homogeneous_grade()
        .ok_or_else(|| Error::Precondition("right factor is not homogeneous".into()))?;
    if f.dim != g.dim {
        return Err(Error::Invalid("dimension mismatch".into()));
    }
    if f.is_zero() || g.is_zero() {
        return ChaosElement::new(f.dim);
    }
    let t = chaos_preimage(f, n)
        .to_full()
        .tensor_product(&chaos_preimage(g, m).to_full())?;
    wiener_isometry(&symmetrize(&t), false)
}

/// E[F], the grade-0 coefficient.
pub fn expectation(f: &ChaosElement) -> Rational {
    f.coeff(&MultiIndex::zero())
}

/// E[FG] = Σ_k k! F_k G_k.
pub fn inner(f: &ChaosElement, g: &ChaosElement) -> Rational {
    let mut acc = Rational::zero();
    for (k, a) in &f.terms {
        if let Some(b) = g.terms.get(k) {
            acc += a * b * rbig(k.factorial());
        }
    }
    acc
}

/// Chaos element with floating coefficients, produced by the OU semigroup.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaosElementF64 {
    pub dim: usize,
    pub terms: BTreeMap<MultiIndex, f64>,
}

impl ChaosElementF64 {
    pub fn from_exact(f: &ChaosElement) -> Self {
        ChaosElementF64 {
            dim: f.dim,
            terms: f
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), to_f64(v)))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                k.entries()
                    .fold(*c, |acc, (i, e)| acc * hermite(e as usize).eval_f64(x[i]))
            })
            .sum()
    }

    pub fn expectation(&self) -> f64 {
        self.terms.get(&MultiIndex::zero()).copied().unwrap_or(0.0)
    }

    /// Σ_k k! c_k², i.e. E[F²].
    pub fn norm2(&self) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| c * c * k.factorial().to_f64().unwrap_or(f64::INFINITY))
            .sum()
    }
}

/// T_t F = Σ_n e^{−nt} P_n F.
pub fn ou_semigroup(f: &ChaosElement, t: f64) -> Result<ChaosElementF64> {
    ou_semigroup_f64(&ChaosElementF64::from_exact(f), t)
}

pub fn ou_semigroup_f64(f: &ChaosElementF64, t: f64) -> Result<ChaosElementF64> {
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!(
            "t must be nonnegative, got {t}"
        )));
    }
    Ok(ChaosElementF64 {
        dim: f.dim,
        terms: f
            .terms
            .iter()
            .map(|(k, c)| (k.clone(), c * (-(k.order() as f64) * t).exp()))
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MehlerPoint {
    pub x: Vec<f64>,
    pub estimate: f64,
    pub stderr: f64,
    pub reference: f64,
}

/// Monte Carlo of T_t f(x) = E′[f(e^{−t}x + √(1−e^{−2t}) X′)] at each grid point,
/// next to the spectral value Σ e^{−nt} P_n f evaluated at the same point.
pub fn mehler_mc(
    f: &MPoly,
    dim: usize,
    t: f64,
    grid: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<Vec<MehlerPoint>> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be positive".into()));
    }
    let spectral = ou_semigroup(&ChaosElement::from_poly(dim, f)?, t)?;
    let a = (-t).exp();
    let b = (1.0 - (-2.0 * t).exp()).max(0.0).sqrt();
    let mut out = Vec::with_capacity(grid.len());
    for (gi, x) in grid.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::Invalid("grid point has wrong dimension".into()));
        }
        let stats = run_batched(samples, seed.wrapping_add(gi as u64 * 0x9E37_79B9), |rng| {
            let z: Vec<f64> = x
                .iter()
                .map(|&xi| {
                    let n: f64 = StandardNormal.sample(rng);
                    a * xi + b * n
                })
                .collect();
            f.eval_f64(&z)
        });
        out.push(MehlerPoint {
            x: x.clone(),
            estimate: stats.mean,
            stderr: stats.stderr(),
            reference: spectral.eval(x),
        });
    }
    Ok(out)
}

/// (E[F^{2p}], (2p−1)^{np}·E[F²]^p) for F homogeneous of grade n.
pub fn moment_equivalence_report(f: &ChaosElement, p: usize) -> Result<(Rational, Rational)> {
    let n = f
        .homogeneous_grade()
        .ok_or_else(|| Error::Precondition("F must be homogeneous".into()))?;
    if p == 0 {
        return Err(Error::Precondition("p must be at least 1".into()));
    }
    let poly = f.to_poly();
    let lhs = gaussian_poly_expectation(&CovMatrix::identity(f.dim), &poly.pow(2 * p))?;
    let rhs = rpow(&ri(2 * p as i64 - 1), n * p) * rpow(&inner(f, f), p);
    Ok((lhs, rhs))
}
