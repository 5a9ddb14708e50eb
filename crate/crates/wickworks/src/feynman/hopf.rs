//! Power counting and the extraction–contraction Hopf algebra.
//!
//! Subgraphs are vertex-induced (so every edge between chosen vertices is
//! kept), connected, with at least two vertices. The coproduct sums over
//! forests: sets of pairwise vertex-disjoint divergent subgraphs.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_traits::{One, Zero};

use super::canon::canonical;
use super::diagram::{Diagram, Vertex};
use super::valuate::Valuator;
use crate::error::{Error, Result};
use crate::rational::{ri, to_f64};
use crate::Rational;

const DEG_TOL: f64 = 1e-12;

/// deg Γ = d(|V| − 1) − (d − 2)|E|
pub fn degree(g: &Diagram, d: f64) -> f64 {
    d * (g.num_vertices() as f64 - 1.0) - (d - 2.0) * g.num_edges() as f64
}

/// (a, b) with deg Γ = a·d + b.
pub fn degree_symbolic(g: &Diagram) -> (i64, i64) {
    let v = g.num_vertices() as i64;
    let e = g.num_edges() as i64;
    (v - 1 - e, 2 * e)
}

pub fn is_divergent(g: &Diagram, d: f64) -> bool {
    degree(g, d) <= DEG_TOL
}

/// Vertex sets of proper connected induced subgraphs with ≥ 2 vertices and deg ≤ 0.
pub fn divergent_subgraphs(g: &Diagram, d: f64) -> Vec<Vec<usize>> {
    let n = g.num_vertices();
    let mut out = Vec::new();
    if n > 20 {
        return out;
    }
    for mask in 1u32..(1u32 << n) {
        let set: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        if set.len() < 2 || set.len() == n {
            continue;
        }
        let h = g.induced(&set);
        if h.is_connected() && is_divergent(&h, d) {
            out.push(set);
        }
    }
    out
}

/// Weinberg-type check: no divergent subgraph and deg Γ > 0.
pub fn weinberg_check(g: &Diagram, d: f64) -> bool {
    divergent_subgraphs(g, d).is_empty() && degree(g, d) > DEG_TOL
}

/// Replace each vertex set by one vertex (arity = edges leaving it). Contracted
/// sets with nothing leaving vanish: the quotient of a component by itself is 𝟙.
pub fn contract(g: &Diagram, sets: &[Vec<usize>]) -> Diagram {
    let n = g.num_vertices();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, s) in sets.iter().enumerate() {
        for &v in s {
            owner[v] = Some(i);
        }
    }
    // new ids: untouched vertices first (in order), then one per set
    let mut id = vec![0usize; n];
    let mut next = 0;
    for v in 0..n {
        if owner[v].is_none() {
            id[v] = next;
            next += 1;
        }
    }
    let set_id: Vec<usize> = (0..sets.len()).map(|i| next + i).collect();
    for v in 0..n {
        if let Some(i) = owner[v] {
            id[v] = set_id[i];
        }
    }
    let total = next + sets.len();
    let mut edges = Vec::new();
    for &(a, b) in &g.edges {
        if owner[a].is_some() && owner[a] == owner[b] {
            continue;
        }
        edges.push((id[a], id[b]));
    }
    let mut deg = vec![0u32; total];
    for &(a, b) in &edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    let mut vertices: Vec<Vertex> = Vec::with_capacity(total);
    for v in 0..n {
        if owner[v].is_none() {
            vertices.push(g.vertices[v].clone());
        }
    }
    for i in 0..sets.len() {
        vertices.push(Vertex::internal(deg[set_id[i]]));
    }
    // drop contracted vertices with no edges
    let keep: Vec<usize> = (0..total).filter(|&v| v < next || deg[v] > 0).collect();
    let h = Diagram::new(vertices, edges).expect("contraction keeps degrees consistent");
    if keep.len() == total {
        h
    } else {
        h.induced(&keep)
    }
}

/// Commutative product of connected canonical diagrams; the empty forest is 𝟙.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Forest(pub Vec<Diagram>);

impl Forest {
    pub fn one() -> Self {
        Forest(Vec::new())
    }

    /// Split into canonical connected components.
    pub fn of(g: &Diagram) -> Self {
        let mut parts: Vec<Diagram> = g
            .components()
            .iter()
            .map(|c| canonical(&g.induced(c)))
            .collect();
        parts.retain(|p| p.num_vertices() > 0);
        parts.sort();
        Forest(parts)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Forest) -> Forest {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        v.sort();
        Forest(v)
    }

    pub fn to_diagram(&self) -> Diagram {
        self.0
            .iter()
            .fold(Diagram::empty(), |a, b| a.disjoint_union(b))
    }

    pub fn degree(&self, d: f64) -> f64 {
        self.0.iter().map(|g| degree(g, d)).sum()
    }
}

impl std::fmt::Display for Forest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|g| g.to_string()).collect();
        write!(f, "{}", parts.join("·"))
    }
}

/// Linear combination of forests.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForestSum(pub BTreeMap<Forest, Rational>);

impl ForestSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(f: Forest, c: Rational) -> Self {
        let mut s = Self::zero();
        s.add(f, c);
        s
    }

    pub fn one() -> Self {
        Self::single(Forest::one(), Rational::one())
    }

    pub fn add(&mut self, f: Forest, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(f) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn plus(&self, o: &ForestSum) -> ForestSum {
        let mut out = self.clone();
        for (f, c) in &o.0 {
            out.add(f.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> ForestSum {
        let mut out = ForestSum::zero();
        for (f, v) in &self.0 {
            out.add(f.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, o: &ForestSum) -> ForestSum {
        let mut out = ForestSum::zero();
        for (a, x) in &self.0 {
            for (b, y) in &o.0 {
                out.add(a.mul(b), x * y);
            }
        }
        out
    }

    pub fn mul_forest(&self, f: &Forest) -> ForestSum {
        let mut out = ForestSum::zero();
        for (a, x) in &self.0 {
            out.add(a.mul(f), x.clone());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, f: &Forest) -> Rational {
        self.0.get(f).cloned().unwrap_or_else(Rational::zero)
    }

    /// Σ c·Π Π_N(γ), each factor through the valuator.
    pub fn valuate(&self, val: &Valuator) -> Result<f64> {
        let mut acc = crate::lattice::KahanSum::new();
        for (f, c) in &self.0 {
            let mut p = to_f64(c);
            for g in &f.0 {
                p *= val.value(g)?;
            }
            acc.add(p);
        }
        Ok(acc.value())
    }

    pub fn format(&self) -> String {
        if self.0.is_empty() {
            return "0".into();
        }
        self.0
            .iter()
            .map(|(f, c)| format!("({c})·{f}"))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Proper nonempty forests of divergent subgraphs (vertex-disjoint).
pub fn divergent_forests(g: &Diagram, d: f64) -> Vec<Vec<Vec<usize>>> {
    let subs = divergent_subgraphs_general(g, d);
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    fn rec(
        subs: &[Vec<usize>],
        start: usize,
        used: u64,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        for i in start..subs.len() {
            let m: u64 = subs[i].iter().fold(0, |a, &v| a | 1 << v);
            if m & used != 0 {
                continue;
            }
            cur.push(i);
            out.push(cur.clone());
            rec(subs, i + 1, used | m, cur, out);
            cur.pop();
        }
    }
    let mut idx = Vec::new();
    rec(&subs, 0, 0, &mut cur, &mut idx);
    let comps = g.components();
    for f in idx {
        let sets: Vec<Vec<usize>> = f.iter().map(|&i| subs[i].clone()).collect();
        // the forest made of every component is Γ itself
        let whole = sets.len() == comps.len() && sets.iter().all(|s| comps.contains(s));
        if !whole {
            out.push(sets);
        }
    }
    out
}

/// Divergent connected induced subgraphs, allowing whole components when Γ is disconnected.
fn divergent_subgraphs_general(g: &Diagram, d: f64) -> Vec<Vec<usize>> {
    let n = g.num_vertices();
    let mut out = Vec::new();
    if n > 20 {
        return out;
    }
    let whole_connected = g.is_connected();
    for mask in 1u32..(1u32 << n) {
        let set: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        if set.len() < 2 || (whole_connected && set.len() == n) {
            continue;
        }
        let h = g.induced(&set);
        if h.is_connected() && is_divergent(&h, d) {
            out.push(set);
        }
    }
    out
}

/// Δ(Γ) as a map (left forest, right forest) → coefficient.
pub type TensorSum = BTreeMap<(Forest, Forest), Rational>;

fn tadd<K: Ord>(m: &mut BTreeMap<K, Rational>, k: K, c: Rational) {
    if c.is_zero() {
        return;
    }
    let e = m.entry(k).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        // leave cleanup to the caller's retain
    }
}

/// Γ⊗𝟙 + 𝟙⊗Γ + Σ_F (Π γ) ⊗ Γ/F for a diagram (connected or not).
pub fn ck_coproduct(g: &Diagram, d: f64) -> TensorSum {
    let mut out = TensorSum::new();
    let whole = Forest::of(g);
    if whole.is_one() {
        tadd(&mut out, (Forest::one(), Forest::one()), Rational::one());
        return out;
    }
    if whole.0.len() > 1 {
        return ck_coproduct_forest(&whole, d);
    }
    // Γ⊗𝟙 only survives on the left when Γ itself lies in the divergent algebra
    tadd(&mut out, (whole.clone(), Forest::one()), Rational::one());
    tadd(&mut out, (Forest::one(), whole), Rational::one());
    for f in divergent_forests(g, d) {
        let left = Forest(
            f.iter()
                .map(|s| canonical(&g.induced(s)))
                .collect::<Vec<_>>(),
        )
        .mul(&Forest::one());
        let right = Forest::of(&contract(g, &f));
        tadd(&mut out, (left, right), Rational::one());
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Δ on a forest (multiplicative).
pub fn ck_coproduct_forest(f: &Forest, d: f64) -> TensorSum {
    let mut acc = TensorSum::new();
    tadd(&mut acc, (Forest::one(), Forest::one()), Rational::one());
    for g in &f.0 {
        let dg = ck_coproduct(g, d);
        let mut next = TensorSum::new();
        for ((a, b), x) in &acc {
            for ((c, e), y) in &dg {
                tadd(&mut next, (a.mul(c), b.mul(e)), x * y);
            }
        }
        acc = next;
    }
    acc.retain(|_, c| !c.is_zero());
    acc
}

pub type Tensor3 = BTreeMap<(Forest, Forest, Forest), Rational>;

/// ((Δ⊗id)Δ Γ, (id⊗Δ)Δ Γ).
pub fn coassociativity(g: &Diagram, d: f64) -> (Tensor3, Tensor3) {
    let dg = ck_coproduct(g, d);
    let mut left = Tensor3::new();
    let mut right = Tensor3::new();
    for ((a, b), c) in &dg {
        for ((x, y), e) in ck_coproduct_forest(a, d) {
            tadd(&mut left, (x, y, b.clone()), c * e);
        }
        for ((x, y), e) in ck_coproduct_forest(b, d) {
            tadd(&mut right, (a.clone(), x, y), c * e);
        }
    }
    left.retain(|_, c| !c.is_zero());
    right.retain(|_, c| !c.is_zero());
    (left, right)
}

/// Memoised antipode for a fixed d.
pub struct Antipode {
    pub d: f64,
    memo: Mutex<HashMap<Diagram, ForestSum>>,
}

impl Antipode {
    pub fn new(d: f64) -> Self {
        Antipode {
            d,
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// 𝒜(Γ) = −Γ − Σ_F 𝒜(F)·(Γ/F) for connected Γ.
    pub fn of(&self, g: &Diagram) -> Result<ForestSum> {
        if !g.is_connected() {
            return Err(Error::Precondition(
                "antipode is defined on connected diagrams; use of_forest".into(),
            ));
        }
        let c = canonical(g);
        if let Some(v) = self.memo.lock().unwrap().get(&c) {
            return Ok(v.clone());
        }
        let mut out = ForestSum::single(Forest::of(&c), ri(-1));
        for f in divergent_forests(&c, self.d) {
            let mut af = ForestSum::one();
            for s in &f {
                af = af.mul(&self.of(&c.induced(s))?);
            }
            let quotient = Forest::of(&contract(&c, &f));
            out = out.plus(&af.mul_forest(&quotient).scale(&ri(-1)));
        }
        self.memo.lock().unwrap().insert(c, out.clone());
        Ok(out)
    }

    /// Multiplicative extension.
    pub fn of_forest(&self, f: &Forest) -> Result<ForestSum> {
        let mut acc = ForestSum::one();
        for g in &f.0 {
            acc = acc.mul(&self.of(g)?);
        }
        Ok(acc)
    }

    /// The recursion applied directly to a possibly disconnected diagram.
    pub fn of_general(&self, g: &Diagram) -> Result<ForestSum> {
        let mut out = ForestSum::single(Forest::of(g), ri(-1));
        for f in divergent_forests(g, self.d) {
            let mut af = ForestSum::one();
            for s in &f {
                af = af.mul(&self.of(&g.induced(s))?);
            }
            out = out.plus(&af.mul_forest(&Forest::of(&contract(g, &f))).scale(&ri(-1)));
        }
        Ok(out)
    }

    /// 𝒜̃(Γ) = 𝒜(Γ)·1_{deg Γ ≤ 0}
    pub fn twisted(&self, g: &Diagram) -> Result<ForestSum> {
        if is_divergent(g, self.d) {
            self.of(g)
        } else {
            Ok(ForestSum::zero())
        }
    }

    pub fn twisted_forest(&self, f: &Forest) -> Result<ForestSum> {
        let mut acc = ForestSum::one();
        for g in &f.0 {
            acc = acc.mul(&self.twisted(g)?);
        }
        Ok(acc)
    }

    /// ℳ(𝒜̃⊗id)Δ Γ as a forest sum.
    pub fn bphz_symbolic(&self, g: &Diagram) -> Result<ForestSum> {
        let mut out = ForestSum::zero();
        for ((a, b), c) in ck_coproduct(g, self.d) {
            out = out.plus(&self.twisted_forest(&a)?.mul_forest(&b).scale(&c));
        }
        Ok(out)
    }

    /// The closed form: 0 if deg ≤ 0, −𝒜(Γ) otherwise.
    pub fn bphz_lemma(&self, g: &Diagram) -> Result<ForestSum> {
        if is_divergent(g, self.d) {
            Ok(ForestSum::zero())
        } else {
            Ok(self.of(g)?.scale(&ri(-1)))
        }
    }
}

/// Π_N^BPHZ(Γ) by both routes: (Π𝒜̃⊗Π)Δ Γ term by term, and the lemma's closed form.
pub fn bphz_valuate(g: &Diagram, val: &Valuator, ap: &Antipode) -> Result<(f64, f64)> {
    let mut direct = crate::lattice::KahanSum::new();
    for ((a, b), c) in ck_coproduct(g, ap.d) {
        let left = ap.twisted_forest(&a)?.valuate(val)?;
        if left == 0.0 {
            continue;
        }
        let right = ForestSum::single(b, Rational::one()).valuate(val)?;
        direct.add(to_f64(&c) * left * right);
    }
    let lemma = ap.bphz_lemma(g)?.valuate(val)?;
    Ok((direct.value(), lemma))
}

#[cfg(test)]
mod tests {
    use super::super::diagram::named;
    use super::*;

    #[test]
    fn degrees() {
        assert_eq!(degree(&named::fgiii(), 3.0), 0.0);
        assert_eq!(degree(&named::fgiiiplus(), 3.0), 1.0);
        assert_eq!(degree(&named::fgiv(), 3.0), -1.0);
        assert_eq!(degree_symbolic(&named::fgiii()), (-2, 6));
        assert_eq!(degree_symbolic(&named::fgiiiplus()), (-3, 10));
    }

    #[test]
    fn subgraph_examples() {
        assert!(divergent_subgraphs(&named::fgiv(), 1.0).is_empty());
        let s = divergent_subgraphs(&named::fgiiiplus(), 3.0);
        assert_eq!(s, vec![vec![0, 1]]);
        assert!(divergent_subgraphs(&named::fgiii(), 2.0).is_empty());
        assert!(!weinberg_check(&named::fgiiiplus(), 3.0));
    }

    #[test]
    fn coproduct_of_fgiiiplus() {
        let d = ck_coproduct(&named::fgiiiplus(), 3.0);
        assert_eq!(d.len(), 3);
        let left = Forest(vec![canonical(&named::fgiii())]);
        let right = Forest(vec![canonical(&named::fgii())]);
        assert_eq!(d[&(left, right)], ri(1));
        assert_eq!(ck_coproduct(&named::fgiv(), 1.0).len(), 2);
    }

    #[test]
    fn antipode_examples() {
        let ap = Antipode::new(3.0);
        let a = ap.of(&named::fgiiiplus()).unwrap();
        let mut expect = ForestSum::single(Forest::of(&named::fgiiiplus()), ri(-1));
        expect.add(
            Forest::of(&named::fgiii()).mul(&Forest::of(&named::fgii())),
            ri(1),
        );
        assert_eq!(a, expect);
        let p = ap.of(&named::fgiv()).unwrap();
        assert_eq!(p, ForestSum::single(Forest::of(&named::fgiv()), ri(-1)));
    }

    #[test]
    fn contraction_drops_whole_component() {
        let g = named::fgiii();
        assert_eq!(contract(&g, &[vec![0, 1]]).num_vertices(), 0);
    }
}
