//! Momentum-space valuation Π_N(Γ) = Σ_{k_e ∈ 𝒦_N, conserved} Π_e λ_{k_e}^{−s}.
//!
//! The graph is reduced with concrete momentum injections at the vertices:
//! self-loops become sums, parallel edges convolutions, pendant vertices
//! point evaluations and degree-2 vertices shifted products. When none of
//! these apply, one edge is cut and its momentum summed over explicitly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::canon::canonical;
use super::diagram::Diagram;
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::lattice::{self, conv, kahan, l1, LatFn, Mode};
use crate::mc::run_batched;
use crate::torusfield::ModeLattice;
use rand::Rng;

/// Lattice dimension and propagator exponent s for a (possibly fractional) d.
///
/// Integer d ∈ {1, 2, 3} uses λ^{−1} on ℤ^d; d ∈ (3, 4) uses λ^{−(5−d)/2} on ℤ³.
pub fn lattice_model(d: f64) -> Result<(usize, f64)> {
    if d.fract() == 0.0 && (1.0..=3.0).contains(&d) {
        Ok((d as usize, 1.0))
    } else if d > 3.0 && d < 4.0 {
        Ok((3, (5.0 - d) / 2.0))
    } else {
        Err(Error::Invalid(format!(
            "no lattice model for d = {d}; use 1, 2, 3 or d in (3, 4)"
        )))
    }
}

#[derive(Clone)]
struct Edge {
    u: usize,
    w: usize,
    f: Arc<LatFn>,
    cap: i64,
}

#[derive(Clone)]
struct State {
    inj: Vec<Option<Mode>>,
    edges: Vec<Edge>,
    scalar: f64,
}

struct Engine<'a> {
    budget: Budget,
    work: &'a AtomicU64,
}

impl Engine<'_> {
    fn charge(&self, units: usize) -> Result<()> {
        let w = self.work.fetch_add(units as u64, Ordering::Relaxed) + units as u64;
        self.budget.check("lattice valuation", w)
    }

    fn bound(&self, st: &State, v: usize, skip: &[usize]) -> i64 {
        let other: i64 = st
            .edges
            .iter()
            .enumerate()
            .filter(|(i, e)| !skip.contains(i) && (e.u == v || e.w == v))
            .map(|(_, e)| if e.u == e.w { 0 } else { e.cap })
            .sum();
        other + l1(&st.inj[v].unwrap())
    }

    /// One reduction step; Ok(false) when none applies, Err-free zero via scalar = 0.
    fn step(&self, st: &mut State) -> Result<bool> {
        // self-loops
        if let Some(i) = st.edges.iter().position(|e| e.u == e.w) {
            let e = st.edges.swap_remove(i);
            st.scalar *= e.f.sum();
            return Ok(true);
        }
        // parallel edges
        for i in 0..st.edges.len() {
            for j in i + 1..st.edges.len() {
                let (a, b) = (&st.edges[i], &st.edges[j]);
                let same = a.u == b.u && a.w == b.w;
                let flipped = a.u == b.w && a.w == b.u;
                if !(same || flipped) {
                    continue;
                }
                let g = if same {
                    b.f.clone()
                } else {
                    Arc::new(b.f.reflect())
                };
                let (u, w) = (a.u, a.w);
                let others = |x: usize| {
                    st.edges
                        .iter()
                        .enumerate()
                        .filter(|(k, e)| *k != i && *k != j && (e.u == x || e.w == x))
                        .count()
                };
                // an endpoint with nothing else attached: only one value of f * g is needed
                let end = if others(u) == 0 {
                    Some((u, w, st.inj[u].unwrap()))
                } else if others(w) == 0 {
                    Some((w, u, lattice::neg(&st.inj[w].unwrap())))
                } else {
                    None
                };
                if let Some((v, x, k)) = end {
                    self.charge(a.f.nnz().min(g.nnz()))?;
                    st.scalar *= lattice::conv_at(&a.f, &g, &k);
                    let pv = st.inj[v].unwrap();
                    let q = st.inj[x].unwrap();
                    st.inj[x] = Some(lattice::add(&q, &pv));
                    st.inj[v] = None;
                    st.edges.swap_remove(j);
                    st.edges.swap_remove(i);
                    return Ok(true);
                }
                let rout = (a.cap + b.cap)
                    .min(self.bound(st, a.u, &[i, j]))
                    .min(self.bound(st, a.w, &[i, j]))
                    .max(0);
                let r = (rout as usize).min(a.f.r + g.r);
                self.charge(lattice::conv_cost(&a.f, &g, r) as usize)?;
                let h = conv(&a.f, &g, r);
                let merged = Edge {
                    u: a.u,
                    w: a.w,
                    f: Arc::new(h),
                    cap: rout,
                };
                st.edges.swap_remove(j);
                st.edges[i] = merged;
                return Ok(true);
            }
        }
        // low-degree vertices
        let n = st.inj.len();
        let mut inc: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, e) in st.edges.iter().enumerate() {
            inc[e.u].push(i);
            inc[e.w].push(i);
        }
        for v in 0..n {
            let Some(p) = st.inj[v] else { continue };
            match inc[v].len() {
                0 => {
                    if p != [0; 3] {
                        st.scalar = 0.0;
                    }
                    st.inj[v] = None;
                    return Ok(true);
                }
                1 => {
                    let e = st.edges.swap_remove(inc[v][0]);
                    let (k, x) = if e.w == v {
                        (lattice::neg(&p), e.u)
                    } else {
                        (p, e.w)
                    };
                    st.scalar *= e.f.get(&k);
                    let q = st.inj[x].unwrap();
                    st.inj[x] = Some(lattice::add(&q, &p));
                    st.inj[v] = None;
                    return Ok(true);
                }
                2 => {
                    let (i1, i2) = (inc[v][0], inc[v][1]);
                    let (e1, e2) = (st.edges[i1].clone(), st.edges[i2].clone());
                    let (f, x) = if e1.w == v {
                        (e1.f.clone(), e1.u)
                    } else {
                        (Arc::new(e1.f.reflect()), e1.w)
                    };
                    let (g, y) = if e2.u == v {
                        (e2.f.clone(), e2.w)
                    } else {
                        (Arc::new(e2.f.reflect()), e2.u)
                    };
                    self.charge(f.len())?;
                    let cap = e1.cap.min(e2.cap + l1(&p));
                    let mut h = f.shifted_product(&g, &p);
                    let r = (cap.max(0) as usize).min(h.r);
                    if r < h.r {
                        h = h.resize(r);
                    }
                    let (hi, lo) = (i1.max(i2), i1.min(i2));
                    st.edges.swap_remove(hi);
                    st.edges.swap_remove(lo);
                    st.edges.push(Edge {
                        u: x,
                        w: y,
                        f: Arc::new(h),
                        cap,
                    });
                    let q = st.inj[y].unwrap();
                    st.inj[y] = Some(lattice::add(&q, &p));
                    st.inj[v] = None;
                    return Ok(true);
                }
                _ => {}
            }
        }
        Ok(false)
    }

    fn eval(&self, mut st: State, depth: usize) -> Result<f64> {
        while st.scalar != 0.0 && self.step(&mut st)? {}
        if st.scalar == 0.0 || st.edges.is_empty() {
            return Ok(st.scalar);
        }
        // cut the edge with the smallest support
        let (ci, _) = st
            .edges
            .iter()
            .enumerate()
            .min_by_key(|(_, e)| e.f.nnz())
            .unwrap();
        let cut = st.edges.swap_remove(ci);
        let support = cut.f.support();
        let one = |(k, fk): &(Mode, f64)| -> Result<f64> {
            let mut s = st.clone();
            let pu = s.inj[cut.u].unwrap();
            let pw = s.inj[cut.w].unwrap();
            s.inj[cut.u] = Some(lattice::add(&pu, &lattice::neg(k)));
            s.inj[cut.w] = Some(lattice::add(&pw, k));
            Ok(fk * self.eval(s, depth + 1)?)
        };
        let terms: Vec<f64> = if depth == 0 {
            support.par_iter().map(one).collect::<Result<Vec<_>>>()?
        } else {
            support.iter().map(one).collect::<Result<Vec<_>>>()?
        };
        Ok(st.scalar * kahan(terms))
    }
}

fn run(
    g: &Diagram,
    dl: usize,
    s: f64,
    n: usize,
    inj: &[(usize, Mode)],
    budget: Budget,
) -> Result<f64> {
    let lat = ModeLattice::new(dl, n)?;
    let w = Arc::new(lat.weight_fn(s));
    let mut injv = vec![Some([0i64; 3]); g.num_vertices()];
    for &(v, p) in inj {
        injv[v] = Some(p);
    }
    let edges = g
        .edges
        .iter()
        .map(|&(a, b)| Edge {
            u: a,
            w: b,
            f: w.clone(),
            cap: n as i64,
        })
        .collect();
    let work = AtomicU64::new(0);
    let eng = Engine {
        budget,
        work: &work,
    };
    eng.eval(
        State {
            inj: injv,
            edges,
            scalar: 1.0,
        },
        0,
    )
}

/// Π_N(Γ) for a vacuum diagram.
pub fn valuate(g: &Diagram, d: f64, n: usize) -> Result<f64> {
    valuate_with_budget(g, d, n, Budget::from_env())
}

pub fn valuate_with_budget(g: &Diagram, d: f64, n: usize, budget: Budget) -> Result<f64> {
    if !g.is_vacuum() {
        return Err(Error::Precondition(
            "diagram has external legs; use valuate_external".into(),
        ));
    }
    let (dl, s) = lattice_model(d)?;
    run(&canonical(g), dl, s, n, &[], budget)
}

/// Π_N(Γ; p): momentum p enters at the first external label (sorted) and leaves at the second.
pub fn valuate_external(g: &Diagram, d: f64, n: usize, p: Mode) -> Result<f64> {
    let g = &canonical(g);
    let mut ext = g.externals();
    if ext.len() != 2 {
        return Err(Error::Precondition(format!(
            "expected two external legs, found {}",
            ext.len()
        )));
    }
    ext.sort_by(|a, b| a.1.cmp(b.1));
    let (dl, s) = lattice_model(d)?;
    run(
        g,
        dl,
        s,
        n,
        &[(ext[0].0, p), (ext[1].0, lattice::neg(&p))],
        Budget::from_env(),
    )
}

/// Σ_{p∈𝒦_N} cos(2πp·(x−y)) Π_N(Γ; p).
pub fn two_point_value(g: &Diagram, d: usize, n: usize, xy: &[f64]) -> Result<f64> {
    let lat = ModeLattice::new(d, n)?;
    let vals: Vec<f64> = lat
        .modes
        .par_iter()
        .map(|p| valuate_external(g, d as f64, n, *p))
        .collect::<Result<Vec<_>>>()?;
    Ok(kahan(lat.modes.iter().zip(vals).map(|(p, v)| {
        let th = 2.0 * PI * p.iter().zip(xy).map(|(&a, &b)| a as f64 * b).sum::<f64>();
        th.cos() * v
    })))
}

/// Monte Carlo of ∫ Π_e G_N(x_{e⁺} − x_{e⁻}) with vertex 0 pinned at the origin.
pub fn valuate_position_mc(
    g: &Diagram,
    d: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !g.is_vacuum() {
        return Err(Error::Precondition(
            "position Monte Carlo needs a vacuum diagram".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::Precondition("samples must be positive".into()));
    }
    let lat = ModeLattice::new(d, n)?;
    let inv: Vec<f64> = lat.lambdas.iter().map(|l| 1.0 / l).collect();
    let green = |dx: &[f64]| -> f64 {
        lat.modes
            .iter()
            .zip(&inv)
            .map(|(k, w)| {
                w * (2.0 * PI * k.iter().zip(dx).map(|(&a, &b)| a as f64 * b).sum::<f64>()).cos()
            })
            .sum()
    };
    let nv = g.num_vertices();
    let stats = run_batched(samples, seed, |rng| {
        let mut x = vec![0.0; nv * d];
        for v in x.iter_mut().skip(d) {
            *v = rng.random::<f64>();
        }
        let mut prod = 1.0;
        let mut dx = vec![0.0; d];
        for &(a, b) in &g.edges {
            for i in 0..d {
                dx[i] = x[a * d + i] - x[b * d + i];
            }
            prod *= green(&dx);
        }
        prod
    });
    Ok((stats.mean, stats.stderr()))
}

/// Memoised valuations keyed by canonical form, for fixed (d, N).
pub struct Valuator {
    pub d: f64,
    pub n: usize,
    pub budget: Budget,
    cache: Mutex<HashMap<Diagram, f64>>,
}

impl Valuator {
    pub fn new(d: f64, n: usize) -> Result<Self> {
        lattice_model(d)?;
        Ok(Valuator {
            d,
            n,
            budget: Budget::from_env(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_budget(mut self, b: Budget) -> Self {
        self.budget = b;
        self
    }

    /// Π_N of a vacuum diagram; disconnected diagrams factor over components.
    pub fn value(&self, g: &Diagram) -> Result<f64> {
        let c = canonical(g);
        if let Some(v) = self.cache.lock().unwrap().get(&c) {
            return Ok(*v);
        }
        let comps = c.components();
        let v = if comps.len() > 1 {
            let mut acc = 1.0;
            for comp in comps {
                acc *= self.value(&c.induced(&comp))?;
            }
            acc
        } else if c.num_edges() == 0 {
            1.0
        } else {
            valuate_with_budget(&c, self.d, self.n, self.budget)?
        };
        self.cache.lock().unwrap().insert(c, v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::super::diagram::named;
    use super::*;
    use crate::torusfield::{c_variance, lambda, wick_integral_variance};

    fn w(d: usize, k: &Mode) -> f64 {
        1.0 / lambda(d, k)
    }

    #[test]
    fn single_edge_is_one() {
        for d in [1.0, 2.0, 3.0] {
            assert_eq!(valuate(&named::single_edge(), d, 6).unwrap(), 1.0);
        }
    }

    #[test]
    fn fgiv_brute_force_d1() {
        let n = 3i64;
        let mut s = 0.0;
        for a in -n..=n {
            for b in -n..=n {
                for c in -n..=n {
                    let e = -(a + b + c);
                    if e.abs() <= n {
                        s += [a, b, c, e]
                            .iter()
                            .map(|&k| w(1, &[k, 0, 0]))
                            .product::<f64>();
                    }
                }
            }
        }
        let v = valuate(&named::fgiv(), 1.0, 3).unwrap();
        assert!((v - s).abs() < 1e-14 * s);
    }

    #[test]
    fn fgiv_matches_wick_variance() {
        for (d, n) in [(1, 8), (2, 6), (3, 3)] {
            let a = valuate(&named::fgiv(), d as f64, n).unwrap();
            let b = wick_integral_variance(d, n, 4).unwrap() / 24.0;
            assert!((a - b).abs() < 1e-11 * b, "d={d}");
        }
    }

    #[test]
    fn loop_gives_c_n() {
        let g = Diagram::from_edges(1, &[(0, 0)]);
        assert!((valuate(&g, 2.0, 5).unwrap() - c_variance(2, 5).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn k4_doubled_brute_force() {
        // edges: 01,01,23,23,02,03,12,13; brute force over all momenta, d = 1, N = 2
        let g = named::k4_doubled();
        let n = 2i64;
        let ks: Vec<i64> = (-n..=n).collect();
        let mut s = 0.0;
        let ne = g.edges.len();
        let mut idx = vec![0usize; ne];
        loop {
            let mut bal = [0i64; 4];
            for (e, &(a, b)) in g.edges.iter().enumerate() {
                bal[a] -= ks[idx[e]];
                bal[b] += ks[idx[e]];
            }
            if bal.iter().all(|&x| x == 0) {
                s += idx.iter().map(|&i| w(1, &[ks[i], 0, 0])).product::<f64>();
            }
            let mut pos = 0;
            while pos < ne {
                idx[pos] += 1;
                if idx[pos] < ks.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == ne {
                break;
            }
        }
        let v = valuate(&g, 1.0, 2).unwrap();
        assert!((v - s).abs() < 1e-13 * s, "{v} vs {s}");
    }

    #[test]
    fn isomorphic_presentations_agree() {
        let g = named::k4_doubled();
        let h = g.permuted(&[2, 0, 3, 1]);
        assert_eq!(
            valuate(&g, 2.0, 3).unwrap().to_bits(),
            valuate(&h, 2.0, 3).unwrap().to_bits()
        );
    }

    #[test]
    fn budget_is_enforced() {
        let r = valuate_with_budget(&named::k4_doubled(), 2.0, 4, Budget(10));
        assert!(matches!(r, Err(Error::Budget { .. })));
    }

    #[test]
    fn external_order_zero_is_green() {
        use super::super::diagram::Vertex;
        let g = Diagram::new(
            vec![Vertex::external("x"), Vertex::external("y")],
            vec![(0, 1)],
        )
        .unwrap();
        let v = two_point_value(&g, 1, 6, &[0.3]).unwrap();
        let gr = crate::torusfield::green_truncated(&[0.3], 1, 6).unwrap();
        assert!((v - gr).abs() < 1e-14);
    }
}
