use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

/// A vertex with `arity` legs. Labelled vertices are external points.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub arity: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Vertex {
    pub fn internal(arity: u32) -> Self {
        Vertex { arity, label: None }
    }

    pub fn external(label: &str) -> Self {
        Vertex {
            arity: 1,
            label: Some(label.to_string()),
        }
    }

    pub fn is_external(&self) -> bool {
        self.label.is_some()
    }
}

/// Multigraph with every leg paired: degree(v) = arity(v), loops counting twice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagram {
    pub vertices: Vec<Vertex>,
    /// Sorted list of (u, v) with u ≤ v.
    pub edges: Vec<(usize, usize)>,
}

impl Diagram {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = vertices.len();
        let mut deg = vec![0u32; n];
        let mut es = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b),
                    dim: n,
                });
            }
            deg[a] += 1;
            deg[b] += 1;
            es.push((a.min(b), a.max(b)));
        }
        for (v, vx) in vertices.iter().enumerate() {
            if deg[v] != vx.arity {
                return Err(Error::Invalid(format!(
                    "vertex {v} has arity {} but degree {}",
                    vx.arity, deg[v]
                )));
            }
        }
        es.sort_unstable();
        Ok(Diagram {
            vertices,
            edges: es,
        })
    }

    /// Vacuum diagram whose arities are read off the edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut deg = vec![0u32; n];
        for &(a, b) in edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        Diagram::new(
            deg.into_iter().map(Vertex::internal).collect(),
            edges.to_vec(),
        )
        .expect("consistent by construction")
    }

    pub fn empty() -> Self {
        Diagram {
            vertices: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_vacuum(&self) -> bool {
        self.vertices.iter().all(|v| !v.is_external())
    }

    pub fn externals(&self) -> Vec<(usize, &str)> {
        self.vertices
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.label.as_deref().map(|l| (i, l)))
            .collect()
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(|(a, b)| a == b)
    }

    /// m[u][v] = number of edges between u and v (loops on the diagonal).
    pub fn multiplicity_matrix(&self) -> Vec<Vec<u32>> {
        let n = self.num_vertices();
        let mut m = vec![vec![0u32; n]; n];
        for &(a, b) in &self.edges {
            m[a][b] += 1;
            if a != b {
                m[b][a] += 1;
            }
        }
        m
    }

    pub fn from_matrix(vertices: Vec<Vertex>, m: &[Vec<u32>]) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, row) in m.iter().enumerate() {
            for (j, &c) in row.iter().enumerate().skip(i) {
                for _ in 0..c {
                    edges.push((i, j));
                }
            }
        }
        Diagram::new(vertices, edges)
    }

    /// Connected components as sorted vertex lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.num_vertices();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Subgraph induced on `set`, keeping vertex order; arities become internal degrees.
    pub fn induced(&self, set: &[usize]) -> Diagram {
        let mut pos = vec![usize::MAX; self.num_vertices()];
        for (i, &v) in set.iter().enumerate() {
            pos[v] = i;
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|(a, b)| pos[*a] != usize::MAX && pos[*b] != usize::MAX)
            .map(|&(a, b)| (pos[a], pos[b]))
            .collect();
        let mut deg = vec![0u32; set.len()];
        for &(a, b) in &edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let vertices = set
            .iter()
            .zip(deg)
            .map(|(&v, a)| Vertex {
                arity: a,
                label: self.vertices[v].label.clone(),
            })
            .collect();
        Diagram::new(vertices, edges).expect("induced subgraph is consistent")
    }

    /// Disjoint union, `other` placed after `self`.
    pub fn disjoint_union(&self, other: &Diagram) -> Diagram {
        let off = self.num_vertices();
        let mut vertices = self.vertices.clone();
        vertices.extend(other.vertices.iter().cloned());
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(a, b)| (a + off, b + off)));
        Diagram::new(vertices, edges).unwrap()
    }

    /// Relabel: vertex `v` moves to position `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Diagram {
        let n = self.num_vertices();
        let mut vertices = vec![Vertex::internal(0); n];
        for (v, vx) in self.vertices.iter().enumerate() {
            vertices[perm[v]] = vx.clone();
        }
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| (perm[a], perm[b]))
            .collect();
        Diagram::new(vertices, edges).unwrap()
    }

    pub fn to_json(&self, canonical: bool) -> serde_json::Value {
        serde_json::json!({
            "vertices": self.vertices.iter().map(|v| v.arity).collect::<Vec<_>>(),
            "edges": self.edges,
            "externals": self.externals().iter().map(|(v, l)| serde_json::json!([v, l])).collect::<Vec<_>>(),
            "canonical": canonical,
        })
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph {name} {{\n");
        for (i, v) in self.vertices.iter().enumerate() {
            match &v.label {
                Some(l) => s.push_str(&format!("  v{i} [label=\"{l}\", shape=box];\n")),
                None => s.push_str(&format!("  v{i} [label=\"{}\"];\n", v.arity)),
            }
        }
        for (a, b) in &self.edges {
            s.push_str(&format!("  v{a} -- v{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vs: Vec<String> = self
            .vertices
            .iter()
            .map(|v| match &v.label {
                Some(l) => l.clone(),
                None => v.arity.to_string(),
            })
            .collect();
        let es: Vec<String> = self.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        write!(f, "[{}]{{{}}}", vs.join(","), es.join(","))
    }
}

/// Formal linear combination of canonical diagrams.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiagramSum(pub BTreeMap<Diagram, Rational>);

impl DiagramSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `c·Γ`, canonicalising Γ.
    pub fn add(&mut self, g: &Diagram, c: Rational) {
        self.add_canonical(super::canon::canonical(g), c);
    }

    pub fn add_canonical(&mut self, g: Diagram, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(g) {
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

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Diagram, &Rational)> {
        self.0.iter()
    }

    pub fn coeff(&self, g: &Diagram) -> Rational {
        self.0
            .get(&super::canon::canonical(g))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.0.values().fold(Rational::zero(), |a, b| a + b)
    }

    pub fn connected_part(&self) -> DiagramSum {
        DiagramSum(
            self.0
                .iter()
                .filter(|(g, _)| g.is_connected())
                .map(|(g, c)| (g.clone(), c.clone()))
                .collect(),
        )
    }

    pub fn scale(&self, c: &Rational) -> DiagramSum {
        let mut out = DiagramSum::new();
        for (g, v) in &self.0 {
            out.add_canonical(g.clone(), v * c);
        }
        out
    }
}

/// Named diagrams. Note the two spellings of "FGII": [`single_edge`] is the
/// one-edge diagram (valuation 1), [`fgii`] the double edge between two
/// arity-2 vertices that appears in contractions and in E[Y²].
pub mod named {
    use super::Diagram;

    pub fn single_edge() -> Diagram {
        Diagram::from_edges(2, &[(0, 1)])
    }

    pub fn fgii() -> Diagram {
        Diagram::from_edges(2, &[(0, 1), (0, 1)])
    }

    pub fn fgiii() -> Diagram {
        Diagram::from_edges(2, &[(0, 1), (0, 1), (0, 1)])
    }

    pub fn fgiv() -> Diagram {
        Diagram::from_edges(2, &[(0, 1), (0, 1), (0, 1), (0, 1)])
    }

    pub fn fgvi() -> Diagram {
        Diagram::from_edges(3, &[(0, 1), (0, 1), (1, 2), (1, 2), (0, 2), (0, 2)])
    }

    /// Bubble on vertices 0, 1 closed through the arity-2 vertex 2.
    pub fn fgiiiplus() -> Diagram {
        Diagram::from_edges(3, &[(0, 1), (0, 1), (0, 1), (0, 2), (1, 2)])
    }

    pub fn fg_two_two_one() -> Diagram {
        Diagram::from_edges(3, &[(0, 1), (0, 1), (1, 2), (1, 2), (0, 2)])
    }

    /// Two bubbles joined into a ring.
    pub fn bubble_ring() -> Diagram {
        Diagram::from_edges(
            4,
            &[
                (0, 1),
                (0, 1),
                (0, 1),
                (2, 3),
                (2, 3),
                (2, 3),
                (0, 2),
                (1, 3),
            ],
        )
    }

    /// K₄ with one perfect matching doubled.
    pub fn k4_doubled() -> Diagram {
        Diagram::from_edges(
            4,
            &[
                (0, 1),
                (0, 1),
                (2, 3),
                (2, 3),
                (0, 2),
                (0, 3),
                (1, 2),
                (1, 3),
            ],
        )
    }

    /// Four-cycle with every edge doubled.
    pub fn doubled_square() -> Diagram {
        Diagram::from_edges(
            4,
            &[
                (0, 1),
                (0, 1),
                (1, 2),
                (1, 2),
                (2, 3),
                (2, 3),
                (0, 3),
                (0, 3),
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_must_match_degree() {
        assert!(
            Diagram::new(vec![Vertex::internal(2), Vertex::internal(1)], vec![(0, 1)]).is_err()
        );
        let g = named::fgiiiplus();
        assert_eq!(
            g.vertices.iter().map(|v| v.arity).collect::<Vec<_>>(),
            vec![4, 4, 2]
        );
    }

    #[test]
    fn components_and_induced() {
        let g = named::fgiv().disjoint_union(&named::fgiv());
        assert_eq!(g.components().len(), 2);
        assert!(named::fgiv().is_connected());
        let h = named::fgiiiplus().induced(&[0, 1]);
        assert_eq!(h, named::fgiii());
    }

    #[test]
    fn json_and_dot() {
        let g = named::fgiii();
        let j = g.to_json(true);
        assert_eq!(j["edges"].as_array().unwrap().len(), 3);
        assert!(g.to_dot("g").contains("v0 -- v1"));
    }
}
