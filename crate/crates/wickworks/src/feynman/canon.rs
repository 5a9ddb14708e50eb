//! Canonical labelling: colour refinement, then the lexicographically smallest
//! multiplicity matrix over all orderings that respect the refined cells.

use std::collections::BTreeMap;

use super::diagram::{Diagram, Vertex};

/// Ordered cells of vertices; cell order is an isomorphism invariant.
fn refine(g: &Diagram) -> Vec<Vec<usize>> {
    let n = g.num_vertices();
    let m = g.multiplicity_matrix();
    let colour_of = |keys: &[Vec<u64>]| -> Vec<usize> {
        let mut sorted: Vec<&Vec<u64>> = keys.iter().collect();
        sorted.sort();
        sorted.dedup();
        keys.iter()
            .map(|k| sorted.binary_search(&k).unwrap())
            .collect()
    };
    // initial colour: (arity, label), ranked
    let mut vkeys: Vec<&Vertex> = g.vertices.iter().collect();
    vkeys.sort();
    vkeys.dedup();
    let mut colour: Vec<usize> = g
        .vertices
        .iter()
        .map(|v| vkeys.binary_search(&v).unwrap())
        .collect();
    let mut ncol = vkeys.len();
    loop {
        let keys: Vec<Vec<u64>> = (0..n)
            .map(|v| {
                let mut nb: Vec<(usize, u32)> = (0..n)
                    .filter(|&u| u != v && m[v][u] > 0)
                    .map(|u| (colour[u], m[v][u]))
                    .collect();
                nb.sort_unstable();
                let mut key = vec![colour[v] as u64, m[v][v] as u64];
                for (c, k) in nb {
                    key.push(c as u64);
                    key.push(k as u64);
                }
                key
            })
            .collect();
        let next = colour_of(&keys);
        let k = next.iter().max().map_or(0, |x| x + 1);
        colour = next;
        if k == ncol {
            break;
        }
        ncol = k;
    }
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        cells.entry(colour[v]).or_default().push(v);
    }
    cells.into_values().collect()
}

fn code(m: &[Vec<u32>], order: &[usize]) -> Vec<u32> {
    let n = order.len();
    let mut c = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            c.push(m[order[i]][order[j]]);
        }
    }
    c
}

fn next_perm(a: &mut [usize]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Canonical representative of the isomorphism class of `g`.
pub fn canonical(g: &Diagram) -> Diagram {
    let cells = refine(g);
    let m = g.multiplicity_matrix();
    let mut cur: Vec<Vec<usize>> = cells.clone();
    for c in cur.iter_mut() {
        c.sort_unstable();
    }
    let mut best: Option<(Vec<u32>, Vec<usize>)> = None;
    loop {
        let order: Vec<usize> = cur.iter().flatten().copied().collect();
        let c = code(&m, &order);
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, order));
        }
        // odometer over the per-cell permutations
        let mut advanced = false;
        for cell in cur.iter_mut().rev() {
            if next_perm(cell) {
                advanced = true;
                break;
            }
            cell.sort_unstable();
        }
        if !advanced {
            break;
        }
    }
    let order = best.unwrap().1;
    let mut perm = vec![0; order.len()];
    for (pos, &v) in order.iter().enumerate() {
        perm[v] = pos;
    }
    g.permuted(&perm)
}

/// Brute-force isomorphism test over all vertex permutations.
pub fn isomorphic_brute(a: &Diagram, b: &Diagram) -> bool {
    let n = a.num_vertices();
    if n != b.num_vertices() || a.num_edges() != b.num_edges() {
        return false;
    }
    let mb = b.multiplicity_matrix();
    let ma = a.multiplicity_matrix();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let ok = (0..n).all(|v| a.vertices[v] == b.vertices[perm[v]])
            && (0..n).all(|u| (0..n).all(|v| ma[u][v] == mb[perm[u]][perm[v]]));
        if ok {
            return true;
        }
        if !next_perm(&mut perm) {
            return false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::diagram::named;
    use super::*;

    #[test]
    fn relabelled_copies_agree() {
        for g in [
            named::fgvi(),
            named::fgiiiplus(),
            named::k4_doubled(),
            named::bubble_ring(),
        ] {
            let c = canonical(&g);
            let n = g.num_vertices();
            let mut perm: Vec<usize> = (0..n).collect();
            loop {
                assert_eq!(canonical(&g.permuted(&perm)), c);
                if !next_perm(&mut perm) {
                    break;
                }
            }
        }
    }

    #[test]
    fn distinguishes_non_isomorphic() {
        let a = canonical(&named::k4_doubled());
        let b = canonical(&named::doubled_square());
        assert_ne!(a, b);
        assert!(!isomorphic_brute(&a, &b));
        assert!(isomorphic_brute(
            &named::fgiiiplus(),
            &canonical(&named::fgiiiplus())
        ));
    }

    #[test]
    fn labels_are_respected() {
        let x = Vertex::external("x");
        let y = Vertex::external("y");
        let a = Diagram::new(
            vec![x.clone(), y.clone(), Vertex::internal(2)],
            vec![(0, 2), (1, 2)],
        )
        .unwrap();
        let b = Diagram::new(vec![y, Vertex::internal(2), x], vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(canonical(&a), canonical(&b));
    }
}
