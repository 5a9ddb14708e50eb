use num_bigint::BigInt;
use num_traits::One;

use super::canon::canonical;
use super::diagram::{Diagram, DiagramSum, Vertex};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::rational::{factorial, rbig};
use crate::Rational;

/// Leg matchings grouped by isomorphism class, loops (self-contractions) excluded.
///
/// Internal vertices come first, then one arity-1 vertex per external label.
pub fn generate_diagrams(arities: &[u32], externals: &[&str]) -> Result<DiagramSum> {
    generate_with(arities, externals, false, Budget::from_env())
}

/// As [`generate_diagrams`] but keeping self-contractions.
pub fn generate_with_loops(arities: &[u32], externals: &[&str]) -> Result<DiagramSum> {
    generate_with(arities, externals, true, Budget::from_env())
}

pub fn generate_with(
    arities: &[u32],
    externals: &[&str],
    loops: bool,
    budget: Budget,
) -> Result<DiagramSum> {
    let mut vertices: Vec<Vertex> = arities.iter().map(|&a| Vertex::internal(a)).collect();
    vertices.extend(externals.iter().map(|l| Vertex::external(l)));
    let legs: u32 = vertices.iter().map(|v| v.arity).sum();
    if legs % 2 == 1 {
        return Err(Error::Parity(legs as usize));
    }
    let n = vertices.len();
    let numer: BigInt = vertices
        .iter()
        .fold(BigInt::one(), |a, v| a * factorial(v.arity as usize));
    let mut out = DiagramSum::new();
    let mut m = vec![vec![0u32; n]; n];
    let mut rem: Vec<u32> = vertices.iter().map(|v| v.arity).collect();
    let mut visited = 0u64;
    fill(0, 0, &mut m, &mut rem, loops, &mut |m| {
        visited += 1;
        budget.check("diagram enumeration", visited)?;
        let mut denom = BigInt::one();
        for i in 0..n {
            for j in i..n {
                denom *= factorial(m[i][j] as usize);
                if i == j {
                    denom *= BigInt::from(2u32).pow(m[i][i]);
                }
            }
        }
        let g = Diagram::from_matrix(vertices.clone(), m)?;
        out.add_canonical(canonical(&g), rbig(numer.clone()) / rbig(denom));
        Ok(())
    })?;
    Ok(out)
}

/// Walk the upper triangle (row i, column j ≥ i) assigning multiplicities.
fn fill(
    i: usize,
    j: usize,
    m: &mut Vec<Vec<u32>>,
    rem: &mut Vec<u32>,
    loops: bool,
    emit: &mut dyn FnMut(&Vec<Vec<u32>>) -> Result<()>,
) -> Result<()> {
    let n = rem.len();
    if i == n {
        return emit(m);
    }
    if j == n {
        if rem[i] != 0 {
            return Ok(());
        }
        return fill(i + 1, i + 1, m, rem, loops, emit);
    }
    // legs of row i still to place must fit in the columns that remain
    if j > i && rem[i] > rem[j..].iter().sum::<u32>() {
        return Ok(());
    }
    if i == j {
        if !loops {
            return fill(i, j + 1, m, rem, loops, emit);
        }
        for c in (0..=rem[i] / 2).rev() {
            m[i][i] = c;
            rem[i] -= 2 * c;
            fill(i, j + 1, m, rem, loops, emit)?;
            rem[i] += 2 * c;
        }
        m[i][i] = 0;
        return Ok(());
    }
    let max = rem[i].min(rem[j]);
    for c in (0..=max).rev() {
        m[i][j] = c;
        m[j][i] = c;
        rem[i] -= c;
        rem[j] -= c;
        fill(i, j + 1, m, rem, loops, emit)?;
        rem[i] += c;
        rem[j] += c;
    }
    m[i][j] = 0;
    m[j][i] = 0;
    Ok(())
}

/// Total number of leg matchings represented by a sum.
pub fn total_count(s: &DiagramSum) -> Rational {
    s.total()
}

#[cfg(test)]
mod tests {
    use super::super::diagram::named;
    use super::*;
    use crate::rational::ri;

    #[test]
    fn known_counts() {
        let two = generate_diagrams(&[4, 4], &[]).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two.coeff(&named::fgiv()), ri(24));
        let three = generate_diagrams(&[4, 4, 4], &[]).unwrap();
        assert_eq!(three.coeff(&named::fgvi()), ri(1728));
        assert!(generate_diagrams(&[1, 1, 4], &[]).unwrap().is_empty());
        assert!(generate_diagrams(&[4], &["x", "y"]).unwrap().is_empty());
        assert!(generate_diagrams(&[4], &[]).unwrap().is_empty());
        assert!(matches!(
            generate_diagrams(&[4, 3], &[]),
            Err(Error::Parity(7))
        ));
    }

    #[test]
    fn loops_reproduce_all_matchings() {
        // (4n−1)!! leg matchings in total
        assert_eq!(generate_with_loops(&[4], &[]).unwrap().total(), ri(3));
        assert_eq!(generate_with_loops(&[4, 4], &[]).unwrap().total(), ri(105));
        assert_eq!(
            generate_with_loops(&[4, 4, 4], &[]).unwrap().total(),
            ri(10395)
        );
    }

    #[test]
    fn two_point_order_two() {
        let s = generate_diagrams(&[4, 4], &["x", "y"]).unwrap();
        let chain = Diagram::new(
            vec![
                Vertex::internal(4),
                Vertex::internal(4),
                Vertex::external("x"),
                Vertex::external("y"),
            ],
            vec![(0, 1), (0, 1), (0, 1), (0, 2), (1, 3)],
        )
        .unwrap();
        assert_eq!(s.coeff(&chain), ri(192));
    }
}
