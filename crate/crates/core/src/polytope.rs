//! Exact vertex enumeration for symmetric polytopes `{x : <a_i, x> <= 1}`
//! by the double description method over the integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Rational;

#[derive(Clone, Debug)]
struct Ray {
    coords: Vec<BigInt>,
    zeros: Vec<u64>,
}

fn bit_set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn count_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

fn subset_of_and(a: &[u64], b: &[u64], c: &[u64]) -> bool {
    a.iter().zip(b).zip(c).all(|((x, y), z)| (x & y) & !z == 0)
}

fn ones(bits: &[u64]) -> impl Iterator<Item = usize> + '_ {
    bits.iter().enumerate().flat_map(|(w, &word)| {
        (0..64).filter(move |b| word >> b & 1 == 1).map(move |b| w * 64 + b)
    })
}

fn primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in v.iter_mut() {
            *x /= &g;
        }
    }
    v
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Integer row `(1, -a)` scaled by the common denominator of `a`.
fn cone_row(a: &[Rational]) -> Vec<BigInt> {
    let l = a.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let mut row = Vec::with_capacity(a.len() + 1);
    row.push(l.clone());
    for x in a {
        row.push(-(x.numer() * (&l / x.denom())));
    }
    primitive(row)
}

/// Vertices of the bounded polytope `{x : <a_i, x> <= 1 for all i}`, which
/// must contain the origin in its interior. Errors if unbounded or if more
/// than `max_vertices` intermediate rays appear.
pub fn enumerate_vertices(facets: &[Vec<Rational>], max_vertices: usize) -> Result<Vec<Vec<Rational>>> {
    let n = facets.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::InvalidInput("no facets".into()));
    }
    if facets.iter().any(|f| f.len() != n) {
        return Err(Error::InvalidInput("facets of mixed dimension".into()));
    }
    let d = n + 1;
    let rows: Vec<Vec<BigInt>> = facets.iter().map(|f| cone_row(f)).collect();
    let words = rows.len().div_ceil(64);

    // initial basis: greedy independent rows
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..rows.len() {
        let mut trial: Vec<Vec<Rational>> = basis
            .iter()
            .map(|&b| rows[b].iter().map(|x| Rational::from_integer(x.clone())).collect())
            .collect();
        trial.push(rows[i].iter().map(|x| Rational::from_integer(x.clone())).collect());
        if Matrix::from_rows(trial)?.rank(0.0) == basis.len() + 1 {
            basis.push(i);
            if basis.len() == d {
                break;
            }
        }
    }
    if basis.len() < d {
        return Err(Error::InvalidInput("polytope is unbounded or degenerate".into()));
    }
    let a_b = Matrix::from_rows(
        basis
            .iter()
            .map(|&b| rows[b].iter().map(|x| Rational::from_integer(x.clone())).collect())
            .collect(),
    )?;
    let inv = a_b.inverse(0.0)?;
    let mut rays: Vec<Ray> = Vec::with_capacity(d);
    for j in 0..d {
        let col = inv.column(j);
        let l = col.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
        let coords = primitive(col.iter().map(|x| x.numer() * (&l / x.denom())).collect());
        let mut zeros = vec![0u64; words];
        for (k, &b) in basis.iter().enumerate() {
            if k != j {
                bit_set(&mut zeros, b);
            }
        }
        rays.push(Ray { coords, zeros });
    }

    let mut in_basis = vec![false; rows.len()];
    for &b in &basis {
        in_basis[b] = true;
    }
    for (ri, row) in rows.iter().enumerate() {
        if in_basis[ri] {
            continue;
        }
        let vals: Vec<BigInt> = rays.iter().map(|r| dot(row, &r.coords)).collect();
        let plus: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let minus: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        if minus.is_empty() {
            for (i, v) in vals.iter().enumerate() {
                if v.is_zero() {
                    bit_set(&mut rays[i].zeros, ri);
                }
            }
            continue;
        }
        let current = &rays;
        // rays incident to each processed row, to find blocking rays quickly
        let mut incident: Vec<Vec<u32>> = vec![Vec::new(); rows.len()];
        for (k, r) in current.iter().enumerate() {
            for (w, word) in r.zeros.iter().enumerate() {
                let mut bits = *word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    incident[w * 64 + b].push(k as u32);
                    bits &= bits - 1;
                }
            }
        }
        let fresh: Vec<Ray> = crate::par::map(&plus, |&p| {
            let mut local = Vec::new();
            for &m in &minus {
                let (zp, zm) = (&current[p].zeros, &current[m].zeros);
                if (count_and(zp, zm) as usize) + 2 < d {
                    continue;
                }
                let common: Vec<u64> = zp.iter().zip(zm).map(|(a, b)| a & b).collect();
                let shortest = ones(&common).min_by_key(|&r| incident[r].len()).expect("nonempty");
                let adjacent = incident[shortest].iter().all(|&k| {
                    let k = k as usize;
                    k == p || k == m || !subset_of_and(zp, zm, &current[k].zeros)
                });
                if !adjacent {
                    continue;
                }
                let coords: Vec<BigInt> = current[m]
                    .coords
                    .iter()
                    .zip(&current[p].coords)
                    .map(|(cm, cp)| &vals[p] * cm - &vals[m] * cp)
                    .collect();
                let mut zeros: Vec<u64> = zp.iter().zip(zm).map(|(a, b)| a & b).collect();
                bit_set(&mut zeros, ri);
                local.push(Ray { coords: primitive(coords), zeros });
            }
            local
        })
        .into_iter()
        .flatten()
        .collect();
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (i, mut r) in rays.into_iter().enumerate() {
            if vals[i].is_positive() {
                next.push(r);
            } else if vals[i].is_zero() {
                bit_set(&mut r.zeros, ri);
                next.push(r);
            }
        }
        next.extend(fresh);
        if next.len() > max_vertices {
            return Err(Error::CapExceeded { what: "vertex enumeration rays".into(), cap: max_vertices });
        }
        rays = next;
    }

    let mut out = Vec::with_capacity(rays.len());
    for r in rays {
        let t = &r.coords[0];
        if !t.is_positive() {
            return Err(Error::InvalidInput("polytope is unbounded".into()));
        }
        out.push(r.coords[1..].iter().map(|x| Rational::new(x.clone(), t.clone())).collect());
    }
    out.sort();
    Ok(out)
}

/// Maximum of `|<a, x>|` over the facet list (the gauge for a symmetric body).
pub fn gauge(facets: &[Vec<Rational>], x: &[Rational]) -> Rational {
    facets
        .iter()
        .map(|f| f.iter().zip(x).map(|(a, b)| a * b).sum::<Rational>())
        .fold(Rational::zero(), |m, v| m.max(v.abs()))
}

/// Tight-vertex sets of the functionals that define true facets
/// (tight set of full linear rank), deduplicated and sorted.
pub fn facet_incidence(vertices: &[Vec<Rational>], functionals: &[Vec<Rational>]) -> Result<Vec<Vec<usize>>> {
    let n = vertices.first().map_or(0, Vec::len);
    let one = Rational::one();
    let approx: Vec<Vec<f64>> = vertices.iter().map(|v| v.iter().map(crate::scalar::rational_to_f64).collect()).collect();
    let sets: Vec<Vec<usize>> = crate::par::map(functionals, |f| {
        let fa: Vec<f64> = f.iter().map(crate::scalar::rational_to_f64).collect();
        (0..vertices.len())
            .filter(|&v| (fa.iter().zip(&approx[v]).map(|(a, b)| a * b).sum::<f64>() - 1.0).abs() < 1e-7)
            .filter(|&v| f.iter().zip(&vertices[v]).map(|(a, b)| a * b).sum::<Rational>() == one)
            .collect()
    });
    let mut out = Vec::new();
    for s in sets {
        if s.len() >= n && spans(s.iter().map(|&v| &vertices[v]), n) {
            out.push(s);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Whether the vectors span `R^n` (exact, stops as soon as a basis is found).
fn spans<'a>(rows: impl Iterator<Item = &'a Vec<Rational>>, n: usize) -> bool {
    let mut basis: Vec<(usize, Vec<Rational>)> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for (p, b) in &basis {
            if !v[*p].is_zero() {
                let f = v[*p].clone();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= &f * y;
                }
            }
        }
        if let Some(p) = v.iter().position(|x| !x.is_zero()) {
            let inv = v[p].recip();
            for x in v.iter_mut() {
                *x *= &inv;
            }
            basis.push((p, v));
            if basis.len() == n {
                return true;
            }
        }
    }
    false
}

/// Colour refinement on the vertex-facet incidence graph. Any linear
/// symmetry of the polytope preserves the resulting vertex colours.
pub fn incidence_colors(vertex_count: usize, facets: &[Vec<usize>]) -> Vec<usize> {
    let mut vertex_facets: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
    for (fi, f) in facets.iter().enumerate() {
        for &v in f {
            vertex_facets[v].push(fi);
        }
    }
    let mut vc = vec![0usize; vertex_count];
    let mut fc = vec![0usize; facets.len()];
    let mut classes = 1;
    loop {
        let fkeys: Vec<(usize, Vec<usize>)> = facets
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut k: Vec<usize> = f.iter().map(|&v| vc[v]).collect();
                k.sort_unstable();
                (fc[i], k)
            })
            .collect();
        fc = rank_keys(&fkeys);
        let vkeys: Vec<(usize, Vec<usize>)> = (0..vertex_count)
            .map(|v| {
                let mut k: Vec<usize> = vertex_facets[v].iter().map(|&f| fc[f]).collect();
                k.sort_unstable();
                (vc[v], k)
            })
            .collect();
        vc = rank_keys(&vkeys);
        let now = vc.iter().max().map_or(0, |m| m + 1) + fc.iter().max().map_or(0, |m| m + 1);
        if now == classes {
            return vc;
        }
        classes = now;
    }
}

fn rank_keys<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).expect("present")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};
    use std::collections::BTreeSet;

    fn cube(n: usize) -> Vec<Vec<Rational>> {
        let mut f = Vec::new();
        for i in 0..n {
            for s in [1, -1] {
                let mut v = vec![rat_int(0); n];
                v[i] = rat_int(s);
                f.push(v);
            }
        }
        f
    }

    /// Oracle: intersect every n-subset of facet hyperplanes.
    fn brute_vertices(facets: &[Vec<Rational>]) -> BTreeSet<Vec<Rational>> {
        let n = facets[0].len();
        let mut out = BTreeSet::new();
        let idx: Vec<usize> = (0..facets.len()).collect();
        let mut stack = vec![(0usize, Vec::<usize>::new())];
        while let Some((start, chosen)) = stack.pop() {
            if chosen.len() == n {
                let m = Matrix::from_rows(chosen.iter().map(|&i| facets[i].clone()).collect()).unwrap();
                if let Ok(inv) = m.inverse(0.0) {
                    let x = inv.apply(&vec![rat_int(1); n]).unwrap();
                    if gauge(facets, &x) <= rat_int(1) {
                        out.insert(x);
                    }
                }
                continue;
            }
            for &i in &idx[start..] {
                let mut c = chosen.clone();
                c.push(i);
                stack.push((i + 1, c));
            }
        }
        out
    }

    #[test]
    fn cube_vertices() {
        let v = enumerate_vertices(&cube(3), 1000).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|x| x.iter().all(|c| c.abs() == rat_int(1))));
    }

    #[test]
    fn cross_polytope_vertices() {
        let mut f = Vec::new();
        for s0 in [1, -1] {
            for s1 in [1, -1] {
                for s2 in [1, -1] {
                    f.push(vec![rat_int(s0), rat_int(s1), rat_int(s2)]);
                }
            }
        }
        let v = enumerate_vertices(&f, 1000).unwrap();
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn matches_brute_force_on_cut_square() {
        let mut f = cube(2);
        f.push(vec![rat(2, 3), rat(2, 3)]);
        f.push(vec![rat(-2, 3), rat(-2, 3)]);
        f.push(vec![rat(1, 2), rat(-3, 4)]);
        f.push(vec![rat(-1, 2), rat(3, 4)]);
        let v: BTreeSet<_> = enumerate_vertices(&f, 1000).unwrap().into_iter().collect();
        assert_eq!(v, brute_vertices(&f));
    }

    #[test]
    fn cube_incidence() {
        let f = cube(3);
        let v = enumerate_vertices(&f, 1000).unwrap();
        let inc = facet_incidence(&v, &f).unwrap();
        assert_eq!(inc.len(), 6);
        assert!(inc.iter().all(|s| s.len() == 4));
        let colors = incidence_colors(v.len(), &inc);
        assert!(colors.iter().all(|&c| c == colors[0]));
    }

    #[test]
    fn redundant_functional_is_not_a_facet() {
        let mut f = cube(2);
        f.push(vec![rat(1, 2), rat(1, 2)]);
        let v = enumerate_vertices(&f, 100).unwrap();
        assert_eq!(facet_incidence(&v, &f).unwrap().len(), 4);
    }

    #[test]
    fn unbounded_is_rejected() {
        let f = vec![vec![rat_int(1), rat_int(0)], vec![rat_int(-1), rat_int(0)]];
        assert!(enumerate_vertices(&f, 100).is_err());
    }
}
