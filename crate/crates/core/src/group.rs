//! Finite permutation groups and finite matrix groups.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{homogenize, Field, Homogeneous, Rational, Scalar};

/// A permutation of `0..n`, stored as its image list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Perm(pub Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Perm {
        Perm((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Perm> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::InvalidInput(format!("not a permutation: {images:?}")));
            }
            seen[i] = true;
        }
        Ok(Perm(images))
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    /// `(self * other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Perm(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn moved_points(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] != i).collect()
    }
}

/// A finite permutation group given by its full element list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermGroup {
    degree: usize,
    elements: Vec<Perm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PermGroupRecord {
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<Vec<usize>>,
}

pub const DEFAULT_PERM_CAP: usize = 100_000;

impl PermGroup {
    pub fn trivial(degree: usize) -> PermGroup {
        PermGroup { degree, elements: vec![Perm::identity(degree)] }
    }

    /// Closure of `generators` under composition; errors when the order exceeds `cap`.
    pub fn generate(degree: usize, generators: &[Perm], cap: usize) -> Result<PermGroup> {
        for g in generators {
            if g.degree() != degree {
                return Err(Error::DimensionMismatch { expected: degree, got: g.degree() });
            }
        }
        let id = Perm::identity(degree);
        let mut seen: BTreeSet<Perm> = BTreeSet::from([id.clone()]);
        let mut elements = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in generators {
                let y = g.compose(&x);
                if seen.insert(y.clone()) {
                    if elements.len() >= cap {
                        return Err(Error::CapExceeded { what: "group order".into(), cap });
                    }
                    elements.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        Ok(PermGroup { degree, elements })
    }

    pub fn from_record(rec: &PermGroupRecord) -> Result<PermGroup> {
        let mut gens = Vec::new();
        for g in rec.generators.iter().chain(&rec.elements) {
            gens.push(Perm::from_images(g.clone())?);
        }
        Self::generate(rec.degree, &gens, DEFAULT_PERM_CAP)
    }

    pub fn to_record(&self) -> PermGroupRecord {
        PermGroupRecord {
            degree: self.degree,
            generators: Vec::new(),
            elements: self.sorted_elements().into_iter().map(|p| p.0).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn sorted_elements(&self) -> Vec<Perm> {
        let mut v = self.elements.clone();
        v.sort();
        v
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.contains(p)
    }

    pub fn is_central(&self, p: &Perm) -> bool {
        self.elements.iter().all(|g| g.compose(p) == p.compose(g))
    }

    /// Orbits of the diagonal action on tuples of length `len`, in the
    /// order their smallest (lexicographic) member appears.
    pub fn tuple_orbits(&self, len: usize) -> Vec<Vec<Vec<usize>>> {
        let tuples = all_tuples(self.degree, len);
        let index: HashMap<&Vec<usize>, usize> =
            tuples.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut seen = vec![false; tuples.len()];
        let mut orbits = Vec::new();
        for (i, t) in tuples.iter().enumerate() {
            if seen[i] {
                continue;
            }
            let mut orbit: BTreeSet<Vec<usize>> = BTreeSet::new();
            for g in &self.elements {
                let img: Vec<usize> = t.iter().map(|&x| g.apply(x)).collect();
                seen[index[&img]] = true;
                orbit.insert(img);
            }
            orbits.push(orbit.into_iter().collect());
        }
        orbits
    }
}

/// All tuples over `0..m` of length `len`, in lexicographic order.
pub fn all_tuples(m: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..m).map(move |x| {
                    let mut u = t.clone();
                    u.push(x);
                    u
                })
            })
            .collect();
    }
    out
}

/// A finite group of invertible matrices with its multiplication table.
#[derive(Clone, Debug)]
pub struct MatrixGroup<T> {
    dim: usize,
    elements: Vec<Matrix<T>>,
    identity: usize,
    table: Vec<Vec<usize>>,
}

pub const DEFAULT_GROUP_CAP: usize = 5000;

fn find<T: Field>(list: &[Matrix<T>], m: &Matrix<T>, tol: f64) -> Option<usize> {
    list.iter().position(|x| x.approx_eq(m, tol))
}

impl<T: Field> MatrixGroup<T> {
    /// Close `generators` under multiplication. Errors when the closure
    /// exceeds `cap` elements (e.g. infinite-order generators in float mode).
    pub fn closure(dim: usize, generators: &[Matrix<T>], cap: usize, tol: f64) -> Result<Self> {
        for g in generators {
            if g.rows() != dim || g.cols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g.rows() });
            }
            g.inverse(tol).map_err(|_| Error::InvalidInput("singular generator".into()))?;
        }
        let mut elements = vec![Matrix::identity(dim)];
        let mut frontier = 0;
        while frontier < elements.len() {
            let x = elements[frontier].clone();
            frontier += 1;
            for g in generators {
                let y = g.mul(&x)?;
                if find(&elements, &y, tol).is_none() {
                    if elements.len() >= cap {
                        return Err(Error::CapExceeded { what: "group closure".into(), cap });
                    }
                    elements.push(y);
                }
            }
        }
        let mut table = vec![vec![0; elements.len()]; elements.len()];
        for i in 0..elements.len() {
            for j in 0..elements.len() {
                let p = elements[i].mul(&elements[j])?;
                table[i][j] = find(&elements, &p, tol)
                    .ok_or_else(|| Error::CheckFailed("closure not closed".into()))?;
            }
        }
        Ok(MatrixGroup { dim, elements, identity: 0, table })
    }

    pub fn from_elements(dim: usize, elements: &[Matrix<T>], tol: f64) -> Result<Self> {
        let g = Self::closure(dim, elements, elements.len().max(1) * 2 + 1, tol)?;
        if g.order() != dedup_count(elements, tol) {
            return Err(Error::InvalidInput("element list is not closed under products".into()));
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Matrix<T>] {
        &self.elements
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn index_of(&self, m: &Matrix<T>, tol: f64) -> Option<usize> {
        find(&self.elements, m, tol)
    }

    pub fn contains(&self, m: &Matrix<T>, tol: f64) -> bool {
        self.index_of(m, tol).is_some()
    }

    pub fn contains_minus_identity(&self, tol: f64) -> bool {
        self.contains(&Matrix::identity(self.dim).neg(), tol)
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> MatrixGroup<U> {
        MatrixGroup {
            dim: self.dim,
            elements: self.elements.iter().map(|m| m.map(&f)).collect(),
            identity: self.identity,
            table: self.table.clone(),
        }
    }

    pub fn to_f64(&self) -> MatrixGroup<f64> {
        self.map(|x| x.to_f64())
    }

    /// Same element set (as sets of matrices) up to `tol`.
    pub fn same_elements(&self, other: &[Matrix<T>], tol: f64) -> bool {
        self.order() == dedup_count(other, tol) && other.iter().all(|m| self.contains(m, tol))
    }

    /// Elements fixing every vector in `points` (up to `tol`).
    pub fn stabilizer(&self, points: &[Vec<T>], tol: f64) -> Vec<usize> {
        (0..self.order())
            .filter(|&i| {
                points.iter().all(|p| {
                    let img = self.elements[i].apply(p).expect("dimension");
                    img.iter().zip(p).all(|(a, b)| a.approx_eq(b, tol))
                })
            })
            .collect()
    }
}

fn dedup_count<T: Field>(list: &[Matrix<T>], tol: f64) -> usize {
    let mut uniq: Vec<Matrix<T>> = Vec::new();
    for m in list {
        if find(&uniq, m, tol).is_none() {
            uniq.push(m.clone());
        }
    }
    uniq.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixGroupRecord {
    pub dim: usize,
    pub elements: Vec<Vec<Vec<Scalar>>>,
}

/// Either arithmetic mode, as decoded from JSON.
#[derive(Clone, Debug)]
pub enum AnyMatrixGroup {
    Exact(MatrixGroup<Rational>),
    Float(MatrixGroup<f64>),
}

impl AnyMatrixGroup {
    pub fn to_f64(&self) -> MatrixGroup<f64> {
        match self {
            AnyMatrixGroup::Exact(g) => g.to_f64(),
            AnyMatrixGroup::Float(g) => g.clone(),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            AnyMatrixGroup::Exact(g) => g.order(),
            AnyMatrixGroup::Float(g) => g.order(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnyMatrixGroup::Exact(g) => g.dim(),
            AnyMatrixGroup::Float(g) => g.dim(),
        }
    }
}

impl MatrixGroupRecord {
    /// Decode and close the listed elements (generators are accepted too).
    pub fn decode(&self, cap: usize, tol: f64) -> Result<AnyMatrixGroup> {
        let flat: Vec<Scalar> = self.elements.iter().flatten().flatten().cloned().collect();
        let n = self.dim;
        for m in &self.elements {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidInput(format!("element is not {n}x{n}")));
            }
        }
        let chunks = |len: usize| n * n * len;
        match homogenize(&flat)? {
            Homogeneous::Exact(v) => {
                let mats = split(&v, n, chunks(self.elements.len()))?;
                Ok(AnyMatrixGroup::Exact(MatrixGroup::closure(n, &mats, cap, tol)?))
            }
            Homogeneous::Float(v) => {
                let mats = split(&v, n, chunks(self.elements.len()))?;
                Ok(AnyMatrixGroup::Float(MatrixGroup::closure(n, &mats, cap, tol)?))
            }
        }
    }

    pub fn encode<T: Field>(g: &MatrixGroup<T>, to_scalar: impl Fn(&T) -> Scalar) -> Self {
        MatrixGroupRecord {
            dim: g.dim(),
            elements: g
                .elements()
                .iter()
                .map(|m| m.to_rows().iter().map(|r| r.iter().map(&to_scalar).collect()).collect())
                .collect(),
        }
    }
}

fn split<T: Field>(v: &[T], n: usize, total: usize) -> Result<Vec<Matrix<T>>> {
    debug_assert_eq!(v.len(), total);
    if n == 0 {
        return Err(Error::InvalidInput("dimension 0".into()));
    }
    v.chunks(n * n)
        .map(|c| Matrix::from_rows(c.chunks(n).map(|r| r.to_vec()).collect()))
        .collect()
}

/// Signed permutation matrix `e_j -> signs[j] * e_{perm(j)}`.
pub fn signed_perm_matrix<T: Field>(perm: &Perm, signs: &[i8]) -> Matrix<T> {
    let n = perm.degree();
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        m[(perm.apply(j), j)] = if signs[j] < 0 { -T::one() } else { T::one() };
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;

    fn neg_id(n: usize) -> Matrix<Rational> {
        Matrix::identity(n).neg()
    }

    #[test]
    fn closures_from_examples() {
        let g = MatrixGroup::closure(2, &[neg_id(2)], 100, 0.0).unwrap();
        assert_eq!(g.order(), 2);
        let swap = signed_perm_matrix::<Rational>(&Perm(vec![1, 0]), &[1, 1]);
        let g = MatrixGroup::closure(2, &[neg_id(2), swap], 100, 0.0).unwrap();
        assert_eq!(g.order(), 4);
        assert!(g.contains_minus_identity(0.0));
        let id = g.identity_index();
        for i in 0..g.order() {
            assert_eq!(g.table()[i][id], i);
            assert!(g.table()[i].contains(&id));
        }
    }

    #[test]
    fn float_rotation_closure() {
        let t = 2.0 * std::f64::consts::PI / 3.0;
        let r = Matrix::from_rows(vec![vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]]).unwrap();
        let g = MatrixGroup::closure(2, std::slice::from_ref(&r), 10, 1e-9).unwrap();
        assert_eq!(g.order(), 3);
        let irr = Matrix::from_rows(vec![vec![1f64.cos(), -1f64.sin()], vec![1f64.sin(), 1f64.cos()]])
            .unwrap();
        assert!(matches!(
            MatrixGroup::closure(2, &[irr], 10, 1e-9),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn perm_groups() {
        let c4 = PermGroup::generate(4, &[Perm(vec![1, 2, 3, 0])], 100).unwrap();
        assert_eq!(c4.order(), 4);
        let s3 = PermGroup::generate(3, &[Perm(vec![1, 0, 2]), Perm(vec![1, 2, 0])], 100).unwrap();
        assert_eq!(s3.order(), 6);
        assert_eq!(s3.tuple_orbits(1).len(), 1);
        assert_eq!(s3.tuple_orbits(2).len(), 2);
        let p = Perm(vec![2, 0, 1]);
        assert!(p.compose(&p.inverse()).is_identity());
    }

    #[test]
    fn record_decodes_exact() {
        let rec: MatrixGroupRecord =
            serde_json::from_str(r#"{"dim":1,"elements":[[["-1"]]]}"#).unwrap();
        match rec.decode(10, 1e-9).unwrap() {
            AnyMatrixGroup::Exact(g) => {
                assert_eq!(g.order(), 2);
                assert!(g.contains(&Matrix::from_rows(vec![vec![rat_int(-1)]]).unwrap(), 0.0));
            }
            _ => panic!("expected exact group"),
        }
    }
}
