//! The projective space F_qP^n: points in canonical form, flats as RREF
//! bases, span, dependence, flat counting, and quotients by a flat.
//!
//! Points are normalized coordinate vectors (first nonzero coordinate 1) and
//! carry a dense index: the rank of the vector in the lexicographic order of
//! all normalized vectors. Index arithmetic is O(n) in both directions, so
//! enumeration loops never materialize coordinate tables.

mod flat;
mod quotient;

pub use flat::Flat;
pub use quotient::{
    check_dependence_class, check_intersection_size, check_invariance_dependence, restrict,
    ClaimsReport, QuotientMap,
};
pub(crate) use quotient::odometer as odometer_u32;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gfq::FieldSpec;
use crate::linalg::Mat;
use crate::pointset::PointSet;

struct SpaceInner {
    spec: FieldSpec,
    n: usize,
    /// `counts[d + 1]` = number of points of a d-dimensional flat,
    /// for d in -1..=n.
    counts: Vec<u64>,
}

/// Handle to one F_qP^n; cheap to clone.
#[derive(Clone)]
pub struct Space {
    inner: Arc<SpaceInner>,
}

impl Space {
    pub fn new(q: u32, n: usize) -> Result<Space> {
        Space::with_spec(FieldSpec::new(q)?, n)
    }

    pub fn with_spec(spec: FieldSpec, n: usize) -> Result<Space> {
        let q = spec.q() as u64;
        let mut counts = Vec::with_capacity(n + 2);
        counts.push(0); // dim -1
        let mut acc: u64 = 0;
        let mut pw: u64 = 1;
        for _ in 0..=n {
            acc = acc
                .checked_add(pw)
                .ok_or(Error::Overflow)?;
            counts.push(acc);
            pw = pw.checked_mul(q).ok_or(Error::Overflow)?;
        }
        if acc > u32::MAX as u64 {
            return Err(Error::Unsupported(format!(
                "space with {acc} points exceeds the index range"
            )));
        }
        Ok(Space { inner: Arc::new(SpaceInner { spec, n, counts }) })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.inner.spec
    }

    pub fn q(&self) -> u32 {
        self.inner.spec.q()
    }

    /// Projective dimension n.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Number of points, (q^{n+1}-1)/(q-1).
    pub fn point_count(&self) -> u64 {
        self.inner.counts[self.inner.n + 1]
    }

    /// Number of points of a d-dimensional flat; 0 for d = -1.
    pub fn flat_point_count(&self, d: i32) -> u64 {
        debug_assert!(d >= -1 && d <= self.inner.n as i32);
        self.inner.counts[(d + 1) as usize]
    }

    pub fn same(&self, other: &Space) -> bool {
        self.inner.n == other.inner.n && self.inner.spec == other.inner.spec
    }

    pub fn point(&self, index: u32) -> Point {
        debug_assert!((index as u64) < self.point_count());
        Point { space: self.clone(), index }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.point_count() as u32).map(move |i| self.point(i))
    }

    /// Normalize a coordinate vector and return the projective point.
    pub fn point_from_coords(&self, coords: &[u8]) -> Result<Point> {
        if coords.len() != self.inner.n + 1 {
            return Err(Error::AmbientMismatch);
        }
        let q = self.q();
        if coords.iter().any(|&c| c as u32 >= q) {
            return Err(Error::InvalidRepr {
                repr: *coords.iter().find(|&&c| c as u32 >= q).unwrap() as u32,
                q,
            });
        }
        let v = self.normalize(coords).ok_or(Error::ZeroVector)?;
        Ok(self.point(self.index_of_normalized(&v)))
    }

    /// Scale so the first nonzero coordinate is 1. None for the zero vector.
    pub(crate) fn normalize(&self, coords: &[u8]) -> Option<Vec<u8>> {
        let f = self.spec();
        let lead = coords.iter().position(|&c| c != 0)?;
        let inv = f.inv(coords[lead]);
        Some(coords.iter().map(|&c| f.mul(c, inv)).collect())
    }

    /// Rank of a normalized vector in lexicographic order.
    pub(crate) fn index_of_normalized(&self, v: &[u8]) -> u32 {
        let n = self.inner.n;
        let q = self.q() as u64;
        let j = v.iter().position(|&c| c != 0).expect("zero vector has no index");
        debug_assert_eq!(v[j], 1);
        // points whose first nonzero lies after position j come first
        let mut offset = 0u64;
        for &c in &v[j + 1..] {
            offset = offset * q + c as u64;
        }
        (self.inner.counts[n - j] + offset) as u32
    }

    /// Inverse of [`Space::index_of_normalized`].
    pub(crate) fn coords_of_index(&self, index: u32) -> Vec<u8> {
        let n = self.inner.n;
        let q = self.q() as u64;
        let idx = index as u64;
        debug_assert!(idx < self.point_count());
        // find the block: first nonzero at position j covers
        // [N(n-j-1), N(n-j))
        let mut j = n;
        while j > 0 && idx >= self.inner.counts[n - j + 1] {
            j -= 1;
        }
        let mut v = vec![0u8; n + 1];
        v[j] = 1;
        let mut rest = idx - self.inner.counts[n - j];
        for t in (j + 1..=n).rev() {
            v[t] = (rest % q) as u8;
            rest /= q;
        }
        debug_assert_eq!(rest, 0);
        v
    }

    /// The empty flat, dimension -1.
    pub fn empty_flat(&self) -> Flat {
        Flat::from_canonical_mat(self.clone(), Mat::zero(0, self.inner.n + 1))
    }

    /// The whole space as a flat of dimension n.
    pub fn full_flat(&self) -> Flat {
        let m = self.inner.n + 1;
        let mut mat = Mat::zero(m, m);
        for i in 0..m {
            mat.set(i, i, 1);
        }
        Flat::from_canonical_mat(self.clone(), mat)
    }

    /// Minimal flat containing the given points.
    pub fn span_indices(&self, ids: &[u32]) -> Flat {
        let m = self.inner.n + 1;
        let mut mat = Mat::zero(0, m);
        for &id in ids {
            mat.push_row(&self.coords_of_index(id));
        }
        mat.rref(self.spec());
        Flat::from_canonical_mat(self.clone(), mat)
    }

    /// Number of k-dimensional flats; see [`count_flats`].
    pub fn count_flats(&self, k: i32) -> Result<u128> {
        count_flats(self.q(), self.inner.n as i32, k)
    }

    /// All k-dimensional flats, enumerated through their canonical RREF
    /// bases in lexicographic pivot order.
    pub fn flats_of_dim(&self, k: i32) -> Result<Vec<Flat>> {
        let n = self.inner.n as i32;
        if k < -1 || k > n {
            return Err(Error::DimOutOfRange { dim: k, ambient: n });
        }
        if k == -1 {
            return Ok(vec![self.empty_flat()]);
        }
        let mats = rref_matrices(self.spec(), (k + 1) as usize, self.inner.n + 1);
        Ok(mats.into_iter().map(|m| Flat::from_canonical_mat(self.clone(), m)).collect())
    }

    pub fn full_point_set(&self) -> PointSet {
        PointSet::full(self.point_count() as u32)
    }
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl Eq for Space {}

impl std::fmt::Debug for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "F{}P^{}", self.q(), self.inner.n)
    }
}

/// A projective point, named by its canonical index in one space.
#[derive(Clone)]
pub struct Point {
    space: Space,
    index: u32,
}

impl Point {
    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    /// Normalized homogeneous coordinates, first nonzero coordinate 1.
    pub fn coords(&self) -> Vec<u8> {
        self.space.coords_of_index(self.index)
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.space.same(&other.space) && self.index == other.index
    }
}

impl Eq for Point {}

impl std::fmt::Debug for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p{}{:?}", self.index, self.coords())
    }
}

/// An ordered tuple of points in a common ambient space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tuple {
    space: Space,
    indices: Vec<u32>,
}

impl Tuple {
    pub fn new(points: &[Point]) -> Result<Tuple> {
        let Some(first) = points.first() else {
            return Err(Error::WrongArity { expected: 1, got: 0 });
        };
        let space = first.space.clone();
        for p in points {
            if !p.space.same(&space) {
                return Err(Error::AmbientMismatch);
            }
        }
        Ok(Tuple { space, indices: points.iter().map(|p| p.index).collect() })
    }

    pub fn from_indices(space: &Space, indices: Vec<u32>) -> Tuple {
        Tuple { space: space.clone(), indices }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn is_dependent(&self) -> bool {
        is_dependent_indices(&self.space, &self.indices)
    }
}

/// Minimal flat containing the given points and flats. `span(∅)` is the
/// empty flat of dimension -1.
pub fn span(space: &Space, points: &[Point], flats: &[Flat]) -> Result<Flat> {
    let m = space.n() + 1;
    let mut mat = Mat::zero(0, m);
    for p in points {
        if !p.space.same(space) {
            return Err(Error::AmbientMismatch);
        }
        mat.push_row(&p.coords());
    }
    for fl in flats {
        if !fl.space().same(space) {
            return Err(Error::AmbientMismatch);
        }
        for i in 0..fl.rank() {
            mat.push_row(fl.row(i));
        }
    }
    mat.rref(space.spec());
    Ok(Flat::from_canonical_mat(space.clone(), mat))
}

/// A k-tuple is dependent when its span has dimension < k-1, equivalently
/// when representative vectors are linearly dependent.
pub fn is_dependent_indices(space: &Space, ids: &[u32]) -> bool {
    let m = space.n() + 1;
    let mut mat = Mat::zero(0, m);
    for &id in ids {
        mat.push_row(&space.coords_of_index(id));
    }
    (mat.rank(space.spec())) < ids.len()
}

/// Number of k-dimensional flats of F_qP^n: the Gaussian binomial
/// [n+1 choose k+1]_q, computed exactly with the Pascal-type recurrence
/// G(m, r) = G(m-1, r-1) + q^r G(m-1, r).
pub fn count_flats(q: u32, n: i32, k: i32) -> Result<u128> {
    if k < -1 || k > n {
        return Err(Error::DimOutOfRange { dim: k, ambient: n });
    }
    if k == -1 {
        return Ok(1);
    }
    let m = (n + 1) as usize;
    let r = (k + 1) as usize;
    let q = q as u128;
    // table[j] = G(i, j) for the current i
    let mut table = vec![0u128; r + 1];
    table[0] = 1;
    for _i in 1..=m {
        for j in (1..=r).rev() {
            let qpow = checked_pow(q, j as u32)?;
            table[j] = table[j - 1]
                .checked_add(qpow.checked_mul(table[j]).ok_or(Error::Overflow)?)
                .ok_or(Error::Overflow)?;
        }
    }
    Ok(table[r])
}

pub(crate) fn checked_pow(base: u128, exp: u32) -> Result<u128> {
    base.checked_pow(exp).ok_or(Error::Overflow)
}

/// All RREF matrices of full row rank `rows` with `cols` columns: one per
/// `rows`-dimensional subspace of GF(q)^cols.
pub(crate) fn rref_matrices(spec: &FieldSpec, rows: usize, cols: usize) -> Vec<Mat> {
    use itertools::Itertools;
    let q = spec.q() as u8;
    let mut out = Vec::new();
    if rows == 0 {
        out.push(Mat::zero(0, cols));
        return out;
    }
    if rows > cols {
        return out;
    }
    for pivots in (0..cols).combinations(rows) {
        // free positions: (i, j) with j > pivots[i] and j not a pivot
        let mut free = Vec::new();
        for (i, &p) in pivots.iter().enumerate() {
            for j in p + 1..cols {
                if !pivots.contains(&j) {
                    free.push((i, j));
                }
            }
        }
        let mut assignment = vec![0u8; free.len()];
        loop {
            let mut mat = Mat::zero(rows, cols);
            for (i, &p) in pivots.iter().enumerate() {
                mat.set(i, p, 1);
            }
            for (slot, &(i, j)) in free.iter().enumerate() {
                mat.set(i, j, assignment[slot]);
            }
            out.push(mat);
            // odometer over GF(q)^free
            let mut carry = true;
            for slot in assignment.iter_mut() {
                *slot += 1;
                if *slot == q {
                    *slot = 0;
                } else {
                    carry = false;
                    break;
                }
            }
            if carry {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space(q: u32, n: usize) -> Space {
        Space::new(q, n).unwrap()
    }

    #[test]
    fn point_count_formula() {
        for (q, n) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (5, 3)] {
            let s = space(q, n);
            let q = q as u64;
            let expect = (q.pow(n as u32 + 1) - 1) / (q - 1);
            assert_eq!(s.point_count(), expect);
        }
        // the projective plane over GF(3) has q^2+q+1 = 13 points
        assert_eq!(space(3, 2).point_count(), 13);
    }

    #[test]
    fn index_roundtrip_is_lexicographic() {
        for (q, n) in [(2, 2), (3, 2), (2, 3), (4, 2), (5, 1)] {
            let s = space(q, n);
            let mut prev: Option<Vec<u8>> = None;
            for i in 0..s.point_count() as u32 {
                let c = s.coords_of_index(i);
                assert_eq!(c.iter().find(|&&x| x != 0), Some(&1), "normalized");
                assert_eq!(s.index_of_normalized(&c), i);
                if let Some(p) = prev {
                    assert!(p < c, "indices follow lexicographic coordinate order");
                }
                prev = Some(c);
            }
        }
    }

    #[test]
    fn point_from_coords_normalizes() {
        let s = space(3, 2);
        let a = s.point_from_coords(&[2, 1, 0]).unwrap();
        let b = s.point_from_coords(&[1, 2, 0]).unwrap();
        assert_eq!(a, b); // scalar multiples name the same point
        assert_eq!(a.coords(), vec![1, 2, 0]);
        assert_eq!(s.point_from_coords(&[0, 0, 0]).unwrap_err(), Error::ZeroVector);
        assert_eq!(s.point_from_coords(&[1, 0]).unwrap_err(), Error::AmbientMismatch);
    }

    #[test]
    fn span_examples() {
        let s = space(2, 2);
        // span(∅) is the empty flat of dimension -1
        assert_eq!(span(&s, &[], &[]).unwrap().dim(), -1);
        // span(p, p) is the 0-flat {p}
        let p = s.point(0);
        let f = span(&s, &[p.clone(), p.clone()], &[]).unwrap();
        assert_eq!(f.dim(), 0);
        assert_eq!(f.point_indices(), vec![0]);
        // two distinct points span a line with q+1 = 3 points
        let l = span(&s, &[s.point(0), s.point(1)], &[]).unwrap();
        assert_eq!(l.dim(), 1);
        assert_eq!(l.point_indices().len(), 3);
    }

    #[test]
    fn span_rejects_mixed_spaces() {
        let s2 = space(2, 2);
        let s3 = space(3, 2);
        let err = span(&s2, &[s2.point(0), s3.point(0)], &[]).unwrap_err();
        assert_eq!(err, Error::AmbientMismatch);
    }

    #[test]
    fn tuples_carry_a_common_space() {
        let s2 = space(2, 2);
        let s3 = space(3, 2);
        let t = Tuple::new(&[s2.point(0), s2.point(0)]).unwrap();
        assert!(t.is_dependent());
        assert_eq!(
            Tuple::new(&[s2.point(0), s3.point(1)]).unwrap_err(),
            Error::AmbientMismatch
        );
    }

    #[test]
    fn dependence_examples() {
        let s = space(2, 2);
        assert!(is_dependent_indices(&s, &[3, 3])); // dim span = 0 < 1
        assert!(!is_dependent_indices(&s, &[3, 4])); // distinct pair
        // exactly 7 of the 49 pairs are dependent: dependent ⟺ equal
        let mut dep = 0;
        for a in 0..7 {
            for b in 0..7 {
                if is_dependent_indices(&s, &[a, b]) {
                    dep += 1;
                }
            }
        }
        assert_eq!(dep, 7);
    }

    #[test]
    fn count_flats_examples() {
        assert_eq!(count_flats(2, 2, 1).unwrap(), 7); // lines of the Fano plane
        assert_eq!(count_flats(3, 2, 0).unwrap(), 13);
        assert_eq!(count_flats(3, 3, 1).unwrap(), 130); // (80·78)/(8·6)
        assert_eq!(count_flats(2, 3, -1).unwrap(), 1);
        assert!(matches!(
            count_flats(2, 2, 3),
            Err(Error::DimOutOfRange { .. })
        ));
        assert_eq!(count_flats(64, 40, 20), Err(Error::Overflow));
    }

    #[test]
    fn flat_enumeration_matches_formula() {
        for (q, n) in [(2, 2), (2, 3), (3, 2)] {
            let s = space(q, n);
            for k in -1..=n as i32 {
                let flats = s.flats_of_dim(k).unwrap();
                assert_eq!(flats.len() as u128, s.count_flats(k).unwrap(), "q={q} n={n} k={k}");
                // all distinct and of the right dimension
                for f in &flats {
                    assert_eq!(f.dim(), k);
                    assert_eq!(
                        f.point_indices().len() as u64,
                        s.flat_point_count(k),
                    );
                }
                let mut dedup = flats.clone();
                dedup.sort();
                dedup.dedup();
                assert_eq!(dedup.len(), flats.len());
            }
        }
    }

    #[test]
    fn plane_regularity() {
        // every point of F_qP^2 lies on exactly q+1 lines, and two distinct
        // lines meet in exactly one point
        for q in [2, 3, 4] {
            let s = space(q, 2);
            let lines = s.flats_of_dim(1).unwrap();
            for p in 0..s.point_count() as u32 {
                let through = lines.iter().filter(|l| l.contains_point(p)).count();
                assert_eq!(through as u32, q + 1);
            }
            for (i, a) in lines.iter().enumerate() {
                for b in &lines[i + 1..] {
                    assert_eq!(a.intersect(b).dim(), 0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn span_is_monotone_and_bounded(
            ids in proptest::collection::vec(0u32..15, 1..5),
            extra in 0u32..15,
        ) {
            let s = space(2, 3);
            let f = s.span_indices(&ids);
            // dim span of a k-tuple is at most k-1
            prop_assert!(f.dim() < ids.len() as i32);
            // adding a point never shrinks the span
            let mut bigger = ids.clone();
            bigger.push(extra);
            let g = s.span_indices(&bigger);
            for i in 0..f.rank() {
                let mut v = f.row(i).to_vec();
                prop_assert!(g.contains_vector(&mut v));
            }
            // idempotence: spanning the span's points gives the same flat
            let again = s.span_indices(&f.point_indices());
            prop_assert_eq!(&again, &f);
        }
    }
}
