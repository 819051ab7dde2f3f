//! Flats (projective subspaces) in canonical RREF basis form. Two flats are
//! equal exactly when their bases compare equal, so flats can be hashed,
//! ordered, and deduplicated as plain byte strings.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::pointset::PointSet;

use super::{rref_matrices, Space};

/// A flat of dimension rank-1; the empty flat has rank 0.
#[derive(Clone)]
pub struct Flat {
    space: Space,
    /// RREF rows, flattened row-major; the canonical basis of the lifted
    /// linear subspace of GF(q)^{n+1}.
    rows: Vec<u8>,
    /// Pivot column of each row.
    pivots: Vec<usize>,
}

impl Flat {
    /// Wrap an already-canonical (RREF, no zero rows) matrix.
    pub(crate) fn from_canonical_mat(space: Space, mat: Mat) -> Flat {
        debug_assert_eq!(mat.cols, space.n() + 1);
        let pivots = (0..mat.rows)
            .map(|i| mat.row(i).iter().position(|&c| c != 0).expect("no zero rows"))
            .collect();
        Flat { space, rows: mat.data, pivots }
    }

    /// Build from arbitrary spanning rows, canonicalizing via RREF.
    pub fn from_rows(space: &Space, rows: Vec<Vec<u8>>) -> Result<Flat> {
        let m = space.n() + 1;
        let q = space.q();
        for r in &rows {
            if r.len() != m {
                return Err(Error::AmbientMismatch);
            }
            if let Some(&bad) = r.iter().find(|&&c| c as u32 >= q) {
                return Err(Error::InvalidRepr { repr: bad as u32, q });
            }
        }
        let mut mat = Mat::from_rows(rows, m);
        mat.rref(space.spec());
        Ok(Flat::from_canonical_mat(space.clone(), mat))
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Projective dimension: rank - 1, so the empty flat has dimension -1.
    pub fn dim(&self) -> i32 {
        self.pivots.len() as i32 - 1
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let m = self.space.n() + 1;
        &self.rows[i * m..(i + 1) * m]
    }

    pub fn rows_nested(&self) -> Vec<Vec<u8>> {
        (0..self.rank()).map(|i| self.row(i).to_vec()).collect()
    }

    pub(crate) fn as_mat(&self) -> Mat {
        Mat { rows: self.rank(), cols: self.space.n() + 1, data: self.rows.clone() }
    }

    /// Number of points, (q^{rank}-1)/(q-1).
    pub fn point_count(&self) -> u64 {
        self.space.flat_point_count(self.dim())
    }

    /// Membership test; reduces the vector against the basis in place.
    pub fn contains_vector(&self, v: &mut [u8]) -> bool {
        let f = self.space.spec();
        let m = self.space.n() + 1;
        for (i, &p) in self.pivots.iter().enumerate() {
            let c = v[p];
            if c != 0 {
                let row = &self.rows[i * m..(i + 1) * m];
                for j in p..m {
                    v[j] = f.sub(v[j], f.mul(c, row[j]));
                }
            }
        }
        v.iter().all(|&c| c == 0)
    }

    pub fn contains_point(&self, idx: u32) -> bool {
        let mut v = self.space.coords_of_index(idx);
        self.contains_vector(&mut v)
    }

    /// True when every basis vector of `other` lies in this flat.
    pub fn contains_flat(&self, other: &Flat) -> bool {
        (0..other.rank()).all(|i| {
            let mut v = other.row(i).to_vec();
            self.contains_vector(&mut v)
        })
    }

    /// Point indices in increasing order.
    ///
    /// Normalized coefficient vectors against an RREF basis produce already
    /// normalized ambient vectors, so each point is visited exactly once.
    pub fn point_indices(&self) -> Vec<u32> {
        let r = self.rank();
        if r == 0 {
            return Vec::new();
        }
        let f = self.space.spec();
        let m = self.space.n() + 1;
        let count = self.point_count();
        let mut out = Vec::with_capacity(count as usize);
        // coefficient vectors are the normalized points of F_qP^{r-1}
        let coeff_space = coeff_space_counts(self.space.q() as u64, r);
        for ci in 0..count {
            let coeffs = unrank_normalized(self.space.q() as u64, r, &coeff_space, ci);
            let mut v = vec![0u8; m];
            for (i, &c) in coeffs.iter().enumerate() {
                if c != 0 {
                    let row = self.row(i);
                    for j in 0..m {
                        v[j] = f.add(v[j], f.mul(c, row[j]));
                    }
                }
            }
            out.push(self.space.index_of_normalized(&v));
        }
        out.sort_unstable();
        out
    }

    pub fn point_set(&self) -> PointSet {
        PointSet::from_indices(self.space.point_count() as u32, self.point_indices())
    }

    /// Span of this flat and another.
    pub fn join(&self, other: &Flat) -> Flat {
        debug_assert!(self.space.same(&other.space));
        let m = self.space.n() + 1;
        let mut mat = self.as_mat();
        for i in 0..other.rank() {
            mat.push_row(other.row(i));
        }
        debug_assert_eq!(mat.cols, m);
        mat.rref(self.space.spec());
        Flat::from_canonical_mat(self.space.clone(), mat)
    }

    /// Span of this flat and one extra point.
    pub fn with_point(&self, idx: u32) -> Flat {
        let mut mat = self.as_mat();
        mat.push_row(&self.space.coords_of_index(idx));
        mat.rref(self.space.spec());
        Flat::from_canonical_mat(self.space.clone(), mat)
    }

    pub fn intersect(&self, other: &Flat) -> Flat {
        debug_assert!(self.space.same(&other.space));
        if self.is_empty() || other.is_empty() {
            return self.space.empty_flat();
        }
        let out = self.as_mat().intersect_rowspaces(&other.as_mat(), self.space.spec());
        Flat::from_canonical_mat(self.space.clone(), out)
    }

    /// All d-dimensional subflats, via RREF coefficient matrices against this
    /// flat's basis.
    pub fn subflats(&self, d: i32) -> Result<Vec<Flat>> {
        if d < -1 || d > self.dim() {
            return Err(Error::DimOutOfRange { dim: d, ambient: self.dim() });
        }
        if d == -1 {
            return Ok(vec![self.space.empty_flat()]);
        }
        let f = self.space.spec();
        let basis = self.as_mat();
        let mut out = Vec::new();
        for coeff in rref_matrices(f, (d + 1) as usize, self.rank()) {
            let mut rows = coeff.mat_mul(&basis, f);
            rows.rref(f);
            out.push(Flat::from_canonical_mat(self.space.clone(), rows));
        }
        Ok(out)
    }

    /// The hyperplane {x : a·x = 0} for a nonzero functional a.
    pub fn hyperplane_from_functional(space: &Space, a: &[u8]) -> Result<Flat> {
        if a.len() != space.n() + 1 {
            return Err(Error::AmbientMismatch);
        }
        if a.iter().all(|&c| c == 0) {
            return Err(Error::ZeroVector);
        }
        let mat = Mat::from_rows(vec![a.to_vec()], a.len());
        let ns = mat.nullspace(space.spec());
        Ok(Flat::from_canonical_mat(space.clone(), ns))
    }

    /// Deterministic hyperplane (dimension n-1) containing this flat: the
    /// kernel of the least functional vanishing on it.
    pub fn extend_to_hyperplane(&self) -> Result<Flat> {
        let n = self.space.n() as i32;
        if self.dim() >= n {
            return Err(Error::DimOutOfRange { dim: self.dim(), ambient: n });
        }
        let ns = self.as_mat().nullspace(self.space.spec());
        debug_assert!(ns.rows > 0);
        Flat::hyperplane_from_functional(&self.space, ns.row(0))
    }
}

fn coeff_space_counts(q: u64, rank: usize) -> Vec<u64> {
    // counts[d+1] = |F_qP^d| for d = -1 .. rank-1
    let mut counts = Vec::with_capacity(rank + 1);
    counts.push(0);
    let mut acc = 0u64;
    let mut pw = 1u64;
    for _ in 0..rank {
        acc += pw;
        counts.push(acc);
        pw *= q;
    }
    counts
}

fn unrank_normalized(q: u64, rank: usize, counts: &[u64], idx: u64) -> Vec<u8> {
    let n = rank - 1;
    let mut j = n;
    while j > 0 && idx >= counts[n - j + 1] {
        j -= 1;
    }
    let mut v = vec![0u8; rank];
    v[j] = 1;
    let mut rest = idx - counts[n - j];
    for t in (j + 1..=n).rev() {
        v[t] = (rest % q) as u8;
        rest /= q;
    }
    v
}

impl PartialEq for Flat {
    fn eq(&self, other: &Self) -> bool {
        self.space.same(&other.space) && self.rows == other.rows
    }
}

impl Eq for Flat {}

impl PartialOrd for Flat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Flat {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.rank(), &self.rows).cmp(&(other.rank(), &other.rows))
    }
}

impl std::hash::Hash for Flat {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rows.hash(state);
    }
}

impl std::fmt::Debug for Flat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Flat(dim {}, {:?})", self.dim(), self.rows_nested())
    }
}
