//! Dense row-major matrices over GF(q): just enough linear algebra for
//! flats. RREF, rank, right null space, products, and the Zassenhaus
//! row-space intersection.

use crate::gfq::FieldSpec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<u8>>, cols: usize) -> Mat {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            debug_assert_eq!(r.len(), cols);
            data.extend_from_slice(&r);
        }
        Mat { rows: n, cols, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, r: &[u8]) {
        debug_assert_eq!(r.len(), self.cols);
        self.data.extend_from_slice(r);
        self.rows += 1;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// In-place reduced row echelon form. Zero rows are dropped; returns the
    /// pivot column of every remaining row. The result is the canonical basis
    /// of the row space.
    pub fn rref(&mut self, f: &FieldSpec) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pr) = (rank..self.rows).find(|&i| self.at(i, col) != 0) else {
                continue;
            };
            self.swap_rows(rank, pr);
            let inv = f.inv(self.at(rank, col));
            for j in col..self.cols {
                let v = f.mul(self.at(rank, j), inv);
                self.set(rank, j, v);
            }
            for i in 0..self.rows {
                if i == rank {
                    continue;
                }
                let c = self.at(i, col);
                if c != 0 {
                    for j in col..self.cols {
                        let v = f.sub(self.at(i, j), f.mul(c, self.at(rank, j)));
                        self.set(i, j, v);
                    }
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        self.data.truncate(rank * self.cols);
        self.rows = rank;
        pivots
    }

    pub fn rank(&self, f: &FieldSpec) -> usize {
        let mut m = self.clone();
        m.rref(f);
        m.rows
    }

    /// RREF basis of the right null space {x : self · x = 0}.
    pub fn nullspace(&self, f: &FieldSpec) -> Mat {
        let mut m = self.clone();
        let pivots = m.rref(f);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Mat::zero(0, self.cols);
        basis.data.reserve(free.len() * self.cols);
        for &fc in &free {
            let mut v = vec![0u8; self.cols];
            v[fc] = 1;
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = f.neg(m.at(i, fc));
            }
            basis.push_row(&v);
        }
        basis.rref(f);
        basis
    }

    /// self (r×c) times rhs (c×k) over GF(q).
    pub fn mat_mul(&self, rhs: &Mat, f: &FieldSpec) -> Mat {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = Mat::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.at(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = f.add(out.at(i, j), f.mul(a, rhs.at(l, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Apply the matrix to a column vector.
    pub fn apply(&self, v: &[u8], f: &FieldSpec) -> Vec<u8> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = vec![0u8; self.rows];
        for i in 0..self.rows {
            let mut acc = 0u8;
            for j in 0..self.cols {
                acc = f.add(acc, f.mul(self.at(i, j), v[j]));
            }
            out[i] = acc;
        }
        out
    }

    /// Zassenhaus: RREF basis of the intersection of two row spaces.
    pub fn intersect_rowspaces(&self, other: &Mat, f: &FieldSpec) -> Mat {
        debug_assert_eq!(self.cols, other.cols);
        let c = self.cols;
        let mut block = Mat::zero(0, 2 * c);
        block.data.reserve((self.rows + other.rows) * 2 * c);
        for i in 0..self.rows {
            let mut r = Vec::with_capacity(2 * c);
            r.extend_from_slice(self.row(i));
            r.extend_from_slice(self.row(i));
            block.push_row(&r);
        }
        for i in 0..other.rows {
            let mut r = Vec::with_capacity(2 * c);
            r.extend_from_slice(other.row(i));
            r.extend(std::iter::repeat_n(0, c));
            block.push_row(&r);
        }
        block.rref(f);
        let mut out = Mat::zero(0, c);
        for i in 0..block.rows {
            if block.row(i)[..c].iter().all(|&x| x == 0) {
                out.push_row(&block.row(i)[c..]);
            }
        }
        out.rref(f);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: u32) -> FieldSpec {
        FieldSpec::new(q).unwrap()
    }

    #[test]
    fn rref_canonicalizes() {
        let f = gf(3);
        let mut m = Mat::from_rows(vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 0]], 3);
        let pivots = m.rref(&f);
        assert_eq!(pivots, vec![0, 1]);
        assert_eq!(m.rows, 2);
        assert_eq!(m.row(0), &[1, 0, 0]);
        assert_eq!(m.row(1), &[0, 1, 0]);
    }

    #[test]
    fn rref_is_idempotent_and_basis_invariant() {
        // two bases of the same plane in GF(2)^3 give the same RREF
        let f = gf(2);
        let mut a = Mat::from_rows(vec![vec![1, 1, 0], vec![0, 1, 1]], 3);
        let mut b = Mat::from_rows(vec![vec![1, 0, 1], vec![1, 1, 0]], 3);
        a.rref(&f);
        b.rref(&f);
        assert_eq!(a, b);
    }

    #[test]
    fn nullspace_is_orthogonal_complement() {
        let f = gf(5);
        let m = Mat::from_rows(vec![vec![1, 2, 3, 4], vec![0, 1, 1, 0]], 4);
        let ns = m.nullspace(&f);
        assert_eq!(ns.rows, 2);
        for i in 0..m.rows {
            for j in 0..ns.rows {
                let mut acc = 0u8;
                for k in 0..4 {
                    acc = f.add(acc, f.mul(m.at(i, k), ns.at(j, k)));
                }
                assert_eq!(acc, 0);
            }
        }
    }

    #[test]
    fn zassenhaus_intersection() {
        let f = gf(2);
        // two distinct planes through the origin in GF(2)^3 meet in a line
        let a = {
            let mut m = Mat::from_rows(vec![vec![1, 0, 0], vec![0, 1, 0]], 3);
            m.rref(&f);
            m
        };
        let b = {
            let mut m = Mat::from_rows(vec![vec![0, 1, 0], vec![0, 0, 1]], 3);
            m.rref(&f);
            m
        };
        let i = a.intersect_rowspaces(&b, &f);
        assert_eq!(i.rows, 1);
        assert_eq!(i.row(0), &[0, 1, 0]);
    }
}
