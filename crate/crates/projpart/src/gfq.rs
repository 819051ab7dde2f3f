//! Exact arithmetic over GF(q) for prime powers q ≤ 64.
//!
//! An element is a canonical integer in `[0, q)`: the base-p encoding of its
//! coefficient vector over GF(p). For extension fields the reduction
//! polynomial is the lexicographically least monic irreducible of the right
//! degree, found by exhaustive trial division, so a given q always produces
//! the same field. All four operations are table driven; the coordinate
//! kernels in the geometry modules work on raw reprs through [`FieldSpec`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_Q: u32 = 64;

struct Inner {
    p: u32,
    m: u32,
    q: u32,
    /// Reduction polynomial, low-to-high coefficients, length m+1, monic.
    /// Empty for prime fields.
    poly: Vec<u8>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

/// A concrete GF(q), shared behind an `Arc` so handles are cheap to clone.
#[derive(Clone)]
pub struct FieldSpec {
    inner: Arc<Inner>,
}

impl FieldSpec {
    /// Build GF(q). Fails with `NotPrimePower` when q has two distinct prime
    /// factors and `Unsupported` when q < 2 or q > 64.
    pub fn new(q: u32) -> Result<FieldSpec> {
        if q < 2 {
            return Err(Error::Unsupported(format!("field order {q} < 2")));
        }
        if q > MAX_Q {
            return Err(Error::Unsupported(format!("field order {q} > {MAX_Q}")));
        }
        let (p, m) = factor_prime_power(q)?;
        let poly = if m == 1 {
            Vec::new()
        } else {
            find_reduction_poly(p, m)
        };
        let inner = build_tables(p, m, q, poly);
        Ok(FieldSpec { inner: Arc::new(inner) })
    }

    pub fn p(&self) -> u32 {
        self.inner.p
    }

    pub fn m(&self) -> u32 {
        self.inner.m
    }

    pub fn q(&self) -> u32 {
        self.inner.q
    }

    /// Reduction polynomial coefficients, low to high; empty for m = 1.
    pub fn poly(&self) -> &[u8] {
        &self.inner.poly
    }

    pub fn element(&self, repr: u32) -> Result<FieldElement> {
        if repr >= self.inner.q {
            return Err(Error::InvalidRepr { repr, q: self.inner.q });
        }
        Ok(FieldElement { spec: self.clone(), repr: repr as u8 })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { spec: self.clone(), repr: 0 }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { spec: self.clone(), repr: 1 }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.inner.q).map(move |r| FieldElement { spec: self.clone(), repr: r as u8 })
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.inner.add[a as usize * self.inner.q as usize + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.inner.mul[a as usize * self.inner.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.inner.neg[a as usize]
    }

    /// Multiplicative inverse of a nonzero repr.
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        debug_assert!(a != 0, "inverse of zero");
        self.inner.inv[a as usize]
    }

    pub fn div(&self, a: u8, b: u8) -> Result<u8> {
        if b == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.mul(a, self.inv(b)))
    }

    pub fn pow(&self, a: u8, e: u64) -> u8 {
        let mut acc = 1u8;
        let mut base = a;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative order of a nonzero repr.
    pub fn order(&self, a: u8) -> u32 {
        debug_assert!(a != 0);
        let mut x = a;
        let mut ord = 1;
        while x != 1 {
            x = self.mul(x, a);
            ord += 1;
        }
        ord
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.inner.p == other.inner.p
            && self.inner.m == other.inner.m
            && self.inner.poly == other.inner.poly
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inner.m == 1 {
            write!(f, "GF({})", self.inner.q)
        } else {
            write!(f, "GF({}={}^{})", self.inner.q, self.inner.p, self.inner.m)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// One element of a [`FieldSpec`], stored as its canonical integer repr.
#[derive(Clone)]
pub struct FieldElement {
    spec: FieldSpec,
    repr: u8,
}

impl FieldElement {
    pub fn repr(&self) -> u32 {
        self.repr as u32
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.repr == 0
    }

    /// Checked arithmetic: fails on spec mismatch and on division by zero.
    pub fn arith(&self, rhs: &FieldElement, op: FieldOp) -> Result<FieldElement> {
        if self.spec != rhs.spec {
            return Err(Error::SpecMismatch);
        }
        let f = &self.spec;
        let repr = match op {
            FieldOp::Add => f.add(self.repr, rhs.repr),
            FieldOp::Sub => f.sub(self.repr, rhs.repr),
            FieldOp::Mul => f.mul(self.repr, rhs.repr),
            FieldOp::Div => f.div(self.repr, rhs.repr)?,
        };
        Ok(FieldElement { spec: self.spec.clone(), repr })
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.repr == other.repr
    }
}

impl Eq for FieldElement {}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}∈{:?}", self.repr, self.spec)
    }
}

fn factor_prime_power(q: u32) -> Result<(u32, u32)> {
    let mut p = 2;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut m = 0;
            let mut rest = q;
            while rest.is_multiple_of(p) {
                rest /= p;
                m += 1;
            }
            if rest != 1 {
                return Err(Error::NotPrimePower(q));
            }
            return Ok((p, m));
        }
        p += 1;
    }
    // q itself is prime
    Ok((q, 1))
}

/// Remainder of a mod b over GF(p); coefficients low to high, b monic.
fn poly_rem(a: &[u8], b: &[u8], p: u32) -> Vec<u8> {
    let mut r: Vec<u32> = a.iter().map(|&c| c as u32).collect();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap() % p;
        if lead != 0 {
            let shift = r.len() - 1 - db;
            for (i, &bc) in b.iter().enumerate() {
                let idx = shift + i;
                let sub = (lead * bc as u32) % p;
                r[idx] = (r[idx] + p - sub) % p;
            }
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r.into_iter().map(|c| c as u8).collect()
}

fn is_irreducible(poly: &[u8], p: u32) -> bool {
    let m = poly.len() - 1;
    // trial division by every monic polynomial of degree 1..=m/2
    for d in 1..=m / 2 {
        let count = (p as u64).pow(d as u32);
        for enc in 0..count {
            let mut g = Vec::with_capacity(d + 1);
            let mut e = enc;
            for _ in 0..d {
                g.push((e % p as u64) as u8);
                e /= p as u64;
            }
            g.push(1);
            if poly_rem(poly, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Lexicographically least monic irreducible of degree m over GF(p), where
/// candidates are ordered by the base-p value of their non-leading
/// coefficients.
fn find_reduction_poly(p: u32, m: u32) -> Vec<u8> {
    let count = (p as u64).pow(m);
    for enc in 0..count {
        let mut poly = Vec::with_capacity(m as usize + 1);
        let mut e = enc;
        for _ in 0..m {
            poly.push((e % p as u64) as u8);
            e /= p as u64;
        }
        poly.push(1);
        if is_irreducible(&poly, p) {
            return poly;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over GF(p)")
}

fn digits(repr: u32, p: u32, m: u32) -> Vec<u32> {
    let mut d = Vec::with_capacity(m as usize);
    let mut r = repr;
    for _ in 0..m {
        d.push(r % p);
        r /= p;
    }
    d
}

fn undigits(d: &[u32], p: u32) -> u32 {
    let mut r = 0;
    for &c in d.iter().rev() {
        r = r * p + c;
    }
    r
}

fn build_tables(p: u32, m: u32, q: u32, poly: Vec<u8>) -> Inner {
    let qs = q as usize;
    let mut add = vec![0u8; qs * qs];
    let mut mul = vec![0u8; qs * qs];
    let mut neg = vec![0u8; qs];
    let mut inv = vec![0u8; qs];

    for a in 0..q {
        let da = digits(a, p, m);
        let nd: Vec<u32> = da.iter().map(|&c| (p - c) % p).collect();
        neg[a as usize] = undigits(&nd, p) as u8;
        for b in 0..q {
            let db = digits(b, p, m);
            // addition: digit-wise mod p
            let sd: Vec<u32> = da.iter().zip(&db).map(|(&x, &y)| (x + y) % p).collect();
            add[a as usize * qs + b as usize] = undigits(&sd, p) as u8;
            // multiplication: schoolbook product reduced by the polynomial
            let mut prod = vec![0u8; 2 * m as usize];
            for (i, &x) in da.iter().enumerate() {
                for (j, &y) in db.iter().enumerate() {
                    prod[i + j] = ((prod[i + j] as u32 + x * y) % p) as u8;
                }
            }
            let red = if m == 1 {
                let mut r = prod.clone();
                while r.len() > 1 {
                    r.pop();
                }
                r
            } else {
                let mut r = poly_rem(&prod, &poly, p);
                r.resize(m as usize, 0);
                r
            };
            let rd: Vec<u32> = red.iter().map(|&c| c as u32).collect();
            mul[a as usize * qs + b as usize] = undigits(&rd, p) as u8;
        }
    }
    for a in 1..q {
        for b in 1..q {
            if mul[a as usize * qs + b as usize] == 1 {
                inv[a as usize] = b as u8;
                break;
            }
        }
    }
    Inner { p, m, q, poly, add, mul, neg, inv }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Prime powers up to MAX_Q.
    pub(crate) const PRIME_POWERS: &[u32] = &[
        2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27, 29, 31, 32, 37, 41, 43, 47, 49, 53,
        59, 61, 64,
    ];

    #[test]
    fn prime_case_has_no_poly() {
        let f = FieldSpec::new(2).unwrap();
        assert_eq!((f.p(), f.m()), (2, 1));
        assert!(f.poly().is_empty());
    }

    #[test]
    fn gf4_reduction_poly_is_x2_x_1() {
        // the only monic irreducible quadratic over GF(2), found by
        // exhaustive root check
        let f = FieldSpec::new(4).unwrap();
        assert_eq!((f.p(), f.m()), (2, 2));
        assert_eq!(f.poly(), &[1, 1, 1]);
    }

    #[test]
    fn six_is_not_a_prime_power() {
        assert_eq!(FieldSpec::new(6).unwrap_err(), Error::NotPrimePower(6));
        assert_eq!(FieldSpec::new(12).unwrap_err(), Error::NotPrimePower(12));
    }

    #[test]
    fn out_of_range_orders_rejected() {
        assert!(matches!(FieldSpec::new(1).unwrap_err(), Error::Unsupported(_)));
        assert!(matches!(FieldSpec::new(128).unwrap_err(), Error::Unsupported(_)));
    }

    #[test]
    fn arithmetic_examples() {
        let f2 = FieldSpec::new(2).unwrap();
        assert_eq!(f2.add(1, 1), 0); // characteristic 2

        let f3 = FieldSpec::new(3).unwrap();
        assert_eq!(f3.mul(2, 2), 1); // 4 mod 3

        // GF(4): x·x = x+1 after reducing x² by x²+x+1
        let f4 = FieldSpec::new(4).unwrap();
        let x = 2u8; // repr of the generator x
        assert_eq!(f4.mul(x, x), 3); // repr of x+1
    }

    #[test]
    fn checked_arith_errors() {
        let f3 = FieldSpec::new(3).unwrap();
        let f5 = FieldSpec::new(5).unwrap();
        let a = f3.element(2).unwrap();
        let b = f5.element(2).unwrap();
        assert_eq!(a.arith(&b, FieldOp::Add).unwrap_err(), Error::SpecMismatch);
        let z = f3.zero();
        assert_eq!(a.arith(&z, FieldOp::Div).unwrap_err(), Error::DivisionByZero);
        assert_eq!(f3.element(3).unwrap_err(), Error::InvalidRepr { repr: 3, q: 3 });
    }

    #[test]
    fn field_axioms_exhaustive_small_q() {
        for &q in PRIME_POWERS.iter().filter(|&&q| q <= 9) {
            let f = FieldSpec::new(q).unwrap();
            let els: Vec<u8> = (0..q as u8).collect();
            for &a in &els {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1, "inverse in GF({q})");
                }
                for &b in &els {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for &c in &els {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c)),
                            "distributivity in GF({q})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn div_then_mul_roundtrips() {
        for &q in PRIME_POWERS.iter().filter(|&&q| q <= 9) {
            let f = FieldSpec::new(q).unwrap();
            for a in 0..q as u8 {
                for b in 1..q as u8 {
                    let d = f.div(a, b).unwrap();
                    assert_eq!(f.mul(d, b), a);
                }
            }
        }
    }

    #[test]
    fn multiplicative_group_is_cyclic() {
        for &q in PRIME_POWERS {
            let f = FieldSpec::new(q).unwrap();
            let has_generator = (1..q as u8).any(|a| f.order(a) == q - 1);
            assert!(has_generator, "no generator found in GF({q})");
        }
    }

    #[test]
    fn reduction_polys_are_deterministic() {
        let f8a = FieldSpec::new(8).unwrap();
        let f8b = FieldSpec::new(8).unwrap();
        assert_eq!(f8a.poly(), f8b.poly());
        // x³+x+1 precedes x³+x²+1 in the candidate order
        assert_eq!(f8a.poly(), &[1, 1, 0, 1]);
    }
}
