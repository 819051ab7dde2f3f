//! Product partitions of (F_qP^n)^k. A part is a product of factors, each a
//! flat minus a union of flats, together with a witness flat whose k-th
//! power contains the part. Verification checks pairwise disjointness
//! factor-by-factor, exact coverage by cardinality sum (tuple sets are never
//! materialized), and witness containment.

mod build;
mod io;
mod refine;

pub use build::{construct_plane_partition, construct_power_partition, partition_around, power_partition_size};
pub use io::{FactorFile, PartFile, PartitionFile};
pub use refine::{
    canonicalize, phi_profile, product_minus_products_split, refine_to_minimal, split_factor,
    square_sets, PhiProfile,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::projgeom::{Flat, Space};

/// A factor of a product part: the points of `base` minus the points of the
/// `holes`. The represented set must be nonempty.
#[derive(Clone, PartialEq, Eq)]
pub struct Factor {
    base: Flat,
    holes: Vec<Flat>,
    points: PointSet,
    dim: i32,
}

impl Factor {
    pub fn new(base: Flat, holes: Vec<Flat>) -> Result<Factor> {
        let space = base.space().clone();
        for h in &holes {
            if !h.space().same(&space) {
                return Err(Error::AmbientMismatch);
            }
        }
        let mut points = base.point_set();
        for h in &holes {
            points = points.difference(&h.point_set());
        }
        if points.is_empty() {
            return Err(Error::EmptyFactor);
        }
        let dim = space.span_indices(&points.iter().collect::<Vec<_>>()).dim();
        Ok(Factor { base, holes, points, dim })
    }

    /// A whole flat as a factor.
    pub fn flat(base: Flat) -> Result<Factor> {
        Factor::new(base, Vec::new())
    }

    /// The singleton factor {p}.
    pub fn point(space: &Space, idx: u32) -> Factor {
        let base = space.span_indices(&[idx]);
        Factor::new(base, Vec::new()).expect("a point factor is never empty")
    }

    /// Represent an arbitrary nonempty point set: base = span(set), holes =
    /// one flat when the missing points form one, else one 0-flat per
    /// missing point.
    pub fn from_point_set(space: &Space, set: &PointSet) -> Result<Factor> {
        if set.is_empty() {
            return Err(Error::EmptyFactor);
        }
        let ids: Vec<u32> = set.iter().collect();
        let base = space.span_indices(&ids);
        let missing = base.point_set().difference(set);
        let holes = if missing.is_empty() {
            Vec::new()
        } else {
            let missing_ids: Vec<u32> = missing.iter().collect();
            let h = space.span_indices(&missing_ids);
            if h.point_set() == missing {
                vec![h]
            } else {
                missing_ids.iter().map(|&p| space.span_indices(&[p])).collect()
            }
        };
        Factor::new(base, holes)
    }

    pub fn space(&self) -> &Space {
        self.base.space()
    }

    pub fn base(&self) -> &Flat {
        &self.base
    }

    pub fn holes(&self) -> &[Flat] {
        &self.holes
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn len(&self) -> u32 {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // enforced at construction
    }

    /// Dimension of the minimal flat containing the point set.
    pub fn dim(&self) -> i32 {
        self.dim
    }

    /// Minimal flat containing the point set.
    pub fn span_flat(&self) -> Flat {
        self.space().span_indices(&self.points.iter().collect::<Vec<_>>())
    }

    pub fn is_flat(&self) -> bool {
        self.points == self.base.point_set()
    }

    /// When the removed points form the point set of a single flat, that
    /// flat; `None` for a whole flat or an irregular removal.
    pub fn effective_hole(&self) -> Option<Flat> {
        let missing = self.base.point_set().difference(&self.points);
        if missing.is_empty() {
            return None;
        }
        let ids: Vec<u32> = missing.iter().collect();
        let h = self.space().span_indices(&ids);
        if h.point_set() == missing {
            Some(h)
        } else {
            None
        }
    }

    /// A flat, or a flat minus a single lower-dimensional subflat.
    pub fn is_almost_flat(&self) -> bool {
        self.is_flat() || self.effective_hole().is_some()
    }
}

impl std::fmt::Debug for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Factor(dim {}, {} pts, {} holes)", self.dim, self.len(), self.holes.len())
    }
}

/// Sorted non-decreasing tuple of factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DimensionPattern(Vec<i32>);

impl DimensionPattern {
    pub fn new(mut dims: Vec<i32>) -> DimensionPattern {
        dims.sort_unstable();
        DimensionPattern(dims)
    }

    pub fn dims(&self) -> &[i32] {
        &self.0
    }

    /// Componentwise partial order on patterns of equal length.
    pub fn precedes(&self, other: &DimensionPattern) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// The staircase pattern (0, 1, …, len-1).
    pub fn staircase(len: usize) -> DimensionPattern {
        DimensionPattern((0..len as i32).collect())
    }

    /// ⪯ (0, 1, …, len-1); dominated parts are the "small" ones.
    pub fn is_dominated(&self) -> bool {
        self.precedes(&DimensionPattern::staircase(self.0.len()))
    }

    /// The n-1 minimal non-dominated patterns (0,…,0,j,…,j) with j at the
    /// positions ≥ j, for j = 1..n-1.
    pub fn minimal_non_dominated(n: usize) -> Vec<DimensionPattern> {
        (1..n as i32)
            .map(|j| {
                DimensionPattern(
                    (1..=n as i32).map(|i| if i >= j { j } else { 0 }).collect(),
                )
            })
            .collect()
    }
}

/// A product of factors, optionally with a witness flat L such that the part
/// is contained in L^k.
#[derive(Clone, Debug)]
pub struct ProductPart {
    factors: Vec<Factor>,
    witness: Option<Flat>,
}

impl ProductPart {
    pub fn new(factors: Vec<Factor>, witness: Option<Flat>) -> Result<ProductPart> {
        let Some(first) = factors.first() else {
            return Err(Error::WrongArity { expected: 1, got: 0 });
        };
        let space = first.space().clone();
        for f in &factors {
            if !f.space().same(&space) {
                return Err(Error::AmbientMismatch);
            }
        }
        if let Some(w) = &witness {
            if !w.space().same(&space) {
                return Err(Error::AmbientMismatch);
            }
        }
        Ok(ProductPart { factors, witness })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn witness(&self) -> Option<&Flat> {
        self.witness.as_ref()
    }

    pub fn space(&self) -> &Space {
        self.factors[0].space()
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    /// Number of tuples: the product of the factor sizes.
    pub fn size(&self) -> u128 {
        self.factors.iter().map(|f| f.len() as u128).product()
    }

    pub fn contains(&self, tuple: &[u32]) -> bool {
        tuple.len() == self.factors.len()
            && tuple.iter().zip(&self.factors).all(|(&p, f)| f.points().contains(p))
    }

    pub fn dimension_pattern(&self) -> DimensionPattern {
        DimensionPattern::new(self.factors.iter().map(|f| f.dim()).collect())
    }

    fn overlaps(&self, other: &ProductPart) -> bool {
        self.factors
            .iter()
            .zip(&other.factors)
            .all(|(a, b)| a.points().intersects(b.points()))
    }
}

/// How much work `verify` puts into disjointness.
#[derive(Clone, Debug)]
pub enum VerifyMode {
    /// Every pair of parts.
    Exhaustive,
    /// A seeded random sample of part pairs.
    Sampled { pairs: u64, seed: u64 },
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct VerifyReport {
    pub disjoint: bool,
    pub covering: bool,
    pub witnessed: bool,
    pub mode: String,
    pub parts: usize,
    pub covered: u128,
    pub total: u128,
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.disjoint && self.covering && self.witnessed
    }
}

/// A list of product parts meant to tile (F_qP^n)^k.
#[derive(Clone, Debug)]
pub struct Partition {
    space: Space,
    k: usize,
    parts: Vec<ProductPart>,
}

impl Partition {
    pub fn new(space: Space, k: usize, parts: Vec<ProductPart>) -> Result<Partition> {
        for (i, p) in parts.iter().enumerate() {
            if p.arity() != k {
                return Err(Error::NotAPartition(format!(
                    "part {i} has arity {}, expected {k}",
                    p.arity()
                )));
            }
            if !p.space().same(&space) {
                return Err(Error::AmbientMismatch);
            }
        }
        Ok(Partition { space, k, parts })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parts(&self) -> &[ProductPart] {
        &self.parts
    }

    pub fn size(&self) -> usize {
        self.parts.len()
    }

    /// |F_qP^n|^k.
    pub fn tuple_total(&self) -> u128 {
        (self.space.point_count() as u128).pow(self.k as u32)
    }

    /// Check disjointness, coverage, and witnesses; violations list the
    /// first offender found per check.
    pub fn verify(&self, mode: &VerifyMode) -> VerifyReport {
        let mut violations = Vec::new();

        // disjointness: two product parts intersect iff every coordinate
        // pair of factor sets intersects
        let n = self.parts.len();
        let overlap: Option<(usize, usize)> = match mode {
            VerifyMode::Exhaustive => (0..n)
                .into_par_iter()
                .filter_map(|i| {
                    ((i + 1)..n)
                        .find(|&j| self.parts[i].overlaps(&self.parts[j]))
                        .map(|j| (i, j))
                })
                .min(),
            VerifyMode::Sampled { pairs, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut hit = None;
                if n >= 2 {
                    for _ in 0..*pairs {
                        let i = rng.gen_range(0..n);
                        let j = rng.gen_range(0..n - 1);
                        let j = if j >= i { j + 1 } else { j };
                        if self.parts[i].overlaps(&self.parts[j]) {
                            hit = Some((i.min(j), i.max(j)));
                            break;
                        }
                    }
                }
                hit
            }
        };
        let disjoint = overlap.is_none();
        if let Some((i, j)) = overlap {
            violations.push(format!("parts {i} and {j} overlap"));
        }

        // coverage: with disjointness established, exact cardinality
        // accounting is an exact cover test
        let covered: u128 = self.parts.iter().map(|p| p.size()).sum();
        let total = self.tuple_total();
        let covering = covered == total;
        if !covering {
            violations.push(format!(
                "cardinality sum {covered} != {total} ({} {})",
                if covered < total { "deficit" } else { "excess" },
                covered.abs_diff(total)
            ));
        }

        // witnesses: each part inside the k-th power of some (k-1)-flat
        let mut witnessed = true;
        for (i, part) in self.parts.iter().enumerate() {
            let ok = match part.witness() {
                Some(w) => {
                    let wset = w.point_set();
                    w.dim() == self.k as i32 - 1
                        && part.factors().iter().all(|f| f.points().is_subset(&wset))
                }
                None => {
                    let union = part
                        .factors()
                        .iter()
                        .fold(PointSet::empty(self.space.point_count() as u32), |acc, f| {
                            acc.union(f.points())
                        });
                    let span = self.space.span_indices(&union.iter().collect::<Vec<_>>());
                    span.dim() < self.k as i32
                }
            };
            if !ok {
                witnessed = false;
                violations.push(format!("part {i} is not inside the power of a (k-1)-flat"));
                break;
            }
        }

        VerifyReport {
            disjoint,
            covering,
            witnessed,
            mode: match mode {
                VerifyMode::Exhaustive => "exhaustive".into(),
                VerifyMode::Sampled { pairs, seed } => format!("sampled({pairs},seed={seed})"),
            },
            parts: n,
            covered,
            total,
            violations,
        }
    }

    /// The trivial partition into singleton products.
    pub fn trivial(space: &Space, k: usize) -> Result<Partition> {
        let count = space.point_count() as u32;
        let total = (count as u128).checked_pow(k as u32).ok_or(Error::Overflow)?;
        if total > 10_000_000 {
            return Err(Error::TooLarge { predicted: total, cap: 10_000_000 });
        }
        let mut parts = Vec::with_capacity(total as usize);
        let mut tuple = vec![0u32; k];
        loop {
            let factors: Vec<Factor> =
                tuple.iter().map(|&p| Factor::point(space, p)).collect();
            let witness = space.span_indices(&tuple);
            // any (k-1)-flat through the span works; extend deterministically
            let witness = extend_to_dim(&witness, k as i32 - 1)?;
            parts.push(ProductPart::new(factors, Some(witness))?);
            if !crate::projgeom::odometer_u32(&mut tuple, count) {
                break;
            }
        }
        Partition::new(space.clone(), k, parts)
    }
}

/// Deterministically extend a flat to the requested dimension by adjoining
/// least points outside it.
pub(crate) fn extend_to_dim(flat: &Flat, dim: i32) -> Result<Flat> {
    let space = flat.space().clone();
    if dim < flat.dim() || dim > space.n() as i32 {
        return Err(Error::DimOutOfRange { dim, ambient: space.n() as i32 });
    }
    let mut f = flat.clone();
    let mut p = 0u32;
    while f.dim() < dim {
        if !f.contains_point(p) {
            f = f.with_point(p);
        }
        p += 1;
    }
    Ok(f)
}
