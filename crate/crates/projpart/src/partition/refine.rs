//! Partition surgery: the canonical 4-way split for k = 2, the φ profile of
//! square parts over the lines of a plane, the three-case split of an
//! almost-flat into lower-dimensional almost-flats, minimal-pattern
//! refinement, and the coordinate-wise split of a product minus products.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::projgeom::{Flat, Space};

use super::{Factor, Partition, ProductPart};

/// Rewrite a k=2 partition so every part is square (A = A) or non-square
/// (factors disjoint), via the exact 4-way split of each mixed part. Empty
/// pieces are dropped, so the result has at most 4 times as many parts.
pub fn canonicalize(p: &Partition) -> Result<Partition> {
    if p.k() != 2 {
        return Err(Error::WrongArity { expected: 2, got: p.k() });
    }
    let space = p.space().clone();
    let mut parts = Vec::new();
    for part in p.parts() {
        let a = part.factors()[0].points().clone();
        let b = part.factors()[1].points().clone();
        if a == b || !a.intersects(&b) {
            parts.push(part.clone());
            continue;
        }
        let meet = a.intersection(&b);
        let a_only = a.difference(&b);
        let b_only = b.difference(&a);
        let witness = part.witness().cloned();
        for (x, y) in [
            (&meet, &meet),
            (&a_only, &meet),
            (&meet, &b_only),
            (&a_only, &b_only),
        ] {
            if x.is_empty() || y.is_empty() {
                continue;
            }
            let fx = Factor::from_point_set(&space, x)?;
            let fy = Factor::from_point_set(&space, y)?;
            parts.push(ProductPart::new(vec![fx, fy], witness.clone())?);
        }
    }
    Partition::new(space, 2, parts)
}

/// The square parts (A = A) of a canonical k=2 partition, as point sets.
pub fn square_sets(p: &Partition) -> Vec<PointSet> {
    p.parts()
        .iter()
        .filter(|part| part.factors()[0].points() == part.factors()[1].points())
        .map(|part| part.factors()[0].points().clone())
        .collect()
}

#[derive(Clone, Debug)]
pub struct PhiProfile {
    /// φ(L) for every line of the plane.
    pub per_line: Vec<(Flat, u32)>,
    pub sum: u64,
    /// q(q²+q+1), the pigeonhole floor.
    pub bound: u64,
    pub holds: bool,
}

/// φ(L) = number of square-part pieces a line L is cut into. The input sets
/// must partition the plane, each inside some line.
pub fn phi_profile(space: &Space, square_parts: &[PointSet]) -> Result<PhiProfile> {
    if space.n() != 2 {
        return Err(Error::DimOutOfRange { dim: space.n() as i32, ambient: 2 });
    }
    let count = space.point_count() as u32;
    let mut seen = PointSet::empty(count);
    let mut covered = 0u64;
    for (i, s) in square_parts.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::NotAPartition(format!("square part {i} is empty")));
        }
        if seen.intersects(s) {
            return Err(Error::NotAPartition(format!("square part {i} overlaps another")));
        }
        let span = space.span_indices(&s.iter().collect::<Vec<_>>());
        if span.dim() > 1 {
            return Err(Error::NotAPartition(format!("square part {i} is not inside a line")));
        }
        seen = seen.union(s);
        covered += s.len() as u64;
    }
    if covered != space.point_count() {
        return Err(Error::NotAPartition(format!(
            "square parts cover {covered} of {} points",
            space.point_count()
        )));
    }
    let q = space.q() as u64;
    let mut per_line = Vec::new();
    let mut sum = 0u64;
    for line in space.flats_of_dim(1)? {
        let lset = line.point_set();
        let phi = square_parts.iter().filter(|s| s.intersects(&lset)).count() as u32;
        sum += phi as u64;
        per_line.push((line, phi));
    }
    per_line.sort_by(|a, b| a.0.cmp(&b.0));
    let bound = q * space.point_count();
    Ok(PhiProfile { per_line, sum, bound, holds: sum >= bound })
}

/// Split an almost-flat factor of dimension d into almost-flats of dimension
/// d'. The splitting flat F_{d'} and the kept point p* are always the least
/// valid choices, so the output is reproducible.
///
/// Cases, by the effective hole H of the factor (dimension d''):
/// - whole flat: pencil through a least (d'-1)-subflat, one piece kept whole;
/// - d'' ≥ d': pencil through a least (d'-1)-subflat of H, all pieces
///   punctured by it;
/// - d'' < d': pencil through a least (d'-1)-subflat containing H; the piece
///   through the least outside point keeps H as its hole, the others are
///   punctured by the splitting flat.
pub fn split_factor(factor: &Factor, d_target: i32) -> Result<Vec<Factor>> {
    let d = factor.dim();
    if !factor.is_almost_flat() {
        return Err(Error::BadDims("factor is not an almost-flat".into()));
    }
    if d_target <= 0 || d_target > d {
        return Err(Error::BadDims(format!(
            "cannot split a dim-{d} almost-flat into dim-{d_target} pieces"
        )));
    }
    if d_target == d {
        return Ok(vec![factor.clone()]);
    }
    let base = factor.span_flat();
    let hole = factor.effective_hole();

    match hole {
        None => {
            // whole flat
            let splitter = least_subflat(&base, d_target - 1, None)?;
            let (kept, others) = pencil_in(&base, &splitter, factor.points())?;
            let mut out = vec![Factor::flat(kept)?];
            for fl in others {
                out.push(Factor::new(fl, vec![splitter.clone()])?);
            }
            Ok(out)
        }
        Some(h) if h.dim() >= d_target => {
            // hole is large: split through a subflat of the hole; every
            // piece is punctured
            let splitter = least_subflat(&h, d_target - 1, None)?;
            let (_, flats) = pencil_all(&base, &splitter, factor.points())?;
            flats
                .into_iter()
                .map(|fl| Factor::new(fl, vec![splitter.clone()]))
                .collect()
        }
        Some(h) => {
            // hole is small: splitting flat contains it
            let splitter = least_subflat(&base, d_target - 1, Some(&h))?;
            let (kept, others) = pencil_in(&base, &splitter, factor.points())?;
            let mut out = vec![Factor::new(kept, vec![h.clone()])?];
            for fl in others {
                out.push(Factor::new(fl, vec![splitter.clone()])?);
            }
            Ok(out)
        }
    }
}

/// Least d-dimensional subflat of `ambient`, optionally required to contain
/// `containing`.
fn least_subflat(ambient: &Flat, d: i32, containing: Option<&Flat>) -> Result<Flat> {
    ambient
        .subflats(d)?
        .into_iter()
        .filter(|f| containing.is_none_or(|c| f.contains_flat(c)))
        .min()
        .ok_or_else(|| Error::BadDims(format!("no dim-{d} subflat fits")))
}

/// The pencil of span(splitter ∪ {p}) flats over the live points, split into
/// the flat through the least live point outside the splitter and the rest.
fn pencil_in(base: &Flat, splitter: &Flat, live: &PointSet) -> Result<(Flat, Vec<Flat>)> {
    let (kept, mut flats) = pencil_all(base, splitter, live)?;
    let kept = kept.expect("some live point lies outside the splitter");
    flats.retain(|f| f != &kept);
    Ok((kept, flats))
}

fn pencil_all(base: &Flat, splitter: &Flat, live: &PointSet) -> Result<(Option<Flat>, Vec<Flat>)> {
    let splitter_pts = splitter.point_set();
    let mut kept: Option<(u32, Flat)> = None;
    let mut flats: BTreeSet<Flat> = BTreeSet::new();
    for p in base.point_indices() {
        if splitter_pts.contains(p) || !live.contains(p) {
            continue;
        }
        let f = splitter.with_point(p);
        if kept.is_none() {
            kept = Some((p, f.clone()));
        }
        flats.insert(f);
    }
    let _ = base;
    Ok((kept.map(|(_, f)| f), flats.into_iter().collect()))
}

/// Refine a product of almost-flats with a non-dominated dimension pattern
/// into parts with minimal non-dominated patterns: the factors at the k
/// smallest dimensions become points and the rest are split into dimension
/// k+1, where k+1 is the least sorted position at which the pattern reaches
/// the staircase.
pub fn refine_to_minimal(part: &ProductPart) -> Result<Vec<ProductPart>> {
    let n = part.arity();
    for f in part.factors() {
        if !f.is_almost_flat() {
            return Err(Error::BadDims("refinement needs almost-flat factors".into()));
        }
    }
    let pattern = part.dimension_pattern();
    if pattern.is_dominated() {
        return Err(Error::AlreadyDominated);
    }
    // least sorted position (1-based) whose dimension reaches it
    let split_dim = pattern
        .dims()
        .iter()
        .enumerate()
        .find(|(i, &d)| d > *i as i32)
        .map(|(i, _)| i as i32 + 1)
        .expect("a non-dominated pattern has a violating position");
    let points_needed = (split_dim - 1) as usize;

    // factor positions ordered by dimension; the first `points_needed` are
    // reduced to points, the rest are split to dimension `split_dim`
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| part.factors()[i].dim());
    let mut pieces: Vec<Vec<Factor>> = vec![Vec::new(); n];
    let space = part.space().clone();
    for (rank, &pos) in order.iter().enumerate() {
        let f = &part.factors()[pos];
        if rank < points_needed {
            pieces[pos] = f.points().iter().map(|p| Factor::point(&space, p)).collect();
        } else {
            pieces[pos] = split_factor(f, split_dim)?;
        }
    }

    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let factors: Vec<Factor> =
            (0..n).map(|i| pieces[i][choice[i]].clone()).collect();
        out.push(ProductPart::new(factors, part.witness().cloned())?);
        // odometer over the piece lists
        let mut done = true;
        for i in 0..n {
            choice[i] += 1;
            if choice[i] < pieces[i].len() {
                done = false;
                break;
            }
            choice[i] = 0;
        }
        if done {
            break;
        }
    }
    Ok(out)
}

/// Split base \ (removed_1 ∪ … ∪ removed_h) into at most k^h disjoint
/// products, peeling each removed product off coordinate by coordinate: a
/// surviving tuple escapes at its first coordinate outside the removed
/// factor.
pub fn product_minus_products_split(
    base: &ProductPart,
    removed: &[ProductPart],
) -> Result<Vec<ProductPart>> {
    let k = part_arity_checked(base, removed)?;
    let space = base.space().clone();
    let mut current: Vec<Vec<PointSet>> =
        vec![base.factors().iter().map(|f| f.points().clone()).collect()];
    for r in removed {
        let rsets: Vec<&PointSet> = r.factors().iter().map(|f| f.points()).collect();
        let mut next = Vec::new();
        for piece in current {
            if piece.iter().zip(&rsets).any(|(p, r)| !p.intersects(r)) {
                // already disjoint from the removed product
                next.push(piece);
                continue;
            }
            for j in 0..k {
                let escaped = piece[j].difference(rsets[j]);
                if escaped.is_empty() {
                    continue;
                }
                let mut split: Vec<PointSet> = Vec::with_capacity(k);
                let mut ok = true;
                for (t, side) in piece.iter().enumerate() {
                    let s = match t.cmp(&j) {
                        std::cmp::Ordering::Less => side.intersection(rsets[t]),
                        std::cmp::Ordering::Equal => escaped.clone(),
                        std::cmp::Ordering::Greater => side.clone(),
                    };
                    if s.is_empty() {
                        ok = false;
                        break;
                    }
                    split.push(s);
                }
                if ok {
                    next.push(split);
                }
            }
        }
        current = next;
    }
    current
        .into_iter()
        .map(|sets| {
            let factors: Vec<Factor> = sets
                .iter()
                .map(|s| Factor::from_point_set(&space, s))
                .collect::<Result<_>>()?;
            ProductPart::new(factors, None)
        })
        .collect()
}

fn part_arity_checked(base: &ProductPart, removed: &[ProductPart]) -> Result<usize> {
    let k = base.arity();
    for r in removed {
        if r.arity() != k {
            return Err(Error::WrongArity { expected: k, got: r.arity() });
        }
        if !r.space().same(base.space()) {
            return Err(Error::AmbientMismatch);
        }
    }
    Ok(k)
}
