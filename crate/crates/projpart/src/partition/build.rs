//! Partition constructions: the pencil partition around a flat, the
//! point × almost-line partition of the squared plane, and its general
//! power-space form built from nested pencils.

use crate::error::{Error, Result};
use crate::projgeom::{checked_pow, Flat, QuotientMap, Space};

use super::{Factor, Partition, ProductPart};

/// Cap on constructed part counts.
pub const MAX_PARTS: u128 = 10_000_000;

/// Partition the whole space around a flat F of dimension r-1: one whole
/// r-flat through F (the one holding the least point outside F) plus the
/// punctured r-flats F_i \ F. The factors partition F_qP^n.
pub fn partition_around(space: &Space, f: &Flat, r: i32) -> Result<Vec<Factor>> {
    let n = space.n() as i32;
    if !(1..=n).contains(&r) || f.dim() != r - 1 {
        return Err(Error::DimOutOfRange { dim: r, ambient: n });
    }
    if !f.space().same(space) {
        return Err(Error::AmbientMismatch);
    }
    // r-flats through F correspond to the classes of the quotient by F
    let qm = QuotientMap::new(space, f)?;
    let classes = qm.quotient_space().point_count() as u32;
    let keep_rep = (0..classes).map(|c| qm.rep_of_class(c)).min().expect("nonempty quotient");
    let mut out = Vec::with_capacity(classes as usize);
    for c in 0..classes {
        let rep = qm.rep_of_class(c);
        let rflat = f.with_point(rep);
        debug_assert_eq!(rflat.dim(), r);
        let factor = if rep == keep_rep {
            Factor::flat(rflat)?
        } else {
            Factor::new(rflat, vec![f.clone()])?
        };
        out.push(factor);
    }
    Ok(out)
}

/// The parts {p} × L or {p} × (L \ {p}) over all points p of the plane and
/// all lines L through p; exactly (q²+q+1)(q+1) parts.
pub fn construct_plane_partition(q: u32) -> Result<Partition> {
    let space = Space::new(q, 2)?;
    let mut parts = Vec::new();
    for p in 0..space.point_count() as u32 {
        let point_flat = space.span_indices(&[p]);
        let first = Factor::flat(point_flat.clone())?;
        for second in partition_around(&space, &point_flat, 1)? {
            let witness = second.base().clone();
            parts.push(ProductPart::new(vec![first.clone(), second], Some(witness))?);
        }
    }
    Partition::new(space, 2, parts)
}

/// Predicted size of [`construct_power_partition`]:
/// ∏_{i=1}^{k} (q^{n+1} - q^{i-1}) / (q^i - q^{i-1}).
pub fn power_partition_size(q: u32, n: usize, k: usize) -> Result<u128> {
    let q = q as u128;
    let mut total: u128 = 1;
    for i in 1..=k as u32 {
        let num = checked_pow(q, n as u32 + 1)? - checked_pow(q, i - 1)?;
        let den = checked_pow(q, i)? - checked_pow(q, i - 1)?;
        debug_assert_eq!(num % den, 0);
        total = total.checked_mul(num / den).ok_or(Error::Overflow)?;
    }
    Ok(total)
}

/// Partition of (F_qP^n)^k from nested pencils: the first factor runs over
/// singletons, and factor j+1 of each part is drawn from the partition of
/// the space around the span of factor j.
pub fn construct_power_partition(q: u32, n: usize, k: usize) -> Result<Partition> {
    if k < 1 || k > n {
        return Err(Error::DimOutOfRange { dim: k as i32, ambient: n as i32 });
    }
    let predicted = power_partition_size(q, n, k)?;
    if predicted > MAX_PARTS {
        return Err(Error::TooLarge { predicted, cap: MAX_PARTS });
    }
    let space = Space::new(q, n)?;
    let mut parts = Vec::with_capacity(predicted as usize);
    let mut chosen: Vec<Factor> = Vec::with_capacity(k);
    build_level(&space, k, &mut chosen, &mut parts)?;
    debug_assert_eq!(parts.len() as u128, predicted);
    Partition::new(space, k, parts)
}

fn build_level(
    space: &Space,
    k: usize,
    chosen: &mut Vec<Factor>,
    parts: &mut Vec<ProductPart>,
) -> Result<()> {
    let level = chosen.len();
    if level == k {
        // all factors sit inside the base flat of the last pencil
        let witness = chosen.last().unwrap().base().clone();
        parts.push(ProductPart::new(chosen.clone(), Some(witness))?);
        return Ok(());
    }
    if level == 0 {
        for p in 0..space.point_count() as u32 {
            chosen.push(Factor::point(space, p));
            build_level(space, k, chosen, parts)?;
            chosen.pop();
        }
    } else {
        // span of the previous factor is its base flat, of dimension level-1
        let around = chosen.last().unwrap().base().clone();
        debug_assert_eq!(around.dim(), level as i32 - 1);
        for factor in partition_around(space, &around, level as i32)? {
            chosen.push(factor);
            build_level(space, k, chosen, parts)?;
            chosen.pop();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::VerifyMode;
    use crate::pointset::PointSet;

    #[test]
    fn pencil_partitions_the_fano_plane() {
        // around a point of F_2P^2: one whole line (3 points) and two
        // punctured lines (2 points each), 7 points total
        let s = Space::new(2, 2).unwrap();
        let f = s.span_indices(&[0]);
        let factors = partition_around(&s, &f, 1).unwrap();
        assert_eq!(factors.len(), 3);
        let mut sizes: Vec<u32> = factors.iter().map(|f| f.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3]);
        let mut union = PointSet::empty(s.point_count() as u32);
        let mut sum = 0;
        for fac in &factors {
            sum += fac.len();
            union = union.union(fac.points());
        }
        assert_eq!(sum, 7);
        assert_eq!(union.len(), 7);
    }

    #[test]
    fn pencil_factor_count_formula() {
        // (q^{n+1} - q^r)/(q^{r+1} - q^r) factors; 4 at q=3, n=2, r=1
        let s = Space::new(3, 2).unwrap();
        let f = s.span_indices(&[5]);
        assert_eq!(partition_around(&s, &f, 1).unwrap().len(), 4);

        let s33 = Space::new(3, 3).unwrap();
        let line = s33.span_indices(&[0, 1]);
        let factors = partition_around(&s33, &line, 2).unwrap();
        assert_eq!(factors.len() as u64, (81 - 9) / (27 - 9));
    }

    #[test]
    fn pencil_rejects_bad_dims() {
        let s = Space::new(2, 2).unwrap();
        let f = s.span_indices(&[0]);
        assert!(matches!(
            partition_around(&s, &f, 2),
            Err(Error::DimOutOfRange { .. })
        ));
    }

    #[test]
    fn plane_partition_sizes() {
        for (q, expect) in [(2u32, 21usize), (3, 52)] {
            let p = construct_plane_partition(q).unwrap();
            assert_eq!(p.size(), expect);
            // every part's witness is the line holding both factors
            for part in p.parts() {
                let w = part.witness().unwrap();
                assert_eq!(w.dim(), 1);
                assert_eq!(w, part.factors()[1].base());
            }
            assert!(p.verify(&VerifyMode::Exhaustive).all_pass());
        }
    }

    #[test]
    fn power_partition_sizes() {
        assert_eq!(power_partition_size(2, 2, 2).unwrap(), 21);
        assert_eq!(power_partition_size(3, 3, 3).unwrap(), 2080);
        assert_eq!(power_partition_size(8, 3, 3).unwrap(), 384_345);
        // ∏_{i=2}^{n+1} (q^i-1)/(q-1) at k = n
        assert_eq!(power_partition_size(2, 3, 3).unwrap(), 3 * 7 * 15);

        let p = construct_power_partition(2, 2, 2).unwrap();
        assert_eq!(p.size(), 21);
        assert!(p.verify(&VerifyMode::Exhaustive).all_pass());
    }

    #[test]
    fn power_partition_with_fewer_coordinates() {
        // k < n: the part count is independent of n beyond the factor sizes
        let p = construct_power_partition(2, 3, 2).unwrap();
        assert_eq!(p.size() as u128, power_partition_size(2, 3, 2).unwrap());
        assert_eq!(p.size(), 105);
        assert!(p.verify(&VerifyMode::Exhaustive).all_pass());
        for part in p.parts() {
            assert_eq!(part.witness().unwrap().dim(), 1);
        }
    }

    #[test]
    fn volume_sanity() {
        // max part size ≤ ((q^k-1)/(q-1))^k, and the part count is at least
        // the tuple total over that
        for (q, n, k) in [(2u32, 2usize, 2usize), (3, 2, 2), (2, 3, 3)] {
            let p = construct_power_partition(q, n, k).unwrap();
            let qq = q as u128;
            let cap = ((qq.pow(k as u32) - 1) / (qq - 1)).pow(k as u32);
            let max_part = p.parts().iter().map(|part| part.size()).max().unwrap();
            assert!(max_part <= cap);
            assert!(p.size() as u128 * max_part >= p.tuple_total());
        }
    }

    #[test]
    fn power_partition_guards_size() {
        assert!(matches!(
            construct_power_partition(9, 5, 5),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(
            construct_power_partition(3, 2, 3),
            Err(Error::DimOutOfRange { .. })
        ));
    }
}
