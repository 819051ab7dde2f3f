//! Quotient of the space by a flat S: the classes span(S ∪ {p}) \ S for
//! p outside S, realized through the linear projection that drops the pivot
//! coordinates of S's basis. The quotient is itself a projective space of
//! dimension n - dim(S) - 1, which is what makes the dependence recursions
//! work.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::pointset::PointSet;

use super::{is_dependent_indices, Flat, Space};

pub struct QuotientMap {
    space: Space,
    by: Flat,
    quotient: Space,
    /// Linear projection GF(q)^{n+1} → GF(q)^{n'+1} with kernel the lift
    /// of `by`.
    proj: Mat,
    /// Ambient point index → quotient point index; u32::MAX inside `by`.
    class_of: Vec<u32>,
    /// Quotient point index → least ambient point of the class.
    reps: Vec<u32>,
}

impl QuotientMap {
    pub fn new(space: &Space, s: &Flat) -> Result<QuotientMap> {
        if !s.space().same(space) {
            return Err(Error::AmbientMismatch);
        }
        let n = space.n() as i32;
        if s.dim() >= n {
            return Err(Error::DimOutOfRange { dim: s.dim(), ambient: n });
        }
        let f = space.spec();
        let m = space.n() + 1;
        let pivots: Vec<usize> = (0..s.rank())
            .map(|i| s.row(i).iter().position(|&c| c != 0).unwrap())
            .collect();
        let nonpivots: Vec<usize> = (0..m).filter(|j| !pivots.contains(j)).collect();
        let mut proj = Mat::zero(nonpivots.len(), m);
        for (t, &c) in nonpivots.iter().enumerate() {
            proj.set(t, c, 1);
            for (i, &p) in pivots.iter().enumerate() {
                proj.set(t, p, f.neg(s.row(i)[c]));
            }
        }
        let quotient = Space::with_spec(space.spec().clone(), nonpivots.len() - 1)?;
        let count = space.point_count() as usize;
        let mut class_of = vec![u32::MAX; count];
        let mut reps = vec![u32::MAX; quotient.point_count() as usize];
        for idx in 0..count as u32 {
            let v = space.coords_of_index(idx);
            let w = proj.apply(&v, f);
            let Some(norm) = quotient.normalize(&w) else {
                continue; // point of S
            };
            let c = quotient.index_of_normalized(&norm);
            class_of[idx as usize] = c;
            if reps[c as usize] == u32::MAX {
                reps[c as usize] = idx;
            }
        }
        Ok(QuotientMap { space: space.clone(), by: s.clone(), quotient, proj, class_of, reps })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn by(&self) -> &Flat {
        &self.by
    }

    pub fn quotient_space(&self) -> &Space {
        &self.quotient
    }

    /// n - dim(S) - 1.
    pub fn quotient_dim(&self) -> i32 {
        self.quotient.n() as i32
    }

    /// Every class has q^{dim(S)+1} points.
    pub fn class_size(&self) -> u64 {
        (self.space.q() as u64).pow((self.by.dim() + 1) as u32)
    }

    /// Quotient point index of an ambient point outside S.
    pub fn class_id(&self, p: u32) -> Result<u32> {
        let c = self.class_of[p as usize];
        if c == u32::MAX {
            return Err(Error::PointInFlat(p));
        }
        Ok(c)
    }

    /// Lexicographically least point of the class of p.
    pub fn class_rep(&self, p: u32) -> Result<u32> {
        Ok(self.reps[self.class_id(p)? as usize])
    }

    pub fn rep_of_class(&self, class: u32) -> u32 {
        self.reps[class as usize]
    }

    pub fn class_members(&self, class: u32) -> Vec<u32> {
        (0..self.class_of.len() as u32)
            .filter(|&p| self.class_of[p as usize] == class)
            .collect()
    }

    /// Image of an ambient point set in the quotient space.
    pub fn project_set(&self, set: &PointSet) -> PointSet {
        let mut out = PointSet::empty(self.quotient.point_count() as u32);
        for p in set.iter() {
            let c = self.class_of[p as usize];
            if c != u32::MAX {
                out.insert(c);
            }
        }
        out
    }

    /// Image flat of an ambient flat: span(F ∪ S)/S as a flat of the
    /// quotient space.
    pub fn project_flat(&self, flat: &Flat) -> Flat {
        let f = self.space.spec();
        let mut mat = Mat::zero(0, self.quotient.n() + 1);
        for i in 0..flat.rank() {
            mat.push_row(&self.proj.apply(flat.row(i), f));
        }
        mat.rref(f);
        Flat::from_canonical_mat(self.quotient.clone(), mat)
    }

    /// Ambient hyperplane containing S, lifted from a nonzero functional on
    /// the quotient coordinates.
    pub fn lift_functional(&self, phi: &[u8]) -> Result<Flat> {
        if phi.len() != self.quotient.n() + 1 {
            return Err(Error::AmbientMismatch);
        }
        let f = self.space.spec();
        let m = self.space.n() + 1;
        let mut a = vec![0u8; m];
        for (t, &c) in phi.iter().enumerate() {
            if c != 0 {
                for j in 0..m {
                    a[j] = f.add(a[j], f.mul(c, self.proj.at(t, j)));
                }
            }
        }
        Flat::hyperplane_from_functional(&self.space, &a)
    }
}

/// F'|_{F/S}: the union of the equivalence classes of F \ S (classes taken
/// in the quotient of F by F ∩ S) that meet F'.
pub fn restrict(fprime: &Flat, f: &Flat, s: &Flat) -> Result<PointSet> {
    let space = f.space().clone();
    if !fprime.space().same(&space) || !s.space().same(&space) {
        return Err(Error::AmbientMismatch);
    }
    let t = f.intersect(s);
    let qm = QuotientMap::new(&space, &t)?;
    let s_points = s.point_set();
    let mut covered = PointSet::empty(qm.quotient_space().point_count() as u32);
    for p in fprime.point_indices() {
        if f.contains_point(p) && !s_points.contains(p) {
            covered.insert(qm.class_id(p)?);
        }
    }
    let mut out = PointSet::empty(space.point_count() as u32);
    for p in f.point_indices() {
        if s_points.contains(p) {
            continue;
        }
        if covered.contains(qm.class_id(p)?) {
            out.insert(p);
        }
    }
    Ok(out)
}

/// Outcome of an exhaustive claim check; `violations` holds printable
/// counterexamples (empty means the claim held everywhere).
#[derive(Debug, Clone)]
pub struct ClaimsReport {
    pub checked: u64,
    pub violations: Vec<String>,
}

impl ClaimsReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

const MAX_VIOLATIONS: usize = 8;

/// Quotient invariance of dependence: for tuples (p1, …, pk) with
/// p1 ∉ {p2, …, pk}, the tuple is dependent iff the images of p2, …, pk in
/// the quotient by p1 are dependent. Exhaustive over all k-tuples.
pub fn check_invariance_dependence(space: &Space, k: usize) -> Result<ClaimsReport> {
    let count = space.point_count() as u32;
    let mut report = ClaimsReport { checked: 0, violations: Vec::new() };
    for p1 in 0..count {
        let s = space.span_indices(&[p1]);
        let qm = QuotientMap::new(space, &s)?;
        let mut rest = vec![0u32; k - 1];
        loop {
            if rest.iter().all(|&p| p != p1) {
                report.checked += 1;
                let mut tuple = vec![p1];
                tuple.extend_from_slice(&rest);
                let dep = is_dependent_indices(space, &tuple);
                let images: Vec<u32> =
                    rest.iter().map(|&p| qm.class_id(p)).collect::<Result<_>>()?;
                let dep_q = is_dependent_indices(qm.quotient_space(), &images);
                if dep != dep_q
                    && report.violations.len() < MAX_VIOLATIONS {
                        report.violations.push(format!(
                            "tuple {tuple:?}: dependent={dep} but quotient images {images:?} dependent={dep_q}"
                        ));
                    }
            }
            if !odometer(&mut rest, count) {
                break;
            }
        }
    }
    Ok(report)
}

/// Uniform intersection sizes: for all flats S, F and subflats F' of F, the
/// classes of F/S meeting F' all meet it in the same number of points.
pub fn check_intersection_size(space: &Space) -> Result<ClaimsReport> {
    let mut report = ClaimsReport { checked: 0, violations: Vec::new() };
    let n = space.n() as i32;
    let mut all_flats = Vec::new();
    for d in -1..=n {
        all_flats.extend(space.flats_of_dim(d)?);
    }
    for s in &all_flats {
        if s.dim() >= n {
            continue;
        }
        for f in &all_flats {
            if f.is_empty() {
                continue;
            }
            let t = f.intersect(s);
            let qm = QuotientMap::new(space, &t)?;
            let s_points = s.point_set();
            // class id → members of F \ S
            let mut classes: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
            for p in f.point_indices() {
                if !s_points.contains(p) {
                    classes.entry(qm.class_id(p)?).or_default().push(p);
                }
            }
            for d in 0..=f.dim() {
                for fp in f.subflats(d)? {
                    report.checked += 1;
                    let fp_points = fp.point_set();
                    let sizes: Vec<usize> = classes
                        .values()
                        .map(|members| members.iter().filter(|&&p| fp_points.contains(p)).count())
                        .filter(|&c| c > 0)
                        .collect();
                    if sizes.windows(2).any(|w| w[0] != w[1])
                        && report.violations.len() < MAX_VIOLATIONS {
                            report.violations.push(format!(
                                "S={s:?} F={f:?} F'={fp:?}: intersection sizes {sizes:?}"
                            ));
                        }
                }
            }
        }
    }
    Ok(report)
}

/// Dependence is a property of classes: replacing q_j by a point of the same
/// class modulo span(p_1, …, p_k) never changes the dependence status.
/// Exhaustive over all prefixes of length k and suffixes of length m-k.
pub fn check_dependence_class(space: &Space, k: usize, m: usize) -> Result<ClaimsReport> {
    let count = space.point_count() as u32;
    let mut report = ClaimsReport { checked: 0, violations: Vec::new() };
    let mut prefix = vec![0u32; k];
    loop {
        let s = space.span_indices(&prefix);
        if s.dim() < space.n() as i32 {
            let qm = QuotientMap::new(space, &s)?;
            let s_points = s.point_set();
            let mut suffix = vec![0u32; m - k];
            loop {
                let mut tuple = prefix.clone();
                tuple.extend_from_slice(&suffix);
                let dep = is_dependent_indices(space, &tuple);
                for j in 0..suffix.len() {
                    let qj = suffix[j];
                    if s_points.contains(qj) {
                        continue;
                    }
                    let class = qm.class_id(qj)?;
                    for alt in qm.class_members(class) {
                        report.checked += 1;
                        let mut tuple2 = tuple.clone();
                        tuple2[k + j] = alt;
                        let dep2 = is_dependent_indices(space, &tuple2);
                        if dep != dep2
                            && report.violations.len() < MAX_VIOLATIONS {
                                report.violations.push(format!(
                                    "{tuple:?} vs {tuple2:?}: dependence changed"
                                ));
                            }
                    }
                }
                if !odometer(&mut suffix, count) {
                    break;
                }
            }
        }
        if !odometer(&mut prefix, count) {
            break;
        }
    }
    Ok(report)
}

/// Advance a base-`count` odometer; false when it wraps to all zeros.
pub(crate) fn odometer(digits: &mut [u32], count: u32) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d == count {
            *d = 0;
        } else {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(q: u32, n: usize) -> Space {
        Space::new(q, n).unwrap()
    }

    #[test]
    fn quotient_by_empty_flat_is_identity() {
        let s = space(2, 2);
        let qm = QuotientMap::new(&s, &s.empty_flat()).unwrap();
        assert_eq!(qm.quotient_dim(), 2);
        assert_eq!(qm.class_size(), 1);
        for p in 0..s.point_count() as u32 {
            assert_eq!(qm.class_id(p).unwrap(), p);
            assert_eq!(qm.class_rep(p).unwrap(), p);
        }
    }

    #[test]
    fn quotient_by_a_point_in_the_fano_plane() {
        // 6 remaining points fall into 3 classes of size 2: the punctured
        // lines through the removed point
        let s = space(2, 2);
        let pt = s.span_indices(&[0]);
        let qm = QuotientMap::new(&s, &pt).unwrap();
        assert_eq!(qm.quotient_dim(), 1);
        assert_eq!(qm.class_size(), 2);
        let mut sizes = std::collections::BTreeMap::new();
        for p in 1..7 {
            *sizes.entry(qm.class_id(p).unwrap()).or_insert(0u32) += 1;
        }
        assert_eq!(sizes.len(), 3);
        assert!(sizes.values().all(|&c| c == 2));
        // each class is a punctured line through the removed point
        for class in sizes.keys() {
            let members = qm.class_members(*class);
            let line = s.span_indices(&[0, members[0]]);
            assert!(members.iter().all(|&p| line.contains_point(p)));
        }
        assert_eq!(qm.class_id(0).unwrap_err(), Error::PointInFlat(0));
    }

    #[test]
    fn disjoint_flat_keeps_dimension() {
        // F ∩ S = ∅ implies dim(F/S) = dim(F)
        let s = space(2, 3);
        let line = s.span_indices(&[0, 1]);
        for pt in s.points() {
            if !line.contains_point(pt.index()) {
                let sflat = s.span_indices(&[pt.index()]);
                let qm = QuotientMap::new(&s, &sflat).unwrap();
                let img = qm.project_flat(&line);
                assert_eq!(img.dim(), line.dim());
            }
        }
    }

    #[test]
    fn class_rep_is_least_member() {
        let s = space(3, 2);
        let pt = s.span_indices(&[4]);
        let qm = QuotientMap::new(&s, &pt).unwrap();
        for p in 0..s.point_count() as u32 {
            if p == 4 {
                continue;
            }
            let rep = qm.class_rep(p).unwrap();
            let members = qm.class_members(qm.class_id(p).unwrap());
            assert_eq!(rep, *members.iter().min().unwrap());
            // the class is span(S ∪ {p}) \ S
            let line = s.span_indices(&[4, p]);
            let expect: Vec<u32> =
                line.point_indices().into_iter().filter(|&x| x != 4).collect();
            assert_eq!(members, expect);
        }
    }

    #[test]
    fn restrict_is_union_of_meeting_classes() {
        let s = space(2, 3);
        let f = s.flats_of_dim(2).unwrap()[0].clone();
        let sub = f.subflats(1).unwrap()[2].clone();
        let sflat = s.span_indices(&[f.point_indices()[0]]);
        let r = restrict(&sub, &f, &sflat).unwrap();
        // every restricted point's class meets the subflat
        let t = f.intersect(&sflat);
        let qm = QuotientMap::new(&s, &t).unwrap();
        let sub_pts = sub.point_set();
        let s_pts = sflat.point_set();
        for p in f.point_indices() {
            if s_pts.contains(p) {
                continue;
            }
            let class_meets = qm
                .class_members(qm.class_id(p).unwrap())
                .into_iter()
                .any(|x| f.contains_point(x) && !s_pts.contains(x) && sub_pts.contains(x));
            assert_eq!(r.contains(p), class_meets);
        }
    }

    #[test]
    fn lifted_functionals_are_hyperplanes_through_s() {
        let s = space(3, 3);
        let line = s.span_indices(&[1, 7]);
        let qm = QuotientMap::new(&s, &line).unwrap();
        let phi = vec![1, 2];
        let h = qm.lift_functional(&phi).unwrap();
        assert_eq!(h.dim(), 2);
        assert!(h.contains_flat(&line));
        // classes modulo a line have q^{dim+1} = 9 members each
        assert_eq!(qm.class_size(), 9);
        for c in 0..qm.quotient_space().point_count() as u32 {
            assert_eq!(qm.class_members(c).len() as u64, qm.class_size());
        }
    }

    #[test]
    fn claims_hold_on_tiny_cases() {
        let s = space(2, 2);
        assert!(check_invariance_dependence(&s, 3).unwrap().holds());
        assert!(check_intersection_size(&s).unwrap().holds());
        assert!(check_dependence_class(&s, 1, 3).unwrap().holds());
    }
}
