//! Dependent-tuple counting and the incidence machinery built on it: exact
//! enumeration with shared prefix spans, general position of line families,
//! the Sylvester–Gallai pick, the almost-line dependent-count floor, the
//! class-preserving surgery that only lowers the dependent fraction, the
//! biclique partition floor, and the almost-flat fraction pipeline.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::partition::{refine_to_minimal, split_factor, Factor, ProductPart};
use crate::pointset::PointSet;
use crate::projgeom::{is_dependent_indices, Flat, QuotientMap, Space};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tuples visited by one exact enumeration, at most.
pub const EXACT_CAP: u128 = 1_000_000_000;

/// Exact dependent/total tuple counts of a product of point sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DependentCount {
    pub dependent: u128,
    pub total: u128,
}

impl DependentCount {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.dependent as f64 / self.total as f64
        }
    }

    /// dependent/total ≥ num/den, compared exactly.
    pub fn at_least(&self, num: u128, den: u128) -> bool {
        self.dependent * den >= num * self.total
    }

    /// dependent/total ≤ num/den, compared exactly.
    pub fn at_most(&self, num: u128, den: u128) -> bool {
        self.dependent * den <= num * self.total
    }
}

/// Exact dependent-tuple count over the product of the given point sets.
/// Enumeration shares the span of each tuple prefix: a dependent prefix
/// accounts for its whole subtree without visiting it. Large products are
/// sharded over the first factor with a deterministic sum of shard counts.
pub fn count_dependent(space: &Space, factors: &[PointSet]) -> Result<DependentCount> {
    use rayon::prelude::*;
    let total: u128 = factors.iter().map(|s| s.len() as u128).product();
    if total > EXACT_CAP {
        return Err(Error::TooLargeForExact { total, cap: EXACT_CAP });
    }
    if factors.is_empty() || total == 0 {
        return Ok(DependentCount { dependent: 0, total });
    }
    let levels: Vec<Vec<Vec<u8>>> = factors
        .iter()
        .map(|s| s.iter().map(|p| space.coords_of_index(p)).collect())
        .collect();
    let k = levels.len();
    let mut suffix = vec![1u128; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] * levels[i].len() as u128;
    }
    let dependent = if total >= 1_000_000 && k > 1 {
        levels[0]
            .par_iter()
            .map(|coords| {
                // point coordinates are already normalized with leading 1
                let lead = coords.iter().position(|&c| c != 0).expect("nonzero point");
                let mut rows = vec![(lead, coords.clone())];
                let mut dep = 0u128;
                count_rec(space, &levels, &suffix, 1, &mut rows, &mut dep);
                dep
            })
            .sum()
    } else {
        let mut rows: Vec<(usize, Vec<u8>)> = Vec::with_capacity(k);
        let mut dependent = 0u128;
        count_rec(space, &levels, &suffix, 0, &mut rows, &mut dependent);
        dependent
    };
    Ok(DependentCount { dependent, total })
}

fn count_rec(
    space: &Space,
    levels: &[Vec<Vec<u8>>],
    suffix: &[u128],
    level: usize,
    rows: &mut Vec<(usize, Vec<u8>)>,
    dependent: &mut u128,
) {
    if level == levels.len() {
        return;
    }
    let f = space.spec();
    for coords in &levels[level] {
        let mut v = coords.clone();
        for (pivot, row) in rows.iter() {
            let c = v[*pivot];
            if c != 0 {
                for j in *pivot..v.len() {
                    v[j] = f.sub(v[j], f.mul(c, row[j]));
                }
            }
        }
        match v.iter().position(|&c| c != 0) {
            None => {
                // dependent prefix: every completion is dependent
                *dependent += suffix[level + 1];
            }
            Some(lead) => {
                if level + 1 < levels.len() {
                    let inv = f.inv(v[lead]);
                    for c in v.iter_mut() {
                        *c = f.mul(*c, inv);
                    }
                    let at = rows.partition_point(|(p, _)| *p < lead);
                    rows.insert(at, (lead, v));
                    count_rec(space, levels, suffix, level + 1, rows, dependent);
                    rows.remove(at);
                }
            }
        }
    }
}

/// Seeded estimate of the dependent fraction by uniform tuple sampling.
pub fn count_dependent_sampled(
    space: &Space,
    factors: &[PointSet],
    samples: u64,
    seed: u64,
) -> DependentCount {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<Vec<u32>> = factors.iter().map(|s| s.iter().collect()).collect();
    let mut tuple = vec![0u32; factors.len()];
    let mut hits = 0u128;
    for _ in 0..samples {
        for (t, pool) in tuple.iter_mut().zip(&ids) {
            *t = pool[rng.gen_range(0..pool.len())];
        }
        if is_dependent_indices(space, &tuple) {
            hits += 1;
        }
    }
    DependentCount { dependent: hits, total: samples as u128 }
}

/// No k+1 of the lines lie inside a common k-flat, for every k ∈ [n-1].
pub fn is_general_position(space: &Space, lines: &[Flat]) -> Result<bool> {
    use itertools::Itertools;
    for l in lines {
        if !l.space().same(space) {
            return Err(Error::AmbientMismatch);
        }
        if l.dim() != 1 {
            return Err(Error::BadDims(format!("expected a line, got dimension {}", l.dim())));
        }
    }
    let n = space.n();
    for k in 1..n {
        if lines.len() < k + 1 {
            break;
        }
        for subset in (0..lines.len()).combinations(k + 1) {
            let flats: Vec<Flat> = subset.iter().map(|&i| lines[i].clone()).collect();
            let joined = flats
                .iter()
                .skip(1)
                .fold(flats[0].clone(), |acc, l| acc.join(l));
            if joined.dim() <= k as i32 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Chain outcome of the Sylvester–Gallai pick: either every line joined the
/// chain, or the chain got stuck with the unused lines disjoint from it.
pub(crate) enum ChainOutcome {
    Complete(Vec<usize>),
    Stuck(Vec<usize>),
}

pub(crate) fn build_chain(lines: &[Flat]) -> ChainOutcome {
    let mut in_chain = vec![false; lines.len()];
    let mut order = vec![0usize];
    in_chain[0] = true;
    while order.len() < lines.len() {
        let next = (0..lines.len()).filter(|&i| !in_chain[i]).find(|&i| {
            order.iter().any(|&c| !lines[c].intersect(&lines[i]).is_empty())
        });
        match next {
            Some(i) => {
                in_chain[i] = true;
                order.push(i);
            }
            None => return ChainOutcome::Stuck(order),
        }
    }
    ChainOutcome::Complete(order)
}

/// A line of a general-position family meeting the others in at most two
/// points: the last line of the greedy intersection chain, recursing on the
/// chain when the rest of the family is disjoint from it.
/// Returns the line and the set of its intersection points with the others.
pub fn sylvester_line(space: &Space, lines: &[Flat]) -> Result<(Flat, Vec<u32>)> {
    if lines.is_empty() {
        return Err(Error::WrongArity { expected: 1, got: 0 });
    }
    if lines.len() > space.n() + 1 {
        return Err(Error::BadDims(format!(
            "{} lines exceed the n+1 the lemma covers",
            lines.len()
        )));
    }
    if !is_general_position(space, lines)? {
        return Err(Error::NotGeneralPosition);
    }
    let chosen = pick_line(lines);
    let mut meets = BTreeSet::new();
    for l in lines {
        if l == &chosen {
            continue;
        }
        let meet = chosen.intersect(l);
        if !meet.is_empty() {
            debug_assert_eq!(meet.dim(), 0, "distinct lines share at most one point");
            meets.insert(meet.point_indices()[0]);
        }
    }
    Ok((chosen, meets.into_iter().collect()))
}

fn pick_line(lines: &[Flat]) -> Flat {
    if lines.len() == 1 {
        return lines[0].clone();
    }
    match build_chain(lines) {
        ChainOutcome::Complete(order) => lines[*order.last().unwrap()].clone(),
        ChainOutcome::Stuck(order) => {
            let sub: Vec<Flat> = order.iter().map(|&i| lines[i].clone()).collect();
            pick_line(&sub)
        }
    }
}

/// A family of almost-lines: factors of dimension 1 with at least q points.
#[derive(Clone, Debug)]
pub struct LineFamily {
    space: Space,
    lines: Vec<Factor>,
}

impl LineFamily {
    pub fn new(space: &Space, lines: Vec<Factor>) -> Result<LineFamily> {
        if lines.len() > space.n() + 1 {
            return Err(Error::BadDims(format!(
                "{} almost-lines exceed the n+1 the lemma covers",
                lines.len()
            )));
        }
        for l in &lines {
            if !l.space().same(space) {
                return Err(Error::AmbientMismatch);
            }
            if l.dim() != 1 || !l.is_almost_flat() || (l.len() as u64) < space.q() as u64 {
                return Err(Error::BadDims("family members must be almost-lines".into()));
            }
        }
        Ok(LineFamily { space: space.clone(), lines: lines.clone() })
    }

    pub fn lines(&self) -> &[Factor] {
        &self.lines
    }

    /// All almost-lines of a space: whole lines plus every line minus one
    /// of its points.
    pub fn catalog(space: &Space) -> Result<Vec<Factor>> {
        let mut out = Vec::new();
        for line in space.flats_of_dim(1)? {
            out.push(Factor::flat(line.clone())?);
            for p in line.point_indices() {
                let hole = space.span_indices(&[p]);
                out.push(Factor::new(line.clone(), vec![hole])?);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct LinesBoundReport {
    pub dependent: u128,
    pub total: u128,
    pub bound: u128,
    pub holds: bool,
}

/// Exact dependent count of a full family of n+1 almost-lines in F_qP^n
/// against the floor (q-2)^{n-1} (q-1).
pub fn verify_lines_bound(fam: &LineFamily) -> Result<LinesBoundReport> {
    let q = fam.space.q();
    if q < 3 {
        return Err(Error::QTooSmall(q));
    }
    let n = fam.space.n();
    if fam.lines.len() != n + 1 {
        return Err(Error::WrongArity { expected: n + 1, got: fam.lines.len() });
    }
    let sets: Vec<PointSet> = fam.lines.iter().map(|l| l.points().clone()).collect();
    let count = count_dependent(&fam.space, &sets)?;
    let bound = (q as u128 - 2).pow(n as u32 - 1) * (q as u128 - 1);
    Ok(LinesBoundReport {
        dependent: count.dependent,
        total: count.total,
        bound,
        holds: count.dependent >= bound,
    })
}

/// K_{n,n} minus a perfect matching, as row bitmasks.
#[derive(Clone, Debug)]
pub struct BicliqueInstance {
    n: usize,
    adj: Vec<u32>,
}

impl BicliqueInstance {
    /// The standard instance: all edges (u_i, v_j) with i ≠ j.
    pub fn complement_of_matching(n: usize) -> BicliqueInstance {
        let full = (1u32 << n) - 1;
        let adj = (0..n).map(|i| full & !(1 << i)).collect();
        BicliqueInstance { n, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones() as usize).sum()
    }
}

/// Exact minimum number of complete bipartite graphs partitioning the edge
/// set, by branch and bound: the incumbent is the star partition, and a
/// branch dies when its count plus the real rank of the remaining adjacency
/// matrix reaches the incumbent (each biclique is a rank-1 matrix).
pub fn min_biclique_partition(inst: &BicliqueInstance) -> Result<usize> {
    let n = inst.n;
    if n > 5 {
        return Err(Error::TooLarge { predicted: n as u128, cap: 5 });
    }
    if n == 0 {
        return Ok(0);
    }
    // star partition: {u_i} × (V \ {v_i}) covers each row once
    let mut best = n;
    let mut adj = inst.adj.clone();
    branch(&mut adj, n, 0, &mut best);
    Ok(best)
}

fn branch(adj: &mut Vec<u32>, n: usize, count: usize, best: &mut usize) {
    if adj.iter().all(|&r| r == 0) {
        *best = (*best).min(count);
        return;
    }
    if count + real_rank(adj, n) >= *best {
        return;
    }
    let u = adj.iter().position(|&r| r != 0).unwrap();
    let v = adj[u].trailing_zeros() as usize;
    // rows that still carry the column v
    let col_v: u32 = (0..n).filter(|&i| adj[i] >> v & 1 == 1).fold(0, |m, i| m | 1 << i);
    let others = col_v & !(1 << u);
    let mut umask_rest = others;
    loop {
        let umask = umask_rest | 1 << u;
        // columns common to every chosen row
        let common = (0..n)
            .filter(|&i| umask >> i & 1 == 1)
            .fold((1u32 << n) - 1, |m, i| m & adj[i]);
        debug_assert!(common >> v & 1 == 1);
        let vothers = common & !(1 << v);
        let mut vmask_rest = vothers;
        loop {
            let vmask = vmask_rest | 1 << v;
            for i in 0..n {
                if umask >> i & 1 == 1 {
                    adj[i] &= !vmask;
                }
            }
            branch(adj, n, count + 1, best);
            for i in 0..n {
                if umask >> i & 1 == 1 {
                    adj[i] |= vmask;
                }
            }
            if vmask_rest == 0 {
                break;
            }
            vmask_rest = (vmask_rest - 1) & vothers;
        }
        if umask_rest == 0 {
            break;
        }
        umask_rest = (umask_rest - 1) & others;
    }
}

/// Rank over the reals of a 0/1 matrix, by fraction-free elimination.
fn real_rank(adj: &[u32], n: usize) -> usize {
    let mut m: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| (adj[i] >> j & 1) as i64).collect())
        .collect();
    let mut rank = 0;
    let mut prev = 1i64;
    for col in 0..n {
        let Some(pr) = (rank..n).find(|&i| m[i][col] != 0) else {
            continue;
        };
        m.swap(rank, pr);
        for i in rank + 1..n {
            for j in col + 1..n {
                m[i][j] = (m[i][j] * m[rank][col] - m[rank][j] * m[i][col]) / prev;
            }
            m[i][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
    }
    rank
}

/// Which replacement each non-point factor received during surgery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SurgeryChoice {
    /// R_i was a flat: P_i = R_i \ S.
    FlatMinusS,
    /// Hole classes completed: P_i = F_i \ S.
    Complete,
    /// Hole classes removed: P_i = (F_i \ S) \ (F'_i restricted to F_i/S).
    Remove,
}

#[derive(Clone, Debug)]
pub struct SurgeryOutcome {
    pub part: ProductPart,
    /// The point prefix was dependent; the part came back unchanged and its
    /// dependent fraction is 1.
    pub dependent_prefix: bool,
    pub choices: Vec<(usize, SurgeryChoice)>,
}

/// Sequentially replace each almost-flat factor of p_1 × … × p_k × R_{k+1}
/// × … × R_n so that every replacement is a union of classes modulo
/// S = span(p_1, …, p_k) and the dependent fraction never grows. Point
/// factors are the prefix; a dependent prefix short-circuits.
pub fn surgery_reduce(part: &ProductPart) -> Result<SurgeryOutcome> {
    let space = part.space().clone();
    let point_positions: Vec<usize> = part
        .factors()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.len() == 1)
        .map(|(i, _)| i)
        .collect();
    let rest_positions: Vec<usize> =
        (0..part.arity()).filter(|i| !point_positions.contains(i)).collect();
    for &i in &rest_positions {
        if !part.factors()[i].is_almost_flat() {
            return Err(Error::BadDims(format!("factor {i} is not an almost-flat")));
        }
    }
    // S empty: nothing to project out
    if point_positions.is_empty() {
        return Ok(SurgeryOutcome { part: part.clone(), dependent_prefix: false, choices: vec![] });
    }
    let prefix: Vec<u32> = point_positions
        .iter()
        .map(|&i| part.factors()[i].points().iter().next().unwrap())
        .collect();
    if is_dependent_indices(&space, &prefix) {
        return Ok(SurgeryOutcome { part: part.clone(), dependent_prefix: true, choices: vec![] });
    }
    let s = space.span_indices(&prefix);
    if s.dim() >= space.n() as i32 {
        return Err(Error::BadDims("the point prefix spans the whole space".into()));
    }

    let mut factors: Vec<Factor> = part.factors().to_vec();
    let mut choices = Vec::new();
    for &i in &rest_positions {
        let r = &factors[i];
        let base = r.span_flat();
        let replacement = match r.effective_hole() {
            None => {
                choices.push((i, SurgeryChoice::FlatMinusS));
                Factor::new(base, vec![s.clone()])?
            }
            Some(hole) => {
                let complete = Factor::new(base.clone(), vec![s.clone()])?;
                // classes of F_i/S meeting the hole are exactly the points
                // of F_i ∩ span(hole ∪ (F_i ∩ S)) outside S
                let covered = hole.join(&base.intersect(&s));
                let remove = Factor::new(base.clone(), vec![s.clone(), covered]);
                match remove {
                    Err(Error::EmptyFactor) => {
                        choices.push((i, SurgeryChoice::Complete));
                        complete
                    }
                    Err(e) => return Err(e),
                    Ok(remove) => {
                        let f_complete = current_fraction(&space, &factors, i, &complete)?;
                        let f_remove = current_fraction(&space, &factors, i, &remove)?;
                        // ties go to remove
                        if frac_lt(f_complete, f_remove) {
                            choices.push((i, SurgeryChoice::Complete));
                            complete
                        } else {
                            choices.push((i, SurgeryChoice::Remove));
                            remove
                        }
                    }
                }
            }
        };
        factors[i] = replacement;
    }
    Ok(SurgeryOutcome {
        part: ProductPart::new(factors, part.witness().cloned())?,
        dependent_prefix: false,
        choices,
    })
}

fn current_fraction(
    space: &Space,
    factors: &[Factor],
    at: usize,
    candidate: &Factor,
) -> Result<(u128, u128)> {
    let sets: Vec<PointSet> = factors
        .iter()
        .enumerate()
        .map(|(i, f)| if i == at { candidate.points().clone() } else { f.points().clone() })
        .collect();
    let c = count_dependent(space, &sets)?;
    Ok((c.dependent, c.total))
}

fn frac_lt(a: (u128, u128), b: (u128, u128)) -> bool {
    a.0 * b.1 < b.0 * a.1
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct AlmostFlatReport {
    /// Exact fraction by direct enumeration of the part.
    pub direct_dependent: u128,
    pub direct_total: u128,
    /// Worst exact fraction among the almost-line subproducts reached by
    /// refine → surgery → quotient → line split; a certified lower bound
    /// for the direct fraction.
    pub pipeline_dependent: u128,
    pub pipeline_total: u128,
    /// (q-2)^{n-1} / (q+1)^n.
    pub bound_num: u128,
    pub bound_den: u128,
    pub direct_holds: bool,
    pub pipeline_holds: bool,
}

/// The dependent-fraction floor for a product of n almost-flats in
/// F_qP^{n-1} with a non-dominated dimension pattern, checked on two routes:
/// the direct exhaustive count, and the reduction pipeline that mirrors how
/// the floor is proved.
pub fn almostflat_fraction_check(part: &ProductPart) -> Result<AlmostFlatReport> {
    let space = part.space().clone();
    let q = space.q();
    if q < 3 {
        return Err(Error::QTooSmall(q));
    }
    let n = part.arity();
    if n != space.n() + 1 {
        return Err(Error::WrongArity { expected: space.n() + 1, got: n });
    }
    if part.dimension_pattern().is_dominated() {
        return Err(Error::AlreadyDominated);
    }

    let sets: Vec<PointSet> = part.factors().iter().map(|f| f.points().clone()).collect();
    let direct = count_dependent(&space, &sets)?;

    // worst fraction over the certified chain
    let mut worst: Option<(u128, u128)> = None;
    for refined in refine_to_minimal(part)? {
        let point_positions: Vec<usize> = refined
            .factors()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.len() == 1)
            .map(|(i, _)| i)
            .collect();
        let prefix: Vec<u32> = point_positions
            .iter()
            .map(|&i| refined.factors()[i].points().iter().next().unwrap())
            .collect();
        if is_dependent_indices(&space, &prefix) {
            update_worst(&mut worst, (1, 1));
            continue;
        }
        let reduced = surgery_reduce(&refined)?;
        let s = space.span_indices(&prefix);
        let qm = QuotientMap::new(&space, &s)?;
        let qspace = qm.quotient_space().clone();
        // line pieces of each projected factor
        let mut piece_sets: Vec<Vec<PointSet>> = Vec::new();
        for (i, f) in reduced.part.factors().iter().enumerate() {
            if point_positions.contains(&i) {
                continue;
            }
            let img = qm.project_set(f.points());
            let qfactor = Factor::from_point_set(&qspace, &img)?;
            let pieces = if qfactor.dim() == 1 {
                vec![qfactor]
            } else {
                split_factor(&qfactor, 1)?
            };
            piece_sets.push(pieces.into_iter().map(|p| p.points().clone()).collect());
        }
        // every almost-line subproduct gets counted exactly
        let mut choice = vec![0usize; piece_sets.len()];
        loop {
            let lines: Vec<PointSet> =
                choice.iter().zip(&piece_sets).map(|(&c, ps)| ps[c].clone()).collect();
            let cnt = count_dependent(&qspace, &lines)?;
            update_worst(&mut worst, (cnt.dependent, cnt.total));
            let mut done = true;
            for i in 0..choice.len() {
                choice[i] += 1;
                if choice[i] < piece_sets[i].len() {
                    done = false;
                    break;
                }
                choice[i] = 0;
            }
            if done {
                break;
            }
        }
    }
    let (pd, pt) = worst.expect("refinement yields at least one part");

    let bound_num = (q as u128 - 2).pow(n as u32 - 1);
    let bound_den = (q as u128 + 1).pow(n as u32);
    Ok(AlmostFlatReport {
        direct_dependent: direct.dependent,
        direct_total: direct.total,
        pipeline_dependent: pd,
        pipeline_total: pt,
        bound_num,
        bound_den,
        direct_holds: direct.at_least(bound_num, bound_den),
        pipeline_holds: pd * bound_den >= bound_num * pt,
    })
}

fn update_worst(worst: &mut Option<(u128, u128)>, cand: (u128, u128)) {
    match worst {
        None => *worst = Some(cand),
        Some(w) => {
            if frac_lt(cand, *w) {
                *worst = Some(cand);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projgeom::restrict;

    fn space(q: u32, n: usize) -> Space {
        Space::new(q, n).unwrap()
    }

    /// Reference counter: fresh rank computation per tuple, no shared spans.
    fn naive_count(space: &Space, factors: &[PointSet]) -> DependentCount {
        let ids: Vec<Vec<u32>> = factors.iter().map(|s| s.iter().collect()).collect();
        let mut dependent = 0u128;
        let mut total = 0u128;
        let mut choice = vec![0usize; ids.len()];
        if ids.iter().any(|v| v.is_empty()) {
            return DependentCount { dependent: 0, total: 0 };
        }
        loop {
            let tuple: Vec<u32> = choice.iter().zip(&ids).map(|(&c, v)| v[c]).collect();
            total += 1;
            if is_dependent_indices(space, &tuple) {
                dependent += 1;
            }
            let mut done = true;
            for i in 0..choice.len() {
                choice[i] += 1;
                if choice[i] < ids[i].len() {
                    done = false;
                    break;
                }
                choice[i] = 0;
            }
            if done {
                break;
            }
        }
        DependentCount { dependent, total }
    }

    #[test]
    fn count_matches_naive_reference() {
        let s = space(2, 2);
        let full = s.full_point_set();
        // the full square of the Fano plane: 7 of 49 pairs dependent
        let got = count_dependent(&s, &[full.clone(), full.clone()]).unwrap();
        assert_eq!(got, DependentCount { dependent: 7, total: 49 });
        assert_eq!(got, naive_count(&s, &[full.clone(), full.clone()]));

        // assorted random-ish factor shapes
        let line = s.span_indices(&[0, 1]).point_set();
        let pair = PointSet::from_indices(7, [2, 5]);
        for factors in [
            vec![line.clone(), pair.clone(), full.clone()],
            vec![pair.clone(), pair.clone()],
            vec![full.clone(), line.clone(), line.clone(), pair.clone()],
        ] {
            assert_eq!(
                count_dependent(&s, &factors).unwrap(),
                naive_count(&s, &factors),
            );
        }
    }

    #[test]
    fn identical_lines_have_equal_pairs_dependent() {
        // two identical full lines in F_qP^1: q+1 dependent pairs
        for q in [2u32, 3, 5] {
            let s = space(q, 1);
            let full = s.full_point_set();
            let c = count_dependent(&s, &[full.clone(), full]).unwrap();
            assert_eq!(c.dependent, q as u128 + 1);
        }
    }

    #[test]
    fn dependent_count_grows_with_factors() {
        let s = space(2, 3);
        let a = PointSet::from_indices(15, [0, 1, 2, 9]);
        let b = PointSet::from_indices(15, [3, 7, 8]);
        let c = PointSet::from_indices(15, [4, 5]);
        let base = count_dependent(&s, &[a.clone(), b.clone(), c.clone()]).unwrap();
        for add in 0..15u32 {
            if !c.contains(add) {
                let mut c2 = c.clone();
                c2.insert(add);
                let bigger = count_dependent(&s, &[a.clone(), b.clone(), c2]).unwrap();
                assert!(bigger.dependent >= base.dependent);
            }
        }
    }

    #[test]
    fn fraction_bounds_hold_at_small_parameters() {
        // fraction of dependent n-tuples in (F_qP^n)^n lies within
        // [(q^{n-1}-1)/(q^{n+1}-1), 1/(q(q-1))]
        for (q, n) in [(2u32, 2usize), (3, 2), (2, 3)] {
            let s = space(q, n);
            let sets = vec![s.full_point_set(); n];
            let c = count_dependent(&s, &sets).unwrap();
            let q = q as u128;
            let lower_num = q.pow(n as u32 - 1) - 1;
            let lower_den = q.pow(n as u32 + 1) - 1;
            assert!(c.at_least(lower_num, lower_den), "lower bound at q={q} n={n}");
            assert!(c.at_most(1, q * (q - 1)), "upper bound at q={q} n={n}");
        }
    }

    #[test]
    fn sampled_counts_are_deterministic() {
        let s = space(3, 2);
        let sets = vec![s.full_point_set(); 2];
        let a = count_dependent_sampled(&s, &sets, 500, 7);
        let b = count_dependent_sampled(&s, &sets, 500, 7);
        assert_eq!(a, b);
        assert_eq!(a.total, 500);
    }

    #[test]
    fn general_position_checks() {
        let s = space(2, 2);
        let lines = s.flats_of_dim(1).unwrap();
        // in the plane, any distinct lines are in general position
        assert!(is_general_position(&s, &lines[0..3]).unwrap());
        // coincident lines are not
        assert!(!is_general_position(&s, &[lines[0].clone(), lines[0].clone()]).unwrap());

        // three lines of a common plane in P^3 violate k=2
        let s3 = space(2, 3);
        let plane = s3.flats_of_dim(2).unwrap()[0].clone();
        let sub = plane.subflats(1).unwrap();
        assert!(!is_general_position(&s3, &sub[0..3]).unwrap());
    }

    #[test]
    fn sylvester_single_line_is_itself() {
        let s = space(2, 2);
        let l = s.span_indices(&[0, 1]);
        let (chosen, meets) = sylvester_line(&s, std::slice::from_ref(&l)).unwrap();
        assert_eq!(chosen, l);
        assert!(meets.is_empty());
    }

    #[test]
    fn sylvester_three_plane_lines() {
        // three general-position lines in the plane intersect pairwise, and
        // the returned line still meets the others in at most 2 points
        let s = space(2, 2);
        let lines = s.flats_of_dim(1).unwrap();
        use itertools::Itertools;
        for combo in (0..lines.len()).combinations(3) {
            let fam: Vec<Flat> = combo.iter().map(|&i| lines[i].clone()).collect();
            let (_, meets) = sylvester_line(&s, &fam).unwrap();
            assert!(meets.len() <= 2);
        }
    }

    #[test]
    fn sylvester_rejects_degenerate_families() {
        let s = space(2, 3);
        let plane = s.flats_of_dim(2).unwrap()[0].clone();
        let sub = plane.subflats(1).unwrap();
        assert_eq!(
            sylvester_line(&s, &sub[0..3]).unwrap_err(),
            Error::NotGeneralPosition
        );
    }

    #[test]
    fn chain_spans_grow_one_dimension_per_step() {
        let s = space(2, 3);
        let lines = s.flats_of_dim(1).unwrap();
        use itertools::Itertools;
        let mut seen_complete = false;
        for combo in (0..lines.len()).combinations(4).take(2000) {
            let fam: Vec<Flat> = combo.iter().map(|&i| lines[i].clone()).collect();
            if !is_general_position(&s, &fam).unwrap() {
                continue;
            }
            if let ChainOutcome::Complete(order) = build_chain(&fam) {
                seen_complete = true;
                // dim span(l_1..l_i) = i while i ≤ n; the (n+1)-th line can
                // add nothing beyond the whole space
                let mut span = s.empty_flat();
                for (step, &i) in order.iter().enumerate() {
                    span = span.join(&fam[i]);
                    assert_eq!(span.dim(), ((step + 1).min(s.n())) as i32);
                }
            }
        }
        assert!(seen_complete);
    }

    #[test]
    fn lines_bound_tightness_on_the_projective_line() {
        // two almost-lines of F_qP^1 missing distinct points share exactly
        // q-1 points, and equal pairs are the dependent ones
        let s = space(4, 1);
        let full = s.full_flat();
        let l1 = Factor::new(full.clone(), vec![s.span_indices(&[0])]).unwrap();
        let l2 = Factor::new(full.clone(), vec![s.span_indices(&[1])]).unwrap();
        let fam = LineFamily::new(&s, vec![l1, l2]).unwrap();
        let report = verify_lines_bound(&fam).unwrap();
        assert_eq!(report.dependent, 3); // q - 1
        assert_eq!(report.bound, 3);
        assert!(report.holds);
    }

    #[test]
    fn lines_bound_rejects_small_q() {
        let s = space(2, 1);
        let full = s.full_flat();
        let fam = LineFamily::new(
            &s,
            vec![Factor::flat(full.clone()).unwrap(), Factor::flat(full).unwrap()],
        )
        .unwrap();
        assert_eq!(verify_lines_bound(&fam).unwrap_err(), Error::QTooSmall(2));
    }

    #[test]
    fn almost_line_catalog_sizes() {
        // 65 almost-lines in F_3P^2: 13 lines plus 13·4 punctured
        let s = space(3, 2);
        assert_eq!(LineFamily::catalog(&s).unwrap().len(), 65);
    }

    /// Exhaustive minimum biclique partition, no pruning: the test oracle.
    fn exhaustive_min(adj: &mut Vec<u32>, n: usize, count: usize, best: &mut usize) {
        if adj.iter().all(|&r| r == 0) {
            *best = (*best).min(count);
            return;
        }
        if count + 1 >= *best {
            return;
        }
        let u = adj.iter().position(|&r| r != 0).unwrap();
        let v = adj[u].trailing_zeros() as usize;
        let col_v: u32 =
            (0..n).filter(|&i| adj[i] >> v & 1 == 1).fold(0, |m, i| m | 1 << i);
        let others = col_v & !(1 << u);
        let mut umask_rest = others;
        loop {
            let umask = umask_rest | 1 << u;
            let common = (0..n)
                .filter(|&i| umask >> i & 1 == 1)
                .fold((1u32 << n) - 1, |m, i| m & adj[i]);
            let vothers = common & !(1 << v);
            let mut vmask_rest = vothers;
            loop {
                let vmask = vmask_rest | 1 << v;
                for i in 0..n {
                    if umask >> i & 1 == 1 {
                        adj[i] &= !vmask;
                    }
                }
                exhaustive_min(adj, n, count + 1, best);
                for i in 0..n {
                    if umask >> i & 1 == 1 {
                        adj[i] |= vmask;
                    }
                }
                if vmask_rest == 0 {
                    break;
                }
                vmask_rest = (vmask_rest - 1) & vothers;
            }
            if umask_rest == 0 {
                break;
            }
            umask_rest = (umask_rest - 1) & others;
        }
    }

    #[test]
    fn biclique_partition_minimum_is_n() {
        for n in 2..=4usize {
            let inst = BicliqueInstance::complement_of_matching(n);
            assert_eq!(inst.edge_count(), n * n - n);
            assert_eq!(min_biclique_partition(&inst).unwrap(), n);
        }
        // against the pure exhaustive oracle at n = 2, 3
        for n in 2..=3usize {
            let inst = BicliqueInstance::complement_of_matching(n);
            let mut adj = inst.adj.clone();
            let mut best = n * n; // worse than any partition into edges
            exhaustive_min(&mut adj, n, 0, &mut best);
            assert_eq!(best, n);
        }
        assert!(matches!(
            min_biclique_partition(&BicliqueInstance::complement_of_matching(6)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn real_rank_of_j_minus_i() {
        for n in 2..=5usize {
            let inst = BicliqueInstance::complement_of_matching(n);
            assert_eq!(real_rank(&inst.adj, n), n);
        }
    }

    #[test]
    fn surgery_trivial_cases() {
        let s = space(3, 2);
        // no point factors: unchanged
        let ff = Factor::flat(s.full_flat()).unwrap();
        let part = ProductPart::new(vec![ff.clone(), ff.clone(), ff.clone()], None).unwrap();
        let out = surgery_reduce(&part).unwrap();
        assert!(!out.dependent_prefix);
        assert_eq!(out.part.factors(), part.factors());

        // dependent prefix: flagged, unchanged
        let p = Factor::point(&s, 2);
        let part = ProductPart::new(vec![p.clone(), p.clone(), ff.clone()], None).unwrap();
        let out = surgery_reduce(&part).unwrap();
        assert!(out.dependent_prefix);
        assert_eq!(out.part.factors(), part.factors());
    }

    #[test]
    fn surgery_flat_case_subtracts_s() {
        let s = space(3, 2);
        let p = Factor::point(&s, 0);
        let line = s.flats_of_dim(1).unwrap()[5].clone();
        let lf = Factor::flat(line.clone()).unwrap();
        let part = ProductPart::new(vec![p, lf.clone(), lf.clone()], None).unwrap();
        let out = surgery_reduce(&part).unwrap();
        assert_eq!(out.choices, vec![(1, SurgeryChoice::FlatMinusS), (2, SurgeryChoice::FlatMinusS)]);
        let s_pt = s.span_indices(&[0]).point_set();
        for i in [1, 2] {
            let expect = line.point_set().difference(&s_pt);
            assert_eq!(out.part.factors()[i].points(), &expect);
        }
    }

    #[test]
    fn surgery_outputs_are_unions_of_classes() {
        let s = space(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = Factor::point(&s, rng.gen_range(0..13));
            let factors: Vec<Factor> = (0..2)
                .map(|_| {
                    let base = s.full_flat();
                    let hole_dim = rng.gen_range(0..2);
                    let holes = s.flats_of_dim(hole_dim).unwrap();
                    let hole = holes[rng.gen_range(0..holes.len())].clone();
                    Factor::new(base, vec![hole]).unwrap()
                })
                .collect();
            let part =
                ProductPart::new(vec![p.clone(), factors[0].clone(), factors[1].clone()], None)
                    .unwrap();
            let out = surgery_reduce(&part).unwrap();
            let sflat = s.span_indices(&[p.points().iter().next().unwrap()]);
            let qm = QuotientMap::new(&s, &sflat).unwrap();
            for i in [1usize, 2] {
                let set = out.part.factors()[i].points();
                // a union of classes: membership depends only on the class
                for x in set.iter() {
                    for member in qm.class_members(qm.class_id(x).unwrap()) {
                        assert!(set.contains(member));
                    }
                }
            }
        }
    }

    #[test]
    fn surgery_remove_matches_definitional_restrict() {
        let s = space(3, 2);
        let p = Factor::point(&s, 1);
        let base = s.full_flat();
        let hole = s.flats_of_dim(1).unwrap()[3].clone();
        let r = Factor::new(base.clone(), vec![hole.clone()]).unwrap();
        let part = ProductPart::new(vec![p, r.clone(), r.clone()], None).unwrap();
        let out = surgery_reduce(&part).unwrap();
        let sflat = s.span_indices(&[1]);
        for (pos, choice) in &out.choices {
            if *choice == SurgeryChoice::Remove {
                let got = out.part.factors()[*pos].points();
                let restricted = restrict(&hole, &base, &sflat).unwrap();
                let expect = base
                    .point_set()
                    .difference(&sflat.point_set())
                    .difference(&restricted);
                assert_eq!(got, &expect);
            }
        }
    }

    #[test]
    fn almostflat_pipeline_on_a_line_pair() {
        // two almost-lines in F_3P^1: the bound is (1/4)(1/4) = 1/16
        let s = space(3, 1);
        let full = s.full_flat();
        let l1 = Factor::new(full.clone(), vec![s.span_indices(&[0])]).unwrap();
        let l2 = Factor::new(full.clone(), vec![s.span_indices(&[2])]).unwrap();
        let part = ProductPart::new(vec![l1, l2], None).unwrap();
        let report = almostflat_fraction_check(&part).unwrap();
        assert_eq!((report.bound_num, report.bound_den), (1, 16));
        assert!(report.direct_holds && report.pipeline_holds);
        // pipeline is a lower bound for the direct fraction
        assert!(
            report.pipeline_dependent * report.direct_total
                <= report.direct_dependent * report.pipeline_total
        );
    }

    #[test]
    fn almostflat_dependent_prefix_reports_fraction_one() {
        // pattern (0,0,3,3) with two coincident point factors: every tuple
        // has a dependent sub-tuple, so both routes report fraction 1
        let s = space(3, 3);
        let p = Factor::point(&s, 5);
        let ff = Factor::flat(s.full_flat()).unwrap();
        let part =
            ProductPart::new(vec![p.clone(), p.clone(), ff.clone(), ff], None).unwrap();
        assert!(!part.dimension_pattern().is_dominated());
        let report = almostflat_fraction_check(&part).unwrap();
        assert_eq!(report.direct_dependent, report.direct_total);
        assert_eq!((report.pipeline_dependent, report.pipeline_total), (1, 1));
    }

    #[test]
    fn almostflat_bound_on_random_parts() {
        // 500 random non-dominated parts in F_3P^2: both routes clear
        // the floor every time
        let s = space(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..500 {
            let part = crate::cli::random_almostflat_part(&s, 3, &mut rng).unwrap();
            let report = almostflat_fraction_check(&part).unwrap();
            assert!(report.direct_holds, "direct fraction under the floor: {report:?}");
            assert!(report.pipeline_holds, "pipeline fraction under the floor: {report:?}");
        }
    }

    #[test]
    fn almostflat_rejects_dominated_patterns() {
        let s = space(3, 2);
        let p = Factor::point(&s, 0);
        let line = Factor::flat(s.flats_of_dim(1).unwrap()[0].clone()).unwrap();
        let ff = Factor::flat(s.full_flat()).unwrap();
        let part = ProductPart::new(vec![p, line, ff], None).unwrap();
        assert_eq!(almostflat_fraction_check(&part).unwrap_err(), Error::AlreadyDominated);
    }
}
