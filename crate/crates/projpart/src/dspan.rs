//! The hyperplane-query span game: n hidden points of F_qP^n are accessed
//! through queries x (hyperplanes); the oracle answers YES when all points
//! lie in x and otherwise names the least index outside. The solver pins
//! down each point's quotient class coordinate by coordinate through
//! hyperplanes containing everything found so far, so the answers always
//! speak about the point being located.
//!
//! A recorded trace induces the exact set of instances consistent with it,
//! a product of flat-minus-flats factors; sweeping all instances groups
//! them by trace into the leaf partition of the decision tree.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{Factor, Partition, ProductPart, VerifyMode, VerifyReport};
use crate::projgeom::{odometer_u32, Flat, QuotientMap, Space};
use rayon::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cap on exhaustive instance sweeps.
pub const SWEEP_CAP: u128 = 1_000_000;

/// An input to the game: n points of F_qP^n, repeats allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    space: Space,
    points: Vec<u32>,
}

impl Instance {
    pub fn new(space: &Space, points: Vec<u32>) -> Result<Instance> {
        if points.len() != space.n() {
            return Err(Error::WrongArity { expected: space.n(), got: points.len() });
        }
        let count = space.point_count() as u32;
        if points.iter().any(|&p| p >= count) {
            return Err(Error::AmbientMismatch);
        }
        Ok(Instance { space: space.clone(), points })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn points(&self) -> &[u32] {
        &self.points
    }
}

/// YES, or the least 1-based index of a point outside the query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleAnswer {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No(usize),
}

/// The query oracle: a pure function of (instance, query).
pub fn oracle(inst: &Instance, x: &Flat) -> Result<OracleAnswer> {
    let n = inst.space.n() as i32;
    if x.dim() != n - 1 {
        return Err(Error::BadQueryDim { dim: x.dim(), expected: n - 1 });
    }
    if !x.space().same(&inst.space) {
        return Err(Error::AmbientMismatch);
    }
    for (i, &p) in inst.points.iter().enumerate() {
        if !x.contains_point(p) {
            return Ok(OracleAnswer::No(i + 1));
        }
    }
    Ok(OracleAnswer::Yes)
}

/// Query/answer log of one solver run, ending in the confirmed output flat.
#[derive(Clone, Debug)]
pub struct DecisionTrace {
    space: Space,
    pub queries: Vec<(Flat, OracleAnswer)>,
    pub output: Flat,
}

impl DecisionTrace {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Stable byte encoding for grouping identical traces.
    pub fn key(&self) -> Vec<u8> {
        let mut key = Vec::new();
        for (flat, ans) in &self.queries {
            key.push(flat.rank() as u8);
            for i in 0..flat.rank() {
                key.extend_from_slice(flat.row(i));
            }
            key.push(match ans {
                OracleAnswer::Yes => 255,
                OracleAnswer::No(i) => *i as u8,
            });
        }
        key
    }

    /// The exact set of instances consistent with the trace, one factor per
    /// hidden point: YES intersects every factor with the query, NO(i)
    /// intersects the factors before i and punches the query out of factor
    /// i. Each factor ends up a flat minus at most `len()` flats.
    pub fn induced_part(&self) -> Result<Vec<Factor>> {
        induced_part(&self.space, &self.queries)
    }

    pub fn to_file(&self) -> TraceFile {
        TraceFile {
            queries: self
                .queries
                .iter()
                .map(|(flat, ans)| QueryFile { flat: flat.rows_nested(), answer: *ans })
                .collect(),
            output: self.output.rows_nested(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QueryFile {
    pub flat: Vec<Vec<u8>>,
    pub answer: OracleAnswer,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceFile {
    pub queries: Vec<QueryFile>,
    pub output: Vec<Vec<u8>>,
}

/// See [`DecisionTrace::induced_part`]; the empty trace induces the full
/// space in every coordinate.
pub fn induced_part(space: &Space, queries: &[(Flat, OracleAnswer)]) -> Result<Vec<Factor>> {
    let n = space.n();
    let mut bases = vec![space.full_flat(); n];
    let mut holes: Vec<Vec<Flat>> = vec![Vec::new(); n];
    for (x, ans) in queries {
        match ans {
            OracleAnswer::Yes => {
                for b in bases.iter_mut() {
                    *b = b.intersect(x);
                }
            }
            OracleAnswer::No(i) => {
                if *i < 1 || *i > n {
                    return Err(Error::InconsistentTrace);
                }
                for b in bases.iter_mut().take(i - 1) {
                    *b = b.intersect(x);
                }
                // repeated NO answers against one factor add nothing
                if !holes[i - 1].contains(x) {
                    holes[i - 1].push(x.clone());
                }
            }
        }
    }
    bases
        .into_iter()
        .zip(holes)
        .map(|(b, h)| Factor::new(b, h).map_err(|_| Error::InconsistentTrace))
        .collect()
}

/// Deterministic solver: finds an (n-1)-flat containing all hidden points
/// and confirms it with a final YES query.
///
/// For each point in index order, with S the span of the points located so
/// far, the solver reads off the point's quotient coordinates: a leading-
/// zero scan of at most dim(quotient)+1 queries, then at most q-1 queries
/// per remaining coordinate (the last candidate value is deduced). All
/// queries are hyperplanes containing S, so a NO can only name the point
/// being located or a later one — either way the answer settles membership.
/// Total queries are at most n²(q+1) + 1 including confirmation.
pub fn solve_with_oracle<F>(space: &Space, mut ask: F) -> Result<(Flat, DecisionTrace)>
where
    F: FnMut(&Flat) -> OracleAnswer,
{
    let n = space.n();
    let q = space.q();
    let f = space.spec();
    let mut queries: Vec<(Flat, OracleAnswer)> = Vec::new();
    let mut s = space.empty_flat();

    for i in 1..=n {
        let qm = QuotientMap::new(space, &s)?;
        let w_len = qm.quotient_space().n() + 1;

        // scan for the first nonzero quotient coordinate of point i
        let mut lead = None;
        for t in 0..w_len {
            let mut phi = vec![0u8; w_len];
            phi[t] = 1;
            let x = qm.lift_functional(&phi)?;
            if !query_membership(&mut ask, &mut queries, &x, i)? {
                lead = Some(t);
                break;
            }
        }
        let Some(j0) = lead else {
            // every coordinate vanished: the point already lies in S
            continue;
        };

        // remaining coordinates, one field element each; testing the
        // candidates 0..q-2 lets the last value go unqueried
        let mut w = vec![0u8; w_len];
        w[j0] = 1;
        for t in j0 + 1..w_len {
            let mut val = None;
            for c in 0..(q - 1) as u8 {
                let mut phi = vec![0u8; w_len];
                phi[t] = 1;
                phi[j0] = f.neg(c);
                let x = qm.lift_functional(&phi)?;
                if query_membership(&mut ask, &mut queries, &x, i)? {
                    val = Some(c);
                    break;
                }
            }
            w[t] = val.unwrap_or((q - 1) as u8);
        }

        let class = qm.quotient_space().index_of_normalized(&w);
        s = s.with_point(qm.rep_of_class(class));
    }

    let output = s.extend_to_hyperplane()?;
    let ans = ask(&output);
    queries.push((output.clone(), ans));
    if ans != OracleAnswer::Yes {
        return Err(Error::InconsistentTrace);
    }
    let trace = DecisionTrace { space: space.clone(), queries, output: output.clone() };
    Ok((output, trace))
}

/// Convenience wrapper running the solver against a concrete instance.
pub fn solve(inst: &Instance) -> Result<(Flat, DecisionTrace)> {
    let mut failure = None;
    let result = solve_with_oracle(&inst.space, |x| match oracle(inst, x) {
        Ok(ans) => ans,
        Err(e) => {
            failure = Some(e);
            OracleAnswer::Yes
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    result
}

/// Whether point i lies in the query x ⊇ S. YES means yes; NO(j) with j = i
/// means no and with j > i means yes; j < i cannot happen against a
/// hyperplane containing the located points.
fn query_membership<F>(
    ask: &mut F,
    queries: &mut Vec<(Flat, OracleAnswer)>,
    x: &Flat,
    i: usize,
) -> Result<bool>
where
    F: FnMut(&Flat) -> OracleAnswer,
{
    let ans = ask(x);
    queries.push((x.clone(), ans));
    match ans {
        OracleAnswer::Yes => Ok(true),
        OracleAnswer::No(j) if j == i => Ok(false),
        OracleAnswer::No(j) if j > i => Ok(true),
        OracleAnswer::No(_) => Err(Error::InconsistentTrace),
    }
}

/// Everything measured by an exhaustive sweep of the game.
#[derive(Clone, Debug)]
pub struct LeafReport {
    pub partition: Partition,
    pub leaves: usize,
    pub instances: u64,
    pub max_queries: usize,
    pub mean_queries: f64,
    /// n²(q+1) + 1, the solver's analytical ceiling.
    pub query_bound: usize,
    pub verify: VerifyReport,
    /// Every leaf part matched its group of instances exactly.
    pub induced_sets_exact: bool,
    /// Leaf factors are flats minus at most h flats, h the trace length.
    pub factor_structure_ok: bool,
    /// (leaf, factor) positions that are not almost-flats.
    pub non_almost_flat: Vec<(usize, usize)>,
    /// Structured partition floor q^{n(n+1)/2}(1 - (1/q)((q+1)/(q-2))^n)
    /// as a signed rational, defined for q ≥ 3.
    pub structured_bound: Option<(i128, u128)>,
    /// Leaf count ≥ the floor; only claimed when every factor is an
    /// almost-flat and the floor is defined.
    pub bound_holds: Option<bool>,
    /// Distribution of leaf part sizes: (tuple count, leaves of that size).
    pub leaf_sizes: Vec<(u128, usize)>,
}

/// Run the solver on every instance, group by trace, and emit the induced
/// leaf partition with its structure report.
pub fn leaf_partition(space: &Space) -> Result<LeafReport> {
    let n = space.n();
    let q = space.q();
    let count = space.point_count();
    let total = (count as u128).pow(n as u32);
    if total > SWEEP_CAP {
        return Err(Error::TooLarge { predicted: total, cap: SWEEP_CAP });
    }

    struct Leaf {
        trace: DecisionTrace,
        members: u64,
    }
    // shard the sweep by instance rank; traces merge deterministically
    // through their canonical keys
    let shards: Vec<(u64, u64)> = {
        let total = total as u64;
        let workers = (rayon::current_num_threads() as u64 * 4).max(1);
        let step = total.div_ceil(workers);
        (0..workers)
            .map(|w| (w * step, ((w + 1) * step).min(total)))
            .filter(|(lo, hi)| lo < hi)
            .collect()
    };
    let sharded: Result<Vec<_>> = shards
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut leaves: BTreeMap<Vec<u8>, Leaf> = BTreeMap::new();
            let mut max_queries = 0usize;
            let mut total_queries = 0u64;
            for rank in lo..hi {
                let mut tuple = vec![0u32; n];
                let mut rest = rank;
                for t in (0..n).rev() {
                    tuple[t] = (rest % count) as u32;
                    rest /= count;
                }
                let inst = Instance::new(space, tuple)?;
                let (_, trace) = solve(&inst)?;
                max_queries = max_queries.max(trace.len());
                total_queries += trace.len() as u64;
                leaves
                    .entry(trace.key())
                    .and_modify(|l| l.members += 1)
                    .or_insert(Leaf { trace, members: 1 });
            }
            Ok((leaves, max_queries, total_queries, hi - lo))
        })
        .collect();
    let mut leaves: BTreeMap<Vec<u8>, Leaf> = BTreeMap::new();
    let mut max_queries = 0usize;
    let mut total_queries = 0u64;
    let mut instances = 0u64;
    for (shard, shard_max, shard_queries, shard_instances) in sharded? {
        max_queries = max_queries.max(shard_max);
        total_queries += shard_queries;
        instances += shard_instances;
        for (key, leaf) in shard {
            leaves
                .entry(key)
                .and_modify(|l| l.members += leaf.members)
                .or_insert(leaf);
        }
    }

    let mut parts = Vec::with_capacity(leaves.len());
    let mut induced_sets_exact = true;
    let mut factor_structure_ok = true;
    let mut non_almost_flat = Vec::new();
    let mut sizes: BTreeMap<u128, usize> = BTreeMap::new();
    for (leaf_idx, leaf) in leaves.values().enumerate() {
        let factors = leaf.trace.induced_part()?;
        let h = leaf.trace.len();
        for (fi, fac) in factors.iter().enumerate() {
            if fac.holes().len() > h {
                factor_structure_ok = false;
            }
            if !fac.is_almost_flat() {
                non_almost_flat.push((leaf_idx, fi));
            }
        }
        let part = ProductPart::new(factors, Some(leaf.trace.output.clone()))?;
        if part.size() != leaf.members as u128 {
            induced_sets_exact = false;
        }
        *sizes.entry(part.size()).or_insert(0) += 1;
        parts.push(part);
    }
    let partition = Partition::new(space.clone(), n, parts)?;
    let verify = partition.verify(&VerifyMode::Exhaustive);

    let structured_bound = if q >= 3 {
        let qq = q as i128;
        let den = qq * (qq - 2).pow(n as u32);
        let num = qq.pow((n * (n + 1) / 2) as u32) * (den - (qq + 1).pow(n as u32));
        Some((num, den as u128))
    } else {
        None
    };
    let bound_holds = match structured_bound {
        Some((num, den)) if non_almost_flat.is_empty() => {
            Some(partition.size() as i128 * den as i128 >= num)
        }
        _ => None,
    };

    Ok(LeafReport {
        leaves: partition.size(),
        instances,
        max_queries,
        mean_queries: total_queries as f64 / instances as f64,
        query_bound: n * n * (q as usize + 1) + 1,
        verify,
        induced_sets_exact,
        factor_structure_ok,
        non_almost_flat,
        structured_bound,
        bound_holds,
        leaf_sizes: sizes.into_iter().collect(),
        partition,
    })
}

/// Query-count statistics over random instances (or the full sweep when the
/// space is small enough).
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub q: u32,
    pub n: usize,
    pub instances: u64,
    pub mean_queries: f64,
    pub max_queries: usize,
    pub query_bound: usize,
    pub mode: String,
}

pub fn bench(space: &Space, samples: u64, seed: u64) -> Result<BenchRow> {
    let n = space.n();
    let q = space.q();
    let count = space.point_count() as u32;
    let exhaustive = (count as u128).pow(n as u32) <= samples as u128;
    let mut max_queries = 0usize;
    let mut total_queries = 0u64;
    let mut instances = 0u64;
    if exhaustive {
        let mut tuple = vec![0u32; n];
        loop {
            let inst = Instance::new(space, tuple.clone())?;
            let (_, trace) = solve(&inst)?;
            instances += 1;
            max_queries = max_queries.max(trace.len());
            total_queries += trace.len() as u64;
            if !odometer_u32(&mut tuple, count) {
                break;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let tuple: Vec<u32> = (0..n).map(|_| rng.gen_range(0..count)).collect();
            let inst = Instance::new(space, tuple)?;
            let (_, trace) = solve(&inst)?;
            instances += 1;
            max_queries = max_queries.max(trace.len());
            total_queries += trace.len() as u64;
        }
    }
    Ok(BenchRow {
        q,
        n,
        instances,
        mean_queries: total_queries as f64 / instances as f64,
        max_queries,
        query_bound: n * n * (q as usize + 1) + 1,
        mode: if exhaustive { "exhaustive".into() } else { format!("sampled(seed={seed})") },
    })
}
