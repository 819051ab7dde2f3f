//! Command-line experiment harness. Every run emits one report that embeds
//! the resolved configuration, the tool version, and the provenance mode
//! (exhaustive or sampled-with-seed), so reruns with the same flags are
//! byte-identical.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::dependence::{
    almostflat_fraction_check, count_dependent, count_dependent_sampled, is_general_position,
    min_biclique_partition, surgery_reduce, sylvester_line, BicliqueInstance, LineFamily,
};
use crate::dspan;
use crate::error::{Error, Result};
use crate::gfq::FieldSpec;
use crate::partition::{
    canonicalize, construct_plane_partition, construct_power_partition, phi_profile,
    power_partition_size, square_sets, Factor, Partition, PartitionFile, ProductPart, VerifyMode,
};
use crate::pointset::PointSet;
use crate::projgeom::{
    check_dependence_class, check_intersection_size, check_invariance_dependence, count_flats,
    Space,
};

#[derive(Parser, Debug)]
#[command(name = "projpart", version, about = "Exact experiments on product partitions of finite projective spaces")]
pub struct Cli {
    /// Worker threads for parallel checks (overrides PROJPART_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Plane,
    Power,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a plane or power partition and verify it.
    Construct {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        /// Number of coordinates; defaults to n.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = Kind::Power)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        /// Part pairs to test in sampled mode.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Skip verification entirely.
        #[arg(long)]
        skip_verify: bool,
        /// Also write the partition itself to this JSON file.
        #[arg(long)]
        partition_out: Option<PathBuf>,
    },
    /// Verify a partition file.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Partition-size bounds for given parameters.
    Bounds {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Count dependent tuples of (F_qP^n)^k.
    Dependent {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check one of the combinatorial lemmas.
    Lemma {
        #[command(subcommand)]
        lemma: LemmaCmd,
    },
    /// The span game: solve an instance, sweep the leaf partition, or
    /// benchmark query counts.
    Dspan {
        #[command(subcommand)]
        cmd: DspanCmd,
    },
    /// Bounded branch-and-bound search for a minimal partition of
    /// (F_2P^2)^2, reported as a proven interval.
    Search {
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long, default_value_t = 1_000_000)]
        node_budget: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum LemmaCmd {
    /// General-position line families admit a line meeting the others in
    /// at most two points.
    Sylvester {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dependent-count floor for families of n+1 almost-lines.
    Lines {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Minimum biclique partition of K_{n,n} minus a perfect matching.
    Gp {
        #[arg(long)]
        n: usize,
    },
    /// The dependent-fraction never grows under class surgery.
    Surgery {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Dependent-fraction floor for non-dominated almost-flat products,
    /// via both the direct count and the reduction pipeline.
    Almostflat {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// The quotient-structure facts: dependence invariance, uniform class
    /// intersections, class-determined dependence.
    QuotientClaims {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
    },
    /// φ-profile floor for canonicalized plane partitions.
    Decomposition {
        #[arg(long)]
        q: u32,
    },
}

#[derive(Subcommand, Debug)]
pub enum DspanCmd {
    /// Solve one instance; points as indices "3,0,7" or coordinate vectors
    /// "1:0:0:1;0:1:2:0;...".
    Solve {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        points: String,
    },
    /// Solve every instance and report the induced leaf partition.
    Sweep {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        /// Also write the leaf partition to this JSON file.
        #[arg(long)]
        partition_out: Option<PathBuf>,
    },
    /// Query-count table over a (q, n) grid.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// One finished run: the envelope serialized as the report.
#[derive(Debug, serde::Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: Value,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub result: Value,
}

pub fn run(cli: &Cli) -> Result<Report> {
    let (config, mode, seed, result) = match &cli.command {
        Command::Construct { q, n, k, kind, mode, samples, seed, skip_verify, partition_out } => {
            cmd_construct(*q, *n, *k, *kind, *mode, *samples, *seed, *skip_verify, partition_out)?
        }
        Command::Verify { input, mode, samples, seed } => {
            cmd_verify(input, *mode, *samples, *seed)?
        }
        Command::Bounds { q, n, k } => cmd_bounds(*q, *n, *k)?,
        Command::Dependent { q, n, k, mode, samples, seed } => {
            cmd_dependent(*q, *n, *k, *mode, *samples, *seed)?
        }
        Command::Lemma { lemma } => cmd_lemma(lemma)?,
        Command::Dspan { cmd } => cmd_dspan(cmd)?,
        Command::Search { q, node_budget } => cmd_search(*q, *node_budget)?,
    };
    Ok(Report {
        tool: "projpart",
        version: env!("CARGO_PKG_VERSION"),
        config,
        mode,
        seed,
        result,
    })
}

/// Render a report in the requested format and write it out.
pub fn emit(cli: &Cli, report: &Report) -> Result<()> {
    let text = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            s
        }
        Format::Csv => render_csv(report)?,
    };
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn render_csv(report: &Report) -> Result<String> {
    // tabular commands carry a `rows` array of flat objects
    let rows = report
        .result
        .get("rows")
        .and_then(|r| r.as_array())
        .ok_or_else(|| Error::Unsupported("csv output needs a tabular result; use --format json".into()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match rows.first().and_then(|r| r.as_object()) {
        Some(obj) => obj.keys().cloned().collect(),
        None => return Err(Error::Unsupported("empty table".into())),
    };
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        let obj = row.as_object().ok_or_else(|| Error::Parse("malformed row".into()))?;
        let rec: Vec<String> = header
            .iter()
            .map(|h| match obj.get(h) {
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
                None => String::new(),
            })
            .collect();
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
        .map_err(|e| Error::Io(e.to_string()))
}

pub fn error_record(err: &Error) -> Value {
    json!({ "error": err.to_string(), "kind": error_kind(err) })
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::NotPrimePower(_) => "NotPrimePower",
        Error::Unsupported(_) => "Unsupported",
        Error::DivisionByZero => "DivisionByZero",
        Error::SpecMismatch => "SpecMismatch",
        Error::InvalidRepr { .. } => "InvalidRepr",
        Error::AmbientMismatch => "AmbientMismatch",
        Error::ZeroVector => "ZeroVector",
        Error::DimOutOfRange { .. } => "DimOutOfRange",
        Error::PointInFlat(_) => "PointInFlat",
        Error::EmptyFactor => "EmptyFactor",
        Error::TooLarge { .. } => "TooLarge",
        Error::TooLargeForExact { .. } => "TooLargeForExact",
        Error::WrongArity { .. } => "WrongArity",
        Error::NotAPartition(_) => "NotAPartition",
        Error::BadDims(_) => "BadDims",
        Error::AlreadyDominated => "AlreadyDominated",
        Error::QTooSmall(_) => "QTooSmall",
        Error::NotGeneralPosition => "NotGeneralPosition",
        Error::BadQueryDim { .. } => "BadQueryDim",
        Error::InconsistentTrace => "InconsistentTrace",
        Error::Overflow => "Overflow",
        Error::Io(_) => "Io",
        Error::Parse(_) => "Parse",
    }
}

type CmdOut = (Value, String, Option<u64>, Value);

fn verify_mode(mode: Mode, samples: Option<u64>, seed: Option<u64>) -> Result<VerifyMode> {
    match mode {
        Mode::Exhaustive => Ok(VerifyMode::Exhaustive),
        Mode::Sampled => {
            let seed = seed.ok_or_else(|| Error::Parse("sampled mode requires --seed".into()))?;
            Ok(VerifyMode::Sampled { pairs: samples.unwrap_or(1_000_000), seed })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_construct(
    q: u32,
    n: usize,
    k: Option<usize>,
    kind: Kind,
    mode: Mode,
    samples: Option<u64>,
    seed: Option<u64>,
    skip_verify: bool,
    partition_out: &Option<PathBuf>,
) -> Result<CmdOut> {
    let k = k.unwrap_or(n);
    let (partition, expected): (Partition, u128) = match kind {
        Kind::Plane => {
            if n != 2 || k != 2 {
                return Err(Error::Unsupported("the plane construction needs n = k = 2".into()));
            }
            let p = construct_plane_partition(q)?;
            let q = q as u128;
            (p, (q * q + q + 1) * (q + 1))
        }
        Kind::Power => (construct_power_partition(q, n, k)?, power_partition_size(q, n, k)?),
    };
    if let Some(path) = partition_out {
        let file = partition.to_file();
        std::fs::write(path, serde_json::to_string(&file)?)?;
    }
    let vmode = verify_mode(mode, samples, seed)?;
    let verify = if skip_verify { None } else { Some(partition.verify(&vmode)) };
    let mode_str = if skip_verify { "construct-only".to_string() } else { verify.as_ref().unwrap().mode.clone() };
    let config = json!({
        "command": "construct", "q": q, "n": n, "k": k,
        "kind": format!("{kind:?}").to_lowercase(),
        "skip_verify": skip_verify,
    });
    let rows = vec![json!({
        "q": q, "n": n, "k": k,
        "size": partition.size(),
        "expected_size": expected.to_string(),
        "size_matches": partition.size() as u128 == expected,
        "verify_pass": verify.as_ref().map(|v| v.all_pass()),
    })];
    let result = json!({
        "size": partition.size(),
        "expected_size": expected.to_string(),
        "size_matches": partition.size() as u128 == expected,
        "verify": verify,
        "rows": rows,
    });
    Ok((config, mode_str, seed, result))
}

fn cmd_verify(input: &PathBuf, mode: Mode, samples: Option<u64>, seed: Option<u64>) -> Result<CmdOut> {
    let text = std::fs::read_to_string(input)?;
    let file: PartitionFile = serde_json::from_str(&text)?;
    let partition = Partition::from_file(&file)?;
    let vmode = verify_mode(mode, samples, seed)?;
    let report = partition.verify(&vmode);
    let config = json!({
        "command": "verify", "input": input.display().to_string(),
        "q": file.q, "n": file.n, "k": file.k,
    });
    let mode_str = report.mode.clone();
    let result = serde_json::to_value(&report)?;
    Ok((config, mode_str, seed, result))
}

fn cmd_bounds(q: u32, n: usize, k: Option<usize>) -> Result<CmdOut> {
    let k = k.unwrap_or(n);
    if k < 1 || k > n {
        return Err(Error::DimOutOfRange { dim: k as i32, ambient: n as i32 });
    }
    let field = FieldSpec::new(q)?;
    let qq = q as u128;
    let points = (qq.pow(n as u32 + 1) - 1) / (qq - 1);
    let trivial_upper = points.checked_pow(k as u32).ok_or(Error::Overflow)?;
    // volume floor: ((q^{n+1}-1)/(q^k-1))^k, rounded up
    let vol_num = (qq.pow(n as u32 + 1) - 1).checked_pow(k as u32).ok_or(Error::Overflow)?;
    let vol_den = (qq.pow(k as u32) - 1).checked_pow(k as u32).ok_or(Error::Overflow)?;
    let volume_lower = vol_num.div_ceil(vol_den);
    let construction = power_partition_size(q, n, k)?;
    let flats = count_flats(q, n as i32, k as i32 - 1)?;

    let mut result = json!({
        "field": { "p": field.p(), "m": field.m(), "poly": field.poly() },
        "space_points": points.to_string(),
        "tuple_total": trivial_upper.to_string(),
        "trivial_upper": trivial_upper.to_string(),
        "volume_lower": volume_lower.to_string(),
        "construction_size": construction.to_string(),
        "covering_flats": flats.to_string(),
    });
    let obj = result.as_object_mut().unwrap();
    if k == n && q as usize >= 2 * n {
        // q^{n(n+1)/2} (1 + 2n/q) = q^{n(n+1)/2} (q + 2n) / q
        let cap_num = qq.pow((n * (n + 1) / 2) as u32) * (qq + 2 * n as u128);
        obj.insert(
            "construction_cap".into(),
            json!({ "num": cap_num.to_string(), "den": q.to_string(),
                    "holds": construction * qq <= cap_num }),
        );
    }
    if k == n && q >= 3 {
        // q^{n(n+1)/2} (1 - (1/q)((q+1)/(q-2))^n), signed rational
        let qi = q as i128;
        let den = qi * (qi - 2).pow(n as u32);
        let num = qi.pow((n * (n + 1) / 2) as u32) * (den - (qi + 1).pow(n as u32));
        obj.insert(
            "structured_lower".into(),
            json!({ "num": num.to_string(), "den": den.to_string(),
                    "vacuous": num <= 0 }),
        );
    }
    let rows = vec![result.clone()];
    result.as_object_mut().unwrap().insert("rows".into(), json!(rows));
    let config = json!({ "command": "bounds", "q": q, "n": n, "k": k });
    Ok((config, "exact".into(), None, result))
}

fn cmd_dependent(
    q: u32,
    n: usize,
    k: Option<usize>,
    mode: Mode,
    samples: Option<u64>,
    seed: Option<u64>,
) -> Result<CmdOut> {
    let k = k.unwrap_or(n);
    let space = Space::new(q, n)?;
    let sets = vec![space.full_point_set(); k];
    let (count, mode_str) = match mode {
        Mode::Exhaustive => (count_dependent(&space, &sets)?, "exhaustive".to_string()),
        Mode::Sampled => {
            let seed = seed.ok_or_else(|| Error::Parse("sampled mode requires --seed".into()))?;
            let samples = samples.unwrap_or(1_000_000);
            (
                count_dependent_sampled(&space, &sets, samples, seed),
                format!("sampled({samples},seed={seed})"),
            )
        }
    };
    let qq = q as u128;
    let mut result = json!({
        "dependent": count.dependent.to_string(),
        "total": count.total.to_string(),
        "fraction": count.fraction(),
    });
    if k == n {
        let lower_num = qq.pow(n as u32 - 1) - 1;
        let lower_den = qq.pow(n as u32 + 1) - 1;
        let obj = result.as_object_mut().unwrap();
        obj.insert(
            "lower".into(),
            json!({ "num": lower_num.to_string(), "den": lower_den.to_string(),
                    "holds": count.at_least(lower_num, lower_den) }),
        );
        obj.insert(
            "upper".into(),
            json!({ "num": "1", "den": (qq * (qq - 1)).to_string(),
                    "holds": count.at_most(1, qq * (qq - 1)) }),
        );
    }
    let rows = vec![result.clone()];
    result.as_object_mut().unwrap().insert("rows".into(), json!(rows));
    let config = json!({ "command": "dependent", "q": q, "n": n, "k": k });
    Ok((config, mode_str, seed, result))
}

fn cmd_lemma(lemma: &LemmaCmd) -> Result<CmdOut> {
    match lemma {
        LemmaCmd::Sylvester { q, n, samples, seed } => lemma_sylvester(*q, *n, *samples, *seed),
        LemmaCmd::Lines { q, n, samples, seed } => lemma_lines(*q, *n, *samples, *seed),
        LemmaCmd::Gp { n } => {
            let inst = BicliqueInstance::complement_of_matching(*n);
            let minimum = min_biclique_partition(&inst)?;
            Ok((
                json!({ "command": "lemma gp", "n": n }),
                "exhaustive".into(),
                None,
                json!({ "n": n, "edges": inst.edge_count(), "minimum": minimum,
                        "holds": minimum == *n }),
            ))
        }
        LemmaCmd::Surgery { q, n, count, seed } => lemma_surgery(*q, *n, *count, *seed),
        LemmaCmd::Almostflat { q, n, samples, seed } => lemma_almostflat(*q, *n, *samples, *seed),
        LemmaCmd::QuotientClaims { q, n } => lemma_quotient_claims(*q, *n),
        LemmaCmd::Decomposition { q } => lemma_decomposition(*q),
    }
}

fn lemma_sylvester(q: u32, n: usize, samples: Option<u64>, seed: Option<u64>) -> Result<CmdOut> {
    let space = Space::new(q, n)?;
    let lines = space.flats_of_dim(1)?;
    // families are subsets of distinct lines of size 2..=n+1
    let mut family_total: u128 = 0;
    for m in 2..=(n + 1).min(lines.len()) {
        family_total += binomial(lines.len() as u128, m as u128);
    }
    let exhaustive = family_total <= 2_000_000;

    let mut checked = 0u64;
    let mut gp_families = 0u64;
    let mut max_meets = 0usize;
    let mut check = |fam: &[crate::projgeom::Flat]| -> Result<()> {
        checked += 1;
        if is_general_position(&space, fam)? {
            gp_families += 1;
            let (_, meets) = sylvester_line(&space, fam)?;
            max_meets = max_meets.max(meets.len());
        }
        Ok(())
    };
    let mode_str;
    if exhaustive {
        use itertools::Itertools;
        for m in 2..=(n + 1).min(lines.len()) {
            for combo in (0..lines.len()).combinations(m) {
                let fam: Vec<_> = combo.iter().map(|&i| lines[i].clone()).collect();
                check(&fam)?;
            }
        }
        mode_str = "exhaustive".to_string();
    } else {
        let seed = seed.ok_or_else(|| Error::Parse("family space too large; use --samples and --seed".into()))?;
        let samples = samples.unwrap_or(100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let m = rng.gen_range(2..=(n + 1).min(lines.len()));
            let mut picked = BTreeSet::new();
            while picked.len() < m {
                picked.insert(rng.gen_range(0..lines.len()));
            }
            let fam: Vec<_> = picked.iter().map(|&i| lines[i].clone()).collect();
            check(&fam)?;
        }
        mode_str = format!("sampled({samples},seed={seed})");
    }
    let config = json!({ "command": "lemma sylvester", "q": q, "n": n });
    let result = json!({
        "families_checked": checked,
        "general_position_families": gp_families,
        "max_intersection_points": max_meets,
        "holds": max_meets <= 2,
    });
    Ok((config, mode_str, seed, result))
}

fn lemma_lines(q: u32, n: usize, samples: Option<u64>, seed: Option<u64>) -> Result<CmdOut> {
    if q < 3 {
        return Err(Error::QTooSmall(q));
    }
    let space = Space::new(q, n)?;
    let catalog = LineFamily::catalog(&space)?;
    let fam_size = n + 1;
    let family_total = binomial(
        catalog.len() as u128 + fam_size as u128 - 1,
        fam_size as u128,
    );
    let exhaustive = family_total <= 500_000;
    let bound = (q as u128 - 2).pow(n as u32 - 1) * (q as u128 - 1);

    let mut min_dependent: Option<u128> = None;
    let mut checked = 0u64;
    let mut check = |members: &[usize]| -> Result<()> {
        let sets: Vec<PointSet> =
            members.iter().map(|&i| catalog[i].points().clone()).collect();
        let c = count_dependent(&space, &sets)?;
        checked += 1;
        min_dependent = Some(min_dependent.map_or(c.dependent, |m| m.min(c.dependent)));
        Ok(())
    };
    let mode_str;
    if exhaustive {
        use itertools::Itertools;
        for combo in (0..catalog.len()).combinations_with_replacement(fam_size) {
            check(&combo)?;
        }
        mode_str = "exhaustive".to_string();
    } else {
        let seed = seed.ok_or_else(|| Error::Parse("family space too large; use --samples and --seed".into()))?;
        let samples = samples.unwrap_or(100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // adversarial shapes first: coincident families and families of
        // lines concurrent through one point
        let mut trials: Vec<Vec<usize>> = Vec::new();
        for i in 0..catalog.len().min(64) {
            trials.push(vec![i; fam_size]);
        }
        for p in 0..space.point_count().min(32) as u32 {
            let through: Vec<usize> = (0..catalog.len())
                .filter(|&i| catalog[i].points().contains(p))
                .collect();
            if through.len() >= fam_size {
                for start in 0..through.len().min(8) {
                    let fam: Vec<usize> =
                        through.iter().cycle().skip(start).take(fam_size).copied().collect();
                    trials.push(fam);
                }
            }
        }
        for _ in 0..samples {
            trials.push((0..fam_size).map(|_| rng.gen_range(0..catalog.len())).collect());
        }
        for t in &trials {
            check(t)?;
        }
        mode_str = format!("sampled({samples},seed={seed})");
    }
    let min_dependent = min_dependent.unwrap();
    let config = json!({ "command": "lemma lines", "q": q, "n": n });
    let result = json!({
        "families_checked": checked,
        "min_dependent": min_dependent.to_string(),
        "bound": bound.to_string(),
        "holds": min_dependent >= bound,
    });
    Ok((config, mode_str, seed, result))
}

/// Random parts p_1 × … × p_k × R_{k+1} × … × R_n in F_qP^{n-1} with
/// independent point prefixes and almost-flat tails of dimension k+1.
pub fn random_surgery_part(space: &Space, n: usize, rng: &mut ChaCha8Rng) -> Result<ProductPart> {
    let count = space.point_count() as u32;
    let k = if n >= 3 { rng.gen_range(1..=n - 2) } else { 1 };
    let prefix: Vec<u32> = loop {
        let cand: Vec<u32> = (0..k).map(|_| rng.gen_range(0..count)).collect();
        if !crate::projgeom::is_dependent_indices(space, &cand) {
            break cand;
        }
    };
    let rdim = k as i32 + 1;
    let rflats = space.flats_of_dim(rdim)?;
    let mut factors: Vec<Factor> = prefix.iter().map(|&p| Factor::point(space, p)).collect();
    for _ in k..n {
        let base = rflats[rng.gen_range(0..rflats.len())].clone();
        let factor = if rng.gen_bool(0.5) {
            Factor::flat(base)?
        } else {
            let hole_dim = rng.gen_range(0..rdim);
            let holes = base.subflats(hole_dim)?;
            let hole = holes[rng.gen_range(0..holes.len())].clone();
            Factor::new(base, vec![hole])?
        };
        factors.push(factor);
    }
    ProductPart::new(factors, None)
}

fn lemma_surgery(q: u32, n: usize, count: u64, seed: u64) -> Result<CmdOut> {
    if n < 3 {
        return Err(Error::DimOutOfRange { dim: n as i32, ambient: 3 });
    }
    let space = Space::new(q, n - 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0u64;
    let mut short_circuits = 0u64;
    for _ in 0..count {
        let part = random_surgery_part(&space, n, &mut rng)?;
        let before_sets: Vec<PointSet> =
            part.factors().iter().map(|f| f.points().clone()).collect();
        let before = count_dependent(&space, &before_sets)?;
        let out = surgery_reduce(&part)?;
        if out.dependent_prefix {
            short_circuits += 1;
            continue;
        }
        let after_sets: Vec<PointSet> =
            out.part.factors().iter().map(|f| f.points().clone()).collect();
        let after = count_dependent(&space, &after_sets)?;
        // f(Q') ≤ f(Q), compared exactly
        if after.dependent * before.total > before.dependent * after.total {
            violations += 1;
        }
    }
    let config = json!({ "command": "lemma surgery", "q": q, "n": n, "count": count });
    let result = json!({
        "instances": count,
        "short_circuits": short_circuits,
        "violations": violations,
        "holds": violations == 0,
    });
    Ok((config, format!("sampled({count},seed={seed})"), Some(seed), result))
}

/// Random non-dominated products of almost-flats in F_qP^{n-1}.
pub fn random_almostflat_part(
    space: &Space,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ProductPart> {
    let max_dim = space.n() as i32;
    loop {
        let mut factors = Vec::with_capacity(n);
        for _ in 0..n {
            let d = rng.gen_range(0..=max_dim);
            let flats = space.flats_of_dim(d)?;
            let base = flats[rng.gen_range(0..flats.len())].clone();
            let factor = if d == 0 || rng.gen_bool(0.5) {
                Factor::flat(base)?
            } else {
                let hole_dim = rng.gen_range(0..d);
                let holes = base.subflats(hole_dim)?;
                let hole = holes[rng.gen_range(0..holes.len())].clone();
                Factor::new(base, vec![hole])?
            };
            factors.push(factor);
        }
        let part = ProductPart::new(factors, None)?;
        if !part.dimension_pattern().is_dominated() {
            return Ok(part);
        }
    }
}

fn lemma_almostflat(q: u32, n: usize, samples: u64, seed: u64) -> Result<CmdOut> {
    if q < 3 {
        return Err(Error::QTooSmall(q));
    }
    if n < 2 {
        return Err(Error::DimOutOfRange { dim: n as i32, ambient: 2 });
    }
    let space = Space::new(q, n - 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut direct_failures = 0u64;
    let mut pipeline_failures = 0u64;
    for _ in 0..samples {
        let part = random_almostflat_part(&space, n, &mut rng)?;
        let report = almostflat_fraction_check(&part)?;
        if !report.direct_holds {
            direct_failures += 1;
        }
        if !report.pipeline_holds {
            pipeline_failures += 1;
        }
    }
    let config = json!({ "command": "lemma almostflat", "q": q, "n": n, "samples": samples });
    let result = json!({
        "samples": samples,
        "direct_failures": direct_failures,
        "pipeline_failures": pipeline_failures,
        "holds": direct_failures == 0 && pipeline_failures == 0,
    });
    Ok((config, format!("sampled({samples},seed={seed})"), Some(seed), result))
}

fn lemma_quotient_claims(q: u32, n: usize) -> Result<CmdOut> {
    let space = Space::new(q, n)?;
    let invariance = check_invariance_dependence(&space, 3)?;
    let intersection = check_intersection_size(&space)?;
    let class_dep = check_dependence_class(&space, 1, 3)?;
    let class_dep2 = check_dependence_class(&space, 2, 4)?;
    let config = json!({ "command": "lemma quotient-claims", "q": q, "n": n });
    let all: Vec<String> = invariance
        .violations
        .iter()
        .chain(&intersection.violations)
        .chain(&class_dep.violations)
        .chain(&class_dep2.violations)
        .cloned()
        .collect();
    let result = json!({
        "invariance": { "checked": invariance.checked, "holds": invariance.holds() },
        "intersection_size": { "checked": intersection.checked, "holds": intersection.holds() },
        "class_dependence": {
            "checked": class_dep.checked + class_dep2.checked,
            "holds": class_dep.holds() && class_dep2.holds(),
        },
        "violations": all,
    });
    Ok((config, "exhaustive".into(), None, result))
}

fn lemma_decomposition(q: u32) -> Result<CmdOut> {
    let plane = construct_plane_partition(q)?;
    let canonical = canonicalize(&plane)?;
    let space = canonical.space().clone();
    let squares = square_sets(&canonical);
    let profile = phi_profile(&space, &squares)?;
    let config = json!({ "command": "lemma decomposition", "q": q });
    let result = json!({
        "square_parts": squares.len(),
        "phi_sum": profile.sum,
        "bound": profile.bound,
        "holds": profile.holds,
    });
    Ok((config, "exhaustive".into(), None, result))
}

fn cmd_dspan(cmd: &DspanCmd) -> Result<CmdOut> {
    match cmd {
        DspanCmd::Solve { q, n, points } => {
            let space = Space::new(*q, *n)?;
            let ids = parse_points(&space, points)?;
            let inst = dspan::Instance::new(&space, ids.clone())?;
            let (output, trace) = dspan::solve(&inst)?;
            let config = json!({ "command": "dspan solve", "q": q, "n": n,
                                  "points": ids });
            let result = json!({
                "output": output.rows_nested(),
                "queries": trace.len(),
                "query_bound": n * n * (*q as usize + 1) + 1,
                "trace": trace.to_file(),
            });
            Ok((config, "exact".into(), None, result))
        }
        DspanCmd::Sweep { q, n, partition_out } => {
            let space = Space::new(*q, *n)?;
            let report = dspan::leaf_partition(&space)?;
            if let Some(path) = partition_out {
                std::fs::write(path, serde_json::to_string(&report.partition.to_file())?)?;
            }
            let config = json!({ "command": "dspan sweep", "q": q, "n": n });
            let result = json!({
                "instances": report.instances,
                "leaves": report.leaves,
                "max_queries": report.max_queries,
                "mean_queries": report.mean_queries,
                "query_bound": report.query_bound,
                "verify": report.verify,
                "induced_sets_exact": report.induced_sets_exact,
                "factor_structure_ok": report.factor_structure_ok,
                "non_almost_flat_factors": report.non_almost_flat.len(),
                "structured_bound": report.structured_bound.map(|(num, den)| {
                    json!({ "num": num.to_string(), "den": den.to_string() })
                }),
                "bound_holds": report.bound_holds,
                "leaf_sizes": report
                    .leaf_sizes
                    .iter()
                    .map(|(s, c)| json!({ "size": s.to_string(), "leaves": c }))
                    .collect::<Vec<_>>(),
            });
            Ok((config, "exhaustive".into(), None, result))
        }
        DspanCmd::Bench { q, n, samples, seed } => {
            let mut rows = Vec::new();
            for &qi in q {
                for &ni in n {
                    let space = Space::new(qi, ni)?;
                    let row = dspan::bench(&space, *samples, *seed)?;
                    rows.push(json!({
                        "q": row.q, "n": row.n, "instances": row.instances,
                        "mean_queries": row.mean_queries,
                        "max_queries": row.max_queries,
                        "bound": row.query_bound,
                        "mode": row.mode,
                    }));
                }
            }
            let config = json!({ "command": "dspan bench", "q": q, "n": n, "samples": samples });
            let result = json!({ "rows": rows });
            Ok((config, format!("sampled({samples},seed={seed})"), Some(*seed), result))
        }
    }
}

fn parse_points(space: &Space, text: &str) -> Result<Vec<u32>> {
    if text.contains(':') {
        text.split(';')
            .map(|tok| {
                let coords: Vec<u8> = tok
                    .split(':')
                    .map(|c| c.trim().parse::<u8>().map_err(|e| Error::Parse(e.to_string())))
                    .collect::<Result<_>>()?;
                Ok(space.point_from_coords(&coords)?.index())
            })
            .collect()
    } else {
        text.split(',')
            .map(|tok| tok.trim().parse::<u32>().map_err(|e| Error::Parse(e.to_string())))
            .collect()
    }
}

/// Minimal-partition search state for (F_2P^2)^2: 49 tuples as one u64 mask.
fn cmd_search(q: u32, node_budget: u64) -> Result<CmdOut> {
    if q != 2 {
        return Err(Error::Unsupported("the bounded search is wired for q = 2, k = n = 2".into()));
    }
    let space = Space::new(2, 2)?;
    let lines = space.flats_of_dim(1)?;
    let points = space.point_count() as usize; // 7

    // candidate parts: A × B with A, B nonempty subsets of a common line
    struct Cand {
        mask: u64,
    }
    let mut cands: Vec<Cand> = Vec::new();
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); points * points];
    for line in &lines {
        let pts: Vec<u32> = line.point_indices();
        let m = pts.len();
        for asel in 1u32..(1 << m) {
            for bsel in 1u32..(1 << m) {
                let mut mask = 0u64;
                for (i, &a) in pts.iter().enumerate() {
                    if asel >> i & 1 == 0 {
                        continue;
                    }
                    for (j, &b) in pts.iter().enumerate() {
                        if bsel >> j & 1 == 1 {
                            mask |= 1u64 << (a as usize * points + b as usize);
                        }
                    }
                }
                let id = cands.len();
                cands.push(Cand { mask });
                for bit in 0..points * points {
                    if mask >> bit & 1 == 1 {
                        containing[bit].push(id);
                    }
                }
            }
        }
    }

    let full: u64 = (1u128 << (points * points)) as u64 - 1;
    let max_part = 9u32; // 3 × 3, a full line squared
    let volume_lower = (points * points).div_ceil(max_part as usize);

    // incumbent: the plane construction
    let mut best = construct_plane_partition(2)?.size();
    let mut nodes = 0u64;
    let mut budget_hit = false;
    fn dfs(
        covered: u64,
        count: usize,
        full: u64,
        max_part: u32,
        cands: &[Cand],
        containing: &[Vec<usize>],
        best: &mut usize,
        nodes: &mut u64,
        budget: u64,
        budget_hit: &mut bool,
    ) {
        if covered == full {
            *best = (*best).min(count);
            return;
        }
        if *budget_hit {
            return;
        }
        *nodes += 1;
        if *nodes > budget {
            *budget_hit = true;
            return;
        }
        let remaining = (full & !covered).count_ones();
        if count + remaining.div_ceil(max_part) as usize >= *best {
            return;
        }
        let bit = (full & !covered).trailing_zeros() as usize;
        for &c in &containing[bit] {
            if cands[c].mask & covered == 0 {
                dfs(
                    covered | cands[c].mask,
                    count + 1,
                    full,
                    max_part,
                    cands,
                    containing,
                    best,
                    nodes,
                    budget,
                    budget_hit,
                );
            }
        }
    }
    dfs(0, 0, full, max_part, &cands, &containing, &mut best, &mut nodes, node_budget, &mut budget_hit);

    let proven_lower = if budget_hit { volume_lower } else { best };
    let config = json!({ "command": "search", "q": q, "n": 2, "k": 2,
                          "node_budget": node_budget });
    let result = json!({
        "candidates": cands.len(),
        "volume_lower": volume_lower,
        "best_found": best,
        "nodes_explored": nodes,
        "budget_exhausted": budget_hit,
        "interval": [proven_lower, best],
    });
    Ok((config, "search".into(), None, result))
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}
