//! Benchmark instances, relative-deviation tables and the Friedman statistic.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Time};
use crate::solver::{self, Preset, SolveOutcome, SolverParams, Variant};

pub const RESULTS_HEADER: &str = "instance_id,algorithm,run,seed,cm_max,ca_max,elapsed_ms";
pub const AGGREGATE_HEADER: &str = "group,level,algorithm,bRPD,aRPD";
pub const FRIEDMAN_HEADER: &str = "algorithm,avg_rank";

/// Registered algorithm names.
pub const ALGORITHMS: [&str; 5] = ["hcce", "hcce-nols", "hcce-noco", "random", "greedy-l1"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub jobs: usize,
    pub factories: usize,
    pub machines: usize,
    pub products: usize,
    pub job_time_range: (Time, Time),
    pub asm_time_range: (Time, Time),
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(jobs: usize, factories: usize, machines: usize, products: usize, seed: u64) -> Self {
        Self {
            jobs,
            factories,
            machines,
            products,
            job_time_range: (1, 99),
            asm_time_range: (1, 50),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.jobs == 0 || self.factories == 0 || self.machines == 0 || self.products == 0 {
            return Err(Error::InvalidInstance("all scale values must be positive".into()));
        }
        if self.jobs < self.products {
            return Err(Error::InvalidInstance(format!(
                "{} jobs cannot fill {} products",
                self.jobs, self.products
            )));
        }
        for (lo, hi) in [self.job_time_range, self.asm_time_range] {
            if lo < 1 || hi < lo {
                return Err(Error::InvalidInstance(format!("bad time range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

pub fn generate_instance(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.job_time_range;
    let processing: Vec<Vec<Time>> = (0..cfg.jobs)
        .map(|_| (0..cfg.machines).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect();
    let (lo, hi) = cfg.asm_time_range;
    let assembly: Vec<Time> = (0..cfg.products).map(|_| rng.gen_range(lo..=hi)).collect();

    let mut plan = vec![Vec::new(); cfg.products];
    for job in 0..cfg.jobs {
        plan[rng.gen_range(0..cfg.products)].push(job);
    }
    while let Some(empty) = plan.iter().position(Vec::is_empty) {
        // Largest product, lowest id on ties; it gives up its last job.
        let donor = (0..cfg.products).max_by_key(|&q| (plan[q].len(), std::cmp::Reverse(q))).unwrap();
        let job = plan[donor].pop().unwrap();
        plan[empty].push(job);
    }
    for members in &mut plan {
        members.sort_unstable();
    }

    let largest = plan.iter().map(Vec::len).max().unwrap();
    let upper = (3 * largest).div_ceil(2);
    let buffer = rng.gen_range(largest..=upper);
    Instance::new(cfg.factories, processing, assembly, plan, buffer)
}

/// Instance size class with its scale grid and time multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Small,
    Medium,
    Large,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Suite::Small),
            "medium" => Ok(Suite::Medium),
            "large" => Ok(Suite::Large),
            other => Err(Error::InvalidParams(format!("unknown suite `{other}`"))),
        }
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Small => "small",
            Suite::Medium => "medium",
            Suite::Large => "large",
        }
    }

    pub fn preset(self) -> Preset {
        match self {
            Suite::Small => Preset::Small,
            Suite::Medium => Preset::Medium,
            Suite::Large => Preset::Large,
        }
    }

    /// Milliseconds per unit of u×f×m×l.
    pub fn multiplier(self) -> u64 {
        match self {
            Suite::Small => 120,
            Suite::Medium => 50,
            Suite::Large => 20,
        }
    }

    /// Levels of u, f, m and l.
    pub fn grid(self) -> [&'static [usize]; 4] {
        match self {
            Suite::Small => [&[10, 16, 24], &[2, 3], &[2, 4, 6], &[2, 4]],
            Suite::Medium => [&[30, 40, 50], &[4, 6], &[8, 10, 12], &[6, 8]],
            Suite::Large => [&[80, 100, 120], &[8, 10], &[16, 18, 20], &[10, 16]],
        }
    }

    /// Size class of an instance by its job count.
    pub fn classify(jobs: usize) -> Suite {
        match jobs {
            0..=24 => Suite::Small,
            25..=79 => Suite::Medium,
            _ => Suite::Large,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Suite::Small => "S",
            Suite::Medium => "M",
            Suite::Large => "L",
        }
    }
}

/// Time budget for one run: multiplier × u×f×m×l milliseconds.
pub fn budget_ms(suite: Suite, inst: &Instance) -> u64 {
    suite.multiplier() * (inst.jobs() * inst.factories() * inst.machines() * inst.products()) as u64
}

pub fn instance_id(suite: Suite, jobs: usize, factories: usize, machines: usize, products: usize, case: usize) -> String {
    format!("{}_{jobs}x{factories}x{machines}x{products}_{case}", suite.tag())
}

/// Inverse of [`instance_id`].
pub fn parse_instance_id(id: &str) -> Option<(Suite, [usize; 4])> {
    let mut parts = id.split('_');
    let suite = match parts.next()? {
        "S" => Suite::Small,
        "M" => Suite::Medium,
        "L" => Suite::Large,
        _ => return None,
    };
    let dims: Vec<usize> = parts.next()?.split('x').map(str::parse).collect::<Result<_, _>>().ok()?;
    parts.next()?.parse::<usize>().ok()?;
    if parts.next().is_some() || dims.len() != 4 {
        return None;
    }
    Some((suite, [dims[0], dims[1], dims[2], dims[3]]))
}

#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub id: String,
    pub suite: Suite,
    pub instance: Instance,
}

/// Every grid combination times `cases` seeded cases, in grid order.
pub fn suite_instances(suite: Suite, cases: usize, seed: u64) -> Result<Vec<BenchInstance>> {
    let [us, fs, ms, ls] = suite.grid();
    let mut out = Vec::new();
    for &u in us {
        for &f in fs {
            for &m in ms {
                for &l in ls {
                    for case in 1..=cases {
                        let case_seed = seed
                            .wrapping_mul(1_000_003)
                            .wrapping_add((out.len() as u64) << 8 | case as u64);
                        let instance = generate_instance(&GeneratorConfig::new(u, f, m, l, case_seed))?;
                        out.push(BenchInstance { id: instance_id(suite, u, f, m, l, case), suite, instance });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Relative deviation from the best known makespan.
pub fn rpd(ca: Time, best: Time) -> Result<f64> {
    if best <= 0 {
        return Err(Error::Domain(format!("best makespan must be positive, got {best}")));
    }
    if ca < best {
        return Err(Error::Domain(format!("makespan {ca} is below the best {best}")));
    }
    Ok((ca - best) as f64 / best as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub algorithm: String,
    pub run: u32,
    pub seed: u64,
    pub cm_max: Time,
    pub ca_max: Time,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    /// Instance type tag, or `all` when ids carry no scale.
    pub group: String,
    /// `u=10` style level, or `Avg`.
    pub level: String,
    pub algorithm: String,
    pub brpd: f64,
    pub arpd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpdTable {
    pub rows: Vec<AggregateRow>,
    /// (bRPD, aRPD) per instance, then per algorithm.
    pub per_instance: BTreeMap<String, BTreeMap<String, (f64, f64)>>,
}

impl RpdTable {
    pub fn algorithms(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.per_instance.values().flat_map(|m| m.keys()).collect();
        set.into_iter().cloned().collect()
    }

    /// aRPD matrix, instances by algorithms, for instances every algorithm ran on.
    pub fn arpd_matrix(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let algorithms = self.algorithms();
        let matrix = self
            .per_instance
            .values()
            .filter(|m| m.len() == algorithms.len())
            .map(|m| algorithms.iter().map(|a| m[a].1).collect())
            .collect();
        (algorithms, matrix)
    }
}

pub fn aggregate(records: &[RunRecord]) -> Result<RpdTable> {
    if records.is_empty() {
        return Err(Error::Domain("no run records to aggregate".into()));
    }
    let mut best: BTreeMap<&str, Time> = BTreeMap::new();
    for r in records {
        let b = best.entry(&r.instance_id).or_insert(r.ca_max);
        *b = (*b).min(r.ca_max);
    }
    let mut runs: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in records {
        let value = rpd(r.ca_max, best[r.instance_id.as_str()])?;
        runs.entry(&r.instance_id).or_default().entry(&r.algorithm).or_default().push(value);
    }
    let per_instance: BTreeMap<String, BTreeMap<String, (f64, f64)>> = runs
        .into_iter()
        .map(|(id, algs)| {
            let stats = algs
                .into_iter()
                .map(|(alg, v)| {
                    let b = v.iter().copied().fold(f64::INFINITY, f64::min);
                    let a = v.iter().sum::<f64>() / v.len() as f64;
                    (alg.to_string(), (b, a))
                })
                .collect();
            (id.to_string(), stats)
        })
        .collect();

    // Bucket instances per (group, level) in table order.
    type Key = (usize, String, usize, usize, usize);
    let mut buckets: BTreeMap<Key, Vec<&str>> = BTreeMap::new();
    for id in per_instance.keys() {
        match parse_instance_id(id) {
            Some((suite, dims)) => {
                let rank = suite as usize;
                for (d, &value) in dims.iter().enumerate() {
                    buckets.entry((rank, suite.tag().into(), d, value, 0)).or_default().push(id);
                }
                buckets.entry((rank, suite.tag().into(), 4, 0, 0)).or_default().push(id);
            }
            None => buckets.entry((3, "all".into(), 4, 0, 0)).or_default().push(id),
        }
    }
    let mut rows = Vec::new();
    for ((_, group, dim, value, _), ids) in buckets {
        let level = match dim {
            4 => "Avg".to_string(),
            d => format!("{}={value}", ["u", "f", "m", "l"][d]),
        };
        let mut sums: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
        for id in ids {
            for (alg, &(b, a)) in &per_instance[id] {
                let s = sums.entry(alg).or_default();
                s.0 += b;
                s.1 += a;
                s.2 += 1;
            }
        }
        for (alg, (b, a, n)) in sums {
            rows.push(AggregateRow {
                group: group.clone(),
                level: level.clone(),
                algorithm: alg.to_string(),
                brpd: b / n as f64,
                arpd: a / n as f64,
            });
        }
    }
    Ok(RpdTable { rows, per_instance })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Friedman {
    pub avg_ranks: Vec<f64>,
    pub chi_square: f64,
}

/// Ranks each row ascending (1 = lowest score, ties share the mean rank).
pub fn friedman(scores: &[Vec<f64>]) -> Result<Friedman> {
    let n = scores.len();
    if n == 0 {
        return Err(Error::Domain("Friedman test needs at least one instance".into()));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(Error::Domain("Friedman test needs at least two algorithms".into()));
    }
    if scores.iter().any(|row| row.len() != k) {
        return Err(Error::Domain("ragged score matrix".into()));
    }
    let mut rank_sums = vec![0.0; k];
    for row in scores {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && row[order[j + 1]] == row[order[i]] {
                j += 1;
            }
            let shared = (i + j) as f64 / 2.0 + 1.0;
            for &col in &order[i..=j] {
                rank_sums[col] += shared;
            }
            i = j + 1;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = rank_sums.iter().map(|r| r * r).sum();
    let chi_square = 12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0);
    Ok(Friedman { avg_ranks: rank_sums.iter().map(|r| r / nf).collect(), chi_square })
}

/// How long each run may search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// multiplier × u×f×m×l ms, multiplier taken from the instance's suite.
    Scaled,
    Fixed(u64),
    Generations(u64),
}

pub fn run_algorithm(
    name: &str,
    inst: &Instance,
    params: &SolverParams,
) -> Result<SolveOutcome> {
    let with = |variant| SolverParams { variant, ..params.clone() };
    match name {
        "hcce" => solver::solve(inst, &with(Variant::Full)),
        "hcce-nols" => solver::solve(inst, &with(Variant::NoLocalSearch)),
        "hcce-noco" => solver::solve(inst, &with(Variant::NoCooperation)),
        "random" => solver::random_search(inst, params),
        "greedy-l1" => solver::greedy_l1(inst),
        other => Err(Error::UnknownAlgorithm(other.to_string())),
    }
}

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub algorithms: Vec<String>,
    pub runs: u32,
    pub budget: Budget,
    pub seed: u64,
    /// Worker threads; 1 runs sequentially.
    pub threads: usize,
}

/// Runs every algorithm `runs` times on every instance; run `r` uses seed
/// `seed + r`. Records come back sorted.
pub fn run_suite(instances: &[BenchInstance], setup: &SuiteRun) -> Result<Vec<RunRecord>> {
    if let Some(bad) = setup.algorithms.iter().find(|a| !ALGORITHMS.contains(&a.as_str())) {
        return Err(Error::UnknownAlgorithm(bad.clone()));
    }
    let mut tasks = Vec::new();
    for bi in instances {
        for alg in &setup.algorithms {
            for run in 0..setup.runs {
                tasks.push((bi, alg.as_str(), run));
            }
        }
    }
    let one = |&(bi, alg, run): &(&BenchInstance, &str, u32)| -> Result<RunRecord> {
        let seed = setup.seed.wrapping_add(run as u64);
        let mut params = SolverParams { seed, ..SolverParams::preset(bi.suite.preset()) };
        match setup.budget {
            Budget::Scaled => params.budget_ms = Some(budget_ms(bi.suite, &bi.instance)),
            Budget::Fixed(ms) => params.budget_ms = Some(ms),
            Budget::Generations(g) => params.max_generations = Some(g),
        }
        log::info!("{} {alg} run {run}", bi.id);
        let out = run_algorithm(alg, &bi.instance, &params)?;
        Ok(RunRecord {
            instance_id: bi.id.clone(),
            algorithm: alg.to_string(),
            run,
            seed,
            cm_max: out.eval.cm_max,
            ca_max: out.eval.ca_max,
            elapsed_ms: out.stats.elapsed_ms,
        })
    };
    let mut records: Vec<RunRecord> = if setup.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(setup.threads)
            .build()
            .map_err(|e| Error::Domain(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(one).collect::<Result<_>>())?
    } else {
        tasks.iter().map(one).collect::<Result<_>>()?
    };
    sort_records(&mut records);
    Ok(records)
}

pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        (&a.instance_id, &a.algorithm, a.run).cmp(&(&b.instance_id, &b.algorithm, b.run))
    });
}

/// Results CSV, sorted; an empty slice yields the header alone.
pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULTS_HEADER.split(','))?;
    for r in &sorted {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let records = r.deserialize().collect::<Result<Vec<RunRecord>, _>>()?;
    Ok(records)
}

pub fn write_aggregate<W: Write>(mut out: W, table: &RpdTable) -> Result<()> {
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            row.group, row.level, row.algorithm, row.brpd, row.arpd
        )?;
    }
    Ok(())
}

pub fn write_friedman<W: Write>(mut out: W, algorithms: &[String], result: &Friedman) -> Result<()> {
    writeln!(out, "{FRIEDMAN_HEADER}")?;
    for (alg, rank) in algorithms.iter().zip(&result.avg_ranks) {
        writeln!(out, "{alg},{rank:.6}")?;
    }
    writeln!(out, "chi_square,{:.6}", result.chi_square)?;
    Ok(())
}
