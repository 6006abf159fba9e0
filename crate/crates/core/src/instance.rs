//! Problem data, solution coding and decoding.
//!
//! Jobs, factories and products are 0-based everywhere inside the crate.
//! The JSON file formats and all human-facing output use 1-based ids.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integral time unit.
pub type Time = i64;

/// A distributed assembly flowshop instance with a shared, capacity-limited
/// assembly buffer in front of a single assembly machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    jobs: usize,
    factories: usize,
    machines: usize,
    processing: Vec<Time>,
    assembly: Vec<Time>,
    plan: Vec<Vec<usize>>,
    buffer: usize,
    product_of: Vec<usize>,
}

/// On-disk layout of an instance; ids are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub jobs: usize,
    pub factories: usize,
    pub machines: usize,
    pub products: usize,
    pub processing: Vec<Vec<Time>>,
    pub assembly: Vec<Time>,
    pub plan: Vec<Vec<usize>>,
    pub buffer: usize,
}

impl Instance {
    /// Builds an instance from 0-based data, checking every model invariant.
    pub fn new(
        factories: usize,
        processing: Vec<Vec<Time>>,
        assembly: Vec<Time>,
        plan: Vec<Vec<usize>>,
        buffer: usize,
    ) -> Result<Self> {
        let jobs = processing.len();
        if jobs == 0 {
            return Err(Error::InvalidInstance("at least one job is required".into()));
        }
        if factories == 0 {
            return Err(Error::InvalidInstance("at least one factory is required".into()));
        }
        let machines = processing[0].len();
        if machines == 0 {
            return Err(Error::InvalidInstance("at least one machine is required".into()));
        }
        if assembly.is_empty() {
            return Err(Error::InvalidInstance("at least one product is required".into()));
        }
        if plan.len() != assembly.len() {
            return Err(Error::InvalidInstance(format!(
                "plan lists {} products but {} assembly times are given",
                plan.len(),
                assembly.len()
            )));
        }
        if buffer == 0 {
            return Err(Error::InvalidInstance("buffer capacity must be at least 1".into()));
        }

        let mut flat = Vec::with_capacity(jobs * machines);
        for (job, row) in processing.iter().enumerate() {
            if row.len() != machines {
                return Err(Error::InvalidInstance(format!(
                    "job {} has {} processing times, expected {machines}",
                    job + 1,
                    row.len()
                )));
            }
            if let Some(k) = row.iter().position(|&t| t < 1) {
                return Err(Error::InvalidInstance(format!(
                    "processing time of job {} on machine {} must be positive",
                    job + 1,
                    k + 1
                )));
            }
            flat.extend_from_slice(row);
        }
        if let Some(q) = assembly.iter().position(|&t| t < 1) {
            return Err(Error::InvalidInstance(format!(
                "assembly time of product {} must be positive",
                q + 1
            )));
        }

        let mut product_of = vec![usize::MAX; jobs];
        for (q, members) in plan.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidInstance(format!("product {} has no jobs", q + 1)));
            }
            for &job in members {
                if job >= jobs {
                    return Err(Error::InvalidInstance(format!(
                        "plan of product {} references unknown job {}",
                        q + 1,
                        job + 1
                    )));
                }
                if product_of[job] != usize::MAX {
                    return Err(Error::DuplicateJob { job: job + 1 });
                }
                product_of[job] = q;
            }
        }
        if let Some(job) = product_of.iter().position(|&q| q == usize::MAX) {
            return Err(Error::MissingJob { job: job + 1 });
        }

        let inst = Self {
            jobs,
            factories,
            machines,
            processing: flat,
            assembly,
            plan,
            buffer,
            product_of,
        };
        let largest = inst.largest_product();
        if buffer < largest {
            log::warn!(
                "buffer capacity {buffer} is below the largest product size {largest}; \
                 some products may be impossible to assemble"
            );
        }
        Ok(inst)
    }

    pub fn from_file(file: InstanceFile) -> Result<Self> {
        if file.processing.len() != file.jobs {
            return Err(Error::InvalidInstance(format!(
                "\"jobs\" is {} but {} processing rows are given",
                file.jobs,
                file.processing.len()
            )));
        }
        if file.assembly.len() != file.products || file.plan.len() != file.products {
            return Err(Error::InvalidInstance(format!(
                "\"products\" is {} but {} assembly times and {} plans are given",
                file.products,
                file.assembly.len(),
                file.plan.len()
            )));
        }
        if let Some(row) = file.processing.iter().position(|r| r.len() != file.machines) {
            return Err(Error::InvalidInstance(format!(
                "\"machines\" is {} but job {} has {} processing times",
                file.machines,
                row + 1,
                file.processing[row].len()
            )));
        }
        let mut plan = Vec::with_capacity(file.plan.len());
        for (q, members) in file.plan.iter().enumerate() {
            let mut zero_based = Vec::with_capacity(members.len());
            for &id in members {
                if id == 0 || id > file.jobs {
                    return Err(Error::InvalidInstance(format!(
                        "plan of product {} references unknown job {id}",
                        q + 1
                    )));
                }
                zero_based.push(id - 1);
            }
            plan.push(zero_based);
        }
        Self::new(file.factories, file.processing, file.assembly, plan, file.buffer)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            jobs: self.jobs,
            factories: self.factories,
            machines: self.machines,
            products: self.products(),
            processing: (0..self.jobs).map(|i| self.job_times(i).to_vec()).collect(),
            assembly: self.assembly.clone(),
            plan: self
                .plan
                .iter()
                .map(|members| members.iter().map(|&i| i + 1).collect())
                .collect(),
            buffer: self.buffer,
        }
    }

    /// Parses and validates an instance file.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    /// Canonical text form: one processing row per line, trailing newline.
    pub fn to_json(&self) -> String {
        let ints = |xs: &mut dyn Iterator<Item = String>| xs.collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"jobs\": {},", self.jobs);
        let _ = writeln!(out, "  \"factories\": {},", self.factories);
        let _ = writeln!(out, "  \"machines\": {},", self.machines);
        let _ = writeln!(out, "  \"products\": {},", self.products());
        out.push_str("  \"processing\": [\n");
        for i in 0..self.jobs {
            let row = ints(&mut self.job_times(i).iter().map(|t| t.to_string()));
            let sep = if i + 1 < self.jobs { "," } else { "" };
            let _ = writeln!(out, "    [{row}]{sep}");
        }
        out.push_str("  ],\n");
        let _ = writeln!(
            out,
            "  \"assembly\": [{}],",
            ints(&mut self.assembly.iter().map(|t| t.to_string()))
        );
        let plan = self
            .plan
            .iter()
            .map(|members| format!("[{}]", ints(&mut members.iter().map(|i| (i + 1).to_string()))))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "  \"plan\": [{plan}],");
        let _ = writeln!(out, "  \"buffer\": {}", self.buffer);
        out.push_str("}\n");
        out
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn factories(&self) -> usize {
        self.factories
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn products(&self) -> usize {
        self.assembly.len()
    }

    /// Buffer capacity Ψ.
    pub fn buffer(&self) -> usize {
        self.buffer
    }

    #[inline]
    pub fn processing(&self, job: usize, machine: usize) -> Time {
        self.processing[job * self.machines + machine]
    }

    pub fn job_times(&self, job: usize) -> &[Time] {
        &self.processing[job * self.machines..(job + 1) * self.machines]
    }

    pub fn assembly_time(&self, product: usize) -> Time {
        self.assembly[product]
    }

    pub fn plan(&self) -> &[Vec<usize>] {
        &self.plan
    }

    pub fn members(&self, product: usize) -> &[usize] {
        &self.plan[product]
    }

    #[inline]
    pub fn product_of(&self, job: usize) -> usize {
        self.product_of[job]
    }

    pub fn largest_product(&self) -> usize {
        self.plan.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Returns a copy with a different buffer capacity.
    pub fn with_buffer(&self, buffer: usize) -> Result<Self> {
        if buffer == 0 {
            return Err(Error::InvalidInstance("buffer capacity must be at least 1".into()));
        }
        let mut inst = self.clone();
        inst.buffer = buffer;
        Ok(inst)
    }
}

/// Per-job and per-product processing-time sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobTotals {
    /// Total processing time of each job over all machines.
    pub job: Vec<Time>,
    /// Sum of the job totals of each product's members.
    pub product: Vec<Time>,
}

pub fn totals(inst: &Instance) -> JobTotals {
    let job: Vec<Time> = (0..inst.jobs()).map(|i| inst.job_times(i).iter().sum()).collect();
    let product = inst
        .plan()
        .iter()
        .map(|members| members.iter().map(|&i| job[i]).sum())
        .collect();
    JobTotals { job, product }
}

/// A candidate solution: the order in which jobs enter the assembly buffer
/// and the factory each job is made in. `mu` is indexed by job id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coding {
    pub lambda: Vec<usize>,
    pub mu: Vec<usize>,
}

/// On-disk layout of a coding; ids are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingFile {
    pub lambda: Vec<usize>,
    pub mu: Vec<usize>,
}

impl Coding {
    pub fn new(lambda: Vec<usize>, mu: Vec<usize>) -> Self {
        Self { lambda, mu }
    }

    /// Converts 1-based ids, rejecting anything that is not a valid coding.
    pub fn from_one_based(inst: &Instance, lambda: &[usize], mu: &[usize]) -> Result<Self> {
        let violations = check_coding(inst, lambda, mu, 1);
        if !violations.is_empty() {
            return Err(Error::InvalidCoding(violations));
        }
        Ok(Self {
            lambda: lambda.iter().map(|&i| i - 1).collect(),
            mu: mu.iter().map(|&c| c - 1).collect(),
        })
    }

    pub fn from_json(inst: &Instance, text: &str) -> Result<Self> {
        let file: CodingFile = serde_json::from_str(text)?;
        Self::from_one_based(inst, &file.lambda, &file.mu)
    }

    pub fn to_file(&self) -> CodingFile {
        CodingFile {
            lambda: self.lambda.iter().map(|&i| i + 1).collect(),
            mu: self.mu.iter().map(|&c| c + 1).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string(&self.to_file()).expect("plain integers serialize");
        text.push('\n');
        text
    }
}

/// A broken coding invariant. Ids are reported 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LambdaLength { expected: usize, found: usize },
    MuLength { expected: usize, found: usize },
    UnknownJob { job: usize },
    DuplicateJob { job: usize },
    MissingJob { job: usize },
    FactoryOutOfRange { job: usize, factory: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LambdaLength { expected, found } => {
                write!(f, "lambda has {found} entries, expected {expected}")
            }
            Violation::MuLength { expected, found } => {
                write!(f, "mu has {found} entries, expected {expected}")
            }
            Violation::UnknownJob { job } => write!(f, "lambda references unknown job {job}"),
            Violation::DuplicateJob { job } => write!(f, "job {job} appears more than once in lambda"),
            Violation::MissingJob { job } => write!(f, "job {job} is missing from lambda"),
            Violation::FactoryOutOfRange { job, factory } => {
                write!(f, "job {job} is assigned to factory {factory}, which does not exist")
            }
        }
    }
}

/// Lists every broken invariant of a 0-based coding; empty means valid.
pub fn validate_coding(inst: &Instance, coding: &Coding) -> Vec<Violation> {
    check_coding(inst, &coding.lambda, &coding.mu, 0)
}

fn check_coding(inst: &Instance, lambda: &[usize], mu: &[usize], base: usize) -> Vec<Violation> {
    let u = inst.jobs();
    let mut violations = Vec::new();
    if lambda.len() != u {
        violations.push(Violation::LambdaLength { expected: u, found: lambda.len() });
    }
    let mut seen = vec![false; u];
    for &id in lambda {
        if id < base || id - base >= u {
            violations.push(Violation::UnknownJob { job: id + 1 - base });
            continue;
        }
        if std::mem::replace(&mut seen[id - base], true) {
            violations.push(Violation::DuplicateJob { job: id + 1 - base });
        }
    }
    for (job, _) in seen.iter().enumerate().filter(|(_, s)| !**s) {
        violations.push(Violation::MissingJob { job: job + 1 });
    }
    if mu.len() != u {
        violations.push(Violation::MuLength { expected: u, found: mu.len() });
    }
    for (job, &factory) in mu.iter().enumerate() {
        if factory < base || factory - base >= inst.factories() {
            violations.push(Violation::FactoryOutOfRange { job: job + 1, factory: factory + 1 - base });
        }
    }
    violations
}

/// Per-factory job sequences and the product assembly order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub pi: Vec<Vec<usize>>,
    pub sigma: Vec<usize>,
}

pub fn decode(inst: &Instance, coding: &Coding) -> Result<Solution> {
    let violations = validate_coding(inst, coding);
    if !violations.is_empty() {
        return Err(Error::InvalidCoding(violations));
    }
    Ok(Solution {
        pi: factory_sequences(inst.factories(), &coding.lambda, &coding.mu),
        sigma: product_order(inst, &coding.lambda),
    })
}

/// Splits `lambda` by factory, keeping λ order inside each factory.
pub fn factory_sequences(factories: usize, lambda: &[usize], mu: &[usize]) -> Vec<Vec<usize>> {
    let mut pi = vec![Vec::new(); factories];
    for &job in lambda {
        pi[mu[job]].push(job);
    }
    pi
}

/// Products ordered by the λ-position of their last-entering job.
pub fn product_order(inst: &Instance, lambda: &[usize]) -> Vec<usize> {
    let mut last = vec![0usize; inst.products()];
    for (pos, &job) in lambda.iter().enumerate() {
        last[inst.product_of(job)] = pos;
    }
    let mut sigma: Vec<usize> = (0..inst.products()).collect();
    sigma.sort_by_key(|&q| last[q]);
    sigma
}
