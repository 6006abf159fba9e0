//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, Budget, Suite, SuiteRun};
use crate::error::Error;
use crate::instance::{Coding, Instance};
use crate::petri::{build_app, idam_traced, replays_to_final};
use crate::schedule::{buffer_trace, export_gantt, gantt_tsv, Evaluator};
use crate::solver::{Preset, SolverParams};

#[derive(Debug, Parser)]
#[command(name = "dafsp", version, about = "Deadlock-free distributed assembly flowshop scheduler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write random instances, one file or a whole suite.
    Generate(GenerateArgs),
    /// Search for a low-makespan coding.
    Solve(SolveArgs),
    /// Amend a job order for deadlock and report the result.
    Verify(VerifyArgs),
    /// Print the schedule of a coding as tab-separated rows.
    Gantt(GanttArgs),
    /// Run algorithms over a generated suite and write a results CSV.
    Bench(BenchArgs),
    /// Aggregate a results CSV into deviation tables and Friedman ranks.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Write every instance of this suite into the `--out` directory.
    #[arg(long)]
    suite: Option<Suite>,
    #[arg(long, default_value_t = 3)]
    cases: usize,
    #[arg(long, default_value_t = 10)]
    jobs: usize,
    #[arg(long, default_value_t = 2)]
    factories: usize,
    #[arg(long, default_value_t = 2)]
    machines: usize,
    #[arg(long, default_value_t = 2)]
    products: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Defaults to the size class of the instance.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    ps: Option<usize>,
    #[arg(long)]
    ep: Option<f64>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    cd: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to the scaled budget of the instance's size class.
    #[arg(long)]
    budget_ms: Option<u64>,
    #[arg(long)]
    max_generations: Option<u64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "hcce")]
    algorithm: String,
    #[command(flatten)]
    params: ParamArgs,
    /// Coding output; defaults to `<instance>.coding.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// 1-based job order, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "coding")]
    lambda: Option<Vec<usize>>,
    #[arg(long)]
    coding: Option<PathBuf>,
    /// Also print the net structure and final marking.
    #[arg(long)]
    dump: bool,
}

#[derive(Debug, Args)]
struct GanttArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    coding: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value = "small")]
    suite: Suite,
    #[arg(long, default_value_t = 3)]
    cases: usize,
    /// Only the first N instances of the suite.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "hcce,hcce-nols,hcce-noco")]
    algorithms: Vec<String>,
    #[arg(long, default_value_t = 10)]
    runs: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with = "max_generations")]
    budget_ms: Option<u64>,
    #[arg(long)]
    max_generations: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    /// Directory receiving aggregate.csv and friedman.csv.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Usage(io.to_string()),
            other => Failure::Domain(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Runs one command line; returns 0 on success, 1 on a domain error and 2 on
/// a usage error or unreadable input.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Gantt(a) => gantt(a),
        Command::Bench(a) => run_bench(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> CliResult<Instance> {
    Ok(Instance::from_json(&read(path)?)?)
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn one_based(jobs: &[usize]) -> String {
    jobs.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn generate(a: GenerateArgs) -> CliResult {
    match a.suite {
        Some(suite) => {
            fs::create_dir_all(&a.out)?;
            let instances = bench::suite_instances(suite, a.cases, a.seed)?;
            for bi in &instances {
                write_file(&a.out.join(format!("{}.json", bi.id)), &bi.instance.to_json())?;
            }
            println!("wrote {} instances to {}", instances.len(), a.out.display());
        }
        None => {
            let cfg = bench::GeneratorConfig::new(a.jobs, a.factories, a.machines, a.products, a.seed);
            let inst = bench::generate_instance(&cfg)?;
            write_file(&a.out, &inst.to_json())?;
            println!("wrote {}", a.out.display());
        }
    }
    Ok(())
}

fn solver_params(inst: &Instance, a: &ParamArgs) -> SolverParams {
    let suite = Suite::classify(inst.jobs());
    let mut p = SolverParams::preset(a.preset.unwrap_or(suite.preset()));
    p.ps = a.ps.unwrap_or(p.ps);
    p.ep = a.ep.unwrap_or(p.ep);
    p.alpha = a.alpha.unwrap_or(p.alpha);
    p.cd = a.cd.unwrap_or(p.cd);
    p.seed = a.seed;
    p.max_generations = a.max_generations;
    p.budget_ms = match (a.budget_ms, a.max_generations) {
        (Some(ms), _) => Some(ms),
        (None, Some(_)) => None,
        (None, None) => Some(bench::budget_ms(suite, inst)),
    };
    p
}

fn solve(a: SolveArgs) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let params = solver_params(&inst, &a.params);
    let out = bench::run_algorithm(&a.algorithm, &inst, &params)?;
    let path = a.out.unwrap_or_else(|| a.instance.with_extension("coding.json"));
    write_file(&path, &out.coding.to_json())?;
    println!("ca_max={} cm_max={}", out.eval.ca_max, out.eval.cm_max);
    log::info!(
        "{} generations, {} evaluations, {} restarts, {} ms",
        out.stats.generations,
        out.stats.evaluations,
        out.stats.restarts,
        out.stats.elapsed_ms
    );
    Ok(())
}

fn verify(a: VerifyArgs) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let coding = match (&a.lambda, &a.coding) {
        (Some(lambda), None) => {
            let mu = vec![1; inst.jobs()];
            Some(Coding::from_one_based(&inst, lambda, &mu)?).map(|c| (c, false))
        }
        (None, Some(path)) => Some((Coding::from_json(&inst, &read(path)?)?, true)),
        _ => None,
    };
    let Some((coding, has_mu)) = coding else {
        return Err(Failure::Usage("one of --lambda or --coding is required".into()));
    };
    let violations = crate::instance::validate_coding(&inst, &coding);
    if !violations.is_empty() {
        return Err(Failure::Domain(Error::InvalidCoding(violations)));
    }
    let net = build_app(&inst);
    println!("input order {}", one_based(&coding.lambda));
    println!("deadlock-free as given: {}", replays_to_final(&net, &coding.lambda));
    let amended = idam_traced(&net, &coding.lambda)?;
    println!("amended to {}", one_based(&amended.lambda));
    let deferred = amended.deferred();
    if deferred.is_empty() {
        println!("deferred none");
    } else {
        println!("deferred {}", one_based(&deferred));
    }
    println!("reaches final marking: {}", replays_to_final(&net, &amended.lambda));
    if has_mu {
        let eval = Evaluator::new(&inst).evaluate_amended(amended.lambda.clone(), &coding.mu);
        let trace = buffer_trace(&inst, &eval.schedule);
        println!("ca_max={} cm_max={}", eval.ca_max, eval.cm_max);
        println!("buffer peak {} of {}", trace.peak, inst.buffer());
    }
    if a.dump {
        print!("{}", net.dump_structure());
        print!("{}", net.dump_marking(&net.final_marking()));
    }
    Ok(())
}

fn gantt(a: GanttArgs) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let coding = Coding::from_json(&inst, &read(&a.coding)?)?;
    let eval = Evaluator::new(&inst).evaluate(&coding)?;
    let text = gantt_tsv(&export_gantt(&eval.schedule, &inst));
    match a.out {
        Some(path) => write_file(&path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_bench(a: BenchArgs) -> CliResult {
    let mut instances = bench::suite_instances(a.suite, a.cases, a.seed)?;
    if let Some(n) = a.limit {
        instances.truncate(n);
    }
    let budget = match (a.budget_ms, a.max_generations) {
        (Some(ms), _) => Budget::Fixed(ms),
        (None, Some(g)) => Budget::Generations(g),
        (None, None) => Budget::Scaled,
    };
    let setup = SuiteRun { algorithms: a.algorithms, runs: a.runs, budget, seed: a.seed, threads: a.threads };
    let records = bench::run_suite(&instances, &setup)?;
    emit_report(&records, &a.out)?;
    println!("wrote {} records to {}", records.len(), a.out.display());
    Ok(())
}

/// Writes the results CSV sorted by instance, algorithm and run.
pub fn emit_report(records: &[bench::RunRecord], path: &Path) -> crate::error::Result<()> {
    if records.is_empty() {
        log::warn!("no records; writing header only to {}", path.display());
        eprintln!("warning: no records; writing header only");
    }
    let mut file = fs::File::create(path)?;
    bench::write_records(&mut file, records)?;
    file.flush()?;
    Ok(())
}

fn report(a: ReportArgs) -> CliResult {
    let file = fs::File::open(&a.results)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.results.display())))?;
    let records = bench::read_records(file)?;
    fs::create_dir_all(&a.out)?;
    let mut agg = Vec::new();
    let mut fried = Vec::new();
    if records.is_empty() {
        eprintln!("warning: no records; writing headers only");
        writeln!(agg, "{}", bench::AGGREGATE_HEADER)?;
        writeln!(fried, "{}", bench::FRIEDMAN_HEADER)?;
    } else {
        let table = bench::aggregate(&records)?;
        bench::write_aggregate(&mut agg, &table)?;
        let (algorithms, matrix) = table.arpd_matrix();
        if algorithms.len() >= 2 && !matrix.is_empty() {
            bench::write_friedman(&mut fried, &algorithms, &bench::friedman(&matrix)?)?;
        } else {
            eprintln!("warning: Friedman ranks need two algorithms on a common instance");
            writeln!(fried, "{}", bench::FRIEDMAN_HEADER)?;
        }
    }
    fs::write(a.out.join("aggregate.csv"), &agg)?;
    fs::write(a.out.join("friedman.csv"), &fried)?;
    std::io::stdout().write_all(&agg)?;
    std::io::stdout().write_all(&fried)?;
    Ok(())
}
