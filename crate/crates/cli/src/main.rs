use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_cluster::harness::{
    generate, instance_file_name, sweep, write_instances, ExperimentConfig,
};
use robust_cluster::io::{
    load_instance, load_oracle, read_json, to_json, CentroidSpec, InstanceFile, SolutionFile,
};
use robust_cluster::oracle::{opt_discrete, opt_means_continuous};
use robust_cluster::outlier_search::ls_multi_swap_outlier_capped;
use robust_cluster::penalty_search::{ls_multi_swap_capped, StopRule, DEFAULT_MAX_ITERATIONS};
use robust_cluster::verify::{
    build_adapted_clustering, check_capture_reassignment, check_complexity_bounds,
    check_optimal_cluster_candidates, check_ratio_bounds, check_swap_inequalities,
    check_termination, BoundCheck, BoundReport, ReportParams, Status,
};
use robust_cluster::{Metric, Objective, Problem};

const THREADS_ENV: &str = "ROBUST_CLUSTER_THREADS";

#[derive(Parser)]
#[command(
    name = "robust-cluster",
    version,
    about = "Robust k-median / k-means local search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic instances.
    Generate(GenerateArgs),
    /// Run the local search on one instance.
    Solve(SolveArgs),
    /// Solve a small instance exactly.
    Oracle(OracleArgs),
    /// Check the approximation guarantees on a (local, optimal) pair.
    Verify(VerifyArgs),
    /// Run a parameter sweep and write a CSV report.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment config as JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<Problem>,
    #[arg(long)]
    count: Option<usize>,
    /// Point count, `N` or `MIN:MAX`.
    #[arg(long, value_parser = parse_range)]
    n: Option<[usize; 2]>,
    #[arg(long, value_parser = parse_range)]
    k: Option<[usize; 2]>,
    #[arg(long, value_parser = parse_range)]
    z: Option<[usize; 2]>,
    /// Median only: facility count, `N` or `MIN:MAX`.
    #[arg(long, value_parser = parse_range)]
    facilities: Option<[usize; 2]>,
    #[arg(long)]
    contamination: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StopMode {
    Exact,
    Threshold,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Must match the instance file when given.
    #[arg(long)]
    problem: Option<Problem>,
    #[arg(long, default_value_t = 1)]
    rho: usize,
    /// Penalty problems only.
    #[arg(long, value_enum, default_value = "exact")]
    stop: StopMode,
    #[arg(long)]
    eps: Option<f64>,
    /// Threshold divisor; defaults to `k` for penalty and `k + 1` or
    /// `k² − k + 1` for outlier problems.
    #[arg(long)]
    q: Option<f64>,
    /// Samples the initial centers; without it the first `k` candidates start.
    #[arg(long)]
    seed: Option<u64>,
    /// Candidate centers of means problems: data, exact or grid:<eps>.
    #[arg(long)]
    centroid_set: Option<CentroidSpec>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// Solution JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted steps as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Means problems: enumerate the candidate set instead of solving with
    /// free centers.
    #[arg(long)]
    discrete: bool,
    #[arg(long)]
    centroid_set: Option<CentroidSpec>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckGroup {
    All,
    /// Approximation ratio of the run.
    Ratio,
    /// Iteration count and removed-set size.
    Complexity,
    /// Capture reassignment, candidate replacement and swap inequalities.
    Inequalities,
    /// Post-conditions of a threshold run.
    Termination,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    local: PathBuf,
    #[arg(long)]
    opt: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    checks: Vec<CheckGroup>,
    /// Defaults to the set recorded in the local solution.
    #[arg(long)]
    centroid_set: Option<CentroidSpec>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of instance files, read in name order. Without it the
    /// instances are generated from the config.
    #[arg(long)]
    instances: Option<PathBuf>,
    /// CSV report; falls back to the config, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once(':') {
        Some((a, b)) => Ok([parse(a)?, parse(b)?]),
        None => {
            let v = parse(s)?;
            Ok([v, v])
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize = value
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a thread count, got `{value}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => read_json(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(p) = args.problem {
        config.problem = p;
    }
    if let Some(c) = args.count {
        config.instances = c;
    }
    if let Some(r) = args.n {
        config.n = r;
    }
    if let Some(r) = args.k {
        config.k = r;
    }
    if let Some(r) = args.z {
        config.z = r;
    }
    if args.facilities.is_some() {
        config.generator.facilities = args.facilities;
    }
    if let Some(c) = args.contamination {
        config.generator.contamination = c;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let dir = args
        .out_dir
        .or_else(|| config.output_dir.clone())
        .context("no output directory: pass --out-dir or set output_dir in the config")?;
    let files = generate(&config)?;
    let paths = write_instances(&dir, &files)?;
    eprintln!("wrote {} instances to {}", paths.len(), dir.display());
    Ok(())
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let file: InstanceFile = read_json(&args.input)
        .with_context(|| format!("reading instance {}", args.input.display()))?;
    if let Some(p) = args.problem {
        if p != file.problem {
            bail!(
                "--problem {p} does not match the instance's {}",
                file.problem
            );
        }
    }
    let spec = match file.problem.metric() {
        Metric::Means => Some(args.centroid_set.unwrap_or(CentroidSpec::Data)),
        Metric::Median => None,
    };
    let instance = file.to_instance(spec)?;
    let trace = match instance.objective() {
        Objective::Penalty => {
            let rule = match args.stop {
                StopMode::Exact => StopRule::Exact,
                StopMode::Threshold => {
                    let eps = args.eps.context("--stop threshold needs --eps")?;
                    StopRule::Threshold {
                        eps,
                        q: args.q.unwrap_or(instance.k() as f64),
                    }
                }
            };
            ls_multi_swap_capped(&instance, args.rho, rule, args.seed, args.max_iterations)?
        }
        Objective::Outlier => {
            let eps = args.eps.context("outlier problems need --eps")?;
            ls_multi_swap_outlier_capped(
                &instance,
                args.rho,
                eps,
                args.q,
                args.seed,
                args.max_iterations,
            )?
        }
    };
    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    }
    let out = SolutionFile::from_trace(&instance, &trace, spec);
    emit(args.out.as_deref(), &to_json(&out)?)
}

fn run_oracle(args: OracleArgs) -> Result<()> {
    let file: InstanceFile = read_json(&args.input)
        .with_context(|| format!("reading instance {}", args.input.display()))?;
    let instance = file.to_instance(args.centroid_set)?;
    let result = match (instance.metric(), args.discrete) {
        (Metric::Means, false) => opt_means_continuous(&instance)?,
        _ => opt_discrete(&instance)?,
    };
    emit(args.out.as_deref(), &to_json(&result)?)
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    let local_file: SolutionFile = read_json(&args.local)
        .with_context(|| format!("reading solution {}", args.local.display()))?;
    let spec = args.centroid_set.or(local_file.centroid_set);
    let instance = load_instance(&args.input, spec)?;
    let global = load_oracle(&args.opt)
        .with_context(|| format!("reading oracle result {}", args.opt.display()))?;
    if global.problem != instance.problem() {
        bail!(
            "oracle result is for {}, instance is {}",
            global.problem,
            instance.problem()
        );
    }
    let local = local_file.to_solution(&instance)?;
    let run = local_file.search.as_ref();
    let wants = |g: CheckGroup| args.checks.contains(&CheckGroup::All) || args.checks.contains(&g);

    let mut report = BoundReport::new(ReportParams {
        k: instance.k(),
        rho: run.map(|r| r.params.rho),
        eps: run.and_then(|r| r.params.eps),
        q: run.and_then(|r| r.params.q),
        epsilon_hat: instance.candidate_set().map(|c| c.epsilon_hat),
        ..ReportParams::default()
    });
    let missing =
        |name: &str| BoundCheck::not_applicable(name, "solution carries no search record");

    if wants(CheckGroup::Ratio) {
        match run {
            Some(r) => {
                let part = check_ratio_bounds(&instance, &local, &global, &r.params);
                report.params.beta1 = part.params.beta1;
                report.params.beta2 = part.params.beta2;
                report.extend(part);
            }
            None => report.push(missing("ratio")),
        }
    }
    if wants(CheckGroup::Complexity) && instance.objective() == Objective::Outlier {
        match run {
            Some(r) => report.extend(check_complexity_bounds(r, &instance)),
            None => report.push(missing("iterations")),
        }
    }
    if wants(CheckGroup::Inequalities) {
        let adapted = build_adapted_clustering(&instance, &local, &global)?;
        report.extend(check_capture_reassignment(
            &instance, &local, &global, &adapted,
        ));
        if instance.metric() == Metric::Means {
            report.extend(check_optimal_cluster_candidates(&instance, &global)?);
        }
        match run {
            Some(r) => report.extend(check_swap_inequalities(
                &instance, &local, &global, &adapted, &r.params,
            )),
            None => report.push(missing("swap_inequalities")),
        }
    }
    if wants(CheckGroup::Termination) && instance.objective() == Objective::Outlier {
        match run {
            Some(r) if r.params.eps.is_some() => {
                report.extend(check_termination(&instance, &local, &r.params)?)
            }
            _ => report.push(missing("termination")),
        }
    }

    emit(args.out.as_deref(), &to_json(&report)?)?;
    eprintln!(
        "{} pass, {} fail, {} not applicable, {} skipped",
        report.count(Status::Pass),
        report.count(Status::Fail),
        report.count(Status::NotApplicable),
        report.count(Status::Skipped)
    );
    for f in report.failures() {
        eprintln!("FAIL {}: lhs {} > rhs {}", f.name, f.lhs, f.rhs);
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn read_instance_dir(dir: &Path) -> Result<Vec<(String, InstanceFile)>> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    names.retain(|p| p.extension().is_some_and(|e| e == "json"));
    names.sort();
    names
        .into_iter()
        .map(|p| {
            let file = read_json(&p).with_context(|| format!("reading {}", p.display()))?;
            let name = p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, file))
        })
        .collect()
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let instances = match &args.instances {
        Some(dir) => read_instance_dir(dir)?,
        None => generate(&config)?
            .into_iter()
            .enumerate()
            .map(|(i, f)| (instance_file_name(i), f))
            .collect(),
    };
    if let (None, Some(dir)) = (&args.instances, &config.output_dir) {
        let files: Vec<InstanceFile> = instances.iter().map(|(_, f)| f.clone()).collect();
        write_instances(dir, &files)?;
    }
    let report = sweep(&config, &instances)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    let out = args.out.or_else(|| config.report.clone());
    emit(out.as_deref(), std::str::from_utf8(&buf)?)?;
    if !report.all_bounds_hold() {
        eprintln!("warning: some bounds failed; see check_status in the report");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Generate(a) => run_generate(a).map(|()| ExitCode::SUCCESS),
        Command::Solve(a) => run_solve(a).map(|()| ExitCode::SUCCESS),
        Command::Oracle(a) => run_oracle(a).map(|()| ExitCode::SUCCESS),
        Command::Verify(a) => run_verify(a),
        Command::Sweep(a) => run_sweep(a).map(|()| ExitCode::SUCCESS),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("4").unwrap(), [4, 4]);
        assert_eq!(parse_range("3:9").unwrap(), [3, 9]);
        assert!(parse_range("a:2").is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
