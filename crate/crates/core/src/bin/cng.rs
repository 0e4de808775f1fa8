use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cng_core::instancegen::{generate, ingest, GenSpec, IngestParams, TrafficSnapshot};
use cng_core::io::{read_instance, read_json, to_canonical_json, write_instance, ResultFile};
use cng_core::report::{read_rows, run_batch, write_report, write_rows};
use cng_core::{
    oracle, price_of_aggression, price_of_security, solve, CngError, CngInstance, CutRule, MasterObjective,
    PriceReport, Result, SolveConfig, SolveStatus,
};

const SYNTHETIC_TIME_LIMIT: f64 = 100.0;
const INGESTED_TIME_LIMIT: f64 = 180.0;
const ROWS_FILE: &str = "batch.csv";

/// Equilibria, prices and experiments for the Critical Node Game.
///
/// Exit status: 0 when every equilibrium is proved optimal, 2 when a limit
/// left only an incumbent, 1 on error. Set CNG_LOG (e.g. `info`, `debug`)
/// for progress logging.
#[derive(Parser)]
#[command(name = "cng", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic instances.
    Generate(GenerateArgs),
    /// Build an instance from a traffic snapshot.
    Ingest(IngestArgs),
    /// Compute the objective-best equilibrium of an instance.
    Solve(SolveArgs),
    /// Price of Security of an instance.
    Pos(PriceArgs),
    /// Price of Aggression of an instance.
    Poa(PriceArgs),
    /// Cross-check the solver against brute-force enumeration (n <= 10).
    Verify(VerifyArgs),
    /// Solve many instances for both prices and store one row per instance.
    Batch(BatchArgs),
    /// Summarize a batch into the per-size table.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of nodes; a comma-separated list with --grid.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.6)]
    eta: f64,
    /// Defender budget as a fraction of the total protection cost.
    #[arg(long, default_value_t = 0.30)]
    dfrac: f64,
    /// Attacker budget as a fraction of the total attack cost.
    #[arg(long, default_value_t = 0.10)]
    afrac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit every combination of the parameter grid for each size.
    #[arg(long)]
    grid: bool,
    /// Output file, or directory with --grid. Single instances go to stdout
    /// when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    snapshot: PathBuf,
    /// JSON file with role tables and parameters; defaults are used otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    dfrac: Option<f64>,
    #[arg(long)]
    afrac: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolveOpts {
    /// Seconds per equilibrium solve [default: 100, or 180 for ingested instances].
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    phi_increment: f64,
    /// Cuts per round: `first` (defender's if it deviates, else attacker's) or `all`.
    #[arg(long, default_value = "first")]
    cuts: CutRule,
}

impl SolveOpts {
    fn config(&self, objective: MasterObjective, ingested: bool) -> Result<SolveConfig> {
        let default = if ingested {
            INGESTED_TIME_LIMIT
        } else {
            SYNTHETIC_TIME_LIMIT
        };
        let secs = self.time_limit.unwrap_or(default);
        let time_limit =
            Duration::try_from_secs_f64(secs).map_err(|_| CngError::InvalidConfig(format!("bad time limit {secs}")))?;
        let config = SolveConfig {
            objective,
            time_limit,
            phi_increment: self.phi_increment,
            cut_rule: self.cuts,
            ..SolveConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "defender")]
    objective: MasterObjective,
    #[command(flatten)]
    opts: SolveOpts,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PriceArgs {
    instance: PathBuf,
    #[command(flatten)]
    opts: SolveOpts,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instances: Vec<PathBuf>,
    #[command(flatten)]
    opts: SolveOpts,
}

#[derive(Args)]
struct BatchArgs {
    /// Instance files or directories of `*.json` instances.
    inputs: Vec<PathBuf>,
    /// Solve the generated parameter grid for these sizes instead.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    opts: SolveOpts,
    /// Output directory; receives `batch.csv`.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// A batch directory or its `batch.csv`.
    batch: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn status_code(proved: bool) -> ExitCode {
    if proved {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    if args.grid {
        let dir = args
            .output
            .ok_or_else(|| CngError::InvalidConfig("--grid needs an output directory (-o)".into()))?;
        fs::create_dir_all(&dir)?;
        for &n in &args.n {
            for spec in GenSpec::grid(n, args.seed) {
                write_instance(dir.join(format!("{}.json", spec.label())), &generate(&spec)?)?;
            }
        }
        return Ok(ExitCode::SUCCESS);
    }
    let [n] = args.n[..] else {
        return Err(CngError::InvalidConfig("several sizes need --grid".into()));
    };
    let spec = GenSpec {
        n,
        gamma: args.gamma,
        eta: args.eta,
        defender_budget_frac: args.dfrac,
        attacker_budget_frac: args.afrac,
        seed: args.seed,
        paper_grid: false,
    };
    let inst = generate(&spec)?;
    emit(args.output.as_deref(), &to_canonical_json(&inst)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_ingest(args: IngestArgs) -> Result<ExitCode> {
    let snapshot: TrafficSnapshot = read_json(&args.snapshot)?;
    let mut params = match &args.params {
        Some(p) => read_json(p)?,
        None => IngestParams::default(),
    };
    params.gamma = args.gamma.unwrap_or(params.gamma);
    params.eta = args.eta.unwrap_or(params.eta);
    params.defender_budget_frac = args.dfrac.unwrap_or(params.defender_budget_frac);
    params.attacker_budget_frac = args.afrac.unwrap_or(params.attacker_budget_frac);
    let inst = ingest(&snapshot, &params)?;
    emit(args.output.as_deref(), &to_canonical_json(&inst)?)?;
    Ok(ExitCode::SUCCESS)
}

fn ingested(inst: &CngInstance) -> bool {
    inst.edges.is_some()
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let config = args.opts.config(args.objective, ingested(&inst))?;
    let result = solve(&inst, &config)?;
    let file = ResultFile::from(&result);
    emit(args.output.as_deref(), &to_canonical_json(&file)?)?;
    Ok(status_code(file.proved()))
}

#[derive(Serialize)]
struct PriceFile {
    metric: &'static str,
    /// `null` when the equilibrium payoff is zero.
    ratio: f64,
    numerator: f64,
    denominator: f64,
    phi: f64,
    best_outcome_x: Vec<u8>,
    best_outcome_alpha: Vec<u8>,
    equilibrium: ResultFile,
}

fn cmd_price(args: PriceArgs, metric: &'static str) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let (objective, run): (_, fn(&CngInstance, &SolveConfig) -> Result<PriceReport>) = match metric {
        "pos" => (MasterObjective::DefenderPayoff, price_of_security),
        _ => (MasterObjective::AttackerPayoff, price_of_aggression),
    };
    let config = args.opts.config(objective, ingested(&inst))?;
    let report = run(&inst, &config)?;
    if report.denominator == 0.0 {
        log::warn!("{metric} undefined: equilibrium payoff is zero");
    }
    let file = PriceFile {
        metric,
        ratio: report.ratio,
        numerator: report.numerator,
        denominator: report.denominator,
        phi: report.phi(),
        best_outcome_x: report.best_outcome.defense_bits(),
        best_outcome_alpha: report.best_outcome.attack_bits(),
        equilibrium: ResultFile::from(&report.equilibrium),
    };
    emit(args.output.as_deref(), &to_canonical_json(&file)?)?;
    if args.output.is_some() {
        eprintln!("{metric} = {:.2} (phi {:.4})", report.ratio, report.phi());
    }
    Ok(status_code(report.proved()))
}

/// Checks one solve against enumeration; returns a failure description.
fn verify_one(inst: &CngInstance, config: &SolveConfig) -> Result<(bool, Option<String>)> {
    let result = solve(inst, config)?;
    let proved = result.status == SolveStatus::ProvedOptimalNe;
    let certified = oracle::min_phi(inst, &result.profile)?;
    if (certified - result.phi).abs() > 1e-9 {
        return Ok((
            proved,
            Some(format!(
                "certified phi {} but enumeration gives {certified}",
                result.phi
            )),
        ));
    }
    let best = oracle::best_ne(inst, config.objective)?;
    let problem = match best {
        Some((_, value)) if proved && result.exact && (value - result.objective_value).abs() > 1e-9 => Some(format!(
            "objective {} but best equilibrium has {value}",
            result.objective_value
        )),
        Some(_) if proved && !result.exact => Some("missed an exact equilibrium".to_string()),
        _ => None,
    };
    Ok((proved, problem))
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    if args.instances.is_empty() {
        return Err(CngError::InvalidConfig("no instances given".into()));
    }
    let mut failed = false;
    let mut all_proved = true;
    for path in &args.instances {
        let inst = read_instance(path)?;
        for objective in [
            MasterObjective::DefenderPayoff,
            MasterObjective::AttackerPayoff,
            MasterObjective::SocialWelfare,
        ] {
            let config = args.opts.config(objective, ingested(&inst))?;
            let (proved, problem) = verify_one(&inst, &config)?;
            all_proved &= proved;
            match problem {
                None => println!("{} {objective}: ok", path.display()),
                Some(msg) => {
                    failed = true;
                    println!("{} {objective}: FAIL {msg}", path.display());
                }
            }
        }
    }
    if failed {
        return Err(CngError::InvalidConfig("verification failed".into()));
    }
    Ok(status_code(all_proved))
}

fn collect_instances(inputs: &[PathBuf]) -> Result<Vec<(String, CngInstance)>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(input)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            entries.retain(|p| p.extension().is_some_and(|e| e == "json"));
            entries.sort();
            files.extend(entries);
        } else {
            files.push(input.clone());
        }
    }
    files
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((name, read_instance(&p)?))
        })
        .collect()
}

fn cmd_batch(args: BatchArgs) -> Result<ExitCode> {
    let mut instances = collect_instances(&args.inputs)?;
    for &n in &args.grid {
        for spec in GenSpec::grid(n, args.seed) {
            instances.push((spec.label(), generate(&spec)?));
        }
    }
    if instances.is_empty() {
        return Err(CngError::InvalidConfig("no instances given".into()));
    }
    let ingested = instances.iter().any(|(_, i)| ingested(i));
    let config = args.opts.config(MasterObjective::DefenderPayoff, ingested)?;
    let rows = run_batch(&instances, &config, args.jobs)?;
    fs::create_dir_all(&args.output)?;
    write_rows(fs::File::create(args.output.join(ROWS_FILE))?, &rows)?;
    let proved = rows.iter().filter(|r| r.proved()).count();
    eprintln!("{proved}/{} instances proved for both prices", rows.len());
    Ok(status_code(proved == rows.len()))
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode> {
    let path = if args.batch.is_dir() {
        args.batch.join(ROWS_FILE)
    } else {
        args.batch
    };
    let rows = read_rows(fs::File::open(path)?)?;
    let mut buf = Vec::new();
    write_report(&mut buf, &rows)?;
    emit(args.output.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Pos(a) => cmd_price(a, "pos"),
        Command::Poa(a) => cmd_price(a, "poa"),
        Command::Verify(a) => cmd_verify(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CNG_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
