//! Command-line frontend. Every stochastic command requires --seed; exit
//! codes: 0 success, 2 validation error, 3 numerical failure, 4 sampling
//! budget exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bgw_skeleton::error::Error;
use bgw_skeleton::harness;
use bgw_skeleton::limit::{self, BirthDeathParams, EscapeLaw};
use bgw_skeleton::model_io::ModelSpec;
use bgw_skeleton::mutation;
use bgw_skeleton::offspring::OffspringLaw;
use bgw_skeleton::pgf;
use bgw_skeleton::regime::{classify_regime_with_threshold, DEFAULT_C_THRESHOLD};
use bgw_skeleton::sweep::{self, SweepSpec};
use bgw_skeleton::tree::replica_rng;

#[derive(Parser)]
#[command(name = "bgw", version, about = "Marked near-critical branching processes: exact solvers and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact skeleton survival probability and regime report for a model file.
    QExact(QExactArgs),
    /// Regime classification from explicit (epsilon, mu, sigma2).
    Regime(RegimeArgs),
    /// Emit the escape-time density/tail curve as CSV.
    EscapeLaw(EscapeLawArgs),
    /// Simulate the binary birth-death limit process.
    SimulateY(SimulateYArgs),
    /// Derive the wild-type law and marking rule of a binomial mutation model.
    MutationDerive(MutationDeriveArgs),
    /// Run an experiment file and persist its result record.
    Run(RunArgs),
    /// Run a convergence sweep (preset or file) and persist its report.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct QExactArgs {
    /// Model file (JSON: pmf + marking).
    model: PathBuf,
    /// Skeleton of marked lineages only (no horizon-surviving lineages).
    #[arg(long)]
    marks_only: bool,
    /// |c| threshold for the degenerate regimes.
    #[arg(long, default_value_t = DEFAULT_C_THRESHOLD)]
    c_threshold: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RegimeArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    sigma2: f64,
    /// Override the computed c = epsilon / sqrt(mu) (accepts inf/-inf).
    #[arg(long)]
    c_override: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_C_THRESHOLD)]
    c_threshold: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EscapeLawArgs {
    #[arg(long)]
    c: f64,
    #[arg(long)]
    sigma2: f64,
    /// Grid end on the sqrt(mu)-scaled clock.
    #[arg(long, default_value_t = 6.0)]
    t_max: f64,
    /// Number of grid intervals.
    #[arg(long, default_value_t = 600)]
    steps: usize,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateYArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    /// Population cap; the path is flagged "exploded" when reached.
    #[arg(long, default_value_t = 1_000_000)]
    cap: u32,
    /// Master seed (mandatory: no silent nondeterminism).
    #[arg(long)]
    seed: u64,
    /// Stream index under the master seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MutationDeriveArgs {
    /// Model file whose pmf is the total-offspring law (marking ignored).
    model: PathBuf,
    #[arg(long)]
    pi: f64,
    /// Wild-law support bound; defaults to the total law's support.
    #[arg(long)]
    support_cap: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (JSON).
    #[arg(long)]
    experiment: PathBuf,
    /// Master seed; overrides the file, mandatory when the file has none.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for the result record.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Print the record as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Preset name (see --list).
    #[arg(long, conflicts_with = "file")]
    preset: Option<String>,
    /// Sweep definition file (JSON).
    #[arg(long)]
    file: Option<PathBuf>,
    /// List available presets and exit.
    #[arg(long)]
    list: bool,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

/// Seven significant digits for human-readable numbers.
fn sig7(x: f64) -> String {
    if x == 0.0 {
        return "0.000000".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..7).contains(&mag) {
        format!("{:.*}", (6 - mag).max(0) as usize, x)
    } else {
        format!("{:.6e}", x)
    }
}

fn main() -> ExitCode {
    // die quietly when the output pipe closes (e.g. `bgw ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::QExact(args) => cmd_q_exact(args),
        Command::Regime(args) => cmd_regime(args),
        Command::EscapeLaw(args) => cmd_escape_law(args),
        Command::SimulateY(args) => cmd_simulate_y(args),
        Command::MutationDerive(args) => cmd_mutation_derive(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_q_exact(args: QExactArgs) -> Result<(), Error> {
    let spec = ModelSpec::load(&args.model)?;
    let (law, rule) = spec.build()?;
    let q = pgf::solve_q_exact(&law, &rule, !args.marks_only)?;
    // the regime report is part of the contract: a degenerate instance
    // fails the whole command before anything is printed
    let report = classify_regime_with_threshold(
        law.epsilon(),
        rule.mu(),
        law.factorial_moment2(),
        None,
        args.c_threshold,
    )?;
    println!("model: {}", args.model.display());
    println!("Q modeled as {}", if args.marks_only { "marked lineages only" } else { "marked + surviving lineages" });
    println!("Q       = {}", sig7(q));
    println!("epsilon = {}", sig7(law.epsilon()));
    println!("mu      = {}", sig7(rule.mu()));
    println!("M       = {}", sig7(rule.marked_mean()));
    println!("sigma2  = {}", sig7(law.factorial_moment2()));
    print_regime(&report);
    Ok(())
}

fn print_regime(report: &bgw_skeleton::regime::RegimeReport) {
    println!("regime  = {}{}", report.regime, if report.via_threshold { " (via |c| threshold)" } else { "" });
    println!("c       = {}", sig7(report.c));
    println!("lambda  = {}", sig7(report.lambda));
    println!("tau     = {}", sig7(report.tau));
    println!("Q_asym  = {}", sig7(report.q_asymptotic));
}

fn cmd_regime(args: RegimeArgs) -> Result<(), Error> {
    let report = classify_regime_with_threshold(
        args.epsilon,
        args.mu,
        args.sigma2,
        args.c_override,
        args.c_threshold,
    )?;
    print_regime(&report);
    Ok(())
}

fn cmd_escape_law(args: EscapeLawArgs) -> Result<(), Error> {
    let law = EscapeLaw::new(args.c, args.sigma2)?;
    let rows = law.curve(args.t_max, args.steps)?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            limit::write_curve_csv(&rows, std::io::BufWriter::new(file))?;
            eprintln!(
                "escape-law curve: c={} sigma2={} rows={} -> {}",
                sig7(args.c),
                sig7(args.sigma2),
                rows.len(),
                path.display()
            );
        }
        None => {
            let stdout = std::io::stdout();
            limit::write_curve_csv(&rows, stdout.lock())?;
        }
    }
    Ok(())
}

fn cmd_simulate_y(args: SimulateYArgs) -> Result<(), Error> {
    let params = BirthDeathParams::new(args.lambda, args.rate)?;
    let mut rng = replica_rng(args.seed, args.stream);
    let path = limit::simulate_y(&params, args.t_end, args.cap, &mut rng)?;
    let mut csv = String::from("t,population\n");
    for (t, n) in &path.events {
        csv.push_str(&format!("{t:.17e},{n}\n"));
    }
    match &args.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    eprintln!(
        "lambda={} rate={} seed={} stream={} events={} final={}{}{}",
        sig7(args.lambda),
        sig7(args.rate),
        args.seed,
        args.stream,
        path.events.len(),
        path.final_population(),
        if path.exploded { " exploded" } else { "" },
        if path.extinct() { " extinct" } else { "" },
    );
    Ok(())
}

fn cmd_mutation_derive(args: MutationDeriveArgs) -> Result<(), Error> {
    let spec = ModelSpec::load(&args.model)?;
    let total_law = OffspringLaw::from_pmf(spec.pmf.clone())?;
    let cap = args.support_cap.unwrap_or(total_law.support_len());
    let model = mutation::derive_binomial(&total_law, args.pi, cap)?;
    println!("total law support: 0..={}", total_law.support_len() - 1);
    println!("pi      = {}", sig7(args.pi));
    println!("mu      = {}", sig7(model.rule.mu()));
    println!("M       = {}", sig7(model.rule.marked_mean()));
    println!("eta     = {}", sig7(model.eta()));
    println!("eps_w   = {}", sig7(model.wild_law.epsilon()));
    println!("k,p_wild(k),A(k)");
    for (k, (&p, &a)) in model
        .wild_law
        .pmf()
        .iter()
        .zip(model.rule.a())
        .enumerate()
    {
        println!("{k},{},{}", sig7(p), sig7(a));
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.experiment)?;
    let mut value: serde_json::Value = serde_json::from_str(&text)?;
    // flags override file values; a seed must come from one of the two
    if let Some(seed) = args.seed {
        value["seed"] = seed.into();
    } else if value.get("seed").is_none() {
        return Err(Error::InvalidExperiment(
            "stochastic command needs --seed (none in the experiment file)".into(),
        ));
    }
    if let Some(replicas) = args.replicas {
        value["replicas"] = replicas.into();
    }
    if let Some(horizon) = args.horizon {
        value["horizon"] = horizon.into();
    }
    if let Some(cap) = args.cap {
        value["node_cap"] = cap.into();
    }
    if let Some(workers) = args.workers {
        value["workers"] = workers.into();
    }
    let experiment: harness::Experiment = serde_json::from_value(value)?;
    let record = harness::run(&experiment)?;
    let (json_path, csv_path) = harness::persist(&record, &args.out)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&record)?);
    } else {
        println!("experiment {} ({})", record.experiment_id, record.target);
        println!(
            "accepted {} of {} attempts (rate {}), censored {}, cap hits {}",
            record.sampling.accepted,
            record.sampling.attempts,
            sig7(record.sampling.acceptance_rate),
            record.sampling.censored,
            record.sampling.cap_hits
        );
        for e in &record.estimates {
            match (e.oracle, e.z_score) {
                (Some(o), Some(z)) => println!(
                    "{}: {} +- {} | oracle {} | z = {}",
                    e.name,
                    sig7(e.value),
                    sig7(e.se),
                    sig7(o),
                    sig7(z)
                ),
                _ => println!("{}: {} +- {}", e.name, sig7(e.value), sig7(e.se)),
            }
        }
        for g in &record.gof_tests {
            println!(
                "{}: statistic {} p {} (n = {})",
                g.name,
                sig7(g.statistic),
                sig7(g.p_value),
                g.n
            );
        }
    }
    eprintln!("record: {} / {}", json_path.display(), csv_path.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    if args.list {
        for name in SweepSpec::preset_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let (spec, id) = match (&args.preset, &args.file) {
        (Some(name), None) => (SweepSpec::preset(name)?, name.clone()),
        (None, Some(path)) => (
            SweepSpec::load(path)?,
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sweep".into()),
        ),
        _ => {
            return Err(Error::InvalidExperiment(
                "pass exactly one of --preset or --file (or --list)".into(),
            ))
        }
    };
    let report = sweep::run_sweep(&spec)?;
    let (json_path, csv_path) = sweep::persist_sweep(&report, &id, &args.out)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("sweep {id}");
        println!("parameter,exact,asymptotic,ratio");
        for r in &report.rows {
            println!(
                "{},{},{},{}",
                sig7(r.parameter),
                sig7(r.exact),
                r.asymptotic.map(sig7).unwrap_or_default(),
                r.ratio.map(sig7).unwrap_or_default()
            );
        }
        if let Some(m) = report.monotone_approach {
            println!("monotone approach to 1: {m}");
        }
        if let (Some(slope), Some(expect)) = (report.loglog_slope, report.expected_slope) {
            println!("log-log slope: {} (expected {})", sig7(slope), sig7(expect));
        }
    }
    eprintln!("report: {} / {}", json_path.display(), csv_path.display());
    Ok(())
}
