//! `dpsynth` command-line entry point.
//!
//! Exit codes: 0 success, 1 partial failure (artifacts written), 2 invalid
//! input, 3 mechanism or runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpsynth::bench::{emit_report, run_plan_with_progress, ExperimentPlan};
use dpsynth::classifiers::DpClassifierConfig;
use dpsynth::mechanisms::{BudgetLedger, PrivacyBudget, Rng};
use dpsynth::mwem::{mwem_fit, MwemConfig};
use dpsynth::quail::{quail_delta_sweep_with_progress, quail_fit_sample, QuailConfig, SweepConfig};
use dpsynth::synth::SynthesizerConfig;
use dpsynth::tabular::{load_csv, save_csv, SchemaFile, TabularDataset};
use dpsynth::Error;

#[derive(Parser)]
#[command(name = "dpsynth", version, about = "Differentially private tabular synthesis and benchmarking")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a synthesizer and write synthetic rows.
    Synth(SynthArgs),
    /// Run QUAIL: split the budget between a DP classifier and a synthesizer.
    Quail(QuailArgs),
    /// Run an experiment plan and write a report directory.
    Bench(BenchArgs),
    /// Sweep QUAIL split factors and dataset sizes on generated data.
    QuailSweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Mwem,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClfKind {
    Gnb,
    Logreg,
}

#[derive(Args)]
struct InputArgs {
    /// Schema JSON file.
    #[arg(long)]
    schema: PathBuf,
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct MwemArgs {
    /// MWEM iterations.
    #[arg(long, default_value_t = 30)]
    iterations: usize,
    /// Size of the random query workload.
    #[arg(long, default_value_t = 200)]
    queries: usize,
}

impl MwemArgs {
    fn config(&self) -> MwemConfig {
        MwemConfig {
            iterations: self.iterations,
            queries_per_workload: self.queries,
            ..MwemConfig::default()
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "mwem")]
    synth: SynthKind,
    #[arg(long)]
    epsilon: f64,
    /// Number of rows to generate.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    mwem: MwemArgs,
}

#[derive(Args)]
struct QuailArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Categorical column the classifier predicts.
    #[arg(long)]
    target: String,
    #[arg(long)]
    epsilon: f64,
    /// Fraction of epsilon given to the synthesizer, in (0, 1).
    #[arg(long)]
    split: f64,
    #[arg(long, value_enum, default_value = "mwem")]
    synth: SynthKind,
    #[arg(long, value_enum, default_value = "gnb")]
    clf: ClfKind,
    /// L2 regularisation for --clf logreg.
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Ledger JSON path (defaults to `<out>.ledger.json`).
    #[arg(long)]
    ledger: Option<PathBuf>,
    #[command(flatten)]
    mwem: MwemArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment plan JSON.
    plan: PathBuf,
    /// Comma-separated epsilons overriding the plan.
    #[arg(long, value_parser = float_list)]
    epsilons: Option<FloatList>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report directory (overrides the plan's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Total budgets; one grid is written per value.
    #[arg(long, value_parser = float_list, default_value = "1.0,3.0,10.0")]
    epsilon: FloatList,
    #[arg(long, value_parser = float_list, default_value = "0.1,0.3,0.5,0.7,0.9")]
    splits: FloatList,
    #[arg(long, value_parser = size_list, default_value = "10000,20000,30000,40000,50000")]
    sizes: SizeList,
    #[arg(long, default_value_t = 25)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone)]
struct FloatList(Vec<f64>);

#[derive(Clone)]
struct SizeList(Vec<usize>);

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Err("list is empty".into());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("cannot parse `{}`", x.trim())))
        .collect()
}

fn float_list(s: &str) -> Result<FloatList, String> {
    parse_list(s).map(FloatList)
}

fn size_list(s: &str) -> Result<SizeList, String> {
    parse_list(s).map(SizeList)
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_validation() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

/// Input problems (unreadable files included) are validation failures.
fn input_error(e: Error) -> Failure {
    match e {
        Error::Io(_) => invalid(e.to_string()),
        other => other.into(),
    }
}

fn require_positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("--{name} must be a positive number, got {v}")))
    }
}

fn load_input(input: &InputArgs, target: Option<&str>) -> Result<TabularDataset, Failure> {
    let file = SchemaFile::load(&input.schema).map_err(input_error)?;
    let schema = file.schema().map_err(input_error)?;
    let target = target.map(str::to_owned).or(file.target.clone());
    if let Some(t) = &target {
        if schema.index_of(t).is_none() {
            return Err(invalid(format!("--target `{t}` is not a column of the schema")));
        }
    }
    load_csv(&input.data, &schema, target.as_deref()).map_err(input_error)
}

fn print_ledger(ledger: &BudgetLedger) {
    for s in ledger.spends() {
        eprintln!("ledger: {} spent epsilon {}", s.label, s.amount.epsilon);
    }
    eprintln!(
        "ledger: total {} spent {} remaining {}",
        ledger.total().epsilon,
        ledger.spent().epsilon,
        ledger.remaining().epsilon
    );
}

fn cmd_synth(a: SynthArgs) -> Result<u8, Failure> {
    require_positive("epsilon", a.epsilon)?;
    let SynthKind::Mwem = a.synth;
    let cfg = a.mwem.config();
    cfg.validate()?;
    let data = load_input(&a.input, None)?;
    let rng = Rng::new(a.seed);
    let mut ledger = BudgetLedger::new(PrivacyBudget::pure(a.epsilon)?);
    let fit = mwem_fit(&data, a.epsilon, &cfg, &mut ledger, &mut rng.child("fit"))?;
    let out = fit.sample(a.n, &mut rng.child("sample"))?;
    save_csv(&out, &a.out)?;
    print_ledger(&ledger);
    println!("{}", a.out.display());
    Ok(0)
}

fn ledger_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".ledger.json");
    PathBuf::from(s)
}

fn cmd_quail(a: QuailArgs) -> Result<u8, Failure> {
    require_positive("epsilon", a.epsilon)?;
    if !(a.split > 0.0 && a.split < 1.0) {
        return Err(invalid(format!("--split must lie strictly between 0 and 1, got {}", a.split)));
    }
    let SynthKind::Mwem = a.synth;
    let mwem = a.mwem.config();
    mwem.validate()?;
    let classifier = match a.clf {
        ClfKind::Gnb => DpClassifierConfig::Gnb,
        ClfKind::Logreg => {
            require_positive("lambda", a.lambda)?;
            DpClassifierConfig::LogReg { lambda: a.lambda }
        }
    };
    let data = load_input(&a.input, Some(&a.target))?;
    let cfg = QuailConfig {
        synthesizer: SynthesizerConfig::Mwem(mwem),
        classifier,
        ..QuailConfig::new(a.split, a.n)
    };
    let result = quail_fit_sample(&data, &a.target, a.epsilon, &cfg, &Rng::new(a.seed))?;
    save_csv(&result.synthetic, &a.out)?;
    let ledger_file = a.ledger.clone().unwrap_or_else(|| ledger_path(&a.out));
    let doc = serde_json::json!({
        "total_epsilon": a.epsilon,
        "split": a.split,
        "epsilon_synthesizer": result.synthesizer_budget.epsilon,
        "epsilon_classifier": result.classifier_budget.epsilon,
        "spent_epsilon": result.ledger.spent().epsilon,
        "exhausted": result.ledger.is_exhausted(),
        "spends": result.ledger.spends(),
    });
    std::fs::write(&ledger_file, serde_json::to_string_pretty(&doc).map_err(Error::from)?)
        .map_err(Error::from)?;
    print_ledger(&result.ledger);
    println!("{}", a.out.display());
    println!("{}", ledger_file.display());
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> Result<u8, Failure> {
    let mut plan = ExperimentPlan::load(&a.plan).map_err(input_error)?;
    if let Some(FloatList(e)) = a.epsilons {
        plan.epsilons = e;
    }
    if let Some(r) = a.runs {
        plan.runs = r;
    }
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    if let Some(o) = a.out {
        plan.output_dir = Some(o);
    }
    plan.validate()?;
    let dir = plan
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("bench_out"));
    let report = run_plan_with_progress(&plan, |done, total| {
        eprintln!("cells {done}/{total}");
    })?;
    for path in emit_report(&report, &dir)? {
        println!("{}", path.display());
    }
    let failed = report.failed_cells();
    if failed > 0 {
        eprintln!("{failed} cell(s) failed; see report.json");
        return Ok(1);
    }
    Ok(0)
}

fn cmd_sweep(a: SweepArgs) -> Result<u8, Failure> {
    if a.runs == 0 {
        return Err(invalid("--runs must be at least 1"));
    }
    for &e in &a.epsilon.0 {
        require_positive("epsilon", e)?;
    }
    let master = Rng::new(a.seed);
    for &e in &a.epsilon.0 {
        let cfg = SweepConfig::new(e, a.sizes.0.clone(), a.splits.0.clone(), a.runs);
        cfg.validate()?;
        let grid = quail_delta_sweep_with_progress(&cfg, &master.child(&format!("epsilon{e}")), |done, total| {
            eprintln!("epsilon {e}: groups {done}/{total}");
        })?;
        for path in grid.emit(&a.out)? {
            println!("{}", path.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .expect("thread pool is configured once");
    }
    let outcome = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Quail(a) => cmd_quail(a),
        Command::Bench(a) => cmd_bench(a),
        Command::QuailSweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
