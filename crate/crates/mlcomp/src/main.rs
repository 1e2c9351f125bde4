use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use mlcomp::config::{parse_weights, ConfigError, FileConfig};
use mlcomp::dataset::{extract_dataset, load_corpus, read_dataset, write_dataset};
use mlcomp::deploy::optimize_program;
use mlcomp::evalrep::{emit_report, evaluate_policy, EvalConfig};
use mlcomp::features::{extract_features, feature_manifest};
use mlcomp::pe::{load_pe, model_search, save_pe, PeSearchConfig};
use mlcomp::policy::{load_policy, save_policy};
use mlcomp::reinforce::{train_policy, PssTrainConfig};
use serde::Serialize;
use std::fmt::Display;
use std::path::PathBuf;
use tir::exec::DEFAULT_FUEL;
use tir::platform::load_platform;

#[derive(Parser)]
#[command(
    name = "mlcomp",
    version,
    about = "Phase-ordering toolkit: dataset extraction, estimator search, policy training, deployment, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Profile random phase sequences over a corpus into a dataset
    Extract(ExtractArgs),
    /// Print the static feature vector of one program
    Features(FeaturesArgs),
    /// Search preprocessor and regressor configurations for an estimator
    TrainPe(TrainPeArgs),
    /// Train the phase selection policy
    TrainPss(TrainPssArgs),
    /// Optimize one program with a trained policy
    Optimize(OptimizeArgs),
    /// Compare the policy against baselines with ground-truth profiling
    Eval(EvalArgs),
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of .tir programs
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Platform cost-model file
    #[arg(long)]
    platform: Option<PathBuf>,
    /// Output dataset (line-delimited JSON)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random sequences per program
    #[arg(long)]
    sequences: Option<u64>,
    /// Length cap per random sequence
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Interpreter instruction budget per run
    #[arg(long)]
    fuel: Option<u64>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Program to analyze
    #[arg(long)]
    program: Option<PathBuf>,
    /// Emit JSON instead of key = value lines
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TrainPeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset produced by `extract`
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output estimator bundle
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accuracy threshold that stops the search early
    #[arg(long)]
    thr: Option<f64>,
    /// Hyperparameter trials per model pair
    #[arg(long)]
    trials: Option<usize>,
    /// Training fraction of the dataset split
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainPssArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Estimator bundle that scores episode steps
    #[arg(long)]
    pe: Option<PathBuf>,
    /// Platform file; supplies the exact code-size table
    #[arg(long)]
    platform: Option<PathBuf>,
    /// Output policy file
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Changed-phase budget per episode
    #[arg(long)]
    max_len: Option<usize>,
    /// Consecutive unchanged applications that end an episode
    #[arg(long)]
    max_inactive: Option<usize>,
    /// Weight layers in the network
    #[arg(long)]
    layers: Option<usize>,
    /// Hidden layer width
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Objective weights time,energy,size
    #[arg(long)]
    weights: Option<String>,
    /// Degradation penalty factor
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    program: Option<PathBuf>,
    /// Trained policy file
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Write the optimized program here
    #[arg(long)]
    emit: Option<PathBuf>,
    /// Write a JSON run report here
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    max_inactive: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    platform: Option<PathBuf>,
    /// Per-row CSV output
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Rows-plus-summary JSON output
    #[arg(long)]
    json: Option<PathBuf>,
    /// Random-sequence pool size behind the random baselines
    #[arg(long)]
    k: Option<usize>,
    /// Length cap per random pool sequence
    #[arg(long)]
    random_max_len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fuel: Option<u64>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    max_inactive: Option<usize>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> CliError {
        match e {
            ConfigError::Io(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn rt(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                std::process::exit(0);
            }
            _ => {
                eprint!("{e}");
                std::process::exit(1);
            }
        },
    };
    let result = match cli.cmd {
        Cmd::Extract(a) => run_extract(a),
        Cmd::Features(a) => run_features(a),
        Cmd::TrainPe(a) => run_train_pe(a),
        Cmd::TrainPss(a) => run_train_pss(a),
        Cmd::Optimize(a) => run_optimize(a),
        Cmd::Eval(a) => run_eval(a),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            std::process::exit(2);
        }
    }
}

fn run_extract(a: ExtractArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load_opt(a.config.as_deref())?;
    let corpus_dir = cfg.require_path(a.corpus, "corpus")?;
    let platform_path = cfg.require_path(a.platform, "platform")?;
    let out = cfg.require_path(a.out, "out")?;
    let sequences = cfg.resolve(a.sequences, "sequences", 30u64)?;
    let max_len = cfg.resolve(a.max_len, "max_len", 16usize)?;
    let seed = cfg.resolve_seed(a.seed)?;
    let fuel = cfg.resolve(a.fuel, "fuel", DEFAULT_FUEL)?;

    let corpus = load_corpus(&corpus_dir).map_err(rt)?;
    let platform = load_platform(&platform_path).map_err(rt)?;
    let d = extract_dataset(&corpus, &platform, sequences, max_len, seed, fuel).map_err(rt)?;
    write_dataset(&d, &out).map_err(rt)?;
    println!(
        "extracted {} samples ({} trapped runs dropped) from {} programs on '{}' into {}",
        d.samples.len(),
        d.dropped_trapped,
        d.corpus.len(),
        d.platform_name,
        out.display()
    );
    Ok(())
}

fn run_features(a: FeaturesArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load_opt(a.config.as_deref())?;
    let program = cfg.require_path(a.program, "program")?;
    let text = std::fs::read_to_string(&program).map_err(rt)?;
    let module = tir::parse_module(&text).map_err(rt)?;
    let f = extract_features(&module);
    if a.json {
        #[derive(Serialize)]
        struct Entry<'a> {
            index: usize,
            name: &'a str,
            value: f64,
        }
        let entries: Vec<Entry> = feature_manifest()
            .iter()
            .map(|info| Entry {
                index: info.index,
                name: info.name,
                value: f.values[info.index],
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&entries).map_err(rt)?);
    } else {
        for info in feature_manifest() {
            println!("{} = {}", info.name, f.values[info.index]);
        }
    }
    Ok(())
}

fn run_train_pe(a: TrainPeArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load_opt(a.config.as_deref())?;
    let data = cfg.require_path(a.data, "data")?;
    let out = cfg.require_path(a.out, "out")?;
    let defaults = PeSearchConfig::default();
    let search = PeSearchConfig {
        accuracy_thr: cfg.resolve(a.thr, "thr", defaults.accuracy_thr)?,
        trials_per_pair: cfg.resolve(a.trials, "trials", defaults.trials_per_pair)?,
        split_fraction: cfg.resolve(a.split, "split", defaults.split_fraction)?,
        seed: cfg.resolve_seed(a.seed)?,
        ..defaults
    };

    let dataset = read_dataset(&data).map_err(rt)?;
    let bundle = model_search(&dataset, &search).map_err(rt)?;
    save_pe(&bundle, &out).map_err(rt)?;
    let best = &bundle.search_log[bundle.best_trial];
    println!(
        "searched {} trials; best #{} {}+{} ({}) accuracy {:.6}",
        bundle.search_log.len(),
        best.trial,
        best.preprocessor,
        best.regressor,
        if best.hyperparams.is_empty() {
            "no hyperparameters"
        } else {
            &best.hyperparams
        },
        best.accuracy.unwrap_or(f64::NAN),
    );
    for (metric, m) in &bundle.test_metrics {
        println!("  {metric}: test mape {:.6}, max ape {:.6}", m.mape, m.max_ape);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn run_train_pss(a: TrainPssArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load_opt(a.config.as_deref())?;
    let corpus_dir = cfg.require_path(a.corpus, "corpus")?;
    let pe_path = cfg.require_path(a.pe, "pe")?;
    let platform_path = cfg.require_path(a.platform, "platform")?;
    let out = cfg.require_path(a.out, "out")?;
    let defaults = PssTrainConfig::default();
    let weights = match a.weights.as_deref().or_else(|| cfg.get("weights")) {
        Some(raw) => parse_weights(raw).map_err(CliError::Usage)?,
        None => defaults.weights,
    };
    let train = PssTrainConfig {
        num_episodes: cfg.resolve(a.episodes, "episodes", defaults.num_episodes)?,
        batch_size: cfg.resolve(a.batch, "batch", defaults.batch_size)?,
        learning_rate: cfg.resolve(a.lr, "lr", defaults.learning_rate)?,
        max_sequence_len: cfg.resolve(a.max_len, "max_len", defaults.max_sequence_len)?,
        max_inactive_len: cfg.resolve(a.max_inactive, "max_inactive", defaults.max_inactive_len)?,
        n_layers: cfg.resolve(a.layers, "layers", defaults.n_layers)?,
        hidden_size: cfg.resolve(a.hidden, "hidden", defaults.hidden_size)?,
        gamma: cfg.resolve(a.gamma, "gamma", defaults.gamma)?,
        weights,
        kappa: cfg.resolve(a.kappa, "kappa", defaults.kappa)?,
        seed: cfg.resolve_seed(a.seed)?,
    };

    let corpus = load_corpus(&corpus_dir).map_err(rt)?;
    let pe = load_pe(&pe_path).map_err(rt)?;
    let platform = load_platform(&platform_path).map_err(rt)?;
    if pe.platform_name != platform.name {
        return Err(CliError::Runtime(format!(
            "estimator was trained for platform '{}', got '{}'",
            pe.platform_name, platform.name
        )));
    }
    let (policy, log) = train_policy(&corpus, &pe, &platform, &train).map_err(rt)?;
    save_policy(&policy, &out).map_err(rt)?;
    let mean = |s: &[mlcomp::reinforce::EpisodeLog]| {
        s.iter().map(|l| l.episode_return).sum::<f64>() / s.len().max(1) as f64
    };
    let head = &log[..log.len().min(50)];
    let tail = &log[log.len().saturating_sub(50)..];
    println!(
        "trained {} episodes; mean return first {} = {:.6}, last {} = {:.6}",
        log.len(),
        head.len(),
        mean(head),
        tail.len(),
        mean(tail)
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn run_optimize(a: OptimizeArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load_opt(a.config.as_deref())?;
    let program = cfg.require_path(a.program, "program")?;
    let policy_path = cfg.require_path(a.policy, "policy")?;
    let emit = match a.emit {
        Some(p) => Some(p),
        None => cfg.get("emit").map(PathBuf::from),
    };
    let report = match a.report {
        Some(p) => Some(p),
        None => cfg.get("report").map(PathBuf::from),
    };
    let max_len = cfg.resolve(a.max_len, "max_len", 128usize)?;
    let max_inactive = cfg.resolve(a.max_inactive, "max_inactive", 8usize)?;

    let text = std::fs::read_to_string(&program).map_err(rt)?;
    let module = tir::parse_module(&text).map_err(rt)?;
    let policy = load_policy(&policy_path).map_err(rt)?;
    let (optimized, _, run) =
        optimize_program(&module, &policy, max_len, max_inactive).map_err(rt)?;

    if let Some(path) = emit {
        std::fs::write(&path, tir::print_module(&optimized)).map_err(rt)?;
    }
    if let Some(path) = report {
        #[derive(Serialize)]
        struct FileReport<'a> {
            program: &'a str,
            #[serde(flatten)]
            run: &'a mlcomp::deploy::OptimizeReport,
        }
        let id = program
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let json = serde_json::to_string_pretty(&FileReport {
            program: &id,
            run: &run,
        })
        .map_err(rt)?;
        std::fs::write(&path, json + "\n").map_err(rt)?;
    }
    println!(
        "applied [{}] in {} attempts; {} -> {} instructions",
        run.applied.join(", "),
        run.attempts,
        run.initial_instructions,
        run.final_instructions
    );
    Ok(())
}

fn run_eval(a: EvalArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load_opt(a.config.as_deref())?;
    let corpus_dir = cfg.require_path(a.corpus, "corpus")?;
    let policy_path = cfg.require_path(a.policy, "policy")?;
    let platform_path = cfg.require_path(a.platform, "platform")?;
    let csv = cfg.require_path(a.csv, "csv")?;
    let json = cfg.require_path(a.json, "json")?;
    let defaults = EvalConfig::default();
    let eval_cfg = EvalConfig {
        k_random: cfg.resolve(a.k, "k", defaults.k_random)?,
        random_max_len: cfg.resolve(a.random_max_len, "random_max_len", defaults.random_max_len)?,
        seed: cfg.resolve_seed(a.seed)?,
        fuel: cfg.resolve(a.fuel, "fuel", defaults.fuel)?,
        max_sequence_len: cfg.resolve(a.max_len, "max_len", defaults.max_sequence_len)?,
        max_inactive_len: cfg.resolve(a.max_inactive, "max_inactive", defaults.max_inactive_len)?,
    };

    let corpus = load_corpus(&corpus_dir).map_err(rt)?;
    let policy = load_policy(&policy_path).map_err(rt)?;
    let platform = load_platform(&platform_path).map_err(rt)?;
    let (rows, summary) = evaluate_policy(&corpus, &policy, &platform, &eval_cfg).map_err(rt)?;
    emit_report(&rows, &summary, &csv, &json).map_err(rt)?;

    let show = |v: Option<f64>| match v {
        Some(x) => format!("{x:.4}"),
        None => "n/a".to_string(),
    };
    println!(
        "evaluated {} programs; geometric-mean relatives (time/energy/size):",
        summary.programs
    );
    for vs in &summary.variants {
        println!(
            "  {:<14} {} / {} / {}   ({} profiled)",
            vs.variant,
            show(vs.geomean_rel_time),
            show(vs.geomean_rel_energy),
            show(vs.geomean_rel_size),
            vs.rows_profiled
        );
    }
    println!(
        "policy degrades nothing on {}/{} programs",
        summary.policy_no_degradation, summary.programs
    );
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}
