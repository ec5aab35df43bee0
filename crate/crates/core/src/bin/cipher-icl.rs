//! Command-line entry point: corpus preparation, training, evaluation and
//! ablation grids.
//!
//! Exit status is 0 on success, 1 on a runtime failure and 2 on a usage error.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use cipher_icl::baselines::{Baseline, BaselineKind};
use cipher_icl::config::Settings;
use cipher_icl::corpus::{letter_frequency_order, LetterStream};
use cipher_icl::eval::{accuracy_curve, curves_csv, write_curves_csv, Decoder, EvalSetting, MessageDist};
use cipher_icl::model::load_checkpoint;
use cipher_icl::prompt::SchemeConfig;
use cipher_icl::training::{self, AblationGrid, TrainConfig, Trainer, CHECKPOINT_FILE};
use cipher_icl::{load_bundled_corpus, Error};

const CACHE_ENV: &str = "CIPHER_ICL_CACHE";
const DEFAULT_CACHE_DIR: &str = ".cipher-icl-cache";
const CACHE_FILE: &str = "corpus.bin";

#[derive(Parser)]
#[command(name = "cipher-icl", version, about = "Train and evaluate in-context cipher decryption")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean text files into a letter cache.
    Prep(PrepArgs),
    /// Train a model.
    Train(TrainArgs),
    /// Write accuracy-versus-examples curves as CSV.
    Eval(EvalArgs),
    /// Train one model per grid value.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct PrepArgs {
    /// Text files, concatenated in the order given
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Cache file to write (default: $CIPHER_ICL_CACHE/corpus.bin)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base settings: paper or desk
    #[arg(long)]
    preset: Option<String>,
    /// mono, vig:<len>, vig_var or vig_var:<min>-<max>
    #[arg(long)]
    scheme: Option<String>,
    /// Prompts per step
    #[arg(long)]
    batch: Option<String>,
    /// Optimizer steps
    #[arg(long)]
    steps: Option<String>,
    /// Learning rate
    #[arg(long)]
    lr: Option<String>,
    /// Weight decay
    #[arg(long)]
    wd: Option<String>,
    /// Context length in tokens
    #[arg(long)]
    context: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Corpus text or cache file (default: cache, else the bundled corpus)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Any other config key, as key=value; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Run directory for config, log and checkpoint
    #[arg(long, default_value = "run")]
    out: PathBuf,
    /// Continue the run in this directory (`--steps` may raise its budget)
    #[arg(long, conflicts_with_all = ["config", "preset", "scheme", "batch", "lr", "wd", "context", "seed", "set"])]
    resume: Option<PathBuf>,
    /// Print every log record instead of every validation record
    #[arg(long)]
    verbose: bool,
    /// Print the resolved configuration and exit
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint file or run directory
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// mono_naive, mono_freq, vig_naive, vig_freq or vig_search; repeatable
    #[arg(long)]
    baseline: Vec<String>,
    /// corpus or uniform
    #[arg(long, default_value = "corpus")]
    dist: String,
    /// mono, vig or vig_var (default: chosen by the first decoder)
    #[arg(long)]
    scheme: Option<String>,
    /// Keyword length for vig, or <min>-<max> for vig_var
    #[arg(long)]
    key_len: Option<String>,
    #[arg(long, default_value_t = 500)]
    n_prompts: usize,
    /// Largest number of in-context examples (default: 100, or what the model context allows)
    #[arg(long)]
    max_examples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus text or cache file
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output CSV (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    /// batch=16,32,64,96 or context=128,256,512,2048
    #[arg(long)]
    grid: String,
    #[command(flatten)]
    config: ConfigArgs,
    /// Parent directory of the per-run directories
    #[arg(long, default_value = "ablation")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV).map_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR), PathBuf::from)
}

/// Explicit path, else the prepared cache, else the bundled corpus.
fn resolve_corpus(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        let cached = cache_dir().join(CACHE_FILE);
        cached.exists().then_some(cached)
    })
}

fn load_corpus(path: Option<&Path>) -> CliResult<LetterStream> {
    Ok(match path {
        Some(p) => LetterStream::load(p)?,
        None => load_bundled_corpus()?,
    })
}

fn prep(a: PrepArgs) -> CliResult {
    let stream = LetterStream::from_text_files(&a.inputs)?;
    let out = a.out.unwrap_or_else(|| cache_dir().join(CACHE_FILE));
    stream.save_cache(&out)?;
    let order = letter_frequency_order(stream.letters());
    let top: Vec<String> = order.ranking()[..5].iter().map(|l| l.to_char().to_string()).collect();
    println!("letters: {}", stream.len());
    println!("split: {}", stream.split_boundary());
    println!("top5: {}", top.join(" "));
    println!("wrote {}", out.display());
    Ok(())
}

impl ConfigArgs {
    fn settings(&self) -> CliResult<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::new(),
        };
        let flags = [
            ("preset", &self.preset),
            ("scheme", &self.scheme),
            ("batch", &self.batch),
            ("steps", &self.steps),
            ("lr", &self.lr),
            ("wd", &self.wd),
            ("context", &self.context),
            ("seed", &self.seed),
        ];
        let mut cli = Settings::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cli.set(k.trim(), v.trim());
        }
        for (k, v) in flags {
            if let Some(v) = v {
                cli.set(k, v.as_str());
            }
        }
        if let Some(p) = &self.corpus {
            cli.set("corpus", p.display().to_string());
        }
        s = s.merged(&cli);
        if s.get("corpus").is_none() {
            if let Some(p) = resolve_corpus(None) {
                s.set("corpus", p.display().to_string());
            }
        }
        Ok(s)
    }

    fn train_config(&self) -> CliResult<TrainConfig> {
        Ok(TrainConfig::from_settings(&self.settings()?)?)
    }
}

fn print_record(r: &training::TrainLogRecord, verbose: bool) {
    if verbose || r.val_loss.is_some() {
        eprintln!("{r}");
    }
}

fn train(a: TrainArgs) -> CliResult {
    if let Some(dir) = &a.resume {
        let config = TrainConfig::from_settings(&Settings::load(dir.join(training::CONFIG_FILE))?)?;
        let stream = training::load_corpus(&config)?;
        let steps = a.config.steps.as_deref().map(str::parse).transpose().map_err(|_| {
            Failure::Usage("--steps must be a non-negative integer".into())
        })?;
        println!("resuming {}", dir.display());
        let out = training::resume(dir, &stream, steps, |r| print_record(r, a.verbose))
            .map_err(|e| resumable(e, dir))?;
        if let Some(r) = out.records.last() {
            println!("final: {r}");
        }
        return Ok(());
    }
    let config = a.config.train_config()?;
    println!("config: {config}");
    if a.dry_run {
        return Ok(());
    }
    let stream = training::load_corpus(&config)?;
    let mut t = Trainer::new(config, &stream)?;
    let records = t
        .run(Some(&a.out), |r| print_record(r, a.verbose))
        .map_err(|e| resumable(e, &a.out))?;
    if let Some(r) = records.last() {
        println!("final: {r}");
    }
    println!("wrote {}", a.out.join(CHECKPOINT_FILE).display());
    Ok(())
}

fn resumable(e: Error, dir: &Path) -> Failure {
    match e {
        Error::InvalidArgument(_) => Failure::from(e),
        e => Failure::Runtime(format!(
            "{e}\nlatest checkpoint kept in {}; continue with `cipher-icl train --resume {}`",
            dir.display(),
            dir.display()
        )),
    }
}

fn scheme_for(a: &EvalArgs, first: Option<BaselineKind>) -> CliResult<SchemeConfig> {
    let name = match (&a.scheme, first) {
        (Some(s), _) => s.clone(),
        (None, Some(BaselineKind::VigNaive | BaselineKind::VigFreq)) => "vig".into(),
        (None, Some(BaselineKind::VigSearch)) => "vig_var".into(),
        (None, _) => "mono".into(),
    };
    let spec = match (name.as_str(), &a.key_len) {
        ("vig", Some(l)) => format!("vig:{l}"),
        ("vig", None) => "vig:8".into(),
        ("vig_var", Some(r)) => format!("vig_var:{r}"),
        ("mono", Some(_)) => return Err(Failure::Usage("--key-len does not apply to mono".into())),
        _ => name.clone(),
    };
    Ok(spec.parse()?)
}

fn eval(a: EvalArgs) -> CliResult {
    let kinds = a
        .baseline
        .iter()
        .map(|b| b.parse::<BaselineKind>())
        .collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() && a.checkpoint.is_none() {
        return Err(Failure::Usage("give --checkpoint or at least one --baseline".into()));
    }
    let dist: MessageDist = a.dist.parse()?;
    let scheme = scheme_for(&a, if a.checkpoint.is_some() { None } else { kinds.first().copied() })?;

    let corpus_path = resolve_corpus(a.corpus.as_deref());
    let needs_corpus = dist == MessageDist::Corpus || kinds.contains(&BaselineKind::MonoFreq);
    let stream = needs_corpus.then(|| load_corpus(corpus_path.as_deref())).transpose()?;

    let mut decoders = Vec::new();
    if let Some(p) = &a.checkpoint {
        let file = if p.is_dir() { p.join(CHECKPOINT_FILE) } else { p.clone() };
        decoders.push(Decoder::Model(Arc::new(load_checkpoint(&file)?.params)));
    }
    for k in kinds {
        decoders.push(Decoder::Baseline(match k {
            BaselineKind::MonoNaive => Baseline::MonoNaive,
            BaselineKind::MonoFreq => {
                Baseline::MonoFreq(letter_frequency_order(stream.as_ref().expect("loaded above").letters()))
            }
            BaselineKind::VigNaive => Baseline::VigNaive,
            BaselineKind::VigFreq => Baseline::VigFreq,
            BaselineKind::VigSearch => Baseline::VigSearch(4..=32),
        }));
    }
    let max_examples = a.max_examples.unwrap_or_else(|| {
        decoders
            .iter()
            .filter_map(|d| match d {
                Decoder::Model(p) => Some((p.config().context_length - 1) / 2),
                Decoder::Baseline(_) => None,
            })
            .fold(100, usize::min)
    });

    let mut curves = Vec::new();
    for decoder in decoders {
        let setting = EvalSetting { scheme, dist, decoder, n_prompts: a.n_prompts, max_examples, seed: a.seed };
        let curve = accuracy_curve(&setting, stream.as_ref())?;
        curves.push((setting.labels(), curve));
    }
    match &a.out {
        Some(p) => {
            write_curves_csv(&curves, p)?;
            eprintln!("wrote {}", p.display());
        }
        None => {
            let text = curves_csv(&curves)?;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Runtime(e.to_string()))?;
        }
    }
    Ok(())
}

fn ablate(a: AblateArgs) -> CliResult {
    let grid: AblationGrid = a.grid.parse()?;
    let base = a.config.train_config()?;
    println!("grid: {grid}");
    println!("base: {base}");
    let stream = training::load_corpus(&base)?;
    let runs = training::run_ablation(&base, &grid, &stream, &a.out, |v, r| {
        if r.val_loss.is_some() {
            eprintln!("[{}={v}] {r}", grid.axis.name());
        }
    })?;
    let mut failed = 0;
    for r in &runs {
        match &r.outcome {
            Ok(loss) => println!("{}: ok final_loss={loss:.6}", r.dir.display()),
            Err(e) => {
                failed += 1;
                println!("{}: failed: {e}", r.dir.display());
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} runs failed", runs.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Prep(a) => prep(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
