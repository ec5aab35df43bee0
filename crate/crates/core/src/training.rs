//! Training from scratch on fresh random prompts, validation loss, and
//! ablation grids.
//!
//! Every step samples `batch_size` new prompts (new key, new message window
//! from the training split) and applies one AdamW update with a constant
//! learning rate. Prompt `i` of step `s` is drawn from the substream
//! `(seed, TRAIN, s, i)`, so a run resumed from a checkpoint continues
//! exactly as the uninterrupted run would have.
//!
//! A run directory holds:
//!
//! - `config.txt`: the full configuration in `key = value` form
//! - `train.log`: one [`TrainLogRecord`] per step
//! - `model.ckpt`: latest checkpoint, parameters plus optimizer state

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::config::Settings;
use crate::corpus::{LetterStream, Split};
use crate::error::{Error, Result};
use crate::model::{
    adamw_step, batch_loss, batch_loss_and_grad, load_checkpoint, save_checkpoint, AdamWConfig, Checkpoint,
    ModelConfig, ModelParams, OptimizerState,
};
use crate::prompt::{build_training_item, sample_prompt, sample_training_prompt, MessageSource, SchemeConfig, TrainingItem};
use crate::rng::{domain, substream};

pub const CONFIG_FILE: &str = "config.txt";
pub const LOG_FILE: &str = "train.log";
pub const CHECKPOINT_FILE: &str = "model.ckpt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Full-size model and budget: batch 64, 20k steps.
    Paper,
    /// Two-layer model, batch 16, 2k steps; minutes on a CPU.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::invalid(format!("unknown preset {s:?} (expected paper or desk)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub scheme: SchemeConfig,
    pub model: ModelConfig,
    pub batch_size: usize,
    pub steps: u64,
    pub optimizer: AdamWConfig,
    pub seed: u64,
    /// Steps between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: u64,
    /// Steps between validation measurements; 0 disables them.
    pub val_interval: u64,
    pub val_prompts: usize,
    /// Text or cache file; `None` means the bundled corpus.
    pub corpus: Option<PathBuf>,
}

impl TrainConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => TrainConfig {
                scheme: SchemeConfig::Mono,
                model: ModelConfig::paper(),
                batch_size: 64,
                steps: 20_000,
                optimizer: AdamWConfig::default(),
                seed: 0,
                checkpoint_interval: 1000,
                val_interval: 500,
                val_prompts: 64,
                corpus: None,
            },
            Preset::Desk => TrainConfig {
                scheme: SchemeConfig::Mono,
                model: ModelConfig::desk(),
                batch_size: 16,
                steps: 2000,
                optimizer: AdamWConfig::default(),
                seed: 0,
                checkpoint_interval: 500,
                val_interval: 100,
                val_prompts: 32,
                corpus: None,
            },
        }
    }

    pub fn paper() -> Self {
        Self::preset(Preset::Paper)
    }

    pub fn desk() -> Self {
        Self::preset(Preset::Desk)
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.model.validate()?;
        let ctx = self.model.context_length;
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        if ctx < 4 || !ctx.is_multiple_of(2) {
            return Err(Error::invalid(format!("context length {ctx} must be even and at least 4")));
        }
        if self.val_interval > 0 && self.val_prompts == 0 {
            return Err(Error::invalid("validation needs at least one prompt"));
        }
        let o = &self.optimizer;
        let finite = [o.lr, o.weight_decay, o.beta1, o.beta2, o.eps].iter().all(|x| x.is_finite());
        if !finite || o.lr < 0.0 || o.weight_decay < 0.0 || !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) || o.eps <= 0.0 {
            return Err(Error::invalid(format!("bad optimizer settings {o:?}")));
        }
        Ok(())
    }

    /// Sets one field from its `key = value` spelling. Unknown keys are errors.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::invalid(format!("bad value {v:?} for {key}")))
        }
        match key {
            "scheme" => self.scheme = value.parse()?,
            "batch" => self.batch_size = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "lr" => self.optimizer.lr = num(key, value)?,
            "wd" => self.optimizer.weight_decay = num(key, value)?,
            "beta1" => self.optimizer.beta1 = num(key, value)?,
            "beta2" => self.optimizer.beta2 = num(key, value)?,
            "eps" => self.optimizer.eps = num(key, value)?,
            "layers" => self.model.layers = num(key, value)?,
            "heads" => self.model.heads = num(key, value)?,
            "embed_dim" => self.model.embed_dim = num(key, value)?,
            "context" => self.model.context_length = num(key, value)?,
            "tied" => self.model.tied_embeddings = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "checkpoint_interval" => self.checkpoint_interval = num(key, value)?,
            "val_interval" => self.val_interval = num(key, value)?,
            "val_prompts" => self.val_prompts = num(key, value)?,
            "corpus" => self.corpus = (!value.is_empty() && value != "-").then(|| PathBuf::from(value)),
            _ => return Err(Error::invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Starts from `preset` (desk when absent) and applies every other key.
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let preset = s.get("preset").map(str::parse).transpose()?.unwrap_or(Preset::Desk);
        let mut c = Self::preset(preset);
        for (k, v) in s.iter().filter(|(k, _)| *k != "preset") {
            c.apply(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_settings(&self) -> Settings {
        let mut s = Settings::new();
        for (k, v) in self.fields() {
            s.set(k, v);
        }
        s
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let o = &self.optimizer;
        let m = &self.model;
        vec![
            ("scheme", self.scheme.to_string()),
            ("batch", self.batch_size.to_string()),
            ("steps", self.steps.to_string()),
            ("lr", o.lr.to_string()),
            ("wd", o.weight_decay.to_string()),
            ("beta1", o.beta1.to_string()),
            ("beta2", o.beta2.to_string()),
            ("eps", o.eps.to_string()),
            ("layers", m.layers.to_string()),
            ("heads", m.heads.to_string()),
            ("embed_dim", m.embed_dim.to_string()),
            ("context", m.context_length.to_string()),
            ("tied", m.tied_embeddings.to_string()),
            ("seed", self.seed.to_string()),
            ("checkpoint_interval", self.checkpoint_interval.to_string()),
            ("val_interval", self.val_interval.to_string()),
            ("val_prompts", self.val_prompts.to_string()),
            (
                "corpus",
                self.corpus.as_ref().map_or("-".into(), |p| p.display().to_string()),
            ),
        ]
    }

    /// Contents of `config.txt`.
    pub fn to_file_string(&self) -> String {
        self.fields().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// One line: `batch=64 steps=20000 lr=0.001 wd=0.1 ...`.
impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fields = self.fields();
        let order = ["batch", "steps", "lr", "wd"];
        let mut parts: Vec<String> = order
            .iter()
            .filter_map(|k| fields.iter().find(|(n, _)| n == k))
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        parts.extend(fields.iter().filter(|(k, _)| !order.contains(k)).map(|(k, v)| format!("{k}={v}")));
        f.write_str(&parts.join(" "))
    }
}

/// `step=<int> loss=<float> val_loss=<float|-> ms=<float>`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogRecord {
    pub step: u64,
    pub loss: f64,
    pub val_loss: Option<f64>,
    pub ms: f64,
}

impl fmt::Display for TrainLogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={} loss={:.6} val_loss=", self.step, self.loss)?;
        match self.val_loss {
            Some(v) => write!(f, "{v:.6}")?,
            None => f.write_str("-")?,
        }
        write!(f, " ms={:.3}", self.ms)
    }
}

impl FromStr for TrainLogRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Format(format!("malformed log line {line:?}"));
        let mut it = line.split_whitespace();
        let mut field = |name: &str| -> Result<&str> {
            it.next()
                .and_then(|t| t.strip_prefix(name))
                .and_then(|t| t.strip_prefix('='))
                .ok_or_else(bad)
        };
        let step = field("step")?.parse().map_err(|_| bad())?;
        let loss = field("loss")?.parse().map_err(|_| bad())?;
        let val_loss = match field("val_loss")? {
            "-" => None,
            v => Some(v.parse().map_err(|_| bad())?),
        };
        let ms = field("ms")?.parse().map_err(|_| bad())?;
        if it.next().is_some() {
            return Err(bad());
        }
        Ok(TrainLogRecord { step, loss, val_loss, ms })
    }
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<TrainLogRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines().filter(|l| !l.trim().is_empty()).map(str::parse).collect()
}

/// Corpus named by `config.corpus`, or the bundled one.
pub fn load_corpus(config: &TrainConfig) -> Result<LetterStream> {
    match &config.corpus {
        Some(p) => LetterStream::load(p),
        None => crate::load_bundled_corpus(),
    }
}

/// Mean masked loss over `n_prompts` fresh prompts from the validation split,
/// each filling the model's context.
pub fn validation_loss<R: Rng + ?Sized>(
    params: &ModelParams<f32>,
    scheme: &SchemeConfig,
    stream: &LetterStream,
    n_prompts: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_prompts == 0 {
        return Err(Error::invalid("validation needs at least one prompt"));
    }
    let pairs = params.config().context_length / 2;
    let source = MessageSource::Corpus(stream, Split::Validation);
    let items = (0..n_prompts)
        .map(|_| build_training_item(&sample_prompt(scheme, &source, pairs, rng)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(batch_loss(params, &items)? as f64)
}

/// Batch for 1-based `step`.
pub fn sample_batch(config: &TrainConfig, stream: &LetterStream, step: u64) -> Result<Vec<TrainingItem>> {
    (0..config.batch_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(config.seed, &[domain::TRAIN, step, i as u64]);
            build_training_item(&sample_training_prompt(
                &config.scheme,
                stream,
                config.model.context_length,
                &mut rng,
            )?)
        })
        .collect()
}

pub struct Trainer<'a> {
    config: TrainConfig,
    stream: &'a LetterStream,
    params: ModelParams<f32>,
    state: OptimizerState<f32>,
}

impl<'a> Trainer<'a> {
    pub fn new(config: TrainConfig, stream: &'a LetterStream) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::init(config.model, &mut substream(config.seed, &[domain::INIT]))?;
        let state = OptimizerState::new(&params, config.optimizer);
        Ok(Trainer { config, stream, params, state })
    }

    /// Continues from a checkpoint written by an earlier run of `config`.
    pub fn from_checkpoint(config: TrainConfig, stream: &'a LetterStream, ck: Checkpoint) -> Result<Self> {
        config.validate()?;
        if *ck.config() != config.model {
            return Err(Error::invalid(format!(
                "checkpoint model {:?} does not match config {:?}",
                ck.config(),
                config.model
            )));
        }
        let mut state = ck
            .optimizer
            .ok_or_else(|| Error::invalid("checkpoint has no optimizer state to resume from"))?;
        state.hyper = config.optimizer;
        Ok(Trainer { config, stream, params: ck.params, state })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Optimizer steps taken so far.
    pub fn step(&self) -> u64 {
        self.state.step
    }

    pub fn is_done(&self) -> bool {
        self.state.step >= self.config.steps
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }

    pub fn optimizer(&self) -> &OptimizerState<f32> {
        &self.state
    }

    pub fn into_params(self) -> ModelParams<f32> {
        self.params
    }

    /// One optimizer step, plus a validation measurement when due. A
    /// non-finite loss leaves the parameters untouched.
    pub fn train_step(&mut self) -> Result<TrainLogRecord> {
        let start = Instant::now();
        let step = self.state.step + 1;
        let batch = sample_batch(&self.config, self.stream, step)?;
        let (loss, grads) = batch_loss_and_grad(&self.params, &batch)?;
        let loss = loss as f64;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step, loss });
        }
        adamw_step(&mut self.params, &grads, &mut self.state)?;
        let val_loss = if self.config.val_interval > 0
            && (step.is_multiple_of(self.config.val_interval) || step == self.config.steps)
        {
            let mut rng = substream(self.config.seed, &[domain::VALIDATION, step]);
            Some(validation_loss(
                &self.params,
                &self.config.scheme,
                self.stream,
                self.config.val_prompts,
                &mut rng,
            )?)
        } else {
            None
        };
        Ok(TrainLogRecord {
            step,
            loss,
            val_loss,
            ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Trains to `config.steps`. With a run directory, logs and checkpoints
    /// are written there; a failing step still leaves a resumable checkpoint.
    pub fn run(
        &mut self,
        dir: Option<&Path>,
        mut on_record: impl FnMut(&TrainLogRecord),
    ) -> Result<Vec<TrainLogRecord>> {
        let mut log = match dir {
            Some(d) => Some(self.open_run_dir(d)?),
            None => None,
        };
        let mut records = Vec::new();
        while !self.is_done() {
            let rec = match self.train_step() {
                Ok(r) => r,
                Err(e) => {
                    if let Some(d) = dir {
                        self.save(d)?;
                    }
                    return Err(e);
                }
            };
            if let (Some(f), Some(d)) = (log.as_mut(), dir) {
                writeln!(f, "{rec}").map_err(|e| Error::io(d.join(LOG_FILE), e))?;
            }
            on_record(&rec);
            records.push(rec);
            let every = self.config.checkpoint_interval;
            if let Some(d) = dir {
                if self.is_done() || (every > 0 && rec.step % every == 0) {
                    self.save(d)?;
                }
            }
        }
        Ok(records)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        save_checkpoint(dir.join(CHECKPOINT_FILE), &self.params, Some(&self.state))
    }

    /// Writes the config and truncates the log to the current step.
    fn open_run_dir(&self, dir: &Path) -> Result<fs::File> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg = dir.join(CONFIG_FILE);
        fs::write(&cfg, self.config.to_file_string()).map_err(|e| Error::io(&cfg, e))?;
        let log_path = dir.join(LOG_FILE);
        let kept: Vec<TrainLogRecord> = if self.state.step > 0 && log_path.exists() {
            read_log(&log_path)?.into_iter().filter(|r| r.step <= self.state.step).collect()
        } else {
            Vec::new()
        };
        let text: String = kept.iter().map(|r| format!("{r}\n")).collect();
        fs::write(&log_path, text).map_err(|e| Error::io(&log_path, e))?;
        fs::OpenOptions::new()
            .append(true)
            .open(&log_path)
            .map_err(|e| Error::io(&log_path, e))
    }
}

/// Result of a finished run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams<f32>,
    pub records: Vec<TrainLogRecord>,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }
}

/// Trains a fresh model.
pub fn train(config: &TrainConfig, stream: &LetterStream, dir: Option<&Path>) -> Result<TrainOutcome> {
    let mut t = Trainer::new(config.clone(), stream)?;
    let records = t.run(dir, |_| {})?;
    Ok(TrainOutcome { params: t.into_params(), records })
}

/// Continues the run stored in `dir` up to its configured step count.
/// `steps`, when given, replaces the configured total.
pub fn resume(
    dir: &Path,
    stream: &LetterStream,
    steps: Option<u64>,
    on_record: impl FnMut(&TrainLogRecord),
) -> Result<TrainOutcome> {
    let mut config = TrainConfig::from_settings(&Settings::load(dir.join(CONFIG_FILE))?)?;
    if let Some(s) = steps {
        config.steps = s;
    }
    let ck = load_checkpoint(dir.join(CHECKPOINT_FILE))?;
    let mut t = Trainer::from_checkpoint(config, stream, ck)?;
    let records = t.run(Some(dir), on_record)?;
    Ok(TrainOutcome { params: t.into_params(), records: read_log(dir.join(LOG_FILE)).unwrap_or(records) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    BatchSize,
    ContextLength,
}

impl AblationAxis {
    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::BatchSize => "batch",
            AblationAxis::ContextLength => "context",
        }
    }
}

/// `batch=16,32,64,96` or `context=128,256,512,2048`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AblationGrid {
    pub axis: AblationAxis,
    pub values: Vec<usize>,
}

impl AblationGrid {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("ablation grid is empty"));
        }
        Ok(())
    }

    /// Config of one grid point.
    pub fn point(&self, base: &TrainConfig, value: usize) -> TrainConfig {
        let mut c = base.clone();
        match self.axis {
            AblationAxis::BatchSize => c.batch_size = value,
            AblationAxis::ContextLength => c.model.context_length = value,
        }
        c
    }
}

impl FromStr for AblationGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (axis, list) = s
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("grid {s:?} is not of the form axis=v1,v2,...")))?;
        let axis = match axis.trim() {
            "batch" => AblationAxis::BatchSize,
            "context" => AblationAxis::ContextLength,
            other => return Err(Error::invalid(format!("unknown grid axis {other:?}"))),
        };
        let values = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| v.parse::<usize>().map_err(|_| Error::invalid(format!("bad grid value {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let grid = AblationGrid { axis, values };
        grid.validate()?;
        Ok(grid)
    }
}

impl fmt::Display for AblationGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.values.iter().map(|x| x.to_string()).collect();
        write!(f, "{}={}", self.axis.name(), v.join(","))
    }
}

#[derive(Debug)]
pub struct AblationRun {
    pub value: usize,
    pub dir: PathBuf,
    pub config: TrainConfig,
    /// Final training loss, or the error that stopped the run.
    pub outcome: Result<f64, String>,
}

/// Trains one run per grid value in `out/<axis>-<value>/`. A failed run is
/// recorded and the rest still run.
pub fn run_ablation(
    base: &TrainConfig,
    grid: &AblationGrid,
    stream: &LetterStream,
    out: &Path,
    mut on_record: impl FnMut(usize, &TrainLogRecord),
) -> Result<Vec<AblationRun>> {
    grid.validate()?;
    let mut runs = Vec::with_capacity(grid.values.len());
    for &v in &grid.values {
        let dir = out.join(format!("{}-{v}", grid.axis.name()));
        let config = grid.point(base, v);
        let result = Trainer::new(config.clone(), stream).and_then(|mut t| {
            let records = t.run(Some(&dir), |r| on_record(v, r))?;
            records.last().map(|r| r.loss).ok_or_else(|| Error::invalid("run produced no steps"))
        });
        let run = AblationRun { value: v, dir, config, outcome: result.map_err(|e| e.to_string()) };
        runs.push(run);
    }
    Ok(runs)
}
