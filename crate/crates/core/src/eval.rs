//! Accuracy as a function of the number of in-context examples.
//!
//! For each evaluation prompt, the decoder sees `j` example pairs followed by
//! the ciphertext letter `c[j]` and must produce `m[j]`, for every `j` in
//! `0..=J`. Prompt `i` is drawn from the substream `(seed, EVAL, i)`, so all
//! decoders evaluated with the same seed and setting see the same prompts.
//! An abstention counts as wrong.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::baselines::{Baseline, Prediction};
use crate::cipher::Letter;
use crate::corpus::{LetterStream, Split};
use crate::error::{Error, Result};
use crate::model::{forward, ModelParams};
use crate::prompt::{sample_prompt, MessageSource, Prompt, SchemeConfig, TokenSequence, VOCAB_SIZE};
use crate::rng::{domain, substream};

pub const CSV_HEADER: &str = "scheme,key_len,message_dist,decoder,examples,accuracy,n,stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageDist {
    /// Windows of the corpus validation split.
    Corpus,
    /// I.i.d. uniform letters.
    Uniform,
}

impl MessageDist {
    pub fn name(self) -> &'static str {
        match self {
            MessageDist::Corpus => "corpus",
            MessageDist::Uniform => "uniform",
        }
    }
}

impl fmt::Display for MessageDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MessageDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corpus" => Ok(MessageDist::Corpus),
            "uniform" => Ok(MessageDist::Uniform),
            _ => Err(Error::invalid(format!("unknown message distribution {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Decoder {
    Model(Arc<ModelParams<f32>>),
    Baseline(Baseline),
}

impl Decoder {
    /// `model` or the baseline name.
    pub fn label(&self) -> &'static str {
        match self {
            Decoder::Model(_) => "model",
            Decoder::Baseline(b) => b.name(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalSetting {
    pub scheme: SchemeConfig,
    pub dist: MessageDist,
    pub decoder: Decoder,
    pub n_prompts: usize,
    /// Largest number of examples `J`.
    pub max_examples: usize,
    pub seed: u64,
}

impl EvalSetting {
    pub fn labels(&self) -> CurveLabels {
        CurveLabels {
            scheme: self.scheme.name().to_owned(),
            key_len: self.scheme.key_len_label(),
            message_dist: self.dist.name().to_owned(),
            decoder: self.decoder.label().to_owned(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.n_prompts == 0 {
            return Err(Error::invalid("evaluation needs at least one prompt"));
        }
        if let Decoder::Model(p) = &self.decoder {
            let ctx = p.config().context_length;
            if self.max_examples > (ctx - 1) / 2 {
                return Err(Error::invalid(format!(
                    "{} examples need {} tokens but the model context is {ctx}",
                    self.max_examples,
                    2 * self.max_examples + 1
                )));
            }
        }
        Ok(())
    }

    /// Evaluation prompt `i`, with `J + 1` pairs.
    pub fn prompt(&self, i: usize, stream: Option<&LetterStream>) -> Result<Prompt> {
        let source = match (self.dist, stream) {
            (MessageDist::Uniform, _) => MessageSource::Uniform,
            (MessageDist::Corpus, Some(s)) => MessageSource::Corpus(s, Split::Validation),
            (MessageDist::Corpus, None) => {
                return Err(Error::invalid("corpus messages requested but no corpus loaded"))
            }
        };
        let mut rng = substream(self.seed, &[domain::EVAL, i as u64]);
        sample_prompt(&self.scheme, &source, self.max_examples + 1, &mut rng)
    }
}

/// Columns identifying a curve in the CSV.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurveLabels {
    pub scheme: String,
    pub key_len: String,
    pub message_dist: String,
    pub decoder: String,
}

/// Correct counts per number of examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalCurve {
    pub correct: Vec<u64>,
    pub n: u64,
}

impl EvalCurve {
    pub fn max_examples(&self) -> usize {
        self.correct.len() - 1
    }

    pub fn accuracy(&self, j: usize) -> f64 {
        self.correct[j] as f64 / self.n as f64
    }

    /// Binomial standard error `sqrt(acc (1 - acc) / n)`.
    pub fn stderr(&self, j: usize) -> f64 {
        let a = self.accuracy(j);
        (a * (1.0 - a) / self.n as f64).sqrt()
    }

    pub fn accuracies(&self) -> Vec<f64> {
        (0..self.correct.len()).map(|j| self.accuracy(j)).collect()
    }
}

fn argmax(row: &[f32]) -> Letter {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    Letter::new(best as u8).expect("row has 26 entries")
}

/// Most likely next letter after `prefix`; ties go to the lower letter.
pub fn model_predict(params: &ModelParams<f32>, prefix: &TokenSequence) -> Result<Letter> {
    if prefix.is_empty() {
        return Err(Error::invalid("empty prefix"));
    }
    let logits = forward(params, prefix.as_slice())?;
    Ok(argmax(&logits[logits.len() - VOCAB_SIZE..]))
}

/// Correctness for every `j` in `0..=J` from a single forward pass.
fn model_hits(params: &ModelParams<f32>, p: &Prompt, max_examples: usize) -> Result<Vec<bool>> {
    let mut tokens = p.interleaved_tokens();
    tokens.truncate(2 * max_examples + 1);
    let logits = forward(params, &tokens)?;
    let plain = p.plaintext().letters();
    Ok((0..=max_examples)
        .map(|j| argmax(&logits[2 * j * VOCAB_SIZE..(2 * j + 1) * VOCAB_SIZE]) == plain[j])
        .collect())
}

fn baseline_hits(b: &Baseline, p: &Prompt, max_examples: usize) -> Result<Vec<bool>> {
    let plain = p.plaintext().letters();
    Ok(b.predictions(p, max_examples)?
        .into_iter()
        .enumerate()
        .map(|(j, pred)| pred == Prediction::Letter(plain[j]))
        .collect())
}

pub fn accuracy_curve(setting: &EvalSetting, stream: Option<&LetterStream>) -> Result<EvalCurve> {
    setting.validate()?;
    let j_max = setting.max_examples;
    let correct = (0..setting.n_prompts)
        .into_par_iter()
        .map(|i| {
            let p = setting.prompt(i, stream)?;
            let hits = match &setting.decoder {
                Decoder::Model(params) => model_hits(params, &p, j_max)?,
                Decoder::Baseline(b) => baseline_hits(b, &p, j_max)?,
            };
            Ok(hits.into_iter().map(u64::from).collect::<Vec<_>>())
        })
        .try_reduce(
            || vec![0u64; j_max + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(EvalCurve {
        correct,
        n: setting.n_prompts as u64,
    })
}

/// CSV text for `curves`, rows ordered by label columns, then by examples.
pub fn curves_csv(curves: &[(CurveLabels, EvalCurve)]) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::invalid("no curves to write"));
    }
    let mut sorted: Vec<&(CurveLabels, EvalCurve)> = curves.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (l, c) in sorted {
        for j in 0..c.correct.len() {
            out.push_str(&format!(
                "{},{},{},{},{j},{:.6},{},{:.6}\n",
                l.scheme,
                l.key_len,
                l.message_dist,
                l.decoder,
                c.accuracy(j),
                c.n,
                c.stderr(j)
            ));
        }
    }
    Ok(out)
}

pub fn write_curves_csv(curves: &[(CurveLabels, EvalCurve)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = curves_csv(curves)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{letter_frequency_order, preprocess_text};
    use crate::model::ModelConfig;
    use crate::prompt::build_eval_prefix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setting(scheme: SchemeConfig, decoder: Decoder, n: usize, j: usize) -> EvalSetting {
        EvalSetting {
            scheme,
            dist: MessageDist::Uniform,
            decoder,
            n_prompts: n,
            max_examples: j,
            seed: 5,
        }
    }

    fn tiny_model() -> Arc<ModelParams<f32>> {
        let c = ModelConfig { layers: 1, heads: 2, embed_dim: 16, context_length: 24, tied_embeddings: false };
        Arc::new(ModelParams::init(c, &mut ChaCha8Rng::seed_from_u64(3)).unwrap())
    }

    #[test]
    fn mono_naive_csv_row() {
        let s = setting(SchemeConfig::Mono, Decoder::Baseline(Baseline::MonoNaive), 100, 1);
        let stream = LetterStream::from_text("abcdefghij".repeat(500).as_bytes(), "t");
        let s = EvalSetting { dist: MessageDist::Corpus, ..s };
        let c = accuracy_curve(&s, Some(&stream)).unwrap();
        assert_eq!(c.correct[0], 0);
        let csv = curves_csv(&[(s.labels(), c)]).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "mono,-,corpus,mono_naive,0,0.000000,100,0.000000");
        assert!(lines[2].starts_with("mono,-,corpus,mono_naive,1,"));
    }

    #[test]
    fn corpus_setting_needs_a_corpus() {
        let s = EvalSetting {
            dist: MessageDist::Corpus,
            ..setting(SchemeConfig::Mono, Decoder::Baseline(Baseline::MonoNaive), 3, 2)
        };
        assert!(accuracy_curve(&s, None).is_err());
    }

    #[test]
    fn known_length_saturates() {
        for l in [1, 3, 8] {
            for b in [Baseline::VigNaive, Baseline::VigFreq] {
                let s = setting(SchemeConfig::VigenereFixed(l), Decoder::Baseline(b), 50, 12);
                let c = accuracy_curve(&s, None).unwrap();
                assert!((l..=12).all(|j| c.correct[j] == 50), "{l} {:?}", c.correct);
            }
        }
    }

    #[test]
    fn vig_freq_before_full_period_is_chance() {
        // every position j < l has an unseen offset, so the guess 'e' is right 1/26 of the time
        let s = setting(SchemeConfig::VigenereFixed(32), Decoder::Baseline(Baseline::VigFreq), 4000, 31);
        let c = accuracy_curve(&s, None).unwrap();
        let pooled = c.correct.iter().sum::<u64>() as f64 / (32.0 * 4000.0);
        let se = ((1.0f64 / 26.0) * (25.0 / 26.0) / (32.0 * 4000.0)).sqrt();
        assert!((pooled - 1.0 / 26.0).abs() < 4.0 * se, "{pooled}");
    }

    #[test]
    fn frequency_fill_dominates_lookup() {
        let order = letter_frequency_order(&preprocess_text(b"eeeetttaaon"));
        let naive = accuracy_curve(&setting(SchemeConfig::Mono, Decoder::Baseline(Baseline::MonoNaive), 300, 30), None)
            .unwrap();
        let freq =
            accuracy_curve(&setting(SchemeConfig::Mono, Decoder::Baseline(Baseline::MonoFreq(order)), 300, 30), None)
                .unwrap();
        assert!(naive.correct.iter().zip(&freq.correct).all(|(a, b)| b >= a));
        // the set of known mappings only grows, but each j asks about a fresh
        // letter, so the curve is monotone only up to sampling noise
        let se = (0.25f64 / 300.0).sqrt();
        let acc = naive.accuracies();
        assert!(acc.windows(2).all(|w| w[1] >= w[0] - 4.0 * se), "{acc:?}");
    }

    #[test]
    fn model_curve_matches_per_prefix_predictions() {
        let m = tiny_model();
        let s = setting(SchemeConfig::Mono, Decoder::Model(m.clone()), 7, 11);
        let c = accuracy_curve(&s, None).unwrap();
        let mut expected = vec![0u64; 12];
        for i in 0..7 {
            let p = s.prompt(i, None).unwrap();
            for (j, e) in expected.iter_mut().enumerate() {
                let (prefix, answer) = build_eval_prefix(&p, j).unwrap();
                *e += u64::from(model_predict(&m, &prefix).unwrap() == answer);
            }
        }
        assert_eq!(c.correct, expected);
    }

    #[test]
    fn model_context_bounds_examples() {
        let m = tiny_model();
        assert!(accuracy_curve(&setting(SchemeConfig::Mono, Decoder::Model(m.clone()), 2, 11), None).is_ok());
        let err = accuracy_curve(&setting(SchemeConfig::Mono, Decoder::Model(m.clone()), 2, 12), None).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let long = TokenSequence::new(vec![0; 25]).unwrap();
        assert!(model_predict(&m, &long).is_err());
    }

    #[test]
    fn argmax_ties_pick_lowest_letter() {
        assert_eq!(argmax(&[0.0; 26]), Letter::A);
        let mut row = [0.0f32; 26];
        row[4] = 1.0;
        row[9] = 1.0;
        assert_eq!(argmax(&row).index(), 4);
    }

    #[test]
    fn stderr_and_csv_determinism() {
        let c = EvalCurve { correct: vec![0, 25, 100], n: 100 };
        assert_eq!(c.stderr(0), 0.0);
        assert!((c.stderr(1) - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(c.stderr(2), 0.0);
        let labels = |d: &str| CurveLabels {
            scheme: "mono".into(),
            key_len: "-".into(),
            message_dist: "uniform".into(),
            decoder: d.into(),
        };
        let a = curves_csv(&[(labels("mono_naive"), c.clone()), (labels("mono_freq"), c.clone())]).unwrap();
        let b = curves_csv(&[(labels("mono_freq"), c.clone()), (labels("mono_naive"), c)]).unwrap();
        assert_eq!(a, b);
        assert!(curves_csv(&[]).is_err());
    }

    #[test]
    fn search_accuracy_over_emitted_predictions_is_exact() {
        let s = EvalSetting {
            scheme: SchemeConfig::VigenereVariable { min: 4, max: 32 },
            ..setting(SchemeConfig::Mono, Decoder::Baseline(Baseline::VigSearch(4..=32)), 200, 40)
        };
        for i in 0..s.n_prompts {
            let p = s.prompt(i, None).unwrap();
            let preds = Baseline::VigSearch(4..=32).predictions(&p, 40).unwrap();
            for (j, pred) in preds.into_iter().enumerate() {
                if let Prediction::Letter(l) = pred {
                    assert_eq!(l, p.plaintext().letters()[j]);
                }
            }
        }
    }
}
