use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusFormat;
use crate::decode::{DEFAULT_MAX_TOKENS, DEFAULT_PROMPT_TEMPLATE, PLACEHOLDER};
use crate::embedding::{DEFAULT_MOCK_DIM, MIN_MOCK_DIM};
use crate::error::{Error, Result};
use crate::evaluate::{Head, SoftmaxHyper};
use crate::latent::{LambdaPolicy, Metric, PlanTarget, DEFAULT_K_NEIGHBORS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeMode {
    /// Decode synthetic vectors to text (and re-encode them for evaluation).
    Text,
    /// Keep synthetic examples as vectors.
    #[default]
    VectorOnly,
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(DecodeMode::Text),
            "vector-only" => Ok(DecodeMode::VectorOnly),
            other => Err(Error::Config(format!("unknown decode mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    #[default]
    Softmax,
    Centroid,
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(HeadKind::Softmax),
            "centroid" => Ok(HeadKind::Centroid),
            other => Err(Error::Config(format!("unknown classifier head {other:?}"))),
        }
    }
}

/// Where encodings come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderSpec {
    Mock,
    Remote(String),
}

/// Where decoded text comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderSpec {
    None,
    Mock,
    Remote(String),
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

/// Flat run configuration. Every key can be set in the JSON config file and
/// overridden by the same-named command-line flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub corpus_format: CorpusFormat,
    /// Held-out corpus; when absent the input corpus is split.
    pub test_corpus: Option<PathBuf>,
    pub clean: bool,
    pub subsample_total: Option<usize>,
    pub test_total: Option<usize>,
    pub train_fraction: f64,

    /// `mock` or the base URL of an embedding service.
    pub encoder: String,
    pub encoder_dim: Option<usize>,
    pub encoder_batch_size: usize,
    pub encoder_timeout_secs: u64,
    pub max_in_flight: usize,

    pub projector: Option<PathBuf>,

    pub quotas: Option<BTreeMap<String, usize>>,
    pub budget: Option<usize>,
    pub balance_to_max: bool,
    pub k_neighbors: usize,
    pub lambda: LambdaPolicy,
    pub metric: Metric,
    pub normalize_synthetic: bool,

    /// `none`, `mock` or the base URL of a generation service.
    pub decoder: String,
    pub decode_mode: DecodeMode,
    pub prompt_template: String,
    pub max_tokens: u32,
    pub decoder_timeout_secs: u64,

    pub head: HeadKind,
    pub lr: f64,
    pub iters: usize,
    pub l2: f64,

    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Worker threads for intra-stage parallelism; outputs do not depend on it.
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let hyper = SoftmaxHyper::default();
        Self {
            corpus: None,
            corpus_format: CorpusFormat::Jsonl,
            test_corpus: None,
            clean: false,
            subsample_total: None,
            test_total: None,
            train_fraction: 0.8,
            encoder: "mock".into(),
            encoder_dim: None,
            encoder_batch_size: 32,
            encoder_timeout_secs: 30,
            max_in_flight: 4,
            projector: None,
            quotas: None,
            budget: None,
            balance_to_max: false,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            lambda: LambdaPolicy::Uniform,
            metric: Metric::Cosine,
            normalize_synthetic: false,
            decoder: "none".into(),
            decode_mode: DecodeMode::VectorOnly,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            decoder_timeout_secs: 30,
            head: HeadKind::Softmax,
            lr: hyper.lr,
            iters: hyper.iters,
            l2: hyper.l2,
            seed: None,
            out: None,
            threads: None,
        }
    }
}

/// Keys that only affect how a run executes, never what it produces.
pub(crate) const EXECUTION_ONLY_KEYS: [&str; 3] = ["out", "threads", "max_in_flight"];

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("missing required field \"seed\"".into()))
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| Error::Config("missing required field \"corpus\"".into()))
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("missing required field \"out\"".into()))
    }

    pub fn encoder_spec(&self) -> Result<EncoderSpec> {
        match self.encoder.as_str() {
            "mock" => Ok(EncoderSpec::Mock),
            url if is_url(url) => Ok(EncoderSpec::Remote(url.to_string())),
            other => Err(Error::Config(format!(
                "encoder must be \"mock\" or an http(s) URL, got {other:?}"
            ))),
        }
    }

    pub fn decoder_spec(&self) -> Result<DecoderSpec> {
        match self.decoder.as_str() {
            "none" => Ok(DecoderSpec::None),
            "mock" => Ok(DecoderSpec::Mock),
            url if is_url(url) => Ok(DecoderSpec::Remote(url.to_string())),
            other => Err(Error::Config(format!(
                "decoder must be \"none\", \"mock\" or an http(s) URL, got {other:?}"
            ))),
        }
    }

    pub fn mock_dim(&self) -> usize {
        self.encoder_dim.unwrap_or(DEFAULT_MOCK_DIM)
    }

    pub fn plan_target(&self) -> Result<PlanTarget> {
        let chosen = [self.quotas.is_some(), self.budget.is_some(), self.balance_to_max]
            .iter()
            .filter(|&&b| b)
            .count();
        if chosen != 1 {
            return Err(Error::Config(
                "set exactly one of \"quotas\", \"budget\" or \"balance_to_max\"".into(),
            ));
        }
        Ok(if let Some(q) = &self.quotas {
            PlanTarget::Quotas(q.iter().map(|(l, c)| (l.clone(), *c)).collect())
        } else if let Some(b) = self.budget {
            PlanTarget::Budget(b)
        } else {
            PlanTarget::BalanceToMax
        })
    }

    pub fn head_spec(&self) -> Head {
        match self.head {
            HeadKind::Softmax => Head::Softmax(SoftmaxHyper {
                l2: self.l2,
                lr: self.lr,
                iters: self.iters,
            }),
            HeadKind::Centroid => Head::NearestCentroid,
        }
    }

    pub fn encoder_timeout(&self) -> Duration {
        Duration::from_secs(self.encoder_timeout_secs)
    }

    pub fn decoder_timeout(&self) -> Duration {
        Duration::from_secs(self.decoder_timeout_secs)
    }

    fn validate_common(&self) -> Result<()> {
        self.seed()?;
        self.encoder_spec()?;
        let decoder = self.decoder_spec()?;
        if self.decode_mode == DecodeMode::Text && decoder == DecoderSpec::None {
            return Err(Error::Config(
                "decode_mode \"text\" requires a decoder (\"mock\" or a URL)".into(),
            ));
        }
        if matches!(decoder, DecoderSpec::Remote(_)) && self.prompt_template.matches(PLACEHOLDER).count() != 1 {
            return Err(Error::Config(format!(
                "prompt_template must contain {PLACEHOLDER} exactly once"
            )));
        }
        if self.encoder == "mock" && self.mock_dim() < MIN_MOCK_DIM {
            return Err(Error::Config(format!("encoder_dim must be >= {MIN_MOCK_DIM} for the mock encoder")));
        }
        if self.encoder_batch_size == 0 || self.max_in_flight == 0 || self.threads == Some(0) {
            return Err(Error::Config(
                "encoder_batch_size, max_in_flight and threads must be >= 1".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie strictly between 0 and 1".into()));
        }
        if self.k_neighbors == 0 {
            return Err(Error::Config("k_neighbors must be >= 1".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 || self.l2 < 0.0 {
            return Err(Error::Config("lr must be > 0 and l2 >= 0".into()));
        }
        Ok(())
    }

    pub fn validate_for_augment(&self) -> Result<()> {
        self.corpus_path()?;
        self.out_dir()?;
        self.validate_common()?;
        self.plan_target()?;
        Ok(())
    }

    pub fn validate_for_eval(&self) -> Result<()> {
        self.validate_for_augment()
    }

    pub fn validate_for_encode(&self) -> Result<()> {
        self.corpus_path()?;
        self.out_dir()?;
        self.seed()?;
        self.encoder_spec()?;
        if self.encoder == "mock" && self.mock_dim() < MIN_MOCK_DIM {
            return Err(Error::Config(format!("encoder_dim must be >= {MIN_MOCK_DIM} for the mock encoder")));
        }
        Ok(())
    }

    pub fn validate_for_clean(&self) -> Result<()> {
        self.corpus_path()?;
        self.out_dir()?;
        self.seed()?;
        Ok(())
    }

    /// The configuration as recorded in the run manifest: everything that
    /// determines outputs, without execution-only keys.
    pub fn manifest_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            for key in EXECUTION_ONLY_KEYS {
                map.remove(key);
            }
        }
        v
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! set {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = &o.$field { self.$field = v.clone(); })*
            };
        }
        macro_rules! set_opt {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = &o.$field { self.$field = Some(v.clone()); })*
            };
        }
        set!(
            corpus_format, clean, train_fraction, encoder, encoder_batch_size, encoder_timeout_secs,
            max_in_flight, balance_to_max, k_neighbors, lambda, metric, normalize_synthetic, decoder,
            decode_mode, prompt_template, max_tokens, decoder_timeout_secs, head, lr, iters, l2,
        );
        set_opt!(
            corpus, test_corpus, subsample_total, test_total, encoder_dim, projector, budget, seed,
            out, threads,
        );
        if let Some(q) = &o.quotas {
            self.quotas = Some(q.0.clone());
        }
    }
}

/// `label=count` pairs separated by commas, e.g. `A=3,B=3`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotaList(pub BTreeMap<String, usize>);

impl FromStr for QuotaList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|pair| {
                let (label, count) = pair
                    .split_once('=')
                    .ok_or_else(|| format!("expected label=count, got {pair:?}"))?;
                let count = count
                    .trim()
                    .parse()
                    .map_err(|e| format!("bad count in {pair:?}: {e}"))?;
                Ok((label.trim().to_string(), count))
            })
            .collect::<std::result::Result<_, _>>()
            .map(QuotaList)
    }
}

fn parse_with<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Command-line overrides, one flag per config key.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigOverrides {
    /// Input corpus (JSONL or CSV with id, text, label).
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// `jsonl` or `csv`.
    #[arg(long, global = true, value_parser = parse_with::<CorpusFormat>)]
    pub corpus_format: Option<CorpusFormat>,
    /// Held-out test corpus; when absent the corpus is split.
    #[arg(long, global = true)]
    pub test_corpus: Option<PathBuf>,
    /// Strip headers, quotes and signatures before use.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub clean: Option<bool>,
    /// Class-balanced subsample size for the training set.
    #[arg(long, global = true)]
    pub subsample_total: Option<usize>,
    /// Class-balanced subsample size for the test set.
    #[arg(long, global = true)]
    pub test_total: Option<usize>,
    /// Share of each class kept for training when splitting.
    #[arg(long, global = true)]
    pub train_fraction: Option<f64>,

    /// `mock` or an embedding service URL.
    #[arg(long, global = true)]
    pub encoder: Option<String>,
    /// Mock encoder dimension, or the dimension a remote encoder must return.
    #[arg(long, global = true)]
    pub encoder_dim: Option<usize>,
    /// Texts per embedding request.
    #[arg(long, global = true)]
    pub encoder_batch_size: Option<usize>,
    /// Embedding request timeout.
    #[arg(long, global = true)]
    pub encoder_timeout_secs: Option<u64>,
    /// Concurrent encoder/decoder requests.
    #[arg(long, global = true)]
    pub max_in_flight: Option<usize>,

    /// Projector weights file; identity when absent.
    #[arg(long, global = true)]
    pub projector: Option<PathBuf>,

    /// Per-class synthetic counts, e.g. `A=30,B=10`.
    #[arg(long, global = true)]
    pub quotas: Option<QuotaList>,
    /// Total synthetic count, split evenly across classes.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Top every class up to the largest class size.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub balance_to_max: Option<bool>,
    /// Neighbors considered as interpolation partners.
    #[arg(long, global = true)]
    pub k_neighbors: Option<usize>,
    /// `uniform` or a fixed value in [0, 1].
    #[arg(long, global = true, value_parser = parse_with::<LambdaPolicy>)]
    pub lambda: Option<LambdaPolicy>,
    /// `cosine` or `euclidean`.
    #[arg(long, global = true, value_parser = parse_with::<Metric>)]
    pub metric: Option<Metric>,
    /// Rescale interpolated vectors to unit norm.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub normalize_synthetic: Option<bool>,

    /// `none`, `mock` or a generation service URL.
    #[arg(long, global = true)]
    pub decoder: Option<String>,
    /// `vector-only` or `text`.
    #[arg(long, global = true, value_parser = parse_with::<DecodeMode>)]
    pub decode_mode: Option<DecodeMode>,
    /// Decoder prompt; must contain [X] once.
    #[arg(long, global = true)]
    pub prompt_template: Option<String>,
    /// Decoder generation limit.
    #[arg(long, global = true)]
    pub max_tokens: Option<u32>,
    /// Decode request timeout.
    #[arg(long, global = true)]
    pub decoder_timeout_secs: Option<u64>,

    /// `softmax` or `centroid`.
    #[arg(long, global = true, value_parser = parse_with::<HeadKind>)]
    pub head: Option<HeadKind>,
    /// Softmax learning rate.
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    /// Softmax gradient steps.
    #[arg(long, global = true)]
    pub iters: Option<usize>,
    /// Softmax L2 weight.
    #[arg(long, global = true)]
    pub l2: Option<f64>,

    /// Base seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}
