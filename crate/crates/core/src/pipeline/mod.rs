//! End-to-end batch commands: encode, clean, augment, eval and inspect.
//!
//! Every command validates its whole configuration before touching the
//! filesystem and computes all results before writing any of them. Output
//! layout under `out`:
//!
//! ```text
//! vectors/          real-example vector stores
//! synthetic/        synthetic.smtx, provenance.jsonl, decoded.jsonl
//! reports/          real_only.json, real_plus_synthetic.json, synthetic_only.json
//! run_manifest.json effective configuration, tool version and run counts
//! ```

mod config;

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

pub use config::{
    ConfigOverrides, DecodeMode, DecoderSpec, EncoderSpec, HeadKind, PipelineConfig, QuotaList,
};

use crate::bridge::{load_projector, Projector};
use crate::corpus::{self, Corpus, TextExample};
use crate::decode::{decode_records, DecoderBackend, MockDecoder, RemoteDecoder};
use crate::embedding::{
    read_store, write_store, EmbeddingCache, EmbeddingVector, Encoder, EncoderBackend, EncoderOptions,
    RemoteEncoder, VectorStore,
};
use crate::error::{Error, Result, StageExt};
use crate::evaluate::{format_table, run_conditions, ExperimentResult, LabeledFeatures, SkippedCondition};
use crate::latent::{build_plan, generate_synthetic_vectors, write_provenance, GenerationOptions, SyntheticRecord};
use crate::rng::derive_seed;

pub const TOOL_NAME: &str = "textmix";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const SPLIT_STREAM: u64 = 1;
const SUBSAMPLE_STREAM: u64 = 2;
const TEST_SUBSAMPLE_STREAM: u64 = 3;
const PLAN_STREAM: u64 = 4;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassCount {
    pub label: String,
    pub real: usize,
    pub synthetic: usize,
}

/// Counts recorded in the run manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub dropped_after_cleaning: usize,
    pub n_real: usize,
    pub n_test: usize,
    pub n_synthetic: usize,
    pub decode_failures: usize,
    pub reencode_failures: usize,
    pub per_class: Vec<ClassCount>,
    pub skipped_conditions: Vec<SkippedCondition>,
}

fn with_pool<T: Send>(cfg: &PipelineConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
        .install(f)
}

pub fn build_encoder(cfg: &PipelineConfig) -> Result<Encoder> {
    let options = EncoderOptions {
        batch_size: cfg.encoder_batch_size,
        max_in_flight: cfg.max_in_flight,
        expected_dim: cfg.encoder_dim,
    };
    let backend = match cfg.encoder_spec()? {
        EncoderSpec::Mock => EncoderBackend::Mock { dim: cfg.mock_dim() },
        EncoderSpec::Remote(url) => {
            EncoderBackend::Remote(RemoteEncoder::with_timeout(&url, cfg.encoder_timeout())?)
        }
    };
    Encoder::new(backend, options)
}

fn load_input(cfg: &PipelineConfig, path: &Path, stats: &mut RunStats) -> Result<Corpus> {
    let corpus = corpus::load_corpus(path, cfg.corpus_format)?;
    if !cfg.clean {
        return Ok(corpus);
    }
    let cleaned = corpus::clean_corpus(&corpus);
    stats.dropped_after_cleaning += cleaned.dropped;
    Ok(cleaned.corpus)
}

fn store_from(corpus: &Corpus, vectors: Vec<EmbeddingVector>, dim: usize) -> Result<VectorStore> {
    let mut store = VectorStore::new(dim, corpus.labels().to_vec())?;
    for (ex, v) in corpus.examples().iter().zip(vectors) {
        store.push_labeled(ex.id.clone(), &ex.label, v)?;
    }
    Ok(store)
}

fn encode_corpus(encoder: &Encoder, cache: &mut EmbeddingCache, corpus: &Corpus) -> Result<VectorStore> {
    let vectors = cache.encode_examples(encoder, corpus.examples())?;
    let dim = vectors
        .first()
        .map(EmbeddingVector::dim)
        .or(encoder.dim())
        .ok_or_else(|| Error::invalid("corpus is empty"))?;
    store_from(corpus, vectors, dim)
}

fn texts_by_id(corpus: &Corpus) -> HashMap<String, String> {
    corpus
        .examples()
        .iter()
        .map(|ex| (ex.id.clone(), ex.text.clone()))
        .collect()
}

fn build_decoder(cfg: &PipelineConfig, reference: &VectorStore, corpus: &Corpus) -> Result<Option<DecoderBackend>> {
    Ok(match cfg.decoder_spec()? {
        DecoderSpec::None => None,
        DecoderSpec::Mock => Some(DecoderBackend::Mock(MockDecoder::new(
            Arc::new(reference.clone()),
            Arc::new(texts_by_id(corpus)),
        )?)),
        DecoderSpec::Remote(url) => Some(DecoderBackend::Remote(RemoteDecoder::with_timeout(
            &url,
            &cfg.prompt_template,
            cfg.max_tokens,
            cfg.decoder_timeout(),
        )?)),
    })
}

fn load_bridge(cfg: &PipelineConfig, dim: usize) -> Result<Projector> {
    let projector = match &cfg.projector {
        Some(path) => load_projector(path)?,
        None => Projector::identity(dim)?,
    };
    if projector.in_dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: projector.in_dim(),
        });
    }
    Ok(projector)
}

/// Plans, interpolates and (in text mode) projects and decodes.
fn synthesize(cfg: &PipelineConfig, store: &VectorStore, corpus: &Corpus) -> Result<Vec<SyntheticRecord>> {
    let seed = cfg.seed()?;
    let counts: Vec<(String, usize)> = store
        .labels()
        .iter()
        .cloned()
        .zip(store.class_members().iter().map(Vec::len))
        .collect();
    let plan = build_plan(
        &counts,
        &cfg.plan_target()?,
        cfg.k_neighbors,
        cfg.lambda,
        derive_seed(seed, &[PLAN_STREAM]),
    )
    .stage("plan")?;
    let options = GenerationOptions {
        metric: cfg.metric,
        normalize_output: cfg.normalize_synthetic,
    };
    let mut records = generate_synthetic_vectors(store, &plan, &options).stage("interpolate")?;
    if cfg.decode_mode == DecodeMode::Text {
        let projector = load_bridge(cfg, store.dim()).stage("project")?;
        let decoder = build_decoder(cfg, store, corpus)
            .stage("decode")?
            .ok_or_else(|| Error::Config("text mode without a decoder".into()))?;
        decode_records(&decoder, &projector, &mut records, cfg.max_in_flight).stage("decode")?;
    }
    Ok(records)
}

fn per_class_counts(store: &VectorStore, records: &[SyntheticRecord]) -> Vec<ClassCount> {
    let members = store.class_members();
    store
        .labels()
        .iter()
        .zip(&members)
        .map(|(label, m)| ClassCount {
            label: label.clone(),
            real: m.len(),
            synthetic: records.iter().filter(|r| &r.label == label).count(),
        })
        .collect()
}

/// Everything `augment` produces, before it is written.
#[derive(Debug, Clone)]
pub struct AugmentOutput {
    pub real_store: VectorStore,
    pub synthetic_store: VectorStore,
    pub records: Vec<SyntheticRecord>,
    pub stats: RunStats,
}

/// embed → plan → interpolate → project → decode, without side effects.
pub fn augment(cfg: &PipelineConfig) -> Result<AugmentOutput> {
    cfg.validate_for_augment()?;
    let seed = cfg.seed()?;
    with_pool(cfg, || {
        let mut stats = RunStats::default();
        let mut corpus = load_input(cfg, cfg.corpus_path()?, &mut stats).stage("load")?;
        if let Some(total) = cfg.subsample_total {
            corpus = corpus::subsample_per_class(&corpus, total, derive_seed(seed, &[SUBSAMPLE_STREAM]))
                .stage("load")?;
        }
        let encoder = build_encoder(cfg).stage("embed")?;
        let real_store = encode_corpus(&encoder, &mut EmbeddingCache::new(), &corpus).stage("embed")?;
        let records = synthesize(cfg, &real_store, &corpus)?;

        let mut synthetic_store = VectorStore::new(real_store.dim(), real_store.labels().to_vec())?;
        for r in &records {
            synthetic_store.push_labeled(r.id.clone(), &r.label, r.vector.clone())?;
        }
        stats.n_real = real_store.len();
        stats.n_synthetic = records.len();
        stats.decode_failures = records.iter().filter(|r| r.decode_error.is_some()).count();
        stats.per_class = per_class_counts(&real_store, &records);
        Ok(AugmentOutput {
            real_store,
            synthetic_store,
            records,
            stats,
        })
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: serde_json::Value,
    stats: &'a RunStats,
}

fn write_manifest(cfg: &PipelineConfig, command: &str, stats: &RunStats) -> Result<()> {
    let manifest = Manifest {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        command,
        config: cfg.manifest_value(),
        stats,
    };
    let path = cfg.out_dir()?.join("run_manifest.json");
    write_file(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        w.write_all(b"\n")
    })
}

#[derive(Serialize)]
struct DecodedLine<'a> {
    id: &'a str,
    text: &'a str,
    label: &'a str,
}

#[derive(Serialize)]
struct DecodeErrorLine<'a> {
    id: &'a str,
    decode_error: &'a str,
}

fn write_synthetic(dir: &Path, store: &VectorStore, records: &[SyntheticRecord], decoded: bool) -> Result<()> {
    create_dir(dir)?;
    write_store(store, &dir.join("synthetic.smtx"))?;
    write_file(&dir.join("provenance.jsonl"), |w| write_provenance(records, w))?;
    if decoded {
        write_file(&dir.join("decoded.jsonl"), |w| {
            for r in records {
                if let Some(text) = &r.text {
                    serde_json::to_writer(&mut *w, &DecodedLine { id: &r.id, text, label: &r.label })?;
                    w.write_all(b"\n")?;
                }
            }
            Ok(())
        })?;
        if records.iter().any(|r| r.decode_error.is_some()) {
            write_file(&dir.join("decode_errors.jsonl"), |w| {
                for r in records {
                    if let Some(e) = &r.decode_error {
                        serde_json::to_writer(&mut *w, &DecodeErrorLine { id: &r.id, decode_error: e })?;
                        w.write_all(b"\n")?;
                    }
                }
                Ok(())
            })?;
        }
    }
    Ok(())
}

pub fn cmd_augment(cfg: &PipelineConfig, stdout: &mut dyn Write) -> Result<AugmentOutput> {
    let output = augment(cfg)?;
    let out = cfg.out_dir()?;
    (|| {
        create_dir(&out.join("vectors"))?;
        write_store(&output.real_store, &out.join("vectors").join("real.smtx"))?;
        write_synthetic(
            &out.join("synthetic"),
            &output.synthetic_store,
            &output.records,
            cfg.decode_mode == DecodeMode::Text,
        )?;
        write_manifest(cfg, "augment", &output.stats)
    })()
    .stage("write")?;
    let _ = writeln!(stdout, "synthetic records: {}", output.records.len());
    for c in &output.stats.per_class {
        let _ = writeln!(stdout, "  {}: real={} synthetic={}", c.label, c.real, c.synthetic);
    }
    if output.stats.decode_failures > 0 {
        let _ = writeln!(stdout, "decode failures: {}", output.stats.decode_failures);
    }
    Ok(output)
}

/// Result of the three-condition experiment.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub result: ExperimentResult,
    pub real_store: VectorStore,
    pub records: Vec<SyntheticRecord>,
    pub synthetic_store: VectorStore,
    pub stats: RunStats,
}

fn reencode_records(encoder: &Encoder, records: &[SyntheticRecord]) -> (LabeledFeatures, usize) {
    let decoded: Vec<&SyntheticRecord> = records.iter().filter(|r| r.text.is_some()).collect();
    let texts: Vec<&str> = decoded.iter().map(|r| r.text.as_deref().unwrap()).collect();
    let mut failures = records.len() - decoded.len();
    let vectors: Vec<Option<EmbeddingVector>> = match encoder.encode(&texts) {
        Ok(vs) => vs.into_iter().map(Some).collect(),
        Err(_) => texts
            .iter()
            .map(|t| encoder.encode(&[t]).ok().and_then(|mut v| v.pop()))
            .collect(),
    };
    let mut out = LabeledFeatures::default();
    for (r, v) in decoded.iter().zip(vectors) {
        match v {
            Some(v) => {
                out.features.push(v);
                out.labels.push(r.label.clone());
            }
            None => failures += 1,
        }
    }
    (out, failures)
}

fn labeled(store: &VectorStore) -> LabeledFeatures {
    LabeledFeatures {
        features: store.entries().iter().map(|e| e.vector.clone()).collect(),
        labels: store
            .entries()
            .iter()
            .map(|e| store.label(e.label_id).to_string())
            .collect(),
    }
}

/// Real-only, real+synthetic and synthetic-only classifiers scored on one
/// held-out real test set.
pub fn run_experiment(cfg: &PipelineConfig) -> Result<ExperimentRun> {
    cfg.validate_for_eval()?;
    let seed = cfg.seed()?;
    with_pool(cfg, || {
        let mut stats = RunStats::default();
        let corpus = load_input(cfg, cfg.corpus_path()?, &mut stats).stage("load")?;
        let (mut train, mut test) = match &cfg.test_corpus {
            Some(path) => {
                let test = load_input(cfg, path, &mut stats).stage("load")?;
                (corpus, test)
            }
            None => corpus::split_corpus(&corpus, cfg.train_fraction, derive_seed(seed, &[SPLIT_STREAM]))
                .stage("split")?,
        };
        if let Some(total) = cfg.subsample_total {
            train = corpus::subsample_per_class(&train, total, derive_seed(seed, &[SUBSAMPLE_STREAM]))
                .stage("split")?;
        }
        if let Some(total) = cfg.test_total {
            test = corpus::subsample_per_class(&test, total, derive_seed(seed, &[TEST_SUBSAMPLE_STREAM]))
                .stage("split")?;
        }
        let classes = train.labels().to_vec();
        if let Some(ex) = test.examples().iter().find(|ex| !classes.contains(&ex.label)) {
            return Err(Error::invalid(format!(
                "test example {:?} has label {:?} unseen in training",
                ex.id, ex.label
            ))
            .in_stage("split"));
        }

        let encoder = build_encoder(cfg).stage("embed")?;
        let mut cache = EmbeddingCache::new();
        let train_store = encode_corpus(&encoder, &mut cache, &train).stage("embed")?;
        let test_vectors = cache.encode_examples(&encoder, test.examples()).stage("embed")?;
        let test_set = LabeledFeatures {
            features: test_vectors,
            labels: test.examples().iter().map(|ex| ex.label.clone()).collect(),
        };

        let records = synthesize(cfg, &train_store, &train)?;
        let synthetic = match cfg.decode_mode {
            DecodeMode::VectorOnly => LabeledFeatures {
                features: records.iter().map(|r| r.vector.clone()).collect(),
                labels: records.iter().map(|r| r.label.clone()).collect(),
            },
            DecodeMode::Text => {
                let (features, failures) = reencode_records(&encoder, &records);
                stats.reencode_failures = failures;
                features
            }
        };
        let mut synthetic_store = VectorStore::new(train_store.dim(), classes.clone())?;
        for r in &records {
            synthetic_store.push_labeled(r.id.clone(), &r.label, r.vector.clone())?;
        }

        let result = run_conditions(&labeled(&train_store), &synthetic, &test_set, &classes, &cfg.head_spec(), seed)
            .stage("evaluate")?;
        stats.n_real = train_store.len();
        stats.n_test = test_set.len();
        stats.n_synthetic = records.len();
        stats.decode_failures = records.iter().filter(|r| r.decode_error.is_some()).count();
        stats.per_class = per_class_counts(&train_store, &records);
        stats.skipped_conditions = result.skipped.clone();
        Ok(ExperimentRun {
            result,
            real_store: train_store,
            records,
            synthetic_store,
            stats,
        })
    })
}

pub fn cmd_eval(cfg: &PipelineConfig, stdout: &mut dyn Write) -> Result<ExperimentRun> {
    let run = run_experiment(cfg)?;
    let out = cfg.out_dir()?;
    (|| {
        create_dir(&out.join("vectors"))?;
        write_store(&run.real_store, &out.join("vectors").join("real.smtx"))?;
        let reports = out.join("reports");
        create_dir(&reports)?;
        for r in &run.result.reports {
            write_file(&reports.join(format!("{}.json", r.condition)), |w| {
                serde_json::to_writer_pretty(&mut *w, r)?;
                w.write_all(b"\n")
            })?;
        }
        write_synthetic(
            &out.join("synthetic"),
            &run.synthetic_store,
            &run.records,
            cfg.decode_mode == DecodeMode::Text,
        )?;
        write_manifest(cfg, "eval", &run.stats)
    })()
    .stage("write")?;
    let _ = write!(stdout, "{}", format_table(&run.result.reports));
    for s in &run.result.skipped {
        let _ = writeln!(stdout, "skipped {}: {}", s.condition, s.reason);
    }
    Ok(run)
}

/// Embeds a corpus into `vectors/store.smtx`.
pub fn cmd_encode(cfg: &PipelineConfig, stdout: &mut dyn Write) -> Result<VectorStore> {
    cfg.validate_for_encode()?;
    let mut stats = RunStats::default();
    let store = with_pool(cfg, || {
        let corpus = load_input(cfg, cfg.corpus_path()?, &mut stats).stage("load")?;
        let encoder = build_encoder(cfg).stage("embed")?;
        encode_corpus(&encoder, &mut EmbeddingCache::new(), &corpus).stage("embed")
    })?;
    stats.n_real = store.len();
    let out = cfg.out_dir()?;
    (|| {
        create_dir(&out.join("vectors"))?;
        write_store(&store, &out.join("vectors").join("store.smtx"))?;
        write_manifest(cfg, "encode", &stats)
    })()
    .stage("write")?;
    let _ = writeln!(stdout, "dim={} entries={}", store.dim(), store.len());
    Ok(store)
}

/// Cleans every example and writes `cleaned.jsonl`.
pub fn cmd_clean(cfg: &PipelineConfig, stdout: &mut dyn Write) -> Result<Corpus> {
    cfg.validate_for_clean()?;
    let raw = corpus::load_corpus(cfg.corpus_path()?, cfg.corpus_format).stage("load")?;
    let cleaned = corpus::clean_corpus(&raw);
    let stats = RunStats {
        dropped_after_cleaning: cleaned.dropped,
        n_real: cleaned.corpus.len(),
        ..Default::default()
    };
    let out = cfg.out_dir()?;
    (|| {
        create_dir(out)?;
        let path = out.join("cleaned.jsonl");
        write_file(&path, |w| corpus::write_jsonl(&cleaned.corpus, w))?;
        write_manifest(cfg, "clean", &stats)
    })()
    .stage("write")?;
    let _ = writeln!(stdout, "kept={} dropped={}", cleaned.corpus.len(), cleaned.dropped);
    Ok(cleaned.corpus)
}

/// Human-readable summary of a vector store.
pub fn inspect_store(store: &VectorStore) -> String {
    let mut s = format!("dim={} entries={}\n", store.dim(), store.len());
    if store.is_empty() {
        return s;
    }
    for (label, members) in store.labels().iter().zip(store.class_members()) {
        s.push_str(&format!("class {label}: {}\n", members.len()));
    }
    let norms: Vec<f64> = store.entries().iter().map(|e| e.vector.norm()).collect();
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    s.push_str(&format!("norm min={min:.6} mean={mean:.6} max={max:.6}\n"));
    s
}

pub fn cmd_inspect(path: &Path, stdout: &mut dyn Write) -> Result<String> {
    let store = read_store(path).stage("inspect")?;
    let summary = inspect_store(&store);
    let _ = write!(stdout, "{summary}");
    Ok(summary)
}

/// Synthetic records as corpus examples (decoded ones only).
pub fn decoded_examples(records: &[SyntheticRecord]) -> Vec<TextExample> {
    records
        .iter()
        .filter_map(|r| {
            r.text
                .as_ref()
                .map(|t| TextExample::new(r.id.clone(), t.clone(), r.label.clone()))
        })
        .collect()
}
