use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ale_core::io::{for_each_instance, ExplanationDocument};
use ale_core::report::InstanceRecord;
use ale_core::{load_bundle, AleError, Anchor, LatentInstance, ModelBundle, Paradigm, Registry, SearchConfig};
use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::args::{ModelOpts, SearchOpts};

/// Process exit status, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Success = 0,
    /// Some explanation is unverified (size cap, timeout, exhaustion).
    Unverified = 1,
    InputError = 2,
    /// The engine disagrees with an oracle or with itself.
    Breach = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }
}

pub fn load_model(path: &Path, opts: &ModelOpts) -> Result<ModelBundle> {
    let mut bundle = load_bundle(path)?;
    if let Some(eps) = opts.epsilon_override {
        bundle.set_epsilon(eps)?;
    }
    if let Some(slack) = opts.slack {
        bundle.set_distance_slack(slack)?;
    }
    Ok(bundle)
}

pub fn search_config(paradigm: Paradigm, bundle: &ModelBundle, model: &ModelOpts, search: &SearchOpts) -> Result<SearchConfig> {
    let registry = Registry::builtin();
    registry.selector(&search.strategy)?;
    registry.initializer(&search.init)?;
    let mut cfg = SearchConfig::for_bundle(paradigm, bundle)
        .with_strategy(&search.strategy)
        .with_init(&search.init)
        .with_margin(model.margin);
    if let Some(cap) = search.max_pairs {
        cfg = cfg.with_max_pairs(cap);
    }
    if let Some(limit) = search.timeout_per_instance {
        cfg = cfg.with_time_limit(limit);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn verify_config(bundle: &ModelBundle, model: &ModelOpts, paradigm: Paradigm) -> Result<SearchConfig> {
    let cfg = SearchConfig::for_bundle(paradigm, bundle).with_margin(model.margin);
    cfg.validate()?;
    Ok(cfg)
}

/// Explains one instance. Failures become inline documents.
pub fn explain_one(
    bundle: &ModelBundle,
    instance: &LatentInstance,
    cfg: &SearchConfig,
    with_trace: bool,
) -> (ExplanationDocument, InstanceRecord, Status) {
    let start = Instant::now();
    let mut record = InstanceRecord {
        instance_id: instance.id.clone(),
        label: instance.label,
        predicted: None,
        size: None,
        num_components: instance.num_components(),
        status: None,
        error: None,
        wall: None,
    };
    let fail = |record: &mut InstanceRecord, predicted: Option<usize>, err: &AleError, status: Status| {
        record.predicted = predicted;
        record.error = Some(err.to_string());
        let mut doc = ExplanationDocument::failure(cfg.paradigm, &instance.id, instance.label, err);
        doc.predicted_class = predicted;
        (doc, status)
    };
    let anchor = match Anchor::new(bundle, instance) {
        Ok(a) => a,
        Err(e) => {
            let (doc, status) = fail(&mut record, None, &e, Status::InputError);
            record.wall = Some(start.elapsed());
            return (doc, record, status);
        }
    };
    let (doc, status) = match Registry::builtin().explain(&anchor, cfg) {
        Ok(outcome) => {
            record.predicted = Some(outcome.predicted);
            record.size = Some(outcome.explanation.len());
            record.status = Some(outcome.status);
            let status = if outcome.verification.verified {
                Status::Success
            } else {
                Status::Unverified
            };
            (ExplanationDocument::from_outcome(&outcome, instance.label, with_trace), status)
        }
        Err(e @ AleError::Exhausted { .. }) => fail(&mut record, Some(anchor.predicted), &e, Status::Unverified),
        Err(e) => fail(&mut record, Some(anchor.predicted), &e, Status::InputError),
    };
    record.wall = Some(start.elapsed());
    (doc, record, status)
}

/// Streams the dataset, runs `work` on chunks of instances in parallel and
/// hands results to `sink` in dataset order. Only instances whose position
/// is in `only` are processed when it is given.
pub fn process_dataset<R, W, S>(
    dataset: &Path,
    jobs: usize,
    only: Option<&BTreeSet<usize>>,
    work: W,
    mut sink: S,
) -> Result<()>
where
    R: Send,
    W: Fn(&LatentInstance) -> R + Sync,
    S: FnMut(&LatentInstance, R) -> Result<()>,
{
    let jobs = jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker threads")?;
    let chunk_len = if jobs == 1 { 1 } else { jobs * 8 };
    let mut chunk: Vec<LatentInstance> = Vec::with_capacity(chunk_len);
    let mut flush = |chunk: &mut Vec<LatentInstance>| -> Result<()> {
        let results: Vec<R> = pool.install(|| chunk.par_iter().map(&work).collect());
        for (inst, r) in chunk.iter().zip(results) {
            sink(inst, r)?;
        }
        chunk.clear();
        Ok(())
    };
    let mut position = 0usize;
    let mut sink_error = None;
    let streamed = for_each_instance(dataset, |inst| {
        let keep = only.is_none_or(|set| set.contains(&position));
        position += 1;
        if keep {
            chunk.push(inst);
            if chunk.len() == chunk_len {
                if let Err(e) = flush(&mut chunk) {
                    sink_error = Some(e);
                    return Err(AleError::InvalidArgument("output failed".into()));
                }
            }
        }
        Ok(())
    });
    if let Some(e) = sink_error {
        return Err(e);
    }
    streamed.with_context(|| format!("reading dataset {}", dataset.display()))?;
    flush(&mut chunk)
}

/// Line-oriented output: stdout, or a file renamed into place on `finish`.
pub enum LineSink {
    Stdout(std::io::Stdout),
    File { tmp: PathBuf, dest: PathBuf, writer: BufWriter<File> },
}

impl LineSink {
    pub fn open(dest: Option<&Path>) -> Result<LineSink> {
        match dest {
            None => Ok(LineSink::Stdout(std::io::stdout())),
            Some(dest) => {
                let mut tmp = dest.as_os_str().to_owned();
                tmp.push(".tmp");
                let tmp = PathBuf::from(tmp);
                let file = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
                Ok(LineSink::File {
                    tmp,
                    dest: dest.to_path_buf(),
                    writer: BufWriter::new(file),
                })
            }
        }
    }

    pub fn line(&mut self, text: &str) -> Result<()> {
        match self {
            LineSink::Stdout(out) => {
                let mut lock = out.lock();
                writeln!(lock, "{text}")?;
            }
            LineSink::File { writer, .. } => writeln!(writer, "{text}")?,
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        match self {
            LineSink::Stdout(out) => out.lock().flush()?,
            LineSink::File { tmp, dest, mut writer } => {
                writer.flush()?;
                drop(writer);
                fs::rename(&tmp, &dest).with_context(|| format!("writing {}", dest.display()))?;
            }
        }
        Ok(())
    }
}

/// Writes one line to stdout; a closed pipe is an error, not a panic.
pub fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

/// File name for an instance id: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn file_stem_for(id: &str) -> String {
    let stem: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    if stem.is_empty() || stem.starts_with('.') {
        format!("_{stem}")
    } else {
        stem
    }
}
