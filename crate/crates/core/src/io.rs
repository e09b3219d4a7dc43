//! Dataset streaming and explanation documents.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::Path;

use serde::de::{DeserializeOwned, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{AleError, Result};
use crate::explanation::{ActivationBounds, Explanation, Pair, Paradigm};
use crate::model::LatentInstance;
use crate::search::{SearchOutcome, SearchStatus, TraceEvent};
use crate::verify::VerifyResult;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AleError + '_ {
    move |source| AleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Calls `f` on every record of a JSON array or NDJSON file, one record in
/// memory at a time. Stops at the first error from `f`.
pub fn for_each_record<T, F>(path: impl AsRef<Path>, mut f: F) -> Result<()>
where
    T: DeserializeOwned,
    F: FnMut(T) -> Result<()>,
{
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let context = || path.display().to_string();

    let first = loop {
        let buf = reader.fill_buf().map_err(io_err(path))?;
        if buf.is_empty() {
            return Ok(());
        }
        match buf.iter().position(|b| !b.is_ascii_whitespace()) {
            Some(i) => {
                let b = buf[i];
                reader.consume(i);
                break b;
            }
            None => {
                let n = buf.len();
                reader.consume(n);
            }
        }
    };

    if first == b'[' {
        let mut failure = None;
        let mut de = serde_json::Deserializer::from_reader(reader);
        let visitor = RecordVisitor {
            f: &mut f,
            failure: &mut failure,
            marker: PhantomData,
        };
        let parsed = (&mut de).deserialize_seq(visitor);
        if let Some(err) = failure {
            return Err(err);
        }
        parsed.map_err(|e| AleError::malformed(context(), e))?;
        de.end().map_err(|e| AleError::malformed(context(), e))?;
        Ok(())
    } else {
        for item in serde_json::Deserializer::from_reader(reader).into_iter::<T>() {
            f(item.map_err(|e| AleError::malformed(context(), e))?)?;
        }
        Ok(())
    }
}

struct RecordVisitor<'a, T, F> {
    f: &'a mut F,
    failure: &'a mut Option<AleError>,
    marker: PhantomData<T>,
}

impl<'de, T, F> Visitor<'de> for RecordVisitor<'_, T, F>
where
    T: DeserializeOwned,
    F: FnMut(T) -> Result<()>,
{
    type Value = ();

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an array of records")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<(), A::Error> {
        while let Some(item) = seq.next_element::<T>()? {
            if let Err(e) = (self.f)(item) {
                *self.failure = Some(e);
                return Err(serde::de::Error::custom("record handler failed"));
            }
        }
        Ok(())
    }
}

pub fn for_each_instance<F>(path: impl AsRef<Path>, f: F) -> Result<()>
where
    F: FnMut(LatentInstance) -> Result<()>,
{
    for_each_record(path, f)
}

pub fn read_instances(path: impl AsRef<Path>) -> Result<Vec<LatentInstance>> {
    let mut out = Vec::new();
    for_each_instance(path, |inst| {
        out.push(inst);
        Ok(())
    })?;
    Ok(out)
}

/// Writes records as NDJSON.
pub fn write_ndjson<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    write_atomic(path.as_ref(), |w| {
        for r in records {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

/// Pretty-printed JSON, written to a temporary file then renamed.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_atomic(path.as_ref(), |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::result::Result<(), Box<dyn std::error::Error>>,
) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let file = File::create(&tmp).map_err(io_err(&tmp))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| AleError::malformed(tmp.display().to_string(), e))?;
    w.flush().map_err(io_err(&tmp))?;
    drop(w);
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationDocument {
    pub verified: bool,
    pub unverified: Vec<usize>,
    /// Maximally favoring vector per undominated class.
    #[serde(default)]
    pub witnesses: BTreeMap<usize, Vec<f64>>,
}

impl From<&VerifyResult> for VerificationDocument {
    fn from(v: &VerifyResult) -> Self {
        VerificationDocument {
            verified: v.verified,
            unverified: v.unverified_classes.clone(),
            witnesses: v
                .witnesses
                .iter()
                .map(|(&k, w)| (k, w.vector.clone()))
                .collect(),
        }
    }
}

/// One explanation as written by `ale explain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub paradigm: Paradigm,
    pub instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prototypes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ActivationBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<SearchStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_trace: Option<Vec<TraceEvent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExplanationDocument {
    pub fn from_outcome(outcome: &SearchOutcome, label: Option<usize>, with_trace: bool) -> Self {
        let e = &outcome.explanation;
        let (prototypes, pairs) = if e.paradigm.is_spatial() {
            (None, Some(e.pairs.clone()))
        } else {
            (Some(e.prototypes.clone()), None)
        };
        ExplanationDocument {
            paradigm: e.paradigm,
            instance_id: e.anchor_id.clone(),
            predicted_class: Some(outcome.predicted),
            label,
            prototypes,
            pairs,
            size: Some(e.len()),
            bounds: Some(outcome.bounds.clone()),
            verification: Some((&outcome.verification).into()),
            status: Some(outcome.status),
            search_trace: with_trace.then(|| outcome.trace.clone()),
            error: None,
        }
    }

    /// Inline record of a per-instance failure.
    pub fn failure(paradigm: Paradigm, instance_id: &str, label: Option<usize>, error: &AleError) -> Self {
        ExplanationDocument {
            paradigm,
            instance_id: instance_id.to_string(),
            predicted_class: None,
            label,
            prototypes: None,
            pairs: None,
            size: None,
            bounds: None,
            verification: None,
            status: None,
            search_trace: None,
            error: Some(error.to_string()),
        }
    }

    pub fn is_failure(&self) -> bool {
        self.error.is_some()
    }

    pub fn explanation(&self) -> Result<Explanation> {
        let context = || format!("explanation for {}", self.instance_id);
        if let Some(err) = &self.error {
            return Err(AleError::malformed(context(), format!("document records a failure: {err}")));
        }
        if self.paradigm.is_spatial() {
            if self.prototypes.is_some() {
                return Err(AleError::malformed(context(), "spatial explanation with a prototype list"));
            }
            let pairs = self
                .pairs
                .clone()
                .ok_or_else(|| AleError::malformed(context(), "missing \"pairs\""))?;
            Ok(Explanation::spatial(self.paradigm, pairs, &self.instance_id))
        } else {
            if self.pairs.is_some() {
                return Err(AleError::malformed(context(), "top-k explanation with a pair list"));
            }
            let protos = self
                .prototypes
                .clone()
                .ok_or_else(|| AleError::malformed(context(), "missing \"prototypes\""))?;
            Ok(Explanation::top_k(protos, &self.instance_id))
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    Many(Vec<ExplanationDocument>),
    One(Box<ExplanationDocument>),
}

/// Reads a single document, an array of documents, or NDJSON.
pub fn read_explanations(path: impl AsRef<Path>) -> Result<Vec<ExplanationDocument>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for item in serde_json::Deserializer::from_reader(BufReader::new(file)).into_iter::<serde_json::Value>() {
        let value = item.map_err(|e| AleError::malformed(path.display().to_string(), e))?;
        match OneOrMany::deserialize(value).map_err(|e| AleError::malformed(path.display().to_string(), e))? {
            OneOrMany::Many(v) => out.extend(v),
            OneOrMany::One(d) => out.push(*d),
        }
    }
    Ok(out)
}

/// Only the fields `stats` needs when a label scan precedes sampling.
#[derive(Debug, Clone, Deserialize)]
pub struct InstanceHeader {
    pub id: String,
    #[serde(default)]
    pub label: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("ale-io-{}-{name}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir.join("data.json")
    }

    fn instances() -> Vec<LatentInstance> {
        vec![
            LatentInstance::new("a", vec![vec![0.0, 1.0]]).with_label(1),
            LatentInstance::new("b", vec![vec![2.0, 3.0], vec![4.0, 5.0]]),
        ]
    }

    #[test]
    fn reads_array_and_ndjson() {
        let p = tmp("array");
        fs::write(&p, format!("  \n{}", serde_json::to_string(&instances()).unwrap())).unwrap();
        assert_eq!(read_instances(&p).unwrap(), instances());

        let p = tmp("ndjson");
        write_ndjson(&p, &instances()).unwrap();
        assert_eq!(read_instances(&p).unwrap(), instances());
    }

    #[test]
    fn empty_file_has_no_instances() {
        let p = tmp("empty");
        fs::write(&p, "\n").unwrap();
        assert!(read_instances(&p).unwrap().is_empty());
    }

    #[test]
    fn handler_errors_propagate() {
        let p = tmp("handler");
        fs::write(&p, serde_json::to_string(&instances()).unwrap()).unwrap();
        let err = for_each_instance(&p, |_| Err(AleError::NotVerified)).unwrap_err();
        assert!(matches!(err, AleError::NotVerified));
    }

    #[test]
    fn malformed_and_missing_files() {
        let p = tmp("bad");
        fs::write(&p, "[{\"id\": 3}]").unwrap();
        assert!(matches!(read_instances(&p), Err(AleError::Malformed { .. })));
        let missing = tmp("missing").with_file_name("nope.json");
        match read_instances(&missing) {
            Err(AleError::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explanation_documents_round_trip() {
        let doc = ExplanationDocument {
            paradigm: Paradigm::Triangle,
            instance_id: "x".into(),
            predicted_class: Some(1),
            label: None,
            prototypes: None,
            pairs: Some(vec![(0, 3), (2, 1)]),
            size: Some(2),
            bounds: None,
            verification: None,
            status: Some(SearchStatus::Verified),
            search_trace: None,
            error: None,
        };
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"pairs\":[[0,3],[2,1]]"), "{text}");
        let p = tmp("expl");
        fs::write(&p, &text).unwrap();
        assert_eq!(read_explanations(&p).unwrap(), vec![doc.clone()]);
        write_ndjson(&p, &[doc.clone(), doc.clone()]).unwrap();
        assert_eq!(read_explanations(&p).unwrap().len(), 2);
        write_json(&p, &vec![doc.clone()]).unwrap();
        assert_eq!(read_explanations(&p).unwrap(), vec![doc.clone()]);
        assert_eq!(doc.explanation().unwrap().pairs, vec![(0, 3), (2, 1)]);
    }

    #[test]
    fn mixed_lists_are_rejected() {
        let doc = ExplanationDocument {
            paradigm: Paradigm::TopK,
            instance_id: "x".into(),
            predicted_class: None,
            label: None,
            prototypes: Some(vec![1]),
            pairs: Some(vec![(0, 1)]),
            size: None,
            bounds: None,
            verification: None,
            status: None,
            search_trace: None,
            error: None,
        };
        assert!(doc.explanation().is_err());
    }
}
