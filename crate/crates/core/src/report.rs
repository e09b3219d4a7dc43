//! Batch statistics over explanation runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AleError, Result};
use crate::explanation::Paradigm;
use crate::search::SearchStatus;

/// Tolerance of the weighted-mean check in [`StatsReport::validate`].
pub const MEAN_TOL: f64 = 1e-9;

/// Result of explaining one instance under one paradigm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub label: Option<usize>,
    pub predicted: Option<usize>,
    /// Explanation size; absent on failure.
    pub size: Option<usize>,
    pub num_components: usize,
    pub status: Option<SearchStatus>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall: Option<Duration>,
}

impl InstanceRecord {
    pub fn correct(&self) -> Option<bool> {
        Some(self.label? == self.predicted?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeSummary {
    pub avg_total: Option<f64>,
    pub avg_correct: Option<f64>,
    pub avg_incorrect: Option<f64>,
    /// Instances without a label; they only enter the total.
    pub avg_unlabeled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallTime {
    pub mean_ms: f64,
    pub p95_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParadigmStats {
    pub paradigm: Paradigm,
    /// Averages over verified explanations.
    pub sizes: SizeSummary,
    /// Top-k sizes times the number of latent components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjusted: Option<SizeSummary>,
    pub count_correct: usize,
    pub count_incorrect: usize,
    pub count_unlabeled: usize,
    pub timeouts: usize,
    pub cap_reached: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<WallTime>,
}

impl ParadigmStats {
    pub fn from_records(paradigm: Paradigm, records: &[InstanceRecord], timing: bool) -> Self {
        let verified: Vec<&InstanceRecord> = records
            .iter()
            .filter(|r| r.status == Some(SearchStatus::Verified) && r.size.is_some())
            .collect();
        let count = |want: Option<bool>| verified.iter().filter(|r| r.correct() == want).count();
        let sizes = summarize(&verified, |r| r.size.unwrap() as f64);
        let adjusted = (paradigm == Paradigm::TopK)
            .then(|| summarize(&verified, |r| (r.size.unwrap() * r.num_components) as f64));
        let wall_time = timing.then(|| wall_stats(records)).flatten();
        ParadigmStats {
            paradigm,
            sizes,
            adjusted,
            count_correct: count(Some(true)),
            count_incorrect: count(Some(false)),
            count_unlabeled: count(None),
            timeouts: status_count(records, SearchStatus::TimedOut),
            cap_reached: status_count(records, SearchStatus::CapReached),
            failures: records.iter().filter(|r| r.error.is_some()).count(),
            wall_time,
        }
    }

    pub fn count_total(&self) -> usize {
        self.count_correct + self.count_incorrect + self.count_unlabeled
    }

    fn check_summary(&self, s: &SizeSummary, what: &str) -> Result<()> {
        let parts = [
            (self.count_correct, s.avg_correct),
            (self.count_incorrect, s.avg_incorrect),
            (self.count_unlabeled, s.avg_unlabeled),
        ];
        let mut sum = 0.0;
        for (n, avg) in parts {
            if (n == 0) != avg.is_none() {
                return Err(invalid(format!("{} {what}: average present iff count > 0", self.paradigm)));
            }
            sum += n as f64 * avg.unwrap_or(0.0);
        }
        let n = self.count_total();
        match s.avg_total {
            None if n == 0 => Ok(()),
            Some(total) if n > 0 => {
                let mean = sum / n as f64;
                if (total - mean).abs() <= MEAN_TOL * (1.0 + mean.abs()) {
                    Ok(())
                } else {
                    Err(invalid(format!(
                        "{} {what}: avg_total {total} is not the weighted mean {mean}",
                        self.paradigm
                    )))
                }
            }
            _ => Err(invalid(format!("{} {what}: avg_total present iff count > 0", self.paradigm))),
        }
    }
}

/// The common value when every item agrees on one.
fn shared<T: Ord>(items: impl Iterator<Item = Option<T>>) -> Option<T> {
    let set: BTreeSet<Option<T>> = items.collect();
    if set.len() == 1 {
        set.into_iter().next().flatten()
    } else {
        None
    }
}

fn invalid(msg: String) -> AleError {
    AleError::malformed("stats report", msg)
}

fn status_count(records: &[InstanceRecord], status: SearchStatus) -> usize {
    records.iter().filter(|r| r.status == Some(status)).count()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn summarize(records: &[&InstanceRecord], size: impl Fn(&InstanceRecord) -> f64) -> SizeSummary {
    let group = |want: Option<bool>| mean(records.iter().filter(|r| r.correct() == want).map(|r| size(r)));
    SizeSummary {
        avg_total: mean(records.iter().map(|r| size(r))),
        avg_correct: group(Some(true)),
        avg_incorrect: group(Some(false)),
        avg_unlabeled: group(None),
    }
}

fn wall_stats(records: &[InstanceRecord]) -> Option<WallTime> {
    let mut ms: Vec<f64> = records
        .iter()
        .filter_map(|r| r.wall)
        .map(|d| d.as_secs_f64() * 1e3)
        .collect();
    if ms.is_empty() {
        return None;
    }
    ms.sort_by(f64::total_cmp);
    let rank = ((0.95 * ms.len() as f64).ceil() as usize).clamp(1, ms.len());
    Some(WallTime {
        mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
        p95_ms: ms[rank - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsReport {
    pub dataset: String,
    pub instances: usize,
    /// Fraction of labeled instances predicted correctly.
    pub accuracy: Option<f64>,
    /// `[H1, W1]` when every instance shares one grid.
    pub grid: Option<[usize; 2]>,
    pub num_components: Option<usize>,
    pub paradigms: Vec<ParadigmStats>,
    pub config: serde_json::Value,
}

impl StatsReport {
    /// `records[p][i]` is instance `i` under `paradigms[p]`, in dataset order.
    pub fn build(
        dataset: impl Into<String>,
        paradigms: &[Paradigm],
        records: &[Vec<InstanceRecord>],
        grids: &[Option<[usize; 2]>],
        config: serde_json::Value,
        timing: bool,
    ) -> Self {
        let first = records.first().map(Vec::as_slice).unwrap_or(&[]);
        let labeled: Vec<bool> = first.iter().filter_map(InstanceRecord::correct).collect();
        let accuracy = (!labeled.is_empty())
            .then(|| labeled.iter().filter(|&&c| c).count() as f64 / labeled.len() as f64);
        StatsReport {
            dataset: dataset.into(),
            instances: first.len(),
            accuracy,
            grid: shared(grids.iter().copied()),
            num_components: shared(first.iter().map(|r| Some(r.num_components))),
            paradigms: paradigms
                .iter()
                .zip(records)
                .map(|(&p, r)| ParadigmStats::from_records(p, r, timing))
                .collect(),
            config,
        }
    }

    /// Schema-level consistency: averages are weighted means of their parts
    /// and instance counts add up.
    pub fn validate(&self) -> Result<()> {
        if let Some(acc) = self.accuracy {
            if !(0.0..=1.0).contains(&acc) {
                return Err(invalid(format!("accuracy {acc} outside [0, 1]")));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.paradigms {
            if !seen.insert(p.paradigm) {
                return Err(invalid(format!("paradigm {} listed twice", p.paradigm)));
            }
            p.check_summary(&p.sizes, "sizes")?;
            match (&p.adjusted, p.paradigm) {
                (Some(adj), Paradigm::TopK) => p.check_summary(adj, "adjusted")?,
                (None, Paradigm::TopK) => return Err(invalid("top-k stats without adjusted sizes".into())),
                (Some(_), _) => return Err(invalid(format!("{} stats with adjusted sizes", p.paradigm))),
                (None, _) => {}
            }
            let accounted = p.count_total() + p.timeouts + p.cap_reached + p.failures;
            if accounted != self.instances {
                return Err(invalid(format!(
                    "{}: {accounted} outcomes for {} instances",
                    p.paradigm, self.instances
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, paradigm: Paradigm) -> Option<&ParadigmStats> {
        self.paradigms.iter().find(|p| p.paradigm == paradigm)
    }

    /// Aligned text table: one row per dataset with
    /// `Total / Correct / Incorrect` cells per paradigm.
    pub fn render_table(&self) -> String {
        let cell = |s: Option<&SizeSummary>| match s {
            None => String::new(),
            Some(s) => [s.avg_total, s.avg_correct, s.avg_incorrect]
                .iter()
                .map(|v| v.map_or("-".to_string(), fmt_size))
                .collect::<Vec<_>>()
                .join(" / "),
        };
        let grid = match (self.grid, self.num_components) {
            (Some([h, w]), _) => format!("{h}x{w}"),
            (None, Some(l)) => format!("L={l}"),
            (None, None) => "-".into(),
        };
        let accuracy = self.accuracy.map_or("-".to_string(), |a| format!("{a:.2}"));
        let topk = self.get(Paradigm::TopK);
        let row = vec![
            self.dataset.clone(),
            accuracy,
            cell(self.get(Paradigm::Triangle).map(|p| &p.sizes)),
            cell(self.get(Paradigm::Hypersphere).map(|p| &p.sizes)),
            cell(topk.map(|p| &p.sizes)),
            grid,
            cell(topk.and_then(|p| p.adjusted.as_ref())),
        ];
        let header: Vec<String> = [
            "Dataset",
            "Accuracy",
            "Triangle",
            "Hypersphere",
            "top-k",
            "H1xW1",
            "top-k (adj.)",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let widths: Vec<usize> = header.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
                .trim_end()
                .to_string()
        };
        let mut out = String::new();
        writeln!(out, "{}", line(&header)).unwrap();
        writeln!(
            out,
            "{}",
            widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-")
        )
        .unwrap();
        writeln!(out, "{}", line(&row)).unwrap();
        writeln!(out, "(cells: avg total / avg correct / avg incorrect)").unwrap();
        for p in &self.paradigms {
            if p.timeouts + p.cap_reached + p.failures > 0 {
                writeln!(
                    out,
                    "{}: {} timed out, {} hit the size cap, {} failed",
                    p.paradigm, p.timeouts, p.cap_reached, p.failures
                )
                .unwrap();
            }
        }
        out
    }
}

fn fmt_size(v: f64) -> String {
    format!("{v:.1}")
}

/// Seeded choice of up to `k` instances per label. Unlabeled instances are
/// never chosen. Returns positions in dataset order.
pub fn sample_per_class(labels: &[Option<usize>], k: usize, seed: u64) -> Vec<usize> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        if let Some(c) = label {
            by_class.entry(*c).or_default().push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::new();
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        chosen.extend(members.into_iter().take(k));
    }
    chosen.sort_unstable();
    chosen
}
