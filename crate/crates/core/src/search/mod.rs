//! Explanation search: the top-k prefix search and the spatial
//! forward/backward search, each exposed as an [`Explainer`].

mod spatial;
mod strategy;
mod topk;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use spatial::SpatialExplainer;
pub use strategy::{EmptyInit, ExpInit, NearestFirst, NearestPerComponent, PairSelector, RoundRobin};
pub use topk::{activation_order, TopKExplainer};

use crate::anchor::Anchor;
use crate::error::{AleError, Result};
use crate::explanation::{ActivationBounds, Explanation, Pair, Paradigm};
use crate::model::{LatentInstance, ModelBundle};
use crate::registry::Registry;
use crate::verify::VerifyResult;

pub const DEFAULT_PAIR_STRATEGY: &str = "nearest";
pub const DEFAULT_INIT_STRATEGY: &str = "empty";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub paradigm: Paradigm,
    /// Registered [`PairSelector`] name; ignored for top-k.
    pub pair_strategy: String,
    /// Registered [`ExpInit`] name; ignored for top-k.
    pub init_strategy: String,
    /// Distance slack widening every derived interval.
    pub slack: f64,
    /// Forward-pass size cap; reaching it unverified ends the search.
    pub max_pairs: Option<usize>,
    /// Logit margin every domination must clear.
    pub margin: f64,
    #[serde(skip)]
    pub time_limit: Option<Duration>,
    #[serde(skip)]
    pub record_trace: bool,
}

impl SearchConfig {
    pub fn new(paradigm: Paradigm, slack: f64) -> Self {
        SearchConfig {
            paradigm,
            pair_strategy: DEFAULT_PAIR_STRATEGY.to_string(),
            init_strategy: DEFAULT_INIT_STRATEGY.to_string(),
            slack,
            max_pairs: None,
            margin: 0.0,
            time_limit: None,
            record_trace: false,
        }
    }

    /// Defaults with the bundle's distance slack.
    pub fn for_bundle(paradigm: Paradigm, bundle: &ModelBundle) -> Self {
        SearchConfig::new(paradigm, bundle.distance_slack())
    }

    pub fn with_strategy(mut self, name: impl Into<String>) -> Self {
        self.pair_strategy = name.into();
        self
    }

    pub fn with_init(mut self, name: impl Into<String>) -> Self {
        self.init_strategy = name.into();
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn with_max_pairs(mut self, cap: usize) -> Self {
        self.max_pairs = Some(cap);
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slack >= 0.0) {
            return Err(AleError::InvalidArgument(format!("slack must be >= 0, got {}", self.slack)));
        }
        if !(self.margin >= 0.0) {
            return Err(AleError::InvalidArgument(format!(
                "margin must be >= 0, got {}",
                self.margin
            )));
        }
        Ok(())
    }

    pub(crate) fn deadline(&self) -> Deadline {
        Deadline(self.time_limit.map(|t| Instant::now() + t))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Deadline(Option<Instant>);

impl Deadline {
    pub(crate) fn passed(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Verified,
    /// Forward pass hit `max_pairs` before verifying.
    CapReached,
    /// Wall-clock limit hit; the explanation is whatever the search held.
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pass {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceItem {
    Prototype(usize),
    Pair(Pair),
}

/// One search step: the element added (forward) or tentatively removed
/// (backward), and whether the explanation verified afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub pass: Pass,
    pub item: TraceItem,
    pub verified: bool,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub explanation: Explanation,
    pub bounds: ActivationBounds,
    pub verification: VerifyResult,
    pub status: SearchStatus,
    pub predicted: usize,
    /// Size at the end of the forward pass, before pruning.
    pub forward_len: usize,
    pub trace: Vec<TraceEvent>,
}

/// One explanation paradigm: how explanations are interpreted as bounds and
/// how a sufficient explanation is searched for.
pub trait Explainer: Send + Sync {
    fn paradigm(&self) -> Paradigm;

    fn bounds(&self, anchor: &Anchor, explanation: &Explanation, slack: f64) -> Result<ActivationBounds>;

    fn explain(&self, anchor: &Anchor, cfg: &SearchConfig, registry: &Registry) -> Result<SearchOutcome>;

    /// Shrinks a verified explanation to a subset-minimal one. The default
    /// returns the explanation unchanged (top-k prefixes are already minimal).
    fn prune(
        &self,
        anchor: &Anchor,
        explanation: &Explanation,
        cfg: &SearchConfig,
    ) -> Result<Explanation> {
        let _ = (anchor, cfg);
        Ok(explanation.clone())
    }
}

/// Explains `instance` with the built-in registry.
pub fn explain(bundle: &ModelBundle, instance: &LatentInstance, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let registry = Registry::builtin();
    let anchor = Anchor::new(bundle, instance)?;
    registry.explain(&anchor, cfg)
}

/// Shortest verified prefix of the activation-sorted prototypes.
pub fn topk_ale(bundle: &ModelBundle, instance: &LatentInstance, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let anchor = Anchor::new(bundle, instance)?;
    TopKExplainer.explain(&anchor, cfg, Registry::builtin())
}

/// Forward/backward spatial search under `cfg.paradigm` (triangle or
/// hypersphere).
pub fn spatial_ale(bundle: &ModelBundle, instance: &LatentInstance, cfg: &SearchConfig) -> Result<SearchOutcome> {
    if !cfg.paradigm.is_spatial() {
        return Err(AleError::ParadigmMismatch {
            expected: "triangle or hypersphere".into(),
            got: cfg.paradigm.to_string(),
        });
    }
    explain(bundle, instance, cfg)
}

/// Next pair under the named strategy.
pub fn next_pair(
    strategy: &str,
    distances: &[Vec<f64>],
    member: &[Vec<bool>],
    cursor: &mut usize,
) -> Result<Option<Pair>> {
    Ok(Registry::builtin()
        .selector(strategy)?
        .next_pair(distances, member, cursor))
}

/// Subset-minimizing backward pass over a verified explanation.
pub fn backward_prune(anchor: &Anchor, explanation: &Explanation, cfg: &SearchConfig) -> Result<Explanation> {
    Registry::builtin()
        .explainer(explanation.paradigm.name())?
        .prune(anchor, explanation, cfg)
}
