use crate::anchor::Anchor;
use crate::bounds::topk_bounds;
use crate::error::{AleError, Result};
use crate::explanation::{ActivationBounds, Explanation, Paradigm};
use crate::registry::Registry;
use crate::verify::verify_with_margin;

use super::{Explainer, Pass, SearchConfig, SearchOutcome, SearchStatus, TraceEvent, TraceItem};

/// Prototype indices by decreasing activation, ties toward lower index.
pub fn activation_order(activations: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..activations.len()).collect();
    order.sort_by(|&a, &b| activations[b].total_cmp(&activations[a]).then(a.cmp(&b)));
    order
}

/// Top-k paradigm: grow the prefix of the activation-sorted prototypes until
/// the implied box verifies.
#[derive(Debug, Default, Clone, Copy)]
pub struct TopKExplainer;

impl Explainer for TopKExplainer {
    fn paradigm(&self) -> Paradigm {
        Paradigm::TopK
    }

    fn bounds(&self, anchor: &Anchor, explanation: &Explanation, _slack: f64) -> Result<ActivationBounds> {
        if explanation.paradigm != Paradigm::TopK {
            return Err(AleError::ParadigmMismatch {
                expected: Paradigm::TopK.to_string(),
                got: explanation.paradigm.to_string(),
            });
        }
        explanation.validate(anchor.num_prototypes(), anchor.num_components())?;
        topk_bounds(
            &explanation.prototypes,
            anchor.activations(),
            anchor.bundle.sigma().max_value(),
        )
    }

    fn explain(&self, anchor: &Anchor, cfg: &SearchConfig, _registry: &Registry) -> Result<SearchOutcome> {
        cfg.validate()?;
        let deadline = cfg.deadline();
        let bundle = anchor.bundle;
        let c = anchor.predicted;
        let order = activation_order(anchor.activations().values());
        let ceiling = bundle.sigma().max_value();
        let mut trace = Vec::new();

        for k in 0..=order.len() {
            let prefix = &order[..k];
            let bounds = topk_bounds(prefix, anchor.activations(), ceiling)?;
            let verification = verify_with_margin(&bounds, bundle, c, cfg.margin)?;
            if cfg.record_trace && k > 0 {
                trace.push(TraceEvent {
                    pass: Pass::Forward,
                    item: TraceItem::Prototype(order[k - 1]),
                    verified: verification.verified,
                });
            }
            let stop = if verification.verified {
                Some(SearchStatus::Verified)
            } else if k == order.len() {
                return Err(AleError::Exhausted { pairs: k });
            } else if cfg.max_pairs.is_some_and(|cap| k >= cap) {
                Some(SearchStatus::CapReached)
            } else if deadline.passed() {
                Some(SearchStatus::TimedOut)
            } else {
                None
            };
            if let Some(status) = stop {
                return Ok(SearchOutcome {
                    explanation: Explanation::top_k(prefix.to_vec(), anchor.id()),
                    bounds,
                    verification,
                    status,
                    predicted: c,
                    forward_len: k,
                    trace,
                });
            }
        }
        unreachable!("the full prefix either verifies or exhausts")
    }
}
