use std::sync::Arc;

use crate::anchor::Anchor;
use crate::bounds::{aggregate_components, spatial_bounds, SpatialGeometry};
use crate::error::{AleError, Result};
use crate::explanation::{ActivationBounds, Explanation, Interval, Pair, Paradigm};
use crate::registry::Registry;
use crate::verify::{verify_with_margin, VerifyResult};

use super::{Deadline, Explainer, Pass, SearchConfig, SearchOutcome, SearchStatus, TraceEvent, TraceItem};

/// Spatial paradigm search over (component, prototype) pairs.
///
/// The forward pass appends pairs chosen by the configured selector until
/// the bounds verify. The backward pass then tries removing unmarked pairs,
/// latest first; a pair whose removal breaks verification is put back and
/// marked necessary.
pub struct SpatialExplainer {
    geometry: Arc<dyn SpatialGeometry>,
}

impl SpatialExplainer {
    pub fn new(geometry: Arc<dyn SpatialGeometry>) -> Self {
        SpatialExplainer { geometry }
    }

    pub fn geometry(&self) -> &dyn SpatialGeometry {
        self.geometry.as_ref()
    }

    fn check_paradigm(&self, explanation: &Explanation) -> Result<()> {
        if explanation.paradigm != self.geometry.paradigm() {
            return Err(AleError::ParadigmMismatch {
                expected: self.geometry.paradigm().to_string(),
                got: explanation.paradigm.to_string(),
            });
        }
        Ok(())
    }
}

/// Explanation under construction, with per-component intervals cached so
/// that adding or removing a pair only recomputes its own component.
struct WorkingSet<'a> {
    anchor: &'a Anchor<'a>,
    geometry: &'a dyn SpatialGeometry,
    slack: f64,
    pairs: Vec<Pair>,
    present: Vec<bool>,
    member: Vec<Vec<bool>>,
    intervals: Vec<Option<Vec<Interval>>>,
}

impl<'a> WorkingSet<'a> {
    fn new(anchor: &'a Anchor<'a>, geometry: &'a dyn SpatialGeometry, slack: f64) -> Self {
        let (l_count, m) = (anchor.num_components(), anchor.num_prototypes());
        WorkingSet {
            anchor,
            geometry,
            slack,
            pairs: Vec::new(),
            present: Vec::new(),
            member: vec![vec![false; m]; l_count],
            intervals: vec![None; l_count],
        }
    }

    fn len(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    fn push(&mut self, (l, j): Pair) -> Result<()> {
        if self.member[l][j] {
            return Ok(());
        }
        self.pairs.push((l, j));
        self.present.push(true);
        self.member[l][j] = true;
        self.refresh(l)
    }

    fn set_present(&mut self, i: usize, present: bool) -> Result<()> {
        let (l, j) = self.pairs[i];
        self.present[i] = present;
        self.member[l][j] = present;
        self.refresh(l)
    }

    fn refresh(&mut self, l: usize) -> Result<()> {
        let row = &self.anchor.distances()[l];
        let revealed: Vec<(usize, f64)> = self
            .pairs
            .iter()
            .zip(&self.present)
            .filter(|(&(pl, _), &p)| p && pl == l)
            .map(|(&(_, j), _)| (j, row[j]))
            .collect();
        self.intervals[l] = if revealed.is_empty() {
            None
        } else {
            Some(
                self.geometry
                    .component_intervals(self.anchor.bundle, &revealed, self.slack)?,
            )
        };
        Ok(())
    }

    fn bounds(&self) -> ActivationBounds {
        aggregate_components(
            self.anchor.bundle,
            self.intervals.iter().flatten().map(Vec::as_slice),
            self.intervals.iter().any(Option::is_none),
        )
    }

    fn check(&self, margin: f64) -> Result<(ActivationBounds, VerifyResult)> {
        let bounds = self.bounds();
        let verification = verify_with_margin(&bounds, self.anchor.bundle, self.anchor.predicted, margin)?;
        Ok((bounds, verification))
    }

    fn explanation(&self) -> Explanation {
        let pairs = self
            .pairs
            .iter()
            .zip(&self.present)
            .filter(|(_, &p)| p)
            .map(|(&pair, _)| pair)
            .collect();
        Explanation::spatial(self.geometry.paradigm(), pairs, self.anchor.id())
    }

    /// Backward pass. Returns `false` if the deadline interrupted it.
    fn prune(&mut self, margin: f64, deadline: Deadline, trace: Option<&mut Vec<TraceEvent>>) -> Result<bool> {
        let mut sink = Vec::new();
        let trace = trace.unwrap_or(&mut sink);
        let n = self.pairs.len();
        let mut marked = vec![false; n];
        loop {
            while let Some(i) = (0..n).rev().find(|&i| self.present[i] && !marked[i]) {
                if deadline.passed() {
                    return Ok(false);
                }
                self.set_present(i, false)?;
                let verified = self.check(margin)?.1.verified;
                trace.push(TraceEvent {
                    pass: Pass::Backward,
                    item: TraceItem::Pair(self.pairs[i]),
                    verified,
                });
                if !verified {
                    self.set_present(i, true)?;
                    marked[i] = true;
                }
            }
            if self.geometry.monotone_under_subsets() {
                return Ok(true);
            }
            // Marks are only sound when bounds tighten monotonically with the
            // explanation; otherwise confirm every survivor is still needed.
            let mut removed_any = false;
            let survivors: Vec<usize> = (0..n).rev().filter(|&i| self.present[i]).collect();
            for i in survivors {
                self.set_present(i, false)?;
                let verified = self.check(margin)?.1.verified;
                trace.push(TraceEvent {
                    pass: Pass::Backward,
                    item: TraceItem::Pair(self.pairs[i]),
                    verified,
                });
                if verified {
                    removed_any = true;
                } else {
                    self.set_present(i, true)?;
                }
            }
            if !removed_any {
                return Ok(true);
            }
            marked.iter_mut().for_each(|m| *m = false);
        }
    }
}

impl Explainer for SpatialExplainer {
    fn paradigm(&self) -> Paradigm {
        self.geometry.paradigm()
    }

    fn bounds(&self, anchor: &Anchor, explanation: &Explanation, slack: f64) -> Result<ActivationBounds> {
        self.check_paradigm(explanation)?;
        explanation.validate(anchor.num_prototypes(), anchor.num_components())?;
        spatial_bounds(
            self.geometry.as_ref(),
            anchor.bundle,
            &explanation.pairs,
            anchor.distances(),
            anchor.num_components(),
            slack,
        )
    }

    fn explain(&self, anchor: &Anchor, cfg: &SearchConfig, registry: &Registry) -> Result<SearchOutcome> {
        cfg.validate()?;
        let selector = registry.selector(&cfg.pair_strategy)?;
        let init = registry.initializer(&cfg.init_strategy)?;
        let deadline = cfg.deadline();
        let distances = anchor.distances();
        let total = anchor.num_components() * anchor.num_prototypes();

        let mut ws = WorkingSet::new(anchor, self.geometry.as_ref(), cfg.slack);
        let mut trace = Vec::new();
        for pair in init.initial_pairs(distances) {
            ws.push(pair)?;
        }

        let mut cursor = 0usize;
        let mut status = SearchStatus::Verified;
        loop {
            let (bounds, verification) = ws.check(cfg.margin)?;
            if verification.verified {
                break;
            }
            if ws.len() == total {
                return Err(AleError::Exhausted { pairs: total });
            }
            let stop = if cfg.max_pairs.is_some_and(|cap| ws.len() >= cap) {
                Some(SearchStatus::CapReached)
            } else if deadline.passed() {
                Some(SearchStatus::TimedOut)
            } else {
                None
            };
            if let Some(status) = stop {
                return Ok(SearchOutcome {
                    explanation: ws.explanation(),
                    forward_len: ws.len(),
                    bounds,
                    verification,
                    status,
                    predicted: anchor.predicted,
                    trace,
                });
            }
            let pair = selector
                .next_pair(distances, &ws.member, &mut cursor)
                .expect("an unused pair exists while the explanation is incomplete");
            ws.push(pair)?;
            if cfg.record_trace {
                let verified = ws.check(cfg.margin)?.1.verified;
                trace.push(TraceEvent {
                    pass: Pass::Forward,
                    item: TraceItem::Pair(pair),
                    verified,
                });
            }
        }

        let forward_len = ws.len();
        let finished = ws.prune(cfg.margin, deadline, cfg.record_trace.then_some(&mut trace))?;
        if !finished {
            status = SearchStatus::TimedOut;
        }
        let (bounds, verification) = ws.check(cfg.margin)?;
        debug_assert!(verification.verified);
        Ok(SearchOutcome {
            explanation: ws.explanation(),
            bounds,
            verification,
            status,
            predicted: anchor.predicted,
            forward_len,
            trace,
        })
    }

    fn prune(&self, anchor: &Anchor, explanation: &Explanation, cfg: &SearchConfig) -> Result<Explanation> {
        self.check_paradigm(explanation)?;
        explanation.validate(anchor.num_prototypes(), anchor.num_components())?;
        let mut ws = WorkingSet::new(anchor, self.geometry.as_ref(), cfg.slack);
        for &pair in &explanation.pairs {
            ws.push(pair)?;
        }
        if !ws.check(cfg.margin)?.1.verified {
            return Err(AleError::NotVerified);
        }
        ws.prune(cfg.margin, cfg.deadline(), None)?;
        Ok(ws.explanation())
    }
}
