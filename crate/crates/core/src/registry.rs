//! Name-keyed registry of explanation paradigms and search policies.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use crate::anchor::Anchor;
use crate::bounds::{SphereGeometry, TriangleGeometry};
use crate::error::{AleError, Result};
use crate::search::{
    EmptyInit, ExpInit, Explainer, NearestFirst, NearestPerComponent, PairSelector, RoundRobin,
    SearchConfig, SearchOutcome, SpatialExplainer, TopKExplainer,
};

#[derive(Default)]
pub struct Registry {
    explainers: BTreeMap<String, Arc<dyn Explainer>>,
    selectors: BTreeMap<String, Arc<dyn PairSelector>>,
    initializers: BTreeMap<String, Arc<dyn ExpInit>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry::default()
    }

    /// Registry holding every built-in paradigm and policy.
    pub fn builtin() -> &'static Registry {
        static BUILTIN: OnceLock<Registry> = OnceLock::new();
        BUILTIN.get_or_init(Registry::with_builtins)
    }

    pub fn with_builtins() -> Self {
        let mut r = Registry::empty();
        r.register_explainer(Arc::new(TopKExplainer));
        r.register_explainer(Arc::new(SpatialExplainer::new(Arc::new(TriangleGeometry))));
        r.register_explainer(Arc::new(SpatialExplainer::new(Arc::new(SphereGeometry))));
        r.register_selector(Arc::new(NearestFirst));
        r.register_selector(Arc::new(RoundRobin));
        r.register_initializer(Arc::new(EmptyInit));
        r.register_initializer(Arc::new(NearestPerComponent));
        r
    }

    pub fn register_explainer(&mut self, explainer: Arc<dyn Explainer>) {
        self.explainers
            .insert(explainer.paradigm().name().to_string(), explainer);
    }

    pub fn register_selector(&mut self, selector: Arc<dyn PairSelector>) {
        self.selectors.insert(selector.name().to_string(), selector);
    }

    pub fn register_initializer(&mut self, init: Arc<dyn ExpInit>) {
        self.initializers.insert(init.name().to_string(), init);
    }

    pub fn explainer(&self, name: &str) -> Result<&Arc<dyn Explainer>> {
        lookup(&self.explainers, "paradigm", name)
    }

    pub fn selector(&self, name: &str) -> Result<&Arc<dyn PairSelector>> {
        lookup(&self.selectors, "pair strategy", name)
    }

    pub fn initializer(&self, name: &str) -> Result<&Arc<dyn ExpInit>> {
        lookup(&self.initializers, "init strategy", name)
    }

    pub fn explainer_names(&self) -> Vec<&str> {
        self.explainers.keys().map(String::as_str).collect()
    }

    pub fn selector_names(&self) -> Vec<&str> {
        self.selectors.keys().map(String::as_str).collect()
    }

    pub fn initializer_names(&self) -> Vec<&str> {
        self.initializers.keys().map(String::as_str).collect()
    }

    /// Runs the explainer registered for `cfg.paradigm`.
    pub fn explain(&self, anchor: &Anchor, cfg: &SearchConfig) -> Result<SearchOutcome> {
        self.explainer(cfg.paradigm.name())?.explain(anchor, cfg, self)
    }
}

fn lookup<'a, T: ?Sized>(
    map: &'a BTreeMap<String, Arc<T>>,
    kind: &'static str,
    name: &str,
) -> Result<&'a Arc<T>> {
    map.get(name).ok_or_else(|| AleError::UnknownStrategy {
        kind,
        name: name.to_string(),
        known: map.keys().cloned().collect::<Vec<_>>().join(", "),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_registered() {
        let r = Registry::builtin();
        assert_eq!(r.explainer_names(), vec!["hypersphere", "topk", "triangle"]);
        assert_eq!(r.selector_names(), vec!["nearest", "round-robin"]);
        assert_eq!(r.initializer_names(), vec!["empty", "nearest-per-component"]);
    }

    #[test]
    fn unknown_names_list_alternatives() {
        let err = Registry::builtin().selector("zigzag").err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("zigzag") && msg.contains("round-robin"), "{msg}");
    }
}
