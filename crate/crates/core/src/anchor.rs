use crate::error::Result;
use crate::model::{argmax_lowest, logits, scan, ActivationVector, LatentInstance, ModelBundle, SimilarityScan};

/// An instance being explained, with its prototype-layer outputs and
/// prediction computed once.
#[derive(Debug, Clone)]
pub struct Anchor<'a> {
    pub bundle: &'a ModelBundle,
    pub instance: &'a LatentInstance,
    pub scan: SimilarityScan,
    pub logits: Vec<f64>,
    pub predicted: usize,
}

impl<'a> Anchor<'a> {
    pub fn new(bundle: &'a ModelBundle, instance: &'a LatentInstance) -> Result<Self> {
        let scan = scan(instance, bundle)?;
        let logits = logits(scan.activations.values(), bundle)?;
        let predicted = argmax_lowest(&logits);
        Ok(Anchor {
            bundle,
            instance,
            scan,
            logits,
            predicted,
        })
    }

    pub fn id(&self) -> &str {
        &self.instance.id
    }

    pub fn activations(&self) -> &ActivationVector {
        &self.scan.activations
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.scan.distances
    }

    pub fn num_components(&self) -> usize {
        self.instance.components.len()
    }

    pub fn num_prototypes(&self) -> usize {
        self.bundle.num_prototypes()
    }
}
