//! Synthetic bundles and datasets for tests, demos and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::anchor::Anchor;
use crate::error::Result;
use crate::explanation::{Explanation, Pair, Paradigm};
use crate::search::activation_order;
use crate::model::{LatentInstance, ModelBundle, SigmaParams, DEFAULT_EPSILON};

/// Activations of the five-prototype, two-class toy penguin classifier.
pub const RUNNING_ACTIVATIONS: [f64; 5] = [1.0, 3.0, 1.0, 8.0, 2.0];
pub const RUNNING_WEIGHTS: [[f64; 5]; 2] = [[10.0, 10.0, 7.0, 0.0, 0.0], [0.0, 0.0, 5.0, 10.0, 15.0]];

/// Distance at which the log-ratio similarity equals `s`.
pub fn distance_for_similarity(s: f64, epsilon: f64) -> f64 {
    let e = s.exp();
    (1.0 - epsilon * e) / (e - 1.0)
}

/// Toy classifier whose single latent vector (the origin) has activations
/// [`RUNNING_ACTIVATIONS`]: prototype `j` sits on axis `j` at the distance
/// giving that similarity.
pub fn running_example() -> (ModelBundle, LatentInstance) {
    let eps = DEFAULT_EPSILON;
    let prototypes: Vec<Vec<f64>> = RUNNING_ACTIVATIONS
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let mut p = vec![0.0; 5];
            p[j] = distance_for_similarity(a, eps);
            p
        })
        .collect();
    let weights = RUNNING_WEIGHTS.iter().map(|r| r.to_vec()).collect();
    let bundle = ModelBundle::new(prototypes, weights, None, SigmaParams::log_ratio(eps).unwrap(), 0.0)
        .expect("valid running example")
        .with_metadata(serde_json::json!({ "name": "running-example" }));
    let mut instance = LatentInstance::new("running-example", vec![vec![0.0; 5]]).with_label(1);
    instance.grid = Some([1, 1]);
    (bundle, instance)
}

/// Knobs of [`generate_corpus`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub num_classes: usize,
    pub protos_per_class: usize,
    /// `[H1, W1]` of every instance.
    pub grid: [usize; 2],
    pub latent_dim: usize,
    pub num_instances: usize,
    /// Standard deviation of class centers around the origin.
    pub center_scale: f64,
    /// Standard deviation of prototypes around their class center.
    pub proto_spread: f64,
    /// Standard deviation of instance components around the part they show.
    pub noise: f64,
    /// Probability that a component shows a part of a different class.
    pub confusion: f64,
    /// Number of components per instance that show a class part; the rest
    /// are background.
    pub parts_per_instance: usize,
    pub seed: u64,
}

impl CorpusSpec {
    /// 5 classes, 10 prototypes each, 4x4 grid, D = 32.
    pub fn table_analogue(num_instances: usize, seed: u64) -> Self {
        CorpusSpec {
            num_classes: 5,
            protos_per_class: 10,
            grid: [4, 4],
            latent_dim: 32,
            num_instances,
            center_scale: 1.0,
            proto_spread: 0.6,
            noise: 0.35,
            confusion: 0.3,
            parts_per_instance: 4,
            seed,
        }
    }

    /// One prototype per class, classes at least 10x further apart than
    /// instances are from their own prototype.
    pub fn well_separated(num_classes: usize, latent_dim: usize, num_components: usize, num_instances: usize, seed: u64) -> Self {
        CorpusSpec {
            num_classes,
            protos_per_class: 1,
            grid: [num_components, 1],
            latent_dim,
            num_instances,
            center_scale: 10.0,
            proto_spread: 0.0,
            noise: 0.02,
            confusion: 0.0,
            parts_per_instance: num_components,
            seed,
        }
    }

    pub fn num_components(&self) -> usize {
        self.grid[0] * self.grid[1]
    }
}

/// Bundle with ProtoPNet-style weights (1 toward the prototype's class,
/// -0.5 elsewhere) and labeled instances built from noisy copies of class
/// prototypes over a background.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<(ModelBundle, Vec<LatentInstance>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.latent_dim;
    let gauss = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> {
        (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let centers: Vec<Vec<f64>> = if spec.protos_per_class == 1 && spec.proto_spread == 0.0 {
        // Axis-aligned so inter-class separation is exact.
        (0..spec.num_classes)
            .map(|k| {
                let mut c = vec![0.0; d];
                c[k % d] = spec.center_scale * (1 + k / d) as f64;
                c
            })
            .collect()
    } else {
        (0..spec.num_classes).map(|_| gauss(&mut rng, spec.center_scale)).collect()
    };
    let mut prototypes = Vec::new();
    let mut owner = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..spec.protos_per_class {
            let offset = gauss(&mut rng, spec.proto_spread);
            prototypes.push(c.iter().zip(&offset).map(|(a, b)| a + b).collect::<Vec<f64>>());
            owner.push(k);
        }
    }
    let weights = (0..spec.num_classes)
        .map(|k| owner.iter().map(|&o| if o == k { 1.0 } else { -0.5 }).collect())
        .collect();
    let bundle = ModelBundle::new(prototypes.clone(), weights, None, SigmaParams::default(), 0.0)?
        .with_metadata(serde_json::json!({ "name": "synthetic", "spec": spec }));

    let l_count = spec.num_components();
    let noise = Normal::new(0.0, spec.noise.max(0.0)).expect("finite noise");
    let per_class: Vec<Vec<usize>> = (0..spec.num_classes)
        .map(|k| (0..owner.len()).filter(|&j| owner[j] == k).collect())
        .collect();
    let mut instances = Vec::with_capacity(spec.num_instances);
    for i in 0..spec.num_instances {
        let label = rng.gen_range(0..spec.num_classes);
        let mut slots: Vec<usize> = (0..l_count).collect();
        slots.shuffle(&mut rng);
        let parts = &slots[..spec.parts_per_instance.min(l_count)];
        let mut components = Vec::with_capacity(l_count);
        for l in 0..l_count {
            let z: Vec<f64> = if parts.contains(&l) {
                let class = if spec.num_classes > 1 && rng.gen_bool(spec.confusion.clamp(0.0, 1.0)) {
                    let other = rng.gen_range(0..spec.num_classes - 1);
                    if other >= label { other + 1 } else { other }
                } else {
                    label
                };
                let j = *per_class[class].choose(&mut rng).expect("class has prototypes");
                prototypes[j].iter().map(|v| v + noise.sample(&mut rng)).collect()
            } else {
                // Background: the origin region, away from every part.
                gauss(&mut rng, spec.noise.max(1e-3) * 3.0)
            };
            components.push(z);
        }
        let mut inst = LatentInstance::new(format!("syn-{i:05}"), components).with_label(label);
        inst.grid = Some(spec.grid);
        instances.push(inst);
    }
    Ok((bundle, instances))
}

/// Bundle with standard normal prototypes and weights, for property tests.
pub fn random_bundle<R: Rng>(rng: &mut R, num_classes: usize, num_prototypes: usize, latent_dim: usize) -> ModelBundle {
    let prototypes = (0..num_prototypes)
        .map(|_| (0..latent_dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let weights = (0..num_classes)
        .map(|_| (0..num_prototypes).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let biases = (0..num_classes).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
    ModelBundle::new(prototypes, weights, Some(biases), SigmaParams::default(), 0.0).expect("valid random bundle")
}

/// Instance whose components are prototypes perturbed by `scale`-sized
/// noise, so similarities span a useful range.
pub fn random_instance<R: Rng>(rng: &mut R, bundle: &ModelBundle, num_components: usize, scale: f64) -> LatentInstance {
    let m = bundle.num_prototypes();
    let components = (0..num_components)
        .map(|_| {
            let p = bundle.prototype(rng.gen_range(0..m));
            p.iter().map(|v| v + scale * rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    LatentInstance::new(format!("rand-{}", rng.gen::<u32>()), components)
}

/// Random explanation for `anchor` under `paradigm`: a prefix of the
/// activation order for top-k (of length up to `max_len`), otherwise up to
/// `max_len` distinct pairs in random order.
pub fn random_explanation<R: Rng>(rng: &mut R, anchor: &Anchor, paradigm: Paradigm, max_len: usize) -> Explanation {
    let (l_count, m) = (anchor.num_components(), anchor.num_prototypes());
    match paradigm {
        Paradigm::TopK => {
            let order = activation_order(anchor.activations().values());
            let k = rng.gen_range(0..=max_len.min(m));
            Explanation::top_k(order[..k].to_vec(), anchor.id())
        }
        _ => {
            let mut all: Vec<Pair> = (0..l_count).flat_map(|l| (0..m).map(move |j| (l, j))).collect();
            all.shuffle(rng);
            let k = rng.gen_range(0..=max_len.min(all.len()));
            all.truncate(k);
            Explanation::spatial(paradigm, all, anchor.id())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{activations, logits, predict};

    #[test]
    fn running_example_activations() {
        let (bundle, inst) = running_example();
        let a = activations(&inst, &bundle).unwrap();
        for (x, y) in a.values().iter().zip(RUNNING_ACTIVATIONS) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        let h = logits(a.values(), &bundle).unwrap();
        assert!((h[0] - 47.0).abs() < 1e-9 && (h[1] - 115.0).abs() < 1e-9);
        assert_eq!(predict(&inst, &bundle).unwrap(), 1);
    }

    #[test]
    fn corpus_is_deterministic_and_shaped() {
        let spec = CorpusSpec::table_analogue(20, 5);
        let (b1, i1) = generate_corpus(&spec).unwrap();
        let (b2, i2) = generate_corpus(&spec).unwrap();
        assert_eq!(i1, i2);
        assert_eq!(b1.prototypes(), b2.prototypes());
        assert_eq!((b1.num_classes(), b1.num_prototypes(), b1.latent_dim()), (5, 50, 32));
        assert!(i1.iter().all(|i| i.num_components() == 16 && i.label.is_some()));
        for inst in &i1 {
            inst.validate(&b1).unwrap();
        }
    }

    #[test]
    fn well_separated_corpus_is_classified_correctly() {
        let spec = CorpusSpec::well_separated(3, 4, 2, 30, 1);
        let (bundle, instances) = generate_corpus(&spec).unwrap();
        let d = bundle.proto_dist();
        assert!(d[0][1] >= 10.0 && d[1][2] >= 10.0);
        for inst in &instances {
            assert_eq!(predict(inst, &bundle).unwrap(), inst.label.unwrap());
        }
    }
}
