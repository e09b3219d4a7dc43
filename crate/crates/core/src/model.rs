//! Prototype model: similarity function, bundle artifact, latent instances
//! and the latent predictor (distances -> similarities -> activations ->
//! logits -> class).

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AleError, Result};

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_DISTANCE_SLACK: f64 = 1e-6;

/// Maximum absolute deviation tolerated between a supplied prototype
/// distance matrix and the one recomputed from the prototypes.
pub const PROTO_DIST_TOLERANCE: f64 = 1e-6;

/// Dimension above which squared distances use compensated summation.
const COMPENSATED_SUM_MIN_DIM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKind {
    LogRatio,
}

/// Parameters of the distance-to-similarity map `sigma(x) = ln((x+1)/(x+eps))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaParams {
    pub kind: SigmaKind,
    pub epsilon: f64,
}

impl Default for SigmaParams {
    fn default() -> Self {
        SigmaParams {
            kind: SigmaKind::LogRatio,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl SigmaParams {
    pub fn log_ratio(epsilon: f64) -> Result<Self> {
        let params = SigmaParams {
            kind: SigmaKind::LogRatio,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(AleError::InvalidSigma(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Evaluates sigma. Negative inputs (floating-point noise) clamp to 0 and
    /// `+inf` maps to 0.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let x = if x > 0.0 { x } else { 0.0 };
        match self.kind {
            // ln((x+1)/(x+eps)) == ln_1p((1-eps)/(x+eps)), exact at x = inf.
            SigmaKind::LogRatio => ((1.0 - self.epsilon) / (x + self.epsilon)).ln_1p(),
        }
    }

    /// `sigma(0)`, the supremum of the similarity.
    pub fn max_value(&self) -> f64 {
        self.eval(0.0)
    }

    /// Maps a distance interval onto the similarity interval it implies.
    /// Relies on sigma being non-increasing.
    #[inline]
    pub fn map_interval(&self, dist_lo: f64, dist_hi: f64) -> (f64, f64) {
        (self.eval(dist_hi), self.eval(dist_lo))
    }

    /// Checks on sample points that sigma is strictly decreasing (eps < 1) or
    /// identically zero (eps = 1), which the interval mapping depends on.
    fn assert_monotone(&self) -> Result<()> {
        let probes = [0.0, 1e-3, 0.5, 1.0, 10.0, 1e3, 1e6];
        let values: Vec<f64> = probes.iter().map(|&x| self.eval(x)).collect();
        let ok = if self.epsilon < 1.0 {
            values.windows(2).all(|w| w[0] > w[1]) && values.iter().all(|&v| v > 0.0)
        } else {
            values.iter().all(|&v| v == 0.0)
        };
        if ok {
            Ok(())
        } else {
            Err(AleError::InvalidSigma(format!(
                "sigma is not monotone for epsilon = {}",
                self.epsilon
            )))
        }
    }
}

/// Free-function form of [`SigmaParams::eval`].
pub fn sigma(x: f64, params: &SigmaParams) -> f64 {
    params.eval(x)
}

/// Euclidean distance in double precision. Squared sums use Neumaier
/// compensation for long vectors; a negative squared sum clamps to 0.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let sq = if a.len() >= COMPENSATED_SUM_MIN_DIM {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            let term = (x - y) * (x - y);
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        sum + comp
    } else {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    sq.max(0.0).sqrt()
}

/// Trained prototype model as consumed by the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    num_classes: usize,
    latent_dim: usize,
    prototypes: Vec<Vec<f64>>,
    /// `weights[k][j]`: contribution of prototype `j` to the logit of class `k`.
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    sigma: SigmaParams,
    proto_dist: Vec<Vec<f64>>,
    distance_slack: f64,
    metadata: serde_json::Value,
}

impl ModelBundle {
    /// Builds a bundle from raw parts, computing the prototype distance matrix.
    pub fn new(
        prototypes: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
        biases: Option<Vec<f64>>,
        sigma: SigmaParams,
        distance_slack: f64,
    ) -> Result<Self> {
        sigma.validate()?;
        sigma.assert_monotone()?;
        let m = prototypes.len();
        if m == 0 {
            return Err(AleError::DimensionMismatch("bundle has no prototypes".into()));
        }
        let latent_dim = prototypes[0].len();
        if latent_dim == 0 {
            return Err(AleError::DimensionMismatch("latent dimension is 0".into()));
        }
        for (j, p) in prototypes.iter().enumerate() {
            if p.len() != latent_dim {
                return Err(AleError::DimensionMismatch(format!(
                    "prototype {j} has dimension {}, expected {latent_dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(AleError::malformed("bundle", format!("prototype {j} is not finite")));
            }
        }
        let num_classes = weights.len();
        if num_classes == 0 {
            return Err(AleError::DimensionMismatch("weights have no class rows".into()));
        }
        for (k, row) in weights.iter().enumerate() {
            if row.len() != m {
                return Err(AleError::DimensionMismatch(format!(
                    "weights row {k} has {} entries but there are {m} prototypes",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(AleError::malformed("bundle", format!("weights row {k} is not finite")));
            }
        }
        let biases = biases.unwrap_or_else(|| vec![0.0; num_classes]);
        if biases.len() != num_classes {
            return Err(AleError::DimensionMismatch(format!(
                "{} biases for {num_classes} classes",
                biases.len()
            )));
        }
        if !(distance_slack >= 0.0) {
            return Err(AleError::InvalidArgument(format!(
                "distance slack must be nonnegative, got {distance_slack}"
            )));
        }
        let proto_dist = pairwise_distances(&prototypes);
        Ok(ModelBundle {
            num_classes,
            latent_dim,
            prototypes,
            weights,
            biases,
            sigma,
            proto_dist,
            distance_slack,
            metadata: serde_json::Value::Object(Default::default()),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_prototypes(&self) -> usize {
        self.prototypes.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn prototypes(&self) -> &[Vec<f64>] {
        &self.prototypes
    }

    pub fn prototype(&self, j: usize) -> &[f64] {
        &self.prototypes[j]
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Weight of prototype `j` in the logit of class `k`.
    #[inline]
    pub fn weight(&self, k: usize, j: usize) -> f64 {
        self.weights[k][j]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn sigma(&self) -> &SigmaParams {
        &self.sigma
    }

    pub fn proto_dist(&self) -> &[Vec<f64>] {
        &self.proto_dist
    }

    pub fn distance_slack(&self) -> f64 {
        self.distance_slack
    }

    pub fn metadata(&self) -> &serde_json::Value {
        &self.metadata
    }

    pub fn set_distance_slack(&mut self, slack: f64) -> Result<()> {
        if !(slack >= 0.0) {
            return Err(AleError::InvalidArgument(format!(
                "distance slack must be nonnegative, got {slack}"
            )));
        }
        self.distance_slack = slack;
        Ok(())
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        let sigma = SigmaParams {
            kind: self.sigma.kind,
            epsilon,
        };
        sigma.validate()?;
        sigma.assert_monotone()?;
        self.sigma = sigma;
        Ok(())
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.num_classes {
            return Err(AleError::IndexOutOfRange {
                what: "class",
                index: class,
                limit: self.num_classes,
            });
        }
        Ok(())
    }

    pub fn check_prototype(&self, j: usize) -> Result<()> {
        if j >= self.num_prototypes() {
            return Err(AleError::IndexOutOfRange {
                what: "prototype",
                index: j,
                limit: self.num_prototypes(),
            });
        }
        Ok(())
    }

    pub fn from_document(doc: BundleDocument) -> Result<Self> {
        if doc.prototypes.len() != doc.num_prototypes {
            return Err(AleError::DimensionMismatch(format!(
                "num_prototypes = {} but {} prototype rows",
                doc.num_prototypes,
                doc.prototypes.len()
            )));
        }
        if doc.weights.len() != doc.num_classes {
            return Err(AleError::DimensionMismatch(format!(
                "num_classes = {} but {} weight rows",
                doc.num_classes,
                doc.weights.len()
            )));
        }
        if let Some(p) = doc.prototypes.first() {
            if p.len() != doc.latent_dim {
                return Err(AleError::DimensionMismatch(format!(
                    "latent_dim = {} but prototypes have dimension {}",
                    doc.latent_dim,
                    p.len()
                )));
            }
        }
        let mut bundle = ModelBundle::new(
            doc.prototypes,
            doc.weights,
            doc.biases,
            doc.sigma,
            doc.distance_slack.unwrap_or(DEFAULT_DISTANCE_SLACK),
        )?;
        if let Some(given) = doc.proto_dist {
            bundle.cross_check_proto_dist(&given)?;
        }
        bundle.metadata = doc.metadata;
        Ok(bundle)
    }

    fn cross_check_proto_dist(&self, given: &[Vec<f64>]) -> Result<()> {
        let m = self.num_prototypes();
        if given.len() != m || given.iter().any(|row| row.len() != m) {
            return Err(AleError::ProtoDist(format!("expected a {m}x{m} matrix")));
        }
        for i in 0..m {
            for j in 0..m {
                if (given[i][j] - given[j][i]).abs() > PROTO_DIST_TOLERANCE {
                    return Err(AleError::ProtoDist(format!(
                        "not symmetric at ({i}, {j}): {} vs {}",
                        given[i][j], given[j][i]
                    )));
                }
                let dev = (given[i][j] - self.proto_dist[i][j]).abs();
                if !(dev <= PROTO_DIST_TOLERANCE) {
                    return Err(AleError::ProtoDist(format!(
                        "entry ({i}, {j}) deviates from the recomputed distance by {dev}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> BundleDocument {
        BundleDocument {
            num_classes: self.num_classes,
            num_prototypes: self.num_prototypes(),
            latent_dim: self.latent_dim,
            prototypes: self.prototypes.clone(),
            weights: self.weights.clone(),
            biases: Some(self.biases.clone()),
            sigma: self.sigma,
            proto_dist: Some(self.proto_dist.clone()),
            distance_slack: Some(self.distance_slack),
            metadata: self.metadata.clone(),
        }
    }
}

fn pairwise_distances(prototypes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = prototypes.len();
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d = l2_distance(&prototypes[i], &prototypes[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    dist
}

/// On-disk bundle layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleDocument {
    pub num_classes: usize,
    pub num_prototypes: usize,
    pub latent_dim: usize,
    pub prototypes: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biases: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma: SigmaParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proto_dist: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_slack: Option<f64>,
    #[serde(default = "empty_object")]
    pub metadata: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| AleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: BundleDocument = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| AleError::malformed(path.display().to_string(), e))?;
    ModelBundle::from_document(doc)
}

/// Latent representation of one input: `L = H1 * W1` component vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentInstance {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    /// `[H1, W1]`; components are the row-major flattening of this grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    pub components: Vec<Vec<f64>>,
    /// Prediction of the source model, when the exporter attached one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<usize>,
    /// Activation vector of the source model, for cross-checking.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activations: Option<Vec<f64>>,
}

impl LatentInstance {
    pub fn new(id: impl Into<String>, components: Vec<Vec<f64>>) -> Self {
        LatentInstance {
            id: id.into(),
            label: None,
            grid: None,
            components,
            predicted: None,
            activations: None,
        }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn validate(&self, bundle: &ModelBundle) -> Result<()> {
        if self.components.is_empty() {
            return Err(AleError::DimensionMismatch(format!(
                "instance {} has no latent components",
                self.id
            )));
        }
        if let Some([h, w]) = self.grid {
            if h * w != self.components.len() {
                return Err(AleError::DimensionMismatch(format!(
                    "instance {}: grid {h}x{w} but {} components",
                    self.id,
                    self.components.len()
                )));
            }
        }
        for (l, z) in self.components.iter().enumerate() {
            if z.len() != bundle.latent_dim() {
                return Err(AleError::DimensionMismatch(format!(
                    "instance {} component {l} has dimension {}, bundle expects {}",
                    self.id,
                    z.len(),
                    bundle.latent_dim()
                )));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(AleError::malformed(
                    format!("instance {}", self.id),
                    format!("component {l} is not finite"),
                ));
            }
        }
        if let Some(label) = self.label {
            bundle.check_class(label)?;
        }
        Ok(())
    }
}

/// Per-prototype activation `A_j = max_l sim(z_l, p_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivationVector(pub Vec<f64>);

impl ActivationVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for ActivationVector {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Everything the prototype layer computes for one instance.
#[derive(Debug, Clone)]
pub struct SimilarityScan {
    /// `distances[l][j] = ||z_l - p_j||`.
    pub distances: Vec<Vec<f64>>,
    pub similarities: Vec<Vec<f64>>,
    pub activations: ActivationVector,
    /// Component index attaining the activation of each prototype.
    pub argmax_component: Vec<usize>,
}

pub fn scan(instance: &LatentInstance, bundle: &ModelBundle) -> Result<SimilarityScan> {
    instance.validate(bundle)?;
    let distances: Vec<Vec<f64>> = instance
        .components
        .iter()
        .map(|z| {
            bundle
                .prototypes
                .iter()
                .map(|p| l2_distance(z, p))
                .collect()
        })
        .collect();
    let similarities: Vec<Vec<f64>> = distances
        .iter()
        .map(|row| row.iter().map(|&d| bundle.sigma.eval(d)).collect())
        .collect();
    let (activations, argmax_component) = activations_from_similarities(&similarities)?;
    Ok(SimilarityScan {
        distances,
        similarities,
        activations,
        argmax_component,
    })
}

pub fn activations(instance: &LatentInstance, bundle: &ModelBundle) -> Result<ActivationVector> {
    Ok(scan(instance, bundle)?.activations)
}

/// Column-wise maximum of an `L x m` similarity matrix, with the argmax
/// component per column (ties toward the lowest component index).
pub fn activations_from_similarities(
    similarities: &[Vec<f64>],
) -> Result<(ActivationVector, Vec<usize>)> {
    let first = similarities
        .first()
        .ok_or_else(|| AleError::DimensionMismatch("similarity matrix has no rows".into()))?;
    let m = first.len();
    if similarities.iter().any(|row| row.len() != m) {
        return Err(AleError::DimensionMismatch("ragged similarity matrix".into()));
    }
    let mut values = first.clone();
    let mut argmax = vec![0; m];
    for (l, row) in similarities.iter().enumerate().skip(1) {
        for j in 0..m {
            if row[j] > values[j] {
                values[j] = row[j];
                argmax[j] = l;
            }
        }
    }
    Ok((ActivationVector(values), argmax))
}

/// `W a + b`.
pub fn logits(a: &[f64], bundle: &ModelBundle) -> Result<Vec<f64>> {
    if a.len() != bundle.num_prototypes() {
        return Err(AleError::DimensionMismatch(format!(
            "activation vector of length {} for {} prototypes",
            a.len(),
            bundle.num_prototypes()
        )));
    }
    Ok(bundle
        .weights
        .iter()
        .zip(&bundle.biases)
        .map(|(row, b)| row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>() + b)
        .collect())
}

/// Index of the maximum; ties go to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_from_activations(a: &[f64], bundle: &ModelBundle) -> Result<usize> {
    Ok(argmax_lowest(&logits(a, bundle)?))
}

pub fn predict(instance: &LatentInstance, bundle: &ModelBundle) -> Result<usize> {
    predict_from_activations(activations(instance, bundle)?.values(), bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running_example_weights() -> Vec<Vec<f64>> {
        vec![
            vec![10.0, 10.0, 7.0, 0.0, 0.0],
            vec![0.0, 0.0, 5.0, 10.0, 15.0],
        ]
    }

    fn five_prototype_bundle() -> ModelBundle {
        let protos = (0..5).map(|j| vec![j as f64, 0.0]).collect();
        ModelBundle::new(protos, running_example_weights(), None, SigmaParams::default(), 0.0)
            .unwrap()
    }

    #[test]
    fn sigma_values() {
        let p = SigmaParams::log_ratio(1e-4).unwrap();
        assert!((sigma(0.0, &p) - 1e4f64.ln()).abs() < 1e-12);
        assert!((sigma(0.0, &p) - 9.21034).abs() < 1e-5);
        assert!((sigma(1.0, &p) - (2.0f64 / 1.0001).ln()).abs() < 1e-12);
        assert!((sigma(1.0, &p) - 0.69305).abs() < 1e-5);
        let flat = SigmaParams::log_ratio(1.0).unwrap();
        assert_eq!(sigma(1.0, &flat), 0.0);
        assert_eq!(sigma(-1e-12, &p), sigma(0.0, &p));
        assert_eq!(sigma(f64::INFINITY, &p), 0.0);
    }

    #[test]
    fn sigma_rejects_bad_epsilon() {
        assert!(SigmaParams::log_ratio(0.0).is_err());
        assert!(SigmaParams::log_ratio(-1.0).is_err());
        assert!(SigmaParams::log_ratio(1.5).is_err());
        assert!(SigmaParams::log_ratio(f64::NAN).is_err());
    }

    #[test]
    fn running_example_activations_and_logits() {
        let sim = vec![
            vec![1.0, 0.0, 1.0, 0.0, 1.0],
            vec![1.0, 3.0, 0.0, 1.0, 2.0],
            vec![0.0, 1.0, 0.0, 2.0, 1.0],
            vec![0.0, 0.0, 1.0, 8.0, 0.0],
        ];
        let (a, argmax) = activations_from_similarities(&sim).unwrap();
        assert_eq!(a.values(), &[1.0, 3.0, 1.0, 8.0, 2.0]);
        assert_eq!(argmax, vec![0, 1, 0, 3, 1]);

        let bundle = five_prototype_bundle();
        assert_eq!(logits(a.values(), &bundle).unwrap(), vec![47.0, 115.0]);
        assert_eq!(predict_from_activations(a.values(), &bundle).unwrap(), 1);

        let counter = [6.0, 7.0, 1.0, 8.0, 2.0];
        assert_eq!(logits(&counter, &bundle).unwrap(), vec![137.0, 115.0]);
        assert_eq!(predict_from_activations(&counter, &bundle).unwrap(), 0);

        assert_eq!(logits(&[0.0; 5], &bundle).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_component_activation_is_the_row() {
        let row = vec![0.5, 2.0, 0.1];
        let (a, _) = activations_from_similarities(std::slice::from_ref(&row)).unwrap();
        assert_eq!(a.0, row);
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let w = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let bundle =
            ModelBundle::new(vec![vec![0.0], vec![1.0]], w, None, SigmaParams::default(), 0.0)
                .unwrap();
        let z = LatentInstance::new("t", vec![vec![0.3]]);
        assert_eq!(predict(&z, &bundle).unwrap(), 0);
    }

    #[test]
    fn weights_shape_mismatch_is_rejected() {
        let protos = (0..5).map(|j| vec![j as f64]).collect();
        let w = vec![vec![1.0; 4], vec![1.0; 4]];
        let err = ModelBundle::new(protos, w, None, SigmaParams::default(), 0.0).unwrap_err();
        assert!(matches!(err, AleError::DimensionMismatch(_)), "{err}");
    }

    #[test]
    fn logits_reject_wrong_length() {
        let bundle = five_prototype_bundle();
        assert!(matches!(
            logits(&[1.0, 2.0], &bundle),
            Err(AleError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn instance_dimension_mismatch() {
        let bundle = five_prototype_bundle();
        let z = LatentInstance::new("bad", vec![vec![0.0, 0.0, 0.0]]);
        assert!(matches!(scan(&z, &bundle), Err(AleError::DimensionMismatch(_))));
    }

    #[test]
    fn compensated_distance_agrees_with_naive() {
        let a: Vec<f64> = (0..2048).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..2048).map(|i| (i as f64 * 0.11).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        assert!((l2_distance(&a, &b) - naive).abs() < 1e-9);
    }
}
