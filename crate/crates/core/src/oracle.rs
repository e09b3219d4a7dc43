//! Brute-force validators, kept independent of the bound derivation and
//! verification code they check. Only model primitives (logits, distances)
//! are shared.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::anchor::Anchor;
use crate::error::{AleError, Result};
use crate::explanation::{ActivationBounds, Explanation, Paradigm};
use crate::model::{argmax_lowest, l2_distance, logits, ModelBundle};
use crate::registry::Registry;
use crate::search::SearchConfig;
use crate::bounds::hypersphere_intersect;

/// Largest prototype count accepted by [`corner_oracle`].
pub const CORNER_LIMIT: usize = 20;

/// Containment tolerance of [`sphere_containment_oracle`], relative to
/// `1 + max(r1, r2)`.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub input: serde_json::Value,
    pub expected: serde_json::Value,
    pub got: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<Violation>,
    pub seed: u64,
}

impl OracleReport {
    pub fn new(seed: u64) -> Self {
        OracleReport {
            checked: 0,
            violations: 0,
            first_violation: None,
            seed,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, ok: bool, violation: impl FnOnce() -> Violation) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(violation());
            }
        }
    }

    /// Associative merge of shard reports; the first violation of the
    /// earlier shard wins.
    pub fn merge(mut self, other: OracleReport) -> OracleReport {
        self.checked += other.checked;
        self.violations += other.violations;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerOptimum {
    /// Maximum of `h_k - h_c` over the box corners.
    pub gap: f64,
    pub corner: Vec<f64>,
}

/// Exact maximum of `h_k - h_c` for every `k != c` by enumerating all `2^m`
/// box corners. Bit `j` of the corner index selects the upper bound.
pub fn corner_oracle(
    bounds: &ActivationBounds,
    bundle: &ModelBundle,
    c: usize,
) -> Result<BTreeMap<usize, CornerOptimum>> {
    let m = bounds.len();
    if m > CORNER_LIMIT {
        return Err(AleError::TooManyPrototypes(m, CORNER_LIMIT));
    }
    bundle.check_class(c)?;
    let mut best: BTreeMap<usize, CornerOptimum> = BTreeMap::new();
    let mut corner = vec![0.0; m];
    for mask in 0u32..(1u32 << m) {
        for (j, v) in corner.iter_mut().enumerate() {
            *v = if mask >> j & 1 == 1 {
                bounds.upper[j]
            } else {
                bounds.lower[j]
            };
        }
        let h = logits(&corner, bundle)?;
        for k in (0..bundle.num_classes()).filter(|&k| k != c) {
            let gap = h[k] - h[c];
            let better = best.get(&k).is_none_or(|b| gap > b.gap);
            if better {
                best.insert(
                    k,
                    CornerOptimum {
                        gap,
                        corner: corner.clone(),
                    },
                );
            }
        }
    }
    Ok(best)
}

/// `max_{a in box} h_k(a) - h_c(a)` through the support function of the box.
pub fn support_gap(bounds: &ActivationBounds, bundle: &ModelBundle, k: usize, c: usize) -> f64 {
    let mut gap = bundle.biases()[k] - bundle.biases()[c];
    for j in 0..bounds.len() {
        let coef = bundle.weight(k, j) - bundle.weight(c, j);
        gap += (coef * bounds.lower[j]).max(coef * bounds.upper[j]);
    }
    gap
}

/// Whether `c` keeps the argmax (lowest-index ties) over the whole box, up
/// to `margin`.
pub fn box_keeps_class(bounds: &ActivationBounds, bundle: &ModelBundle, c: usize, margin: f64) -> bool {
    (0..bundle.num_classes()).filter(|&k| k != c).all(|k| {
        let lead = -support_gap(bounds, bundle, k, c);
        if k < c {
            lead > margin
        } else {
            lead >= margin
        }
    })
}

/// Draws `n` activation vectors uniformly from the box and counts those
/// whose prediction differs from `c`.
pub fn sample_oracle(
    bounds: &ActivationBounds,
    bundle: &ModelBundle,
    c: usize,
    n: usize,
    seed: u64,
) -> Result<OracleReport> {
    if n == 0 {
        return Err(AleError::InvalidArgument("sample count must be >= 1".into()));
    }
    bundle.check_class(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport::new(seed);
    let mut a = vec![0.0; bounds.len()];
    for _ in 0..n {
        for (j, v) in a.iter_mut().enumerate() {
            let (lo, hi) = (bounds.lower[j], bounds.upper[j]);
            *v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        }
        let got = argmax_lowest(&logits(&a, bundle)?);
        report.record(got == c, || Violation {
            input: serde_json::json!(a),
            expected: serde_json::json!(c),
            got: serde_json::json!(got),
        });
    }
    Ok(report)
}

/// Checks that no single element of a verified explanation can be dropped.
///
/// Spatial explanations: every single-pair removal must fail verification.
/// Top-k explanations: every shorter prefix must fail (removing an inner
/// element leaves a non-prefix whose top-k reading is meaningless).
pub fn minimality_oracle(
    explanation: &Explanation,
    anchor: &Anchor,
    cfg: &SearchConfig,
) -> Result<OracleReport> {
    let explainer = Registry::builtin().explainer(explanation.paradigm.name())?;
    let bundle = anchor.bundle;
    let c = anchor.predicted;
    let holds = |e: &Explanation| -> Result<bool> {
        let bounds = explainer.bounds(anchor, e, cfg.slack)?;
        Ok(box_keeps_class(&bounds, bundle, c, cfg.margin))
    };
    if !holds(explanation)? {
        return Err(AleError::NotVerified);
    }
    let mut report = OracleReport::new(0);
    match explanation.paradigm {
        Paradigm::TopK => {
            for k in 0..explanation.prototypes.len() {
                let prefix = Explanation::top_k(explanation.prototypes[..k].to_vec(), anchor.id());
                let ok = !holds(&prefix)?;
                report.record(ok, || Violation {
                    input: serde_json::json!({ "prefix": prefix.prototypes }),
                    expected: serde_json::json!("unverified"),
                    got: serde_json::json!("verified"),
                });
            }
        }
        Paradigm::Triangle | Paradigm::Hypersphere => {
            for i in 0..explanation.pairs.len() {
                let reduced = explanation.without(i);
                let ok = !holds(&reduced)?;
                report.record(ok, || Violation {
                    input: serde_json::json!({ "removed": explanation.pairs[i] }),
                    expected: serde_json::json!("unverified"),
                    got: serde_json::json!("verified"),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereOracleReport {
    #[serde(flatten)]
    pub report: OracleReport,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Largest distance between two samples.
    pub max_pairwise: f64,
}

/// Samples the intersection of two sphere surfaces and checks every sample
/// lies inside the approximating sphere, and that two samples are `2 r3`
/// apart (no smaller sphere can contain the intersection).
///
/// Samples come in antipodal pairs `C + h w`, `C - h w` with `w` a uniform
/// direction orthogonal to the axis. The intersection is located here by
/// projection (`a = (d² + r1² − r2²) / 2d`, `h² = r1² − a²`) and each sample
/// is checked to lie on both surfaces.
pub fn sphere_containment_oracle(
    c1: &[f64],
    r1: f64,
    c2: &[f64],
    r2: f64,
    n: usize,
    seed: u64,
) -> Result<SphereOracleReport> {
    let dim = c1.len();
    if dim < 2 || c2.len() != dim {
        return Err(AleError::InvalidArgument(
            "sphere oracle needs two centers of equal dimension >= 2".into(),
        ));
    }
    if n == 0 {
        return Err(AleError::InvalidArgument("sample count must be >= 1".into()));
    }
    let engine = hypersphere_intersect(c1, r1, c2, r2, 0.0)?;
    let tol = CONTAINMENT_TOL * (1.0 + r1.max(r2));

    let d = l2_distance(c1, c2);
    let axis: Vec<f64> = c1.iter().zip(c2).map(|(a, b)| (b - a) / d).collect();
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h = (r1 * r1 - a * a).max(0.0).sqrt();
    let foot: Vec<f64> = c1.iter().zip(&axis).map(|(x, u)| x + a * u).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport::new(seed);
    let mut max_pairwise = 0.0f64;
    let mut drawn = 0;
    while drawn < n {
        let w = orthogonal_direction(&axis, &mut rng);
        let plus: Vec<f64> = foot.iter().zip(&w).map(|(f, x)| f + h * x).collect();
        let minus: Vec<f64> = foot.iter().zip(&w).map(|(f, x)| f - h * x).collect();
        max_pairwise = max_pairwise.max(l2_distance(&plus, &minus));
        for s in [plus, minus] {
            if drawn == n {
                break;
            }
            drawn += 1;
            let on_surfaces =
                (l2_distance(&s, c1) - r1).abs() <= tol && (l2_distance(&s, c2) - r2).abs() <= tol;
            let to_center = l2_distance(&s, &engine.center);
            let ok = on_surfaces && to_center <= engine.radius + tol;
            report.record(ok, || Violation {
                input: serde_json::json!(s),
                expected: serde_json::json!({ "max_distance_to_center": engine.radius }),
                got: serde_json::json!({ "distance_to_center": to_center, "on_surfaces": on_surfaces }),
            });
        }
    }
    // Minimality witness.
    report.record(max_pairwise >= 2.0 * engine.radius - tol, || Violation {
        input: serde_json::json!("antipodal samples"),
        expected: serde_json::json!({ "min_pairwise": 2.0 * engine.radius }),
        got: serde_json::json!({ "max_pairwise": max_pairwise }),
    });
    Ok(SphereOracleReport {
        report,
        center: engine.center,
        radius: engine.radius,
        max_pairwise,
    })
}

/// Uniform unit direction orthogonal to the unit vector `axis`.
fn orthogonal_direction(axis: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..axis.len()).map(|_| rng.sample(StandardNormal)).collect();
        let dot: f64 = g.iter().zip(axis).map(|(x, u)| x * u).sum();
        g.iter_mut().zip(axis).for_each(|(x, u)| *x -= dot * u);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            g.iter_mut().for_each(|x| *x /= norm);
            return g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::topk_bounds;
    use crate::model::{ActivationVector, SigmaParams};

    fn running_bundle() -> ModelBundle {
        let protos = (0..5).map(|j| vec![j as f64]).collect();
        let w = vec![
            vec![10.0, 10.0, 7.0, 0.0, 0.0],
            vec![0.0, 0.0, 5.0, 10.0, 15.0],
        ];
        ModelBundle::new(protos, w, None, SigmaParams::default(), 0.0).unwrap()
    }

    fn a() -> ActivationVector {
        ActivationVector(vec![1.0, 3.0, 1.0, 8.0, 2.0])
    }

    #[test]
    fn corner_oracle_running_example() {
        let bundle = running_bundle();
        let b = topk_bounds(&[3], &a(), bundle.sigma().max_value()).unwrap();
        let best = corner_oracle(&b, &bundle, 1).unwrap();
        assert_eq!(best[&0].gap, 96.0);
        assert_eq!(best[&0].corner, vec![8.0, 8.0, 8.0, 8.0, 0.0]);
        assert_eq!(support_gap(&b, &bundle, 0, 1), 96.0);
    }

    #[test]
    fn corner_oracle_degenerate_box() {
        let bundle = running_bundle();
        let b = ActivationBounds::point(a().values());
        let best = corner_oracle(&b, &bundle, 1).unwrap();
        assert_eq!(best[&0].gap, 47.0 - 115.0);
    }

    #[test]
    fn corner_oracle_refuses_large_m() {
        let b = ActivationBounds::point(&[0.0; 25]);
        let protos = (0..25).map(|j| vec![j as f64]).collect();
        let bundle = ModelBundle::new(protos, vec![vec![0.0; 25]; 2], None, SigmaParams::default(), 0.0).unwrap();
        assert!(matches!(
            corner_oracle(&b, &bundle, 0),
            Err(AleError::TooManyPrototypes(25, CORNER_LIMIT))
        ));
    }

    #[test]
    fn sampling_running_example() {
        let bundle = running_bundle();
        let top = bundle.sigma().max_value();
        let verified = topk_bounds(&[3, 1], &a(), top).unwrap();
        let r = sample_oracle(&verified, &bundle, 1, 10_000, 7).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.checked, 10_000);

        let loose = topk_bounds(&[3], &a(), top).unwrap();
        let r = sample_oracle(&loose, &bundle, 1, 10_000, 7).unwrap();
        assert!(r.violations > 0);
        assert!(r.first_violation.is_some());
        // The hand-made counterexample lies in the loose box and flips the class.
        let counter = [6.0, 7.0, 1.0, 8.0, 2.0];
        assert!(loose.contains(&counter, 0.0));
        assert_eq!(argmax_lowest(&logits(&counter, &bundle).unwrap()), 0);

        let point = ActivationBounds::point(a().values());
        assert_eq!(sample_oracle(&point, &bundle, 1, 1000, 1).unwrap().violations, 0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let bundle = running_bundle();
        let loose = topk_bounds(&[3], &a(), bundle.sigma().max_value()).unwrap();
        let r1 = sample_oracle(&loose, &bundle, 1, 500, 42).unwrap();
        let r2 = sample_oracle(&loose, &bundle, 1, 500, 42).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn sphere_oracle_three_four_five() {
        let r = sphere_containment_oracle(&[0.0, 0.0, 0.0], 5.0, &[6.0, 0.0, 0.0], 5.0, 1000, 3).unwrap();
        assert!(r.report.passed(), "{:?}", r.report.first_violation);
        assert!(r.max_pairwise >= 7.98 && r.max_pairwise <= 8.0 + 1e-9, "{}", r.max_pairwise);
    }

    #[test]
    fn sphere_oracle_tangent() {
        let r = sphere_containment_oracle(&[0.0, 0.0], 2.0, &[5.0, 0.0], 3.0, 10, 3).unwrap();
        assert!(r.report.passed());
        assert_eq!(r.radius, 0.0);
        assert!(r.max_pairwise.abs() < 1e-12);
    }

    #[test]
    fn sphere_oracle_rejects_disjoint() {
        assert!(matches!(
            sphere_containment_oracle(&[0.0, 0.0], 1.0, &[5.0, 0.0], 1.0, 10, 3),
            Err(AleError::EmptyIntersection { .. })
        ));
    }

    #[test]
    fn report_merge_is_associative() {
        let mk = |c, v, tag: &str| OracleReport {
            checked: c,
            violations: v,
            first_violation: (v > 0).then(|| Violation {
                input: serde_json::json!(tag),
                expected: serde_json::Value::Null,
                got: serde_json::Value::Null,
            }),
            seed: 0,
        };
        let (a, b, c) = (mk(3, 0, "a"), mk(2, 1, "b"), mk(4, 2, "c"));
        let left = a.clone().merge(b.clone()).merge(c.clone());
        let right = a.merge(b.merge(c));
        assert_eq!(left, right);
        assert_eq!(left.violations, 3);
    }
}
