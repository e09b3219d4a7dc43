//! Sufficiency check of activation bounds against an affine decision head.
//!
//! For every challenger class `k`, the box corner maximizing `h_k - h_c` is
//! built coordinate-wise from the sign of `w_jk - w_jc`; if the predicted
//! class still wins there, it wins everywhere in the box.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{AleError, Result};
use crate::explanation::ActivationBounds;
use crate::model::{logits, ModelBundle};

/// The maximally favoring vector for an undominated class and its logit gap
/// `h_k - h_c` there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub vector: Vec<f64>,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyResult {
    pub verified: bool,
    pub unverified_classes: Vec<usize>,
    pub witnesses: BTreeMap<usize, Witness>,
}

/// Box corner maximizing `h_k - h_c`: upper bound where `w_jk >= w_jc`,
/// lower bound otherwise.
pub fn max_favoring(
    bounds: &ActivationBounds,
    bundle: &ModelBundle,
    k: usize,
    c: usize,
) -> Result<Vec<f64>> {
    bundle.check_class(k)?;
    bundle.check_class(c)?;
    check_len(bounds, bundle)?;
    Ok((0..bundle.num_prototypes())
        .map(|j| {
            if bundle.weight(k, j) >= bundle.weight(c, j) {
                bounds.upper[j]
            } else {
                bounds.lower[j]
            }
        })
        .collect())
}

/// Whether the predicted class `c` beats challenger `k` given their logits.
/// A tie favors the lower class index, so beating a lower-indexed class
/// needs a strict margin.
#[inline]
pub fn dominates(k: usize, c: usize, h_k: f64, h_c: f64, margin: f64) -> bool {
    let lead = h_c - h_k;
    if k < c {
        lead > margin
    } else {
        lead >= margin
    }
}

pub fn verify(bounds: &ActivationBounds, bundle: &ModelBundle, c: usize) -> Result<VerifyResult> {
    verify_with_margin(bounds, bundle, c, 0.0)
}

/// [`verify`] with an absolute logit margin `margin >= 0` that every
/// domination must clear.
pub fn verify_with_margin(
    bounds: &ActivationBounds,
    bundle: &ModelBundle,
    c: usize,
    margin: f64,
) -> Result<VerifyResult> {
    bundle.check_class(c)?;
    check_len(bounds, bundle)?;
    let mut unverified_classes = Vec::new();
    let mut witnesses = BTreeMap::new();
    for k in (0..bundle.num_classes()).filter(|&k| k != c) {
        let v = max_favoring(bounds, bundle, k, c)?;
        let h = logits(&v, bundle)?;
        if !dominates(k, c, h[k], h[c], margin) {
            unverified_classes.push(k);
            witnesses.insert(
                k,
                Witness {
                    gap: h[k] - h[c],
                    vector: v,
                },
            );
        }
    }
    Ok(VerifyResult {
        verified: unverified_classes.is_empty(),
        unverified_classes,
        witnesses,
    })
}

fn check_len(bounds: &ActivationBounds, bundle: &ModelBundle) -> Result<()> {
    if bounds.len() != bundle.num_prototypes() {
        return Err(AleError::DimensionMismatch(format!(
            "bounds cover {} prototypes, bundle has {}",
            bounds.len(),
            bundle.num_prototypes()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::topk_bounds;
    use crate::model::{predict_from_activations, ActivationVector, SigmaParams};

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
    fn top1_is_not_sufficient() {
        let bundle = running_bundle();
        let b = topk_bounds(&[3], &a(), 9.2).unwrap();
        assert_eq!(max_favoring(&b, &bundle, 0, 1).unwrap(), vec![8.0, 8.0, 8.0, 8.0, 0.0]);
        let r = verify(&b, &bundle, 1).unwrap();
        assert!(!r.verified);
        assert_eq!(r.unverified_classes, vec![0]);
        let w = &r.witnesses[&0];
        assert_eq!(w.vector, vec![8.0, 8.0, 8.0, 8.0, 0.0]);
        assert_eq!(logits(&w.vector, &bundle).unwrap(), vec![216.0, 120.0]);
        assert_eq!(w.gap, 96.0);
    }

    #[test]
    fn top2_is_sufficient() {
        let bundle = running_bundle();
        let b = topk_bounds(&[3, 1], &a(), 9.2).unwrap();
        let v = max_favoring(&b, &bundle, 0, 1).unwrap();
        assert_eq!(logits(&v, &bundle).unwrap(), vec![81.0, 95.0]);
        assert!(verify(&b, &bundle, 1).unwrap().verified);
    }

    #[test]
    fn point_box_verifies_the_prediction() {
        let bundle = running_bundle();
        let b = ActivationBounds::point(a().values());
        let c = predict_from_activations(a().values(), &bundle).unwrap();
        assert!(verify(&b, &bundle, c).unwrap().verified);
    }

    #[test]
    fn equal_weights_take_upper() {
        let protos = vec![vec![0.0], vec![1.0]];
        let w = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let bundle = ModelBundle::new(protos, w, None, SigmaParams::default(), 0.0).unwrap();
        let b = ActivationBounds::new(vec![0.1, 0.2], vec![0.5, 0.7]).unwrap();
        assert_eq!(max_favoring(&b, &bundle, 1, 0).unwrap(), vec![0.5, 0.7]);
    }

    #[test]
    fn ties_against_lower_classes_fail() {
        // Identical heads: class 0 wins every tie, so class 1 can never be verified.
        let protos = vec![vec![0.0]];
        let w = vec![vec![1.0], vec![1.0]];
        let bundle = ModelBundle::new(protos, w, None, SigmaParams::default(), 0.0).unwrap();
        let b = ActivationBounds::point(&[0.5]);
        assert!(verify(&b, &bundle, 0).unwrap().verified);
        assert!(!verify(&b, &bundle, 1).unwrap().verified);
    }

    #[test]
    fn margin_only_shrinks_the_verified_set() {
        let bundle = running_bundle();
        let b = topk_bounds(&[3, 1], &a(), 9.2).unwrap();
        assert!(verify_with_margin(&b, &bundle, 1, 13.9).unwrap().verified);
        assert!(!verify_with_margin(&b, &bundle, 1, 14.1).unwrap().verified);
    }

    #[test]
    fn class_out_of_range() {
        let bundle = running_bundle();
        let b = ActivationBounds::point(a().values());
        assert!(matches!(
            verify(&b, &bundle, 2),
            Err(AleError::IndexOutOfRange { .. })
        ));
    }
}
