//! Interpretation of explanations as activation intervals.
//!
//! The top-k paradigm reasons directly on the sorted activation vector. The
//! two spatial paradigms reason per latent component: every pair `(l, j)` in
//! the explanation reveals `d(z_l, p_j)`, from which each geometry bounds the
//! similarity of `z_l` to every other prototype. Activation bounds are then the
//! max over components of the per-component similarity bounds; components
//! without any pair contribute the universal interval `[0, sigma(0)]`.

mod sphere;
mod triangle;

use std::collections::BTreeMap;

pub use sphere::{
    build_spheres, hypersphere_bounds, hypersphere_intersect, refine_sphere, Sphere, SphereState,
    SphereGeometry,
};
pub use triangle::{triangle_bounds, TriangleGeometry};

use crate::error::{AleError, Result};
use crate::explanation::{ActivationBounds, Interval, Pair, Paradigm};
use crate::model::{ActivationVector, ModelBundle};

/// Per-component bound derivation shared by the spatial paradigms.
pub trait SpatialGeometry: Send + Sync {
    fn paradigm(&self) -> Paradigm;

    /// Whether removing pairs can only widen the bounds. Holds for
    /// max/min-style interval reasoning; order-dependent refinement breaks it.
    fn monotone_under_subsets(&self) -> bool;

    /// Similarity intervals of one latent component against every prototype,
    /// given the explained `(prototype, distance)` facts for that component in
    /// insertion order. `revealed` is never empty.
    fn component_intervals(
        &self,
        bundle: &ModelBundle,
        revealed: &[(usize, f64)],
        slack: f64,
    ) -> Result<Vec<Interval>>;
}

/// Interval assigned to every prototype of a component the explanation does
/// not cover.
pub fn universal_interval(bundle: &ModelBundle) -> Interval {
    Interval::new(0.0, bundle.sigma().max_value())
}

/// Groups pairs by component, keeping insertion order within each component,
/// and attaches the revealed distances.
pub fn reveal_by_component(
    pairs: &[Pair],
    distances: &[Vec<f64>],
) -> Result<BTreeMap<usize, Vec<(usize, f64)>>> {
    let mut grouped: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for &(l, j) in pairs {
        let d = distances
            .get(l)
            .and_then(|row| row.get(j))
            .copied()
            .ok_or(AleError::MissingDistance(l, j))?;
        grouped.entry(l).or_default().push((j, d));
    }
    Ok(grouped)
}

/// Max-aggregation of component intervals into activation bounds.
/// `uncovered` tells whether at least one component has no pair.
pub fn aggregate_components<'a>(
    bundle: &ModelBundle,
    components: impl IntoIterator<Item = &'a [Interval]>,
    uncovered: bool,
) -> ActivationBounds {
    let m = bundle.num_prototypes();
    let (mut lower, mut upper) = if uncovered {
        let u = universal_interval(bundle);
        (vec![u.lo; m], vec![u.hi; m])
    } else {
        (vec![f64::NEG_INFINITY; m], vec![f64::NEG_INFINITY; m])
    };
    for intervals in components {
        for (j, iv) in intervals.iter().enumerate() {
            lower[j] = lower[j].max(iv.lo);
            upper[j] = upper[j].max(iv.hi);
        }
    }
    ActivationBounds { lower, upper }
}

/// Bounds of a spatial explanation under `geometry`.
pub fn spatial_bounds(
    geometry: &dyn SpatialGeometry,
    bundle: &ModelBundle,
    pairs: &[Pair],
    distances: &[Vec<f64>],
    num_components: usize,
    slack: f64,
) -> Result<ActivationBounds> {
    check_pairs(bundle, pairs, num_components)?;
    let grouped = reveal_by_component(pairs, distances)?;
    let per_component = grouped
        .values()
        .map(|revealed| geometry.component_intervals(bundle, revealed, slack))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate_components(
        bundle,
        per_component.iter().map(Vec::as_slice),
        grouped.len() < num_components,
    ))
}

fn check_pairs(bundle: &ModelBundle, pairs: &[Pair], num_components: usize) -> Result<()> {
    for &(l, j) in pairs {
        if l >= num_components {
            return Err(AleError::IndexOutOfRange {
                what: "component",
                index: l,
                limit: num_components,
            });
        }
        bundle.check_prototype(j)?;
    }
    Ok(())
}

/// Top-k interpretation: explained prototypes are fixed to their activation,
/// every other prototype is bounded above by the smallest explained
/// activation. With nothing explained the upper bound is `ceiling`
/// (normally `sigma(0)`).
pub fn topk_bounds(
    prototypes: &[usize],
    activations: &ActivationVector,
    ceiling: f64,
) -> Result<ActivationBounds> {
    let m = activations.len();
    if let Some(&j) = prototypes.iter().find(|&&j| j >= m) {
        return Err(AleError::IndexOutOfRange {
            what: "prototype",
            index: j,
            limit: m,
        });
    }
    let cap = prototypes
        .iter()
        .map(|&j| activations[j])
        .fold(ceiling, f64::min);
    let mut lower = vec![0.0; m];
    let mut upper = vec![cap; m];
    for &j in prototypes {
        lower[j] = activations[j];
        upper[j] = activations[j];
    }
    Ok(ActivationBounds { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> ActivationVector {
        ActivationVector(vec![1.0, 3.0, 1.0, 8.0, 2.0])
    }

    #[test]
    fn topk_single_prototype() {
        let b = topk_bounds(&[3], &a(), 9.2).unwrap();
        assert_eq!(b.lower, vec![0.0, 0.0, 0.0, 8.0, 0.0]);
        assert_eq!(b.upper, vec![8.0; 5]);
    }

    #[test]
    fn topk_two_prototypes() {
        let b = topk_bounds(&[3, 1], &a(), 9.2).unwrap();
        assert_eq!(b.lower, vec![0.0, 3.0, 0.0, 8.0, 0.0]);
        assert_eq!(b.upper, vec![3.0, 3.0, 3.0, 8.0, 3.0]);
    }

    #[test]
    fn topk_everything_fixed() {
        let b = topk_bounds(&[0, 1, 2, 3, 4], &a(), 9.2).unwrap();
        assert_eq!(b.lower, a().0);
        assert_eq!(b.upper, a().0);
    }

    #[test]
    fn topk_empty_uses_ceiling() {
        let b = topk_bounds(&[], &a(), 9.2).unwrap();
        assert_eq!(b.upper, vec![9.2; 5]);
        assert_eq!(b.lower, vec![0.0; 5]);
    }

    #[test]
    fn topk_rejects_out_of_range() {
        assert!(matches!(
            topk_bounds(&[5], &a(), 9.2),
            Err(AleError::IndexOutOfRange { .. })
        ));
    }
}
