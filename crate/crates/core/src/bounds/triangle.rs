use crate::error::Result;
use crate::explanation::{ActivationBounds, Interval, Pair, Paradigm};
use crate::model::ModelBundle;

use super::{spatial_bounds, SpatialGeometry};

/// Triangle-inequality reasoning: knowing `d(z_l, p_j)` and `d(p_j, p_i)`,
/// `|d(z_l,p_j) - d(p_j,p_i)| <= d(z_l,p_i) <= d(z_l,p_j) + d(p_j,p_i)`.
#[derive(Debug, Default, Clone, Copy)]
pub struct TriangleGeometry;

impl SpatialGeometry for TriangleGeometry {
    fn paradigm(&self) -> Paradigm {
        Paradigm::Triangle
    }

    fn monotone_under_subsets(&self) -> bool {
        true
    }

    fn component_intervals(
        &self,
        bundle: &ModelBundle,
        revealed: &[(usize, f64)],
        slack: f64,
    ) -> Result<Vec<Interval>> {
        let sigma = bundle.sigma();
        let proto_dist = bundle.proto_dist();
        let m = bundle.num_prototypes();
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            if let Some(&(_, d)) = revealed.iter().find(|(j, _)| *j == i) {
                out.push(Interval::point(sigma.eval(d)));
                continue;
            }
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for &(j, d_zj) in revealed {
                let d_ji = proto_dist[j][i];
                lo = lo.max(sigma.eval(d_zj + d_ji + slack));
                hi = hi.min(sigma.eval(((d_zj - d_ji).abs() - slack).max(0.0)));
            }
            out.push(Interval::new(lo, hi));
        }
        Ok(out)
    }
}

/// Activation bounds of a triangle-paradigm explanation. `distances[l][j]`
/// must hold `d(z_l, p_j)` for every pair of the explanation.
pub fn triangle_bounds(
    pairs: &[Pair],
    distances: &[Vec<f64>],
    bundle: &ModelBundle,
    num_components: usize,
) -> Result<ActivationBounds> {
    spatial_bounds(
        &TriangleGeometry,
        bundle,
        pairs,
        distances,
        num_components,
        bundle.distance_slack(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SigmaParams;

    fn line_bundle(slack: f64) -> ModelBundle {
        ModelBundle::new(
            vec![vec![0.0], vec![10.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            None,
            SigmaParams::log_ratio(1e-4).unwrap(),
            slack,
        )
        .unwrap()
    }

    #[test]
    fn one_dimensional_hand_computation() {
        // z = 3, p1 = 0, p2 = 10: d(z,p2) is in [7, 13].
        let bundle = line_bundle(0.0);
        let distances = vec![vec![3.0, 7.0]];
        let b = triangle_bounds(&[(0, 0)], &distances, &bundle, 1).unwrap();
        let s = bundle.sigma();
        assert!((b.lower[1] - s.eval(13.0)).abs() < 1e-15);
        assert!((b.upper[1] - s.eval(7.0)).abs() < 1e-15);
        assert!((b.lower[1] - 0.0741).abs() < 1e-4, "{}", b.lower[1]);
        assert!((b.upper[1] - 0.1335).abs() < 1e-4, "{}", b.upper[1]);
        assert_eq!(b.lower[0], s.eval(3.0));
        assert_eq!(b.upper[0], s.eval(3.0));
    }

    #[test]
    fn coincident_anchor_collapses_other_intervals() {
        let bundle = line_bundle(0.0);
        let distances = vec![vec![0.0, 10.0]];
        let b = triangle_bounds(&[(0, 0)], &distances, &bundle, 1).unwrap();
        assert_eq!(b.lower[1], b.upper[1]);
        assert_eq!(b.lower[1], bundle.sigma().eval(10.0));
    }

    #[test]
    fn uncovered_component_is_universal() {
        let bundle = line_bundle(0.0);
        let distances = vec![vec![3.0, 7.0], vec![20.0, 10.0]];
        let b = triangle_bounds(&[(0, 0)], &distances, &bundle, 2).unwrap();
        let top = bundle.sigma().max_value();
        assert_eq!(b.upper, vec![top, top]);
        assert_eq!(b.lower[0], bundle.sigma().eval(3.0));
    }

    #[test]
    fn slack_widens_only_derived_intervals() {
        let bundle = line_bundle(0.5);
        let distances = vec![vec![3.0, 7.0]];
        let b = triangle_bounds(&[(0, 0)], &distances, &bundle, 1).unwrap();
        let s = bundle.sigma();
        assert_eq!(b.lower[0], s.eval(3.0));
        assert_eq!(b.lower[1], s.eval(13.5));
        assert_eq!(b.upper[1], s.eval(6.5));
    }
}
