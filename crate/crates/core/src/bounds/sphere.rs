use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{AleError, Result};
use crate::explanation::{ActivationBounds, Interval, Pair, Paradigm};
use crate::model::{l2_distance, ModelBundle};

use super::{aggregate_components, reveal_by_component, SpatialGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Sphere { center, radius }
    }

    /// Range of distances from `point` to the surface of this sphere, given
    /// the center-to-point distance `center_dist`.
    #[inline]
    fn surface_range(radius: f64, center_dist: f64, slack: f64) -> (f64, f64) {
        (
            ((center_dist - radius).abs() - slack).max(0.0),
            center_dist + radius + slack,
        )
    }
}

/// Smallest hypersphere containing the intersection of the surfaces of two
/// hyperspheres.
///
/// The radius is the height of the triangle `(C1, C2, s)` over the base
/// `C1C2`, computed with Heron's formula in Kahan's stable ordering. The
/// center lies on the axis at signed offset `(d² + r1² − r2²) / 2d` from `C1`,
/// which is negative when the intersection sits behind `C1`.
pub fn hypersphere_intersect(
    c1: &[f64],
    r1: f64,
    c2: &[f64],
    r2: f64,
    delta: f64,
) -> Result<Sphere> {
    if c1.len() != c2.len() {
        return Err(AleError::DimensionMismatch(format!(
            "sphere centers of dimension {} and {}",
            c1.len(),
            c2.len()
        )));
    }
    let d = l2_distance(c1, c2);
    if d <= delta || d == 0.0 {
        return Err(AleError::CoincidentCenters(d));
    }
    if d > r1 + r2 + delta || d < (r1 - r2).abs() - delta {
        return Err(AleError::EmptyIntersection {
            distance: d,
            r1,
            r2,
        });
    }

    let mut sides = [d, r1, r2];
    sides.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = sides;
    let heron16 = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    // Triangle area is sqrt(heron16) / 4; r3 = 2 * area / d.
    let radius = (0.5 * heron16.max(0.0).sqrt() / d).min(r1).min(r2);

    let offset = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let center = c1
        .iter()
        .zip(c2)
        .map(|(x1, x2)| x1 + offset * (x2 - x1) / d)
        .collect();
    Ok(Sphere { center, radius })
}

/// Enclosing sphere of one latent component, refined pair by pair.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SphereState {
    /// `None` until the first pair: the component can be anywhere.
    pub current: Option<Sphere>,
    /// `(prototype, distance)` facts absorbed so far, in order.
    pub support: Vec<(usize, f64)>,
    /// Every intersection sphere produced, in order. The anchor lies on the
    /// surface of each of them and of each support sphere.
    pub refined: Vec<Sphere>,
}

impl SphereState {
    pub fn unbounded() -> Self {
        SphereState::default()
    }

    pub fn radius(&self) -> f64 {
        self.current.as_ref().map_or(f64::INFINITY, |s| s.radius)
    }

    pub fn center(&self) -> Option<&[f64]> {
        self.current.as_ref().map(|s| s.center.as_slice())
    }
}

/// Absorbs the fact `d(z, proto) = dist` into `state`.
///
/// Coincident centers leave the sphere untouched. When rounding makes the
/// two spheres look disjoint, the smaller one is kept; the anchor lies on
/// both surfaces, so either is still a valid enclosure.
pub fn refine_sphere(
    state: &SphereState,
    proto_index: usize,
    proto: &[f64],
    dist: f64,
    delta: f64,
) -> SphereState {
    let mut next = state.clone();
    next.support.push((proto_index, dist));
    let Some(current) = &state.current else {
        next.current = Some(Sphere::new(proto.to_vec(), dist));
        return next;
    };
    match hypersphere_intersect(&current.center, current.radius, proto, dist, delta) {
        Ok(sphere) => {
            next.refined.push(sphere.clone());
            next.current = Some(sphere);
        }
        Err(AleError::EmptyIntersection { .. }) if dist < current.radius => {
            next.current = Some(Sphere::new(proto.to_vec(), dist));
        }
        Err(_) => {}
    }
    next
}

fn state_for(bundle: &ModelBundle, revealed: &[(usize, f64)], slack: f64) -> SphereState {
    revealed.iter().fold(SphereState::unbounded(), |state, &(j, d)| {
        refine_sphere(&state, j, bundle.prototype(j), d, slack)
    })
}

/// Similarity intervals of one covered component from its sphere state.
///
/// Each prototype's distance range is the intersection of the surface ranges
/// over every sphere the anchor is known to lie on: the revealed prototype
/// spheres and every refinement. If rounding empties the intersection the
/// prototype-sphere range alone is used.
fn sphere_component_intervals(
    bundle: &ModelBundle,
    state: &SphereState,
    revealed: &[(usize, f64)],
    slack: f64,
) -> Vec<Interval> {
    let sigma = bundle.sigma();
    let proto_dist = bundle.proto_dist();
    (0..bundle.num_prototypes())
        .map(|i| {
            if let Some(&(_, d)) = revealed.iter().find(|(j, _)| *j == i) {
                return Interval::point(sigma.eval(d));
            }
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            for &(j, r) in &state.support {
                let (a, b) = Sphere::surface_range(r, proto_dist[j][i], slack);
                lo = lo.max(a);
                hi = hi.min(b);
            }
            let (mut rlo, mut rhi) = (lo, hi);
            for sphere in &state.refined {
                let dc = l2_distance(&sphere.center, bundle.prototype(i));
                let (a, b) = Sphere::surface_range(sphere.radius, dc, slack);
                rlo = rlo.max(a);
                rhi = rhi.min(b);
            }
            if rlo <= rhi {
                lo = rlo;
                hi = rhi;
            }
            let (s_lo, s_hi) = sigma.map_interval(lo, hi);
            Interval::new(s_lo, s_hi)
        })
        .collect()
}

/// Hypersphere-intersection reasoning.
#[derive(Debug, Default, Clone, Copy)]
pub struct SphereGeometry;

impl SpatialGeometry for SphereGeometry {
    fn paradigm(&self) -> Paradigm {
        Paradigm::Hypersphere
    }

    fn monotone_under_subsets(&self) -> bool {
        false
    }

    fn component_intervals(
        &self,
        bundle: &ModelBundle,
        revealed: &[(usize, f64)],
        slack: f64,
    ) -> Result<Vec<Interval>> {
        let state = state_for(bundle, revealed, slack);
        Ok(sphere_component_intervals(bundle, &state, revealed, slack))
    }
}

/// Sphere state of every covered component, refined in the explanation's
/// insertion order.
pub fn build_spheres(
    pairs: &[Pair],
    distances: &[Vec<f64>],
    bundle: &ModelBundle,
    slack: f64,
) -> Result<BTreeMap<usize, SphereState>> {
    Ok(reveal_by_component(pairs, distances)?
        .into_iter()
        .map(|(l, revealed)| (l, state_for(bundle, &revealed, slack)))
        .collect())
}

/// Activation bounds of a hypersphere-paradigm explanation from
/// precomputed sphere states (see [`build_spheres`]).
pub fn hypersphere_bounds(
    pairs: &[Pair],
    distances: &[Vec<f64>],
    spheres: &BTreeMap<usize, SphereState>,
    bundle: &ModelBundle,
    num_components: usize,
) -> Result<ActivationBounds> {
    let slack = bundle.distance_slack();
    let grouped = reveal_by_component(pairs, distances)?;
    let mut per_component = Vec::with_capacity(grouped.len());
    for (l, revealed) in &grouped {
        if *l >= num_components {
            return Err(AleError::IndexOutOfRange {
                what: "component",
                index: *l,
                limit: num_components,
            });
        }
        let state = spheres.get(l).ok_or(AleError::MissingSphere(*l))?;
        per_component.push(sphere_component_intervals(bundle, state, revealed, slack));
    }
    Ok(aggregate_components(
        bundle,
        per_component.iter().map(Vec::as_slice),
        grouped.len() < num_components,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::triangle_bounds;
    use crate::model::SigmaParams;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn three_four_five() {
        let s = hypersphere_intersect(&[0.0, 0.0], 5.0, &[6.0, 0.0], 5.0, 0.0).unwrap();
        assert_eq!(s.center, vec![3.0, 0.0]);
        assert_eq!(s.radius, 4.0);
    }

    #[test]
    fn tangent_spheres() {
        let s = hypersphere_intersect(&[0.0, 0.0], 2.0, &[5.0, 0.0], 3.0, 0.0).unwrap();
        assert_eq!(s.radius, 0.0);
        assert_eq!(s.center, vec![2.0, 0.0]);
    }

    #[test]
    fn root_two_case() {
        let r = 2f64.sqrt();
        let s = hypersphere_intersect(&[0.0, 0.0], r, &[2.0, 0.0], r, 0.0).unwrap();
        assert!(close(s.center[0], 1.0) && close(s.center[1], 0.0), "{:?}", s.center);
        assert!(close(s.radius, 1.0), "{}", s.radius);
    }

    #[test]
    fn intersection_behind_first_center() {
        // z = (-0.5, sqrt(3)/2) on the unit circle around the origin.
        let z = [-0.5, 3f64.sqrt() / 2.0];
        let c2 = [1.0, 0.0];
        let r2 = l2_distance(&z, &c2);
        let s = hypersphere_intersect(&[0.0, 0.0], 1.0, &c2, r2, 0.0).unwrap();
        assert!(close(s.center[0], -0.5), "{:?}", s.center);
        assert!(close(l2_distance(&z, &s.center), s.radius));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            hypersphere_intersect(&[0.0], 1.0, &[5.0], 1.0, 0.0),
            Err(AleError::EmptyIntersection { .. })
        ));
        assert!(matches!(
            hypersphere_intersect(&[0.0, 0.0], 1.0, &[0.0, 0.0], 1.0, 0.0),
            Err(AleError::CoincidentCenters(_))
        ));
        assert!(matches!(
            hypersphere_intersect(&[0.0, 0.0], 1.0, &[1e-7, 0.0], 1.0, 1e-6),
            Err(AleError::CoincidentCenters(_))
        ));
    }

    #[test]
    fn refinement_sequence() {
        let z = [1.0, 1.0];
        let pa = [0.0, 0.0];
        let pb = [2.0, 0.0];
        let s0 = SphereState::unbounded();
        let s1 = refine_sphere(&s0, 0, &pa, l2_distance(&z, &pa), 0.0);
        assert_eq!(s1.center().unwrap(), &pa);
        assert!(close(s1.radius(), 2f64.sqrt()));
        let s2 = refine_sphere(&s1, 1, &pb, l2_distance(&z, &pb), 0.0);
        let c = s2.center().unwrap();
        assert!(close(c[0], 1.0) && close(c[1], 0.0));
        assert!(close(s2.radius(), 1.0));
        assert!(close(l2_distance(&z, c), s2.radius()));
    }

    #[test]
    fn repeated_refinement_never_grows() {
        let z = [0.3, -1.2, 0.7];
        let p = [1.0, 1.0, 1.0];
        let d = l2_distance(&z, &p);
        let s1 = refine_sphere(&SphereState::unbounded(), 0, &p, d, 0.0);
        let s2 = refine_sphere(&s1, 0, &p, d, 0.0);
        assert_eq!(s2.radius(), s1.radius());
        assert_eq!(s2.current, s1.current);
    }

    #[test]
    fn disjoint_by_rounding_keeps_smaller_sphere() {
        let s1 = refine_sphere(&SphereState::unbounded(), 0, &[0.0, 0.0], 1.0, 0.0);
        let s2 = refine_sphere(&s1, 1, &[10.0, 0.0], 0.5, 0.0);
        assert_eq!(s2.radius(), 0.5);
        assert_eq!(s2.center().unwrap(), &[10.0, 0.0]);
    }

    fn grid_bundle() -> ModelBundle {
        let protos = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 3.0],
            vec![-1.0, -1.0],
        ];
        let weights = vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]];
        ModelBundle::new(protos, weights, None, SigmaParams::default(), 0.0).unwrap()
    }

    fn distances(bundle: &ModelBundle, zs: &[[f64; 2]]) -> Vec<Vec<f64>> {
        zs.iter()
            .map(|z| bundle.prototypes().iter().map(|p| l2_distance(z, p)).collect())
            .collect()
    }

    #[test]
    fn single_pair_matches_triangle() {
        let bundle = grid_bundle();
        let d = distances(&bundle, &[[0.4, 0.9]]);
        for j in 0..4 {
            let pairs = [(0, j)];
            let spheres = build_spheres(&pairs, &d, &bundle, 0.0).unwrap();
            let hs = hypersphere_bounds(&pairs, &d, &spheres, &bundle, 1).unwrap();
            let tr = triangle_bounds(&pairs, &d, &bundle, 1).unwrap();
            assert_eq!(hs, tr);
        }
    }

    #[test]
    fn zero_radius_pins_everything() {
        let bundle = grid_bundle();
        let d = distances(&bundle, &[[2.0, 0.0]]);
        let pairs = [(0, 1)];
        let spheres = build_spheres(&pairs, &d, &bundle, 0.0).unwrap();
        let b = hypersphere_bounds(&pairs, &d, &spheres, &bundle, 1).unwrap();
        for j in 0..4 {
            assert!(close(b.lower[j], b.upper[j]), "prototype {j}: {:?}", b.interval(j));
            assert!(close(b.lower[j], bundle.sigma().eval(d[0][j])));
        }
    }

    #[test]
    fn missing_state_is_an_error() {
        let bundle = grid_bundle();
        let d = distances(&bundle, &[[0.4, 0.9]]);
        let err = hypersphere_bounds(&[(0, 0)], &d, &BTreeMap::new(), &bundle, 1).unwrap_err();
        assert!(matches!(err, AleError::MissingSphere(0)));
    }

    #[test]
    fn two_pairs_contain_truth_and_dominate_triangle() {
        let bundle = grid_bundle();
        let d = distances(&bundle, &[[0.4, 0.9]]);
        let pairs = [(0, 0), (0, 1)];
        let spheres = build_spheres(&pairs, &d, &bundle, 0.0).unwrap();
        let hs = hypersphere_bounds(&pairs, &d, &spheres, &bundle, 1).unwrap();
        let tr = triangle_bounds(&pairs, &d, &bundle, 1).unwrap();
        let truth: Vec<f64> = d[0].iter().map(|&x| bundle.sigma().eval(x)).collect();
        assert!(hs.contains(&truth, 1e-12));
        assert!(hs.is_within(&tr, 1e-12));
        // In 2-D two spheres pin the point up to a reflection across the axis,
        // and prototype 2 is off-axis, so the refinement must strictly help.
        assert!(hs.interval(2).width() < tr.interval(2).width());
    }
}
