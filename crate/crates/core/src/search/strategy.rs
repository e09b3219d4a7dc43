//! Pair-selection and initialization policies of the spatial search.

use crate::explanation::Pair;

/// Chooses the next (component, prototype) pair to reveal.
pub trait PairSelector: Send + Sync {
    fn name(&self) -> &'static str;

    /// `member[l][j]` marks pairs already in the explanation; `cursor` is
    /// private state the selector may carry across calls of one search.
    /// Returns `None` once every pair is taken.
    fn next_pair(&self, distances: &[Vec<f64>], member: &[Vec<bool>], cursor: &mut usize)
        -> Option<Pair>;
}

/// Seeds the explanation before the forward pass.
pub trait ExpInit: Send + Sync {
    fn name(&self) -> &'static str;

    fn initial_pairs(&self, distances: &[Vec<f64>]) -> Vec<Pair>;
}

fn nearest_unused(row: &[f64], used: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &d) in row.iter().enumerate() {
        if used[j] {
            continue;
        }
        if best.is_none_or(|b| d < row[b]) {
            best = Some(j);
        }
    }
    best
}

/// Globally closest unused pair; ties toward lower component, then lower
/// prototype.
#[derive(Debug, Default, Clone, Copy)]
pub struct NearestFirst;

impl PairSelector for NearestFirst {
    fn name(&self) -> &'static str {
        "nearest"
    }

    fn next_pair(
        &self,
        distances: &[Vec<f64>],
        member: &[Vec<bool>],
        _cursor: &mut usize,
    ) -> Option<Pair> {
        let mut best: Option<(Pair, f64)> = None;
        for (l, row) in distances.iter().enumerate() {
            if let Some(j) = nearest_unused(row, &member[l]) {
                if best.is_none_or(|(_, d)| row[j] < d) {
                    best = Some(((l, j), row[j]));
                }
            }
        }
        best.map(|(pair, _)| pair)
    }
}

/// Cycles over components in index order, taking each component's nearest
/// unused prototype, so no component gets far ahead of the others.
#[derive(Debug, Default, Clone, Copy)]
pub struct RoundRobin;

impl PairSelector for RoundRobin {
    fn name(&self) -> &'static str {
        "round-robin"
    }

    fn next_pair(
        &self,
        distances: &[Vec<f64>],
        member: &[Vec<bool>],
        cursor: &mut usize,
    ) -> Option<Pair> {
        let n = distances.len();
        for step in 0..n {
            let l = (*cursor + step) % n;
            if let Some(j) = nearest_unused(&distances[l], &member[l]) {
                *cursor = (l + 1) % n;
                return Some((l, j));
            }
        }
        None
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct EmptyInit;

impl ExpInit for EmptyInit {
    fn name(&self) -> &'static str {
        "empty"
    }

    fn initial_pairs(&self, _distances: &[Vec<f64>]) -> Vec<Pair> {
        Vec::new()
    }
}

/// One pair per component: the component's nearest prototype.
#[derive(Debug, Default, Clone, Copy)]
pub struct NearestPerComponent;

impl ExpInit for NearestPerComponent {
    fn name(&self) -> &'static str {
        "nearest-per-component"
    }

    fn initial_pairs(&self, distances: &[Vec<f64>]) -> Vec<Pair> {
        distances
            .iter()
            .enumerate()
            .filter_map(|(l, row)| nearest_unused(row, &vec![false; row.len()]).map(|j| (l, j)))
            .collect()
    }
}
