use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AleError, Result};

/// Bound-derivation scheme an explanation is interpreted under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    TopK,
    Triangle,
    Hypersphere,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [Paradigm::Triangle, Paradigm::Hypersphere, Paradigm::TopK];

    pub fn name(self) -> &'static str {
        match self {
            Paradigm::TopK => "topk",
            Paradigm::Triangle => "triangle",
            Paradigm::Hypersphere => "hypersphere",
        }
    }

    pub fn is_spatial(self) -> bool {
        !matches!(self, Paradigm::TopK)
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Paradigm {
    type Err = AleError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "topk" | "top-k" => Ok(Paradigm::TopK),
            "triangle" => Ok(Paradigm::Triangle),
            "hypersphere" | "sphere" => Ok(Paradigm::Hypersphere),
            _ => Err(AleError::UnknownStrategy {
                kind: "paradigm",
                name: s.to_string(),
                known: "topk, triangle, hypersphere".into(),
            }),
        }
    }
}

/// A (latent component, prototype) pair.
pub type Pair = (usize, usize);

/// A candidate explanation: prototype indices for top-k, (component,
/// prototype) pairs for the spatial paradigms. Insertion order is kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub paradigm: Paradigm,
    pub prototypes: Vec<usize>,
    pub pairs: Vec<Pair>,
    pub anchor_id: String,
}

impl Explanation {
    pub fn top_k(prototypes: Vec<usize>, anchor_id: impl Into<String>) -> Self {
        Explanation {
            paradigm: Paradigm::TopK,
            prototypes,
            pairs: Vec::new(),
            anchor_id: anchor_id.into(),
        }
    }

    pub fn spatial(paradigm: Paradigm, pairs: Vec<Pair>, anchor_id: impl Into<String>) -> Self {
        debug_assert!(paradigm.is_spatial());
        Explanation {
            paradigm,
            prototypes: Vec::new(),
            pairs,
            anchor_id: anchor_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        if self.paradigm.is_spatial() {
            self.pairs.len()
        } else {
            self.prototypes.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of this explanation with the element at `position` removed.
    pub fn without(&self, position: usize) -> Explanation {
        let mut out = self.clone();
        if self.paradigm.is_spatial() {
            out.pairs.remove(position);
        } else {
            out.prototypes.remove(position);
        }
        out
    }

    /// Checks the shape, index ranges and uniqueness against a model with
    /// `num_prototypes` prototypes and an anchor with `num_components` components.
    pub fn validate(&self, num_prototypes: usize, num_components: usize) -> Result<()> {
        if self.paradigm.is_spatial() {
            if !self.prototypes.is_empty() {
                return Err(AleError::malformed(
                    "explanation",
                    "spatial explanations carry pairs, not prototypes",
                ));
            }
            let mut seen = BTreeSet::new();
            for &(l, j) in &self.pairs {
                if l >= num_components {
                    return Err(AleError::IndexOutOfRange {
                        what: "component",
                        index: l,
                        limit: num_components,
                    });
                }
                if j >= num_prototypes {
                    return Err(AleError::IndexOutOfRange {
                        what: "prototype",
                        index: j,
                        limit: num_prototypes,
                    });
                }
                if !seen.insert((l, j)) {
                    return Err(AleError::Duplicate {
                        what: "pair",
                        detail: format!("({l}, {j})"),
                    });
                }
            }
        } else {
            if !self.pairs.is_empty() {
                return Err(AleError::malformed(
                    "explanation",
                    "top-k explanations carry prototypes, not pairs",
                ));
            }
            let mut seen = BTreeSet::new();
            for &j in &self.prototypes {
                if j >= num_prototypes {
                    return Err(AleError::IndexOutOfRange {
                        what: "prototype",
                        index: j,
                        limit: num_prototypes,
                    });
                }
                if !seen.insert(j) {
                    return Err(AleError::Duplicate {
                        what: "prototype",
                        detail: j.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

/// Per-prototype activation intervals implied by an explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ActivationBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(AleError::DimensionMismatch(format!(
                "bounds of lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(j) = (0..lower.len()).find(|&j| !(lower[j] <= upper[j])) {
            return Err(AleError::malformed(
                "bounds",
                format!("lower[{j}] = {} exceeds upper[{j}] = {}", lower[j], upper[j]),
            ));
        }
        Ok(ActivationBounds { lower, upper })
    }

    /// Degenerate box at a single activation vector.
    pub fn point(a: &[f64]) -> Self {
        ActivationBounds {
            lower: a.to_vec(),
            upper: a.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn interval(&self, j: usize) -> Interval {
        Interval::new(self.lower[j], self.upper[j])
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .collect()
    }

    pub fn contains(&self, a: &[f64], tol: f64) -> bool {
        a.len() == self.len() && (0..a.len()).all(|j| self.interval(j).contains(a[j], tol))
    }

    /// Whether `self` is componentwise inside `other` (within `tol`).
    pub fn is_within(&self, other: &ActivationBounds, tol: f64) -> bool {
        self.len() == other.len()
            && (0..self.len())
                .all(|j| self.lower[j] >= other.lower[j] - tol && self.upper[j] <= other.upper[j] + tol)
    }
}
