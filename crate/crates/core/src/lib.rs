//! Abductive latent explanations for prototype-based classifiers.
//!
//! An explanation is a set of facts about an instance's latent
//! representation (revealed prototype activations, or revealed distances
//! between latent components and prototypes) that bounds every prototype
//! activation tightly enough for the predicted class to win over the whole
//! bounded region.
//!
//! ```
//! use ale_core::{explain, synth, Paradigm, SearchConfig};
//!
//! let (bundle, instance) = synth::running_example();
//! let cfg = SearchConfig::for_bundle(Paradigm::TopK, &bundle);
//! let out = explain(&bundle, &instance, &cfg).unwrap();
//! assert_eq!(out.explanation.prototypes, vec![3, 1]);
//! assert!(out.verification.verified);
//! ```

pub mod anchor;
pub mod bounds;
pub mod error;
pub mod explanation;
pub mod io;
pub mod model;
pub mod oracle;
pub mod registry;
pub mod report;
pub mod search;
pub mod synth;
pub mod verify;

pub use anchor::Anchor;
pub use error::{AleError, Result};
pub use explanation::{ActivationBounds, Explanation, Interval, Pair, Paradigm};
pub use model::{
    activations, load_bundle, logits, predict, ActivationVector, BundleDocument, LatentInstance, ModelBundle,
    SigmaParams,
};
pub use registry::Registry;
pub use search::{explain, spatial_ale, topk_ale, SearchConfig, SearchOutcome, SearchStatus};
pub use verify::{verify, verify_with_margin, VerifyResult};
