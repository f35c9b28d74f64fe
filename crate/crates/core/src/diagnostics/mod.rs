//! Token-space diagnostics: distribution drift between weeks, PCA effective
//! dimension, subspace distances, and numerical checks of the phase/patch
//! subspace stability bounds.

mod mmd;
mod pca;
mod stability;
mod subspace;
mod tokens;

pub use mmd::{median_gamma, rbf_mmd2, Bandwidth};
pub use pca::{effective_dim, explained_variance};
pub use stability::{stability_trials, verify_stability, StabilityReport, StabilitySummary, STABILITY_CONSTANT};
pub use subspace::{column_basis, left_subspace, right_subspace, subspace_distance};
pub use tokens::{build_token_sets, weekly_drift, weekly_drift_with, DriftReport, TokenKind, TokenSet};
