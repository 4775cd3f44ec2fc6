//! Tests groups of people for a scarcity of distinct names.
//!
//! A group of `N` people with `L` distinct (last or first) names is compared
//! against random samples of `N` people drawn without replacement from a
//! reference pool. If few samples have as few distinct names as the group,
//! the scarcity cannot be explained by unbiased hiring.
//!
//! The crate is organized as:
//!
//! * [`roster`]: person records, name normalization and CSV ingestion.
//! * [`scarcity`]: the Monte Carlo test and an exact dynamic-programming oracle.
//! * [`multiplicity`]: Storey q-values and the joint p/q classification.
//! * [`strata`]: region, gender and common-name stratification.
//! * [`diagnostics`]: logit fits, name frequencies, gender shares.
//! * [`synthlab`]: synthetic rosters and power curves.

pub mod diagnostics;
pub mod error;
pub mod multiplicity;
pub mod roster;
pub mod scarcity;
pub mod strata;
pub mod synthlab;

pub use error::{Error, Result};
pub use multiplicity::{classify, qvalues, QValueConfig, QValueReport};
pub use roster::{
    dedup_uk, distinct_count, ingest_roster, normalize_name, Gender, NameField, NormalizationPolicy, Person, Roster,
    Schema,
};
pub use scarcity::{analyze_groups, exact_pvalue, mc_pvalue, NamePool, ScarcityResult, TestConfig};
pub use synthlab::{generate, power_curve, SynthConfig};
