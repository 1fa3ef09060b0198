//! Product-level value-chain inference from regional trade specialization.
//!
//! The pipeline runs in stages, each a plain function over immutable data:
//!
//! 1. [`ingest`] pools regional trade CSVs into a [`TradeTable`] and removes
//!    excluded or small regions and one-sided products.
//! 2. [`specialization`] computes export and import revealed comparative
//!    advantage for every (location, product) pair.
//! 3. [`inference`] proposes inputs for each product with the Backward &
//!    Forward method and emits a ranked [`LinkSet`].
//! 4. [`icio`] turns inter-country input-output tables into a sector-level
//!    specialization table and binary trade-intensity labels, which
//!    [`tuning`] uses to grid-search the four RCA thresholds.
//! 5. [`allocation`] splits observed region/country flows across
//!    region-to-region, product-to-product pairs.
//! 6. [`bench`] provides random baselines, hit-rate metrics and synthetic
//!    worlds with planted links.

pub mod allocation;
pub mod bench;
pub mod error;
pub mod icio;
pub mod inference;
pub mod ingest;
pub mod links;
pub mod specialization;
pub mod tuning;

pub use error::{Error, Result};
pub use inference::{
    backward_candidates, backward_forward, forward_candidates, infer_all, MissingRank, ParamSet,
};
pub use ingest::{CleaningPolicy, ColumnMapping, FloorRule, TradeRecord, TradeTable};
pub use links::{Link, LinkSet};
pub use specialization::{Direction, SpecializationTable};
