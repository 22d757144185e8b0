//! Texts addressed by CTS URNs and the standoff annotations that point into them.

pub mod annotations;
pub mod persist;
pub mod store;
pub mod tei;
pub mod text;
pub mod urn;

pub use store::{Catalog, StoreError};
pub use urn::{parse_cite2_urn, parse_cts_urn, Cite2Urn, CtsUrn};
