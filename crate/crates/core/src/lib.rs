//! Non-adaptive group testing with sparse-graph codes.
//!
//! Items are 1-based, right nodes 0-based. A [`PoolDesign`] ties a bipartite
//! pooling graph to per-item signature columns; [`measure`] ORs the columns of
//! the defective items at every right node and [`peel`] recovers them.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitvec;
pub mod channel;
pub mod density;
pub mod ecc;
pub mod error;
pub mod harness;
pub mod peeling;
pub mod pool_design;
pub mod prf;
pub mod signature;

pub use bitvec::BitVec;
pub use channel::{apply_noise, measure, read_dump, write_dump, MeasurementSet, SupportVector};
pub use density::{
    capacity_rate_bound, de_fixed_point, de_step, optimize_design, test_count, CountParams, DeDesign, TestCount,
    Variant,
};
pub use ecc::{BlockCode, EccSpec, Layout, ReedSolomon, RobustSignatureSpec};
pub use error::{Error, Result};
pub use peeling::{decode_singleton_only, peel, peel_with, DecodeResult, NodeDecoder, WorkOrder};
pub use pool_design::{DesignCode, DesignParams, GraphKind, PoolDesign};
pub use signature::{binary_repr, Sections, SignatureCode, SignatureSpec};
