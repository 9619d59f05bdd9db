//! MDS array codes with two parity nodes and two-symbol columns,
//! built for repair efficiency.
//!
//! The crate provides:
//!
//! - exact finite-field arithmetic for GF(p) and GF(2^m) up to 2^16
//!   ([`gf`]) and small dense matrices over them ([`linalg`]);
//! - the (k+2, k, 2) array-code abstraction with encode, verification
//!   and 2-erasure decoding ([`code`]);
//! - two explicit code families: C1 minimizes repair bandwidth, C2
//!   minimizes repair I/O ([`constructions`]);
//! - repair driven by arbitrary 2x4 repair matrices, with exact
//!   bandwidth/I-O/degree accounting ([`repair`]);
//! - an exhaustive oracle that computes true per-node repair minima by
//!   scanning all repair-matrix row spaces over small fields and checks
//!   them against the 5k/4 and (4k+1)/3 lower bounds ([`oracle`]);
//! - a shard-file store and a CLI wrapping all of the above ([`store`],
//!   [`cli`]).

pub mod cli;
pub mod code;
pub mod constructions;
pub mod gf;
pub mod linalg;
pub mod oracle;
pub mod repair;
pub mod store;

pub use code::{CodeSpec, ConstructionId, Stripe};
pub use constructions::{build_c1, build_c2, GroupPartition};
pub use gf::{Field, FieldElem, FieldSpec};
pub use linalg::Mat;
pub use oracle::{bounds_report, node_optima, BoundsReport};
pub use repair::{plan_repair, RepairPlan, RepairStats};
