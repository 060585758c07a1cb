//! Decomposition engine for complete tripartite graphs: builds explicit
//! triangle-and-5-cycle decompositions of `K_{r,s,t}` for odd part sizes in
//! the supported domain, lifts them by 5-blowup to pure 5-cycle
//! decompositions of `K_{5r,5s,5t}`, and checks everything with an
//! independent verifier. Every output is a certificate that stands on its
//! own.

pub mod blowup;
pub mod certificate;
pub mod conditions;
pub mod error;
pub mod expansion;
pub mod model;
pub mod oracle;
pub mod placement;
pub mod trades;
pub mod verify;

pub use error::{Error, Result, Step};
pub use expansion::{compare_dual_cells, construct_decomposition, Construction, LabelMap};
pub use model::{CellRef, Cycle, Decomposition, DualCell, Edge, Params, Part, Region, Vertex};
pub use verify::{verify, VerifyOutcome};
