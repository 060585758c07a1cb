//! Error types shared across the crate.

use thiserror::Error;

use crate::model::{CellRef, OwnerId, Vertex};

pub type Result<T> = std::result::Result<T, Error>;

/// Tags for the expansion steps, used as provenance on construction errors
/// and in the budget report.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, serde::Serialize, serde::Deserialize)]
pub enum Step {
    ChainEvenB1,
    ParityFixes,
    OddB1,
    SCells,
    C2,
    B2,
    C1,
    D1,
    D2,
}

impl std::fmt::Display for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Step::ChainEvenB1 => "even-B1 chains",
            Step::ParityFixes => "parity fixes",
            Step::OddB1 => "odd-B1",
            Step::SCells => "s-cells",
            Step::C2 => "C2",
            Step::B2 => "B2",
            Step::C1 => "C1",
            Step::D1 => "D1",
            Step::D2 => "D2",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid part sizes r={r} s={s} t={t} (need 1 <= r <= s <= t)")]
    BadParams { r: u32, s: u32, t: u32 },

    #[error("cell {cell} is outside the grid")]
    InvalidCell { cell: CellRef },

    #[error("cell {cell} already used by {prior}, claimed again by {claimant}")]
    CellConflict {
        cell: CellRef,
        prior: OwnerId,
        claimant: OwnerId,
    },

    #[error("edge endpoints {a} and {b} lie in the same part")]
    IntraPartEdge { a: Vertex, b: Vertex },

    #[error("cycle length {len} not allowed (must be 3 or 5)")]
    BadCycleLength { len: usize },

    #[error("vertex {v} repeated within a cycle")]
    RepeatedVertex { v: Vertex },

    #[error("instance rejected by the construction gate: {reasons:?}")]
    Unsupported { reasons: Vec<crate::conditions::Reason> },

    #[error("step {step}: {what} exhausted")]
    Exhausted { step: Step, what: String },

    #[error("step {step}: {detail}")]
    Construction { step: Step, detail: String },

    #[error("diagonal labeling stalled after {assigned} of {total} labels")]
    LabelingStalled { assigned: u32, total: u32 },

    #[error("no chain anchor: every diagonal pair has a label >= s-2")]
    NoChainAnchor,

    #[error("internal integrity failure: {0}")]
    Integrity(String),

    #[error("malformed trade: {0}")]
    MalformedTrade(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
