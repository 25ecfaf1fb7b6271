//! Self-stabilizing linearization with supervisor advice. Nodes run a cheap
//! base algorithm and accept a fast path from the supervisor only after
//! verifying it locally, so a malicious supervisor cannot break
//! connectivity or inject foreign identifiers.

pub mod baseline;
pub mod engine;
pub mod experiment;
pub mod model;
pub mod par;
pub mod protocol;
pub mod supervisor;
pub mod ttp;

pub use model::{Configuration, Message, NodeId, NodeState};
