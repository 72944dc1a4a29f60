//! Exact-arithmetic envy-free cake cutting with free disposal.
//!
//! The cake is `[0, 1]`; every agent holds a piecewise-constant rational
//! density. All algorithms answer with exact rationals.

pub mod allocation;
pub mod connected;
pub mod entirecake;
pub mod error;
pub mod lnbound;
pub mod measure;
pub mod prefgraph;
pub mod proofsearch;
pub mod queries;
pub mod reductions;
pub mod table;

pub use measure::{AgentId, Interval, MeasureError, Piece, PieceId, Rat, ValueMeasure};
