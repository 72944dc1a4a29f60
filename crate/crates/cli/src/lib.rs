//! Command-line front end: valuation files in, division reports and
//! proof texts out.

pub mod commands;
pub mod report;
pub mod valuation;
