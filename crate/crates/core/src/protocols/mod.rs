//! Non-overlay protocols: eventual leader election and the one-shot query.

pub mod leader;
pub mod query;
