//! Structured overlays: CAN and Pastry.

use crate::model::{apply_action, Action, Configuration, ModelError, ProtocolModel};

pub mod can;
pub mod pastry;

pub const SETTLE_LIMIT: usize = 100_000;

/// Runs `model` from `c` until no node has an enabled action, always firing
/// the first action of the lowest-id enabled node. Returns the actions and
/// the quiescent configuration.
pub fn settle(
    model: &dyn ProtocolModel,
    c: &Configuration,
    limit: usize,
) -> Result<(Vec<Action>, Configuration), ModelError> {
    let mut c = c.clone();
    let mut actions = Vec::new();
    loop {
        let next = c.active().find_map(|p| model.enabled(&c, p).into_iter().next());
        let Some(a) = next else { return Ok((actions, c)) };
        if actions.len() >= limit {
            return Err(ModelError::NoQuiescence(limit));
        }
        c = apply_action(&c, &a)?;
        actions.push(a);
    }
}

/// True when no node of `model` has an enabled action.
pub fn is_quiescent(model: &dyn ProtocolModel, c: &Configuration) -> bool {
    c.active().all(|p| model.enabled(c, p).is_empty())
}
