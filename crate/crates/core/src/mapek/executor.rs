use super::planner::{Action, Plan};
use super::MapekError;
use crate::emulator::{EmulatorError, EncodedNet, ExecutorPolicy};

pub fn apply(
    action: &Action,
    e: &EncodedNet,
    policy: ExecutorPolicy,
) -> Result<EncodedNet, EmulatorError> {
    match action {
        Action::SetTokens { place, tokens } => e.set_tokens(place, tokens.clone()),
        Action::AddToken { place, token } => e.add_token(place, token.clone()),
        Action::RemoveToken { place, token } => e.remove_token(place, token),
        Action::SetArcAnnotation {
            place,
            transition,
            direction,
            annotation,
        } => e.set_arc_annotation(place, transition, *direction, annotation.clone()),
        Action::AddPlace { decl } => e.add_place(decl.clone(), policy),
        Action::RemovePlace { place } => e.remove_place(place, policy),
    }
}

/// Apply every action in order. On failure the input encoding is the
/// result: nothing partial escapes.
pub fn execute(
    plan: &Plan,
    e: &EncodedNet,
    policy: ExecutorPolicy,
) -> Result<EncodedNet, MapekError> {
    let mut cur = e.clone();
    for (i, a) in plan.actions.iter().enumerate() {
        cur = apply(a, &cur, policy).map_err(|source| MapekError::Action {
            plan: plan.id.clone(),
            index: i,
            source,
        })?;
    }
    Ok(cur)
}
