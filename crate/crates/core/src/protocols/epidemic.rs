//! Flooding baseline.

use super::{Action, ActionKind, Peer, Transition};

/// `true` once the node holds the message.
pub type EpidemicState = bool;

/// Any infected node copies the message to an uninfected peer.
pub fn epidemic_on_encounter(
    a: Peer<'_, EpidemicState>,
    b: Peer<'_, EpidemicState>,
    at: i64,
) -> Transition<EpidemicState> {
    let mut out = Transition {
        a: *a.state,
        b: *b.state,
        actions: Vec::new(),
    };
    let (from, to) = match (*a.state, *b.state) {
        (true, false) => {
            out.b = true;
            (a, b)
        }
        (false, true) => {
            out.a = true;
            (b, a)
        }
        _ => return out,
    };
    out.actions
        .push(Action::new(ActionKind::TransmitMessage, from.id, to.id, at));
    if to.intended_receiver {
        out.actions.push(Action::new(ActionKind::Deliver, from.id, to.id, at));
    }
    out
}
