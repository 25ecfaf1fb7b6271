//! Classic linearization as the background algorithm, with delegation done
//! through Delegate-after-Reversal.

use std::collections::BTreeSet;

use crate::model::{Message, NodeId};

/// Adds `ids` to the base memory, never the owner itself.
pub fn flush(me: NodeId, mem: &mut BTreeSet<NodeId>, ids: impl IntoIterator<Item = NodeId>) {
    mem.extend(ids.into_iter().filter(|&v| v != me));
}

/// Delegate each of `ids` to `dest` in the reversed form: every id receives
/// `Rev(dest)` and introduces itself to `dest` one round later.
pub fn dr_delegate(me: NodeId, ids: &[NodeId], dest: NodeId) -> Vec<(NodeId, Message)> {
    ids.iter()
        .filter(|&&w| w != dest && w != me && dest != me)
        .map(|&w| (w, Message::Rev { dest }))
        .collect()
}

/// One round of linearization. Base messages in `delivered` are handled
/// first: `BaseIntro(v)` merges v, `Rev(v)` makes this node introduce itself
/// to v. Then every non-extreme id on each side is delegated to its sorted
/// successor toward the owner, and the owner introduces itself to the two
/// ids it keeps.
pub fn base_step(me: NodeId, mem: &mut BTreeSet<NodeId>, delivered: &[Message]) -> Vec<(NodeId, Message)> {
    let mut sends = Vec::new();
    for m in delivered {
        match *m {
            Message::BaseIntro(v) => flush(me, mem, [v]),
            Message::Rev { dest } if dest != me => sends.push((dest, Message::BaseIntro(me))),
            _ => {}
        }
    }
    mem.remove(&me);

    let left: Vec<NodeId> = mem.range(..me).copied().collect();
    let right: Vec<NodeId> = mem.range(me..).copied().collect();
    for pair in left.windows(2) {
        sends.extend(dr_delegate(me, &pair[..1], pair[1]));
        mem.remove(&pair[0]);
    }
    for pair in right.windows(2) {
        sends.extend(dr_delegate(me, &pair[1..], pair[0]));
        mem.remove(&pair[1]);
    }
    if let Some(&l) = left.last() {
        sends.push((l, Message::BaseIntro(me)));
    }
    if let Some(&r) = right.first() {
        sends.push((r, Message::BaseIntro(me)));
    }
    sends
}
