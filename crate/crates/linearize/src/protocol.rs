//! Node-side state machine: flyover checks and construction, metadata and
//! certificate verification, advice reception and the distributed
//! Tree-to-Path, with the base algorithm running underneath.

use std::collections::BTreeSet;

use crate::baseline;
use crate::model::{AdviceMessage, FlyoverVars, Message, NodeId, NodeState, VerifiedKind};

/// Protocol variants. `TrustAdvicePar` is a deliberately broken node that
/// stores the advised parent without checking it; it exists as a negative
/// control for provenance tracking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Variant {
    #[default]
    Standard,
    TrustAdvicePar,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundOutput {
    pub outbound: Vec<(NodeId, Message)>,
    pub to_supervisor: Option<Message>,
    pub flushed: BTreeSet<NodeId>,
    /// RejectFlyover executed this round.
    pub rejected: bool,
}

struct Ctx {
    me: NodeId,
    out: RoundOutput,
}

impl Ctx {
    fn send(&mut self, to: NodeId, msg: Message) {
        if to != self.me || matches!(msg, Message::Intro(_) | Message::Verified { .. }) {
            self.out.outbound.push((to, msg));
        }
    }

    fn flush(&mut self, st: &mut NodeState, ids: impl IntoIterator<Item = NodeId>) {
        let ids: Vec<NodeId> = ids.into_iter().filter(|&v| v != self.me).collect();
        self.out.flushed.extend(ids.iter().copied());
        baseline::flush(self.me, &mut st.base_mem, ids);
    }

    fn rej_fly(&mut self, st: &mut NodeState, ids: impl IntoIterator<Item = NodeId>) {
        let ids: Vec<NodeId> = ids.into_iter().filter(|&v| v != self.me).collect();
        for &v in &ids {
            self.send(v, Message::RejFlyover);
        }
        self.flush(st, ids);
    }
}

fn pow2(level: usize) -> i64 {
    1i64.checked_shl(level.saturating_sub(1) as u32).filter(|&p| p > 0).unwrap_or(i64::MAX)
}

/// Shortcut closest to virtual id `val`, or `None` when no step is possible.
pub fn next_stop(fly: &FlyoverVars, val: i64) -> Option<NodeId> {
    if val < 1 || val == fly.vid || fly.s_empty() || fly.vid < 1 {
        return None;
    }
    let (side, sign) = if val > fly.vid { (&fly.right, 1i64) } else { (&fly.left, -1i64) };
    side.iter()
        .enumerate()
        .min_by_key(|&(i, _)| {
            let target = fly.vid.saturating_add(sign.saturating_mul(pow2(i + 1)));
            (target.abs_diff(val), i)
        })
        .map(|(_, &v)| v)
}

/// prop-flyID: the node vouches for its flyover id. Requires S ≠ ∅ so the
/// root does not announce itself before the path exists.
fn prop_fly_id(me: NodeId, fly: &FlyoverVars) -> bool {
    !fly.s_empty() && (fly.vid == 1 || (fly.vid > 1 && fly.fly_id != me))
}

/// Local consistency tests of Init. Sets `exit` when any guard fires.
pub fn basic_checks(me: NodeId, fly: &mut FlyoverVars, rej_in_channel: bool) {
    let s_empty = fly.s_empty();
    let l_empty = fly.left.is_empty();
    let r_empty = fly.right.is_empty();
    let c_min = fly.c_ids.first().copied();
    let c_max = fly.c_ids.last().copied();
    let fires = rej_in_channel
        || (s_empty && (!fly.c_ids.is_empty() || fly.fly_id != me))
        || (!l_empty && fly.vid <= 1)
        || (l_empty && !r_empty && (fly.vid != 1 || fly.fly_id != me))
        || (fly.vid == 1 && fly.c_dist != 0)
        || (fly.vid > 1 && fly.c_dist <= 0)
        || (!s_empty && fly.vid > 1 && next_stop(fly, fly.c_par).is_none())
        || fly.c_ids.len() > 2
        || (fly.c_ids.len() == 2 && (Some(me) > c_max || Some(me) < c_min));
    if fires {
        fly.exit = true;
    }
}

fn reject_flyover(st: &mut NodeState, ctx: &mut Ctx) {
    if !st.fly.exit {
        return;
    }
    let mut ids = st.fly.shortcut_ids();
    ids.insert(st.fly.fly_id);
    ids.extend(st.fly.c_ids.iter().copied());
    ctx.rej_fly(st, ids);
    st.fly.reset(ctx.me);
    ctx.out.rejected = true;
}

fn r_flyover_construction(st: &mut NodeState, inbox: &[Message], ctx: &mut Ctx) {
    for m in inbox {
        match *m {
            Message::TestLineR { sender } | Message::TestLineL { sender } => {
                let near = if matches!(m, Message::TestLineR { .. }) { st.fly.s_l(1) } else { st.fly.s_r(1) };
                if near != Some(sender) {
                    st.fly.exit = true;
                }
                if st.fly.s_empty() || st.fly.exit {
                    ctx.rej_fly(st, [sender]);
                }
            }
            Message::FlyConstR { w, level, sender } | Message::FlyConstL { w, level, sender } => {
                let i = level as usize;
                let is_r = matches!(m, Message::FlyConstR { .. });
                let side = if is_r { &st.fly.left } else { &st.fly.right };
                let len = side.len();
                let at = |lvl: usize| lvl.checked_sub(1).and_then(|x| side.get(x).copied());
                if len == 0 || (len >= i && at(i) != Some(sender)) {
                    st.fly.exit = true;
                }
                if len > i && at(i + 1) != Some(w) {
                    st.fly.exit = true;
                }
                let append = !st.fly.exit && len == i && at(i) == Some(sender);
                if !st.fly.exit && 1 < len && len < i {
                    ctx.flush(st, [sender, w]);
                }
                if append {
                    if is_r {
                        st.fly.left.push(w);
                    } else {
                        st.fly.right.push(w);
                    }
                }
                if st.fly.s_empty() || st.fly.exit {
                    ctx.rej_fly(st, [sender, w]);
                }
            }
            _ => {}
        }
    }
}

fn r_conn_cert(st: &mut NodeState, inbox: &[Message], ctx: &mut Ctx) {
    for m in inbox {
        match *m {
            Message::TestCert { origin, target_vid, dist } => {
                let prop = prop_fly_id(ctx.me, &st.fly);
                let here = st.fly.vid == target_vid;
                let hop = next_stop(&st.fly, target_vid);
                if (here && dist - 1 != st.fly.c_dist) || (!here && hop.is_none()) {
                    st.fly.exit = true;
                }
                if st.fly.s_empty() || st.fly.exit {
                    ctx.rej_fly(st, [origin]);
                } else if here {
                    if origin != ctx.me {
                        st.fly.c_ids.insert(origin);
                        ctx.send(origin, Message::IntroCert(ctx.me));
                    }
                } else if prop {
                    ctx.send(hop.expect("checked above"), Message::TestCert { origin, target_vid, dist });
                } else {
                    ctx.flush(st, [origin]);
                }
            }
            Message::IntroCert(w) if w != ctx.me => {
                st.fly.c_ids.insert(w);
            }
            _ => {}
        }
    }
}

fn r_flyover_metadata(st: &mut NodeState, inbox: &[Message], ctx: &mut Ctx) {
    for m in inbox {
        match *m {
            Message::TestVid(x) => {
                if st.fly.s_empty() || st.fly.vid != x {
                    st.fly.exit = true;
                }
            }
            Message::TestFlyId(f) => {
                if !st.fly.left.is_empty() && !st.fly.exit && st.fly.fly_id == ctx.me {
                    if let Some(f) = f {
                        st.fly.fly_id = f;
                    }
                }
                let s_empty = st.fly.s_empty();
                if (!s_empty && Some(st.fly.fly_id) != f) || (s_empty && f.is_some()) {
                    st.fly.exit = true;
                }
                if st.fly.exit {
                    ctx.rej_fly(st, f);
                }
            }
            _ => {}
        }
    }
}

fn flyover_construction(st: &NodeState, ctx: &mut Ctx) {
    let fly = &st.fly;
    if let Some(r) = fly.s_r(1) {
        ctx.send(r, Message::TestLineR { sender: ctx.me });
    }
    if let Some(l) = fly.s_l(1) {
        ctx.send(l, Message::TestLineL { sender: ctx.me });
    }
    for i in 0..fly.left.len().min(fly.right.len()) {
        let level = (i + 1) as u32;
        ctx.send(fly.right[i], Message::FlyConstR { w: fly.left[i], level, sender: ctx.me });
        ctx.send(fly.left[i], Message::FlyConstL { w: fly.right[i], level, sender: ctx.me });
    }
}

fn conn_cert(st: &NodeState, ctx: &mut Ctx) {
    let fly = &st.fly;
    if fly.vid > 1 && fly.fly_id != ctx.me {
        if let Some(hop) = next_stop(fly, fly.c_par) {
            ctx.send(hop, Message::TestCert { origin: ctx.me, target_vid: fly.c_par, dist: fly.c_dist });
        }
    }
}

fn memory_ids(st: &NodeState) -> BTreeSet<NodeId> {
    let mut ids = st.explicit_ids();
    ids.remove(&st.id);
    ids
}

fn flyover_metadata(st: &NodeState, channel_ids: &BTreeSet<NodeId>, ctx: &mut Ctx) {
    let fly = &st.fly;
    for (i, &r) in fly.right.iter().enumerate() {
        ctx.send(r, Message::TestVid(fly.vid.saturating_add(pow2(i + 1))));
    }
    for (i, &l) in fly.left.iter().enumerate() {
        ctx.send(l, Message::TestVid(fly.vid.saturating_sub(pow2(i + 1))));
    }
    if fly.s_empty() && fly.vid == 0 {
        let mut targets = memory_ids(st);
        targets.extend(channel_ids.iter().copied());
        targets.remove(&ctx.me);
        for v in targets {
            ctx.send(v, Message::TestFlyId(None));
        }
    }
    if prop_fly_id(ctx.me, fly) {
        for v in memory_ids(st) {
            if v != fly.fly_id {
                ctx.send(v, Message::TestFlyId(Some(fly.fly_id)));
            }
        }
    }
}

fn basic_checks2(st: &mut NodeState) {
    st.adv.t = st.adv.t.clamp(0, 5);
    if st.adv.t > 0 {
        st.adv.t -= 1;
    }
    if st.adv.t == 0 && (st.fly.s_empty() || st.fly.exit) {
        st.fly.vid = 0;
    }
}

fn snapshot_req(st: &mut NodeState, inbox: &[Message], ctx: &mut Ctx) {
    if !st.is_attentive() || !inbox.contains(&Message::RequestSnapshot) {
        return;
    }
    st.adv.t = 5;
    let snap = st.base_mem.clone();
    for &v in &snap {
        ctx.send(v, Message::Intro(ctx.me));
        ctx.send(ctx.me, Message::Intro(v));
    }
    ctx.out.to_supervisor = Some(Message::Neighborhood { sender: ctx.me, ids: snap });
}

/// S = ∅ ∧ exit = 0 ∧ t ≥ min_t.
fn pipeline_open(st: &NodeState, min_t: i64) -> bool {
    st.fly.s_empty() && !st.fly.exit && st.adv.t >= min_t
}

fn get_advice(st: &mut NodeState, inbox: &[Message], variant: Variant, ctx: &mut Ctx) {
    let busy = !pipeline_open(st, 2);
    let snap: BTreeSet<NodeId> = inbox
        .iter()
        .filter_map(|m| match m {
            Message::Intro(v) => Some(*v),
            _ => None,
        })
        .collect();
    let advice: Option<&AdviceMessage> = inbox.iter().find_map(|m| match m {
        Message::Advice(a) => Some(a),
        _ => None,
    });
    if variant == Variant::TrustAdvicePar {
        if let Some(par) = advice.and_then(|a| a.par) {
            baseline::flush(ctx.me, &mut st.base_mem, [par]);
        }
    }
    if let Some(a) = advice {
        let par_known = a.par.is_none_or(|p| snap.contains(&p));
        if !busy && st.adv.t == 4 && a.is_well_formed() && par_known {
            st.fly.vid = a.vid;
            st.fly.c_par = a.c_par.unwrap_or(0);
            st.fly.c_dist = a.c_dist;
            st.adv.dist = a.dist;
            if let Some(p) = a.par {
                ctx.send(p, Message::TestAdvice { dist: a.dist, sender: ctx.me });
            }
        }
    }
    ctx.flush(st, snap);
}

fn certify_tree(st: &mut NodeState, inbox: &[Message], ctx: &mut Ctx) {
    let mut ignore = !pipeline_open(st, 2);
    let mut children = BTreeSet::new();
    for m in inbox {
        if let Message::TestAdvice { dist, sender } = *m {
            children.insert(sender);
            if st.adv.dist != dist - 1 {
                ignore = true;
            }
        }
    }
    children.remove(&ctx.me);
    if !ignore && !children.is_empty() {
        setup_local_transform(&children, ctx);
    }
    ctx.flush(st, children);
}

fn setup_local_transform(children: &BTreeSet<NodeId>, ctx: &mut Ctx) {
    let sorted: Vec<NodeId> = children.iter().copied().collect();
    for (j, &c) in sorted.iter().enumerate() {
        ctx.send(c, Message::Verified { kind: VerifiedKind::Parent, id: ctx.me });
        if j > 0 {
            ctx.send(sorted[j - 1], Message::Verified { kind: VerifiedKind::SibPlus, id: c });
        }
        if j + 1 < sorted.len() {
            ctx.send(sorted[j + 1], Message::Verified { kind: VerifiedKind::SibMinus, id: c });
        }
        ctx.send(ctx.me, Message::Verified { kind: VerifiedKind::Child, id: c });
    }
}

fn local_transform(st: &mut NodeState, inbox: &[Message], ctx: &mut Ctx) {
    let mut ignore = !pipeline_open(st, 2);
    let mut children = BTreeSet::new();
    let (mut parent, mut r_sib, mut l_sib) = (None, None, None);
    for m in inbox {
        let Message::Verified { kind, id } = *m else { continue };
        match kind {
            VerifiedKind::Parent if parent.is_some() => ignore = true,
            VerifiedKind::SibMinus if l_sib.is_some() => ignore = true,
            VerifiedKind::SibPlus if r_sib.is_some() => ignore = true,
            _ => {}
        }
        if !ignore {
            match kind {
                VerifiedKind::Parent => parent = Some(id),
                VerifiedKind::SibMinus => l_sib = Some(id),
                VerifiedKind::SibPlus => r_sib = Some(id),
                VerifiedKind::Child => {}
            }
        }
        if kind == VerifiedKind::Child || ignore {
            children.insert(id);
        }
    }
    children.remove(&ctx.me);
    let dist = st.adv.dist;
    if (parent.is_none() && dist != 0) || (parent.is_some() && dist < 1) {
        ignore = true;
    }
    if let (false, Some(p)) = (ignore, parent) {
        execute_transform(dist, p, r_sib, l_sib, &children, ctx);
    }
    ctx.flush(st, parent.into_iter().chain(r_sib).chain(l_sib).chain(children));
}

/// Emits the Path± pair realising this node's Tree-to-Path edge (a, b):
/// b becomes a's right neighbour.
fn execute_transform(
    dist: i64,
    parent: NodeId,
    r_sib: Option<NodeId>,
    l_sib: Option<NodeId>,
    children: &BTreeSet<NodeId>,
    ctx: &mut Ctx,
) {
    let me = ctx.me;
    let (a, b) = if dist % 2 == 1 {
        match (r_sib, children.last()) {
            (None, None) => (parent, me),
            (None, Some(&max_c)) => (parent, max_c),
            (Some(r), None) => (r, me),
            (Some(r), Some(&max_c)) => (r, max_c),
        }
    } else {
        match (l_sib, children.first()) {
            (None, None) => (me, parent),
            (None, Some(&min_c)) => (min_c, parent),
            (Some(l), None) => (me, l),
            (Some(l), Some(&min_c)) => (min_c, l),
        }
    };
    ctx.out.outbound.push((a, Message::PathPlus(b)));
    ctx.out.outbound.push((b, Message::PathMinus(a)));
}

fn join_path(st: &mut NodeState, inbox: &[Message], ctx: &mut Ctx) {
    let mut ignore = !pipeline_open(st, 1);
    let (mut fly_l, mut fly_r) = (None, None);
    for m in inbox {
        let (v, plus) = match *m {
            Message::PathPlus(v) => (v, true),
            Message::PathMinus(v) => (v, false),
            _ => continue,
        };
        if v == ctx.me
            || (!plus && (st.fly.vid == 1 || fly_l.is_some()))
            || (plus && fly_r.is_some())
        {
            ignore = true;
        }
        if !ignore {
            if plus {
                fly_r = Some(v);
            } else {
                fly_l = Some(v);
            }
        }
        if ignore {
            ctx.flush(st, [v]);
        }
    }
    if !ignore {
        st.fly.left = fly_l.into_iter().collect();
        st.fly.right = fly_r.into_iter().collect();
    }
    ctx.flush(st, fly_l.into_iter().chain(fly_r));
}

fn strip_self(st: &mut NodeState) {
    let me = st.id;
    st.base_mem.remove(&me);
    st.fly.c_ids.remove(&me);
    st.fly.left.retain(|&v| v != me);
    st.fly.right.retain(|&v| v != me);
}

/// One synchronous round of a node. `state.channel` holds the messages
/// delivered this round; it is empty in the returned state.
pub fn node_round(state: &NodeState, variant: Variant) -> (NodeState, RoundOutput) {
    let mut st = state.clone();
    let mut inbox = std::mem::take(&mut st.channel);
    inbox.sort();
    strip_self(&mut st);
    let mut ctx = Ctx { me: st.id, out: RoundOutput::default() };
    let channel_ids: BTreeSet<NodeId> = inbox
        .iter()
        .filter(|m| !m.from_supervisor())
        .flat_map(Message::ids)
        .filter(|&v| v != st.id)
        .collect();

    basic_checks(st.id, &mut st.fly, inbox.contains(&Message::RejFlyover));
    reject_flyover(&mut st, &mut ctx);

    r_flyover_construction(&mut st, &inbox, &mut ctx);
    r_conn_cert(&mut st, &inbox, &mut ctx);
    r_flyover_metadata(&mut st, &inbox, &mut ctx);
    flyover_construction(&st, &mut ctx);
    conn_cert(&st, &mut ctx);
    flyover_metadata(&st, &channel_ids, &mut ctx);

    basic_checks2(&mut st);
    snapshot_req(&mut st, &inbox, &mut ctx);
    get_advice(&mut st, &inbox, variant, &mut ctx);
    certify_tree(&mut st, &inbox, &mut ctx);
    local_transform(&mut st, &inbox, &mut ctx);
    join_path(&mut st, &inbox, &mut ctx);

    transfer_advised_neighbors(&mut st);
    let base_sends = baseline::base_step(st.id, &mut st.base_mem, &inbox);
    ctx.out.outbound.extend(base_sends);
    (st, ctx.out)
}

/// Copies c_ids into base memory ahead of the base step.
pub fn transfer_advised_neighbors(st: &mut NodeState) {
    let me = st.id;
    let ids: Vec<NodeId> = st.fly.c_ids.iter().copied().collect();
    baseline::flush(me, &mut st.base_mem, ids);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(v: u32) -> NodeId {
        NodeId(v)
    }

    fn fly_with(me: u32, vid: i64, left: &[u32], right: &[u32]) -> FlyoverVars {
        let mut f = FlyoverVars::new(id(me));
        f.vid = vid;
        f.left = left.iter().map(|&v| id(v)).collect();
        f.right = right.iter().map(|&v| id(v)).collect();
        f
    }

    #[test]
    fn next_stop_picks_closest_level() {
        let f = fly_with(40, 4, &[30], &[50, 60, 80]);
        assert_eq!(next_stop(&f, 8), Some(id(80)));
        assert_eq!(next_stop(&f, 5), Some(id(50)));
        assert_eq!(next_stop(&f, 3), Some(id(30)));
        assert_eq!(next_stop(&f, 4), None);
        assert_eq!(next_stop(&f, 0), None);
        assert_eq!(next_stop(&FlyoverVars::new(id(1)), 3), None);
    }

    #[test]
    fn next_stop_ties_go_to_lower_level() {
        // vID 1, targets 2, 3, 5; val 4 is 1 away from both 3 and 5.
        let f = fly_with(1, 1, &[], &[2, 3, 5]);
        assert_eq!(next_stop(&f, 4), Some(id(3)));
    }

    #[test]
    fn next_stop_needs_the_side() {
        let f = fly_with(9, 3, &[8], &[]);
        assert_eq!(next_stop(&f, 7), None);
        assert_eq!(next_stop(&f, 1), Some(id(8)));
    }

    #[test]
    fn leftmost_node_passes_checks() {
        let mut f = fly_with(1, 1, &[], &[2]);
        f.c_dist = 0;
        basic_checks(id(1), &mut f, false);
        assert!(!f.exit);
    }

    #[test]
    fn c_dist_zero_off_root_exits() {
        let mut f = fly_with(3, 3, &[2], &[4]);
        f.c_dist = 0;
        f.c_par = 2;
        basic_checks(id(3), &mut f, false);
        assert!(f.exit);
    }

    #[test]
    fn unsorted_certificate_ids_exit() {
        let mut f = fly_with(5, 2, &[1], &[]);
        f.c_dist = 1;
        f.c_par = 1;
        f.c_ids = [id(2), id(3)].into();
        basic_checks(id(5), &mut f, false);
        assert!(f.exit);
    }

    #[test]
    fn certificate_without_flyover_exits() {
        let mut st = NodeState::new(id(1));
        st.fly.c_ids.insert(id(2));
        let (after, out) = node_round(&st, Variant::Standard);
        assert!(out.rejected);
        assert!(after.fly.c_ids.is_empty());
        assert!(out.outbound.contains(&(id(2), Message::RejFlyover)));
    }

    #[test]
    fn default_node_is_quiet() {
        let st = NodeState::new(id(1));
        let (after, out) = node_round(&st, Variant::Standard);
        assert_eq!(after, st);
        assert!(out.outbound.is_empty());
        assert!(out.to_supervisor.is_none());
    }

    #[test]
    fn exit_resets_and_informs_flyover() {
        let mut st = NodeState::new(id(5));
        st.fly = fly_with(5, 2, &[3], &[7, 9]);
        st.fly.fly_id = id(3);
        st.fly.c_ids = [id(4), id(6)].into();
        st.fly.exit = true;
        let (after, out) = node_round(&st, Variant::Standard);
        assert!(out.rejected);
        assert_eq!(after.fly, FlyoverVars::new(id(5)));
        for v in [3, 4, 6, 7, 9] {
            assert!(out.outbound.contains(&(id(v), Message::RejFlyover)), "no RejFlyover to {v}");
            assert!(out.flushed.contains(&id(v)));
        }
    }

    #[test]
    fn test_line_to_idle_node_bounces() {
        let mut st = NodeState::new(id(2));
        st.channel = vec![Message::TestLineR { sender: id(1) }];
        let (after, out) = node_round(&st, Variant::Standard);
        assert!(out.outbound.contains(&(id(1), Message::RejFlyover)));
        assert!(out.flushed.contains(&id(1)));
        assert!(after.fly.exit);
    }

    #[test]
    fn fly_const_mismatch_exits() {
        let mut st = NodeState::new(id(5));
        st.fly = fly_with(5, 5, &[4, 8], &[6]);
        st.fly.c_dist = 1;
        st.fly.c_par = 4;
        st.channel = vec![Message::FlyConstR { w: id(1), level: 2, sender: id(2) }];
        let (after, _) = node_round(&st, Variant::Standard);
        assert!(after.fly.exit);
    }

    #[test]
    fn fly_const_appends_next_level() {
        let mut st = NodeState::new(id(3));
        st.fly = fly_with(3, 3, &[2], &[4]);
        st.fly.c_dist = 1;
        st.fly.c_par = 2;
        st.channel = vec![Message::FlyConstR { w: id(1), level: 1, sender: id(2) }];
        let (after, _) = node_round(&st, Variant::Standard);
        assert!(!after.fly.exit);
        assert_eq!(after.fly.left, vec![id(2), id(1)]);
    }

    #[test]
    fn attentive_node_rejects_flyover_id() {
        let mut st = NodeState::new(id(2));
        st.channel = vec![Message::TestFlyId(Some(id(1)))];
        let (after, out) = node_round(&st, Variant::Standard);
        assert!(after.fly.exit);
        assert!(out.outbound.contains(&(id(1), Message::RejFlyover)));
    }

    #[test]
    fn vid_mismatch_exits() {
        let mut st = NodeState::new(id(5));
        st.fly = fly_with(5, 5, &[4], &[]);
        st.fly.c_dist = 1;
        st.fly.c_par = 4;
        st.channel = vec![Message::TestVid(4)];
        let (after, _) = node_round(&st, Variant::Standard);
        assert!(after.fly.exit);
    }

    #[test]
    fn idle_node_broadcasts_bottom() {
        let mut st = NodeState::new(id(2));
        st.base_mem.insert(id(3));
        st.channel = vec![Message::Intro(id(7))];
        let (_, out) = node_round(&st, Variant::Standard);
        assert!(out.outbound.contains(&(id(3), Message::TestFlyId(None))));
        assert!(out.outbound.contains(&(id(7), Message::TestFlyId(None))));
    }

    #[test]
    fn snapshot_request_sets_timer_and_reports() {
        let mut st = NodeState::new(id(2));
        st.base_mem = [id(1), id(3)].into();
        st.channel = vec![Message::RequestSnapshot];
        let (after, out) = node_round(&st, Variant::Standard);
        assert_eq!(after.adv.t, 5);
        assert!(out.outbound.contains(&(id(1), Message::Intro(id(2)))));
        assert!(out.outbound.contains(&(id(2), Message::Intro(id(3)))));
        assert_eq!(out.to_supervisor, Some(Message::Neighborhood { sender: id(2), ids: [id(1), id(3)].into() }));
    }

    #[test]
    fn advice_with_unknown_parent_is_ignored() {
        let mut st = NodeState::new(id(2));
        st.adv.t = 5;
        st.channel = vec![
            Message::Intro(id(1)),
            Message::Advice(AdviceMessage { vid: 2, c_par: Some(1), c_dist: 1, par: Some(id(99)), dist: 1 }),
        ];
        let (after, out) = node_round(&st, Variant::Standard);
        assert_eq!(after.fly.vid, 0);
        assert!(!after.base_mem.contains(&id(99)));
        assert!(out.outbound.iter().all(|(to, _)| *to != id(99)));
        assert!(after.base_mem.contains(&id(1)));
    }

    #[test]
    fn trusting_variant_stores_parent() {
        let mut st = NodeState::new(id(2));
        st.channel = vec![Message::Advice(AdviceMessage {
            vid: 2,
            c_par: Some(1),
            c_dist: 1,
            par: Some(id(99)),
            dist: 1,
        })];
        let (after, _) = node_round(&st, Variant::TrustAdvicePar);
        assert!(after.base_mem.contains(&id(99)));
    }

    #[test]
    fn root_ignores_parent_verification() {
        let mut st = NodeState::new(id(1));
        st.adv = crate::model::AdviceVars { t: 3, dist: 0 };
        st.channel = vec![Message::Verified { kind: VerifiedKind::Parent, id: id(5) }];
        let (after, out) = node_round(&st, Variant::Standard);
        assert!(out.outbound.iter().all(|(_, m)| !matches!(m, Message::PathPlus(_) | Message::PathMinus(_))));
        assert!(after.fly.s_empty());
    }

    #[test]
    fn cert_match_adds_origin_and_replies() {
        let mut st = NodeState::new(id(1));
        st.fly = fly_with(1, 1, &[], &[3]);
        st.fly.c_dist = 0;
        st.channel = vec![Message::TestCert { origin: id(2), target_vid: 1, dist: 1 }];
        let (after, out) = node_round(&st, Variant::Standard);
        assert!(after.fly.c_ids.contains(&id(2)));
        assert!(out.outbound.contains(&(id(2), Message::IntroCert(id(1)))));
    }

    #[test]
    fn cert_distance_mismatch_rejects_origin() {
        let mut st = NodeState::new(id(1));
        st.fly = fly_with(1, 1, &[], &[3]);
        st.fly.c_dist = 0;
        st.channel = vec![Message::TestCert { origin: id(2), target_vid: 1, dist: 2 }];
        let (after, out) = node_round(&st, Variant::Standard);
        assert!(after.fly.exit);
        assert!(out.outbound.contains(&(id(2), Message::RejFlyover)));
    }

    #[test]
    fn transfer_copies_certificate_ids() {
        let mut st = NodeState::new(id(1));
        st.fly.c_ids.insert(id(2));
        transfer_advised_neighbors(&mut st);
        assert!(st.base_mem.contains(&id(2)));
        assert!(st.fly.c_ids.contains(&id(2)));
        let mut empty = NodeState::new(id(1));
        transfer_advised_neighbors(&mut empty);
        assert!(empty.base_mem.is_empty());
    }
}
