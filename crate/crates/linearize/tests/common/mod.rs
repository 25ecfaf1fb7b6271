#![allow(dead_code)]

use std::collections::BTreeMap;

use linearize::model::{Configuration, NodeId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Ids 1..=k in a seeded order; position i holds the node with vID i+1.
pub fn shuffled_ids(k: usize, seed: u64) -> Vec<NodeId> {
    let mut ids: Vec<NodeId> = (1..=k as u32).map(NodeId).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids
}

/// Parent (toward `order[0]`) on the sorted path over `order`, and depth.
pub fn sorted_tree(order: &[NodeId]) -> BTreeMap<NodeId, (Option<NodeId>, i64)> {
    let mut sorted = order.to_vec();
    sorted.sort();
    let root = sorted.binary_search(&order[0]).unwrap();
    sorted
        .iter()
        .enumerate()
        .map(|(r, &v)| {
            let par = match r.cmp(&root) {
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(sorted[r - 1]),
                std::cmp::Ordering::Less => Some(sorted[r + 1]),
            };
            (v, (par, r.abs_diff(root) as i64))
        })
        .collect()
}

/// Level-1 backbone along `order` with vIDs 1..k, flyID = head and the
/// honest certificate fields. No shortcuts beyond level 1, empty c_ids.
pub fn seeded_backbone(order: &[NodeId]) -> Configuration {
    let mut c = Configuration::with_ids(order.iter().copied());
    let tree = sorted_tree(order);
    let vid: BTreeMap<NodeId, i64> = order.iter().enumerate().map(|(i, &v)| (v, i as i64 + 1)).collect();
    for (i, &v) in order.iter().enumerate() {
        let s = c.node_mut(v).unwrap();
        s.fly.vid = i as i64 + 1;
        s.fly.fly_id = order[0];
        if i > 0 {
            s.fly.left = vec![order[i - 1]];
        }
        if i + 1 < order.len() {
            s.fly.right = vec![order[i + 1]];
        }
        let (par, depth) = tree[&v];
        s.fly.c_dist = depth;
        s.fly.c_par = par.map_or(0, |p| vid[&p]);
    }
    c
}

/// Correctly configured flyover along `order`: all power-of-two shortcuts
/// and sorted-path certificate ids in place.
pub fn full_flyover(order: &[NodeId]) -> Configuration {
    let mut c = seeded_backbone(order);
    let k = order.len();
    let mut sorted = order.to_vec();
    sorted.sort();
    for (i, &v) in order.iter().enumerate() {
        let s = c.node_mut(v).unwrap();
        s.fly.left.clear();
        s.fly.right.clear();
        let mut step = 1;
        while i + step < k {
            s.fly.right.push(order[i + step]);
            step *= 2;
        }
        step = 1;
        while i >= step {
            s.fly.left.push(order[i - step]);
            step *= 2;
        }
        let r = sorted.binary_search(&v).unwrap();
        if r > 0 {
            s.fly.c_ids.insert(sorted[r - 1]);
        }
        if r + 1 < k {
            s.fly.c_ids.insert(sorted[r + 1]);
        }
    }
    c
}

/// Node state with seeded garbage in every register and channel, using ids
/// from 1..=pool (self excluded from address variables).
pub fn random_state(me: NodeId, pool: u32, seed: u64) -> linearize::model::NodeState {
    use linearize::model::{AdviceMessage, Message, NodeState, VerifiedKind};
    use rand::Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let other = |rng: &mut ChaCha8Rng| loop {
        let v = NodeId(rng.random_range(1..=pool));
        if v != me {
            break v;
        }
    };
    let mut s = NodeState::new(me);
    let n = pool as i64;
    for _ in 0..rng.random_range(0..4) {
        let v = other(&mut rng);
        s.base_mem.insert(v);
    }
    if rng.random_bool(0.6) {
        s.fly.left = (0..rng.random_range(0..3)).map(|_| other(&mut rng)).collect();
        s.fly.right = (0..rng.random_range(0..3)).map(|_| other(&mut rng)).collect();
        s.fly.vid = rng.random_range(-1..=n + 1);
        s.fly.c_par = rng.random_range(0..=n);
        s.fly.c_dist = rng.random_range(-1..=n);
        s.fly.exit = rng.random_bool(0.2);
        if rng.random_bool(0.5) {
            s.fly.fly_id = other(&mut rng);
        }
        s.fly.c_ids = (0..rng.random_range(0..3)).map(|_| other(&mut rng)).collect();
    }
    s.adv.t = rng.random_range(-1..=6);
    s.adv.dist = rng.random_range(-1..=n);
    let kinds = [VerifiedKind::Parent, VerifiedKind::SibPlus, VerifiedKind::SibMinus, VerifiedKind::Child];
    for _ in 0..rng.random_range(0..8) {
        let (a, b) = (other(&mut rng), other(&mut rng));
        let x = rng.random_range(-1..=n + 1);
        let m = match rng.random_range(0..19) {
            0 => Message::RejFlyover,
            1 => Message::TestLineR { sender: a },
            2 => Message::TestLineL { sender: a },
            3 => Message::FlyConstR { w: a, level: rng.random_range(1..4), sender: b },
            4 => Message::FlyConstL { w: a, level: rng.random_range(1..4), sender: b },
            5 => Message::TestVid(x),
            6 => Message::TestFlyId(rng.random_bool(0.7).then_some(a)),
            7 => Message::TestCert { origin: a, target_vid: x, dist: rng.random_range(-1..=n) },
            8 => Message::IntroCert(a),
            9 => Message::RequestSnapshot,
            10 => Message::Intro(a),
            11 => Message::Advice(AdviceMessage {
                vid: x,
                c_par: rng.random_bool(0.8).then_some(rng.random_range(1..=n)),
                c_dist: rng.random_range(0..=n),
                // Foreign ids beyond the pool stand in for fabricated parents.
                par: rng.random_bool(0.8).then(|| if rng.random_bool(0.5) { a } else { NodeId(pool + 7) }),
                dist: rng.random_range(0..=n),
            }),
            12 => Message::TestAdvice { dist: x, sender: a },
            13 => Message::Verified { kind: kinds[rng.random_range(0..4)], id: a },
            14 => Message::PathPlus(a),
            15 => Message::PathMinus(a),
            16 => Message::Rev { dest: a },
            17 => Message::BaseIntro(a),
            _ => Message::TestFlyId(None),
        };
        s.channel.push(m);
    }
    s
}
