//! Transient-fault injection for the initial configuration. Faults only
//! add ids, so the union graph stays weakly connected.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Configuration, Message, NodeId, VerifiedKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Corruption {
    #[default]
    None,
    GarbageFlyoverVars,
    StaleChannelMessages,
    All,
}

impl Corruption {
    pub const ALL: [Corruption; 4] =
        [Corruption::None, Corruption::GarbageFlyoverVars, Corruption::StaleChannelMessages, Corruption::All];

    fn garbage(self) -> bool {
        matches!(self, Corruption::GarbageFlyoverVars | Corruption::All)
    }

    fn stale(self) -> bool {
        matches!(self, Corruption::StaleChannelMessages | Corruption::All)
    }
}

impl fmt::Display for Corruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corruption::None => "none",
            Corruption::GarbageFlyoverVars => "garbage_flyover_vars",
            Corruption::StaleChannelMessages => "stale_channel_messages",
            Corruption::All => "all",
        })
    }
}

impl FromStr for Corruption {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.replace('-', "_").as_str() {
            "none" => Corruption::None,
            "garbage_flyover_vars" => Corruption::GarbageFlyoverVars,
            "stale_channel_messages" => Corruption::StaleChannelMessages,
            "all" => Corruption::All,
            _ => return Err(format!("unknown corruption `{s}`")),
        })
    }
}

fn pick_ids(rng: &mut ChaCha8Rng, pool: &[NodeId], max: usize) -> Vec<NodeId> {
    let k = rng.random_range(0..=max);
    (0..k).filter_map(|_| pool.choose(rng).copied()).collect()
}

fn random_message(rng: &mut ChaCha8Rng, pool: &[NodeId], n: i64) -> Message {
    let mut any = || *pool.choose(rng).expect("nonempty pool");
    let (a, b) = (any(), any());
    let level = rng.random_range(1..=4);
    let x = rng.random_range(-1..=n + 1);
    let kinds = [VerifiedKind::Parent, VerifiedKind::SibPlus, VerifiedKind::SibMinus, VerifiedKind::Child];
    match rng.random_range(0..15) {
        0 => Message::RejFlyover,
        1 => Message::TestLineR { sender: a },
        2 => Message::TestLineL { sender: a },
        3 => Message::FlyConstR { w: a, level, sender: b },
        4 => Message::FlyConstL { w: a, level, sender: b },
        5 => Message::TestVid(x),
        6 => Message::TestFlyId(Some(a)),
        7 => Message::TestCert { origin: a, target_vid: x, dist: rng.random_range(-1..=n) },
        8 => Message::IntroCert(a),
        9 => Message::Intro(a),
        10 => Message::TestAdvice { dist: x, sender: a },
        11 => Message::Verified { kind: *kinds.choose(rng).unwrap(), id: a },
        12 => Message::PathPlus(a),
        13 => Message::PathMinus(a),
        _ => Message::Rev { dest: a },
    }
}

/// Overwrites node variables and channels with seeded garbage. Supervisor
/// messages are never forged.
pub fn inject_faults(config: &Configuration, corruption: Corruption, rng: &mut ChaCha8Rng) -> Configuration {
    let mut out = config.clone();
    if corruption == Corruption::None || out.nodes.is_empty() {
        return out;
    }
    let all_ids = out.ids();
    let n = all_ids.len() as i64;
    let mut planted_fly_id = false;
    for s in out.nodes.iter_mut() {
        let mut pool: Vec<NodeId> = s.explicit_ids().into_iter().collect();
        pool.extend(pick_ids(rng, &all_ids, 2));
        pool.retain(|&v| v != s.id);
        if pool.is_empty() {
            pool.push(s.id);
        }
        if corruption.garbage() && rng.random_bool(0.5) {
            let f = &mut s.fly;
            f.left = pick_ids(rng, &pool, 3);
            f.right = pick_ids(rng, &pool, 3);
            f.vid = rng.random_range(-1..=n + 2);
            f.fly_id = *pool.choose(rng).unwrap();
            f.exit = rng.random_bool(0.2);
            f.c_par = rng.random_range(0..=n + 1);
            f.c_dist = rng.random_range(-1..=n);
            f.c_ids = pick_ids(rng, &pool, 3).into_iter().collect();
            s.adv.t = rng.random_range(-2..=8);
            s.adv.dist = rng.random_range(-1..=n);
        }
        if corruption.stale() && rng.random_bool(0.5) {
            let k = rng.random_range(1..=3);
            for _ in 0..k {
                let m = random_message(rng, &pool, n);
                planted_fly_id |= matches!(m, Message::TestFlyId(Some(_)));
                s.channel.push(m);
            }
        }
    }
    if corruption.stale() && !planted_fly_id {
        let i = rng.random_range(0..out.nodes.len());
        let target = *all_ids.choose(rng).unwrap();
        out.nodes[i].channel.push(Message::TestFlyId(Some(target)));
    }
    out
}
