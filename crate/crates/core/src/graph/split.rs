use std::collections::{BTreeMap, BTreeSet};

use super::{InteractionGraph, RawInteractions};
use crate::error::{Error, Result};
use crate::numerics::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

/// Sorted id list: numeric order when every id is an unsigned integer,
/// lexicographic otherwise.
fn ordered_ids(ids: BTreeSet<&str>) -> Vec<&str> {
    let mut ids: Vec<&str> = ids.into_iter().collect();
    if ids.iter().all(|s| s.parse::<u64>().is_ok()) {
        ids.sort_by_key(|s| s.parse::<u64>().unwrap());
    }
    ids
}

/// Per-user sizes `(train, val, test)` for a user with `degree` items.
pub(crate) fn split_sizes(degree: usize, ratios: SplitRatios) -> (usize, usize, usize) {
    let d = degree as f64;
    let train = ((ratios.train * d).ceil() as usize).min(degree);
    let rest = degree - train;
    let val = ((ratios.val * d).ceil() as usize).min(rest);
    let mut sizes = (train, val, rest - val);
    // At least one training item per user: take from test first, then val.
    if sizes.0 == 0 && degree > 0 {
        if sizes.2 > 0 {
            sizes.2 -= 1;
        } else {
            sizes.1 -= 1;
        }
        sizes.0 = 1;
    }
    sizes
}

/// Per-user random partition of each user's items into train/val/test.
///
/// Dense indices follow id order (see [`InteractionGraph`]); the shuffle of
/// every user's items is drawn from one stream seeded by `seed`, so the result
/// depends only on `(raw, ratios, seed)`.
pub fn split(raw: &RawInteractions, ratios: SplitRatios, seed: u64) -> Result<InteractionGraph> {
    if raw.is_empty() {
        return Err(Error::EmptyDataset("nothing to split".into()));
    }
    let sum = ratios.train + ratios.val + ratios.test;
    if ratios.train <= 0.0 || ratios.val < 0.0 || ratios.test < 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("invalid split ratios {ratios:?}")));
    }

    let user_ids = ordered_ids(raw.users());
    let item_ids = ordered_ids(raw.items());
    let user_index: BTreeMap<&str, u32> = user_ids
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i as u32))
        .collect();
    let item_index: BTreeMap<&str, u32> = item_ids
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i as u32))
        .collect();

    let mut per_user: Vec<Vec<u32>> = vec![Vec::new(); user_ids.len()];
    for (u, v) in raw.pairs() {
        per_user[user_index[u] as usize].push(item_index[v]);
    }

    let mut rng = Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(per_user.len());
    let mut val = Vec::with_capacity(per_user.len());
    let mut test = Vec::with_capacity(per_user.len());
    for mut items in per_user {
        items.sort_unstable();
        rng.shuffle(&mut items);
        let (nt, nv, _) = split_sizes(items.len(), ratios);
        let rest = items.split_off(nt);
        let (v, t) = rest.split_at(nv);
        train.push(items);
        val.push(v.to_vec());
        test.push(t.to_vec());
    }

    InteractionGraph::from_splits(user_ids.len(), item_ids.len(), train, val, test)?.with_ids(
        user_ids.into_iter().map(str::to_owned).collect(),
        item_ids.into_iter().map(str::to_owned).collect(),
    )
}
