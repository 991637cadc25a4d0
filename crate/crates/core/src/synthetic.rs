//! Two-block stochastic bipartite graphs for desk-scale experiments.

use crate::graph::RawInteractions;
use crate::numerics::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoBlockConfig {
    pub num_users: usize,
    pub num_items: usize,
    /// Interaction probability inside a block.
    pub p_in: f64,
    /// Interaction probability across blocks.
    pub p_out: f64,
    pub seed: u64,
}

impl Default for TwoBlockConfig {
    fn default() -> Self {
        TwoBlockConfig {
            num_users: 200,
            num_items: 200,
            p_in: 0.3,
            p_out: 0.01,
            seed: 7,
        }
    }
}

impl TwoBlockConfig {
    /// The first half of the users (items) form block 0.
    pub fn user_block(&self, user: usize) -> usize {
        usize::from(user >= self.num_users / 2)
    }

    pub fn item_block(&self, item: usize) -> usize {
        usize::from(item >= self.num_items / 2)
    }
}

/// Independent Bernoulli draw for every user-item pair, row-major. Ids are
/// the decimal indices, so a split keeps the generator's numbering as long
/// as no user or item ends up without interactions.
pub fn two_block(cfg: &TwoBlockConfig) -> RawInteractions {
    let mut rng = Rng::for_label(cfg.seed, "two-block");
    let mut raw = RawInteractions::new();
    for u in 0..cfg.num_users {
        for i in 0..cfg.num_items {
            let p = if cfg.user_block(u) == cfg.item_block(i) {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if rng.bernoulli(p) {
                raw.insert(u.to_string(), i.to_string());
            }
        }
    }
    raw
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densities_match_rates() {
        let cfg = TwoBlockConfig::default();
        let raw = two_block(&cfg);
        let (mut inside, mut across) = (0usize, 0usize);
        for (u, i) in raw.pairs() {
            let (u, i): (usize, usize) = (u.parse().unwrap(), i.parse().unwrap());
            if cfg.user_block(u) == cfg.item_block(i) {
                inside += 1;
            } else {
                across += 1;
            }
        }
        // 20k pairs per side; sd of the in-block density is about 0.0032
        assert!((inside as f64 / 20_000.0 - 0.3).abs() < 0.015);
        assert!((across as f64 / 20_000.0 - 0.01).abs() < 0.004);
        assert_eq!(raw.users().len(), 200);
        assert_eq!(raw.items().len(), 200);
    }

    #[test]
    fn deterministic() {
        let cfg = TwoBlockConfig::default();
        assert_eq!(
            two_block(&cfg).pairs().collect::<Vec<_>>(),
            two_block(&cfg).pairs().collect::<Vec<_>>()
        );
    }
}
