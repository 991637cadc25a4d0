use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::numerics::Rng;

/// A BPR training example: user, observed item, unobserved item.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triplet {
    pub user: usize,
    pub pos: usize,
    pub neg: usize,
}

/// Uniform sampler over training pairs with rejection-sampled negatives.
///
/// Users whose training set covers every item cannot yield a negative and
/// are left out of the pair pool.
#[derive(Clone, Debug)]
pub struct TripletSampler<'g> {
    graph: &'g InteractionGraph,
    pairs: Vec<(u32, u32)>,
}

impl<'g> TripletSampler<'g> {
    pub fn new(graph: &'g InteractionGraph) -> Result<Self> {
        let ni = graph.num_items();
        let pairs: Vec<(u32, u32)> = graph
            .train()
            .iter()
            .enumerate()
            .filter(|(_, items)| items.len() < ni)
            .flat_map(|(u, items)| items.iter().map(move |&i| (u as u32, i)))
            .collect();
        if pairs.is_empty() {
            return Err(Error::EmptyDataset(
                "no training pair admits a negative item".into(),
            ));
        }
        Ok(TripletSampler { graph, pairs })
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn sample(&self, batch_size: usize, rng: &mut Rng) -> Vec<Triplet> {
        let ni = self.graph.num_items();
        (0..batch_size)
            .map(|_| {
                let (u, i) = self.pairs[rng.below(self.pairs.len())];
                let neg = loop {
                    let j = rng.below(ni) as u32;
                    if !self.graph.is_train_item(u as usize, j) {
                        break j;
                    }
                };
                Triplet {
                    user: u as usize,
                    pos: i as usize,
                    neg: neg as usize,
                }
            })
            .collect()
    }
}

pub fn sample_batch(
    graph: &InteractionGraph,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<Vec<Triplet>> {
    Ok(TripletSampler::new(graph)?.sample(batch_size, rng))
}
