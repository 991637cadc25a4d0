//! Top-k ranking metrics over held-out items.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{InteractionGraph, NormalizedAdjacency, Split};
use crate::model::{forward, ForwardMode, ModelConfig, ModelParams, Scorer};

/// Top-`k` item indices by descending score, ties by ascending index,
/// skipping items for which `excluded` holds.
pub fn rank_items(scores: &[f64], excluded: impl Fn(usize) -> bool, k: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..scores.len()).filter(|&i| !excluded(i)).collect();
    let order = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if k == 0 {
        return Vec::new();
    }
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, order);
        cand.truncate(k);
    }
    cand.sort_unstable_by(order);
    cand
}

fn discount(position: usize) -> f64 {
    1.0 / ((position + 2) as f64).log2()
}

/// 0-based positions within the first `k` ranks that hold a relevant item.
fn hits(ranked: &[usize], relevant: &[usize], k: usize) -> Vec<usize> {
    ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, item)| relevant.contains(item))
        .map(|(p, _)| p)
        .collect()
}

/// DCG over the first `k` ranks divided by the ideal DCG of
/// `min(k, |relevant|)` hits. Zero when `relevant` is empty.
pub fn ndcg_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let dcg: f64 = hits(ranked, relevant, k).into_iter().map(discount).sum();
    let idcg: f64 = (0..k.min(relevant.len())).map(discount).sum();
    dcg / idcg
}

pub fn recall_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    hits(ranked, relevant, k).len() as f64 / relevant.len() as f64
}

pub fn precision_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> f64 {
    hits(ranked, relevant, k).len() as f64 / k as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user: usize,
    pub ndcg: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub k: usize,
    pub ndcg: f64,
    pub recall: f64,
    pub precision: f64,
    /// Users with a nonempty held-out set.
    pub num_users: usize,
    #[serde(skip)]
    pub per_user: Vec<UserMetrics>,
}

impl MetricsReport {
    fn from_users(k: usize, per_user: Vec<UserMetrics>) -> Self {
        let n = per_user.len();
        let mean = |f: fn(&UserMetrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                per_user.iter().map(f).sum::<f64>() / n as f64
            }
        };
        MetricsReport {
            k,
            ndcg: mean(|m| m.ndcg),
            recall: mean(|m| m.recall),
            precision: mean(|m| m.precision),
            num_users: n,
            per_user,
        }
    }
}

/// Candidate filter for a split: validation hides train items, test hides
/// train and validation items.
fn is_excluded(graph: &InteractionGraph, split: Split, user: usize, item: usize) -> bool {
    let seen = |list: &[Vec<u32>]| list[user].binary_search(&(item as u32)).is_ok();
    match split {
        Split::Val => seen(graph.train()),
        Split::Test => seen(graph.train()) || seen(graph.val()),
    }
}

/// Metrics for arbitrary per-user score rows (`scores(user)` has one entry per item).
pub fn evaluate_scores<F>(
    graph: &InteractionGraph,
    split: Split,
    k: usize,
    scores: F,
) -> Result<MetricsReport>
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let held_out = graph.split_lists(split);
    let per_user: Vec<Option<UserMetrics>> = (0..graph.num_users())
        .into_par_iter()
        .map(|u| {
            if held_out[u].is_empty() {
                return None;
            }
            let row = scores(u);
            assert_eq!(row.len(), graph.num_items(), "score row length");
            let ranked = rank_items(&row, |i| is_excluded(graph, split, u, i), k);
            let relevant: Vec<usize> = held_out[u].iter().map(|&i| i as usize).collect();
            Some(UserMetrics {
                user: u,
                ndcg: ndcg_at_k(&ranked, &relevant, k),
                recall: recall_at_k(&ranked, &relevant, k),
                precision: precision_at_k(&ranked, &relevant, k),
            })
        })
        .collect();
    Ok(MetricsReport::from_users(
        k,
        per_user.into_iter().flatten().collect(),
    ))
}

pub fn evaluate_scorer(
    scorer: &Scorer,
    graph: &InteractionGraph,
    split: Split,
    k: usize,
) -> Result<MetricsReport> {
    if scorer.num_users() != graph.num_users() || scorer.num_items() != graph.num_items() {
        return Err(Error::Shape(
            "scorer and graph disagree on users/items".into(),
        ));
    }
    evaluate_scores(graph, split, k, |u| scorer.user_scores(u))
}

/// Eval-mode forward (deterministic gates, undropped adjacency), then metrics.
pub fn evaluate(
    params: &ModelParams,
    config: &ModelConfig,
    adj: &NormalizedAdjacency,
    graph: &InteractionGraph,
    split: Split,
    k: usize,
) -> Result<MetricsReport> {
    let trace = forward(adj, params, config, 1.0, ForwardMode::Eval, None)?;
    evaluate_scorer(&trace.scorer(), graph, split, k)
}

/// Expected metrics of a uniformly random ranking of each user's candidates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub ndcg: f64,
    pub recall: f64,
    pub precision: f64,
}

pub fn random_baseline(graph: &InteractionGraph, split: Split, k: usize) -> RandomBaseline {
    let held_out = graph.split_lists(split);
    let mut acc = [0.0f64; 3];
    let mut n = 0usize;
    for (u, relevant) in held_out.iter().enumerate() {
        let r = relevant.len();
        if r == 0 {
            continue;
        }
        let c = (0..graph.num_items())
            .filter(|&i| !is_excluded(graph, split, u, i))
            .count();
        let shown = k.min(c);
        let p_hit = r as f64 / c as f64;
        let dcg: f64 = (0..shown).map(discount).sum::<f64>() * p_hit;
        let idcg: f64 = (0..k.min(r)).map(discount).sum();
        acc[0] += dcg / idcg;
        acc[1] += shown as f64 / c as f64;
        acc[2] += p_hit * shown as f64 / k as f64;
        n += 1;
    }
    let n = n.max(1) as f64;
    RandomBaseline {
        ndcg: acc[0] / n,
        recall: acc[1] / n,
        precision: acc[2] / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_examples() {
        let s = [0.1, 0.9, 0.5];
        assert_eq!(rank_items(&s, |_| false, 2), vec![1, 2]);
        assert_eq!(rank_items(&s, |i| i == 1, 2), vec![2, 0]);
        assert_eq!(
            rank_items(&[0.3, 0.7, 0.3, 0.3], |_| false, 3),
            vec![1, 0, 2]
        );
        assert_eq!(rank_items(&s, |_| false, 10), vec![1, 2, 0]);
        assert!(rank_items(&s, |_| false, 0).is_empty());
    }

    #[test]
    fn metric_examples() {
        let ranked: Vec<usize> = (0..20).collect();
        assert_eq!(ndcg_at_k(&ranked, &[0], 20), 1.0);
        assert!((ndcg_at_k(&ranked, &[1], 20) - 0.630_929_753_571_457_4).abs() < 1e-15);
        assert_eq!(ndcg_at_k(&ranked, &[30], 20), 0.0);
        let rel = [3, 5, 7, 11, 13];
        assert_eq!(recall_at_k(&ranked, &rel, 20), 1.0);
        assert_eq!(precision_at_k(&ranked, &rel, 20), 0.25);
        assert_eq!(ndcg_at_k(&ranked, &[0, 1, 2, 3, 4], 20), 1.0);
        assert_eq!(recall_at_k(&ranked, &[40], 20), 0.0);
        assert_eq!(precision_at_k(&ranked, &[40], 20), 0.0);
    }

    #[test]
    fn perfect_scores() {
        let g = InteractionGraph::from_splits(
            2,
            6,
            vec![vec![0], vec![1, 2]],
            vec![vec![1], vec![]],
            vec![vec![4, 5], vec![3]],
        )
        .unwrap();
        let r = evaluate_scores(&g, Split::Test, 20, |u| {
            (0..6u32)
                .map(|i| {
                    if g.test()[u].contains(&i) {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .unwrap();
        assert_eq!((r.ndcg, r.recall, r.num_users), (1.0, 1.0, 2));
        // user 1 has no validation items and is skipped
        let v = evaluate_scores(&g, Split::Val, 20, |_| vec![0.0; 6]).unwrap();
        assert_eq!(v.num_users, 1);
    }

    #[test]
    fn seen_items_are_excluded() {
        let g = InteractionGraph::from_splits(1, 3, vec![vec![0]], vec![vec![1]], vec![vec![2]])
            .unwrap();
        let r = evaluate_scores(&g, Split::Test, 1, |_| vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.ndcg, 1.0);
        let r = evaluate_scores(&g, Split::Val, 1, |_| vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.ndcg, 1.0);
    }

    #[test]
    fn random_baseline_small_case() {
        // one user, 4 candidates, 1 relevant, k = 2
        let g = InteractionGraph::from_splits(1, 5, vec![vec![0]], vec![vec![]], vec![vec![3]])
            .unwrap();
        let b = random_baseline(&g, Split::Test, 2);
        assert!((b.recall - 0.5).abs() < 1e-15);
        assert!((b.precision - 0.25).abs() < 1e-15);
        assert!((b.ndcg - 0.25 * (1.0 + 1.0 / 3f64.log2())).abs() < 1e-15);
    }
}
