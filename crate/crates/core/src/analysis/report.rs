use serde::{Deserialize, Serialize};

use super::centrality::{
    betweenness, closeness, pagerank, UndirectedGraph, PAGERANK_DAMPING, PAGERANK_TOL,
};
use super::NodeClass;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub const DEGREE_BINS: usize = 10;

/// Per-node centralities of the unweighted training graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Centralities {
    pub degree: Vec<usize>,
    pub pagerank: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub closeness: Vec<f64>,
}

pub fn compute_centralities(g: &UndirectedGraph) -> Result<Centralities> {
    Ok(Centralities {
        degree: g.degrees(),
        pagerank: pagerank(g, PAGERANK_DAMPING, PAGERANK_TOL)?,
        betweenness: betweenness(g),
        closeness: closeness(g),
    })
}

/// Box-plot summary: quartiles by linear interpolation, whiskers at the most
/// extreme samples within 1.5 IQR of the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub min_whisker: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max_whisker: f64,
    pub outliers: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s
        .iter()
        .copied()
        .filter(|v| (lo..=hi).contains(v))
        .collect();
    Some(BoxStats {
        count: s.len(),
        min_whisker: inside.first().copied().unwrap_or(q1),
        q1,
        median,
        q3,
        max_whisker: inside.last().copied().unwrap_or(q3),
        outliers: s.len() - inside.len(),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerClass<T> {
    pub fnl: T,
    pub pnl: T,
    pub fl: T,
}

impl<T> PerClass<T> {
    fn get_mut(&mut self, c: NodeClass) -> &mut T {
        match c {
            NodeClass::Fnl => &mut self.fnl,
            NodeClass::Pnl => &mut self.pnl,
            NodeClass::Fl => &mut self.fl,
        }
    }

    fn map<U>(self, mut f: impl FnMut(T) -> U) -> PerClass<U> {
        PerClass {
            fnl: f(self.fnl),
            pnl: f(self.pnl),
            fl: f(self.fl),
        }
    }
}

fn split_by_class<T: Copy>(classes: &[NodeClass], values: &[T]) -> PerClass<Vec<T>> {
    let mut out = PerClass::<Vec<T>>::default();
    for (&c, &v) in classes.iter().zip(values) {
        out.get_mut(c).push(v);
    }
    out
}

fn shares(classes: &[NodeClass]) -> PerClass<f64> {
    let n = classes.len().max(1) as f64;
    let mut counts = PerClass::<usize>::default();
    for &c in classes {
        *counts.get_mut(c) += 1;
    }
    counts.map(|k| 100.0 * k as f64 / n)
}

/// Class composition of one degree-percentile bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBin {
    /// 1-based bin index; bin `i` covers percentiles `[10(i-1), 10i)`.
    pub bin: usize,
    pub nodes: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    /// Percent of the bin's nodes in each class.
    pub ratios: PerClass<f64>,
}

/// Nodes ordered by (degree, index) and cut into ten equal-rank bins.
pub fn degree_bins(classes: &[NodeClass], degree: &[usize]) -> Vec<DegreeBin> {
    let n = classes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (degree[v], v));
    (0..DEGREE_BINS)
        .map(|b| {
            let members = &order[b * n / DEGREE_BINS..(b + 1) * n / DEGREE_BINS];
            let cls: Vec<NodeClass> = members.iter().map(|&v| classes[v]).collect();
            DegreeBin {
                bin: b + 1,
                nodes: members.len(),
                min_degree: members.first().map_or(0, |&v| degree[v]),
                max_degree: members.last().map_or(0, |&v| degree[v]),
                ratios: if members.is_empty() {
                    PerClass::default()
                } else {
                    shares(&cls)
                },
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    /// Number of (node, neighbor) pairs.
    pub pairs: usize,
    pub mean: f64,
    pub variance: f64,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (crate::numerics::dense_dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

fn mean_variance(xs: &[f64]) -> SimilarityStats {
    if xs.is_empty() {
        return SimilarityStats {
            pairs: 0,
            mean: 0.0,
            variance: 0.0,
        };
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    SimilarityStats {
        pairs: xs.len(),
        mean,
        variance,
    }
}

/// Cosine similarity of each node with each of its neighbors, pooled by the
/// class of the node.
pub fn neighbor_similarity(
    classes: &[NodeClass],
    g: &UndirectedGraph,
    embeddings: &DenseMatrix,
) -> PerClass<SimilarityStats> {
    let mut pooled = PerClass::<Vec<f64>>::default();
    for (v, &class) in classes.iter().enumerate().take(g.num_nodes()) {
        for &w in g.neighbors(v) {
            pooled
                .get_mut(class)
                .push(cosine(embeddings.row(v), embeddings.row(w)));
        }
    }
    pooled.map(|xs| mean_variance(&xs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityBoxes {
    pub degree: PerClass<Option<BoxStats>>,
    pub pagerank: PerClass<Option<BoxStats>>,
    pub betweenness: PerClass<Option<BoxStats>>,
    pub closeness: PerClass<Option<BoxStats>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub num_nodes: usize,
    pub class_counts: PerClass<usize>,
    /// Percent of nodes per class.
    pub class_sizes: PerClass<f64>,
    pub degree_bins: Vec<DegreeBin>,
    pub centrality: CentralityBoxes,
    pub similarity: PerClass<SimilarityStats>,
}

pub fn class_report(
    classes: &[NodeClass],
    centralities: &Centralities,
    g: &UndirectedGraph,
    embeddings: &DenseMatrix,
) -> Result<AnalysisReport> {
    let n = classes.len();
    if g.num_nodes() != n
        || embeddings.rows() != n
        || centralities.degree.len() != n
        || centralities.pagerank.len() != n
        || centralities.betweenness.len() != n
        || centralities.closeness.len() != n
    {
        return Err(Error::Analysis(
            "classes, graph, centralities and embeddings disagree on node count".into(),
        ));
    }
    let mut class_counts = PerClass::<usize>::default();
    for &c in classes {
        *class_counts.get_mut(c) += 1;
    }
    let boxes = |values: &[f64]| split_by_class(classes, values).map(|xs| box_stats(&xs));
    let degree_f: Vec<f64> = centralities.degree.iter().map(|&d| d as f64).collect();
    Ok(AnalysisReport {
        num_nodes: n,
        class_counts,
        class_sizes: shares(classes),
        degree_bins: degree_bins(classes, &centralities.degree),
        centrality: CentralityBoxes {
            degree: boxes(&degree_f),
            pagerank: boxes(&centralities.pagerank),
            betweenness: boxes(&centralities.betweenness),
            closeness: boxes(&centralities.closeness),
        },
        similarity: neighbor_similarity(classes, g, embeddings),
    })
}
