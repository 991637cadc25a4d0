//! Post-hoc analysis of a trained gated model: node classes from gate
//! decisions, graph centralities and per-class summaries.

mod centrality;
mod report;

pub use centrality::{
    betweenness, closeness, pagerank, UndirectedGraph, PAGERANK_DAMPING, PAGERANK_MAX_ITER,
    PAGERANK_TOL,
};
pub use report::{
    box_stats, class_report, compute_centralities, cosine, degree_bins, neighbor_similarity,
    AnalysisReport, BoxStats, Centralities, CentralityBoxes, DegreeBin, PerClass, SimilarityStats,
    DEGREE_BINS,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::model::{Branch, ForwardTrace, GateDecisionLog, LayerSelection, NUM_LAYERS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeClass {
    /// Every gated layer chose the non-linear branch.
    Fnl,
    /// Mixed choices.
    Pnl,
    /// Every gated layer chose the linear branch.
    Fl,
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeClass::Fnl => "FNL",
            NodeClass::Pnl => "PNL",
            NodeClass::Fl => "FL",
        })
    }
}

pub fn classify_nodes(log: &GateDecisionLog) -> Result<Vec<NodeClass>> {
    if log.layers.is_empty() || log.decisions.is_empty() {
        return Err(Error::Analysis("no gated layers to classify".into()));
    }
    if log.decisions.len() != log.layers.len()
        || log.decisions.iter().any(|d| d.len() != log.num_nodes)
    {
        return Err(Error::Analysis(
            "gate decision log does not cover every node".into(),
        ));
    }
    Ok((0..log.num_nodes)
        .map(|v| {
            let nonlinear = log
                .decisions
                .iter()
                .filter(|d| d[v] == Branch::NonLinear)
                .count();
            if nonlinear == log.decisions.len() {
                NodeClass::Fnl
            } else if nonlinear == 0 {
                NodeClass::Fl
            } else {
                NodeClass::Pnl
            }
        })
        .collect())
}

/// Which embedding the neighbor-similarity statistics use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityEmbedding {
    /// Last gated layer output.
    #[default]
    Final,
    /// Weighted sum over all layers.
    ResidualMean,
}

/// Report bundle written by the `analyze` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullAnalysis {
    pub gated_layers: Vec<usize>,
    pub gate_ratios: Vec<LayerSelection>,
    pub similarity_embedding: SimilarityEmbedding,
    #[serde(flatten)]
    pub report: AnalysisReport,
}

/// Classifies nodes from an eval-mode trace and summarizes them against the
/// training graph.
pub fn analyze(
    trace: &ForwardTrace,
    graph: &InteractionGraph,
    embedding: SimilarityEmbedding,
) -> Result<FullAnalysis> {
    let log = trace.decisions();
    let classes = classify_nodes(&log)?;
    let g = UndirectedGraph::from_neighbors(graph.node_neighbors())?;
    let centralities = compute_centralities(&g)?;
    let embeddings = match embedding {
        SimilarityEmbedding::Final => trace.gated(NUM_LAYERS).clone(),
        SimilarityEmbedding::ResidualMean => trace.residual_mean_embeddings(),
    };
    Ok(FullAnalysis {
        gated_layers: log.layers,
        gate_ratios: trace.selection_ratios(),
        similarity_embedding: embedding,
        report: class_report(&classes, &centralities, &g, &embeddings)?,
    })
}
