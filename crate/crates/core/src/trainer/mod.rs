//! BPR training: negative sampling, loss, edge dropout, Adam and the epoch
//! loop with early stopping on validation NDCG.

mod adam;
mod config;
mod dropout;
mod loss;
mod sampling;

pub use adam::AdamState;
pub use config::{iteration_temperature, temperature, TauSchedule, TrainConfig};
pub use dropout::edge_dropout;
pub use loss::{add_l2_grad, bpr_loss, l2_penalty, BprLoss};
pub use sampling::{sample_batch, Triplet, TripletSampler};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::evaluate_scorer;
use crate::graph::{build_adjacency, InteractionGraph, NormalizedAdjacency, Split};
use crate::model::{
    backward, forward, init_params, ForwardMode, ForwardTrace, LayerSelection, ModelConfig,
    ModelParams, ParamGrads, ScoreGrad,
};
use crate::numerics::{Rng, StreamPurpose};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub ranking: f64,
    pub l2: f64,
}

/// Loss of a batch under an existing forward trace and its gradient.
pub fn loss_and_grads(
    trace: &ForwardTrace,
    adj: &NormalizedAdjacency,
    params: &ModelParams,
    triplets: &[Triplet],
    lambda: f64,
) -> Result<(LossBreakdown, ParamGrads)> {
    let nu = trace.num_users();
    let pos: Vec<f64> = triplets
        .iter()
        .map(|t| trace.score(t.user, t.pos))
        .collect();
    let neg: Vec<f64> = triplets
        .iter()
        .map(|t| trace.score(t.user, t.neg))
        .collect();
    let bpr = bpr_loss(&pos, &neg);
    let mut upstream = Vec::with_capacity(2 * triplets.len());
    for (k, t) in triplets.iter().enumerate() {
        upstream.push(ScoreGrad {
            user: t.user,
            item: t.pos,
            grad: bpr.d_pos[k],
        });
        upstream.push(ScoreGrad {
            user: t.user,
            item: t.neg,
            grad: bpr.d_neg[k],
        });
    }
    let mut grads = backward(trace, adj, params, &upstream)?;
    let l2 = l2_penalty(params, triplets, nu, lambda);
    add_l2_grad(params, triplets, nu, lambda, &mut grads);
    Ok((
        LossBreakdown {
            total: bpr.value + l2,
            ranking: bpr.value,
            l2,
        },
        grads,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValMetrics {
    pub ndcg: f64,
    pub recall: f64,
    pub precision: f64,
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub ranking_loss: f64,
    pub l2_loss: f64,
    pub tau: f64,
    pub val: ValMetrics,
    pub gate_ratios: Vec<LayerSelection>,
    pub improved: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation NDCG.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_val_ndcg: f64,
    pub log: Vec<EpochRecord>,
}

/// Random streams of a training run, one per purpose.
struct Streams {
    negatives: Rng,
    gumbel: Rng,
    dropout: Rng,
}

pub fn train(
    graph: &InteractionGraph,
    cfg: &TrainConfig,
    model: &ModelConfig,
) -> Result<TrainOutcome> {
    train_with_hook(graph, cfg, model, |_, _| Ok(()))
}

/// Trains from a fresh initialization. `hook` sees every epoch record and,
/// on validation improvement, the new best parameters.
pub fn train_with_hook<H>(
    graph: &InteractionGraph,
    cfg: &TrainConfig,
    model: &ModelConfig,
    hook: H,
) -> Result<TrainOutcome>
where
    H: FnMut(&EpochRecord, Option<&ModelParams>) -> Result<()>,
{
    cfg.validate()?;
    let mut init_rng = Rng::for_purpose(cfg.seed, StreamPurpose::Init);
    let params = init_params(graph.num_nodes(), cfg.dim, model, &mut init_rng)?;
    train_from(graph, cfg, model, params, hook)
}

/// Trains starting from the given parameters.
pub fn train_from<H>(
    graph: &InteractionGraph,
    cfg: &TrainConfig,
    model: &ModelConfig,
    mut params: ModelParams,
    mut hook: H,
) -> Result<TrainOutcome>
where
    H: FnMut(&EpochRecord, Option<&ModelParams>) -> Result<()>,
{
    cfg.validate()?;
    if params.num_nodes() != graph.num_nodes() {
        return Err(Error::Shape("parameters do not match the graph".into()));
    }
    let adj = build_adjacency(graph)?;
    let sampler = TripletSampler::new(graph)?;
    let mut streams = Streams {
        negatives: Rng::for_purpose(cfg.seed, StreamPurpose::Negatives),
        gumbel: Rng::for_purpose(cfg.seed, StreamPurpose::Gumbel),
        dropout: Rng::for_purpose(cfg.seed, StreamPurpose::Dropout),
    };
    let mut adam = AdamState::new(&params);
    let batches = graph.num_train().div_ceil(cfg.batch_size);
    let mut iteration: u64 = 0;

    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut since_best = 0;
    let mut log = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let epoch_tau = temperature(epoch, cfg);
        let mut sums = LossBreakdown::default();
        for batch in 0..batches {
            let tau = match cfg.tau_schedule {
                TauSchedule::Epoch => epoch_tau,
                TauSchedule::Iteration => iteration_temperature(iteration, cfg.tau_min),
            };
            let dropped = edge_dropout(&adj, cfg.dropout_rate, &mut streams.dropout)?;
            let triplets = sampler.sample(cfg.batch_size, &mut streams.negatives);
            let trace = forward(
                &dropped,
                &params,
                model,
                tau,
                ForwardMode::Train,
                Some(&mut streams.gumbel),
            )?;
            let (loss, grads) =
                loss_and_grads(&trace, &dropped, &params, &triplets, cfg.lambda_l2)?;
            if !loss.total.is_finite() || !grads.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch,
                    loss: loss.total,
                });
            }
            adam.step(&mut params, &grads, cfg.learning_rate)?;
            iteration += 1;
            sums.total += loss.total;
            sums.ranking += loss.ranking;
            sums.l2 += loss.l2;
        }
        let nb = batches as f64;

        let eval_trace = forward(&adj, &params, model, epoch_tau, ForwardMode::Eval, None)?;
        let metrics = evaluate_scorer(&eval_trace.scorer(), graph, Split::Val, cfg.eval_k)?;
        let improved = best
            .as_ref()
            .is_none_or(|(_, ndcg, _)| metrics.ndcg > *ndcg);
        let record = EpochRecord {
            epoch,
            loss: sums.total / nb,
            ranking_loss: sums.ranking / nb,
            l2_loss: sums.l2 / nb,
            tau: match cfg.tau_schedule {
                TauSchedule::Epoch => epoch_tau,
                TauSchedule::Iteration => {
                    iteration_temperature(iteration.saturating_sub(1), cfg.tau_min)
                }
            },
            val: ValMetrics {
                ndcg: metrics.ndcg,
                recall: metrics.recall,
                precision: metrics.precision,
            },
            gate_ratios: eval_trace.selection_ratios(),
            improved,
        };
        if improved {
            best = Some((epoch, metrics.ndcg, params.clone()));
            since_best = 0;
            hook(&record, Some(&params))?;
        } else {
            since_best += 1;
            hook(&record, None)?;
        }
        log.push(record);
        if since_best >= cfg.patience {
            break;
        }
    }

    let (best_epoch, best_val_ndcg, params) = match best {
        Some(b) => b,
        None => (0, 0.0, params),
    };
    Ok(TrainOutcome {
        params,
        best_epoch,
        best_val_ndcg,
        log,
    })
}
