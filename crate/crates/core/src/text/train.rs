use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{AnnotatedCorpus, Split};
use super::crf::{ConvCrf, Gradient, ModelConfig};
use super::embedding::EmbeddingTable;
use super::eval::{score_sequences, EntityReport};
use super::features::{featurize, ClusterTable, FeatureMatrix};
use super::labels::Label;
use super::TextError;
use crate::scalar::Real;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub seed: u64,
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    /// Held-out F1 is measured every this many epochs.
    pub eval_every: usize,
    /// Stop after this many evaluations without held-out improvement.
    pub patience: usize,
}

impl TrainConfig {
    pub fn new(model: ModelConfig) -> Self {
        TrainConfig {
            model,
            seed: 7,
            learning_rate: 0.05,
            l2: 1e-3,
            max_epochs: 600,
            eval_every: 10,
            patience: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub step: f64,
    pub heldout_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_heldout: Option<EntityReport>,
}

struct Example<T> {
    x: FeatureMatrix<T>,
    gold: Vec<Label>,
}

fn examples<T: Real>(
    corpus: &AnnotatedCorpus,
    split: Split,
    config: &ModelConfig,
    embeddings: &EmbeddingTable,
    clusters: Option<&ClusterTable>,
) -> Result<Vec<Example<T>>, TextError> {
    corpus
        .sentences
        .iter()
        .filter(|s| s.split == split)
        .map(|s| {
            Ok(Example {
                x: featurize(&s.tokens, &config.features, embeddings, clusters)?,
                gold: s.labels.clone(),
            })
        })
        .collect()
}

const CHUNK: usize = 16;

/// Mean negative log-likelihood plus `l2/2 * |θ|²`, and its gradient.
///
/// Per-chunk gradients are computed in parallel and summed in chunk order, so
/// the result does not depend on the thread count.
pub fn objective<T: Real>(
    model: &ConvCrf<T>,
    data: &[(&FeatureMatrix<T>, &[Label])],
    l2: f64,
) -> Result<(T, Gradient<T>), TextError> {
    let partials: Vec<Result<(T, Gradient<T>), TextError>> = data
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = Gradient::zeros_like(model);
            let mut loss = T::zero();
            for (x, gold) in chunk {
                loss = loss + model.nll_with_gradient(x, gold, &mut g)?;
            }
            Ok((loss, g))
        })
        .collect();
    let n = T::of(data.len().max(1) as f64);
    let mut total = Gradient::zeros_like(model);
    let mut loss = T::zero();
    for p in partials {
        let (l, g) = p?;
        loss = loss + l;
        total.add_scaled(&g, T::one() / n);
    }
    let lambda = T::of(l2);
    loss = loss / n + lambda * model.squared_norm() / T::of(2.0);
    let reg = Gradient {
        conv: model.conv.clone(),
        conv_bias: model.conv_bias.clone(),
        emission: model.emission.clone(),
        transitions: model
            .transitions
            .iter()
            .enumerate()
            .map(|(i, v)| if ConvCrf::<T>::is_free(super::crf::ParamGroup::Transition, i) { *v } else { T::zero() })
            .collect(),
    };
    total.add_scaled(&reg, lambda);
    Ok((loss, total))
}

pub fn evaluate_model<T: Real>(model: &ConvCrf<T>, data: &[(&FeatureMatrix<T>, &[Label])]) -> Result<EntityReport, TextError> {
    let preds: Vec<Vec<Label>> = data
        .par_iter()
        .map(|(x, _)| model.decode(x).map(|t| t.labels))
        .collect::<Result<_, _>>()?;
    Ok(score_sequences(data.iter().zip(&preds).map(|((_, g), p)| (*g, p.as_slice()))))
}

/// Full-batch gradient descent on the regularised negative log-likelihood.
///
/// The step is fixed and halves whenever a step would increase the loss (the
/// step is then retried). When the corpus has held-out sentences, training
/// stops once held-out macro F1 has not improved for `patience` evaluations
/// (ties broken by lower held-out loss) and the best-scoring parameters are returned.
pub fn train<T: Real>(
    corpus: &AnnotatedCorpus,
    config: &TrainConfig,
    embeddings: &EmbeddingTable,
    clusters: Option<&ClusterTable>,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(ConvCrf<T>, TrainReport), TextError> {
    let train_ex = examples::<T>(corpus, Split::Train, &config.model, embeddings, clusters)?;
    if train_ex.is_empty() {
        return Err(TextError::CorpusEmpty);
    }
    let held_ex = examples::<T>(corpus, Split::Heldout, &config.model, embeddings, clusters)?;
    let train_data: Vec<_> = train_ex.iter().map(|e| (&e.x, e.gold.as_slice())).collect();
    let held_data: Vec<_> = held_ex.iter().map(|e| (&e.x, e.gold.as_slice())).collect();

    let mut model = ConvCrf::<T>::random(config.model.clone(), config.seed);
    let (mut loss, mut grad) = objective(&model, &train_data, config.l2)?;
    if !loss.is_finite() {
        return Err(TextError::NonFiniteLoss { epoch: 0 });
    }
    let initial_loss = loss.to_f64().unwrap();
    let mut step = config.learning_rate;
    let mut report = TrainReport { initial_loss, epochs: Vec::new(), best_epoch: 0, best_heldout: None };
    let mut best: Option<(f64, f64, ConvCrf<T>)> = None;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        let mut candidate = model.clone();
        candidate.descend(&grad, T::of(step));
        let (new_loss, new_grad) = objective(&candidate, &train_data, config.l2)?;
        if !new_loss.is_finite() && step < 1e-12 {
            return Err(TextError::NonFiniteLoss { epoch });
        }
        if !new_loss.is_finite() || new_loss > loss {
            step /= 2.0;
            if step < 1e-9 {
                break;
            }
            continue;
        }
        model = candidate;
        loss = new_loss;
        grad = new_grad;

        let mut stats = EpochStats { epoch, loss: loss.to_f64().unwrap(), step, heldout_macro_f1: None };
        if !held_data.is_empty() && epoch % config.eval_every.max(1) == 0 {
            let r = evaluate_model(&model, &held_data)?;
            let f1 = r.macro_f1();
            stats.heldout_macro_f1 = Some(f1);
            // a small held-out slice plateaus in F1 long before it stops gaining in likelihood,
            // so equal F1 with lower held-out loss still counts as progress
            let held_loss = objective(&model, &held_data, 0.0)?.0.to_f64().unwrap();
            if best.as_ref().map_or(true, |(b, l, _)| f1 > *b || (f1 == *b && held_loss < *l)) {
                best = Some((f1, held_loss, model.clone()));
                report.best_epoch = epoch;
                report.best_heldout = Some(r);
                stale = 0;
            } else {
                stale += 1;
            }
        }
        on_epoch(&stats);
        report.epochs.push(stats);
        if stale >= config.patience {
            break;
        }
    }

    let model = match best {
        Some((_, _, m)) => m,
        None => {
            report.best_epoch = report.epochs.last().map_or(0, |e| e.epoch);
            model
        }
    };
    Ok((model, report))
}
