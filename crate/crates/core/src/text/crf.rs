//! One-dimensional convolution followed by a linear-chain CRF.
//!
//! Emissions are `E · (b + W * x)` where `W * x` is a same-padded convolution
//! over the token axis with identity activation. Invalid IOB transitions are
//! fixed at `-inf` and are not parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, FeatureMatrix};
use super::labels::{Label, NUM_LABELS};
use super::TextError;
use crate::scalar::{log_sum_exp, Real};

const L: usize = NUM_LABELS;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub features: FeatureConfig,
    /// Odd convolution width.
    pub kernel_width: usize,
    pub kernels: usize,
}

impl ModelConfig {
    pub fn new(features: FeatureConfig) -> Self {
        ModelConfig { features, kernel_width: 3, kernels: 32 }
    }

    pub fn input_width(&self) -> usize {
        self.features.width()
    }
}

/// Output of decoding: labels, their log-probability, optional marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagSequence {
    pub labels: Vec<Label>,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<[f64; NUM_LABELS]>>,
}

impl TagSequence {
    /// Marginal probability of each chosen label.
    pub fn confidences(&self) -> Option<Vec<f64>> {
        let m = self.marginals.as_ref()?;
        Some(self.labels.iter().zip(m).map(|(l, row)| row[l.index()]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Conv,
    ConvBias,
    Emission,
    Transition,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 4] =
        [ParamGroup::Conv, ParamGroup::ConvBias, ParamGroup::Emission, ParamGroup::Transition];
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvCrf<T> {
    pub config: ModelConfig,
    /// `[kernel][offset][feature]`
    pub conv: Vec<T>,
    pub conv_bias: Vec<T>,
    /// `[label][kernel]`
    pub emission: Vec<T>,
    /// `[prev][next]`; entries for invalid transitions stay zero and are ignored.
    pub transitions: Vec<T>,
}

/// Gradient buffers with the same layout as [`ConvCrf`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub conv: Vec<T>,
    pub conv_bias: Vec<T>,
    pub emission: Vec<T>,
    pub transitions: Vec<T>,
}

impl<T: Real> Gradient<T> {
    pub fn zeros_like(model: &ConvCrf<T>) -> Self {
        Gradient {
            conv: vec![T::zero(); model.conv.len()],
            conv_bias: vec![T::zero(); model.conv_bias.len()],
            emission: vec![T::zero(); model.emission.len()],
            transitions: vec![T::zero(); model.transitions.len()],
        }
    }

    pub fn group(&self, g: ParamGroup) -> &[T] {
        match g {
            ParamGroup::Conv => &self.conv,
            ParamGroup::ConvBias => &self.conv_bias,
            ParamGroup::Emission => &self.emission,
            ParamGroup::Transition => &self.transitions,
        }
    }

    pub fn add_scaled(&mut self, other: &Gradient<T>, scale: T) {
        for g in ParamGroup::ALL {
            let src = other.group(g);
            let dst = match g {
                ParamGroup::Conv => &mut self.conv,
                ParamGroup::ConvBias => &mut self.conv_bias,
                ParamGroup::Emission => &mut self.emission,
                ParamGroup::Transition => &mut self.transitions,
            };
            dst.iter_mut().zip(src).for_each(|(d, s)| *d = *d + *s * scale);
        }
    }
}

fn transition_index(prev: usize, next: usize) -> usize {
    prev * L + next
}

pub fn transition_allowed(prev: usize, next: usize) -> bool {
    Label::valid_transition(Label::from_index(prev), Label::from_index(next))
}

pub fn start_allowed(label: usize) -> bool {
    Label::from_index(label).valid_start()
}

impl<T: Real> ConvCrf<T> {
    pub fn zeros(config: ModelConfig) -> Self {
        let n = config.input_width();
        let m = config.kernels;
        ConvCrf {
            conv: vec![T::zero(); m * config.kernel_width * n],
            conv_bias: vec![T::zero(); m],
            emission: vec![T::zero(); L * m],
            transitions: vec![T::zero(); L * L],
            config,
        }
    }

    /// Gaussian initialisation scaled by fan-in, transitions at zero.
    pub fn random(config: ModelConfig, seed: u64) -> Self {
        let mut model = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fan_in = (model.config.kernel_width * model.config.input_width()) as f64;
        let conv = Normal::new(0.0, 1.0 / fan_in.sqrt()).unwrap();
        for w in &mut model.conv {
            *w = T::of(conv.sample(&mut rng));
        }
        let emis = Normal::new(0.0, 1.0 / (model.config.kernels as f64).sqrt()).unwrap();
        for w in &mut model.emission {
            *w = T::of(emis.sample(&mut rng));
        }
        model
    }

    pub fn group(&self, g: ParamGroup) -> &[T] {
        match g {
            ParamGroup::Conv => &self.conv,
            ParamGroup::ConvBias => &self.conv_bias,
            ParamGroup::Emission => &self.emission,
            ParamGroup::Transition => &self.transitions,
        }
    }

    pub fn group_mut(&mut self, g: ParamGroup) -> &mut [T] {
        match g {
            ParamGroup::Conv => &mut self.conv,
            ParamGroup::ConvBias => &mut self.conv_bias,
            ParamGroup::Emission => &mut self.emission,
            ParamGroup::Transition => &mut self.transitions,
        }
    }

    /// Whether parameter `i` of group `g` is trainable (masked transitions are not).
    pub fn is_free(g: ParamGroup, i: usize) -> bool {
        g != ParamGroup::Transition || transition_allowed(i / L, i % L)
    }

    pub fn is_finite(&self) -> bool {
        ParamGroup::ALL.iter().all(|g| self.group(*g).iter().all(|v| v.is_finite()))
    }

    /// Transition score, `-inf` where IOB forbids it.
    pub fn transition(&self, prev: usize, next: usize) -> T {
        if transition_allowed(prev, next) {
            self.transitions[transition_index(prev, next)]
        } else {
            T::neg_infinity()
        }
    }

    fn check_dims(&self, x: &FeatureMatrix<T>) -> Result<(), TextError> {
        let expected = self.config.input_width();
        if x.cols != expected {
            return Err(TextError::DimensionMismatch { expected, found: x.cols });
        }
        Ok(())
    }

    /// Convolution outputs (`len × kernels`).
    pub fn hidden(&self, x: &FeatureMatrix<T>) -> Vec<T> {
        let n = x.cols;
        let m = self.config.kernels;
        let w = self.config.kernel_width;
        let r = w / 2;
        let mut h = vec![T::zero(); x.rows * m];
        for t in 0..x.rows {
            let out = &mut h[t * m..(t + 1) * m];
            out.copy_from_slice(&self.conv_bias);
            for o in 0..w {
                let src = t as isize + o as isize - r as isize;
                if src < 0 || src >= x.rows as isize {
                    continue;
                }
                let row = x.row(src as usize);
                for (k, acc) in out.iter_mut().enumerate() {
                    let kernel = &self.conv[(k * w + o) * n..(k * w + o + 1) * n];
                    let mut s = T::zero();
                    for (a, b) in kernel.iter().zip(row) {
                        if *b != T::zero() {
                            s = s + *a * *b;
                        }
                    }
                    *acc = *acc + s;
                }
            }
        }
        h
    }

    /// Emission scores (`len × labels`) from hidden activations.
    pub fn emissions_from_hidden(&self, hidden: &[T], rows: usize) -> Vec<T> {
        let m = self.config.kernels;
        let mut e = vec![T::zero(); rows * L];
        for t in 0..rows {
            let h = &hidden[t * m..(t + 1) * m];
            for y in 0..L {
                let wy = &self.emission[y * m..(y + 1) * m];
                e[t * L + y] = wy.iter().zip(h).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
            }
        }
        e
    }

    pub fn emissions(&self, x: &FeatureMatrix<T>) -> Result<Vec<T>, TextError> {
        self.check_dims(x)?;
        Ok(self.emissions_from_hidden(&self.hidden(x), x.rows))
    }

    /// Unnormalised score of a label sequence.
    pub fn sequence_score(&self, emissions: &[T], labels: &[Label]) -> T {
        let mut s = T::zero();
        for (t, l) in labels.iter().enumerate() {
            s = s + emissions[t * L + l.index()];
            if t == 0 {
                if !l.valid_start() {
                    return T::neg_infinity();
                }
            } else {
                s = s + self.transition(labels[t - 1].index(), l.index());
            }
        }
        s
    }

    pub fn decode(&self, x: &FeatureMatrix<T>) -> Result<TagSequence, TextError> {
        let e = self.emissions(x)?;
        let (labels, best) = viterbi(&e, x.rows, |a, b| self.transition(a, b));
        let log_z = if x.rows == 0 { T::zero() } else { forward(&e, x.rows, |a, b| self.transition(a, b)).1 };
        let score = if x.rows == 0 { 0.0 } else { (best - log_z).to_f64().unwrap() };
        Ok(TagSequence { labels, score, marginals: None })
    }

    pub fn decode_with_marginals(&self, x: &FeatureMatrix<T>) -> Result<TagSequence, TextError> {
        let mut tags = self.decode(x)?;
        tags.marginals = Some(self.marginals(x)?);
        Ok(tags)
    }

    pub fn marginals(&self, x: &FeatureMatrix<T>) -> Result<Vec<[f64; L]>, TextError> {
        let e = self.emissions(x)?;
        let fb = forward_backward(&e, x.rows, |a, b| self.transition(a, b));
        Ok(fb
            .unary
            .chunks(L)
            .map(|row| {
                let mut out = [0.0; L];
                for (o, v) in out.iter_mut().zip(row) {
                    *o = v.to_f64().unwrap();
                }
                out
            })
            .collect())
    }

    pub fn log_partition(&self, x: &FeatureMatrix<T>) -> Result<T, TextError> {
        let e = self.emissions(x)?;
        Ok(forward(&e, x.rows, |a, b| self.transition(a, b)).1)
    }

    /// Negative log-likelihood of `gold`, accumulating its gradient into `grad`.
    pub fn nll_with_gradient(
        &self,
        x: &FeatureMatrix<T>,
        gold: &[Label],
        grad: &mut Gradient<T>,
    ) -> Result<T, TextError> {
        self.check_dims(x)?;
        if gold.len() != x.rows {
            return Err(TextError::DimensionMismatch { expected: x.rows, found: gold.len() });
        }
        if x.rows == 0 {
            return Ok(T::zero());
        }
        let rows = x.rows;
        let m = self.config.kernels;
        let n = x.cols;
        let w = self.config.kernel_width;
        let r = w / 2;
        let hidden = self.hidden(x);
        let e = self.emissions_from_hidden(&hidden, rows);
        let fb = forward_backward(&e, rows, |a, b| self.transition(a, b));
        let nll = fb.log_z - self.sequence_score(&e, gold);

        // d nll / d emission score
        let mut de = fb.unary.clone();
        for (t, l) in gold.iter().enumerate() {
            de[t * L + l.index()] = de[t * L + l.index()] - T::one();
        }
        for t in 1..rows {
            for a in 0..L {
                for b in 0..L {
                    if !transition_allowed(a, b) {
                        continue;
                    }
                    let p = (fb.alpha[(t - 1) * L + a] + self.transition(a, b) + e[t * L + b] + fb.beta[t * L + b]
                        - fb.log_z)
                        .exp();
                    let idx = transition_index(a, b);
                    grad.transitions[idx] = grad.transitions[idx] + p;
                }
            }
            let idx = transition_index(gold[t - 1].index(), gold[t].index());
            grad.transitions[idx] = grad.transitions[idx] - T::one();
        }

        let mut dh = vec![T::zero(); rows * m];
        for t in 0..rows {
            let h = &hidden[t * m..(t + 1) * m];
            for y in 0..L {
                let d = de[t * L + y];
                if d == T::zero() {
                    continue;
                }
                for k in 0..m {
                    grad.emission[y * m + k] = grad.emission[y * m + k] + d * h[k];
                    dh[t * m + k] = dh[t * m + k] + d * self.emission[y * m + k];
                }
            }
        }
        for t in 0..rows {
            for k in 0..m {
                let d = dh[t * m + k];
                grad.conv_bias[k] = grad.conv_bias[k] + d;
                for o in 0..w {
                    let src = t as isize + o as isize - r as isize;
                    if src < 0 || src >= rows as isize {
                        continue;
                    }
                    let row = x.row(src as usize);
                    let g = &mut grad.conv[(k * w + o) * n..(k * w + o + 1) * n];
                    for (gj, xj) in g.iter_mut().zip(row) {
                        if *xj != T::zero() {
                            *gj = *gj + d * *xj;
                        }
                    }
                }
            }
        }
        Ok(nll)
    }

    pub fn squared_norm(&self) -> T {
        ParamGroup::ALL
            .iter()
            .flat_map(|g| self.group(*g).iter().enumerate().filter(move |(i, _)| Self::is_free(*g, *i)))
            .fold(T::zero(), |acc, (_, v)| acc + *v * *v)
    }

    /// `self -= step * grad` on trainable entries.
    pub fn descend(&mut self, grad: &Gradient<T>, step: T) {
        for g in ParamGroup::ALL {
            let src = grad.group(g).to_vec();
            for (i, (p, d)) in self.group_mut(g).iter_mut().zip(src).enumerate() {
                if Self::is_free(g, i) {
                    *p = *p - step * d;
                }
            }
        }
    }
}

/// Exact argmax sequence. On exact ties the lower label index wins.
pub fn viterbi<T: Real>(emissions: &[T], rows: usize, trans: impl Fn(usize, usize) -> T) -> (Vec<Label>, T) {
    if rows == 0 {
        return (Vec::new(), T::zero());
    }
    let mut score = vec![T::neg_infinity(); rows * L];
    let mut back = vec![0usize; rows * L];
    for y in 0..L {
        if start_allowed(y) {
            score[y] = emissions[y];
        }
    }
    for t in 1..rows {
        for y in 0..L {
            let mut best = T::neg_infinity();
            let mut arg = 0;
            for p in 0..L {
                let s = score[(t - 1) * L + p] + trans(p, y);
                if s > best {
                    best = s;
                    arg = p;
                }
            }
            score[t * L + y] = best + emissions[t * L + y];
            back[t * L + y] = arg;
        }
    }
    let last = &score[(rows - 1) * L..];
    let mut arg = 0;
    let mut best = T::neg_infinity();
    for (y, s) in last.iter().enumerate() {
        if *s > best {
            best = *s;
            arg = y;
        }
    }
    let mut path = vec![0usize; rows];
    path[rows - 1] = arg;
    for t in (1..rows).rev() {
        path[t - 1] = back[t * L + path[t]];
    }
    (path.into_iter().map(Label::from_index).collect(), best)
}

/// Forward log-messages and the log-partition.
pub fn forward<T: Real>(emissions: &[T], rows: usize, trans: impl Fn(usize, usize) -> T) -> (Vec<T>, T) {
    let mut alpha = vec![T::neg_infinity(); rows * L];
    if rows == 0 {
        return (alpha, T::zero());
    }
    for y in 0..L {
        if start_allowed(y) {
            alpha[y] = emissions[y];
        }
    }
    for t in 1..rows {
        for y in 0..L {
            let prev = &alpha[(t - 1) * L..t * L];
            let acc = log_sum_exp((0..L).map(|p| prev[p] + trans(p, y)));
            alpha[t * L + y] = acc + emissions[t * L + y];
        }
    }
    let log_z = log_sum_exp(alpha[(rows - 1) * L..].iter().copied());
    (alpha, log_z)
}

pub struct ForwardBackward<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub log_z: T,
    /// Per-position label marginals (`len × labels`).
    pub unary: Vec<T>,
}

pub fn forward_backward<T: Real>(
    emissions: &[T],
    rows: usize,
    trans: impl Fn(usize, usize) -> T,
) -> ForwardBackward<T> {
    let (alpha, log_z) = forward(emissions, rows, &trans);
    let mut beta = vec![T::neg_infinity(); rows * L];
    if rows > 0 {
        for y in 0..L {
            beta[(rows - 1) * L + y] = T::zero();
        }
    }
    for t in (0..rows.saturating_sub(1)).rev() {
        for y in 0..L {
            let next = &beta[(t + 1) * L..(t + 2) * L];
            beta[t * L + y] =
                log_sum_exp((0..L).map(|b| trans(y, b) + emissions[(t + 1) * L + b] + next[b]));
        }
    }
    let unary = alpha
        .iter()
        .zip(&beta)
        .map(|(a, b)| {
            let v = *a + *b - log_z;
            if v == T::neg_infinity() {
                T::zero()
            } else {
                v.exp()
            }
        })
        .collect();
    ForwardBackward { alpha, beta, log_z, unary }
}

/// Versioned on-disk form of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub labels: Vec<Label>,
    pub conv: Vec<f64>,
    pub conv_bias: Vec<f64>,
    pub emission: Vec<f64>,
    pub transitions: Vec<f64>,
}

pub const MODEL_FORMAT: &str = "statviz-tagger";
pub const MODEL_VERSION: u32 = 1;

impl<T: Real> ConvCrf<T> {
    pub fn to_file(&self) -> ModelFile {
        let f = |v: &[T]| v.iter().map(|x| x.to_f64().unwrap()).collect();
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            labels: Label::ALL.to_vec(),
            conv: f(&self.conv),
            conv_bias: f(&self.conv_bias),
            emission: f(&self.emission),
            transitions: f(&self.transitions),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self, TextError> {
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(TextError::Model(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        if file.labels != Label::ALL {
            return Err(TextError::Model("label set differs from this build".into()));
        }
        let shape = Self::zeros(file.config.clone());
        let conv = |v: Vec<f64>, expected: usize, what: &str| -> Result<Vec<T>, TextError> {
            if v.len() != expected {
                return Err(TextError::Model(format!("{what}: expected {expected} weights, found {}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(TextError::Model(format!("{what}: non-finite weight")));
            }
            Ok(v.into_iter().map(T::of).collect())
        };
        Ok(ConvCrf {
            conv: conv(file.conv, shape.conv.len(), "conv")?,
            conv_bias: conv(file.conv_bias, shape.conv_bias.len(), "conv_bias")?,
            emission: conv(file.emission, shape.emission.len(), "emission")?,
            transitions: conv(file.transitions, shape.transitions.len(), "transitions")?,
            config: file.config,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TextError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| TextError::Model(e.to_string()))?;
        Self::from_file(file)
    }
}
