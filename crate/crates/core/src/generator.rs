//! Synthetic text from the random-walk log-linear model.
//!
//! A latent discourse vector `c_t` drifts on the unit sphere; at each step a
//! word `w` is emitted with probability `exp(⟨v_w, c_t⟩) / Z_c`. Word vectors
//! are drawn from the prior `v = s · v̂`, `v̂ ~ N(0, I_d)`, `s ≤ κ`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{dot, norm};
use crate::rng::{roles, CounterRng};

/// Tolerance used for "is a unit vector" preconditions.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Distribution of the per-word scale `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleLaw {
    /// `s ~ Uniform[0, κ·upper_fraction]`, truncated at `κ`.
    Uniform { upper_fraction: f64 },
    /// `s ≡ scale` (truncated at `κ`).
    Fixed { scale: f64 },
}

impl Default for ScaleLaw {
    fn default() -> Self {
        ScaleLaw::Uniform {
            upper_fraction: DEFAULT_UPPER_FRACTION,
        }
    }
}

/// Default `u_max` for the uniform law: with `κ = 5`, `s ~ U[0, 1.75]`.
pub const DEFAULT_UPPER_FRACTION: f64 = 0.35;

impl ScaleLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            ScaleLaw::Uniform { upper_fraction } if !(upper_fraction > 0.0) => Err(Error::param(
                format!("uniform scale fraction must be positive, got {upper_fraction}"),
            )),
            ScaleLaw::Fixed { scale } if !(scale >= 0.0) => Err(Error::param(format!(
                "fixed scale must be nonnegative, got {scale}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, cap: f64, rng: &mut CounterRng) -> f64 {
        match *self {
            ScaleLaw::Uniform { upper_fraction } => (rng.next_f64() * cap * upper_fraction).min(cap),
            ScaleLaw::Fixed { scale } => scale.min(cap),
        }
    }

    /// `τ = E[s]` after truncation at `cap`.
    pub fn mean(&self, cap: f64) -> f64 {
        match *self {
            ScaleLaw::Uniform { upper_fraction } => {
                let upper = cap * upper_fraction;
                if upper <= cap {
                    upper / 2.0
                } else {
                    // E[min(U, κ)] for U ~ U[0, u]: κ - κ²/(2u).
                    cap - cap * cap / (2.0 * upper)
                }
            }
            ScaleLaw::Fixed { scale } => scale.min(cap),
        }
    }
}

/// Prior parameters recorded on sampled ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    /// κ
    pub scale_cap: f64,
    /// τ
    pub scale_mean: f64,
    pub scale_law: ScaleLaw,
}

/// Vocabulary-indexed set of `n` word vectors of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorEnsemble {
    dim: usize,
    vectors: Vec<f64>,
    labels: Vec<String>,
    prior: Option<Prior>,
}

impl WordVectorEnsemble {
    /// Wraps row-major vectors; words are labelled by their index.
    pub fn from_vectors(dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 || vectors.is_empty() || !vectors.len().is_multiple_of(dim) {
            return Err(Error::param(format!(
                "{} values do not form vectors of dimension {dim}",
                vectors.len()
            )));
        }
        if let Some(pos) = vectors.iter().position(|x| !x.is_finite()) {
            return Err(Error::param(format!(
                "non-finite coordinate in word {}",
                pos / dim
            )));
        }
        let n = vectors.len() / dim;
        Ok(Self {
            dim,
            vectors,
            labels: (0..n).map(|i| i.to_string()).collect(),
            prior: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return Err(Error::param(format!("word {i} has the wrong dimension")));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::from_vectors(dim, data)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::param(format!(
                "{} labels for {} words",
                labels.len(),
                self.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn vector(&self, w: usize) -> &[f64] {
        &self.vectors[w * self.dim..(w + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vectors
    }

    pub fn label(&self, w: usize) -> &str {
        &self.labels[w]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prior(&self) -> Option<&Prior> {
        self.prior.as_ref()
    }

    pub fn norms(&self) -> Vec<f64> {
        (0..self.len()).map(|w| norm(self.vector(w))).collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.norms().into_iter().fold(0.0, f64::max)
    }

    /// Copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.vectors.iter_mut().for_each(|x| *x *= factor);
        out.prior = None;
        out
    }

    /// Copy with every vector rescaled to unit norm (zero vectors stay zero).
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for row in out.vectors.chunks_mut(self.dim) {
            let n = norm(row);
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
        out.prior = None;
        out
    }

    fn check_unit(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.dim {
            return Err(Error::param(format!(
                "discourse vector has dimension {}, ensemble has {}",
                c.len(),
                self.dim
            )));
        }
        let n = norm(c);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Precondition(format!(
                "discourse vector must be unit norm, got ‖c‖ = {n}"
            )));
        }
        Ok(())
    }

    fn logits_into(&self, c: &[f64], out: &mut [f64]) {
        for (w, o) in out.iter_mut().enumerate() {
            *o = dot(self.vector(w), c);
        }
    }
}

/// Draws `n` i.i.d. word vectors `s · v̂` from the prior.
///
/// Word `w` uses its own counter stream, so the result does not depend on
/// how the work is split across threads. A vector whose norm would exceed
/// `κ√d` (possible only when `s` is near `κ` and `‖v̂‖ > √d`) is shrunk onto
/// that radius.
pub fn sample_ensemble(
    n: usize,
    dim: usize,
    scale_cap: f64,
    scale_law: ScaleLaw,
    seed: u64,
) -> Result<WordVectorEnsemble> {
    if n < 2 {
        return Err(Error::param(format!("vocabulary size must be ≥ 2, got {n}")));
    }
    if dim == 0 || dim > n {
        return Err(Error::param(format!(
            "dimension must satisfy 1 ≤ d ≤ n, got d = {dim}, n = {n}"
        )));
    }
    if !(scale_cap > 0.0) || !scale_cap.is_finite() {
        return Err(Error::param(format!("κ must be positive, got {scale_cap}")));
    }
    scale_law.validate()?;

    let radius = scale_cap * (dim as f64).sqrt();
    let mut vectors = vec![0.0; n * dim];
    vectors
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(w, row)| {
            let mut rng = CounterRng::for_stream(seed, roles::ENSEMBLE, w as u64);
            let s = scale_law.sample(scale_cap, &mut rng);
            rng.fill_normal(row);
            let mut len = 0.0;
            for x in row.iter_mut() {
                *x *= s;
                len += *x * *x;
            }
            let len = len.sqrt();
            if len > radius {
                let shrink = radius / len;
                row.iter_mut().for_each(|x| *x *= shrink);
            }
        });
    let mut ens = WordVectorEnsemble::from_vectors(dim, vectors)?;
    ens.prior = Some(Prior {
        scale_cap,
        scale_mean: scale_law.mean(scale_cap),
        scale_law,
    });
    Ok(ens)
}

/// How emissions are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmissionSampler {
    /// Inverse CDF over the full probability vector at every step.
    FullCdf,
    /// Exact rejection sampling against a cached reference discourse; the
    /// reference is refreshed when the walk has drifted far enough that the
    /// acceptance bound drops below `e^-1`.
    #[default]
    CachedReference,
}

/// Parameters of the latent discourse walk and corpus length.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscourseWalkConfig {
    pub dim: usize,
    /// ε₂: every step moves `c` by at most `ε₂/√d`.
    pub step_bound: f64,
    /// Corpus length `T`.
    pub length: usize,
    pub seed: u64,
    /// Probability of an occasional jump to a fresh uniform discourse.
    pub jump_probability: f64,
    pub sampler: EmissionSampler,
}

impl DiscourseWalkConfig {
    pub fn new(dim: usize, step_bound: f64, length: usize, seed: u64) -> Self {
        Self {
            dim,
            step_bound,
            length,
            seed,
            jump_probability: 0.0,
            sampler: EmissionSampler::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::param("walk dimension must be ≥ 1"));
        }
        if !(self.step_bound >= 0.0) || !self.step_bound.is_finite() {
            return Err(Error::param(format!(
                "step bound must be finite and nonnegative, got {}",
                self.step_bound
            )));
        }
        if self.length == 0 {
            return Err(Error::param("corpus length must be ≥ 1"));
        }
        if !(0.0..=1.0).contains(&self.jump_probability) {
            return Err(Error::param(format!(
                "jump probability must lie in [0, 1], got {}",
                self.jump_probability
            )));
        }
        Ok(())
    }

    /// Largest ℓ₂ displacement of a regular step, `ε₂/√d`.
    pub fn max_step(&self) -> f64 {
        self.step_bound / (self.dim as f64).sqrt()
    }
}

/// One transition of the discourse walk.
///
/// The proposal is a Gaussian displacement in the tangent space at `c`,
/// clipped to length `ε₂/√d` and projected back onto the sphere. The proposal
/// density depends only on the angle between `c` and `c'`, so it is symmetric
/// and the Metropolis acceptance against the uniform law is always 1; the
/// uniform distribution on the sphere is stationary.
pub fn walk_step(c: &[f64], config: &DiscourseWalkConfig, rng: &mut CounterRng) -> Result<Vec<f64>> {
    if c.len() != config.dim {
        return Err(Error::param(format!(
            "discourse vector has dimension {}, walk has {}",
            c.len(),
            config.dim
        )));
    }
    let n = norm(c);
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Precondition(format!(
            "discourse vector must be unit norm, got ‖c‖ = {n}"
        )));
    }
    let mut out = c.to_vec();
    let mut scratch = vec![0.0; config.dim];
    step_in_place(&mut out, &mut scratch, config, rng);
    Ok(out)
}

fn step_in_place(c: &mut [f64], scratch: &mut [f64], config: &DiscourseWalkConfig, rng: &mut CounterRng) {
    let d = c.len();
    if config.jump_probability > 0.0 && rng.next_f64() < config.jump_probability {
        let fresh = rng.unit_vector(d);
        c.copy_from_slice(&fresh);
        return;
    }
    if config.step_bound == 0.0 || d < 2 {
        return;
    }
    let max_step = config.max_step();
    // Typical tangential norm σ√(d-1) equals the bound before clipping.
    let sigma = max_step / ((d - 1) as f64).sqrt();
    for g in scratch.iter_mut() {
        *g = rng.next_normal() * sigma;
    }
    let radial = dot(scratch, c);
    for (g, ci) in scratch.iter_mut().zip(c.iter()) {
        *g -= radial * ci;
    }
    let len = norm(scratch);
    let shrink = if len > max_step { max_step / len } else { 1.0 };
    for (ci, g) in c.iter_mut().zip(scratch.iter()) {
        *ci += shrink * g;
    }
    let len = norm(c);
    c.iter_mut().for_each(|x| *x /= len);
}

/// `p_w = exp(⟨v_w, c⟩) / Z_c` for a unit discourse vector `c`.
pub fn emission_probs(c: &[f64], ensemble: &WordVectorEnsemble) -> Result<Vec<f64>> {
    ensemble.check_unit(c)?;
    let mut p = vec![0.0; ensemble.len()];
    ensemble.logits_into(c, &mut p);
    let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in p.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// `Z_c = Σ_w exp(⟨v_w, c⟩)` for any `c` (not only unit vectors).
pub fn partition_function(c: &[f64], ensemble: &WordVectorEnsemble) -> Result<f64> {
    if c.len() != ensemble.dim() {
        return Err(Error::param(format!(
            "vector has dimension {}, ensemble has {}",
            c.len(),
            ensemble.dim()
        )));
    }
    Ok((0..ensemble.len())
        .map(|w| dot(ensemble.vector(w), c).exp())
        .sum())
}

/// Token stream over a vocabulary of `vocab_size` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    vocab_size: usize,
    tokens: Vec<u32>,
}

impl Corpus {
    pub fn new(vocab_size: usize, tokens: Vec<u32>) -> Result<Self> {
        if let Some(pos) = tokens.iter().position(|&t| t as usize >= vocab_size) {
            return Err(Error::data(
                format!("token position {pos}"),
                format!("index {} is outside the vocabulary of {vocab_size}", tokens[pos]),
            ));
        }
        Ok(Self { vocab_size, tokens })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_tokens(self) -> Vec<u32> {
        self.tokens
    }
}

/// Emission blocks have a fixed size so that output never depends on the
/// number of worker threads.
const EMIT_BLOCK: usize = 4096;
const BLOCKS_PER_BATCH: usize = 32;
/// Reference refresh threshold on `max‖v‖ · ‖c - c_ref‖`.
const REFRESH_BOUND: f64 = 1.0;

/// Generates a corpus of `config.length` tokens.
///
/// `c₀` is uniform on the sphere; token `t` is drawn from
/// `emission_probs(c_t)` and the walk then advances. The walk consumes the
/// `WALK` stream sequentially; token `t` draws from its own `EMISSION`
/// stream, so emission runs in parallel over fixed blocks.
pub fn generate_corpus(ensemble: &WordVectorEnsemble, config: &DiscourseWalkConfig) -> Result<Corpus> {
    config.validate()?;
    if ensemble.dim() != config.dim {
        return Err(Error::param(format!(
            "ensemble dimension {} does not match walk dimension {}",
            ensemble.dim(),
            config.dim
        )));
    }
    let d = config.dim;
    let total = config.length;
    let vmax = ensemble.max_norm();
    let mut walk_rng = CounterRng::new(config.seed, roles::WALK);
    let mut c = walk_rng.unit_vector(d);
    let mut scratch = vec![0.0; d];
    let mut tokens = vec![0u32; total];
    let batch = EMIT_BLOCK * BLOCKS_PER_BATCH;
    let mut states = vec![0.0; batch.min(total) * d];

    let mut start = 0;
    while start < total {
        let len = batch.min(total - start);
        for row in states[..len * d].chunks_mut(d) {
            row.copy_from_slice(&c);
            step_in_place(&mut c, &mut scratch, config, &mut walk_rng);
        }
        tokens[start..start + len]
            .par_chunks_mut(EMIT_BLOCK)
            .zip(states[..len * d].par_chunks(EMIT_BLOCK * d))
            .enumerate()
            .for_each(|(b, (out, block_states))| {
                let first = start + b * EMIT_BLOCK;
                match config.sampler {
                    EmissionSampler::FullCdf => {
                        emit_full(ensemble, config.seed, first, block_states, out)
                    }
                    EmissionSampler::CachedReference => {
                        emit_cached(ensemble, vmax, config.seed, first, block_states, out)
                    }
                }
            });
        start += len;
    }
    Corpus::new(ensemble.len(), tokens)
}

fn emit_full(ens: &WordVectorEnsemble, seed: u64, first: usize, states: &[f64], out: &mut [u32]) {
    let d = ens.dim();
    let mut cdf = vec![0.0; ens.len()];
    for (k, slot) in out.iter_mut().enumerate() {
        let c = &states[k * d..(k + 1) * d];
        let total = fill_cdf(ens, c, &mut cdf);
        let mut rng = CounterRng::for_stream(seed, roles::EMISSION, (first + k) as u64);
        *slot = search_cdf(&cdf, rng.next_f64() * total) as u32;
    }
}

fn emit_cached(
    ens: &WordVectorEnsemble,
    vmax: f64,
    seed: u64,
    first: usize,
    states: &[f64],
    out: &mut [u32],
) {
    let d = ens.dim();
    let mut cdf = vec![0.0; ens.len()];
    let mut reference = states[..d].to_vec();
    let mut total = fill_cdf(ens, &reference, &mut cdf);
    let mut delta = vec![0.0; d];
    for (k, slot) in out.iter_mut().enumerate() {
        let c = &states[k * d..(k + 1) * d];
        for ((dl, ci), ri) in delta.iter_mut().zip(c).zip(&reference) {
            *dl = ci - ri;
        }
        let mut bound = vmax * norm(&delta);
        if bound > REFRESH_BOUND {
            reference.copy_from_slice(c);
            total = fill_cdf(ens, &reference, &mut cdf);
            delta.iter_mut().for_each(|x| *x = 0.0);
            bound = 0.0;
        }
        let mut rng = CounterRng::for_stream(seed, roles::EMISSION, (first + k) as u64);
        *slot = loop {
            let w = search_cdf(&cdf, rng.next_f64() * total);
            if bound == 0.0 {
                break w as u32;
            }
            // Accept with probability exp(⟨v_w, c - c_ref⟩ - bound) ≤ 1.
            let log_accept = dot(ens.vector(w), &delta) - bound;
            if rng.next_f64() < log_accept.exp() {
                break w as u32;
            }
        };
    }
}

/// Fills `cdf` with cumulative unnormalized weights `exp(⟨v_w,c⟩ - max)` and
/// returns the total.
fn fill_cdf(ens: &WordVectorEnsemble, c: &[f64], cdf: &mut [f64]) -> f64 {
    ens.logits_into(c, cdf);
    let max = cdf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    for x in cdf.iter_mut() {
        acc += (*x - max).exp();
        *x = acc;
    }
    acc
}

/// First index whose cumulative weight exceeds `target`.
fn search_cdf(cdf: &[f64], target: f64) -> usize {
    cdf.partition_point(|&x| x <= target).min(cdf.len() - 1)
}

/// Maximum-a-posteriori discourse for a window of words: the normalized sum
/// of their vectors.
pub fn map_discourse(ensemble: &WordVectorEnsemble, window: &[usize]) -> Result<Vec<f64>> {
    if window.is_empty() {
        return Err(Error::param("window must contain at least one word"));
    }
    let mut sum = vec![0.0; ensemble.dim()];
    let mut scale = 0.0;
    for &w in window {
        if w >= ensemble.len() {
            return Err(Error::param(format!(
                "word {w} is outside the vocabulary of {}",
                ensemble.len()
            )));
        }
        let v = ensemble.vector(w);
        crate::numerics::axpy(1.0, v, &mut sum);
        scale += norm(v);
    }
    let len = norm(&sum);
    if len <= 1e-12 * scale.max(1.0) {
        return Err(Error::Degenerate(
            "word vectors in the window sum to zero".into(),
        ));
    }
    sum.iter_mut().for_each(|x| *x /= len);
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_is_reproducible() {
        let law = ScaleLaw::Uniform { upper_fraction: 1.0 };
        let a = sample_ensemble(3, 2, 5.0, law, 7).unwrap();
        let b = sample_ensemble(3, 2, 5.0, law, 7).unwrap();
        assert_eq!(a.len(), 3);
        let bits = |e: &WordVectorEnsemble| e.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = sample_ensemble(3, 2, 5.0, law, 8).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn tiny_cap_is_enforced() {
        let ens = sample_ensemble(2, 1, 0.001, ScaleLaw::Uniform { upper_fraction: 1.0 }, 3).unwrap();
        for n in ens.norms() {
            assert!(n <= 0.001 + 1e-18);
        }
        // Caps hold for any law, including one that asks for s > κ.
        let ens = sample_ensemble(50, 4, 0.5, ScaleLaw::Fixed { scale: 10.0 }, 3).unwrap();
        for n in ens.norms() {
            assert!(n <= 0.5 * 2.0 + 1e-12);
        }
    }

    #[test]
    fn invalid_dimensions_are_rejected() {
        let law = ScaleLaw::default();
        assert!(sample_ensemble(1, 1, 5.0, law, 0).is_err());
        assert!(sample_ensemble(3, 0, 5.0, law, 0).is_err());
        assert!(sample_ensemble(3, 4, 5.0, law, 0).is_err());
        assert!(sample_ensemble(3, 2, 0.0, law, 0).is_err());
        assert!(sample_ensemble(3, 2, 5.0, ScaleLaw::Uniform { upper_fraction: 0.0 }, 0).is_err());
    }

    #[test]
    fn scale_mean_accounts_for_truncation() {
        let law = ScaleLaw::Uniform { upper_fraction: 2.0 };
        // s = min(U[0,10], 5): E = 5 - 25/20 = 3.75.
        assert!((law.mean(5.0) - 3.75).abs() < 1e-15);
        assert_eq!(ScaleLaw::Uniform { upper_fraction: 0.4 }.mean(5.0), 1.0);
    }

    #[test]
    fn zero_step_leaves_discourse_fixed() {
        let cfg = DiscourseWalkConfig::new(3, 0.0, 1, 0);
        let c = vec![0.6, 0.0, 0.8];
        let mut rng = CounterRng::new(1, roles::WALK);
        assert_eq!(walk_step(&c, &cfg, &mut rng).unwrap(), c);
    }

    #[test]
    fn steps_are_bounded_and_unit() {
        let cfg = DiscourseWalkConfig::new(10, 0.3, 1, 0);
        let mut rng = CounterRng::new(2, roles::WALK);
        let mut c = rng.unit_vector(10);
        for _ in 0..10_000 {
            let next = walk_step(&c, &cfg, &mut rng).unwrap();
            let moved: f64 = next.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(moved <= cfg.max_step() * (1.0 + 1e-12));
            assert!((norm(&next) - 1.0).abs() <= 1e-12);
            c = next;
        }
    }

    #[test]
    fn non_unit_input_is_a_precondition_error() {
        let cfg = DiscourseWalkConfig::new(2, 0.1, 1, 0);
        let mut rng = CounterRng::new(0, 0);
        assert!(matches!(
            walk_step(&[1.0, 1.0], &cfg, &mut rng),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn two_word_softmax() {
        let ens = WordVectorEnsemble::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let p = emission_probs(&[1.0, 0.0], &ens).unwrap();
        let e2 = 2f64.exp();
        assert!((p[0] - e2 / (e2 + 1.0)).abs() < 1e-15);
        assert!((p[1] - 1.0 / (e2 + 1.0)).abs() < 1e-15);
        assert!((p[0] - 0.88080).abs() < 1e-5);
    }

    #[test]
    fn identical_vectors_give_uniform_emission() {
        let ens = WordVectorEnsemble::from_rows(&[[0.3, 0.4]; 4]).unwrap();
        let p = emission_probs(&[0.0, 1.0], &ens).unwrap();
        for x in p {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_function_values() {
        let ens = WordVectorEnsemble::from_rows(&[[0.5, -1.0], [2.0, 0.1], [0.0, 0.0]]).unwrap();
        assert_eq!(partition_function(&[0.0, 0.0], &ens).unwrap(), 3.0);
        let single = WordVectorEnsemble::from_rows(&[[2.0, 0.0]]).unwrap();
        let z = partition_function(&[1.0, 0.0], &single).unwrap();
        assert!((z - 7.389056).abs() < 1e-6);
    }

    #[test]
    fn generation_is_deterministic_and_dimension_checked() {
        let ens = sample_ensemble(30, 5, 5.0, ScaleLaw::default(), 1).unwrap();
        let cfg = DiscourseWalkConfig::new(5, 0.1, 5000, 9);
        let a = generate_corpus(&ens, &cfg).unwrap();
        let b = generate_corpus(&ens, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5000);
        let bad = DiscourseWalkConfig::new(4, 0.1, 10, 9);
        assert!(generate_corpus(&ens, &bad).is_err());
    }

    #[test]
    fn single_token_corpus() {
        let ens = sample_ensemble(10, 3, 5.0, ScaleLaw::default(), 2).unwrap();
        let corpus = generate_corpus(&ens, &DiscourseWalkConfig::new(3, 0.1, 1, 4)).unwrap();
        assert_eq!(corpus.len(), 1);
        assert!((corpus.tokens()[0] as usize) < 10);
    }

    #[test]
    fn map_of_single_word_is_its_direction() {
        let ens = WordVectorEnsemble::from_rows(&[[3.0, 4.0], [-3.0, -4.0], [1.0, 0.0]]).unwrap();
        assert_eq!(map_discourse(&ens, &[0]).unwrap(), vec![0.6, 0.8]);
        assert!(matches!(map_discourse(&ens, &[0, 1]), Err(Error::Degenerate(_))));
        assert!(map_discourse(&ens, &[]).is_err());
    }

    #[test]
    fn corpus_rejects_out_of_range_tokens() {
        match Corpus::new(3, vec![0, 1, 3]) {
            Err(Error::Data { location, .. }) => assert!(location.contains('2')),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prior_moments_match_monte_carlo() {
        use rand::{Rng, SeedableRng};
        use rand_distr::StandardNormal;
        let (n, d, kappa) = (10_000, 100, 5.0);
        let law = ScaleLaw::default();
        let ens = sample_ensemble(n, d, kappa, law, 11).unwrap();
        let scaled: Vec<f64> = ens.norms().iter().map(|x| x / (d as f64).sqrt()).collect();
        let m = crate::numerics::stats::mean(&scaled);
        let se = crate::numerics::stats::std_dev(&scaled) / (n as f64).sqrt();

        // Independent oracle: 10⁶ draws of s·‖v̂‖/√d with a different generator.
        let mut rng = rand::rngs::StdRng::seed_from_u64(99);
        let upper = kappa * DEFAULT_UPPER_FRACTION;
        let draws = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let s: f64 = rng.random_range(0.0..upper);
            let sq: f64 = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
            acc += (s * sq.sqrt()).min(kappa * (d as f64).sqrt()) / (d as f64).sqrt();
        }
        let oracle = acc / draws as f64;
        assert!((m - oracle).abs() <= 3.0 * se, "mean {m} oracle {oracle} se {se}");
    }

    #[test]
    fn walk_long_run_mean_is_centred() {
        // d=3, ε₂=0.1, 10⁶ steps. Successive states are strongly correlated
        // (≈2/δ² steps per decorrelation), so the band uses batch means.
        let cfg = DiscourseWalkConfig::new(3, 0.1, 0, 1);
        let mut rng = CounterRng::new(1, 1);
        let mut c = rng.unit_vector(3);
        let (batches, per) = (100, 10_000);
        let mut means = vec![[0.0; 3]; batches];
        for b in means.iter_mut() {
            for _ in 0..per {
                c = walk_step(&c, &cfg, &mut rng).unwrap();
                for k in 0..3 {
                    b[k] += c[k] / per as f64;
                }
            }
        }
        for k in 0..3 {
            let col: Vec<f64> = means.iter().map(|b| b[k]).collect();
            let m = crate::numerics::stats::mean(&col);
            let se = crate::numerics::stats::std_dev(&col) / (batches as f64).sqrt();
            assert!(se < 0.04, "coordinate {k}: batch se {se}");
            assert!(m.abs() <= 4.0 * se, "coordinate {k}: mean {m} se {se}");
        }
    }

    #[test]
    fn fixed_discourse_corpus_is_multinomial() {
        let (n, t) = (50, 100_000);
        let ens = sample_ensemble(n, 10, 5.0, ScaleLaw::Uniform { upper_fraction: 1.0 }, 4).unwrap();
        for sampler in [EmissionSampler::FullCdf, EmissionSampler::CachedReference] {
            let mut cfg = DiscourseWalkConfig::new(10, 0.0, t, 9);
            cfg.sampler = sampler;
            let corpus = generate_corpus(&ens, &cfg).unwrap();
            let c0 = CounterRng::new(9, roles::WALK).unit_vector(10);
            let p = emission_probs(&c0, &ens).unwrap();
            let mut counts = vec![0.0; n];
            for &w in corpus.tokens() {
                counts[w as usize] += 1.0;
            }
            let mut chi2 = 0.0;
            for w in 0..n {
                let e = t as f64 * p[w];
                let sd = (e * (1.0 - p[w])).sqrt();
                assert!((counts[w] - e).abs() <= 3.0 * sd.max(1.0), "{sampler:?} word {w}: {} vs {e}", counts[w]);
                chi2 += (counts[w] - e).powi(2) / e;
            }
            // 99.9% point of χ² with 49 degrees of freedom.
            assert!(chi2 < 85.35, "{sampler:?}: χ² = {chi2}");
        }
    }

    #[test]
    fn softmax_and_partition_match_direct_sums() {
        let ens = sample_ensemble(100, 6, 5.0, ScaleLaw::Uniform { upper_fraction: 1.0 }, 2).unwrap();
        let c = CounterRng::new(3, 3).unit_vector(6);
        let z = partition_function(&c, &ens).unwrap();
        let direct: Vec<f64> = (0..100)
            .map(|w| ens.vector(w).iter().zip(&c).map(|(a, b)| a * b).sum::<f64>().exp())
            .collect();
        let zd: f64 = direct.iter().sum();
        assert!((z - zd).abs() <= 1e-12 * zd);
        let small = WordVectorEnsemble::from_vectors(6, ens.as_slice()[..30].to_vec()).unwrap();
        let p = emission_probs(&c, &small).unwrap();
        let zs: f64 = direct[..5].iter().sum();
        for w in 0..5 {
            assert!((p[w] - direct[w] / zs).abs() <= 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn map_discourse_maximizes_window_likelihood() {
        let ens = sample_ensemble(20, 4, 5.0, ScaleLaw::Uniform { upper_fraction: 1.0 }, 8).unwrap();
        let window = [2, 7, 11];
        let map = map_discourse(&ens, &window).unwrap();
        let sum: Vec<f64> = (0..4).map(|k| window.iter().map(|&w| ens.vector(w)[k]).sum()).collect();
        let mut rng = CounterRng::new(1, 5);
        let (mut best, mut best_score) = (vec![0.0; 4], f64::NEG_INFINITY);
        for _ in 0..1_000_000 {
            let c = rng.unit_vector(4);
            let s = dot(&sum, &c);
            if s > best_score {
                best_score = s;
                best = c;
            }
        }
        let angle = dot(&best, &map).clamp(-1.0, 1.0).acos();
        assert!(angle <= 0.05, "angle {angle}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn walk_steps_stay_bounded_on_the_sphere(seed in 0u64..u64::MAX, d in 2usize..40, eps in 0.0f64..2.0, jump in proptest::bool::ANY) {
            let mut cfg = DiscourseWalkConfig::new(d, eps, 0, seed);
            let mut rng = CounterRng::new(seed, 2);
            let mut c = rng.unit_vector(d);
            for _ in 0..50 {
                let next = walk_step(&c, &cfg, &mut rng).unwrap();
                let moved: f64 = norm(&next.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>());
                proptest::prop_assert!((norm(&next) - 1.0).abs() <= 1e-12);
                proptest::prop_assert!(moved <= cfg.max_step() * (1.0 + 1e-12) + 1e-15);
                c = next;
            }
            if jump {
                cfg.jump_probability = 0.5;
                let next = walk_step(&c, &cfg, &mut rng).unwrap();
                proptest::prop_assert!((norm(&next) - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn emission_probabilities_sum_to_one(seed in 0u64..10_000, n in 2usize..60, d in 1usize..10) {
            let d = d.min(n);
            let ens = sample_ensemble(n, d, 5.0, ScaleLaw::Uniform { upper_fraction: 1.0 }, seed).unwrap();
            let c = CounterRng::new(seed, 4).unit_vector(d);
            let p = emission_probs(&c, &ens).unwrap();
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
