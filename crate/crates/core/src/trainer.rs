//! Weighted least-squares embedding objectives trained by AdaGrad.
//!
//! SN:  `Σ min(X, X_max) · (log X − ‖v_w + v_w'‖² − C)²`
//! PMI: `Σ min(X, X_max) · (PMI(w,w') − ⟨v_w, v_w'⟩)²`
//!
//! The sums run over stored cells (`w ≤ w'`). The SN form is fitted as
//! written, so its vectors are `√(2d)`-scaled relative to the generator's.

use rayon::prelude::*;

use crate::cooccur::CooccurrenceTable;
use crate::error::{Error, Result};
use crate::generator::WordVectorEnsemble;
use crate::numerics::{dot, DenseMatrix};
use crate::rng::{roles, CounterRng};

pub const ADAGRAD_DELTA: f64 = 1e-8;
/// Cells per gradient shard. Fixed so reductions never depend on threads.
pub const SHARD_CELLS: usize = 8192;
const SHARDS_PER_GROUP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Sn,
    Pmi,
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sn" => Ok(Objective::Sn),
            "pmi" => Ok(Objective::Pmi),
            other => Err(Error::param(format!("unknown objective `{other}` (sn | pmi)"))),
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::Sn => "sn",
            Objective::Pmi => "pmi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    FullBatch,
    /// One AdaGrad step per shard of `shard_cells` cells, shards visited in
    /// a seeded order each epoch.
    Sharded { shard_cells: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub objective: Objective,
    pub dim: usize,
    pub x_max: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Initial `C`; `None` means the mean `log X` over counted cells.
    pub constant_init: Option<f64>,
    pub batch: BatchMode,
}

impl TrainingConfig {
    pub fn new(objective: Objective, dim: usize, seed: u64) -> Self {
        Self {
            objective,
            dim,
            x_max: 100.0,
            learning_rate: 0.05,
            iterations: 100,
            seed,
            constant_init: None,
            batch: BatchMode::FullBatch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::param("dim must be ≥ 1"));
        }
        if !(self.x_max > 0.0) {
            return Err(Error::param(format!("x_max must be positive, got {}", self.x_max)));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::param(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if let Some(c) = self.constant_init {
            if !c.is_finite() {
                return Err(Error::param("constant_init must be finite"));
            }
        }
        if let BatchMode::Sharded { shard_cells: 0 } = self.batch {
            return Err(Error::param("shard size must be ≥ 1"));
        }
        Ok(())
    }
}

/// One weighted cell of an objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub i: u32,
    pub j: u32,
    pub weight: f64,
    /// `log X` for SN, `PMI` for PMI.
    pub target: f64,
}

/// The cells an objective is summed over.
#[derive(Debug, Clone, PartialEq)]
pub struct Terms {
    pub objective: Objective,
    pub terms: Vec<Term>,
    /// Cells dropped because their PMI is undefined (zero marginal).
    pub excluded: usize,
}

impl Terms {
    pub fn from_table(table: &CooccurrenceTable, objective: Objective, x_max: f64) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::State("co-occurrence table is empty".into()));
        }
        let (terms, excluded) = match objective {
            Objective::Sn => (
                table
                    .pairs()
                    .iter()
                    .map(|p| Term {
                        i: p.i,
                        j: p.j,
                        weight: p.count.min(x_max),
                        target: p.count.ln(),
                    })
                    .collect(),
                0,
            ),
            Objective::Pmi => {
                let (cells, skipped) = table.observed_pmi();
                let terms = cells
                    .into_iter()
                    .map(|(p, pmi)| Term {
                        i: p.i,
                        j: p.j,
                        weight: p.count.min(x_max),
                        target: pmi,
                    })
                    .collect();
                (terms, skipped)
            }
        };
        Ok(Self {
            objective,
            terms,
            excluded,
        })
    }

    /// Multiplies every weight by `factor`.
    pub fn scale_weights(&mut self, factor: f64) {
        self.terms.iter_mut().for_each(|t| t.weight *= factor);
    }
}

/// Parameters plus AdaGrad accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    vectors: DenseMatrix,
    constant: f64,
    acc_vectors: Vec<f64>,
    acc_constant: f64,
}

/// Same shape as the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub vectors: Vec<f64>,
    pub constant: f64,
}

impl Gradient {
    fn zeros(len: usize) -> Self {
        Self {
            vectors: vec![0.0; len],
            constant: 0.0,
        }
    }

    fn add_assign(&mut self, other: &Gradient) {
        for (a, b) in self.vectors.iter_mut().zip(&other.vectors) {
            *a += b;
        }
        self.constant += other.constant;
    }

    pub fn norm(&self) -> f64 {
        (dot(&self.vectors, &self.vectors) + self.constant * self.constant).sqrt()
    }
}

impl TrainState {
    pub fn new(vectors: DenseMatrix, constant: f64) -> Self {
        let len = vectors.as_slice().len();
        Self {
            vectors,
            constant,
            acc_vectors: vec![0.0; len],
            acc_constant: 0.0,
        }
    }

    /// Vectors i.i.d. `N(0, 1/d)` per coordinate, one RNG stream per word.
    pub fn initialize(n: usize, dim: usize, constant: f64, seed: u64) -> Self {
        let scale = 1.0 / (dim as f64).sqrt();
        let mut data = vec![0.0; n * dim];
        data.par_chunks_mut(dim).enumerate().for_each(|(w, row)| {
            let mut rng = CounterRng::for_stream(seed, roles::TRAIN_INIT, w as u64);
            rng.fill_normal(row);
            row.iter_mut().for_each(|x| *x *= scale);
        });
        Self::new(DenseMatrix::from_vec(n, dim, data).expect("finite init"), constant)
    }

    pub fn vectors(&self) -> &DenseMatrix {
        &self.vectors
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn set_constant(&mut self, c: f64) {
        self.constant = c;
    }

    pub fn accumulators(&self) -> (&[f64], f64) {
        (&self.acc_vectors, self.acc_constant)
    }

    pub fn vocab_size(&self) -> usize {
        self.vectors.rows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    fn check_shape(&self, table: &CooccurrenceTable) -> Result<()> {
        if table.vocab_size() != self.vocab_size() {
            return Err(Error::param(format!(
                "state has {} words, table has {}",
                self.vocab_size(),
                table.vocab_size()
            )));
        }
        Ok(())
    }
}

/// `log X − ‖v_w + v_w'‖² − C`.
pub fn sn_residual(state: &TrainState, table: &CooccurrenceTable, w: usize, w2: usize) -> Result<f64> {
    state.check_shape(table)?;
    let x = table.count(w, w2);
    if x <= 0.0 {
        return Err(Error::Precondition(format!(
            "pair ({w}, {w2}) has no co-occurrences and is excluded from the objective"
        )));
    }
    let (a, b) = (state.vectors.row(w), state.vectors.row(w2));
    Ok(x.ln() - sum_sq(a, b) - state.constant)
}

#[inline]
fn sum_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum()
}

#[inline]
fn residual(objective: Objective, t: &Term, a: &[f64], b: &[f64], constant: f64) -> f64 {
    match objective {
        Objective::Sn => t.target - sum_sq(a, b) - constant,
        Objective::Pmi => t.target - dot(a, b),
    }
}

pub fn sn_loss(state: &TrainState, table: &CooccurrenceTable, config: &TrainingConfig) -> Result<f64> {
    state.check_shape(table)?;
    Ok(loss(state, &Terms::from_table(table, Objective::Sn, config.x_max)?))
}

pub fn pmi_loss(state: &TrainState, table: &CooccurrenceTable, config: &TrainingConfig) -> Result<f64> {
    state.check_shape(table)?;
    Ok(loss(state, &Terms::from_table(table, Objective::Pmi, config.x_max)?))
}

pub fn sn_gradient(state: &TrainState, table: &CooccurrenceTable, config: &TrainingConfig) -> Result<Gradient> {
    state.check_shape(table)?;
    Ok(loss_and_gradient(state, &Terms::from_table(table, Objective::Sn, config.x_max)?.terms, Objective::Sn).1)
}

pub fn pmi_gradient(state: &TrainState, table: &CooccurrenceTable, config: &TrainingConfig) -> Result<Gradient> {
    state.check_shape(table)?;
    Ok(loss_and_gradient(state, &Terms::from_table(table, Objective::Pmi, config.x_max)?.terms, Objective::Pmi).1)
}

/// Weighted squared-residual sum, reduced in the same fixed shard order as
/// the gradient.
pub fn loss(state: &TrainState, terms: &Terms) -> f64 {
    let partial: Vec<f64> = terms
        .terms
        .par_chunks(SHARD_CELLS)
        .map(|shard| {
            shard
                .iter()
                .map(|t| {
                    let r = residual(
                        terms.objective,
                        t,
                        state.vectors.row(t.i as usize),
                        state.vectors.row(t.j as usize),
                        state.constant,
                    );
                    t.weight * r * r
                })
                .sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

fn shard_gradient(state: &TrainState, shard: &[Term], objective: Objective) -> (f64, Gradient) {
    let d = state.dim();
    let mut g = Gradient::zeros(state.vectors.as_slice().len());
    let mut loss = 0.0;
    for t in shard {
        let (i, j) = (t.i as usize, t.j as usize);
        let (a, b) = (state.vectors.row(i), state.vectors.row(j));
        let r = residual(objective, t, a, b, state.constant);
        loss += t.weight * r * r;
        let wr = 2.0 * t.weight * r;
        match objective {
            Objective::Sn => {
                // ∂/∂v_i = ∂/∂v_j = −2·wr·(v_i + v_j); a self pair takes both.
                g.constant -= wr;
                for k in 0..d {
                    let s = -2.0 * wr * (a[k] + b[k]);
                    g.vectors[i * d + k] += s;
                    g.vectors[j * d + k] += s;
                }
            }
            Objective::Pmi => {
                for k in 0..d {
                    let (ak, bk) = (a[k], b[k]);
                    g.vectors[i * d + k] -= wr * bk;
                    g.vectors[j * d + k] -= wr * ak;
                }
            }
        }
    }
    (loss, g)
}

/// Loss and full gradient at the current parameters.
///
/// Shards of [`SHARD_CELLS`] cells are processed in groups; within a group
/// partial gradients are summed pairwise in index order, and groups are
/// accumulated sequentially, so the result is identical for any number of
/// threads.
pub fn loss_and_gradient(state: &TrainState, terms: &[Term], objective: Objective) -> (f64, Gradient) {
    let mut total = Gradient::zeros(state.vectors.as_slice().len());
    let mut total_loss = 0.0;
    for group in terms.chunks(SHARD_CELLS * SHARDS_PER_GROUP) {
        let mut parts: Vec<(f64, Gradient)> = group
            .par_chunks(SHARD_CELLS)
            .map(|shard| shard_gradient(state, shard, objective))
            .collect();
        // Pairwise tree in fixed order.
        let mut width = 1;
        while width < parts.len() {
            let mut k = 0;
            while k + width < parts.len() {
                let (left, right) = parts.split_at_mut(k + width);
                left[k].0 += right[0].0;
                let rhs = std::mem::replace(&mut right[0].1, Gradient::zeros(0));
                left[k].1.add_assign(&rhs);
                k += 2 * width;
            }
            width *= 2;
        }
        if let Some((l, g)) = parts.into_iter().next() {
            total_loss += l;
            total.add_assign(&g);
        }
    }
    if objective == Objective::Pmi {
        total.constant = 0.0;
    }
    (total_loss, total)
}

/// `acc += g²; θ −= η·g/√(acc + δ)`, elementwise.
pub fn adagrad_step(state: &mut TrainState, gradient: &Gradient, learning_rate: f64) -> Result<()> {
    if gradient.vectors.len() != state.acc_vectors.len() {
        return Err(Error::param(format!(
            "gradient has {} entries, parameters have {}",
            gradient.vectors.len(),
            state.acc_vectors.len()
        )));
    }
    let params = state.vectors.as_mut_slice();
    params
        .par_chunks_mut(4096)
        .zip(state.acc_vectors.par_chunks_mut(4096))
        .zip(gradient.vectors.par_chunks(4096))
        .for_each(|((p, acc), g)| {
            for k in 0..p.len() {
                acc[k] += g[k] * g[k];
                p[k] -= learning_rate * g[k] / (acc[k] + ADAGRAD_DELTA).sqrt();
            }
        });
    let g = gradient.constant;
    state.acc_constant += g * g;
    state.constant -= learning_rate * g / (state.acc_constant + ADAGRAD_DELTA).sqrt();
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Loss at the parameters the epoch started from.
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub vectors: WordVectorEnsemble,
    /// Trained `C` (SN); the initial value untouched for PMI.
    pub constant: f64,
    pub history: Vec<EpochRecord>,
    pub final_loss: f64,
    /// Cells excluded from the PMI objective for a zero marginal.
    pub excluded_cells: usize,
}

impl TrainOutcome {
    /// One `epoch loss grad_norm` line per epoch.
    pub fn log_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.history {
            out.push_str(&format!("{} {:.17e} {:.17e}\n", r.epoch, r.loss, r.grad_norm));
        }
        out
    }
}

pub fn initial_constant(terms: &Terms) -> f64 {
    if terms.objective == Objective::Pmi || terms.terms.is_empty() {
        return 0.0;
    }
    terms.terms.iter().map(|t| t.target).sum::<f64>() / terms.terms.len() as f64
}

/// Trains from the standard initialization.
pub fn train(table: &CooccurrenceTable, config: &TrainingConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let n = table.vocab_size();
    if config.dim > n {
        return Err(Error::param(format!("dim {} exceeds vocabulary {n}", config.dim)));
    }
    let terms = Terms::from_table(table, config.objective, config.x_max)?;
    let c0 = config.constant_init.unwrap_or_else(|| initial_constant(&terms));
    let state = TrainState::initialize(n, config.dim, c0, config.seed);
    train_from(state, &terms, config)
}

/// Runs `config.iterations` epochs from a given state.
pub fn train_from(mut state: TrainState, terms: &Terms, config: &TrainingConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let objective = terms.objective;
    let mut history = Vec::with_capacity(config.iterations);
    let mut order_rng = CounterRng::new(config.seed, roles::SHARD_ORDER);
    let mut scratch = SparseScratch::new(state.vocab_size(), state.dim());
    for epoch in 0..config.iterations {
        match config.batch {
            BatchMode::FullBatch => {
                let (l, g) = loss_and_gradient(&state, &terms.terms, objective);
                let gn = g.norm();
                check_finite(epoch, l, gn)?;
                history.push(EpochRecord {
                    epoch,
                    loss: l,
                    grad_norm: gn,
                });
                adagrad_step(&mut state, &g, config.learning_rate)?;
            }
            BatchMode::Sharded { shard_cells } => {
                let shards: Vec<&[Term]> = terms.terms.chunks(shard_cells).collect();
                let mut order: Vec<usize> = (0..shards.len()).collect();
                for k in (1..order.len()).rev() {
                    let r = order_rng.below(k as u64 + 1) as usize;
                    order.swap(k, r);
                }
                let (mut epoch_loss, mut sq) = (0.0, 0.0);
                for s in order {
                    let (l, g2) = sparse_step(&mut state, shards[s], objective, config.learning_rate, &mut scratch);
                    epoch_loss += l;
                    sq += g2;
                    check_finite(epoch, epoch_loss, sq)?;
                }
                history.push(EpochRecord {
                    epoch,
                    loss: epoch_loss,
                    grad_norm: sq.sqrt(),
                });
            }
        }
    }
    let final_loss = loss(&state, terms);
    check_finite(config.iterations, final_loss, 0.0)?;
    let dim = state.dim();
    let constant = state.constant;
    Ok(TrainOutcome {
        vectors: WordVectorEnsemble::from_vectors(dim, state.vectors.into_vec())?,
        constant,
        history,
        final_loss,
        excluded_cells: terms.excluded,
    })
}

/// Gradient rows touched by one shard.
struct SparseScratch {
    grad: Vec<f64>,
    touched: Vec<bool>,
    rows: Vec<usize>,
}

impl SparseScratch {
    fn new(n: usize, d: usize) -> Self {
        Self {
            grad: vec![0.0; n * d],
            touched: vec![false; n],
            rows: Vec::new(),
        }
    }

    fn touch(&mut self, row: usize) {
        if !self.touched[row] {
            self.touched[row] = true;
            self.rows.push(row);
        }
    }
}

/// One AdaGrad step on a shard's gradient, updating only the rows it
/// touches. Rows with zero gradient would be left unchanged by a dense
/// step, so the result is identical. Returns the shard loss and the
/// squared gradient norm.
fn sparse_step(
    state: &mut TrainState,
    shard: &[Term],
    objective: Objective,
    learning_rate: f64,
    scratch: &mut SparseScratch,
) -> (f64, f64) {
    let d = state.dim();
    let (mut loss, mut gc) = (0.0, 0.0);
    for t in shard {
        let (i, j) = (t.i as usize, t.j as usize);
        scratch.touch(i);
        scratch.touch(j);
        let (a, b) = (state.vectors.row(i), state.vectors.row(j));
        let r = residual(objective, t, a, b, state.constant);
        loss += t.weight * r * r;
        let wr = 2.0 * t.weight * r;
        match objective {
            Objective::Sn => {
                gc -= wr;
                for k in 0..d {
                    let s = -2.0 * wr * (a[k] + b[k]);
                    scratch.grad[i * d + k] += s;
                    scratch.grad[j * d + k] += s;
                }
            }
            Objective::Pmi => {
                for k in 0..d {
                    let (ak, bk) = (a[k], b[k]);
                    scratch.grad[i * d + k] -= wr * bk;
                    scratch.grad[j * d + k] -= wr * ak;
                }
            }
        }
    }
    if objective == Objective::Pmi {
        gc = 0.0;
    }
    let mut sq = gc * gc;
    scratch.rows.sort_unstable();
    let params = state.vectors.as_mut_slice();
    for &row in &scratch.rows {
        for k in row * d..(row + 1) * d {
            let g = std::mem::take(&mut scratch.grad[k]);
            sq += g * g;
            state.acc_vectors[k] += g * g;
            params[k] -= learning_rate * g / (state.acc_vectors[k] + ADAGRAD_DELTA).sqrt();
        }
        scratch.touched[row] = false;
    }
    scratch.rows.clear();
    state.acc_constant += gc * gc;
    state.constant -= learning_rate * gc / (state.acc_constant + ADAGRAD_DELTA).sqrt();
    (loss, sq)
}

fn check_finite(iteration: usize, loss: f64, grad: f64) -> Result<()> {
    if loss.is_finite() && grad.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { iteration, loss })
    }
}

/// Noiseless SN-form table: `X = exp(‖v_i + v_j‖² + C)` for every `i ≤ j`,
/// unit word counts.
pub fn planted_table(vectors: &WordVectorEnsemble, constant: f64) -> Result<CooccurrenceTable> {
    let n = vectors.len();
    let mut cells = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let x = (sum_sq(vectors.vector(i), vectors.vector(j)) + constant).exp();
            if !x.is_finite() || x <= 0.0 {
                return Err(Error::Numeric(format!("planted count for ({i}, {j}) is {x}")));
            }
            cells.push((i, j, x));
        }
    }
    CooccurrenceTable::from_pairs(n, 2, cells, vec![1; n])
}

/// Fraction of total count mass held by cells with count ≤ `threshold`.
pub fn low_count_mass_fraction(counts: &[f64], threshold: f64) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts.iter().filter(|&&x| x <= threshold).sum::<f64>() / total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_from(rows: &[&[f64]], c: f64) -> TrainState {
        TrainState::new(DenseMatrix::from_rows(rows).unwrap(), c)
    }

    fn table(n: usize, cells: &[(usize, usize, f64)]) -> CooccurrenceTable {
        CooccurrenceTable::from_pairs(n, 2, cells.iter().copied(), vec![10; n]).unwrap()
    }

    #[test]
    fn residual_examples() {
        let t = table(2, &[(0, 1, 5.0)]);
        let s = state_from(&[&[0.0, 0.0], &[0.0, 0.0]], 5f64.ln());
        assert_eq!(sn_residual(&s, &t, 0, 1).unwrap(), 0.0);
        let t = table(2, &[(0, 1, 2f64.exp())]);
        let s = state_from(&[&[1.0, 0.0], &[0.0, 1.0]], 0.0);
        assert!(sn_residual(&s, &t, 0, 1).unwrap().abs() < 1e-15);
        assert!(matches!(sn_residual(&s, &t, 0, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn truncated_weight() {
        let t = table(2, &[(0, 1, 250.0)]);
        let s = state_from(&[&[0.1, 0.0], &[0.0, 0.2]], 1.0);
        let r = sn_residual(&s, &t, 0, 1).unwrap();
        let cfg = TrainingConfig::new(Objective::Sn, 2, 0);
        assert!((sn_loss(&s, &t, &cfg).unwrap() - 100.0 * r * r).abs() < 1e-12);
    }

    #[test]
    fn pmi_single_pair_loss() {
        // One cell with X=4 and PMI=1: ⟨v,v'⟩=0 gives loss 4.
        let t = table(2, &[(0, 1, 4.0)]);
        let pmi = t.pmi(0, 1, 0.0).unwrap().value();
        let terms = Terms {
            objective: Objective::Pmi,
            terms: vec![Term { i: 0, j: 1, weight: 4.0, target: 1.0 }],
            excluded: 0,
        };
        let s = state_from(&[&[1.0, 0.0], &[0.0, 1.0]], 0.0);
        assert_eq!(loss(&s, &terms), 4.0);
        assert!(pmi.is_finite());
    }

    #[test]
    fn adagrad_closed_forms() {
        let mut s = state_from(&[&[0.0, 0.0]], 0.0);
        let g = Gradient { vectors: vec![1.0, 1.0], constant: 1.0 };
        adagrad_step(&mut s, &g, 0.05).unwrap();
        let first = s.vectors().get(0, 0);
        assert!((first + 0.05 / (1.0 + 1e-8f64).sqrt()).abs() < 1e-15);
        adagrad_step(&mut s, &g, 0.05).unwrap();
        let second = s.vectors().get(0, 0) - first;
        assert!((second + 0.05 / (2.0 + 1e-8f64).sqrt()).abs() < 1e-15);
        let before = s.clone();
        adagrad_step(&mut s, &Gradient { vectors: vec![0.0, 0.0], constant: 0.0 }, 0.05).unwrap();
        assert_eq!(before, s);
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let t = table(3, &[(0, 1, 3.0), (1, 2, 5.0)]);
        let mut cfg = TrainingConfig::new(Objective::Sn, 2, 4);
        cfg.iterations = 0;
        let out = train(&t, &cfg).unwrap();
        let init = TrainState::initialize(3, 2, 0.0, 4);
        assert_eq!(out.vectors.as_slice(), init.vectors().as_slice());
        assert!(out.history.is_empty());
    }

    #[test]
    fn divergence_is_reported() {
        let t = table(2, &[(0, 1, 3.0)]);
        let mut s = TrainState::initialize(2, 1, 0.0, 1);
        s.set_constant(f64::INFINITY);
        let terms = Terms::from_table(&t, Objective::Sn, 100.0).unwrap();
        let err = train_from(s, &terms, &TrainingConfig::new(Objective::Sn, 1, 1)).unwrap_err();
        assert!(matches!(err, Error::Divergence { iteration: 0, .. }));
    }

    #[test]
    fn doubling_weights_doubles_loss() {
        let t = table(3, &[(0, 1, 3.0), (1, 2, 500.0), (2, 2, 7.0)]);
        let s = TrainState::initialize(3, 2, 0.5, 2);
        let mut terms = Terms::from_table(&t, Objective::Sn, 100.0).unwrap();
        let l = loss(&s, &terms);
        terms.scale_weights(2.0);
        assert_eq!(loss(&s, &terms), 2.0 * l);
    }

    /// Central differences of the loss over every parameter.
    fn finite_difference(state: &TrainState, terms: &Terms, h: f64) -> Gradient {
        let base = state.vectors().as_slice().to_vec();
        let (n, d) = (state.vocab_size(), state.dim());
        let at = |v: Vec<f64>, c: f64| loss(&TrainState::new(DenseMatrix::from_vec(n, d, v).unwrap(), c), terms);
        let vectors = (0..base.len())
            .map(|k| {
                let (mut p, mut m) = (base.clone(), base.clone());
                p[k] += h;
                m[k] -= h;
                (at(p, state.constant()) - at(m, state.constant())) / (2.0 * h)
            })
            .collect();
        let constant = (at(base.clone(), state.constant() + h) - at(base, state.constant() - h)) / (2.0 * h);
        Gradient { vectors, constant }
    }

    fn random_instance(seed: u64, n: usize, d: usize) -> (TrainState, CooccurrenceTable) {
        let mut rng = CounterRng::new(seed, 1234);
        let mut cells = Vec::new();
        for i in 0..n {
            for j in i..n {
                if rng.next_f64() < 0.6 {
                    // Spans both sides of X_max = 100.
                    cells.push((i, j, (1.0 + 300.0 * rng.next_f64()).round()));
                }
            }
        }
        cells.push((0, 0, 7.0));
        let counts = (0..n).map(|_| 1 + rng.below(50)).collect();
        let table = CooccurrenceTable::from_pairs(n, 2, cells, counts).unwrap();
        let mut state = TrainState::initialize(n, d, 0.0, seed);
        state.set_constant(rng.next_normal());
        (state, table)
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn gradients_match_finite_differences(seed in 0u64..10_000, n in 2usize..=12, d in 1usize..=5) {
            let (state, table) = random_instance(seed, n, d);
            for obj in [Objective::Sn, Objective::Pmi] {
                let terms = Terms::from_table(&table, obj, 100.0).unwrap();
                let (_, g) = loss_and_gradient(&state, &terms.terms, obj);
                let fd = finite_difference(&state, &terms, 1e-5);
                let scale = g.vectors.iter().chain([&g.constant]).fold(0.0f64, |m, x| m.max(x.abs()));
                let err = g.vectors.iter().zip(&fd.vectors).map(|(a, b)| (a - b).abs())
                    .chain([(g.constant - fd.constant).abs()])
                    .fold(0.0f64, f64::max);
                proptest::prop_assert!(err <= 1e-5 * scale.max(1e-12), "{obj}: err {err} scale {scale}");
            }
        }

        #[test]
        fn loss_is_rotation_invariant(seed in 0u64..10_000) {
            let (state, table) = random_instance(seed, 8, 3);
            let mut rng = CounterRng::new(seed, 77);
            let g = DenseMatrix::from_vec(3, 3, (0..9).map(|_| rng.next_normal()).collect()).unwrap();
            let q = crate::numerics::svd::orthonormal_columns(&g);
            let rows: Vec<Vec<f64>> = (0..8).map(|w| q.matvec(state.vectors().row(w))).collect();
            let rotated = TrainState::new(DenseMatrix::from_rows(&rows).unwrap(), state.constant());
            for obj in [Objective::Sn, Objective::Pmi] {
                let terms = Terms::from_table(&table, obj, 100.0).unwrap();
                let (a, b) = (loss(&state, &terms), loss(&rotated, &terms));
                proptest::prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sn_gradient_wrappers_agree_with_terms() {
        let (state, table) = random_instance(9, 6, 2);
        let cfg = TrainingConfig::new(Objective::Sn, 2, 0);
        let terms = Terms::from_table(&table, Objective::Sn, cfg.x_max).unwrap();
        let (l, g) = loss_and_gradient(&state, &terms.terms, Objective::Sn);
        assert_eq!(sn_loss(&state, &table, &cfg).unwrap(), loss(&state, &terms));
        assert!((l - loss(&state, &terms)).abs() <= 1e-12 * l);
        assert_eq!(sn_gradient(&state, &table, &cfg).unwrap().vectors, g.vectors);
        let pg = pmi_gradient(&state, &table, &cfg).unwrap();
        assert_eq!(pg.constant, 0.0);
    }

    #[test]
    fn loss_decreases_after_early_epochs_on_planted_tables() {
        for seed in 0..20 {
            let mut rng = CounterRng::new(seed, 5);
            let (n, d) = (25, 4);
            let data: Vec<f64> = (0..n * d).map(|_| rng.next_normal() / (2.0 * d as f64).sqrt()).collect();
            let truth = WordVectorEnsemble::from_vectors(d, data).unwrap();
            let table = planted_table(&truth, 2.0).unwrap();
            let mut cfg = TrainingConfig::new(Objective::Sn, d, seed);
            cfg.iterations = 60;
            let out = train(&table, &cfg).unwrap();
            let losses: Vec<f64> = out.history.iter().map(|r| r.loss).collect();
            for w in losses[3..].windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn planted_table_has_zero_residual_at_truth() {
        let truth = WordVectorEnsemble::from_rows(&[[0.1, 0.2], [-0.3, 0.05], [0.0, 0.4]]).unwrap();
        let table = planted_table(&truth, 1.5).unwrap();
        let state = TrainState::new(DenseMatrix::from_vec(3, 2, truth.as_slice().to_vec()).unwrap(), 1.5);
        for (i, j) in [(0, 0), (0, 2), (1, 2)] {
            assert!(sn_residual(&state, &table, i, j).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn power_law_low_count_mass_shrinks_with_corpus_size() {
        // x_r = k / r^{5/4}: the mass in counts ≤ 10 scales as k^{-1/5}.
        let law = |k: f64| -> Vec<f64> { (1..=1_000_000).map(|r| k / (r as f64).powf(1.25)).collect() };
        let small = low_count_mass_fraction(&law(1_000.0), 10.0);
        let large = low_count_mass_fraction(&law(32_000.0), 10.0);
        assert!(small / large >= 1.8, "{small} / {large}");
    }

    #[test]
    fn sharded_training_is_deterministic_and_accumulators_grow() {
        let (_, table) = random_instance(3, 15, 3);
        let mut cfg = TrainingConfig::new(Objective::Sn, 3, 8);
        cfg.iterations = 5;
        cfg.batch = BatchMode::Sharded { shard_cells: 7 };
        let a = train(&table, &cfg).unwrap();
        let b = train(&table, &cfg).unwrap();
        assert_eq!(a.vectors, b.vectors);
        assert_eq!(a.constant, b.constant);
        assert_eq!(a.log_lines(), b.log_lines());

        let terms = Terms::from_table(&table, Objective::Sn, 100.0).unwrap();
        let mut s = TrainState::initialize(15, 3, 1.0, 2);
        let mut prev = s.accumulators().0.to_vec();
        for _ in 0..3 {
            let (_, g) = loss_and_gradient(&s, &terms.terms, Objective::Sn);
            adagrad_step(&mut s, &g, 0.05).unwrap();
            let now = s.accumulators().0.to_vec();
            assert!(now.iter().zip(&prev).all(|(x, y)| x >= y));
            prev = now;
        }
    }

    #[test]
    fn sparse_step_matches_dense_step() {
        let (state, table) = random_instance(21, 12, 3);
        for obj in [Objective::Sn, Objective::Pmi] {
            let terms = Terms::from_table(&table, obj, 100.0).unwrap();
            let shard = &terms.terms[..terms.terms.len() / 2];
            let mut dense = state.clone();
            let (_, g) = loss_and_gradient(&dense, shard, obj);
            adagrad_step(&mut dense, &g, 0.05).unwrap();
            let mut sparse = state.clone();
            let mut scratch = SparseScratch::new(12, 3);
            sparse_step(&mut sparse, shard, obj, 0.05, &mut scratch);
            for (x, y) in dense.vectors().as_slice().iter().zip(sparse.vectors().as_slice()) {
                assert!((x - y).abs() <= 1e-12, "{obj}: {x} vs {y}");
            }
            assert!((dense.constant() - sparse.constant()).abs() <= 1e-12);
        }
    }

    #[test]
    fn low_count_mass() {
        assert_eq!(low_count_mass_fraction(&[1.0, 9.0, 90.0], 10.0), 0.1);
        assert_eq!(low_count_mass_fraction(&[], 10.0), 0.0);
    }
}
