//! C ABI over the `randwalk` library.
//!
//! Objects are opaque heap handles created by `rw_*_new`/`rw_*_load`/...
//! and released with the matching `rw_*_free`. Every fallible function
//! returns an `RwStatus`; on failure `rw_last_error()` describes the cause
//! for the calling thread. Output pointers are written only on success.
//! Panics never cross the boundary: they surface as `RW_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use randwalk::analogy::{parse_questions, AnalogyEngine, AnalogyQuestion, Solver};
use randwalk::cooccur::{count_windows, CooccurrenceTable, PmiValue};
use randwalk::diagnostics::{isotropy_ratio, objective_fit, partition_concentration, NormRule};
use randwalk::error::Error;
use randwalk::generator::{generate_corpus, sample_ensemble, Corpus, DiscourseWalkConfig, ScaleLaw, WordVectorEnsemble};
use randwalk::io;
use randwalk::trainer::{train, BatchMode, Objective, TrainingConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwStatus {
    Ok = 0,
    Parameter = 1,
    Precondition = 2,
    Data = 3,
    State = 4,
    Undefined = 5,
    Degenerate = 6,
    Singular = 7,
    Numeric = 8,
    Divergence = 9,
    Io = 10,
    NullPointer = 11,
    InvalidUtf8 = 12,
    Panic = 13,
}

impl From<&Error> for RwStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parameter(_) => RwStatus::Parameter,
            Error::Precondition(_) => RwStatus::Precondition,
            Error::Data { .. } => RwStatus::Data,
            Error::State(_) => RwStatus::State,
            Error::Undefined(_) => RwStatus::Undefined,
            Error::Degenerate(_) => RwStatus::Degenerate,
            Error::Singular { .. } => RwStatus::Singular,
            Error::Numeric(_) => RwStatus::Numeric,
            Error::Divergence { .. } => RwStatus::Divergence,
            Error::Io { .. } => RwStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwObjective {
    Sn = 0,
    Pmi = 1,
}

impl From<RwObjective> for Objective {
    fn from(o: RwObjective) -> Self {
        match o {
            RwObjective::Sn => Objective::Sn,
            RwObjective::Pmi => Objective::Pmi,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwSolver {
    Plain = 0,
    /// Relation directions from `k` clusters of the question batch.
    Rd = 1,
    /// Relation direction from `k` neighbour pairs of each question.
    RdNn = 2,
}

/// Discourse random-walk settings for `rw_corpus_generate`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RwWalkConfig {
    /// Max step length ε₂ (scaled by 1/√d internally).
    pub step_bound: f64,
    pub length: usize,
    pub jump_probability: f64,
    pub seed: u64,
}

/// Trainer settings; `shard_cells = 0` selects full-batch AdaGrad.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RwTrainConfig {
    pub objective: RwObjective,
    pub dim: usize,
    pub x_max: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub shard_cells: usize,
}

pub struct RwEnsemble(WordVectorEnsemble);
pub struct RwCorpus(Corpus);
pub struct RwTable(CooccurrenceTable);
pub struct RwAnalogy {
    engine: AnalogyEngine,
    labels: Vec<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

/// Runs `f`, translating errors and panics into a status and message.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> RwStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RwStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            RwStatus::from(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RwStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            RwStatus::InvalidUtf8
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RwStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn path(p: *const c_char, what: &'static str) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map(PathBuf::from).map_err(|_| Failure::Utf8(what))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn rw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next `rw_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Samples `n` word vectors of dimension `d` from the prior
/// `v = s·v̂`, `s ~ U[0, scale_fraction·κ]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_ensemble_sample(
    n: usize,
    d: usize,
    kappa: f64,
    scale_fraction: f64,
    seed: u64,
    out: *mut *mut RwEnsemble,
) -> RwStatus {
    guard(|| {
        let law = ScaleLaw::Uniform { upper_fraction: scale_fraction };
        let ens = sample_ensemble(n, d, kappa, law, seed)?;
        put(out, boxed(RwEnsemble(ens)), "out")
    })
}

/// Copies `n·d` row-major values into a new ensemble.
///
/// # Safety
/// `data` must point to `n·d` readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_ensemble_from_rows(
    n: usize,
    d: usize,
    data: *const f64,
    out: *mut *mut RwEnsemble,
) -> RwStatus {
    guard(|| {
        if data.is_null() {
            return Err(Failure::Null("data"));
        }
        let len = n.checked_mul(d).ok_or_else(|| Error::Parameter("n·d overflows".into()))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        put(out, boxed(RwEnsemble(WordVectorEnsemble::from_vectors(d, values)?)), "out")
    })
}

/// Reads a vectors file. `constant`, if non-NULL, receives the `C` trailer
/// or NaN when the file has none.
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` valid for writes; `constant`
/// NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_ensemble_load(
    file: *const c_char,
    out: *mut *mut RwEnsemble,
    constant: *mut f64,
) -> RwStatus {
    guard(|| {
        let vf = io::read_ensemble(&path(file, "file")?)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if !constant.is_null() {
            constant.write(vf.constant.unwrap_or(f64::NAN));
        }
        put(out, boxed(RwEnsemble(vf.vectors)), "out")
    })
}

/// Writes a vectors file atomically; a finite `constant` adds a `C` trailer.
///
/// # Safety
/// `ens` must be a live handle; `file` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rw_ensemble_save(ens: *const RwEnsemble, file: *const c_char, constant: f64) -> RwStatus {
    guard(|| {
        let ens = get(ens, "ens")?;
        let c = constant.is_finite().then_some(constant);
        io::write_atomic(&path(file, "file")?, io::ensemble_to_string(&ens.0, c).as_bytes())?;
        Ok(())
    })
}

/// Number of words; 0 for NULL.
///
/// # Safety
/// `ens` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rw_ensemble_len(ens: *const RwEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.0.len())
}

/// Dimension; 0 for NULL.
///
/// # Safety
/// `ens` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rw_ensemble_dim(ens: *const RwEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.0.dim())
}

/// Copies word `w`'s vector into `buf` (`buf_len` must be ≥ dim).
///
/// # Safety
/// `ens` must be a live handle; `buf` writable for `buf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rw_ensemble_vector(
    ens: *const RwEnsemble,
    w: usize,
    buf: *mut f64,
    buf_len: usize,
) -> RwStatus {
    guard(|| {
        let ens = &get(ens, "ens")?.0;
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        if w >= ens.len() {
            return Err(Error::Parameter(format!("word {w} out of range for {} words", ens.len())).into());
        }
        if buf_len < ens.dim() {
            return Err(Error::Parameter(format!("buffer holds {buf_len} values, need {}", ens.dim())).into());
        }
        std::slice::from_raw_parts_mut(buf, ens.dim()).copy_from_slice(ens.vector(w));
        Ok(())
    })
}

/// # Safety
/// `ens` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rw_ensemble_free(ens: *mut RwEnsemble) {
    free(ens)
}

/// Defaults: ε₂ = 0.05, no jumps.
#[no_mangle]
pub extern "C" fn rw_walk_config_default(length: usize, seed: u64) -> RwWalkConfig {
    RwWalkConfig { step_bound: 0.05, length, jump_probability: 0.0, seed }
}

/// Emits a corpus from the discourse random walk over `ens`.
///
/// # Safety
/// `ens` and `config` must be valid; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_corpus_generate(
    ens: *const RwEnsemble,
    config: *const RwWalkConfig,
    out: *mut *mut RwCorpus,
) -> RwStatus {
    guard(|| {
        let ens = &get(ens, "ens")?.0;
        let c = get(config, "config")?;
        let mut walk = DiscourseWalkConfig::new(ens.dim(), c.step_bound, c.length, c.seed);
        walk.jump_probability = c.jump_probability;
        put(out, boxed(RwCorpus(generate_corpus(ens, &walk)?)), "out")
    })
}

/// Wraps `len` token ids, each below `vocab_size`.
///
/// # Safety
/// `tokens` must point to `len` readable values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_corpus_from_tokens(
    vocab_size: usize,
    tokens: *const u32,
    len: usize,
    out: *mut *mut RwCorpus,
) -> RwStatus {
    guard(|| {
        if tokens.is_null() && len > 0 {
            return Err(Failure::Null("tokens"));
        }
        let t = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(tokens, len).to_vec() };
        put(out, boxed(RwCorpus(Corpus::new(vocab_size, t)?)), "out")
    })
}

/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rw_corpus_len(corpus: *const RwCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// Copies up to `buf_len` tokens; `written` receives the number copied.
///
/// # Safety
/// `corpus` must be live; `buf` writable for `buf_len` values; `written`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_corpus_tokens(
    corpus: *const RwCorpus,
    buf: *mut u32,
    buf_len: usize,
    written: *mut usize,
) -> RwStatus {
    guard(|| {
        let tokens = get(corpus, "corpus")?.0.tokens();
        if buf.is_null() && buf_len > 0 {
            return Err(Failure::Null("buf"));
        }
        let k = tokens.len().min(buf_len);
        if k > 0 {
            std::slice::from_raw_parts_mut(buf, k).copy_from_slice(&tokens[..k]);
        }
        put(written, k, "written")
    })
}

/// # Safety
/// `corpus` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rw_corpus_free(corpus: *mut RwCorpus) {
    free(corpus)
}

/// Counts unordered co-occurrences within windows of `q` tokens.
///
/// # Safety
/// `corpus` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_table_count(corpus: *const RwCorpus, q: usize, out: *mut *mut RwTable) -> RwStatus {
    guard(|| {
        let table = count_windows(&get(corpus, "corpus")?.0, q)?;
        put(out, boxed(RwTable(table)), "out")
    })
}

/// # Safety
/// Both paths must be NUL-terminated strings; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_table_load(
    cooccur_file: *const c_char,
    word_counts_file: *const c_char,
    out: *mut *mut RwTable,
) -> RwStatus {
    guard(|| {
        let t = io::read_table(&path(cooccur_file, "cooccur_file")?, &path(word_counts_file, "word_counts_file")?)?;
        put(out, boxed(RwTable(t)), "out")
    })
}

/// # Safety
/// `table` must be live; both paths NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn rw_table_save(
    table: *const RwTable,
    cooccur_file: *const c_char,
    word_counts_file: *const c_char,
) -> RwStatus {
    guard(|| {
        let t = &get(table, "table")?.0;
        let (tp, cp) = (path(cooccur_file, "cooccur_file")?, path(word_counts_file, "word_counts_file")?);
        io::write_atomic(&tp, io::table_to_string(t).as_bytes())?;
        io::write_atomic(&cp, io::word_counts_to_string(t).as_bytes())?;
        Ok(())
    })
}

/// Number of nonzero cells; 0 for NULL.
///
/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rw_table_cells(table: *const RwTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.pairs().len())
}

/// Co-occurrence count of the unordered pair `{i, j}`.
///
/// # Safety
/// `table` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_table_count_of(table: *const RwTable, i: usize, j: usize, out: *mut f64) -> RwStatus {
    guard(|| {
        let t = &get(table, "table")?.0;
        if i >= t.vocab_size() || j >= t.vocab_size() {
            return Err(Error::Parameter(format!("pair ({i}, {j}) out of range for {} words", t.vocab_size())).into());
        }
        put(out, t.count(i, j), "out")
    })
}

/// PMI of `{i, j}` with additive `smoothing`; an unseen pair without
/// smoothing gives -INFINITY.
///
/// # Safety
/// `table` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_table_pmi(
    table: *const RwTable,
    i: usize,
    j: usize,
    smoothing: f64,
    out: *mut f64,
) -> RwStatus {
    guard(|| {
        let v = match get(table, "table")?.0.pmi(i, j, smoothing)? {
            PmiValue::Observed(v) => v,
            PmiValue::Unseen => f64::NEG_INFINITY,
        };
        put(out, v, "out")
    })
}

/// # Safety
/// `table` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rw_table_free(table: *mut RwTable) {
    free(table)
}

/// Library defaults for the given objective: X_max 100, η 0.05, 100
/// full-batch epochs.
#[no_mangle]
pub extern "C" fn rw_train_config_default(objective: RwObjective, dim: usize, seed: u64) -> RwTrainConfig {
    let c = TrainingConfig::new(objective.into(), dim, seed);
    RwTrainConfig {
        objective,
        dim,
        x_max: c.x_max,
        learning_rate: c.learning_rate,
        iterations: c.iterations,
        seed,
        shard_cells: 0,
    }
}

/// Trains embeddings. `constant` (may be NULL) receives the fitted C (0 for
/// PMI).
///
/// # Safety
/// `table` and `config` must be valid; `out` valid for writes; `constant`
/// NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_train(
    table: *const RwTable,
    config: *const RwTrainConfig,
    out: *mut *mut RwEnsemble,
    constant: *mut f64,
) -> RwStatus {
    guard(|| {
        let t = &get(table, "table")?.0;
        let c = get(config, "config")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let mut cfg = TrainingConfig::new(c.objective.into(), c.dim, c.seed);
        cfg.x_max = c.x_max;
        cfg.learning_rate = c.learning_rate;
        cfg.iterations = c.iterations;
        if c.shard_cells > 0 {
            cfg.batch = BatchMode::Sharded { shard_cells: c.shard_cells };
        }
        let outcome = train(t, &cfg)?;
        if !constant.is_null() {
            constant.write(outcome.constant);
        }
        put(out, boxed(RwEnsemble(outcome.vectors)), "out")
    })
}

/// `√(Σσ²/d) / σ_min` of the word-vector matrix.
///
/// # Safety
/// `ens` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_isotropy_ratio(ens: *const RwEnsemble, out: *mut f64) -> RwStatus {
    guard(|| put(out, isotropy_ratio(&get(ens, "ens")?.0)?.ratio, "out"))
}

/// Fraction of `samples` random discourses (norm 4/mean‖v‖) whose partition
/// function lies within 10% of the sample mean.
///
/// # Safety
/// `ens` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_partition_within(
    ens: *const RwEnsemble,
    samples: usize,
    seed: u64,
    out: *mut f64,
) -> RwStatus {
    guard(|| {
        let stats = partition_concentration(&get(ens, "ens")?.0, samples, NormRule::default(), seed)?;
        put(out, stats.fraction_within_10pct, "out")
    })
}

/// Weighted relative residual of the SN (`constant` used) or PMI closed form.
///
/// # Safety
/// `ens` and `table` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_objective_fit(
    ens: *const RwEnsemble,
    constant: f64,
    table: *const RwTable,
    objective: RwObjective,
    x_max: f64,
    out: *mut f64,
) -> RwStatus {
    guard(|| {
        let fit = objective_fit(&get(ens, "ens")?.0, constant, &get(table, "table")?.0, objective.into(), x_max)?;
        put(out, fit.residual, "out")
    })
}

/// Analogy engine over unit-normalized copies of the vectors; `a`, `b`, `c`
/// are excluded from answers.
///
/// # Safety
/// `ens` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_analogy_new(ens: *const RwEnsemble, out: *mut *mut RwAnalogy) -> RwStatus {
    guard(|| {
        let ens = &get(ens, "ens")?.0;
        let engine = AnalogyEngine::new(ens)?;
        put(out, boxed(RwAnalogy { engine, labels: ens.labels().to_vec() }), "out")
    })
}

/// Best `d` for "a : b :: c : d" by the linear query `v_c − v_a + v_b`.
///
/// # Safety
/// `engine` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rw_analogy_best(
    engine: *const RwAnalogy,
    a: usize,
    b: usize,
    c: usize,
    out: *mut usize,
) -> RwStatus {
    guard(|| {
        let e = &get(engine, "engine")?.engine;
        // The answer slot is unused by the linear query.
        let best = e
            .linear_best(&AnalogyQuestion::new(a, b, c, c))?
            .ok_or_else(|| Error::State("no candidate word remains".into()))?;
        put(out, best, "out")
    })
}

/// Accuracy of `solver` on an analogy file. `k` is the cluster count (Rd) or
/// neighbour-pair count (RdNn); `neighborhood` applies to RdNn, `seed` to Rd.
///
/// # Safety
/// `engine` must be live; `questions_file` NUL-terminated; `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn rw_analogy_evaluate(
    engine: *const RwAnalogy,
    questions_file: *const c_char,
    solver: RwSolver,
    k: usize,
    neighborhood: usize,
    seed: u64,
    out: *mut f64,
) -> RwStatus {
    guard(|| {
        let e = get(engine, "engine")?;
        let file = path(questions_file, "questions_file")?;
        let set = parse_questions(&io::read_text(&file)?, &e.labels)?;
        let solver = match solver {
            RwSolver::Plain => Solver::Plain,
            RwSolver::Rd => Solver::Rd { k, seed },
            RwSolver::RdNn => Solver::RdNn { k, neighborhood },
        };
        put(out, e.engine.evaluate(&set.questions, &solver)?.report.accuracy(), "out")
    })
}

/// # Safety
/// `engine` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rw_analogy_free(engine: *mut RwAnalogy) {
    free(engine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_a_status_with_message() {
        assert_eq!(guard(|| panic!("boom")), RwStatus::Panic);
        let msg = unsafe { CStr::from_ptr(rw_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
        assert_eq!(guard(|| Ok(())), RwStatus::Ok);
        assert!(rw_last_error().is_null());
    }

    #[test]
    fn every_error_kind_has_a_distinct_status() {
        let errors = [
            Error::Parameter(String::new()),
            Error::Precondition(String::new()),
            Error::Data { location: String::new(), message: String::new() },
            Error::State(String::new()),
            Error::Undefined(String::new()),
            Error::Degenerate(String::new()),
            Error::Singular { sigma_min: 0.0 },
            Error::Numeric(String::new()),
            Error::Divergence { iteration: 0, loss: 0.0 },
            Error::Io { path: PathBuf::new(), source: std::io::Error::other("x") },
        ];
        let mut codes: Vec<i32> = errors.iter().map(|e| RwStatus::from(e) as i32).collect();
        codes.dedup();
        assert_eq!(codes, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn interior_nul_in_messages_is_replaced() {
        set_error("a\0b".into());
        let msg = unsafe { CStr::from_ptr(rw_last_error()) }.to_str().unwrap();
        assert_eq!(msg, "a b");
    }
}
