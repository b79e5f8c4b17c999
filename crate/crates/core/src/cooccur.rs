//! Windowed co-occurrence counts and PMI.
//!
//! Counting convention: for every position `t` and every offset
//! `1 ≤ k < q`, the pair `(w_t, w_{t+k})` adds 1 to the unordered cell
//! `{w_t, w_{t+k}}`. Self-pairs are kept. `L̃` is therefore the number of
//! in-window position pairs. Counts are unweighted by distance.
//!
//! PMI at window size `q` uses the probability that a pair shows up in a
//! window: each `q`-window holds `q(q-1)/2` position pairs, so
//!
//! ```text
//! p_q(w,w') = q(q-1)/2 · X_{w,w'} / L̃,     p(w) = count_w / T
//! PMI_q     = log[ q(q-1)/2 · X_{w,w'} · T² / (L̃ · count_w · count_w') ]
//! ```
//!
//! For `q = 2` this is the plain `log p(w,w')/(p(w)p(w'))`.

use std::collections::{BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generator::Corpus;

/// One stored cell, `i ≤ j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCount {
    pub i: u32,
    pub j: u32,
    pub count: f64,
}

#[inline]
fn pack(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

#[inline]
fn unpack(key: u64) -> (u32, u32) {
    ((key >> 32) as u32, key as u32)
}

/// Sparse symmetric pair counts with unigram counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceTable {
    vocab_size: usize,
    window: usize,
    pairs: Vec<PairCount>,
    word_counts: Vec<u64>,
    total_pairs: f64,
}

/// PMI of a pair, flagging pairs that were never observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PmiValue {
    Observed(f64),
    /// Zero joint count with zero smoothing: PMI is −∞.
    Unseen,
}

impl PmiValue {
    pub fn value(self) -> f64 {
        match self {
            PmiValue::Observed(v) => v,
            PmiValue::Unseen => f64::NEG_INFINITY,
        }
    }

    pub fn observed(self) -> Option<f64> {
        match self {
            PmiValue::Observed(v) => Some(v),
            PmiValue::Unseen => None,
        }
    }
}

impl CooccurrenceTable {
    /// Builds a table from explicit cells. Cells may name either orientation;
    /// duplicates are summed. Zero cells are dropped.
    pub fn from_pairs(
        vocab_size: usize,
        window: usize,
        cells: impl IntoIterator<Item = (usize, usize, f64)>,
        word_counts: Vec<u64>,
    ) -> Result<Self> {
        if window < 2 {
            return Err(Error::param(format!("window must be ≥ 2, got {window}")));
        }
        if word_counts.len() != vocab_size {
            return Err(Error::param(format!(
                "{} word counts for a vocabulary of {vocab_size}",
                word_counts.len()
            )));
        }
        let mut merged: HashMap<u64, f64> = HashMap::new();
        for (i, j, x) in cells {
            if i >= vocab_size || j >= vocab_size {
                return Err(Error::data(
                    format!("cell ({i}, {j})"),
                    format!("index outside the vocabulary of {vocab_size}"),
                ));
            }
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::data(
                    format!("cell ({i}, {j})"),
                    format!("count must be finite and nonnegative, got {x}"),
                ));
            }
            *merged.entry(pack(i as u32, j as u32)).or_insert(0.0) += x;
        }
        let mut keys: Vec<(u64, f64)> = merged.into_iter().filter(|&(_, x)| x > 0.0).collect();
        keys.sort_unstable_by_key(|&(k, _)| k);
        Ok(Self::from_sorted(vocab_size, window, keys, word_counts))
    }

    fn from_sorted(vocab_size: usize, window: usize, keys: Vec<(u64, f64)>, word_counts: Vec<u64>) -> Self {
        let pairs: Vec<PairCount> = keys
            .into_iter()
            .map(|(k, count)| {
                let (i, j) = unpack(k);
                PairCount { i, j, count }
            })
            .collect();
        let total_pairs = pairs.iter().map(|p| p.count).sum();
        Self {
            vocab_size,
            window,
            pairs,
            word_counts,
            total_pairs,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Stored cells sorted by `(i, j)`.
    pub fn pairs(&self) -> &[PairCount] {
        &self.pairs
    }

    pub fn word_counts(&self) -> &[u64] {
        &self.word_counts
    }

    /// `L̃`.
    pub fn total_pairs(&self) -> f64 {
        self.total_pairs
    }

    /// Number of tokens `T`.
    pub fn total_tokens(&self) -> u64 {
        self.word_counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `X_{i,j}` (0 for unseen pairs). Symmetric by construction.
    pub fn count(&self, i: usize, j: usize) -> f64 {
        let key = pack(i as u32, j as u32);
        self.pairs
            .binary_search_by_key(&key, |p| pack(p.i, p.j))
            .map(|idx| self.pairs[idx].count)
            .unwrap_or(0.0)
    }

    /// `X_{w,w'} / L̃`.
    pub fn empirical_prob(&self, w: usize, w2: usize) -> Result<f64> {
        if !(self.total_pairs > 0.0) {
            return Err(Error::State("co-occurrence table is empty".into()));
        }
        Ok(self.count(w, w2) / self.total_pairs)
    }

    /// `q(q-1)/2 · T² / L̃`, the factor turning `X/(c_w c_w')` into the
    /// probability ratio.
    fn log_normalizer(&self) -> f64 {
        let q = self.window as f64;
        let tokens = self.total_tokens() as f64;
        (q * (q - 1.0) / 2.0).ln() + 2.0 * tokens.ln() - self.total_pairs.ln()
    }

    pub fn pmi(&self, w: usize, w2: usize, smoothing: f64) -> Result<PmiValue> {
        if !(self.total_pairs > 0.0) {
            return Err(Error::State("co-occurrence table is empty".into()));
        }
        let (lo, hi) = if w <= w2 { (w, w2) } else { (w2, w) };
        if hi >= self.vocab_size {
            return Err(Error::param(format!(
                "word {hi} outside the vocabulary of {}",
                self.vocab_size
            )));
        }
        let (c_lo, c_hi) = (self.word_counts[lo], self.word_counts[hi]);
        if c_lo == 0 || c_hi == 0 {
            return Err(Error::Undefined(format!(
                "PMI of ({w}, {w2}) has a zero marginal"
            )));
        }
        let x = self.count(lo, hi) + smoothing;
        if x <= 0.0 {
            return Ok(PmiValue::Unseen);
        }
        Ok(PmiValue::Observed(self.pmi_of_count(x, c_lo, c_hi)))
    }

    #[inline]
    fn pmi_of_count(&self, x: f64, c_lo: u64, c_hi: u64) -> f64 {
        x.ln() + self.log_normalizer() - (c_lo as f64).ln() - (c_hi as f64).ln()
    }

    /// PMI of every stored cell with positive marginals, in storage order.
    /// Cells with a zero marginal are skipped and counted.
    pub fn observed_pmi(&self) -> (Vec<(PairCount, f64)>, usize) {
        let norm = self.log_normalizer();
        let mut out = Vec::with_capacity(self.pairs.len());
        let mut skipped = 0;
        for p in &self.pairs {
            let (ci, cj) = (self.word_counts[p.i as usize], self.word_counts[p.j as usize]);
            if ci == 0 || cj == 0 {
                skipped += 1;
                continue;
            }
            out.push((*p, p.count.ln() + norm - (ci as f64).ln() - (cj as f64).ln()));
        }
        (out, skipped)
    }

    /// Drops words whose count is below `min_count` (and every cell touching
    /// them) after counting, re-indexing the survivors in order.
    /// Returns the table and the old index of each new word.
    pub fn restrict_to_frequent(&self, min_count: u64) -> (CooccurrenceTable, Vec<u32>) {
        let mut remap = vec![u32::MAX; self.vocab_size];
        let mut kept = Vec::new();
        for (w, &c) in self.word_counts.iter().enumerate() {
            if c >= min_count {
                remap[w] = kept.len() as u32;
                kept.push(w as u32);
            }
        }
        let keys: Vec<(u64, f64)> = self
            .pairs
            .iter()
            .filter_map(|p| {
                let (a, b) = (remap[p.i as usize], remap[p.j as usize]);
                (a != u32::MAX && b != u32::MAX).then(|| (pack(a, b), p.count))
            })
            .collect();
        // Order-preserving remap keeps the keys sorted.
        let counts = kept.iter().map(|&w| self.word_counts[w as usize]).collect();
        (Self::from_sorted(kept.len(), self.window, keys, counts), kept)
    }

    /// Same counts with a different window label; used for synthetic tables.
    pub fn with_window(mut self, window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::param(format!("window must be ≥ 2, got {window}")));
        }
        self.window = window;
        Ok(self)
    }
}

/// Options for [`count_windows_with`].
#[derive(Debug, Clone)]
pub struct CountOptions {
    /// Focus positions per shard. Fixed, so results never depend on threads.
    pub shard_tokens: usize,
    /// Spill the in-memory table to sorted run files once it holds more
    /// than this many distinct cells.
    pub max_cells_in_memory: Option<usize>,
    /// Directory for spill files (defaults to the system temp dir).
    pub spill_dir: Option<PathBuf>,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            shard_tokens: 1 << 16,
            max_cells_in_memory: None,
            spill_dir: None,
        }
    }
}

/// Counts co-occurrences in windows of `q` tokens.
pub fn count_windows(corpus: &Corpus, q: usize) -> Result<CooccurrenceTable> {
    count_windows_with(corpus, q, &CountOptions::default())
}

pub fn count_windows_with(corpus: &Corpus, q: usize, options: &CountOptions) -> Result<CooccurrenceTable> {
    count_tokens(corpus.tokens(), corpus.vocab_size(), q, options)
}

/// Counting over a raw token slice; tokens must be `< vocab_size`.
pub fn count_tokens(tokens: &[u32], vocab_size: usize, q: usize, options: &CountOptions) -> Result<CooccurrenceTable> {
    if q < 2 {
        return Err(Error::param(format!("window must be ≥ 2, got {q}")));
    }
    if tokens.is_empty() {
        return Err(Error::param("corpus is empty"));
    }
    if let Some(pos) = tokens.iter().position(|&t| t as usize >= vocab_size) {
        return Err(Error::data(
            format!("token position {pos}"),
            format!("index {} is outside the vocabulary of {vocab_size}", tokens[pos]),
        ));
    }
    let shard = options.shard_tokens.max(1);
    let shards = tokens.len().div_ceil(shard);
    let group = rayon::current_num_threads().max(1) * 4;

    let mut word_counts = vec![0u64; vocab_size];
    for &t in tokens {
        word_counts[t as usize] += 1;
    }

    let mut acc: HashMap<u64, u64> = HashMap::new();
    let mut spill = SpillRuns::new(options.spill_dir.clone());
    let mut next = 0;
    while next < shards {
        let end = (next + group).min(shards);
        let partials: Vec<HashMap<u64, u64>> = (next..end)
            .into_par_iter()
            .map(|s| count_shard(tokens, q, s * shard, ((s + 1) * shard).min(tokens.len())))
            .collect();
        for part in partials {
            if acc.is_empty() {
                acc = part;
            } else {
                for (k, v) in part {
                    *acc.entry(k).or_insert(0) += v;
                }
            }
        }
        if let Some(limit) = options.max_cells_in_memory {
            if acc.len() > limit {
                spill.write_run(std::mem::take(&mut acc))?;
            }
        }
        next = end;
    }

    let cells = if spill.is_empty() {
        let mut cells: Vec<(u64, u64)> = acc.into_iter().collect();
        cells.sort_unstable_by_key(|&(k, _)| k);
        cells
    } else {
        if !acc.is_empty() {
            spill.write_run(acc)?;
        }
        spill.merge()?
    };
    let keys = cells.into_iter().map(|(k, c)| (k, c as f64)).collect();
    Ok(CooccurrenceTable::from_sorted(vocab_size, q, keys, word_counts))
}

fn count_shard(tokens: &[u32], q: usize, start: usize, end: usize) -> HashMap<u64, u64> {
    let mut map = HashMap::with_capacity((end - start) * (q - 1) / 4 + 16);
    for t in start..end {
        let focus = tokens[t];
        let last = (t + q - 1).min(tokens.len() - 1);
        for &ctx in &tokens[t + 1..=last] {
            *map.entry(pack(focus, ctx)).or_insert(0) += 1;
        }
    }
    map
}

/// Sorted on-disk runs of `(key, count)` records, merged by key at the end.
struct SpillRuns {
    parent: Option<PathBuf>,
    /// Removed with its run files on drop.
    dir: Option<tempfile::TempDir>,
    runs: Vec<PathBuf>,
}

impl SpillRuns {
    fn new(parent: Option<PathBuf>) -> Self {
        Self {
            parent,
            dir: None,
            runs: Vec::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    fn run_dir(&mut self) -> Result<PathBuf> {
        if self.dir.is_none() {
            let parent = self.parent.clone().unwrap_or_else(std::env::temp_dir);
            let dir = tempfile::Builder::new()
                .prefix("randwalk-spill-")
                .tempdir_in(&parent)
                .map_err(|e| Error::io(&parent, e))?;
            self.dir = Some(dir);
        }
        Ok(self.dir.as_ref().expect("just created").path().to_path_buf())
    }

    fn write_run(&mut self, map: HashMap<u64, u64>) -> Result<()> {
        let mut cells: Vec<(u64, u64)> = map.into_iter().collect();
        cells.sort_unstable_by_key(|&(k, _)| k);
        let dir = self.run_dir()?;
        let path = dir.join(format!("run-{:05}.bin", self.runs.len()));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for (k, c) in cells {
            w.write_all(&k.to_le_bytes())
                .and_then(|_| w.write_all(&c.to_le_bytes()))
                .map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.runs.push(path);
        Ok(())
    }

    fn merge(&mut self) -> Result<Vec<(u64, u64)>> {
        let mut readers: Vec<(BufReader<File>, &Path)> = Vec::with_capacity(self.runs.len());
        for p in &self.runs {
            let f = File::open(p).map_err(|e| Error::io(p, e))?;
            readers.push((BufReader::new(f), p.as_path()));
        }
        let mut heap = BinaryHeap::new();
        for (idx, (r, p)) in readers.iter_mut().enumerate() {
            if let Some((k, c)) = read_record(r, p)? {
                heap.push(std::cmp::Reverse((k, idx, c)));
            }
        }
        let mut out: Vec<(u64, u64)> = Vec::new();
        while let Some(std::cmp::Reverse((k, idx, c))) = heap.pop() {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += c,
                _ => out.push((k, c)),
            }
            let (r, p) = &mut readers[idx];
            if let Some((k2, c2)) = read_record(r, p)? {
                heap.push(std::cmp::Reverse((k2, idx, c2)));
            }
        }
        Ok(out)
    }
}

fn read_record(r: &mut BufReader<File>, path: &Path) -> Result<Option<(u64, u64)>> {
    let mut buf = [0u8; 16];
    match r.read_exact(&mut buf) {
        Ok(()) => Ok(Some((
            u64::from_le_bytes(buf[..8].try_into().unwrap()),
            u64::from_le_bytes(buf[8..].try_into().unwrap()),
        ))),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Removes tokens of words seen fewer than `min_count` times before
/// counting and re-indexes the survivors in order. Returns the filtered
/// corpus and the old index of each new word.
pub fn filter_rare_tokens(corpus: &Corpus, min_count: u64) -> Result<(Corpus, Vec<u32>)> {
    let mut counts = vec![0u64; corpus.vocab_size()];
    for &t in corpus.tokens() {
        counts[t as usize] += 1;
    }
    let mut remap = vec![u32::MAX; corpus.vocab_size()];
    let mut kept = Vec::new();
    for (w, &c) in counts.iter().enumerate() {
        if c >= min_count {
            remap[w] = kept.len() as u32;
            kept.push(w as u32);
        }
    }
    let tokens: Vec<u32> = corpus
        .tokens()
        .iter()
        .filter_map(|&t| Some(remap[t as usize]).filter(|&r| r != u32::MAX))
        .collect();
    if tokens.is_empty() {
        return Err(Error::State(format!(
            "no word occurs at least {min_count} times"
        )));
    }
    Ok((Corpus::new(kept.len(), tokens)?, kept))
}

/// `γ = log(q(q-1)/2)`.
pub fn window_shift_gamma(q: usize) -> f64 {
    let q = q as f64;
    (q * (q - 1.0) / 2.0).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowShift {
    /// Count-weighted mean of `PMI_q − PMI_2` over shared pairs.
    pub estimate: f64,
    /// `log(q(q-1)/2)`.
    pub predicted: f64,
    pub pairs_used: usize,
}

/// Measures the PMI offset between a window-`q` table and a window-2 table
/// built from the same corpus. Pairs are weighted by their window-`q` count.
pub fn window_shift_estimate(table_q: &CooccurrenceTable, table_2: &CooccurrenceTable) -> Result<WindowShift> {
    if table_q.vocab_size() != table_2.vocab_size() || table_q.word_counts() != table_2.word_counts() {
        return Err(Error::Precondition(
            "tables must come from the same corpus and vocabulary".into(),
        ));
    }
    let (pmi_q, _) = table_q.observed_pmi();
    let (weighted, weight, used) = pmi_q
        .iter()
        .filter_map(|(p, v)| {
            let x2 = table_2.count(p.i as usize, p.j as usize);
            (x2 > 0.0).then(|| {
                let v2 = table_2.pmi_of_count(
                    x2,
                    table_2.word_counts[p.i as usize],
                    table_2.word_counts[p.j as usize],
                );
                (p.count, v - v2)
            })
        })
        .fold((0.0, 0.0, 0usize), |(s, w, n), (x, diff)| (s + x * diff, w + x, n + 1));
    if used == 0 {
        return Err(Error::State("the tables share no observed pairs".into()));
    }
    Ok(WindowShift {
        estimate: weighted / weight,
        predicted: window_shift_gamma(table_q.window()),
        pairs_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize, tokens: &[u32]) -> Corpus {
        Corpus::new(n, tokens.to_vec()).unwrap()
    }

    #[test]
    fn single_adjacent_pair() {
        let t = count_windows(&corpus(2, &[0, 1]), 2).unwrap();
        assert_eq!(t.count(0, 1), 1.0);
        assert_eq!(t.count(1, 0), 1.0);
        assert_eq!(t.total_pairs(), 1.0);
        assert_eq!(t.empirical_prob(0, 1).unwrap(), 1.0);
        assert_eq!(t.empirical_prob(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn three_token_window() {
        let t = count_windows(&corpus(3, &[0, 1, 2]), 3).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(t.count(i, j), 1.0);
        }
        assert_eq!(t.total_pairs(), 3.0);
    }

    #[test]
    fn repeats_make_self_pairs() {
        let t = count_windows(&corpus(1, &[0, 0, 0]), 2).unwrap();
        assert_eq!(t.count(0, 0), 2.0);
    }

    #[test]
    fn alternating_pair_probability() {
        let t = count_windows(&corpus(2, &[0, 1, 0, 1]), 2).unwrap();
        assert_eq!(t.empirical_prob(0, 1).unwrap(), 1.0);
        assert_eq!(t.empirical_prob(0, 0).unwrap(), 0.0);
        assert_eq!(t.empirical_prob(1, 1).unwrap(), 0.0);
    }

    #[test]
    fn pmi_of_two_token_corpus() {
        let t = count_windows(&corpus(2, &[0, 1]), 2).unwrap();
        let v = t.pmi(0, 1, 0.0).unwrap().value();
        assert!((v - 4f64.ln()).abs() < 1e-15);
        assert_eq!(t.pmi(1, 0, 0.0).unwrap().value(), v);
    }

    #[test]
    fn pmi_of_independent_pair_is_zero() {
        // p(0) = p(1) = 1/2 and p(0,1) = 1/4.
        let t = CooccurrenceTable::from_pairs(2, 2, [(0, 0, 2.0), (0, 1, 1.0), (1, 1, 1.0)], vec![2, 2])
            .unwrap();
        assert!(t.pmi(0, 1, 0.0).unwrap().value().abs() < 1e-12);
    }

    #[test]
    fn pmi_flags_and_errors() {
        let t = CooccurrenceTable::from_pairs(3, 2, [(0, 1, 3.0)], vec![2, 2, 0]).unwrap();
        assert_eq!(t.pmi(0, 0, 0.0).unwrap(), PmiValue::Unseen);
        assert!(t.pmi(0, 0, 0.5).unwrap().observed().is_some());
        assert!(matches!(t.pmi(0, 2, 0.0), Err(Error::Undefined(_))));
        let empty = CooccurrenceTable::from_pairs(2, 2, [], vec![1, 1]).unwrap();
        assert!(matches!(empty.empirical_prob(0, 1), Err(Error::State(_))));
    }

    #[test]
    fn out_of_range_token_names_position() {
        let err = count_tokens(&[0, 1, 5, 1], 3, 2, &CountOptions::default()).unwrap_err();
        match err {
            Error::Data { location, .. } => assert_eq!(location, "token position 2"),
            other => panic!("unexpected {other}"),
        }
        assert!(count_tokens(&[], 3, 2, &CountOptions::default()).is_err());
        assert!(count_tokens(&[0, 1], 3, 1, &CountOptions::default()).is_err());
    }

    #[test]
    fn window_gamma_values() {
        assert_eq!(window_shift_gamma(2), 0.0);
        assert!((window_shift_gamma(10) - 3.80666).abs() < 1e-5);
    }

    #[test]
    fn spilled_counting_matches_in_memory() {
        let tokens: Vec<u32> = (0..5000u32).map(|i| (i * 7919 + i / 3) % 40).collect();
        let plain = count_tokens(&tokens, 40, 4, &CountOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = CountOptions {
            shard_tokens: 257,
            max_cells_in_memory: Some(50),
            spill_dir: Some(dir.path().to_path_buf()),
        };
        let spilled = count_tokens(&tokens, 40, 4, &opts).unwrap();
        assert_eq!(plain, spilled);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn restriction_after_counting() {
        let t = count_windows(&corpus(3, &[0, 1, 0, 2, 0, 1]), 2).unwrap();
        let (r, kept) = t.restrict_to_frequent(2);
        assert_eq!(kept, vec![0, 1]);
        assert_eq!(r.vocab_size(), 2);
        assert_eq!(r.count(0, 1), t.count(0, 1));
        assert_eq!(r.total_pairs(), t.count(0, 1) + t.count(0, 0) + t.count(1, 1));
    }

    #[test]
    fn filtering_before_counting() {
        let (c, kept) = filter_rare_tokens(&corpus(3, &[0, 1, 0, 2, 0, 1]), 2).unwrap();
        assert_eq!(kept, vec![0, 1]);
        assert_eq!(c.tokens(), &[0, 1, 0, 0, 1]);
        assert!(filter_rare_tokens(&corpus(3, &[0, 1, 2]), 5).is_err());
    }

    /// Quadratic enumeration of every in-window position pair.
    fn brute_force(tokens: &[u32], n: usize, q: usize) -> Vec<PairCount> {
        let mut cells = std::collections::BTreeMap::new();
        for s in 0..tokens.len() {
            for t in s + 1..tokens.len() {
                if t - s < q {
                    let (a, b) = (tokens[s].min(tokens[t]), tokens[s].max(tokens[t]));
                    *cells.entry((a, b)).or_insert(0.0) += 1.0;
                }
            }
        }
        let _ = n;
        cells.into_iter().map(|((i, j), count)| PairCount { i, j, count }).collect()
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn counts_match_brute_force_for_any_sharding(
            tokens in proptest::collection::vec(0u32..12, 1..400),
            q in 2usize..7,
            shard in 1usize..50,
        ) {
            let opts = CountOptions { shard_tokens: shard, ..CountOptions::default() };
            let table = count_tokens(&tokens, 12, q, &opts).unwrap();
            let expected = brute_force(&tokens, 12, q);
            proptest::prop_assert_eq!(table.pairs(), &expected[..]);
            let pairs: f64 = expected.iter().map(|p| p.count).sum();
            proptest::prop_assert_eq!(table.total_pairs(), pairs);
            proptest::prop_assert_eq!(table.word_counts().iter().sum::<u64>(), tokens.len() as u64);
            let single = count_tokens(&tokens, 12, q, &CountOptions { shard_tokens: 1 << 20, ..CountOptions::default() }).unwrap();
            proptest::prop_assert_eq!(single.pairs(), table.pairs());
        }

        #[test]
        fn pmi_is_symmetric_and_probabilities_sum_to_one(tokens in proptest::collection::vec(0u32..8, 2..200), q in 2usize..5) {
            let table = count_tokens(&tokens, 8, q, &CountOptions::default()).unwrap();
            let mut total = 0.0;
            for p in table.pairs() {
                let (i, j) = (p.i as usize, p.j as usize);
                total += table.empirical_prob(i, j).unwrap();
                let a = table.pmi(i, j, 0.0).unwrap().value();
                let b = table.pmi(j, i, 0.0).unwrap().value();
                proptest::prop_assert_eq!(a.to_bits(), b.to_bits());
                proptest::prop_assert_eq!(table.count(i, j), table.count(j, i));
            }
            proptest::prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}
