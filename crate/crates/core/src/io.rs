//! Text file formats and atomic writes.
//!
//! * ensemble / vectors: header `n d`, then `label v₁ … v_d` per word with
//!   17 significant digits; a vectors file ends with `C <value>`.
//! * corpus: whitespace-separated token indices (or labels), 1000 per line.
//! * co-occurrence: header `n q L̃`, then `i j X` with `i ≤ j`, sorted.
//! * word counts: `i count` per word.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::cooccur::CooccurrenceTable;
use crate::error::{Error, Result};
use crate::generator::{Corpus, WordVectorEnsemble};

pub const TOKENS_PER_LINE: usize = 1000;

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn fmt_real(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

pub fn ensemble_to_string(ens: &WordVectorEnsemble, constant: Option<f64>) -> String {
    let mut out = format!("{} {}\n", ens.len(), ens.dim());
    for w in 0..ens.len() {
        out.push_str(ens.label(w));
        for &x in ens.vector(w) {
            out.push(' ');
            fmt_real(&mut out, x);
        }
        out.push('\n');
    }
    if let Some(c) = constant {
        out.push_str("C ");
        fmt_real(&mut out, c);
        out.push('\n');
    }
    out
}

/// An ensemble or vectors file; the `C` trailer is optional.
#[derive(Debug, Clone)]
pub struct VectorsFile {
    pub vectors: WordVectorEnsemble,
    pub constant: Option<f64>,
}

pub fn parse_ensemble(text: &str, source: &str) -> Result<VectorsFile> {
    let loc = |line: usize| format!("{source}:{line}");
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::data(loc(1), "empty vectors file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_count = |s: &str| s.parse::<usize>().ok().filter(|&v| v > 0);
    let (n, d) = match fields.as_slice() {
        [a, b] => match (parse_count(a), parse_count(b)) {
            (Some(n), Some(d)) => (n, d),
            _ => return Err(Error::data(loc(hline + 1), "header must be `n d` with positive integers")),
        },
        _ => return Err(Error::data(loc(hline + 1), "header must be `n d`")),
    };
    let mut labels = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    let mut constant = None;
    for (i, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if labels.len() == n {
            match fields.as_slice() {
                ["C", v] if constant.is_none() => {
                    let c = v
                        .parse::<f64>()
                        .ok()
                        .filter(|c| c.is_finite())
                        .ok_or_else(|| Error::data(loc(i + 1), format!("invalid constant `{v}`")))?;
                    constant = Some(c);
                    continue;
                }
                _ => return Err(Error::data(loc(i + 1), format!("expected {n} words, found more lines"))),
            }
        }
        if fields.len() != d + 1 {
            return Err(Error::data(
                loc(i + 1),
                format!("expected a label and {d} values, found {} fields", fields.len()),
            ));
        }
        for f in &fields[1..] {
            match f.parse::<f64>() {
                Ok(x) if x.is_finite() => data.push(x),
                _ => return Err(Error::data(loc(i + 1), format!("invalid number `{f}`"))),
            }
        }
        labels.push(fields[0].to_string());
    }
    if labels.len() != n {
        return Err(Error::data(
            loc(text.lines().count()),
            format!("header promises {n} words, file has {}", labels.len()),
        ));
    }
    let mut seen = HashMap::with_capacity(n);
    for (i, l) in labels.iter().enumerate() {
        if let Some(prev) = seen.insert(l.as_str(), i) {
            return Err(Error::data(source, format!("label `{l}` used by words {prev} and {i}")));
        }
    }
    let vectors = WordVectorEnsemble::from_vectors(d, data)?.with_labels(labels)?;
    Ok(VectorsFile { vectors, constant })
}

pub fn read_ensemble(path: &Path) -> Result<VectorsFile> {
    parse_ensemble(&read_text(path)?, &path.display().to_string())
}

pub fn corpus_to_string(corpus: &Corpus) -> String {
    let mut out = String::with_capacity(corpus.len() * 5);
    for line in corpus.tokens().chunks(TOKENS_PER_LINE) {
        for (k, t) in line.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{t}");
        }
        out.push('\n');
    }
    out
}

/// Tokens are indices, or labels when `labels` is given and the token is not
/// an index.
pub fn parse_corpus(text: &str, vocab_size: usize, labels: Option<&[String]>, source: &str) -> Result<Corpus> {
    let index: Option<HashMap<&str, u32>> =
        labels.map(|ls| ls.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect());
    let mut tokens = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let id = match tok.parse::<u64>() {
                Ok(v) => v,
                Err(_) => match index.as_ref().and_then(|m| m.get(tok)) {
                    Some(&v) => v as u64,
                    None => {
                        return Err(Error::data(
                            format!("{source}:{} (position {})", lineno + 1, tokens.len()),
                            format!("unknown token `{tok}`"),
                        ))
                    }
                },
            };
            if id >= vocab_size as u64 {
                return Err(Error::data(
                    format!("{source}:{} (position {})", lineno + 1, tokens.len()),
                    format!("token {id} is outside the vocabulary of {vocab_size} words"),
                ));
            }
            tokens.push(id as u32);
        }
    }
    if tokens.is_empty() {
        return Err(Error::data(source, "corpus is empty"));
    }
    Corpus::new(vocab_size, tokens)
}

pub fn read_corpus(path: &Path, vocab_size: usize, labels: Option<&[String]>) -> Result<Corpus> {
    parse_corpus(&read_text(path)?, vocab_size, labels, &path.display().to_string())
}

pub fn table_to_string(table: &CooccurrenceTable) -> String {
    let mut out = format!("{} {} {}\n", table.vocab_size(), table.window(), table.total_pairs());
    for p in table.pairs() {
        let _ = writeln!(out, "{} {} {}", p.i, p.j, p.count);
    }
    out
}

pub fn word_counts_to_string(table: &CooccurrenceTable) -> String {
    let mut out = String::new();
    for (i, c) in table.word_counts().iter().enumerate() {
        let _ = writeln!(out, "{i} {c}");
    }
    out
}

pub fn parse_table(text: &str, counts: &str, source: &str, counts_source: &str) -> Result<CooccurrenceTable> {
    let loc = |s: &str, line: usize| format!("{s}:{line}");
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| Error::data(loc(source, 1), "empty co-occurrence file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (n, q, total) = match h.as_slice() {
        [n, q, t] => match (n.parse::<usize>(), q.parse::<usize>(), t.parse::<f64>()) {
            (Ok(n), Ok(q), Ok(t)) if n > 0 && t.is_finite() => (n, q, t),
            _ => return Err(Error::data(loc(source, hl + 1), "header must be `n q L̃`")),
        },
        _ => return Err(Error::data(loc(source, hl + 1), "header must be `n q L̃`")),
    };
    let mut cells = Vec::new();
    let mut last: Option<(usize, usize)> = None;
    for (i, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let cell = match f.as_slice() {
            [a, b, x] => match (a.parse::<usize>(), b.parse::<usize>(), x.parse::<f64>()) {
                (Ok(a), Ok(b), Ok(x)) if a <= b && b < n && x.is_finite() && x >= 0.0 => (a, b, x),
                _ => {
                    return Err(Error::data(
                        loc(source, i + 1),
                        format!("expected `i j X` with i ≤ j < {n} and X ≥ 0"),
                    ))
                }
            },
            _ => return Err(Error::data(loc(source, i + 1), "expected `i j X`")),
        };
        if last.is_some_and(|l| l >= (cell.0, cell.1)) {
            return Err(Error::data(loc(source, i + 1), "cells must be sorted by (i, j) without repeats"));
        }
        last = Some((cell.0, cell.1));
        cells.push(cell);
    }
    let mut word_counts = vec![0u64; n];
    for (i, line) in counts.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            [w, c] => match (w.parse::<usize>(), c.parse::<u64>()) {
                (Ok(w), Ok(c)) if w < n => word_counts[w] = c,
                _ => return Err(Error::data(loc(counts_source, i + 1), format!("expected `i count` with i < {n}"))),
            },
            _ => return Err(Error::data(loc(counts_source, i + 1), "expected `i count`")),
        }
    }
    let table = CooccurrenceTable::from_pairs(n, q, cells, word_counts)?;
    if (table.total_pairs() - total).abs() > 1e-9 * total.abs().max(1.0) {
        return Err(Error::data(
            loc(source, hl + 1),
            format!("header total {total} differs from the cell sum {}", table.total_pairs()),
        ));
    }
    Ok(table)
}

pub fn read_table(path: &Path, counts_path: &Path) -> Result<CooccurrenceTable> {
    parse_table(
        &read_text(path)?,
        &read_text(counts_path)?,
        &path.display().to_string(),
        &counts_path.display().to_string(),
    )
}
