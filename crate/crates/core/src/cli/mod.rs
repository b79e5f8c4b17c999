//! Command-line pipelines: `generate`, `count`, `train`, `verify`,
//! `analogy`, `testbed`.
//!
//! Every parameter can come from a `--config` file (`key = value`) or a flag
//! of the same name (`--key value`, underscores as dashes); flags win.
//! Each run writes `run_manifest.<command>.txt` into `out_dir` with the
//! config hash, seeds, version and output digests.
//!
//! Exit codes: 0 success, 2 validation, 3 I/O, 4 numeric failure.

pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, Command};
use sha2::{Digest, Sha256};

use crate::analogy::{self, AnalogyEngine, Solver, Substitution, TestbedConfig};
use crate::cooccur::{self, CountOptions};
use crate::diagnostics::{self, DiagnosticsReport, NormRule};
use crate::error::{Error, Result};
use crate::generator::{self, DiscourseWalkConfig, EmissionSampler, ScaleLaw, WordVectorEnsemble};
use crate::io;
use crate::numerics::DenseMatrix;
use crate::rng::roles;
use crate::trainer::{self, BatchMode, Objective, TrainingConfig};
use config::{key, parse_config, path_key, KeySpec, Params};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Keys that cannot change any output byte. Input files enter the manifest
/// through their digests instead of their paths.
fn not_hashed(specs: &[KeySpec]) -> Vec<&'static str> {
    specs.iter().filter(|s| s.is_path || s.name == "threads").map(|s| s.name).collect()
}

pub fn exit_code(err: &Error) -> i32 {
    err.exit_code()
}

const COMMON: &[KeySpec] = &[
    path_key("out_dir", "directory for all outputs (must exist)"),
    key("threads", None, "worker threads (default: all cores)"),
];

const GENERATE: &[KeySpec] = &[
    key("n", None, "vocabulary size"),
    key("d", None, "dimension"),
    key("length", None, "corpus length T in tokens"),
    key("kappa", Some("5"), "scale cap κ"),
    key("scale_fraction", Some("0.35"), "uniform scale law upper end as a fraction of κ"),
    key("fixed_scale", None, "use s ≡ value instead of the uniform law"),
    key("epsilon", Some("0.05"), "walk step bound ε₂"),
    key("jump_probability", Some("0"), "probability of a fresh uniform discourse per step"),
    key("sampler", Some("cached"), "emission sampler: cached | full"),
    key("seed", Some("1"), "master seed"),
];

const COUNT: &[KeySpec] = &[
    path_key("corpus", "corpus file"),
    key("n", None, "vocabulary size"),
    key("q", Some("2"), "window size in tokens"),
    path_key("vocab", "ensemble file whose labels resolve string tokens"),
    key("min_count", Some("0"), "drop words seen fewer times"),
    key("filter", Some("before"), "rare-word filtering: before | after counting"),
    key("shard_tokens", Some("65536"), "focus positions per counting shard"),
    key("max_cells_in_memory", None, "spill sorted runs to disk above this many cells"),
    path_key("spill_dir", "directory for spill files"),
];

const TRAIN: &[KeySpec] = &[
    path_key("cooccur", "co-occurrence file"),
    path_key("word_counts", "word-count file"),
    key("objective", Some("sn"), "sn | pmi"),
    key("d", None, "dimension"),
    key("x_max", Some("100"), "weight truncation X_max"),
    key("learning_rate", Some("0.05"), "AdaGrad η"),
    key("iterations", Some("100"), "epochs"),
    key("batch", Some("full"), "full | sharded"),
    key("shard_cells", Some("8192"), "cells per shard in sharded mode"),
    key("constant_init", None, "initial C (default: mean log X)"),
    key("seed", Some("1"), "master seed"),
];

const VERIFY: &[KeySpec] = &[
    path_key("vectors", "vectors or ensemble file"),
    path_key("cooccur", "co-occurrence file"),
    path_key("word_counts", "word-count file"),
    path_key("cooccur_q2", "window-2 co-occurrence file of the same corpus (window shift)"),
    path_key("word_counts_q2", "word-count file for cooccur_q2"),
    key("constant", None, "C for the SN-form fit (default: the vectors file trailer)"),
    key("sections", Some("all"), "comma list: partition,isotropy,norm_frequency,joint_form,fit,window_shift,noise"),
    key("samples", Some("1000"), "discourse samples for the partition check"),
    key("norm_rule", Some("inverse_mean"), "inverse_mean | unit"),
    key("top_words", Some("500"), "words in the norm-frequency fit"),
    key("top_pairs", Some("2000"), "pairs in the joint-form fit"),
    key("x_max", Some("100"), "weight truncation for fit residuals"),
    key("trials", Some("100"), "noise vectors for the attenuation check"),
    key("seed", Some("1"), "master seed"),
];

const ANALOGY: &[KeySpec] = &[
    path_key("vectors", "vectors file"),
    path_key("questions", "analogy file (`: section` headers, `a b c d` lines)"),
    key("solver", Some("plain"), "plain | rd | rd-nn"),
    key("k", Some("4"), "clusters (rd) or neighbour pairs (rd-nn)"),
    key("neighborhood", Some("300"), "rd-nn neighbourhood size"),
    key("include_query_words", Some("false"), "allow a, b, c as answers"),
    key("substitution", Some("projection"), "projection | direction"),
    key("seed", Some("1"), "master seed"),
];

const TESTBED: &[KeySpec] = &[
    key("d", Some("50"), "dimension"),
    key("relations", Some("4"), "planted relations"),
    key("pairs", Some("50"), "word pairs per relation"),
    key("questions", Some("25"), "questions per relation"),
    key("vocab_size", Some("1000"), "total words including fillers"),
    key("relation_norm", Some("1"), "‖μ_r‖"),
    key("category_weight", Some("0.6"), "shared category weight of x words"),
    key("noise", Some("1.2"), "per-pair displacement noise"),
    key("seed", Some("1"), "master seed"),
];

fn commands() -> [(&'static str, &'static str, &'static [KeySpec]); 6] {
    [
        ("generate", "sample word vectors and a corpus", GENERATE),
        ("count", "count windowed co-occurrences", COUNT),
        ("train", "fit SN or PMI embeddings", TRAIN),
        ("verify", "run model diagnostics", VERIFY),
        ("analogy", "evaluate analogy solvers", ANALOGY),
        ("testbed", "write a planted analogy testbed", TESTBED),
    ]
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn specs_for(extra: &'static [KeySpec]) -> Vec<KeySpec> {
    extra.iter().chain(COMMON).copied().collect()
}

fn build_cli() -> Command {
    let mut cli = Command::new("randwalk")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Random-walk log-linear text model: generation, counting, training, diagnostics, analogies")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about, specs) in commands() {
        let mut sub = Command::new(name).about(about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value configuration file"),
        );
        for s in specs_for(specs) {
            let mut help = s.help.to_string();
            if let Some(d) = s.default {
                help.push_str(&format!(" [default: {d}]"));
            }
            sub = sub.arg(
                Arg::new(s.name)
                    .long(flag_name(s.name))
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .help(help),
            );
        }
        cli = cli.subcommand(sub);
    }
    cli
}

/// Parses arguments, runs the subcommand and returns the exit code.
/// Diagnostics go to stderr; reports to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match build_cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let all = specs_for(specs_of(name));
    match resolve(name_static(name), &all, sub).and_then(|p| execute(&p)) {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("randwalk {name}: {e}");
            exit_code(&e)
        }
    }
}

fn specs_of(name: &str) -> &'static [KeySpec] {
    commands().into_iter().find(|c| c.0 == name).expect("known subcommand").2
}

fn name_static(name: &str) -> &'static str {
    commands().into_iter().find(|c| c.0 == name).map(|c| c.0).expect("known subcommand")
}

fn resolve(name: &'static str, specs: &[KeySpec], m: &clap::ArgMatches) -> Result<Params> {
    let file = match m.get_one::<String>("config") {
        Some(p) => {
            let path = PathBuf::from(p);
            parse_config(&io::read_text(&path)?, p)?
        }
        None => BTreeMap::new(),
    };
    let mut flags = BTreeMap::new();
    for s in specs {
        if let Some(v) = m.get_one::<String>(s.name) {
            flags.insert(s.name.to_string(), v.clone());
        }
    }
    Params::resolve(name, specs, file, flags)
}

fn execute(p: &Params) -> Result<String> {
    let threads: Option<usize> = p.get_opt("threads")?;
    if threads == Some(0) {
        return Err(Error::param("threads must be ≥ 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match p.command() {
        "generate" => cmd_generate(p),
        "count" => cmd_count(p),
        "train" => cmd_train(p),
        "verify" => cmd_verify(p),
        "analogy" => cmd_analogy(p),
        "testbed" => cmd_testbed(p),
        other => Err(Error::param(format!("unknown command {other}"))),
    })
}

/// Output directory, checked before any work starts.
fn out_dir(p: &Params) -> Result<PathBuf> {
    let dir = p.path("out_dir")?;
    if !dir.is_dir() {
        return Err(Error::io(
            &dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    Ok(dir)
}

fn sha256_hex(bytes: &[u8]) -> String {
    config::hex(&Sha256::digest(bytes))
}

/// Collects outputs in memory so they are all validated before any is
/// written, then writes each atomically plus the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
    inputs: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Self {
        Self { dir, files: Vec::new(), inputs: Vec::new() }
    }

    fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    fn input(&mut self, key: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.push((key.to_string(), sha256_hex(&bytes)));
        Ok(())
    }

    fn commit(mut self, p: &Params, seed: Option<u64>, seed_roles: &[(&str, u64)]) -> Result<String> {
        let mut m = String::new();
        let _ = writeln!(m, "command = {}", p.command());
        let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
        let ignore = not_hashed(&specs_for(specs_of(p.command())));
        let _ = writeln!(m, "config_sha256 = {}", p.hash(&ignore));
        if let Some(seed) = seed {
            let _ = writeln!(m, "seed = {seed}");
            for (name, role) in seed_roles {
                let _ = writeln!(m, "subseed.{name} = {:#018x}", seed ^ role);
            }
        }
        for (k, h) in &self.inputs {
            let _ = writeln!(m, "input.{k}.sha256 = {h}");
        }
        for (name, bytes) in &self.files {
            let _ = writeln!(m, "output.{name}.sha256 = {}", sha256_hex(bytes));
        }
        m.push_str("[config]\n");
        m.push_str(&p.canonical(&ignore));
        self.files.push((format!("run_manifest.{}.txt", p.command()), m.into_bytes()));
        let mut summary = String::new();
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            io::write_atomic(&path, bytes)?;
            let _ = writeln!(summary, "wrote {}", path.display());
        }
        Ok(summary)
    }
}

fn cmd_generate(p: &Params) -> Result<String> {
    let dir = out_dir(p)?;
    let (n, d, length): (usize, usize, usize) = (p.get("n")?, p.get("d")?, p.get("length")?);
    let kappa: f64 = p.get("kappa")?;
    let law = match p.get_opt::<f64>("fixed_scale")? {
        Some(scale) => ScaleLaw::Fixed { scale },
        None => ScaleLaw::Uniform { upper_fraction: p.get("scale_fraction")? },
    };
    let seed: u64 = p.get("seed")?;
    let mut walk = DiscourseWalkConfig::new(d, p.get("epsilon")?, length, seed);
    walk.jump_probability = p.get("jump_probability")?;
    walk.sampler = match p.raw("sampler")? {
        "cached" => EmissionSampler::CachedReference,
        "full" => EmissionSampler::FullCdf,
        other => return Err(Error::param(format!("sampler must be cached or full, got {other}"))),
    };
    walk.validate()?;
    let ens = generator::sample_ensemble(n, d, kappa, law, seed)?;
    let corpus = generator::generate_corpus(&ens, &walk)?;
    let mut out = Outputs::new(dir);
    out.add("ensemble.txt", io::ensemble_to_string(&ens, None));
    out.add("corpus.txt", io::corpus_to_string(&corpus));
    out.commit(
        p,
        Some(seed),
        &[("ensemble", roles::ENSEMBLE), ("walk", roles::WALK), ("emission", roles::EMISSION)],
    )
}

fn cmd_count(p: &Params) -> Result<String> {
    let dir = out_dir(p)?;
    let corpus_path = p.path("corpus")?;
    let (n, q): (usize, usize) = (p.get("n")?, p.get("q")?);
    if q < 2 {
        return Err(Error::param(format!("q must be ≥ 2, got {q}")));
    }
    let min_count: u64 = p.get("min_count")?;
    let filter = p.raw("filter")?;
    if !matches!(filter, "before" | "after") {
        return Err(Error::param(format!("filter must be before or after, got {filter}")));
    }
    let options = CountOptions {
        shard_tokens: p.get("shard_tokens")?,
        max_cells_in_memory: p.get_opt("max_cells_in_memory")?,
        spill_dir: p.get_opt::<String>("spill_dir")?.map(PathBuf::from),
    };
    if options.shard_tokens == 0 {
        return Err(Error::param("shard_tokens must be ≥ 1"));
    }
    let mut out = Outputs::new(dir);
    let labels = match p.get_opt::<String>("vocab")? {
        Some(v) => {
            let path = PathBuf::from(v);
            out.input("vocab", &path)?;
            Some(io::read_ensemble(&path)?.vectors.labels().to_vec())
        }
        None => None,
    };
    out.input("corpus", &corpus_path)?;
    let corpus = io::read_corpus(&corpus_path, n, labels.as_deref())?;
    let (table, kept) = if min_count > 1 && filter == "before" {
        let (filtered, kept) = cooccur::filter_rare_tokens(&corpus, min_count)?;
        (cooccur::count_windows_with(&filtered, q, &options)?, Some(kept))
    } else {
        let t = cooccur::count_windows_with(&corpus, q, &options)?;
        if min_count > 1 {
            let (t, kept) = t.restrict_to_frequent(min_count);
            (t, Some(kept))
        } else {
            (t, None)
        }
    };
    out.add("cooccur.txt", io::table_to_string(&table));
    out.add("word_counts.txt", io::word_counts_to_string(&table));
    if let Some(kept) = kept {
        let map: String = kept.iter().enumerate().map(|(new, old)| format!("{new} {old}\n")).collect();
        out.add("vocab_map.txt", map);
    }
    out.commit(p, None, &[])
}

fn read_table_inputs(p: &Params, out: &mut Outputs, table_key: &str, counts_key: &str) -> Result<cooccur::CooccurrenceTable> {
    let (tp, cp) = (p.path(table_key)?, p.path(counts_key)?);
    out.input(table_key, &tp)?;
    out.input(counts_key, &cp)?;
    io::read_table(&tp, &cp)
}

fn cmd_train(p: &Params) -> Result<String> {
    let dir = out_dir(p)?;
    let objective: Objective = p.get("objective")?;
    let seed: u64 = p.get("seed")?;
    let mut cfg = TrainingConfig::new(objective, p.get("d")?, seed);
    cfg.x_max = p.get("x_max")?;
    cfg.learning_rate = p.get("learning_rate")?;
    cfg.iterations = p.get("iterations")?;
    cfg.constant_init = p.get_opt("constant_init")?;
    cfg.batch = match p.raw("batch")? {
        "full" => BatchMode::FullBatch,
        "sharded" => BatchMode::Sharded { shard_cells: p.get("shard_cells")? },
        other => return Err(Error::param(format!("batch must be full or sharded, got {other}"))),
    };
    cfg.validate()?;
    let mut out = Outputs::new(dir);
    let table = read_table_inputs(p, &mut out, "cooccur", "word_counts")?;
    let outcome = trainer::train(&table, &cfg)?;
    let constant = (objective == Objective::Sn).then_some(outcome.constant);
    out.add("vectors.txt", io::ensemble_to_string(&outcome.vectors, constant.or(Some(0.0))));
    out.add("train_log.txt", outcome.log_lines());
    let mut summary = out.commit(
        p,
        Some(seed),
        &[("train_init", roles::TRAIN_INIT), ("shard_order", roles::SHARD_ORDER)],
    )?;
    let _ = writeln!(summary, "final loss {:.6e}, C = {:.6}", outcome.final_loss, outcome.constant);
    if outcome.excluded_cells > 0 {
        let _ = writeln!(summary, "warning: {} cells excluded (undefined PMI)", outcome.excluded_cells);
    }
    Ok(summary)
}

const SECTIONS: &[&str] = &["partition", "isotropy", "norm_frequency", "joint_form", "fit", "window_shift", "noise"];

fn cmd_verify(p: &Params) -> Result<String> {
    let dir = out_dir(p)?;
    let requested: Vec<String> = match p.raw("sections")? {
        "all" => SECTIONS.iter().map(|s| s.to_string()).collect(),
        list => list.split(',').map(|s| s.trim().to_string()).collect(),
    };
    if let Some(bad) = requested.iter().find(|s| !SECTIONS.contains(&s.as_str())) {
        return Err(Error::param(format!("unknown section `{bad}` (known: {})", SECTIONS.join(", "))));
    }
    let want = |s: &str| requested.iter().any(|r| r == s);
    let seed: u64 = p.get("seed")?;
    let rule = match p.raw("norm_rule")? {
        "inverse_mean" => NormRule::default(),
        "unit" => NormRule::Unit,
        other => return Err(Error::param(format!("norm_rule must be inverse_mean or unit, got {other}"))),
    };
    let (samples, top_words, top_pairs, trials): (usize, usize, usize, usize) =
        (p.get("samples")?, p.get("top_words")?, p.get("top_pairs")?, p.get("trials")?);
    let x_max: f64 = p.get("x_max")?;

    let mut out = Outputs::new(dir);
    let vpath = p.path("vectors")?;
    out.input("vectors", &vpath)?;
    let vf = io::read_ensemble(&vpath)?;
    let ens: &WordVectorEnsemble = &vf.vectors;
    let needs_table = ["norm_frequency", "joint_form", "fit", "window_shift"].iter().any(|s| want(s));
    let table = if needs_table { Some(read_table_inputs(p, &mut out, "cooccur", "word_counts")?) } else { None };
    let table2 = if want("window_shift") {
        Some(read_table_inputs(p, &mut out, "cooccur_q2", "word_counts_q2")?)
    } else {
        None
    };
    let constant = match p.get_opt::<f64>("constant")? {
        Some(c) => Some(c),
        None => vf.constant,
    };

    let mut report = DiagnosticsReport::default();
    if want("partition") {
        report.partition = Some(diagnostics::partition_concentration(ens, samples, rule, seed)?);
    }
    if want("isotropy") {
        report.isotropy = Some(diagnostics::isotropy_ratio(ens)?);
    }
    if let Some(t) = &table {
        if want("norm_frequency") {
            report.norm_frequency = Some(diagnostics::norm_frequency_fit(ens, t.word_counts(), top_words)?);
        }
        if want("joint_form") {
            report.joint_form = Some(diagnostics::joint_form_fit(ens, t, top_pairs)?);
        }
        if want("fit") {
            let c = constant.ok_or_else(|| {
                Error::param("the SN-form fit needs `constant` or a vectors file with a `C` trailer")
            })?;
            report.sn_fit = Some(diagnostics::objective_fit(ens, c, t, Objective::Sn, x_max)?);
            report.pmi_fit = Some(diagnostics::objective_fit(ens, 0.0, t, Objective::Pmi, x_max)?);
        }
        if let Some(t2) = &table2 {
            report.window_shift = Some(cooccur::window_shift_estimate(t, t2)?);
        }
    }
    if want("noise") {
        let v = DenseMatrix::from_vec(ens.len(), ens.dim(), ens.as_slice().to_vec())?;
        report.noise_reduction = Some(diagnostics::noise_reduction_check(&v, trials, seed)?);
    }
    let text = report.to_key_value();
    out.add("report.txt", text.clone());
    if let Some(ps) = &report.partition {
        out.add("zc_hist.csv", ps.histogram.to_csv());
    }
    if let Some(nf) = &report.norm_frequency {
        out.add("norm_vs_logfreq.csv", nf.to_csv());
    }
    let summary = out.commit(
        p,
        Some(seed),
        &[("partition", roles::PARTITION), ("noise", roles::NOISE), ("svd_sketch", roles::SVD_SKETCH)],
    )?;
    Ok(format!("{text}{summary}"))
}

fn cmd_analogy(p: &Params) -> Result<String> {
    let dir = out_dir(p)?;
    let seed: u64 = p.get("seed")?;
    let k: usize = p.get("k")?;
    let solver = match p.raw("solver")? {
        "plain" => Solver::Plain,
        "rd" => Solver::Rd { k, seed },
        "rd-nn" => Solver::RdNn { k, neighborhood: p.get("neighborhood")? },
        other => return Err(Error::param(format!("solver must be plain, rd or rd-nn, got {other}"))),
    };
    let substitution = match p.raw("substitution")? {
        "projection" => Substitution::Projection,
        "direction" => Substitution::Direction,
        other => return Err(Error::param(format!("substitution must be projection or direction, got {other}"))),
    };
    let include = p.bool("include_query_words")?;
    let mut out = Outputs::new(dir);
    let (vpath, qpath) = (p.path("vectors")?, p.path("questions")?);
    out.input("vectors", &vpath)?;
    out.input("questions", &qpath)?;
    let vf = io::read_ensemble(&vpath)?;
    let set = analogy::parse_questions(&io::read_text(&qpath)?, vf.vectors.labels()).map_err(|e| match e {
        Error::Data { location, message } => Error::data(format!("{}: {location}", qpath.display()), message),
        other => other,
    })?;
    if set.questions.is_empty() {
        return Err(Error::State("no question has all four words in the vocabulary".into()));
    }
    let mut engine = AnalogyEngine::new(&vf.vectors)?.with_substitution(substitution);
    if include {
        engine = engine.including_query_words();
    }
    let eval = engine.evaluate(&set.questions, &solver)?;
    let mut text = format!("solver = {}\n", eval.solver);
    text.push_str(&eval.report.to_text());
    let _ = writeln!(text, "skipped (unknown words) = {}", set.total_skipped());
    if eval.fallbacks > 0 {
        let _ = writeln!(text, "warning: {} questions fell back to the plain query", eval.fallbacks);
    }
    out.add("accuracy.txt", text.clone());
    out.add("accuracy.csv", eval.report.to_csv());
    let summary = out.commit(p, Some(seed), &[("kmeans", roles::KMEANS)])?;
    Ok(format!("{text}{summary}"))
}

fn cmd_testbed(p: &Params) -> Result<String> {
    let dir = out_dir(p)?;
    let seed: u64 = p.get("seed")?;
    let cfg = TestbedConfig {
        dim: p.get("d")?,
        relations: p.get("relations")?,
        pairs_per_relation: p.get("pairs")?,
        questions_per_relation: p.get("questions")?,
        vocab_size: p.get("vocab_size")?,
        relation_norm: p.get("relation_norm")?,
        category_weight: p.get("category_weight")?,
        noise: p.get("noise")?,
        seed,
    };
    let tb = analogy::planted_testbed(&cfg)?;
    let mut questions = String::new();
    let mut section = None;
    for q in &tb.questions {
        if q.relation != section {
            let _ = writeln!(questions, ": {}", q.relation.as_deref().unwrap_or("relation"));
            section = q.relation.clone();
        }
        let l = |w: usize| tb.vectors.label(w);
        let _ = writeln!(questions, "{} {} {} {}", l(q.a), l(q.b), l(q.c), l(q.answer));
    }
    let mut out = Outputs::new(dir);
    out.add("testbed_vectors.txt", io::ensemble_to_string(&tb.vectors, None));
    out.add("questions.txt", questions);
    out.commit(p, Some(seed), &[("testbed", roles::TESTBED)])
}
