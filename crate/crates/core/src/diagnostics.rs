//! Empirical checks of the model's closed-form predictions.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cooccur::{CooccurrenceTable, WindowShift};
use crate::error::{Error, Result};
use crate::generator::{partition_function, WordVectorEnsemble};
use crate::numerics::stats::quantile_sorted;
use crate::numerics::{linear_fit, norm, pearson, singular_values, DenseMatrix, LinearFit, PseudoInverse};
use crate::rng::{roles, CounterRng};
use crate::trainer::Objective;

pub const HIST_BINS: usize = 40;
pub const HIST_LOWER: f64 = 0.5;
pub const HIST_UPPER: f64 = 1.5;
pub const DEFAULT_TOP_WORDS: usize = 500;
pub const DEFAULT_TOP_PAIRS: usize = 2000;

/// How the sampled discourse vectors are scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormRule {
    /// `‖c‖ = factor / μ_w`, with `μ_w` the mean word-vector norm.
    InverseMeanNorm { factor: f64 },
    Unit,
}

impl Default for NormRule {
    fn default() -> Self {
        NormRule::InverseMeanNorm { factor: 4.0 }
    }
}

/// Histogram of `Z_c / mean` over `[0.5, 1.5]` with overflow bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub bins: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    fn build(values: &[f64]) -> Self {
        let mut h = Histogram {
            lower: HIST_LOWER,
            upper: HIST_UPPER,
            bins: vec![0; HIST_BINS],
            underflow: 0,
            overflow: 0,
        };
        let width = (HIST_UPPER - HIST_LOWER) / HIST_BINS as f64;
        for &v in values {
            if v < HIST_LOWER {
                h.underflow += 1;
            } else if v >= HIST_UPPER {
                h.overflow += 1;
            } else {
                let b = (((v - HIST_LOWER) / width) as usize).min(HIST_BINS - 1);
                h.bins[b] += 1;
            }
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// `bin_lower,bin_upper,count` rows, overflow bins first and last.
    pub fn to_csv(&self) -> String {
        let width = (self.upper - self.lower) / self.bins.len() as f64;
        let mut s = String::from("bin_lower,bin_upper,count\n");
        let _ = writeln!(s, "-inf,{},{}", self.lower, self.underflow);
        for (k, c) in self.bins.iter().enumerate() {
            let lo = self.lower + k as f64 * width;
            let _ = writeln!(s, "{:.6},{:.6},{c}", lo, lo + width);
        }
        let _ = writeln!(s, "{},inf,{}", self.upper, self.overflow);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStats {
    pub samples: usize,
    pub discourse_norm: f64,
    pub mean: f64,
    /// Sorted `Z_c / mean`.
    pub ratios: Vec<f64>,
    /// `(p, quantile of |Z_c/mean − 1|)` for p in 0.5, 0.9, 0.95, 0.99.
    pub deviation_quantiles: Vec<(f64, f64)>,
    /// 2.5% and 97.5% quantiles of `Z_c / mean`.
    pub central_95: (f64, f64),
    pub fraction_within_10pct: f64,
    pub histogram: Histogram,
}

/// Samples `num_samples` uniform directions scaled by `rule` and reports
/// how tightly `Z_c` concentrates around its mean.
pub fn partition_concentration(
    vectors: &WordVectorEnsemble,
    num_samples: usize,
    rule: NormRule,
    seed: u64,
) -> Result<PartitionStats> {
    if num_samples < 2 {
        return Err(Error::param("need at least two discourse samples"));
    }
    let radius = match rule {
        NormRule::Unit => 1.0,
        NormRule::InverseMeanNorm { factor } => {
            let mu = vectors.norms().iter().sum::<f64>() / vectors.len() as f64;
            if mu == 0.0 {
                return Err(Error::Degenerate(
                    "all word vectors are zero, so the inverse-mean-norm radius is undefined".into(),
                ));
            }
            factor / mu
        }
    };
    let dim = vectors.dim();
    let z: Vec<f64> = (0..num_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = CounterRng::for_stream(seed, roles::PARTITION, k as u64);
            let mut c = rng.unit_vector(dim);
            c.iter_mut().for_each(|x| *x *= radius);
            partition_function(&c, vectors)
        })
        .collect::<Result<_>>()?;
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    if !mean.is_finite() {
        return Err(Error::Numeric("partition function overflowed".into()));
    }
    let mut ratios: Vec<f64> = z.iter().map(|v| v / mean).collect();
    ratios.sort_by(f64::total_cmp);
    let mut dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let deviation_quantiles = [0.5, 0.9, 0.95, 0.99]
        .iter()
        .map(|&p| (p, quantile_sorted(&dev, p)))
        .collect();
    let within = ratios.iter().filter(|r| (0.9..=1.1).contains(*r)).count();
    Ok(PartitionStats {
        samples: num_samples,
        discourse_norm: radius,
        mean,
        central_95: (quantile_sorted(&ratios, 0.025), quantile_sorted(&ratios, 0.975)),
        fraction_within_10pct: within as f64 / num_samples as f64,
        histogram: Histogram::build(&ratios),
        deviation_quantiles,
        ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isotropy {
    /// `√(Σσ²/d) / σ_min`.
    pub ratio: f64,
    pub quadratic_mean: f64,
    pub sigma_min: f64,
    /// Some singular value fell below tolerance; `sigma_min` is the tolerance.
    pub rank_deficient: bool,
}

pub fn isotropy_ratio(vectors: &WordVectorEnsemble) -> Result<Isotropy> {
    let (n, d) = (vectors.len(), vectors.dim());
    if n < d {
        return Err(Error::Precondition(format!("isotropy needs n ≥ d, got n={n}, d={d}")));
    }
    let m = DenseMatrix::from_vec(n, d, vectors.as_slice().to_vec())?;
    let sigma = singular_values(&m)?;
    let top = sigma.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Err(Error::Degenerate("all word vectors are zero".into()));
    }
    let tol = top * f64::EPSILON * n.max(d) as f64;
    let quadratic_mean = (sigma.iter().map(|s| s * s).sum::<f64>() / d as f64).sqrt();
    let smallest = *sigma.last().unwrap();
    let (sigma_min, rank_deficient) = if smallest > tol { (smallest, false) } else { (tol, true) };
    Ok(Isotropy {
        ratio: quadratic_mean / sigma_min,
        quadratic_mean,
        sigma_min,
        rank_deficient,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormFrequencyFit {
    /// `‖v_w‖²` regressed on `log count_w`.
    pub norm_on_log_count: LinearFit,
    /// `norm_on_log_count.slope / (2d)`; 1 under the closed form.
    pub normalized_slope: f64,
    /// `log count_w` regressed on `‖v_w‖²/(2d)`; slope 1 under the closed form.
    pub log_count_on_norm: LinearFit,
    /// `(word, log count, ‖v‖²)` in decreasing-count order.
    pub points: Vec<(usize, f64, f64)>,
}

impl NormFrequencyFit {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("word,log_count,squared_norm\n");
        for (w, lc, n2) in &self.points {
            let _ = writeln!(s, "{w},{lc:.17e},{n2:.17e}");
        }
        s
    }
}

/// Correlation of squared norm with log frequency over the `top_words` most
/// frequent words (ties broken by index).
pub fn norm_frequency_fit(vectors: &WordVectorEnsemble, word_counts: &[u64], top_words: usize) -> Result<NormFrequencyFit> {
    if word_counts.len() != vectors.len() {
        return Err(Error::param(format!(
            "{} word counts for {} vectors",
            word_counts.len(),
            vectors.len()
        )));
    }
    let mut words: Vec<usize> = (0..vectors.len()).filter(|&w| word_counts[w] > 0).collect();
    if words.len() < 10 {
        return Err(Error::State(format!(
            "only {} words have positive counts; need at least 10",
            words.len()
        )));
    }
    words.sort_by(|&a, &b| word_counts[b].cmp(&word_counts[a]).then(a.cmp(&b)));
    words.truncate(top_words.max(10));
    let d = vectors.dim() as f64;
    let points: Vec<(usize, f64, f64)> = words
        .iter()
        .map(|&w| {
            let v = vectors.vector(w);
            (w, (word_counts[w] as f64).ln(), crate::numerics::dot(v, v))
        })
        .collect();
    let lc: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n2: Vec<f64> = points.iter().map(|p| p.2).collect();
    pearson(&lc, &n2)?;
    let forward = linear_fit(&lc, &n2)?;
    let scaled: Vec<f64> = n2.iter().map(|x| x / (2.0 * d)).collect();
    let reverse = linear_fit(&scaled, &lc)?;
    Ok(NormFrequencyFit {
        normalized_slope: forward.slope / (2.0 * d),
        norm_on_log_count: forward,
        log_count_on_norm: reverse,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointFormFit {
    /// `log(X/m)` regressed on `‖v_w + v_w'‖²/(2d)`.
    pub fit: LinearFit,
    pub pairs_used: usize,
}

/// Regression of log co-occurrence on `‖v_w + v_w'‖²/(2d)` over the
/// `top_pairs` most frequent cells, using ground-truth vectors.
///
/// An unordered cell of distinct words counts both orders, so its count is
/// halved to estimate a single ordered position pair.
pub fn joint_form_fit(vectors: &WordVectorEnsemble, table: &CooccurrenceTable, top_pairs: usize) -> Result<JointFormFit> {
    if table.vocab_size() != vectors.len() {
        return Err(Error::param("table and vectors have different vocabularies"));
    }
    let mut cells: Vec<(u32, u32, f64)> = table
        .pairs()
        .iter()
        .map(|p| (p.i, p.j, if p.i == p.j { p.count } else { p.count / 2.0 }))
        .collect();
    cells.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    cells.truncate(top_pairs);
    if cells.len() < 2 {
        return Err(Error::State("need at least two observed pairs".into()));
    }
    let d = vectors.dim() as f64;
    let x: Vec<f64> = cells
        .iter()
        .map(|&(i, j, _)| {
            let (a, b) = (vectors.vector(i as usize), vectors.vector(j as usize));
            a.iter().zip(b).map(|(p, q)| (p + q) * (p + q)).sum::<f64>() / (2.0 * d)
        })
        .collect();
    let y: Vec<f64> = cells.iter().map(|c| c.2.ln()).collect();
    Ok(JointFormFit {
        fit: linear_fit(&x, &y)?,
        pairs_used: cells.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResidual {
    pub form: Objective,
    /// `Σ min(X, X_max)·|resid|/|target| / Σ min(X, X_max)`.
    pub residual: f64,
    pub pairs_used: usize,
    /// Cells with a zero target (log X = 0 or PMI = 0) or undefined PMI.
    pub excluded: usize,
}

/// Weighted relative residual of the SN or PMI closed form.
pub fn objective_fit(
    vectors: &WordVectorEnsemble,
    constant: f64,
    table: &CooccurrenceTable,
    form: Objective,
    x_max: f64,
) -> Result<FitResidual> {
    if table.vocab_size() != vectors.len() {
        return Err(Error::param("table and vectors have different vocabularies"));
    }
    let targets: Vec<(u32, u32, f64, f64)> = match form {
        Objective::Sn => table.pairs().iter().map(|p| (p.i, p.j, p.count, p.count.ln())).collect(),
        Objective::Pmi => table.observed_pmi().0.into_iter().map(|(p, v)| (p.i, p.j, p.count, v)).collect(),
    };
    let mut excluded = table.pairs().len() - targets.len();
    let (mut num, mut den, mut used) = (0.0, 0.0, 0usize);
    for (i, j, x, target) in targets {
        if target == 0.0 {
            excluded += 1;
            continue;
        }
        let (a, b) = (vectors.vector(i as usize), vectors.vector(j as usize));
        let model = match form {
            Objective::Sn => a.iter().zip(b).map(|(p, q)| (p + q) * (p + q)).sum::<f64>() + constant,
            Objective::Pmi => crate::numerics::dot(a, b),
        };
        let w = x.min(x_max);
        num += w * ((target - model) / target).abs();
        den += w;
        used += 1;
    }
    if used == 0 {
        return Err(Error::State("no pairs with a nonzero target".into()));
    }
    Ok(FitResidual {
        form,
        residual: num / den,
        pairs_used: used,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseReduction {
    pub trials: usize,
    /// Max and mean of `‖V†ζ‖/‖ζ‖`.
    pub max_attenuation: f64,
    pub mean_attenuation: f64,
    /// `qm = ‖V‖_F/√d`, the quadratic-mean singular value.
    pub quadratic_mean: f64,
    pub sigma_min: f64,
    /// `σ_min / qm`.
    pub c1: f64,
    /// Max over trials of `‖Pᵀζ‖ / (√(d/n)·‖ζ‖)`.
    pub c2: f64,
    /// `c₂√d / (c₁·qm·√n)`; dominates every measured attenuation.
    pub bound: f64,
    /// `√d / n`.
    pub reference: f64,
    /// Square `V`: the isotropy assumption gives no attenuation.
    pub outside_regime: bool,
}

impl NoiseReduction {
    /// Max attenuation relative to the signal scale, `max·qm`; behaves like
    /// `√(d/n)`.
    pub fn relative_max(&self) -> f64 {
        self.max_attenuation * self.quadratic_mean
    }
}

/// Measures how much the pseudo-inverse of `V` shrinks random noise.
pub fn noise_reduction_check(v: &DenseMatrix, trials: usize, seed: u64) -> Result<NoiseReduction> {
    let (n, d) = (v.rows(), v.cols());
    if n < d {
        return Err(Error::Precondition(format!("need n ≥ d, got {n}x{d}")));
    }
    if trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let pinv = PseudoInverse::new(v)?;
    let quadratic_mean = v.frobenius_norm() / (d as f64).sqrt();
    let sigma_min = pinv.sigma_min();
    let scale = (d as f64 / n as f64).sqrt();
    let stats: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = CounterRng::for_stream(seed, roles::NOISE, t as u64);
            let mut z = vec![0.0; n];
            rng.fill_normal(&mut z);
            let zn = norm(&z);
            let att = norm(&pinv.apply(&z)) / zn;
            let proj = norm(&pinv.project(&z)) / (scale * zn);
            (att, proj)
        })
        .collect();
    let max_attenuation = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let mean_attenuation = stats.iter().map(|s| s.0).sum::<f64>() / trials as f64;
    let c2 = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let c1 = sigma_min / quadratic_mean;
    Ok(NoiseReduction {
        trials,
        max_attenuation,
        mean_attenuation,
        quadratic_mean,
        sigma_min,
        c1,
        c2,
        bound: c2 * (d as f64).sqrt() / (c1 * quadratic_mean * (n as f64).sqrt()),
        reference: (d as f64).sqrt() / n as f64,
        outside_regime: n == d,
    })
}

/// Everything `verify` reports; absent parts were not requested.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsReport {
    pub partition: Option<PartitionStats>,
    pub isotropy: Option<Isotropy>,
    pub norm_frequency: Option<NormFrequencyFit>,
    pub joint_form: Option<JointFormFit>,
    pub sn_fit: Option<FitResidual>,
    pub pmi_fit: Option<FitResidual>,
    pub window_shift: Option<WindowShift>,
    pub noise_reduction: Option<NoiseReduction>,
}

impl DiagnosticsReport {
    /// `key = value` lines in a fixed order.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if let Some(p) = &self.partition {
            kv("partition.samples", p.samples.to_string());
            kv("partition.discourse_norm", fmt(p.discourse_norm));
            kv("partition.mean", fmt(p.mean));
            kv("partition.central95_low", fmt(p.central_95.0));
            kv("partition.central95_high", fmt(p.central_95.1));
            kv("partition.fraction_within_0.9_1.1", fmt(p.fraction_within_10pct));
            for (q, v) in &p.deviation_quantiles {
                kv(&format!("partition.deviation_q{:02}", (q * 100.0).round() as u32), fmt(*v));
            }
        }
        if let Some(i) = &self.isotropy {
            kv("isotropy.ratio", fmt(i.ratio));
            kv("isotropy.quadratic_mean", fmt(i.quadratic_mean));
            kv("isotropy.sigma_min", fmt(i.sigma_min));
            kv("isotropy.rank_deficient", i.rank_deficient.to_string());
        }
        if let Some(nf) = &self.norm_frequency {
            kv("norm_freq.words", nf.points.len().to_string());
            kv("norm_freq.pearson", fmt(nf.norm_on_log_count.pearson));
            kv("norm_freq.slope", fmt(nf.norm_on_log_count.slope));
            kv("norm_freq.intercept", fmt(nf.norm_on_log_count.intercept));
            kv("norm_freq.slope_over_2d", fmt(nf.normalized_slope));
            kv("norm_freq.log_count_slope", fmt(nf.log_count_on_norm.slope));
        }
        if let Some(j) = &self.joint_form {
            kv("joint_form.pairs", j.pairs_used.to_string());
            kv("joint_form.slope", fmt(j.fit.slope));
            kv("joint_form.intercept", fmt(j.fit.intercept));
            kv("joint_form.pearson", fmt(j.fit.pearson));
        }
        for f in [&self.sn_fit, &self.pmi_fit].into_iter().flatten() {
            let key = format!("fit.{}", f.form);
            kv(&format!("{key}.residual"), fmt(f.residual));
            kv(&format!("{key}.pairs"), f.pairs_used.to_string());
            kv(&format!("{key}.excluded"), f.excluded.to_string());
        }
        if let Some(w) = &self.window_shift {
            kv("window_shift.estimate", fmt(w.estimate));
            kv("window_shift.predicted", fmt(w.predicted));
            kv("window_shift.pairs", w.pairs_used.to_string());
        }
        if let Some(nr) = &self.noise_reduction {
            kv("noise.trials", nr.trials.to_string());
            kv("noise.max_attenuation", fmt(nr.max_attenuation));
            kv("noise.mean_attenuation", fmt(nr.mean_attenuation));
            kv("noise.bound", fmt(nr.bound));
            kv("noise.sqrt_d_over_n", fmt(nr.reference));
            kv("noise.c1", fmt(nr.c1));
            kv("noise.c2", fmt(nr.c2));
            kv("noise.outside_regime", nr.outside_regime.to_string());
        }
        s
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}
