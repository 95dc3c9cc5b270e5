//! Cesàro means `μ_n = (1/n) Σ_{t<n} μ∘F^{-t}` on cylinders.
//!
//! `μ∘F^{-t}(C(w))` is estimated at a single central position by drawing `x`
//! on the light cone of `w` and checking whether `F^t(x)` shows `w` there.
//! The limit `μ_c` is never formed; results carry their `n`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ca::{format_word, parse_word, LocalRule, Symbol, WindowConfig};
use crate::error::{Error, Result};
use crate::measure::StochasticMeasure;
use crate::rng::RandomStream;
use crate::stats::binomial_se;

/// Leftmost coordinate of a centrally placed word of length `len`.
pub fn word_start(len: usize) -> i64 {
    -((len / 2) as i64)
}

fn check_alphabets(rule: &LocalRule, measure: &StochasticMeasure) -> Result<()> {
    if rule.alphabet_size() != measure.alphabet_size() {
        return Err(Error::InvalidParameter(format!(
            "rule alphabet has {} symbols but the measure has {}",
            rule.alphabet_size(),
            measure.alphabet_size()
        )));
    }
    Ok(())
}

/// Per-time estimates of `μ∘F^{-t}(C(w))` and their running means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CesaroSeries {
    pub samples: u64,
    /// Number of samples showing the word at time `t`.
    pub hits: Vec<u64>,
    pub per_time: Vec<f64>,
    /// `cesaro[t]` is the mean of `per_time[0..=t]`, i.e. the estimate of
    /// `μ_{t+1}(C(w))`.
    pub cesaro: Vec<f64>,
}

impl CesaroSeries {
    fn from_hits(hits: Vec<u64>, samples: u64) -> Self {
        let per_time: Vec<f64> = hits.iter().map(|&h| h as f64 / samples as f64).collect();
        let mut running = 0u64;
        let cesaro = hits
            .iter()
            .enumerate()
            .map(|(t, &h)| {
                running += h;
                running as f64 / (samples as f64 * (t + 1) as f64)
            })
            .collect();
        Self {
            samples,
            hits,
            per_time,
            cesaro,
        }
    }

    /// Cesàro value `μ_n(C(w))` for `1 <= n <= len`.
    pub fn at(&self, n: usize) -> f64 {
        self.cesaro[n - 1]
    }

    /// Monte Carlo standard error of the final Cesàro value, treating it as a
    /// proportion over `samples` draws.
    pub fn final_standard_error(&self) -> f64 {
        let last = *self.cesaro.last().expect("nonempty");
        binomial_se(last, self.samples)
    }
}

/// Estimates `μ∘F^{-t}(C(w))` for `t = 0..n`.
pub fn cesaro_cylinder_estimate(
    rule: &LocalRule,
    measure: &StochasticMeasure,
    word: &[Symbol],
    n: usize,
    samples: u64,
    stream: &RandomStream,
) -> Result<CesaroSeries> {
    if n == 0 || samples == 0 || word.is_empty() {
        return Err(Error::InvalidParameter(
            "need a nonempty word, n >= 1 and samples >= 1".into(),
        ));
    }
    check_alphabets(rule, measure)?;
    rule.check_symbols(word)?;
    let kernel = rule.kernel();
    let start = word_start(word.len());
    let end = start + word.len() as i64 - 1;
    let (lo, hi) = kernel.cone(start, end, n - 1);
    let len = word.len();

    let hits = (0..samples)
        .into_par_iter()
        .fold(
            || (vec![0u64; n], Vec::new()),
            |(mut hits, mut cells), i| {
                measure.sample_into(lo, hi, &stream.substream(i), &mut cells);
                for (t, h) in hits.iter_mut().enumerate() {
                    let at = kernel.left() * (n - 1 - t);
                    if cells[at..at + len] == *word {
                        *h += 1;
                    }
                    if t + 1 < n {
                        kernel.step_in_place(&mut cells);
                    }
                }
                (hits, cells)
            },
        )
        .map(|(hits, _)| hits)
        .reduce(|| vec![0u64; n], add_vectors);
    Ok(CesaroSeries::from_hits(hits, samples))
}

fn add_vectors(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalMetadata {
    pub rule: String,
    pub measure: String,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
}

/// Exact word counts estimating `μ_n` on all cylinders of one length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalCylinderMeasure {
    word_len: usize,
    counts: BTreeMap<Vec<Symbol>, u64>,
    total: u64,
    pub metadata: EmpiricalMetadata,
}

impl EmpiricalCylinderMeasure {
    /// Builds from explicit counts; zero counts are dropped.
    pub fn from_counts(
        word_len: usize,
        counts: impl IntoIterator<Item = (Vec<Symbol>, u64)>,
        metadata: EmpiricalMetadata,
    ) -> Result<Self> {
        if word_len == 0 {
            return Err(Error::InvalidParameter("word length must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for (word, c) in counts {
            if word.len() != word_len {
                return Err(Error::InvalidParameter(format!(
                    "word of length {} in a length-{word_len} measure",
                    word.len()
                )));
            }
            if c > 0 {
                *map.entry(word).or_insert(0) += c;
            }
        }
        let total = map.values().sum();
        if total == 0 {
            return Err(Error::InvalidParameter("empirical measure has no mass".into()));
        }
        Ok(Self {
            word_len,
            counts: map,
            total,
            metadata,
        })
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, word: &[Symbol]) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn frequency(&self, word: &[Symbol]) -> f64 {
        self.count(word) as f64 / self.total as f64
    }

    /// Words with positive count, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&[Symbol], u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_slice(), c))
    }

    /// Words whose frequency exceeds `threshold`: the empirical support.
    pub fn support(&self, threshold: f64) -> Vec<&[Symbol]> {
        self.iter()
            .filter(|&(_, c)| c as f64 / self.total as f64 > threshold)
            .map(|(w, _)| w)
            .collect()
    }

    pub fn with_rule_id(mut self, id: impl Into<String>) -> Self {
        self.metadata.rule = id.into();
        self
    }

    /// The persisted form: a header line, then `<word>,<count>` lines sorted
    /// lexicographically.
    pub fn to_file_string(&self) -> String {
        let m = &self.metadata;
        let mut out = format!(
            "# rule={} measure={} L={} n={} samples={} seed={}\n",
            m.rule, m.measure, self.word_len, m.n, m.samples, m.seed
        );
        for (w, c) in &self.counts {
            let _ = writeln!(out, "{},{}", format_word(w), c);
        }
        out
    }

    pub fn parse_file(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or(Error::Syntax {
            line: 1,
            message: "missing header".into(),
        })?;
        let header = header.strip_prefix("# ").ok_or(Error::Syntax {
            line: 1,
            message: "header must start with `# `".into(),
        })?;
        let mut fields = HashMap::new();
        for token in header.split(' ') {
            let (key, value) = token.split_once('=').ok_or(Error::Syntax {
                line: 1,
                message: format!("bad header field {token:?}"),
            })?;
            fields.insert(key, value);
        }
        let get = |key: &str| -> Result<&str> {
            fields.get(key).copied().ok_or(Error::Syntax {
                line: 1,
                message: format!("header lacks `{key}`"),
            })
        };
        let num = |key: &str| -> Result<u64> {
            get(key)?.parse().map_err(|_| Error::Syntax {
                line: 1,
                message: format!("`{key}` is not an integer"),
            })
        };
        let word_len = num("L")? as usize;
        let metadata = EmpiricalMetadata {
            rule: get("rule")?.to_string(),
            measure: get("measure")?.to_string(),
            n: num("n")? as usize,
            samples: num("samples")?,
            seed: num("seed")?,
        };
        let mut counts = Vec::new();
        let mut previous: Option<Vec<Symbol>> = None;
        for (line, content) in lines {
            if content.is_empty() {
                continue;
            }
            let syntax = |message: String| Error::Syntax { line, message };
            let (word, count) = content
                .split_once(',')
                .ok_or_else(|| syntax("expected `<word>,<count>`".into()))?;
            let word = parse_word(word).map_err(|e| syntax(e.to_string()))?;
            let count: u64 = count
                .parse()
                .map_err(|_| syntax(format!("bad count {count:?}")))?;
            if word.len() != word_len {
                return Err(syntax(format!("word length {} differs from L", word.len())));
            }
            if previous.as_ref().is_some_and(|p| *p >= word) {
                return Err(syntax("words must be strictly increasing".into()));
            }
            previous = Some(word.clone());
            counts.push((word, count));
        }
        Self::from_counts(word_len, counts, metadata)
    }
}

/// Tallies the central length-`word_len` word of `F^t(x)` for every sample
/// and `t < n`; the total count is `samples * n`.
pub fn empirical_measure(
    rule: &LocalRule,
    measure: &StochasticMeasure,
    word_len: usize,
    n: usize,
    samples: u64,
    stream: &RandomStream,
) -> Result<EmpiricalCylinderMeasure> {
    empirical_measure_widened(rule, measure, word_len, n, samples, stream, 0)
}

/// [`empirical_measure`] drawing `extra` additional cells on each side of the
/// light cone. The tallies do not depend on `extra`.
pub fn empirical_measure_widened(
    rule: &LocalRule,
    measure: &StochasticMeasure,
    word_len: usize,
    n: usize,
    samples: u64,
    stream: &RandomStream,
    extra: usize,
) -> Result<EmpiricalCylinderMeasure> {
    if word_len == 0 || n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("need L >= 1, n >= 1 and samples >= 1".into()));
    }
    check_alphabets(rule, measure)?;
    let k = rule.alphabet_size() as u64;
    if (word_len as f64) * (k as f64).log2() > 63.0 {
        return Err(Error::InvalidParameter(format!("words of length {word_len} are too long")));
    }
    let kernel = rule.kernel();
    let start = word_start(word_len);
    let end = start + word_len as i64 - 1;
    let (lo, hi) = kernel.cone(start, end, n - 1);
    let (lo, hi) = (lo - extra as i64, hi + extra as i64);

    let counts: HashMap<u64, u64> = (0..samples)
        .into_par_iter()
        .fold(
            || (HashMap::new(), Vec::new()),
            |(mut counts, mut cells), i| {
                measure.sample_into(lo, hi, &stream.substream(i), &mut cells);
                for t in 0..n {
                    let at = extra + kernel.left() * (n - 1 - t);
                    let code = cells[at..at + word_len]
                        .iter()
                        .fold(0u64, |acc, &s| acc * k + s as u64);
                    *counts.entry(code).or_insert(0u64) += 1;
                    if t + 1 < n {
                        kernel.step_in_place(&mut cells);
                    }
                }
                (counts, cells)
            },
        )
        .map(|(counts, _)| counts)
        .reduce(HashMap::new, |mut a, b| {
            for (code, c) in b {
                *a.entry(code).or_insert(0) += c;
            }
            a
        });
    let decode = |mut code: u64| {
        let mut w = vec![0 as Symbol; word_len];
        for slot in w.iter_mut().rev() {
            *slot = (code % k) as Symbol;
            code /= k;
        }
        w
    };
    EmpiricalCylinderMeasure::from_counts(
        word_len,
        counts.into_iter().map(|(code, c)| (decode(code), c)),
        EmpiricalMetadata {
            rule: "custom".into(),
            measure: measure.to_string(),
            n,
            samples,
            seed: stream.seed(),
        },
    )
}

/// Empirical Cauchy behaviour of a Cesàro sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceDiag {
    /// `(n, |A_n - A_{⌊n/2⌋}|)` at `n = 4, 8, 16, ..` and the final length.
    pub gaps: Vec<(usize, f64)>,
    pub max_gap: f64,
    pub final_gap: f64,
    pub last_value: f64,
    pub converging: bool,
}

/// Gaps `|A_n - A_{⌊n/2⌋}|` at dyadic checkpoints (with `A_n = seq[n-1]`).
///
/// The sequence is flagged converging when the final gap is within twice the
/// given standard error, or when the last three checkpoint gaps strictly
/// shrink.
pub fn convergence_diag(seq: &[f64], standard_error: f64) -> Result<ConvergenceDiag> {
    if seq.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 Cesàro values, got {}",
            seq.len()
        )));
    }
    let value = |n: usize| seq[n - 1];
    let mut checkpoints: Vec<usize> = std::iter::successors(Some(4usize), |&n| Some(n * 2))
        .take_while(|&n| n <= seq.len())
        .collect();
    if checkpoints.last() != Some(&seq.len()) {
        checkpoints.push(seq.len());
    }
    let gaps: Vec<(usize, f64)> = checkpoints
        .iter()
        .map(|&n| (n, (value(n) - value(n / 2)).abs()))
        .collect();
    let max_gap = gaps.iter().map(|&(_, g)| g).fold(0.0, f64::max);
    let final_gap = gaps.last().expect("nonempty").1;
    let shrinking = gaps.len() >= 3 && gaps[gaps.len() - 3..].windows(2).all(|w| w[1].1 < w[0].1);
    Ok(ConvergenceDiag {
        max_gap,
        final_gap,
        last_value: value(seq.len()),
        converging: final_gap <= 2.0 * standard_error || shrinking,
        gaps,
    })
}

/// Draws from `μ_n` restricted to a central window of `width` cells: each
/// sample is `F^t(x)` for `x ~ μ` and `t` uniform in `[0, n)`.
///
/// This approximates `μ_c` for large `n`.
pub fn sample_mu_c_approx(
    rule: &LocalRule,
    measure: &StochasticMeasure,
    n: usize,
    width: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<Vec<WindowConfig>> {
    if n == 0 || width == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and width >= 1".into()));
    }
    check_alphabets(rule, measure)?;
    let kernel = rule.kernel();
    let start = word_start(width);
    let end = start + width as i64 - 1;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let s = stream.substream(i);
            let t = s.substream(0).rng().gen_range(0..n);
            // Cells outside the cone of the window at time t are never read;
            // the anchored sampler makes this draw the same as a wider one.
            let (lo, hi) = kernel.cone(start, end, t);
            let mut cells = Vec::new();
            measure.sample_into(lo, hi, &s.substream(1), &mut cells);
            for _ in 0..t {
                kernel.step_in_place(&mut cells);
            }
            WindowConfig::new(start, cells)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn meta() -> EmpiricalMetadata {
        EmpiricalMetadata {
            rule: "fs".into(),
            measure: "bernoulli:3:0.2,0.3,0.5".into(),
            n: 4,
            samples: 2,
            seed: 9,
        }
    }

    #[test]
    fn series_running_mean() {
        let s = CesaroSeries::from_hits(vec![4, 2, 0, 2], 4);
        assert_eq!(s.per_time, vec![1.0, 0.5, 0.0, 0.5]);
        assert_eq!(s.cesaro, vec![1.0, 0.75, 0.5, 0.5]);
        assert_eq!(s.at(2), 0.75);
    }

    #[test]
    fn file_round_trip() {
        let m = EmpiricalCylinderMeasure::from_counts(
            2,
            vec![(vec![2, 0], 3), (vec![0, 1], 4), (vec![1, 1], 0), (vec![0, 0], 1)],
            meta(),
        )
        .unwrap();
        let text = m.to_file_string();
        assert_eq!(
            text,
            "# rule=fs measure=bernoulli:3:0.2,0.3,0.5 L=2 n=4 samples=2 seed=9\n00,1\n01,4\n20,3\n"
        );
        assert_eq!(EmpiricalCylinderMeasure::parse_file(&text).unwrap(), m);
        assert_eq!(m.total(), 8);
        assert_eq!(m.support(0.2), vec![&[0u8, 1][..], &[2, 0][..]]);
    }

    #[test]
    fn file_errors() {
        let header = "# rule=fs measure=x L=2 n=4 samples=2 seed=9\n";
        assert!(EmpiricalCylinderMeasure::parse_file(&format!("{header}01,1\n00,1\n")).is_err());
        assert!(EmpiricalCylinderMeasure::parse_file(&format!("{header}011,1\n")).is_err());
        assert!(EmpiricalCylinderMeasure::parse_file(&format!("{header}01;1\n")).is_err());
        assert!(EmpiricalCylinderMeasure::parse_file("rule=fs\n01,1\n").is_err());
        assert!(matches!(
            EmpiricalCylinderMeasure::parse_file(&format!("{header}00,1\n01,x\n")),
            Err(Error::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn diag_constant_sequence() {
        let d = convergence_diag(&[0.3; 64], 0.0).unwrap();
        assert_eq!(d.max_gap, 0.0);
        assert!(d.converging);
        assert_eq!(d.gaps.iter().map(|g| g.0).collect::<Vec<_>>(), vec![4, 8, 16, 32, 64]);
        assert!(convergence_diag(&[1.0, 2.0, 3.0], 0.1).is_err());
    }

    #[test]
    fn diag_harmonic_cesaro() {
        // Cesàro means of 1/t.
        let mut acc = 0.0;
        let seq: Vec<f64> = (1..=1000)
            .map(|t| {
                acc += 1.0 / t as f64;
                acc / t as f64
            })
            .collect();
        let d = convergence_diag(&seq, 0.0).unwrap();
        assert!(d.gaps.windows(2).all(|w| w[1].1 < w[0].1));
        assert!(d.converging);
        assert!(d.final_gap < d.max_gap);
    }

    #[test]
    fn diag_flags_wandering_sequence() {
        let seq: Vec<f64> = (1..=64u32).map(|t| (t.ilog2() % 2) as f64).collect();
        let d = convergence_diag(&seq, 0.01).unwrap();
        assert!(!d.converging);
    }

    #[test]
    fn identity_mu_c_samples_follow_mu() {
        let id = zoo::identity_rule(2).unwrap();
        let mu = StochasticMeasure::bernoulli(vec![1.0, 0.0]).unwrap();
        let w = sample_mu_c_approx(&id, &mu, 10, 5, 20, &RandomStream::new(1)).unwrap();
        assert_eq!(w.len(), 20);
        assert!(w.iter().all(|w| w.offset() == -2 && w.cells() == [0; 5]));
    }

    #[test]
    fn parameter_errors() {
        let fs = zoo::gilman_fs();
        let mu = StochasticMeasure::bernoulli(vec![0.2, 0.3, 0.5]).unwrap();
        let s = RandomStream::new(0);
        assert!(cesaro_cylinder_estimate(&fs, &mu, &[1], 0, 10, &s).is_err());
        assert!(cesaro_cylinder_estimate(&fs, &mu, &[], 5, 10, &s).is_err());
        assert!(cesaro_cylinder_estimate(&fs, &mu, &[3], 5, 10, &s).is_err());
        assert!(empirical_measure(&fs, &mu, 0, 5, 10, &s).is_err());
        assert!(sample_mu_c_approx(&fs, &mu, 0, 5, 10, &s).is_err());
    }
}
