//! Shift-ergodic source measures on `A^Z`.
//!
//! Two families are supported: Bernoulli (i.i.d. cells) and stationary
//! Markov chains with a primitive transition matrix. Both give exact cylinder
//! probabilities and can extend a fixed core word to either side with the
//! correct conditional law.
//!
//! Sampling is anchored: a window containing coordinate 0 is drawn by picking
//! the anchor cell first and extending right (forward chain) and left
//! (reversed chain) from two independent substreams. Widening the interval
//! therefore never changes the cells already drawn.

use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};

use crate::ca::{Symbol, WindowConfig};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

const SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Bernoulli,
    Markov,
}

#[derive(Debug, Clone)]
pub struct StochasticMeasure {
    kind: MeasureKind,
    k: usize,
    /// `p` for Bernoulli, `π` for Markov.
    marginal: Vec<f64>,
    /// Rows of `P`; every row equals `p` for Bernoulli.
    forward: Vec<Vec<f64>>,
    /// Rows of the time-reversed chain `P*(i, j) = π(j) P(j, i) / π(i)`.
    backward: Vec<Vec<f64>>,
    marginal_sampler: WeightedIndex<f64>,
    forward_samplers: Vec<WeightedIndex<f64>>,
    backward_samplers: Vec<WeightedIndex<f64>>,
}

impl StochasticMeasure {
    pub fn bernoulli(p: Vec<f64>) -> Result<Self> {
        let k = p.len();
        check_alphabet(k)?;
        check_probability_vector(&p, "Bernoulli weights")?;
        let rows = vec![p.clone(); k];
        Self::build(MeasureKind::Bernoulli, p, rows.clone(), rows)
    }

    /// Stationary Markov measure; `π` is found by power iteration.
    pub fn markov(transition: Vec<Vec<f64>>) -> Result<Self> {
        let k = check_transition(&transition)?;
        let mut pi = vec![1.0 / k as f64; k];
        let mut converged = false;
        for _ in 0..1_000_000 {
            let next = left_multiply(&pi, &transition);
            let diff = max_abs_diff(&next, &pi);
            pi = next;
            if diff < 1e-14 {
                converged = true;
                break;
            }
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= total);
        if !converged && max_abs_diff(&left_multiply(&pi, &transition), &pi) > 1e-12 {
            return Err(Error::InvalidMeasure(
                "power iteration for the stationary vector did not converge".into(),
            ));
        }
        Self::markov_with_stationary(transition, pi)
    }

    /// Stationary Markov measure with a caller-supplied `π`.
    pub fn markov_with_stationary(transition: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let k = check_transition(&transition)?;
        if pi.len() != k {
            return Err(Error::InvalidMeasure(format!(
                "stationary vector has length {}, expected {k}",
                pi.len()
            )));
        }
        check_probability_vector(&pi, "stationary vector")?;
        let image = left_multiply(&pi, &transition);
        if max_abs_diff(&image, &pi) > STATIONARY_TOL {
            return Err(Error::InvalidMeasure("πP differs from π".into()));
        }
        let backward = (0..k)
            .map(|i| {
                let row: Vec<f64> = (0..k).map(|j| pi[j] * transition[j][i] / pi[i]).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|v| v / s).collect()
            })
            .collect();
        Self::build(MeasureKind::Markov, pi, transition, backward)
    }

    fn build(
        kind: MeasureKind,
        marginal: Vec<f64>,
        forward: Vec<Vec<f64>>,
        backward: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let sampler = |w: &[f64]| {
            WeightedIndex::new(w.iter().copied())
                .map_err(|e| Error::InvalidMeasure(format!("unusable weights: {e}")))
        };
        Ok(Self {
            kind,
            k: marginal.len(),
            marginal_sampler: sampler(&marginal)?,
            forward_samplers: forward.iter().map(|r| sampler(r)).collect::<Result<_>>()?,
            backward_samplers: backward.iter().map(|r| sampler(r)).collect::<Result<_>>()?,
            marginal,
            forward,
            backward,
        })
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.forward
    }

    pub fn reversed_transition(&self) -> &[Vec<f64>] {
        &self.backward
    }

    fn check_symbol(&self, s: Symbol) -> Result<()> {
        if (s as usize) < self.k {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                symbol: s as usize,
                k: self.k,
            })
        }
    }

    /// `μ(C(w))` for the cylinder of `w` placed at `position`. The value does
    /// not depend on the position.
    pub fn cylinder_prob(&self, word: &[Symbol], _position: i64) -> Result<f64> {
        let (&first, rest) = word
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty cylinder word".into()))?;
        self.check_symbol(first)?;
        let mut prob = self.marginal[first as usize];
        let mut prev = first;
        for &s in rest {
            self.check_symbol(s)?;
            prob *= self.forward[prev as usize][s as usize];
            prev = s;
        }
        Ok(prob)
    }

    /// A draw of `x(lo, hi)` under the measure.
    pub fn sample_window(&self, lo: i64, hi: i64, stream: &RandomStream) -> Result<WindowConfig> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        self.sample_into(lo, hi, stream, &mut out);
        WindowConfig::new(lo, out)
    }

    pub(crate) fn sample_into(&self, lo: i64, hi: i64, stream: &RandomStream, out: &mut Vec<Symbol>) {
        let anchor = 0i64.clamp(lo, hi);
        let mut rng = stream.substream(0).rng();
        let a = self.marginal_sampler.sample(&mut rng) as Symbol;
        self.extend_into(&[a], anchor, lo, hi, stream, out);
    }

    /// Extends `core` to `[lo, hi]` with the law of the measure conditioned on
    /// the cylinder of `core`.
    pub fn sample_conditional_extension(
        &self,
        core: &WindowConfig,
        lo: i64,
        hi: i64,
        stream: &RandomStream,
    ) -> Result<WindowConfig> {
        if lo > core.offset() || hi < core.end() {
            return Err(Error::InvalidParameter(format!(
                "target [{lo}, {hi}] does not contain core [{}, {}]",
                core.offset(),
                core.end()
            )));
        }
        core.cells().iter().try_for_each(|&s| self.check_symbol(s))?;
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        self.extend_into(core.cells(), core.offset(), lo, hi, stream, &mut out);
        WindowConfig::new(lo, out)
    }

    /// Unchecked extension into a reusable buffer. Right cells come from
    /// substream 1, left cells from substream 2.
    pub(crate) fn extend_into(
        &self,
        core: &[Symbol],
        core_offset: i64,
        lo: i64,
        hi: i64,
        stream: &RandomStream,
        out: &mut Vec<Symbol>,
    ) {
        let n_left = (core_offset - lo) as usize;
        let n_right = (hi - (core_offset + core.len() as i64 - 1)) as usize;
        out.clear();
        out.resize(n_left, 0);
        if n_left > 0 {
            let mut rng = stream.substream(2).rng();
            let mut prev = core[0];
            for slot in out.iter_mut().rev() {
                prev = self.backward_samplers[prev as usize].sample(&mut rng) as Symbol;
                *slot = prev;
            }
        }
        out.extend_from_slice(core);
        if n_right > 0 {
            let mut rng = stream.substream(1).rng();
            let mut prev = core[core.len() - 1];
            for _ in 0..n_right {
                prev = self.forward_samplers[prev as usize].sample(&mut rng) as Symbol;
                out.push(prev);
            }
        }
    }

    /// Parses the inline form `bernoulli:k:p0,p1,..` or `markov:k:P00,P01,..`
    /// (row-major). Entries may be decimals or fractions such as `1/3`.
    pub fn from_inline(text: &str) -> Result<Self> {
        let mut parts = text.splitn(3, ':');
        let (kind, k, values) = match (parts.next(), parts.next(), parts.next()) {
            (Some(kind), Some(k), Some(values)) => (kind, k, values),
            _ => {
                return Err(Error::InvalidMeasure(format!(
                    "expected <kind>:<k>:<values>, got {text:?}"
                )))
            }
        };
        let k: usize = k
            .parse()
            .map_err(|_| Error::InvalidMeasure(format!("bad alphabet size {k:?}")))?;
        let values = values
            .split(',')
            .map(parse_number)
            .collect::<Result<Vec<f64>>>()?;
        Self::from_parts(kind, k, values)
    }

    /// Parses the file form `bernoulli <k> <p...>` or `markov <k> <P...>`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let kind = tokens
            .next()
            .ok_or_else(|| Error::InvalidMeasure("empty measure description".into()))?;
        let k = tokens
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidMeasure("missing or bad alphabet size".into()))?;
        let values = tokens.map(parse_number).collect::<Result<Vec<f64>>>()?;
        Self::from_parts(kind, k, values)
    }

    fn from_parts(kind: &str, k: usize, values: Vec<f64>) -> Result<Self> {
        check_alphabet(k)?;
        match kind {
            "bernoulli" => {
                if values.len() != k {
                    return Err(Error::InvalidMeasure(format!(
                        "bernoulli over {k} symbols needs {k} weights, got {}",
                        values.len()
                    )));
                }
                Self::bernoulli(values)
            }
            "markov" => {
                if values.len() != k * k {
                    return Err(Error::InvalidMeasure(format!(
                        "markov over {k} symbols needs {} entries, got {}",
                        k * k,
                        values.len()
                    )));
                }
                Self::markov(values.chunks(k).map(<[f64]>::to_vec).collect())
            }
            other => Err(Error::InvalidMeasure(format!("unknown measure kind {other:?}"))),
        }
    }
}

/// The inline form, usable as a measure id.
impl fmt::Display for StochasticMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &mut dyn Iterator<Item = &f64>| {
            v.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        match self.kind {
            MeasureKind::Bernoulli => {
                write!(f, "bernoulli:{}:{}", self.k, join(&mut self.marginal.iter()))
            }
            MeasureKind::Markov => write!(
                f,
                "markov:{}:{}",
                self.k,
                join(&mut self.forward.iter().flatten())
            ),
        }
    }
}

fn parse_number(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::InvalidMeasure(format!("bad probability {text:?}"));
    match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0.0 {
                return Err(bad());
            }
            Ok(num / den)
        }
        None => text.parse().map_err(|_| bad()),
    }
}

fn check_alphabet(k: usize) -> Result<()> {
    if (2..=256).contains(&k) {
        Ok(())
    } else {
        Err(Error::AlphabetSize(k))
    }
}

fn check_probability_vector(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidMeasure(format!("{what} must be nonnegative")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidMeasure(format!("{what} sum to {total}, not 1")));
    }
    Ok(())
}

fn check_transition(p: &[Vec<f64>]) -> Result<usize> {
    let k = p.len();
    check_alphabet(k)?;
    for (i, row) in p.iter().enumerate() {
        if row.len() != k {
            return Err(Error::InvalidMeasure(format!("row {i} has {} entries", row.len())));
        }
        check_probability_vector(row, &format!("transition row {i}"))?;
    }
    if !is_primitive(p) {
        return Err(Error::InvalidMeasure(
            "transition matrix is not irreducible and aperiodic".into(),
        ));
    }
    Ok(k)
}

/// Some power `P^j` with `j <= k^2` is entrywise positive.
fn is_primitive(p: &[Vec<f64>]) -> bool {
    let k = p.len();
    let base: Vec<Vec<bool>> = p.iter().map(|r| r.iter().map(|&v| v > 0.0).collect()).collect();
    let mut power = base.clone();
    for _ in 0..k * k {
        if power.iter().flatten().all(|&b| b) {
            return true;
        }
        power = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| (0..k).any(|l| power[i][l] && base[l][j]))
                    .collect()
            })
            .collect();
    }
    false
}

fn left_multiply(v: &[f64], p: &[Vec<f64>]) -> Vec<f64> {
    let k = v.len();
    (0..k).map(|j| (0..k).map(|i| v[i] * p[i][j]).sum()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
