//! Entropy of central column words.
//!
//! For a partition half-width `p`, the height-`t` column word of `x` is
//! `(F^i(x)(-p, p))_{i<t}`. `H_t` is the Shannon entropy of its empirical
//! distribution over samples, and the growth of `H_t` in `t` estimates the
//! partition entropy `h_μ(F, α_p)`. Values are in nats.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::ca::{LocalRule, Symbol, WindowConfig};
use crate::error::{Error, Result};
use crate::measure::StochasticMeasure;
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRow {
    pub t: usize,
    pub h_plugin: f64,
    /// Miller–Madow: plug-in plus `(distinct - 1) / (2 * samples)`.
    pub h_mm: f64,
    /// `h_mm / t`.
    pub rate_ratio: f64,
    /// `h_mm(t) - h_mm(t - 1)`, with `h_mm(0) = 0`.
    pub rate_diff: f64,
    pub rate_ratio_plugin: f64,
    pub rate_diff_plugin: f64,
    pub distinct_words: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyTrace {
    pub p: usize,
    pub samples: u64,
    pub rows: Vec<EntropyRow>,
    /// Some height had more than `samples / 10` distinct words.
    pub undersampled: bool,
}

impl EntropyTrace {
    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    /// CSV with header `t,H_plugin,H_mm,rate_ratio,rate_diff,distinct_words`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,H_plugin,H_mm,rate_ratio,rate_diff,distinct_words\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.t, r.h_plugin, r.h_mm, r.rate_ratio, r.rate_diff, r.distinct_words
            ));
        }
        out
    }
}

pub fn nats_to_bits(h: f64) -> f64 {
    h / std::f64::consts::LN_2
}

/// Column entropy trace for `x ~ μ`, heights `1..=horizon`.
pub fn column_entropy(
    rule: &LocalRule,
    measure: &StochasticMeasure,
    p: usize,
    horizon: usize,
    samples: u64,
    stream: &RandomStream,
) -> Result<EntropyTrace> {
    if horizon == 0 || samples == 0 {
        return Err(Error::InvalidParameter("need T >= 1 and samples >= 1".into()));
    }
    if rule.alphabet_size() != measure.alphabet_size() {
        return Err(Error::InvalidParameter("rule and measure alphabets differ".into()));
    }
    row_codec(rule, p)?;
    let pi = p as i64;
    let (lo, hi) = rule.kernel().cone(-pi, pi, horizon - 1);
    let columns: Vec<Vec<u64>> = (0..samples)
        .into_par_iter()
        .map_init(Vec::new, |cells, i| {
            measure.sample_into(lo, hi, &stream.substream(i), cells);
            column_codes(rule, cells, p, horizon)
        })
        .collect();
    Ok(trace_from_columns(p, &columns))
}

/// Column entropy trace for given configurations, e.g. approximate `μ_c`
/// samples. Each window must cover `[-p - rT, p + rT]`.
pub fn column_entropy_from_windows(
    rule: &LocalRule,
    windows: &[WindowConfig],
    p: usize,
    horizon: usize,
) -> Result<EntropyTrace> {
    if horizon == 0 || windows.is_empty() {
        return Err(Error::InvalidParameter("need T >= 1 and at least one window".into()));
    }
    row_codec(rule, p)?;
    let pi = p as i64;
    let reach = pi + (rule.radius() * horizon) as i64;
    let (lo, hi) = rule.kernel().cone(-pi, pi, horizon - 1);
    for w in windows {
        w.require_cover(-reach, reach)?;
        rule.check_symbols(w.cells())?;
    }
    let columns: Vec<Vec<u64>> = windows
        .par_iter()
        .map(|w| {
            let mut cells = w.slice(lo, hi).to_vec();
            column_codes(rule, &mut cells, p, horizon)
        })
        .collect();
    Ok(trace_from_columns(p, &columns))
}

fn row_codec(rule: &LocalRule, p: usize) -> Result<()> {
    let bits = (2 * p + 1) as f64 * (rule.alphabet_size() as f64).log2();
    if bits > 63.0 {
        return Err(Error::InvalidParameter(format!("partition half-width {p} is too wide")));
    }
    Ok(())
}

/// Rows `0..horizon` of the central `(2p+1)`-column, each encoded base `k`.
/// `cells` must lie exactly on the kernel cone of `[-p, p]` at `horizon - 1`.
fn column_codes(rule: &LocalRule, cells: &mut Vec<Symbol>, p: usize, horizon: usize) -> Vec<u64> {
    let kernel = rule.kernel();
    let k = rule.alphabet_size() as u64;
    let width = 2 * p + 1;
    (0..horizon)
        .map(|t| {
            let at = kernel.left() * (horizon - 1 - t);
            let code = cells[at..at + width]
                .iter()
                .fold(0u64, |acc, &s| acc * k + s as u64);
            if t + 1 < horizon {
                kernel.step_in_place(cells);
            }
            code
        })
        .collect()
}

/// Counts column prefixes with a trie: node ids at depth `t` are the distinct
/// height-`t` words.
fn trace_from_columns(p: usize, columns: &[Vec<u64>]) -> EntropyTrace {
    let horizon = columns[0].len();
    let samples = columns.len() as u64;
    let mut children: HashMap<(u32, u64), u32> = HashMap::new();
    let mut counts: Vec<u64> = vec![0];
    let mut depth_nodes: Vec<Vec<u32>> = vec![Vec::new(); horizon + 1];
    for column in columns {
        let mut node = 0u32;
        for (t, &row) in column.iter().enumerate() {
            node = *children.entry((node, row)).or_insert_with(|| {
                counts.push(0);
                let id = (counts.len() - 1) as u32;
                depth_nodes[t + 1].push(id);
                id
            });
            counts[node as usize] += 1;
        }
    }
    let n = samples as f64;
    let mut rows = Vec::with_capacity(horizon);
    let (mut prev_plugin, mut prev_mm) = (0.0, 0.0);
    let mut undersampled = false;
    for (t, nodes) in depth_nodes.iter().enumerate().take(horizon + 1).skip(1) {
        let sum_c_ln_c: f64 = nodes
            .iter()
            .map(|&id| {
                let c = counts[id as usize] as f64;
                c * c.ln()
            })
            .sum();
        let h_plugin = (n.ln() - sum_c_ln_c / n).max(0.0);
        let distinct = nodes.len();
        let h_mm = h_plugin + (distinct as f64 - 1.0) / (2.0 * n);
        undersampled |= distinct as u64 > samples / 10;
        rows.push(EntropyRow {
            t,
            h_plugin,
            h_mm,
            rate_ratio: h_mm / t as f64,
            rate_diff: h_mm - prev_mm,
            rate_ratio_plugin: h_plugin / t as f64,
            rate_diff_plugin: h_plugin - prev_plugin,
            distinct_words: distinct,
        });
        prev_plugin = h_plugin;
        prev_mm = h_mm;
    }
    EntropyTrace {
        p,
        samples,
        rows,
        undersampled,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateEstimator {
    Difference,
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub by_difference: f64,
    pub by_ratio: f64,
    pub recommended: RateEstimator,
}

impl RateEstimate {
    pub fn recommended_value(&self) -> f64 {
        match self.recommended {
            RateEstimator::Difference => self.by_difference,
            RateEstimator::Ratio => self.by_ratio,
        }
    }
}

/// Rate from the last Miller–Madow difference and from `H_T / T`. The
/// difference is recommended: a preperiod inflates the ratio estimate.
pub fn entropy_rate_estimate(trace: &EntropyTrace) -> Result<RateEstimate> {
    if trace.rows.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need a trace of height at least 3, got {}",
            trace.rows.len()
        )));
    }
    let last = trace.rows.last().expect("nonempty");
    Ok(RateEstimate {
        by_difference: last.rate_diff,
        by_ratio: last.rate_ratio,
        recommended: RateEstimator::Difference,
    })
}
