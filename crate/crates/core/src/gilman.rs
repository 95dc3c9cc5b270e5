//! Horizon-truncated B-sets and the μ-equicontinuity ratio.
//!
//! `B_m^T(x)` is the set of `y` whose central `(2m+1)`-columns agree with those
//! of `x` at every time `0..=T`. Since `B_m(x) ⊆ B_m^T(x)`, every ratio
//! reported here is an upper bound of the untruncated one, and `T` is always
//! part of the output.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ca::{column_flat, column_matches, LocalRule, Symbol, WindowConfig};
use crate::error::{Error, Result};
use crate::measure::StochasticMeasure;
use crate::rng::RandomStream;
use crate::stats::Proportion;

/// Monte Carlo estimate of `μ(C_n(x) ∩ B_m^T(x)) / μ(C_n(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub m: usize,
    pub n: usize,
    pub horizon: usize,
    pub samples: u64,
    pub successes: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl RatioEstimate {
    fn from_counts(m: usize, n: usize, horizon: usize, successes: u64, samples: u64) -> Self {
        let p = Proportion::new(successes, samples);
        Self {
            m,
            n,
            horizon,
            samples,
            successes,
            estimate: p.estimate,
            wilson_lo: p.lo,
            wilson_hi: p.hi,
        }
    }

    pub fn proportion(&self) -> Proportion {
        Proportion::new(self.successes, self.samples)
    }

    /// Pools estimates sharing `(m, n, T)`; with equal sample counts this is
    /// the plain mean over reference points.
    pub fn pooled(estimates: &[RatioEstimate]) -> Option<RatioEstimate> {
        let first = estimates.first()?;
        let successes = estimates.iter().map(|e| e.successes).sum();
        let samples = estimates.iter().map(|e| e.samples).sum();
        Some(Self::from_counts(first.m, first.n, first.horizon, successes, samples))
    }
}

fn symmetric_cone(rule: &LocalRule, half_width: usize, horizon: usize) -> (i64, i64) {
    let reach = (half_width + rule.radius() * horizon) as i64;
    (-reach, reach)
}

/// Whether `y ∈ B_m^T(x)`: the columns `F^i(·)(-m, m)` agree for `i = 0..=T`.
pub fn b_set_member(
    rule: &LocalRule,
    x: &WindowConfig,
    y: &WindowConfig,
    half_width: usize,
    horizon: usize,
) -> Result<bool> {
    let (lo, hi) = symmetric_cone(rule, half_width, horizon);
    x.require_cover(lo, hi)?;
    y.require_cover(lo, hi)?;
    rule.check_symbols(x.cells())?;
    rule.check_symbols(y.cells())?;
    let reference = column_flat(rule, x, half_width, horizon);
    Ok(member_against(rule, &reference, y, half_width, horizon, &mut Vec::new()))
}

fn member_against(
    rule: &LocalRule,
    reference: &[Symbol],
    y: &WindowConfig,
    half_width: usize,
    horizon: usize,
    buf: &mut Vec<Symbol>,
) -> bool {
    let m = half_width as i64;
    let (lo, hi) = rule.kernel().cone(-m, m, horizon);
    buf.clear();
    buf.extend_from_slice(y.slice(lo, hi));
    column_matches(rule, buf, reference, half_width, horizon)
}

/// Estimates the ratio by drawing `y ~ μ(· | C_n(x))` on the light cone of
/// `[-m, m]` and counting B-set members.
#[allow(clippy::too_many_arguments)]
pub fn estimate_ratio(
    rule: &LocalRule,
    measure: &StochasticMeasure,
    x: &WindowConfig,
    m: usize,
    n: usize,
    horizon: usize,
    samples: u64,
    stream: &RandomStream,
) -> Result<RatioEstimate> {
    if m > n {
        return Err(Error::InvalidParameter(format!("need m <= n, got m={m}, n={n}")));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    check_alphabets(rule, measure)?;
    let (lo, hi) = symmetric_cone(rule, n, horizon);
    x.require_cover(lo, hi)?;
    rule.check_symbols(x.cells())?;

    let mi = m as i64;
    let ni = n as i64;
    let (cone_lo, cone_hi) = rule.kernel().cone(-mi, mi, horizon);
    // y is pinned on [-n, n]; if that already contains the cone every draw
    // agrees with x.
    if -ni <= cone_lo && cone_hi <= ni {
        return Ok(RatioEstimate::from_counts(m, n, horizon, samples, samples));
    }
    let reference = column_flat(rule, x, m, horizon);
    let core = x.slice(-ni, ni);
    let target_lo = cone_lo.min(-ni);
    let target_hi = cone_hi.max(ni);
    let start = (cone_lo - target_lo) as usize;
    let len = (cone_hi - cone_lo + 1) as usize;

    let successes = (0..samples)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(draw, buf), i| {
                measure.extend_into(core, -ni, target_lo, target_hi, &stream.substream(i), draw);
                buf.clear();
                buf.extend_from_slice(&draw[start..start + len]);
                column_matches(rule, buf, &reference, m, horizon) as u64
            },
        )
        .sum();
    Ok(RatioEstimate::from_counts(m, n, horizon, successes, samples))
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

/// Outcome of a witness search against equicontinuity at `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSearch {
    /// A `y ∈ C_m(x) \ B_n^T(x)`, if one was found.
    #[serde(skip)]
    pub witness: Option<WindowConfig>,
    pub found: bool,
    pub candidates_tried: u64,
    /// The whole perturbation space was enumerated.
    pub exhaustive: bool,
}

/// Largest perturbation space enumerated exhaustively.
const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

/// Searches for `y` agreeing with `x` on `[-m, m]`, differing somewhere in
/// `[-n-rT, n+rT]`, with `y ∉ B_n^T(x)`.
///
/// Candidates are tried in a fixed order: every single-cell change, every
/// constant fill of the perturbable cells, then either the full perturbation
/// space (when it has at most 2^20 points) or `budget` uniform random
/// perturbations.
pub fn equicontinuity_witness_search(
    rule: &LocalRule,
    x: &WindowConfig,
    n: usize,
    m: usize,
    horizon: usize,
    budget: u64,
    stream: &RandomStream,
) -> Result<WitnessSearch> {
    let (lo, hi) = symmetric_cone(rule, n, horizon);
    if m as i64 > hi {
        return Err(Error::InvalidParameter(format!(
            "agreement radius {m} exceeds the light cone radius {hi}"
        )));
    }
    x.require_cover(lo, hi)?;
    rule.check_symbols(x.cells())?;
    let x = x.crop(lo, hi)?;
    let k = rule.alphabet_size();
    let reference = column_flat(rule, &x, n, horizon);
    let mi = m as i64;
    let free: Vec<usize> = (lo..=hi)
        .filter(|p| p.abs() > mi)
        .map(|p| (p - lo) as usize)
        .collect();

    let mut tried = 0u64;
    let mut buf = Vec::new();
    let mut test = |y: &[Symbol], tried: &mut u64| -> Option<WindowConfig> {
        *tried += 1;
        let y = WindowConfig::new(lo, y.to_vec()).expect("nonempty");
        (!member_against(rule, &reference, &y, n, horizon, &mut buf)).then_some(y)
    };
    let done = |witness: Option<WindowConfig>, tried: u64, exhaustive: bool| WitnessSearch {
        found: witness.is_some(),
        witness,
        candidates_tried: tried,
        exhaustive,
    };
    if free.is_empty() {
        return Ok(done(None, 0, true));
    }

    // Single-cell changes, nearest the center first.
    let mut by_distance = free.clone();
    by_distance.sort_by_key(|&i| ((i as i64 + lo).abs(), -(i as i64)));
    let mut y = x.cells().to_vec();
    for &i in &by_distance {
        for s in 0..k as Symbol {
            if s == x.cells()[i] {
                continue;
            }
            y[i] = s;
            if let Some(w) = test(&y, &mut tried) {
                return Ok(done(Some(w), tried, false));
            }
        }
        y[i] = x.cells()[i];
    }
    // Constant fills.
    for s in 0..k as Symbol {
        if free.iter().all(|&i| x.cells()[i] == s) {
            continue;
        }
        free.iter().for_each(|&i| y[i] = s);
        if let Some(w) = test(&y, &mut tried) {
            return Ok(done(Some(w), tried, false));
        }
    }

    let space = (k as u64).checked_pow(free.len() as u32).filter(|&s| s <= EXHAUSTIVE_LIMIT);
    match space {
        Some(space) => {
            for code in 0..space {
                let mut c = code;
                for &i in &free {
                    y[i] = (c % k as u64) as Symbol;
                    c /= k as u64;
                }
                if y == x.cells() {
                    continue;
                }
                if let Some(w) = test(&y, &mut tried) {
                    return Ok(done(Some(w), tried, true));
                }
            }
            Ok(done(None, tried, true))
        }
        None => {
            let mut rng = stream.rng();
            for _ in 0..budget {
                for &i in &free {
                    y[i] = rng.gen_range(0..k) as Symbol;
                }
                if y == x.cells() {
                    continue;
                }
                if let Some(w) = test(&y, &mut tried) {
                    return Ok(done(Some(w), tried, false));
                }
            }
            Ok(done(None, tried, false))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassLabel {
    EquicontinuousLike,
    MuEquicontinuousLike,
    ExpansiveLike,
    Inconclusive,
}

impl ClassLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::EquicontinuousLike => "equicontinuous-like",
            Self::MuEquicontinuousLike => "mu-equicontinuous-like",
            Self::ExpansiveLike => "expansive-like",
            Self::Inconclusive => "inconclusive",
        }
    }
}

/// Mean ratio above which a rule looks μ-equicontinuous.
pub const MU_EQUICONTINUOUS_THRESHOLD: f64 = 0.9;
/// Upper Wilson bound below which a rule looks expansive.
pub const EXPANSIVE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyParams {
    pub n_grid: Vec<usize>,
    pub m: usize,
    pub horizon: usize,
    pub samples: u64,
    pub x_count: usize,
    pub witness_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: ClassLabel,
    pub params: ClassifyParams,
    /// Pooled ratio over the reference points, one per grid value.
    pub mean_ratios: Vec<RatioEstimate>,
    /// `per_point[j][i]`: reference point `j`, grid value `i`.
    pub per_point: Vec<Vec<RatioEstimate>>,
    /// Witness searches at `n = m = max(n_grid)`, one per reference point.
    pub witnesses: Vec<WitnessSearch>,
}

/// Heuristic three-way label from ratio estimates and witness searches.
///
/// Reference points are drawn from the measure itself. The label is:
/// equicontinuous-like when no reference point admits a witness at the
/// largest `n`; μ-equicontinuous-like when the pooled ratio at the largest
/// `n` exceeds 0.9 and never drops across the grid beyond Wilson overlap;
/// expansive-like when the pooled ratio's upper bound at the largest `n` is
/// below 0.1; otherwise inconclusive.
pub fn classify(
    rule: &LocalRule,
    measure: &StochasticMeasure,
    params: &ClassifyParams,
    stream: &RandomStream,
) -> Result<Classification> {
    let grid = &params.n_grid;
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n grid must be nonempty and increasing".into()));
    }
    if params.m > grid[0] {
        return Err(Error::InvalidParameter("m must not exceed the smallest n".into()));
    }
    if params.x_count == 0 {
        return Err(Error::InvalidParameter("need at least one reference point".into()));
    }
    check_alphabets(rule, measure)?;
    let n_max = *grid.last().expect("nonempty");
    let (lo, hi) = symmetric_cone(rule, n_max, params.horizon);

    let x_streams = stream.substream(0);
    let ratio_streams = stream.substream(1);
    let witness_streams = stream.substream(2);
    let points = (0..params.x_count)
        .map(|j| measure.sample_window(lo, hi, &x_streams.substream(j as u64)))
        .collect::<Result<Vec<_>>>()?;

    let mut per_point = Vec::with_capacity(points.len());
    let mut witnesses = Vec::with_capacity(points.len());
    for (j, x) in points.iter().enumerate() {
        let s = ratio_streams.substream(j as u64);
        let row = grid
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                estimate_ratio(rule, measure, x, params.m, n, params.horizon, params.samples, &s.substream(i as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        per_point.push(row);
        witnesses.push(equicontinuity_witness_search(
            rule,
            x,
            n_max,
            n_max,
            params.horizon,
            params.witness_budget,
            &witness_streams.substream(j as u64),
        )?);
    }
    let mean_ratios: Vec<RatioEstimate> = (0..grid.len())
        .map(|i| {
            let column: Vec<RatioEstimate> = per_point.iter().map(|row| row[i]).collect();
            RatioEstimate::pooled(&column).expect("at least one point")
        })
        .collect();

    let label = label_from_evidence(&mean_ratios, &witnesses);
    Ok(Classification {
        label,
        params: params.clone(),
        mean_ratios,
        per_point,
        witnesses,
    })
}

pub fn label_from_evidence(mean_ratios: &[RatioEstimate], witnesses: &[WitnessSearch]) -> ClassLabel {
    if witnesses.iter().all(|w| !w.found) {
        return ClassLabel::EquicontinuousLike;
    }
    let Some(last) = mean_ratios.last() else {
        return ClassLabel::Inconclusive;
    };
    let non_decreasing = mean_ratios.windows(2).all(|w| {
        w[1].estimate >= w[0].estimate || w[1].proportion().overlaps(&w[0].proportion())
    });
    if last.estimate > MU_EQUICONTINUOUS_THRESHOLD && non_decreasing {
        ClassLabel::MuEquicontinuousLike
    } else if last.wilson_hi < EXPANSIVE_THRESHOLD {
        ClassLabel::ExpansiveLike
    } else {
        ClassLabel::Inconclusive
    }
}
