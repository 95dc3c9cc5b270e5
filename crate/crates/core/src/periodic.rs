//! Torus orbits, spatially periodic F-periodic points, and density of those
//! points in an empirical support.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use rand::Rng;
use serde::Serialize;

use crate::ca::{format_word, step_torus, torus_step_into, LocalRule, Symbol, TorusConfig};
use crate::cesaro::EmpiricalCylinderMeasure;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Default cap on the number of torus steps explored per orbit.
pub const MAX_ORBIT_STATES: usize = 10_000_000;
/// Cycles longer than this are not stored in [`OrbitCycleInfo::cycle`].
const STORED_CYCLE_LIMIT: usize = 4096;

/// Preperiod and period of a torus orbit: `F^(pp+p)(w) = F^pp(w)` with both
/// minimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitCycleInfo {
    pub preperiod: usize,
    pub period: usize,
    /// The cycle `F^pp(w), .., F^(pp+p-1)(w)` when `p` is small enough.
    #[serde(skip)]
    pub cycle: Option<Vec<TorusConfig>>,
}

/// Detects the first repeated state of the orbit of `start`.
///
/// `max_steps` defaults to `min(k^L, 10^7)`, which always suffices when
/// `k^L <= 10^7`.
pub fn torus_cycle(
    rule: &LocalRule,
    start: &TorusConfig,
    max_steps: Option<usize>,
) -> Result<OrbitCycleInfo> {
    rule.check_symbols(start.cells())?;
    let k = rule.alphabet_size();
    let l = start.size();
    let bound = max_steps.unwrap_or_else(|| state_count(k, l).min(MAX_ORBIT_STATES));
    let (preperiod, period) = if (l as f64) * (k as f64).log2() <= 63.0 {
        let k = k as u64;
        rho(rule, start.cells(), bound, |c| {
            c.iter().fold(0u64, |acc, &s| acc * k + s as u64)
        })?
    } else {
        rho(rule, start.cells(), bound, <[Symbol]>::to_vec)?
    };
    let cycle = (period <= STORED_CYCLE_LIMIT).then(|| {
        let mut state = start.clone();
        for _ in 0..preperiod {
            state = step_torus(rule, &state);
        }
        let mut cycle = Vec::with_capacity(period);
        for _ in 0..period {
            let next = step_torus(rule, &state);
            cycle.push(state);
            state = next;
        }
        cycle
    });
    Ok(OrbitCycleInfo {
        preperiod,
        period,
        cycle,
    })
}

fn state_count(k: usize, l: usize) -> usize {
    u32::try_from(l)
        .ok()
        .and_then(|l| k.checked_pow(l))
        .unwrap_or(usize::MAX)
}

/// Visited-map cycle detection: exact `(pp, p)` in one pass.
fn rho<K: Hash + Eq>(
    rule: &LocalRule,
    start: &[Symbol],
    bound: usize,
    key: impl Fn(&[Symbol]) -> K,
) -> Result<(usize, usize)> {
    let mut seen: HashMap<K, usize> = HashMap::new();
    let mut state = start.to_vec();
    let mut next = Vec::with_capacity(state.len());
    let mut scratch = Vec::new();
    seen.insert(key(&state), 0);
    for step in 1..=bound {
        torus_step_into(rule, &state, &mut scratch, &mut next);
        std::mem::swap(&mut state, &mut next);
        if let Some(&first) = seen.get(&key(&state)) {
            return Ok((first, step - first));
        }
        seen.insert(key(&state), step);
    }
    Err(Error::CycleBoundExceeded { steps: bound })
}

/// A spatially periodic configuration `...www...` with `F^m` fixing it.
/// `word` is stored in canonical form: primitive root, least rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PeriodicPoint {
    pub word: Vec<Symbol>,
    pub period: usize,
    /// Smallest preperiod among searched starts whose orbit reached this
    /// point; 0 when the word itself was searched.
    pub preperiod: usize,
}

impl PeriodicPoint {
    /// Re-checks `F^m(w̄) = w̄` with `m` explicit torus steps.
    pub fn verify(&self, rule: &LocalRule) -> bool {
        let Ok(start) = TorusConfig::new(self.word.clone()) else {
            return false;
        };
        if rule.check_symbols(start.cells()).is_err() {
            return false;
        }
        let mut state = start.clone();
        for _ in 0..self.period {
            state = step_torus(rule, &state);
        }
        state == start
    }
}

/// Primitive root of `word` rotated to its lexicographically least form.
pub fn canonical_form(word: &[Symbol]) -> Vec<Symbol> {
    let l = word.len();
    let root_len = (1..=l)
        .find(|&d| l.is_multiple_of(d) && word.iter().enumerate().all(|(i, &s)| s == word[i % d]))
        .unwrap_or(l);
    let root = &word[..root_len];
    (0..root_len)
        .map(|r| root[r..].iter().chain(&root[..r]).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSearch {
    /// Periods above this are not reported; also bounds each orbit search.
    /// Defaults to `min(k^L, 10^7)`.
    pub time_bound: Option<usize>,
    /// Words sampled per length when `k^L` exceeds [`MAX_ORBIT_STATES`].
    pub sample_budget: usize,
    #[serde(skip)]
    pub stream: RandomStream,
}

impl Default for PeriodicSearch {
    fn default() -> Self {
        Self {
            time_bound: None,
            sample_budget: 10_000,
            stream: RandomStream::new(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicReport {
    /// Distinct points in canonical form, sorted by length then word.
    pub points: Vec<PeriodicPoint>,
    pub searched: u64,
    /// Starts whose orbit did not close within the time bound.
    pub unresolved: u64,
    /// Some length was sampled rather than enumerated.
    pub partial: bool,
}

impl PeriodicReport {
    pub fn find(&self, word: &[Symbol]) -> Option<&PeriodicPoint> {
        let canon = canonical_form(word);
        self.points.iter().find(|p| p.word == canon)
    }

    /// CSV with header `L,word,preperiod,period`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,word,preperiod,period\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.word.len(),
                format_word(&p.word),
                p.preperiod,
                p.period
            ));
        }
        out
    }
}

/// Collects F-periodic spatially periodic points with spatial period at most
/// `l_max`, from every word of each length (or a sample of words when there
/// are more than 10^7) and the cycles their orbits fall into.
pub fn find_periodic_points(
    rule: &LocalRule,
    l_max: usize,
    search: &PeriodicSearch,
) -> Result<PeriodicReport> {
    if l_max == 0 {
        return Err(Error::InvalidParameter("L_max must be at least 1".into()));
    }
    let k = rule.alphabet_size();
    let mut found: BTreeMap<Vec<Symbol>, (usize, usize)> = BTreeMap::new();
    let (mut searched, mut unresolved, mut partial) = (0u64, 0u64, false);
    let mut rng = search.stream.rng();
    for l in 1..=l_max {
        let count = state_count(k, l);
        let exhaustive = count <= MAX_ORBIT_STATES;
        partial |= !exhaustive;
        let words: Box<dyn Iterator<Item = Vec<Symbol>>> = if exhaustive {
            Box::new((0..count).map(move |code| decode(code, k, l)))
        } else {
            let sampled: Vec<Vec<Symbol>> = (0..search.sample_budget)
                .map(|_| (0..l).map(|_| rng.gen_range(0..k) as Symbol).collect())
                .collect();
            Box::new(sampled.into_iter())
        };
        let bound = search
            .time_bound
            .unwrap_or_else(|| count.min(MAX_ORBIT_STATES));
        for word in words {
            searched += 1;
            let canon = canonical_form(&word);
            if let Some(entry) = found.get_mut(&canon) {
                entry.1 = 0;
                continue;
            }
            let start = TorusConfig::new(word).expect("l >= 1");
            let info = match torus_cycle(rule, &start, Some(bound)) {
                Ok(info) => info,
                Err(Error::CycleBoundExceeded { .. }) => {
                    unresolved += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if info.period > bound {
                unresolved += 1;
                continue;
            }
            let mut state = start.clone();
            for _ in 0..info.preperiod {
                state = step_torus(rule, &state);
            }
            for i in 0..info.period {
                let canon = canonical_form(state.cells());
                let pp = if i == 0 && info.preperiod == 0 { 0 } else { info.preperiod };
                found
                    .entry(canon)
                    .and_modify(|e| e.1 = e.1.min(pp))
                    .or_insert((info.period, pp));
                state = step_torus(rule, &state);
            }
        }
    }
    let mut points: Vec<PeriodicPoint> = found
        .into_iter()
        .map(|(word, (period, preperiod))| PeriodicPoint {
            word,
            period,
            preperiod,
        })
        .filter(|p| p.verify(rule))
        .collect();
    points.sort_by(|a, b| (a.word.len(), &a.word).cmp(&(b.word.len(), &b.word)));
    Ok(PeriodicReport {
        points,
        searched,
        unresolved,
        partial,
    })
}

fn decode(mut code: usize, k: usize, l: usize) -> Vec<Symbol> {
    let mut w = vec![0 as Symbol; l];
    for slot in w.iter_mut().rev() {
        *slot = (code % k) as Symbol;
        code /= k;
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageEntry {
    pub word: Vec<Symbol>,
    pub count: u64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub threshold: f64,
    pub total: usize,
    pub covered: usize,
    /// `covered / total`; 1 when no word passes the threshold.
    pub coverage: f64,
    pub entries: Vec<CoverageEntry>,
}

impl DensityReport {
    /// CSV `word,count,covered` preceded by a `# coverage=` comment line.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# coverage={}/{}={}\nword,count,covered\n",
            self.covered, self.total, self.coverage
        );
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", format_word(&e.word), e.count, e.covered));
        }
        out
    }
}

/// For each support word with frequency above `threshold`, whether it occurs
/// in the bi-infinite repetition of some (re-verified) periodic point.
pub fn density_check(
    rule: &LocalRule,
    points: &[PeriodicPoint],
    support: &EmpiricalCylinderMeasure,
    threshold: f64,
) -> DensityReport {
    let len = support.word_len();
    let mut realized: HashSet<Vec<Symbol>> = HashSet::new();
    for p in points.iter().filter(|p| p.verify(rule)) {
        let l = p.word.len();
        for s in 0..l {
            realized.insert((0..len).map(|i| p.word[(s + i) % l]).collect());
        }
    }
    let total_mass = support.total() as f64;
    let entries: Vec<CoverageEntry> = support
        .iter()
        .filter(|&(_, c)| c as f64 / total_mass > threshold)
        .map(|(w, c)| CoverageEntry {
            word: w.to_vec(),
            count: c,
            covered: realized.contains(w),
        })
        .collect();
    let covered = entries.iter().filter(|e| e.covered).count();
    let total = entries.len();
    DensityReport {
        threshold,
        total,
        covered,
        coverage: if total == 0 { 1.0 } else { covered as f64 / total as f64 },
        entries,
    }
}
