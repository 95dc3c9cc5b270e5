use crate::error::{Error, Result};

use super::{LocalRule, Symbol};

/// The restriction `x(a, b)` of a configuration to a finite interval, with the
/// absolute coordinate of its leftmost cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WindowConfig {
    offset: i64,
    cells: Vec<Symbol>,
}

impl WindowConfig {
    pub fn new(offset: i64, cells: Vec<Symbol>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyConfig);
        }
        Ok(Self { offset, cells })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Absolute coordinate of the rightmost cell.
    pub fn end(&self) -> i64 {
        self.offset + self.cells.len() as i64 - 1
    }

    pub fn cells(&self) -> &[Symbol] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<Symbol> {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, pos: i64) -> Option<Symbol> {
        let i = pos.checked_sub(self.offset)?;
        usize::try_from(i).ok().and_then(|i| self.cells.get(i).copied())
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        self.offset <= lo && hi <= self.end()
    }

    pub fn require_cover(&self, lo: i64, hi: i64) -> Result<()> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            Err(Error::InsufficientCoverage {
                need_lo: lo,
                need_hi: hi,
                have_lo: self.offset,
                have_hi: self.end(),
            })
        }
    }

    /// Cells on the absolute interval `[lo, hi]`.
    ///
    /// Panics if the interval is not covered.
    pub fn slice(&self, lo: i64, hi: i64) -> &[Symbol] {
        assert!(self.covers(lo, hi) && lo <= hi, "slice [{lo}, {hi}] outside window");
        let a = (lo - self.offset) as usize;
        let b = (hi - self.offset) as usize;
        &self.cells[a..=b]
    }

    pub fn crop(&self, lo: i64, hi: i64) -> Result<WindowConfig> {
        self.require_cover(lo, hi)?;
        WindowConfig::new(lo, self.slice(lo, hi).to_vec())
    }

    /// The same cells placed `s` positions further right.
    pub fn shifted(&self, s: i64) -> WindowConfig {
        WindowConfig {
            offset: self.offset + s,
            cells: self.cells.clone(),
        }
    }
}

/// A spatially periodic configuration `...www...`, stored as one period on
/// the circle `Z/LZ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusConfig {
    cells: Vec<Symbol>,
}

impl TorusConfig {
    pub fn new(cells: Vec<Symbol>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyConfig);
        }
        Ok(Self { cells })
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Symbol] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<Symbol> {
        self.cells
    }

    /// Periodic extension of the torus onto `[lo, hi]`, with cell `i` of the
    /// torus at every absolute position congruent to `i` mod `L`.
    pub fn unroll(&self, lo: i64, hi: i64) -> WindowConfig {
        let l = self.cells.len() as i64;
        let cells = (lo..=hi)
            .map(|p| self.cells[p.rem_euclid(l) as usize])
            .collect();
        WindowConfig { offset: lo, cells }
    }
}

/// One exact light-cone step: the output window starts at `a + r` and has
/// `2r` fewer cells.
pub fn step_lightcone(rule: &LocalRule, w: &WindowConfig) -> Result<WindowConfig> {
    let r = rule.radius();
    if w.len() < 2 * r + 1 {
        return Err(Error::WindowTooShort {
            len: w.len(),
            radius: r,
        });
    }
    rule.check_symbols(w.cells())?;
    let mut out = Vec::with_capacity(w.len() - 2 * r);
    rule.step_slice(w.cells(), &mut out);
    Ok(WindowConfig {
        offset: w.offset + r as i64,
        cells: out,
    })
}

/// The words `F^i(x)(-n, n)` for `i = 0..=horizon`.
pub fn evolve_column(
    rule: &LocalRule,
    w: &WindowConfig,
    half_width: usize,
    horizon: usize,
) -> Result<Vec<Vec<Symbol>>> {
    let reach = (half_width + rule.radius() * horizon) as i64;
    w.require_cover(-reach, reach)?;
    rule.check_symbols(w.cells())?;
    let flat = column_flat(rule, w, half_width, horizon);
    let width = 2 * half_width + 1;
    Ok(flat.chunks(width).map(<[Symbol]>::to_vec).collect())
}

/// Column words concatenated row by row. The window must cover the kernel
/// cone of `[-m, m]` at `horizon`.
pub(crate) fn column_flat(
    rule: &LocalRule,
    w: &WindowConfig,
    half_width: usize,
    horizon: usize,
) -> Vec<Symbol> {
    let kernel = rule.kernel();
    let m = half_width as i64;
    let (lo, hi) = kernel.cone(-m, m, horizon);
    let mut cells = w.slice(lo, hi).to_vec();
    let width = 2 * half_width + 1;
    let mut out = Vec::with_capacity(width * (horizon + 1));
    for t in 0..=horizon {
        let start = kernel.left() * (horizon - t);
        out.extend_from_slice(&cells[start..start + width]);
        if t < horizon {
            kernel.step_in_place(&mut cells);
        }
    }
    out
}

/// Evolves `cells`, laid out on the kernel cone of `[-m, m]` at `horizon`,
/// and reports whether its column matches `reference` (as produced by
/// [`column_flat`]). Stops at the first mismatching row.
pub(crate) fn column_matches(
    rule: &LocalRule,
    cells: &mut Vec<Symbol>,
    reference: &[Symbol],
    half_width: usize,
    horizon: usize,
) -> bool {
    let kernel = rule.kernel();
    let width = 2 * half_width + 1;
    for t in 0..=horizon {
        let start = kernel.left() * (horizon - t);
        if cells[start..start + width] != reference[t * width..(t + 1) * width] {
            return false;
        }
        if t < horizon {
            kernel.step_in_place(cells);
        }
    }
    true
}

/// One step on the circle: cell `i` becomes `f(cells[i-r mod L ..= i+r mod L])`.
pub fn step_torus(rule: &LocalRule, t: &TorusConfig) -> TorusConfig {
    let mut out = Vec::with_capacity(t.size());
    torus_step_into(rule, t.cells(), &mut Vec::new(), &mut out);
    TorusConfig { cells: out }
}

pub(crate) fn torus_step_into(
    rule: &LocalRule,
    cells: &[Symbol],
    scratch: &mut Vec<Symbol>,
    out: &mut Vec<Symbol>,
) {
    let l = cells.len() as i64;
    let r = rule.radius() as i64;
    scratch.clear();
    scratch.extend((-r..l + r).map(|p| cells[p.rem_euclid(l) as usize]));
    rule.step_slice(scratch, out);
}
