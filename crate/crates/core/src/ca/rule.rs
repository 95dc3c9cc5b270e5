use crate::error::{Error, Result};

use super::Symbol;

/// A block map `f: A^(2r+1) -> A` over the alphabet `{0, .., k-1}`.
///
/// The neighborhood `(a_{-r}, .., a_r)` is stored at table index
/// `sum_j a_j * k^(r-j)`: leftmost symbol most significant, base `k`. For
/// `k = 2, r = 1` this is the usual elementary rule numbering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalRule {
    k: usize,
    radius: usize,
    table: Vec<Symbol>,
    kernel: Kernel,
}

impl LocalRule {
    pub fn from_table(k: usize, radius: usize, table: Vec<Symbol>) -> Result<Self> {
        if !(2..=256).contains(&k) {
            return Err(Error::AlphabetSize(k));
        }
        let expected = checked_pow(k, 2 * radius + 1).ok_or_else(|| {
            Error::InvalidParameter(format!("table size {k}^{} overflows", 2 * radius + 1))
        })?;
        if table.len() != expected {
            return Err(Error::TableLength {
                expected,
                got: table.len(),
            });
        }
        if let Some(&bad) = table.iter().find(|&&s| s as usize >= k) {
            return Err(Error::SymbolOutOfRange {
                symbol: bad as usize,
                k,
            });
        }
        let kernel = Kernel::reduce(k, radius, &table);
        Ok(Self {
            k,
            radius,
            table,
            kernel,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn table(&self) -> &[Symbol] {
        &self.table
    }

    pub fn neighborhood_len(&self) -> usize {
        2 * self.radius + 1
    }

    /// Table index of a neighborhood, validating length and symbols.
    pub fn index_of(&self, neighborhood: &[Symbol]) -> Result<usize> {
        if neighborhood.len() != self.neighborhood_len() {
            return Err(Error::NeighborhoodLength {
                expected: self.neighborhood_len(),
                got: neighborhood.len(),
            });
        }
        let mut idx = 0usize;
        for &s in neighborhood {
            self.check_symbol(s)?;
            idx = idx * self.k + s as usize;
        }
        Ok(idx)
    }

    pub fn apply(&self, neighborhood: &[Symbol]) -> Result<Symbol> {
        Ok(self.table[self.index_of(neighborhood)?])
    }

    pub fn check_symbol(&self, s: Symbol) -> Result<()> {
        if (s as usize) < self.k {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                symbol: s as usize,
                k: self.k,
            })
        }
    }

    pub fn check_symbols(&self, cells: &[Symbol]) -> Result<()> {
        cells.iter().try_for_each(|&s| self.check_symbol(s))
    }

    /// The reduced neighborhood the rule actually reads.
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// One step of the full-radius block map: the output has `2r` fewer cells
    /// and output cell `i` is `f(input[i..=i+2r])`.
    pub(crate) fn step_slice(&self, input: &[Symbol], out: &mut Vec<Symbol>) {
        slide(self.k, 2 * self.radius + 1, &self.table, input, out);
    }
}

/// The smallest neighborhood `[-left, right]` (always containing offset 0)
/// outside of which the rule output does not depend on its input.
///
/// Light cones computed from the kernel are exact and can be much narrower
/// than the symmetric `[-r, r]` cone, e.g. the F_s automaton only looks right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Kernel {
    k: usize,
    left: usize,
    right: usize,
    table: Vec<Symbol>,
}

impl Kernel {
    fn reduce(k: usize, radius: usize, table: &[Symbol]) -> Self {
        let width = 2 * radius + 1;
        // Offset j (0-based from the left) is relevant iff changing that
        // symbol alone changes the output somewhere.
        let relevant: Vec<bool> = (0..width)
            .map(|j| {
                let weight = k.pow((width - 1 - j) as u32);
                (0..table.len()).any(|idx| {
                    let digit = (idx / weight) % k;
                    let base = idx - digit * weight;
                    (0..k).any(|d| table[base + d * weight] != table[idx])
                })
            })
            .collect();
        let first = relevant.iter().position(|&b| b).unwrap_or(radius).min(radius);
        let last = relevant.iter().rposition(|&b| b).unwrap_or(radius).max(radius);
        let left = radius - first;
        let right = last - radius;
        let sub_width = last - first + 1;
        let mut reduced = vec![0 as Symbol; k.pow(sub_width as u32)];
        for (sub_idx, slot) in reduced.iter_mut().enumerate() {
            // Embed the reduced neighborhood with zeros in the ignored slots.
            let full_idx = sub_idx * k.pow((width - 1 - last) as u32);
            *slot = table[full_idx];
        }
        Self {
            k,
            left,
            right,
            table: reduced,
        }
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    /// Input interval at time 0 that determines cells `[lo, hi]` at time `t`.
    pub fn cone(&self, lo: i64, hi: i64, t: usize) -> (i64, i64) {
        (lo - (self.left * t) as i64, hi + (self.right * t) as i64)
    }

    /// Steps `cells` in place; the result starts `left` cells further right
    /// and ends `right` cells further left than the input.
    pub fn step_in_place(&self, cells: &mut Vec<Symbol>) {
        let width = self.left + self.right + 1;
        if cells.len() < width {
            cells.clear();
            return;
        }
        let k = self.k;
        let high = k.pow((width - 1) as u32);
        let n_out = cells.len() + 1 - width;
        let mut idx = 0usize;
        for &c in &cells[..width - 1] {
            idx = idx * k + c as usize;
        }
        for i in 0..n_out {
            idx = idx * k + cells[i + width - 1] as usize;
            let first = cells[i] as usize;
            cells[i] = self.table[idx];
            idx -= first * high;
        }
        cells.truncate(n_out);
    }
}

fn slide(k: usize, width: usize, table: &[Symbol], input: &[Symbol], out: &mut Vec<Symbol>) {
    out.clear();
    if input.len() < width {
        return;
    }
    let high = k.pow((width - 1) as u32);
    let mut idx = 0usize;
    for &c in &input[..width - 1] {
        idx = idx * k + c as usize;
    }
    for i in 0..=input.len() - width {
        idx = idx * k + input[i + width - 1] as usize;
        out.push(table[idx]);
        idx -= input[i] as usize * high;
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let exp = u32::try_from(exp).ok()?;
    let v = base.checked_pow(exp)?;
    // Tables beyond this are not practical to hold in memory anyway.
    (v <= 1 << 28).then_some(v)
}
