//! Local rules and their exact evolution on finite windows and tori.
//!
//! There is no padded or truncated boundary mode: a [`WindowConfig`] shrinks
//! along its light cone at every step, and a [`TorusConfig`] is the exact
//! image of a spatially periodic configuration.

mod config;
mod rule;

pub use config::{evolve_column, step_lightcone, step_torus, TorusConfig, WindowConfig};
pub(crate) use config::{column_flat, column_matches, torus_step_into};
pub use rule::{Kernel, LocalRule};

use crate::error::{Error, Result};

/// Alphabet letters are the integers `0..k`.
pub type Symbol = u8;

/// Applies the block map to a single neighborhood of length `2r + 1`.
pub fn apply_local(rule: &LocalRule, neighborhood: &[Symbol]) -> Result<Symbol> {
    rule.apply(neighborhood)
}

/// Writes a word as one character per symbol (`0-9` then `a-z`).
pub fn format_word(word: &[Symbol]) -> String {
    word.iter()
        .map(|&s| char::from_digit(u32::from(s), 36).unwrap_or('?'))
        .collect()
}

/// Inverse of [`format_word`].
pub fn parse_word(text: &str) -> Result<Vec<Symbol>> {
    text.chars()
        .map(|c| {
            c.to_digit(36)
                .map(|d| d as Symbol)
                .ok_or_else(|| Error::InvalidParameter(format!("bad symbol character {c:?}")))
        })
        .collect()
}
