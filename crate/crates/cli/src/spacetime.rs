//! Space-time diagrams as binary PGM (P5) images, one row per time step.

use anyhow::{bail, Result};
use cellmeasure::ca::{step_lightcone, step_torus};
use cellmeasure::{LocalRule, Symbol, TorusConfig, WindowConfig};

/// Gray level of cells outside the light cone.
pub const SENTINEL: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Lightcone,
    Torus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn row(&self, t: usize) -> &[u8] {
        &self.pixels[t * self.width..(t + 1) * self.width]
    }
}

/// Gray step per symbol. In light-cone mode 255 stays free for the sentinel
/// whenever `k <= 128`.
pub fn gray_step(k: usize, mode: Mode) -> u8 {
    let top = match mode {
        Mode::Lightcone if k <= 128 => 254,
        _ => 255,
    };
    (top / (k - 1)).max(1) as u8
}

fn shade(s: Symbol, step: u8) -> u8 {
    s.saturating_mul(step)
}

pub fn render(rule: &LocalRule, initial: &WindowConfig, steps: usize, mode: Mode) -> Result<Pgm> {
    rule.check_symbols(initial.cells())?;
    let width = initial.len();
    let step = gray_step(rule.alphabet_size(), mode);
    let mut pixels = Vec::with_capacity(width * (steps + 1));
    match mode {
        Mode::Lightcone => {
            let r = rule.radius();
            if width < 2 * r * steps + 1 {
                bail!(
                    "a light-cone diagram of {steps} steps needs at least {} cells, got {width}",
                    2 * r * steps + 1
                );
            }
            let mut w = initial.clone();
            for t in 0..=steps {
                let pad = r * t;
                pixels.extend(std::iter::repeat_n(SENTINEL, pad));
                pixels.extend(w.cells().iter().map(|&s| shade(s, step)));
                pixels.extend(std::iter::repeat_n(SENTINEL, pad));
                if t < steps {
                    w = step_lightcone(rule, &w)?;
                }
            }
        }
        Mode::Torus => {
            let mut c = TorusConfig::new(initial.cells().to_vec())?;
            for t in 0..=steps {
                pixels.extend(c.cells().iter().map(|&s| shade(s, step)));
                if t < steps {
                    c = step_torus(rule, &c);
                }
            }
        }
    }
    Ok(Pgm {
        width,
        height: steps + 1,
        pixels,
    })
}
