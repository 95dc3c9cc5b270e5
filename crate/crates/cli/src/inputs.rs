//! Rule and measure resolution, output sinks.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cellmeasure::zoo;
use cellmeasure::{LocalRule, StochasticMeasure};

/// A rule together with the id used in reports.
pub struct NamedRule {
    pub id: String,
    pub rule: LocalRule,
}

/// Resolves a builtin id (`fs`, `identity:k`, `shift:k`, `eca:code`) or a
/// rule file path.
pub fn resolve_rule(source: &str) -> Result<NamedRule> {
    if let Ok(spec) = zoo::builtin(source) {
        return Ok(NamedRule {
            id: spec.id,
            rule: spec.rule,
        });
    }
    let path = Path::new(source);
    if !path.is_file() {
        bail!("{source:?} is neither a builtin rule id nor a readable rule file");
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading rule file {source}"))?;
    let rule = zoo::parse_rule_file(&text).with_context(|| format!("parsing rule file {source}"))?;
    Ok(NamedRule {
        id: source.to_string(),
        rule,
    })
}

/// Resolves `bernoulli:k:p..`, `markov:k:P..`, `markov:k:<file>` or a
/// measure file in the text format.
pub fn resolve_measure(source: &str) -> Result<StochasticMeasure> {
    if let Some(rest) = source.strip_prefix("markov:") {
        if let Some((k, path)) = rest.split_once(':') {
            if Path::new(path).is_file() {
                let k: usize = k.parse().with_context(|| format!("bad alphabet size in {source:?}"))?;
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                let body = text.split_whitespace().collect::<Vec<_>>();
                let full = if body.first() == Some(&"markov") {
                    body.join(" ")
                } else {
                    format!("markov {k} {}", body.join(" "))
                };
                let m = StochasticMeasure::from_text(&full)
                    .with_context(|| format!("parsing measure file {path}"))?;
                if m.alphabet_size() != k {
                    bail!("measure file {path} has k={}, expected {k}", m.alphabet_size());
                }
                return Ok(m);
            }
        }
    }
    if source.starts_with("bernoulli:") || source.starts_with("markov:") {
        return StochasticMeasure::from_inline(source).with_context(|| format!("parsing measure {source:?}"));
    }
    let path = Path::new(source);
    if !path.is_file() {
        bail!("{source:?} is neither an inline measure nor a readable measure file");
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading measure file {source}"))?;
    StochasticMeasure::from_text(&text).with_context(|| format!("parsing measure file {source}"))
}

pub fn check_alphabets(rule: &NamedRule, measure: &StochasticMeasure) -> Result<()> {
    if rule.rule.alphabet_size() != measure.alphabet_size() {
        bail!(
            "rule {} has k={} but the measure has k={}",
            rule.id,
            rule.rule.alphabet_size(),
            measure.alphabet_size()
        );
    }
    Ok(())
}

/// Writes to the file if given, else stdout.
pub fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Fails early when the output file's directory does not exist.
pub fn check_output(out: Option<&PathBuf>) -> Result<()> {
    if let Some(path) = out {
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
        if path.is_dir() {
            bail!("output path {} is a directory", path.display());
        }
    }
    Ok(())
}
