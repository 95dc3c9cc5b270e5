//! Built-in rules and the plain-text rule format.
//!
//! Rule file format, three lines:
//!
//! ```text
//! k 3
//! r 1
//! table 0 1 0 0 1 0 2 0 2 ...
//! ```

use crate::ca::{LocalRule, Symbol};
use crate::error::{Error, Result};

/// Outputs of F_s indexed by `3 * middle + right`; the left symbol is ignored.
const FS_REDUCED: [Symbol; 9] = [0, 1, 0, 0, 1, 0, 2, 0, 2];

/// A named rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSpec {
    pub id: String,
    pub rule: LocalRule,
    pub provenance: &'static str,
}

/// Gilman's three-symbol automaton: on a background of 0s, 2s stay put, 1s
/// move one cell left per step, and a 1 meeting a 2 annihilates both.
pub fn gilman_fs() -> LocalRule {
    let table = (0..27).map(|idx| FS_REDUCED[idx % 9]).collect();
    LocalRule::from_table(3, 1, table).expect("F_s table is valid")
}

/// Elementary rule `code`: the neighborhood with base-2 value `v` maps to bit
/// `v` of `code`.
pub fn eca(code: u32) -> Result<LocalRule> {
    if code > 255 {
        return Err(Error::InvalidParameter(format!(
            "elementary rule code {code} outside 0..=255"
        )));
    }
    let table = (0..8).map(|v| ((code >> v) & 1) as Symbol).collect();
    LocalRule::from_table(2, 1, table)
}

/// The code of a `k = 2, r = 1` rule, if it is one.
pub fn eca_code(rule: &LocalRule) -> Option<u8> {
    if rule.alphabet_size() != 2 || rule.radius() != 1 {
        return None;
    }
    Some(
        rule.table()
            .iter()
            .enumerate()
            .fold(0u8, |acc, (v, &b)| acc | (b << v)),
    )
}

/// The left shift `σ(x)_i = x_{i+1}` as a radius-1 rule.
pub fn shift_rule(k: usize) -> Result<LocalRule> {
    let table = (0..k.pow(3)).map(|idx| (idx % k) as Symbol).collect();
    LocalRule::from_table(k, 1, table)
}

pub fn identity_rule(k: usize) -> Result<LocalRule> {
    LocalRule::from_table(k, 0, (0..k).map(|s| s as Symbol).collect())
}

/// Resolves `fs`, `identity:<k>`, `shift:<k>` or `eca:<code>`.
pub fn builtin(id: &str) -> Result<RuleSpec> {
    let unknown = || Error::InvalidParameter(format!("unknown rule id {id:?}"));
    let (name, arg) = match id.split_once(':') {
        Some((name, arg)) => (name, Some(arg)),
        None => (id, None),
    };
    let number = |arg: Option<&str>| -> Result<usize> {
        arg.and_then(|a| a.parse().ok()).ok_or_else(unknown)
    };
    let (rule, provenance) = match name {
        "fs" if arg.is_none() => (gilman_fs(), "Gilman's automaton F_s"),
        "identity" => (identity_rule(number(arg)?)?, "identity map"),
        "shift" => (shift_rule(number(arg)?)?, "left shift"),
        "eca" => (eca(number(arg)? as u32)?, "elementary cellular automaton"),
        _ => return Err(unknown()),
    };
    Ok(RuleSpec {
        id: id.to_string(),
        rule,
        provenance,
    })
}

/// The fixed registry of named rules.
pub fn registry() -> Vec<RuleSpec> {
    ["fs", "identity:2", "identity:3", "shift:2", "shift:3", "eca:30", "eca:90", "eca:110", "eca:184"]
        .iter()
        .map(|id| builtin(id).expect("registry ids resolve"))
        .collect()
}

pub fn serialize_rule(rule: &LocalRule) -> String {
    let table: Vec<String> = rule.table().iter().map(|s| s.to_string()).collect();
    format!(
        "k {}\nr {}\ntable {}\n",
        rule.alphabet_size(),
        rule.radius(),
        table.join(" ")
    )
}

pub fn parse_rule_file(text: &str) -> Result<LocalRule> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut field = |key: &str| -> Result<(usize, Vec<&str>)> {
        let (line, content) = lines.next().ok_or_else(|| Error::Syntax {
            line: text.lines().count() + 1,
            message: format!("missing `{key}` line"),
        })?;
        let mut tokens = content.split_whitespace();
        if tokens.next() != Some(key) {
            return Err(Error::Syntax {
                line,
                message: format!("expected `{key}`"),
            });
        }
        Ok((line, tokens.collect()))
    };
    let single = |(line, values): (usize, Vec<&str>), key: &str| -> Result<usize> {
        match values.as_slice() {
            [v] => v.parse().map_err(|_| Error::Syntax {
                line,
                message: format!("`{key}` value {v:?} is not an integer"),
            }),
            _ => Err(Error::Syntax {
                line,
                message: format!("`{key}` takes exactly one value"),
            }),
        }
    };
    let k = single(field("k")?, "k")?;
    let r = single(field("r")?, "r")?;
    let (line, values) = field("table")?;
    let table = values
        .iter()
        .map(|v| {
            v.parse::<usize>().map_err(|_| Error::Syntax {
                line,
                message: format!("table entry {v:?} is not an integer"),
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    if let Some((line, _)) = lines.next() {
        return Err(Error::Syntax {
            line,
            message: "unexpected content after `table`".into(),
        });
    }
    if let Some(&bad) = table.iter().find(|&&v| v >= k.max(1) || v > 255) {
        return Err(Error::SymbolOutOfRange { symbol: bad, k });
    }
    LocalRule::from_table(k, r, table.into_iter().map(|v| v as Symbol).collect())
}
