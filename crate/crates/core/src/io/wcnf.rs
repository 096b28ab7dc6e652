//! WCNF writer (2021 and 2022 dialects) and a strict reader.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::cnf::{Lit, WcnfFormula};
use crate::encoder::EncodingArtifact;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WcnfFormat {
    /// `p wcnf <vars> <clauses> <top>` header, hard clauses weighted `top`.
    #[default]
    Wcnf2021,
    /// No header, hard clauses prefixed with `h`.
    Wcnf2022,
}

impl fmt::Display for WcnfFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WcnfFormat::Wcnf2021 => "wcnf2021",
            WcnfFormat::Wcnf2022 => "wcnf2022",
        })
    }
}

impl FromStr for WcnfFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wcnf2021" => Ok(WcnfFormat::Wcnf2021),
            "wcnf2022" => Ok(WcnfFormat::Wcnf2022),
            _ => Err(Error::Configuration(format!(
                "unknown format `{s}` (expected wcnf2021 or wcnf2022)"
            ))),
        }
    }
}

fn write_lits(out: &mut impl Write, lits: &[Lit]) -> std::io::Result<()> {
    for l in lits {
        write!(out, " {}", l.to_dimacs())?;
    }
    writeln!(out, " 0")
}

/// Streams `f` to `out`, preceded by `c` lines for each comment.
pub fn write_formula(
    f: &WcnfFormula,
    format: WcnfFormat,
    comments: &[String],
    out: &mut impl Write,
) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "c {c}")?;
    }
    let top = f.top();
    if format == WcnfFormat::Wcnf2021 {
        writeln!(
            out,
            "p wcnf {} {} {top}",
            f.num_vars(),
            f.num_hard() + f.num_soft()
        )?;
    }
    for clause in f.hard_clauses() {
        match format {
            WcnfFormat::Wcnf2021 => write!(out, "{top}")?,
            WcnfFormat::Wcnf2022 => write!(out, "h")?,
        }
        write_lits(out, clause)?;
    }
    for s in f.soft_clauses() {
        write!(out, "{}", s.weight)?;
        write_lits(out, &s.lits)?;
    }
    Ok(())
}

/// Comment lines describing an artifact's atlas and objective.
pub fn artifact_comments(a: &EncodingArtifact) -> Vec<String> {
    let at = &a.atlas;
    let widths: Vec<String> = at.widths.iter().map(ToString::to_string).collect();
    vec![
        format!("bnnplan {}", env!("CARGO_PKG_VERSION")),
        format!(
            "horizon {} state_bits {} action_bits {} widths {}",
            at.horizon,
            at.state_bits,
            at.action_bits,
            widths.join(":")
        ),
        format!(
            "atlas x {}..{} y {}..{} z {}..{}",
            at.x_first,
            at.y_first - 1,
            at.y_first,
            at.z_first - 1,
            at.z_first,
            at.end - 1
        ),
        format!("objective_offset {}", a.objective_offset),
        format!("scale_pow10 {}", a.scale_pow10),
        "scaled reward = sum of soft weights - cost + objective_offset".to_string(),
    ]
}

pub fn write_artifact(
    a: &EncodingArtifact,
    format: WcnfFormat,
    out: &mut impl Write,
) -> std::io::Result<()> {
    write_formula(&a.formula, format, &artifact_comments(a), out)
}

/// Clauses read back from WCNF text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedWcnf {
    pub format: WcnfFormat,
    /// Declared in the 2021 header; the largest variable seen for 2022.
    pub num_vars: u32,
    pub top: Option<u64>,
    pub hard: Vec<Vec<i32>>,
    pub soft: Vec<(u64, Vec<i32>)>,
}

impl ParsedWcnf {
    pub fn sum_soft(&self) -> u64 {
        self.soft.iter().map(|(w, _)| w).sum()
    }

    /// Rebuilds a formula with the same clauses in the same order.
    pub fn to_formula(&self) -> Result<WcnfFormula> {
        let mut f = WcnfFormula::new();
        f.reserve(self.num_vars);
        let lits = |c: &[i32]| -> Vec<Lit> {
            c.iter()
                .map(|&v| Lit::from_dimacs(v).expect("nonzero"))
                .collect()
        };
        for c in &self.hard {
            f.add_hard(&lits(c))?;
        }
        for (w, c) in &self.soft {
            f.add_soft(*w, &lits(c))?;
        }
        Ok(f)
    }
}

fn bad(line: usize, msg: impl fmt::Display) -> Error {
    Error::Format(format!("line {line}: {msg}"))
}

fn parse_clause(line: usize, tokens: &[&str]) -> Result<Vec<i32>> {
    let (last, body) = tokens
        .split_last()
        .ok_or_else(|| bad(line, "empty clause line"))?;
    if *last != "0" {
        return Err(bad(line, "clause not terminated by 0"));
    }
    if body.is_empty() {
        return Err(bad(line, "empty clause"));
    }
    body.iter()
        .map(|t| match t.parse::<i32>() {
            Ok(0) => Err(bad(line, "0 inside a clause")),
            Ok(v) if v == i32::MIN => Err(bad(line, "literal out of range")),
            Ok(v) => Ok(v),
            Err(_) => Err(bad(line, format!("bad literal `{t}`"))),
        })
        .collect()
}

/// Parses either dialect, rejecting anything malformed: header counts that
/// disagree with the body, literals beyond the declared variables, zero
/// weights, hard weights other than `top`, and `top <= ` total soft weight.
pub fn read_wcnf(text: &str) -> Result<ParsedWcnf> {
    let mut header: Option<(u32, usize, u64)> = None;
    let mut hard = Vec::new();
    let mut soft = Vec::new();
    let mut max_var = 0u32;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(&first) = tokens.first() else {
            continue;
        };
        if first.starts_with('c') {
            continue;
        }
        if first == "p" {
            if header.is_some() || !hard.is_empty() || !soft.is_empty() {
                return Err(bad(line, "misplaced header"));
            }
            match tokens.as_slice() {
                ["p", "wcnf", v, c, t] => {
                    let parsed = (v.parse(), c.parse(), t.parse());
                    match parsed {
                        (Ok(v), Ok(c), Ok(t)) => header = Some((v, c, t)),
                        _ => return Err(bad(line, "bad header numbers")),
                    }
                }
                _ => return Err(bad(line, "expected `p wcnf <vars> <clauses> <top>`")),
            }
            continue;
        }
        let clause;
        if first == "h" {
            if header.is_some() {
                return Err(bad(line, "`h` clause in a file with a 2021 header"));
            }
            clause = parse_clause(line, &tokens[1..])?;
            hard.push(clause.clone());
        } else {
            let weight: u64 = first
                .parse()
                .map_err(|_| bad(line, format!("bad weight `{first}`")))?;
            if weight == 0 {
                return Err(bad(line, "zero weight"));
            }
            clause = parse_clause(line, &tokens[1..])?;
            match header {
                Some((_, _, top)) if weight == top => hard.push(clause.clone()),
                Some((_, _, top)) if weight > top => {
                    return Err(bad(line, format!("weight {weight} above top {top}")))
                }
                _ => soft.push((weight, clause.clone())),
            }
        }
        for v in &clause {
            max_var = max_var.max(v.unsigned_abs());
        }
        if let Some((nv, _, _)) = header {
            if max_var > nv {
                return Err(bad(line, format!("variable {max_var} above declared {nv}")));
            }
        }
    }
    let parsed = match header {
        Some((nv, nc, top)) => {
            if hard.len() + soft.len() != nc {
                return Err(Error::Format(format!(
                    "header declares {nc} clauses, found {}",
                    hard.len() + soft.len()
                )));
            }
            ParsedWcnf {
                format: WcnfFormat::Wcnf2021,
                num_vars: nv,
                top: Some(top),
                hard,
                soft,
            }
        }
        None => ParsedWcnf {
            format: WcnfFormat::Wcnf2022,
            num_vars: max_var,
            top: None,
            hard,
            soft,
        },
    };
    if let Some(top) = parsed.top {
        if top <= parsed.sum_soft() {
            return Err(Error::Format(format!(
                "top {top} does not exceed the total soft weight {}",
                parsed.sum_soft()
            )));
        }
    }
    Ok(parsed)
}
