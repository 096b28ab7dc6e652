//! MaxSAT solver output in the evaluation conventions: `s` status line,
//! `o` cost lines (the last one wins) and `v` model lines, either as
//! signed literals or as a 0/1 bitstring.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverStatus {
    Optimum,
    Sat,
    Unsat,
    Unknown,
}

impl SolverStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolverStatus::Optimum => "optimum",
            SolverStatus::Sat => "sat",
            SolverStatus::Unsat => "unsat",
            SolverStatus::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverOutput {
    pub status: SolverStatus,
    /// Signed DIMACS literals.
    pub model: Vec<i32>,
    pub cost: Option<u64>,
}

impl SolverOutput {
    pub fn unknown() -> Self {
        SolverOutput {
            status: SolverStatus::Unknown,
            model: Vec::new(),
            cost: None,
        }
    }

    /// Assignment indexed by variable − 1; variables the model omits are false.
    pub fn assignment(&self, num_vars: u32) -> Vec<bool> {
        let mut a = vec![false; num_vars as usize];
        for &l in &self.model {
            let v = l.unsigned_abs() as usize;
            if v >= 1 && v <= a.len() {
                a[v - 1] = l > 0;
            }
        }
        a
    }
}

fn is_bitstring(tok: &str) -> bool {
    tok != "0" && tok.bytes().all(|b| b == b'0' || b == b'1')
}

pub fn parse_solver_output(text: &str) -> SolverOutput {
    let mut status = None;
    let mut cost = None;
    let mut model = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(match rest.trim() {
                "OPTIMUM FOUND" => SolverStatus::Optimum,
                "SATISFIABLE" => SolverStatus::Sat,
                "UNSATISFIABLE" => SolverStatus::Unsat,
                _ => SolverStatus::Unknown,
            });
        } else if let Some(rest) = line.strip_prefix("o ") {
            if let Ok(c) = rest.trim().parse() {
                cost = Some(c);
            }
        } else if let Some(rest) = line.strip_prefix("v ") {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if let [bits] = tokens.as_slice() {
                if is_bitstring(bits) {
                    model = bits
                        .bytes()
                        .enumerate()
                        .map(|(i, b)| {
                            if b == b'1' {
                                i as i32 + 1
                            } else {
                                -(i as i32 + 1)
                            }
                        })
                        .collect();
                    continue;
                }
            }
            model.extend(
                tokens
                    .iter()
                    .filter_map(|t| t.parse::<i32>().ok())
                    .filter(|&v| v != 0),
            );
        }
    }
    match status {
        None => SolverOutput::unknown(),
        Some(status) => SolverOutput {
            status,
            model: if status == SolverStatus::Unsat {
                Vec::new()
            } else {
                model
            },
            cost: if status == SolverStatus::Unsat {
                None
            } else {
                cost
            },
        },
    }
}
