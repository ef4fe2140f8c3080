//! DIMACS CNF reading and writing.

use std::fmt::Write as _;

use super::{Clause, Formula, Literal};
use crate::error::{Error, Result};

/// Reader behaviour.
#[derive(Clone, Copy, Debug)]
pub struct ReadOptions {
    /// When set, every clause must have exactly this width and the formula
    /// is built with that width. Otherwise the formula is mixed-width.
    pub width: Option<usize>,
    /// Reject clauses that mention a variable twice. When unset, repeated
    /// identical literals are merged (a complementary pair is still an error).
    pub strict_variables: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            width: None,
            strict_variables: true,
        }
    }
}

impl ReadOptions {
    pub fn strict(width: usize) -> Self {
        ReadOptions {
            width: Some(width),
            strict_variables: true,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses DIMACS CNF text.
pub fn read_dimacs(text: &str, options: &ReadOptions) -> Result<Formula> {
    let mut header: Option<(usize, usize)> = None;
    let mut formula: Option<Formula> = None;
    let mut pending: Vec<(usize, i64)> = Vec::new();
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(parse_err(line_no, "duplicate problem line"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(parse_err(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let n: usize = parts[2]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad variable count `{}`", parts[2])))?;
            let m: usize = parts[3]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad clause count `{}`", parts[3])))?;
            formula = Some(match options.width {
                Some(k) => Formula::new(n, k).map_err(|e| parse_err(line_no, e.to_string()))?,
                None => Formula::mixed(n),
            });
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(parse_err(line_no, "clause before problem line"));
        };
        let f = formula.as_mut().expect("set with header");
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad literal `{tok}`")))?;
            if lit == 0 {
                finish_clause(f, &mut pending, options, line_no)?;
                continue;
            }
            if lit.unsigned_abs() as usize > n {
                return Err(parse_err(
                    line_no,
                    format!("literal {lit} exceeds declared {n} variables"),
                ));
            }
            pending.push((line_no, lit));
        }
    }
    if !pending.is_empty() {
        // Tolerate a missing terminator on the final clause.
        let f = formula.as_mut().expect("pending implies header");
        finish_clause(f, &mut pending, options, last_line)?;
    }
    let (_, m) = header.ok_or_else(|| parse_err(last_line.max(1), "missing problem line"))?;
    let f = formula.expect("set with header");
    if f.len() != m {
        return Err(parse_err(
            last_line,
            format!("header declares {m} clauses, found {}", f.len()),
        ));
    }
    Ok(f)
}

fn finish_clause(
    formula: &mut Formula,
    pending: &mut Vec<(usize, i64)>,
    options: &ReadOptions,
    line_no: usize,
) -> Result<()> {
    let line = pending.first().map(|p| p.0).unwrap_or(line_no);
    let mut lits: Vec<Literal> = Vec::with_capacity(pending.len());
    for &(_, l) in pending.iter() {
        let lit = Literal::from_dimacs(l).map_err(|e| parse_err(line, e.to_string()))?;
        if !options.strict_variables && lits.contains(&lit) {
            continue;
        }
        lits.push(lit);
    }
    pending.clear();
    if lits.is_empty() {
        return Err(parse_err(line, "empty clause"));
    }
    let clause = Clause::new(lits).map_err(|e| parse_err(line, e.to_string()))?;
    formula
        .push(clause)
        .map_err(|e| parse_err(line, e.to_string()))
}

/// Writes `formula` as DIMACS CNF with a `p cnf n m` header.
pub fn write_dimacs(formula: &Formula) -> String {
    let mut out = String::new();
    writeln!(out, "p cnf {} {}", formula.num_vars(), formula.len()).unwrap();
    for c in formula.clauses() {
        for l in c.literals() {
            write!(out, "{} ", l.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}
