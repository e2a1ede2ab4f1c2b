//! Plain-text instance format shared by all command line tools.
//!
//! ```text
//! # optional comments
//! N M
//! i j v
//! ...
//! ```
//!
//! The header gives the variable count `N` and the number of term lines `M`.
//! Each term line holds two 1-based variable indices and a coefficient;
//! `i == j` denotes a linear term, `i != j` a quadratic one.  Whether the
//! numbers are read as Ising fields/couplings or as QUBO coefficients is
//! decided by the caller, not by the file.

use thiserror::Error;

use crate::model::{IsingInstance, ModelError, QuboInstance};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: expected `{expected}`, got `{got}`")]
    Malformed {
        line: usize,
        expected: &'static str,
        got: String,
    },
    #[error("line {line}: could not parse `{token}` as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: variable index {index} outside 1..={n}")]
    BadIndex { line: usize, index: usize, n: usize },
    #[error("line {line}: duplicate term for ({i}, {j})")]
    DuplicateTerm { line: usize, i: usize, j: usize },
    #[error("header declares {declared} terms but the file holds {found}")]
    TermCountMismatch { declared: usize, found: usize },
    #[error("missing header line")]
    MissingHeader,
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct Term {
    line: usize,
    i: usize,
    j: usize,
    value: f64,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(idx, raw)| {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((idx + 1, trimmed))
        }
    })
}

fn parse_header(line: usize, text: &str) -> Result<(usize, usize), ParseError> {
    let mut parts = text.split_whitespace();
    let malformed = || ParseError::Malformed {
        line,
        expected: "N M",
        got: text.to_string(),
    };
    let n = parts
        .next()
        .ok_or_else(malformed)?
        .parse::<usize>()
        .map_err(|_| malformed())?;
    let m = parts
        .next()
        .ok_or_else(malformed)?
        .parse::<usize>()
        .map_err(|_| malformed())?;
    if parts.next().is_some() {
        return Err(malformed());
    }
    Ok((n, m))
}

fn parse_term(line: usize, text: &str, n: usize) -> Result<Term, ParseError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(ParseError::Malformed {
            line,
            expected: "i j v",
            got: text.to_string(),
        });
    }
    let index = |token: &str| -> Result<usize, ParseError> {
        let raw = token.parse::<usize>().map_err(|_| ParseError::BadNumber {
            line,
            token: token.to_string(),
        })?;
        if raw == 0 || raw > n {
            return Err(ParseError::BadIndex { line, index: raw, n });
        }
        Ok(raw - 1)
    };
    let i = index(parts[0])?;
    let j = index(parts[1])?;
    let value = parts[2].parse::<f64>().map_err(|_| ParseError::BadNumber {
        line,
        token: parts[2].to_string(),
    })?;
    Ok(Term { line, i, j, value })
}

fn parse_terms(text: &str) -> Result<(usize, Vec<Term>), ParseError> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or(ParseError::MissingHeader)?;
    let (n, m) = parse_header(header_line, header)?;
    let mut terms = Vec::with_capacity(m);
    for (line, body) in lines {
        terms.push(parse_term(line, body, n)?);
    }
    if terms.len() != m {
        return Err(ParseError::TermCountMismatch {
            declared: m,
            found: terms.len(),
        });
    }
    Ok((n, terms))
}

/// Read the text as an Ising instance (`i == j` lines are fields `h_i`).
pub fn parse_ising(text: &str) -> Result<IsingInstance, ParseError> {
    let (n, terms) = parse_terms(text)?;
    let mut inst = IsingInstance::new(n)?;
    for t in &terms {
        if t.i == t.j {
            if inst.h.contains_key(&t.i) {
                return Err(ParseError::DuplicateTerm {
                    line: t.line,
                    i: t.i + 1,
                    j: t.j + 1,
                });
            }
            inst.set_field(t.i, t.value)?;
        } else {
            inst.set_coupling(t.i, t.j, t.value).map_err(|e| match e {
                ModelError::DuplicateEdge(a, b) => ParseError::DuplicateTerm {
                    line: t.line,
                    i: a + 1,
                    j: b + 1,
                },
                other => ParseError::Model(other),
            })?;
        }
    }
    Ok(inst)
}

/// Read the text as a QUBO instance (`i == j` lines are linear terms `b_i`).
pub fn parse_qubo(text: &str) -> Result<QuboInstance, ParseError> {
    let (n, terms) = parse_terms(text)?;
    let mut inst = QuboInstance::new(n)?;
    for t in &terms {
        if t.i == t.j {
            if inst.linear.contains_key(&t.i) {
                return Err(ParseError::DuplicateTerm {
                    line: t.line,
                    i: t.i + 1,
                    j: t.j + 1,
                });
            }
            inst.set_linear(t.i, t.value)?;
        } else {
            inst.set_quadratic(t.i, t.j, t.value).map_err(|e| match e {
                ModelError::DuplicateEdge(a, b) => ParseError::DuplicateTerm {
                    line: t.line,
                    i: a + 1,
                    j: b + 1,
                },
                other => ParseError::Model(other),
            })?;
        }
    }
    Ok(inst)
}

/// Render an Ising instance in the shared text format.
pub fn write_ising(inst: &IsingInstance) -> String {
    let mut out = String::new();
    let m = inst.h.len() + inst.j.len();
    out.push_str(&format!("{} {}\n", inst.n, m));
    for (&i, &h) in &inst.h {
        out.push_str(&format!("{} {} {}\n", i + 1, i + 1, h));
    }
    for (&(i, j), &jij) in &inst.j {
        out.push_str(&format!("{} {} {}\n", i + 1, j + 1, jij));
    }
    out
}

/// Render a QUBO instance in the shared text format.
///
/// The additive offset is not part of the format; callers that need it must
/// carry it separately.
pub fn write_qubo(inst: &QuboInstance) -> String {
    let mut out = String::new();
    let m = inst.linear.len() + inst.quadratic.len();
    out.push_str(&format!("{} {}\n", inst.n, m));
    for (&i, &b) in &inst.linear {
        out.push_str(&format!("{} {} {}\n", i + 1, i + 1, b));
    }
    for (&(i, j), &a) in &inst.quadratic {
        out.push_str(&format!("{} {} {}\n", i + 1, j + 1, a));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_SPIN: &str = "\
# three-spin example
3 5
1 1 1.0
2 2 -1.0
3 3 2.0
1 2 3.0
2 3 -2.0
";

    #[test]
    fn parses_the_example_as_ising() {
        let inst = parse_ising(THREE_SPIN).unwrap();
        assert_eq!(inst.n, 3);
        assert_eq!(inst.field(0), 1.0);
        assert_eq!(inst.field(1), -1.0);
        assert_eq!(inst.field(2), 2.0);
        assert_eq!(inst.coupling(0, 1), 3.0);
        assert_eq!(inst.coupling(1, 2), -2.0);
    }

    #[test]
    fn parses_the_example_as_qubo() {
        let inst = parse_qubo(THREE_SPIN).unwrap();
        assert_eq!(inst.linear_coeff(2), 2.0);
        assert_eq!(inst.quadratic_coeff(0, 1), 3.0);
        assert_eq!(inst.offset, 0.0);
    }

    #[test]
    fn round_trips_through_the_writer() {
        let inst = parse_ising(THREE_SPIN).unwrap();
        let again = parse_ising(&write_ising(&inst)).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(matches!(
            parse_ising("three five\n"),
            Err(ParseError::Malformed { line: 1, .. })
        ));
        assert_eq!(parse_ising("# only comments\n"), Err(ParseError::MissingHeader));
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = parse_ising("2 1\n1 3 0.5\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::BadIndex {
                line: 2,
                index: 3,
                n: 2
            }
        );
    }

    #[test]
    fn rejects_zero_index() {
        let err = parse_ising("2 1\n0 1 0.5\n").unwrap_err();
        assert!(matches!(err, ParseError::BadIndex { index: 0, .. }));
    }

    #[test]
    fn rejects_term_count_mismatch() {
        let err = parse_ising("2 2\n1 1 0.5\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::TermCountMismatch {
                declared: 2,
                found: 1
            }
        );
    }

    #[test]
    fn rejects_duplicate_terms() {
        let err = parse_ising("2 2\n1 2 0.5\n2 1 0.25\n").unwrap_err();
        assert_eq!(err, ParseError::DuplicateTerm { line: 3, i: 1, j: 2 });
        let err = parse_qubo("2 2\n1 1 0.5\n1 1 0.25\n").unwrap_err();
        assert_eq!(err, ParseError::DuplicateTerm { line: 3, i: 1, j: 1 });
    }

    #[test]
    fn rejects_bad_number() {
        let err = parse_qubo("2 1\n1 2 abc\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::BadNumber {
                line: 2,
                token: "abc".to_string()
            }
        );
    }
}
