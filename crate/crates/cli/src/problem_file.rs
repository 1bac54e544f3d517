//! Line-oriented problem files.
//!
//! ```text
//! pasa-problem v1
//! n 2
//! m 4
//! A
//! 1 0
//! 0 1
//! -1 0
//! 0 -1
//! b
//! 1 1 0 0
//! objective quadratic
//! Q
//! 1 0
//! 0 1
//! c
//! -2 -2
//! x0
//! 3 3
//! ```
//!
//! `#` starts a comment; blank lines are ignored. `A` and `b` are omitted
//! when `m = 0`. `objective rosenbrock` takes no `Q`/`c` blocks.

use std::fmt::Write as _;

use pasa_core::{DenseMatrix, Objective, Polyhedron, QuadraticObjective, Rosenbrock};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// 1-based line number; 0 when the file ended early.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub enum ProblemObjective {
    Quadratic(QuadraticObjective),
    Rosenbrock(Rosenbrock),
}

impl Objective for ProblemObjective {
    fn dim(&self) -> usize {
        match self {
            Self::Quadratic(q) => q.dim(),
            Self::Rosenbrock(r) => r.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Quadratic(q) => q.value(x),
            Self::Rosenbrock(r) => r.value(x),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Quadratic(q) => q.gradient(x),
            Self::Rosenbrock(r) => r.gradient(x),
        }
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        match self {
            Self::Quadratic(q) => q.lipschitz_hint(),
            Self::Rosenbrock(r) => r.lipschitz_hint(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub poly: Polyhedron,
    pub objective: ProblemObjective,
    pub x0: Vec<f64>,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                self.last = i + 1;
                return Some((i + 1, body));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        self.next_content().ok_or_else(|| ParseError {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn keyword(&mut self, word: &str) -> Result<usize, ParseError> {
        let (line, body) = self.expect(&format!("`{word}`"))?;
        if body == word {
            Ok(line)
        } else {
            Err(err(line, format!("expected `{word}`, found `{body}`")))
        }
    }

    fn count(&mut self, key: &str) -> Result<usize, ParseError> {
        let (line, body) = self.expect(&format!("`{key} <int>`"))?;
        let mut parts = body.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(v), None) if k == key => v
                .parse()
                .map_err(|_| err(line, format!("`{key}` needs a nonnegative integer, found `{v}`"))),
            _ => Err(err(line, format!("expected `{key} <int>`, found `{body}`"))),
        }
    }

    fn row(&mut self, what: &str, len: usize) -> Result<Vec<f64>, ParseError> {
        let (line, body) = self.expect(what)?;
        let values = body
            .split_whitespace()
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(line, format!("{what}: `{t}` is not a finite decimal number"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != len {
            return Err(err(
                line,
                format!("{what}: expected {len} numbers, found {}", values.len()),
            ));
        }
        Ok(values)
    }

    fn rows(&mut self, what: &str, count: usize, len: usize) -> Result<Vec<Vec<f64>>, ParseError> {
        (0..count).map(|_| self.row(what, len)).collect()
    }
}

fn err(line: usize, message: String) -> ParseError {
    ParseError { line, message }
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let mut lines = Lines::new(text);
    let (line, header) = lines.expect("header `pasa-problem v1`")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["pasa-problem", "v1"] {
        return Err(err(
            line,
            format!("expected header `pasa-problem v1`, found `{header}`"),
        ));
    }
    let n = lines.count("n")?;
    if n == 0 {
        return Err(err(lines.last, "n must be at least 1".into()));
    }
    let m = lines.count("m")?;

    let poly = if m == 0 {
        Polyhedron::unconstrained(n)
    } else {
        lines.keyword("A")?;
        let a = lines.rows("row of A", m, n)?;
        let b_line = lines.keyword("b")?;
        let b = lines.row("b", m)?;
        let a = DenseMatrix::from_rows(&a, n).map_err(|e| err(b_line, e.to_string()))?;
        Polyhedron::new(a, b).map_err(|e| err(b_line, e.to_string()))?
    };

    let (line, body) = lines.expect("`objective quadratic|rosenbrock`")?;
    let kind = match body.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["objective", kind] => kind.to_string(),
        _ => return Err(err(line, format!("expected `objective <kind>`, found `{body}`"))),
    };
    let objective = match kind.as_str() {
        "quadratic" => {
            let q_line = lines.keyword("Q")?;
            let q = lines.rows("row of Q", n, n)?;
            lines.keyword("c")?;
            let c = lines.row("c", n)?;
            let q = DenseMatrix::from_rows(&q, n).map_err(|e| err(q_line, e.to_string()))?;
            let quad = QuadraticObjective::new(q, c).map_err(|e| err(q_line, e.to_string()))?;
            ProblemObjective::Quadratic(quad)
        }
        "rosenbrock" => ProblemObjective::Rosenbrock(Rosenbrock::new(n).map_err(|e| err(line, e.to_string()))?),
        other => return Err(err(line, format!("unknown objective `{other}`"))),
    };

    lines.keyword("x0")?;
    let x0 = lines.row("x0", n)?;
    if let Some((line, body)) = lines.next_content() {
        return Err(err(line, format!("unexpected trailing content `{body}`")));
    }
    Ok(ProblemFile { poly, objective, x0 })
}

fn push_row(out: &mut String, row: &[f64]) {
    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
    out.push_str(&cells.join(" "));
    out.push('\n');
}

/// Writes `problem` in the file format. Numbers use the shortest decimal
/// form that parses back to the same `f64`.
pub fn emit_problem(problem: &ProblemFile) -> String {
    let (n, m) = (problem.poly.dim(), problem.poly.n_constraints());
    let mut out = String::from("pasa-problem v1\n");
    let _ = writeln!(out, "n {n}\nm {m}");
    if m > 0 {
        out.push_str("A\n");
        for i in 0..m {
            push_row(&mut out, problem.poly.a().row(i));
        }
        out.push_str("b\n");
        push_row(&mut out, problem.poly.b());
    }
    match &problem.objective {
        ProblemObjective::Quadratic(q) => {
            out.push_str("objective quadratic\nQ\n");
            for i in 0..n {
                push_row(&mut out, q.q().row(i));
            }
            out.push_str("c\n");
            push_row(&mut out, q.c());
        }
        ProblemObjective::Rosenbrock(_) => out.push_str("objective rosenbrock\n"),
    }
    out.push_str("x0\n");
    push_row(&mut out, &problem.x0);
    out
}
