use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::election::{ParseError, ParseErrorKind};

/// A signed variable; `var` is 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal {
            var,
            positive: false,
        }
    }

    /// DIMACS encoding: 1-based, negative for negated literals.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }

    pub fn is_true_under(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.positive { '+' } else { '-' }, self.var + 1)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("clause {0} is empty")]
    EmptyClause(usize),
    #[error("clause {clause} contains both polarities of variable {var}")]
    Tautology { clause: usize, var: usize },
    #[error("clause {clause} repeats literal {literal}")]
    DuplicateLiteral { clause: usize, literal: Literal },
    #[error("variable {0} is outside the declared range")]
    VariableOutOfRange(usize),
    #[error("x/y split {split} does not halve {vars} variables")]
    UnbalancedPartition { split: usize, vars: usize },
    #[error("formula has no x/y partition")]
    NoPartition,
}

/// A CNF formula with an optional partition of its variables: variables
/// `0..y_count` are the randomly drawn ones (Y), the rest are chosen (X).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<Literal>>,
    y_count: Option<usize>,
}

impl CnfFormula {
    pub fn new(
        num_vars: usize,
        clauses: Vec<Vec<Literal>>,
        y_count: Option<usize>,
    ) -> Result<Self, FormulaError> {
        for (i, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(FormulaError::EmptyClause(i + 1));
            }
            for (j, lit) in clause.iter().enumerate() {
                if lit.var >= num_vars {
                    return Err(FormulaError::VariableOutOfRange(lit.var + 1));
                }
                for other in &clause[..j] {
                    if other == lit {
                        return Err(FormulaError::DuplicateLiteral {
                            clause: i + 1,
                            literal: *lit,
                        });
                    }
                    if other.var == lit.var {
                        return Err(FormulaError::Tautology {
                            clause: i + 1,
                            var: lit.var + 1,
                        });
                    }
                }
            }
        }
        if let Some(split) = y_count {
            if 2 * split != num_vars {
                return Err(FormulaError::UnbalancedPartition {
                    split,
                    vars: num_vars,
                });
            }
        }
        Ok(CnfFormula {
            num_vars,
            clauses,
            y_count,
        })
    }

    /// Builds from DIMACS-style signed integers.
    pub fn from_ints(num_vars: usize, clauses: &[&[i64]], y_count: Option<usize>) -> Result<Self, FormulaError> {
        let clauses = clauses
            .iter()
            .map(|c| c.iter().map(|&l| int_literal(l)).collect())
            .collect();
        CnfFormula::new(num_vars, clauses, y_count)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    pub fn y_count(&self) -> Option<usize> {
        self.y_count
    }

    pub fn with_partition(mut self, y_count: usize) -> Result<Self, FormulaError> {
        if 2 * y_count != self.num_vars {
            return Err(FormulaError::UnbalancedPartition {
                split: y_count,
                vars: self.num_vars,
            });
        }
        self.y_count = Some(y_count);
        Ok(self)
    }

    /// `(y_vars, x_vars)`, paired by index.
    pub fn partition(&self) -> Result<(Vec<usize>, Vec<usize>), FormulaError> {
        let n = self.y_count.ok_or(FormulaError::NoPartition)?;
        Ok(((0..n).collect(), (n..2 * n).collect()))
    }

    pub fn is_y(&self, var: usize) -> bool {
        self.y_count.is_some_and(|n| var < n)
    }

    pub fn clause_contains(&self, clause: usize, lit: Literal) -> bool {
        self.clauses[clause].contains(&lit)
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.is_true_under(assignment)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        if let Some(n) = self.y_count {
            out.push_str(&format!("c xy-split {n}\n"));
        }
        out.push_str(&format!("p cnf {} {}\n", self.num_vars, self.clauses.len()));
        for clause in &self.clauses {
            for l in clause {
                out.push_str(&format!("{} ", l.to_dimacs()));
            }
            out.push_str("0\n");
        }
        out
    }

    /// Parses DIMACS `cnf`. A comment line `c xy-split <n>` marks variables
    /// `1..=n` as Y and the rest as X.
    pub fn parse_dimacs(text: &str) -> Result<Self, ParseError> {
        let err = |line: usize, msg: String| ParseError::new(line, ParseErrorKind::Other(msg));
        let mut header: Option<(usize, usize)> = None;
        let mut split = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        let mut last = 0;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            last = lineno;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            if let Some(comment) = line.strip_prefix('c') {
                if comment.is_empty() || comment.starts_with(char::is_whitespace) {
                    let words: Vec<&str> = comment.split_whitespace().collect();
                    if let ["xy-split", n] = words.as_slice() {
                        split = Some(n.parse::<usize>().map_err(|_| err(lineno, "bad xy-split".into()))?);
                    }
                    continue;
                }
            }
            if line.starts_with('p') {
                let words: Vec<&str> = line.split_whitespace().collect();
                match words.as_slice() {
                    ["p", "cnf", v, c] => {
                        let v = v.parse().map_err(|_| err(lineno, "bad variable count".into()))?;
                        let c = c.parse().map_err(|_| err(lineno, "bad clause count".into()))?;
                        header = Some((v, c));
                    }
                    _ => return Err(err(lineno, "expected `p cnf <vars> <clauses>`".into())),
                }
                continue;
            }
            let (vars, _) = header.ok_or_else(|| err(lineno, "clause before `p cnf` header".into()))?;
            for tok in line.split_whitespace() {
                let lit: i64 = tok
                    .parse()
                    .map_err(|_| err(lineno, format!("bad literal {tok:?}")))?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    if lit.unsigned_abs() as usize > vars {
                        return Err(err(lineno, format!("literal {lit} exceeds {vars} variables")));
                    }
                    current.push(int_literal(lit));
                }
            }
        }
        if !current.is_empty() {
            clauses.push(current);
        }
        let (vars, count) = header.ok_or_else(|| err(last.max(1), "missing `p cnf` header".into()))?;
        if count != clauses.len() {
            return Err(err(
                last,
                format!("header declares {count} clauses, found {}", clauses.len()),
            ));
        }
        CnfFormula::new(vars, clauses, split).map_err(|e| err(last, e.to_string()))
    }

    /// A random formula with distinct-variable clauses of width `1..=max_width`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        num_vars: usize,
        num_clauses: usize,
        max_width: usize,
        y_count: Option<usize>,
    ) -> Self {
        let clauses = (0..num_clauses)
            .map(|_| {
                let width = rng.random_range(1..=max_width.min(num_vars));
                let mut vars = sample(rng, num_vars, width).into_vec();
                vars.sort_unstable();
                vars.into_iter()
                    .map(|var| Literal {
                        var,
                        positive: rng.random_bool(0.5),
                    })
                    .collect()
            })
            .collect();
        CnfFormula::new(num_vars, clauses, y_count).expect("distinct variables per clause")
    }
}

fn int_literal(l: i64) -> Literal {
    Literal {
        var: l.unsigned_abs() as usize - 1,
        positive: l > 0,
    }
}
