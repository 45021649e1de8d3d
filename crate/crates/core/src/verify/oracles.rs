use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::reductions::{BipartiteGraph, CnfFormula, FormulaError};

pub const SAT_MAX_VARS: usize = 24;
pub const STOCHASTIC_MAX_VARS: usize = 20;
pub const MATCHING_MAX_K: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{got} exceeds the brute-force bound of {bound}")]
    TooLarge { got: usize, bound: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// First satisfying assignment, enumerating with variable 1 most
/// significant and `true` before `false`.
pub fn sat_solve(formula: &CnfFormula) -> Result<Option<Vec<bool>>, OracleError> {
    let n = formula.num_vars();
    if n > SAT_MAX_VARS {
        return Err(OracleError::TooLarge {
            got: n,
            bound: SAT_MAX_VARS,
        });
    }
    let mut assignment = vec![true; n];
    for idx in 0u64..1 << n {
        for (v, a) in assignment.iter_mut().enumerate() {
            *a = idx >> (n - 1 - v) & 1 == 0;
        }
        if formula.is_satisfied_by(&assignment) {
            return Ok(Some(assignment));
        }
    }
    Ok(None)
}

/// Value of the game where nature draws `y_i` uniformly, then the maximizer
/// sets `x_i`, for `i` in index order; satisfaction pays 1.
pub fn stochastic_sat_value(formula: &CnfFormula) -> Result<BigRational, OracleError> {
    let (ys, xs) = formula.partition()?;
    if formula.num_vars() > STOCHASTIC_MAX_VARS {
        return Err(OracleError::TooLarge {
            got: formula.num_vars(),
            bound: STOCHASTIC_MAX_VARS,
        });
    }
    fn value(f: &CnfFormula, ys: &[usize], xs: &[usize], i: usize, a: &mut Vec<bool>) -> BigRational {
        if i == ys.len() {
            return if f.is_satisfied_by(a) {
                BigRational::one()
            } else {
                BigRational::zero()
            };
        }
        let mut total = BigRational::zero();
        for y in [false, true] {
            a[ys[i]] = y;
            let best = [false, true]
                .into_iter()
                .map(|x| {
                    a[xs[i]] = x;
                    value(f, ys, xs, i + 1, a)
                })
                .max()
                .unwrap();
            total += best;
        }
        total / BigRational::from_integer(2.into())
    }
    let mut a = vec![false; formula.num_vars()];
    Ok(value(formula, &ys, &xs, 0, &mut a))
}

/// Perfect matchings by dynamic programming over subsets of the right side.
pub fn count_perfect_matchings(graph: &BipartiteGraph) -> Result<BigUint, OracleError> {
    let k = graph.k();
    if k > MATCHING_MAX_K {
        return Err(OracleError::TooLarge {
            got: k,
            bound: MATCHING_MAX_K,
        });
    }
    // ways[mask]: matchings of the first popcount(mask) left vertices onto mask.
    let mut ways = vec![BigUint::zero(); 1 << k];
    ways[0] = BigUint::one();
    for mask in 0usize..1 << k {
        if ways[mask].is_zero() {
            continue;
        }
        let i = mask.count_ones() as usize + 1;
        if i > k {
            continue;
        }
        for j in 0..k {
            if mask >> j & 1 == 0 && graph.has_edge(i, k + 1 + j) {
                let add = ways[mask].clone();
                ways[mask | 1 << j] += add;
            }
        }
    }
    Ok(ways[(1 << k) - 1].clone())
}
