use num_bigint::BigUint;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::election::{content_lines, CandidateId, ParseError, ParseErrorKind, Roster};

use super::PreroundError;

/// Preround pairing: disjoint pairs plus a bye exactly when the roster is odd.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Schedule {
    pairs: Vec<(CandidateId, CandidateId)>,
    bye: Option<CandidateId>,
}

impl Schedule {
    /// Validates that the pairs and bye cover `0..m` exactly once.
    pub fn new(
        pairs: Vec<(CandidateId, CandidateId)>,
        bye: Option<CandidateId>,
        m: usize,
    ) -> Result<Self, PreroundError> {
        let mut seen = vec![false; m];
        let mut mark = |c: CandidateId| -> Result<(), PreroundError> {
            if c.0 >= m {
                return Err(PreroundError::MalformedSchedule(format!(
                    "candidate {} outside roster of {m}",
                    c.0
                )));
            }
            if std::mem::replace(&mut seen[c.0], true) {
                return Err(PreroundError::MalformedSchedule(format!(
                    "candidate {} scheduled twice",
                    c.0
                )));
            }
            Ok(())
        };
        for &(a, b) in &pairs {
            mark(a)?;
            mark(b)?;
        }
        if let Some(x) = bye {
            mark(x)?;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(PreroundError::MalformedSchedule(format!(
                "candidate {missing} not scheduled"
            )));
        }
        if bye.is_some() != (m % 2 == 1) {
            return Err(PreroundError::MalformedSchedule(
                "a bye is required exactly when the roster is odd".into(),
            ));
        }
        Ok(Schedule { pairs, bye })
    }

    pub fn pairs(&self) -> &[(CandidateId, CandidateId)] {
        &self.pairs
    }

    pub fn bye(&self) -> Option<CandidateId> {
        self.bye
    }

    pub fn num_candidates(&self) -> usize {
        2 * self.pairs.len() + usize::from(self.bye.is_some())
    }

    pub fn to_text(&self, roster: &Roster) -> String {
        let mut out = String::new();
        for &(a, b) in &self.pairs {
            out.push_str(&format!("pair {} {}\n", roster.name(a), roster.name(b)));
        }
        if let Some(x) = self.bye {
            out.push_str(&format!("bye {}\n", roster.name(x)));
        }
        out
    }

    pub fn parse(text: &str, roster: &Roster) -> Result<Self, ParseError> {
        let mut pairs = Vec::new();
        let mut bye = None;
        let mut last = 1;
        for (lineno, line) in content_lines(text) {
            last = lineno;
            let words: Vec<&str> = line.split_whitespace().collect();
            let id = |n: &str| roster.lookup(n).map_err(|e| ParseError::new(lineno, e));
            match words.as_slice() {
                ["pair", a, b] => pairs.push((id(a)?, id(b)?)),
                ["bye", x] if bye.is_none() => bye = Some(id(x)?),
                ["bye", _] => {
                    return Err(ParseError::new(
                        lineno,
                        ParseErrorKind::Other("second bye".into()),
                    ))
                }
                _ => {
                    return Err(ParseError::new(
                        lineno,
                        ParseErrorKind::Other("expected `pair <a> <b>` or `bye <x>`".into()),
                    ))
                }
            }
        }
        Schedule::new(pairs, bye, roster.len())
            .map_err(|e| ParseError::new(last, ParseErrorKind::Other(e.to_string())))
    }
}

/// All schedules of `m` candidates. Odd rosters pick the bye first (in id
/// order); the rest is paired by matching the lowest unpaired candidate with
/// each later one in turn.
pub fn enumerate_schedules(m: usize) -> Result<Vec<Schedule>, PreroundError> {
    if m <= 1 {
        return Err(PreroundError::TooFewCandidates(m));
    }
    let mut out = Vec::new();
    let byes: Vec<Option<CandidateId>> = if m % 2 == 1 {
        (0..m).map(|i| Some(CandidateId(i))).collect()
    } else {
        vec![None]
    };
    for bye in byes {
        let rest: Vec<CandidateId> = (0..m).map(CandidateId).filter(|c| Some(*c) != bye).collect();
        let mut pairs = Vec::with_capacity(m / 2);
        pair_up(&rest, &mut pairs, &mut |pairs| {
            out.push(Schedule {
                pairs: pairs.to_vec(),
                bye,
            })
        });
    }
    Ok(out)
}

fn pair_up(
    rest: &[CandidateId],
    acc: &mut Vec<(CandidateId, CandidateId)>,
    emit: &mut impl FnMut(&[(CandidateId, CandidateId)]),
) {
    if rest.is_empty() {
        emit(acc);
        return;
    }
    let first = rest[0];
    for i in 1..rest.len() {
        acc.push((first, rest[i]));
        let remaining: Vec<CandidateId> = rest[1..]
            .iter()
            .enumerate()
            .filter(|(j, _)| *j + 1 != i)
            .map(|(_, c)| *c)
            .collect();
        pair_up(&remaining, acc, emit);
        acc.pop();
    }
}

/// Number of schedules: `(m-1)!!` for even `m`, `m * (m-2)!!` for odd `m`.
pub fn count_schedules(m: usize) -> Result<BigUint, PreroundError> {
    if m <= 1 {
        return Err(PreroundError::TooFewCandidates(m));
    }
    let even = m - m % 2;
    let mut count = BigUint::one();
    let mut f = even - 1;
    while f > 1 {
        count *= f;
        f -= 2;
    }
    if m % 2 == 1 {
        count *= m;
    }
    Ok(count)
}

/// A uniformly random schedule.
pub fn random_schedule<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Schedule {
    let mut ids: Vec<CandidateId> = (0..m).map(CandidateId).collect();
    ids.shuffle(rng);
    let bye = if m % 2 == 1 { ids.pop() } else { None };
    let pairs = ids.chunks(2).map(|p| (p[0], p[1])).collect();
    Schedule { pairs, bye }
}
