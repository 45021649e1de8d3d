//! Brute-force oracles and checkers for the properties the reductions rely on.

mod assignment;
mod ipre;
mod oracles;
mod rpre;

use std::fmt;

use itertools::Itertools;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::election::{
    pairwise_tally, restrict_profile, Ballot, CandidateId, Profile, Roster,
};
use crate::preround::rpre_win_probability;
use crate::protocols::{winner, ProtocolId, TieBreak};

pub use assignment::{check_dpre_properties, check_ipre_properties};
pub use ipre::{cross_check_ipre, cross_check_ipre_instance, IpreCrossCheck};
pub use oracles::{count_perfect_matchings, sat_solve, stochastic_sat_value, OracleError};
pub use rpre::{check_rpre_properties, cross_check_rpre, cross_check_rpre_instance};

/// Largest ballot space searched exhaustively under [`CheckMode::Auto`].
pub const EXHAUSTIVE_BALLOT_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    /// Exhaustive when the ballot space is small enough, else the check's
    /// default sample count.
    Auto,
    Exhaustive,
    Sampled(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub mode: CheckMode,
    pub rng_seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            mode: CheckMode::Auto,
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropertyId {
    P1a,
    P1b,
    P2a,
    P2b,
    P2c,
    P2d,
    P3a,
    P3b,
    P3c,
    /// RPRE win probability against the matching count.
    Probability,
    /// IPRE game value against the stochastic SAT value.
    Value,
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PropertyId::P1a => "1a",
            PropertyId::P1b => "1b",
            PropertyId::P2a => "2a",
            PropertyId::P2b => "2b",
            PropertyId::P2c => "2c",
            PropertyId::P2d => "2d",
            PropertyId::P3a => "3a",
            PropertyId::P3b => "3b",
            PropertyId::P3c => "3c",
            PropertyId::Probability => "probability",
            PropertyId::Value => "value",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Tally-only or fully enumerated.
    Exhaustive,
    Sampled { n: usize, seed: u64 },
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coverage::Exhaustive => f.write_str("exhaustive"),
            Coverage::Sampled { n, seed } => write!(f, "sampled n={n} seed={seed}"),
        }
    }
}

impl Coverage {
    fn merge(self, other: Coverage) -> Coverage {
        match (self, other) {
            (Coverage::Exhaustive, c) | (c, Coverage::Exhaustive) => c,
            (Coverage::Sampled { n, seed }, Coverage::Sampled { n: n2, .. }) => Coverage::Sampled {
                n: n.max(n2),
                seed,
            },
        }
    }
}

/// Pairwise requirement on `margin(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Requirement {
    Tied,
    AtLeast(i64),
    AtMost(i64),
}

impl Requirement {
    pub fn holds(self, margin: i64) -> bool {
        match self {
            Requirement::Tied => margin == 0,
            Requirement::AtLeast(x) => margin >= x,
            Requirement::AtMost(x) => margin <= x,
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Requirement::Tied => f.write_str("= 0"),
            Requirement::AtLeast(x) => write!(f, ">= {x}"),
            Requirement::AtMost(x) => write!(f, "<= {x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Counterexample {
    /// `p`'s fate over `survivors` (plus `extra`) contradicts the prediction.
    Election {
        p: CandidateId,
        survivors: Vec<CandidateId>,
        extra: Option<Ballot>,
        winner: CandidateId,
        p_should_win: bool,
    },
    Pairwise {
        a: CandidateId,
        b: CandidateId,
        /// 1-based variable owning the pair, when there is one.
        variable: Option<usize>,
        extra: Option<Ballot>,
        margin: i64,
        requirement: Requirement,
    },
    Probability {
        p: CandidateId,
        extra: Option<Ballot>,
        observed: BigRational,
        expected: BigRational,
    },
    GameValue {
        tiebreak: Vec<CandidateId>,
        completion: Ballot,
        observed: BigRational,
        expected: BigRational,
    },
}

impl Counterexample {
    /// Re-runs the failing computation through an independent route
    /// (materialized profiles). `Some(true)` when the failure reproduces;
    /// `None` for game values, which need the full instance.
    pub fn replay(&self, profile: &Profile, protocol: ProtocolId, tiebreak: &TieBreak) -> Option<bool> {
        let with = |extra: &Option<Ballot>| match extra {
            Some(b) => profile.with_ballot(b.clone()),
            None => profile.clone(),
        };
        match self {
            Counterexample::Election {
                p,
                survivors,
                extra,
                winner: w,
                p_should_win,
            } => {
                let full = with(extra);
                let set = crate::election::CandidateSet::from_ids(full.num_candidates(), survivors.iter().copied());
                let restricted = restrict_profile(&full, &set).ok()?;
                let tb = tiebreak.restricted(&restricted.origin);
                let local = winner(protocol, &restricted.profile, &tb);
                let actual = restricted.original(local);
                Some(actual == *w && (actual == *p) != *p_should_win)
            }
            Counterexample::Pairwise {
                a,
                b,
                extra,
                margin,
                requirement,
                ..
            } => {
                let m = pairwise_tally(&with(extra)).margin(*a, *b);
                Some(m == *margin && !requirement.holds(m))
            }
            Counterexample::Probability {
                p,
                extra,
                observed,
                expected,
            } => {
                let prob = rpre_win_probability(protocol, &with(extra), *p, tiebreak).ok()?;
                Some(prob == *observed && prob != *expected)
            }
            Counterexample::GameValue { .. } => None,
        }
    }

    /// The election to dump: the profile with the extra ballot, restricted to
    /// the survivors for election counterexamples.
    pub fn election(&self, profile: &Profile) -> Profile {
        let (extra, survivors) = match self {
            Counterexample::Election {
                extra, survivors, ..
            } => (extra, Some(survivors)),
            Counterexample::Pairwise { extra, .. } | Counterexample::Probability { extra, .. } => {
                (extra, None)
            }
            Counterexample::GameValue { .. } => (&None, None),
        };
        let full = match extra {
            Some(b) => profile.with_ballot(b.clone()),
            None => profile.clone(),
        };
        match survivors {
            Some(s) => {
                let set = crate::election::CandidateSet::from_ids(full.num_candidates(), s.iter().copied());
                restrict_profile(&full, &set).map(|r| r.profile).unwrap_or(full)
            }
            None => full,
        }
    }

    pub fn describe(&self, roster: &Roster) -> String {
        let ballot = |b: &Option<Ballot>| match b {
            Some(b) => format!("extra ballot: {}", b.display(roster)),
            None => "no extra ballot".to_string(),
        };
        match self {
            Counterexample::Election {
                p,
                survivors,
                extra,
                winner,
                p_should_win,
            } => format!(
                "survivors: {}\n{}\nwinner: {}\nexpected: {} {}\n",
                roster.format_ids(survivors),
                ballot(extra),
                roster.name(*winner),
                roster.name(*p),
                if *p_should_win { "wins" } else { "loses" }
            ),
            Counterexample::Pairwise {
                a,
                b,
                variable,
                extra,
                margin,
                requirement,
            } => format!(
                "pair: {} {}\n{}{}\nmargin: {margin}\nrequired: {requirement}\n",
                roster.name(*a),
                roster.name(*b),
                variable.map(|v| format!("variable: {v}\n")).unwrap_or_default(),
                ballot(extra),
            ),
            Counterexample::Probability {
                p,
                extra,
                observed,
                expected,
            } => format!(
                "candidate: {}\n{}\nobserved: {observed}\nexpected: {expected}\n",
                roster.name(*p),
                ballot(extra)
            ),
            Counterexample::GameValue {
                tiebreak,
                completion,
                observed,
                expected,
            } => format!(
                "tiebreak: {}\ncompletion: {}\nobserved: {observed}\nexpected: {expected}\n",
                roster.format_ids(tiebreak),
                completion.display(roster)
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyReport {
    pub property: PropertyId,
    pub passed: bool,
    pub coverage: Coverage,
    pub counterexample: Option<Counterexample>,
    /// Extra text placed between the id and the verdict.
    pub detail: Option<String>,
}

impl PropertyReport {
    fn new(property: PropertyId, coverage: Coverage, counterexample: Option<Counterexample>) -> Self {
        PropertyReport {
            property,
            passed: counterexample.is_none(),
            coverage,
            counterexample,
            detail: None,
        }
    }

    /// `<id> [detail] PASS|FAIL (<coverage>)`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        match &self.detail {
            Some(d) => format!("{} {d} {verdict} ({})", self.property, self.coverage),
            None => format!("{} {verdict} ({})", self.property, self.coverage),
        }
    }
}

fn factorial_at_most(n: usize, limit: u64) -> bool {
    let mut acc: u64 = 1;
    for i in 2..=n as u64 {
        acc = match acc.checked_mul(i) {
            Some(v) if v <= limit => v,
            _ => return false,
        };
    }
    true
}

/// Extra ballots used to stress a property over `items` (the candidates
/// whose relative order matters); `rest` follows in the given order.
pub(crate) struct BallotFamily {
    coverage: Coverage,
    kind: FamilyKind,
}

enum FamilyKind {
    Exhaustive,
    Sampled { n: usize, rng: Box<ChaCha8Rng> },
}

impl BallotFamily {
    /// Resolves `mode`; `Auto` is exhaustive iff `exhaustive_if` holds.
    pub(crate) fn new(
        mode: CheckMode,
        exhaustive_if: bool,
        default_n: usize,
        seed: u64,
        stream: u64,
    ) -> Self {
        let n = match mode {
            CheckMode::Exhaustive => None,
            CheckMode::Auto if exhaustive_if => None,
            CheckMode::Auto => Some(default_n),
            CheckMode::Sampled(n) => Some(n),
        };
        match n {
            None => BallotFamily {
                coverage: Coverage::Exhaustive,
                kind: FamilyKind::Exhaustive,
            },
            Some(n) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                BallotFamily {
                    coverage: Coverage::Sampled { n, seed },
                    kind: FamilyKind::Sampled { n, rng: Box::new(rng) },
                }
            }
        }
    }

    /// Auto-resolution for permutations of `count` items.
    pub(crate) fn for_items(mode: CheckMode, count: usize, default_n: usize, seed: u64, stream: u64) -> Self {
        BallotFamily::new(
            mode,
            factorial_at_most(count, EXHAUSTIVE_BALLOT_LIMIT),
            default_n,
            seed,
            stream,
        )
    }

    pub(crate) fn coverage(&self) -> &Coverage {
        &self.coverage
    }

    /// Calls `f` on each ballot until it returns `false`. Sampled families
    /// add, for each non-`p` item, the ballot ranking it first and `p` last.
    pub(crate) fn for_each(
        &mut self,
        items: &[CandidateId],
        rest: &[CandidateId],
        p: CandidateId,
        mut f: impl FnMut(&Ballot) -> bool,
    ) {
        let build = |order: &[CandidateId]| Ballot::from_order_unchecked([order, rest].concat());
        match &mut self.kind {
            FamilyKind::Exhaustive => {
                for perm in items.iter().copied().permutations(items.len()) {
                    if !f(&build(&perm)) {
                        return;
                    }
                }
            }
            FamilyKind::Sampled { n, rng } => {
                let mut order = items.to_vec();
                for _ in 0..*n {
                    order.shuffle(rng);
                    if !f(&build(&order)) {
                        return;
                    }
                }
                for &c in items.iter().filter(|&&c| c != p) {
                    let mut order = vec![c];
                    order.extend(items.iter().copied().filter(|&x| x != c && x != p));
                    if items.contains(&p) {
                        order.push(p);
                    }
                    if !f(&build(&order)) {
                        return;
                    }
                }
            }
        }
    }
}

/// `items` in id order, and the remaining candidates of `0..m` in id order.
pub(crate) fn split_roster(m: usize, items: &[CandidateId]) -> (Vec<CandidateId>, Vec<CandidateId>) {
    let mut items = items.to_vec();
    items.sort();
    let rest = (0..m)
        .map(CandidateId)
        .filter(|c| items.binary_search(c).is_err())
        .collect();
    (items, rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_family_enumerates_permutations() {
        let mut fam = BallotFamily::for_items(CheckMode::Auto, 3, 10, 0, 0);
        let (items, rest) = split_roster(5, &[CandidateId(4), CandidateId(0), CandidateId(2)]);
        let mut seen = Vec::new();
        fam.for_each(&items, &rest, CandidateId(0), |b| {
            seen.push(b.order().to_vec());
            true
        });
        assert_eq!(seen.len(), 6);
        assert!(seen.iter().all(|o| o[3..] == [CandidateId(1), CandidateId(3)]));
        assert_eq!(fam.coverage(), &Coverage::Exhaustive);
    }

    #[test]
    fn sampled_family_is_deterministic_and_adversarial() {
        let items: Vec<CandidateId> = (0..12).map(CandidateId).collect();
        let run = || {
            let mut fam = BallotFamily::for_items(CheckMode::Auto, 12, 20, 9, 3);
            let mut seen = Vec::new();
            fam.for_each(&items, &[], CandidateId(0), |b| {
                seen.push(b.clone());
                true
            });
            seen
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.len(), 20 + 11);
        let last = a.last().unwrap();
        assert_eq!(last.top(), CandidateId(11));
        assert_eq!(*last.order().last().unwrap(), CandidateId(0));
    }

    #[test]
    fn report_lines() {
        let mut r = PropertyReport::new(PropertyId::P1b, Coverage::Exhaustive, None);
        assert_eq!(r.line(), "1b PASS (exhaustive)");
        r.detail = Some("2/15 = m_B/e".into());
        r.property = PropertyId::Probability;
        r.coverage = Coverage::Sampled { n: 500, seed: 1 };
        assert_eq!(r.line(), "probability 2/15 = m_B/e PASS (sampled n=500 seed=1)");
    }
}
