//! Exact solvers for constructive manipulation by a single voter.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::election::{Ballot, CandidateId, CandidateSet, Profile};
use crate::preround::{
    enumerate_schedules, ratio, Evaluator, FixedDraws, IpreGame, IpreSeed, ManipulatorStrategy,
    PreroundError, Query, Schedule,
};
use crate::protocols::{ProtocolId, Tabulation, TieBreak};
use crate::reductions::RoleMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    /// Largest roster searched over all `m!` ballots.
    pub exhaustive_max_candidates: usize,
    /// Largest roster for the RPRE maximum over ballots and schedules.
    pub rpre_max_candidates: usize,
    /// Most unscheduled pairs in an IPRE expectimax.
    pub ipre_max_steps: usize,
    /// Largest roster whose IPRE completions are enumerated.
    pub completion_max_candidates: usize,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            exhaustive_max_candidates: 10,
            rpre_max_candidates: 8,
            ipre_max_steps: 12,
            completion_max_candidates: 8,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ManipulationError {
    #[error("{what}: {got} exceeds the search bound of {bound}")]
    BoundExceeded {
        what: &'static str,
        got: usize,
        bound: usize,
    },
    #[error("candidate {0} is not in the roster")]
    UnknownCandidate(CandidateId),
    #[error("threshold {0} is outside [0, 1]")]
    BadThreshold(BigRational),
    #[error("role map covers {got} candidates, roster has {expected}")]
    RoleMapMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Preround(#[from] PreroundError),
}

/// The manipulator's answer per published draw prefix, and its completion
/// ballot per full draw sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContingencyPlan {
    pub answers: BTreeMap<Vec<bool>, bool>,
    pub completions: BTreeMap<Vec<bool>, Ballot>,
}

impl ContingencyPlan {
    fn merge(&mut self, other: ContingencyPlan) {
        self.answers.extend(other.answers);
        self.completions.extend(other.completions);
    }
}

/// Replays a plan inside an [`IpreGame`].
pub struct PlanStrategy<'a>(pub &'a ContingencyPlan);

impl ManipulatorStrategy for PlanStrategy<'_> {
    fn answer(&mut self, draws: &[bool], _query: &Query) -> bool {
        self.0.answers[draws]
    }

    fn complete(&mut self, draws: &[bool], _answers: &[(Query, bool)]) -> Ballot {
        self.0.completions[draws].clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Ballot(Ballot),
    Plan(ContingencyPlan),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManipulationAnswer {
    pub decision: bool,
    pub best_probability: BigRational,
    pub witness: Option<Witness>,
}

impl ManipulationAnswer {
    fn deterministic(witness: Option<Ballot>) -> Self {
        ManipulationAnswer {
            decision: witness.is_some(),
            best_probability: if witness.is_some() {
                BigRational::one()
            } else {
                BigRational::zero()
            },
            witness: witness.map(Witness::Ballot),
        }
    }
}

fn check_candidate(profile: &Profile, p: CandidateId) -> Result<(), ManipulationError> {
    if p.0 >= profile.num_candidates() {
        return Err(ManipulationError::UnknownCandidate(p));
    }
    Ok(())
}

fn check_bound(what: &'static str, got: usize, bound: usize) -> Result<(), ManipulationError> {
    if got > bound {
        return Err(ManipulationError::BoundExceeded { what, got, bound });
    }
    Ok(())
}

fn check_threshold(q: &BigRational) -> Result<(), ManipulationError> {
    if q < &BigRational::zero() || q > &BigRational::one() {
        return Err(ManipulationError::BadThreshold(q.clone()));
    }
    Ok(())
}

/// Ballots of `0..m` starting with `first`, in lexicographic order.
fn ballots_starting_with(m: usize, first: usize) -> impl Iterator<Item = Ballot> {
    let rest: Vec<CandidateId> = (0..m).filter(|&c| c != first).map(CandidateId).collect();
    let len = rest.len();
    rest.into_iter().permutations(len).map(move |tail| {
        let mut order = Vec::with_capacity(m);
        order.push(CandidateId(first));
        order.extend(tail);
        Ballot::from_order_unchecked(order)
    })
}

/// Lexicographically first ballot satisfying `pred`, searching the ranges
/// fixed by each first choice in parallel.
fn first_ballot<S, F>(m: usize, init: impl Fn() -> S + Sync + Send, pred: F) -> Option<Ballot>
where
    F: Fn(&mut S, &Ballot) -> bool + Sync + Send,
{
    (0..m)
        .into_par_iter()
        .map_init(init, |state, first| ballots_starting_with(m, first).find(|b| pred(state, b)))
        .find_map_first(|found| found)
}

/// Plain manipulation: is there a ballot making `p` the winner of `profile`
/// plus that ballot? The witness is the lexicographically first such ballot.
pub fn manipulate_plain(
    protocol: ProtocolId,
    profile: &Profile,
    p: CandidateId,
    tiebreak: &TieBreak,
    bounds: &SearchBounds,
) -> Result<ManipulationAnswer, ManipulationError> {
    check_candidate(profile, p)?;
    let m = profile.num_candidates();
    check_bound("candidates", m, bounds.exhaustive_max_candidates)?;
    let tab = Tabulation::new(protocol, profile, CandidateSet::full(m), None);
    let witness = first_ballot(m, || (), |_, b| tab.winner(profile, Some(b), tiebreak) == p);
    Ok(ManipulationAnswer::deterministic(witness))
}

#[derive(Clone, Copy, Debug)]
pub enum DpreSearch<'r> {
    /// Every ballot, in lexicographic order.
    Exhaustive,
    /// Only the ballots induced by truth assignments: `p` first, then the
    /// chosen literal of each variable, then the rest in roster order.
    Structured(&'r RoleMap),
}

/// Ballot induced by `assignment` under `roles`.
pub fn assignment_ballot(roles: &RoleMap, assignment: &[bool]) -> Ballot {
    let mut order = vec![roles.preferred()];
    for (v, &value) in assignment.iter().enumerate() {
        let (plus, minus) = roles.literal_pair(v);
        order.push(if value { plus } else { minus });
    }
    let mut seen = vec![false; roles.len()];
    for c in &order {
        seen[c.0] = true;
    }
    order.extend((0..roles.len()).filter(|&i| !seen[i]).map(CandidateId));
    Ballot::from_order_unchecked(order)
}

/// Manipulation under a fixed preround schedule.
pub fn manipulate_dpre(
    protocol: ProtocolId,
    profile: &Profile,
    p: CandidateId,
    schedule: &Schedule,
    tiebreak: &TieBreak,
    search: DpreSearch<'_>,
    bounds: &SearchBounds,
) -> Result<ManipulationAnswer, ManipulationError> {
    check_candidate(profile, p)?;
    let m = profile.num_candidates();
    Schedule::new(schedule.pairs().to_vec(), schedule.bye(), m)?;
    let witness = match search {
        DpreSearch::Exhaustive => {
            check_bound("candidates", m, bounds.exhaustive_max_candidates)?;
            first_ballot(
                m,
                || Evaluator::new(protocol, profile, tiebreak),
                |ev, b| ev.dpre_winner(schedule, Some(b)) == p,
            )
        }
        DpreSearch::Structured(roles) => {
            if roles.len() != m {
                return Err(ManipulationError::RoleMapMismatch {
                    got: roles.len(),
                    expected: m,
                });
            }
            let n = roles.num_vars();
            check_bound("variables", n, 24)?;
            let mut ev = Evaluator::new(protocol, profile, tiebreak);
            (0u64..1 << n)
                .map(|idx| {
                    let a: Vec<bool> = (0..n).map(|v| idx >> (n - 1 - v) & 1 == 0).collect();
                    assignment_ballot(roles, &a)
                })
                .find(|b| ev.dpre_winner(schedule, Some(b)) == p)
        }
    };
    Ok(ManipulationAnswer::deterministic(witness))
}

/// RPRE manipulation: the best win probability over all ballots when the
/// schedule is drawn uniformly after voting.
pub fn manipulate_rpre(
    protocol: ProtocolId,
    profile: &Profile,
    p: CandidateId,
    threshold: &BigRational,
    tiebreak: &TieBreak,
    bounds: &SearchBounds,
) -> Result<ManipulationAnswer, ManipulationError> {
    check_candidate(profile, p)?;
    check_threshold(threshold)?;
    let m = profile.num_candidates();
    check_bound("candidates", m, bounds.rpre_max_candidates)?;
    let schedules = enumerate_schedules(m)?;
    let total = schedules.len() as u64;
    // Per first choice: (best count, lexicographically first ballot attaining it).
    let best = (0..m)
        .into_par_iter()
        .map_init(
            || Evaluator::new(protocol, profile, tiebreak),
            |ev, first| {
                let mut best: Option<(u64, Ballot)> = None;
                for b in ballots_starting_with(m, first) {
                    let wins = ev.count_wins(&schedules, p, Some(&b));
                    if best.as_ref().is_none_or(|(w, _)| wins > *w) {
                        best = Some((wins, b));
                        if wins == total {
                            break;
                        }
                    }
                }
                best.expect("at least one ballot")
            },
        )
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("m >= 1");
    let prob = ratio(best.0, total);
    Ok(ManipulationAnswer {
        decision: &prob >= threshold,
        best_probability: prob,
        witness: Some(Witness::Ballot(best.1)),
    })
}

/// How the manipulator's final ballot is chosen at each IPRE leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompletionPolicy {
    /// Every ballot consistent with the answers; the first winning one.
    Exhaustive,
    /// `template` with each queried pair reordered to match the answers.
    Template(Ballot),
    /// Exhaustive within the bound, else the template ranking `p` first and
    /// the rest in roster order.
    Auto,
}

/// `template` adjusted to agree with every answer.
pub fn template_completion(template: &Ballot, answers: &[(Query, bool)]) -> Ballot {
    let mut b = template.clone();
    for (q, first) in answers {
        if b.prefers(q.first, q.second) != *first {
            b.swap_candidates(q.first, q.second);
        }
    }
    b
}

struct Expectimax<'a> {
    game: IpreGame<'a>,
    seed: &'a IpreSeed,
    p: CandidateId,
    m: usize,
    template: Option<Ballot>,
}

/// Scripted manipulator for one leaf.
struct Scripted<'s> {
    answers: &'s [bool],
    completion: Ballot,
}

impl ManipulatorStrategy for Scripted<'_> {
    fn answer(&mut self, draws: &[bool], _query: &Query) -> bool {
        self.answers[draws.len() - 1]
    }

    fn complete(&mut self, _draws: &[bool], _answers: &[(Query, bool)]) -> Ballot {
        self.completion.clone()
    }
}

impl Expectimax<'_> {
    fn queries(&self, draws: &[bool], answers: &[bool]) -> Vec<(Query, bool)> {
        answers
            .iter()
            .enumerate()
            .map(|(t, &a)| (self.seed.query(t, &draws[..=t]), a))
            .collect()
    }

    fn wins(&mut self, draws: &[bool], answers: &[bool], completion: &Ballot) -> Result<bool, ManipulationError> {
        let mut strategy = Scripted {
            answers,
            completion: completion.clone(),
        };
        let (w, _) = self
            .game
            .run(&mut strategy, &mut FixedDraws::new(draws.to_vec()))?;
        Ok(w == self.p)
    }

    /// Value of a leaf with its completion ballot.
    fn leaf(&mut self, draws: &[bool], answers: &[bool]) -> Result<(bool, Ballot), ManipulationError> {
        let qs = self.queries(draws, answers);
        match &self.template {
            Some(t) => {
                let b = template_completion(t, &qs);
                Ok((self.wins(draws, answers, &b)?, b))
            }
            None => {
                let mut fallback = None;
                for perm in (0..self.m).map(CandidateId).permutations(self.m) {
                    let b = Ballot::from_order_unchecked(perm);
                    if !qs.iter().all(|(q, a)| b.prefers(q.first, q.second) == *a) {
                        continue;
                    }
                    if self.wins(draws, answers, &b)? {
                        return Ok((true, b));
                    }
                    fallback.get_or_insert(b);
                }
                Ok((false, fallback.expect("answers are always satisfiable")))
            }
        }
    }

    /// Averages over the draw at step `draws.len()`, maximizing the answer
    /// that follows it.
    fn node(
        &mut self,
        draws: &mut Vec<bool>,
        answers: &mut Vec<bool>,
    ) -> Result<(BigRational, ContingencyPlan), ManipulationError> {
        let steps = self.seed.num_steps();
        if draws.len() == steps {
            let (won, ballot) = self.leaf(draws, answers)?;
            let mut plan = ContingencyPlan::default();
            plan.completions.insert(draws.clone(), ballot);
            let v = if won { BigRational::one() } else { BigRational::zero() };
            return Ok((v, plan));
        }
        let mut total = BigRational::zero();
        let mut plan = ContingencyPlan::default();
        for d in [false, true] {
            draws.push(d);
            let mut best: Option<(BigRational, ContingencyPlan, bool)> = None;
            for a in [true, false] {
                answers.push(a);
                let (v, sub) = self.node(draws, answers)?;
                answers.pop();
                if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                    best = Some((v, sub, a));
                }
            }
            let (v, sub, a) = best.unwrap();
            plan.answers.insert(draws.clone(), a);
            plan.merge(sub);
            total += v;
            draws.pop();
        }
        Ok((total / BigRational::from_integer(BigInt::from(2)), plan))
    }
}

/// IPRE manipulation: the optimal contingency plan and its exact value.
/// Ties between answers go to declaring a preference for the query's first
/// candidate.
#[allow(clippy::too_many_arguments)]
pub fn manipulate_ipre(
    protocol: ProtocolId,
    profile: &Profile,
    p: CandidateId,
    threshold: &BigRational,
    seed: &IpreSeed,
    tiebreak: &TieBreak,
    completion: &CompletionPolicy,
    bounds: &SearchBounds,
) -> Result<ManipulationAnswer, ManipulationError> {
    check_candidate(profile, p)?;
    check_threshold(threshold)?;
    let m = profile.num_candidates();
    check_bound("unscheduled pairs", seed.num_steps(), bounds.ipre_max_steps)?;
    let template = match completion {
        CompletionPolicy::Exhaustive => {
            check_bound("candidates for exhaustive completion", m, bounds.completion_max_candidates)?;
            None
        }
        CompletionPolicy::Template(t) => {
            if t.len() != m {
                return Err(ManipulationError::BoundExceeded {
                    what: "template length",
                    got: t.len(),
                    bound: m,
                });
            }
            Some(t.clone())
        }
        CompletionPolicy::Auto if m <= bounds.completion_max_candidates => None,
        CompletionPolicy::Auto => {
            let mut order = vec![p];
            order.extend((0..m).map(CandidateId).filter(|&c| c != p));
            Some(Ballot::from_order_unchecked(order))
        }
    };
    let mut search = Expectimax {
        game: IpreGame::new(protocol, profile, seed, tiebreak)?,
        seed,
        p,
        m,
        template,
    };
    let (value, plan) = search.node(&mut Vec::new(), &mut Vec::new())?;
    Ok(ManipulationAnswer {
        decision: &value >= threshold,
        best_probability: value,
        witness: Some(Witness::Plan(plan)),
    })
}
