//! The elimination preround and the DPRE, RPRE and IPRE engines built on it.

mod ipre;
mod schedule;

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::election::{
    pairwise_tally, Ballot, CandidateId, CandidateSet, PairwiseTally, Profile,
};
use crate::protocols::{ProtocolId, Tabulation, TieBreak};

pub use ipre::{
    ipre_run, BallotStrategy, DrawSource, FixedDraws, IpreEvent, IpreGame, IpreSeed, IpreTranscript,
    ManipulatorStrategy, Query, SeededDraws,
};
pub use schedule::{count_schedules, enumerate_schedules, random_schedule, Schedule};

/// Largest roster for exact RPRE enumeration (10,395 schedules).
pub const RPRE_MAX_CANDIDATES: usize = 11;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreroundError {
    #[error("malformed schedule: {0}")]
    MalformedSchedule(String),
    #[error("schedules need at least two candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("{m} candidates exceed the exact enumeration bound of {bound}")]
    TooManyCandidates { m: usize, bound: usize },
    #[error("candidate {0} is not in the roster")]
    UnknownCandidate(CandidateId),
    #[error("invalid IPRE seed: {0}")]
    InvalidSeed(String),
    #[error("manipulator completion contradicts its answer on {0} vs {1}")]
    InconsistentCompletion(CandidateId, CandidateId),
    #[error("IPRE is defined only for rosters that are a multiple of 4, got {0}")]
    RosterNotMultipleOfFour(usize),
}

/// Evaluates preround outcomes for one protocol, nonmanipulator profile and
/// tie-break policy, with an optional extra (manipulator) ballot. Base
/// tabulations are cached per survivor set.
pub struct Evaluator<'a> {
    protocol: ProtocolId,
    profile: &'a Profile,
    tiebreak: &'a TieBreak,
    tally: Arc<PairwiseTally>,
    cache: HashMap<CandidateSet, Tabulation>,
}

const CACHE_LIMIT: usize = 1 << 14;

impl<'a> Evaluator<'a> {
    pub fn new(protocol: ProtocolId, profile: &'a Profile, tiebreak: &'a TieBreak) -> Self {
        assert_eq!(
            tiebreak.num_candidates(),
            profile.num_candidates(),
            "tie-break policy built for another roster"
        );
        Evaluator {
            protocol,
            profile,
            tiebreak,
            tally: Arc::new(pairwise_tally(profile)),
            cache: HashMap::new(),
        }
    }

    pub fn profile(&self) -> &Profile {
        self.profile
    }

    pub fn tally(&self) -> &PairwiseTally {
        &self.tally
    }

    pub fn tiebreak(&self) -> &TieBreak {
        self.tiebreak
    }

    /// Winner of the pairwise election `a` vs `b`, ties to the higher priority.
    pub fn pair_winner(
        &self,
        a: CandidateId,
        b: CandidateId,
        extra_positions: Option<&[usize]>,
    ) -> CandidateId {
        let mut margin = self.tally.margin(a, b);
        if let Some(pos) = extra_positions {
            margin += if pos[a.0] < pos[b.0] { 1 } else { -1 };
        }
        match margin {
            m if m > 0 => a,
            m if m < 0 => b,
            _ if self.tiebreak.prefers(a, b) => a,
            _ => b,
        }
    }

    pub fn survivors(&self, schedule: &Schedule, extra: Option<&Ballot>) -> CandidateSet {
        let pos = extra.map(Ballot::positions);
        self.survivors_with_positions(schedule, pos.as_deref())
    }

    fn survivors_with_positions(
        &self,
        schedule: &Schedule,
        pos: Option<&[usize]>,
    ) -> CandidateSet {
        let mut s = CandidateSet::empty(self.profile.num_candidates());
        for &(a, b) in schedule.pairs() {
            s.insert(self.pair_winner(a, b, pos));
        }
        if let Some(x) = schedule.bye() {
            s.insert(x);
        }
        s
    }

    /// Winner of the base protocol over `active`, with the extra ballot's
    /// implicit vote included.
    pub fn winner_among(&mut self, active: &CandidateSet, extra: Option<&Ballot>) -> CandidateId {
        if !self.cache.contains_key(active) {
            if self.cache.len() >= CACHE_LIMIT {
                self.cache.clear();
            }
            let tab = Tabulation::new(self.protocol, self.profile, active.clone(), Some(&self.tally));
            self.cache.insert(active.clone(), tab);
        }
        self.cache[active].winner(self.profile, extra, self.tiebreak)
    }

    pub fn dpre_winner(&mut self, schedule: &Schedule, extra: Option<&Ballot>) -> CandidateId {
        let survivors = self.survivors(schedule, extra);
        self.winner_among(&survivors, extra)
    }

    /// Number of schedules in `schedules` under which `target` wins.
    pub fn count_wins(
        &mut self,
        schedules: &[Schedule],
        target: CandidateId,
        extra: Option<&Ballot>,
    ) -> u64 {
        let pos = extra.map(Ballot::positions);
        schedules
            .iter()
            .filter(|s| {
                let surv = self.survivors_with_positions(s, pos.as_deref());
                surv.contains(target) && self.winner_among(&surv, extra) == target
            })
            .count() as u64
    }
}

fn check_schedule(profile: &Profile, schedule: &Schedule) -> Result<(), PreroundError> {
    Schedule::new(
        schedule.pairs().to_vec(),
        schedule.bye(),
        profile.num_candidates(),
    )
    .map(|_| ())
}

/// Survivors of the preround: pairwise winners plus the bye.
pub fn apply_preround(
    profile: &Profile,
    schedule: &Schedule,
    tiebreak: &TieBreak,
) -> Result<CandidateSet, PreroundError> {
    check_schedule(profile, schedule)?;
    Ok(Evaluator::new(ProtocolId::Plurality, profile, tiebreak).survivors(schedule, None))
}

/// Runs the preround, then `protocol` on the implicit votes of the survivors.
pub fn dpre_winner(
    protocol: ProtocolId,
    profile: &Profile,
    schedule: &Schedule,
    tiebreak: &TieBreak,
) -> Result<CandidateId, PreroundError> {
    check_schedule(profile, schedule)?;
    Ok(Evaluator::new(protocol, profile, tiebreak).dpre_winner(schedule, None))
}

fn rpre_schedules(m: usize) -> Result<Vec<Schedule>, PreroundError> {
    if m > RPRE_MAX_CANDIDATES {
        return Err(PreroundError::TooManyCandidates {
            m,
            bound: RPRE_MAX_CANDIDATES,
        });
    }
    enumerate_schedules(m)
}

/// Winning schedule counts per candidate over all schedules (uniform RPRE),
/// together with the total number of schedules.
pub fn rpre_win_counts(
    protocol: ProtocolId,
    profile: &Profile,
    tiebreak: &TieBreak,
) -> Result<(Vec<u64>, u64), PreroundError> {
    let m = profile.num_candidates();
    if m == 1 {
        return Ok((vec![1], 1));
    }
    let schedules = rpre_schedules(m)?;
    let counts = schedules
        .par_iter()
        .map_init(
            || Evaluator::new(protocol, profile, tiebreak),
            |ev, s| ev.dpre_winner(s, None),
        )
        .fold(
            || vec![0u64; m],
            |mut acc, w| {
                acc[w.0] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; m],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok((counts, schedules.len() as u64))
}

/// Exact probability that `target` wins when the schedule is drawn
/// uniformly after voting.
pub fn rpre_win_probability(
    protocol: ProtocolId,
    profile: &Profile,
    target: CandidateId,
    tiebreak: &TieBreak,
) -> Result<BigRational, PreroundError> {
    if target.0 >= profile.num_candidates() {
        return Err(PreroundError::UnknownCandidate(target));
    }
    let (counts, total) = rpre_win_counts(protocol, profile, tiebreak)?;
    Ok(ratio(counts[target.0], total))
}

/// Monte Carlo estimate of the RPRE win probability for rosters beyond the
/// exact bound. Returns `(wins, samples)`.
pub fn rpre_estimate<R: Rng + ?Sized>(
    protocol: ProtocolId,
    profile: &Profile,
    target: CandidateId,
    tiebreak: &TieBreak,
    samples: u64,
    rng: &mut R,
) -> (u64, u64) {
    let mut ev = Evaluator::new(protocol, profile, tiebreak);
    let m = profile.num_candidates();
    let wins = (0..samples)
        .filter(|_| ev.dpre_winner(&random_schedule(m, rng), None) == target)
        .count() as u64;
    (wins, samples)
}

pub(crate) fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigUint::from(num).into(), BigUint::from(den).into())
}
