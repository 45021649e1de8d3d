//! Winner determination for Plurality, Borda, Maximin and STV.
//!
//! All rules work on a *view* of a profile: an active candidate subset plus an
//! optional extra ballot. Evaluating a view is equivalent to evaluating the
//! materialized restriction of `profile + extra` to the active set, but it
//! avoids rebuilding profiles inside exhaustive searches.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::election::{
    pairwise_tally, Ballot, CandidateId, CandidateSet, ElectionError, PairwiseTally, Profile,
    Roster,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolId {
    Plurality,
    Borda,
    Maximin,
    Stv,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 4] = [
        ProtocolId::Plurality,
        ProtocolId::Borda,
        ProtocolId::Maximin,
        ProtocolId::Stv,
    ];

    pub fn is_score_based(self) -> bool {
        self != ProtocolId::Stv
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolId::Plurality => "plurality",
            ProtocolId::Borda => "borda",
            ProtocolId::Maximin => "maximin",
            ProtocolId::Stv => "stv",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("unknown protocol {0:?} (expected plurality|borda|maximin|stv)")]
    UnknownProtocol(String),
    #[error("{0} has no score table; use stv_outcome")]
    NotScoreBased(ProtocolId),
    #[error("tie-break order is not a permutation of the roster: {0}")]
    BadTieBreak(#[from] ElectionError),
}

impl FromStr for ProtocolId {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "plurality" => Ok(ProtocolId::Plurality),
            "borda" => Ok(ProtocolId::Borda),
            "maximin" => Ok(ProtocolId::Maximin),
            "stv" => Ok(ProtocolId::Stv),
            _ => Err(ProtocolError::UnknownProtocol(s.to_string())),
        }
    }
}

/// Strict priority order over candidates. The earlier a candidate appears,
/// the higher its priority: it wins score ties, survives STV elimination
/// ties and wins tied preround pairings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieBreak {
    order: Vec<CandidateId>,
    rank: Vec<usize>,
}

impl TieBreak {
    /// Priority follows roster order: candidate 0 first.
    pub fn roster_order(m: usize) -> Self {
        TieBreak::from_ballot(&Ballot::identity(m))
    }

    pub fn from_ballot(order: &Ballot) -> Self {
        TieBreak {
            order: order.order().to_vec(),
            rank: order.positions(),
        }
    }

    pub fn new(order: Vec<CandidateId>, m: usize) -> Result<Self, ProtocolError> {
        Ok(TieBreak::from_ballot(&Ballot::new(order, m)?))
    }

    /// Parses a comma separated list of names, highest priority first.
    pub fn from_names(roster: &Roster, list: &str) -> Result<Self, ProtocolError> {
        let names: Vec<&str> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        Ok(TieBreak::from_ballot(&Ballot::from_names(roster, &names)?))
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut order: Vec<CandidateId> = (0..m).map(CandidateId).collect();
        order.shuffle(rng);
        TieBreak::from_ballot(&Ballot::from_order_unchecked(order))
    }

    pub fn order(&self) -> &[CandidateId] {
        &self.order
    }

    pub fn num_candidates(&self) -> usize {
        self.order.len()
    }

    /// 0 is the highest priority.
    #[inline]
    pub fn rank(&self, c: CandidateId) -> usize {
        self.rank[c.0]
    }

    /// True if `a` has higher priority than `b`.
    #[inline]
    pub fn prefers(&self, a: CandidateId, b: CandidateId) -> bool {
        self.rank[a.0] < self.rank[b.0]
    }

    /// The policy induced on a restricted roster; `origin[i]` is the original
    /// id of restricted candidate `i`.
    pub fn restricted(&self, origin: &[CandidateId]) -> TieBreak {
        let mut order: Vec<CandidateId> = (0..origin.len()).map(CandidateId).collect();
        order.sort_by_key(|c| self.rank(origin[c.0]));
        TieBreak::from_ballot(&Ballot::from_order_unchecked(order))
    }
}

/// Points per candidate over the current candidate set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoreTable {
    entries: Vec<(CandidateId, u64)>,
}

impl ScoreTable {
    pub fn get(&self, c: CandidateId) -> Option<u64> {
        self.entries.iter().find(|(id, _)| *id == c).map(|(_, s)| *s)
    }

    pub fn entries(&self) -> &[(CandidateId, u64)] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, s)| s).sum()
    }

    /// Highest-priority candidate among the maximal scorers.
    pub fn leader(&self, tiebreak: &TieBreak) -> CandidateId {
        let mut best = self.entries[0];
        for &(c, s) in &self.entries[1..] {
            if s > best.1 || (s == best.1 && tiebreak.prefers(c, best.0)) {
                best = (c, s);
            }
        }
        best.0
    }
}

/// Result of an STV count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StvOutcome {
    pub winner: CandidateId,
    pub elimination_order: Vec<CandidateId>,
}

#[derive(Clone, Debug)]
enum Base {
    /// Plurality or Borda points of the nonmanipulator votes over the view.
    Points(Vec<u64>),
    /// Full pairwise tally; valid for every active subset.
    Pairwise(Arc<PairwiseTally>),
    Stv,
}

/// Precomputed state for repeatedly evaluating one protocol on one active
/// subset of a fixed profile, with varying extra ballots.
#[derive(Clone, Debug)]
pub struct Tabulation {
    protocol: ProtocolId,
    active: CandidateSet,
    active_count: usize,
    votes: u64,
    base: Base,
}

impl Tabulation {
    /// `tally` may be supplied to share one pairwise tally across views.
    pub fn new(
        protocol: ProtocolId,
        profile: &Profile,
        active: CandidateSet,
        tally: Option<&Arc<PairwiseTally>>,
    ) -> Self {
        let m = profile.num_candidates();
        assert_eq!(active.universe(), m, "active set built for another roster");
        assert!(!active.is_empty(), "no active candidates");
        let active_count = active.len();
        let base = match protocol {
            ProtocolId::Plurality => {
                let mut pts = vec![0u64; m];
                for g in profile.groups() {
                    let top = first_active(g.ballot.order(), &active);
                    pts[top.0] += g.multiplicity;
                }
                Base::Points(pts)
            }
            ProtocolId::Borda => {
                let mut pts = vec![0u64; m];
                for g in profile.groups() {
                    add_borda(&mut pts, g.ballot.order(), &active, active_count, g.multiplicity);
                }
                Base::Points(pts)
            }
            ProtocolId::Maximin => Base::Pairwise(match tally {
                Some(t) => Arc::clone(t),
                None => Arc::new(pairwise_tally(profile)),
            }),
            ProtocolId::Stv => Base::Stv,
        };
        Tabulation {
            protocol,
            active,
            active_count,
            votes: profile.total_votes(),
            base,
        }
    }

    pub fn active(&self) -> &CandidateSet {
        &self.active
    }

    /// Scores over the view. `None` for STV.
    pub fn scores(&self, extra: Option<&Ballot>) -> Option<ScoreTable> {
        let entries = match &self.base {
            Base::Points(pts) => {
                let mut pts = pts.clone();
                if let Some(b) = extra {
                    match self.protocol {
                        ProtocolId::Plurality => pts[first_active(b.order(), &self.active).0] += 1,
                        _ => add_borda(&mut pts, b.order(), &self.active, self.active_count, 1),
                    }
                }
                self.active.iter().map(|c| (c, pts[c.0])).collect()
            }
            Base::Pairwise(tally) => {
                let pos = extra.map(Ballot::positions);
                let votes = self.votes + u64::from(extra.is_some());
                self.active
                    .iter()
                    .map(|a| {
                        let worst = self
                            .active
                            .iter()
                            .filter(|&b| b != a)
                            .map(|b| {
                                let bonus = pos.as_ref().is_some_and(|p| p[a.0] < p[b.0]);
                                tally.get(a, b) + u64::from(bonus)
                            })
                            .min()
                            // No opponents: sentinel N + 1.
                            .unwrap_or(votes + 1);
                        (a, worst)
                    })
                    .collect()
            }
            Base::Stv => return None,
        };
        Some(ScoreTable { entries })
    }

    pub fn winner(&self, profile: &Profile, extra: Option<&Ballot>, tiebreak: &TieBreak) -> CandidateId {
        if self.active_count == 1 {
            return self.active.iter().next().unwrap();
        }
        match self.protocol {
            ProtocolId::Plurality | ProtocolId::Borda => {
                let Base::Points(pts) = &self.base else { unreachable!() };
                let mut bonus: Option<Vec<u64>> = None;
                if let Some(b) = extra {
                    let mut add = vec![0u64; pts.len()];
                    if self.protocol == ProtocolId::Plurality {
                        add[first_active(b.order(), &self.active).0] = 1;
                    } else {
                        add_borda(&mut add, b.order(), &self.active, self.active_count, 1);
                    }
                    bonus = Some(add);
                }
                let score = |c: CandidateId| pts[c.0] + bonus.as_ref().map_or(0, |a| a[c.0]);
                best_by(self.active.iter(), score, tiebreak)
            }
            ProtocolId::Maximin => self.scores(extra).unwrap().leader(tiebreak),
            ProtocolId::Stv => stv_view(profile, &self.active, extra, tiebreak).winner,
        }
    }
}

fn first_active(order: &[CandidateId], active: &CandidateSet) -> CandidateId {
    *order
        .iter()
        .find(|c| active.contains(**c))
        .expect("ballot has an active candidate")
}

fn add_borda(pts: &mut [u64], order: &[CandidateId], active: &CandidateSet, n: usize, weight: u64) {
    let mut remaining = n as u64;
    for &c in order {
        if active.contains(c) {
            remaining -= 1;
            pts[c.0] += remaining * weight;
        }
    }
}

fn best_by(
    candidates: impl Iterator<Item = CandidateId>,
    score: impl Fn(CandidateId) -> u64,
    tiebreak: &TieBreak,
) -> CandidateId {
    let mut best: Option<(CandidateId, u64)> = None;
    for c in candidates {
        let s = score(c);
        best = match best {
            Some((b, bs)) if bs > s || (bs == s && tiebreak.prefers(b, c)) => Some((b, bs)),
            _ => Some((c, s)),
        };
    }
    best.expect("nonempty candidate set").0
}

fn stv_view(
    profile: &Profile,
    active: &CandidateSet,
    extra: Option<&Ballot>,
    tiebreak: &TieBreak,
) -> StvOutcome {
    let m = profile.num_candidates();
    let mut remaining = active.clone();
    let mut left = remaining.len();
    let mut elimination_order = Vec::with_capacity(left.saturating_sub(1));
    let mut counts = vec![0u64; m];
    while left > 1 {
        counts.iter_mut().for_each(|c| *c = 0);
        for g in profile.groups() {
            counts[first_active(g.ballot.order(), &remaining).0] += g.multiplicity;
        }
        if let Some(b) = extra {
            counts[first_active(b.order(), &remaining).0] += 1;
        }
        // Lowest count drops; among ties the lowest-priority candidate.
        let loser = remaining
            .iter()
            .min_by(|&a, &b| {
                counts[a.0]
                    .cmp(&counts[b.0])
                    .then(tiebreak.rank(b).cmp(&tiebreak.rank(a)))
            })
            .unwrap();
        remaining.remove(loser);
        elimination_order.push(loser);
        left -= 1;
    }
    let winner = remaining.iter().next().unwrap();
    StvOutcome {
        winner,
        elimination_order,
    }
}

/// Per-candidate points for a score-based protocol.
pub fn scores(protocol: ProtocolId, profile: &Profile) -> Result<ScoreTable, ProtocolError> {
    if !protocol.is_score_based() {
        return Err(ProtocolError::NotScoreBased(protocol));
    }
    let full = CandidateSet::full(profile.num_candidates());
    Ok(Tabulation::new(protocol, profile, full, None)
        .scores(None)
        .expect("score-based"))
}

pub fn stv_outcome(profile: &Profile, tiebreak: &TieBreak) -> StvOutcome {
    stv_view(
        profile,
        &CandidateSet::full(profile.num_candidates()),
        None,
        tiebreak,
    )
}

pub fn winner(protocol: ProtocolId, profile: &Profile, tiebreak: &TieBreak) -> CandidateId {
    let full = CandidateSet::full(profile.num_candidates());
    Tabulation::new(protocol, profile, full, None).winner(profile, None, tiebreak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::{parse_profile, restrict_profile};
    use proptest::prelude::*;

    fn c(i: usize) -> CandidateId {
        CandidateId(i)
    }

    fn tiny() -> Profile {
        parse_profile("candidates: a b c\n2: a b c\n1: c b a").unwrap()
    }

    fn as_vec(t: &ScoreTable) -> Vec<u64> {
        t.entries().iter().map(|(_, s)| *s).collect()
    }

    #[test]
    fn hand_counted_scores() {
        let p = tiny();
        assert_eq!(as_vec(&scores(ProtocolId::Plurality, &p).unwrap()), [2, 0, 1]);
        assert_eq!(as_vec(&scores(ProtocolId::Borda, &p).unwrap()), [4, 3, 2]);
        assert_eq!(as_vec(&scores(ProtocolId::Maximin, &p).unwrap()), [2, 1, 1]);
        assert_eq!(
            scores(ProtocolId::Stv, &p).unwrap_err(),
            ProtocolError::NotScoreBased(ProtocolId::Stv)
        );
    }

    #[test]
    fn single_candidate_scores() {
        let p = parse_profile("candidates: x\n3: x").unwrap();
        assert_eq!(as_vec(&scores(ProtocolId::Plurality, &p).unwrap()), [3]);
        assert_eq!(as_vec(&scores(ProtocolId::Borda, &p).unwrap()), [0]);
        assert_eq!(as_vec(&scores(ProtocolId::Maximin, &p).unwrap()), [4]);
        assert_eq!(winner(ProtocolId::Maximin, &p, &TieBreak::roster_order(1)), c(0));
    }

    #[test]
    fn stv_traces() {
        let p = parse_profile("candidates: a b c\n2: a b c\n2: b a c\n1: c b a").unwrap();
        let out = stv_outcome(&p, &TieBreak::roster_order(3));
        assert_eq!(out.elimination_order, vec![c(2), c(0)]);
        assert_eq!(out.winner, c(1));

        let out = stv_outcome(&tiny(), &TieBreak::roster_order(3));
        assert_eq!(out.elimination_order, vec![c(1), c(2)]);
        assert_eq!(out.winner, c(0));
    }

    #[test]
    fn stv_unanimous_ignores_tiebreak() {
        let p = parse_profile("candidates: a b c d\n5: b d a c").unwrap();
        for order in [[0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]] {
            let tb = TieBreak::new(order.map(c).to_vec(), 4).unwrap();
            assert_eq!(stv_outcome(&p, &tb).winner, c(1));
        }
    }

    #[test]
    fn ties_follow_policy() {
        let p = parse_profile("candidates: a b\n1: a b\n1: b a").unwrap();
        let b_first = TieBreak::new(vec![c(1), c(0)], 2).unwrap();
        assert_eq!(winner(ProtocolId::Plurality, &p, &b_first), c(1));
        assert_eq!(winner(ProtocolId::Plurality, &p, &TieBreak::roster_order(2)), c(0));
        assert_eq!(winner(ProtocolId::Borda, &tiny(), &TieBreak::roster_order(3)), c(0));
    }

    #[test]
    fn tiebreak_from_names_and_restriction() {
        let p = tiny();
        let tb = TieBreak::from_names(p.roster(), "c, a,b").unwrap();
        assert!(tb.prefers(c(2), c(0)));
        let r = tb.restricted(&[c(0), c(1)]);
        assert_eq!(r.order(), &[c(0), c(1)]);
        assert!(TieBreak::from_names(p.roster(), "a,b").is_err());
        assert_eq!("MaxiMin".parse::<ProtocolId>().unwrap(), ProtocolId::Maximin);
        assert!("copeland".parse::<ProtocolId>().is_err());
    }

    fn arb_profile(max_m: usize, max_groups: usize) -> impl Strategy<Value = Profile> {
        (1..=max_m).prop_flat_map(move |m| {
            prop::collection::vec(
                (1u64..=5, Just((0..m).collect::<Vec<usize>>()).prop_shuffle()),
                1..=max_groups,
            )
            .prop_map(move |groups| {
                let roster = Roster::new((0..m).map(|i| format!("c{i}"))).unwrap();
                let groups = groups
                    .into_iter()
                    .map(|(mult, order)| crate::election::Group {
                        multiplicity: mult,
                        ballot: Ballot::from_indices(&order).unwrap(),
                    })
                    .collect();
                Profile::new(roster, groups).unwrap()
            })
        })
    }

    fn arb_subset(m: usize) -> impl Strategy<Value = CandidateSet> {
        prop::collection::vec(any::<bool>(), m).prop_map(move |bits| {
            let mut s = CandidateSet::from_ids(
                m,
                bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| c(i)),
            );
            if s.is_empty() {
                s.insert(c(0));
            }
            s
        })
    }

    proptest! {
        #[test]
        fn score_sums(p in arb_profile(7, 8)) {
            let n = p.total_votes();
            let m = p.num_candidates() as u64;
            prop_assert_eq!(scores(ProtocolId::Plurality, &p).unwrap().total(), n);
            prop_assert_eq!(scores(ProtocolId::Borda, &p).unwrap().total(), n * m * (m - 1) / 2);
        }

        #[test]
        fn winner_invariant_under_scaling(p in arb_profile(6, 6), k in 2u64..5, seed in any::<u64>()) {
            use rand::SeedableRng;
            let tb = TieBreak::random(p.num_candidates(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let scaled = p.scaled(k);
            for proto in ProtocolId::ALL {
                prop_assert_eq!(winner(proto, &p, &tb), winner(proto, &scaled, &tb));
            }
        }

        #[test]
        fn two_candidates_majority(p in arb_profile(2, 6)) {
            prop_assume!(p.num_candidates() == 2);
            let tb = TieBreak::roster_order(2);
            let t = pairwise_tally(&p);
            let expected = if t.get(c(1), c(0)) > t.get(c(0), c(1)) { c(1) } else { c(0) };
            for proto in ProtocolId::ALL {
                prop_assert_eq!(winner(proto, &p, &tb), expected);
            }
        }

        #[test]
        fn stv_keeps_majority_holder(p in arb_profile(6, 8)) {
            let tb = TieBreak::roster_order(p.num_candidates());
            let out = stv_outcome(&p, &tb);
            let n = p.total_votes();
            let mut remaining = CandidateSet::full(p.num_candidates());
            for &gone in &out.elimination_order {
                let held: u64 = p.groups().iter()
                    .filter(|g| first_active(g.ballot.order(), &remaining) == gone)
                    .map(|g| g.multiplicity)
                    .sum();
                prop_assert!(2 * held <= n, "eliminated a majority holder");
                remaining.remove(gone);
            }
            prop_assert_eq!(out.elimination_order.len(), p.num_candidates() - 1);
        }

        // A view over (profile + extra, active) must agree with the
        // materialized restriction.
        #[test]
        fn view_matches_restriction(
            (p, active, extra) in arb_profile(7, 6).prop_flat_map(|p| {
                let m = p.num_candidates();
                (Just(p), arb_subset(m), Just((0..m).collect::<Vec<usize>>()).prop_shuffle())
            })
        ) {
            let m = p.num_candidates();
            let tb = TieBreak::roster_order(m);
            let extra = Ballot::from_indices(&extra).unwrap();
            let full = p.with_ballot(extra.clone());
            let r = restrict_profile(&full, &active).unwrap();
            let rtb = tb.restricted(&r.origin);
            for proto in ProtocolId::ALL {
                let view = Tabulation::new(proto, &p, active.clone(), None);
                let expected = r.original(winner(proto, &r.profile, &rtb));
                prop_assert_eq!(view.winner(&p, Some(&extra), &tb), expected);
                if proto.is_score_based() {
                    let mat = scores(proto, &r.profile).unwrap();
                    let got = view.scores(Some(&extra)).unwrap();
                    let mapped: Vec<(CandidateId, u64)> =
                        mat.entries().iter().map(|&(id, s)| (r.original(id), s)).collect();
                    prop_assert_eq!(got.entries(), &mapped[..]);
                }
            }
        }
    }
}
