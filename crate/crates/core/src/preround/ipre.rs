//! Interleaved preround: random scheduling of matchup pairs alternates with
//! pairwise queries to all voters, trailing the schedule by a factor of two.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::election::{content_lines, Ballot, CandidateId, ParseError, ParseErrorKind, Profile, Roster};
use crate::protocols::{ProtocolId, TieBreak};

use super::{Evaluator, PreroundError, Schedule};

/// The choices fixed before any voter is queried: the first candidate of
/// every matchup, the second candidate of the first `k` matchups, and the two
/// candidates pooled for each later pair of matchups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IpreSeed {
    k: usize,
    first: Vec<CandidateId>,
    second: Vec<CandidateId>,
    pool: Vec<(CandidateId, CandidateId)>,
}

impl IpreSeed {
    pub fn new(
        k: usize,
        first: Vec<CandidateId>,
        second: Vec<CandidateId>,
        pool: Vec<(CandidateId, CandidateId)>,
        m: usize,
    ) -> Result<Self, PreroundError> {
        let bad = |msg: String| Err(PreroundError::InvalidSeed(msg));
        if !m.is_multiple_of(4) {
            return Err(PreroundError::RosterNotMultipleOfFour(m));
        }
        if !k.is_multiple_of(4) {
            return bad(format!("k = {k} is not a multiple of 4"));
        }
        if first.len() != m / 2 {
            return bad(format!("{} first candidates for {} matchups", first.len(), m / 2));
        }
        if k > m / 2 || second.len() != k {
            return bad(format!("{} second candidates for k = {k}", second.len()));
        }
        if 2 * pool.len() != m / 2 - k {
            return bad(format!(
                "{} pools for {} unscheduled matchups",
                pool.len(),
                m / 2 - k
            ));
        }
        let mut seen = vec![false; m];
        let all = first
            .iter()
            .chain(&second)
            .chain(pool.iter().flat_map(|(a, b)| [a, b]));
        for c in all {
            if c.0 >= m || std::mem::replace(&mut seen[c.0], true) {
                return bad(format!("candidate {} listed twice or out of range", c.0));
            }
        }
        Ok(IpreSeed {
            k,
            first,
            second,
            pool,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn first(&self) -> &[CandidateId] {
        &self.first
    }

    pub fn second(&self) -> &[CandidateId] {
        &self.second
    }

    pub fn pool(&self) -> &[(CandidateId, CandidateId)] {
        &self.pool
    }

    pub fn num_candidates(&self) -> usize {
        2 * self.first.len()
    }

    /// Number of random draws (and of queries) during elicitation.
    pub fn num_steps(&self) -> usize {
        self.pool.len()
    }

    /// Pair index `i` (1-based, as in the elicitation loop) of draw `step`.
    pub fn pair_index(&self, step: usize) -> usize {
        self.k / 2 + 1 + step
    }

    /// The opponent of `first[j]` (0-based matchup) once `draws` are known.
    pub fn opponent(&self, j: usize, draws: &[bool]) -> Option<CandidateId> {
        if j < self.k {
            return Some(self.second[j]);
        }
        let t = (j - self.k) / 2;
        let swapped = *draws.get(t)?;
        let (a, b) = self.pool[t];
        let upper = (j - self.k).is_multiple_of(2);
        Some(if upper != swapped { a } else { b })
    }

    /// The matchup queried right after draw `step`.
    pub fn query(&self, step: usize, draws: &[bool]) -> Query {
        let j = step;
        Query {
            matchup: j + 1,
            first: self.first[j],
            second: self
                .opponent(j, draws)
                .expect("queried matchups trail the schedule"),
        }
    }

    /// The complete schedule after all draws.
    pub fn schedule(&self, draws: &[bool]) -> Schedule {
        assert_eq!(draws.len(), self.num_steps());
        let pairs = (0..self.first.len())
            .map(|j| (self.first[j], self.opponent(j, draws).unwrap()))
            .collect();
        Schedule::new(pairs, None, self.num_candidates()).expect("seed covers the roster")
    }

    pub fn to_text(&self, roster: &Roster) -> String {
        let names = |ids: &[CandidateId]| {
            ids.iter()
                .map(|c| format!(" {}", roster.name(*c)))
                .collect::<String>()
        };
        let mut out = format!("k: {}\n", self.k);
        out.push_str(&format!("first:{}\n", names(&self.first)));
        out.push_str(&format!("second:{}\n", names(&self.second)));
        for (t, (a, b)) in self.pool.iter().enumerate() {
            out.push_str(&format!(
                "pool {}: {} {}\n",
                self.pair_index(t),
                roster.name(*a),
                roster.name(*b)
            ));
        }
        out
    }

    pub fn parse(text: &str, roster: &Roster) -> Result<Self, ParseError> {
        let mut k = None;
        let mut first = None;
        let mut second = None;
        let mut pool = Vec::new();
        let mut last = 1;
        for (lineno, line) in content_lines(text) {
            last = lineno;
            let err = |msg: &str| ParseError::new(lineno, ParseErrorKind::Other(msg.into()));
            let (key, rest) = line.split_once(':').ok_or_else(|| err("expected `key: value`"))?;
            let ids = |s: &str| {
                s.split_whitespace()
                    .map(|n| roster.lookup(n).map_err(|e| ParseError::new(lineno, e)))
                    .collect::<Result<Vec<_>, _>>()
            };
            match key.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["k"] => k = Some(rest.trim().parse::<usize>().map_err(|_| err("bad k"))?),
                ["first"] => first = Some(ids(rest)?),
                ["second"] => second = Some(ids(rest)?),
                ["pool", i] => {
                    let i: usize = i.parse().map_err(|_| err("bad pool index"))?;
                    let members = ids(rest)?;
                    let [a, b] = members[..] else {
                        return Err(err("a pool holds exactly two candidates"));
                    };
                    let expected = k.ok_or_else(|| err("pool before k"))? / 2 + 1 + pool.len();
                    if i != expected {
                        return Err(err("pool indices must be consecutive from k/2 + 1"));
                    }
                    pool.push((a, b));
                }
                _ => return Err(err("unknown key")),
            }
        }
        let missing = |what: &str| ParseError::new(last, ParseErrorKind::Other(format!("missing `{what}`")));
        IpreSeed::new(
            k.ok_or_else(|| missing("k"))?,
            first.ok_or_else(|| missing("first"))?,
            second.unwrap_or_default(),
            pool,
            roster.len(),
        )
        .map_err(|e| ParseError::new(last, ParseErrorKind::Other(e.to_string())))
    }
}

/// A pairwise question put to every voter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Query {
    /// 1-based matchup number.
    pub matchup: usize,
    pub first: CandidateId,
    pub second: CandidateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IpreEvent {
    /// Nature's assignment for pair `pair`; `swapped` means the second pooled
    /// candidate faces the first matchup of the pair.
    Draw { pair: usize, swapped: bool },
    /// Answers are `true` when the voter prefers `query.first`. One answer
    /// per nonmanipulator group, in profile order.
    Query {
        query: Query,
        answers: Vec<bool>,
        manipulator: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IpreTranscript {
    pub events: Vec<IpreEvent>,
    pub manipulator_ballot: Ballot,
    pub schedule: Schedule,
}

impl IpreTranscript {
    pub fn draws(&self) -> Vec<bool> {
        self.events
            .iter()
            .filter_map(|e| match e {
                IpreEvent::Draw { swapped, .. } => Some(*swapped),
                _ => None,
            })
            .collect()
    }

    pub fn manipulator_answers(&self) -> Vec<(Query, bool)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                IpreEvent::Query {
                    query, manipulator, ..
                } => Some((*query, *manipulator)),
                _ => None,
            })
            .collect()
    }
}

/// Source of nature's binary draws.
pub trait DrawSource {
    fn draw(&mut self, pair: usize) -> bool;
}

/// Fair coin flips from a seeded generator.
pub struct SeededDraws(ChaCha8Rng);

impl SeededDraws {
    pub fn new(seed: u64) -> Self {
        SeededDraws(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl DrawSource for SeededDraws {
    fn draw(&mut self, _pair: usize) -> bool {
        self.0.random_bool(0.5)
    }
}

/// A predetermined draw sequence.
pub struct FixedDraws {
    bits: Vec<bool>,
    next: usize,
}

impl FixedDraws {
    pub fn new(bits: Vec<bool>) -> Self {
        FixedDraws { bits, next: 0 }
    }
}

impl DrawSource for FixedDraws {
    fn draw(&mut self, _pair: usize) -> bool {
        let b = self.bits[self.next];
        self.next += 1;
        b
    }
}

/// The manipulator's side of the protocol. It sees every published draw.
pub trait ManipulatorStrategy {
    /// `true` to declare a preference for `query.first`.
    fn answer(&mut self, draws: &[bool], query: &Query) -> bool;
    /// Full ballot after elicitation; must agree with every earlier answer.
    fn complete(&mut self, draws: &[bool], answers: &[(Query, bool)]) -> Ballot;
}

/// Answers every query sincerely from a fixed ballot.
pub struct BallotStrategy(pub Ballot);

impl ManipulatorStrategy for BallotStrategy {
    fn answer(&mut self, _draws: &[bool], query: &Query) -> bool {
        self.0.prefers(query.first, query.second)
    }

    fn complete(&mut self, _draws: &[bool], _answers: &[(Query, bool)]) -> Ballot {
        self.0.clone()
    }
}

/// An IPRE election ready to be run repeatedly.
pub struct IpreGame<'a> {
    seed: &'a IpreSeed,
    evaluator: Evaluator<'a>,
}

impl<'a> IpreGame<'a> {
    pub fn new(
        protocol: ProtocolId,
        nonmanipulators: &'a Profile,
        seed: &'a IpreSeed,
        tiebreak: &'a TieBreak,
    ) -> Result<Self, PreroundError> {
        let m = nonmanipulators.num_candidates();
        if !m.is_multiple_of(4) {
            return Err(PreroundError::RosterNotMultipleOfFour(m));
        }
        if seed.num_candidates() != m {
            return Err(PreroundError::InvalidSeed(format!(
                "seed covers {} candidates, roster has {m}",
                seed.num_candidates()
            )));
        }
        Ok(IpreGame {
            seed,
            evaluator: Evaluator::new(protocol, nonmanipulators, tiebreak),
        })
    }

    pub fn seed(&self) -> &IpreSeed {
        self.seed
    }

    pub fn run(
        &mut self,
        manipulator: &mut dyn ManipulatorStrategy,
        source: &mut dyn DrawSource,
    ) -> Result<(CandidateId, IpreTranscript), PreroundError> {
        let seed = self.seed;
        let profile = self.evaluator.profile();
        let mut events = Vec::with_capacity(2 * seed.num_steps());
        let mut draws = Vec::with_capacity(seed.num_steps());
        let mut answers = Vec::with_capacity(seed.num_steps());
        for step in 0..seed.num_steps() {
            let pair = seed.pair_index(step);
            let swapped = source.draw(pair);
            draws.push(swapped);
            events.push(IpreEvent::Draw { pair, swapped });

            let query = seed.query(step, &draws);
            let group_answers = profile
                .groups()
                .iter()
                .map(|g| g.ballot.prefers(query.first, query.second))
                .collect();
            let mine = manipulator.answer(&draws, &query);
            answers.push((query, mine));
            events.push(IpreEvent::Query {
                query,
                answers: group_answers,
                manipulator: mine,
            });
        }
        let ballot = manipulator.complete(&draws, &answers);
        if ballot.len() != profile.num_candidates() {
            return Err(PreroundError::InvalidSeed("completion has the wrong length".into()));
        }
        for (q, said_first) in &answers {
            if ballot.prefers(q.first, q.second) != *said_first {
                return Err(PreroundError::InconsistentCompletion(q.first, q.second));
            }
        }
        let schedule = seed.schedule(&draws);
        let winner = self.evaluator.dpre_winner(&schedule, Some(&ballot));
        Ok((
            winner,
            IpreTranscript {
                events,
                manipulator_ballot: ballot,
                schedule,
            },
        ))
    }
}

/// Runs one interleaved election: draws and queries alternate, then the
/// manipulator completes its ballot and the preround plus `protocol` decide.
pub fn ipre_run(
    protocol: ProtocolId,
    nonmanipulators: &Profile,
    manipulator: &mut dyn ManipulatorStrategy,
    seed: &IpreSeed,
    source: &mut dyn DrawSource,
    tiebreak: &TieBreak,
) -> Result<(CandidateId, IpreTranscript), PreroundError> {
    IpreGame::new(protocol, nonmanipulators, seed, tiebreak)?.run(manipulator, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::parse_profile;
    use crate::preround::dpre_winner;

    fn c(i: usize) -> CandidateId {
        CandidateId(i)
    }

    // 8 candidates, k = 0: two pairs of matchups, both drawn.
    fn seed8() -> IpreSeed {
        IpreSeed::new(
            0,
            vec![c(0), c(1), c(2), c(3)],
            vec![],
            vec![(c(4), c(5)), (c(6), c(7))],
            8,
        )
        .unwrap()
    }

    fn profile8() -> Profile {
        parse_profile(
            "candidates: a b c d e f g h\n3: a b c d e f g h\n2: h g f e d c b a\n2: e a f b g c h d",
        )
        .unwrap()
    }

    #[test]
    fn seed_validation() {
        assert!(matches!(
            IpreSeed::new(0, vec![c(0)], vec![], vec![], 2),
            Err(PreroundError::RosterNotMultipleOfFour(2))
        ));
        assert!(IpreSeed::new(2, vec![c(0), c(1)], vec![c(2), c(3)], vec![], 4).is_err());
        assert!(IpreSeed::new(0, vec![c(0), c(0)], vec![], vec![(c(2), c(3))], 4).is_err());
        assert!(IpreSeed::new(0, vec![c(0), c(1)], vec![], vec![(c(2), c(3))], 4).is_ok());
    }

    #[test]
    fn seed_file_round_trip() {
        let roster = profile8().roster().clone();
        let text = seed8().to_text(&roster);
        assert_eq!(text, "k: 0\nfirst: a b c d\nsecond:\npool 1: e f\npool 2: g h\n");
        assert_eq!(IpreSeed::parse(&text, &roster).unwrap(), seed8());
        assert!(IpreSeed::parse("k: 0\nfirst: a b c d\npool 2: e f\npool 3: g h\n", &roster).is_err());
    }

    #[test]
    fn draws_resolve_pairs() {
        let s = seed8();
        let sched = s.schedule(&[false, true]);
        assert_eq!(sched.pairs(), &[(c(0), c(4)), (c(1), c(5)), (c(2), c(7)), (c(3), c(6))]);
        // Step 1 queries matchup 2, which the first draw already fixed.
        assert_eq!(s.query(1, &[true, false]), Query { matchup: 2, first: c(1), second: c(4) });
    }

    #[test]
    fn constant_ballot_matches_dpre() {
        let p = profile8();
        let seed = seed8();
        let tb = TieBreak::roster_order(8);
        let ballot = Ballot::from_indices(&[3, 1, 4, 0, 7, 5, 6, 2]).unwrap();
        for proto in ProtocolId::ALL {
            for bits in [[false, false], [false, true], [true, false], [true, true]] {
                let (w, tr) = ipre_run(
                    proto,
                    &p,
                    &mut BallotStrategy(ballot.clone()),
                    &seed,
                    &mut FixedDraws::new(bits.to_vec()),
                    &tb,
                )
                .unwrap();
                let full = p.with_ballot(ballot.clone());
                assert_eq!(w, dpre_winner(proto, &full, &seed.schedule(&bits), &tb).unwrap());
                assert_eq!(tr.draws(), bits.to_vec());
            }
        }
    }

    #[test]
    fn fully_scheduled_seed_is_dpre() {
        // k = m/2 leaves nothing to draw or query.
        let p = profile8();
        let seed = IpreSeed::new(
            4,
            vec![c(0), c(1), c(2), c(3)],
            vec![c(7), c(6), c(5), c(4)],
            vec![],
            8,
        )
        .unwrap();
        let tb = TieBreak::roster_order(8);
        let ballot = Ballot::from_indices(&[6, 2, 0, 1, 3, 5, 4, 7]).unwrap();
        for proto in ProtocolId::ALL {
            let (w, tr) = ipre_run(
                proto,
                &p,
                &mut BallotStrategy(ballot.clone()),
                &seed,
                &mut FixedDraws::new(vec![]),
                &tb,
            )
            .unwrap();
            assert!(tr.events.is_empty());
            let full = p.with_ballot(ballot.clone());
            assert_eq!(w, dpre_winner(proto, &full, &seed.schedule(&[]), &tb).unwrap());
        }
    }

    #[test]
    fn transcript_trails_schedule() {
        let p = profile8();
        let seed = seed8();
        let tb = TieBreak::roster_order(8);
        let (_, tr) = ipre_run(
            ProtocolId::Borda,
            &p,
            &mut BallotStrategy(Ballot::identity(8)),
            &seed,
            &mut SeededDraws::new(9),
            &tb,
        )
        .unwrap();
        let mut draws_seen = 0;
        for e in &tr.events {
            match e {
                IpreEvent::Draw { pair, .. } => {
                    draws_seen += 1;
                    assert_eq!(*pair, seed.k() / 2 + draws_seen);
                }
                IpreEvent::Query { query, answers, .. } => {
                    assert!(draws_seen >= seed.k() / 2 + query.matchup - seed.k() / 2);
                    assert_eq!(query.matchup, draws_seen);
                    assert_eq!(answers.len(), p.groups().len());
                }
            }
        }
    }

    struct Liar;

    impl ManipulatorStrategy for Liar {
        fn answer(&mut self, _draws: &[bool], _query: &Query) -> bool {
            true
        }
        fn complete(&mut self, _draws: &[bool], _answers: &[(Query, bool)]) -> Ballot {
            Ballot::from_indices(&[7, 6, 5, 4, 3, 2, 1, 0]).unwrap()
        }
    }

    #[test]
    fn inconsistent_completion_is_rejected() {
        let err = ipre_run(
            ProtocolId::Plurality,
            &profile8(),
            &mut Liar,
            &seed8(),
            &mut FixedDraws::new(vec![false, false]),
            &TieBreak::roster_order(8),
        )
        .unwrap_err();
        assert!(matches!(err, PreroundError::InconsistentCompletion(..)));
    }
}
