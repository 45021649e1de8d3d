//! Candidate rosters, ballots, multiplicity-grouped profiles, pairwise tallies
//! and the line-oriented profile file format.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Dense index of a candidate within its roster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateId(pub usize);

impl CandidateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A candidate as seen at the file boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub id: CandidateId,
    pub name: String,
}

/// Errors raised while building rosters, ballots and profiles.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ElectionError {
    #[error("invalid candidate name {0:?}")]
    InvalidName(String),
    #[error("duplicate candidate name {0:?}")]
    DuplicateName(String),
    #[error("empty roster")]
    EmptyRoster,
    #[error("unknown candidate {0:?}")]
    UnknownCandidate(String),
    #[error("candidate id {0} out of range")]
    IdOutOfRange(usize),
    #[error("candidate {0} appears twice in a ballot")]
    RepeatedCandidate(String),
    #[error("ballot omits candidate {0}")]
    MissingCandidate(String),
    #[error("ballot has {got} entries, roster has {expected}")]
    BallotLength { got: usize, expected: usize },
    #[error("multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("profile has no votes")]
    NoVotes,
    #[error("survivor set is empty")]
    EmptySurvivors,
}

/// Returns true if `name` matches `[A-Za-z0-9_+:-]+`.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'+' | b':' | b'-'))
}

/// An ordered set of uniquely named candidates with ids `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Roster {
    names: Vec<String>,
    lookup: HashMap<String, CandidateId>,
}

impl Roster {
    pub fn new<I, S>(names: I) -> Result<Self, ElectionError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(ElectionError::EmptyRoster);
        }
        let mut lookup = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if !is_valid_name(name) {
                return Err(ElectionError::InvalidName(name.clone()));
            }
            if lookup.insert(name.clone(), CandidateId(i)).is_some() {
                return Err(ElectionError::DuplicateName(name.clone()));
            }
        }
        Ok(Roster { names, lookup })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: CandidateId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Option<CandidateId> {
        self.lookup.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<CandidateId, ElectionError> {
        self.id(name)
            .ok_or_else(|| ElectionError::UnknownCandidate(name.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = CandidateId> + '_ {
        (0..self.names.len()).map(CandidateId)
    }

    pub fn candidates(&self) -> impl Iterator<Item = Candidate> + '_ {
        self.names.iter().enumerate().map(|(i, n)| Candidate {
            id: CandidateId(i),
            name: n.clone(),
        })
    }

    /// Formats a sequence of ids as space separated names.
    pub fn format_ids(&self, ids: &[CandidateId]) -> String {
        let mut out = String::new();
        for (i, c) in ids.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.name(*c));
        }
        out
    }
}

/// A strict total order over the whole roster, best first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ballot {
    order: Vec<CandidateId>,
}

impl Ballot {
    /// Builds a ballot, checking that `order` is a permutation of `0..m`.
    pub fn new(order: Vec<CandidateId>, m: usize) -> Result<Self, ElectionError> {
        if order.len() != m {
            return Err(ElectionError::BallotLength {
                got: order.len(),
                expected: m,
            });
        }
        let mut seen = vec![false; m];
        for c in &order {
            if c.0 >= m {
                return Err(ElectionError::IdOutOfRange(c.0));
            }
            if std::mem::replace(&mut seen[c.0], true) {
                return Err(ElectionError::RepeatedCandidate(c.to_string()));
            }
        }
        Ok(Ballot { order })
    }

    /// Builds a ballot without validation. Callers guarantee the invariant.
    pub(crate) fn from_order_unchecked(order: Vec<CandidateId>) -> Self {
        debug_assert!({
            let mut s: Vec<usize> = order.iter().map(|c| c.0).collect();
            s.sort_unstable();
            s.iter().enumerate().all(|(i, &c)| i == c)
        });
        Ballot { order }
    }

    pub fn from_indices(order: &[usize]) -> Result<Self, ElectionError> {
        Ballot::new(order.iter().map(|&i| CandidateId(i)).collect(), order.len())
    }

    pub fn from_names(roster: &Roster, names: &[&str]) -> Result<Self, ElectionError> {
        parse_ballot_names(roster, &names.join(" "))
    }

    /// The roster in id order.
    pub fn identity(m: usize) -> Self {
        Ballot {
            order: (0..m).map(CandidateId).collect(),
        }
    }

    pub fn order(&self) -> &[CandidateId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn top(&self) -> CandidateId {
        self.order[0]
    }

    /// `positions()[c]` is the rank of candidate `c` (0 = best).
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, c) in self.order.iter().enumerate() {
            pos[c.0] = i;
        }
        pos
    }

    pub fn prefers(&self, a: CandidateId, b: CandidateId) -> bool {
        for &c in &self.order {
            if c == a {
                return true;
            }
            if c == b {
                return false;
            }
        }
        false
    }

    /// Exchanges the positions of two candidates.
    pub fn swap_candidates(&mut self, a: CandidateId, b: CandidateId) {
        let pa = self.order.iter().position(|&c| c == a);
        let pb = self.order.iter().position(|&c| c == b);
        if let (Some(pa), Some(pb)) = (pa, pb) {
            self.order.swap(pa, pb);
        }
    }

    pub fn display<'a>(&'a self, roster: &'a Roster) -> impl fmt::Display + 'a {
        DisplayIds {
            roster,
            ids: &self.order,
        }
    }
}

struct DisplayIds<'a> {
    roster: &'a Roster,
    ids: &'a [CandidateId],
}

impl fmt::Display for DisplayIds<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.roster.format_ids(self.ids))
    }
}

/// A block of identical ballots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub multiplicity: u64,
    pub ballot: Ballot,
}

/// A multiset of ballots over a roster, stored as multiplicity groups in
/// insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    roster: Arc<Roster>,
    groups: Vec<Group>,
}

impl Profile {
    pub fn new(roster: Roster, groups: Vec<Group>) -> Result<Self, ElectionError> {
        Profile::with_shared_roster(Arc::new(roster), groups)
    }

    pub fn with_shared_roster(
        roster: Arc<Roster>,
        groups: Vec<Group>,
    ) -> Result<Self, ElectionError> {
        for g in &groups {
            if g.multiplicity == 0 {
                return Err(ElectionError::ZeroMultiplicity);
            }
            if g.ballot.len() != roster.len() {
                return Err(ElectionError::BallotLength {
                    got: g.ballot.len(),
                    expected: roster.len(),
                });
            }
        }
        if groups.is_empty() {
            return Err(ElectionError::NoVotes);
        }
        Ok(Profile { roster, groups })
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn shared_roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn num_candidates(&self) -> usize {
        self.roster.len()
    }

    pub fn total_votes(&self) -> u64 {
        self.groups.iter().map(|g| g.multiplicity).sum()
    }

    /// This profile plus one extra ballot, appended as a new group.
    pub fn with_ballot(&self, ballot: Ballot) -> Profile {
        let mut groups = self.groups.clone();
        groups.push(Group {
            multiplicity: 1,
            ballot,
        });
        Profile {
            roster: Arc::clone(&self.roster),
            groups,
        }
    }

    /// Multiplies every multiplicity by `factor` (> 0).
    pub fn scaled(&self, factor: u64) -> Profile {
        assert!(factor > 0);
        Profile {
            roster: Arc::clone(&self.roster),
            groups: self
                .groups
                .iter()
                .map(|g| Group {
                    multiplicity: g.multiplicity * factor,
                    ballot: g.ballot.clone(),
                })
                .collect(),
        }
    }

    /// Canonical text form: single spaces, groups in insertion order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("candidates:");
        for n in self.roster.names() {
            out.push(' ');
            out.push_str(n);
        }
        out.push('\n');
        for g in &self.groups {
            out.push_str(&g.multiplicity.to_string());
            out.push(':');
            for c in g.ballot.order() {
                out.push(' ');
                out.push_str(self.roster.name(*c));
            }
            out.push('\n');
        }
        out
    }
}

/// A set of candidate ids, stored as a bitset over the roster.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CandidateSet {
    words: Vec<u64>,
    universe: usize,
}

impl CandidateSet {
    pub fn empty(m: usize) -> Self {
        CandidateSet {
            words: vec![0; m.div_ceil(64).max(1)],
            universe: m,
        }
    }

    pub fn full(m: usize) -> Self {
        let mut s = CandidateSet::empty(m);
        for i in 0..m {
            s.insert(CandidateId(i));
        }
        s
    }

    pub fn from_ids<I: IntoIterator<Item = CandidateId>>(m: usize, ids: I) -> Self {
        let mut s = CandidateSet::empty(m);
        for c in ids {
            s.insert(c);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn contains(&self, c: CandidateId) -> bool {
        (self.words[c.0 / 64] >> (c.0 % 64)) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, c: CandidateId) {
        assert!(c.0 < self.universe, "candidate {} outside roster", c.0);
        self.words[c.0 / 64] |= 1 << (c.0 % 64);
    }

    #[inline]
    pub fn remove(&mut self, c: CandidateId) {
        self.words[c.0 / 64] &= !(1 << (c.0 % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = CandidateId> + '_ {
        (0..self.universe)
            .map(CandidateId)
            .filter(move |&c| self.contains(c))
    }

    pub fn to_vec(&self) -> Vec<CandidateId> {
        self.iter().collect()
    }
}

/// Pairwise election counts: `get(a, b)` votes rank `a` above `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseTally {
    m: usize,
    above: Vec<u64>,
}

impl PairwiseTally {
    pub fn zero(m: usize) -> Self {
        PairwiseTally {
            m,
            above: vec![0; m * m],
        }
    }

    pub fn num_candidates(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, a: CandidateId, b: CandidateId) -> u64 {
        self.above[a.0 * self.m + b.0]
    }

    /// `get(a, b) - get(b, a)`.
    #[inline]
    pub fn margin(&self, a: CandidateId, b: CandidateId) -> i64 {
        self.get(a, b) as i64 - self.get(b, a) as i64
    }

    pub fn add_ballot(&mut self, ballot: &[CandidateId], weight: u64) {
        for (i, a) in ballot.iter().enumerate() {
            let row = a.0 * self.m;
            for b in &ballot[i + 1..] {
                self.above[row + b.0] += weight;
            }
        }
    }
}

pub fn pairwise_tally(profile: &Profile) -> PairwiseTally {
    let mut tally = PairwiseTally::zero(profile.num_candidates());
    for g in profile.groups() {
        tally.add_ballot(g.ballot.order(), g.multiplicity);
    }
    tally
}

/// A restricted profile together with the original id of each new id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Restriction {
    pub profile: Profile,
    pub origin: Vec<CandidateId>,
}

impl Restriction {
    /// Maps an id of the restricted roster back to the original roster.
    pub fn original(&self, c: CandidateId) -> CandidateId {
        self.origin[c.0]
    }
}

/// Keeps only the `survivors` in every ballot, preserving relative order and
/// multiplicities. Surviving candidates are renumbered in original id order.
pub fn restrict_profile(
    profile: &Profile,
    survivors: &CandidateSet,
) -> Result<Restriction, ElectionError> {
    if survivors.is_empty() {
        return Err(ElectionError::EmptySurvivors);
    }
    let origin: Vec<CandidateId> = survivors.iter().collect();
    let mut new_id = vec![usize::MAX; profile.num_candidates()];
    for (i, c) in origin.iter().enumerate() {
        new_id[c.0] = i;
    }
    let roster = Roster::new(origin.iter().map(|&c| profile.roster().name(c).to_string()))?;
    let groups = profile
        .groups()
        .iter()
        .map(|g| Group {
            multiplicity: g.multiplicity,
            ballot: Ballot::from_order_unchecked(
                g.ballot
                    .order()
                    .iter()
                    .filter(|c| survivors.contains(**c))
                    .map(|c| CandidateId(new_id[c.0]))
                    .collect(),
            ),
        })
        .collect();
    Ok(Restriction {
        profile: Profile::new(roster, groups)?,
        origin,
    })
}

/// A parse failure with its 1-based line number.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("missing `candidates:` header")]
    MissingHeader,
    #[error("expected `<multiplicity>: <names>`")]
    MalformedLine,
    #[error("bad multiplicity {0:?}")]
    BadMultiplicity(String),
    #[error("non-positive multiplicity")]
    NonPositiveMultiplicity,
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error("{0}")]
    Other(String),
}

impl ParseError {
    pub(crate) fn new(line: usize, kind: impl Into<ParseErrorKind>) -> Self {
        ParseError {
            line,
            kind: kind.into(),
        }
    }
}

/// Yields `(line number, trimmed content)` for every non-blank, non-comment line.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses the names of one ballot line into a validated ballot.
pub(crate) fn parse_ballot_names(roster: &Roster, names: &str) -> Result<Ballot, ElectionError> {
    let m = roster.len();
    let mut seen = vec![false; m];
    let mut order = Vec::with_capacity(m);
    for name in names.split_whitespace() {
        let c = roster.lookup(name)?;
        if std::mem::replace(&mut seen[c.0], true) {
            return Err(ElectionError::RepeatedCandidate(name.to_string()));
        }
        order.push(c);
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(ElectionError::MissingCandidate(
            roster.name(CandidateId(missing)).to_string(),
        ));
    }
    Ok(Ballot::from_order_unchecked(order))
}

pub fn parse_profile(text: &str) -> Result<Profile, ParseError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, ParseErrorKind::MissingHeader))?;
    let names = header
        .strip_prefix("candidates:")
        .ok_or_else(|| ParseError::new(hline, ParseErrorKind::MissingHeader))?;
    let roster = Roster::new(names.split_whitespace()).map_err(|e| ParseError::new(hline, e))?;

    let mut groups = Vec::new();
    let mut last_line = hline;
    for (lineno, line) in lines {
        last_line = lineno;
        let (mult, rest) = line
            .split_once(':')
            .ok_or_else(|| ParseError::new(lineno, ParseErrorKind::MalformedLine))?;
        let mult = mult.trim();
        let multiplicity: i64 = mult
            .parse()
            .map_err(|_| ParseError::new(lineno, ParseErrorKind::BadMultiplicity(mult.into())))?;
        if multiplicity <= 0 {
            return Err(ParseError::new(
                lineno,
                ParseErrorKind::NonPositiveMultiplicity,
            ));
        }
        let ballot = parse_ballot_names(&roster, rest).map_err(|e| ParseError::new(lineno, e))?;
        groups.push(Group {
            multiplicity: multiplicity as u64,
            ballot,
        });
    }
    Profile::new(roster, groups).map_err(|e| ParseError::new(last_line, e))
}
