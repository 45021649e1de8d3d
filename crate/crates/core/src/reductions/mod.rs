//! Compilers from CNF formulas and bipartite graphs into election instances.

mod cnf;
mod graph;
mod ipre;
mod matching;
mod sat;

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::election::{
    content_lines, parse_profile, CandidateId, ElectionError, ParseError, ParseErrorKind, Profile,
    Roster,
};
use crate::preround::{IpreSeed, PreroundError, Schedule};
use crate::manipulation::ManipulationError;
use crate::protocols::ProtocolId;
use crate::verify::{OracleError, PropertyReport};

pub use cnf::{CnfFormula, FormulaError, Literal};
pub use graph::BipartiteGraph;
pub use ipre::{augment_for_ipre, build_ipre_instance};
pub use matching::reduce_matching_r1;
pub use sat::{
    balance_literal_ties, build_dpre_instance, reduce_sat, AnnotatedBlock, AnnotatedProfile,
};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("{0} has no SAT reduction")]
    UnsupportedProtocol(ProtocolId),
    #[error("formula has no clauses")]
    NoClauses,
    #[error("formula has no variables")]
    NoVariables,
    #[error("cannot tie the literal pair of variable {var}: forced difference {forced}, {free} free votes")]
    InfeasibleBalance { var: usize, forced: i64, free: u64 },
    #[error("reduction output lacks {0}")]
    Missing(&'static str),
    /// Carries the rejected instance so counterexamples can be named.
    #[error("IPRE augmentation failed its property check")]
    PropertyCheck {
        reports: Vec<PropertyReport>,
        instance: Box<ReductionOutput>,
    },
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error(transparent)]
    Preround(#[from] PreroundError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Manipulation(#[from] ManipulationError),
}

/// What a candidate encodes. Variable and clause indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Preferred,
    Literal(Literal),
    Clause(usize),
    /// The extra candidate guarding a Y variable's literal pair.
    Aux(usize),
    Dummy(CandidateId),
    Padding,
    /// A graph vertex, 1-based as in the graph file.
    Vertex(usize),
}

impl Role {
    fn to_text(self, roster: &Roster) -> String {
        match self {
            Role::Preferred => "p".into(),
            Role::Literal(l) => format!("literal:{l}"),
            Role::Clause(k) => format!("clause:{}", k + 1),
            Role::Aux(v) => format!("aux:{}", v + 1),
            Role::Dummy(owner) => format!("dummy:{}", roster.name(owner)),
            Role::Padding => "padding".into(),
            Role::Vertex(i) => format!("vertex:{i}"),
        }
    }

    fn parse(text: &str, roster: &Roster) -> Option<Role> {
        let index = |s: &str| s.parse::<usize>().ok().filter(|&i| i >= 1);
        Some(match text.split_once(':') {
            None => match text {
                "p" => Role::Preferred,
                "padding" => Role::Padding,
                _ => return None,
            },
            Some(("literal", l)) => {
                let positive = match l.as_bytes().first()? {
                    b'+' => true,
                    b'-' => false,
                    _ => return None,
                };
                Role::Literal(Literal {
                    var: index(&l[1..])? - 1,
                    positive,
                })
            }
            Some(("clause", k)) => Role::Clause(index(k)? - 1),
            Some(("aux", v)) => Role::Aux(index(v)? - 1),
            Some(("dummy", owner)) => Role::Dummy(roster.id(owner)?),
            Some(("vertex", i)) => Role::Vertex(index(i)?),
            _ => return None,
        })
    }
}

/// Total map from candidates to roles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleMap {
    roles: Vec<Role>,
}

impl RoleMap {
    pub fn new(roles: Vec<Role>) -> Result<Self, String> {
        let preferred = roles.iter().filter(|r| **r == Role::Preferred).count();
        if preferred != 1 {
            return Err(format!("expected exactly one p, found {preferred}"));
        }
        let map = RoleMap { roles };
        for v in 0..map.num_vars() {
            if map.literal(Literal::pos(v)).is_none() || map.literal(Literal::neg(v)).is_none() {
                return Err(format!("variable {} lacks a complementary literal pair", v + 1));
            }
        }
        Ok(map)
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn role(&self, c: CandidateId) -> Role {
        self.roles[c.0]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    fn find(&self, role: Role) -> Option<CandidateId> {
        self.roles.iter().position(|r| *r == role).map(CandidateId)
    }

    pub fn preferred(&self) -> CandidateId {
        self.find(Role::Preferred).expect("validated")
    }

    pub fn literal(&self, lit: Literal) -> Option<CandidateId> {
        self.find(Role::Literal(lit))
    }

    /// `(c_{+v}, c_{-v})`.
    pub fn literal_pair(&self, var: usize) -> (CandidateId, CandidateId) {
        (
            self.literal(Literal::pos(var)).expect("validated"),
            self.literal(Literal::neg(var)).expect("validated"),
        )
    }

    pub fn clause(&self, k: usize) -> Option<CandidateId> {
        self.find(Role::Clause(k))
    }

    pub fn aux(&self, var: usize) -> Option<CandidateId> {
        self.find(Role::Aux(var))
    }

    pub fn dummy_of(&self, owner: CandidateId) -> Option<CandidateId> {
        self.find(Role::Dummy(owner))
    }

    pub fn num_vars(&self) -> usize {
        self.roles
            .iter()
            .filter_map(|r| match r {
                Role::Literal(l) => Some(l.var + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn with_role(&self, pred: impl Fn(Role) -> bool) -> Vec<CandidateId> {
        (0..self.roles.len())
            .filter(|&i| pred(self.roles[i]))
            .map(CandidateId)
            .collect()
    }

    pub fn clauses(&self) -> Vec<CandidateId> {
        let mut cs: Vec<(usize, CandidateId)> = self
            .roles
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r {
                Role::Clause(k) => Some((*k, CandidateId(i))),
                _ => None,
            })
            .collect();
        cs.sort();
        cs.into_iter().map(|(_, c)| c).collect()
    }

    pub fn to_text(&self, roster: &Roster) -> String {
        self.roles
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{}: {}\n", r.to_text(roster), roster.name(CandidateId(i))))
            .collect()
    }

    /// Parses `<role>: <candidate-name>` lines; every candidate needs one.
    pub fn parse(text: &str, roster: &Roster) -> Result<Self, ParseError> {
        let err = |line: usize, msg: String| ParseError::new(line, ParseErrorKind::Other(msg));
        let mut roles = vec![None; roster.len()];
        let mut last = 1;
        for (lineno, line) in content_lines(text) {
            last = lineno;
            let (role, name) = line
                .split_once(": ")
                .ok_or_else(|| err(lineno, "expected `<role>: <name>`".into()))?;
            let c = roster
                .lookup(name.trim())
                .map_err(|e| ParseError::new(lineno, e))?;
            let role = Role::parse(role.trim(), roster)
                .ok_or_else(|| err(lineno, format!("unknown role {role:?}")))?;
            if roles[c.0].replace(role).is_some() {
                return Err(err(lineno, format!("candidate {name} has two roles")));
            }
        }
        let roles = roles
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| err(last, format!("no role for {}", roster.name(CandidateId(i))))))
            .collect::<Result<Vec<_>, _>>()?;
        RoleMap::new(roles).map_err(|e| err(last, e))
    }
}

/// Whether a vote block must carry the majority-side placement of the
/// auxiliary candidates (every block except the clause-structured ones).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Majority,
    Clause,
}

#[derive(Clone, Debug)]
pub struct ReductionOutput {
    pub profile: Profile,
    pub roles: RoleMap,
    pub schedule: Option<Schedule>,
    pub seed: Option<IpreSeed>,
    /// Parallel to `profile.groups()`; empty when read back from files.
    pub blocks: Vec<BlockKind>,
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

pub const ELECTION_FILE: &str = "election.vote";
pub const ROLES_FILE: &str = "roles.map";
pub const SCHEDULE_FILE: &str = "schedule.sched";
pub const SEED_FILE: &str = "seed.ipre";

impl ReductionOutput {
    pub fn roster(&self) -> &Roster {
        self.profile.roster()
    }

    pub fn preferred(&self) -> CandidateId {
        self.roles.preferred()
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), OutputError> {
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|source| OutputError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let roster = self.roster();
        write(ELECTION_FILE, self.profile.to_text())?;
        write(ROLES_FILE, self.roles.to_text(roster))?;
        if let Some(s) = &self.schedule {
            write(SCHEDULE_FILE, s.to_text(roster))?;
        }
        if let Some(s) = &self.seed {
            write(SEED_FILE, s.to_text(roster))?;
        }
        Ok(())
    }

    pub fn read_from(dir: &Path) -> Result<Self, OutputError> {
        fn read(dir: &Path, name: &str) -> Result<Option<(String, String)>, OutputError> {
            let path = dir.join(name);
            let shown = path.display().to_string();
            match fs::read_to_string(&path) {
                Ok(text) => Ok(Some((shown, text))),
                Err(e) if e.kind() == io::ErrorKind::NotFound && name != ELECTION_FILE && name != ROLES_FILE => Ok(None),
                Err(source) => Err(OutputError::Io { path: shown, source }),
            }
        }
        let parse_err = |path: &str| {
            let path = path.to_string();
            move |source| OutputError::Parse { path, source }
        };
        let (epath, etext) = read(dir, ELECTION_FILE)?.expect("required file");
        let profile = parse_profile(&etext).map_err(parse_err(&epath))?;
        let (rpath, rtext) = read(dir, ROLES_FILE)?.expect("required file");
        let roles = RoleMap::parse(&rtext, profile.roster()).map_err(parse_err(&rpath))?;
        let schedule = match read(dir, SCHEDULE_FILE)? {
            Some((path, text)) => {
                Some(Schedule::parse(&text, profile.roster()).map_err(parse_err(&path))?)
            }
            None => None,
        };
        let seed = match read(dir, SEED_FILE)? {
            Some((path, text)) => Some(IpreSeed::parse(&text, profile.roster()).map_err(parse_err(&path))?),
            None => None,
        };
        Ok(ReductionOutput {
            profile,
            roles,
            schedule,
            seed,
            blocks: Vec::new(),
        })
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Preferred => f.write_str("p"),
            Role::Literal(l) => write!(f, "literal {l}"),
            Role::Clause(k) => write!(f, "clause {}", k + 1),
            Role::Aux(v) => write!(f, "aux {}", v + 1),
            Role::Dummy(o) => write!(f, "dummy of {o}"),
            Role::Padding => f.write_str("padding"),
            Role::Vertex(i) => write!(f, "vertex {i}"),
        }
    }
}
