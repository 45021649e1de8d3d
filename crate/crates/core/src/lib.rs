//! Voting protocols with an elimination preround, manipulation solvers, and
//! the election instances that encode SAT and matching problems.

pub mod election;
pub mod manipulation;
pub mod preround;
pub mod protocols;
pub mod reductions;
pub mod verify;

pub use election::{
    parse_profile, Ballot, Candidate, CandidateId, CandidateSet, ElectionError, Group, ParseError,
    Profile, Roster,
};
pub use manipulation::{
    manipulate_dpre, manipulate_ipre, manipulate_plain, manipulate_rpre, CompletionPolicy,
    ContingencyPlan, DpreSearch, ManipulationAnswer, ManipulationError, SearchBounds, Witness,
};
pub use preround::{
    count_schedules, dpre_winner, enumerate_schedules, ipre_run, rpre_win_probability, IpreSeed,
    PreroundError, Schedule,
};
pub use protocols::{winner, ProtocolError, ProtocolId, TieBreak};
pub use reductions::{BipartiteGraph, CnfFormula, ReductionError, ReductionOutput, RoleMap};
pub use verify::{CheckConfig, CheckMode, PropertyReport};
