use std::sync::Arc;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::election::{pairwise_tally, Ballot, CandidateId, CandidateSet, PairwiseTally};
use crate::preround::{count_schedules, enumerate_schedules, ratio, Evaluator};
use crate::protocols::{ProtocolId, Tabulation, TieBreak};
use crate::reductions::{reduce_matching_r1, BipartiteGraph, ReductionError, ReductionOutput};

use super::{
    count_perfect_matchings, BallotFamily, CheckConfig, Counterexample, Coverage, PropertyId,
    PropertyReport, Requirement,
};

const DEFAULT_BALLOT_SAMPLES: usize = 2000;
const DEFAULT_CROSS_SAMPLES: usize = 500;

fn margin_with(tally: &PairwiseTally, a: CandidateId, b: CandidateId, extra: Option<&Ballot>) -> i64 {
    let base = tally.margin(a, b);
    match extra {
        Some(ballot) if ballot.prefers(a, b) => base + 1,
        Some(_) => base - 1,
        None => base,
    }
}

struct RpreChecker<'a> {
    r: &'a ReductionOutput,
    graph: &'a BipartiteGraph,
    tiebreak: &'a TieBreak,
    tally: Arc<PairwiseTally>,
    /// Removal sets with their tabulations over the remaining candidates.
    removals: Vec<(Vec<CandidateId>, Tabulation)>,
}

impl<'a> RpreChecker<'a> {
    fn new(r: &'a ReductionOutput, graph: &'a BipartiteGraph, protocol: ProtocolId, tiebreak: &'a TieBreak) -> Self {
        let k = graph.k();
        let m = r.profile.num_candidates();
        let tally = Arc::new(pairwise_tally(&r.profile));
        let vertices: Vec<CandidateId> = (0..2 * k).map(CandidateId).collect();
        let removals = vertices
            .iter()
            .copied()
            .combinations(k)
            .map(|removed| {
                let active = CandidateSet::from_ids(m, (0..m).map(CandidateId).filter(|c| !removed.contains(c)));
                let tab = Tabulation::new(protocol, &r.profile, active, Some(&tally));
                (removed, tab)
            })
            .collect();
        RpreChecker {
            r,
            graph,
            tiebreak,
            tally,
            removals,
        }
    }

    fn p(&self) -> CandidateId {
        self.r.preferred()
    }

    fn check_2a(&self, extra: Option<&Ballot>) -> Option<Counterexample> {
        let k = self.graph.k();
        let right: Vec<CandidateId> = (k..2 * k).map(CandidateId).collect();
        let p = self.p();
        self.removals.iter().find_map(|(removed, tab)| {
            let should = *removed == right;
            let w = tab.winner(&self.r.profile, extra, self.tiebreak);
            ((w == p) != should).then(|| Counterexample::Election {
                p,
                survivors: tab.active().to_vec(),
                extra: extra.cloned(),
                winner: w,
                p_should_win: should,
            })
        })
    }

    fn check_2b(&self, extra: Option<&Ballot>) -> Option<Counterexample> {
        let k = self.graph.k();
        let p = self.p();
        (k..2 * k).map(CandidateId).find_map(|cj| {
            let margin = margin_with(&self.tally, p, cj, extra);
            let req = Requirement::AtMost(-1);
            (!req.holds(margin)).then(|| Counterexample::Pairwise {
                a: p,
                b: cj,
                variable: None,
                extra: extra.cloned(),
                margin,
                requirement: req,
            })
        })
    }

    fn check_2c(&self, extra: Option<&Ballot>) -> Option<Counterexample> {
        let k = self.graph.k();
        (1..=k)
            .cartesian_product(k + 1..=2 * k)
            .find_map(|(i, j)| {
                let (ci, cj) = (CandidateId(i - 1), CandidateId(j - 1));
                let margin = margin_with(&self.tally, ci, cj, extra);
                let req = if self.graph.has_edge(i, j) {
                    Requirement::AtLeast(1)
                } else {
                    Requirement::AtMost(-1)
                };
                (!req.holds(margin)).then(|| Counterexample::Pairwise {
                    a: ci,
                    b: cj,
                    variable: None,
                    extra: extra.cloned(),
                    margin,
                    requirement: req,
                })
            })
    }
}

/// 2a over every removal of `k` vertex candidates, 2b and 2c by tally, and
/// 2d re-running all three with one added ballot.
pub fn check_rpre_properties(
    r: &ReductionOutput,
    graph: &BipartiteGraph,
    protocol: ProtocolId,
    tiebreak: &TieBreak,
    config: &CheckConfig,
) -> Vec<PropertyReport> {
    let checker = RpreChecker::new(r, graph, protocol, tiebreak);
    let m = r.profile.num_candidates();
    let mut family = BallotFamily::new(config.mode, graph.k() <= 2, DEFAULT_BALLOT_SAMPLES, config.rng_seed, 0);
    let all: Vec<CandidateId> = (0..m).map(CandidateId).collect();
    let mut cx_d = None;
    family.for_each(&all, &[], checker.p(), |b| {
        cx_d = checker
            .check_2a(Some(b))
            .or_else(|| checker.check_2b(Some(b)))
            .or_else(|| checker.check_2c(Some(b)));
        cx_d.is_none()
    });
    vec![
        PropertyReport::new(PropertyId::P2a, Coverage::Exhaustive, checker.check_2a(None)),
        PropertyReport::new(PropertyId::P2b, Coverage::Exhaustive, checker.check_2b(None)),
        PropertyReport::new(PropertyId::P2c, Coverage::Exhaustive, checker.check_2c(None)),
        PropertyReport::new(PropertyId::P2d, family.coverage().clone(), cx_d),
    ]
}

/// Exact equality of `p`'s RPRE win probability with the perfect matching
/// count over the number of schedules, also under every (or sampled)
/// added ballot.
pub fn cross_check_rpre(
    graph: &BipartiteGraph,
    protocol: ProtocolId,
    tiebreak: &TieBreak,
    config: &CheckConfig,
) -> Result<PropertyReport, ReductionError> {
    let r = reduce_matching_r1(graph)?;
    cross_check_rpre_instance(&r, graph, protocol, tiebreak, config)
}

/// As [`cross_check_rpre`] on an already built (possibly edited) instance.
pub fn cross_check_rpre_instance(
    r: &ReductionOutput,
    graph: &BipartiteGraph,
    protocol: ProtocolId,
    tiebreak: &TieBreak,
    config: &CheckConfig,
) -> Result<PropertyReport, ReductionError> {
    let m = r.profile.num_candidates();
    let p = r.preferred();
    let schedules = enumerate_schedules(m)?;
    let matchings = count_perfect_matchings(graph)?;
    let total = count_schedules(m)?;
    let expected = BigRational::new(BigInt::from(matchings), BigInt::from(total));

    let mut ev = Evaluator::new(protocol, &r.profile, tiebreak);
    let observed = ratio(ev.count_wins(&schedules, p, None), schedules.len() as u64);
    let mut cx = (observed != expected).then(|| Counterexample::Probability {
        p,
        extra: None,
        observed: observed.clone(),
        expected: expected.clone(),
    });
    let mut family = BallotFamily::new(config.mode, graph.k() <= 2, DEFAULT_CROSS_SAMPLES, config.rng_seed, 1);
    if cx.is_none() {
        let all: Vec<CandidateId> = (0..m).map(CandidateId).collect();
        family.for_each(&all, &[], p, |b| {
            let prob = ratio(ev.count_wins(&schedules, p, Some(b)), schedules.len() as u64);
            if prob != expected {
                cx = Some(Counterexample::Probability {
                    p,
                    extra: Some(b.clone()),
                    observed: prob,
                    expected: expected.clone(),
                });
            }
            cx.is_none()
        });
    }
    let mut report = PropertyReport::new(PropertyId::Probability, family.coverage().clone(), cx);
    report.detail = Some(if report.passed {
        format!("{observed} = m_B/e")
    } else {
        format!("{observed} != m_B/e = {expected}")
    });
    Ok(report)
}
