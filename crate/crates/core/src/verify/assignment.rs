use std::sync::Arc;

use rayon::prelude::*;

use crate::election::{pairwise_tally, CandidateId, CandidateSet, PairwiseTally};
use crate::protocols::{ProtocolId, Tabulation, TieBreak};
use crate::reductions::{CnfFormula, ReductionOutput, Role};

use super::{split_roster, BallotFamily, CheckConfig, Counterexample, Coverage, PropertyId, PropertyReport, Requirement};

const DEFAULT_SAMPLES: usize = 1000;

/// 1b then 1a.
pub fn check_dpre_properties(
    r: &ReductionOutput,
    formula: &CnfFormula,
    protocol: ProtocolId,
    tiebreak: &TieBreak,
    config: &CheckConfig,
) -> Vec<PropertyReport> {
    let tally = Arc::new(pairwise_tally(&r.profile));
    let vars: Vec<usize> = (0..r.roles.num_vars()).collect();
    vec![
        check_ties(PropertyId::P1b, r, &tally, &vars),
        check_assignments(PropertyId::P1a, r, formula, protocol, tiebreak, config, &tally),
    ]
}

/// 3b (X pairs tied), 3c (auxiliary candidates beat both Y literals by at
/// least 2), then 3a with the auxiliary candidates among the survivors.
pub fn check_ipre_properties(
    r: &ReductionOutput,
    formula: &CnfFormula,
    protocol: ProtocolId,
    tiebreak: &TieBreak,
    config: &CheckConfig,
) -> Vec<PropertyReport> {
    let tally = Arc::new(pairwise_tally(&r.profile));
    let (ys, xs) = match formula.partition() {
        Ok(p) => p,
        Err(_) => (Vec::new(), (0..formula.num_vars()).collect()),
    };
    let mut c3 = None;
    'outer: for &y in &ys {
        let Some(aux) = r.roles.aux(y) else {
            let (plus, _) = r.roles.literal_pair(y);
            c3 = Some(Counterexample::Pairwise {
                a: plus,
                b: plus,
                variable: Some(y + 1),
                extra: None,
                margin: 0,
                requirement: Requirement::AtLeast(2),
            });
            break;
        };
        let (plus, minus) = r.roles.literal_pair(y);
        for lit in [plus, minus] {
            let margin = tally.margin(aux, lit);
            if !Requirement::AtLeast(2).holds(margin) {
                c3 = Some(Counterexample::Pairwise {
                    a: aux,
                    b: lit,
                    variable: Some(y + 1),
                    extra: None,
                    margin,
                    requirement: Requirement::AtLeast(2),
                });
                break 'outer;
            }
        }
    }
    vec![
        check_ties(PropertyId::P3b, r, &tally, &xs),
        PropertyReport::new(PropertyId::P3c, Coverage::Exhaustive, c3),
        check_assignments(PropertyId::P3a, r, formula, protocol, tiebreak, config, &tally),
    ]
}

fn check_ties(id: PropertyId, r: &ReductionOutput, tally: &PairwiseTally, vars: &[usize]) -> PropertyReport {
    let cx = vars.iter().find_map(|&v| {
        let (a, b) = r.roles.literal_pair(v);
        let margin = tally.margin(a, b);
        (margin != 0).then_some(Counterexample::Pairwise {
            a,
            b,
            variable: Some(v + 1),
            extra: None,
            margin,
            requirement: Requirement::Tied,
        })
    });
    PropertyReport::new(id, Coverage::Exhaustive, cx)
}

/// Candidates surviving regardless of the assignment: `p`, clauses,
/// auxiliary candidates and the pairwise winner of each padding pair.
fn fixed_survivors(r: &ReductionOutput, tally: &PairwiseTally, tiebreak: &TieBreak) -> Vec<CandidateId> {
    let mut out = r
        .roles
        .with_role(|role| matches!(role, Role::Preferred | Role::Clause(_) | Role::Aux(_)));
    let padding = r.roles.with_role(|role| role == Role::Padding);
    for pair in padding.chunks(2) {
        if let [a, b] = *pair {
            let m = tally.margin(a, b);
            out.push(if m > 0 || (m == 0 && tiebreak.prefers(a, b)) { a } else { b });
        }
    }
    out
}

/// Assignment `idx` in the order variable 1 most significant, `true` first.
fn assignment(idx: u64, n: usize) -> Vec<bool> {
    (0..n).map(|v| idx >> (n - 1 - v) & 1 == 0).collect()
}

fn check_assignments(
    id: PropertyId,
    r: &ReductionOutput,
    formula: &CnfFormula,
    protocol: ProtocolId,
    tiebreak: &TieBreak,
    config: &CheckConfig,
    tally: &Arc<PairwiseTally>,
) -> PropertyReport {
    let n = r.roles.num_vars();
    let m = r.profile.num_candidates();
    let p = r.roles.preferred();
    let fixed = fixed_survivors(r, tally, tiebreak);
    let results: Vec<(Coverage, Option<Counterexample>)> = (0u64..1 << n)
        .into_par_iter()
        .map(|idx| {
            let a = assignment(idx, n);
            let mut survivors = fixed.clone();
            for (v, &value) in a.iter().enumerate() {
                let (plus, minus) = r.roles.literal_pair(v);
                survivors.push(if value { plus } else { minus });
            }
            let (items, rest) = split_roster(m, &survivors);
            let expected = formula.is_satisfied_by(&a);
            let tab = Tabulation::new(
                protocol,
                &r.profile,
                CandidateSet::from_ids(m, items.iter().copied()),
                Some(tally),
            );
            let failure = |extra: Option<&crate::election::Ballot>| {
                let w = tab.winner(&r.profile, extra, tiebreak);
                ((w == p) != expected).then(|| Counterexample::Election {
                    p,
                    survivors: items.clone(),
                    extra: extra.cloned(),
                    winner: w,
                    p_should_win: expected,
                })
            };
            let mut family = BallotFamily::for_items(config.mode, items.len(), DEFAULT_SAMPLES, config.rng_seed, idx);
            let mut cx = failure(None);
            if cx.is_none() {
                family.for_each(&items, &rest, p, |b| {
                    cx = failure(Some(b));
                    cx.is_none()
                });
            }
            (family.coverage().clone(), cx)
        })
        .collect();
    let mut coverage = Coverage::Exhaustive;
    let mut cx = None;
    for (cov, c) in results {
        coverage = coverage.merge(cov);
        if cx.is_none() {
            cx = c;
        }
    }
    PropertyReport::new(id, coverage, cx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::{Group, Profile};
    use crate::reductions::{build_dpre_instance, reduce_sat};
    use crate::verify::CheckMode;

    fn exhaustive() -> CheckConfig {
        CheckConfig {
            mode: CheckMode::Auto,
            rng_seed: 1,
        }
    }

    #[test]
    fn sat_reductions_pass_both_properties() {
        let f = CnfFormula::from_ints(2, &[&[1, 2], &[-1, -2]], None).unwrap();
        for protocol in [ProtocolId::Plurality, ProtocolId::Borda, ProtocolId::Maximin] {
            let r = reduce_sat(protocol, &f).unwrap();
            let tb = TieBreak::roster_order(r.profile.num_candidates());
            let reports = check_dpre_properties(&r, &f, protocol, &tb, &exhaustive());
            for rep in &reports {
                assert!(rep.passed, "{protocol} {}: {:?}", rep.line(), rep.counterexample);
                assert_eq!(rep.coverage, Coverage::Exhaustive);
            }
            // Dummies do not disturb the checks.
            let d = build_dpre_instance(&r).unwrap();
            let tb = TieBreak::roster_order(d.profile.num_candidates());
            assert!(check_dpre_properties(&d, &f, protocol, &tb, &exhaustive())
                .iter()
                .all(|rep| rep.passed));
        }
    }

    #[test]
    fn flipped_balancing_vote_breaks_1b() {
        let f = CnfFormula::from_ints(2, &[&[1, 2], &[-1, -2]], None).unwrap();
        let mut r = reduce_sat(ProtocolId::Plurality, &f).unwrap();
        let (plus, minus) = r.roles.literal_pair(1);
        let mut groups = r.profile.groups().to_vec();
        let g = &mut groups[0];
        g.multiplicity -= 1;
        let mut ballot = g.ballot.clone();
        ballot.swap_candidates(plus, minus);
        groups.insert(1, Group {
            multiplicity: 1,
            ballot,
        });
        r.profile = Profile::with_shared_roster(r.profile.shared_roster().clone(), groups).unwrap();
        let tb = TieBreak::roster_order(r.profile.num_candidates());
        let reports = check_dpre_properties(&r, &f, ProtocolId::Plurality, &tb, &exhaustive());
        let b = &reports[0];
        assert!(!b.passed);
        match b.counterexample.as_ref().unwrap() {
            Counterexample::Pairwise { variable, margin, .. } => {
                assert_eq!(*variable, Some(2));
                assert_eq!(margin.abs(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            b.counterexample.as_ref().unwrap().replay(&r.profile, ProtocolId::Plurality, &tb),
            Some(true)
        );
    }

    #[test]
    fn unsatisfying_removal_denies_p() {
        let f = CnfFormula::from_ints(2, &[&[1, 2], &[-1, -2]], None).unwrap();
        let r = reduce_sat(ProtocolId::Plurality, &f).unwrap();
        let tb = TieBreak::roster_order(r.profile.num_candidates());
        // Removing x1+ and x2+ leaves clause 1 without a literal.
        let (_, m1) = r.roles.literal_pair(0);
        let (_, m2) = r.roles.literal_pair(1);
        let mut survivors = vec![r.preferred(), m1, m2];
        survivors.extend(r.roles.clauses());
        let set = CandidateSet::from_ids(r.profile.num_candidates(), survivors);
        let w = Tabulation::new(ProtocolId::Plurality, &r.profile, set, None).winner(&r.profile, None, &tb);
        assert_ne!(w, r.preferred());
    }

    #[test]
    fn mislabelled_instance_yields_replayable_election_counterexample() {
        // Claim the formula is (x1) although the votes encode another one.
        let f = CnfFormula::from_ints(2, &[&[1, 2], &[-1, -2]], None).unwrap();
        let r = reduce_sat(ProtocolId::Plurality, &f).unwrap();
        let wrong = CnfFormula::from_ints(2, &[&[1], &[-1, -2]], None).unwrap();
        let tb = TieBreak::roster_order(r.profile.num_candidates());
        let reports = check_dpre_properties(&r, &wrong, ProtocolId::Plurality, &tb, &exhaustive());
        let a = &reports[1];
        assert!(!a.passed);
        let cx = a.counterexample.as_ref().unwrap();
        assert!(matches!(cx, Counterexample::Election { .. }));
        assert_eq!(cx.replay(&r.profile, ProtocolId::Plurality, &tb), Some(true));
    }
}
