use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use preround_core::manipulation::{manipulate_ipre, CompletionPolicy, PlanStrategy, Witness};
use preround_core::preround::{ipre_run, FixedDraws};
use preround_core::reductions::{augment_for_ipre, build_dpre_instance, build_ipre_instance, reduce_sat};
use preround_core::{
    count_schedules, manipulate_dpre, manipulate_plain, manipulate_rpre, rpre_win_probability, winner, Ballot,
    CandidateId, CheckConfig, CnfFormula, DpreSearch, Group, Profile, ProtocolId, Roster, SearchBounds, TieBreak,
};

fn profile(m: usize, ballots: &[Vec<usize>]) -> Profile {
    let roster = Roster::new((0..m).map(|i| format!("c{i}"))).unwrap();
    let groups = ballots
        .iter()
        .map(|b| Group {
            multiplicity: 1,
            ballot: Ballot::from_indices(b).unwrap(),
        })
        .collect();
    Profile::new(roster, groups).unwrap()
}

fn arb_profile(max_m: usize, max_n: usize) -> impl Strategy<Value = Profile> {
    (2..=max_m).prop_flat_map(move |m| {
        prop::collection::vec(Just((0..m).collect::<Vec<_>>()).prop_shuffle(), 1..=max_n)
            .prop_map(move |ballots| profile(m, &ballots))
    })
}

fn all_ballots(m: usize) -> impl Iterator<Item = Ballot> {
    (0..m).permutations(m).map(|o| Ballot::from_indices(&o).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // The witness makes p win on the materialized profile; a refusal means
    // no ballot at all does.
    #[test]
    fn plain_witness_is_valid_and_refusals_are_complete(p in arb_profile(5, 5), target in 0usize..5) {
        let m = p.num_candidates();
        let target = CandidateId(target % m);
        let tb = TieBreak::roster_order(m);
        for protocol in ProtocolId::ALL {
            let ans = manipulate_plain(protocol, &p, target, &tb, &SearchBounds::default()).unwrap();
            match &ans.witness {
                Some(Witness::Ballot(b)) => {
                    prop_assert!(ans.decision);
                    prop_assert_eq!(winner(protocol, &p.with_ballot(b.clone()), &tb), target);
                    let first = all_ballots(m).find(|b| winner(protocol, &p.with_ballot(b.clone()), &tb) == target);
                    prop_assert_eq!(first.as_ref(), Some(b));
                }
                None => {
                    prop_assert!(!ans.decision);
                    prop_assert!(all_ballots(m).all(|b| winner(protocol, &p.with_ballot(b), &tb) != target));
                }
                Some(Witness::Plan(_)) => prop_assert!(false, "plan witness in plain mode"),
            }
        }
    }

    // Best RPRE probability is the maximum over ballots, and its
    // denominator divides the schedule count.
    #[test]
    fn rpre_best_is_the_maximum(p in arb_profile(5, 4)) {
        let m = p.num_candidates();
        let tb = TieBreak::roster_order(m);
        let target = CandidateId(0);
        let zero = BigRational::zero();
        let ans = manipulate_rpre(ProtocolId::Borda, &p, target, &zero, &tb, &SearchBounds::default()).unwrap();
        let best = all_ballots(m)
            .map(|b| rpre_win_probability(ProtocolId::Borda, &p.with_ballot(b), target, &tb).unwrap())
            .max()
            .unwrap();
        prop_assert_eq!(&ans.best_probability, &best);
        let e = BigInt::from(count_schedules(m).unwrap());
        prop_assert!((e % ans.best_probability.denom()).is_zero());
        prop_assert!(ans.best_probability >= zero && ans.best_probability <= BigRational::one());
    }
}

#[test]
fn structured_dpre_search_agrees_with_exhaustive() {
    let formulas = [
        CnfFormula::from_ints(2, &[&[1, 2], &[-1, -2]], None).unwrap(),
        CnfFormula::from_ints(1, &[&[1], &[-1]], None).unwrap(),
        CnfFormula::from_ints(1, &[&[1]], None).unwrap(),
    ];
    for f in &formulas {
        for protocol in [ProtocolId::Plurality, ProtocolId::Borda, ProtocolId::Maximin] {
            let d = build_dpre_instance(&reduce_sat(protocol, f).unwrap()).unwrap();
            let tb = TieBreak::roster_order(d.profile.num_candidates());
            let s = d.schedule.as_ref().unwrap();
            let bounds = SearchBounds::default();
            let run = |search| manipulate_dpre(protocol, &d.profile, d.preferred(), s, &tb, search, &bounds).unwrap();
            let structured = run(DpreSearch::Structured(&d.roles));
            let exhaustive = run(DpreSearch::Exhaustive);
            assert_eq!(structured.decision, exhaustive.decision, "{protocol}");
        }
    }
}

/// Replays the optimal plan on every draw sequence: p wins exactly when the
/// drawn Y values and answered X values satisfy the formula, and the game
/// value is the average realized outcome.
#[test]
fn ipre_plans_win_exactly_on_satisfying_assignments() {
    let formulas = [
        CnfFormula::from_ints(2, &[&[1, 2], &[-1, -2]], Some(1)).unwrap(),
        CnfFormula::from_ints(2, &[&[1], &[2]], Some(1)).unwrap(),
        CnfFormula::from_ints(4, &[&[1, 3], &[-2, 4], &[-3, -4, 2]], Some(2)).unwrap(),
    ];
    for f in &formulas {
        for protocol in [ProtocolId::Plurality, ProtocolId::Maximin] {
            let base = reduce_sat(protocol, f).unwrap();
            let (aug, _) = augment_for_ipre(&base, f, protocol, &CheckConfig::default()).unwrap();
            let inst = build_ipre_instance(&aug, f).unwrap();
            let seed = inst.seed.as_ref().unwrap();
            let p = inst.preferred();
            let tb = TieBreak::roster_order(inst.profile.num_candidates());
            let zero = BigRational::zero();
            let ans = manipulate_ipre(
                protocol,
                &inst.profile,
                p,
                &zero,
                seed,
                &tb,
                &CompletionPolicy::Auto,
                &SearchBounds::default(),
            )
            .unwrap();
            let Some(Witness::Plan(plan)) = &ans.witness else {
                panic!("IPRE answers carry a plan");
            };
            let n = seed.num_steps();
            let mut wins = 0u64;
            for bits in 0..1u64 << n {
                let draws: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
                let mut strategy = PlanStrategy(plan);
                let mut source = FixedDraws::new(draws.clone());
                let (w, transcript) =
                    ipre_run(protocol, &inst.profile, &mut strategy, seed, &mut source, &tb).unwrap();
                let xs: Vec<bool> = transcript.manipulator_answers().iter().map(|&(_, a)| a).collect();
                let assignment: Vec<bool> = draws.iter().chain(&xs).copied().collect();
                assert_eq!(w == p, f.is_satisfied_by(&assignment), "{protocol} draws {draws:?}");
                wins += u64::from(w == p);
            }
            let realized = BigRational::new(BigInt::from(wins), BigInt::from(1u64 << n));
            assert_eq!(realized, ans.best_probability, "{protocol}");
        }
    }
}
