use std::sync::Arc;

use crate::election::{Ballot, CandidateId, Group, Profile, Roster};
use crate::preround::IpreSeed;
use crate::protocols::{ProtocolId, TieBreak};
use crate::verify::{check_ipre_properties, CheckConfig, PropertyReport};

use super::sat::append_dummies;
use super::{BlockKind, CnfFormula, ReductionError, ReductionOutput, Role, RoleMap};

/// Adds an auxiliary candidate `a<y>` per Y variable: directly above the
/// higher of its literal pair in majority blocks, last elsewhere. The result
/// is run through the IPRE property checker and rejected unless every
/// property holds.
pub fn augment_for_ipre(
    r: &ReductionOutput,
    formula: &CnfFormula,
    protocol: ProtocolId,
    check: &CheckConfig,
) -> Result<(ReductionOutput, Vec<PropertyReport>), ReductionError> {
    let (ys, _) = formula.partition()?;
    if r.roles.num_vars() != formula.num_vars() {
        return Err(ReductionError::Missing("a literal pair for every variable"));
    }
    if r.blocks.len() != r.profile.groups().len() {
        return Err(ReductionError::Missing("block annotations"));
    }
    let old = r.roster();
    let m0 = old.len();
    let mut names = old.names().to_vec();
    let mut roles = r.roles.roles().to_vec();
    for &y in &ys {
        names.push(format!("a{}", y + 1));
        roles.push(Role::Aux(y));
    }
    let roster = Arc::new(Roster::new(names)?);
    let aux = |i: usize| CandidateId(m0 + i);

    let mut groups = Vec::with_capacity(r.profile.groups().len());
    for (g, kind) in r.profile.groups().iter().zip(&r.blocks) {
        let mut order = g.ballot.order().to_vec();
        for (i, &y) in ys.iter().enumerate() {
            let (plus, minus) = r.roles.literal_pair(y);
            match kind {
                BlockKind::Majority => {
                    let at = order.iter().position(|&c| c == plus || c == minus).unwrap();
                    order.insert(at, aux(i));
                }
                BlockKind::Clause => order.push(aux(i)),
            }
        }
        groups.push(Group {
            multiplicity: g.multiplicity,
            ballot: Ballot::new(order, roster.len())?,
        });
    }
    let out = ReductionOutput {
        profile: Profile::with_shared_roster(roster, groups)?,
        roles: RoleMap::new(roles).expect("extends a valid map"),
        schedule: None,
        seed: None,
        blocks: r.blocks.clone(),
    };
    let tiebreak = TieBreak::roster_order(out.profile.num_candidates());
    let reports = check_ipre_properties(&out, formula, protocol, &tiebreak, check);
    if reports.iter().all(|rep| rep.passed) {
        Ok((out, reports))
    } else {
        Err(ReductionError::PropertyCheck {
            reports,
            instance: Box::new(out),
        })
    }
}

/// Adds dummies, padding pairs and the IPRE seed: X literal pairs face each
/// other, `p` and the clause candidates face their dummies, and each Y pair
/// awaits a draw against its auxiliary candidate and that candidate's dummy.
pub fn build_ipre_instance(
    r: &ReductionOutput,
    formula: &CnfFormula,
) -> Result<ReductionOutput, ReductionError> {
    let (ys, xs) = formula.partition()?;
    if r.roles.num_vars() != formula.num_vars() {
        return Err(ReductionError::Missing("a literal pair for every variable"));
    }
    let aux: Vec<CandidateId> = ys
        .iter()
        .map(|&y| r.roles.aux(y).ok_or(ReductionError::Missing("auxiliary candidates")))
        .collect::<Result<_, _>>()?;
    let p = r.roles.preferred();
    let clauses = r.roles.clauses();
    let mut owners = vec![p];
    owners.extend(&clauses);
    owners.extend(&aux);
    owners.sort();

    let base = xs.len() + 1 + clauses.len();
    let pad = (4 - base % 4) % 4;
    let padding: Vec<(String, Role)> = (1..=2 * pad).map(|i| (format!("z{i}"), Role::Padding)).collect();
    let mut out = append_dummies(r, &owners, &padding)?;
    let roster = out.roster();
    let dummy = |c: CandidateId| out.roles.dummy_of(c).expect("dummy added");
    let pads: Vec<CandidateId> = (1..=2 * pad)
        .map(|i| roster.id(&format!("z{i}")).expect("padding added"))
        .collect();

    let mut first = Vec::new();
    let mut second = Vec::new();
    for &x in &xs {
        let (plus, minus) = r.roles.literal_pair(x);
        first.push(plus);
        second.push(minus);
    }
    for &o in std::iter::once(&p).chain(&clauses) {
        first.push(o);
        second.push(dummy(o));
    }
    for pair in pads.chunks(2) {
        first.push(pair[0]);
        second.push(pair[1]);
    }
    let mut pool = Vec::new();
    for (&y, &a) in ys.iter().zip(&aux) {
        let (plus, minus) = r.roles.literal_pair(y);
        first.push(plus);
        first.push(minus);
        pool.push((a, dummy(a)));
    }
    let k = second.len();
    let seed = IpreSeed::new(k, first, second, pool, out.profile.num_candidates())?;
    out.seed = Some(seed);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::pairwise_tally;
    use crate::reductions::reduce_sat;
    use crate::verify::CheckMode;

    fn config() -> CheckConfig {
        CheckConfig {
            mode: CheckMode::Sampled(50),
            rng_seed: 7,
        }
    }

    #[test]
    fn plurality_layout_for_one_pair() {
        let f = CnfFormula::from_ints(2, &[&[1, 2], &[-1, -2]], Some(1)).unwrap();
        let r = reduce_sat(ProtocolId::Plurality, &f).unwrap();
        let (aug, reports) = augment_for_ipre(&r, &f, ProtocolId::Plurality, &config()).unwrap();
        assert!(reports.iter().all(|rep| rep.passed));
        assert_eq!(aug.profile.num_candidates(), 8);
        let tally = pairwise_tally(&aug.profile);
        let a = aug.roles.aux(0).unwrap();
        let (plus, minus) = aug.roles.literal_pair(0);
        assert!(tally.margin(a, plus) >= 2 && tally.margin(a, minus) >= 2);
        let (xp, xm) = aug.roles.literal_pair(1);
        assert_eq!(tally.margin(xp, xm), 0);

        let inst = build_ipre_instance(&aug, &f).unwrap();
        assert_eq!(inst.profile.num_candidates(), 12);
        let seed = inst.seed.as_ref().unwrap();
        assert_eq!(seed.k(), 4);
        assert_eq!(seed.num_steps(), 1);
        assert_eq!(seed.first()[0], xp);
        assert_eq!(seed.pool()[0].0, a);
    }

    #[test]
    fn padding_restores_multiple_of_four() {
        // |X| = 1, |K| = 1: base k = 3, one padding pair.
        let f = CnfFormula::from_ints(2, &[&[1, 2]], Some(1)).unwrap();
        let r = reduce_sat(ProtocolId::Plurality, &f).unwrap();
        let (aug, _) = augment_for_ipre(&r, &f, ProtocolId::Plurality, &config()).unwrap();
        let inst = build_ipre_instance(&aug, &f).unwrap();
        assert_eq!(inst.seed.as_ref().unwrap().k(), 4);
        assert_eq!(inst.profile.num_candidates() % 4, 0);
        assert_eq!(inst.roles.with_role(|r| r == Role::Padding).len(), 2);
        // |X| = 1, |K| = 4: base k = 6, two padding pairs.
        let f = CnfFormula::from_ints(2, &[&[1], &[2], &[1, 2], &[-1, 2]], Some(1)).unwrap();
        let r = reduce_sat(ProtocolId::Plurality, &f).unwrap();
        let (aug, _) = augment_for_ipre(&r, &f, ProtocolId::Plurality, &config()).unwrap();
        let inst = build_ipre_instance(&aug, &f).unwrap();
        assert_eq!(inst.seed.as_ref().unwrap().k(), 8);
        assert_eq!(inst.roles.with_role(|r| r == Role::Padding).len(), 4);
    }
}
