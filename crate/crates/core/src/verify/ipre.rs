use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::election::{Ballot, CandidateId};
use crate::manipulation::{manipulate_ipre, CompletionPolicy, SearchBounds};
use crate::protocols::{ProtocolId, TieBreak};
use crate::reductions::{
    augment_for_ipre, build_ipre_instance, reduce_sat, CnfFormula, ReductionError, ReductionOutput,
};

use super::{stochastic_sat_value, CheckConfig, Counterexample, Coverage, PropertyId, PropertyReport};

/// Sample sizes for [`cross_check_ipre`]: the first tie-break policy is the
/// roster order, the others are random; each runs with `completions`
/// random template ballots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IpreCrossCheck {
    pub tiebreaks: usize,
    pub completions: usize,
    pub rng_seed: u64,
}

impl Default for IpreCrossCheck {
    fn default() -> Self {
        IpreCrossCheck {
            tiebreaks: 3,
            completions: 50,
            rng_seed: 0,
        }
    }
}

/// Builds the IPRE instance for `formula` (augmentation checks included)
/// and compares its manipulation value with the stochastic SAT value.
pub fn cross_check_ipre(
    formula: &CnfFormula,
    protocol: ProtocolId,
    check: &CheckConfig,
    cross: &IpreCrossCheck,
) -> Result<(ReductionOutput, PropertyReport), ReductionError> {
    let base = reduce_sat(protocol, formula)?;
    let (augmented, _) = augment_for_ipre(&base, formula, protocol, check)?;
    let instance = build_ipre_instance(&augmented, formula)?;
    let report = cross_check_ipre_instance(&instance, formula, protocol, cross)?;
    Ok((instance, report))
}

pub fn cross_check_ipre_instance(
    instance: &ReductionOutput,
    formula: &CnfFormula,
    protocol: ProtocolId,
    cross: &IpreCrossCheck,
) -> Result<PropertyReport, ReductionError> {
    let seed = instance.seed.as_ref().ok_or(ReductionError::Missing("an IPRE seed"))?;
    let expected = stochastic_sat_value(formula)?;
    let m = instance.profile.num_candidates();
    let p = instance.preferred();
    let mut rng = ChaCha8Rng::seed_from_u64(cross.rng_seed);
    let mut tiebreaks = vec![TieBreak::roster_order(m)];
    while tiebreaks.len() < cross.tiebreaks {
        let tb = TieBreak::random(m, &mut rng);
        if !tiebreaks.contains(&tb) {
            tiebreaks.push(tb);
        }
    }
    let threshold = BigRational::from_integer(0.into());
    let mut order: Vec<CandidateId> = (0..m).map(CandidateId).collect();
    let mut observed = None;
    let mut cx = None;
    'outer: for tb in &tiebreaks {
        for _ in 0..cross.completions {
            order.shuffle(&mut rng);
            let template = Ballot::from_order_unchecked(order.clone());
            let answer = manipulate_ipre(
                protocol,
                &instance.profile,
                p,
                &threshold,
                seed,
                tb,
                &CompletionPolicy::Template(template.clone()),
                &SearchBounds::default(),
            )?;
            let value = answer.best_probability;
            if value != expected {
                cx = Some(Counterexample::GameValue {
                    tiebreak: tb.order().to_vec(),
                    completion: template,
                    observed: value.clone(),
                    expected: expected.clone(),
                });
                observed = Some(value);
                break 'outer;
            }
            observed.get_or_insert(value);
        }
    }
    let observed = observed.unwrap_or_else(|| expected.clone());
    let mut report = PropertyReport {
        property: PropertyId::Value,
        passed: cx.is_none(),
        coverage: Coverage::Sampled {
            n: cross.tiebreaks * cross.completions,
            seed: cross.rng_seed,
        },
        counterexample: cx,
        detail: None,
    };
    report.detail = Some(if report.passed {
        format!("{observed} = stochastic SAT value")
    } else {
        format!("{observed} != stochastic SAT value {expected}")
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::CheckMode;

    fn run(clauses: &[&[i64]], protocol: ProtocolId) -> PropertyReport {
        let f = CnfFormula::from_ints(2, clauses, Some(1)).unwrap();
        let check = CheckConfig {
            mode: CheckMode::Auto,
            rng_seed: 5,
        };
        let cross = IpreCrossCheck {
            tiebreaks: 3,
            completions: 5,
            rng_seed: 11,
        };
        cross_check_ipre(&f, protocol, &check, &cross).unwrap().1
    }

    #[test]
    fn values_agree_with_the_stochastic_oracle() {
        // Variable 1 is y1, variable 2 is x1.
        let cases: [(&[&[i64]], &str); 3] = [
            (&[&[1, 2], &[-1, -2]], "1"),
            (&[&[1], &[2]], "1/2"),
            (&[&[1, 2], &[-1, 2], &[-2]], "0"),
        ];
        for (clauses, value) in cases {
            for protocol in [ProtocolId::Plurality, ProtocolId::Maximin] {
                let rep = run(clauses, protocol);
                assert!(rep.passed, "{protocol} {clauses:?}: {}", rep.line());
                assert_eq!(rep.detail.unwrap(), format!("{value} = stochastic SAT value"));
            }
        }
    }
}
