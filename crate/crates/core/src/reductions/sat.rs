use std::sync::Arc;

use crate::election::{Ballot, CandidateId, Group, Profile, Roster};
use crate::preround::Schedule;
use crate::protocols::ProtocolId;

use super::{BlockKind, CnfFormula, Literal, ReductionError, ReductionOutput, Role, RoleMap};

/// A block of identical votes. The complementary pairs of the variables in
/// `free` may be reoriented by balancing; `ballot` lists `c_{+v}` directly
/// above `c_{-v}` for each of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedBlock {
    pub multiplicity: u64,
    pub ballot: Vec<CandidateId>,
    pub free: Vec<usize>,
    pub kind: BlockKind,
}

#[derive(Clone, Debug)]
pub struct AnnotatedProfile {
    pub roster: Roster,
    pub blocks: Vec<AnnotatedBlock>,
    /// `(c_{+v}, c_{-v})` per variable.
    pub pairs: Vec<(CandidateId, CandidateId)>,
}

/// Orients the free complementary pairs so every pair ends exactly tied.
/// The first `(F_v - d_v) / 2` free votes for `v` (in block order) rank
/// `c_{+v}` first, the rest `c_{-v}`; blocks are split where needed.
pub fn balance_literal_ties(
    annotated: &AnnotatedProfile,
) -> Result<(Profile, Vec<BlockKind>), ReductionError> {
    let nvars = annotated.pairs.len();
    let mut forced = vec![0i64; nvars];
    let mut free = vec![0u64; nvars];
    for block in &annotated.blocks {
        let pos: Vec<usize> = {
            let mut pos = vec![0; annotated.roster.len()];
            for (i, c) in block.ballot.iter().enumerate() {
                pos[c.0] = i;
            }
            pos
        };
        for (v, &(plus, minus)) in annotated.pairs.iter().enumerate() {
            if block.free.contains(&v) {
                free[v] += block.multiplicity;
            } else if pos[plus.0] < pos[minus.0] {
                forced[v] += block.multiplicity as i64;
            } else {
                forced[v] -= block.multiplicity as i64;
            }
        }
    }
    let mut plus_first = vec![0u64; nvars];
    for v in 0..nvars {
        let slack = free[v] as i64 - forced[v];
        if slack < 0 || slack % 2 != 0 || slack / 2 > free[v] as i64 {
            return Err(ReductionError::InfeasibleBalance {
                var: v + 1,
                forced: forced[v],
                free: free[v],
            });
        }
        plus_first[v] = (slack / 2) as u64;
    }

    let roster = Arc::new(annotated.roster.clone());
    let mut groups = Vec::new();
    let mut kinds = Vec::new();
    let mut seen = vec![0u64; nvars];
    for block in &annotated.blocks {
        // Votes of this block that still rank `c_{+v}` first, per free variable.
        let quota: Vec<(usize, u64)> = block
            .free
            .iter()
            .map(|&v| (v, plus_first[v].saturating_sub(seen[v]).min(block.multiplicity)))
            .collect();
        let mut cuts: Vec<u64> = quota
            .iter()
            .map(|&(_, q)| q)
            .filter(|&q| q > 0 && q < block.multiplicity)
            .collect();
        cuts.push(0);
        cuts.push(block.multiplicity);
        cuts.sort_unstable();
        cuts.dedup();
        for w in cuts.windows(2) {
            let (start, end) = (w[0], w[1]);
            let mut order = block.ballot.clone();
            for &(v, q) in &quota {
                if start >= q {
                    let (plus, minus) = annotated.pairs[v];
                    let i = order.iter().position(|&c| c == plus).unwrap();
                    let j = order.iter().position(|&c| c == minus).unwrap();
                    order.swap(i, j);
                }
            }
            groups.push(Group {
                multiplicity: end - start,
                ballot: Ballot::new(order, roster.len())?,
            });
            kinds.push(block.kind);
        }
        for &v in &block.free {
            seen[v] += block.multiplicity;
        }
    }
    Ok((Profile::with_shared_roster(roster, groups)?, kinds))
}

/// Candidate layout of a SAT reduction: `p`, the literal pairs in variable
/// order, then the clause candidates.
struct Layout<'f> {
    formula: &'f CnfFormula,
    p: CandidateId,
    pairs: Vec<(CandidateId, CandidateId)>,
    clauses: Vec<CandidateId>,
}

impl<'f> Layout<'f> {
    fn new(formula: &'f CnfFormula) -> Self {
        let n = formula.num_vars();
        Layout {
            formula,
            p: CandidateId(0),
            pairs: (0..n)
                .map(|v| (CandidateId(1 + 2 * v), CandidateId(2 + 2 * v)))
                .collect(),
            clauses: (0..formula.clauses().len())
                .map(|k| CandidateId(1 + 2 * n + k))
                .collect(),
        }
    }

    fn roster(&self) -> Roster {
        let mut names = vec!["p".to_string()];
        for v in 1..=self.pairs.len() {
            names.push(format!("x{v}+"));
            names.push(format!("x{v}-"));
        }
        names.extend((1..=self.clauses.len()).map(|k| format!("k{k}")));
        Roster::new(names).expect("generated names are valid")
    }

    fn roles(&self) -> RoleMap {
        let mut roles = vec![Role::Preferred];
        for v in 0..self.pairs.len() {
            roles.push(Role::Literal(Literal::pos(v)));
            roles.push(Role::Literal(Literal::neg(v)));
        }
        roles.extend((0..self.clauses.len()).map(Role::Clause));
        RoleMap::new(roles).expect("layout is consistent")
    }

    fn literal(&self, l: Literal) -> CandidateId {
        let (plus, minus) = self.pairs[l.var];
        if l.positive {
            plus
        } else {
            minus
        }
    }

    fn all_literals(&self) -> Vec<CandidateId> {
        self.pairs.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    /// Literal candidates of clause `k`, in global order.
    fn in_clause(&self, k: usize) -> Vec<CandidateId> {
        let mut lits: Vec<Literal> = self.formula.clauses()[k].clone();
        lits.sort_by_key(|l| (l.var, !l.positive));
        lits.into_iter().map(|l| self.literal(l)).collect()
    }

    fn not_in_clause(&self, k: usize) -> Vec<CandidateId> {
        let inside = self.in_clause(k);
        self.all_literals()
            .into_iter()
            .filter(|c| !inside.contains(c))
            .collect()
    }

    /// Variables with no literal in clause `k`.
    fn free_in_clause(&self, k: usize) -> Vec<usize> {
        (0..self.pairs.len())
            .filter(|&v| self.formula.clauses()[k].iter().all(|l| l.var != v))
            .collect()
    }

    fn clauses_except(&self, k: usize) -> Vec<CandidateId> {
        self.clauses
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &c)| c)
            .collect()
    }

    fn reversed_clauses(&self) -> Vec<CandidateId> {
        self.clauses.iter().rev().copied().collect()
    }
}

struct Blocks {
    all_vars: Vec<usize>,
    blocks: Vec<AnnotatedBlock>,
}

impl Blocks {
    /// A block over the full literal set, free in every variable.
    fn majority(&mut self, multiplicity: u64, parts: &[&[CandidateId]]) {
        self.push(multiplicity, parts, self.all_vars.clone(), BlockKind::Majority);
    }

    fn push(&mut self, multiplicity: u64, parts: &[&[CandidateId]], free: Vec<usize>, kind: BlockKind) {
        self.blocks.push(AnnotatedBlock {
            multiplicity,
            ballot: parts.concat(),
            free,
            kind,
        });
    }
}

/// Emits the vote blocks encoding `formula` for `protocol` over
/// `{p} ∪ C_L ∪ C_K`, with every complementary literal pair exactly tied.
pub fn reduce_sat(
    protocol: ProtocolId,
    formula: &CnfFormula,
) -> Result<ReductionOutput, ReductionError> {
    if formula.num_vars() == 0 {
        return Err(ReductionError::NoVariables);
    }
    if formula.clauses().is_empty() {
        return Err(ReductionError::NoClauses);
    }
    let lay = Layout::new(formula);
    let nk = lay.clauses.len() as u64;
    let p = [lay.p];
    let lits = lay.all_literals();
    let ck = lay.clauses.clone();
    let ck_rev = lay.reversed_clauses();
    let mut b = Blocks {
        all_vars: (0..formula.num_vars()).collect(),
        blocks: Vec::new(),
    };
    match protocol {
        ProtocolId::Plurality => {
            b.majority(4 * nk + 2, &[&p, &lits, &ck]);
            for (k, &c) in ck.iter().enumerate() {
                b.majority(4 * nk, &[&[c], &lay.clauses_except(k), &lits, &p]);
            }
            for (k, &c) in ck.iter().enumerate() {
                b.push(
                    4,
                    &[&lay.in_clause(k), &[c], &lay.not_in_clause(k), &lay.clauses_except(k), &p],
                    lay.free_in_clause(k),
                    BlockKind::Clause,
                );
            }
        }
        ProtocolId::Borda => {
            let m = (1 + lits.len() + ck.len()) as u64;
            for i in 0..ck.len() {
                b.push(
                    4 * m,
                    &[&ck[i + 1..], &p, &ck[..i], &lay.in_clause(i), &[ck[i]], &lay.not_in_clause(i)],
                    lay.free_in_clause(i),
                    BlockKind::Clause,
                );
            }
            b.majority(4 * m, &[&ck, &p, &lits]);
            b.majority(1, &[&ck, &lits, &p]);
            b.majority(1, &[&ck_rev, &lits, &p]);
            b.majority(4 * nk * m, &[&p, &ck, &lits]);
            b.majority(4 * nk * m, &[&ck_rev, &p, &lits]);
        }
        ProtocolId::Maximin => {
            // Each C_K block is split evenly between the forward and reversed
            // clause order, so clause candidates tie with each other pairwise.
            let both = |b: &mut Blocks, mult: u64, parts: &dyn Fn(&[CandidateId]) -> Vec<Vec<CandidateId>>| {
                for order in [&ck, &ck_rev] {
                    let parts = parts(order);
                    let refs: Vec<&[CandidateId]> = parts.iter().map(Vec::as_slice).collect();
                    b.majority(mult / 2, &refs);
                }
            };
            both(&mut b, 8 * nk, &|c| vec![p.to_vec(), lits.clone(), c.to_vec()]);
            both(&mut b, 8 * nk, &|c| vec![lits.clone(), c.to_vec(), p.to_vec()]);
            both(&mut b, 8 * nk, &|c| vec![c.to_vec(), p.to_vec(), lits.clone()]);
            both(&mut b, 4 * nk, &|c| vec![lits.clone(), p.to_vec(), c.to_vec()]);
            both(&mut b, 4 * nk, &|c| vec![c.to_vec(), lits.clone(), p.to_vec()]);
            for (k, &c) in ck.iter().enumerate() {
                let others = lay.clauses_except(k);
                let reversed: Vec<CandidateId> = others.iter().rev().copied().collect();
                for order in [&others, &reversed] {
                    b.push(
                        2,
                        &[&p, order, &lay.in_clause(k), &[c], &lay.not_in_clause(k)],
                        lay.free_in_clause(k),
                        BlockKind::Clause,
                    );
                }
            }
            both(&mut b, 2, &|c| vec![p.to_vec(), c.to_vec(), lits.clone()]);
            both(&mut b, 2, &|c| vec![c.to_vec(), p.to_vec(), lits.clone()]);
        }
        ProtocolId::Stv => return Err(ReductionError::UnsupportedProtocol(protocol)),
    }
    let annotated = AnnotatedProfile {
        roster: lay.roster(),
        blocks: b.blocks,
        pairs: lay.pairs.clone(),
    };
    let (profile, blocks) = balance_literal_ties(&annotated)?;
    Ok(ReductionOutput {
        profile,
        roles: lay.roles(),
        schedule: None,
        seed: None,
        blocks,
    })
}

/// Appends dummies for `owners` at the bottom of every vote, in order,
/// naming each `d_<owner>`.
pub(crate) fn append_dummies(
    r: &ReductionOutput,
    owners: &[CandidateId],
    extra: &[(String, Role)],
) -> Result<ReductionOutput, ReductionError> {
    let old = r.roster();
    let m0 = old.len();
    let mut names: Vec<String> = old.names().to_vec();
    let mut roles = r.roles.roles().to_vec();
    for &o in owners {
        names.push(format!("d_{}", old.name(o)));
        roles.push(Role::Dummy(o));
    }
    for (name, role) in extra {
        names.push(name.clone());
        roles.push(*role);
    }
    let roster = Arc::new(Roster::new(names)?);
    let tail: Vec<CandidateId> = (m0..roster.len()).map(CandidateId).collect();
    let groups = r
        .profile
        .groups()
        .iter()
        .map(|g| {
            let order = [g.ballot.order(), &tail].concat();
            Ok(Group {
                multiplicity: g.multiplicity,
                ballot: Ballot::new(order, roster.len())?,
            })
        })
        .collect::<Result<Vec<_>, ReductionError>>()?;
    Ok(ReductionOutput {
        profile: Profile::with_shared_roster(roster, groups)?,
        roles: RoleMap::new(roles).map_err(|_| ReductionError::Missing("a consistent role map"))?,
        schedule: None,
        seed: None,
        blocks: r.blocks.clone(),
    })
}

/// Adds one bottom-ranked dummy per non-literal candidate and the schedule
/// pairing each literal with its complement and every other original with
/// its dummy.
pub fn build_dpre_instance(r: &ReductionOutput) -> Result<ReductionOutput, ReductionError> {
    let owners = r
        .roles
        .with_role(|role| !matches!(role, Role::Literal(_) | Role::Dummy(_) | Role::Padding));
    let mut out = append_dummies(r, &owners, &[])?;
    let mut pairs: Vec<(CandidateId, CandidateId)> =
        (0..r.roles.num_vars()).map(|v| r.roles.literal_pair(v)).collect();
    for &o in &owners {
        pairs.push((o, out.roles.dummy_of(o).expect("just added")));
    }
    out.schedule = Some(Schedule::new(pairs, None, out.profile.num_candidates())?);
    Ok(out)
}
