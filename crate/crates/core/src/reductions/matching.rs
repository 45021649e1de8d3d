use std::sync::Arc;

use crate::election::{Ballot, CandidateId, Group, Profile, Roster};

use super::{BipartiteGraph, ReductionError, ReductionOutput, Role, RoleMap};

/// Builds the `12k³ + 2k²` votes over `c1..c2k, p` under which `p` survives
/// the preround exactly when it has the bye and the other pairs form a
/// perfect matching of `graph`.
pub fn reduce_matching_r1(graph: &BipartiteGraph) -> Result<ReductionOutput, ReductionError> {
    let k = graph.k();
    let c = |i: usize| CandidateId(i - 1);
    let p = CandidateId(2 * k);
    let mut names: Vec<String> = (1..=2 * k).map(|i| format!("c{i}")).collect();
    names.push("p".into());
    let roster = Arc::new(Roster::new(names)?);
    let m = roster.len();

    let left: Vec<CandidateId> = (1..=k).map(c).collect();
    let right: Vec<CandidateId> = (k + 1..=2 * k).map(c).collect();
    let left_rev: Vec<CandidateId> = left.iter().rev().copied().collect();
    let right_rev: Vec<CandidateId> = right.iter().rev().copied().collect();
    let k = k as u64;

    let mut groups = Vec::new();
    let mut push = |multiplicity: u64, parts: &[&[CandidateId]]| -> Result<(), ReductionError> {
        if multiplicity > 0 {
            groups.push(Group {
                multiplicity,
                ballot: Ballot::new(parts.concat(), m)?,
            });
        }
        Ok(())
    };
    push(6 * k * k * k, &[&right, &[p], &left])?;
    push(3 * k * k, &[&[p], &left_rev, &right_rev])?;
    push(6 * k * k * k - 3 * k * k, &[&left_rev, &right_rev, &[p]])?;
    for want_edge in [true, false] {
        for &ci in &left {
            for &cj in &right {
                let edge = graph.has_edge(ci.0 + 1, cj.0 + 1);
                if edge != want_edge {
                    continue;
                }
                let head = if edge { [ci, cj] } else { [cj, ci] };
                let rest_left: Vec<CandidateId> = left.iter().copied().filter(|&x| x != ci).collect();
                let rest_right: Vec<CandidateId> =
                    right.iter().copied().filter(|&x| x != cj).collect();
                let rev_right: Vec<CandidateId> = rest_right.iter().rev().copied().collect();
                let rev_left: Vec<CandidateId> = rest_left.iter().rev().copied().collect();
                push(1, &[&head, &[p], &rest_left, &rest_right])?;
                push(1, &[&rev_right, &rev_left, &[p], &head])?;
            }
        }
    }

    let mut roles: Vec<Role> = (1..=2 * k as usize).map(Role::Vertex).collect();
    roles.push(Role::Preferred);
    Ok(ReductionOutput {
        profile: Profile::with_shared_roster(roster, groups)?,
        roles: RoleMap::new(roles).expect("single p"),
        schedule: None,
        seed: None,
        blocks: Vec::new(),
    })
}
