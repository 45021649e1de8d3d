use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_rational::BigRational;
use num_traits::Zero;

use preround_core::manipulation::{manipulate_ipre, CompletionPolicy};
use preround_core::preround::rpre_win_counts;
use preround_core::reductions::{augment_for_ipre, build_dpre_instance, build_ipre_instance, reduce_matching_r1, reduce_sat};
use preround_core::verify::{check_dpre_properties, count_perfect_matchings};
use preround_core::{
    enumerate_schedules, manipulate_dpre, winner, BipartiteGraph, CheckConfig, CnfFormula, DpreSearch, ProtocolId,
    SearchBounds, TieBreak,
};

fn protocols(c: &mut Criterion) {
    let r = reduce_matching_r1(&BipartiteGraph::complete(3)).unwrap();
    let tb = TieBreak::roster_order(r.profile.num_candidates());
    let mut g = c.benchmark_group("winner_r1_k3");
    for protocol in ProtocolId::ALL {
        g.bench_with_input(BenchmarkId::from_parameter(protocol), &protocol, |b, &p| {
            b.iter(|| winner(p, black_box(&r.profile), &tb))
        });
    }
    g.finish();
}

fn schedules(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_schedules");
    for m in [7usize, 9, 11] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| b.iter(|| enumerate_schedules(m).unwrap()));
    }
    g.finish();
}

fn rpre(c: &mut Criterion) {
    let mut g = c.benchmark_group("rpre_win_counts_r1");
    g.sample_size(10);
    for k in [2usize, 3, 4] {
        let r = reduce_matching_r1(&BipartiteGraph::complete(k)).unwrap();
        let tb = TieBreak::roster_order(r.profile.num_candidates());
        g.bench_with_input(BenchmarkId::from_parameter(k), &r, |b, r| {
            b.iter(|| rpre_win_counts(ProtocolId::Maximin, &r.profile, &tb).unwrap())
        });
    }
    g.finish();
    c.bench_function("perfect_matchings_k10", |b| {
        let graph = BipartiteGraph::complete(10);
        b.iter(|| count_perfect_matchings(black_box(&graph)).unwrap())
    });
}

fn dpre(c: &mut Criterion) {
    let f = CnfFormula::from_ints(1, &[&[1], &[-1]], None).unwrap();
    let d = build_dpre_instance(&reduce_sat(ProtocolId::Borda, &f).unwrap()).unwrap();
    let tb = TieBreak::roster_order(d.profile.num_candidates());
    let s = d.schedule.as_ref().unwrap();
    let bounds = SearchBounds::default();
    let mut g = c.benchmark_group("manipulate_dpre_unsat");
    g.sample_size(10);
    g.bench_function("structured", |b| {
        b.iter(|| manipulate_dpre(ProtocolId::Borda, &d.profile, d.preferred(), s, &tb, DpreSearch::Structured(&d.roles), &bounds))
    });
    g.bench_function("exhaustive", |b| {
        b.iter(|| manipulate_dpre(ProtocolId::Borda, &d.profile, d.preferred(), s, &tb, DpreSearch::Exhaustive, &bounds))
    });
    g.finish();

    let f = CnfFormula::from_ints(3, &[&[1, 2], &[-1, 3], &[-2, -3]], None).unwrap();
    let d = build_dpre_instance(&reduce_sat(ProtocolId::Maximin, &f).unwrap()).unwrap();
    let tb = TieBreak::roster_order(d.profile.num_candidates());
    let mut g = c.benchmark_group("check_dpre_properties");
    g.sample_size(10);
    g.bench_function("maximin_v3_k3", |b| {
        b.iter(|| check_dpre_properties(&d, &f, ProtocolId::Maximin, &tb, &CheckConfig::default()))
    });
    g.finish();
}

fn ipre(c: &mut Criterion) {
    let f = CnfFormula::from_ints(4, &[&[1, 3], &[-2, 4], &[-3, -4, 2]], Some(2)).unwrap();
    let base = reduce_sat(ProtocolId::Plurality, &f).unwrap();
    let (aug, _) = augment_for_ipre(&base, &f, ProtocolId::Plurality, &CheckConfig::default()).unwrap();
    let inst = build_ipre_instance(&aug, &f).unwrap();
    let seed = inst.seed.as_ref().unwrap();
    let tb = TieBreak::roster_order(inst.profile.num_candidates());
    let zero = BigRational::zero();
    let mut g = c.benchmark_group("manipulate_ipre");
    g.sample_size(10);
    g.bench_function("plurality_xy2", |b| {
        b.iter(|| {
            manipulate_ipre(
                ProtocolId::Plurality,
                &inst.profile,
                inst.preferred(),
                &zero,
                seed,
                &tb,
                &CompletionPolicy::Auto,
                &SearchBounds::default(),
            )
            .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, protocols, schedules, rpre, dpre, ipre);
criterion_main!(benches);
