use criterion::{criterion_group, criterion_main, Criterion};
use ising_emachine::emachine::{analyze_block_chain, DEFAULT_MERGE_TOLERANCE};
use ising_emachine::markov;
use ising_emachine::oracle;
use ising_emachine_bench::{nn, nnn, range_three};
use std::hint::black_box;

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_stochastic");
    for (name, ts) in [("nn", nn()), ("nnn", nnn()), ("range3", range_three().1)] {
        group.bench_function(name, |b| {
            b.iter(|| markov::solve_stochastic(black_box(&ts)).unwrap())
        });
    }
    group.finish();
}

fn machine(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze_block_chain");
    for (name, ts) in [("nn", nn()), ("nnn", nnn()), ("range3", range_three().1)] {
        let chain = markov::solve_stochastic(&ts).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| analyze_block_chain(black_box(&chain), DEFAULT_MERGE_TOLERANCE).unwrap())
        });
    }
    group.finish();
}

fn oracles(c: &mut Criterion) {
    let ts = nnn();
    let lc = markov::local_characteristics(&ts);
    let (h, _) = range_three();
    c.bench_function("quadratic_system_solve/nnn", |b| {
        b.iter(|| oracle::quadratic_system_solve(ts.blocks(), black_box(&lc)).unwrap())
    });
    c.bench_function("local_characteristics/nnn", |b| {
        b.iter(|| markov::local_characteristics(black_box(&ts)))
    });
    c.bench_function("naive_substitution/range3", |b| {
        b.iter(|| oracle::naive_substitution(black_box(&h), 1.1).unwrap())
    });
}

criterion_group!(benches, solve, machine, oracles);
criterion_main!(benches);
