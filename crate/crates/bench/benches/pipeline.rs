// cargo bench --bench pipeline -- --save-baseline before
// cargo bench --bench pipeline -- --baseline before

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use copula_transport::{
    bin_copula, emd_exact, emd_sinkhorn, empirical_copula_transform, generate_pattern,
    intra_distance, tdc, PatternKind, PatternSpec, Signature, SinkhornParams, TargetSet,
};

fn pattern_panel(kind: PatternKind, t: usize, seed: u64) -> copula_transport::Panel {
    generate_pattern(&PatternSpec {
        kind,
        noise_level: 1.0,
        sample_size: t,
        seed,
    })
    .unwrap()
}

fn pattern_signature(kind: PatternKind, t: usize, m: usize, seed: u64) -> Signature {
    bin_copula(&empirical_copula_transform(&pattern_panel(kind, t, seed)), m).unwrap()
}

fn bench_transform(c: &mut Criterion) {
    let panel = pattern_panel(PatternKind::SineHigh, 2000, 7);
    c.bench_function("copula_transform T=2000 d=2", |b| {
        b.iter(|| empirical_copula_transform(&panel))
    });
    let u = empirical_copula_transform(&panel);
    c.bench_function("bin_copula T=2000 m=16", |b| b.iter(|| bin_copula(&u, 16).unwrap()));
}

fn bench_emd(c: &mut Criterion) {
    let mut group = c.benchmark_group("emd");
    group.sample_size(30);
    for m in [8usize, 16, 32] {
        let a = pattern_signature(PatternKind::SineHigh, 2000, m, 11);
        let b_sig = pattern_signature(PatternKind::Circle, 2000, m, 12);
        let atoms = a.atoms().len().max(b_sig.atoms().len());
        group.bench_with_input(
            BenchmarkId::new("exact", format!("m={m} atoms<={atoms}")),
            &m,
            |b, _| b.iter(|| emd_exact(&a, &b_sig).unwrap().cost()),
        );
        let params = SinkhornParams::default();
        group.bench_with_input(
            BenchmarkId::new("sinkhorn", format!("m={m} atoms<={atoms}")),
            &m,
            |b, _| b.iter(|| emd_sinkhorn(&a, &b_sig, &params).unwrap().cost),
        );
    }
    group.finish();
}

fn bench_dependence(c: &mut Criterion) {
    let mut group = c.benchmark_group("dependence");
    group.sample_size(30);
    let pair = pattern_panel(PatternKind::SineHigh, 500, 21);
    let x = copula_transport::Panel::from_columns(&[pair.column(0)]).unwrap();
    let y = copula_transport::Panel::from_columns(&[pair.column(1)]).unwrap();
    let targets = TargetSet::monotone_pair(2, 16).unwrap();
    group.bench_function("tdc n=500 m=16 monotone targets", |b| {
        b.iter(|| tdc(&x, &y, &targets, 16).unwrap().value)
    });
    let p1 = pattern_panel(PatternKind::Linear, 500, 22);
    let p2 = pattern_panel(PatternKind::Circle, 500, 23);
    group.bench_function("intra_distance n=500 m=16", |b| {
        b.iter(|| intra_distance(&p1, &p2, 16).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_transform, bench_emd, bench_dependence);
criterion_main!(benches);
