use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use palm_bench::{lgcp_pattern, thomas_pattern};
use palm_core::models::GaussianField;
use palm_core::{
    fit_palm, rng, GridPartition, ModelFamily, IntegralConfig, LgcpParams, ModelSpec, ObjectiveOptions, PairIndex, PalmFitConfig,
    PalmObjective, PriorTemplate, SamplerConfig, ThomasParams, Window,
};

fn pair_index(c: &mut Criterion) {
    let x = lgcp_pattern(1);
    let mut g = c.benchmark_group("pair_index");
    for r in [0.1, 0.2, 0.4] {
        g.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, &r| {
            b.iter(|| PairIndex::build(black_box(&x), r).unwrap())
        });
    }
    g.finish();
}

fn objective(c: &mut Criterion) {
    let x = lgcp_pattern(2);
    let cfg = IntegralConfig::radial(0.2);
    let pairs = PairIndex::build(&x, 0.2).unwrap();
    let model = ModelSpec::Lgcp(LgcpParams::from_intensity(300.0, 1.0, 0.1).unwrap());
    let mut g = c.benchmark_group("log_palm_lgcp");
    for (name, bins) in [("exact", None), ("binned_1024", Some(1024))] {
        let opts = ObjectiveOptions {
            pair_bins: bins,
            ..Default::default()
        };
        let obj = PalmObjective::new(&x, &pairs, &cfg, None, &opts).unwrap();
        g.bench_function(name, |b| b.iter(|| obj.log_palm(black_box(&model))));
    }
    g.finish();

    let t = thomas_pattern(3);
    let pairs = PairIndex::build(&t, 0.2).unwrap();
    let obj = PalmObjective::new(&t, &pairs, &cfg, None, &ObjectiveOptions::default()).unwrap();
    let model = ModelSpec::Thomas(ThomasParams::new(10.0, 30.0, 0.0025).unwrap());
    c.bench_function("log_palm_thomas_exact", |b| b.iter(|| obj.log_palm(black_box(&model))));
}

fn gaussian_field(c: &mut Criterion) {
    let grid = GridPartition::new(Window::unit_square(), 32, 32).unwrap();
    let field = GaussianField::new(1.0, 0.1, &grid).unwrap();
    let mut r = rng::from_seed(4);
    c.bench_function("gp_sample_32x32", |b| b.iter(|| field.sample(&mut r)));
}

fn short_fit(c: &mut Criterion) {
    let x = lgcp_pattern(5);
    let cfg = PalmFitConfig {
        family: ModelFamily::LgcpConstant,
        integral: IntegralConfig::radial(0.2),
        objective: ObjectiveOptions {
            pair_bins: Some(1024),
            ..Default::default()
        },
        priors: vec![
            PriorTemplate::EmpiricalNormal { sd: 10.0 },
            PriorTemplate::Normal { mean: 0.0, sd: 10f64.sqrt() },
            PriorTemplate::Uniform { lo: -3.0, hi: -1.6 },
        ],
        sampler: SamplerConfig {
            iterations: 2000,
            burn_in: 500,
            thin: 5,
            ..Default::default()
        },
        init: Default::default(),
    };
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    g.bench_function("lgcp_pl_2000_iterations", |b| b.iter(|| fit_palm(&x, None, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, pair_index, objective, gaussian_field, short_fit);
criterion_main!(benches);
