use criterion::{criterion_group, criterion_main, Criterion};
use lqreturn::{return_exact, spectra, ModelSpec, PotentialModel, Word};

fn models() -> Vec<(&'static str, PotentialModel)> {
    vec![
        (
            "bernoulli",
            PotentialModel::normalize(&ModelSpec::bernoulli(&[2.0 / 3.0, 1.0 / 3.0])).unwrap(),
        ),
        (
            "markov",
            PotentialModel::normalize(&ModelSpec::markov(&[vec![0.2, 0.8], vec![0.4, 0.6]]))
                .unwrap(),
        ),
    ]
}

fn bench(c: &mut Criterion) {
    for (name, model) in models() {
        c.bench_function(&format!("q_star/{name}"), |b| {
            b.iter(|| spectra::q_star(&model).unwrap())
        });
        c.bench_function(&format!("spectrum_table/{name}"), |b| {
            b.iter(|| spectra::spectrum_table(&model, &spectra::default_grid()).unwrap())
        });
        c.bench_function(&format!("exact_spectrum_n8/{name}"), |b| {
            b.iter(|| return_exact::exact_return_spectrum(&model, 8, 1.0, 1 << 20).unwrap())
        });
        let w = Word::parse("0111111111", 2).unwrap();
        c.bench_function(&format!("return_law_moment/{name}"), |b| {
            b.iter(|| {
                return_exact::return_law(&model, &w, lqreturn::LawMode::Return)
                    .unwrap()
                    .moment(-1.0)
                    .unwrap()
            })
        });
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
