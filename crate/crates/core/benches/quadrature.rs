use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use sl3_spherical::spherical::spherical_function_with;
use sl3_spherical::{CartanVector, Exec, QuadratureRule, RuleSize, SpectralParam};

fn spherical(c: &mut Criterion) {
    let h = CartanVector::project([0.4, 0.1, -0.5]);
    let lam = SpectralParam::real([12.0, -3.0, -9.0]);
    let mut group = c.benchmark_group("spherical_function");
    group.sample_size(20);
    for (nb, nag) in [(32, 48), (64, 96), (128, 256)] {
        let rule = QuadratureRule::new(RuleSize::new(nb, nag).unwrap()).unwrap();
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(
                BenchmarkId::new(format!("{exec:?}"), format!("{nb}x{nag}")),
                &rule,
                |b, rule| b.iter(|| spherical_function_with(&h, &lam, rule, exec)),
            );
        }
    }
    group.finish();
}

fn generic_integrand(c: &mut Criterion) {
    let rule = QuadratureRule::new(RuleSize::new(48, 64).unwrap()).unwrap();
    let mut group = c.benchmark_group("integrate_with");
    group.sample_size(20);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| {
                rule.integrate_with(exec, |k| {
                    let m = k.matrix();
                    Complex64::from_polar(1.0, 3.0 * m[(0, 0)] * m[(1, 1)])
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, spherical, generic_integrand);
criterion_main!(benches);
