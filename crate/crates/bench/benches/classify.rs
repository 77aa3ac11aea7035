use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use texclass::classify::{classify_image_fast_with, classify_image_naive_with};
use texclass::descriptors::{code_planes, DescriptorConfig, DescriptorKind, MULTI_SCALE};
use texclass::{train_model_set, ModelSet, Raster, Recipe};

fn setup(size: usize, kind: DescriptorKind, multi: bool, window: usize) -> (Raster, ModelSet) {
    let mosaic = Recipe::standard(size, 1).generate().unwrap();
    let config = if multi {
        DescriptorConfig::new(kind, MULTI_SCALE.to_vec()).unwrap()
    } else {
        DescriptorConfig::single(kind, 8, 1).unwrap()
    };
    let models = train_model_set(&mosaic.raster, &mosaic.training, &config, window).unwrap();
    (mosaic.raster, models)
}

fn planes(c: &mut Criterion) {
    let mut group = c.benchmark_group("code_planes_256");
    for kind in [DescriptorKind::Lbpriu, DescriptorKind::Wld, DescriptorKind::WldVar] {
        let (raster, models) = setup(256, kind, true, 16);
        group.bench_function(BenchmarkId::from_parameter(kind), |b| {
            b.iter(|| code_planes(&raster, models.config()).unwrap())
        });
    }
    group.finish();
}

fn paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("wld_8_1_w16_128");
    group.sample_size(10);
    let (raster, models) = setup(128, DescriptorKind::Wld, false, 16);
    group.bench_function("naive", |b| {
        b.iter(|| classify_image_naive_with(&raster, &models, 1).unwrap())
    });
    group.bench_function("fast", |b| {
        b.iter(|| classify_image_fast_with(&raster, &models, 1).unwrap())
    });
    group.finish();
}

fn fast_sizes(c: &mut Criterion) {
    let mut group = c.benchmark_group("fast_wld_w40");
    group.sample_size(10);
    for size in [128, 256, 512] {
        let (raster, models) = setup(size, DescriptorKind::Wld, false, 40);
        group.bench_function(BenchmarkId::from_parameter(size), |b| {
            b.iter(|| classify_image_fast_with(&raster, &models, 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, planes, paths, fast_sizes);
criterion_main!(benches);
