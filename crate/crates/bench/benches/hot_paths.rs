//! Throughput of the per-frame and per-query hot paths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gazegate_core::dsp::{aec_nlms, gcc_phat_lag, AecState};
use gazegate_core::face::{recognize, EnrollmentDb, FaceEmbedding, EMBEDDING_DIM};
use gazegate_core::stft::stft;
use gazegate_core::synth;
use gazegate_core::wakeword::dtw_distance;

const FS: u32 = 16_000;

fn bench_gcc_phat(c: &mut Criterion) {
    let a = synth::speech_like(4096, 0.1, 1, FS);
    let mut b = vec![0.0; 3];
    b.extend_from_slice(&a[..4093]);
    c.bench_function("gcc_phat_4096", |bench| {
        bench.iter(|| gcc_phat_lag(black_box(&a), black_box(&b), 8).unwrap())
    });
}

fn bench_nlms(c: &mut Criterion) {
    let x = synth::white_noise(FS as usize, 0.1, 2, 0);
    let d: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
    c.bench_function("nlms_1024_taps_1s", |bench| {
        bench.iter(|| {
            aec_nlms(
                black_box(&d),
                black_box(&x),
                AecState::new(1024, 0.5, 1e-6).unwrap(),
            )
            .unwrap()
        })
    });
}

fn frames(n: usize, seed: u64) -> Vec<Vec<f64>> {
    synth::white_noise(n * 13, 1.0, seed, 0)
        .chunks(13)
        .map(<[f64]>::to_vec)
        .collect()
}

fn bench_dtw(c: &mut Criterion) {
    let (a, b) = (frames(80, 3), frames(100, 4));
    c.bench_function("dtw_80x100", |bench| {
        bench.iter(|| dtw_distance(black_box(&a), black_box(&b)).unwrap())
    });
}

fn unit(seed: u64) -> FaceEmbedding {
    FaceEmbedding::normalize(synth::white_noise(EMBEDDING_DIM, 1.0, seed, 0)).unwrap()
}

fn bench_recognize(c: &mut Criterion) {
    let mut db = EnrollmentDb::new(0, 0);
    for i in 0..50 {
        let embs: Vec<_> = (0..5).map(|k| unit(100 + i * 5 + k)).collect();
        db = db.with_embeddings(&format!("id{i:02}"), &embs).unwrap();
    }
    let q = unit(7);
    c.bench_function("recognize_250_records", |bench| {
        bench.iter(|| recognize(black_box(&db), black_box(&q), 0.6).unwrap())
    });
}

fn bench_stft(c: &mut Criterion) {
    let x = synth::speech_like(FS as usize, 0.1, 5, FS);
    c.bench_function("stft_512_128_1s", |bench| {
        bench.iter(|| stft(black_box(&x), 512, 128, FS).unwrap())
    });
}

criterion_group!(
    benches,
    bench_gcc_phat,
    bench_nlms,
    bench_dtw,
    bench_recognize,
    bench_stft
);
criterion_main!(benches);
