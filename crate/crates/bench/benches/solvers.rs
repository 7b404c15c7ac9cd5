use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use scma_core::channel::{draw_channel, noise_variance_from_snr_db, ChannelModel};
use scma_core::decode::{log_mpa, map_oracle, mcmc_decode, ActiveContext, McmcParams};
use scma_core::delayest::{fb_lasso, stack_shift_matrices, FbOptions, ShiftBlock};
use scma_core::random::{complex_normal, rng_from_seed};
use scma_core::txchain::generate_pilot;
use scma_core::{CodebookSet, FactorGraph, C64};

fn lasso(c: &mut Criterion) {
    let mut rng = rng_from_seed(1);
    let (s, d) = (56usize, 42usize);
    let pilots: Vec<Vec<C64>> = (0..3).map(|_| generate_pilot(s, d, 1.0, &mut rng).unwrap()).collect();
    let blocks = pilots
        .iter()
        .enumerate()
        .map(|(u, p)| ShiftBlock::new(u, p[..s - d].to_vec(), d))
        .collect();
    let t = stack_shift_matrices(blocks).unwrap();
    let mut w = vec![C64::new(0.0, 0.0); s];
    for (u, p) in pilots.iter().enumerate() {
        let shift = 7 * u;
        for (n, v) in p[..s - d].iter().enumerate() {
            w[n + shift] += v;
        }
    }
    for v in &mut w {
        *v += complex_normal(&mut rng, 0.1);
    }
    let opts = FbOptions {
        lambda: 1.0,
        sigma: 0.1f64.sqrt(),
        ..FbOptions::default()
    };
    c.bench_function("fb_lasso S=56 D=42 eta=3", |b| b.iter(|| fb_lasso(&t, black_box(&w), &opts).unwrap()));
}

fn detectors(c: &mut Criterion) {
    let codebooks = CodebookSet::default_for(&FactorGraph::build(4, 6, 2).unwrap(), 4).unwrap();
    let sigma2 = noise_variance_from_snr_db(10.0);
    let mut rng = rng_from_seed(2);
    let channel = draw_channel(ChannelModel::Rayleigh, codebooks.graph(), sigma2, &mut rng).unwrap();
    let users: Vec<usize> = (0..6).collect();
    let mut y = vec![C64::new(0.0, 0.0); 4];
    for &u in &users {
        let cw = codebooks.user(u).codeword(rng.random_range(0..4));
        for (k, v) in y.iter_mut().enumerate() {
            *v += channel.coefficient(k, u) * cw[k] + complex_normal(&mut rng, sigma2 / 6.0);
        }
    }
    let ctx = ActiveContext::from_codebooks(y, &users, &codebooks, &channel);
    let params = McmcParams::default();
    c.bench_function("log_mpa 6 iterations", |b| b.iter(|| log_mpa(black_box(&ctx), sigma2, 6).unwrap()));
    c.bench_function("mcmc_decode Ns=15 N2=4", |b| {
        b.iter(|| mcmc_decode(black_box(&ctx), sigma2, &params).unwrap())
    });
    c.bench_function("map_oracle 4096 states", |b| b.iter(|| map_oracle(black_box(&ctx), sigma2).unwrap()));
}

criterion_group!(benches, lasso, detectors);
criterion_main!(benches);
