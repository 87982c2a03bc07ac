#![allow(dead_code)]

use mcls_core::data::{Dataset, FeatureSpec, Instance, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random all-categorical dataset with both classes present.
pub fn random_categorical(r: &mut ChaCha8Rng, max_features: usize, max_rows: usize) -> Dataset {
    loop {
        let d = r.random_range(1..=max_features);
        let n = r.random_range(4..=max_rows);
        let cards: Vec<usize> = (0..d).map(|_| r.random_range(2..=4)).collect();
        let features = cards
            .iter()
            .enumerate()
            .map(|(j, &k)| FeatureSpec::categorical(format!("f{j}"), (0..k).map(|c| format!("c{c}"))))
            .collect();
        let schema = Schema::new("y", features).unwrap();
        let instances: Vec<Instance> = (0..n)
            .map(|i| {
                let values = cards.iter().map(|&k| r.random_range(0..k) as f64).collect();
                Instance::new(i, values, r.random_range(0..2))
            })
            .collect();
        let ds = Dataset::new(schema, instances).unwrap();
        if ds.has_both_classes() {
            return ds;
        }
    }
}

/// Numeric dataset with a noisy linear label.
pub fn random_numeric(r: &mut ChaCha8Rng, d: usize, n: usize) -> Dataset {
    let schema = Schema::new("y", (0..d).map(|j| FeatureSpec::numeric(format!("x{j}"))).collect()).unwrap();
    let w: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut instances: Vec<Instance> = (0..n)
        .map(|i| {
            let x: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
            let z: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + r.random_range(-0.5..0.5);
            Instance::new(i, x, u8::from(z > 0.0))
        })
        .collect();
    instances[0].label = 0;
    instances[1].label = 1;
    Dataset::new(schema, instances).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}
