//! Seeded synthetic datasets used by the examples, tests and the bundled benchmark.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, FeatureSpec, Instance, Schema};
use crate::error::Result;
use crate::seed;

pub const BENCHMARK_ROWS: usize = 600;

/// Feature names of the behavioural benchmark, in column order.
pub const BENCHMARK_FEATURES: [&str; 6] = [
    "communication",
    "social_interaction",
    "module",
    "play",
    "gestures",
    "stereotype",
];

pub fn benchmark_schema() -> Schema {
    Schema::new(
        "diagnosis",
        vec![
            FeatureSpec::numeric("communication"),
            FeatureSpec::numeric("social_interaction"),
            FeatureSpec::categorical("module", ["m1", "m2", "m3", "m4"]),
            FeatureSpec::numeric("play"),
            FeatureSpec::numeric("gestures"),
            FeatureSpec::numeric("stereotype"),
        ],
    )
    .expect("static schema is valid")
}

/// Six behavioural scores; the label depends on `social_interaction` and
/// `gestures` through a noisy non-linear score, the other four are noise.
pub fn benchmark(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seed::rng(seed::derive(seed, &["benchmark"]));
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let label_noise = Normal::new(0.0, 0.7).expect("valid normal");
    let instances = (0..n)
        .map(|id| {
            let communication = std_normal.sample(&mut rng);
            let social = std_normal.sample(&mut rng);
            let module = rng.random_range(0..4) as f64;
            let play = rng.random_range(0.0..10.0);
            let gestures = std_normal.sample(&mut rng);
            let stereotype = std_normal.sample(&mut rng);
            let z = social + gestures + 0.8 * social * gestures + label_noise.sample(&mut rng);
            Instance::new(
                id,
                vec![communication, social, module, play, gestures, stereotype],
                u8::from(z > 0.0),
            )
        })
        .collect();
    Dataset::new(benchmark_schema(), instances)
}

/// One categorical feature named `key` whose category fixes the label
/// (even index → 0, odd → 1), placed at a seed-chosen column among five
/// label-independent noise features.
pub fn label_determined(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seed::rng(seed::derive(seed, &["label-determined"]));
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let key_at = rng.random_range(0..6);
    let mut noise = vec![
        FeatureSpec::numeric("noise_a"),
        FeatureSpec::numeric("noise_b"),
        FeatureSpec::numeric("noise_c"),
        FeatureSpec::categorical("noise_d", ["x", "y", "z"]),
        FeatureSpec::categorical("noise_e", ["u", "v", "w"]),
    ];
    noise.insert(key_at, FeatureSpec::categorical("key", ["k0", "k1", "k2", "k3"]));
    let schema = Schema::new("label", noise)?;
    let instances = (0..n)
        .map(|id| {
            let key = id % 4;
            let mut values: Vec<f64> = schema
                .features
                .iter()
                .map(|f| match f.cardinality() {
                    Some(k) => rng.random_range(0..k) as f64,
                    None => std_normal.sample(&mut rng),
                })
                .collect();
            values[key_at] = key as f64;
            Instance::new(id, values, (key % 2) as u8)
        })
        .collect();
    Dataset::new(schema, instances)
}
