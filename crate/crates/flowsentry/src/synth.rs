//! Seeded synthetic flow datasets for tests, demos, and the desk-scale
//! learning checks.

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::flowdata::{AttackType, Dataset, FlowRecord, FlowSchema};
use crate::seeds;

/// Two Gaussian classes in `dims` dimensions, unit variance, class means
/// separated by `separation` standard deviations along every axis. Half the
/// rows are benign, half attack, interleave-shuffled by the seed.
pub fn two_gaussians(rows: usize, dims: usize, separation: f64, seed: u64) -> Dataset {
    assert!(rows >= 2 && dims >= 1);
    let schema = FlowSchema::new(
        (0..dims).map(|j| format!("f{j:02}")).collect(),
        "Label".to_string(),
        vec![],
    )
    .expect("synthetic schema is valid");
    let mut rng = seeds::rng(seeds::derive(seed, "synth", 0));
    let mut records = Vec::with_capacity(rows);
    for i in 0..rows {
        let attack = i % 2 == 1;
        let shift = if attack { separation } else { 0.0 };
        let features: Vec<f64> = (0..dims).map(|_| gaussian(&mut rng) + shift).collect();
        records.push(FlowRecord {
            features,
            label_raw: if attack { "DoS Synthetic".into() } else { "BENIGN".into() },
            label_binary: u8::from(attack),
            attack_type: if attack { AttackType::Dos } else { AttackType::Benign },
            synthetic: false,
        });
    }
    // deterministic shuffle so class blocks do not align with batches
    use rand::seq::SliceRandom;
    records.shuffle(&mut rng);
    Dataset {
        schema,
        rows: records,
        provenance: vec![PathBuf::from(format!("synthetic://two_gaussians/{seed}"))],
    }
}

/// Standard normal via Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
