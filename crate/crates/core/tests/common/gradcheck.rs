//! Central-difference gradient oracle for the encoder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use saudi_corpus::model::{
    loss_and_gradients, mlm_corrupt, Batch, ClassExample, EncoderParams, ModelConfig,
    TrainingConfig,
};

/// Gradient norms below this are treated as zero: the key-projection bias,
/// for one, provably receives no gradient because a per-row constant added to
/// attention scores leaves the softmax unchanged.
pub const ZERO_GRADIENT_FLOOR: f64 = 1e-6;

/// Desk-preset parameters with every tensor perturbed away from its
/// initialization, so layer-norm scales, biases and the classifier all carry
/// non-trivial values.
pub fn perturbed_desk(seed: u64) -> EncoderParams {
    let mut params = EncoderParams::init(&ModelConfig::desk(50), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let noise = Normal::new(0.0, 0.3).unwrap();
    for (_, t) in params.tensors_mut() {
        for x in t.data_mut() {
            *x += noise.sample(&mut rng);
        }
    }
    params
}

pub fn mixed_batch() -> Batch {
    let cfg = TrainingConfig {
        mask_fraction: 0.4,
        ..TrainingConfig::default()
    };
    let seqs = [vec![2, 17, 33, 8, 41, 12, 3], vec![2, 5, 49, 20, 3]];
    Batch {
        mlm: seqs
            .iter()
            .enumerate()
            .map(|(i, s)| mlm_corrupt(s, &cfg, i as u64, 50).unwrap())
            .collect(),
        classify: vec![
            ClassExample {
                ids: vec![2, 9, 30, 44, 3],
                label: 1,
            },
            ClassExample {
                ids: vec![2, 6, 7, 3],
                label: 0,
            },
        ],
    }
}

/// Per-tensor relative error
/// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖, ZERO_GRADIENT_FLOOR)`.
pub struct TensorCheck {
    pub name: String,
    pub relative_error: f64,
    pub analytic_norm: f64,
}

pub fn finite_difference_check(params: &EncoderParams, batch: &Batch, h: f64) -> Vec<TensorCheck> {
    let (_, analytic) = loss_and_gradients(params, batch).expect("analytic gradients");
    let analytic: Vec<(String, Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|(n, t)| (n, t.data().to_vec()))
        .collect();
    let mut probe = params.clone();
    let mut checks = Vec::new();
    for (ti, (name, grad)) in analytic.iter().enumerate() {
        let mut numeric = vec![0.0; grad.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let original = probe.tensors()[ti].1.data()[i];
            set(&mut probe, ti, i, original + h);
            let plus = loss_and_gradients(&probe, batch).expect("loss").0;
            set(&mut probe, ti, i, original - h);
            let minus = loss_and_gradients(&probe, batch).expect("loss").0;
            set(&mut probe, ti, i, original);
            *slot = (plus - minus) / (2.0 * h);
        }
        let diff = norm(grad.iter().zip(&numeric).map(|(a, b)| a - b));
        let a = norm(grad.iter().copied());
        let n = norm(numeric.iter().copied());
        let relative_error = diff / a.max(n).max(ZERO_GRADIENT_FLOOR);
        checks.push(TensorCheck {
            name: name.clone(),
            relative_error,
            analytic_norm: a,
        });
    }
    checks
}

fn set(params: &mut EncoderParams, tensor: usize, index: usize, value: f64) {
    let mut tensors = params.tensors_mut();
    tensors[tensor].1.data_mut()[index] = value;
}

fn norm(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|x| x * x).sum::<f64>().sqrt()
}
