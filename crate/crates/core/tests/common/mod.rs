//! Shared finite-difference gradient oracle for the layer tests.
//!
//! The oracle is independent of the analytic backward pass: it evaluates the
//! scalar loss `sum(coeffs .* output)` twice per parameter with a central
//! difference in 64-bit arithmetic and compares against `Network::backward`.

use gapfill_core::network::{Network, NetworkSpec};
use gapfill_core::Tensor2;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-4;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn eval_loss(net: &Network, inputs: &[Tensor2], coeffs: &Array2<f64>, mask_seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let (y, _) = net
        .forward_training(inputs, &mut rng)
        .expect("forward pass in gradient check");
    (y.as_array() * coeffs).sum()
}

/// Checks every parameter gradient and every input gradient of `spec` against
/// central finite differences on one random instance. Returns the worst
/// relative error observed.
pub fn check_gradients(spec: &NetworkSpec, seed: u64, avoid_zero_inputs: bool) -> f64 {
    let net = Network::init(spec.clone(), seed).expect("network init");
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let inputs: Vec<Tensor2> = spec
        .branch_inputs
        .iter()
        .map(|&(t, c)| {
            let data: Vec<f64> = (0..t * c)
                .map(|_| {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    if avoid_zero_inputs {
                        // Keep ReLU kinks farther than the FD step.
                        v.signum() * (v.abs() * 0.9 + 0.05)
                    } else {
                        v
                    }
                })
                .collect();
            Tensor2::from_vec(t, c, data).expect("input shape")
        })
        .collect();

    let out_shape = spec.infer_shapes().expect("valid spec").output_shape;
    let coeffs = Array2::from_shape_simple_fn(out_shape, || rng.random_range(-1.0..1.0));
    let mask_seed = seed.wrapping_add(2);

    // Analytic gradients.
    let mut fwd_rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let (_, caches) = net.forward_training(&inputs, &mut fwd_rng).expect("forward");
    let (grads, input_grads) = net
        .backward(&caches, &Tensor2::from_array(coeffs.clone()))
        .expect("backward");
    let analytic = grads.to_flat();

    let mut worst = 0.0f64;

    // Parameter gradients.
    let base = net.flatten_params();
    let mut probe = net.clone();
    for p in 0..base.len() {
        let mut plus = base.clone();
        plus[p] += FD_STEP;
        probe.set_flat_params(&plus).unwrap();
        let l_plus = eval_loss(&probe, &inputs, &coeffs, mask_seed);

        let mut minus = base.clone();
        minus[p] -= FD_STEP;
        probe.set_flat_params(&minus).unwrap();
        let l_minus = eval_loss(&probe, &inputs, &coeffs, mask_seed);

        let fd = (l_plus - l_minus) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic[p], fd));
    }
    probe.set_flat_params(&base).unwrap();

    // Input gradients.
    for (b, input) in inputs.iter().enumerate() {
        let (t, c) = input.shape();
        let base_vals = input.to_vec();
        for idx in 0..base_vals.len() {
            let mut plus = base_vals.clone();
            plus[idx] += FD_STEP;
            let mut minus = base_vals.clone();
            minus[idx] -= FD_STEP;

            let mut inputs_plus = inputs.clone();
            inputs_plus[b] = Tensor2::from_vec(t, c, plus).unwrap();
            let mut inputs_minus = inputs.clone();
            inputs_minus[b] = Tensor2::from_vec(t, c, minus).unwrap();

            let fd = (eval_loss(&net, &inputs_plus, &coeffs, mask_seed)
                - eval_loss(&net, &inputs_minus, &coeffs, mask_seed))
                / (2.0 * FD_STEP);
            let a = input_grads[b][(idx / c, idx % c)];
            worst = worst.max(relative_error(a, fd));
        }
    }
    worst
}

pub fn single_layer(
    input: (usize, usize),
    layer: gapfill_core::network::LayerSpec,
) -> NetworkSpec {
    NetworkSpec {
        branch_inputs: vec![input],
        branches: vec![vec![layer]],
        head: Vec::new(),
        output_as_column: false,
    }
}
