use pbpk_core::model::{ModelParams, ModelVariant, ParamName};
use pbpk_core::nn::{init_network, Activation, Initializer, Network, NetworkConfig};
use pbpk_core::ode::{synthesize_dataset, PlasmaSpec};
use pbpk_core::train::{evaluate_loss, loss_and_gradient, EstimationSpec, LossWeights, PinnProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    net: Network<f64>,
    problem: PinnProblem<f64>,
    spec: EstimationSpec<f64>,
    weights: LossWeights<f64>,
}

fn random_case(k: usize, rng: &mut ChaCha8Rng) -> Case {
    let activation = match k % 4 {
        0 => Activation::Tanh,
        1 => Activation::Sigmoid,
        2 => Activation::Relu,
        _ => Activation::Sin { omega: rng.random_range(0.5..2.0) },
    };
    let cfg = NetworkConfig {
        hidden_layers: rng.random_range(1..4),
        neurons: rng.random_range(2..9),
        activation,
        initializer: if rng.random::<bool>() { Initializer::GlorotNormal } else { Initializer::GlorotUniform },
        seed: rng.random(),
        ..NetworkConfig::default()
    };
    let variant = if rng.random::<bool>() { ModelVariant::Literal } else { ModelVariant::MassConsistent };
    let points = rng.random_range(4..14);
    let data = synthesize_dataset(&ModelParams::default(), &PlasmaSpec::default(), variant, points, 48.0, 1e-3, rng.random()).unwrap();
    let problem = PinnProblem::from_series(&data, variant, rng.random_range(0..6), rng.random::<bool>()).unwrap();
    let n_free = rng.random_range(1..=6);
    let mut spec = EstimationSpec::from_reference(&ModelParams::default(), &ParamName::DEFAULT_FREE[..n_free], 0.5, 2.0).unwrap();
    let raws: Vec<f64> = (0..n_free).map(|_| rng.random_range(-2.0..2.0)).collect();
    spec.set_raws(&raws);
    let mut w = || std::array::from_fn(|_| rng.random_range(0.1..3.0));
    let weights = LossWeights { ic: w(), ode: w(), data: w() };
    Case { net: init_network(&cfg).unwrap(), problem, spec, weights }
}

fn loss_at(case: &Case, theta: &[f64]) -> f64 {
    let mut net = case.net.clone();
    let rest = net.unflatten(theta);
    let mut spec = case.spec.clone();
    spec.set_raws(rest);
    evaluate_loss(&net, &case.problem, &spec, &case.weights).total
}

/// Five-point central stencil.
fn stencil(case: &Case, theta: &[f64], i: usize, h: f64) -> f64 {
    let at = |d: f64| {
        let mut x = theta.to_vec();
        x[i] += d;
        loss_at(case, &x)
    };
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

/// Counts of checked coordinates, of those under ReLU, and of ReLU
/// coordinates skipped at kinks. Panics on the first mismatch.
pub fn gradient_check() -> (usize, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0usize;
    let mut kinked = 0usize;
    let mut relu_checked = 0usize;
    for k in 0..20 {
        let case = random_case(k, &mut rng);
        let relu = case.net.activation() == Activation::Relu;
        let (_, grad) = loss_and_gradient(&case.net, &case.problem, &case.spec, &case.weights).unwrap();
        let mut theta = case.net.flatten();
        theta.extend(case.spec.raws());
        assert_eq!(grad.len(), theta.len());
        for i in 0..theta.len() {
            // The loss reaches 1e5 at initialization, so steps much below 1e-2 lose
            // the small components to cancellation.
            let h = if relu { 1e-3 } else { 1e-2 } * theta[i].abs().max(1.0);
            let fd = stencil(&case, &theta, i, h);
            if relu {
                // A step that crosses a kink shows up as disagreement
                // between two step sizes; such coordinates are skipped. Zero
                // biases put every first-layer unit on its kink at t = 0.
                let fd_half = stencil(&case, &theta, i, h / 2.0);
                if (fd - fd_half).abs() > (1e-5 * fd.abs().max(fd_half.abs())).max(1e-8) {
                    kinked += 1;
                    continue;
                }
            }
            let err = (grad[i] - fd).abs();
            let rel = err / grad[i].abs().max(fd.abs()).max(f64::MIN_POSITIVE);
            assert!(rel < 1e-4 || err < 1e-8, "case {k} ({}) coordinate {i}/{}: reverse {} vs fd {fd} (rel {rel:e})", case.net.activation(), theta.len(), grad[i]);
            checked += 1;
            relu_checked += relu as usize;
        }
    }
    (checked, relu_checked, kinked)
}

