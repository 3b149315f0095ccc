use botflow_core::eval::prf1;
use botflow_core::model::{train_dense_nn, DenseNet, ModelParams, NnParams, Predictor};
use botflow_core::FEATURE_COUNT;
use rand::Rng;

mod common;

#[test]
fn default_architecture_parameter_counts() {
    let net = DenseNet::new(FEATURE_COUNT, &NnParams::default().hidden, 0);
    assert_eq!(net.trainable_param_count(), 39_681);
    assert_eq!(net.non_trainable_param_count(), 768);
    assert_eq!(net.trainable_params().len(), 39_681);
}

/// Relative error `|a - b| / (|a| + |b|)` between analytic and central
/// finite-difference gradients, taken over the whole parameter vector.
fn gradient_error(net: &DenseNet, xs: &[f64], ys: &[u8]) -> f64 {
    let (_, grad) = net.loss_and_gradient(xs, ys);
    let theta = net.trainable_params();
    let h = 1e-6;
    let mut probe = net.clone();
    let numeric: Vec<f64> = (0..theta.len())
        .map(|i| {
            let mut t = theta.clone();
            t[i] = theta[i] + h;
            probe.set_trainable_params(&t);
            let up = probe.loss_and_gradient(xs, ys).0;
            t[i] = theta[i] - h;
            probe.set_trainable_params(&t);
            let down = probe.loss_and_gradient(xs, ys).0;
            (up - down) / (2.0 * h)
        })
        .collect();
    let diff: f64 = grad
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = grad.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / norm
}

#[test]
fn backprop_matches_finite_differences() {
    for draw in 0..20 {
        let mut r = common::rng(draw);
        let mut net = DenseNet::new(4, &[3], draw);
        let theta: Vec<f64> = (0..net.trainable_param_count())
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        net.set_trainable_params(&theta);
        let xs: Vec<f64> = (0..8 * 4).map(|_| r.random_range(-2.0..2.0)).collect();
        let ys: Vec<u8> = (0..8).map(|i| (i % 2) as u8).collect();
        let err = gradient_error(&net, &xs, &ys);
        assert!(err < 1e-4, "draw {draw}: relative error {err}");
    }
}

#[test]
fn zero_output_layer_scores_one_half() {
    let mut net = DenseNet::new(5, &[4, 3], 1);
    net.zero_output_layer();
    let mut r = common::rng(1);
    for _ in 0..10 {
        let x: Vec<f64> = (0..5).map(|_| r.random_range(-5.0..5.0)).collect();
        assert_eq!(net.predict_proba(&x), 0.5);
    }
}

#[test]
fn parameter_vector_round_trips() {
    let mut net = DenseNet::new(3, &[5, 2], 9);
    let theta: Vec<f64> = (0..net.trainable_param_count()).map(|i| i as f64 * 0.01).collect();
    net.set_trainable_params(&theta);
    assert_eq!(net.trainable_params(), theta);
}

#[test]
fn small_network_learns_a_linear_boundary() {
    let ds = common::random_dataset(11, 400, 3, |x| u8::from(x[0] - x[1] > 0.0));
    let p = NnParams {
        hidden: vec![16, 8],
        epochs: 30,
        batch_size: 16,
        ..NnParams::default()
    };
    let m = train_dense_nn(&ds, &p).unwrap();
    let f1 = prf1(ds.labels(), &m.predict(&ds).unwrap(), None).unwrap().f1;
    assert!(f1 > 0.95, "f1 {f1}");
    assert_eq!(m.training.loss_history.len(), 30);
    let h = &m.training.loss_history;
    assert!(h[h.len() - 1] < h[0]);
    assert_eq!(m, train_dense_nn(&ds, &p).unwrap());
    let ModelParams::Dense(net) = &m.parameters else {
        panic!("not a dense net")
    };
    // Running variances move away from their initial value of one.
    assert!(net.hidden[0].norm.moving_var.iter().any(|v| (v - 1.0).abs() > 1e-3));
}
