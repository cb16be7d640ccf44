use super::{ModelParams, TrainConfig};
use crate::error::{Error, Result};

/// Elementwise RMSprop: `s = rho * s + (1 - rho) * g^2`,
/// `theta -= lr * g / (sqrt(s) + eps)`.
pub fn rmsprop_update(theta: &mut [f64], grad: &[f64], state: &mut [f64], lr: f64, rho: f64, eps: f64) {
    for ((t, &g), s) in theta.iter_mut().zip(grad).zip(state.iter_mut()) {
        *s = rho * *s + (1.0 - rho) * g * g;
        *t -= lr * g / (s.sqrt() + eps);
    }
}

/// One optimizer step over every tensor. `state` starts as zeros shaped like
/// `params`. Non-finite gradients leave everything untouched and return an
/// error.
pub fn rmsprop_step(params: &mut ModelParams, grads: &ModelParams, state: &mut ModelParams, config: &TrainConfig) -> Result<()> {
    if params.tensor_shapes() != grads.tensor_shapes() || params.tensor_shapes() != state.tensor_shapes() {
        return Err(Error::Config("optimizer tensors do not match parameter shapes".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient contains NaN or infinity".into()));
    }
    let g = grads.tensors();
    for ((theta, (_, grad)), s) in params.tensors_mut().into_iter().zip(g).zip(state.tensors_mut()) {
        rmsprop_update(theta, grad, s, config.learning_rate, config.rms_decay, config.rms_epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_arithmetic_single_scalar() {
        let (mut theta, mut s) = ([2.0], [0.0]);
        rmsprop_update(&mut theta, &[1.0], &mut s, 0.01, 0.9, 1e-8);
        assert!((s[0] - 0.1).abs() < 1e-16);
        let expected = 2.0 - 0.01 / (0.1f64.sqrt() + 1e-8);
        assert_eq!(theta[0], expected);
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        let cfg = TrainConfig::default();
        let mut rng = crate::kinematics::testutil::seeded(3);
        let mut p = ModelParams::initialized(6, 2, 3, 4, &mut rng);
        let before = p.clone();
        let mut state = p.zeros_like();
        rmsprop_step(&mut p, &before.zeros_like(), &mut state, &cfg).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn two_steps_match_a_naive_reference() {
        let cfg = TrainConfig {
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let mut rng = crate::kinematics::testutil::seeded(4);
        let mut p = ModelParams::initialized(3, 1, 2, 2, &mut rng);
        let g1 = ModelParams::initialized(3, 1, 2, 2, &mut rng);
        let g2 = ModelParams::initialized(3, 1, 2, 2, &mut rng);

        let flat = |m: &ModelParams| -> Vec<f64> { m.tensors().iter().flat_map(|(_, d)| d.to_vec()).collect() };
        let (mut theta, mut s) = (flat(&p), vec![0.0; flat(&p).len()]);
        for g in [flat(&g1), flat(&g2)] {
            for i in 0..theta.len() {
                s[i] = 0.9 * s[i] + (1.0 - 0.9) * g[i] * g[i];
                theta[i] -= 0.05 * g[i] / (s[i].sqrt() + 1e-8);
            }
        }

        let mut state = p.zeros_like();
        rmsprop_step(&mut p, &g1, &mut state, &cfg).unwrap();
        rmsprop_step(&mut p, &g2, &mut state, &cfg).unwrap();
        assert_eq!(flat(&p), theta);
        assert_eq!(flat(&state), s);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let cfg = TrainConfig::default();
        let mut p = ModelParams::zeros(3, 1, 2, 2);
        let mut g = p.zeros_like();
        g.head_bias[0] = f64::NAN;
        let mut state = p.zeros_like();
        assert!(matches!(rmsprop_step(&mut p, &g, &mut state, &cfg), Err(Error::NonFinite(_))));
        assert_eq!(p, ModelParams::zeros(3, 1, 2, 2));
    }
}
