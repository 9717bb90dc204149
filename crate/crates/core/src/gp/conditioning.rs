use nalgebra::DMatrix;

use super::kernel::{gram_unchecked, KernelParams};
use crate::space::JointInput;

/// `ln(lambda_max / lambda_min)` of a symmetric matrix; `+inf` when it is not
/// positive definite.
pub fn log_condition_of(matrix: DMatrix<f64>) -> f64 {
    let eig = matrix.symmetric_eigenvalues();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in eig.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo > 0.0) || !hi.is_finite() {
        return f64::INFINITY;
    }
    libm::log(hi / lo)
}

/// Natural log of the condition number of `K + noise_var * I`.
pub fn log_condition_number(inputs: &[JointInput], params: &KernelParams) -> f64 {
    log_condition_with_nugget(inputs, params, params.noise_var)
}

fn log_condition_with_nugget(inputs: &[JointInput], params: &KernelParams, nugget: f64) -> f64 {
    if inputs.is_empty() {
        return 0.0;
    }
    let mut k = gram_unchecked(inputs, params);
    for i in 0..inputs.len() {
        k[(i, i)] += nugget;
    }
    log_condition_of(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn identity_has_zero_log_condition() {
        let p = KernelParams::se(0.01, 0.01, 1e-6);
        let pts = vec![
            JointInput::new(vec![0.0], 0.0).unwrap(),
            JointInput::new(vec![1.0], 0.0).unwrap(),
            JointInput::new(vec![0.0], 1.0).unwrap(),
        ];
        assert!(log_condition_number(&pts, &p).abs() < 1e-12);
    }

    #[test]
    fn duplicate_pair() {
        let p = KernelParams::se(0.3, 0.3, 1e-6);
        let z = JointInput::new(vec![0.2], 0.4).unwrap();
        let got = log_condition_number(&[z.clone(), z], &p);
        let expected = libm::log((2.0 + 1e-6) / 1e-6);
        assert!((got - expected).abs() < 1e-6, "{got}");
        assert!((got - 14.51).abs() < 0.01);
    }

    #[test]
    fn dense_curve_is_ill_conditioned() {
        // 30 points along t at a fixed x.
        let pts: Vec<JointInput> =
            (0..30).map(|i| JointInput::new(vec![0.5], i as f64 / 29.0).unwrap()).collect();
        let p = KernelParams::se(0.3, 0.3, 1e-6);
        // Eigen-decomposition oracle value (numpy eigvalsh): 16.667.
        let at_1e6 = log_condition_number(&pts, &p);
        assert!((at_1e6 - 16.667).abs() < 0.01, "{at_1e6}");
        let p = KernelParams::se(0.3, 0.3, 1e-10);
        let at_1e10 = log_condition_number(&pts, &p);
        assert!(at_1e10 > 25.0, "{at_1e10}");
    }

    #[test]
    fn not_positive_definite_is_infinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(log_condition_of(m), f64::INFINITY);
    }
}
