//! Independent dense-algebra oracles for tests: plain Gaussian elimination,
//! no Cholesky and no nalgebra solvers.
#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::kernel::{kernel_unchecked, KernelParams};
use crate::space::JointInput;

pub fn random_inputs<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<JointInput> {
    (0..n)
        .map(|_| {
            let x = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            JointInput::new(x, rng.random_range(0.0..1.0)).unwrap()
        })
        .collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Determinant by elimination.
pub fn gauss_det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

fn noisy_gram(inputs: &[JointInput], p: &KernelParams) -> Vec<Vec<f64>> {
    let n = inputs.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = kernel_unchecked(&inputs[i], &inputs[j], p);
        }
        a[i][i] += p.noise_var;
    }
    a
}

pub fn direct_posterior(
    inputs: &[JointInput],
    y: &[f64],
    p: &KernelParams,
    q: &JointInput,
) -> (f64, f64) {
    let a = noisy_gram(inputs, p);
    let ks: Vec<f64> = inputs.iter().map(|z| kernel_unchecked(z, q, p)).collect();
    let w = gauss_solve(a.clone(), y.to_vec());
    let v = gauss_solve(a, ks.clone());
    let mu = ks.iter().zip(&w).map(|(a, b)| a * b).sum();
    let var = kernel_unchecked(q, q, p) - ks.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    (mu, var)
}

/// Log marginal likelihood without the hyperprior term.
pub fn direct_lml(inputs: &[JointInput], y: &[f64], p: &KernelParams) -> f64 {
    let a = noisy_gram(inputs, p);
    let w = gauss_solve(a.clone(), y.to_vec());
    let quad: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
    let n = y.len() as f64;
    -0.5 * quad - 0.5 * libm::log(gauss_det(a)) - 0.5 * n * libm::log(2.0 * core::f64::consts::PI)
}
