use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{cross_cov, gram_unchecked, kernel_unchecked, KernelParams};
use crate::error::{invalid_input, BoilError, Result};
use crate::space::JointInput;

/// Variance values this far below zero are treated as rounding noise.
const NEGATIVE_VAR_TOLERANCE: f64 = 1e-10;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Training data for one GP: joint inputs with standardized outputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GpDataset {
    inputs: Vec<JointInput>,
    outputs: Vec<f64>,
    raw_outputs: Vec<f64>,
    mean: f64,
    std: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 1.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    // Constant outputs: keep unit scale.
    let std = if std > 1e-12 * (1.0 + mean.abs()) { std } else { 1.0 };
    (mean, std)
}

impl GpDataset {
    pub fn new(inputs: Vec<JointInput>, raw_outputs: Vec<f64>) -> Result<Self> {
        if inputs.len() != raw_outputs.len() {
            return Err(invalid_input!(
                "{} inputs but {} outputs",
                inputs.len(),
                raw_outputs.len()
            ));
        }
        if let Some(first) = inputs.first() {
            if inputs.iter().any(|z| z.dim() != first.dim()) {
                return Err(invalid_input!("inputs have mixed dimensions"));
            }
        }
        if raw_outputs.iter().any(|y| !y.is_finite()) {
            return Err(invalid_input!("outputs must be finite"));
        }
        let mut ds = GpDataset { inputs, outputs: Vec::new(), raw_outputs, mean: 0.0, std: 1.0 };
        ds.restandardize();
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[JointInput] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn raw_outputs(&self) -> &[f64] {
        &self.raw_outputs
    }

    /// `(mean, stddev)` used to standardize the outputs.
    pub fn standardization(&self) -> (f64, f64) {
        (self.mean, self.std)
    }

    /// Recompute mean and stddev from the current raw outputs.
    pub fn restandardize(&mut self) {
        let (mean, std) = mean_std(&self.raw_outputs);
        self.mean = mean;
        self.std = std;
        self.outputs = self.raw_outputs.iter().map(|y| (y - mean) / std).collect();
    }

    /// Replace every raw output (e.g. after recompressing curves) and restandardize.
    pub fn set_raw_outputs(&mut self, raw: Vec<f64>) -> Result<()> {
        if raw.len() != self.len() {
            return Err(invalid_input!("expected {} outputs, got {}", self.len(), raw.len()));
        }
        self.raw_outputs = raw;
        self.restandardize();
        Ok(())
    }

    /// Append one observation, standardized with the current `(mean, stddev)`.
    /// The first observation of an empty dataset sets the standardization.
    pub fn push(&mut self, input: JointInput, raw: f64) -> Result<()> {
        if let Some(first) = self.inputs.first() {
            if first.dim() != input.dim() {
                return Err(invalid_input!("input dimension {} != {}", input.dim(), first.dim()));
            }
        }
        if !raw.is_finite() {
            return Err(invalid_input!("output must be finite"));
        }
        self.inputs.push(input);
        self.raw_outputs.push(raw);
        if self.inputs.len() == 1 {
            self.restandardize();
        } else {
            self.outputs.push((raw - self.mean) / self.std);
        }
        Ok(())
    }

    pub fn destandardize(&self, mu: f64) -> f64 {
        mu * self.std + self.mean
    }
}

/// A GP with its factorization of `K + noise_var * I` cached.
#[derive(Debug, Clone)]
pub struct GpModel {
    dataset: GpDataset,
    params: KernelParams,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Factorizes `K + (noise + jitter) I`, escalating the jitter on failure.
pub(crate) fn factorize(
    inputs: &[JointInput],
    params: &KernelParams,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut a = gram_unchecked(inputs, params);
    for i in 0..inputs.len() {
        a[(i, i)] += params.noise_var;
    }
    factorize_matrix(a)
}

pub(crate) fn factorize_matrix(a: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok((c, 0.0));
    }
    let n = a.nrows();
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut aj = a.clone();
        for i in 0..n {
            aj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(aj) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(BoilError::Numerical(format!(
        "covariance of {n} points not positive definite even with jitter {JITTER_MAX:e}"
    )))
}

impl GpModel {
    pub fn new(dataset: GpDataset, params: KernelParams) -> Result<Self> {
        params.validate()?;
        let mut model = GpModel {
            dataset,
            params,
            chol: None,
            alpha: DVector::zeros(0),
            jitter: 0.0,
        };
        model.rebuild()?;
        Ok(model)
    }

    pub fn empty(params: KernelParams) -> Result<Self> {
        GpModel::new(GpDataset::default(), params)
    }

    fn rebuild(&mut self) -> Result<()> {
        if self.dataset.is_empty() {
            self.chol = None;
            self.alpha = DVector::zeros(0);
            self.jitter = 0.0;
            return Ok(());
        }
        let (chol, jitter) = factorize(&self.dataset.inputs, &self.params)?;
        self.alpha = chol.solve(&DVector::from_column_slice(&self.dataset.outputs));
        self.chol = Some(chol);
        self.jitter = jitter;
        Ok(())
    }

    pub fn dataset(&self) -> &GpDataset {
        &self.dataset
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    /// Jitter that had to be added on top of `noise_var` (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub(crate) fn cholesky(&self) -> Option<&Cholesky<f64, Dyn>> {
        self.chol.as_ref()
    }

    pub fn set_params(&mut self, params: KernelParams) -> Result<()> {
        params.validate()?;
        let old = core::mem::replace(&mut self.params, params);
        if let Err(e) = self.rebuild() {
            self.params = old;
            self.rebuild()?;
            return Err(e);
        }
        Ok(())
    }

    /// Replace the raw outputs (same inputs) and restandardize.
    pub fn set_raw_outputs(&mut self, raw: Vec<f64>) -> Result<()> {
        self.dataset.set_raw_outputs(raw)?;
        self.refresh_alpha();
        Ok(())
    }

    pub fn restandardize(&mut self) {
        self.dataset.restandardize();
        self.refresh_alpha();
    }

    fn refresh_alpha(&mut self) {
        if let Some(chol) = &self.chol {
            self.alpha = chol.solve(&DVector::from_column_slice(&self.dataset.outputs));
        }
    }

    /// Add one observation, extending the factorization in place when possible.
    pub fn push(&mut self, input: JointInput, raw: f64) -> Result<()> {
        let first = self.dataset.is_empty();
        self.dataset.push(input, raw)?;
        if first {
            return self.rebuild();
        }
        let n = self.dataset.len();
        let z = &self.dataset.inputs[n - 1];
        let mut col = DVector::from_vec(cross_cov(&self.dataset.inputs, z, &self.params));
        col[n - 1] += self.params.noise_var + self.jitter;
        let extended = self.chol.as_ref().map(|c| c.insert_column(n - 1, col));
        match extended {
            Some(c) if c.l_dirty().iter().all(|v| v.is_finite()) && c.l_dirty()[(n - 1, n - 1)] > 0.0 => {
                self.alpha = c.solve(&DVector::from_column_slice(&self.dataset.outputs));
                self.chol = Some(c);
                Ok(())
            }
            _ => self.rebuild(),
        }
    }

    /// Posterior `(mean, variance)` at `z` in standardized output units.
    pub fn posterior(&self, z: &JointInput) -> Result<(f64, f64)> {
        if let Some(first) = self.dataset.inputs.first() {
            if first.dim() != z.dim() {
                return Err(invalid_input!("query dimension {} != {}", z.dim(), first.dim()));
            }
        }
        self.posterior_unchecked(z)
    }

    pub(crate) fn posterior_unchecked(&self, z: &JointInput) -> Result<(f64, f64)> {
        let kss = kernel_unchecked(z, z, &self.params);
        let Some(chol) = &self.chol else {
            return Ok((0.0, kss));
        };
        let kstar = DVector::from_vec(cross_cov(&self.dataset.inputs, z, &self.params));
        let mu = kstar.dot(&self.alpha);
        let v = chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .ok_or_else(|| BoilError::Numerical("singular triangular factor".into()))?;
        let var = kss - v.dot(&v);
        Ok((mu, clamp_variance(var)?))
    }

    /// Posterior mean only, skipping the variance solve.
    pub fn posterior_mean(&self, z: &JointInput) -> f64 {
        if self.chol.is_none() {
            return 0.0;
        }
        self.dataset
            .inputs
            .iter()
            .zip(self.alpha.iter())
            .map(|(zi, a)| a * kernel_unchecked(zi, z, &self.params))
            .sum()
    }

    /// Posterior mean in the original output units.
    pub fn posterior_mean_raw(&self, z: &JointInput) -> f64 {
        self.dataset.destandardize(self.posterior_mean(z))
    }

    pub fn destandardize(&self, mu: f64) -> f64 {
        self.dataset.destandardize(mu)
    }
}

pub(crate) fn clamp_variance(var: f64) -> Result<f64> {
    if var >= 0.0 {
        Ok(var)
    } else if var >= -NEGATIVE_VAR_TOLERANCE {
        Ok(0.0)
    } else {
        Err(BoilError::Numerical(format!("negative posterior variance {var:e}")))
    }
}

/// Predictive mean of the cost GP, in cost units.
pub fn posterior_cost_mean(cost_model: &GpModel, z: &JointInput) -> Result<f64> {
    if let Some(first) = cost_model.dataset.inputs.first() {
        if first.dim() != z.dim() {
            return Err(invalid_input!("query dimension {} != {}", z.dim(), first.dim()));
        }
    }
    Ok(cost_model.posterior_mean_raw(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::test_support::{direct_posterior, random_inputs};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(x: f64, t: f64) -> JointInput {
        JointInput::new(vec![x], t).unwrap()
    }

    #[test]
    fn standardization_invariants() {
        let ds = GpDataset::new(vec![z(0.1, 0.0), z(0.2, 0.0)], vec![3.0, 5.0]).unwrap();
        assert_eq!(ds.standardization(), (4.0, 1.0));
        assert_eq!(ds.outputs(), &[-1.0, 1.0]);
        let flat = GpDataset::new(vec![z(0.1, 0.0), z(0.2, 0.0)], vec![7.0, 7.0]).unwrap();
        assert_eq!(flat.standardization(), (7.0, 1.0));
        assert!(GpDataset::new(vec![z(0.1, 0.0)], vec![]).is_err());
    }

    #[test]
    fn noise_free_interpolation_of_single_point() {
        let ds = GpDataset::new(vec![z(0.4, 0.6)], vec![2.5]).unwrap();
        let m = GpModel::new(ds, KernelParams::se(0.3, 0.3, 1e-12)).unwrap();
        let (mu, var) = m.posterior(&z(0.4, 0.6)).unwrap();
        assert!((m.destandardize(mu) - 2.5).abs() < 1e-9);
        assert!(var.abs() < 1e-9);
    }

    #[test]
    fn far_point_recovers_prior() {
        let ds = GpDataset::new(vec![z(0.0, 0.0), z(0.05, 0.0)], vec![1.0, -1.0]).unwrap();
        let m = GpModel::new(ds, KernelParams::se(0.01, 0.01, 1e-4)).unwrap();
        let (mu, var) = m.posterior(&z(1.0, 1.0)).unwrap();
        assert_eq!(mu, 0.0);
        assert_eq!(var, 1.0);
    }

    #[test]
    fn posterior_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let inputs = random_inputs(&mut rng, 5, 2);
            let raw: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = KernelParams::se(rng.random_range(0.2..1.0), rng.random_range(0.2..1.0), 0.01);
            let m = GpModel::new(GpDataset::new(inputs.clone(), raw).unwrap(), p).unwrap();
            let q = random_inputs(&mut rng, 1, 2).pop().unwrap();
            let (mu, var) = m.posterior(&q).unwrap();
            let (mu_o, var_o) = direct_posterior(&inputs, m.dataset().outputs(), &p, &q);
            assert!((mu - mu_o).abs() <= 1e-8, "{mu} vs {mu_o}");
            assert!((var - var_o).abs() <= 1e-8, "{var} vs {var_o}");
        }
    }

    #[test]
    fn cost_mean_examples() {
        let empty = GpModel::empty(KernelParams::default()).unwrap();
        assert_eq!(posterior_cost_mean(&empty, &z(0.5, 0.5)).unwrap(), 0.0);

        let ds = GpDataset::new(vec![z(0.1, 0.0), z(0.9, 1.0)], vec![3.0, 40.0]).unwrap();
        let m = GpModel::new(ds, KernelParams::se(0.3, 0.3, 1e-10)).unwrap();
        assert!((posterior_cost_mean(&m, &z(0.1, 0.0)).unwrap() - 3.0).abs() < 1e-6);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inputs = random_inputs(&mut rng, 4, 1);
        let raw: Vec<f64> = (0..4).map(|_| rng.random_range(1.0..50.0)).collect();
        let p = KernelParams::se(0.5, 0.4, 0.02);
        let m = GpModel::new(GpDataset::new(inputs.clone(), raw).unwrap(), p).unwrap();
        let q = z(0.33, 0.71);
        let (mu_o, _) = direct_posterior(&inputs, m.dataset().outputs(), &p, &q);
        let expected = m.dataset().destandardize(mu_o);
        assert!((posterior_cost_mean(&m, &q).unwrap() - expected).abs() <= 1e-8);
    }

    #[test]
    fn push_extends_factorization_consistently() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inputs = random_inputs(&mut rng, 6, 2);
        let raw: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = KernelParams::se(0.4, 0.3, 0.01);
        let mut incremental =
            GpModel::new(GpDataset::new(inputs[..3].to_vec(), raw[..3].to_vec()).unwrap(), p)
                .unwrap();
        for i in 3..6 {
            incremental.push(inputs[i].clone(), raw[i]).unwrap();
        }
        // Stale standardization is kept until an explicit refresh.
        assert_eq!(incremental.dataset().standardization(), mean_std(&raw[..3]));
        incremental.restandardize();
        let batch = GpModel::new(GpDataset::new(inputs, raw).unwrap(), p).unwrap();
        let q = JointInput::new(vec![0.5, 0.5], 0.5).unwrap();
        let (m1, v1) = incremental.posterior(&q).unwrap();
        let (m2, v2) = batch.posterior(&q).unwrap();
        assert!((v1 - v2).abs() < 1e-10);
        assert!((m1 - m2).abs() < 1e-10);
    }
}
