//! Product covariance over the joint `[x, t]` space.
//!
//! `k([x,t],[x',t']) = k_x(x,x') * k_t(t,t')` where `k_x` is a squared
//! exponential with one shared length-scale and `k_t` is either a second
//! squared exponential or the freeze-thaw decay `beta^alpha / (t+t'+beta)^alpha`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid_input, Result};
use crate::space::JointInput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum KernelKind {
    #[default]
    SeProduct,
    #[cfg_attr(feature = "serde", serde(rename = "freeze-thaw-t"))]
    FreezeThawTime,
}

impl KernelKind {
    pub fn tag(self) -> &'static str {
        match self {
            KernelKind::SeProduct => "se-product",
            KernelKind::FreezeThawTime => "freeze-thaw-t",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "se-product" => Some(KernelKind::SeProduct),
            "freeze-thaw-t" => Some(KernelKind::FreezeThawTime),
            _ => None,
        }
    }
}

/// Hyperparameters that can be fitted, all optimized on a log scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hyper {
    LengthscaleX,
    LengthscaleT,
    NoiseVar,
    FtAlpha,
    FtBeta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelParams {
    pub lengthscale_x: f64,
    pub lengthscale_t: f64,
    pub noise_var: f64,
    pub kind: KernelKind,
    pub ft_alpha: f64,
    pub ft_beta: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            lengthscale_x: 0.3,
            lengthscale_t: 0.3,
            noise_var: 0.05,
            kind: KernelKind::SeProduct,
            ft_alpha: 1.0,
            ft_beta: 1.0,
        }
    }
}

impl KernelParams {
    pub fn se(lengthscale_x: f64, lengthscale_t: f64, noise_var: f64) -> Self {
        KernelParams { lengthscale_x, lengthscale_t, noise_var, ..Default::default() }
    }

    pub fn freeze_thaw(lengthscale_x: f64, alpha: f64, beta: f64, noise_var: f64) -> Self {
        KernelParams {
            lengthscale_x,
            noise_var,
            kind: KernelKind::FreezeThawTime,
            ft_alpha: alpha,
            ft_beta: beta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut vals = alloc::vec![self.lengthscale_x, self.lengthscale_t, self.noise_var];
        if self.kind == KernelKind::FreezeThawTime {
            vals.extend([self.ft_alpha, self.ft_beta]);
        }
        if vals.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(invalid_input!("kernel parameters must be finite and positive: {:?}", self))
        }
    }

    /// The hyperparameters that are free under this kernel kind.
    pub fn free(&self) -> &'static [Hyper] {
        match self.kind {
            KernelKind::SeProduct => &[Hyper::LengthscaleX, Hyper::LengthscaleT, Hyper::NoiseVar],
            KernelKind::FreezeThawTime => {
                &[Hyper::LengthscaleX, Hyper::NoiseVar, Hyper::FtAlpha, Hyper::FtBeta]
            }
        }
    }

    pub fn get(&self, h: Hyper) -> f64 {
        match h {
            Hyper::LengthscaleX => self.lengthscale_x,
            Hyper::LengthscaleT => self.lengthscale_t,
            Hyper::NoiseVar => self.noise_var,
            Hyper::FtAlpha => self.ft_alpha,
            Hyper::FtBeta => self.ft_beta,
        }
    }

    pub fn set(&mut self, h: Hyper, v: f64) {
        match h {
            Hyper::LengthscaleX => self.lengthscale_x = v,
            Hyper::LengthscaleT => self.lengthscale_t = v,
            Hyper::NoiseVar => self.noise_var = v,
            Hyper::FtAlpha => self.ft_alpha = v,
            Hyper::FtBeta => self.ft_beta = v,
        }
    }

    pub fn log_params(&self) -> Vec<f64> {
        self.free().iter().map(|&h| libm::log(self.get(h))).collect()
    }

    pub fn with_log_params(&self, theta: &[f64]) -> KernelParams {
        let mut p = *self;
        for (&h, &v) in self.free().iter().zip(theta) {
            p.set(h, libm::exp(v));
        }
        p
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Time factor of the product kernel.
fn time_factor(t: f64, t2: f64, p: &KernelParams) -> f64 {
    match p.kind {
        KernelKind::SeProduct => {
            let dt = t - t2;
            libm::exp(-dt * dt / (2.0 * p.lengthscale_t * p.lengthscale_t))
        }
        KernelKind::FreezeThawTime => {
            let b = p.ft_beta;
            libm::pow(b / (t + t2 + b), p.ft_alpha)
        }
    }
}

pub(crate) fn kernel_unchecked(a: &JointInput, b: &JointInput, p: &KernelParams) -> f64 {
    let kx = libm::exp(-sq_dist(&a.x, &b.x) / (2.0 * p.lengthscale_x * p.lengthscale_x));
    kx * time_factor(a.t, b.t, p)
}

/// Covariance between two joint inputs.
pub fn kernel(a: &JointInput, b: &JointInput, p: &KernelParams) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(invalid_input!("kernel inputs differ in dimension: {} vs {}", a.dim(), b.dim()));
    }
    Ok(kernel_unchecked(a, b, p))
}

/// `d k / d ln(h)` for one hyperparameter (zero for the noise term).
pub(crate) fn kernel_log_derivative(
    a: &JointInput,
    b: &JointInput,
    p: &KernelParams,
    k: f64,
    h: Hyper,
) -> f64 {
    match h {
        Hyper::LengthscaleX => k * sq_dist(&a.x, &b.x) / (p.lengthscale_x * p.lengthscale_x),
        Hyper::LengthscaleT => {
            let dt = a.t - b.t;
            k * dt * dt / (p.lengthscale_t * p.lengthscale_t)
        }
        Hyper::FtAlpha => {
            let s = a.t + b.t;
            k * p.ft_alpha * (libm::log(p.ft_beta) - libm::log(s + p.ft_beta))
        }
        Hyper::FtBeta => {
            let s = a.t + b.t;
            k * p.ft_alpha * s / (s + p.ft_beta)
        }
        Hyper::NoiseVar => 0.0,
    }
}

fn check_dims(inputs: &[JointInput]) -> Result<()> {
    if let Some(first) = inputs.first() {
        if inputs.iter().any(|z| z.dim() != first.dim()) {
            return Err(invalid_input!("inputs have mixed dimensions"));
        }
    }
    Ok(())
}

/// Noise-free Gram matrix `K = [k(z_i, z_j)]`.
pub fn gram_matrix(inputs: &[JointInput], p: &KernelParams) -> Result<DMatrix<f64>> {
    if inputs.is_empty() {
        return Err(invalid_input!("gram matrix of an empty input list"));
    }
    check_dims(inputs)?;
    Ok(gram_unchecked(inputs, p))
}

pub(crate) fn gram_unchecked(inputs: &[JointInput], p: &KernelParams) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_unchecked(&inputs[i], &inputs[j], p);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

pub(crate) fn cross_cov(inputs: &[JointInput], z: &JointInput, p: &KernelParams) -> Vec<f64> {
    inputs.iter().map(|zi| kernel_unchecked(zi, z, p)).collect()
}
