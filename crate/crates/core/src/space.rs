//! Search space over hyperparameters and the iteration budget.
//!
//! Every model in the crate works on the unit cube: `x` is mapped to
//! `[0, 1]^d` (through `ln` for log-scaled dimensions) and the iteration
//! count `t` to `[0, 1]` over `[t_min, t_max]`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid_input, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_scale"))]
    pub scale: Scale,
}

#[cfg(feature = "serde")]
fn default_scale() -> Scale {
    Scale::Linear
}

impl Dimension {
    pub fn linear(name: &str, lower: f64, upper: f64) -> Self {
        Dimension { name: name.into(), lower, upper, scale: Scale::Linear }
    }

    pub fn log(name: &str, lower: f64, upper: f64) -> Self {
        Dimension { name: name.into(), lower, upper, scale: Scale::Log }
    }

    fn to_unit(&self, v: f64) -> f64 {
        let u = match self.scale {
            Scale::Linear => (v - self.lower) / (self.upper - self.lower),
            Scale::Log => {
                (libm::log(v) - libm::log(self.lower)) / (libm::log(self.upper) - libm::log(self.lower))
            }
        };
        u.clamp(0.0, 1.0)
    }

    fn value_at(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self.scale {
            Scale::Linear => self.lower + u * (self.upper - self.lower),
            Scale::Log => {
                let (lo, hi) = (libm::log(self.lower), libm::log(self.upper));
                libm::exp(lo + u * (hi - lo)).clamp(self.lower, self.upper)
            }
        }
    }
}

/// Box bounds for `d` hyperparameters plus the iteration range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchSpace {
    pub dims: Vec<Dimension>,
    pub t_min: u32,
    pub t_max: u32,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>, t_min: u32, t_max: u32) -> Result<Self> {
        let space = SearchSpace { dims, t_min, t_max };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(invalid_input!("search space needs at least one dimension"));
        }
        for d in &self.dims {
            if !(d.lower.is_finite() && d.upper.is_finite() && d.lower < d.upper) {
                return Err(invalid_input!("dimension {}: lower must be < upper", d.name));
            }
            if d.scale == Scale::Log && d.lower <= 0.0 {
                return Err(invalid_input!("dimension {}: log scale needs positive bounds", d.name));
            }
        }
        if self.t_min < 1 || self.t_min >= self.t_max {
            return Err(invalid_input!(
                "iteration range must satisfy 1 <= t_min < t_max (got {}..{})",
                self.t_min,
                self.t_max
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn t_span(&self) -> f64 {
        f64::from(self.t_max - self.t_min)
    }

    pub fn to_unit(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(invalid_input!("expected {} hyperparameters, got {}", self.dim(), x.len()));
        }
        Ok(self.dims.iter().zip(x).map(|(d, &v)| d.to_unit(v)).collect())
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(u).map(|(d, &v)| d.value_at(v)).collect()
    }

    pub fn t_to_unit(&self, t: f64) -> f64 {
        ((t - f64::from(self.t_min)) / self.t_span()).clamp(0.0, 1.0)
    }

    pub fn t_from_unit(&self, s: f64) -> f64 {
        f64::from(self.t_min) + s.clamp(0.0, 1.0) * self.t_span()
    }

    /// Nearest whole iteration count for a normalized budget.
    pub fn t_round(&self, s: f64) -> u32 {
        let t = libm::round(self.t_from_unit(s));
        (t as u32).clamp(self.t_min, self.t_max)
    }

    pub fn joint(&self, x_raw: &[f64], t: u32) -> Result<JointInput> {
        JointInput::new(self.to_unit(x_raw)?, self.t_to_unit(f64::from(t)))
    }
}

/// A point `[x, t]` of the joint space, normalized to the unit cube.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointInput {
    pub x: Vec<f64>,
    pub t: f64,
}

impl JointInput {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !x.iter().all(|&v| in_unit(v)) || !in_unit(t) {
            return Err(invalid_input!("joint input outside the unit cube"));
        }
        Ok(JointInput { x, t })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn with_t(&self, t: f64) -> JointInput {
        JointInput { x: self.x.clone(), t }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn log_dimension_round_trips() {
        let space = SearchSpace::new(vec![Dimension::log("lr", 1e-6, 1e-2)], 300, 800).unwrap();
        let u = space.to_unit(&[1e-4]).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-12);
        let back = space.from_unit(&u);
        assert!((back[0] - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(SearchSpace::new(vec![Dimension::linear("a", 1.0, 1.0)], 1, 2).is_err());
        assert!(SearchSpace::new(vec![Dimension::log("a", 0.0, 1.0)], 1, 2).is_err());
        assert!(SearchSpace::new(vec![Dimension::linear("a", 0.0, 1.0)], 5, 5).is_err());
        assert!(SearchSpace::new(vec![], 1, 5).is_err());
    }

    #[test]
    fn t_rounding_stays_in_range() {
        let space = SearchSpace::new(vec![Dimension::linear("a", 0.0, 1.0)], 50, 300).unwrap();
        assert_eq!(space.t_round(0.0), 50);
        assert_eq!(space.t_round(1.0), 300);
        assert_eq!(space.t_round(0.5), 175);
        assert!(JointInput::new(vec![1.2], 0.5).is_err());
    }
}
