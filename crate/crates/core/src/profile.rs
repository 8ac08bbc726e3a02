//! Coefficient presets and low-frequency random fields.
//!
//! Random fields use ChaCha8 seeded with `seed_from_u64`, so a seed produces the
//! same samples on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `g(x) = Σ_m w_m cos(m π x / L + θ_m) / Σ_m |w_m|`, so `|g| ≤ 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomField {
    length: f64,
    weights: Vec<f64>,
    phases: Vec<f64>,
}

impl RandomField {
    /// Draws `modes` weights in `[-1, 1]` and phases in `[0, 2π)`.
    pub fn draw(rng: &mut impl Rng, length: f64, modes: usize) -> Self {
        let modes = modes.max(1);
        let weights = (0..modes).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let phases = (0..modes).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        RandomField {
            length,
            weights,
            phases,
        }
    }

    pub fn from_seed(seed: u64, length: f64, modes: usize) -> Self {
        RandomField::draw(&mut ChaCha8Rng::seed_from_u64(seed), length, modes)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let norm: f64 = self.weights.iter().map(|w| w.abs()).sum();
        if norm == 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.phases)
            .enumerate()
            .map(|(m, (w, th))| w * ((m + 1) as f64 * PI * x / self.length + th).cos())
            .sum();
        s / norm
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }
}

/// A spatial coefficient given by name and parameters, or by samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    /// `v` everywhere.
    Constant { value: f64 },
    /// `height · cos²(π (x - center) / width)` on `|x - center| < width / 2`, zero elsewhere.
    Bump {
        center: f64,
        width: f64,
        height: f64,
    },
    /// `amplitude · g(x)` for the [`RandomField`] drawn from `seed`.
    Random {
        seed: u64,
        amplitude: f64,
        modes: usize,
    },
    /// Samples given directly; their count must match the sampling points.
    Values { values: Vec<f64> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn bump(center: f64, width: f64, height: f64) -> Self {
        Profile::Bump {
            center,
            width,
            height,
        }
    }

    pub fn random(seed: u64, amplitude: f64, modes: usize) -> Self {
        Profile::Random {
            seed,
            amplitude,
            modes,
        }
    }

    /// Evaluates the profile at `xs` on the domain `(0, length)`.
    pub fn sample(&self, xs: &[f64], length: f64) -> Result<Vec<f64>> {
        let out = match self {
            Profile::Constant { value } => vec![*value; xs.len()],
            Profile::Bump {
                center,
                width,
                height,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Validation(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                xs.iter()
                    .map(|&x| {
                        let s = (x - center) / width;
                        if s.abs() < 0.5 {
                            height * (PI * s).cos().powi(2)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            Profile::Random {
                seed,
                amplitude,
                modes,
            } => {
                if *modes == 0 {
                    return Err(Error::Validation(
                        "random profile needs at least one mode".into(),
                    ));
                }
                let f = RandomField::from_seed(*seed, length, *modes);
                xs.iter().map(|&x| amplitude * f.eval(x)).collect()
            }
            Profile::Values { values } => {
                if values.len() != xs.len() {
                    return Err(Error::Validation(format!(
                        "{} values given for {} sampling points",
                        values.len(),
                        xs.len()
                    )));
                }
                values.clone()
            }
        };
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "profile is not finite at point {i}"
            )));
        }
        Ok(out)
    }
}
