use crate::ensemble::{norm, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::obstacle::{stationary_state, Initial};
use crate::profile::RadialProfile;
use crate::rng::SimRng;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Cells used to enclose a continuous initial law by step functions.
const ENCLOSURE_CELLS: usize = 2000;

/// I.i.d. initial laws for the particle system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Every particle at the origin.
    Origin,
    /// Uniform on the unit ball; uniform(−1, 1) when d = 1.
    UniformBall,
    /// Radius from `V`, direction uniform.
    Stationary,
}

impl Sampler {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "origin" => Ok(Sampler::Origin),
            "uniform-ball" => Ok(Sampler::UniformBall),
            "stationary" => Ok(Sampler::Stationary),
            other => Err(Error::Config(format!(
                "unknown sampler {other:?} (expected origin, uniform-ball or stationary)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Sampler::Origin => "origin",
            Sampler::UniformBall => "uniform-ball",
            Sampler::Stationary => "stationary",
        }
    }

    pub fn sample(&self, dim: usize, n: usize, rng: &mut SimRng) -> Result<ParticleEnsemble> {
        if dim == 0 || n == 0 {
            return Err(Error::Config("sampler needs d ≥ 1 and N ≥ 1".into()));
        }
        let stationary = match self {
            Sampler::Stationary => Some(stationary_state(dim)?),
            _ => None,
        };
        let mut pos = Vec::with_capacity(dim * n);
        for _ in 0..n {
            let radius = match self {
                Sampler::Origin => {
                    pos.extend(std::iter::repeat_n(0.0, dim));
                    continue;
                }
                Sampler::UniformBall => rng.gen::<f64>().powf(1.0 / dim as f64),
                Sampler::Stationary => stationary.as_ref().unwrap().v_inverse(rng.gen::<f64>()),
            };
            let dir = random_direction(dim, rng);
            pos.extend(dir.iter().map(|c| c * radius));
        }
        ParticleEnsemble::new(dim, pos, 0.0)
    }

    /// Radial law of one particle as an initial condition of the obstacle problem.
    pub fn initial_condition(&self, dim: usize) -> Result<Initial> {
        match self {
            Sampler::Origin => Ok(Initial::Profile(RadialProfile::step(0.0, 1.0, 1.0)?)),
            Sampler::UniformBall => {
                let d = dim as i32;
                let (lower, upper) =
                    RadialProfile::enclose_monotone(|r| r.min(1.0).powi(d), 1.0, ENCLOSURE_CELLS, 2.0)?;
                Ok(Initial::Bracket { lower, upper })
            }
            Sampler::Stationary => {
                let s = stationary_state(dim)?;
                Ok(Initial::Bracket {
                    lower: s.v_step(ENCLOSURE_CELLS, false),
                    upper: s.v_step(ENCLOSURE_CELLS, true),
                })
            }
        }
    }
}

pub(crate) fn random_direction(dim: usize, rng: &mut SimRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}
