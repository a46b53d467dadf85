use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ErrorModel, SimulateError};

/// Two independent stationary AR(1) processes (east, north).
///
/// x[t] = φ·x[t−1] + σ·√(1 − φ²)·z with φ = exp(−Δt/τ); x[0] ~ N(0, σ²).
#[derive(Debug, Clone)]
pub struct GaussMarkov {
    rng: ChaCha8Rng,
    sigma: f64,
    phi: f64,
    innovation: f64,
    state: Option<(f64, f64)>,
}

impl GaussMarkov {
    pub fn new(model: &ErrorModel, dt_s: f64) -> Result<Self, SimulateError> {
        model.validate()?;
        let phi = (-dt_s / model.correlation_time_s).exp();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            sigma: model.sigma,
            phi,
            innovation: model.sigma * (1.0 - phi * phi).sqrt(),
            state: None,
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Next (east, north) error, m.
    pub fn next_offset(&mut self) -> (f64, f64) {
        let next = match self.state {
            None => {
                let e = self.sigma * self.normal();
                let n = self.sigma * self.normal();
                (e, n)
            }
            Some((e, n)) => {
                let ze = self.normal();
                let zn = self.normal();
                (self.phi * e + self.innovation * ze, self.phi * n + self.innovation * zn)
            }
        };
        self.state = Some(next);
        next
    }
}
