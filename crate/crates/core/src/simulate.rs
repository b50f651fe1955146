//! Trajectory generation: seeded Gaussian innovation streams and the AR(2)
//! recursion `X_k = ϑ₁X_{k−1} + ϑ₂X_{k−2} + Z_k` carried out at working
//! precision.
//!
//! Innovations are produced in double precision (Box–Muller over a
//! counter-based 64-bit generator) and then embedded exactly; the Z values
//! are O(1), so the accumulation precision, not the innovation precision, is
//! the bottleneck. Replication streams are derived from
//! `(master_seed, replication_index)` through the splitmix64 finalizer, so
//! distinct replications get decorrelated streams and any replication can be
//! regenerated in isolation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ArParams, ModelError};
use crate::numerics::{BigReal, Real};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("innovation count must be at least 1")]
    EmptyInnovations,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Identifies one replication's innovation stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replication_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replication_index: u64) -> Self {
        SeedSpec {
            master_seed,
            replication_index,
        }
    }

    /// Pure function of (master_seed, replication_index): two rounds of the
    /// splitmix64 finalizer (Stafford mix13).
    pub fn stream_seed(&self) -> u64 {
        mix64(
            self.master_seed
                .wrapping_add(mix64(self.replication_index.wrapping_add(GOLDEN_GAMMA))),
        )
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// splitmix64: output k is a pure function of (seed, k).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard Gaussian source: Box–Muller pairs over [`SplitMix64`].
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        GaussianSource {
            rng: SplitMix64::new(seed),
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(s) = self.spare.take() {
            return s;
        }
        // u1 ∈ (0, 1] so the log is finite; u2 ∈ [0, 1)
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.rng.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// A finite prefix Z₁..Z_n of one replication's innovation stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovations {
    pub z: Vec<f64>,
    pub sigma: f64,
}

impl Innovations {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// All-zero innovations, for deterministic-path checks.
    pub fn zeros(n: usize, sigma: f64) -> Self {
        Innovations {
            z: vec![0.0; n],
            sigma,
        }
    }
}

/// Draws Z₁..Z_n i.i.d. N(0, σ²), deterministically from the seed spec.
pub fn gen_innovations(seed: SeedSpec, n: usize, sigma: f64) -> Result<Innovations, SimulateError> {
    if n == 0 {
        return Err(SimulateError::EmptyInnovations);
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(SimulateError::Model(ModelError::NonPositiveSigma(sigma)));
    }
    let mut source = GaussianSource::new(seed.stream_seed());
    let z = (0..n).map(|_| sigma * source.next_standard()).collect();
    Ok(Innovations { z, sigma })
}

/// A simulated path X₋₁, X₀, X₁, …, X_n at working precision.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    values: Vec<T>,
    pub params: ArParams,
    pub n: usize,
}

pub type BigTrajectory = Trajectory<BigReal>;

impl<T: Real> Trajectory<T> {
    /// X_k for k ∈ [−1, n].
    pub fn value(&self, k: i64) -> &T {
        assert!(
            k >= -1 && k <= self.n as i64,
            "index {k} outside [-1, {}]",
            self.n
        );
        &self.values[(k + 1) as usize]
    }

    /// All stored values, X₋₁ first.
    pub fn values(&self) -> &[T] {
        &self.values
    }
}

impl BigTrajectory {
    /// CSV export with header `k,x`; 25 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,x\n");
        for (i, x) in self.values.iter().enumerate() {
            let k = i as i64 - 1;
            out.push_str(&format!(
                "{k},{}\n",
                x.to_decimal(25).expect("25 digits in range")
            ));
        }
        out
    }
}

/// Runs the AR(2) recursion over the given innovations. The initial pair
/// comes from `params`; every arithmetic step is round-to-nearest at
/// `bits` precision.
pub fn simulate_path<T: Real>(
    params: &ArParams,
    innov: &Innovations,
    bits: u32,
) -> Result<Trajectory<T>, SimulateError> {
    params.validate()?;
    if innov.is_empty() {
        return Err(SimulateError::EmptyInnovations);
    }
    let n = innov.len();
    let t1 = T::embed(params.theta1, bits);
    let t2 = T::embed(params.theta2, bits);
    let mut values = Vec::with_capacity(n + 2);
    values.push(T::embed(params.x_neg1, bits));
    values.push(T::embed(params.x0, bits));
    for k in 0..n {
        let z = T::embed(innov.z[k], bits);
        let prev1 = &values[k + 1];
        let prev2 = &values[k];
        let x = t1.clone() * prev1.clone() + t2.clone() * prev2.clone() + z;
        values.push(x);
    }
    Ok(Trajectory {
        values,
        params: *params,
        n,
    })
}
