//! The η-transform and Garding-type cone membership: Γ_k, Γ̃_k and Γ'_k,
//! plus a seeded sampler that lands inside a requested cone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::symfunc::{s_sum, sigma_all, EigenTuple, OperatorSpec};

/// η_i = Σ_{j≠i} λ_j, the spectrum of (Δu)I − D²u.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaTuple {
    pub values: Vec<f64>,
    pub source: EigenTuple,
}

pub fn eta_from_lambda(lam: &EigenTuple) -> EtaTuple {
    EtaTuple {
        values: eta_values(lam),
        source: lam.clone(),
    }
}

/// η of a raw slice. Each sum is carried in double-double, so the rounded
/// results keep the exact order of the true sums.
pub fn eta_values(lam: &[f64]) -> Vec<f64> {
    (0..lam.len())
        .map(|i| {
            lam.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Dd::ZERO, |acc, (_, &v)| acc.add(Dd::from_f64(v)))
                .to_f64()
        })
        .collect()
}

/// σ_m(λ) > 0 for m = 1..=k.
pub fn in_gamma(k: usize, lam: &[f64]) -> bool {
    sigma_all(lam, k)[1..].iter().all(|&s| s > 0.0)
}

/// λ ∈ Γ_{k-1} and S_k(λ) > 0; Γ_0 is all of ℝⁿ.
pub fn in_gamma_tilde(k: usize, alpha: f64, lam: &[f64]) -> bool {
    if k == 0 {
        return true;
    }
    let s = sigma_all(lam, k);
    s[1..k].iter().all(|&v| v > 0.0) && s_sum(k as i32, alpha, lam) > 0.0
}

/// Definition form: σ_m(η) > 0 for m = 1..=k.
pub fn in_gamma_prime_definition(k: usize, lam: &[f64]) -> bool {
    in_gamma(k, &eta_values(lam))
}

/// Tilde form: η ∈ Γ̃_k. This is the set the solver keeps its iterates in.
pub fn in_gamma_prime(k: usize, alpha: f64, lam: &[f64]) -> bool {
    in_gamma_tilde(k, alpha, &eta_values(lam))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeId {
    /// Γ_k in λ.
    Gamma,
    /// Γ̃_k in λ.
    GammaTilde,
    /// Γ'_k (tilde form): η ∈ Γ̃_k.
    GammaPrime,
}

impl ConeId {
    pub fn contains(self, k: usize, alpha: f64, lam: &[f64]) -> bool {
        match self {
            ConeId::Gamma => in_gamma(k, lam),
            ConeId::GammaTilde => in_gamma_tilde(k, alpha, lam),
            ConeId::GammaPrime => in_gamma_prime(k, alpha, lam),
        }
    }
}

impl std::fmt::Display for ConeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConeId::Gamma => "gamma",
            ConeId::GammaTilde => "gamma-tilde",
            ConeId::GammaPrime => "gamma-prime",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeSample {
    pub lam: EigenTuple,
    pub cone_id: ConeId,
    pub seed: u64,
}

const MAX_DOUBLINGS: usize = 60;
const FIRST_SHIFT: f64 = 1.0 / 256.0;

/// Draws λ ~ N(0, I) and shifts it along (1,…,1), doubling the shift until
/// the tuple is a member of `cone_id` with index `spec.k`.
pub fn sample_cone(cone_id: ConeId, spec: &OperatorSpec, seed: u64) -> Result<ConeSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..spec.n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let member = |v: &[f64]| cone_id.contains(spec.k, spec.alpha, v);
    if member(&base) {
        return Ok(ConeSample {
            lam: EigenTuple::new(base)?,
            cone_id,
            seed,
        });
    }
    let mut t = FIRST_SHIFT;
    for _ in 0..MAX_DOUBLINGS {
        let shifted: Vec<f64> = base.iter().map(|v| v + t).collect();
        if member(&shifted) {
            return Ok(ConeSample {
                lam: EigenTuple::new(shifted)?,
                cone_id,
                seed,
            });
        }
        t *= 2.0;
    }
    Err(Error::SamplingExhausted {
        cone: format!("{cone_id}(k={})", spec.k),
        attempts: MAX_DOUBLINGS,
    })
}
