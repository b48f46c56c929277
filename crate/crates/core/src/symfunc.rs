//! Elementary symmetric functions σ_k, their deleted-index variants, and the
//! sum Hessian functions S_k = σ_k + α σ_{k-1} with eigenvalue derivatives.
//!
//! All σ values come from one coefficient recurrence: the product
//! Π (1 + λ_i t) is multiplied out one factor at a time, carrying the
//! coefficients in double-double so the rounded result is within an ulp or
//! so of the exact value even under cancellation.

use std::ops::Deref;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};

/// An ordered vector of Hessian eigenvalues, `n >= 2`, all finite.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenTuple(Vec<f64>);

impl EigenTuple {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InputDomain(format!(
                "eigen tuple needs n >= 2, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InputDomain(format!(
                "non-finite entry {} at index {i}",
                values[i]
            )));
        }
        Ok(EigenTuple(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy sorted in descending order.
    pub fn sorted_descending(&self) -> EigenTuple {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        EigenTuple(v)
    }
}

impl Deref for EigenTuple {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for EigenTuple {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Problem indices `(n, k, l)` and shift `alpha` of the quotient S_k / S_l.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub alpha: f64,
}

impl OperatorSpec {
    pub fn new(n: usize, k: usize, l: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InputDomain(format!("dimension n = {n} < 2")));
        }
        if !(1..=n).contains(&k) {
            return Err(Error::InputDomain(format!("k = {k} not in 1..={n}")));
        }
        if l >= k {
            return Err(Error::InputDomain(format!("need l < k, got l = {l}, k = {k}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InputDomain(format!("alpha = {alpha} must be finite and >= 0")));
        }
        Ok(OperatorSpec { n, k, l, alpha })
    }

    /// Same operator with a different `(k, l)` pair.
    pub fn with_indices(&self, k: usize, l: usize) -> Result<Self> {
        OperatorSpec::new(self.n, k, l, self.alpha)
    }

    pub(crate) fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.n {
            return Err(Error::InputDomain(format!(
                "tuple length {} does not match n = {}",
                values.len(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Coefficients σ_0..=σ_kmax of Π(1 + λ_i t), unrounded.
fn coefficients(values: &[f64], kmax: usize) -> Vec<Dd> {
    let kmax = kmax.min(values.len());
    let mut c = vec![Dd::ZERO; kmax + 1];
    c[0] = Dd::ONE;
    for (i, &x) in values.iter().enumerate() {
        let top = kmax.min(i + 1);
        for j in (1..=top).rev() {
            c[j] = c[j].add(c[j - 1].mul_f64(x));
        }
    }
    c
}

fn coefficient(c: &[Dd], k: i32) -> Dd {
    if k < 0 {
        Dd::ZERO
    } else {
        c.get(k as usize).copied().unwrap_or(Dd::ZERO)
    }
}

/// σ_k of `values`; 1 for k = 0 and 0 for k < 0 or k > n.
pub fn sigma(k: i32, values: &[f64]) -> f64 {
    if k < 0 || k as usize > values.len() {
        return 0.0;
    }
    coefficients(values, k as usize)[k as usize].to_f64()
}

/// σ_0..=σ_kmax in one pass; entries past `values.len()` are zero.
pub fn sigma_all(values: &[f64], kmax: usize) -> Vec<f64> {
    let c = coefficients(values, kmax);
    (0..=kmax)
        .map(|j| c.get(j).map_or(0.0, |d| d.to_f64()))
        .collect()
}

/// Copy of `values` with the listed (0-based, distinct) indices removed.
pub fn deleted(values: &[f64], drop: &[usize]) -> Result<Vec<f64>> {
    for (a, &i) in drop.iter().enumerate() {
        if i >= values.len() {
            return Err(Error::InputDomain(format!(
                "deleted index {i} out of range for length {}",
                values.len()
            )));
        }
        if drop[..a].contains(&i) {
            return Err(Error::InputDomain(format!("duplicate deleted index {i}")));
        }
    }
    Ok(values
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, &v)| v)
        .collect())
}

/// σ_k of the tuple with up to two indices removed.
pub fn sigma_deleted(k: i32, values: &[f64], drop: &[usize]) -> Result<f64> {
    if drop.len() > 2 {
        return Err(Error::InputDomain(format!(
            "at most two deleted indices, got {}",
            drop.len()
        )));
    }
    Ok(sigma(k, &deleted(values, drop)?))
}

/// S_k = σ_k + α σ_{k-1}, combined before the final rounding.
pub fn s_sum(k: i32, alpha: f64, values: &[f64]) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let c = coefficients(values, k as usize);
    s_from_coefficients(&c, k, alpha)
}

fn s_from_coefficients(c: &[Dd], k: i32, alpha: f64) -> f64 {
    coefficient(c, k)
        .add(coefficient(c, k - 1).mul_f64(alpha))
        .to_f64()
}

/// S_0..=S_kmax in one pass.
pub fn s_sum_all(alpha: f64, values: &[f64], kmax: usize) -> Vec<f64> {
    let c = coefficients(values, kmax);
    (0..=kmax as i32)
        .map(|k| s_from_coefficients(&c, k, alpha))
        .collect()
}

pub fn s_sum_deleted(k: i32, alpha: f64, values: &[f64], drop: &[usize]) -> Result<f64> {
    Ok(s_sum(k, alpha, &deleted(values, drop)?))
}

/// ∂S_k/∂λ_p = S_{k-1}(λ|p).
pub fn s_sum_grad(k: i32, alpha: f64, values: &[f64]) -> Vec<f64> {
    (0..values.len())
        .map(|p| s_sum(k - 1, alpha, &without(values, p, None)))
        .collect()
}

/// ∂²S_k/∂λ_p∂λ_q = S_{k-2}(λ|pq) off the diagonal, zero on it.
pub fn s_sum_hess(k: i32, alpha: f64, values: &[f64]) -> DMatrix<f64> {
    let n = values.len();
    let mut h = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in p + 1..n {
            let v = s_sum(k - 2, alpha, &without(values, p, Some(q)));
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    h
}

/// Deletion with already-validated indices.
pub(crate) fn without(values: &[f64], p: usize, q: Option<usize>) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != p && Some(i) != q)
        .map(|(_, &v)| v)
        .collect()
}
