//! The quotient F(λ) = S_k(η)/S_l(η) with η the η-transform of λ, its
//! eigenvalue-space derivatives, and margin checks for the inequalities the
//! estimates rest on.
//!
//! η-space derivatives come from deleted-tuple formulas; λ-space derivatives
//! follow by the chain rule with ∂η_a/∂λ_p = 1 − δ_ap.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cones::{eta_values, in_gamma, in_gamma_prime, in_gamma_tilde};
use crate::error::{Error, Result};
use crate::symfunc::{s_sum_all, sigma_all, without, OperatorSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientGradient {
    pub value: f64,
    /// ∂F/∂λ_p
    pub grad: Vec<f64>,
    /// ∂²F/∂λ_p∂λ_q, present when requested.
    pub hess: Option<DMatrix<f64>>,
}

/// Signed margin of an inequality `big >= small`, with the comparison scale
/// max(1, |big|, |small|).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub value: f64,
    pub scale: f64,
}

impl Margin {
    pub fn of(big: f64, small: f64) -> Margin {
        Margin {
            value: big - small,
            scale: 1f64.max(big.abs()).max(small.abs()),
        }
    }

    /// `value >= -tol * scale`
    pub fn holds(&self, tol: f64) -> bool {
        self.value >= -tol * self.scale
    }

    pub fn relative(&self) -> f64 {
        self.value / self.scale
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Value and η-space derivatives of S_k(η)/S_l(η).
#[derive(Clone, Debug)]
pub struct EtaDerivatives {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Option<DMatrix<f64>>,
}

fn s_at(all: &[f64], j: i32) -> f64 {
    if j < 0 {
        0.0
    } else {
        all.get(j as usize).copied().unwrap_or(0.0)
    }
}

/// Derivatives of S_k/S_l taken directly in the η variables.
pub fn eta_derivatives(spec: &OperatorSpec, eta: &[f64], with_hess: bool) -> Result<EtaDerivatives> {
    let (k, l, alpha) = (spec.k as i32, spec.l as i32, spec.alpha);
    let n = eta.len();
    let s = s_sum_all(alpha, eta, spec.k);
    let (sk, sl) = (s_at(&s, k), s_at(&s, l));
    if !(sl > 0.0) {
        return Err(Error::OutsideDomain(format!("S_{l}(eta) = {sl} is not positive")));
    }
    let value = sk / sl;
    let sl2 = sl * sl;

    // A_a = S_{k-1}(η|a), B_a = S_{l-1}(η|a)
    let mut a1 = vec![0.0; n];
    let mut b1 = vec![0.0; n];
    for p in 0..n {
        let d = s_sum_all(alpha, &without(eta, p, None), spec.k - 1);
        a1[p] = s_at(&d, k - 1);
        b1[p] = s_at(&d, l - 1);
    }
    let grad: Vec<f64> = (0..n).map(|p| (a1[p] * sl - sk * b1[p]) / sl2).collect();

    let hess = with_hess.then(|| {
        let sl3 = sl2 * sl;
        let mut h = DMatrix::zeros(n, n);
        for p in 0..n {
            h[(p, p)] = -2.0 * a1[p] * b1[p] / sl2 + 2.0 * sk * b1[p] * b1[p] / sl3;
            for q in p + 1..n {
                let (a2, b2) = if k >= 2 {
                    let d = s_sum_all(alpha, &without(eta, p, Some(q)), spec.k - 2);
                    (s_at(&d, k - 2), s_at(&d, l - 2))
                } else {
                    (0.0, 0.0)
                };
                let v = a2 / sl - (a1[p] * b1[q] + a1[q] * b1[p]) / sl2 - sk * b2 / sl2
                    + 2.0 * sk * b1[p] * b1[q] / sl3;
                h[(p, q)] = v;
                h[(q, p)] = v;
            }
        }
        h
    });
    Ok(EtaDerivatives { value, grad, hess })
}

pub fn f_value(spec: &OperatorSpec, lam: &[f64]) -> Result<f64> {
    spec.check_len(lam)?;
    let eta = eta_values(lam);
    let s = s_sum_all(spec.alpha, &eta, spec.k);
    let (sk, sl) = (s[spec.k], s[spec.l]);
    if !(sl > 0.0) {
        return Err(Error::OutsideDomain(format!("S_{}(eta) = {sl} is not positive", spec.l)));
    }
    Ok(sk / sl)
}

/// ∂F/∂η_a at η(λ).
pub fn f_eta_grad(spec: &OperatorSpec, lam: &[f64]) -> Result<Vec<f64>> {
    spec.check_len(lam)?;
    Ok(eta_derivatives(spec, &eta_values(lam), false)?.grad)
}

fn lambda_grad(eta_grad: &[f64]) -> Vec<f64> {
    let total: f64 = eta_grad.iter().sum();
    eta_grad.iter().map(|g| total - g).collect()
}

pub fn f_grad(spec: &OperatorSpec, lam: &[f64]) -> Result<QuotientGradient> {
    spec.check_len(lam)?;
    let d = eta_derivatives(spec, &eta_values(lam), false)?;
    Ok(QuotientGradient {
        value: d.value,
        grad: lambda_grad(&d.grad),
        hess: None,
    })
}

pub fn f_hess(spec: &OperatorSpec, lam: &[f64]) -> Result<QuotientGradient> {
    spec.check_len(lam)?;
    let d = eta_derivatives(spec, &eta_values(lam), true)?;
    let h = d.hess.expect("requested");
    let n = lam.len();
    // (J H J)_pq with J = 11ᵀ − I
    let rows: Vec<f64> = (0..n).map(|p| h.row(p).sum()).collect();
    let total: f64 = rows.iter().sum();
    let hl = DMatrix::from_fn(n, n, |p, q| total - rows[p] - rows[q] + h[(p, q)]);
    let hl = (&hl + hl.transpose()) * 0.5;
    Ok(QuotientGradient {
        value: d.value,
        grad: lambda_grad(&d.grad),
        hess: Some(hl),
    })
}

fn require_prime(spec: &OperatorSpec, lam: &[f64]) -> Result<()> {
    spec.check_len(lam)?;
    if !in_gamma_prime(spec.k, spec.alpha, lam) {
        return Err(Error::OutsideDomain(format!(
            "lambda {lam:?} is not in the k = {} admissible cone",
            spec.k
        )));
    }
    Ok(())
}

/// Margin of the concavity-defect inequality
/// ξᵀ D²F ξ ≤ (1 − 1/(k−l)) (DF·ξ)² / F.
pub fn check_concavity_defect(spec: &OperatorSpec, lam: &[f64], xi: &[f64]) -> Result<Margin> {
    require_prime(spec, lam)?;
    if xi.len() != lam.len() {
        return Err(Error::InputDomain("direction length mismatch".into()));
    }
    let q = f_hess(spec, lam)?;
    let h = q.hess.as_ref().expect("full");
    Ok(concavity_margin(spec, q.value, &q.grad, h, xi))
}

/// The same margin from precomputed derivatives; sweeps reuse one Hessian
/// for many directions.
pub fn concavity_margin(
    spec: &OperatorSpec,
    value: f64,
    grad: &[f64],
    hess: &DMatrix<f64>,
    xi: &[f64],
) -> Margin {
    let n = xi.len();
    let dir: f64 = grad.iter().zip(xi).map(|(g, x)| g * x).sum();
    let mut quad = 0.0;
    for p in 0..n {
        for q in 0..n {
            quad += hess[(p, q)] * xi[p] * xi[q];
        }
    }
    let factor = 1.0 - 1.0 / (spec.k - spec.l) as f64;
    Margin::of(factor * dir * dir / value, quad)
}

/// Normalised Newton–Maclaurin: (σ_k/C(n,k))² ≥ σ_{k−1}σ_{k+1}/(C(n,k−1)C(n,k+1)).
pub fn check_maclaurin(lam: &[f64], k: usize) -> Result<Margin> {
    let n = lam.len();
    if !(1..n).contains(&k) {
        return Err(Error::InputDomain(format!("k = {k} not in 1..{n}")));
    }
    if !in_gamma(n, lam) {
        return Err(Error::OutsideDomain(format!("{lam:?} is not in the positive cone")));
    }
    let s = sigma_all(lam, k + 1);
    let lhs = (s[k] / binomial(n, k)).powi(2);
    let rhs = s[k - 1] * s[k + 1] / (binomial(n, k - 1) * binomial(n, k + 1));
    Ok(Margin::of(lhs, rhs))
}

/// Generalised Newton inequalities on σ (n slots) and on S (n+1 slots):
/// returns the margins of both, in that order.
pub fn check_sum_newton(
    spec: &OperatorSpec,
    lam: &[f64],
    k: usize,
    l: usize,
) -> Result<(Margin, Margin)> {
    let n = lam.len();
    if !(1 <= l && l < k && k <= n) {
        return Err(Error::InputDomain(format!("need 1 <= l < k <= n, got l={l}, k={k}, n={n}")));
    }
    if !in_gamma_tilde(k, spec.alpha, lam) {
        return Err(Error::OutsideDomain(format!("{lam:?} is not in the tilde cone of index {k}")));
    }
    let s = sigma_all(lam, k);
    let big = s[k - 1] * s[l] / (binomial(n, k - 1) * binomial(n, l));
    let small = s[k] * s[l - 1] / (binomial(n, k) * binomial(n, l - 1));
    let plain = Margin::of(big, small);

    let ss = s_sum_all(spec.alpha, lam, k);
    let m = n + 1;
    let big = ss[k - 1] * ss[l] / (binomial(m, k - 1) * binomial(m, l));
    let small = ss[k] * ss[l - 1] / (binomial(m, k) * binomial(m, l - 1));
    Ok((plain, Margin::of(big, small)))
}

/// (S_p/S_q)^{1/(p−q)} − (S_k/S_l)^{1/(k−l)} with (k, l) from `spec`.
pub fn check_quotient_monotone(spec: &OperatorSpec, lam: &[f64], p: usize, q: usize) -> Result<Margin> {
    spec.check_len(lam)?;
    let (k, l) = (spec.k, spec.l);
    if !(q < p && p <= k && q <= l) {
        return Err(Error::InputDomain(format!(
            "need q < p <= k and q <= l, got p={p}, q={q}, k={k}, l={l}"
        )));
    }
    if !in_gamma_tilde(k, spec.alpha, lam) {
        return Err(Error::OutsideDomain(format!("{lam:?} is not in the tilde cone of index {k}")));
    }
    let s = s_sum_all(spec.alpha, lam, k);
    let outer = (s[p] / s[q]).powf(1.0 / (p - q) as f64);
    let inner = (s[k] / s[l]).powf(1.0 / (k - l) as f64);
    Ok(Margin::of(outer, inner))
}

/// Empirical ratios behind the lower gradient bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradBounds {
    /// min_i ∂F/∂λ_i / Σ_j ∂F/∂λ_j
    pub min_share: f64,
    /// index attaining `min_share`
    pub argmin: usize,
    /// Σ_i ∂F/∂λ_i / F^{1 − 1/(k−l)}
    pub sum_over_power: f64,
}

pub fn check_grad_bounds(spec: &OperatorSpec, lam: &[f64]) -> Result<GradBounds> {
    if spec.k >= spec.n {
        return Err(Error::InputDomain(format!("gradient bounds need k < n, got k = {}", spec.k)));
    }
    require_prime(spec, lam)?;
    let q = f_grad(spec, lam)?;
    let total: f64 = q.grad.iter().sum();
    let (argmin, min) = q
        .grad
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, g)| if g < acc.1 { (i, g) } else { acc });
    let power = 1.0 - 1.0 / (spec.k - spec.l) as f64;
    Ok(GradBounds {
        min_share: min / total,
        argmin,
        sum_over_power: total / q.value.powf(power),
    })
}
