//! Finite-difference references for the quotient derivatives.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use shq_core::quotient::{f_grad, f_hess, f_value};
use shq_core::{in_gamma_prime, OperatorSpec, SymmetricField};

pub fn scale_of(lam: &[f64]) -> f64 {
    lam.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let top = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if top == 0.0 {
        diff
    } else {
        diff / top
    }
}

fn shifted(lam: &[f64], i: usize, d: f64) -> Vec<f64> {
    let mut v = lam.to_vec();
    v[i] += d;
    v
}

/// Relative max-norm gap between `f_grad` and central differences of
/// `f_value` with step `step * scale`. None when a stencil point leaves the
/// admissible set.
pub fn gradient_gap(spec: &OperatorSpec, lam: &[f64], step: f64) -> Option<f64> {
    let h = step * scale_of(lam);
    let analytic = f_grad(spec, lam).ok()?.grad;
    let mut fd = Vec::with_capacity(lam.len());
    for i in 0..lam.len() {
        let up = f_value(spec, &shifted(lam, i, h)).ok()?;
        let down = f_value(spec, &shifted(lam, i, -h)).ok()?;
        fd.push((up - down) / (2.0 * h));
    }
    Some(rel(&analytic, &fd))
}

/// Same for `f_hess` against central differences of the analytic gradient.
pub fn hessian_gap(spec: &OperatorSpec, lam: &[f64], step: f64) -> Option<f64> {
    let n = lam.len();
    let h = step * scale_of(lam);
    let analytic = f_hess(spec, lam).ok()?.hess?;
    let mut fd = DMatrix::zeros(n, n);
    for j in 0..n {
        let up = f_grad(spec, &shifted(lam, j, h)).ok()?.grad;
        let down = f_grad(spec, &shifted(lam, j, -h)).ok()?.grad;
        for i in 0..n {
            fd[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Some(rel(analytic.as_slice(), fd.as_slice()))
}

fn matrix_value(spec: &OperatorSpec, m: &DMatrix<f64>) -> Option<f64> {
    let field = SymmetricField::new(m.clone()).ok()?;
    f_value(spec, field.eigenvalues().as_slice()).ok()
}

/// d²/dt² F(λ(H + tA)) at 0 by the five-point rule with step `step * ‖H‖`.
pub fn second_form_reference(spec: &OperatorSpec, hess: &SymmetricField, dir: &SymmetricField, step: f64) -> Option<f64> {
    let e = step * hess.norm().max(1e-300) / dir.norm().max(1e-300);
    let at = |t: f64| matrix_value(spec, &(hess.entries() + dir.entries() * t));
    let (m2, m1, z, p1, p2) = (at(-2.0 * e)?, at(-e)?, at(0.0)?, at(e)?, at(2.0 * e)?);
    Some((-p2 + 16.0 * p1 - 30.0 * z + 16.0 * m1 - m2) / (12.0 * e * e))
}

pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut *rng));
    g.qr().q()
}

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> SymmetricField {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut *rng));
    SymmetricField::new((&g + g.transpose()) * 0.5).expect("finite")
}

/// Q diag(λ) Qᵀ with a seeded random rotation.
pub fn rotated(lam: &[f64], seed: u64) -> SymmetricField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_orthogonal(lam.len(), &mut rng);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lam));
    let m = &q * d * q.transpose();
    SymmetricField::new((&m + m.transpose()) * 0.5).expect("finite")
}

/// Makes the leading `copies` entries equal, then shifts along (1,…,1) until
/// the tuple is admissible again.
pub fn with_repeated(spec: &OperatorSpec, lam: &[f64], copies: usize) -> Option<Vec<f64>> {
    let mut v = lam.to_vec();
    for i in 1..copies.min(v.len()) {
        v[i] = v[0];
    }
    let mut t = 0.0;
    for _ in 0..60 {
        let w: Vec<f64> = v.iter().map(|x| x + t).collect();
        if in_gamma_prime(spec.k, spec.alpha, &w) {
            return Some(w);
        }
        t = if t == 0.0 { 1.0 / 256.0 } else { 2.0 * t };
    }
    None
}

/// |a − b| over max(|a|, |b|, |F|·‖A‖²/‖H‖²), the last being the natural size
/// of a second derivative along A. It keeps linear operators, whose true
/// value is 0, from dividing rounding noise by zero.
pub fn second_form_gap(spec: &OperatorSpec, hess: &SymmetricField, dir: &SymmetricField, a: f64, b: f64) -> f64 {
    let f = f_value(spec, hess.eigenvalues().as_slice()).unwrap_or(0.0).abs();
    let natural = f * (dir.norm() / hess.norm().max(1e-300)).powi(2);
    (a - b).abs() / a.abs().max(b.abs()).max(natural).max(1e-300)
}
