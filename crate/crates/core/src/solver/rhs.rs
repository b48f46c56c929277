//! Right-hand sides f(x, u, Du).

use std::fmt;

use crate::quotient::f_value;
use crate::symfunc::OperatorSpec;

pub trait Rhs: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64], u: f64, du: &[f64]) -> f64;

    /// (∂f/∂u, ∂f/∂p) when known in closed form.
    fn partials(&self, _x: &[f64], _u: f64, _du: &[f64]) -> Option<(f64, Vec<f64>)> {
        None
    }

    /// True when f ignores u and Du.
    fn depends_on_x_only(&self) -> bool {
        false
    }

    /// Short stable description, embedded in reports and snapshots.
    fn describe(&self) -> String;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantRhs(pub f64);

impl Rhs for ConstantRhs {
    fn value(&self, _x: &[f64], _u: f64, _du: &[f64]) -> f64 {
        self.0
    }

    fn partials(&self, _x: &[f64], _u: f64, du: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some((0.0, vec![0.0; du.len()]))
    }

    fn depends_on_x_only(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("constant {:e}", self.0)
    }
}

/// f generated from u*(x) = (|x|² − R²)/2 + c(|x|⁴ − R⁴)/4, a radial solution
/// that vanishes on the sphere of radius R.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialQuartic {
    pub spec: OperatorSpec,
    pub radius: f64,
    pub c: f64,
}

impl RadialQuartic {
    pub fn exact(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let rr = self.radius * self.radius;
        (r2 - rr) / 2.0 + self.c * (r2 * r2 - rr * rr) / 4.0
    }

    /// Spectrum of D²u*: one radial eigenvalue 1 + 3c|x|², the rest 1 + c|x|².
    pub fn spectrum(&self, x: &[f64]) -> Vec<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let mut lam = vec![1.0 + self.c * r2; self.spec.n];
        lam[0] = 1.0 + 3.0 * self.c * r2;
        lam
    }
}

impl Rhs for RadialQuartic {
    fn value(&self, x: &[f64], _u: f64, _du: &[f64]) -> f64 {
        f_value(&self.spec, &self.spectrum(x)).unwrap_or(f64::NAN)
    }

    fn partials(&self, _x: &[f64], _u: f64, du: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some((0.0, vec![0.0; du.len()]))
    }

    fn depends_on_x_only(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("radial-quartic R={:e} c={:e}", self.radius, self.c)
    }
}

/// f = a + b|x|² + c|Du|² − d·u.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialRhs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// When false, `partials` reports nothing and Newton falls back to
    /// finite differences.
    pub analytic: bool,
}

impl PolynomialRhs {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> PolynomialRhs {
        PolynomialRhs {
            a,
            b,
            c,
            d,
            analytic: true,
        }
    }
}

impl Rhs for PolynomialRhs {
    fn value(&self, x: &[f64], u: f64, du: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let p2: f64 = du.iter().map(|v| v * v).sum();
        self.a + self.b * r2 + self.c * p2 - self.d * u
    }

    fn partials(&self, _x: &[f64], _u: f64, du: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.analytic
            .then(|| (-self.d, du.iter().map(|p| 2.0 * self.c * p).collect()))
    }

    fn depends_on_x_only(&self) -> bool {
        self.c == 0.0 && self.d == 0.0
    }

    fn describe(&self) -> String {
        format!(
            "polynomial a={:e} b={:e} c={:e} d={:e}",
            self.a, self.b, self.c, self.d
        )
    }
}

/// Partials by central differences.
pub fn numeric_partials(rhs: &dyn Rhs, x: &[f64], u: f64, du: &[f64]) -> (f64, Vec<f64>) {
    let step = |v: f64| 1e-6 * (1.0 + v.abs());
    let hu = step(u);
    let fu = (rhs.value(x, u + hu, du) - rhs.value(x, u - hu, du)) / (2.0 * hu);
    let mut p = du.to_vec();
    let fp = (0..du.len())
        .map(|i| {
            let hp = step(du[i]);
            p[i] = du[i] + hp;
            let plus = rhs.value(x, u, &p);
            p[i] = du[i] - hp;
            let minus = rhs.value(x, u, &p);
            p[i] = du[i];
            (plus - minus) / (2.0 * hp)
        })
        .collect();
    (fu, fp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_reduces_to_quadratic() {
        let spec = OperatorSpec::new(3, 2, 0, 1.0).unwrap();
        let rhs = RadialQuartic {
            spec,
            radius: 1.0,
            c: 0.0,
        };
        assert_eq!(rhs.value(&[0.3, 0.1, 0.0], 0.0, &[0.0; 3]), 18.0);
        assert_eq!(rhs.exact(&[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(rhs.exact(&[0.0, 0.0, 0.0]), -0.5);
    }

    #[test]
    fn numeric_partials_match_analytic() {
        let rhs = PolynomialRhs::new(2.0, 0.5, 0.3, 0.7);
        let (x, u, du) = ([0.2, -0.4], -0.3, [0.5, 1.5]);
        let (fu, fp) = rhs.partials(&x, u, &du).unwrap();
        let (nu, np) = numeric_partials(&rhs, &x, u, &du);
        assert!((fu - nu).abs() < 1e-8);
        for (a, b) in fp.iter().zip(&np) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
