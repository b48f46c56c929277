//! Matrix-level calculus for F(D²u) = S_k(η)/S_l(η): the U-transform
//! (Δu)I − D²u, the matrix gradient F^{ij}, the second-derivative quadratic
//! form of a spectral function, and the T^{ii} coefficients.

use nalgebra::{DMatrix, DVector};

use crate::cones::in_gamma_prime;
use crate::eigen::jacobi_eigen;
use crate::error::{Error, Result};
use crate::quotient::{eta_derivatives, f_hess};
use crate::symfunc::OperatorSpec;

/// A symmetric matrix with its spectral decomposition computed up front.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricField {
    entries: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SymmetricField {
    /// Symmetrizes `(m + mᵀ)/2` and decomposes.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InputDomain(format!("matrix is {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InputDomain("matrix has non-finite entries".into()));
        }
        let entries = (&m + m.transpose()) * 0.5;
        let (eigenvalues, eigenvectors) = jacobi_eigen(&entries);
        Ok(SymmetricField {
            entries,
            eigenvalues,
            eigenvectors,
        })
    }

    /// Builds from the row-major upper triangle.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n + 1) / 2 {
            return Err(Error::InputDomain(format!(
                "upper triangle of a {n}x{n} matrix has {} entries, got {}",
                n * (n + 1) / 2,
                upper.len()
            )));
        }
        let mut m = DMatrix::zeros(n, n);
        let mut it = upper.iter();
        for i in 0..n {
            for j in i..n {
                let v = *it.next().expect("length checked");
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self::new(m)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn upper(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push(self.entries[(i, j)]);
            }
        }
        out
    }
}

/// U = trace(H)·I − H. Its spectrum is the η-transform of the spectrum of H.
pub fn u_transform(hessian: &SymmetricField) -> SymmetricField {
    let n = hessian.dim();
    let m = DMatrix::identity(n, n) * hessian.trace() - hessian.entries();
    SymmetricField::new(m).expect("finite symmetric input")
}

fn require_admissible(spec: &OperatorSpec, h: &SymmetricField) -> Result<()> {
    spec.check_len(h.eigenvalues.as_slice())?;
    if !in_gamma_prime(spec.k, spec.alpha, h.eigenvalues.as_slice()) {
        return Err(Error::OutsideDomain(format!(
            "spectrum {:?} is not admissible for k = {}",
            h.eigenvalues.as_slice(),
            spec.k
        )));
    }
    Ok(())
}

/// F^{ij} = ∂F/∂u_ij at the given Hessian: Q diag(∂F/∂λ) Qᵀ.
pub fn f_matrix_grad(spec: &OperatorSpec, hessian: &SymmetricField) -> Result<SymmetricField> {
    require_admissible(spec, hessian)?;
    let q = crate::quotient::f_grad(spec, hessian.eigenvalues.as_slice())?;
    let v = &hessian.eigenvectors;
    let d = DMatrix::from_diagonal(&DVector::from_vec(q.grad));
    SymmetricField::new(v * d * v.transpose())
}

/// Value, gradient and Hessian in eigenvalue space of some symmetric spectral
/// function f, evaluated at the spectrum of a matrix.
#[derive(Clone, Debug)]
pub struct SpectralDerivatives {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

/// Divided-difference gaps below this fraction of `1 + max|λ|` use the
/// coincident-eigenvalue limit.
pub const DEGENERACY_THRESHOLD: f64 = 1e-7;

/// Σ f_pq a_pp a_qq + 2 Σ_{p<q} (f_p − f_q)/(λ_p − λ_q) a_pq², with `a`
/// expressed in the eigenframe of the base point.
pub fn spectral_second_form(lam: &[f64], d: &SpectralDerivatives, a_frame: &DMatrix<f64>) -> f64 {
    let n = lam.len();
    let scale = 1.0 + lam.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut total = 0.0;
    for p in 0..n {
        for q in 0..n {
            total += d.hess[(p, q)] * a_frame[(p, p)] * a_frame[(q, q)];
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            let gap = lam[p] - lam[q];
            let divided = if gap.abs() < DEGENERACY_THRESHOLD * scale {
                d.hess[(p, p)] - d.hess[(p, q)]
            } else {
                (d.grad[p] - d.grad[q]) / gap
            };
            total += 2.0 * divided * a_frame[(p, q)] * a_frame[(p, q)];
        }
    }
    total
}

fn frame(hessian: &SymmetricField, a: &SymmetricField) -> Result<DMatrix<f64>> {
    if a.dim() != hessian.dim() {
        return Err(Error::InputDomain("direction dimension mismatch".into()));
    }
    let v = &hessian.eigenvectors;
    Ok(v.transpose() * a.entries() * v)
}

fn quotient_spectral(spec: &OperatorSpec, lam: &[f64]) -> Result<SpectralDerivatives> {
    let q = f_hess(spec, lam)?;
    Ok(SpectralDerivatives {
        value: q.value,
        grad: q.grad,
        hess: q.hess.expect("full"),
    })
}

/// d²/dt² F(H + tA) at t = 0.
pub fn second_derivative_form(spec: &OperatorSpec, hessian: &SymmetricField, a: &SymmetricField) -> Result<f64> {
    require_admissible(spec, hessian)?;
    let lam = hessian.eigenvalues.as_slice();
    let d = quotient_spectral(spec, lam)?;
    Ok(spectral_second_form(lam, &d, &frame(hessian, a)?))
}

/// Same form for G = F^{1/(k−l)}, which is concave on the admissible cone.
pub fn root_second_derivative_form(
    spec: &OperatorSpec,
    hessian: &SymmetricField,
    a: &SymmetricField,
) -> Result<f64> {
    require_admissible(spec, hessian)?;
    let lam = hessian.eigenvalues.as_slice();
    let d = root_spectral(spec, lam)?;
    Ok(spectral_second_form(lam, &d, &frame(hessian, a)?))
}

/// Derivatives of G = F^{1/m}, m = k − l.
pub fn root_spectral(spec: &OperatorSpec, lam: &[f64]) -> Result<SpectralDerivatives> {
    let d = quotient_spectral(spec, lam)?;
    let m = (spec.k - spec.l) as f64;
    let e = 1.0 / m;
    let f = d.value;
    let c1 = e * f.powf(e - 1.0);
    let c2 = e * (e - 1.0) * f.powf(e - 2.0);
    let n = lam.len();
    let grad: Vec<f64> = d.grad.iter().map(|g| c1 * g).collect();
    let hess = DMatrix::from_fn(n, n, |p, q| c2 * d.grad[p] * d.grad[q] + c1 * d.hess[(p, q)]);
    Ok(SpectralDerivatives {
        value: f.powf(e),
        grad,
        hess,
    })
}

/// Diagonal coefficients in the eigenframe ordered with the Hessian spectrum
/// descending (so the U-spectrum ascends).
#[derive(Clone, Debug, PartialEq)]
pub struct FrameCoefficients {
    /// eigenvalues of the Hessian, descending
    pub lambda: Vec<f64>,
    /// F^{ii} = ∂F/∂U_ii = ∂F/∂η_i
    pub f_diag: Vec<f64>,
    /// T^{ii} = Σ_j F^{jj} − F^{ii}
    pub t_diag: Vec<f64>,
}

pub fn t_diagonal(spec: &OperatorSpec, hessian: &SymmetricField) -> Result<FrameCoefficients> {
    require_admissible(spec, hessian)?;
    let lambda: Vec<f64> = hessian.eigenvalues.iter().rev().copied().collect();
    let eta = crate::cones::eta_values(&lambda);
    let f_diag = eta_derivatives(spec, &eta, false)?.grad;
    let total: f64 = f_diag.iter().sum();
    let t_diag = f_diag.iter().map(|f| total - f).collect();
    Ok(FrameCoefficients {
        lambda,
        f_diag,
        t_diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::{f_grad, f_value};

    fn spec(n: usize, k: usize, l: usize, alpha: f64) -> OperatorSpec {
        OperatorSpec::new(n, k, l, alpha).unwrap()
    }

    fn rotation3(a: f64, b: f64, c: f64) -> DMatrix<f64> {
        let rx = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos()]);
        let ry = DMatrix::from_row_slice(3, 3, &[b.cos(), 0.0, b.sin(), 0.0, 1.0, 0.0, -b.sin(), 0.0, b.cos()]);
        let rz = DMatrix::from_row_slice(3, 3, &[c.cos(), -c.sin(), 0.0, c.sin(), c.cos(), 0.0, 0.0, 0.0, 1.0]);
        rz * ry * rx
    }

    #[test]
    fn u_transform_examples() {
        let u = u_transform(&SymmetricField::diagonal(&[1.0; 3]).unwrap());
        assert_eq!(u.entries(), &(DMatrix::identity(3, 3) * 2.0));
        let u = u_transform(&SymmetricField::diagonal(&[3.0, 2.0, 1.0]).unwrap());
        assert_eq!(u.entries().diagonal().as_slice(), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn symmetrizes_on_construction() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let s = SymmetricField::new(m).unwrap();
        assert_eq!(s.entries()[(0, 1)], s.entries()[(1, 0)]);
        assert_eq!(s.entries()[(0, 1)], 3.0);
        let r = SymmetricField::from_upper(2, &[1.0, 3.0, 3.0]).unwrap();
        assert_eq!(r, s);
        assert_eq!(s.upper(), vec![1.0, 3.0, 3.0]);
    }

    #[test]
    fn matrix_grad_of_diagonal_input() {
        let sp = spec(3, 2, 1, 0.5);
        let lam = [3.0, 1.0, 0.5];
        let g = f_matrix_grad(&sp, &SymmetricField::diagonal(&lam).unwrap()).unwrap();
        let q = f_grad(&sp, &lam).unwrap();
        for i in 0..3 {
            assert!((g.entries()[(i, i)] - q.grad[i]).abs() < 1e-14);
            for j in 0..3 {
                if i != j {
                    assert!(g.entries()[(i, j)].abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn matrix_grad_isotropic_point() {
        let sp = spec(3, 2, 0, 1.0);
        let r = rotation3(0.3, -1.1, 0.7);
        let h = SymmetricField::new(&r * DMatrix::identity(3, 3) * 2.0 * r.transpose()).unwrap();
        let g = f_matrix_grad(&sp, &h).unwrap();
        let q = f_grad(&sp, &[2.0; 3]).unwrap();
        assert!((g.entries() - DMatrix::identity(3, 3) * q.grad[0]).norm() < 1e-12);
    }

    #[test]
    fn matrix_grad_is_frame_covariant() {
        let sp = spec(3, 3, 1, 0.2);
        let h = SymmetricField::new(DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.6])).unwrap();
        let r = rotation3(0.9, 0.4, -2.0);
        let rotated = SymmetricField::new(&r * h.entries() * r.transpose()).unwrap();
        let g = f_matrix_grad(&sp, &h).unwrap();
        let gr = f_matrix_grad(&sp, &rotated).unwrap();
        let expect = &r * g.entries() * r.transpose();
        assert!((gr.entries() - &expect).norm() <= 1e-8 * expect.norm());
    }

    #[test]
    fn matrix_grad_rejects_inadmissible() {
        let sp = spec(3, 2, 1, 0.0);
        let h = SymmetricField::diagonal(&[-1.0, -1.0, -1.0]).unwrap();
        assert!(matches!(f_matrix_grad(&sp, &h), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn second_form_examples() {
        let sp = spec(3, 2, 1, 0.5);
        let h = SymmetricField::diagonal(&[2.0, 1.0, 0.3]).unwrap();
        let zero = SymmetricField::new(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(second_derivative_form(&sp, &h, &zero).unwrap(), 0.0);
        let a = SymmetricField::diagonal(&[0.2, -0.5, 1.0]).unwrap();
        let q = f_hess(&sp, &[0.3, 1.0, 2.0]).unwrap();
        // the eigen cache is ascending, so map a accordingly
        let ad = [1.0, -0.5, 0.2];
        let hs = q.hess.unwrap();
        let mut expect = 0.0;
        for p in 0..3 {
            for r in 0..3 {
                expect += hs[(p, r)] * ad[p] * ad[r];
            }
        }
        let got = second_derivative_form(&sp, &h, &a).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn second_form_matches_five_point_difference() {
        let sp = spec(3, 2, 0, 1.0);
        let h = SymmetricField::new(DMatrix::from_row_slice(3, 3, &[1.5, 0.2, 0.1, 0.2, 1.0, -0.3, 0.1, -0.3, 0.7])).unwrap();
        let a = SymmetricField::new(DMatrix::from_row_slice(3, 3, &[0.4, -1.0, 0.3, -1.0, 0.2, 0.5, 0.3, 0.5, -0.6])).unwrap();
        let eval = |t: f64| {
            let m = SymmetricField::new(h.entries() + a.entries() * t).unwrap();
            f_value(&sp, m.eigenvalues().as_slice()).unwrap()
        };
        let e = 1e-2;
        let fd = (-eval(2.0 * e) + 16.0 * eval(e) - 30.0 * eval(0.0) + 16.0 * eval(-e) - eval(-2.0 * e)) / (12.0 * e * e);
        let got = second_derivative_form(&sp, &h, &a).unwrap();
        assert!((fd - got).abs() <= 1e-4 * got.abs(), "{fd} vs {got}");
    }

    #[test]
    fn t_diagonal_examples() {
        let sp = spec(2, 2, 1, 0.3);
        let c = t_diagonal(&sp, &SymmetricField::diagonal(&[2.0, 1.0]).unwrap()).unwrap();
        assert!((c.t_diag[0] - c.f_diag[1]).abs() < 1e-15);
        assert!((c.t_diag[1] - c.f_diag[0]).abs() < 1e-15);
        let c = t_diagonal(&spec(3, 2, 1, 0.0), &SymmetricField::diagonal(&[1.0; 3]).unwrap()).unwrap();
        assert!(c.t_diag.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));
        let sp = spec(4, 3, 1, 0.5);
        let c = t_diagonal(&sp, &SymmetricField::diagonal(&[3.0, 1.0, 0.5, -0.2]).unwrap()).unwrap();
        let st: f64 = c.t_diag.iter().sum();
        let sf: f64 = c.f_diag.iter().sum();
        assert!((st - 3.0 * sf).abs() <= 1e-12 * st.abs());
        assert!(c.t_diag.iter().all(|&t| t > 0.0));
        assert!(c.t_diag.windows(2).all(|w| w[0] <= w[1]));
        assert!(c.f_diag.windows(2).all(|w| w[0] >= w[1]));
    }
}
