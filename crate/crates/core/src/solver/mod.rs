//! Finite-difference Dirichlet solver for F(D²u) = f(x, u, Du), u = 0 on the
//! boundary, by damped Newton with homotopy continuation from a quadratic seed.

mod banded;
mod grid;
mod rhs;
mod snapshot;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use banded::BandMatrix;
pub use grid::{discretize, DomainSpec, Grid, Lattice, NodeStencil, Shape, Stencil, MIN_MESH};
pub use rhs::{numeric_partials, ConstantRhs, PolynomialRhs, RadialQuartic, Rhs};
pub use snapshot::{read_snapshot, write_snapshot};

use crate::cones::in_gamma_prime;
use crate::error::{Error, Result};
use crate::matrix::SymmetricField;
use crate::quotient::{f_grad, f_value};
use crate::symfunc::OperatorSpec;

const ARMIJO: f64 = 1e-4;
const MIN_DAMPING: f64 = 1.0 / (1u64 << 30) as f64;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Max-norm residual target.
    pub tol: f64,
    /// Newton iterations allowed per continuation stage.
    pub max_newton: usize,
    /// Smallest continuation increment before giving up.
    pub min_dt: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_newton: 40,
            min_dt: 1.0 / (1u64 << 20) as f64,
        }
    }
}

/// Discrete u, Du and D²u over the interior nodes. Boundary values are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSolution {
    pub spec: OperatorSpec,
    pub domain: DomainSpec,
    pub lattice: Lattice,
    /// Indexed by interior slot.
    pub u: Vec<f64>,
    pub du: Vec<Vec<f64>>,
    pub d2u: Vec<SymmetricField>,
    /// Every interior spectrum lies in the admissible cone.
    pub admissible: bool,
    pub residual_norm: f64,
}

impl GridSolution {
    /// u at any lattice node, 0 off the interior.
    pub fn value_at_node(&self, node: usize) -> f64 {
        self.lattice.slot(node).map_or(0.0, |s| self.u[s])
    }

    pub fn coords(&self, slot: usize) -> Vec<f64> {
        self.lattice.slot_coords(slot)
    }

    pub fn h(&self) -> f64 {
        self.lattice.h
    }

    /// Max-norm distance to a reference field.
    pub fn max_error(&self, exact: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.u.len())
            .map(|s| (self.u[s] - exact(&self.coords(s))).abs())
            .fold(0.0, f64::max)
    }

    /// Slot of the first interior node with u ≥ 0.
    pub fn first_nonnegative(&self) -> Option<usize> {
        self.u.iter().position(|&v| v >= 0.0)
    }

    fn recheck_admissible(&mut self) {
        self.admissible = self
            .d2u
            .iter()
            .all(|h| in_gamma_prime(self.spec.k, self.spec.alpha, h.eigenvalues().as_slice()));
    }
}

/// What a full solve produced and how it got there.
#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub solution: GridSolution,
    pub newton_iterations: usize,
    /// Accepted homotopy parameters, ending at 1.
    pub continuation: Vec<f64>,
    pub rejected_stages: usize,
}

struct Eval {
    residual: Vec<f64>,
    norm: f64,
    first_bad: Option<usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

enum NodeOut {
    Bad,
    Good { residual: f64, row: Vec<(usize, f64)> },
}

pub struct Solver<'a> {
    pub grid: Grid,
    rhs: &'a dyn Rhs,
    spec: OperatorSpec,
    opts: SolveOptions,
    seed: Vec<f64>,
    f_seed: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(domain: &DomainSpec, rhs: &'a dyn Rhs, spec: &OperatorSpec, opts: SolveOptions) -> Result<Self> {
        if spec.n != domain.dim {
            return Err(Error::Configuration(format!(
                "operator dimension {} differs from domain dimension {}",
                spec.n, domain.dim
            )));
        }
        if !(opts.tol > 0.0) {
            return Err(Error::Configuration("tolerance must be positive".into()));
        }
        let grid = discretize(domain)?;
        let seed: Vec<f64> = (0..grid.len())
            .map(|s| seed_value(&domain.shape, &grid.lattice.slot_coords(s)))
            .collect();
        let mut solver = Solver {
            grid,
            rhs,
            spec: spec.clone(),
            opts,
            seed,
            f_seed: vec![],
        };
        let f_seed: Vec<f64> = (0..solver.grid.len())
            .map(|s| {
                let (hu, _) = solver.grid.derivatives(s, &solver.seed);
                let lam = spectrum(domain.dim, &hu);
                match lam.filter(|l| in_gamma_prime(spec.k, spec.alpha, l)) {
                    Some(l) => f_value(spec, &l),
                    None => Err(Error::Configuration(format!(
                        "quadratic seed is not admissible at {:?}",
                        solver.grid.lattice.slot_coords(s)
                    ))),
                }
            })
            .collect::<Result<_>>()?;
        solver.f_seed = f_seed;
        Ok(solver)
    }

    pub fn seed_values(&self) -> &[f64] {
        &self.seed
    }

    /// The discrete operator applied to the seed; the homotopy starts here.
    pub fn seed_rhs(&self) -> &[f64] {
        &self.f_seed
    }

    fn target(&self, slot: usize, t: f64, u: f64, du: &[f64]) -> Result<f64> {
        let x = self.grid.lattice.slot_coords(slot);
        let f = self.rhs.value(&x, u, du);
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Configuration(format!("right-hand side {f} is not positive at {x:?}")));
        }
        Ok((1.0 - t) * self.f_seed[slot] + t * f)
    }

    fn node(&self, slot: usize, u: &[f64], t: f64, jacobian: bool) -> Result<NodeOut> {
        let n = self.spec.n;
        let (hu, du) = self.grid.derivatives(slot, u);
        let Some(sf) = SymmetricField::from_upper(n, &hu).ok() else {
            return Ok(NodeOut::Bad);
        };
        let lam = sf.eigenvalues().as_slice();
        if !in_gamma_prime(self.spec.k, self.spec.alpha, lam) {
            return Ok(NodeOut::Bad);
        }
        let Ok(value) = f_value(&self.spec, lam) else {
            return Ok(NodeOut::Bad);
        };
        let residual = value - self.target(slot, t, u[slot], &du)?;
        if !residual.is_finite() {
            return Ok(NodeOut::Bad);
        }
        let mut row = Vec::new();
        if jacobian {
            let grad = f_grad(&self.spec, lam)?.grad;
            let v = sf.eigenvectors();
            let fij = v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(grad)) * v.transpose();
            let st = &self.grid.stencils[slot];
            let mut e = 0;
            for a in 0..n {
                for b in a..n {
                    let coef = if a == b { fij[(a, a)] } else { fij[(a, b)] + fij[(b, a)] };
                    row.extend(st.hess[e].iter().map(|&(j, w)| (j, coef * w)));
                    e += 1;
                }
            }
            if t > 0.0 && !self.rhs.depends_on_x_only() {
                let x = self.grid.lattice.slot_coords(slot);
                let (fu, fp) = self
                    .rhs
                    .partials(&x, u[slot], &du)
                    .unwrap_or_else(|| numeric_partials(self.rhs, &x, u[slot], &du));
                row.push((slot, -t * fu));
                for (c, g) in st.grad.iter().enumerate() {
                    row.extend(g.iter().map(|&(j, w)| (j, -t * fp[c] * w)));
                }
            }
        }
        Ok(NodeOut::Good { residual, row })
    }

    fn evaluate(&self, u: &[f64], t: f64, jacobian: bool) -> Result<Eval> {
        let outs: Vec<NodeOut> = (0..self.grid.len())
            .into_par_iter()
            .map(|s| self.node(s, u, t, jacobian))
            .collect::<Result<_>>()?;
        let mut eval = Eval {
            residual: Vec::with_capacity(outs.len()),
            norm: 0.0,
            first_bad: None,
            rows: Vec::new(),
        };
        for (s, out) in outs.into_iter().enumerate() {
            match out {
                NodeOut::Bad => {
                    eval.first_bad.get_or_insert(s);
                    eval.residual.push(f64::NAN);
                    eval.norm = f64::INFINITY;
                }
                NodeOut::Good { residual, row } => {
                    eval.norm = eval.norm.max(residual.abs());
                    eval.residual.push(residual);
                    if jacobian {
                        eval.rows.push(row);
                    }
                }
            }
        }
        Ok(eval)
    }

    /// Packages a field as a GridSolution, with residual measured at
    /// homotopy parameter t.
    pub fn package(&self, u: Vec<f64>, t: f64) -> Result<GridSolution> {
        let n = self.spec.n;
        let mut du = Vec::with_capacity(u.len());
        let mut d2u = Vec::with_capacity(u.len());
        for s in 0..u.len() {
            let (h, g) = self.grid.derivatives(s, &u);
            d2u.push(SymmetricField::from_upper(n, &h)?);
            du.push(g);
        }
        let eval = self.evaluate(&u, t, false)?;
        let mut sol = GridSolution {
            spec: self.spec.clone(),
            domain: self.grid.domain.clone(),
            lattice: self.grid.lattice.clone(),
            u,
            du,
            d2u,
            admissible: false,
            residual_norm: eval.norm,
        };
        sol.recheck_admissible();
        Ok(sol)
    }

    pub fn seed(&self) -> Result<GridSolution> {
        self.package(self.seed.clone(), 0.0)
    }

    /// One damped Newton step at homotopy parameter t. A state already within
    /// tolerance is returned unchanged.
    pub fn newton_step(&self, state: &GridSolution, t: f64) -> Result<GridSolution> {
        let (u, _) = self.step_values(&state.u, t)?;
        self.package(u, t)
    }

    fn step_values(&self, u: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
        let eval = self.evaluate(u, t, true)?;
        if let Some(bad) = eval.first_bad {
            return Err(Error::Admissibility(format!(
                "iterate not admissible at {:?}",
                self.grid.lattice.slot_coords(bad)
            )));
        }
        if eval.norm <= self.opts.tol {
            return Ok((u.to_vec(), eval.norm));
        }
        let bw = self.grid.bandwidth;
        let mut band = BandMatrix::zeros(u.len(), bw, bw);
        for (i, row) in eval.rows.iter().enumerate() {
            for &(j, w) in row {
                band.add(i, j, w);
            }
        }
        let mut delta: Vec<f64> = eval.residual.iter().map(|r| -r).collect();
        band.solve(&mut delta)?;

        let mut s = 1.0;
        while s >= MIN_DAMPING {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + s * d).collect();
            let tv = self.evaluate(&trial, t, false)?;
            if tv.first_bad.is_none() && tv.norm <= (1.0 - ARMIJO * s) * eval.norm {
                return Ok((trial, tv.norm));
            }
            s *= 0.5;
        }
        Err(Error::NoConvergence {
            message: format!("line search underflow at t = {t}, residual {:e}", eval.norm),
            last: Box::new(self.package(u.to_vec(), t)?),
        })
    }

    fn newton_solve(&self, u0: &[f64], t: f64) -> Result<(Vec<f64>, usize)> {
        let mut u = u0.to_vec();
        for it in 0..=self.opts.max_newton {
            let (next, norm) = self.step_values(&u, t)?;
            if norm <= self.opts.tol {
                return Ok((next, it));
            }
            u = next;
        }
        Err(Error::NoConvergence {
            message: format!("{} Newton iterations at t = {t} without convergence", self.opts.max_newton),
            last: Box::new(self.package(u, t)?),
        })
    }

    /// Continuation from the seed (t = 0) to the target (t = 1).
    pub fn run(&self) -> Result<SolveOutput> {
        let mut u = self.seed.clone();
        let (mut t, mut dt) = (0.0f64, 1.0f64);
        let mut continuation = Vec::new();
        let (mut newton_iterations, mut rejected_stages) = (0, 0);
        while t < 1.0 {
            let t1 = (t + dt).min(1.0);
            match self.newton_solve(&u, t1) {
                Ok((next, iters)) => {
                    u = next;
                    t = t1;
                    continuation.push(t);
                    newton_iterations += iters;
                    dt *= 2.0;
                }
                Err(e @ (Error::NoConvergence { .. } | Error::Admissibility(_) | Error::Singular(_))) => {
                    rejected_stages += 1;
                    dt *= 0.5;
                    if dt < self.opts.min_dt {
                        return Err(Error::NoConvergence {
                            message: format!("continuation stalled at t = {t}: {e}"),
                            last: Box::new(self.package(u, t)?),
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Ok(SolveOutput {
            solution: self.package(u, 1.0)?,
            newton_iterations,
            continuation,
            rejected_stages,
        })
    }
}

/// Solves F(D²u) = f on the domain with u = 0 on the boundary.
pub fn solve(domain: &DomainSpec, rhs: &dyn Rhs, spec: &OperatorSpec, opts: &SolveOptions) -> Result<SolveOutput> {
    Solver::new(domain, rhs, spec, opts.clone())?.run()
}

fn seed_value(shape: &Shape, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    match shape {
        Shape::Ball { radius } => (r2 - radius * radius) / 2.0,
        Shape::Box { half_widths } => {
            x.iter().zip(half_widths).map(|(v, w)| (v * v - w * w) / 2.0).sum()
        }
    }
}

fn spectrum(n: usize, upper: &[f64]) -> Option<Vec<f64>> {
    SymmetricField::from_upper(n, upper)
        .ok()
        .map(|f| f.eigenvalues().as_slice().to_vec())
}
