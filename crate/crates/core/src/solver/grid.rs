//! Lattices, boundary masks and second-order stencils.
//!
//! Every second derivative is assembled from three-point second differences
//! along lattice directions e_a and e_a ± e_b. When a neighbour falls outside
//! the open domain the arm is shortened to the point where the ray leaves the
//! domain, and the Dirichlet value 0 is used there. Three-point differences
//! with unequal arms are exact on quadratics, so the discrete Hessian and
//! gradient reproduce any quadratic that vanishes on the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_MESH: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Ball { radius: f64 },
    Box { half_widths: Vec<f64> },
}

impl Shape {
    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball { radius } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                r2 < radius * radius * (1.0 - 1e-12)
            }
            Shape::Box { half_widths } => x
                .iter()
                .zip(half_widths)
                .all(|(v, w)| v.abs() < w * (1.0 - 1e-12)),
        }
    }

    /// Parameter s > 0 where x + s·w leaves the domain.
    fn exit(&self, x: &[f64], w: &[f64]) -> f64 {
        match self {
            Shape::Ball { radius } => {
                let xw: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
                let ww: f64 = w.iter().map(|v| v * v).sum();
                let xx: f64 = x.iter().map(|v| v * v).sum();
                let disc = (xw * xw - ww * (xx - radius * radius)).max(0.0);
                (-xw + disc.sqrt()) / ww
            }
            Shape::Box { half_widths } => x
                .iter()
                .zip(w)
                .zip(half_widths)
                .filter(|((_, wi), _)| **wi != 0.0)
                .map(|((xi, wi), hw)| if *wi > 0.0 { (hw - xi) / wi } else { (-hw - xi) / wi })
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Shape::Ball { radius } => format!("ball {radius:e}"),
            Shape::Box { half_widths } => {
                let w: Vec<String> = half_widths.iter().map(|v| format!("{v:e}")).collect();
                format!("box {}", w.join(" "))
            }
        }
    }

    pub fn parse_label(s: &str) -> Result<Shape> {
        let mut it = s.split_whitespace();
        let bad = || Error::CorruptInput(format!("bad domain label {s:?}"));
        let nums = |it: std::str::SplitWhitespace| -> Result<Vec<f64>> {
            it.map(|t| t.parse::<f64>().map_err(|_| bad())).collect()
        };
        match it.next() {
            Some("ball") => {
                let v = nums(it)?;
                match v.as_slice() {
                    [r] => Ok(Shape::Ball { radius: *r }),
                    _ => Err(bad()),
                }
            }
            Some("box") => Ok(Shape::Box { half_widths: nums(it)? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub dim: usize,
    /// Points along the longest axis.
    pub mesh: usize,
}

impl DomainSpec {
    pub fn ball(dim: usize, radius: f64, mesh: usize) -> DomainSpec {
        DomainSpec {
            shape: Shape::Ball { radius },
            dim,
            mesh,
        }
    }

    pub fn cube(dim: usize, half_width: f64, mesh: usize) -> DomainSpec {
        DomainSpec {
            shape: Shape::Box {
                half_widths: vec![half_width; dim],
            },
            dim,
            mesh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::Configuration(format!("dimension {} not in {{2, 3}}", self.dim)));
        }
        if self.mesh < MIN_MESH {
            return Err(Error::Configuration(format!(
                "mesh {} is too coarse (need at least {MIN_MESH} points per axis)",
                self.mesh
            )));
        }
        match &self.shape {
            Shape::Ball { radius } if !(radius.is_finite() && *radius > 0.0) => {
                Err(Error::Configuration(format!("ball radius {radius} must be positive")))
            }
            Shape::Box { half_widths } if half_widths.len() != self.dim => Err(Error::Configuration(
                format!("box has {} half-widths for dimension {}", half_widths.len(), self.dim),
            )),
            Shape::Box { half_widths } if half_widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) => {
                Err(Error::Configuration("box half-widths must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Largest half-extent.
    pub fn extent(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => *radius,
            Shape::Box { half_widths } => half_widths.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// A uniform lattice centred at the origin with an interior mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub h: f64,
    /// Points per axis.
    pub dims: Vec<usize>,
    /// Node ids of interior points, ascending.
    pub interior: Vec<usize>,
    slots: Vec<Option<u32>>,
}

impl Lattice {
    pub fn from_interior(h: f64, dims: Vec<usize>, interior: Vec<usize>) -> Result<Lattice> {
        let total: usize = dims.iter().product();
        let mut slots = vec![None; total];
        for (s, &node) in interior.iter().enumerate() {
            if node >= total || slots[node].is_some() {
                return Err(Error::CorruptInput(format!("bad or repeated node index {node}")));
            }
            if s > 0 && node <= interior[s - 1] {
                return Err(Error::CorruptInput("node indices must ascend".into()));
            }
            slots[node] = Some(s as u32);
        }
        Ok(Lattice {
            h,
            dims,
            interior,
            slots,
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.slots.len()
    }

    /// Multi-index of a node; axis 0 varies slowest.
    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = node % self.dims[a];
            node /= self.dims[a];
        }
        idx
    }

    pub fn node_of(&self, idx: &[i64]) -> Option<usize> {
        let mut node = 0usize;
        for (a, &i) in idx.iter().enumerate() {
            if i < 0 || i as usize >= self.dims[a] {
                return None;
            }
            node = node * self.dims[a] + i as usize;
        }
        Some(node)
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .zip(&self.dims)
            .map(|(&i, &n)| (i as f64 - (n as f64 - 1.0) / 2.0) * self.h)
            .collect()
    }

    pub fn slot(&self, node: usize) -> Option<usize> {
        self.slots.get(node).copied().flatten().map(|s| s as usize)
    }

    pub fn slot_coords(&self, slot: usize) -> Vec<f64> {
        self.coords(self.interior[slot])
    }

    /// Slot of the origin, when it is a lattice node.
    pub fn origin_slot(&self) -> Option<usize> {
        if self.dims.iter().any(|n| n % 2 == 0) {
            return None;
        }
        let idx: Vec<i64> = self.dims.iter().map(|&n| (n as i64 - 1) / 2).collect();
        self.node_of(&idx).and_then(|node| self.slot(node))
    }

    /// True when every node of the surrounding 3ⁿ block is interior, i.e. the
    /// node is at least one stencil width away from the boundary.
    pub fn is_deep(&self, slot: usize) -> bool {
        let base: Vec<i64> = self.multi_index(self.interior[slot]).iter().map(|&i| i as i64).collect();
        let d = self.dim();
        (0..3usize.pow(d as u32)).all(|code| {
            let mut c = code;
            let idx: Vec<i64> = base
                .iter()
                .map(|&b| {
                    let off = (c % 3) as i64 - 1;
                    c /= 3;
                    b + off
                })
                .collect();
            self.node_of(&idx).and_then(|n| self.slot(n)).is_some()
        })
    }
}

/// One three-point directional second difference.
#[derive(Clone, Debug)]
struct Arms {
    minus: (Option<usize>, f64),
    plus: (Option<usize>, f64),
}

/// Linear functional over the unknowns: Σ weight · u[slot].
pub type Stencil = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct NodeStencil {
    /// Row-major upper triangle of D²u.
    pub hess: Vec<Stencil>,
    /// Du by axis.
    pub grad: Vec<Stencil>,
}

/// Lattice plus stencils, ready for assembly.
#[derive(Clone, Debug)]
pub struct Grid {
    pub domain: DomainSpec,
    pub lattice: Lattice,
    pub stencils: Vec<NodeStencil>,
    /// max |i − j| over all stencil couplings
    pub bandwidth: usize,
}

/// Builds the lattice, mask and stencils for `domain`.
pub fn discretize(domain: &DomainSpec) -> Result<Grid> {
    domain.validate()?;
    let d = domain.dim;
    let h = 2.0 * domain.extent() / (domain.mesh - 1) as f64;
    let dims: Vec<usize> = match &domain.shape {
        Shape::Ball { .. } => vec![domain.mesh; d],
        Shape::Box { half_widths } => half_widths
            .iter()
            .map(|w| {
                let cells = 2.0 * w / h;
                if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
                    Err(Error::Configuration(format!(
                        "half-width {w} is not a multiple of the spacing {h}"
                    )))
                } else {
                    Ok(cells.round() as usize + 1)
                }
            })
            .collect::<Result<_>>()?,
    };
    let total: usize = dims.iter().product();
    let probe = Lattice {
        h,
        dims: dims.clone(),
        interior: vec![],
        slots: vec![None; total],
    };
    let interior: Vec<usize> = (0..total)
        .filter(|&node| domain.shape.contains(&probe.coords(node)))
        .collect();
    if interior.is_empty() {
        return Err(Error::Configuration("domain has no interior nodes".into()));
    }
    let lattice = Lattice::from_interior(h, dims, interior)?;

    let mut stencils = Vec::with_capacity(lattice.len());
    let mut bandwidth = 0;
    for slot in 0..lattice.len() {
        let st = node_stencil(&lattice, &domain.shape, slot);
        for s in st.hess.iter().chain(&st.grad) {
            for &(j, _) in s {
                bandwidth = bandwidth.max(slot.abs_diff(j));
            }
        }
        stencils.push(st);
    }
    Ok(Grid {
        domain: domain.clone(),
        lattice,
        stencils,
        bandwidth,
    })
}

fn arms(lattice: &Lattice, shape: &Shape, slot: usize, dir: &[i64]) -> Arms {
    let node = lattice.interior[slot];
    let base: Vec<i64> = lattice.multi_index(node).iter().map(|&i| i as i64).collect();
    let x = lattice.coords(node);
    let side = |sign: i64| {
        let idx: Vec<i64> = base.iter().zip(dir).map(|(b, v)| b + sign * v).collect();
        match lattice.node_of(&idx).and_then(|n| lattice.slot(n)) {
            Some(s) => (Some(s), 1.0),
            None => {
                let w: Vec<f64> = dir.iter().map(|&v| (sign * v) as f64 * lattice.h).collect();
                (None, shape.exit(&x, &w).clamp(1e-12, 1.0))
            }
        }
    };
    Arms {
        minus: side(-1),
        plus: side(1),
    }
}

/// Second derivative in the ray parameter: weights (center, minus, plus).
fn second_weights(a: f64, b: f64) -> (f64, f64, f64) {
    (-2.0 / (a * b), 2.0 / (a * (a + b)), 2.0 / (b * (a + b)))
}

/// First derivative in the ray parameter.
fn first_weights(a: f64, b: f64) -> (f64, f64, f64) {
    let den = a * b * (a + b);
    ((b * b - a * a) / den, -b * b / den, a * a / den)
}

fn push(st: &mut Stencil, slot: Option<usize>, w: f64) {
    if let Some(s) = slot {
        match st.iter_mut().find(|(j, _)| *j == s) {
            Some(e) => e.1 += w,
            None => st.push((s, w)),
        }
    }
}

fn combine(st: &mut Stencil, center: usize, ar: &Arms, (w0, wm, wp): (f64, f64, f64), scale: f64) {
    push(st, Some(center), w0 * scale);
    push(st, ar.minus.0, wm * scale);
    push(st, ar.plus.0, wp * scale);
}

fn node_stencil(lattice: &Lattice, shape: &Shape, slot: usize) -> NodeStencil {
    let d = lattice.dim();
    let h2 = lattice.h * lattice.h;
    let unit = |a: usize| -> Vec<i64> { (0..d).map(|i| i64::from(i == a)).collect() };
    let mut hess = Vec::with_capacity(d * (d + 1) / 2);
    for a in 0..d {
        for b in a..d {
            let mut st = Stencil::new();
            if a == b {
                let ar = arms(lattice, shape, slot, &unit(a));
                combine(&mut st, slot, &ar, second_weights(ar.minus.1, ar.plus.1), 1.0 / h2);
            } else {
                let mut sum = unit(a);
                sum[b] = 1;
                let mut diff = unit(a);
                diff[b] = -1;
                let ap = arms(lattice, shape, slot, &sum);
                let am = arms(lattice, shape, slot, &diff);
                combine(&mut st, slot, &ap, second_weights(ap.minus.1, ap.plus.1), 0.25 / h2);
                combine(&mut st, slot, &am, second_weights(am.minus.1, am.plus.1), -0.25 / h2);
            }
            hess.push(st);
        }
    }
    let grad = (0..d)
        .map(|a| {
            let ar = arms(lattice, shape, slot, &unit(a));
            let mut st = Stencil::new();
            combine(&mut st, slot, &ar, first_weights(ar.minus.1, ar.plus.1), 1.0 / lattice.h);
            st
        })
        .collect();
    NodeStencil { hess, grad }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn apply(st: &Stencil, u: &[f64]) -> f64 {
        st.iter().map(|&(j, w)| w * u[j]).sum()
    }

    /// Discrete Hessian (upper triangle) and gradient at a slot.
    pub fn derivatives(&self, slot: usize, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let st = &self.stencils[slot];
        (
            st.hess.iter().map(|s| Self::apply(s, u)).collect(),
            st.grad.iter().map(|s| Self::apply(s, u)).collect(),
        )
    }
}
