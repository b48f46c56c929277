//! Test functions of the interior and Pogorelov-type C² estimates, evaluated on
//! computed solutions.
//!
//! Suprema skip nodes whose 3ⁿ neighbourhood touches the boundary, where the
//! stencils are one-sided.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{GridSolution, Shape};

pub const DEFAULT_BETAS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 5.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorProbeConfig {
    /// Cap A in g(t) = (1 − t/A)^{−1/3}; defaults to sup |Dũ|² of the
    /// rescaled solution.
    pub a_cap: Option<f64>,
}

impl Default for InteriorProbeConfig {
    fn default() -> Self {
        InteriorProbeConfig { a_cap: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PogorelovProbeConfig {
    pub betas: Vec<f64>,
    /// Weight of |Du|²/2.
    pub a: f64,
    /// Weight of |x|²/2.
    pub big_a: f64,
}

impl Default for PogorelovProbeConfig {
    fn default() -> Self {
        PogorelovProbeConfig {
            betas: DEFAULT_BETAS.to_vec(),
            a: 1.0,
            big_a: 1.0,
        }
    }
}

impl PogorelovProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() || self.betas.iter().any(|b| !(b.is_finite() && *b >= 1.0)) {
            return Err(Error::Configuration("every β must be finite and at least 1".into()));
        }
        if !(self.a > 0.0 && self.big_a > 0.0) {
            return Err(Error::Configuration("weights a and A must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorEstimate {
    /// sup of (1 − |y|²) g(|Dũ|²/2) λ_max over deep nodes, y = x/R.
    pub sup_phi: f64,
    pub sup_phi_at: Vec<f64>,
    pub a_cap: f64,
    /// |D²u(0)|, spectral norm.
    pub c2_at_origin: f64,
    pub sup_grad: f64,
    /// |D²u(0)| / (1 + sup|Du|/R).
    pub interior_bound_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PogorelovEntry {
    pub beta: f64,
    /// sup of (−u)^β λ_max over deep nodes.
    pub sup_weighted: f64,
    pub sup_weighted_at: Vec<f64>,
    /// max of β log(−u) + log λ_max + (a/2)|Du|² + (A/2)|x|² over all interior nodes.
    pub p_tilde_max: f64,
    pub p_tilde_at: Vec<f64>,
    /// The maximiser is at least one stencil width from the boundary.
    pub p_tilde_deep: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub h: f64,
    pub interior: Option<InteriorEstimate>,
    pub pogorelov: Vec<PogorelovEntry>,
    /// (−u)^β λ_max decreases in β at every node with 0 < −u < 1.
    pub beta_monotone: Option<bool>,
}

impl EstimateReport {
    fn empty(h: f64) -> EstimateReport {
        EstimateReport {
            h,
            interior: None,
            pogorelov: vec![],
            beta_monotone: None,
        }
    }

    /// Merges the fields of two probes run on the same solution.
    pub fn merge(mut self, other: EstimateReport) -> EstimateReport {
        self.interior = self.interior.or(other.interior);
        if self.pogorelov.is_empty() {
            self.pogorelov = other.pogorelov;
            self.beta_monotone = other.beta_monotone;
        }
        self
    }

    pub fn sup_weighted(&self, beta: f64) -> Option<f64> {
        self.pogorelov.iter().find(|e| e.beta == beta).map(|e| e.sup_weighted)
    }

    pub fn is_finite(&self) -> bool {
        let interior_ok = self.interior.as_ref().is_none_or(|i| {
            [i.sup_phi, i.c2_at_origin, i.sup_grad, i.interior_bound_ratio, i.a_cap]
                .iter()
                .all(|v| v.is_finite())
        });
        interior_ok
            && self
                .pogorelov
                .iter()
                .all(|e| e.sup_weighted.is_finite() && e.p_tilde_max.is_finite())
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "h={:e}", self.h);
        if let Some(i) = &self.interior {
            let _ = writeln!(out, "sup_phi={:e}", i.sup_phi);
            let _ = writeln!(out, "sup_phi_at={}", join(&i.sup_phi_at));
            let _ = writeln!(out, "a_cap={:e}", i.a_cap);
            let _ = writeln!(out, "c2_at_origin={:e}", i.c2_at_origin);
            let _ = writeln!(out, "sup_grad={:e}", i.sup_grad);
            let _ = writeln!(out, "interior_bound_ratio={:e}", i.interior_bound_ratio);
        }
        for e in &self.pogorelov {
            let b = e.beta;
            let _ = writeln!(out, "sup_pogorelov[{b}]={:e}", e.sup_weighted);
            let _ = writeln!(out, "sup_pogorelov_at[{b}]={}", join(&e.sup_weighted_at));
            let _ = writeln!(out, "p_tilde_max[{b}]={:e}", e.p_tilde_max);
            let _ = writeln!(out, "p_tilde_at[{b}]={}", join(&e.p_tilde_at));
            let _ = writeln!(out, "p_tilde_deep[{b}]={}", e.p_tilde_deep);
        }
        if let Some(m) = self.beta_monotone {
            let _ = writeln!(out, "beta_monotone={m}");
        }
        out
    }

    pub const CSV_HEADER: &'static str =
        "h,beta,sup_pogorelov,p_tilde_max,p_tilde_deep,sup_phi,c2_at_origin,interior_bound_ratio";

    /// One row per β (a single row with empty β when no Pogorelov data).
    pub fn csv_rows(&self) -> Vec<String> {
        let (phi, c2, ratio) = match &self.interior {
            Some(i) => (
                format!("{:e}", i.sup_phi),
                format!("{:e}", i.c2_at_origin),
                format!("{:e}", i.interior_bound_ratio),
            ),
            None => Default::default(),
        };
        let tail = format!("{phi},{c2},{ratio}");
        if self.pogorelov.is_empty() {
            return vec![format!("{:e},,,,,{tail}", self.h)];
        }
        self.pogorelov
            .iter()
            .map(|e| {
                format!(
                    "{:e},{},{:e},{:e},{},{tail}",
                    self.h, e.beta, e.sup_weighted, e.p_tilde_max, e.p_tilde_deep
                )
            })
            .collect()
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

fn require_admissible(sol: &GridSolution) -> Result<()> {
    if sol.admissible {
        Ok(())
    } else {
        Err(Error::Admissibility("solution has inadmissible nodes".into()))
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn interior_probe(sol: &GridSolution, cfg: &InteriorProbeConfig) -> Result<EstimateReport> {
    require_admissible(sol)?;
    let Shape::Ball { radius } = sol.domain.shape else {
        return Err(Error::Configuration("the interior probe needs a ball centred at the origin".into()));
    };
    let origin = sol
        .lattice
        .origin_slot()
        .ok_or_else(|| Error::Configuration("the origin is not a grid node; use an odd mesh".into()))?;
    let scaled_grad2: Vec<f64> = sol.du.iter().map(|g| norm2(g) / (radius * radius)).collect();
    let a_cap = cfg
        .a_cap
        .unwrap_or_else(|| scaled_grad2.iter().copied().fold(0.0, f64::max));
    if !(a_cap > 0.0 && a_cap.is_finite()) {
        return Err(Error::Configuration(format!("gradient cap A = {a_cap} must be positive")));
    }
    let mut best = (f64::NEG_INFINITY, origin);
    for (s, &p2) in scaled_grad2.iter().enumerate() {
        let t = p2 / 2.0;
        if t >= a_cap {
            return Err(Error::Configuration(format!(
                "|Du|²/2 = {t} reaches the cap A = {a_cap}; g is undefined"
            )));
        }
        if !sol.lattice.is_deep(s) {
            continue;
        }
        let y2 = norm2(&sol.coords(s)) / (radius * radius);
        let g = (1.0 - t / a_cap).powf(-1.0 / 3.0);
        let phi = (1.0 - y2) * g * sol.d2u[s].max_eigenvalue();
        if phi > best.0 {
            best = (phi, s);
        }
    }
    let sup_grad = sol.du.iter().map(|g| norm2(g).sqrt()).fold(0.0, f64::max);
    let c2 = sol.d2u[origin].norm();
    let mut report = EstimateReport::empty(sol.h());
    report.interior = Some(InteriorEstimate {
        sup_phi: best.0,
        sup_phi_at: sol.coords(best.1),
        a_cap,
        c2_at_origin: c2,
        sup_grad,
        interior_bound_ratio: c2 / (1.0 + sup_grad / radius),
    });
    Ok(report)
}

pub fn pogorelov_probe(sol: &GridSolution, cfg: &PogorelovProbeConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    require_admissible(sol)?;
    if let Some(s) = sol.first_nonnegative() {
        return Err(Error::MaximumPrinciple {
            node: sol.lattice.interior[s],
            value: sol.u[s],
        });
    }
    let deep: Vec<bool> = (0..sol.u.len()).map(|s| sol.lattice.is_deep(s)).collect();
    let lmax: Vec<f64> = sol.d2u.iter().map(|h| h.max_eigenvalue()).collect();
    let mut report = EstimateReport::empty(sol.h());

    let mut betas = cfg.betas.clone();
    betas.sort_by(f64::total_cmp);
    let mut monotone = true;
    for s in 0..sol.u.len() {
        let w = -sol.u[s];
        if w < 1.0 && lmax[s] > 0.0 {
            let vals: Vec<f64> = betas.iter().map(|b| w.powf(*b) * lmax[s]).collect();
            monotone &= vals.windows(2).all(|p| p[1] < p[0]);
        }
    }
    report.beta_monotone = Some(monotone);

    for &beta in &cfg.betas {
        let mut sup = (f64::NEG_INFINITY, 0);
        let mut pmax = (f64::NEG_INFINITY, 0);
        for s in 0..sol.u.len() {
            let w = -sol.u[s];
            if deep[s] {
                let v = w.powf(beta) * lmax[s];
                if v > sup.0 {
                    sup = (v, s);
                }
            }
            let p = beta * w.ln()
                + lmax[s].ln()
                + cfg.a / 2.0 * norm2(&sol.du[s])
                + cfg.big_a / 2.0 * norm2(&sol.coords(s));
            if p > pmax.0 {
                pmax = (p, s);
            }
        }
        report.pogorelov.push(PogorelovEntry {
            beta,
            sup_weighted: sup.0,
            sup_weighted_at: sol.coords(sup.1),
            p_tilde_max: pmax.0,
            p_tilde_at: sol.coords(pmax.1),
            p_tilde_deep: deep[pmax.1],
        });
    }
    Ok(report)
}

/// (h, value) pairs from coarse to fine plus the relative change between the
/// two finest meshes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub quantity: String,
    pub mesh_sequence: Vec<(f64, f64)>,
    pub relative_change: f64,
}

pub fn refinement(quantity: &str, mut points: Vec<(f64, f64)>) -> Result<Refinement> {
    if points.len() < 2 {
        return Err(Error::Configuration("refinement needs at least two meshes".into()));
    }
    points.sort_by(|a, b| b.0.total_cmp(&a.0));
    let [.., (_, coarse), (_, fine)] = points.as_slice() else {
        unreachable!()
    };
    Ok(Refinement {
        quantity: quantity.to_string(),
        relative_change: (fine - coarse).abs() / fine.abs(),
        mesh_sequence: points,
    })
}
