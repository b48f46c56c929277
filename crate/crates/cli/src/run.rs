//! The three commands.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::{json, Value};
use shq_core::probes::{
    interior_probe, pogorelov_probe, refinement, EstimateReport, InteriorProbeConfig, PogorelovProbeConfig,
};
use shq_core::solver::{read_snapshot, write_snapshot, ConstantRhs, PolynomialRhs, RadialQuartic};
use shq_core::verify::{run_sweep, Check, VerifyConfig};
use shq_core::{solve, DomainSpec, Error, GridSolution, OperatorSpec, Result, Rhs, SolveOptions, SolveOutput};

use crate::config::Config;
use crate::report::{sci, Report};

/// A report plus the files the command produced, written by the caller.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<(PathBuf, String)>,
}

pub fn verify_config(cfg: &Config) -> Result<VerifyConfig> {
    let checks = cfg
        .list::<String>("checks")?
        .iter()
        .map(|s| Check::parse(s))
        .collect::<Result<Vec<_>>>()?;
    let vc = VerifyConfig {
        n_min: cfg.get("n_min")?,
        n_max: cfg.get("n_max")?,
        identity_n_max: cfg.get("identity_n_max")?,
        alphas: cfg.list("alphas")?,
        samples: cfg.get("samples")?,
        seed: cfg.get("seed")?,
        directions: cfg.get("directions")?,
        tolerance: cfg.get("tolerance")?,
        identity_tolerance: cfg.get("identity_tolerance")?,
        checks,
        all_ones: cfg.get("all_ones")?,
    };
    vc.validate()?;
    Ok(vc)
}

pub fn run_verify(cfg: &Config) -> Result<RunOutput> {
    let vc = verify_config(cfg)?;
    let rep = run_sweep(&vc)?;
    let evaluations: u64 = rep.checks.iter().map(|c| c.evaluated).sum();
    let csv_rows = rep
        .checks
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{},{}",
                c.name,
                c.evaluated,
                c.failed,
                sci(c.worst_margin),
                sci(c.min_ratio)
            )
        })
        .collect();
    let results = json!({
        "checks": rep.checks,
        "constants": rep.constants,
        "total_failures": rep.total_failures,
    });
    let failures = rep.failures.iter().map(|f| json!(f)).collect();
    let timing = BTreeMap::from([
        ("configurations".to_string(), rep.configurations),
        ("evaluations".to_string(), evaluations),
    ]);
    Ok(RunOutput {
        report: Report {
            input_hash: cfg.input_hash(&[]),
            config: cfg.clone(),
            results,
            failures,
            timing,
            csv_header: "check,evaluated,failed,worst_margin,min_ratio".into(),
            csv_rows,
        },
        files: vec![],
    })
}

/// Everything a solve needs, checked before any work starts.
pub struct SolveSetup {
    pub spec: OperatorSpec,
    pub domains: Vec<DomainSpec>,
    pub rhs: Box<dyn Rhs>,
    /// The exact solution, when the right-hand side was manufactured from one.
    pub exact: Option<RadialQuartic>,
    pub opts: SolveOptions,
}

impl SolveSetup {
    pub fn from_config(cfg: &Config) -> Result<SolveSetup> {
        let spec = OperatorSpec::new(cfg.get("n")?, cfg.get("k")?, cfg.get("l")?, cfg.get("alpha")?)?;
        let meshes: Vec<usize> = cfg.list("mesh")?;
        if meshes.is_empty() {
            return Err(Error::Configuration("mesh list is empty".into()));
        }
        let radius: f64 = cfg.get("radius")?;
        let domains: Vec<DomainSpec> = match cfg.raw("domain") {
            "ball" => meshes.iter().map(|&m| DomainSpec::ball(spec.n, radius, m)).collect(),
            "box" => {
                let w: f64 = cfg.get("half_width")?;
                meshes.iter().map(|&m| DomainSpec::cube(spec.n, w, m)).collect()
            }
            other => return Err(Error::Configuration(format!("unknown domain {other:?}"))),
        };
        for d in &domains {
            d.validate()?;
        }
        let mut exact = None;
        let rhs: Box<dyn Rhs> = match cfg.raw("rhs") {
            "constant" => Box::new(ConstantRhs(cfg.get("f")?)),
            "radial-quartic" => {
                if cfg.raw("domain") != "ball" {
                    return Err(Error::Configuration("radial-quartic needs a ball domain".into()));
                }
                let q = RadialQuartic {
                    spec,
                    radius,
                    c: cfg.get("c")?,
                };
                exact = Some(q.clone());
                Box::new(q)
            }
            "polynomial" => Box::new(PolynomialRhs::new(
                cfg.get("poly_a")?,
                cfg.get("poly_b")?,
                cfg.get("poly_c")?,
                cfg.get("poly_d")?,
            )),
            other => return Err(Error::Configuration(format!("unknown rhs {other:?}"))),
        };
        let opts = SolveOptions {
            tol: cfg.get("tol")?,
            max_newton: cfg.get("max_newton")?,
            min_dt: cfg.get("min_dt")?,
        };
        Ok(SolveSetup {
            spec,
            domains,
            rhs,
            exact,
            opts,
        })
    }

    pub fn run(&self, domain: &DomainSpec) -> Result<SolveOutput> {
        solve(domain, self.rhs.as_ref(), &self.spec, &self.opts)
    }
}

fn solve_summary(out: &SolveOutput, exact: Option<&RadialQuartic>) -> Value {
    let sol = &out.solution;
    json!({
        "mesh": sol.domain.mesh,
        "h": sol.h(),
        "nodes": sol.u.len(),
        "residual_norm": sol.residual_norm,
        "admissible": sol.admissible,
        "newton_iterations": out.newton_iterations,
        "continuation": out.continuation,
        "rejected_stages": out.rejected_stages,
        "max_error": exact.map(|q| sol.max_error(|x| q.exact(x))),
    })
}

/// Observed order log(e₁/e₂)/log(h₁/h₂) between consecutive meshes.
pub fn convergence_orders(points: &[(usize, f64, f64)]) -> Vec<Value> {
    points
        .windows(2)
        .map(|w| {
            let ((m1, h1, e1), (m2, h2, e2)) = (w[0], w[1]);
            json!({ "meshes": [m1, m2], "order": (e1 / e2).ln() / (h1 / h2).ln() })
        })
        .collect()
}

fn snapshot_path(base: &str, mesh: usize, many: bool) -> PathBuf {
    if many {
        PathBuf::from(format!("{base}.{mesh}"))
    } else {
        PathBuf::from(base)
    }
}

pub fn run_solve(cfg: &Config) -> Result<RunOutput> {
    let setup = SolveSetup::from_config(cfg)?;
    let tol = setup.opts.tol;
    let base = cfg.raw("snapshot").to_string();
    let many = setup.domains.len() > 1;
    let mut meshes = vec![];
    let mut failures = vec![];
    let mut files = vec![];
    let mut errors = vec![];
    let mut csv_rows = vec![];
    let (mut iterations, mut stages, mut rejected) = (0u64, 0u64, 0u64);
    for domain in &setup.domains {
        let out = setup.run(domain)?;
        let sol = &out.solution;
        let mut summary = solve_summary(&out, setup.exact.as_ref());
        if !base.is_empty() {
            let path = snapshot_path(&base, domain.mesh, many);
            summary["snapshot"] = json!(path.display().to_string());
            files.push((path, write_snapshot(sol)));
        }
        if !(sol.residual_norm <= tol) {
            failures.push(json!({ "mesh": domain.mesh, "detail": format!("residual {:e} above {tol:e}", sol.residual_norm) }));
        }
        if !sol.admissible {
            failures.push(json!({ "mesh": domain.mesh, "detail": "solution left the admissible cone" }));
        }
        let err = summary["max_error"].as_f64();
        if let Some(e) = err {
            errors.push((domain.mesh, sol.h(), e));
        }
        csv_rows.push(format!(
            "{},{:e},{},{:e},{},{},{},{}",
            domain.mesh,
            sol.h(),
            sol.u.len(),
            sol.residual_norm,
            out.newton_iterations,
            out.continuation.len(),
            out.rejected_stages,
            sci(err)
        ));
        iterations += out.newton_iterations as u64;
        stages += out.continuation.len() as u64;
        rejected += out.rejected_stages as u64;
        meshes.push(summary);
    }
    let results = json!({
        "spec": setup.spec,
        "rhs": setup.rhs.describe(),
        "meshes": meshes,
        "orders": convergence_orders(&errors),
    });
    let timing = BTreeMap::from([
        ("newton_iterations".to_string(), iterations),
        ("continuation_stages".to_string(), stages),
        ("rejected_stages".to_string(), rejected),
    ]);
    Ok(RunOutput {
        report: Report {
            input_hash: cfg.input_hash(&[]),
            config: cfg.clone(),
            results,
            failures,
            timing,
            csv_header: "mesh,h,nodes,residual_norm,newton_iterations,continuation_stages,rejected_stages,max_error"
                .into(),
            csv_rows,
        },
        files,
    })
}

fn probe_one(sol: &GridSolution, cfg: &Config) -> Result<EstimateReport> {
    let probes: Vec<String> = cfg.list("probes")?;
    let mut report: Option<EstimateReport> = None;
    for p in &probes {
        let r = match p.as_str() {
            "interior" => interior_probe(sol, &InteriorProbeConfig { a_cap: cfg.optional("a_cap")? })?,
            "pogorelov" => {
                let pc = PogorelovProbeConfig {
                    betas: cfg.list("betas")?,
                    a: cfg.get("a")?,
                    big_a: cfg.get("big_a")?,
                };
                pogorelov_probe(sol, &pc)?
            }
            other => return Err(Error::Configuration(format!("unknown probe {other:?}"))),
        };
        report = Some(match report {
            Some(prev) => prev.merge(r),
            None => r,
        });
    }
    report.ok_or_else(|| Error::Configuration("no probes selected".into()))
}

pub fn run_probe(cfg: &Config) -> Result<RunOutput> {
    let inputs: Vec<String> = cfg.list("input")?;
    let mut sols = vec![];
    let mut solves = vec![];
    let mut raw_inputs = vec![];
    if inputs.is_empty() {
        let setup = SolveSetup::from_config(cfg)?;
        for d in &setup.domains {
            let out = setup.run(d)?;
            solves.push(solve_summary(&out, setup.exact.as_ref()));
            sols.push(out.solution);
        }
    } else {
        for path in &inputs {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Configuration(format!("cannot read snapshot {path}: {e}")))?;
            sols.push(read_snapshot(&text)?);
            raw_inputs.push(text);
        }
    }
    let tolerance: f64 = cfg.get("stability_tolerance")?;
    let mut failures = vec![];
    let mut estimates = vec![];
    let mut csv_rows = vec![];
    for sol in &sols {
        let est = probe_one(sol, cfg)?;
        if !est.is_finite() {
            failures.push(json!({ "mesh": sol.domain.mesh, "detail": "non-finite estimate" }));
        }
        for row in est.csv_rows() {
            csv_rows.push(format!("{},{row}", sol.domain.mesh));
        }
        estimates.push(json!({ "mesh": sol.domain.mesh, "estimate": est }));
    }

    let mut stability = vec![];
    if sols.len() >= 2 {
        let reports: Vec<EstimateReport> = estimates
            .iter()
            .map(|e| serde_json::from_value(e["estimate"].clone()).expect("round trip"))
            .collect();
        let mut series: Vec<(String, Vec<(f64, f64)>)> = vec![];
        if reports.iter().all(|r| r.interior.is_some()) {
            series.push((
                "sup_phi".into(),
                reports.iter().map(|r| (r.h, r.interior.as_ref().unwrap().sup_phi)).collect(),
            ));
        }
        for e in &reports[0].pogorelov {
            let b = e.beta;
            let pts: Option<Vec<(f64, f64)>> = reports.iter().map(|r| r.sup_weighted(b).map(|v| (r.h, v))).collect();
            if let Some(pts) = pts {
                series.push((format!("sup_pogorelov[{b}]"), pts));
            }
        }
        for (name, pts) in series {
            let r = refinement(&name, pts)?;
            if !(r.relative_change <= tolerance) {
                failures.push(json!({
                    "quantity": name,
                    "detail": format!("changed by {:.3}% between the finest meshes", 100.0 * r.relative_change),
                }));
            }
            stability.push(json!({
                "quantity": r.quantity,
                "mesh_sequence": r.mesh_sequence,
                "relative_change": r.relative_change,
                "percent": 100.0 * r.relative_change,
            }));
        }
    }
    let nodes: u64 = sols.iter().map(|s| s.u.len() as u64).sum();
    let results = json!({
        "solves": solves,
        "estimates": estimates,
        "stability": stability,
        "max_u": sols.iter().flat_map(|s| s.u.iter().copied()).fold(f64::NEG_INFINITY, f64::max),
    });
    let timing = BTreeMap::from([("solutions".to_string(), sols.len() as u64), ("nodes".to_string(), nodes)]);
    let input_bytes: Vec<&[u8]> = raw_inputs.iter().map(|s| s.as_bytes()).collect();
    Ok(RunOutput {
        report: Report {
            input_hash: cfg.input_hash(&input_bytes),
            config: cfg.clone(),
            results,
            failures,
            timing,
            csv_header: format!("mesh,{}", EstimateReport::CSV_HEADER),
            csv_rows,
        },
        files: vec![],
    })
}
