//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

#[path = "../../core/tests/common/fd.rs"]
mod fd;
mod support;

use std::process::{Command as Process, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;
use shq_cli::{run, Command, Config};
use shq_core::matrix::second_derivative_form;
use shq_core::solver::ConstantRhs;
use shq_core::symfunc::sigma_all;
use shq_core::verify::{Check, VerifyReport};
use shq_core::{sample_cone, solve, ConeId, DomainSpec, OperatorSpec, SolveOptions};
use support::exact::{exact_sigmas, ulp_gap};

type Outcome = Result<String, String>;

fn verify(pairs: &[(&str, &str)]) -> Result<(Value, VerifyReport), String> {
    let cfg = Config::from_pairs(Command::Verify, pairs).map_err(|e| e.to_string())?;
    let out = run(&cfg).map_err(|e| e.to_string())?;
    let results = &out.report.results;
    let report = VerifyReport {
        checks: serde_json::from_value(results["checks"].clone()).map_err(|e| e.to_string())?,
        constants: serde_json::from_value(results["constants"].clone()).map_err(|e| e.to_string())?,
        failures: vec![],
        total_failures: results["total_failures"].as_u64().unwrap_or(u64::MAX),
        configurations: 0,
    };
    Ok((results.clone(), report))
}

fn require_clean(rep: &VerifyReport, checks: &[Check]) -> Outcome {
    let mut parts = vec![];
    for &c in checks {
        let s = rep.check(c).ok_or(format!("{c} missing"))?;
        if s.failed > 0 || s.evaluated == 0 {
            return Err(format!("{c}: {} of {} failed, worst {:?}", s.failed, s.evaluated, s.worst_case));
        }
        parts.push(format!("{c} {} ok", s.evaluated));
    }
    Ok(parts.join(", "))
}

fn identities() -> Outcome {
    let start = Instant::now();
    let (_, rep) = verify(&[("checks", "sum-identities"), ("identity_n_max", "8"), ("n_max", "2")])?;
    let elapsed = start.elapsed();
    let s = rep.check(Check::SumIdentities).ok_or("no identity summary")?;
    if s.failed > 0 {
        return Err(format!("{} of {} identities failed", s.failed, s.evaluated));
    }
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:.1?}, target 60 s"));
    }
    let worst = s.worst_margin.unwrap_or(0.0);
    Ok(format!("{} evaluations, worst normalized margin {worst:.2e}, {elapsed:.1?}", s.evaluated))
}

fn dp_matches_exact_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for t in 0..1000 {
        let n = 2 + t % 11;
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                x * 2f64.powi(rng.random_range(-8..=8))
            })
            .collect();
        let dp = sigma_all(&v, n);
        let exact = exact_sigmas(&v);
        for k in 0..=n {
            let gap = ulp_gap(dp[k], &exact[k]);
            if gap > 4.0 {
                return Err(format!("tuple {t} k={k}: {gap} ulp apart, {v:?}"));
            }
            worst = worst.max(gap);
        }
    }
    Ok(format!("1000 tuples, n 2..=12, worst {worst} ulp"))
}

const INEQUALITIES: &[Check] = &[
    Check::NewtonMaclaurin,
    Check::SumNewton,
    Check::QuotientMonotone,
    Check::ConcavityDefect,
    Check::MatrixConcavity,
    Check::ConeNesting,
    Check::ConeConvexity,
    Check::ScalingLaw,
];
const ORDERINGS: &[Check] = &[
    Check::DeletedOrdering,
    Check::EtaOrdering,
    Check::EtaGradientOrdering,
    Check::GradientOrdering,
    Check::MatrixOrdering,
];

fn cone_sweep() -> Result<(Value, VerifyReport), String> {
    let names: Vec<&str> = Check::ALL
        .iter()
        .filter(|c| **c != Check::SumIdentities)
        .map(|c| c.name())
        .collect();
    verify(&[("checks", &names.join(","))])
}

fn inequalities(rep: &VerifyReport) -> Outcome {
    require_clean(rep, INEQUALITIES)
}

fn orderings(rep: &VerifyReport) -> Outcome {
    let done = require_clean(rep, ORDERINGS)?;
    require_clean(rep, &[Check::GradientBounds])?;
    let min = |f: fn(&shq_core::verify::ConstantRow) -> Option<f64>| {
        rep.constants.iter().filter_map(f).fold(f64::INFINITY, f64::min)
    };
    let deleted = min(|r| r.deleted_ratio);
    let share = min(|r| r.gradient_share);
    let sum = min(|r| r.gradient_sum_ratio);
    if !(deleted > 0.0 && share > 0.0 && sum > 0.0) {
        return Err(format!("non-positive ratio minimum: deleted {deleted}, share {share}, sum {sum}"));
    }
    Ok(format!(
        "{done}; minima: deleted ratio {deleted:.4e}, gradient share {share:.4e}, gradient sum ratio {sum:.4e}"
    ))
}

fn gradient_sum(rep: &VerifyReport) -> Outcome {
    require_clean(rep, &[Check::GradientSum])
}

fn specs() -> Vec<OperatorSpec> {
    let mut out = vec![];
    for n in 2..=6 {
        for k in 1..=n {
            for l in 0..k {
                for alpha in [0.0, 0.5, 3.0] {
                    out.push(OperatorSpec::new(n, k, l, alpha).unwrap());
                }
            }
        }
    }
    out
}

fn derivatives() -> Outcome {
    let specs = specs();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut grad, mut hess, mut form, mut degenerate) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut accepted, mut redrawn, mut seed) = (0, 0, 0u64);
    while accepted < 1000 {
        let spec = &specs[seed as usize % specs.len()];
        seed += 1;
        let lam = sample_cone(ConeId::GammaPrime, spec, seed).map_err(|e| e.to_string())?.lam.into_inner();
        // a sample whose stencil leaves the cone is too close to the boundary
        let (Some(g), Some(h)) = (fd::gradient_gap(spec, &lam, 1e-5), fd::hessian_gap(spec, &lam, 1e-5)) else {
            redrawn += 1;
            continue;
        };
        let field = fd::rotated(&lam, seed);
        let dir = fd::random_symmetric(spec.n, &mut rng);
        let analytic = second_derivative_form(spec, &field, &dir).map_err(|e| e.to_string())?;
        let Some(reference) = fd::second_form_reference(spec, &field, &dir, 1e-3) else {
            redrawn += 1;
            continue;
        };
        grad = grad.max(g);
        hess = hess.max(h);
        form = form.max(fd::second_form_gap(spec, &field, &dir, analytic, reference));
        accepted += 1;

        if let Some(rep) = fd::with_repeated(spec, &lam, if accepted % 2 == 0 { 2 } else { spec.n }) {
            let field = fd::rotated(&rep, seed + 1_000_000);
            let analytic = second_derivative_form(spec, &field, &dir).map_err(|e| e.to_string())?;
            if let Some(reference) = fd::second_form_reference(spec, &field, &dir, 1e-3) {
                degenerate = degenerate.max(fd::second_form_gap(spec, &field, &dir, analytic, reference));
            }
        }
    }
    let detail = format!(
        "1000 samples ({redrawn} redrawn near the boundary): gradient {grad:.2e}, Hessian {hess:.2e}, \
         matrix form {form:.2e}, repeated spectrum {degenerate:.2e}"
    );
    if grad <= 1e-5 && hess <= 1e-5 && form <= 1e-5 && degenerate <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn manufactured_quadratic() -> Outcome {
    let start = Instant::now();
    let spec = OperatorSpec::new(3, 2, 0, 1.0).unwrap();
    let out = solve(&DomainSpec::ball(3, 1.0, 17), &ConstantRhs(18.0), &spec, &SolveOptions::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let err = out.solution.max_error(|x| (x.iter().map(|v| v * v).sum::<f64>() - 1.0) / 2.0);
    let detail = format!("max error {err:.2e}, {} Newton steps, {elapsed:.1?}", out.newton_iterations);
    if err <= 1e-8 && elapsed < Duration::from_secs(120) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn convergence_order() -> Outcome {
    let cfg = Config::from_pairs(Command::Solve, &[("mesh", "17,33"), ("rhs", "radial-quartic"), ("c", "0.5")])
        .map_err(|e| e.to_string())?;
    let out = run(&cfg).map_err(|e| e.to_string())?;
    let r = &out.report.results;
    let order = r["orders"][0]["order"].as_f64().ok_or("no order in report")?;
    let errs: Vec<f64> = r["meshes"].as_array().unwrap().iter().map(|m| m["max_error"].as_f64().unwrap()).collect();
    let detail = format!("n=3 (2,0,1), errors {:.3e} / {:.3e}, order {order:.3}", errs[0], errs[1]);
    if (1.7..=2.3).contains(&order) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const PROBE_RHS: &[(&str, &str)] = &[
    ("rhs", "polynomial"),
    ("poly_a", "2"),
    ("poly_b", "1"),
    ("poly_c", "0.1"),
    ("mesh", "9,13,17"),
    ("alpha", "0.5"),
];

fn probe(k: &str, l: &str, betas: &str) -> Result<Value, String> {
    let mut pairs = PROBE_RHS.to_vec();
    pairs.extend([("n", "3"), ("k", k), ("l", l), ("betas", betas), ("probes", "pogorelov")]);
    let cfg = Config::from_pairs(Command::Probe, &pairs).map_err(|e| e.to_string())?;
    let out = run(&cfg).map_err(|e| e.to_string())?;
    if out.report.results["max_u"].as_f64().is_none_or(|u| u >= 0.0) {
        return Err(format!("k={k} l={l}: u is not negative everywhere"));
    }
    Ok(out.report.to_json().parse::<Value>().unwrap())
}

fn probe_stability() -> Outcome {
    let mut parts = vec![];
    for l in ["0", "1"] {
        let rep = probe("2", l, "1")?;
        let stab = &rep["results"]["stability"][0];
        let pct = stab["percent"].as_f64().ok_or("no stability entry")?;
        if pct > 5.0 {
            return Err(format!("k=2 l={l}: sup (-u) lambda_max moved {pct:.2}%"));
        }
        parts.push(format!("k=2 l={l} change {pct:.2}%"));
    }
    for l in ["0", "1"] {
        let rep = probe("3", l, "1,1.5,2,3,5")?;
        for est in rep["results"]["estimates"].as_array().unwrap() {
            for e in est["estimate"]["pogorelov"].as_array().unwrap() {
                if !e["sup_weighted"].as_f64().is_some_and(f64::is_finite) {
                    return Err(format!("k=3 l={l}: non-finite sup at beta {}", e["beta"]));
                }
            }
        }
        parts.push(format!("k=3 l={l} five betas finite"));
    }
    Ok(format!("{}; u < 0 at every node", parts.join(", ")))
}

fn shq(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Process::new(env!("CARGO_BIN_EXE_shq"))
        .args(args)
        .env_remove("SHQ_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("shq {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("shq-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let snap = dir.join("u.snap");
    let snap_arg = format!("--snapshot={}", snap.display());
    let input_arg = format!("--input={}", snap.display());
    let commands: Vec<Vec<&str>> = vec![
        vec!["verify", "--samples=300", "--seed=17"],
        vec!["verify", "--samples=300", "--seed=17", "--format", "csv"],
        vec!["solve", "--mesh=13", "--rhs=radial-quartic", &snap_arg],
        vec!["probe", &input_arg],
        vec!["probe", "--n=3", "--k=3", "--l=1", "--mesh=9,13", "--rhs=polynomial", "--poly_b=1"],
    ];
    let mut snaps = vec![];
    for cmd in &commands {
        let first = shq(cmd)?;
        if cmd[0] == "solve" {
            snaps.push(std::fs::read(&snap).map_err(|e| e.to_string())?);
        }
        let second = shq(cmd)?;
        if cmd[0] == "solve" {
            snaps.push(std::fs::read(&snap).map_err(|e| e.to_string())?);
        }
        if first != second {
            return Err(format!("{cmd:?} produced different bytes"));
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    if snaps[0] != snaps[1] {
        return Err("snapshot bytes differ between runs".into());
    }
    Ok(format!("{} commands re-run byte-identical, snapshot included", commands.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome, took: Duration| {
        match outcome {
            Ok(d) => println!("[PASS] {name}: {d} ({took:.1?})"),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {name}: {d} ({took:.1?})");
            }
        }
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed())
    };

    let (o, t) = timed(&identities);
    report("1 sum identities, n up to 8", o, t);
    let (o, t) = timed(&dp_matches_exact_enumeration);
    report("2 recurrence against exact subset enumeration", o, t);

    let t0 = Instant::now();
    let sweep = cone_sweep();
    let sweep_time = t0.elapsed();
    match &sweep {
        Ok((_, rep)) => {
            report("3 inequalities on cone samples", inequalities(rep), sweep_time);
            report("4 orderings and positive ratios", orderings(rep), Duration::ZERO);
        }
        Err(e) => {
            report("3 inequalities on cone samples", Err(e.clone()), sweep_time);
            report("4 orderings and positive ratios", Err(e.clone()), Duration::ZERO);
        }
    }
    let (o, t) = timed(&derivatives);
    report("5 derivatives against finite differences", o, t);
    match &sweep {
        Ok((_, rep)) => report("6 gradient sum identity", gradient_sum(rep), Duration::ZERO),
        Err(e) => report("6 gradient sum identity", Err(e.clone()), Duration::ZERO),
    }
    let (o, t) = timed(&manufactured_quadratic);
    report("7 manufactured quadratic on 17^3", o, t);
    let (o, t) = timed(&convergence_order);
    report("8 second-order convergence 17^3 to 33^3", o, t);
    let (o, t) = timed(&probe_stability);
    report("9 probe stability under refinement", o, t);
    let (o, t) = timed(&determinism);
    report("10 byte-identical reruns", o, t);

    if failed == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
