//! Randomized sweeps over (n, k, l, α) that evaluate every identity, inequality
//! and ordering of the symmetric-function calculus on cone samples.
//!
//! Samples are keyed only by (seed, configuration, sample index), and partial
//! tallies merge associatively, so the report does not depend on how rayon
//! schedules the work.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{eta_values, in_gamma_tilde, sample_cone, ConeId};
use crate::error::{Error, Result};
use crate::matrix::{root_spectral, spectral_second_form, t_diagonal, SymmetricField};
use crate::quotient::{
    check_grad_bounds, check_maclaurin, check_quotient_monotone, check_sum_newton, concavity_margin, f_eta_grad,
    f_grad, f_hess, f_value, Margin,
};
use crate::symfunc::{s_sum, s_sum_deleted, s_sum_grad, sigma, OperatorSpec};

macro_rules! checks {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "kebab-case")]
        pub enum Check { $($variant),* }

        impl Check {
            pub const ALL: &'static [Check] = &[$(Check::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Check::$variant => $name),* }
            }
        }
    };
}

checks! {
    SumIdentities => "sum-identities",
    ConeNesting => "cone-nesting",
    ConeConvexity => "cone-convexity",
    NewtonMaclaurin => "newton-maclaurin",
    SumNewton => "sum-newton",
    QuotientMonotone => "quotient-monotone",
    ConcavityDefect => "concavity-defect",
    ScalingLaw => "scaling-law",
    DeletedOrdering => "deleted-ordering",
    EtaOrdering => "eta-ordering",
    EtaGradientOrdering => "eta-gradient-ordering",
    GradientOrdering => "gradient-ordering",
    GradientBounds => "gradient-bounds",
    GradientSum => "gradient-sum",
    MatrixConcavity => "matrix-concavity",
    MatrixOrdering => "matrix-ordering",
}

impl Check {
    pub fn parse(s: &str) -> Result<Check> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Configuration(format!("unknown check {s:?}")))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub n_min: usize,
    /// Largest n for the cone-based checks.
    pub n_max: usize,
    /// Largest n for the sum identities, which need no cone sampling.
    pub identity_n_max: usize,
    pub alphas: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    /// Random directions per sample for the concavity checks.
    pub directions: usize,
    /// Inequalities pass when margin ≥ −tolerance · scale.
    pub tolerance: f64,
    /// Relative tolerance for identities.
    pub identity_tolerance: f64,
    /// Empty means every check.
    pub checks: Vec<Check>,
    /// Replace every random tuple by (1, …, 1).
    pub all_ones: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n_min: 2,
            n_max: 6,
            identity_n_max: 8,
            alphas: vec![0.0, 0.5, 3.0],
            samples: 10_000,
            seed: 0,
            directions: 10,
            tolerance: 1e-9,
            identity_tolerance: 1e-10,
            checks: vec![],
            all_ones: false,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Configuration("samples must be at least 1".into()));
        }
        if self.n_min < 2 || self.n_min > self.n_max.max(self.identity_n_max) {
            return Err(Error::Configuration(format!(
                "bad dimension range {}..={}",
                self.n_min,
                self.n_max.max(self.identity_n_max)
            )));
        }
        if self.n_max > 12 || self.identity_n_max > 12 {
            return Err(Error::Configuration("dimensions above 12 are not supported".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Configuration("alphas must be a non-empty list of finite values ≥ 0".into()));
        }
        if !(self.tolerance >= 0.0 && self.identity_tolerance >= 0.0) {
            return Err(Error::Configuration("tolerances must be non-negative".into()));
        }
        Ok(())
    }

    fn enabled(&self, c: Check) -> bool {
        self.checks.is_empty() || self.checks.contains(&c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluated: u64,
    pub failed: u64,
    /// Smallest normalized margin seen (negative means a violation).
    pub worst_margin: Option<f64>,
    pub worst_case: Option<String>,
    /// Smallest empirical ratio, for checks whose constant is only known to
    /// be positive.
    pub min_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub check: String,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub alpha: f64,
    pub sample: u64,
    pub detail: String,
}

/// Observed minima of ratios bounded below by unspecified positive constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantRow {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub alpha: f64,
    /// min S_{k−1}(λ|k)/S_{k−1}(λ) over sorted samples.
    pub deleted_ratio: Option<f64>,
    /// min_i ∂F/∂λ_i / Σ_j ∂F/∂λ_j.
    pub gradient_share: Option<f64>,
    /// min Σ_i ∂F/∂λ_i / F^{1−1/(k−l)}.
    pub gradient_sum_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckSummary>,
    pub constants: Vec<ConstantRow>,
    /// The first failures in sweep order, at most `MAX_FAILURES`.
    pub failures: Vec<FailureRecord>,
    pub total_failures: u64,
    pub configurations: u64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }

    pub fn check(&self, c: Check) -> Option<&CheckSummary> {
        self.checks.iter().find(|s| s.name == c.name())
    }
}

pub const MAX_FAILURES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Loc {
    cfg: usize,
    sample: u64,
}

#[derive(Clone, Debug)]
struct Case {
    spec: OperatorSpec,
    alpha_index: usize,
    idx: usize,
}

#[derive(Clone, Debug, Default)]
struct Tally {
    evaluated: u64,
    failed: u64,
    worst: Option<(f64, Loc, String)>,
    min_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default)]
struct Acc {
    tallies: Vec<Tally>,
    failures: Vec<(Loc, Check, String)>,
    total_failures: u64,
    deleted_ratio: Option<f64>,
    gradient_share: Option<f64>,
    gradient_sum_ratio: Option<f64>,
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl Acc {
    fn new() -> Acc {
        Acc {
            tallies: vec![Tally::default(); Check::ALL.len()],
            ..Default::default()
        }
    }

    fn record(&mut self, check: Check, loc: Loc, pass: bool, score: f64, detail: impl FnOnce() -> String) {
        let t = &mut self.tallies[check as usize];
        t.evaluated += 1;
        let worse = match &t.worst {
            None => true,
            Some((s, l, _)) => score < *s || (score == *s && loc < *l),
        };
        if !pass || worse {
            let d = detail();
            if worse {
                t.worst = Some((score, loc, d.clone()));
            }
            if !pass {
                t.failed += 1;
                self.total_failures += 1;
                if self.failures.len() < MAX_FAILURES {
                    self.failures.push((loc, check, d));
                }
            }
        }
    }

    fn ratio(&mut self, check: Check, value: f64) {
        let t = &mut self.tallies[check as usize];
        t.min_ratio = min_opt(t.min_ratio, Some(value));
    }

    fn margin(&mut self, check: Check, loc: Loc, m: Margin, tol: f64, what: impl FnOnce() -> String) {
        let pass = m.holds(tol);
        self.record(check, loc, pass, m.relative(), || {
            format!("{}: margin {:e} at scale {:e}", what(), m.value, m.scale)
        });
    }

    fn merge(mut self, other: Acc) -> Acc {
        for (a, b) in self.tallies.iter_mut().zip(other.tallies) {
            a.evaluated += b.evaluated;
            a.failed += b.failed;
            a.min_ratio = min_opt(a.min_ratio, b.min_ratio);
            if let Some(bw) = b.worst {
                let take = match &a.worst {
                    None => true,
                    Some((s, l, _)) => bw.0 < *s || (bw.0 == *s && bw.1 < *l),
                };
                if take {
                    a.worst = Some(bw);
                }
            }
        }
        self.failures.extend(other.failures);
        self.failures.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        self.failures.truncate(MAX_FAILURES);
        self.total_failures += other.total_failures;
        self.deleted_ratio = min_opt(self.deleted_ratio, other.deleted_ratio);
        self.gradient_share = min_opt(self.gradient_share, other.gradient_share);
        self.gradient_sum_ratio = min_opt(self.gradient_sum_ratio, other.gradient_sum_ratio);
        self
    }
}

/// SplitMix64 finalizer, used to derive independent per-sample seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_seed(base: u64, stream: u64, case: &Case, sample: u64) -> u64 {
    let s = &case.spec;
    [stream, s.n as u64, s.k as u64, s.l as u64, case.alpha_index as u64, sample]
        .iter()
        .fold(mix(base), |acc, v| mix(acc ^ v))
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

struct Sweep<'a> {
    cfg: &'a VerifyConfig,
}

impl Sweep<'_> {
    fn cone(&self, id: ConeId, spec: &OperatorSpec, seed: u64) -> Result<Vec<f64>> {
        if self.cfg.all_ones {
            return Ok(vec![1.0; spec.n]);
        }
        Ok(sample_cone(id, spec, seed)?.lam.into_inner())
    }

    fn raw(&self, n: usize, seed: u64) -> Vec<f64> {
        if self.cfg.all_ones {
            return vec![1.0; n];
        }
        normal_vec(&mut ChaCha8Rng::seed_from_u64(seed), n)
    }

    fn identities(&self, case: &Case, loc: Loc, acc: &mut Acc) {
        let s = &case.spec;
        let (k, alpha, n) = (s.k as i32, s.alpha, s.n);
        let lam = self.raw(n, sample_seed(self.cfg.seed, 1, case, loc.sample));
        let tol = self.cfg.identity_tolerance;
        let sk = s_sum(k, alpha, &lam);
        let sig_km1 = sigma(k - 1, &lam);
        let compare = |acc: &mut Acc, label: &str, a: f64, b: f64| {
            let err = (a - b).abs();
            let pass = err <= tol * a.abs().max(b.abs()) + 1e-12;
            acc.record(Check::SumIdentities, loc, pass, -rel_err(a, b), || {
                format!("{label}: {a:e} vs {b:e} at {lam:?}")
            });
        };
        let mut sum_deleted = 0.0;
        let mut sum_weighted = 0.0;
        for i in 0..n {
            let skm1_i = s_sum_deleted(k - 1, alpha, &lam, &[i]).expect("valid index");
            let sk_i = s_sum_deleted(k, alpha, &lam, &[i]).expect("valid index");
            compare(acc, "expansion along one entry", sk, lam[i] * skm1_i + sk_i);
            sum_deleted += sk_i;
            sum_weighted += lam[i] * skm1_i;
        }
        compare(
            acc,
            "sum of deleted values",
            sum_deleted,
            (n as f64 - k as f64) * sk + alpha * sig_km1,
        );
        compare(acc, "weighted sum of deleted values", sum_weighted, k as f64 * sk - alpha * sig_km1);
    }

    fn cone_case(&self, case: &Case, loc: Loc, acc: &mut Acc) -> Result<()> {
        let cfg = self.cfg;
        let spec = &case.spec;
        let (n, k, l, alpha) = (spec.n, spec.k, spec.l, spec.alpha);
        let seed = |stream| sample_seed(cfg.seed, stream, case, loc.sample);
        let tol = cfg.tolerance;
        let on = |c| cfg.enabled(c);

        // Γ̃_k samples
        let needs_tilde = [
            Check::ConeConvexity,
            Check::SumNewton,
            Check::QuotientMonotone,
            Check::DeletedOrdering,
        ]
        .iter()
        .any(|&c| on(c));
        if needs_tilde {
            let lam = sorted_desc(self.cone(ConeId::GammaTilde, spec, seed(2))?);
            if on(Check::ConeConvexity) {
                let other = self.cone(ConeId::GammaTilde, spec, seed(3))?;
                let mid: Vec<f64> = lam.iter().zip(&other).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
                let pass = in_gamma_tilde(k, alpha, &mid);
                acc.record(Check::ConeConvexity, loc, pass, if pass { 0.0 } else { -1.0 }, || {
                    format!("midpoint {mid:?} left the cone")
                });
            }
            if on(Check::SumNewton) && l >= 1 {
                let (sigma_m, sum_m) = check_sum_newton(spec, &lam, k, l)?;
                acc.margin(Check::SumNewton, loc, sigma_m, tol, || format!("sigma form at {lam:?}"));
                acc.margin(Check::SumNewton, loc, sum_m, tol, || format!("shifted form at {lam:?}"));
            }
            if on(Check::QuotientMonotone) {
                for p in 1..=k {
                    for q in 0..p.min(l + 1) {
                        let m = check_quotient_monotone(spec, &lam, p, q)?;
                        acc.margin(Check::QuotientMonotone, loc, m, tol, || format!("p={p} q={q} at {lam:?}"));
                    }
                }
            }
            if on(Check::DeletedOrdering) {
                let g = s_sum_grad(k as i32, alpha, &lam);
                let mut gap = f64::INFINITY;
                for p in 0..n - 1 {
                    gap = gap.min(g[p + 1] - g[p]);
                }
                let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let pass = gap >= 0.0 && g[0] > 0.0;
                acc.record(Check::DeletedOrdering, loc, pass, gap.min(g[0]) / scale, || {
                    format!("deleted values {g:?} at {lam:?}")
                });
                let ratio = g[k - 1] / s_sum(k as i32 - 1, alpha, &lam);
                acc.ratio(Check::DeletedOrdering, ratio);
                acc.deleted_ratio = min_opt(acc.deleted_ratio, Some(ratio));
                if !(ratio > 0.0) {
                    acc.record(Check::DeletedOrdering, loc, false, -1.0, || {
                        format!("ratio {ratio:e} not positive at {lam:?}")
                    });
                }
            }
        }

        if on(Check::ConeNesting) && k < n {
            let up = spec.with_indices(k + 1, l)?;
            let lam = self.cone(ConeId::GammaTilde, &up, seed(4))?;
            let pass = in_gamma_tilde(k, alpha, &lam);
            acc.record(Check::ConeNesting, loc, pass, if pass { 0.0 } else { -1.0 }, || {
                format!("{lam:?} is in the cone of index {} but not {k}", k + 1)
            });
        }

        if on(Check::NewtonMaclaurin) && k < n && l == 0 && case.alpha_index == 0 {
            let positive = OperatorSpec::new(n, n, 0, 0.0)?;
            let lam = self.cone(ConeId::Gamma, &positive, seed(5))?;
            let m = check_maclaurin(&lam, k)?;
            acc.margin(Check::NewtonMaclaurin, loc, m, tol, || format!("k={k} at {lam:?}"));
        }

        let needs_prime = [
            Check::ConcavityDefect,
            Check::ScalingLaw,
            Check::EtaOrdering,
            Check::EtaGradientOrdering,
            Check::GradientOrdering,
            Check::GradientBounds,
            Check::GradientSum,
            Check::MatrixConcavity,
            Check::MatrixOrdering,
        ]
        .iter()
        .any(|&c| on(c));
        if !needs_prime {
            return Ok(());
        }
        let lam = sorted_desc(self.cone(ConeId::GammaPrime, spec, seed(6))?);
        let mut rng = ChaCha8Rng::seed_from_u64(seed(7));

        if on(Check::ConcavityDefect) {
            let q = f_hess(spec, &lam)?;
            let h = q.hess.as_ref().expect("full");
            for _ in 0..cfg.directions {
                let xi = normal_vec(&mut rng, n);
                let m = concavity_margin(spec, q.value, &q.grad, h, &xi);
                acc.margin(Check::ConcavityDefect, loc, m, tol, || format!("xi={xi:?} at {lam:?}"));
            }
        }

        if on(Check::ScalingLaw) {
            // powers of two scale λ and α without rounding
            let t = [0.25, 0.5, 2.0, 4.0][rng.random_range(0..4)];
            let scaled = OperatorSpec::new(n, k, l, alpha * t)?;
            let tl: Vec<f64> = lam.iter().map(|v| v * t).collect();
            let a = f_value(&scaled, &tl)?;
            let b = t.powi((k - l) as i32) * f_value(spec, &lam)?;
            acc.record(
                Check::ScalingLaw,
                loc,
                rel_err(a, b) <= cfg.identity_tolerance,
                -rel_err(a, b),
                || format!("t={t}: {a:e} vs {b:e} at {lam:?}"),
            );
        }

        if on(Check::EtaOrdering) {
            let eta = eta_values(&lam);
            let mut pass = eta.windows(2).all(|w| w[0] <= w[1]);
            if k >= 2 {
                pass &= eta[n + 1 - k] > 0.0;
            }
            acc.record(Check::EtaOrdering, loc, pass, if pass { 0.0 } else { -1.0 }, || {
                format!("eta {eta:?} from {lam:?}")
            });
        }

        if k < n {
            if on(Check::EtaGradientOrdering) {
                let g = f_eta_grad(spec, &lam)?;
                let pass = g.windows(2).all(|w| w[0] >= w[1]);
                acc.record(Check::EtaGradientOrdering, loc, pass, if pass { 0.0 } else { -1.0 }, || {
                    format!("eta gradient {g:?} at {lam:?}")
                });
            }
            if on(Check::GradientOrdering) {
                let g = f_grad(spec, &lam)?.grad;
                let pass = g.windows(2).all(|w| w[0] <= w[1]) && g[0] > 0.0;
                acc.record(Check::GradientOrdering, loc, pass, if pass { 0.0 } else { -1.0 }, || {
                    format!("gradient {g:?} at {lam:?}")
                });
            }
            if on(Check::GradientBounds) {
                let b = check_grad_bounds(spec, &lam)?;
                let pass = b.min_share > 0.0 && b.sum_over_power > 0.0;
                acc.record(Check::GradientBounds, loc, pass, b.min_share.min(b.sum_over_power), || {
                    format!("share {:e}, sum ratio {:e} at {lam:?}", b.min_share, b.sum_over_power)
                });
                acc.ratio(Check::GradientBounds, b.min_share);
                acc.gradient_share = min_opt(acc.gradient_share, Some(b.min_share));
                acc.gradient_sum_ratio = min_opt(acc.gradient_sum_ratio, Some(b.sum_over_power));
            }
        }

        if on(Check::GradientSum) {
            let a: f64 = f_grad(spec, &lam)?.grad.iter().sum();
            let b = (n - 1) as f64 * f_eta_grad(spec, &lam)?.iter().sum::<f64>();
            acc.record(
                Check::GradientSum,
                loc,
                rel_err(a, b) <= cfg.identity_tolerance,
                -rel_err(a, b),
                || format!("{a:e} vs {b:e} at {lam:?}"),
            );
        }

        if on(Check::MatrixConcavity) || on(Check::MatrixOrdering) {
            let rot = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng)).qr().q();
            let h = SymmetricField::new(&rot * DMatrix::from_diagonal(&DVector::from_vec(lam.clone())) * rot.transpose())?;
            if on(Check::MatrixConcavity) {
                let eig = h.eigenvalues().as_slice();
                let d = root_spectral(spec, eig)?;
                let v = h.eigenvectors();
                for _ in 0..cfg.directions {
                    let m = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
                    let a = (&m + m.transpose()) * 0.5;
                    let form = spectral_second_form(eig, &d, &(v.transpose() * &a * v));
                    acc.margin(Check::MatrixConcavity, loc, Margin::of(0.0, form), tol, || {
                        format!("root form {form:e} at spectrum {eig:?}")
                    });
                }
            }
            if on(Check::MatrixOrdering) {
                // the spectrum comes back from the eigensolver, so ties are
                // only resolved up to rounding
                let c = t_diagonal(spec, &h)?;
                let scale = c.t_diag.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let mut gap = c.f_diag[n - 1].min(c.t_diag[0]) / scale;
                for p in 0..n - 1 {
                    gap = gap.min((c.f_diag[p] - c.f_diag[p + 1]) / scale);
                    gap = gap.min((c.t_diag[p + 1] - c.t_diag[p]) / scale);
                }
                let pass = gap >= -tol && c.f_diag[n - 1] > 0.0 && c.t_diag[0] > 0.0;
                acc.record(Check::MatrixOrdering, loc, pass, gap, || {
                    format!("F diag {:?}, T diag {:?} at {:?}", c.f_diag, c.t_diag, c.lambda)
                });
            }
        }
        Ok(())
    }
}

/// Runs the sweep. Errors from individual samples (for example an exhausted
/// sampler) abort the whole run.
pub fn run_sweep(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let sweep = Sweep { cfg };
    let mut acc = Acc::new();
    let mut constants = Vec::new();
    let mut cases = Vec::new();
    let n_hi = cfg.n_max.max(cfg.identity_n_max);
    for n in cfg.n_min..=n_hi {
        for k in 1..=n {
            for l in 0..k {
                for (ai, &alpha) in cfg.alphas.iter().enumerate() {
                    cases.push(Case {
                        spec: OperatorSpec::new(n, k, l, alpha)?,
                        alpha_index: ai,
                        idx: cases.len(),
                    });
                }
            }
        }
    }
    let mut configurations = 0;
    for case in &cases {
        let s = &case.spec;
        let identities = cfg.enabled(Check::SumIdentities) && s.l == 0 && s.n <= cfg.identity_n_max;
        let cone_checks = s.n <= cfg.n_max && Check::ALL.iter().any(|&c| c != Check::SumIdentities && cfg.enabled(c));
        if !(identities || cone_checks) {
            continue;
        }
        configurations += 1;
        let part = (0..cfg.samples)
            .into_par_iter()
            .try_fold(Acc::new, |mut a, sample| -> Result<Acc> {
                let loc = Loc { cfg: case.idx, sample };
                if identities {
                    sweep.identities(case, loc, &mut a);
                }
                if cone_checks {
                    sweep.cone_case(case, loc, &mut a)?;
                }
                Ok(a)
            })
            .try_reduce(Acc::new, |a, b| Ok(a.merge(b)))?;
        if cone_checks {
            constants.push(ConstantRow {
                n: s.n,
                k: s.k,
                l: s.l,
                alpha: s.alpha,
                deleted_ratio: part.deleted_ratio,
                gradient_share: part.gradient_share,
                gradient_sum_ratio: part.gradient_sum_ratio,
            });
        }
        acc = acc.merge(Acc {
            deleted_ratio: None,
            gradient_share: None,
            gradient_sum_ratio: None,
            ..part
        });
    }

    let checks = Check::ALL
        .iter()
        .filter(|&&c| cfg.enabled(c))
        .map(|&c| {
            let t = &acc.tallies[c as usize];
            CheckSummary {
                name: c.name().to_string(),
                evaluated: t.evaluated,
                failed: t.failed,
                worst_margin: t.worst.as_ref().map(|w| w.0),
                worst_case: t.worst.as_ref().map(|w| {
                    let s = &cases[w.1.cfg].spec;
                    format!("n={} k={} l={} alpha={} sample={}: {}", s.n, s.k, s.l, s.alpha, w.1.sample, w.2)
                }),
                min_ratio: t.min_ratio,
            }
        })
        .collect();
    let failures = acc
        .failures
        .iter()
        .map(|(loc, c, d)| {
            let s = &cases[loc.cfg].spec;
            FailureRecord {
                check: c.name().to_string(),
                n: s.n,
                k: s.k,
                l: s.l,
                alpha: s.alpha,
                sample: loc.sample,
                detail: d.clone(),
            }
        })
        .collect();
    Ok(VerifyReport {
        checks,
        constants,
        failures,
        total_failures: acc.total_failures,
        configurations,
    })
}
