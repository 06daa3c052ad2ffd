//! Minimization of the causal action under the volume, trace and
//! boundedness constraints.
//!
//! The optimization variables are the evaluation matrices of all support
//! points (real and imaginary parts) and the weights, the latter through a
//! softplus so they stay positive. Forms stay at their initial values, which
//! keeps every iterate inside the admissible set without projections.
//!
//! Every candidate is projected before it is scored: weights are rescaled to
//! the target volume and all forms by one common factor to hit the target
//! trace. The boundedness constraint enters as a quadratic penalty with an
//! escalating weight.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{action_and_boundedness, pair_terms, ConstraintReport, DiscreteMeasure};
use crate::error::{validation, CfsError, Result};
use crate::linalg::{c64, CMatrix, CompensatedSum};
use crate::operators::OperatorPoint;
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ProjectedDescent,
    Annealing,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeConfig {
    pub target_volume: f64,
    pub target_trace: f64,
    /// Upper bound `C` for the boundedness functional.
    #[serde(alias = "bound_C")]
    pub bound_c: f64,
    /// Largest support size reachable through split moves.
    #[serde(default = "defaults::max_points")]
    pub max_points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::method")]
    pub method: Method,
    /// Proposal scales of the annealing stages, relative to the point size.
    #[serde(default = "defaults::step_schedule")]
    pub step_schedule: Vec<f64>,
    /// Temperatures of the annealing stages, relative to the initial merit.
    #[serde(default = "defaults::temperature_schedule")]
    pub temperature_schedule: Vec<f64>,
    /// Metropolis proposals per annealing stage.
    #[serde(default = "defaults::anneal_sweeps")]
    pub anneal_sweeps: usize,
    /// Descent iterations per penalty round.
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    /// Stop when the merit decreases by less than this (relative) over
    /// `stall_window` consecutive iterations.
    #[serde(default = "defaults::tol_merit")]
    pub tol_merit: f64,
    #[serde(default = "defaults::stall_window")]
    pub stall_window: usize,
    /// Stop when the largest gradient component falls below this.
    #[serde(default = "defaults::tol_grad")]
    pub tol_grad: f64,
    /// Relative tolerance on the trace and boundedness constraints.
    #[serde(default = "defaults::constraint_tol")]
    pub constraint_tol: f64,
    #[serde(default = "defaults::penalty_initial")]
    pub penalty_initial: f64,
    #[serde(default = "defaults::penalty_growth")]
    pub penalty_growth: f64,
    #[serde(default = "defaults::penalty_rounds")]
    pub penalty_rounds: usize,
    #[serde(default = "defaults::lbfgs_memory")]
    pub lbfgs_memory: usize,
    /// Random off-support points used by the residual check.
    #[serde(default = "defaults::probe_count")]
    pub probe_count: usize,
}

mod defaults {
    use super::Method;

    pub fn max_points() -> usize {
        16
    }
    pub fn method() -> Method {
        Method::ProjectedDescent
    }
    pub fn step_schedule() -> Vec<f64> {
        vec![0.3, 0.1, 0.03]
    }
    pub fn temperature_schedule() -> Vec<f64> {
        vec![0.1, 0.01, 0.001]
    }
    pub fn anneal_sweeps() -> usize {
        200
    }
    pub fn max_iters() -> usize {
        2000
    }
    pub fn tol_merit() -> f64 {
        1e-13
    }
    pub fn stall_window() -> usize {
        5
    }
    pub fn tol_grad() -> f64 {
        1e-12
    }
    pub fn constraint_tol() -> f64 {
        1e-9
    }
    pub fn penalty_initial() -> f64 {
        1.0
    }
    pub fn penalty_growth() -> f64 {
        10.0
    }
    pub fn penalty_rounds() -> usize {
        8
    }
    pub fn lbfgs_memory() -> usize {
        10
    }
    pub fn probe_count() -> usize {
        16
    }
}

impl MinimizeConfig {
    /// Default schedules and tolerances for the given constraint targets.
    pub fn new(target_volume: f64, target_trace: f64, bound_c: f64) -> Self {
        MinimizeConfig {
            target_volume,
            target_trace,
            bound_c,
            max_points: defaults::max_points(),
            seed: 0,
            method: defaults::method(),
            step_schedule: defaults::step_schedule(),
            temperature_schedule: defaults::temperature_schedule(),
            anneal_sweeps: defaults::anneal_sweeps(),
            max_iters: defaults::max_iters(),
            tol_merit: defaults::tol_merit(),
            stall_window: defaults::stall_window(),
            tol_grad: defaults::tol_grad(),
            constraint_tol: defaults::constraint_tol(),
            penalty_initial: defaults::penalty_initial(),
            penalty_growth: defaults::penalty_growth(),
            penalty_rounds: defaults::penalty_rounds(),
            lbfgs_memory: defaults::lbfgs_memory(),
            probe_count: defaults::probe_count(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.target_volume) {
            return Err(validation("target_volume must be finite and positive"));
        }
        if !positive(self.bound_c) {
            return Err(validation("bound_C must be finite and positive"));
        }
        if !self.target_trace.is_finite() {
            return Err(validation("target_trace must be finite"));
        }
        for (name, schedule) in [
            ("step_schedule", &self.step_schedule),
            ("temperature_schedule", &self.temperature_schedule),
        ] {
            if schedule.is_empty() || !schedule.iter().all(|&v| positive(v)) {
                return Err(validation(format!(
                    "{name} must be a non-empty list of finite positive reals"
                )));
            }
        }
        for (name, v) in [
            ("tol_merit", self.tol_merit),
            ("tol_grad", self.tol_grad),
            ("constraint_tol", self.constraint_tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(validation(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        if !positive(self.penalty_initial)
            || !(self.penalty_growth.is_finite() && self.penalty_growth > 1.0)
        {
            return Err(validation(
                "penalty_initial must be positive and penalty_growth greater than 1",
            ));
        }
        if self.max_points == 0 || self.lbfgs_memory == 0 || self.stall_window == 0 {
            return Err(validation(
                "max_points, lbfgs_memory and stall_window must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Init,
    Descent,
    Anneal,
    /// Descent step taken while the boundedness bound was violated; the
    /// action may increase on these.
    Restore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub iter: usize,
    pub kind: StepKind,
    pub action: f64,
    pub volume: f64,
    pub trace: f64,
    pub boundedness: f64,
}

pub const TRAJECTORY_CSV_HEADER: &str = "iter,action,volume,trace,T";

pub fn trajectory_csv(entries: &[TrajectoryEntry]) -> String {
    let mut out = String::from(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for e in entries {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e}\n",
            e.iter, e.action, e.volume, e.trace, e.boundedness
        ));
    }
    out
}

/// Constancy of `ℓ(x) = Σ_j c_j L(x, x_j)` on the support, plus a count of
/// random off-support probes that undercut it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElResidual {
    pub residual: f64,
    pub min_support: f64,
    pub max_support: f64,
    pub probe_count: usize,
    pub probe_violations: usize,
    pub min_probe: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub measure: DiscreteMeasure,
    pub report: ConstraintReport,
    pub trajectory: Vec<TrajectoryEntry>,
    pub el_residual: f64,
    pub el: ElResidual,
    pub converged: bool,
    pub penalty: f64,
}

fn trace_scale(points: &[OperatorPoint], weights: &[f64]) -> (f64, f64) {
    let mut trace = CompensatedSum::new();
    let mut size = CompensatedSum::new();
    for (p, w) in points.iter().zip(weights) {
        trace.add(w * p.trace());
        size.add(w * p.form().norm() * p.evaluation().norm_squared());
    }
    (trace.value(), size.value())
}

/// Weights rescaled by `V/Σc` and forms by `s = t/Σ c tr(x)`. With a zero
/// trace target only the volume is projected.
fn project_parts(
    points: &[OperatorPoint],
    weights: &[f64],
    cfg: &MinimizeConfig,
) -> Result<(Vec<OperatorPoint>, Vec<f64>)> {
    let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
    if !(total > 0.0) {
        return Err(CfsError::Projection(
            "measure has no volume to rescale".into(),
        ));
    }
    let factor = cfg.target_volume / total;
    let weights: Vec<f64> = weights.iter().map(|w| w * factor).collect();
    if cfg.target_trace == 0.0 {
        return Ok((points.to_vec(), weights));
    }
    let (trace, size) = trace_scale(points, &weights);
    if !(trace.abs() > 1e-12 * size) {
        return Err(CfsError::Projection(format!(
            "trace integral {trace:e} is zero, cannot rescale to {}",
            cfg.target_trace
        )));
    }
    let s = cfg.target_trace / trace;
    Ok((points.iter().map(|p| p.scaled(s)).collect(), weights))
}

pub fn project_constraints(rho: &DiscreteMeasure, cfg: &MinimizeConfig) -> Result<DiscreteMeasure> {
    cfg.validate()?;
    let (points, weights) = project_parts(rho.points(), rho.weights(), cfg)?;
    DiscreteMeasure::new(*rho.config(), points, weights)
}

/// Whether the parameter family (free evaluations, fixed forms, free
/// weights) can reach the trace target: a positive target needs a form with
/// a positive eigenvalue, a negative one a form with a negative eigenvalue.
pub fn feasibility_probe(rho: &DiscreteMeasure, cfg: &MinimizeConfig) -> Result<()> {
    if rho.is_empty() {
        return Err(CfsError::Infeasible(
            "the initial measure has empty support".into(),
        ));
    }
    let t = cfg.target_trace;
    if t == 0.0 {
        return Ok(());
    }
    let tol = rho.config().tol_rank;
    let reachable = rho.points().iter().any(|p| {
        let (values, _) = crate::linalg::hermitian_eigen(p.form());
        let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        values
            .iter()
            .any(|&v| v.abs() > tol * scale && v.signum() == t.signum())
    });
    if !reachable {
        return Err(CfsError::Infeasible(format!(
            "no point of the parameter family has trace of the sign of {t}"
        )));
    }
    Ok(())
}

/// Typical operator norm of the support, used to scale probes.
fn typical_norm(rho: &DiscreteMeasure) -> f64 {
    let norms: Vec<f64> = rho
        .points()
        .iter()
        .map(OperatorPoint::operator_norm)
        .collect();
    norms.iter().sum::<f64>() / norms.len().max(1) as f64
}

fn local_lagrangian(z: &OperatorPoint, rho: &DiscreteMeasure) -> f64 {
    let tol = rho.config().tol_rank;
    rho.points()
        .iter()
        .zip(rho.weights())
        .map(|(x, c)| {
            c * crate::action::lagrangian_from_spectrum(
                &crate::operators::product_spectrum_unchecked(z, x, tol),
            )
        })
        .collect::<CompensatedSum>()
        .value()
}

pub fn el_residual(rho: &DiscreteMeasure, cfg: &MinimizeConfig) -> ElResidual {
    let tol = rho.config().tol_rank;
    let n = rho.len();
    let mut ell = vec![CompensatedSum::new(); n];
    for (i, j, l, _) in pair_terms(rho.points(), tol) {
        ell[i].add(rho.weights()[j] * l);
        if i != j {
            ell[j].add(rho.weights()[i] * l);
        }
    }
    let ell: Vec<f64> = ell.iter().map(CompensatedSum::value).collect();
    let max = ell.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = ell.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if n == 0 {
        return ElResidual {
            residual: 0.0,
            min_support: 0.0,
            max_support: 0.0,
            probe_count: 0,
            probe_violations: 0,
            min_probe: f64::INFINITY,
        };
    }
    let residual = (max - min) / max.max(tol);
    let mut rng = rng_for(cfg.seed, "el-probes");
    let norm = typical_norm(rho);
    let probes: Vec<OperatorPoint> = (0..cfg.probe_count)
        .map(|_| {
            let z = OperatorPoint::random(&mut rng, rho.config());
            let zn = z.operator_norm();
            if zn > 0.0 {
                z.scaled(norm / zn)
            } else {
                z
            }
        })
        .collect();
    let values: Vec<f64> = probes
        .par_iter()
        .map(|z| local_lagrangian(z, rho))
        .collect();
    let slack = 1e-9 * max.abs().max(tol);
    ElResidual {
        residual,
        min_support: min,
        max_support: max,
        probe_count: probes.len(),
        probe_violations: values.iter().filter(|&&v| v < min - slack).count(),
        min_probe: values.iter().fold(f64::INFINITY, |a, &b| a.min(b)),
    }
}

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}

fn softplus_inverse(w: f64) -> f64 {
    if w > 30.0 {
        w
    } else {
        w + (-(-w).exp_m1()).ln()
    }
}

/// Scored candidate: a projected measure with its functionals.
#[derive(Debug, Clone)]
struct Scored {
    points: Vec<OperatorPoint>,
    weights: Vec<f64>,
    report: ConstraintReport,
    merit: f64,
}

struct Objective<'a> {
    cfg: &'a MinimizeConfig,
    tol_rank: f64,
    penalty: f64,
}

impl Objective<'_> {
    fn bound_excess(&self, report: &ConstraintReport) -> f64 {
        (report.boundedness - self.cfg.bound_c).max(0.0)
    }

    fn bounded(&self, report: &ConstraintReport) -> bool {
        report.boundedness <= self.cfg.bound_c * (1.0 + self.cfg.constraint_tol)
    }

    fn merit_of(&self, report: &ConstraintReport) -> f64 {
        let excess = self.bound_excess(report);
        let mut merit = report.action + self.penalty * excess * excess;
        if self.cfg.target_trace == 0.0 {
            merit += self.penalty * report.trace_integral * report.trace_integral;
        }
        merit
    }

    fn score(&self, points: &[OperatorPoint], weights: &[f64]) -> Option<Scored> {
        let (points, weights) = project_parts(points, weights, self.cfg).ok()?;
        let (action, boundedness) = action_and_boundedness(&points, &weights, self.tol_rank);
        let trace_integral = trace_scale(&points, &weights).0;
        let volume = weights.iter().copied().collect::<CompensatedSum>().value();
        let report = ConstraintReport {
            volume,
            trace_integral,
            boundedness,
            action,
        };
        let merit = self.merit_of(&report);
        merit.is_finite().then_some(Scored {
            points,
            weights,
            report,
            merit,
        })
    }

    fn rescore(&self, s: &Scored) -> Scored {
        Scored {
            merit: self.merit_of(&s.report),
            ..s.clone()
        }
    }
}

/// Real parameter vector of a support with fixed forms.
struct Layout {
    forms: Vec<CMatrix>,
    rows: usize,
    cols: usize,
}

impl Layout {
    fn new(points: &[OperatorPoint]) -> Self {
        let (rows, cols) = points.first().map_or((0, 0), |p| p.evaluation().shape());
        Layout {
            forms: points.iter().map(|p| p.form().clone()).collect(),
            rows,
            cols,
        }
    }

    fn block(&self) -> usize {
        2 * self.rows * self.cols
    }

    fn encode(&self, points: &[OperatorPoint], weights: &[f64]) -> Vec<f64> {
        let mut theta = Vec::with_capacity(points.len() * (self.block() + 1));
        for p in points {
            for z in p.evaluation().iter() {
                theta.push(z.re);
                theta.push(z.im);
            }
        }
        theta.extend(weights.iter().map(|&w| softplus_inverse(w)));
        theta
    }

    fn decode(&self, theta: &[f64]) -> (Vec<OperatorPoint>, Vec<f64>) {
        let k = self.forms.len();
        let b = self.block();
        let points = (0..k)
            .map(|i| {
                let chunk = &theta[i * b..(i + 1) * b];
                let e = CMatrix::from_iterator(
                    self.rows,
                    self.cols,
                    chunk.chunks_exact(2).map(|pair| c64(pair[0], pair[1])),
                );
                OperatorPoint::from_parts_unchecked(e, self.forms[i].clone())
            })
            .collect();
        let weights = theta[k * b..].iter().map(|&u| softplus(u)).collect();
        (points, weights)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fd_step(theta_k: f64) -> f64 {
    1e-6 * theta_k.abs().max(1.0)
}

/// Central finite-difference gradient of the merit. Candidates that cannot
/// be projected are replaced by a one-sided difference from the centre.
fn gradient(obj: &Objective, layout: &Layout, theta: &[f64], centre: f64) -> Vec<f64> {
    let merit_at = |t: &[f64]| {
        let (p, w) = layout.decode(t);
        obj.score(&p, &w).map(|s| s.merit)
    };
    (0..theta.len())
        .into_par_iter()
        .map(|k| {
            let h = fd_step(theta[k]);
            let mut plus = theta.to_vec();
            plus[k] += h;
            let mut minus = theta.to_vec();
            minus[k] -= h;
            match (merit_at(&plus), merit_at(&minus)) {
                (Some(a), Some(b)) => (a - b) / (2.0 * h),
                (Some(a), None) => (a - centre) / h,
                (None, Some(b)) => (centre - b) / h,
                (None, None) => 0.0,
            }
        })
        .collect()
}

/// Two-loop recursion for the L-BFGS direction `−H g`.
fn lbfgs_direction(g: &[f64], history: &[(Vec<f64>, Vec<f64>)]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    if let Some((s, y)) = history.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y), (a, rho)) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

struct Run<'a> {
    cfg: &'a MinimizeConfig,
    trajectory: Vec<TrajectoryEntry>,
    iter: usize,
}

impl Run<'_> {
    fn record(&mut self, kind: StepKind, s: &Scored) {
        self.trajectory.push(TrajectoryEntry {
            iter: self.iter,
            kind,
            action: s.report.action,
            volume: s.report.volume,
            trace: s.report.trace_integral,
            boundedness: s.report.boundedness,
        });
        self.iter += 1;
    }

    /// L-BFGS with Armijo backtracking, one penalty round. Returns the final
    /// state and whether a stopping tolerance was met.
    fn descend(&mut self, obj: &Objective, start: Scored) -> (Scored, bool) {
        let cfg = self.cfg;
        let layout = Layout::new(&start.points);
        let mut theta = layout.encode(&start.points, &start.weights);
        let mut current = start;
        let mut g = gradient(obj, &layout, &theta, current.merit);
        let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let mut stalls = 0;
        for _ in 0..cfg.max_iters {
            let gmax = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if gmax <= cfg.tol_grad {
                return (current, true);
            }
            let mut d = lbfgs_direction(&g, &history);
            let mut slope = dot(&g, &d);
            if !(slope < 0.0) {
                history.clear();
                d = g.iter().map(|v| -v).collect();
                slope = dot(&g, &d);
            }
            let mut alpha = if history.is_empty() {
                let theta_norm = dot(&theta, &theta).sqrt().max(1.0);
                (0.1 * theta_norm / dot(&d, &d).sqrt()).min(1.0)
            } else {
                1.0
            };
            let was_bounded = obj.bounded(&current.report);
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + alpha * di).collect();
                let (p, w) = layout.decode(&trial);
                if let Some(s) = obj.score(&p, &w) {
                    let sufficient =
                        s.merit <= current.merit + 1e-4 * alpha * slope && s.merit < current.merit;
                    let filter = !was_bounded || s.report.action <= current.report.action;
                    if sufficient && filter {
                        accepted = Some((trial, s));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((trial, next)) = accepted else {
                if history.is_empty() {
                    // steepest descent cannot make progress at this resolution
                    return (current, true);
                }
                history.clear();
                continue;
            };
            let decrease = current.merit - next.merit;
            let g_next = gradient(obj, &layout, &trial, next.merit);
            let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
            if dot(&s, &y) > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                history.push((s, y));
                if history.len() > cfg.lbfgs_memory {
                    history.remove(0);
                }
            }
            let kind = if was_bounded {
                StepKind::Descent
            } else {
                StepKind::Restore
            };
            self.record(kind, &next);
            stalls = if decrease <= cfg.tol_merit * current.merit.abs().max(f64::MIN_POSITIVE) {
                stalls + 1
            } else {
                0
            };
            theta = trial;
            g = g_next;
            current = next;
            if stalls >= cfg.stall_window {
                return (current, true);
            }
        }
        (current, false)
    }

    /// Metropolis annealing with perturbation, split and merge moves.
    /// Returns the best state seen.
    fn anneal(&mut self, obj: &Objective, start: Scored, rng: &mut impl Rng) -> Scored {
        let cfg = self.cfg;
        let scale = start.merit.abs().max(f64::MIN_POSITIVE);
        let stages = cfg.step_schedule.len().max(cfg.temperature_schedule.len());
        let pick = |v: &[f64], k: usize| v[k.min(v.len() - 1)];
        let mut current = start.clone();
        let mut best = start;
        for stage in 0..stages {
            let temperature = pick(&cfg.temperature_schedule, stage) * scale;
            let sigma = pick(&cfg.step_schedule, stage);
            for _ in 0..cfg.anneal_sweeps {
                let (mut points, mut weights) = (current.points.clone(), current.weights.clone());
                let u: f64 = rng.gen();
                let i = rng.gen_range(0..points.len());
                if u < 0.1 && points.len() < cfg.max_points {
                    let twin = perturb(&points[i], sigma, rng);
                    weights[i] *= 0.5;
                    points.push(twin);
                    weights.push(weights[i]);
                } else {
                    points[i] = perturb(&points[i], sigma, rng);
                    let z: f64 = rng.sample(StandardNormal);
                    weights[i] *= (sigma * z).exp();
                }
                merge_near_duplicates(&mut points, &mut weights);
                let Some(candidate) = obj.score(&points, &weights) else {
                    continue;
                };
                let delta = candidate.merit - current.merit;
                let threshold: f64 = rng.gen();
                if delta <= 0.0 || threshold < (-delta / temperature).exp() {
                    current = candidate;
                    self.record(StepKind::Anneal, &current);
                    if better(obj, &current, &best) {
                        best = current.clone();
                    }
                }
            }
        }
        best
    }
}

/// Feasible states beat infeasible ones; then lower merit wins.
fn better(obj: &Objective, a: &Scored, b: &Scored) -> bool {
    match (obj.bounded(&a.report), obj.bounded(&b.report)) {
        (true, false) => true,
        (false, true) => false,
        _ => a.merit < b.merit,
    }
}

fn perturb(p: &OperatorPoint, sigma: f64, rng: &mut impl Rng) -> OperatorPoint {
    let e = p.evaluation();
    let amplitude = sigma * e.norm() / (e.len() as f64).sqrt().max(1.0);
    let noise = crate::linalg::gaussian_matrix(rng, e.nrows(), e.ncols());
    OperatorPoint::from_parts_unchecked(e + noise * c64(amplitude, 0.0), p.form().clone())
}

/// Distance below which two support points are treated as one.
pub const MERGE_DISTANCE: f64 = 1e-6;

/// Merges pairs of points at operator-norm distance at most
/// [`MERGE_DISTANCE`], keeping the first and adding the weights.
fn merge_near_duplicates(points: &mut Vec<OperatorPoint>, weights: &mut Vec<f64>) {
    let mut i = 0;
    while i < points.len() {
        let mut j = i + 1;
        while j < points.len() {
            if points[i].distance(&points[j]) <= MERGE_DISTANCE {
                weights[i] += weights[j];
                points.remove(j);
                weights.remove(j);
            } else {
                j += 1;
            }
        }
        i += 1;
    }
}

/// Minimizes the causal action starting from `initial`.
///
/// The returned measure is the best feasible iterate, so its action never
/// exceeds that of the projected initial measure. `converged` is false when
/// the iteration budget ran out or the bounds are still violated.
pub fn minimize(initial: &DiscreteMeasure, cfg: &MinimizeConfig) -> Result<MinimizeResult> {
    cfg.validate()?;
    feasibility_probe(initial, cfg)?;
    let mut obj = Objective {
        cfg,
        tol_rank: initial.config().tol_rank,
        penalty: cfg.penalty_initial,
    };
    let (points, weights) =
        project_parts(initial.points(), initial.weights(), cfg).map_err(|e| match e {
            CfsError::Projection(msg) => CfsError::Infeasible(msg),
            other => other,
        })?;
    let start = obj
        .score(&points, &weights)
        .ok_or_else(|| CfsError::Infeasible("initial measure cannot be scored".into()))?;
    let mut run = Run {
        cfg,
        trajectory: Vec::new(),
        iter: 0,
    };
    run.record(StepKind::Init, &start);

    let mut state = start;
    let mut stopped = true;
    if matches!(cfg.method, Method::Annealing | Method::Hybrid) {
        let mut rng = rng_for(cfg.seed, "anneal");
        state = run.anneal(&obj, state, &mut rng);
        stopped = false;
    }
    if matches!(cfg.method, Method::ProjectedDescent | Method::Hybrid) {
        let mut best = state.clone();
        for round in 0..cfg.penalty_rounds.max(1) {
            let (next, done) = run.descend(&obj, state);
            stopped = done;
            if better(&obj, &next, &best) || !obj.bounded(&best.report) {
                best = next.clone();
            }
            state = next;
            let trace_ok = cfg.target_trace != 0.0
                || state.report.trace_integral.abs() <= cfg.constraint_tol * cfg.target_volume;
            if (obj.bounded(&state.report) && trace_ok) || round + 1 == cfg.penalty_rounds.max(1) {
                break;
            }
            obj.penalty *= cfg.penalty_growth;
            state = obj.rescore(&state);
            best = obj.rescore(&best);
        }
        state = best;
    }

    let measure = DiscreteMeasure::new(*initial.config(), state.points, state.weights)?;
    let report = crate::action::constraint_report(&measure);
    let el = el_residual(&measure, cfg);
    let converged = stopped && constraints_met(&report, cfg);
    Ok(MinimizeResult {
        measure,
        report,
        trajectory: run.trajectory,
        el_residual: el.residual,
        el,
        converged,
        penalty: obj.penalty,
    })
}

/// Whether a report meets all three constraints within the run tolerances.
pub fn constraints_met(report: &ConstraintReport, cfg: &MinimizeConfig) -> bool {
    let tol = cfg.constraint_tol;
    let volume_ok = (report.volume - cfg.target_volume).abs() <= tol * cfg.target_volume;
    let trace_ok = (report.trace_integral - cfg.target_trace).abs()
        <= tol
            * cfg.target_trace.abs().max(if cfg.target_trace == 0.0 {
                cfg.target_volume
            } else {
                0.0
            });
    let bound_ok = report.boundedness <= cfg.bound_c * (1.0 + tol);
    volume_ok && trace_ok && bound_ok
}
