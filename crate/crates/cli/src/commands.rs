use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cfs_core::identities::{run_identity_suite, CheckSummary};
use cfs_core::io::{measure_to_json, report_to_csv, report_to_json};
use cfs_core::minimize::{self, trajectory_csv, ElResidual, Method, StepKind};
use cfs_core::minkowski::{
    build_minkowski_cfs, recovery_from_measure, DiracAlgebra, DiracBasisSpec, RecoveryReport,
};
use cfs_core::seed::rng_for;
use cfs_core::{
    classify, constraint_report, CfsError, ConstraintReport, DiscreteMeasure, OperatorPoint,
};

use crate::config::{Format, LoadedConfig, MinkowskiConfig};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_CONSTRUCTION: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

/// A failed command with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }

    fn construction(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_CONSTRUCTION,
            error: error.into(),
        }
    }
}

pub type Outcome = std::result::Result<(), Failure>;

pub struct Context {
    pub config: LoadedConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn write(&self, name: &str, text: &str) -> Outcome {
        write_file(&self.out.join(name), text)
    }

    fn wants(&self, format: Format) -> bool {
        self.config.run.output.wants(format)
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    cfs_core::io::write_text(path, text).map_err(Failure::input)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}

pub fn action(ctx: &Context) -> Outcome {
    let rho = ctx.config.require_measure().map_err(Failure::input)?;
    if rho.is_empty() {
        eprintln!("warning: the measure has empty support; all functionals are zero");
    }
    let report = constraint_report(&rho);
    if ctx.wants(Format::Json) {
        ctx.write("report.json", &(report_to_json(&report) + "\n"))?;
    }
    if ctx.wants(Format::Csv) {
        ctx.write("report.csv", &report_to_csv(&report))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MinimizeSummary {
    seed: u64,
    method: Method,
    converged: bool,
    support: usize,
    report: ConstraintReport,
    el: ElResidual,
    penalty: f64,
    /// Kind of every trajectory row, in order.
    steps: Vec<StepKind>,
}

fn random_initial(ctx: &Context, points: usize, volume: f64) -> Result<DiscreteMeasure, Failure> {
    let cfg = ctx.config.run.system.ok_or_else(|| {
        Failure::input(anyhow::anyhow!(
            "minimize needs a measure or a system section"
        ))
    })?;
    cfg.validate().map_err(Failure::input)?;
    let mut rng = rng_for(ctx.seed, "initial");
    let support = (0..points)
        .map(|_| OperatorPoint::random(&mut rng, &cfg))
        .collect();
    DiscreteMeasure::new(cfg, support, vec![volume / points as f64; points]).map_err(Failure::input)
}

pub fn minimize(ctx: &Context) -> Outcome {
    let mut cfg = ctx
        .config
        .run
        .minimize
        .clone()
        .ok_or_else(|| Failure::input(anyhow::anyhow!("minimize needs a minimize section")))?;
    cfg.seed = ctx.seed;
    cfg.validate().map_err(Failure::input)?;
    let initial = match ctx.config.measure().map_err(Failure::input)? {
        Some(rho) => rho,
        None => random_initial(ctx, cfg.max_points, cfg.target_volume)?,
    };
    let result = minimize::minimize(&initial, &cfg).map_err(|e| match e {
        CfsError::Infeasible(_) => Failure {
            code: EXIT_INFEASIBLE,
            error: e.into(),
        },
        other => Failure::input(other),
    })?;
    if !result.converged {
        eprintln!(
            "warning: the minimizer stopped before meeting all stopping and constraint criteria"
        );
    }
    let summary = MinimizeSummary {
        seed: ctx.seed,
        method: cfg.method,
        converged: result.converged,
        support: result.measure.len(),
        report: result.report,
        el: result.el,
        penalty: result.penalty,
        steps: result.trajectory.iter().map(|e| e.kind).collect(),
    };
    ctx.write("measure.json", &(measure_to_json(&result.measure) + "\n"))?;
    ctx.write("trajectory.csv", &trajectory_csv(&result.trajectory))?;
    ctx.write("summary.json", &to_json(&summary))
}

pub fn classify_pairs(ctx: &Context) -> Outcome {
    let rho = ctx.config.require_measure().map_err(Failure::input)?;
    let cfg = rho.config();
    let mut csv = String::from("i,j,kind,spread,max_imag\n");
    for i in 0..rho.len() {
        for j in i + 1..rho.len() {
            let r = classify(&rho.points()[i], &rho.points()[j], cfg).map_err(Failure::input)?;
            writeln!(
                csv,
                "{i},{j},{},{:e},{:e}",
                r.kind.as_str(),
                r.spread,
                r.max_imag
            )
            .expect("string write");
        }
    }
    ctx.write("classify.csv", &csv)
}

#[derive(Serialize)]
struct RecoveryOutput<'a> {
    epsilon: f64,
    hilbert_dim: usize,
    sample_points: usize,
    report: &'a RecoveryReport,
}

fn basis(mk: &MinkowskiConfig) -> cfs_core::Result<DiracBasisSpec> {
    let algebra = DiracAlgebra::new(mk.mass)?;
    let modes = mk.momentum_grid.modes(&algebra, mk.modes)?;
    let raw = match &mk.packets {
        Some(packets) => DiracBasisSpec::gaussian(algebra, modes, packets, 0.0)?,
        None => DiracBasisSpec::per_mode(algebra, modes, 0.0)?,
    };
    raw.orthonormalize()
}

pub fn minkowski(ctx: &Context) -> Outcome {
    let mk =
        ctx.config.run.minkowski.as_ref().ok_or_else(|| {
            Failure::input(anyhow::anyhow!("minkowski needs a minkowski section"))
        })?;
    if mk.epsilons.is_empty() {
        return Err(Failure::input(anyhow::anyhow!(
            "epsilons must list at least one value"
        )));
    }
    let spec = basis(mk).map_err(Failure::construction)?;
    let sample = mk.sample.to_sample().map_err(Failure::construction)?;
    let mut csv = format!("{}\n", RecoveryReport::CSV_HEADER);
    for (k, &eps) in mk.epsilons.iter().enumerate() {
        let spec = spec.with_epsilon(eps).map_err(Failure::construction)?;
        let rho = build_minkowski_cfs(&sample, &spec).map_err(Failure::construction)?;
        let report =
            recovery_from_measure(&sample, &rho, &mk.tolerances).map_err(Failure::construction)?;
        ctx.write(
            &format!("measure_{k}.json"),
            &(measure_to_json(&rho) + "\n"),
        )?;
        if ctx.wants(Format::Json) {
            let out = RecoveryOutput {
                epsilon: eps,
                hilbert_dim: spec.dim(),
                sample_points: sample.len(),
                report: &report,
            };
            ctx.write(&format!("recovery_{k}.json"), &to_json(&out))?;
        }
        csv.push_str(&report.csv_record(eps));
        csv.push('\n');
    }
    if ctx.wants(Format::Csv) {
        ctx.write("recovery.csv", &csv)?;
    }
    Ok(())
}

pub fn check(ctx: &Context) -> Outcome {
    let check = ctx.config.run.check.clone().unwrap_or_default();
    let summary: CheckSummary = run_identity_suite(&check, ctx.seed).map_err(Failure::input)?;
    ctx.write("check.json", &to_json(&summary))?;
    if summary.passed {
        return Ok(());
    }
    let failed: Vec<String> = summary
        .identities
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} ({:e} > {:e})", r.name, r.max_residual, r.tolerance))
        .collect();
    Err(Failure {
        code: EXIT_CHECK_FAILED,
        error: anyhow::anyhow!("identity check failed: {}", failed.join(", ")),
    })
}
