use std::sync::Arc;
use std::time::Instant;

use randers_core::cases::{generate_case, random_ambient_vector, sweep_configs, CaseConfig, RandomCase};
use randers_core::immersion::hypersurface_identities;
use randers_core::mean_curvature::{
    hypersurface_terms, mean_form_general, mean_form_killing, mean_form_oracle, mean_value_hypersurface,
    relative_deviation,
};
use randers_core::measure::{CustomMeasure, MeasureSpec};
use randers_core::MeasureKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{MeasureChoice, VerifyArgs};
use crate::report::{emit, finite, Meta, SCHEMA_VERSION};
use crate::{CliError, Status};

/// Floor of the denominator in relative deviations.
pub const RELATIVE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub oracle: f64,
    pub killing: f64,
    pub hypersurface: f64,
    pub unit_chi: f64,
    pub identities: f64,
}

impl Tolerances {
    pub fn with_oracle(oracle: f64) -> Self {
        Self {
            oracle,
            killing: 1e-10,
            hypersurface: 1e-8,
            unit_chi: 1e-12,
            identities: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Residuals {
    /// general formula vs finite-difference oracle
    pub oracle: Option<f64>,
    /// Killing formula vs general formula
    pub killing: Option<f64>,
    /// Killing formula contracted with a test vector vs the hypersurface formula
    pub hypersurface: Option<f64>,
    /// hypersurface formula with and without the chi term when chi = 1
    pub unit_chi: Option<f64>,
    /// worst hypersurface identity residual
    pub identities: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub id: u64,
    pub seed: u64,
    pub measure: &'static str,
    pub n: usize,
    pub p: usize,
    pub killing: bool,
    pub wind_model: Option<&'static str>,
    pub residuals: Residuals,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub cases: u64,
    pub measure: MeasureChoice,
    pub codim: Option<usize>,
    pub dim: Option<usize>,
    pub relative_floor: f64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst: Residuals,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: VerifyConfig,
    pub cases: Vec<CaseRecord>,
    pub summary: Summary,
    pub pass: bool,
    pub meta: Meta,
}

fn configs(args: &VerifyArgs) -> Vec<CaseConfig> {
    sweep_configs()
        .into_iter()
        .filter(|c| match args.measure {
            MeasureChoice::Bh => c.measure == MeasureKind::BusemannHausdorff,
            MeasureChoice::Ht => c.measure == MeasureKind::HolmesThompson,
            MeasureChoice::Both => true,
        })
        .filter(|c| args.codim.is_none_or(|p| c.p == p))
        .filter(|c| args.dim.is_none_or(|n| c.n == n))
        .collect()
}

/// Same density `rho` with `chi = 1`.
fn unit_chi(measure: &MeasureSpec) -> MeasureSpec {
    let (a, b, c) = (measure.clone(), measure.clone(), measure.clone());
    MeasureSpec::custom(
        measure.dim(),
        CustomMeasure {
            rho: Arc::new(move |s| a.rho(s)),
            d_rho: Arc::new(move |s| b.d_rho(s)),
            dd_rho: Arc::new(move |s| c.dd_rho(s)),
            chi: Arc::new(|_| 1.0),
            d_log_chi: Arc::new(|_| 0.0),
        },
    )
}

fn evaluate(case: &RandomCase) -> randers_core::Result<Residuals> {
    let jet = case.jet();
    let nav = &case.nav;
    let general = mean_form_general(nav, &jet)?;
    let oracle = mean_form_oracle(nav, &jet)?;
    let mut r = Residuals {
        oracle: Some(relative_deviation(&general, &oracle, RELATIVE_FLOOR)),
        ..Residuals::default()
    };
    if !case.config.killing {
        return Ok(r);
    }
    let killing = mean_form_killing(nav, &jet)?;
    r.killing = Some(relative_deviation(&killing, &general, RELATIVE_FLOOR));
    if case.config.p != 1 {
        return Ok(r);
    }
    let f = case.immersion.as_ref();
    let m = case.config.n + 1;
    let x = random_ambient_vector(case.seed, case.index, m);
    let y = random_ambient_vector(case.seed.wrapping_add(1), case.index, m);
    let contracted = killing.apply(&x);
    let value = mean_value_hypersurface(nav, f, &case.point, &x)?;
    r.hypersurface = Some((value - contracted).abs() / contracted.abs().max(RELATIVE_FLOOR));
    let plain = nav.with_measure(unit_chi(&nav.measure));
    let terms = hypersurface_terms(&plain, f, &case.point)?;
    r.unit_chi = Some((terms.scalar(true) - terms.scalar(false)).abs());
    r.identities = Some(hypersurface_identities(nav, f, &case.point, &x, &y)?.max());
    Ok(r)
}

fn passes(r: &Residuals, tol: &Tolerances) -> bool {
    let ok = |v: Option<f64>, t: f64| v.is_none_or(|v| v < t);
    ok(r.oracle, tol.oracle)
        && ok(r.killing, tol.killing)
        && ok(r.hypersurface, tol.hypersurface)
        && ok(r.unit_chi, tol.unit_chi)
        && ok(r.identities, tol.identities)
}

fn worst(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) }),
        (a, None) => a,
        (None, b) => b,
    }
}

pub fn build_report(args: &VerifyArgs) -> Result<VerificationReport, CliError> {
    let start = Instant::now();
    if args.cases == 0 {
        return Err(CliError::usage("--cases must be at least 1"));
    }
    if !(args.tol > 0.0) {
        return Err(CliError::usage("--tol must be positive"));
    }
    if let Some(p) = args.codim {
        if !(1..=2).contains(&p) {
            return Err(CliError::usage("--codim must be 1 or 2"));
        }
    }
    if let Some(n) = args.dim {
        if !(1..=2).contains(&n) {
            return Err(CliError::usage("--dim must be 1 or 2"));
        }
    }
    let configs = configs(args);
    let tol = Tolerances::with_oracle(args.tol);
    let cases: Vec<CaseRecord> = (0..args.cases)
        .into_par_iter()
        .map(|id| {
            let config = configs[id as usize % configs.len()];
            let outcome = generate_case(args.seed, id, config).and_then(|c| Ok((c.wind_model, evaluate(&c)?)));
            let (wind_model, residuals, error) = match outcome {
                Ok((w, r)) => (Some(w.label()), r, None),
                Err(e) => (None, Residuals::default(), Some(e.to_string())),
            };
            let pass = error.is_none() && passes(&residuals, &tol);
            CaseRecord {
                id,
                seed: args.seed,
                measure: config.measure.label(),
                n: config.n,
                p: config.p,
                killing: config.killing,
                wind_model,
                residuals,
                error,
                pass,
            }
        })
        .collect();
    let mut summary = Summary {
        total: cases.len(),
        ..Summary::default()
    };
    for c in &cases {
        if c.pass {
            summary.passed += 1;
        } else {
            summary.failed += 1;
        }
        let w = &mut summary.worst;
        w.oracle = worst(w.oracle, c.residuals.oracle);
        w.killing = worst(w.killing, c.residuals.killing);
        w.hypersurface = worst(w.hypersurface, c.residuals.hypersurface);
        w.unit_chi = worst(w.unit_chi, c.residuals.unit_chi);
        w.identities = worst(w.identities, c.residuals.identities);
    }
    let pass = summary.failed == 0;
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        config: VerifyConfig {
            seed: args.seed,
            cases: args.cases,
            measure: args.measure,
            codim: args.codim,
            dim: args.dim,
            relative_floor: RELATIVE_FLOOR,
            tolerances: tol,
        },
        cases,
        summary,
        pass,
        meta: Meta::finish(start),
    })
}

pub fn run(args: &VerifyArgs) -> Result<Status, CliError> {
    let report = build_report(args)?;
    emit(&report, args.report.as_deref())?;
    let s = &report.summary;
    eprintln!(
        "verify: {}/{} cases pass; worst oracle deviation {}",
        s.passed,
        s.total,
        s.worst.oracle.and_then(finite).map_or("n/a".to_string(), |v| format!("{v:.3e}"))
    );
    Ok(if report.pass { Status::Pass } else { Status::Fail })
}
