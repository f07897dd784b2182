use std::f64::consts::TAU;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use randers_core::hyperbolic::mesh::{generate_mesh, GridRange, MeshFamily, MeshSpec, ResidualStats, SurfaceMesh};
use randers_core::hyperbolic::{MixedKillingField, SurfaceType};
use randers_core::{GeometryError, MeasureSpec};
use serde::{Deserialize, Serialize};

use crate::args::{Branch, CheckArgs, Format, MeasureChoice, SpecialKind, SurfaceArgs, TypeChoice};
use crate::report::{emit, finite, Meta, SCHEMA_VERSION};
use crate::{CliError, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    ClosedForm,
    Geodesic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeDoc {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// Fully resolved surface description, stored in reports so `surface check`
/// can rebuild the same surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDoc {
    pub family: FamilyName,
    #[serde(rename = "type")]
    pub surface_type: TypeChoice,
    pub energy: Option<f64>,
    pub branch: Branch,
    pub phi_sign: Branch,
    pub offset: Option<f64>,
    pub eps1: f64,
    pub eps2: f64,
    /// `s` for closed-form surfaces, `t` otherwise
    pub parameter: String,
    pub param: RangeDoc,
    pub theta: RangeDoc,
    pub margin: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsDoc {
    pub measure: &'static str,
    pub vertices: usize,
    pub in_omega: usize,
    pub in_omega_fraction: f64,
    pub nonfinite: usize,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub p50: Option<f64>,
    pub p90: Option<f64>,
    pub p99: Option<f64>,
}

impl StatsDoc {
    fn new(measure: &'static str, s: &ResidualStats) -> Self {
        Self {
            measure,
            vertices: s.vertices,
            in_omega: s.in_omega,
            in_omega_fraction: s.in_omega_fraction(),
            nonfinite: s.nonfinite,
            max: if s.nonfinite > 0 { None } else { finite(s.max) },
            mean: finite(s.mean),
            p50: finite(s.p50),
            p90: finite(s.p90),
            p99: finite(s.p99),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub surface: SurfaceDoc,
    pub tol: f64,
    pub pieces: Vec<(f64, f64)>,
    pub skipped_nodes: usize,
    pub triangles: usize,
    pub stats: Vec<StatsDoc>,
    /// `None` when only unjudged (HT) residuals were computed
    pub pass: Option<bool>,
    pub outputs: Vec<String>,
    pub meta: Meta,
}

fn type_of(t: TypeChoice) -> SurfaceType {
    match t {
        TypeChoice::Spherical => SurfaceType::Spherical,
        TypeChoice::Hyperbolic => SurfaceType::Hyperbolic,
    }
}

fn resolve(args: &SurfaceArgs, special: Option<SpecialKind>) -> Result<SurfaceDoc, CliError> {
    let special = match (special, args.special) {
        (Some(a), Some(b)) if a != b => return Err(CliError::usage("conflicting special surface kinds")),
        (a, b) => a.or(b),
    };
    let (family, surface_type) = match special {
        Some(SpecialKind::GeodesicSpherical) => (FamilyName::Geodesic, TypeChoice::Spherical),
        Some(SpecialKind::GeodesicHyperbolic) => (FamilyName::Geodesic, TypeChoice::Hyperbolic),
        Some(SpecialKind::Linear) => (FamilyName::Linear, args.surface_type.unwrap_or(TypeChoice::Spherical)),
        None => (
            FamilyName::ClosedForm,
            args.surface_type.ok_or_else(|| CliError::usage("--type or --special is required"))?,
        ),
    };
    if let (FamilyName::Geodesic, Some(t)) = (family, args.surface_type) {
        if t != surface_type {
            return Err(CliError::usage("--type disagrees with the geodesic surface kind"));
        }
    }
    if !(args.eps1.is_finite() && args.eps2.is_finite()) || (args.eps1 == 0.0 && args.eps2 == 0.0) {
        return Err(CliError::usage("--eps1 and --eps2 must be finite and not both zero"));
    }
    let ty = type_of(surface_type);
    let eps = ty.eps(&MixedKillingField::new(args.eps1, args.eps2));
    let energy = match family {
        FamilyName::ClosedForm => {
            let e = args.energy.ok_or_else(|| CliError::usage("--energy is required for closed-form surfaces"))?;
            if e == 0.0 || !e.is_finite() {
                return Err(CliError::usage("closed-form surfaces need a finite nonzero --energy"));
            }
            Some(e)
        }
        _ => None,
    };
    if family == FamilyName::ClosedForm && ty == SurfaceType::Hyperbolic && args.branch == Branch::Minus {
        return Err(CliError::usage("the hyperbolic type needs x1 > 1, so only --branch plus applies"));
    }
    if family == FamilyName::Linear && eps == 0.0 {
        return Err(CliError::usage("linear profiles need a nonzero eps for this surface type"));
    }
    let (pmin, pmax) = match family {
        FamilyName::ClosedForm => {
            let max = match args.s_max {
                Some(v) => v,
                None if eps != 0.0 => 1.0 / (eps * eps),
                None => return Err(CliError::usage("--s-max is required when eps_k = 0")),
            };
            (args.s_min.unwrap_or(0.0), max)
        }
        FamilyName::Geodesic => (args.s_min.unwrap_or(-1.5), args.s_max.unwrap_or(1.5)),
        FamilyName::Linear => (args.s_min.unwrap_or(0.0), args.s_max.unwrap_or(1.0)),
    };
    let (tmin, tmax) = match ty {
        SurfaceType::Spherical => (args.theta_min.unwrap_or(0.0), args.theta_max.unwrap_or(TAU)),
        SurfaceType::Hyperbolic => (args.theta_min.unwrap_or(-1.0), args.theta_max.unwrap_or(1.0)),
    };
    let offset = match family {
        FamilyName::Linear => Some(args.offset.unwrap_or(match ty {
            SurfaceType::Spherical => 0.6,
            SurfaceType::Hyperbolic => 1.53,
        })),
        _ => None,
    };
    let doc = SurfaceDoc {
        family,
        surface_type,
        energy,
        branch: args.branch,
        phi_sign: args.phi_sign,
        offset,
        eps1: args.eps1,
        eps2: args.eps2,
        parameter: if family == FamilyName::ClosedForm { "s" } else { "t" }.to_string(),
        param: RangeDoc {
            min: pmin,
            max: pmax,
            n: args.n_s,
        },
        theta: RangeDoc {
            min: tmin,
            max: tmax,
            n: args.n_theta,
        },
        margin: args.margin,
        scale: args.scale,
    };
    validate(&doc)?;
    Ok(doc)
}

fn validate(doc: &SurfaceDoc) -> Result<(), CliError> {
    for (name, r) in [("--s-min/--s-max/--n-s", doc.param), ("--theta-min/--theta-max/--n-theta", doc.theta)] {
        if !(r.min.is_finite() && r.max.is_finite() && r.min < r.max) || r.n < 2 {
            return Err(CliError::usage(format!("{name}: need finite min < max and at least 2 samples")));
        }
    }
    if !(doc.margin >= 0.0 && doc.margin.is_finite()) {
        return Err(CliError::usage("--margin must be a finite non-negative number"));
    }
    if !(doc.scale > 0.0 && doc.scale.is_finite()) {
        return Err(CliError::usage("--scale must be positive"));
    }
    if doc.family == FamilyName::Geodesic && doc.scale != 1.0 {
        return Err(CliError::usage("--scale does not apply to geodesic surfaces"));
    }
    Ok(())
}

fn mesh_spec(doc: &SurfaceDoc, measure: MeasureSpec) -> MeshSpec {
    let ty = type_of(doc.surface_type);
    let family = match doc.family {
        FamilyName::ClosedForm => MeshFamily::ClosedForm {
            ty,
            energy: doc.energy.unwrap_or(0.0),
            sigma: doc.branch.sign(),
            phi_sign: doc.phi_sign.sign(),
        },
        FamilyName::Geodesic => MeshFamily::Geodesic { ty },
        FamilyName::Linear => MeshFamily::Linear {
            ty,
            sign: doc.branch.sign(),
            offset: doc.offset.unwrap_or(0.0),
        },
    };
    let mut spec = MeshSpec::new(
        family,
        MixedKillingField::new(doc.eps1, doc.eps2),
        GridRange::new(doc.param.min, doc.param.max, doc.param.n),
        GridRange::new(doc.theta.min, doc.theta.max, doc.theta.n),
    );
    spec.margin = doc.margin;
    spec.scale = doc.scale;
    spec.measure = measure;
    spec
}

fn default_tol(doc: &SurfaceDoc) -> f64 {
    match doc.family {
        FamilyName::ClosedForm => 1e-5,
        _ => 1e-8,
    }
}

fn mesh_error(e: GeometryError) -> CliError {
    match e {
        GeometryError::EmptyOmega => CliError::fail(anyhow::anyhow!("no samples in the Randers domain")),
        GeometryError::Domain(msg) => CliError::usage(msg),
        other => CliError::fail(other),
    }
}

struct Evaluated {
    report: SurfaceReport,
    mesh: SurfaceMesh,
}

fn evaluate(doc: SurfaceDoc, measure: MeasureChoice, tol: f64, command: &'static str) -> Result<Evaluated, CliError> {
    let start = Instant::now();
    if !(tol > 0.0) {
        return Err(CliError::usage("--tol must be positive"));
    }
    let measures: Vec<(&'static str, MeasureSpec)> = match measure {
        MeasureChoice::Bh => vec![("bh", MeasureSpec::bh(2))],
        MeasureChoice::Ht => vec![("ht", MeasureSpec::ht(2))],
        MeasureChoice::Both => vec![("bh", MeasureSpec::bh(2)), ("ht", MeasureSpec::ht(2))],
    };
    let mut stats = Vec::new();
    let mut first: Option<SurfaceMesh> = None;
    let mut pass = None;
    for (label, m) in measures {
        let mesh = generate_mesh(&mesh_spec(&doc, m)).map_err(mesh_error)?;
        let s = mesh.stats();
        if label == "bh" {
            pass = Some(s.nonfinite == 0 && s.max < tol);
        }
        stats.push(StatsDoc::new(label, &s));
        first.get_or_insert(mesh);
    }
    let mesh = first.expect("at least one measure");
    let report = SurfaceReport {
        schema_version: SCHEMA_VERSION,
        command,
        surface: doc,
        tol,
        pieces: mesh.pieces.clone(),
        skipped_nodes: mesh.skipped_nodes,
        triangles: mesh.triangles.len(),
        stats,
        pass,
        outputs: Vec::new(),
        meta: Meta::finish(start),
    };
    Ok(Evaluated { report, mesh })
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn write_mesh(mesh: &SurfaceMesh, out: &Path, format: Format) -> std::io::Result<Vec<PathBuf>> {
    let targets: Vec<(PathBuf, bool)> = match format {
        Format::Obj => vec![(out.to_path_buf(), true)],
        Format::Csv => vec![(out.to_path_buf(), false)],
        Format::Both => vec![(with_extension(out, "obj"), true), (with_extension(out, "csv"), false)],
    };
    for (path, obj) in &targets {
        let w = BufWriter::new(File::create(path)?);
        if *obj {
            mesh.write_obj(w)?;
        } else {
            mesh.write_csv(w)?;
        }
    }
    Ok(targets.into_iter().map(|(p, _)| p).collect())
}

fn status_of(report: &SurfaceReport) -> Status {
    match report.pass {
        Some(false) => Status::Fail,
        _ => Status::Pass,
    }
}

fn summarize(report: &SurfaceReport) {
    for s in &report.stats {
        eprintln!(
            "{} residual over {}/{} in-domain vertices: max {}",
            s.measure,
            s.in_omega,
            s.vertices,
            s.max.map_or("non-finite".to_string(), |v| format!("{v:.3e}"))
        );
    }
}

pub fn generate(args: &SurfaceArgs, special: Option<SpecialKind>) -> Result<Status, CliError> {
    let doc = resolve(args, special)?;
    let tol = args.tol.unwrap_or_else(|| default_tol(&doc));
    let mut ev = evaluate(doc, args.measure.unwrap_or(MeasureChoice::Bh), tol, "surface generate")?;
    let mut report_path = args.report.clone();
    if let Some(out) = &args.out {
        let written = write_mesh(&ev.mesh, out, args.format)?;
        ev.report.outputs = written.iter().map(|p| p.display().to_string()).collect();
        if report_path.is_none() {
            report_path = Some(with_extension(out, "report.json"));
        }
    }
    emit(&ev.report, report_path.as_deref())?;
    summarize(&ev.report);
    Ok(status_of(&ev.report))
}

#[derive(Deserialize)]
struct StoredReport {
    surface: SurfaceDoc,
    tol: Option<f64>,
}

pub fn check(args: &CheckArgs) -> Result<Status, CliError> {
    let (doc, stored_tol) = match &args.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            let stored: StoredReport = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("{} is not a surface report: {e}", path.display())))?;
            validate(&stored.surface)?;
            (stored.surface, stored.tol)
        }
        None => (resolve(&args.surface, None)?, None),
    };
    let tol = args.surface.tol.or(stored_tol).unwrap_or_else(|| default_tol(&doc));
    let measure = args.surface.measure.unwrap_or(MeasureChoice::Bh);
    let ev = evaluate(doc, measure, tol, "surface check")?;
    emit(&ev.report, args.surface.report.as_deref())?;
    summarize(&ev.report);
    Ok(status_of(&ev.report))
}
