//! Grid meshes of rotational surfaces with per-vertex residuals of the
//! general mean-curvature engine.

use std::f64::consts::TAU;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{GeometryError, Result};
use crate::hyperbolic::model::{in_omega, HyperboloidMetric, LorentzPoint, MixedFieldChart, MixedKillingField};
use crate::hyperbolic::rotational::{
    branch_energy, closed_form_jet, phi_s_derivatives, phi_samples, ArcLengthProfile, GeodesicSurface, Profile,
    ProfileJet, RotationalSurface, SurfaceType,
};
use crate::immersion::{induced_geometry, Immersion, ImmersionJet2};
use crate::mean_curvature::mean_form_general_at;
use crate::measure::{MeasureSpec, NavigationData};

/// Navigation data of the H^3 chart with the mixed field.
pub fn hyperbolic_nav(field: MixedKillingField, measure: MeasureSpec) -> NavigationData {
    NavigationData::new(Arc::new(HyperboloidMetric), Arc::new(MixedFieldChart(field)), measure)
        .expect("chart metric and field share dimension 3")
}

/// `|H_f(N)|` with the general formula (NaN where it is undefined, e.g.
/// `s <= 0` outside the domain), plus `w` and `s`.
pub fn vertex_residual(nav: &NavigationData, jet: &ImmersionJet2) -> Result<(f64, f64, f64)> {
    let geom = induced_geometry(nav, jet)?;
    let n = geom.hypersurface_normal()?;
    let residual = mean_form_general_at(nav, &geom).map_or(f64::NAN, |form| form.apply(n).abs());
    Ok((residual, geom.w.unwrap_or(f64::NAN), geom.frak_s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshFamily {
    /// Closed-form profile in `s = x1'^2`.
    ClosedForm {
        ty: SurfaceType,
        energy: f64,
        sigma: f64,
        phi_sign: f64,
    },
    /// Totally geodesic surfaces, parameter `t`.
    Geodesic { ty: SurfaceType },
    /// `x1 = sign t / (sqrt(3) eps) + offset`, parameter `t`.
    Linear { ty: SurfaceType, sign: f64, offset: f64 },
}

impl MeshFamily {
    pub fn surface_type(&self) -> SurfaceType {
        match *self {
            MeshFamily::ClosedForm { ty, .. } | MeshFamily::Geodesic { ty } | MeshFamily::Linear { ty, .. } => ty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridRange {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) || self.n < 2 {
            return Err(GeometryError::Domain(format!(
                "{what} range needs min < max and at least 2 samples, got [{}, {}] x {}",
                self.min, self.max, self.n
            )));
        }
        Ok(())
    }

    fn nodes(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n).map(|i| if i + 1 == self.n { self.max } else { self.min + step * i as f64 }).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MeshSpec {
    pub family: MeshFamily,
    pub field: MixedKillingField,
    /// `s` for closed-form profiles, `t` otherwise.
    pub param: GridRange,
    pub theta: GridRange,
    /// Distance kept from `s = 0, 1/(3 eps^2), 1/eps^2`.
    pub margin: f64,
    /// Scale applied to `x1`; values other than 1 break minimality.
    pub scale: f64,
    pub measure: MeasureSpec,
}

impl MeshSpec {
    pub fn new(family: MeshFamily, field: MixedKillingField, param: GridRange, theta: GridRange) -> Self {
        Self {
            family,
            field,
            param,
            theta,
            margin: 0.01,
            scale: 1.0,
            measure: MeasureSpec::bh(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshVertex {
    pub param: f64,
    pub theta: f64,
    pub point: LorentzPoint,
    pub ball: [f64; 3],
    pub w: f64,
    pub frak_s: f64,
    /// NaN when the formula could not be evaluated.
    pub residual: f64,
    pub in_omega: bool,
}

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub ty: SurfaceType,
    pub vertices: Vec<MeshVertex>,
    /// 0-based vertex indices
    pub triangles: Vec<[usize; 3]>,
    /// Parameter subintervals actually sampled.
    pub pieces: Vec<(f64, f64)>,
    /// Parameter nodes dropped because the profile is undefined there.
    pub skipped_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    pub vertices: usize,
    pub in_omega: usize,
    pub nonfinite: usize,
    pub max: f64,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

impl ResidualStats {
    pub fn in_omega_fraction(&self) -> f64 {
        if self.vertices == 0 {
            0.0
        } else {
            self.in_omega as f64 / self.vertices as f64
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

impl SurfaceMesh {
    /// Residual statistics over in-domain vertices; non-finite residuals count as infinite.
    pub fn stats(&self) -> ResidualStats {
        let mut vals: Vec<f64> = self.vertices.iter().filter(|v| v.in_omega).map(|v| v.residual).collect();
        let nonfinite = vals.iter().filter(|r| !r.is_finite()).count();
        let in_omega = vals.len();
        vals.retain(|r| r.is_finite());
        vals.sort_by(f64::total_cmp);
        let max = if nonfinite > 0 { f64::INFINITY } else { vals.last().copied().unwrap_or(f64::NAN) };
        let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
        ResidualStats {
            vertices: self.vertices.len(),
            in_omega,
            nonfinite,
            max,
            mean,
            p50: quantile(&vals, 0.5),
            p90: quantile(&vals, 0.9),
            p99: quantile(&vals, 0.99),
        }
    }

    pub fn write_obj<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# rotational {} surface", self.ty.label())?;
        for v in &self.vertices {
            writeln!(out, "v {:.17e} {:.17e} {:.17e}", v.ball[0], v.ball[1], v.ball[2])?;
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "s,theta,p1,p2,p3,p4,w,sfrak,residual,in_omega")?;
        for v in &self.vertices {
            let p = v.point.0;
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                v.param, v.theta, p[0], p[1], p[2], p[3], v.w, v.frak_s, v.residual, v.in_omega
            )?;
        }
        Ok(())
    }
}

/// Admissible closed-form subintervals of `[min, max]` after margins.
pub fn closed_form_pieces(min: f64, max: f64, eps: f64, margin: f64) -> Vec<(f64, f64)> {
    let e = eps * eps;
    let mut bounds = vec![(margin, f64::INFINITY)];
    if e > 0.0 {
        let third = 1.0 / (3.0 * e);
        bounds = vec![(margin, third - margin), (third + margin, 1.0 / e - margin)];
    }
    bounds
        .into_iter()
        .map(|(a, b)| (a.max(min), b.min(max)))
        .filter(|(a, b)| a < b)
        .collect()
}

fn theta_nodes(ty: SurfaceType, r: &GridRange) -> (Vec<f64>, bool) {
    let wrap = ty == SurfaceType::Spherical && r.max - r.min >= TAU - 1e-12;
    if wrap {
        let step = TAU / r.n as f64;
        ((0..r.n).map(|i| r.min + step * i as f64).collect(), true)
    } else {
        (r.nodes(), false)
    }
}

enum Sampler {
    Rotational(RotationalSurface),
    Geodesic(GeodesicSurface),
}

fn scaled(j: ProfileJet, k: f64) -> ProfileJet {
    ProfileJet {
        x1: j.x1 * k,
        dx1: j.dx1 * k,
        ddx1: j.ddx1 * k,
        ..j
    }
}

/// Profile jets at the nodes of one piece; `None` where undefined.
fn piece_jets(spec: &MeshSpec, nodes: &[f64]) -> Result<Vec<Option<ProfileJet>>> {
    let ty = spec.family.surface_type();
    let eps = ty.eps(&spec.field);
    let out: Vec<Option<ProfileJet>> = match spec.family {
        MeshFamily::ClosedForm { energy, sigma, phi_sign, .. } => {
            let s0 = nodes[0];
            let e = branch_energy(s0, energy, eps, sigma);
            let phis = phi_samples(s0, nodes, e, eps, ty, phi_sign)?;
            nodes
                .iter()
                .zip(phis)
                .map(|(&s, phi)| {
                    let j = closed_form_jet(s, energy, eps, ty, sigma).ok()?;
                    let (dphi, ddphi) = phi_s_derivatives(s, e, eps, ty, phi_sign).ok()?;
                    Some(ProfileJet {
                        x1: j.x1,
                        dx1: j.dx1,
                        ddx1: j.ddx1,
                        phi,
                        dphi,
                        ddphi,
                    })
                })
                .collect()
        }
        MeshFamily::Linear { sign, offset, .. } => {
            let p = ArcLengthProfile::linear(ty, eps, sign, offset);
            nodes.par_iter().map(|&t| p.jet(t).ok()).collect()
        }
        MeshFamily::Geodesic { .. } => unreachable!("geodesic surfaces are sampled directly"),
    };
    Ok(out
        .into_iter()
        .map(|j: Option<ProfileJet>| j.map(|j| scaled(j, spec.scale)).filter(|j| ty.admits(j.x1)))
        .collect())
}

struct DummyProfile(SurfaceType);

impl Profile for DummyProfile {
    fn surface_type(&self) -> SurfaceType {
        self.0
    }

    fn jet(&self, _a: f64) -> Result<ProfileJet> {
        Err(GeometryError::Domain("mesh profiles are sampled in bulk".into()))
    }
}

/// Sample the surface on a `(param, theta)` grid.
///
/// Vertices outside the Randers domain are kept and flagged; their residual
/// is still evaluated. Fails with `EmptyOmega` when no vertex lies inside.
pub fn generate_mesh(spec: &MeshSpec) -> Result<SurfaceMesh> {
    spec.param.validate("parameter")?;
    spec.theta.validate("theta")?;
    if spec.field.is_trivial() {
        return Err(GeometryError::Domain("eps1 and eps2 are both zero".into()));
    }
    if !(spec.scale > 0.0 && spec.scale.is_finite()) {
        return Err(GeometryError::Domain(format!("scale must be positive, got {}", spec.scale)));
    }
    let ty = spec.family.surface_type();
    let eps = ty.eps(&spec.field);
    if let MeshFamily::ClosedForm { energy, .. } = spec.family {
        if energy == 0.0 || !energy.is_finite() {
            return Err(GeometryError::Domain("closed-form surfaces need a nonzero energy".into()));
        }
    }
    if let MeshFamily::Linear { .. } = spec.family {
        if eps == 0.0 {
            return Err(GeometryError::Domain(format!("linear profiles need eps_k != 0 for the {} type", ty.label())));
        }
    }
    if matches!(spec.family, MeshFamily::Geodesic { .. }) && spec.scale != 1.0 {
        return Err(GeometryError::Domain("geodesic surfaces cannot be scaled".into()));
    }
    let pieces = match spec.family {
        MeshFamily::ClosedForm { .. } => closed_form_pieces(spec.param.min, spec.param.max, eps, spec.margin),
        _ => vec![(spec.param.min, spec.param.max)],
    };
    if pieces.is_empty() {
        return Err(GeometryError::Domain(format!(
            "s range [{}, {}] has no admissible part with margin {}",
            spec.param.min, spec.param.max, spec.margin
        )));
    }
    let nav = hyperbolic_nav(spec.field, spec.measure.clone()).allow_outside_domain();
    let sampler = match spec.family {
        MeshFamily::Geodesic { ty } => Sampler::Geodesic(GeodesicSurface { ty }),
        _ => Sampler::Rotational(RotationalSurface::new(Arc::new(DummyProfile(ty)), spec.field)),
    };
    let (thetas, wrap) = theta_nodes(ty, &spec.theta);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut skipped = 0;
    for &(a, b) in &pieces {
        let nodes = GridRange::new(a, b, spec.param.n).nodes();
        let jets = match &sampler {
            // the spherical geodesic surface closes up at t = 0
            Sampler::Geodesic(g) => nodes
                .iter()
                .map(|&t| {
                    (ty == SurfaceType::Hyperbolic || g.x1(t) != 0.0).then_some(ProfileJet {
                        x1: g.x1(t),
                        dx1: g.dx1(t),
                        ddx1: g.x1(t),
                        phi: 0.0,
                        dphi: 0.0,
                        ddphi: 0.0,
                    })
                })
                .collect(),
            Sampler::Rotational(_) => piece_jets(spec, &nodes)?,
        };
        let rows: Vec<Option<Vec<MeshVertex>>> = nodes
            .par_iter()
            .zip(jets.par_iter())
            .map(|(&a, pj)| {
                thetas
                    .iter()
                    .map(|&th| {
                        let (jet, point) = match (&sampler, pj) {
                            (Sampler::Geodesic(g), Some(_)) => (g.jet(&[a, th]), g.point(a, th)),
                            (Sampler::Geodesic(_), None) => return None,
                            (Sampler::Rotational(r), Some(pj)) => (r.jet_from_profile(a, pj, th), r.point(pj, th).ok()?),
                            (Sampler::Rotational(_), None) => return None,
                        };
                        let (residual, w, frak_s) = jet
                            .and_then(|j| vertex_residual(&nav, &j))
                            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
                        Some(MeshVertex {
                            param: a,
                            theta: th,
                            point,
                            ball: point.poincare(),
                            w,
                            frak_s,
                            residual,
                            in_omega: in_omega(&point, &spec.field),
                        })
                    })
                    .collect()
            })
            .collect();
        let nt = thetas.len();
        let mut prev: Option<usize> = None;
        for row in rows {
            let Some(row) = row else {
                skipped += 1;
                prev = None;
                continue;
            };
            let start = vertices.len();
            vertices.extend(row);
            if let Some(p) = prev {
                let cols = if wrap { nt } else { nt - 1 };
                for j in 0..cols {
                    let j1 = (j + 1) % nt;
                    let (a, b, c, d) = (p + j, p + j1, start + j, start + j1);
                    triangles.push([a, b, c]);
                    triangles.push([b, d, c]);
                }
            }
            prev = Some(start);
        }
    }
    if !vertices.iter().any(|v| v.in_omega) {
        return Err(GeometryError::EmptyOmega);
    }
    Ok(SurfaceMesh {
        ty,
        vertices,
        triangles,
        pieces,
        skipped_nodes: skipped,
    })
}
