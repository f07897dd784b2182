//! Rotational surfaces of spherical and hyperbolic type in H^3 and the
//! BH-minimal profile equation.
//!
//! A profile is `x1(a)` plus the boost/rotation angle `phi(a)`. In arc-length
//! parametrization (`a = t`) the angle satisfies
//! `phi' = sqrt(delta + x1^2 - x1'^2) / (delta + x1^2)`.
//!
//! Spherical type (`delta = 1`, `k = 1`):
//! `X = (R cosh phi, R sinh phi, x1 cos theta, x1 sin theta)`, `R = sqrt(1 + x1^2)`.
//! Hyperbolic type (`delta = -1`, `k = 2`):
//! `X = (x1 cosh theta, x1 sinh theta, Q cos phi, Q sin phi)`, `Q = sqrt(x1^2 - 1)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::hyperbolic::model::{lorentz_inner, LorentzPoint, MixedKillingField};
use crate::immersion::{Immersion, ImmersionJet2};
use crate::measure::{phi as volume_ratio, MeasureSpec, NavigationData};
use crate::ode::{self, Event, OdeOptions, OdeSolution, Termination};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceType {
    Spherical,
    Hyperbolic,
}

impl SurfaceType {
    pub fn delta(self) -> f64 {
        match self {
            SurfaceType::Spherical => 1.0,
            SurfaceType::Hyperbolic => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SurfaceType::Spherical => "spherical",
            SurfaceType::Hyperbolic => "hyperbolic",
        }
    }

    /// `eps_k` of the field that governs `w` for this type.
    pub fn eps(self, field: &MixedKillingField) -> f64 {
        field.eps_for(self == SurfaceType::Spherical)
    }

    /// Whether `x1` is admissible: nonzero (spherical) or `> 1` (hyperbolic).
    pub fn admits(self, x1: f64) -> bool {
        match self {
            SurfaceType::Spherical => x1 != 0.0 && x1.is_finite(),
            SurfaceType::Hyperbolic => x1 > 1.0 && x1.is_finite(),
        }
    }

    /// `|W|^2` on the surface point with radius `x1` (independent of the angles).
    pub fn wind_norm_sq(self, x1: f64, field: &MixedKillingField) -> f64 {
        let (a, b) = (field.eps1 * field.eps1, field.eps2 * field.eps2);
        match self {
            SurfaceType::Spherical => a * (1.0 + x1 * x1) + b * x1 * x1,
            SurfaceType::Hyperbolic => a * x1 * x1 + b * (x1 * x1 - 1.0),
        }
    }
}

fn check_type(ty: SurfaceType, x1: f64) -> Result<()> {
    if ty.admits(x1) {
        Ok(())
    } else {
        Err(GeometryError::Domain(format!("x1 = {x1} is not admissible for the {} type", ty.label())))
    }
}

/// Profile value and its first two derivatives in arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub x1: f64,
    pub dx1: f64,
    pub ddx1: f64,
}

/// `delta + x1^2 - x1'^2`
pub fn frame_discriminant(ty: SurfaceType, x1: f64, dx1: f64) -> f64 {
    ty.delta() + x1 * x1 - dx1 * dx1
}

fn sqrt_discriminant(ty: SurfaceType, x1: f64, dx1: f64) -> Result<f64> {
    let d = frame_discriminant(ty, x1, dx1);
    if !(d > 0.0) {
        return Err(GeometryError::DegenerateFrame(d));
    }
    Ok(d.sqrt())
}

/// `(lambda1, lambda2)`; the principal curvatures are their negatives.
pub fn principal_curvatures(ty: SurfaceType, p: ProfilePoint) -> Result<(f64, f64)> {
    check_type(ty, p.x1)?;
    let sd = sqrt_discriminant(ty, p.x1, p.dx1)?;
    Ok(((p.x1 - p.ddx1) / sd, sd / p.x1))
}

/// Riemannian mean curvature for the normal of the rotational frame.
pub fn rotational_h(ty: SurfaceType, p: ProfilePoint) -> Result<f64> {
    check_type(ty, p.x1)?;
    let sd = sqrt_discriminant(ty, p.x1, p.dx1)?;
    Ok((p.x1 * p.ddx1 + p.dx1 * p.dx1 - 2.0 * p.x1 * p.x1 - ty.delta()) / (2.0 * p.x1 * sd))
}

fn bh2() -> MeasureSpec {
    MeasureSpec::bh(2)
}

/// Left side of the BH-minimal profile equation.
pub fn minimal_residual(ty: SurfaceType, eps: f64, p: ProfilePoint) -> Result<f64> {
    check_type(ty, p.x1)?;
    let d = frame_discriminant(ty, p.x1, p.dx1);
    if d == 0.0 {
        return Err(GeometryError::DegenerateFrame(d));
    }
    let s = 1.0 - eps * eps * p.dx1 * p.dx1;
    let (ph, dph) = volume_ratio(&bh2(), s)?;
    Ok((p.x1 * p.ddx1 + p.dx1 * p.dx1 - 2.0 * p.x1 * p.x1 - ty.delta()) / d * ph + 2.0 * eps * eps * p.x1 * p.ddx1 * dph)
}

/// First integral `x1 sqrt(delta + x1^2 - x1'^2) Phi(1 - eps^2 x1'^2)`.
pub fn energy(ty: SurfaceType, eps: f64, x1: f64, dx1: f64) -> Result<f64> {
    let d = frame_discriminant(ty, x1, dx1);
    if d < 0.0 {
        return Err(GeometryError::DegenerateFrame(d));
    }
    energy_with_discriminant(eps, x1, dx1, d)
}

/// First integral with a precomputed `delta + x1^2 - x1'^2`, which avoids the
/// cancellation in that difference when it is small.
pub fn energy_with_discriminant(eps: f64, x1: f64, dx1: f64, discriminant: f64) -> Result<f64> {
    if discriminant < 0.0 {
        return Err(GeometryError::DegenerateFrame(discriminant));
    }
    let (ph, _) = volume_ratio(&bh2(), 1.0 - eps * eps * dx1 * dx1)?;
    // Phi(2/3) = 0 is only reached up to rounding
    if ph.abs() <= 1e-12 {
        return Err(GeometryError::DegenerateFirstIntegral);
    }
    Ok(x1 * discriminant.sqrt() * ph)
}

/// `<df(grad w), W>` in closed form: `-eps^2 x1'' sqrt(delta + x1^2 - x1'^2)`.
pub fn pairing_closed_form(ty: SurfaceType, eps: f64, p: ProfilePoint) -> Result<f64> {
    Ok(-eps * eps * p.ddx1 * sqrt_discriminant(ty, p.x1, p.dx1)?)
}

/// `x1''` from the minimal equation solved for the highest derivative.
pub fn minimal_x1_second(ty: SurfaceType, eps: f64, x1: f64, dx1: f64) -> Result<f64> {
    let (num, den) = minimal_split(ty, eps, x1, dx1)?;
    if den == 0.0 || !den.is_finite() {
        return Err(GeometryError::Unsolvable { x1, dx1 });
    }
    Ok(num / den)
}

/// Numerator and denominator of `x1''`.
fn minimal_split(ty: SurfaceType, eps: f64, x1: f64, dx1: f64) -> Result<(f64, f64)> {
    let d = frame_discriminant(ty, x1, dx1);
    let s = 1.0 - eps * eps * dx1 * dx1;
    let (ph, dph) = volume_ratio(&bh2(), s)?;
    let num = (2.0 * x1 * x1 + ty.delta() - dx1 * dx1) * ph / d;
    let (a, b) = (x1 * ph / d, 2.0 * eps * eps * x1 * dph);
    let den = a + b;
    // cancellation to rounding level counts as a vanishing denominator
    if den.abs() <= 1e-12 * (a.abs() + b.abs()) {
        return Ok((num, 0.0));
    }
    Ok((num, den))
}

/// Point of the rotational surface.
pub fn surface_point(ty: SurfaceType, x1: f64, phi: f64, theta: f64) -> Result<LorentzPoint> {
    check_type(ty, x1)?;
    Ok(match ty {
        SurfaceType::Spherical => {
            let r = (1.0 + x1 * x1).sqrt();
            LorentzPoint([r * phi.cosh(), r * phi.sinh(), x1 * theta.cos(), x1 * theta.sin()])
        }
        SurfaceType::Hyperbolic => {
            let q = (x1 * x1 - 1.0).sqrt();
            LorentzPoint([x1 * theta.cosh(), x1 * theta.sinh(), q * phi.cos(), q * phi.sin()])
        }
    })
}

/// Profile data with derivatives in the profile's own parameter `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub x1: f64,
    pub dx1: f64,
    pub ddx1: f64,
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
}

/// `phi'` and `phi''` in arc length from `(x1, x1', x1'')`.
pub fn arc_length_phi_derivatives(ty: SurfaceType, x1: f64, dx1: f64, ddx1: f64) -> Result<(f64, f64)> {
    let d = frame_discriminant(ty, x1, dx1);
    if d < 0.0 {
        return Err(GeometryError::DegenerateFrame(d));
    }
    let den = ty.delta() + x1 * x1;
    let sd = d.sqrt();
    let dphi = sd / den;
    if d == 0.0 {
        return Ok((0.0, 0.0));
    }
    let dd = 2.0 * x1 * dx1 - 2.0 * dx1 * ddx1;
    let dden = 2.0 * x1 * dx1;
    Ok((dphi, dd / (2.0 * sd * den) - sd * dden / (den * den)))
}

/// The profile curve `gamma(a)` in L^4 and its derivative:
/// spherical `(R cosh phi, R sinh phi, x1, 0)`, hyperbolic `(x1, 0, Q cos phi, Q sin phi)`.
fn curve(ty: SurfaceType, j: &ProfileJet) -> ([f64; 3], [f64; 3]) {
    let (x1, dx1, phi, dphi) = (j.x1, j.dx1, j.phi, j.dphi);
    match ty {
        SurfaceType::Spherical => {
            let r = (1.0 + x1 * x1).sqrt();
            let dr = x1 * dx1 / r;
            let (ch, sh) = (phi.cosh(), phi.sinh());
            (
                [r * ch, r * sh, x1],
                [dr * ch + r * dphi * sh, dr * sh + r * dphi * ch, dx1],
            )
        }
        SurfaceType::Hyperbolic => {
            let q = (x1 * x1 - 1.0).sqrt();
            let dq = x1 * dx1 / q;
            let (c, s) = (phi.cos(), phi.sin());
            ([x1, q * c, q * s], [dx1, dq * c - q * dphi * s, dq * s + q * dphi * c])
        }
    }
}

/// Unit normal of the rotational frame in L^4, built from the profile curve
/// `(x, y, z)` and its derivative.
pub fn rotational_normal(ty: SurfaceType, jet: &ProfileJet, theta: f64) -> Result<[f64; 4]> {
    check_type(ty, jet.x1)?;
    let d = frame_discriminant(ty, jet.x1, jet.dx1);
    if !(d > 1e-14) {
        return Err(GeometryError::DegenerateFrame(d));
    }
    let ([x, y, z], [dx, dy, dz]) = curve(ty, jet);
    let n = match ty {
        SurfaceType::Spherical => {
            let c = x * dy - dx * y;
            [z * dy - y * dz, dx * z - x * dz, c * theta.cos(), c * theta.sin()]
        }
        SurfaceType::Hyperbolic => {
            let c = y * dz - z * dy;
            [c * theta.cosh(), c * theta.sinh(), x * dz - dx * z, dx * y - x * dy]
        }
    };
    let norm = lorentz_inner(&n, &n);
    if !(norm > 0.0) {
        return Err(GeometryError::DegenerateFrame(norm));
    }
    let s = norm.sqrt();
    Ok([n[0] / s, n[1] / s, n[2] / s, n[3] / s])
}

/// A generating profile of a rotational surface.
pub trait Profile: Send + Sync {
    fn surface_type(&self) -> SurfaceType;

    fn jet(&self, a: f64) -> Result<ProfileJet>;

    /// Whether the parameter is hyperbolic arc length.
    fn arc_length(&self) -> bool {
        true
    }
}

type ProfileFn = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

/// Profile given by an explicit `t -> (x1, x1', x1'')`, with `phi` integrated
/// numerically from `t0`.
#[derive(Clone)]
pub struct ArcLengthProfile {
    ty: SurfaceType,
    t0: f64,
    x1: ProfileFn,
}

impl ArcLengthProfile {
    pub fn new(ty: SurfaceType, t0: f64, x1: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static) -> Self {
        Self {
            ty,
            t0,
            x1: Arc::new(x1),
        }
    }

    /// `x1 = sign t / (sqrt(3) eps) + c`.
    pub fn linear(ty: SurfaceType, eps: f64, sign: f64, offset: f64) -> Self {
        let slope = sign / (3f64.sqrt() * eps);
        Self::new(ty, 0.0, move |t| (slope * t + offset, slope, 0.0))
    }

    fn phi_prime(&self, t: f64) -> f64 {
        let (x1, dx1, _) = (self.x1)(t);
        let d = frame_discriminant(self.ty, x1, dx1).max(0.0);
        d.sqrt() / (self.ty.delta() + x1 * x1)
    }
}

impl Profile for ArcLengthProfile {
    fn surface_type(&self) -> SurfaceType {
        self.ty
    }

    fn jet(&self, t: f64) -> Result<ProfileJet> {
        let (x1, dx1, ddx1) = (self.x1)(t);
        check_type(self.ty, x1)?;
        let (dphi, ddphi) = arc_length_phi_derivatives(self.ty, x1, dx1, ddx1)?;
        let phi = integrate(|u| self.phi_prime(u), self.t0, t, QuadratureOptions::default())?.value;
        Ok(ProfileJet {
            x1,
            dx1,
            ddx1,
            phi,
            dphi,
            ddphi,
        })
    }
}

/// Why an ODE trajectory stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeReport {
    pub termination: Termination,
    pub final_t: f64,
    pub final_state: Vec<f64>,
}

/// ODE-integrated BH-minimal profile; state `(x1, x1', phi)`.
#[derive(Debug, Clone)]
pub struct OdeProfile {
    ty: SurfaceType,
    eps: f64,
    pub solution: OdeSolution,
}

impl OdeProfile {
    pub fn report(&self) -> OdeReport {
        OdeReport {
            termination: self.solution.termination.clone(),
            final_t: self.solution.final_t(),
            final_state: self.solution.final_state().to_vec(),
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Arc-length samples `(t, x1, x1', x1'', phi)` at the accepted nodes.
    pub fn samples(&self) -> Vec<(f64, ProfilePoint, f64)> {
        self.solution
            .t
            .iter()
            .zip(&self.solution.y)
            .zip(&self.solution.dy)
            .map(|((t, y), dy)| {
                (
                    *t,
                    ProfilePoint {
                        x1: y[0],
                        dx1: y[1],
                        ddx1: dy[1],
                    },
                    y[2],
                )
            })
            .collect()
    }
}

impl Profile for OdeProfile {
    fn surface_type(&self) -> SurfaceType {
        self.ty
    }

    fn jet(&self, t: f64) -> Result<ProfileJet> {
        let y = self.solution.eval(t).ok_or_else(|| {
            GeometryError::Domain(format!(
                "t = {t} outside the integrated span [{}, {}]",
                self.solution.t[0],
                self.solution.final_t()
            ))
        })?;
        let ddx1 = minimal_x1_second(self.ty, self.eps, y[0], y[1])?;
        let (dphi, ddphi) = arc_length_phi_derivatives(self.ty, y[0], y[1], ddx1)?;
        Ok(ProfileJet {
            x1: y[0],
            dx1: y[1],
            ddx1,
            phi: y[2],
            dphi,
            ddphi,
        })
    }
}

/// Integrate the minimal profile equation from `(x1, x1')` at `t0` to `t1`.
///
/// Integration stops early (reported, not an error) when `s = 1 - eps^2 x1'^2`,
/// the frame discriminant, the `x1''` denominator, or the type constraint
/// reaches zero. Initial data with a vanishing denominator is unsolvable.
pub fn ode_integrate(
    ty: SurfaceType,
    eps: f64,
    x1: f64,
    dx1: f64,
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
) -> Result<OdeProfile> {
    check_type(ty, x1)?;
    let s0 = 1.0 - eps * eps * dx1 * dx1;
    if !(s0 > 0.0 && s0 <= 1.0) {
        return Err(GeometryError::InvalidFrakS(s0));
    }
    let d0 = frame_discriminant(ty, x1, dx1);
    if !(d0 > 0.0) {
        return Err(GeometryError::DegenerateFrame(d0));
    }
    let (_, den0) = minimal_split(ty, eps, x1, dx1)?;
    if den0 == 0.0 {
        return Err(GeometryError::Unsolvable { x1, dx1 });
    }
    let den_sign = den0.signum();
    let rhs = |_t: f64, y: &[f64]| -> Vec<f64> {
        let dd = minimal_x1_second(ty, eps, y[0], y[1]).unwrap_or(f64::NAN);
        let d = frame_discriminant(ty, y[0], y[1]);
        let dphi = if d >= 0.0 { d.sqrt() / (ty.delta() + y[0] * y[0]) } else { f64::NAN };
        vec![y[1], dd, dphi]
    };
    let boundary = match ty {
        SurfaceType::Spherical => 0.0,
        SurfaceType::Hyperbolic => 1.0,
    };
    let x_sign = if ty == SurfaceType::Spherical { x1.signum() } else { 1.0 };
    let events = [
        Event::new("frak-s", move |_, y: &[f64]| 1.0 - eps * eps * y[1] * y[1]),
        Event::new("discriminant", move |_, y: &[f64]| frame_discriminant(ty, y[0], y[1])),
        Event::new("denominator", move |_, y: &[f64]| {
            minimal_split(ty, eps, y[0], y[1]).map(|(_, d)| d * den_sign).unwrap_or(-1.0)
        }),
        Event::new("type-boundary", move |_, y: &[f64]| x_sign * (y[0] - x_sign * boundary)),
    ];
    let solution = ode::integrate(rhs, t0, &[x1, dx1, 0.0], t1, opts, &events)?;
    Ok(OdeProfile { ty, eps, solution })
}

/// Closed-form `x1(s)` and its `s`-derivatives, `s = x1'^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormJet {
    pub x1: f64,
    pub dx1: f64,
    pub ddx1: f64,
    /// `X = x1^2` and its derivatives
    pub big_x: f64,
    pub big_dx: f64,
    pub big_ddx: f64,
    /// `delta + x1^2 - s`
    pub discriminant: f64,
}

fn check_s(s: f64, eps: f64) -> Result<()> {
    let e = eps * eps;
    if !(s > 0.0) || (e > 0.0 && !(s < 1.0 / e)) || 1.0 - 3.0 * e * s == 0.0 {
        return Err(GeometryError::Domain(format!(
            "s = {s} outside (0, 1/(3 eps^2)) U (1/(3 eps^2), 1/eps^2) for eps = {eps}"
        )));
    }
    Ok(())
}

/// `x1(s)` of the BH-minimal surfaces with energy `E` on branch `sigma`.
pub fn closed_form_jet(s: f64, energy: f64, eps: f64, ty: SurfaceType, sigma: f64) -> Result<ClosedFormJet> {
    check_s(s, eps)?;
    let delta = ty.delta();
    let e = eps * eps;
    let a = 1.0 - e * s;
    let b = 1.0 - 3.0 * e * s;
    let g = a.powi(4) / (b * b);
    let num1 = e * a.powi(3) * (2.0 + 6.0 * e * s);
    let g1 = num1 / b.powi(3);
    let dnum1 = -24.0 * e * e * e * s * a * a;
    let g2 = dnum1 / b.powi(3) + 9.0 * e * num1 / b.powi(4);
    let e2 = energy * energy;
    let q = (delta - s).powi(2) + 4.0 * e2 * g;
    let q1 = -2.0 * (delta - s) + 4.0 * e2 * g1;
    let q2 = 2.0 + 4.0 * e2 * g2;
    let sq = q.sqrt();
    let big_x = 0.5 * (s - delta + sq);
    let big_dx = 0.5 * (1.0 + q1 / (2.0 * sq));
    let big_ddx = 0.5 * (q2 / (2.0 * sq) - q1 * q1 / (4.0 * q * sq));
    if !(big_x > 0.0) {
        return Err(GeometryError::Domain(format!("x1^2 = {big_x} at s = {s}, E = {energy}")));
    }
    let shift = s - delta;
    let discriminant = if shift > 0.0 {
        2.0 * e2 * g / (sq + shift)
    } else {
        0.5 * (sq - shift)
    };
    let r = big_x.sqrt();
    let x1 = sigma * r;
    check_type(ty, x1)?;
    Ok(ClosedFormJet {
        x1,
        dx1: sigma * big_dx / (2.0 * r),
        ddx1: sigma * (big_ddx / (2.0 * r) - big_dx * big_dx / (4.0 * big_x * r)),
        big_x,
        big_dx,
        big_ddx,
        discriminant,
    })
}

pub fn closed_form_x1(s: f64, energy: f64, eps: f64, ty: SurfaceType, sigma: f64) -> Result<f64> {
    Ok(closed_form_jet(s, energy, eps, ty, sigma)?.x1)
}

/// The first integral carried by the branch: `sigma sign(Phi) |E|`.
pub fn branch_energy(s: f64, energy: f64, eps: f64, sigma: f64) -> f64 {
    let b = 1.0 - 3.0 * eps * eps * s;
    sigma * b.signum() * energy.abs()
}

/// `d phi / ds` and `d^2 phi / ds^2` for the closed-form profile;
/// `energy` enters linearly.
pub fn phi_s_derivatives(s: f64, energy: f64, eps: f64, ty: SurfaceType, phi_sign: f64) -> Result<(f64, f64)> {
    let j = closed_form_jet(s, energy, eps, ty, 1.0)?;
    let e = eps * eps;
    let delta = ty.delta();
    let a = 1.0 - e * s;
    let b = 1.0 - 3.0 * e * s;
    let amp = a * a / (s.sqrt() * b);
    let damp = amp * (-2.0 * e / a - 0.5 / s + 3.0 * e / b);
    let (x, dx, ddx) = (j.big_x, j.big_dx, j.big_ddx);
    let den = x * (delta + x);
    let bb = dx / den;
    let dbb = ddx / den - dx * dx * (delta + 2.0 * x) / (den * den);
    let c = phi_sign * energy / 2.0;
    Ok((c * amp * bb, c * (damp * bb + amp * dbb)))
}

/// `phi(s) - phi(s0)` by adaptive quadrature in `u = sqrt(s)`.
pub fn phi_of_s(s0: f64, s: f64, energy: f64, eps: f64, ty: SurfaceType, phi_sign: f64) -> Result<f64> {
    if energy == 0.0 {
        return Ok(0.0);
    }
    check_s(s0, eps)?;
    check_s(s, eps)?;
    let e = eps * eps;
    let singular = 1.0 / (3.0 * e);
    if e > 0.0 && (s0 - singular) * (s - singular) <= 0.0 {
        return Err(GeometryError::Domain(format!(
            "interval [{s0}, {s}] crosses s = 1/(3 eps^2) = {singular}"
        )));
    }
    let failure = std::cell::RefCell::new(None);
    let integrand = |u: f64| -> f64 {
        match phi_s_derivatives(u * u, energy, eps, ty, phi_sign) {
            Ok((d, _)) => 2.0 * u * d,
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                f64::NAN
            }
        }
    };
    let r = integrate(integrand, s0.sqrt(), s.sqrt(), QuadratureOptions::default());
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    Ok(r?.value)
}

/// `phi` at sorted nodes, accumulated from `s0`.
pub fn phi_samples(s0: f64, nodes: &[f64], energy: f64, eps: f64, ty: SurfaceType, phi_sign: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(nodes.len());
    let (mut prev, mut acc) = (s0, 0.0);
    for &s in nodes {
        acc += phi_of_s(prev, s, energy, eps, ty, phi_sign)?;
        out.push(acc);
        prev = s;
    }
    Ok(out)
}

/// Closed-form profile parametrized by `s = x1'^2`, `phi(s0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormProfile {
    pub ty: SurfaceType,
    pub eps: f64,
    pub energy: f64,
    pub sigma: f64,
    pub phi_sign: f64,
    pub s0: f64,
}

impl ClosedFormProfile {
    fn signed_energy(&self, s: f64) -> f64 {
        branch_energy(s, self.energy, self.eps, self.sigma)
    }
}

impl Profile for ClosedFormProfile {
    fn surface_type(&self) -> SurfaceType {
        self.ty
    }

    fn jet(&self, s: f64) -> Result<ProfileJet> {
        let j = closed_form_jet(s, self.energy, self.eps, self.ty, self.sigma)?;
        let e = self.signed_energy(s);
        let (dphi, ddphi) = phi_s_derivatives(s, e, self.eps, self.ty, self.phi_sign)?;
        let phi = phi_of_s(self.s0, s, e, self.eps, self.ty, self.phi_sign)?;
        Ok(ProfileJet {
            x1: j.x1,
            dx1: j.dx1,
            ddx1: j.ddx1,
            phi,
            dphi,
            ddphi,
        })
    }

    fn arc_length(&self) -> bool {
        false
    }
}

/// A profile with `x1` scaled by `kappa`, angle unchanged.
#[derive(Clone)]
pub struct ScaledProfile {
    pub inner: Arc<dyn Profile>,
    pub kappa: f64,
}

impl Profile for ScaledProfile {
    fn surface_type(&self) -> SurfaceType {
        self.inner.surface_type()
    }

    fn jet(&self, a: f64) -> Result<ProfileJet> {
        let j = self.inner.jet(a)?;
        let scaled = ProfileJet {
            x1: j.x1 * self.kappa,
            dx1: j.dx1 * self.kappa,
            ddx1: j.ddx1 * self.kappa,
            ..j
        };
        check_type(self.surface_type(), scaled.x1)?;
        Ok(scaled)
    }

    fn arc_length(&self) -> bool {
        self.kappa == 1.0 && self.inner.arc_length()
    }
}

/// Chart position, first and second derivatives of the surface at `(a, theta)`.
/// Columns: 0 = `a`, 1 = `theta`.
pub fn chart_jet(ty: SurfaceType, j: &ProfileJet, theta: f64) -> ([f64; 3], DMatrix<f64>, Tensor3) {
    let (x1, d1, d2, phi, p1, p2) = (j.x1, j.dx1, j.ddx1, j.phi, j.dphi, j.ddphi);
    let mut z = DMatrix::zeros(3, 2);
    let mut zz = Tensor3::zeros(3, 2, 2);
    let mut set2 = |a: usize, aa: f64, at: f64, tt: f64| {
        zz[(a, 0, 0)] = aa;
        zz[(a, 0, 1)] = at;
        zz[(a, 1, 0)] = at;
        zz[(a, 1, 1)] = tt;
    };
    let pos;
    match ty {
        SurfaceType::Spherical => {
            let r = (1.0 + x1 * x1).sqrt();
            let r1 = x1 * d1 / r;
            let r2 = (d1 * d1 + x1 * d2) / r - x1 * x1 * d1 * d1 / (r * r * r);
            let (ch, sh) = (phi.cosh(), phi.sinh());
            let (c, s) = (theta.cos(), theta.sin());
            pos = [r * sh, x1 * c, x1 * s];
            z[(0, 0)] = r1 * sh + r * p1 * ch;
            z[(1, 0)] = d1 * c;
            z[(1, 1)] = -x1 * s;
            z[(2, 0)] = d1 * s;
            z[(2, 1)] = x1 * c;
            set2(0, r2 * sh + 2.0 * r1 * p1 * ch + r * (p2 * ch + p1 * p1 * sh), 0.0, 0.0);
            set2(1, d2 * c, -d1 * s, -x1 * c);
            set2(2, d2 * s, d1 * c, -x1 * s);
        }
        SurfaceType::Hyperbolic => {
            let q = (x1 * x1 - 1.0).sqrt();
            let q1 = x1 * d1 / q;
            let q2 = (d1 * d1 + x1 * d2) / q - x1 * x1 * d1 * d1 / (q * q * q);
            let (c, s) = (phi.cos(), phi.sin());
            let (ch, sh) = (theta.cosh(), theta.sinh());
            pos = [x1 * sh, q * c, q * s];
            z[(0, 0)] = d1 * sh;
            z[(0, 1)] = x1 * ch;
            z[(1, 0)] = q1 * c - q * p1 * s;
            z[(2, 0)] = q1 * s + q * p1 * c;
            set2(0, d2 * sh, d1 * ch, x1 * sh);
            set2(1, q2 * c - 2.0 * q1 * p1 * s - q * (p2 * s + p1 * p1 * c), 0.0, 0.0);
            set2(2, q2 * s + 2.0 * q1 * p1 * c + q * (p2 * c - p1 * p1 * s), 0.0, 0.0);
        }
    }
    (pos, z, zz)
}

/// Rotational surface as an immersion `(a, theta) -> u` into the H^3 chart.
#[derive(Clone)]
pub struct RotationalSurface {
    pub profile: Arc<dyn Profile>,
    pub field: MixedKillingField,
    /// Use `d w / dt = -eps_k x1''` instead of differencing `w` (arc-length profiles only).
    pub analytic_w: bool,
}

impl RotationalSurface {
    pub fn new(profile: Arc<dyn Profile>, field: MixedKillingField) -> Self {
        Self {
            profile,
            field,
            analytic_w: true,
        }
    }

    pub fn numeric_w(mut self) -> Self {
        self.analytic_w = false;
        self
    }

    pub fn surface_type(&self) -> SurfaceType {
        self.profile.surface_type()
    }

    pub fn eps(&self) -> f64 {
        self.surface_type().eps(&self.field)
    }

    /// Jet at `(a, theta)` from an already evaluated profile jet.
    pub fn jet_from_profile(&self, a: f64, pj: &ProfileJet, theta: f64) -> Result<ImmersionJet2> {
        let ty = self.surface_type();
        let (pos, z, zz) = chart_jet(ty, pj, theta);
        let jet = ImmersionJet2::new(vec![a, theta], pos.to_vec(), z, zz)?;
        Ok(match rotational_normal(ty, pj, theta) {
            Ok(n) => jet.with_normal_hint(DVector::from_vec(vec![n[1], n[2], n[3]])),
            Err(_) => jet,
        })
    }

    pub fn point(&self, pj: &ProfileJet, theta: f64) -> Result<LorentzPoint> {
        surface_point(self.surface_type(), pj.x1, pj.phi, theta)
    }
}

impl Immersion for RotationalSurface {
    fn source_dim(&self) -> usize {
        2
    }

    fn target_dim(&self) -> usize {
        3
    }

    fn jet(&self, x: &[f64]) -> Result<ImmersionJet2> {
        let pj = self.profile.jet(x[0])?;
        self.jet_from_profile(x[0], &pj, x[1])
    }

    fn analytic_w_gradient(&self, _nav: &NavigationData, x: &[f64]) -> Option<DVector<f64>> {
        if !self.analytic_w || !self.profile.arc_length() {
            return None;
        }
        let pj = self.profile.jet(x[0]).ok()?;
        rotational_normal(self.surface_type(), &pj, x[1]).ok()?;
        Some(DVector::from_vec(vec![-self.eps() * pj.ddx1, 0.0]))
    }
}

/// The totally geodesic surfaces
/// `(cosh t, 0, sinh t cos theta, sinh t sin theta)` (spherical) and
/// `(cosh t cosh theta, cosh t sinh theta, sinh t, 0)` (hyperbolic).
#[derive(Debug, Clone, Copy)]
pub struct GeodesicSurface {
    pub ty: SurfaceType,
}

impl GeodesicSurface {
    pub fn point(&self, t: f64, theta: f64) -> LorentzPoint {
        match self.ty {
            SurfaceType::Spherical => LorentzPoint([t.cosh(), 0.0, t.sinh() * theta.cos(), t.sinh() * theta.sin()]),
            SurfaceType::Hyperbolic => {
                LorentzPoint([t.cosh() * theta.cosh(), t.cosh() * theta.sinh(), t.sinh(), 0.0])
            }
        }
    }

    /// `x1` of the profile: `sinh t` or `cosh t`.
    pub fn x1(&self, t: f64) -> f64 {
        match self.ty {
            SurfaceType::Spherical => t.sinh(),
            SurfaceType::Hyperbolic => t.cosh(),
        }
    }

    pub fn dx1(&self, t: f64) -> f64 {
        match self.ty {
            SurfaceType::Spherical => t.cosh(),
            SurfaceType::Hyperbolic => t.sinh(),
        }
    }
}

impl Immersion for GeodesicSurface {
    fn source_dim(&self) -> usize {
        2
    }

    fn target_dim(&self) -> usize {
        3
    }

    fn jet(&self, x: &[f64]) -> Result<ImmersionJet2> {
        let (t, th) = (x[0], x[1]);
        let (ct, st) = (t.cosh(), t.sinh());
        let mut zz = Tensor3::zeros(3, 2, 2);
        let (pos, z) = match self.ty {
            SurfaceType::Spherical => {
                let (c, s) = (th.cos(), th.sin());
                let z = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, ct * c, -st * s, ct * s, st * c]);
                let v = [[st * c, -ct * s, -st * c], [st * s, ct * c, -st * s]];
                for (a, row) in v.iter().enumerate() {
                    zz[(a + 1, 0, 0)] = row[0];
                    zz[(a + 1, 0, 1)] = row[1];
                    zz[(a + 1, 1, 0)] = row[1];
                    zz[(a + 1, 1, 1)] = row[2];
                }
                ([0.0, st * c, st * s], z)
            }
            SurfaceType::Hyperbolic => {
                let (c, s) = (th.cosh(), th.sinh());
                let z = DMatrix::from_row_slice(3, 2, &[st * s, ct * c, ct, 0.0, 0.0, 0.0]);
                zz[(0, 0, 0)] = ct * s;
                zz[(0, 0, 1)] = st * c;
                zz[(0, 1, 0)] = st * c;
                zz[(0, 1, 1)] = ct * s;
                zz[(1, 0, 0)] = st;
                ([ct * s, st, 0.0], z)
            }
        };
        ImmersionJet2::new(vec![t, th], pos.to_vec(), z, zz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::DiffKernel;

    #[test]
    fn surface_point_examples() {
        let p = surface_point(SurfaceType::Spherical, 1.0, 0.0, 0.0).unwrap();
        assert!((p.0[0] - 2f64.sqrt()).abs() < 1e-15 && p.0[2] == 1.0);
        let p = surface_point(SurfaceType::Hyperbolic, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(p.0[0], 2.0);
        assert!((p.0[2] - 3f64.sqrt()).abs() < 1e-15);
        assert!(surface_point(SurfaceType::Hyperbolic, 0.9, 0.0, 0.0).is_err());
        assert!(surface_point(SurfaceType::Spherical, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn linear_profile_is_exact_solution() {
        for (ty, c) in [(SurfaceType::Spherical, 0.3), (SurfaceType::Hyperbolic, 1.6)] {
            let eps = 0.5;
            let slope = 1.0 / (3f64.sqrt() * eps);
            for t in [0.0, 0.1, 0.2] {
                let p = ProfilePoint {
                    x1: slope * t + c,
                    dx1: slope,
                    ddx1: 0.0,
                };
                if frame_discriminant(ty, p.x1, p.dx1) > 0.0 {
                    assert!(minimal_residual(ty, eps, p).unwrap().abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn non_solution_has_residual() {
        let t: f64 = 0.3;
        let p = ProfilePoint {
            x1: 2.0 + t * t,
            dx1: 2.0 * t,
            ddx1: 2.0,
        };
        assert!(minimal_residual(SurfaceType::Spherical, 0.5, p).unwrap().abs() > 1e-3);
    }

    #[test]
    fn closed_form_reference_value() {
        let x = closed_form_x1(0.5, 1.0, 1.0, SurfaceType::Spherical, 1.0).unwrap();
        let expected = (0.5f64).sqrt() * (-0.5 + 5f64.sqrt() / 2.0).sqrt();
        assert!((x - expected).abs() < 1e-14);
    }

    #[test]
    fn closed_form_energy_round_trip_and_derivatives() {
        for ty in [SurfaceType::Spherical, SurfaceType::Hyperbolic] {
            for s in [0.05, 0.5, 1.0, 2.0, 3.0] {
                let j = match closed_form_jet(s, 1.0, 0.5, ty, 1.0) {
                    Ok(j) => j,
                    Err(_) => continue,
                };
                let e = energy_with_discriminant(0.5, j.x1, s.sqrt(), j.discriminant).unwrap();
                assert!((j.discriminant - frame_discriminant(ty, j.x1, s.sqrt())).abs() < 1e-12);
                assert!((e - branch_energy(s, 1.0, 0.5, 1.0)).abs() < 1e-9, "{ty:?} {s} {e}");
                let k = DiffKernel::new(1e-4, true);
                let d = k.derivative(|u| closed_form_x1(u, 1.0, 0.5, ty, 1.0).unwrap(), s);
                let dd = k.derivative(|u| closed_form_jet(u, 1.0, 0.5, ty, 1.0).unwrap().dx1, s);
                assert!((d - j.dx1).abs() < 1e-8);
                assert!((dd - j.ddx1).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn phi_is_linear_in_energy() {
        let a = phi_of_s(0.1, 0.9, 1.0, 0.5, SurfaceType::Spherical, 1.0).unwrap();
        let b = phi_of_s(0.1, 0.9, -1.0, 0.5, SurfaceType::Spherical, 1.0).unwrap();
        assert!((a + b).abs() < 1e-12 && a != 0.0);
        assert_eq!(phi_of_s(0.1, 0.9, 0.0, 0.5, SurfaceType::Spherical, 1.0).unwrap(), 0.0);
        assert!(phi_of_s(0.1, 2.0, 1.0, 0.5, SurfaceType::Spherical, 1.0).is_err());
    }

    #[test]
    fn phi_s_second_derivative() {
        let k = DiffKernel::new(1e-4, true);
        let ty = SurfaceType::Hyperbolic;
        let (_, dd) = phi_s_derivatives(0.7, 1.3, 0.5, ty, 1.0).unwrap();
        let fd = k.derivative(|u| phi_s_derivatives(u, 1.3, 0.5, ty, 1.0).unwrap().0, 0.7);
        assert!((dd - fd).abs() < 1e-7);
    }

    #[test]
    fn normal_degenerates_on_geodesic_profile() {
        let t: f64 = 0.4;
        let j = ProfileJet {
            x1: t.sinh(),
            dx1: t.cosh(),
            ddx1: t.sinh(),
            phi: 0.0,
            dphi: 0.0,
            ddphi: 0.0,
        };
        assert!(matches!(
            rotational_normal(SurfaceType::Spherical, &j, 0.3),
            Err(GeometryError::DegenerateFrame(_))
        ));
    }

    #[test]
    fn zero_denominator_is_unsolvable() {
        let (ty, eps, x1) = (SurfaceType::Spherical, 0.5, 1.0);
        let den = |v: f64| minimal_split(ty, eps, x1, v).unwrap().1;
        let (mut a, mut b) = (1.3, 1.4);
        assert!(den(a) > 0.0 && den(b) < 0.0);
        while b - a > 1e-15 {
            let m = 0.5 * (a + b);
            if den(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let r = ode_integrate(ty, eps, x1, b, 0.0, 1.0, &OdeOptions::default());
        assert!(matches!(r, Err(GeometryError::Unsolvable { .. })), "{r:?}");
    }
}
