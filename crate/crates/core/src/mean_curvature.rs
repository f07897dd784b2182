//! Mean curvature forms of immersions in Randers spaces.
//!
//! Three closed-form evaluations (arbitrary wind, Killing wind, and the
//! scalar hypersurface form) plus a variational oracle that differentiates
//! the volume density numerically.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::immersion::{induced_geometry, pairing_with_geometry, Immersion, ImmersionJet2, InducedGeometry};
use crate::measure::{density, phi, MeasureKind, NavigationData};

/// Killing tolerance used by the Killing-specialised formulas.
pub const KILLING_TOL: f64 = 1e-8;

/// Components `H_g` of the mean curvature form `H_g dx^g`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurvatureForm {
    pub components: DVector<f64>,
}

impl MeanCurvatureForm {
    pub fn new(components: DVector<f64>) -> Self {
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `H_f(X) = H_g X^g`.
    pub fn apply(&self, x: &DVector<f64>) -> f64 {
        self.components.dot(x)
    }

    pub fn max_abs(&self) -> f64 {
        self.components.amax()
    }

    pub fn max_abs_diff(&self, other: &MeanCurvatureForm) -> f64 {
        (&self.components - &other.components).amax()
    }

    /// `max_i |H_g z^g_i|`.
    pub fn tangent_residual(&self, z: &DMatrix<f64>) -> f64 {
        z.tr_mul(&self.components).amax()
    }
}

/// `|a - b|_inf / max(|b|_inf, floor)`.
pub fn relative_deviation(a: &MeanCurvatureForm, b: &MeanCurvatureForm, floor: f64) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(floor)
}

struct Scalars {
    rho: f64,
    d_rho: f64,
    dd_rho: f64,
    d_log_chi: f64,
}

fn scalars(nav: &NavigationData, geom: &InducedGeometry) -> Result<Scalars> {
    let s = geom.frak_s;
    if !(s > 0.0) {
        return Err(GeometryError::InvalidFrakS(s));
    }
    let m = nav.measure.with_dim(geom.n);
    Ok(Scalars {
        rho: m.rho(s),
        d_rho: m.d_rho(s),
        dd_rho: m.dd_rho(s),
        d_log_chi: m.d_log_chi(geom.wind.norm_sq),
    })
}

/// Contractions shared by both closed forms.
struct Contractions {
    /// `u_e = W_a|e W^a`
    u: DVector<f64>,
    /// `B^{eb} W_b`
    bw: DVector<f64>,
    /// `W_t P^t_g`
    pw: DVector<f64>,
    /// `sum_e W_a|e B^{eb} W_b`, free index a
    cov_bw: DVector<f64>,
    /// `h^ij tau^a_ij`
    trace: DVector<f64>,
    /// `W^i W^j tau^a_ij`
    wind_trace: DVector<f64>,
}

fn contractions(geom: &InducedGeometry) -> Contractions {
    let wd = &geom.wind.cov_lower;
    let m = geom.dim();
    let u = wd.tr_mul(&geom.wind.upper);
    let bw = &geom.b_up * &geom.wind.lower;
    let pw = geom.normal_proj.tr_mul(&geom.wind.lower);
    let cov_bw = wd * &bw;
    let wt = &geom.tangent_wind_up;
    let mut wind_trace = DVector::zeros(m);
    for a in 0..m {
        for i in 0..geom.n {
            for j in 0..geom.n {
                wind_trace[a] += wt[i] * wt[j] * geom.tau[(a, i, j)];
            }
        }
    }
    Contractions {
        u,
        bw,
        pw,
        cov_bw,
        trace: geom.trace_tau.clone(),
        wind_trace,
    }
}

/// First line shared by both closed forms (vanishes when chi is constant).
fn chi_term(sc: &Scalars, geom: &InducedGeometry, c: &Contractions) -> DVector<f64> {
    let lc = sc.d_log_chi;
    if lc == 0.0 {
        return DVector::zeros(geom.dim());
    }
    let p_u = geom.normal_proj.tr_mul(&c.u);
    (2.0 * lc / sc.rho) * (2.0 * sc.d_rho * c.bw.dot(&c.u) * &c.pw - sc.rho * p_u)
}

/// Mean curvature form for arbitrary wind and codimension.
pub fn mean_form_general(nav: &NavigationData, jet: &ImmersionJet2) -> Result<MeanCurvatureForm> {
    let geom = induced_geometry(nav, jet)?;
    mean_form_general_at(nav, &geom)
}

pub fn mean_form_general_at(nav: &NavigationData, geom: &InducedGeometry) -> Result<MeanCurvatureForm> {
    let sc = scalars(nav, geom)?;
    let c = contractions(geom);
    let wd = &geom.wind.cov_lower;
    let p = &geom.normal_proj;
    let (r, r1, r2) = (sc.rho, sc.d_rho, sc.dd_rho);

    let t1 = chi_term(&sc, geom, &c);

    // (h^{ab} - B^{ab}) W_b
    let nw = (&geom.metric.inverse - &geom.b_up) * &geom.wind.lower;
    // sum_a nw^a W_a|e, free index e
    let nw_wd = wd.tr_mul(&nw);
    let a = 2.0 * r1 * p.tr_mul(&nw_wd);
    let b_trace: f64 = (&geom.b_up).component_mul(&wd.transpose()).sum();
    let b = 2.0 * r1 * b_trace * &c.pw;
    let cc = -4.0 * r2 * nw_wd.dot(&c.bw) * &c.pw;
    let d = 2.0 * r1 * p.tr_mul(&c.cov_bw);
    let t2 = -(a + b + cc + d) / r;

    let normal_low = &geom.metric.value - &geom.b_low;
    let t3 = -(2.0 * r1 * c.pw.dot(&c.trace) * &c.pw
        + r * (&normal_low * &c.trace)
        + 2.0 * (2.0 * r2 * c.pw.dot(&c.wind_trace) * &c.pw - r1 * (&normal_low * &c.wind_trace)))
        / r;

    Ok(MeanCurvatureForm::new(t1 + t2 + t3))
}

fn require_killing(geom: &InducedGeometry) -> Result<()> {
    let residual = geom.wind.killing_residual();
    if residual > KILLING_TOL {
        return Err(GeometryError::NotKilling {
            residual,
            tol: KILLING_TOL,
        });
    }
    Ok(())
}

/// Mean curvature form for a Killing wind. Refuses non-Killing data.
pub fn mean_form_killing(nav: &NavigationData, jet: &ImmersionJet2) -> Result<MeanCurvatureForm> {
    let geom = induced_geometry(nav, jet)?;
    mean_form_killing_at(nav, &geom)
}

pub fn mean_form_killing_at(nav: &NavigationData, geom: &InducedGeometry) -> Result<MeanCurvatureForm> {
    require_killing(geom)?;
    let sc = scalars(nav, geom)?;
    let c = contractions(geom);
    let p = &geom.normal_proj;
    let (r, r1, r2) = (sc.rho, sc.d_rho, sc.dd_rho);
    let hm = &geom.metric.value;
    let wl = &geom.wind.lower;

    let t1 = chi_term(&sc, geom, &c);
    let t2 = -(4.0 * r1 * p.tr_mul(&c.cov_bw) - 4.0 * r2 * c.bw.dot(&c.u) * &c.pw + 2.0 * r1 * p.tr_mul(&c.u)) / r;
    let t3 = -(2.0 * r1 * wl.dot(&c.trace) * &c.pw + r * (hm * &c.trace) + 4.0 * r2 * wl.dot(&c.wind_trace) * &c.pw
        - 2.0 * r1 * (hm * &c.wind_trace))
        / r;
    Ok(MeanCurvatureForm::new(t1 + t2 + t3))
}

/// Scalar ingredients of the hypersurface mean curvature.
#[derive(Debug, Clone)]
pub struct HypersurfaceTerms {
    pub n: usize,
    pub normal: DVector<f64>,
    pub mean_curvature: f64,
    pub w: f64,
    /// `1 - w^2`
    pub frak_s: f64,
    pub rho: f64,
    pub phi: f64,
    pub d_phi: f64,
    /// `N(log chi) = (log chi)'(|W|^2) N(|W|^2)`
    pub normal_log_chi: f64,
    /// `<df(grad w), W>`
    pub pairing: f64,
}

pub fn hypersurface_terms(nav: &NavigationData, f: &dyn Immersion, x: &[f64]) -> Result<HypersurfaceTerms> {
    let jet = f.jet(x)?;
    let geom = induced_geometry(nav, &jet)?;
    hypersurface_terms_at(nav, f, x, &geom)
}

fn hypersurface_terms_at(
    nav: &NavigationData,
    f: &dyn Immersion,
    x: &[f64],
    geom: &InducedGeometry,
) -> Result<HypersurfaceTerms> {
    let normal = geom.hypersurface_normal()?.clone();
    require_killing(geom)?;
    let w = geom.w.unwrap_or_default();
    let s = 1.0 - w * w;
    let measure = nav.measure.with_dim(geom.n);
    let (phi_v, d_phi) = phi(&measure, s)?;
    let normal_log_chi = measure.d_log_chi(geom.wind.norm_sq) * geom.wind.grad_norm_sq().dot(&normal);
    let pairing = pairing_with_geometry(nav, f, x, geom)?;
    Ok(HypersurfaceTerms {
        n: geom.n,
        normal,
        mean_curvature: geom.mean_curvature.unwrap_or_default(),
        w,
        frak_s: s,
        rho: measure.rho(s),
        phi: phi_v,
        d_phi,
        normal_log_chi,
        pairing,
    })
}

impl HypersurfaceTerms {
    /// `-(1/rho) {[nH + N(log chi)] Phi - 2 <df(grad w), W> Phi'}`, the value on `N`
    /// when `N` is a unit vector.
    pub fn scalar(&self, with_chi: bool) -> f64 {
        let chi = if with_chi { self.normal_log_chi } else { 0.0 };
        let nh = self.n as f64 * self.mean_curvature;
        -((nh + chi) * self.phi - 2.0 * self.pairing * self.d_phi) / self.rho
    }
}

/// Hypersurface mean curvature `H_f(X)` for a Killing wind and any `(rho, chi)`.
pub fn mean_value_hypersurface(nav: &NavigationData, f: &dyn Immersion, x: &[f64], x_tilde: &DVector<f64>) -> Result<f64> {
    let jet = f.jet(x)?;
    let geom = induced_geometry(nav, &jet)?;
    let terms = hypersurface_terms_at(nav, f, x, &geom)?;
    Ok(terms.scalar(true) * geom.metric.inner(&terms.normal, x_tilde))
}

/// Hypersurface BH mean curvature `H_f(X)` for a Killing wind.
pub fn mean_value_bh(nav: &NavigationData, f: &dyn Immersion, x: &[f64], x_tilde: &DVector<f64>) -> Result<f64> {
    if nav.measure.kind() != MeasureKind::BusemannHausdorff {
        return Err(GeometryError::Domain(format!(
            "BH formula requested with {} measure",
            nav.measure.kind()
        )));
    }
    let jet = f.jet(x)?;
    let geom = induced_geometry(nav, &jet)?;
    let terms = hypersurface_terms_at(nav, f, x, &geom)?;
    Ok(terms.scalar(false) * geom.metric.inner(&terms.normal, x_tilde))
}

/// Difference steps used by [`mean_form_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSteps {
    pub first: f64,
    pub second: f64,
}

impl Default for OracleSteps {
    fn default() -> Self {
        Self {
            first: 1e-4,
            second: 1e-3,
        }
    }
}

/// Variational mean curvature form
/// `H_g = (1/F) { dF/dx^g - d2F/dz^g_i dz^e_j z^e_ij - d2F/dx^e dz^g_i z^e_i }`
/// with the density `F(x, z)` differentiated numerically as a free function of
/// its arguments.
pub fn mean_form_oracle(nav: &NavigationData, jet: &ImmersionJet2) -> Result<MeanCurvatureForm> {
    mean_form_oracle_with(nav, jet, OracleSteps::default())
}

pub fn mean_form_oracle_with(nav: &NavigationData, jet: &ImmersionJet2, steps: OracleSteps) -> Result<MeanCurvatureForm> {
    let (m, n) = jet.z.shape();
    let measure = nav.measure.with_dim(n);
    let nav = nav.with_measure(measure);
    // Flat argument vector: x^g at g, z^g_i at m + g n + i.
    let zi = |g: usize, i: usize| m + g * n + i;
    let mut base = vec![0.0; m + m * n];
    base[..m].copy_from_slice(&jet.position);
    for g in 0..m {
        for i in 0..n {
            base[zi(g, i)] = jet.z[(g, i)];
        }
    }
    let failure: RefCell<Option<GeometryError>> = RefCell::new(None);
    let eval = |v: &[f64]| -> f64 {
        let z = DMatrix::from_fn(m, n, |g, i| v[zi(g, i)]);
        match density(&nav, &v[..m], &z) {
            Ok(d) => d,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let f0 = eval(&base);
    let scale = base.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));

    // Directions D_i: along the curve x -> (f(x), df(x)) in the i-th parameter.
    let directions: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; base.len()];
            for e in 0..m {
                d[e] = jet.z[(e, i)];
                for j in 0..n {
                    d[zi(e, j)] = jet.zz[(e, i, j)];
                }
            }
            d
        })
        .collect();

    let first = |k: usize| -> f64 {
        let h = steps.first * scale;
        let central = |h: f64| {
            let mut p = base.clone();
            p[k] += h;
            let fp = eval(&p);
            p[k] = base[k] - h;
            (fp - eval(&p)) / (2.0 * h)
        };
        (4.0 * central(0.5 * h) - central(h)) / 3.0
    };
    // d2F / dv_k d(dir) for a unit coordinate k and a general direction.
    let mixed = |k: usize, dir: &[f64]| -> f64 {
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let hk = steps.second * scale;
        let hd = steps.second * scale / norm;
        let estimate = |a: f64, b: f64| {
            let at = |sa: f64, sb: f64| {
                let mut p: Vec<f64> = base.iter().zip(dir).map(|(x, d)| x + sb * b * d).collect();
                p[k] += sa * a;
                eval(&p)
            };
            (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * a * b)
        };
        (4.0 * estimate(0.5 * hk, 0.5 * hd) - estimate(hk, hd)) / 3.0
    };

    let mut components = DVector::zeros(m);
    for g in 0..m {
        let mut v = first(g);
        for (i, dir) in directions.iter().enumerate() {
            v -= mixed(zi(g, i), dir);
        }
        components[g] = v / f0;
    }
    if let Some(e) = failure.into_inner() {
        return Err(GeometryError::OracleIllConditioned(format!(
            "density not evaluable on the difference stencil (step {} / {}): {e}",
            steps.first, steps.second
        )));
    }
    if components.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::OracleIllConditioned(format!(
            "non-finite oracle components {:?}",
            components.as_slice()
        )));
    }
    Ok(MeanCurvatureForm::new(components))
}
