//! Pointwise induced geometry of an immersion `f: M^n -> (M~^{n+p}, h)`.
//!
//! Latin indices `i, j` run over the `n` parameters, Greek indices over the
//! `n + p` chart coordinates of the ambient space. With
//! `z^a_i = d f^a / d x^i` and `h_ij = h_ab z^a_i z^b_j`:
//!
//! - `A^{ia} = h^ij z^a_j`, `A^i_a = A^{ib} h_ba`
//! - `B^{ab} = h^ij z^a_i z^b_j`, `B^a_b = B^{ac} h_cb`, `B_ab = h_ac B^c_b`
//! - `tau^a_ij = (delta^a_e - B^a_e)(z^e_ij + Gamma^e_cd z^c_j z^d_i)`
//!
//! For hypersurfaces the mean curvature `H` is fixed by
//! `h^ij tau^a_ij = n H N^a`.

use nalgebra::{DMatrix, DVector};

use crate::diff::DiffKernel;
use crate::error::{GeometryError, Result};
use crate::geometry::{MetricJet, WindJet};
use crate::measure::NavigationData;
use crate::tensor::Tensor3;

/// Second-order jet of an immersion at a parameter point.
#[derive(Debug, Clone)]
pub struct ImmersionJet2 {
    pub base: Vec<f64>,
    pub position: Vec<f64>,
    /// `(n + p) x n`, column `i` is `d f / d x^i`.
    pub z: DMatrix<f64>,
    /// `[(a, i, j)] = d^2 f^a / d x^i d x^j`.
    pub zz: Tensor3,
    /// Chart vector used only to orient the unit normal of a hypersurface.
    pub normal_hint: Option<DVector<f64>>,
}

impl ImmersionJet2 {
    pub fn new(base: Vec<f64>, position: Vec<f64>, z: DMatrix<f64>, zz: Tensor3) -> Result<Self> {
        let (m, n) = z.shape();
        if position.len() != m || base.len() != n || zz.dims() != [m, n, n] {
            return Err(GeometryError::Dimension(format!(
                "jet shapes disagree: position {}, base {}, z {}x{}, zz {:?}",
                position.len(),
                base.len(),
                m,
                n,
                zz.dims()
            )));
        }
        if n == 0 || n >= m {
            return Err(GeometryError::Dimension(format!("need 0 < n < n + p, got n = {n}, n + p = {m}")));
        }
        let scale = zz.max_abs().max(1.0);
        for a in 0..m {
            for i in 0..n {
                for j in i + 1..n {
                    if (zz[(a, i, j)] - zz[(a, j, i)]).abs() > 1e-12 * scale {
                        return Err(GeometryError::Dimension(format!(
                            "second jet not symmetric in (i, j) at component {a}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            base,
            position,
            z,
            zz,
            normal_hint: None,
        })
    }

    pub fn with_normal_hint(mut self, hint: DVector<f64>) -> Self {
        self.normal_hint = Some(hint);
        self
    }

    pub fn n(&self) -> usize {
        self.z.ncols()
    }

    pub fn p(&self) -> usize {
        self.z.nrows() - self.z.ncols()
    }
}

/// An immersion that can be evaluated on a neighbourhood of parameters.
pub trait Immersion: Send + Sync {
    fn source_dim(&self) -> usize;

    fn target_dim(&self) -> usize;

    fn jet(&self, x: &[f64]) -> Result<ImmersionJet2>;

    /// Analytic `d w / d x^j` for hypersurfaces, when the immersion knows it.
    fn analytic_w_gradient(&self, _nav: &NavigationData, _x: &[f64]) -> Option<DVector<f64>> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct InducedGeometry {
    pub n: usize,
    pub p: usize,
    pub metric: MetricJet,
    pub wind: WindJet,
    pub z: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub h_inv: DMatrix<f64>,
    /// `n x m`, `A^{ia}`
    pub a_up: DMatrix<f64>,
    /// `n x m`, `A^i_a`
    pub a_low: DMatrix<f64>,
    /// `B^{ab}`
    pub b_up: DMatrix<f64>,
    /// `[(a, b)] = B^a_b`
    pub b_mixed: DMatrix<f64>,
    /// `B_ab`
    pub b_low: DMatrix<f64>,
    /// `[(a, b)] = delta^a_b - B^a_b`, the h-orthogonal projector onto the normal space.
    pub normal_proj: DMatrix<f64>,
    pub tau: Tensor3,
    /// `h^ij tau^a_ij`
    pub trace_tau: DVector<f64>,
    /// `W_i = W_a z^a_i`
    pub tangent_wind: DVector<f64>,
    /// `W^i = h^ij W_j`
    pub tangent_wind_up: DVector<f64>,
    pub tangent_wind_norm_sq: f64,
    pub frak_s: f64,
    pub normal: Option<DVector<f64>>,
    pub mean_curvature: Option<f64>,
    pub w: Option<f64>,
}

impl InducedGeometry {
    pub fn dim(&self) -> usize {
        self.n + self.p
    }

    pub fn hypersurface_normal(&self) -> Result<&DVector<f64>> {
        self.normal.as_ref().ok_or(GeometryError::NotHypersurface(self.p))
    }

    /// `df(W) = z^a_i W^i`, the tangential part of the wind as a chart vector.
    pub fn df_tangent_wind(&self) -> DVector<f64> {
        &self.z * &self.tangent_wind_up
    }
}

fn induced_metric(metric: &MetricJet, z: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let h = z.transpose() * &metric.value * z;
    let chol = h.clone().cholesky().ok_or_else(|| GeometryError::DegenerateJet {
        rank: z.rank(1e-12 * z.amax().max(1.0)),
        expected: z.ncols(),
    })?;
    Ok((h.clone(), chol.inverse()))
}

/// Unit normal of a hypersurface jet, oriented by the jet's hint when
/// present, otherwise so that `(z_1, ..., z_n, N)` is positively oriented.
fn oriented_normal(metric: &MetricJet, z: &DMatrix<f64>, proj: &DMatrix<f64>, hint: Option<&DVector<f64>>) -> DVector<f64> {
    let m = z.nrows();
    let mut best = DVector::zeros(m);
    let mut best_norm = -1.0;
    for k in 0..m {
        let v = proj.column(k).into_owned();
        let nv = metric.inner(&v, &v);
        if nv > best_norm {
            best_norm = nv;
            best = v;
        }
    }
    let mut normal = best / best_norm.sqrt();
    let flip = match hint {
        Some(hint) => metric.inner(&normal, hint) < 0.0,
        None => {
            let mut frame = DMatrix::zeros(m, m);
            frame.view_mut((0, 0), (m, m - 1)).copy_from(z);
            frame.set_column(m - 1, &normal);
            frame.determinant() < 0.0
        }
    };
    if flip {
        normal = -normal;
    }
    normal
}

/// Full induced geometry of `jet` inside the navigation data's ambient space.
pub fn induced_geometry(nav: &NavigationData, jet: &ImmersionJet2) -> Result<InducedGeometry> {
    let m = nav.dim();
    if jet.z.nrows() != m {
        return Err(GeometryError::Dimension(format!(
            "jet targets dimension {}, ambient has {}",
            jet.z.nrows(),
            m
        )));
    }
    let (n, p) = (jet.n(), jet.p());
    let metric = MetricJet::at(nav.metric.as_ref(), &jet.position)?;
    let wind = WindJet::at(&metric, nav.wind.as_ref())?;
    nav.check_domain(&jet.position, wind.norm_sq)?;
    let z = jet.z.clone();
    let (h, h_inv) = induced_metric(&metric, &z)?;

    let a_up = &h_inv * z.transpose();
    let a_low = &a_up * &metric.value;
    let b_up = &z * &a_up;
    let b_mixed = &b_up * &metric.value;
    let b_low = &metric.value * &b_mixed;
    let normal_proj = DMatrix::identity(m, m) - &b_mixed;

    let tau = project_second_jet(&metric, jet, &normal_proj);
    let mut trace_tau = DVector::zeros(m);
    for a in 0..m {
        trace_tau[a] = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| h_inv[(i, j)] * tau[(a, i, j)])
            .sum();
    }

    let tangent_wind = z.tr_mul(&wind.lower);
    let tangent_wind_up = &h_inv * &tangent_wind;
    let tangent_wind_norm_sq = tangent_wind.dot(&tangent_wind_up);
    let frak_s = 1.0 - wind.norm_sq + tangent_wind_norm_sq;

    let (normal, mean_curvature, w) = if p == 1 {
        let normal = oriented_normal(&metric, &z, &normal_proj, jet.normal_hint.as_ref());
        let nh = metric.inner(&trace_tau, &normal);
        let w = metric.inner(&normal, &wind.upper);
        (Some(normal), Some(nh / n as f64), Some(w))
    } else {
        (None, None, None)
    };

    Ok(InducedGeometry {
        n,
        p,
        metric,
        wind,
        z,
        h,
        h_inv,
        a_up,
        a_low,
        b_up,
        b_mixed,
        b_low,
        normal_proj,
        tau,
        trace_tau,
        tangent_wind,
        tangent_wind_up,
        tangent_wind_norm_sq,
        frak_s,
        normal,
        mean_curvature,
        w,
    })
}

/// `z^a_ij + Gamma^a_cd z^c_j z^d_i`.
fn covariant_second_jet(metric: &MetricJet, jet: &ImmersionJet2) -> Tensor3 {
    let (m, n) = jet.z.shape();
    let g = &metric.christoffel;
    let z = &jet.z;
    Tensor3::from_fn(m, n, n, |a, i, j| {
        let mut v = jet.zz[(a, i, j)];
        for c in 0..m {
            for d in 0..m {
                v += g[(a, c, d)] * z[(c, j)] * z[(d, i)];
            }
        }
        v
    })
}

fn project_second_jet(metric: &MetricJet, jet: &ImmersionJet2, proj: &DMatrix<f64>) -> Tensor3 {
    let (m, n) = jet.z.shape();
    let full = covariant_second_jet(metric, jet);
    Tensor3::from_fn(m, n, n, |a, i, j| (0..m).map(|e| proj[(a, e)] * full[(e, i, j)]).sum())
}

/// Second fundamental form `tau^a_ij` as the normal projection of the
/// covariant second jet.
pub fn second_fundamental_form(nav: &NavigationData, jet: &ImmersionJet2) -> Result<Tensor3> {
    let metric = MetricJet::at(nav.metric.as_ref(), &jet.position)?;
    let (_, h_inv) = induced_metric(&metric, &jet.z)?;
    let b_mixed = &jet.z * &h_inv * jet.z.transpose() * &metric.value;
    let proj = DMatrix::identity(jet.z.nrows(), jet.z.nrows()) - b_mixed;
    Ok(project_second_jet(&metric, jet, &proj))
}

/// Second fundamental form by the Gauss formula
/// `tau^a_ij = z^a_ij + Gamma~^a_cd z^c_j z^d_i - Gamma^k_ij z^a_k`, with the
/// induced Christoffel symbols `Gamma^k_ij` computed intrinsically from the
/// parameter derivatives of `h_ij`.
pub fn second_fundamental_form_intrinsic(nav: &NavigationData, jet: &ImmersionJet2) -> Result<Tensor3> {
    let metric = MetricJet::at(nav.metric.as_ref(), &jet.position)?;
    let (_, h_inv) = induced_metric(&metric, &jet.z)?;
    let (m, n) = jet.z.shape();
    let z = &jet.z;
    // d_k h_ij = d_g h_ab z^g_k z^a_i z^b_j + h_ab (z^a_ik z^b_j + z^a_i z^b_jk)
    let dh = Tensor3::from_fn(n, n, n, |k, i, j| {
        let mut v = 0.0;
        for a in 0..m {
            for b in 0..m {
                let mut dg = 0.0;
                for g in 0..m {
                    dg += metric.first[(g, a, b)] * z[(g, k)];
                }
                v += dg * z[(a, i)] * z[(b, j)]
                    + metric.value[(a, b)] * (jet.zz[(a, i, k)] * z[(b, j)] + z[(a, i)] * jet.zz[(b, j, k)]);
            }
        }
        v
    });
    let gamma = Tensor3::from_fn(n, n, n, |k, i, j| {
        0.5 * (0..n)
            .map(|l| h_inv[(k, l)] * (dh[(i, l, j)] + dh[(j, l, i)] - dh[(l, i, j)]))
            .sum::<f64>()
    });
    let full = covariant_second_jet(&metric, jet);
    Ok(Tensor3::from_fn(m, n, n, |a, i, j| {
        full[(a, i, j)] - (0..n).map(|k| gamma[(k, i, j)] * z[(a, k)]).sum::<f64>()
    }))
}

/// `w = <N, W>` at a parameter point, with the normal oriented exactly as in
/// [`induced_geometry`].
pub fn normal_wind_component(nav: &NavigationData, jet: &ImmersionJet2) -> Result<f64> {
    if jet.p() != 1 {
        return Err(GeometryError::NotHypersurface(jet.p()));
    }
    let x = &jet.position;
    let value = nav.metric.value(x);
    let inverse = crate::geometry::invert_spd(&value, x)?;
    // Only the metric value enters the normal.
    let metric = MetricJet {
        point: x.clone(),
        value,
        inverse,
        first: Tensor3::zeros(0, 0, 0),
        christoffel: Tensor3::zeros(0, 0, 0),
    };
    let (_, h_inv) = induced_metric(&metric, &jet.z)?;
    let m = jet.z.nrows();
    let proj = DMatrix::identity(m, m) - &jet.z * h_inv * jet.z.transpose() * &metric.value;
    let normal = oriented_normal(&metric, &jet.z, &proj, jet.normal_hint.as_ref());
    Ok(metric.inner(&normal, &nav.wind.value(x)))
}

/// `d w / d x^j` by central differences along parameter lines.
pub fn w_gradient_fd(nav: &NavigationData, f: &dyn Immersion, x: &[f64], kernel: &DiffKernel) -> Result<DVector<f64>> {
    let mut grad = DVector::zeros(x.len());
    for j in 0..x.len() {
        let mut err = None;
        let d = kernel.partial_vec(
            |y| match f.jet(y).and_then(|jet| normal_wind_component(nav, &jet)) {
                Ok(w) => vec![w],
                Err(e) => {
                    err.get_or_insert(e);
                    vec![f64::NAN]
                }
            },
            x,
            j,
        );
        if let Some(e) = err {
            return Err(e);
        }
        grad[j] = d[0];
    }
    Ok(grad)
}

/// Default kernel for `d w`: step 1e-5 with Richardson extrapolation.
pub fn w_gradient_kernel() -> DiffKernel {
    DiffKernel::new(1e-5, true)
}

/// `<df(grad w), W>_h = h^ij (d_j w) <z_i, W>` for a hypersurface.
pub fn pairing_df_grad_w(nav: &NavigationData, f: &dyn Immersion, x: &[f64]) -> Result<f64> {
    let jet = f.jet(x)?;
    let geom = induced_geometry(nav, &jet)?;
    pairing_with_geometry(nav, f, x, &geom)
}

pub(crate) fn pairing_with_geometry(
    nav: &NavigationData,
    f: &dyn Immersion,
    x: &[f64],
    geom: &InducedGeometry,
) -> Result<f64> {
    if geom.p != 1 {
        return Err(GeometryError::NotHypersurface(geom.p));
    }
    let dw = match f.analytic_w_gradient(nav, x) {
        Some(dw) => dw,
        None => w_gradient_fd(nav, f, x, &w_gradient_kernel())?,
    };
    Ok((&geom.h_inv * dw).dot(&geom.tangent_wind))
}

/// Residuals of the hypersurface identities satisfied by a Killing wind.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HypersurfaceIdentityResiduals {
    /// `B^{eb} W_b W_a|e W^a = <nabla_{df(W)} W, W>`
    pub wind_along_tangent: f64,
    /// `W_t (delta^t_g - B^t_g) X^g = w <N, X>`
    pub normal_part_of_wind: f64,
    /// `B^{eb} W_b W_a|e (delta^a_g - B^a_g) X^g = <nabla_{df(W)} W, N><N, X>`
    pub normal_part_of_derivative: f64,
    /// `h^ij tau^a_ij W_a = n H w`
    pub trace_tau_wind: f64,
    /// `W_d W_t A^{id} A^{jt} tau^a_ij X_a = -[<df(grad w), W> + N(|W|^2)/2] <N, X>`
    pub tau_tangent_wind_x: f64,
    /// same with `X = W`
    pub tau_tangent_wind_w: f64,
    /// both halves of `<nabla_{df(W)} W, N> = -N(|W|^2)/2`,
    /// `<nabla_{df(W)} W, W> = -N(|W|^2) w / 2`
    pub derivative_along_tangent: f64,
    /// `<Y, N> N^g = Y_a (h^{ag} - B^{ag})`
    pub gauss_frame: f64,
    /// `df(W) = W - w N`
    pub tangent_decomposition: f64,
}

impl HypersurfaceIdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.wind_along_tangent,
            self.normal_part_of_wind,
            self.normal_part_of_derivative,
            self.trace_tau_wind,
            self.tau_tangent_wind_x,
            self.tau_tangent_wind_w,
            self.derivative_along_tangent,
            self.gauss_frame,
            self.tangent_decomposition,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluate every hypersurface identity at `x` against the ambient test
/// vectors `x_tilde` and `y_tilde`. Each residual is `|lhs - rhs|`.
pub fn hypersurface_identities(
    nav: &NavigationData,
    f: &dyn Immersion,
    x: &[f64],
    x_tilde: &DVector<f64>,
    y_tilde: &DVector<f64>,
) -> Result<HypersurfaceIdentityResiduals> {
    let jet = f.jet(x)?;
    let geom = induced_geometry(nav, &jet)?;
    let normal = geom.hypersurface_normal()?.clone();
    let m = geom.dim();
    let n = geom.n as f64;
    let mj = &geom.metric;
    let wind = &geom.wind;
    let w = geom.w.unwrap_or_default();
    let h_mean = geom.mean_curvature.unwrap_or_default();

    // Index-form quantities.
    let bw = &geom.b_up * &wind.lower; // B^{eb} W_b
    let cov_bw = &wind.cov_lower * &bw; // W_a|e B^{eb} W_b, free index a
    let lhs1 = cov_bw.dot(&wind.upper);
    let pw = geom.normal_proj.tr_mul(&wind.lower); // W_t P^t_g
    let lhs2 = pw.dot(x_tilde);
    let lhs3 = (geom.normal_proj.tr_mul(&cov_bw)).dot(x_tilde);
    let lhs4 = geom.trace_tau.dot(&wind.lower);
    let wt = &geom.tangent_wind_up; // W^i = A^{id} W_d
    let mut tau_ww = DVector::zeros(m);
    for a in 0..m {
        for i in 0..geom.n {
            for j in 0..geom.n {
                tau_ww[a] += wt[i] * wt[j] * geom.tau[(a, i, j)];
            }
        }
    }
    let lhs5 = mj.inner(&tau_ww, x_tilde);
    let lhs6 = tau_ww.dot(&wind.lower);

    // Geometric-form quantities.
    let df_w = geom.df_tangent_wind();
    let nabla = &wind.cov_upper * &df_w; // nabla_{df(W)} W
    let n_norm_sq = wind.grad_norm_sq().dot(&normal);
    let pairing = pairing_with_geometry(nav, f, x, &geom)?;
    let nx = mj.inner(&normal, x_tilde);

    let rhs1 = mj.inner(&nabla, &wind.upper);
    let rhs2 = w * nx;
    let rhs3 = mj.inner(&nabla, &normal) * nx;
    let rhs4 = n * h_mean * w;
    let rhs5 = -(pairing + 0.5 * n_norm_sq) * nx;
    let rhs6 = -(pairing + 0.5 * n_norm_sq) * w;
    let ccc3a = (mj.inner(&nabla, &normal) + 0.5 * n_norm_sq).abs();
    let ccc3b = (mj.inner(&nabla, &wind.upper) + 0.5 * n_norm_sq * w).abs();

    let y_low = mj.lower(y_tilde);
    let gauss_lhs = mj.inner(y_tilde, &normal) * &normal;
    let gauss_rhs = (&mj.inverse - &geom.b_up) * &y_low;
    let decomposition = &df_w - (&wind.upper - w * &normal);

    Ok(HypersurfaceIdentityResiduals {
        wind_along_tangent: (lhs1 - rhs1).abs(),
        normal_part_of_wind: (lhs2 - rhs2).abs(),
        normal_part_of_derivative: (lhs3 - rhs3).abs(),
        trace_tau_wind: (lhs4 - rhs4).abs(),
        tau_tangent_wind_x: (lhs5 - rhs5).abs(),
        tau_tangent_wind_w: (lhs6 - rhs6).abs(),
        derivative_along_tangent: ccc3a.max(ccc3b),
        gauss_frame: (gauss_lhs - gauss_rhs).amax(),
        tangent_decomposition: decomposition.amax(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AffineField, Euclidean};
    use crate::measure::MeasureSpec;
    use std::sync::Arc;

    fn flat_nav(dim: usize, n: usize) -> NavigationData {
        NavigationData::new(
            Arc::new(Euclidean { dim }),
            Arc::new(AffineField::zero(dim)),
            MeasureSpec::bh(n),
        )
        .unwrap()
    }

    /// Unit sphere with (theta, phi) parameters; theta-phi order gives the
    /// outward normal as the positively oriented one.
    fn sphere_jet(theta: f64, phi: f64) -> ImmersionJet2 {
        let (st, ct, sp, cp) = (theta.sin(), theta.cos(), phi.sin(), phi.cos());
        let pos = vec![st * cp, st * sp, ct];
        let z = DMatrix::from_row_slice(3, 2, &[ct * cp, -st * sp, ct * sp, st * cp, -st, 0.0]);
        let mut zz = Tensor3::zeros(3, 2, 2);
        let tt = [-st * cp, -st * sp, -ct];
        let tp = [-ct * sp, ct * cp, 0.0];
        let pp = [-st * cp, -st * sp, 0.0];
        for a in 0..3 {
            zz[(a, 0, 0)] = tt[a];
            zz[(a, 0, 1)] = tp[a];
            zz[(a, 1, 0)] = tp[a];
            zz[(a, 1, 1)] = pp[a];
        }
        ImmersionJet2::new(vec![theta, phi], pos, z, zz).unwrap()
    }

    #[test]
    fn flat_plane_has_no_curvature() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.3, -0.2]);
        let jet = ImmersionJet2::new(vec![0.1, 0.2], vec![0.1, 0.2, 0.0], z, Tensor3::zeros(3, 2, 2)).unwrap();
        let g = induced_geometry(&flat_nav(3, 2), &jet).unwrap();
        assert!(g.tau.max_abs() < 1e-15);
        assert!(g.mean_curvature.unwrap().abs() < 1e-15);
    }

    #[test]
    fn unit_sphere_outward_mean_curvature() {
        let jet = sphere_jet(0.8, 0.3);
        let g = induced_geometry(&flat_nav(3, 2), &jet).unwrap();
        let normal = g.normal.clone().unwrap();
        let outward = DVector::from_vec(jet.position.clone());
        assert!((normal - outward).amax() < 1e-12);
        assert!((g.mean_curvature.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_is_idempotent_and_tau_is_normal() {
        let jet = sphere_jet(1.1, -0.4);
        let g = induced_geometry(&flat_nav(3, 2), &jet).unwrap();
        let bb = &g.b_mixed * &g.b_mixed;
        assert!((bb - &g.b_mixed).amax() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let t = DVector::from_fn(3, |a, _| g.tau[(a, i, j)]);
                for k in 0..2 {
                    assert!(g.metric.inner(&t, &g.z.column(k).into_owned()).abs() < 1e-12);
                }
            }
        }
        assert!((&g.h * &g.h_inv - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn rank_deficient_jet_rejected() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let jet = ImmersionJet2::new(vec![0.0, 0.0], vec![0.0; 3], z, Tensor3::zeros(3, 2, 2)).unwrap();
        assert_eq!(
            induced_geometry(&flat_nav(3, 2), &jet).unwrap_err(),
            GeometryError::DegenerateJet { rank: 1, expected: 2 }
        );
    }

    #[test]
    fn asymmetric_second_jet_rejected() {
        let mut zz = Tensor3::zeros(3, 2, 2);
        zz[(0, 0, 1)] = 1.0;
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(ImmersionJet2::new(vec![0.0, 0.0], vec![0.0; 3], z, zz).is_err());
    }

    #[test]
    fn curve_in_plane_has_no_normal_in_codim_two() {
        let z = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let jet = ImmersionJet2::new(vec![0.0], vec![0.0; 3], z, Tensor3::zeros(3, 1, 1)).unwrap();
        let g = induced_geometry(&flat_nav(3, 1), &jet).unwrap();
        assert!(g.normal.is_none());
        assert_eq!(g.hypersurface_normal().unwrap_err(), GeometryError::NotHypersurface(2));
    }

    #[test]
    fn cylinder_principal_curvatures() {
        // (u, v) -> (r cos u, r sin u, v), radius 2
        let (r, u) = (2.0f64, 0.6f64);
        let z = DMatrix::from_row_slice(3, 2, &[-r * u.sin(), 0.0, r * u.cos(), 0.0, 0.0, 1.0]);
        let mut zz = Tensor3::zeros(3, 2, 2);
        zz[(0, 0, 0)] = -r * u.cos();
        zz[(1, 0, 0)] = -r * u.sin();
        let jet = ImmersionJet2::new(vec![u, 0.0], vec![r * u.cos(), r * u.sin(), 0.0], z, zz)
            .unwrap()
            .with_normal_hint(DVector::from_vec(vec![u.cos(), u.sin(), 0.0]));
        let g = induced_geometry(&flat_nav(3, 2), &jet).unwrap();
        let normal = g.normal.clone().unwrap();
        // shape operator in the orthonormal frame e_u / r, e_v
        let second = DMatrix::from_fn(2, 2, |i, j| {
            let t = DVector::from_fn(3, |a, _| g.tau[(a, i, j)]);
            g.metric.inner(&t, &normal)
        });
        let shape = &g.h_inv * second;
        let mut eig: Vec<f64> = shape.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[0] + 0.5).abs() < 1e-12 && eig[1].abs() < 1e-12, "{eig:?}");
    }
}
