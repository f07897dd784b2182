//! Chart-based Riemannian metrics and vector-field calculus.
//!
//! Index conventions follow the usual ambient ones: Greek indices run over
//! the `dim` chart coordinates. Derivative arrays put the differentiation
//! index first, so `first_deriv[(g, a, b)] = d_g h_ab` and
//! `christoffel[(a, b, c)] = Gamma^a_bc`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::diff::DiffKernel;
use crate::error::{GeometryError, Result};
use crate::tensor::{Tensor3, Tensor4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivationMode {
    Analytic,
    CentralDifference(DiffKernel),
}

impl Default for DerivationMode {
    fn default() -> Self {
        DerivationMode::CentralDifference(DiffKernel::default())
    }
}

/// A Riemannian metric `h_ab(x)` on a coordinate chart.
///
/// Implementors must provide `value`; derivatives fall back to central
/// differences unless overridden (and `derivation_mode` then reports
/// [`DerivationMode::Analytic`]).
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> DMatrix<f64>;

    fn derivation_mode(&self) -> DerivationMode {
        DerivationMode::default()
    }

    fn first_deriv(&self, x: &[f64]) -> Tensor3 {
        let kernel = match self.derivation_mode() {
            DerivationMode::CentralDifference(k) => k,
            DerivationMode::Analytic => DiffKernel::default(),
        };
        fd_metric_first_deriv(|y| self.value(y), self.dim(), x, &kernel)
    }

    fn second_deriv(&self, x: &[f64]) -> Tensor4 {
        match self.derivation_mode() {
            DerivationMode::Analytic => fd_metric_second_from_first(|y| self.first_deriv(y), self.dim(), x),
            DerivationMode::CentralDifference(_) => fd_metric_second_deriv(|y| self.value(y), self.dim(), x),
        }
    }
}

/// `d_g h_ab` by central differences of the metric values.
pub fn fd_metric_first_deriv(
    value: impl Fn(&[f64]) -> DMatrix<f64>,
    dim: usize,
    x: &[f64],
    kernel: &DiffKernel,
) -> Tensor3 {
    let mut out = Tensor3::zeros(dim, dim, dim);
    for g in 0..dim {
        let d = kernel.partial_vec(|y| value(y).as_slice().to_vec(), x, g);
        let m = DMatrix::from_column_slice(dim, dim, &d);
        for a in 0..dim {
            for b in 0..dim {
                out[(g, a, b)] = m[(a, b)];
            }
        }
    }
    out
}

/// `d_d d_g h_ab` from second differences of the values (Richardson on).
pub fn fd_metric_second_deriv(value: impl Fn(&[f64]) -> DMatrix<f64>, dim: usize, x: &[f64]) -> Tensor4 {
    let kernel = DiffKernel::new(1e-3, true);
    let mut out = Tensor4::zeros(dim, dim, dim, dim);
    for a in 0..dim {
        for b in a..dim {
            for d in 0..dim {
                for g in d..dim {
                    let v = kernel.second_partial(|y| value(y)[(a, b)], x, d, g);
                    out[(d, g, a, b)] = v;
                    out[(g, d, a, b)] = v;
                    out[(d, g, b, a)] = v;
                    out[(g, d, b, a)] = v;
                }
            }
        }
    }
    out
}

/// `d_d d_g h_ab` by differentiating an analytic first derivative.
pub fn fd_metric_second_from_first(first: impl Fn(&[f64]) -> Tensor3, dim: usize, x: &[f64]) -> Tensor4 {
    let kernel = DiffKernel::new(1e-4, true);
    let mut out = Tensor4::zeros(dim, dim, dim, dim);
    for d in 0..dim {
        let v = kernel.partial_vec(|y| first(y).as_slice().to_vec(), x, d);
        for g in 0..dim {
            for a in 0..dim {
                for b in 0..dim {
                    out[(d, g, a, b)] = v[(g * dim + a) * dim + b];
                }
            }
        }
    }
    out
}

/// A tangent vector field `W^a(x)` on a chart.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> DVector<f64>;

    /// `J[(a, b)] = d_b W^a`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        fd_jacobian(|y| self.value(y), self.dim(), x, &DiffKernel::default())
    }
}

pub fn fd_jacobian(value: impl Fn(&[f64]) -> DVector<f64>, dim: usize, x: &[f64], kernel: &DiffKernel) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let col = kernel.partial_vec(|y| value(y).as_slice().to_vec(), x, b);
        for a in 0..dim {
            j[(a, b)] = col[a];
        }
    }
    j
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn invert_spd(m: &DMatrix<f64>, point: &[f64]) -> Result<DMatrix<f64>> {
    let degenerate = || GeometryError::DegenerateMetric {
        point: point.to_vec(),
        min_eigenvalue: SymmetricEigen::new(m.clone()).eigenvalues.min(),
    };
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::DegenerateMetric {
            point: point.to_vec(),
            min_eigenvalue: f64::NAN,
        });
    }
    let chol = m.clone().cholesky().ok_or_else(degenerate)?;
    Ok(chol.inverse())
}

/// Metric value, inverse, first derivatives and Christoffel symbols at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub value: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub first: Tensor3,
    pub christoffel: Tensor3,
}

impl MetricJet {
    pub fn at(metric: &dyn MetricField, x: &[f64]) -> Result<Self> {
        check_dim(metric.dim(), x)?;
        let value = metric.value(x);
        let inverse = invert_spd(&value, x)?;
        let first = metric.first_deriv(x);
        let christoffel = christoffel_from(&inverse, &first);
        Ok(Self {
            point: x.to_vec(),
            value,
            inverse,
            first,
            christoffel,
        })
    }

    pub fn dim(&self) -> usize {
        self.value.nrows()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.value * v))
    }

    pub fn lower(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.value * v
    }
}

fn check_dim(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(GeometryError::Dimension(format!(
            "point has {} coordinates, chart has {}",
            x.len(),
            dim
        )));
    }
    Ok(())
}

fn christoffel_from(inverse: &DMatrix<f64>, first: &Tensor3) -> Tensor3 {
    let m = inverse.nrows();
    // Gamma^a_bc = 1/2 h^ad (d_b h_dc + d_c h_db - d_d h_bc)
    let mut lowered = Tensor3::zeros(m, m, m);
    for d in 0..m {
        for b in 0..m {
            for c in b..m {
                let v = 0.5 * (first[(b, d, c)] + first[(c, d, b)] - first[(d, b, c)]);
                lowered[(d, b, c)] = v;
                lowered[(d, c, b)] = v;
            }
        }
    }
    let mut gamma = Tensor3::zeros(m, m, m);
    for a in 0..m {
        for b in 0..m {
            for c in b..m {
                let v: f64 = (0..m).map(|d| inverse[(a, d)] * lowered[(d, b, c)]).sum();
                gamma[(a, b, c)] = v;
                gamma[(a, c, b)] = v;
            }
        }
    }
    gamma
}

/// Christoffel symbols `Gamma^a_bc` of the Levi-Civita connection.
pub fn christoffel(metric: &dyn MetricField, x: &[f64]) -> Result<Tensor3> {
    Ok(MetricJet::at(metric, x)?.christoffel)
}

/// Wind data at a point: `W^a`, `W_a`, `W^b_|e`, `W_a|e` and `|W|^2`.
#[derive(Debug, Clone)]
pub struct WindJet {
    pub upper: DVector<f64>,
    pub lower: DVector<f64>,
    /// `[(b, e)] = W^b_|e`
    pub cov_upper: DMatrix<f64>,
    /// `[(a, e)] = W_a|e`
    pub cov_lower: DMatrix<f64>,
    pub norm_sq: f64,
}

impl WindJet {
    pub fn at(jet: &MetricJet, wind: &dyn VectorField) -> Result<Self> {
        check_dim(wind.dim(), &jet.point)?;
        let x = &jet.point;
        let m = jet.dim();
        let upper = wind.value(x);
        let jac = wind.jacobian(x);
        let mut cov_upper = jac;
        for b in 0..m {
            for e in 0..m {
                cov_upper[(b, e)] += (0..m).map(|g| jet.christoffel[(b, e, g)] * upper[g]).sum::<f64>();
            }
        }
        let cov_lower = &jet.value * &cov_upper;
        let lower = jet.lower(&upper);
        let norm_sq = upper.dot(&lower);
        Ok(Self {
            upper,
            lower,
            cov_upper,
            cov_lower,
            norm_sq,
        })
    }

    /// `d_g |W|^2 = 2 h^ab W_a|g W_b = 2 W^a W_a|g`.
    pub fn grad_norm_sq(&self) -> DVector<f64> {
        2.0 * self.cov_lower.tr_mul(&self.upper)
    }

    /// max over (a, b) of |W_a|b + W_b|a|.
    pub fn killing_residual(&self) -> f64 {
        let s = &self.cov_lower + self.cov_lower.transpose();
        s.amax()
    }
}

/// `(W^b_|e, W_a|e)` as a pair of matrices indexed `[(b, e)]` and `[(a, e)]`.
pub fn covariant_deriv_w(
    metric: &dyn MetricField,
    wind: &dyn VectorField,
    x: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let jet = MetricJet::at(metric, x)?;
    let w = WindJet::at(&jet, wind)?;
    Ok((w.cov_upper, w.cov_lower))
}

/// The covector `d_g |W|^2_h`.
pub fn grad_norm_sq_w(metric: &dyn MetricField, wind: &dyn VectorField, x: &[f64]) -> Result<DVector<f64>> {
    let jet = MetricJet::at(metric, x)?;
    Ok(WindJet::at(&jet, wind)?.grad_norm_sq())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillingCheck {
    pub is_killing: bool,
    pub residual: f64,
}

pub fn is_killing(metric: &dyn MetricField, wind: &dyn VectorField, x: &[f64], tol: f64) -> Result<KillingCheck> {
    let jet = MetricJet::at(metric, x)?;
    let residual = WindJet::at(&jet, wind)?.killing_residual();
    Ok(KillingCheck {
        is_killing: residual <= tol,
        residual,
    })
}

/// Sectional curvature of the plane spanned by `u` and `v`.
pub fn sectional_curvature(metric: &dyn MetricField, x: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let jet = MetricJet::at(metric, x)?;
    let m = jet.dim();
    let uu = jet.inner(u, u);
    let vv = jet.inner(v, v);
    let uv = jet.inner(u, v);
    let gram = uu * vv - uv * uv;
    if uu == 0.0 || vv == 0.0 || gram / (uu * vv) < 1e-12 {
        return Err(GeometryError::DegeneratePlane(gram));
    }
    let second = metric.second_deriv(x);
    let dgamma = christoffel_derivatives(&jet, &second);
    let gamma = &jet.christoffel;

    // R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_cl Gamma^l_db - Gamma^a_dl Gamma^l_cb
    // K = <R(u, v) v, u> / gram with R(u, v) v = R^a_bcd v^b u^c v^d.
    let mut rvv = DVector::zeros(m);
    for a in 0..m {
        let mut acc = 0.0;
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let coef = v[b] * u[c] * v[d];
                    if coef == 0.0 {
                        continue;
                    }
                    let mut r = dgamma[(c, a, d, b)] - dgamma[(d, a, c, b)];
                    for l in 0..m {
                        r += gamma[(a, c, l)] * gamma[(l, d, b)] - gamma[(a, d, l)] * gamma[(l, c, b)];
                    }
                    acc += r * coef;
                }
            }
        }
        rvv[a] = acc;
    }
    Ok(jet.inner(&rvv, u) / gram)
}

/// `[(m, a, b, c)] = d_m Gamma^a_bc`.
fn christoffel_derivatives(jet: &MetricJet, second: &Tensor4) -> Tensor4 {
    let m = jet.dim();
    let hi = &jet.inverse;
    let first = &jet.first;
    let mut out = Tensor4::zeros(m, m, m, m);
    for mu in 0..m {
        // d_mu h^ad = -h^ae d_mu h_ef h^fd
        let dh = DMatrix::from_fn(m, m, |e, f| first[(mu, e, f)]);
        let dhi = -(hi * dh * hi);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let mut acc = 0.0;
                    for d in 0..m {
                        let s = first[(b, d, c)] + first[(c, d, b)] - first[(d, b, c)];
                        let ds = second[(mu, b, d, c)] + second[(mu, c, d, b)] - second[(mu, d, b, c)];
                        acc += dhi[(a, d)] * s + hi[(a, d)] * ds;
                    }
                    out[(mu, a, b, c)] = 0.5 * acc;
                }
            }
        }
    }
    out
}

/// Flat metric `delta_ab` on R^dim.
#[derive(Debug, Clone, Copy)]
pub struct Euclidean {
    pub dim: usize,
}

impl MetricField for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }
    fn derivation_mode(&self) -> DerivationMode {
        DerivationMode::Analytic
    }
    fn first_deriv(&self, _x: &[f64]) -> Tensor3 {
        Tensor3::zeros(self.dim, self.dim, self.dim)
    }
    fn second_deriv(&self, _x: &[f64]) -> Tensor4 {
        Tensor4::zeros(self.dim, self.dim, self.dim, self.dim)
    }
}

type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// Metric given by a closure; derivatives by central differences.
#[derive(Clone)]
pub struct FnMetric {
    dim: usize,
    value: MatrixFn,
    kernel: DiffKernel,
}

impl FnMetric {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            kernel: DiffKernel::default(),
        }
    }

    pub fn with_kernel(mut self, kernel: DiffKernel) -> Self {
        self.kernel = kernel;
        self
    }
}

impl MetricField for FnMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> DMatrix<f64> {
        (self.value)(x)
    }
    fn derivation_mode(&self) -> DerivationMode {
        DerivationMode::CentralDifference(self.kernel)
    }
}

/// Vector field given by a closure; Jacobian by central differences.
#[derive(Clone)]
pub struct FnVectorField {
    dim: usize,
    value: VectorFn,
}

impl FnVectorField {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
        }
    }
}

impl VectorField for FnVectorField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> DVector<f64> {
        (self.value)(x)
    }
}

/// Affine field `W(x) = a + M x`.
#[derive(Debug, Clone)]
pub struct AffineField {
    pub offset: DVector<f64>,
    pub linear: DMatrix<f64>,
}

impl AffineField {
    pub fn zero(dim: usize) -> Self {
        Self {
            offset: DVector::zeros(dim),
            linear: DMatrix::zeros(dim, dim),
        }
    }

    pub fn constant(offset: DVector<f64>) -> Self {
        let d = offset.len();
        Self {
            offset,
            linear: DMatrix::zeros(d, d),
        }
    }
}

impl VectorField for AffineField {
    fn dim(&self) -> usize {
        self.offset.len()
    }
    fn value(&self, x: &[f64]) -> DVector<f64> {
        &self.offset + &self.linear * DVector::from_column_slice(x)
    }
    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        self.linear.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar() -> FnMetric {
        FnMetric::new(2, |x| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0] * x[0]]))
    }

    /// Round unit sphere in (theta, phi) coordinates.
    fn sphere() -> FnMetric {
        FnMetric::new(2, |x| {
            let s = x[0].sin();
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, s * s])
        })
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let g = christoffel(&Euclidean { dim: 3 }, &[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn polar_christoffel() {
        let g = christoffel(&polar(), &[2.0, 0.4]).unwrap();
        assert!((g[(0, 1, 1)] + 2.0).abs() < 1e-8);
        assert!((g[(1, 0, 1)] - 0.5).abs() < 1e-8);
        assert!((g[(1, 1, 0)] - 0.5).abs() < 1e-8);
        assert!(g[(0, 0, 0)].abs() < 1e-8 && g[(0, 0, 1)].abs() < 1e-8 && g[(1, 1, 1)].abs() < 1e-8);
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let g = christoffel(&sphere(), &[0.9, 0.2]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    assert_eq!(g[(a, b, c)], g[(a, c, b)]);
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_reports_point() {
        let err = christoffel(&polar(), &[0.0, 0.0]).unwrap_err();
        match err {
            GeometryError::DegenerateMetric { point, min_eigenvalue } => {
                assert_eq!(point, vec![0.0, 0.0]);
                assert!(min_eigenvalue.abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_field_has_zero_covariant_derivative() {
        let w = AffineField::constant(DVector::from_vec(vec![0.2, -0.1, 0.3]));
        let (up, low) = covariant_deriv_w(&Euclidean { dim: 3 }, &w, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(up.amax(), 0.0);
        assert_eq!(low.amax(), 0.0);
    }

    #[test]
    fn rotation_field_is_killing() {
        let w = AffineField {
            offset: DVector::zeros(2),
            linear: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        };
        let (_, low) = covariant_deriv_w(&Euclidean { dim: 2 }, &w, &[0.3, 0.7]).unwrap();
        assert_eq!(low, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let k = is_killing(&Euclidean { dim: 2 }, &w, &[0.3, 0.7], 1e-12).unwrap();
        assert!(k.is_killing);
        assert_eq!(k.residual, 0.0);
    }

    #[test]
    fn gradient_field_is_not_killing() {
        // grad of x^2 + 3 y^2 / 2
        let w = AffineField {
            offset: DVector::zeros(2),
            linear: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]),
        };
        let k = is_killing(&Euclidean { dim: 2 }, &w, &[0.1, 0.2], 1e-8).unwrap();
        assert!(!k.is_killing);
        assert_eq!(k.residual, 6.0);
    }

    #[test]
    fn grad_norm_sq_of_linear_field() {
        let w = AffineField {
            offset: DVector::zeros(2),
            linear: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        };
        let g = grad_norm_sq_w(&Euclidean { dim: 2 }, &w, &[0.7, -2.0]).unwrap();
        assert_eq!(g.as_slice(), &[1.4, 0.0]);
    }

    #[test]
    fn sectional_curvature_flat_and_sphere() {
        let u = DVector::from_vec(vec![1.0, 0.3]);
        let v = DVector::from_vec(vec![-0.2, 1.0]);
        let k0 = sectional_curvature(&Euclidean { dim: 2 }, &[0.1, 0.1], &u, &v).unwrap();
        assert_eq!(k0, 0.0);
        let k1 = sectional_curvature(&sphere(), &[1.1, 0.4], &u, &v).unwrap();
        assert!((k1 - 1.0).abs() < 1e-6, "{k1}");
    }

    #[test]
    fn parallel_vectors_rejected() {
        let u = DVector::from_vec(vec![1.0, 2.0]);
        let v = 3.0 * &u;
        let err = sectional_curvature(&Euclidean { dim: 2 }, &[0.0, 0.0], &u, &v).unwrap_err();
        assert!(matches!(err, GeometryError::DegeneratePlane(_)));
    }
}
