//! Hyperboloid model of H^3 inside Minkowski space L^4, its global chart
//! `u = (p2, p3, p4)`, and the mixed boost/rotation Killing field.

use nalgebra::{DMatrix, DVector};

use crate::geometry::{DerivationMode, MetricField, VectorField};
use crate::tensor::{Tensor3, Tensor4};

/// Point of L^4 with signature (-, +, +, +).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzPoint(pub [f64; 4]);

pub fn lorentz_inner(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

impl LorentzPoint {
    /// Point of the upper sheet over chart coordinates `u`.
    pub fn from_chart(u: &[f64]) -> Self {
        let rho = 1.0 + u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        Self([rho.sqrt(), u[0], u[1], u[2]])
    }

    pub fn chart(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn minkowski_norm_sq(&self) -> f64 {
        lorentz_inner(&self.0, &self.0)
    }

    /// `|<p, p>_L + 1|`
    pub fn hyperboloid_residual(&self) -> f64 {
        (self.minkowski_norm_sq() + 1.0).abs()
    }

    /// `q = (p2, p3, p4) / (1 + p1)`, inside the unit ball.
    pub fn poincare(&self) -> [f64; 3] {
        let d = 1.0 + self.0[0];
        [self.0[1] / d, self.0[2] / d, self.0[3] / d]
    }
}

/// `W = (e1 p2, e1 p1, -e2 p4, e2 p3)` on H^3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedKillingField {
    pub eps1: f64,
    pub eps2: f64,
}

impl MixedKillingField {
    pub fn new(eps1: f64, eps2: f64) -> Self {
        Self { eps1, eps2 }
    }

    pub fn is_trivial(&self) -> bool {
        self.eps1 == 0.0 && self.eps2 == 0.0
    }

    pub fn at(&self, p: &LorentzPoint) -> [f64; 4] {
        let q = &p.0;
        [self.eps1 * q[1], self.eps1 * q[0], -self.eps2 * q[3], self.eps2 * q[2]]
    }

    /// `|W|^2 = -e1^2 p2^2 + e1^2 p1^2 + e2^2 (p3^2 + p4^2)`.
    pub fn norm_sq(&self, p: &LorentzPoint) -> f64 {
        let q = &p.0;
        let (a, b) = (self.eps1 * self.eps1, self.eps2 * self.eps2);
        -a * q[1] * q[1] + a * q[0] * q[0] + b * (q[3] * q[3] + q[2] * q[2])
    }

    /// `eps_k` for the rotational surface type `k` (1 spherical, 2 hyperbolic).
    pub fn eps_for(&self, spherical: bool) -> f64 {
        if spherical {
            self.eps1
        } else {
            self.eps2
        }
    }
}

/// Strict membership in the Randers domain of the mixed field.
pub fn in_omega(p: &LorentzPoint, field: &MixedKillingField) -> bool {
    field.norm_sq(p) < 1.0
}

/// `h_ab(u) = delta_ab - u_a u_b / (1 + |u|^2)`, the pullback of the
/// Minkowski metric to the chart.
#[derive(Debug, Clone, Copy, Default)]
pub struct HyperboloidMetric;

fn rho_of(u: &[f64]) -> f64 {
    1.0 + u.iter().map(|v| v * v).sum::<f64>()
}

fn kron(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

impl MetricField for HyperboloidMetric {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, u: &[f64]) -> DMatrix<f64> {
        let r = rho_of(u);
        DMatrix::from_fn(3, 3, |a, b| kron(a, b) - u[a] * u[b] / r)
    }

    fn derivation_mode(&self) -> DerivationMode {
        DerivationMode::Analytic
    }

    fn first_deriv(&self, u: &[f64]) -> Tensor3 {
        let r = rho_of(u);
        Tensor3::from_fn(3, 3, 3, |c, a, b| {
            -(kron(a, c) * u[b] + u[a] * kron(b, c)) / r + 2.0 * u[a] * u[b] * u[c] / (r * r)
        })
    }

    fn second_deriv(&self, u: &[f64]) -> Tensor4 {
        let r = rho_of(u);
        let mut t = Tensor4::zeros(3, 3, 3, 3);
        for d in 0..3 {
            for c in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        let v = -(kron(a, c) * kron(b, d) + kron(a, d) * kron(b, c)) / r
                            + 2.0 * u[d] * (kron(a, c) * u[b] + u[a] * kron(b, c)) / (r * r)
                            + 2.0 * (kron(a, d) * u[b] * u[c] + u[a] * kron(b, d) * u[c] + u[a] * u[b] * kron(c, d))
                                / (r * r)
                            - 8.0 * u[a] * u[b] * u[c] * u[d] / (r * r * r);
                        t[(d, c, a, b)] = v;
                    }
                }
            }
        }
        t
    }
}

/// The mixed field in chart components `(e1 sqrt(rho), -e2 u3, e2 u2)`.
#[derive(Debug, Clone, Copy)]
pub struct MixedFieldChart(pub MixedKillingField);

impl VectorField for MixedFieldChart {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, u: &[f64]) -> DVector<f64> {
        let MixedKillingField { eps1, eps2 } = self.0;
        DVector::from_vec(vec![eps1 * rho_of(u).sqrt(), -eps2 * u[2], eps2 * u[1]])
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let MixedKillingField { eps1, eps2 } = self.0;
        let sr = rho_of(u).sqrt();
        DMatrix::from_row_slice(
            3,
            3,
            &[eps1 * u[0] / sr, eps1 * u[1] / sr, eps1 * u[2] / sr, 0.0, 0.0, -eps2, 0.0, eps2, 0.0],
        )
    }
}

/// Chart data for `u`: the hyperboloid point, the chart metric and the mixed field.
pub fn hyperboloid_chart(u: &[f64], field: MixedKillingField) -> (LorentzPoint, HyperboloidMetric, MixedFieldChart) {
    (LorentzPoint::from_chart(u), HyperboloidMetric, MixedFieldChart(field))
}

/// Chart components of an L^4 vector tangent to H^3.
pub fn chart_vector(v: &[f64; 4]) -> DVector<f64> {
    DVector::from_vec(vec![v[1], v[2], v[3]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fd_metric_first_deriv, fd_metric_second_from_first, is_killing, sectional_curvature};
    use crate::diff::DiffKernel;

    #[test]
    fn omega_examples() {
        let o = LorentzPoint([1.0, 0.0, 0.0, 0.0]);
        assert!(!in_omega(&o, &MixedKillingField::new(1.0, 1.0)));
        assert!(in_omega(&o, &MixedKillingField::new(0.5, 0.5)));
        let p = LorentzPoint([2f64.sqrt(), 1.0, 0.0, 0.0]);
        assert!(!in_omega(&p, &MixedKillingField::new(1.0, 0.0)));
    }

    #[test]
    fn chart_at_origin_is_identity() {
        let m = HyperboloidMetric.value(&[0.0, 0.0, 0.0]);
        assert_eq!(m, DMatrix::identity(3, 3));
    }

    #[test]
    fn chart_determinant_closed_form() {
        let u = [0.3, -0.7, 1.1];
        let det = HyperboloidMetric.value(&u).determinant();
        assert!((det - 1.0 / rho_of(&u)).abs() < 1e-14);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let u = [0.3, 0.0, 0.0];
        let fd = fd_metric_first_deriv(|x| HyperboloidMetric.value(x), 3, &u, &DiffKernel::new(1e-5, true));
        assert!(HyperboloidMetric.first_deriv(&u).max_abs_diff(&fd) < 1e-9);
        let u = [0.4, -0.2, 0.9];
        let fd2 = fd_metric_second_from_first(|x| HyperboloidMetric.first_deriv(x), 3, &u);
        assert!(HyperboloidMetric.second_deriv(&u).max_abs_diff(&fd2) < 1e-7);
    }

    #[test]
    fn curvature_minus_one() {
        let u = [0.2, -0.5, 0.3];
        let a = DVector::from_vec(vec![1.0, 0.2, 0.0]);
        let b = DVector::from_vec(vec![0.0, 1.0, -0.4]);
        let k = sectional_curvature(&HyperboloidMetric, &u, &a, &b).unwrap();
        assert!((k + 1.0).abs() < 1e-6, "{k}");
    }

    #[test]
    fn mixed_field_is_killing_and_matches_ambient() {
        let field = MixedKillingField::new(0.5, 0.3);
        let u = [0.1, 0.4, -0.6];
        let check = is_killing(&HyperboloidMetric, &MixedFieldChart(field), &u, 1e-10).unwrap();
        assert!(check.is_killing, "{}", check.residual);
        let p = LorentzPoint::from_chart(&u);
        let ambient = field.at(&p);
        // tangent to the hyperboloid
        assert!(lorentz_inner(&ambient, &p.0).abs() < 1e-14);
        let chart = MixedFieldChart(field).value(&u);
        assert!((chart - chart_vector(&ambient)).amax() < 1e-15);
        let g = HyperboloidMetric.value(&u);
        let w = chart_vector(&ambient);
        assert!((w.dot(&(&g * &w)) - field.norm_sq(&p)).abs() < 1e-14);
    }

    #[test]
    fn poincare_inside_ball() {
        let p = LorentzPoint::from_chart(&[3.0, -2.0, 5.0]);
        let q = p.poincare();
        assert!(q.iter().map(|v| v * v).sum::<f64>() < 1.0);
        assert!(p.hyperboloid_residual() < 1e-12);
    }
}
