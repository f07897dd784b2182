//! Randers volume densities built from navigation data.
//!
//! Both canonical Finsler volumes of an induced Randers metric on an
//! `n`-dimensional immersed submanifold take the form
//! `F = rho(s) / chi(|W|^2) * sqrt(det h_ij)` with
//! `s = 1 - |W|^2 + |W_tangent|^2_h`:
//!
//! | measure | `rho(s)`   | `chi(r)`              |
//! |---------|------------|-----------------------|
//! | BH      | `s^(-n/2)` | `1`                   |
//! | HT      | `s^(1/2)`  | `(1 - r)^((n + 1)/2)` |

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::geometry::{MetricField, VectorField};
use crate::immersion::InducedGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    BusemannHausdorff,
    HolmesThompson,
    Custom,
}

impl MeasureKind {
    pub fn label(self) -> &'static str {
        match self {
            MeasureKind::BusemannHausdorff => "bh",
            MeasureKind::HolmesThompson => "ht",
            MeasureKind::Custom => "custom",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User supplied `(rho, chi)` pair. `chi` and `d_log_chi` take `r = |W|^2`.
#[derive(Clone)]
pub struct CustomMeasure {
    pub rho: ScalarFn,
    pub d_rho: ScalarFn,
    pub dd_rho: ScalarFn,
    pub chi: ScalarFn,
    pub d_log_chi: ScalarFn,
}

#[derive(Clone)]
pub struct MeasureSpec {
    kind: MeasureKind,
    n: usize,
    custom: Option<CustomMeasure>,
}

impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSpec")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .finish()
    }
}

pub fn bh_rho(n: usize, s: f64) -> f64 {
    s.powf(-(n as f64) / 2.0)
}

pub fn bh_d_rho(n: usize, s: f64) -> f64 {
    let a = n as f64 / 2.0;
    -a * s.powf(-a - 1.0)
}

pub fn bh_dd_rho(n: usize, s: f64) -> f64 {
    let a = n as f64 / 2.0;
    a * (a + 1.0) * s.powf(-a - 2.0)
}

pub fn ht_rho(s: f64) -> f64 {
    s.sqrt()
}

pub fn ht_d_rho(s: f64) -> f64 {
    0.5 / s.sqrt()
}

pub fn ht_dd_rho(s: f64) -> f64 {
    -0.25 * s.powf(-1.5)
}

pub fn ht_chi(n: usize, r: f64) -> f64 {
    (1.0 - r).powf((n as f64 + 1.0) / 2.0)
}

pub fn ht_d_log_chi(n: usize, r: f64) -> f64 {
    -(n as f64 + 1.0) / (2.0 * (1.0 - r))
}

impl MeasureSpec {
    pub fn bh(n: usize) -> Self {
        Self {
            kind: MeasureKind::BusemannHausdorff,
            n,
            custom: None,
        }
    }

    pub fn ht(n: usize) -> Self {
        Self {
            kind: MeasureKind::HolmesThompson,
            n,
            custom: None,
        }
    }

    pub fn custom(n: usize, custom: CustomMeasure) -> Self {
        Self {
            kind: MeasureKind::Custom,
            n,
            custom: Some(custom),
        }
    }

    pub fn of_kind(kind: MeasureKind, n: usize) -> Option<Self> {
        match kind {
            MeasureKind::BusemannHausdorff => Some(Self::bh(n)),
            MeasureKind::HolmesThompson => Some(Self::ht(n)),
            MeasureKind::Custom => None,
        }
    }

    /// The same measure on submanifolds of another dimension.
    pub fn with_dim(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn custom_fns(&self) -> &CustomMeasure {
        self.custom.as_ref().expect("custom measure without handles")
    }

    pub fn rho(&self, s: f64) -> f64 {
        match self.kind {
            MeasureKind::BusemannHausdorff => bh_rho(self.n, s),
            MeasureKind::HolmesThompson => ht_rho(s),
            MeasureKind::Custom => (self.custom_fns().rho)(s),
        }
    }

    pub fn d_rho(&self, s: f64) -> f64 {
        match self.kind {
            MeasureKind::BusemannHausdorff => bh_d_rho(self.n, s),
            MeasureKind::HolmesThompson => ht_d_rho(s),
            MeasureKind::Custom => (self.custom_fns().d_rho)(s),
        }
    }

    pub fn dd_rho(&self, s: f64) -> f64 {
        match self.kind {
            MeasureKind::BusemannHausdorff => bh_dd_rho(self.n, s),
            MeasureKind::HolmesThompson => ht_dd_rho(s),
            MeasureKind::Custom => (self.custom_fns().dd_rho)(s),
        }
    }

    /// `chi` as a function of `r = |W|^2`.
    pub fn chi(&self, r: f64) -> f64 {
        match self.kind {
            MeasureKind::BusemannHausdorff => 1.0,
            MeasureKind::HolmesThompson => ht_chi(self.n, r),
            MeasureKind::Custom => (self.custom_fns().chi)(r),
        }
    }

    /// `(log chi)'(r)`.
    pub fn d_log_chi(&self, r: f64) -> f64 {
        match self.kind {
            MeasureKind::BusemannHausdorff => 0.0,
            MeasureKind::HolmesThompson => ht_d_log_chi(self.n, r),
            MeasureKind::Custom => (self.custom_fns().d_log_chi)(r),
        }
    }
}

/// Volume ratio function `Phi(s) = 2 rho'(s) (1 - s) + rho(s)` and its
/// derivative `Phi'(s) = 2 rho''(s) (1 - s) - rho'(s)`.
pub fn phi(measure: &MeasureSpec, s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(GeometryError::InvalidFrakS(s));
    }
    let n = measure.dim() as f64;
    Ok(match measure.kind() {
        MeasureKind::BusemannHausdorff => {
            let a = n / 2.0;
            let value = s.powf(-a) * (-n / s + n + 1.0);
            let deriv = n * (a + 1.0) * s.powf(-a - 2.0) - (n + 1.0) * a * s.powf(-a - 1.0);
            (value, deriv)
        }
        MeasureKind::HolmesThompson => (s.powf(-0.5), -0.5 * s.powf(-1.5)),
        MeasureKind::Custom => {
            let value = 2.0 * measure.d_rho(s) * (1.0 - s) + measure.rho(s);
            let deriv = 2.0 * measure.dd_rho(s) * (1.0 - s) - measure.d_rho(s);
            (value, deriv)
        }
    })
}

/// Riemannian metric + wind + volume measure.
#[derive(Clone)]
pub struct NavigationData {
    pub metric: Arc<dyn MetricField>,
    pub wind: Arc<dyn VectorField>,
    pub measure: MeasureSpec,
    enforce_domain: bool,
}

impl fmt::Debug for NavigationData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NavigationData")
            .field("dim", &self.metric.dim())
            .field("measure", &self.measure)
            .field("enforce_domain", &self.enforce_domain)
            .finish()
    }
}

impl NavigationData {
    pub fn new(metric: Arc<dyn MetricField>, wind: Arc<dyn VectorField>, measure: MeasureSpec) -> Result<Self> {
        if metric.dim() != wind.dim() {
            return Err(GeometryError::Dimension(format!(
                "metric has dimension {}, wind has {}",
                metric.dim(),
                wind.dim()
            )));
        }
        Ok(Self {
            metric,
            wind,
            measure,
            enforce_domain: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn with_measure(&self, measure: MeasureSpec) -> Self {
        Self {
            measure,
            ..self.clone()
        }
    }

    /// Evaluate formulas even where `|W| >= 1`. Used to report (not assess)
    /// residuals at points outside the Randers domain.
    pub fn allow_outside_domain(&self) -> Self {
        Self {
            enforce_domain: false,
            ..self.clone()
        }
    }

    pub fn enforces_domain(&self) -> bool {
        self.enforce_domain
    }

    pub(crate) fn check_domain(&self, x: &[f64], norm_sq: f64) -> Result<()> {
        if self.enforce_domain && !(norm_sq < 1.0) {
            return Err(GeometryError::OutsideRandersDomain {
                point: x.to_vec(),
                norm_sq,
            });
        }
        Ok(())
    }
}

/// `s = 1 - |W|^2 + |W_tangent|^2_h` from a populated induced geometry.
pub fn frak_s(geom: &InducedGeometry) -> f64 {
    1.0 - geom.wind.norm_sq + geom.tangent_wind_norm_sq
}

/// The density `F(x, z) = rho(s) / chi(|W|^2) * sqrt(det(z^T h z))`.
///
/// This is a from-scratch evaluation; it does not reuse [`InducedGeometry`],
/// so it can serve as the integrand of the variational oracle.
pub fn density(nav: &NavigationData, x: &[f64], z: &DMatrix<f64>) -> Result<f64> {
    let m = nav.dim();
    if x.len() != m || z.nrows() != m {
        return Err(GeometryError::Dimension(format!(
            "jet is {}x{} at a point with {} coordinates in a {}-dimensional chart",
            z.nrows(),
            z.ncols(),
            x.len(),
            m
        )));
    }
    let n = z.ncols();
    if n != nav.measure.dim() {
        return Err(GeometryError::Dimension(format!(
            "measure is for {}-dimensional submanifolds, jet has {} columns",
            nav.measure.dim(),
            n
        )));
    }
    let ht = nav.metric.value(x);
    let h = z.transpose() * &ht * z;
    let chol = h.clone().cholesky().ok_or_else(|| GeometryError::DegenerateJet {
        rank: z.rank(1e-12 * z.amax().max(1.0)),
        expected: n,
    })?;
    let det = chol.determinant();
    let h_inv = chol.inverse();
    let w = nav.wind.value(x);
    let w_low = &ht * &w;
    let norm_sq = w.dot(&w_low);
    nav.check_domain(x, norm_sq)?;
    // |W_tangent|^2 = W_a z^a_i h^ij z^b_j W_b
    let wi: DVector<f64> = z.tr_mul(&w_low);
    let tangent = wi.dot(&(&h_inv * &wi));
    let s = 1.0 - norm_sq + tangent;
    if !(s > 0.0) {
        return Err(GeometryError::InvalidFrakS(s));
    }
    Ok(nav.measure.rho(s) / nav.measure.chi(norm_sq) * det.sqrt())
}

/// Randers norm `F(x, y)` from the navigation data: the positive solution of
/// `|y / F - W|_h = 1`.
pub fn randers_norm(nav: &NavigationData, x: &[f64], y: &DVector<f64>) -> Result<f64> {
    if y.iter().all(|v| *v == 0.0) {
        return Err(GeometryError::ZeroVector);
    }
    let ht = nav.metric.value(x);
    let w = nav.wind.value(x);
    let w_low = &ht * &w;
    let norm_sq = w.dot(&w_low);
    nav.check_domain(x, norm_sq)?;
    let lambda = 1.0 - norm_sq;
    let wy = w_low.dot(y);
    let yy = y.dot(&(&ht * y));
    Ok(((lambda * yy + wy * wy).sqrt() - wy) / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AffineField, Euclidean};

    fn flat_nav(w: DVector<f64>, measure: MeasureSpec) -> NavigationData {
        let dim = w.len();
        NavigationData::new(Arc::new(Euclidean { dim }), Arc::new(AffineField::constant(w)), measure).unwrap()
    }

    #[test]
    fn phi_examples() {
        let (p, _) = phi(&MeasureSpec::bh(2), 2.0 / 3.0).unwrap();
        assert!(p.abs() < 1e-15);
        assert_eq!(phi(&MeasureSpec::bh(2), 1.0).unwrap().0, 1.0);
        assert_eq!(phi(&MeasureSpec::ht(3), 0.25).unwrap().0, 2.0);
    }

    #[test]
    fn phi_rejects_non_positive_s() {
        assert_eq!(phi(&MeasureSpec::bh(2), 0.0), Err(GeometryError::InvalidFrakS(0.0)));
        assert!(phi(&MeasureSpec::ht(2), -0.5).is_err());
    }

    #[test]
    fn phi_closed_forms_match_definition() {
        for n in 1..=4 {
            for measure in [MeasureSpec::bh(n), MeasureSpec::ht(n)] {
                for k in 0..=95 {
                    let s = 0.05 + 0.01 * k as f64;
                    let from_rho = 2.0 * measure.d_rho(s) * (1.0 - s) + measure.rho(s);
                    let (p, dp) = phi(&measure, s).unwrap();
                    assert!((p - from_rho).abs() <= 1e-12 * p.abs().max(1.0), "{measure:?} s={s}");
                    let from_rho_d = 2.0 * measure.dd_rho(s) * (1.0 - s) - measure.d_rho(s);
                    assert!((dp - from_rho_d).abs() <= 1e-12 * dp.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn rho_derivatives_match_central_differences() {
        let k = crate::diff::DiffKernel::new(1e-5, true);
        for measure in [MeasureSpec::bh(2), MeasureSpec::bh(3), MeasureSpec::ht(2)] {
            for s in [0.1, 0.4, 0.8, 1.0] {
                let d = k.derivative(|t| measure.rho(t), s);
                let dd = k.derivative(|t| measure.d_rho(t), s);
                assert!((d - measure.d_rho(s)).abs() <= 1e-6 * d.abs().max(1.0));
                assert!((dd - measure.dd_rho(s)).abs() <= 1e-6 * dd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn density_without_wind_is_riemannian_volume() {
        let nav = flat_nav(DVector::zeros(3), MeasureSpec::bh(2));
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(density(&nav, &[0.0, 0.0, 0.0], &z).unwrap(), 1.0);
        let z2 = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let d = density(&nav, &[0.0, 0.0, 0.0], &z2).unwrap();
        assert!((d - (4.0f64 * 2.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn density_rejects_rank_deficient_jet() {
        let nav = flat_nav(DVector::zeros(3), MeasureSpec::bh(2));
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let err = density(&nav, &[0.0, 0.0, 0.0], &z).unwrap_err();
        assert_eq!(err, GeometryError::DegenerateJet { rank: 1, expected: 2 });
    }

    #[test]
    fn density_rejects_strong_wind() {
        let nav = flat_nav(DVector::from_vec(vec![1.0, 0.0]), MeasureSpec::bh(1));
        let z = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(matches!(
            density(&nav, &[0.0, 0.0], &z),
            Err(GeometryError::OutsideRandersDomain { .. })
        ));
    }

    #[test]
    fn randers_norm_reduces_without_wind() {
        let nav = flat_nav(DVector::zeros(2), MeasureSpec::bh(1));
        let y = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(randers_norm(&nav, &[0.0, 0.0], &y).unwrap(), 5.0);
        assert_eq!(
            randers_norm(&nav, &[0.0, 0.0], &DVector::zeros(2)),
            Err(GeometryError::ZeroVector)
        );
    }

    #[test]
    fn randers_norm_solves_navigation_equation() {
        let nav = flat_nav(DVector::from_vec(vec![0.3, -0.4]), MeasureSpec::bh(1));
        let y = DVector::from_vec(vec![0.7, 0.2]);
        let f = randers_norm(&nav, &[0.0, 0.0], &y).unwrap();
        let u = &y / f - DVector::from_vec(vec![0.3, -0.4]);
        assert!((u.norm() - 1.0).abs() < 1e-12);
    }
}
