//! Numerical Randers geometry from Zermelo navigation data.
//!
//! The crate computes mean-curvature forms of immersed submanifolds in a
//! Randers space `(M, F)` whose metric is described by navigation data
//! `(h, W)`: a Riemannian metric `h` and a wind field `W` with `|W|_h < 1`.
//!
//! Layout:
//!
//! - [`geometry`]: chart metrics, vector fields, Christoffel symbols,
//!   covariant derivatives of the wind, Killing checks, sectional curvature.
//! - [`measure`]: Busemann-Hausdorff / Holmes-Thompson densities and the
//!   volume ratio function.
//! - [`immersion`]: induced geometry of an immersion (A/B tensors, second
//!   fundamental form, unit normal, Riemannian mean curvature).
//! - [`mean_curvature`]: closed-form mean curvature forms plus a
//!   finite-difference variational oracle.
//! - [`hyperbolic`]: rotational BH-minimal surfaces in a Randers domain of
//!   hyperbolic 3-space carrying a mixed boost/rotation Killing wind.
//! - [`cases`]: seeded random navigation data and immersions used by the
//!   verification sweeps.

pub mod cases;
pub mod diff;
pub mod error;
pub mod geometry;
pub mod hyperbolic;
pub mod immersion;
pub mod mean_curvature;
pub mod measure;
pub mod ode;
pub mod quadrature;
pub mod tensor;

pub use error::{GeometryError, Result};
pub use geometry::{MetricField, VectorField};
pub use immersion::{Immersion, ImmersionJet2, InducedGeometry};
pub use mean_curvature::MeanCurvatureForm;
pub use measure::{MeasureKind, MeasureSpec, NavigationData};
