//! Randers domain of hyperbolic 3-space with a mixed Killing wind, and its
//! rotational BH-minimal surfaces.

pub mod mesh;
pub mod model;
pub mod rotational;

pub use mesh::{generate_mesh, hyperbolic_nav, GridRange, MeshFamily, MeshSpec, MeshVertex, ResidualStats, SurfaceMesh};
pub use model::{in_omega, lorentz_inner, HyperboloidMetric, LorentzPoint, MixedFieldChart, MixedKillingField};
pub use rotational::{GeodesicSurface, Profile, ProfileJet, ProfilePoint, RotationalSurface, SurfaceType};
