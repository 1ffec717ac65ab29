//! Finsler and spray geometry in local coordinates.
//!
//! Given a Finsler function F(x, y) or spray coefficients Gⁱ(x, y) as
//! formulas, this crate computes the canonical spray, the Berwald
//! connection and the curvature tensors built on them (B, K, R, H, the
//! Landsberg and stretch tensors, Douglas and Weyl curvature). It also
//! checks the identities relating them, classifies the geometry, handles 2D
//! Berwald frames, projective changes and the Rapcsák equations, and
//! integrates geodesics.
//!
//! All pointwise quantities are evaluated on truncated Taylor jets
//! ([`jet`]) seeded from exact symbolic partials of E = F²/2, so nested
//! derivatives such as `∂_y h∇B` lose nothing to finite differencing.

pub mod classify;
pub mod curvature;
mod error;
pub mod geodesic;
pub mod identities;
pub mod jet;
pub mod manifold;
pub mod projective;
pub mod report;
pub mod spraycore;
pub mod tensor;
pub mod twodim;

pub use error::Error;
pub use manifold::{gallery, load_manifest, sample_points, GeometrySpec, Kind, TangentPoint};
