//! Geodesic tracing and rigidity-inequality checks for conformal metrics
//! `n²·ds²` on planar domains.

pub mod catalog;
pub mod config;
pub mod error;
pub mod geometry;
pub mod hodograph;
pub mod media;
pub mod ode;
pub mod quadrature;
pub mod reconstruction;
pub mod rigidity;
pub mod tracer;
pub mod variation;

pub use error::{Error, Result};
pub use geometry::{
    star_shaped_domain, unit_disc, AngularFrame, BoundaryCurve, BoundaryFrame, DirectionClass,
    Domain, Mat2, RadiusProfile, Shape, Vec2,
};
pub use media::{Bump, BoundaryCutoff, MediumKind, Profile, RefractionField, ScalarField};
pub use config::{make_field, make_medium, DomainSpec, FieldSpec, MediumSpec};
pub use hodograph::{
    build_hodograph, build_rho, exit_angle_from_hodograph, grad_x_tau, tau_at, GradientSample, HodographTable,
    RhoTable,
};
pub use reconstruction::{gauss_newton_solve, ModelParameterization, TomographyProblem};
pub use rigidity::{InequalityReport, Resolution, SphereBundleGrid};
pub use tracer::{trace_backward, trace_chord, trace_forward, GeodesicPath, PathStatus, RayState, TraceOptions};
