//! Numerical checks of the rigidity inequality and its linearization.

pub mod bundle;
pub mod disc;
pub mod fanbeam;
pub mod identities;
pub mod inequality;
pub mod uniqueness;
pub mod xray;

pub use bundle::{SphereBundleGrid, COLLAR_FRACTION};
pub use disc::{disc_weight_closed_form, disc_weight_quadrature, disc_weight_straight_line, DiscRow};
pub use fanbeam::{chain_rule_residual, fanbeam_check, fanbeam_map, FanbeamReport, ParallelBeamTable};
pub use identities::{lemma_phi_identity_residual, rnn_bracket, CrossTermSign};
pub use inequality::{
    inequality_lhs, inequality_rhs, verify_inequality, InequalityReport, Resolution, ResolutionRow,
    STOKES_ORIENTATION,
};
pub use uniqueness::{amplitude_sweep, uniqueness_demo, UniquenessReport};
pub use xray::{fg_inequality, linearization_check, xray_table, xray_transform, LinearizationSample};
