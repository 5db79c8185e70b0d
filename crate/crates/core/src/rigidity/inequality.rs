//! Both sides of the rigidity inequality
//! ∫ (n₂/cos ω₂ − n₁/cos ω₁)² dφ dV ≤ −∫∫ d_xρ ∧ d_φρ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::hodograph::{build_hodograph, build_rho, grad_x_tau, periodic_derivative, GradientSample, RhoTable};
use crate::media::{boundary_sup, Profile, RefractionField};
use crate::quadrature::ordered_sum;

use super::bundle::{SphereBundleGrid, COLLAR_FRACTION};
use super::identities::{rnn_bracket, squared_difference};

/// Sign relating ∬ ∂_sρ ∂_φρ ds dφ over the incoming boundary grid
/// (s counterclockwise, φ increasing) to −∫ d_xρ ∧ d_φρ.
pub const STOKES_ORIENTATION: f64 = -1.0;

/// Largest relative change of the boundary integral between stride-1 and
/// stride-2 derivative stencils before `GridTooCoarse`.
pub const RICHARDSON_DRIFT_MAX: f64 = 0.1;

/// Relative slack added to the right side when judging the inequality.
pub const RELATIVE_TOLERANCE: f64 = 0.02;

/// Integrals below this are treated as zero by the drift check.
const NEGLIGIBLE: f64 = 1e-14;

/// Grid resolution triple `(N_x, N_φ, N_s)`: `N_x × N_x` spatial nodes and
/// `N_φ` directions in the bundle, and an `N_s × N_s` boundary (s, φ) grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub n_x: usize,
    pub n_phi: usize,
    pub n_s: usize,
}

impl Resolution {
    pub const fn new(n_x: usize, n_phi: usize, n_s: usize) -> Self {
        Self { n_x, n_phi, n_s }
    }

    /// Doubles every count.
    pub const fn refined(&self) -> Self {
        Self::new(2 * self.n_x, 2 * self.n_phi, 2 * self.n_s)
    }
}

fn product_integral(values: &[f64], ns: usize, nphi: usize, ds: f64, dphi: f64, stride: usize) -> f64 {
    let a = periodic_derivative(values, ns, nphi, true, ds, stride);
    let b = periodic_derivative(values, ns, nphi, false, dphi, stride);
    STOKES_ORIENTATION * ordered_sum(a.iter().zip(&b).map(|(x, y)| x * y)) * ds * dphi
}

/// `STOKES_ORIENTATION·∬ ∂_sh ∂_φh ds dφ` for a boundary table, and its
/// change when the derivative stencil is widened to stride 2.
pub fn boundary_form(table: &RhoTable) -> Result<(f64, f64)> {
    let (ds, dphi) = (table.delta_s(), table.delta_phi());
    let fine = STOKES_ORIENTATION
        * ordered_sum(table.d_s_rho.iter().zip(&table.d_phi_rho).map(|(a, b)| a * b))
        * ds
        * dphi;
    let coarse = product_integral(&table.rho, table.ns, table.nphi, ds, dphi, 2);
    let drift = (fine - coarse).abs();
    if fine.abs() >= NEGLIGIBLE && drift > RICHARDSON_DRIFT_MAX * fine.abs() {
        return Err(Error::GridTooCoarse(format!(
            "boundary integral {fine} moves by {drift} when the derivative stencil doubles \
             ({}x{} grid)",
            table.ns, table.nphi
        )));
    }
    Ok((fine, drift))
}

/// −∫∫ d_xρ ∧ d_φρ over the incoming boundary grid.
pub fn inequality_rhs(rho: &RhoTable) -> Result<f64> {
    boundary_form(rho).map(|(v, _)| v)
}

pub(crate) fn sample_bundle(
    field: &RefractionField,
    domain: &Domain,
    grid: &SphereBundleGrid,
) -> Result<Vec<GradientSample>> {
    let points = grid.phase_points();
    let out: Vec<Result<GradientSample>> = points
        .par_iter()
        .map(|&(k, j)| {
            grad_x_tau(grid.nodes[k], grid.phis[j], field, domain, None).map_err(|e| e.at_cell(k, j))
        })
        .collect();
    out.into_iter().collect()
}

/// Left side and companion integrals on one bundle grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LhsBreakdown {
    /// ∫ (n₂/cos ω₂ − n₁/cos ω₁)² dφ dV.
    pub lhs: f64,
    /// ∫ of the (rnn) bracket, which dominates `lhs` pointwise.
    pub bracket: f64,
    /// ∫ |d_xτ₂ − d_xτ₁|² dφ dV.
    pub gradient_difference: f64,
    /// Largest |ratio − 1| of the flow identity over both fields.
    pub worst_flow_identity: f64,
}

/// Left side with ω₁, ω₂ from [`grad_x_tau`] at every phase point.
pub fn inequality_lhs(
    field1: &RefractionField,
    field2: &RefractionField,
    domain: &Domain,
    grid: &SphereBundleGrid,
) -> Result<f64> {
    inequality_lhs_breakdown(field1, field2, domain, grid).map(|b| b.lhs)
}

pub fn inequality_lhs_breakdown(
    field1: &RefractionField,
    field2: &RefractionField,
    domain: &Domain,
    grid: &SphereBundleGrid,
) -> Result<LhsBreakdown> {
    let a = sample_bundle(field1, domain, grid)?;
    let b = sample_bundle(field2, domain, grid)?;
    let sq: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(p, q)| squared_difference(p.n_at_x, q.n_at_x, p.omega, q.omega))
        .collect();
    let br: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(p, q)| rnn_bracket(p.n_at_x, q.n_at_x, p.omega, q.omega))
        .collect();
    let gd: Vec<f64> = a.iter().zip(&b).map(|(p, q)| (q.dtau - p.dtau).norm_squared()).collect();
    let worst = a
        .iter()
        .chain(&b)
        .fold(0.0f64, |m, s| m.max((s.flow_identity_ratio() - 1.0).abs()));
    Ok(LhsBreakdown {
        lhs: grid.integrate(&sq),
        bracket: grid.integrate(&br),
        gradient_difference: grid.integrate(&gd),
        worst_flow_identity: worst,
    })
}

/// One row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub resolution: Resolution,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Stride-1 vs stride-2 change of the boundary integral.
    pub stencil_drift: f64,
}

/// Both sides of an inequality at two or more resolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// Values at the finest resolution.
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub resolutions: Vec<ResolutionRow>,
    /// Largest change of either side between consecutive resolutions.
    pub drift: f64,
    /// max(2% of rhs, drift).
    pub tolerance: f64,
    /// lhs ≤ rhs + tolerance.
    pub holds: bool,
    /// |margin| exceeds the drift, so the sign of the margin is meaningful.
    pub conclusive: bool,
    pub tangency_margin: f64,
    pub interior_margin: f64,
    /// Left-side contribution of the band between the interior margin and
    /// half of it, at the coarsest spatial resolution.
    pub collar_contribution: f64,
    /// Extra integrals at the finest resolution: (name, value).
    pub diagnostics: Vec<(String, f64)>,
}

impl InequalityReport {
    pub(crate) fn assemble(
        rows: Vec<ResolutionRow>,
        tangency_margin: f64,
        interior_margin: f64,
        collar_contribution: f64,
        diagnostics: Vec<(String, f64)>,
    ) -> Self {
        let last = *rows.last().expect("at least one resolution");
        let drift = rows
            .windows(2)
            .map(|w| (w[1].lhs - w[0].lhs).abs().max((w[1].rhs - w[0].rhs).abs()))
            .fold(0.0, f64::max);
        let tolerance = (RELATIVE_TOLERANCE * last.rhs.abs()).max(drift);
        Self {
            lhs: last.lhs,
            rhs: last.rhs,
            margin: last.margin,
            drift,
            tolerance,
            holds: last.lhs <= last.rhs + tolerance,
            conclusive: last.margin.abs() > drift,
            resolutions: rows,
            tangency_margin,
            interior_margin,
            collar_contribution,
            diagnostics,
        }
    }
}

/// Rejects pairs whose coefficients differ on Γ.
pub fn check_boundary_agreement(
    field1: &RefractionField,
    field2: &RefractionField,
    domain: &Domain,
) -> Result<()> {
    let diff = Profile::Sum(vec![
        field2.profile().clone(),
        Profile::Scaled(-1.0, Box::new(field1.profile().clone())),
    ]);
    let sup = boundary_sup(&diff, domain);
    if sup > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "media differ on the boundary: sup |n2 - n1| = {sup}"
        )));
    }
    Ok(())
}

/// Runs the inequality for `field1`, `field2` at each resolution (coarse to
/// fine).
pub fn verify_inequality(
    field1: &RefractionField,
    field2: &RefractionField,
    domain: &Domain,
    resolutions: &[Resolution],
) -> Result<InequalityReport> {
    if resolutions.is_empty() {
        return Err(Error::InvalidArgument("no resolutions given".into()));
    }
    check_boundary_agreement(field1, field2, domain)?;
    let delta = COLLAR_FRACTION * domain.diameter();
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut tangency = 0.0;
    for res in resolutions {
        let grid = SphereBundleGrid::standard(domain, res.n_x, res.n_phi)?;
        let lhs = inequality_lhs_breakdown(field1, field2, domain, &grid)?;
        let t1 = build_hodograph(field1, domain, res.n_s, res.n_s)?;
        let t2 = build_hodograph(field2, domain, res.n_s, res.n_s)?;
        tangency = t1.tangency_margin;
        let rho = build_rho(&t1, &t2)?;
        let (rhs, stencil_drift) = boundary_form(&rho)?;
        rows.push(ResolutionRow {
            resolution: *res,
            lhs: lhs.lhs,
            rhs,
            margin: rhs - lhs.lhs,
            stencil_drift,
        });
        diagnostics = vec![
            ("bracket_integral".to_string(), lhs.bracket),
            ("gradient_difference_integral".to_string(), lhs.gradient_difference),
            ("worst_flow_identity".to_string(), lhs.worst_flow_identity),
            ("sup_abs_rho".to_string(), rho.sup_abs()),
        ];
    }
    let coarse = resolutions[0];
    let collar = SphereBundleGrid::collar(domain, 0.5 * delta, delta, 4, coarse.n_x, coarse.n_phi)?;
    let collar_contribution = inequality_lhs(field1, field2, domain, &collar)?;
    Ok(InequalityReport::assemble(rows, tangency, delta, collar_contribution, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::unit_disc;

    #[test]
    fn zero_rho_gives_zero() {
        let t = RhoTable::from_values(16, 16, 1.0, 0.05, vec![0.0; 256], vec![true; 256]);
        assert_eq!(inequality_rhs(&t).unwrap(), 0.0);
    }

    #[test]
    fn oriented_area_of_a_known_table() {
        // h = sin(s + φ): ∬ h_s h_φ = ∬ cos²(s + φ) = 2π².
        let (ns, np) = (64, 64);
        let l = 2.0 * std::f64::consts::PI;
        let mut v = vec![0.0; ns * np];
        for i in 0..ns {
            for j in 0..np {
                let s = l * i as f64 / ns as f64;
                let p = l * j as f64 / np as f64;
                v[i * np + j] = (s + p).sin();
            }
        }
        let t = RhoTable::from_values(ns, np, l, 0.05, v, vec![true; ns * np]);
        let (val, drift) = boundary_form(&t).unwrap();
        let pi = std::f64::consts::PI;
        assert!((val - STOKES_ORIENTATION * 2.0 * pi * pi).abs() < 2e-4);
        assert!(drift < 4e-3);
    }

    #[test]
    fn rough_table_is_rejected() {
        let (ns, np) = (16, 16);
        let v: Vec<f64> = (0..ns * np).map(|k| ((k * 7919) % 13) as f64).collect();
        let t = RhoTable::from_values(ns, np, 1.0, 0.05, v, vec![true; ns * np]);
        assert!(matches!(boundary_form(&t), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn identical_fields_give_zero_lhs() {
        let d = unit_disc();
        let f = RefractionField::constant(1.0, &d).unwrap();
        let g = SphereBundleGrid::standard(&d, 3, 4).unwrap();
        assert_eq!(inequality_lhs(&f, &f, &d, &g).unwrap(), 0.0);
    }

    #[test]
    fn boundary_mismatch_rejected() {
        let d = unit_disc();
        let a = RefractionField::constant(1.0, &d).unwrap();
        let b = RefractionField::constant(1.1, &d).unwrap();
        assert!(verify_inequality(&a, &b, &d, &[Resolution::new(4, 8, 16)]).is_err());
    }
}
