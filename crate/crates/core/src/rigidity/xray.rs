//! Geodesic X-ray transform and the linearized inequality
//! ∫ f²/cos²ω dφ dV ≤ −∫∫ d_xg ∧ d_φg.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{theta, Domain};
use crate::hodograph::{shoot_two_point, RhoTable, TANGENCY_MARGIN};
use crate::media::{RefractionField, ScalarField};
use crate::tracer::{trace_chord, TraceOptions};
use crate::variation::{first_variation, integrate_along_chord};

use super::bundle::{SphereBundleGrid, COLLAR_FRACTION};
use super::inequality::{boundary_form, sample_bundle, InequalityReport, Resolution, ResolutionRow};

/// g(s, φ) = ∫ f dσ along the `field`-geodesic entering at `s` with
/// direction φ.
pub fn xray_transform(
    f: &ScalarField,
    field: &RefractionField,
    domain: &Domain,
    s: f64,
    phi: f64,
) -> Result<f64> {
    integrate_along_chord(s, phi, field, f.profile(), domain, &TraceOptions::default()).map(|(g, _)| g)
}

/// g on the incoming boundary grid, laid out like a hodograph table.
pub fn xray_table(
    f: &ScalarField,
    field: &RefractionField,
    domain: &Domain,
    ns: usize,
    nphi: usize,
) -> Result<RhoTable> {
    let l = domain.boundary().total_length();
    let cells: Vec<(usize, usize)> = (0..ns).flat_map(|i| (0..nphi).map(move |j| (i, j))).collect();
    let vals: Vec<Result<(f64, bool)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let s = l * i as f64 / ns as f64;
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            if domain.boundary().inward_conormal(s).dot(&theta(phi)) < TANGENCY_MARGIN {
                return Ok((0.0, false));
            }
            xray_transform(f, field, domain, s, phi)
                .map(|g| (g, true))
                .map_err(|e| e.at_cell(i, j))
        })
        .collect();
    let (g, live): (Vec<f64>, Vec<bool>) = vals.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(RhoTable::from_values(ns, nphi, l, TANGENCY_MARGIN, g, live))
}

/// Σ_k w_k f²(x_k) Σ_j Δφ / cos²ω(x_k, φ_j).
pub fn fg_lhs(f: &ScalarField, field: &RefractionField, domain: &Domain, grid: &SphereBundleGrid) -> Result<f64> {
    let samples = sample_bundle(field, domain, grid)?;
    let np = grid.n_phi();
    let vals: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(idx, smp)| {
            let fx = f.value(&grid.nodes[idx / np]);
            fx * fx / smp.cos_omega().powi(2)
        })
        .collect();
    Ok(grid.integrate(&vals))
}

/// Linearized inequality for the perturbation `f` of `field` at each
/// resolution.
pub fn fg_inequality(
    f: &ScalarField,
    field: &RefractionField,
    domain: &Domain,
    resolutions: &[Resolution],
) -> Result<InequalityReport> {
    if resolutions.is_empty() {
        return Err(Error::InvalidArgument("no resolutions given".into()));
    }
    if !f.vanishes_on_boundary() {
        return Err(Error::InvalidArgument("perturbation does not vanish on the boundary".into()));
    }
    let delta = COLLAR_FRACTION * domain.diameter();
    let mut rows = Vec::new();
    let mut sup_g = 0.0;
    for res in resolutions {
        let grid = SphereBundleGrid::standard(domain, res.n_x, res.n_phi)?;
        let lhs = fg_lhs(f, field, domain, &grid)?;
        let g = xray_table(f, field, domain, res.n_s, res.n_s)?;
        sup_g = g.sup_abs();
        let (rhs, stencil_drift) = boundary_form(&g)?;
        rows.push(ResolutionRow {
            resolution: *res,
            lhs,
            rhs,
            margin: rhs - lhs,
            stencil_drift,
        });
    }
    let coarse = resolutions[0];
    let collar = SphereBundleGrid::collar(domain, 0.5 * delta, delta, 4, coarse.n_x, coarse.n_phi)?;
    let collar_contribution = fg_lhs(f, field, domain, &collar)?;
    Ok(InequalityReport::assemble(
        rows,
        TANGENCY_MARGIN,
        delta,
        collar_contribution,
        vec![("sup_abs_g".to_string(), sup_g)],
    ))
}

/// Travel-time change under `n → n + εf` along one chord, against its
/// linear predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationSample {
    pub s: f64,
    pub phi: f64,
    pub eps: f64,
    /// (τ_{n+εf}(s, φ) − τ_n(s, φ)) / ε with entry point and direction fixed.
    pub quotient: f64,
    /// ∫ f dσ along the unperturbed chord.
    pub xray: f64,
    /// Exact derivative, including the exit-point shift along Γ.
    pub first_variation: f64,
    /// (T_{n+εf}(y, x) − T_n(y, x)) / ε with both endpoints fixed.
    pub two_point_quotient: f64,
}

impl LinearizationSample {
    pub fn xray_relative_error(&self) -> f64 {
        (self.quotient - self.xray).abs() / self.xray.abs()
    }

    pub fn first_variation_relative_error(&self) -> f64 {
        (self.quotient - self.first_variation).abs() / self.first_variation.abs()
    }

    pub fn two_point_relative_error(&self) -> f64 {
        (self.two_point_quotient - self.xray).abs() / self.xray.abs()
    }
}

/// Compares finite travel-time differences with the X-ray transform at the
/// given incoming boundary directions.
pub fn linearization_check(
    f: &ScalarField,
    field: &RefractionField,
    domain: &Domain,
    eps: f64,
    directions: &[(f64, f64)],
) -> Result<Vec<LinearizationSample>> {
    let perturbed = field.perturbed(f, eps, domain)?;
    let opts = TraceOptions::default();
    directions
        .par_iter()
        .map(|&(s, phi)| {
            let base = trace_chord(s, phi, field, domain, &opts)?;
            let moved = trace_chord(s, phi, &perturbed, domain, &opts)?;
            let (xray, _) = integrate_along_chord(s, phi, field, f.profile(), domain, &opts)?;
            let fv = first_variation(s, phi, field, f.profile(), domain, &opts)?;
            let s_exit = base.exit.expect("chord has an exit").s;
            let t2 = shoot_two_point(s, s_exit, &perturbed, domain, Some(phi))?;
            Ok(LinearizationSample {
                s,
                phi,
                eps,
                quotient: (moved.travel_time() - base.travel_time()) / eps,
                xray,
                first_variation: fv.total(),
                two_point_quotient: (t2.travel_time - base.travel_time()) / eps,
            })
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect()
}
