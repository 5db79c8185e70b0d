//! Fan-beam (s, φ) versus parallel-beam (p, ϕ) coordinates for chords of
//! the unit disc.
//!
//! A chord arriving at `point(s) = (cos s, sin s)` with direction θ(φ) is the
//! line ⟨x|(cos ϕ, sin ϕ)⟩ = p with p = sin(φ − s), ϕ = φ − π/2. Then
//! ∂p/∂s = −√(1 − p²) and ∂p/∂φ = √(1 − p²), and ds dφ = dp dϕ / √(1 − p²).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_disc, Vec2};
use crate::media::{BicubicGrid, RefractionField, ScalarField};
use crate::quadrature::{gauss_legendre, gauss_legendre_on, ordered_sum};

use super::inequality::boundary_form;
use super::xray::xray_table;

/// Lines with |p| above `1 − FANBEAM_RIM_MARGIN` are rejected by the map.
pub const FANBEAM_RIM_MARGIN: f64 = 0.05;

/// Extra ϕ knots on each side of one period, so the natural spline end
/// conditions do not reach the sampled window.
const PERIODIC_PAD: usize = 8;

/// (p, ϕ) of the chord arriving at `point(s)` with outgoing direction φ.
pub fn fanbeam_map(s: f64, phi: f64) -> Result<(f64, f64)> {
    let c = (phi - s).cos();
    if c <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "direction phi = {phi} is not outgoing at s = {s}"
        )));
    }
    let p = (phi - s).sin();
    if p.abs() >= 1.0 - FANBEAM_RIM_MARGIN {
        return Err(Error::InvalidArgument(format!(
            "|p| = {} is within {FANBEAM_RIM_MARGIN} of the rim",
            p.abs()
        )));
    }
    Ok((p, phi - 0.5 * PI))
}

/// The same chord described by its entry point `point(s)` and incoming
/// direction φ.
pub fn fanbeam_map_incoming(s: f64, phi: f64) -> Result<(f64, f64)> {
    fanbeam_map(s, phi + PI)
}

/// Straight-line integrals G(p, ϕ) of `f` over the disc, interpolated by a
/// cubic spline periodic in ϕ.
#[derive(Debug, Clone)]
pub struct ParallelBeamTable {
    pub n_p: usize,
    pub n_varphi: usize,
    spline: BicubicGrid,
}

fn line_integral(f: &ScalarField, p: f64, varphi: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let half = (1.0 - p * p).max(0.0).sqrt();
    let w = Vec2::new(varphi.cos(), varphi.sin());
    let t = Vec2::new(-w.y, w.x);
    ordered_sum(
        nodes
            .iter()
            .zip(weights)
            .map(|(u, wt)| wt * half * f.value(&(w * p + t * (half * u)))),
    )
}

impl ParallelBeamTable {
    /// `n_p` uniform knots on [−1, 1], `n_varphi` per period in ϕ, and
    /// `quad` Gauss–Legendre nodes along each line.
    pub fn build(f: &ScalarField, n_p: usize, n_varphi: usize, quad: usize) -> Result<Self> {
        let (nodes, weights) = gauss_legendre(quad);
        let dp = 2.0 / (n_p - 1) as f64;
        let dv = 2.0 * PI / n_varphi as f64;
        let ny = n_varphi + 2 * PERIODIC_PAD + 1;
        let origin = Vec2::new(-1.0, -0.5 * PI - PERIODIC_PAD as f64 * dv);
        let values: Vec<f64> = (0..ny * n_p)
            .into_par_iter()
            .map(|k| {
                let (j, i) = (k / n_p, k % n_p);
                line_integral(f, -1.0 + i as f64 * dp, origin.y + j as f64 * dv, &nodes, &weights)
            })
            .collect();
        let spline = BicubicGrid::new(origin, Vec2::new(dp, dv), n_p, ny, &values)?;
        Ok(Self {
            n_p,
            n_varphi,
            spline,
        })
    }

    fn wrap(varphi: f64) -> f64 {
        (varphi + 0.5 * PI).rem_euclid(2.0 * PI) - 0.5 * PI
    }

    /// (G, G_p, G_ϕ).
    pub fn eval(&self, p: f64, varphi: f64) -> (f64, f64, f64) {
        let (v, g, _) = self.spline.eval2(&Vec2::new(p, Self::wrap(varphi)));
        (v, g.x, g.y)
    }

    /// g(s, φ) = G(p(s, φ), ϕ(φ)) for an outgoing direction.
    pub fn fan(&self, s: f64, phi: f64) -> f64 {
        self.eval((phi - s).sin(), phi - 0.5 * PI).0
    }
}

/// Largest residuals of g_s = −√(1−p²)G_p and g_φ = √(1−p²)G_p + G_ϕ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRuleResidual {
    pub max_s: f64,
    pub max_phi: f64,
    pub points: usize,
}

impl ChainRuleResidual {
    pub fn max(&self) -> f64 {
        self.max_s.max(self.max_phi)
    }
}

/// Checks the chain rule on an `ns × nphi` grid of outgoing (s, φ) with
/// |p| ≤ 1 − `FANBEAM_RIM_MARGIN`, differentiating g = G∘(p, ϕ) by central
/// differences of step `h`.
pub fn chain_rule_residual(table: &ParallelBeamTable, ns: usize, nphi: usize, h: f64) -> ChainRuleResidual {
    let mut out = ChainRuleResidual {
        max_s: 0.0,
        max_phi: 0.0,
        points: 0,
    };
    for i in 0..ns {
        let s = 2.0 * PI * i as f64 / ns as f64;
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            let Ok((p, varphi)) = fanbeam_map(s, phi) else {
                continue;
            };
            let root = (1.0 - p * p).sqrt();
            let (_, gp, gv) = table.eval(p, varphi);
            let g_s = (table.fan(s + h, phi) - table.fan(s - h, phi)) / (2.0 * h);
            let g_phi = (table.fan(s, phi + h) - table.fan(s, phi - h)) / (2.0 * h);
            out.max_s = out.max_s.max((g_s + root * gp).abs());
            out.max_phi = out.max_phi.max((g_phi - root * gp - gv).abs());
            out.points += 1;
        }
    }
    out
}

/// ∬ (√(1−p²) G_p² + G_p G_ϕ) dp dϕ with Gauss–Legendre in p.
pub fn parallel_beam_rhs(table: &ParallelBeamTable, n_p: usize, n_varphi: usize) -> f64 {
    let (ps, ws) = gauss_legendre_on(n_p, -1.0, 1.0);
    let dv = 2.0 * PI / n_varphi as f64;
    ordered_sum((0..n_varphi).flat_map(|j| {
        let varphi = -0.5 * PI + j as f64 * dv;
        ps.iter().zip(&ws).map(move |(&p, &w)| {
            let (_, gp, gv) = table.eval(p, varphi);
            w * dv * ((1.0 - p * p).sqrt() * gp * gp + gp * gv)
        })
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanbeamReport {
    pub chain_rule: ChainRuleResidual,
    /// −∬ g_s g_φ ds dφ from traced X-ray data on the boundary grid.
    pub rhs_fan: f64,
    /// The same integral in parallel-beam coordinates.
    pub rhs_parallel: f64,
}

impl FanbeamReport {
    pub fn rhs_relative_difference(&self) -> f64 {
        (self.rhs_fan - self.rhs_parallel).abs() / self.rhs_parallel.abs()
    }
}

/// Chain-rule residuals on a `grid × grid` fan-beam grid and both forms of the
/// linearized right side, for n ≡ 1 on the unit disc.
pub fn fanbeam_check(f: &ScalarField, grid: usize, boundary_grid: usize) -> Result<FanbeamReport> {
    let d = unit_disc();
    let one = RefractionField::constant(1.0, &d)?;
    let table = ParallelBeamTable::build(f, 257, 256, 48)?;
    let chain_rule = chain_rule_residual(&table, grid, grid, 1e-4);
    let g = xray_table(f, &one, &d, boundary_grid, boundary_grid)?;
    let (rhs_fan, _) = boundary_form(&g)?;
    Ok(FanbeamReport {
        chain_rule,
        rhs_fan,
        rhs_parallel: parallel_beam_rhs(&table, 96, 256),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Profile;

    #[test]
    fn map_examples() {
        let (p, v) = fanbeam_map(0.0, 0.0).unwrap();
        assert_eq!(p, 0.0);
        assert!((v + 0.5 * PI).abs() < 1e-15);
        assert!(fanbeam_map(0.0, PI).is_err());
        assert!(fanbeam_map(0.0, 1.4).is_err());
        let (p, _) = fanbeam_map_incoming(0.0, PI).unwrap();
        assert!(p.abs() < 1e-15);
    }

    #[test]
    fn parallel_beam_values_of_paraboloid() {
        let d = unit_disc();
        let f = ScalarField::new(Profile::Radial(vec![1.0, -1.0]), &d);
        let t = ParallelBeamTable::build(&f, 129, 64, 16).unwrap();
        for (p, v) in [(0.0, 0.3), (0.5, 2.0), (-0.7, -1.0), (0.2, 7.0)] {
            let exact = 4.0 / 3.0 * (1.0f64 - p * p).powf(1.5);
            assert!((t.eval(p, v).0 - exact).abs() < 1e-5, "{p} {v}");
        }
    }
}
