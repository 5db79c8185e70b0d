//! Quadrature on the circle bundle S(Ω) = Ω × [0, 2π) for the measure dφ dV.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Vec2};
use crate::quadrature::{gauss_legendre_on, ordered_sum};

/// Width of the excluded boundary collar, in units of diam(Ω).
pub const COLLAR_FRACTION: f64 = 0.02;

/// Interior nodes with area weights times a uniform angular grid.
///
/// The spatial rule is Gauss–Legendre in the polar radius and uniform in the
/// polar angle, over the region whose radial distance to Γ exceeds the
/// margin. With margin 0 the weights integrate constants over Ω exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereBundleGrid {
    pub nodes: Vec<Vec2>,
    pub weights: Vec<f64>,
    pub phis: Vec<f64>,
    pub n_radial: usize,
    pub n_angular: usize,
    /// Distance kept from Γ, along the boundary normal.
    pub margin: f64,
}

/// Polar radius of the level set at normal distance `margin` inside Γ.
fn inset_radius(domain: &Domain, alpha: f64, margin: f64) -> f64 {
    let (r, dr, _) = domain.radius_at(alpha);
    r - margin * (1.0 + (dr / r).powi(2)).sqrt()
}

fn polar_band(
    n_radial: usize,
    n_angular: usize,
    inner: impl Fn(f64) -> f64,
    outer: impl Fn(f64) -> f64,
) -> Result<(Vec<Vec2>, Vec<f64>)> {
    let (t, w) = gauss_legendre_on(n_radial, 0.0, 1.0);
    let dalpha = 2.0 * PI / n_angular as f64;
    let mut nodes = Vec::with_capacity(n_radial * n_angular);
    let mut weights = Vec::with_capacity(n_radial * n_angular);
    for a in 0..n_angular {
        let alpha = (a as f64 + 0.5) * dalpha;
        let (r0, r1) = (inner(alpha), outer(alpha));
        if !(r1 > r0 && r0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "collar band is empty at polar angle {alpha} (radii {r0}, {r1})"
            )));
        }
        let dir = Vec2::new(alpha.cos(), alpha.sin());
        for (ti, wi) in t.iter().zip(&w) {
            let rho = r0 + (r1 - r0) * ti;
            nodes.push(dir * rho);
            weights.push(wi * (r1 - r0) * rho * dalpha);
        }
    }
    Ok((nodes, weights))
}

impl SphereBundleGrid {
    /// `n_radial × n_angular` spatial nodes kept `margin` away from Γ, and
    /// `n_phi` uniform directions.
    pub fn polar(
        domain: &Domain,
        n_radial: usize,
        n_angular: usize,
        n_phi: usize,
        margin: f64,
    ) -> Result<Self> {
        if n_radial == 0 || n_angular < 3 || n_phi < 3 || margin < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bundle grid {n_radial}x{n_angular}x{n_phi} with margin {margin}"
            )));
        }
        let (nodes, weights) = polar_band(
            n_radial,
            n_angular,
            |_| 0.0,
            |a| inset_radius(domain, a, margin),
        )?;
        Ok(Self::assemble(nodes, weights, n_phi, n_radial, n_angular, margin))
    }

    /// Square spatial grid `n × n` with the standard collar.
    pub fn standard(domain: &Domain, n: usize, n_phi: usize) -> Result<Self> {
        Self::polar(domain, n, n, n_phi, COLLAR_FRACTION * domain.diameter())
    }

    /// The band between normal distances `outer_margin` and `inner_margin`
    /// from Γ (`inner_margin < outer_margin`).
    pub fn collar(
        domain: &Domain,
        inner_margin: f64,
        outer_margin: f64,
        n_radial: usize,
        n_angular: usize,
        n_phi: usize,
    ) -> Result<Self> {
        if !(0.0 <= inner_margin && inner_margin < outer_margin) {
            return Err(Error::InvalidArgument(format!(
                "collar margins {inner_margin}, {outer_margin}"
            )));
        }
        let (nodes, weights) = polar_band(
            n_radial,
            n_angular,
            |a| inset_radius(domain, a, outer_margin),
            |a| inset_radius(domain, a, inner_margin),
        )?;
        Ok(Self::assemble(nodes, weights, n_phi, n_radial, n_angular, inner_margin))
    }

    fn assemble(
        nodes: Vec<Vec2>,
        weights: Vec<f64>,
        n_phi: usize,
        n_radial: usize,
        n_angular: usize,
        margin: f64,
    ) -> Self {
        let phis = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        Self {
            nodes,
            weights,
            phis,
            n_radial,
            n_angular,
            margin,
        }
    }

    pub fn n_phi(&self) -> usize {
        self.phis.len()
    }

    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.phis.len() as f64
    }

    /// Σ w_k.
    pub fn volume(&self) -> f64 {
        ordered_sum(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.nodes.len() * self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Phase points in node-major order.
    pub fn phase_points(&self) -> Vec<(usize, usize)> {
        (0..self.nodes.len())
            .flat_map(|k| (0..self.phis.len()).map(move |j| (k, j)))
            .collect()
    }

    /// Σ_k Σ_j w_k Δφ·h(x_k, φ_j) for values laid out as [`Self::phase_points`].
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let dphi = self.phi_weight();
        let np = self.phis.len();
        ordered_sum(
            values
                .iter()
                .enumerate()
                .map(|(idx, v)| self.weights[idx / np] * dphi * v),
        )
    }
}
