//! The weight ∫ dφ / cos²ω on the unit disc with n ≡ 1.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{theta, unit_disc, Vec2};
use crate::hodograph::grad_x_tau;
use crate::media::RefractionField;
use crate::quadrature::ordered_sum;

/// 2π·((1 + r)/(1 − r))^{1/2}.
pub fn disc_weight_closed_form(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("radius {r} outside [0, 1)")));
    }
    Ok(2.0 * PI * ((1.0 + r) / (1.0 - r)).sqrt())
}

/// ∫₀^{2π} dφ / (1 − r² sin²φ) = 2π / √(1 − r²), the value of the weight for
/// straight lines.
pub fn disc_weight_straight_line(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("radius {r} outside [0, 1)")));
    }
    Ok(2.0 * PI / (1.0 - r * r).sqrt())
}

/// cos ω = ⟨ν(y)|θ⟩ for the straight line through `x` with direction θ,
/// where y is its entry point on the unit circle.
pub fn straight_cos_omega(x: Vec2, phi: f64) -> f64 {
    let t = theta(phi);
    let b = x.dot(&t);
    (1.0 - x.norm_squared() + b * b).sqrt()
}

/// Uniform N_φ-point rule for ∫ dφ / cos²ω at x = (r, 0).
pub fn disc_weight_quadrature(r: f64, n_phi: usize) -> Result<f64> {
    if !(0.0..=0.9).contains(&r) || n_phi == 0 {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs 0 <= r <= 0.9 and N_phi > 0 (got r = {r}, N_phi = {n_phi})"
        )));
    }
    let x = Vec2::new(r, 0.0);
    let dphi = 2.0 * PI / n_phi as f64;
    Ok(ordered_sum((0..n_phi).map(|j| {
        let c = straight_cos_omega(x, j as f64 * dphi);
        dphi / (c * c)
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscRow {
    pub r: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub rel_err: f64,
}

pub fn disc_example(radii: &[f64], n_phi: usize) -> Result<Vec<DiscRow>> {
    radii
        .iter()
        .map(|&r| {
            let closed_form = disc_weight_closed_form(r)?;
            let quadrature = disc_weight_quadrature(r, n_phi)?;
            Ok(DiscRow {
                r,
                closed_form,
                quadrature,
                rel_err: (quadrature - closed_form).abs() / closed_form,
            })
        })
        .collect()
}

/// Largest |cos ω_fd − ⟨ν(y)|θ⟩| over `samples` random points with
/// |x| ≤ 0.9, where ω_fd comes from the finite-difference travel-time
/// gradient of n ≡ 1.
pub fn cos_omega_consistency(samples: usize, seed: u64) -> Result<f64> {
    let d = unit_disc();
    let one = RefractionField::constant(1.0, &d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let r = 0.9 * rng.gen::<f64>();
        let a = 2.0 * PI * rng.gen::<f64>();
        let phi = 2.0 * PI * rng.gen::<f64>();
        let x = Vec2::new(r * a.cos(), r * a.sin());
        let g = grad_x_tau(x, phi, &one, &d, None)?;
        worst = worst.max((g.cos_omega() - straight_cos_omega(x, phi)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((disc_weight_closed_form(0.0).unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((disc_weight_closed_form(0.5).unwrap() - 10.882796).abs() < 1e-6);
        assert!((disc_weight_closed_form(0.75).unwrap() - 16.623746).abs() < 1e-6);
        assert!(disc_weight_closed_form(1.0).is_err());
    }

    #[test]
    fn quadrature_at_centre_and_against_straight_line_value() {
        assert!((disc_weight_quadrature(0.0, 7).unwrap() - 2.0 * PI).abs() < 1e-10);
        for r in [0.25, 0.5, 0.75, 0.9] {
            let q = disc_weight_quadrature(r, 4096).unwrap();
            assert!((q - disc_weight_straight_line(r).unwrap()).abs() < 1e-10 * q);
        }
    }

    #[test]
    fn finite_difference_cosine_matches_geometry() {
        assert!(cos_omega_consistency(100, 7).unwrap() < 1e-6);
    }
}
