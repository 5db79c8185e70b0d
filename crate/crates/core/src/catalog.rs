//! Standard media, perturbations and pairs used by the experiments.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::Domain;
use crate::media::{BicubicGrid, BoundaryCutoff, Bump, MediumKind, Profile, RefractionField, ScalarField, CUTOFF_WIDTH_FRACTION};

fn cutoff(domain: &Domain) -> Option<BoundaryCutoff> {
    Some(BoundaryCutoff::for_domain(domain, CUTOFF_WIDTH_FRACTION))
}

fn bumps(domain: &Domain, list: Vec<Bump>) -> Profile {
    Profile::Bumps {
        bumps: list,
        cutoff: cutoff(domain),
    }
}

/// Bump of amplitude `a` at (0.3, 0) with σ = 0.25, cut off at Γ.
pub fn standard_bump(domain: &Domain, a: f64) -> ScalarField {
    ScalarField::new(bumps(domain, vec![Bump::new(a, (0.3, 0.0), 0.25)]), domain)
}

/// Negative bump at (−0.25, 0.3) with σ = 0.2, cut off at Γ.
pub fn second_bump(domain: &Domain) -> ScalarField {
    ScalarField::new(bumps(domain, vec![Bump::new(-0.08, (-0.25, 0.3), 0.2)]), domain)
}

pub fn constant(domain: &Domain) -> Result<RefractionField> {
    RefractionField::constant(1.0, domain)
}

/// 1 + 0.2|x|².
pub fn radial(domain: &Domain) -> Result<RefractionField> {
    RefractionField::new(Profile::Radial(vec![1.0, 0.2]), MediumKind::RadialPolynomial, domain)
}

/// 1 + standard bump of amplitude 0.1.
pub fn bump(domain: &Domain) -> Result<RefractionField> {
    constant(domain)?.perturbed(&standard_bump(domain, 1.0), 0.1, domain)
}

/// The standard bump plus [`second_bump`].
pub fn two_bumps(domain: &Domain) -> Result<RefractionField> {
    bump(domain)?.perturbed(&second_bump(domain), 1.0, domain)
}

/// 1 + 0.2|x|² + standard bump of amplitude 0.1.
pub fn radial_bump(domain: &Domain) -> Result<RefractionField> {
    radial(domain)?.perturbed(&standard_bump(domain, 1.0), 0.1, domain)
}

/// Smooth field on a 12 × 12 knot grid over [−1.2, 1.2]².
pub fn grid_spline(domain: &Domain) -> Result<RefractionField> {
    let mut knots = Vec::new();
    for j in 0..12 {
        for i in 0..12 {
            let x = -1.2 + 2.4 * i as f64 / 11.0;
            let y = -1.2 + 2.4 * j as f64 / 11.0;
            knots.push((x, y, 1.0 + 0.1 * (x * 1.3).sin() * (y * 0.7).cos()));
        }
    }
    RefractionField::new(
        Profile::Grid(Arc::new(BicubicGrid::from_samples(&knots)?)),
        MediumKind::GridSpline,
        domain,
    )
}

/// Named catalog media.
pub fn media(domain: &Domain) -> Result<Vec<(&'static str, RefractionField)>> {
    Ok(vec![
        ("constant", constant(domain)?),
        ("radial", radial(domain)?),
        ("bump", bump(domain)?),
        ("two_bumps", two_bumps(domain)?),
        ("radial_bump", radial_bump(domain)?),
        ("grid_spline", grid_spline(domain)?),
    ])
}

/// Pairs that agree on Γ: constant vs bump, bump vs two bumps, radial vs
/// radial + bump. The first is the standard bump pair.
pub fn boundary_matched_pairs(domain: &Domain) -> Result<Vec<(&'static str, RefractionField, RefractionField)>> {
    Ok(vec![
        ("constant-vs-bump", constant(domain)?, bump(domain)?),
        ("bump-vs-two-bumps", bump(domain)?, two_bumps(domain)?),
        ("radial-vs-radial+bump", radial(domain)?, radial_bump(domain)?),
    ])
}

/// (n, f) pairs with f vanishing on Γ.
pub fn perturbation_pairs(domain: &Domain) -> Result<Vec<(&'static str, RefractionField, ScalarField)>> {
    Ok(vec![
        ("constant+bump", constant(domain)?, standard_bump(domain, 1.0)),
        ("radial+second", radial(domain)?, second_bump(domain)),
        ("bump+second", bump(domain)?, second_bump(domain)),
    ])
}
