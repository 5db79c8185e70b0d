//! Distinct media give distinguishable hodographs.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Domain;
use crate::hodograph::{build_hodograph, build_hodograph_with, build_rho};
use crate::media::{RefractionField, ScalarField};
use crate::quadrature::ordered_sum;
use crate::tracer::TraceOptions;

use super::bundle::SphereBundleGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// sup |τ₂ − τ₁| over the incoming boundary grid.
    pub hodograph_sup_distance: f64,
    /// ‖n₂ − n₁‖ in L²(Ω).
    pub fields_distance: f64,
    /// sup |τᵢ(rtol) − τᵢ(rtol/10)| over the same grid, larger of the two.
    pub noise_floor: f64,
}

impl UniquenessReport {
    /// Hodograph distance over noise floor.
    pub fn signal_to_noise(&self) -> f64 {
        self.hodograph_sup_distance / self.noise_floor
    }
}

/// ‖n₂ − n₁‖ in L²(Ω).
pub fn field_l2_distance(field1: &RefractionField, field2: &RefractionField, domain: &Domain) -> Result<f64> {
    let g = SphereBundleGrid::polar(domain, 32, 64, 3, 0.0)?;
    let s = ordered_sum(g.nodes.iter().zip(&g.weights).map(|(x, w)| {
        let d = field2.n(x) - field1.n(x);
        w * d * d
    }));
    Ok(s.sqrt())
}

/// Noise floor of `field`'s hodograph: the change when the integrator
/// tolerance drops tenfold.
pub fn hodograph_noise_floor(field: &RefractionField, domain: &Domain, ns: usize, nphi: usize) -> Result<f64> {
    let base = TraceOptions::default();
    let a = build_hodograph_with(field, domain, ns, nphi, &base)?;
    let b = build_hodograph_with(field, domain, ns, nphi, &base.clone().with_rtol(base.rtol / 10.0))?;
    Ok(build_rho(&a, &b)?.sup_abs())
}

pub fn uniqueness_demo(
    field1: &RefractionField,
    field2: &RefractionField,
    domain: &Domain,
    ns: usize,
    nphi: usize,
) -> Result<UniquenessReport> {
    let t1 = build_hodograph(field1, domain, ns, nphi)?;
    let t2 = build_hodograph(field2, domain, ns, nphi)?;
    Ok(UniquenessReport {
        hodograph_sup_distance: build_rho(&t1, &t2)?.sup_abs(),
        fields_distance: field_l2_distance(field1, field2, domain)?,
        noise_floor: hodograph_noise_floor(field1, domain, ns, nphi)?
            .max(hodograph_noise_floor(field2, domain, ns, nphi)?),
    })
}

/// sup |τ_{n + a·f} − τ_n| for each amplitude `a`.
pub fn amplitude_sweep(
    field: &RefractionField,
    f: &ScalarField,
    domain: &Domain,
    amplitudes: &[f64],
    ns: usize,
    nphi: usize,
) -> Result<Vec<(f64, f64)>> {
    let t0 = build_hodograph(field, domain, ns, nphi)?;
    amplitudes
        .iter()
        .map(|&a| {
            let t = build_hodograph(&field.perturbed(f, a, domain)?, domain, ns, nphi)?;
            Ok((a, build_rho(&t0, &t)?.sup_abs()))
        })
        .collect()
}

/// Whether the distances grow strictly with amplitude.
pub fn is_monotone(sweep: &[(f64, f64)]) -> bool {
    sweep.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1)
}
