//! Line integrals along traced chords and first variations of chord travel
//! times under `n → n + c·b`.

use crate::error::{Error, Result};
use crate::geometry::{theta, DirectionClass, Domain, Vec2};
use crate::media::{Profile, RefractionField};
use crate::ode::Termination;
use crate::tracer::{run_system, Recording, TraceOptions, EXIT_COSINE_MIN, LENGTH_CAP_FACTOR};

fn require_incoming(s: f64, phi: f64, domain: &Domain) -> Result<f64> {
    let s = s.rem_euclid(domain.boundary().total_length());
    if domain.classify_direction(s, phi) != DirectionClass::Incoming {
        return Err(Error::NotIncoming {
            s,
            phi,
            cosine: domain.boundary().inward_conormal(s).dot(&theta(phi)),
        });
    }
    Ok(s)
}

fn exit_state<const N: usize>(
    termination: &Termination<N>,
    domain: &Domain,
) -> Result<[f64; N]> {
    match termination {
        Termination::Event { y, .. } => {
            let x = Vec2::new(y[0], y[1]);
            let s = domain.boundary().arc_length_at(&x);
            let cosine = domain.boundary().inward_conormal(s).dot(&theta(y[2]));
            if cosine.abs() < EXIT_COSINE_MIN {
                return Err(Error::TangentExit {
                    cosine: cosine.abs(),
                });
            }
            Ok(*y)
        }
        Termination::Horizon { t, .. } | Termination::Failed { t, .. } => Err(Error::Trapped {
            length: *t,
            cap: LENGTH_CAP_FACTOR * domain.diameter(),
        }),
    }
}

/// ∫ f dσ along the `field`-geodesic entering at arc length `s` with
/// direction φ, and the chord's travel time.
pub fn integrate_along_chord(
    s: f64,
    phi: f64,
    field: &RefractionField,
    f: &Profile,
    domain: &Domain,
    opts: &TraceOptions,
) -> Result<(f64, f64)> {
    let s = require_incoming(s, phi, domain)?;
    let y = domain.boundary().point(s);
    let opts = opts.clone().with_recording(Recording::Endpoints);
    let raw = run_system(
        |u: &[f64; 5]| {
            let x = Vec2::new(u[0], u[1]);
            let (n, g) = field.n_and_grad(&x);
            let (sn, cs) = u[2].sin_cos();
            [cs, sn, (-sn * g.x + cs * g.y) / n, n, f.value(&x)]
        },
        [y.x, y.y, phi, 0.0, 0.0],
        [true, true, true, false, true],
        domain,
        &opts,
    );
    let end = exit_state(&raw.termination, domain)?;
    Ok((end[4], end[3]))
}

/// Derivative of the chord travel time τ(s, φ) with respect to `c` for the
/// medium `n + c·b`, at c = 0, with entry point and direction held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstVariation {
    /// ∫ b dσ along the unperturbed chord.
    pub along_ray: f64,
    /// Interior part of the sensitivity, ∂τ/∂c at the unperturbed exit σ.
    pub interior: f64,
    /// Change from the exit point sliding along Γ: n(x*)·∂σ*/∂c.
    pub exit_shift: f64,
}

impl FirstVariation {
    pub fn total(&self) -> f64 {
        self.interior + self.exit_shift
    }
}

/// Integrates the ray equations together with their sensitivities
/// `S = ∂(x, φ, τ)/∂c`, `S' = J·S + ∂F/∂c`, `S(0) = 0`.
pub fn first_variation(
    s: f64,
    phi: f64,
    field: &RefractionField,
    b: &Profile,
    domain: &Domain,
    opts: &TraceOptions,
) -> Result<FirstVariation> {
    let s = require_incoming(s, phi, domain)?;
    let y = domain.boundary().point(s);
    let opts = opts.clone().with_recording(Recording::Endpoints);
    let raw = run_system(
        |u: &[f64; 9]| {
            let x = Vec2::new(u[0], u[1]);
            let (n, g, h) = field.n_grad_hessian(&x);
            let (bv, bg) = b.eval(&x);
            let (sn, cs) = u[2].sin_cos();
            let kappa = (-sn * g.x + cs * g.y) / n;
            let dk_dx = (-sn * h[(0, 0)] + cs * h[(1, 0)]) / n - kappa * g.x / n;
            let dk_dy = (-sn * h[(0, 1)] + cs * h[(1, 1)]) / n - kappa * g.y / n;
            let dk_dphi = (-cs * g.x - sn * g.y) / n;
            let src_phi = (-sn * bg.x + cs * bg.y) / n - kappa * bv / n;
            let (sx, sy, sp) = (u[4], u[5], u[6]);
            [
                cs,
                sn,
                kappa,
                n,
                -sn * sp,
                cs * sp,
                dk_dx * sx + dk_dy * sy + dk_dphi * sp + src_phi,
                g.x * sx + g.y * sy + bv,
                bv,
            ]
        },
        [y.x, y.y, phi, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [true, true, true, false, true, true, true, false, true],
        domain,
        &opts,
    );
    let end = exit_state(&raw.termination, domain)?;
    let x = Vec2::new(end[0], end[1]);
    let (_, grad_b) = domain.shape().sbf_with_gradient(&x);
    let dir = theta(end[2]);
    let dsigma = -grad_b.dot(&Vec2::new(end[4], end[5])) / grad_b.dot(&dir);
    Ok(FirstVariation {
        along_ray: end[8],
        interior: end[7],
        exit_shift: field.n(&x) * dsigma,
    })
}
