//! Geodesics of `n²·ds²` parameterized by Euclidean arc length σ.
//!
//! State `(x¹, x², φ, τ)` with `dx/dσ = θ(φ)`, `dφ/dσ = ⟨∇n, η̂⟩/n` and
//! `dτ/dσ = n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eta, theta, DirectionClass, Domain, Vec2};
use crate::media::RefractionField;
use crate::ode::{Dopri5, StepMode, StepRecord, Termination};
use crate::quadrature::wrap_angle;

/// Minimum |⟨ν|θ⟩| at an exit for the ray to count as transversal.
pub const EXIT_COSINE_MIN: f64 = 0.01;
/// Trapped cap on σ, in units of diam(Ω).
pub const LENGTH_CAP_FACTOR: f64 = 50.0;
/// Largest step, in units of diam(Ω).
pub const MAX_STEP_FACTOR: f64 = 0.0125;
/// Points closer to Γ than this (in signed boundary function) count as on Γ.
pub const ON_BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayState {
    pub x: Vec2,
    pub phi: f64,
    pub tau: f64,
    pub sigma: f64,
}

impl RayState {
    pub fn direction(&self) -> Vec2 {
        theta(self.phi)
    }
}

/// Right-hand side of the ray equations: `(dx/dσ, dφ/dσ, dτ/dσ)`.
pub fn ray_rhs(state: &RayState, field: &RefractionField) -> (Vec2, f64, f64) {
    let (n, g) = field.n_and_grad(&state.x);
    (theta(state.phi), eta(state.phi).dot(&g) / n, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    InteriorTerminal,
    BoundaryToBoundary,
    Tangent,
    Trapped,
}

/// Where a forward integration met Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryHit {
    pub s: f64,
    pub point: Vec2,
    pub phi: f64,
    /// ⟨ν|θ⟩ at the hit; negative for a genuine exit.
    pub cosine: f64,
    pub sigma: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recording {
    Endpoints,
    AcceptPoints,
    /// Accept points plus dense-output fill so that consecutive nodes are at
    /// most `max_spacing` apart in σ.
    Dense { max_spacing: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions {
    pub rtol: f64,
    pub atol: f64,
    pub recording: Recording,
    /// `None` selects adaptive stepping.
    pub step_mode: Option<StepMode>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            recording: Recording::AcceptPoints,
            step_mode: None,
        }
    }
}

impl TraceOptions {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self.atol = rtol * 1e-3;
        self
    }

    pub fn with_recording(mut self, recording: Recording) -> Self {
        self.recording = recording;
        self
    }

    pub fn with_step_mode(mut self, mode: StepMode) -> Self {
        self.step_mode = Some(mode);
        self
    }
}

/// A traced ray. For chords and backward traces the nodes run from the entry
/// point y ∈ Γ to the terminal point, with τ = 0 at the first node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub nodes: Vec<RayState>,
    pub entry_s: f64,
    /// ⟨ν(y)|θ⟩ at the entry point.
    pub entry_cosine: f64,
    /// Exit data for boundary-to-boundary paths.
    pub exit: Option<BoundaryHit>,
    pub status: PathStatus,
    /// Sizes of the integrator steps, for replay.
    #[serde(skip)]
    pub steps: Vec<f64>,
}

impl GeodesicPath {
    pub fn first(&self) -> &RayState {
        &self.nodes[0]
    }

    pub fn last(&self) -> &RayState {
        self.nodes.last().expect("path has nodes")
    }

    /// Travel time at the terminal node.
    pub fn travel_time(&self) -> f64 {
        self.last().tau
    }

    pub fn length(&self) -> f64 {
        self.last().sigma - self.first().sigma
    }

    /// Trapezoidal ∫ n dσ over the recorded nodes.
    pub fn trapezoid_travel_time(&self, field: &RefractionField) -> f64 {
        let mut acc = crate::quadrature::CompensatedSum::new();
        for w in self.nodes.windows(2) {
            let ds = w[1].sigma - w[0].sigma;
            acc.add(0.5 * ds * (field.n(&w[0].x) + field.n(&w[1].x)));
        }
        acc.value()
    }
}

/// Raw output of one forward integration of an augmented ray system.
#[derive(Debug, Clone)]
pub(crate) struct RawShot<const N: usize> {
    pub samples: Vec<(f64, [f64; N])>,
    pub termination: Termination<N>,
    pub steps: Vec<f64>,
}

pub(crate) fn ray_derivative(field: &RefractionField, y: &[f64]) -> [f64; 4] {
    let x = Vec2::new(y[0], y[1]);
    let (n, g) = field.n_and_grad(&x);
    let (s, c) = y[2].sin_cos();
    [c, s, (-s * g.x + c * g.y) / n, n]
}

/// Integrate an augmented system whose first three components are
/// `(x¹, x², φ)` until it leaves Ω or hits the length cap.
pub(crate) fn run_system<const N: usize, F>(
    f: F,
    y0: [f64; N],
    error_mask: [bool; N],
    domain: &Domain,
    opts: &TraceOptions,
) -> RawShot<N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let diam = domain.diameter();
    let h_max = MAX_STEP_FACTOR * diam;
    let mode = opts
        .step_mode
        .clone()
        .unwrap_or(StepMode::Adaptive { h0: 1e-3 * diam });
    let solver = Dopri5::<N>::new(opts.rtol, opts.atol, h_max, mode).with_error_mask(error_mask);
    let mut samples: Vec<(f64, [f64; N])> = vec![(0.0, y0)];
    let recording = opts.recording;
    let run = solver.integrate(
        f,
        y0,
        LENGTH_CAP_FACTOR * diam,
        |y| domain.signed_boundary_function(&Vec2::new(y[0], y[1])),
        |rec: &StepRecord<N>| match recording {
            Recording::Endpoints => {}
            Recording::AcceptPoints => samples.push((rec.t0 + rec.h, rec.y1)),
            Recording::Dense { max_spacing } => {
                let m = (rec.h / max_spacing).ceil().max(1.0) as usize;
                for k in 1..m {
                    let th = k as f64 / m as f64;
                    samples.push((rec.t0 + th * rec.h, rec.dense(th)));
                }
                samples.push((rec.t0 + rec.h, rec.y1));
            }
        },
    );
    if recording == Recording::Endpoints {
        match &run.termination {
            Termination::Event { t, y } | Termination::Horizon { t, y } | Termination::Failed { t, y, .. } => {
                samples.push((*t, *y))
            }
        }
    }
    RawShot {
        samples,
        termination: run.termination,
        steps: run.steps,
    }
}

fn hit_from<const N: usize>(domain: &Domain, t: f64, y: &[f64; N]) -> BoundaryHit {
    let point = Vec2::new(y[0], y[1]);
    let s = domain.boundary().arc_length_at(&point);
    let nu = domain.boundary().inward_conormal(s);
    BoundaryHit {
        s,
        point,
        phi: wrap_angle(y[2]),
        cosine: nu.dot(&theta(y[2])),
        sigma: t,
        tau: y[3],
    }
}

/// Forward trace from a phase point until the ray leaves Ω.
///
/// Never fails; problems are reported through `status`. Nodes run forward
/// from the start, with τ = σ = 0 there.
pub fn trace_forward(
    x: Vec2,
    phi: f64,
    field: &RefractionField,
    domain: &Domain,
    opts: &TraceOptions,
) -> GeodesicPath {
    let raw = run_system(
        |y: &[f64; 4]| ray_derivative(field, y),
        [x.x, x.y, phi, 0.0],
        [true, true, true, false],
        domain,
        opts,
    );
    let nodes: Vec<RayState> = raw
        .samples
        .iter()
        .map(|(t, y)| RayState {
            x: Vec2::new(y[0], y[1]),
            phi: y[2],
            tau: y[3],
            sigma: *t,
        })
        .collect();
    let start_on_boundary = domain.signed_boundary_function(&x) >= -ON_BOUNDARY_TOL;
    let (entry_s, entry_cosine) = if start_on_boundary {
        let s = domain.boundary().arc_length_at(&x);
        (s, domain.boundary().inward_conormal(s).dot(&theta(phi)))
    } else {
        (f64::NAN, f64::NAN)
    };
    let (exit, status) = match &raw.termination {
        Termination::Event { t, y } => {
            let hit = hit_from(domain, *t, y);
            let status = if hit.cosine.abs() < EXIT_COSINE_MIN {
                PathStatus::Tangent
            } else if start_on_boundary {
                PathStatus::BoundaryToBoundary
            } else {
                PathStatus::InteriorTerminal
            };
            (Some(hit), status)
        }
        Termination::Horizon { .. } | Termination::Failed { .. } => (None, PathStatus::Trapped),
    };
    GeodesicPath {
        nodes,
        entry_s,
        entry_cosine,
        exit,
        status,
        steps: raw.steps,
    }
}

fn check_status(path: &GeodesicPath, domain: &Domain) -> Result<()> {
    match path.status {
        PathStatus::Trapped => Err(Error::Trapped {
            length: path.last().sigma,
            cap: LENGTH_CAP_FACTOR * domain.diameter(),
        }),
        PathStatus::Tangent => Err(Error::TangentExit {
            cosine: path.exit.map(|h| h.cosine.abs()).unwrap_or(0.0),
        }),
        _ => Ok(()),
    }
}

/// The geodesic arriving at `x` with direction `θ(φ)`, traced from its entry
/// point y ∈ Γ. The terminal τ is the travel time τ(x, θ).
pub fn trace_backward(
    x: Vec2,
    phi: f64,
    field: &RefractionField,
    domain: &Domain,
    opts: &TraceOptions,
) -> Result<GeodesicPath> {
    if domain.signed_boundary_function(&x) > ON_BOUNDARY_TOL {
        return Err(Error::InvalidArgument(format!(
            "trace_backward start ({}, {}) lies outside the domain",
            x.x, x.y
        )));
    }
    let back = trace_forward(x, phi + std::f64::consts::PI, field, domain, opts);
    check_status(&back, domain)?;
    let hit = back.exit.expect("exit present for non-trapped path");
    let (tau_total, sigma_total) = (hit.tau, hit.sigma);
    let nodes: Vec<RayState> = back
        .nodes
        .iter()
        .rev()
        .map(|r| RayState {
            x: r.x,
            phi: wrap_angle(r.phi + std::f64::consts::PI),
            tau: tau_total - r.tau,
            sigma: sigma_total - r.sigma,
        })
        .collect();
    Ok(GeodesicPath {
        nodes,
        entry_s: hit.s,
        entry_cosine: -hit.cosine,
        exit: None,
        status: PathStatus::InteriorTerminal,
        steps: back.steps,
    })
}

/// Boundary-to-boundary geodesic entering at arc length `s` with direction φ.
pub fn trace_chord(
    s: f64,
    phi: f64,
    field: &RefractionField,
    domain: &Domain,
    opts: &TraceOptions,
) -> Result<GeodesicPath> {
    let s = s.rem_euclid(domain.boundary().total_length());
    if domain.classify_direction(s, phi) != DirectionClass::Incoming {
        return Err(Error::NotIncoming {
            s,
            phi,
            cosine: domain.boundary().inward_conormal(s).dot(&theta(phi)),
        });
    }
    let y = domain.boundary().point(s);
    let mut path = trace_forward(y, phi, field, domain, opts);
    path.entry_s = s;
    path.entry_cosine = domain.boundary().inward_conormal(s).dot(&theta(phi));
    check_status(&path, domain)?;
    path.status = PathStatus::BoundaryToBoundary;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::unit_disc;
    use crate::media::{BoundaryCutoff, Bump, MediumKind, Profile, CUTOFF_WIDTH_FRACTION};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn bump_medium(d: &Domain) -> RefractionField {
        RefractionField::new(
            Profile::Sum(vec![
                Profile::Constant(1.0),
                Profile::Bumps {
                    bumps: vec![Bump::new(0.1, (0.3, 0.0), 0.25)],
                    cutoff: Some(BoundaryCutoff::for_domain(d, CUTOFF_WIDTH_FRACTION)),
                },
            ]),
            MediumKind::GaussianBumps,
            d,
        )
        .unwrap()
    }

    #[test]
    fn rhs_examples() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let st = RayState {
            x: Vec2::new(0.2, 0.1),
            phi: 0.7,
            tau: 0.0,
            sigma: 0.0,
        };
        let (_, dphi, dtau) = ray_rhs(&st, &one);
        assert_eq!((dphi, dtau), (0.0, 1.0));
        let quad = RefractionField::new(Profile::Radial(vec![1.0, 0.2]), MediumKind::RadialPolynomial, &d).unwrap();
        let st = RayState {
            x: Vec2::new(0.5, 0.0),
            phi: PI / 2.0,
            ..st
        };
        let (_, dphi, _) = ray_rhs(&st, &quad);
        assert!((dphi + 0.2 / 1.05).abs() < 1e-15);
        // moving along the gradient: no bending
        let st = RayState { phi: 0.0, ..st };
        assert!(ray_rhs(&st, &quad).1.abs() < 1e-16);
    }

    #[test]
    fn straight_backward_traces() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let o = TraceOptions::default();
        let p = trace_backward(Vec2::zeros(), 0.0, &one, &d, &o).unwrap();
        assert!((p.first().x - Vec2::new(-1.0, 0.0)).norm() < 1e-10);
        assert!((p.travel_time() - 1.0).abs() < 1e-10);
        assert_eq!(p.first().tau, 0.0);
        let p = trace_backward(Vec2::new(0.5, 0.0), PI / 2.0, &one, &d, &o).unwrap();
        assert!((p.first().x - Vec2::new(0.5, -0.75f64.sqrt())).norm() < 1e-10);
        assert!((p.travel_time() - 0.75f64.sqrt()).abs() < 1e-10);
        assert!((p.entry_cosine - 0.75f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn chords_of_the_unit_circle() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let o = TraceOptions::default();
        let p = trace_chord(PI, 0.0, &one, &d, &o).unwrap();
        let exit = p.exit.unwrap();
        assert!(exit.s.min(2.0 * PI - exit.s) < 1e-9);
        assert!((p.travel_time() - 2.0).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s1 = rng.gen_range(0.0..2.0 * PI);
            // incoming directions make an angle < π/2 with ν = −(cos s, sin s)
            let phi = s1 + PI + rng.gen_range(-1.5..1.5);
            let p = trace_chord(s1, phi, &one, &d, &o).unwrap();
            let s2 = p.exit.unwrap().s;
            let expected = 2.0 * ((s2 - s1).abs() / 2.0).sin().abs();
            assert!((p.travel_time() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_medium_is_fermat_exact() {
        let d = unit_disc();
        let c = RefractionField::constant(2.5, &d).unwrap();
        let p = trace_chord(1.0, 1.0 + PI + 0.4, &c, &d, &TraceOptions::default()).unwrap();
        let chord = (p.last().x - p.first().x).norm();
        assert!((p.travel_time() - 2.5 * chord).abs() < 1e-10);
    }

    #[test]
    fn not_incoming_is_rejected() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let err = trace_chord(0.0, 0.0, &one, &d, &TraceOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotIncoming { .. }));
    }

    #[test]
    fn bump_trace_time_reversal_and_trapezoid() {
        let d = unit_disc();
        let n = bump_medium(&d);
        let o = TraceOptions::default();
        let p = trace_chord(PI + 0.2, 0.1, &n, &d, &o).unwrap();
        let hit = p.exit.unwrap();
        let back = trace_backward(hit.point, hit.phi, &n, &d, &o).unwrap();
        assert!((back.travel_time() - p.travel_time()).abs() < 1e-8);
        let rev = trace_chord(hit.s, hit.phi + PI, &n, &d, &o).unwrap();
        assert!((rev.travel_time() - p.travel_time()).abs() < 1e-8);
        assert!((rev.exit.unwrap().point - p.first().x).norm() < 1e-8);

        let dense = o.clone().with_recording(Recording::Dense { max_spacing: 2.5e-4 });
        let p = trace_backward(Vec2::new(0.1, 0.2), 0.4, &n, &d, &dense).unwrap();
        assert!(d.signed_boundary_function(&p.first().x).abs() < 1e-10);
        let trap = p.trapezoid_travel_time(&n);
        assert!((trap - p.travel_time()).abs() / p.travel_time() < 1e-7);
        assert!(p.nodes.windows(2).all(|w| w[1].tau > w[0].tau));
    }

    #[test]
    fn conformal_scaling_leaves_paths_unchanged() {
        let d = unit_disc();
        let n = bump_medium(&d);
        let n3 = n.scaled(3.0).unwrap();
        let o = TraceOptions::default();
        let a = trace_chord(2.0, 2.0 + PI - 0.3, &n, &d, &o).unwrap();
        let b = trace_chord(2.0, 2.0 + PI - 0.3, &n3, &d, &o).unwrap();
        assert_eq!(a.nodes.len(), b.nodes.len());
        for (u, v) in a.nodes.iter().zip(&b.nodes) {
            assert!((u.x - v.x).norm() < 1e-10);
        }
        assert!((b.travel_time() - 3.0 * a.travel_time()).abs() < 1e-10 * b.travel_time());
    }
}
