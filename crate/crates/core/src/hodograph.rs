//! Travel times on the sphere bundle, their x-gradient, boundary hodograph
//! tables indexed by (s, φ), and exit-angle recovery from two-point times.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eta, theta, DirectionClass, Domain, Vec2};
use crate::media::RefractionField;
use crate::ode::StepMode;
use crate::quadrature::{wrap_angle, wrap_signed};
use crate::tracer::{trace_chord, trace_forward, GeodesicPath, PathStatus, Recording, TraceOptions, ON_BOUNDARY_TOL};

/// Cells with ⟨ν|θ⟩ below this are left out of hodograph tables.
pub const TANGENCY_MARGIN: f64 = 0.05;
/// Relative miss of ⟨d_xτ|θ⟩ = n(x) that raises `IdentityViolation`.
pub const IDENTITY_TOL: f64 = 1e-3;
/// Default finite-difference step for `grad_x_tau`, in units of diam(Ω).
pub const GRADIENT_STEP_FACTOR: f64 = 1e-5;
/// Angular finite-difference step for ∂_φτ.
const PHI_STEP: f64 = 1e-5;
/// Overshoot of |sin ψ| beyond 1 that is clamped instead of rejected.
pub const ARCSIN_CLAMP_TOL: f64 = 1e-6;

fn endpoints_options(base: &TraceOptions) -> TraceOptions {
    base.clone().with_recording(Recording::Endpoints)
}

fn check(path: &GeodesicPath, domain: &Domain) -> Result<()> {
    match path.status {
        PathStatus::Trapped => Err(Error::Trapped {
            length: path.last().sigma,
            cap: crate::tracer::LENGTH_CAP_FACTOR * domain.diameter(),
        }),
        PathStatus::Tangent => Err(Error::TangentExit {
            cosine: path.exit.map(|h| h.cosine.abs()).unwrap_or(0.0),
        }),
        _ => Ok(()),
    }
}

/// Backward half-ray from `x`: travel time and the integrator step sequence.
fn backward_shot(
    x: Vec2,
    phi: f64,
    field: &RefractionField,
    domain: &Domain,
    opts: &TraceOptions,
) -> Result<(f64, Vec<f64>, f64)> {
    let p = trace_forward(x, phi + PI, field, domain, opts);
    check(&p, domain)?;
    let hit = p.exit.expect("exit present");
    Ok((hit.tau, p.steps, hit.s))
}

/// Travel time τ(x, θ(φ)).
///
/// Interior points use the backward trace. On Γ, incoming directions give the
/// travel time of the chord they start and outgoing or tangent directions
/// give 0.
pub fn tau_at(x: Vec2, phi: f64, field: &RefractionField, domain: &Domain) -> Result<f64> {
    tau_at_with(x, phi, field, domain, &TraceOptions::default())
}

pub fn tau_at_with(
    x: Vec2,
    phi: f64,
    field: &RefractionField,
    domain: &Domain,
    opts: &TraceOptions,
) -> Result<f64> {
    let b = domain.signed_boundary_function(&x);
    if b > ON_BOUNDARY_TOL {
        return Err(Error::InvalidArgument(format!(
            "point ({}, {}) lies outside the domain",
            x.x, x.y
        )));
    }
    let opts = endpoints_options(opts);
    if b.abs() <= ON_BOUNDARY_TOL {
        let s = domain.boundary().arc_length_at(&x);
        return match domain.classify_direction(s, phi) {
            DirectionClass::Incoming => Ok(trace_chord(s, phi, field, domain, &opts)?.travel_time()),
            _ => Ok(0.0),
        };
    }
    Ok(backward_shot(x, phi, field, domain, &opts)?.0)
}

/// Finite-difference x-gradient of τ with the derived angle ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub x: Vec2,
    pub phi: f64,
    pub tau: f64,
    pub dtau: Vec2,
    pub e: Vec2,
    pub omega: f64,
    pub n_at_x: f64,
    pub entry_s: f64,
    /// ∂τ/∂φ at fixed x.
    pub dphi_tau: f64,
    /// Ray curvature dφ/dσ = ⟨∇n, η̂⟩/n at x.
    pub kappa: f64,
}

impl GradientSample {
    pub fn cos_omega(&self) -> f64 {
        self.omega.cos()
    }

    /// ⟨d_xτ|θ⟩ / n(x). Equals 1 for straight rays; bent rays pick up the
    /// term κ·∂_φτ, see [`Self::flow_identity_ratio`].
    pub fn identity_ratio(&self) -> f64 {
        self.dtau.dot(&theta(self.phi)) / self.n_at_x
    }

    /// (⟨d_xτ|θ⟩ + κ·∂_φτ) / n(x): the derivative of τ along the geodesic
    /// flow, exactly 1 for every medium.
    pub fn flow_identity_ratio(&self) -> f64 {
        (self.dtau.dot(&theta(self.phi)) + self.kappa * self.dphi_tau) / self.n_at_x
    }

    /// `n/cos ω`, which equals |d_xτ|.
    pub fn slowness_ratio(&self) -> f64 {
        self.n_at_x / self.omega.cos()
    }
}

/// Central differences of τ in x¹ and x² with step `h` (default
/// `1e-5·diam`) and one Richardson refinement, plus ∂_φτ.
///
/// Fails with `IdentityViolation` when the flow identity
/// ⟨d_xτ|θ⟩ + κ·∂_φτ = n misses by more than `IDENTITY_TOL`, which signals
/// step-size or branch trouble.
///
/// The displaced rays replay the integrator steps of the unperturbed ray, so
/// the differenced travel times are smooth in the start point.
pub fn grad_x_tau(
    x: Vec2,
    phi: f64,
    field: &RefractionField,
    domain: &Domain,
    h: Option<f64>,
) -> Result<GradientSample> {
    grad_x_tau_with(x, phi, field, domain, h, &TraceOptions::default())
}

pub fn grad_x_tau_with(
    x: Vec2,
    phi: f64,
    field: &RefractionField,
    domain: &Domain,
    h: Option<f64>,
    opts: &TraceOptions,
) -> Result<GradientSample> {
    let h = h.unwrap_or(GRADIENT_STEP_FACTOR * domain.diameter());
    if domain.distance_to_boundary(&x) <= 2.0 * h {
        return Err(Error::InvalidArgument(format!(
            "point ({}, {}) is within 2h = {} of the boundary",
            x.x,
            x.y,
            2.0 * h
        )));
    }
    let opts = endpoints_options(opts);
    let (tau, steps, entry_s) = backward_shot(x, phi, field, domain, &opts)?;
    let replay = opts.clone().with_step_mode(StepMode::Replay(steps));
    let t = |p: Vec2| backward_shot(p, phi, field, domain, &replay).map(|r| r.0);
    let tp = |a: f64| backward_shot(x, a, field, domain, &replay).map(|r| r.0);
    let mut d = [Vec2::zeros(); 2];
    for (slot, hh) in d.iter_mut().zip([h, 0.5 * h]) {
        let ex = Vec2::new(hh, 0.0);
        let ey = Vec2::new(0.0, hh);
        *slot = Vec2::new(
            (t(x + ex)? - t(x - ex)?) / (2.0 * hh),
            (t(x + ey)? - t(x - ey)?) / (2.0 * hh),
        );
    }
    let dtau = (4.0 * d[1] - d[0]) / 3.0;
    let dphi_tau = (tp(phi + PHI_STEP)? - tp(phi - PHI_STEP)?) / (2.0 * PHI_STEP);
    let (n, grad_n) = field.n_and_grad(&x);
    let sample = GradientSample {
        x,
        phi,
        tau,
        dtau,
        e: dtau / dtau.norm(),
        omega: dtau.dot(&eta(phi)).atan2(dtau.dot(&theta(phi))),
        n_at_x: n,
        entry_s,
        dphi_tau,
        kappa: eta(phi).dot(&grad_n) / n,
    };
    let ratio = sample.flow_identity_ratio();
    if !((ratio - 1.0).abs() <= IDENTITY_TOL) {
        return Err(Error::IdentityViolation { ratio });
    }
    Ok(sample)
}

/// Travel times τ(s_i, φ_j) on the boundary sphere bundle.
///
/// Cell `(i, j)` is live when ⟨ν(s_i)|θ(φ_j)⟩ ≥ `tangency_margin`; other
/// cells hold τ = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HodographTable {
    pub ns: usize,
    pub nphi: usize,
    pub total_length: f64,
    pub tangency_margin: f64,
    pub tau: Vec<f64>,
    pub live: Vec<bool>,
    pub cosine: Vec<f64>,
    pub exit_s: Vec<f64>,
    pub exit_phi: Vec<f64>,
}

impl HodographTable {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nphi + j
    }

    pub fn s(&self, i: usize) -> f64 {
        self.total_length * i as f64 / self.ns as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.nphi as f64
    }

    pub fn delta_s(&self) -> f64 {
        self.total_length / self.ns as f64
    }

    pub fn delta_phi(&self) -> f64 {
        2.0 * PI / self.nphi as f64
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tau[self.index(i, j)]
    }

    pub fn is_live(&self, i: usize, j: usize) -> bool {
        self.live[self.index(i, j)]
    }

    pub fn live_count(&self) -> usize {
        self.live.iter().filter(|&&b| b).count()
    }

    /// Elementwise scaling, as produced by a conformally scaled medium.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut t = self.clone();
        t.tau.iter_mut().for_each(|v| *v *= lambda);
        t
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.ns == other.ns
            && self.nphi == other.nphi
            && (self.total_length - other.total_length).abs() <= 1e-12 * self.total_length
            && self.live == other.live
    }
}

/// Hodograph table of `field` on an `ns × nphi` grid.
pub fn build_hodograph(
    field: &RefractionField,
    domain: &Domain,
    ns: usize,
    nphi: usize,
) -> Result<HodographTable> {
    build_hodograph_with(field, domain, ns, nphi, &TraceOptions::default())
}

pub fn build_hodograph_with(
    field: &RefractionField,
    domain: &Domain,
    ns: usize,
    nphi: usize,
    opts: &TraceOptions,
) -> Result<HodographTable> {
    if ns < 5 || nphi < 5 {
        return Err(Error::InvalidArgument(format!(
            "hodograph grid {ns}x{nphi} is too small (need at least 5x5)"
        )));
    }
    let opts = endpoints_options(opts);
    let l = domain.boundary().total_length();
    let cells: Vec<(usize, usize)> = (0..ns).flat_map(|i| (0..nphi).map(move |j| (i, j))).collect();
    let rows: Vec<Result<(f64, bool, f64, f64, f64)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let s = l * i as f64 / ns as f64;
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            let cosine = domain.boundary().inward_conormal(s).dot(&theta(phi));
            if cosine < TANGENCY_MARGIN {
                return Ok((0.0, false, cosine, f64::NAN, f64::NAN));
            }
            let p = trace_chord(s, phi, field, domain, &opts).map_err(|e| e.at_cell(i, j))?;
            let hit = p.exit.expect("chord has an exit");
            Ok((p.travel_time(), true, cosine, hit.s, hit.phi))
        })
        .collect();
    let mut t = HodographTable {
        ns,
        nphi,
        total_length: l,
        tangency_margin: TANGENCY_MARGIN,
        tau: Vec::with_capacity(ns * nphi),
        live: Vec::with_capacity(ns * nphi),
        cosine: Vec::with_capacity(ns * nphi),
        exit_s: Vec::with_capacity(ns * nphi),
        exit_phi: Vec::with_capacity(ns * nphi),
    };
    for r in rows {
        let (tau, live, c, es, ep) = r?;
        t.tau.push(tau);
        t.live.push(live);
        t.cosine.push(c);
        t.exit_s.push(es);
        t.exit_phi.push(ep);
    }
    Ok(t)
}

/// Periodic fourth-order central difference along one axis of a row-major
/// `ns × nphi` array, with stencil spacing `stride` grid cells.
pub(crate) fn periodic_derivative(
    values: &[f64],
    ns: usize,
    nphi: usize,
    along_s: bool,
    spacing: f64,
    stride: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; ns * nphi];
    let h = spacing * stride as f64;
    for i in 0..ns {
        for j in 0..nphi {
            let at = |k: isize| {
                if along_s {
                    let ii = (i as isize + k * stride as isize).rem_euclid(ns as isize) as usize;
                    values[ii * nphi + j]
                } else {
                    let jj = (j as isize + k * stride as isize).rem_euclid(nphi as isize) as usize;
                    values[i * nphi + jj]
                }
            };
            out[i * nphi + j] = (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
        }
    }
    out
}

/// ρ = τ₂ − τ₁ on a common hodograph grid, with boundary derivatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoTable {
    pub ns: usize,
    pub nphi: usize,
    pub total_length: f64,
    pub tangency_margin: f64,
    pub rho: Vec<f64>,
    pub d_s_rho: Vec<f64>,
    pub d_phi_rho: Vec<f64>,
    pub live: Vec<bool>,
}

impl RhoTable {
    /// Build from a raw difference array; entries on dead cells are zeroed.
    pub fn from_values(
        ns: usize,
        nphi: usize,
        total_length: f64,
        tangency_margin: f64,
        mut rho: Vec<f64>,
        live: Vec<bool>,
    ) -> Self {
        for (v, &l) in rho.iter_mut().zip(&live) {
            if !l {
                *v = 0.0;
            }
        }
        let ds = total_length / ns as f64;
        let dphi = 2.0 * PI / nphi as f64;
        let d_s_rho = periodic_derivative(&rho, ns, nphi, true, ds, 1);
        let d_phi_rho = periodic_derivative(&rho, ns, nphi, false, dphi, 1);
        Self {
            ns,
            nphi,
            total_length,
            tangency_margin,
            rho,
            d_s_rho,
            d_phi_rho,
            live,
        }
    }

    pub fn delta_s(&self) -> f64 {
        self.total_length / self.ns as f64
    }

    pub fn delta_phi(&self) -> f64 {
        2.0 * PI / self.nphi as f64
    }

    pub fn sup_abs(&self) -> f64 {
        self.rho.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// ρ = τ₂ − τ₁ for two tables on the same grid.
pub fn build_rho(t1: &HodographTable, t2: &HodographTable) -> Result<RhoTable> {
    if !t1.same_grid(t2) {
        return Err(Error::GridMismatch(format!(
            "{}x{} (L = {}) vs {}x{} (L = {})",
            t1.ns, t1.nphi, t1.total_length, t2.ns, t2.nphi, t2.total_length
        )));
    }
    let rho: Vec<f64> = t2.tau.iter().zip(&t1.tau).map(|(b, a)| b - a).collect();
    Ok(RhoTable::from_values(
        t1.ns,
        t1.nphi,
        t1.total_length,
        t1.tangency_margin,
        rho,
        t1.live.clone(),
    ))
}

/// A geodesic joining two boundary points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointSample {
    pub s_y: f64,
    pub s_x: f64,
    pub travel_time: f64,
    pub entry_phi: f64,
    pub exit_phi: f64,
}

fn wrap_arc(ds: f64, l: f64) -> f64 {
    wrap_signed(ds * 2.0 * PI / l) * l / (2.0 * PI)
}

/// Shoot from `point(s_y)` for the geodesic that exits at `point(s_x)`.
///
/// Secant iteration on the entry direction, starting from the straight
/// chord direction or `guess`.
pub fn shoot_two_point(
    s_y: f64,
    s_x: f64,
    field: &RefractionField,
    domain: &Domain,
    guess: Option<f64>,
) -> Result<TwoPointSample> {
    let b = domain.boundary();
    let l = b.total_length();
    let opts = TraceOptions::default().with_recording(Recording::Endpoints);
    let y = b.point(s_y);
    let x = b.point(s_x);
    let fail = |reason: String| Error::ShootingFailed {
        target: s_x,
        reason,
    };
    let d = x - y;
    if d.norm() < 1e-9 * l {
        return Err(fail("endpoints coincide".into()));
    }
    let residual = |phi: f64| -> Result<(f64, GeodesicPath)> {
        let p = trace_chord(s_y, phi, field, domain, &opts)?;
        let hit = p.exit.expect("chord has an exit");
        Ok((wrap_arc(hit.s - s_x, l), p))
    };
    let nu = b.inward_conormal(s_y);
    let beta = nu.y.atan2(nu.x);
    // stay inside the incoming cone of point(s_y)
    let into_cone = |phi: f64| beta + wrap_signed(phi - beta).clamp(-0.5 * PI + 1e-6, 0.5 * PI - 1e-6);
    let mut p0 = into_cone(guess.unwrap_or_else(|| d.y.atan2(d.x)));
    let (mut r0, _) = residual(p0).map_err(|e| fail(e.to_string()))?;
    let mut p1 = p0 + 1e-4;
    let (mut r1, mut path) = residual(p1).map_err(|e| fail(e.to_string()))?;
    for _ in 0..60 {
        if r1.abs() < 1e-13 * l {
            break;
        }
        if r1 == r0 {
            return Err(fail("secant stalled".into()));
        }
        let p2 = into_cone(p1 - r1 * (p1 - p0) / (r1 - r0));
        p0 = p1;
        r0 = r1;
        p1 = p2;
        (r1, path) = residual(p1).map_err(|e| fail(e.to_string()))?;
    }
    if r1.abs() >= 1e-11 * l {
        return Err(fail(format!("residual {r1:e} after 60 secant steps")));
    }
    let hit = path.exit.expect("chord has an exit");
    Ok(TwoPointSample {
        s_y,
        s_x,
        travel_time: path.travel_time(),
        entry_phi: wrap_angle(p1),
        exit_phi: hit.phi,
    })
}

/// Two-point travel times T(s_y, s_x) from a fixed source over a uniform
/// stencil of receivers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoPointTable {
    pub s_y: f64,
    pub s_x: Vec<f64>,
    pub samples: Vec<TwoPointSample>,
    pub spacing: f64,
}

impl TwoPointTable {
    /// Receivers at `s_center + k·spacing` for `k = -half..=half`.
    pub fn build(
        s_y: f64,
        s_center: f64,
        half: usize,
        spacing: f64,
        field: &RefractionField,
        domain: &Domain,
    ) -> Result<Self> {
        let l = domain.boundary().total_length();
        let s_x: Vec<f64> = (-(half as isize)..=half as isize)
            .map(|k| (s_center + k as f64 * spacing).rem_euclid(l))
            .collect();
        let center = shoot_two_point(s_y, s_x[half], field, domain, None)?;
        let samples = s_x
            .iter()
            .map(|&sx| shoot_two_point(s_y, sx, field, domain, Some(center.entry_phi)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            s_y,
            s_x,
            samples,
            spacing,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.travel_time).collect()
    }
}

/// Exit direction recovered from boundary travel-time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitAngle {
    pub sin_psi: f64,
    pub psi: f64,
    /// Exit direction angle φ = ψ + β + π, β = arg ν(x).
    pub phi: f64,
    pub clamped: bool,
}

/// `sin ψ = (1/n(x))·∂T/∂s_x` by a central difference at the middle node of
/// `table` (five-point stencil when the table has at least five nodes).
pub fn exit_angle_from_hodograph(
    table: &TwoPointTable,
    field: &RefractionField,
    domain: &Domain,
) -> Result<ExitAngle> {
    let t = table.times();
    let m = t.len() / 2;
    let h = table.spacing;
    let dt = if t.len() >= 5 {
        (t[m - 2] - 8.0 * t[m - 1] + 8.0 * t[m + 1] - t[m + 2]) / (12.0 * h)
    } else if t.len() >= 3 {
        (t[m + 1] - t[m - 1]) / (2.0 * h)
    } else {
        return Err(Error::GridTooCoarse("two-point table needs at least 3 receivers".into()));
    };
    let s_x = table.s_x[m];
    let x = domain.boundary().point(s_x);
    let raw = dt / field.n(&x);
    if raw.abs() > 1.0 + ARCSIN_CLAMP_TOL {
        return Err(Error::OutOfRange { value: raw });
    }
    let clamped = raw.abs() > 1.0;
    let sin_psi = raw.clamp(-1.0, 1.0);
    let psi = sin_psi.asin();
    let nu = domain.boundary().inward_conormal(s_x);
    let beta = nu.y.atan2(nu.x);
    Ok(ExitAngle {
        sin_psi,
        psi,
        phi: wrap_angle(psi + beta + PI),
        clamped,
    })
}
