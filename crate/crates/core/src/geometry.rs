//! The domain Ω ⊂ ℝ², its boundary curve Γ and the angular frame on the
//! circle bundle.
//!
//! Domains are star-shaped with respect to the origin and described in polar
//! form `r(α)`. The boundary is parameterized counterclockwise by arc length
//! `s ∈ [0, L)`, starting at polar angle `α = 0`. The background metric is
//! Euclidean, so the covector frame is simply `θ̂ = (cos φ, sin φ)`,
//! `η̂ = (−sin φ, cos φ)`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_on, wrap_angle};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Tolerance separating incoming/outgoing from tangent directions.
pub const TANGENCY_TOL: f64 = 1e-10;

/// Unit vector of direction angle `phi`.
#[inline]
pub fn theta(phi: f64) -> Vec2 {
    let (s, c) = phi.sin_cos();
    Vec2::new(c, s)
}

/// `θ̂` rotated by +π/2.
#[inline]
pub fn eta(phi: f64) -> Vec2 {
    let (s, c) = phi.sin_cos();
    Vec2::new(-s, c)
}

/// The positively oriented orthonormal covector frame `(θ̂, η̂)` at angle φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularFrame {
    pub phi: f64,
    pub theta_hat: Vec2,
    pub eta_hat: Vec2,
}

impl AngularFrame {
    pub fn at(phi: f64) -> Self {
        Self {
            phi,
            theta_hat: theta(phi),
            eta_hat: eta(phi),
        }
    }

    /// `θ̂ ∧ η̂` evaluated on the coordinate basis; +1 for a positive frame.
    pub fn determinant(&self) -> f64 {
        self.theta_hat.x * self.eta_hat.y - self.theta_hat.y * self.eta_hat.x
    }

    /// Components of a covector in the frame: `(⟨v, θ̂⟩, ⟨v, η̂⟩)`.
    pub fn components(&self, v: &Vec2) -> (f64, f64) {
        (v.dot(&self.theta_hat), v.dot(&self.eta_hat))
    }
}

/// Trigonometric radius profile
/// `r(α) = a0 + Σ_k (a_k cos kα + b_k sin kα)`.
///
/// Coefficients are stored flat as `[a0, a1, b1, a2, b2, ...]`, which is also
/// the `fourier_coeffs` layout accepted in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusProfile {
    coeffs: Vec<f64>,
}

impl RadiusProfile {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidProfile("no Fourier coefficients".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidProfile("non-finite Fourier coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(r: f64) -> Self {
        Self { coeffs: vec![r] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `(r, r', r'')` at polar angle `alpha`.
    pub fn eval(&self, alpha: f64) -> (f64, f64, f64) {
        let mut r = self.coeffs[0];
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        let harmonics = (self.coeffs.len() - 1) / 2;
        for k in 1..=harmonics {
            let a = self.coeffs[2 * k - 1];
            let b = self.coeffs.get(2 * k).copied().unwrap_or(0.0);
            let kf = k as f64;
            let (s, c) = (kf * alpha).sin_cos();
            r += a * c + b * s;
            r1 += kf * (-a * s + b * c);
            r2 -= kf * kf * (a * c + b * s);
        }
        // odd-length tail: a trailing cosine coefficient without its sine partner
        if self.coeffs.len() % 2 == 0 {
            let k = self.coeffs.len() / 2;
            let a = self.coeffs[self.coeffs.len() - 1];
            let kf = k as f64;
            let (s, c) = (kf * alpha).sin_cos();
            r += a * c;
            r1 -= kf * a * s;
            r2 -= kf * kf * a * c;
        }
        (r, r1, r2)
    }

    fn min_sampled(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|i| self.eval(TAU * i as f64 / samples as f64).0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Polar description of Ω used for the inside test and the signed boundary
/// function `|x| − r(arg x)`.
#[derive(Debug, Clone)]
pub enum Shape {
    Disc,
    Star(Arc<RadiusProfile>),
}

impl Shape {
    #[inline]
    fn radius(&self, alpha: f64) -> (f64, f64, f64) {
        match self {
            Shape::Disc => (1.0, 0.0, 0.0),
            Shape::Star(p) => p.eval(alpha),
        }
    }

    /// Negative inside Ω, zero on Γ, positive outside.
    #[inline]
    pub fn signed_boundary_function(&self, x: &Vec2) -> f64 {
        let q = x.norm();
        match self {
            Shape::Disc => q - 1.0,
            Shape::Star(p) => q - p.eval(x.y.atan2(x.x)).0,
        }
    }

    pub fn sbf_with_gradient(&self, x: &Vec2) -> (f64, Vec2) {
        let q = x.norm();
        if q < 1e-300 {
            let (r, _, _) = self.radius(0.0);
            return (-r, Vec2::zeros());
        }
        match self {
            Shape::Disc => (q - 1.0, x / q),
            Shape::Star(p) => {
                let alpha = x.y.atan2(x.x);
                let (r, r1, _) = p.eval(alpha);
                let grad_alpha = Vec2::new(-x.y, x.x) / (q * q);
                (q - r, x / q - r1 * grad_alpha)
            }
        }
    }

    pub fn sbf_with_hessian(&self, x: &Vec2) -> (f64, Vec2, Mat2) {
        let q = x.norm();
        if q < 1e-300 {
            let (r, _, _) = self.radius(0.0);
            return (-r, Vec2::zeros(), Mat2::zeros());
        }
        let u = x / q;
        let hess_q = (Mat2::identity() - u * u.transpose()) / q;
        match self {
            Shape::Disc => (q - 1.0, u, hess_q),
            Shape::Star(p) => {
                let alpha = x.y.atan2(x.x);
                let (r, r1, r2) = p.eval(alpha);
                let q2 = q * q;
                let q4 = q2 * q2;
                let ga = Vec2::new(-x.y, x.x) / q2;
                let ha = Mat2::new(
                    2.0 * x.x * x.y / q4,
                    (x.y * x.y - x.x * x.x) / q4,
                    (x.y * x.y - x.x * x.x) / q4,
                    -2.0 * x.x * x.y / q4,
                );
                let grad = u - r1 * ga;
                let hess = hess_q - r2 * ga * ga.transpose() - r1 * ha;
                (q - r, grad, hess)
            }
        }
    }
}

/// Local boundary data at one arc-length position.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFrame {
    pub s: f64,
    pub point: Vec2,
    pub tangent: Vec2,
    /// Inward unit conormal ν (tangent rotated by +π/2).
    pub normal: Vec2,
}

#[derive(Debug, Clone)]
struct ArcLengthTable {
    step: f64,
    cumulative: Vec<f64>,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
}

const ARC_PANELS: usize = 1024;
const ARC_GL_ORDER: usize = 10;

/// Closed C² boundary curve Γ, counterclockwise, arc-length parameterized.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    shape: Shape,
    total_length: f64,
    table: Option<Arc<ArcLengthTable>>,
}

impl BoundaryCurve {
    fn disc() -> Self {
        Self {
            shape: Shape::Disc,
            total_length: TAU,
            table: None,
        }
    }

    fn star(profile: Arc<RadiusProfile>) -> Self {
        let shape = Shape::Star(profile);
        let step = TAU / ARC_PANELS as f64;
        let (gx, gw) = gauss_legendre_on(ARC_GL_ORDER, 0.0, 1.0);
        let speed = |a: f64| {
            let (r, r1, _) = shape.radius(a);
            (r * r + r1 * r1).sqrt()
        };
        let mut cumulative = Vec::with_capacity(ARC_PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..ARC_PANELS {
            let a0 = k as f64 * step;
            let panel: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(t, w)| w * speed(a0 + t * step))
                .sum::<f64>()
                * step;
            acc += panel;
            cumulative.push(acc);
        }
        let total_length = acc;
        Self {
            shape,
            total_length,
            table: Some(Arc::new(ArcLengthTable {
                step,
                cumulative,
                gl_nodes: gx,
                gl_weights: gw,
            })),
        }
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    fn speed(&self, alpha: f64) -> f64 {
        let (r, r1, _) = self.shape.radius(alpha);
        (r * r + r1 * r1).sqrt()
    }

    /// Arc length from polar angle 0 to `alpha` (counterclockwise).
    pub fn arc_length_of_angle(&self, alpha: f64) -> f64 {
        let alpha = wrap_angle(alpha);
        match &self.table {
            None => alpha,
            Some(t) => {
                let k = ((alpha / t.step) as usize).min(ARC_PANELS - 1);
                let a0 = k as f64 * t.step;
                let width = alpha - a0;
                let partial: f64 = t
                    .gl_nodes
                    .iter()
                    .zip(&t.gl_weights)
                    .map(|(x, w)| w * self.speed(a0 + x * width))
                    .sum::<f64>()
                    * width;
                t.cumulative[k] + partial
            }
        }
    }

    /// Polar angle of the boundary point at arc length `s`.
    pub fn angle_of_arc_length(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.total_length);
        match &self.table {
            None => s,
            Some(t) => {
                let k = match t
                    .cumulative
                    .binary_search_by(|c| c.partial_cmp(&s).expect("finite arc length"))
                {
                    Ok(k) => return k as f64 * t.step,
                    Err(k) => k.saturating_sub(1).min(ARC_PANELS - 1),
                };
                let c0 = t.cumulative[k];
                let c1 = t.cumulative[k + 1];
                let mut alpha = (k as f64 + (s - c0) / (c1 - c0)) * t.step;
                for _ in 0..8 {
                    let residual = self.arc_length_of_angle(alpha) - s;
                    let d = residual / self.speed(alpha);
                    alpha -= d;
                    if d.abs() < 1e-15 {
                        break;
                    }
                }
                alpha
            }
        }
    }

    fn frame_at_angle(&self, s: f64, alpha: f64) -> BoundaryFrame {
        let (r, r1, _) = self.shape.radius(alpha);
        let (sa, ca) = alpha.sin_cos();
        let point = Vec2::new(r * ca, r * sa);
        let d = Vec2::new(r1 * ca - r * sa, r1 * sa + r * ca);
        let tangent = d / d.norm();
        let normal = Vec2::new(-tangent.y, tangent.x);
        BoundaryFrame {
            s,
            point,
            tangent,
            normal,
        }
    }

    pub fn frame(&self, s: f64) -> BoundaryFrame {
        let s = s.rem_euclid(self.total_length);
        self.frame_at_angle(s, self.angle_of_arc_length(s))
    }

    pub fn point(&self, s: f64) -> Vec2 {
        self.frame(s).point
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        self.frame(s).tangent
    }

    pub fn inward_conormal(&self, s: f64) -> Vec2 {
        self.frame(s).normal
    }

    /// Arc length of the boundary point on the ray from the origin through `x`
    /// (for `x ∈ Γ` this is the exact parameter of `x`).
    pub fn arc_length_at(&self, x: &Vec2) -> f64 {
        let s = self.arc_length_of_angle(x.y.atan2(x.x));
        if s >= self.total_length {
            0.0
        } else {
            s
        }
    }
}

/// Incoming / outgoing / tangent classification of a boundary direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionClass {
    Incoming,
    Outgoing,
    Tangent,
}

/// Closed bounded star-shaped domain Ω with C² boundary.
#[derive(Debug, Clone)]
pub struct Domain {
    boundary: BoundaryCurve,
    diameter: f64,
    area: f64,
    bbox: (Vec2, Vec2),
}

impl Domain {
    pub fn boundary(&self) -> &BoundaryCurve {
        &self.boundary
    }

    pub fn shape(&self) -> &Shape {
        &self.boundary.shape
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        self.bbox
    }

    pub fn is_disc(&self) -> bool {
        matches!(self.boundary.shape, Shape::Disc)
    }

    #[inline]
    pub fn signed_boundary_function(&self, x: &Vec2) -> f64 {
        self.boundary.shape.signed_boundary_function(x)
    }

    #[inline]
    pub fn inside(&self, x: &Vec2) -> bool {
        self.signed_boundary_function(x) < 0.0
    }

    /// Inward unit normal at a point of Γ, from the gradient of the boundary
    /// function.
    pub fn inward_normal_at(&self, x: &Vec2) -> Vec2 {
        let (_, g) = self.boundary.shape.sbf_with_gradient(x);
        -g / g.norm()
    }

    /// Polar radius of Γ in the direction of `alpha`.
    pub fn radius_at(&self, alpha: f64) -> (f64, f64, f64) {
        self.boundary.shape.radius(alpha)
    }

    pub fn classify_direction(&self, s: f64, phi: f64) -> DirectionClass {
        let c = self.boundary.inward_conormal(s).dot(&theta(phi));
        if c > TANGENCY_TOL {
            DirectionClass::Incoming
        } else if c < -TANGENCY_TOL {
            DirectionClass::Outgoing
        } else {
            DirectionClass::Tangent
        }
    }

    /// Approximate Euclidean distance from an interior point to Γ, by
    /// sampling the boundary densely and polishing the nearest sample.
    pub fn distance_to_boundary(&self, x: &Vec2) -> f64 {
        if self.is_disc() {
            return (1.0 - x.norm()).abs();
        }
        let n = 2048;
        let l = self.boundary.total_length;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let s = l * i as f64 / n as f64;
            let d = (self.boundary.point(s) - x).norm();
            if d < best.0 {
                best = (d, s);
            }
        }
        // golden-section refine around the best sample
        let (mut a, mut b) = (best.1 - l / n as f64, best.1 + l / n as f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if (self.boundary.point(c) - x).norm() < (self.boundary.point(d) - x).norm() {
                b = d;
            } else {
                a = c;
            }
        }
        (self.boundary.point(0.5 * (a + b)) - x).norm()
    }
}

/// The unit disc: `point(s) = (cos s, sin s)`, `ν(s) = −point(s)`.
pub fn unit_disc() -> Domain {
    Domain {
        boundary: BoundaryCurve::disc(),
        diameter: 2.0,
        area: PI,
        bbox: (Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
    }
}

/// Star-shaped domain with boundary `r(α)(cos α, sin α)`, reparameterized by
/// arc length.
pub fn star_shaped_domain(profile: RadiusProfile) -> Result<Domain> {
    let min_r = profile.min_sampled(4096);
    if !(min_r > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "radius profile must be positive, min sampled value {min_r}"
        )));
    }
    let boundary = BoundaryCurve::star(Arc::new(profile));

    let samples = 720;
    let pts: Vec<Vec2> = (0..samples)
        .map(|i| {
            let a = TAU * i as f64 / samples as f64;
            boundary.frame_at_angle(0.0, a).point
        })
        .collect();
    let mut diameter: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            diameter = diameter.max((p - q).norm());
        }
    }
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    // periodic trapezoid is spectrally accurate for ∫ r²/2 dα
    let n_area = 4096;
    let area = (0..n_area)
        .map(|i| {
            let r = boundary.shape.radius(TAU * i as f64 / n_area as f64).0;
            0.5 * r * r
        })
        .sum::<f64>()
        * TAU
        / n_area as f64;
    let pad = 1e-3 * diameter;
    Ok(Domain {
        boundary,
        diameter,
        area,
        bbox: (lo.add_scalar(-pad), hi.add_scalar(pad)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flower() -> Domain {
        star_shaped_domain(RadiusProfile::new(vec![1.0, 0.0, 0.0, 0.1, 0.0]).unwrap()).unwrap()
    }

    #[test]
    fn classify_on_unit_disc() {
        let d = unit_disc();
        assert_eq!(d.classify_direction(0.0, PI), DirectionClass::Incoming);
        assert_eq!(d.classify_direction(0.0, 0.0), DirectionClass::Outgoing);
        assert_eq!(d.classify_direction(0.0, PI / 2.0), DirectionClass::Tangent);
    }

    #[test]
    fn unit_disc_values() {
        let d = unit_disc();
        let p = d.boundary().point(0.0);
        assert!((p - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        let nu = d.boundary().inward_conormal(PI);
        assert!((nu - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((d.boundary().total_length() - TAU).abs() < 1e-15);
    }

    #[test]
    fn constant_profile_reproduces_unit_disc() {
        let star = star_shaped_domain(RadiusProfile::constant(1.0)).unwrap();
        let disc = unit_disc();
        assert!((star.boundary().total_length() - TAU).abs() < 1e-10);
        for i in 0..50 {
            let s = 0.1257 * i as f64;
            let a = star.boundary().frame(s);
            let b = disc.boundary().frame(s);
            assert!((a.point - b.point).norm() < 1e-10);
            assert!((a.normal - b.normal).norm() < 1e-10);
        }
    }

    #[test]
    fn flower_length_matches_fine_quadrature() {
        let d = flower();
        // oracle: composite Simpson on 10x the table resolution
        let n = 10 * ARC_PANELS * 2;
        let h = TAU / n as f64;
        let speed = |a: f64| {
            let r = 1.0 + 0.1 * (2.0 * a).cos();
            let r1 = -0.2 * (2.0 * a).sin();
            (r * r + r1 * r1).sqrt()
        };
        let mut acc = speed(0.0) + speed(TAU);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * speed(i as f64 * h);
        }
        let oracle = acc * h / 3.0;
        assert!((d.boundary().total_length() - oracle).abs() < 1e-8);
    }

    #[test]
    fn flower_inward_normal_points_inside() {
        let d = flower();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = rng.gen::<f64>() * d.boundary().total_length();
            let f = d.boundary().frame(s);
            assert!(d.inside(&(f.point + 1e-4 * f.normal)));
            assert!(!d.inside(&(f.point - 1e-4 * f.normal)));
            assert!(f.tangent.dot(&f.normal).abs() < 1e-15);
            assert!((f.normal.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn arc_length_parameterization_has_unit_speed() {
        let d = flower();
        let b = d.boundary();
        let h = 1e-5;
        for i in 0..200 {
            let s = b.total_length() * (i as f64 + 0.37) / 200.0;
            let v = (b.point(s + h) - b.point(s - h)) / (2.0 * h);
            assert!((v.norm() - 1.0).abs() < 1e-8, "s={s} |v|={}", v.norm());
        }
    }

    #[test]
    fn boundary_is_closed_and_on_zero_level() {
        for d in [unit_disc(), flower()] {
            let b = d.boundary();
            let l = b.total_length();
            for i in 0..64 {
                let s = l * i as f64 / 64.0;
                assert!((b.point(s) - b.point(s + l)).norm() < 1e-12);
                assert!(d.signed_boundary_function(&b.point(s)).abs() < 1e-10);
                assert!((b.arc_length_at(&b.point(s)) - s).abs() < 1e-10 || s == 0.0);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_profiles() {
        assert!(star_shaped_domain(RadiusProfile::new(vec![0.5, 0.6]).unwrap()).is_err());
        assert!(RadiusProfile::new(vec![1.0, f64::NAN]).is_err());
        assert!(RadiusProfile::new(vec![]).is_err());
    }

    #[test]
    fn sbf_hessian_matches_finite_differences() {
        let d = flower();
        let shape = d.shape();
        let h = 1e-6;
        for x in [Vec2::new(0.3, 0.5), Vec2::new(-0.7, 0.2), Vec2::new(0.1, -0.8)] {
            let (_, g, hess) = shape.sbf_with_hessian(&x);
            for k in 0..2 {
                let mut e = Vec2::zeros();
                e[k] = h;
                let fd = (shape.signed_boundary_function(&(x + e))
                    - shape.signed_boundary_function(&(x - e)))
                    / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-8);
                let (_, gp, _) = shape.sbf_with_hessian(&(x + e));
                let (_, gm, _) = shape.sbf_with_hessian(&(x - e));
                let col = (gp - gm) / (2.0 * h);
                assert!((col - hess.column(k)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn frame_is_positively_oriented() {
        for i in 0..100 {
            let f = AngularFrame::at(0.0731 * i as f64 - 3.0);
            assert!((f.determinant() - 1.0).abs() < 1e-15);
            assert!(f.theta_hat.dot(&f.eta_hat).abs() < 1e-15);
        }
    }

    #[test]
    fn opposite_directions_are_never_both_incoming() {
        let d = flower();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let s = rng.gen::<f64>() * d.boundary().total_length();
            let phi = rng.gen::<f64>() * TAU;
            let a = d.classify_direction(s, phi);
            let b = d.classify_direction(s, phi + PI);
            assert!(!(a == DirectionClass::Incoming && b == DirectionClass::Incoming));
        }
    }

    #[test]
    fn distance_to_boundary_on_flower() {
        let d = flower();
        // the point (0.5, 0) lies on the ray through the boundary point (1.1, 0),
        // where the normal is radial by symmetry
        assert!((d.distance_to_boundary(&Vec2::new(0.5, 0.0)) - 0.6).abs() < 1e-9);
    }
}
