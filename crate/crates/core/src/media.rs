//! Refraction coefficients `n` and perturbation fields `f`.
//!
//! Every field carries an analytic gradient and Hessian. The Hessian is only
//! needed by the linearized ray equations used for Jacobians.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Mat2, Shape, Vec2};
use crate::tracer::{trace_forward, GeodesicPath, PathStatus, Recording, TraceOptions, LENGTH_CAP_FACTOR};

/// Default collar width of the boundary cutoff, as a fraction of diam(Ω).
pub const CUTOFF_WIDTH_FRACTION: f64 = 0.15;

/// Resolution of the positivity sample grid.
pub const POSITIVITY_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec2,
    pub sigma: f64,
}

impl Bump {
    pub fn new(amplitude: f64, center: (f64, f64), sigma: f64) -> Self {
        Self {
            amplitude,
            center: Vec2::new(center.0, center.1),
            sigma,
        }
    }

    /// `a·exp(−|x − c|²/σ²)` with gradient and Hessian.
    #[inline]
    fn eval2(&self, x: &Vec2) -> (f64, Vec2, Mat2) {
        let d = x - self.center;
        let s2 = self.sigma * self.sigma;
        let e = self.amplitude * (-d.norm_squared() / s2).exp();
        let g = -2.0 / s2 * e * d;
        let h = e * (4.0 / (s2 * s2) * d * d.transpose() - 2.0 / s2 * Mat2::identity());
        (e, g, h)
    }

    #[inline]
    fn eval(&self, x: &Vec2) -> (f64, Vec2) {
        let d = x - self.center;
        let s2 = self.sigma * self.sigma;
        let e = self.amplitude * (-d.norm_squared() / s2).exp();
        (e, -2.0 / s2 * e * d)
    }
}

/// `χ = S(|b(x)|/w)` with `b` the signed boundary function and `S` a C⁶
/// smoothstep; vanishes on Γ and equals 1 deeper than `w` inside Ω.
#[derive(Debug, Clone)]
pub struct BoundaryCutoff {
    shape: Shape,
    width: f64,
}

impl BoundaryCutoff {
    pub fn for_domain(domain: &Domain, width_fraction: f64) -> Self {
        Self {
            shape: domain.shape().clone(),
            width: width_fraction * domain.diameter(),
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Degree-13 smoothstep: S′ = c·t⁶(1−t)⁶, so the first six derivatives
    /// vanish at both ends. Returns (S, S′, S″).
    #[inline]
    fn smooth_step(t: f64) -> (f64, f64, f64) {
        const ORDER: i32 = 6;
        const DEGREE: i32 = 2 * ORDER + 1;
        // 13·C(12, 6)
        const LEAD: f64 = 12012.0;
        if t <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if t >= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        let r = 1.0 - t;
        // upper Bernstein tail, binomials built incrementally
        let mut binom = 1.0;
        let mut v = 0.0;
        for j in 0..=DEGREE {
            if j > ORDER {
                v += binom * t.powi(j) * r.powi(DEGREE - j);
            }
            binom = binom * (DEGREE - j) as f64 / (j + 1) as f64;
        }
        let q = t * r;
        let d1 = LEAD * q.powi(ORDER);
        let d2 = LEAD * ORDER as f64 * q.powi(ORDER - 1) * (r - t);
        (v, d1, d2)
    }

    #[inline]
    fn eval(&self, x: &Vec2) -> (f64, Vec2) {
        let b = self.shape.signed_boundary_function(x);
        if -b >= self.width {
            return (1.0, Vec2::zeros());
        }
        let (_, g) = self.shape.sbf_with_gradient(x);
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let u = (sign * b / self.width).min(1.0);
        if u >= 1.0 {
            return (1.0, Vec2::zeros());
        }
        let (v, d1, _) = Self::smooth_step(u);
        (v, d1 * sign / self.width * g)
    }

    fn eval2(&self, x: &Vec2) -> (f64, Vec2, Mat2) {
        let b = self.shape.signed_boundary_function(x);
        if -b >= self.width {
            return (1.0, Vec2::zeros(), Mat2::zeros());
        }
        let (_, g, h) = self.shape.sbf_with_hessian(x);
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let u = sign * b / self.width;
        if u >= 1.0 {
            return (1.0, Vec2::zeros(), Mat2::zeros());
        }
        let (v, d1, d2) = Self::smooth_step(u);
        let gu = sign / self.width * g;
        let hu = sign / self.width * h;
        (v, d1 * gu, d2 * gu * gu.transpose() + d1 * hu)
    }
}

/// Uniform-grid tensor-product cubic B-spline (natural end conditions): C²
/// inside the grid box, cubic extrapolation outside.
#[derive(Debug, Clone)]
pub struct BicubicGrid {
    origin: Vec2,
    spacing: Vec2,
    nx: usize,
    ny: usize,
    // (nx + 2) × (ny + 2) coefficients, x fastest, index offset by one
    coeffs: Vec<f64>,
}

fn spline_coefficients_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut c = vec![0.0; n + 2];
    c[1] = f[0];
    c[n] = f[n - 1];
    let m = n - 2;
    if m > 0 {
        // Thomas algorithm for c_{i-1} + 4c_i + c_{i+1} = 6 f_i, i = 1..n-2
        let mut diag = vec![4.0; m];
        let mut rhs: Vec<f64> = (1..=m).map(|i| 6.0 * f[i]).collect();
        rhs[0] -= f[0];
        rhs[m - 1] -= f[n - 1];
        for k in 1..m {
            let w = 1.0 / diag[k - 1];
            diag[k] -= w;
            rhs[k] -= w * rhs[k - 1];
        }
        let mut x = vec![0.0; m];
        x[m - 1] = rhs[m - 1] / diag[m - 1];
        for k in (0..m - 1).rev() {
            x[k] = (rhs[k] - x[k + 1]) / diag[k];
        }
        c[2..(m + 2)].copy_from_slice(&x);
    }
    c[0] = 2.0 * c[1] - c[2];
    c[n + 1] = 2.0 * c[n] - c[n - 1];
    c
}

#[inline]
fn bspline_basis(t: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let u = 1.0 - t;
    (
        [
            u * u * u / 6.0,
            (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
            t3 / 6.0,
        ],
        [
            -u * u / 2.0,
            (3.0 * t2 - 4.0 * t) / 2.0,
            (-3.0 * t2 + 2.0 * t + 1.0) / 2.0,
            t2 / 2.0,
        ],
        [u, 3.0 * t - 2.0, -3.0 * t + 1.0, t],
    )
}

impl BicubicGrid {
    /// Values `values[j * nx + i]` at `origin + (i·dx, j·dy)`.
    pub fn new(origin: Vec2, spacing: Vec2, nx: usize, ny: usize, values: &[f64]) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::OutOfClass(format!(
                "grid_spline needs at least 4x4 knots for C2 interpolation, got {nx}x{ny}"
            )));
        }
        if values.len() != nx * ny || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfClass("grid_spline values malformed".into()));
        }
        if !(spacing.x > 0.0 && spacing.y > 0.0) {
            return Err(Error::OutOfClass("grid_spline spacing must be positive".into()));
        }
        // rows along x
        let mut stage = vec![0.0; (nx + 2) * ny];
        for j in 0..ny {
            let c = spline_coefficients_1d(&values[j * nx..(j + 1) * nx]);
            stage[j * (nx + 2)..(j + 1) * (nx + 2)].copy_from_slice(&c);
        }
        let mut coeffs = vec![0.0; (nx + 2) * (ny + 2)];
        for i in 0..nx + 2 {
            let col: Vec<f64> = (0..ny).map(|j| stage[j * (nx + 2) + i]).collect();
            let c = spline_coefficients_1d(&col);
            for (j, v) in c.into_iter().enumerate() {
                coeffs[j * (nx + 2) + i] = v;
            }
        }
        Ok(Self {
            origin,
            spacing,
            nx,
            ny,
            coeffs,
        })
    }

    /// Build from scattered `(x, y, n)` samples that lie on a uniform grid.
    pub fn from_samples(samples: &[(f64, f64, f64)]) -> Result<Self> {
        let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let mut ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let uniq = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinate"));
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        };
        uniq(&mut xs);
        uniq(&mut ys);
        let (nx, ny) = (xs.len(), ys.len());
        if nx < 4 || ny < 4 {
            return Err(Error::OutOfClass(format!(
                "grid_spline needs at least 4x4 knots, got {nx}x{ny}"
            )));
        }
        let dx = (xs[nx - 1] - xs[0]) / (nx - 1) as f64;
        let dy = (ys[ny - 1] - ys[0]) / (ny - 1) as f64;
        let uniform = |v: &[f64], d: f64| {
            v.windows(2).all(|w| ((w[1] - w[0]) - d).abs() < 1e-6 * d.abs().max(1e-12))
        };
        if !uniform(&xs, dx) || !uniform(&ys, dy) {
            return Err(Error::OutOfClass("grid_spline samples are not on a uniform grid".into()));
        }
        if samples.len() != nx * ny {
            return Err(Error::OutOfClass(format!(
                "grid_spline expects {} samples, got {}",
                nx * ny,
                samples.len()
            )));
        }
        let mut values = vec![f64::NAN; nx * ny];
        for &(x, y, v) in samples {
            let i = ((x - xs[0]) / dx).round() as usize;
            let j = ((y - ys[0]) / dy).round() as usize;
            values[j * nx + i] = v;
        }
        Self::new(Vec2::new(xs[0], ys[0]), Vec2::new(dx, dy), nx, ny, &values)
    }

    pub fn knots(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> Vec2 {
        self.spacing
    }

    /// Bounding box covered by the knots.
    pub fn extent(&self) -> (Vec2, Vec2) {
        let hi = self.origin
            + Vec2::new(
                self.spacing.x * (self.nx - 1) as f64,
                self.spacing.y * (self.ny - 1) as f64,
            );
        (self.origin, hi)
    }

    #[inline]
    fn locate(u: f64, n: usize) -> (usize, f64) {
        let i = (u.floor().max(0.0) as usize).min(n - 2);
        (i, u - i as f64)
    }

    /// Value, gradient and Hessian of the interpolant.
    pub fn eval2(&self, x: &Vec2) -> (f64, Vec2, Mat2) {
        let (i, tx) = Self::locate((x.x - self.origin.x) / self.spacing.x, self.nx);
        let (j, ty) = Self::locate((x.y - self.origin.y) / self.spacing.y, self.ny);
        let (bx, dbx, ddbx) = bspline_basis(tx);
        let (by, dby, ddby) = bspline_basis(ty);
        let stride = self.nx + 2;
        let (mut v, mut vx, mut vy, mut vxx, mut vxy, mut vyy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for b in 0..4 {
            let row = (j + b) * stride + i;
            for a in 0..4 {
                let c = self.coeffs[row + a];
                v += c * bx[a] * by[b];
                vx += c * dbx[a] * by[b];
                vy += c * bx[a] * dby[b];
                vxx += c * ddbx[a] * by[b];
                vxy += c * dbx[a] * dby[b];
                vyy += c * bx[a] * ddby[b];
            }
        }
        let (hx, hy) = (self.spacing.x, self.spacing.y);
        (
            v,
            Vec2::new(vx / hx, vy / hy),
            Mat2::new(vxx / (hx * hx), vxy / (hx * hy), vxy / (hx * hy), vyy / (hy * hy)),
        )
    }
}

/// Scalar profile with analytic derivatives.
#[derive(Debug, Clone)]
pub enum Profile {
    Constant(f64),
    /// `Σ_k c_k |x|^{2k}`.
    Radial(Vec<f64>),
    /// `Σ bumps`, multiplied by the boundary cutoff when present.
    Bumps {
        bumps: Vec<Bump>,
        cutoff: Option<BoundaryCutoff>,
    },
    Grid(Arc<BicubicGrid>),
    Sum(Vec<Profile>),
    Scaled(f64, Box<Profile>),
}

impl Profile {
    #[inline]
    pub fn value(&self, x: &Vec2) -> f64 {
        self.eval(x).0
    }

    /// Value and gradient.
    pub fn eval(&self, x: &Vec2) -> (f64, Vec2) {
        match self {
            Profile::Constant(c) => (*c, Vec2::zeros()),
            Profile::Radial(c) => {
                let rho = x.norm_squared();
                let (p, dp, _) = radial_poly(c, rho);
                (p, 2.0 * dp * x)
            }
            Profile::Bumps { bumps, cutoff } => {
                let mut v = 0.0;
                let mut g = Vec2::zeros();
                for b in bumps {
                    let (bv, bg) = b.eval(x);
                    v += bv;
                    g += bg;
                }
                match cutoff {
                    None => (v, g),
                    Some(c) => {
                        let (chi, gchi) = c.eval(x);
                        (v * chi, g * chi + v * gchi)
                    }
                }
            }
            Profile::Grid(grid) => {
                let (v, g, _) = grid.eval2(x);
                (v, g)
            }
            Profile::Sum(parts) => parts.iter().fold((0.0, Vec2::zeros()), |(v, g), p| {
                let (pv, pg) = p.eval(x);
                (v + pv, g + pg)
            }),
            Profile::Scaled(k, p) => {
                let (v, g) = p.eval(x);
                (k * v, *k * g)
            }
        }
    }

    /// Value, gradient and Hessian.
    pub fn eval2(&self, x: &Vec2) -> (f64, Vec2, Mat2) {
        match self {
            Profile::Constant(c) => (*c, Vec2::zeros(), Mat2::zeros()),
            Profile::Radial(c) => {
                let rho = x.norm_squared();
                let (p, dp, ddp) = radial_poly(c, rho);
                (
                    p,
                    2.0 * dp * x,
                    4.0 * ddp * x * x.transpose() + 2.0 * dp * Mat2::identity(),
                )
            }
            Profile::Bumps { bumps, cutoff } => {
                let mut v = 0.0;
                let mut g = Vec2::zeros();
                let mut h = Mat2::zeros();
                for b in bumps {
                    let (bv, bg, bh) = b.eval2(x);
                    v += bv;
                    g += bg;
                    h += bh;
                }
                match cutoff {
                    None => (v, g, h),
                    Some(c) => {
                        let (chi, gc, hc) = c.eval2(x);
                        (
                            v * chi,
                            g * chi + v * gc,
                            h * chi + v * hc + g * gc.transpose() + gc * g.transpose(),
                        )
                    }
                }
            }
            Profile::Grid(grid) => grid.eval2(x),
            Profile::Sum(parts) => {
                parts
                    .iter()
                    .fold((0.0, Vec2::zeros(), Mat2::zeros()), |(v, g, h), p| {
                        let (pv, pg, ph) = p.eval2(x);
                        (v + pv, g + pg, h + ph)
                    })
            }
            Profile::Scaled(k, p) => {
                let (v, g, h) = p.eval2(x);
                (k * v, *k * g, *k * h)
            }
        }
    }

    /// True when every term is built to vanish on Γ.
    pub fn vanishes_on_boundary_structurally(&self) -> bool {
        match self {
            Profile::Constant(c) => *c == 0.0,
            Profile::Radial(_) => false,
            Profile::Bumps { bumps, cutoff } => bumps.is_empty() || cutoff.is_some(),
            Profile::Grid(_) => false,
            Profile::Sum(parts) => parts.iter().all(|p| p.vanishes_on_boundary_structurally()),
            Profile::Scaled(k, p) => *k == 0.0 || p.vanishes_on_boundary_structurally(),
        }
    }
}

#[inline]
fn radial_poly(c: &[f64], rho: f64) -> (f64, f64, f64) {
    // Horner for p, p', p'' in ρ = |x|²
    let mut p = 0.0;
    let mut dp = 0.0;
    let mut ddp = 0.0;
    for &ck in c.iter().rev() {
        ddp = ddp * rho + 2.0 * dp;
        dp = dp * rho + p;
        p = p * rho + ck;
    }
    (p, dp, ddp)
}

/// Which catalog family a field was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumKind {
    Constant,
    RadialPolynomial,
    GaussianBumps,
    GridSpline,
    Composite,
}

/// Positive refraction coefficient `n` on Ω̄.
#[derive(Debug, Clone)]
pub struct RefractionField {
    profile: Profile,
    kind: MediumKind,
    n_min: f64,
}

impl RefractionField {
    /// Wrap a profile after checking positivity on the sample grid.
    pub fn new(profile: Profile, kind: MediumKind, domain: &Domain) -> Result<Self> {
        let (min, at) = sampled_minimum(&profile, domain);
        if !(min > 0.0) {
            return Err(Error::NonPositive {
                min,
                x: at.x,
                y: at.y,
            });
        }
        Ok(Self {
            profile,
            kind,
            n_min: min,
        })
    }

    pub fn constant(c: f64, domain: &Domain) -> Result<Self> {
        Self::new(Profile::Constant(c), MediumKind::Constant, domain)
    }

    pub fn kind(&self) -> MediumKind {
        self.kind
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Minimum of `n` over the positivity sample set.
    pub fn n_min(&self) -> f64 {
        self.n_min
    }

    #[inline]
    pub fn n(&self, x: &Vec2) -> f64 {
        self.profile.value(x)
    }

    #[inline]
    pub fn n_and_grad(&self, x: &Vec2) -> (f64, Vec2) {
        self.profile.eval(x)
    }

    #[inline]
    pub fn n_grad_hessian(&self, x: &Vec2) -> (f64, Vec2, Mat2) {
        self.profile.eval2(x)
    }

    /// `n + ε f`, re-checked for positivity.
    pub fn perturbed(&self, f: &ScalarField, eps: f64, domain: &Domain) -> Result<Self> {
        Self::new(
            Profile::Sum(vec![
                self.profile.clone(),
                Profile::Scaled(eps, Box::new(f.profile().clone())),
            ]),
            MediumKind::Composite,
            domain,
        )
    }

    /// `λ n` for λ > 0.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {lambda} must be positive")));
        }
        Ok(Self {
            profile: Profile::Scaled(lambda, Box::new(self.profile.clone())),
            kind: self.kind,
            n_min: lambda * self.n_min,
        })
    }
}

/// Sign-indefinite scalar field `f` (perturbations, basis functions).
#[derive(Debug, Clone)]
pub struct ScalarField {
    profile: Profile,
    vanishes_on_boundary: bool,
}

impl ScalarField {
    /// Wrap a profile, flagging it as boundary-vanishing when it is built that
    /// way and numerically vanishes on 1000 boundary samples.
    pub fn new(profile: Profile, domain: &Domain) -> Self {
        let vanishes = boundary_sup(&profile, domain) <= 1e-10;
        Self {
            profile,
            vanishes_on_boundary: vanishes,
        }
    }

    pub fn zero() -> Self {
        Self {
            profile: Profile::Constant(0.0),
            vanishes_on_boundary: true,
        }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn vanishes_on_boundary(&self) -> bool {
        self.vanishes_on_boundary
    }

    #[inline]
    pub fn value(&self, x: &Vec2) -> f64 {
        self.profile.value(x)
    }

    #[inline]
    pub fn value_and_grad(&self, x: &Vec2) -> (f64, Vec2) {
        self.profile.eval(x)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            profile: Profile::Scaled(k, Box::new(self.profile.clone())),
            vanishes_on_boundary: self.vanishes_on_boundary,
        }
    }
}

/// sup of |f| over 1000 boundary samples.
pub fn boundary_sup(profile: &Profile, domain: &Domain) -> f64 {
    let b = domain.boundary();
    let l = b.total_length();
    (0..1000)
        .map(|i| profile.value(&b.point(l * i as f64 / 1000.0)).abs())
        .fold(0.0, f64::max)
}

fn sampled_minimum(profile: &Profile, domain: &Domain) -> (f64, Vec2) {
    let (lo, hi) = domain.bounding_box();
    let n = POSITIVITY_GRID;
    let mut best = (f64::INFINITY, Vec2::zeros());
    for j in 0..n {
        for i in 0..n {
            let x = Vec2::new(
                lo.x + (hi.x - lo.x) * i as f64 / (n - 1) as f64,
                lo.y + (hi.y - lo.y) * j as f64 / (n - 1) as f64,
            );
            if domain.signed_boundary_function(&x) <= 0.0 {
                let v = profile.value(&x);
                if v < best.0 || v.is_nan() {
                    best = (v, x);
                }
            }
        }
    }
    let b = domain.boundary();
    for i in 0..1024 {
        let x = b.point(b.total_length() * i as f64 / 1024.0);
        let v = profile.value(&x);
        if v < best.0 || v.is_nan() {
            best = (v, x);
        }
    }
    best
}

/// Which part of assumption (ii) a sampled ray broke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappingViolation {
    pub x: Vec2,
    pub phi: f64,
    pub status: PathStatus,
    pub exit_cosine: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonTrappingReport {
    pub ok: bool,
    pub samples: usize,
    /// Smallest |⟨ν|θ⟩| over all exits that were reached.
    pub worst_exit_cosine: f64,
    /// Longest complete geodesic (both half-rays) in Euclidean length.
    pub max_path_length: f64,
    pub violation: Option<TrappingViolation>,
}

impl NonTrappingReport {
    /// The report as a hard check: `Trapped` or `TangentExit` for the first
    /// violation.
    pub fn into_result(self, domain: &Domain) -> Result<Self> {
        match self.violation {
            None => Ok(self),
            Some(v) if v.status == PathStatus::Trapped => Err(Error::Trapped {
                length: v.length,
                cap: LENGTH_CAP_FACTOR * domain.diameter(),
            }),
            Some(v) => Err(Error::TangentExit {
                cosine: v.exit_cosine,
            }),
        }
    }
}

/// Sample `n_samples` uniformly random interior phase points and trace the
/// geodesic through each in both directions.
pub fn non_trapping_check(
    field: &RefractionField,
    domain: &Domain,
    n_samples: usize,
    seed: u64,
) -> NonTrappingReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bounding_box();
    let mut points = Vec::with_capacity(n_samples);
    while points.len() < n_samples {
        let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        let phi = rng.gen_range(0.0..2.0 * PI);
        if domain.inside(&x) {
            points.push((x, phi));
        }
    }
    let opts = TraceOptions::default().with_recording(Recording::Endpoints);
    let traces: Vec<(GeodesicPath, GeodesicPath)> = points
        .par_iter()
        .map(|&(x, phi)| {
            (
                trace_forward(x, phi, field, domain, &opts),
                trace_forward(x, phi + PI, field, domain, &opts),
            )
        })
        .collect();

    let mut worst = f64::INFINITY;
    let mut longest: f64 = 0.0;
    let mut violation = None;
    for ((x, phi), (a, b)) in points.iter().zip(&traces) {
        longest = longest.max(a.length() + b.length());
        for (half, dir) in [(a, *phi), (b, phi + PI)] {
            if let Some(hit) = half.exit {
                worst = worst.min(hit.cosine.abs());
            }
            if violation.is_none() && matches!(half.status, PathStatus::Trapped | PathStatus::Tangent) {
                violation = Some(TrappingViolation {
                    x: *x,
                    phi: dir,
                    status: half.status,
                    exit_cosine: half.exit.map(|h| h.cosine.abs()).unwrap_or(f64::NAN),
                    length: half.length(),
                });
            }
        }
    }
    NonTrappingReport {
        ok: violation.is_none(),
        samples: n_samples,
        worst_exit_cosine: worst,
        max_path_length: longest,
        violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{star_shaped_domain, unit_disc, RadiusProfile};

    #[test]
    fn smooth_step_derivatives() {
        assert_eq!(BoundaryCutoff::smooth_step(0.5).0, 0.5);
        for t in [0.01, 0.1, 0.3, 0.5, 0.77, 0.95] {
            let h = 1e-5;
            let (_, d1, d2) = BoundaryCutoff::smooth_step(t);
            let (p, p1, _) = BoundaryCutoff::smooth_step(t + h);
            let (m, m1, _) = BoundaryCutoff::smooth_step(t - h);
            assert!((d1 - (p - m) / (2.0 * h)).abs() < 1e-7 * d1.abs().max(1.0), "t={t}");
            assert!((d2 - (p1 - m1) / (2.0 * h)).abs() < 1e-6 * d2.abs().max(1.0), "t={t}");
        }
        let (v, d1, d2) = BoundaryCutoff::smooth_step(1e-3);
        assert!(v < 1e-17 && d1 < 1e-13 && d2.abs() < 1e-9);
        let (v, _, _) = BoundaryCutoff::smooth_step(0.3);
        let (w, _, _) = BoundaryCutoff::smooth_step(0.7);
        assert!((v + w - 1.0).abs() < 1e-14);
    }

    fn catalog(domain: &Domain) -> Vec<Profile> {
        let cutoff = Some(BoundaryCutoff::for_domain(domain, CUTOFF_WIDTH_FRACTION));
        let mut knots = Vec::new();
        for j in 0..12 {
            for i in 0..12 {
                let x = -1.2 + 2.4 * i as f64 / 11.0;
                let y = -1.2 + 2.4 * j as f64 / 11.0;
                knots.push((x, y, 1.0 + 0.1 * (x * 1.3).sin() * (y * 0.7).cos()));
            }
        }
        vec![
            Profile::Constant(1.3),
            Profile::Radial(vec![1.0, 0.2]),
            Profile::Radial(vec![1.0, -0.1, 0.05]),
            Profile::Sum(vec![
                Profile::Constant(1.0),
                Profile::Bumps {
                    bumps: vec![Bump::new(0.1, (0.3, 0.0), 0.25), Bump::new(-0.05, (-0.2, 0.4), 0.3)],
                    cutoff: cutoff.clone(),
                },
            ]),
            Profile::Grid(Arc::new(BicubicGrid::from_samples(&knots).unwrap())),
        ]
    }

    #[test]
    fn gradients_and_hessians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let disc = unit_disc();
        let flower = star_shaped_domain(RadiusProfile::new(vec![1.0, 0.0, 0.0, 0.1]).unwrap()).unwrap();
        for domain in [disc, flower] {
            for p in catalog(&domain) {
                for _ in 0..50 {
                    let x = loop {
                        let x = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        if domain.inside(&x) {
                            break x;
                        }
                    };
                    let h = 1e-6;
                    let (_, g, hess) = p.eval2(&x);
                    let (_, g1) = p.eval(&x);
                    assert!((g - g1).norm() <= 1e-14 * (1.0 + g.norm()));
                    for k in 0..2 {
                        let mut e = Vec2::zeros();
                        e[k] = h;
                        let fd = (p.value(&(x + e)) - p.value(&(x - e))) / (2.0 * h);
                        let scale = g.norm().max(1e-3);
                        assert!((fd - g[k]).abs() / scale < 1e-6, "{p:?} at {x:?}");
                        let col = (p.eval(&(x + e)).1 - p.eval(&(x - e)).1) / (2.0 * h);
                        let hs = hess.norm().max(1e-2);
                        assert!((col - hess.column(k)).norm() / hs < 1e-5, "{p:?} at {x:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn constant_and_radial_media() {
        let d = unit_disc();
        let c = RefractionField::constant(1.0, &d).unwrap();
        let x = Vec2::new(0.3, -0.2);
        assert_eq!(c.n_and_grad(&x), (1.0, Vec2::zeros()));
        let r = RefractionField::new(Profile::Radial(vec![1.0, 0.2]), MediumKind::RadialPolynomial, &d).unwrap();
        let (n, g) = r.n_and_grad(&x);
        assert!((n - (1.0 + 0.2 * x.norm_squared())).abs() < 1e-15);
        assert!((g - 0.4 * x).norm() < 1e-15);
    }

    #[test]
    fn cutoff_bump_equals_base_on_boundary() {
        let d = unit_disc();
        let p = Profile::Sum(vec![
            Profile::Constant(1.0),
            Profile::Bumps {
                bumps: vec![Bump::new(0.1, (0.3, 0.0), 0.25)],
                cutoff: Some(BoundaryCutoff::for_domain(&d, CUTOFF_WIDTH_FRACTION)),
            },
        ]);
        let b = d.boundary();
        for i in 0..1000 {
            let x = b.point(b.total_length() * i as f64 / 1000.0);
            assert!((p.value(&x) - 1.0).abs() < 1e-10);
        }
        // unchanged deep inside the collar
        let x = Vec2::new(0.3, 0.0);
        assert!((p.value(&x) - 1.1).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_media_are_rejected() {
        let d = unit_disc();
        let err = RefractionField::new(Profile::Radial(vec![0.5, -1.0]), MediumKind::RadialPolynomial, &d)
            .unwrap_err();
        assert!(matches!(err, Error::NonPositive { .. }));
    }

    #[test]
    fn coarse_grid_is_out_of_class() {
        let knots: Vec<(f64, f64, f64)> = (0..9).map(|k| ((k % 3) as f64, (k / 3) as f64, 1.0)).collect();
        assert!(matches!(BicubicGrid::from_samples(&knots), Err(Error::OutOfClass(_))));
    }

    #[test]
    fn bicubic_grid_interpolates_knots_and_reproduces_linear_data() {
        let mut knots = Vec::new();
        for j in 0..7 {
            for i in 0..9 {
                let (x, y) = (-1.0 + 0.25 * i as f64, -1.0 + 1.0 / 3.0 * j as f64);
                knots.push((x, y, 2.0 + 0.5 * x - 0.25 * y));
            }
        }
        let g = BicubicGrid::from_samples(&knots).unwrap();
        for &(x, y, v) in &knots {
            assert!((g.eval2(&Vec2::new(x, y)).0 - v).abs() < 1e-12);
        }
        let (v, grad, h) = g.eval2(&Vec2::new(0.123, -0.456));
        assert!((v - (2.0 + 0.5 * 0.123 + 0.25 * 0.456)).abs() < 1e-12);
        assert!((grad - Vec2::new(0.5, -0.25)).norm() < 1e-12);
        assert!(h.norm() < 1e-10);
    }

    #[test]
    fn scalar_field_boundary_flag() {
        let d = unit_disc();
        let f = ScalarField::new(Profile::Radial(vec![1.0, -1.0]), &d);
        assert!(f.vanishes_on_boundary());
        let g = ScalarField::new(Profile::Radial(vec![1.0, -0.5]), &d);
        assert!(!g.vanishes_on_boundary());
    }

    #[test]
    fn straight_rays_are_non_trapping() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let r = non_trapping_check(&one, &d, 1000, 1);
        assert!(r.ok);
        assert!(r.max_path_length <= 2.0 + 1e-9);
    }

    #[test]
    fn focusing_waveguide_traps_rays() {
        // r·n(r) has an interior maximum, so circular orbits exist
        let d = unit_disc();
        let guide = RefractionField::new(
            Profile::Sum(vec![
                Profile::Constant(1.0),
                Profile::Bumps {
                    bumps: vec![Bump::new(4.0, (0.0, 0.0), 0.3)],
                    cutoff: None,
                },
            ]),
            MediumKind::GaussianBumps,
            &d,
        )
        .unwrap();
        let r = non_trapping_check(&guide, &d, 200, 2);
        assert!(!r.ok);
        assert!(r.clone().into_result(&d).is_err());
    }
}
