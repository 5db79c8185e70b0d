//! Travel-time tomography over a finite boundary-vanishing basis.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{theta, Domain};
use crate::hodograph::{build_hodograph, HodographTable};
use crate::media::{MediumKind, Profile, RefractionField, ScalarField};
use crate::quadrature::{gauss_legendre_on, ordered_sum};
use crate::tracer::{GeodesicPath, TraceOptions};
use crate::variation::first_variation;

/// Default Tikhonov weight.
pub const DEFAULT_LAMBDA_REG: f64 = 1e-8;

/// n = n₀ + Σ c_k b_k with every b_k vanishing on Γ.
#[derive(Debug, Clone)]
pub struct ModelParameterization {
    pub base: RefractionField,
    pub basis: Vec<ScalarField>,
}

impl ModelParameterization {
    pub fn new(base: RefractionField, basis: Vec<ScalarField>) -> Result<Self> {
        if let Some(k) = basis.iter().position(|b| !b.vanishes_on_boundary()) {
            return Err(Error::InvalidArgument(format!(
                "basis element {k} does not vanish on the boundary"
            )));
        }
        Ok(Self { base, basis })
    }

    /// b_k = (1 − |x|²)|x|^{2(k−1)} for k = 1..=count, on the unit disc.
    pub fn radial(base: RefractionField, count: usize, domain: &Domain) -> Result<Self> {
        let basis = (1..=count)
            .map(|k| {
                let mut c = vec![0.0; k + 1];
                c[k - 1] = 1.0;
                c[k] = -1.0;
                ScalarField::new(Profile::Radial(c), domain)
            })
            .collect();
        Self::new(base, basis)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// The field for coefficients `c`; zero coefficients return n₀ itself.
    pub fn field(&self, c: &[f64], domain: &Domain) -> Result<RefractionField> {
        if c.len() != self.basis.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} basis elements",
                c.len(),
                self.basis.len()
            )));
        }
        if c.iter().all(|&v| v == 0.0) {
            return Ok(self.base.clone());
        }
        let mut parts = vec![self.base.profile().clone()];
        parts.extend(
            c.iter()
                .zip(&self.basis)
                .map(|(&ck, b)| Profile::Scaled(ck, Box::new(b.profile().clone()))),
        );
        RefractionField::new(Profile::Sum(parts), MediumKind::Composite, domain)
    }
}

/// Synthetic inversion problem.
#[derive(Debug, Clone)]
pub struct TomographyProblem {
    pub observed: HodographTable,
    pub parameterization: ModelParameterization,
    pub lambda_reg: f64,
}

impl TomographyProblem {
    /// Observations from `truth` on an `ns × nphi` grid.
    pub fn synthetic(
        truth: &RefractionField,
        parameterization: ModelParameterization,
        domain: &Domain,
        ns: usize,
        nphi: usize,
    ) -> Result<Self> {
        Ok(Self {
            observed: build_hodograph(truth, domain, ns, nphi)?,
            parameterization,
            lambda_reg: DEFAULT_LAMBDA_REG,
        })
    }

    fn live_cells(&self) -> Vec<(usize, usize)> {
        let t = &self.observed;
        (0..t.ns)
            .flat_map(|i| (0..t.nphi).map(move |j| (i, j)))
            .filter(|&(i, j)| t.is_live(i, j))
            .collect()
    }
}

/// Hodograph of n₀ + Σ c_k b_k.
pub fn forward_model(
    parameterization: &ModelParameterization,
    c: &[f64],
    domain: &Domain,
    ns: usize,
    nphi: usize,
) -> Result<HodographTable> {
    build_hodograph(&parameterization.field(c, domain)?, domain, ns, nphi)
}

/// ∫ b dσ along a recorded path, with cubic Hermite interpolation of the
/// position between nodes and three-point Gauss–Legendre per segment.
pub fn xray_row(path: &GeodesicPath, basis: &ScalarField) -> f64 {
    let (t, w) = gauss_legendre_on(3, 0.0, 1.0);
    ordered_sum(path.nodes.windows(2).flat_map(|seg| {
        let (a, b) = (&seg[0], &seg[1]);
        let h = b.sigma - a.sigma;
        let (ta, tb) = (theta(a.phi) * h, theta(b.phi) * h);
        let (t, w) = (t.clone(), w.clone());
        t.into_iter().zip(w).map(move |(u, wu)| {
            let u2 = u * u;
            let u3 = u2 * u;
            let x = a.x * (2.0 * u3 - 3.0 * u2 + 1.0)
                + ta * (u3 - 2.0 * u2 + u)
                + b.x * (-2.0 * u3 + 3.0 * u2)
                + tb * (u3 - u2);
            wu * h * basis.value(&x)
        })
    }))
}

/// ∂τ(s, φ)/∂c_k: the first variation of the chord travel time under
/// n → n + c·b_k, including the shift of the exit point along Γ.
pub fn jacobian_row(
    s: f64,
    phi: f64,
    field: &RefractionField,
    basis: &ScalarField,
    domain: &Domain,
) -> Result<f64> {
    first_variation(s, phi, field, basis.profile(), domain, &TraceOptions::default()).map(|v| v.total())
}

fn jacobian(
    problem: &TomographyProblem,
    field: &RefractionField,
    cells: &[(usize, usize)],
    domain: &Domain,
) -> Result<DMatrix<f64>> {
    let t = &problem.observed;
    let basis = &problem.parameterization.basis;
    let rows: Vec<Result<Vec<f64>>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let (s, phi) = (t.s(i), t.phi(j));
            basis
                .iter()
                .map(|b| jacobian_row(s, phi, field, b, domain).map_err(|e| e.at_cell(i, j)))
                .collect()
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(cells.len(), basis.len(), |r, k| rows[r][k]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussNewtonResult {
    pub coefficients: Vec<f64>,
    /// RMS data residual before each update and after the last one.
    pub residual_history: Vec<f64>,
    pub coefficient_history: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn rms(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (ordered_sum(v.iter().map(|x| x * x)) / v.len() as f64).sqrt()
}

/// Gauss–Newton from `init`, re-tracing rays in the current model at every
/// iteration.
///
/// Stops when the relative drop of the RMS residual falls below `tol`, when
/// the residual is at round-off level, or after `max_iter` updates.
pub fn gauss_newton_solve(
    problem: &TomographyProblem,
    init: &[f64],
    domain: &Domain,
    max_iter: usize,
    tol: f64,
) -> Result<GaussNewtonResult> {
    let param = &problem.parameterization;
    if init.len() != param.len() {
        return Err(Error::InvalidArgument(format!(
            "{} initial coefficients for {} basis elements",
            init.len(),
            param.len()
        )));
    }
    let cells = problem.live_cells();
    if cells.len() <= param.len() {
        return Err(Error::InvalidArgument(format!(
            "{} data rows for {} parameters",
            cells.len(),
            param.len()
        )));
    }
    let obs = DVector::from_iterator(cells.len(), cells.iter().map(|&(i, j)| problem.observed.get(i, j)));
    let scale = rms(&obs).max(1.0);
    let mut c = DVector::from_column_slice(init);
    let mut out = GaussNewtonResult {
        coefficients: init.to_vec(),
        residual_history: Vec::new(),
        coefficient_history: vec![init.to_vec()],
        iterations: 0,
    };
    let mut growth = 0;
    loop {
        let field = param.field(c.as_slice(), domain)?;
        let t = build_hodograph(&field, domain, problem.observed.ns, problem.observed.nphi)?;
        let model = DVector::from_iterator(cells.len(), cells.iter().map(|&(i, j)| t.get(i, j)));
        let r = &obs - model;
        let res = rms(&r);
        if let Some(&prev) = out.residual_history.last() {
            growth = if res > prev { growth + 1 } else { 0 };
            out.residual_history.push(res);
            if growth >= 2 {
                return Err(Error::Diverged {
                    history: out.residual_history,
                });
            }
            if res <= 1e-14 * scale || (prev - res).abs() < tol * prev {
                break;
            }
        } else {
            out.residual_history.push(res);
            if res <= 1e-14 * scale {
                break;
            }
        }
        if out.iterations == max_iter {
            break;
        }
        let j = jacobian(problem, &field, &cells, domain)?;
        let jtj = j.transpose() * &j;
        let eig = jtj.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        if !(lo > 1e-12 * hi.max(f64::MIN_POSITIVE)) && problem.lambda_reg <= 1e-12 * hi {
            return Err(Error::RankDeficient);
        }
        let a = jtj + DMatrix::identity(param.len(), param.len()) * problem.lambda_reg;
        let chol = a.cholesky().ok_or(Error::RankDeficient)?;
        let step = chol.solve(&(j.transpose() * r));
        c += step;
        out.iterations += 1;
        out.coefficient_history.push(c.as_slice().to_vec());
    }
    out.coefficients = c.as_slice().to_vec();
    Ok(out)
}

/// Largest relative difference between Jacobian columns and one-sided
/// finite differences (τ(c + δe_k) − τ(c))/δ over the live cells.
pub fn jacobian_fd_check(
    param: &ModelParameterization,
    c: &[f64],
    domain: &Domain,
    ns: usize,
    nphi: usize,
    delta: f64,
) -> Result<Vec<f64>> {
    let base = forward_model(param, c, domain, ns, nphi)?;
    let problem = TomographyProblem {
        observed: base.clone(),
        parameterization: param.clone(),
        lambda_reg: 0.0,
    };
    let cells = problem.live_cells();
    let field = param.field(c, domain)?;
    let j = jacobian(&problem, &field, &cells, domain)?;
    (0..param.len())
        .map(|k| {
            let mut ck = c.to_vec();
            ck[k] += delta;
            let moved = forward_model(param, &ck, domain, ns, nphi)?;
            let fd: Vec<f64> = cells
                .iter()
                .map(|&(i, jj)| (moved.get(i, jj) - base.get(i, jj)) / delta)
                .collect();
            let num = ordered_sum(fd.iter().enumerate().map(|(r, v)| (v - j[(r, k)]).powi(2))).sqrt();
            let den = ordered_sum(fd.iter().map(|v| v * v)).sqrt();
            Ok(num / den)
        })
        .collect()
}

/// RMS coefficient error.
pub fn coefficient_rms_error(estimate: &[f64], truth: &[f64]) -> f64 {
    (ordered_sum(estimate.iter().zip(truth).map(|(a, b)| (a - b).powi(2))) / truth.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::unit_disc;
    use crate::media::{BoundaryCutoff, Bump, CUTOFF_WIDTH_FRACTION};
    use crate::tracer::trace_chord;
    use std::f64::consts::PI;

    #[test]
    fn xray_row_examples() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let p = trace_chord(PI, 0.0, &one, &d, &TraceOptions::default()).unwrap();
        let b = ScalarField::new(Profile::Radial(vec![1.0, -1.0]), &d);
        assert!((xray_row(&p, &b) - 4.0 / 3.0).abs() < 1e-12);
        let far = ScalarField::new(
            Profile::Bumps {
                bumps: vec![Bump::new(1.0, (0.0, 0.8), 0.02)],
                cutoff: Some(BoundaryCutoff::for_domain(&d, CUTOFF_WIDTH_FRACTION)),
            },
            &d,
        );
        assert!(xray_row(&p, &far).abs() < 1e-10);
        assert!(jacobian_row(PI, 0.0, &one, &far, &d).unwrap().abs() < 1e-10);
    }

    #[test]
    fn zero_coefficients_reproduce_base() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let m = ModelParameterization::radial(one.clone(), 3, &d).unwrap();
        let a = forward_model(&m, &[0.0; 3], &d, 12, 12).unwrap();
        let b = build_hodograph(&one, &d, 12, 12).unwrap();
        assert_eq!(a.tau, b.tau);
        assert!(matches!(m.field(&[-2.0, 0.0, 0.0], &d), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn truth_at_base_needs_no_update() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let m = ModelParameterization::radial(one.clone(), 3, &d).unwrap();
        let p = TomographyProblem::synthetic(&one, m, &d, 12, 12).unwrap();
        let r = gauss_newton_solve(&p, &[0.0; 3], &d, 8, 1e-3).unwrap();
        assert!(r.iterations <= 1);
        assert!(r.residual_history[0] < 1e-12);
    }

    #[test]
    fn non_vanishing_basis_rejected() {
        let d = unit_disc();
        let one = RefractionField::constant(1.0, &d).unwrap();
        let b = ScalarField::new(Profile::Constant(1.0), &d);
        assert!(ModelParameterization::new(one, vec![b]).is_err());
    }
}
