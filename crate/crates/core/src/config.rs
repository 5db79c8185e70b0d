//! Serializable descriptions of domains, media and perturbations.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{star_shaped_domain, unit_disc, Domain, RadiusProfile};
use crate::media::{
    BicubicGrid, BoundaryCutoff, Bump, MediumKind, Profile, RefractionField, ScalarField, CUTOFF_WIDTH_FRACTION,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    #[default]
    Disc,
    /// r(α) = a₀ + Σ (a_k cos kα + b_k sin kα), coefficients `[a₀, a₁, b₁, …]`.
    Star { fourier_coeffs: Vec<f64> },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        match self {
            DomainSpec::Disc => Ok(unit_disc()),
            DomainSpec::Star { fourier_coeffs } => star_shaped_domain(RadiusProfile::new(fourier_coeffs.clone())?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub a: f64,
    pub c: [f64; 2],
    pub sigma: f64,
}

impl From<&BumpSpec> for Bump {
    fn from(b: &BumpSpec) -> Self {
        Bump::new(b.a, (b.c[0], b.c[1]), b.sigma)
    }
}

/// `"boundary"` (default width), `"none"`, or a width as a fraction of
/// diam(Ω).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffSpec {
    Named(String),
    Width(f64),
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec::Named("boundary".into())
    }
}

impl CutoffSpec {
    fn build(&self, domain: &Domain) -> Result<Option<BoundaryCutoff>> {
        match self {
            CutoffSpec::Named(s) if s == "boundary" => {
                Ok(Some(BoundaryCutoff::for_domain(domain, CUTOFF_WIDTH_FRACTION)))
            }
            CutoffSpec::Named(s) if s == "none" => Ok(None),
            CutoffSpec::Named(s) => Err(Error::InvalidArgument(format!("unknown cutoff {s:?}"))),
            CutoffSpec::Width(w) if *w > 0.0 => Ok(Some(BoundaryCutoff::for_domain(domain, *w))),
            CutoffSpec::Width(w) => Err(Error::InvalidArgument(format!("cutoff width {w} must be positive"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseSpec {
    Value(f64),
    Medium(Box<MediumSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MediumSpec {
    Constant {
        c: f64,
    },
    /// c0 + c2|x|² + c4|x|⁴ + c6|x|⁶.
    RadialPolynomial {
        c0: f64,
        #[serde(default)]
        c2: f64,
        #[serde(default)]
        c4: f64,
        #[serde(default)]
        c6: f64,
    },
    GaussianBumps {
        base: BaseSpec,
        bumps: Vec<BumpSpec>,
        #[serde(default)]
        cutoff: CutoffSpec,
    },
    /// CSV of `x,y,n` rows on a uniform grid covering Ω̄.
    GridSpline {
        csv: PathBuf,
    },
}

impl MediumSpec {
    /// Makes relative CSV paths relative to `dir`.
    pub fn resolve_paths(&mut self, dir: &Path) {
        match self {
            MediumSpec::GridSpline { csv } if csv.is_relative() => *csv = dir.join(&*csv),
            MediumSpec::GaussianBumps {
                base: BaseSpec::Medium(m),
                ..
            } => m.resolve_paths(dir),
            _ => {}
        }
    }

    fn profile(&self, domain: &Domain) -> Result<(Profile, MediumKind)> {
        Ok(match self {
            MediumSpec::Constant { c } => (Profile::Constant(*c), MediumKind::Constant),
            MediumSpec::RadialPolynomial { c0, c2, c4, c6 } => {
                (Profile::Radial(vec![*c0, *c2, *c4, *c6]), MediumKind::RadialPolynomial)
            }
            MediumSpec::GaussianBumps { base, bumps, cutoff } => {
                let base = match base {
                    BaseSpec::Value(v) => Profile::Constant(*v),
                    BaseSpec::Medium(m) => m.profile(domain)?.0,
                };
                let bumps = Profile::Bumps {
                    bumps: bumps.iter().map(Bump::from).collect(),
                    cutoff: cutoff.build(domain)?,
                };
                (Profile::Sum(vec![base, bumps]), MediumKind::GaussianBumps)
            }
            MediumSpec::GridSpline { csv } => (
                Profile::Grid(Arc::new(read_grid_csv(csv)?)),
                MediumKind::GridSpline,
            ),
        })
    }
}

/// Reads `x,y,n` rows, with or without a header line.
pub fn read_grid_csv(path: &Path) -> Result<BicubicGrid> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let vals: Vec<f64> = rec.iter().filter_map(|v| v.parse().ok()).collect();
        match vals.as_slice() {
            [x, y, n] => samples.push((*x, *y, *n)),
            _ if k == 0 => continue,
            _ => {
                return Err(Error::OutOfClass(format!(
                    "{}: row {} is not three numbers",
                    path.display(),
                    k + 1
                )))
            }
        }
    }
    BicubicGrid::from_samples(&samples)
}

/// Builds a medium, checking positivity on the sample grid.
pub fn make_medium(spec: &MediumSpec, domain: &Domain) -> Result<RefractionField> {
    let (profile, kind) = spec.profile(domain)?;
    RefractionField::new(profile, kind, domain)
}

/// Perturbations and basis functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    Bumps {
        bumps: Vec<BumpSpec>,
        #[serde(default)]
        cutoff: CutoffSpec,
    },
    /// Σ_k coeffs[k]·|x|^{2k}.
    Radial { coeffs: Vec<f64> },
}

pub fn make_field(spec: &FieldSpec, domain: &Domain) -> Result<ScalarField> {
    Ok(match spec {
        FieldSpec::Zero => ScalarField::zero(),
        FieldSpec::Bumps { bumps, cutoff } => ScalarField::new(
            Profile::Bumps {
                bumps: bumps.iter().map(Bump::from).collect(),
                cutoff: cutoff.build(domain)?,
            },
            domain,
        ),
        FieldSpec::Radial { coeffs } => ScalarField::new(Profile::Radial(coeffs.clone()), domain),
    })
}
