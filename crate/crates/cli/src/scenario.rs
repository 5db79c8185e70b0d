//! TOML scenario files.

use std::path::Path;

use rigidity_core::config::{DomainSpec, FieldSpec, MediumSpec};
use rigidity_core::Resolution;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub domain: DomainSpec,
    pub medium: Option<MediumSpec>,
    pub medium2: Option<MediumSpec>,
    pub perturbation: Option<FieldSpec>,
    /// `[N_x, N_φ, N_s]` triples, coarse to fine.
    pub grids: Option<Vec<[usize; 3]>>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub hodograph: HodographSection,
    #[serde(default)]
    pub linearization: LinearizationSection,
    #[serde(default)]
    pub disc: DiscSection,
    #[serde(default)]
    pub exit_angle: ExitAngleSection,
    #[serde(default)]
    pub reconstruct: ReconstructSection,
    #[serde(default)]
    pub identity: IdentitySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    /// Boundary arc length of the entry point; ignored when `x` is set.
    pub s: f64,
    /// Interior end point for a backward trace.
    pub x: Option<[f64; 2]>,
    pub phi: f64,
    /// Number of rays fanned across the incoming cone at `s`.
    pub fan: usize,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            s: std::f64::consts::PI,
            x: None,
            phi: 0.0,
            fan: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HodographSection {
    pub ns: usize,
    pub nphi: usize,
}

impl Default for HodographSection {
    fn default() -> Self {
        Self { ns: 64, nphi: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearizationSection {
    pub eps: Vec<f64>,
    pub samples: usize,
}

impl Default for LinearizationSection {
    fn default() -> Self {
        Self {
            eps: vec![1e-2, 1e-3],
            samples: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscSection {
    pub radii: Vec<f64>,
    pub n_phi: usize,
}

impl Default for DiscSection {
    fn default() -> Self {
        Self {
            radii: vec![0.0, 0.25, 0.5, 0.75],
            n_phi: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExitAngleSection {
    pub s_y: f64,
    pub s_x: f64,
    pub spacing: f64,
}

impl Default for ExitAngleSection {
    fn default() -> Self {
        Self {
            s_y: std::f64::consts::PI,
            s_x: 0.7,
            spacing: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructSection {
    /// Basis b_k; defaults to (1 − |x|²)|x|^{2(k−1)}, k = 1..=3.
    pub basis: Option<Vec<FieldSpec>>,
    /// Coefficients of the synthetic truth over the basis.
    pub truth_coefficients: Option<Vec<f64>>,
    pub ns: usize,
    pub nphi: usize,
    pub iters: usize,
    pub tol: f64,
    pub lambda_reg: f64,
}

impl Default for ReconstructSection {
    fn default() -> Self {
        Self {
            basis: None,
            truth_coefficients: None,
            ns: 32,
            nphi: 32,
            iters: 8,
            tol: 1e-6,
            lambda_reg: rigidity_core::reconstruction::DEFAULT_LAMBDA_REG,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitySection {
    pub samples: usize,
}

impl Default for IdentitySection {
    fn default() -> Self {
        Self { samples: 10_000 }
    }
}

impl Scenario {
    /// Parses a TOML file; relative CSV paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut s: Scenario =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for m in [&mut s.medium, &mut s.medium2].into_iter().flatten() {
            m.resolve_paths(dir);
        }
        Ok(s)
    }

    pub fn resolutions(&self) -> Option<Vec<Resolution>> {
        self.grids
            .as_ref()
            .map(|g| g.iter().map(|r| Resolution::new(r[0], r[1], r[2])).collect())
    }
}
