use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{
    build_circle_mesh, build_lshape_mesh, build_square_mesh_with, BoundaryTag, DiagonalPattern, Mesh, SquareDomain,
};
use crate::spaces::{BcMode, SpaceDescriptor};
use crate::speig::EigConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// `(0,1)²`
    Square,
    /// `(-1,1)²`
    BiUnitSquare,
    /// Unit disk, approximated by polygons.
    Circle,
    /// `(-1,1)² \ (-1,0]²`
    LShape,
}

impl Domain {
    /// Mesh size used in fits: side length over `N`.
    pub fn h(self, n: usize) -> f64 {
        match self {
            Domain::BiUnitSquare => 2.0 / n as f64,
            _ => 1.0 / n as f64,
        }
    }

    pub fn h_definition(self) -> &'static str {
        match self {
            Domain::Square => "h = 1/N (unit square, N cells per side)",
            Domain::BiUnitSquare => "h = 2/N (square (-1,1)^2, N cells per side)",
            Domain::Circle => "h = 1/N (unit disk, N rings)",
            Domain::LShape => "h = 1/N (L-shape, N cells per unit length)",
        }
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "square" | "unitsquare" => Ok(Domain::Square),
            "biunitsquare" | "biunit" => Ok(Domain::BiUnitSquare),
            "circle" | "disk" => Ok(Domain::Circle),
            "lshape" => Ok(Domain::LShape),
            _ => Err(Error::Config(format!(
                "unknown domain {s:?}; expected Square, BiUnitSquare, Circle or LShape"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryChoice {
    /// No-slip on the whole boundary.
    #[default]
    Dirichlet,
    /// No-slip on the bottom side `y = min y`, traction-free elsewhere
    /// (square domains only).
    Mixed,
}

impl FromStr for BoundaryChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryChoice::Dirichlet),
            "mixed" => Ok(BoundaryChoice::Mixed),
            _ => Err(Error::Config(format!("unknown boundary condition {s:?}; expected dirichlet or mixed"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveParams {
    /// `N` of the structured starting mesh.
    pub initial_n: usize,
    pub target: usize,
    pub fraction: f64,
    pub max_iterations: usize,
    pub dof_cap: usize,
    pub reference: Option<f64>,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams {
            initial_n: 4,
            target: 0,
            fraction: 0.5,
            max_iterations: 40,
            dof_cap: 50_000,
            reference: None,
        }
    }
}

/// One experiment, read from JSON. Every key is optional.
///
/// ```json
/// { "domain": "BiUnitSquare", "scheme": [1, 0], "mu": 1.0, "N": [20, 30, 40, 50],
///   "nev": 5, "bc": "dirichlet", "diagonals": "alternating", "out": "results",
///   "seed": 7, "adaptive": { "initial_n": 4, "dof_cap": 50000, "reference": 32.13183 } }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: Domain,
    /// `(ℓ, k)`: stress family and velocity degree.
    pub scheme: (u8, usize),
    pub mu: f64,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub nev: usize,
    pub bc: BoundaryChoice,
    /// Cell splitting for square domains.
    pub diagonals: DiagonalPattern,
    pub out: PathBuf,
    /// Start-vector seed for the eigensolver.
    pub seed: u64,
    pub shift: f64,
    pub tol: f64,
    pub adaptive: AdaptiveParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let eig = EigConfig::default();
        ExperimentConfig {
            domain: Domain::BiUnitSquare,
            scheme: (1, 0),
            mu: 1.0,
            n: vec![20, 30, 40, 50],
            nev: 5,
            bc: BoundaryChoice::Dirichlet,
            diagonals: DiagonalPattern::Alternating,
            out: PathBuf::from("results"),
            seed: eig.seed,
            shift: eig.shift,
            tol: eig.tol,
            adaptive: AdaptiveParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid experiment configuration: {e}")))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn descriptor(&self) -> Result<SpaceDescriptor> {
        SpaceDescriptor::new(self.scheme.0, self.scheme.1)
    }

    pub fn bc_mode(&self) -> BcMode {
        match self.bc {
            BoundaryChoice::Dirichlet => BcMode::AllDirichlet,
            BoundaryChoice::Mixed => BcMode::MixedTest3,
        }
    }

    pub fn eig_config(&self) -> EigConfig {
        EigConfig {
            nev: self.nev,
            shift: self.shift,
            tol: self.tol,
            seed: self.seed,
            ..EigConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.descriptor()?;
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("viscosity must be positive, got {}", self.mu)));
        }
        if self.nev == 0 {
            return Err(Error::Config("nev must be at least 1".into()));
        }
        if let Some(&0) = self.n.iter().find(|&&n| n == 0) {
            return Err(Error::Config("mesh parameters N must be positive".into()));
        }
        if self.bc == BoundaryChoice::Mixed && !matches!(self.domain, Domain::Square | Domain::BiUnitSquare) {
            return Err(Error::Config("mixed boundary conditions are defined for square domains only".into()));
        }
        Ok(())
    }

    /// Extra checks for adaptive runs.
    pub fn validate_adaptive(&self) -> Result<()> {
        self.validate()?;
        if self.scheme.1 != 0 {
            return Err(Error::Config(format!(
                "adaptive refinement requires k = 0, got k = {}",
                self.scheme.1
            )));
        }
        let a = &self.adaptive;
        if a.initial_n == 0 {
            return Err(Error::Config("initial_n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&a.fraction) {
            return Err(Error::Config(format!("marking fraction must lie in [0, 1], got {}", a.fraction)));
        }
        Ok(())
    }

    /// Structured mesh of the configured domain, with boundary tags set for
    /// the configured boundary conditions.
    pub fn mesh(&self, n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::Config("N must be positive".into()));
        }
        let mut mesh = match self.domain {
            Domain::Square => build_square_mesh_with(n, SquareDomain::Unit, self.diagonals),
            Domain::BiUnitSquare => build_square_mesh_with(n, SquareDomain::BiUnit, self.diagonals),
            Domain::Circle => build_circle_mesh(n),
            Domain::LShape => build_lshape_mesh(n),
        };
        if self.bc == BoundaryChoice::Mixed {
            let bottom = mesh.vertices().iter().fold(f64::INFINITY, |m, p| m.min(p[1]));
            mesh.retag_boundary(|mid| {
                if (mid[1] - bottom).abs() < 1e-12 {
                    BoundaryTag::Dirichlet
                } else {
                    BoundaryTag::Neumann
                }
            });
        }
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"domain": "Circle", "scheme": [2, 1], "N": [4, 8]}"#).unwrap();
        assert_eq!(cfg.domain, Domain::Circle);
        assert_eq!(cfg.scheme, (2, 1));
        assert_eq!(cfg.nev, 5);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::from_json(r#"{"domian": "Circle"}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        cfg.scheme = (3, 0);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.scheme = (1, 1);
        assert!(cfg.validate_adaptive().is_err());
        cfg.scheme = (1, 0);
        cfg.domain = Domain::LShape;
        cfg.bc = BoundaryChoice::Mixed;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mixed_tags_only_the_bottom() {
        let cfg = ExperimentConfig {
            domain: Domain::Square,
            bc: BoundaryChoice::Mixed,
            ..Default::default()
        };
        let mesh = cfg.mesh(4).unwrap();
        let dirichlet = mesh.edges().iter().filter(|e| e.tag == BoundaryTag::Dirichlet).count();
        let neumann = mesh.edges().iter().filter(|e| e.tag == BoundaryTag::Neumann).count();
        assert_eq!((dirichlet, neumann), (4, 12));
        assert_eq!("l-shape".parse::<Domain>().unwrap(), Domain::LShape);
        assert!("torus".parse::<Domain>().is_err());
    }
}
