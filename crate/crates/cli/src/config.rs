//! TOML run configuration.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use dhym::hermitian::HermitianMatrix;
use dhym::solver::{KrylovMethod, SolverConfig};
use dhym::torus::io::{read_field, FieldData};
use dhym::torus::{i_ddbar, FourierMode, HermitianFormField, ScalarField, TorusGrid};
use num_complex::Complex64;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub grid: Option<GridSpec>,
    pub omega: Option<FormSpec>,
    pub chi0: Option<FormSpec>,
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub check: Option<CheckSpec>,
    /// Directory that relative paths resolve against; set by [`RunConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub amplitude: f64,
    /// Integer wave vector over `(x₁, y₁, x₂, y₂)`; may be shorter than 4.
    pub wave: Vec<i32>,
    #[serde(default)]
    pub phase: f64,
}

/// Hermitian-form field specification.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FormSpec {
    Identity,
    /// Constant matrix with the given diagonal and (for n = 2) `[re, im]` of entry (1, 2).
    Constant {
        diag: Vec<f64>,
        offdiag: Option<[f64; 2]>,
    },
    /// `f(x) · Id` with `f = base + Σ modes`.
    Scalar {
        base: f64,
        #[serde(default)]
        modes: Vec<ModeSpec>,
    },
    /// `A + i∂∂̄w`: a constant matrix plus the complex Hessian of a potential.
    Closed {
        diag: Vec<f64>,
        offdiag: Option<[f64; 2]>,
        potential: Vec<ModeSpec>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Constant { value: f64 },
    /// The constant `Θ̂(ω, χ₀)`.
    HatTheta,
    File { path: PathBuf },
    /// Target built from an exact solution given as Fourier modes.
    Manufactured { modes: Vec<ModeSpec> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    /// Continuity for constant targets, Newton otherwise.
    Auto,
    Newton,
    Continuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Gmres,
    Cgnr,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub eps0: f64,
    pub tol: f64,
    pub krylov_tol: f64,
    pub krylov_iters: usize,
    pub max_iters: usize,
    pub method: MethodKind,
    pub restart: usize,
    pub path: PathKind,
    /// Amplitude of a seeded random initial potential; 0 starts from `u = 0`.
    pub init_amplitude: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            eps0: 0.1,
            tol: d.tol,
            krylov_tol: d.krylov_tol,
            krylov_iters: d.krylov_iters,
            max_iters: d.max_iters,
            method: MethodKind::Gmres,
            restart: 20,
            path: PathKind::Auto,
            init_amplitude: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Subsolution,
    Lemma23,
    Invariance,
    Derivatives,
    Prop21,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Subsolution => "subsolution",
            Suite::Lemma23 => "lemma23",
            Suite::Invariance => "invariance",
            Suite::Derivatives => "derivatives",
            Suite::Prop21 => "prop21",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "subsolution" => Ok(Suite::Subsolution),
            "lemma23" => Ok(Suite::Lemma23),
            "invariance" => Ok(Suite::Invariance),
            "derivatives" => Ok(Suite::Derivatives),
            "prop21" => Ok(Suite::Prop21),
            other => Err(CliError::Config(format!("unknown suite '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub suite: Suite,
    /// Samples per case; suite-specific default when absent.
    pub samples: Option<usize>,
    /// Phase margin for `lemma23` and `prop21`.
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    /// Complex dimensions to sweep; suite-specific default when empty.
    #[serde(default)]
    pub dims: Vec<usize>,
    /// Grid points per axis for `invariance`.
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_eps0() -> f64 {
    0.1
}

fn default_points() -> usize {
    32
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn grid(&self) -> Result<TorusGrid, CliError> {
        let g = self.grid.ok_or_else(|| CliError::Config("missing [grid] section".into()))?;
        TorusGrid::new(g.n, g.points).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("solver.{name} must be positive, got {v}")))
            }
        };
        positive("eps0", s.eps0)?;
        positive("tol", s.tol)?;
        positive("krylov_tol", s.krylov_tol)?;
        if s.krylov_iters == 0 || s.max_iters == 0 || s.restart == 0 {
            return Err(CliError::Config("solver iteration counts must be positive".into()));
        }
        if !(s.init_amplitude >= 0.0) {
            return Err(CliError::Config("solver.init_amplitude must be non-negative".into()));
        }
        Ok(SolverConfig {
            tol: s.tol,
            krylov_tol: s.krylov_tol,
            krylov_iters: s.krylov_iters,
            max_iters: s.max_iters,
            method: match s.method {
                MethodKind::Gmres => KrylovMethod::Gmres { restart: s.restart },
                MethodKind::Cgnr => KrylovMethod::Cgnr,
            },
            ..SolverConfig::default()
        })
    }
}

pub fn modes(grid: &TorusGrid, specs: &[ModeSpec]) -> Result<Vec<FourierMode>, CliError> {
    specs
        .iter()
        .map(|m| {
            if m.wave.len() > grid.real_dims() {
                return Err(CliError::Config(format!(
                    "wave vector {:?} longer than {} real axes",
                    m.wave,
                    grid.real_dims()
                )));
            }
            if !m.amplitude.is_finite() || !m.phase.is_finite() {
                return Err(CliError::Config("mode amplitude and phase must be finite".into()));
            }
            let mut w = [0; 4];
            w[..m.wave.len()].copy_from_slice(&m.wave);
            Ok(FourierMode::new(m.amplitude, w, m.phase))
        })
        .collect()
}

fn constant_matrix(n: usize, diag: &[f64], offdiag: Option<[f64; 2]>) -> Result<HermitianMatrix, CliError> {
    if diag.len() != n {
        return Err(CliError::Config(format!("diag has {} entries, expected {n}", diag.len())));
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for (i, d) in diag.iter().enumerate() {
        entries[i * n + i] = Complex64::new(*d, 0.0);
    }
    if let Some([re, im]) = offdiag {
        if n != 2 {
            return Err(CliError::Config("offdiag is only supported for n = 2".into()));
        }
        entries[1] = Complex64::new(re, im);
        entries[2] = Complex64::new(re, -im);
    }
    HermitianMatrix::from_entries(n, &entries).map_err(|e| CliError::Config(e.to_string()))
}

pub fn read_field_file(path: &Path) -> Result<FieldData, CliError> {
    let f = File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    read_field(&mut BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn build_form(cfg: &RunConfig, grid: &TorusGrid, spec: &FormSpec) -> Result<HermitianFormField, CliError> {
    let n = grid.dim();
    match spec {
        FormSpec::Identity => Ok(HermitianFormField::identity(grid)),
        FormSpec::Constant { diag, offdiag } => {
            HermitianFormField::constant(grid, &constant_matrix(n, diag, *offdiag)?).map_err(CliError::config)
        }
        FormSpec::Scalar { base, modes: m } => {
            let fm = modes(grid, m)?;
            HermitianFormField::from_fn(grid, |x| {
                HermitianMatrix::scaled_identity(n, base + fm.iter().map(|md| md.eval(&x)).sum::<f64>())
            })
            .map_err(CliError::config)
        }
        FormSpec::Closed { diag, offdiag, potential } => {
            let a = HermitianFormField::constant(grid, &constant_matrix(n, diag, *offdiag)?).map_err(CliError::config)?;
            let w = ScalarField::from_modes(grid, &modes(grid, potential)?);
            a.add(&i_ddbar(&w)).map_err(CliError::config)
        }
        FormSpec::File { path } => match read_field_file(&cfg.resolve(path))? {
            FieldData::Hermitian(f) if f.grid() == grid => Ok(f),
            FieldData::Hermitian(_) => Err(CliError::Config(format!("{}: grid does not match [grid]", path.display()))),
            FieldData::Scalar(_) => Err(CliError::Config(format!("{}: expected a hermitian-form field", path.display()))),
        },
    }
}
