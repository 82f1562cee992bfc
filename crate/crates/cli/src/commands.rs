//! Subcommand implementations. Each returns the artifacts it wrote so callers
//! (and tests) can inspect them.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use dhym::phase::region_grid;
use dhym::solver::{
    continuity_solve_from, manufactured_problem, newton_solve, verify_supercritical, DhymProblem, SolveReport, Target,
};
use dhym::surface::{csub_on_surface, generator_trace, trace_formula, InvariantMetric, SurfaceKind, SurfaceModel, SurfaceParams};
use dhym::torus::io::{write_field, FieldData};
use dhym::torus::{hat_theta, HermitianFormField, ScalarField};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::config::{build_form, modes, read_field_file, CheckSpec, PathKind, RunConfig, Suite, TargetSpec};
use crate::{fmt_f64, suites, CliError};

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn output_dir(cfg: &RunConfig, over: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = match over {
        Some(p) => p.to_path_buf(),
        None => cfg.output_dir.as_deref().map(|p| cfg.resolve(p)).unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn write_field_file(path: &Path, field: &FieldData) -> Result<(), CliError> {
    let f = fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_field(&mut BufWriter::new(f), field).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Problem assembled from a config, plus the exact solution when manufactured.
pub struct Setup {
    pub problem: DhymProblem,
    pub exact: Option<ScalarField>,
    pub target_label: String,
}

pub fn build_problem(cfg: &RunConfig) -> Result<Setup, CliError> {
    let grid = cfg.grid()?;
    let eps0 = cfg.solver_config().map(|_| cfg.solver.eps0)?;
    let omega = match &cfg.omega {
        Some(s) => build_form(cfg, &grid, s)?,
        None => HermitianFormField::identity(&grid),
    };
    let chi0_spec = cfg.chi0.as_ref().ok_or_else(|| CliError::Config("missing [chi0] section".into()))?;
    let chi0 = build_form(cfg, &grid, chi0_spec)?;
    let target_spec = cfg.target.as_ref().ok_or_else(|| CliError::Config("missing [target] section".into()))?;
    let (problem, exact, target_label) = match target_spec {
        TargetSpec::Constant { value } => {
            (DhymProblem::new(omega, chi0, Target::Constant(*value), eps0), None, format!("constant {}", fmt_f64(*value)))
        }
        TargetSpec::HatTheta => {
            let h = hat_theta(&omega, &chi0).map_err(CliError::config)?.hat_theta;
            (DhymProblem::new(omega, chi0, Target::Constant(h), eps0), None, format!("hat-theta {}", fmt_f64(h)))
        }
        TargetSpec::File { path } => {
            let field = match read_field_file(&cfg.resolve(path))? {
                FieldData::Scalar(f) if f.grid() == &grid => f,
                _ => return Err(CliError::Config(format!("{}: expected a scalar field on [grid]", path.display()))),
            };
            (DhymProblem::new(omega, chi0, Target::Field(field), eps0), None, format!("file {}", path.display()))
        }
        TargetSpec::Manufactured { modes: m } => {
            let u_star = ScalarField::from_modes(&grid, &modes(&grid, m)?);
            (manufactured_problem(&u_star, omega, chi0, eps0), Some(u_star), "manufactured".to_string())
        }
    };
    Ok(Setup { problem: problem.map_err(CliError::config)?, exact, target_label })
}

#[derive(Debug)]
pub struct SolveArtifacts {
    pub solution: PathBuf,
    pub report: PathBuf,
    pub trace: PathBuf,
    pub residual_sup: f64,
}

pub fn solve(cfg: &RunConfig, out: Option<&Path>) -> Result<SolveArtifacts, CliError> {
    let solver = cfg.solver_config()?;
    let setup = build_problem(cfg)?;
    let prob = &setup.problem;
    let grid = prob.grid().clone();
    let u0 = if cfg.solver.init_amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        suites::random_potential(&mut rng, &grid, 4, cfg.solver.init_amplitude)
    } else {
        ScalarField::zeros(&grid)
    };
    let constant = matches!(prob.target(), Target::Constant(_));
    let path = match cfg.solver.path {
        PathKind::Auto if constant => PathKind::Continuity,
        PathKind::Auto => PathKind::Newton,
        PathKind::Continuity if !constant => {
            return Err(CliError::Config("path = continuity needs a constant target".into()));
        }
        p => p,
    };
    let rep = match path {
        PathKind::Continuity => continuity_solve_from(prob, &u0, &solver),
        _ => newton_solve(prob, &u0, &solver),
    }
    .map_err(CliError::Solver)?;
    if !rep.converged {
        return Err(CliError::Solver(dhym::Error::MaxItersExceeded {
            iterations: rep.newton_trace.len().saturating_sub(1),
            residual: rep.residual_sup,
        }));
    }

    let dir = output_dir(cfg, out)?;
    let solution = dir.join("solution.dhym");
    write_field_file(&solution, &FieldData::Scalar(rep.u.clone()))?;
    let report = dir.join("report.txt");
    write_text(&report, &report_text(&setup, &rep, path)?)?;
    let trace = dir.join("trace.csv");
    write_text(&trace, &trace_csv(&rep))?;
    Ok(SolveArtifacts { solution, report, trace, residual_sup: rep.residual_sup })
}

fn report_text(setup: &Setup, rep: &SolveReport, path: PathKind) -> Result<String, CliError> {
    let prob = &setup.problem;
    let sc = verify_supercritical(&rep.u, prob).map_err(CliError::Solver)?;
    let mut s = String::from("[solve]\n");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("n", prob.grid().dim().to_string());
    kv("points", prob.grid().points_per_axis().to_string());
    kv("target", setup.target_label.clone());
    kv("path", if path == PathKind::Continuity { "continuity" } else { "newton" }.into());
    kv("converged", rep.converged.to_string());
    kv("residual_sup", fmt_f64(rep.residual_sup));
    kv("c", fmt_f64(rep.c));
    kv("newton_iterations", rep.newton_trace.len().saturating_sub(1).to_string());
    kv("continuity_stages", rep.continuity_trace.len().to_string());
    kv("min_phase", fmt_f64(sc.min_phase));
    kv("min_phase_margin", fmt_f64(sc.margin));
    kv("supercritical", sc.ok.to_string());
    kv("u_mean", fmt_f64(rep.u.mean()));
    kv("u_sup", fmt_f64(rep.u.sup_norm()));
    if let Some(exact) = &setup.exact {
        kv("solution_error", fmt_f64(rep.u.sup_distance(&exact.mean_zero())));
    }
    Ok(s)
}

fn trace_csv(rep: &SolveReport) -> String {
    let mut s = String::from("iteration,t,residual_sup,step_length,min_phase,b_t,krylov_iterations\n");
    for st in &rep.newton_trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            st.iteration,
            fmt_f64(st.t),
            fmt_f64(st.residual_sup),
            fmt_f64(st.step_length),
            fmt_f64(st.min_phase),
            fmt_f64(st.c),
            st.krylov_iterations
        );
    }
    s
}

/// Runs a property suite; `suite` overrides the config's `[check] suite`.
pub fn check(cfg: &RunConfig, suite: Option<Suite>, out: Option<&Path>) -> Result<(PathBuf, suites::SuiteReport), CliError> {
    let mut spec: CheckSpec = match (&cfg.check, suite) {
        (Some(c), _) => c.clone(),
        (None, Some(s)) => CheckSpec { suite: s, samples: None, eps0: 0.1, dims: Vec::new(), points: 32 },
        (None, None) => return Err(CliError::Config("missing [check] section".into())),
    };
    if let Some(s) = suite {
        spec.suite = s;
    }
    let report = suites::run(&spec, cfg.seed)?;
    let dir = output_dir(cfg, out)?;
    let path = dir.join(format!("check_{}.csv", spec.suite.name()));
    write_text(&path, &report.to_csv())?;
    Ok((path, report))
}

pub struct SurfaceArgs {
    pub name: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub c: f64,
    pub w11: f64,
    pub w22: f64,
    pub m: f64,
    pub big_m: f64,
}

pub fn surface(args: &SurfaceArgs) -> Result<String, CliError> {
    let kind: SurfaceKind = args.name.parse().map_err(CliError::config)?;
    let d = SurfaceParams::default();
    let params = SurfaceParams { alpha: args.alpha.unwrap_or(d.alpha), beta: args.beta.unwrap_or(d.beta), q: args.q.unwrap_or(d.q) };
    let model = SurfaceModel::with_params(kind, params).map_err(CliError::config)?;
    let metric = InvariantMetric::new(args.w11, args.w22, Complex64::new(0.0, 0.0)).map_err(CliError::config)?;
    let rep = csub_on_surface(&model, &metric, args.c, args.m, args.big_m).map_err(CliError::config)?;

    let mut s = String::new();
    let _ = writeln!(s, "[surface]\nname = {kind}");
    let _ = writeln!(s, "alpha = {}\nbeta = {}\nq = {}", fmt_f64(params.alpha), fmt_f64(params.beta), fmt_f64(params.q));
    let _ = writeln!(s, "\n[brackets]");
    for i in 0..4 {
        for j in (i + 1)..4 {
            let terms: Vec<String> = (0..4)
                .filter(|&k| model.brackets[i][j][k] != 0.0)
                .map(|k| format!("{} e{}", fmt_f64(model.brackets[i][j][k]), k + 1))
                .collect();
            if !terms.is_empty() {
                let _ = writeln!(s, "[e{}, e{}] = {}", i + 1, j + 1, terms.join(" + "));
            }
        }
    }
    let _ = writeln!(s, "\n[structure]");
    let _ = writeln!(s, "jacobi_residual = {}", fmt_f64(model.jacobi_residual()));
    let _ = writeln!(s, "j_squared_residual = {}", fmt_f64(model.j_squared_residual()));
    let _ = writeln!(s, "type_residual = {}", fmt_f64(model.type_residual()));
    let _ = writeln!(s, "nijenhuis_residual = {}", fmt_f64(model.nijenhuis_residual()));
    let _ = writeln!(s, "bc_generator = phi{}", model.bc_generator + 1);
    let _ = writeln!(s, "bc_closedness_residual = {}", fmt_f64(model.bc_closedness_residual()));
    let _ = writeln!(s, "\n[trace]");
    let _ = writeln!(s, "w11 = {}\nw22 = {}", fmt_f64(args.w11), fmt_f64(args.w22));
    let _ = writeln!(s, "trace_formula = {}", fmt_f64(trace_formula(&metric, args.c)));
    let _ = writeln!(s, "generator_trace = {}", fmt_f64(generator_trace(&model, &metric, args.c)));
    let _ = writeln!(s, "\n[subsolution]");
    let _ = writeln!(s, "c = {}", fmt_f64(rep.c));
    let _ = writeln!(s, "lambdas = {}, {}", fmt_f64(rep.lambdas[0]), fmt_f64(rep.lambdas[1]));
    let _ = writeln!(s, "theta = {}", fmt_f64(rep.theta));
    let _ = writeln!(s, "bound = {}", fmt_f64(rep.bound));
    let _ = writeln!(s, "verdict = {:?}", rep.verdict);
    Ok(s)
}

/// Classification grid as CSV rows `lambda1,lambda2,class`.
pub fn region(sigma: f64, resolution: usize, scale: f64, offset: f64) -> Result<String, CliError> {
    if !(scale > 0.0 && scale.is_finite() && offset.is_finite()) {
        return Err(CliError::Config("scale must be positive and offset finite".into()));
    }
    let (centers, classes) = region_grid(sigma, resolution, scale, offset).map_err(CliError::config)?;
    let mut s = String::from("lambda1,lambda2,class\n");
    for (row, y) in centers.iter().enumerate() {
        for (col, x) in centers.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", fmt_f64(*x), fmt_f64(*y), classes[row * centers.len() + col].code());
        }
    }
    Ok(s)
}

/// `Θ̂` of an `(ω, χ)` pair given as field files.
pub fn angle_files(omega: &Path, chi: &Path) -> Result<String, CliError> {
    let load = |p: &Path| match read_field_file(p)? {
        FieldData::Hermitian(f) => Ok(f),
        FieldData::Scalar(_) => Err(CliError::Config(format!("{}: expected a hermitian-form field", p.display()))),
    };
    angle_text(&load(omega)?, &load(chi)?)
}

/// `Θ̂` of the config's `ω` and `χ₀`.
pub fn angle_config(cfg: &RunConfig) -> Result<String, CliError> {
    let grid = cfg.grid()?;
    let omega = match &cfg.omega {
        Some(s) => build_form(cfg, &grid, s)?,
        None => HermitianFormField::identity(&grid),
    };
    let chi = build_form(cfg, &grid, cfg.chi0.as_ref().ok_or_else(|| CliError::Config("missing [chi0] section".into()))?)?;
    angle_text(&omega, &chi)
}

fn angle_text(omega: &HermitianFormField, chi: &HermitianFormField) -> Result<String, CliError> {
    let a = hat_theta(omega, chi).map_err(CliError::config)?;
    Ok(format!(
        "hat_theta = {}\nmodulus = {}\nbranch_certificate = {}\n",
        fmt_f64(a.hat_theta),
        fmt_f64(a.modulus),
        fmt_f64(a.branch_certificate)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_is_symmetric() {
        let csv = region(std::f64::consts::FRAC_PI_2, 16, 1.0, 0.0).unwrap();
        let classes: Vec<u8> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(classes[i * 16 + j], classes[j * 16 + i]);
            }
        }
    }

    #[test]
    fn region_rejects_bad_resolution() {
        assert!(matches!(region(1.0, 0, 1.0, 0.0), Err(CliError::Config(_))));
        assert!(matches!(region(1.0, 4096, 1.0, 0.0), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_surface_is_config_error() {
        let args = SurfaceArgs { name: "unknown".into(), alpha: None, beta: None, q: None, c: 1.0, w11: 1.0, w22: 1.0, m: 1.0, big_m: 1.0 };
        assert_eq!(surface(&args).unwrap_err().exit_code(), 2);
    }
}
