//! Seeded property suites run by `dhym check`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::Write as _;

use dhym::hermitian::{
    d_f, eig_pair, eigenvalue_derivatives, spectral_function_derivatives, theta_arctan, HermitianMatrix, SpectralFunction,
    SquareMatrix,
};
use dhym::phase::{
    csub_bounded_oracle, csub_lattice_check, is_csub_pointwise, lemma23_check, level_set_sample, prop21_kappa_estimate,
    supercritical_floor, PhaseSpec, ORACLE_STEPS, ORACLE_T_MAX,
};
use dhym::torus::{hat_theta, i_ddbar, FourierMode, HermitianFormField, ScalarField, TorusGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CheckSpec, Suite};
use crate::{fmt_f64, CliError};

/// One line of a suite report.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub case: String,
    pub samples: usize,
    pub failures: usize,
    /// Worst error or margin observed (meaning depends on the case).
    pub worst: f64,
    /// Whether failures in this row fail the suite.
    pub gating: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.gating).map(|r| r.failures).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,case,samples,failures,worst,gating\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                self.suite.name(),
                r.case,
                r.samples,
                r.failures,
                fmt_f64(r.worst),
                r.gating
            );
        }
        s
    }
}

pub fn run(spec: &CheckSpec, seed: u64) -> Result<SuiteReport, CliError> {
    if spec.samples == Some(0) {
        return Err(CliError::Config("check.samples must be positive".into()));
    }
    let rows = match spec.suite {
        Suite::Derivatives => derivatives(spec, seed)?,
        Suite::Subsolution => subsolution(spec, seed)?,
        Suite::Lemma23 => lemma23(spec, seed)?,
        Suite::Invariance => invariance(spec, seed)?,
        Suite::Prop21 => prop21(spec, seed)?,
    };
    Ok(SuiteReport { suite: spec.suite, rows })
}

fn dims(spec: &CheckSpec, default: &[usize], allowed: std::ops::RangeInclusive<usize>) -> Result<Vec<usize>, CliError> {
    let d = if spec.dims.is_empty() { default.to_vec() } else { spec.dims.clone() };
    if let Some(bad) = d.iter().find(|n| !allowed.contains(n)) {
        return Err(CliError::Config(format!("dimension {bad} not supported by suite {}", spec.suite.name())));
    }
    Ok(d)
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct Tally {
    case: String,
    samples: usize,
    failures: usize,
    worst: f64,
    gating: bool,
}

impl Tally {
    fn new(case: String) -> Self {
        Self { case, samples: 0, failures: 0, worst: 0.0, gating: true }
    }

    fn record(&mut self, err: f64, tol: f64) {
        self.samples += 1;
        self.worst = self.worst.max(err);
        if !(err <= tol) {
            self.failures += 1;
        }
    }

    fn row(self) -> SuiteRow {
        SuiteRow { case: self.case, samples: self.samples, failures: self.failures, worst: self.worst, gating: self.gating }
    }
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrize(&SquareMatrix::from_fn(n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }))
}

/// Descending diagonal in `[-2, 2]` with gaps of at least 0.05.
fn distinct_diagonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        d.sort_by(|a, b| b.total_cmp(a));
        if d.windows(2).all(|w| w[0] - w[1] >= 0.05) {
            return d;
        }
    }
}

fn eigs(m: &HermitianMatrix) -> Vec<f64> {
    eig_pair(&HermitianMatrix::identity(m.dim()), m).expect("identity metric").lambdas().to_vec()
}

fn rel_err(fd: f64, exact: f64) -> f64 {
    (fd - exact).abs() / exact.abs().max(1.0)
}

fn central(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

fn mixed(f: impl Fn(f64, f64) -> f64, h: f64) -> f64 {
    (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h)
}

const FIRST_STEP: f64 = 1e-6;
const SECOND_STEP: f64 = 2e-5;
const FIRST_TOL: f64 = 1e-6;
const SECOND_TOL: f64 = 1e-4;

fn derivatives(spec: &CheckSpec, seed: u64) -> Result<Vec<SuiteRow>, CliError> {
    let samples = spec.samples.unwrap_or(100);
    let mut rows = Vec::new();
    for n in dims(spec, &[2, 3, 4], 2..=4)? {
        let mut rng = rng_for(seed, n as u64);
        let mut eig1 = Tally::new(format!("n={n} eigenvalue-first"));
        let mut eig2 = Tally::new(format!("n={n} eigenvalue-second"));
        let mut spec1 = Tally::new(format!("n={n} spectral-first"));
        let mut spec2 = Tally::new(format!("n={n} spectral-second"));
        let mut grad = Tally::new(format!("n={n} f-g-gradient-hessian"));
        let mut lin = Tally::new(format!("n={n} dF-linearization"));
        for _ in 0..samples {
            let d = distinct_diagonal(&mut rng, n);
            let base = HermitianMatrix::from_real_diag(&d);
            let h = random_hermitian(&mut rng, n);
            let k = random_hermitian(&mut rng, n);
            let along = |a: f64, b: f64| base.add(&h.scale(a)).add(&k.scale(b));

            let ed = eigenvalue_derivatives(&base).map_err(CliError::config)?;
            for i in 0..n {
                let t = &ed.per_eigenvalue[i];
                eig1.record(rel_err(central(|s| eigs(&along(s, 0.0))[i], FIRST_STEP), t.apply_first(&h).re), FIRST_TOL);
                eig2.record(rel_err(mixed(|a, b| eigs(&along(a, b))[i], SECOND_STEP), t.apply_second(&h, &k).re), SECOND_TOL);
            }

            let c_eps = 3.0;
            for func in [SpectralFunction::ArctanSum, SpectralFunction::LogMax { c_eps }] {
                let t = spectral_function_derivatives(func, &base).map_err(CliError::config)?;
                let value = |m: &HermitianMatrix| func.value(&eigs(m));
                spec1.record(rel_err(central(|s| value(&along(s, 0.0)), FIRST_STEP), t.apply_first(&h).re), FIRST_TOL);
                spec2.record(rel_err(mixed(|a, b| value(&along(a, b)), SECOND_STEP), t.apply_second(&h, &k).re), SECOND_TOL);
                // f_i = F^{ii}, f_{ir} = F^{ii,rr}, checked in eigenvalue coordinates
                let shift = |i: usize, s: f64, r: usize, q: f64| {
                    let mut v = d.clone();
                    v[i] += s;
                    v[r] += q;
                    func.value(&v)
                };
                for i in 0..n {
                    grad.record(rel_err(central(|s| shift(i, s, i, 0.0), FIRST_STEP), t.first(i, i).re), FIRST_TOL);
                    for r in 0..n {
                        let fd = mixed(|a, b| shift(i, a, r, b), SECOND_STEP);
                        grad.record(rel_err(fd, t.second(i, i, r, r).re), SECOND_TOL);
                    }
                }
            }

            // dΘ along H at a general (ω, χ) equals tr(dF · H)
            let a = SquareMatrix::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let omega = HermitianMatrix::symmetrize(&(a * a.adjoint())).add(&HermitianMatrix::scaled_identity(n, 0.5));
            let chi = random_hermitian(&mut rng, n).scale(2.0);
            let es = eig_pair(&omega, &chi).map_err(CliError::config)?;
            let exact = d_f(&es).pair(&h);
            let fd = central(|s| theta_arctan(eig_pair(&omega, &chi.add(&h.scale(s))).unwrap().lambdas()), FIRST_STEP);
            lin.record(rel_err(fd, exact), FIRST_TOL);
        }
        rows.extend([eig1.row(), eig2.row(), spec1.row(), spec2.row(), grad.row(), lin.row()]);
    }
    Ok(rows)
}

fn subsolution(spec: &CheckSpec, seed: u64) -> Result<Vec<SuiteRow>, CliError> {
    let samples = spec.samples.unwrap_or(1000);
    let mut rows = Vec::new();
    for n in dims(spec, &[2, 3], 2..=4)? {
        let mut rng = rng_for(seed, 100 + n as u64);
        let floor = supercritical_floor(n);
        let top = n as f64 * FRAC_PI_2;
        let mut equiv = Tally::new(format!("n={n} criterion-vs-oracle"));
        let mut margin = Tally::new(format!("n={n} stability-margin"));
        let mut lattice = Tally::new(format!("n={n} lattice"));
        let mut positives = 0usize;
        for _ in 0..samples {
            let h = rng.random_range(floor + 0.1..top - 0.1);
            let mus: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let v = is_csub_pointwise(&mus, h).map_err(CliError::config)?;
            let oracle = csub_bounded_oracle(&mus, h, ORACLE_T_MAX, ORACLE_STEPS);
            equiv.record(if v.is_csub == oracle { 0.0 } else { 1.0 }, 0.0);
            if !v.is_csub {
                continue;
            }
            positives += 1;
            let eps = v.worst_margin;
            let ok = |k: f64| k <= floor || k >= top || is_csub_pointwise(&mus, k).map(|r| r.is_csub).unwrap_or(false);
            let keeps = ok(h + 0.9 * eps) && ok(h - 0.9 * eps);
            let flips = h + 1.1 * eps >= top || !ok(h + 1.1 * eps);
            margin.record(if keeps && flips { 0.0 } else { 1.0 }, 0.0);
            let h2 = rng.random_range(floor + 0.1..top - 0.1);
            if is_csub_pointwise(&mus, h2).map(|r| r.is_csub).unwrap_or(false) {
                lattice.record(if csub_lattice_check(&mus, h, h2) { 0.0 } else { 1.0 }, 0.0);
            }
        }
        let mut frac = Tally::new(format!("n={n} subsolution-fraction"));
        frac.samples = samples;
        frac.worst = positives as f64 / samples as f64;
        frac.gating = false;
        rows.extend([equiv.row(), margin.row(), lattice.row(), frac.row()]);
    }
    Ok(rows)
}

fn lemma23(spec: &CheckSpec, seed: u64) -> Result<Vec<SuiteRow>, CliError> {
    if !(spec.eps0 > 0.0) {
        return Err(CliError::Config(format!("check.eps0 must be positive, got {}", spec.eps0)));
    }
    let samples = spec.samples.unwrap_or(10_000);
    let mut rows = Vec::new();
    for n in dims(spec, &[2, 3], 2..=4)? {
        let floor = supercritical_floor(n);
        for (ci, sigma) in [floor + 0.2, floor + FRAC_PI_2, n as f64 * FRAC_PI_2 - 0.2].into_iter().enumerate() {
            let eps0 = spec.eps0.min(sigma - floor);
            let ps = PhaseSpec::new(n, sigma, eps0).map_err(CliError::config)?;
            let mut rng = rng_for(seed, 200 + 10 * n as u64 + ci as u64);
            let label = format!("n={n} sigma={sigma:.6} eps0={eps0:.6}");
            let mut t_i = Tally::new(format!("{label} sum-of-two-smallest"));
            let mut t_ii = Tally::new(format!("{label} sigma-k-nonnegative"));
            let mut t_iv = Tally::new(format!("{label} smallest-eigenvalue-bound"));
            t_iv.gating = false;
            let lo = (sigma - (n as f64 - 1.0) * FRAC_PI_2).max(-FRAC_PI_2);
            let mut attempts = 0usize;
            while t_i.samples < samples {
                attempts += 1;
                if attempts > 1000 * samples {
                    return Err(CliError::Config(format!("{label}: level-set sampler rejected too many draws")));
                }
                let free: Vec<f64> = (0..n - 1).map(|_| rng.random_range(lo..FRAC_PI_2).tan()).collect();
                let Some(lambdas) = level_set_sample(&ps, &free) else {
                    continue;
                };
                let r = lemma23_check(&lambdas, &ps).map_err(CliError::config)?;
                let gap = lambdas[n - 2] + lambdas[n - 1] - (eps0 / 2.0).tan();
                t_i.record(if r.i_holds { 0.0 } else { -gap }, 0.0);
                t_ii.record(if r.ii_holds { 0.0 } else { 1.0 }, 0.0);
                t_iv.record(if r.iv_holds { 0.0 } else { 1.0 }, 0.0);
            }
            rows.extend([t_i.row(), t_ii.row(), t_iv.row()]);
        }
    }
    Ok(rows)
}

/// Random band-limited potential with wave numbers in `[-3, 3]`.
pub fn random_potential(rng: &mut ChaCha8Rng, grid: &TorusGrid, modes: usize, amplitude: f64) -> ScalarField {
    let list: Vec<FourierMode> = (0..modes)
        .map(|_| {
            let mut w = [0i32; 4];
            for a in w.iter_mut().take(grid.real_dims()) {
                *a = rng.random_range(-3..=3);
            }
            FourierMode::new(amplitude * rng.random_range(0.2..1.0), w, rng.random_range(0.0..TAU))
        })
        .collect();
    ScalarField::from_modes(grid, &list)
}

fn invariance(spec: &CheckSpec, seed: u64) -> Result<Vec<SuiteRow>, CliError> {
    let samples = spec.samples.unwrap_or(100);
    let mut rows = Vec::new();
    for n in dims(spec, &[1, 2], 1..=2)? {
        let grid = TorusGrid::new(n, spec.points).map_err(CliError::config)?;
        let mut rng = rng_for(seed, 300 + n as u64);
        let omega = HermitianFormField::identity(&grid);
        let base = HermitianFormField::constant(&grid, &HermitianMatrix::scaled_identity(n, 0.6)).map_err(CliError::config)?;
        let chi0 = base.add(&i_ddbar(&random_potential(&mut rng, &grid, 3, 0.1))).map_err(CliError::config)?;
        let reference = hat_theta(&omega, &chi0).map_err(CliError::config)?.hat_theta;
        let mut t = Tally::new(format!("n={n} N={} hat-theta-shift", spec.points));
        for _ in 0..samples {
            let v = random_potential(&mut rng, &grid, 4, 0.1);
            let chi = chi0.add(&i_ddbar(&v)).map_err(CliError::config)?;
            let shifted = hat_theta(&omega, &chi).map_err(CliError::config)?.hat_theta;
            t.record((shifted - reference).abs(), 1e-10);
        }
        rows.push(t.row());
    }
    Ok(rows)
}

fn prop21(spec: &CheckSpec, seed: u64) -> Result<Vec<SuiteRow>, CliError> {
    let samples = spec.samples.unwrap_or(1000);
    if samples < 1000 {
        return Err(CliError::Config(format!("prop21 needs at least 1000 samples, got {samples}")));
    }
    dims(spec, &[2], 2..=2)?;
    let sigma = FRAC_PI_2 + 0.2;
    let ps = PhaseSpec::new(2, sigma, spec.eps0.min(0.2)).map_err(CliError::config)?;
    let b = HermitianMatrix::identity(2);
    let mut rows = Vec::new();
    let mut previous: Option<f64> = None;
    let mut mono = Tally::new("n=2 kappa-monotone-in-R".into());
    for radius in [50.0, 20.0, 10.0] {
        let est = prop21_kappa_estimate(&b, &ps, 0.05, radius, samples, seed).map_err(CliError::config)?;
        let mut t = Tally::new(format!("n=2 R={radius} kappa-positive"));
        t.samples = est.samples_used;
        t.worst = est.kappa;
        t.failures = usize::from(!(est.kappa > 0.0));
        rows.push(t.row());
        if let Some(p) = previous {
            mono.record(if est.kappa <= p { 0.0 } else { est.kappa - p }, 0.0);
        }
        previous = Some(est.kappa);
    }
    rows.push(mono.row());
    Ok(rows)
}
