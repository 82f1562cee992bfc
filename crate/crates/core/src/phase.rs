//! Supercritical-phase arithmetic and C-subsolution criteria.
//!
//! Eigenvalue tuples live in `ℝⁿ`; the level set `Γ^σ` is
//! `{λ : Σ arctan λ_i = σ}` and `Γ_n` is the positive orthant.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hermitian::{eig_pair, sigma_k, theta_arctan, HermitianMatrix, SquareMatrix};

/// Angle tolerance for membership in the level set.
pub const LEVEL_SET_TOL: f64 = 1e-9;
/// Marching horizon for the boundedness oracle.
pub const ORACLE_T_MAX: f64 = 1e6;
/// Number of log-spaced marching steps for the boundedness oracle.
pub const ORACLE_STEPS: usize = 10_000;

/// Target phase `σ` together with its margin `ε₀` above `(n-2)π/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpec {
    n: usize,
    sigma: f64,
    eps0: f64,
}

impl PhaseSpec {
    pub fn new(n: usize, sigma: f64, eps0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadDimension(n));
        }
        let lo = supercritical_floor(n);
        let hi = n as f64 * FRAC_PI_2;
        if !(eps0 > 0.0) {
            return Err(Error::PreconditionFailed(format!("eps0 must be positive, got {eps0}")));
        }
        if !(sigma > lo && sigma < hi) || sigma - lo < eps0 {
            return Err(Error::PhaseOutOfRange { value: sigma, lo: lo + eps0, hi });
        }
        Ok(Self { n, sigma, eps0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }
}

/// `(n-2)π/2`, the lower edge of the supercritical band.
pub fn supercritical_floor(n: usize) -> f64 {
    (n as f64 - 2.0) * FRAC_PI_2
}

/// Completes `free` (n-1 values) to a point of `Γ^σ` by solving for the
/// smallest coordinate. Returns `None` when the residual angle leaves
/// `(-π/2, π/2)` or the completed value does not sort last.
pub fn level_set_sample(spec: &PhaseSpec, free: &[f64]) -> Option<Vec<f64>> {
    if free.len() + 1 != spec.n || free.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut lambdas: Vec<f64> = free.to_vec();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let residual = spec.sigma - theta_arctan(&lambdas);
    if !(residual > -FRAC_PI_2 && residual < FRAC_PI_2) {
        return None;
    }
    let last = residual.tan();
    if let Some(&min_free) = lambdas.last() {
        if last > min_free {
            return None;
        }
    }
    lambdas.push(last);
    Some(lambdas)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma23Report {
    /// `λ_{n-1} + λ_n >= tan(ε₀/2)`.
    pub i_holds: bool,
    /// `σ_k(λ) >= 0` for `1 <= k <= n-1`.
    pub ii_holds: bool,
    /// A non-positive `λ_n` stays within `min_lambda_bound`.
    pub iv_holds: bool,
    pub min_lambda_bound: f64,
}

/// Checks the arithmetic consequences of a supercritical phase on a sorted
/// (descending) level-set point.
pub fn lemma23_check(lambdas: &[f64], spec: &PhaseSpec) -> Result<Lemma23Report> {
    let n = lambdas.len();
    if n != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, got: n });
    }
    let error = (theta_arctan(lambdas) - spec.sigma).abs();
    if !(error <= LEVEL_SET_TOL) {
        return Err(Error::NotOnLevelSet { error });
    }
    let i_holds = if n >= 2 {
        lambdas[n - 2] + lambdas[n - 1] >= (spec.eps0 / 2.0).tan() - 1e-12
    } else {
        true
    };
    let mut ii_holds = true;
    for k in 1..n {
        if sigma_k(lambdas, k)? < -1e-12 {
            ii_holds = false;
        }
    }
    // Empirical constant: the n = 2 asymptote λ_n → -cot ε₀.
    let min_lambda_bound = 1.0 / spec.eps0.tan() + 1e-9;
    let last = lambdas[n - 1];
    let iv_holds = last > 0.0 || last.abs() <= min_lambda_bound;
    Ok(Lemma23Report { i_holds, ii_holds, iv_holds, min_lambda_bound })
}

/// Outcome of the angle-inequality C-subsolution test at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolutionVerdict {
    pub is_csub: bool,
    /// `min_j (Σ_{l≠j} arctan μ_l - (h - π/2))`.
    pub worst_margin: f64,
    pub witness_j: usize,
}

fn check_phase_range(n: usize, h: f64) -> Result<()> {
    let lo = supercritical_floor(n);
    let hi = n as f64 * FRAC_PI_2;
    if h > lo && h < hi {
        Ok(())
    } else {
        Err(Error::PhaseOutOfRange { value: h, lo, hi })
    }
}

/// C-subsolution test via `Σ_{l≠j} arctan μ_l > h - π/2` for every `j`.
pub fn is_csub_pointwise(mus: &[f64], h: f64) -> Result<SubsolutionVerdict> {
    let n = mus.len();
    if n == 0 {
        return Err(Error::BadDimension(0));
    }
    check_phase_range(n, h)?;
    let total = theta_arctan(mus);
    let (witness_j, worst_margin) = mus
        .iter()
        .enumerate()
        .map(|(j, m)| (j, total - m.atan() - (h - FRAC_PI_2)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    Ok(SubsolutionVerdict { is_csub: worst_margin > 0.0, worst_margin, witness_j })
}

/// Brute-force boundedness test of
/// `{λ' : Σ arctan λ'_l = h, λ' - μ ∈ closed Γ_n}`.
///
/// For each coordinate direction `j` the oracle marches `t` over a log grid
/// ending at `t_max` and asks whether `μ + t e_j` can be completed to a point
/// of the set by raising the other coordinates. The set is bounded iff every
/// direction becomes infeasible before the end of the grid.
pub fn csub_bounded_oracle(mus: &[f64], h: f64, t_max: f64, steps: usize) -> bool {
    let n = mus.len();
    let t_min: f64 = 1e-3;
    let log_span = (t_max / t_min).ln();
    let grid = |k: usize| t_min * (log_span * k as f64 / (steps - 1) as f64).exp();
    let others_top = (n as f64 - 1.0) * FRAC_PI_2;
    (0..n).all(|j| {
        let rest: f64 = mus.iter().enumerate().filter(|&(l, _)| l != j).map(|(_, m)| m.atan()).sum();
        let feasible = |t: f64| {
            let lead = (mus[j] + t).atan();
            lead + rest <= h && h < lead + others_top
        };
        let mut last_feasible = None;
        for k in 0..steps {
            if feasible(grid(k)) {
                last_feasible = Some(k);
            }
        }
        last_feasible.is_none_or(|k| k < steps - 1)
    })
}

/// Largest uniform perturbation of `h` that keeps every verdict a
/// C-subsolution: the minimum worst margin over points.
pub fn csub_stability_margin(verdicts: &[SubsolutionVerdict]) -> Result<f64> {
    let mut eps = f64::INFINITY;
    for (index, v) in verdicts.iter().enumerate() {
        if !(v.worst_margin > 0.0) {
            return Err(Error::NotASubsolution { margin: v.worst_margin, index });
        }
        eps = eps.min(v.worst_margin);
    }
    Ok(eps)
}

/// Whether `μ` is a C-subsolution of both `max(h1, h2)` and `min(h1, h2)`.
pub fn csub_lattice_check(mus: &[f64], h1: f64, h2: f64) -> bool {
    let ok = |h: f64| is_csub_pointwise(mus, h).map(|v| v.is_csub).unwrap_or(false);
    ok(h1.max(h2)) && ok(h1.min(h2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    /// Largest `κ` for which every retained sample satisfies a branch.
    pub kappa: f64,
    pub samples_used: usize,
    /// Radius of a box enclosing `(λ(B) - 2δ + Γ_n) ∩ ∂Γ^σ`.
    pub containment_radius: f64,
}

/// Upper corner of the box containing `(μ + Γ_n) ∩ Γ^σ`.
fn containment_box(mus: &[f64], sigma: f64) -> Vec<f64> {
    let total = theta_arctan(mus);
    mus.iter()
        .map(|&m| {
            let room = sigma - (total - m.atan());
            if room >= FRAC_PI_2 {
                f64::INFINITY
            } else if room <= -FRAC_PI_2 {
                m
            } else {
                room.tan().max(m)
            }
        })
        .collect()
}

/// Haar-ish random unitary from Gram-Schmidt on complex Gaussian columns.
fn random_unitary(rng: &mut impl Rng, n: usize) -> SquareMatrix {
    let mut u = SquareMatrix::from_fn(n, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    for k in 0..n {
        for prev in 0..k {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..n {
                dot += u[(i, prev)].conj() * u[(i, k)];
            }
            for i in 0..n {
                let p = u[(i, prev)];
                u[(i, k)] -= dot * p;
            }
        }
        let norm = (0..n).map(|i| u[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            u[(i, k)] /= norm;
        }
    }
    u
}

/// Empirical constant of the subsolution dichotomy: for Hermitian `A` with
/// `λ(A) ∈ ∂Γ^σ`, `|λ(A)| > R`, either
/// `η^{pq̄}(B - A)_{pq̄} > κ Σ_p η^{pp̄}` or `η^{ii̅} > κ Σ_p η^{pp̄}` for all
/// `i`, with `η = Id + A²`.
///
/// The candidate pool (`samples` draws) depends only on `B`, `σ`, `δ` and the
/// seed, so lowering `R` only adds samples.
pub fn prop21_kappa_estimate(
    b: &HermitianMatrix,
    spec: &PhaseSpec,
    delta: f64,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<KappaEstimate> {
    let n = spec.n;
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.dim() });
    }
    let lam_b = eig_pair(&HermitianMatrix::identity(n), b)?.lambdas().to_vec();
    let mus: Vec<f64> = lam_b.iter().map(|l| l - 2.0 * delta).collect();
    if !csub_bounded_oracle(&mus, spec.sigma, ORACLE_T_MAX, ORACLE_STEPS) {
        return Err(Error::PreconditionFailed("(λ(B) - 2δ + Γ_n) ∩ ∂Γ^σ is unbounded".into()));
    }
    let upper = containment_box(&mus, spec.sigma);
    let containment_radius = mus
        .iter()
        .zip(&upper)
        .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    if !(containment_radius <= radius) {
        return Err(Error::PreconditionFailed(format!(
            "containment radius {containment_radius:.4} exceeds R = {radius}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lead_lo = containment_radius.max(1.0).ln();
    let lead_hi = 1e6f64.ln();
    let mut kappa = f64::INFINITY;
    let mut used = 0;
    let mut drawn = 0;
    while drawn < samples {
        let lead = rng.random_range(lead_lo..lead_hi).exp();
        let mut free = vec![lead];
        for _ in 1..n.saturating_sub(1) {
            let lo = (spec.sigma - (n as f64 - 1.0) * FRAC_PI_2).max(-FRAC_PI_2);
            free.push(rng.random_range(lo..FRAC_PI_2).tan());
        }
        let Some(lambdas) = level_set_sample(spec, &free) else {
            continue;
        };
        drawn += 1;
        let u = random_unitary(&mut rng, n);
        let norm = lambdas.iter().map(|l| l * l).sum::<f64>().sqrt();
        if norm <= radius {
            continue;
        }
        let a = u * SquareMatrix::diag(&lambdas) * u.adjoint();
        let inv_eta: Vec<f64> = lambdas.iter().map(|l| 1.0 / (1.0 + l * l)).collect();
        let eta_inv = HermitianMatrix::symmetrize(&(u * SquareMatrix::diag(&inv_eta) * u.adjoint()));
        let diff = b.sub(&HermitianMatrix::symmetrize(&a));
        let trace = eta_inv.trace();
        let branch_one = eta_inv.pair(&diff) / trace;
        let branch_two = (0..n).map(|i| eta_inv.get(i, i).re).fold(f64::INFINITY, f64::min) / trace;
        kappa = kappa.min(branch_one.max(branch_two));
        used += 1;
    }
    if used == 0 {
        return Err(Error::PreconditionFailed(format!("no samples with |λ(A)| > R = {radius}")));
    }
    Ok(KappaEstimate { kappa, samples_used: used, containment_radius })
}

/// The level curve `λ'_2 = tan(σ - arctan λ'_1)` for `n = 2`, where defined.
pub fn level_curve(sigma: f64, x: f64) -> Option<f64> {
    let rest = sigma - x.atan();
    (rest > -FRAC_PI_2 && rest < FRAC_PI_2).then(|| rest.tan())
}

/// Classification of a point of the `(λ'_1, λ'_2)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionClass {
    /// The cell meets the level curve `arctan x + arctan y = σ`.
    LevelSet,
    /// The cell center is a C-subsolution eigenvalue pair for `σ`.
    Subsolution,
    Neither,
}

impl RegionClass {
    pub fn code(self) -> u8 {
        match self {
            RegionClass::LevelSet => 2,
            RegionClass::Subsolution => 1,
            RegionClass::Neither => 0,
        }
    }
}

/// Classifies an `resolution × resolution` grid of cells over
/// `[-π/2·scale, π·scale]² + offset` for `n = 2`. Row `i` varies `λ'_2`,
/// column `j` varies `λ'_1`.
pub fn region_grid(sigma: f64, resolution: usize, scale: f64, offset: f64) -> Result<(Vec<f64>, Vec<RegionClass>)> {
    if resolution == 0 || resolution > 2048 {
        return Err(Error::BadRange(format!("resolution {resolution} outside 1..=2048")));
    }
    check_phase_range(2, sigma)?;
    let lo = -FRAC_PI_2 * scale + offset;
    let hi = PI * scale + offset;
    let cell = (hi - lo) / resolution as f64;
    let centers: Vec<f64> = (0..resolution).map(|k| lo + (k as f64 + 0.5) * cell).collect();
    let mut classes = Vec::with_capacity(resolution * resolution);
    for &y in &centers {
        for &x in &centers {
            let low = (x - cell / 2.0).atan() + (y - cell / 2.0).atan();
            let high = (x + cell / 2.0).atan() + (y + cell / 2.0).atan();
            let class = if low <= sigma && sigma <= high {
                RegionClass::LevelSet
            } else if is_csub_pointwise(&[x, y], sigma)?.is_csub {
                RegionClass::Subsolution
            } else {
                RegionClass::Neither
            };
            classes.push(class);
        }
    }
    Ok((centers, classes))
}
