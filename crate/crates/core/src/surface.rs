//! Left-invariant data on Inoue and secondary Kodaira surfaces.
//!
//! Each model is a four-dimensional Lie algebra with basis `e₁..e₄`, a
//! left-invariant complex structure `J` and `(1,0)`-forms `φ¹, φ²`. The
//! Bott-Chern `(1,1)` class is one-dimensional and spanned by
//! `√-1 φᵃ ∧ φ̄ᵃ` for a model-dependent `a`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::{eig_pair, theta_arctan, HermitianMatrix};

type Brackets = [[[f64; 4]; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    InoueSM,
    InouePM,
    SecondaryKodaira,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 3] = [SurfaceKind::InoueSM, SurfaceKind::InouePM, SurfaceKind::SecondaryKodaira];

    pub fn slug(self) -> &'static str {
        match self {
            SurfaceKind::InoueSM => "inoue-sm",
            SurfaceKind::InouePM => "inoue-pm",
            SurfaceKind::SecondaryKodaira => "kodaira",
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "inoue-sm" | "inouesm" | "sm" => Ok(SurfaceKind::InoueSM),
            "inoue-pm" | "inouepm" | "inoue-s+-" | "pm" => Ok(SurfaceKind::InouePM),
            "kodaira" | "secondary-kodaira" | "secondarykodaira" => Ok(SurfaceKind::SecondaryKodaira),
            _ => Err(Error::UnknownSurface(s.to_string())),
        }
    }
}

/// Model parameters; `alpha`, `beta` apply to `S_M`, `q` to `S^±`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.0, q: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceModel {
    pub kind: SurfaceKind,
    pub params: SurfaceParams,
    /// `brackets[i][j][k]`: coefficient of `e_k` in `[e_i, e_j]` (0-based).
    pub brackets: Brackets,
    /// `j[k][i]`: coefficient of `e_k` in `J e_i`.
    pub complex_structure: [[f64; 4]; 4],
    /// `φ¹, φ²` as coefficients on `e¹..e⁴`.
    pub phi: [[Complex64; 4]; 2],
    /// 0-based index `a` of the generator `√-1 φᵃ ∧ φ̄ᵃ`.
    pub bc_generator: usize,
    pub bc_dim: usize,
}

fn set_bracket(b: &mut Brackets, i: usize, j: usize, value: [f64; 4]) {
    b[i - 1][j - 1] = value;
    b[j - 1][i - 1] = value.map(|v| -v);
}

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl SurfaceModel {
    /// `S_M`: `[e₁,e₄] = -αe₁ + βe₂`, `[e₂,e₄] = -βe₁ - αe₂`, `[e₃,e₄] = 2αe₃`.
    pub fn inoue_sm(alpha: f64, beta: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::BadRange(format!("Inoue S_M needs alpha != 0 (alpha = {alpha}, beta = {beta})")));
        }
        let mut b = [[[0.0; 4]; 4]; 4];
        set_bracket(&mut b, 1, 4, [-alpha, beta, 0.0, 0.0]);
        set_bracket(&mut b, 2, 4, [-beta, -alpha, 0.0, 0.0]);
        set_bracket(&mut b, 3, 4, [0.0, 0.0, 2.0 * alpha, 0.0]);
        Ok(Self {
            kind: SurfaceKind::InoueSM,
            params: SurfaceParams { alpha, beta, q: 0.0 },
            brackets: b,
            complex_structure: standard_j(),
            phi: standard_phi(),
            bc_generator: 1,
            bc_dim: 1,
        })
    }

    /// `S^±`: `[e₂,e₃] = -e₁`, `[e₂,e₄] = -e₂`, `[e₃,e₄] = e₃`, with `J` twisted by `q`.
    pub fn inoue_pm(q: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::BadRange(format!("q = {q} must be finite")));
        }
        let mut b = [[[0.0; 4]; 4]; 4];
        set_bracket(&mut b, 2, 3, [-1.0, 0.0, 0.0, 0.0]);
        set_bracket(&mut b, 2, 4, [0.0, -1.0, 0.0, 0.0]);
        set_bracket(&mut b, 3, 4, [0.0, 0.0, 1.0, 0.0]);
        // J e₁ = e₂, J e₂ = -e₁, J e₃ = e₄ - q e₂, J e₄ = -e₃ - q e₁
        let mut j = [[0.0; 4]; 4];
        j[1][0] = 1.0;
        j[0][1] = -1.0;
        j[3][2] = 1.0;
        j[1][2] = -q;
        j[2][3] = -1.0;
        j[0][3] = -q;
        let qc = Complex64::new(0.0, q);
        Ok(Self {
            kind: SurfaceKind::InouePM,
            params: SurfaceParams { alpha: 0.0, beta: 0.0, q },
            brackets: b,
            complex_structure: j,
            phi: [[ONE, I, ZERO, qc], [ZERO, ZERO, ONE, I]],
            bc_generator: 1,
            bc_dim: 1,
        })
    }

    /// Secondary Kodaira: `[e₁,e₂] = -e₃`, `[e₁,e₄] = e₂`, `[e₂,e₄] = -e₁`.
    pub fn secondary_kodaira() -> Self {
        let mut b = [[[0.0; 4]; 4]; 4];
        set_bracket(&mut b, 1, 2, [0.0, 0.0, -1.0, 0.0]);
        set_bracket(&mut b, 1, 4, [0.0, 1.0, 0.0, 0.0]);
        set_bracket(&mut b, 2, 4, [-1.0, 0.0, 0.0, 0.0]);
        Self {
            kind: SurfaceKind::SecondaryKodaira,
            params: SurfaceParams { alpha: 0.0, beta: 0.0, q: 0.0 },
            brackets: b,
            complex_structure: standard_j(),
            phi: standard_phi(),
            bc_generator: 0,
            bc_dim: 1,
        }
    }

    pub fn with_params(kind: SurfaceKind, params: SurfaceParams) -> Result<Self> {
        match kind {
            SurfaceKind::InoueSM => Self::inoue_sm(params.alpha, params.beta),
            SurfaceKind::InouePM => Self::inoue_pm(params.q),
            SurfaceKind::SecondaryKodaira => Ok(Self::secondary_kodaira()),
        }
    }

    fn bracket(&self, x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                let s = x[i] * y[j];
                if s != 0.0 {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += s * self.brackets[i][j][k];
                    }
                }
            }
        }
        out
    }

    fn apply_j(&self, x: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|i| self.complex_structure[k][i] * x[i]).sum();
        }
        out
    }

    /// `max |[[eᵢ,eⱼ],eₖ] + [[eⱼ,eₖ],eᵢ] + [[eₖ,eᵢ],eⱼ]|` over basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let e = basis();
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let a = self.bracket(&self.bracket(&e[i], &e[j]), &e[k]);
                    let b = self.bracket(&self.bracket(&e[j], &e[k]), &e[i]);
                    let c = self.bracket(&self.bracket(&e[k], &e[i]), &e[j]);
                    for t in 0..4 {
                        worst = worst.max((a[t] + b[t] + c[t]).abs());
                    }
                }
            }
        }
        worst
    }

    /// `max |J² + Id|` entrywise.
    pub fn j_squared_residual(&self) -> f64 {
        let e = basis();
        let mut worst: f64 = 0.0;
        for (i, ei) in e.iter().enumerate() {
            let jj = self.apply_j(&self.apply_j(ei));
            for t in 0..4 {
                worst = worst.max((jj[t] + if t == i { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// `max |φ(J X) - √-1 φ(X)|` over `φ ∈ {φ¹, φ²}` and basis `X`.
    pub fn type_residual(&self) -> f64 {
        let e = basis();
        let mut worst: f64 = 0.0;
        for phi in &self.phi {
            for ei in &e {
                let jx = self.apply_j(ei);
                let lhs: Complex64 = (0..4).map(|t| phi[t] * jx[t]).sum();
                let rhs: Complex64 = I * (0..4).map(|t| phi[t] * ei[t]).sum::<Complex64>();
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }

    /// Largest component of the Nijenhuis tensor on basis pairs.
    pub fn nijenhuis_residual(&self) -> f64 {
        let e = basis();
        let mut worst: f64 = 0.0;
        for x in &e {
            for y in &e {
                let (jx, jy) = (self.apply_j(x), self.apply_j(y));
                let a = self.bracket(&jx, &jy);
                let b = self.apply_j(&self.bracket(&jx, y));
                let c = self.apply_j(&self.bracket(x, &jy));
                let d = self.bracket(x, y);
                for t in 0..4 {
                    worst = worst.max((a[t] - b[t] - c[t] - d[t]).abs());
                }
            }
        }
        worst
    }

    /// The generator `√-1 φᵃ ∧ φ̄ᵃ` as a real 2-form on basis pairs.
    pub fn bc_generator_form(&self) -> [[f64; 4]; 4] {
        let phi = &self.phi[self.bc_generator];
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let v = I * (phi[i] * phi[j].conj() - phi[j] * phi[i].conj());
                out[i][j] = v.re;
            }
        }
        out
    }

    /// Largest component of `d` applied to the generator. For left-invariant
    /// forms `dβ(X,Y,Z) = -β([X,Y],Z) + β([X,Z],Y) - β([Y,Z],X)`.
    pub fn bc_closedness_residual(&self) -> f64 {
        let beta = self.bc_generator_form();
        let eval = |x: &[f64; 4], y: &[f64; 4]| -> f64 {
            (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| beta[i][j] * x[i] * y[j]).sum()
        };
        let e = basis();
        let mut worst: f64 = 0.0;
        for x in &e {
            for y in &e {
                for z in &e {
                    let v = -eval(&self.bracket(x, y), z) + eval(&self.bracket(x, z), y) - eval(&self.bracket(y, z), x);
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// `c · Eₐₐ` in the `φ` frame: the matrix of `c √-1 φᵃ ∧ φ̄ᵃ`.
    pub fn generator_matrix(&self, c: f64) -> HermitianMatrix {
        let mut d = [0.0; 2];
        d[self.bc_generator] = c;
        HermitianMatrix::from_real_diag(&d)
    }
}

fn basis() -> [[f64; 4]; 4] {
    let mut e = [[0.0; 4]; 4];
    for (i, row) in e.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    e
}

fn standard_j() -> [[f64; 4]; 4] {
    // J e₁ = e₂, J e₂ = -e₁, J e₃ = e₄, J e₄ = -e₃
    let mut j = [[0.0; 4]; 4];
    j[1][0] = 1.0;
    j[0][1] = -1.0;
    j[3][2] = 1.0;
    j[2][3] = -1.0;
    j
}

fn standard_phi() -> [[Complex64; 4]; 2] {
    [[ONE, I, ZERO, ZERO], [ZERO, ZERO, ONE, I]]
}

/// Model by name with default parameters (`α = 1, β = 0, q = 0`).
pub fn catalog(name: &str) -> Result<SurfaceModel> {
    SurfaceModel::with_params(name.parse()?, SurfaceParams::default())
}

/// `ω = √-1 ω_{ij̄} φⁱ ∧ φ̄ʲ` with `ω_{11̄} = w11`, `ω_{22̄} = w22`, `ω_{12̄} = w12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantMetric {
    w11: f64,
    w22: f64,
    w12: Complex64,
}

impl InvariantMetric {
    pub fn new(w11: f64, w22: f64, w12: Complex64) -> Result<Self> {
        let det = w11 * w22 - w12.norm_sqr();
        if !(w11 > 0.0) || !(det > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: if w11 > 0.0 { det / w11 } else { w11 }, index: None });
        }
        Ok(Self { w11, w22, w12 })
    }

    pub fn identity() -> Self {
        Self { w11: 1.0, w22: 1.0, w12: ZERO }
    }

    pub fn w11(&self) -> f64 {
        self.w11
    }

    pub fn w22(&self) -> f64 {
        self.w22
    }

    pub fn w12(&self) -> Complex64 {
        self.w12
    }

    pub fn det(&self) -> f64 {
        self.w11 * self.w22 - self.w12.norm_sqr()
    }

    pub fn matrix(&self) -> HermitianMatrix {
        HermitianMatrix::from_entries(
            2,
            &[Complex64::new(self.w11, 0.0), self.w12, self.w12.conj(), Complex64::new(self.w22, 0.0)],
        )
        .expect("2x2 entries")
    }
}

/// `Tr_ω(c √-1 φ² ∧ φ̄²) = c · w11 / (w11 w22 - |w12|²)`.
pub fn trace_formula(metric: &InvariantMetric, c: f64) -> f64 {
    c * metric.w11 / metric.det()
}

/// Trace of the model's own generator `c √-1 φᵃ ∧ φ̄ᵃ`; for the Kodaira
/// generator `φ¹ ∧ φ̄¹` the numerator is `w22`.
pub fn generator_trace(model: &SurfaceModel, metric: &InvariantMetric, c: f64) -> f64 {
    let num = if model.bc_generator == 0 { metric.w22 } else { metric.w11 };
    c * num / metric.det()
}

/// `min_{s ∈ {1, m, M}} arctan(s λ₁) + arctan(s λ₂)`.
pub fn conformal_bound(lambda1: f64, lambda2: f64, m: f64, big_m: f64) -> Result<f64> {
    if !(m > 0.0) || !(m <= big_m) || !big_m.is_finite() {
        return Err(Error::BadRange(format!("need 0 < m <= M, got m = {m}, M = {big_m}")));
    }
    Ok([1.0, m, big_m]
        .iter()
        .map(|s| (s * lambda1).atan() + (s * lambda2).atan())
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceVerdict {
    /// `c = 0`: `χ = 0` already solves the equation with angle 0.
    Trivial,
    Subsolution,
    NotSubsolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCsubReport {
    pub kind: SurfaceKind,
    pub c: f64,
    /// Eigenvalues of `ω^{-1}(c √-1 φᵃ ∧ φ̄ᵃ)`, descending.
    pub lambdas: [f64; 2],
    /// `arctan λ₁ + arctan λ₂` at the given sign of `c`.
    pub theta: f64,
    /// Conformal lower bound for the sign-normalized (`|c|`) problem.
    pub bound: f64,
    pub trace: f64,
    pub verdict: SurfaceVerdict,
}

/// Checks the hypothesis `Θ > 0` (for `n = 2`) of the conformal subsolution
/// criterion on the model's generator class. Negative `c` is reduced to `|c|`
/// by the sign symmetry `χ → -χ`.
pub fn csub_on_surface(
    model: &SurfaceModel,
    metric: &InvariantMetric,
    c: f64,
    m: f64,
    big_m: f64,
) -> Result<SurfaceCsubReport> {
    // validate the range even in the trivial case
    conformal_bound(0.0, 0.0, m, big_m)?;
    if c == 0.0 {
        return Ok(SurfaceCsubReport {
            kind: model.kind,
            c,
            lambdas: [0.0; 2],
            theta: 0.0,
            bound: 0.0,
            trace: 0.0,
            verdict: SurfaceVerdict::Trivial,
        });
    }
    let eig = eig_pair(&metric.matrix(), &model.generator_matrix(c))?;
    let l = eig.lambdas();
    let lambdas = [l[0], l[1]];
    let theta = theta_arctan(l);
    let sign = c.signum();
    let (a, b) = (sign * lambdas[0], sign * lambdas[1]);
    let bound = conformal_bound(a, b, m, big_m)?;
    Ok(SurfaceCsubReport {
        kind: model.kind,
        c,
        lambdas,
        theta,
        bound,
        trace: generator_trace(model, metric, c),
        verdict: if bound > 0.0 && bound < 2.0 * FRAC_PI_2 { SurfaceVerdict::Subsolution } else { SurfaceVerdict::NotSubsolution },
    })
}
