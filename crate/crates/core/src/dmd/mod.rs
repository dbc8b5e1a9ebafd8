//! Dynamic mode decomposition: standard, SVD-based and the two
//! noise-resistant variants that average against an independent dual
//! observable.

mod continuous;
mod export;
pub mod linalg;

pub use continuous::{to_continuous_spectrum, ContinuousEigenvalue};
pub use export::{read_result_eigenvalues, DmdReport};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::SeriesMatrix;
use linalg::{cross_moment, mul, mul_adjoint, numerical_rank, svd, Svd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// `C = Y X⁺`.
    #[serde(rename = "alg1")]
    Standard,
    /// Truncated SVD of X, `A = S⁻¹ Wᴴ Y V`.
    #[serde(rename = "alg2")]
    Svd,
    /// `C = G₁ G₀⁺` with `G₀ = XZᴴ/n`, `G₁ = YZᴴ/n`.
    #[serde(rename = "alg3")]
    NoiseResistant,
    /// Truncated SVD of `G₀`, `A = S⁻¹ Wᴴ G₁ V`.
    #[serde(rename = "alg4")]
    NoiseResistantSvd,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Standard => "alg1",
            Self::Svd => "alg2",
            Self::NoiseResistant => "alg3",
            Self::NoiseResistantSvd => "alg4",
        }
    }

    pub fn uses_dual(self) -> bool {
        matches!(self, Self::NoiseResistant | Self::NoiseResistantSvd)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alg1" | "1" | "standard" => Ok(Self::Standard),
            "alg2" | "2" | "svd" => Ok(Self::Svd),
            "alg3" | "3" | "noise-resistant" => Ok(Self::NoiseResistant),
            "alg4" | "4" | "noise-resistant-svd" => Ok(Self::NoiseResistantSvd),
            other => Err(Error::invalid(format!("unknown algorithm `{other}` (expected alg1..alg4)"))),
        }
    }
}

/// Truncation rank for the SVD variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankSelection {
    /// Every singular value above the pseudo-inverse cutoff.
    #[default]
    Numerical,
    Fixed(usize),
    /// Smallest `k` whose leading `σ²` carry this fraction of the total.
    Energy(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmdOptions {
    #[serde(default)]
    pub rank: RankSelection,
    /// Relative singular-value cutoff; `max(rows, cols)·ε` when absent.
    #[serde(default)]
    pub pinv_rtol: Option<f64>,
    #[serde(default = "default_cond_limit")]
    pub eig_cond_limit: f64,
}

fn default_cond_limit() -> f64 {
    1e12
}

impl Default for DmdOptions {
    fn default() -> Self {
        Self { rank: RankSelection::Numerical, pinv_rtol: None, eig_cond_limit: default_cond_limit() }
    }
}

impl DmdOptions {
    pub fn with_rank(k: usize) -> Self {
        Self { rank: RankSelection::Fixed(k), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.rank {
            RankSelection::Fixed(0) => return Err(Error::invalid("explicit rank must be ≥ 1")),
            RankSelection::Energy(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::invalid(format!("energy fraction must be in (0, 1], got {f}")))
            }
            _ => {}
        }
        if let Some(r) = self.pinv_rtol {
            if !(r >= 0.0) {
                return Err(Error::invalid(format!("pinv_rtol must be ≥ 0, got {r}")));
            }
        }
        if !(self.eig_cond_limit > 1.0) {
            return Err(Error::invalid("eig_cond_limit must exceed 1"));
        }
        Ok(())
    }

    fn rtol(&self, rows: usize, cols: usize) -> f64 {
        self.pinv_rtol.unwrap_or_else(|| linalg::default_rtol(rows, cols))
    }

    fn resolve_rank(&self, s: &[f64], rtol: f64) -> Result<usize> {
        let admissible = numerical_rank(s, rtol);
        let k = match self.rank {
            RankSelection::Numerical => admissible.max(1),
            RankSelection::Fixed(k) => k,
            RankSelection::Energy(f) => {
                let total: f64 = s.iter().map(|x| x * x).sum();
                let mut acc = 0.0;
                let mut k = s.len();
                for (i, x) in s.iter().enumerate() {
                    acc += x * x;
                    if acc >= f * total {
                        k = i + 1;
                        break;
                    }
                }
                k.min(admissible).max(1)
            }
        };
        if k > admissible {
            return Err(Error::Rank { requested: k, admissible });
        }
        Ok(k)
    }
}

#[derive(Clone, Debug)]
pub struct DmdResult {
    pub algorithm: Algorithm,
    /// `C` (Alg 1, 3) or the reduced `A` (Alg 2, 4).
    pub operator: DMatrix<Complex64>,
    pub eigenvalues: Vec<Complex64>,
    /// Dynamic modes, one column per eigenvalue.
    pub modes: DMatrix<Complex64>,
    /// Numerical eigenfunctions sampled along the data, one row per eigenvalue.
    pub eigenfunctions: DMatrix<Complex64>,
    /// All singular values of X (Alg 2) or `G₀` (Alg 4); empty otherwise.
    pub singular_values: Vec<f64>,
    /// Condition number of the right eigenvector matrix.
    pub eigvec_condition: f64,
}

impl DmdResult {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn continuous_spectrum(&self, dt: f64) -> Result<Vec<ContinuousEigenvalue>> {
        to_continuous_spectrum(&self.eigenvalues, dt)
    }

    /// Eigenfunction rows rescaled to unit root-mean-square over the samples.
    pub fn normalized_eigenfunctions(&self) -> DMatrix<Complex64> {
        let mut out = self.eigenfunctions.clone();
        let n = out.ncols().max(1) as f64;
        for mut row in out.row_iter_mut() {
            let rms = (row.norm_squared() / n).sqrt();
            if rms > 0.0 {
                row.unscale_mut(rms);
            }
        }
        out
    }
}

fn check_pair(x: &SeriesMatrix, y: &SeriesMatrix) -> Result<()> {
    if x.nrows() != y.nrows() || x.ncols() != y.ncols() {
        return Err(Error::Shape(format!(
            "X is {}×{} but Y is {}×{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    if x.t_start() != y.t_start() {
        return Err(Error::Shape(format!(
            "X starts at t={} but Y at t={}; Y must be labelled with X's times",
            x.t_start(),
            y.t_start()
        )));
    }
    Ok(())
}

fn check_dual(x: &SeriesMatrix, z: &SeriesMatrix) -> Result<()> {
    if x.ncols() != z.ncols() || x.t_start() != z.t_start() {
        return Err(Error::Shape(format!(
            "dual covers t={}..{} but X covers t={}..{}; align them first",
            z.t_start(),
            z.t_end(),
            x.t_start(),
            x.t_end()
        )));
    }
    Ok(())
}

/// Algorithm 1.
pub fn dmd_standard(x: &SeriesMatrix, y: &SeriesMatrix, opts: &DmdOptions) -> Result<DmdResult> {
    opts.validate()?;
    check_pair(x, y)?;
    let (xv, yv) = (x.view(), y.view());
    let rtol = opts.rtol(x.nrows(), x.ncols());
    let Svd { u, s, v_t } = svd(xv)?;
    let r = numerical_rank(&s, rtol);
    if r == 0 {
        return Err(Error::Rank { requested: 1, admissible: 0 });
    }
    // C = Y X⁺ = (Y V_r) Σ_r⁻¹ U_rᴴ
    let yv_r = mul_adjoint(yv, v_t.rows(0, r));
    let mut scaled = yv_r;
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col.unscale_mut(s[k]);
    }
    let c = scaled * u.columns(0, r).adjoint();
    finish_full(Algorithm::Standard, c, xv, opts, Vec::new())
}

/// Algorithm 2.
pub fn dmd_svd(x: &SeriesMatrix, y: &SeriesMatrix, opts: &DmdOptions) -> Result<DmdResult> {
    opts.validate()?;
    check_pair(x, y)?;
    let rtol = opts.rtol(x.nrows(), x.ncols());
    let Svd { u, s, v_t } = svd(x.view())?;
    let k = opts.resolve_rank(&s, rtol)?;
    let w = u.columns(0, k);
    let vk_t = v_t.rows(0, k);
    // A = S⁻¹ Wᴴ (Y V)
    let a = scale_rows(w.adjoint() * mul_adjoint(y.view(), vk_t), &s[..k]);
    let eig = linalg::eig_left_right(&a, opts.eig_cond_limit)?;
    let modes = scale_columns(w.into_owned(), &s[..k], false) * &eig.right;
    let eigenfunctions = mul(eig.left.as_view(), vk_t);
    Ok(DmdResult {
        algorithm: Algorithm::Svd,
        operator: a,
        eigenvalues: eig.values,
        modes,
        eigenfunctions,
        singular_values: s,
        eigvec_condition: eig.condition,
    })
}

/// Algorithm 3.
pub fn dmd_noise_resistant(
    x: &SeriesMatrix,
    y: &SeriesMatrix,
    z: &SeriesMatrix,
    opts: &DmdOptions,
) -> Result<DmdResult> {
    opts.validate()?;
    check_pair(x, y)?;
    check_dual(x, z)?;
    if z.nrows() < x.nrows() {
        return Err(Error::invalid(format!(
            "dual has {} rows but X has {}; the dual needs at least as many",
            z.nrows(),
            x.nrows()
        )));
    }
    let g0 = cross_moment(x.view(), z.view());
    let g1 = cross_moment(y.view(), z.view());
    let rtol = opts.rtol(g0.nrows(), g0.ncols());
    let Svd { u, s, v_t } = svd(g0.as_view())?;
    let r = numerical_rank(&s, rtol);
    if r < x.nrows() {
        return Err(Error::Conditioning { rank: r, rows: x.nrows() });
    }
    // G₀⁺ = V Σ⁻¹ Uᴴ
    let g0_pinv = scale_columns(v_t.adjoint(), &s, true) * u.adjoint();
    let c = g1 * g0_pinv;
    finish_full(Algorithm::NoiseResistant, c, x.view(), opts, Vec::new())
}

/// Algorithm 4.
pub fn dmd_noise_resistant_svd(
    x: &SeriesMatrix,
    y: &SeriesMatrix,
    z: &SeriesMatrix,
    opts: &DmdOptions,
) -> Result<DmdResult> {
    opts.validate()?;
    check_pair(x, y)?;
    check_dual(x, z)?;
    let g0 = cross_moment(x.view(), z.view());
    let g1 = cross_moment(y.view(), z.view());
    let rtol = opts.rtol(g0.nrows(), g0.ncols());
    let Svd { u, s, v_t } = svd(g0.as_view())?;
    let k = opts.resolve_rank(&s, rtol)?;
    let w = u.columns(0, k);
    // A = S⁻¹ Wᴴ G₁ V
    let a = scale_rows(w.adjoint() * g1 * v_t.rows(0, k).adjoint(), &s[..k]);
    let eig = linalg::eig_left_right(&a, opts.eig_cond_limit)?;
    let modes = scale_columns(w.into_owned(), &s[..k], false) * &eig.right;
    // φ̂ = wᵀ S⁻¹ Wᴴ X
    let projector = scale_columns(eig.left.clone(), &s[..k], true) * w.adjoint();
    let eigenfunctions = mul(projector.as_view(), x.view());
    Ok(DmdResult {
        algorithm: Algorithm::NoiseResistantSvd,
        operator: a,
        eigenvalues: eig.values,
        modes,
        eigenfunctions,
        singular_values: s,
        eigvec_condition: eig.condition,
    })
}

/// Runs `algorithm`; the dual `z` is required by Alg 3 and 4 and ignored otherwise.
pub fn run(
    algorithm: Algorithm,
    x: &SeriesMatrix,
    y: &SeriesMatrix,
    z: Option<&SeriesMatrix>,
    opts: &DmdOptions,
) -> Result<DmdResult> {
    let dual = || z.ok_or_else(|| Error::invalid(format!("{algorithm} needs a dual observable")));
    match algorithm {
        Algorithm::Standard => dmd_standard(x, y, opts),
        Algorithm::Svd => dmd_svd(x, y, opts),
        Algorithm::NoiseResistant => dmd_noise_resistant(x, y, dual()?, opts),
        Algorithm::NoiseResistantSvd => dmd_noise_resistant_svd(x, y, dual()?, opts),
    }
}

fn finish_full(
    algorithm: Algorithm,
    c: DMatrix<Complex64>,
    x: DMatrixView<'_, Complex64>,
    opts: &DmdOptions,
    singular_values: Vec<f64>,
) -> Result<DmdResult> {
    let eig = linalg::eig_left_right(&c, opts.eig_cond_limit)?;
    let eigenfunctions = mul(eig.left.as_view(), x);
    Ok(DmdResult {
        algorithm,
        operator: c,
        eigenvalues: eig.values,
        modes: eig.right,
        eigenfunctions,
        singular_values,
        eigvec_condition: eig.condition,
    })
}

/// Divides row `i` by `s[i]`.
fn scale_rows(mut m: DMatrix<Complex64>, s: &[f64]) -> DMatrix<Complex64> {
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row.unscale_mut(s[i]);
    }
    m
}

/// Multiplies (or with `invert`, divides) column `j` by `s[j]`.
fn scale_columns(mut m: DMatrix<Complex64>, s: &[f64], invert: bool) -> DMatrix<Complex64> {
    for (j, mut col) in m.column_iter_mut().enumerate().take(s.len()) {
        if invert {
            col.unscale_mut(s[j]);
        } else {
            col.scale_mut(s[j]);
        }
    }
    m
}

#[cfg(test)]
mod tests;
