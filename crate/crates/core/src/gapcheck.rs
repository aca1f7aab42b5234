//! Sampled hypothesis checks for the gap theorems on self-shrinkers of the
//! r-mean curvature flow: the modified norm `‖√P_{r-1}A‖²` against `r`,
//! definiteness of `P_{r-1}`, and the Gauss-flow case `r = n`.
//!
//! Classifications have "consistent with" semantics on sampled geometry:
//! completeness and properness cannot be certified from finitely many points.

use serde::{Deserialize, Serialize};

use crate::catalog::{check_order, sample_points, HypersurfaceModel, PointSample};
use crate::error::{Error, Result};
use crate::symfun::{
    modified_norm_sq_from_curvatures, newton_family, Definiteness, ShapeOperator,
};

/// Absolute tolerance separating strict from boundary cases.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Classification {
    Hyperplane,
    Sphere,
    Cylinder { m: usize },
    Inconclusive,
    NotShrinker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapFlags {
    pub thm1_strict: bool,
    pub thm1_boundary: bool,
    pub thm1_psd_definite: bool,
    pub thm2: bool,
    /// Only evaluated for `r = n`.
    pub gauss_weakly_convex: Option<bool>,
    /// `sup HK <= n`, only evaluated for `r = n`.
    #[serde(rename = "gauss_HK")]
    pub gauss_hk: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GapReport {
    pub r: usize,
    pub n: usize,
    pub samples: usize,
    pub sup_modified_norm_sq: f64,
    pub min_eig_p: f64,
    pub max_eig_p: f64,
    pub sup_a_norm_sq: f64,
    pub sup_sigma_rm1: f64,
    pub sup_residual: f64,
    pub min_curvature: f64,
    /// `sup σ_1σ_n`.
    #[serde(rename = "supHK")]
    pub sup_hk: f64,
    /// Number of vanishing principal curvatures (fewest over samples).
    pub zero_curvature_multiplicity: usize,
    /// Largest deviation of the pointwise invariants from the first sample.
    pub invariant_spread: f64,
    pub psd_class: Definiteness,
    pub flags: GapFlags,
    pub classification: Classification,
}

impl GapReport {
    pub fn is_shrinker(&self) -> bool {
        self.sup_residual <= GAP_TOL
    }
}

/// Sample the model and evaluate the hypotheses at order `r`.
pub fn evaluate(model: &HypersurfaceModel, r: usize, resolution: usize) -> Result<GapReport> {
    check_order(model.dim(), r)?;
    evaluate_samples(&sample_points(model, resolution)?, r)
}

/// Evaluate the hypotheses on given samples, which must share `n`.
pub fn evaluate_samples(samples: &[PointSample], r: usize) -> Result<GapReport> {
    let n = common_dim(samples)?;
    check_order(n, r)?;
    let mut sup_norm = f64::NEG_INFINITY;
    let mut min_eig = f64::INFINITY;
    let mut max_eig = f64::NEG_INFINITY;
    let mut sup_a = f64::NEG_INFINITY;
    let mut sup_sigma = f64::NEG_INFINITY;
    let mut sup_residual: f64 = 0.0;
    let mut min_k = f64::INFINITY;
    let mut sup_hk = f64::NEG_INFINITY;
    let mut zero_mult = usize::MAX;
    let mut spread: f64 = 0.0;
    let mut first: Option<[f64; 3]> = None;
    for s in samples {
        let k = &s.curvatures;
        let norm = modified_norm_sq_from_curvatures(k, r);
        let eig = k.newton_eigenvalues(r - 1);
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let residual = (k.sigma(r) + s.support).abs();
        sup_norm = sup_norm.max(norm);
        min_eig = min_eig.min(lo);
        max_eig = max_eig.max(hi);
        sup_a = sup_a.max(k.norm_sq());
        sup_sigma = sup_sigma.max(k.sigma(r - 1));
        sup_residual = sup_residual.max(residual);
        min_k = min_k.min(k.as_slice().iter().copied().fold(f64::INFINITY, f64::min));
        sup_hk = sup_hk.max(k.sigma(1) * k.sigma(n));
        zero_mult = zero_mult.min(k.as_slice().iter().filter(|v| v.abs() <= GAP_TOL).count());
        let inv = [norm, lo, residual];
        match first {
            None => first = Some(inv),
            Some(f) => spread = (0..3).map(|i| (inv[i] - f[i]).abs()).fold(spread, f64::max),
        }
    }
    let rf = r as f64;
    let psd_class = Definiteness::from_extremes(min_eig, max_eig, GAP_TOL);
    let gauss = r == n;
    let flags = GapFlags {
        thm1_strict: sup_norm < rf - GAP_TOL,
        thm1_boundary: (sup_norm - rf).abs() <= GAP_TOL,
        thm1_psd_definite: min_eig > GAP_TOL,
        thm2: sup_norm < rf - GAP_TOL && sup_a.is_finite(),
        gauss_weakly_convex: gauss.then_some(min_k >= -GAP_TOL),
        gauss_hk: gauss.then_some(sup_hk <= n as f64 + GAP_TOL),
    };
    let mut report = GapReport {
        r,
        n,
        samples: samples.len(),
        sup_modified_norm_sq: sup_norm,
        min_eig_p: min_eig,
        max_eig_p: max_eig,
        sup_a_norm_sq: sup_a,
        sup_sigma_rm1: sup_sigma,
        sup_residual,
        min_curvature: min_k,
        sup_hk,
        zero_curvature_multiplicity: zero_mult,
        invariant_spread: spread,
        psd_class,
        flags,
        classification: Classification::Inconclusive,
    };
    report.classification = classify(&report).unwrap_or(Classification::NotShrinker);
    Ok(report)
}

fn common_dim(samples: &[PointSample]) -> Result<usize> {
    let n = samples.first().ok_or(Error::EmptySamples)?.curvatures.dim();
    if samples.iter().any(|s| s.curvatures.dim() != n) {
        return Err(Error::Domain("samples have mixed dimensions".into()));
    }
    Ok(n)
}

/// Hyperplane, sphere or cylinder taxonomy of a shrinker report.
pub fn classify(report: &GapReport) -> Result<Classification> {
    if !report.is_shrinker() {
        return Err(Error::NotShrinker { residual: report.sup_residual, tolerance: GAP_TOL });
    }
    let rf = report.r as f64;
    if report.sup_modified_norm_sq < rf - GAP_TOL {
        return Ok(Classification::Hyperplane);
    }
    if report.flags.thm1_boundary && report.min_eig_p > GAP_TOL {
        return Ok(match report.zero_curvature_multiplicity {
            0 => Classification::Sphere,
            z if z < report.n => Classification::Cylinder { m: report.n - z },
            _ => Classification::Inconclusive,
        });
    }
    Ok(Classification::Inconclusive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussVerdict {
    UnitSphere,
    Hyperplane,
    Inconclusive,
    NotShrinker,
}

/// Checks for the Gauss curvature flow `r = n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GaussReport {
    pub n: usize,
    pub weakly_convex: bool,
    pub min_curvature: f64,
    #[serde(rename = "supHK")]
    pub sup_hk: f64,
    /// `sup |tr(P_{n-1}A²) - HK|`.
    pub trace_hk_residual: f64,
    /// `sup_i |K - k_i σ_{n-1}(A_i)|`.
    pub eigen_residual: f64,
    /// `sup ‖P_{n-1}A - K I‖` (max entry).
    pub operator_residual: f64,
    pub sup_residual: f64,
    pub verdict: GaussVerdict,
}

pub fn gauss_check(model: &HypersurfaceModel, resolution: usize) -> Result<GaussReport> {
    let samples = sample_points(model, resolution)?;
    let n = common_dim(&samples)?;
    let mut report = GaussReport {
        n,
        weakly_convex: true,
        min_curvature: f64::INFINITY,
        sup_hk: f64::NEG_INFINITY,
        trace_hk_residual: 0.0,
        eigen_residual: 0.0,
        operator_residual: 0.0,
        sup_residual: 0.0,
        verdict: GaussVerdict::Inconclusive,
    };
    for s in &samples {
        let k = &s.curvatures;
        let family = newton_family(&ShapeOperator::from_curvatures(k));
        let a = family.shape();
        let p = family.p(n - 1);
        let gauss = k.sigma(n);
        let hk = k.sigma(1) * gauss;
        let trace = (p * a * a).trace();
        report.trace_hk_residual = report.trace_hk_residual.max((trace - hk).abs());
        let lambda = k.newton_eigenvalues(n - 1);
        for (ki, li) in k.as_slice().iter().zip(&lambda) {
            report.eigen_residual = report.eigen_residual.max((gauss - ki * li).abs());
        }
        let defect = p * a - nalgebra::DMatrix::identity(n, n) * gauss;
        report.operator_residual = report.operator_residual.max(defect.amax());
        let min_k = k.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
        report.min_curvature = report.min_curvature.min(min_k);
        report.sup_hk = report.sup_hk.max(hk);
        report.sup_residual = report.sup_residual.max((gauss + s.support).abs());
    }
    report.weakly_convex = report.min_curvature >= -GAP_TOL;
    let nf = n as f64;
    report.verdict = if report.sup_residual > GAP_TOL {
        GaussVerdict::NotShrinker
    } else if !report.weakly_convex {
        GaussVerdict::Inconclusive
    } else if report.sup_hk < nf - GAP_TOL {
        GaussVerdict::Hyperplane
    } else if (report.sup_hk - nf).abs() <= GAP_TOL {
        GaussVerdict::UnitSphere
    } else {
        GaussVerdict::Inconclusive
    };
    Ok(report)
}

/// Conclusion about `P_{r-1}` drawn by a sufficient condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdConclusion {
    /// Semidefinite of unknown sign.
    Semidefinite,
    PositiveSemidefinite,
    /// Positive semidefinite for one of the two orientations.
    PositiveSemidefiniteUpToOrientation,
    Definite,
    PositiveDefinite,
    PositiveDefiniteUpToOrientation,
}

impl PsdConclusion {
    pub fn is_positive(self) -> bool {
        !matches!(self, PsdConclusion::Semidefinite | PsdConclusion::Definite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdSufficientReport {
    pub r: usize,
    pub tolerance: f64,
    /// `σ_r ≡ 0`.
    pub vanishing_sigma_r: Option<PsdConclusion>,
    /// `σ_r ≡ 0` and `σ_{r+1}` nowhere zero.
    pub vanishing_sigma_r_nonzero_next: Option<PsdConclusion>,
    /// Smallest `k >= r` with `σ_k > 0` on every sample, when some sample is
    /// weakly convex.
    pub convex_point_witness: Option<usize>,
    /// The strongest positive conclusion reached, if any.
    pub conclusion: Option<PsdConclusion>,
}

impl PsdSufficientReport {
    pub fn fires(&self) -> bool {
        self.conclusion.is_some()
    }
}

pub fn psd_sufficient(samples: &[PointSample], r: usize) -> Result<PsdSufficientReport> {
    psd_sufficient_with_tol(samples, r, GAP_TOL)
}

/// Evaluate the classical sufficient conditions for `P_{r-1} >= 0`. A
/// condition that does not fire says nothing about necessity.
pub fn psd_sufficient_with_tol(samples: &[PointSample], r: usize, tol: f64) -> Result<PsdSufficientReport> {
    let n = common_dim(samples)?;
    check_order(n, r)?;
    let all = |f: &dyn Fn(&PointSample) -> bool| samples.iter().all(f);
    let sigma_r_zero = all(&|s| s.curvatures.sigma(r).abs() <= tol);
    let next_nonzero = all(&|s| s.curvatures.sigma(r + 1).abs() > tol);
    let prev_nonneg = all(&|s| s.curvatures.sigma(r - 1) >= -tol);
    let odd = (r - 1) % 2 == 1;
    let signed = |weak: PsdConclusion, up_to_orientation: PsdConclusion, positive: PsdConclusion| {
        if odd {
            up_to_orientation
        } else if prev_nonneg {
            positive
        } else {
            weak
        }
    };
    let vanishing_sigma_r = sigma_r_zero.then(|| {
        signed(
            PsdConclusion::Semidefinite,
            PsdConclusion::PositiveSemidefiniteUpToOrientation,
            PsdConclusion::PositiveSemidefinite,
        )
    });
    let vanishing_sigma_r_nonzero_next = (sigma_r_zero && next_nonzero).then(|| {
        signed(PsdConclusion::Definite, PsdConclusion::PositiveDefiniteUpToOrientation, PsdConclusion::PositiveDefinite)
    });
    let convex_point = samples.iter().any(|s| s.curvatures.as_slice().iter().all(|k| *k >= -tol));
    let convex_point_witness = if convex_point {
        (r..=n).find(|&k| all(&|s| s.curvatures.sigma(k) > tol))
    } else {
        None
    };
    let conclusion = [
        vanishing_sigma_r_nonzero_next,
        convex_point_witness.map(|_| PsdConclusion::PositiveDefinite),
        vanishing_sigma_r,
    ]
    .into_iter()
    .flatten()
    .find(|c| c.is_positive());
    Ok(PsdSufficientReport {
        r,
        tolerance: tol,
        vanishing_sigma_r,
        vanishing_sigma_r_nonzero_next,
        convex_point_witness,
        conclusion,
    })
}
