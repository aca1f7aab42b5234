//! Elementary symmetric functions of principal curvatures, shape operators
//! and their Newton transformations.
//!
//! The r-th mean curvature `σ_r` is the r-th elementary symmetric function of
//! the principal curvatures. The Newton transformations are the matrix
//! polynomials `P_r = Σ_j (-1)^j σ_{r-j} A^j`, equivalently generated by
//! `P_0 = I`, `P_r = σ_r I - P_{r-1} A`. Every quantity exported here is an
//! orthogonal-conjugation invariant of the shape operator.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`ShapeOperator::new`].
pub const SYM_TOL: f64 = 1e-10;
/// Relative size of negative eigenvalues that [`sqrt_psd`] clamps to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Residual tolerance for trace identities, before degree scaling.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Binomial coefficient as a float, with `C(m, k) = 0` for `k > m`.
pub fn binomial(m: usize, k: usize) -> f64 {
    if k > m {
        return 0.0;
    }
    let k = k.min(m - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (m - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// Principal curvatures `k_1..k_n` at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CurvatureVector(Vec<f64>);

impl CurvatureVector {
    pub fn new(k: Vec<f64>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::Domain("curvature vector needs n >= 1 entries".into()));
        }
        if let Some(bad) = k.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite principal curvature {bad}")));
        }
        Ok(Self(k))
    }

    /// `n` copies of `value`.
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `‖A‖² = Σ k_i²`.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|k| k * k).sum()
    }

    /// `σ_0..σ_n`.
    pub fn sigmas(&self) -> Vec<f64> {
        elem_sym_table(&self.0, self.0.len())
    }

    pub fn sigma(&self, r: usize) -> f64 {
        elem_sym(self, r)
    }

    /// The curvatures with entry `i` (0-based) removed, i.e. those of `A_i`.
    pub fn without(&self, i: usize) -> Result<Vec<f64>> {
        if i >= self.0.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.0.len() });
        }
        let mut rest = self.0.clone();
        rest.remove(i);
        Ok(rest)
    }

    /// Eigenvalues `σ_{r-1}(A_j)` of `P_{r-1}`, one per principal direction.
    pub fn newton_eigenvalues(&self, order: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|j| elem_sym_excluding(self, j, order).expect("index in range"))
            .collect()
    }
}

impl TryFrom<Vec<f64>> for CurvatureVector {
    type Error = Error;

    fn try_from(k: Vec<f64>) -> Result<Self> {
        Self::new(k)
    }
}

impl From<CurvatureVector> for Vec<f64> {
    fn from(k: CurvatureVector) -> Self {
        k.0
    }
}

/// `e_0..e_{r_max}` of `k` by the prefix recurrence
/// `e_r^{(j)} = e_r^{(j-1)} + k_j e_{r-1}^{(j-1)}`.
fn elem_sym_table(k: &[f64], r_max: usize) -> Vec<f64> {
    let mut e = vec![0.0; r_max + 1];
    e[0] = 1.0;
    for (j, &kj) in k.iter().enumerate() {
        let top = r_max.min(j + 1);
        for r in (1..=top).rev() {
            e[r] += kj * e[r - 1];
        }
    }
    e
}

fn elem_sym_raw(k: &[f64], r: usize) -> f64 {
    if r > k.len() {
        return 0.0;
    }
    elem_sym_table(k, r)[r]
}

/// `σ_r(k)`, with `σ_0 = 1` and `σ_r = 0` for `r > n`.
pub fn elem_sym(k: &CurvatureVector, r: usize) -> f64 {
    elem_sym_raw(k.as_slice(), r)
}

/// `σ_r(A_i)`: the symmetric function of `k` with entry `i` (0-based) removed.
pub fn elem_sym_excluding(k: &CurvatureVector, i: usize, r: usize) -> Result<f64> {
    Ok(elem_sym_raw(&k.without(i)?, r))
}

/// `Σ_j σ_{r-1}(A_j) k_j²`, the eigenframe form of `tr(P_{r-1} A²)`.
pub fn modified_norm_sq_from_curvatures(k: &CurvatureVector, r: usize) -> f64 {
    if r == 0 {
        return 0.0;
    }
    k.newton_eigenvalues(r - 1)
        .iter()
        .zip(k.as_slice())
        .map(|(lambda, kj)| lambda * kj * kj)
        .sum()
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |row, col| eig.eigenvectors[(row, order[col])]);
    (values, vectors)
}

/// The shape operator `A` written in some orthonormal tangent frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeOperator(DMatrix<f64>);

impl ShapeOperator {
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        if s.nrows() != s.ncols() || s.nrows() == 0 {
            return Err(Error::Domain(format!(
                "shape operator must be square and non-empty, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("shape operator has non-finite entries".into()));
        }
        let tolerance = SYM_TOL * frobenius(&s).max(1.0);
        let defect = max_abs(&(&s - s.transpose()));
        if defect > tolerance {
            return Err(Error::Asymmetric { defect, tolerance });
        }
        // symmetrize away the admitted round-off
        let sym = (&s + s.transpose()) * 0.5;
        Ok(Self(sym))
    }

    /// The diagonal operator with the given principal curvatures.
    pub fn from_curvatures(k: &CurvatureVector) -> Self {
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(k.as_slice())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        frobenius(&self.0)
    }

    /// `Q S Qᵀ` for an orthogonal `Q`.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> Result<Self> {
        Self::new(q * &self.0 * q.transpose())
    }

    /// Principal curvatures in ascending order.
    pub fn principal_curvatures(&self) -> CurvatureVector {
        let (values, _) = sorted_eigen(&self.0);
        CurvatureVector(values)
    }
}

/// `σ_0..σ_n` together with `P_0..P_n` for one shape operator.
#[derive(Debug, Clone)]
pub struct NewtonFamily {
    a: DMatrix<f64>,
    curvatures: CurvatureVector,
    frame: DMatrix<f64>,
    sigmas: Vec<f64>,
    p: Vec<DMatrix<f64>>,
    polynomial_defect: f64,
}

/// Builds the Newton family of `s`. The σ's come from the eigenvalues of `s`;
/// the `P_r` come from the recurrence and are cross-checked against the
/// explicit polynomial (see [`NewtonFamily::polynomial_defect`]).
pub fn newton_family(s: &ShapeOperator) -> NewtonFamily {
    let n = s.dim();
    let a = s.matrix().clone();
    let (values, frame) = sorted_eigen(&a);
    let curvatures = CurvatureVector(values);
    let sigmas = curvatures.sigmas();

    let identity = DMatrix::<f64>::identity(n, n);
    let mut p = Vec::with_capacity(n + 1);
    p.push(identity.clone());
    for r in 1..=n {
        let next = &identity * sigmas[r] - &p[r - 1] * &a;
        p.push(next);
    }

    let mut powers = Vec::with_capacity(n + 1);
    powers.push(identity.clone());
    for j in 1..=n {
        powers.push(&powers[j - 1] * &a);
    }
    let scale = 1.0 + frobenius(&a);
    let mut polynomial_defect = 0.0_f64;
    for r in 0..=n {
        let mut poly = DMatrix::<f64>::zeros(n, n);
        for j in 0..=r {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            poly += &powers[j] * (sign * sigmas[r - j]);
        }
        let defect = max_abs(&(&poly - &p[r])) / scale.powi(r as i32);
        polynomial_defect = polynomial_defect.max(defect);
    }

    NewtonFamily { a, curvatures, frame, sigmas, p, polynomial_defect }
}

impl NewtonFamily {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Principal curvatures (ascending), the eigenvalues of `A`.
    pub fn curvatures(&self) -> &CurvatureVector {
        &self.curvatures
    }

    /// Orthonormal eigenvectors of `A`, columns ordered like [`Self::curvatures`].
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// `σ_r`, zero beyond `n`.
    pub fn sigma(&self, r: usize) -> f64 {
        self.sigmas.get(r).copied().unwrap_or(0.0)
    }

    /// `P_r` for `0 <= r <= n`.
    pub fn p(&self, r: usize) -> &DMatrix<f64> {
        &self.p[r]
    }

    pub fn all_p(&self) -> &[DMatrix<f64>] {
        &self.p
    }

    /// Largest entrywise gap between the recurrence and polynomial forms,
    /// scaled by `(1+‖A‖)^r`.
    pub fn polynomial_defect(&self) -> f64 {
        self.polynomial_defect
    }

    /// Largest entry of `P_r - (σ_r I - P_{r-1} A)` over `1 <= r <= n`.
    pub fn recurrence_defect(&self) -> f64 {
        let n = self.dim();
        let identity = DMatrix::<f64>::identity(n, n);
        (1..=n)
            .map(|r| max_abs(&(&self.p[r] - (&identity * self.sigmas[r] - &self.p[r - 1] * &self.a))))
            .fold(0.0, f64::max)
    }

    /// `‖P_n‖`, zero by Cayley–Hamilton.
    pub fn cayley_hamilton_defect(&self) -> f64 {
        frobenius(&self.p[self.dim()])
    }

    /// Largest `‖P_r A - A P_r‖` over all r.
    pub fn commutator_defect(&self) -> f64 {
        self.p
            .iter()
            .map(|p| frobenius(&(p * &self.a - &self.a * p)))
            .fold(0.0, f64::max)
    }

    /// `P_r` expressed in the eigenframe of `A`.
    pub fn p_in_eigenframe(&self, r: usize) -> DMatrix<f64> {
        self.frame.transpose() * &self.p[r] * &self.frame
    }
}

/// The unique symmetric PSD square root. Eigenvalues in
/// `[-CLAMP_TOL·‖M‖, 0)` are treated as zero.
pub fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Domain("sqrt_psd needs a square matrix".into()));
    }
    let tolerance = SYM_TOL * frobenius(m).max(1.0);
    let defect = max_abs(&(m - m.transpose()));
    if defect > tolerance {
        return Err(Error::Asymmetric { defect, tolerance });
    }
    let (values, vectors) = sorted_eigen(m);
    let threshold = CLAMP_TOL * frobenius(m);
    if let Some(&lowest) = values.first() {
        if lowest < -threshold {
            return Err(Error::NotPsd { min_eigenvalue: lowest, threshold });
        }
    }
    let roots = nalgebra::DVector::from_iterator(values.len(), values.iter().map(|v| v.max(0.0).sqrt()));
    Ok(&vectors * DMatrix::from_diagonal(&roots) * vectors.transpose())
}

/// `‖√P_{r-1} A‖²` computed three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModifiedNormSq {
    /// `tr(P_{r-1} A²)`.
    pub trace_form: f64,
    /// `Σ_j σ_{r-1}(A_j) k_j²`.
    pub eigen_form: f64,
    /// `σ_1 σ_r - (r+1) σ_{r+1}`.
    pub sigma_form: f64,
    /// Whether `P_{r-1}` is positive semidefinite, so that the value is a
    /// genuine squared norm and not just the trace.
    pub p_is_psd: bool,
}

impl ModifiedNormSq {
    pub fn value(&self) -> f64 {
        self.trace_form
    }

    /// Largest pairwise disagreement of the three forms.
    pub fn spread(&self) -> f64 {
        let v = [self.trace_form, self.eigen_form, self.sigma_form];
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

fn check_order(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::Domain(format!("order r = {r} outside 1..={n}")));
    }
    Ok(())
}

pub fn modified_sff_norm_sq(s: &ShapeOperator, r: usize) -> Result<ModifiedNormSq> {
    check_order(r, s.dim())?;
    let family = newton_family(s);
    Ok(modified_norm_from_family(&family, r))
}

fn modified_norm_from_family(family: &NewtonFamily, r: usize) -> ModifiedNormSq {
    let a = family.shape();
    let p = family.p(r - 1);
    let trace_form = (p * a * a).trace();
    let eigen_form = modified_norm_sq_from_curvatures(family.curvatures(), r);
    let sigma_form = family.sigma(1) * family.sigma(r) - (r + 1) as f64 * family.sigma(r + 1);
    let p_is_psd = definiteness(p, CLAMP_TOL).is_psd();
    ModifiedNormSq { trace_form, eigen_form, sigma_form, p_is_psd }
}

/// Normalized residuals of the three trace identities for `P_{r-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceIdentityReport {
    /// `|tr P_{r-1} - (n-r+1) σ_{r-1}| / scale`
    pub trace_p: f64,
    /// `|tr(P_{r-1}A) - r σ_r| / scale`
    pub trace_pa: f64,
    /// `|tr(P_{r-1}A²) - (σ_1σ_r - (r+1)σ_{r+1})| / scale`
    pub trace_pa2: f64,
    /// `(1+‖S‖)^{r+1}`
    pub scale: f64,
}

impl TraceIdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.trace_p.max(self.trace_pa).max(self.trace_pa2)
    }
}

pub fn trace_identities(s: &ShapeOperator, r: usize) -> Result<TraceIdentityReport> {
    check_order(r, s.dim())?;
    let family = newton_family(s);
    Ok(trace_identities_from_family(&family, r))
}

pub(crate) fn trace_identities_from_family(family: &NewtonFamily, r: usize) -> TraceIdentityReport {
    let n = family.dim();
    let a = family.shape();
    let p = family.p(r - 1);
    let scale = (1.0 + frobenius(a)).powi(r as i32 + 1);
    let rf = r as f64;
    let pa = p * a;
    let trace_p = (p.trace() - (n - r + 1) as f64 * family.sigma(r - 1)).abs() / scale;
    let trace_pa = (pa.trace() - rf * family.sigma(r)).abs() / scale;
    let sigma_form = family.sigma(1) * family.sigma(r) - (rf + 1.0) * family.sigma(r + 1);
    let trace_pa2 = ((&pa * a).trace() - sigma_form).abs() / scale;
    TraceIdentityReport { trace_p, trace_pa, trace_pa2, scale }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefinitenessClass {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
    NegativeSemidefinite,
    NegativeDefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Definiteness {
    pub class: DefinitenessClass,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl Definiteness {
    pub fn is_psd(&self) -> bool {
        matches!(self.class, DefinitenessClass::PositiveDefinite | DefinitenessClass::PositiveSemidefinite)
    }

    /// Classifies from extreme eigenvalues; values within `±threshold` of zero
    /// count as zero.
    pub fn from_extremes(min_eigenvalue: f64, max_eigenvalue: f64, threshold: f64) -> Self {
        let sign = |v: f64| {
            if v > threshold {
                1
            } else if v < -threshold {
                -1
            } else {
                0
            }
        };
        let class = match (sign(min_eigenvalue), sign(max_eigenvalue)) {
            (1, _) => DefinitenessClass::PositiveDefinite,
            (0, 1) | (0, 0) => DefinitenessClass::PositiveSemidefinite,
            (-1, 1) => DefinitenessClass::Indefinite,
            (-1, 0) => DefinitenessClass::NegativeSemidefinite,
            _ => DefinitenessClass::NegativeDefinite,
        };
        Self { class, min_eigenvalue, max_eigenvalue }
    }
}

/// Classification by extreme eigenvalues against `±tol·max(1, ‖M‖)`.
pub fn definiteness(m: &DMatrix<f64>, tol: f64) -> Definiteness {
    let (values, _) = sorted_eigen(m);
    let threshold = tol * frobenius(m).max(1.0);
    let lo = values.first().copied().unwrap_or(0.0);
    let hi = values.last().copied().unwrap_or(0.0);
    Definiteness::from_extremes(lo, hi, threshold)
}

/// Both sides of `r² σ_r² <= tr(P_{r-1}) tr(P_{r-1}A²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchySchwarz {
    pub lhs: f64,
    pub rhs: f64,
}

impl CauchySchwarz {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Evaluates the Cauchy–Schwarz bound; only defined when `P_{r-1}` is PSD.
pub fn cauchy_schwarz_bound(s: &ShapeOperator, r: usize) -> Result<CauchySchwarz> {
    check_order(r, s.dim())?;
    let family = newton_family(s);
    cauchy_schwarz_from_family(&family, r)
}

pub(crate) fn cauchy_schwarz_from_family(family: &NewtonFamily, r: usize) -> Result<CauchySchwarz> {
    let p = family.p(r - 1);
    let (values, _) = sorted_eigen(p);
    let threshold = CLAMP_TOL * frobenius(p).max(1.0);
    let lowest = values.first().copied().unwrap_or(0.0);
    if lowest < -threshold {
        return Err(Error::NotPsd { min_eigenvalue: lowest, threshold });
    }
    let a = family.shape();
    let rf = r as f64;
    let sigma_r = family.sigma(r);
    Ok(CauchySchwarz {
        lhs: rf * rf * sigma_r * sigma_r,
        rhs: p.trace() * (p * a * a).trace(),
    })
}
