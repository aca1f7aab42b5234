//! Divergence-form operators `L_{r-1} f = div(P_{r-1} ∇f)` and their drifted
//! variants for rotationally invariant functions on surfaces of revolution,
//! together with residual checks of the standard identities they satisfy.
//!
//! For a field depending only on the meridian parameter `u`, the gradient is
//! `(f_u / |X_u|²) X_u`, and `P_{r-1}` acts on `X_u` by its meridian eigenvalue
//! `λ`, so `L_{r-1} f = (1/J) ∂_u(J λ f_u / |X_u|²)` with `J = ρ |X_u|`. The
//! flux is discretized on cell faces with arithmetic face weights.

use serde::{Deserialize, Serialize};

use crate::catalog::{
    check_order, sample_points, HypersurfaceModel, Orientation, Parity, ProfileCurve,
    ProfileGeometry, MIN_NODES, MIN_RESOLUTION,
};
use crate::error::{Error, Result};

/// Convergence order of every operator in this module.
pub const TRUNCATION_ORDER: u32 = 2;

/// Nodes dropped at each end of the grid when reporting residuals.
pub const BOUNDARY_TRIM: usize = 2;

/// Accepted band for observed convergence orders.
pub const ORDER_BAND: (f64, f64) = (1.5, 2.5);

/// Residuals below this are treated as exact (no order is required).
pub const EXACT_TOL: f64 = 1e-8;

/// Closed models are checked on the pole-free band `|z| <= BAND_FRACTION·b`.
pub const BAND_FRACTION: f64 = 0.7;

/// Tolerance on `|σ_r + ⟨X, N⟩|` for models entering the shrinker checks.
pub const SHRINKER_TOL: f64 = 1e-10;

/// A rotationally invariant function sampled on a profile grid.
#[derive(Debug, Clone)]
pub struct ScalarField<'g> {
    values: Vec<f64>,
    geometry: &'g ProfileGeometry,
}

impl<'g> ScalarField<'g> {
    pub fn new(geometry: &'g ProfileGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::Domain(format!(
                "field has {} values on a grid of {} nodes",
                values.len(),
                geometry.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field has non-finite values".into()));
        }
        Ok(Self { values, geometry })
    }

    pub fn from_fn(geometry: &'g ProfileGeometry, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(geometry, (0..geometry.len()).map(f).collect())
    }

    pub fn constant(geometry: &'g ProfileGeometry, c: f64) -> Result<Self> {
        Self::new(geometry, vec![c; geometry.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn geometry(&self) -> &'g ProfileGeometry {
        self.geometry
    }

    fn same_geometry(&self, other: &ScalarField<'_>) -> Result<()> {
        if std::ptr::eq(self.geometry, other.geometry) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }

    fn d_u(&self) -> Vec<f64> {
        self.geometry.profile.d1(&self.values, Parity::Scalar)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorResult {
    pub values: Vec<f64>,
    pub truncation_order: u32,
}

fn check_grid(g: &ProfileGeometry) -> Result<()> {
    if g.len() < MIN_NODES {
        Err(Error::GridTooShort { len: g.len(), min: MIN_NODES })
    } else {
        Ok(())
    }
}

/// Meridian component `f_u / |X_u|` of the surface gradient.
pub fn surface_gradient(field: &ScalarField<'_>) -> Result<Vec<f64>> {
    let g = field.geometry;
    check_grid(g)?;
    Ok(field.d_u().iter().zip(&g.metric).map(|(d, m)| d / m.sqrt()).collect())
}

/// `⟨X, ∇f⟩` at each node.
pub fn position_dot_gradient(field: &ScalarField<'_>) -> Result<Vec<f64>> {
    let g = field.geometry;
    check_grid(g)?;
    let xt = g.position_dot_tangent();
    Ok(field.d_u().iter().zip(&g.metric).zip(&xt).map(|((d, m), x)| d * x / m).collect())
}

/// `(1/J) Δ_h(W Δ_h f)` with `W = ρλ/|X_u|` evaluated on cell faces: `ρ` and
/// `λ` averaged, `|X_u|` from the compact difference across the face.
fn flux_divergence(field: &ScalarField<'_>, lambda: &[f64]) -> Vec<f64> {
    let g = field.geometry;
    let p = &g.profile;
    let h = p.spacing();
    let rho = p.extend(p.rho(), Parity::Radial);
    let z = p.extend(p.z(), Parity::Axial);
    let lam = p.extend(lambda, Parity::Scalar);
    let f = p.extend(&field.values, Parity::Scalar);
    let face = |i: usize| {
        let len = (rho[i + 1] - rho[i]).hypot(z[i + 1] - z[i]) / h;
        0.25 * (rho[i] + rho[i + 1]) * (lam[i] + lam[i + 1]) / len * (f[i + 1] - f[i])
    };
    (1..=g.len())
        .map(|i| (face(i) - face(i - 1)) / (h * h * g.area[i - 1]))
        .collect()
}

/// Discrete `L_{r-1} f` for `r ∈ {1, 2}`.
pub fn lr_apply(field: &ScalarField<'_>, r: usize) -> Result<OperatorResult> {
    let g = field.geometry;
    check_grid(g)?;
    check_order(2, r)?;
    let lambda = g.newton_meridian_eigenvalue(r);
    Ok(OperatorResult { values: flux_divergence(field, &lambda), truncation_order: TRUNCATION_ORDER })
}

/// Discrete Laplace–Beltrami operator.
pub fn laplace_beltrami(field: &ScalarField<'_>) -> Result<OperatorResult> {
    let g = field.geometry;
    check_grid(g)?;
    Ok(OperatorResult { values: flux_divergence(field, &vec![1.0; g.len()]), truncation_order: TRUNCATION_ORDER })
}

/// Drifted operator `L_{r-1} f - ⟨X, ∇f⟩`.
pub fn drifted_apply(field: &ScalarField<'_>, r: usize) -> Result<OperatorResult> {
    let mut out = lr_apply(field, r)?;
    for (v, d) in out.values.iter_mut().zip(position_dot_gradient(field)?) {
        *v -= d;
    }
    Ok(out)
}

/// `⟨P_{r-1} ∇f, ∇g⟩` at each node.
pub fn newton_pairing(f: &ScalarField<'_>, g: &ScalarField<'_>, r: usize) -> Result<Vec<f64>> {
    f.same_geometry(g)?;
    check_order(2, r)?;
    let geo = f.geometry;
    let lambda = geo.newton_meridian_eigenvalue(r);
    let (df, dg) = (f.d_u(), g.d_u());
    Ok((0..geo.len()).map(|i| lambda[i] * df[i] * dg[i] / geo.metric[i]).collect())
}

/// Residual nodes. Periodic grids are trimmed too, since fields such as
/// `|X|²` on a cylinder are not periodic in the axial direction.
fn interior(profile: &ProfileCurve) -> std::ops::Range<usize> {
    BOUNDARY_TRIM..profile.len() - BOUNDARY_TRIM
}

fn max_interior(profile: &ProfileCurve, residual: impl Fn(usize) -> f64) -> f64 {
    interior(profile).map(residual).map(f64::abs).fold(0.0, f64::max)
}

/// `σ_1σ_r - (r+1)σ_{r+1}` per node for a surface (σ_3 = 0).
fn modified_norm_sq(g: &ProfileGeometry, r: usize) -> Vec<f64> {
    let (s1, sr, srp1) = (g.sigma(1), g.sigma(r), g.sigma(r + 1));
    (0..g.len()).map(|i| s1[i] * sr[i] - (r as f64 + 1.0) * srp1[i]).collect()
}

/// Max interior residual of
/// `L_{r-1}⟨X,N⟩ = -rσ_r - (σ_1σ_r - (r+1)σ_{r+1})⟨X,N⟩ - ⟨∇σ_r, X⟩`.
pub fn support_identity_residual(g: &ProfileGeometry, r: usize) -> Result<f64> {
    let support = ScalarField::new(g, g.support.clone())?;
    let lhs = lr_apply(&support, r)?.values;
    let sigma_r = ScalarField::new(g, g.sigma(r))?;
    let drift = position_dot_gradient(&sigma_r)?;
    let norm = modified_norm_sq(g, r);
    let rf = r as f64;
    Ok(max_interior(&g.profile, |i| {
        lhs[i] + rf * sigma_r.values[i] + norm[i] * g.support[i] + drift[i]
    }))
}

/// Max interior residual of `½ L_{r-1}|X|² = (n-r+1)σ_{r-1} + rσ_r⟨X,N⟩`.
pub fn position_identity_residual(g: &ProfileGeometry, r: usize) -> Result<f64> {
    let sq = ScalarField::new(g, g.position_norm_sq())?;
    let lhs = lr_apply(&sq, r)?.values;
    let (s_prev, s_r) = (g.sigma(r - 1), g.sigma(r));
    let rf = r as f64;
    Ok(max_interior(&g.profile, |i| {
        0.5 * lhs[i] - (3.0 - rf) * s_prev[i] - rf * s_r[i] * g.support[i]
    }))
}

/// Max interior residual of
/// `L_{r-1}(fg) = f L_{r-1}g + g L_{r-1}f + 2⟨P_{r-1}∇f, ∇g⟩`.
pub fn verify_product_rule(f: &ScalarField<'_>, g: &ScalarField<'_>, r: usize) -> Result<f64> {
    f.same_geometry(g)?;
    let geo = f.geometry;
    let fg = ScalarField::new(geo, f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect())?;
    let l_fg = lr_apply(&fg, r)?.values;
    let l_f = lr_apply(f, r)?.values;
    let l_g = lr_apply(g, r)?.values;
    let pair = newton_pairing(f, g, r)?;
    Ok(max_interior(&geo.profile, |i| {
        l_fg[i] - f.values[i] * l_g[i] - g.values[i] * l_f[i] - 2.0 * pair[i]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Support,
    Position,
}

impl Identity {
    pub fn name(self) -> &'static str {
        match self {
            Identity::Support => "support",
            Identity::Position => "position",
        }
    }

    pub fn residual(self, g: &ProfileGeometry, r: usize) -> Result<f64> {
        match self {
            Identity::Support => support_identity_residual(g, r),
            Identity::Position => position_identity_residual(g, r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub spacing: f64,
    pub residual: f64,
    /// Order observed against the previous row.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub identity: Identity,
    pub r: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn finest_residual(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |row| row.residual)
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|row| row.observed_order).collect()
    }

    /// Either exact to round-off at every resolution, or converging with all
    /// observed orders inside [`ORDER_BAND`].
    pub fn passed(&self) -> bool {
        if self.rows.is_empty() {
            return false;
        }
        if self.rows.iter().all(|row| row.residual <= EXACT_TOL) {
            return true;
        }
        let orders = self.orders();
        !orders.is_empty() && orders.iter().all(|p| (ORDER_BAND.0..=ORDER_BAND.1).contains(p))
    }
}

/// Profile used by the identity checks: closed models are replaced by their
/// band `|z| <= BAND_FRACTION·b`, everything else by [`HypersurfaceModel::to_profile`].
pub fn identity_profile(model: &HypersurfaceModel, nodes: usize) -> Result<(ProfileCurve, Orientation)> {
    match *model {
        HypersurfaceModel::EllipsoidRev { a, b } => {
            Ok((ProfileCurve::ellipsoid_band(a, b, BAND_FRACTION, nodes)?, Orientation::Inward))
        }
        HypersurfaceModel::Sphere { n: 2, radius } => {
            Ok((ProfileCurve::ellipsoid_band(radius, radius, BAND_FRACTION, nodes)?, Orientation::Inward))
        }
        _ => model.to_profile(nodes),
    }
}

/// Run an identity check on the model's profile at each resolution.
/// Resolutions are processed concurrently; rows keep the input order.
pub fn verify_identity(
    identity: Identity,
    model: &HypersurfaceModel,
    r: usize,
    resolutions: &[usize],
) -> Result<ConvergenceReport> {
    check_order(2, r)?;
    if model.dim() != 2 {
        return Err(Error::Domain("identity checks need a surface in R³".into()));
    }
    if resolutions.is_empty() {
        return Err(Error::Domain("no resolutions given".into()));
    }
    if matches!(model, HypersurfaceModel::Revolution { .. }) && resolutions.len() > 1 {
        return Err(Error::Domain("a sampled profile cannot be refined".into()));
    }
    let runs: Vec<Result<(f64, f64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = resolutions
            .iter()
            .map(|&res| {
                scope.spawn(move || {
                    let (profile, orientation) = identity_profile(model, res)?;
                    let g = profile.geometry(orientation);
                    Ok((profile.spacing(), identity.residual(&g, r)?))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("identity worker panicked")).collect()
    });
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(runs.len());
    for (&resolution, run) in resolutions.iter().zip(runs) {
        let (spacing, residual) = run?;
        let observed_order = rows
            .last()
            .map(|prev| (prev.residual / residual).ln() / (prev.spacing / spacing).ln())
            .filter(|p| p.is_finite());
        rows.push(ConvergenceRow { resolution, spacing, residual, observed_order });
    }
    Ok(ConvergenceReport { identity, r, rows })
}

pub fn verify_support_identity(
    model: &HypersurfaceModel,
    r: usize,
    resolutions: &[usize],
) -> Result<ConvergenceReport> {
    verify_identity(Identity::Support, model, r, resolutions)
}

pub fn verify_position_identity(
    model: &HypersurfaceModel,
    r: usize,
    resolutions: &[usize],
) -> Result<ConvergenceReport> {
    verify_identity(Identity::Position, model, r, resolutions)
}

/// Residuals of `ℒ_{r-1}σ_r + (‖√P_{r-1}A‖² - r)σ_r = 0` and
/// `½ℒ_{r-1}σ_r² = σ_r²(r - ‖√P_{r-1}A‖²) + ⟨P_{r-1}∇σ_r, ∇σ_r⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerPdeReport {
    pub linear: f64,
    pub squared: f64,
    pub shrinker_residual: f64,
}

impl ShrinkerPdeReport {
    pub fn max_residual(&self) -> f64 {
        self.linear.max(self.squared)
    }
}

/// Shrinker identities on an exact catalog model, where `σ_r` is constant
/// and both identities reduce to pointwise algebra.
pub fn verify_shrinker_pde(model: &HypersurfaceModel, r: usize) -> Result<ShrinkerPdeReport> {
    check_order(model.dim(), r)?;
    if matches!(model, HypersurfaceModel::Revolution { .. } | HypersurfaceModel::EllipsoidRev { .. }) {
        return Err(Error::Domain(
            "pointwise shrinker check needs a hyperplane, sphere or cylinder; use the discrete variant".into(),
        ));
    }
    let rf = r as f64;
    let mut report = ShrinkerPdeReport { linear: 0.0, squared: 0.0, shrinker_residual: 0.0 };
    for s in sample_points(model, MIN_RESOLUTION)? {
        let k = &s.curvatures;
        let sigma_r = k.sigma(r);
        report.shrinker_residual = report.shrinker_residual.max((sigma_r + s.support).abs());
        let norm = k.sigma(1) * sigma_r - (rf + 1.0) * k.sigma(r + 1);
        report.linear = report.linear.max(((norm - rf) * sigma_r).abs());
        report.squared = report.squared.max((sigma_r * sigma_r * (rf - norm)).abs());
    }
    if report.shrinker_residual > SHRINKER_TOL {
        return Err(Error::NotShrinker { residual: report.shrinker_residual, tolerance: SHRINKER_TOL });
    }
    Ok(report)
}

/// Shrinker identities with the discrete operators on a profile. Accuracy is
/// that of the discretization; no shrinker gate is applied.
pub fn discrete_shrinker_pde(profile: &ProfileCurve, orientation: Orientation, r: usize) -> Result<ShrinkerPdeReport> {
    check_order(2, r)?;
    let g = profile.geometry(orientation);
    let sigma = ScalarField::new(&g, g.sigma(r))?;
    let sigma_sq = ScalarField::new(&g, sigma.values.iter().map(|v| v * v).collect())?;
    let l1 = drifted_apply(&sigma, r)?.values;
    let l2 = drifted_apply(&sigma_sq, r)?.values;
    let pair = newton_pairing(&sigma, &sigma, r)?;
    let norm = modified_norm_sq(&g, r);
    let rf = r as f64;
    let s = &sigma.values;
    Ok(ShrinkerPdeReport {
        linear: max_interior(profile, |i| l1[i] + (norm[i] - rf) * s[i]),
        squared: max_interior(profile, |i| 0.5 * l2[i] - s[i] * s[i] * (rf - norm[i]) - pair[i]),
        shrinker_residual: max_interior(profile, |i| s[i] + g.support[i]),
    })
}
