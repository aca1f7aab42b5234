//! Explicit time integration of `∂X/∂t = σ_r N`.
//!
//! Geometry is carried in one of four forms: a radius for spheres `S^n`
//! (`n >= 3`) and cylinders `S^m × R^{n-m}` (`n >= 3`), whose shape is
//! preserved exactly; a closed polygon for plane curves; a meridian profile
//! for surfaces of revolution in R³ (moved along its discrete normal); and a
//! stationary hyperplane.

use serde::{Deserialize, Serialize};

use crate::catalog::{
    check_order, Boundary, EndCondition, HypersurfaceModel, Orientation, ProfileCurve, ProfileGeometry,
};
use crate::error::{Error, Result};
use crate::symfun::binomial;

pub const DEFAULT_CFL_SAFETY: f64 = 0.25;

/// A run stops as extinct once the minimum radius falls below this fraction
/// of its initial value.
pub const EXTINCTION_FRACTION: f64 = 1e-3;

/// Minimum number of polygon vertices.
pub const MIN_CURVE_VERTICES: usize = 16;

/// Edges shorter than this fraction of the curve's extent are degenerate.
const DEGENERATE_EDGE: f64 = 1e-12;

/// `R(t) = (R0^{r+1} - (r+1) C(n,r) t)^{1/(r+1)}` for a round `S^n(R0)`.
pub fn sphere_radius_exact(n: usize, r: usize, r0: f64, t: f64) -> Result<f64> {
    check_order(n, r)?;
    let extinction = extinction_time(n, r, r0)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    if t >= extinction {
        return Err(Error::Extinct { t, extinction_time: extinction });
    }
    let p = r as f64 + 1.0;
    Ok((r0.powf(p) - p * binomial(n, r) * t).powf(1.0 / p))
}

/// `R0^{r+1} / ((r+1) C(n,r))`.
pub fn extinction_time(n: usize, r: usize, r0: f64) -> Result<f64> {
    check_order(n, r)?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Domain(format!("initial radius must be positive, got {r0}")));
    }
    let p = r as f64 + 1.0;
    Ok(r0.powf(p) / (p * binomial(n, r)))
}

/// `φ(t) = (1 - (r+1)t)^{1/(r+1)}`, the scale factor of a self-shrinker.
pub fn shrinker_scale(r: usize, t: f64) -> f64 {
    let p = r as f64 + 1.0;
    (1.0 - p * t).max(0.0).powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    /// Heun's second-order Runge–Kutta method.
    #[default]
    Heun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub r: usize,
    pub model: HypersurfaceModel,
    pub t_end: f64,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Monitor the surface rescaled by `1/φ(t)` and its distance to `φ(t)X_0`.
    #[serde(default)]
    pub rescaled: bool,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    /// Redistribute polygon vertices or pole-to-pole meridian nodes by arclength
    /// every this many steps.
    #[serde(default)]
    pub resample_every: Option<usize>,
}

fn default_safety() -> f64 {
    DEFAULT_CFL_SAFETY
}

fn default_resolution() -> usize {
    256
}

fn default_stride() -> usize {
    1
}

impl FlowConfig {
    pub fn new(model: HypersurfaceModel, r: usize, t_end: f64) -> Self {
        Self {
            r,
            model,
            t_end,
            cfl_safety: DEFAULT_CFL_SAFETY,
            resolution: default_resolution(),
            rescaled: false,
            scheme: Scheme::default(),
            output_stride: 1,
            resample_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        check_order(self.model.dim(), self.r)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Domain(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if self.output_stride == 0 || self.resample_every == Some(0) {
            return Err(Error::Domain("output_stride and resample_every must be positive".into()));
        }
        if self.rescaled && self.t_end >= 1.0 / (self.r as f64 + 1.0) {
            return Err(Error::Domain(format!(
                "rescaled monitoring needs t_end < 1/(r+1) = {}",
                1.0 / (self.r as f64 + 1.0)
            )));
        }
        Ok(())
    }
}

/// Discretized geometry carried through a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowGeometry {
    /// `S^m(radius) × R^{n-m}` (`m = n` for spheres).
    Radius { n: usize, m: usize, radius: f64 },
    /// Counter-clockwise closed polygon.
    Curve { vertices: Vec<[f64; 2]> },
    Profile { profile: ProfileCurve, orientation: Orientation },
    Plane { n: usize },
}

impl FlowGeometry {
    /// Discretize a model for the flow.
    pub fn from_model(model: &HypersurfaceModel, resolution: usize) -> Result<Self> {
        model.validate()?;
        Ok(match *model {
            HypersurfaceModel::Hyperplane { n } => Self::Plane { n },
            HypersurfaceModel::Sphere { n: 1, radius } => {
                if resolution < MIN_CURVE_VERTICES {
                    return Err(Error::GridTooShort { len: resolution, min: MIN_CURVE_VERTICES });
                }
                let vertices = (0..resolution)
                    .map(|j| {
                        let a = 2.0 * std::f64::consts::PI * j as f64 / resolution as f64;
                        [radius * a.cos(), radius * a.sin()]
                    })
                    .collect();
                Self::Curve { vertices }
            }
            HypersurfaceModel::Sphere { n, radius } if n >= 3 => Self::Radius { n, m: n, radius },
            HypersurfaceModel::Cylinder { n, m, radius } if n >= 3 => Self::Radius { n, m, radius },
            _ => {
                let (profile, orientation) = model.to_profile(resolution)?;
                Self::Profile { profile, orientation }
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Radius { n, .. } | Self::Plane { n } => *n,
            Self::Curve { .. } => 1,
            Self::Profile { .. } => 2,
        }
    }

    fn coords(&self) -> Vec<f64> {
        match self {
            Self::Radius { radius, .. } => vec![*radius],
            Self::Curve { vertices } => vertices.iter().flatten().copied().collect(),
            Self::Profile { profile, .. } => profile.rho().iter().chain(profile.z()).copied().collect(),
            Self::Plane { .. } => Vec::new(),
        }
    }

    fn with_coords(&self, c: Vec<f64>, t: f64) -> Result<Self> {
        if let Some(bad) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical { t, message: format!("non-finite coordinate at index {bad}") });
        }
        Ok(match self {
            Self::Radius { n, m, .. } => {
                if c[0] <= 0.0 {
                    return Err(Error::Pinch { t, node: 0, radius: c[0] });
                }
                Self::Radius { n: *n, m: *m, radius: c[0] }
            }
            Self::Curve { .. } => Self::Curve { vertices: c.chunks(2).map(|p| [p[0], p[1]]).collect() },
            Self::Profile { profile, orientation } => {
                let len = profile.len();
                if let Some((node, &radius)) = c[..len].iter().enumerate().find(|(_, v)| **v <= 0.0) {
                    return Err(Error::Pinch { t, node, radius });
                }
                Self::Profile {
                    profile: profile.with_nodes(c[..len].to_vec(), c[len..].to_vec())?,
                    orientation: *orientation,
                }
            }
            Self::Plane { n } => Self::Plane { n: *n },
        })
    }

    /// Velocity `σ_r N` in the layout of `coords`.
    fn velocity(&self, r: usize) -> Result<Vec<f64>> {
        Ok(match self {
            Self::Radius { m, radius, .. } => vec![-binomial(*m, r) / radius.powi(r as i32)],
            Self::Curve { vertices } => {
                curve_frames(vertices)?.into_iter().flat_map(|f| f.curvature_vector).collect()
            }
            Self::Profile { profile, orientation } => {
                let g = profile.geometry(*orientation);
                let sigma = g.sigma(r);
                let mut v: Vec<f64> = sigma.iter().zip(&g.normal_rho).map(|(s, n)| s * n).collect();
                v.extend(sigma.iter().zip(&g.normal_z).map(|(s, n)| s * n));
                v
            }
            Self::Plane { .. } => Vec::new(),
        })
    }

    /// Largest stable step `h² / (1 + max Σ_j σ_{r-1}(A_j))`, with `h` the
    /// smallest edge (for radius models, the edge of a `resolution`-gon on
    /// the spherical factor).
    pub fn stability_limit(&self, r: usize, resolution: usize) -> Result<f64> {
        match self {
            Self::Radius { n, m, radius } => {
                let h = 2.0 * std::f64::consts::PI * radius / resolution as f64;
                // Σ_j σ_{r-1}(A_j) = (n-r+1)σ_{r-1}
                let trace = (n + 1 - r) as f64 * binomial(*m, r - 1) / radius.powi(r as i32 - 1);
                Ok(h * h / (1.0 + trace))
            }
            Self::Curve { vertices } => {
                let h = curve_frames(vertices)?.iter().map(|f| f.edge_next).fold(f64::INFINITY, f64::min);
                Ok(h * h / 2.0)
            }
            Self::Profile { profile, orientation } => {
                let g = profile.geometry(*orientation);
                let h = g.min_edge();
                let trace = match r {
                    1 => 2.0,
                    _ => g.sigma(1).iter().map(|s| s.abs()).fold(0.0, f64::max),
                };
                Ok(h * h / (1.0 + trace))
            }
            Self::Plane { .. } => Ok(f64::INFINITY),
        }
    }

    /// Per-point `(σ_r, ⟨X,N⟩)`.
    fn shrinker_data(&self, r: usize) -> Result<Vec<(f64, f64)>> {
        Ok(match self {
            Self::Radius { m, radius, .. } => vec![(binomial(*m, r) / radius.powi(r as i32), -radius)],
            Self::Curve { vertices } => curve_frames(vertices)?
                .iter()
                .zip(vertices)
                .map(|(f, x)| {
                    let sigma = f.curvature_vector[0] * f.normal[0] + f.curvature_vector[1] * f.normal[1];
                    (sigma, x[0] * f.normal[0] + x[1] * f.normal[1])
                })
                .collect(),
            Self::Profile { profile, orientation } => {
                let g: ProfileGeometry = profile.geometry(*orientation);
                g.sigma(r).into_iter().zip(g.support.iter().copied()).collect()
            }
            Self::Plane { .. } => vec![(0.0, 0.0)],
        })
    }

    /// Smallest distance of a point to the origin (the spherical-factor radius
    /// for radius models).
    pub fn min_radius(&self) -> f64 {
        match self {
            Self::Radius { radius, .. } => *radius,
            Self::Curve { vertices } => vertices.iter().map(|p| p[0].hypot(p[1])).fold(f64::INFINITY, f64::min),
            Self::Profile { profile, .. } => profile
                .rho()
                .iter()
                .zip(profile.z())
                .map(|(r, z)| r.hypot(*z))
                .fold(f64::INFINITY, f64::min),
            Self::Plane { .. } => 0.0,
        }
    }

    /// Point positions used for homothety comparison.
    fn points(&self) -> Vec<f64> {
        self.coords()
    }

    /// Centroid of polygon vertices.
    pub fn vertex_centroid(&self) -> Option<[f64; 2]> {
        match self {
            Self::Curve { vertices } => {
                let m = vertices.len() as f64;
                let (x, y) = vertices.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
                Some([x / m, y / m])
            }
            _ => None,
        }
    }
}

struct CurveFrame {
    curvature_vector: [f64; 2],
    normal: [f64; 2],
    edge_next: f64,
}

/// Discrete curvature vector `2(t_next - t_prev)/(|e_prev| + |e_next|)` and
/// left (inward for counter-clockwise curves) unit normal at each vertex.
fn curve_frames(vertices: &[[f64; 2]]) -> Result<Vec<CurveFrame>> {
    let m = vertices.len();
    let extent = vertices
        .iter()
        .map(|p| (p[0] - vertices[0][0]).hypot(p[1] - vertices[0][1]))
        .fold(0.0, f64::max);
    let edge = |i: usize| {
        let (a, b) = (vertices[i], vertices[(i + 1) % m]);
        let d = [b[0] - a[0], b[1] - a[1]];
        (d, d[0].hypot(d[1]))
    };
    let edges: Vec<([f64; 2], f64)> = (0..m).map(edge).collect();
    if let Some((vertex, e)) = edges.iter().enumerate().find(|(_, e)| e.1 <= DEGENERATE_EDGE * extent) {
        return Err(Error::DegenerateEdge { vertex, length: e.1 });
    }
    Ok((0..m)
        .map(|i| {
            let (dp, lp) = edges[(i + m - 1) % m];
            let (dn, ln) = edges[i];
            let tp = [dp[0] / lp, dp[1] / lp];
            let tn = [dn[0] / ln, dn[1] / ln];
            let w = 2.0 / (lp + ln);
            let tangent = [tp[0] + tn[0], tp[1] + tn[1]];
            let tl = tangent[0].hypot(tangent[1]);
            CurveFrame {
                curvature_vector: [w * (tn[0] - tp[0]), w * (tn[1] - tp[1])],
                normal: [-tangent[1] / tl, tangent[0] / tl],
                edge_next: ln,
            }
        })
        .collect())
}

/// Redistribute vertices uniformly in arclength, keeping vertex 0.
fn resample_curve(vertices: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let m = vertices.len();
    let mut cumulative = Vec::with_capacity(m + 1);
    cumulative.push(0.0);
    for i in 0..m {
        let (a, b) = (vertices[i], vertices[(i + 1) % m]);
        cumulative.push(cumulative[i] + (b[0] - a[0]).hypot(b[1] - a[1]));
    }
    let total = cumulative[m];
    let mut seg = 0;
    (0..m)
        .map(|k| {
            let s = total * k as f64 / m as f64;
            while cumulative[seg + 1] < s {
                seg += 1;
            }
            let (a, b) = (vertices[seg], vertices[(seg + 1) % m]);
            let len = cumulative[seg + 1] - cumulative[seg];
            let w = if len > 0.0 { (s - cumulative[seg]) / len } else { 0.0 };
            [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
        })
        .collect()
}

/// Redistribute the nodes of a pole-to-pole meridian uniformly in arclength
/// by cubic Hermite interpolation in the chord parameter. `None` for other
/// boundaries.
fn resample_profile(profile: &ProfileCurve) -> Result<Option<ProfileCurve>> {
    let axis = EndCondition::Axis;
    if profile.boundary() != (Boundary::Ends { start: axis, end: axis }) {
        return Ok(None);
    }
    let (rho, z) = (profile.rho(), profile.z());
    let m = rho.len();
    // Poles by cubic interpolation across the axis-reflected ghosts.
    let mut pts = Vec::with_capacity(m + 4);
    pts.push([-rho[0], z[0]]);
    pts.push([0.0, (9.0 * z[0] - z[1]) / 8.0]);
    pts.extend((0..m).map(|i| [rho[i], z[i]]));
    pts.push([0.0, (9.0 * z[m - 1] - z[m - 2]) / 8.0]);
    pts.push([-rho[m - 1], z[m - 1]]);

    let mut s = vec![0.0; pts.len()];
    for k in 1..pts.len() {
        s[k] = s[k - 1] + (pts[k][0] - pts[k - 1][0]).hypot(pts[k][1] - pts[k - 1][1]);
    }
    let tangent = |k: usize| -> [f64; 2] {
        let w = s[k + 1] - s[k - 1];
        [(pts[k + 1][0] - pts[k - 1][0]) / w, (pts[k + 1][1] - pts[k - 1][1]) / w]
    };
    let (s0, total) = (s[1], s[m + 2] - s[1]);
    let mut seg = 1;
    let mut new_rho = Vec::with_capacity(m);
    let mut new_z = Vec::with_capacity(m);
    for i in 0..m {
        let target = s0 + total * (i as f64 + 0.5) / m as f64;
        while s[seg + 1] < target {
            seg += 1;
        }
        let len = s[seg + 1] - s[seg];
        if len <= 0.0 {
            return Err(Error::DegenerateEdge { vertex: seg, length: len });
        }
        let u = (target - s[seg]) / len;
        let (h00, h10) = (2.0 * u.powi(3) - 3.0 * u * u + 1.0, u.powi(3) - 2.0 * u * u + u);
        let (h01, h11) = (-2.0 * u.powi(3) + 3.0 * u * u, u.powi(3) - u * u);
        let (ta, tb) = (tangent(seg), tangent(seg + 1));
        let (a, b) = (pts[seg], pts[seg + 1]);
        let c: Vec<f64> = (0..2).map(|d| h00 * a[d] + h10 * len * ta[d] + h01 * b[d] + h11 * len * tb[d]).collect();
        new_rho.push(c[0]);
        new_z.push(c[1]);
    }
    profile.with_nodes(new_rho, new_z).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub geometry: FlowGeometry,
    pub step_count: usize,
}

impl FlowState {
    pub fn new(geometry: FlowGeometry) -> Self {
        Self { t: 0.0, geometry, step_count: 0 }
    }
}

/// Advance by one explicit step. Fails if `dt` exceeds the stability limit.
pub fn step(state: &FlowState, r: usize, dt: f64, scheme: Scheme, resolution: usize) -> Result<FlowState> {
    check_order(state.geometry.dim(), r)?;
    let limit = state.geometry.stability_limit(r, resolution)?;
    if dt.is_nan() || dt <= 0.0 || dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    let t = state.t;
    let x0 = state.geometry.coords();
    let v0 = state.geometry.velocity(r)?;
    let predictor: Vec<f64> = x0.iter().zip(&v0).map(|(x, v)| x + dt * v).collect();
    let coords = match scheme {
        Scheme::Euler => predictor,
        Scheme::Heun => {
            let mid = state.geometry.with_coords(predictor, t + dt)?;
            let v1 = mid.velocity(r)?;
            x0.iter().zip(v0.iter().zip(&v1)).map(|(x, (a, b))| x + 0.5 * dt * (a + b)).collect()
        }
    };
    Ok(FlowState {
        t: t + dt,
        geometry: state.geometry.with_coords(coords, t + dt)?,
        step_count: state.step_count + 1,
    })
}

/// Curve-shortening step (`n = r = 1`).
pub fn step_curve(state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    match &state.geometry {
        FlowGeometry::Curve { vertices } => step(state, 1, dt, scheme, vertices.len()),
        _ => Err(Error::Domain("step_curve needs a polygon".into())),
    }
}

/// Step for a surface of revolution, `r ∈ {1, 2}`.
pub fn step_revolution(state: &FlowState, r: usize, dt: f64, scheme: Scheme) -> Result<FlowState> {
    match &state.geometry {
        FlowGeometry::Profile { profile, .. } => step(state, r, dt, scheme, profile.len()),
        _ => Err(Error::Domain("step_revolution needs a meridian profile".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    /// `sup |σ_r + ⟨X, N⟩|`, on the rescaled surface `X/φ(t)` when rescaled
    /// monitoring is on.
    pub max_residual: f64,
    /// `sup |X - φ(t) X_0|`, only with rescaled monitoring.
    pub homothety_defect: Option<f64>,
    pub min_radius: f64,
    /// Step taken to reach `t` (0 for the initial record).
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FlowStatus {
    Completed,
    Extinct { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRun {
    pub status: FlowStatus,
    pub diagnostics: Vec<Diagnostics>,
    pub final_state: FlowState,
    pub resample_count: usize,
}

fn diagnose(
    state: &FlowState,
    config: &FlowConfig,
    initial_points: &[f64],
    dt: f64,
) -> Result<Diagnostics> {
    let r = config.r;
    let phi = if config.rescaled { shrinker_scale(r, state.t) } else { 1.0 };
    let max_residual = state
        .geometry
        .shrinker_data(r)?
        .iter()
        .map(|(sigma, support)| (phi.powi(r as i32) * sigma + support / phi).abs())
        .fold(0.0, f64::max);
    let homothety_defect = config.rescaled.then(|| {
        let points = state.geometry.points();
        let stride = match state.geometry {
            FlowGeometry::Curve { .. } => 2,
            _ => 1,
        };
        homothety_distance(&state.geometry, &points, initial_points, phi, stride)
    });
    Ok(Diagnostics { t: state.t, max_residual, homothety_defect, min_radius: state.geometry.min_radius(), dt })
}

fn homothety_distance(geometry: &FlowGeometry, points: &[f64], initial: &[f64], phi: f64, stride: usize) -> f64 {
    match geometry {
        FlowGeometry::Profile { profile, .. } => {
            let m = profile.len();
            (0..m)
                .map(|i| (points[i] - phi * initial[i]).hypot(points[m + i] - phi * initial[m + i]))
                .fold(0.0, f64::max)
        }
        _ => points
            .chunks(stride)
            .zip(initial.chunks(stride))
            .map(|(p, q)| p.iter().zip(q).map(|(a, b)| (a - phi * b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max),
    }
}

/// Integrate until `t_end` or extinction. Deterministic for a fixed config.
pub fn run(config: &FlowConfig) -> Result<FlowRun> {
    config.validate()?;
    let geometry = FlowGeometry::from_model(&config.model, config.resolution)?;
    let resolution = match &geometry {
        FlowGeometry::Curve { vertices } => vertices.len(),
        FlowGeometry::Profile { profile, .. } => profile.len(),
        _ => config.resolution,
    };
    let mut state = FlowState::new(geometry);
    let initial_points = state.geometry.points();
    let initial_radius = state.geometry.min_radius();
    let mut diagnostics = vec![diagnose(&state, config, &initial_points, 0.0)?];
    let mut resample_count = 0;

    if matches!(state.geometry, FlowGeometry::Plane { .. }) {
        state.t = config.t_end;
        diagnostics.push(diagnose(&state, config, &initial_points, config.t_end)?);
        return Ok(FlowRun { status: FlowStatus::Completed, diagnostics, final_state: state, resample_count });
    }

    let end_tol = 1e-12 * config.t_end;
    let status = loop {
        if state.t >= config.t_end - end_tol {
            break FlowStatus::Completed;
        }
        let limit = state.geometry.stability_limit(config.r, resolution)?;
        let dt = (config.cfl_safety * limit).min(config.t_end - state.t);
        state = step(&state, config.r, dt, config.scheme, resolution)?;
        if config.resample_every.is_some_and(|k| state.step_count.is_multiple_of(k)) {
            match &mut state.geometry {
                FlowGeometry::Curve { vertices } => {
                    *vertices = resample_curve(vertices);
                    resample_count += 1;
                }
                FlowGeometry::Profile { profile, .. } => {
                    if let Some(p) = resample_profile(profile)? {
                        *profile = p;
                        resample_count += 1;
                    }
                }
                _ => {}
            }
        }
        let extinct = state.geometry.min_radius() < EXTINCTION_FRACTION * initial_radius;
        let done = state.t >= config.t_end - end_tol;
        if extinct || done || state.step_count.is_multiple_of(config.output_stride) {
            diagnostics.push(diagnose(&state, config, &initial_points, dt)?);
        }
        if extinct {
            break FlowStatus::Extinct { t: state.t };
        }
    };
    Ok(FlowRun { status, diagnostics, final_state: state, resample_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::shrinker_radius;

    fn last(run: &FlowRun) -> Diagnostics {
        *run.diagnostics.last().unwrap()
    }

    #[test]
    fn exact_sphere_law() {
        assert!((sphere_radius_exact(2, 1, 2.0, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sphere_radius_exact(3, 2, 1.7, 0.0).unwrap(), 1.7);
        for n in 1..=5 {
            for r in 1..=n {
                let r0 = shrinker_radius(n, r).unwrap();
                let t = 0.3 / (r as f64 + 1.0);
                let ratio = sphere_radius_exact(n, r, r0, t).unwrap() / r0;
                assert!((ratio - shrinker_scale(r, t)).abs() < 1e-14);
                assert!((extinction_time(n, r, r0).unwrap() - 1.0 / (r as f64 + 1.0)).abs() < 1e-14);
            }
        }
        assert!(matches!(sphere_radius_exact(1, 1, 1.0, 0.5), Err(Error::Extinct { .. })));
    }

    #[test]
    fn extinction_times() {
        assert_eq!(extinction_time(1, 1, 1.0).unwrap(), 0.5);
        assert!((extinction_time(2, 2, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(extinction_time(2, 3, 1.0).is_err());
    }

    #[test]
    fn circle_follows_area_law() {
        let config = FlowConfig { output_stride: 1000, ..FlowConfig::new(HypersurfaceModel::sphere(1, 1.0).unwrap(), 1, 0.25) };
        let run = run(&config).unwrap();
        assert_eq!(run.status, FlowStatus::Completed);
        assert!((last(&run).min_radius - 0.5f64.sqrt()).abs() < 1e-3);
        let c = run.final_state.geometry.vertex_centroid().unwrap();
        assert!(c[0].abs() < 1e-10 && c[1].abs() < 1e-10);
    }

    #[test]
    fn unit_circle_is_a_shrinker() {
        let config = FlowConfig {
            rescaled: true,
            resolution: 128,
            output_stride: 200,
            ..FlowConfig::new(HypersurfaceModel::sphere(1, 1.0).unwrap(), 1, 0.4)
        };
        let run = run(&config).unwrap();
        for d in &run.diagnostics {
            assert!(d.max_residual < 1e-3, "{d:?}");
        }
    }

    #[test]
    fn cylinder_profile_r2_is_stationary() {
        let model = HypersurfaceModel::cylinder(2, 1, 1.3).unwrap();
        let config = FlowConfig { resolution: 64, ..FlowConfig::new(model, 2, 0.05) };
        let run = run(&config).unwrap();
        match &run.final_state.geometry {
            FlowGeometry::Profile { profile, .. } => assert!(profile.rho().iter().all(|r| (r - 1.3).abs() < 1e-12)),
            g => panic!("unexpected geometry {g:?}"),
        }
    }

    #[test]
    fn cylinder_profile_r1_shrinks() {
        let model = HypersurfaceModel::cylinder(2, 1, 1.0).unwrap();
        let config = FlowConfig { resolution: 64, output_stride: 1000, ..FlowConfig::new(model, 1, 0.3) };
        let run = run(&config).unwrap();
        match &run.final_state.geometry {
            FlowGeometry::Profile { profile, .. } => {
                let exact = (1.0f64 - 2.0 * 0.3).sqrt();
                assert!(profile.rho().iter().all(|r| (r - exact).abs() < 1e-6));
            }
            g => panic!("unexpected geometry {g:?}"),
        }
    }

    #[test]
    fn radius_models() {
        let model = HypersurfaceModel::sphere(4, 2.0).unwrap();
        let config = FlowConfig { output_stride: 10_000, ..FlowConfig::new(model, 2, 0.3) };
        let run = run(&config).unwrap();
        let exact = sphere_radius_exact(4, 2, 2.0, 0.3).unwrap();
        assert!((last(&run).min_radius - exact).abs() < 1e-6);

        let thin = HypersurfaceModel::cylinder(4, 1, 1.0).unwrap();
        let run = super::run(&FlowConfig::new(thin, 2, 0.1)).unwrap();
        assert_eq!(last(&run).min_radius, 1.0);
    }

    #[test]
    fn gauss_flow_unit_sphere_residual() {
        let model = HypersurfaceModel::sphere(2, 1.0).unwrap();
        let config = FlowConfig { rescaled: true, resolution: 64, ..FlowConfig::new(model, 2, 0.01) };
        let run = run(&config).unwrap();
        assert!(run.diagnostics[0].max_residual < 1e-3);
    }

    #[test]
    fn hyperplane_is_stationary() {
        let run = run(&FlowConfig::new(HypersurfaceModel::hyperplane(3).unwrap(), 2, 1.0)).unwrap();
        for d in &run.diagnostics {
            assert_eq!((d.max_residual, d.min_radius), (0.0, 0.0));
        }
    }

    #[test]
    fn extinction_is_detected() {
        let model = HypersurfaceModel::sphere(3, 1.0).unwrap();
        let config = FlowConfig { output_stride: 100_000, ..FlowConfig::new(model, 1, 1.0) };
        let run = run(&config).unwrap();
        match run.status {
            FlowStatus::Extinct { t } => assert!((t - 1.0 / 6.0).abs() < 1e-3),
            s => panic!("expected extinction, got {s:?}"),
        }
    }

    #[test]
    fn oversize_step_is_rejected() {
        let g = FlowGeometry::from_model(&HypersurfaceModel::sphere(1, 1.0).unwrap(), 32).unwrap();
        let state = FlowState::new(g);
        assert!(matches!(step_curve(&state, 1.0, Scheme::Euler), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn degenerate_polygon_is_rejected() {
        let mut vertices: Vec<[f64; 2]> = (0..16)
            .map(|j| {
                let a = j as f64 * std::f64::consts::PI / 8.0;
                [a.cos(), a.sin()]
            })
            .collect();
        vertices[3] = vertices[2];
        let state = FlowState::new(FlowGeometry::Curve { vertices });
        assert!(matches!(step_curve(&state, 1e-6, Scheme::Euler), Err(Error::DegenerateEdge { vertex: 2, .. })));
    }

    #[test]
    fn resampling_keeps_a_circle() {
        let model = HypersurfaceModel::sphere(1, 1.0).unwrap();
        let config = FlowConfig { resample_every: Some(50), resolution: 64, ..FlowConfig::new(model, 1, 0.1) };
        let run = run(&config).unwrap();
        assert!(run.resample_count > 0);
        assert!((last(&run).min_radius - 0.8f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn profile_resampling_is_near_identity_on_a_sphere() {
        let profile = ProfileCurve::sphere(1.5, 64).unwrap();
        let moved = resample_profile(&profile).unwrap().unwrap();
        for i in 0..64 {
            let d = (moved.rho()[i] - profile.rho()[i]).hypot(moved.z()[i] - profile.z()[i]);
            assert!(d < 1e-4, "node {i} moved {d}");
            assert!((moved.rho()[i].hypot(moved.z()[i]) - 1.5).abs() < 1e-6);
        }
        let open = ProfileCurve::cylinder(1.0, 2.0, 32).unwrap();
        assert!(resample_profile(&open).unwrap().is_none());
    }

    #[test]
    fn resampled_ellipsoid_keeps_its_step() {
        let model = HypersurfaceModel::ellipsoid(1.0, 2.0).unwrap();
        let base = FlowConfig { resolution: 64, output_stride: 100, ..FlowConfig::new(model, 1, 0.2) };
        let plain = run(&base).unwrap();
        let resampled = run(&FlowConfig { resample_every: Some(20), ..base }).unwrap();
        assert!(resampled.resample_count > 0);
        assert!(resampled.final_state.step_count < plain.final_state.step_count);
        let a = last(&plain).min_radius;
        let b = last(&resampled).min_radius;
        assert!((a - b).abs() < 2e-3, "{a} vs {b}");
    }

    #[test]
    fn invalid_configs() {
        let model = HypersurfaceModel::sphere(2, 1.0).unwrap();
        assert!(FlowConfig::new(model.clone(), 3, 1.0).validate().is_err());
        assert!(FlowConfig::new(model.clone(), 1, -1.0).validate().is_err());
        let c = FlowConfig { rescaled: true, ..FlowConfig::new(model, 1, 0.6) };
        assert!(c.validate().is_err());
    }
}
