//! Model hypersurfaces: hyperplanes, round spheres, generalized cylinders
//! `S^m(R) × R^{n-m}`, and surfaces of revolution in R³.
//!
//! Closed models carry the inward unit normal, so spheres and cylinders have
//! nonnegative principal curvatures and support function `⟨X, N⟩ = -R`.
//! Hyperplanes are `{x_{n+1} = 0}` with normal `e_{n+1}`.

mod profile;

pub use profile::{Boundary, EndCondition, Orientation, ProfileCurve, ProfileGeometry, MIN_NODES};
pub(crate) use profile::Parity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symfun::{binomial, CurvatureVector};

/// Absolute tolerance for "point lies on the model".
pub const ON_MODEL_TOL: f64 = 1e-9;

/// Smallest accepted sampling resolution.
pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HypersurfaceModel {
    Hyperplane {
        n: usize,
    },
    Sphere {
        n: usize,
        radius: f64,
    },
    Cylinder {
        n: usize,
        m: usize,
        radius: f64,
    },
    /// Surface of revolution in R³ (`n = 2`).
    Revolution {
        profile: ProfileCurve,
        #[serde(default)]
        orientation: Orientation,
    },
    /// Ellipsoid `(x² + y²)/a² + z²/b² = 1`.
    EllipsoidRev {
        a: f64,
        b: f64,
    },
}

impl HypersurfaceModel {
    pub fn hyperplane(n: usize) -> Result<Self> {
        Self::Hyperplane { n }.validated()
    }

    pub fn sphere(n: usize, radius: f64) -> Result<Self> {
        Self::Sphere { n, radius }.validated()
    }

    pub fn cylinder(n: usize, m: usize, radius: f64) -> Result<Self> {
        Self::Cylinder { n, m, radius }.validated()
    }

    pub fn revolution(profile: ProfileCurve, orientation: Orientation) -> Self {
        Self::Revolution { profile, orientation }
    }

    pub fn ellipsoid(a: f64, b: f64) -> Result<Self> {
        Self::EllipsoidRev { a, b }.validated()
    }

    /// `S^n(δ_n(r))`.
    pub fn shrinker_sphere(n: usize, r: usize) -> Result<Self> {
        Self::sphere(n, shrinker_radius(n, r)?)
    }

    /// `S^m(δ_m(r)) × R^{n-m}`.
    pub fn shrinker_cylinder(n: usize, m: usize, r: usize) -> Result<Self> {
        Self::cylinder(n, m, shrinker_radius(m, r)?)
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            Self::Hyperplane { n } => check_dim(n),
            Self::Sphere { n, radius } => {
                check_dim(n)?;
                positive("radius", radius)
            }
            Self::Cylinder { n, m, radius } => {
                check_dim(n)?;
                if m == 0 || m >= n {
                    return Err(Error::Domain(format!(
                        "cylinder factor dimension m={m} must satisfy 1 <= m <= n-1 (n={n})"
                    )));
                }
                positive("radius", radius)
            }
            Self::Revolution { .. } => Ok(()),
            Self::EllipsoidRev { a, b } => {
                positive("a", a)?;
                positive("b", b)
            }
        }
    }

    /// Dimension `n` of the hypersurface.
    pub fn dim(&self) -> usize {
        match *self {
            Self::Hyperplane { n } | Self::Sphere { n, .. } | Self::Cylinder { n, .. } => n,
            Self::Revolution { .. } | Self::EllipsoidRev { .. } => 2,
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, Self::Sphere { .. } | Self::EllipsoidRev { .. })
    }

    /// Meridian profile of a rotationally symmetric model in R³ with `nodes`
    /// grid points. Hyperplanes become a flat disk of radius 2, cylinders one
    /// period over `[-2R, 2R)`.
    pub fn to_profile(&self, nodes: usize) -> Result<(ProfileCurve, Orientation)> {
        if self.dim() != 2 {
            return Err(Error::Domain(format!(
                "only two-dimensional models have a meridian profile (n={})",
                self.dim()
            )));
        }
        match self {
            Self::Hyperplane { .. } => Ok((ProfileCurve::flat_disk(2.0, nodes)?, Orientation::Inward)),
            Self::Sphere { radius, .. } => Ok((ProfileCurve::sphere(*radius, nodes)?, Orientation::Inward)),
            Self::Cylinder { radius, .. } => {
                Ok((ProfileCurve::cylinder(*radius, 2.0 * radius, nodes)?, Orientation::Inward))
            }
            Self::Revolution { profile, orientation } => Ok((profile.clone(), *orientation)),
            Self::EllipsoidRev { a, b } => Ok((ProfileCurve::ellipsoid(*a, *b, nodes)?, Orientation::Inward)),
        }
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("dimension n must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// A location on a model: an ambient point, or a grid node of a
/// surface of revolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPoint {
    Position(Vec<f64>),
    Node(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub position: Vec<f64>,
    pub curvatures: CurvatureVector,
    pub support: f64,
}

/// `δ_m(r) = C(m, r)^{1/(r+1)}`.
pub fn shrinker_radius(m: usize, r: usize) -> Result<f64> {
    if r == 0 || r > m {
        return Err(Error::Domain(format!(
            "no self-shrinking S^{m} factor for r={r}: need 1 <= r <= m"
        )));
    }
    Ok(binomial(m, r).powf(1.0 / (r as f64 + 1.0)))
}

/// `σ_p` of the shrinking cylinder `S^m(δ_m(r)) × R^{n-m}` in closed form.
pub fn sigma_p_cylinder(m: usize, r: usize, p: usize) -> Result<f64> {
    shrinker_radius(m, r)?;
    Ok(binomial(m, p) * binomial(m, r).powf(-(p as f64) / (r as f64 + 1.0)))
}

pub fn principal_curvatures(model: &HypersurfaceModel, point: &ModelPoint) -> Result<CurvatureVector> {
    Ok(locate(model, point)?.curvatures)
}

pub fn support_function(model: &HypersurfaceModel, point: &ModelPoint) -> Result<f64> {
    Ok(locate(model, point)?.support)
}

/// `σ_r + ⟨X, N⟩`, zero exactly where the self-shrinker equation holds.
pub fn shrinker_residual(model: &HypersurfaceModel, r: usize, point: &ModelPoint) -> Result<f64> {
    check_order(model.dim(), r)?;
    let s = locate(model, point)?;
    Ok(s.curvatures.sigma(r) + s.support)
}

pub(crate) fn check_order(n: usize, r: usize) -> Result<()> {
    if r == 0 || r > n {
        Err(Error::Domain(format!("order r={r} outside 1..={n}")))
    } else {
        Ok(())
    }
}

fn locate(model: &HypersurfaceModel, point: &ModelPoint) -> Result<PointSample> {
    model.validate()?;
    let n = model.dim();
    match (model, point) {
        (HypersurfaceModel::Revolution { profile, orientation }, ModelPoint::Node(i)) => {
            if *i >= profile.len() {
                return Err(Error::IndexOutOfRange { index: *i, len: profile.len() });
            }
            Ok(node_sample(&profile.geometry(*orientation), *i))
        }
        (HypersurfaceModel::Revolution { .. }, ModelPoint::Position(_)) => Err(Error::Domain(
            "points on a sampled surface of revolution are addressed by grid node".into(),
        )),
        (_, ModelPoint::Node(_)) => Err(Error::Domain("grid nodes only address surfaces of revolution".into())),
        (_, ModelPoint::Position(x)) => {
            if x.len() != n + 1 {
                return Err(Error::Domain(format!(
                    "point has {} coordinates, model lives in R^{}",
                    x.len(),
                    n + 1
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("point has non-finite coordinates".into()));
            }
            exact_sample(model, x)
        }
    }
}

fn exact_sample(model: &HypersurfaceModel, x: &[f64]) -> Result<PointSample> {
    let on_model = |distance: f64| {
        if distance.abs() <= ON_MODEL_TOL {
            Ok(())
        } else {
            Err(Error::OffModel { distance: distance.abs() })
        }
    };
    let (curvatures, support) = match *model {
        HypersurfaceModel::Hyperplane { n } => {
            on_model(x[n])?;
            (vec![0.0; n], 0.0)
        }
        HypersurfaceModel::Sphere { n, radius } => {
            on_model(norm(x) - radius)?;
            (vec![1.0 / radius; n], -radius)
        }
        HypersurfaceModel::Cylinder { n, m, radius } => {
            on_model(norm(&x[..=m]) - radius)?;
            let mut k = vec![1.0 / radius; m];
            k.resize(n, 0.0);
            (k, -radius)
        }
        HypersurfaceModel::EllipsoidRev { a, b } => {
            let rho = x[0].hypot(x[1]);
            let z = x[2];
            let level = (rho / a).hypot(z / b);
            on_model((level - 1.0) * a.min(b))?;
            let u = (rho / a).atan2(-z / b);
            let [k_mer, k_par, support] = ellipsoid_invariants(a, b, u);
            (vec![k_mer, k_par], support)
        }
        HypersurfaceModel::Revolution { .. } => unreachable!("handled by locate"),
    };
    Ok(PointSample { position: x.to_vec(), curvatures: CurvatureVector::new(curvatures)?, support })
}

/// Meridian curvature, parallel curvature and support function of the
/// ellipsoid at meridian parameter `u` (`ρ = a sin u`, `z = -b cos u`).
fn ellipsoid_invariants(a: f64, b: f64, u: f64) -> [f64; 3] {
    let g = (a * u.cos()).powi(2) + (b * u.sin()).powi(2);
    let sg = g.sqrt();
    [a * b / (g * sg), b / (a * sg), -a * b / sg]
}

fn node_sample(geometry: &ProfileGeometry, i: usize) -> PointSample {
    let p = &geometry.profile;
    PointSample {
        position: vec![p.rho()[i], 0.0, p.z()[i]],
        curvatures: CurvatureVector::new(geometry.curvatures(i).to_vec())
            .expect("finite curvatures on a validated profile"),
        support: geometry.support[i],
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Knobs for [`sample_points_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingOptions {
    /// Half-extent `L` of the axial box `[-L, L]` for cylinders and
    /// hyperplanes, as a multiple of the radius (hyperplanes use 1).
    #[serde(default = "default_axial_factor")]
    pub axial_factor: f64,
}

fn default_axial_factor() -> f64 {
    2.0
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self { axial_factor: default_axial_factor() }
    }
}

pub fn sample_points(model: &HypersurfaceModel, resolution: usize) -> Result<Vec<PointSample>> {
    sample_points_with(model, resolution, &SamplingOptions::default())
}

/// Deterministic samples with curvature and support data.
///
/// Spheres use a `resolution × resolution` angular grid (`resolution` points
/// on a circle), cylinders an angular grid times `resolution` axial stations,
/// surfaces of revolution every grid node (ellipsoids are discretized with
/// `resolution` nodes first).
pub fn sample_points_with(
    model: &HypersurfaceModel,
    resolution: usize,
    options: &SamplingOptions,
) -> Result<Vec<PointSample>> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::Domain(format!(
            "sampling resolution {resolution} below minimum {MIN_RESOLUTION}"
        )));
    }
    model.validate()?;
    match model {
        HypersurfaceModel::Revolution { profile, orientation } => {
            let g = profile.geometry(*orientation);
            Ok((0..g.len()).map(|i| node_sample(&g, i)).collect())
        }
        HypersurfaceModel::EllipsoidRev { .. } => {
            let (profile, orientation) = model.to_profile(resolution)?;
            let g = profile.geometry(orientation);
            Ok((0..g.len()).map(|i| node_sample(&g, i)).collect())
        }
        HypersurfaceModel::Hyperplane { n } => {
            axial_stations(*n, resolution, options.axial_factor)
                .into_iter()
                .map(|mut x| {
                    x.push(0.0);
                    exact_sample(model, &x)
                })
                .collect()
        }
        HypersurfaceModel::Sphere { n, radius } => sphere_directions(*n, resolution)
            .into_iter()
            .map(|d| exact_sample(model, &d.iter().map(|v| radius * v).collect::<Vec<_>>()))
            .collect(),
        HypersurfaceModel::Cylinder { n, m, radius } => {
            let half = options.axial_factor * radius;
            let axial = axial_stations(n - m, resolution, half);
            let mut out = Vec::new();
            for d in sphere_directions(*m, resolution) {
                for y in &axial {
                    let mut x: Vec<f64> = d.iter().map(|v| radius * v).collect();
                    x.extend_from_slice(y);
                    out.push(exact_sample(model, &x)?);
                }
            }
            Ok(out)
        }
    }
}

/// Unit vectors in R^{m+1}: a circle for `m = 1`, otherwise a polar ×
/// azimuth grid spread across all coordinates by a fixed reflection.
fn sphere_directions(m: usize, resolution: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let res = resolution as f64;
    if m == 1 {
        return (0..resolution)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / res;
                vec![phi.cos(), phi.sin()]
            })
            .collect();
    }
    let dim = m + 1;
    let w = 1.0 / (dim as f64).sqrt();
    let mut out = Vec::with_capacity(resolution * resolution);
    for a in 0..resolution {
        let theta = PI * (a as f64 + 0.5) / res;
        for b in 0..resolution {
            let phi = 2.0 * PI * b as f64 / res;
            let mut v = vec![0.0; dim];
            v[0] = theta.cos();
            v[1] = theta.sin() * phi.cos();
            v[2] = theta.sin() * phi.sin();
            // Householder reflection about (1, ..., 1)/√dim
            let dot: f64 = v.iter().sum::<f64>() * w;
            for c in &mut v {
                *c -= 2.0 * dot * w;
            }
            out.push(v);
        }
    }
    out
}

/// `resolution` points of `[-half, half]^k`, coordinate `c` cycling through
/// the stations with a phase offset so the box is not swept along one line.
fn axial_stations(k: usize, resolution: usize, half: f64) -> Vec<Vec<f64>> {
    let t = |j: usize| -half + 2.0 * half * j as f64 / (resolution - 1) as f64;
    (0..resolution)
        .map(|j| (0..k).map(|c| t((j + c * resolution / 3) % resolution)).collect())
        .collect()
}
