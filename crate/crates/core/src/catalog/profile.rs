//! Meridian profiles of surfaces of revolution in R³.
//!
//! A profile is a curve `u ↦ (ρ(u), z(u))` sampled on a uniform parameter
//! grid; the surface is `X(u, θ) = (ρ cos θ, ρ sin θ, z)`. Radial graphs
//! `ρ = f(z)` are the special case `z = u`. Derivatives use centered
//! second-order differences with ghost nodes supplied by the end conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of grid nodes for the centered stencils.
pub const MIN_NODES: usize = 5;

/// How a profile is closed off at one end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    /// Mirror symmetry about the plane through the end node (`f' = 0` for a
    /// radial graph). Node-centered.
    Neumann,
    /// The profile meets the rotation axis half a cell beyond the end node.
    /// Ghosts reflect across the axis; no node ever sits on the axis.
    Axis,
    /// Open end: ghosts extrapolated by the cubic through the last four
    /// nodes. Derivatives near the end carry no symmetry assumption.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Periodic in the parameter, with the axial coordinate advancing by
    /// `axial_period` per period.
    Periodic { axial_period: f64 },
    Ends { start: EndCondition, end: EndCondition },
}

/// Sign of the unit normal relative to the convention `N = (-z', ρ')/|X_u|`
/// in the (radial, axial) half-plane, which points toward the axis for
/// profiles traversed with increasing `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Inward,
    Outward,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Inward => 1.0,
            Orientation::Outward => -1.0,
        }
    }
}

/// How a nodal quantity continues into the ghost nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Parity {
    /// Rotationally invariant scalar: even across an axis and a mirror.
    Scalar,
    /// Distance-like quantity: odd across the axis, even across a mirror.
    Radial,
    /// Axial coordinate: even across the axis, reflected about the end
    /// node across a mirror, shifted by the period when periodic.
    Axial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileData {
    rho: Vec<f64>,
    z: Vec<f64>,
    spacing: f64,
    boundary: Boundary,
}

/// A sampled meridian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileData", into = "ProfileData")]
pub struct ProfileCurve {
    rho: Vec<f64>,
    z: Vec<f64>,
    spacing: f64,
    boundary: Boundary,
}

impl TryFrom<ProfileData> for ProfileCurve {
    type Error = Error;

    fn try_from(d: ProfileData) -> Result<Self> {
        Self::new(d.rho, d.z, d.spacing, d.boundary)
    }
}

impl From<ProfileCurve> for ProfileData {
    fn from(p: ProfileCurve) -> Self {
        ProfileData { rho: p.rho, z: p.z, spacing: p.spacing, boundary: p.boundary }
    }
}

impl ProfileCurve {
    pub fn new(rho: Vec<f64>, z: Vec<f64>, spacing: f64, boundary: Boundary) -> Result<Self> {
        if rho.len() != z.len() {
            return Err(Error::Domain(format!(
                "profile has {} radii but {} axial samples",
                rho.len(),
                z.len()
            )));
        }
        if rho.len() < MIN_NODES {
            return Err(Error::GridTooShort { len: rho.len(), min: MIN_NODES });
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!("grid spacing must be positive, got {spacing}")));
        }
        if rho.iter().chain(z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("profile has non-finite samples".into()));
        }
        if let Some((i, r)) = rho.iter().enumerate().find(|(_, r)| **r <= 0.0) {
            return Err(Error::Domain(format!("profile radius {r} at node {i} is not positive")));
        }
        if let Boundary::Periodic { axial_period } = boundary {
            if !axial_period.is_finite() {
                return Err(Error::Domain("axial period must be finite".into()));
            }
        }
        Ok(Self { rho, z, spacing, boundary })
    }

    /// Radial graph `ρ = f(z)` on `z_i = z0 + i·h`.
    pub fn radial_graph(z0: f64, h: f64, f: Vec<f64>, boundary: Boundary) -> Result<Self> {
        let z = (0..f.len()).map(|i| z0 + i as f64 * h).collect();
        Self::new(f, z, h, boundary)
    }

    /// The cylinder `ρ ≡ radius` over one axial period `[-L, L)`.
    pub fn cylinder(radius: f64, half_length: f64, nodes: usize) -> Result<Self> {
        let h = 2.0 * half_length / nodes as f64;
        Self::radial_graph(
            -half_length,
            h,
            vec![radius; nodes],
            Boundary::Periodic { axial_period: 2.0 * half_length },
        )
    }

    /// Meridian `u ↦ (a sin u, -b cos u)`, `u ∈ (0, π)`, cell-centered so that
    /// both poles lie half a cell beyond the end nodes.
    pub fn ellipsoid(a: f64, b: f64, nodes: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!("ellipsoid radii must be positive, got a={a}, b={b}")));
        }
        let h = std::f64::consts::PI / nodes as f64;
        let u = |i: usize| (i as f64 + 0.5) * h;
        let rho = (0..nodes).map(|i| a * u(i).sin()).collect();
        let z = (0..nodes).map(|i| -b * u(i).cos()).collect();
        Self::new(rho, z, h, Boundary::Ends { start: EndCondition::Axis, end: EndCondition::Axis })
    }

    /// Pole-free band `|z| <= fraction·b` of the ellipsoid as a radial graph
    /// with open ends.
    pub fn ellipsoid_band(a: f64, b: f64, fraction: f64, nodes: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!("ellipsoid radii must be positive, got a={a}, b={b}")));
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Domain(format!("band fraction must lie in (0, 1), got {fraction}")));
        }
        let half = fraction * b;
        let h = 2.0 * half / (nodes.max(2) - 1) as f64;
        let f = (0..nodes)
            .map(|i| {
                let z = -half + i as f64 * h;
                a * (1.0 - (z / b).powi(2)).sqrt()
            })
            .collect();
        Self::radial_graph(-half, h, f, Boundary::Ends { start: EndCondition::Free, end: EndCondition::Free })
    }

    pub fn sphere(radius: f64, nodes: usize) -> Result<Self> {
        Self::ellipsoid(radius, radius, nodes)
    }

    /// Flat disk `z = 0`, `0 < ρ < radius`, closed at the axis.
    pub fn flat_disk(radius: f64, nodes: usize) -> Result<Self> {
        let h = radius / nodes as f64;
        let rho = (0..nodes).map(|i| (i as f64 + 0.5) * h).collect();
        Self::new(
            rho,
            vec![0.0; nodes],
            h,
            Boundary::Ends { start: EndCondition::Axis, end: EndCondition::Neumann },
        )
    }

    /// Catenoid `ρ = c cosh(z/c)` on `[-L, L]`, a minimal surface.
    pub fn catenoid(c: f64, half_length: f64, nodes: usize) -> Result<Self> {
        let h = 2.0 * half_length / (nodes - 1) as f64;
        let f = (0..nodes).map(|i| c * ((-half_length + i as f64 * h) / c).cosh()).collect();
        Self::radial_graph(
            -half_length,
            h,
            f,
            Boundary::Ends { start: EndCondition::Neumann, end: EndCondition::Neumann },
        )
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Same grid and boundary, new node positions.
    pub fn with_nodes(&self, rho: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        Self::new(rho, z, self.spacing, self.boundary)
    }

    /// `v` with one ghost node on each side (length `len + 2`).
    pub(crate) fn extend(&self, v: &[f64], parity: Parity) -> Vec<f64> {
        let m = v.len();
        let (lo, hi) = match self.boundary {
            Boundary::Periodic { axial_period } => {
                let shift = if parity == Parity::Axial { axial_period } else { 0.0 };
                (v[m - 1] - shift, v[0] + shift)
            }
            Boundary::Ends { start, end } => (
                ghost(start, parity, [v[0], v[1], v[2], v[3]]),
                ghost(end, parity, [v[m - 1], v[m - 2], v[m - 3], v[m - 4]]),
            ),
        };
        let mut out = Vec::with_capacity(m + 2);
        out.push(lo);
        out.extend_from_slice(v);
        out.push(hi);
        out
    }

    /// Centered first difference of a nodal quantity.
    pub(crate) fn d1(&self, v: &[f64], parity: Parity) -> Vec<f64> {
        let e = self.extend(v, parity);
        let h = self.spacing;
        (1..=v.len()).map(|i| (e[i + 1] - e[i - 1]) / (2.0 * h)).collect()
    }

    /// Centered second difference of a nodal quantity.
    pub(crate) fn d2(&self, v: &[f64], parity: Parity) -> Vec<f64> {
        let e = self.extend(v, parity);
        let h2 = self.spacing * self.spacing;
        (1..=v.len()).map(|i| (e[i + 1] - 2.0 * e[i] + e[i - 1]) / h2).collect()
    }

    /// Nodal geometry under the given orientation.
    pub fn geometry(&self, orientation: Orientation) -> ProfileGeometry {
        ProfileGeometry::new(self.clone(), orientation)
    }
}

/// Ghost value beyond an end; `v` lists the nodes from the end inward.
fn ghost(end: EndCondition, parity: Parity, v: [f64; 4]) -> f64 {
    match (end, parity) {
        (EndCondition::Neumann, Parity::Axial) => 2.0 * v[0] - v[1],
        (EndCondition::Neumann, _) => v[1],
        (EndCondition::Axis, Parity::Radial) => -v[0],
        (EndCondition::Axis, _) => v[0],
        (EndCondition::Free, _) => 4.0 * v[0] - 6.0 * v[1] + 4.0 * v[2] - v[3],
    }
}

/// Per-node differential geometry of a profile.
#[derive(Debug, Clone)]
pub struct ProfileGeometry {
    pub profile: ProfileCurve,
    pub orientation: Orientation,
    pub d_rho: Vec<f64>,
    pub d_z: Vec<f64>,
    /// `|X_u|²`
    pub metric: Vec<f64>,
    /// Meridian principal curvature.
    pub k_meridian: Vec<f64>,
    /// Parallel principal curvature.
    pub k_parallel: Vec<f64>,
    /// Unit normal, radial component.
    pub normal_rho: Vec<f64>,
    /// Unit normal, axial component.
    pub normal_z: Vec<f64>,
    /// `⟨X, N⟩`
    pub support: Vec<f64>,
    /// Area-element factor `ρ |X_u|`.
    pub area: Vec<f64>,
}

impl ProfileGeometry {
    fn new(profile: ProfileCurve, orientation: Orientation) -> Self {
        let rho = profile.rho();
        let z = profile.z();
        let d_rho = profile.d1(rho, Parity::Radial);
        let d_z = profile.d1(z, Parity::Axial);
        let dd_rho = profile.d2(rho, Parity::Radial);
        let dd_z = profile.d2(z, Parity::Axial);
        let s = orientation.sign();
        let m = profile.len();

        let mut metric = Vec::with_capacity(m);
        let mut k_meridian = Vec::with_capacity(m);
        let mut k_parallel = Vec::with_capacity(m);
        let mut normal_rho = Vec::with_capacity(m);
        let mut normal_z = Vec::with_capacity(m);
        let mut support = Vec::with_capacity(m);
        let mut area = Vec::with_capacity(m);
        for i in 0..m {
            let g = d_rho[i] * d_rho[i] + d_z[i] * d_z[i];
            let sg = g.sqrt();
            metric.push(g);
            k_meridian.push(s * (d_rho[i] * dd_z[i] - d_z[i] * dd_rho[i]) / (g * sg));
            k_parallel.push(s * d_z[i] / (rho[i] * sg));
            let nr = -s * d_z[i] / sg;
            let nz = s * d_rho[i] / sg;
            normal_rho.push(nr);
            normal_z.push(nz);
            support.push(rho[i] * nr + z[i] * nz);
            area.push(rho[i] * sg);
        }
        Self {
            profile,
            orientation,
            d_rho,
            d_z,
            metric,
            k_meridian,
            k_parallel,
            normal_rho,
            normal_z,
            support,
            area,
        }
    }

    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    /// `|X|² = ρ² + z²` at each node.
    pub fn position_norm_sq(&self) -> Vec<f64> {
        self.profile.rho().iter().zip(self.profile.z()).map(|(r, z)| r * r + z * z).collect()
    }

    /// `⟨X, X_u⟩ = ρρ' + zz'` at each node.
    pub fn position_dot_tangent(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.profile.rho()[i] * self.d_rho[i] + self.profile.z()[i] * self.d_z[i])
            .collect()
    }

    /// `(k_meridian, k_parallel)` at node `i`.
    pub fn curvatures(&self, i: usize) -> [f64; 2] {
        [self.k_meridian[i], self.k_parallel[i]]
    }

    /// `σ_r(k_meridian, k_parallel)` at every node.
    pub fn sigma(&self, r: usize) -> Vec<f64> {
        (0..self.len())
            .map(|i| match r {
                0 => 1.0,
                1 => self.k_meridian[i] + self.k_parallel[i],
                2 => self.k_meridian[i] * self.k_parallel[i],
                _ => 0.0,
            })
            .collect()
    }

    /// Eigenvalue of `P_{r-1}` in the meridian direction: `σ_{r-1}` of the
    /// parallel curvature alone.
    pub fn newton_meridian_eigenvalue(&self, r: usize) -> Vec<f64> {
        (0..self.len())
            .map(|i| match r {
                1 => 1.0,
                2 => self.k_parallel[i],
                _ => 0.0,
            })
            .collect()
    }

    /// Smallest physical distance between consecutive nodes.
    pub fn min_edge(&self) -> f64 {
        let rho = self.profile.rho();
        let z = self.profile.z();
        (1..self.len())
            .map(|i| (rho[i] - rho[i - 1]).hypot(z[i] - z[i - 1]))
            .fold(f64::INFINITY, f64::min)
    }
}
