//! Reference-element machinery for space-time slabs.
//!
//! A slab element is a spatial P1 triangle or Q1 quadrilateral extruded over
//! `[t_n, t_n+1]`, with the linear temporal basis `{1 - θ, θ}`. Space-time
//! nodes are ordered bottom level first: index `k` is spatial node `k` at
//! `θ = 0` and `nen + k` is the same node at `θ = 1`.

use crate::error::{invalid, Result};
use crate::mesh::{ElementKind, Mesh};
use crate::scalar::{Real, Vec2};

/// Upper bound on spatial nodes per element.
pub const MAX_NEN: usize = 4;

/// Shape functions of one spatial element at one point.
#[derive(Debug, Clone, Copy)]
pub struct SpatialBasis<T> {
    pub nen: usize,
    pub values: [T; MAX_NEN],
    pub grads: [Vec2<T>; MAX_NEN],
}

/// Reference-coordinate shape functions. Triangles use area coordinates on
/// the unit triangle, quads the bilinear basis on `[-1, 1]^2`.
pub fn spatial_basis<T: Real>(kind: ElementKind, xi: Vec2<T>) -> SpatialBasis<T> {
    let (z, one) = (T::zero(), T::one());
    match kind {
        ElementKind::Tri => SpatialBasis {
            nen: 3,
            values: [one - xi[0] - xi[1], xi[0], xi[1], z],
            grads: [[-one, -one], [one, z], [z, one], [z, z]],
        },
        ElementKind::Quad => {
            let q = T::lit(0.25);
            let (s, t) = (xi[0], xi[1]);
            SpatialBasis {
                nen: 4,
                values: [
                    q * (one - s) * (one - t),
                    q * (one + s) * (one - t),
                    q * (one + s) * (one + t),
                    q * (one - s) * (one + t),
                ],
                grads: [
                    [-q * (one - t), -q * (one - s)],
                    [q * (one - t), -q * (one + s)],
                    [q * (one + t), q * (one + s)],
                    [-q * (one + t), q * (one - s)],
                ],
            }
        }
    }
}

/// Linear temporal basis `{1 - θ, θ}` and its derivatives in `θ`.
#[inline]
pub fn temporal_basis<T: Real>(theta: T) -> ([T; 2], [T; 2]) {
    ([T::one() - theta, theta], [-T::one(), T::one()])
}

/// Space-time basis at `(ξ, θ)`: values, reference spatial gradients and
/// `θ`-derivatives for the `2 · nen` slab nodes.
#[derive(Debug, Clone)]
pub struct SlabBasis<T> {
    pub values: Vec<T>,
    pub grads: Vec<Vec2<T>>,
    pub dtheta: Vec<T>,
}

pub fn eval_basis<T: Real>(kind: ElementKind, xi: Vec2<T>, theta: T) -> SlabBasis<T> {
    let sb = spatial_basis(kind, xi);
    let (l, dl) = temporal_basis(theta);
    let n = sb.nen;
    let mut out = SlabBasis {
        values: Vec::with_capacity(2 * n),
        grads: Vec::with_capacity(2 * n),
        dtheta: Vec::with_capacity(2 * n),
    };
    for level in 0..2 {
        for k in 0..n {
            out.values.push(sb.values[k] * l[level]);
            out.grads
                .push([sb.grads[k][0] * l[level], sb.grads[k][1] * l[level]]);
            out.dtheta.push(sb.values[k] * dl[level]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePoint<T> {
    pub xi: Vec2<T>,
    pub theta: T,
    pub weight: T,
}

/// Spatial rule: 3-point interior rule on the unit triangle, 2x2 Gauss on
/// `[-1, 1]^2`.
pub fn spatial_rule<T: Real>(kind: ElementKind) -> Vec<(Vec2<T>, T)> {
    match kind {
        ElementKind::Tri => {
            let (a, b, w) = (T::lit(1.0 / 6.0), T::lit(2.0 / 3.0), T::lit(1.0 / 6.0));
            vec![([a, a], w), ([b, a], w), ([a, b], w)]
        }
        ElementKind::Quad => {
            let g = T::one() / T::lit(3.0).sqrt();
            let mut pts = Vec::with_capacity(4);
            for &y in &[-g, g] {
                for &x in &[-g, g] {
                    pts.push(([x, y], T::one()));
                }
            }
            pts
        }
    }
}

/// Two-point Gauss rule on `[0, 1]`.
pub fn temporal_rule<T: Real>() -> [(T, T); 2] {
    let half = T::lit(0.5);
    let d = half / T::lit(3.0).sqrt();
    [(half - d, half), (half + d, half)]
}

/// Tensor-product space-time rule on the reference slab.
pub fn quadrature<T: Real>(kind: ElementKind) -> Vec<QuadraturePoint<T>> {
    let mut out = Vec::new();
    for (theta, wt) in temporal_rule::<T>() {
        for (xi, ws) in spatial_rule::<T>(kind) {
            out.push(QuadraturePoint {
                xi,
                theta,
                weight: ws * wt,
            });
        }
    }
    out
}

/// Shape data at one spatial quadrature point of a physical element:
/// values, physical gradients and `weight · |J|`.
#[derive(Debug, Clone, Copy)]
pub struct ElementPoint<T> {
    pub n: [T; MAX_NEN],
    pub dn: [Vec2<T>; MAX_NEN],
    pub wdet: T,
}

fn map_point<T: Real>(pts: &[Vec2<T>], sb: &SpatialBasis<T>) -> (T, [Vec2<T>; MAX_NEN]) {
    let z = T::zero();
    let mut j = [[z, z], [z, z]];
    for k in 0..sb.nen {
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] += pts[k][r] * sb.grads[k][c];
            }
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let mut dn = [[z, z]; MAX_NEN];
    for k in 0..sb.nen {
        let g = sb.grads[k];
        dn[k] = [
            (j[1][1] * g[0] - j[1][0] * g[1]) / det,
            (-j[0][1] * g[0] + j[0][0] * g[1]) / det,
        ];
    }
    (det, dn)
}

/// Physical shape data at every spatial quadrature point of element `e`.
pub fn element_points<T: Real>(mesh: &Mesh<T>, e: usize) -> Vec<ElementPoint<T>> {
    let kind = mesh.kind();
    let pts = mesh.element_coords(e);
    spatial_rule::<T>(kind)
        .into_iter()
        .map(|(xi, w)| {
            let sb = spatial_basis(kind, xi);
            let (det, dn) = map_point(&pts, &sb);
            ElementPoint {
                n: sb.values,
                dn,
                wdet: w * det,
            }
        })
        .collect()
}

/// Physical gradients of the shape functions at the element centroid.
pub fn centroid_gradients<T: Real>(mesh: &Mesh<T>, e: usize) -> [Vec2<T>; MAX_NEN] {
    let kind = mesh.kind();
    let xi = match kind {
        ElementKind::Tri => [T::lit(1.0 / 3.0); 2],
        ElementKind::Quad => [T::zero(); 2],
    };
    let sb = spatial_basis(kind, xi);
    map_point(&mesh.element_coords(e), &sb).1
}

/// Gauss-Legendre points on `[0, 1]` for boundary edges.
pub fn edge_rule<T: Real>() -> [(T, T); 2] {
    temporal_rule()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationParams<T> {
    pub tau_mom: T,
    pub tau_cont: T,
    pub tau_temp: T,
}

/// `[(2/dt)^2 + (2|u|/h)^2 + (4 d/h^2)^2]^(-1/2)` for diffusivity `d`.
#[inline]
pub fn tau_advection_diffusion<T: Real>(h: T, speed: T, diffusivity: T, dt: T) -> T {
    let two = T::lit(2.0);
    let a = two / dt;
    let b = two * speed / h;
    let c = T::lit(4.0) * diffusivity / (h * h);
    (a * a + b * b + c * c).sqrt().recip()
}

/// Stabilization parameters for element size `h_e`, local velocity, kinematic
/// viscosity `nu` and thermal diffusivity `alpha`.
pub fn stabilization_params<T: Real>(
    h_e: T,
    u: Vec2<T>,
    nu: T,
    alpha: T,
    dt: T,
) -> Result<StabilizationParams<T>> {
    if !(h_e > T::zero()) || !(dt > T::zero()) {
        return invalid(format!(
            "element size and time step must be positive (h = {h_e}, dt = {dt})"
        ));
    }
    if nu < T::zero() || alpha < T::zero() {
        return invalid("diffusivities must be nonnegative");
    }
    Ok(stabilization_unchecked(h_e, u, nu, alpha, dt))
}

#[inline]
pub(crate) fn stabilization_unchecked<T: Real>(
    h: T,
    u: Vec2<T>,
    nu: T,
    alpha: T,
    dt: T,
) -> StabilizationParams<T> {
    let speed = u[0].hypot(u[1]);
    let tau_mom = tau_advection_diffusion(h, speed, nu, dt);
    let tau_cont = if speed < T::lit(1e-12) {
        h * h / (T::lit(4.0) * tau_mom)
    } else {
        speed * h * T::lit(0.5)
    };
    StabilizationParams {
        tau_mom,
        tau_cont,
        tau_temp: tau_advection_diffusion(h, speed, alpha, dt),
    }
}

/// Nodal velocities at the two time levels of a slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabVelocity<T> {
    pub bottom: Vec<Vec2<T>>,
    pub top: Vec<Vec2<T>>,
}

impl<T: Real> SlabVelocity<T> {
    pub fn zeros(n: usize) -> Self {
        Self::steady(vec![[T::zero(); 2]; n])
    }

    /// Same field at both levels.
    pub fn steady(v: Vec<Vec2<T>>) -> Self {
        SlabVelocity {
            bottom: v.clone(),
            top: v,
        }
    }

    pub fn len(&self) -> usize {
        self.bottom.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bottom.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        let z = T::zero();
        self.bottom
            .iter()
            .chain(&self.top)
            .all(|v| v[0] == z && v[1] == z)
    }
}
