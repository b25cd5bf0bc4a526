//! Level-set description of the phase-change interface: initialization,
//! smoothed Heaviside, advection, reinitialization and interface measures.

use rayon::prelude::*;

use crate::coupling::{
    find_crossings, recover_gradients, recover_nodal_gradient, CrossingSite, InterfaceCrossing,
};
use crate::error::{invalid, Error, Result};
use crate::fem::SlabVelocity;
use crate::heat::{solve_heat_slab, Region, TempBoundary};
use crate::materials::{MaterialField, PhaseProps};
use crate::mesh::{ElementKind, Mesh};
use crate::scalar::{dist, norm, point_segment_distance, Real, Vec2};

/// Nodal signed distance; negative values are liquid.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet<T> {
    pub phi: Vec<T>,
    /// Half width of the smoothing band; zero gives a sharp step.
    pub epsilon: T,
    /// Reinitialize every this many steps.
    pub reinit_interval: usize,
}

impl<T: Real> LevelSet<T> {
    pub fn new(phi: Vec<T>, epsilon: T, reinit_interval: usize) -> Result<Self> {
        if !(epsilon >= T::zero()) {
            return invalid(format!(
                "smoothing width must be non-negative, got {epsilon}"
            ));
        }
        if reinit_interval == 0 {
            return invalid("reinitialization interval must be at least 1");
        }
        if phi.iter().any(|p| !p.is_finite()) {
            return invalid("level set contains non-finite values");
        }
        Ok(LevelSet {
            phi,
            epsilon,
            reinit_interval,
        })
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    fn with_phi(&self, phi: Vec<T>) -> Self {
        LevelSet {
            phi,
            epsilon: self.epsilon,
            reinit_interval: self.reinit_interval,
        }
    }
}

/// Initial interface shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry<T> {
    /// `x = x0`.
    VerticalLine { x0: T, liquid_left: bool },
    /// `y = y0`.
    HorizontalLine { y0: T, liquid_below: bool },
    Circle {
        center: Vec2<T>,
        radius: T,
        liquid_inside: bool,
    },
}

/// Exact signed distance to `geometry`; fails when the interface misses the
/// mesh bounding box.
pub fn init_from_geometry<T: Real>(mesh: &Mesh<T>, geometry: Geometry<T>) -> Result<Vec<T>> {
    let (lo, hi) = mesh.bounding_box();
    let outside = |what: String| {
        Err(Error::Validation(format!(
            "initial interface {what} does not intersect the domain"
        )))
    };
    match geometry {
        Geometry::VerticalLine { x0, liquid_left } => {
            if !(x0 >= lo[0] && x0 <= hi[0]) {
                return outside(format!("x = {x0}"));
            }
            let s = if liquid_left { T::one() } else { -T::one() };
            Ok(mesh.coords().iter().map(|p| s * (p[0] - x0)).collect())
        }
        Geometry::HorizontalLine { y0, liquid_below } => {
            if !(y0 >= lo[1] && y0 <= hi[1]) {
                return outside(format!("y = {y0}"));
            }
            let s = if liquid_below { T::one() } else { -T::one() };
            Ok(mesh.coords().iter().map(|p| s * (p[1] - y0)).collect())
        }
        Geometry::Circle {
            center,
            radius,
            liquid_inside,
        } => {
            if !(radius > T::zero()) {
                return invalid(format!("circle radius must be positive, got {radius}"));
            }
            let nearest = [
                center[0].max(lo[0]).min(hi[0]),
                center[1].max(lo[1]).min(hi[1]),
            ];
            let far = [
                if center[0] - lo[0] > hi[0] - center[0] {
                    lo[0]
                } else {
                    hi[0]
                },
                if center[1] - lo[1] > hi[1] - center[1] {
                    lo[1]
                } else {
                    hi[1]
                },
            ];
            if dist(center, nearest) > radius || dist(center, far) < radius {
                return outside(format!("circle of radius {radius}"));
            }
            let s = if liquid_inside { T::one() } else { -T::one() };
            Ok(mesh
                .coords()
                .iter()
                .map(|&p| s * (dist(p, center) - radius))
                .collect())
        }
    }
}

/// `H_eps(phi)`: 0 below `-eps`, 1 above `eps`, sinusoidal in between;
/// `eps = 0` is the sharp step with `H(0) = 1/2`.
#[inline]
pub fn smoothed_heaviside<T: Real>(phi: T, epsilon: T) -> T {
    if epsilon <= T::zero() {
        return if phi < T::zero() {
            T::zero()
        } else if phi > T::zero() {
            T::one()
        } else {
            T::lit(0.5)
        };
    }
    if phi < -epsilon {
        T::zero()
    } else if phi > epsilon {
        T::one()
    } else {
        let pi = T::lit(std::f64::consts::PI);
        let h = T::lit(0.5) * (T::one() + phi / epsilon + (pi * phi / epsilon).sin() / pi);
        // sin(π) is not exactly zero in floating point
        h.max(T::zero()).min(T::one())
    }
}

/// `p1 + (p2 - p1) H_eps(phi)`.
pub fn blend<T: Real>(p1: T, p2: T, phi: T, epsilon: T) -> T {
    crate::materials::mix(p1, p2, smoothed_heaviside(phi, epsilon))
}

fn unit_or_zero<T: Real>(g: Vec2<T>) -> Vec2<T> {
    let n = norm(g);
    if n > T::lit(1e-12) {
        [g[0] / n, g[1] / n]
    } else {
        [T::zero(); 2]
    }
}

/// Unit normal `∇phi / |∇phi|` at a node, pointing into the solid.
pub fn interface_normal<T: Real>(mesh: &Mesh<T>, phi: &[T], node: usize) -> Result<Vec2<T>> {
    let g = recover_nodal_gradient(mesh, phi, node)?;
    if !(norm(g) > T::lit(1e-12)) {
        return Err(Error::DegenerateGradient { node });
    }
    Ok(unit_or_zero(g))
}

/// Curvature `-∇·n` at a node, from recovered gradients of the recovered
/// normal field.
pub fn interface_curvature<T: Real>(mesh: &Mesh<T>, phi: &[T], node: usize) -> Result<T> {
    interface_normal(mesh, phi, node)?;
    let normals: Vec<Vec2<T>> = recover_gradients(mesh, phi)?
        .into_iter()
        .map(unit_or_zero)
        .collect();
    let nx: Vec<T> = normals.iter().map(|n| n[0]).collect();
    let ny: Vec<T> = normals.iter().map(|n| n[1]).collect();
    let gx = recover_nodal_gradient(mesh, &nx, node)?;
    let gy = recover_nodal_gradient(mesh, &ny, node)?;
    Ok(-(gx[0] + gy[1]))
}

/// Boundary nodes where `v · n < -1e-12 |v|`.
pub fn inflow_nodes<T: Real>(mesh: &Mesh<T>, velocity: &[Vec2<T>]) -> Vec<usize> {
    mesh.boundary_node_normals()
        .iter()
        .enumerate()
        .filter_map(|(i, n)| {
            let n = (*n)?;
            let v = velocity[i];
            (v[0] * n[0] + v[1] * n[1] < -T::lit(1e-12) * norm(v)).then_some(i)
        })
        .collect()
}

/// One slab of `∂phi/∂t + v·∇phi = 0` with the temperature discretization
/// (unit capacity, no diffusion). Inflow boundary values are kept.
pub fn advect<T: Real>(
    mesh: &Mesh<T>,
    ls: &LevelSet<T>,
    velocity: &[Vec2<T>],
    dt: T,
) -> Result<LevelSet<T>> {
    let n = mesh.node_count();
    if ls.len() != n || velocity.len() != n {
        return invalid(format!(
            "advection sizes disagree: mesh {n}, level set {}, velocity {}",
            ls.len(),
            velocity.len()
        ));
    }
    if !(dt > T::zero()) {
        return invalid(format!("time step must be positive, got {dt}"));
    }
    let z = T::zero();
    if velocity.iter().all(|v| v[0] == z && v[1] == z) {
        return Ok(ls.clone());
    }
    let mut bc = TempBoundary::new(n);
    for i in inflow_nodes(mesh, velocity) {
        bc.set_node(i, ls.phi[i]);
    }
    let unit = MaterialField::uniform(PhaseProps::new(T::one(), T::one(), T::zero(), T::one()), n);
    let (field, _) = solve_heat_slab(
        mesh,
        &ls.phi,
        &SlabVelocity::steady(velocity.to_vec()),
        &unit,
        dt,
        Region::Whole,
        &bc,
    )?;
    Ok(ls.with_phi(field.top))
}

/// Reinitialized level set and, for every node, the index of its nearest
/// crossing point.
#[derive(Debug, Clone, PartialEq)]
pub struct Reinitialized<T> {
    pub level_set: LevelSet<T>,
    pub nearest: Vec<usize>,
}

/// Piecewise-linear interface segments joining the crossings within each cut
/// element. Indices refer to `crossings`.
pub fn interface_segments<T: Real>(
    mesh: &Mesh<T>,
    phi: &[T],
    crossings: &[InterfaceCrossing<T>],
) -> Vec<[usize; 2]> {
    let mut per_element: Vec<Vec<usize>> = vec![Vec::new(); mesh.element_count()];
    for (k, c) in crossings.iter().enumerate() {
        for &e in &c.elements {
            per_element[e].push(k);
        }
    }
    let mut segments = Vec::new();
    for (e, list) in per_element.iter().enumerate() {
        if list.len() < 2 {
            continue;
        }
        let el = mesh.element(e);
        let nen = el.len();
        // position along the element boundary, counter-clockwise from node 0
        let param = |k: usize| -> T {
            match crossings[k].site {
                CrossingSite::Node(i) => {
                    T::from_count(el.iter().position(|&x| x == i).unwrap_or(0))
                }
                CrossingSite::Edge([a, b]) => {
                    let la = el.iter().position(|&x| x == a).unwrap_or(0);
                    let lb = el.iter().position(|&x| x == b).unwrap_or(0);
                    let (from, to) = if (la + 1) % nen == lb {
                        (a, la)
                    } else {
                        (b, lb)
                    };
                    let other = if from == a { b } else { a };
                    let (pf, po) = (phi[from].abs(), phi[other].abs());
                    T::from_count(to) + pf / (pf + po)
                }
            }
        };
        let mut ordered: Vec<(T, usize)> = list.iter().map(|&k| (param(k), k)).collect();
        ordered.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        let ks: Vec<usize> = ordered.iter().map(|o| o.1).collect();
        let all_edges = ks
            .iter()
            .all(|&k| matches!(crossings[k].site, CrossingSite::Edge(_)));
        if mesh.kind() == ElementKind::Quad && ks.len() == 4 && all_edges {
            // saddle: edges e0..e3 are n0n1, n1n2, n2n3, n3n0
            let centre = el.iter().fold(T::zero(), |s, &i| s + phi[i]) / T::lit(4.0);
            let same = (phi[el[0]] < T::zero()) == (centre < T::zero());
            if same {
                segments.push([ks[0], ks[1]]);
                segments.push([ks[2], ks[3]]);
            } else {
                segments.push([ks[3], ks[0]]);
                segments.push([ks[1], ks[2]]);
            }
        } else {
            for w in ks.windows(2) {
                segments.push([w[0], w[1]]);
            }
        }
    }
    segments
}

/// Replaces `phi` by the signed distance to the current interface. Signs are
/// preserved.
pub fn reinitialize<T: Real>(mesh: &Mesh<T>, ls: &LevelSet<T>) -> Result<Reinitialized<T>> {
    let crossings = find_crossings(mesh, &ls.phi);
    reinitialize_with(mesh, ls, &crossings)
}

/// As [`reinitialize`], reusing already computed crossings.
pub fn reinitialize_with<T: Real>(
    mesh: &Mesh<T>,
    ls: &LevelSet<T>,
    crossings: &[InterfaceCrossing<T>],
) -> Result<Reinitialized<T>> {
    if ls.len() != mesh.node_count() {
        return invalid("level set size does not match the mesh");
    }
    if crossings.is_empty() {
        return Err(Error::NoInterface);
    }
    let segments = interface_segments(mesh, &ls.phi, crossings);
    let (phi, nearest): (Vec<T>, Vec<usize>) = mesh
        .coords()
        .par_iter()
        .zip(ls.phi.par_iter())
        .map(|(&p, &old)| {
            let mut best = T::infinity();
            let mut idx = 0;
            for (k, c) in crossings.iter().enumerate() {
                let d = dist(p, c.position);
                if d < best {
                    best = d;
                    idx = k;
                }
            }
            let mut d = best;
            for &[a, b] in &segments {
                d = d.min(point_segment_distance(
                    p,
                    crossings[a].position,
                    crossings[b].position,
                ));
            }
            let signed = if d == T::zero() {
                old
            } else if old < T::zero() {
                -d
            } else {
                d
            };
            (signed, idx)
        })
        .unzip();
    Ok(Reinitialized {
        level_set: ls.with_phi(phi),
        nearest,
    })
}

/// `∫ phi` over one linear triangle restricted to `phi < 0`.
fn negative_part_integral<T: Real>(area: T, f: [T; 3]) -> T {
    let third = T::one() / T::lit(3.0);
    let z = T::zero();
    let neg = f.iter().filter(|&&v| v < z).count();
    match neg {
        0 => z,
        3 => area * (f[0] + f[1] + f[2]) * third,
        1 => {
            let a = f.iter().position(|&v| v < z).unwrap_or(0);
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let tb = f[a] / (f[a] - f[b]);
            let tc = f[a] / (f[a] - f[c]);
            area * tb * tc * f[a] * third
        }
        _ => {
            let c = f.iter().position(|&v| v >= z).unwrap_or(0);
            let (a, b) = ((c + 1) % 3, (c + 2) % 3);
            let ta = f[c] / (f[c] - f[a]);
            let tb = f[c] / (f[c] - f[b]);
            area * (f[0] + f[1] + f[2]) * third - area * ta * tb * f[c] * third
        }
    }
}

fn tri_area<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs() * T::lit(0.5)
}

/// `∫_{phi<0} phi dΩ`, exact for piecewise-linear `phi`; quads are split
/// along the `n0 n2` diagonal.
pub fn liquid_phi_integral<T: Real>(mesh: &Mesh<T>, phi: &[T]) -> T {
    let mut total = T::zero();
    for el in mesh.elements() {
        let tris: &[[usize; 3]] = if el.len() == 3 {
            &[[0, 1, 2]]
        } else {
            &[[0, 1, 2], [0, 2, 3]]
        };
        for t in tris {
            let (a, b, c) = (el[t[0]], el[t[1]], el[t[2]]);
            let area = tri_area(mesh.node(a), mesh.node(b), mesh.node(c));
            total += negative_part_integral(area, [phi[a], phi[b], phi[c]]);
        }
    }
    total
}

/// `I = ∫_{phi<0} phi dΩ / reference`.
pub fn liquid_fraction_integral<T: Real>(mesh: &Mesh<T>, phi: &[T], reference: T) -> Result<T> {
    if reference == T::zero() || !reference.is_finite() {
        return invalid(format!(
            "reference integral must be finite and non-zero, got {reference}"
        ));
    }
    Ok(liquid_phi_integral(mesh, phi) / reference)
}
