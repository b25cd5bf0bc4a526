//! Stabilized space-time incompressible Navier-Stokes slabs.
//!
//! Velocity and pressure share the linear basis. Each node carries six
//! unknowns `node * 6 + level * 3 + field` with `field` in `(u, v, p)` and
//! `level` 0 at the slab bottom, 1 at the top. The convective velocity is
//! lagged (Picard).

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fem::{element_points, stabilization_unchecked, temporal_rule, SlabVelocity, MAX_NEN};
use crate::heat::require_tag;
use crate::linalg::{norm2, solve, CsrMatrix, SolveReport};
use crate::materials::MaterialField;
use crate::mesh::Mesh;
use crate::scalar::{dist, Real, Vec2};

const DOF: usize = 6;
const NE: usize = DOF * MAX_NEN;

/// Velocity and pressure at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowLevel<T> {
    pub u: Vec<Vec2<T>>,
    pub p: Vec<T>,
}

/// Flow unknowns at both levels of the last solved slab.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T> {
    pub bottom: FlowLevel<T>,
    pub top: FlowLevel<T>,
}

impl<T: Real> FlowState<T> {
    pub fn rest(node_count: usize) -> Self {
        let level = FlowLevel {
            u: vec![[T::zero(); 2]; node_count],
            p: vec![T::zero(); node_count],
        };
        FlowState {
            bottom: level.clone(),
            top: level,
        }
    }

    pub fn node_count(&self) -> usize {
        self.top.u.len()
    }

    pub fn velocity(&self) -> &[Vec2<T>] {
        &self.top.u
    }

    pub fn pressure(&self) -> &[T] {
        &self.top.p
    }

    /// Velocities at both levels, as consumed by the heat and level-set slabs.
    pub fn slab_velocity(&self) -> SlabVelocity<T> {
        SlabVelocity {
            bottom: self.bottom.u.clone(),
            top: self.top.u.clone(),
        }
    }

    pub fn max_speed(&self) -> T {
        self.top
            .u
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(T::zero(), T::max)
    }

    fn from_vector(x: &[T]) -> Self {
        let n = x.len() / DOF;
        let level = |l: usize| FlowLevel {
            u: (0..n)
                .map(|i| [x[DOF * i + 3 * l], x[DOF * i + 3 * l + 1]])
                .collect(),
            p: (0..n).map(|i| x[DOF * i + 3 * l + 2]).collect(),
        };
        FlowState {
            bottom: level(0),
            top: level(1),
        }
    }

    fn to_vector(&self) -> Vec<T> {
        let mut x = Vec::with_capacity(DOF * self.node_count());
        for i in 0..self.node_count() {
            for lv in [&self.bottom, &self.top] {
                x.extend([lv.u[i][0], lv.u[i][1], lv.p[i]]);
            }
        }
        x
    }
}

/// Velocity Dirichlet values per node, tractions per boundary edge and the
/// pressure gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBoundary<T> {
    velocity: Vec<Option<Vec2<T>>>,
    traction: Vec<(usize, Vec2<T>)>,
    pressure_pin: Option<(usize, T)>,
}

impl<T: Real> FlowBoundary<T> {
    pub fn new(node_count: usize) -> Self {
        FlowBoundary {
            velocity: vec![None; node_count],
            traction: Vec::new(),
            pressure_pin: None,
        }
    }

    /// Prescribes `g(x)` on every node of edges tagged `tag`; later calls win
    /// on shared nodes.
    pub fn with_velocity(
        mut self,
        mesh: &Mesh<T>,
        tag: &str,
        g: impl Fn(Vec2<T>) -> Vec2<T>,
    ) -> Result<Self> {
        require_tag(mesh, tag)?;
        for i in mesh.nodes_with_tag(tag) {
            self.velocity[i] = Some(g(mesh.node(i)));
        }
        Ok(self)
    }

    pub fn with_no_slip(self, mesh: &Mesh<T>, tag: &str) -> Result<Self> {
        self.with_velocity(mesh, tag, |_| [T::zero(); 2])
    }

    /// Constant traction `h = σ n` on edges tagged `tag`.
    pub fn with_traction(mut self, mesh: &Mesh<T>, tag: &str, h: Vec2<T>) -> Result<Self> {
        require_tag(mesh, tag)?;
        for (k, e) in mesh.boundary_edges().iter().enumerate() {
            if e.tag.as_str() == tag {
                self.traction.push((k, h));
            }
        }
        Ok(self)
    }

    pub fn set_velocity(&mut self, node: usize, value: Vec2<T>) {
        self.velocity[node] = Some(value);
    }

    pub fn with_pressure_pin(mut self, node: usize, value: T) -> Self {
        self.pressure_pin = Some((node, value));
        self
    }

    pub fn velocity(&self) -> &[Option<Vec2<T>>] {
        &self.velocity
    }

    pub fn has_traction(&self) -> bool {
        !self.traction.is_empty()
    }

    /// Explicit pin, or node 0 at zero pressure when no traction edge fixes
    /// the pressure level.
    pub fn pressure_pin(&self) -> Option<(usize, T)> {
        self.pressure_pin
            .or_else(|| (!self.has_traction()).then_some((0, T::zero())))
    }
}

/// Constant body force per unit mass, m/s^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyForce<T> {
    pub f: Vec2<T>,
}

impl<T: Real> BodyForce<T> {
    pub fn zero() -> Self {
        BodyForce { f: [T::zero(); 2] }
    }

    pub fn is_finite(&self) -> bool {
        self.f[0].is_finite() && self.f[1].is_finite()
    }
}

impl<T: Real> Default for BodyForce<T> {
    fn default() -> Self {
        Self::zero()
    }
}

/// Assembled slab system in global numbering.
#[derive(Debug, Clone)]
pub struct NsSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
}

struct ElementBlock<T> {
    k: [[T; NE]; NE],
    f: [T; NE],
}

#[inline]
fn idx(a: usize, level: usize, field: usize) -> usize {
    DOF * a + 3 * level + field
}

#[allow(clippy::too_many_arguments)]
fn element_block<T: Real>(
    mesh: &Mesh<T>,
    e: usize,
    prev: &FlowState<T>,
    mat: &MaterialField<T>,
    dt: T,
    lin: &SlabVelocity<T>,
    force: Vec2<T>,
) -> ElementBlock<T> {
    let nodes = mesh.element(e);
    let n = nodes.len();
    let h = mesh.element_size(e);
    let z = T::zero();
    let mut blk = ElementBlock {
        k: [[z; NE]; NE],
        f: [z; NE],
    };
    let dl = [-T::one(), T::one()];
    for ep in element_points(mesh, e) {
        let props = mat.at_point(nodes, &ep.n);
        let (rho, mu) = (props.rho, props.mu);
        let mut ub = [z, z];
        let mut ut = [z, z];
        for (k, &i) in nodes.iter().enumerate() {
            for d in 0..2 {
                ub[d] += ep.n[k] * lin.bottom[i][d];
                ut[d] += ep.n[k] * lin.top[i][d];
            }
        }
        for (theta, wt) in temporal_rule::<T>() {
            let l = [T::one() - theta, theta];
            let u = [
                ub[0] + theta * (ut[0] - ub[0]),
                ub[1] + theta * (ut[1] - ub[1]),
            ];
            let st = stabilization_unchecked(h, u, mu / rho, z, dt);
            let (tau, tau_c) = (st.tau_mom, st.tau_cont);
            let dv = ep.wdet * wt * dt;
            let mut adv = [z; MAX_NEN];
            for k in 0..n {
                adv[k] = u[0] * ep.dn[k][0] + u[1] * ep.dn[k][1];
            }
            for la in 0..2 {
                for a in 0..n {
                    let wa = ep.n[a] * l[la];
                    let sa = adv[a] * l[la];
                    let ga = [ep.dn[a][0] * l[la], ep.dn[a][1] * l[la]];
                    for i in 0..2 {
                        blk.f[idx(a, la, i)] += dv * (rho * wa + tau * sa * rho) * force[i];
                    }
                    blk.f[idx(a, la, 2)] += dv * tau * (ga[0] * force[0] + ga[1] * force[1]);
                    for lb in 0..2 {
                        for b in 0..n {
                            let d_b = ep.n[b] * dl[lb] / dt + adv[b] * l[lb];
                            let nb = ep.n[b] * l[lb];
                            let gb = [ep.dn[b][0] * l[lb], ep.dn[b][1] * l[lb]];
                            let lap = ga[0] * gb[0] + ga[1] * gb[1];
                            for i in 0..2 {
                                let r = idx(a, la, i);
                                // momentum, same component
                                blk.k[r][idx(b, lb, i)] +=
                                    dv * (rho * wa * d_b + mu * lap + tau * sa * rho * d_b);
                                for j in 0..2 {
                                    blk.k[r][idx(b, lb, j)] +=
                                        dv * (mu * ga[j] * gb[i] + tau_c * rho * ga[i] * gb[j]);
                                }
                                blk.k[r][idx(b, lb, 2)] += dv * (-ga[i] * nb + tau * sa * gb[i]);
                            }
                            let r = idx(a, la, 2);
                            for j in 0..2 {
                                blk.k[r][idx(b, lb, j)] += dv * (wa * gb[j] + tau * ga[j] * d_b);
                            }
                            blk.k[r][idx(b, lb, 2)] += dv * tau / rho * lap;
                        }
                    }
                }
            }
        }
        // velocity jump on the slab bottom
        for a in 0..n {
            for b in 0..n {
                let m = rho * ep.n[a] * ep.n[b] * ep.wdet;
                let prev_u = prev.top.u[nodes[b]];
                for i in 0..2 {
                    blk.k[idx(a, 0, i)][idx(b, 0, i)] += m;
                    blk.f[idx(a, 0, i)] += m * prev_u[i];
                }
            }
        }
    }
    blk
}

/// Assembles one Navier-Stokes slab linearized about `lin`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_ns_slab<T: Real>(
    mesh: &Mesh<T>,
    prev: &FlowState<T>,
    materials: &MaterialField<T>,
    dt: T,
    lin: &SlabVelocity<T>,
    bc: &FlowBoundary<T>,
    force: BodyForce<T>,
) -> Result<NsSystem<T>> {
    let nn = mesh.node_count();
    if prev.node_count() != nn
        || prev.bottom.u.len() != nn
        || prev.top.p.len() != nn
        || materials.node_count() != nn
        || lin.len() != nn
        || lin.top.len() != nn
        || bc.velocity.len() != nn
    {
        return Err(Error::Assembly(format!(
            "field sizes (state {}, materials {}, linearization {}, boundary {}) do not match the mesh ({nn} nodes)",
            prev.node_count(),
            materials.node_count(),
            lin.len(),
            bc.velocity.len()
        )));
    }
    if !(dt > T::zero()) {
        return invalid(format!("time step must be positive, got {dt}"));
    }
    if !force.is_finite() {
        return invalid("body force must be finite");
    }
    if let Some((node, _)) = bc.pressure_pin() {
        if node >= nn {
            return Err(Error::Assembly(format!(
                "pressure pin node {node} out of range"
            )));
        }
    }

    let mut matrix = CsrMatrix::from_elements(nn, mesh.elements(), DOF);
    let mut rhs = vec![T::zero(); DOF * nn];
    let blocks: Vec<ElementBlock<T>> = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| element_block(mesh, e, prev, materials, dt, lin, force.f))
        .collect();
    for (e, blk) in blocks.iter().enumerate() {
        let el = mesh.element(e);
        let n = el.len();
        for a in 0..n {
            for ra in 0..DOF {
                let r = DOF * el[a] + ra;
                rhs[r] += blk.f[DOF * a + ra];
                for b in 0..n {
                    for cb in 0..DOF {
                        matrix.add(r, DOF * el[b] + cb, blk.k[DOF * a + ra][DOF * b + cb])?;
                    }
                }
            }
        }
    }

    // traction: each endpoint and level receives h L dt / 4
    let quarter = T::lit(0.25);
    for &(k, h) in &bc.traction {
        let [i, j] = mesh.boundary_edges()[k].nodes;
        let w = dist(mesh.node(i), mesh.node(j)) * dt * quarter;
        for node in [i, j] {
            for level in 0..2 {
                for c in 0..2 {
                    rhs[DOF * node + 3 * level + c] += w * h[c];
                }
            }
        }
    }

    for (i, g) in bc.velocity.iter().enumerate() {
        if let Some(g) = g {
            for level in 0..2 {
                for c in 0..2 {
                    let r = DOF * i + 3 * level + c;
                    matrix.set_identity_row(r);
                    rhs[r] = g[c];
                }
            }
        }
    }
    if let Some((node, value)) = bc.pressure_pin() {
        for level in 0..2 {
            let r = DOF * node + 3 * level + 2;
            matrix.set_identity_row(r);
            rhs[r] = value;
        }
    }
    Ok(NsSystem { matrix, rhs })
}

/// Nonlinear iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions<T> {
    /// Relative nonlinear residual target.
    pub tol: T,
    /// Stop once the velocity increment max-norm falls below this.
    pub increment_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for PicardOptions<T> {
    fn default() -> Self {
        PicardOptions {
            tol: T::lit(1e-8),
            increment_tol: T::lit(1e-10),
            max_iter: 50,
        }
    }
}

/// Result of [`solve_ns_slab`].
#[derive(Debug, Clone, PartialEq)]
pub struct NsSolve<T> {
    pub state: FlowState<T>,
    /// Relative nonlinear residual before each linear solve, and of the
    /// accepted iterate last.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub linear: Option<SolveReport>,
}

fn relative_residual<T: Real>(sys: &NsSystem<T>, x: &[T]) -> T {
    let r = norm2(&sys.matrix.residual(x, &sys.rhs));
    let b = norm2(&sys.rhs);
    if b > T::zero() {
        r / b
    } else {
        r
    }
}

/// Solves one slab by Picard iteration on the convective velocity, starting
/// from the previous slab-top state at both levels.
#[allow(clippy::too_many_arguments)]
pub fn solve_ns_slab<T: Real>(
    mesh: &Mesh<T>,
    prev: &FlowState<T>,
    materials: &MaterialField<T>,
    dt: T,
    bc: &FlowBoundary<T>,
    force: BodyForce<T>,
    opts: &PicardOptions<T>,
) -> Result<NsSolve<T>> {
    if !(opts.tol > T::zero()) || opts.max_iter == 0 {
        return invalid("nonlinear tolerance must be positive and max_iter at least 1");
    }
    let start = FlowState {
        bottom: prev.top.clone(),
        top: prev.top.clone(),
    };
    let mut x = start.to_vector();
    let mut lin = start.slab_velocity();
    let mut history = Vec::new();
    let mut linear = None;
    for it in 0..=opts.max_iter {
        let sys = assemble_ns_slab(mesh, prev, materials, dt, &lin, bc, force)?;
        let res = relative_residual(&sys, &x);
        history.push(res.to_f64().unwrap_or(f64::NAN));
        if !res.is_finite() {
            return Err(Error::Solver("non-finite nonlinear residual".into()));
        }
        if res < opts.tol {
            return finish(x, history, it, linear, bc);
        }
        if it == opts.max_iter {
            break;
        }
        let mut next = x.clone();
        linear = Some(solve(
            &sys.matrix,
            &sys.rhs,
            &mut next,
            T::linear_tolerance(),
        )?);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite flow solution".into()));
        }
        let incr = (0..mesh.node_count())
            .flat_map(|i| [0, 1, 3, 4].map(|c| DOF * i + c))
            .map(|r| (next[r] - x[r]).abs())
            .fold(T::zero(), T::max);
        x = next;
        let state = FlowState::from_vector(&x);
        lin = state.slab_velocity();
        if incr < opts.increment_tol {
            let sys = assemble_ns_slab(mesh, prev, materials, dt, &lin, bc, force)?;
            history.push(relative_residual(&sys, &x).to_f64().unwrap_or(f64::NAN));
            return finish(x, history, it + 1, linear, bc);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

fn finish<T: Real>(
    x: Vec<T>,
    history: Vec<f64>,
    iterations: usize,
    linear: Option<SolveReport>,
    bc: &FlowBoundary<T>,
) -> Result<NsSolve<T>> {
    let mut state = FlowState::from_vector(&x);
    // identity rows hold to solver precision; snap them to the exact data
    for (i, g) in bc.velocity.iter().enumerate() {
        if let Some(g) = g {
            state.bottom.u[i] = *g;
            state.top.u[i] = *g;
        }
    }
    Ok(NsSolve {
        state,
        history,
        iterations,
        linear,
    })
}

/// `||∇·u||_L2` of the slab-top velocity.
pub fn divergence_norm<T: Real>(mesh: &Mesh<T>, state: &FlowState<T>) -> T {
    let u = &state.top.u;
    let mut sum = T::zero();
    for e in 0..mesh.element_count() {
        let el = mesh.element(e);
        for ep in element_points(mesh, e) {
            let mut d = T::zero();
            for (k, &i) in el.iter().enumerate() {
                d += ep.dn[k][0] * u[i][0] + ep.dn[k][1] * u[i][1];
            }
            sum += d * d * ep.wdet;
        }
    }
    sum.sqrt()
}
