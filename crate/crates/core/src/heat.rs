//! Stabilized space-time advection-diffusion of temperature.
//!
//! Each slab has unknowns `T+` at the bottom (θ = 0) and `T-` at the top
//! (θ = 1) of every active node, numbered `2 * local + level`. The previous
//! slab enters only through the jump term. Problems are posed either on the
//! whole mesh or on one phase of a ghost split, where ghost nodes are held at
//! the melting temperature.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{element_points, tau_advection_diffusion, temporal_rule, SlabVelocity, MAX_NEN};
use crate::linalg::{solve, CsrMatrix, SolveReport};
use crate::materials::{MaterialField, Phase};
use crate::mesh::Mesh;
use crate::scalar::{dist, Real, Vec2};

/// Temperatures at both levels of the last solved slab.
#[derive(Debug, Clone, PartialEq)]
pub struct TempField<T> {
    pub bottom: Vec<T>,
    pub top: Vec<T>,
}

impl<T: Real> TempField<T> {
    /// Field equal to `values` at both levels.
    pub fn new(values: Vec<T>) -> Self {
        TempField {
            bottom: values.clone(),
            top: values,
        }
    }

    pub fn uniform(n: usize, value: T) -> Self {
        Self::new(vec![value; n])
    }

    /// Current temperature (slab top).
    pub fn values(&self) -> &[T] {
        &self.top
    }
}

/// Dirichlet temperatures per node and constant Neumann fluxes per boundary
/// edge. A flux `q` adds `∫ v q` to the right-hand side, so positive values
/// heat the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TempBoundary<T> {
    dirichlet: Vec<Option<T>>,
    neumann: Vec<(usize, T)>,
}

impl<T: Real> TempBoundary<T> {
    pub fn new(node_count: usize) -> Self {
        TempBoundary {
            dirichlet: vec![None; node_count],
            neumann: Vec::new(),
        }
    }

    /// Fixes every node on edges tagged `tag`; later calls win on shared nodes.
    pub fn with_dirichlet(mut self, mesh: &Mesh<T>, tag: &str, value: T) -> Result<Self> {
        require_tag(mesh, tag)?;
        for i in mesh.nodes_with_tag(tag) {
            self.dirichlet[i] = Some(value);
        }
        Ok(self)
    }

    pub fn with_neumann(mut self, mesh: &Mesh<T>, tag: &str, flux: T) -> Result<Self> {
        require_tag(mesh, tag)?;
        for (k, e) in mesh.boundary_edges().iter().enumerate() {
            if e.tag.as_str() == tag {
                self.neumann.push((k, flux));
            }
        }
        Ok(self)
    }

    pub fn set_node(&mut self, node: usize, value: T) {
        self.dirichlet[node] = Some(value);
    }

    pub fn dirichlet(&self) -> &[Option<T>] {
        &self.dirichlet
    }
}

pub(crate) fn require_tag<T: Real>(mesh: &Mesh<T>, tag: &str) -> Result<()> {
    if mesh.has_tag(tag) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "boundary tag `{tag}` does not exist on the mesh"
        )))
    }
}

/// One phase's share of a ghost split.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainSpec<T> {
    pub phase: Phase,
    /// Elements with at least one node of `phase`, ascending.
    pub elements: Vec<usize>,
    /// Nodes of those elements, ascending.
    pub active_nodes: Vec<usize>,
    /// Opposite-phase nodes of active elements, ascending.
    pub ghost_nodes: Vec<usize>,
    pub ghost_value: T,
}

impl<T: Real> SubdomainSpec<T> {
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Where a heat slab is posed.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a, T> {
    Whole,
    Subdomain(&'a SubdomainSpec<T>),
}

/// Assembled slab system in local numbering.
#[derive(Debug, Clone)]
pub struct HeatSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    /// Global index of each local node.
    pub nodes: Vec<usize>,
    /// Prescribed value per local node (ghost or Dirichlet).
    pub fixed: Vec<Option<T>>,
}

impl<T: Real> HeatSystem<T> {
    pub fn dimension(&self) -> usize {
        self.rhs.len()
    }
}

struct ElementBlock<T> {
    k: [[T; 2 * MAX_NEN]; 2 * MAX_NEN],
    f: [T; 2 * MAX_NEN],
}

#[allow(clippy::too_many_arguments)]
fn element_block<T: Real>(
    mesh: &Mesh<T>,
    e: usize,
    prev: &[T],
    vel: &SlabVelocity<T>,
    mat: &MaterialField<T>,
    dt: T,
) -> ElementBlock<T> {
    let nodes = mesh.element(e);
    let n = nodes.len();
    let h = mesh.element_size(e);
    let z = T::zero();
    let mut blk = ElementBlock {
        k: [[z; 2 * MAX_NEN]; 2 * MAX_NEN],
        f: [z; 2 * MAX_NEN],
    };
    let dl = [-T::one(), T::one()];
    for ep in element_points(mesh, e) {
        let props = mat.at_point(nodes, &ep.n);
        let rc = props.rho_cp();
        let kappa = props.kappa;
        let alpha = kappa / rc;
        let mut ub: Vec2<T> = [z, z];
        let mut ut: Vec2<T> = [z, z];
        for (k, &i) in nodes.iter().enumerate() {
            for d in 0..2 {
                ub[d] += ep.n[k] * vel.bottom[i][d];
                ut[d] += ep.n[k] * vel.top[i][d];
            }
        }
        for (theta, wt) in temporal_rule::<T>() {
            let l = [T::one() - theta, theta];
            let u = [
                ub[0] + theta * (ut[0] - ub[0]),
                ub[1] + theta * (ut[1] - ub[1]),
            ];
            let tau = tau_advection_diffusion(h, u[0].hypot(u[1]), alpha, dt);
            let dv = ep.wdet * wt * dt;
            let mut adv = [z; MAX_NEN];
            for k in 0..n {
                adv[k] = u[0] * ep.dn[k][0] + u[1] * ep.dn[k][1];
            }
            for la in 0..2 {
                for a in 0..n {
                    let test = ep.n[a] * l[la];
                    let stream = ep.n[a] * dl[la] / dt + adv[a] * l[la];
                    let row = la * n + a;
                    for lb in 0..2 {
                        for b in 0..n {
                            let d_b = ep.n[b] * dl[lb] / dt + adv[b] * l[lb];
                            let diff = kappa
                                * (ep.dn[a][0] * ep.dn[b][0] + ep.dn[a][1] * ep.dn[b][1])
                                * l[la]
                                * l[lb];
                            blk.k[row][lb * n + b] +=
                                dv * (rc * test * d_b + diff + tau * rc * stream * d_b);
                        }
                    }
                }
            }
        }
        // jump term on the slab bottom
        for a in 0..n {
            for b in 0..n {
                let m = rc * ep.n[a] * ep.n[b] * ep.wdet;
                blk.k[a][b] += m;
                blk.f[a] += m * prev[nodes[b]];
            }
        }
    }
    blk
}

/// Assembles one heat slab. `prev` is the full-mesh temperature at the end
/// of the previous slab.
#[allow(clippy::too_many_arguments)]
pub fn assemble_heat_slab<T: Real>(
    mesh: &Mesh<T>,
    prev: &[T],
    velocity: &SlabVelocity<T>,
    materials: &MaterialField<T>,
    dt: T,
    region: Region<'_, T>,
    bc: &TempBoundary<T>,
) -> Result<HeatSystem<T>> {
    let nn = mesh.node_count();
    if prev.len() != nn
        || velocity.len() != nn
        || velocity.top.len() != nn
        || materials.node_count() != nn
    {
        return Err(Error::Assembly(format!(
            "field sizes ({}, {}, {}) do not match the mesh ({nn} nodes)",
            prev.len(),
            velocity.len(),
            materials.node_count()
        )));
    }
    if bc.dirichlet.len() != nn {
        return Err(Error::Assembly(
            "boundary table sized for a different mesh".into(),
        ));
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }

    let (elements, nodes, ghosts): (Vec<usize>, Vec<usize>, Vec<(usize, T)>) = match region {
        Region::Whole => (
            (0..mesh.element_count()).collect(),
            (0..nn).collect(),
            Vec::new(),
        ),
        Region::Subdomain(s) => (
            s.elements.clone(),
            s.active_nodes.clone(),
            s.ghost_nodes.iter().map(|&g| (g, s.ghost_value)).collect(),
        ),
    };
    let mut local = vec![usize::MAX; nn];
    for (l, &g) in nodes.iter().enumerate() {
        local[g] = l;
    }
    for &e in &elements {
        if e >= mesh.element_count() || mesh.element(e).iter().any(|&i| local[i] == usize::MAX) {
            return Err(Error::Assembly(format!(
                "element {e} references a node outside the active set"
            )));
        }
    }

    let local_elements: Vec<Vec<usize>> = elements
        .iter()
        .map(|&e| mesh.element(e).iter().map(|&i| local[i]).collect())
        .collect();
    let mut matrix =
        CsrMatrix::from_elements(nodes.len(), local_elements.iter().map(|v| v.as_slice()), 2);
    let mut rhs = vec![T::zero(); 2 * nodes.len()];

    // the previous slab seen by a phase also holds T_m on its ghosts
    let ghost_prev: Vec<T>;
    let prev = if ghosts.is_empty() {
        prev
    } else {
        let mut p = prev.to_vec();
        for &(g, v) in &ghosts {
            p[g] = v;
        }
        ghost_prev = p;
        &ghost_prev
    };
    let blocks: Vec<ElementBlock<T>> = elements
        .par_iter()
        .map(|&e| element_block(mesh, e, prev, velocity, materials, dt))
        .collect();
    for (le, blk) in local_elements.iter().zip(&blocks) {
        let n = le.len();
        for la in 0..2 {
            for a in 0..n {
                let r = 2 * le[a] + la;
                rhs[r] += blk.f[la * n + a];
                for lb in 0..2 {
                    for b in 0..n {
                        matrix.add(r, 2 * le[b] + lb, blk.k[la * n + a][lb * n + b])?;
                    }
                }
            }
        }
    }

    // Neumann flux on edges of active elements: each endpoint and level
    // receives q L dt / 4.
    let quarter = T::lit(0.25);
    for &(k, q) in &bc.neumann {
        let edge = &mesh.boundary_edges()[k];
        let [i, j] = edge.nodes;
        if local[i] == usize::MAX || local[j] == usize::MAX || local_elements.is_empty() {
            continue;
        }
        if let Region::Subdomain(s) = region {
            if s.elements.binary_search(&edge.element).is_err() {
                continue;
            }
        }
        let w = q * dist(mesh.node(i), mesh.node(j)) * dt * quarter;
        for node in [i, j] {
            rhs[2 * local[node]] += w;
            rhs[2 * local[node] + 1] += w;
        }
    }

    let mut fixed: Vec<Option<T>> = nodes.iter().map(|&g| bc.dirichlet[g]).collect();
    for &(g, v) in &ghosts {
        fixed[local[g]] = Some(v);
    }
    for (l, f) in fixed.iter().enumerate() {
        if let Some(v) = *f {
            for level in 0..2 {
                matrix.set_identity_row(2 * l + level);
                rhs[2 * l + level] = v;
            }
        }
    }
    Ok(HeatSystem {
        matrix,
        rhs,
        nodes,
        fixed,
    })
}

/// Assembles and solves one heat slab. Nodes outside the region keep their
/// previous values.
#[allow(clippy::too_many_arguments)]
pub fn solve_heat_slab<T: Real>(
    mesh: &Mesh<T>,
    prev: &[T],
    velocity: &SlabVelocity<T>,
    materials: &MaterialField<T>,
    dt: T,
    region: Region<'_, T>,
    bc: &TempBoundary<T>,
) -> Result<(TempField<T>, SolveReport)> {
    let sys = assemble_heat_slab(mesh, prev, velocity, materials, dt, region, bc)?;
    let mut x: Vec<T> = sys.nodes.iter().flat_map(|&g| [prev[g], prev[g]]).collect();
    let report = solve(&sys.matrix, &sys.rhs, &mut x, T::linear_tolerance())?;
    let mut out = TempField::new(prev.to_vec());
    for (l, &g) in sys.nodes.iter().enumerate() {
        let (b, t) = match sys.fixed[l] {
            Some(v) => (v, v),
            None => (x[2 * l], x[2 * l + 1]),
        };
        if !b.is_finite() || !t.is_finite() {
            return Err(Error::Solver(format!("non-finite temperature at node {g}")));
        }
        out.bottom[g] = b;
        out.top[g] = t;
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::PhaseProps;
    use crate::mesh::StructuredSpec;

    fn water() -> PhaseProps<f64> {
        PhaseProps::new(1000.0, 4200.0, 0.6, 1e-3)
    }

    #[test]
    fn uniform_field_is_stationary() {
        let m = StructuredSpec::new(6, 4, 1.0, 1.0)
            .tri()
            .build::<f64>()
            .unwrap();
        let n = m.node_count();
        let mat = MaterialField::uniform(water(), n);
        let bc = TempBoundary::new(n);
        let mut t = vec![290.0; n];
        for _ in 0..5 {
            let (f, _) = solve_heat_slab(
                &m,
                &t,
                &SlabVelocity::zeros(n),
                &mat,
                10.0,
                Region::Whole,
                &bc,
            )
            .unwrap();
            t = f.top;
        }
        assert!(t.iter().all(|&v| (v - 290.0).abs() < 1e-10));
    }

    #[test]
    fn linear_steady_state_is_exact() {
        for kind in [
            crate::mesh::ElementKind::Tri,
            crate::mesh::ElementKind::Quad,
        ] {
            let m = StructuredSpec::new(7, 3, 2.0, 1.0)
                .kind(kind)
                .build::<f64>()
                .unwrap();
            let n = m.node_count();
            let exact: Vec<f64> = m.coords().iter().map(|p| 3.0 * p[0] + 1.0).collect();
            let bc = TempBoundary::new(n)
                .with_dirichlet(&m, "left", 1.0)
                .unwrap()
                .with_dirichlet(&m, "right", 7.0)
                .unwrap();
            let mat = MaterialField::uniform(water(), n);
            let (f, _) = solve_heat_slab(
                &m,
                &exact,
                &SlabVelocity::zeros(n),
                &mat,
                0.5,
                Region::Whole,
                &bc,
            )
            .unwrap();
            for (a, b) in f.top.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-12 * 7.0, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn system_dimension_counts_active_nodes() {
        let m = StructuredSpec::new(4, 4, 1.0, 1.0).build::<f64>().unwrap();
        let n = m.node_count();
        let spec = SubdomainSpec {
            phase: Phase::Liquid,
            elements: vec![0, 1],
            active_nodes: vec![0, 1, 2, 5, 6, 7],
            ghost_nodes: vec![2, 7],
            ghost_value: 0.0,
        };
        let sys = assemble_heat_slab(
            &m,
            &vec![0.0; n],
            &SlabVelocity::zeros(n),
            &MaterialField::uniform(water(), n),
            1.0,
            Region::Subdomain(&spec),
            &TempBoundary::new(n),
        )
        .unwrap();
        assert_eq!(sys.dimension(), 12);
        let bad = SubdomainSpec {
            active_nodes: vec![0, 1, 5],
            ..spec
        };
        assert!(matches!(
            assemble_heat_slab(
                &m,
                &vec![0.0; n],
                &SlabVelocity::zeros(n),
                &MaterialField::uniform(water(), n),
                1.0,
                Region::Subdomain(&bad),
                &TempBoundary::new(n),
            ),
            Err(Error::Assembly(_))
        ));
    }

    #[test]
    fn maximum_principle_for_conduction() {
        let m = StructuredSpec::new(20, 4, 0.01, 0.002)
            .build::<f64>()
            .unwrap();
        let n = m.node_count();
        let bc = TempBoundary::new(n)
            .with_dirichlet(&m, "left", 300.0)
            .unwrap();
        let mat = MaterialField::uniform(water(), n);
        let mut t = vec![273.0; n];
        for _ in 0..20 {
            let (f, _) = solve_heat_slab(
                &m,
                &t,
                &SlabVelocity::zeros(n),
                &mat,
                0.5,
                Region::Whole,
                &bc,
            )
            .unwrap();
            t = f.top;
        }
        let tol = 1e-8 * 27.0;
        assert!(t.iter().all(|&v| v >= 273.0 - tol && v <= 300.0 + tol));
    }

    #[test]
    fn unknown_tag_is_rejected() {
        let m = StructuredSpec::new(2, 2, 1.0, 1.0).build::<f64>().unwrap();
        assert!(TempBoundary::new(m.node_count())
            .with_dirichlet(&m, "inflow", 1.0)
            .is_err());
    }

    #[test]
    fn neumann_flux_balances_storage() {
        // insulated box heated through one side: stored energy equals the
        // injected heat q * L * dt
        let m = StructuredSpec::new(4, 4, 1.0, 1.0).build::<f64>().unwrap();
        let n = m.node_count();
        let props = PhaseProps::new(1.0, 1.0, 1.0, 1.0);
        let bc = TempBoundary::new(n).with_neumann(&m, "left", 2.0).unwrap();
        let (f, _) = solve_heat_slab(
            &m,
            &vec![0.0; n],
            &SlabVelocity::zeros(n),
            &MaterialField::uniform(props, n),
            0.5,
            Region::Whole,
            &bc,
        )
        .unwrap();
        let mut energy = 0.0;
        for e in 0..m.element_count() {
            for ep in element_points(&m, e) {
                let t: f64 = m
                    .element(e)
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| ep.n[k] * f.top[i])
                    .sum();
                energy += t * ep.wdet;
            }
        }
        assert!((energy - 1.0).abs() < 1e-10, "{energy}");
    }
}
