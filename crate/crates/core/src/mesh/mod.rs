//! Immutable 2D meshes of triangles or axis-aligned quadrilaterals.
//!
//! Elements are stored counter-clockwise. Besides connectivity the mesh keeps
//! the adjacency needed by assembly and flux recovery:
//! - node -> elements (the node patch)
//! - unique undirected edges and edge -> elements
//! - node -> edge-adjacent neighbours
//! - tagged boundary edges, each owned by exactly one element

mod generate;
mod io;

pub use generate::{RectilinearGrid, Side, StructuredSpec};
pub use io::{load_mesh, save_mesh};

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::scalar::{dist, Real, Vec2};

/// Element shape. A mesh holds a single kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Tri,
    Quad,
}

impl ElementKind {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementKind::Tri => 3,
            ElementKind::Quad => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Tri => "tri",
            ElementKind::Quad => "quad",
        }
    }
}

impl std::str::FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tri" => Ok(ElementKind::Tri),
            "quad" => Ok(ElementKind::Quad),
            other => invalid(format!("unknown element kind `{other}`")),
        }
    }
}

/// Symbolic boundary name such as `left`, `top` or `inflow`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryTag(String);

impl BoundaryTag {
    pub fn new(name: impl Into<String>) -> Self {
        BoundaryTag(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BoundaryTag {
    fn from(s: &str) -> Self {
        BoundaryTag::new(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    /// The single element this edge belongs to.
    pub element: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh<T> {
    kind: ElementKind,
    coords: Vec<Vec2<T>>,
    connectivity: Vec<usize>,
    boundary: Vec<BoundaryEdge>,
    node_elements: Vec<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    edge_elements: Vec<Vec<usize>>,
    node_neighbors: Vec<Vec<usize>>,
}

fn signed_area<T: Real>(pts: &[Vec2<T>]) -> T {
    let n = pts.len();
    let mut twice = T::zero();
    for k in 0..n {
        let a = pts[k];
        let b = pts[(k + 1) % n];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    twice * T::lit(0.5)
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh from raw node coordinates, element connectivity and
    /// tagged boundary edges. Clockwise elements are reordered to
    /// counter-clockwise; degenerate elements are rejected.
    pub fn new(
        kind: ElementKind,
        coords: Vec<Vec2<T>>,
        elements: Vec<Vec<usize>>,
        boundary: Vec<(usize, usize, BoundaryTag)>,
    ) -> Result<Self> {
        let mut mesh = Self::from_elements(kind, coords, elements)?;
        for (i, j, tag) in boundary {
            mesh.attach_boundary_edge(i, j, tag)?;
        }
        Ok(mesh)
    }

    /// Checks one element; returns `true` when it is stored clockwise.
    pub(crate) fn check_element(
        kind: ElementKind,
        coords: &[Vec2<T>],
        e: usize,
        el: &[usize],
    ) -> Result<bool> {
        let nen = kind.nodes_per_element();
        let n_nodes = coords.len();
        if el.len() != nen {
            return Err(Error::Validation(format!(
                "element {e} has {} nodes, expected {nen}",
                el.len()
            )));
        }
        if let Some(&bad) = el.iter().find(|&&i| i >= n_nodes) {
            return Err(Error::Validation(format!(
                "element {e} references node {bad} but the mesh has {n_nodes} nodes"
            )));
        }
        let pts: Vec<_> = el.iter().map(|&i| coords[i]).collect();
        let area = signed_area(&pts);
        let scale = pts.iter().map(|p| dist(*p, pts[0])).fold(T::zero(), T::max);
        if !area.is_finite() || area.abs() <= T::epsilon() * T::lit(16.0) * scale * scale {
            return Err(Error::Validation(format!(
                "element {e} is degenerate (zero area)"
            )));
        }
        Ok(area < T::zero())
    }

    pub(crate) fn from_elements(
        kind: ElementKind,
        coords: Vec<Vec2<T>>,
        elements: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let nen = kind.nodes_per_element();
        let n_nodes = coords.len();
        if coords
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::Validation("non-finite node coordinate".into()));
        }
        let mut connectivity = Vec::with_capacity(elements.len() * nen);
        for (e, el) in elements.iter().enumerate() {
            if Self::check_element(kind, &coords, e, el)? {
                connectivity.push(el[0]);
                connectivity.extend(el[1..].iter().rev());
            } else {
                connectivity.extend_from_slice(el);
            }
        }

        let n_el = elements.len();
        let mut node_elements = vec![Vec::new(); n_nodes];
        for e in 0..n_el {
            for &i in &connectivity[e * nen..(e + 1) * nen] {
                node_elements[i].push(e);
            }
        }

        let mut edge_list: Vec<([usize; 2], usize)> = Vec::with_capacity(n_el * nen);
        for e in 0..n_el {
            let el = &connectivity[e * nen..(e + 1) * nen];
            for k in 0..nen {
                let (a, b) = (el[k], el[(k + 1) % nen]);
                edge_list.push(([a.min(b), a.max(b)], e));
            }
        }
        edge_list.sort_unstable();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_elements: Vec<Vec<usize>> = Vec::new();
        for (edge, e) in edge_list {
            if edges.last() == Some(&edge) {
                edge_elements.last_mut().unwrap().push(e);
            } else {
                edges.push(edge);
                edge_elements.push(vec![e]);
            }
        }

        let mut node_neighbors = vec![Vec::new(); n_nodes];
        for &[a, b] in &edges {
            node_neighbors[a].push(b);
            node_neighbors[b].push(a);
        }
        for nb in &mut node_neighbors {
            nb.sort_unstable();
        }

        Ok(Mesh {
            kind,
            coords,
            connectivity,
            boundary: Vec::new(),
            node_elements,
            edges,
            edge_elements,
            node_neighbors,
        })
    }

    pub(crate) fn attach_boundary_edge(
        &mut self,
        i: usize,
        j: usize,
        tag: BoundaryTag,
    ) -> Result<()> {
        let n_nodes = self.node_count();
        if i >= n_nodes || j >= n_nodes {
            return Err(Error::Validation(format!(
                "boundary edge ({i}, {j}) references a node outside 0..{n_nodes}"
            )));
        }
        let owners = self
            .edge_index(i, j)
            .map(|k| self.edge_elements[k].as_slice())
            .unwrap_or(&[]);
        if owners.len() != 1 {
            return Err(Error::Validation(format!(
                "boundary edge ({i}, {j}) belongs to {} elements, expected exactly one",
                owners.len()
            )));
        }
        let element = owners[0];
        self.boundary.push(BoundaryEdge {
            nodes: [i, j],
            tag,
            element,
        });
        Ok(())
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn nodes_per_element(&self) -> usize {
        self.kind.nodes_per_element()
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn element_count(&self) -> usize {
        self.connectivity.len() / self.nodes_per_element()
    }

    pub fn coords(&self) -> &[Vec2<T>] {
        &self.coords
    }

    pub fn node(&self, i: usize) -> Vec2<T> {
        self.coords[i]
    }

    /// Node indices of element `e`, counter-clockwise.
    pub fn element(&self, e: usize) -> &[usize] {
        let nen = self.nodes_per_element();
        &self.connectivity[e * nen..(e + 1) * nen]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.connectivity.chunks_exact(self.nodes_per_element())
    }

    pub fn element_coords(&self, e: usize) -> Vec<Vec2<T>> {
        self.element(e).iter().map(|&i| self.coords[i]).collect()
    }

    pub fn element_area(&self, e: usize) -> T {
        signed_area(&self.element_coords(e))
    }

    pub fn element_centroid(&self, e: usize) -> Vec2<T> {
        let pts = self.element_coords(e);
        let n = T::from_count(pts.len());
        let sx: T = pts.iter().map(|p| p[0]).sum();
        let sy: T = pts.iter().map(|p| p[1]).sum();
        [sx / n, sy / n]
    }

    /// Characteristic element length used by the stabilization parameters.
    pub fn element_size(&self, e: usize) -> T {
        let a = self.element_area(e);
        match self.kind {
            ElementKind::Tri => (a + a).sqrt(),
            ElementKind::Quad => a.sqrt(),
        }
    }

    pub fn total_area(&self) -> T {
        (0..self.element_count())
            .map(|e| self.element_area(e))
            .sum()
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Unique undirected edges as `[min, max]` node pairs, sorted.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_elements(&self, edge: usize) -> &[usize] {
        &self.edge_elements[edge]
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = [i.min(j), i.max(j)];
        self.edges.binary_search(&key).ok()
    }

    pub fn node_neighbors(&self, node: usize) -> &[usize] {
        &self.node_neighbors[node]
    }

    /// Elements containing `node`, without duplicates.
    pub fn node_patch(&self, node: usize) -> Result<&[usize]> {
        match self.node_elements.get(node) {
            Some(p) => Ok(p),
            None => invalid(format!(
                "node {node} out of range (mesh has {} nodes)",
                self.node_count()
            )),
        }
    }

    /// Minimum Euclidean length over all element edges.
    pub fn min_face_length(&self) -> T {
        self.edges
            .iter()
            .map(|&[a, b]| dist(self.coords[a], self.coords[b]))
            .fold(T::infinity(), T::min)
    }

    pub fn tags(&self) -> Vec<BoundaryTag> {
        let mut tags: Vec<_> = self.boundary.iter().map(|b| b.tag.clone()).collect();
        tags.sort();
        tags.dedup();
        tags
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.boundary.iter().any(|b| b.tag.as_str() == tag)
    }

    /// Sorted nodes lying on edges carrying `tag`.
    pub fn nodes_with_tag(&self, tag: &str) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .boundary
            .iter()
            .filter(|b| b.tag.as_str() == tag)
            .flat_map(|b| b.nodes)
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Outward unit normal of a boundary edge.
    pub fn boundary_edge_normal(&self, edge: &BoundaryEdge) -> Vec2<T> {
        let [a, b] = edge.nodes;
        let (pa, pb) = (self.coords[a], self.coords[b]);
        let t = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = t[0].hypot(t[1]);
        let mut n = [t[1] / len, -t[0] / len];
        let c = self.element_centroid(edge.element);
        let mid = [(pa[0] + pb[0]) * T::lit(0.5), (pa[1] + pb[1]) * T::lit(0.5)];
        if n[0] * (mid[0] - c[0]) + n[1] * (mid[1] - c[1]) < T::zero() {
            n = [-n[0], -n[1]];
        }
        n
    }

    /// Averaged outward normals at boundary nodes; `None` for interior nodes.
    pub fn boundary_node_normals(&self) -> Vec<Option<Vec2<T>>> {
        let mut acc: Vec<Option<Vec2<T>>> = vec![None; self.node_count()];
        for edge in &self.boundary {
            let n = self.boundary_edge_normal(edge);
            for &i in &edge.nodes {
                let s = acc[i].get_or_insert([T::zero(), T::zero()]);
                s[0] += n[0];
                s[1] += n[1];
            }
        }
        for n in acc.iter_mut().flatten() {
            let len = n[0].hypot(n[1]);
            if len > T::zero() {
                n[0] /= len;
                n[1] /= len;
            }
        }
        acc
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec2<T>, Vec2<T>) {
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for p in &self.coords {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_quads(n: usize) -> Mesh<f64> {
        StructuredSpec::new(n, n, 1.0, 1.0).quad().build().unwrap()
    }

    #[test]
    fn structured_counts() {
        let m = StructuredSpec::new(2, 2, 1.0, 1.0)
            .quad()
            .build::<f64>()
            .unwrap();
        assert_eq!((m.node_count(), m.element_count()), (9, 4));
        let t = StructuredSpec::new(10, 10, 1.0, 1.0)
            .tri()
            .build::<f64>()
            .unwrap();
        assert_eq!((t.node_count(), t.element_count()), (121, 200));
    }

    #[test]
    fn min_face_length_uniform_and_rectangular() {
        let m = StructuredSpec::new(10, 10, 0.01, 0.01)
            .quad()
            .build::<f64>()
            .unwrap();
        assert_relative_eq!(m.min_face_length(), 1e-3, max_relative = 1e-12);
        let r = StructuredSpec::new(1, 1, 1.0, 2.0)
            .quad()
            .build::<f64>()
            .unwrap();
        assert_relative_eq!(r.min_face_length(), 1.0);
    }

    #[test]
    fn patch_sizes_on_quad_grid() {
        let m = unit_quads(4);
        // node (2,2) interior, (0,0) corner, (2,0) bottom edge
        assert_eq!(m.node_patch(2 * 5 + 2).unwrap().len(), 4);
        assert_eq!(m.node_patch(0).unwrap().len(), 1);
        assert_eq!(m.node_patch(2).unwrap().len(), 2);
        assert!(matches!(m.node_patch(25), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn area_sums_to_domain() {
        for kind in [ElementKind::Tri, ElementKind::Quad] {
            let m = StructuredSpec::new(7, 3, 2.5, 0.75)
                .kind(kind)
                .build::<f64>()
                .unwrap();
            assert_relative_eq!(m.total_area(), 2.5 * 0.75, max_relative = 1e-12);
            assert!((0..m.element_count()).all(|e| m.element_area(e) > 0.0));
        }
    }

    #[test]
    fn patch_membership_is_consistent() {
        let m = StructuredSpec::new(5, 4, 1.0, 1.0)
            .tri()
            .build::<f64>()
            .unwrap();
        for node in 0..m.node_count() {
            for &e in m.node_patch(node).unwrap() {
                assert!(m.element(e).contains(&node));
            }
        }
        for e in 0..m.element_count() {
            for &node in m.element(e) {
                assert!(m.node_patch(node).unwrap().contains(&e));
            }
        }
    }

    #[test]
    fn clockwise_elements_are_reoriented() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = Mesh::new(ElementKind::Tri, coords, vec![vec![0, 2, 1]], vec![]).unwrap();
        assert_relative_eq!(m.element_area(0), 0.5);
    }

    #[test]
    fn rejects_bad_boundary_and_degenerate() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(Mesh::new(ElementKind::Tri, coords, vec![vec![0, 1, 2]], vec![]).is_err());
        let m = unit_quads(2);
        let coords = m.coords().to_vec();
        let els: Vec<Vec<usize>> = m.elements().map(|e| e.to_vec()).collect();
        // interior edge 4-5 is shared by two elements
        let r = Mesh::new(ElementKind::Quad, coords, els, vec![(4, 5, "x".into())]);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn boundary_normals_point_outward() {
        let m = unit_quads(3);
        for edge in m.boundary_edges() {
            let n = m.boundary_edge_normal(edge);
            let expected = match edge.tag.as_str() {
                "left" => [-1.0, 0.0],
                "right" => [1.0, 0.0],
                "bottom" => [0.0, -1.0],
                "top" => [0.0, 1.0],
                _ => unreachable!(),
            };
            assert_relative_eq!(n[0], expected[0], epsilon = 1e-14);
            assert_relative_eq!(n[1], expected[1], epsilon = 1e-14);
        }
    }
}
