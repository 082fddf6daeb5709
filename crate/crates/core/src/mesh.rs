//! Triangular meshes with the edge/vertex connectivity used by the estimators.
//!
//! Conventions:
//! - triangles are stored counterclockwise; local edge `k` joins local
//!   vertices `k` and `(k + 1) % 3`;
//! - every edge is stored once, oriented from its lower to its higher node index;
//! - the sign `eta` of an (edge, element) pair is `+1` for the adjacent element
//!   with the smaller index and `-1` for the other one. A traction stored on an
//!   edge therefore equals `sigma n` with `n` the outward normal of the
//!   lower-index neighbour.

use std::collections::HashMap;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};

/// Boundary behaviour of one displacement component on a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcKind {
    /// Prescribed displacement component (part of the Dirichlet boundary).
    Dirichlet,
    /// Prescribed traction component (part of the Neumann boundary).
    Neumann,
}

/// Condition attached to a boundary edge.
///
/// Each component is tagged independently so that symmetry planes (rollers)
/// can be represented. `group` indexes the boundary data of a
/// [`LoadCase`](crate::fem::LoadCase).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundaryCondition {
    pub kinds: [BcKind; 2],
    pub group: usize,
}

impl BoundaryCondition {
    pub fn dirichlet(group: usize) -> Self {
        Self { kinds: [BcKind::Dirichlet; 2], group }
    }

    pub fn neumann(group: usize) -> Self {
        Self { kinds: [BcKind::Neumann; 2], group }
    }

    /// Normal displacement fixed on a line `x = const`, tangential traction prescribed.
    pub fn roller_x(group: usize) -> Self {
        Self { kinds: [BcKind::Dirichlet, BcKind::Neumann], group }
    }

    /// Normal displacement fixed on a line `y = const`, tangential traction prescribed.
    pub fn roller_y(group: usize) -> Self {
        Self { kinds: [BcKind::Neumann, BcKind::Dirichlet], group }
    }

    pub fn is_dirichlet(&self, component: usize) -> bool {
        self.kinds[component] == BcKind::Dirichlet
    }

    pub fn is_neumann(&self, component: usize) -> bool {
        self.kinds[component] == BcKind::Neumann
    }
}

/// Coarse classification of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Interior,
    Dirichlet,
    Neumann,
    /// One component prescribed in displacement, the other in traction.
    Mixed,
}

/// Assigns a boundary condition to each boundary edge from its end points.
pub trait BoundarySpec {
    fn classify(&self, a: &Point2<f64>, b: &Point2<f64>) -> Option<BoundaryCondition>;
}

impl<F> BoundarySpec for F
where
    F: Fn(&Point2<f64>, &Point2<f64>) -> Option<BoundaryCondition>,
{
    fn classify(&self, a: &Point2<f64>, b: &Point2<f64>) -> Option<BoundaryCondition> {
        self(a, b)
    }
}

/// Immutable triangular mesh with all adjacency sets.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    element_edges: Vec<[usize; 3]>,
    edge_elements: Vec<(usize, Option<usize>)>,
    boundary: Vec<Option<BoundaryCondition>>,
    node_elements: Vec<Vec<usize>>,
    node_edges: Vec<Vec<usize>>,
    areas: Vec<f64>,
}

/// Mesh after uniform refinement together with the child-to-parent element map.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: Mesh,
    /// `parent[e]` is the element of the original mesh containing fine element `e`.
    pub parent: Vec<usize>,
}

/// Star of a vertex: the elements and edges touching it.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub vertex: usize,
    pub elements: Vec<usize>,
    /// Edges containing the vertex.
    pub edges: Vec<usize>,
    /// For each entry of `edges`, the boundary condition if it lies on the boundary.
    pub edge_conditions: Vec<Option<BoundaryCondition>>,
}

impl Patch {
    /// `true` when the star is a closed fan around an interior vertex.
    pub fn is_interior(&self) -> bool {
        self.edge_conditions.iter().all(Option::is_none)
    }

    /// `true` if some patch edge is fixed in displacement (any component).
    pub fn touches_dirichlet(&self) -> bool {
        self.edge_conditions
            .iter()
            .flatten()
            .any(|bc| bc.kinds.contains(&BcKind::Dirichlet))
    }

    pub fn touches_neumann(&self) -> bool {
        self.edge_conditions
            .iter()
            .flatten()
            .any(|bc| bc.kinds.contains(&BcKind::Neumann))
    }
}

fn signed_area(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl Mesh {
    /// Builds the mesh topology and classifies the boundary.
    ///
    /// Fails on out-of-range node indices, non-positive triangle areas, edges
    /// shared by more than two triangles, unreferenced nodes and boundary edges
    /// the spec leaves untagged.
    pub fn build(
        nodes: Vec<Point2<f64>>,
        triangles: Vec<[usize; 3]>,
        spec: &impl BoundarySpec,
    ) -> Result<Self> {
        let mut tagged = Self::build_untagged(nodes, triangles)?;
        for e in 0..tagged.edges.len() {
            if tagged.edge_elements[e].1.is_some() {
                continue;
            }
            let [a, b] = tagged.edges[e];
            let bc = spec
                .classify(&tagged.nodes[a], &tagged.nodes[b])
                .ok_or(Error::UntaggedBoundaryEdge { edge: e, nodes: [a, b] })?;
            tagged.boundary[e] = Some(bc);
        }
        Ok(tagged)
    }

    fn build_untagged(nodes: Vec<Point2<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n_nodes = nodes.len();
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= n_nodes) {
                return Err(Error::InvalidNodeIndex { element: t, node: bad });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvertedElement { element: t, area: 0.0 });
            }
            let area = signed_area(&nodes[tri[0]], &nodes[tri[1]], &nodes[tri[2]]);
            if area.is_nan() || area <= 0.0 {
                return Err(Error::InvertedElement { element: t, area });
            }
            areas.push(area);
        }

        let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut adjacency: Vec<Vec<usize>> = Vec::new();
        let mut element_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0; 3];
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    adjacency.push(Vec::new());
                    edges.len() - 1
                });
                adjacency[id].push(t);
                local[k] = id;
            }
            element_edges.push(local);
        }

        let mut edge_elements = Vec::with_capacity(edges.len());
        for (e, adj) in adjacency.iter().enumerate() {
            match adj.as_slice() {
                [a] => edge_elements.push((*a, None)),
                [a, b] => edge_elements.push(((*a).min(*b), Some((*a).max(*b)))),
                _ => {
                    return Err(Error::NonManifoldEdge { edge: e, nodes: edges[e], count: adj.len() })
                }
            }
        }

        let mut node_elements = vec![Vec::new(); n_nodes];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                node_elements[v].push(t);
            }
        }
        let mut node_edges = vec![Vec::new(); n_nodes];
        for (e, &[a, b]) in edges.iter().enumerate() {
            node_edges[a].push(e);
            node_edges[b].push(e);
        }
        if let Some(orphan) = node_elements.iter().position(Vec::is_empty) {
            return Err(Error::UnreferencedNode { node: orphan });
        }

        let n_edges = edges.len();
        Ok(Self {
            nodes,
            triangles,
            edges,
            element_edges,
            edge_elements,
            boundary: vec![None; n_edges],
            node_elements,
            node_edges,
            areas,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Point2<f64>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Point2<f64> {
        &self.nodes[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, e: usize) -> [usize; 3] {
        self.triangles[e]
    }

    pub fn vertices(&self, e: usize) -> [Point2<f64>; 3] {
        let [a, b, c] = self.triangles[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn area(&self, e: usize) -> f64 {
        self.areas[e]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Canonically oriented end points (lower node index first).
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn element_edges(&self, e: usize) -> [usize; 3] {
        self.element_edges[e]
    }

    /// Adjacent elements of an edge, lower index first.
    pub fn edge_elements(&self, edge: usize) -> (usize, Option<usize>) {
        self.edge_elements[edge]
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_elements[edge].1.is_none()
    }

    pub fn boundary_condition(&self, edge: usize) -> Option<BoundaryCondition> {
        self.boundary[edge]
    }

    pub fn edge_tag(&self, edge: usize) -> EdgeTag {
        match self.boundary[edge] {
            None => EdgeTag::Interior,
            Some(bc) => match bc.kinds {
                [BcKind::Dirichlet, BcKind::Dirichlet] => EdgeTag::Dirichlet,
                [BcKind::Neumann, BcKind::Neumann] => EdgeTag::Neumann,
                _ => EdgeTag::Mixed,
            },
        }
    }

    /// Elements containing node `i`, ascending.
    pub fn node_elements(&self, i: usize) -> &[usize] {
        &self.node_elements[i]
    }

    /// Edges containing node `i`, ascending.
    pub fn node_edges(&self, i: usize) -> &[usize] {
        &self.node_edges[i]
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        (self.nodes[b] - self.nodes[a]).norm()
    }

    /// Orientation sign of the (edge, element) pair.
    pub fn eta(&self, edge: usize, element: usize) -> f64 {
        match self.edge_elements[edge] {
            (first, _) if first == element => 1.0,
            (_, Some(second)) if second == element => -1.0,
            _ => panic!("element {element} is not adjacent to edge {edge}"),
        }
    }

    /// Unit normal of an edge, outward for its lower-index neighbour.
    pub fn edge_normal(&self, edge: usize) -> Vector2<f64> {
        let first = self.edge_elements[edge].0;
        let k = self.local_edge(first, edge).expect("adjacency is consistent");
        self.outward_normal(first, k)
    }

    /// Outward unit normal of local edge `k` of element `e`.
    pub fn outward_normal(&self, e: usize, k: usize) -> Vector2<f64> {
        let tri = self.triangles[e];
        let d = self.nodes[tri[(k + 1) % 3]] - self.nodes[tri[k]];
        // counterclockwise triangles: the outward normal is the tangent rotated clockwise
        Vector2::new(d.y, -d.x).normalize()
    }

    /// Position of `edge` among the local edges of element `e`.
    pub fn local_edge(&self, e: usize, edge: usize) -> Option<usize> {
        self.element_edges[e].iter().position(|&x| x == edge)
    }

    /// Position of `node` among the vertices of element `e`.
    pub fn local_vertex(&self, e: usize, node: usize) -> Option<usize> {
        self.triangles[e].iter().position(|&x| x == node)
    }

    /// Index of the edge joining two nodes, if any.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let key = edge_key(a, b);
        self.node_edges[a].iter().copied().find(|&e| self.edges[e] == key)
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.node_edges[i].iter().any(|&e| self.is_boundary_edge(e))
    }

    /// Whether component `c` of node `i` is prescribed by some adjacent Dirichlet edge.
    pub fn is_dirichlet_dof(&self, i: usize, c: usize) -> bool {
        self.node_edges[i]
            .iter()
            .any(|&e| self.boundary[e].is_some_and(|bc| bc.is_dirichlet(c)))
    }

    /// Star of vertex `i`.
    pub fn patch(&self, vertex: usize) -> Patch {
        let edges = self.node_edges[vertex].clone();
        let edge_conditions = edges.iter().map(|&e| self.boundary[e]).collect();
        Patch { vertex, elements: self.node_elements[vertex].clone(), edges, edge_conditions }
    }

    /// Maximum edge length.
    pub fn max_edge_length(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Splits every triangle into four similar ones, `levels` times.
    ///
    /// Boundary conditions of new boundary edges are inherited from the parent
    /// edge, and the child nodes keep the parent nodes as a prefix, so the
    /// piecewise-linear space on the input mesh is a subspace of the refined one.
    pub fn refine_uniform(&self, levels: usize) -> Refinement {
        let mut mesh = self.clone();
        let mut parent: Vec<usize> = (0..self.num_elements()).collect();
        for _ in 0..levels {
            let (fine, local_parent) = mesh.refine_once();
            parent = local_parent.iter().map(|&p| parent[p]).collect();
            mesh = fine;
        }
        Refinement { mesh, parent }
    }

    fn refine_once(&self) -> (Mesh, Vec<usize>) {
        let mut nodes = self.nodes.clone();
        let mut midpoint = Vec::with_capacity(self.num_edges());
        for &[a, b] in &self.edges {
            midpoint.push(nodes.len());
            nodes.push(nalgebra::center(&self.nodes[a], &self.nodes[b]));
        }
        let mut triangles = Vec::with_capacity(4 * self.num_elements());
        let mut parent = Vec::with_capacity(4 * self.num_elements());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let [eab, ebc, eca] = self.element_edges[t];
            let (mab, mbc, mca) = (midpoint[eab], midpoint[ebc], midpoint[eca]);
            triangles.extend_from_slice(&[[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]]);
            parent.extend_from_slice(&[t; 4]);
        }
        let mut fine = Mesh::build_untagged(nodes, triangles).expect("refinement preserves validity");
        for e in 0..fine.num_edges() {
            if !fine.is_boundary_edge(e) {
                continue;
            }
            let [a, b] = fine.edges[e];
            // one end point of a boundary child edge is the midpoint of its parent edge
            let (old, mid) = if a < self.num_nodes() { (a, b) } else { (b, a) };
            let parent_edge = mid - self.num_nodes();
            debug_assert!(self.edges[parent_edge].contains(&old));
            fine.boundary[e] = self.boundary[parent_edge];
        }
        (fine, parent)
    }
}
