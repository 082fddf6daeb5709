use nalgebra::{Point2, Vector2};

use crate::mesh::Mesh;

/// Affine map of the reference triangle onto a mesh element.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub vertices: [Point2<f64>; 3],
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [Vector2<f64>; 3],
}

impl TriangleGeometry {
    pub fn new(vertices: [Point2<f64>; 3]) -> Self {
        let [a, b, c] = vertices;
        let twice = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        let grad_lambda = [
            Vector2::new(b.y - c.y, c.x - b.x) / twice,
            Vector2::new(c.y - a.y, a.x - c.x) / twice,
            Vector2::new(a.y - b.y, b.x - a.x) / twice,
        ];
        Self { vertices, area: 0.5 * twice, grad_lambda }
    }

    pub fn of(mesh: &Mesh, e: usize) -> Self {
        Self::new(mesh.vertices(e))
    }

    pub fn point(&self, l: [f64; 3]) -> Point2<f64> {
        let [a, b, c] = self.vertices;
        Point2::from(a.coords * l[0] + b.coords * l[1] + c.coords * l[2])
    }

    /// Physical gradient from barycentric partial derivatives.
    pub fn gradient(&self, dl: &[f64; 3]) -> Vector2<f64> {
        self.grad_lambda[0] * dl[0] + self.grad_lambda[1] * dl[1] + self.grad_lambda[2] * dl[2]
    }

    /// Quadrature weight scale from the reference triangle (area 1/2).
    pub fn jacobian(&self) -> f64 {
        2.0 * self.area
    }

    /// Barycentric coordinates of the point at parameter `t` along local edge
    /// `k`, measured from local vertex `k` to local vertex `k + 1`.
    pub fn edge_point(k: usize, t: f64) -> [f64; 3] {
        let mut l = [0.0; 3];
        l[k] = 1.0 - t;
        l[(k + 1) % 3] = t;
        l
    }

    pub fn edge_length(&self, k: usize) -> f64 {
        (self.vertices[(k + 1) % 3] - self.vertices[k]).norm()
    }

    pub fn centroid(&self) -> Point2<f64> {
        self.point([1.0 / 3.0; 3])
    }
}
