//! Polynomial spaces, quadrature and the penalty convention shared by every
//! element-level computation.

use crate::basis::{physical_gradients, physical_values, triangle_dim, EdgeBasis, Tabulation, TriangleBasis};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, Side};
use crate::quadrature::{edge_quadrature, triangle_quadrature, EdgeRule, TriangleRule};

/// Length scale `h` in the `h⁻¹` penalty of the numerical fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StabilizationScale {
    /// Length of the face carrying the penalty.
    #[default]
    FaceLength,
    /// Largest element diameter of the mesh.
    MeshSize,
}

/// Spaces of degree `k`: fluxes and pressures in `P_k`, velocities in `P_{k+1}`,
/// traces and controls in `P_k` on each face.
#[derive(Debug, Clone)]
pub struct Discretization {
    degree: usize,
    pub flux_basis: TriangleBasis,
    pub velocity_basis: TriangleBasis,
    pub edge_basis: EdgeBasis,
    pub volume_rule: TriangleRule,
    pub load_rule: TriangleRule,
    pub edge_rule: EdgeRule,
    pub stabilization: StabilizationScale,
    flux_table: Tabulation,
    velocity_table: Tabulation,
}

/// Physical values of every basis at one quadrature point on a face of an element.
#[derive(Debug, Clone)]
pub struct FacePoint {
    pub x: Point,
    /// Weight including the length element.
    pub weight: f64,
    pub flux: Vec<f64>,
    pub velocity: Vec<f64>,
    pub edge: Vec<f64>,
}

/// One face of an element seen from that element.
#[derive(Debug, Clone)]
pub struct ElementFace {
    pub face: usize,
    pub side: Side,
    pub normal: Point,
    pub tangent: Point,
    pub is_boundary: bool,
    pub penalty: f64,
    pub points: Vec<FacePoint>,
}

/// Physical values and gradients at one volume quadrature point.
#[derive(Debug, Clone)]
pub struct VolumePoint {
    pub x: Point,
    pub weight: f64,
    pub flux: Vec<f64>,
    pub flux_gradient: Vec<Point>,
    pub velocity: Vec<f64>,
    pub velocity_gradient: Vec<Point>,
}

impl Discretization {
    pub fn new(degree: usize) -> Result<Self> {
        Self::with_stabilization(degree, StabilizationScale::default())
    }

    pub fn with_stabilization(degree: usize, stabilization: StabilizationScale) -> Result<Self> {
        if degree > 3 {
            return Err(Error::InvalidConfig(format!("polynomial degree {degree} (supported: 0..=3)")));
        }
        let flux_basis = TriangleBasis::new(degree);
        let velocity_basis = TriangleBasis::new(degree + 1);
        let volume_rule = triangle_quadrature(2 * (degree + 1) + 2)?;
        let load_rule = triangle_quadrature(2 * (degree + 1) + 6)?;
        let edge_rule = edge_quadrature(degree + 2)?;
        let flux_table = flux_basis.tabulate(&volume_rule.points);
        let velocity_table = velocity_basis.tabulate(&volume_rule.points);
        Ok(Self {
            degree,
            flux_basis,
            velocity_basis,
            edge_basis: EdgeBasis::new(degree),
            volume_rule,
            load_rule,
            edge_rule,
            stabilization,
            flux_table,
            velocity_table,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Modes of a scalar `P_k` function on one element.
    pub fn scalar_dim(&self) -> usize {
        triangle_dim(self.degree)
    }

    /// Modes of a scalar `P_{k+1}` function on one element.
    pub fn velocity_scalar_dim(&self) -> usize {
        triangle_dim(self.degree + 1)
    }

    /// Tensor flux coefficients per element, component `2 i + j` holding entry (i, j).
    pub fn flux_dim(&self) -> usize {
        4 * self.scalar_dim()
    }

    /// Vector velocity coefficients per element, component-major.
    pub fn velocity_dim(&self) -> usize {
        2 * self.velocity_scalar_dim()
    }

    pub fn pressure_dim(&self) -> usize {
        self.scalar_dim()
    }

    /// Modes of a scalar function on one face.
    pub fn face_modes(&self) -> usize {
        self.degree + 1
    }

    /// Coefficients of a vector trace on one face.
    pub fn trace_dim(&self) -> usize {
        2 * self.face_modes()
    }

    /// The penalty `h⁻¹` on `face`.
    pub fn penalty(&self, mesh: &Mesh, face: usize) -> f64 {
        match self.stabilization {
            StabilizationScale::FaceLength => 1.0 / mesh.faces[face].length,
            StabilizationScale::MeshSize => 1.0 / mesh.h_max,
        }
    }

    /// Volume quadrature on `element` with the element-orthonormal bases.
    pub fn volume_points(&self, mesh: &Mesh, element: usize) -> Vec<VolumePoint> {
        let map = mesh.element_map(element);
        let (nf, nv) = (self.flux_table.dim, self.velocity_table.dim);
        let jac = map.det.abs();
        self.volume_rule
            .points
            .iter()
            .zip(&self.volume_rule.weights)
            .enumerate()
            .map(|(q, (xi, w))| VolumePoint {
                x: map.to_physical(*xi),
                weight: w * jac,
                flux: physical_values(&map, &self.flux_table.values[q * nf..(q + 1) * nf]),
                flux_gradient: physical_gradients(&map, &self.flux_table.gradients[q * nf..(q + 1) * nf]),
                velocity: physical_values(&map, &self.velocity_table.values[q * nv..(q + 1) * nv]),
                velocity_gradient: physical_gradients(&map, &self.velocity_table.gradients[q * nv..(q + 1) * nv]),
            })
            .collect()
    }

    /// Points of the higher-order rule used for data and error integrals.
    pub fn load_points(&self, mesh: &Mesh, element: usize) -> Vec<(Point, f64, Vec<f64>, Vec<f64>)> {
        let map = mesh.element_map(element);
        let jac = map.det.abs();
        self.load_rule
            .points
            .iter()
            .zip(&self.load_rule.weights)
            .map(|(xi, w)| {
                (
                    map.to_physical(*xi),
                    w * jac,
                    physical_values(&map, &self.flux_basis.eval(*xi)),
                    physical_values(&map, &self.velocity_basis.eval(*xi)),
                )
            })
            .collect()
    }

    /// The three faces of `element` in local order, with quadrature data
    /// parametrized by the global face coordinate so both neighbours agree.
    pub fn element_faces(&self, mesh: &Mesh, element: usize) -> Result<Vec<ElementFace>> {
        let map = mesh.element_map(element);
        mesh.element_faces[element]
            .iter()
            .map(|&(face, side)| {
                let (normal, tangent) = mesh.face_trace_frame(face, side)?;
                let f = &mesh.faces[face];
                let half = 0.5 * f.length;
                let points = self
                    .edge_rule
                    .points
                    .iter()
                    .zip(&self.edge_rule.weights)
                    .map(|(&t, &w)| {
                        let x = f.point_at(mesh, t);
                        let xi = map.to_reference(x);
                        FacePoint {
                            x,
                            weight: w * half,
                            flux: physical_values(&map, &self.flux_basis.eval(xi)),
                            velocity: physical_values(&map, &self.velocity_basis.eval(xi)),
                            edge: self.edge_basis.eval_on_face(t, f.length),
                        }
                    })
                    .collect();
                Ok(ElementFace {
                    face,
                    side,
                    normal,
                    tangent,
                    is_boundary: f.is_boundary(),
                    penalty: self.penalty(mesh, face),
                    points,
                })
            })
            .collect()
    }
}
