//! Structured simplicial meshes of rectangles with oriented face geometry.
//!
//! Every face stores the element that first referenced it (the lower-indexed
//! neighbour) as its *left* element. Normals point out of the left element and
//! the tangent is the normal rotated by +90°, so on the domain boundary the
//! tangent runs counterclockwise.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Which of the (at most two) elements adjacent to a face is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// +1 for the left element, -1 for the right one.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Endpoints, ordered as traversed counterclockwise by the left element.
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: Option<usize>,
    pub length: f64,
    /// Unit normal pointing out of `left`.
    pub normal: Point,
    /// `normal` rotated by +90°.
    pub tangent: Point,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    /// Point on the face for the parameter `t` in [-1, 1], running from
    /// `vertices[0]` to `vertices[1]`.
    pub fn point_at(&self, mesh: &Mesh, t: f64) -> Point {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        let s = 0.5 * (t + 1.0);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }
}

/// Uniform grid the mesh was generated from; used for point location.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub n: usize,
    pub side: f64,
    pub origin: Point,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Vertex triples in counterclockwise order.
    pub elements: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    /// Local face `i` of an element joins its vertices `i` and `i + 1 (mod 3)`.
    pub element_faces: Vec<[(usize, Side); 3]>,
    pub h_max: f64,
    pub grid: Option<Grid>,
}

/// Affine map from the reference triangle {x ≥ 0, y ≥ 0, x + y ≤ 1}.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: Point,
    /// Columns are the edge vectors v1 - v0 and v2 - v0.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    inv: [[f64; 2]; 2],
}

impl ElementMap {
    pub fn new(v0: Point, v1: Point, v2: Point) -> Self {
        let jacobian = [[v1[0] - v0[0], v2[0] - v0[0]], [v1[1] - v0[1], v2[1] - v0[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let inv = [[jacobian[1][1] / det, -jacobian[0][1] / det], [-jacobian[1][0] / det, jacobian[0][0] / det]];
        Self { origin: v0, jacobian, det, inv }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn to_physical(&self, xi: Point) -> Point {
        let j = &self.jacobian;
        [self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1], self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1]]
    }

    pub fn to_reference(&self, x: Point) -> Point {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [self.inv[0][0] * d[0] + self.inv[0][1] * d[1], self.inv[1][0] * d[0] + self.inv[1][1] * d[1]]
    }

    /// Maps a reference gradient to the physical one (J^{-T} g).
    pub fn push_gradient(&self, g: Point) -> Point {
        [self.inv[0][0] * g[0] + self.inv[1][0] * g[1], self.inv[0][1] * g[0] + self.inv[1][1] * g[1]]
    }
}

/// Uniform triangulation of the square `origin + [0, side]²` with `n` cells per
/// side, each cell split along its lower-left to upper-right diagonal.
pub fn build_square_mesh(n: usize, side: f64, origin: Point) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("number of subdivisions must be positive".into()));
    }
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidMesh(format!("side length must be positive, got {side}")));
    }
    let h = side / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([origin[0] + i as f64 * h, origin[1] + j as f64 * h]);
        }
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            elements.push([v00, v10, v11]);
            elements.push([v00, v11, v01]);
        }
    }
    let mut mesh = Mesh::from_elements(vertices, elements)?;
    mesh.grid = Some(Grid { n, side, origin });
    Ok(mesh)
}

impl Mesh {
    /// Builds face connectivity for counterclockwise triangles.
    pub fn from_elements(vertices: Vec<Point>, elements: Vec<[usize; 3]>) -> Result<Self> {
        let mut faces: Vec<Face> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut element_faces = Vec::with_capacity(elements.len());
        let mut h_max: f64 = 0.0;
        for (e, tri) in elements.iter().enumerate() {
            let map = ElementMap::new(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(map.det > 0.0) {
                return Err(Error::DegenerateElement(e));
            }
            let mut local = [(0, Side::Left); 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = tri[i];
                let b = tri[(i + 1) % 3];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.right.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "face ({a}, {b}) is shared by more than two elements"
                            )));
                        }
                        face.right = Some(e);
                        *slot = (f, Side::Right);
                    }
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let d = [pb[0] - pa[0], pb[1] - pa[1]];
                        let length = d[0].hypot(d[1]);
                        let normal = [d[1] / length, -d[0] / length];
                        faces.push(Face {
                            vertices: [a, b],
                            left: e,
                            right: None,
                            length,
                            normal,
                            tangent: [-normal[1], normal[0]],
                        });
                        lookup.insert(key, faces.len() - 1);
                        *slot = (faces.len() - 1, Side::Left);
                    }
                }
                let (pa, pb) = (vertices[a], vertices[b]);
                h_max = h_max.max((pb[0] - pa[0]).hypot(pb[1] - pa[1]));
            }
            element_faces.push(local);
        }
        Ok(Self { vertices, elements, faces, element_faces, h_max, grid: None })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.num_faces() - self.num_boundary_faces()
    }

    pub fn element_map(&self, e: usize) -> ElementMap {
        let [a, b, c] = self.elements[e];
        ElementMap::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn element_area(&self, e: usize) -> f64 {
        self.element_map(e).area()
    }

    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.elements[e];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Normal and tangent of `face` as seen from the element on `side`.
    pub fn face_trace_frame(&self, face: usize, side: Side) -> Result<(Point, Point)> {
        let f = &self.faces[face];
        if side == Side::Right && f.is_boundary() {
            return Err(Error::NoRightElement { face });
        }
        let s = side.sign();
        Ok(([s * f.normal[0], s * f.normal[1]], [s * f.tangent[0], s * f.tangent[1]]))
    }

    /// Element containing `x`, for meshes built by [`build_square_mesh`].
    /// Points on shared edges resolve to either neighbour.
    pub fn locate(&self, x: Point) -> Option<usize> {
        let g = self.grid?;
        let h = g.side / g.n as f64;
        let s = (x[0] - g.origin[0]) / h;
        let t = (x[1] - g.origin[1]) / h;
        let tol = 1e-9;
        if s < -tol || t < -tol || s > g.n as f64 + tol || t > g.n as f64 + tol {
            return None;
        }
        let i = (s.floor().max(0.0) as usize).min(g.n - 1);
        let j = (t.floor().max(0.0) as usize).min(g.n - 1);
        let (ls, lt) = (s - i as f64, t - j as f64);
        let cell = j * g.n + i;
        Some(if ls >= lt { 2 * cell } else { 2 * cell + 1 })
    }

    /// Writes the mesh as CSV with `vertices`, `elements` and `faces` sections.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "vertices")?;
        writeln!(out, "id,x,y")?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(out, "{i},{:.17e},{:.17e}", v[0], v[1])?;
        }
        writeln!(out, "elements")?;
        writeln!(out, "id,v0,v1,v2")?;
        for (i, t) in self.elements.iter().enumerate() {
            writeln!(out, "{i},{},{},{}", t[0], t[1], t[2])?;
        }
        writeln!(out, "faces")?;
        writeln!(out, "id,v0,v1,left,right,length,nx,ny")?;
        for (i, f) in self.faces.iter().enumerate() {
            let right = f.right.map(|r| r.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{i},{},{},{},{right},{:.17e},{:.17e},{:.17e}",
                f.vertices[0], f.vertices[1], f.left, f.length, f.normal[0], f.normal[1]
            )?;
        }
        Ok(())
    }
}
