//! L² errors of discrete fields against closed forms or against a solution on
//! a nested finer mesh.

use crate::analysis::problems::ExactValues;
use crate::basis::{EdgeBasis, TriangleBasis};
use crate::error::{Error, Result};
use crate::global::DiscreteSolution;
use crate::local::Vector;
use crate::mesh::{Mesh, Point};
use crate::quadrature::{edge_quadrature, triangle_quadrature, TriangleRule};

/// Errors of the seven solution components, in table order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolutionErrors {
    pub state_flux: f64,
    pub adjoint_flux: f64,
    pub state: f64,
    pub adjoint: f64,
    pub pressure: f64,
    pub adjoint_pressure: f64,
    pub control: f64,
}

impl SolutionErrors {
    pub const LABELS: [&'static str; 7] = ["L", "G", "y", "z", "p", "q", "u"];

    pub fn to_array(self) -> [f64; 7] {
        [
            self.state_flux,
            self.adjoint_flux,
            self.state,
            self.adjoint,
            self.pressure,
            self.adjoint_pressure,
            self.control,
        ]
    }
}

/// Value of component `comp` of an element field at physical `x`.
fn eval_field(mesh: &Mesh, element: usize, basis: &TriangleBasis, coeffs: &Vector, x: Point, out: &mut [f64]) {
    let map = mesh.element_map(element);
    let phi = basis.eval(map.to_reference(x));
    let s = 1.0 / map.det.abs().sqrt();
    let dim = basis.dim();
    for (c, o) in out.iter_mut().enumerate() {
        *o = s * (0..dim).map(|a| coeffs[c * dim + a] * phi[a]).sum::<f64>();
    }
}

/// `‖exact − field‖` over the mesh for a field with `components ≤ 4`
/// components expanded in `basis` on every element.
pub fn l2_error(
    mesh: &Mesh,
    basis: &TriangleBasis,
    components: usize,
    coeffs: &[Vector],
    exact: &dyn Fn(Point) -> [f64; 4],
    rule: &TriangleRule,
) -> f64 {
    let mut sum = 0.0;
    let mut value = [0.0; 4];
    for (e, c) in coeffs.iter().enumerate() {
        let map = mesh.element_map(e);
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let x = map.to_physical(*xi);
            eval_field(mesh, e, basis, c, x, &mut value[..components]);
            let ex = exact(x);
            let d: f64 = (0..components).map(|i| (ex[i] - value[i]).powi(2)).sum();
            sum += d * w * map.det.abs();
        }
    }
    sum.sqrt()
}

/// `‖exact − u_h‖` over the boundary faces, `exact(x, τ)`.
pub fn boundary_l2_error(
    mesh: &Mesh,
    basis: &EdgeBasis,
    control: &[Vector],
    exact: &dyn Fn(Point, Point) -> f64,
    points: usize,
) -> Result<f64> {
    let rule = edge_quadrature(points)?;
    let mut sum = 0.0;
    for (f, face) in mesh.faces.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            let x = face.point_at(mesh, *t);
            let uh: f64 = basis.eval_on_face(*t, face.length).iter().zip(control[f].iter()).map(|(m, c)| m * c).sum();
            sum += (exact(x, face.tangent) - uh).powi(2) * w * 0.5 * face.length;
        }
    }
    Ok(sum.sqrt())
}

fn error_rule(degree: usize) -> Result<TriangleRule> {
    triangle_quadrature(2 * (degree + 1) + 6)
}

fn pack2(v: [f64; 2]) -> [f64; 4] {
    [v[0], v[1], 0.0, 0.0]
}

fn pack_tensor(g: [[f64; 2]; 2]) -> [f64; 4] {
    [g[0][0], g[0][1], g[1][0], g[1][1]]
}

/// Errors of `solution` against an exact optimum; the exact control is
/// the tangential trace `y·τ` of the exact state.
pub fn errors_against_exact(
    mesh: &Mesh,
    solution: &DiscreteSolution,
    exact: &(dyn Fn(Point) -> ExactValues + Sync),
) -> Result<SolutionErrors> {
    let k = solution.degree;
    let rule = error_rule(k)?;
    let low = TriangleBasis::new(k);
    let high = TriangleBasis::new(k + 1);
    let scalar = |v: f64| [v, 0.0, 0.0, 0.0];
    let control_exact = |x: Point, tau: Point| {
        let y = exact(x).state;
        y[0] * tau[0] + y[1] * tau[1]
    };
    Ok(SolutionErrors {
        state_flux: l2_error(mesh, &low, 4, &solution.state_flux, &|x| pack_tensor(exact(x).state_gradient), &rule),
        adjoint_flux: l2_error(
            mesh,
            &low,
            4,
            &solution.adjoint_flux,
            &|x| pack_tensor(exact(x).adjoint_gradient),
            &rule,
        ),
        state: l2_error(mesh, &high, 2, &solution.state_velocity, &|x| pack2(exact(x).state), &rule),
        adjoint: l2_error(mesh, &high, 2, &solution.adjoint_velocity, &|x| pack2(exact(x).adjoint), &rule),
        pressure: l2_error(mesh, &low, 1, &solution.state_pressure, &|x| scalar(exact(x).pressure), &rule),
        adjoint_pressure: l2_error(
            mesh,
            &low,
            1,
            &solution.adjoint_pressure,
            &|x| scalar(exact(x).adjoint_pressure),
            &rule,
        ),
        control: boundary_l2_error(mesh, &EdgeBasis::new(k), &solution.control, &control_exact, k + 6)?,
    })
}

/// `‖Π exact − field‖` where `Π` is the elementwise L² projection onto the
/// span of `basis`; with an orthonormal basis this is the coefficient distance.
pub fn projected_l2_error(
    mesh: &Mesh,
    basis: &TriangleBasis,
    components: usize,
    coeffs: &[Vector],
    exact: &dyn Fn(Point) -> [f64; 4],
    rule: &TriangleRule,
) -> f64 {
    let dim = basis.dim();
    let mut sum = 0.0;
    let mut projected = vec![0.0; components * dim];
    for (e, c) in coeffs.iter().enumerate() {
        let map = mesh.element_map(e);
        let scale = map.det.abs().sqrt();
        projected.iter_mut().for_each(|v| *v = 0.0);
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let ex = exact(map.to_physical(*xi));
            let phi = basis.eval(*xi);
            for comp in 0..components {
                for a in 0..dim {
                    projected[comp * dim + a] += w * scale * ex[comp] * phi[a];
                }
            }
        }
        sum += projected.iter().zip(c.iter()).map(|(p, v)| (p - v).powi(2)).sum::<f64>();
    }
    sum.sqrt()
}

/// `‖P exact − u_h‖` over the boundary faces, `P` the face-wise L² projection.
pub fn projected_boundary_error(
    mesh: &Mesh,
    basis: &EdgeBasis,
    control: &[Vector],
    exact: &dyn Fn(Point, Point) -> f64,
    points: usize,
) -> Result<f64> {
    let rule = edge_quadrature(points)?;
    let mut sum = 0.0;
    for (f, face) in mesh.faces.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
        let mut projected = vec![0.0; basis.dim()];
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            let value = exact(face.point_at(mesh, *t), face.tangent);
            for (p, m) in projected.iter_mut().zip(basis.eval_on_face(*t, face.length)) {
                *p += value * m * w * 0.5 * face.length;
            }
        }
        sum += projected.iter().zip(control[f].iter()).map(|(p, v)| (p - v).powi(2)).sum::<f64>();
    }
    Ok(sum.sqrt())
}

/// Distances between `solution` and the L² projections of an exact optimum
/// onto the discrete spaces.
pub fn projected_errors(
    mesh: &Mesh,
    solution: &DiscreteSolution,
    exact: &(dyn Fn(Point) -> ExactValues + Sync),
) -> Result<SolutionErrors> {
    let k = solution.degree;
    let rule = error_rule(k)?;
    let low = TriangleBasis::new(k);
    let high = TriangleBasis::new(k + 1);
    let scalar = |v: f64| [v, 0.0, 0.0, 0.0];
    let control_exact = |x: Point, tau: Point| {
        let y = exact(x).state;
        y[0] * tau[0] + y[1] * tau[1]
    };
    Ok(SolutionErrors {
        state_flux: projected_l2_error(
            mesh,
            &low,
            4,
            &solution.state_flux,
            &|x| pack_tensor(exact(x).state_gradient),
            &rule,
        ),
        adjoint_flux: projected_l2_error(
            mesh,
            &low,
            4,
            &solution.adjoint_flux,
            &|x| pack_tensor(exact(x).adjoint_gradient),
            &rule,
        ),
        state: projected_l2_error(mesh, &high, 2, &solution.state_velocity, &|x| pack2(exact(x).state), &rule),
        adjoint: projected_l2_error(mesh, &high, 2, &solution.adjoint_velocity, &|x| pack2(exact(x).adjoint), &rule),
        pressure: projected_l2_error(mesh, &low, 1, &solution.state_pressure, &|x| scalar(exact(x).pressure), &rule),
        adjoint_pressure: projected_l2_error(
            mesh,
            &low,
            1,
            &solution.adjoint_pressure,
            &|x| scalar(exact(x).adjoint_pressure),
            &rule,
        ),
        control: projected_boundary_error(mesh, &EdgeBasis::new(k), &solution.control, &control_exact, k + 6)?,
    })
}

/// `‖fine − coarse‖` for a field, integrating over the fine elements; every
/// fine element must lie inside one coarse element.
fn nested_field_error(
    coarse_mesh: &Mesh,
    coarse: &[Vector],
    coarse_basis: &TriangleBasis,
    fine_mesh: &Mesh,
    fine: &[Vector],
    fine_basis: &TriangleBasis,
    components: usize,
    rule: &TriangleRule,
) -> Result<f64> {
    let mut sum = 0.0;
    let (mut vc, mut vf) = ([0.0; 4], [0.0; 4]);
    for (e, c) in fine.iter().enumerate() {
        let host = coarse_mesh
            .locate(fine_mesh.centroid(e))
            .ok_or_else(|| Error::InvalidMesh(format!("fine element {e} lies outside the coarse mesh")))?;
        let map = fine_mesh.element_map(e);
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let x = map.to_physical(*xi);
            eval_field(fine_mesh, e, fine_basis, c, x, &mut vf[..components]);
            eval_field(coarse_mesh, host, coarse_basis, &coarse[host], x, &mut vc[..components]);
            let d: f64 = (0..components).map(|i| (vf[i] - vc[i]).powi(2)).sum();
            sum += d * w * map.det.abs();
        }
    }
    Ok(sum.sqrt())
}

/// Boundary face of `mesh` on element `element` whose segment contains `x`.
fn host_boundary_face(mesh: &Mesh, element: usize, x: Point) -> Option<usize> {
    mesh.element_faces[element].iter().map(|&(f, _)| f).find(|&f| {
        let face = &mesh.faces[f];
        if !face.is_boundary() {
            return false;
        }
        let a = mesh.vertices[face.vertices[0]];
        let b = mesh.vertices[face.vertices[1]];
        let cross = (x[0] - a[0]) * (b[1] - a[1]) - (x[1] - a[1]) * (b[0] - a[0]);
        cross.abs() <= 1e-10 * face.length * face.length
    })
}

/// Errors of a coarse solution measured against a solution on a nested finer mesh.
pub fn nested_errors(
    coarse_mesh: &Mesh,
    coarse: &DiscreteSolution,
    fine_mesh: &Mesh,
    fine: &DiscreteSolution,
) -> Result<SolutionErrors> {
    if coarse.degree != fine.degree {
        return Err(Error::DimensionMismatch("solutions of different degree".into()));
    }
    let k = coarse.degree;
    let rule = error_rule(k)?;
    let low = TriangleBasis::new(k);
    let high = TriangleBasis::new(k + 1);
    let field = |c: &[Vector], f: &[Vector], basis: &TriangleBasis, comps: usize| {
        nested_field_error(coarse_mesh, c, basis, fine_mesh, f, basis, comps, &rule)
    };

    let edge = EdgeBasis::new(k);
    let erule = edge_quadrature(k + 6)?;
    let mut control_sq = 0.0;
    for (f, face) in fine_mesh.faces.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
        let mid = face.point_at(fine_mesh, 0.0);
        let host_elem = coarse_mesh
            .locate(fine_mesh.centroid(face.left))
            .ok_or_else(|| Error::InvalidMesh(format!("fine face {f} lies outside the coarse mesh")))?;
        let host = host_boundary_face(coarse_mesh, host_elem, mid)
            .ok_or_else(|| Error::InvalidMesh(format!("fine boundary face {f} has no coarse host face")))?;
        let hf = &coarse_mesh.faces[host];
        let a = coarse_mesh.vertices[hf.vertices[0]];
        let b = coarse_mesh.vertices[hf.vertices[1]];
        for (t, w) in erule.points.iter().zip(&erule.weights) {
            let x = face.point_at(fine_mesh, *t);
            let s = ((x[0] - a[0]) * (b[0] - a[0]) + (x[1] - a[1]) * (b[1] - a[1])) / (hf.length * hf.length);
            let tc = 2.0 * s - 1.0;
            let uf: f64 =
                edge.eval_on_face(*t, face.length).iter().zip(fine.control[f].iter()).map(|(m, c)| m * c).sum();
            let uc: f64 =
                edge.eval_on_face(tc, hf.length).iter().zip(coarse.control[host].iter()).map(|(m, c)| m * c).sum();
            control_sq += (uf - uc).powi(2) * w * 0.5 * face.length;
        }
    }

    Ok(SolutionErrors {
        state_flux: field(&coarse.state_flux, &fine.state_flux, &low, 4)?,
        adjoint_flux: field(&coarse.adjoint_flux, &fine.adjoint_flux, &low, 4)?,
        state: field(&coarse.state_velocity, &fine.state_velocity, &high, 2)?,
        adjoint: field(&coarse.adjoint_velocity, &fine.adjoint_velocity, &high, 2)?,
        pressure: field(&coarse.state_pressure, &fine.state_pressure, &low, 1)?,
        adjoint_pressure: field(&coarse.adjoint_pressure, &fine.adjoint_pressure, &low, 1)?,
        control: control_sq.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_square_mesh;

    /// L² projection of `f` onto `P_degree` on every element, by quadrature.
    fn project(mesh: &Mesh, degree: usize, f: &dyn Fn(Point) -> f64) -> Vec<Vector> {
        let basis = TriangleBasis::new(degree);
        let rule = triangle_quadrature(2 * degree + 10).unwrap();
        (0..mesh.num_elements())
            .map(|e| {
                let map = mesh.element_map(e);
                let s = 1.0 / map.det.abs().sqrt();
                let mut c = Vector::zeros(basis.dim());
                for (xi, w) in rule.points.iter().zip(&rule.weights) {
                    let v = f(map.to_physical(*xi));
                    for (a, phi) in basis.eval(*xi).iter().enumerate() {
                        c[a] += v * phi * s * w * map.det.abs();
                    }
                }
                c
            })
            .collect()
    }

    #[test]
    fn polynomial_field_has_zero_error() {
        let mesh = build_square_mesh(3, 1.0, [0.0, 0.0]).unwrap();
        let poly = |x: Point| 1.0 + 2.0 * x[0] - x[1] * x[1] + 0.5 * x[0] * x[1];
        let coeffs = project(&mesh, 2, &poly);
        let rule = error_rule(2).unwrap();
        let err = l2_error(&mesh, &TriangleBasis::new(2), 1, &coeffs, &|x| [poly(x), 0.0, 0.0, 0.0], &rule);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn cosine_against_zero() {
        let mesh = build_square_mesh(4, 1.0, [0.0, 0.0]).unwrap();
        let zero = vec![Vector::zeros(3); mesh.num_elements()];
        let rule = error_rule(1).unwrap();
        let exact = |x: Point| [(std::f64::consts::PI * x[0]).cos(), 0.0, 0.0, 0.0];
        let err = l2_error(&mesh, &TriangleBasis::new(1), 1, &zero, &exact, &rule);
        assert!((err - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matches_oversampled_quadrature() {
        // random polynomial pair: a cubic field against a quartic exact function
        let mesh = build_square_mesh(2, 1.0, [0.0, 0.0]).unwrap();
        let field_fn = |x: Point| 0.3 - x[0] + 2.0 * x[0] * x[1] * x[1];
        let exact_fn = |x: Point| x[0].powi(4) - 0.7 * x[1].powi(3) + x[0];
        let coeffs = project(&mesh, 3, &field_fn);
        let err = l2_error(
            &mesh,
            &TriangleBasis::new(3),
            1,
            &coeffs,
            &|x| [exact_fn(x), 0.0, 0.0, 0.0],
            &error_rule(3).unwrap(),
        );
        let fine = triangle_quadrature(30).unwrap();
        let mut sum = 0.0;
        for e in 0..mesh.num_elements() {
            let map = mesh.element_map(e);
            for (xi, w) in fine.points.iter().zip(&fine.weights) {
                let x = map.to_physical(*xi);
                sum += (exact_fn(x) - field_fn(x)).powi(2) * w * map.det.abs();
            }
        }
        assert!((err - sum.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nested_field_error_of_identical_polynomial_is_zero() {
        let coarse = build_square_mesh(2, 1.0, [0.0, 0.0]).unwrap();
        let fine = build_square_mesh(4, 1.0, [0.0, 0.0]).unwrap();
        let poly = |x: Point| x[0] * x[0] - 3.0 * x[1];
        let basis = TriangleBasis::new(2);
        let rule = error_rule(2).unwrap();
        let err = nested_field_error(
            &coarse,
            &project(&coarse, 2, &poly),
            &basis,
            &fine,
            &project(&fine, 2, &poly),
            &basis,
            1,
            &rule,
        )
        .unwrap();
        assert!(err < 1e-13);
    }
}
