//! Pseudo-time (augmented Lagrangian) iteration for the discrete optimality
//! system: every step solves the condensed trace system with the previous
//! pressures on the right-hand side until the pressures stop changing.

use rayon::prelude::*;

use crate::discretization::{Discretization, StabilizationScale};
use crate::error::{Error, Result};
use crate::global::{
    assemble_trace_rhs, gather_element_traces, scatter_solution, DiscreteSolution, DofMap, TraceSystem,
};
use crate::local::{
    assemble_local_blocks, assemble_local_loads, condense, local_iteration_rhs, CondensedElement, ElementFields,
    LocalBlocks, LocalLoads, Vector, VectorField,
};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Polynomial degree `k` (0..=3).
    pub degree: usize,
    /// Control cost `γ`.
    pub gamma: f64,
    /// Pseudo-time step `Δt`.
    pub time_step: f64,
    /// Bound on the summed relative pressure changes.
    pub tol: f64,
    pub max_iter: usize,
    pub stabilization: StabilizationScale,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            degree: 1,
            gamma: 1.0,
            time_step: 256.0,
            tol: 1e-8,
            max_iter: 200,
            stabilization: StabilizationScale::FaceLength,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.degree > 3 {
            return bad(format!("degree {} outside 0..=3", self.degree));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma = {} must be positive", self.gamma));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return bad(format!("time step = {} must be positive", self.time_step));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol = {} must be positive", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        Ok(())
    }
}

/// Residual norms of the stationary discrete optimality system, measured in
/// the orthonormal test bases.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResidual {
    pub state: f64,
    pub adjoint: f64,
    pub optimality: f64,
    /// `|(p_h, 1)|`
    pub pressure_mean: f64,
    /// `|(q_h, 1)|`
    pub adjoint_pressure_mean: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        [self.state, self.adjoint, self.optimality, self.pressure_mean, self.adjoint_pressure_mean]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iterations: usize,
    pub converged: bool,
    /// `(‖Δp‖/‖p‖, ‖Δq‖/‖q‖)` per iteration.
    pub pressure_changes: Vec<(f64, f64)>,
    /// `((p, 1), (q, 1))` after each iteration.
    pub pressure_means: Vec<(f64, f64)>,
    /// Rounding drift of `((p, 1), (q, 1))` removed from each new iterate.
    pub mean_drift: Vec<(f64, f64)>,
    pub kkt: KktResidual,
    /// L² norm of the projected data `(f, y_d)`.
    pub data_scale: f64,
}

impl IterationReport {
    /// CSV log with one `m,dp_rel,dq_rel` row per iteration.
    pub fn log_csv(&self) -> String {
        let mut s = String::from("m,dp_rel,dq_rel\n");
        for (m, (dp, dq)) in self.pressure_changes.iter().enumerate() {
            s.push_str(&format!("{},{:.6e},{:.6e}\n", m + 1, dp, dq));
        }
        s
    }
}

/// Element data that stays fixed across iterations.
pub struct ControlProblem<'m> {
    mesh: &'m Mesh,
    config: SolverConfig,
    disc: Discretization,
    dofmap: DofMap,
    blocks: Vec<LocalBlocks>,
    loads: Vec<LocalLoads>,
    condensed: Vec<CondensedElement>,
    system: TraceSystem,
    data_scale: f64,
}

fn sum_sq(v: &Vector) -> f64 {
    v.iter().map(|x| x * x).sum()
}

impl<'m> ControlProblem<'m> {
    /// Assemble, condense and factorize.
    pub fn new(mesh: &'m Mesh, config: SolverConfig, force: VectorField, target: VectorField) -> Result<Self> {
        config.validate()?;
        let disc = Discretization::with_stabilization(config.degree, config.stabilization)?;
        let dofmap = DofMap::new(mesh, config.degree);
        let (blocks, loads): (Vec<_>, Vec<_>) = (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| -> Result<(LocalBlocks, LocalLoads)> {
                let b = assemble_local_blocks(mesh, e, &disc, config.gamma, config.time_step)?;
                let l = assemble_local_loads(mesh, e, &disc, force, target);
                Ok((b, l))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let condensed = blocks.par_iter().map(condense).collect::<Result<Vec<_>>>()?;
        let system = TraceSystem::assemble(&dofmap, &condensed)?;
        let data_scale = loads.iter().map(|l| sum_sq(&l.force) + sum_sq(&l.target)).sum::<f64>().sqrt();
        Ok(Self { mesh, config, disc, dofmap, blocks, loads, condensed, system, data_scale })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn blocks(&self) -> &[LocalBlocks] {
        &self.blocks
    }

    pub fn loads(&self) -> &[LocalLoads] {
        &self.loads
    }

    pub fn condensed(&self) -> &[CondensedElement] {
        &self.condensed
    }

    pub fn system(&self) -> &TraceSystem {
        &self.system
    }

    pub fn data_scale(&self) -> f64 {
        self.data_scale
    }

    /// One pseudo-time step from the previous pressures; returns the global
    /// face vector and the element fields.
    pub fn step(&self, p_prev: &[Vector], q_prev: &[Vector]) -> Result<(Vec<f64>, Vec<ElementFields>)> {
        let particular = (0..self.blocks.len())
            .into_par_iter()
            .map(|e| local_iteration_rhs(&self.condensed[e], &self.blocks[e], &self.loads[e], &p_prev[e], &q_prev[e]))
            .collect::<Result<Vec<_>>>()?;
        let rhs = assemble_trace_rhs(&self.dofmap, &self.condensed, &particular);
        let traces = self.system.solve(&rhs)?;
        let residual = self.system.relative_residual(&traces, &rhs);
        if residual > 1e-8 {
            return Err(Error::SingularSystem(residual));
        }
        let fields = self
            .condensed
            .par_iter()
            .zip(&particular)
            .map(|(c, j)| c.recover(&gather_element_traces(&self.dofmap, c, &traces), j))
            .collect();
        Ok((traces, fields))
    }

    /// Iterate from zero pressures until the stopping rule holds or `max_iter` is reached.
    pub fn solve(&self) -> Result<(DiscreteSolution, IterationReport)> {
        let np = self.disc.pressure_dim();
        let ne = self.mesh.num_elements();
        let mut p_prev = vec![Vector::zeros(np); ne];
        let mut q_prev = vec![Vector::zeros(np); ne];
        let mut report = IterationReport {
            iterations: 0,
            converged: false,
            pressure_changes: Vec::new(),
            pressure_means: Vec::new(),
            mean_drift: Vec::new(),
            kkt: KktResidual::default(),
            data_scale: self.data_scale,
        };
        let root_areas: Vec<f64> = (0..ne).map(|e| self.mesh.element_area(e).sqrt()).collect();
        let total_area: f64 = root_areas.iter().map(|r| r * r).sum();
        let mut last = None;
        for _ in 0..self.config.max_iter {
            let (traces, mut fields) = self.step(&p_prev, &q_prev)?;
            // The exact iterates have zero mean; Δt amplifies the rounding
            // error of each solve, so the drift is projected out.
            let (mut p_drift, mut q_drift) = (0.0, 0.0);
            for (f, r) in fields.iter().zip(&root_areas) {
                p_drift += f.pressures[0] * r;
                q_drift += f.pressures[np] * r;
            }
            let mut sums = [0.0; 4];
            let (mut p_mean, mut q_mean) = (0.0, 0.0);
            let mut p_next = Vec::with_capacity(ne);
            let mut q_next = Vec::with_capacity(ne);
            for (e, f) in fields.iter_mut().enumerate() {
                f.pressures[0] -= p_drift / total_area * root_areas[e];
                f.pressures[np] -= q_drift / total_area * root_areas[e];
                let p = f.pressures.rows(0, np).into_owned();
                let q = f.pressures.rows(np, np).into_owned();
                sums[0] += sum_sq(&(&p - &p_prev[e]));
                sums[1] += sum_sq(&p);
                sums[2] += sum_sq(&(&q - &q_prev[e]));
                sums[3] += sum_sq(&q);
                p_mean += p[0] * root_areas[e];
                q_mean += q[0] * root_areas[e];
                p_next.push(p);
                q_next.push(q);
            }
            let [dp, pn, dq, qn] = sums.map(f64::sqrt);
            let relative = |change: f64, norm: f64| {
                if norm > 0.0 {
                    change / norm
                } else if change <= self.config.tol * self.data_scale.max(f64::MIN_POSITIVE) {
                    0.0
                } else {
                    f64::INFINITY
                }
            };
            let (dp_rel, dq_rel) = (relative(dp, pn), relative(dq, qn));
            report.iterations += 1;
            report.pressure_changes.push((dp_rel, dq_rel));
            report.pressure_means.push((p_mean, q_mean));
            report.mean_drift.push((p_drift, q_drift));
            p_prev = p_next;
            q_prev = q_next;
            last = Some((traces, fields));
            if dp_rel + dq_rel < self.config.tol {
                report.converged = true;
                break;
            }
        }
        let (traces, fields) = last.expect("at least one iteration");
        let solution = scatter_solution(self.mesh, &self.dofmap, &traces, &fields);
        report.kkt = self.kkt_residual(&solution)?;
        Ok((solution, report))
    }

    /// Residuals of the stationary optimality system for `solution`.
    pub fn kkt_residual(&self, solution: &DiscreteSolution) -> Result<KktResidual> {
        kkt_residual_with(self.mesh, &self.dofmap, &self.blocks, &self.loads, solution)
    }
}

/// Solve the discrete optimality system for force `f` and target `y_d`.
pub fn solve_control_problem(
    mesh: &Mesh,
    config: SolverConfig,
    force: VectorField,
    target: VectorField,
) -> Result<(DiscreteSolution, IterationReport)> {
    ControlProblem::new(mesh, config, force, target)?.solve()
}

/// Residuals of the stationary system evaluated with element blocks for `config`.
pub fn kkt_residual(
    mesh: &Mesh,
    config: SolverConfig,
    solution: &DiscreteSolution,
    force: VectorField,
    target: VectorField,
) -> Result<KktResidual> {
    config.validate()?;
    let disc = Discretization::with_stabilization(config.degree, config.stabilization)?;
    let dofmap = DofMap::new(mesh, config.degree);
    let blocks = (0..mesh.num_elements())
        .map(|e| assemble_local_blocks(mesh, e, &disc, config.gamma, config.time_step))
        .collect::<Result<Vec<_>>>()?;
    let loads: Vec<_> = (0..mesh.num_elements()).map(|e| assemble_local_loads(mesh, e, &disc, force, target)).collect();
    kkt_residual_with(mesh, &dofmap, &blocks, &loads, solution)
}

fn face_values(dofmap: &DofMap, faces: &[usize], field: &[Vector]) -> Vector {
    let per = 2 * dofmap.face_modes();
    Vector::from_iterator(faces.len() * per, faces.iter().flat_map(|&f| field[f].iter().copied()))
}

fn kkt_residual_with(
    mesh: &Mesh,
    dofmap: &DofMap,
    blocks: &[LocalBlocks],
    loads: &[LocalLoads],
    s: &DiscreteSolution,
) -> Result<KktResidual> {
    if s.state_flux.len() != blocks.len() {
        return Err(Error::DimensionMismatch("solution and mesh element counts differ".into()));
    }
    let mut state_sq = 0.0;
    let mut adjoint_sq = 0.0;
    let mut state_faces = vec![0.0; dofmap.total()];
    let mut adjoint_faces = vec![0.0; dofmap.total()];
    let mut optimality = vec![0.0; dofmap.total()];
    let (mut p_mean, mut q_mean) = (0.0, 0.0);

    for (e, b) in blocks.iter().enumerate() {
        let (l, g) = (&s.state_flux[e], &s.adjoint_flux[e]);
        let (y, z) = (&s.state_velocity[e], &s.adjoint_velocity[e]);
        let (p, q) = (&s.state_pressure[e], &s.adjoint_pressure[e]);
        let yh = face_values(dofmap, &b.interior_faces, &s.state_trace);
        let zh = face_values(dofmap, &b.interior_faces, &s.adjoint_trace);
        let u =
            Vector::from_iterator(b.control_dim(), b.boundary_faces.iter().flat_map(|&f| s.control[f].iter().copied()));
        let a2t = b.flux_velocity.transpose();
        let a6t = b.pressure_gradient.transpose();

        let r1 = &b.flux_mass * l + &b.flux_velocity * y - &b.flux_trace * &yh - &b.flux_control * &u;
        let r3 = -(&a2t * l) + &b.velocity_stabilization * y + &b.pressure_gradient * p
            - &b.velocity_trace * &yh
            - &b.velocity_control * &u
            - &loads[e].force;
        let r5 = -(&a6t * y) + b.trace_pressure.transpose() * &yh;
        state_sq += sum_sq(&r1) + sum_sq(&r3) + sum_sq(&r5);

        let r2 = &b.flux_mass * g + &b.flux_velocity * z - &b.flux_trace * &zh;
        let r4 = -(&a2t * g) - &b.velocity_mass * y + &b.velocity_stabilization * z
            - &b.pressure_gradient * q
            - &b.velocity_trace * &zh
            + &loads[e].target;
        let r6 = -(&a6t * z) + b.trace_pressure.transpose() * &zh;
        adjoint_sq += sum_sq(&r2) + sum_sq(&r4) + sum_sq(&r6);

        let r7 = b.flux_trace.transpose() * l - b.velocity_trace.transpose() * y - &b.trace_pressure * p
            + &b.trace_stabilization * &yh;
        let r8 = b.flux_trace.transpose() * g - b.velocity_trace.transpose() * z
            + &b.trace_pressure * q
            + &b.trace_stabilization * &zh;
        let r9 = &b.control_flux * g - &b.control_velocity * z - &b.control_mass * &u * b.gamma;
        let dofs = dofmap.element_dofs(&b.interior_faces, &b.boundary_faces);
        let nt = b.interior_trace_dim();
        for i in 0..nt {
            state_faces[dofs[i]] += r7[i];
            adjoint_faces[dofs[nt + i]] += r8[i];
        }
        for i in 0..b.control_dim() {
            optimality[dofs[2 * nt + i]] += r9[i];
        }
        let root_area = mesh.element_area(e).sqrt();
        p_mean += p[0] * root_area;
        q_mean += q[0] * root_area;
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(KktResidual {
        state: (state_sq + norm(&state_faces).powi(2)).sqrt(),
        adjoint: (adjoint_sq + norm(&adjoint_faces).powi(2)).sqrt(),
        optimality: norm(&optimality),
        pressure_mean: p_mean.abs(),
        adjoint_pressure_mean: q_mean.abs(),
    })
}
