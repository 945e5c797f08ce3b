//! Error tables over a sequence of dyadically refined meshes.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use crate::analysis::norms::{errors_against_exact, nested_errors, projected_errors, SolutionErrors};
use crate::analysis::problems::{example1, example2};
use crate::analysis::regularity::{expected_orders, Order, RegularityProfile};
use crate::error::{Error, Result};
use crate::global::DiscreteSolution;
use crate::mesh::{build_square_mesh, Mesh};
use crate::solver::{solve_control_problem, IterationReport, SolverConfig};

/// Benchmark problems with a known or computed reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    /// Smooth closed-form optimum on the unit square.
    Example1,
    /// Vortex target on `[0, 1/8]²`, measured against a solution with
    /// `h/√2 = 1/reference_n`.
    Example2 { reference_n: usize },
}

impl Problem {
    pub fn side(&self) -> f64 {
        match self {
            Problem::Example1 => 1.0,
            Problem::Example2 { .. } => example2::SIDE,
        }
    }

    /// Squares per side for a mesh with `h/√2 = 1/n`.
    pub fn subdivisions(&self, n: usize) -> Result<usize> {
        let side = self.side();
        let cells = side * n as f64;
        if cells < 1.0 || (cells - cells.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("h/√2 = 1/{n} does not tile a square of side {side}")));
        }
        Ok(cells.round() as usize)
    }

    pub fn mesh(&self, n: usize) -> Result<Mesh> {
        build_square_mesh(self.subdivisions(n)?, self.side(), [0.0, 0.0])
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Problem::Example1 => example1::GAMMA,
            Problem::Example2 { .. } => example2::GAMMA,
        }
    }

    /// Solve on the mesh with `h/√2 = 1/n`.
    pub fn solve(&self, config: &SolverConfig, n: usize) -> Result<(Mesh, DiscreteSolution, IterationReport)> {
        let mesh = self.mesh(n)?;
        let config = SolverConfig { gamma: self.gamma(), ..*config };
        let (solution, report) = match self {
            Problem::Example1 => solve_control_problem(&mesh, config, &example1::force, &example1::target)?,
            Problem::Example2 { .. } => solve_control_problem(&mesh, config, &example2::force, &example2::target)?,
        };
        Ok((mesh, solution, report))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub errors: SolutionErrors,
    /// Orders against the previous row, in table order.
    pub orders: [Option<f64>; 7],
    /// Distances to the L² projections of the exact optimum, when one is known.
    pub projected: Option<SolutionErrors>,
    pub projected_orders: [Option<f64>; 7],
    pub iterations: usize,
    pub converged: bool,
}

impl ConvergenceRow {
    pub fn h_over_sqrt2(&self) -> f64 {
        1.0 / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub degree: usize,
    pub rows: Vec<ConvergenceRow>,
    pub profile: RegularityProfile,
}

/// `log₂(coarse / fine)`, or none when either error is zero or not finite.
pub fn observed_order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite()).then(|| (coarse / fine).log2())
}

fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn order_cell(o: Option<f64>) -> String {
    o.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

fn expected_cell(o: Order) -> String {
    o.map_or_else(|| "--".to_string(), |v| format!("{v}"))
}

impl ConvergenceTable {
    pub fn expected(&self) -> [Order; 7] {
        self.profile.orders()
    }

    /// Table of `‖exact − discrete‖` errors.
    pub fn to_csv(&self) -> String {
        self.csv_with(|row| Some((row.errors, row.orders))).expect("errors are always present")
    }

    /// Table of distances to the projected exact optimum; none without a closed form.
    pub fn projected_csv(&self) -> Option<String> {
        self.csv_with(|row| row.projected.map(|p| (p, row.projected_orders)))
    }

    fn csv_with(&self, pick: impl Fn(&ConvergenceRow) -> Option<(SolutionErrors, [Option<f64>; 7])>) -> Option<String> {
        let mut out = String::from("n,h_over_sqrt2");
        for label in SolutionErrors::LABELS {
            write!(out, ",err_{label},ord_{label}").unwrap();
        }
        for label in SolutionErrors::LABELS {
            write!(out, ",EO_{label}").unwrap();
        }
        out.push('\n');
        let expected = self.expected();
        for row in &self.rows {
            let (errors, orders) = pick(row)?;
            write!(out, "{},{}", row.n, sci(row.h_over_sqrt2())).unwrap();
            for (e, o) in errors.to_array().into_iter().zip(orders) {
                write!(out, ",{},{}", sci(e), order_cell(o)).unwrap();
            }
            for eo in expected {
                write!(out, ",{}", expected_cell(eo)).unwrap();
            }
            out.push('\n');
        }
        Some(out)
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidConfig("a convergence study needs at least two mesh sizes".into()));
    }
    if let Some(w) = sizes.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidConfig(format!("mesh sizes must double, got {} then {}", w[0], w[1])));
    }
    Ok(())
}

fn orders_between(coarse: Option<&SolutionErrors>, fine: Option<&SolutionErrors>) -> [Option<f64>; 7] {
    let mut orders = [None; 7];
    if let (Some(c), Some(f)) = (coarse, fine) {
        for (o, (c, f)) in orders.iter_mut().zip(c.to_array().into_iter().zip(f.to_array())) {
            *o = observed_order(c, f);
        }
    }
    orders
}

fn with_orders(
    n: usize,
    errors: SolutionErrors,
    projected: Option<SolutionErrors>,
    report: &IterationReport,
    previous: Option<&ConvergenceRow>,
) -> ConvergenceRow {
    ConvergenceRow {
        n,
        errors,
        orders: orders_between(previous.map(|p| &p.errors), Some(&errors)),
        projected,
        projected_orders: orders_between(previous.and_then(|p| p.projected.as_ref()), projected.as_ref()),
        iterations: report.iterations,
        converged: report.converged,
    }
}

/// Errors and observed orders on meshes with `h/√2 = 1/n` for each `n` in `sizes`.
pub fn convergence_study(config: &SolverConfig, sizes: &[usize], problem: Problem) -> Result<ConvergenceTable> {
    check_sizes(sizes)?;
    config.validate()?;
    let reference = match problem {
        Problem::Example1 => None,
        Problem::Example2 { reference_n } => {
            let finest = *sizes.last().expect("checked above");
            if reference_n <= finest || reference_n % finest != 0 {
                return Err(Error::InvalidConfig(format!(
                    "reference size {reference_n} must be a proper multiple of the finest size {finest}"
                )));
            }
            Some(problem.solve(config, reference_n)?)
        }
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let (mesh, solution, report) = problem.solve(config, n)?;
        let (errors, projected) = match &reference {
            None => (
                errors_against_exact(&mesh, &solution, &example1::exact)?,
                Some(projected_errors(&mesh, &solution, &example1::exact)?),
            ),
            Some((fine_mesh, fine, _)) => (nested_errors(&mesh, &solution, fine_mesh, fine)?, None),
        };
        let row = with_orders(n, errors, projected, &report, rows.last());
        rows.push(row);
    }
    let profile = expected_orders(config.degree, FRAC_PI_2, f64::INFINITY)?;
    Ok(ConvergenceTable { degree: config.degree, rows, profile })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_exact_sequences() {
        assert_eq!(observed_order(0.0, 0.0), None);
        assert_eq!(observed_order(1.0, 0.0), None);
        assert!((observed_order(4.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn non_dyadic_rejected() {
        let cfg = SolverConfig::default();
        assert!(convergence_study(&cfg, &[4], Problem::Example1).is_err());
        assert!(convergence_study(&cfg, &[4, 12], Problem::Example1).is_err());
        assert!(convergence_study(&cfg, &[16, 32], Problem::Example2 { reference_n: 32 }).is_err());
    }

    #[test]
    fn example2_sizes() {
        let p = Problem::Example2 { reference_n: 64 };
        assert_eq!(p.subdivisions(16).unwrap(), 2);
        assert!(p.subdivisions(4).is_err());
        assert_eq!(Problem::Example1.subdivisions(8).unwrap(), 8);
    }

    #[test]
    fn csv_layout() {
        let cfg = SolverConfig { degree: 0, ..Default::default() };
        let table = convergence_study(&cfg, &[2, 4], Problem::Example1).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        let header: Vec<&str> = lines[0].split(',').collect();
        assert_eq!(header.len(), 2 + 14 + 7);
        assert_eq!(&header[..4], &["n", "h_over_sqrt2", "err_L", "ord_L"]);
        assert_eq!(header[22], "EO_u");
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[0], "2");
        assert_eq!(first[1], "5.00000e-1");
        assert_eq!(first[3], "-");
        assert_eq!(first[16], "--");
        assert_eq!(first[22], "0.5");
        let second: Vec<&str> = lines[2].split(',').collect();
        assert!(second[3].parse::<f64>().is_ok());
        assert_eq!(table.projected_csv().unwrap().lines().count(), 3);
        for row in &table.rows {
            let (e, p) = (row.errors.to_array(), row.projected.unwrap().to_array());
            assert!(e.iter().zip(p).all(|(e, p)| p <= e * (1.0 + 1e-10)));
        }
    }
}
