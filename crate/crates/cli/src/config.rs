//! Run configuration: defaults, overridden by a flat `key = value` file,
//! overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use stokes_hdg::{SolverConfig, StabilizationScale};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Constant data on the square `[0, side]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomProblem {
    pub side: f64,
    pub force: [f64; 2],
    pub target: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemChoice {
    Example1,
    Example2,
    Custom(CustomProblem),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemChoice,
    /// Mesh sizes `n` with `h/√2 = 1/n`; `solve` uses the first.
    pub sizes: Vec<usize>,
    pub solver: SolverConfig,
    /// Overrides the problem's own control cost when set.
    pub gamma: Option<f64>,
    pub reference_n: usize,
    pub omega: f64,
    pub side: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemChoice::Example1,
            sizes: vec![8],
            solver: SolverConfig::default(),
            gamma: None,
            reference_n: 512,
            omega: std::f64::consts::FRAC_PI_2,
            side: 1.0,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 12] =
    ["problem", "n", "k", "gamma", "dt", "tol", "max_iter", "stabilization", "reference_n", "omega", "side", "out"];

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| bad(format!("`{key}`: cannot parse `{}`", value.trim())))
}

pub fn parse_sizes(value: &str) -> Result<Vec<usize>, ConfigError> {
    value.split(',').map(|v| number::<usize>("n", v)).collect()
}

fn pair(key: &str, value: &str) -> Result<[f64; 2], ConfigError> {
    let parts: Vec<f64> = value.split(',').map(|v| number(key, v)).collect::<Result<_, _>>()?;
    <[f64; 2]>::try_from(parts).map_err(|_| bad(format!("`{key}` needs two comma-separated numbers")))
}

/// Flat `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| bad(format!("line {}: expected `key = value`", i + 1)))?;
        pairs.push((normalize(key), value.trim().to_string()));
    }
    Ok(pairs)
}

/// A constant-data problem file with keys `side`, `force` and `target`.
pub fn load_custom_problem(path: &Path) -> Result<CustomProblem, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read problem file {}: {e}", path.display())))?;
    let mut problem = CustomProblem { side: 1.0, force: [0.0; 2], target: [0.0; 2] };
    for (key, value) in parse_pairs(&text)? {
        match key.as_str() {
            "side" => problem.side = number(&key, &value)?,
            "force" => problem.force = pair(&key, &value)?,
            "target" => problem.target = pair(&key, &value)?,
            _ => return Err(bad(format!("unknown key `{key}` in problem file {}", path.display()))),
        }
    }
    if !(problem.side > 0.0 && problem.side.is_finite()) {
        return Err(bad("problem side must be positive"));
    }
    Ok(problem)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = normalize(key);
        match key.as_str() {
            "problem" => {
                self.problem = match value.trim() {
                    "example1" => ProblemChoice::Example1,
                    "example2" => ProblemChoice::Example2,
                    path => ProblemChoice::Custom(load_custom_problem(Path::new(path))?),
                }
            }
            "n" => self.sizes = parse_sizes(value)?,
            "k" => self.solver.degree = number(&key, value)?,
            "gamma" => self.gamma = Some(number(&key, value)?),
            "dt" => self.solver.time_step = number(&key, value)?,
            "tol" => self.solver.tol = number(&key, value)?,
            "max_iter" => self.solver.max_iter = number(&key, value)?,
            "stabilization" => {
                self.solver.stabilization = match value.trim() {
                    "face" => StabilizationScale::FaceLength,
                    "mesh" => StabilizationScale::MeshSize,
                    other => return Err(bad(format!("`stabilization` must be `face` or `mesh`, got `{other}`"))),
                }
            }
            "reference_n" => self.reference_n = number(&key, value)?,
            "omega" => self.omega = number(&key, value)?,
            "side" => self.side = number(&key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            _ => return Err(bad(format!("unknown key `{key}`; expected one of {}", KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        for (key, value) in parse_pairs(&text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    /// Solver settings with the problem's control cost unless overridden.
    pub fn solver_config(&self, problem_gamma: f64) -> Result<SolverConfig, ConfigError> {
        let config = SolverConfig { gamma: self.gamma.unwrap_or(problem_gamma), ..self.solver };
        config.validate().map_err(|e| bad(e.to_string()))?;
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(bad("mesh sizes must be positive"));
        }
        Ok(config)
    }
}
