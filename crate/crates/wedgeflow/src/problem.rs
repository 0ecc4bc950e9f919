//! JSON problem files: `{"schema": "wedgeflow.problem.v1", ...}`.

use serde::{Deserialize, Serialize};
use wedgeflow_core::families::Family;
use wedgeflow_core::minimal_graph::GraphProblem;
use wedgeflow_core::signorini::SignoriniProblem;
use wedgeflow_core::{Domain, Field, GridSpec};

use crate::error::{CliError, CliResult};

pub const PROBLEM_SCHEMA: &str = "wedgeflow.problem.v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainDesc {
    UnitBall,
    Cube { half_width_nodes: usize },
}

/// Serializable form of a [`GridSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDesc {
    pub n: usize,
    pub h: f64,
    #[serde(default = "unit_ball")]
    pub domain: DomainDesc,
}

fn unit_ball() -> DomainDesc {
    DomainDesc::UnitBall
}

impl GridDesc {
    pub fn build(&self) -> CliResult<GridSpec> {
        let g = GridSpec::new(self.n, self.h)?;
        Ok(match self.domain {
            DomainDesc::UnitBall => g,
            DomainDesc::Cube { half_width_nodes } => g.with_domain(Domain::Cube { half_width_nodes })?,
        })
    }

    pub fn of(g: &GridSpec) -> Self {
        GridDesc {
            n: g.ambient_dim(),
            h: g.spacing(),
            domain: match g.domain() {
                Domain::UnitBall => DomainDesc::UnitBall,
                Domain::Cube { half_width_nodes } => DomainDesc::Cube { half_width_nodes },
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Signorini,
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema: String,
    pub kind: ProblemKind,
    pub grid: GridDesc,
    /// Obstacle on the slice; zero when absent.
    #[serde(default)]
    pub obstacle: Option<Family>,
    pub boundary: Family,
    pub tol: f64,
    pub max_iters: usize,
}

impl ProblemFile {
    pub fn check_schema(&self, path: &std::path::Path) -> CliResult<()> {
        if self.schema != PROBLEM_SCHEMA {
            return Err(CliError::Schema {
                path: path.to_path_buf(),
                message: format!("schema {:?}, expected {PROBLEM_SCHEMA:?}", self.schema),
            });
        }
        Ok(())
    }

    pub fn fields(&self) -> CliResult<(Field, Field)> {
        let g = self.grid.build()?;
        let psi = match &self.obstacle {
            Some(f) => f.field(g)?,
            None => Field::zeros(g),
        };
        Ok((psi, self.boundary.field(g)?))
    }

    pub fn signorini(&self) -> CliResult<SignoriniProblem> {
        let (psi, g) = self.fields()?;
        Ok(SignoriniProblem::new(psi, g, self.tol, self.max_iters)?)
    }

    pub fn graph(&self) -> CliResult<GraphProblem> {
        let (psi, g) = self.fields()?;
        Ok(GraphProblem::new(psi, g, self.tol, self.max_iters)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_problem_file() {
        let text = r#"{
            "schema": "wedgeflow.problem.v1",
            "kind": "signorini",
            "grid": {"n": 3, "h": 0.0625},
            "boundary": {"builtin": "homogeneous_3_2", "params": {"amplitude": 1.0}},
            "tol": 1e-10,
            "max_iters": 1000
        }"#;
        let p: ProblemFile = serde_json::from_str(text).unwrap();
        assert_eq!(p.grid.domain, DomainDesc::UnitBall);
        assert!(p.signorini().is_ok());
        let cube = GridDesc {
            n: 3,
            h: 0.125,
            domain: DomainDesc::Cube { half_width_nodes: 5 },
        };
        assert_eq!(GridDesc::of(&cube.build().unwrap()), cube);
    }
}
