//! Assembles fields, masks, and boundary data from a parsed problem block.

use crate::config::{DataKind, ProblemSpec};
use crate::CliError;
use gplab::field::{DomainMask, GridSpec, ScalarField};
use gplab::oracle::{radial_oracle, RadialOracle};
use gplab::solver::BoundaryData;

pub struct Assembled {
    pub grid: GridSpec,
    pub mask: DomainMask,
    pub f: ScalarField,
    pub bc: BoundaryData,
    pub oracle: Option<RadialOracle>,
    /// Oracle samples on this grid, when an oracle is in play.
    pub exact: Option<ScalarField>,
}

pub fn assemble(spec: &ProblemSpec, count: usize) -> Result<Assembled, CliError> {
    let grid = spec.grid(count)?;
    let mask = spec.mask(grid.clone());
    let needs_oracle = spec.bc == DataKind::Oracle || spec.f == DataKind::Oracle;
    let oracle = if needs_oracle {
        Some(radial_oracle(spec.oracle_c, &spec.params, spec.dim).map_err(CliError::numerical)?)
    } else {
        None
    };
    let exact = oracle.as_ref().map(|o| o.field(&grid));

    let f = match spec.f {
        DataKind::Zero => ScalarField::zeros(grid.clone()),
        DataKind::Constant => ScalarField::constant(grid.clone(), spec.f_value),
        DataKind::Oracle => oracle.as_ref().unwrap().f_field(&grid),
        DataKind::Affine => {
            return Err(CliError::Config(
                "key `problem.f`: affine right-hand sides are not supported".into(),
            ))
        }
    };
    let bc = match spec.bc {
        DataKind::Zero => BoundaryData::from_trace(&mask, |_| 0.0),
        DataKind::Affine => {
            BoundaryData::from_trace(&mask, |x| 0.5 * x[0] - 0.25 * x[1] + 0.1)
        }
        DataKind::Oracle => {
            let o = oracle.as_ref().unwrap();
            BoundaryData::from_trace(&mask, |x| o.u_at(x))
        }
        DataKind::Constant => {
            return Err(CliError::Config(
                "key `problem.bc`: use `zero`, `affine`, or `oracle`".into(),
            ))
        }
    };
    Ok(Assembled { grid, mask, f, bc, oracle, exact })
}
