use super::assemble::{assemble_frozen_zero_order, DiscretizationMode, FrozenSystem, ZeroOrder};
use super::sparse::bicgstab;
use crate::error::{Error, Result};
use crate::field::{DomainMask, ScalarField, SymMat, SymMatrixField};
use crate::operator::{coefficient_matrix, ProblemParams};
use serde::{Deserialize, Serialize};

/// Inner/outer iteration controls for the frozen-coefficient Picard loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: DiscretizationMode,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Sup-norm of successive iterates at which the outer loop stops.
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    /// Damping theta in (0, 1]; halved automatically when updates grow.
    pub damping: f64,
    /// Strictly decreasing, positive. A single entry means one plain solve.
    pub epsilon_schedule: Vec<f64>,
    #[serde(skip)]
    pub seed_field: Option<ScalarField>,
}

impl SolverConfig {
    /// Defaults for the given parameters: aligned stencils when `|p - 2| >=
    /// 0.5` (monotonicity), central otherwise; single-epsilon schedule.
    pub fn default_for(params: &ProblemParams) -> Self {
        let mode = if (params.p - 2.0).abs() >= 0.5 {
            DiscretizationMode::Aligned
        } else {
            DiscretizationMode::Central
        };
        Self {
            mode,
            inner_tol: 1e-11,
            inner_max_iter: 200_000,
            outer_tol: 1e-9,
            outer_max_iter: 200,
            damping: 1.0,
            epsilon_schedule: vec![params.epsilon],
            seed_field: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(Error::InvalidParam("tolerances must be > 0".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParam("damping must be in (0, 1]".into()));
        }
        if self.epsilon_schedule.is_empty() {
            return Err(Error::InvalidParam("epsilon schedule must be non-empty".into()));
        }
        for w in self.epsilon_schedule.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidParam("epsilon schedule must be strictly decreasing".into()));
            }
        }
        if !(self.epsilon_schedule[self.epsilon_schedule.len() - 1] > 0.0) {
            return Err(Error::InvalidParam("epsilon schedule must stay positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryProvenance {
    ExactTrace,
    Sampled,
}

/// Dirichlet data on the boundary nodes of a mask.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    values: Vec<f64>,
    pub provenance: BoundaryProvenance,
}

impl BoundaryData {
    /// Samples `g` at every boundary node (exact trace of an analytic datum).
    pub fn from_trace(mask: &DomainMask, g: impl Fn(&[f64; 3]) -> f64) -> Self {
        let grid = mask.grid();
        let mut values = vec![0.0; grid.num_nodes()];
        for node in mask.boundary_nodes() {
            values[node] = g(&grid.point(node));
        }
        Self { values, provenance: BoundaryProvenance::ExactTrace }
    }

    pub fn from_field(mask: &DomainMask, field: &ScalarField) -> Result<Self> {
        let mut values = vec![0.0; mask.grid().num_nodes()];
        for node in mask.boundary_nodes() {
            let v = field.get(node);
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("non-finite boundary value at node {node}")));
            }
            values[node] = v;
        }
        Ok(Self { values, provenance: BoundaryProvenance::Sampled })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup(&self, mask: &DomainMask) -> f64 {
        mask.boundary_nodes().fold(0.0f64, |m, n| m.max(self.values[n].abs()))
    }
}

/// Comparison-principle record: `sup |v| <= sup |bc| + sup |RHS| / lambda`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonCheck {
    pub sup_solution: f64,
    pub sup_boundary: f64,
    pub sup_rhs_over_run: f64,
    pub lambda: f64,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsilonStage {
    pub epsilon: f64,
    pub outer_iters: usize,
    pub inner_iters: Vec<usize>,
    /// sup distance from the previous stage's solution (0 for the first).
    pub sup_distance_from_prev: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub outer_iters: usize,
    pub inner_iters: Vec<usize>,
    pub update_history: Vec<f64>,
    pub final_update_sup: f64,
    /// Sup-norm defect of the last assembled frozen system at the returned
    /// iterate.
    pub final_residual_sup: f64,
    pub comparison: Option<ComparisonCheck>,
    pub epsilon_trace: Vec<EpsilonStage>,
    pub mode: DiscretizationMode,
}

/// Solver output: the solution field plus iteration diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: ScalarField,
    pub diagnostics: SolveDiagnostics,
}

/// Which regularized problem a Picard run solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    /// gamma in (-1, 0]: the gradient factor moves to the right-hand side,
    /// `-tr(A(Dv) D^2 v) + lambda v = f (|Dv|^2 + eps^2)^{-gamma/2} + lambda u_ref`.
    Singular,
    /// gamma > 0: divide the degenerate form by the weight,
    /// `-tr(A(Dv) D^2 v) + (lambda / W) v = (f + lambda u_ref) / W`,
    /// `W = (|Dv|^2 + eps^2)^{gamma/2}`.
    Degenerate,
}

/// One harmonic (Laplace) solve extending the boundary data inward; the
/// default initial guess.
pub fn harmonic_extension(
    bc: &BoundaryData,
    mask: &DomainMask,
    config: &SolverConfig,
) -> Result<ScalarField> {
    let grid = mask.grid();
    let ident = SymMatrixField::from_fn(grid.clone(), |_| SymMat::identity(grid.dim()));
    let sys = assemble_frozen_zero_order(&ident, &ZeroOrder::Const(0.0), mask, config.mode)?;
    let rhs = sys.rhs(|_| 0.0, bc.values());
    let (x, _, _) = bicgstab(&sys.matrix, &rhs, None, config.inner_tol, config.inner_max_iter)?;
    Ok(sys.scatter(&x, bc.values(), mask))
}

/// Regularized problem for the singular branch (`gamma in (-1, 0]`).
pub fn solve_singular(
    f: &ScalarField,
    u_ref: Option<&ScalarField>,
    bc: &BoundaryData,
    params: &ProblemParams,
    mask: &DomainMask,
    config: &SolverConfig,
) -> Result<SolveReport> {
    if params.gamma > 0.0 {
        return Err(Error::InvalidParam(format!(
            "singular branch requires gamma <= 0, got {}",
            params.gamma
        )));
    }
    if !(params.epsilon > 0.0) {
        return Err(Error::SingularNeedsEpsilon);
    }
    picard_loop(Branch::Singular, f, u_ref, bc, params, mask, config)
}

/// Regularized problem for the degenerate branch (`gamma > 0`).
pub fn solve_degenerate(
    f: &ScalarField,
    u_ref: Option<&ScalarField>,
    bc: &BoundaryData,
    params: &ProblemParams,
    mask: &DomainMask,
    config: &SolverConfig,
) -> Result<SolveReport> {
    if !(params.gamma > 0.0) {
        return Err(Error::InvalidParam(format!(
            "degenerate branch requires gamma > 0, got {}",
            params.gamma
        )));
    }
    if !(params.epsilon > 0.0) {
        return Err(Error::InvalidParam("degenerate branch solves require epsilon > 0".into()));
    }
    picard_loop(Branch::Degenerate, f, u_ref, bc, params, mask, config)
}

/// Runs the branch appropriate for `gamma` down the epsilon schedule, each
/// stage seeded with the previous stage's solution.
pub fn continuation_solve(
    f: &ScalarField,
    u_ref: Option<&ScalarField>,
    bc: &BoundaryData,
    params: &ProblemParams,
    mask: &DomainMask,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let mut stage_config = config.clone();
    let mut trace: Vec<EpsilonStage> = Vec::new();
    let mut report: Option<SolveReport> = None;
    for &eps in &config.epsilon_schedule {
        let stage_params = params.with_epsilon(eps);
        stage_config.epsilon_schedule = vec![eps];
        stage_config.seed_field = report.as_ref().map(|r| r.solution.clone());
        let rep = if params.gamma > 0.0 {
            solve_degenerate(f, u_ref, bc, &stage_params, mask, &stage_config)?
        } else {
            solve_singular(f, u_ref, bc, &stage_params, mask, &stage_config)?
        };
        let dist = match &report {
            Some(prev) => sup_diff(&rep.solution, &prev.solution, mask),
            None => 0.0,
        };
        trace.push(EpsilonStage {
            epsilon: eps,
            outer_iters: rep.diagnostics.outer_iters,
            inner_iters: rep.diagnostics.inner_iters.clone(),
            sup_distance_from_prev: dist,
        });
        report = Some(rep);
    }
    let mut report = report.unwrap();
    report.diagnostics.epsilon_trace = trace;
    Ok(report)
}

fn sup_diff(a: &ScalarField, b: &ScalarField, mask: &DomainMask) -> f64 {
    let mut m = 0.0f64;
    for idx in a.grid().nodes() {
        if !mask.is_exterior(idx) {
            m = m.max((a.get(idx) - b.get(idx)).abs());
        }
    }
    m
}

fn picard_loop(
    branch: Branch,
    f: &ScalarField,
    u_ref: Option<&ScalarField>,
    bc: &BoundaryData,
    params: &ProblemParams,
    mask: &DomainMask,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let grid = mask.grid();
    let dim = grid.dim();
    let eps2 = params.epsilon * params.epsilon;
    let lambda = params.lambda;

    let mut v = match &config.seed_field {
        Some(seed) => {
            let mut v = seed.clone();
            // seeds respect the boundary data
            for node in mask.boundary_nodes() {
                v.set(node, bc.values()[node]);
            }
            v
        }
        None => harmonic_extension(bc, mask, config)?,
    };

    let mut coeffs = SymMatrixField::from_fn(grid.clone(), |_| SymMat::identity(dim));
    let mut inner_iters = Vec::new();
    let mut update_history = Vec::new();
    let mut theta = config.damping;
    let mut grow_streak = 0usize;
    let mut last_update = f64::INFINITY;
    let mut sup_rhs_over_run = 0.0f64;

    for outer in 1..=config.outer_max_iter {
        // freeze coefficients and right-hand side at the current iterate
        let mut source = vec![0.0; grid.num_nodes()];
        let mut zero_order = vec![0.0; grid.num_nodes()];
        for node in mask.interior_nodes() {
            let g = crate::field::gradient_at_node(&v, mask, node)?;
            let mut g2 = eps2;
            for a in 0..dim {
                g2 += g[a] * g[a];
            }
            let a = coefficient_matrix(&g, dim, params.p, params.epsilon)?;
            coeffs.set(node, &a);
            let refv = u_ref.map(|r| r.get(node)).unwrap_or(0.0);
            match branch {
                Branch::Singular => {
                    source[node] = f.get(node) * g2.powf(-params.gamma / 2.0) + lambda * refv;
                    zero_order[node] = lambda;
                }
                Branch::Degenerate => {
                    let w = g2.powf(params.gamma / 2.0);
                    source[node] = (f.get(node) + lambda * refv) / w;
                    zero_order[node] = lambda / w;
                }
            }
            sup_rhs_over_run = sup_rhs_over_run.max(source[node].abs());
        }
        let sys = assemble_frozen_zero_order(
            &coeffs,
            &ZeroOrder::PerNode(zero_order),
            mask,
            config.mode,
        )?;
        let rhs = sys.rhs(|node| source[node], bc.values());
        let x0: Vec<f64> = sys.interior.iter().map(|&n| v.get(n)).collect();
        let (x, iters, _) =
            bicgstab(&sys.matrix, &rhs, Some(&x0), config.inner_tol, config.inner_max_iter)?;
        inner_iters.push(iters);
        let solved = sys.scatter(&x, bc.values(), mask);

        let update = sup_diff(&solved, &v, mask);
        update_history.push(update);
        if update > last_update {
            grow_streak += 1;
            if grow_streak >= 10 {
                return Err(Error::OuterDiverged {
                    grow_steps: grow_streak,
                    trace: update_history,
                });
            }
            if grow_streak % 3 == 0 {
                theta = (theta * 0.5).max(1.0 / 64.0);
            }
        } else {
            grow_streak = 0;
        }
        last_update = update;

        if theta == 1.0 {
            v = solved;
        } else {
            for node in mask.interior_nodes() {
                v.set(node, (1.0 - theta) * v.get(node) + theta * solved.get(node));
            }
        }
        if update <= config.outer_tol {
            let final_residual_sup = frozen_defect_sup(&sys, &rhs, &v);
            let comparison = (lambda > 0.0).then(|| {
                let sup_boundary = bc.sup(mask);
                let sup_solution =
                    mask.grid().nodes().filter(|&n| !mask.is_exterior(n)).fold(0.0f64, |m, n| {
                        m.max(v.get(n).abs())
                    });
                let bound = sup_boundary + sup_rhs_over_run / lambda;
                ComparisonCheck {
                    sup_solution,
                    sup_boundary,
                    sup_rhs_over_run,
                    lambda,
                    bound,
                    satisfied: sup_solution <= bound + 1e-10 * (1.0 + bound),
                }
            });
            let epsilon_trace = vec![EpsilonStage {
                epsilon: params.epsilon,
                outer_iters: outer,
                inner_iters: inner_iters.clone(),
                sup_distance_from_prev: 0.0,
            }];
            return Ok(SolveReport {
                solution: v,
                diagnostics: SolveDiagnostics {
                    outer_iters: outer,
                    inner_iters,
                    update_history,
                    final_update_sup: update,
                    final_residual_sup,
                    comparison,
                    epsilon_trace,
                    mode: config.mode,
                },
            });
        }
    }
    Err(Error::OuterMaxIter { max_iter: config.outer_max_iter, last_update })
}

/// Sup-norm of `A x - b` for the equation ordering of `sys`.
fn frozen_defect_sup(sys: &FrozenSystem, rhs: &[f64], v: &ScalarField) -> f64 {
    let x: Vec<f64> = sys.interior.iter().map(|&n| v.get(n)).collect();
    let mut y = vec![0.0; x.len()];
    sys.matrix.matvec(&x, &mut y);
    y.iter().zip(rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}
