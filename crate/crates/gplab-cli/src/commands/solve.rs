use crate::config::{solver_config, ProblemSpec, RawConfig};
use crate::output::{write_csv, write_report};
use crate::problem::assemble;
use crate::{CliError, Ctx};
use gplab::field::{write_field, FieldData};
use gplab::solver::continuation_solve;
use serde_json::json;

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = RawConfig::from_file(&ctx.config_path)?;
    let spec = ProblemSpec::from_config(&cfg)?;
    let sc = solver_config(&cfg, &spec.params)?;
    let write_fields = cfg.get_or("output.write_fields", "true") == "true";
    cfg.finish()?;

    let asm = assemble(&spec, spec.count)?;
    let u_ref = if spec.params.lambda > 0.0 { asm.exact.as_ref() } else { None };
    let solved = continuation_solve(&asm.f, u_ref, &asm.bc, &spec.params, &asm.mask, &sc);

    let rep = match solved {
        Ok(rep) => rep,
        Err(e) => {
            // the failure report is still written before exiting with code 2
            write_report(
                &ctx.out.join("solve_report.json"),
                cfg.resolved(),
                json!({ "seed": ctx.seed, "converged": false, "error": e.to_string() }),
            )?;
            return Err(CliError::numerical(e));
        }
    };

    let error_vs_oracle = asm.exact.as_ref().map(|exact| {
        super::sup_err(&rep.solution, exact, &asm.mask)
    });
    if write_fields {
        let provenance = json!({
            "role": "solution",
            "gamma": spec.params.gamma,
            "p": spec.params.p,
            "seed": ctx.seed,
        });
        write_field(
            &ctx.out.join("solution.field"),
            &FieldData::Scalar(rep.solution.clone()),
            Some(provenance),
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
    }

    let rows: Vec<Vec<String>> = rep
        .diagnostics
        .update_history
        .iter()
        .zip(&rep.diagnostics.inner_iters)
        .enumerate()
        .map(|(k, (upd, inner))| vec![(k + 1).to_string(), format!("{upd:e}"), inner.to_string()])
        .collect();
    write_csv(&ctx.out.join("residual.csv"), &["outer_iter", "update_sup", "inner_iters"], &rows)?;

    write_report(
        &ctx.out.join("solve_report.json"),
        cfg.resolved(),
        json!({
            "seed": ctx.seed,
            "converged": true,
            "outer_iters": rep.diagnostics.outer_iters,
            "final_update_sup": rep.diagnostics.final_update_sup,
            "final_residual_sup": rep.diagnostics.final_residual_sup,
            "error_vs_oracle": error_vs_oracle,
            "oracle": asm.oracle.as_ref().map(|o| serde_json::to_value(o).unwrap()),
            "diagnostics": serde_json::to_value(&rep.diagnostics).unwrap(),
        }),
    )?;

    println!(
        "solve: converged in {} outer iterations (final update {:.3e})",
        rep.diagnostics.outer_iters, rep.diagnostics.final_update_sup
    );
    if let Some(err) = error_vs_oracle {
        println!("solve: sup error vs oracle {err:.6e}");
    }
    Ok(())
}
