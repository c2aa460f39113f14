use crate::config::{solver_config, DataKind, ProblemSpec, RawConfig};
use crate::output::{write_csv, write_loglog_svg, write_report, Series};
use crate::problem::assemble;
use crate::{CliError, Ctx};
use gplab::solver::continuation_solve;
use serde_json::json;

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = RawConfig::from_file(&ctx.config_path)?;
    let spec = ProblemSpec::from_config(&cfg)?;
    let sc = solver_config(&cfg, &spec.params)?;
    let counts = cfg
        .get_usize_list("sweep.counts")?
        .unwrap_or_else(|| vec![33, 65, 129]);
    cfg.finish()?;
    if spec.bc != DataKind::Oracle || spec.f != DataKind::Oracle {
        return Err(CliError::Config(
            "convergence requires an oracle reference: set problem.bc = oracle and \
             problem.f = oracle"
                .into(),
        ));
    }

    // one ladder rung; independent of the others, so rungs can run in parallel
    let rung = |count: usize| -> Result<(f64, f64, f64), CliError> {
        let asm = assemble(&spec, count)?;
        let u_ref = if spec.params.lambda > 0.0 { asm.exact.as_ref() } else { None };
        let rep = continuation_solve(&asm.f, u_ref, &asm.bc, &spec.params, &asm.mask, &sc)
            .map_err(CliError::numerical)?;
        let exact = asm.exact.as_ref().unwrap();
        Ok((
            asm.grid.h(),
            super::sup_err(&rep.solution, exact, &asm.mask),
            super::l2_err(&rep.solution, exact, &asm.mask),
        ))
    };

    let results: Vec<Result<(f64, f64, f64), CliError>> = if ctx.jobs <= 1 {
        counts.iter().map(|&c| rung(c)).collect()
    } else {
        // fixed assignment of rungs to worker threads keeps output order
        // (and therefore reports) independent of scheduling
        std::thread::scope(|scope| {
            let handles: Vec<_> = counts
                .chunks(counts.len().div_ceil(ctx.jobs))
                .map(|chunk| scope.spawn(|| chunk.iter().map(|&c| rung(c)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        })
    };
    let mut rows = Vec::new();
    let mut hs = Vec::new();
    let mut sups = Vec::new();
    let mut l2s = Vec::new();
    for (count, res) in counts.iter().zip(results) {
        let (h, sup, l2) = res?;
        rows.push(vec![
            count.to_string(),
            format!("{h:e}"),
            format!("{sup:e}"),
            format!("{l2:e}"),
        ]);
        hs.push(h);
        sups.push(sup);
        l2s.push(l2);
    }
    let order_sup = fit_order(&hs, &sups);
    let order_l2 = fit_order(&hs, &l2s);

    write_csv(
        &ctx.out.join("convergence.csv"),
        &["count", "h", "sup_error", "l2_error"],
        &rows,
    )?;
    write_loglog_svg(
        &ctx.out.join("convergence.svg"),
        "error vs h",
        &[
            Series { label: "sup", points: hs.iter().copied().zip(sups.iter().copied()).collect() },
            Series { label: "l2", points: hs.iter().copied().zip(l2s.iter().copied()).collect() },
        ],
    )?;
    write_report(
        &ctx.out.join("convergence.json"),
        cfg.resolved(),
        json!({
            "seed": ctx.seed,
            "counts": counts,
            "h": hs,
            "sup_error": sups,
            "l2_error": l2s,
            "fitted_order_sup": order_sup,
            "fitted_order_l2": order_l2,
        }),
    )?;
    println!(
        "convergence: fitted orders sup {:.3}, l2 {:.3} over {} grids",
        order_sup.unwrap_or(f64::NAN),
        order_l2.unwrap_or(f64::NAN),
        counts.len()
    );
    Ok(())
}

/// Order fit; `None` when errors hit rounding (nothing to fit).
fn fit_order(hs: &[f64], errs: &[f64]) -> Option<f64> {
    if hs.len() < 2 || errs.iter().any(|&e| e <= 1e-13) {
        return None;
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    Some(super::fitted_slope(&lx, &ly))
}
