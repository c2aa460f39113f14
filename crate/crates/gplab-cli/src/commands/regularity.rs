use crate::config::{solver_config, ProblemSpec, RawConfig};
use crate::output::{write_csv, write_loglog_svg, write_report, Series};
use crate::problem::assemble;
use crate::{CliError, Ctx};
use gplab::field::{gradient_central, Region};
use gplab::regularity::{
    flatness_sequence, holder_fit_gradient, theorem3_band_check, w22_sweep,
};
use gplab::solver::continuation_solve;
use serde_json::json;

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = RawConfig::from_file(&ctx.config_path)?;
    let spec = ProblemSpec::from_config(&cfg)?;
    let sc = solver_config(&cfg, &spec.params)?;

    let center = parse_point(&cfg, "analysis.center")?;
    let r0 = cfg.get_f64_or("analysis.r0", 0.5)?;
    let rho = cfg.get_f64_or("analysis.rho", 0.5)?;
    let levels = cfg.get_usize_or("analysis.levels", 4)?;
    let radii = cfg
        .get_f64_list("analysis.radii")?
        .unwrap_or_else(|| (0..5).map(|k| r0 * 0.5f64.powi(k)).collect());
    let sub_center = parse_point(&cfg, "analysis.subdomain_center")?;
    let sub_radius = cfg.get_f64_or("analysis.subdomain_radius", 0.0)?;
    let band_beta = cfg.get_f64_or("analysis.beta", f64::NAN)?;
    let counts = cfg.get_usize_list("sweep.counts")?.unwrap_or_else(|| vec![spec.count]);
    let epsilons = cfg.get_f64_list("sweep.epsilons")?;
    cfg.finish()?;

    // one solve at the configured resolution feeds the pointwise estimators
    let asm = assemble(&spec, spec.count)?;
    let u_ref = if spec.params.lambda > 0.0 { asm.exact.as_ref() } else { None };
    let rep = continuation_solve(&asm.f, u_ref, &asm.bc, &spec.params, &asm.mask, &sc)
        .map_err(CliError::numerical)?;

    let flat = flatness_sequence(&rep.solution, &asm.mask, center, r0, rho, levels)
        .map_err(CliError::numerical)?;
    let du = gradient_central(&rep.solution, &asm.mask).map_err(CliError::numerical)?;
    let holder =
        holder_fit_gradient(&du, &asm.mask, &[center], &radii).map_err(CliError::numerical)?;

    let flat_rows: Vec<Vec<String>> = flat
        .radii
        .iter()
        .zip(&flat.osc_k)
        .enumerate()
        .map(|(k, (r, o))| vec![k.to_string(), format!("{r:e}"), format!("{o:e}")])
        .collect();
    write_csv(&ctx.out.join("flatness.csv"), &["k", "r", "osc"], &flat_rows)?;
    write_loglog_svg(
        &ctx.out.join("flatness.svg"),
        "plane-fit oscillation vs radius",
        &[Series {
            label: "osc",
            points: flat.radii.iter().copied().zip(flat.osc_k.iter().copied()).collect(),
        }],
    )?;

    // epsilon/h sweep of the interior H2 seminorm, when requested
    let w22 = match epsilons {
        Some(eps_list) => {
            let subdomain = if sub_radius > 0.0 {
                Region::Ball { center: sub_center, radius: sub_radius }
            } else {
                return Err(CliError::Config(
                    "sweep.epsilons requires `analysis.subdomain_radius` > 0".into(),
                ));
            };
            let report = w22_sweep(
                |count, eps| {
                    let stage = ProblemSpec {
                        params: spec.params.with_epsilon(eps),
                        ..spec_clone(&spec)
                    };
                    let asm = assemble(&stage, count).map_err(|e| match e {
                        CliError::Config(m) | CliError::Numerical(m) => {
                            gplab::Error::InvalidParam(m)
                        }
                    })?;
                    let mut sc = sc.clone();
                    sc.epsilon_schedule = vec![eps];
                    let u_ref = if stage.params.lambda > 0.0 { asm.exact.as_ref() } else { None };
                    let rep =
                        continuation_solve(&asm.f, u_ref, &asm.bc, &stage.params, &asm.mask, &sc)?;
                    Ok((rep.solution, asm.mask))
                },
                &counts,
                &eps_list,
                &subdomain,
            )
            .map_err(CliError::numerical)?;
            let rows: Vec<Vec<String>> = report
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.count.to_string(),
                        format!("{:e}", e.h),
                        format!("{:e}", e.epsilon),
                        format!("{:e}", e.h2_seminorm),
                    ]
                })
                .collect();
            write_csv(
                &ctx.out.join("w22.csv"),
                &["count", "h", "epsilon", "h2_seminorm"],
                &rows,
            )?;
            Some(report)
        }
        None => None,
    };

    let band = band_beta.is_finite().then(|| {
        json!({
            "beta": band_beta,
            "inside_band": theorem3_band_check(spec.params.gamma, spec.params.p, band_beta, spec.dim),
        })
    });

    write_report(
        &ctx.out.join("regularity_report.json"),
        cfg.resolved(),
        json!({
            "seed": ctx.seed,
            "flatness": serde_json::to_value(&flat).unwrap(),
            "holder": serde_json::to_value(&holder).unwrap(),
            "w22": w22.as_ref().map(|w| serde_json::to_value(w).unwrap()),
            "band": band,
        }),
    )?;
    println!(
        "regularity: flatness alpha {:?}, holder alpha {:.4}{}",
        flat.alpha_hat,
        holder.alpha_hat,
        w22.map(|w| format!(", w22 uniformity ratio {:.4}", w.uniformity_ratio))
            .unwrap_or_default()
    );
    Ok(())
}

fn parse_point(cfg: &RawConfig, key: &str) -> Result<[f64; 3], CliError> {
    let list = cfg.get_f64_list(key)?.unwrap_or_default();
    let mut p = [0.0; 3];
    if list.len() > 3 {
        return Err(CliError::Config(format!("key `{key}`: at most 3 coordinates")));
    }
    p[..list.len()].copy_from_slice(&list);
    Ok(p)
}

fn spec_clone(spec: &ProblemSpec) -> ProblemSpec {
    ProblemSpec {
        params: spec.params,
        dim: spec.dim,
        domain: spec.domain,
        lo: spec.lo,
        hi: spec.hi,
        count: spec.count,
        bc: spec.bc,
        f: spec.f,
        f_value: spec.f_value,
        oracle_c: spec.oracle_c,
    }
}
