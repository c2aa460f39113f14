use crate::config::{ProblemSpec, RawConfig};
use crate::output::{write_csv, write_report};
use crate::{CliError, Ctx};
use gplab::cordes::{cordes_field, delta_closed_form, max_p_for_cordes, per_node_deltas};
use gplab::field::{gradient_central, read_field, DomainMask, FieldData, SymMat, SymMatrixField};
use gplab::operator::coefficient_matrix;
use gplab::oracle::radial_oracle;
use serde_json::json;
use std::path::PathBuf;

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = RawConfig::from_file(&ctx.config_path)?;
    let spec = ProblemSpec::from_config(&cfg)?;
    let source = cfg.get_or("cordes.source", "identity").to_string();
    let input_raw = cfg.get_or("cordes.input_field", "").trim().to_string();
    let input_field = (!input_raw.is_empty()).then(|| PathBuf::from(&input_raw));
    cfg.finish()?;

    let (coeffs, mask) = match source.as_str() {
        "identity" => {
            let grid = spec.grid(spec.count)?;
            let mask = spec.mask(grid.clone());
            let dim = grid.dim();
            (SymMatrixField::from_fn(grid, |_| SymMat::identity(dim)), mask)
        }
        "oracle" => {
            let oracle = radial_oracle(spec.oracle_c, &spec.params, spec.dim)
                .map_err(CliError::numerical)?;
            let grid = spec.grid(spec.count)?;
            let mask = spec.mask(grid.clone());
            let u = oracle.field(&grid);
            coeffs_from_gradient(&u, &mask, &spec)?
        }
        "file" => {
            let path = input_field.ok_or_else(|| {
                CliError::Config("cordes.source = file requires `cordes.input_field`".into())
            })?;
            let file = read_field(&path).map_err(|e| CliError::Config(e.to_string()))?;
            let u = match file.data {
                FieldData::Scalar(u) => u,
                _ => {
                    return Err(CliError::Config(format!(
                        "{}: expected a scalar field",
                        path.display()
                    )))
                }
            };
            let mask = DomainMask::solid_box(u.grid().clone());
            coeffs_from_gradient(&u, &mask, &spec)?
        }
        other => {
            return Err(CliError::Config(format!(
                "key `cordes.source`: `{other}` is not one of identity, oracle, file"
            )))
        }
    };

    let report = cordes_field(&coeffs, &mask).map_err(CliError::numerical)?;
    let deltas = per_node_deltas(&coeffs, &mask).map_err(CliError::numerical)?;
    let rows: Vec<Vec<String>> = deltas
        .iter()
        .map(|&(node, delta)| {
            let x = mask.grid().point(node);
            vec![
                node.to_string(),
                format!("{}", x[0]),
                format!("{}", x[1]),
                format!("{}", x[2]),
                format!("{delta:e}"),
            ]
        })
        .collect();
    write_csv(&ctx.out.join("cordes_per_node.csv"), &["node", "x", "y", "z", "delta"], &rows)?;

    // closed-form family summary for the problem's (p, n)
    let n = spec.dim;
    let family_delta = (0..=200)
        .map(|k| delta_closed_form(n, spec.params.p, k as f64 / 200.0))
        .fold(f64::INFINITY, f64::min);
    let max_p = max_p_for_cordes(n).ok();

    write_report(
        &ctx.out.join("cordes_report.json"),
        cfg.resolved(),
        json!({
            "seed": ctx.seed,
            "field": serde_json::to_value(&report).unwrap(),
            "closed_form": {
                "n": n,
                "p": spec.params.p,
                "family_delta_min": if n >= 2 { Some(family_delta) } else { None },
                "max_admissible_p": max_p,
            },
        }),
    )?;
    println!(
        "cordes: satisfied = {}, delta = {:.6} (raw {:.6}), worst node {}",
        report.satisfied, report.delta, report.delta_raw, report.worst_node
    );
    Ok(())
}

fn coeffs_from_gradient(
    u: &gplab::field::ScalarField,
    mask: &DomainMask,
    spec: &ProblemSpec,
) -> Result<(SymMatrixField, DomainMask), CliError> {
    let dim = u.grid().dim();
    let du = gradient_central(u, mask).map_err(CliError::numerical)?;
    let mut coeffs = SymMatrixField::from_fn(u.grid().clone(), |_| SymMat::identity(dim));
    for idx in mask.interior_nodes() {
        let a = coefficient_matrix(&du.get(idx), dim, spec.params.p, spec.params.epsilon)
            .map_err(CliError::numerical)?;
        coeffs.set(idx, &a);
    }
    Ok((coeffs, mask.clone()))
}
