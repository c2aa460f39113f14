use crate::config::{ProblemSpec, RawConfig};
use crate::output::write_report;
use crate::{CliError, Ctx};
use gplab::field::{write_field, FieldData, GridSpec};
use gplab::oracle::{power_profile_1d, radial_oracle, H2Classification};
use serde_json::json;

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = RawConfig::from_file(&ctx.config_path)?;
    let kind = cfg.get_or("oracle.kind", "radial").to_string();
    match kind.as_str() {
        "radial" => radial(ctx, &cfg),
        "power" => power(ctx, &cfg),
        other => Err(CliError::Config(format!(
            "key `oracle.kind`: `{other}` is not one of radial, power"
        ))),
    }
}

fn radial(ctx: &Ctx, cfg: &RawConfig) -> Result<(), CliError> {
    let spec = ProblemSpec::from_config(cfg)?;
    cfg.finish()?;
    let oracle =
        radial_oracle(spec.oracle_c, &spec.params, spec.dim).map_err(CliError::numerical)?;
    let grid = spec.grid(spec.count)?;
    let provenance = json!({
        "role": "radial-oracle",
        "c": oracle.c,
        "s": oracle.s,
        "f_const": oracle.f_const,
        "certified": "away from the origin (unbounded Hessian there when s < 2)",
    });
    write_field(
        &ctx.out.join("oracle_u.field"),
        &FieldData::Scalar(oracle.field(&grid)),
        Some(provenance.clone()),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    write_field(
        &ctx.out.join("oracle_f.field"),
        &FieldData::Scalar(oracle.f_field(&grid)),
        Some(provenance),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    write_report(
        &ctx.out.join("oracle.json"),
        cfg.resolved(),
        json!({
            "seed": ctx.seed,
            "oracle": serde_json::to_value(&oracle).unwrap(),
            "gradient_exponent": oracle.gradient_exponent(),
        }),
    )?;
    println!("oracle: u = {} |x|^{}, f = {}", oracle.c, oracle.s, oracle.f_const);
    Ok(())
}

fn power(ctx: &Ctx, cfg: &RawConfig) -> Result<(), CliError> {
    let beta = cfg.get_f64("oracle.beta")?;
    let count = cfg.get_usize_or("problem.count", 1025)?;
    let lo = cfg.get_f64_or("problem.lo", -1.0)?;
    let hi = cfg.get_f64_or("problem.hi", 1.0)?;
    cfg.finish()?;
    let grid = GridSpec::cube(1, lo, hi, count).map_err(|e| CliError::Config(e.to_string()))?;
    let (u, class) = power_profile_1d(beta, &grid).map_err(|e| CliError::Config(e.to_string()))?;
    write_field(
        &ctx.out.join("oracle_u.field"),
        &FieldData::Scalar(u),
        Some(json!({ "role": "power-profile", "beta": beta })),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let class_json = match class {
        H2Classification::Divergent => json!({ "kind": "divergent" }),
        H2Classification::Finite(v) => json!({ "kind": "finite", "value": v }),
    };
    write_report(
        &ctx.out.join("oracle.json"),
        cfg.resolved(),
        json!({ "seed": ctx.seed, "beta": beta, "h2_integral": class_json }),
    )?;
    println!("oracle: |x1|^{beta} profile, H2 integral {class:?}");
    Ok(())
}
