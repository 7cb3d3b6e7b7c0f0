//! Subcommand drivers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use dilute_cw::cumulants::{
    calibrate_statulevicius, cumulants_contour, radius_default, with_bounds, ContourConfig,
    CumulantReport, StatuleviciusConstants,
};
use dilute_cw::exact::{
    exact_cumulants, kolmogorov_distance, log_partition_exact, magnetization_pmf,
};
use dilute_cw::export::{cumulant_table, long_table, number, pmf_table, LongRow, Table};
use dilute_cw::limits::limit_diagnostics;
use dilute_cw::params::{strip_halfwidth, DILUTION_WARNING_THRESHOLD};
use dilute_cw::verify::{all_passed, run_profile};
use dilute_cw::{effective_params, EffectiveParams, ModelParams};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CliError, RunConfig, EXIT_INVARIANT};

/// Cumulant order when `J` is not given.
pub const DEFAULT_ORDER: usize = 8;
/// Size of the pilot run that calibrates `C~`.
pub const PILOT_N: i64 = 100;
const PILOT_ORDER: usize = 10;

fn write_output(cfg: &RunConfig, table: &Table, config: &Value) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = BufWriter::new(file);
            table
                .write(&mut w, config, cfg.format)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table
                .write(&mut w, config, cfg.format)
                .map_err(|e| CliError::io("<stdout>".as_ref(), e))
        }
    }
}

fn model_and_eff(cfg: &RunConfig) -> Result<(ModelParams, EffectiveParams), CliError> {
    let m = cfg.model()?;
    let e = effective_params(&m)?;
    Ok((m, e))
}

fn warn_regime(n: i64, p: f64) -> f64 {
    let indicator = p.powi(3) * (n as f64).powi(2);
    if indicator < DILUTION_WARNING_THRESHOLD {
        eprintln!(
            "{}",
            json!({
                "warning": "DiluteRegime",
                "message": format!("p^3 N^2 = {indicator} < {DILUTION_WARNING_THRESHOLD}; asymptotic statements may not apply"),
                "dilution_indicator": indicator,
            })
        );
    }
    indicator
}

pub fn inspect(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    let n = cfg.require_n()?;
    if n < 1 {
        return Err(dilute_cw::Error::NonpositiveN(n).into());
    }
    let p = cfg.p_at(n);
    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |k: &str, v: Value| t.push(vec![json!(k), v]);
    row("N", json!(n));
    row("p", number(p));
    if let Some(beta) = cfg.beta {
        let (m, e) = model_and_eff(cfg)?;
        row("beta", number(m.beta()));
        row("h0", number(m.h0()));
        row("log_a", number(e.log_a));
        row("b", number(e.b));
        row("beta_eff", number(e.beta_eff));
        row("alpha_n", number(e.alpha_n));
        row("delta_n", number(e.delta_n));
        row("strip_halfwidth", number(e.strip_halfwidth));
        row("limit_strip_halfwidth", number(strip_halfwidth(beta)));
    } else if !(p > 0.0 && p <= 1.0) {
        return Err(dilute_cw::Error::ProbabilityOutOfRange(p).into());
    }
    let indicator = warn_regime(n, p);
    row("dilution_indicator", number(indicator));
    row(
        "regime_warning",
        json!(indicator < DILUTION_WARNING_THRESHOLD),
    );
    write_output(cfg, &t, &cfg.to_json())?;
    Ok(ExitCode::SUCCESS)
}

pub fn pmf(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    let (m, e) = model_and_eff(cfg)?;
    warn_regime(m.n() as i64, m.p());
    let dist = magnetization_pmf(&m, &e, m.h0(), cfg.precision);
    write_output(cfg, &pmf_table(&dist), &cfg.to_json())?;
    Ok(ExitCode::SUCCESS)
}

fn pilot(cfg: &RunConfig, h0: f64, r: f64) -> Result<StatuleviciusConstants, CliError> {
    let m = cfg.model_at(PILOT_N, h0)?;
    let e = effective_params(&m)?;
    Ok(calibrate_statulevicius(
        &m,
        &e,
        r,
        PILOT_ORDER,
        cfg.precision,
    )?)
}

fn constants_json(c: &StatuleviciusConstants) -> Value {
    json!({ "R": c.r, "C": c.c, "C_tilde": c.c_tilde, "pilot_N": c.pilot_n })
}

pub fn cumulants(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    let (m, e) = model_and_eff(cfg)?;
    warn_regime(m.n() as i64, m.p());
    let order = cfg.j.unwrap_or(DEFAULT_ORDER);
    let mut contour = ContourConfig::new(&e, m.n(), m.h0(), order);
    if let Some(r) = cfg.r {
        contour.radius = r;
    }
    if let Some(k) = cfg.k {
        contour.nodes = k;
    }
    if let Some(s) = cfg.source {
        contour.source = s;
    }
    let reports = cumulants_contour(&m, &e, &contour, order, cfg.precision)?;
    let constants = pilot(cfg, m.h0(), contour.radius)?;
    let reports: Vec<CumulantReport> = with_bounds(&reports, &constants, m.n());

    let mut config = cfg.to_json();
    config["J"] = json!(order);
    config["contour"] = json!({
        "R": contour.radius,
        "K": contour.nodes,
        "source": contour.source,
    });
    config["statulevicius"] = constants_json(&constants);
    write_output(cfg, &cumulant_table(&reports), &config)?;
    Ok(ExitCode::SUCCESS)
}

fn limit_rows(cfg: &RunConfig, n: i64) -> Result<(Vec<LongRow>, StatuleviciusConstants), CliError> {
    let m = cfg.model_at(n, cfg.h0)?;
    let e = effective_params(&m)?;
    let dist = magnetization_pmf(&m, &e, m.h0(), cfg.precision);
    let cum = exact_cumulants(&dist, 3)?;
    let r = match cfg.r {
        Some(r) => r,
        None => radius_default(&EffectiveParams::from_beta(m.beta())?),
    };
    let constants = pilot(cfg, m.h0(), r)?;
    let diag = limit_diagnostics(&dist, cum.standardized(3), &constants)?;

    let row = |metric: String, value: f64| LongRow {
        n: m.n(),
        p: m.p(),
        metric,
        value,
    };
    let mut rows = vec![
        row("ks_distance".into(), diag.ks_distance),
        row("ks_times_sqrt_n".into(), diag.ks_times_sqrt_n),
        row(
            "concentration_violations".into(),
            diag.concentration_violations as f64,
        ),
        row("cramer_ratio_sup".into(), diag.cramer_ratio_sup),
        row("mod_gaussian_sup_error".into(), diag.mod_gaussian_sup_error),
    ];
    for pt in &diag.mdp_errors {
        rows.push(row(format!("mdp_error_x{}", pt.x), pt.error));
    }
    Ok((rows, constants))
}

pub fn limits(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    let n = cfg.require_n()?;
    let (rows, constants) = limit_rows(cfg, n)?;
    warn_regime(n, cfg.p_at(n));
    let mut config = cfg.to_json();
    config["statulevicius"] = constants_json(&constants);
    write_output(cfg, &long_table(&rows), &config)?;
    Ok(ExitCode::SUCCESS)
}

pub fn verify(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    let outcomes = run_profile(cfg.profile, cfg.precision);
    for o in &outcomes {
        println!(
            "{} {:>2} {} ({:.2}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.seconds,
            o.detail
        );
    }
    if cfg.out.is_some() {
        let mut t = Table::new(&["id", "name", "passed", "detail"]);
        for o in &outcomes {
            t.push(vec![
                json!(o.id),
                json!(o.name),
                json!(o.passed),
                json!(o.detail),
            ]);
        }
        let mut config = cfg.to_json();
        config["profile"] = json!(format!("{:?}", cfg.profile).to_lowercase());
        write_output(cfg, &t, &config)?;
    }
    if all_passed(&outcomes) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_INVARIANT))
    }
}

fn sweep_rows(cfg: &RunConfig, n: i64) -> Result<Vec<LongRow>, CliError> {
    let m = cfg.model_at(n, cfg.h0)?;
    let e = effective_params(&m)?;
    let dist = magnetization_pmf(&m, &e, m.h0(), cfg.precision);
    let cum = exact_cumulants(&dist, 4)?;
    let nf = m.n() as f64;
    let log_z = log_partition_exact(&m, &e, Complex64::new(m.h0(), 0.0), cfg.precision)?.re;
    let ks = kolmogorov_distance(&dist);
    let row = |metric: &str, value: f64| LongRow {
        n: m.n(),
        p: m.p(),
        metric: metric.into(),
        value,
    };
    Ok(vec![
        row("beta_eff", e.beta_eff),
        row("strip_halfwidth", e.strip_halfwidth),
        row("dilution_indicator", m.dilution_indicator()),
        row("log_partition", log_z),
        row("mean_magnetization", dist.mean().to_f64() / nf),
        row("variance_over_n", dist.variance().to_f64() / nf),
        row("kappa3_std", cum.standardized(3)),
        row("kappa4_std", cum.standardized(4)),
        row("ks_distance", ks),
        row("ks_times_sqrt_n", ks * nf.sqrt()),
    ])
}

pub fn sweep(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    let schedule = match &cfg.n_schedule {
        Some(s) if !s.is_empty() => s.clone(),
        _ => return Err(CliError::config("empty N schedule")),
    };
    let results: Vec<Result<Vec<LongRow>, CliError>> =
        schedule.par_iter().map(|&n| sweep_rows(cfg, n)).collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    for &n in &schedule {
        warn_regime(n, cfg.p_at(n));
    }
    write_output(cfg, &long_table(&rows), &cfg.to_json())?;
    Ok(ExitCode::SUCCESS)
}
