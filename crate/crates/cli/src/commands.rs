use std::path::Path;

use dpm_rul::diagnostics::{autocorrelation, summarize};
use dpm_rul::dist::mix_seed;
use dpm_rul::gibbs::{fit, ChainConfig, PosteriorDraw};
use dpm_rul::model::{LinearPathParams, ModelKind, PriorSpec, UnitPath};
use dpm_rul::rul::{ks_to_truth, RulDistribution};
use dpm_rul::sim::{run_case, CaseRunConfig, CaseSpec, FitMode, Method};
use dpm_rul::tmcmc::{hpd_interval, predict_residual_life, tmcmc_run, TmcmcConfig};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::io::{
    draws_header, fmt_f64, load_degradation_csv, read_draws, read_unit_paths, write_csv,
    write_draws, write_json, write_paths_csv, Metadata,
};
use crate::{
    Command, DiagnoseArgs, FitArgs, FitModeArg, MethodArg, ModelArg, PredictArgs, SimulateArgs,
};

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    }
}

fn model_kind(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::Sp => ModelKind::SemiParametric,
        ModelArg::P => ModelKind::Parametric,
    }
}

/// Named scalar series: alpha, one slope per unit, sigma_eps2.
fn parameter_series(unit_ids: &[String], draws: &[PosteriorDraw]) -> Vec<(String, Vec<f64>)> {
    let mut series = vec![("alpha".to_string(), draws.iter().map(|d| d.alpha).collect())];
    for (j, id) in unit_ids.iter().enumerate() {
        series.push((
            format!("beta_{id}"),
            draws.iter().map(|d| d.betas[j]).collect(),
        ));
    }
    series.push((
        "sigma_eps2".to_string(),
        draws.iter().map(|d| d.sigma_eps2).collect(),
    ));
    series
}

/// Writes `acf.csv` and `summary.json`.
fn write_chain_reports(
    out: &Path,
    meta: &Metadata,
    unit_ids: &[String],
    draws: &[PosteriorDraw],
    max_lag: usize,
) -> Result<()> {
    let series = parameter_series(unit_ids, draws);
    let max_lag = max_lag.min(draws.len().saturating_sub(1));
    let acfs = series
        .iter()
        .map(|(_, xs)| autocorrelation(xs, max_lag))
        .collect::<dpm_rul::Result<Vec<_>>>()?;
    let mut header = vec!["lag".to_string()];
    header.extend(series.iter().map(|(name, _)| name.clone()));
    let rows: Vec<Vec<String>> = (0..=max_lag)
        .map(|k| {
            let mut row = vec![k.to_string()];
            row.extend(acfs.iter().map(|a| fmt_f64(a.rho[k])));
            row
        })
        .collect();
    write_csv(&out.join("acf.csv"), meta, &header, &rows)?;

    let summaries = series
        .iter()
        .map(|(name, xs)| summarize(xs, name.clone()))
        .collect::<dpm_rul::Result<Vec<_>>>()?;
    let degenerate: Vec<&str> = series
        .iter()
        .zip(&acfs)
        .filter(|(_, a)| a.degenerate)
        .map(|((n, _), _)| n.as_str())
        .collect();
    write_json(
        &out.join("summary.json"),
        meta,
        json!({
            "retained_draws": draws.len(),
            "parameters": summaries,
            "degenerate_chains": degenerate,
        }),
    )
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let dataset = load_degradation_csv(&a.data, a.threshold)?;
    let kind = model_kind(a.model);
    let prior = PriorSpec::for_dataset(kind, a.prior, &dataset)?;
    let cfg = ChainConfig {
        total_iters: a.iters,
        burn_in: a.burnin,
        thin: a.thin,
        seed: a.seed,
        mh_inner_steps: a.mh_steps,
        keep_state: false,
    };
    let chain = fit(&dataset, &prior, &cfg)?;
    let meta = Metadata::new("fit")
        .with("data", a.data.display())
        .with("model", kind.short_name())
        .with("prior", a.prior)
        .with("threshold", a.threshold)
        .with("iters", a.iters)
        .with("burnin", a.burnin)
        .with("thin", a.thin)
        .with("mh_steps", a.mh_steps)
        .with("seed", a.seed);
    write_draws(
        &a.out.join("draws.csv"),
        &meta,
        &chain.unit_ids,
        &chain.draws,
    )?;
    write_chain_reports(&a.out, &meta, &chain.unit_ids, &chain.draws, 50)
}

#[derive(Debug, Default)]
struct PredictionRow {
    unit_id: String,
    status: String,
    t_k: Option<f64>,
    median: Option<f64>,
    interval: Option<(f64, f64)>,
    retained_fraction: Option<f64>,
    acceptance_rate: Option<f64>,
    ks: Option<f64>,
    error: Option<f64>,
}

fn resolve_tk(a: &PredictArgs, path: Option<&UnitPath>) -> std::result::Result<f64, String> {
    if let Some(p) = path {
        if p.measurements()[0] >= a.threshold {
            return Err("skipped: first reading already at or above the threshold".into());
        }
    }
    if a.tk == "auto" {
        let p = path.ok_or("--tk auto needs --data with this unit")?;
        return p
            .last_time_below(a.threshold)
            .ok_or_else(|| "skipped: no reading below the threshold".into());
    }
    match a.tk.parse::<f64>() {
        Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
        _ => Err(format!("invalid --tk {:?}", a.tk)),
    }
}

fn predict_one(
    a: &PredictArgs,
    draws: &[PosteriorDraw],
    index: usize,
    t_k: f64,
    seed: u64,
    row: &mut PredictionRow,
) -> dpm_rul::Result<()> {
    let dist =
        RulDistribution::from_draws(draws, index, t_k, a.threshold, a.method == MethodArg::M1)?;
    row.retained_fraction = Some(dist.triples().len() as f64 / draws.len() as f64);
    let out = tmcmc_run(&dist, &TmcmcConfig::for_distribution(&dist, seed))?;
    let median = predict_residual_life(&out.samples)?;
    row.median = Some(median);
    row.interval = Some(hpd_interval(&out.samples, a.mass)?);
    row.acceptance_rate = Some(out.acceptance_rate);
    if let Some(p) = &a.true_params {
        row.ks = Some(ks_to_truth(
            &dist,
            &LinearPathParams::new(p[0], p[1], p[2])?,
        )?);
    }
    row.error = a.true_rul.map(|t| median - t);
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    if !(a.mass > 0.0 && a.mass < 1.0) {
        return Err(CliError::Usage(format!("--mass {} outside (0, 1)", a.mass)));
    }
    let file = read_draws(&a.draws)?;
    let paths = a.data.as_deref().map(read_unit_paths).transpose()?;
    let units: Vec<String> = if a.units.is_empty() {
        file.unit_ids.clone()
    } else {
        a.units.clone()
    };
    if (a.true_params.is_some() || a.true_rul.is_some()) && units.len() != 1 {
        return Err(CliError::Usage(
            "--true-rul and --true-params need exactly one --unit".into(),
        ));
    }

    let mut rows = Vec::with_capacity(units.len());
    for (i, id) in units.iter().enumerate() {
        let mut row = PredictionRow {
            unit_id: id.clone(),
            ..PredictionRow::default()
        };
        let path = paths
            .as_ref()
            .and_then(|ps| ps.iter().find(|p| p.unit_id() == id));
        let outcome = match file.unit_ids.iter().position(|u| u == id) {
            None => Err(format!("unit {id} not in draws file")),
            Some(index) => resolve_tk(a, path).and_then(|t_k| {
                row.t_k = Some(t_k);
                predict_one(
                    a,
                    &file.draws,
                    index,
                    t_k,
                    mix_seed(a.seed, i as u64),
                    &mut row,
                )
                .map_err(|e| e.to_string())
            }),
        };
        row.status = match outcome {
            Ok(()) => "ok".into(),
            Err(msg) => {
                eprintln!("warning: unit {id}: {msg}");
                msg
            }
        };
        rows.push(row);
    }

    let method = match a.method {
        MethodArg::M1 => Method::M1,
        MethodArg::M2 => Method::M2,
    };
    let mut meta = Metadata::new("predict")
        .with("draws", a.draws.display())
        .with("tk", &a.tk)
        .with("threshold", a.threshold)
        .with("method", method.short_name())
        .with("mass", a.mass)
        .with("seed", a.seed);
    for key in ["model", "prior", "seed"] {
        if let Some(v) = file.metadata.get(key) {
            meta = meta.with(&format!("fit_{key}"), v);
        }
    }
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let header: Vec<String> = [
        "unit_id",
        "status",
        "t_k",
        "median",
        "hpd_lo",
        "hpd_hi",
        "retained_fraction",
        "acceptance_rate",
        "ks",
        "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.unit_id.clone(),
                r.status.clone(),
                opt(r.t_k),
                opt(r.median),
                opt(r.interval.map(|i| i.0)),
                opt(r.interval.map(|i| i.1)),
                opt(r.retained_fraction),
                opt(r.acceptance_rate),
                opt(r.ks),
                opt(r.error),
            ]
        })
        .collect();
    write_csv(&a.out.join("predictions.csv"), &meta, &header, &csv_rows)?;
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "unit_id": r.unit_id,
                "status": r.status,
                "t_k": r.t_k,
                "median": r.median,
                "interval": r.interval,
                "retained_fraction": r.retained_fraction,
                "acceptance_rate": r.acceptance_rate,
                "ks": r.ks,
                "error": r.error,
            })
        })
        .collect();
    write_json(
        &a.out.join("predictions.json"),
        &meta,
        json!({ "predictions": json_rows }),
    )
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let p_prior = a.p_prior.unwrap_or(a.prior);
    if !(1..=3).contains(&p_prior) {
        return Err(CliError::Usage(format!(
            "parametric prior scenarios are 1-3, got {p_prior}; pass --p-prior"
        )));
    }
    let case = CaseSpec::study(a.case, a.n, a.m, a.seed)?;
    let mut cfg = CaseRunConfig::new(a.prior, p_prior, a.seed);
    cfg.chain = ChainConfig {
        total_iters: a.iters,
        burn_in: a.burnin,
        thin: a.thin,
        ..ChainConfig::default()
    };
    cfg.fit_mode = match a.fit_mode {
        FitModeArg::PerUnit => FitMode::PerUnit,
        FitModeArg::Single => FitMode::Single,
    };
    let result = run_case(&case, &cfg)?;

    let meta = Metadata::new("simulate")
        .with("case", a.case)
        .with("n", a.n)
        .with("m", a.m)
        .with("prior_sp", a.prior)
        .with("prior_p", p_prior)
        .with("threshold", case.threshold)
        .with("alpha_true", case.alpha_true)
        .with("sigma_eps2_true", case.sigma_eps2_true)
        .with("iters", a.iters)
        .with("burnin", a.burnin)
        .with("thin", a.thin)
        .with(
            "fit_mode",
            match a.fit_mode {
                FitModeArg::PerUnit => "per-unit",
                FitModeArg::Single => "single",
            },
        )
        .with("seed", a.seed);

    write_paths_csv(&a.out.join("paths.csv"), &meta, &result.data.paths)?;

    let combos = [
        (ModelKind::SemiParametric, Method::M1),
        (ModelKind::SemiParametric, Method::M2),
        (ModelKind::Parametric, Method::M1),
        (ModelKind::Parametric, Method::M2),
    ];
    let mut header: Vec<String> = ["unit_id", "true_beta", "t_k", "true_rul"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for (k, m) in combos {
        for col in ["median", "hpd_lo", "hpd_hi", "ks"] {
            header.push(format!("{}_{}_{col}", k.short_name(), m.short_name()));
        }
    }
    let rows: Vec<Vec<String>> = result
        .units
        .iter()
        .map(|u| {
            let mut row = vec![
                u.unit_id.clone(),
                fmt_f64(u.true_beta),
                fmt_f64(u.t_k),
                fmt_f64(u.true_rul),
            ];
            for (k, m) in combos {
                let p = u
                    .prediction(k, m)
                    .expect("run_case fills every combination");
                row.extend([p.median, p.interval.0, p.interval.1, p.ks].map(fmt_f64));
            }
            row
        })
        .collect();
    write_csv(&a.out.join("units.csv"), &meta, &header, &rows)?;

    let aggregates: Vec<Value> = result
        .aggregates
        .iter()
        .map(|g| {
            json!({
                "model": g.kind.short_name(),
                "method": g.method.short_name(),
                "rmse": g.rmse,
                "mae": g.mae,
                "coverage": g.coverage,
                "units": result.units.len(),
            })
        })
        .collect();
    let alpha: serde_json::Map<String, Value> = result
        .alpha_summaries
        .iter()
        .map(|(k, s)| Ok((k.short_name().to_string(), serde_json::to_value(s)?)))
        .collect::<Result<_>>()?;
    write_json(
        &a.out.join("aggregate.json"),
        &meta,
        json!({ "aggregates": aggregates, "alpha": alpha }),
    )
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    let file = read_draws(&a.draws)?;
    let mut meta = Metadata::new("diagnose")
        .with("draws", a.draws.display())
        .with("max_lag", a.max_lag);
    for (k, v) in file.metadata.entries() {
        if !matches!(k.as_str(), "tool" | "version" | "command") {
            meta = meta.with(&format!("fit_{k}"), v);
        }
    }
    let series = parameter_series(&file.unit_ids, &file.draws);
    let header = draws_header(&file.unit_ids);
    let rows: Vec<Vec<String>> = file
        .draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut row = vec![d.iter.to_string()];
            row.extend(series.iter().map(|(_, xs)| fmt_f64(xs[i])));
            row
        })
        .collect();
    write_csv(&a.out.join("trace.csv"), &meta, &header, &rows)?;
    write_chain_reports(&a.out, &meta, &file.unit_ids, &file.draws, a.max_lag)
}
