use std::fs;
use std::path::{Path, PathBuf};

use cfproj_core::estimator::{
    self, assumption1_diagnostic, evaluate_control_projection, fit_control_projection,
    fit_treatment_model, full_data_cf_estimate,
};
use cfproj_core::inference::{asymptotic_inference, bootstrap_inference, InferenceReport, QUANTILE_LEVELS};
use cfproj_core::mar::{bootstrap_mar, estimate_alpha_mar};
use cfproj_core::nonparam::linspace;
use cfproj_core::rng::derive_seed;
use cfproj_core::sim::{builtin_catalog, run_monte_carlo, CatalogEntry, Selection, CATALOG_NAMES};
use cfproj_core::{
    validate_two_sample_dataset, BootstrapConfig, DiagnosticsBlock, MarConfig, MonteCarloConfig, Scenario,
    SettingId, TwoSampleDataset,
};
use serde_json::{json, Value};

use crate::config::{FileConfig, Format, InferenceMode, Mode};
use crate::error::{CliError, Result};
use crate::io::{csv_bytes, num, read_auxiliary, read_joint, read_primary};

pub const SCHEMA_VERSION: u32 = 1;

/// Support overlap below which a warning is attached.
pub const OVERLAP_WARNING: f64 = 0.99;
/// Condition numbers above this are flagged as ill-conditioned.
pub const CONDITION_WARNING: f64 = 1e10;

/// Bytes destined for one output, `None` meaning standard output.
pub type Output = (Option<PathBuf>, Vec<u8>);

pub fn execute(cfg: &FileConfig) -> Result<Vec<Output>> {
    match cfg.mode.unwrap_or(Mode::Estimate) {
        Mode::Estimate => estimate(cfg),
        Mode::Simulate => simulate(cfg),
        Mode::Diagnose => diagnose(cfg),
    }
}

fn load_dataset(cfg: &FileConfig) -> Result<TwoSampleDataset> {
    let aux = read_auxiliary(cfg.require_path(&cfg.aux, "aux")?)?;
    let primary = read_primary(cfg.require_path(&cfg.primary, "primary")?)?;
    Ok(TwoSampleDataset::new(aux, primary))
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("report is serializable");
    b.push(b'\n');
    b
}

fn diagnostic_warnings(d: &DiagnosticsBlock) -> Vec<String> {
    let mut w = Vec::new();
    if d.support_overlap_fraction < OVERLAP_WARNING {
        w.push(format!(
            "low support overlap: {:.4} of primary treatments lie inside the auxiliary treatment range",
            d.support_overlap_fraction
        ));
    }
    if d.gram_condition_number == f64::INFINITY {
        w.push("singular second-moment matrix: basis terms and control projection are collinear".into());
    } else if d.gram_condition_number > CONDITION_WARNING {
        w.push(format!("ill-conditioned second-moment matrix (condition number {:e})", d.gram_condition_number));
    }
    w
}

fn inference_json(r: &InferenceReport) -> Value {
    let mut v = serde_json::to_value(r).expect("report is serializable");
    if r.quantiles.is_some() {
        v["quantile_levels"] = json!(QUANTILE_LEVELS);
    }
    v
}

fn estimate(cfg: &FileConfig) -> Result<Vec<Output>> {
    let ds = load_dataset(cfg)?;
    let basis = cfg.basis_spec()?;
    let level = cfg.level.unwrap_or(0.95);
    let mode = cfg.inference.unwrap_or(InferenceMode::Bootstrap);
    let boot_cfg = BootstrapConfig {
        replicates: cfg.bootstrap.unwrap_or(500),
        level,
        seed: cfg.seed.unwrap_or(0),
        ..Default::default()
    };
    if mode.bootstrap() {
        boot_cfg.validate()?;
    }
    let mut echo = cfg.clone();
    let mar = cfg.mar.unwrap_or(false);

    let (report, boot, asym, treatment) = if mar {
        if mode.asymptotic() {
            return Err(CliError::Config(
                "asymptotic inference is not available with mar; use inference = bootstrap or none".into(),
            ));
        }
        let mar_cfg = cfg.mar_config(MarConfig::for_dataset(&ds).z_is_binary)?;
        mar_cfg.validate()?;
        echo.mar_z_is_binary = Some(mar_cfg.z_is_binary);
        let report = estimate_alpha_mar(&ds, &basis, &mar_cfg)?;
        let boot = if mode.bootstrap() { Some(bootstrap_mar(&ds, &basis, &boot_cfg, &mar_cfg)?) } else { None };
        (report, boot, None, None)
    } else {
        let est_cfg = cfg.estimator()?;
        let (report, cp) = estimator::estimate(&ds, &basis, &est_cfg)?;
        let boot =
            if mode.bootstrap() { Some(bootstrap_inference(&ds, &basis, &boot_cfg, &est_cfg)?) } else { None };
        let asym = if mode.asymptotic() {
            Some(asymptotic_inference(&ds.primary, &cp, &basis, &report.alpha_hat, level)?)
        } else {
            None
        };
        (report, boot, asym, Some(cp.treatment_model))
    };

    let baseline = match &cfg.joint {
        Some(p) => Some(full_data_cf_estimate(&read_joint(p)?, &basis)?),
        None => None,
    };
    let headline = boot.as_ref().or(asym.as_ref());
    let warnings = diagnostic_warnings(&report.diagnostics);
    let terms: Vec<String> = basis.terms().iter().map(|t| t.to_string()).collect();

    let bytes = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut inference = serde_json::Map::new();
            if let Some(b) = &boot {
                inference.insert("bootstrap".into(), inference_json(b));
            }
            if let Some(a) = &asym {
                inference.insert("asymptotic".into(), inference_json(a));
            }
            let mut doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "estimate",
                "config": echo.echo(),
                "estimator": if mar { "mar" } else { "two_sample" },
                "estimates": {
                    "basis": terms,
                    "alpha_hat": report.alpha_hat,
                    "xi_hat": report.xi_hat,
                    "intercept": report.intercept,
                    "se": headline.map(|r| r.se.clone()),
                    "ci_lower": headline.map(|r| r.ci_lower.clone()),
                    "ci_upper": headline.map(|r| r.ci_upper.clone()),
                    "level": headline.map(|r| r.level),
                },
                "inference": inference,
                "diagnostics": report.diagnostics,
                "warnings": warnings,
            });
            if let Some(t) = treatment {
                doc["treatment_model"] = json!(t);
            }
            if let Some(b) = &baseline {
                doc["full_data_baseline"] = json!(b);
            }
            json_bytes(&doc)
        }
        Format::Csv => {
            let mut rows = Vec::new();
            let mut push = |param: String, est: f64, method: &str, inf: Option<(&InferenceReport, usize)>| {
                let pick = |f: fn(&InferenceReport) -> &Vec<f64>| inf.map(|(r, k)| f(r)[k]);
                rows.push(vec![
                    param,
                    num(Some(est)),
                    method.to_string(),
                    num(pick(|r| &r.se)),
                    num(pick(|r| &r.ci_lower)),
                    num(pick(|r| &r.ci_upper)),
                ]);
            };
            for (k, a) in report.alpha_hat.iter().enumerate() {
                let name = format!("alpha[{}]", terms[k]);
                let mut any = false;
                for r in boot.iter().chain(asym.iter()) {
                    let method = serde_json::to_value(r.method).expect("serializable");
                    push(name.clone(), *a, method.as_str().unwrap_or(""), Some((r, k)));
                    any = true;
                }
                if !any {
                    push(name, *a, "none", None);
                }
            }
            push("xi".into(), report.xi_hat, "none", None);
            push("intercept".into(), report.intercept, "none", None);
            if let Some(b) = &baseline {
                for (k, a) in b.alpha.iter().enumerate() {
                    push(format!("full_data_alpha[{}]", terms[k]), *a, "none", None);
                }
                push("full_data_rho".into(), b.rho, "none", None);
            }
            csv_bytes(&["parameter", "estimate", "method", "se", "ci_lower", "ci_upper"], &rows)
        }
    };
    Ok(vec![(cfg.out.clone(), bytes)])
}

fn catalog_entries(cfg: &FileConfig) -> Result<Vec<CatalogEntry>> {
    if let Some(name) = &cfg.catalog {
        if cfg.setting.is_some() || cfg.scenario.is_some() || cfg.n1.is_some() || cfg.n2.is_some() {
            return Err(CliError::Config("catalog cannot be combined with setting, scenario, n1 or n2".into()));
        }
        if CATALOG_NAMES.contains(&name.as_str()) {
            return Ok(builtin_catalog(name)?);
        }
        let path = Path::new(name);
        if !path.exists() {
            return Err(CliError::Config(format!(
                "catalog '{name}' is neither a built-in catalog ({}) nor a file",
                CATALOG_NAMES.join(", ")
            )));
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        let entries: Vec<CatalogEntry> =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        if entries.is_empty() {
            return Err(CliError::Config(format!("{name}: catalog has no entries")));
        }
        return Ok(entries);
    }
    let setting: SettingId = cfg.setting.as_deref().unwrap_or("1").parse()?;
    Ok(vec![CatalogEntry {
        scenario: Scenario::try_from(cfg.scenario.unwrap_or(1))?,
        setting,
        n1: cfg.n1.unwrap_or(5000),
        n2: cfg.n2.unwrap_or(5000),
    }])
}

fn simulate(cfg: &FileConfig) -> Result<Vec<Output>> {
    if cfg.mar == Some(true) {
        return Err(CliError::Config("mar is only supported by the estimate command".into()));
    }
    let entries = catalog_entries(cfg)?;
    let reps = cfg.reps.unwrap_or(500);
    let replicates = cfg.bootstrap.unwrap_or(500);
    let level = cfg.level.unwrap_or(0.95);
    let master = cfg.seed.unwrap_or(0);
    let timing = cfg.timing.unwrap_or(false);
    let estimator = cfg.estimator()?;

    let mut header = vec![
        "scenario", "setting", "n1", "n2", "reps", "n_failed", "bias_x100", "mse_x100", "cp_pct", "mean_se",
        "sd_alpha",
    ];
    if timing {
        header.push("wall_time_s");
    }
    let mut rows = Vec::with_capacity(entries.len());
    let mut records = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let mut spec = entry.spec();
        spec.alpha = cfg.alpha.unwrap_or(spec.alpha);
        spec.gamma = cfg.gamma.unwrap_or(spec.gamma);
        spec.beta = cfg.beta.unwrap_or(spec.beta);
        spec.eta_sd = cfg.eta_sd.unwrap_or(spec.eta_sd);
        if let Some(coef) = cfg.selection_coef {
            spec.selection = Selection::Logistic { coef, intercept: cfg.selection_intercept.unwrap_or(0.0) };
        }
        let seed = derive_seed(master, i as u64);
        let mc = MonteCarloConfig {
            reps,
            bootstrap: (replicates > 0).then(|| BootstrapConfig { replicates, level, seed, ..Default::default() }),
            master_seed: seed,
            estimator: estimator.clone(),
        };
        let r = run_monte_carlo(&spec, &mc)?;
        let mut row = vec![
            entry.scenario.number().to_string(),
            entry.setting.to_string(),
            entry.n1.to_string(),
            entry.n2.to_string(),
            r.n_reps.to_string(),
            r.n_failed_reps.to_string(),
            num(Some(r.mean_bias_x100)),
            num(Some(r.mse_x100)),
            num(r.coverage_pct),
            num(r.mean_se),
            num(Some(r.sd_alpha)),
        ];
        let mut rec = json!({
            "scenario": entry.scenario.number(),
            "setting": entry.setting.to_string(),
            "n1": entry.n1,
            "n2": entry.n2,
            "seed": seed,
            "reps": r.n_reps,
            "n_failed": r.n_failed_reps,
            "bias_x100": r.mean_bias_x100,
            "mse_x100": r.mse_x100,
            "cp_pct": r.coverage_pct,
            "mean_se": r.mean_se,
            "sd_alpha": r.sd_alpha,
        });
        if timing {
            row.push(num(Some(r.wall_time_s)));
            rec["wall_time_s"] = json!(r.wall_time_s);
        }
        rows.push(row);
        records.push(rec);
    }

    let bytes = match cfg.format.unwrap_or(Format::Json) {
        Format::Csv => csv_bytes(&header, &rows),
        Format::Json => json_bytes(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "config": cfg.echo(),
            "results": records,
        })),
    };
    Ok(vec![(cfg.out.clone(), bytes)])
}

/// Points of the projection grid over the primary treatment range.
pub const GRID_POINTS: usize = 101;

fn diagnose(cfg: &FileConfig) -> Result<Vec<Output>> {
    let ds = load_dataset(cfg)?;
    let basis = cfg.basis_spec()?;
    validate_two_sample_dataset(&ds, &basis).into_result()?;
    let tm = fit_treatment_model(&ds.auxiliary)?;
    let cp = fit_control_projection(&ds.auxiliary, tm, &cfg.estimator()?)?;
    let prim_a: Vec<f64> = ds.primary.iter().map(|r| r.a).collect();
    let diagnostics = DiagnosticsBlock {
        gram_condition_number: assumption1_diagnostic(&ds.primary, &cp, &basis),
        support_overlap_fraction: cp.overlap_fraction(&prim_a),
        n1: ds.n1(),
        n2: ds.n2(),
        bandwidth_used: cp.bandwidth(),
    };
    let lo = prim_a.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = prim_a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = linspace(lo, hi, GRID_POINTS);
    let c = evaluate_control_projection(&cp, &grid);
    let grid_rows: Vec<Vec<String>> = grid.iter().zip(&c).map(|(a, c)| vec![num(Some(*a)), num(Some(*c))]).collect();
    let grid_csv = csv_bytes(&["a", "c_hat"], &grid_rows);

    let mut outputs = Vec::new();
    let main = match cfg.format.unwrap_or(Format::Json) {
        Format::Csv => grid_csv.clone(),
        Format::Json => json_bytes(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "diagnose",
            "config": cfg.echo(),
            "treatment_model": cp.treatment_model,
            "support": { "aux_a_min": cp.support_lo, "aux_a_max": cp.support_hi,
                         "primary_a_min": lo, "primary_a_max": hi },
            "diagnostics": diagnostics,
            "grid": grid.iter().zip(&c).map(|(a, c)| json!({"a": a, "c_hat": c})).collect::<Vec<_>>(),
            "warnings": diagnostic_warnings(&diagnostics),
        })),
    };
    outputs.push((cfg.out.clone(), main));
    if let Some(p) = &cfg.grid_out {
        outputs.push((Some(p.clone()), grid_csv));
    }
    Ok(outputs)
}
