//! The five analysis commands. Each returns a rendered report string for
//! stdout and optionally writes machine-readable CSV files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use evlm_core::{
    classify, compare, critical_delta, delta_k_hat, design_thresholds, fit, parametric_bootstrap,
    residual_bootstrap, sample_size, sample_size_curve, stratified_bootstrap, summarize,
    BootstrapMethod, BootstrapResult, BootstrapSummary, EffectSpec, EvidenceVerdict, FavoredModel,
    NcfParams, ThresholdSide,
};

use crate::dataset::{load_csv, ModelInputs, TestSpec};
use crate::report::{cell, sig4, write_csv, TextTable};

/// Output rendering choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
}

fn ensure_out_dir(out: &Option<PathBuf>) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    }
    Ok(())
}

fn emit(table: &TextTable, format: OutputFormat, title: &str, out: &mut String) {
    match format {
        OutputFormat::Table => {
            out.push_str(title);
            out.push('\n');
            out.push_str(&table.render());
            out.push('\n');
        }
        OutputFormat::Csv => {
            let (header, rows) = table.to_csv_rows();
            out.push_str(&header);
            out.push('\n');
            for row in rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
    }
}

pub struct AnalyzeArgs {
    pub data: PathBuf,
    pub response: String,
    pub factors: Vec<String>,
    pub covariates: Vec<String>,
    pub test: TestSpec,
    pub deltas: Vec<f64>,
    pub delta_defaulted: bool,
    pub gamma1: f64,
    pub gamma2: f64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// Fits the nested pair and reports the evidence block: f, p, the evidence
/// value, and per-effect-size thresholds, tail probability, and verdict.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String> {
    ensure_out_dir(&args.out)?;
    let ModelInputs { design, response, spec, .. } = load_csv(
        &args.data,
        &args.response,
        &args.factors,
        &args.covariates,
        &args.test,
    )?;
    let res = compare(&design, &response, &spec)?;
    let (n, r, q) = (res.n, res.r, res.q);
    let dsic = res.delta_sic;
    let favored = if dsic <= 0.0 { FavoredModel::Model1 } else { FavoredModel::Model2 };

    let mut out = String::new();
    if args.delta_defaulted {
        out.push_str("note: no --delta given; using delta = 0.5\n\n");
    }
    out.push_str(&format!(
        "n = {n}, r = {r}, q = {q}\nf = {}, p = {}\ndelta_sic = {}, delta_k_hat = {}\n\n",
        sig4(res.f_stat),
        sig4(res.p_value),
        sig4(dsic),
        sig4(delta_k_hat(dsic, n)),
    ));

    let p_label = match favored {
        FavoredModel::Model1 => "P2",
        FavoredModel::Model2 => "P1",
    };
    let mut table = TextTable::new(vec![
        "delta", "lambda", "psi1", "psi2", "k1", "k2", p_label, "verdict",
    ]);
    let mut csv_rows = Vec::new();
    for &delta in &args.deltas {
        let effect = EffectSpec::new(delta, q, r)?;
        let design_row = design_thresholds(n, &effect, args.gamma1, args.gamma2)?;
        let verdict = classify(dsic, &design_row);
        let p_tail = evlm_core::post_data_p(dsic, n, &effect, favored)?;
        table.push(vec![
            sig4(delta),
            sig4(design_row.lambda),
            sig4(design_row.psi1),
            sig4(design_row.psi2),
            sig4(design_row.k1),
            sig4(design_row.k2),
            sig4(p_tail),
            short_verdict(verdict).to_string(),
        ]);
        csv_rows.push(vec![
            cell(delta),
            cell(design_row.lambda),
            cell(design_row.psi1),
            cell(design_row.psi2),
            cell(design_row.k1),
            cell(design_row.k2),
            cell(p_tail),
            short_verdict(verdict).to_string(),
        ]);
    }
    emit(&table, args.format, "evidence thresholds by effect size", &mut out);

    // Smallest effect size with strong post-data support for model 1 (or the
    // boundary the evidence cannot reach, reported as absent).
    let gamma_crit = match favored {
        FavoredModel::Model1 => args.gamma2,
        FavoredModel::Model2 => args.gamma1,
    };
    match critical_delta(dsic, n, q, r, gamma_crit, evlm_core::evidence::DEFAULT_DELTA_MAX) {
        Ok(dstar) => {
            let lam = n as f64 * dstar * dstar;
            out.push_str(&format!(
                "critical delta ({p_label} = {}): delta* = {}, lambda = {}\n",
                sig4(gamma_crit),
                sig4(dstar),
                sig4(lam)
            ));
        }
        Err(evlm_core::Error::NoSolution(msg)) => {
            out.push_str(&format!("critical delta: no solution ({msg})\n"));
        }
        Err(e) => return Err(e.into()),
    }

    if let Some(dir) = &args.out {
        write_csv(
            &dir.join("analysis.csv"),
            "key,value",
            &[
                vec!["n".into(), n.to_string()],
                vec!["r".into(), r.to_string()],
                vec!["q".into(), q.to_string()],
                vec!["f".into(), cell(res.f_stat)],
                vec!["p".into(), cell(res.p_value)],
                vec!["g_squared".into(), cell(res.g_squared)],
                vec!["delta_sic".into(), cell(dsic)],
                vec!["delta_k_hat".into(), cell(delta_k_hat(dsic, n))],
            ],
        )?;
        write_csv(
            &dir.join("thresholds.csv"),
            &format!("delta,lambda,psi1,psi2,k1,k2,{},verdict", p_label.to_lowercase()),
            &csv_rows,
        )?;
    }
    Ok(out)
}

fn short_verdict(v: EvidenceVerdict) -> &'static str {
    match v {
        EvidenceVerdict::StrongModel1 => "strong-model-1",
        EvidenceVerdict::Inconclusive => "inconclusive",
        EvidenceVerdict::StrongModel2 => "strong-model-2",
    }
}

pub struct DesignArgs {
    pub q: usize,
    pub r: usize,
    pub n: Option<usize>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub deltas: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub n_max: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// Pre-data design: thresholds for a planned n, or the smallest n meeting a
/// misleading-evidence budget for a predesignated threshold.
pub fn cmd_design(args: &DesignArgs) -> Result<String> {
    ensure_out_dir(&args.out)?;
    let mut out = String::new();
    match (args.n, args.k1, args.k2) {
        (Some(n), None, None) => {
            let mut table = TextTable::new(vec![
                "delta", "n", "lambda", "psi1", "psi2", "k1", "k2",
            ]);
            let mut rows = Vec::new();
            for &delta in &args.deltas {
                let effect = EffectSpec::new(delta, args.q, args.r)?;
                let d = design_thresholds(n, &effect, args.gamma1, args.gamma2)?;
                table.push(vec![
                    sig4(delta),
                    n.to_string(),
                    sig4(d.lambda),
                    sig4(d.psi1),
                    sig4(d.psi2),
                    sig4(d.k1),
                    sig4(d.k2),
                ]);
                rows.push(vec![
                    cell(delta),
                    n.to_string(),
                    cell(d.lambda),
                    cell(d.psi1),
                    cell(d.psi2),
                    cell(d.k1),
                    cell(d.k2),
                ]);
            }
            emit(&table, args.format, "evidence thresholds", &mut out);
            if let Some(dir) = &args.out {
                write_csv(&dir.join("design.csv"), "delta,n,lambda,psi1,psi2,k1,k2", &rows)?;
            }
        }
        (None, Some(k), None) | (None, None, Some(k)) => {
            let side = if args.k1.is_some() {
                ThresholdSide::Lower
            } else {
                ThresholdSide::Upper
            };
            let gamma = match side {
                ThresholdSide::Lower => args.gamma2,
                ThresholdSide::Upper => args.gamma1,
            };
            if args.deltas.len() != 1 {
                bail!("sample-size mode needs exactly one --delta");
            }
            let effect = EffectSpec::new(args.deltas[0], args.q, args.r)?;
            let n = sample_size(k, side, &effect, gamma, args.n_max)?;
            let tail_at = |m: usize| -> Result<f64> {
                let t = evlm_core::trichotomy_probs(m, args.q, args.r, k, k, effect.lambda(m))?;
                Ok(match side {
                    ThresholdSide::Lower => t.m2,
                    ThresholdSide::Upper => t.m1,
                })
            };
            let (side_name, budget_name) = match side {
                ThresholdSide::Lower => ("k1", "m2"),
                ThresholdSide::Upper => ("k2", "m1"),
            };
            out.push_str(&format!(
                "smallest n with {budget_name} <= {} at {side_name} = {}: n = {n}\n",
                sig4(gamma),
                sig4(k)
            ));
            out.push_str(&format!("  {budget_name}(n = {n}) = {}\n", sig4(tail_at(n)?)));
            if n > args.r + 1 {
                out.push_str(&format!(
                    "  {budget_name}(n = {}) = {} (exceeds budget)\n",
                    n - 1,
                    sig4(tail_at(n - 1)?)
                ));
            } else {
                out.push_str(&format!("  n = {} is the smallest valid design size\n", n));
            }
            if let Some(dir) = &args.out {
                write_csv(
                    &dir.join("sample_size.csv"),
                    "threshold,side,gamma,delta,n,budget_at_n",
                    &[vec![
                        cell(k),
                        side_name.to_string(),
                        cell(gamma),
                        cell(effect.delta),
                        n.to_string(),
                        cell(tail_at(n)?),
                    ]],
                )?;
            }
        }
        _ => bail!("give exactly one of --n (threshold mode) or --k1/--k2 (sample-size mode)"),
    }
    Ok(out)
}

pub struct BootstrapArgs {
    pub data: PathBuf,
    pub response: String,
    pub factors: Vec<String>,
    pub covariates: Vec<String>,
    pub test: TestSpec,
    pub methods: Vec<BootstrapMethod>,
    pub n_boot: usize,
    pub seed: u64,
    pub ci_level: f64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// Bootstraps the evidence distribution with the chosen method(s) and writes
/// replicate and EDF files when an output directory is given.
pub fn cmd_bootstrap(args: &BootstrapArgs) -> Result<String> {
    ensure_out_dir(&args.out)?;
    let ModelInputs { design, response, layout, spec } = load_csv(
        &args.data,
        &args.response,
        &args.factors,
        &args.covariates,
        &args.test,
    )?;
    let fitted = fit(&design, &response)?;

    let mut out = String::new();
    let mut table = TextTable::new(vec![
        "method", "n_boot", "failures", "mean", "median", "q05", "q95", "aR", "dK_lo", "dK_hi",
    ]);
    let mut summary_rows = Vec::new();
    for &method in &args.methods {
        let result: BootstrapResult = match method {
            BootstrapMethod::Parametric => {
                parametric_bootstrap(&fitted, &design, &spec, args.n_boot, args.seed)?
            }
            BootstrapMethod::Residual => {
                residual_bootstrap(&fitted, &design, &spec, args.n_boot, args.seed)?
            }
            BootstrapMethod::Stratified => {
                stratified_bootstrap(&response, &layout, &design, &spec, args.n_boot, args.seed)?
            }
        };
        let s: BootstrapSummary = summarize(&result, args.ci_level)?;
        table.push(vec![
            method.to_string(),
            args.n_boot.to_string(),
            result.failures.to_string(),
            sig4(s.mean),
            sig4(s.median),
            sig4(s.quantile(0.05)),
            sig4(s.quantile(0.95)),
            sig4(s.a_r),
            sig4(s.ci_delta_k.0),
            sig4(s.ci_delta_k.1),
        ]);
        summary_rows.push(vec![
            method.to_string(),
            args.n_boot.to_string(),
            result.failures.to_string(),
            cell(s.mean),
            cell(s.median),
            cell(s.quantile(0.05)),
            cell(s.quantile(0.95)),
            cell(s.a_r),
            cell(s.ci_delta_k.0),
            cell(s.ci_delta_k.1),
        ]);
        if let Some(dir) = &args.out {
            let n = result.n_obs as f64;
            let rep_rows: Vec<Vec<String>> = result
                .replicates
                .iter()
                .enumerate()
                .map(|(i, &d)| vec![i.to_string(), cell(d), cell(d / n)])
                .collect();
            write_csv(
                &dir.join(format!("replicates_{method}.csv")),
                "index,delta_sic,delta_k",
                &rep_rows,
            )?;
            let edf_rows: Vec<Vec<String>> = s
                .edf_points()
                .iter()
                .map(|&(v, p)| vec![cell(v), cell(p)])
                .collect();
            write_csv(
                &dir.join(format!("edf_{method}.csv")),
                "delta_sic,edf",
                &edf_rows,
            )?;
        }
    }
    emit(&table, args.format, "bootstrap summaries (delta_sic scale)", &mut out);
    if let Some(dir) = &args.out {
        write_csv(
            &dir.join("bootstrap_summary.csv"),
            "method,n_boot,failures,mean,median,q05,q95,a_r,dk_lo,dk_hi",
            &summary_rows,
        )?;
    }
    Ok(out)
}

pub struct NcfArgs {
    pub q: usize,
    pub r: usize,
    pub delta2: f64,
    pub n_list: Vec<usize>,
    pub grid_max: f64,
    pub grid_points: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// Noncentral-F tables for a design family: distribution summaries per n and
/// plot-ready density/distribution curves, including the central reference.
pub fn cmd_ncf(args: &NcfArgs) -> Result<String> {
    ensure_out_dir(&args.out)?;
    if args.n_list.is_empty() {
        bail!("give at least one --n");
    }
    let probs = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];
    let mut out = String::new();
    let mut table = TextTable::new(vec![
        "n", "lambda", "mean", "q01", "q05", "q25", "q50", "q75", "q95", "q99",
    ]);
    let mut curve_rows = Vec::new();
    let mut quant_rows = Vec::new();

    // Central reference curve uses the first n's denominator df.
    let mut cases: Vec<(String, usize, f64)> = vec![(
        "central".to_string(),
        args.n_list[0],
        0.0,
    )];
    for &n in &args.n_list {
        cases.push((n.to_string(), n, args.delta2 * n as f64));
    }

    for (label, n, lambda) in &cases {
        if *n <= args.r {
            bail!("n = {n} must exceed r = {}", args.r);
        }
        let params = NcfParams::new(args.q, n - args.r, *lambda)?;
        let mut row = vec![label.clone(), sig4(*lambda), sig4(params.mean()?)];
        let mut qrow = vec![label.clone(), cell(*lambda)];
        for &p in &probs {
            let qv = params.quantile(p)?;
            row.push(sig4(qv));
            qrow.push(cell(qv));
        }
        table.push(row);
        quant_rows.push(qrow);
        if args.out.is_some() {
            for i in 1..=args.grid_points {
                let u = args.grid_max * i as f64 / args.grid_points as f64;
                curve_rows.push(vec![
                    label.clone(),
                    cell(*lambda),
                    cell(u),
                    cell(params.pdf(u)?),
                    cell(params.cdf(u)?),
                ]);
            }
        }
    }
    emit(&table, args.format, "noncentral F summaries", &mut out);
    if let Some(dir) = &args.out {
        write_csv(&dir.join("ncf_curves.csv"), "n,lambda,u,pdf,cdf", &curve_rows)?;
        write_csv(
            &dir.join("ncf_quantiles.csv"),
            "n,lambda,q01,q05,q25,q50,q75,q95,q99",
            &quant_rows,
        )?;
    }
    Ok(out)
}

pub struct SimulateArgs {
    pub data: PathBuf,
    pub response: String,
    pub factors: Vec<String>,
    pub covariates: Vec<String>,
    pub test: TestSpec,
    pub cell_sizes: Vec<usize>,
    pub n_sim: usize,
    pub n_boot: usize,
    pub seed: u64,
    pub max_refits: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// Simulates growing per-cell sample sizes from the fitted full model and
/// reports averaged bootstrap confidence points for the per-observation
/// divergence difference.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    ensure_out_dir(&args.out)?;
    let ModelInputs { design, response, layout, spec } = load_csv(
        &args.data,
        &args.response,
        &args.factors,
        &args.covariates,
        &args.test,
    )?;
    let fitted = fit(&design, &response)?;
    let rows = sample_size_curve(
        &design,
        &spec,
        &fitted,
        &layout,
        &args.cell_sizes,
        args.n_sim,
        args.n_boot,
        args.seed,
        args.max_refits,
    )?;

    let mut out = String::new();
    let mut table = TextTable::new(vec![
        "cell_size", "method", "ci05", "ci50", "ci95", "pseudo_true",
    ]);
    let mut csv_rows = Vec::new();
    for row in &rows {
        table.push(vec![
            row.cell_size.to_string(),
            row.method.to_string(),
            sig4(row.ci05),
            sig4(row.ci50),
            sig4(row.ci95),
            sig4(row.pseudo_true),
        ]);
        csv_rows.push(vec![
            row.cell_size.to_string(),
            row.method.to_string(),
            cell(row.ci05),
            cell(row.ci50),
            cell(row.ci95),
            cell(row.pseudo_true),
        ]);
    }
    emit(
        &table,
        args.format,
        "delta_k confidence points by per-cell sample size",
        &mut out,
    );
    if let Some(dir) = &args.out {
        write_csv(
            &dir.join("simulate.csv"),
            "cell_size,method,ci05,ci50,ci95,pseudo_true",
            &csv_rows,
        )?;
    }
    Ok(out)
}

/// Parses the `--test` argument syntax.
pub fn parse_test_spec(s: &str) -> Result<TestSpec> {
    if s == "interaction" {
        Ok(TestSpec::Interaction)
    } else if let Some(cols) = s.strip_prefix("drop:") {
        let names: Vec<String> = cols.split(',').map(|c| c.trim().to_string()).collect();
        if names.iter().any(|n| n.is_empty()) {
            bail!("empty column name in '{s}'");
        }
        Ok(TestSpec::Drop(names))
    } else if let Some(path) = s.strip_prefix("contrast:") {
        Ok(TestSpec::ContrastFile(Path::new(path).to_path_buf()))
    } else {
        bail!("unknown test spec '{s}'; use interaction, drop:<cols>, or contrast:<file>")
    }
}

/// Parses the `--method` argument list.
pub fn parse_methods(items: &[String]) -> Result<Vec<BootstrapMethod>> {
    let mut methods = Vec::new();
    for item in items {
        for part in item.split(',') {
            match part.trim() {
                "parametric" => methods.push(BootstrapMethod::Parametric),
                "residual" => methods.push(BootstrapMethod::Residual),
                "stratified" => methods.push(BootstrapMethod::Stratified),
                "all" => {
                    methods.extend([
                        BootstrapMethod::Parametric,
                        BootstrapMethod::Residual,
                        BootstrapMethod::Stratified,
                    ]);
                }
                other => bail!("unknown bootstrap method '{other}'"),
            }
        }
    }
    if methods.is_empty() {
        methods.extend([BootstrapMethod::Parametric, BootstrapMethod::Stratified]);
    }
    Ok(methods)
}
