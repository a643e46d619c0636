//! Command-line front end: configuration, CSV ingestion, command dispatch
//! and report emission.

mod config;
mod input;
mod report;

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{unify_map, AnalysisConfig, Command, Declaration, OutputFormat, Overrides};
pub use input::{is_missing, load_csv};
pub use report::{delimited, fixed, text_table};

use crate::compare::{
    mediation_paths, percent_difference_report, pool_datasets, relative_importance,
    relative_impact, ComparisonEntry, ComparisonReport, MediationDecomposition,
};
use crate::error::{Error, Result};
use crate::percentize::{format_percent, Coding, percentize_dataset, ColumnData, Dataset, PercentizedDataset};
use crate::regress::{
    fit_ols, percent_difference_percentized, pomp_coefficients, split_by_group,
    standardized_coefficients, BpRegressionResult, DesignMatrix, TermKind, Z_95,
};
use crate::scale_model::{suggest_anchors, validate_anchor, Role, VariableKind};
use report::Report;

/// Percentage-scale analyses from a declarative configuration.
#[derive(Debug, Parser)]
#[command(name = "pscale", version, about)]
pub struct Args {
    /// Analysis configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Input data file; repeat for pooling. Overrides `input` in the config.
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Field delimiter of input and table output.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Decimals for coefficients.
    #[arg(long)]
    pub precision: Option<usize>,
}

impl Args {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            inputs: self.inputs.clone(),
            out: self.out.clone(),
            format: self.format,
            delimiter: self.delimiter,
            precision: self.precision,
        }
    }
}

/// Both renderings of a finished analysis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub report: String,
    pub table: String,
}

impl Output {
    pub fn rendered(&self, format: OutputFormat) -> &str {
        match format {
            OutputFormat::Text => &self.report,
            OutputFormat::Table => &self.table,
        }
    }
}

/// Loads the config named by `args`, runs it and writes the result.
pub fn run_args(args: &Args) -> Result<()> {
    let config = AnalysisConfig::from_file(&args.config, &args.overrides())?;
    run(&config)
}

/// Runs the analysis and writes the selected rendering to `config.out`
/// (atomically, via a temporary file in the same directory) or stdout.
/// Nothing is written when any step fails.
pub fn run(config: &AnalysisConfig) -> Result<()> {
    let output = execute(config)?;
    let body = output.rendered(config.format);
    match &config.out {
        Some(path) => write_atomic(path, body.as_bytes()),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Runs the configured command in memory.
pub fn execute(config: &AnalysisConfig) -> Result<Output> {
    let categorical: HashSet<String> = config
        .variables
        .iter()
        .filter(|d| {
            d.spec.kind == VariableKind::Nominal
                || (d.spec.kind == VariableKind::Binary && !d.spec.categories.is_empty())
        })
        .map(|d| d.spec.name.clone())
        .collect();
    let datasets = config
        .inputs
        .iter()
        .map(|p| load_csv(p, config.delimiter, &categorical))
        .collect::<Result<Vec<_>>>()?;

    let ctx = Context::new(config, &datasets);
    match config.command {
        Command::Percentize => ctx.percentize(),
        Command::Regress => ctx.regress(),
        Command::CompareImportance => ctx.compare_importance(),
        Command::CompareImpact => ctx.compare_impact(),
        Command::PercentDiff => ctx.percent_diff(),
        Command::Pool => ctx.pool(),
        Command::Mediate => ctx.mediate(),
        Command::AnchorsSuggest => ctx.anchors_suggest(),
    }
}

const COEF_HEADERS: [&str; 6] = ["variable", "b_p", "se", "ci_low", "ci_high", "rank"];

struct Context<'a> {
    config: &'a AnalysisConfig,
    datasets: &'a [Dataset],
    report: Report,
}

impl<'a> Context<'a> {
    fn new(config: &'a AnalysisConfig, datasets: &'a [Dataset]) -> Self {
        let mut report = Report::new(&format!("pscale {} report", config.command));
        report.line(format!(
            "coefficients: {} decimals; percent display: {} decimal(s); intervals: 95% normal-theory (estimate +/- {:.2} se)",
            config.precision, config.percent_precision, Z_95
        ));
        for d in datasets {
            report.line(format!("input: {} ({} rows)", display_name(d.source_id()), d.n_rows()));
        }
        Context {
            config,
            datasets,
            report,
        }
    }

    fn num(&self, v: f64) -> String {
        fixed(v, self.config.precision)
    }

    fn pct(&self, v: f64) -> String {
        format_percent(v, self.config.percent_precision)
    }

    fn data(&self) -> &'a Dataset {
        &self.datasets[0]
    }

    fn percentized(&mut self) -> Result<PercentizedDataset> {
        let specs = self.config.specs();
        let p = percentize_dataset(self.data(), &specs)?;
        self.echo_transforms(&p);
        self.anchor_warnings(self.data());
        Ok(p)
    }

    fn echo_transforms(&mut self, p: &PercentizedDataset) {
        self.report.section("Transforms");
        for t in &p.transform_log {
            self.report.line(format!("  {t}"));
        }
    }

    fn anchor_warnings(&mut self, data: &Dataset) {
        let mut lines = Vec::new();
        for d in &self.config.variables {
            let (Some(anchor), Some(col)) = (d.spec.anchor, data.column(&d.spec.name)) else {
                continue;
            };
            let ColumnData::Numeric(values) = &col.data else { continue };
            if let Ok(verdict) = validate_anchor(&anchor, values) {
                let w = verdict.warnings();
                if !w.is_empty() {
                    let rows: Vec<String> = w.iter().map(|w| (w.row + 1).to_string()).collect();
                    lines.push(format!(
                        "  {} [{}]: {} value(s) outside [{}, {}] at data row(s) {}",
                        d.spec.name,
                        display_name(data.source_id()),
                        w.len(),
                        anchor.c_n(),
                        anchor.c_x(),
                        rows.join(", ")
                    ));
                }
            }
        }
        if !lines.is_empty() {
            self.report.section("Anchor warnings (values kept, outside target range)");
            for l in lines {
                self.report.line(l);
            }
        }
    }

    fn dependent(&self) -> Result<&'a str> {
        self.config
            .with_role(Role::Dependent)
            .first()
            .map(|s| s.name.as_str())
            .ok_or_else(|| Error::Config("no dependent variable".to_string()))
    }

    fn fit(&mut self, p: &PercentizedDataset, dv: &str, predictors: &[&str]) -> Result<(DesignMatrix, BpRegressionResult)> {
        let design = DesignMatrix::from_dataset(p, dv, predictors)?;
        let fit = fit_ols(&design)?;
        Ok((design, fit))
    }

    fn regression_section(&mut self, design: &DesignMatrix, fit: &BpRegressionResult) {
        self.report.section(&format!(
            "Regression of {} (n used = {}, rows dropped = {})",
            fit.dv_name, fit.n_used, fit.rows_dropped
        ));
        let pomp = pomp_coefficients(fit);
        let beta = standardized_coefficients(design);
        let ranks = slope_ranks(fit);
        let rows: Vec<Vec<String>> = fit
            .coefficients
            .iter()
            .zip(&pomp)
            .map(|(c, (_, pomp))| {
                let (lo, hi) = c.confidence_interval();
                let beta = match (&beta, c.kind) {
                    (Ok(b), TermKind::Numerical | TermKind::Dummy) => b
                        .iter()
                        .find(|(n, _)| *n == c.name)
                        .map_or(String::new(), |(_, v)| self.num(*v)),
                    _ => String::new(),
                };
                vec![
                    c.name.clone(),
                    self.num(c.estimate),
                    self.pct(c.estimate),
                    self.num(c.std_error),
                    self.num(lo),
                    self.num(hi),
                    self.num(*pomp),
                    beta,
                    ranks.get(&c.name).map_or(String::new(), |r| r.to_string()),
                ]
            })
            .collect();
        self.report.table(
            &["term", "b_p", "percent", "se", "ci_low", "ci_high", "pomp", "beta", "rank"],
            &rows,
        );
        self.report.line(format!(
            "R-squared {} ({}); residual variance {}; df {}",
            self.num(fit.r_squared),
            self.pct(fit.r_squared),
            self.num(fit.residual_variance),
            fit.df_residual()
        ));
        if let Err(e) = beta {
            self.report.line(format!("beta unavailable: {e}"));
        }
    }

    fn coefficient_rows(&self, fit: &BpRegressionResult) -> Vec<Vec<String>> {
        let ranks = slope_ranks(fit);
        fit.coefficients
            .iter()
            .map(|c| {
                let (lo, hi) = c.confidence_interval();
                vec![
                    c.name.clone(),
                    self.num(c.estimate),
                    self.num(c.std_error),
                    self.num(lo),
                    self.num(hi),
                    ranks.get(&c.name).map_or(String::new(), |r| r.to_string()),
                ]
            })
            .collect()
    }

    fn entry_rows(&self, entries: &[ComparisonEntry]) -> Vec<Vec<String>> {
        entries
            .iter()
            .map(|e| {
                let (se, lo, hi) = match e.std_error {
                    Some(se) => (
                        self.num(se),
                        self.num(e.b_p - Z_95 * se),
                        self.num(e.b_p + Z_95 * se),
                    ),
                    None => (String::new(), String::new(), String::new()),
                };
                vec![e.label.clone(), self.num(e.b_p), se, lo, hi, e.rank.to_string()]
            })
            .collect()
    }

    fn comparison_section(&mut self, report: &ComparisonReport) {
        self.report.section(&format!("{} ranking (by |b_p|)", capitalize(&report.kind.to_string())));
        let rows: Vec<Vec<String>> = report
            .entries
            .iter()
            .map(|e| {
                vec![
                    format!("{}{}", e.rank, if e.tied { "=" } else { "" }),
                    e.label.clone(),
                    self.num(e.b_p),
                    self.pct(e.b_p),
                    e.std_error.map_or(String::new(), |s| self.num(s)),
                ]
            })
            .collect();
        self.report.table(&["rank", "label", "b_p", "percent", "se"], &rows);
    }

    fn notes(&mut self, report: &ComparisonReport) {
        for n in &report.notes {
            self.report.line(format!("  note: {n}"));
        }
    }

    fn finish(self, table: String) -> Result<Output> {
        Ok(Output {
            report: self.report.finish(),
            table,
        })
    }

    fn percentize(mut self) -> Result<Output> {
        let p = self.percentized()?;
        self.summary_section(&p);
        let table = dataset_table(&p, self.config.delimiter);
        self.finish(table)
    }

    fn summary_section(&mut self, p: &PercentizedDataset) {
        self.report.section(&format!("Percentized columns ({} rows)", p.n_rows));
        let rows: Vec<Vec<String>> = p
            .columns
            .iter()
            .map(|c| {
                let v: Vec<f64> = c.values.iter().flatten().copied().collect();
                let (min, max, mean) = if v.is_empty() {
                    (f64::NAN, f64::NAN, f64::NAN)
                } else {
                    (
                        v.iter().copied().fold(f64::INFINITY, f64::min),
                        v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        v.iter().sum::<f64>() / v.len() as f64,
                    )
                };
                vec![
                    c.name.clone(),
                    v.len().to_string(),
                    (c.values.len() - v.len()).to_string(),
                    self.num(min),
                    self.num(max),
                    self.num(mean),
                    self.pct(target_fraction(c, mean)),
                ]
            })
            .collect();
        self.report.table(&["column", "n", "missing", "min", "max", "mean", "mean %"], &rows);
    }

    fn regress(mut self) -> Result<Output> {
        let p = self.percentized()?;
        let dv = self.dependent()?;
        let (design, fit) = self.fit(&p, dv, &self.config.predictors())?;
        self.regression_section(&design, &fit);
        let table = delimited(&COEF_HEADERS, &self.coefficient_rows(&fit), self.config.delimiter);
        self.finish(table)
    }

    fn compare_importance(mut self) -> Result<Output> {
        let p = self.percentized()?;
        let dv = self.dependent()?;
        let (design, fit) = self.fit(&p, dv, &self.config.predictors())?;
        let report = relative_importance(&fit)?;
        self.regression_section(&design, &fit);
        self.comparison_section(&report);
        self.notes(&report);
        let table = delimited(&COEF_HEADERS, &self.entry_rows(&report.entries), self.config.delimiter);
        self.finish(table)
    }

    fn compare_impact(mut self) -> Result<Output> {
        let p = self.percentized()?;
        let focus = self.config.focus_variable()?;
        let predictors = self.config.predictors();
        let dvs: Vec<&str> = self
            .config
            .with_role(Role::Dependent)
            .iter()
            .map(|s| s.name.as_str())
            .collect();
        let mut fits = Vec::with_capacity(dvs.len());
        for dv in dvs {
            let (design, fit) = self.fit(&p, dv, &predictors)?;
            self.regression_section(&design, &fit);
            fits.push(fit);
        }
        let report = relative_impact(&fits, focus)?;
        self.comparison_section(&report);
        self.notes(&report);
        let table = delimited(&COEF_HEADERS, &self.entry_rows(&report.entries), self.config.delimiter);
        self.finish(table)
    }

    fn percent_diff(mut self) -> Result<Output> {
        let p = self.percentized()?;
        let dv = self.dependent()?;
        let group = self.config.group_variable()?.name.clone();
        let (treatment, control) = split_by_group(&p, dv, &group)?;
        let diff = percent_difference_percentized(&treatment, &control)?;
        let report = percent_difference_report(&group, &diff);
        self.report.section(&format!("Percent difference in {dv} by {group} (1 minus 0)"));
        let (lo, hi) = diff.confidence_interval();
        self.report.line(format!(
            "  difference {} = {} percentage points",
            self.num(diff.estimate),
            fixed(diff.estimate * 100.0, self.config.percent_precision)
        ));
        self.report.line(format!(
            "  pooled-variance se {}; 95% interval [{}, {}]",
            self.num(diff.std_error),
            self.num(lo),
            self.num(hi)
        ));
        self.report.line(format!(
            "  n treatment = {}, n control = {}",
            diff.n_treatment, diff.n_control
        ));
        let table = delimited(&COEF_HEADERS, &self.entry_rows(&report.entries), self.config.delimiter);
        self.finish(table)
    }

    fn pool(mut self) -> Result<Output> {
        let specs = self.config.specs();
        let parts: Vec<(Dataset, Vec<_>)> = self
            .datasets
            .iter()
            .map(|d| (d.clone(), specs.clone()))
            .collect();
        let unify = unify_map(self.config);
        let pooled = pool_datasets(&parts, &unify)?;
        self.report.section("Parts");
        for (k, d) in self.datasets.iter().enumerate() {
            let anchors: Vec<String> = unify
                .iter()
                .map(|(v, a)| format!("{v} ({}, {})", a[k].c_n(), a[k].c_x()))
                .collect();
            self.report.line(format!(
                "  part {}: {} ({} rows){}",
                k + 1,
                display_name(d.source_id()),
                d.n_rows(),
                if anchors.is_empty() {
                    String::new()
                } else {
                    format!("; anchors {}", anchors.join(", "))
                }
            ));
        }
        self.echo_transforms(&pooled);
        for d in self.datasets {
            self.anchor_warnings(d);
        }
        self.summary_section(&pooled);

        let dependents = self.config.with_role(Role::Dependent);
        let mut predictors = self.config.predictors();
        if let ([dv], false) = (dependents.as_slice(), predictors.is_empty()) {
            if self.config.fixed_effects && self.datasets.len() > 1 {
                predictors.push(crate::compare::PART_VARIABLE);
            }
            let (design, fit) = self.fit(&pooled, &dv.name, &predictors)?;
            self.regression_section(&design, &fit);
        }
        let table = dataset_table(&pooled, self.config.delimiter);
        self.finish(table)
    }

    fn mediate(mut self) -> Result<Output> {
        let p = self.percentized()?;
        let dv = self.dependent()?;
        let iv = self.config.with_role(Role::Independent)[0].name.as_str();
        let mediators: Vec<&str> = self
            .config
            .with_role(Role::Mediator)
            .iter()
            .map(|s| s.name.as_str())
            .collect();
        let controls: Vec<&str> = self
            .config
            .with_role(Role::Control)
            .iter()
            .map(|s| s.name.as_str())
            .collect();
        let m = mediation_paths(&p, dv, iv, &mediators, &controls)?;
        self.mediation_section(&m);
        let table = delimited(&COEF_HEADERS, &self.mediation_rows(&m), self.config.delimiter);
        self.finish(table)
    }

    fn mediation_section(&mut self, m: &MediationDecomposition) {
        self.report.section(&format!(
            "Serial mediation paths (common sample n = {}, rows dropped = {})",
            m.n_used, m.rows_dropped
        ));
        let rows: Vec<Vec<String>> = m
            .paths
            .iter()
            .map(|p| {
                vec![
                    p.label.clone(),
                    format!("{} -> {}", p.from, p.to),
                    self.num(p.b_p),
                    self.pct(p.b_p),
                    self.num(p.std_error),
                ]
            })
            .collect();
        self.report.table(&["path", "route", "b_p", "percent", "se"], &rows);
        let report = m.report();
        self.comparison_section(&report);
        self.report.line(format!(
            "  direct {} + indirect {} = {}; total (DV on IV) {}",
            self.num(m.direct_effect),
            self.num(m.total_indirect()),
            self.num(m.direct_effect + m.total_indirect()),
            self.num(m.total_effect)
        ));
        self.report.line("  indirect effects are products of path b_p; no interval is computed for them");
    }

    fn mediation_rows(&self, m: &MediationDecomposition) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = m
            .paths
            .iter()
            .map(|p| {
                vec![
                    format!("{}: {} -> {}", p.label, p.from, p.to),
                    self.num(p.b_p),
                    self.num(p.std_error),
                    self.num(p.b_p - Z_95 * p.std_error),
                    self.num(p.b_p + Z_95 * p.std_error),
                    String::new(),
                ]
            })
            .collect();
        let mut indirect = self.entry_rows(&m.report().entries);
        for row in &mut indirect {
            row[0] = format!("indirect: {}", row[0]);
        }
        rows.extend(indirect);
        rows.push(vec![
            "total indirect".to_string(),
            self.num(m.total_indirect()),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
        rows
    }

    fn anchors_suggest(mut self) -> Result<Output> {
        let data = self.data().clone();
        let targets: Vec<(String, Option<(f64, f64)>)> = if self.config.variables.is_empty() {
            data.columns()
                .iter()
                .filter(|c| matches!(c.data, ColumnData::Numeric(_)))
                .map(|c| (c.name.clone(), None))
                .collect()
        } else {
            self.config
                .variables
                .iter()
                .filter(|d| d.spec.kind == VariableKind::Numerical)
                .map(|d| (d.spec.name.clone(), d.bounds))
                .collect()
        };
        let mut table_rows = Vec::new();
        self.report.section("Anchor suggestions (confirm before use)");
        for (name, bounds) in targets {
            let col = data.column(&name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
            let ColumnData::Numeric(values) = &col.data else {
                return Err(Error::Parse {
                    row: 1,
                    column: name,
                    message: "anchor suggestion needs a numeric column".to_string(),
                });
            };
            let observed: Vec<f64> = values.iter().flatten().copied().collect();
            if observed.is_empty() {
                self.report.line(format!("  {name}: no observed values"));
                continue;
            }
            let min = observed.iter().copied().fold(f64::INFINITY, f64::min);
            let max = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            self.report.line(format!("  {name}: observed range [{min}, {max}]"));
            let candidates = match suggest_anchors(min, max, bounds) {
                Ok(c) => c,
                Err(e) => {
                    self.report.line(format!("    no candidates: {e}"));
                    continue;
                }
            };
            let rows: Vec<Vec<String>> = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    vec![
                        (i + 1).to_string(),
                        format!("({}, {})", c.pair.0, c.pair.1),
                        self.num(c.score),
                        c.rationale.clone(),
                    ]
                })
                .collect();
            self.report.table(&["rank", "anchor", "score", "rationale"], &rows);
            if let Some(anchor) = self.config.declared(&name).and_then(|d| d.spec.anchor) {
                let verdict = validate_anchor(&anchor, values)?;
                self.report.line(format!(
                    "    declared ({}, {}): {} value(s) outside",
                    anchor.c_n(),
                    anchor.c_x(),
                    verdict.warnings().len()
                ));
            }
            for (i, c) in candidates.iter().enumerate() {
                table_rows.push(vec![
                    name.clone(),
                    c.pair.0.to_string(),
                    c.pair.1.to_string(),
                    self.num(c.score),
                    (i + 1).to_string(),
                ]);
            }
        }
        let table = delimited(
            &["variable", "c_n", "c_x", "score", "rank"],
            &table_rows,
            self.config.delimiter,
        );
        self.finish(table)
    }
}

/// Position of `v` within the column's target range, as a fraction.
fn target_fraction(c: &crate::percentize::PercentizedColumn, v: f64) -> f64 {
    let anchor = match &c.coding {
        Coding::Anchored(a) => Some(a),
        Coding::Pooled { segments } => segments.first().map(|(_, a)| a),
        Coding::Dummy { .. } => None,
    };
    match anchor.map(|a| a.target().bounds()) {
        Some((lo, hi)) => (v - lo) / (hi - lo),
        None => v,
    }
}

/// Competition ranks of slopes by |b_p|.
fn slope_ranks(fit: &BpRegressionResult) -> std::collections::HashMap<String, usize> {
    let slopes = fit.slopes();
    slopes
        .iter()
        .map(|c| {
            let above = slopes
                .iter()
                .filter(|o| o.estimate.abs() > c.estimate.abs())
                .count();
            (c.name.clone(), above + 1)
        })
        .collect()
}

fn dataset_table(p: &PercentizedDataset, delimiter: u8) -> String {
    let headers: Vec<&str> = p.columns.iter().map(|c| c.name.as_str()).collect();
    let rows: Vec<Vec<String>> = (0..p.n_rows)
        .map(|i| {
            p.columns
                .iter()
                .map(|c| c.values[i].map_or_else(|| "NA".to_string(), |v| v.to_string()))
                .collect()
        })
        .collect();
    delimited(&headers, &rows, delimiter)
}

fn display_name(source: &str) -> String {
    Path::new(source)
        .file_name()
        .map_or_else(|| source.to_string(), |f| f.to_string_lossy().into_owned())
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
