//! Comparisons that equitable b_p units make possible: ranking predictors
//! of one DV, ranking one IV's effects across DVs, pooling data measured
//! on different instruments, and decomposing serial mediation paths.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::percentize::{
    percentize_dataset, Coding, Dataset, PercentizedColumn, PercentizedDataset, TransformRecord,
};
use crate::regress::{fit_ols, BpRegressionResult, DesignMatrix, PercentDifference};
use crate::scale_model::{ScaleAnchor, VariableKind, VariableSpec};

/// Column-name prefix of the part indicators added by [`pool_datasets`].
pub const PART_VARIABLE: &str = "part";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComparisonKind {
    RelativeImportance,
    RelativeImpact,
    PercentDifference,
    Pooled,
    Mediation,
}

impl fmt::Display for ComparisonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonKind::RelativeImportance => "relative importance",
            ComparisonKind::RelativeImpact => "relative impact",
            ComparisonKind::PercentDifference => "percent difference",
            ComparisonKind::Pooled => "pooled",
            ComparisonKind::Mediation => "mediation",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonEntry {
    pub label: String,
    pub b_p: f64,
    /// `None` where no standard error is defined (indirect effects).
    pub std_error: Option<f64>,
    /// 1-based; tied entries share the rank.
    pub rank: usize,
    pub tied: bool,
}

/// Entries ranked by descending |b_p|. Values are copied from the
/// underlying results, never recomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub kind: ComparisonKind,
    pub entries: Vec<ComparisonEntry>,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn entry(&self, label: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.label == label)
    }
}

/// Stable sort on |b_p| (ties keep input order) with competition ranking.
fn rank(items: Vec<(String, f64, Option<f64>)>) -> Vec<ComparisonEntry> {
    let mut items = items;
    items.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    let mut entries: Vec<ComparisonEntry> = Vec::with_capacity(items.len());
    for (i, (label, b_p, std_error)) in items.iter().cloned().enumerate() {
        let rank = match entries.last() {
            Some(prev) if prev.b_p.abs() == b_p.abs() => prev.rank,
            _ => i + 1,
        };
        let tied = items
            .iter()
            .enumerate()
            .any(|(j, other)| j != i && other.1.abs() == b_p.abs());
        entries.push(ComparisonEntry {
            label,
            b_p,
            std_error,
            rank,
            tied,
        });
    }
    entries
}

fn anchor_note(name: &str, anchor: Option<&ScaleAnchor>) -> String {
    match anchor {
        Some(a) => format!("{name}: anchor {a}"),
        None => format!("{name}: 0/1 dummy or pooled anchors"),
    }
}

/// Ranks the predictors of one fit by |b_p|. Numerical, binary and
/// nominal-dummy terms are ranked together; a nominal variable contributes
/// one entry per dummy.
pub fn relative_importance(result: &BpRegressionResult) -> Result<ComparisonReport> {
    let slopes = result.slopes();
    if slopes.len() < 2 {
        return Err(Error::TooFewPredictors(slopes.len()));
    }
    let entries = rank(
        slopes
            .iter()
            .map(|c| (c.name.clone(), c.estimate, Some(c.std_error)))
            .collect(),
    );
    let mut notes = vec![anchor_note(&result.dv_name, result.dv_anchor.as_ref())];
    notes.extend(slopes.iter().map(|c| anchor_note(&c.name, c.anchor.as_ref())));
    Ok(ComparisonReport {
        kind: ComparisonKind::RelativeImportance,
        entries,
        notes,
    })
}

/// Ranks the b_p of one IV across fits of different DVs.
pub fn relative_impact(results: &[BpRegressionResult], iv_name: &str) -> Result<ComparisonReport> {
    let mut items = Vec::with_capacity(results.len());
    let mut notes = Vec::new();
    for r in results {
        let c = r.coefficient(iv_name).ok_or_else(|| Error::MissingIv {
            result: r.dv_name.clone(),
            iv: iv_name.to_string(),
        })?;
        items.push((r.dv_name.clone(), c.estimate, Some(c.std_error)));
        notes.push(anchor_note(&r.dv_name, r.dv_anchor.as_ref()));
    }
    if let Some(c) = results.first().and_then(|r| r.coefficient(iv_name)) {
        notes.push(anchor_note(iv_name, c.anchor.as_ref()));
    }
    Ok(ComparisonReport {
        kind: ComparisonKind::RelativeImpact,
        entries: rank(items),
        notes,
    })
}

pub fn percent_difference_report(label: &str, diff: &PercentDifference) -> ComparisonReport {
    ComparisonReport {
        kind: ComparisonKind::PercentDifference,
        entries: rank(vec![(label.to_string(), diff.estimate, Some(diff.std_error))]),
        notes: vec![format!(
            "n treatment = {}, n control = {}",
            diff.n_treatment, diff.n_control
        )],
    }
}

/// Percentizes each part with its own anchors and stacks the rows.
///
/// `unify` overrides, per variable, the anchor of each part (one entry per
/// part, in order), e.g. a 1–7 Likert in some parts and a 1–9 Likert in
/// others. With two or more parts, `part=<k>` indicators for parts 2..k
/// are appended so a part fixed effect can be added to a fit.
pub fn pool_datasets(
    parts: &[(Dataset, Vec<VariableSpec>)],
    unify: &BTreeMap<String, Vec<ScaleAnchor>>,
) -> Result<PercentizedDataset> {
    if parts.is_empty() {
        return Err(Error::SchemaMismatch("no parts to pool".to_string()));
    }
    for (variable, anchors) in unify {
        if anchors.len() != parts.len() {
            return Err(Error::SchemaMismatch(format!(
                "`{variable}` has {} part anchors for {} parts",
                anchors.len(),
                parts.len()
            )));
        }
    }

    let mut percentized = Vec::with_capacity(parts.len());
    for (k, (data, specs)) in parts.iter().enumerate() {
        let mut specs = specs.clone();
        for (variable, anchors) in unify {
            let spec = specs
                .iter_mut()
                .find(|s| &s.name == variable)
                .ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "part {} ({}) does not declare `{variable}`",
                        k + 1,
                        data.source_id()
                    ))
                })?;
            if spec.kind != VariableKind::Numerical {
                return Err(Error::SchemaMismatch(format!(
                    "`{variable}` is not numerical and cannot take per-part anchors"
                )));
            }
            spec.anchor = Some(anchors[k]);
        }
        percentized.push(percentize_dataset(data, &specs)?);
    }

    let first = &percentized[0];
    for (k, p) in percentized.iter().enumerate().skip(1) {
        let same_names = p.columns.len() == first.columns.len()
            && p.columns.iter().zip(&first.columns).all(|(a, b)| a.name == b.name);
        if !same_names {
            return Err(Error::SchemaMismatch(format!(
                "part {} yields columns [{}], part 1 yields [{}]",
                k + 1,
                names(p).join(", "),
                names(first).join(", ")
            )));
        }
        for (a, b) in p.columns.iter().zip(&first.columns) {
            if let (Some(x), Some(y)) = (a.anchor(), b.anchor()) {
                if x.target() != y.target() {
                    return Err(Error::SchemaMismatch(format!(
                        "`{}` targets {} in part {} but {} in part 1",
                        a.name,
                        x.target(),
                        k + 1,
                        y.target()
                    )));
                }
            }
        }
    }

    let n_rows: usize = percentized.iter().map(|p| p.n_rows).sum();
    let mut columns = Vec::new();
    for (j, template) in first.columns.iter().enumerate() {
        let mut values = Vec::with_capacity(n_rows);
        let mut segments = Vec::new();
        for p in &percentized {
            values.extend_from_slice(&p.columns[j].values);
            if let Some(a) = p.columns[j].anchor() {
                segments.push((values.len(), *a));
            }
        }
        let coding = match &template.coding {
            Coding::Dummy { .. } => template.coding.clone(),
            _ if segments.iter().all(|(_, a)| *a == segments[0].1) => {
                Coding::Anchored(segments[0].1)
            }
            _ => Coding::Pooled { segments },
        };
        columns.push(PercentizedColumn {
            name: template.name.clone(),
            values,
            coding,
        });
    }

    let mut log = Vec::new();
    for (k, (p, (data, _))) in percentized.iter().zip(parts).enumerate() {
        log.extend(p.transform_log.iter().map(|t| TransformRecord {
            parameters: format!("{} [part {}: {}]", t.parameters, k + 1, data.source_id()),
            ..t.clone()
        }));
    }

    if percentized.len() > 1 {
        let mut offset = 0;
        let bounds: Vec<(usize, usize)> = percentized
            .iter()
            .map(|p| {
                let b = (offset, offset + p.n_rows);
                offset += p.n_rows;
                b
            })
            .collect();
        for (k, &(start, end)) in bounds.iter().enumerate().skip(1) {
            let name = format!("{PART_VARIABLE}={}", k + 1);
            let values = (0..n_rows)
                .map(|i| Some(if (start..end).contains(&i) { 1.0 } else { 0.0 }))
                .collect();
            log.push(TransformRecord {
                column: name.clone(),
                equation: crate::percentize::Equation::Dummy,
                parameters: format!("indicator of part {} (reference part 1)", k + 1),
            });
            columns.push(PercentizedColumn {
                name,
                values,
                coding: Coding::Dummy {
                    variable: PART_VARIABLE.to_string(),
                    category: (k + 1).to_string(),
                },
            });
        }
    }

    Ok(PercentizedDataset {
        columns,
        n_rows,
        transform_log: log,
    })
}

fn names(p: &PercentizedDataset) -> Vec<&str> {
    p.columns.iter().map(|c| c.name.as_str()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathCoefficient {
    /// Conventional label: `a1`, `d21`, `b1`, `c'` or `c`.
    pub label: String,
    pub from: String,
    pub to: String,
    pub b_p: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndirectEffect {
    /// Variable names along the route, IV first and DV last.
    pub route: Vec<String>,
    pub b_p: f64,
}

impl IndirectEffect {
    pub fn label(&self) -> String {
        self.route.join(" -> ")
    }
}

/// Serial mediation estimated on one common complete-case sample.
#[derive(Clone, Debug, PartialEq)]
pub struct MediationDecomposition {
    pub paths: Vec<PathCoefficient>,
    pub indirect_effects: Vec<IndirectEffect>,
    pub direct_effect: f64,
    pub total_effect: f64,
    /// Mediator equations in chain order, then the DV equation.
    pub equations: Vec<BpRegressionResult>,
    /// DV on IV and controls only.
    pub total_fit: BpRegressionResult,
    pub n_used: usize,
    pub rows_dropped: usize,
}

impl MediationDecomposition {
    pub fn path(&self, label: &str) -> Option<&PathCoefficient> {
        self.paths.iter().find(|p| p.label == label)
    }

    pub fn total_indirect(&self) -> f64 {
        self.indirect_effects.iter().map(|e| e.b_p).sum()
    }

    /// Indirect routes ranked by |b_p|.
    pub fn report(&self) -> ComparisonReport {
        ComparisonReport {
            kind: ComparisonKind::Mediation,
            entries: rank(
                self.indirect_effects
                    .iter()
                    .map(|e| (e.label(), e.b_p, None))
                    .collect(),
            ),
            notes: vec![
                format!("direct effect c' = {}", self.direct_effect),
                format!("total effect c = {}", self.total_effect),
                format!("common sample n = {}", self.n_used),
            ],
        }
    }
}

/// Products of path coefficients along every serial route.
///
/// `a[i]` is IV -> M_i, `d[i][j]` (j < i) is M_j -> M_i, `b[i]` is M_i -> DV.
/// Routes visit an increasing subsequence of mediators; they are returned
/// ordered by length, then lexicographically.
pub fn serial_indirect_effects(a: &[f64], d: &[Vec<f64>], b: &[f64]) -> Vec<(Vec<usize>, f64)> {
    let m = a.len();
    let mut routes: Vec<Vec<usize>> = (1u32..(1 << m))
        .map(|mask| (0..m).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    routes.sort_by(|x, y| x.len().cmp(&y.len()).then(x.cmp(y)));
    routes
        .into_iter()
        .map(|route| {
            let mut effect = a[route[0]];
            for w in route.windows(2) {
                effect *= d[w[1]][w[0]];
            }
            effect *= b[*route.last().expect("routes are nonempty")];
            (route, effect)
        })
        .collect()
}

/// Fits the serial mediation system on the rows complete for every
/// variable involved: each mediator on the IV, earlier mediators and
/// controls; the DV on the IV, all mediators and controls; and the DV on
/// the IV and controls for the total effect.
pub fn mediation_paths(
    data: &PercentizedDataset,
    dv: &str,
    iv: &str,
    mediators: &[&str],
    controls: &[&str],
) -> Result<MediationDecomposition> {
    if mediators.is_empty() {
        return Err(Error::Config("mediation needs at least one mediator".to_string()));
    }
    if mediators.len() > 16 {
        return Err(Error::Config("at most 16 serial mediators are supported".to_string()));
    }
    for name in std::iter::once(&dv).chain(std::iter::once(&iv)).chain(mediators) {
        if data.column(name).is_none() {
            return Err(if data.variable_columns(name).is_empty() {
                Error::UnknownColumn(name.to_string())
            } else {
                Error::InvalidSpec {
                    name: name.to_string(),
                    reason: "mediation paths need single-column variables".to_string(),
                }
            });
        }
    }
    let mut involved: Vec<&PercentizedColumn> = Vec::new();
    for name in [dv, iv].iter().chain(mediators).chain(controls) {
        let cols = data.variable_columns(name);
        if cols.is_empty() {
            return Err(Error::UnknownColumn(name.to_string()));
        }
        involved.extend(cols);
    }
    let complete: Vec<usize> = (0..data.n_rows)
        .filter(|&i| involved.iter().all(|c| c.values[i].is_some()))
        .collect();
    let common = PercentizedDataset {
        columns: involved
            .iter()
            .map(|c| PercentizedColumn {
                name: c.name.clone(),
                values: complete.iter().map(|&i| c.values[i]).collect(),
                coding: match &c.coding {
                    Coding::Pooled { segments } => Coding::Pooled {
                        segments: segments
                            .iter()
                            .map(|(end, a)| (complete.partition_point(|&i| i < *end), *a))
                            .collect(),
                    },
                    other => other.clone(),
                },
            })
            .collect(),
        n_rows: complete.len(),
        transform_log: Vec::new(),
    };
    let rows_dropped = data.n_rows - complete.len();

    let m = mediators.len();
    let mut a = vec![0.0; m];
    let mut d = vec![vec![0.0; m]; m];
    let mut paths = Vec::new();
    let mut equations = Vec::with_capacity(m + 1);
    for (i, mediator) in mediators.iter().enumerate() {
        let mut predictors = vec![iv];
        predictors.extend(&mediators[..i]);
        predictors.extend(controls);
        let fit = fit_ols(&DesignMatrix::from_dataset(&common, mediator, &predictors)?)?;
        let c = fit.coefficient(iv).expect("IV is a predictor");
        a[i] = c.estimate;
        paths.push(PathCoefficient {
            label: format!("a{}", i + 1),
            from: iv.to_string(),
            to: mediator.to_string(),
            b_p: c.estimate,
            std_error: c.std_error,
        });
        for (j, earlier) in mediators[..i].iter().enumerate() {
            let c = fit.coefficient(earlier).expect("earlier mediator is a predictor");
            d[i][j] = c.estimate;
            paths.push(PathCoefficient {
                label: format!("d{}{}", i + 1, j + 1),
                from: earlier.to_string(),
                to: mediator.to_string(),
                b_p: c.estimate,
                std_error: c.std_error,
            });
        }
        equations.push(fit);
    }

    let mut predictors = vec![iv];
    predictors.extend(mediators);
    predictors.extend(controls);
    let outcome = fit_ols(&DesignMatrix::from_dataset(&common, dv, &predictors)?)?;
    let mut b = vec![0.0; m];
    for (i, mediator) in mediators.iter().enumerate() {
        let c = outcome.coefficient(mediator).expect("mediator is a predictor");
        b[i] = c.estimate;
        paths.push(PathCoefficient {
            label: format!("b{}", i + 1),
            from: mediator.to_string(),
            to: dv.to_string(),
            b_p: c.estimate,
            std_error: c.std_error,
        });
    }
    let direct = outcome.coefficient(iv).expect("IV is a predictor").clone();
    paths.push(PathCoefficient {
        label: "c'".to_string(),
        from: iv.to_string(),
        to: dv.to_string(),
        b_p: direct.estimate,
        std_error: direct.std_error,
    });
    equations.push(outcome);

    let mut predictors = vec![iv];
    predictors.extend(controls);
    let total_fit = fit_ols(&DesignMatrix::from_dataset(&common, dv, &predictors)?)?;
    let total = total_fit.coefficient(iv).expect("IV is a predictor").clone();
    paths.push(PathCoefficient {
        label: "c".to_string(),
        from: iv.to_string(),
        to: dv.to_string(),
        b_p: total.estimate,
        std_error: total.std_error,
    });

    let indirect_effects = serial_indirect_effects(&a, &d, &b)
        .into_iter()
        .map(|(route, b_p)| {
            let mut names = vec![iv.to_string()];
            names.extend(route.iter().map(|&i| mediators[i].to_string()));
            names.push(dv.to_string());
            IndirectEffect { route: names, b_p }
        })
        .collect();

    Ok(MediationDecomposition {
        paths,
        indirect_effects,
        direct_effect: direct.estimate,
        total_effect: total.estimate,
        equations,
        total_fit,
        n_used: complete.len(),
        rows_dropped,
    })
}
