//! Least-squares estimation of percentage coefficients (b_p).
//!
//! Fits run on percentized data, so every slope reads as the fraction of the
//! DV's conceptual range moved per full conceptual range of the IV (or per
//! 0→1 switch of a dummy). Solves go through Householder QR; standard errors
//! are the classical homoskedastic ones.

mod qr;

use std::fmt;

use crate::error::{Error, Result};
use crate::percentize::{percentize_value, Coding, PercentizedDataset};
use crate::scale_model::ScaleAnchor;

pub use qr::RANK_TOLERANCE;

/// Name of the constant term in every fit.
pub const INTERCEPT: &str = "(intercept)";

/// Two-sided 95% normal quantile used for the labelled normal-theory intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Intercept,
    Numerical,
    Dummy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Predictor {
    pub name: String,
    pub values: Vec<f64>,
    pub kind: TermKind,
    pub anchor: Option<ScaleAnchor>,
}

impl Predictor {
    pub fn numerical(name: impl Into<String>, values: Vec<f64>) -> Self {
        Predictor {
            name: name.into(),
            values,
            kind: TermKind::Numerical,
            anchor: None,
        }
    }

    pub fn dummy(name: impl Into<String>, values: Vec<f64>) -> Self {
        Predictor {
            name: name.into(),
            values,
            kind: TermKind::Dummy,
            anchor: None,
        }
    }
}

/// Complete-case regression design. The intercept is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    dv_name: String,
    dv: Vec<f64>,
    dv_anchor: Option<ScaleAnchor>,
    predictors: Vec<Predictor>,
    rows_dropped: usize,
}

impl DesignMatrix {
    pub fn new(dv_name: impl Into<String>, dv: Vec<f64>, predictors: Vec<Predictor>) -> Result<Self> {
        let dv_name = dv_name.into();
        let n = dv.len();
        if let Some(p) = predictors.iter().find(|p| p.values.len() != n) {
            return Err(Error::SchemaMismatch(format!(
                "predictor `{}` has {} rows, DV `{dv_name}` has {n}",
                p.name,
                p.values.len()
            )));
        }
        let non_finite = |v: &[f64]| v.iter().any(|x| !x.is_finite());
        if non_finite(&dv) {
            return Err(Error::NonFiniteInput(format!("DV `{dv_name}`")));
        }
        if let Some(p) = predictors.iter().find(|p| non_finite(&p.values)) {
            return Err(Error::NonFiniteInput(format!("predictor `{}`", p.name)));
        }
        for (i, p) in predictors.iter().enumerate() {
            if p.name == INTERCEPT || predictors[..i].iter().any(|o| o.name == p.name) {
                return Err(Error::SchemaMismatch(format!("duplicate predictor `{}`", p.name)));
            }
        }
        // intercept + predictors, plus one residual degree of freedom
        let needed = predictors.len() + 2;
        if n < needed {
            return Err(Error::InsufficientRows {
                needed,
                available: n,
            });
        }
        Ok(DesignMatrix {
            dv_name,
            dv,
            dv_anchor: None,
            predictors,
            rows_dropped: 0,
        })
    }

    /// Builds a design from percentized columns with listwise deletion.
    /// A nominal variable name expands to all of its dummy columns.
    pub fn from_dataset(data: &PercentizedDataset, dv: &str, predictors: &[&str]) -> Result<Self> {
        let dv_col = data
            .column(dv)
            .ok_or_else(|| Error::UnknownColumn(dv.to_string()))?;
        let mut cols = Vec::new();
        for name in predictors {
            let found = data.variable_columns(name);
            if found.is_empty() {
                return Err(Error::UnknownColumn(name.to_string()));
            }
            cols.extend(found);
        }
        let complete: Vec<usize> = (0..data.n_rows)
            .filter(|&i| dv_col.values[i].is_some() && cols.iter().all(|c| c.values[i].is_some()))
            .collect();
        let take = |values: &[Option<f64>]| -> Vec<f64> {
            complete.iter().map(|&i| values[i].expect("complete case")).collect()
        };
        let preds = cols
            .iter()
            .map(|c| Predictor {
                name: c.name.clone(),
                values: take(&c.values),
                kind: match c.coding {
                    Coding::Anchored(_) | Coding::Pooled { .. } => TermKind::Numerical,
                    Coding::Dummy { .. } => TermKind::Dummy,
                },
                anchor: c.anchor().copied(),
            })
            .collect();
        let mut design = DesignMatrix::new(dv, take(&dv_col.values), preds)?;
        design.dv_anchor = dv_col.anchor().copied();
        design.rows_dropped = data.n_rows - complete.len();
        Ok(design)
    }

    pub fn with_dv_anchor(mut self, anchor: ScaleAnchor) -> Self {
        self.dv_anchor = Some(anchor);
        self
    }

    pub fn dv_name(&self) -> &str {
        &self.dv_name
    }

    pub fn dv(&self) -> &[f64] {
        &self.dv
    }

    pub fn predictors(&self) -> &[Predictor] {
        &self.predictors
    }

    pub fn n_rows(&self) -> usize {
        self.dv.len()
    }

    pub fn rows_dropped(&self) -> usize {
        self.rows_dropped
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    pub name: String,
    pub kind: TermKind,
    pub estimate: f64,
    pub std_error: f64,
    pub anchor: Option<ScaleAnchor>,
}

impl Coefficient {
    /// 95% normal-theory interval.
    pub fn confidence_interval(&self) -> (f64, f64) {
        (
            self.estimate - Z_95 * self.std_error,
            self.estimate + Z_95 * self.std_error,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpRegressionResult {
    pub dv_name: String,
    pub dv_anchor: Option<ScaleAnchor>,
    /// Intercept first, then predictors in design order.
    pub coefficients: Vec<Coefficient>,
    /// Row-major covariance of the coefficients.
    pub covariance: Vec<f64>,
    pub r_squared: f64,
    pub residual_variance: f64,
    pub residuals: Vec<f64>,
    pub n_used: usize,
    pub rows_dropped: usize,
}

impl BpRegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.coefficient(name).map(|c| c.estimate)
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[0].estimate
    }

    /// Non-intercept coefficients.
    pub fn slopes(&self) -> &[Coefficient] {
        &self.coefficients[1..]
    }

    pub fn df_residual(&self) -> usize {
        self.n_used - self.coefficients.len()
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.coefficients.iter().position(|c| c.name == name)
    }

    /// Wald-style difference of two coefficients. Equitable units make the
    /// difference interpretable; treat the test as a convenience only.
    pub fn contrast(&self, a: &str, b: &str) -> Result<Contrast> {
        let i = self
            .index(a)
            .ok_or_else(|| Error::UnknownColumn(a.to_string()))?;
        let j = self
            .index(b)
            .ok_or_else(|| Error::UnknownColumn(b.to_string()))?;
        let p = self.coefficients.len();
        let var = self.covariance[i * p + i] + self.covariance[j * p + j]
            - 2.0 * self.covariance[i * p + j];
        let difference = self.coefficients[i].estimate - self.coefficients[j].estimate;
        let std_error = var.max(0.0).sqrt();
        Ok(Contrast {
            difference,
            std_error,
            z: difference / std_error,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contrast {
    pub difference: f64,
    pub std_error: f64,
    pub z: f64,
}

/// Ordinary least squares with an intercept.
pub fn fit_ols(design: &DesignMatrix) -> Result<BpRegressionResult> {
    let n = design.n_rows();
    let mut columns = Vec::with_capacity(design.predictors.len() + 1);
    columns.push(vec![1.0; n]);
    columns.extend(design.predictors.iter().map(|p| p.values.clone()));
    let p = columns.len();

    let solution = qr::least_squares(&columns, &design.dv).map_err(|qr::QrFailure::Dependent(idx)| {
        Error::RankDeficient {
            columns: idx
                .into_iter()
                .map(|i| {
                    if i == 0 {
                        INTERCEPT.to_string()
                    } else {
                        design.predictors[i - 1].name.clone()
                    }
                })
                .collect(),
        }
    })?;
    let b = &solution.coefficients;

    let residuals: Vec<f64> = (0..n)
        .map(|i| design.dv[i] - columns.iter().zip(b).map(|(c, bj)| c[i] * bj).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = design.dv.iter().sum::<f64>() / n as f64;
    let tss: f64 = design.dv.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let residual_variance = rss / (n - p) as f64;
    let covariance: Vec<f64> = solution
        .unscaled_covariance()
        .into_iter()
        .map(|v| v * residual_variance)
        .collect();

    let mut coefficients = Vec::with_capacity(p);
    for (j, &estimate) in b.iter().enumerate() {
        let std_error = covariance[j * p + j].max(0.0).sqrt();
        let (name, kind, anchor) = if j == 0 {
            (INTERCEPT.to_string(), TermKind::Intercept, None)
        } else {
            let pr = &design.predictors[j - 1];
            (pr.name.clone(), pr.kind, pr.anchor)
        };
        coefficients.push(Coefficient {
            name,
            kind,
            estimate,
            std_error,
            anchor,
        });
    }

    Ok(BpRegressionResult {
        dv_name: design.dv_name.clone(),
        dv_anchor: design.dv_anchor,
        coefficients,
        covariance,
        r_squared,
        residual_variance,
        residuals,
        n_used: n,
        rows_dropped: design.rows_dropped,
    })
}

/// The b_p implied by a raw-scale slope: `b_raw * IV span / DV span`.
pub fn rescale_coefficient(b_raw: f64, iv_anchor: &ScaleAnchor, dv_anchor: &ScaleAnchor) -> Result<f64> {
    for a in [iv_anchor, dv_anchor] {
        if a.c_x() <= a.c_n() {
            return Err(Error::DegenerateAnchor {
                min: a.c_n(),
                max: a.c_x(),
            });
        }
    }
    Ok(b_raw * iv_anchor.span() / dv_anchor.span())
}

/// Coefficients as they read with the DV and numerical IVs on 0–100 scales.
///
/// Numerical slopes are unchanged (the factors of 100 cancel); the
/// intercept and dummy slopes scale by 100 with the DV.
pub fn pomp_coefficients(result: &BpRegressionResult) -> Vec<(String, f64)> {
    result
        .coefficients
        .iter()
        .map(|c| {
            let v = match c.kind {
                TermKind::Numerical => c.estimate,
                TermKind::Intercept | TermKind::Dummy => c.estimate * 100.0,
            };
            (c.name.clone(), v)
        })
        .collect()
}

/// β weights from z-scored DV and predictors, as a contrast to b_p.
pub fn standardized_coefficients(design: &DesignMatrix) -> Result<Vec<(String, f64)>> {
    let dv = z_scores(&design.dv, &design.dv_name)?;
    let predictors = design
        .predictors
        .iter()
        .map(|p| {
            Ok(Predictor {
                values: z_scores(&p.values, &p.name)?,
                ..p.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let z = DesignMatrix::new(design.dv_name.clone(), dv, predictors)?;
    let fit = fit_ols(&z)?;
    Ok(fit
        .slopes()
        .iter()
        .map(|c| (c.name.clone(), c.estimate))
        .collect())
}

fn z_scores(values: &[f64], name: &str) -> Result<Vec<f64>> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) || sd <= 1e-14 * mean.abs() {
        return Err(Error::ZeroVariance(name.to_string()));
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Treatment-minus-control mean difference on a percentized DV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PercentDifference {
    /// DV-fraction units; ×100 gives percentage points.
    pub estimate: f64,
    /// Two-sample pooled-variance standard error.
    pub std_error: f64,
    pub n_treatment: usize,
    pub n_control: usize,
}

impl PercentDifference {
    pub fn confidence_interval(&self) -> (f64, f64) {
        (
            self.estimate - Z_95 * self.std_error,
            self.estimate + Z_95 * self.std_error,
        )
    }
}

impl fmt::Display for PercentDifference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.4} (se {:.4}, n = {} vs {})",
            self.estimate, self.std_error, self.n_treatment, self.n_control
        )
    }
}

/// Percentizes raw DV values of both groups with `dv_anchor` and returns the
/// difference in means.
pub fn percent_difference(
    treatment_dv: &[f64],
    control_dv: &[f64],
    dv_anchor: &ScaleAnchor,
) -> Result<PercentDifference> {
    let convert = |v: &[f64]| -> Result<Vec<f64>> {
        v.iter().map(|&x| percentize_value(x, dv_anchor)).collect()
    };
    percent_difference_percentized(&convert(treatment_dv)?, &convert(control_dv)?)
}

/// As [`percent_difference`] for values already on the percentage scale.
pub fn percent_difference_percentized(treatment: &[f64], control: &[f64]) -> Result<PercentDifference> {
    if treatment.is_empty() {
        return Err(Error::EmptyGroup("treatment".to_string()));
    }
    if control.is_empty() {
        return Err(Error::EmptyGroup("control".to_string()));
    }
    let (n1, n0) = (treatment.len(), control.len());
    if n1 + n0 < 3 {
        return Err(Error::InsufficientRows {
            needed: 3,
            available: n1 + n0,
        });
    }
    if let Some(x) = treatment.iter().chain(control).find(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput(format!("group value {x}")));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let (m1, m0) = (mean(treatment), mean(control));
    let pooled = (ss(treatment, m1) + ss(control, m0)) / (n1 + n0 - 2) as f64;
    let std_error = (pooled * (1.0 / n1 as f64 + 1.0 / n0 as f64)).sqrt();
    Ok(PercentDifference {
        estimate: m1 - m0,
        std_error,
        n_treatment: n1,
        n_control: n0,
    })
}

/// Splits a percentized DV by a 0/1 group column, dropping incomplete rows.
/// Returns (treatment = 1, control = 0).
pub fn split_by_group(data: &PercentizedDataset, dv: &str, group: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let dv_col = data
        .column(dv)
        .ok_or_else(|| Error::UnknownColumn(dv.to_string()))?;
    let g = data
        .column(group)
        .ok_or_else(|| Error::UnknownColumn(group.to_string()))?;
    let mut treatment = Vec::new();
    let mut control = Vec::new();
    for (row, (y, gv)) in dv_col.values.iter().zip(&g.values).enumerate() {
        match (y, gv) {
            (Some(y), Some(gv)) if *gv == 1.0 => treatment.push(*y),
            (Some(y), Some(gv)) if *gv == 0.0 => control.push(*y),
            (Some(_), Some(gv)) => {
                return Err(Error::UnknownCategory {
                    column: group.to_string(),
                    value: format!("{gv} (row {row}); group indicators take 0 or 1"),
                })
            }
            _ => {}
        }
    }
    Ok((treatment, control))
}
