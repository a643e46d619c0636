//! Scale transformations onto percentage scales, dummy coding, and
//! percent display.

use std::fmt;

use crate::error::{Error, Result};
use crate::scale_model::{ScaleAnchor, TargetRange, VariableKind, VariableSpec};

/// 0–100 conversion: `(value - min) / (max - min) * 100`.
pub fn to_percent_scale(value: f64, min: f64, max: f64) -> Result<f64> {
    check_range(min, max)?;
    Ok((value - min) / (max - min) * 100.0)
}

/// General min-max normalization of `value` from `[min_o, max_o]` onto
/// `[min_n, max_n]`. Values outside the source range map outside the target.
pub fn min_max_normalize(
    value: f64,
    min_o: f64,
    max_o: f64,
    min_n: f64,
    max_n: f64,
) -> Result<f64> {
    check_range(min_o, max_o)?;
    check_range(min_n, max_n)?;
    Ok((value - min_o) / (max_o - min_o) * (max_n - min_n) + min_n)
}

/// Percentizes one raw value against its conceptual anchor.
///
/// The 0–1 ratio `(value - c_n) / (c_x - c_n)` is computed directly so the
/// anchors land exactly on 0 and 1; other target ranges are reached by
/// interpolating between the target endpoints.
pub fn percentize_value(value: f64, anchor: &ScaleAnchor) -> Result<f64> {
    check_range(anchor.c_n(), anchor.c_x())?;
    let ratio = (value - anchor.c_n()) / anchor.span();
    let (lo, hi) = anchor.target().bounds();
    if (lo, hi) == (0.0, 1.0) {
        Ok(ratio)
    } else {
        Ok(lo * (1.0 - ratio) + hi * ratio)
    }
}

/// Inverse of [`percentize_value`].
pub fn raw_value(score: f64, anchor: &ScaleAnchor) -> f64 {
    let (lo, hi) = anchor.target().bounds();
    let ratio = (score - lo) / (hi - lo);
    anchor.c_n() + ratio * anchor.span()
}

/// Renders a 0–1 value as a percent, e.g. 0.87 -> "87.0%" at precision 1.
pub fn format_percent(value: f64, precision: usize) -> String {
    let pct = value * 100.0;
    // avoid "-0.0%"
    let pct = if pct == 0.0 { 0.0 } else { pct };
    let s = format!("{pct:.precision$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        format!("{}%", &s[1..])
    } else {
        format!("{s}%")
    }
}

fn check_range(min: f64, max: f64) -> Result<()> {
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::NonFiniteInput(format!("range ({min}, {max})")));
    }
    if max <= min {
        return Err(Error::DegenerateAnchor { min, max });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Rectangular raw table. Cells are finite numbers, category labels, or missing.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
    source_id: String,
}

impl Dataset {
    pub fn new(source_id: impl Into<String>, columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.data.len());
        for (i, c) in columns.iter().enumerate() {
            if c.data.len() != n_rows {
                return Err(Error::SchemaMismatch(format!(
                    "column `{}` has {} rows, expected {n_rows}",
                    c.name,
                    c.data.len()
                )));
            }
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::SchemaMismatch(format!("duplicate column `{}`", c.name)));
            }
            if let ColumnData::Numeric(v) = &c.data {
                if let Some(row) = v.iter().position(|x| x.is_some_and(|x| !x.is_finite())) {
                    return Err(Error::NonFiniteInput(format!(
                        "column `{}`, row {row}",
                        c.name
                    )));
                }
            }
        }
        Ok(Dataset {
            columns,
            n_rows,
            source_id: source_id.into(),
        })
    }

    /// Builds a dataset of fully observed numeric columns.
    pub fn from_numeric<S: Into<String>>(
        source_id: impl Into<String>,
        columns: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self> {
        let columns = columns
            .into_iter()
            .map(|(name, values)| Column {
                name: name.into(),
                data: ColumnData::Numeric(values.into_iter().map(Some).collect()),
            })
            .collect();
        Self::new(source_id, columns)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }
}

/// Transformation applied to produce a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equation {
    /// 0–100 conversion.
    Percent,
    /// General min-max normalization.
    MinMax,
    /// Conceptual percentization (c_n, c_x) -> target range.
    Percentize,
    /// 0/1 indicator coding.
    Dummy,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Percent => "percent (x-min)/(max-min)*100",
            Equation::MinMax => "min-max",
            Equation::Percentize => "percentize (x-c_n)/(c_x-c_n)",
            Equation::Dummy => "dummy 0/1",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coding {
    Anchored(ScaleAnchor),
    /// Indicator of `variable == category`; the reference category has no
    /// column. Binary variables are their own single dummy.
    Dummy { variable: String, category: String },
    /// Rows stacked from several sources, each percentized with its own
    /// anchor. `end` is the exclusive row bound of each segment.
    Pooled { segments: Vec<(usize, ScaleAnchor)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PercentizedColumn {
    pub name: String,
    pub values: Vec<Option<f64>>,
    pub coding: Coding,
}

impl PercentizedColumn {
    /// Reconstructs raw values for anchored columns; dummies are their own raw values.
    pub fn raw_values(&self) -> Vec<Option<f64>> {
        match &self.coding {
            Coding::Anchored(a) => self.values.iter().map(|v| v.map(|s| raw_value(s, a))).collect(),
            Coding::Dummy { .. } => self.values.clone(),
            Coding::Pooled { segments } => {
                let mut start = 0;
                let mut out = Vec::with_capacity(self.values.len());
                for (end, a) in segments {
                    out.extend(self.values[start..*end].iter().map(|v| v.map(|s| raw_value(s, a))));
                    start = *end;
                }
                out
            }
        }
    }

    pub fn anchor(&self) -> Option<&ScaleAnchor> {
        match &self.coding {
            Coding::Anchored(a) => Some(a),
            Coding::Dummy { .. } | Coding::Pooled { .. } => None,
        }
    }

    /// Name of the declared variable this column came from.
    pub fn variable(&self) -> &str {
        match &self.coding {
            Coding::Anchored(_) | Coding::Pooled { .. } => &self.name,
            Coding::Dummy { variable, .. } => variable,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformRecord {
    pub column: String,
    pub equation: Equation,
    pub parameters: String,
}

impl fmt::Display for TransformRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {}", self.column, self.equation, self.parameters)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PercentizedDataset {
    pub columns: Vec<PercentizedColumn>,
    pub n_rows: usize,
    pub transform_log: Vec<TransformRecord>,
}

impl PercentizedDataset {
    pub fn column(&self, name: &str) -> Option<&PercentizedColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Columns standing for a declared variable: the column itself, or the
    /// dummy columns of a nominal variable in category order.
    pub fn variable_columns(&self, variable: &str) -> Vec<&PercentizedColumn> {
        if let Some(c) = self.column(variable) {
            return vec![c];
        }
        self.columns
            .iter()
            .filter(|c| matches!(&c.coding, Coding::Dummy { variable: v, .. } if v == variable))
            .collect()
    }
}

/// Percentizes every declared variable of `data`.
///
/// Numerical columns go through their anchors, binary columns pass through
/// as 0/1, and nominal columns become k-1 dummies named `<var>=<category>`
/// with the reference category omitted. Missing cells stay missing.
pub fn percentize_dataset(data: &Dataset, specs: &[VariableSpec]) -> Result<PercentizedDataset> {
    let mut columns = Vec::new();
    let mut log = Vec::new();
    for spec in specs {
        spec.validate()?;
        let column = data
            .column(&spec.name)
            .ok_or_else(|| Error::UnknownColumn(spec.name.clone()))?;
        match spec.kind {
            VariableKind::Numerical => {
                let anchor = spec
                    .anchor
                    .ok_or_else(|| Error::MissingAnchor(spec.name.clone()))?;
                let values = numeric_cells(column)?
                    .iter()
                    .map(|v| v.map(|x| percentize_value(x, &anchor)).transpose())
                    .collect::<Result<Vec<_>>>()?;
                let equation = match anchor.target() {
                    TargetRange::Unit => Equation::Percentize,
                    TargetRange::Percent => Equation::Percent,
                    _ => Equation::MinMax,
                };
                log.push(TransformRecord {
                    column: spec.name.clone(),
                    equation,
                    parameters: format!(
                        "c_n={} c_x={} target={}",
                        anchor.c_n(),
                        anchor.c_x(),
                        anchor.target()
                    ),
                });
                columns.push(PercentizedColumn {
                    name: spec.name.clone(),
                    values,
                    coding: Coding::Anchored(anchor),
                });
            }
            VariableKind::Binary => {
                let values = binary_cells(column, spec)?;
                log.push(TransformRecord {
                    column: spec.name.clone(),
                    equation: Equation::Dummy,
                    parameters: binary_parameters(spec),
                });
                columns.push(PercentizedColumn {
                    name: spec.name.clone(),
                    values,
                    coding: Coding::Dummy {
                        variable: spec.name.clone(),
                        category: binary_one_label(spec),
                    },
                });
            }
            VariableKind::Nominal => {
                let labels = label_cells(column);
                for (row, label) in labels.iter().enumerate() {
                    if let Some(l) = label {
                        if !spec.categories.contains(l) {
                            return Err(Error::UnknownCategory {
                                column: spec.name.clone(),
                                value: format!("{l} (row {row})"),
                            });
                        }
                    }
                }
                let reference = spec.reference_category.as_deref().unwrap_or_default();
                for category in spec.categories.iter().filter(|c| *c != reference) {
                    let name = format!("{}={}", spec.name, category);
                    let values = labels
                        .iter()
                        .map(|l| l.as_ref().map(|l| f64::from(u8::from(l == category))))
                        .collect();
                    log.push(TransformRecord {
                        column: name.clone(),
                        equation: Equation::Dummy,
                        parameters: format!("{}=={} (reference {})", spec.name, category, reference),
                    });
                    columns.push(PercentizedColumn {
                        name,
                        values,
                        coding: Coding::Dummy {
                            variable: spec.name.clone(),
                            category: category.clone(),
                        },
                    });
                }
            }
        }
    }
    Ok(PercentizedDataset {
        columns,
        n_rows: data.n_rows(),
        transform_log: log,
    })
}

fn numeric_cells(column: &Column) -> Result<&[Option<f64>]> {
    match &column.data {
        ColumnData::Numeric(v) => Ok(v),
        ColumnData::Categorical(v) => {
            let (row, cell) = v
                .iter()
                .enumerate()
                .find_map(|(i, c)| c.as_ref().map(|c| (i + 1, c.clone())))
                .unwrap_or((0, String::new()));
            Err(Error::Parse {
                row,
                column: column.name.clone(),
                message: format!("numerical variable has non-numeric cell `{cell}`"),
            })
        }
    }
}

/// Cells as category labels; numeric codes are rendered with `Display`.
fn label_cells(column: &Column) -> Vec<Option<String>> {
    match &column.data {
        ColumnData::Categorical(v) => v.clone(),
        ColumnData::Numeric(v) => v.iter().map(|x| x.map(|x| x.to_string())).collect(),
    }
}

fn binary_cells(column: &Column, spec: &VariableSpec) -> Result<Vec<Option<f64>>> {
    // text-coded binaries need two declared categories; the non-reference one codes 1
    let one_label = match (&column.data, spec.categories.as_slice()) {
        (ColumnData::Categorical(_), [a, b]) => {
            let reference = spec.reference_category.as_deref().unwrap_or(a);
            Some(if reference == a { b.clone() } else { a.clone() })
        }
        _ => None,
    };
    let bad = |row: usize, value: String| Error::UnknownCategory {
        column: spec.name.clone(),
        value: format!("{value} (row {row}); binary variables take 0 or 1"),
    };
    match &column.data {
        ColumnData::Numeric(v) => v
            .iter()
            .enumerate()
            .map(|(row, x)| match x {
                None => Ok(None),
                Some(x) if *x == 0.0 || *x == 1.0 => Ok(Some(*x)),
                Some(x) => Err(bad(row, x.to_string())),
            })
            .collect(),
        ColumnData::Categorical(v) => v
            .iter()
            .enumerate()
            .map(|(row, l)| match (l, &one_label) {
                (None, _) => Ok(None),
                (Some(l), Some(one)) if l == one => Ok(Some(1.0)),
                (Some(l), Some(_)) if spec.categories.contains(l) => Ok(Some(0.0)),
                (Some(l), _) => match l.trim() {
                    "0" => Ok(Some(0.0)),
                    "1" => Ok(Some(1.0)),
                    _ => Err(bad(row, l.clone())),
                },
            })
            .collect(),
    }
}

fn binary_one_label(spec: &VariableSpec) -> String {
    match spec.categories.as_slice() {
        [a, b] => {
            let reference = spec.reference_category.as_deref().unwrap_or(a);
            if reference == a { b.clone() } else { a.clone() }
        }
        _ => "1".to_string(),
    }
}

fn binary_parameters(spec: &VariableSpec) -> String {
    match spec.categories.as_slice() {
        [a, b] => {
            let reference = spec.reference_category.as_deref().unwrap_or(a);
            let one = if reference == a { b } else { a };
            format!("{}=={} (reference {})", spec.name, one, reference)
        }
        _ => "0/1 passthrough".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale_model::{AnchorProvenance, Role};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn percent_scale_examples() {
        assert!(close(to_percent_scale(7.5, 0.0, 10.0).unwrap(), 75.0, 1e-12));
        assert_eq!(to_percent_scale(0.0, 0.0, 10.0).unwrap(), 0.0);
        assert_eq!(to_percent_scale(10.0, 0.0, 10.0).unwrap(), 100.0);
        assert!(close(to_percent_scale(4.0, 1.0, 7.0).unwrap(), 50.0, 1e-12));
        assert!(matches!(
            to_percent_scale(1.0, 3.0, 3.0),
            Err(Error::DegenerateAnchor { .. })
        ));
    }

    #[test]
    fn min_max_examples() {
        for v in [-3.0, 0.0, 2.5, 7.5, 12.0] {
            assert_eq!(
                min_max_normalize(v, 0.0, 10.0, 0.0, 100.0).unwrap(),
                to_percent_scale(v, 0.0, 10.0).unwrap()
            );
        }
        assert_eq!(min_max_normalize(5.0, 0.0, 10.0, -1.0, 1.0).unwrap(), 0.0);
        assert!(close(min_max_normalize(18.0, 0.0, 100.0, 0.0, 1.0).unwrap(), 0.18, 1e-12));
        assert!(min_max_normalize(1.0, 0.0, 1.0, 2.0, 2.0).is_err());
        assert!(min_max_normalize(1.0, 1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn percentize_value_examples() {
        let age = ScaleAnchor::declared(0.0, 100.0).unwrap();
        assert!(close(percentize_value(83.0, &age).unwrap(), 0.83, 1e-12));
        assert_eq!(percentize_value(0.0, &age).unwrap(), 0.0);
        let nine = ScaleAnchor::declared(1.0, 9.0).unwrap();
        assert_eq!(percentize_value(5.0, &nine).unwrap(), 0.5);
    }

    #[test]
    fn endpoints_exact_for_every_preset() {
        for target in [
            TargetRange::Unit,
            TargetRange::Percent,
            TargetRange::Bipolar,
            TargetRange::custom(-3.7, 12.1).unwrap(),
        ] {
            let a = ScaleAnchor::new(1.3, 8.9, target, AnchorProvenance::Declared).unwrap();
            assert_eq!(percentize_value(1.3, &a).unwrap(), target.min());
            assert_eq!(percentize_value(8.9, &a).unwrap(), target.max());
        }
    }

    #[test]
    fn format_percent_examples() {
        assert_eq!(format_percent(0.87, 1), "87.0%");
        assert_eq!(format_percent(0.87, 0), "87%");
        assert_eq!(format_percent(0.0, 1), "0.0%");
        assert_eq!(format_percent(1.0, 1), "100.0%");
        assert_eq!(format_percent(-0.25, 1), "-25.0%");
        assert_eq!(format_percent(-0.0, 1), "0.0%");
        assert_eq!(format_percent(-0.00001, 1), "0.0%");
    }

    fn survey() -> Dataset {
        Dataset::new(
            "survey",
            vec![
                Column {
                    name: "age".into(),
                    data: ColumnData::Numeric(vec![Some(18.0), Some(50.0), Some(83.0), None]),
                },
                Column {
                    name: "region".into(),
                    data: ColumnData::Categorical(vec![
                        Some("north".into()),
                        Some("south".into()),
                        Some("east".into()),
                        None,
                    ]),
                },
                Column {
                    name: "female".into(),
                    data: ColumnData::Numeric(vec![Some(0.0), Some(1.0), None, Some(1.0)]),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn dataset_percentization() {
        let specs = vec![
            VariableSpec::numerical("age", Role::Independent, ScaleAnchor::declared(0.0, 100.0).unwrap()),
            VariableSpec::nominal("region", Role::Independent, ["north", "south", "east"], "north").unwrap(),
            VariableSpec::binary("female", Role::Control),
        ];
        let p = percentize_dataset(&survey(), &specs).unwrap();
        let names: Vec<_> = p.columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["age", "region=south", "region=east", "female"]);
        let age = &p.column("age").unwrap().values;
        assert!(close(age[0].unwrap(), 0.18, 1e-12));
        assert!(close(age[1].unwrap(), 0.50, 1e-12));
        assert!(close(age[2].unwrap(), 0.83, 1e-12));
        assert_eq!(age[3], None);
        assert_eq!(
            p.column("region=south").unwrap().values,
            vec![Some(0.0), Some(1.0), Some(0.0), None]
        );
        assert_eq!(p.variable_columns("region").len(), 2);
        assert_eq!(p.column("female").unwrap().values, vec![Some(0.0), Some(1.0), None, Some(1.0)]);
        assert_eq!(p.transform_log.len(), 4);
    }

    #[test]
    fn identity_anchor_leaves_values_unchanged() {
        let values = vec![0.0, 0.125, 0.5, 0.9, 1.0];
        let d = Dataset::from_numeric("t", [("x", values.clone())]).unwrap();
        let specs = [VariableSpec::numerical("x", Role::Dependent, ScaleAnchor::declared(0.0, 1.0).unwrap())];
        let p = percentize_dataset(&d, &specs).unwrap();
        let out: Vec<f64> = p.columns[0].values.iter().map(|v| v.unwrap()).collect();
        assert_eq!(out, values);
    }

    #[test]
    fn percentize_errors() {
        let d = survey();
        let mut spec = VariableSpec::numerical("age", Role::Dependent, ScaleAnchor::declared(0.0, 100.0).unwrap());
        spec.anchor = None;
        assert!(matches!(percentize_dataset(&d, &[spec]), Err(Error::MissingAnchor(_))));

        let spec = VariableSpec::binary("height", Role::Dependent);
        assert!(matches!(percentize_dataset(&d, &[spec]), Err(Error::UnknownColumn(_))));

        let spec = VariableSpec::nominal("region", Role::Independent, ["north", "south"], "north").unwrap();
        assert!(matches!(
            percentize_dataset(&d, &[spec]),
            Err(Error::UnknownCategory { .. })
        ));

        let spec = VariableSpec::binary("age", Role::Control);
        assert!(matches!(
            percentize_dataset(&d, &[spec]),
            Err(Error::UnknownCategory { .. })
        ));
    }

    #[test]
    fn text_binary_coded_against_reference() {
        let d = Dataset::new(
            "t",
            vec![Column {
                name: "group".into(),
                data: ColumnData::Categorical(vec![
                    Some("control".into()),
                    Some("treated".into()),
                    None,
                ]),
            }],
        )
        .unwrap();
        let spec = VariableSpec {
            categories: vec!["control".into(), "treated".into()],
            reference_category: Some("control".into()),
            ..VariableSpec::binary("group", Role::Independent)
        };
        let p = percentize_dataset(&d, &[spec]).unwrap();
        assert_eq!(p.columns[0].values, vec![Some(0.0), Some(1.0), None]);
    }

    #[test]
    fn raw_values_round_trip() {
        let a = ScaleAnchor::new(-12.5, 40.0, TargetRange::Bipolar, AnchorProvenance::Declared).unwrap();
        let raw = [-12.5, 0.3, 17.0, 40.0, 55.5];
        let d = Dataset::from_numeric("t", [("x", raw.to_vec())]).unwrap();
        let p = percentize_dataset(&d, &[VariableSpec::numerical("x", Role::Dependent, a)]).unwrap();
        for (back, orig) in p.columns[0].raw_values().iter().zip(raw) {
            assert!(close(back.unwrap(), orig, 1e-12 * orig.abs().max(1.0)));
        }
    }
}
