//! Analysis configuration: a TOML file with one `[[variable]]` table per
//! declared variable.
//!
//! ```toml
//! command = "regress"
//!
//! [[variable]]
//! name = "knowledge"
//! role = "dependent"
//! kind = "numerical"
//! c_n = 0
//! c_x = 20
//!
//! [[variable]]
//! name = "age"
//! role = "independent"
//! kind = "numerical"
//! c_n = 0
//! c_x = 100
//! target = "0-1"
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scale_model::{AnchorProvenance, Role, ScaleAnchor, TargetRange, VariableKind, VariableSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Percentize,
    Regress,
    CompareImportance,
    CompareImpact,
    PercentDiff,
    Pool,
    Mediate,
    AnchorsSuggest,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Percentize => "percentize",
            Command::Regress => "regress",
            Command::CompareImportance => "compare-importance",
            Command::CompareImpact => "compare-impact",
            Command::PercentDiff => "percent-diff",
            Command::Pool => "pool",
            Command::Mediate => "mediate",
            Command::AnchorsSuggest => "anchors-suggest",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Human-readable report.
    #[default]
    Text,
    /// Delimited machine-readable table.
    Table,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "percentize" => Command::Percentize,
            "regress" => Command::Regress,
            "compare-importance" => Command::CompareImportance,
            "compare-impact" => Command::CompareImpact,
            "percent-diff" => Command::PercentDiff,
            "pool" => Command::Pool,
            "mediate" => Command::Mediate,
            "anchors-suggest" => Command::AnchorsSuggest,
            other => return Err(Error::Config(format!("unknown command `{other}`"))),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TargetDecl {
    Preset(String),
    Pair([f64; 2]),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDecl {
    name: String,
    role: Role,
    kind: VariableKind,
    c_n: Option<f64>,
    c_x: Option<f64>,
    target: Option<TargetDecl>,
    #[serde(default)]
    categories: Vec<String>,
    reference: Option<String>,
    bounds: Option<[f64; 2]>,
    part_anchors: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    command: Command,
    #[serde(default)]
    input: Vec<PathBuf>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    delimiter: Option<char>,
    precision: Option<usize>,
    percent_precision: Option<usize>,
    focus: Option<String>,
    group: Option<String>,
    #[serde(default)]
    fixed_effects: bool,
    #[serde(default, rename = "variable")]
    variables: Vec<VariableDecl>,
}

/// A declared variable plus command-specific extras.
#[derive(Clone, Debug, PartialEq)]
pub struct Declaration {
    pub spec: VariableSpec,
    /// Instrument bounds of a closed-ended scale, for anchor suggestion.
    pub bounds: Option<(f64, f64)>,
    /// One anchor per input, for pooling.
    pub part_anchors: Vec<ScaleAnchor>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub inputs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub delimiter: Option<char>,
    pub precision: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub variables: Vec<Declaration>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub delimiter: u8,
    /// Decimals for coefficients.
    pub precision: usize,
    /// Decimals for percent display.
    pub percent_precision: usize,
    pub focus: Option<String>,
    pub group: Option<String>,
    pub fixed_effects: bool,
}

pub const DEFAULT_PRECISION: usize = 4;
pub const DEFAULT_PERCENT_PRECISION: usize = 1;

impl AnalysisConfig {
    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base, overrides)
    }

    /// Parses config text; relative input paths in the file resolve against `base`.
    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let inputs = if overrides.inputs.is_empty() {
            file.input.iter().map(|p| base.join(p)).collect()
        } else {
            overrides.inputs.clone()
        };
        let delimiter = overrides.delimiter.or(file.delimiter).unwrap_or(',');
        if !delimiter.is_ascii() || delimiter == '"' || delimiter == '\n' {
            return Err(Error::Config(format!("unsupported delimiter {delimiter:?}")));
        }
        let variables = file
            .variables
            .into_iter()
            .map(declaration)
            .collect::<Result<Vec<_>>>()?;
        let config = AnalysisConfig {
            command: file.command,
            inputs,
            variables,
            out: overrides.out.clone().or(file.out.map(|p| base.join(p))),
            format: overrides.format.or(file.format).unwrap_or_default(),
            delimiter: delimiter as u8,
            precision: overrides.precision.or(file.precision).unwrap_or(DEFAULT_PRECISION),
            percent_precision: file.percent_precision.unwrap_or(DEFAULT_PERCENT_PRECISION),
            focus: file.focus,
            group: file.group,
            fixed_effects: file.fixed_effects,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn specs(&self) -> Vec<VariableSpec> {
        self.variables.iter().map(|d| d.spec.clone()).collect()
    }

    pub fn declared(&self, name: &str) -> Option<&Declaration> {
        self.variables.iter().find(|d| d.spec.name == name)
    }

    pub fn with_role(&self, role: Role) -> Vec<&VariableSpec> {
        self.variables
            .iter()
            .map(|d| &d.spec)
            .filter(|s| s.role == role)
            .collect()
    }

    /// Predictors for a plain regression: independents, mediators and controls.
    pub fn predictors(&self) -> Vec<&str> {
        self.variables
            .iter()
            .filter(|d| d.spec.role != Role::Dependent)
            .map(|d| d.spec.name.as_str())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.inputs.is_empty() {
            return fail("no input file given".to_string());
        }
        if self.command != Command::Pool && self.inputs.len() != 1 {
            return fail(format!(
                "`{}` takes exactly one input, got {}",
                self.command,
                self.inputs.len()
            ));
        }
        for (i, d) in self.variables.iter().enumerate() {
            if self.variables[..i].iter().any(|o| o.spec.name == d.spec.name) {
                return fail(format!("variable `{}` declared twice", d.spec.name));
            }
        }
        for name in self.focus.iter().chain(&self.group) {
            if self.declared(name).is_none() {
                return fail(format!("`{name}` is referenced but not declared"));
            }
        }

        let dependents = self.with_role(Role::Dependent).len();
        let independents = self.with_role(Role::Independent);
        match self.command {
            Command::Regress | Command::Mediate | Command::CompareImportance | Command::PercentDiff
                if dependents != 1 =>
            {
                return fail(format!(
                    "`{}` needs exactly one dependent variable, found {dependents}",
                    self.command
                ));
            }
            Command::CompareImpact if dependents == 0 => {
                return fail("`compare-impact` needs at least one dependent variable".to_string());
            }
            _ => {}
        }
        match self.command {
            Command::CompareImpact if self.focus.is_none() && independents.len() != 1 => {
                return fail(
                    "`compare-impact` needs `focus` unless exactly one independent variable is declared"
                        .to_string(),
                );
            }
            Command::Mediate => {
                if independents.len() != 1 {
                    return fail(format!(
                        "`mediate` needs exactly one independent variable, found {}",
                        independents.len()
                    ));
                }
                if self.with_role(Role::Mediator).is_empty() {
                    return fail("`mediate` needs at least one mediator".to_string());
                }
            }
            Command::PercentDiff => {
                let group = self.group_variable()?;
                if group.kind != VariableKind::Binary {
                    return fail(format!("group variable `{}` must be binary", group.name));
                }
            }
            Command::Pool => {
                for d in &self.variables {
                    if !d.part_anchors.is_empty() && d.part_anchors.len() != self.inputs.len() {
                        return fail(format!(
                            "`{}` has {} part anchors for {} inputs",
                            d.spec.name,
                            d.part_anchors.len(),
                            self.inputs.len()
                        ));
                    }
                }
            }
            _ => {}
        }
        if self.command != Command::AnchorsSuggest {
            if let Some(d) = self.variables.iter().find(|d| {
                d.spec.kind == VariableKind::Numerical
                    && d.spec.anchor.is_none()
                    && d.part_anchors.is_empty()
            }) {
                return Err(Error::MissingAnchor(d.spec.name.clone()));
            }
        }
        Ok(())
    }

    /// The IV whose effects `compare-impact` ranks.
    pub fn focus_variable(&self) -> Result<&str> {
        if let Some(f) = &self.focus {
            return Ok(f);
        }
        match self.with_role(Role::Independent).as_slice() {
            [one] => Ok(&one.name),
            _ => Err(Error::Config("no focus variable".to_string())),
        }
    }

    /// The 0/1 treatment indicator for `percent-diff`.
    pub fn group_variable(&self) -> Result<&VariableSpec> {
        if let Some(g) = &self.group {
            return self
                .declared(g)
                .map(|d| &d.spec)
                .ok_or_else(|| Error::Config(format!("`{g}` is referenced but not declared")));
        }
        match self.with_role(Role::Independent).as_slice() {
            [one] => Ok(one),
            other => Err(Error::Config(format!(
                "`percent-diff` needs `group` or exactly one independent variable, found {}",
                other.len()
            ))),
        }
    }
}

fn declaration(d: VariableDecl) -> Result<Declaration> {
    let invalid = |reason: String| Error::InvalidSpec {
        name: d.name.clone(),
        reason,
    };
    let target = match &d.target {
        None => TargetRange::Unit,
        Some(TargetDecl::Preset(p)) => match p.as_str() {
            "0-1" | "unit" => TargetRange::Unit,
            "0-100" | "percent" => TargetRange::Percent,
            "-1-1" | "bipolar" => TargetRange::Bipolar,
            other => return Err(invalid(format!("unknown target range `{other}`"))),
        },
        Some(TargetDecl::Pair([lo, hi])) => TargetRange::from_bounds(*lo, *hi)?,
    };
    let anchor = match (d.kind, d.c_n, d.c_x) {
        (VariableKind::Numerical, Some(c_n), Some(c_x)) => {
            Some(ScaleAnchor::new(c_n, c_x, target, AnchorProvenance::Declared)?)
        }
        (VariableKind::Numerical, None, None) => None,
        (VariableKind::Numerical, _, _) => {
            return Err(invalid("give both c_n and c_x".to_string()));
        }
        (_, None, None) => None,
        (_, _, _) => return Err(invalid("only numerical variables take c_n/c_x".to_string())),
    };
    let part_anchors = d
        .part_anchors
        .iter()
        .flatten()
        .map(|[lo, hi]| ScaleAnchor::new(*lo, *hi, target, AnchorProvenance::Declared))
        .collect::<Result<Vec<_>>>()?;
    if !part_anchors.is_empty() && d.kind != VariableKind::Numerical {
        return Err(invalid("only numerical variables take part_anchors".to_string()));
    }
    let mut spec = match d.kind {
        VariableKind::Numerical => VariableSpec {
            name: d.name.clone(),
            role: d.role,
            kind: d.kind,
            anchor,
            categories: Vec::new(),
            reference_category: None,
        },
        VariableKind::Binary => VariableSpec::binary(d.name.clone(), d.role),
        VariableKind::Nominal => {
            let reference = d
                .reference
                .clone()
                .or_else(|| d.categories.first().cloned())
                .unwrap_or_default();
            VariableSpec::nominal(d.name.clone(), d.role, d.categories.clone(), reference)?
        }
    };
    if d.kind == VariableKind::Binary && !d.categories.is_empty() {
        if d.categories.len() != 2 {
            return Err(invalid("binary categories must list exactly two labels".to_string()));
        }
        spec.categories = d.categories.clone();
        spec.reference_category = Some(d.reference.clone().unwrap_or_else(|| d.categories[0].clone()));
        if !spec.categories.contains(spec.reference_category.as_ref().expect("set above")) {
            return Err(invalid("reference is not among the categories".to_string()));
        }
    }
    let bounds = match d.bounds {
        Some([lo, hi]) if hi > lo => Some((lo, hi)),
        Some([lo, hi]) => return Err(Error::DegenerateAnchor { min: lo, max: hi }),
        None => None,
    };
    Ok(Declaration {
        spec,
        bounds,
        part_anchors,
    })
}

/// Per-variable part anchors for pooling.
pub fn unify_map(config: &AnalysisConfig) -> BTreeMap<String, Vec<ScaleAnchor>> {
    config
        .variables
        .iter()
        .filter(|d| !d.part_anchors.is_empty())
        .map(|d| (d.spec.name.clone(), d.part_anchors.clone()))
        .collect()
}
