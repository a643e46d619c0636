//! Conceptual scales: anchors, variable declarations, and round-number
//! anchor suggestion.
//!
//! An anchor is the analyst's statement of what the ends of a raw scale
//! mean. It is metadata, not something estimated from data: suggestion
//! only proposes round-number candidates for a human to confirm.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Range of the new scale a variable is mapped onto.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TargetRange {
    /// 0–1 percentage scale.
    Unit,
    /// 0–100 percent scale.
    Percent,
    /// −1–1 bidirectional percentage scale.
    Bipolar,
    Custom { min: f64, max: f64 },
}

impl TargetRange {
    pub fn custom(min: f64, max: f64) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::NonFiniteInput(format!("target range ({min}, {max})")));
        }
        if max <= min {
            return Err(Error::DegenerateAnchor { min, max });
        }
        Ok(TargetRange::Custom { min, max })
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            TargetRange::Unit => (0.0, 1.0),
            TargetRange::Percent => (0.0, 100.0),
            TargetRange::Bipolar => (-1.0, 1.0),
            TargetRange::Custom { min, max } => (min, max),
        }
    }

    pub fn min(&self) -> f64 {
        self.bounds().0
    }

    pub fn max(&self) -> f64 {
        self.bounds().1
    }

    /// Maps a recognized preset pair onto its variant, anything else onto `Custom`.
    pub fn from_bounds(min: f64, max: f64) -> Result<Self> {
        match (min, max) {
            (0.0, 1.0) => Ok(TargetRange::Unit),
            (0.0, 100.0) => Ok(TargetRange::Percent),
            (-1.0, 1.0) => Ok(TargetRange::Bipolar),
            _ => TargetRange::custom(min, max),
        }
    }
}

impl Default for TargetRange {
    fn default() -> Self {
        TargetRange::Unit
    }
}

impl fmt::Display for TargetRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.bounds();
        write!(f, "{lo}~{hi}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorProvenance {
    Declared,
    Suggested,
    Observed,
}

impl fmt::Display for AnchorProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnchorProvenance::Declared => "declared",
            AnchorProvenance::Suggested => "suggested",
            AnchorProvenance::Observed => "observed",
        })
    }
}

/// Conceptual minimum and maximum of a raw scale plus the range it maps onto.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleAnchor {
    c_n: f64,
    c_x: f64,
    target: TargetRange,
    provenance: AnchorProvenance,
}

impl ScaleAnchor {
    pub fn new(
        c_n: f64,
        c_x: f64,
        target: TargetRange,
        provenance: AnchorProvenance,
    ) -> Result<Self> {
        if !c_n.is_finite() || !c_x.is_finite() {
            return Err(Error::NonFiniteInput(format!("anchor ({c_n}, {c_x})")));
        }
        if c_x <= c_n {
            return Err(Error::DegenerateAnchor { min: c_n, max: c_x });
        }
        let (lo, hi) = target.bounds();
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFiniteInput(format!("target range ({lo}, {hi})")));
        }
        if hi <= lo {
            return Err(Error::DegenerateAnchor { min: lo, max: hi });
        }
        Ok(ScaleAnchor {
            c_n,
            c_x,
            target,
            provenance,
        })
    }

    /// A declared anchor onto the 0–1 percentage scale.
    pub fn declared(c_n: f64, c_x: f64) -> Result<Self> {
        Self::new(c_n, c_x, TargetRange::Unit, AnchorProvenance::Declared)
    }

    /// The implied anchor of a 0/1 dummy.
    pub fn dummy() -> Self {
        ScaleAnchor {
            c_n: 0.0,
            c_x: 1.0,
            target: TargetRange::Unit,
            provenance: AnchorProvenance::Declared,
        }
    }

    pub fn with_target(self, target: TargetRange) -> Result<Self> {
        Self::new(self.c_n, self.c_x, target, self.provenance)
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    pub fn c_x(&self) -> f64 {
        self.c_x
    }

    /// Width of the conceptual range in raw units.
    pub fn span(&self) -> f64 {
        self.c_x - self.c_n
    }

    pub fn target(&self) -> TargetRange {
        self.target
    }

    pub fn provenance(&self) -> AnchorProvenance {
        self.provenance
    }
}

impl fmt::Display for ScaleAnchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}) -> {} [{}]",
            self.c_n, self.c_x, self.target, self.provenance
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Dependent,
    Independent,
    Mediator,
    Control,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Numerical,
    Binary,
    Nominal,
}

/// Declaration of one analysis variable.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub role: Role,
    pub kind: VariableKind,
    pub anchor: Option<ScaleAnchor>,
    pub categories: Vec<String>,
    pub reference_category: Option<String>,
}

impl VariableSpec {
    pub fn numerical(name: impl Into<String>, role: Role, anchor: ScaleAnchor) -> Self {
        VariableSpec {
            name: name.into(),
            role,
            kind: VariableKind::Numerical,
            anchor: Some(anchor),
            categories: Vec::new(),
            reference_category: None,
        }
    }

    pub fn binary(name: impl Into<String>, role: Role) -> Self {
        VariableSpec {
            name: name.into(),
            role,
            kind: VariableKind::Binary,
            anchor: Some(ScaleAnchor::dummy()),
            categories: Vec::new(),
            reference_category: None,
        }
    }

    pub fn nominal<S: Into<String>>(
        name: impl Into<String>,
        role: Role,
        categories: impl IntoIterator<Item = S>,
        reference: impl Into<String>,
    ) -> Result<Self> {
        let spec = VariableSpec {
            name: name.into(),
            role,
            kind: VariableKind::Nominal,
            anchor: None,
            categories: categories.into_iter().map(Into::into).collect(),
            reference_category: Some(reference.into()),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the kind-specific invariants. Numerical specs without an
    /// anchor are allowed here; percentization rejects them.
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidSpec {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(invalid("empty variable name"));
        }
        if self.kind == VariableKind::Nominal {
            if self.categories.len() < 2 {
                return Err(invalid("nominal variables need at least 2 categories"));
            }
            for (i, c) in self.categories.iter().enumerate() {
                if self.categories[..i].contains(c) {
                    return Err(invalid(&format!("duplicate category `{c}`")));
                }
            }
            match &self.reference_category {
                Some(r) if self.categories.contains(r) => {}
                Some(r) => {
                    return Err(invalid(&format!(
                        "reference category `{r}` is not among the categories"
                    )))
                }
                None => return Err(invalid("nominal variables need a reference category")),
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    BelowMinimum,
    AboveMaximum,
}

/// A value that falls outside the conceptual range. Analysis proceeds;
/// the percentized value simply lies outside the target range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnchorWarning {
    pub row: usize,
    pub value: f64,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnchorVerdict {
    Ok,
    Warnings(Vec<AnchorWarning>),
}

impl AnchorVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, AnchorVerdict::Ok)
    }

    pub fn warnings(&self) -> &[AnchorWarning] {
        match self {
            AnchorVerdict::Ok => &[],
            AnchorVerdict::Warnings(w) => w,
        }
    }
}

/// Checks observed values against an anchor's conceptual range.
/// Missing values are skipped; rows are 0-based positions in `values`.
pub fn validate_anchor(anchor: &ScaleAnchor, values: &[Option<f64>]) -> Result<AnchorVerdict> {
    if anchor.c_x <= anchor.c_n {
        return Err(Error::DegenerateAnchor {
            min: anchor.c_n,
            max: anchor.c_x,
        });
    }
    let mut warnings = Vec::new();
    for (row, v) in values.iter().enumerate() {
        let Some(v) = *v else { continue };
        if !v.is_finite() {
            return Err(Error::NonFiniteInput(format!("row {row}: {v}")));
        }
        if v < anchor.c_n {
            warnings.push(AnchorWarning {
                row,
                value: v,
                side: Side::BelowMinimum,
            });
        } else if v > anchor.c_x {
            warnings.push(AnchorWarning {
                row,
                value: v,
                side: Side::AboveMaximum,
            });
        }
    }
    if warnings.is_empty() {
        Ok(AnchorVerdict::Ok)
    } else {
        Ok(AnchorVerdict::Warnings(warnings))
    }
}

/// A proposed (c_n, c_x) pair. Higher `score` is preferred.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorCandidate {
    pub pair: (f64, f64),
    pub score: f64,
    pub rationale: String,
}

impl AnchorCandidate {
    pub fn to_anchor(&self) -> Result<ScaleAnchor> {
        ScaleAnchor::new(
            self.pair.0,
            self.pair.1,
            TargetRange::Unit,
            AnchorProvenance::Suggested,
        )
    }
}

/// Leading digits of the round widths {1, 2, 2.5, 5} x 10^k, expressed in
/// tenths so every width is an integer times a power of ten.
const ROUND_WIDTHS: [i128; 4] = [10, 20, 25, 50];
const WIDTHS_KEPT: usize = 3;
const PLACEMENTS_PER_WIDTH: usize = 3;
// Beyond this many grid steps from zero the grid is finer than f64 can resolve.
const MAX_GRID_INDEX: f64 = 1e15;

/// `mantissa * 10^exp`, exact.
#[derive(Clone, Copy, Debug)]
struct Decimal {
    mantissa: i128,
    exp: i32,
}

impl Decimal {
    fn to_f64(self) -> f64 {
        format!("{}e{}", self.mantissa, self.exp)
            .parse()
            .expect("integer mantissa with exponent always parses")
    }

    fn significant_digits(self) -> u32 {
        let mut m = self.mantissa.unsigned_abs();
        if m == 0 {
            return 0;
        }
        while m % 10 == 0 {
            m /= 10;
        }
        m.ilog10() + 1
    }
}

struct Placement {
    width: f64,
    digits: u32,
    lo: f64,
    hi: f64,
    step: f64,
}

/// Proposes round-number conceptual anchors for an observed range.
///
/// With `declared_bounds` (a closed-ended instrument) the bounds are the
/// only candidate. Otherwise every candidate has a round width from
/// {1, 2, 2.5, 5} x 10^k, with endpoints on a grid of a tenth of that
/// width, and brackets the observed range. Candidates are ordered by
/// width, then by total significant digits of the endpoints, then by
/// smaller |c_n|.
pub fn suggest_anchors(
    observed_min: f64,
    observed_max: f64,
    declared_bounds: Option<(f64, f64)>,
) -> Result<Vec<AnchorCandidate>> {
    if !observed_min.is_finite() || !observed_max.is_finite() {
        return Err(Error::NonFiniteInput(format!(
            "observed range ({observed_min}, {observed_max})"
        )));
    }
    if let Some((lo, hi)) = declared_bounds {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFiniteInput(format!("declared bounds ({lo}, {hi})")));
        }
        if hi <= lo {
            return Err(Error::DegenerateAnchor { min: lo, max: hi });
        }
        return Ok(vec![AnchorCandidate {
            pair: (lo, hi),
            score: 1.0,
            rationale: "declared bounds of a closed-ended scale".to_string(),
        }]);
    }
    if observed_max <= observed_min {
        return Err(Error::DegenerateAnchor {
            min: observed_min,
            max: observed_max,
        });
    }

    let range = observed_max - observed_min;
    let mut exp = range.log10().floor() as i32 - 2;
    let mut placements: Vec<Placement> = Vec::new();
    let mut widths_found = 0;
    while widths_found < WIDTHS_KEPT {
        for lead in ROUND_WIDTHS {
            if widths_found == WIDTHS_KEPT {
                break;
            }
            let width = Decimal { mantissa: lead, exp }.to_f64();
            if width < range {
                continue;
            }
            let mut found = placements_for_width(lead, exp, observed_min, observed_max);
            if found.is_empty() {
                continue;
            }
            found.sort_by(|a, b| placement_order(a, b));
            found.truncate(PLACEMENTS_PER_WIDTH);
            placements.extend(found);
            widths_found += 1;
        }
        exp += 1;
    }

    placements.sort_by(placement_order);
    Ok(placements
        .into_iter()
        .enumerate()
        .map(|(i, p)| AnchorCandidate {
            pair: (p.lo, p.hi),
            score: 1.0 / (i as f64 + 1.0),
            rationale: format!(
                "round width {} on a {} grid, {} significant digit(s)",
                p.width, p.step, p.digits
            ),
        })
        .collect())
}

fn placement_order(a: &Placement, b: &Placement) -> Ordering {
    a.width
        .total_cmp(&b.width)
        .then(a.digits.cmp(&b.digits))
        .then(a.lo.abs().total_cmp(&b.lo.abs()))
        .then(a.lo.total_cmp(&b.lo))
}

/// All grid placements of the width `lead * 10^exp` that bracket the range.
fn placements_for_width(lead: i128, exp: i32, min: f64, max: f64) -> Vec<Placement> {
    let width = Decimal { mantissa: lead, exp }.to_f64();
    // grid step is width / 10 = lead * 10^(exp - 1); c_n = k * step
    let step_exp = exp - 1;
    let step = Decimal {
        mantissa: lead,
        exp: step_exp,
    }
    .to_f64();
    let k_hi = (min / step).floor();
    let k_lo = ((max - width) / step).ceil();
    if k_hi.abs() > MAX_GRID_INDEX || k_lo.abs() > MAX_GRID_INDEX {
        return Vec::new();
    }
    let (k_lo, k_hi) = (k_lo as i128 - 1, k_hi as i128 + 1);
    (k_lo..=k_hi)
        .filter_map(|k| {
            let lo = Decimal {
                mantissa: k * lead,
                exp: step_exp,
            };
            let hi = Decimal {
                mantissa: (k + 10) * lead,
                exp: step_exp,
            };
            let (lo_f, hi_f) = (lo.to_f64(), hi.to_f64());
            (lo_f <= min && hi_f >= max).then(|| Placement {
                width,
                digits: lo.significant_digits() + hi.significant_digits(),
                lo: lo_f,
                hi: hi_f,
                step,
            })
        })
        .collect()
}
