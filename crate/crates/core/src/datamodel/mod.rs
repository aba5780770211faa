//! Sample schema shared by the survey and agency sources, plus ingestion,
//! weight-based replication, and feature encoding.

mod encode;
mod csvio;

pub use csvio::{load_table, write_table};
pub use encode::{encode, ColumnRole, EncodedMatrix, Standardization};

use crate::error::{Error, Result};
use crate::period::HalfYearPeriod;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Ratios strictly above this mark count as a marked wage gain.
pub const WAGE_GAIN_THRESHOLD: f64 = 1.1;

/// Level name reserved for absent categorical values.
pub const MISSING_LEVEL: &str = "missing";

/// Hiring channels every fixture and report knows about.
pub const STANDARD_CHANNELS: [&str; 5] = [
    "public_agency",
    "private_agency",
    "advertisement",
    "referral",
    "other",
];

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(String);

impl ChannelId {
    pub fn new(name: impl Into<String>) -> Self {
        ChannelId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for ChannelId {
    fn from(s: &str) -> Self {
        ChannelId::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AttributeKind {
    Categorical { levels: Vec<String> },
    Numeric { unit: String },
}

impl AttributeKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, AttributeKind::Numeric { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub kind: AttributeKind,
}

impl FieldDef {
    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        FieldDef {
            name: name.to_string(),
            kind: AttributeKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn numeric(name: &str, unit: &str) -> Self {
        FieldDef {
            name: name.to_string(),
            kind: AttributeKind::Numeric {
                unit: unit.to_string(),
            },
        }
    }
}

/// Ordered list of attribute fields. Encoding is a pure function of the
/// schema, so two tables sharing a schema encode into compatible matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    fields: Vec<FieldDef>,
}

impl AttributeSchema {
    pub fn new(fields: Vec<FieldDef>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for f in &fields {
            if !seen.insert(f.name.clone()) {
                return Err(Error::Schema(format!("duplicate field name {:?}", f.name)));
            }
            if let AttributeKind::Categorical { levels } = &f.kind {
                if levels.is_empty() {
                    return Err(Error::Schema(format!("field {:?} has no levels", f.name)));
                }
                let mut lv = std::collections::HashSet::new();
                for l in levels {
                    if !lv.insert(l) {
                        return Err(Error::Schema(format!(
                            "field {:?} repeats level {:?}",
                            f.name, l
                        )));
                    }
                }
            }
        }
        Ok(AttributeSchema { fields })
    }

    /// The survey's item list: age plus the pre/post-change company
    /// descriptors. Each categorical field carries a `missing` level.
    pub fn canonical() -> Self {
        let locations = [
            "hokkaido", "tohoku", "kanto", "chubu", "kinki", "chugoku", "shikoku", "kyushu",
            MISSING_LEVEL,
        ];
        let industries = [
            "construction",
            "manufacturing",
            "ict",
            "transport",
            "wholesale_retail",
            "finance",
            "real_estate",
            "services",
            "medical_welfare",
            "other",
            MISSING_LEVEL,
        ];
        let sizes = [
            "s1_4", "s5_29", "s30_99", "s100_299", "s300_999", "s1000_plus", MISSING_LEVEL,
        ];
        AttributeSchema::new(vec![
            FieldDef::numeric("age", "years"),
            FieldDef::categorical("gender", &["male", "female", MISSING_LEVEL]),
            FieldDef::categorical(
                "education",
                &[
                    "junior_high",
                    "high_school",
                    "vocational",
                    "junior_college",
                    "university",
                    "graduate",
                    MISSING_LEVEL,
                ],
            ),
            FieldDef::categorical("loc_after", &locations),
            FieldDef::categorical("ind_after", &industries),
            FieldDef::categorical("size_after", &sizes),
            FieldDef::categorical("loc_before", &locations),
            FieldDef::categorical("ind_before", &industries),
            FieldDef::categorical("size_before", &sizes),
        ])
        .expect("canonical schema is well formed")
    }

    pub fn fields(&self) -> &[FieldDef] {
        &self.fields
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    /// Sub-schema with the named fields, in the order given.
    pub fn project(&self, names: &[&str]) -> Result<AttributeSchema> {
        let mut fields = Vec::with_capacity(names.len());
        for n in names {
            let idx = self
                .field_index(n)
                .ok_or_else(|| Error::Schema(format!("unknown field {n:?}")))?;
            fields.push(self.fields[idx].clone());
        }
        AttributeSchema::new(fields)
    }

    /// Total one-hot width plus numeric column count, before missing flags.
    pub fn encoded_width(&self) -> usize {
        self.fields
            .iter()
            .map(|f| match &f.kind {
                AttributeKind::Categorical { levels } => levels.len(),
                AttributeKind::Numeric { .. } => 1,
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AttributeValue {
    Level(String),
    Number(f64),
    Missing,
}

/// Outcome attached to a sample: the survey only records whether the wage
/// gain cleared the threshold; agency records carry the actual wage ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LabelValue {
    Binary(bool),
    Ratio(f64),
}

impl LabelValue {
    pub fn ratio(r: f64) -> Result<Self> {
        if r > 0.0 && r.is_finite() {
            Ok(LabelValue::Ratio(r))
        } else {
            Err(Error::InvalidArgument(format!("wage ratio must be positive, got {r}")))
        }
    }

    /// Binary view: a ratio maps to 1 exactly when it is strictly above
    /// [`WAGE_GAIN_THRESHOLD`].
    pub fn binary(&self) -> bool {
        match self {
            LabelValue::Binary(b) => *b,
            LabelValue::Ratio(r) => *r > WAGE_GAIN_THRESHOLD,
        }
    }

    pub fn ratio_value(&self) -> Option<f64> {
        match self {
            LabelValue::Ratio(r) => Some(*r),
            LabelValue::Binary(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableSource {
    Survey,
    Agency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub attributes: Vec<AttributeValue>,
    pub channel: ChannelId,
    pub survey_weight: f64,
    pub label: Option<LabelValue>,
    /// Raw pre/post wages when the source carries them; kept so a parsed
    /// agency file re-serializes to the same cells.
    pub wages: Option<(f64, f64)>,
    /// Filter columns (employment type after/before); not model features.
    pub employment: Option<(String, String)>,
}

impl SampleRow {
    pub fn new(attributes: Vec<AttributeValue>, channel: ChannelId, weight: f64) -> Self {
        SampleRow {
            attributes,
            channel,
            survey_weight: weight,
            label: None,
            wages: None,
            employment: None,
        }
    }
}

/// One period's worth of samples under a fixed schema. Immutable after
/// construction; operations return new tables.
#[derive(Clone, Debug)]
pub struct SampleTable {
    schema: Arc<AttributeSchema>,
    period: HalfYearPeriod,
    source: TableSource,
    rows: Vec<SampleRow>,
}

impl SampleTable {
    pub fn new(
        schema: Arc<AttributeSchema>,
        period: HalfYearPeriod,
        source: TableSource,
        rows: Vec<SampleRow>,
    ) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.attributes.len() != schema.fields().len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} attributes, schema has {} fields",
                    row.attributes.len(),
                    schema.fields().len()
                )));
            }
            if !(row.survey_weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has negative or non-finite weight {}",
                    row.survey_weight
                )));
            }
        }
        Ok(SampleTable {
            schema,
            period,
            source,
            rows,
        })
    }

    pub fn schema(&self) -> &Arc<AttributeSchema> {
        &self.schema
    }

    pub fn period(&self) -> HalfYearPeriod {
        self.period
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    pub fn rows(&self) -> &[SampleRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.rows.iter().map(|r| r.survey_weight).sum()
    }

    /// Rows per channel, in first-seen order.
    pub fn channel_counts(&self) -> Vec<(ChannelId, f64)> {
        let mut order: Vec<ChannelId> = Vec::new();
        let mut totals: std::collections::HashMap<ChannelId, f64> = Default::default();
        for r in &self.rows {
            if !totals.contains_key(&r.channel) {
                order.push(r.channel.clone());
            }
            *totals.entry(r.channel.clone()).or_insert(0.0) += r.survey_weight;
        }
        order
            .into_iter()
            .map(|c| {
                let t = totals[&c];
                (c, t)
            })
            .collect()
    }

    /// Unweighted share of positive binary labels, in percent. Rows without
    /// labels are skipped.
    pub fn binary_rate_pct(&self) -> Option<f64> {
        let labelled: Vec<bool> = self.rows.iter().filter_map(|r| r.label.as_ref().map(|l| l.binary())).collect();
        if labelled.is_empty() {
            return None;
        }
        Some(100.0 * labelled.iter().filter(|b| **b).count() as f64 / labelled.len() as f64)
    }

    /// Survey-weighted share of positive binary labels, in percent.
    pub fn weighted_binary_rate_pct(&self) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for r in &self.rows {
            if let Some(l) = &r.label {
                den += r.survey_weight;
                if l.binary() {
                    num += r.survey_weight;
                }
            }
        }
        if den > 0.0 {
            Some(100.0 * num / den)
        } else {
            None
        }
    }

    /// New table restricted to the named attribute fields.
    pub fn project(&self, names: &[&str]) -> Result<SampleTable> {
        let schema = Arc::new(self.schema.project(names)?);
        let indices: Vec<usize> = names
            .iter()
            .map(|n| self.schema.field_index(n).expect("checked by project"))
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| SampleRow {
                attributes: indices.iter().map(|&i| r.attributes[i].clone()).collect(),
                ..r.clone()
            })
            .collect();
        SampleTable::new(schema, self.period, self.source, rows)
    }

    /// New table with all labels removed (attributes-only view).
    pub fn without_labels(&self) -> SampleTable {
        let rows = self
            .rows
            .iter()
            .map(|r| SampleRow {
                label: None,
                wages: None,
                ..r.clone()
            })
            .collect();
        SampleTable {
            schema: Arc::clone(&self.schema),
            period: self.period,
            source: self.source,
            rows,
        }
    }

    pub fn with_period(&self, period: HalfYearPeriod) -> SampleTable {
        SampleTable {
            schema: Arc::clone(&self.schema),
            period,
            source: self.source,
            rows: self.rows.clone(),
        }
    }
}

/// Expands each row into `round_lr(weight * scale)` unit-weight copies, where
/// `round_lr` is largest-remainder apportionment over the whole table: row
/// counts are floored, then the remaining copies (up to the rounded total)
/// go to the largest fractional remainders, earliest row first on ties.
pub fn replicate_by_weight(table: &SampleTable, scale: f64) -> Result<SampleTable> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "replication scale must be positive and finite, got {scale}"
        )));
    }
    for (i, r) in table.rows().iter().enumerate() {
        if !r.survey_weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "row {i} has non-finite weight"
            )));
        }
    }
    let targets: Vec<f64> = table.rows().iter().map(|r| r.survey_weight * scale).collect();
    let total_target: f64 = targets.iter().sum();
    let total = total_target.round() as usize;
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut extra = total.saturating_sub(assigned);
    if extra > 0 {
        let mut by_remainder: Vec<(usize, f64)> = targets
            .iter()
            .enumerate()
            .map(|(i, t)| (i, t - t.floor()))
            .collect();
        by_remainder.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (idx, _) in by_remainder {
            if extra == 0 {
                break;
            }
            counts[idx] += 1;
            extra -= 1;
        }
    }
    let mut rows = Vec::with_capacity(total);
    for (row, count) in table.rows().iter().zip(&counts) {
        for _ in 0..*count {
            rows.push(SampleRow {
                survey_weight: 1.0,
                ..row.clone()
            });
        }
    }
    SampleTable::new(
        Arc::clone(table.schema()),
        table.period(),
        table.source(),
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::period::Half;
    use proptest::prelude::*;

    fn toy_schema() -> Arc<AttributeSchema> {
        Arc::new(
            AttributeSchema::new(vec![
                FieldDef::categorical("color", &["red", "green", "blue"]),
                FieldDef::numeric("size", "cm"),
            ])
            .unwrap(),
        )
    }

    fn toy_table(weights: &[f64]) -> SampleTable {
        let schema = toy_schema();
        let rows = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let mut r = SampleRow::new(
                    vec![
                        AttributeValue::Level("red".into()),
                        AttributeValue::Number(i as f64),
                    ],
                    ChannelId::new("other"),
                    w,
                );
                r.label = Some(LabelValue::Binary(i % 2 == 0));
                r
            })
            .collect();
        SampleTable::new(
            schema,
            HalfYearPeriod::new(2017, Half::H1),
            TableSource::Survey,
            rows,
        )
        .unwrap()
    }

    #[test]
    fn schema_rejects_duplicates() {
        let bad = AttributeSchema::new(vec![
            FieldDef::numeric("age", "years"),
            FieldDef::numeric("age", "years"),
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn replicate_unit_weights_is_identity() {
        let t = toy_table(&[1.0, 1.0, 1.0]);
        let out = replicate_by_weight(&t, 1.0).unwrap();
        assert_eq!(out.len(), 3);
        for (a, b) in out.rows().iter().zip(t.rows()) {
            assert_eq!(a.attributes, b.attributes);
            assert_eq!(a.survey_weight, 1.0);
        }
    }

    #[test]
    fn replicate_integer_weights() {
        let t = toy_table(&[2.0, 1.0]);
        let out = replicate_by_weight(&t, 1.0).unwrap();
        assert_eq!(out.len(), 3);
        // first row duplicated
        assert_eq!(out.rows()[0].attributes, t.rows()[0].attributes);
        assert_eq!(out.rows()[1].attributes, t.rows()[0].attributes);
        assert_eq!(out.rows()[2].attributes, t.rows()[1].attributes);
    }

    #[test]
    fn replicate_largest_remainder_tie_breaks_by_index() {
        // targets 1.5, 1.5, 1.0 -> total round(4.0) = 4, floors 1,1,1,
        // one leftover copy goes to the earliest tied remainder (row 0).
        let t = toy_table(&[1.5, 1.5, 1.0]);
        let out = replicate_by_weight(&t, 1.0).unwrap();
        assert_eq!(out.len(), 4);
        let per_row: Vec<usize> = (0..3)
            .map(|i| {
                out.rows()
                    .iter()
                    .filter(|r| r.attributes == t.rows()[i].attributes)
                    .count()
            })
            .collect();
        assert_eq!(per_row, vec![2, 1, 1]);
    }

    #[test]
    fn replicate_rejects_bad_scale() {
        let t = toy_table(&[1.0]);
        assert!(replicate_by_weight(&t, 0.0).is_err());
        assert!(replicate_by_weight(&t, -2.0).is_err());
    }

    #[test]
    fn binary_view_of_ratio_uses_strict_threshold() {
        assert!(!LabelValue::Ratio(1.1).binary());
        assert!(LabelValue::Ratio(1.1000001).binary());
        assert!(!LabelValue::Ratio(0.9).binary());
    }

    #[test]
    fn project_keeps_field_order_given() {
        let t = toy_table(&[1.0]);
        let p = t.project(&["size", "color"]).unwrap();
        assert_eq!(p.schema().fields()[0].name, "size");
        assert_eq!(
            p.rows()[0].attributes[0],
            AttributeValue::Number(0.0)
        );
        assert!(t.project(&["nope"]).is_err());
    }

    proptest! {
        #[test]
        fn replicate_preserves_total_weight_up_to_rounding(
            weights in proptest::collection::vec(0.0f64..20.0, 1..40),
            scale in 0.1f64..5.0,
        ) {
            let t = toy_table(&weights);
            let out = replicate_by_weight(&t, scale).unwrap();
            let target: f64 = weights.iter().map(|w| w * scale).sum();
            prop_assert!((out.len() as f64 - target).abs() <= 0.5 + 1e-9);
        }

        #[test]
        fn binary_equals_ratio_above_threshold(r in 0.5f64..2.0) {
            let l = LabelValue::Ratio(r);
            prop_assert_eq!(l.binary(), r > WAGE_GAIN_THRESHOLD);
        }
    }
}
