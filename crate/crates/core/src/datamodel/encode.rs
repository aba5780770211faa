//! Feature encoding: one-hot per categorical level, z-scored numerics.
//!
//! Standardization parameters are fitted once per run and reused across
//! tables so that survey and agency matrices live in the same space.

use super::{AttributeKind, AttributeSchema, AttributeValue, SampleTable, MISSING_LEVEL};
use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ColumnRole {
    OneHot { field: String, level: String },
    Numeric { field: String },
    /// 1.0 where the numeric field was absent and mean-imputed.
    MissingFlag { field: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct NumericParams {
    field: String,
    mean: f64,
    sd: f64,
    /// Whether the fitting table had missing values, which materializes an
    /// indicator column after the z-scored one.
    with_flag: bool,
}

/// Per-column standardization state, fitted from one table and reusable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    fingerprint: String,
    numeric: Vec<NumericParams>,
}

impl Standardization {
    fn fit(table: &SampleTable) -> Self {
        let schema = table.schema();
        let mut numeric = Vec::new();
        for (fi, field) in schema.fields().iter().enumerate() {
            if !field.kind.is_numeric() {
                continue;
            }
            let mut values = Vec::new();
            let mut missing = false;
            for row in table.rows() {
                match &row.attributes[fi] {
                    AttributeValue::Number(v) => values.push(*v),
                    _ => missing = true,
                }
            }
            let mean = if values.is_empty() {
                0.0
            } else {
                values.iter().sum::<f64>() / values.len() as f64
            };
            let var = if values.is_empty() {
                0.0
            } else {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64
            };
            let sd = var.sqrt();
            numeric.push(NumericParams {
                field: field.name.clone(),
                mean,
                // constant columns fall back to unit scale
                sd: if sd > 0.0 { sd } else { 1.0 },
                with_flag: missing,
            });
        }
        Standardization {
            fingerprint: fingerprint(schema),
            numeric,
        }
    }

    fn params_for(&self, field: &str) -> Option<&NumericParams> {
        self.numeric.iter().find(|p| p.field == field)
    }
}

fn fingerprint(schema: &AttributeSchema) -> String {
    schema
        .fields()
        .iter()
        .map(|f| f.name.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// Encoded design matrix: rows are samples, columns map back to the schema
/// through `columns`.
#[derive(Clone, Debug)]
pub struct EncodedMatrix {
    pub values: Array2<f64>,
    pub columns: Vec<ColumnRole>,
}

impl EncodedMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .map(|c| match c {
                ColumnRole::OneHot { field, level } => format!("{field}={level}"),
                ColumnRole::Numeric { field } => field.clone(),
                ColumnRole::MissingFlag { field } => format!("{field}_missing"),
            })
            .collect()
    }
}

/// Encodes a table. With `params` omitted, standardization is fitted from
/// the table itself; either way the parameters used are returned so later
/// tables can share them.
pub fn encode(
    table: &SampleTable,
    params: Option<&Standardization>,
) -> Result<(EncodedMatrix, Standardization)> {
    let schema = table.schema();
    let std = match params {
        Some(p) => {
            if p.fingerprint != fingerprint(schema) {
                return Err(Error::Schema(format!(
                    "standardization was fitted for fields [{}], table has [{}]",
                    p.fingerprint,
                    fingerprint(schema)
                )));
            }
            p.clone()
        }
        None => Standardization::fit(table),
    };

    let mut columns = Vec::new();
    for field in schema.fields() {
        match &field.kind {
            AttributeKind::Categorical { levels } => {
                for level in levels {
                    columns.push(ColumnRole::OneHot {
                        field: field.name.clone(),
                        level: level.clone(),
                    });
                }
            }
            AttributeKind::Numeric { .. } => {
                columns.push(ColumnRole::Numeric {
                    field: field.name.clone(),
                });
                let p = std.params_for(&field.name).expect("fitted above");
                if p.with_flag {
                    columns.push(ColumnRole::MissingFlag {
                        field: field.name.clone(),
                    });
                }
            }
        }
    }

    let ncols = columns.len();
    let mut values = Array2::<f64>::zeros((table.len(), ncols));
    for (ri, row) in table.rows().iter().enumerate() {
        let mut ci = 0;
        for (fi, field) in schema.fields().iter().enumerate() {
            match &field.kind {
                AttributeKind::Categorical { levels } => {
                    let hit = match &row.attributes[fi] {
                        AttributeValue::Level(l) => levels.iter().position(|x| x == l),
                        AttributeValue::Missing => {
                            levels.iter().position(|x| x == MISSING_LEVEL)
                        }
                        AttributeValue::Number(v) => {
                            return Err(Error::Schema(format!(
                                "row {ri}: field {:?} is categorical but holds number {v}",
                                field.name
                            )));
                        }
                    };
                    // unknown levels (vocabulary drift) encode as all zeros
                    if let Some(li) = hit {
                        values[[ri, ci + li]] = 1.0;
                    }
                    ci += levels.len();
                }
                AttributeKind::Numeric { .. } => {
                    let p = std.params_for(&field.name).expect("fitted above");
                    let (v, miss) = match &row.attributes[fi] {
                        AttributeValue::Number(v) => (*v, false),
                        AttributeValue::Missing => (p.mean, true),
                        AttributeValue::Level(l) => {
                            return Err(Error::Schema(format!(
                                "row {ri}: field {:?} is numeric but holds level {l:?}",
                                field.name
                            )));
                        }
                    };
                    values[[ri, ci]] = (v - p.mean) / p.sd;
                    ci += 1;
                    if p.with_flag {
                        values[[ri, ci]] = if miss { 1.0 } else { 0.0 };
                        ci += 1;
                    }
                }
            }
        }
        debug_assert_eq!(ci, ncols);
    }

    Ok((EncodedMatrix { values, columns }, std))
}
