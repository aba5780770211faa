//! CSV ingestion and serialization for sample tables.
//!
//! Files are UTF-8, comma-separated, with a header row. Survey files carry a
//! `weight` column and a 0/1 `wage_up_10pct` label; agency files carry
//! `wage_before`/`wage_after` instead and no weight column. Both may carry
//! the `emp_type_after`/`emp_type_before` filter columns; rows whose
//! post-change employment type is `part_time` are dropped at load.

use super::{
    AttributeKind, AttributeSchema, AttributeValue, ChannelId, LabelValue, SampleRow,
    SampleTable, TableSource,
};
use crate::error::{Error, Result};
use crate::period::HalfYearPeriod;
use std::path::Path;
use std::sync::Arc;

const EMPLOYMENT_COLUMNS: [&str; 2] = ["emp_type_after", "emp_type_before"];
const PART_TIME: &str = "part_time";

fn required_columns(source: TableSource, schema: &AttributeSchema) -> Vec<String> {
    let mut cols = vec!["period".to_string(), "channel".to_string()];
    if source == TableSource::Survey {
        cols.push("weight".to_string());
    }
    cols.extend(schema.fields().iter().map(|f| f.name.clone()));
    match source {
        TableSource::Survey => cols.push("wage_up_10pct".to_string()),
        TableSource::Agency => {
            cols.push("wage_before".to_string());
            cols.push("wage_after".to_string());
        }
    }
    cols
}

pub fn load_table(
    path: impl AsRef<Path>,
    source: TableSource,
    schema: Arc<AttributeSchema>,
) -> Result<SampleTable> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(&pstr, std::io::Error::other(e.to_string())),
            _ => Error::Malformed {
                path: pstr.clone(),
                line: 1,
                message: e.to_string(),
            },
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Malformed {
            path: pstr.clone(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    let mut required = required_columns(source, &schema);
    let has_employment = EMPLOYMENT_COLUMNS.iter().all(|c| headers.iter().any(|h| h == c));
    if has_employment {
        // keep contract order: filter columns sit between attributes and labels
        let at = required.len()
            - match source {
                TableSource::Survey => 1,
                TableSource::Agency => 2,
            };
        required.insert(at, EMPLOYMENT_COLUMNS[0].to_string());
        required.insert(at + 1, EMPLOYMENT_COLUMNS[1].to_string());
    }
    for col in &required {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Malformed {
                path: pstr,
                line: 1,
                message: format!("missing mandatory column {col:?}"),
            });
        }
    }
    for h in &headers {
        if !required.iter().any(|c| c == h) {
            return Err(Error::Malformed {
                path: pstr,
                line: 1,
                message: format!("unexpected column {h:?}"),
            });
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked");

    let mut rows = Vec::new();
    let mut period: Option<HalfYearPeriod> = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed {
            path: pstr.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Malformed {
            path: pstr.clone(),
            line,
            message,
        };
        let get = |name: &str| record.get(col(name)).unwrap_or("").trim();

        let row_period: HalfYearPeriod = get("period")
            .parse()
            .map_err(|e: Error| bad(e.to_string()))?;
        match period {
            None => period = Some(row_period),
            Some(p) if p == row_period => {}
            Some(p) => {
                return Err(bad(format!(
                    "mixed periods in one file: {p} and {row_period}"
                )))
            }
        }

        let channel = get("channel");
        if channel.is_empty() {
            return Err(bad("empty channel".into()));
        }

        let weight = match source {
            TableSource::Survey => {
                let raw = get("weight");
                let w: f64 = raw
                    .parse()
                    .map_err(|_| bad(format!("bad weight {raw:?}")))?;
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(bad(format!("negative weight {raw}")));
                }
                w
            }
            TableSource::Agency => 1.0,
        };

        let mut attributes = Vec::with_capacity(schema.fields().len());
        for field in schema.fields() {
            let raw = get(&field.name);
            let value = match &field.kind {
                AttributeKind::Numeric { .. } => {
                    if raw.is_empty() {
                        AttributeValue::Missing
                    } else {
                        AttributeValue::Number(raw.parse().map_err(|_| {
                            bad(format!("bad numeric value {raw:?} for {:?}", field.name))
                        })?)
                    }
                }
                AttributeKind::Categorical { levels } => {
                    if raw.is_empty() {
                        AttributeValue::Missing
                    } else if levels.iter().any(|l| l == raw) {
                        AttributeValue::Level(raw.to_string())
                    } else {
                        return Err(bad(format!(
                            "unknown level {raw:?} for field {:?}",
                            field.name
                        )));
                    }
                }
            };
            attributes.push(value);
        }

        let employment = if has_employment {
            Some((
                get("emp_type_after").to_string(),
                get("emp_type_before").to_string(),
            ))
        } else {
            None
        };
        if let Some((after, _)) = &employment {
            if after == PART_TIME {
                continue; // full-time statistics only
            }
        }

        let (label, wages) = match source {
            TableSource::Survey => {
                let raw = get("wage_up_10pct");
                let label = match raw {
                    "" => None,
                    "0" => Some(LabelValue::Binary(false)),
                    "1" => Some(LabelValue::Binary(true)),
                    _ => return Err(bad(format!("bad wage_up_10pct value {raw:?}"))),
                };
                (label, None)
            }
            TableSource::Agency => {
                let before_raw = get("wage_before");
                let after_raw = get("wage_after");
                if before_raw.is_empty() && after_raw.is_empty() {
                    (None, None)
                } else {
                    let before: f64 = before_raw
                        .parse()
                        .map_err(|_| bad(format!("bad wage_before {before_raw:?}")))?;
                    let after: f64 = after_raw
                        .parse()
                        .map_err(|_| bad(format!("bad wage_after {after_raw:?}")))?;
                    if !(before > 0.0) || !(after > 0.0) {
                        return Err(bad("wages must be positive".into()));
                    }
                    (
                        Some(LabelValue::Ratio(after / before)),
                        Some((before, after)),
                    )
                }
            }
        };

        rows.push(SampleRow {
            attributes,
            channel: ChannelId::new(channel),
            survey_weight: weight,
            label,
            wages,
            employment,
        });
    }

    let period = period.ok_or_else(|| Error::Malformed {
        path: pstr,
        line: 1,
        message: "file has no data rows".into(),
    })?;
    SampleTable::new(schema, period, source, rows)
}

fn fmt_value(v: &AttributeValue) -> String {
    match v {
        AttributeValue::Level(l) => l.clone(),
        AttributeValue::Number(n) => format!("{n}"),
        AttributeValue::Missing => String::new(),
    }
}

pub fn write_table(table: &SampleTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::io(&pstr, std::io::Error::other(e.to_string())))?;
    let has_employment = table.rows().iter().any(|r| r.employment.is_some());
    let source = table.source();

    let mut header = vec!["period".to_string(), "channel".to_string()];
    if source == TableSource::Survey {
        header.push("weight".into());
    }
    header.extend(table.schema().fields().iter().map(|f| f.name.clone()));
    if has_employment {
        header.push("emp_type_after".into());
        header.push("emp_type_before".into());
    }
    match source {
        TableSource::Survey => header.push("wage_up_10pct".into()),
        TableSource::Agency => {
            header.push("wage_before".into());
            header.push("wage_after".into());
        }
    }
    let io_err = |e: csv::Error| Error::io(&pstr, std::io::Error::other(e.to_string()));
    writer.write_record(&header).map_err(io_err)?;

    for row in table.rows() {
        let mut rec: Vec<String> = vec![table.period().to_string(), row.channel.to_string()];
        if source == TableSource::Survey {
            rec.push(format!("{}", row.survey_weight));
        }
        rec.extend(row.attributes.iter().map(fmt_value));
        if has_employment {
            let (a, b) = row.employment.clone().unwrap_or_default();
            rec.push(a);
            rec.push(b);
        }
        match source {
            TableSource::Survey => rec.push(match &row.label {
                Some(l) => {
                    if l.binary() {
                        "1".into()
                    } else {
                        "0".into()
                    }
                }
                None => String::new(),
            }),
            TableSource::Agency => match (&row.wages, &row.label) {
                (Some((before, after)), _) => {
                    rec.push(format!("{before}"));
                    rec.push(format!("{after}"));
                }
                (None, Some(LabelValue::Ratio(r))) => {
                    rec.push("1000".into());
                    rec.push(format!("{}", 1000.0 * r));
                }
                _ => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            },
        }
        writer.write_record(&rec).map_err(io_err)?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(&pstr, e))?;
    Ok(())
}
