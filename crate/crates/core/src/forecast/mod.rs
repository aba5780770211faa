//! Target-period reconstruction: per-channel count forecasting, attribute
//! resampling from the year-ago table, and the extrapolation benchmark.

mod sarima;

pub use sarima::{
    fit_sarima, fit_sarima_with, fit_single, forecast_count, CandidateFit, SarimaGridConfig,
    SarimaModel, SarimaOrder,
};

use crate::datamodel::{ChannelId, SampleRow, SampleTable, STANDARD_CHANNELS};
use crate::error::{Error, Result};
use crate::period::HalfYearPeriod;
use crate::stage_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// Per-channel count history; periods are contiguous half-years.
#[derive(Clone, Debug)]
pub struct ChannelCountSeries {
    channel: ChannelId,
    observations: Vec<(HalfYearPeriod, f64)>,
}

impl ChannelCountSeries {
    pub fn new(channel: ChannelId, observations: Vec<(HalfYearPeriod, f64)>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument("empty count series".into()));
        }
        for window in observations.windows(2) {
            if window[1].0.distance(&window[0].0) != 1 {
                return Err(Error::InvalidArgument(format!(
                    "count series for {} has a gap between {} and {}",
                    channel, window[0].0, window[1].0
                )));
            }
        }
        for (p, v) in &observations {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "count for {channel} at {p} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(ChannelCountSeries {
            channel,
            observations,
        })
    }

    pub fn channel(&self) -> &ChannelId {
        &self.channel
    }

    pub fn observations(&self) -> &[(HalfYearPeriod, f64)] {
        &self.observations
    }

    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|(_, v)| *v).collect()
    }

    pub fn last_period(&self) -> HalfYearPeriod {
        self.observations.last().expect("non-empty").0
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Monthly auxiliary series (decisions to change jobs via public placement).
#[derive(Clone, Debug)]
pub struct AuxiliarySeries {
    observations: Vec<(i32, u32, f64)>,
}

impl AuxiliarySeries {
    pub fn new(observations: Vec<(i32, u32, f64)>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument("empty auxiliary series".into()));
        }
        for w in observations.windows(2) {
            let (y0, m0, _) = w[0];
            let (y1, m1, _) = w[1];
            let next = if m0 == 12 { (y0 + 1, 1) } else { (y0, m0 + 1) };
            if (y1, m1) != next {
                return Err(Error::InvalidArgument(format!(
                    "auxiliary months must be contiguous; {y0}-{m0} is followed by {y1}-{m1}"
                )));
            }
        }
        for (y, m, v) in &observations {
            if *m == 0 || *m > 12 {
                return Err(Error::InvalidArgument(format!("bad month {m} in {y}")));
            }
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "auxiliary value at {y}-{m} must be nonnegative"
                )));
            }
        }
        Ok(AuxiliarySeries { observations })
    }

    pub fn value(&self, year: i32, month: u32) -> Option<f64> {
        self.observations
            .iter()
            .find(|(y, m, _)| *y == year && *m == month)
            .map(|(_, _, v)| *v)
    }

    /// Five-month average over the forecast-time window of `period`.
    pub fn window_average(&self, period: HalfYearPeriod) -> Result<f64> {
        let months = period.auxiliary_months();
        let mut sum = 0.0;
        for m in months {
            let v = self.value(period.year(), m).ok_or_else(|| {
                Error::MissingData(format!(
                    "auxiliary series lacks {}-{m:02} needed for {period}",
                    period.year()
                ))
            })?;
            sum += v;
        }
        Ok(sum / months.len() as f64)
    }
}

/// Official (o) and supplementary (s) indicator values per period, percent.
#[derive(Clone, Debug, Default)]
pub struct IndicatorSeries {
    entries: BTreeMap<HalfYearPeriod, (Option<f64>, Option<f64>)>,
}

impl IndicatorSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_official(&mut self, period: HalfYearPeriod, value: f64) -> Result<()> {
        check_pct(value)?;
        self.entries.entry(period).or_default().0 = Some(value);
        Ok(())
    }

    pub fn set_supplementary(&mut self, period: HalfYearPeriod, value: f64) -> Result<()> {
        check_pct(value)?;
        self.entries.entry(period).or_default().1 = Some(value);
        Ok(())
    }

    pub fn official(&self, period: &HalfYearPeriod) -> Option<f64> {
        self.entries.get(period).and_then(|e| e.0)
    }

    pub fn supplementary(&self, period: &HalfYearPeriod) -> Option<f64> {
        self.entries.get(period).and_then(|e| e.1)
    }

    pub fn periods(&self) -> Vec<HalfYearPeriod> {
        self.entries.keys().copied().collect()
    }
}

fn check_pct(value: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&value) {
        return Err(Error::InvalidArgument(format!(
            "indicator values are percentages in [0, 100], got {value}"
        )));
    }
    Ok(())
}

/// Auxiliary-series count rule: scales the two-periods-back count by the
/// ratio of five-month averages.
pub fn aux_count(n_prev2: f64, aux: &AuxiliarySeries, target: HalfYearPeriod) -> Result<f64> {
    if !(n_prev2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "base count must be nonnegative, got {n_prev2}"
        )));
    }
    let n_now = aux.window_average(target)?;
    let n_then = aux.window_average(target.offset(-2))?;
    if n_then <= 0.0 {
        return Err(Error::InvalidArgument(
            "auxiliary average two periods back is zero".into(),
        ));
    }
    Ok(n_prev2 * n_now / n_then)
}

/// Extrapolation benchmark: scales the last published official value by the
/// movement of the supplementary indicator.
pub fn simple_extrapolation(o_prev2: f64, s_now: f64, s_prev2: f64) -> Result<f64> {
    if s_prev2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "supplementary base value must be positive, got {s_prev2}"
        )));
    }
    Ok(o_prev2 * s_now / s_prev2)
}

/// Draws `count` rows per channel with replacement from the source table's
/// rows of that channel. Labels are dropped; the output carries `target` as
/// its period. Channel draws use independent derived streams, so the result
/// does not depend on channel evaluation order.
pub fn resample_attributes(
    source: &SampleTable,
    counts: &[(ChannelId, usize)],
    target: HalfYearPeriod,
    seed: u64,
) -> Result<SampleTable> {
    let mut by_channel: BTreeMap<&ChannelId, Vec<usize>> = BTreeMap::new();
    for (i, row) in source.rows().iter().enumerate() {
        by_channel.entry(&row.channel).or_default().push(i);
    }
    let mut rows: Vec<SampleRow> = Vec::new();
    for (channel, count) in counts {
        if *count == 0 {
            continue;
        }
        let pool = by_channel.get(channel).ok_or_else(|| {
            Error::MissingData(format!(
                "channel {channel} requested but absent from the {} source table",
                source.period()
            ))
        })?;
        let mut rng =
            ChaCha8Rng::seed_from_u64(stage_seed(seed, &format!("resample-{channel}")));
        for _ in 0..*count {
            let idx = pool[rng.random_range(0..pool.len())];
            let mut row = source.rows()[idx].clone();
            row.label = None;
            row.wages = None;
            row.survey_weight = 1.0;
            rows.push(row);
        }
    }
    SampleTable::new(
        Arc::clone(source.schema()),
        target,
        source.source(),
        rows,
    )
}

/// Builds contiguous per-channel count series from consecutive tables.
/// Counts are total survey weight per channel. Channel order follows the
/// standard vocabulary, then any extras in first-seen order.
pub fn counts_from_tables(tables: &[SampleTable]) -> Result<Vec<ChannelCountSeries>> {
    if tables.is_empty() {
        return Err(Error::InvalidArgument("no tables given".into()));
    }
    let mut channels: Vec<ChannelId> = STANDARD_CHANNELS.iter().map(|c| ChannelId::new(*c)).collect();
    for t in tables {
        for (c, _) in t.channel_counts() {
            if !channels.contains(&c) {
                channels.push(c);
            }
        }
    }
    let mut out = Vec::new();
    for channel in channels {
        let mut observations = Vec::with_capacity(tables.len());
        let mut any = false;
        for t in tables {
            let count = t
                .channel_counts()
                .into_iter()
                .find(|(c, _)| *c == channel)
                .map(|(_, n)| n)
                .unwrap_or(0.0);
            if count > 0.0 {
                any = true;
            }
            observations.push((t.period(), count));
        }
        if any {
            out.push(ChannelCountSeries::new(channel, observations)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// file formats

/// Reads a counts CSV with columns channel, period, count.
pub fn read_counts_csv(path: impl AsRef<Path>) -> Result<Vec<ChannelCountSeries>> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(&pstr, std::io::Error::other(e.to_string())))?;
    let mut per_channel: BTreeMap<String, Vec<(HalfYearPeriod, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed {
            path: pstr.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |m: String| Error::Malformed {
            path: pstr.clone(),
            line,
            message: m,
        };
        let channel = record.get(0).unwrap_or("").trim().to_string();
        let period: HalfYearPeriod = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e: Error| bad(e.to_string()))?;
        let count: f64 = record
            .get(2)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| bad("bad count".into()))?;
        per_channel.entry(channel).or_default().push((period, count));
    }
    let mut out = Vec::new();
    for (channel, mut obs) in per_channel {
        obs.sort_by_key(|(p, _)| *p);
        out.push(ChannelCountSeries::new(ChannelId::new(channel), obs)?);
    }
    Ok(out)
}

pub fn write_counts_csv(series: &[ChannelCountSeries], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "channel,period,count")?;
    for s in series {
        for (p, v) in s.observations() {
            writeln!(out, "{},{},{}", s.channel(), p, v)?;
        }
    }
    Ok(())
}

/// Reads the monthly auxiliary CSV with columns year, month, value.
pub fn read_aux_csv(path: impl AsRef<Path>) -> Result<AuxiliarySeries> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(&pstr, std::io::Error::other(e.to_string())))?;
    let mut obs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed {
            path: pstr.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |m: String| Error::Malformed {
            path: pstr.clone(),
            line,
            message: m,
        };
        let year: i32 = record
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| bad("bad year".into()))?;
        let month: u32 = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| bad("bad month".into()))?;
        let value: f64 = record
            .get(2)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| bad("bad value".into()))?;
        obs.push((year, month, value));
    }
    AuxiliarySeries::new(obs)
}

/// One forecast-report row: which method produced the channel's count.
#[derive(Clone, Debug)]
pub struct ForecastReportRow {
    pub channel: ChannelId,
    pub period: HalfYearPeriod,
    pub method: &'static str,
    pub count: f64,
}

pub fn write_forecast_report_csv(
    rows: &[ForecastReportRow],
    mut out: impl Write,
) -> std::io::Result<()> {
    writeln!(out, "channel,period,method,count")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.channel, r.period, r.method, r.count)?;
    }
    Ok(())
}

/// Reads an indicator CSV with columns period, official[, supplementary].
pub fn read_indicator_csv(path: impl AsRef<Path>) -> Result<IndicatorSeries> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(&pstr, std::io::Error::other(e.to_string())))?;
    let has_supplementary = reader
        .headers()
        .map(|h| h.iter().any(|c| c.trim() == "supplementary"))
        .unwrap_or(false);
    let mut series = IndicatorSeries::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed {
            path: pstr.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |m: String| Error::Malformed {
            path: pstr.clone(),
            line,
            message: m,
        };
        let period: HalfYearPeriod = record
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e: Error| bad(e.to_string()))?;
        let official = record.get(1).unwrap_or("").trim();
        if !official.is_empty() {
            let v: f64 = official.parse().map_err(|_| bad("bad official value".into()))?;
            series.set_official(period, v)?;
        }
        if has_supplementary {
            let supp = record.get(2).unwrap_or("").trim();
            if !supp.is_empty() {
                let v: f64 = supp.parse().map_err(|_| bad("bad supplementary value".into()))?;
                series.set_supplementary(period, v)?;
            }
        }
    }
    Ok(series)
}

pub fn write_indicator_csv(series: &IndicatorSeries, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "period,official,supplementary")?;
    for p in series.periods() {
        let o = series.official(&p).map_or(String::new(), |v| format!("{v}"));
        let s = series
            .supplementary(&p)
            .map_or(String::new(), |v| format!("{v}"));
        writeln!(out, "{p},{o},{s}")?;
    }
    Ok(())
}
