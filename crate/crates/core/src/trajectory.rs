//! Generation-0-normalized trajectories and log-linear decay rates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Depth, RatePanel};
use crate::io::{read_csv, write_csv};

/// How zero rates are handled before taking logs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    /// Replace a zero raw count by 0.5 before normalizing.
    #[default]
    FloorHalfCount,
    /// Leave zero points out of the regression.
    DropZeros,
}

impl std::str::FromStr for ZeroPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "floor" | "floor_half_count" => Ok(ZeroPolicy::FloorHalfCount),
            "drop" | "drop_zeros" => Ok(ZeroPolicy::DropZeros),
            _ => Err(Error::InvalidArgument(format!("unknown zero policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySeries {
    pub feature: String,
    pub depth: Depth,
    /// Time index of each point.
    pub times: Vec<f64>,
    /// Normalized rates φ_t, with φ_0 = 1 when usable.
    pub values: Vec<f64>,
    /// Normalized rates after the half-count floor; `None` when the series
    /// was not built from counts.
    pub floored: Option<Vec<f64>>,
    pub usable: bool,
}

impl TrajectorySeries {
    /// A series from already-normalized values at the given times.
    pub fn from_values(feature: impl Into<String>, depth: Depth, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let feature = feature.into();
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{feature}: {} times for {} values",
                times.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!("{feature}: trajectory values must be finite and >= 0")));
        }
        let usable = values.first().is_some_and(|v| *v > 0.0);
        Ok(TrajectorySeries { feature, depth, times, values, floored: None, usable })
    }

    /// Normalize one feature row of a rate panel. Generation indices are
    /// used as times.
    pub fn from_panel(panel: &RatePanel, feature: usize) -> Self {
        let (name, depth) = panel.features[feature].clone();
        let counts = &panel.counts[feature];
        let usable = counts[0] > 0;
        let n = counts.len();
        let times = (0..n).map(|t| t as f64).collect();
        if !usable {
            return TrajectorySeries { feature: name, depth, times, values: vec![0.0; n], floored: None, usable };
        }
        // (c_t / n_t) / (c_0 / n_0) computed with a single rounding
        let ratio = |num: f64, t: usize| num * panel.tokens[0] as f64 / (counts[0] as f64 * panel.tokens[t] as f64);
        let exact = |t: usize| {
            let num = counts[t] as u128 * panel.tokens[0] as u128;
            let den = counts[0] as u128 * panel.tokens[t] as u128;
            num as f64 / den as f64
        };
        let values = (0..n).map(exact).collect();
        let floored = (0..n).map(|t| if counts[t] == 0 { ratio(0.5, t) } else { exact(t) }).collect();
        TrajectorySeries { feature: name, depth, times, values, floored: Some(floored), usable }
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("series is nonempty")
    }
}

/// OLS slope of ln φ_t on t.
pub fn decay_rate(series: &TrajectorySeries, policy: ZeroPolicy) -> Result<f64> {
    if !series.usable {
        return Err(Error::Undefined(format!("{}: generation-0 rate is zero", series.feature)));
    }
    let source = match policy {
        ZeroPolicy::FloorHalfCount => series.floored.as_ref().unwrap_or(&series.values),
        ZeroPolicy::DropZeros => &series.values,
    };
    let mut pts = Vec::with_capacity(source.len());
    for (&t, &v) in series.times.iter().zip(source) {
        if v > 0.0 {
            pts.push((t, v.ln()));
        } else if policy == ZeroPolicy::FloorHalfCount {
            return Err(Error::Undefined(format!("{}: zero value without counts to floor", series.feature)));
        }
    }
    ols_slope(&pts)
        .ok_or_else(|| Error::InsufficientData(format!("{}: fewer than 2 distinct time points", series.feature)))
}

fn ols_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (pts.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

/// Total relative change from the first to the last point, in percent.
pub fn percent_change(series: &TrajectorySeries) -> Result<f64> {
    if !series.usable {
        return Err(Error::Undefined(format!("{}: generation-0 rate is zero", series.feature)));
    }
    Ok(100.0 * (series.last() - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub feature: String,
    pub depth: Depth,
    pub lambda: f64,
    pub delta_total_pct: f64,
    /// Generation-0 rate per 1000 tokens.
    pub baseline_freq: f64,
}

/// Decay estimates for every usable feature of a panel, plus the names of
/// the unusable ones.
pub fn decay_estimates(panel: &RatePanel, policy: ZeroPolicy) -> Result<(Vec<DecayEstimate>, Vec<String>)> {
    let mut out = Vec::new();
    let mut unusable = Vec::new();
    for f in 0..panel.features.len() {
        let s = TrajectorySeries::from_panel(panel, f);
        if !s.usable {
            unusable.push(s.feature);
            continue;
        }
        out.push(DecayEstimate {
            lambda: decay_rate(&s, policy)?,
            delta_total_pct: percent_change(&s)?,
            baseline_freq: panel.baseline(f),
            feature: s.feature,
            depth: s.depth,
        });
    }
    Ok((out, unusable))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupStatistic {
    DeltaPct,
    Lambda,
}

/// Arithmetic mean of the statistic within each depth stratum.
pub fn group_means(estimates: &[DecayEstimate], statistic: GroupStatistic) -> BTreeMap<u8, f64> {
    let pairs = estimates.iter().map(|e| {
        let v = match statistic {
            GroupStatistic::DeltaPct => e.delta_total_pct,
            GroupStatistic::Lambda => e.lambda,
        };
        (e.depth.get(), v)
    });
    means_by_depth(pairs)
}

pub fn means_by_depth(pairs: impl IntoIterator<Item = (u8, f64)>) -> BTreeMap<u8, f64> {
    let mut acc: BTreeMap<u8, (f64, usize)> = BTreeMap::new();
    for (d, v) in pairs {
        let e = acc.entry(d).or_default();
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(d, (s, n))| (d, s / n as f64)).collect()
}

/// One line of `decay.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub model_id: String,
    pub feature: String,
    pub depth: u8,
    pub lambda: f64,
    pub delta_total_pct: f64,
    pub baseline_freq: f64,
}

impl DecayRow {
    pub fn new(model_id: &str, e: &DecayEstimate) -> Self {
        DecayRow {
            model_id: model_id.to_string(),
            feature: e.feature.clone(),
            depth: e.depth.get(),
            lambda: e.lambda,
            delta_total_pct: e.delta_total_pct,
            baseline_freq: e.baseline_freq,
        }
    }

    pub fn estimate(&self) -> Result<DecayEstimate> {
        Ok(DecayEstimate {
            feature: self.feature.clone(),
            depth: Depth::new(self.depth)?,
            lambda: self.lambda,
            delta_total_pct: self.delta_total_pct,
            baseline_freq: self.baseline_freq,
        })
    }
}

pub fn write_decay(path: &Path, rows: &[DecayRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_decay(path: &Path) -> Result<Vec<DecayRow>> {
    read_csv(path)
}

/// One line of `trajectories.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub model_id: String,
    pub feature: String,
    pub depth: u8,
    pub generation: u32,
    pub value: f64,
}

/// Rows for every usable feature of `series`.
pub fn trajectory_rows(model_id: &str, series: &[TrajectorySeries]) -> Vec<TrajectoryRow> {
    series
        .iter()
        .filter(|s| s.usable)
        .flat_map(|s| {
            s.values.iter().enumerate().map(move |(g, &v)| TrajectoryRow {
                model_id: model_id.to_string(),
                feature: s.feature.clone(),
                depth: s.depth.get(),
                generation: g as u32,
                value: v,
            })
        })
        .collect()
}

pub fn write_trajectories(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    write_csv(path, rows)
}
