//! Benchmark CSV ingestion, chronological splits, standardization and
//! stride-1 windowing, plus synthetic generators.

mod synthetic;

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::preprocessing::STD_EPSILON;

pub use synthetic::{
    DAYS_PER_WEEK,
    gen_drifting_cycles, gen_low_rank, gen_rotating_low_rank, noise_dataset, random_rotation, sine_dataset,
    LowRankSample, SyntheticLowRank,
};

/// A multivariate series as loaded from disk: `values` is `T × C`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub name: String,
    pub timestamps: Vec<String>,
    pub channel_names: Vec<String>,
    pub values: Matrix,
    /// Sampling interval inferred from the first two timestamps, e.g. `1h`.
    pub freq: Option<String>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.values.cols()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.col(c)
    }

    /// Channel-major copy of the values.
    pub fn channels(&self) -> Vec<Vec<f64>> {
        (0..self.n_channels()).map(|c| self.channel(c)).collect()
    }
}

/// Loads an ETT-style CSV: a header row, a timestamp first column and numeric
/// channels after it.
pub fn load_csv(path: &Path) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() < 2 {
        return Err(Error::data(format!(
            "{} needs a timestamp column and at least one channel",
            path.display()
        )));
    }
    let channel_names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut timestamps = Vec::new();
    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Load {
            path: path.to_path_buf(),
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Load {
                path: path.to_path_buf(),
                row,
                column: record.len().min(headers.len()) + 1,
                message: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        timestamps.push(record[0].to_owned());
        for (j, cell) in record.iter().enumerate().skip(1) {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Load {
                path: path.to_path_buf(),
                row,
                column: j + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            data.push(v);
        }
    }
    if timestamps.is_empty() {
        return Err(Error::data(format!("{} has a header but no rows", path.display())));
    }
    let values = Matrix::from_vec(timestamps.len(), channel_names.len(), data)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let freq = infer_freq(&timestamps);
    Ok(RawDataset {
        name,
        timestamps,
        channel_names,
        values,
        freq,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::data(format!("{}: {other:?}", path.display())),
    }
}

fn infer_freq(timestamps: &[String]) -> Option<String> {
    const FORMATS: [&str; 4] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%Y/%m/%d %H:%M", "%Y-%m-%dT%H:%M:%S"];
    let parse = |s: &str| {
        FORMATS
            .iter()
            .find_map(|f| chrono::NaiveDateTime::parse_from_str(s, f).ok())
    };
    let (a, b) = (parse(timestamps.first()?)?, parse(timestamps.get(1)?)?);
    let secs = (b - a).num_seconds();
    Some(match secs {
        s if s <= 0 => return None,
        s if s % 86_400 == 0 => format!("{}d", s / 86_400),
        s if s % 3600 == 0 => format!("{}h", s / 3600),
        s if s % 60 == 0 => format!("{}min", s / 60),
        s => format!("{s}s"),
    })
}

/// Which chronological part of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Val,
    Test,
}

/// Contiguous, ordered, non-overlapping train/val/test row ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitSpec {
    /// Splits `len` rows by integer ratios; rounding remainder goes to the
    /// end of the test range.
    pub fn from_ratios(len: usize, ratios: (usize, usize, usize)) -> Self {
        let total = ratios.0 + ratios.1 + ratios.2;
        let n_train = len * ratios.0 / total;
        let n_val = len * ratios.1 / total;
        Self {
            train: 0..n_train,
            val: n_train..n_train + n_val,
            test: n_train + n_val..len,
        }
    }

    /// 6:2:2 for ETT-family datasets, 7:1:2 for everything else.
    pub fn for_dataset(name: &str, len: usize) -> Self {
        Self::from_ratios(len, Self::ratios_for(name))
    }

    pub fn ratios_for(name: &str) -> (usize, usize, usize) {
        if name.to_ascii_lowercase().starts_with("ett") {
            (6, 2, 2)
        } else {
            (7, 1, 2)
        }
    }

    pub fn range(&self, part: Part) -> Range<usize> {
        match part {
            Part::Train => self.train.clone(),
            Part::Val => self.val.clone(),
            Part::Test => self.test.clone(),
        }
    }
}

/// Per-channel affine map fitted on the training rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScaler {
    pub mean: f64,
    pub std: f64,
}

/// Standardizes each channel with training-split statistics only.
/// Constant training channels are clamped to `σ = 1e-8` with a warning.
pub fn standardize(dataset: &RawDataset, split: &SplitSpec) -> Result<(RawDataset, Vec<ChannelScaler>)> {
    let train = split.train.clone();
    if train.is_empty() || train.end > dataset.len() {
        return Err(Error::data("training split is empty or out of range"));
    }
    let n = train.len() as f64;
    let scalers: Vec<ChannelScaler> = (0..dataset.n_channels())
        .map(|c| {
            let vals = || train.clone().map(|t| dataset.values[(t, c)]);
            let mean = vals().sum::<f64>() / n;
            let var = vals().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let mut std = var.sqrt();
            if std < STD_EPSILON {
                log::warn!(
                    "channel {} of {} is constant on the training split; clamping its scale",
                    dataset.channel_names.get(c).map_or("?", String::as_str),
                    dataset.name
                );
                std = STD_EPSILON;
            }
            ChannelScaler { mean, std }
        })
        .collect();
    let values = Matrix::from_fn(dataset.len(), dataset.n_channels(), |t, c| {
        (dataset.values[(t, c)] - scalers[c].mean) / scalers[c].std
    });
    Ok((
        RawDataset {
            values,
            ..dataset.clone()
        },
        scalers,
    ))
}

/// One channel-independent sample: `y` immediately follows `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub channel: usize,
    /// Index of the first input row in the full series.
    pub start: usize,
}

/// Every stride-1 window of every channel inside `range`, channel-major.
pub fn windows<'a>(
    channels: &'a [Vec<f64>],
    range: Range<usize>,
    l_in: usize,
    l_out: usize,
) -> Result<Vec<Window<'a>>> {
    let span = l_in + l_out;
    if range.len() < span {
        return Err(Error::data(format!(
            "split of {} rows is shorter than l_in + l_out = {span}",
            range.len()
        )));
    }
    let per_channel = range.len() - span + 1;
    let mut out = Vec::with_capacity(per_channel * channels.len());
    for (channel, series) in channels.iter().enumerate() {
        if range.end > series.len() {
            return Err(Error::data("split range exceeds the series length"));
        }
        for start in range.start..range.start + per_channel {
            out.push(Window {
                x: &series[start..start + l_in],
                y: &series[start + l_in..start + span],
                channel,
                start,
            });
        }
    }
    Ok(out)
}

/// A standardized dataset with its split, ready for windowing.
#[derive(Debug, Clone)]
pub struct ForecastData {
    pub name: String,
    pub channels: Vec<Vec<f64>>,
    pub split: SplitSpec,
    pub scalers: Vec<ChannelScaler>,
}

impl ForecastData {
    /// Splits by the dataset's naming convention and standardizes.
    pub fn prepare(raw: &RawDataset) -> Result<Self> {
        let split = SplitSpec::for_dataset(&raw.name, raw.len());
        Self::with_split(raw, split)
    }

    pub fn with_split(raw: &RawDataset, split: SplitSpec) -> Result<Self> {
        let (standardized, scalers) = standardize(raw, &split)?;
        Ok(Self {
            name: raw.name.clone(),
            channels: standardized.channels(),
            split,
            scalers,
        })
    }

    pub fn windows(&self, part: Part, l_in: usize, l_out: usize) -> Result<Vec<Window<'_>>> {
        windows(&self.channels, self.split.range(part), l_in, l_out)
    }
}
