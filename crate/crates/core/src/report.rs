//! Error reports: per-snapshot relative errors with window statistics.

use std::fmt::Write;
use std::path::Path;

use crate::binio::write_file;
use crate::error::{Result, RomError};
use crate::plot::{LineChart, Series};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub len: usize,
    pub mean: f64,
    pub max: f64,
}

impl WindowStats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            len: values.len(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    /// Percent.
    pub relative_errors: Vec<f64>,
    /// First validation column; equal to the length when there is none.
    pub split_index: usize,
    pub train: Option<WindowStats>,
    pub validation: Option<WindowStats>,
    pub offline_seconds: Option<f64>,
    pub online_seconds: Option<f64>,
}

impl ErrorReport {
    pub fn new(times: Vec<f64>, relative_errors: Vec<f64>, split_index: usize) -> Self {
        assert_eq!(times.len(), relative_errors.len());
        let split_index = split_index.min(times.len());
        Self {
            train: WindowStats::of(&relative_errors[..split_index]),
            validation: WindowStats::of(&relative_errors[split_index..]),
            times,
            relative_errors,
            split_index,
            offline_seconds: None,
            online_seconds: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn window(&self, i: usize) -> &'static str {
        if i < self.split_index {
            "train"
        } else {
            "validation"
        }
    }

    /// `t,relative_error_percent,window`. Timings are not written so the file
    /// is reproducible.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,relative_error_percent,window\n");
        for (i, (t, e)) in self.times.iter().zip(&self.relative_errors).enumerate() {
            let _ = writeln!(out, "{t:.16e},{e:.16e},{}", self.window(i));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "t,relative_error_percent,window" => {}
            _ => return Err(RomError::format("line 1", "expected header t,relative_error_percent,window")),
        }
        let mut times = Vec::new();
        let mut errors = Vec::new();
        let mut split = None;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let loc = || format!("line {}", i + 1);
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(RomError::format(loc(), format!("expected 3 fields, found {}", fields.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| RomError::format(loc(), format!("cannot parse {s:?} as a number")))
            };
            let idx = times.len();
            times.push(parse(fields[0])?);
            errors.push(parse(fields[1])?);
            match (fields[2], split) {
                ("train", None) => {}
                ("validation", None) => split = Some(idx),
                ("validation", Some(_)) => {}
                ("train", Some(_)) => {
                    return Err(RomError::format(loc(), "train row after validation rows"));
                }
                (w, _) => return Err(RomError::format(loc(), format!("unknown window {w:?}"))),
            }
        }
        let n = times.len();
        Ok(Self::new(times, errors, split.unwrap_or(n)))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv().as_bytes())
    }

    /// Error against time on a log axis, with a divider at the end of the
    /// training window.
    pub fn to_svg(&self, title: &str) -> String {
        let mut chart = LineChart::new(title, "t [s]", "relative error [%]");
        chart.log_y = true;
        chart.series.push(Series {
            label: "relative L2 error".into(),
            points: self.times.iter().copied().zip(self.relative_errors.iter().copied()).collect(),
        });
        if self.split_index > 0 && self.split_index < self.len() {
            let t = 0.5 * (self.times[self.split_index - 1] + self.times[self.split_index]);
            chart.vlines.push(t);
        }
        chart.to_svg()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        if let Some(w) = self.train {
            let _ = writeln!(out, "train: {} steps, mean {:.4}%, max {:.4}%", w.len, w.mean, w.max);
        }
        if let Some(w) = self.validation {
            let _ = writeln!(out, "validation: {} steps, mean {:.4}%, max {:.4}%", w.len, w.mean, w.max);
        }
        if let Some(s) = self.offline_seconds {
            let _ = writeln!(out, "offline wall-clock: {s:.3} s");
        }
        if let Some(s) = self.online_seconds {
            let _ = writeln!(out, "online wall-clock: {s:.6} s");
        }
        out
    }
}
