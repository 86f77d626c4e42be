//! End-to-end trajectory analysis: cut a weight trajectory into sliding
//! windows, compute each window's magnitude curve, read off magnitude at
//! the requested scales and the magnitude dimension, then correlate every
//! metric with end-of-window test accuracy.

use std::io::Write;

use rayon::prelude::*;

use crate::cloud::{pairwise_distances, DistanceMatrix};
use crate::dimension::{auto_interval, default_ph0_sizes, estimate_dim_mag, estimate_dim_ph0};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::magnitude::{log_spaced, magnitude_function_dm};
use crate::stats::{pearson, spearman};
use crate::train::{sliding_windows_thinned, TrajectoryLog, WindowView};

/// The cross-section scales used throughout trajectory analysis.
pub const DEFAULT_SCALES: [f64; 4] = [1.36, 6.78, 16.95, 30.51];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalize {
    /// Divide each window's distances by that window's median pairwise
    /// distance before scaling, making the scale grid unit-free.
    Median,
    /// Use raw weight-space distances.
    None,
}

#[derive(Debug, Clone)]
pub struct Ph0Options {
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub scales: Vec<f64>,
    pub window: usize,
    pub stride: usize,
    pub normalize: Normalize,
    /// Scale grid for the per-window magnitude curves.
    pub grid: Vec<f64>,
    /// Minimum window size for automatic fit-interval selection.
    pub min_points: usize,
    /// Keep every `thin`-th record of each window (1 keeps all).
    pub thin: usize,
    /// Re-solve exactly at each requested scale instead of snapping to
    /// the nearest grid point.
    pub exact_scales: bool,
    pub ph0: Option<Ph0Options>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            scales: DEFAULT_SCALES.to_vec(),
            window: 1000,
            stride: 1000,
            normalize: Normalize::Median,
            grid: log_spaced(0.01, 40.0, 64),
            min_points: 8,
            thin: 1,
            exact_scales: false,
            ph0: None,
        }
    }
}

/// One analyzed window. Metric fields are `None` when that computation
/// failed; `error` carries the first failure reason.
#[derive(Debug, Clone)]
pub struct WindowRow {
    pub window_id: usize,
    pub end_test_accuracy: f64,
    pub dim_mag: Option<f64>,
    pub r_squared: Option<f64>,
    pub dim_ph0: Option<f64>,
    pub mag_at: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MetricCorrelation {
    pub metric: String,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    /// Number of windows entering the correlation.
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub scales: Vec<f64>,
    pub rows: Vec<WindowRow>,
    pub summary: Vec<MetricCorrelation>,
    /// Set when no correlations could be computed at all.
    pub empty_summary_reason: Option<String>,
}

fn analyze_window(view: &WindowView, opts: &AnalyzeOptions) -> WindowRow {
    let mut row = WindowRow {
        window_id: view.window_id,
        end_test_accuracy: view.end_test_accuracy,
        dim_mag: None,
        r_squared: None,
        dim_ph0: None,
        mag_at: vec![None; opts.scales.len()],
        error: None,
    };
    let dm = match pairwise_distances(&view.cloud) {
        Ok(dm) => dm,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let dm: DistanceMatrix = match opts.normalize {
        Normalize::None => dm,
        Normalize::Median => {
            let median = dm.median_pairwise();
            if !(median > 0.0) {
                row.error = Some(
                    "median pairwise distance is zero (identical weights in window)".into(),
                );
                return row;
            }
            match crate::cloud::scale_distances(&dm, 1.0 / median) {
                Ok(dm) => dm,
                Err(e) => {
                    row.error = Some(e.to_string());
                    return row;
                }
            }
        }
    };
    let curve = match magnitude_function_dm(&dm, &opts.grid) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    for (k, &t) in opts.scales.iter().enumerate() {
        let value = if opts.exact_scales {
            crate::cloud::scale_distances(&dm, t)
                .and_then(|s| crate::magnitude::magnitude(&crate::magnitude::similarity(&s)))
                .map(|m| m.value)
        } else {
            curve.magnitude_near(t)
        };
        match value {
            Ok(v) => row.mag_at[k] = Some(v),
            Err(e) => {
                if row.error.is_none() {
                    row.error = Some(e.to_string());
                }
            }
        }
    }
    match auto_interval(&curve, opts.min_points).and_then(|iv| estimate_dim_mag(&curve, iv)) {
        Ok(est) => {
            row.dim_mag = Some(est.value);
            row.r_squared = est.fit.map(|f| f.r_squared);
        }
        Err(e) => {
            if row.error.is_none() {
                row.error = Some(e.to_string());
            }
        }
    }
    if let Some(ph) = &opts.ph0 {
        let seeded = ph.seed.wrapping_add(view.window_id as u64);
        let result = default_ph0_sizes(view.cloud.n())
            .and_then(|sizes| estimate_dim_ph0(&view.cloud, ph.alpha, &sizes, ph.reps, seeded));
        match result {
            Ok(est) => row.dim_ph0 = Some(est.value),
            Err(e) => {
                if row.error.is_none() {
                    row.error = Some(e.to_string());
                }
            }
        }
    }
    row
}

fn correlate(
    rows: &[WindowRow],
    metric: &str,
    extract: impl Fn(&WindowRow) -> Option<f64>,
) -> MetricCorrelation {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in rows {
        if let Some(v) = extract(r) {
            if r.end_test_accuracy.is_finite() && v.is_finite() {
                xs.push(v);
                ys.push(r.end_test_accuracy);
            }
        }
    }
    MetricCorrelation {
        metric: metric.to_string(),
        pearson: pearson(&xs, &ys),
        spearman: spearman(&xs, &ys),
        count: xs.len(),
    }
}

/// Runs the full per-window analysis. Windows run in parallel; row order
/// is by window id regardless of scheduling.
pub fn analyze(log: &TrajectoryLog, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    if opts.scales.is_empty() {
        return Err(Error::InvalidInputs("need at least one scale".into()));
    }
    for &t in &opts.scales {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidScale(t));
        }
    }
    let views = sliding_windows_thinned(log, opts.window, opts.stride, opts.thin)?;
    let mut rows: Vec<WindowRow> =
        views.par_iter().map(|v| analyze_window(v, opts)).collect();
    rows.sort_by_key(|r| r.window_id);

    let mut summary = Vec::new();
    summary.push(correlate(&rows, "dim_mag", |r| r.dim_mag));
    if opts.ph0.is_some() {
        summary.push(correlate(&rows, "dim_ph0", |r| r.dim_ph0));
    }
    for (k, &t) in opts.scales.iter().enumerate() {
        summary.push(correlate(&rows, &format!("mag_at_{t}"), move |r| r.mag_at[k]));
    }
    let any = summary.iter().any(|c| c.pearson.is_some() || c.spearman.is_some());
    let empty_summary_reason = if any {
        None
    } else {
        let failed = rows.iter().filter(|r| r.error.is_some()).count();
        Some(format!(
            "no correlations computable: {failed}/{} windows failed or metrics were constant \
             (first error: {})",
            rows.len(),
            rows.iter()
                .find_map(|r| r.error.clone())
                .unwrap_or_else(|| "none".into())
        ))
    };
    Ok(AnalysisReport { scales: opts.scales.clone(), rows, summary, empty_summary_reason })
}

/// Writes the analysis CSV: one row per window, then a `# summary` block
/// of `metric,pearson,spearman` lines.
pub fn write_analysis_csv<W: Write>(
    w: &mut W,
    report: &AnalysisReport,
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut header = String::from("window_id,end_test_accuracy,dim_mag,r_squared,dim_ph0");
    for t in &report.scales {
        header.push_str(&format!(",mag_at_{t}"));
    }
    writeln!(w, "{header}")?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in &report.rows {
        let mut line = format!(
            "{},{},{},{},{}",
            r.window_id,
            if r.end_test_accuracy.is_nan() { "nan".to_string() } else { fmt_f64(r.end_test_accuracy) },
            opt(r.dim_mag),
            opt(r.r_squared),
            opt(r.dim_ph0),
        );
        for v in &r.mag_at {
            line.push(',');
            line.push_str(&opt(*v));
        }
        writeln!(w, "{line}")?;
    }
    writeln!(w, "# summary")?;
    writeln!(w, "# metric,pearson,spearman,windows")?;
    match &report.empty_summary_reason {
        Some(reason) => {
            writeln!(w, "# empty: {reason}")?;
        }
        None => {
            for c in &report.summary {
                writeln!(
                    w,
                    "# {},{},{},{}",
                    c.metric,
                    opt(c.pearson),
                    opt(c.spearman),
                    c.count
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::TrajectoryLog;

    /// A trajectory whose windows shrink while accuracy rises: magnitude
    /// at fixed scale falls monotonically, so all correlations with
    /// accuracy are negative.
    fn shrinking_trajectory(windows: usize, window: usize) -> TrajectoryLog {
        let n = windows * window;
        let d = 2;
        let mut weights = Vec::with_capacity(n * d);
        let mut accs = Vec::with_capacity(n);
        for w in 0..windows {
            let spread = 1.0 / (w as f64 + 1.0);
            for k in 0..window {
                let x = spread * (k as f64 / window as f64);
                weights.push(x);
                weights.push(-x);
                let is_last = k == window - 1;
                accs.push(if is_last { 0.5 + 0.04 * w as f64 } else { f64::NAN });
            }
        }
        TrajectoryLog::new(
            d,
            (1..=n as u64).collect(),
            vec![0.1; n],
            accs,
            weights,
        )
        .unwrap()
    }

    #[test]
    fn monotone_fixture_gives_negative_correlations() {
        let log = shrinking_trajectory(4, 50);
        let opts = AnalyzeOptions {
            window: 50,
            stride: 50,
            normalize: Normalize::None,
            scales: vec![1.36, 6.78],
            ..Default::default()
        };
        let report = analyze(&log, &opts).unwrap();
        assert_eq!(report.rows.len(), 4);
        for c in &report.summary {
            if c.metric.starts_with("mag_at_") {
                let p = c.pearson.unwrap();
                assert!(p < 0.0, "{}: pearson {p}", c.metric);
                assert!(c.spearman.unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn constant_weights_windows_fail_with_reason() {
        let n = 100;
        let d = 2;
        let log = TrajectoryLog::new(
            d,
            (1..=n as u64).collect(),
            vec![0.3; n],
            (0..n).map(|k| if (k + 1) % 50 == 0 { 0.4 } else { f64::NAN }).collect(),
            vec![1.0; n * d],
        )
        .unwrap();
        let opts = AnalyzeOptions { window: 50, stride: 50, ..Default::default() };
        let report = analyze(&log, &opts).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(row.dim_mag.is_none());
            assert!(row.error.is_some());
        }
        let reason = report.empty_summary_reason.as_deref().unwrap();
        assert!(reason.contains("2/2 windows"), "{reason}");
        let mut out = Vec::new();
        write_analysis_csv(&mut out, &report, &[]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("# empty:"), "{text}");
    }

    #[test]
    fn csv_shape() {
        let log = shrinking_trajectory(3, 40);
        let opts = AnalyzeOptions {
            window: 40,
            stride: 40,
            normalize: Normalize::Median,
            ..Default::default()
        };
        let report = analyze(&log, &opts).unwrap();
        let mut out = Vec::new();
        write_analysis_csv(&mut out, &report, &["seed: 7".into()]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# seed: 7");
        assert_eq!(
            lines.next().unwrap(),
            "window_id,end_test_accuracy,dim_mag,r_squared,dim_ph0,mag_at_1.36,mag_at_6.78,mag_at_16.95,mag_at_30.51"
        );
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
        assert!(text.contains("# summary"));
    }
}
