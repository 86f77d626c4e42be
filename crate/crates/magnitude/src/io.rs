//! File formats: point-cloud CSV and binary, trajectory binary, and the
//! CSV reports.
//!
//! All floats in CSV output are printed with 17 significant digits so a
//! write/read cycle reproduces every f64 bit-exactly. The binary formats
//! are little-endian with explicit magic bytes. Parsers are total: any
//! byte sequence either decodes or returns an error, never panics.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::dimension::DimensionEstimate;
use crate::error::{Error, Result};
use crate::magnitude::MagnitudeCurve;
use crate::train::TrajectoryLog;

pub const CLOUD_MAGIC: &[u8; 6] = b"MAGPC1";
pub const TRAJECTORY_MAGIC: &[u8; 7] = b"MAGTRJ1";

/// 17 significant digits: exact f64 round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

// ---------------------------------------------------------------------
// Point-cloud CSV
// ---------------------------------------------------------------------

/// Parses point-cloud CSV: '#' lines and blank lines are skipped, every
/// other line is one point as comma-separated floats.
pub fn parse_cloud_csv(bytes: &[u8]) -> Result<PointCloud> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::MalformedCloud(format!("not UTF-8: {e}")))?;
    let mut data = Vec::new();
    let mut d: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| {
                Error::MalformedCloud(format!("line {}: bad float {field:?}: {e}", lineno + 1))
            })?;
            data.push(v);
            count += 1;
        }
        match d {
            None => d = Some(count),
            Some(expect) if expect != count => {
                return Err(Error::MalformedCloud(format!(
                    "line {}: {count} coordinates, expected {expect}",
                    lineno + 1
                )));
            }
            _ => {}
        }
    }
    let d = d.ok_or_else(|| Error::MalformedCloud("no data lines".into()))?;
    PointCloud::new(data, d)
}

pub fn write_cloud_csv<W: Write>(w: &mut W, cloud: &PointCloud, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut line = String::new();
    for i in 0..cloud.n() {
        line.clear();
        for (k, x) in cloud.point(i).iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            let _ = write!(line, "{x:.16e}");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Point-cloud binary: "MAGPC1", u32 n, u32 d, then n*d little-endian f64
// row-major.
// ---------------------------------------------------------------------

pub fn parse_cloud_binary(bytes: &[u8]) -> Result<PointCloud> {
    if bytes.len() < 6 || &bytes[..6] != CLOUD_MAGIC {
        return Err(Error::MalformedCloud("missing MAGPC1 magic".into()));
    }
    if bytes.len() < 14 {
        return Err(Error::MalformedCloud("truncated header".into()));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    if n == 0 || d == 0 {
        return Err(Error::MalformedCloud(format!("empty cloud (n = {n}, d = {d})")));
    }
    let total = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::MalformedCloud("coordinate count overflows".into()))?;
    let payload = &bytes[14..];
    if payload.len() != total {
        return Err(Error::MalformedCloud(format!(
            "expected {total} coordinate bytes, found {}",
            payload.len()
        )));
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PointCloud::new(data, d)
}

pub fn write_cloud_binary<W: Write>(w: &mut W, cloud: &PointCloud) -> std::io::Result<()> {
    w.write_all(CLOUD_MAGIC)?;
    w.write_all(&(cloud.n() as u32).to_le_bytes())?;
    w.write_all(&(cloud.dim() as u32).to_le_bytes())?;
    for x in cloud.coords() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Loads a cloud from a file, sniffing the binary magic and otherwise
/// parsing CSV.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(CLOUD_MAGIC) {
        parse_cloud_binary(&bytes)
    } else {
        parse_cloud_csv(&bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Csv,
    Binary,
}

pub fn save_cloud(
    path: &Path,
    cloud: &PointCloud,
    format: CloudFormat,
    comments: &[String],
) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    match format {
        CloudFormat::Csv => write_cloud_csv(&mut out, cloud, comments),
        CloudFormat::Binary => write_cloud_binary(&mut out, cloud),
    }
    .expect("writing to a Vec cannot fail");
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------
// Trajectory binary: "MAGTRJ1", u32 d, then per record: u64 iteration,
// f64 train_loss, f64 test_accuracy (NaN = absent), d * f64 weights.
// ---------------------------------------------------------------------

pub fn parse_trajectory(bytes: &[u8]) -> Result<TrajectoryLog> {
    if bytes.len() < 7 || &bytes[..7] != TRAJECTORY_MAGIC {
        return Err(Error::MalformedTrajectory("missing MAGTRJ1 magic".into()));
    }
    if bytes.len() < 11 {
        return Err(Error::MalformedTrajectory("truncated header".into()));
    }
    let d = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    if d == 0 {
        return Err(Error::MalformedTrajectory("parameter count 0".into()));
    }
    let record_size = 8usize
        .checked_add(8)
        .and_then(|s| s.checked_add(8))
        .and_then(|s| d.checked_mul(8).map(|w| s + w))
        .ok_or_else(|| Error::MalformedTrajectory("record size overflows".into()))?;
    let payload = &bytes[11..];
    if payload.is_empty() || payload.len() % record_size != 0 {
        return Err(Error::MalformedTrajectory(format!(
            "payload of {} bytes is not a non-zero multiple of the {record_size}-byte \
             record size",
            payload.len()
        )));
    }
    let count = payload.len() / record_size;
    let mut iterations = Vec::with_capacity(count);
    let mut losses = Vec::with_capacity(count);
    let mut accs = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count * d);
    for rec in payload.chunks_exact(record_size) {
        iterations.push(u64::from_le_bytes(rec[0..8].try_into().unwrap()));
        losses.push(f64::from_le_bytes(rec[8..16].try_into().unwrap()));
        accs.push(f64::from_le_bytes(rec[16..24].try_into().unwrap()));
        for c in rec[24..].chunks_exact(8) {
            weights.push(f64::from_le_bytes(c.try_into().unwrap()));
        }
    }
    TrajectoryLog::new(d, iterations, losses, accs, weights)
}

pub fn write_trajectory<W: Write>(w: &mut W, log: &TrajectoryLog) -> std::io::Result<()> {
    w.write_all(TRAJECTORY_MAGIC)?;
    w.write_all(&(log.d as u32).to_le_bytes())?;
    for r in 0..log.len() {
        w.write_all(&log.iterations[r].to_le_bytes())?;
        w.write_all(&log.train_loss[r].to_le_bytes())?;
        w.write_all(&log.test_accuracy[r].to_le_bytes())?;
        for x in log.weights_at(r) {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_trajectory(path: &Path) -> Result<TrajectoryLog> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    parse_trajectory(&bytes)
}

pub fn save_trajectory(path: &Path, log: &TrajectoryLog) -> Result<()> {
    let mut out = Vec::new();
    write_trajectory(&mut out, log).expect("writing to a Vec cannot fail");
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------
// CSV reports
// ---------------------------------------------------------------------

/// Curve CSV: `t,magnitude,condition_estimate`, one row per successful
/// scale.
pub fn write_curve_csv<W: Write>(
    w: &mut W,
    curve: &MagnitudeCurve,
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "t,magnitude,condition_estimate")?;
    for s in &curve.samples {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.magnitude),
            fmt_f64(s.condition_estimate)
        )?;
    }
    Ok(())
}

/// Dimension report CSV: `method,value,slope,intercept,r_squared,t_lo,t_hi`.
/// PH0 rows reuse the t columns for the subsample-size interval.
pub fn write_dimension_report_csv<W: Write>(
    w: &mut W,
    estimates: &[&DimensionEstimate],
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "method,value,slope,intercept,r_squared,t_lo,t_hi")?;
    for e in estimates {
        match &e.fit {
            Some(f) => writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e.method,
                fmt_f64(e.value),
                fmt_f64(f.slope),
                fmt_f64(f.intercept),
                fmt_f64(f.r_squared),
                fmt_f64(f.interval.0),
                fmt_f64(f.interval.1)
            )?,
            None => writeln!(w, "{},{},,,,,", e.method, fmt_f64(e.value))?,
        }
    }
    Ok(())
}
