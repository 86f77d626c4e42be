//! Ordinary least squares in log-log space and automatic fit-interval
//! selection.

use crate::error::{Error, Result};

/// A straight-line fit of `log(value)` against `log(t)` over a window of
/// the evaluated grid. `interval` endpoints are members of that grid.
#[derive(Debug, Clone, Copy)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination in [0, 1]. A window with zero response
    /// variance carries no slope information and reports 0, which keeps
    /// saturated plateaus out of r-squared-maximizing window selection.
    pub r_squared: f64,
    pub interval: (f64, f64),
}

/// Plain OLS on `(x, y)` pairs. Requires `xs.len() >= 2` with at least two
/// distinct x values (callers guarantee this).
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    debug_assert!(xs.len() >= 2 && xs.len() == ys.len());
    let m = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, intercept, r_squared)
}

/// Fits `log(value)` vs `log(t)` over the grid points with `t` inside
/// `[lo, hi]` (inclusive). `ts` must be strictly increasing and positive,
/// `values` strictly positive at the selected points.
pub fn fit_loglog(ts: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<LogLogFit> {
    if ts.len() != values.len() {
        return Err(Error::InvalidInputs("ts and values length mismatch".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidInputs(format!("empty fit interval [{lo}, {hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut t_first = f64::NAN;
    let mut t_last = f64::NAN;
    for (&t, &v) in ts.iter().zip(values) {
        if t < lo || t > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NonPositiveMagnitude { t, value: v });
        }
        if xs.is_empty() {
            t_first = t;
        }
        t_last = t;
        xs.push(t.ln());
        ys.push(v.ln());
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientPoints(format!(
            "only {} grid points inside [{lo}, {hi}]; need at least 2",
            xs.len()
        )));
    }
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(LogLogFit { slope, intercept, r_squared, interval: (t_first, t_last) })
}

/// R-squared ties below this are broken structurally (wider window, then
/// smaller left endpoint) so window selection is fully deterministic.
const R2_TIE_EPS: f64 = 1e-12;

/// Selects the contiguous window of at least `min_points` grid points that
/// maximizes OLS r-squared in log-log space. Ties go to the wider window,
/// then to the smaller left endpoint.
pub fn auto_interval(ts: &[f64], values: &[f64], min_points: usize) -> Result<(f64, f64)> {
    if min_points < 2 {
        return Err(Error::InvalidInputs("min_points must be >= 2".into()));
    }
    let k = ts.len();
    if k < min_points || ts.len() != values.len() {
        return Err(Error::InsufficientPoints(format!(
            "{k} samples; need at least {min_points}"
        )));
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let mut ys = Vec::with_capacity(k);
    for (&t, &v) in ts.iter().zip(values) {
        if !(v > 0.0) {
            return Err(Error::NonPositiveMagnitude { t, value: v });
        }
        ys.push(v.ln());
    }

    let mut best: Option<(f64, usize, usize)> = None; // (r2, width, start)
    for start in 0..=(k - min_points) {
        for end in (start + min_points - 1)..k {
            let (_, _, r2) = ols(&xs[start..=end], &ys[start..=end]);
            let width = end - start + 1;
            let better = match best {
                None => true,
                Some((br2, bw, bs)) => {
                    if r2 > br2 + R2_TIE_EPS {
                        true
                    } else if r2 < br2 - R2_TIE_EPS {
                        false
                    } else {
                        width > bw || (width == bw && start < bs)
                    }
                }
            };
            if better {
                best = Some((r2, width, start));
            }
        }
    }
    let (_, width, start) = best.expect("at least one window exists");
    Ok((ts[start], ts[start + width - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovers_exponent() {
        let ts: Vec<f64> = (1..=20).map(|i| 1.25f64.powi(i)).collect();
        let vals: Vec<f64> = ts.iter().map(|t| 3.0 * t * t).collect();
        let fit = fit_loglog(&ts, &vals, ts[0], ts[19]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12, "slope {}", fit.slope);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.interval, (ts[0], ts[19]));
    }

    #[test]
    fn auto_interval_on_exact_power_law_returns_maximal_window() {
        let ts: Vec<f64> = (1..=16).map(|i| 2.0f64.powi(i)).collect();
        let vals: Vec<f64> = ts.iter().map(|t| t * t).collect();
        let (lo, hi) = auto_interval(&ts, &vals, 8).unwrap();
        assert_eq!((lo, hi), (ts[0], ts[15]));
        let fit = fit_loglog(&ts, &vals, lo, hi).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auto_interval_avoids_saturated_tail() {
        // Two-point-space style curve: grows, then saturates at 2.
        let ts: Vec<f64> = (0..32).map(|i| 0.05 * 1.5f64.powi(i)).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| 2.0 / (1.0 + (-t).exp())).collect();
        let (lo, hi) = auto_interval(&ts, &vals, 8).unwrap();
        let fit = fit_loglog(&ts, &vals, lo, hi).unwrap();
        // The plateau has slope ~0; the selected window must be a straight
        // growth stretch, clearly away from the flat tail.
        assert!(hi < ts[31], "window should exclude the saturated tail");
        assert!(fit.r_squared > 0.98, "r2 {}", fit.r_squared);
        // On the plateau itself the slope is tiny.
        let plateau = fit_loglog(&ts, &vals, ts[24], ts[31]).unwrap();
        assert!(plateau.slope < 0.5, "plateau slope {}", plateau.slope);
    }

    #[test]
    fn auto_interval_too_few_samples() {
        let ts = [1.0, 2.0, 3.0];
        let vals = [1.0, 2.0, 3.0];
        assert!(matches!(
            auto_interval(&ts, &vals, 8),
            Err(Error::InsufficientPoints(_))
        ));
    }

    #[test]
    fn auto_interval_deterministic() {
        let ts: Vec<f64> = (1..=24).map(|i| 1.3f64.powi(i)).collect();
        let vals: Vec<f64> = ts
            .iter()
            .enumerate()
            .map(|(i, t)| t.powf(1.4) * (1.0 + 0.05 * ((i * 37 % 11) as f64 / 11.0)))
            .collect();
        let a = auto_interval(&ts, &vals, 8).unwrap();
        let b = auto_interval(&ts, &vals, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_response_has_zero_slope_and_uninformative_r_squared() {
        let ts = [1.0, 2.0, 4.0, 8.0];
        let vals = [5.0, 5.0, 5.0, 5.0];
        let fit = fit_loglog(&ts, &vals, 1.0, 8.0).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn non_positive_values_rejected() {
        let ts = [1.0, 2.0, 3.0, 4.0];
        let vals = [1.0, -0.5, 2.0, 3.0];
        assert!(matches!(
            fit_loglog(&ts, &vals, 1.0, 4.0),
            Err(Error::NonPositiveMagnitude { .. })
        ));
    }
}
