//! Pricing-error metrics and their table rendering.

use crate::error::MetricsError;
use crate::types::{ErrorReport, ModelKind};

/// RMSE, MAE, MAPE and MSLE of `predicted` against `observed`.
///
/// MAPE is `None` when any observed value is zero, MSLE is `None` when any
/// value is at or below -1; the other metrics are still reported.
pub fn error_report(
    observed: &[f64],
    predicted: &[f64],
    scope: &str,
) -> Result<ErrorReport, MetricsError> {
    if observed.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            observed: observed.len(),
            predicted: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = observed.len() as f64;
    let pairs = || observed.iter().zip(predicted);

    let mse = pairs().map(|(y, yh)| (yh - y).powi(2)).sum::<f64>() / n;
    let mae = pairs().map(|(y, yh)| (yh - y).abs()).sum::<f64>() / n;
    let mape = if observed.iter().all(|&y| y != 0.0) {
        Some(pairs().map(|(y, yh)| ((yh - y) / y).abs()).sum::<f64>() / n)
    } else {
        None
    };
    let msle = if pairs().all(|(&y, &yh)| y > -1.0 && yh > -1.0) {
        Some(pairs().map(|(y, yh)| (yh.ln_1p() - y.ln_1p()).powi(2)).sum::<f64>() / n)
    } else {
        None
    };

    Ok(ErrorReport {
        rmse: mse.sqrt(),
        mae,
        mape,
        msle,
        n: observed.len(),
        scope: scope.to_string(),
    })
}

/// Rounds to three significant figures and prints without trailing zeros,
/// e.g. `1183.2 -> 1180`, `0.04200 -> 0.042`.
pub fn format_sig3(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = 2 - magnitude;
    if decimals <= 0 {
        let unit = 10f64.powi(-decimals);
        format!("{}", (x / unit).round() * unit)
    } else {
        let s = format!("{:.*}", decimals as usize, x);
        // rounding may carry into a new digit (0.09996 -> 0.100); trimming
        // the zeros keeps the result correct either way
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn optional(x: Option<f64>) -> String {
    x.map(format_sig3).unwrap_or_else(|| "n/a".into())
}

/// One table row: `name RMSE MAE MAPE MSLE`, three significant figures.
pub fn render_row(name: &str, r: &ErrorReport) -> String {
    format!(
        "{} {} {} {} {}",
        name,
        format_sig3(r.rmse),
        format_sig3(r.mae),
        optional(r.mape),
        optional(r.msle)
    )
}

/// Renders one scope's rows in the canonical model order.
pub fn render_table(scope: &str, rows: &[(ModelKind, ErrorReport)]) -> String {
    let mut sorted: Vec<&(ModelKind, ErrorReport)> = rows.iter().collect();
    sorted.sort_by_key(|(k, _)| *k);
    let mut out = format!("[{scope}]\nmodel RMSE MAE MAPE MSLE\n");
    for (kind, report) in sorted {
        out.push_str(&render_row(kind.table_name(), report));
        out.push('\n');
    }
    out
}
