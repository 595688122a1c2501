//! Per-maturity weighted least-squares calibration.

use rayon::prelude::*;

use crate::error::CalibrationError;
use crate::optim::{latin_hypercube, nelder_mead, NmOptions};
use crate::pricer::model_prices;
use crate::types::{
    CalibrationConfig, CalibrationResult, CosConfig, MarketContext, ModelKind, ModelParams,
    OptionQuote, OptionStyle, ParamBound, Weights,
};

/// Weighted sum of squared price errors, or `+inf` where the model cannot
/// be priced. Weights must align with `quotes`.
pub fn weighted_sse(
    params: &ModelParams,
    quotes: &[OptionQuote],
    weights: &[f64],
    ctx: &MarketContext,
    cos_cfg: &CosConfig,
) -> f64 {
    let Some(first) = quotes.first() else {
        return 0.0;
    };
    let options: Vec<(f64, OptionStyle)> = quotes.iter().map(|q| (q.strike, q.style)).collect();
    match model_prices(params, ctx, &options, first.maturity, cos_cfg) {
        Ok(model) => {
            let sse = quotes
                .iter()
                .zip(&model)
                .zip(weights)
                .map(|((q, m), w)| w * (q.price - m).powi(2))
                .sum::<f64>();
            if sse.is_nan() { f64::INFINITY } else { sse }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Calibration objective on a single-maturity slice, using the weights in
/// `cfg`. No OTM filtering is applied here.
pub fn objective(
    params: &ModelParams,
    quotes: &[OptionQuote],
    ctx: &MarketContext,
    cfg: &CalibrationConfig,
    cos_cfg: &CosConfig,
) -> Result<f64, CalibrationError> {
    let w = resolve_weights(&cfg.weights, quotes)?;
    Ok(weighted_sse(params, quotes, &w, ctx, cos_cfg))
}

/// Calls struck above spot and puts below it, in input order.
pub fn filter_otm(quotes: &[OptionQuote], ctx: &MarketContext) -> Vec<OptionQuote> {
    quotes
        .iter()
        .filter(|q| is_otm(q, ctx))
        .cloned()
        .collect()
}

fn is_otm(q: &OptionQuote, ctx: &MarketContext) -> bool {
    match q.style {
        OptionStyle::Call => q.strike > ctx.spot,
        OptionStyle::Put => q.strike < ctx.spot,
    }
}

pub fn resolve_weights(weights: &Weights, quotes: &[OptionQuote]) -> Result<Vec<f64>, CalibrationError> {
    let w: Vec<f64> = match weights {
        Weights::Uniform => vec![1.0; quotes.len()],
        Weights::InverseSquaredPrice => quotes
            .iter()
            .map(|q| if q.price == 0.0 { 0.0 } else { 1.0 / (q.price * q.price) })
            .collect(),
        Weights::Custom(w) => {
            if w.len() != quotes.len() {
                return Err(CalibrationError::InvalidWeights(format!(
                    "{} weights for {} quotes",
                    w.len(),
                    quotes.len()
                )));
            }
            w.clone()
        }
    };
    if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(CalibrationError::InvalidWeights(format!("weight {bad}")));
    }
    Ok(w)
}

fn round_mantissa(x: f64) -> f64 {
    const DROP: u32 = 20;
    let bits = x.to_bits();
    f64::from_bits((bits + (1 << (DROP - 1))) & !((1u64 << DROP) - 1))
}

fn to_unit(bounds: &[ParamBound], unit: &[f64]) -> Vec<f64> {
    bounds
        .iter()
        .zip(unit)
        .map(|(b, u)| {
            let (lo, hi) = b.search_interval();
            (lo + u * (hi - lo)).clamp(lo, hi)
        })
        .collect()
}

/// Fits `kind` to one maturity by multi-start bounded Nelder-Mead.
pub fn calibrate(
    kind: ModelKind,
    quotes: &[OptionQuote],
    ctx: &MarketContext,
    cfg: &CalibrationConfig,
    cos_cfg: &CosConfig,
) -> Result<CalibrationResult, CalibrationError> {
    if let Some(first) = quotes.first() {
        if quotes.iter().any(|q| q.maturity != first.maturity) {
            return Err(CalibrationError::MixedMaturities);
        }
    }
    let weights = resolve_weights(&cfg.weights, quotes)?;
    let (slice, weights): (Vec<OptionQuote>, Vec<f64>) = quotes
        .iter()
        .zip(weights)
        .filter(|(q, _)| !cfg.otm_only || is_otm(q, ctx))
        .map(|(q, w)| (q.clone(), w))
        .unzip();

    let dim = kind.dim();
    let required = dim.max(3);
    if slice.len() < required {
        return Err(CalibrationError::InsufficientQuotes {
            available: slice.len(),
            required,
        });
    }
    let total: f64 = weights.iter().sum();
    if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(CalibrationError::InvalidWeights("all weights are zero".into()));
    }
    if cfg.n_starts == 0 {
        return Err(CalibrationError::InvalidWeights("n_starts must be positive".into()));
    }
    cos_cfg.check()?;

    // The search sees weights normalized to unit sum and rounded to 32
    // mantissa bits, so rescaling every weight leaves its path unchanged.
    let normalized: Vec<f64> = weights.iter().map(|w| round_mantissa(w / total)).collect();
    let bounds = kind.bounds();
    let f = |u: &[f64]| {
        let params = ModelParams::from_slice(kind, &to_unit(bounds, u));
        weighted_sse(&params, &slice, &normalized, ctx, cos_cfg)
    };
    let opts = NmOptions { tol: cfg.tol_objective, max_iters: cfg.max_iters };

    let starts = latin_hypercube(cfg.n_starts, dim, cfg.seed);
    let runs: Vec<_> = starts.par_iter().map(|x0| nelder_mead(&f, x0, &opts)).collect();

    let mut best: Option<crate::optim::NmResult> = None;
    for run in runs {
        if !run.value.is_finite() {
            continue;
        }
        match &best {
            Some(b) if run.value >= b.value => {}
            _ => best = Some(run),
        }
    }
    let best = best.ok_or(CalibrationError::AllStartsFailed)?;
    let params = ModelParams::from_slice(kind, &to_unit(bounds, &best.x));
    let objective = weighted_sse(&params, &slice, &weights, ctx, cos_cfg);
    log::debug!(
        "{} {}: objective {objective:e} after {} iterations",
        kind.tag(),
        slice[0].expiry_label,
        best.iterations
    );

    Ok(CalibrationResult {
        params,
        objective,
        converged: best.converged,
        iterations: best.iterations,
        expiry_label: slice[0].expiry_label.clone(),
    })
}
