//! Closed-form pricers: the Black-Scholes formula and the Merton jump
//! diffusion Poisson series.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::PricingError;
use crate::types::{MarketContext, ModelParams, MjdParams, OptionStyle};

/// Poisson weight below which the Merton series stops (once past the mean).
pub const MERTON_WEIGHT_TOL: f64 = 1e-14;
/// Hard cap on the number of Merton series terms.
pub const MERTON_K_MAX: usize = 170;

/// Standard normal CDF through the complementary error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn check_inputs(spot: f64, sigma: f64, strike: f64, tau: f64) -> Result<(), PricingError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(PricingError::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(strike.is_finite() && strike > 0.0) {
        return Err(PricingError::Domain(format!("strike must be positive, got {strike}")));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(PricingError::Domain(format!("tau must be positive, got {tau}")));
    }
    if !(spot.is_finite() && spot > 0.0) {
        return Err(PricingError::Domain(format!("spot must be positive, got {spot}")));
    }
    Ok(())
}

/// Black-Scholes call with an explicit rate; inputs assumed valid.
fn bs_call_raw(spot: f64, strike: f64, rate: f64, sigma: f64, tau: f64) -> f64 {
    let vol = sigma * tau.sqrt();
    let d_plus = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * tau) / vol;
    let d_minus = d_plus - vol;
    let call = norm_cdf(d_plus) * spot - norm_cdf(d_minus) * strike * (-rate * tau).exp();
    call.max(0.0)
}

pub fn bs_call(ctx: &MarketContext, sigma: f64, strike: f64, tau: f64) -> Result<f64, PricingError> {
    check_inputs(ctx.spot, sigma, strike, tau)?;
    Ok(bs_call_raw(ctx.spot, strike, ctx.rate, sigma, tau))
}

/// Put through put-call parity.
pub fn bs_put(ctx: &MarketContext, sigma: f64, strike: f64, tau: f64) -> Result<f64, PricingError> {
    let call = bs_call(ctx, sigma, strike, tau)?;
    Ok(parity_put(call, ctx, strike, tau))
}

pub fn bs_price(
    ctx: &MarketContext,
    sigma: f64,
    strike: f64,
    tau: f64,
    style: OptionStyle,
) -> Result<f64, PricingError> {
    match style {
        OptionStyle::Call => bs_call(ctx, sigma, strike, tau),
        OptionStyle::Put => bs_put(ctx, sigma, strike, tau),
    }
}

/// Analytic vega `S * pdf(d+) * sqrt(tau)`.
pub fn bs_vega(ctx: &MarketContext, sigma: f64, strike: f64, tau: f64) -> Result<f64, PricingError> {
    check_inputs(ctx.spot, sigma, strike, tau)?;
    let vol = sigma * tau.sqrt();
    let d_plus = ((ctx.spot / strike).ln() + (ctx.rate + 0.5 * sigma * sigma) * tau) / vol;
    Ok(ctx.spot * norm_pdf(d_plus) * tau.sqrt())
}

fn parity_put(call: f64, ctx: &MarketContext, strike: f64, tau: f64) -> f64 {
    call - ctx.spot + strike * ctx.discount(tau)
}

/// Merton call as a Poisson mixture of Black-Scholes calls with
/// `sigma_k^2 = sigma^2 + k delta^2 / tau` and
/// `r_k = r - lambda (m - 1) + k ln(m) / tau`, weighted by
/// `Poisson(lambda m tau)`.
pub fn merton_call(
    ctx: &MarketContext,
    params: &MjdParams,
    strike: f64,
    tau: f64,
) -> Result<f64, PricingError> {
    ModelParams::Mjd(*params).validate()?;
    check_inputs(ctx.spot, params.sigma, strike, tau)?;

    let mean = params.lambda * params.m * tau;
    if mean == 0.0 {
        return Ok(bs_call_raw(ctx.spot, strike, ctx.rate, params.sigma, tau));
    }
    let ln_m = params.m.ln();
    let var_per_jump = params.delta * params.delta / tau;
    let base_rate = ctx.rate - params.lambda * (params.m - 1.0);

    let mut weight = (-mean).exp();
    let mut total = 0.0;
    for k in 0..=MERTON_K_MAX {
        if k > 0 {
            weight *= mean / k as f64;
        }
        let kf = k as f64;
        let sigma_k = (params.sigma * params.sigma + kf * var_per_jump).sqrt();
        let rate_k = base_rate + kf * ln_m / tau;
        total += weight * bs_call_raw(ctx.spot, strike, rate_k, sigma_k, tau);
        if weight < MERTON_WEIGHT_TOL && kf > mean {
            return Ok(total.max(0.0));
        }
    }
    Err(PricingError::SeriesTruncation { k_max: MERTON_K_MAX })
}

pub fn merton_put(
    ctx: &MarketContext,
    params: &MjdParams,
    strike: f64,
    tau: f64,
) -> Result<f64, PricingError> {
    let call = merton_call(ctx, params, strike, tau)?;
    Ok(parity_put(call, ctx, strike, tau))
}

pub fn merton_price(
    ctx: &MarketContext,
    params: &MjdParams,
    strike: f64,
    tau: f64,
    style: OptionStyle,
) -> Result<f64, PricingError> {
    match style {
        OptionStyle::Call => merton_call(ctx, params, strike, tau),
        OptionStyle::Put => merton_put(ctx, params, strike, tau),
    }
}
