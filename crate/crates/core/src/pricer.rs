//! Model-agnostic pricing entry point: closed forms for Black-Scholes and
//! Merton, the cosine expansion for everything else.

use crate::analytic::{bs_price, merton_price};
use crate::charfn::CharFnHandle;
use crate::error::PricingError;
use crate::fourier::cos_prices;
use crate::types::{CosConfig, MarketContext, ModelParams, OptionStyle};

/// Truncation multiplier used for fat-tailed parameter regions.
pub const FAT_TAIL_TRUNC_MULT: f64 = 14.0;
const FAT_TAIL_VG_NU: f64 = 1.0;
const FAT_TAIL_JUMP_INTENSITY: f64 = 10.0;

/// Widens the truncation range for high-nu variance gamma and
/// high-intensity jump parameters.
pub fn effective_cos_config(params: &ModelParams, cfg: &CosConfig) -> CosConfig {
    let fat = match params {
        ModelParams::Vg(p) => p.nu > FAT_TAIL_VG_NU,
        ModelParams::Kou(p) => p.lambda > FAT_TAIL_JUMP_INTENSITY,
        ModelParams::Bates(p) => p.lambda > FAT_TAIL_JUMP_INTENSITY,
        _ => false,
    };
    if fat && cfg.trunc_mult < FAT_TAIL_TRUNC_MULT {
        CosConfig {
            trunc_mult: FAT_TAIL_TRUNC_MULT,
            ..*cfg
        }
    } else {
        *cfg
    }
}

/// Prices `(strike, style)` pairs sharing one maturity.
pub fn model_prices(
    params: &ModelParams,
    ctx: &MarketContext,
    options: &[(f64, OptionStyle)],
    tau: f64,
    cos_cfg: &CosConfig,
) -> Result<Vec<f64>, PricingError> {
    match params {
        ModelParams::Bs(p) => {
            params.validate()?;
            options
                .iter()
                .map(|&(k, style)| bs_price(ctx, p.sigma, k, tau, style))
                .collect()
        }
        ModelParams::Mjd(p) => options
            .iter()
            .map(|&(k, style)| merton_price(ctx, p, k, tau, style))
            .collect(),
        _ => {
            let handle = CharFnHandle::new(*params, *ctx)?;
            let cfg = effective_cos_config(params, cos_cfg);
            Ok(cos_prices(&handle, options, tau, &cfg)?
                .into_iter()
                .map(|p| p.price)
                .collect())
        }
    }
}

pub fn model_price(
    params: &ModelParams,
    ctx: &MarketContext,
    strike: f64,
    tau: f64,
    style: OptionStyle,
    cos_cfg: &CosConfig,
) -> Result<f64, PricingError> {
    Ok(model_prices(params, ctx, &[(strike, style)], tau, cos_cfg)?[0])
}
