//! Synthetic BTC-like option chains for tests and demos.
//!
//! Maturities are ACT/365 year fractions from the trade date. Quotes are
//! OTM on both sides of the futures level (puts below, calls at or above)
//! with multiplicative lognormal noise on the model price.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::PricingError;
use crate::pricer::model_prices;
use crate::types::{
    year_fraction_act365, BatesParams, BsParams, CosConfig, HestonParams, KouParams, MarketContext,
    MjdParams, ModelKind, ModelParams, OptionChain, OptionQuote, OptionStyle, VgParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub params: ModelParams,
    pub spot: f64,
    pub rate: f64,
    pub trade_date: NaiveDate,
    pub expiries: Vec<(String, NaiveDate)>,
    pub strikes: Vec<f64>,
    /// Standard deviation of the log price noise; 0 for exact model prices.
    pub noise: f64,
    pub seed: u64,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

impl FixtureSpec {
    /// Futures at 72000, rate 0.05, trade date 2024-03-11, expiries in
    /// June 2024, December 2024 and December 2025, strikes 40000 to 120000.
    pub fn btc_like(params: ModelParams) -> Self {
        FixtureSpec {
            params,
            spot: 72_000.0,
            rate: 0.05,
            trade_date: date(2024, 3, 11),
            expiries: vec![
                ("Jun24".into(), date(2024, 6, 28)),
                ("Dec24".into(), date(2024, 12, 27)),
                ("Dec25".into(), date(2025, 12, 26)),
            ],
            strikes: (0..=16).map(|i| 40_000.0 + 5_000.0 * i as f64).collect(),
            noise: 0.0,
            seed: 42,
        }
    }
}

/// Plausible crypto parameters for each model.
pub fn default_params(kind: ModelKind) -> ModelParams {
    match kind {
        ModelKind::Bs => ModelParams::Bs(BsParams { sigma: 0.65 }),
        ModelKind::Mjd => ModelParams::Mjd(MjdParams { sigma: 0.5, lambda: 1.5, m: 0.97, delta: 0.25 }),
        ModelKind::Vg => ModelParams::Vg(VgParams { sigma: 0.65, theta: -0.1, nu: 0.3 }),
        ModelKind::Kou => ModelParams::Kou(KouParams { sigma: 0.5, lambda: 3.0, p: 0.3, eta1: 8.0, eta2: 4.0 }),
        ModelKind::Heston => ModelParams::Heston(HestonParams {
            kappa: 2.0,
            theta_bar: 0.4,
            sigma_v: 1.0,
            rho: 0.0,
            v0: 0.4,
        }),
        ModelKind::Bates => ModelParams::Bates(BatesParams {
            kappa: 2.0,
            theta_bar: 0.35,
            eta: 0.9,
            rho: 0.0,
            v0: 0.35,
            lambda: 1.5,
            alpha: -0.05,
            delta_j: 0.2,
        }),
    }
}

pub fn generate(spec: &FixtureSpec, cos_cfg: &CosConfig) -> Result<OptionChain, PricingError> {
    if !(spec.noise.is_finite() && spec.noise >= 0.0) {
        return Err(PricingError::Domain(format!("noise must be nonnegative, got {}", spec.noise)));
    }
    let ctx = MarketContext::new(spec.spot, spec.rate)?.with_trade_date(spec.trade_date);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut strikes = spec.strikes.clone();
    strikes.sort_by(f64::total_cmp);

    let mut quotes = Vec::new();
    for (label, expiry) in &spec.expiries {
        let tau = year_fraction_act365(spec.trade_date, *expiry);
        let options: Vec<(f64, OptionStyle)> = strikes
            .iter()
            .map(|&k| (k, if k < spec.spot { OptionStyle::Put } else { OptionStyle::Call }))
            .collect();
        let prices = model_prices(&spec.params, &ctx, &options, tau, cos_cfg)?;
        for ((strike, style), price) in options.into_iter().zip(prices) {
            let z: f64 = rng.sample(StandardNormal);
            quotes.push(OptionQuote {
                strike,
                maturity: tau,
                price: price * (spec.noise * z).exp(),
                style,
                expiry_label: label.clone(),
            });
        }
    }
    Ok(OptionChain::new(ctx, quotes))
}
