//! Risk-neutral characteristic functions of the log-price `X = ln S_tau`
//! for the six models.
//!
//! Each model is implemented as the exponent of the characteristic function
//! of the log-return `ln(S_tau / S_0)` (the "log increment"). The full
//! characteristic function is `exp(i u ln S_0 + log_increment)`. Every
//! exponent is written in a cancellation-free form (`expm1`, `log1p`, and
//! the rationalised `kappa - rho sigma i u - d`) so it keeps full relative
//! precision near `u = 0`; the numerical cumulants in the Fourier pricer
//! rely on that.

use num_complex::Complex64;

use crate::error::PricingError;
use crate::types::{
    BatesParams, HestonParams, KouParams, MarketContext, MjdParams, ModelParams, VgParams,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `exp(z) - 1` without cancellation for small `|z|`.
pub(crate) fn expm1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    Complex64::new(
        libm::expm1(z.re) * c - 2.0 * half * half,
        z.re.exp() * s,
    )
}

/// `ln(1 + z)` without cancellation for small `|z|` (principal branch).
pub(crate) fn log1p(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let re = 0.5 * libm::log1p(2.0 * x + x * x + y * y);
    let im = y.atan2(1.0 + x);
    Complex64::new(re, im)
}

pub fn log_increment_bs(u: Complex64, tau: f64, rate: f64, sigma: f64) -> Complex64 {
    let var = sigma * sigma;
    I * u * (rate - 0.5 * var) * tau - 0.5 * var * u * u * tau
}

pub fn cf_bs(u: Complex64, tau: f64, ctx: &MarketContext, sigma: f64) -> Complex64 {
    (I * u * ctx.spot.ln() + log_increment_bs(u, tau, ctx.rate, sigma)).exp()
}

/// Martingale correction `omega = ln(1 - theta nu - sigma^2 nu / 2) / nu`.
pub fn vg_omega(params: &VgParams) -> Result<f64, PricingError> {
    let VgParams { sigma, theta, nu } = *params;
    let shift = -theta * nu - 0.5 * sigma * sigma * nu;
    if 1.0 + shift <= 0.0 || !shift.is_finite() {
        return Err(PricingError::Domain(format!(
            "variance gamma requires 1 - theta nu - sigma^2 nu / 2 > 0, got {}",
            1.0 + shift
        )));
    }
    Ok(libm::log1p(shift) / nu)
}

pub fn log_increment_vg(
    u: Complex64,
    tau: f64,
    rate: f64,
    params: &VgParams,
) -> Result<Complex64, PricingError> {
    let omega = vg_omega(params)?;
    let VgParams { sigma, theta, nu } = *params;
    let base = -I * theta * nu * u + 0.5 * sigma * sigma * nu * u * u;
    Ok(I * u * (rate + omega) * tau - (tau / nu) * log1p(base))
}

pub fn cf_vg(
    u: Complex64,
    tau: f64,
    ctx: &MarketContext,
    params: &VgParams,
) -> Result<Complex64, PricingError> {
    Ok((I * u * ctx.spot.ln() + log_increment_vg(u, tau, ctx.rate, params)?).exp())
}

pub fn log_increment_mjd(u: Complex64, tau: f64, rate: f64, params: &MjdParams) -> Complex64 {
    let MjdParams { sigma, lambda, m, delta } = *params;
    let var = sigma * sigma;
    let jump = I * u * params.log_jump_mean() - 0.5 * delta * delta * u * u;
    I * u * (rate - 0.5 * var - lambda * (m - 1.0)) * tau - 0.5 * var * u * u * tau
        + lambda * tau * expm1(jump)
}

pub fn cf_mjd(u: Complex64, tau: f64, ctx: &MarketContext, params: &MjdParams) -> Complex64 {
    (I * u * ctx.spot.ln() + log_increment_mjd(u, tau, ctx.rate, params)).exp()
}

/// Risk-neutral drift `r - sigma^2/2 - lambda (p eta1/(eta1-1) + (1-p) eta2/(eta2+1) - 1)`.
pub fn kou_drift(params: &KouParams, ctx: &MarketContext) -> f64 {
    let KouParams { sigma, lambda, p, eta1, eta2 } = *params;
    ctx.rate
        - 0.5 * sigma * sigma
        - lambda * (p * eta1 / (eta1 - 1.0) + (1.0 - p) * eta2 / (eta2 + 1.0) - 1.0)
}

pub fn log_increment_kou(u: Complex64, tau: f64, rate: f64, params: &KouParams) -> Complex64 {
    let KouParams { sigma, lambda, p, eta1, eta2 } = *params;
    let shifted = MarketContext { spot: 1.0, rate, trade_date: None };
    let mu = kou_drift(params, &shifted);
    let iu = I * u;
    // p eta1/(eta1 - iu) + q eta2/(eta2 + iu) - 1, rearranged
    let jumps = p * iu / (eta1 - iu) - (1.0 - p) * iu / (eta2 + iu);
    iu * mu * tau - 0.5 * u * u * sigma * sigma * tau + lambda * tau * jumps
}

pub fn cf_kou(u: Complex64, tau: f64, ctx: &MarketContext, params: &KouParams) -> Complex64 {
    (I * u * ctx.spot.ln() + log_increment_kou(u, tau, ctx.rate, params)).exp()
}

/// `C + D v0` of the Heston characteristic function, without the rate
/// term, evaluated in the rotation-free form (`g` built from `-d`,
/// decaying `exp(-d tau)`), with `d` on the principal branch.
fn heston_body(u: Complex64, tau: f64, p: &HestonParams) -> Complex64 {
    let HestonParams { kappa, theta_bar, sigma_v, rho, v0 } = *p;
    let iu = I * u;
    let q = iu + u * u;
    if q == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    let var = sigma_v * sigma_v;
    let beta = kappa - rho * sigma_v * iu;
    let d = (beta * beta + var * q).sqrt();
    let sum = beta + d;
    // beta - d = -sigma^2 q / (beta + d); n_over_var = (beta - d) / sigma^2
    let n_over_var = -q / sum;
    let g = n_over_var * var / sum;
    let decay = (-d * tau).exp();
    let one_minus_decay = -expm1(-d * tau);
    let one = Complex64::new(1.0, 0.0);

    let big_d = n_over_var * one_minus_decay / (one - g * decay);
    let log_term = log1p(g * one_minus_decay / (one - g));
    // (kappa theta / sigma^2) [ (beta - d) tau - 2 ln(...) ]
    let big_c = kappa * theta_bar * (n_over_var * tau - 2.0 * log_term / var);
    big_c + big_d * v0
}

pub fn log_increment_heston(u: Complex64, tau: f64, rate: f64, params: &HestonParams) -> Complex64 {
    I * u * rate * tau + heston_body(u, tau, params)
}

pub fn cf_heston(u: Complex64, tau: f64, ctx: &MarketContext, params: &HestonParams) -> Complex64 {
    (I * u * ctx.spot.ln() + log_increment_heston(u, tau, ctx.rate, params)).exp()
}

/// Mean relative jump size `exp(alpha + delta^2/2) - 1`.
pub fn bates_mean_jump(params: &BatesParams) -> f64 {
    libm::expm1(params.alpha + 0.5 * params.delta_j * params.delta_j)
}

pub fn log_increment_bates(u: Complex64, tau: f64, rate: f64, params: &BatesParams) -> Complex64 {
    let iu = I * u;
    let jump = iu * params.alpha - 0.5 * u * u * params.delta_j * params.delta_j;
    iu * (rate - params.lambda * bates_mean_jump(params)) * tau
        + heston_body(u, tau, &params.heston())
        + params.lambda * tau * expm1(jump)
}

pub fn cf_bates(u: Complex64, tau: f64, ctx: &MarketContext, params: &BatesParams) -> Complex64 {
    (I * u * ctx.spot.ln() + log_increment_bates(u, tau, ctx.rate, params)).exp()
}

/// A validated (model, market) pair that evaluates its characteristic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFnHandle {
    model: ModelParams,
    ctx: MarketContext,
}

impl CharFnHandle {
    pub fn new(model: ModelParams, ctx: MarketContext) -> Result<Self, PricingError> {
        model.validate()?;
        ctx.check()?;
        if let ModelParams::Vg(p) = &model {
            vg_omega(p)?;
        }
        Ok(CharFnHandle { model, ctx })
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn context(&self) -> &MarketContext {
        &self.ctx
    }

    /// Exponent of the characteristic function of `ln(S_tau / S_0)`.
    pub fn log_increment(&self, u: Complex64, tau: f64) -> Complex64 {
        let r = self.ctx.rate;
        match &self.model {
            ModelParams::Bs(p) => log_increment_bs(u, tau, r, p.sigma),
            // omega validated at construction
            ModelParams::Vg(p) => log_increment_vg(u, tau, r, p).expect("validated VG params"),
            ModelParams::Mjd(p) => log_increment_mjd(u, tau, r, p),
            ModelParams::Kou(p) => log_increment_kou(u, tau, r, p),
            ModelParams::Heston(p) => log_increment_heston(u, tau, r, p),
            ModelParams::Bates(p) => log_increment_bates(u, tau, r, p),
        }
    }

    /// `E[exp(i u ln S_tau)]`.
    pub fn eval(&self, u: Complex64, tau: f64) -> Complex64 {
        (I * u * self.ctx.spot.ln() + self.log_increment(u, tau)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(spot: f64, rate: f64) -> MarketContext {
        MarketContext::new(spot, rate).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn complex_helpers_keep_precision() {
        let z = c(1e-10, -3e-11);
        assert!(close(expm1(z), z + 0.5 * z * z, 1e-25));
        assert!(close(log1p(z), z - 0.5 * z * z, 1e-25));
        let w = c(0.3, -1.2);
        assert!(close(expm1(w), w.exp() - 1.0, 1e-15));
        assert!(close(log1p(w), (w + 1.0).ln(), 1e-15));
    }

    #[test]
    fn bs_values() {
        let m = ctx(1.0, 0.0);
        assert_eq!(cf_bs(c(0.0, 0.0), 1.0, &m, 0.2), c(1.0, 0.0));
        let want = c(-0.02, -0.02).exp();
        assert!(close(cf_bs(c(1.0, 0.0), 1.0, &m, 0.2), want, 1e-15));
        let m = ctx(100.0, 0.03);
        let fwd = cf_bs(c(0.0, -1.0), 2.0, &m, 0.4);
        assert!(((fwd.re / 100.0) - (0.06f64).exp()).abs() < 1e-12);
        assert!(fwd.im.abs() < 1e-12);
    }

    #[test]
    fn vg_martingale_and_small_nu_limit() {
        let m = ctx(100.0, 0.05);
        let p = VgParams { sigma: 0.6, theta: 0.4, nu: 0.3 };
        assert!(close(cf_vg(c(0.0, 0.0), 1.0, &m, &p).unwrap(), c(1.0, 0.0), 0.0));
        let fwd = cf_vg(c(0.0, -1.0), 1.0, &m, &p).unwrap();
        assert!(close(fwd, c(100.0 * 0.05f64.exp(), 0.0), 1e-10 * 100.0));

        let p = VgParams { sigma: 0.2, theta: 0.0, nu: 1e-6 };
        for i in -20..=20 {
            let u = c(i as f64 * 0.5, 0.0);
            let a = cf_vg(u, 1.0, &m, &p).unwrap();
            let b = cf_bs(u, 1.0, &m, 0.2);
            assert!((a - b).norm() <= 1e-4 * b.norm().max(1e-300) + 1e-12, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn vg_rejects_undefined_omega() {
        let p = VgParams { sigma: 1.0, theta: 1.0, nu: 1.0 };
        assert!(matches!(vg_omega(&p), Err(PricingError::Domain(_))));
        assert!(CharFnHandle::new(ModelParams::Vg(p), ctx(1.0, 0.0)).is_err());
    }

    #[test]
    fn mjd_martingale() {
        let m = ctx(100.0, 0.05);
        let p = MjdParams { sigma: 0.3, lambda: 2.0, m: 0.9, delta: 0.25 };
        assert_eq!(cf_mjd(c(0.0, 0.0), 1.0, &m, &p), c(1.0, 0.0));
        let fwd = cf_mjd(c(0.0, -1.0), 1.5, &m, &p);
        assert!(close(fwd, c(100.0 * 0.075f64.exp(), 0.0), 1e-10 * 100.0));
    }

    #[test]
    fn kou_drift_hand_values() {
        let zero = ctx(1.0, 0.0);
        let p = KouParams { sigma: 0.2, lambda: 0.0, p: 0.5, eta1: 3.0, eta2: 3.0 };
        assert!((kou_drift(&p, &zero) + 0.02).abs() < 1e-15);
        let p = KouParams { sigma: 0.0, lambda: 1.0, p: 1.0, eta1: 2.0, eta2: 3.0 };
        assert!((kou_drift(&p, &zero) + 1.0).abs() < 1e-15);
        // mpmath: 0.05 - 0.69^2/2 - 3 (0.7*7.5/6.5 + 0.3*2/3 - 1)
        let p = KouParams { sigma: 0.69, lambda: 3.0, p: 0.7, eta1: 7.5, eta2: 2.0 };
        let got = kou_drift(&p, &ctx(1.0, 0.05));
        assert!((got - (-0.211_126_923_076_923_08)).abs() < 1e-14, "{got}");
    }

    #[test]
    fn kou_without_jumps_is_bs() {
        let m = ctx(100.0, 0.02);
        let p = KouParams { sigma: 0.4, lambda: 0.0, p: 0.3, eta1: 5.0, eta2: 4.0 };
        for i in -40..=40 {
            let u = c(i as f64 * 0.25, 0.0);
            assert!(close(cf_kou(u, 0.8, &m, &p), cf_bs(u, 0.8, &m, 0.4), 1e-12));
        }
        let p = KouParams { lambda: 3.0, ..p };
        let fwd = cf_kou(c(0.0, -1.0), 0.8, &m, &p);
        assert!(close(fwd, c(100.0 * 0.016f64.exp(), 0.0), 1e-10 * 100.0));
    }

    #[test]
    fn heston_martingale_and_vanishing_vol_of_vol() {
        let m = ctx(100.0, 0.05);
        let p = HestonParams { kappa: 1.5, theta_bar: 0.09, sigma_v: 0.7, rho: -0.6, v0: 0.12 };
        assert_eq!(cf_heston(c(0.0, 0.0), 2.0, &m, &p), c(1.0, 0.0));
        let fwd = cf_heston(c(0.0, -1.0), 2.0, &m, &p);
        assert!(close(fwd, c(100.0 * 0.1f64.exp(), 0.0), 1e-8 * 100.0));

        let p = HestonParams { kappa: 1.0, theta_bar: 0.04, sigma_v: 1e-6, rho: -0.5, v0: 0.04 };
        for i in -40..=40 {
            let u = c(i as f64 * 0.5, 0.0);
            let a = cf_heston(u, 1.0, &m, &p);
            let b = cf_bs(u, 1.0, &m, 0.2);
            assert!((a - b).norm() <= 1e-4 * b.norm() + 1e-14, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn heston_is_continuous_for_long_maturities() {
        // Long maturity with strong correlation: the rotating-branch form
        // jumps here. Successive values along u must stay close.
        let m = ctx(1.0, 0.0);
        let p = HestonParams { kappa: 0.5, theta_bar: 0.3, sigma_v: 1.5, rho: -0.9, v0: 0.3 };
        let mut prev = cf_heston(c(0.0, 0.0), 10.0, &m, &p);
        for i in 1..4000 {
            let cur = cf_heston(c(i as f64 * 0.005, 0.0), 10.0, &m, &p);
            assert!((cur - prev).norm() < 0.05, "jump at u = {}", i as f64 * 0.005);
            prev = cur;
        }
    }

    #[test]
    fn bates_reduces_to_heston_and_is_martingale() {
        let m = ctx(100.0, 0.03);
        let b = BatesParams {
            kappa: 2.0,
            theta_bar: 0.25,
            eta: 0.6,
            rho: -0.2,
            v0: 0.2,
            lambda: 0.0,
            alpha: -0.1,
            delta_j: 0.3,
        };
        for i in -30..=30 {
            let u = c(i as f64 * 0.3, 0.0);
            assert!(close(cf_bates(u, 1.0, &m, &b), cf_heston(u, 1.0, &m, &b.heston()), 1e-12));
        }
        let b = BatesParams { lambda: 4.0, ..b };
        assert_eq!(cf_bates(c(0.0, 0.0), 1.0, &m, &b), c(1.0, 0.0));
        let fwd = cf_bates(c(0.0, -1.0), 1.0, &m, &b);
        assert!(close(fwd, c(100.0 * 0.03f64.exp(), 0.0), 1e-8 * 100.0));
    }

    #[test]
    fn handle_matches_free_functions() {
        let m = ctx(50.0, 0.01);
        let p = KouParams { sigma: 0.3, lambda: 2.0, p: 0.6, eta1: 8.0, eta2: 4.0 };
        let h = CharFnHandle::new(ModelParams::Kou(p), m).unwrap();
        let u = c(1.7, 0.0);
        assert!(close(h.eval(u, 0.5), cf_kou(u, 0.5, &m, &p), 1e-15));
    }
}
