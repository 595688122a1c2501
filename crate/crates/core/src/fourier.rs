//! European option pricing from a characteristic function by Fourier-cosine
//! series expansion of the log-price density over a truncated interval.
//!
//! The interval is set from numerical cumulants of the log-price,
//! `[c1 - L sqrt(c2 + sqrt(c4)), c1 + L sqrt(c2 + sqrt(c4))]`. Internally the
//! expansion runs in log-return coordinates `z = ln(S_tau / S_0)`, so the
//! spot only enters through the payoff coefficients and prices are exactly
//! homogeneous in `(S_0, K)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::charfn::CharFnHandle;
use crate::error::PricingError;
use crate::types::{CosConfig, OptionStyle};

/// Base finite-difference step for the cumulants.
pub const CUMULANT_STEP: f64 = 1e-3;

/// Cumulants of the log-price `ln S_tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
}

/// Log-price integration bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRange {
    pub a: f64,
    pub b: f64,
}

impl TruncationRange {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }
}

/// Cumulants of `ln(S_tau / S_0)` by Richardson-refined central differences.
fn increment_cumulants(cf: &CharFnHandle, tau: f64) -> Result<Cumulants, PricingError> {
    let psi = |u: f64| cf.log_increment(Complex64::new(u, 0.0), tau);
    let h = CUMULANT_STEP;
    let vals: Vec<Complex64> = [-4.0, -2.0, -1.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|&k| psi(k * h))
        .collect();
    if vals.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(PricingError::NumericalInstability(
            "non-finite log characteristic function near u = 0".into(),
        ));
    }
    let [m4, m2, m1, p1, p2, p4] = [vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]];
    let centre = psi(0.0);

    // first derivative of Im psi
    let d1 = |p: Complex64, m: Complex64, step: f64| (p.im - m.im) / (2.0 * step);
    let c1 = (4.0 * d1(p1, m1, h) - d1(p2, m2, 2.0 * h)) / 3.0;

    // second derivative of Re psi
    let d2 = |p: Complex64, m: Complex64, step: f64| -(p.re - 2.0 * centre.re + m.re) / (step * step);
    let c2 = (4.0 * d2(p1, m1, h) - d2(p2, m2, 2.0 * h)) / 3.0;

    // fourth derivative of Re psi, five-point stencils at h and 2h
    let d4 = |pp: Complex64, p: Complex64, m: Complex64, mm: Complex64, step: f64| {
        (pp.re - 4.0 * p.re + 6.0 * centre.re - 4.0 * m.re + mm.re) / step.powi(4)
    };
    let c4 = (4.0 * d4(p2, p1, m1, m2, h) - d4(p4, p2, m2, m4, 2.0 * h)) / 3.0;

    if !(c1.is_finite() && c2.is_finite() && c4.is_finite()) {
        return Err(PricingError::NumericalInstability("non-finite cumulants".into()));
    }
    Ok(Cumulants {
        c1,
        c2: c2.max(0.0),
        c4: c4.max(0.0),
    })
}

/// Numerical cumulants `(c1, c2, c4)` of `ln S_tau`.
pub fn cumulants_numeric(cf: &CharFnHandle, tau: f64) -> Result<Cumulants, PricingError> {
    let mut c = increment_cumulants(cf, tau)?;
    c.c1 += cf.context().spot.ln();
    Ok(c)
}

pub fn truncation_range(c: &Cumulants, trunc_mult: f64) -> Result<TruncationRange, PricingError> {
    let half = trunc_mult * (c.c2 + c.c4.sqrt()).sqrt();
    if !half.is_finite() {
        return Err(PricingError::NumericalInstability("non-finite truncation width".into()));
    }
    if half <= 0.0 {
        return Err(PricingError::DegenerateRange);
    }
    Ok(TruncationRange {
        a: c.c1 - half,
        b: c.c1 + half,
    })
}

/// One COS price with its convergence diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosPrice {
    pub price: f64,
    /// Magnitude of the last series term (already discounted).
    pub last_term: f64,
}

impl CosPrice {
    /// True when the last term is large relative to the price.
    pub fn poorly_converged(&self) -> bool {
        self.last_term > 1e-8 * self.price
    }
}

/// `int_c^d e^z cos(k pi (z - a)/(b - a)) dz` and
/// `int_c^d cos(k pi (z - a)/(b - a)) dz` for `k = 0..n`.
fn chi_psi(k: usize, w: f64, a: f64, c: f64, d: f64) -> (f64, f64) {
    let freq = k as f64 * PI / w;
    let (sd, cd) = (freq * (d - a)).sin_cos();
    let (sc, cc) = (freq * (c - a)).sin_cos();
    let (ed, ec) = (d.exp(), c.exp());
    let chi = (cd * ed - cc * ec + freq * (sd * ed - sc * ec)) / (1.0 + freq * freq);
    let psi = if k == 0 { d - c } else { (sd - sc) / freq };
    (chi, psi)
}

/// Prices several strikes of one maturity, sharing the characteristic
/// function evaluations.
pub fn cos_prices(
    cf: &CharFnHandle,
    options: &[(f64, OptionStyle)],
    tau: f64,
    cfg: &CosConfig,
) -> Result<Vec<CosPrice>, PricingError> {
    cfg.check()?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(PricingError::Domain(format!("tau must be positive, got {tau}")));
    }
    let ctx = cf.context();
    let spot = ctx.spot;
    let ln_spot = spot.ln();
    let range = truncation_range(&increment_cumulants(cf, tau)?, cfg.trunc_mult)?;
    let (a, b) = (range.a, range.b);
    let w = b - a;

    // Re{phi(u_k) e^{-i u_k a}} with the k = 0 term halved.
    let weights: Vec<f64> = (0..cfg.n_terms)
        .map(|k| {
            let u = k as f64 * PI / w;
            let z = cf.log_increment(Complex64::new(u, 0.0), tau) - Complex64::new(0.0, u * a);
            let term = z.exp().re;
            if k == 0 {
                0.5 * term
            } else {
                term
            }
        })
        .collect();
    if weights.iter().any(|x| !x.is_finite()) {
        return Err(PricingError::NumericalInstability(
            "non-finite characteristic function on the cosine grid".into(),
        ));
    }

    let discount = ctx.discount(tau);
    options
        .iter()
        .map(|&(strike, style)| {
            if !(strike.is_finite() && strike > 0.0) {
                return Err(PricingError::Domain(format!("strike must be positive, got {strike}")));
            }
            let log_k = (strike / spot).ln();
            if !range.contains(log_k) {
                return Err(PricingError::OutOfRange {
                    log_strike: strike.ln(),
                    a: a + ln_spot,
                    b: b + ln_spot,
                });
            }
            let mut sum = 0.0;
            let mut last = 0.0;
            for (k, &wk) in weights.iter().enumerate() {
                let coef = match style {
                    OptionStyle::Call => {
                        let (chi, psi) = chi_psi(k, w, a, log_k, b);
                        spot * chi - strike * psi
                    }
                    OptionStyle::Put => {
                        let (chi, psi) = chi_psi(k, w, a, a, log_k);
                        strike * psi - spot * chi
                    }
                };
                last = wk * coef;
                sum += last;
            }
            let scale = 2.0 / w * discount;
            Ok(CosPrice {
                price: (scale * sum).max(0.0),
                last_term: (scale * last).abs(),
            })
        })
        .collect()
}

pub fn cos_price(
    cf: &CharFnHandle,
    strike: f64,
    tau: f64,
    style: OptionStyle,
    cfg: &CosConfig,
) -> Result<f64, PricingError> {
    let out = cos_prices(cf, &[(strike, style)], tau, cfg)?[0];
    if out.poorly_converged() {
        log::debug!(
            "cosine series not converged at K = {strike}: last term {} vs price {}",
            out.last_term,
            out.price
        );
    }
    Ok(out.price)
}
