//! Domain types: market context, quotes, chains, model parameter sets and
//! the configuration / result records passed between modules.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, PricingError};

/// Futures level and discounting for one underlying on one trade date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketContext {
    /// Futures level in USD per coin.
    pub spot: f64,
    /// Annualised continuously-compounded risk-free rate.
    pub rate: f64,
    pub trade_date: Option<NaiveDate>,
}

impl MarketContext {
    pub fn new(spot: f64, rate: f64) -> Result<Self, PricingError> {
        let ctx = MarketContext {
            spot,
            rate,
            trade_date: None,
        };
        ctx.check()?;
        Ok(ctx)
    }

    pub fn with_trade_date(mut self, date: NaiveDate) -> Self {
        self.trade_date = Some(date);
        self
    }

    pub fn check(&self) -> Result<(), PricingError> {
        if !(self.spot.is_finite() && self.spot > 0.0) {
            return Err(PricingError::Domain(format!("spot must be positive, got {}", self.spot)));
        }
        if !self.rate.is_finite() {
            return Err(PricingError::Domain(format!("rate must be finite, got {}", self.rate)));
        }
        Ok(())
    }

    pub fn discount(&self, tau: f64) -> f64 {
        (-self.rate * tau).exp()
    }
}

/// ACT/365 year fraction between two calendar dates.
pub fn year_fraction_act365(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / 365.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionStyle {
    Call,
    Put,
}

impl OptionStyle {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptionStyle::Call => "call",
            OptionStyle::Put => "put",
        }
    }
}

impl fmt::Display for OptionStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptionStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(OptionStyle::Call),
            "put" | "p" => Ok(OptionStyle::Put),
            other => Err(format!("unknown option style `{other}`")),
        }
    }
}

/// One market observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub strike: f64,
    /// Time to expiry as a year fraction.
    pub maturity: f64,
    /// Market mid price in USD.
    pub price: f64,
    pub style: OptionStyle,
    pub expiry_label: String,
}

/// All quotes of one expiry, in chain order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpiryGroup {
    pub label: String,
    pub maturity: f64,
    pub quotes: Vec<OptionQuote>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionChain {
    pub context: MarketContext,
    pub quotes: Vec<OptionQuote>,
}

impl OptionChain {
    pub fn new(context: MarketContext, quotes: Vec<OptionQuote>) -> Self {
        OptionChain { context, quotes }
    }

    /// Groups quotes by expiry label in order of first appearance.
    pub fn expiries(&self) -> Vec<ExpiryGroup> {
        let mut groups: Vec<ExpiryGroup> = Vec::new();
        for q in &self.quotes {
            match groups.iter_mut().find(|g| g.label == q.expiry_label) {
                Some(g) => g.quotes.push(q.clone()),
                None => groups.push(ExpiryGroup {
                    label: q.expiry_label.clone(),
                    maturity: q.maturity,
                    quotes: vec![q.clone()],
                }),
            }
        }
        groups
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationRule {
    InvalidContext,
    NonFinite,
    NonPositiveStrike,
    NonPositiveMaturity,
    NegativePrice,
    CallAboveSpot,
    StrikesNotIncreasing,
    NonContiguousExpiry,
    InconsistentMaturity,
}

/// A broken chain invariant. `quote` is the zero-based index into
/// `OptionChain::quotes`, absent for chain-level rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub quote: Option<usize>,
    pub rule: ViolationRule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.quote {
            Some(i) => write!(f, "quote {i}: {:?}: {}", self.rule, self.detail),
            None => write!(f, "chain: {:?}: {}", self.rule, self.detail),
        }
    }
}

/// Checks every chain invariant and lists each violation found.
pub fn validate_chain(chain: &OptionChain) -> Vec<Violation> {
    let mut out = Vec::new();
    let ctx = &chain.context;
    if let Err(e) = ctx.check() {
        out.push(Violation {
            quote: None,
            rule: ViolationRule::InvalidContext,
            detail: e.to_string(),
        });
    }

    let mut seen_labels: Vec<&str> = Vec::new();
    for (i, q) in chain.quotes.iter().enumerate() {
        let mut push = |rule, detail: String| {
            out.push(Violation {
                quote: Some(i),
                rule,
                detail,
            })
        };
        if !(q.strike.is_finite() && q.maturity.is_finite() && q.price.is_finite()) {
            push(ViolationRule::NonFinite, "non-finite field".into());
            continue;
        }
        if q.strike <= 0.0 {
            push(ViolationRule::NonPositiveStrike, format!("strike = {}", q.strike));
        }
        if q.maturity <= 0.0 {
            push(ViolationRule::NonPositiveMaturity, format!("maturity = {}", q.maturity));
        }
        if q.price < 0.0 {
            push(ViolationRule::NegativePrice, format!("price = {}", q.price));
        }
        if q.style == OptionStyle::Call && q.price > ctx.spot {
            push(
                ViolationRule::CallAboveSpot,
                format!("call price {} exceeds spot {}", q.price, ctx.spot),
            );
        }

        let label = q.expiry_label.as_str();
        let prev_label = i.checked_sub(1).map(|j| chain.quotes[j].expiry_label.as_str());
        if prev_label != Some(label) {
            if seen_labels.contains(&label) {
                push(
                    ViolationRule::NonContiguousExpiry,
                    format!("expiry {label} reappears after another expiry"),
                );
            } else {
                seen_labels.push(label);
            }
        }

        // Compare against the previous quote of the same expiry.
        if let Some(prev) = chain.quotes[..i].iter().rev().find(|p| p.expiry_label == q.expiry_label) {
            if prev.maturity != q.maturity {
                push(
                    ViolationRule::InconsistentMaturity,
                    format!("maturity {} differs from {} within {label}", q.maturity, prev.maturity),
                );
            }
        }
        if let Some(prev) = chain.quotes[..i]
            .iter()
            .rev()
            .find(|p| p.expiry_label == q.expiry_label && p.style == q.style)
        {
            if q.strike <= prev.strike {
                push(
                    ViolationRule::StrikesNotIncreasing,
                    format!("strike {} not above previous {} within {label}", q.strike, prev.strike),
                );
            }
        }
    }
    out
}

/// The six pricing models, in the row order used by rendered error tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    Bs,
    Heston,
    Kou,
    Mjd,
    Bates,
    Vg,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Bs,
        ModelKind::Heston,
        ModelKind::Kou,
        ModelKind::Mjd,
        ModelKind::Bates,
        ModelKind::Vg,
    ];

    /// Tag used in files and on the command line.
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Bs => "BS",
            ModelKind::Heston => "Heston",
            ModelKind::Kou => "Kou",
            ModelKind::Mjd => "MJD",
            ModelKind::Bates => "Bates",
            ModelKind::Vg => "VG",
        }
    }

    /// Row label in rendered error tables.
    pub fn table_name(&self) -> &'static str {
        match self {
            ModelKind::Bates => "SVJ",
            other => other.tag(),
        }
    }

    pub fn bounds(&self) -> &'static [ParamBound] {
        match self {
            ModelKind::Bs => &BS_BOUNDS,
            ModelKind::Vg => &VG_BOUNDS,
            ModelKind::Mjd => &MJD_BOUNDS,
            ModelKind::Kou => &KOU_BOUNDS,
            ModelKind::Heston => &HESTON_BOUNDS,
            ModelKind::Bates => &BATES_BOUNDS,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds().len()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bs" | "black-scholes" | "blackscholes" => Ok(ModelKind::Bs),
            "heston" => Ok(ModelKind::Heston),
            "kou" => Ok(ModelKind::Kou),
            "mjd" | "merton" => Ok(ModelKind::Mjd),
            "bates" | "svj" => Ok(ModelKind::Bates),
            "vg" | "variance-gamma" => Ok(ModelKind::Vg),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

/// Box constraint on one model parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBound {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl ParamBound {
    const fn open_closed(name: &'static str, lo: f64, hi: f64) -> Self {
        ParamBound { name, lo, hi, lo_open: true, hi_open: false }
    }

    const fn closed(name: &'static str, lo: f64, hi: f64) -> Self {
        ParamBound { name, lo, hi, lo_open: false, hi_open: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        x.is_finite() && above && below
    }

    /// Closed interval used by the optimizer: open ends are pulled inward
    /// by a small fraction of the width.
    pub fn search_interval(&self) -> (f64, f64) {
        let inset = 1e-4 * (self.hi - self.lo);
        let lo = if self.lo_open { self.lo + inset } else { self.lo };
        let hi = if self.hi_open { self.hi - inset } else { self.hi };
        (lo, hi)
    }

    fn describe(&self) -> String {
        format!(
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }

    fn check(&self, x: f64) -> Result<(), ParamError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(ParamError {
                name: self.name,
                value: x,
                interval: self.describe(),
            })
        }
    }
}

const BS_BOUNDS: [ParamBound; 1] = [ParamBound::open_closed("sigma", 0.0, 5.0)];
const VG_BOUNDS: [ParamBound; 3] = [
    ParamBound::open_closed("sigma", 0.0, 5.0),
    ParamBound::closed("theta", -3.0, 3.0),
    ParamBound::open_closed("nu", 0.0, 5.0),
];
const MJD_BOUNDS: [ParamBound; 4] = [
    ParamBound::open_closed("sigma", 0.0, 5.0),
    ParamBound::closed("lambda", 0.0, 25.0),
    ParamBound::open_closed("m", 0.0, 3.0),
    ParamBound::open_closed("delta", 0.0, 3.0),
];
const KOU_BOUNDS: [ParamBound; 5] = [
    ParamBound::open_closed("sigma", 0.0, 5.0),
    ParamBound::closed("lambda", 0.0, 25.0),
    ParamBound::closed("p", 0.0, 1.0),
    ParamBound::open_closed("eta1", 1.0, 50.0),
    ParamBound::open_closed("eta2", 0.0, 50.0),
];
const HESTON_BOUNDS: [ParamBound; 5] = [
    ParamBound::open_closed("kappa", 0.0, 50.0),
    ParamBound::open_closed("theta_bar", 0.0, 4.0),
    ParamBound::open_closed("sigma_v", 0.0, 100.0),
    ParamBound::closed("rho", -1.0, 1.0),
    ParamBound::open_closed("v0", 0.0, 4.0),
];
const BATES_BOUNDS: [ParamBound; 8] = [
    ParamBound::open_closed("kappa", 0.0, 50.0),
    ParamBound::open_closed("theta_bar", 0.0, 4.0),
    ParamBound::open_closed("eta", 0.0, 100.0),
    ParamBound::closed("rho", -1.0, 1.0),
    ParamBound::open_closed("v0", 0.0, 4.0),
    ParamBound::closed("lambda", 0.0, 25.0),
    ParamBound::closed("alpha", -2.0, 2.0),
    ParamBound::open_closed("delta_j", 0.0, 3.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgParams {
    pub sigma: f64,
    pub theta: f64,
    pub nu: f64,
}

/// Merton jump diffusion. `m` is the mean jump multiplier E[y]; the
/// log-jump mean is `ln(m) - delta^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MjdParams {
    pub sigma: f64,
    pub lambda: f64,
    pub m: f64,
    pub delta: f64,
}

impl MjdParams {
    pub fn log_jump_mean(&self) -> f64 {
        self.m.ln() - 0.5 * self.delta * self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KouParams {
    pub sigma: f64,
    pub lambda: f64,
    /// Probability of an upward jump.
    pub p: f64,
    /// Rate of upward jumps; must exceed 1.
    pub eta1: f64,
    /// Rate of downward jumps.
    pub eta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub kappa: f64,
    pub theta_bar: f64,
    pub sigma_v: f64,
    pub rho: f64,
    pub v0: f64,
}

/// Heston variance dynamics plus log-normal jumps with log-mean `alpha`
/// and log-volatility `delta_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatesParams {
    pub kappa: f64,
    pub theta_bar: f64,
    pub eta: f64,
    pub rho: f64,
    pub v0: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub delta_j: f64,
}

impl BatesParams {
    pub fn heston(&self) -> HestonParams {
        HestonParams {
            kappa: self.kappa,
            theta_bar: self.theta_bar,
            sigma_v: self.eta,
            rho: self.rho,
            v0: self.v0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Bs(BsParams),
    Vg(VgParams),
    Mjd(MjdParams),
    Kou(KouParams),
    Heston(HestonParams),
    Bates(BatesParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Bs(_) => ModelKind::Bs,
            ModelParams::Vg(_) => ModelKind::Vg,
            ModelParams::Mjd(_) => ModelKind::Mjd,
            ModelParams::Kou(_) => ModelKind::Kou,
            ModelParams::Heston(_) => ModelKind::Heston,
            ModelParams::Bates(_) => ModelKind::Bates,
        }
    }

    /// Parameter values in the order of `ModelKind::bounds`.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            ModelParams::Bs(p) => vec![p.sigma],
            ModelParams::Vg(p) => vec![p.sigma, p.theta, p.nu],
            ModelParams::Mjd(p) => vec![p.sigma, p.lambda, p.m, p.delta],
            ModelParams::Kou(p) => vec![p.sigma, p.lambda, p.p, p.eta1, p.eta2],
            ModelParams::Heston(p) => vec![p.kappa, p.theta_bar, p.sigma_v, p.rho, p.v0],
            ModelParams::Bates(p) => vec![
                p.kappa, p.theta_bar, p.eta, p.rho, p.v0, p.lambda, p.alpha, p.delta_j,
            ],
        }
    }

    /// Inverse of `to_vec`. Panics if `values` has the wrong length.
    pub fn from_slice(kind: ModelKind, v: &[f64]) -> Self {
        assert_eq!(v.len(), kind.dim(), "wrong parameter count for {kind}");
        match kind {
            ModelKind::Bs => ModelParams::Bs(BsParams { sigma: v[0] }),
            ModelKind::Vg => ModelParams::Vg(VgParams { sigma: v[0], theta: v[1], nu: v[2] }),
            ModelKind::Mjd => ModelParams::Mjd(MjdParams {
                sigma: v[0],
                lambda: v[1],
                m: v[2],
                delta: v[3],
            }),
            ModelKind::Kou => ModelParams::Kou(KouParams {
                sigma: v[0],
                lambda: v[1],
                p: v[2],
                eta1: v[3],
                eta2: v[4],
            }),
            ModelKind::Heston => ModelParams::Heston(HestonParams {
                kappa: v[0],
                theta_bar: v[1],
                sigma_v: v[2],
                rho: v[3],
                v0: v[4],
            }),
            ModelKind::Bates => ModelParams::Bates(BatesParams {
                kappa: v[0],
                theta_bar: v[1],
                eta: v[2],
                rho: v[3],
                v0: v[4],
                lambda: v[5],
                alpha: v[6],
                delta_j: v[7],
            }),
        }
    }

    /// `(name, value)` pairs in declaration order.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        self.kind()
            .bounds()
            .iter()
            .map(|b| b.name)
            .zip(self.to_vec())
            .collect()
    }

    /// Checks every field against its box.
    pub fn validate(&self) -> Result<(), ParamError> {
        for (b, x) in self.kind().bounds().iter().zip(self.to_vec()) {
            b.check(x)?;
        }
        Ok(())
    }
}

/// Fourier-cosine grid settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosConfig {
    pub n_terms: usize,
    /// Width multiplier L of the integration interval.
    pub trunc_mult: f64,
}

impl Default for CosConfig {
    fn default() -> Self {
        CosConfig {
            n_terms: 256,
            trunc_mult: 10.0,
        }
    }
}

impl CosConfig {
    pub fn new(n_terms: usize, trunc_mult: f64) -> Result<Self, PricingError> {
        let cfg = CosConfig { n_terms, trunc_mult };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), PricingError> {
        if self.n_terms < 16 || !self.n_terms.is_power_of_two() {
            return Err(PricingError::Domain(format!(
                "n_terms must be a power of two >= 16, got {}",
                self.n_terms
            )));
        }
        if !(self.trunc_mult >= 4.0 && self.trunc_mult.is_finite()) {
            return Err(PricingError::Domain(format!(
                "trunc_mult must be >= 4, got {}",
                self.trunc_mult
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Uniform,
    /// `1 / price^2`; zero-priced quotes get zero weight.
    InverseSquaredPrice,
    /// One weight per quote of the slice handed to calibration.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub weights: Weights,
    pub n_starts: usize,
    pub tol_objective: f64,
    pub max_iters: usize,
    pub otm_only: bool,
    /// Seed for the multi-start design.
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            weights: Weights::Uniform,
            n_starts: 8,
            tol_objective: 1e-12,
            max_iters: 4000,
            otm_only: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub params: ModelParams,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub expiry_label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rmse: f64,
    pub mae: f64,
    /// Undefined when an observed price is zero.
    pub mape: Option<f64>,
    /// Undefined when a price is at or below -1.
    pub msle: Option<f64>,
    pub n: usize,
    pub scope: String,
}
