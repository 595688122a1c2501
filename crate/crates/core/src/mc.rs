//! Monte Carlo pricers for all six models, used as an independent check on
//! the closed-form and Fourier prices.
//!
//! Black-Scholes, Merton, Kou and variance gamma are sampled exactly at
//! maturity with antithetic Gaussian draws. Heston and Bates use a
//! full-truncation Euler scheme on the log price; Bates jumps are
//! independent of the diffusion and are added exactly at maturity.
//!
//! Paths are split into fixed-size chunks, each drawing from its own ChaCha
//! stream keyed by the chunk index, and chunk statistics are merged
//! pairwise in index order. Results therefore do not depend on how the
//! chunks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::charfn::{bates_mean_jump, kou_drift, vg_omega};
use crate::error::McError;
use crate::types::{
    BatesParams, HestonParams, KouParams, MarketContext, MjdParams, ModelKind, ModelParams,
    OptionStyle, VgParams,
};

/// Samples per random substream.
const CHUNK_SAMPLES: usize = 2048;
pub const MIN_PATHS: usize = 10_000;
pub const MIN_SV_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_paths: usize,
    /// Uniform time steps over the option life (Heston and Bates only).
    pub n_steps: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn check(&self, kind: ModelKind) -> Result<(), McError> {
        if self.n_paths < MIN_PATHS {
            return Err(McError::InvalidConfig(format!(
                "n_paths must be at least {MIN_PATHS}, got {}",
                self.n_paths
            )));
        }
        if matches!(kind, ModelKind::Heston | ModelKind::Bates) && self.n_steps < MIN_SV_STEPS {
            return Err(McError::InvalidConfig(format!(
                "stochastic-volatility models need at least {MIN_SV_STEPS} steps, got {}",
                self.n_steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Payoff(f64, OptionStyle),
    /// Discounted terminal price over spot.
    Forward,
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Stats {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: Stats, b: Stats) -> Stats {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        Stats {
            n,
            mean: a.mean + delta * (b.n / n),
            m2: a.m2 + b.m2 + delta * delta * (a.n * b.n / n),
        }
    }

    fn estimate(&self) -> McEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        McEstimate {
            price: self.mean,
            std_error: (var / self.n).sqrt(),
        }
    }
}

fn pairwise(stats: &[Stats]) -> Stats {
    match stats.len() {
        0 => Stats::default(),
        1 => stats[0],
        n => {
            let (l, r) = stats.split_at(n / 2);
            Stats::merge(pairwise(l), pairwise(r))
        }
    }
}

/// Per-model terminal sampler. Antithetic samplers return two log-returns
/// per sample; the others return one.
enum Sampler {
    Exact {
        drift: f64,
        vol: f64,
        jumps: Jumps,
    },
    Vg {
        drift: f64,
        params: VgParams,
        time: Gamma<f64>,
    },
    Euler {
        rate: f64,
        heston: HestonParams,
        n_steps: usize,
        tau: f64,
        jumps: Jumps,
        jump_drift: f64,
    },
}

enum Jumps {
    None,
    LogNormal { count: Poisson<f64>, mean: f64, sd: f64 },
    DoubleExp { count: Poisson<f64>, p: f64, up: Exp<f64>, down: Exp<f64> },
}

impl Jumps {
    fn log_normal(intensity: f64, mean: f64, sd: f64) -> Result<Self, McError> {
        if intensity == 0.0 {
            return Ok(Jumps::None);
        }
        Ok(Jumps::LogNormal { count: poisson(intensity)?, mean, sd })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Jumps::None => 0.0,
            Jumps::LogNormal { count, mean, sd } => {
                let n = count.sample(rng);
                if n == 0.0 {
                    0.0
                } else {
                    let z: f64 = rng.sample(StandardNormal);
                    n * mean + sd * n.sqrt() * z
                }
            }
            Jumps::DoubleExp { count, p, up, down } => {
                let n = count.sample(rng) as u64;
                (0..n)
                    .map(|_| {
                        if rng.random::<f64>() < *p {
                            up.sample(rng)
                        } else {
                            -down.sample(rng)
                        }
                    })
                    .sum()
            }
        }
    }
}

fn poisson(mean: f64) -> Result<Poisson<f64>, McError> {
    Poisson::new(mean).map_err(|e| McError::InvalidParams(format!("jump count: {e}")))
}

/// One full-truncation Euler step of the variance process. Returns the
/// next raw variance and the truncated value used in the coefficients.
pub(crate) fn full_truncation_step(
    v: f64,
    kappa: f64,
    theta: f64,
    sigma: f64,
    dt: f64,
    z: f64,
) -> (f64, f64) {
    let v_plus = v.max(0.0);
    let next = v + kappa * (theta - v_plus) * dt + sigma * (v_plus * dt).sqrt() * z;
    (next, v_plus)
}

impl Sampler {
    fn new(model: &ModelParams, ctx: &MarketContext, tau: f64, cfg: &McConfig) -> Result<Self, McError> {
        let r = ctx.rate;
        Ok(match *model {
            ModelParams::Bs(p) => Sampler::Exact {
                drift: (r - 0.5 * p.sigma * p.sigma) * tau,
                vol: p.sigma * tau.sqrt(),
                jumps: Jumps::None,
            },
            ModelParams::Mjd(params) => {
                let MjdParams { sigma, lambda, m, delta } = params;
                Sampler::Exact {
                    drift: (r - 0.5 * sigma * sigma - lambda * (m - 1.0)) * tau,
                    vol: sigma * tau.sqrt(),
                    jumps: Jumps::log_normal(lambda * tau, params.log_jump_mean(), delta)?,
                }
            }
            ModelParams::Kou(p) => {
                let KouParams { sigma, lambda, p: up_prob, eta1, eta2 } = p;
                let jumps = if lambda == 0.0 {
                    Jumps::None
                } else {
                    Jumps::DoubleExp {
                        count: poisson(lambda * tau)?,
                        p: up_prob,
                        up: Exp::new(eta1).map_err(|e| McError::InvalidParams(e.to_string()))?,
                        down: Exp::new(eta2).map_err(|e| McError::InvalidParams(e.to_string()))?,
                    }
                };
                Sampler::Exact {
                    drift: kou_drift(&p, ctx) * tau,
                    vol: sigma * tau.sqrt(),
                    jumps,
                }
            }
            ModelParams::Vg(p) => {
                let omega = vg_omega(&p).map_err(|e| McError::InvalidParams(e.to_string()))?;
                Sampler::Vg {
                    drift: (r + omega) * tau,
                    params: p,
                    time: Gamma::new(tau / p.nu, p.nu)
                        .map_err(|e| McError::InvalidParams(format!("gamma time: {e}")))?,
                }
            }
            ModelParams::Heston(h) => Sampler::Euler {
                rate: r,
                heston: h,
                n_steps: cfg.n_steps,
                tau,
                jumps: Jumps::None,
                jump_drift: 0.0,
            },
            ModelParams::Bates(b) => {
                let BatesParams { lambda, alpha, delta_j, .. } = b;
                Sampler::Euler {
                    rate: r,
                    heston: b.heston(),
                    n_steps: cfg.n_steps,
                    tau,
                    jumps: Jumps::log_normal(lambda * tau, alpha, delta_j)?,
                    jump_drift: -lambda * bates_mean_jump(&b),
                }
            }
        })
    }

    fn antithetic(&self) -> bool {
        !matches!(self, Sampler::Euler { .. })
    }

    /// Fills `out` with the log-returns of one sample and returns how many.
    fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64; 2]) -> usize {
        match self {
            Sampler::Exact { drift, vol, jumps } => {
                let z: f64 = rng.sample(StandardNormal);
                let j = jumps.sample(rng);
                out[0] = drift + vol * z + j;
                out[1] = drift - vol * z + j;
                2
            }
            Sampler::Vg { drift, params, time } => {
                let g = time.sample(rng);
                let z: f64 = rng.sample(StandardNormal);
                let base = drift + params.theta * g;
                let diff = params.sigma * g.sqrt() * z;
                out[0] = base + diff;
                out[1] = base - diff;
                2
            }
            Sampler::Euler { rate, heston, n_steps, tau, jumps, jump_drift } => {
                let HestonParams { kappa, theta_bar, sigma_v, rho, v0 } = *heston;
                let dt = tau / *n_steps as f64;
                let ortho = (1.0 - rho * rho).max(0.0).sqrt();
                let mut x = 0.0;
                let mut v = v0;
                for _ in 0..*n_steps {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let zv = rho * z1 + ortho * z2;
                    let (next, v_plus) = full_truncation_step(v, kappa, theta_bar, sigma_v, dt, zv);
                    x += (rate + jump_drift - 0.5 * v_plus) * dt + (v_plus * dt).sqrt() * z1;
                    v = next;
                }
                out[0] = x + jumps.sample(rng);
                1
            }
        }
    }
}

fn simulate(
    model: &ModelParams,
    ctx: &MarketContext,
    tau: f64,
    targets: &[Target],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>, McError> {
    model
        .validate()
        .map_err(|e| McError::InvalidParams(e.to_string()))?;
    ctx.check().map_err(|e| McError::InvalidParams(e.to_string()))?;
    cfg.check(model.kind())?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(McError::InvalidConfig(format!("tau must be positive, got {tau}")));
    }
    for t in targets {
        if let Target::Payoff(k, _) = t {
            if !(k.is_finite() && *k > 0.0) {
                return Err(McError::InvalidConfig(format!("strike must be positive, got {k}")));
            }
        }
    }

    let sampler = Sampler::new(model, ctx, tau, cfg)?;
    let n_samples = if sampler.antithetic() {
        cfg.n_paths.div_ceil(2)
    } else {
        cfg.n_paths
    };
    let n_chunks = n_samples.div_ceil(CHUNK_SAMPLES);
    // ChaCha streams hold 2^68 bytes; keep a wide margin per chunk.
    let draws_per_sample = 2 * cfg.n_steps as u128 + 64;
    if u64::try_from(n_chunks).is_err() || CHUNK_SAMPLES as u128 * draws_per_sample * 8 > 1u128 << 64 {
        return Err(McError::StreamExhausted(format!(
            "{n_chunks} chunks of {CHUNK_SAMPLES} samples with {} steps",
            cfg.n_steps
        )));
    }

    let discount = ctx.discount(tau);
    let spot = ctx.spot;
    let chunk_stats: Vec<Vec<Stats>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk as u64);
            let start = chunk * CHUNK_SAMPLES;
            let end = (start + CHUNK_SAMPLES).min(n_samples);
            let mut stats = vec![Stats::default(); targets.len()];
            let mut buf = [0.0; 2];
            for _ in start..end {
                let n = sampler.sample(&mut rng, &mut buf);
                for (target, st) in targets.iter().zip(stats.iter_mut()) {
                    let mut acc = 0.0;
                    for &x in &buf[..n] {
                        let s_t = spot * x.exp();
                        acc += match *target {
                            Target::Payoff(k, OptionStyle::Call) => (s_t - k).max(0.0),
                            Target::Payoff(k, OptionStyle::Put) => (k - s_t).max(0.0),
                            Target::Forward => s_t / spot,
                        };
                    }
                    st.push(discount * acc / n as f64);
                }
            }
            stats
        })
        .collect();

    Ok((0..targets.len())
        .map(|i| {
            let column: Vec<Stats> = chunk_stats.iter().map(|c| c[i]).collect();
            pairwise(&column).estimate()
        })
        .collect())
}

/// Discounted mean payoff and its standard error.
pub fn mc_price(
    model: &ModelParams,
    ctx: &MarketContext,
    strike: f64,
    tau: f64,
    style: OptionStyle,
    cfg: &McConfig,
) -> Result<McEstimate, McError> {
    Ok(simulate(model, ctx, tau, &[Target::Payoff(strike, style)], cfg)?[0])
}

/// Several strikes from one set of paths.
pub fn mc_prices(
    model: &ModelParams,
    ctx: &MarketContext,
    options: &[(f64, OptionStyle)],
    tau: f64,
    cfg: &McConfig,
) -> Result<Vec<McEstimate>, McError> {
    let targets: Vec<Target> = options.iter().map(|&(k, s)| Target::Payoff(k, s)).collect();
    simulate(model, ctx, tau, &targets, cfg)
}

/// Simulated `E[S_tau] e^{-r tau} / S_0`; 1 for a correctly compensated model.
pub fn mc_martingale_check(
    model: &ModelParams,
    ctx: &MarketContext,
    tau: f64,
    cfg: &McConfig,
) -> Result<McEstimate, McError> {
    Ok(simulate(model, ctx, tau, &[Target::Forward], cfg)?[0])
}
