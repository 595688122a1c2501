//! Bounded Nelder-Mead on the unit cube, plus the Latin-hypercube start
//! design used by calibration.
//!
//! Points leaving the cube are projected back onto it. Coefficients follow
//! the dimension-adaptive scheme of Gao and Han, which behaves better than
//! the textbook values beyond a few dimensions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Start points generated per design block.
pub const LHS_BLOCK: usize = 64;
pub const DIAMETER_TOL: f64 = 1e-6;
const INITIAL_STEP: f64 = 0.1;
const RESTART_STEP: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmOptions {
    /// Improvement threshold over the last `2 * dim` iterations.
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

fn simplex_around(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut pts = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut p = x0.to_vec();
        p[i] += if p[i] + step <= 1.0 { step } else { -step };
        pts.push(p);
    }
    pts
}

fn diameter(pts: &[Vec<f64>]) -> f64 {
    let best = &pts[0];
    pts[1..]
        .iter()
        .map(|p| p.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Combination `c + t (c - w)` projected onto the cube.
fn toward(c: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    let mut p: Vec<f64> = c.iter().zip(w).map(|(ci, wi)| ci + t * (ci - wi)).collect();
    clamp_unit(&mut p);
    p
}

struct Simplex<'a, F> {
    f: &'a F,
    pts: Vec<Vec<f64>>,
    vals: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> Simplex<'_, F> {
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.pts.len()).collect();
        // Stable sort keeps ties in insertion order.
        idx.sort_by(|&a, &b| self.vals[a].total_cmp(&self.vals[b]));
        self.pts = idx.iter().map(|&i| self.pts[i].clone()).collect();
        self.vals = idx.iter().map(|&i| self.vals[i]).collect();
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        if v.is_nan() { f64::INFINITY } else { v }
    }

    fn step(&mut self, coef: &Coefficients) {
        let n = self.pts.len() - 1;
        let mut centroid = vec![0.0; n];
        for p in &self.pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = self.pts[n].clone();
        let xr = toward(&centroid, &worst, coef.reflect);
        let fr = self.eval(&xr);
        if fr < self.vals[0] {
            let xe = toward(&centroid, &worst, coef.expand);
            let fe = self.eval(&xe);
            if fe < fr {
                self.replace_worst(xe, fe);
            } else {
                self.replace_worst(xr, fr);
            }
        } else if fr < self.vals[n - 1] {
            self.replace_worst(xr, fr);
        } else {
            let outside = fr < self.vals[n];
            let t = if outside { coef.contract } else { -coef.contract };
            let xc = toward(&centroid, &worst, t);
            let fc = self.eval(&xc);
            let accept = if outside { fc <= fr } else { fc < self.vals[n] };
            if accept {
                self.replace_worst(xc, fc);
            } else {
                self.shrink(coef.shrink);
            }
        }
        self.sort();
    }

    fn replace_worst(&mut self, x: Vec<f64>, v: f64) {
        let n = self.pts.len() - 1;
        self.pts[n] = x;
        self.vals[n] = v;
    }

    fn shrink(&mut self, s: f64) {
        let best = self.pts[0].clone();
        for i in 1..self.pts.len() {
            let p: Vec<f64> = best.iter().zip(&self.pts[i]).map(|(b, x)| b + s * (x - b)).collect();
            self.vals[i] = self.eval(&p);
            self.pts[i] = p;
        }
    }
}

struct Coefficients {
    reflect: f64,
    expand: f64,
    contract: f64,
    shrink: f64,
}

impl Coefficients {
    fn adaptive(n: usize) -> Self {
        let n = n as f64;
        Coefficients {
            reflect: 1.0,
            expand: 1.0 + 2.0 / n,
            contract: 0.75 - 0.5 / n,
            shrink: 1.0 - 1.0 / n,
        }
    }
}

/// Minimizes `f` over `[0,1]^d` starting from `x0`.
///
/// After the convergence test first passes, the simplex is rebuilt around
/// the best point; the search stops once a rebuilt simplex converges
/// without a meaningful improvement.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &NmOptions) -> NmResult {
    let dim = x0.len();
    let window = 2 * dim;
    let coef = Coefficients::adaptive(dim.max(2));
    let mut start = x0.to_vec();
    clamp_unit(&mut start);

    let build = |pts: Vec<Vec<f64>>| {
        let mut s = Simplex { f, vals: Vec::new(), pts: Vec::new() };
        s.vals = pts.iter().map(|p| s.eval(p)).collect();
        s.pts = pts;
        s.sort();
        s
    };

    let mut simplex = build(simplex_around(&start, INITIAL_STEP));
    let mut history = vec![simplex.vals[0]];
    let mut iterations = 0;
    let mut converged = false;
    let mut restart_base = f64::INFINITY;

    while iterations < opts.max_iters {
        simplex.step(&coef);
        iterations += 1;
        history.push(simplex.vals[0]);

        let stalled = history.len() > window && {
            let then = history[history.len() - 1 - window];
            let now = simplex.vals[0];
            then == now || then - now < opts.tol
        };
        if !(stalled && diameter(&simplex.pts) < DIAMETER_TOL) {
            continue;
        }
        let best = simplex.vals[0];
        if !best.is_finite() || restart_base - best < opts.tol {
            converged = true;
            break;
        }
        restart_base = best;
        let mut s = simplex_around(&simplex.pts[0].clone(), RESTART_STEP);
        s.iter_mut().for_each(|p| clamp_unit(p));
        simplex = build(s);
        history.clear();
        history.push(simplex.vals[0]);
    }

    NmResult {
        x: simplex.pts[0].clone(),
        value: simplex.vals[0],
        iterations,
        converged,
    }
}

/// First `n` points of a nested Latin-hypercube design on `[0,1]^dim`.
/// Points come in stratified blocks of [`LHS_BLOCK`]; asking for more
/// points only appends, so the first `n` are the same for any larger `n`.
pub fn latin_hypercube(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut block = 0u64;
    while out.len() < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let strata: Vec<Vec<usize>> = (0..dim)
            .map(|_| {
                let mut perm: Vec<usize> = (0..LHS_BLOCK).collect();
                perm.shuffle(&mut rng);
                perm
            })
            .collect();
        for i in 0..LHS_BLOCK {
            if out.len() == n {
                break;
            }
            let point = strata
                .iter()
                .map(|perm| (perm[i] as f64 + rng.random::<f64>()) / LHS_BLOCK as f64)
                .collect();
            out.push(point);
        }
        block += 1;
    }
    out
}
