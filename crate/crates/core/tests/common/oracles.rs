//! Independent reference computations used only by tests. None of these call
//! into the library's numerical code.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

fn ln_beta(a: f64, b: f64) -> f64 {
    statrs::function::gamma::ln_gamma(a) + statrs::function::gamma::ln_gamma(b) - statrs::function::gamma::ln_gamma(a + b)
}

/// Tanh-sinh quadrature of the Beta(a, b) density over [lo, hi]. Distances
/// to both endpoints are carried separately so endpoint singularities are
/// integrated without cancellation.
fn tanh_sinh_beta(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let half = 0.5 * (hi - lo);
    let lb = ln_beta(a, b);
    let density = |d_lo: f64, d_hi: f64| {
        // x = lo + d_lo, 1 - x = (1 - hi) + d_hi
        let x = lo + d_lo;
        let one_minus = (1.0 - hi) + d_hi;
        if x <= 0.0 || one_minus <= 0.0 {
            return 0.0;
        }
        ((a - 1.0) * x.ln() + (b - 1.0) * one_minus.ln() - lb).exp()
    };
    let term = |t: f64| {
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // hi - x and x - lo without cancellation
        let d_hi = half * 2.0 / ((2.0 * u).exp() + 1.0);
        let d_lo = half * 2.0 / ((-2.0 * u).exp() + 1.0);
        if !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        half * w * density(d_lo, d_hi)
    };

    let t_max = 7.0;
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += term(t) + term(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += term(t) + term(-t);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() < 1e-15 && h < 0.02 {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Beta(a, b) probability of [lo, hi] by quadrature, split at the mode so a
/// sharp interior peak is always at a panel endpoint.
pub fn beta_mass_quadrature(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let mut cuts = vec![lo];
    if a > 1.0 && b > 1.0 {
        let mode = (a - 1.0) / (a + b - 2.0);
        let sd = (a * b / ((a + b).powi(2) * (a + b + 1.0))).sqrt();
        for c in [mode - 3.0 * sd, mode, mode + 3.0 * sd] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
    }
    cuts.push(hi);
    cuts.windows(2).map(|w| tanh_sinh_beta(a, b, w[0], w[1])).sum()
}

/// Weighted binomial log-likelihood of a logistic curve on covariate `t`.
pub fn weighted_loglik(cells: &[(f64, f64, f64, f64)], a: f64, b: f64) -> f64 {
    cells
        .iter()
        .map(|&(t, y, n, w)| {
            let eta = a + b * t;
            let log_sigmoid = |e: f64| e.min(0.0) - (-e.abs()).exp().ln_1p();
            w * (y * log_sigmoid(eta) + (n - y) * log_sigmoid(-eta))
        })
        .sum()
}

/// Maximum-likelihood logistic fit by grid search with refinement: a 5x5
/// grid around the incumbent on a centered and scaled covariate, recentred
/// on the best point, halving the spacing only when the centre wins.
/// `cells` are `(t, responders, total, weight)`; returns `(a, b)` on `t`.
pub fn grid_search_mle(cells: &[(f64, f64, f64, f64)]) -> (f64, f64) {
    let tw: f64 = cells.iter().map(|c| c.3 * c.2).sum();
    let center = cells.iter().map(|c| c.3 * c.2 * c.0).sum::<f64>() / tw;
    let lo = cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let hi = cells.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let scale = 0.5 * (hi - lo);
    let z: Vec<(f64, f64, f64, f64)> = cells.iter().map(|&(t, y, n, w)| ((t - center) / scale, y, n, w)).collect();

    let (mut al, mut be) = (0.0f64, 0.0f64);
    let mut best = weighted_loglik(&z, al, be);
    let mut step = 1.0;
    let mut iterations = 0;
    while step > 1e-11 && iterations < 200_000 {
        iterations += 1;
        let (mut ba, mut bb, mut bv) = (al, be, best);
        for i in -2..=2 {
            for j in -2..=2 {
                let (ca, cb) = (al + i as f64 * step, be + j as f64 * step);
                let v = weighted_loglik(&z, ca, cb);
                if v > bv {
                    (ba, bb, bv) = (ca, cb, v);
                }
            }
        }
        if ba == al && bb == be {
            step *= 0.5;
        } else {
            (al, be, best) = (ba, bb, bv);
        }
    }
    (al - be * center / scale, be / scale)
}

/// Weighted isotonic regression by dynamic programming over a grid of
/// `1 / resolution` spacing on [0, 1]: exact minimizer of the weighted SSE
/// among nondecreasing grid-valued vectors.
pub fn isotonic_grid_dp(rates: &[f64], weights: &[f64], resolution: usize) -> Vec<f64> {
    let g = resolution + 1;
    let value = |k: usize| k as f64 / resolution as f64;
    let n = rates.len();
    let mut cost = vec![0.0; g];
    let mut choice: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (i, (&r, &w)) in rates.iter().zip(weights).enumerate() {
        let mut next = vec![0.0; g];
        let mut arg = vec![0usize; g];
        let mut run_min = f64::INFINITY;
        let mut run_arg = 0;
        for k in 0..g {
            if i > 0 && cost[k] < run_min {
                run_min = cost[k];
                run_arg = k;
            }
            let prev = if i == 0 { 0.0 } else { run_min };
            next[k] = w * (r - value(k)).powi(2) + prev;
            arg[k] = run_arg;
        }
        cost = next;
        choice.push(arg);
    }
    let mut k = (0..g).min_by(|&a, &b| cost[a].total_cmp(&cost[b])).unwrap();
    let mut out = vec![0.0; n];
    for i in (0..n).rev() {
        out[i] = value(k);
        k = choice[i][k];
    }
    out
}

/// Parametric simulation of the Wald lower bound of `a + b * x` at level
/// `level`: draws `(a, b)` from N(mean, cov) and returns the empirical
/// `(1 - level) / 2` quantile of the linear predictor.
pub fn simulated_lower_predictor(mean: [f64; 2], cov: [[f64; 2]; 2], x: f64, level: f64, draws: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let l11 = cov[0][0].sqrt();
    let l21 = cov[1][0] / l11;
    let l22 = (cov[1][1] - l21 * l21).max(0.0).sqrt();
    let mut etas: Vec<f64> = (0..draws)
        .map(|_| {
            // Box-Muller
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            let (z1, z2) = (r * (2.0 * std::f64::consts::PI * u2).cos(), r * (2.0 * std::f64::consts::PI * u2).sin());
            let a = mean[0] + l11 * z1;
            let b = mean[1] + l21 * z1 + l22 * z2;
            a + b * x
        })
        .collect();
    etas.sort_by(f64::total_cmp);
    let q = (1.0 - level) / 2.0;
    etas[((draws as f64) * q).floor() as usize]
}

pub fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Stage-1 rule applied by hand to quadrature interval masses.
pub fn stage1_oracle(
    prior: (f64, f64),
    n: u32,
    x: u32,
    p_t: f64,
    eps: (f64, f64),
    gamma: f64,
    exclusion: f64,
    control: bool,
) -> &'static str {
    let (a, b) = (prior.0 + x as f64, prior.1 + (n - x) as f64);
    let d1 = p_t - eps.0;
    let d2 = p_t + eps.1;
    let under = beta_mass_quadrature(a, b, 0.0, d1);
    let target = beta_mass_quadrature(a, b, d1, d2);
    let over = beta_mass_quadrature(a, b, d2, 1.0);
    let (u1, u2, u3) = (under / d1, target / (d2 - d1), over / (1.0 - d2));
    // Near-exact ties go to the conservative side.
    let ge = |a: f64, b: f64| a >= b - 1e-9;
    let mut call = if ge(u3, u2) && ge(u3, u1) {
        "de_escalate"
    } else if ge(u2, u1) {
        "stay"
    } else {
        "escalate"
    };
    let forced = control && over >= gamma;
    if forced {
        call = "de_escalate";
    }
    if over >= exclusion && (forced || !control) {
        call = "de_escalate_and_exclude";
    }
    call
}
