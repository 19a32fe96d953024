#![allow(dead_code)]

use mmo_core::integrator::{sde_terminal_from_increments, GeometricBrownian, Scheme};
use mmo_core::normal_form::normal_cdf;
use mmo_core::rng::{brownian_increments, path_seed};

/// Kolmogorov–Smirnov distance between a sample and `N(mean, var)`.
pub fn ks_normal(samples: &[f64], mean: f64, var: f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let sd = var.sqrt();
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf((x - mean) / sd);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Mean absolute terminal error at `t = 1` of `scheme` on the geometric test
/// equation for step sizes `2^-k`, `k` in `levels`. Each path reuses one fine
/// Brownian path for every level.
pub fn gbm_strong_errors(g: &GeometricBrownian, levels: &[u32], paths: usize, seed: u64, scheme: Scheme) -> Vec<(f64, f64)> {
    let finest = *levels.iter().max().unwrap();
    let n_fine = 1usize << finest;
    let dt_fine = 1.0 / n_fine as f64;
    let mut err = vec![0.0; levels.len()];
    for p in 0..paths {
        let fine = brownian_increments(path_seed(seed, p as u64), n_fine, dt_fine);
        let bt: f64 = fine.iter().map(|d| d[0]).sum();
        let exact = g.exact(1.0, 1.0, bt);
        for (e, &k) in err.iter_mut().zip(levels) {
            let m = 1usize << (finest - k);
            let coarse: Vec<[f64; 2]> = fine
                .chunks(m)
                .map(|c| c.iter().fold([0.0, 0.0], |a, d| [a[0] + d[0], a[1] + d[1]]))
                .collect();
            let x = sde_terminal_from_increments(g, [1.0, 1.0], 1.0 / (1u64 << k) as f64, &coarse, scheme);
            *e += (x[0] - exact).abs();
        }
    }
    levels
        .iter()
        .zip(err)
        .map(|(&k, e)| (1.0 / (1u64 << k) as f64, e / paths as f64))
        .collect()
}

/// Least-squares slope of `log err` against `log dt`.
pub fn fitted_order(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Time derivative of the transformation along `v` at `s`, by central
/// differences with one Richardson step.
pub fn directional_derivative<F: Fn([f64; 2]) -> [f64; 2]>(f: F, s: [f64; 2], v: [f64; 2], h: f64) -> [f64; 2] {
    let d = |h: f64| {
        let a = f([s[0] + h * v[0], s[1] + h * v[1]]);
        let b = f([s[0] - h * v[0], s[1] - h * v[1]]);
        [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
    };
    let (d1, d2) = (d(h), d(h / 2.0));
    [(4.0 * d2[0] - d1[0]) / 3.0, (4.0 * d2[1] - d1[1]) / 3.0]
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
