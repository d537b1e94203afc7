//! Independent reference computations and fixtures shared by the
//! integration tests. Nothing here calls into the library's numerics.

#![allow(dead_code)]

use std::io::Write;

use genmetric::ActivationSet;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn normal(rng: &mut StdRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Prints a verdict line straight to stderr (bypassing libtest capture so
/// it shows up in normal `cargo test` output) and fails the test if needed.
pub fn verdict(criterion: &str, ok: bool, detail: impl AsRef<str>) {
    let line = format!(
        "[acceptance] {} {criterion}: {}\n",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{criterion}: {}", detail.as_ref());
}

/// N samples from N(mean, diag(sd²)).
pub fn gaussian_set(rng: &mut StdRng, n: usize, mean: &[f64], sd: &[f64]) -> ActivationSet {
    let d = mean.len();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for j in 0..d {
            data.push(mean[j] + sd[j] * normal(rng));
        }
    }
    ActivationSet::new(data, n, d, "synthetic", "test").unwrap()
}

/// N samples of a correlated D-dim Gaussian (x = μ + A z).
pub fn correlated_set(rng: &mut StdRng, n: usize, d: usize, shift: f64) -> ActivationSet {
    let a: Vec<f64> = (0..d * d).map(|_| normal(rng) / (d as f64).sqrt()).collect();
    let mu: Vec<f64> = (0..d).map(|_| shift + normal(rng)).collect();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
        for i in 0..d {
            data.push(mu[i] + (0..d).map(|k| a[i * d + k] * z[k]).sum::<f64>());
        }
    }
    ActivationSet::new(data, n, d, "synthetic", "test").unwrap()
}

/// Random symmetric positive definite matrix B Bᵀ + 0.1 I, as rows.
pub fn random_spd(rng: &mut StdRng, d: usize) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| normal(rng)).collect()).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let dot: f64 = (0..d).map(|k| b[i][k] * b[j][k]).sum();
                    dot + if i == j { 0.1 } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// Haar-ish random orthogonal matrix by Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(rng: &mut StdRng, d: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
        for _ in 0..2 {
            for u in &q {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    q
}

/// Applies x ↦ Q x to every row.
pub fn rotate(set: &ActivationSet, q: &[Vec<f64>]) -> ActivationSet {
    let d = set.dim();
    let mut data = Vec::with_capacity(set.n_samples() * d);
    for row in set.rows() {
        for qi in q {
            data.push(qi.iter().zip(row).map(|(a, b)| a * b).sum());
        }
    }
    ActivationSet::new(data, set.n_samples(), d, "synthetic", "test").unwrap()
}

/// Column means and the double-loop (N−1) covariance.
pub fn naive_moments(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for r in rows {
                s += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
            cov[i][j] = s / (n as f64 - 1.0);
        }
    }
    (mean, cov)
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Discrete Fréchet distance by enumerating every monotone coupling path.
pub fn frechet_brute_force(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn walk(a: &[Vec<f64>], b: &[Vec<f64>], i: usize, j: usize, worst: f64, best: &mut f64) {
        let worst = worst.max(euclid(&a[i], &b[j]));
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(worst);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, worst, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, worst, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, worst, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

/// W₁ between equal-size samples: mean |x₍ᵢ₎ − y₍ᵢ₎| of the sorted lists.
pub fn wasserstein_sorted(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    xs.iter().zip(&ys).map(|(a, b)| (a - b).abs()).sum::<f64>() / xs.len() as f64
}

/// Squared MMD with an RBF kernel by explicit double sums over all pairs.
pub fn mmd_double_sum(x: &[Vec<f64>], y: &[Vec<f64>], sigma: f64, unbiased: bool) -> f64 {
    let k = |a: &[f64], b: &[f64]| {
        let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
        (-sq / (2.0 * sigma * sigma)).exp()
    };
    let within = |s: &[Vec<f64>]| {
        let mut total = 0.0;
        let mut count = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if unbiased && i == j {
                    continue;
                }
                total += k(&s[i], &s[j]);
                count += 1.0;
            }
        }
        total / count
    };
    let mut cross = 0.0;
    for a in x {
        for b in y {
            cross += k(a, b);
        }
    }
    within(x) + within(y) - 2.0 * cross / (x.len() * y.len()) as f64
}

pub fn kl_direct(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

pub fn js_direct(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    0.5 * kl_direct(p, &m) + 0.5 * kl_direct(q, &m)
}

/// Random probability vector; roughly one entry in `zero_every` is zero.
pub fn random_dist(rng: &mut StdRng, k: usize, zero_every: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..k)
            .map(|_| {
                if zero_every > 0 && rng.random_range(0..zero_every) == 0 {
                    0.0
                } else {
                    rng.random::<f64>() + 1e-3
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            v.iter_mut().for_each(|a| *a /= s);
            return v;
        }
    }
}

/// Stop epoch by rescanning the full history: the first epoch e whose
/// trailing window of `patience` epochs all satisfy the change rule.
pub fn replay_stop(history: &[(u64, f64)], eps: f64, patience: usize, min_epochs: u64) -> Option<u64> {
    let qualifies = |i: usize| i >= 1 && history[i].0 >= min_epochs && (history[i].1 - history[i - 1].1).abs() < eps;
    (0..history.len())
        .find(|&e| e + 1 >= patience && (e + 1 - patience..=e).all(qualifies))
        .map(|e| history[e].0)
}

/// Running-minimum scan over the grid in lexicographic order (last
/// parameter varying fastest). Returns (kept flags for evaluated points,
/// best index).
pub fn replay_grid(sizes: &[usize], value: impl Fn(&[usize]) -> Option<f64>) -> (Vec<(Vec<usize>, bool)>, Option<Vec<usize>>) {
    let mut idx = vec![0usize; sizes.len()];
    let mut out = Vec::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if let Some(v) = value(&idx) {
            let keep = best.as_ref().map_or(true, |(b, _)| v < *b);
            if keep {
                best = Some((v, idx.clone()));
            }
            out.push((idx.clone(), keep));
        }
        // odometer increment
        let mut pos = sizes.len();
        loop {
            if pos == 0 {
                return (out, best.map(|(_, i)| i));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}
