//! Sample statistics and the two-sample / goodness-of-fit tests used by the
//! verification harness.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// std's inherent float methods shadow this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::special::kolmogorov_sf;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn complex_mean(xs: &[Complex64]) -> Complex64 {
    xs.iter().sum::<Complex64>() / xs.len() as f64
}

/// Mean and standard error of a complex sample, the latter per component.
pub fn complex_mean_se(xs: &[Complex64]) -> (Complex64, Complex64) {
    let re: Vec<f64> = xs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = xs.iter().map(|z| z.im).collect();
    let n = xs.len() as f64;
    (
        Complex64::new(mean(&re), mean(&im)),
        Complex64::new((variance(&re) / n).sqrt(), (variance(&im) / n).sqrt()),
    )
}

/// Sample skewness and excess kurtosis (moment estimators).
pub fn skew_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Percentile interval of `stat` over `b` bootstrap resamples.
pub fn bootstrap_band<R, F>(xs: &[f64], b: usize, coverage: f64, rng: &mut R, stat: F) -> (f64, f64)
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    let mut buf = vec![0.0; xs.len()];
    let mut values: Vec<f64> = (0..b)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = xs[rng.random_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - coverage) / 2.0;
    (quantile_sorted(&values, tail), quantile_sorted(&values, 1.0 - tail))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// One-sample Kolmogorov–Smirnov p-value against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    ks_one_sample_with_statistic(xs, cdf).1
}

/// Kolmogorov–Smirnov distance `D` and its p-value.
pub fn ks_one_sample_with_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> (f64, f64) {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

/// Wasserstein-1 distance between two real samples of equal size.
pub fn wasserstein1(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Outcome of a permutation test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

fn permutation_p(observed: f64, perms: impl Iterator<Item = f64>, n_perm: usize) -> f64 {
    // small relative slack so exact ties (X = Y) count as exceedances
    let slack = 1e-12 * observed.abs().max(1e-300);
    let exceed = perms.filter(|&t| t >= observed - slack).count();
    (1 + exceed) as f64 / (n_perm + 1) as f64
}

/// Pooled real sample in sorted order with group labels, supporting O(N)
/// energy statistics per relabelling.
struct SortedPool {
    values: Vec<f64>,
    labels: Vec<bool>,
    total_pairwise: f64,
    n_x: usize,
}

impl SortedPool {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let mut pooled: Vec<(f64, bool)> =
            xs.iter().map(|&x| (x, true)).chain(ys.iter().map(|&y| (y, false))).collect();
        pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values: Vec<f64> = pooled.iter().map(|p| p.0).collect();
        let labels = pooled.iter().map(|p| p.1).collect();
        let total_pairwise = within_sum(values.iter().copied());
        Self { values, labels, total_pairwise, n_x: xs.len() }
    }

    fn statistic(&self) -> f64 {
        let within_x = within_sum(self.values.iter().zip(&self.labels).filter(|p| *p.1).map(|p| *p.0));
        let within_y = within_sum(self.values.iter().zip(&self.labels).filter(|p| !*p.1).map(|p| *p.0));
        let cross = self.total_pairwise - within_x - within_y;
        energy_from_sums(cross, within_x, within_y, self.n_x, self.values.len() - self.n_x)
    }
}

/// `Σ_{i<j} |z_j − z_i|` for sorted input.
fn within_sum(sorted: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut prefix = 0.0;
    for (k, z) in sorted.enumerate() {
        acc += z * k as f64 - prefix;
        prefix += z;
    }
    acc
}

fn energy_from_sums(cross: f64, within_x: f64, within_y: f64, n: usize, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let e = 2.0 * cross / (nf * mf) - 2.0 * within_x / (nf * nf) - 2.0 * within_y / (mf * mf);
    // non-negative in exact arithmetic; clamp the rounding residue
    (nf * mf / (nf + mf) * e).max(0.0)
}

/// Scaled energy statistic `nm/(n+m) · E(X, Y)`.
pub fn energy_statistic(xs: &[Complex64], ys: &[Complex64]) -> f64 {
    if is_real(xs) && is_real(ys) {
        let a: Vec<f64> = xs.iter().map(|z| z.re).collect();
        let b: Vec<f64> = ys.iter().map(|z| z.re).collect();
        return SortedPool::new(&a, &b).statistic();
    }
    let (mut cross, mut wx, mut wy) = (0.0, 0.0, 0.0);
    for (i, x) in xs.iter().enumerate() {
        for y in ys {
            cross += (x - y).norm();
        }
        for x2 in &xs[i + 1..] {
            wx += (x - x2).norm();
        }
    }
    for (i, y) in ys.iter().enumerate() {
        for y2 in &ys[i + 1..] {
            wy += (y - y2).norm();
        }
    }
    energy_from_sums(cross, wx, wy, xs.len(), ys.len())
}

fn is_real(xs: &[Complex64]) -> bool {
    xs.iter().all(|z| z.im == 0.0)
}

/// Energy two-sample permutation test.
pub fn energy_test<R: Rng + ?Sized>(
    xs: &[Complex64],
    ys: &[Complex64],
    n_perm: usize,
    rng: &mut R,
) -> PermutationOutcome {
    if is_real(xs) && is_real(ys) {
        let a: Vec<f64> = xs.iter().map(|z| z.re).collect();
        let b: Vec<f64> = ys.iter().map(|z| z.re).collect();
        let mut pool = SortedPool::new(&a, &b);
        let statistic = pool.statistic();
        let perms: Vec<f64> = (0..n_perm)
            .map(|_| {
                pool.labels.shuffle(rng);
                pool.statistic()
            })
            .collect();
        let p_value = permutation_p(statistic, perms.into_iter(), n_perm);
        return PermutationOutcome { statistic, p_value };
    }
    complex_energy_test(xs, ys, n_perm, rng)
}

fn complex_energy_test<R: Rng + ?Sized>(
    xs: &[Complex64],
    ys: &[Complex64],
    n_perm: usize,
    rng: &mut R,
) -> PermutationOutcome {
    let pooled: Vec<Complex64> = xs.iter().chain(ys).copied().collect();
    let big_n = pooled.len();
    // packed upper triangle
    let mut dist = Vec::with_capacity(big_n * (big_n - 1) / 2);
    for i in 0..big_n {
        for j in i + 1..big_n {
            dist.push((pooled[i] - pooled[j]).norm());
        }
    }
    let total: f64 = dist.iter().sum();
    let n = xs.len();
    let stat_for = |labels: &[bool]| {
        let (mut wx, mut wy) = (0.0, 0.0);
        let mut k = 0;
        for i in 0..big_n {
            for j in i + 1..big_n {
                match (labels[i], labels[j]) {
                    (true, true) => wx += dist[k],
                    (false, false) => wy += dist[k],
                    _ => {}
                }
                k += 1;
            }
        }
        energy_from_sums(total - wx - wy, wx, wy, n, big_n - n)
    };
    let mut labels: Vec<bool> = (0..big_n).map(|i| i < n).collect();
    let statistic = stat_for(&labels);
    let perms: Vec<f64> = (0..n_perm)
        .map(|_| {
            labels.shuffle(rng);
            stat_for(&labels)
        })
        .collect();
    PermutationOutcome { statistic, p_value: permutation_p(statistic, perms.into_iter(), n_perm) }
}

/// Energy distance `E(X, Y)` without the sample-size scaling, on at most
/// `cap` points of each sample (taken with stride).
pub fn energy_distance(xs: &[Complex64], ys: &[Complex64], cap: usize) -> f64 {
    let thin = |v: &[Complex64]| -> Vec<Complex64> {
        let stride = v.len().div_ceil(cap).max(1);
        v.iter().step_by(stride).copied().collect()
    };
    let (a, b) = (thin(xs), thin(ys));
    let (n, m) = (a.len() as f64, b.len() as f64);
    (energy_statistic(&a, &b) * (n + m) / (n * m)).max(0.0)
}

/// Two-sample permutation test on integer data using the Kolmogorov–Smirnov
/// statistic. Ties are handled exactly because the statistic is evaluated
/// only between distinct pooled values.
pub fn discrete_ks_test<R: Rng + ?Sized>(
    xs: &[i64],
    ys: &[i64],
    n_perm: usize,
    rng: &mut R,
) -> PermutationOutcome {
    let mut pooled: Vec<(i64, bool)> =
        xs.iter().map(|&x| (x, true)).chain(ys.iter().map(|&y| (y, false))).collect();
    pooled.sort_by_key(|p| p.0);
    let values: Vec<i64> = pooled.iter().map(|p| p.0).collect();
    let mut labels: Vec<bool> = pooled.iter().map(|p| p.1).collect();
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let stat = |labels: &[bool]| {
        let (mut cx, mut cy, mut d) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..values.len() {
            if labels[k] {
                cx += 1.0;
            } else {
                cy += 1.0;
            }
            if k + 1 == values.len() || values[k + 1] != values[k] {
                d = d.max((cx / n - cy / m).abs());
            }
        }
        d
    };
    let statistic = stat(&labels);
    let perms: Vec<f64> = (0..n_perm)
        .map(|_| {
            labels.shuffle(rng);
            stat(&labels)
        })
        .collect();
    PermutationOutcome { statistic, p_value: permutation_p(statistic, perms.into_iter(), n_perm) }
}
