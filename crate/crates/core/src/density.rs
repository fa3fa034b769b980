//! Empirical characteristic functions and kernel density estimates.
//!
//! Complex samples are treated as points of `ℝ²` with
//! `⟨t, w⟩ = Re t · Re w + Im t · Im w`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// std's inherent float methods shadow this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::distributions::{sample_ln_dirichlet, DirichletParams};
use crate::exec::Executor;
use crate::rng::{key, lane, stream};
use crate::special::student_t_quantile;
use crate::spectral::JordanBlock;
use crate::stats::{mean, quantile_sorted, variance};
use crate::urn::AtomicBasis;
use crate::{Error, Result};

/// Sample count below which estimates are too noisy to be useful.
pub const MIN_SAMPLES: usize = 10_000;
/// Points a circle `|t| = r` needs for a complex radial supremum.
pub const MIN_CIRCLE_POINTS: usize = 64;

fn inner(t: Complex64, w: Complex64) -> f64 {
    t.re * w.re + t.im * w.im
}

/// `φ̂(t) = N⁻¹ Σ e^{i⟨t, W_k⟩}` on a grid, with the uniform error bound
/// `1/√N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFnEstimate {
    pub grid: Vec<Complex64>,
    pub values: Vec<Complex64>,
    pub se: f64,
    pub samples: usize,
}

pub fn estimate_charfn<E: Executor>(samples: &[Complex64], grid: &[Complex64], exec: &E) -> CharFnEstimate {
    let n = samples.len() as f64;
    let values = exec.map(grid.len(), |k| {
        let t = grid[k];
        if t.re == 0.0 && t.im == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let (mut c, mut s) = (0.0, 0.0);
        for &w in samples {
            let (sin, cos) = inner(t, w).sin_cos();
            c += cos;
            s += sin;
        }
        Complex64::new(c / n, s / n)
    });
    CharFnEstimate { grid: grid.to_vec(), values, se: 1.0 / n.sqrt(), samples: samples.len() }
}

/// `{−r, r}` for every radius: the real-line grid.
pub fn line_grid(radii: &[f64]) -> Vec<Complex64> {
    radii.iter().flat_map(|&r| [Complex64::new(-r, 0.0), Complex64::new(r, 0.0)]).collect()
}

/// `points` equally spaced angles on each circle `|t| = r`.
pub fn circle_grid(radii: &[f64], points: usize) -> Vec<Complex64> {
    radii
        .iter()
        .flat_map(|&r| {
            (0..points)
                .map(move |k| Complex64::from_polar(r, core::f64::consts::TAU * k as f64 / points as f64))
        })
        .collect()
}

/// `n` radii spread geometrically over `[lo, hi]`.
pub fn log_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| lo * (step * k as f64).exp()).collect()
}

fn on_circle(t: Complex64, r: f64) -> bool {
    (t.norm() - r).abs() <= 1e-9 * r.max(1.0)
}

/// `ψ̂(r) = max |φ̂(t)|` over the grid points with `|t| = r`. The circle
/// must be covered by both `±r` on the real axis when the grid is real, or
/// by at least [`MIN_CIRCLE_POINTS`] points otherwise.
pub fn radial_sup(est: &CharFnEstimate, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let hits: Vec<usize> = (0..est.grid.len()).filter(|&k| on_circle(est.grid[k], r)).collect();
    let real_grid = est.grid.iter().all(|t| t.im == 0.0);
    let covered = if real_grid {
        hits.iter().any(|&k| est.grid[k].re > 0.0) && hits.iter().any(|&k| est.grid[k].re < 0.0)
    } else {
        hits.len() >= MIN_CIRCLE_POINTS
    };
    if !covered {
        return Err(Error::GridTooCoarse { radius: r, points: hits.len() });
    }
    Ok(hits.iter().map(|&k| est.values[k].norm()).fold(0.0, f64::max))
}

/// Distinct radii present in the grid, ascending.
pub fn grid_radii(est: &CharFnEstimate) -> Vec<f64> {
    let mut radii: Vec<f64> = est.grid.iter().map(|t| t.norm()).filter(|&r| r > 0.0).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.max(1.0));
    radii
}

/// Least-squares fit of `ln ψ̂(r) = a − ρ ln r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rho: f64,
    /// 95% confidence band for `ρ`.
    pub band: (f64, f64),
    pub radii_used: usize,
    /// Band lies strictly above zero.
    pub decay_detected: bool,
}

/// Fits the decay exponent over the grid radii in `[r_lo, r_hi]` where
/// `ψ̂ > 3·SE`.
pub fn decay_exponent(est: &CharFnEstimate, r_lo: f64, r_hi: f64) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in grid_radii(est).into_iter().filter(|&r| r >= r_lo && r <= r_hi) {
        let Ok(psi) = radial_sup(est, r) else { continue };
        if psi > 3.0 * est.se {
            xs.push(r.ln());
            ys.push(psi.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::NoiseDominated);
    }
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let dof = (xs.len() - 2) as f64;
    let slope_se = (resid / dof / sxx).sqrt();
    let half = student_t_quantile(0.975, dof) * slope_se;
    let rho = -slope;
    let band = (rho - half, rho + half);
    Ok(DecayFit { rho, band, radii_used: xs.len(), decay_detected: band.0 > 0.0 })
}

/// Gaussian kernel density estimator in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    points: Vec<Complex64>,
    /// Bandwidth per coordinate; `bandwidth.1` is unused in one dimension.
    pub bandwidth: (f64, f64),
    pub dim: usize,
}

fn silverman_1d(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = variance(xs).sqrt();
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (xs.len() as f64).powf(-0.2)
}

impl Kde {
    /// One-dimensional estimate from the real parts when every sample is
    /// real, two-dimensional otherwise. `bandwidth` overrides Silverman's
    /// rule.
    pub fn new(samples: &[Complex64], bandwidth: Option<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples { got: samples.len(), need: 2 });
        }
        let dim = if samples.iter().all(|z| z.im == 0.0) { 1 } else { 2 };
        let bandwidth = match bandwidth {
            Some(h) => h,
            None => {
                let re: Vec<f64> = samples.iter().map(|z| z.re).collect();
                if dim == 1 {
                    (silverman_1d(&re), 0.0)
                } else {
                    let im: Vec<f64> = samples.iter().map(|z| z.im).collect();
                    let f = (samples.len() as f64).powf(-1.0 / 6.0);
                    (variance(&re).sqrt() * f, variance(&im).sqrt() * f)
                }
            }
        };
        let degenerate = bandwidth.0 <= 0.0 || (dim == 2 && bandwidth.1 <= 0.0);
        if degenerate || !bandwidth.0.is_finite() || !bandwidth.1.is_finite() {
            return Err(Error::InvalidParameter("bandwidth must be positive and finite".into()));
        }
        Ok(Self { points: samples.to_vec(), bandwidth, dim })
    }

    pub fn density_at(&self, z: Complex64) -> f64 {
        let n = self.points.len() as f64;
        let (hx, hy) = self.bandwidth;
        if self.dim == 1 {
            let norm = 1.0 / (n * hx * (core::f64::consts::TAU).sqrt());
            self.points.iter().map(|p| (-0.5 * ((z.re - p.re) / hx).powi(2)).exp()).sum::<f64>() * norm
        } else {
            let norm = 1.0 / (n * hx * hy * core::f64::consts::TAU);
            self.points
                .iter()
                .map(|p| {
                    let u = (z.re - p.re) / hx;
                    let v = (z.im - p.im) / hy;
                    (-0.5 * (u * u + v * v)).exp()
                })
                .sum::<f64>()
                * norm
        }
    }

    /// Evaluates on a regular grid over the 0.1%–99.9% quantile box of
    /// each coordinate, padded by 20% of its width on both sides.
    pub fn on_grid<E: Executor>(&self, points: usize, exec: &E) -> DensityEstimate {
        let axis = |f: fn(&Complex64) -> f64| {
            let mut v: Vec<f64> = self.points.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            let (lo, hi) = (quantile_sorted(&v, 0.001), quantile_sorted(&v, 0.999));
            let pad = 0.2 * (hi - lo).max(1e-12);
            let (lo, hi) = (lo - pad, hi + pad);
            (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect::<Vec<f64>>()
        };
        let xs = axis(|z| z.re);
        let ys = if self.dim == 2 { axis(|z| z.im) } else { Vec::new() };
        let values: Vec<f64> = if self.dim == 1 {
            exec.map(xs.len(), |k| self.density_at(Complex64::new(xs[k], 0.0)))
        } else {
            exec.map(xs.len() * ys.len(), |k| {
                self.density_at(Complex64::new(xs[k / ys.len()], ys[k % ys.len()]))
            })
        };
        DensityEstimate { xs, ys, values, bandwidth: self.bandwidth, dim: self.dim }
    }
}

/// KDE values on a grid; `values[i·|ys| + j]` sits at `(xs[i], ys[j])` in
/// two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: (f64, f64),
    pub dim: usize,
}

impl DensityEstimate {
    /// Riemann sum of the values over the grid cells.
    pub fn mass(&self) -> f64 {
        let dx = self.xs[1] - self.xs[0];
        if self.dim == 1 {
            self.values.iter().sum::<f64>() * dx
        } else {
            let dy = self.ys[1] - self.ys[0];
            self.values.iter().sum::<f64>() * dx * dy
        }
    }
}

pub fn kde<E: Executor>(
    samples: &[Complex64],
    bandwidth: Option<(f64, f64)>,
    points: usize,
    exec: &E,
) -> Result<DensityEstimate> {
    if points < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points per axis".into()));
    }
    Ok(Kde::new(samples, bandwidth)?.on_grid(points, exec))
}

/// `Σ_k v_k^{λ/S} z_{i(k)}` over the split slots of colour `c`, where
/// `i(k)` is the colour of slot `k`.
pub fn mapped_point(
    basis: &AtomicBasis,
    block: &JordanBlock,
    c: usize,
    v: &[f64],
    z: &[Complex64],
) -> Complex64 {
    let mu = block.lambda / basis.s as f64;
    basis
        .split_slots(c)
        .iter()
        .zip(v)
        .map(|(&i, &vk)| if vk > 0.0 { (mu * vk.ln()).exp() * z[i] } else { Complex64::new(0.0, 0.0) })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub colour: usize,
    pub probes: usize,
    pub inside: usize,
    pub fraction: f64,
    pub threshold: f64,
}

/// Probes the closure of the support under the split map. Each probe takes
/// one point `z_i` from the upper half (by estimated density) of every
/// colour's pool and a Dirichlet split vector `v`, maps them with
/// [`mapped_point`] and counts how often colour `c`'s density estimate
/// exceeds `threshold` there.
pub fn support_closure_check(
    pools: &[Vec<Complex64>],
    basis: &AtomicBasis,
    block: &JordanBlock,
    c: usize,
    n_probes: usize,
    threshold: f64,
    seed: u64,
) -> Result<SupportReport> {
    let kdes: Vec<Kde> = pools.iter().map(|p| Kde::new(p, None)).collect::<Result<_>>()?;
    let mut rng = stream(seed, lane(key::REFERENCE, c as u64), 0);
    // candidates: a thinned subsample ranked by density
    let high: Vec<Vec<Complex64>> = pools
        .iter()
        .zip(&kdes)
        .map(|(pool, k)| {
            let stride = pool.len().div_ceil(500).max(1);
            let mut scored: Vec<(f64, Complex64)> =
                pool.iter().step_by(stride).map(|&z| (k.density_at(z), z)).collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            scored.truncate(scored.len().div_ceil(2));
            scored.into_iter().map(|s| s.1).collect()
        })
        .collect();
    let params = DirichletParams::dislocation(basis, c);
    let mut inside = 0;
    for _ in 0..n_probes {
        let z: Vec<Complex64> = high.iter().map(|h| h[rng.random_range(0..h.len())]).collect();
        let v: Vec<f64> = sample_ln_dirichlet(&params, &mut rng).into_iter().map(f64::exp).collect();
        if kdes[c].density_at(mapped_point(basis, block, c, &v, &z)) > threshold {
            inside += 1;
        }
    }
    let fraction = if n_probes == 0 { 1.0 } else { inside as f64 / n_probes as f64 };
    Ok(SupportReport { colour: c, probes: n_probes, inside, fraction, threshold })
}
