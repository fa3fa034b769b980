//! Particle iteration of the smoothing systems.
//!
//! A law on `ℂ^d` (one marginal per atomic colour) is stored as `d` pools of
//! samples. One application of the map builds a fresh pool per colour by
//! drawing the split weights and resampling the children from the current
//! pools. The fixed point is only unique once the means are pinned, so
//! [`iterate_to_fixpoint`] checks each new pool mean against its target and
//! then recentres it exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// std's inherent float methods shadow this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::distributions::{sample_ln_dirichlet, DirichletParams};
use crate::exec::Executor;
use crate::moments::{ct_joint_moments, dt_joint_moments, dt_mean_vector, mean_vector};
use crate::rng::{key, lane, stream};
use crate::simulate::Mode;
use crate::spectral::JordanBlock;
use crate::stats::{energy_distance, wasserstein1};
use crate::urn::{AtomicBasis, UrnSpec};
use crate::{Error, Result};

pub const DEFAULT_POOL: usize = 100_000;
/// Points per pool used by the complex energy distance.
pub const DISTANCE_CAP: usize = 2_000;
const CHUNK: usize = 4_096;
const DRIFT_SE: f64 = 5.0;

/// `d` equally sized pools of samples with their recorded means.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    pools: Vec<Vec<Complex64>>,
    means: Vec<Complex64>,
}

fn pool_mean(pool: &[Complex64]) -> Complex64 {
    pool.iter().sum::<Complex64>() / pool.len() as f64
}

impl EmpiricalLaw {
    pub fn new(pools: Vec<Vec<Complex64>>) -> Result<Self> {
        if pools.is_empty() {
            return Err(Error::EmptyPool(0));
        }
        if let Some(c) = pools.iter().position(|p| p.is_empty()) {
            return Err(Error::EmptyPool(c));
        }
        let size = pools[0].len();
        if let Some(p) = pools.iter().find(|p| p.len() != size) {
            return Err(Error::SizeMismatch { left: size, right: p.len() });
        }
        let means = pools.iter().map(|p| pool_mean(p)).collect();
        Ok(Self { pools, means })
    }

    /// Point mass at `values[c]` for every colour.
    pub fn point_masses(values: &[Complex64], size: usize) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v; size]).collect())
    }

    /// Gaussian pools with the given means and `E|W − mean|²`, recentred so
    /// the pool means are exact. Real when `real` is set, circular complex
    /// otherwise.
    pub fn gaussian(
        means: &[Complex64],
        variances: &[f64],
        real: bool,
        size: usize,
        seed: u64,
    ) -> Result<Self> {
        let pools = means
            .iter()
            .zip(variances)
            .enumerate()
            .map(|(c, (&m, &var))| {
                let mut rng = stream(seed, lane(key::FIXPOINT, u64::MAX >> 17), c as u64);
                let sd = var.max(0.0).sqrt();
                let mut pool: Vec<Complex64> = (0..size)
                    .map(|_| {
                        let x: f64 = rng.sample(StandardNormal);
                        if real {
                            Complex64::new(sd * x, 0.0)
                        } else {
                            let y: f64 = rng.sample(StandardNormal);
                            Complex64::new(x, y) * (sd / 2.0.sqrt())
                        }
                    })
                    .collect();
                let shift = m - pool_mean(&pool);
                for z in &mut pool {
                    *z += shift;
                }
                pool
            })
            .collect();
        Self::new(pools)
    }

    pub fn d(&self) -> usize {
        self.pools.len()
    }

    pub fn size(&self) -> usize {
        self.pools[0].len()
    }

    pub fn pool(&self, c: usize) -> &[Complex64] {
        &self.pools[c]
    }

    pub fn pools(&self) -> &[Vec<Complex64>] {
        &self.pools
    }

    pub fn means(&self) -> &[Complex64] {
        &self.means
    }

    /// Standard error of the mean of pool `c`.
    pub fn mean_se(&self, c: usize) -> f64 {
        let m = self.means[c];
        let n = self.size() as f64;
        let ss: f64 = self.pools[c].iter().map(|z| (z - m).norm_sqr()).sum();
        (ss / (n - 1.0).max(1.0) / n).sqrt()
    }

    /// Pool averages of `|W|²`.
    pub fn second_moments(&self) -> Vec<f64> {
        self.pools.iter().map(|p| p.iter().map(|z| z.norm_sqr()).sum::<f64>() / p.len() as f64).collect()
    }

    pub fn scaled(&self, t: Complex64) -> Self {
        Self {
            pools: self.pools.iter().map(|p| p.iter().map(|z| z * t).collect()).collect(),
            means: self.means.iter().map(|m| m * t).collect(),
        }
    }

    pub fn into_pools(self) -> Vec<Vec<Complex64>> {
        self.pools
    }

    fn recentred(mut self, targets: &[Complex64]) -> Self {
        for ((pool, m), &t) in self.pools.iter_mut().zip(&mut self.means).zip(targets) {
            let shift = t - *m;
            for z in pool.iter_mut() {
                *z += shift;
            }
            *m = t;
        }
        self
    }

    fn halves(&self) -> (Self, Self) {
        let h = self.size() / 2;
        let first = self.pools.iter().map(|p| p[..h].to_vec()).collect();
        let second = self.pools.iter().map(|p| p[h..2 * h].to_vec()).collect();
        (Self::new(first).expect("halves of a valid law"), Self::new(second).expect("halves of a valid law"))
    }
}

/// Split weights of the discrete-time map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weights {
    /// `π_k = θ_i / S` for a slot of colour `i`.
    Exact,
    /// `π_k = 1 / S` for every slot; wrong whenever some `θ_i > 1`.
    Equal,
}

fn power(x_ln: f64, mu: Complex64) -> Complex64 {
    if mu.im == 0.0 {
        Complex64::new((mu.re * x_ln).exp(), 0.0)
    } else {
        (mu * x_ln).exp()
    }
}

/// Where the map draws its randomness: stream `(seed, FIXPOINT⊕round)`,
/// replica `colour·2³² + chunk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapStream {
    pub seed: u64,
    pub round: u64,
}

#[allow(clippy::too_many_arguments)]
fn apply_map<E: Executor>(
    mode: Mode,
    weights: Weights,
    law: &EmpiricalLaw,
    basis: &AtomicBasis,
    block: &JordanBlock,
    out_size: usize,
    rs: MapStream,
    exec: &E,
) -> Result<EmpiricalLaw> {
    let d = basis.d();
    if law.d() != d {
        return Err(Error::SizeMismatch { left: law.d(), right: d });
    }
    if out_size == 0 {
        return Err(Error::InvalidParameter("out_size must be positive".into()));
    }
    let s = basis.s as f64;
    let n_in = law.size();
    let chunks = out_size.div_ceil(CHUNK);
    let mut pools = Vec::with_capacity(d);
    for c in 0..d {
        let slots = basis.split_slots(c);
        let params = match weights {
            Weights::Exact => DirichletParams::dislocation(basis, c),
            Weights::Equal => DirichletParams::new(vec![1.0 / s; slots.len()])?,
        };
        let mu_dt = block.lambda / s;
        let mu_ct = block.lambda / basis.theta[c] as f64;
        let parts = exec.map(chunks, |k| {
            let mut rng = stream(rs.seed, lane(key::FIXPOINT, rs.round), ((c as u64) << 32) | k as u64);
            let len = CHUNK.min(out_size - k * CHUNK);
            (0..len)
                .map(|_| match mode {
                    Mode::DT => {
                        let lv = sample_ln_dirichlet(&params, &mut rng);
                        slots
                            .iter()
                            .zip(&lv)
                            .map(|(&i, &l)| power(l, mu_dt) * law.pools[i][rng.random_range(0..n_in)])
                            .sum::<Complex64>()
                    }
                    Mode::CT => {
                        let u: f64 = 1.0 - rng.random::<f64>();
                        let sum: Complex64 =
                            slots.iter().map(|&i| law.pools[i][rng.random_range(0..n_in)]).sum();
                        power(u.ln(), mu_ct) * sum
                    }
                })
                .collect::<Vec<Complex64>>()
        });
        pools.push(parts.concat());
    }
    EmpiricalLaw::new(pools)
}

/// One application of the discrete-time map
/// `K_c(μ) = L(Σ_k V_k^{λ/S} X_k)` with `V ~ Dirichlet(π^{(c)})`.
pub fn smoothing_map_dt<E: Executor>(
    law: &EmpiricalLaw,
    basis: &AtomicBasis,
    block: &JordanBlock,
    weights: Weights,
    out_size: usize,
    rs: MapStream,
    exec: &E,
) -> Result<EmpiricalLaw> {
    apply_map(Mode::DT, weights, law, basis, block, out_size, rs, exec)
}

/// One application of the continuous-time map
/// `K_c(μ) = L(U^{λ/θ_c} Σ_k X_k)` with `U` uniform on `[0,1]`.
pub fn smoothing_map_ct<E: Executor>(
    law: &EmpiricalLaw,
    basis: &AtomicBasis,
    block: &JordanBlock,
    out_size: usize,
    rs: MapStream,
    exec: &E,
) -> Result<EmpiricalLaw> {
    apply_map(Mode::CT, Weights::Exact, law, basis, block, out_size, rs, exec)
}

/// Exact means of the fixed point for `mode`.
pub fn target_means(mode: Mode, basis: &AtomicBasis, block: &JordanBlock) -> Result<Vec<Complex64>> {
    match mode {
        Mode::CT => Ok(mean_vector(basis, block)),
        Mode::DT => dt_mean_vector(basis, block),
    }
}

/// Gaussian start matched to the exact first and second moments.
pub fn gaussian_start(
    mode: Mode,
    spec: &UrnSpec,
    basis: &AtomicBasis,
    block: &JordanBlock,
    size: usize,
    seed: u64,
) -> Result<EmpiricalLaw> {
    let ct = ct_joint_moments(spec, basis, block, 2)?;
    let table = match mode {
        Mode::CT => ct,
        Mode::DT => dt_joint_moments(&ct, basis)?,
    };
    let means: Vec<Complex64> = (0..basis.d()).map(|c| table.get(c, 1, 0)).collect();
    let vars: Vec<f64> = (0..basis.d()).map(|c| table.absolute(c, 1) - means[c].norm_sqr()).collect();
    EmpiricalLaw::gaussian(&means, &vars, block.is_real(), size, seed)
}

/// Per-colour distances and their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct LawDistance {
    pub per_colour: Vec<f64>,
    pub max: f64,
}

/// Wasserstein-1 on the real line when both laws are real, energy distance
/// on `ℂ` otherwise.
pub fn empirical_distance(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<LawDistance> {
    if a.d() != b.d() {
        return Err(Error::SizeMismatch { left: a.d(), right: b.d() });
    }
    if a.size() != b.size() {
        return Err(Error::SizeMismatch { left: a.size(), right: b.size() });
    }
    let real = |l: &EmpiricalLaw| l.pools.iter().flatten().all(|z| z.im == 0.0);
    let use_real = real(a) && real(b);
    let per_colour: Vec<f64> = a
        .pools
        .iter()
        .zip(&b.pools)
        .map(|(x, y)| {
            if use_real {
                let xr: Vec<f64> = x.iter().map(|z| z.re).collect();
                let yr: Vec<f64> = y.iter().map(|z| z.re).collect();
                wasserstein1(&xr, &yr)
            } else {
                energy_distance(x, y, DISTANCE_CAP)
            }
        })
        .collect();
    let max = per_colour.iter().copied().fold(0.0, f64::max);
    Ok(LawDistance { per_colour, max })
}

/// Distance between the two halves of each pool: the sampling noise of a
/// distance measurement at this pool size.
pub fn noise_floor(law: &EmpiricalLaw) -> Result<LawDistance> {
    if law.size() < 2 {
        return Err(Error::TooFewSamples { got: law.size(), need: 2 });
    }
    let (a, b) = law.halves();
    empirical_distance(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixpointConfig {
    pub mode: Mode,
    pub max_iter: usize,
    pub out_size: usize,
    pub seed: u64,
}

/// One iteration: distance from the previous law and the noise floor of the
/// new one.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub distance: LawDistance,
    pub noise_floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixpointRun {
    pub law: EmpiricalLaw,
    pub trace: Vec<TraceRow>,
    /// First iteration whose distance fell to the noise floor.
    pub converged_at: Option<usize>,
}

impl FixpointRun {
    /// Successive distance ratios `d_{k+1} / d_k`.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.trace.windows(2).map(|w| w[1].distance.max / w[0].distance.max).collect()
    }
}

fn check_drift(law: &EmpiricalLaw, targets: &[Complex64]) -> Result<()> {
    for (c, (&m, &t)) in law.means.iter().zip(targets).enumerate() {
        let se = law.mean_se(c);
        let slack = 1e-12 * (1.0 + t.norm());
        if (m - t).norm() > DRIFT_SE * se + slack {
            return Err(Error::MeanDrift { colour: c, mean: format!("{m}"), target: format!("{t}") });
        }
    }
    Ok(())
}

/// Applies the map until the distance between successive laws reaches the
/// half-split noise floor or `max_iter` is hit. Each new law must have its
/// pool means within 5 standard errors of `targets`; it is then recentred
/// onto them, which keeps the mean from random-walking across iterations.
pub fn iterate_to_fixpoint<E: Executor>(
    initial: EmpiricalLaw,
    targets: &[Complex64],
    basis: &AtomicBasis,
    block: &JordanBlock,
    cfg: FixpointConfig,
    exec: &E,
) -> Result<FixpointRun> {
    if targets.len() != initial.d() {
        return Err(Error::SizeMismatch { left: targets.len(), right: initial.d() });
    }
    let mut law = initial;
    let mut trace = Vec::new();
    let mut converged_at = None;
    for iter in 1..=cfg.max_iter {
        let rs = MapStream { seed: cfg.seed, round: iter as u64 };
        let next = apply_map(cfg.mode, Weights::Exact, &law, basis, block, cfg.out_size, rs, exec)?;
        check_drift(&next, targets)?;
        let next = next.recentred(targets);
        let distance = if next.size() == law.size() {
            empirical_distance(&law, &next)?
        } else {
            LawDistance { per_colour: vec![f64::INFINITY; law.d()], max: f64::INFINITY }
        };
        let floor = noise_floor(&next)?.max;
        let done = distance.max <= floor;
        trace.push(TraceRow { iter, distance, noise_floor: floor });
        law = next;
        if done {
            converged_at = Some(iter);
            break;
        }
    }
    Ok(FixpointRun { law, trace, converged_at })
}

/// Mean of the continuous-time map applied to point masses at `a`:
/// `Σ_i (ã_{c,i}+δ_{c,i}) a_i / (1 + λ/θ_c)`.
pub fn ct_mean_map(basis: &AtomicBasis, block: &JordanBlock, a: &[Complex64]) -> Vec<Complex64> {
    (0..basis.d())
        .map(|c| {
            let sum: Complex64 = (0..basis.d()).map(|i| a[i] * basis.multiplicity(c, i) as f64).sum();
            sum / (block.lambda / basis.theta[c] as f64 + 1.0)
        })
        .collect()
}

/// `Ψ(A)_i = A_i / (λ + θ_i)`.
pub fn psi(block: &JordanBlock, basis: &AtomicBasis, a: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(&basis.theta).map(|(x, &t)| x / (block.lambda + t as f64)).collect()
}

/// Zero law of the right shape, handy as a neutral element.
pub fn zero_law(d: usize, size: usize) -> Result<EmpiricalLaw> {
    EmpiricalLaw::point_masses(&vec![Complex64::zero(); d], size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::spectral::eigen_spectrum;
    use crate::urn::atomic_basis;

    fn three_colour() -> UrnSpec {
        UrnSpec::new(vec![vec![6, 2, 0], vec![5, -2, 5], vec![0, 2, 6]], vec![2, 4, 1]).unwrap()
    }

    fn setup() -> (UrnSpec, AtomicBasis, JordanBlock) {
        let spec = three_colour();
        let basis = atomic_basis(&spec).unwrap();
        let block = eigen_spectrum(&spec).unwrap().block(Complex64::new(6.0, 0.0)).unwrap().clone();
        (spec, basis, block)
    }

    const RS: MapStream = MapStream { seed: 11, round: 0 };

    #[test]
    fn law_invariants() {
        assert_eq!(EmpiricalLaw::new(vec![vec![], vec![Complex64::zero()]]), Err(Error::EmptyPool(0)));
        assert!(matches!(
            EmpiricalLaw::new(vec![vec![Complex64::zero(); 2], vec![Complex64::zero(); 3]]),
            Err(Error::SizeMismatch { .. })
        ));
        let law = EmpiricalLaw::new(vec![vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 2.0)]]).unwrap();
        assert_eq!(law.means()[0], Complex64::new(2.0, 1.0));
    }

    #[test]
    fn point_mass_at_dt_means_is_preserved() {
        let (_, basis, block) = setup();
        let targets = dt_mean_vector(&basis, &block).unwrap();
        let law = EmpiricalLaw::point_masses(&targets, 1000).unwrap();
        let out = smoothing_map_dt(&law, &basis, &block, Weights::Exact, 20_000, RS, &Sequential).unwrap();
        for (c, target) in targets.iter().enumerate() {
            let se = out.mean_se(c).max(1e-12);
            assert!((out.means()[c] - target).norm() <= 3.0 * se, "colour {c}");
        }
    }

    #[test]
    fn ct_mean_vector_is_fixed_by_the_mean_map() {
        let (_, basis, block) = setup();
        let a = mean_vector(&basis, &block);
        let image = ct_mean_map(&basis, &block, &a);
        for (x, y) in a.iter().zip(&image) {
            assert!((x - y).norm() < 1e-12);
        }
        let law = EmpiricalLaw::point_masses(&a, 1000).unwrap();
        let out = smoothing_map_ct(&law, &basis, &block, 20_000, RS, &Sequential).unwrap();
        for (c, mean) in a.iter().enumerate() {
            assert!((out.means()[c] - mean).norm() <= 3.0 * out.mean_se(c).max(1e-12));
        }
    }

    #[test]
    fn psi_of_mean_lies_in_the_kernel_direction() {
        let (_, basis, block) = setup();
        let a = mean_vector(&basis, &block);
        let p = psi(&block, &basis, &a);
        // (1/2, 0, −1/2) / (6 + θ) with θ = (1, 2, 1)
        assert!((p[0] + p[2]).norm() < 1e-12);
        assert!(p[1].norm() < 1e-12);
    }

    #[test]
    fn zero_and_scaling() {
        let (_, basis, block) = setup();
        let zero = zero_law(3, 100).unwrap();
        let out = smoothing_map_dt(&zero, &basis, &block, Weights::Exact, 500, RS, &Sequential).unwrap();
        assert!(out.pools().iter().flatten().all(|z| z.norm() == 0.0));
        let out = smoothing_map_ct(&zero, &basis, &block, 500, RS, &Sequential).unwrap();
        assert!(out.pools().iter().flatten().all(|z| z.norm() == 0.0));

        let law = gaussian_start(Mode::DT, &three_colour(), &basis, &block, 200, 3).unwrap();
        let t = Complex64::new(0.5, -2.0);
        let a =
            smoothing_map_dt(&law.scaled(t), &basis, &block, Weights::Exact, 300, RS, &Sequential).unwrap();
        let b = smoothing_map_dt(&law, &basis, &block, Weights::Exact, 300, RS, &Sequential).unwrap();
        for (x, y) in a.pools().iter().flatten().zip(b.pools().iter().flatten()) {
            assert!((x - y * t).norm() <= 1e-12 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn distance_examples() {
        let zero = zero_law(2, 50).unwrap();
        let one = EmpiricalLaw::point_masses(&[Complex64::new(1.0, 0.0); 2], 50).unwrap();
        assert_eq!(empirical_distance(&zero, &zero).unwrap().max, 0.0);
        assert!((empirical_distance(&zero, &one).unwrap().max - 1.0).abs() < 1e-15);
        let law = EmpiricalLaw::gaussian(&[Complex64::zero(); 2], &[1.0, 4.0], true, 500, 1).unwrap();
        let shifted = law.scaled(Complex64::new(1.0, 0.0));
        let moved =
            EmpiricalLaw::new(shifted.pools().iter().map(|p| p.iter().map(|z| z + 0.75).collect()).collect())
                .unwrap();
        let dist = empirical_distance(&law, &moved).unwrap();
        assert!(dist.per_colour.iter().all(|d| (d - 0.75).abs() < 1e-12));
        let short = zero_law(2, 49).unwrap();
        assert!(matches!(empirical_distance(&zero, &short), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn zero_iterations_return_the_initial_law() {
        let (_, basis, block) = setup();
        let targets = dt_mean_vector(&basis, &block).unwrap();
        let law = EmpiricalLaw::point_masses(&targets, 100).unwrap();
        let cfg = FixpointConfig { mode: Mode::DT, max_iter: 0, out_size: 100, seed: 1 };
        let run = iterate_to_fixpoint(law.clone(), &targets, &basis, &block, cfg, &Sequential).unwrap();
        assert_eq!(run.law, law);
        assert!(run.trace.is_empty());
    }

    #[test]
    fn wrong_targets_drift() {
        let (_, basis, block) = setup();
        let targets = dt_mean_vector(&basis, &block).unwrap();
        let law = EmpiricalLaw::point_masses(&targets, 2000).unwrap();
        let wrong: Vec<Complex64> = targets.iter().map(|t| t * 3.0).collect();
        let cfg = FixpointConfig { mode: Mode::DT, max_iter: 3, out_size: 2000, seed: 1 };
        let res = iterate_to_fixpoint(law, &wrong, &basis, &block, cfg, &Sequential);
        assert!(matches!(res, Err(Error::MeanDrift { .. })));
    }

    #[test]
    fn contraction_from_point_masses() {
        let (_, basis, block) = setup();
        let targets = dt_mean_vector(&basis, &block).unwrap();
        let law = EmpiricalLaw::point_masses(&targets, 20_000).unwrap();
        let cfg = FixpointConfig { mode: Mode::DT, max_iter: 40, out_size: 20_000, seed: 5 };
        let run = iterate_to_fixpoint(law, &targets, &basis, &block, cfg, &Sequential).unwrap();
        assert!(
            run.converged_at.is_some(),
            "{:?}",
            run.trace.iter().map(|r| r.distance.max).collect::<Vec<_>>()
        );
        let first = run.trace[0].distance.max;
        let last = run.trace.last().unwrap().distance.max;
        assert!(last < first / 5.0);
    }
}
