//! Equalities in law turned into seeded two-sample experiments.
//!
//! Each test builds the left side by direct simulation and the right side
//! from independent simulations combined as the identity prescribes, then
//! compares them with a permutation test. Both sides use `W` estimates at
//! the same `n`, so finite-`n` bias enters them alike. Every side draws
//! from its own lane, so results are reproducible from the seed alone.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// std's inherent float methods shadow this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::distributions::{sample_gamma, sample_ln_dirichlet, DirichletParams};
use crate::exec::Executor;
use crate::fixpoint::{smoothing_map_ct, smoothing_map_dt, EmpiricalLaw, MapStream, Weights};
use crate::rng::{key, lane, stream};
use crate::simulate::{
    atomic_w_samples, run_dt_from, sample_forest_decomposition, simulate_polya_eggenberger, w_samples, Batch,
    Mode,
};
use crate::special::{beta_inc, gamma_p};
use crate::spectral::{block_coefficient_int, is_critical, BlockClass, JordanBlock};
use crate::stats::{
    bootstrap_band, discrete_ks_test, energy_test, ks_one_sample_with_statistic, skew_kurtosis,
};
use crate::urn::{validate_irreducibility, validate_tenability, AtomicBasis, UrnSpec};
use crate::{Error, Result};

pub const DEFAULT_PERMUTATIONS: usize = 199;
pub const DEFAULT_LEVEL: f64 = 0.01;
/// Smallest sample accepted on either side of a two-sample test.
pub const MIN_SAMPLES: usize = 500;

// lanes per experiment side; atomic batches occupy `lane + colour`
const LANE_DISLOCATION_LHS: u64 = 0;
const LANE_DISLOCATION_RHS: u64 = 16;
const LANE_DECOMPOSITION_LHS: u64 = 32;
const LANE_DECOMPOSITION_RHS: u64 = 48;
const LANE_MARTINGALE_CT: u64 = 64;
const LANE_MARTINGALE_DT: u64 = 80;
const LANE_FOREST: u64 = 96;
const LANE_CLT: u64 = 112;
const LANE_DIRICHLET: u64 = 128;
const LANE_XI: u64 = 144;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub sizes: (usize, usize),
    pub statistic: f64,
    pub p_value: f64,
    /// Level the p-value is compared with, after any Bonferroni split.
    pub level: f64,
    pub pass: bool,
    pub seed: u64,
    /// Wall-clock seconds, filled in by callers that own a clock.
    pub runtime_secs: Option<f64>,
}

impl TestReport {
    fn new(name: String, sizes: (usize, usize), statistic: f64, p_value: f64, level: f64, seed: u64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self { name, sizes, statistic, p_value, level, pass: p_value >= level, seed, runtime_secs: None }
    }
}

/// Shared experiment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub n: u64,
    pub replicas: usize,
    pub seed: u64,
    pub n_perm: usize,
    pub level: f64,
}

impl VerifyConfig {
    pub fn new(n: u64, replicas: usize, seed: u64) -> Self {
        Self { n, replicas, seed, n_perm: DEFAULT_PERMUTATIONS, level: DEFAULT_LEVEL }
    }

    fn batch(&self, lane: u64, replicas: usize) -> Batch {
        Batch { n: self.n, replicas, seed: self.seed, lane }
    }
}

/// Smallest permutation count whose minimal p-value `1/(n+1)` is at most
/// half of `level`.
pub fn resolving_permutations(level: f64) -> usize {
    if level <= 0.0 {
        return 0;
    }
    ((2.0 / level).ceil() as usize).saturating_sub(1)
}

/// Energy-distance permutation test. The permutation stream is keyed by
/// `perm_lane`. `n_perm` is raised to [`resolving_permutations`] when it is
/// too small for the test to ever reject at `level`.
pub fn two_sample_energy_test(
    name: &str,
    xs: &[Complex64],
    ys: &[Complex64],
    n_perm: usize,
    level: f64,
    seed: u64,
    perm_lane: u64,
) -> Result<TestReport> {
    let small = xs.len().min(ys.len());
    if small < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: small, need: MIN_SAMPLES });
    }
    let mut rng = stream(seed, lane(key::PERMUTATION, perm_lane), 0);
    let out = energy_test(xs, ys, n_perm.max(resolving_permutations(level)), &mut rng);
    Ok(TestReport::new(name.into(), (xs.len(), ys.len()), out.statistic, out.p_value, level, seed))
}

fn require_testable(block: &JordanBlock) -> Result<()> {
    if block.class != BlockClass::Large {
        return Err(Error::BlockNotLarge(format!("{}", block.lambda)));
    }
    if block.nu > 0 {
        return Err(Error::Unsupported("identities in law are only tested for simple blocks".into()));
    }
    Ok(())
}

/// Dislocation identity per colour: simulated `W_{ẽ_c}` against one
/// application of the smoothing map to independently simulated atomic
/// pools. `weights` other than [`Weights::Exact`] give a negative control
/// (discrete time only). Levels are Bonferroni-split across colours.
pub fn test_dislocation<E: Executor>(
    mode: Mode,
    spec: &UrnSpec,
    basis: &AtomicBasis,
    block: &JordanBlock,
    weights: Weights,
    cfg: VerifyConfig,
    exec: &E,
) -> Result<Vec<TestReport>> {
    require_testable(block)?;
    if cfg.replicas < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: cfg.replicas, need: MIN_SAMPLES });
    }
    let d = spec.d();
    let lhs =
        atomic_w_samples(spec, basis, block, mode, cfg.batch(LANE_DISLOCATION_LHS, cfg.replicas), exec)?;
    let atoms =
        atomic_w_samples(spec, basis, block, mode, cfg.batch(LANE_DISLOCATION_RHS, cfg.replicas), exec)?;
    let pools = EmpiricalLaw::new(atoms.into_iter().map(|s| s.samples).collect())?;
    let rs = MapStream { seed: cfg.seed, round: u64::MAX };
    let rhs = match mode {
        Mode::DT => smoothing_map_dt(&pools, basis, block, weights, cfg.replicas, rs, exec)?,
        Mode::CT => smoothing_map_ct(&pools, basis, block, cfg.replicas, rs, exec)?,
    };
    let suffix = if weights == Weights::Equal { " (equal weights)" } else { "" };
    (0..d)
        .map(|c| {
            let name = format!("dislocation {} e{}{}", mode.name(), c + 1, suffix);
            two_sample_energy_test(
                &name,
                &lhs[c].samples,
                rhs.pool(c),
                cfg.n_perm,
                cfg.level / d as f64,
                cfg.seed,
                LANE_DISLOCATION_LHS + c as u64,
            )
        })
        .collect()
}

/// Decomposition over the root atoms of `spec.alpha()`: simulated `W_α`
/// against the plain sum (continuous time) or the `Dirichlet(η)`-weighted
/// sum (discrete time) of independent atomic copies, `η_k = θ_i/S`.
pub fn test_decomposition<E: Executor>(
    mode: Mode,
    spec: &UrnSpec,
    basis: &AtomicBasis,
    block: &JordanBlock,
    cfg: VerifyConfig,
    exec: &E,
) -> Result<TestReport> {
    require_testable(block)?;
    if cfg.replicas < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: cfg.replicas, need: MIN_SAMPLES });
    }
    let lhs =
        w_samples(spec, block, spec.alpha(), mode, cfg.batch(LANE_DECOMPOSITION_LHS, cfg.replicas), exec)?;
    let roots = basis.root_slots();
    let copies = basis.alpha_tilde.iter().copied().max().unwrap_or(0).max(1) as usize;
    // every root slot gets its own replica, so the copies are independent
    let atoms = atomic_w_samples(
        spec,
        basis,
        block,
        mode,
        cfg.batch(LANE_DECOMPOSITION_RHS, cfg.replicas * copies),
        exec,
    )?;
    let eta = DirichletParams::new(basis.slot_weights(&roots))?;
    let mu = block.lambda / basis.s as f64;
    let rhs: Vec<Complex64> = exec.map(cfg.replicas, |r| {
        let mut used = vec![0usize; spec.d()];
        let mut pick = |i: usize| {
            let w = atoms[i].samples[r * copies + used[i]];
            used[i] += 1;
            w
        };
        match mode {
            Mode::CT => roots.iter().map(|&i| pick(i)).sum(),
            Mode::DT => {
                let mut rng = stream(cfg.seed, lane(key::DIRICHLET, LANE_DECOMPOSITION_RHS), r as u64);
                let lz = sample_ln_dirichlet(&eta, &mut rng);
                roots.iter().zip(&lz).map(|(&i, &l)| (mu * l).exp() * pick(i)).sum()
            }
        }
    });
    let name = format!("decomposition {} {}", mode.name(), lhs.tag);
    two_sample_energy_test(&name, &lhs.samples, &rhs, cfg.n_perm, cfg.level, cfg.seed, LANE_DECOMPOSITION_LHS)
}

/// `W^CT_α` against `S^ν ξ^{λ/S} W^DT_α` with fresh `ξ ~ Gamma(shape)`
/// independent of the discrete-time run. The identity holds for
/// `shape = |α|/S`; any other shape is a negative control.
#[allow(clippy::too_many_arguments)]
pub fn test_martingale_connection<E: Executor>(
    spec: &UrnSpec,
    block: &JordanBlock,
    initial: &[i64],
    xi_shape: f64,
    level: f64,
    cfg: VerifyConfig,
    lane_offset: u64,
    exec: &E,
) -> Result<TestReport> {
    require_testable(block)?;
    let s = spec.balance() as f64;
    let ct = w_samples(
        spec,
        block,
        initial,
        Mode::CT,
        cfg.batch(LANE_MARTINGALE_CT + lane_offset, cfg.replicas),
        exec,
    )?;
    let dt = w_samples(
        spec,
        block,
        initial,
        Mode::DT,
        cfg.batch(LANE_MARTINGALE_DT + lane_offset, cfg.replicas),
        exec,
    )?;
    let scale = s.powi(block.nu as i32);
    let mu = block.lambda / s;
    let rhs: Vec<Complex64> = dt
        .samples
        .iter()
        .enumerate()
        .map(|(r, w)| {
            let mut rng = stream(cfg.seed, lane(key::REFERENCE, LANE_MARTINGALE_DT + lane_offset), r as u64);
            let xi = sample_gamma(xi_shape, &mut rng);
            (mu * xi.ln()).exp() * w * scale
        })
        .collect();
    let name = format!("martingale {} xi~Gamma({xi_shape})", ct.tag);
    two_sample_energy_test(
        &name,
        &ct.samples,
        &rhs,
        cfg.n_perm,
        level,
        cfg.seed,
        LANE_MARTINGALE_CT + lane_offset,
    )
}

/// Martingale connection for every atomic composition, with
/// `ξ ~ Gamma(θ_c/S)` (or `xi_shape` for all colours when given) and
/// Bonferroni across colours.
pub fn test_martingale_atomic<E: Executor>(
    spec: &UrnSpec,
    basis: &AtomicBasis,
    block: &JordanBlock,
    xi_shape: Option<f64>,
    cfg: VerifyConfig,
    exec: &E,
) -> Result<Vec<TestReport>> {
    let d = spec.d();
    (0..d)
        .map(|c| {
            let shape = xi_shape.unwrap_or(basis.theta[c] as f64 / basis.s as f64);
            test_martingale_connection(
                spec,
                block,
                &basis.atom(c),
                shape,
                cfg.level / d as f64,
                cfg,
                c as u64,
                exec,
            )
        })
        .collect()
}

/// KS test of `D₁(n)/(nK)` from the Pólya–Eggenberger urn against
/// `Beta(ν₁/K, Σ_{j≥2} ν_j/K)`.
pub fn test_dirichlet_limit<E: Executor>(
    nu: &[i64],
    k: i64,
    cfg: VerifyConfig,
    exec: &E,
) -> Result<TestReport> {
    let draws: Vec<Result<f64>> = exec.map(cfg.replicas, |r| {
        let mut rng = stream(cfg.seed, lane(key::CHAIN, LANE_DIRICHLET), r as u64);
        Ok(simulate_polya_eggenberger(nu, k, cfg.n, &mut rng)?[0])
    });
    let xs: Vec<f64> = draws.into_iter().collect::<Result<_>>()?;
    let a = nu[0] as f64 / k as f64;
    let b = nu[1..].iter().sum::<i64>() as f64 / k as f64;
    let (d, p) = ks_one_sample_with_statistic(&xs, |x| beta_inc(a, b, x.clamp(0.0, 1.0)));
    let name = format!("dirichlet nu={nu:?} K={k} n={}", cfg.n);
    Ok(TestReport::new(name, (xs.len(), 0), d, p, cfg.level, cfg.seed))
}

/// KS test of the `ξ` estimates of continuous-time runs from `spec.alpha()`
/// against `Gamma(|α|/S)`.
pub fn test_xi_gamma<E: Executor>(
    spec: &UrnSpec,
    block: &JordanBlock,
    cfg: VerifyConfig,
    exec: &E,
) -> Result<TestReport> {
    let set = w_samples(spec, block, spec.alpha(), Mode::CT, cfg.batch(LANE_XI, cfg.replicas), exec)?;
    let shape = spec.alpha().iter().sum::<i64>() as f64 / spec.balance() as f64;
    let (d, p) = ks_one_sample_with_statistic(&set.xi, |x| gamma_p(shape, x.max(0.0)));
    let name = format!("xi {} vs Gamma({shape})", set.tag);
    Ok(TestReport::new(name, (set.xi.len(), 0), d, p, cfg.level, cfg.seed))
}

/// Shape diagnostics of one standardized component of the small-block
/// projection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeCheck {
    pub component: String,
    pub skewness: f64,
    pub skewness_band: (f64, f64),
    pub excess_kurtosis: f64,
    pub kurtosis_band: (f64, f64),
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub lambda: (f64, f64),
    pub n: u64,
    pub replicas: usize,
    /// `√(Sn)` or `√(Sn ln^{2ν+1} n)` on the critical line.
    pub scale: f64,
    pub critical: bool,
    pub components: Vec<ShapeCheck>,
    pub pass: bool,
    pub seed: u64,
}

pub const SKEW_TOL: f64 = 0.1;
pub const KURTOSIS_TOL: f64 = 0.2;
const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_COVERAGE: f64 = 0.99;

/// Normalizer of the small-block projection after `n` draws.
pub fn small_scale(block: &JordanBlock, s: i64, n: u64) -> f64 {
    let sn = s as f64 * n as f64;
    if is_critical(block.lambda, s as f64) {
        (sn * (n as f64).ln().powi(2 * block.nu as i32 + 1)).sqrt()
    } else {
        sn.sqrt()
    }
}

/// Gaussian shape check of `⟨u_dual, U(n)⟩ / scale` across replicas. Each
/// real component is standardized by its sample moments; it passes when
/// the 99% bootstrap bands of skewness and excess kurtosis reach inside
/// `|·| < 0.1` and `|·| < 0.2` respectively.
pub fn test_small_clt<E: Executor>(
    spec: &UrnSpec,
    block: &JordanBlock,
    cfg: VerifyConfig,
    exec: &E,
) -> Result<CltReport> {
    if block.class != BlockClass::Small {
        return Err(Error::BlockNotSmall(format!("{}", block.lambda)));
    }
    let scale = small_scale(block, spec.balance(), cfg.n);
    let coeffs: Vec<Result<Complex64>> = exec.map(cfg.replicas, |r| {
        let mut rng = stream(cfg.seed, lane(key::CHAIN, LANE_CLT), r as u64);
        let traj = run_dt_from(spec, spec.alpha(), cfg.n, &[], &mut rng)?;
        Ok(block_coefficient_int(block, &traj.composition) / scale)
    });
    let coeffs: Vec<Complex64> = coeffs.into_iter().collect::<Result<_>>()?;
    let mut parts: Vec<(&str, Vec<f64>)> = vec![("re", coeffs.iter().map(|z| z.re).collect())];
    if !block.is_real() {
        parts.push(("im", coeffs.iter().map(|z| z.im).collect()));
    }
    let components: Vec<ShapeCheck> = parts
        .into_iter()
        .enumerate()
        .map(|(k, (label, xs))| {
            let (skewness, excess_kurtosis) = skew_kurtosis(&xs);
            let mut rng = stream(cfg.seed, lane(key::BOOTSTRAP, LANE_CLT), k as u64);
            let skewness_band = bootstrap_band(&xs, BOOTSTRAP_RESAMPLES, BOOTSTRAP_COVERAGE, &mut rng, |v| {
                skew_kurtosis(v).0
            });
            let kurtosis_band = bootstrap_band(&xs, BOOTSTRAP_RESAMPLES, BOOTSTRAP_COVERAGE, &mut rng, |v| {
                skew_kurtosis(v).1
            });
            let reaches = |band: (f64, f64), tol: f64| band.0 < tol && band.1 > -tol;
            let pass = reaches(skewness_band, SKEW_TOL) && reaches(kurtosis_band, KURTOSIS_TOL);
            ShapeCheck {
                component: label.into(),
                skewness,
                skewness_band,
                excess_kurtosis,
                kurtosis_band,
                pass,
            }
        })
        .collect();
    let pass = components.iter().all(|c| c.pass);
    Ok(CltReport {
        lambda: (block.lambda.re, block.lambda.im),
        n: cfg.n,
        replicas: cfg.replicas,
        scale,
        critical: is_critical(block.lambda, spec.balance() as f64),
        components,
        pass,
        seed: cfg.seed,
    })
}

/// Smallest 2-colour urn, by balance and then entries, with a simple
/// eigenvalue on the critical line `Re λ = S/2`.
pub fn critical_spec() -> Option<UrnSpec> {
    for s in 2..=12i64 {
        for a in -1..=s + 1 {
            for b in -1..=s + 1 {
                let r = vec![vec![a, s - a], vec![b, s - b]];
                if 2 * (a - b) != s || (a - b) == s {
                    continue;
                }
                let alpha = vec![1, 1];
                if !validate_tenability(&r, &alpha).holds() || !validate_irreducibility(&r).holds() {
                    continue;
                }
                if let Ok(spec) = UrnSpec::new(r, alpha) {
                    return Some(spec);
                }
            }
        }
    }
    None
}

/// Direct final compositions against the forest representation, one
/// discrete two-sample KS test per coordinate with Bonferroni across
/// coordinates.
pub fn test_forest_decomposition<E: Executor>(
    spec: &UrnSpec,
    basis: &AtomicBasis,
    cfg: VerifyConfig,
    exec: &E,
) -> Result<Vec<TestReport>> {
    let direct: Vec<Result<Vec<i64>>> = exec.map(cfg.replicas, |r| {
        let mut rng = stream(cfg.seed, lane(key::CHAIN, LANE_FOREST), r as u64);
        Ok(run_dt_from(spec, spec.alpha(), cfg.n, &[], &mut rng)?.composition)
    });
    let forest: Vec<Result<Vec<i64>>> = exec.map(cfg.replicas, |r| {
        let mut rng = stream(cfg.seed, lane(key::FOREST, LANE_FOREST), r as u64);
        sample_forest_decomposition(spec, basis, cfg.n, &mut rng)
    });
    let direct: Vec<Vec<i64>> = direct.into_iter().collect::<Result<_>>()?;
    let forest: Vec<Vec<i64>> = forest.into_iter().collect::<Result<_>>()?;
    let d = spec.d();
    (0..d)
        .map(|c| {
            let xs: Vec<i64> = direct.iter().map(|x| x[c]).collect();
            let ys: Vec<i64> = forest.iter().map(|x| x[c]).collect();
            let mut rng = stream(cfg.seed, lane(key::PERMUTATION, LANE_FOREST), c as u64);
            let out = discrete_ks_test(&xs, &ys, cfg.n_perm, &mut rng);
            let name = format!("forest n={} colour {}", cfg.n, c + 1);
            Ok(TestReport::new(
                name,
                (xs.len(), ys.len()),
                out.statistic,
                out.p_value,
                cfg.level / d as f64,
                cfg.seed,
            ))
        })
        .collect()
}
