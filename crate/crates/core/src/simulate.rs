//! Discrete-time simulation, the continuous-time embedding, Monte-Carlo
//! estimates of `W` and `ξ`, Pólya–Eggenberger urns and the forest
//! decomposition of a composition into independent atomic urns.
//!
//! Ring times of the embedding are independent of the jump chain (ring `k`
//! waits `Exp(|α| + (k−1)S)`), so `run_ct` draws them from a second stream
//! and its jump chain is the `run_dt` chain state for state.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// std's inherent float methods shadow this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::distributions::sample_exp;
use crate::exec::Executor;
use crate::rng::{key, lane, stream};
use crate::spectral::{BlockClass, JordanBlock};
use crate::urn::{AtomicBasis, UrnSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryDT {
    pub initial: Vec<i64>,
    pub composition: Vec<i64>,
    pub n: u64,
    pub checkpoints: Vec<(u64, Vec<i64>)>,
}

impl TrajectoryDT {
    pub fn total(&self) -> i64 {
        self.composition.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCT {
    pub chain: TrajectoryDT,
    pub tau: Vec<f64>,
}

impl TrajectoryCT {
    /// `τ_n`, or 0 before the first ring.
    pub fn time(&self) -> f64 {
        self.tau.last().copied().unwrap_or(0.0)
    }
}

/// Colour of a uniformly drawn ball.
pub fn draw_colour<R: Rng + ?Sized>(state: &[i64], total: i64, rng: &mut R) -> usize {
    let u = rng.random_range(0..total as u64) as i64;
    let mut acc = 0;
    for (c, &x) in state.iter().enumerate() {
        acc += x;
        if u < acc {
            return c;
        }
    }
    state.len() - 1
}

/// Add row `c` of `R` to `state`.
pub fn apply_draw(state: &mut [i64], spec: &UrnSpec, c: usize) -> Result<()> {
    for (x, &a) in state.iter_mut().zip(&spec.matrix()[c]) {
        *x += a;
    }
    // only the diagonal entry can be negative
    if state[c] < 0 {
        return Err(Error::TenabilityViolation { colour: c, coordinate: c });
    }
    Ok(())
}

/// One draw. Returns the drawn colour.
pub fn step_dt<R: Rng + ?Sized>(state: &mut [i64], spec: &UrnSpec, rng: &mut R) -> Result<usize> {
    let total: i64 = state.iter().sum();
    if total <= 0 {
        return Err(Error::EmptyComposition);
    }
    let c = draw_colour(state, total, rng);
    apply_draw(state, spec, c)?;
    Ok(c)
}

pub fn run_dt<R: Rng + ?Sized>(spec: &UrnSpec, n: u64, rng: &mut R) -> Result<TrajectoryDT> {
    run_dt_from(spec, spec.alpha(), n, &[], rng)
}

/// Run `n` draws from `initial`, recording the composition after each step
/// listed in `checkpoints`.
pub fn run_dt_from<R: Rng + ?Sized>(
    spec: &UrnSpec,
    initial: &[i64],
    n: u64,
    checkpoints: &[u64],
    rng: &mut R,
) -> Result<TrajectoryDT> {
    let d = spec.d();
    if initial.len() != d {
        return Err(Error::CompositionLength { got: initial.len(), expected: d });
    }
    let s = spec.balance();
    let flat: Vec<i64> = spec.matrix().iter().flatten().copied().collect();
    let mut state = initial.to_vec();
    let mut total: i64 = state.iter().sum();
    if total <= 0 && n > 0 {
        return Err(Error::EmptyComposition);
    }
    let mut recorded = Vec::new();
    let mut next_cp = checkpoints.iter().copied().peekable();
    while next_cp.peek() == Some(&0) {
        recorded.push((0, state.clone()));
        next_cp.next();
    }
    for step in 1..=n {
        let c = draw_colour(&state, total, rng);
        let row = &flat[c * d..(c + 1) * d];
        for (x, &a) in state.iter_mut().zip(row) {
            *x += a;
        }
        if state[c] < 0 {
            return Err(Error::TenabilityViolation { colour: c, coordinate: c });
        }
        total += s;
        while next_cp.peek() == Some(&step) {
            recorded.push((step, state.clone()));
            next_cp.next();
        }
    }
    Ok(TrajectoryDT { initial: initial.to_vec(), composition: state, n, checkpoints: recorded })
}

/// Ring times for `n` rings started from `initial_total` balls.
pub fn ring_times<R: Rng + ?Sized>(initial_total: i64, s: i64, n: u64, rng: &mut R) -> Vec<f64> {
    let mut t = 0.0;
    (0..n)
        .map(|k| {
            t += sample_exp((initial_total + k as i64 * s) as f64, rng);
            t
        })
        .collect()
}

/// `τ_n` alone.
pub fn ring_time<R: Rng + ?Sized>(initial_total: i64, s: i64, n: u64, rng: &mut R) -> f64 {
    (0..n).map(|k| sample_exp((initial_total + k as i64 * s) as f64, rng)).sum()
}

pub fn run_ct<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    spec: &UrnSpec,
    n: u64,
    chain_rng: &mut R1,
    time_rng: &mut R2,
) -> Result<TrajectoryCT> {
    let chain = run_dt(spec, n, chain_rng)?;
    let tau = ring_times(spec.alpha().iter().sum(), spec.balance(), n, time_rng);
    Ok(TrajectoryCT { chain, tau })
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn require_not_small(block: &JordanBlock) -> Result<()> {
    if block.class == BlockClass::Small {
        return Err(Error::BlockNotLarge(alloc::format!("{}", block.lambda)));
    }
    Ok(())
}

fn coefficient(block: &JordanBlock, composition: &[i64]) -> Complex64 {
    block.u_dual().iter().zip(composition).map(|(u, &x)| u * x as f64).sum()
}

/// `ν!·⟨u_dual, U⟩ / (n^{λ/S} ln^ν n)`.
pub fn w_dt(composition: &[i64], n: u64, block: &JordanBlock, s: i64) -> Result<Complex64> {
    require_not_small(block)?;
    let ln_n = (n as f64).ln();
    if n == 0 || (block.nu > 0 && n < 2) {
        return Err(Error::InvalidParameter(alloc::format!("W estimate needs more than {n} steps")));
    }
    let scale = (block.lambda / s as f64 * ln_n).exp() * ln_n.powi(block.nu as i32);
    Ok(coefficient(block, composition) * factorial(block.nu) / scale)
}

/// `ν!·⟨u_dual, U⟩ / (t^ν e^{λt})`.
pub fn w_ct(composition: &[i64], t: f64, block: &JordanBlock) -> Result<Complex64> {
    require_not_small(block)?;
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidParameter(alloc::format!("W estimate needs t > 0, got {t}")));
    }
    let scale = (block.lambda * t).exp() * t.powi(block.nu as i32);
    Ok(coefficient(block, composition) * factorial(block.nu) / scale)
}

pub fn extract_w(traj: &TrajectoryDT, block: &JordanBlock, s: i64) -> Result<Complex64> {
    w_dt(&traj.composition, traj.n, block, s)
}

pub fn extract_w_ct(traj: &TrajectoryCT, block: &JordanBlock) -> Result<Complex64> {
    w_ct(&traj.chain.composition, traj.time(), block)
}

/// `n·e^{−Sτ_n}`.
pub fn extract_xi(traj: &TrajectoryCT, s: i64) -> f64 {
    xi_estimate(traj.chain.n, traj.time(), s)
}

pub fn xi_estimate(n: u64, tau: f64, s: i64) -> f64 {
    n as f64 * (-(s as f64) * tau).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    DT,
    CT,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::DT => "DT",
            Mode::CT => "CT",
        }
    }
}

/// Monte-Carlo estimates of `W` for one initial composition.
#[derive(Debug, Clone, PartialEq)]
pub struct WSampleSet {
    pub mode: Mode,
    pub tag: String,
    pub lambda: Complex64,
    pub nu: usize,
    pub v: Vec<Complex64>,
    pub n: u64,
    pub seed: u64,
    pub lane: u64,
    pub samples: Vec<Complex64>,
    /// `ξ` estimates from the same replicas (continuous time only).
    pub xi: Vec<f64>,
}

impl WSampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Parameters of a batch of replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Batch {
    pub n: u64,
    pub replicas: usize,
    pub seed: u64,
    /// Separates independent batches drawn with the same seed.
    pub lane: u64,
}

/// `replicas` independent estimates of `W` started from `initial`. Replica
/// `r` uses chain stream `(seed, CHAIN⊕lane, r)` and, in continuous time,
/// ring-time stream `(seed, RING_TIMES⊕lane, r)`.
pub fn w_samples<E: Executor>(
    spec: &UrnSpec,
    block: &JordanBlock,
    initial: &[i64],
    mode: Mode,
    batch: Batch,
    exec: &E,
) -> Result<WSampleSet> {
    require_not_small(block)?;
    let s = spec.balance();
    let start_total: i64 = initial.iter().sum();
    let results: Vec<Result<(Complex64, f64)>> = exec.map(batch.replicas, |r| {
        let mut chain_rng = stream(batch.seed, lane(key::CHAIN, batch.lane), r as u64);
        let traj = run_dt_from(spec, initial, batch.n, &[], &mut chain_rng)?;
        match mode {
            Mode::DT => Ok((w_dt(&traj.composition, batch.n, block, s)?, 0.0)),
            Mode::CT => {
                let mut time_rng = stream(batch.seed, lane(key::RING_TIMES, batch.lane), r as u64);
                let tau = ring_time(start_total, s, batch.n, &mut time_rng);
                Ok((w_ct(&traj.composition, tau, block)?, xi_estimate(batch.n, tau, s)))
            }
        }
    });
    let mut samples = Vec::with_capacity(batch.replicas);
    let mut xi = Vec::new();
    for res in results {
        let (w, x) = res?;
        samples.push(w);
        if mode == Mode::CT {
            xi.push(x);
        }
    }
    Ok(WSampleSet {
        mode,
        tag: composition_tag(initial),
        lambda: block.lambda,
        nu: block.nu,
        v: block.v().to_vec(),
        n: batch.n,
        seed: batch.seed,
        lane: batch.lane,
        samples,
        xi,
    })
}

/// W samples for every atomic composition `ẽ_c`; colour `c` uses lane
/// `batch.lane + c`.
pub fn atomic_w_samples<E: Executor>(
    spec: &UrnSpec,
    basis: &AtomicBasis,
    block: &JordanBlock,
    mode: Mode,
    batch: Batch,
    exec: &E,
) -> Result<Vec<WSampleSet>> {
    (0..spec.d())
        .map(|c| {
            let b = Batch { lane: batch.lane + c as u64, ..batch };
            let mut set = w_samples(spec, block, &basis.atom(c), mode, b, exec)?;
            set.tag = alloc::format!("e{}", c + 1);
            Ok(set)
        })
        .collect()
}

fn composition_tag(x: &[i64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| alloc::format!("{v}")).collect();
    alloc::format!("({})", parts.join(","))
}

/// Pólya–Eggenberger urn: each drawn ball is returned with `K` more of its
/// colour. Returns the raw final counts.
pub fn polya_eggenberger_counts<R: Rng + ?Sized>(initial: &[i64], k: i64, n: u64, rng: &mut R) -> Vec<i64> {
    let mut state = initial.to_vec();
    let mut total: i64 = state.iter().sum();
    for _ in 0..n {
        let c = draw_colour(&state, total, rng);
        state[c] += k;
        total += k;
    }
    state
}

/// `D(n)/(nK)` for the Pólya–Eggenberger urn started from `nu`.
pub fn simulate_polya_eggenberger<R: Rng + ?Sized>(
    nu: &[i64],
    k: i64,
    n: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if nu.len() < 2 || nu.iter().any(|&x| x <= 0) || k < 1 {
        return Err(Error::InvalidParameter("need ≥ 2 positive initial counts and K ≥ 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("normalization needs n ≥ 1".into()));
    }
    let counts = polya_eggenberger_counts(nu, k, n, rng);
    let scale = n as f64 * k as f64;
    Ok(counts.iter().map(|&x| x as f64 / scale).collect())
}

/// One sample of the right-hand side of the forest decomposition: the root
/// atoms of `α` share `n` draws as a Pólya–Eggenberger urn with `K = S`,
/// then each atom runs an independent atomic urn for its share of draws.
pub fn sample_forest_decomposition<R: Rng + ?Sized>(
    spec: &UrnSpec,
    basis: &AtomicBasis,
    n: u64,
    rng: &mut R,
) -> Result<Vec<i64>> {
    let roots = basis.root_slots();
    let omega: Vec<i64> = roots.iter().map(|&c| basis.theta[c]).collect();
    let s = spec.balance();
    let sizes = polya_eggenberger_counts(&omega, s, n, rng);
    let mut out = vec![0i64; spec.d()];
    for ((&c, &w), &size) in roots.iter().zip(&omega).zip(&sizes) {
        let draws = ((size - w) / s) as u64;
        let traj = run_dt_from(spec, &basis.atom(c), draws, &[], rng)?;
        for (o, x) in out.iter_mut().zip(&traj.composition) {
            *o += x;
        }
    }
    Ok(out)
}
