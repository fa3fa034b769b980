//! Weight laws of the fixed-point systems: Uniform powers, Gamma, Beta and
//! Dirichlet samplers plus their exact moments.

use alloc::vec::Vec;

use num_complex::Complex64;
// std's inherent float methods shadow this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::special::ln_gamma_complex;
use crate::urn::AtomicBasis;
use crate::{Error, Result};

/// Dirichlet parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    pi: Vec<f64>,
}

impl DirichletParams {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::InvalidParameter("empty Dirichlet parameter".into()));
        }
        if let Some(p) = pi.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidParameter(alloc::format!("Dirichlet parameter {p} is not positive")));
        }
        Ok(Self { pi })
    }

    /// Parameters `θ_i / S` over the slots of the split of colour `c`.
    pub fn dislocation(basis: &AtomicBasis, c: usize) -> Self {
        Self { pi: basis.slot_weights(&basis.split_slots(c)) }
    }

    /// Parameters `θ_i / S` over the root atoms of the initial composition.
    pub fn decomposition(basis: &AtomicBasis) -> Self {
        Self { pi: basis.slot_weights(&basis.root_slots()) }
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.pi.iter().sum()
    }
}

fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// `ln G` for `G ~ Gamma(shape, 1)`. Working on the log scale keeps tiny
/// shapes from underflowing to zero.
pub fn sample_ln_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        // G(a) = G(a+1) · U^{1/a}
        let boost = open_uniform(rng).ln() / shape;
        return sample_ln_gamma(shape + 1.0, rng) + boost;
    }
    // Marsaglia–Tsang
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_uniform(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    sample_ln_gamma(shape, rng).exp()
}

/// Exponential with the given rate.
pub fn sample_exp<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    -open_uniform(rng).ln() / rate
}

pub fn sample_dirichlet<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> Vec<f64> {
    sample_ln_dirichlet(params, rng).into_iter().map(f64::exp).collect()
}

/// Componentwise logarithm of a Dirichlet vector. Powers `V_k^z` taken
/// from these stay accurate when a component underflows `f64`.
pub fn sample_ln_dirichlet<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> Vec<f64> {
    let mut logs: Vec<f64> = params.pi.iter().map(|&a| sample_ln_gamma(a, rng)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    for l in &mut logs {
        *l -= norm;
    }
    logs
}

pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let la = sample_ln_gamma(a, rng);
    let lb = sample_ln_gamma(b, rng);
    // a/(a+b) computed as 1/(1+e^{lb−la})
    1.0 / (1.0 + (lb - la).exp())
}

/// `E|U^{μp}| = 1/(p Re μ + 1)` for `U` uniform on `[0,1]`.
pub fn power_moment_uniform(mu: Complex64, p: u32) -> Result<f64> {
    let e = f64::from(p) * mu.re;
    if e <= -1.0 {
        return Err(Error::DivergentMoment(alloc::format!("E|U^(mu p)| diverges for p Re mu = {e}")));
    }
    Ok(1.0 / (e + 1.0))
}

/// `E[U^z] = 1/(z+1)`.
pub fn complex_moment_uniform(z: Complex64) -> Result<Complex64> {
    if z.re <= -1.0 {
        return Err(Error::DivergentMoment(alloc::format!("E[U^z] diverges for z = {z}")));
    }
    Ok(Complex64::new(1.0, 0.0) / (z + 1.0))
}

/// `E[G^z] = Γ(a+z)/Γ(a)` for `G ~ Gamma(a)`.
pub fn gamma_complex_moment(a: f64, z: Complex64) -> Result<Complex64> {
    let w = z + a;
    let nearest = w.re.round();
    if w.im.abs() < 1e-9 && nearest <= 0.0 && (w.re - nearest).abs() < 1e-9 {
        return Err(Error::PoleError(alloc::format!("Gamma pole at a + z = {w}")));
    }
    if a <= 0.0 {
        return Err(Error::PoleError(alloc::format!("Gamma shape {a} is not positive")));
    }
    Ok((ln_gamma_complex(w) - ln_gamma_complex(Complex64::new(a, 0.0))).exp())
}
