//! Exact joint moments `E[W^p W̄^q]` of the limit variables.
//!
//! Raising the continuous-time smoothing system to the mixed power `(p,q)`
//! and taking expectations gives, per total degree `m = p+q ≥ 2`, the
//! linear system `(zΘ − Ã)·m_{p,q} = r_{p,q}` with `z = pλ + qλ̄`,
//! `Θ = diag(1/θ_i)`. The right side collects every way of spreading
//! `(p,q)` over the independent summands without putting all of it on one
//! summand; it is read off a product of bivariate exponential generating
//! functions. Degree one is the mean vector. This mixed-index extension is
//! our own construction built on the same derivation as the absolute
//! moments.
//!
//! Discrete-time moments follow from `W^CT = S^ν ξ^{λ/S} W^DT` with `ξ`
//! independent and `Gamma(θ_c/S)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// std's inherent float methods shadow this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::distributions::gamma_complex_moment;
use crate::linalg::{det, solve, CMatrix};
use crate::simulate::Mode;
use crate::spectral::{BlockClass, JordanBlock};
use crate::urn::{AtomicBasis, UrnSpec};
use crate::{Error, Result};

pub const MAX_ORDER: usize = 20;

/// `m^{(c)}_{p,q}` for every colour and `p + q ≤ p_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub mode: Mode,
    pub lambda: Complex64,
    pub nu: usize,
    pub p_max: usize,
    /// `values[c][p][q]`, zero where `p + q > p_max`.
    values: Vec<Vec<Vec<Complex64>>>,
}

impl MomentTable {
    pub fn colours(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, c: usize, p: usize, q: usize) -> Complex64 {
        self.values[c][p][q]
    }

    /// `E|W|^{2p}` for colour `c`.
    pub fn absolute(&self, c: usize, p: usize) -> f64 {
        self.values[c][p][p].re
    }

    /// All `(p, q)` with `p + q ≤ p_max`, ordered by degree then `q`.
    pub fn indices(&self) -> Vec<(usize, usize)> {
        (0..=self.p_max).flat_map(|m| (0..=m).map(move |q| (m - q, q))).collect()
    }
}

fn require_simple_large(block: &JordanBlock) -> Result<()> {
    if block.class != BlockClass::Large {
        return Err(Error::BlockNotLarge(format!("{}", block.lambda)));
    }
    if block.nu > 0 {
        return Err(Error::Unsupported(format!(
            "moment recursion for a Jordan block of size {} (only size 1 is supported)",
            block.nu + 1
        )));
    }
    Ok(())
}

/// `E W^CT_{ẽ_c}` for every colour: the leading coefficient of `e^{tRᵀ}ẽ_c`
/// along `v`, which is exact at every `t`.
pub fn mean_vector(basis: &AtomicBasis, block: &JordanBlock) -> Vec<Complex64> {
    (0..basis.d()).map(|c| block.top_dual()[c] * basis.theta[c] as f64).collect()
}

/// `E W^CT_α = ⟨top dual, α⟩`.
pub fn ct_mean(block: &JordanBlock, alpha: &[i64]) -> Complex64 {
    block.top_dual().iter().zip(alpha).map(|(u, &a)| u * a as f64).sum()
}

/// `E W^DT_α = E W^CT_α / (S^ν · Γ((|α|+λ)/S)/Γ(|α|/S))`.
pub fn dt_mean(block: &JordanBlock, alpha: &[i64], s: i64) -> Result<Complex64> {
    let total: i64 = alpha.iter().sum();
    let ratio = gamma_complex_moment(total as f64 / s as f64, block.lambda / s as f64)?;
    Ok(ct_mean(block, alpha) / (ratio * (s as f64).powi(block.nu as i32)))
}

pub fn dt_mean_vector(basis: &AtomicBasis, block: &JordanBlock) -> Result<Vec<Complex64>> {
    (0..basis.d()).map(|c| dt_mean(block, &basis.atom(c), basis.s)).collect()
}

/// Truncated bivariate polynomial `Σ c[a][b] s^a t^b` with `a + b ≤ deg`.
#[derive(Clone)]
struct BiPoly {
    deg: usize,
    c: Vec<Vec<Complex64>>,
}

impl BiPoly {
    fn one(deg: usize) -> Self {
        let mut c = vec![vec![Complex64::zero(); deg + 1]; deg + 1];
        c[0][0] = Complex64::new(1.0, 0.0);
        Self { deg, c }
    }

    fn mul(&self, other: &Self) -> Self {
        let deg = self.deg;
        let mut c = vec![vec![Complex64::zero(); deg + 1]; deg + 1];
        for a1 in 0..=deg {
            for b1 in 0..=deg - a1 {
                let x = self.c[a1][b1];
                if x.is_zero() {
                    continue;
                }
                for a2 in 0..=deg - a1 - b1 {
                    for b2 in 0..=deg - a1 - b1 - a2 {
                        c[a1 + a2][b1 + b2] += x * other.c[a2][b2];
                    }
                }
            }
        }
        Self { deg, c }
    }

    fn pow(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.deg);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Exact continuous-time joint moments up to total degree `p_max`.
pub fn ct_joint_moments(
    spec: &UrnSpec,
    basis: &AtomicBasis,
    block: &JordanBlock,
    p_max: usize,
) -> Result<MomentTable> {
    require_simple_large(block)?;
    if p_max > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("p_max {p_max} exceeds {MAX_ORDER}")));
    }
    let d = spec.d();
    let lambda = block.lambda;
    let fact = factorials(p_max);
    let mut values = vec![vec![vec![Complex64::zero(); p_max + 1]; p_max + 1]; d];
    let mean = mean_vector(basis, block);
    for c in 0..d {
        values[c][0][0] = Complex64::new(1.0, 0.0);
        if p_max >= 1 {
            values[c][1][0] = mean[c];
            values[c][0][1] = mean[c].conj();
        }
    }

    for m in 2..=p_max {
        // EGFs with every coefficient of total degree ≥ m dropped
        let egf: Vec<BiPoly> = (0..d)
            .map(|i| {
                let mut poly = BiPoly::one(m);
                for a in 0..m {
                    for b in 0..m - a {
                        poly.c[a][b] = values[i][a][b] / (fact[a] * fact[b]);
                    }
                }
                poly
            })
            .collect();
        let products: Vec<BiPoly> = (0..d)
            .map(|c| {
                (0..d).fold(BiPoly::one(m), |acc, i| {
                    let k = basis.multiplicity(c, i);
                    if k == 0 {
                        acc
                    } else {
                        acc.mul(&egf[i].pow(k as u64))
                    }
                })
            })
            .collect();
        for q in 0..=m {
            let p = m - q;
            let z = lambda * p as f64 + lambda.conj() * q as f64;
            let mut system = CMatrix::zeros(d, d);
            for c in 0..d {
                for i in 0..d {
                    system[(c, i)] = Complex64::new(-(basis.a_tilde[c][i] as f64), 0.0);
                }
                system[(c, c)] += z / basis.theta[c] as f64;
            }
            let rhs: Vec<Complex64> = (0..d).map(|c| products[c].c[p][q] * fact[p] * fact[q]).collect();
            let sol = solve(&system, &rhs).map_err(|_| {
                Error::SingularSystem(format!("degree ({p},{q}) system at z = {z} is singular"))
            })?;
            for c in 0..d {
                values[c][p][q] = sol[c];
            }
        }
    }
    Ok(MomentTable { mode: Mode::CT, lambda, nu: block.nu, p_max, values })
}

/// Discrete-time joint moments from the continuous-time table.
pub fn dt_joint_moments(ct: &MomentTable, basis: &AtomicBasis) -> Result<MomentTable> {
    if ct.mode != Mode::CT {
        return Err(Error::InvalidParameter("expected a continuous-time table".into()));
    }
    let s = basis.s as f64;
    let mut values = ct.values.clone();
    for (c, table) in values.iter_mut().enumerate() {
        let shape = basis.theta[c] as f64 / s;
        for (p, q) in ct.indices() {
            let z = (ct.lambda * p as f64 + ct.lambda.conj() * q as f64) / s;
            let factor = gamma_complex_moment(shape, z)? * s.powi(((p + q) * ct.nu) as i32);
            table[p][q] /= factor;
        }
    }
    Ok(MomentTable { mode: Mode::DT, values, ..ct.clone() })
}

/// `det(zΘ − Ã)` and `Πθ_i^{-1}·det(zI − R)`, which agree exactly.
pub fn determinant_identity(spec: &UrnSpec, basis: &AtomicBasis, z: Complex64) -> (Complex64, Complex64) {
    let d = spec.d();
    let mut lhs = CMatrix::zeros(d, d);
    let mut rhs = CMatrix::zeros(d, d);
    for c in 0..d {
        for i in 0..d {
            lhs[(c, i)] = Complex64::new(-(basis.a_tilde[c][i] as f64), 0.0);
            rhs[(c, i)] = Complex64::new(-(spec.entry(c, i) as f64), 0.0);
        }
        lhs[(c, c)] += z / basis.theta[c] as f64;
        rhs[(c, c)] += z;
    }
    let theta_prod: f64 = basis.theta.iter().map(|&t| t as f64).product();
    (det(&lhs), det(&rhs) / theta_prod)
}

/// One row of the moment-growth diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanRow {
    pub p: usize,
    /// `(E|W|^{2p} / ((2p)! φ(2p)))^{1/(2p)}` with `φ(k) = ln^k(k+2)`.
    pub bound_ratio: f64,
    /// `Σ_{k≤p} (E|W|^{2k})^{-1/(2k)}`.
    pub carleman_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanDiagnostic {
    pub colour: usize,
    pub rows: Vec<CarlemanRow>,
    /// The bound ratio never exceeds its running maximum over the first
    /// half of the rows during the second half.
    pub bounded: bool,
}

fn ln_phi(k: usize) -> f64 {
    k as f64 * ((k + 2) as f64).ln().ln()
}

pub fn carleman_diagnostic(table: &MomentTable) -> Vec<CarlemanDiagnostic> {
    let half = table.p_max / 2;
    (0..table.colours())
        .map(|c| {
            let mut sum = 0.0;
            let mut ln_fact = 0.0;
            let mut rows = Vec::with_capacity(half);
            for p in 1..=half {
                let k = 2 * p;
                ln_fact += ((k - 1) as f64).ln() + (k as f64).ln();
                let m = table.absolute(c, p);
                let ratio = ((m.ln() - ln_fact - ln_phi(k)) / k as f64).exp();
                sum += m.powf(-1.0 / k as f64);
                rows.push(CarlemanRow { p, bound_ratio: ratio, carleman_sum: sum });
            }
            let split = rows.len() / 2;
            let early = rows[..split].iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
            let bounded = rows[split..]
                .iter()
                .all(|r| r.bound_ratio.is_finite() && r.bound_ratio <= early * (1.0 + 1e-12));
            CarlemanDiagnostic { colour: c, rows, bounded }
        })
        .collect()
}

/// `Φ_c(p)` by convolution over compositions of `p` into `γ_d^{(c)}` parts,
/// each at most `p − 1`, and the bound `(1 + 8 ln(p+2))^{γ_d^{(c)}}`.
pub fn phi_bound_check(basis: &AtomicBasis, c: usize, p: usize) -> (f64, f64) {
    let gamma = basis.split_size(c);
    (phi(gamma, p), (1.0 + 8.0 * ((p + 2) as f64).ln()).powi(gamma as i32))
}

pub fn phi(gamma: usize, p: usize) -> f64 {
    if p == 0 {
        return 0.0;
    }
    let weights: Vec<f64> = (0..p).map(|k| ln_phi(k).exp()).collect();
    // ways[s] = Σ over compositions of s into j parts of Π φ(parts)
    let mut ways = vec![0.0; p + 1];
    ways[0] = 1.0;
    for _ in 0..gamma {
        let mut next = vec![0.0; p + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (k, &phi_k) in weights.iter().enumerate() {
                if s + k > p {
                    break;
                }
                next[s + k] += w * phi_k;
            }
        }
        ways = next;
    }
    ways[p] / ln_phi(p).exp()
}
