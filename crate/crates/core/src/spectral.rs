//! Eigenvalues, Jordan chains, projectors and Perron data of `R`.
//!
//! Eigenvalues come from the exact integer characteristic polynomial:
//! square-free factorization fixes algebraic multiplicities exactly and
//! each square-free factor is solved by Aberth iteration. Jordan chains are
//! built in the space of `Rᵀ` (see the crate conventions) from nested null
//! spaces of `(Rᵀ − λI)^j`, with SVD rank decisions that refuse to guess
//! when a singular value lands in the ambiguous band.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
// std's inherent float methods shadow this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::linalg::{dot, hdot, inverse, norm, svd, CMatrix};
use crate::poly::{characteristic_polynomial, degree, eval_int, roots, square_free_factors, to_f64};
use crate::urn::UrnSpec;
use crate::{Error, Result};

/// Singular values below `RANK_TOL·scale` count as zero.
pub const RANK_TOL: f64 = 1e-8;
/// Singular values in `[BAND_LO, BAND_HI]·scale` make the rank ambiguous.
pub const BAND_LO: f64 = 1e-10;
pub const BAND_HI: f64 = 1e-6;
/// Tolerance for matching a requested eigenvalue.
pub const SELECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockClass {
    Principal,
    Large,
    Small,
}

impl BlockClass {
    pub fn name(self) -> &'static str {
        match self {
            BlockClass::Principal => "principal",
            BlockClass::Large => "large",
            BlockClass::Small => "small",
        }
    }
}

/// Classification by `σ = Re λ / S`. Ratios within `1e-9` of `1/2` are
/// snapped to the boundary, which belongs to the small class.
pub fn classify(lambda: Complex64, s: f64) -> BlockClass {
    if (lambda - Complex64::new(s, 0.0)).norm() <= 1e-9 * s.abs().max(1.0) {
        return BlockClass::Principal;
    }
    let sigma = lambda.re / s;
    if sigma > 0.5 + 1e-9 {
        BlockClass::Large
    } else {
        BlockClass::Small
    }
}

/// Whether `Re λ = S/2` up to the classification snap.
pub fn is_critical(lambda: Complex64, s: f64) -> bool {
    (lambda.re / s - 0.5).abs() <= 1e-9
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// One Jordan block of `Rᵀ`.
///
/// `chain[0] = v` and `(Rᵀ − λI)·chain[k+1] = chain[k]`. `duals[k]` is the
/// row of the inverse similarity transform matching `chain[k]`, so
/// `u_dual = duals[0]` gives the coefficient along `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanBlock {
    pub lambda: Complex64,
    pub nu: usize,
    pub class: BlockClass,
    pub chain: Vec<Vec<Complex64>>,
    pub duals: Vec<Vec<Complex64>>,
    pub projector: CMatrix,
}

impl JordanBlock {
    pub fn v(&self) -> &[Complex64] {
        &self.chain[0]
    }

    pub fn u_dual(&self) -> &[Complex64] {
        &self.duals[0]
    }

    /// Dual of the top chain vector; it carries the leading coefficient of
    /// `e^{tRᵀ}x` along `v`.
    pub fn top_dual(&self) -> &[Complex64] {
        &self.duals[self.nu]
    }

    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub s: i64,
    pub eigenvalues: Vec<Eigenvalue>,
    pub blocks: Vec<JordanBlock>,
}

impl Spectrum {
    /// First block whose eigenvalue lies within [`SELECT_TOL`] of `target`.
    pub fn block(&self, target: Complex64) -> Result<&JordanBlock> {
        self.blocks
            .iter()
            .find(|b| (b.lambda - target).norm() <= SELECT_TOL)
            .ok_or_else(|| Error::EigenvalueNotFound { target: format!("{target}"), tol: SELECT_TOL })
    }

    pub fn principal(&self) -> Option<&JordanBlock> {
        self.blocks.iter().find(|b| b.class == BlockClass::Principal)
    }

    pub fn large_blocks(&self) -> impl Iterator<Item = &JordanBlock> {
        self.blocks.iter().filter(|b| b.class == BlockClass::Large)
    }

    /// Largest real part among non-principal eigenvalues.
    pub fn subdominant_real_part(&self) -> Option<f64> {
        self.blocks
            .iter()
            .filter(|b| b.class != BlockClass::Principal)
            .map(|b| b.lambda.re)
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
    }
}

pub fn eigen_spectrum(spec: &UrnSpec) -> Result<Spectrum> {
    spectrum_of_matrix(spec.matrix(), spec.balance())
}

/// Spectrum of an arbitrary square integer matrix, classified against `s`.
pub fn spectrum_of_matrix(r: &[Vec<i64>], s: i64) -> Result<Spectrum> {
    let d = r.len();
    let eigenvalues = eigenvalues(r);
    let a = CMatrix::from_integers(r).transpose();

    let mut raw: Vec<(Complex64, Vec<Vec<Complex64>>)> = Vec::new();
    for ev in &eigenvalues {
        let lambda = ev.value;
        if lambda.im < 0.0 {
            // conjugates of the partner's chains, processed just before
            let conj: Vec<Vec<Vec<Complex64>>> = raw
                .iter()
                .filter(|(l, _)| *l == lambda.conj())
                .map(|(_, chain)| chain.iter().map(|x| x.iter().map(|z| z.conj()).collect()).collect())
                .collect();
            if !conj.is_empty() {
                raw.extend(conj.into_iter().map(|chain| (lambda, chain)));
                continue;
            }
        }
        for chain in jordan_chains(&a, lambda, ev.multiplicity)? {
            raw.push((lambda, chain));
        }
    }

    let columns: Vec<Vec<Complex64>> = raw.iter().flat_map(|(_, c)| c.iter().cloned()).collect();
    if columns.len() != d {
        return Err(Error::DegenerateStructure {
            eigenvalue: "all".into(),
            detail: format!("chains span {} of {d} dimensions", columns.len()),
        });
    }
    let p = CMatrix::from_columns(&columns);
    let p_inv = inverse(&p).map_err(|_| Error::DegenerateStructure {
        eigenvalue: "all".into(),
        detail: "Jordan basis is singular".into(),
    })?;

    let mut blocks = Vec::with_capacity(raw.len());
    let mut offset = 0;
    for (lambda, chain) in raw {
        let len = chain.len();
        let duals: Vec<Vec<Complex64>> = (offset..offset + len).map(|row| p_inv.row(row).to_vec()).collect();
        let mut projector = CMatrix::zeros(d, d);
        for (x, y) in chain.iter().zip(&duals) {
            for i in 0..d {
                for j in 0..d {
                    projector[(i, j)] += x[i] * y[j];
                }
            }
        }
        blocks.push(JordanBlock {
            lambda,
            nu: len - 1,
            class: classify(lambda, s as f64),
            chain,
            duals,
            projector,
        });
        offset += len;
    }
    Ok(Spectrum { s, eigenvalues, blocks })
}

/// Distinct eigenvalues with algebraic multiplicities, sorted by
/// decreasing real part and then decreasing imaginary part.
pub fn eigenvalues(r: &[Vec<i64>]) -> Vec<Eigenvalue> {
    let cp = characteristic_polynomial(r);
    let mut out = Vec::new();
    for (factor, multiplicity) in square_free_factors(&cp) {
        if degree(&factor) == 0 {
            continue;
        }
        let mut zs = roots(&to_f64(&factor));
        for z in zs.iter_mut() {
            let k = z.re.round();
            if z.im.abs() < 1e-6
                && (z.re - k).abs() < 1e-6
                && eval_int(&factor, &BigInt::from(k as i64)).is_zero()
            {
                *z = Complex64::new(k, 0.0);
            } else if z.im.abs() < 1e-10 * z.norm().max(1.0) {
                z.im = 0.0;
            }
        }
        pair_conjugates(&mut zs);
        out.extend(zs.into_iter().map(|value| Eigenvalue { value, multiplicity }));
    }
    out.sort_by(|a, b| b.value.re.total_cmp(&a.value.re).then(b.value.im.total_cmp(&a.value.im)));
    out
}

/// Make every root with positive imaginary part have an exact conjugate.
fn pair_conjugates(zs: &mut [Complex64]) {
    let upper: Vec<usize> = (0..zs.len()).filter(|&i| zs[i].im > 0.0).collect();
    let mut used = Vec::new();
    for i in upper {
        let target = zs[i].conj();
        let partner = (0..zs.len())
            .filter(|&j| zs[j].im < 0.0 && !used.contains(&j))
            .min_by(|&a, &b| (zs[a] - target).norm().total_cmp(&(zs[b] - target).norm()));
        if let Some(j) = partner {
            let mid = Complex64::new((zs[i].re + zs[j].re) / 2.0, (zs[i].im - zs[j].im) / 2.0);
            zs[i] = mid;
            zs[j] = mid.conj();
            used.push(j);
        }
    }
}

fn degenerate(lambda: Complex64, detail: alloc::string::String) -> Error {
    Error::DegenerateStructure { eigenvalue: format!("{lambda}"), detail }
}

/// Null space of `b` with the rank-band check.
fn checked_kernel(b: &CMatrix, lambda: Complex64) -> Result<Vec<Vec<Complex64>>> {
    let scale = b.frobenius().max(1.0);
    let dec = svd(b);
    for &sigma in &dec.sigma {
        if sigma >= BAND_LO * scale && sigma <= BAND_HI * scale {
            return Err(degenerate(
                lambda,
                format!("singular value {sigma:e} inside the ambiguous band (scale {scale:e})"),
            ));
        }
    }
    Ok((0..b.cols()).filter(|&j| dec.sigma[j] < RANK_TOL * scale).map(|j| dec.v.column(j)).collect())
}

/// Orthonormal real basis spanning the real and imaginary parts of `basis`,
/// trimmed to `basis.len()` vectors.
fn realify(basis: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut candidates = Vec::new();
    for x in basis {
        candidates.push(x.iter().map(|z| Complex64::new(z.re, 0.0)).collect::<Vec<_>>());
        candidates.push(x.iter().map(|z| Complex64::new(z.im, 0.0)).collect::<Vec<_>>());
    }
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for c in candidates {
        if out.len() == basis.len() {
            break;
        }
        let r = residual(&c, &out);
        let n = norm(&r);
        if n > 1e-6 {
            out.push(r.iter().map(|z| z / n).collect());
        }
    }
    out
}

/// `x` minus its orthogonal projection on the orthonormal set `basis`.
fn residual(x: &[Complex64], basis: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut r = x.to_vec();
    // twice for numerical stability
    for _ in 0..2 {
        for q in basis {
            let c = hdot(q, &r);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
    }
    r
}

fn push_orthonormal(basis: &mut Vec<Vec<Complex64>>, x: &[Complex64]) -> bool {
    let r = residual(x, basis);
    let n = norm(&r);
    if n > 1e-6 {
        basis.push(r.iter().map(|z| z / n).collect());
        true
    } else {
        false
    }
}

/// Jordan chains of `a` at `lambda`, each ordered `[v, …, top]`.
fn jordan_chains(a: &CMatrix, lambda: Complex64, multiplicity: usize) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let real = lambda.im == 0.0;
    let b = a.shift(lambda);
    let mut kernels: Vec<Vec<Vec<Complex64>>> = Vec::new();
    let mut power = b.clone();
    loop {
        let mut k = checked_kernel(&power, lambda)?;
        if real {
            k = realify(&k);
        }
        let prev = kernels.last().map_or(0, Vec::len);
        if k.len() <= prev || k.len() > multiplicity {
            return Err(degenerate(
                lambda,
                format!("kernel dimensions {prev} -> {} do not reach multiplicity {multiplicity}", k.len()),
            ));
        }
        let done = k.len() == multiplicity;
        kernels.push(k);
        if done {
            break;
        }
        power = power.mul(&b);
    }

    let dims: Vec<usize> = kernels.iter().map(Vec::len).collect();
    // (top vector, chain length)
    let mut tops: Vec<(Vec<Complex64>, usize)> = Vec::new();
    for level in (1..=kernels.len()).rev() {
        let lower = if level >= 2 { dims[level - 2] } else { 0 };
        let mut span: Vec<Vec<Complex64>> = Vec::new();
        if level >= 2 {
            for x in &kernels[level - 2] {
                push_orthonormal(&mut span, x);
            }
        }
        for (top, len) in &tops {
            let mut y = top.clone();
            for _ in 0..(len - level) {
                y = b.mul_vec(&y);
            }
            push_orthonormal(&mut span, &y);
        }
        let mut needed = (dims[level - 1] - lower) - tops.len();
        for cand in &kernels[level - 1] {
            if needed == 0 {
                break;
            }
            let r = residual(cand, &span);
            if norm(&r) > 1e-6 {
                push_orthonormal(&mut span, &r);
                tops.push((r, level));
                needed -= 1;
            }
        }
        if needed > 0 {
            return Err(degenerate(lambda, format!("cannot complete chains at level {level}")));
        }
    }

    let chains = tops
        .into_iter()
        .map(|(top, len)| {
            let mut chain = Vec::with_capacity(len);
            let mut y = top;
            for _ in 0..len {
                chain.push(y.clone());
                y = b.mul_vec(&y);
            }
            chain.reverse();
            normalize_chain(chain, real)
        })
        .collect();
    Ok(chains)
}

/// Scale so that the first non-negligible coordinate of `v` is 1.
fn normalize_chain(mut chain: Vec<Vec<Complex64>>, real: bool) -> Vec<Vec<Complex64>> {
    let v = &chain[0];
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v.iter().copied().find(|z| z.norm() > 1e-8 * max).unwrap_or(Complex64::new(1.0, 0.0));
    for x in chain.iter_mut() {
        for z in x.iter_mut() {
            *z /= pivot;
            if real {
                z.im = 0.0;
            }
            if z.re.abs() < 1e-14 {
                z.re = 0.0;
            }
            if z.im.abs() < 1e-14 {
                z.im = 0.0;
            }
        }
    }
    chain
}

/// Coefficient of `x` along `v` in the block's projection.
pub fn block_coefficient(block: &JordanBlock, x: &[Complex64]) -> Complex64 {
    dot(block.u_dual(), x)
}

/// [`block_coefficient`] for an integer composition.
pub fn block_coefficient_int(block: &JordanBlock, x: &[i64]) -> Complex64 {
    block.u_dual().iter().zip(x).map(|(u, &xi)| u * xi as f64).sum()
}

/// Positive row vector `u` with `uR = S u`, normalized to sum 1.
pub fn perron_left_vector(spec: &UrnSpec) -> Result<Vec<f64>> {
    let s = spec.balance() as f64;
    let a = CMatrix::from_integers(spec.matrix()).transpose().shift(Complex64::new(s, 0.0));
    let kernel = svd(&a);
    let d = spec.d();
    let x = kernel.v.column(d - 1);
    let pivot = x.iter().copied().max_by(|p, q| p.norm().total_cmp(&q.norm())).unwrap_or_default();
    let real: Vec<f64> = x.iter().map(|z| (z / pivot).re).collect();
    let sum: f64 = real.iter().sum();
    Ok(real.iter().map(|v| v / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn three_colour() -> UrnSpec {
        UrnSpec::new(vec![vec![6, 2, 0], vec![5, -2, 5], vec![0, 2, 6]], vec![2, 4, 1]).unwrap()
    }

    /// Brute-force characteristic polynomial value `det(zI − R)` by
    /// cofactor expansion.
    fn det_brute(m: &[Vec<Complex64>]) -> Complex64 {
        if m.len() == 1 {
            return m[0][0];
        }
        let mut acc = Complex64::zero();
        for j in 0..m.len() {
            let minor: Vec<Vec<Complex64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &z)| z).collect())
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += m[0][j] * det_brute(&minor) * sign;
        }
        acc
    }

    fn char_value(r: &[Vec<i64>], z: Complex64) -> Complex64 {
        let m: Vec<Vec<Complex64>> = r
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &x)| if i == j { z - x as f64 } else { c(-(x as f64)) })
                    .collect()
            })
            .collect();
        det_brute(&m)
    }

    #[test]
    fn three_colour_spectrum() {
        let sp = eigen_spectrum(&three_colour()).unwrap();
        let values: Vec<Complex64> = sp.eigenvalues.iter().map(|e| e.value).collect();
        assert_eq!(values, vec![c(8.0), c(6.0), c(-4.0)]);
        assert!(sp.blocks.iter().all(|b| b.nu == 0));
        let b6 = sp.block(c(6.0)).unwrap();
        assert_eq!(b6.class, BlockClass::Large);
        for (x, e) in b6.v().iter().zip([1.0, 0.0, -1.0]) {
            assert!((x - c(e)).norm() < 1e-12);
        }
        for (u, e) in b6.u_dual().iter().zip([0.5, 0.0, -0.5]) {
            assert!((u - c(e)).norm() < 1e-12);
        }
        assert_eq!(sp.block(c(-4.0)).unwrap().class, BlockClass::Small);
        assert_eq!(sp.block(c(8.0)).unwrap().class, BlockClass::Principal);
        assert!(sp.block(c(5.0)).is_err());
    }

    #[test]
    fn two_colour_spectrum_matches_brute_force() {
        let r = vec![vec![-2, 4], vec![2, 0]];
        let sp = spectrum_of_matrix(&r, 2).unwrap();
        let values: Vec<Complex64> = sp.eigenvalues.iter().map(|e| e.value).collect();
        assert_eq!(values, vec![c(2.0), c(-4.0)]);
        for z in values {
            assert!(char_value(&r, z).norm() < 1e-9);
        }
    }

    #[test]
    fn diagonal_matrix_has_two_blocks() {
        let sp = spectrum_of_matrix(&[vec![3, 0], vec![0, 3]], 3).unwrap();
        assert_eq!(sp.eigenvalues, vec![Eigenvalue { value: c(3.0), multiplicity: 2 }]);
        assert_eq!(sp.blocks.len(), 2);
        assert!(sp.blocks.iter().all(|b| b.nu == 0));
    }

    #[test]
    fn defective_eigenvalue_gives_one_chain() {
        // eigenvalue 1 with a single Jordan block of size 3 (besides S = 4)
        let r = vec![vec![1, 1, 0, 2], vec![0, 1, 1, 2], vec![0, 0, 1, 3], vec![0, 0, 0, 4]];
        let sp = spectrum_of_matrix(&r, 4).unwrap();
        let b = sp.block(c(1.0)).unwrap();
        assert_eq!(b.nu, 2);
        let a = CMatrix::from_integers(&r).transpose().shift(c(1.0));
        assert!(norm(&a.mul_vec(&b.chain[0])) < 1e-10);
        for k in 0..2 {
            let img = a.mul_vec(&b.chain[k + 1]);
            let diff: Vec<Complex64> = img.iter().zip(&b.chain[k]).map(|(x, y)| x - y).collect();
            assert!(norm(&diff) < 1e-10);
        }
        assert!((dot(b.u_dual(), b.v()) - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn complex_pair() {
        // rotation-like 3-colour cyclic urn: eigenvalues 3 and 0 ± i·√3·... roots of a real cubic
        let r = vec![vec![1, 2, 0], vec![0, 1, 2], vec![2, 0, 1]];
        let sp = spectrum_of_matrix(&r, 3).unwrap();
        assert_eq!(sp.blocks.len(), 3);
        let (b1, b2) = (&sp.blocks[1], &sp.blocks[2]);
        assert_eq!(b1.lambda, b2.lambda.conj());
        assert!(b1.lambda.im > 0.0);
        for b in &sp.blocks {
            assert!(char_value(&r, b.lambda).norm() < 1e-9);
        }
        // conjugate chains
        for (x, y) in b1.v().iter().zip(b2.v()) {
            assert_eq!(*x, y.conj());
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(c(6.0), 8.0), BlockClass::Large);
        assert_eq!(classify(c(-4.0), 8.0), BlockClass::Small);
        assert_eq!(classify(c(8.0), 8.0), BlockClass::Principal);
        assert_eq!(classify(c(4.0), 8.0), BlockClass::Small);
        assert!(is_critical(Complex64::new(1.0, 1.7), 2.0));
    }

    #[test]
    fn block_coefficients() {
        let sp = eigen_spectrum(&three_colour()).unwrap();
        let b = sp.block(c(6.0)).unwrap();
        assert!((block_coefficient(b, &[c(1.0), c(0.0), c(0.0)]) - c(0.5)).norm() < 1e-12);
        assert!(block_coefficient(b, &[c(0.0), c(2.0), c(0.0)]).norm() < 1e-12);
        assert_eq!(block_coefficient(b, &[c(0.0); 3]), c(0.0));
        let x = [c(0.3), c(-1.0), c(2.0)];
        let px = b.projector.mul_vec(&x);
        let coef = block_coefficient(b, &x);
        for (p, v) in px.iter().zip(b.v()) {
            assert!((p - coef * v).norm() < 1e-12);
        }
    }

    #[test]
    fn perron_vectors() {
        let u = perron_left_vector(&three_colour()).unwrap();
        for (x, e) in u.iter().zip([5.0 / 12.0, 2.0 / 12.0, 5.0 / 12.0]) {
            assert!((x - e).abs() < 1e-12);
        }
        let sym = UrnSpec::new(vec![vec![1, 1], vec![1, 1]], vec![1, 0]).unwrap();
        let u = perron_left_vector(&sym).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-12 && (u[1] - 0.5).abs() < 1e-12);
        let small = UrnSpec::new(vec![vec![-2, 4], vec![2, 0]], vec![2, 2]).unwrap();
        let u = perron_left_vector(&small).unwrap();
        assert!((u[0] - 1.0 / 3.0).abs() < 1e-12 && (u[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    /// Random balanced matrices with non-negative off-diagonal entries.
    fn balanced_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (2usize..=4).prop_flat_map(|d| {
            (1i64..=6, proptest::collection::vec(proptest::collection::vec(0i64..=4, d), d)).prop_map(
                move |(extra, mut rows)| {
                    let s = rows.iter().map(|r| r.iter().sum::<i64>()).max().unwrap() + extra;
                    for (i, row) in rows.iter_mut().enumerate() {
                        let off: i64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, x)| x).sum();
                        row[i] = s - off;
                    }
                    rows
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projector_identities(r in balanced_matrix()) {
            let s = r[0].iter().sum::<i64>();
            let Ok(sp) = spectrum_of_matrix(&r, s) else { return Ok(()); };
            let d = r.len();
            let a = CMatrix::from_integers(&r).transpose();
            let mut total = CMatrix::zeros(d, d);
            for b in &sp.blocks {
                let p = &b.projector;
                let scale = p.max_abs().max(1.0);
                prop_assert!(p.mul(p).max_abs_diff(p) < 1e-9 * scale * scale);
                prop_assert!(p.mul(&a).max_abs_diff(&a.mul(p)) < 1e-9 * scale * a.max_abs());
                total = total.add(p);
            }
            prop_assert!(total.max_abs_diff(&CMatrix::identity(d)) < 1e-9);
            // balanced: R·1 = S·1, so the principal dual is constant
            let ones = vec![c(1.0); d];
            let r_ones = CMatrix::from_integers(&r).mul_vec(&ones);
            prop_assert!(r_ones.iter().all(|z| *z == c(s as f64)));
            // conjugate blocks share ν
            for b in &sp.blocks {
                if b.lambda.im != 0.0 {
                    let partner = sp.blocks.iter().find(|o| o.lambda == b.lambda.conj());
                    prop_assert!(partner.is_some_and(|o| o.nu == b.nu));
                }
            }
        }

        #[test]
        fn classify_scale_invariant(re in -50.0f64..50.0, im in -20.0f64..20.0, s in 1i64..40, t in 0.01f64..100.0) {
            let lambda = Complex64::new(re, im);
            prop_assert_eq!(classify(lambda, s as f64), classify(lambda * t, s as f64 * t));
        }
    }
}
