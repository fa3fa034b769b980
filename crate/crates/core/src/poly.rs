//! Exact integer characteristic polynomials, square-free factorization
//! over ℤ[x], and simultaneous (Aberth–Ehrlich) root finding.
//!
//! Polynomials are coefficient vectors in increasing degree order.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type IntPoly = Vec<BigInt>;

/// `det(xI − A)` by the Faddeev–LeVerrier recursion in exact arithmetic.
pub fn characteristic_polynomial(a: &[Vec<i64>]) -> IntPoly {
    let n = a.len();
    let am: Vec<Vec<BigInt>> = a.iter().map(|row| row.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut m: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for l in 0..n {
                if am[i][l].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !m[l][j].is_zero() {
                        next[i][j] += &am[i][l] * &m[l][j];
                    }
                }
            }
            next[i][i] += &coeffs[n - k + 1];
        }
        m = next;
        // c_{n-k} = -tr(A M_k) / k
        let mut tr = BigInt::zero();
        for i in 0..n {
            for l in 0..n {
                tr += &am[i][l] * &m[l][i];
            }
        }
        coeffs[n - k] = -(tr / BigInt::from(k));
    }
    coeffs
}

fn trim(mut p: IntPoly) -> IntPoly {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

pub fn degree(p: &[BigInt]) -> usize {
    p.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

pub fn derivative(p: &[BigInt]) -> IntPoly {
    if p.len() <= 1 {
        return vec![BigInt::zero()];
    }
    trim(p.iter().enumerate().skip(1).map(|(i, c)| c * BigInt::from(i)).collect())
}

fn content(p: &[BigInt]) -> BigInt {
    p.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
}

/// Primitive part with a positive leading coefficient.
fn primitive(p: &[BigInt]) -> IntPoly {
    let p = trim(p.to_vec());
    let g = content(&p);
    if g.is_zero() {
        return p;
    }
    let sign = if p[degree(&p)].is_negative() { -BigInt::one() } else { BigInt::one() };
    let g = g * sign;
    p.into_iter().map(|c| c / &g).collect()
}

fn is_zero_poly(p: &[BigInt]) -> bool {
    p.iter().all(Zero::is_zero)
}

/// Pseudo-remainder of `a` by `b`.
fn pseudo_rem(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    let db = degree(b);
    let lb = b[db].clone();
    let mut r = trim(a.to_vec());
    while !is_zero_poly(&r) && degree(&r) >= db {
        let dr = degree(&r);
        let lr = r[dr].clone();
        for c in r.iter_mut() {
            *c *= &lb;
        }
        for (i, bc) in b.iter().enumerate().take(db + 1) {
            r[dr - db + i] -= &lr * bc;
        }
        r = trim(r);
        let g = content(&r);
        if !g.is_zero() && !g.is_one() {
            r = r.into_iter().map(|c| c / &g).collect();
        }
    }
    r
}

/// Primitive gcd in ℤ[x].
pub fn gcd(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    let mut a = primitive(a);
    let mut b = primitive(b);
    if is_zero_poly(&a) {
        return b;
    }
    while !is_zero_poly(&b) {
        let r = pseudo_rem(&a, &b);
        a = b;
        b = primitive(&r);
    }
    primitive(&a)
}

/// Exact division by a polynomial known to divide `a` over ℚ, where the
/// divisor is primitive (so the quotient is integral).
pub fn exact_div(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    let db = degree(b);
    let lb = &b[db];
    let mut r = trim(a.to_vec());
    let da = degree(&r);
    if da < db {
        return vec![BigInt::zero()];
    }
    let mut q = vec![BigInt::zero(); da - db + 1];
    for k in (0..=da - db).rev() {
        let coef = &r[k + db] / lb;
        for (i, bc) in b.iter().enumerate().take(db + 1) {
            r[k + i] -= &coef * bc;
        }
        q[k] = coef;
    }
    trim(q)
}

fn sub(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                a.get(i).cloned().unwrap_or_else(BigInt::zero)
                    - b.get(i).cloned().unwrap_or_else(BigInt::zero)
            })
            .collect(),
    )
}

/// Yun's square-free factorization: returns `(q_k, k)` with
/// `p = c · Π q_k^k`, each `q_k` square-free, primitive and non-constant.
pub fn square_free_factors(p: &[BigInt]) -> Vec<(IntPoly, usize)> {
    let f = primitive(p);
    let mut out = Vec::new();
    if degree(&f) == 0 {
        return out;
    }
    let df = derivative(&f);
    let c = gcd(&f, &df);
    let mut w = exact_div(&f, &c);
    let mut y = exact_div(&df, &c);
    let mut z = sub(&y, &derivative(&w));
    let mut k = 1;
    while degree(&w) > 0 {
        let g = if is_zero_poly(&z) { primitive(&w) } else { gcd(&w, &z) };
        if degree(&g) > 0 {
            out.push((g.clone(), k));
        }
        w = exact_div(&w, &g);
        y = exact_div(&z, &g);
        z = sub(&y, &derivative(&w));
        k += 1;
    }
    out
}

pub fn eval_int(p: &[BigInt], x: &BigInt) -> BigInt {
    p.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
}

pub fn to_f64(p: &[BigInt]) -> Vec<f64> {
    p.iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY)).collect()
}

pub fn eval(p: &[f64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::zero(), |acc, &c| acc * z + c)
}

/// Value and derivative at `z` by Horner.
fn eval_with_derivative(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut val = Complex64::zero();
    let mut der = Complex64::zero();
    for &c in p.iter().rev() {
        der = der * z + val;
        val = val * z + c;
    }
    (val, der)
}

/// All complex roots of a real polynomial by Aberth–Ehrlich iteration,
/// followed by Newton polishing. Intended for square-free inputs.
pub fn roots(p: &[f64]) -> Vec<Complex64> {
    let n = p.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    if n == 0 {
        return Vec::new();
    }
    let p = &p[..=n];
    let lead = p[n];
    if n == 1 {
        return vec![Complex64::new(-p[0] / lead, 0.0)];
    }
    // Cauchy bound on root moduli
    let radius = 1.0 + p[..n].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let start = radius.min(1e6) * 0.5 + 0.25;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * core::f64::consts::PI * (k as f64 + 0.4) / n as f64;
            Complex64::from_polar(start, angle)
        })
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let (val, der) = eval_with_derivative(p, z[k]);
            if val.norm() == 0.0 {
                continue;
            }
            let ratio = val / der;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| {
                    let diff = z[k] - z[j];
                    if diff.norm() == 0.0 {
                        Complex64::zero()
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm() / z[k].norm().max(1.0));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    for root in z.iter_mut() {
        for _ in 0..3 {
            let (val, der) = eval_with_derivative(p, *root);
            if der.norm() == 0.0 || val.norm() == 0.0 {
                break;
            }
            let step = val / der;
            if step.is_finite() {
                *root -= step;
            }
        }
    }
    z
}
