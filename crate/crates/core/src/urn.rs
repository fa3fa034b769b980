//! Urn models: the replacement matrix, the initial composition, the
//! hypotheses (B), (T)/(T₋₁), (I), and the atomic combinatorics derived
//! from them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported colour count.
pub const MAX_COLOURS: usize = 64;
/// Largest supported absolute value of a matrix or composition entry.
pub const MAX_ENTRY: i64 = 1_000_000;

/// A balanced urn: replacement matrix `R`, initial composition `alpha`
/// and the balance `S` (the common row sum of `R`).
///
/// Construction checks shape, the size caps and hypothesis (B). Tenability
/// and irreducibility are reported by [`UrnSpec::report`] and enforced by
/// [`UrnSpec::require_valid`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrnSpec {
    r: Vec<Vec<i64>>,
    alpha: Vec<i64>,
    s: i64,
}

impl UrnSpec {
    pub fn new(r: Vec<Vec<i64>>, alpha: Vec<i64>) -> Result<Self> {
        let s = validate_balance(&r)?;
        let d = r.len();
        if alpha.len() != d {
            return Err(Error::CompositionLength { got: alpha.len(), expected: d });
        }
        for &a in &alpha {
            if a.abs() > MAX_ENTRY {
                return Err(Error::EntryTooLarge { value: a, max: MAX_ENTRY });
            }
        }
        if alpha.iter().any(|&a| a < 0) || alpha.iter().all(|&a| a == 0) {
            return Err(Error::EmptyComposition);
        }
        Ok(Self { r, alpha, s })
    }

    /// Fully validated spec: (B), (T) and (I) all hold.
    pub fn validated(r: Vec<Vec<i64>>, alpha: Vec<i64>) -> Result<Self> {
        let spec = Self::new(r, alpha)?;
        spec.require_valid()?;
        Ok(spec)
    }

    pub fn d(&self) -> usize {
        self.r.len()
    }

    pub fn balance(&self) -> i64 {
        self.s
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.r
    }

    pub fn entry(&self, c: usize, i: usize) -> i64 {
        self.r[c][i]
    }

    pub fn alpha(&self) -> &[i64] {
        &self.alpha
    }

    /// Same matrix, different initial composition.
    pub fn with_alpha(&self, alpha: Vec<i64>) -> Result<Self> {
        Self::new(self.r.clone(), alpha)
    }

    pub fn report(&self) -> ValidationReport {
        ValidationReport {
            balance: self.s,
            tenability: validate_tenability(&self.r, &self.alpha),
            irreducibility: validate_irreducibility(&self.r),
        }
    }

    pub fn require_valid(&self) -> Result<()> {
        let report = self.report();
        if let Tenability::Fail(failure) = &report.tenability {
            return Err(Error::NotTenable(format!("{failure}")));
        }
        if let Irreducibility::Reducible { from, to } = report.irreducibility {
            return Err(Error::NotIrreducible { from, to });
        }
        Ok(())
    }

    /// Total number of balls after `n` draws.
    pub fn total_after(&self, initial: &[i64], n: u64) -> i64 {
        initial.iter().sum::<i64>() + self.s * n as i64
    }
}

/// Returns the common row sum `S` of `r` (hypothesis (B)).
pub fn validate_balance(r: &[Vec<i64>]) -> Result<i64> {
    let d = r.len();
    if d < 2 || r.iter().any(|row| row.len() != d) {
        let cols = r.iter().map(Vec::len).find(|&l| l != d).unwrap_or(d);
        return Err(Error::Shape { rows: d, cols });
    }
    if d > MAX_COLOURS {
        return Err(Error::TooManyColours { got: d, max: MAX_COLOURS });
    }
    for row in r {
        for &a in row {
            if a.abs() > MAX_ENTRY {
                return Err(Error::EntryTooLarge { value: a, max: MAX_ENTRY });
            }
        }
    }
    let s: i64 = r[0].iter().sum();
    for (row, entries) in r.iter().enumerate().skip(1) {
        let sum: i64 = entries.iter().sum();
        if sum != s {
            return Err(Error::RowSumMismatch { row, sum, expected: s });
        }
    }
    if s <= 0 {
        return Err(Error::NonPositiveBalance(s));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TenabilityFailure {
    NegativeOffDiagonal {
        row: usize,
        col: usize,
        value: i64,
    },
    /// `-a_{colour,colour}` does not divide `value`, found in row `row` of
    /// `R` (or in the initial composition when `row` is `None`).
    Divisibility {
        colour: usize,
        divisor: i64,
        row: Option<usize>,
        value: i64,
    },
}

impl core::fmt::Display for TenabilityFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::NegativeOffDiagonal { row, col, value } => {
                write!(f, "off-diagonal entry a[{row}][{col}] = {value} is negative")
            }
            Self::Divisibility { colour, divisor, row: Some(row), value } => {
                write!(f, "colour {colour}: {divisor} does not divide a[{row}][{colour}] = {value}")
            }
            Self::Divisibility { colour, divisor, row: None, value } => {
                write!(f, "colour {colour}: {divisor} does not divide alpha[{colour}] = {value}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tenability {
    /// Off-diagonal entries non-negative, diagonal entries at least −1.
    TMinus1,
    /// Diagonal entries below −1 divide their column and the initial count.
    TGeneral,
    Fail(TenabilityFailure),
}

impl Tenability {
    pub fn holds(&self) -> bool {
        !matches!(self, Tenability::Fail(_))
    }
}

pub fn validate_tenability(r: &[Vec<i64>], alpha: &[i64]) -> Tenability {
    let d = r.len();
    for (row, entries) in r.iter().enumerate() {
        for (col, &value) in entries.iter().enumerate() {
            if row != col && value < 0 {
                return Tenability::Fail(TenabilityFailure::NegativeOffDiagonal { row, col, value });
            }
        }
    }
    let mut general = false;
    for i in 0..d {
        let diag = r[i][i];
        if diag >= -1 {
            continue;
        }
        general = true;
        let divisor = -diag;
        for (c, row) in r.iter().enumerate() {
            if c != i && row[i] % divisor != 0 {
                return Tenability::Fail(TenabilityFailure::Divisibility {
                    colour: i,
                    divisor,
                    row: Some(c),
                    value: row[i],
                });
            }
        }
        if alpha[i] % divisor != 0 {
            return Tenability::Fail(TenabilityFailure::Divisibility {
                colour: i,
                divisor,
                row: None,
                value: alpha[i],
            });
        }
    }
    if general {
        Tenability::TGeneral
    } else {
        Tenability::TMinus1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Irreducibility {
    Irreducible,
    /// Colour `to` can never appear in an urn started from colour `from`.
    Reducible {
        from: usize,
        to: usize,
    },
}

impl Irreducibility {
    pub fn holds(&self) -> bool {
        matches!(self, Irreducibility::Irreducible)
    }
}

/// Strong connectivity of the digraph with an edge `c → i` whenever
/// `a_{c,i} > 0`, by transitive closure.
#[allow(clippy::needless_range_loop)]
pub fn validate_irreducibility(r: &[Vec<i64>]) -> Irreducibility {
    let d = r.len();
    let mut reach: Vec<Vec<bool>> = (0..d).map(|c| (0..d).map(|i| c == i || r[c][i] > 0).collect()).collect();
    for k in 0..d {
        for i in 0..d {
            if reach[i][k] {
                for j in 0..d {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    for from in 0..d {
        for to in 0..d {
            if !reach[from][to] {
                return Irreducibility::Reducible { from, to };
            }
        }
    }
    Irreducibility::Irreducible
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub balance: i64,
    pub tenability: Tenability,
    pub irreducibility: Irreducibility,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.tenability.holds() && self.irreducibility.holds()
    }

    pub fn summary(&self) -> String {
        let ten = match &self.tenability {
            Tenability::TMinus1 => String::from("T_minus_1"),
            Tenability::TGeneral => String::from("T_general"),
            Tenability::Fail(f) => format!("fail ({f})"),
        };
        let irr = match self.irreducibility {
            Irreducibility::Irreducible => String::from("irreducible"),
            Irreducibility::Reducible { from, to } => {
                format!("reducible (colour {} unreachable from colour {})", to + 1, from + 1)
            }
        };
        format!("S={} tenability={} {}", self.balance, ten, irr)
    }
}

/// Atomic combinatorics of a tenable urn.
///
/// `theta[i]` is the ball count of the atomic composition of colour `i`,
/// `a_tilde[c][i]` the number of colour-`i` atoms (net of the drawn one)
/// produced when an atom of colour `c` splits, and `alpha_tilde[i]` the
/// number of colour-`i` atoms in the initial composition. `gamma[c]` and
/// `beta` are the cumulative slot offsets, each starting at 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicBasis {
    pub s: i64,
    pub theta: Vec<i64>,
    pub a_tilde: Vec<Vec<i64>>,
    pub alpha_tilde: Vec<i64>,
    pub gamma: Vec<Vec<i64>>,
    pub beta: Vec<i64>,
}

pub fn atomic_basis(spec: &UrnSpec) -> Result<AtomicBasis> {
    let d = spec.d();
    if let Tenability::Fail(f) = validate_tenability(spec.matrix(), spec.alpha()) {
        return Err(Error::NotTenable(format!("{f}")));
    }
    let theta: Vec<i64> =
        (0..d).map(|i| if spec.entry(i, i) >= -1 { 1 } else { -spec.entry(i, i) }).collect();
    let a_tilde: Vec<Vec<i64>> =
        (0..d).map(|c| (0..d).map(|i| spec.entry(c, i) / theta[i]).collect()).collect();
    let alpha_tilde: Vec<i64> = (0..d).map(|i| spec.alpha()[i] / theta[i]).collect();
    let gamma = (0..d)
        .map(|c| {
            let mut offs = vec![0i64; d + 1];
            for i in 0..d {
                offs[i + 1] = offs[i] + a_tilde[c][i] + i64::from(c == i);
            }
            offs
        })
        .collect();
    let mut beta = vec![0i64; d + 1];
    for i in 0..d {
        beta[i + 1] = beta[i] + alpha_tilde[i];
    }
    Ok(AtomicBasis { s: spec.balance(), theta, a_tilde, alpha_tilde, gamma, beta })
}

impl AtomicBasis {
    pub fn d(&self) -> usize {
        self.theta.len()
    }

    /// Atomic initial composition of colour `i`.
    pub fn atom(&self, i: usize) -> Vec<i64> {
        let mut e = vec![0; self.d()];
        e[i] = self.theta[i];
        e
    }

    /// `ã_{c,i} + δ_{c,i}`: atoms of colour `i` right after an atom of
    /// colour `c` splits.
    pub fn multiplicity(&self, c: usize, i: usize) -> i64 {
        self.gamma[c][i + 1] - self.gamma[c][i]
    }

    /// `γ_d^{(c)}`, the number of atoms an atom of colour `c` splits into.
    pub fn split_size(&self, c: usize) -> usize {
        self.gamma[c][self.d()] as usize
    }

    /// Colour of every slot of the split of colour `c`, in slot order.
    pub fn split_slots(&self, c: usize) -> Vec<usize> {
        let mut slots = Vec::with_capacity(self.split_size(c));
        for i in 0..self.d() {
            for _ in 0..self.multiplicity(c, i) {
                slots.push(i);
            }
        }
        slots
    }

    /// Colour of every root atom of the initial composition, in slot order.
    pub fn root_slots(&self) -> Vec<usize> {
        let mut slots = Vec::with_capacity(self.beta[self.d()] as usize);
        for (i, &count) in self.alpha_tilde.iter().enumerate() {
            for _ in 0..count {
                slots.push(i);
            }
        }
        slots
    }

    /// Dirichlet parameter `θ_i / S` for each slot in `slots`.
    pub fn slot_weights(&self, slots: &[usize]) -> Vec<f64> {
        slots.iter().map(|&i| self.theta[i] as f64 / self.s as f64).collect()
    }

    pub fn is_unit(&self) -> bool {
        self.theta.iter().all(|&t| t == 1)
    }
}
