//! Truncated Fock-space linear algebra.
//!
//! States live on levels `0..=N`; operators are dense `(N+1)x(N+1)` complex
//! matrices. Every Hamiltonian handled here is diagonal in the number basis,
//! so time evolution is applied level by level as a phase.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{positive, Error, Result};

/// Default Fock-space truncation.
pub const DEFAULT_TRUNCATION: usize = 64;

/// Maximum hermiticity defect tolerated by a declared-hermitian operator.
pub const HERMITIAN_TOL: f64 = 1e-14;

fn check_truncation(n: usize) -> Result<()> {
    if n < 1 {
        Err(Error::InvalidTruncation(n))
    } else {
        Ok(())
    }
}

/// Complex amplitudes over the levels `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedVector {
    amplitudes: Array1<C64>,
}

impl TruncatedVector {
    pub fn new(amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidTruncation(amplitudes.len().saturating_sub(1)));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(Array1::from(amplitudes))
    }

    pub fn zeros(truncation: usize) -> Result<Self> {
        check_truncation(truncation)?;
        Ok(Self {
            amplitudes: Array1::zeros(truncation + 1),
        })
    }

    /// Number state `|k>`.
    pub fn basis(k: usize, truncation: usize) -> Result<Self> {
        check_truncation(truncation)?;
        if k > truncation {
            return Err(Error::IndexOutOfRange {
                index: k,
                truncation,
            });
        }
        let mut amplitudes = Array1::zeros(truncation + 1);
        amplitudes[k] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn truncation(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amplitudes[n]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            amplitudes: self.amplitudes.mapv(|c| c * factor),
        }
    }
}

/// Dense complex operator on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperator {
    entries: Array2<C64>,
    hermitian: bool,
}

impl MatrixOperator {
    /// Wraps a square matrix. A declared-hermitian matrix is checked against
    /// [`HERMITIAN_TOL`].
    pub fn new(entries: Array2<C64>, hermitian: bool) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::ShapeMismatch {
                expected: rows,
                found: cols,
            });
        }
        check_truncation(rows.saturating_sub(1))?;
        let op = Self { entries, hermitian };
        if hermitian && op.hermitian_defect() > HERMITIAN_TOL {
            return Err(Error::InvalidParameter {
                name: "entries",
                reason: format!(
                    "declared hermitian but defect is {:e}",
                    op.hermitian_defect()
                ),
            });
        }
        Ok(op)
    }

    pub fn identity(truncation: usize) -> Result<Self> {
        check_truncation(truncation)?;
        Ok(Self {
            entries: Array2::eye(truncation + 1),
            hermitian: true,
        })
    }

    pub fn zeros(truncation: usize) -> Result<Self> {
        check_truncation(truncation)?;
        Ok(Self {
            entries: Array2::zeros((truncation + 1, truncation + 1)),
            hermitian: true,
        })
    }

    /// Builds `|row><col|`-style sparse operators from `(row, col, value)` triples.
    pub fn from_triples(truncation: usize, triples: &[(usize, usize, C64)]) -> Result<Self> {
        check_truncation(truncation)?;
        let mut entries = Array2::zeros((truncation + 1, truncation + 1));
        for &(i, j, v) in triples {
            if i > truncation || j > truncation {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    truncation,
                });
            }
            entries[[i, j]] += v;
        }
        let mut op = Self {
            entries,
            hermitian: false,
        };
        op.hermitian = op.hermitian_defect() <= HERMITIAN_TOL;
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn truncation(&self) -> usize {
        self.dim() - 1
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.entries[[i, j]]
    }

    pub fn is_declared_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let d = (self.entries[[i, j]] - self.entries[[j, i]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn dagger(&self) -> Self {
        Self {
            entries: self.entries.t().mapv(|c| c.conj()),
            hermitian: self.hermitian,
        }
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        let hermitian = self.hermitian && factor.im == 0.0;
        Self {
            entries: self.entries.mapv(|c| c * factor),
            hermitian,
        }
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.dim(),
                found: other.dim(),
            })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            entries: &self.entries + &other.entries,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            entries: &self.entries - &other.entries,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// Matrix product. The hermitian flag of a product is re-derived from the entries.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut op = Self {
            entries: self.entries.dot(&other.entries),
            hermitian: false,
        };
        op.hermitian = op.hermitian_defect() <= HERMITIAN_TOL;
        Ok(op)
    }

    pub fn apply(&self, v: &TruncatedVector) -> Result<TruncatedVector> {
        if self.dim() != v.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                found: v.dim(),
            });
        }
        TruncatedVector::new(self.entries.dot(v.amplitudes()))
    }

    /// `<v|A|v>`.
    pub fn expectation(&self, v: &TruncatedVector) -> Result<C64> {
        let av = self.apply(v)?;
        v.inner(&av)
    }

    /// Overrides the hermitian flag after re-checking it.
    pub fn with_hermitian_flag(mut self, hermitian: bool) -> Result<Self> {
        if hermitian && self.hermitian_defect() > HERMITIAN_TOL {
            return Err(Error::InvalidParameter {
                name: "hermitian",
                reason: format!("defect {:e}", self.hermitian_defect()),
            });
        }
        self.hermitian = hermitian;
        Ok(self)
    }
}

impl Add for &MatrixOperator {
    type Output = MatrixOperator;
    fn add(self, rhs: Self) -> MatrixOperator {
        self.try_add(rhs).expect("operator dimensions differ")
    }
}

impl Sub for &MatrixOperator {
    type Output = MatrixOperator;
    fn sub(self, rhs: Self) -> MatrixOperator {
        self.try_sub(rhs).expect("operator dimensions differ")
    }
}

impl Mul for &MatrixOperator {
    type Output = MatrixOperator;
    fn mul(self, rhs: Self) -> MatrixOperator {
        self.try_mul(rhs).expect("operator dimensions differ")
    }
}

/// Polynomial spectrum `E(n) = hbar*omega * sum_j epsilon_j n^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    epsilon: Vec<f64>,
    hbar: f64,
    omega: f64,
}

impl SpectrumSpec {
    pub fn new(epsilon: Vec<f64>, hbar: f64, omega: f64) -> Result<Self> {
        positive("hbar", hbar)?;
        positive("omega", omega)?;
        if epsilon.is_empty() || epsilon.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: "need at least one finite coefficient".into(),
            });
        }
        Ok(Self {
            epsilon,
            hbar,
            omega,
        })
    }

    /// `hbar*omega*(n + 1/2)`.
    pub fn harmonic(hbar: f64, omega: f64) -> Result<Self> {
        Self::new(vec![0.5, 1.0], hbar, omega)
    }

    /// `hbar*omega*n`, the number operator without zero-point shift.
    pub fn number(hbar: f64, omega: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], hbar, omega)
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn hbar_omega(&self) -> f64 {
        self.hbar * self.omega
    }

    /// `sum_j epsilon_j n^j`, evaluated by Horner's rule.
    pub fn level_polynomial(&self, n: usize) -> f64 {
        polynomial(&self.epsilon, n as f64)
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.hbar_omega() * self.level_polynomial(n)
    }

    /// Same spectrum with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.epsilon.iter().map(|e| e * factor).collect(),
            self.hbar,
            self.omega,
        )
    }
}

pub(crate) fn polynomial(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Annihilation operator: `<n-1|a|n> = sqrt(n)`.
pub fn annihilation(truncation: usize) -> Result<MatrixOperator> {
    check_truncation(truncation)?;
    let mut entries = Array2::zeros((truncation + 1, truncation + 1));
    for n in 1..=truncation {
        entries[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(MatrixOperator {
        entries,
        hermitian: false,
    })
}

pub fn creation(truncation: usize) -> Result<MatrixOperator> {
    Ok(annihilation(truncation)?.dagger())
}

/// `a^dagger a`, diagonal with entries `0..=N`.
pub fn number_operator(truncation: usize) -> Result<MatrixOperator> {
    let a = annihilation(truncation)?;
    (&a.dagger() * &a).with_hermitian_flag(true)
}

/// Position and momentum quadratures
/// `X = sqrt(hbar/2 m omega) (a^dagger + a)`, `P = i sqrt(hbar m omega / 2) (a^dagger - a)`.
///
/// On the truncated space `[X, P] = i hbar` holds except in the `(N, N)`
/// corner, where it equals `-i hbar N`.
pub fn quadratures(
    truncation: usize,
    hbar: f64,
    mass: f64,
    omega: f64,
) -> Result<(MatrixOperator, MatrixOperator)> {
    positive("hbar", hbar)?;
    positive("mass", mass)?;
    positive("omega", omega)?;
    let a = annihilation(truncation)?;
    let ad = a.dagger();
    let x_scale = (hbar / (2.0 * mass * omega)).sqrt();
    let p_scale = (hbar * mass * omega / 2.0).sqrt();
    let x = (&ad + &a)
        .scale(C64::new(x_scale, 0.0))
        .with_hermitian_flag(true)?;
    let p = (&ad - &a)
        .scale(C64::new(0.0, p_scale))
        .with_hermitian_flag(true)?;
    Ok((x, p))
}

/// Diagonal Hamiltonian with entries `E(n)`.
pub fn hamiltonian(spec: &SpectrumSpec, truncation: usize) -> Result<MatrixOperator> {
    check_truncation(truncation)?;
    let diag = Array1::from_iter((0..=truncation).map(|n| C64::new(spec.energy(n), 0.0)));
    Ok(MatrixOperator {
        entries: Array2::from_diag(&diag),
        hermitian: true,
    })
}

/// Applies `exp(-i H t / hbar)` level by level.
pub fn evolve(state: &TruncatedVector, spec: &SpectrumSpec, t: f64) -> TruncatedVector {
    let omega_t = spec.omega() * t;
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(n, &c)| c * C64::from_polar(1.0, -spec.level_polynomial(n) * omega_t))
        .collect();
    TruncatedVector { amplitudes }
}

/// Orthogonal projector `|k><k|`.
pub fn projector(k: usize, truncation: usize) -> Result<MatrixOperator> {
    check_truncation(truncation)?;
    if k > truncation {
        return Err(Error::IndexOutOfRange {
            index: k,
            truncation,
        });
    }
    let mut entries = Array2::zeros((truncation + 1, truncation + 1));
    entries[[k, k]] = C64::new(1.0, 0.0);
    Ok(MatrixOperator {
        entries,
        hermitian: true,
    })
}

/// Commutator `AB - BA`.
pub fn commutator(a: &MatrixOperator, b: &MatrixOperator) -> Result<MatrixOperator> {
    a.try_mul(b)?.try_sub(&b.try_mul(a)?)
}
