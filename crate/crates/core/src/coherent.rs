//! Coherent-state families: immersions `m -> |m>` of the plane (canonical) or
//! the punctured plane (deformed) into the truncated Fock space.
//!
//! Both families share the Poisson moduli `e^{-rho/2} rho^{n/2} / sqrt(n!)`;
//! they differ only in the phase attached to level `n`, which is `n * phi`
//! for the canonical family and `(sum_j epsilon_j n^j) * phi` for a deformed
//! one. Moduli are computed in log space and exponentiated once.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use statrs::function::factorial::ln_factorial;

use crate::error::{positive, Error, Result};
use crate::fock::{polynomial, TruncatedVector};
use crate::quadrature::gauss_legendre_interval;

pub mod precise;

/// Largest Poisson tail a coherent state may lose to truncation.
pub const TAIL_LIMIT: f64 = 1e-8;

/// Radius-squared of the disc excluded around the origin for deformed families.
pub const DEFAULT_RHO_MIN: f64 = 1e-6;

/// Below this level the identity-resolution deviation is rounding noise.
pub const QUADRATURE_ROUNDING_FLOOR: f64 = 1e-13;

/// A point of the phase plane, `z = x + i p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn from_polar(rho: f64, phi: f64) -> Self {
        let r = rho.sqrt();
        Self {
            x: r * phi.cos(),
            p: r * phi.sin(),
        }
    }

    pub fn from_complex(z: C64) -> Self {
        Self { x: z.re, p: z.im }
    }

    pub fn z(&self) -> C64 {
        C64::new(self.x, self.p)
    }

    /// `x^2 + p^2`.
    pub fn rho(&self) -> f64 {
        self.x * self.x + self.p * self.p
    }

    pub fn phi(&self) -> f64 {
        self.p.atan2(self.x)
    }

    pub fn polar(&self) -> (f64, f64) {
        (self.rho(), self.phi())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Canonical,
    Deformed,
}

/// A coherent-state family together with the physical constants used to
/// build quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    kind: FamilyKind,
    epsilon: Vec<f64>,
    hbar: f64,
    mass: f64,
    omega: f64,
    truncation: usize,
    rho_min: f64,
}

impl FamilySpec {
    pub fn canonical(hbar: f64, mass: f64, omega: f64, truncation: usize) -> Result<Self> {
        Self::build(
            FamilyKind::Canonical,
            vec![0.0, 1.0],
            hbar,
            mass,
            omega,
            truncation,
        )
    }

    /// Deformed family with level phases `sum_j epsilon_j n^j`.
    pub fn deformed(
        epsilon: Vec<f64>,
        hbar: f64,
        mass: f64,
        omega: f64,
        truncation: usize,
    ) -> Result<Self> {
        if !epsilon.iter().skip(1).any(|&e| e != 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: "a deformed family needs some epsilon_j != 0 with j >= 1".into(),
            });
        }
        Self::build(FamilyKind::Deformed, epsilon, hbar, mass, omega, truncation)
    }

    fn build(
        kind: FamilyKind,
        epsilon: Vec<f64>,
        hbar: f64,
        mass: f64,
        omega: f64,
        truncation: usize,
    ) -> Result<Self> {
        positive("hbar", hbar)?;
        positive("mass", mass)?;
        positive("omega", omega)?;
        if truncation < 1 {
            return Err(Error::InvalidTruncation(truncation));
        }
        if epsilon.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: "coefficients must be finite".into(),
            });
        }
        Ok(Self {
            kind,
            epsilon,
            hbar,
            mass,
            omega,
            truncation,
            rho_min: DEFAULT_RHO_MIN,
        })
    }

    pub fn with_rho_min(mut self, rho_min: f64) -> Result<Self> {
        self.rho_min = positive("rho_min", rho_min)?;
        Ok(self)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Coefficients of the level-phase polynomial; `(0, 1)` for the canonical family.
    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    /// Phase multiplier of level `n`.
    pub fn level_phase(&self, n: usize) -> f64 {
        match self.kind {
            FamilyKind::Canonical => n as f64,
            FamilyKind::Deformed => polynomial(&self.epsilon, n as f64),
        }
    }

    /// The immersion `m -> |m>` for this family.
    pub fn state(&self, point: PhasePoint) -> Result<TruncatedVector> {
        match self.kind {
            FamilyKind::Canonical => canonical_state(point, self.truncation),
            FamilyKind::Deformed => deformed_state(point, self),
        }
    }

    /// The immersion evaluated at `(rho, phi + dphi)` with the phase increment
    /// kept separate from the base angle, so that symmetric offsets see the
    /// same rounding of `theta_n * phi`.
    pub fn state_polar_offset(&self, rho: f64, phi: f64, dphi: f64) -> Result<TruncatedVector> {
        if self.kind == FamilyKind::Deformed && rho < self.rho_min {
            return Err(Error::ExcludedOrigin {
                rho,
                rho_min: self.rho_min,
            });
        }
        check_tail(rho, self.truncation)?;
        if rho == 0.0 {
            return TruncatedVector::basis(0, self.truncation);
        }
        TruncatedVector::new(polar_amplitudes(
            rho,
            phi,
            dphi,
            |n| self.level_phase(n),
            self.truncation,
        ))
    }
}

/// `sum_{n > N} e^{-rho} rho^n / n!`, summed term by term in log space.
pub fn truncation_tail(rho: f64, truncation: usize) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let ln_rho = rho.ln();
    let mut k = truncation as u64 + 1;
    let mut log_term = -rho + k as f64 * ln_rho - ln_factorial(k);
    let mut sum = 0.0;
    loop {
        let term = log_term.exp();
        sum += term;
        if (k as f64 > rho && term <= sum * 1e-17) || k > truncation as u64 + 100_000 {
            break;
        }
        k += 1;
        log_term += ln_rho - (k as f64).ln();
    }
    sum.min(1.0)
}

fn check_tail(rho: f64, truncation: usize) -> Result<()> {
    let tail = truncation_tail(rho, truncation);
    if tail > TAIL_LIMIT {
        Err(Error::TruncationInsufficient {
            rho,
            truncation,
            tail,
            limit: TAIL_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Amplitudes `e^{-rho/2} rho^{n/2} / sqrt(n!) e^{i theta_n (phi + dphi)}` for
/// `n = 0..=levels`, with no truncation bookkeeping.
pub(crate) fn polar_amplitudes(
    rho: f64,
    phi: f64,
    dphi: f64,
    theta: impl Fn(usize) -> f64,
    levels: usize,
) -> Array1<C64> {
    let half_ln_rho = 0.5 * rho.ln();
    Array1::from_iter((0..=levels).map(|n| {
        let modulus = if n == 0 {
            (-0.5 * rho).exp()
        } else {
            (-0.5 * rho + n as f64 * half_ln_rho - 0.5 * ln_factorial(n as u64)).exp()
        };
        let t = theta(n);
        C64::from_polar(modulus, t * phi) * C64::from_polar(1.0, t * dphi)
    }))
}

/// Canonical coherent state `e^{-|z|^2/2} sum_n z^n / sqrt(n!) |n>`.
pub fn canonical_state(point: PhasePoint, truncation: usize) -> Result<TruncatedVector> {
    if truncation < 1 {
        return Err(Error::InvalidTruncation(truncation));
    }
    let rho = point.rho();
    check_tail(rho, truncation)?;
    if rho == 0.0 {
        return TruncatedVector::basis(0, truncation);
    }
    TruncatedVector::new(polar_amplitudes(
        rho,
        point.phi(),
        0.0,
        |n| n as f64,
        truncation,
    ))
}

/// Deformed coherent state with level phases `(sum_j epsilon_j n^j) * phi`.
pub fn deformed_state(point: PhasePoint, family: &FamilySpec) -> Result<TruncatedVector> {
    deformed_state_polar(point.rho(), point.phi(), family)
}

/// Deformed state at polar coordinates, `phi` taken as given (no wrapping).
pub fn deformed_state_polar(rho: f64, phi: f64, family: &FamilySpec) -> Result<TruncatedVector> {
    if family.kind != FamilyKind::Deformed {
        return Err(Error::InvalidParameter {
            name: "family.kind",
            reason: "deformed_state needs a deformed family".into(),
        });
    }
    family.state_polar_offset(rho, phi, 0.0)
}

/// Outcome of integrating `|z><z| d^2z / pi` over a disc.
#[derive(Debug, Clone)]
pub struct IdentityResolution {
    pub levels: usize,
    pub radius: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Integrated `(K+1)x(K+1)` upper-left block.
    pub block: Array2<C64>,
    /// `max |block - I|`.
    pub deviation: f64,
    pub max_diagonal_deviation: f64,
    pub max_offdiagonal: f64,
    /// Deviation with both node counts doubled.
    pub refined_deviation: f64,
    /// Set when doubling the nodes did not reduce a deviation above the rounding floor.
    pub under_resolved: bool,
}

/// Integrates the canonical projector density over the disc `|z| <= radius`
/// with a Gauss-Legendre radial rule times a uniform angular rule, and
/// compares the upper-left block with the identity.
pub fn identity_resolution_check(
    levels: usize,
    radius: f64,
    radial_nodes: usize,
    angular_nodes: usize,
) -> Result<IdentityResolution> {
    positive("radius", radius)?;
    if radial_nodes == 0 || angular_nodes == 0 {
        return Err(Error::InvalidParameter {
            name: "nodes",
            reason: "node counts must be positive".into(),
        });
    }
    let sums = resolution_sums(levels, radius, radial_nodes, angular_nodes);
    let (deviation, max_diagonal_deviation, max_offdiagonal) = sums.deviation();
    let refined_deviation = resolution_sums(levels, radius, 2 * radial_nodes, 2 * angular_nodes)
        .deviation()
        .0;
    let under_resolved = refined_deviation > deviation && deviation > QUADRATURE_ROUNDING_FLOOR;
    Ok(IdentityResolution {
        levels,
        radius,
        radial_nodes,
        angular_nodes,
        block: sums.block(),
        deviation,
        max_diagonal_deviation,
        max_offdiagonal,
        refined_deviation,
        under_resolved,
    })
}

/// Neumaier-compensated running sums of the block entries, real and
/// imaginary parts kept separately.
struct CompensatedBlock {
    dim: usize,
    sum: Vec<[f64; 2]>,
    carry: Vec<[f64; 2]>,
}

impl CompensatedBlock {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            sum: vec![[0.0; 2]; dim * dim],
            carry: vec![[0.0; 2]; dim * dim],
        }
    }

    fn add(&mut self, i: usize, j: usize, v: C64) {
        let idx = i * self.dim + j;
        for (part, x) in [v.re, v.im].into_iter().enumerate() {
            let s = self.sum[idx][part];
            let t = s + x;
            self.carry[idx][part] += if s.abs() >= x.abs() {
                (s - t) + x
            } else {
                (x - t) + s
            };
            self.sum[idx][part] = t;
        }
    }

    fn block(&self) -> Array2<C64> {
        Array2::from_shape_fn((self.dim, self.dim), |(i, j)| {
            let idx = i * self.dim + j;
            C64::new(
                self.sum[idx][0] + self.carry[idx][0],
                self.sum[idx][1] + self.carry[idx][1],
            )
        })
    }

    /// `(max |block - I|, max diagonal deviation, max off-diagonal modulus)`,
    /// with the unit subtracted before the carry is folded in.
    fn deviation(&self) -> (f64, f64, f64) {
        let mut diag = 0.0f64;
        let mut off = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let idx = i * self.dim + j;
                let unit = if i == j { 1.0 } else { 0.0 };
                let re = (self.sum[idx][0] - unit) + self.carry[idx][0];
                let im = self.sum[idx][1] + self.carry[idx][1];
                let d = re.hypot(im);
                if i == j {
                    diag = diag.max(d);
                } else {
                    off = off.max(d);
                }
            }
        }
        (diag.max(off), diag, off)
    }
}

fn resolution_sums(levels: usize, radius: f64, radial: usize, angular: usize) -> CompensatedBlock {
    let (radii, weights) = gauss_legendre_interval(radial, 0.0, radius);
    let dphi = 2.0 * PI / angular as f64;
    let dim = levels + 1;
    let mut block = CompensatedBlock::new(dim);
    for (&r, &w) in radii.iter().zip(&weights) {
        // d^2z / pi = r dr dphi / pi
        let weight = w * r * dphi / PI;
        let rho = r * r;
        for k in 0..angular {
            let amps = polar_amplitudes(rho, k as f64 * dphi, 0.0, |n| n as f64, levels);
            for m in 0..dim {
                let cm = amps[m] * weight;
                for n in 0..dim {
                    block.add(m, n, cm * amps[n].conj());
                }
            }
        }
    }
    block
}
