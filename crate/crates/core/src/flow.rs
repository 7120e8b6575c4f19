//! Phase-plane flow induced by a diagonal Hamiltonian and the checks that
//! the coherent families are carried along it.

pub mod touchard;

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::coherent::{canonical_state, FamilyKind, FamilySpec, PhasePoint};
use crate::dequantize::{
    differential, expectation, pullback_hermitean, spectral_term, Chart, DEFAULT_ACCURACY,
    DEFAULT_STEP,
};
use crate::error::{positive, Error, Result};
use crate::fock::{evolve, hamiltonian, projector, SpectrumSpec, TruncatedVector};

pub use touchard::{stirling2, touchard, touchard_derivative, touchard_series};

/// Largest `omega * dt` accepted by [`generator_extract`].
pub const MAX_GENERATOR_STEP: f64 = 0.1;

/// Below this norm the contracted two-form is treated as degenerate.
pub const DEGENERATE_CONTRACTION: f64 = 1e-10;

/// `gamma_t(x, p) = (x cos wt + p sin wt, p cos wt - x sin wt)`.
pub fn predicted_flow(point: PhasePoint, omega: f64, t: f64) -> PhasePoint {
    let (s, c) = (omega * t).sin_cos();
    PhasePoint::new(point.x * c + point.p * s, point.p * c - point.x * s)
}

/// `count` equally spaced times ending at `periods` full periods.
pub fn time_samples(omega: f64, count: usize, periods: f64) -> Vec<f64> {
    let span = periods * 2.0 * PI / omega;
    (1..=count)
        .map(|k| span * k as f64 / count as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub initial: PhasePoint,
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
}

pub fn trace(initial: PhasePoint, omega: f64, times: &[f64]) -> FlowTrace {
    FlowTrace {
        initial,
        times: times.to_vec(),
        points: times
            .iter()
            .map(|&t| predicted_flow(initial, omega, t))
            .collect(),
    }
}

/// `1 - |<a|b>|^2 / (<a|a><b|b>)`, clamped at zero.
pub fn infidelity(a: &TruncatedVector, b: &TruncatedVector) -> Result<f64> {
    let overlap = a.inner(b)?.norm_sqr();
    Ok((1.0 - overlap / (a.norm_sqr() * b.norm_sqr())).max(0.0))
}

fn predicted_state(
    family: &FamilySpec,
    point: PhasePoint,
    omega: f64,
    t: f64,
) -> Result<TruncatedVector> {
    match family.kind() {
        FamilyKind::Canonical => {
            canonical_state(predicted_flow(point, omega, t), family.truncation())
        }
        FamilyKind::Deformed => {
            let (rho, phi) = point.polar();
            family.state_polar_offset(rho, phi - omega * t, 0.0)
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub kind: FamilyKind,
    pub points: Vec<PhasePoint>,
    pub times: Vec<f64>,
    /// Point-major: `infidelity[i * times.len() + k]`.
    pub infidelity: Vec<f64>,
    pub max_infidelity: f64,
}

/// Compares `U_t |m>` with the family state at the predicted point.
pub fn check_invariance(
    family: &FamilySpec,
    spec: &SpectrumSpec,
    points: &[PhasePoint],
    times: &[f64],
) -> Result<InvarianceReport> {
    check_hbar(family, spec)?;
    let omega = spec.omega();
    let rows = points
        .par_iter()
        .map(|&pt| {
            let start = family.state(pt)?;
            times
                .iter()
                .map(|&t| {
                    infidelity(
                        &predicted_state(family, pt, omega, t)?,
                        &evolve(&start, spec, t),
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let infidelity: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(InvarianceReport {
        kind: family.kind(),
        points: points.to_vec(),
        times: times.to_vec(),
        max_infidelity: infidelity.iter().copied().fold(0.0, f64::max),
        infidelity,
    })
}

fn check_hbar(family: &FamilySpec, spec: &SpectrumSpec) -> Result<()> {
    if family.hbar() != spec.hbar() {
        return Err(Error::InvalidParameter {
            name: "hbar",
            reason: format!(
                "family uses {} but spectrum uses {}",
                family.hbar(),
                spec.hbar()
            ),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LevelConstants {
    pub level: usize,
    /// Drift of `f_{E_k}` along the predicted trace.
    pub projector_drift: f64,
    /// Drift of `f` for `hbar*omega*k*E_k`.
    pub spectral_drift: f64,
    /// `max |det(df_H, df_{E_k})|` over the points.
    pub wedge: f64,
}

#[derive(Debug, Clone)]
pub struct ConstantsReport {
    pub levels: Vec<LevelConstants>,
    pub energy_drift: f64,
    pub max_drift: f64,
    pub max_wedge: f64,
}

/// Drift of the projector and energy symbols along predicted traces, and the
/// wedge of their differentials.
pub fn constants_check(
    family: &FamilySpec,
    spec: &SpectrumSpec,
    levels: &[usize],
    points: &[PhasePoint],
    times: &[f64],
) -> Result<ConstantsReport> {
    check_hbar(family, spec)?;
    let n = family.truncation();
    let h = hamiltonian(spec, n)?;
    let drift = |op: &crate::fock::MatrixOperator| -> Result<f64> {
        let per_point = points
            .par_iter()
            .map(|&pt| {
                let start = expectation(op, family, pt)?.re;
                trace(pt, spec.omega(), times)
                    .points
                    .iter()
                    .map(|&q| Ok((expectation(op, family, q)?.re - start).abs()))
                    .collect::<Result<Vec<f64>>>()
                    .map(|v| v.into_iter().fold(0.0, f64::max))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(per_point.into_iter().fold(0.0, f64::max))
    };
    let symbol = |op: &crate::fock::MatrixOperator, q: [f64; 2]| -> Result<f64> {
        Ok(expectation(op, family, PhasePoint::new(q[0], q[1]))?.re)
    };
    let energy_differentials = points
        .par_iter()
        .map(|&pt| {
            differential(
                |q| symbol(&h, q),
                [pt.x, pt.p],
                DEFAULT_STEP,
                DEFAULT_ACCURACY,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let energy_drift = drift(&h)?;
    let mut out = Vec::with_capacity(levels.len());
    for &k in levels {
        let e_k = projector(k, n)?;
        let term = spectral_term(k, spec.hbar_omega(), n)?;
        let wedge = points
            .par_iter()
            .zip(&energy_differentials)
            .map(|(&pt, dh)| {
                let de = differential(
                    |q| symbol(&e_k, q),
                    [pt.x, pt.p],
                    DEFAULT_STEP,
                    DEFAULT_ACCURACY,
                )?;
                let (a, b) = (dh.components, de.components);
                Ok((a[0] * b[1] - a[1] * b[0]).abs())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out.push(LevelConstants {
            level: k,
            projector_drift: drift(&e_k)?,
            spectral_drift: drift(&term)?,
            wedge,
        });
    }
    let max_drift = out
        .iter()
        .flat_map(|l| [l.projector_drift, l.spectral_drift])
        .fold(energy_drift, f64::max);
    let max_wedge = out.iter().map(|l| l.wedge).fold(0.0, f64::max);
    Ok(ConstantsReport {
        levels: out,
        energy_drift,
        max_drift,
        max_wedge,
    })
}

/// `hbar*omega * sum_j eps_j T_j(rho)`.
pub fn energy_deformed(rho: f64, spec: &SpectrumSpec) -> Result<f64> {
    let mut acc = 0.0;
    for (j, &e) in spec.epsilon().iter().enumerate() {
        if e != 0.0 {
            acc += e * touchard(j, rho)?;
        }
    }
    Ok(spec.hbar_omega() * acc)
}

/// Velocity of the predicted flow at `t = 0` in cartesian components, from
/// central differences at `dt` and `dt/2` with one Richardson step.
pub fn generator_extract(spec: &SpectrumSpec, point: PhasePoint, dt: f64) -> Result<[f64; 2]> {
    positive("dt", dt)?;
    let omega = spec.omega();
    if omega * dt >= MAX_GENERATOR_STEP {
        return Err(Error::Accuracy(format!(
            "omega*dt = {} not below {MAX_GENERATOR_STEP}",
            omega * dt
        )));
    }
    let central = |h: f64| {
        let a = predicted_flow(point, omega, h);
        let b = predicted_flow(point, omega, -h);
        [(a.x - b.x) / (2.0 * h), (a.p - b.p) / (2.0 * h)]
    };
    let coarse = central(dt);
    let fine = central(0.5 * dt);
    Ok([
        (4.0 * fine[0] - coarse[0]) / 3.0,
        (4.0 * fine[1] - coarse[1]) / 3.0,
    ])
}

/// Cartesian vector components to `(rho, phi)` components.
pub fn polar_components(point: PhasePoint, v: [f64; 2]) -> [f64; 2] {
    let rho = point.rho();
    [
        2.0 * (point.x * v[0] + point.p * v[1]),
        (point.x * v[1] - point.p * v[0]) / rho,
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSample {
    pub rho: f64,
    pub phi: f64,
    /// Generator in `(rho, phi)` components.
    pub generator: [f64; 2],
    /// `omega_prime(Gamma, .)`
    pub contraction: [f64; 2],
    /// `df_H` in `(d rho, d phi)` components.
    pub energy_differential: [f64; 2],
    /// Residual at the fitted constant.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct HamiltonianFitReport {
    pub chart: Chart,
    /// Minimax constant in `c * omega_prime(Gamma, .) = df_H`.
    pub c: f64,
    pub c_over_hbar: f64,
    /// `max_i |c v_i - d_i| / |d_i|`.
    pub residual: f64,
    pub samples: Vec<FitSample>,
}

fn relative_residual(c: f64, v: [f64; 2], d: [f64; 2]) -> f64 {
    let num = (c * v[0] - d[0]).hypot(c * v[1] - d[1]);
    num / d[0].hypot(d[1]).max(f64::MIN_POSITIVE)
}

/// Fits one constant `c` with `c * omega_prime(Gamma, .) = df_H` over polar
/// grid points `(rho, phi)`, minimizing the largest relative residual.
///
/// The pulled-back two-form is normalized as `omega_prime = 2 Im h`; on the
/// canonical family this gives `omega_prime(d/dx, d/dp) = 2`, i.e.
/// `omega_prime = d rho ^ d phi`, and the fitted constant is `hbar`.
pub fn hamiltonian_fit(
    family: &FamilySpec,
    spec: &SpectrumSpec,
    grid: &[(f64, f64)],
) -> Result<HamiltonianFitReport> {
    check_hbar(family, spec)?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "no fit points".into(),
        });
    }
    let raw = grid
        .par_iter()
        .map(|&(rho, phi)| -> Result<([f64; 2], [f64; 2], [f64; 2])> {
            let pt = PhasePoint::from_polar(rho, phi);
            let gamma = polar_components(pt, generator_extract(spec, pt, 1e-4)?);
            let tensor = pullback_hermitean(family, pt, Chart::Polar, DEFAULT_STEP)?;
            let w = tensor.omega_prime;
            let v = [
                gamma[0] * w[0][0] + gamma[1] * w[1][0],
                gamma[0] * w[0][1] + gamma[1] * w[1][1],
            ];
            if v[0].hypot(v[1]) < DEGENERATE_CONTRACTION {
                return Err(Error::DegenerateStructure(format!(
                    "omega_prime(Gamma, .) vanishes at rho = {rho}, phi = {phi}"
                )));
            }
            let d = differential(
                |q| energy_deformed(q[0], spec),
                [rho, phi],
                DEFAULT_STEP,
                DEFAULT_ACCURACY,
            )?;
            Ok((gamma, v, d.components))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = raw
        .iter()
        .map(|(_, v, d)| (v[0] * d[0] + v[1] * d[1]) / (v[0] * v[0] + v[1] * v[1]))
        .collect();
    let worst = |c: f64| {
        raw.iter()
            .map(|(_, v, d)| relative_residual(c, *v, *d))
            .fold(0.0, f64::max)
    };
    // the worst-case residual is convex in c and minimized between the
    // per-point optima
    let mut lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
        let a = hi - golden * (hi - lo);
        let b = lo + golden * (hi - lo);
        if worst(a) <= worst(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let c = 0.5 * (lo + hi);
    let samples = grid
        .iter()
        .zip(&raw)
        .map(|(&(rho, phi), (gamma, v, d))| FitSample {
            rho,
            phi,
            generator: *gamma,
            contraction: *v,
            energy_differential: *d,
            residual: relative_residual(c, *v, *d),
        })
        .collect();
    Ok(HamiltonianFitReport {
        chart: Chart::Polar,
        c,
        c_over_hbar: c / spec.hbar(),
        residual: worst(c),
        samples,
    })
}

/// `n_rho x n_phi` polar grid with radii spaced evenly in `[rho_min, rho_max]`.
pub fn polar_grid(rho_min: f64, rho_max: f64, n_rho: usize, n_phi: usize) -> Vec<(f64, f64)> {
    let radii: Vec<f64> = if n_rho == 1 {
        vec![rho_min]
    } else {
        (0..n_rho)
            .map(|i| rho_min + (rho_max - rho_min) * i as f64 / (n_rho - 1) as f64)
            .collect()
    };
    radii
        .iter()
        .flat_map(|&r| (0..n_phi).map(move |k| (r, 2.0 * PI * k as f64 / n_phi as f64)))
        .collect()
}
