//! One-dimensional Schrodinger evolution and the polar (Madelung)
//! decomposition `psi = A exp(-i W / hbar)`.
//!
//! With this phase convention exact solutions satisfy
//!
//! ```text
//! dW/dt = |W'|^2 / 2m + V - (hbar^2 / 2m) A'' / A
//! dA/dt = (2 A' W' + A W'') / 2m
//! ```
//!
//! and the residuals below are the differences of the two sides.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{positive, Error, Result};

/// Mask threshold relative to `max |psi|`.
pub const NODE_THRESHOLD: f64 = 1e-8;

/// Largest fraction of masked samples between the first and last unmasked node.
pub const MAX_MASKED_FRACTION: f64 = 0.2;

/// Probability allowed in the outer 10% of the domain on either side.
pub const ESCAPE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Free,
    Harmonic { omega: f64 },
}

impl Potential {
    pub fn value(&self, x: f64, mass: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => 0.5 * mass * omega * omega * x * x,
        }
    }
}

/// Periodic grid `x_j = x_min + j dx`, `dx = (x_max - x_min) / nodes`, with
/// the wavefunction stored per time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveGrid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub nodes: usize,
    pub samples: Vec<Vec<C64>>,
    pub times: Vec<f64>,
    pub hbar: f64,
    pub mass: f64,
    pub potential: Potential,
}

impl WaveGrid1D {
    pub fn new(
        x_min: f64,
        x_max: f64,
        nodes: usize,
        hbar: f64,
        mass: f64,
        potential: Potential,
    ) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidParameter {
                name: "x_min/x_max",
                reason: format!("need x_min < x_max, got [{x_min}, {x_max}]"),
            });
        }
        if nodes < 8 || !nodes.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "nodes",
                reason: format!("need a power of two >= 8, got {nodes}"),
            });
        }
        positive("hbar", hbar)?;
        positive("mass", mass)?;
        if let Potential::Harmonic { omega } = potential {
            positive("omega", omega)?;
        }
        Ok(Self {
            x_min,
            x_max,
            nodes,
            samples: Vec::new(),
            times: Vec::new(),
            hbar,
            mass,
            potential,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nodes as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.nodes)
            .map(|j| self.x_min + j as f64 * dx)
            .collect()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.nodes;
        let base = 2.0 * PI / (self.x_max - self.x_min);
        (0..n)
            .map(|j| if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * base)
            .collect()
    }

    pub fn push_slice(&mut self, time: f64, samples: Vec<C64>) -> Result<()> {
        if samples.len() != self.nodes {
            return Err(Error::ShapeMismatch {
                expected: self.nodes,
                found: samples.len(),
            });
        }
        self.times.push(time);
        self.samples.push(samples);
        Ok(())
    }

    /// Same grid and physics, no slices.
    pub fn empty_like(&self) -> Self {
        Self {
            samples: Vec::new(),
            times: Vec::new(),
            ..self.clone()
        }
    }

    /// Discrete `sqrt(sum |psi|^2 dx)`.
    pub fn norm(&self, slice: usize) -> f64 {
        (self.samples[slice]
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            * self.dx())
        .sqrt()
    }

    fn escape_fraction(&self, psi: &[C64]) -> f64 {
        let band = self.nodes / 10;
        let total: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let outer: f64 = psi[..band]
            .iter()
            .chain(&psi[self.nodes - band..])
            .map(|c| c.norm_sqr())
            .sum();
        outer / total
    }
}

/// Gaussian `(2 pi sigma^2)^(-1/4) exp(-(x-x0)^2 / 4 sigma^2 + i p0 x / hbar)`.
pub fn gaussian_packet(grid: &WaveGrid1D, sigma: f64, x0: f64, p0: f64) -> Result<Vec<C64>> {
    positive("sigma", sigma)?;
    let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
    Ok(grid
        .positions()
        .iter()
        .map(|&x| {
            let u = x - x0;
            C64::from_polar(
                norm * (-u * u / (4.0 * sigma * sigma)).exp(),
                p0 * x / grid.hbar,
            )
        })
        .collect())
}

/// Exact harmonic coherent packet at time `t`, started from `(x0, p0)`.
pub fn harmonic_coherent_packet(grid: &WaveGrid1D, x0: f64, p0: f64, t: f64) -> Result<Vec<C64>> {
    let Potential::Harmonic { omega } = grid.potential else {
        return Err(Error::InvalidParameter {
            name: "potential",
            reason: "coherent packet needs a harmonic potential".into(),
        });
    };
    let (hbar, m) = (grid.hbar, grid.mass);
    let (s, c) = (omega * t).sin_cos();
    let xc = x0 * c + p0 / (m * omega) * s;
    let pc = p0 * c - m * omega * x0 * s;
    let norm = (m * omega / (PI * hbar)).powf(0.25);
    Ok(grid
        .positions()
        .iter()
        .map(|&x| {
            let u = x - xc;
            let modulus = norm * (-(m * omega / (2.0 * hbar)) * u * u).exp();
            C64::from_polar(modulus, pc * (x - 0.5 * xc) / hbar - 0.5 * omega * t)
        })
        .collect())
}

/// Slices of the exact harmonic coherent packet at the given times.
pub fn harmonic_coherent_trajectory(
    template: &WaveGrid1D,
    x0: f64,
    p0: f64,
    times: &[f64],
) -> Result<WaveGrid1D> {
    let mut out = template.empty_like();
    for &t in times {
        out.push_slice(t, harmonic_coherent_packet(template, x0, p0, t)?)?;
    }
    Ok(out)
}

/// Strang split-step Fourier evolution of the last slice of `initial`,
/// recording every `record_every` steps (and the final step).
pub fn evolve_schrodinger(
    initial: &WaveGrid1D,
    steps: usize,
    dt: f64,
    record_every: usize,
) -> Result<WaveGrid1D> {
    positive("dt", dt)?;
    let (Some(start), Some(&t0)) = (initial.samples.last(), initial.times.last()) else {
        return Err(Error::InvalidParameter {
            name: "initial",
            reason: "no initial slice".into(),
        });
    };
    let record_every = record_every.max(1);
    let n = initial.nodes;
    let (hbar, m) = (initial.hbar, initial.mass);
    let half_potential: Vec<C64> = initial
        .positions()
        .iter()
        .map(|&x| C64::from_polar(1.0, -initial.potential.value(x, m) * dt / (2.0 * hbar)))
        .collect();
    let kinetic: Vec<C64> = initial
        .wavenumbers()
        .iter()
        .map(|&k| C64::from_polar(1.0, -hbar * k * k * dt / (2.0 * m)))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let scale = 1.0 / n as f64;

    let mut out = initial.empty_like();
    let mut psi = start.clone();
    if initial.escape_fraction(&psi) > ESCAPE_THRESHOLD {
        return Err(Error::DomainEscape { time: t0 });
    }
    out.push_slice(t0, psi.clone())?;
    for step in 1..=steps {
        for (v, f) in psi.iter_mut().zip(&half_potential) {
            *v *= f;
        }
        forward.process(&mut psi);
        for (v, f) in psi.iter_mut().zip(&kinetic) {
            *v *= f * scale;
        }
        inverse.process(&mut psi);
        for (v, f) in psi.iter_mut().zip(&half_potential) {
            *v *= f;
        }
        if step % record_every == 0 || step == steps {
            let t = t0 + step as f64 * dt;
            if out.escape_fraction(&psi) > ESCAPE_THRESHOLD {
                return Err(Error::DomainEscape { time: t });
            }
            out.push_slice(t, psi.clone())?;
        }
    }
    Ok(out)
}

/// Amplitude and unwrapped phase of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFields {
    pub amplitude: Vec<f64>,
    /// `W = -hbar * arg(psi)`, unwrapped along each unmasked interval.
    pub phase: Vec<f64>,
    /// `true` where `|psi|` is below the threshold.
    pub node_mask: Vec<bool>,
}

impl PolarFields {
    pub fn reconstruct(&self, hbar: f64) -> Vec<C64> {
        self.amplitude
            .iter()
            .zip(&self.phase)
            .map(|(&a, &w)| C64::from_polar(a, -w / hbar))
            .collect()
    }

    /// `true` when nodes `i-2 ..= i+2` exist and are all unmasked.
    pub fn stencil_clear(&self, i: usize) -> bool {
        i >= 2 && i + 2 < self.node_mask.len() && self.node_mask[i - 2..=i + 2].iter().all(|m| !m)
    }
}

/// Splits a slice into `A = |psi|` and `W = -hbar arg(psi)`, masking samples
/// below `threshold * max |psi|`. Masked tails at the domain ends are
/// expected; masked samples between unmasked ones are holes, and more than
/// 20% holes make the decomposition ill-conditioned.
pub fn polar_decompose(psi: &[C64], hbar: f64, threshold: f64) -> Result<PolarFields> {
    positive("hbar", hbar)?;
    let amplitude: Vec<f64> = psi.iter().map(|c| c.norm()).collect();
    let peak = amplitude.iter().copied().fold(0.0, f64::max);
    let node_mask: Vec<bool> = amplitude
        .iter()
        .map(|&a| a.is_nan() || a <= threshold * peak || a == 0.0)
        .collect();
    let first = node_mask.iter().position(|m| !m);
    let last = node_mask.iter().rposition(|m| !m);
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::IllConditionedDecomposition {
            masked: psi.len(),
            total: psi.len(),
        });
    };
    let span = last - first + 1;
    let holes = node_mask[first..=last].iter().filter(|&&m| m).count();
    if holes as f64 > MAX_MASKED_FRACTION * span as f64 {
        return Err(Error::IllConditionedDecomposition {
            masked: holes,
            total: span,
        });
    }
    let mut phase = vec![0.0; psi.len()];
    let mut theta = 0.0;
    for i in 0..psi.len() {
        if node_mask[i] {
            continue;
        }
        theta = if i > 0 && !node_mask[i - 1] {
            theta + (psi[i] * psi[i - 1].conj()).arg()
        } else {
            psi[i].arg()
        };
        phase[i] = -hbar * theta;
    }
    Ok(PolarFields {
        amplitude,
        phase,
        node_mask,
    })
}

fn d1(f: &[f64], i: usize, dx: f64) -> f64 {
    (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * dx)
}

fn d2(f: &[f64], i: usize, dx: f64) -> f64 {
    (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) / (12.0 * dx * dx)
}

fn ln_amplitude(fields: &PolarFields) -> Vec<f64> {
    fields
        .amplitude
        .iter()
        .zip(&fields.node_mask)
        .map(|(&a, &m)| if m { 0.0 } else { a.ln() })
        .collect()
}

fn quantum_potential_from_log(ln_a: &[f64], i: usize, dx: f64, hbar: f64, mass: f64) -> f64 {
    let g = d1(ln_a, i, dx);
    -(hbar * hbar / (2.0 * mass)) * (d2(ln_a, i, dx) + g * g)
}

/// `Q = -(hbar^2 / 2m) A'' / A` at nodes whose five-point stencil is
/// unmasked, from fourth-order differences of `ln A`.
pub fn quantum_potential(fields: &PolarFields, dx: f64, hbar: f64, mass: f64) -> Vec<Option<f64>> {
    let ln_a = ln_amplitude(fields);
    (0..fields.amplitude.len())
        .map(|i| {
            fields
                .stencil_clear(i)
                .then(|| quantum_potential_from_log(&ln_a, i, dx, hbar, mass))
        })
        .collect()
}

pub fn quantum_potential_at(
    fields: &PolarFields,
    dx: f64,
    hbar: f64,
    mass: f64,
    index: usize,
) -> Result<f64> {
    if !fields.stencil_clear(index) {
        return Err(Error::MaskedRegion(index));
    }
    Ok(quantum_potential_from_log(
        &ln_amplitude(fields),
        index,
        dx,
        hbar,
        mass,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceResidual {
    pub time: f64,
    pub evaluated_nodes: usize,
    /// Phase (quantum Hamilton-Jacobi) equation.
    pub max_phase: f64,
    pub l2_phase: f64,
    /// Amplitude (continuity) equation.
    pub max_amplitude: f64,
    pub l2_amplitude: f64,
    /// `max |(1/2A)(dA^2/dt + (A^2 W_eff'/m)')  - R_amplitude|` with `W_eff = -W`.
    pub divergence_gap: f64,
    pub max_quantum: f64,
    /// `max |W'^2 / 2m + V|`.
    pub max_classical: f64,
    /// `max |dW/dt - W'^2 / 2m - V|`, the balance with the quantum term dropped.
    pub max_classical_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MadelungReport {
    pub slices: Vec<SliceResidual>,
    pub max_phase: f64,
    pub max_amplitude: f64,
    pub l2_phase: f64,
    pub l2_amplitude: f64,
    pub max_divergence_gap: f64,
    /// `max |Q| / max |W'^2/2m + V|` over the evaluated slices.
    pub quantum_share: f64,
    pub max_quantum: f64,
    pub max_classical_residual: f64,
}

impl MadelungReport {
    /// The classical balance misses only the quantum term, up to the full residual.
    pub fn classical_limit_bounded(&self) -> bool {
        self.max_classical_residual <= self.max_quantum + self.max_phase
    }
}

/// Residuals of the coupled phase and amplitude equations at every interior
/// slice, with central time differences over equally spaced slices.
pub fn madelung_residuals(trajectory: &WaveGrid1D) -> Result<MadelungReport> {
    let count = trajectory.samples.len();
    if count < 3 {
        return Err(Error::InvalidParameter {
            name: "trajectory",
            reason: format!("need at least 3 slices, got {count}"),
        });
    }
    let times = &trajectory.times;
    let dt = times[1] - times[0];
    if dt.is_nan() || dt <= 0.0
        || times
            .windows(2)
            .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0))
    {
        return Err(Error::InvalidParameter {
            name: "trajectory.times",
            reason: "slices must be equally spaced and increasing".into(),
        });
    }
    let (hbar, m, dx) = (trajectory.hbar, trajectory.mass, trajectory.dx());
    let xs = trajectory.positions();
    let slices = (1..count - 1)
        .into_par_iter()
        .map(|k| -> Result<SliceResidual> {
            let before = &trajectory.samples[k - 1];
            let now = &trajectory.samples[k];
            let after = &trajectory.samples[k + 1];
            let fields = polar_decompose(now, hbar, NODE_THRESHOLD)?;
            let ln_a = ln_amplitude(&fields);
            let w = &fields.phase;
            let a = &fields.amplitude;
            let a_sq: Vec<f64> = a.iter().map(|v| v * v).collect();
            let w_eff_prime: Vec<f64> = (0..a.len())
                .map(|i| {
                    if fields.stencil_clear(i) {
                        -d1(w, i, dx)
                    } else {
                        0.0
                    }
                })
                .collect();
            let flux: Vec<f64> = a_sq
                .iter()
                .zip(&w_eff_prime)
                .map(|(q, w)| q * w / m)
                .collect();
            let mut out = SliceResidual {
                time: times[k],
                evaluated_nodes: 0,
                max_phase: 0.0,
                l2_phase: 0.0,
                max_amplitude: 0.0,
                l2_amplitude: 0.0,
                divergence_gap: 0.0,
                max_quantum: 0.0,
                max_classical: 0.0,
                max_classical_residual: 0.0,
            };
            for i in 0..a.len() {
                if !fields.stencil_clear(i) {
                    continue;
                }
                let a_prev = before[i].norm();
                let a_next = after[i].norm();
                let dw_dt = -hbar * (after[i] * before[i].conj()).arg() / (2.0 * dt);
                let da_dt = (a_next - a_prev) / (2.0 * dt);
                let wp = d1(w, i, dx);
                let wpp = d2(w, i, dx);
                let ap_over_a = d1(&ln_a, i, dx);
                let q = quantum_potential_from_log(&ln_a, i, dx, hbar, m);
                let classical = wp * wp / (2.0 * m) + trajectory.potential.value(xs[i], m);
                let r_phase = dw_dt - classical - q;
                let r_amp = da_dt - a[i] * (2.0 * ap_over_a * wp + wpp) / (2.0 * m);
                out.evaluated_nodes += 1;
                out.max_phase = out.max_phase.max(r_phase.abs());
                out.l2_phase += r_phase * r_phase * dx;
                out.max_amplitude = out.max_amplitude.max(r_amp.abs());
                out.l2_amplitude += r_amp * r_amp * dx;
                out.max_quantum = out.max_quantum.max(q.abs());
                out.max_classical = out.max_classical.max(classical.abs());
                out.max_classical_residual =
                    out.max_classical_residual.max((dw_dt - classical).abs());
                // divergence form, differentiated where the flux stencil is clear too
                if (i - 2..=i + 2).all(|j| fields.stencil_clear(j)) {
                    let da2_dt = (a_next * a_next - a_prev * a_prev) / (2.0 * dt);
                    let divergence = (da2_dt + d1(&flux, i, dx)) / (2.0 * a[i]);
                    out.divergence_gap = out.divergence_gap.max((divergence - r_amp).abs());
                }
            }
            if out.evaluated_nodes == 0 {
                return Err(Error::IllConditionedDecomposition {
                    masked: a.len(),
                    total: a.len(),
                });
            }
            out.l2_phase = out.l2_phase.sqrt();
            out.l2_amplitude = out.l2_amplitude.sqrt();
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&SliceResidual) -> f64| slices.iter().map(f).fold(0.0, f64::max);
    let max_quantum = fold(|s| s.max_quantum);
    let quantum_share = slices
        .iter()
        .map(|s| s.max_quantum / s.max_classical.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(MadelungReport {
        max_phase: fold(|s| s.max_phase),
        max_amplitude: fold(|s| s.max_amplitude),
        l2_phase: fold(|s| s.l2_phase),
        l2_amplitude: fold(|s| s.l2_amplitude),
        max_divergence_gap: fold(|s| s.divergence_gap),
        max_classical_residual: fold(|s| s.max_classical_residual),
        quantum_share,
        max_quantum,
        slices,
    })
}

/// `(coarse / fine)` ratios of the maximal phase and amplitude residuals.
pub fn refinement_ratios(coarse: &MadelungReport, fine: &MadelungReport) -> (f64, f64) {
    (
        coarse.max_phase / fine.max_phase,
        coarse.max_amplitude / fine.max_amplitude,
    )
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "need at least two paired samples".into(),
        });
    }
    if x.iter().chain(y).any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "log-log fit needs positive values".into(),
        });
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Quantum share of the phase-equation balance for each `hbar`, evolving the
/// same Gaussian amplitude profile (width `sigma`, at rest at `x0`) for
/// `slices - 1` steps of `dt`.
pub fn hbar_scan(
    template: &WaveGrid1D,
    hbars: &[f64],
    sigma: f64,
    x0: f64,
    dt: f64,
    slices: usize,
) -> Result<Vec<f64>> {
    hbars
        .par_iter()
        .map(|&hbar| {
            let mut grid = WaveGrid1D::new(
                template.x_min,
                template.x_max,
                template.nodes,
                hbar,
                template.mass,
                template.potential,
            )?;
            let psi = gaussian_packet(&grid, sigma, x0, 0.0)?;
            grid.push_slice(0.0, psi)?;
            let traj = evolve_schrodinger(&grid, slices.max(3) - 1, dt, 1)?;
            Ok(madelung_residuals(&traj)?.quantum_share)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic_grid(nodes: usize) -> WaveGrid1D {
        WaveGrid1D::new(
            -20.0,
            20.0,
            nodes,
            1.0,
            1.0,
            Potential::Harmonic { omega: 1.0 },
        )
        .unwrap()
    }

    fn moments(grid: &WaveGrid1D, psi: &[C64]) -> (f64, f64) {
        let xs = grid.positions();
        let w: Vec<f64> = psi.iter().map(|c| c.norm_sqr() * grid.dx()).collect();
        let total: f64 = w.iter().sum();
        let mean = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / total;
        let var = xs
            .iter()
            .zip(&w)
            .map(|(x, w)| (x - mean).powi(2) * w)
            .sum::<f64>()
            / total;
        (mean, var.sqrt())
    }

    #[test]
    fn grid_validation() {
        assert!(WaveGrid1D::new(-1.0, 1.0, 1000, 1.0, 1.0, Potential::Free).is_err());
        assert!(WaveGrid1D::new(1.0, -1.0, 64, 1.0, 1.0, Potential::Free).is_err());
        assert!(WaveGrid1D::new(-1.0, 1.0, 64, 0.0, 1.0, Potential::Free).is_err());
        let g = WaveGrid1D::new(-1.0, 1.0, 64, 1.0, 1.0, Potential::Free).unwrap();
        assert_eq!(g.positions().len(), 64);
        assert_eq!(g.wavenumbers()[33], -31.0 * PI);
    }

    #[test]
    fn norm_conserved_over_thousand_steps() {
        let mut g = harmonic_grid(1024);
        let psi = gaussian_packet(&g, 0.8, 1.5, 0.7).unwrap();
        g.push_slice(0.0, psi).unwrap();
        let n0 = g.norm(0);
        assert!((n0 - 1.0).abs() < 1e-12);
        let traj = evolve_schrodinger(&g, 1000, 1e-3, 100).unwrap();
        assert_eq!(traj.samples.len(), 11);
        for k in 0..traj.samples.len() {
            assert!((traj.norm(k) - n0).abs() < 1e-10);
        }
    }

    #[test]
    fn free_gaussian_spreads_per_exact_law() {
        let (hbar, m, sigma) = (1.0, 1.0, 1.0);
        let mut g = WaveGrid1D::new(-40.0, 40.0, 2048, hbar, m, Potential::Free).unwrap();
        g.push_slice(0.0, gaussian_packet(&g, sigma, 0.0, 0.0).unwrap())
            .unwrap();
        let traj = evolve_schrodinger(&g, 2000, 1e-3, 1000).unwrap();
        for (k, &t) in traj.times.iter().enumerate() {
            let (mean, width) = moments(&traj, &traj.samples[k]);
            let exact = sigma * (1.0 + (hbar * t / (2.0 * m * sigma * sigma)).powi(2)).sqrt();
            assert!(mean.abs() < 1e-10);
            assert!((width - exact).abs() < 1e-8, "t={t}: {width} vs {exact}");
        }
    }

    #[test]
    fn harmonic_packet_follows_classical_orbit() {
        let mut g = harmonic_grid(1024);
        g.push_slice(0.0, harmonic_coherent_packet(&g, 2.0, 0.5, 0.0).unwrap())
            .unwrap();
        let traj = evolve_schrodinger(&g, 3000, 1e-3, 500).unwrap();
        for (k, &t) in traj.times.iter().enumerate() {
            let (mean, _) = moments(&traj, &traj.samples[k]);
            assert!((mean - (2.0 * t.cos() + 0.5 * t.sin())).abs() < 1e-6);
            let exact = harmonic_coherent_packet(&traj, 2.0, 0.5, t).unwrap();
            let err = exact
                .iter()
                .zip(&traj.samples[k])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "t={t}: {err}");
        }
    }

    #[test]
    fn split_step_is_second_order() {
        let error_at = |dt: f64| {
            let mut g = harmonic_grid(512);
            g.push_slice(0.0, gaussian_packet(&g, 0.5, 1.0, 0.0).unwrap())
                .unwrap();
            let steps = (1.0 / dt).round() as usize;
            let coarse = evolve_schrodinger(&g, steps, dt, steps).unwrap();
            let fine = evolve_schrodinger(&g, 16 * steps, dt / 16.0, 16 * steps).unwrap();
            coarse.samples[1]
                .iter()
                .zip(&fine.samples[1])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        };
        let ratio = error_at(0.02) / error_at(0.01);
        assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn escape_is_detected() {
        let mut g = WaveGrid1D::new(-10.0, 10.0, 256, 1.0, 1.0, Potential::Free).unwrap();
        g.push_slice(0.0, gaussian_packet(&g, 0.5, 0.0, 6.0).unwrap())
            .unwrap();
        assert!(matches!(
            evolve_schrodinger(&g, 2000, 1e-3, 10),
            Err(Error::DomainEscape { .. })
        ));
    }

    #[test]
    fn plane_wave_decomposition() {
        let g = WaveGrid1D::new(0.0, 2.0 * PI, 64, 0.5, 1.0, Potential::Free).unwrap();
        let k = 3.0;
        let psi: Vec<C64> = g
            .positions()
            .iter()
            .map(|&x| C64::from_polar(1.0, k * x))
            .collect();
        let f = polar_decompose(&psi, 0.5, NODE_THRESHOLD).unwrap();
        for (i, &x) in g.positions().iter().enumerate() {
            assert!((f.amplitude[i] - 1.0).abs() < 1e-15);
            assert!((f.phase[i] - (f.phase[0] - 0.5 * k * x)).abs() < 1e-12);
        }
        assert!(f.node_mask.iter().all(|m| !m));
    }

    #[test]
    fn real_gaussian_has_constant_phase_and_reconstructs() {
        let g = harmonic_grid(256);
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.0).unwrap();
        let f = polar_decompose(&psi, 1.0, NODE_THRESHOLD).unwrap();
        let back = f.reconstruct(1.0);
        for i in 0..psi.len() {
            if !f.node_mask[i] {
                assert_eq!(f.phase[i], 0.0);
                assert!((back[i] - psi[i]).norm() <= 1e-10 * psi[i].norm());
            }
        }
        let moving = gaussian_packet(&g, 1.0, 0.0, 2.5).unwrap();
        let f = polar_decompose(&moving, 1.0, NODE_THRESHOLD).unwrap();
        let back = f.reconstruct(1.0);
        for i in 0..psi.len() {
            if !f.node_mask[i] {
                assert!((back[i] - moving[i]).norm() <= 1e-10 * moving[i].norm());
            }
        }
    }

    #[test]
    fn interior_holes_are_ill_conditioned() {
        let g = WaveGrid1D::new(-1.0, 1.0, 64, 1.0, 1.0, Potential::Free).unwrap();
        let psi: Vec<C64> = (0..64)
            .map(|i| {
                if (20..35).contains(&i) {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(1.0, 0.0)
                }
            })
            .collect();
        assert!(matches!(
            polar_decompose(&psi, g.hbar, NODE_THRESHOLD),
            Err(Error::IllConditionedDecomposition {
                masked: 15,
                total: 64
            })
        ));
    }

    #[test]
    fn gaussian_quantum_potential() {
        let (hbar, m, sigma) = (0.7, 1.3, 1.1);
        let g = WaveGrid1D::new(-20.0, 20.0, 1024, hbar, m, Potential::Free).unwrap();
        let psi = gaussian_packet(&g, sigma, 0.0, 0.0).unwrap();
        let f = polar_decompose(&psi, hbar, NODE_THRESHOLD).unwrap();
        let q = quantum_potential(&f, g.dx(), hbar, m);
        let s2 = sigma * sigma;
        let mut checked = 0;
        for (i, &x) in g.positions().iter().enumerate() {
            if let Some(v) = q[i] {
                let exact =
                    -(hbar * hbar / (2.0 * m)) * (x * x / (4.0 * s2 * s2) - 1.0 / (2.0 * s2));
                assert!((v - exact).abs() < 1e-9, "x={x}: {v} vs {exact}");
                checked += 1;
            }
        }
        assert!(checked > 100);
        assert!(matches!(
            quantum_potential_at(&f, g.dx(), hbar, m, 0),
            Err(Error::MaskedRegion(0))
        ));
        // hbar -> 2 hbar at fixed A scales by 4
        let i = 512;
        let a = quantum_potential_at(&f, g.dx(), hbar, m, i).unwrap();
        let b = quantum_potential_at(&f, g.dx(), 2.0 * hbar, m, i).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn constant_amplitude_has_no_quantum_potential() {
        let f = PolarFields {
            amplitude: vec![0.3; 32],
            phase: vec![0.0; 32],
            node_mask: vec![false; 32],
        };
        assert!(quantum_potential(&f, 0.1, 1.0, 1.0)
            .iter()
            .flatten()
            .all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn ground_state_quantum_potential_is_affine_in_x_squared() {
        let g = harmonic_grid(1024);
        let psi = harmonic_coherent_packet(&g, 0.0, 0.0, 0.0).unwrap();
        let f = polar_decompose(&psi, 1.0, NODE_THRESHOLD).unwrap();
        let q = quantum_potential(&f, g.dx(), 1.0, 1.0);
        let pts: Vec<(f64, f64)> = g
            .positions()
            .iter()
            .zip(&q)
            .filter_map(|(&x, v)| v.map(|v| (x * x, v)))
            .collect();
        // affine through the first and last samples
        let (u0, v0) =
            pts.iter()
                .copied()
                .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        let (u1, v1) = pts
            .iter()
            .copied()
            .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        let slope = (v1 - v0) / (u1 - u0);
        for &(u, v) in &pts {
            assert!((v - (v0 + slope * (u - u0))).abs() < 1e-9);
        }
        assert!((slope + 0.5).abs() < 1e-9);
    }

    fn coherent_report(nodes: usize, dt: f64) -> MadelungReport {
        let g = harmonic_grid(nodes);
        let times: Vec<f64> = (0..5).map(|k| 0.5 + k as f64 * dt).collect();
        madelung_residuals(&harmonic_coherent_trajectory(&g, 2.0, 0.0, &times).unwrap()).unwrap()
    }

    #[test]
    fn exact_packet_residuals_converge() {
        let coarse = coherent_report(1024, 1e-3);
        let fine = coherent_report(2048, 5e-4);
        let (rp, ra) = refinement_ratios(&coarse, &fine);
        assert!(rp >= 3.5 && ra >= 3.5, "{rp} {ra}");
        assert!(coarse.max_phase < 1e-4 && coarse.max_amplitude < 1e-4);
        // both forms are discretized differently; their gap is a truncation error
        assert!(coarse.max_divergence_gap < 1e-5);
        assert!(coarse.max_divergence_gap / fine.max_divergence_gap >= 3.5);
        assert!(coarse.classical_limit_bounded());
    }

    #[test]
    fn split_step_trajectory_satisfies_madelung_system() {
        let mut g = harmonic_grid(1024);
        g.push_slice(0.0, harmonic_coherent_packet(&g, 2.0, 0.0, 0.0).unwrap())
            .unwrap();
        let traj = evolve_schrodinger(&g, 4, 1e-3, 1).unwrap();
        let r = madelung_residuals(&traj).unwrap();
        assert!(
            r.max_phase < 1e-4 && r.max_amplitude < 1e-4,
            "{} {}",
            r.max_phase,
            r.max_amplitude
        );
    }

    #[test]
    fn quantum_share_scales_as_hbar_squared() {
        let g = harmonic_grid(1024);
        let hbars = [1.0, 0.5, 0.25];
        let shares = hbar_scan(&g, &hbars, 1.0, 0.0, 1e-3, 3).unwrap();
        let slope = log_log_slope(&hbars, &shares).unwrap();
        assert!((slope - 2.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn residuals_need_three_slices() {
        let g = harmonic_grid(256);
        let two = harmonic_coherent_trajectory(&g, 1.0, 0.0, &[0.0, 0.1]).unwrap();
        assert!(madelung_residuals(&two).is_err());
    }
}
