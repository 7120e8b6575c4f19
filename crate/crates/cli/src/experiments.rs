//! Named experiments. Each one reads a [`Config`], runs the library
//! operations and returns metrics, pass/fail checks and tables.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cqreduce_core::coherent::{identity_resolution_check, truncation_tail, FamilySpec, PhasePoint};
use cqreduce_core::dequantize::{expectation, remark_demo, GridSpec};
use cqreduce_core::flow::{
    check_invariance, constants_check, energy_deformed, hamiltonian_fit, polar_grid, time_samples,
    touchard, touchard_series,
};
use cqreduce_core::fock::{commutator, hamiltonian, quadratures, SpectrumSpec};
use cqreduce_core::wkb::{
    harmonic_coherent_trajectory, hbar_scan, log_log_slope, madelung_residuals, refinement_ratios,
    MadelungReport, Potential, WaveGrid1D,
};
use cqreduce_core::Error as CoreError;

use crate::config::Config;
use crate::output::{Cell, Metrics, ResultRecord, Table};

pub const NAMES: &[&str] = &[
    "invariance",
    "constants",
    "hamiltonian-fit",
    "remark-demo",
    "identity-check",
    "touchard-table",
    "energy-profile",
    "ccr",
    "wkb-residuals",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    /// The configuration asks for something outside the valid domain.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidTruncation(_)
            | CoreError::InvalidParameter { .. }
            | CoreError::TruncationInsufficient { .. }
            | CoreError::ExcludedOrigin { .. }
            | CoreError::Envelope(_)
            | CoreError::DegenerateBasis { .. }
            | CoreError::DomainEscape { .. } => RunError::Config(e.to_string()),
            _ => RunError::Internal(e.to_string()),
        }
    }
}

type Run<T> = Result<T, RunError>;

#[derive(Debug, Default)]
struct Outcome {
    metrics: Metrics,
    failures: Vec<String>,
    notes: Vec<String>,
    tables: Vec<Table>,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Runs `name` and packages the result with the config echo and hash.
pub fn run(name: &str, config: &Config) -> Run<ResultRecord> {
    let start = Instant::now();
    let outcome = match name {
        "invariance" => invariance(config),
        "constants" => constants(config),
        "hamiltonian-fit" => fit(config),
        "remark-demo" => remark(config),
        "identity-check" => identity(config),
        "touchard-table" => touchard_table(config),
        "energy-profile" => energy_profile(config),
        "ccr" => ccr(config),
        "wkb-residuals" => wkb_residuals(config),
        other => {
            return Err(RunError::Config(format!(
                "unknown experiment `{other}`; expected one of {}",
                NAMES.join(", ")
            )))
        }
    }?;
    Ok(ResultRecord {
        experiment: name.to_owned(),
        config_hash: config.hash(),
        config: config.canonical(),
        passed: outcome.failures.is_empty(),
        metrics: outcome.metrics,
        failures: outcome.failures,
        notes: outcome.notes,
        tables: outcome.tables,
        duration_s: start.elapsed().as_secs_f64(),
    })
}

fn family(c: &Config) -> Run<FamilySpec> {
    let f = &c.family;
    let n = f.truncation as usize;
    let spec = match f.kind.as_str() {
        "canonical" => FamilySpec::canonical(f.hbar, f.mass, f.omega, n)?,
        _ => FamilySpec::deformed(f.epsilon.clone(), f.hbar, f.mass, f.omega, n)?
            .with_rho_min(f.rho_min)?,
    };
    Ok(spec)
}

fn spectrum(c: &Config) -> Run<SpectrumSpec> {
    Ok(SpectrumSpec::new(
        c.spectrum_epsilon.clone(),
        c.family.hbar,
        c.family.omega,
    )?)
}

fn spacing(min: f64, max: f64, n: u64) -> f64 {
    if n > 1 {
        (max - min) / (n - 1) as f64
    } else {
        0.0
    }
}

/// Grid nodes in the configured chart, each shifted by a seeded uniform
/// fraction of the node spacing when `grid.jitter > 0`.
fn sample_points(c: &Config) -> Vec<PhasePoint> {
    let g = &c.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut shift = |scale: f64| {
        if g.jitter > 0.0 {
            g.jitter * scale * rng.random_range(-1.0..1.0)
        } else {
            0.0
        }
    };
    if g.chart == "polar" {
        let dr = spacing(g.rho_min, g.rho_max, g.rho_steps);
        let dphi = 2.0 * PI / g.angles as f64;
        polar_grid(
            g.rho_min,
            g.rho_max,
            g.rho_steps as usize,
            g.angles as usize,
        )
        .into_iter()
        .map(|(r, f)| PhasePoint::from_polar((r + shift(dr)).max(0.0), f + shift(dphi)))
        .collect()
    } else {
        let dx = spacing(g.x_min, g.x_max, g.x_steps);
        let dp = spacing(g.p_min, g.p_max, g.p_steps);
        cartesian_grid(c)
            .points()
            .into_iter()
            .map(|p| PhasePoint::new(p.x + shift(dx), p.p + shift(dp)))
            .collect()
    }
}

fn cartesian_grid(c: &Config) -> GridSpec {
    let g = &c.grid;
    GridSpec {
        x_min: g.x_min,
        x_max: g.x_max,
        p_min: g.p_min,
        p_max: g.p_max,
        nx: g.x_steps as usize,
        np: g.p_steps as usize,
    }
}

fn times(c: &Config) -> Vec<f64> {
    time_samples(c.family.omega, c.time_samples as usize, c.time_periods)
}

fn invariance(c: &Config) -> Run<Outcome> {
    let fam = family(c)?;
    let spec = spectrum(c)?;
    let points = sample_points(c);
    let ts = times(c);
    let report = check_invariance(&fam, &spec, &points, &ts)?;
    let mut out = Outcome::default();
    out.metrics.push("max_infidelity", report.max_infidelity);
    out.metrics.push("points", points.len() as f64);
    out.metrics.push("times", ts.len() as f64);
    out.metrics.push(
        "tail_bound",
        points
            .iter()
            .map(|p| truncation_tail(p.rho(), fam.truncation()))
            .fold(0.0, f64::max),
    );
    let tol = c.tolerance.invariance;
    out.check(report.max_infidelity < tol, || {
        format!(
            "max infidelity {:e} not below {tol:e}",
            report.max_infidelity
        )
    });
    let mut table = Table::new("invariance", &["x", "p", "rho", "phi", "t", "infidelity"]);
    for (i, pt) in points.iter().enumerate() {
        for (k, &t) in ts.iter().enumerate() {
            let (rho, phi) = pt.polar();
            table.push(vec![
                pt.x.into(),
                pt.p.into(),
                rho.into(),
                phi.into(),
                t.into(),
                report.infidelity[i * ts.len() + k].into(),
            ]);
        }
    }
    out.tables.push(table);
    Ok(out)
}

fn constants(c: &Config) -> Run<Outcome> {
    let fam = family(c)?;
    let spec = spectrum(c)?;
    let points = sample_points(c);
    let levels: Vec<usize> = c.constants_levels.iter().map(|&k| k as usize).collect();
    let report = constants_check(&fam, &spec, &levels, &points, &times(c))?;
    let mut out = Outcome::default();
    out.metrics.push("max_drift", report.max_drift);
    out.metrics.push("energy_drift", report.energy_drift);
    out.metrics.push("max_wedge", report.max_wedge);
    let mut table = Table::new(
        "constants",
        &["level", "projector_drift", "spectral_drift", "wedge"],
    );
    for l in &report.levels {
        out.metrics
            .push(format!("projector_drift_{}", l.level), l.projector_drift);
        out.metrics.push(format!("wedge_{}", l.level), l.wedge);
        table.push(vec![
            l.level.into(),
            l.projector_drift.into(),
            l.spectral_drift.into(),
            l.wedge.into(),
        ]);
    }
    let (drift_tol, wedge_tol) = (c.tolerance.drift, c.tolerance.wedge);
    out.check(report.max_drift < drift_tol, || {
        format!("drift {:e} not below {drift_tol:e}", report.max_drift)
    });
    out.check(report.max_wedge < wedge_tol, || {
        format!("wedge {:e} not below {wedge_tol:e}", report.max_wedge)
    });
    out.notes.push(
        "projector_drift tracks f for E_k; spectral_drift tracks f for hbar*omega*k*E_k".into(),
    );
    out.tables.push(table);
    Ok(out)
}

fn epsilon_label(eps: &[f64]) -> String {
    eps.iter()
        .map(|e| format!("{e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fit(c: &Config) -> Run<Outcome> {
    let f = &c.family;
    let n = f.truncation as usize;
    let grid = polar_grid(
        c.grid.rho_min,
        c.grid.rho_max,
        c.grid.rho_steps as usize,
        c.grid.angles as usize,
    );
    let mut cases = vec![(
        "canonical".to_owned(),
        FamilySpec::canonical(f.hbar, f.mass, f.omega, n)?,
        SpectrumSpec::harmonic(f.hbar, f.omega)?,
    )];
    for eps in &c.fit_epsilons {
        cases.push((
            format!("deformed {}", epsilon_label(eps)),
            FamilySpec::deformed(eps.clone(), f.hbar, f.mass, f.omega, n)?
                .with_rho_min(f.rho_min)?,
            SpectrumSpec::new(eps.clone(), f.hbar, f.omega)?,
        ));
    }
    let mut out = Outcome::default();
    let mut summary = Table::new("fit", &["family", "c", "c_over_hbar", "residual"]);
    let mut samples = Table::new(
        "fit_samples",
        &[
            "family",
            "rho",
            "phi",
            "gamma_rho",
            "gamma_phi",
            "contraction_rho",
            "contraction_phi",
            "dfh_rho",
            "dfh_phi",
            "residual",
        ],
    );
    let mut constants = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, (label, fam, spec)) in cases.iter().enumerate() {
        let r = hamiltonian_fit(fam, spec, &grid)?;
        out.metrics.push(format!("c_{i}"), r.c);
        out.metrics.push(format!("residual_{i}"), r.residual);
        summary.push(vec![
            label.as_str().into(),
            r.c.into(),
            r.c_over_hbar.into(),
            r.residual.into(),
        ]);
        for s in &r.samples {
            samples.push(vec![
                label.as_str().into(),
                s.rho.into(),
                s.phi.into(),
                s.generator[0].into(),
                s.generator[1].into(),
                s.contraction[0].into(),
                s.contraction[1].into(),
                s.energy_differential[0].into(),
                s.energy_differential[1].into(),
                s.residual.into(),
            ]);
        }
        worst = worst.max(r.residual);
        constants.push(r.c);
    }
    let spread = constants
        .iter()
        .map(|v| (v - constants[0]).abs() / constants[0].abs())
        .fold(0.0, f64::max);
    out.metrics.push("max_residual", worst);
    out.metrics.push("c_spread", spread);
    out.metrics.push("c_over_hbar", constants[0] / f.hbar);
    let (rt, ct) = (c.tolerance.fit_residual, c.tolerance.fit_constant);
    out.check(worst < rt, || {
        format!("fit residual {worst:e} not below {rt:e}")
    });
    out.check(spread < ct, || {
        format!("relative spread of c {spread:e} not below {ct:e}")
    });
    out.notes.push(
        "chart (rho, phi); omega_prime = 2 Im h, so the canonical family has omega_prime = d rho ^ d phi \
         = 2 dx ^ dp and c multiplies that form"
            .into(),
    );
    out.tables.push(summary);
    out.tables.push(samples);
    Ok(out)
}

fn remark(c: &Config) -> Run<Outcome> {
    if c.family.kind != "canonical" {
        return Err(RunError::Config(
            "remark-demo needs family.kind = \"canonical\"".into(),
        ));
    }
    let fam = family(c)?;
    let report = remark_demo(&fam, &cartesian_grid(c))?;
    let mut out = Outcome::default();
    let gap = c.tolerance.remark_gap / fam.hbar();
    out.metrics.push("max_lie_error", report.max_lie_error);
    out.metrics
        .push("max_lambda_error", report.max_lambda_error);
    out.metrics.push("max_difference", report.max_difference);
    out.metrics.push("gap_threshold", gap);
    out.metrics
        .push("lambda_xp_deviation", report.lambda_xp_deviation);
    let tol = c.tolerance.remark_match;
    out.check(report.max_lie_error < tol, || {
        format!(
            "operator bracket off its closed form by {:e}",
            report.max_lie_error
        )
    });
    out.check(report.max_lambda_error < tol, || {
        format!(
            "tensor bracket off its closed form by {:e}",
            report.max_lambda_error
        )
    });
    out.check(report.max_difference > gap, || {
        format!(
            "brackets differ by at most {:e}, not above {gap:e}",
            report.max_difference
        )
    });
    let mut table = Table::new(
        "remark",
        &[
            "x",
            "p",
            "f_a",
            "f_b",
            "f_lie",
            "f_lie_closed",
            "lambda_bracket",
            "lambda_closed",
            "difference",
        ],
    );
    for r in &report.rows {
        table.push(vec![
            r.x.into(),
            r.p.into(),
            r.f_a.into(),
            r.f_b.into(),
            r.f_lie.into(),
            r.f_lie_closed.into(),
            r.lambda_bracket.into(),
            r.lambda_closed.into(),
            r.difference.into(),
        ]);
    }
    out.tables.push(table);
    Ok(out)
}

fn identity(c: &Config) -> Run<Outcome> {
    let id = &c.identity;
    let (levels, radial, angular) = (
        id.levels as usize,
        id.radial_nodes as usize,
        id.angular_nodes as usize,
    );
    let res = identity_resolution_check(levels, id.radius, radial, angular)?;
    let mut out = Outcome::default();
    out.metrics.push("deviation", res.deviation);
    out.metrics.push("refined_deviation", res.refined_deviation);
    out.metrics
        .push("max_diagonal_deviation", res.max_diagonal_deviation);
    out.metrics.push("max_offdiagonal", res.max_offdiagonal);
    out.metrics
        .push("under_resolved", if res.under_resolved { 1.0 } else { 0.0 });
    let tol = c.tolerance.identity;
    out.check(res.deviation < tol, || {
        format!("deviation {:e} not below {tol:e}", res.deviation)
    });
    out.check(!res.under_resolved, || {
        "doubling the nodes did not reduce the deviation".into()
    });

    let mut table = Table::new(
        "identity_sweep",
        &["radius", "deviation", "double_deviation"],
    );
    let mut sweep = Vec::new();
    for &r in &id.radius_sweep {
        let precise =
            cqreduce_core::coherent::precise::identity_deviation(levels, r, radial, angular)?;
        let double = identity_resolution_check(levels, r, radial, angular)?.deviation;
        table.push(vec![r.into(), precise.into(), double.into()]);
        sweep.push((r, precise));
    }
    let monotone = sweep.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1);
    for (i, (_, d)) in sweep.iter().enumerate() {
        out.metrics.push(format!("sweep_deviation_{i}"), *d);
    }
    out.metrics
        .push("sweep_monotone", if monotone { 1.0 } else { 0.0 });
    out.check(monotone, || {
        format!("deviation does not shrink monotonically along the radius sweep: {sweep:?}")
    });
    out.notes.push(format!(
        "sweep deviations use {}-bit arithmetic; double precision bottoms out near 1e-15",
        cqreduce_core::coherent::precise::BITS
    ));
    out.tables.push(table);
    Ok(out)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Stirling-form values on the configured grid, in wide form (`x, T_0, ..`),
/// plus the largest relative gap to the series form.
fn touchard_sweep(c: &Config) -> Run<(f64, Table, Table)> {
    let t = &c.touchard;
    let orders = 0..=t.max_order as usize;
    let mut columns = vec!["x".to_owned()];
    columns.extend(orders.clone().map(|j| format!("T_{j}")));
    let mut values = Table::with_columns("touchard", columns);
    let mut check = Table::new(
        "touchard_check",
        &["j", "x", "stirling", "series", "relative_error"],
    );
    let mut worst: f64 = 0.0;
    for i in 0..t.x_steps {
        let x = if t.x_steps > 1 {
            t.x_max * i as f64 / (t.x_steps - 1) as f64
        } else {
            t.x_max
        };
        let mut row = vec![Cell::Num(x)];
        for j in orders.clone() {
            let a = touchard(j, x)?;
            let b = touchard_series(j, x)?;
            let rel = relative_gap(a, b);
            worst = worst.max(rel);
            row.push(a.into());
            check.push(vec![j.into(), x.into(), a.into(), b.into(), rel.into()]);
        }
        values.push(row);
    }
    Ok((worst, values, check))
}

fn touchard_table(c: &Config) -> Run<Outcome> {
    let (worst, values, check) = touchard_sweep(c)?;
    let mut out = Outcome::default();
    out.metrics.push("max_relative_error", worst);
    let tol = c.tolerance.touchard;
    out.check(worst < tol, || {
        format!("Stirling and series forms differ by {worst:e}")
    });
    out.tables.push(values);
    out.tables.push(check);
    Ok(out)
}

fn energy_profile(c: &Config) -> Run<Outcome> {
    let f = &c.family;
    let n = f.truncation as usize;
    let e = &c.energy;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "energy_profile",
        &[
            "epsilon",
            "rho",
            "energy_touchard",
            "energy_matrix",
            "error",
        ],
    );
    let mut worst: f64 = 0.0;
    for eps in &e.epsilons {
        let spec = SpectrumSpec::new(eps.clone(), f.hbar, f.omega)?;
        let fam = FamilySpec::deformed(eps.clone(), f.hbar, f.mass, f.omega, n)?;
        let h = hamiltonian(&spec, n)?;
        for k in 1..=e.rho_steps {
            let rho = e.rho_max * k as f64 / e.rho_steps as f64;
            let closed = energy_deformed(rho, &spec)?;
            let matrix = expectation(&h, &fam, PhasePoint::from_polar(rho, 0.0))?.re;
            let err = (closed - matrix).abs();
            worst = worst.max(err);
            table.push(vec![
                epsilon_label(eps).into(),
                rho.into(),
                closed.into(),
                matrix.into(),
                err.into(),
            ]);
        }
    }
    let (touchard_worst, _, touchard_check) = touchard_sweep(c)?;
    out.metrics.push("max_energy_error", worst);
    out.metrics
        .push("touchard_max_relative_error", touchard_worst);
    out.metrics
        .push("tail_bound", truncation_tail(e.rho_max, n));
    let (et, tt) = (c.tolerance.energy, c.tolerance.touchard);
    out.check(worst < et, || {
        format!("energy profile off the matrix expectation by {worst:e}")
    });
    out.check(touchard_worst < tt, || {
        format!("Stirling and series forms differ by {touchard_worst:e}")
    });
    out.tables.push(table);
    out.tables.push(touchard_check);
    Ok(out)
}

fn ccr(c: &Config) -> Run<Outcome> {
    let f = &c.family;
    let n = f.truncation as usize;
    let (x, p) = quadratures(n, f.hbar, f.mass, f.omega)?;
    let bracket = commutator(&x, &p)?;
    let mut worst: f64 = 0.0;
    let mut table = Table::new("ccr_diagonal", &["n", "re", "im"]);
    for ((i, j), v) in bracket.entries().indexed_iter() {
        if i == j {
            table.push(vec![i.into(), v.re.into(), v.im.into()]);
        }
        if i == n && j == n {
            continue;
        }
        let target = if i == j {
            C64::new(0.0, f.hbar)
        } else {
            C64::new(0.0, 0.0)
        };
        worst = worst.max((v - target).norm());
    }
    let corner = bracket.entry(n, n);
    let expected = C64::new(0.0, -f.hbar * n as f64);
    let corner_error = (corner - expected).norm() / expected.norm();
    let mut out = Outcome::default();
    out.metrics.push("max_offcorner", worst);
    out.metrics.push("corner_re", corner.re);
    out.metrics.push("corner_im", corner.im);
    out.metrics.push("corner_relative_error", corner_error);
    let (t, tc) = (c.tolerance.ccr, c.tolerance.ccr_corner);
    out.check(worst < t, || {
        format!("[X,P] - i hbar off the corner reaches {worst:e}")
    });
    out.check(corner_error < tc, || {
        format!("corner off -i hbar N by {corner_error:e} relative")
    });
    out.tables.push(table);
    Ok(out)
}

fn wkb_grid(c: &Config, nodes: u64) -> Run<WaveGrid1D> {
    let w = &c.wkb;
    Ok(WaveGrid1D::new(
        w.x_min,
        w.x_max,
        nodes as usize,
        w.hbar,
        w.mass,
        Potential::Harmonic { omega: w.omega },
    )?)
}

fn exact_report(c: &Config, nodes: u64, dt: f64) -> Run<MadelungReport> {
    let w = &c.wkb;
    let ts: Vec<f64> = (0..w.slices).map(|k| w.t0 + k as f64 * dt).collect();
    let traj = harmonic_coherent_trajectory(&wkb_grid(c, nodes)?, w.x0, w.p0, &ts)?;
    Ok(madelung_residuals(&traj)?)
}

fn wkb_residuals(c: &Config) -> Run<Outcome> {
    let w = &c.wkb;
    let coarse = exact_report(c, w.nodes, w.dt)?;
    let fine = exact_report(c, 2 * w.nodes, 0.5 * w.dt)?;
    let (ratio_phase, ratio_amplitude) = refinement_ratios(&coarse, &fine);
    let shares = hbar_scan(&wkb_grid(c, w.nodes)?, &w.hbar_scan, w.sigma, w.x0, w.dt, 3)?;
    let slope = log_log_slope(&w.hbar_scan, &shares)?;
    let mut out = Outcome::default();
    for (label, r) in [("coarse", &coarse), ("fine", &fine)] {
        out.metrics.push(format!("max_phase_{label}"), r.max_phase);
        out.metrics
            .push(format!("max_amplitude_{label}"), r.max_amplitude);
    }
    out.metrics.push("ratio_phase", ratio_phase);
    out.metrics.push("ratio_amplitude", ratio_amplitude);
    out.metrics
        .push("divergence_gap", coarse.max_divergence_gap);
    out.metrics.push("max_quantum", coarse.max_quantum);
    out.metrics
        .push("max_classical_residual", coarse.max_classical_residual);
    out.metrics.push(
        "classical_limit_bounded",
        if coarse.classical_limit_bounded() {
            1.0
        } else {
            0.0
        },
    );
    for (i, s) in shares.iter().enumerate() {
        out.metrics.push(format!("quantum_share_{i}"), *s);
    }
    out.metrics.push("hbar_slope", slope);
    let (rt, st) = (c.tolerance.refinement_ratio, c.tolerance.slope);
    out.check(ratio_phase >= rt, || {
        format!("phase residual ratio {ratio_phase} below {rt}")
    });
    out.check(ratio_amplitude >= rt, || {
        format!("amplitude residual ratio {ratio_amplitude} below {rt}")
    });
    out.check((slope - 2.0).abs() <= st, || {
        format!("hbar slope {slope} not within {st} of 2")
    });
    out.check(coarse.classical_limit_bounded(), || {
        "classical balance exceeds the quantum term plus the residual".into()
    });
    let mut slices = Table::new(
        "wkb_slices",
        &[
            "grid",
            "time",
            "evaluated_nodes",
            "max_phase",
            "l2_phase",
            "max_amplitude",
            "l2_amplitude",
            "divergence_gap",
            "max_quantum",
            "max_classical_residual",
        ],
    );
    for (label, r) in [("coarse", &coarse), ("fine", &fine)] {
        for s in &r.slices {
            slices.push(vec![
                label.into(),
                s.time.into(),
                s.evaluated_nodes.into(),
                s.max_phase.into(),
                s.l2_phase.into(),
                s.max_amplitude.into(),
                s.l2_amplitude.into(),
                s.divergence_gap.into(),
                s.max_quantum.into(),
                s.max_classical_residual.into(),
            ]);
        }
    }
    let mut scan = Table::new("hbar_scan", &["hbar", "quantum_share"]);
    for (h, s) in w.hbar_scan.iter().zip(&shares) {
        scan.push(vec![Cell::Num(*h), Cell::Num(*s)]);
    }
    out.tables.push(slices);
    out.tables.push(scan);
    Ok(out)
}
