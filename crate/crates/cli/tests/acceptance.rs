//! Acceptance suite: one PASS/FAIL line per criterion. Parameters and
//! tolerances are pinned here; the shipped config files are loaded first
//! and the pinned values are applied on top, so editing a config cannot
//! loosen a criterion.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cqreduce_cli::config::Config;
use cqreduce_cli::experiments::{self, NAMES};
use cqreduce_cli::output::ResultRecord;

type Criterion = fn() -> Result<Verdict, String>;

struct Verdict {
    passed: bool,
    detail: String,
}

fn config(file: &str, pins: &[&str]) -> Config {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(file);
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut c = Config::from_toml(&text).unwrap_or_else(|e| panic!("{file}: {e}"));
    for pin in pins {
        c.apply_override(pin)
            .unwrap_or_else(|e| panic!("{pin}: {e}"));
    }
    c
}

fn run(name: &str, c: &Config) -> Result<(ResultRecord, Duration), String> {
    let start = Instant::now();
    let r = experiments::run(name, c).map_err(|e| e.to_string())?;
    Ok((r, start.elapsed()))
}

fn metric(r: &ResultRecord, name: &str) -> f64 {
    r.metrics.get(name).unwrap_or(f64::NAN)
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2}s < {limit_s}s"))
}

fn verdict(checks: &[(bool, String)]) -> Verdict {
    Verdict {
        passed: checks.iter().all(|(ok, _)| *ok),
        detail: checks
            .iter()
            .map(|(ok, d)| if *ok { d.clone() } else { format!("!{d}") })
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn invariance_canonical() -> Result<Verdict, String> {
    let c = config(
        "invariance-canonical.toml",
        &[
            "family.kind=\"canonical\"",
            "family.truncation=64",
            "grid.chart=\"cartesian\"",
            "grid.x_min=-2",
            "grid.x_max=2",
            "grid.p_min=-2",
            "grid.p_max=2",
            "grid.x_steps=9",
            "grid.p_steps=9",
            "grid.jitter=0",
            "time.samples=16",
            "time.periods=1",
        ],
    );
    let (r, t) = run("invariance", &c)?;
    let inf = metric(&r, "max_infidelity");
    Ok(verdict(&[
        (inf < 1e-12, format!("max infidelity {inf:.3e} < 1e-12")),
        within(t, 1.0),
    ]))
}

fn invariance_deformed() -> Result<Verdict, String> {
    let c = config(
        "invariance-deformed.toml",
        &[
            "family.kind=\"deformed\"",
            "family.epsilon=[0,1,0,1]",
            "spectrum.epsilon=[0,1,0,1]",
            "grid.chart=\"polar\"",
            "grid.rho_min=0.5",
            "grid.rho_max=4",
            "grid.angles=8",
            "grid.jitter=0",
            "time.samples=16",
            "time.periods=1",
        ],
    );
    let (r, t) = run("invariance", &c)?;
    let inf = metric(&r, "max_infidelity");
    Ok(verdict(&[
        (inf < 1e-12, format!("max infidelity {inf:.3e} < 1e-12")),
        within(t, 1.0),
    ]))
}

fn constants() -> Result<Verdict, String> {
    let c = config(
        "constants.toml",
        &["constants.levels=[0,1,2,5]", "time.periods=1"],
    );
    let (r, t) = run("constants", &c)?;
    let drift = metric(&r, "max_drift");
    let energy = metric(&r, "energy_drift");
    let wedge = metric(&r, "max_wedge");
    Ok(verdict(&[
        (
            drift < 1e-12,
            format!("max drift of f_E_k {drift:.3e} < 1e-12"),
        ),
        (energy < 1e-12, format!("f_H drift {energy:.3e} < 1e-12")),
        (
            wedge < 1e-8,
            format!("|det(df_H, df_E_k)| {wedge:.3e} < 1e-8"),
        ),
        within(t, 1.0),
    ]))
}

fn remark() -> Result<Verdict, String> {
    let c = config(
        "remark-demo.toml",
        &[
            "family.kind=\"canonical\"",
            "grid.x_min=-2",
            "grid.x_max=2",
            "grid.p_min=-2",
            "grid.p_max=2",
        ],
    );
    let hbar = c.family.hbar;
    let (r, t) = run("remark-demo", &c)?;
    let lie = metric(&r, "max_lie_error");
    let lambda = metric(&r, "max_lambda_error");
    let diff = metric(&r, "max_difference");
    Ok(verdict(&[
        (lie < 1e-8, format!("f_lie vs closed form {lie:.3e} < 1e-8")),
        (
            lambda < 1e-8,
            format!("Lambda vs closed form {lambda:.3e} < 1e-8"),
        ),
        (
            diff > 0.1 / hbar,
            format!("max difference {diff:.4} > {:.4}", 0.1 / hbar),
        ),
        within(t, 1.0),
    ]))
}

fn hamiltonian_structure() -> Result<Verdict, String> {
    let c = config(
        "hamiltonian-fit.toml",
        &["fit.epsilons=[[0,0,1],[0,1,0,1]]"],
    );
    let (r, t) = run("hamiltonian-fit", &c)?;
    let residual = metric(&r, "max_residual");
    let spread = metric(&r, "c_spread");
    let ratio = metric(&r, "c_over_hbar");
    let families = (0..3).all(|i| r.metrics.get(&format!("c_{i}")).is_some());
    let documented = r.notes.iter().any(|n| n.contains("omega_prime"));
    Ok(verdict(&[
        (families, "canonical + quadratic + cubic fitted".into()),
        (
            residual < 1e-6,
            format!("max residual {residual:.3e} < 1e-6"),
        ),
        (
            spread < 1e-6,
            format!("relative spread of c {spread:.3e} < 1e-6"),
        ),
        (
            documented && ratio.is_finite(),
            format!("c/hbar = {ratio:.12} reported with convention note"),
        ),
        within(t, 5.0),
    ]))
}

fn energy_profile() -> Result<Verdict, String> {
    let c = config(
        "energy-profile.toml",
        &[
            "energy.rho_max=6",
            "touchard.max_order=10",
            "touchard.x_max=10",
        ],
    );
    let max_degree = c
        .energy
        .epsilons
        .iter()
        .map(|e| e.len() - 1)
        .max()
        .unwrap_or(0);
    let (r, t) = run("energy-profile", &c)?;
    let energy = metric(&r, "max_energy_error");
    let touchard = metric(&r, "touchard_max_relative_error");
    Ok(verdict(&[
        (
            max_degree == 3,
            format!("epsilon degrees up to {max_degree}"),
        ),
        (
            energy < 1e-10,
            format!("energy vs <z|H|z> {energy:.3e} < 1e-10 abs"),
        ),
        (
            touchard < 1e-12,
            format!("Stirling vs series {touchard:.3e} < 1e-12 rel"),
        ),
        within(t, 1.0),
    ]))
}

fn completeness() -> Result<Verdict, String> {
    let c = config(
        "identity-check.toml",
        &[
            "identity.levels=10",
            "identity.radius=8",
            "identity.radial_nodes=200",
            "identity.angular_nodes=256",
        ],
    );
    let sweep = &c.identity.radius_sweep;
    let spans = sweep.first() == Some(&8.0) && sweep.last() == Some(&10.0);
    let (r, t) = run("identity-check", &c)?;
    let dev = metric(&r, "deviation");
    let sweep_values: Vec<f64> = (0..sweep.len())
        .map(|i| metric(&r, &format!("sweep_deviation_{i}")))
        .collect();
    let monotone = sweep_values.windows(2).all(|w| w[1] < w[0]);
    Ok(verdict(&[
        (dev < 1e-6, format!("deviation at R=8 {dev:.3e} < 1e-6")),
        (
            spans && monotone,
            format!(
                "strictly decreasing over R={sweep:?}: [{}]",
                sci(&sweep_values)
            ),
        ),
        within(t, 10.0),
    ]))
}

fn sci(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.2e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn ccr() -> Result<Verdict, String> {
    let c = config("ccr.toml", &["family.truncation=64"]);
    let (r, t) = run("ccr", &c)?;
    let off = metric(&r, "max_offcorner");
    let corner = metric(&r, "corner_relative_error");
    Ok(verdict(&[
        (off < 1e-13, format!("off-corner {off:.3e} < 1e-13")),
        (
            corner < 1e-10,
            format!("corner vs -i hbar N {corner:.3e} < 1e-10 rel"),
        ),
        within(t, 0.1),
    ]))
}

fn madelung() -> Result<Verdict, String> {
    let c = config(
        "wkb-residuals.toml",
        &[
            "wkb.hbar=1",
            "wkb.mass=1",
            "wkb.omega=1",
            "wkb.nodes=1024",
            "wkb.dt=1e-3",
            "wkb.hbar_scan=[1,0.5,0.25]",
        ],
    );
    let (r, t) = run("wkb-residuals", &c)?;
    let phase = metric(&r, "ratio_phase");
    let amplitude = metric(&r, "ratio_amplitude");
    let slope = metric(&r, "hbar_slope");
    Ok(verdict(&[
        (
            phase >= 3.5,
            format!("phase residual ratio {phase:.3} >= 3.5"),
        ),
        (
            amplitude >= 3.5,
            format!("amplitude residual ratio {amplitude:.3} >= 3.5"),
        ),
        (
            (slope - 2.0).abs() <= 0.05,
            format!("hbar slope {slope:.4} = 2 +- 0.05"),
        ),
        within(t, 60.0),
    ]))
}

fn determinism() -> Result<Verdict, String> {
    let mut c = Config::default();
    c.apply_override("grid.jitter=0.25")
        .map_err(|e| e.to_string())?;
    c.apply_override("seed=7").map_err(|e| e.to_string())?;
    let mut mismatched = Vec::new();
    for name in NAMES {
        let (a, _) = run(name, &c)?;
        let (b, _) = run(name, &c)?;
        let bits = |r: &ResultRecord| {
            r.metrics
                .0
                .iter()
                .map(|(n, v)| (n.clone(), v.to_bits()))
                .collect::<Vec<_>>()
        };
        let same_tables = a.tables.len() == b.tables.len()
            && a.tables
                .iter()
                .zip(&b.tables)
                .all(|(x, y)| x.to_csv().ok() == y.to_csv().ok());
        if bits(&a) != bits(&b) || !same_tables || a.summary_json().is_err() {
            mismatched.push(*name);
        }
    }
    Ok(verdict(&[(
        mismatched.is_empty(),
        format!(
            "{} experiments rerun, mismatched: {mismatched:?}",
            NAMES.len()
        ),
    )]))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("invariance, canonical", invariance_canonical),
        ("invariance, deformed cubic", invariance_deformed),
        ("constants of motion", constants),
        ("bracket counterexample", remark),
        ("hamiltonian structure", hamiltonian_structure),
        ("energy profile", energy_profile),
        ("completeness", completeness),
        ("truncated ccr", ccr),
        ("madelung residuals", madelung),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check().unwrap_or_else(|e| Verdict {
            passed: false,
            detail: format!("error: {e}"),
        });
        if !v.passed {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
