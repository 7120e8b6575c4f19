//! The dequantizer `A -> f_A(m) = <m|A|m>` and the tensors it induces on the
//! phase plane.
//!
//! `tensor_assemble` turns the Jordan and Lie brackets of two basis operators
//! into coordinate components of the symmetric tensor `G` and the Poisson
//! tensor `Lambda` by expanding arbitrary covectors in the basis
//! differentials. `pullback_hermitean` pulls the projective Hermitean tensor
//! back along the immersion by finite differences of the state vector.
//!
//! Component conventions: a bivector or two-form is stored as its matrix of
//! values on coordinate basis pairs, e.g. `lambda[0][1] = Lambda(dx, dp)`.
//! The pulled-back two-form is normalized so that the Hermitean tensor reads
//! `h = g + (i/2) omega_prime`, i.e. `omega_prime = 2 Im h`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::coherent::{truncation_tail, FamilyKind, FamilySpec, PhasePoint};
use crate::error::{positive, Error, Result};
use crate::fock::{commutator, projector, quadratures, MatrixOperator, TruncatedVector};

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Default bound on the Richardson error estimate of a derivative.
pub const DEFAULT_ACCURACY: f64 = 1e-6;

/// Minimum `|det|` of the basis differential matrix.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// `f_A(m) = <m|A|m>` on the (truncated) family state.
pub fn expectation(op: &MatrixOperator, family: &FamilySpec, point: PhasePoint) -> Result<C64> {
    if op.truncation() != family.truncation() {
        return Err(Error::ShapeMismatch {
            expected: family.truncation() + 1,
            found: op.dim(),
        });
    }
    let state = family.state(point)?;
    op.expectation(&state)
}

/// Jordan product `(AB + BA) / 2`.
pub fn jordan(a: &MatrixOperator, b: &MatrixOperator) -> Result<MatrixOperator> {
    let sum = a.try_mul(b)?.try_add(&b.try_mul(a)?)?;
    let out = sum.scale(C64::new(0.5, 0.0));
    let hermitian = a.is_declared_hermitian() && b.is_declared_hermitian();
    out.with_hermitian_flag(hermitian)
}

/// Lie product `-(i / hbar) [A, B]`.
pub fn lie(a: &MatrixOperator, b: &MatrixOperator, hbar: f64) -> Result<MatrixOperator> {
    positive("hbar", hbar)?;
    let out = commutator(a, b)?.scale(C64::new(0.0, -1.0 / hbar));
    let hermitian = a.is_declared_hermitian() && b.is_declared_hermitian();
    out.with_hermitian_flag(hermitian)
}

/// `hbar*omega * k * E_k`, the level-`k` term of the spectral decomposition
/// of `hbar*omega * a^dagger a`.
pub fn spectral_term(k: usize, hbar_omega: f64, truncation: usize) -> Result<MatrixOperator> {
    Ok(projector(k, truncation)?.scale(C64::new(hbar_omega * k as f64, 0.0)))
}

/// Rectangular grid over the `(x, p)` plane, `nx * np` nodes, x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, nodes: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nx: nodes,
            np: nodes,
        }
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (min + max)];
        }
        (0..n)
            .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn points(&self) -> Vec<PhasePoint> {
        let xs = Self::axis(self.x_min, self.x_max, self.nx);
        let ps = Self::axis(self.p_min, self.p_max, self.np);
        xs.iter()
            .flat_map(|&x| ps.iter().map(move |&p| PhasePoint::new(x, p)))
            .collect()
    }

    pub fn max_rho(&self) -> f64 {
        let x = self.x_min.abs().max(self.x_max.abs());
        let p = self.p_min.abs().max(self.p_max.abs());
        x * x + p * p
    }
}

/// Sampled dequantized symbol.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub points: Vec<PhasePoint>,
    pub values: Vec<C64>,
    pub label: String,
    pub family_kind: FamilyKind,
    /// Poisson tail at the largest grid radius.
    pub tail_bound: f64,
}

impl ScalarField {
    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

pub fn scalar_field(
    op: &MatrixOperator,
    family: &FamilySpec,
    grid: &GridSpec,
    label: impl Into<String>,
) -> Result<ScalarField> {
    let points = grid.points();
    let values = points
        .par_iter()
        .map(|&pt| expectation(op, family, pt))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalarField {
        grid: grid.clone(),
        points,
        values,
        label: label.into(),
        family_kind: family.kind(),
        tail_bound: truncation_tail(grid.max_rho(), family.truncation()),
    })
}

/// A derivative pair with its Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covector {
    pub components: [f64; 2],
    pub error: f64,
}

fn check_step(at: f64, step: f64) -> Result<()> {
    if !(step.is_finite() && step > 0.0) || at + 0.5 * step == at || at - 0.5 * step == at {
        Err(Error::Accuracy(format!("step {step:e} underflows at {at}")))
    } else {
        Ok(())
    }
}

/// Central differences at `step` and `step/2`, combined by one Richardson
/// extrapolation. The error estimate is the gap to the same extrapolation
/// taken from `step/2` and `step/4`.
pub fn differential<F>(f: F, at: [f64; 2], step: f64, tolerance: f64) -> Result<Covector>
where
    F: Fn([f64; 2]) -> Result<f64>,
{
    let mut components = [0.0; 2];
    let mut error = 0.0f64;
    for axis in 0..2 {
        check_step(at[axis], step)?;
        let central = |h: f64| -> Result<f64> {
            let mut plus = at;
            let mut minus = at;
            plus[axis] += h;
            minus[axis] -= h;
            Ok((f(plus)? - f(minus)?) / (2.0 * h))
        };
        let d1 = central(step)?;
        let d2 = central(0.5 * step)?;
        let d4 = central(0.25 * step)?;
        let extrapolated = (4.0 * d2 - d1) / 3.0;
        let refined = (4.0 * d4 - d2) / 3.0;
        components[axis] = extrapolated;
        error = error.max((extrapolated - refined).abs());
    }
    let scale = components[0].abs().max(components[1].abs()).max(1.0);
    if error > tolerance * scale {
        return Err(Error::Accuracy(format!(
            "error estimate {error:e} exceeds {:e}",
            tolerance * scale
        )));
    }
    Ok(Covector { components, error })
}

/// Differential of `f_A` in the cartesian chart.
pub fn symbol_differential(
    op: &MatrixOperator,
    family: &FamilySpec,
    point: PhasePoint,
) -> Result<Covector> {
    differential(
        |c| Ok(expectation(op, family, PhasePoint::new(c[0], c[1]))?.re),
        [point.x, point.p],
        DEFAULT_STEP,
        DEFAULT_ACCURACY,
    )
}

pub type Matrix2 = [[f64; 2]; 2];

fn det2(m: &Matrix2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inverse2(m: &Matrix2) -> Matrix2 {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

fn transpose2(m: &Matrix2) -> Matrix2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn matmul2(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn frobenius(m: &Matrix2) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// `theta1^T M theta2`.
pub fn contract(m: &Matrix2, theta1: [f64; 2], theta2: [f64; 2]) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            acc += theta1[i] * m[i][j] * theta2[j];
        }
    }
    acc
}

/// `G` and `Lambda` in the `(dx, dp)` covector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledTensors {
    pub point: PhasePoint,
    pub g: Matrix2,
    pub lambda: Matrix2,
    /// Rows are `df_{A_1}` and `df_{A_2}`.
    pub basis_differentials: Matrix2,
    /// `(f_{A_j . A_k})`.
    pub jordan_values: Matrix2,
    /// `(f_{[[A_j, A_k]]})`.
    pub lie_values: Matrix2,
    pub determinant: f64,
    /// Frobenius condition number of the basis differential matrix.
    pub condition: f64,
}

impl AssembledTensors {
    pub fn g_of(&self, theta1: [f64; 2], theta2: [f64; 2]) -> f64 {
        contract(&self.g, theta1, theta2)
    }

    pub fn lambda_of(&self, theta1: [f64; 2], theta2: [f64; 2]) -> f64 {
        contract(&self.lambda, theta1, theta2)
    }
}

/// Builds `G` and `Lambda` from two hermitian basis operators whose symbol
/// differentials span the cotangent plane at `point`.
///
/// With `D` the matrix of basis differentials, a covector `theta` expands as
/// `theta = D^T alpha`, so the components are `D^{-1} B D^{-T}` for the
/// bracket matrix `B`.
pub fn tensor_assemble(
    basis: &[MatrixOperator],
    family: &FamilySpec,
    point: PhasePoint,
) -> Result<AssembledTensors> {
    if basis.len() != 2 {
        return Err(Error::InvalidParameter {
            name: "basis",
            reason: format!("need exactly 2 operators, got {}", basis.len()),
        });
    }
    if let Some(op) = basis.iter().find(|op| !op.is_declared_hermitian()) {
        return Err(Error::InvalidParameter {
            name: "basis",
            reason: format!(
                "operator not hermitian (defect {:e})",
                op.hermitian_defect()
            ),
        });
    }
    let mut d = [[0.0; 2]; 2];
    for (row, op) in d.iter_mut().zip(basis) {
        *row = symbol_differential(op, family, point)?.components;
    }
    let determinant = det2(&d);
    if determinant.abs() < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateBasis {
            det: determinant.abs(),
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let mut jordan_values = [[0.0; 2]; 2];
    let mut lie_values = [[0.0; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            jordan_values[j][k] = expectation(&jordan(&basis[j], &basis[k])?, family, point)?.re;
            lie_values[j][k] =
                expectation(&lie(&basis[j], &basis[k], family.hbar())?, family, point)?.re;
        }
    }
    let inv = inverse2(&d);
    let inv_t = transpose2(&inv);
    let g = matmul2(&matmul2(&inv, &jordan_values), &inv_t);
    let lambda = matmul2(&matmul2(&inv, &lie_values), &inv_t);
    Ok(AssembledTensors {
        point,
        g: [
            [g[0][0], 0.5 * (g[0][1] + g[1][0])],
            [0.5 * (g[0][1] + g[1][0]), g[1][1]],
        ],
        lambda: [
            [0.0, 0.5 * (lambda[0][1] - lambda[1][0])],
            [-0.5 * (lambda[0][1] - lambda[1][0]), 0.0],
        ],
        basis_differentials: d,
        jordan_values,
        lie_values,
        determinant,
        condition: frobenius(&d) * frobenius(&inv),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// `(x, p)`
    Cartesian,
    /// `(rho, phi)` with `rho = x^2 + p^2`
    Polar,
}

/// Pulled-back metric and two-form at a point, in the stated chart.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSample {
    pub point: PhasePoint,
    pub chart: Chart,
    pub g: Matrix2,
    pub omega_prime: Matrix2,
    /// Richardson error estimate propagated to the tensor components.
    pub error: f64,
}

impl TensorSample {
    pub fn omega_of(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        contract(&self.omega_prime, u, v)
    }
}

/// Jacobian `d(rho, phi) / d(x, p)`.
fn polar_jacobian(point: PhasePoint) -> Matrix2 {
    let rho = point.rho();
    [
        [2.0 * point.x, 2.0 * point.p],
        [-point.p / rho, point.x / rho],
    ]
}

type StateEval<'a> = Box<dyn Fn(f64, f64) -> Result<TruncatedVector> + 'a>;

fn vector_derivative(
    eval: &StateEval<'_>,
    axis: usize,
    step: f64,
) -> Result<(ndarray::Array1<C64>, f64)> {
    let central = |h: f64| -> Result<ndarray::Array1<C64>> {
        let (plus, minus) = if axis == 0 {
            (eval(h, 0.0)?, eval(-h, 0.0)?)
        } else {
            (eval(0.0, h)?, eval(0.0, -h)?)
        };
        Ok((plus.amplitudes() - minus.amplitudes()) / C64::new(2.0 * h, 0.0))
    };
    let richardson = |coarse: &ndarray::Array1<C64>, fine: &ndarray::Array1<C64>| {
        (fine * C64::new(4.0, 0.0) - coarse) / C64::new(3.0, 0.0)
    };
    let d1 = central(step)?;
    let d2 = central(0.5 * step)?;
    let d4 = central(0.25 * step)?;
    let extrapolated = richardson(&d1, &d2);
    let refined = richardson(&d2, &d4);
    let error = extrapolated
        .iter()
        .zip(refined.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok((extrapolated, error))
}

fn inner(a: &ndarray::Array1<C64>, b: &ndarray::Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Pullback of `<dpsi|dpsi>/<psi|psi> - <dpsi|psi><psi|dpsi>/<psi|psi>^2`
/// along the family immersion.
///
/// The canonical family is differentiated directly in either chart. Deformed
/// families are differentiated in the polar chart, with the angular step
/// shrunk by the largest significant level phase; a cartesian request is
/// served by transforming the polar result.
pub fn pullback_hermitean(
    family: &FamilySpec,
    point: PhasePoint,
    chart: Chart,
    step: f64,
) -> Result<TensorSample> {
    match (family.kind(), chart) {
        (FamilyKind::Deformed, Chart::Cartesian) => {
            let polar = pullback_hermitean(family, point, Chart::Polar, step)?;
            let j = polar_jacobian(point);
            let jt = transpose2(&j);
            let g = matmul2(&matmul2(&jt, &polar.g), &j);
            let w = matmul2(&matmul2(&jt, &polar.omega_prime), &j);
            let scale = frobenius(&j).powi(2);
            Ok(TensorSample {
                point,
                chart,
                g,
                omega_prime: w,
                error: polar.error * scale,
            })
        }
        _ => pullback_native(family, point, chart, step),
    }
}

fn pullback_native(
    family: &FamilySpec,
    point: PhasePoint,
    chart: Chart,
    step: f64,
) -> Result<TensorSample> {
    positive("step", step)?;
    let base = family.state(point)?;
    let (eval, steps): (StateEval<'_>, [f64; 2]) = match chart {
        Chart::Cartesian => {
            check_step(point.x, step)?;
            check_step(point.p, step)?;
            (
                Box::new(move |dx, dp| family.state(PhasePoint::new(point.x + dx, point.p + dp))),
                [step, step],
            )
        }
        Chart::Polar => {
            let (rho, phi) = point.polar();
            if rho - step <= family.rho_min().max(0.0) {
                return Err(Error::Accuracy(format!(
                    "radial stencil at rho = {rho} crosses rho_min"
                )));
            }
            // rms phase rate under the level distribution
            let weights = base.amplitudes().iter().map(|c| c.norm_sqr());
            let second_moment: f64 = weights
                .enumerate()
                .map(|(n, w)| w * family.level_phase(n).powi(2))
                .sum::<f64>()
                / base.norm_sqr();
            let theta_scale = second_moment.sqrt().max(1.0);
            (
                Box::new(move |dr, dphi| family.state_polar_offset(rho + dr, phi, dphi)),
                [step, step / theta_scale],
            )
        }
    };
    let (d0, e0) = vector_derivative(&eval, 0, steps[0])?;
    let (d1, e1) = vector_derivative(&eval, 1, steps[1])?;
    let psi = base.amplitudes();
    let norm = inner(psi, psi).re;
    let partials = [&d0, &d1];
    let mut h = [[C64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            h[j][k] = inner(partials[j], partials[k]) / norm
                - inner(partials[j], psi) * inner(psi, partials[k]) / (norm * norm);
        }
    }
    let g = [
        [h[0][0].re, 0.5 * (h[0][1].re + h[1][0].re)],
        [0.5 * (h[0][1].re + h[1][0].re), h[1][1].re],
    ];
    let w01 = h[0][1].im - h[1][0].im;
    let omega_prime = [[0.0, w01], [-w01, 0.0]];
    let dnorm = |d: &ndarray::Array1<C64>| inner(d, d).re.sqrt();
    let error = 2.0 * dnorm(&d0).max(dnorm(&d1)) * e0.max(e1) / norm;
    let scale = h.iter().flatten().map(|c| c.norm()).fold(1.0, f64::max);
    if error > DEFAULT_ACCURACY * scale {
        return Err(Error::Accuracy(format!(
            "pullback error estimate {error:e} exceeds {:e}",
            DEFAULT_ACCURACY * scale
        )));
    }
    Ok(TensorSample {
        point,
        chart,
        g,
        omega_prime,
        error,
    })
}

/// `A = (|1><0| + |0><1|)/2` and `B = (i/2)(|1><0| - |0><1|)`.
pub fn remark_operators(truncation: usize) -> Result<(MatrixOperator, MatrixOperator)> {
    let half = C64::new(0.5, 0.0);
    let ihalf = C64::new(0.0, 0.5);
    let a = MatrixOperator::from_triples(truncation, &[(1, 0, half), (0, 1, half)])?;
    let b = MatrixOperator::from_triples(truncation, &[(1, 0, ihalf), (0, 1, -ihalf)])?;
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemarkRow {
    pub x: f64,
    pub p: f64,
    pub f_a: f64,
    pub f_b: f64,
    /// `f_{[[A, B]]}`
    pub f_lie: f64,
    /// `Lambda(df_A, df_B)`
    pub lambda_bracket: f64,
    pub difference: f64,
    /// `e^{-rho}(1 - rho) / (2 hbar)`
    pub f_lie_closed: f64,
    /// `e^{-2 rho}(1 - 2 rho) / (2 hbar)`
    pub lambda_closed: f64,
}

#[derive(Debug, Clone)]
pub struct RemarkReport {
    pub hbar: f64,
    pub rows: Vec<RemarkRow>,
    pub max_lie_error: f64,
    pub max_lambda_error: f64,
    pub max_difference: f64,
    /// `Lambda(dx, dp)` from the `(X, P)` basis, largest deviation from `1/(2 hbar)` over the grid.
    pub lambda_xp_deviation: f64,
}

/// Compares the operator bracket `f_{[[A,B]]}` with the tensor bracket
/// `Lambda(df_A, df_B)` for the two-level pair of [`remark_operators`].
/// `Lambda` is assembled from the quadratures `(X, P)` at every node.
pub fn remark_demo(family: &FamilySpec, grid: &GridSpec) -> Result<RemarkReport> {
    if family.kind() != FamilyKind::Canonical {
        return Err(Error::InvalidParameter {
            name: "family.kind",
            reason: "remark demo needs the canonical family".into(),
        });
    }
    let n = family.truncation();
    let hbar = family.hbar();
    let (a, b) = remark_operators(n)?;
    let bracket = lie(&a, &b, hbar)?;
    let (x_op, p_op) = quadratures(n, hbar, family.mass(), family.omega())?;
    let basis = [x_op, p_op];
    let rows = grid
        .points()
        .par_iter()
        .map(|&pt| -> Result<RemarkRow> {
            let tensors = tensor_assemble(&basis, family, pt)?;
            let da = symbol_differential(&a, family, pt)?;
            let db = symbol_differential(&b, family, pt)?;
            let f_lie = expectation(&bracket, family, pt)?.re;
            let lambda_bracket = tensors.lambda_of(da.components, db.components);
            let rho = pt.rho();
            Ok(RemarkRow {
                x: pt.x,
                p: pt.p,
                f_a: expectation(&a, family, pt)?.re,
                f_b: expectation(&b, family, pt)?.re,
                f_lie,
                lambda_bracket,
                difference: f_lie - lambda_bracket,
                f_lie_closed: (-rho).exp() * (1.0 - rho) / (2.0 * hbar),
                lambda_closed: (-2.0 * rho).exp() * (1.0 - 2.0 * rho) / (2.0 * hbar),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda_xp_deviation = grid
        .points()
        .par_iter()
        .map(|&pt| tensor_assemble(&basis, family, pt).map(|t| (t.lambda[0][1] - 0.5 / hbar).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let max_of = |f: &dyn Fn(&RemarkRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(RemarkReport {
        hbar,
        max_lie_error: max_of(&|r| (r.f_lie - r.f_lie_closed).abs()),
        max_lambda_error: max_of(&|r| (r.lambda_bracket - r.lambda_closed).abs()),
        max_difference: max_of(&|r| r.difference.abs()),
        lambda_xp_deviation,
        rows,
    })
}

/// Dense matrix view used by tests and reports.
pub fn to_real_matrix(m: &Matrix2) -> Array2<f64> {
    Array2::from_shape_fn((2, 2), |(i, j)| m[i][j])
}
