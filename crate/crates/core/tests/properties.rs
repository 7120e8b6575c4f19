use cqreduce_core::coherent::{canonical_state, truncation_tail, FamilySpec, PhasePoint};
use cqreduce_core::dequantize::{
    expectation, pullback_hermitean, symbol_differential, tensor_assemble, Chart, DEFAULT_STEP,
};
use cqreduce_core::flow::{check_invariance, predicted_flow};
use cqreduce_core::fock::{
    evolve, hamiltonian, quadratures, MatrixOperator, SpectrumSpec, TruncatedVector,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn hermitian(n: usize, entries: &[(f64, f64)]) -> MatrixOperator {
    let mut triples = Vec::new();
    let mut next = entries.iter().cycle();
    for i in 0..=n {
        for j in i..=n {
            let &(re, im) = next.next().unwrap();
            if i == j {
                triples.push((i, i, C64::new(re, 0.0)));
            } else {
                triples.push((i, j, C64::new(re, im)));
                triples.push((j, i, C64::new(re, -im)));
            }
        }
    }
    MatrixOperator::from_triples(n, &triples).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_unitary(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 17),
        e2 in -1.0f64..1.0,
        t in -10.0f64..10.0,
    ) {
        let v = TruncatedVector::from_vec(amps.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap();
        let spec = SpectrumSpec::new(vec![0.5, 1.0, e2], 1.0, 1.3).unwrap();
        let w = evolve(&v, &spec, t);
        prop_assert!((w.norm() - v.norm()).abs() <= 1e-14 * v.norm().max(1.0));
    }

    #[test]
    fn norm_deficit_is_the_tail(rho in 0.0f64..9.0, phi in -3.2f64..3.2) {
        let s = canonical_state(PhasePoint::from_polar(rho, phi), 64).unwrap();
        prop_assert!(((1.0 - s.norm_sqr()) - truncation_tail(rho, 64)).abs() < 1e-14);
    }

    #[test]
    fn linear_deformation_is_canonical(rho in 1e-3f64..9.0, phi in -3.0f64..3.0) {
        let fam = FamilySpec::deformed(vec![0.0, 1.0], 1.0, 1.0, 1.0, 64).unwrap();
        let a = fam.state(PhasePoint::from_polar(rho, phi)).unwrap();
        let b = canonical_state(PhasePoint::from_polar(rho, phi), 64).unwrap();
        let d = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-15);
    }

    #[test]
    fn symbols_are_linear_and_real(
        a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7),
        b in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        x in -2.0f64..2.0,
        p in -2.0f64..2.0,
    ) {
        let n = 32;
        let fam = FamilySpec::deformed(vec![0.0, 1.0, 0.2], 1.0, 1.0, 1.0, n).unwrap();
        let (ha, hb) = (hermitian(n, &a), hermitian(n, &b));
        let pt = PhasePoint::new(x, p);
        prop_assume!(pt.rho() > 1e-3);
        let fa = expectation(&ha, &fam, pt).unwrap();
        let fb = expectation(&hb, &fam, pt).unwrap();
        let fs = expectation(&(&ha + &hb), &fam, pt).unwrap();
        prop_assert!((fs - fa - fb).norm() < 1e-13);
        prop_assert!(fa.im.abs() < 1e-13 && fb.im.abs() < 1e-13);
    }

    #[test]
    fn assembled_tensors_reproduce_brackets_on_the_basis(x in -2.0f64..2.0, p in -2.0f64..2.0) {
        let fam = FamilySpec::canonical(0.9, 1.0, 1.0, 64).unwrap();
        let (xo, po) = quadratures(64, 0.9, 1.0, 1.0).unwrap();
        // a nonlinear second basis element keeps D away from a multiple of the identity
        let second = &po + &(&xo * &xo);
        let basis = [xo.clone(), second.clone()];
        let pt = PhasePoint::new(x, p);
        let t = tensor_assemble(&basis, &fam, pt).unwrap();
        let d = [
            symbol_differential(&xo, &fam, pt).unwrap().components,
            symbol_differential(&second, &fam, pt).unwrap().components,
        ];
        for j in 0..2 {
            for k in 0..2 {
                let scale = t.jordan_values[j][k].abs().max(1.0);
                prop_assert!((t.g_of(d[j], d[k]) - t.jordan_values[j][k]).abs() < 1e-9 * scale);
                prop_assert!((t.lambda_of(d[j], d[k]) - t.lie_values[j][k]).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn canonical_pullback_rotation_invariant(x in -2.0f64..2.0, p in -2.0f64..2.0, angle in -3.0f64..3.0) {
        let fam = FamilySpec::canonical(1.0, 1.0, 1.0, 64).unwrap();
        let pt = PhasePoint::new(x, p);
        let q = predicted_flow(pt, 1.0, angle);
        let a = pullback_hermitean(&fam, pt, Chart::Cartesian, DEFAULT_STEP).unwrap();
        let b = pullback_hermitean(&fam, q, Chart::Cartesian, DEFAULT_STEP).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((a.g[i][j] - b.g[i][j]).abs() < 1e-8);
                prop_assert!((a.omega_prime[i][j] - b.omega_prime[i][j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn deformed_family_is_invariant(rho in 0.5f64..4.0, phi in -3.0f64..3.0, t in 0.0f64..7.0) {
        let eps = vec![0.0, 1.0, 0.0, 1.0];
        let fam = FamilySpec::deformed(eps.clone(), 1.0, 1.0, 1.0, 64).unwrap();
        let spec = SpectrumSpec::new(eps, 1.0, 1.0).unwrap();
        let r = check_invariance(&fam, &spec, &[PhasePoint::from_polar(rho, phi)], &[t]).unwrap();
        prop_assert!(r.max_infidelity < 1e-12);
    }

    #[test]
    fn energy_symbol_constant_along_traces(x in -2.0f64..2.0, p in -2.0f64..2.0, t in -7.0f64..7.0) {
        let fam = FamilySpec::canonical(1.0, 1.0, 1.0, 64).unwrap();
        let spec = SpectrumSpec::harmonic(1.0, 1.0).unwrap();
        let h = hamiltonian(&spec, 64).unwrap();
        let pt = PhasePoint::new(x, p);
        let a = expectation(&h, &fam, pt).unwrap().re;
        let b = expectation(&h, &fam, predicted_flow(pt, 1.0, t)).unwrap().re;
        prop_assert!((a - b).abs() < 1e-12);
    }
}
