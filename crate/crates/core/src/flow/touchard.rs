//! Touchard polynomials `T_j(x) = sum_k S(j, k) x^k`.

use std::sync::OnceLock;

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Largest order with an exact `u64` Stirling table.
pub const MAX_ORDER: usize = 20;

/// Largest argument inside the accuracy envelope.
pub const MAX_ARGUMENT: f64 = 50.0;

fn stirling_table() -> &'static Vec<Vec<u64>> {
    static TABLE: OnceLock<Vec<Vec<u64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows = vec![vec![1u64]];
        for j in 1..=MAX_ORDER {
            let prev = &rows[j - 1];
            let row = (0..=j)
                .map(|k| {
                    let left = if k >= 1 {
                        prev.get(k - 1).copied().unwrap_or(0)
                    } else {
                        0
                    };
                    let down = prev.get(k).copied().unwrap_or(0);
                    k as u64 * down + left
                })
                .collect();
            rows.push(row);
        }
        rows
    })
}

/// Stirling number of the second kind `S(j, k)`, exact for `j <= 20`.
pub fn stirling2(j: usize, k: usize) -> Result<u64> {
    check_order(j)?;
    Ok(stirling_table()[j].get(k).copied().unwrap_or(0))
}

fn check_order(j: usize) -> Result<()> {
    if j > MAX_ORDER {
        return Err(Error::Envelope(format!(
            "Touchard order {j} exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

fn check_argument(x: f64) -> Result<()> {
    if !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(Error::Envelope(format!(
            "Touchard argument {x} outside [0, {MAX_ARGUMENT}]"
        )));
    }
    Ok(())
}

/// `T_j(x)` from the Stirling expansion.
pub fn touchard(j: usize, x: f64) -> Result<f64> {
    check_order(j)?;
    check_argument(x)?;
    let row = &stirling_table()[j];
    Ok(row.iter().rev().fold(0.0, |acc, &s| acc * x + s as f64))
}

/// `T_j'(x) = sum_k k S(j, k) x^(k-1)`.
pub fn touchard_derivative(j: usize, x: f64) -> Result<f64> {
    check_order(j)?;
    check_argument(x)?;
    let row = &stirling_table()[j];
    Ok(row
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &s)| acc * x + k as f64 * s as f64))
}

/// `T_j(x) = e^{-x} sum_k k^j x^k / k!`, summed in log space past the peak.
pub fn touchard_series(j: usize, x: f64) -> Result<f64> {
    check_order(j)?;
    check_argument(x)?;
    if x == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    let ln_x = x.ln();
    let mut sum = if j == 0 { (-x).exp() } else { 0.0 };
    let peak = x + j as f64;
    for k in 1u64.. {
        let kf = k as f64;
        let term = (-x + j as f64 * kf.ln() + kf * ln_x - ln_factorial(k)).exp();
        sum += term;
        if kf > peak && term <= 1e-18 * sum {
            break;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_rows() {
        assert_eq!(stirling2(0, 0).unwrap(), 1);
        assert_eq!(stirling2(4, 2).unwrap(), 7);
        assert_eq!(stirling2(5, 3).unwrap(), 25);
        assert_eq!(stirling2(10, 5).unwrap(), 42525);
        assert_eq!(stirling2(3, 7).unwrap(), 0);
        // Bell numbers are row sums
        let bell: u64 = (0..=20).map(|k| stirling2(20, k).unwrap()).sum();
        assert_eq!(bell, 51_724_158_235_372);
    }

    #[test]
    fn low_orders() {
        for x in [0.0, 0.5, 2.0, 7.25] {
            assert_eq!(touchard(0, x).unwrap(), 1.0);
            assert_eq!(touchard(1, x).unwrap(), x);
            assert!((touchard(2, x).unwrap() - (x * x + x)).abs() < 1e-14 * (1.0 + x * x));
            assert!(
                (touchard(3, x).unwrap() - (x * x * x + 3.0 * x * x + x)).abs()
                    < 1e-13 * (1.0 + x.powi(3))
            );
            assert!(
                (touchard_derivative(3, x).unwrap() - (3.0 * x * x + 6.0 * x + 1.0)).abs()
                    < 1e-13 * (1.0 + x * x)
            );
        }
    }

    #[test]
    fn series_agrees_with_stirling_form() {
        for j in 0..=10 {
            for i in 0..=40 {
                let x = 0.25 * i as f64;
                let a = touchard(j, x).unwrap();
                let b = touchard_series(j, x).unwrap();
                let rel = (a - b).abs() / a.abs().max(f64::MIN_POSITIVE);
                assert!(
                    rel < 1e-12 || (a == 0.0 && b == 0.0),
                    "j={j} x={x}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn envelope_violations() {
        assert!(matches!(touchard(21, 1.0), Err(Error::Envelope(_))));
        assert!(matches!(touchard(3, 50.5), Err(Error::Envelope(_))));
        assert!(matches!(touchard(3, -0.1), Err(Error::Envelope(_))));
        assert!(matches!(
            touchard_series(3, f64::NAN),
            Err(Error::Envelope(_))
        ));
        assert!(touchard(20, 50.0).unwrap().is_finite());
    }

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    proptest! {
        #[test]
        fn recurrence(j in 0usize..12, x in 0.0f64..20.0) {
            let lhs = touchard(j + 1, x).unwrap();
            let rhs: f64 = x * (0..=j).map(|k| binomial(j, k) * touchard(k, x).unwrap()).sum::<f64>();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn derivative_matches_difference(j in 1usize..10, x in 0.5f64..10.0) {
            let h = 1e-5 * x;
            let fd = (touchard(j, x + h).unwrap() - touchard(j, x - h).unwrap()) / (2.0 * h);
            let d = touchard_derivative(j, x).unwrap();
            prop_assert!((fd - d).abs() <= 1e-7 * d.abs().max(1.0));
        }
    }
}
