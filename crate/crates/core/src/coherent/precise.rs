//! The identity-resolution quadrature in multi-precision arithmetic.
//!
//! In double precision the deviation of the integrated block from the
//! identity stops shrinking near `1e-15`, so a radius sweep past `R ~ 8`
//! measures rounding rather than the Poisson deficit `Q(N+1, R^2)`. This
//! module evaluates the same tensor-product rule (Gauss-Legendre in `r`,
//! uniform in `phi`) with [`BITS`]-bit floats. The rule factorizes:
//!
//! `block[m][n] = 2 sum_i w_i r_i c_m(r_i) c_n(r_i) * A_{m-n}`,
//! `A_d = (1/M) sum_k e^{i d phi_k}`, `c_n(r) = e^{-r^2/2} r^n / sqrt(n!)`.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::error::{positive, Error, Result};
use crate::quadrature::gauss_legendre;

/// Working precision in bits.
pub const BITS: usize = 256;

const RM: RoundingMode = RoundingMode::ToEven;
const NEWTON_STEPS: usize = 6;

struct Ctx {
    cc: Consts,
}

impl Ctx {
    fn new() -> Result<Self> {
        let cc = Consts::new()
            .map_err(|e| Error::Numerical(format!("multi-precision constants: {e:?}")))?;
        Ok(Self { cc })
    }

    fn num(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, BITS)
    }

    fn int(&self, v: usize) -> BigFloat {
        BigFloat::from_u64(v as u64, BITS)
    }

    fn read_f64(&mut self, v: &BigFloat) -> Result<f64> {
        let text = v
            .format(Radix::Dec, RM, &mut self.cc)
            .map_err(|e| Error::Numerical(format!("multi-precision format: {e:?}")))?;
        text.parse()
            .map_err(|_| Error::Numerical(format!("cannot read back `{text}`")))
    }
}

fn add(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.add(b, BITS, RM)
}

fn sub(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.sub(b, BITS, RM)
}

fn mul(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.mul(b, BITS, RM)
}

fn div(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.div(b, BITS, RM)
}

/// `(P_n(x), P_n'(x))`.
fn legendre(ctx: &Ctx, n: usize, x: &BigFloat) -> (BigFloat, BigFloat) {
    let one = ctx.int(1);
    let mut p0 = one.clone();
    let mut p1 = x.clone();
    for k in 2..=n {
        let a = mul(&mul(&ctx.int(2 * k - 1), x), &p1);
        let b = mul(&ctx.int(k - 1), &p0);
        let p2 = div(&sub(&a, &b), &ctx.int(k));
        p0 = p1;
        p1 = p2;
    }
    let d = div(
        &mul(&ctx.int(n), &sub(&mul(x, &p1), &p0)),
        &sub(&mul(x, x), &one),
    );
    (p1, d)
}

/// Gauss-Legendre nodes and weights on `[0, radius]`, polished by Newton
/// from the double-precision rule.
fn radial_rule(ctx: &Ctx, n: usize, radius: f64) -> Vec<(BigFloat, BigFloat)> {
    let (seeds, _) = gauss_legendre(n);
    let half = div(&ctx.num(radius), &ctx.int(2));
    let one = ctx.int(1);
    let two = ctx.int(2);
    seeds
        .iter()
        .map(|&seed| {
            let mut x = ctx.num(seed);
            if n == 1 {
                x = ctx.int(0);
            }
            let mut d = one.clone();
            for _ in 0..NEWTON_STEPS {
                let (p, dp) = legendre(ctx, n, &x);
                x = sub(&x, &div(&p, &dp));
                d = dp;
            }
            if n > 1 {
                d = legendre(ctx, n, &x).1;
            }
            let w = div(&two, &mul(&sub(&one, &mul(&x, &x)), &mul(&d, &d)));
            let r = mul(&half, &add(&one, &x));
            (r, mul(&half, &w))
        })
        .collect()
}

/// Real and imaginary parts of `(1/M) sum_k e^{i d 2 pi k / M}` for
/// `d = 0..=max_d`; negative offsets are the conjugates.
fn angular_sums(ctx: &mut Ctx, angular: usize, max_d: usize) -> Vec<(BigFloat, BigFloat)> {
    let step = div(&mul(&ctx.int(2), &ctx.cc.pi(BITS, RM)), &ctx.int(angular));
    let mut sums = vec![(ctx.int(0), ctx.int(0)); max_d + 1];
    for k in 0..angular {
        let phi = mul(&step, &ctx.int(k));
        let (c, s) = (
            phi.cos(BITS, RM, &mut ctx.cc),
            phi.sin(BITS, RM, &mut ctx.cc),
        );
        let mut re = ctx.int(1);
        let mut im = ctx.int(0);
        for entry in sums.iter_mut() {
            entry.0 = add(&entry.0, &re);
            entry.1 = add(&entry.1, &im);
            let next_re = sub(&mul(&re, &c), &mul(&im, &s));
            im = add(&mul(&re, &s), &mul(&im, &c));
            re = next_re;
        }
    }
    let m = ctx.int(angular);
    sums.into_iter()
        .map(|(re, im)| (div(&re, &m), div(&im, &m)))
        .collect()
}

/// `max_{m,n <= levels} |block[m][n] - delta_mn|` for the rule with
/// `radial` Gauss-Legendre nodes on `[0, radius]` and `angular` uniform
/// angles, evaluated at [`BITS`] bits and rounded to `f64` at the end.
pub fn identity_deviation(
    levels: usize,
    radius: f64,
    radial: usize,
    angular: usize,
) -> Result<f64> {
    positive("radius", radius)?;
    if radial == 0 || angular == 0 {
        return Err(Error::InvalidParameter {
            name: "nodes",
            reason: "node counts must be positive".into(),
        });
    }
    let mut ctx = Ctx::new()?;
    let dim = levels + 1;
    let angles = angular_sums(&mut ctx, angular, levels);
    let two = ctx.int(2);
    // moments[m][n] = 2 sum_i w_i r_i c_m(r_i) c_n(r_i), symmetric
    let mut moments = vec![vec![ctx.int(0); dim]; dim];
    for (r, w) in radial_rule(&ctx, radial, radius) {
        let gauss = mul(&r, &r).neg();
        let gauss = div(&gauss, &two).exp(BITS, RM, &mut ctx.cc);
        let mut c = Vec::with_capacity(dim);
        c.push(gauss);
        for n in 1..dim {
            let ratio = div(&r, &ctx.int(n).sqrt(BITS, RM));
            c.push(mul(&c[n - 1], &ratio));
        }
        let weight = mul(&two, &mul(&w, &r));
        for m in 0..dim {
            let wm = mul(&weight, &c[m]);
            for n in m..dim {
                moments[m][n] = add(&moments[m][n], &mul(&wm, &c[n]));
            }
        }
    }
    let one = ctx.int(1);
    let mut worst = ctx.int(0);
    for m in 0..dim {
        for n in m..dim {
            let (a_re, a_im) = &angles[n - m];
            let mut re = mul(&moments[m][n], a_re);
            let im = mul(&moments[m][n], a_im);
            if m == n {
                re = sub(&re, &one);
            }
            let modulus = add(&mul(&re, &re), &mul(&im, &im)).sqrt(BITS, RM);
            if modulus > worst {
                worst = modulus;
            }
        }
    }
    ctx.read_f64(&worst)
}
