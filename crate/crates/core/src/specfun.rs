//! Gamma special functions.
//!
//! Log-gamma, the regularized incomplete gamma functions `P(a, x)` and
//! `Q(a, x) = 1 - P(a, x)`, the upper-tail inverse of `Q`, and the gamma
//! distribution built on them. Everything is `f64` and pure.
//!
//! `P` is evaluated by its power series when `x < a + 1` and via the
//! continued fraction for `Q` otherwise; each is computed directly on the
//! side where it converges quickly, so deep tails (`Q ~ 1e-20`) keep their
//! relative precision instead of being lost in `1 - P`.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 10_000;
const EPSILON: f64 = 1e-15;
const TINY: f64 = 1e-300;

const LANCZOS_G: f64 = 671.0 / 128.0;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COEFFS: [f64; 14] = [
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_048_8e-4,
    2.174_396_181_152_126_5e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_140_8e-5,
    3.689_918_265_953_162_5e-6,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

fn domain(msg: String) -> Error {
    Error::Domain(msg)
}

/// Natural logarithm of the gamma function for `a > 0`.
pub fn log_gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(format!("log_gamma requires finite a > 0, got {a}")));
    }
    let tmp = a + LANCZOS_G;
    let tmp = (a + 0.5) * tmp.ln() - tmp;
    let mut y = a;
    let mut series = LANCZOS_C0;
    for c in LANCZOS_COEFFS {
        y += 1.0;
        series += c / y;
    }
    Ok(tmp + (SQRT_2PI * series / a).ln())
}

fn check_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(format!("shape must be finite and > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(domain(format!("x must be >= 0, got {x}")));
    }
    Ok(())
}

/// `ln(x^a e^-x / Gamma(a))`, the common prefactor of both expansions.
fn log_prefactor(a: f64, x: f64) -> Result<f64> {
    Ok(a * x.ln() - x - log_gamma(a)?)
}

/// Power series for `P(a, x)`. Converges for all `x`, quickly for `x < a + 1`.
pub(crate) fn lower_series(a: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITERATIONS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * EPSILON {
            return Ok(sum * log_prefactor(a, x)?.exp());
        }
    }
    Err(Error::NonConvergence {
        routine: "incomplete gamma series",
        iterations: MAX_ITERATIONS,
    })
}

/// Continued fraction for `Q(a, x)` (modified Lentz).
pub(crate) fn upper_continued_fraction(a: f64, x: f64) -> Result<f64> {
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / guard(b);
    let mut h = d;
    for i in 1..=MAX_ITERATIONS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = 1.0 / guard(an * d + b);
        c = guard(b + an / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPSILON {
            return Ok(log_prefactor(a, x)?.exp() * h);
        }
    }
    Err(Error::NonConvergence {
        routine: "incomplete gamma continued fraction",
        iterations: MAX_ITERATIONS,
    })
}

/// Regularized lower incomplete gamma `P(a, x) = gamma(a, x) / Gamma(a)`.
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    check_args(a, x)?;
    if x == 0.0 {
        Ok(0.0)
    } else if x == f64::INFINITY {
        Ok(1.0)
    } else if x < a + 1.0 {
        lower_series(a, x)
    } else {
        Ok(1.0 - upper_continued_fraction(a, x)?)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    check_args(a, x)?;
    if x == 0.0 {
        Ok(1.0)
    } else if x == f64::INFINITY {
        Ok(0.0)
    } else if x < a + 1.0 {
        Ok(1.0 - lower_series(a, x)?)
    } else {
        upper_continued_fraction(a, x)
    }
}

/// Density of the unit-rate gamma distribution.
fn unit_gamma_density(a: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(if a == 1.0 { 1.0 } else if a < 1.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(((a - 1.0) * x.ln() - x - log_gamma(a)?).exp())
}

/// Standard normal quantile (Acklam's rational approximation, relative
/// error below 1.2e-9). Only used to seed root finding.
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        let q = (-2.0 * q.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    }
}

/// Wilson-Hilferty approximation to the `x` with `Q(a, x) = p_tail`.
fn wilson_hilferty(a: f64, p_tail: f64) -> f64 {
    let z = -normal_quantile(p_tail);
    let t = 1.0 / (9.0 * a);
    a * (1.0 - t + z * t.sqrt()).powi(3)
}

/// Solves `Q(a, x) = p_tail` for `x`.
///
/// Seeds with the Wilson-Hilferty approximation, brackets the root, then
/// runs Newton steps on `ln Q(a, x) - ln p_tail`, falling back to bisection
/// whenever a step leaves the bracket.
pub fn inv_reg_upper_gamma(a: f64, p_tail: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(format!("shape must be finite and > 0, got {a}")));
    }
    if !(p_tail > 0.0 && p_tail < 1.0) {
        return Err(domain(format!("tail probability must lie in (0, 1), got {p_tail}")));
    }
    let target = p_tail.ln();
    // g(x) = ln Q(x) - ln p, decreasing in x.
    let g = |x: f64| -> Result<f64> { Ok(reg_upper_gamma(a, x)?.ln() - target) };

    let seed = wilson_hilferty(a, p_tail);
    let mut x = if seed.is_finite() && seed > 0.0 { seed } else { a };

    // Bracket: g(lo) > 0 >= g(hi).
    let (mut lo, mut hi);
    if g(x)? > 0.0 {
        lo = x;
        hi = 2.0 * x + 1.0;
        while g(hi)? > 0.0 {
            lo = hi;
            hi = 2.0 * hi + 1.0;
            if !hi.is_finite() {
                return Err(Error::NonConvergence { routine: "gamma inverse bracketing", iterations: 0 });
            }
        }
    } else {
        hi = x;
        lo = 0.5 * x;
        while lo > TINY && g(lo)? <= 0.0 {
            hi = lo;
            lo *= 0.5;
        }
        if lo <= TINY {
            lo = 0.0;
        }
    }
    x = x.clamp(lo, hi);

    const MAX_STEPS: usize = 500;
    for _ in 0..MAX_STEPS {
        let q = reg_upper_gamma(a, x)?;
        let gx = q.ln() - target;
        if gx == 0.0 {
            return Ok(x);
        }
        if gx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // d/dx ln Q = -f(x) / Q(x)
        let slope = -unit_gamma_density(a, x)? / q;
        let newton = x - gx / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NonConvergence {
        routine: "gamma inverse",
        iterations: MAX_STEPS,
    })
}

/// Gamma distribution with shape `alpha` and rate `beta`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaLaw {
    shape: f64,
    rate: f64,
}

impl GammaLaw {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(domain(format!(
                "gamma law needs finite positive shape and rate, got ({shape}, {rate})"
            )));
        }
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    /// The same law for the variable `c * X`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.shape, self.rate / c)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        gamma_cdf(self, x)
    }

    /// `Pr{X > x}`.
    pub fn sf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain(format!("x must be >= 0, got {x}")));
        }
        reg_upper_gamma(self.shape, self.rate * x)
    }

    /// The `x` with `Pr{X > x} = p_tail`.
    pub fn upper_quantile(&self, p_tail: f64) -> Result<f64> {
        Ok(inv_reg_upper_gamma(self.shape, p_tail)? / self.rate)
    }
}

/// `F(x; alpha, beta) = P(alpha, beta * x)`.
pub fn gamma_cdf(law: &GammaLaw, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("x must be >= 0, got {x}")));
    }
    reg_lower_gamma(law.shape, law.rate * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn log_gamma_known_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
        let half = log_gamma(0.5).unwrap();
        assert!(close(half, 0.5 * std::f64::consts::PI.ln(), 1e-14), "{half}");
        // Gamma(11) = 10! = 3628800
        assert!(close(log_gamma(11.0).unwrap(), 3_628_800f64.ln(), 1e-13));
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn exponential_special_case() {
        for x in [0.5, 1.0, 3.0] {
            let p = reg_lower_gamma(1.0, x).unwrap();
            assert!(close(p, 1.0 - (-x).exp(), 1e-14), "x={x}: {p}");
        }
        assert_eq!(reg_lower_gamma(3.0, 0.0).unwrap(), 0.0);
        assert_eq!(reg_upper_gamma(3.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(reg_lower_gamma(0.0, 1.0).is_err());
        assert!(reg_lower_gamma(1.0, -1.0).is_err());
        assert!(inv_reg_upper_gamma(1.0, 0.0).is_err());
        assert!(inv_reg_upper_gamma(1.0, 1.0).is_err());
        assert!(GammaLaw::new(1.0, 0.0).is_err());
    }

    #[test]
    fn lower_and_upper_sum_to_one() {
        let mut a = 1.0;
        while a <= 128.0 {
            for x in [0.1 * a, a, 10.0 * a] {
                let p = reg_lower_gamma(a, x).unwrap();
                let q = reg_upper_gamma(a, x).unwrap();
                assert!((p + q - 1.0).abs() <= 1e-12, "a={a} x={x}: {p} + {q}");
            }
            a *= 2.0;
        }
    }

    #[test]
    fn series_and_continued_fraction_agree() {
        // Both expansions converge near x = a; well below it the continued
        // fraction loses all precision, well above it the series overflows.
        let mut a = 1.0;
        while a <= 128.0 {
            for x in [a, a + 1.0, 1.5 * a] {
                let p = lower_series(a, x).unwrap();
                let q = upper_continued_fraction(a, x).unwrap();
                assert!((p + q - 1.0).abs() <= 1e-12, "a={a} x={x}: {p} + {q}");
            }
            a *= 2.0;
        }
    }

    #[test]
    fn inverse_of_exponential() {
        let x = inv_reg_upper_gamma(1.0, (-2.0f64).exp()).unwrap();
        assert!(close(x, 2.0, 1e-12), "{x}");
    }

    #[test]
    fn inverse_round_trips_on_grid() {
        let mut a = 1.0;
        while a <= 128.0 {
            for p in [1e-1, 1e-2, 1e-4, 1e-6] {
                let x = inv_reg_upper_gamma(a, p).unwrap();
                let back = 1.0 - reg_lower_gamma(a, x).unwrap();
                assert!((back - p).abs() <= 1e-9, "a={a} p={p}: {back}");
                assert!((reg_upper_gamma(a, x).unwrap() - p).abs() <= 1e-10);
            }
            a *= 2.0;
        }
    }

    #[test]
    fn gamma_law_moments_and_cdf() {
        let law = GammaLaw::new(1.0, 2.0).unwrap();
        assert_eq!(law.cdf(0.0).unwrap(), 0.0);
        assert!(close(law.cdf(1.0).unwrap(), 1.0 - (-2.0f64).exp(), 1e-14));
        let law = GammaLaw::new(64.0, 64.0 / 20.0).unwrap();
        assert!(close(law.mean(), 20.0, 1e-12));
        assert!(close(law.variance(), 400.0 / 64.0, 1e-12));
        let x = law.upper_quantile(1e-3).unwrap();
        assert!(close(law.sf(x).unwrap(), 1e-3, 1e-12));
    }

    #[test]
    fn normal_quantile_sanity() {
        assert!(normal_quantile(0.5).abs() < 1e-9);
        assert!(close(normal_quantile(0.975), 1.959_963_985, 1e-8));
        assert!(close(normal_quantile(1e-4), -3.719_016_485, 1e-7));
    }

    proptest! {
        #[test]
        fn lower_is_monotone(a in 0.05f64..200.0, x in 0.0f64..400.0, dx in 0.0f64..10.0) {
            let p0 = reg_lower_gamma(a, x).unwrap();
            let p1 = reg_lower_gamma(a, x + dx).unwrap();
            prop_assert!((0.0..=1.0).contains(&p0));
            prop_assert!(p1 >= p0 - 1e-14);
        }

        #[test]
        fn lower_nonincreasing_in_shape(a in 0.05f64..200.0, da in 0.0f64..5.0, x in 0.0f64..400.0) {
            let p0 = reg_lower_gamma(a, x).unwrap();
            let p1 = reg_lower_gamma(a + da, x).unwrap();
            prop_assert!(p1 <= p0 + 1e-14);
        }

        #[test]
        fn inverse_round_trip(a in 0.1f64..500.0, log_p in -12.0f64..-0.01) {
            let p = 10f64.powf(log_p);
            let x = inv_reg_upper_gamma(a, p).unwrap();
            let q = reg_upper_gamma(a, x).unwrap();
            prop_assert!((q - p).abs() <= 1e-10 * p.max(1e-3), "a={} p={} q={}", a, p, q);
        }
    }
}
