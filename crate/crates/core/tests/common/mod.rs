//! Oracles shared by the integration tests. Nothing here calls into the
//! special-function code under test.

#![allow(dead_code)]

/// Adaptive Simpson integration of `f` over `[lo, hi]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    if hi <= lo {
        return 0.0;
    }
    let (fa, fb) = (f(lo), f(hi));
    let (m, fm, whole) = simpson(f, lo, fa, hi, fb);
    recurse(f, lo, fa, hi, fb, m, fm, whole, tol, 50)
}

/// `P(a, x)` by quadrature of the gamma density, normalized by quadrature of
/// its full integral. Valid for `a >= 1`.
pub fn reg_lower_gamma_quadrature(a: f64, x: f64) -> f64 {
    assert!(a >= 1.0);
    let mode = a - 1.0;
    let log_peak = if mode > 0.0 { mode * mode.ln() - mode } else { 0.0 };
    let density = move |t: f64| {
        if t <= 0.0 {
            return if a == 1.0 { (-log_peak).exp() } else { 0.0 };
        }
        ((a - 1.0) * t.ln() - t - log_peak).exp()
    };
    let upper = a + 40.0 * a.sqrt() + 50.0;
    // Piecewise over intervals of width ~sqrt(a) keeps the recursion shallow.
    let piece = a.sqrt().max(1.0);
    let integrate_to = |end: f64| {
        let mut total = 0.0;
        let mut lo = 0.0;
        while lo < end {
            let hi = (lo + piece).min(end);
            total += integrate(&density, lo, hi, 1e-14);
            lo = hi;
        }
        total
    };
    let whole = integrate_to(upper);
    (integrate_to(x.min(upper)) / whole).min(1.0)
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value coefficient of the KS distribution.
pub const KS_C_01: f64 = 1.627_6;

pub fn ks_critical_one_sample(n: usize) -> f64 {
    KS_C_01 / (n as f64).sqrt()
}

pub fn ks_critical_two_sample(n: usize, m: usize) -> f64 {
    KS_C_01 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Pearson chi-square statistic of observed counts against a uniform law.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}
