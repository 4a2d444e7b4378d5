//! Student's t distribution through the regularized incomplete beta function.

use libm::{exp, fabs, lgamma, log, log1p};

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 20_000;

/// Regularized incomplete beta `I_x(a, b)`, taking both `x` and `1 - x` so
/// callers can pass a complement computed without cancellation.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let ln_front = a * log(x) + b * log(one_minus_x) - ln_beta(a, b);
    // The continued fraction converges fastest below the mean of the distribution.
    if x < (a + 1.0) / (a + b + 2.0) {
        exp(ln_front) * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - exp(ln_front) * beta_continued_fraction(b, a, one_minus_x) / b
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if fabs(d) < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if fabs(d) < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if fabs(c) < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if fabs(d) < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if fabs(c) < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if fabs(del - 1.0) < CF_EPS {
            break;
        }
    }
    h
}

/// `P(T <= t)` for `T ~ t(dof)`.
pub fn cdf(t: f64, dof: f64) -> f64 {
    if t.is_nan() || !(dof > 0.0) {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 1.0;
    }
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    let tail = lower_tail_of_abs(t, dof);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `P(T >= t)`, computed without cancellation for large `t`.
pub fn sf(t: f64, dof: f64) -> f64 {
    cdf(-t, dof)
}

/// `P(T <= -|t|) = I_x(dof/2, 1/2) / 2` with `x = dof / (dof + t^2)`.
fn lower_tail_of_abs(t: f64, dof: f64) -> f64 {
    let t2 = t * t;
    let denom = dof + t2;
    let x = dof / denom;
    let one_minus_x = t2 / denom;
    0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, x, one_minus_x)
}

/// Density of the t distribution.
pub fn pdf(t: f64, dof: f64) -> f64 {
    let ln_norm = lgamma(0.5 * (dof + 1.0)) - lgamma(0.5 * dof) - 0.5 * log(dof * core::f64::consts::PI);
    exp(ln_norm - 0.5 * (dof + 1.0) * log1p(t * t / dof))
}

/// Inverse CDF by bracketing and bisection refined with Newton steps.
pub fn quantile(p: f64, dof: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || !(dof > 0.0) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -quantile(1.0 - p, dof);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while cdf(hi, dof) < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = cdf(x, dof) - p;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let density = pdf(x, dof);
        let newton = if density > 0.0 { x - f / density } else { f64::NAN };
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    x
}
