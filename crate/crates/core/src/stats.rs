//! Special functions and distribution tails used by the significance scorers.
//!
//! The Student-t distribution goes through the regularized incomplete beta
//! function; the normal distribution through the regularized incomplete
//! gamma function (`erfc(x) = Q(1/2, x^2)`).

use crate::Scalar;

const MAX_ITER: usize = 500;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let half = T::of(0.5);
    if x < half {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = T::of(std::f64::consts::PI);
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::of(COEF[0]);
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += T::of(*c) / (x + T::of(i as f64));
    }
    let t = x + T::of(7.5);
    T::of(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn inc_beta<T: Scalar>(a: T, b: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (T::one() - x).ln();
    let front = ln_front.exp();
    if x < (a + T::one()) / (a + b + T::of(2.0)) {
        front * beta_fraction(a, b, x) / a
    } else {
        T::one() - front * beta_fraction(b, a, T::one() - x) / b
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_fraction<T: Scalar>(a: T, b: T, x: T) -> T {
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let one = T::one();
    let two = T::of(2.0);
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = T::of(m as f64);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h *= del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    h
}

/// Upper regularized incomplete gamma function `Q(a, x)`.
pub fn inc_gamma_upper<T: Scalar>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    if x < a + T::one() {
        T::one() - gamma_series(a, x)
    } else {
        gamma_fraction(a, x)
    }
}

fn gamma_series<T: Scalar>(a: T, x: T) -> T {
    let mut ap = a;
    let mut del = T::one() / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += T::one();
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * T::epsilon() {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_fraction<T: Scalar>(a: T, x: T) -> T {
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let one = T::one();
    let two = T::of(2.0);
    let mut b = x + one - a;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let i = T::of(i as f64);
        let an = -i * (i - a);
        b += two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h *= del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Complementary error function.
pub fn erfc<T: Scalar>(x: T) -> T {
    let q = inc_gamma_upper(T::of(0.5), x * x);
    if x >= T::zero() {
        q
    } else {
        T::of(2.0) - q
    }
}

/// Standard normal CDF.
pub fn normal_cdf<T: Scalar>(z: T) -> T {
    T::of(0.5) * erfc(-z / T::of(std::f64::consts::SQRT_2))
}

/// Standard normal upper tail `P(Z >= z)`.
pub fn normal_sf<T: Scalar>(z: T) -> T {
    T::of(0.5) * erfc(z / T::of(std::f64::consts::SQRT_2))
}

/// Two-sided tail `P(|T| >= |t|)` of a Student-t variable with `df` degrees
/// of freedom. Infinite `t` yields 0.
pub fn student_t_two_sided<T: Scalar>(t: T, df: T) -> T {
    if t.is_infinite() {
        return T::zero();
    }
    let x = df / (df + t * t);
    inc_beta(df * T::of(0.5), T::of(0.5), x)
}

/// Student-t CDF.
pub fn student_t_cdf<T: Scalar>(t: T, df: T) -> T {
    let tail = T::of(0.5) * student_t_two_sided(t, df);
    if t > T::zero() {
        T::one() - tail
    } else {
        tail
    }
}

/// Mean and sample standard deviation (n - 1 denominator).
pub fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}
