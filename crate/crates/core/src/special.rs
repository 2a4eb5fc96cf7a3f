//! Special functions: the modified Bessel function `K0` and the Gamma function.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Modified Bessel function of the second kind, order zero.
///
/// Power series for `x <= 2`; Steed's continued fraction (Temme's CF2) above.
/// Returns `+inf` at `x = 0` and NaN for negative arguments.
pub fn bessel_k0(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 2.0 {
        k0_series(x)
    } else {
        k0_cf2(x)
    }
}

fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i0 + tail
}

// Order-zero specialization of the CF2 recurrence; converges quickly for x > 2.
fn k0_cf2(x: f64) -> f64 {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * (-x).exp() / s
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

/// Gamma function (Lanczos approximation with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Trapezoid rule on K0(x) = ∫_0^∞ exp(-x cosh t) dt; the integrand is
    // entire and decays double-exponentially, so the rule converges
    // geometrically in the step size.
    fn k0_quadrature(x: f64) -> f64 {
        let h = 0.01_f64;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let v = (-x * t.cosh()).exp();
            sum += v;
            if v < 1e-300 || v < 1e-20 * sum {
                break;
            }
            t += h;
        }
        sum * h
    }

    #[test]
    fn k0_matches_integral_representation() {
        for &x in &[1e-3, 0.01, 0.1, 0.5, 1.0, 1.5, 1.999, 2.0, 2.001, 3.0, 5.0, 10.0, 30.0, 80.0] {
            let a = bessel_k0(x);
            let b = k0_quadrature(x);
            assert!(((a - b) / b).abs() < 1e-13, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn k0_reference_values() {
        assert!((bessel_k0(1.0) - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!((2.0 / PI * bessel_k0(1.0) - 0.268_0).abs() < 1e-4);
        assert_eq!(bessel_k0(0.0), f64::INFINITY);
        assert!(bessel_k0(-1.0).is_nan());
    }

    #[test]
    fn k0_small_argument_log() {
        let x = 0.02_f64;
        let lead = -(0.5 * x).ln() - EULER_GAMMA;
        assert!(((bessel_k0(x) - lead) / lead).abs() < 1e-3);
    }

    #[test]
    fn gamma_values() {
        // Γ(1/6) = 6 ∫_0^∞ exp(-u^6) du, integrated with composite Simpson.
        let n = 20_000;
        let hi = 3.0;
        let h = hi / n as f64;
        let mut s = 1.0 + (-hi.powi(6)).exp();
        for i in 1..n {
            let u = i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * (-u.powi(6)).exp();
        }
        let oracle = 6.0 * s * h / 3.0;
        assert!((gamma(1.0 / 6.0) - oracle).abs() < 1e-11, "{} vs {oracle}", gamma(1.0 / 6.0));
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
    }
}
