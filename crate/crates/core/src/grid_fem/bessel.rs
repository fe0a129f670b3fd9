use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Modified Bessel function of the second kind, order zero.
///
/// Power series for `z <= 2`; Steed's continued fraction (the `K_ν`
/// branch of the Temme/Steed scheme) for `z > 2`. Both reach close to
/// machine precision; the result underflows to 0 beyond `z ≈ 745`.
pub fn bessel_k0(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("K0 requires a finite positive argument, got {z}")));
    }
    Ok(if z <= 2.0 { k0_series(z) } else { k_continued_fraction(z).0 })
}

/// Modified Bessel function of the second kind, order one. Same scheme as
/// [`bessel_k0`].
pub fn bessel_k1(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("K1 requires a finite positive argument, got {z}")));
    }
    Ok(if z <= 2.0 { k1_series(z) } else { k_continued_fraction(z).1 })
}

fn k0_series(z: f64) -> f64 {
    let y = 0.25 * z * z;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut tail = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -((0.5 * z).ln() + EULER_GAMMA) * i0 + tail
}

fn k1_series(z: f64) -> f64 {
    let y = 0.25 * z * z;
    // term_k = y^k / (k! (k+1)!), digamma(k+1) = -γ + H_k
    let mut term = 1.0;
    let mut h_k = 0.0;
    let mut h_k1 = 1.0;
    let mut i1 = 1.0;
    let mut tail = (-2.0 * EULER_GAMMA + h_k + h_k1) * term;
    for k in 1..60 {
        let kf = k as f64;
        term *= y / (kf * (kf + 1.0));
        h_k += 1.0 / kf;
        h_k1 += 1.0 / (kf + 1.0);
        i1 += term;
        tail += (-2.0 * EULER_GAMMA + h_k + h_k1) * term;
        if term < 1e-18 * i1 {
            break;
        }
    }
    1.0 / z + (0.5 * z).ln() * 0.5 * z * i1 - 0.25 * z * tail
}

/// `(K0(x), K1(x))` by Steed's continued fraction.
fn k_continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
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
        delh *= b * d - 1.0 ;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    (k0, k0 * (x + 0.5 - a1 * h) / x)
}
