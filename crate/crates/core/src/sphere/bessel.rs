use crate::{Error, Result};
use std::f64::consts::PI;

/// Gamma function via the Lanczos approximation (g = 7, 9 terms).
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
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
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Bessel function of the first kind `J_ν(x)` for `ν > -1`, `x >= 0`.
///
/// Power series; accurate to near machine precision for the moderate
/// arguments (`x` up to ~20) used here.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let h = 0.5 * x;
    let mut term = h.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let q = -h * h;
    for k in 1..300 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && kf > h {
            break;
        }
    }
    sum
}

/// First positive zero `j_{ν,1}` of `J_ν`.
pub fn bessel_first_zero(nu: f64) -> Result<f64> {
    if nu <= -1.0 {
        return Err(Error::InvalidArgument(format!("bessel order {nu} must exceed -1")));
    }
    let step = 0.05;
    let mut a = step;
    let mut fa = bessel_j(nu, a);
    let limit = nu + 20.0;
    while a < limit {
        let b = a + step;
        let fb = bessel_j(nu, b);
        if fa * fb <= 0.0 {
            let (mut lo, mut hi) = (a, b);
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                if bessel_j(nu, mid) * fa > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoBracket(format!("no zero of J_{nu} below {limit}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-12);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn half_integer_closed_forms() {
        // J_{1/2}(x) = sqrt(2/(πx)) sin x
        for x in [0.3, 1.7, 4.2, 9.0] {
            let exact = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((bessel_j(0.5, x) - exact).abs() < 1e-13);
            let exact = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            assert!((bessel_j(1.5, x) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn known_zeros() {
        assert!((bessel_first_zero(0.0).unwrap() - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_first_zero(0.5).unwrap() - PI).abs() < 1e-12);
        assert!((bessel_first_zero(1.0).unwrap() - 3.831_705_970_207_512).abs() < 1e-12);
        assert!(bessel_first_zero(-1.0).is_err());
    }
}
