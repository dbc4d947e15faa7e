//! Closed-form roots of a monic real cubic `x^3 + a x^2 + b x + c`.
//!
//! Coefficients are rescaled to order one before the depressed-cubic step so
//! the discriminant test is meaningful for rates of order 1e6 rad/s. Simple
//! roots get a Newton polish on the original polynomial.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// A real root with its multiplicity (1, 2 or 3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: f64,
    pub multiplicity: u8,
}

/// Relative discriminant band inside which roots are reported as repeated.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

#[inline]
pub fn eval(a: f64, b: f64, c: f64, x: f64) -> f64 {
    ((x + a) * x + b) * x + c
}

#[inline]
fn deriv(a: f64, b: f64, x: f64) -> f64 {
    (3.0 * x + 2.0 * a) * x + b
}

/// Typical magnitude of the roots, used for scaling and residual checks.
pub fn scale(a: f64, b: f64, c: f64) -> f64 {
    a.abs().max(b.abs().sqrt()).max(c.abs().cbrt())
}

fn polish(a: f64, b: f64, c: f64, mut x: f64) -> f64 {
    for _ in 0..4 {
        let d = deriv(a, b, x);
        if d == 0.0 {
            break;
        }
        let step = eval(a, b, c, x) / d;
        let next = x - step;
        if !next.is_finite() || eval(a, b, c, next).abs() > eval(a, b, c, x).abs() {
            break;
        }
        x = next;
        if step.abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

/// All real roots, ascending. Repeated roots appear once.
pub fn real_roots(a: f64, b: f64, c: f64) -> Vec<Root> {
    let s = scale(a, b, c);
    if s == 0.0 {
        return vec![Root { value: 0.0, multiplicity: 3 }];
    }
    let (an, bn, cn) = (a / s, b / (s * s), c / (s * s * s));
    let shift = an / 3.0;
    let p = bn - an * an / 3.0;
    let q = 2.0 * an * an * an / 27.0 - an * bn / 3.0 + cn;
    let d4 = 4.0 * p * p * p;
    let d27 = 27.0 * q * q;
    let disc = d4 + d27;
    let mag = d4.abs() + d27;

    let mut roots: Vec<Root> = if mag == 0.0 || p.abs() < 1e-300 && q.abs() < 1e-300 {
        vec![Root { value: -shift, multiplicity: 3 }]
    } else if disc.abs() <= DISCRIMINANT_TOL * mag {
        if p.abs() < 1e-10 {
            vec![Root { value: -shift, multiplicity: 3 }]
        } else {
            let simple = 3.0 * q / p - shift;
            let double = -1.5 * q / p - shift;
            vec![Root { value: simple, multiplicity: 1 }, Root { value: double, multiplicity: 2 }]
        }
    } else if disc < 0.0 {
        let r = 2.0 * (-p / 3.0).sqrt();
        // cos(3 theta) = (3q / 2p) sqrt(-3/p)
        let arg = (1.5 * q / p * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| Root { value: r * (theta - TAU * k as f64 / 3.0).cos() - shift, multiplicity: 1 })
            .collect()
    } else {
        let sq = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        vec![Root { value: u + v - shift, multiplicity: 1 }]
    };

    for r in roots.iter_mut() {
        r.value *= s;
        if r.multiplicity == 1 {
            r.value = polish(a, b, c, r.value);
        }
    }
    roots.sort_by(|x, y| x.value.total_cmp(&y.value));
    roots
}

/// All three complex roots. One real root is found in closed form, the other
/// two come from the deflated quadratic.
pub fn complex_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let reals = real_roots(a, b, c);
    // Deflate by the real root of largest magnitude for stability.
    let r = reals.iter().map(|x| x.value).max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap_or(0.0);
    let b1 = a + r;
    let c1 = if r != 0.0 { -c / r } else { b + r * b1 };
    let disc = b1 * b1 - 4.0 * c1;
    let (z1, z2) = if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = -0.5 * (b1 + if b1 >= 0.0 { sq } else { -sq });
        if q == 0.0 {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (Complex64::new(q, 0.0), Complex64::new(c1 / q, 0.0))
        }
    } else {
        let im = (-disc).sqrt() / 2.0;
        (Complex64::new(-b1 / 2.0, im), Complex64::new(-b1 / 2.0, -im))
    };
    [Complex64::new(r, 0.0), z1, z2]
}
