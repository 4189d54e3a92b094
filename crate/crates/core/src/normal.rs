//! Standard normal density and quantile, plus the t(3) quantile used by the
//! simulation truth. The quantile is Wichura's AS 241 (PPND16) rational
//! approximation, accurate to ~1e-15 over (0,1).

const SQRT_2PI: f64 = 2.5066282746310005024;

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal quantile (inverse CDF). Panics if `p` is not in (0,1).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile: p={p} not in (0,1)");

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }

    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

fn poly(coef: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coef.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

// AS 241 PPND16 coefficients. Denominator polynomials carry an implicit
// leading 1 coefficient.
const A: [f64; 8] = [
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
];
const B: [f64; 8] = [
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
];
const C: [f64; 8] = [
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
];
const D: [f64; 8] = [
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
];
const E: [f64; 8] = [
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
];
const F: [f64; 8] = [
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-6,
    1.42151175831644588870e-9,
    2.04426310338993978564e-15,
];

/// CDF of the t distribution with 3 degrees of freedom (closed form).
pub fn t3_cdf(x: f64) -> f64 {
    use std::f64::consts::PI;
    let s = x / 3f64.sqrt();
    0.5 + (s / (1.0 + s * s) + s.atan()) / PI
}

/// Quantile of the t distribution with 3 degrees of freedom, by monotone
/// bisection + Newton on the closed-form CDF.
pub fn t3_quantile(p: f64) -> f64 {
    use std::f64::consts::PI;
    assert!(p > 0.0 && p < 1.0, "t3_quantile: p={p} not in (0,1)");
    if (p - 0.5).abs() < 1e-300 {
        return 0.0;
    }
    // density of t(3)
    let pdf = |x: f64| {
        let z = 1.0 + x * x / 3.0;
        2.0 / (PI * 3f64.sqrt() * z * z)
    };
    let (mut lo, mut hi) = (-1e8, 1e8);
    let mut x = normal_quantile(p); // warm start
    for _ in 0..200 {
        let f = t3_cdf(x) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = f / pdf(x).max(1e-300);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}
