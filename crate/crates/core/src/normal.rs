//! Standard normal density, distribution function and Hermite polynomials.

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub const SQRT_PI: f64 = 1.772_453_850_905_516;

#[inline]
pub fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Density of N(0, s²) at x.
#[inline]
pub fn pdf_scaled(x: f64, s: f64) -> f64 {
    pdf(x / s) / s
}

pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail 1 − Φ(z), accurate for large z.
pub fn sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// P(a ≤ Z < b) without cancellation in either tail.
pub fn interval_prob(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        cdf(b) - cdf(a)
    } else {
        1.0 - cdf(a) - sf(b)
    }
}

/// Probabilists' Hermite polynomials He_0..=He_r at z.
pub fn hermite_all(r: usize, z: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if r >= 1 {
        out[1] = z;
    }
    for k in 2..=r {
        out[k] = z * out[k - 1] - (k - 1) as f64 * out[k - 2];
    }
}

pub fn hermite(r: usize, z: f64) -> f64 {
    let (mut a, mut b) = (1.0, z);
    if r == 0 {
        return a;
    }
    for k in 2..=r {
        let c = z * b - (k - 1) as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// r-th derivative of the N(0, s²) density at x.
pub fn pdf_deriv_scaled(x: f64, s: f64, r: usize) -> f64 {
    let z = x / s;
    let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * hermite(r, z) * pdf(z) / s.powi(r as i32 + 1)
}

/// He_{2k}(0) = (−1)^k (2k−1)!!; odd orders vanish.
pub fn hermite_at_zero(r: usize) -> f64 {
    if r % 2 == 1 {
        return 0.0;
    }
    let mut v = 1.0;
    let mut k = 1;
    while k < r {
        v *= k as f64;
        k += 2;
    }
    if (r / 2) % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Density of N(0, v) at x, parameterised by the variance.
#[inline]
pub fn pdf_var(x: f64, v: f64) -> f64 {
    (-0.5 * x * x / v).exp() / (std::f64::consts::TAU * v).sqrt()
}

/// ∫ N(x; m1, v1) N(x; m2, v2) N(x; m3, v3) dx, reducing the first pair to a
/// single Gaussian and integrating it against the third.
pub fn triple_product_integral(m1: f64, v1: f64, m2: f64, v2: f64, m3: f64, v3: f64) -> f64 {
    let v12 = v1 + v2;
    let m = (m1 * v2 + m2 * v1) / v12;
    let v = v1 * v2 / v12;
    pdf_var(m1 - m2, v12) * pdf_var(m - m3, v + v3)
}
