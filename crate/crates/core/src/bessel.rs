//! Modified Bessel function of the first kind, order zero.

const SWITCH: f64 = 15.0;

/// Power series; all terms positive, so no cancellation.
fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// e^{-x} I₀(x) from the large-argument expansion, truncated at its smallest term.
fn i0e_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if next.abs() >= term.abs() || next < 1e-17 * sum {
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    sum / (std::f64::consts::TAU * x).sqrt()
}

pub fn i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SWITCH {
        i0_series(x)
    } else {
        i0e_asymptotic(x) * x.exp()
    }
}

/// Exponentially scaled e^{-|x|} I₀(x); finite for every finite x.
pub fn i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= SWITCH {
        i0_series(x) * (-x).exp()
    } else {
        i0e_asymptotic(x)
    }
}

pub fn ln_i0(x: f64) -> f64 {
    x.abs() + i0e(x).ln()
}

/// Ratios I_k(ν)/I₀(ν) for k = 0..=kmax by backward recurrence on
/// r_k = I_k/I_{k−1} = 1/(2k/ν + r_{k+1}), started well above kmax.
pub fn ratios(nu: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    out[0] = 1.0;
    if kmax == 0 || nu == 0.0 {
        return out;
    }
    let start = kmax.max((92.0 * nu).sqrt().ceil() as usize) + 40;
    let mut r = 0.0;
    let mut rs = vec![0.0; kmax + 1];
    for k in (1..=start).rev() {
        r = 1.0 / (2.0 * k as f64 / nu + r);
        if k <= kmax {
            rs[k] = r;
        }
    }
    for k in 1..=kmax {
        out[k] = out[k - 1] * rs[k];
    }
    out
}
