//! Plug-in kernel estimators of ∫f² used as benchmarks: the two-stage direct
//! plug-in rule of Jones and Sheather (1991) and the two-stage
//! solve-the-equation rule of Sheather, Hettmansperger and Donald (1994).
//!
//! Both estimate ψ_r = ∫f^{(r)}f by the diagonals-in statistic
//! ψ̂_r(g) = n^{-2} Σ_{i,j} φ_g^{(r)}(X_i − X_j), with the AMSE bandwidth
//! g_r = [2φ^{(r)}(0) / (−ψ_{r+2} n)]^{1/(r+3)} fed by a normal-scale start.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::optim::bisect_log;
use crate::pairsum::PairSums;
use crate::sample::Sample;

/// Step of a plug-in rule, kept for inspection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlugInTrace {
    pub method: String,
    pub scale: f64,
    /// (g₁, g₂): pilot bandwidth for ψ₂ and the final bandwidth.
    pub bandwidths: (f64, f64),
    /// Higher-order estimate used at the pilot stage (ψ₄ from the normal
    /// scale for JS, the kernel estimate of ψ₄ for SHD).
    pub psi_higher: f64,
    pub psi2: f64,
    pub estimate: f64,
    /// Set when a stage had to fall back to a simpler rule.
    pub fallback: Option<String>,
}

/// ψ_r for N(0, σ²): (−1)^{r/2} r! / ((2σ)^{r+1} (r/2)! √π).
pub fn psi_normal_scale(r: usize, sigma: f64) -> f64 {
    assert!(r.is_multiple_of(2), "normal-scale functional needs an even order");
    let half = r / 2;
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let sign = if half.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * fact(r) / ((2.0 * sigma).powi(r as i32 + 1) * fact(half) * normal::SQRT_PI)
}

/// AMSE-optimal bandwidth for ψ̂_r given a value of ψ_{r+2}.
pub fn amse_bandwidth(r: usize, psi_next: f64, n: usize) -> f64 {
    let num = 2.0 * normal::pdf_deriv_scaled(0.0, 1.0, r);
    (num / (-psi_next * n as f64)).powf(1.0 / (r as f64 + 3.0))
}

/// min(SD, IQR/1.349), or the SD alone when the IQR vanishes.
pub fn robust_scale(s: &Sample) -> f64 {
    let sd = s.sd();
    let iqr = s.iqr() / 1.349;
    if iqr > 0.0 {
        sd.min(iqr)
    } else {
        sd
    }
}

/// ψ̂_r(g) with the diagonal terms included.
pub fn psi_r_hat(p: &PairSums, r: usize, g: f64) -> f64 {
    let n = p.n() as f64;
    (n * normal::pdf_deriv_scaled(0.0, g, r) + 2.0 * p.offdiag(g, r)) / (n * n)
}

fn final_bandwidth(psi2: f64, n: usize) -> f64 {
    amse_bandwidth(0, psi2, n)
}

fn js_with(p: &PairSums, sigma: f64) -> PlugInTrace {
    let n = p.n();
    let psi4 = psi_normal_scale(4, sigma);
    let g1 = amse_bandwidth(2, psi4, n);
    let mut psi2 = psi_r_hat(p, 2, g1);
    let mut fallback = None;
    if psi2 >= 0.0 {
        psi2 = psi_normal_scale(2, sigma);
        fallback = Some("psi2 estimate not negative; normal scale used".to_string());
    }
    let g2 = final_bandwidth(psi2, n);
    PlugInTrace {
        method: "js".into(),
        scale: sigma,
        bandwidths: (g1, g2),
        psi_higher: psi4,
        psi2,
        estimate: psi_r_hat(p, 0, g2),
        fallback,
    }
}

/// Two-stage direct plug-in estimate.
pub fn psi_js(s: &Sample) -> Result<PlugInTrace> {
    s.require_spread()?;
    let p = PairSums::new(s.values());
    Ok(js_with(&p, robust_scale(s)))
}

/// Bracket for the solve-the-equation root, as multiples of σ̂.
pub const SHD_BRACKET: (f64, f64) = (1e-4, 1e2);
const SHD_TOL: f64 = 1e-12;

/// Two-stage solve-the-equation estimate.
///
/// The pilot for ψ₂ is tied to the final bandwidth by
/// γ(g) = [−ψ̂₂(a)/ψ̂₄(b)]^{1/5} g^{3/5}, where a and b are the normal-scale
/// AMSE bandwidths for ψ₂ and ψ₄. The equation
/// g = [2φ(0) / (−ψ̂₂(γ(g)) n)]^{1/3} is solved by bisection in log g.
pub fn psi_shd(s: &Sample) -> Result<PlugInTrace> {
    s.require_spread()?;
    let p = PairSums::new(s.values());
    let sigma = robust_scale(s);
    let n = p.n();
    let a = amse_bandwidth(2, psi_normal_scale(4, sigma), n);
    let b = amse_bandwidth(4, psi_normal_scale(6, sigma), n);
    let psi2_a = psi_r_hat(&p, 2, a);
    let psi4_b = psi_r_hat(&p, 4, b);
    let js = || {
        let mut t = js_with(&p, sigma);
        t.method = "shd".into();
        t
    };
    if !(psi2_a < 0.0 && psi4_b > 0.0) {
        let mut t = js();
        t.fallback = Some("pilot estimates have the wrong sign; JS bandwidth used".into());
        return Ok(t);
    }
    let ratio = (-psi2_a / psi4_b).powf(0.2);
    let gamma = |g: f64| ratio * g.powf(0.6);
    let residual = |g: f64| {
        let psi2 = psi_r_hat(&p, 2, gamma(g));
        if psi2 >= 0.0 {
            return -f64::MAX;
        }
        g.ln() - final_bandwidth(psi2, n).ln()
    };
    let root = bisect_log(residual, SHD_BRACKET.0 * sigma, SHD_BRACKET.1 * sigma, SHD_TOL);
    let Some(g) = root else {
        let mut t = js();
        t.fallback = Some("no sign change in the bracket; JS bandwidth used".into());
        return Ok(t);
    };
    let psi2 = psi_r_hat(&p, 2, gamma(g));
    if psi2.is_nan() || psi2 >= 0.0 {
        return Err(Error::NumericFailure("solve-the-equation root has a non-negative pilot".into()));
    }
    Ok(PlugInTrace {
        method: "shd".into(),
        scale: sigma,
        bandwidths: (gamma(g), g),
        psi_higher: psi4_b,
        psi2,
        estimate: psi_r_hat(&p, 0, g),
        fallback: None,
    })
}

/// |g − [2φ(0)/(−ψ̂₂(g₁) n)]^{1/3}| / g for a completed SHD trace.
pub fn shd_relative_residual(s: &Sample, trace: &PlugInTrace) -> f64 {
    let p = PairSums::new(s.values());
    let (g1, g) = trace.bandwidths;
    let target = final_bandwidth(psi_r_hat(&p, 2, g1), p.n());
    (g - target).abs() / g
}
