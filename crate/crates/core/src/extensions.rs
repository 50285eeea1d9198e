//! Estimators built on the same minimum-of-cross-validation principle:
//! differential entropy, ∫f² on the circle, and ∫(f^{(r)})².

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cv::CvCriterion;
use crate::error::{check_positive, Error, Result};
use crate::kernels::VonMisesKernel;
use crate::normal;
use crate::optim::{CriterionCurve, LogSearch};
use crate::sample::{CircularSample, Sample};

/// Terms beyond this many bandwidths underflow to zero in double precision.
const UNDERFLOW: f64 = 39.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyHat {
    pub estimate: f64,
    pub g_lcv: f64,
    pub curve: CriterionCurve,
}

/// −n^{-1} Σ_i log f̂_{−i}(X_i; g), or +∞ if some leave-one-out density is 0.
pub fn entropy_lcv(sorted: &[f64], g: f64) -> f64 {
    let n = sorted.len();
    let cut = UNDERFLOW * g;
    let inv = 1.0 / g;
    let mut acc = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sorted[j] - sorted[i];
            if d > cut {
                break;
            }
            let z = d * inv;
            let k = (-0.5 * z * z).exp();
            acc[i] += k;
            acc[j] += k;
        }
    }
    let norm = normal::INV_SQRT_2PI / ((n - 1) as f64 * g);
    let mut total = 0.0;
    for a in acc {
        let f = a * norm;
        if f <= 0.0 {
            return f64::INFINITY;
        }
        total += f.ln();
    }
    -total / n as f64
}

/// Ĥ = min_g of the likelihood cross-validation criterion.
pub fn entropy_hat(s: &Sample) -> Result<EntropyHat> {
    s.require_spread()?;
    let sorted = s.sorted();
    let search = CvCriterion::new(s).search().expect("spread was checked");
    let curve = search.minimize("likelihood CV", |g| entropy_lcv(&sorted, g))?;
    Ok(EntropyHat { estimate: curve.min_value(), g_lcv: curve.argmin(), curve })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularPsiHat {
    pub estimate: f64,
    pub nu_cv: f64,
    pub curve: CriterionCurve,
}

/// Trigonometric moments |Σ_j e^{ikΘ_j}|², extended on demand.
struct TrigMoments<'a> {
    angles: &'a [f64],
    power: Vec<f64>,
}

impl<'a> TrigMoments<'a> {
    fn new(angles: &'a [f64]) -> Self {
        let n = angles.len() as f64;
        TrigMoments { angles, power: vec![n * n] }
    }

    fn upto(&mut self, kmax: usize) -> &[f64] {
        for k in self.power.len()..=kmax {
            let (mut c, mut s) = (0.0, 0.0);
            for &t in self.angles {
                let (sk, ck) = (k as f64 * t).sin_cos();
                c += ck;
                s += sk;
            }
            self.power.push(c * c + s * s);
        }
        &self.power[..=kmax]
    }
}

/// CV(ν) = ∫ f̂² − 2n^{-1} Σ_i f̂_{−i}(Θ_i), evaluated through Fourier series:
/// ∫ f̂² = (2πn²)^{-1} Σ_k ρ_k² |c_k|² and Σ_{i≠j} K_ν(Θ_i − Θ_j) = (2π)^{-1} Σ_k ρ_k (|c_k|² − n).
fn circular_cv_fourier(moments: &mut TrigMoments, nu: f64) -> f64 {
    let k = VonMisesKernel::new(nu).expect("search keeps ν positive");
    let kmax = k.fourier_cutoff();
    let rho = k.fourier(kmax);
    let n = moments.angles.len() as f64;
    let pw = moments.upto(kmax);
    let (mut sq, mut off) = (0.0, 0.0);
    for j in (1..=kmax).rev() {
        sq += rho[j] * rho[j] * pw[j];
        off += rho[j] * (pw[j] - n);
    }
    let tau = std::f64::consts::TAU;
    let int_sq = (n * n + 2.0 * sq) / (tau * n * n);
    let loo = (n * n - n + 2.0 * off) / (tau * n * (n - 1.0));
    int_sq - 2.0 * loo
}

pub fn circular_cv(s: &CircularSample, nu: f64) -> Result<f64> {
    check_positive("concentration", nu)?;
    Ok(circular_cv_fourier(&mut TrigMoments::new(s.angles()), nu))
}

/// The same criterion from the closed-form convolution identity, O(n²).
pub fn circular_cv_direct(s: &CircularSample, nu: f64) -> Result<f64> {
    let k = VonMisesKernel::new(nu)?;
    let a = s.angles();
    let n = a.len() as f64;
    let (mut sq, mut off) = (0.0, 0.0);
    for i in 0..a.len() {
        sq += k.convolution_at(0.0);
        for j in 0..i {
            sq += 2.0 * k.convolution_at(a[i] - a[j]);
            off += 2.0 * k.eval(a[i] - a[j]);
        }
    }
    Ok(sq / (n * n) - 2.0 * off / (n * (n - 1.0)))
}

/// ∫₀^{2π} f̂(θ; ν)² dθ by the convolution identity.
pub fn circular_int_sq(s: &CircularSample, nu: f64) -> Result<f64> {
    let k = VonMisesKernel::new(nu)?;
    let a = s.angles();
    let n = a.len() as f64;
    let mut sq = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            sq += k.convolution_at(a[i] - a[j]);
        }
    }
    Ok(sq / (n * n))
}

/// ψ̂ = −min_ν CV(ν) on a log grid ν ∈ [0.1, n].
pub fn circular_psi_hat(s: &CircularSample) -> Result<CircularPsiHat> {
    let n = s.len() as f64;
    let mut moments = TrigMoments::new(s.angles());
    let curve = LogSearch::new(0.1, n.max(1.0), crate::cv::GRID_POINTS)
        .extend_up(2)
        .extend_down(4)
        .minimize("circular CV(ν)", |nu| circular_cv_fourier(&mut moments, nu))?;
    Ok(CircularPsiHat { estimate: -curve.min_value(), nu_cv: curve.argmin(), curve })
}

/// Draws from the von Mises distribution (Best–Fisher rejection sampler).
pub fn von_mises_sample(mu: f64, kappa: f64, n: usize, seed: u64) -> Result<CircularSample> {
    check_positive("concentration", kappa)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1: f64 = rng.gen();
        let z = (std::f64::consts::PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.gen();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen();
            let theta = if u3 > 0.5 { f.acos() } else { -f.acos() };
            out.push(mu + theta);
        }
    }
    CircularSample::new(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaHat {
    pub r: usize,
    pub estimate: f64,
    pub g_cv: f64,
    pub curve: CriterionCurve,
}

fn check_theta_order(r: usize) -> Result<()> {
    match r {
        0 => Err(Error::InvalidArgument("derivative order must be at least 1".into())),
        1 | 2 => Ok(()),
        _ => Err(Error::UnsupportedOrder { order: r, max: 2 }),
    }
}

/// R(f̂^{(r)}) = (−1)^r n^{-2} Σ_{i,j} (L*L)_g^{(2r)}(X_i − X_j).
fn int_sq_deriv(c: &CvCriterion, r: usize, g: f64) -> f64 {
    let n = c.n() as f64;
    let s = std::f64::consts::SQRT_2 * g;
    let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
    let q = 2 * r;
    let diag = n * normal::hermite_at_zero(q) * normal::INV_SQRT_2PI / s.powi(q as i32 + 1);
    sign * (diag + 2.0 * c.pairs().offdiag(s, q)) / (n * n)
}

/// CV_r(g) = R(f̂^{(r)}) − 2(−1)^r {n(n−1)}^{-1} Σ_{i≠j} L_g^{(2r)}(X_i − X_j).
fn cv_r_with(c: &CvCriterion, r: usize, g: f64) -> f64 {
    let n = c.n() as f64;
    let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
    int_sq_deriv(c, r, g) - 2.0 * sign * 2.0 * c.pairs().offdiag(g, 2 * r) / (n * (n - 1.0))
}

pub fn kde_deriv_roughness(s: &Sample, r: usize, g: f64) -> Result<f64> {
    check_theta_order(r)?;
    check_positive("bandwidth", g)?;
    Ok(int_sq_deriv(&CvCriterion::new(s), r, g))
}

pub fn cv_r(s: &Sample, r: usize, g: f64) -> Result<f64> {
    check_theta_order(r)?;
    check_positive("bandwidth", g)?;
    Ok(cv_r_with(&CvCriterion::new(s), r, g))
}

/// θ̂_r = −min_g CV_r(g) for r ∈ {1, 2}.
pub fn theta_r_hat(s: &Sample, r: usize) -> Result<ThetaHat> {
    check_theta_order(r)?;
    s.require_spread()?;
    let c = CvCriterion::new(s);
    let curve = c.search().expect("spread was checked").minimize("CV_r(g)", |g| cv_r_with(&c, r, g))?;
    Ok(ThetaHat { r, estimate: -curve.min_value(), g_cv: curve.argmin(), curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::NormalMixture;
    use crate::quad;

    fn loo_direct(x: &[f64], g: f64) -> f64 {
        let n = x.len();
        let mut t = 0.0;
        for i in 0..n {
            let f: f64 = (0..n).filter(|&j| j != i).map(|j| normal::pdf_scaled(x[i] - x[j], g)).sum::<f64>() / (n - 1) as f64;
            t += f.ln();
        }
        -t / n as f64
    }

    #[test]
    fn entropy_criterion_matches_direct() {
        let s = NormalMixture::catalog(2).unwrap().sample(120, 5).unwrap();
        let sorted = s.sorted();
        for &g in &[0.05, 0.2, 0.9] {
            assert!((entropy_lcv(&sorted, g) - loo_direct(s.values(), g)).abs() < 1e-10);
        }
        let h = entropy_hat(&s).unwrap();
        assert!((h.estimate - loo_direct(s.values(), h.g_lcv)).abs() < 1e-10);
        assert!(entropy_lcv(&[0.0, 100.0], 1.0).is_infinite());
    }

    #[test]
    fn entropy_equivariance() {
        let s = NormalMixture::catalog(1).unwrap().sample(150, 8).unwrap();
        let h = entropy_hat(&s).unwrap().estimate;
        assert!((entropy_hat(&s.affine(1.0, 7.5)).unwrap().estimate - h).abs() < 1e-9);
        let a = 3.0;
        assert!((entropy_hat(&s.affine(a, 0.0)).unwrap().estimate - (h + a.ln())).abs() < 1e-9);
    }

    #[test]
    fn circular_routes_agree() {
        let s = von_mises_sample(1.0, 2.0, 60, 3).unwrap();
        for &nu in &[0.5, 5.0, 50.0] {
            let a = circular_cv(&s, nu).unwrap();
            let b = circular_cv_direct(&s, nu).unwrap();
            assert!((a - b).abs() < 1e-12, "nu={nu}: {a} vs {b}");
            let k = VonMisesKernel::new(nu).unwrap();
            let n = s.len() as f64;
            let fhat = |t: f64| s.angles().iter().map(|a| k.eval(t - a)).sum::<f64>() / n;
            let trap = quad::periodic_trapezoid(&|t| fhat(t).powi(2), 0.0, std::f64::consts::TAU, 2048);
            assert!((circular_int_sq(&s, nu).unwrap() - trap).abs() < 1e-8);
        }
    }

    #[test]
    fn circular_rotation_invariance() {
        let s = von_mises_sample(0.0, 1.0, 80, 4).unwrap();
        let a = circular_psi_hat(&s).unwrap().estimate;
        let b = circular_psi_hat(&s.rotated(2.2)).unwrap().estimate;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn von_mises_sampler_mean_resultant() {
        let kappa = 2.0;
        let s = von_mises_sample(0.5, kappa, 20000, 1).unwrap();
        let n = s.len() as f64;
        let c: f64 = s.angles().iter().map(|t| (t - 0.5).cos()).sum::<f64>() / n;
        let a1 = crate::bessel::ratios(kappa, 1)[1];
        assert!((c - a1).abs() < 0.01);
    }

    #[test]
    fn derivative_roughness_against_quadrature() {
        let s = NormalMixture::catalog(1).unwrap().sample(40, 2).unwrap();
        let n = s.len() as f64;
        for r in 1..=2 {
            for &g in &[0.3, 0.8] {
                let d = |x: f64| s.values().iter().map(|xi| normal::pdf_deriv_scaled(x - xi, g, r)).sum::<f64>() / n;
                let num = quad::integrate(&|x| d(x).powi(2), -15.0, 15.0, 1e-12);
                let an = kde_deriv_roughness(&s, r, g).unwrap();
                assert!((an - num).abs() < 1e-7 * an.abs().max(1.0), "r={r} g={g}");
            }
        }
        assert!(matches!(cv_r(&s, 3, 1.0), Err(Error::UnsupportedOrder { order: 3, max: 2 })));
        assert!(cv_r(&s, 0, 1.0).is_err());
    }
}
