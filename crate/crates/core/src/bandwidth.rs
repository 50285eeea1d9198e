//! Bandwidth selection without pilot parameters: a smoothed cross-validation
//! selector for the kernel density estimate (nested optimization) and
//! cross-validation selectors for the histogram.

use serde::{Deserialize, Serialize};

use crate::cv::{CvCriterion, ROUGHNESS_L};
use crate::error::{check_positive, Error, Result};
use crate::kernels::{DiracTag, GaussianComb};
use crate::optim::{CriterionCurve, LogSearch};
use crate::sample::Sample;

/// α = Gaussian part + optional Dirac delta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaComb {
    pub gaussian: GaussianComb,
    pub dirac: DiracTag,
}

impl AlphaComb {
    /// α_h = (K*K)_h − 2K_h + K₀ for the standard normal K.
    pub fn scv(h: f64) -> Result<Self> {
        check_positive("bandwidth", h)?;
        Ok(AlphaComb {
            gaussian: GaussianComb::atom(1.0, std::f64::consts::SQRT_2 * h) - GaussianComb::atom(2.0, h),
            dirac: DiracTag { present: true },
        })
    }

    /// α = K₀ alone, for which ψ_α = ψ.
    pub fn dirac() -> Self {
        AlphaComb { gaussian: GaussianComb::default(), dirac: DiracTag { present: true } }
    }

    pub fn convolve(&self, comb: &GaussianComb) -> GaussianComb {
        self.gaussian.convolve(comb) + self.dirac.convolve(comb)
    }

    pub fn char_fn(&self, t: f64) -> f64 {
        self.gaussian.char_fn(t) + if self.dirac.present { 1.0 } else { 0.0 }
    }
}

/// 2{n(n−1)}^{-1} Σ_{i≠j} (α*L_g)(X_i−X_j) − n^{-2} Σ_{i,j} {α*(L*L)_g}(X_i−X_j).
pub fn psi_alpha_criterion(c: &CvCriterion, alpha: &AlphaComb, g: f64) -> f64 {
    let n = c.n() as f64;
    let al = alpha.convolve(&GaussianComb::atom(1.0, g));
    let an = alpha.convolve(&GaussianComb::atom(1.0, std::f64::consts::SQRT_2 * g));
    let off_l = c.pairs().comb(&al, 0);
    let off_n = c.pairs().comb(&an, 0);
    4.0 * off_l / (n * (n - 1.0)) - (n * an.eval(0.0) + 2.0 * off_n) / (n * n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiAlphaHat {
    pub estimate: f64,
    pub g_inner: f64,
    pub curve: CriterionCurve,
}

fn psi_alpha_with(c: &CvCriterion, alpha: &AlphaComb) -> Result<PsiAlphaHat> {
    let search = c.search().ok_or_else(|| Error::DegenerateSample("all observations are identical".into()))?;
    let curve = search.minimize("inner SCV criterion", |g| -psi_alpha_criterion(c, alpha, g))?;
    Ok(PsiAlphaHat { estimate: -curve.min_value(), g_inner: curve.argmin(), curve })
}

/// ψ̂_α = max_g of [`psi_alpha_criterion`].
pub fn psi_alpha_hat(s: &Sample, alpha: &AlphaComb) -> Result<PsiAlphaHat> {
    s.require_spread()?;
    psi_alpha_with(&CvCriterion::new(s), alpha)
}

pub fn psi_alpha_h_hat(s: &Sample, h: f64) -> Result<PsiAlphaHat> {
    psi_alpha_hat(s, &AlphaComb::scv(h)?)
}

/// M̂(h) = R(K)/(nh) + ψ̂_{α_h}.
pub fn m_hat(s: &Sample, h: f64) -> Result<f64> {
    let inner = psi_alpha_h_hat(s, h)?;
    Ok(ROUGHNESS_L / (s.len() as f64 * h) + inner.estimate)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HHat {
    pub bandwidth: f64,
    pub criterion_min: f64,
    pub curve: CriterionCurve,
    /// Inner maximizer g at every outer evaluation, in evaluation order.
    pub inner: Vec<(f64, f64)>,
}

/// ĥ = argmin_h M̂(h). The outer grid spans [σ̂/n, 2σ̂]; every outer point runs
/// the full inner grid search.
pub fn h_hat(s: &Sample) -> Result<HHat> {
    s.require_spread()?;
    let c = CvCriterion::new(s);
    let n = s.len() as f64;
    let sd = s.sd();
    let mut inner = Vec::new();
    let mut err = None;
    let curve = LogSearch::new(sd / n, 2.0 * sd, 60).minimize("SCV M(h)", |h| {
        let alpha = AlphaComb::scv(h).expect("outer grid is positive");
        match psi_alpha_with(&c, &alpha) {
            Ok(p) => {
                inner.push((h, p.g_inner));
                ROUGHNESS_L / (n * h) + p.estimate
            }
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(HHat { bandwidth: curve.argmin(), criterion_min: curve.min_value(), curve, inner })
}

/// Occupied cells [kb, (k+1)b) with their counts, in increasing k.
pub fn hist_counts(sorted: &[f64], b: f64) -> Vec<(i64, u64)> {
    let mut out: Vec<(i64, u64)> = Vec::new();
    for &x in sorted {
        let k = (x / b).floor() as i64;
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += 1,
            _ => out.push((k, 1)),
        }
    }
    out
}

fn sum_sq_counts(sorted: &[f64], b: f64) -> f64 {
    hist_counts(sorted, b).iter().map(|&(_, c)| (c * c) as f64).sum()
}

/// CV(b) = 2/{(n−1)b} − (n+1)/{n²(n−1)b} Σ_k ν_k².
pub fn hist_cv(s: &Sample, b: f64) -> Result<f64> {
    check_positive("binwidth", b)?;
    Ok(hist_cv_sorted(&s.sorted(), b))
}

fn hist_cv_sorted(sorted: &[f64], b: f64) -> f64 {
    let n = sorted.len() as f64;
    2.0 / ((n - 1.0) * b) - (n + 1.0) / (n * n * (n - 1.0) * b) * sum_sq_counts(sorted, b)
}

/// V(b) = (n²b)^{-1} Σ_k ν_k².
pub fn hist_v(s: &Sample, b: f64) -> Result<f64> {
    check_positive("binwidth", b)?;
    let n = s.len() as f64;
    Ok(sum_sq_counts(&s.sorted(), b) / (n * n * b))
}

/// U(b) = (n²b)^{-1} Σ_{i≠j} 1{X_i, X_j in the same cell}.
pub fn hist_u(s: &Sample, b: f64) -> Result<f64> {
    check_positive("binwidth", b)?;
    let n = s.len() as f64;
    let sorted = s.sorted();
    let same: u64 = hist_counts(&sorted, b).iter().map(|&(_, c)| c * (c - 1)).sum();
    Ok(same as f64 / (n * n * b))
}

fn hist_search(s: &Sample) -> Result<LogSearch> {
    s.require_spread()?;
    let range = s.range();
    let n = s.len() as f64;
    Ok(LogSearch::new(range / (2.0 * n), range, crate::cv::GRID_POINTS).extend_up(2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistPsiBreve {
    pub estimate: f64,
    pub binwidth: f64,
    pub curve: CriterionCurve,
}

/// ψ̆ = −min_b CV(b).
pub fn hist_psi_breve(s: &Sample) -> Result<HistPsiBreve> {
    let sorted = s.sorted();
    let curve = hist_search(s)?.minimize("histogram CV(b)", |b| hist_cv_sorted(&sorted, b))?;
    Ok(HistPsiBreve { estimate: -curve.min_value(), binwidth: curve.argmin(), curve })
}

/// (V_b(c), U_b(c)) from the overlap lengths λ(B_k ∩ C_ℓ).
///
/// ∫_{B_k} f̃(·; c) = (nc)^{-1} Σ_ℓ ν_ℓ λ_kℓ, so V_b(c) = b^{-1}(nc)^{-2} Σ_k (Σ_ℓ ν_ℓ λ_kℓ)²;
/// removing the i = j terms leaves U_b(c) = V_b(c) − b^{-1}(nc)^{-2} Σ_k Σ_ℓ ν_ℓ λ_kℓ².
pub fn hist_smoothed_vu(sorted: &[f64], b: f64, c: f64) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mut cells: Vec<(i64, f64, f64)> = Vec::new();
    for (l, count) in hist_counts(sorted, c) {
        let (lo, hi) = (l as f64 * c, (l + 1) as f64 * c);
        let count = count as f64;
        let k0 = (lo / b).floor() as i64;
        let k1 = (hi / b).floor() as i64;
        for k in k0..=k1 {
            let lam = overlap(k as f64 * b, (k + 1) as f64 * b, lo, hi);
            if lam <= 0.0 {
                continue;
            }
            match cells.last_mut() {
                Some(last) if last.0 == k => {
                    last.1 += count * lam;
                    last.2 += count * lam * lam;
                }
                _ => cells.push((k, count * lam, count * lam * lam)),
            }
        }
    }
    let norm = 1.0 / (b * (n * c) * (n * c));
    let v: f64 = cells.iter().map(|&(_, a, _)| a * a).sum::<f64>() * norm;
    let diag: f64 = cells.iter().map(|&(_, _, d)| d).sum::<f64>() * norm;
    (v, v - diag)
}

/// Lebesgue measure of [a1, b1) ∩ [a2, b2).
pub fn overlap(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    (b1.min(b2) - a1.max(a2)).max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedProbs {
    /// Estimate of b^{-1} Σ_k p_k², clipped at 0.
    pub estimate: f64,
    pub pilot: f64,
    pub raw: f64,
}

/// max_c {2U_b(c) − V_b(c)} over the pilot binwidth c.
pub fn hist_scv_inner(s: &Sample, b: f64) -> Result<SmoothedProbs> {
    check_positive("binwidth", b)?;
    let sorted = s.sorted();
    scv_inner_sorted(s, &sorted, b)
}

fn scv_inner_sorted(s: &Sample, sorted: &[f64], b: f64) -> Result<SmoothedProbs> {
    let curve = hist_search(s)?.prefer_high().minimize("histogram pilot", |c| {
        let (v, u) = hist_smoothed_vu(sorted, b, c);
        v - 2.0 * u
    })?;
    let raw = -curve.min_value();
    Ok(SmoothedProbs { estimate: raw.max(0.0), pilot: curve.argmin(), raw })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistBinwidth {
    pub binwidth: f64,
    pub criterion_min: f64,
    pub curve: CriterionCurve,
}

/// Minimizes (nb)^{-1} − (n+1)/n · max_c{2U_b(c) − V_b(c)} over b.
pub fn hist_scv_binwidth(s: &Sample) -> Result<HistBinwidth> {
    let sorted = s.sorted();
    let n = s.len() as f64;
    let mut err = None;
    let curve = hist_search(s)?.minimize("histogram SCV(b)", |b| match scv_inner_sorted(s, &sorted, b) {
        Ok(p) => 1.0 / (n * b) - (n + 1.0) / n * p.estimate,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(HistBinwidth { binwidth: curve.argmin(), criterion_min: curve.min_value(), curve })
}

/// Minimizes CV(b) over b.
pub fn hist_cv_binwidth(s: &Sample) -> Result<HistBinwidth> {
    let p = hist_psi_breve(s)?;
    Ok(HistBinwidth { binwidth: p.binwidth, criterion_min: -p.estimate, curve: p.curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::NormalMixture;
    use crate::normal;
    use crate::quad;

    #[test]
    fn alpha_convolution_scales() {
        let (h, g) = (0.6, 0.4);
        let a = AlphaComb::scv(h).unwrap();
        let al = a.convolve(&GaussianComb::atom(1.0, g));
        let expect = |x: f64| {
            normal::pdf_scaled(x, (2.0 * h * h + g * g).sqrt()) - 2.0 * normal::pdf_scaled(x, (h * h + g * g).sqrt())
                + normal::pdf_scaled(x, g)
        };
        for &x in &[0.0, 0.3, 1.7] {
            assert!((al.eval(x) - expect(x)).abs() < 1e-14);
        }
        let an = a.convolve(&GaussianComb::atom(1.0, std::f64::consts::SQRT_2 * g));
        let kh = GaussianComb::atom(1.0, h);
        let num = |x: f64| {
            let lg = |t: f64| normal::pdf_scaled(t, std::f64::consts::SQRT_2 * g);
            let kk = kh.convolve(&kh);
            quad::integrate(&|t| (kk.eval(t) - 2.0 * kh.eval(t)) * lg(x - t), -20.0, 20.0, 1e-15) + lg(x)
        };
        for &x in &[0.0, 1.0] {
            assert!((an.eval(x) - num(x)).abs() < 1e-10);
        }
        for k in 0..200 {
            let t = k as f64 * 0.05;
            let phi_k = (-0.5 * (h * t).powi(2)).exp();
            assert!((a.char_fn(t) - (1.0 - phi_k).powi(2)).abs() < 1e-14);
            assert!(a.char_fn(t) >= -1e-15);
        }
        assert!(AlphaComb::scv(0.0).is_err());
    }

    #[test]
    fn alpha_two_point_value() {
        let s = Sample::new(vec![0.0, 1.0]).unwrap();
        let c = CvCriterion::new(&s);
        let (h, g) = (1.0f64, 1.0f64);
        let v = psi_alpha_criterion(&c, &AlphaComb::scv(h).unwrap(), g);
        let a = |x: f64, g2: f64| {
            normal::pdf_scaled(x, (2.0 * h * h + g2).sqrt()) - 2.0 * normal::pdf_scaled(x, (h * h + g2).sqrt())
                + normal::pdf_scaled(x, g2.sqrt())
        };
        let expect = 2.0 / 2.0 * 2.0 * a(1.0, g * g) - (2.0 * a(0.0, 2.0 * g * g) + 2.0 * a(1.0, 2.0 * g * g)) / 4.0;
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn dirac_alpha_reproduces_psi_hat() {
        let s = NormalMixture::catalog(1).unwrap().sample(150, 21).unwrap();
        let a = psi_alpha_hat(&s, &AlphaComb::dirac()).unwrap();
        let p = crate::cv::psi_hat(&s).unwrap();
        assert!((a.estimate - p.estimate).abs() < 1e-12);
    }

    #[test]
    fn histogram_reference_values() {
        let s = Sample::new(vec![0.1, 0.2]).unwrap();
        assert!((hist_cv(&s, 1.0).unwrap() + 1.0).abs() < 1e-15);
        let s = NormalMixture::catalog(1).unwrap().sample(50, 2).unwrap();
        for &b in &[0.1, 0.5, 1.3] {
            let v = hist_v(&s, b).unwrap();
            let u = hist_u(&s, b).unwrap();
            assert!((v - (u + 1.0 / (50.0 * b))).abs() < 1e-12);
        }
    }

    #[test]
    fn aligned_pilot_reduces_to_plain_v() {
        let s = NormalMixture::catalog(1).unwrap().sample(60, 4).unwrap();
        let sorted = s.sorted();
        for &b in &[0.25, 0.5, 1.0] {
            let (v, u) = hist_smoothed_vu(&sorted, b, b);
            assert!((v - hist_v(&s, b).unwrap()).abs() < 1e-12);
            assert!((u - hist_u(&s, b).unwrap()).abs() < 1e-12);
        }
    }

    fn naive_vu(x: &[f64], b: f64, c: f64) -> (f64, f64) {
        let n = x.len() as f64;
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ks = ((lo - 2.0 * c) / b).floor() as i64..=((hi + 2.0 * c) / b).floor() as i64;
        let (mut v, mut u) = (0.0, 0.0);
        for (i, &xi) in x.iter().enumerate() {
            for (j, &xj) in x.iter().enumerate() {
                let li = (xi / c).floor();
                let lj = (xj / c).floor();
                let mut t = 0.0;
                for k in ks.clone() {
                    let (a, e) = (k as f64 * b, (k + 1) as f64 * b);
                    t += overlap(a, e, li * c, (li + 1.0) * c) * overlap(a, e, lj * c, (lj + 1.0) * c);
                }
                v += t;
                if i != j {
                    u += t;
                }
            }
        }
        let norm = 1.0 / (b * (n * c).powi(2));
        (v * norm, u * norm)
    }

    #[test]
    fn smoothed_statistics_match_naive_triple_sum() {
        let x = [-1.3, -0.2, 0.05, 0.4, 0.41, 1.9, 2.2];
        let sorted = x.to_vec();
        for &(b, c) in &[(0.5, 0.3), (0.3, 0.5), (0.7, 2.1), (1.0, 0.25), (0.2, 0.2)] {
            let (v, u) = hist_smoothed_vu(&sorted, b, c);
            let (vn, un) = naive_vu(&x, b, c);
            assert!((v - vn).abs() < 1e-12 * vn.abs().max(1.0), "b={b} c={c}");
            assert!((u - un).abs() < 1e-12 * vn.abs().max(1.0), "b={b} c={c}");
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn overlap_against_fine_partition() {
        let cases = [(0.0, 1.0, 0.5, 2.0), (0.0, 1.0, 1.0, 2.0), (-1.0, 3.0, 0.25, 0.75), (0.0, 0.5, 0.625, 0.875)];
        let h = 1.0 / 8192.0;
        for &(a1, b1, a2, b2) in &cases {
            let inside = (0..6 * 8192)
                .filter(|&k| {
                    let x = -2.0 + (k as f64 + 0.5) * h;
                    x >= a1 && x < b1 && x >= a2 && x < b2
                })
                .count();
            assert_eq!(overlap(a1, b1, a2, b2), inside as f64 * h);
        }
    }

    #[test]
    fn degenerate_samples_rejected() {
        let s = Sample::new(vec![3.0; 5]).unwrap();
        assert!(h_hat(&s).is_err());
        assert!(hist_psi_breve(&s).is_err());
        assert!(hist_scv_binwidth(&s).is_err());
    }

    #[test]
    fn h_hat_is_deterministic_with_locally_optimal_inner_steps() {
        let s = NormalMixture::catalog(2).unwrap().sample(120, 13).unwrap();
        let a = h_hat(&s).unwrap();
        let b = h_hat(&s).unwrap();
        assert_eq!(a.bandwidth.to_bits(), b.bandwidth.to_bits());
        assert_eq!(a.inner, b.inner);
        let c = CvCriterion::new(&s);
        for &(h, g) in &a.inner {
            let alpha = AlphaComb::scv(h).unwrap();
            let at = psi_alpha_criterion(&c, &alpha, g);
            for side in [0.99, 1.01] {
                let nb = psi_alpha_criterion(&c, &alpha, g * side);
                assert!(at >= nb - 1e-12 * at.abs().max(1e-3), "h={h} g={g}");
            }
        }
    }
}
