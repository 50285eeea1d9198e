//! The cross-validation criterion for ∫f² and the estimator −min_g CV(g).

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Result};
use crate::kernels::GaussianComb;
use crate::normal;
use crate::optim::{CriterionCurve, LogSearch};
use crate::pairsum::PairSums;
use crate::sample::Sample;

/// R(L) for the standard normal kernel, 1/(2√π).
pub const ROUGHNESS_L: f64 = 0.282_094_791_773_878_14;

/// Grid points used to locate the global minimum.
pub const GRID_POINTS: usize = 120;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiHat {
    pub estimate: f64,
    pub g_cv: f64,
    pub curve: CriterionCurve,
}

/// Pairwise sums of one sample, reused across bandwidths.
pub struct CvCriterion {
    pairs: PairSums,
    min_gap: Option<f64>,
    range: f64,
    ties: bool,
}

impl CvCriterion {
    pub fn new(sample: &Sample) -> Self {
        CvCriterion {
            pairs: PairSums::new(sample.values()),
            min_gap: sample.min_gap(),
            range: sample.range(),
            ties: sample.has_ties(),
        }
    }

    pub fn n(&self) -> usize {
        self.pairs.n()
    }

    pub fn pairs(&self) -> &PairSums {
        &self.pairs
    }

    fn nf(&self) -> f64 {
        self.n() as f64
    }

    /// n^{-2} Σ_{i,j} (L*L)_g(X_i − X_j).
    pub fn psi_tilde_d_star(&self, g: f64) -> f64 {
        let n = self.nf();
        let s = std::f64::consts::SQRT_2 * g;
        (n * normal::INV_SQRT_2PI / s + 2.0 * self.pairs.offdiag(s, 0)) / (n * n)
    }

    /// {n(n−1)}^{-1} Σ_{i≠j} L_g(X_i − X_j).
    pub fn psi_tilde_nd(&self, g: f64) -> f64 {
        let n = self.nf();
        2.0 * self.pairs.offdiag(g, 0) / (n * (n - 1.0))
    }

    /// n^{-2} Σ_{i,j} L_g(X_i − X_j).
    pub fn psi_tilde_d(&self, g: f64) -> f64 {
        let n = self.nf();
        (n * normal::INV_SQRT_2PI / g + 2.0 * self.pairs.offdiag(g, 0)) / (n * n)
    }

    /// No-diagonals estimator with the twicing kernel 2L − L*L.
    pub fn psi_tilde_nd_twicing(&self, g: f64) -> f64 {
        let n = self.nf();
        let m = GaussianComb::twicing().scaled_unchecked(g);
        2.0 * self.pairs.comb(&m, 0) / (n * (n - 1.0))
    }

    /// CV(g) = R(L)/(ng) + {n(n−1)}^{-1} Σ_{i≠j} {(1 − 1/n)(L*L)_g − 2L_g}(X_i − X_j).
    pub fn cv(&self, g: f64) -> f64 {
        let n = self.nf();
        let k = (GaussianComb::self_convolution() * (1.0 - 1.0 / n) - GaussianComb::standard() * 2.0).scaled_unchecked(g);
        ROUGHNESS_L / (n * g) + 2.0 * self.pairs.comb(&k, 0) / (n * (n - 1.0))
    }

    /// W(g) = ψ̃•_ND(g) − 2ψ̃_ND(g) + ψ̃*_D(g).
    pub fn penalty_w(&self, g: f64) -> f64 {
        self.psi_tilde_nd_twicing(g) - 2.0 * self.psi_tilde_nd(g) + self.psi_tilde_d_star(g)
    }

    /// Log grid on [d_min/3, range]. The lower edge is extended only for
    /// samples without ties, where CV stays bounded as g → 0.
    pub fn search(&self) -> Option<LogSearch> {
        let gap = self.min_gap?;
        let lo = gap / 3.0;
        let hi = self.range.max(3.0 * lo);
        Some(LogSearch::new(lo, hi, GRID_POINTS).extend_down(if self.ties { 0 } else { 2 }))
    }

    pub fn minimize(&self) -> Result<CriterionCurve> {
        let search = self.search().ok_or_else(|| crate::Error::DegenerateSample("all observations are identical".into()))?;
        search.minimize("CV(g)", |g| self.cv(g))
    }

    pub fn psi_hat(&self) -> Result<PsiHat> {
        let curve = self.minimize()?;
        Ok(PsiHat { estimate: -curve.min_value(), g_cv: curve.argmin(), curve })
    }
}

pub fn psi_tilde_d_star(s: &Sample, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(CvCriterion::new(s).psi_tilde_d_star(g))
}

pub fn psi_tilde_nd(s: &Sample, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(CvCriterion::new(s).psi_tilde_nd(g))
}

pub fn psi_tilde_d(s: &Sample, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(CvCriterion::new(s).psi_tilde_d(g))
}

pub fn cv(s: &Sample, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(CvCriterion::new(s).cv(g))
}

pub fn penalty_w(s: &Sample, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(CvCriterion::new(s).penalty_w(g))
}

/// ψ̂ = −min_g CV(g) with its minimizer and the evaluated curve.
pub fn psi_hat(s: &Sample) -> Result<PsiHat> {
    s.require_spread()?;
    CvCriterion::new(s).psi_hat()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::NormalMixture;

    fn two_points() -> Sample {
        Sample::new(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn reference_values_two_points() {
        let s = two_points();
        assert!((psi_tilde_d_star(&s, 1.0).unwrap() - 0.250_895_2).abs() < 1e-7);
        assert!((psi_tilde_nd(&s, 1.0).unwrap() - 0.241_970_7).abs() < 1e-7);
        assert!((cv(&s, 1.0).unwrap() + 0.233_046_2).abs() < 1e-7);
        let tied = Sample::new(vec![0.0, 0.0]).unwrap();
        assert!((psi_tilde_d_star(&tied, 1.0).unwrap() - ROUGHNESS_L).abs() < 1e-15);
        assert!(cv(&s, 0.0).is_err());
    }

    #[test]
    fn all_equal_sample() {
        let s = Sample::new(vec![1.5; 6]).unwrap();
        let g = 0.7;
        assert!((psi_tilde_nd(&s, g).unwrap() - 0.398_942_3 / g).abs() < 1e-7);
        let w = penalty_w(&s, 1.0).unwrap();
        assert!(w.is_finite() && (-1e-15..=ROUGHNESS_L / 6.0 + 1e-15).contains(&w));
        assert!(matches!(psi_hat(&s), Err(crate::Error::DegenerateSample(_))));
    }

    #[test]
    fn diagonal_identity() {
        let s = NormalMixture::catalog(2).unwrap().sample(40, 3).unwrap();
        let c = CvCriterion::new(&s);
        let n = 40.0;
        for &g in &[0.05, 0.3, 1.1] {
            let lhs = c.psi_tilde_d(g);
            let rhs = (1.0 - 1.0 / n) * c.psi_tilde_nd(g) + normal::INV_SQRT_2PI / (g * n);
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn minimizer_and_sign_identity() {
        let s = NormalMixture::catalog(1).unwrap().sample(200, 9).unwrap();
        let c = CvCriterion::new(&s);
        let h = c.psi_hat().unwrap();
        assert!(h.curve.converged);
        let g = h.g_cv;
        let alt = 2.0 * c.psi_tilde_nd(g) - c.psi_tilde_d_star(g);
        assert!((h.estimate - alt).abs() < 1e-14);
        for k in [0.99, 1.01] {
            assert!(c.cv(g * k) >= -h.estimate);
        }
        let pen = c.psi_tilde_nd_twicing(g) - c.penalty_w(g);
        assert!((pen - h.estimate).abs() < 1e-14);
    }
}
