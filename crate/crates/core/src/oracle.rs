//! Exact bias, variance and MSE of the fixed-bandwidth estimator
//! ψ̌(g) = −CV(g) for a Gaussian kernel and a normal-mixture density.
//!
//! With M = 2L − L*L and N = L*L, ψ̌(g) = −R(L)/(ng) plus a U-statistic with
//! kernel H_g = M_g + N_g/n, so every moment reduces to the functionals
//! R_{φ,g}(f) = ∫(φ_g*f)f and T_{φ,ϕ,g}(f) = ∫(φ_g*f)(ϕ_g*f)f, which are
//! finite sums of Gaussian integrals.

use serde::{Deserialize, Serialize};

use crate::cv::ROUGHNESS_L;
use crate::error::{check_positive, Error, Result};
use crate::kernels::GaussianComb;
use crate::mixtures::NormalMixture;
use crate::normal;
use crate::optim::LogSearch;

/// R_{φ,g}(f) = ∫ (φ_g * f)(x) f(x) dx.
pub fn r_functional(phi: &GaussianComb, f: &NormalMixture, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(r_unchecked(phi, f, g))
}

fn r_unchecked(phi: &GaussianComb, f: &NormalMixture, g: f64) -> f64 {
    let comps = f.components();
    let mut sum = 0.0;
    for a in phi.atoms() {
        let sg2 = (a.scale * g).powi(2);
        let mut part = 0.0;
        for ci in comps {
            for cj in comps {
                part += ci.weight * cj.weight * normal::pdf_var(ci.mean - cj.mean, sg2 + ci.sd * ci.sd + cj.sd * cj.sd);
            }
        }
        sum += a.coeff * part;
    }
    sum
}

/// T_{φ,ϕ,g}(f) = ∫ (φ_g * f)(x) (ϕ_g * f)(x) f(x) dx.
pub fn t_functional(phi: &GaussianComb, varphi: &GaussianComb, f: &NormalMixture, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(t_unchecked(phi, varphi, f, g))
}

fn t_unchecked(phi: &GaussianComb, varphi: &GaussianComb, f: &NormalMixture, g: f64) -> f64 {
    let comps = f.components();
    let mut sum = 0.0;
    for a in phi.atoms() {
        let va = (a.scale * g).powi(2);
        for b in varphi.atoms() {
            let vb = (b.scale * g).powi(2);
            let mut part = 0.0;
            for ci in comps {
                for cj in comps {
                    for ck in comps {
                        part += ci.weight
                            * cj.weight
                            * ck.weight
                            * normal::triple_product_integral(
                                ci.mean,
                                va + ci.sd * ci.sd,
                                cj.mean,
                                vb + cj.sd * cj.sd,
                                ck.mean,
                                ck.sd * ck.sd,
                            );
                    }
                }
            }
            sum += a.coeff * b.coeff * part;
        }
    }
    sum
}

/// Exact error of ψ̌(g) for one density and sample size, with the
/// data-independent kernel combinations built once.
#[derive(Clone, Debug)]
pub struct ExactError {
    f: NormalMixture,
    n: usize,
    psi: f64,
    m: GaussianComb,
    nn: GaussianComb,
    m2: GaussianComb,
    mn: GaussianComb,
    n2: GaussianComb,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub g: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub mise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactErrorReport {
    pub n: usize,
    pub points: Vec<ErrorPoint>,
    /// (g_MSE, MSE(g_MSE))
    pub g_mse: (f64, f64),
    /// (g_MISE, MISE(g_MISE))
    pub g_mise: (f64, f64),
}

impl ExactError {
    pub fn new(f: &NormalMixture, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("sample size must be at least 2, got {n}")));
        }
        let m = GaussianComb::twicing();
        let nn = GaussianComb::self_convolution();
        Ok(ExactError {
            f: f.clone(),
            n,
            psi: f.true_psi(),
            m2: m.product(&m),
            mn: m.product(&nn),
            n2: nn.product(&nn),
            m,
            nn,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// MISE of the kernel density estimate with bandwidth g:
    /// R(L)/(ng) − R_{M,g}(f) − R_{N,g}(f)/n + ψ.
    pub fn mise(&self, g: f64) -> f64 {
        let n = self.n as f64;
        ROUGHNESS_L / (n * g) - r_unchecked(&self.m, &self.f, g) - r_unchecked(&self.nn, &self.f, g) / n + self.psi
    }

    /// E ψ̌(g) − ψ, which equals −MISE(g).
    pub fn bias(&self, g: f64) -> f64 {
        let n = self.n as f64;
        -ROUGHNESS_L / (n * g) + r_unchecked(&self.m, &self.f, g) + r_unchecked(&self.nn, &self.f, g) / n - self.psi
    }

    pub fn variance(&self, g: f64) -> f64 {
        let n = self.n as f64;
        let f = &self.f;
        let nn1 = n * (n - 1.0);
        let rm = r_unchecked(&self.m, f, g);
        let rn = r_unchecked(&self.nn, f, g);
        let theta = rm + rn / n;
        let h1_sq = t_unchecked(&self.m, &self.m, f, g)
            + 2.0 * t_unchecked(&self.m, &self.nn, f, g) / n
            + t_unchecked(&self.nn, &self.nn, f, g) / (n * n);
        let h_sq = (r_unchecked(&self.m2, f, g) + 2.0 * r_unchecked(&self.mn, f, g) / n + r_unchecked(&self.n2, f, g) / (n * n)) / g;
        4.0 * (n - 2.0) / nn1 * h1_sq - (4.0 * n - 6.0) / nn1 * theta * theta + 2.0 / nn1 * h_sq
    }

    pub fn mse(&self, g: f64) -> f64 {
        let b = self.bias(g);
        b * b + self.variance(g)
    }

    pub fn point(&self, g: f64) -> ErrorPoint {
        let bias = self.bias(g);
        let variance = self.variance(g);
        ErrorPoint { g, bias, variance, mse: bias * bias + variance, mise: self.mise(g) }
    }

    fn search(&self) -> LogSearch {
        let s = self.f.sd();
        let smin = self.f.components().iter().map(|c| c.sd).fold(f64::INFINITY, f64::min);
        LogSearch::new(1e-3 * smin.min(s), 10.0 * s, 240).strict().tol(1e-10)
    }

    pub fn g_mse(&self) -> Result<(f64, f64)> {
        let c = self.search().minimize("exact MSE", |g| self.mse(g))?;
        Ok(c.minimizer)
    }

    pub fn g_mise(&self) -> Result<(f64, f64)> {
        let c = self.search().minimize("exact MISE", |g| self.mise(g))?;
        Ok(c.minimizer)
    }

    pub fn report(&self, grid: &[f64]) -> Result<ExactErrorReport> {
        Ok(ExactErrorReport {
            n: self.n,
            points: grid.iter().map(|&g| self.point(g)).collect(),
            g_mse: self.g_mse()?,
            g_mise: self.g_mise()?,
        })
    }
}

pub fn exact_bias(f: &NormalMixture, n: usize, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(ExactError::new(f, n)?.bias(g))
}

pub fn exact_variance(f: &NormalMixture, n: usize, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(ExactError::new(f, n)?.variance(g))
}

pub fn exact_mse(f: &NormalMixture, n: usize, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(ExactError::new(f, n)?.mse(g))
}

pub fn exact_mise(f: &NormalMixture, n: usize, g: f64) -> Result<f64> {
    check_positive("bandwidth", g)?;
    Ok(ExactError::new(f, n)?.mise(g))
}

pub fn g_mse(f: &NormalMixture, n: usize) -> Result<f64> {
    Ok(ExactError::new(f, n)?.g_mse()?.0)
}

pub fn g_mise(f: &NormalMixture, n: usize) -> Result<f64> {
    Ok(ExactError::new(f, n)?.g_mise()?.0)
}

/// c₀(f, L) = (R(L) / R(f''))^{1/5} for the second-order Gaussian kernel.
pub fn asymptotic_c0(f: &NormalMixture) -> f64 {
    let r2 = f.true_theta_r(2).expect("order 2 is supported");
    (ROUGHNESS_L / r2).powf(0.2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub n: usize,
    pub g_mse: f64,
    pub g_mise: f64,
    pub ratio: f64,
    /// n^{1/5}(g_MSE/g_MISE − 1)
    pub scaled_gap: f64,
}

pub fn equivalence_table(f: &NormalMixture, ns: &[usize]) -> Result<Vec<EquivalenceRow>> {
    ns.iter()
        .map(|&n| {
            let e = ExactError::new(f, n)?;
            let gm = e.g_mse()?.0;
            let gi = e.g_mise()?.0;
            let ratio = gm / gi;
            Ok(EquivalenceRow { n, g_mse: gm, g_mise: gi, ratio, scaled_gap: (n as f64).powf(0.2) * (ratio - 1.0) })
        })
        .collect()
}

/// MISE of the histogram with anchor 0 and binwidth b:
/// (nb)^{-1} − (n+1)(nb)^{-1} Σ p_k² + R(f).
pub fn hist_mise(f: &NormalMixture, n: usize, b: f64) -> Result<f64> {
    let n = n as f64;
    let sp = f.hist_sum_sq_probs(b)?;
    Ok(1.0 / (n * b) - (n + 1.0) / (n * b) * sp + f.true_psi())
}

/// MISE of the Gaussian kernel density estimate; identical to [`ExactError::mise`].
pub fn kde_mise(f: &NormalMixture, n: usize, h: f64) -> Result<f64> {
    exact_mise(f, n, h)
}

pub fn h_mise(f: &NormalMixture, n: usize) -> Result<f64> {
    g_mise(f, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn normal01() -> NormalMixture {
        NormalMixture::catalog(1).unwrap()
    }

    #[test]
    fn r_functional_limits_and_quadrature() {
        let f = normal01();
        let l = GaussianComb::standard();
        let small = r_functional(&l, &f, 1e-8).unwrap();
        assert!((small - f.true_psi()).abs() < 1e-12);
        let big = 1e6 * r_functional(&l, &f, 1e6).unwrap();
        assert!((big - normal::INV_SQRT_2PI).abs() < 1e-7);
        let f6 = NormalMixture::catalog(6).unwrap();
        let m = GaussianComb::twicing();
        for &g in &[0.1, 1.0, 10.0] {
            let mg = m.scaled(g).unwrap();
            let conv = |x: f64| {
                f6.components()
                    .iter()
                    .map(|c| {
                        c.weight
                            * mg.atoms()
                                .iter()
                                .map(|a| a.coeff * normal::pdf_var(x - c.mean, a.scale * a.scale + c.sd * c.sd))
                                .sum::<f64>()
                    })
                    .sum::<f64>()
            };
            let num = quad::integrate_pieces(&|x| conv(x) * f6.pdf(x), &f6.breakpoints(), 1e-15);
            assert!((r_functional(&m, &f6, g).unwrap() - num).abs() < 1e-9, "g={g}");
        }
    }

    #[test]
    fn t_functional_limits() {
        let f = normal01();
        let l = GaussianComb::standard();
        let cube = quad::integrate(&|x| f.pdf(x).powi(3), -12.0, 12.0, 1e-16);
        assert!((t_functional(&l, &l, &f, 1e-8).unwrap() - cube).abs() < 1e-6);
        let g = 1e6;
        let lim = g * g * t_functional(&l, &l, &f, g).unwrap();
        assert!((lim - normal::INV_SQRT_2PI.powi(2)).abs() < 1e-7);
    }

    #[test]
    fn decompositions() {
        for id in [1, 6, 10] {
            let f = NormalMixture::catalog(id).unwrap();
            let e = ExactError::new(&f, 37).unwrap();
            for &g in &[0.05, 0.2, 0.7, 3.0] {
                let p = e.point(g);
                assert!((p.bias + p.mise).abs() < 1e-12 * p.mise.abs().max(1.0));
                assert!((p.mse - (p.bias * p.bias + p.variance)).abs() <= 1e-12 * p.mse);
                assert!(p.variance > 0.0);
            }
        }
    }

    #[test]
    fn mse_tends_to_psi_squared() {
        let f = normal01();
        let m = exact_mse(&f, 100, 1e6).unwrap();
        assert!((m - f.true_psi().powi(2)).abs() < 1e-6);
    }

    #[test]
    fn c0_values() {
        let f = normal01();
        assert!((asymptotic_c0(&f) - (4.0f64 / 3.0).powf(0.2)).abs() < 1e-14);
        assert!((asymptotic_c0(&f) - 1.0592).abs() < 1e-4);
        let g = f.affine(2.5, -1.0).unwrap();
        assert!((asymptotic_c0(&g) - 2.5 * asymptotic_c0(&f)).abs() < 1e-10);
    }

    #[test]
    fn hist_mise_against_definition() {
        let f = normal01();
        let (n, b) = (50usize, 0.5);
        let direct = {
            let (lo, hi) = f.support();
            let (klo, khi) = ((lo / b).floor() as i64, (hi / b).floor() as i64);
            let p = f.hist_cell_probs(b, klo, khi).unwrap();
            let nf = n as f64;
            let var: f64 = p.iter().map(|pk| pk * (1.0 - pk) / (nf * b)).sum();
            let bias: f64 = (klo..=khi)
                .zip(&p)
                .map(|(k, pk)| {
                    let (a, c) = (k as f64 * b, (k + 1) as f64 * b);
                    quad::integrate(&|x| (f.pdf(x) - pk / b).powi(2), a, c, 1e-16)
                })
                .sum();
            var + bias
        };
        assert!((hist_mise(&f, n, b).unwrap() - direct).abs() < 1e-11);
    }

    #[test]
    fn variance_against_u_statistic_quadrature() {
        // ψ̌(g) + R(L)/(ng) is a U-statistic with kernel h = M_g + N_g/n, whose
        // variance is {4(n−2)ζ₁ + 2ζ₂}/{n(n−1)}.
        let f = NormalMixture::catalog(6).unwrap();
        let (n, g) = (10usize, 0.5);
        let nf = n as f64;
        let h = GaussianComb::twicing().scaled(g).unwrap() + GaussianComb::self_convolution().scaled(g).unwrap() * (1.0 / nf);
        let (lo, hi) = (-9.0, 9.0);
        let h1 = |x: f64| quad::integrate(&|y| h.eval(x - y) * f.pdf(y), lo, hi, 1e-13);
        let theta = quad::integrate(&|x| h1(x) * f.pdf(x), lo, hi, 1e-12);
        let e_h1_sq = quad::integrate(&|x| h1(x).powi(2) * f.pdf(x), lo, hi, 1e-12);
        let e_h_sq = quad::integrate(
            &|x| quad::integrate(&|y| h.eval(x - y).powi(2) * f.pdf(y), lo, hi, 1e-13) * f.pdf(x),
            lo,
            hi,
            1e-12,
        );
        let zeta1 = e_h1_sq - theta * theta;
        let zeta2 = e_h_sq - theta * theta;
        let expect = (4.0 * (nf - 2.0) * zeta1 + 2.0 * zeta2) / (nf * (nf - 1.0));
        let got = exact_variance(&f, n, g).unwrap();
        assert!((got - expect).abs() < 1e-9 * expect, "{got} {expect}");
        let bias = exact_bias(&f, n, g).unwrap();
        assert!((bias - (theta - ROUGHNESS_L / (nf * g) - f.true_psi())).abs() < 1e-10);
    }

    #[test]
    fn twicing_bias_is_fourth_order() {
        let f = normal01();
        let m = GaussianComb::twicing();
        let gap = |g: f64| (r_functional(&m, &f, g).unwrap() - f.true_psi()).abs();
        let (a, b) = (1e-3f64, 1e-2f64);
        let slope = (gap(b).ln() - gap(a).ln()) / (b.ln() - a.ln());
        assert!((slope - 4.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn scaled_variance_limit() {
        let f = normal01();
        let var_f = f.integral_cube() - f.true_psi().powi(2);
        let n = 100_000usize;
        let e = ExactError::new(&f, n).unwrap();
        let g = e.g_mise().unwrap().0;
        let scaled = n as f64 * e.variance(g);
        assert!((scaled / (4.0 * var_f) - 1.0).abs() < 0.05, "{scaled} vs {}", 4.0 * var_f);
    }

    #[test]
    fn n_times_g_mse_increases() {
        let f = normal01();
        let v: Vec<f64> = [100usize, 1000, 10_000, 100_000]
            .iter()
            .map(|&n| n as f64 * ExactError::new(&f, n).unwrap().g_mse().unwrap().0)
            .collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
    }
}
