//! Closed-form algebra on finite combinations of centred Gaussian densities,
//! plus the von Mises kernel on the circle.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::error::{check_order, check_positive, Result};
use crate::normal;

pub const MAX_DERIV: usize = 8;
pub const MAX_ROUGHNESS_ORDER: usize = 4;

/// One term `coeff · φ(x/scale)/scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub coeff: f64,
    pub scale: f64,
}

/// A signed sum of centred Gaussian densities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianComb {
    atoms: Vec<Atom>,
}

impl GaussianComb {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            check_positive("atom scale", a.scale)?;
        }
        Ok(GaussianComb { atoms })
    }

    pub fn atom(coeff: f64, scale: f64) -> Self {
        assert!(scale > 0.0, "atom scale must be positive");
        GaussianComb { atoms: vec![Atom { coeff, scale }] }
    }

    /// The standard normal kernel L.
    pub fn standard() -> Self {
        Self::atom(1.0, 1.0)
    }

    /// L * L for the standard normal L.
    pub fn self_convolution() -> Self {
        Self::atom(1.0, std::f64::consts::SQRT_2)
    }

    /// The twicing kernel 2L − L*L.
    pub fn twicing() -> Self {
        Self::standard() * 2.0 - Self::self_convolution()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn max_scale(&self) -> f64 {
        self.atoms.iter().map(|a| a.scale).fold(0.0, f64::max)
    }

    pub fn scaled(&self, g: f64) -> Result<Self> {
        check_positive("bandwidth", g)?;
        Ok(self.scaled_unchecked(g))
    }

    pub(crate) fn scaled_unchecked(&self, g: f64) -> Self {
        GaussianComb { atoms: self.atoms.iter().map(|a| Atom { coeff: a.coeff, scale: a.scale * g }).collect() }
    }

    pub fn convolve(&self, other: &GaussianComb) -> GaussianComb {
        let mut atoms = Vec::with_capacity(self.atoms.len() * other.atoms.len());
        for a in &self.atoms {
            for b in &other.atoms {
                atoms.push(Atom { coeff: a.coeff * b.coeff, scale: a.scale.hypot(b.scale) });
            }
        }
        GaussianComb { atoms }
    }

    /// Pointwise product, again a Gaussian combination:
    /// φ_a(x)·φ_b(x) = φ_{√(a²+b²)}(0) · φ_{ab/√(a²+b²)}(x).
    pub fn product(&self, other: &GaussianComb) -> GaussianComb {
        let mut atoms = Vec::with_capacity(self.atoms.len() * other.atoms.len());
        for a in &self.atoms {
            for b in &other.atoms {
                let s = a.scale.hypot(b.scale);
                atoms.push(Atom {
                    coeff: a.coeff * b.coeff * normal::INV_SQRT_2PI / s,
                    scale: a.scale * b.scale / s,
                });
            }
        }
        GaussianComb { atoms }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.atoms.iter().map(|a| a.coeff * normal::pdf_scaled(x, a.scale)).sum()
    }

    pub fn deriv(&self, x: f64, r: usize) -> Result<f64> {
        check_order(r, MAX_DERIV)?;
        Ok(self.deriv_unchecked(x, r))
    }

    pub(crate) fn deriv_unchecked(&self, x: f64, r: usize) -> f64 {
        self.atoms.iter().map(|a| a.coeff * normal::pdf_deriv_scaled(x, a.scale, r)).sum()
    }

    pub fn integral(&self) -> f64 {
        self.atoms.iter().map(|a| a.coeff).sum()
    }

    /// ∫ (comb^{(r)})², summed over atom pairs:
    /// ∫ φ_a^{(r)} φ_b^{(r)} = (2r−1)!! φ(0) / (a²+b²)^{r+1/2}.
    pub fn roughness(&self, r: usize) -> Result<f64> {
        check_order(r, MAX_ROUGHNESS_ORDER)?;
        let dfact = (1..2 * r).step_by(2).map(|k| k as f64).product::<f64>();
        let mut sum = 0.0;
        for a in &self.atoms {
            for b in &self.atoms {
                let s = a.scale.hypot(b.scale);
                sum += a.coeff * b.coeff * dfact * normal::INV_SQRT_2PI / s.powi(2 * r as i32 + 1);
            }
        }
        Ok(sum)
    }

    /// Characteristic function (Fourier transform) at t.
    pub fn char_fn(&self, t: f64) -> f64 {
        self.atoms.iter().map(|a| a.coeff * (-0.5 * (a.scale * t).powi(2)).exp()).sum()
    }
}

impl Add for GaussianComb {
    type Output = GaussianComb;
    fn add(mut self, rhs: GaussianComb) -> GaussianComb {
        self.atoms.extend(rhs.atoms);
        self
    }
}

impl Sub for GaussianComb {
    type Output = GaussianComb;
    fn sub(self, rhs: GaussianComb) -> GaussianComb {
        self + (-rhs)
    }
}

impl Neg for GaussianComb {
    type Output = GaussianComb;
    fn neg(self) -> GaussianComb {
        self * -1.0
    }
}

impl Mul<f64> for GaussianComb {
    type Output = GaussianComb;
    fn mul(mut self, c: f64) -> GaussianComb {
        for a in &mut self.atoms {
            a.coeff *= c;
        }
        self
    }
}

/// Marks a Dirac delta component, the identity for convolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiracTag {
    pub present: bool,
}

impl DiracTag {
    /// Convolution of the delta with `comb`.
    pub fn convolve(&self, comb: &GaussianComb) -> GaussianComb {
        if self.present {
            comb.clone()
        } else {
            GaussianComb::default()
        }
    }
}

/// Von Mises kernel exp{ν cos θ}/(2π I₀(ν)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VonMisesKernel {
    nu: f64,
}

impl VonMisesKernel {
    pub fn new(nu: f64) -> Result<Self> {
        check_positive("concentration", nu)?;
        Ok(VonMisesKernel { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eval(&self, theta: f64) -> f64 {
        (self.nu * (theta.cos() - 1.0)).exp() / (std::f64::consts::TAU * bessel::i0e(self.nu))
    }

    /// ∫₀^{2π} K(θ−a)K(θ−b)dθ with Δ = a − b, i.e. I₀(2ν|cos(Δ/2)|)/(2π I₀(ν)²).
    pub fn convolution_at(&self, delta: f64) -> f64 {
        let nu = self.nu;
        let x = 2.0 * nu * (0.5 * delta).cos().abs();
        let e = bessel::i0e(nu);
        (x - 2.0 * nu).exp() * bessel::i0e(x) / (std::f64::consts::TAU * e * e)
    }

    /// Fourier coefficients ρ_k = I_k(ν)/I₀(ν), so that K(θ) = (2π)^{-1} Σ_k ρ_k e^{ikθ}.
    pub fn fourier(&self, kmax: usize) -> Vec<f64> {
        bessel::ratios(self.nu, kmax)
    }

    /// Index beyond which ρ_k falls below double precision.
    pub fn fourier_cutoff(&self) -> usize {
        (92.0 * self.nu).sqrt().ceil() as usize + 20
    }
}
