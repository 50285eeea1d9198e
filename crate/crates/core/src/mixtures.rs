//! Normal-mixture test densities with closed-form functionals.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_order, check_positive, Error, Result};
use crate::normal;
use crate::optim::LogSearch;
use crate::quad;
use crate::sample::{Provenance, Sample};

pub const CATALOG_SIZE: u32 = 16;
const CATALOG_TEXT: &str = include_str!("../data/catalog.txt");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalMixture {
    components: Vec<Component>,
}

impl NormalMixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("a mixture needs at least one component".into()));
        }
        for c in &components {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!("component weight must be positive, got {}", c.weight)));
            }
            if !c.mean.is_finite() {
                return Err(Error::InvalidArgument(format!("component mean must be finite, got {}", c.mean)));
            }
            check_positive("component sd", c.sd)?;
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(NormalMixture { components })
    }

    /// A single normal component N(mean, sd²).
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(vec![Component { weight: 1.0, mean, sd }])
    }

    /// Test density `id` in 1..=16.
    pub fn catalog(id: u32) -> Result<Self> {
        let table = CATALOG.get_or_init(|| parse_table(CATALOG_TEXT).expect("bundled catalog is well formed"));
        table
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown density id {id}; expected 1..={CATALOG_SIZE}")))
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// The density of a·X + b for X from this mixture.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("scale factor must be nonzero, got {a}")));
        }
        Self::new(
            self.components
                .iter()
                .map(|c| Component { weight: c.weight, mean: a * c.mean + b, sd: a.abs() * c.sd })
                .collect(),
        )
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * normal::pdf_scaled(x - c.mean, c.sd)).sum()
    }

    pub fn pdf_deriv(&self, x: f64, r: usize) -> Result<f64> {
        check_order(r, 8)?;
        Ok(self.pdf_deriv_unchecked(x, r))
    }

    fn pdf_deriv_unchecked(&self, x: f64, r: usize) -> f64 {
        self.components.iter().map(|c| c.weight * normal::pdf_deriv_scaled(x - c.mean, c.sd, r)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * normal::cdf((x - c.mean) / c.sd)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let second: f64 = self.components.iter().map(|c| c.weight * (c.sd * c.sd + c.mean * c.mean)).sum();
        (second - m * m).sqrt()
    }

    /// Interval outside which every component is more than 10 sd away.
    pub fn support(&self) -> (f64, f64) {
        let smax = self.components.iter().map(|c| c.sd).fold(0.0, f64::max);
        let lo = self.components.iter().map(|c| c.mean).fold(f64::INFINITY, f64::min) - 10.0 * smax;
        let hi = self.components.iter().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max) + 10.0 * smax;
        (lo, hi)
    }

    /// Quadrature breakpoints resolving every component.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        let mut pts = Vec::new();
        for c in &self.components {
            for k in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0] {
                pts.push(c.mean - k * c.sd);
                pts.push(c.mean + k * c.sd);
            }
        }
        quad::breakpoints(pts, lo, hi)
    }

    /// ∫ f² = Σ_ij w_i w_j φ(μ_i − μ_j; σ_i² + σ_j²).
    pub fn true_psi(&self) -> f64 {
        self.pair_sum(normal::pdf_var)
    }

    /// ∫ (f^{(r)})² = (−1)^r Σ_ij w_i w_j φ^{(2r)}(μ_i − μ_j; σ_i² + σ_j²).
    pub fn true_theta_r(&self, r: usize) -> Result<f64> {
        check_order(r, 4)?;
        let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * self.pair_sum(|d, v| normal::pdf_deriv_scaled(d, v.sqrt(), 2 * r)))
    }

    fn pair_sum(&self, k: impl Fn(f64, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for a in &self.components {
            for b in &self.components {
                s += a.weight * b.weight * k(a.mean - b.mean, a.sd * a.sd + b.sd * b.sd);
            }
        }
        s
    }

    /// ∫ f³ from triple Gaussian products.
    pub fn integral_cube(&self) -> f64 {
        let mut s = 0.0;
        for a in &self.components {
            for b in &self.components {
                for c in &self.components {
                    s += a.weight
                        * b.weight
                        * c.weight
                        * normal::triple_product_integral(a.mean, a.sd * a.sd, b.mean, b.sd * b.sd, c.mean, c.sd * c.sd);
                }
            }
        }
        s
    }

    /// Var f(X) = ∫ f³ − ψ².
    pub fn var_of_density(&self) -> f64 {
        let psi = self.true_psi();
        self.integral_cube() - psi * psi
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        self.sample_with(n, seed, Provenance { density: None, seed: Some(seed), replicate: None })
    }

    /// Draws with a generator seeded from `seed`, recording `provenance`.
    pub fn sample_with(&self, n: usize, seed: u64, provenance: Provenance) -> Result<Sample> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("sample size must be at least 2, got {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cum = Vec::with_capacity(self.components.len());
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weight;
            cum.push(acc);
        }
        let last = self.components.len() - 1;
        let values = (0..n)
            .map(|_| {
                let u: f64 = rng.gen::<f64>() * acc;
                let k = cum.iter().position(|&c| u < c).unwrap_or(last);
                let z: f64 = rng.sample(StandardNormal);
                self.components[k].mean + self.components[k].sd * z
            })
            .collect();
        Sample::with_provenance(values, provenance)
    }

    /// Q(f) = inf_u u^{-1} ∫ f^{1/2} ρ(u⁵ f'' f^{-1/2}) with ρ(t) = E|Z − t|.
    pub fn q_difficulty(&self) -> Result<f64> {
        let breaks = self.breakpoints();
        let objective = |u: f64| {
            let u5 = u.powi(5);
            let integrand = |x: f64| {
                let f = self.pdf(x);
                if f <= 0.0 {
                    return 0.0;
                }
                let sf = f.sqrt();
                sf * rho(u5 * self.pdf_deriv_unchecked(x, 2) / sf)
            };
            quad::integrate_pieces(&integrand, &breaks, 1e-11) / u
        };
        let curve = LogSearch::new(1e-3, 1e3, 50).extend_up(0).strict().tol(1e-9).minimize("Q(f)", objective)?;
        Ok(curve.min_value())
    }

    /// Cell probabilities p_k = P(kb ≤ X < (k+1)b) for k in `k_lo..=k_hi`.
    pub fn hist_cell_probs(&self, b: f64, k_lo: i64, k_hi: i64) -> Result<Vec<f64>> {
        check_positive("binwidth", b)?;
        Ok((k_lo..=k_hi).map(|k| self.cell_prob(k as f64 * b, (k + 1) as f64 * b)).collect())
    }

    pub fn cell_prob(&self, a: f64, b: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal::interval_prob((a - c.mean) / c.sd, (b - c.mean) / c.sd))
            .sum()
    }

    /// Σ_k p_k² over all cells carrying mass.
    pub fn hist_sum_sq_probs(&self, b: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        let p = self.hist_cell_probs(b, (lo / b).floor() as i64, (hi / b).floor() as i64)?;
        Ok(p.iter().map(|v| v * v).sum())
    }
}

/// ρ(t) = E|Z − t| = 2φ(t) + t(2Φ(t) − 1).
pub fn rho(t: f64) -> f64 {
    let tail = if t >= 0.0 { 1.0 - 2.0 * normal::sf(t) } else { 2.0 * normal::cdf(t) - 1.0 };
    2.0 * normal::pdf(t) + t * tail
}

static CATALOG: OnceLock<BTreeMap<u32, NormalMixture>> = OnceLock::new();

/// Parses `id, weight, mean, sd` rows; `#` starts a comment.
pub fn parse_table(text: &str) -> Result<BTreeMap<u32, NormalMixture>> {
    let mut rows: BTreeMap<u32, Vec<Component>> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 fields, got {}", lineno + 1, fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)));
        let id: u32 = fields[0].parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        rows.entry(id).or_default().push(Component { weight: num(fields[1])?, mean: num(fields[2])?, sd: num(fields[3])? });
    }
    rows.into_iter().map(|(id, comps)| Ok((id, NormalMixture::new(comps)?))).collect()
}
