//! One-dimensional minimization over a positive parameter: a log-uniform grid
//! locates the basin, golden-section search in log scale refines it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Evaluated criterion values and the located minimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionCurve {
    /// Grid points `(parameter, value)`, strictly increasing in parameter.
    pub points: Vec<(f64, f64)>,
    pub minimizer: (f64, f64),
    /// True when the minimum was bracketed by interior grid points and refined.
    pub converged: bool,
    /// Golden-section iterations spent on refinement.
    pub iterations: usize,
}

impl CriterionCurve {
    pub fn argmin(&self) -> f64 {
        self.minimizer.0
    }

    pub fn min_value(&self) -> f64 {
        self.minimizer.1
    }
}

#[derive(Clone, Debug)]
pub struct LogSearch {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Relative tolerance on the parameter.
    pub rel_tol: f64,
    /// Blocks of extra points appended above `hi` while the argmin sits on the top edge.
    pub extend_up: usize,
    /// Same below `lo`.
    pub extend_down: usize,
    /// Among equal grid values prefer the larger parameter.
    pub prefer_high: bool,
    /// Fail with [`Error::NotBracketed`] if the minimum stays on an edge.
    pub require_bracket: bool,
}

impl LogSearch {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        LogSearch {
            lo,
            hi,
            points,
            rel_tol: 1e-6,
            extend_up: 4,
            extend_down: 0,
            prefer_high: false,
            require_bracket: false,
        }
    }

    pub fn extend_down(mut self, blocks: usize) -> Self {
        self.extend_down = blocks;
        self
    }

    pub fn extend_up(mut self, blocks: usize) -> Self {
        self.extend_up = blocks;
        self
    }

    pub fn prefer_high(mut self) -> Self {
        self.prefer_high = true;
        self
    }

    pub fn strict(mut self) -> Self {
        self.require_bracket = true;
        self
    }

    pub fn tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn minimize<F: FnMut(f64) -> f64>(&self, what: &str, mut f: F) -> Result<CriterionCurve> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.points >= 3) {
            return Err(Error::InvalidArgument(format!(
                "search interval for {what} must satisfy 0 < lo < hi with at least 3 points, got [{}, {}] x {}",
                self.lo, self.hi, self.points
            )));
        }
        let mut eval = |x: f64| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let (llo, lhi) = (self.lo.ln(), self.hi.ln());
        let step = (lhi - llo) / (self.points - 1) as f64;
        let mut logs: Vec<f64> = (0..self.points).map(|k| llo + k as f64 * step).collect();
        let mut vals: Vec<f64> = logs.iter().map(|&l| eval(l.exp())).collect();
        let block = (self.points / 4).max(8);

        let mut up = 0;
        let mut down = 0;
        let i = loop {
            let i = argmin(&vals, self.prefer_high);
            if i + 1 == vals.len() && up < self.extend_up {
                up += 1;
                let top = *logs.last().unwrap();
                for k in 1..=block {
                    let l = top + k as f64 * step;
                    logs.push(l);
                    vals.push(eval(l.exp()));
                }
                continue;
            }
            if i == 0 && down < self.extend_down {
                down += 1;
                let bottom = logs[0];
                let mut new_l: Vec<f64> = (1..=block).rev().map(|k| bottom - k as f64 * step).collect();
                let mut new_v: Vec<f64> = new_l.iter().map(|&l| eval(l.exp())).collect();
                new_l.extend_from_slice(&logs);
                new_v.extend_from_slice(&vals);
                logs = new_l;
                vals = new_v;
                continue;
            }
            break i;
        };

        let points: Vec<(f64, f64)> = logs.iter().map(|l| l.exp()).zip(vals.iter().copied()).collect();
        if !vals[i].is_finite() {
            return Err(Error::NumericFailure(format!("{what}: no finite value on the search grid")));
        }
        if i == 0 || i + 1 == vals.len() {
            if self.require_bracket {
                return Err(Error::NotBracketed { what: what.to_string(), points });
            }
            return Ok(CriterionCurve { minimizer: points[i], points, converged: false, iterations: 0 });
        }

        let (x, v, iterations) = golden(&mut eval, logs[i - 1], logs[i + 1], logs[i], vals[i], self.rel_tol);
        let minimizer = if v < vals[i] { (x.exp(), v) } else { points[i] };
        Ok(CriterionCurve { points, minimizer, converged: true, iterations })
    }
}

fn argmin(vals: &[f64], prefer_high: bool) -> usize {
    let mut best = 0;
    for (k, &v) in vals.iter().enumerate() {
        if v < vals[best] || (prefer_high && v == vals[best]) {
            best = k;
        }
    }
    best
}

/// Golden-section search on [a, b] in log-parameter space, seeded with a known
/// interior point. Returns the best point seen.
fn golden<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, x0: f64, v0: f64, tol: f64) -> (f64, f64, usize) {
    const R: f64 = 0.618_033_988_749_894_8;
    let (mut bx, mut bv) = (x0, v0);
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let mut fc = f(c.exp());
    let mut fd = f(d.exp());
    let mut it = 0;
    while (b - a).abs() > tol && it < 200 {
        it += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d.exp());
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < bv {
                bx = x;
                bv = v;
            }
        }
    }
    (bx, bv, it)
}

/// Bisection for a sign change of `f` on [a, b] in log scale.
pub fn bisect_log<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Option<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut fa = f(lo);
    let fb = f(hi);
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    while b - a > rel_tol {
        let m = 0.5 * (a + b);
        let fm = f(m.exp());
        if fm == 0.0 {
            return Some(m.exp());
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some((0.5 * (a + b)).exp())
}
