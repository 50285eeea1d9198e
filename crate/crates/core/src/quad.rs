//! Numerical integration on finite intervals.
//!
//! Globally adaptive Gauss–Legendre quadrature: the interval starting as equal
//! panels, the panel with the largest error estimate is halved until the total
//! estimate meets the tolerance. A panel's error is the gap between the rule on
//! the whole panel and on its two halves.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

const NODES: usize = 20;
const START_PANELS: usize = 16;
const MAX_PANELS: usize = 20_000;

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on P_n.
fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

fn gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule().iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Self {
        let m = 0.5 * (a + b);
        let whole = gauss(f, a, b);
        let value = gauss(f, a, m) + gauss(f, m, b);
        Panel { a, b, value, err: (value - whole).abs() }
    }
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// ∫_a^b f to absolute tolerance `tol`, or to a few ulps of the result when
/// `tol` is below that.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let w = (b - a) / START_PANELS as f64;
    let mut heap: BinaryHeap<Panel> =
        (0..START_PANELS).map(|k| Panel::new(f, a + k as f64 * w, if k + 1 == START_PANELS { b } else { a + (k + 1) as f64 * w })).collect();
    loop {
        let total: f64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        if err <= tol.max(16.0 * f64::EPSILON * total.abs()) || heap.len() >= MAX_PANELS || !err.is_finite() {
            let mut parts: Vec<f64> = heap.into_iter().map(|p| p.value).collect();
            parts.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
            return parts.iter().sum();
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(Panel { err: 0.0, ..worst });
            continue;
        }
        heap.push(Panel::new(f, worst.a, m));
        heap.push(Panel::new(f, m, worst.b));
    }
}

/// Integrates over consecutive pieces of a sorted breakpoint list.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> f64 {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    breaks.windows(2).map(|w| integrate(f, w[0], w[1], tol / pieces)).sum()
}

/// Sorts, deduplicates and clips a breakpoint list to [lo, hi].
pub fn breakpoints(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|p| p.is_finite() && *p > lo && *p < hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    pts
}

/// Composite trapezoid rule with `m` panels on a periodic integrand.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    (0..m).map(|k| f(a + k as f64 * h)).sum::<f64>() * h
}
