//! Gauss–Kronrod 7–15 rules, single-panel and globally adaptive.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod and embedded Gauss estimates of `∫_a^b f`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * half, gauss * half)
}

/// Kronrod estimates of `∫ v` and `∫ m` with the Gauss estimate of `∫ v`,
/// for integrands returning a value and a magnitude companion.
pub fn gk15_pair<F: FnMut(f64) -> (f64, f64)>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let (fc, mc) = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut magnitude = WGK[7] * mc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let (f1, m1) = f(mid - dx);
        let (f2, m2) = f(mid + dx);
        kronrod += WGK[k] * (f1 + f2);
        magnitude += WGK[k] * (m1 + m2);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (f1 + f2);
        }
    }
    (kronrod * half, gauss * half, magnitude * half.abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    /// Integral of the magnitude companion of the integrand.
    pub magnitude: f64,
    pub converged: bool,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    magnitude: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so the bisection order is deterministic
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive GK15: repeatedly bisects the panel with the largest
/// error until `error ≤ max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Quadrature {
    integrate_scaled(|x| (f(x), 0.0), a, b, abs_tol, rel_tol, 0.0, max_panels)
}

/// Like [`integrate`] for integrands returning `(value, magnitude)`, where
/// the magnitude bounds the terms that cancel in the value. The target is
/// `max(abs_tol, rel_tol·|value|, mag_tol·∫magnitude)`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_scaled<F: FnMut(f64) -> (f64, f64)>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    mag_tol: f64,
    max_panels: usize,
) -> Quadrature {
    let panel = |f: &mut F, a: f64, b: f64| {
        let (k, g, m) = gk15_pair(f, a, b);
        Panel {
            a,
            b,
            value: k,
            magnitude: m,
            error: (k - g).abs(),
        }
    };
    let mut heap = BinaryHeap::new();
    heap.push(panel(&mut f, a, b));
    let mut panels = 1;
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let magnitude: f64 = heap.iter().map(|p| p.magnitude).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let target = abs_tol.max(rel_tol * value.abs()).max(mag_tol * magnitude);
        let done = error <= target;
        if done || panels >= max_panels || !error.is_finite() {
            return Quadrature {
                value: sorted_sum(&heap),
                error,
                magnitude,
                converged: done,
                panels,
            };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            return Quadrature {
                value: sorted_sum(&heap),
                error,
                magnitude,
                converged: false,
                panels,
            };
        }
        heap.push(panel(&mut f, worst.a, mid));
        heap.push(panel(&mut f, mid, worst.b));
        panels += 1;
    }
}

// Sum in interval order so the result does not depend on heap layout.
fn sorted_sum(heap: &BinaryHeap<Panel>) -> f64 {
    let mut parts: Vec<(f64, f64)> = heap.iter().map(|p| (p.a, p.value)).collect();
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    parts.iter().map(|p| p.1).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk15_is_exact_for_degree_22() {
        let (k, _) = gk15(&mut |x: f64| x.powi(22), 0.0, 1.0);
        assert!((k - 1.0 / 23.0).abs() < 1e-15);
        let (_, g) = gk15(&mut |x: f64| x.powi(13), -1.0, 2.0);
        assert!((g - (2f64.powi(14) - 1.0) / 14.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12, 10_000);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!(q.converged);
        assert!((q.value - exact).abs() < 1e-9 * exact);
    }
}
