//! Zeros of `I(λ, ·)` on the nest: sign-change scans refined by bisection,
//! argument increments of fitted models along the sector contour, and the
//! λ-uniformity study.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::asymptotics::{candidate_exponents, fit_psi_expansion, PsiExpansion, PsiFitOptions};
use crate::darboux::{DarbouxSystem, Perturbation};
use crate::error::{Error, Result};
use crate::integrator::{integral_series, pseudo_abelian_with, Integral, IntegralSeries, SeriesOptions};
use crate::oval::{find_center, trace_oval_with};
use crate::ordered_map;

/// Boundary of `{r₁ ≤ |t| ≤ R₁, |arg t| ≤ απ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub r1: f64,
    pub big_r1: f64,
    pub alpha: f64,
    pub samples_per_arc: usize,
}

impl Contour {
    pub fn new(r1: f64, big_r1: f64, alpha: f64, samples_per_arc: usize) -> Result<Self> {
        if !(r1 > 0.0 && big_r1 > r1 && alpha > 0.0 && samples_per_arc >= 2) {
            return Err(Error::InvalidParameter(format!(
                "contour needs 0 < r1 < R1, alpha > 0 and at least 2 samples per arc \
                 (r1 = {r1}, R1 = {big_r1}, alpha = {alpha}, samples = {samples_per_arc})"
            )));
        }
        Ok(Self {
            r1,
            big_r1,
            alpha,
            samples_per_arc,
        })
    }

    /// The four pieces as segments in `z = log t`, counterclockwise:
    /// `C_{R₁}`, `C⁺` inward, `C_{r₁}` clockwise, `C⁻` outward.
    pub fn pieces(&self) -> [(Complex64, Complex64); 4] {
        let (lr, lbig) = (self.r1.ln(), self.big_r1.ln());
        let th = self.alpha * PI;
        [
            (Complex64::new(lbig, -th), Complex64::new(lbig, th)),
            (Complex64::new(lbig, th), Complex64::new(lr, th)),
            (Complex64::new(lr, th), Complex64::new(lr, -th)),
            (Complex64::new(lr, -th), Complex64::new(lbig, -th)),
        ]
    }
}

/// Sum of principal argument steps between consecutive samples.
pub fn delta_arg(values: &[Complex64]) -> Result<f64> {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if let Some(index) = values.iter().position(|v| !(v.norm() >= 1e-13 * scale) || scale == 0.0) {
        return Err(Error::OnContourZero { index });
    }
    // Steps from `conj(w₀)·w₁` are odd under swapping the pair, and summing in
    // magnitude order makes the total exactly odd under path reversal.
    let mut steps: Vec<f64> = values.windows(2).map(|w| (w[0].conj() * w[1]).arg()).collect();
    steps.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    Ok(steps.iter().sum())
}

const MAX_STEP: f64 = PI / 4.0;

// Samples `f` along the segment `a → b`, subdividing until consecutive values
// subtend less than π/4.
fn sample_segment<F: Fn(Complex64) -> Complex64>(
    f: &F,
    a: Complex64,
    b: Complex64,
    initial: usize,
) -> Result<Vec<Complex64>> {
    let mut nodes: Vec<(f64, Complex64)> =
        (0..initial).map(|k| k as f64 / (initial - 1) as f64).map(|s| (s, f(a + (b - a) * s))).collect();
    for _ in 0..40 {
        let mut refined = Vec::with_capacity(nodes.len() * 2);
        let mut changed = false;
        for w in nodes.windows(2) {
            refined.push(w[0]);
            let step = if w[0].1.norm() == 0.0 || w[1].1.norm() == 0.0 {
                PI
            } else {
                (w[1].1 / w[0].1).arg().abs()
            };
            if step >= MAX_STEP {
                let s = 0.5 * (w[0].0 + w[1].0);
                refined.push((s, f(a + (b - a) * s)));
                changed = true;
            }
        }
        refined.push(*nodes.last().expect("nonempty"));
        nodes = refined;
        if !changed {
            return Ok(nodes.into_iter().map(|n| n.1).collect());
        }
    }
    let index = nodes.iter().position(|n| n.1.norm() == 0.0).unwrap_or(0);
    Err(Error::OnContourZero { index })
}

/// Argument increments of `f` (a function of `z = log t`) along the four
/// contour pieces.
pub fn contour_increments<F: Fn(Complex64) -> Complex64>(f: &F, contour: &Contour) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    let scale = contour
        .pieces()
        .iter()
        .map(|(a, _)| f(*a).norm())
        .fold(0.0, f64::max);
    for (k, (a, b)) in contour.pieces().into_iter().enumerate() {
        let values = sample_segment(f, a, b, contour.samples_per_arc)?;
        let local = values.iter().map(|v| v.norm()).fold(scale, f64::max);
        if let Some(index) = values.iter().position(|v| v.norm() < 1e-13 * local) {
            return Err(Error::OnContourZero { index });
        }
        out[k] = delta_arg(&values)?;
    }
    Ok(out)
}

/// Model residual above which the argument bound is not trusted.
pub const TRUSTED_RESIDUAL: f64 = 1e-4;

/// `(1/2π)·Δarg` of the fitted model along `∂Ω`. The model is single-valued
/// on the slit sector, so the result is the number of model zeros inside.
pub fn argument_principle_count(model: &PsiExpansion, contour: &Contour) -> Result<f64> {
    if model.residual > TRUSTED_RESIDUAL {
        return Err(Error::UntrustedBound {
            residual: model.residual,
        });
    }
    let (lo, hi) = model.t_range;
    if contour.r1 < lo * (1.0 - 1e-9) || contour.big_r1 > hi * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "contour radii [{}, {}] leave the fitted window [{lo:e}, {hi:e}]",
            contour.r1, contour.big_r1
        )));
    }
    if model.expansion.is_empty() {
        return Ok(0.0);
    }
    let log_lambda = model.lambda.ln();
    let f = |z: Complex64| model.expansion.eval(z, log_lambda);
    let parts = contour_increments(&f, contour)?;
    Ok(parts.iter().sum::<f64>() / (2.0 * PI))
}

/// A sign change of `I`, bracketed in `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroBracket {
    pub lo: f64,
    pub hi: f64,
}

impl ZeroBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroReport {
    pub lambda: f64,
    pub zeros: Vec<ZeroBracket>,
    pub count: usize,
    /// Argument-principle bound, when a model was fitted.
    pub arg_bound: Option<f64>,
    /// Grid intervals where `|I|` sits inside the quadrature error band.
    pub indeterminate: Vec<ZeroBracket>,
    pub flags: Vec<String>,
}

impl ZeroReport {
    /// CSV `h_lo,h_hi,width`.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# lambda={:e}, count={}\nh_lo,h_hi,width\n", self.lambda, self.count);
        for z in &self.zeros {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.6e}", z.lo, z.hi, z.width());
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Bracket width target relative to `n(λ)`.
    pub rel_width: f64,
    /// `|I| ≤ band·error` is indeterminate.
    pub band: f64,
    /// Largest tolerated indeterminate fraction of the grid.
    pub max_indeterminate: f64,
    pub min_points: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            rel_width: 1e-10,
            band: 1.0,
            max_indeterminate: 0.05,
            min_points: 200,
        }
    }
}

/// Counts sign changes of a dense series and bisects each one on fresh
/// evaluations of `eval` down to `rel_width·n`. The grid must be sorted.
pub fn scan_zeros<F>(series: &IntegralSeries, n: f64, eval: F, opts: &ScanOptions) -> Result<ZeroReport>
where
    F: Fn(f64) -> Result<Integral>,
{
    let len = series.len();
    if len < opts.min_points {
        return Err(Error::InvalidParameter(format!(
            "zero scan needs at least {} grid points, got {len}",
            opts.min_points
        )));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| series.h_grid[a].total_cmp(&series.h_grid[b]));
    let h: Vec<f64> = order.iter().map(|&i| series.h_grid[i]).collect();
    let v: Vec<f64> = order.iter().map(|&i| series.values[i]).collect();
    let e: Vec<f64> = order.iter().map(|&i| series.error_estimates[i]).collect();
    let determinate: Vec<bool> = (0..len).map(|i| v[i].abs() > opts.band * e[i]).collect();

    let mut report = ZeroReport {
        lambda: series.lambda,
        ..Default::default()
    };
    let undetermined = determinate.iter().filter(|d| !**d).count();
    if undetermined == len {
        report.flags.push("identically-zero".into());
        return Ok(report);
    }

    let mut longest = 0usize;
    let mut run = 0usize;
    for d in &determinate {
        run = if *d { 0 } else { run + 1 };
        longest = longest.max(run);
    }
    let fraction = longest as f64 / len as f64;
    if fraction > opts.max_indeterminate {
        return Err(Error::NoisySeries { fraction });
    }

    let mut prev: Option<usize> = None;
    for i in 0..len {
        if !determinate[i] {
            continue;
        }
        if let Some(p) = prev {
            let bracket = ZeroBracket { lo: h[p], hi: h[i] };
            if i > p + 1 {
                if v[p].signum() != v[i].signum() {
                    report.indeterminate.push(bracket);
                }
            } else if v[p].signum() != v[i].signum() {
                report.zeros.push(refine(bracket, v[p], n * opts.rel_width, opts.band, &eval, &mut report.flags)?);
            }
        }
        prev = Some(i);
    }
    if !report.indeterminate.is_empty() {
        report.flags.push(format!("{} indeterminate sign changes", report.indeterminate.len()));
    }
    report.count = report.zeros.len();
    Ok(report)
}

fn refine<F>(
    mut b: ZeroBracket,
    mut v_lo: f64,
    width: f64,
    band: f64,
    eval: &F,
    flags: &mut Vec<String>,
) -> Result<ZeroBracket>
where
    F: Fn(f64) -> Result<Integral>,
{
    while b.width() > width {
        let mid = b.mid();
        if mid <= b.lo || mid >= b.hi {
            break;
        }
        let r = eval(mid)?;
        if r.value.abs() <= band * r.error {
            flags.push(format!("bisection stopped in the error band at h = {mid:e}"));
            break;
        }
        if r.value.signum() == v_lo.signum() {
            b.lo = mid;
            v_lo = r.value;
        } else {
            b.hi = mid;
        }
    }
    Ok(b)
}

/// [`scan_zeros`] with fresh traces and quadratures for the bisection steps.
pub fn scan_zeros_for(
    sys: &DarbouxSystem,
    eta: &Perturbation,
    series: &IntegralSeries,
    opts: &ScanOptions,
    series_opts: &SeriesOptions,
) -> Result<ZeroReport> {
    let range = find_center(sys)?;
    let eval = |h: f64| {
        let oval = trace_oval_with(sys, &range, h, &series_opts.trace)?;
        pseudo_abelian_with(sys, eta, &oval, &series_opts.quadrature)
    };
    scan_zeros(series, range.h_max, eval, opts)
}

/// Zeros of `I` strictly inside `(h_lo, h_hi)`.
pub fn count_in(report: &ZeroReport, h_lo: f64, h_hi: f64) -> usize {
    report
        .zeros
        .iter()
        .filter(|z| z.lo >= h_lo && z.hi <= h_hi)
        .count()
}

/// Settings of the λ-uniformity study.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformityOptions {
    /// Grid `h/n(λ)`, shared by every row.
    pub relative_grid: Vec<f64>,
    /// `h/n(λ)` bounds of the model window near the polycycle.
    pub model_window: (f64, f64),
    pub candidate_depth: u32,
    pub fit: PsiFitOptions,
    pub alpha: f64,
    pub scan: ScanOptions,
    pub series: SeriesOptions,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityRow {
    pub lambda: f64,
    pub count: Option<usize>,
    pub bound: Option<f64>,
    /// Scan count inside the model window.
    pub window_count: Option<usize>,
    /// Reachable `t`-window `[λᵃ/h_max, λᵃ/h_min]` of the grid.
    pub t_window: (f64, f64),
    pub flags: Vec<String>,
    pub report: Option<ZeroReport>,
    pub series: Option<IntegralSeries>,
    pub model: Option<PsiExpansion>,
}

/// One row per `λ`: series on the shared relative grid, zero scan, and the
/// argument bound of the power-log model fitted on the model window.
pub fn uniformity_row(sys: &DarbouxSystem, eta: &Perturbation, lambda: f64, opts: &UniformityOptions) -> UniformityRow {
    let mut row = UniformityRow {
        lambda,
        count: None,
        bound: None,
        window_count: None,
        t_window: (f64::NAN, f64::NAN),
        flags: Vec::new(),
        report: None,
        series: None,
        model: None,
    };
    let outcome = (|| -> Result<()> {
        let sys = sys.with_lambda(lambda)?;
        let range = find_center(&sys)?;
        let n = range.h_max;
        let grid: Vec<f64> = opts.relative_grid.iter().map(|r| r * n).collect();
        let la = lambda.powf(sys.a());
        let h_min = grid.iter().copied().fold(f64::INFINITY, f64::min);
        let h_max = grid.iter().copied().fold(0.0, f64::max);
        row.t_window = (la / h_max, la / h_min);
        let series = integral_series(&sys, eta, &grid, &opts.series)?;
        row.series = Some(series.clone());
        let report = scan_zeros_for(&sys, eta, &series, &opts.scan, &opts.series)?;
        row.count = Some(report.count);
        row.flags.extend(report.flags.iter().cloned());
        if report.flags.iter().any(|f| f == "identically-zero") {
            row.bound = Some(0.0);
            row.window_count = Some(0);
            row.report = Some(report);
            return Ok(());
        }
        let (w_lo, w_hi) = (opts.model_window.0 * n, opts.model_window.1 * n);
        let mut window = IntegralSeries {
            lambda,
            h_grid: Vec::new(),
            values: Vec::new(),
            error_estimates: Vec::new(),
        };
        for i in 0..series.len() {
            if series.h_grid[i] >= w_lo * (1.0 - 1e-12) && series.h_grid[i] <= w_hi * (1.0 + 1e-12) {
                window.h_grid.push(series.h_grid[i]);
                window.values.push(series.values[i]);
                window.error_estimates.push(series.error_estimates[i]);
            }
        }
        let exps: Vec<f64> = sys.factors().iter().map(|f| f.exponent).collect();
        let candidates = candidate_exponents(&exps, opts.candidate_depth, opts.fit.window);
        row.window_count = Some(count_in(&report, w_lo, w_hi));
        row.report = Some(report);
        let model = fit_psi_expansion(&window, sys.a(), &candidates, &opts.fit)?;
        let contour = Contour::new(model.t_range.0, model.t_range.1, opts.alpha, 64)?;
        row.bound = Some(argument_principle_count(&model, &contour)?);
        row.model = Some(model);
        Ok(())
    })();
    if let Err(e) = outcome {
        row.flags.push(format!("error: {e}"));
    }
    row
}

/// Rows in `λ` order; rows run concurrently when `opts.parallel` is set.
pub fn uniformity_study(
    sys: &DarbouxSystem,
    eta: &Perturbation,
    lambdas: &[f64],
    opts: &UniformityOptions,
) -> Vec<UniformityRow> {
    let inner = UniformityOptions {
        series: SeriesOptions {
            parallel: false,
            ..opts.series
        },
        ..opts.clone()
    };
    ordered_map(lambdas, opts.parallel, |&l| uniformity_row(sys, eta, l, &inner))
}

/// CSV `lambda,count,bound,flags`.
pub fn uniformity_csv(rows: &[UniformityRow]) -> String {
    let mut s = String::from("lambda,count,bound,flags\n");
    for r in rows {
        let count = r.count.map(|c| c.to_string()).unwrap_or_default();
        let bound = r
            .bound
            .map(|b| format!("{:.6}", if b.abs() < 5e-7 { 0.0 } else { b }))
            .unwrap_or_default();
        let flags = r.flags.join("; ").replace(',', " ");
        let _ = writeln!(s, "{:e},{count},{bound},{flags}", r.lambda);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{Expansion, Term};

    fn series(h: Vec<f64>, f: impl Fn(f64) -> f64) -> IntegralSeries {
        IntegralSeries {
            lambda: 1.0,
            values: h.iter().map(|&x| f(x)).collect(),
            error_estimates: vec![1e-15; h.len()],
            h_grid: h,
        }
    }

    #[test]
    fn scan_examples() {
        let grid: Vec<f64> = (0..300).map(|i| 0.148 * 0.98f64.powi(i)).collect();
        let eval = |h: f64| Ok(Integral { value: h - 0.05, error: 1e-16 });
        let s = series(grid.clone(), |h| 1.0 + h);
        let r = scan_zeros(&s, 0.148, eval, &ScanOptions::default()).unwrap();
        assert_eq!(r.count, 0);
        let s = series(grid.clone(), |h| h - 0.05);
        let r = scan_zeros(&s, 0.148, eval, &ScanOptions::default()).unwrap();
        assert_eq!(r.count, 1);
        assert!((r.zeros[0].mid() - 0.05).abs() < 1e-10);
        assert!(r.zeros[0].width() <= 0.148 * 1e-10);
        let s = series(grid[..50].to_vec(), |h| h);
        assert!(scan_zeros(&s, 0.148, eval, &ScanOptions::default()).is_err());
    }

    #[test]
    fn noise_is_not_counted() {
        let grid: Vec<f64> = (0..300).map(|i| 0.148 * 0.98f64.powi(i)).collect();
        let mut s = series(grid.clone(), |_| 0.0);
        s.error_estimates = vec![1e-9; s.len()];
        let eval = |_h: f64| Ok(Integral { value: 0.0, error: 1e-9 });
        let r = scan_zeros(&s, 0.148, eval, &ScanOptions::default()).unwrap();
        assert_eq!(r.count, 0);
        assert!(r.flags.contains(&"identically-zero".to_string()));
        let mut s = series(grid, |h| h - 0.05);
        for i in 100..140 {
            s.error_estimates[i] = 1.0;
        }
        assert!(matches!(
            scan_zeros(&s, 0.148, eval, &ScanOptions::default()),
            Err(Error::NoisySeries { .. })
        ));
    }

    fn circle(k: usize, power: u32, turn: f64) -> Vec<Complex64> {
        (0..=k)
            .map(|i| Complex64::from_polar(1.0, turn * i as f64 / k as f64).powu(power))
            .collect()
    }

    #[test]
    fn delta_arg_examples() {
        let one = delta_arg(&circle(64, 1, 2.0 * PI)).unwrap();
        assert!((one - 2.0 * PI).abs() < 1e-12);
        let half = delta_arg(&circle(64, 2, PI)).unwrap();
        assert!((half - 2.0 * PI).abs() < 1e-12);
        assert_eq!(delta_arg(&[Complex64::new(2.0, 0.0); 5]).unwrap(), 0.0);
        let mut rev = circle(64, 1, 2.0 * PI);
        rev.reverse();
        assert_eq!(delta_arg(&rev).unwrap(), -one);
        let mut with_zero = circle(8, 1, 1.0);
        with_zero[3] = Complex64::new(0.0, 0.0);
        assert!(matches!(delta_arg(&with_zero), Err(Error::OnContourZero { index: 3 })));
    }

    fn model(e: Expansion) -> PsiExpansion {
        PsiExpansion {
            expansion: e,
            window: (-2.0, 2.0),
            t_range: (0.01, 100.0),
            residual: 0.0,
            lambda: 0.5,
        }
    }

    #[test]
    fn argument_bounds_of_simple_models() {
        let contour = Contour::new(0.1, 10.0, 1.0, 16).unwrap();
        let root = Expansion::monomial(Term::new(0.5, 0, 0), Complex64::new(1.0, 0.0));
        let f = |z: Complex64| root.eval(z, 0.0);
        let parts = contour_increments(&f, &contour).unwrap();
        assert!((parts[0] - PI).abs() < 1e-12);
        assert!((parts[2] + PI).abs() < 1e-12);
        assert!(argument_principle_count(&model(root), &contour).unwrap().abs() < 1e-12);
        let constant = Expansion::monomial(Term::new(0.0, 0, 0), Complex64::new(3.0, 0.0));
        assert_eq!(argument_principle_count(&model(constant), &contour).unwrap(), 0.0);

        // log t − 1 vanishes at t = e, inside the sector
        let mut shifted = Expansion::monomial(Term::new(0.0, 1, 0), Complex64::new(1.0, 0.0));
        shifted.add_term(Term::new(0.0, 0, 0), Complex64::new(-1.0, 0.0));
        let bound = argument_principle_count(&model(shifted.clone()), &contour).unwrap();
        assert!((bound - 1.0).abs() < 1e-9);
        let mut untrusted = model(shifted);
        untrusted.residual = 1e-2;
        assert!(matches!(
            argument_principle_count(&untrusted, &contour),
            Err(Error::UntrustedBound { .. })
        ));
    }

    #[test]
    fn contour_validation() {
        assert!(Contour::new(1.0, 0.5, 1.0, 8).is_err());
        assert!(Contour::new(0.1, 1.0, 0.0, 8).is_err());
    }
}
