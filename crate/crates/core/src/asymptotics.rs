//! Power-log models of `J(λ, t)`: the split `J₁ + J₂ log λ`, fitted expansions
//! in `t`, and the symbolic variation operators acting on them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::integrator::IntegralSeries;

/// Basis element `t^β logˡ t (log λ)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub exponent: OrderedFloat<f64>,
    pub log_t: u32,
    pub log_lambda: u32,
}

impl Term {
    pub fn new(exponent: f64, log_t: u32, log_lambda: u32) -> Self {
        Self {
            exponent: OrderedFloat(exponent),
            log_t,
            log_lambda,
        }
    }
}

/// Finite linear combination of [`Term`]s with complex coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expansion {
    terms: BTreeMap<Term, Complex64>,
}

impl Expansion {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(term: Term, coeff: Complex64) -> Self {
        let mut e = Self::zero();
        e.add_term(term, coeff);
        e
    }

    /// Adds `coeff·term`; exactly cancelled terms are removed.
    pub fn add_term(&mut self, term: Term, coeff: Complex64) {
        let entry = self.terms.entry(term).or_insert(Complex64::new(0.0, 0.0));
        *entry += coeff;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&term);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Term, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.add_term(*t, *c);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        for (t, v) in &self.terms {
            out.add_term(*t, v * c);
        }
        out
    }

    /// Largest `|a − b|` over coefficients, relative to the largest coefficient.
    pub fn distance(&self, other: &Self) -> f64 {
        let diff = self.add(&other.scale(Complex64::new(-1.0, 0.0)));
        let scale = self
            .terms
            .values()
            .chain(other.terms.values())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let worst = diff.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }

    /// Value at `log t = z` (a point of the universal cover) and real `log λ`.
    pub fn eval(&self, z: Complex64, log_lambda: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(t, c)| {
                c * (z * t.exponent.0).exp()
                    * z.powu(t.log_t)
                    * log_lambda.powi(t.log_lambda as i32)
            })
            .sum()
    }

    /// Value at real `t > 0` on the principal sheet.
    pub fn eval_real(&self, t: f64, log_lambda: f64) -> f64 {
        self.eval(Complex64::new(t.ln(), 0.0), log_lambda).re
    }

    /// Distinct exponents with their highest `log t` power.
    pub fn exponent_profile(&self) -> Vec<(f64, u32)> {
        let mut out: BTreeMap<OrderedFloat<f64>, u32> = BTreeMap::new();
        for t in self.terms.keys() {
            let e = out.entry(t.exponent).or_insert(0);
            *e = (*e).max(t.log_t);
        }
        out.into_iter().map(|(k, v)| (k.0, v)).collect()
    }
}

/// `e^{iπx}`, exact when `x` is within `1e-12` of a multiple of `1/2`.
fn unit_phase(x: f64) -> Complex64 {
    let twice = 2.0 * x;
    let k = twice.round();
    if (twice - k).abs() < 2e-12 {
        match (k as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, PI * x)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

// Var of `z^l u^β` where `z ↦ z ± iπα` and `u^β ↦ u^β e^{±iπαβ}`: returns the
// coefficients of `z^{l−j}` for `j = 0..=l`.
fn variation_weights(beta: f64, l: u32, alpha: f64) -> Vec<Complex64> {
    let plus = unit_phase(alpha * beta);
    let minus = plus.conj();
    let shift = Complex64::new(0.0, PI * alpha);
    (0..=l)
        .map(|j| {
            let p = shift.powu(j);
            let q = if j % 2 == 0 { p } else { -p };
            (p * plus - q * minus) * binomial(l, j)
        })
        .collect()
}

/// `Var_{(t,α)} f = f(t e^{iπα}) − f(t e^{−iπα})`, acting symbolically.
pub fn var_t(f: &Expansion, alpha: f64) -> Expansion {
    let mut out = Expansion::zero();
    for (term, c) in f.terms() {
        let w = variation_weights(term.exponent.0, term.log_t, alpha);
        for (j, wj) in w.iter().enumerate() {
            if *wj != Complex64::new(0.0, 0.0) {
                let t = Term {
                    log_t: term.log_t - j as u32,
                    ..*term
                };
                out.add_term(t, c * wj);
            }
        }
    }
    out
}

/// A function of `λ` at fixed `t`: either a finite model or raw samples.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaFunction {
    Model(Expansion),
    Samples(Vec<(f64, f64)>),
}

/// `Var_{(λ,β)}`, acting on the `log λ` powers of a model. The models carry no
/// `λ`-power ramification, so only `log λ ↦ log λ ± iπβ` contributes.
pub fn var_lambda(g: &LambdaFunction, beta: f64) -> Result<Expansion> {
    let model = match g {
        LambdaFunction::Model(m) => m,
        LambdaFunction::Samples(_) => {
            return Err(Error::UnsupportedContinuation(
                "sampled functions of lambda have no continuation; fit a log split first".into(),
            ))
        }
    };
    let mut out = Expansion::zero();
    for (term, c) in model.terms() {
        let w = variation_weights(0.0, term.log_lambda, beta);
        for (j, wj) in w.iter().enumerate() {
            if *wj != Complex64::new(0.0, 0.0) {
                let t = Term {
                    log_lambda: term.log_lambda - j as u32,
                    ..*term
                };
                out.add_term(t, c * wj);
            }
        }
    }
    Ok(out)
}

/// Variation angles that annihilate `f`: `α = 1/β` repeated `L + 1` times for
/// each exponent `β` with highest log power `L` (`α = 1` for `β = 0`).
pub fn annihilator(f: &Expansion) -> Vec<f64> {
    let mut out = Vec::new();
    for (beta, l) in f.exponent_profile() {
        let alpha = if beta == 0.0 { 1.0 } else { 1.0 / beta };
        out.extend(std::iter::repeat_n(alpha, l as usize + 1));
    }
    out
}

/// Applies the [`annihilator`] angles in sequence.
pub fn annihilate(f: &Expansion) -> Expansion {
    annihilator(f).into_iter().fold(f.clone(), |acc, a| var_t(&acc, a))
}

/// Candidate exponent with the highest `log t` power it may carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub exponent: f64,
    pub max_log: u32,
}

impl Candidate {
    pub fn new(exponent: f64, max_log: u32) -> Self {
        Self { exponent, max_log }
    }
}

/// Candidate `t`-exponents `Σ kᵢ/εᵢ` over integer vectors with `kᵢ ≤ 1`, at
/// most one positive entry and `Σ|kᵢ| ≤ depth`, inside `[lo, hi]`. An
/// exponent reached by `m` vectors may carry `logᵐ⁻¹ t`; the constant term
/// always carries `log t`.
pub fn candidate_exponents(exponents: &[f64], depth: u32, window: (f64, f64)) -> Vec<Candidate> {
    fn walk(exps: &[f64], depth: i32, used: i32, positive: bool, acc: f64, out: &mut Vec<f64>) {
        let Some((first, rest)) = exps.split_first() else {
            out.push(acc);
            return;
        };
        for k in -(depth - used)..=1 {
            if k == 1 && positive {
                continue;
            }
            let used = used + k.abs();
            if used > depth {
                continue;
            }
            walk(rest, depth, used, positive || k == 1, acc + f64::from(k) / first, out);
        }
    }
    let mut values = Vec::new();
    walk(exponents, depth as i32, 0, false, 0.0, &mut values);
    values.retain(|b| *b >= window.0 - 1e-12 && *b <= window.1 + 1e-12);
    values.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<Candidate> = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j < values.len() && (values[j] - values[i]).abs() < 1e-9 {
            j += 1;
        }
        let beta = if values[i].abs() < 1e-12 { 0.0 } else { values[i] };
        let mut max_log = (j - i) as u32 - 1;
        if beta == 0.0 {
            max_log = max_log.max(1);
        }
        out.push(Candidate::new(beta, max_log));
        i = j;
    }
    out
}

/// `J = J₁ + J₂ log λ` per point of a shared `t`-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSplit {
    pub t_grid: Vec<f64>,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    /// Largest absolute residual of the `(1, log λ)` regression.
    pub residual: f64,
    /// Largest `|J|` over all samples.
    pub scale: f64,
    pub lambda_grid: Vec<f64>,
    /// `J₂` refitted on the first and second halves of the λ-grid.
    pub j2_halves: (Vec<f64>, Vec<f64>),
}

impl LogSplit {
    /// Regression of `values[m][i] = J(λ_m, t_i)` on `(1, log λ)`.
    pub fn compute(lambda_grid: &[f64], t_grid: &[f64], values: &[Vec<f64>]) -> Result<Self> {
        let m = lambda_grid.len();
        if m < 2 || values.len() != m || values.iter().any(|v| v.len() != t_grid.len()) {
            return Err(Error::InvalidParameter(
                "log split needs one value per lambda and t point".into(),
            ));
        }
        let logs: Vec<f64> = lambda_grid.iter().map(|l| l.ln()).collect();
        let column = |i: usize| -> Vec<f64> { values.iter().map(|v| v[i]).collect() };
        let half = m.div_ceil(2);
        let mut out = Self {
            t_grid: t_grid.to_vec(),
            j1: Vec::new(),
            j2: Vec::new(),
            residual: 0.0,
            scale: 0.0,
            lambda_grid: lambda_grid.to_vec(),
            j2_halves: (Vec::new(), Vec::new()),
        };
        for i in 0..t_grid.len() {
            let y = column(i);
            let (c1, c2) = linear_fit(&logs, &y);
            for (l, v) in logs.iter().zip(&y) {
                out.residual = out.residual.max((c1 + c2 * l - v).abs());
                out.scale = out.scale.max(v.abs());
            }
            out.j1.push(c1);
            out.j2.push(c2);
            out.j2_halves.0.push(linear_fit(&logs[..half], &y[..half]).1);
            out.j2_halves.1.push(linear_fit(&logs[m - half..], &y[m - half..]).1);
        }
        Ok(out)
    }

    /// Half-grid estimates of `J₂` agree within twice the residual.
    pub fn is_stable(&self) -> bool {
        let (a, b) = &self.j2_halves;
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 2.0 * self.residual)
    }

    /// `J₁ + J₂ log λ` at grid point `i`, constant in `t`.
    pub fn model_at(&self, i: usize) -> Expansion {
        let mut e = Expansion::zero();
        e.add_term(Term::new(0.0, 0, 0), Complex64::new(self.j1[i], 0.0));
        e.add_term(Term::new(0.0, 0, 1), Complex64::new(self.j2[i], 0.0));
        e
    }

    /// CSV `t,J1,J2`.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# lambdas={}, residual={:e}, scale={:e}\nt,J1,J2\n",
            self.lambda_grid.len(),
            self.residual,
            self.scale
        );
        for i in 0..self.t_grid.len() {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e}", self.t_grid[i], self.j1[i], self.j2[i]);
        }
        s
    }
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (my - slope * mx, slope)
}

/// Fits `J(λ, t) = J₁(t) + J₂(t) log λ` from series sampled at `h = λᵃ/t` on a
/// shared `t`-grid, with `λ` in geometric progression. Fails with a model
/// mismatch when the residual exceeds 1% of `max |J|`.
pub fn fit_log_split(series: &[IntegralSeries], a: f64) -> Result<LogSplit> {
    let split = log_split_of(series, a)?;
    let threshold = 0.01 * split.scale;
    if split.residual > threshold {
        return Err(Error::ModelMismatch {
            residual: split.residual,
            threshold,
        });
    }
    Ok(split)
}

/// The regression behind [`fit_log_split`], without the residual gate.
pub fn log_split_of(series: &[IntegralSeries], a: f64) -> Result<LogSplit> {
    if series.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "log split needs at least 5 lambda samples, got {}",
            series.len()
        )));
    }
    let lambdas: Vec<f64> = series.iter().map(|s| s.lambda).collect();
    let ratio = lambdas[1] / lambdas[0];
    if !(ratio > 0.0) || (ratio - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidParameter("lambda grid is not geometric".into()));
    }
    for w in lambdas.windows(2) {
        if ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("lambda grid is not geometric".into()));
        }
    }
    let t_of = |s: &IntegralSeries| -> Vec<f64> {
        s.h_grid.iter().map(|h| s.lambda.powf(a) / h).collect()
    };
    let t_grid = t_of(&series[0]);
    for s in &series[1..] {
        let t = t_of(s);
        if t.len() != t_grid.len() || t.iter().zip(&t_grid).any(|(x, y)| (x / y - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "series at lambda = {} is not on the shared t-grid",
                s.lambda
            )));
        }
    }
    let values: Vec<Vec<f64>> = series.iter().map(|s| s.values.clone()).collect();
    LogSplit::compute(&lambdas, &t_grid, &values)
}

/// Fitted expansion `Σ c t^β logˡ t` of `J(λ, ·)` at fixed `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiExpansion {
    pub expansion: Expansion,
    /// Exponent bounds `(v, V)`.
    pub window: (f64, f64),
    /// `t`-range of the fitted samples.
    pub t_range: (f64, f64),
    /// Largest residual relative to the largest `|J|`.
    pub residual: f64,
    pub lambda: f64,
}

impl PsiExpansion {
    pub fn eval(&self, t: f64) -> f64 {
        self.expansion.eval_real(t, self.lambda.ln())
    }

    /// CSV `exponent,log_power,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# lambda={:e}, window=[{}, {}], t_range=[{:e}, {:e}], residual={:e}\nexponent,log_power,re,im\n",
            self.lambda, self.window.0, self.window.1, self.t_range.0, self.t_range.1, self.residual
        );
        for (t, c) in self.expansion.terms() {
            let _ = writeln!(s, "{:.17e},{},{:.17e},{:.17e}", t.exponent.0, t.log_t, c.re, c.im);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiFitOptions {
    pub window: (f64, f64),
    pub max_log_power: u32,
    pub max_terms: usize,
    pub rel_tol: f64,
    pub max_condition: f64,
}

impl Default for PsiFitOptions {
    fn default() -> Self {
        Self {
            window: (-2.0, 1.0),
            max_log_power: 2,
            max_terms: 40,
            rel_tol: 1e-4,
            max_condition: 1e13,
        }
    }
}

/// Least-squares fit of `(t_i, J_i)` in the basis `{t^β logˡ t}` built from
/// `candidates` with `l ≤ max_log_power`.
pub fn fit_psi_samples(
    t: &[f64],
    values: &[f64],
    lambda: f64,
    candidates: &[Candidate],
    opts: &PsiFitOptions,
) -> Result<PsiExpansion> {
    if t.len() != values.len() || t.is_empty() {
        return Err(Error::InvalidParameter("empty or mismatched samples".into()));
    }
    let t_min = t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = t.iter().copied().fold(0.0, f64::max);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut out = PsiExpansion {
        expansion: Expansion::zero(),
        window: opts.window,
        t_range: (t_min, t_max),
        residual: 0.0,
        lambda,
    };
    if scale == 0.0 {
        return Ok(out);
    }
    let basis = psi_basis(candidates, opts);
    if basis.is_empty() {
        return Err(Error::InvalidParameter("no candidate exponent lies in the window".into()));
    }
    if basis.len() > t.len() {
        return Err(Error::Conditioning {
            condition: f64::INFINITY,
        });
    }
    // Rows weighted by the local size of J so that relative accuracy counts
    // evenly across decades.
    let weights: Vec<f64> = values.iter().map(|v| 1.0 / (v.abs() + 1e-3 * scale)).collect();
    let mut a = DMatrix::zeros(t.len(), basis.len());
    for (i, &ti) in t.iter().enumerate() {
        let lt = ti.ln();
        for (k, term) in basis.iter().enumerate() {
            a[(i, k)] = weights[i] * (term.exponent.0 * lt).exp() * lt.powi(term.log_t as i32);
        }
    }
    let norms: Vec<f64> = (0..basis.len()).map(|k| a.column(k).norm()).collect();
    for (k, n) in norms.iter().enumerate() {
        if *n == 0.0 {
            return Err(Error::Conditioning {
                condition: f64::INFINITY,
            });
        }
        a.column_mut(k).scale_mut(1.0 / n);
    }
    let b = DVector::from_iterator(t.len(), values.iter().zip(&weights).map(|(v, w)| v * w));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if !(condition <= opts.max_condition) {
        return Err(Error::Conditioning { condition });
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::InvalidParameter(format!("least squares failed: {e}")))?;
    for (k, term) in basis.iter().enumerate() {
        let c = x[k] / norms[k];
        if c != 0.0 {
            out.expansion.add_term(*term, Complex64::new(c, 0.0));
        }
    }
    let log_lambda = lambda.ln();
    out.residual = t
        .iter()
        .zip(values)
        .map(|(ti, v)| (out.expansion.eval_real(*ti, log_lambda) - v).abs())
        .fold(0.0, f64::max)
        / scale;
    if out.residual > opts.rel_tol {
        return Err(Error::ModelMismatch {
            residual: out.residual,
            threshold: opts.rel_tol,
        });
    }
    Ok(out)
}

fn psi_basis(candidates: &[Candidate], opts: &PsiFitOptions) -> Vec<Term> {
    let (lo, hi) = opts.window;
    let mut sorted: Vec<Candidate> = candidates
        .iter()
        .copied()
        .filter(|c| c.exponent >= lo - 1e-12 && c.exponent <= hi + 1e-12)
        .collect();
    sorted.sort_by(|a, b| b.exponent.total_cmp(&a.exponent));
    let mut basis = Vec::new();
    for c in sorted {
        for l in 0..=c.max_log.min(opts.max_log_power) {
            if basis.len() < opts.max_terms {
                basis.push(Term::new(c.exponent, l, 0));
            }
        }
    }
    basis
}

/// Fits a series `I(λ, h)` against `t = λᵃ/h`. The samples must span at
/// least three decades of `t`; a series that is zero within its error band
/// gives the empty expansion.
pub fn fit_psi_expansion(
    series: &IntegralSeries,
    a: f64,
    candidates: &[Candidate],
    opts: &PsiFitOptions,
) -> Result<PsiExpansion> {
    let t: Vec<f64> = series.h_grid.iter().map(|h| series.lambda.powf(a) / h).collect();
    let t_min = t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = t.iter().copied().fold(0.0, f64::max);
    if !(t_max >= (1e3 - 1e-6) * t_min) {
        return Err(Error::InvalidParameter(format!(
            "series covers t in [{t_min:e}, {t_max:e}], fewer than 3 decades"
        )));
    }
    let negligible = series
        .values
        .iter()
        .zip(&series.error_estimates)
        .all(|(v, e)| v.abs() <= *e);
    if negligible {
        return fit_psi_samples(&t, &vec![0.0; t.len()], series.lambda, candidates, opts);
    }
    fit_psi_samples(&t, &series.values, series.lambda, candidates, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn var_t_examples() {
        let f = Expansion::monomial(Term::new(2.0, 0, 0), c(1.0, 0.0));
        assert!(var_t(&f, 1.0).is_zero());
        let half = Expansion::monomial(Term::new(0.5, 0, 0), c(1.0, 0.0));
        let v = var_t(&half, 1.0);
        assert_eq!(v, Expansion::monomial(Term::new(0.5, 0, 0), c(0.0, 2.0)));
        let log = Expansion::monomial(Term::new(0.0, 1, 0), c(1.0, 0.0));
        let v = var_t(&log, 0.3);
        assert_eq!(v.len(), 1);
        let (term, coeff) = v.terms().next().unwrap();
        assert_eq!(term.log_t, 0);
        assert!((coeff - c(0.0, 2.0 * PI * 0.3)).norm() < 1e-15);
        let beta = Expansion::monomial(Term::new(0.3, 0, 0), c(1.0, 0.0));
        let (_, coeff) = var_t(&beta, 0.7).terms().next().map(|(t, c)| (*t, *c)).unwrap();
        assert!((coeff - c(0.0, 2.0 * (PI * 0.21).sin())).norm() < 1e-15);
    }

    #[test]
    fn var_t_matches_direct_continuation() {
        let mut f = Expansion::zero();
        f.add_term(Term::new(0.37, 2, 0), c(1.3, 0.0));
        f.add_term(Term::new(-1.2, 1, 0), c(-0.4, 0.0));
        let alpha = 0.61;
        let z = Complex64::new(0.8f64.ln(), 0.0);
        let shift = Complex64::new(0.0, PI * alpha);
        let direct = f.eval(z + shift, 0.0) - f.eval(z - shift, 0.0);
        let symbolic = var_t(&f, alpha).eval(z, 0.0);
        assert!((direct - symbolic).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn var_lambda_examples() {
        let split = LogSplit {
            t_grid: vec![1.0],
            j1: vec![3.0],
            j2: vec![2.0],
            residual: 0.0,
            scale: 0.0,
            lambda_grid: vec![],
            j2_halves: (vec![], vec![]),
        };
        let g = LambdaFunction::Model(split.model_at(0));
        let v = var_lambda(&g, 1.0).unwrap();
        assert_eq!(v, Expansion::monomial(Term::new(0.0, 0, 0), c(0.0, 4.0 * PI)));
        let twice = var_lambda(&LambdaFunction::Model(v), 1.0).unwrap();
        assert!(twice.is_zero());
        assert!(var_lambda(&LambdaFunction::Samples(vec![(0.1, 1.0)]), 1.0).is_err());
    }

    #[test]
    fn variations_commute_on_mixed_term() {
        let f = Expansion::monomial(Term::new(0.5, 0, 1), c(1.0, 0.0));
        let a = var_lambda(&LambdaFunction::Model(var_t(&f, 1.0)), 1.0).unwrap();
        let b = var_t(&var_lambda(&LambdaFunction::Model(f), 1.0).unwrap(), 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn annihilation_is_exact() {
        let mut f = Expansion::zero();
        f.add_term(Term::new(1.0, 2, 0), c(0.3, 0.0));
        f.add_term(Term::new(1.0 - std::f64::consts::SQRT_2, 1, 0), c(-1.1, 0.0));
        f.add_term(Term::new(0.0, 1, 0), c(2.0, 0.0));
        f.add_term(Term::new(-0.73, 0, 0), c(0.5, 0.0));
        assert_eq!(annihilator(&f).len(), 3 + 2 + 2 + 1);
        assert!(annihilate(&f).is_zero());
    }

    #[test]
    fn log_split_exact_models() {
        let lambdas: Vec<f64> = (6..=14).map(|m| 2f64.powi(-m)).collect();
        let t = vec![1.0, 10.0];
        let values: Vec<Vec<f64>> = lambdas.iter().map(|l| vec![3.0 + 2.0 * l.ln(); 2]).collect();
        let s = LogSplit::compute(&lambdas, &t, &values).unwrap();
        assert!(s.residual < 1e-12);
        assert!(s.j1.iter().all(|v| (v - 3.0).abs() < 1e-11));
        assert!(s.j2.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(s.is_stable());
        let values: Vec<Vec<f64>> = lambdas.iter().map(|_| vec![5.0; 2]).collect();
        let s = LogSplit::compute(&lambdas, &t, &values).unwrap();
        assert!(s.j1.iter().all(|v| (v - 5.0).abs() < 1e-12));
        assert!(s.j2.iter().all(|v| v.abs() < 1e-12));
    }

    fn synthetic(lambda: f64, a: f64, ts: &[f64], f: impl Fn(f64) -> f64) -> IntegralSeries {
        IntegralSeries {
            lambda,
            h_grid: ts.iter().map(|t| lambda.powf(a) / t).collect(),
            values: ts.iter().map(|&t| f(t)).collect(),
            error_estimates: vec![1e-14; ts.len()],
        }
    }

    #[test]
    fn fit_log_split_rejects_power_law() {
        let ts = [10.0];
        let series: Vec<IntegralSeries> = (6..=14)
            .map(|m| {
                let l = 2f64.powi(-m);
                synthetic(l, 3.0, &ts, |_| 1.0 / l)
            })
            .collect();
        assert!(matches!(
            fit_log_split(&series, 3.0),
            Err(Error::ModelMismatch { .. })
        ));
        let series: Vec<IntegralSeries> = (6..=14)
            .map(|m| {
                let l = 2f64.powi(-m);
                synthetic(l, 3.0, &ts, |_| 3.0 + 2.0 * l.ln())
            })
            .collect();
        let s = fit_log_split(&series, 3.0).unwrap();
        assert!((s.j2[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psi_fit_recovers_basis_member() {
        let ts: Vec<f64> = (0..=60).map(|i| 10f64.powf(i as f64 / 20.0)).collect();
        let s = synthetic(1.0, 3.0, &ts, |t| t.powf(1.0 / 3.0) + 0.5 * t.ln());
        let opts = PsiFitOptions {
            window: (0.0, 0.5),
            max_log_power: 1,
            ..Default::default()
        };
        let fit = fit_psi_expansion(&s, 3.0, &[Candidate::new(1.0 / 3.0, 0), Candidate::new(0.0, 1)], &opts).unwrap();
        let get = |e: f64, l: u32| {
            fit.expansion
                .terms()
                .find(|(t, _)| (t.exponent.0 - e).abs() < 1e-12 && t.log_t == l)
                .map(|(_, c)| c.re)
                .unwrap_or(0.0)
        };
        assert!((get(1.0 / 3.0, 0) - 1.0).abs() < 1e-8);
        assert!((get(0.0, 1) - 0.5).abs() < 1e-8);
        assert!(get(0.0, 0).abs() < 1e-8);
        assert!(annihilate(&fit.expansion).is_zero());

        let zero = synthetic(1.0, 3.0, &ts, |_| 0.0);
        assert!(fit_psi_expansion(&zero, 3.0, &[Candidate::new(0.0, 1)], &opts).unwrap().expansion.is_empty());
        let short = synthetic(1.0, 3.0, &ts[..20], |t| t);
        assert!(fit_psi_expansion(&short, 3.0, &[Candidate::new(0.0, 1)], &opts).is_err());
    }

    #[test]
    fn near_equal_exponents_are_ill_conditioned() {
        let ts: Vec<f64> = (0..=60).map(|i| 10f64.powf(i as f64 / 20.0)).collect();
        let s = synthetic(1.0, 3.0, &ts, |t| t.sqrt());
        let opts = PsiFitOptions {
            window: (0.0, 0.6),
            max_log_power: 0,
            ..Default::default()
        };
        let r = fit_psi_expansion(&s, 3.0, &[0.0, 1e-5, 2e-5, 3e-5].map(|d| Candidate::new(0.5 + d, 0)), &opts);
        assert!(matches!(r, Err(Error::Conditioning { .. })), "{r:?}");
    }

    #[test]
    fn candidates_cover_corner_exponents() {
        let c = candidate_exponents(&[1.0, 1.0, 1.0], 2, (-2.0, 1.0));
        let exps: Vec<f64> = c.iter().map(|c| c.exponent).collect();
        assert_eq!(exps, vec![1.0, 0.0, -1.0, -2.0]);
        assert_eq!(c[0].max_log, 2);
        let c = candidate_exponents(&[1.0, 2.0], 2, (-1.0, 1.0));
        let exps: Vec<f64> = c.iter().map(|c| c.exponent).collect();
        assert_eq!(exps, vec![1.0, 0.5, 0.0, -0.5, -1.0]);
        assert_eq!(c[2].max_log, 1);
        assert_eq!(c[1].max_log, 1);
        assert_eq!(c[0].max_log, 0);
    }
}
