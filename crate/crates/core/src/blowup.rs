//! Directional and quasi-homogeneous blow-up charts at the triple point,
//! the divisor first integral `G` and the saddle linearizations.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::darboux::build_normal_form;
use crate::error::{Error, Result};
use crate::oval::find_center;

/// Exponents `(ε, ε₊, ε₋)` of the normal form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalExponents {
    pub eps: f64,
    pub eps_plus: f64,
    pub eps_minus: f64,
}

impl NormalExponents {
    pub fn new(eps: f64, eps_plus: f64, eps_minus: f64) -> Result<Self> {
        for (name, value) in [("eps", eps), ("eps_plus", eps_plus), ("eps_minus", eps_minus)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidExponent {
                    name: name.into(),
                    value,
                });
            }
        }
        Ok(Self {
            eps,
            eps_plus,
            eps_minus,
        })
    }

    pub fn unit() -> Self {
        Self {
            eps: 1.0,
            eps_plus: 1.0,
            eps_minus: 1.0,
        }
    }

    /// `a = ε + ε₊ + ε₋`.
    pub fn a(&self) -> f64 {
        self.eps + self.eps_plus + self.eps_minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    W1,
    W2,
    W3,
    Tau1,
    Tau2,
    Tau3,
    Vb1,
    Vc1,
    Va3,
    Vb3,
}

impl Chart {
    pub fn is_directional(self) -> bool {
        matches!(self, Chart::W1 | Chart::W2 | Chart::W3)
    }

    pub fn name(self) -> &'static str {
        match self {
            Chart::W1 => "W1",
            Chart::W2 => "W2",
            Chart::W3 => "W3",
            Chart::Tau1 => "tau1",
            Chart::Tau2 => "tau2",
            Chart::Tau3 => "tau3",
            Chart::Vb1 => "V_b1",
            Chart::Vc1 => "V_c1",
            Chart::Va3 => "V_a3",
            Chart::Vb3 => "V_b3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub coords: [f64; 3],
}

impl ChartPoint {
    pub fn new(chart: Chart, coords: [f64; 3]) -> Self {
        Self { chart, coords }
    }
}

/// Blow-down `(x, y, λ)` of a point in a directional chart.
pub fn chart_map(cp: &ChartPoint) -> Result<[f64; 3]> {
    let [p, q, r] = cp.coords;
    match cp.chart {
        Chart::W1 => Ok([p, p * q, p * r]),
        Chart::W2 => Ok([p * q, q, q * r]),
        Chart::W3 => Ok([p * r, q * r, r]),
        other => Err(Error::ChartDomain(format!(
            "{} is not a directional chart",
            other.name()
        ))),
    }
}

/// Coordinates of `(x, y, λ)` in a directional chart.
pub fn to_chart(chart: Chart, point: [f64; 3]) -> Result<ChartPoint> {
    let [x, y, l] = point;
    let (pivot, coords) = match chart {
        Chart::W1 => (x, [x, y / x, l / x]),
        Chart::W2 => (y, [x / y, y, l / y]),
        Chart::W3 => (l, [x / l, y / l, l]),
        other => {
            return Err(Error::ChartDomain(format!(
                "{} is not a directional chart",
                other.name()
            )))
        }
    };
    if pivot == 0.0 {
        return Err(Error::ChartDomain(format!(
            "point {point:?} is not visible in {}",
            chart.name()
        )));
    }
    Ok(ChartPoint::new(chart, coords))
}

/// Transition between directional charts.
pub fn transition(cp: &ChartPoint, target: Chart) -> Result<ChartPoint> {
    to_chart(target, chart_map(cp)?)
}

/// `H∘σ₁ = u₁ᵃ (1−w₁)^ε (1−v₁)^{ε₊} (1+v₁)^{ε₋}` with factors taken in absolute
/// value, which is the orientation that is positive on `Q`.
pub fn pullback_h_w1(exps: &NormalExponents, u: f64, v: f64, w: f64) -> f64 {
    u.abs().powf(exps.a())
        * (1.0 - w).abs().powf(exps.eps)
        * (1.0 - v).abs().powf(exps.eps_plus)
        * (1.0 + v).abs().powf(exps.eps_minus)
}

/// First integral `G = λᵃ/H` restricted to the divisor chart `(v₁, w₁)`.
pub fn exceptional_g(exps: &NormalExponents, v: f64, w: f64) -> Result<f64> {
    if !(v > -1.0 && v < 1.0 && w > 0.0 && w < 1.0) {
        return Err(Error::ChartDomain(format!(
            "(v1, w1) = ({v}, {w}) is not interior to Q"
        )));
    }
    Ok(w.powf(exps.a())
        * (1.0 - w).powf(-exps.eps)
        * (1.0 - v).powf(-exps.eps_plus)
        * (1.0 + v).powf(-exps.eps_minus))
}

/// `t = λᵃ/h`.
pub fn rescaled_t(lambda: f64, h: f64, a: f64) -> f64 {
    lambda.powf(a) / h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SaddleLabel {
    PPlus,
    PMinus,
    QPlus,
    QMinus,
}

impl SaddleLabel {
    pub const ALL: [SaddleLabel; 4] = [
        SaddleLabel::PPlus,
        SaddleLabel::PMinus,
        SaddleLabel::QPlus,
        SaddleLabel::QMinus,
    ];

    /// Location `(u₁, v₁, w₁)` in `W₁`.
    pub fn location(self) -> [f64; 3] {
        match self {
            SaddleLabel::PPlus => [0.0, 1.0, 0.0],
            SaddleLabel::PMinus => [0.0, -1.0, 0.0],
            SaddleLabel::QPlus => [0.0, 1.0, 1.0],
            SaddleLabel::QMinus => [0.0, -1.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SaddleLabel::PPlus => "p+",
            SaddleLabel::PMinus => "p-",
            SaddleLabel::QPlus => "q+",
            SaddleLabel::QMinus => "q-",
        }
    }

    /// Linear part read off the vector fields in the proof.
    pub fn proof_eigen(self, exps: &NormalExponents) -> [f64; 3] {
        let (e, ep, em, a) = (exps.eps, exps.eps_plus, exps.eps_minus, exps.a());
        match self {
            SaddleLabel::PPlus => [ep, -a, -ep],
            SaddleLabel::PMinus => [-em, a, em],
            SaddleLabel::QPlus => [0.0, -e, ep],
            SaddleLabel::QMinus => [0.0, -e, em],
        }
    }

    /// Eigenvalues as printed in the statement of the singular-point result.
    pub fn printed_eigen(self, exps: &NormalExponents) -> [f64; 3] {
        let (e, ep, em, a) = (exps.eps, exps.eps_plus, exps.eps_minus, exps.a());
        match self {
            SaddleLabel::PPlus => [ep, -a, -em],
            SaddleLabel::PMinus => [-em, a, em],
            SaddleLabel::QPlus => [0.0, -e, ep],
            SaddleLabel::QMinus => [0.0, -e, em],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleData {
    pub location: ChartPoint,
    /// Eigenvalues along the `(u₁, v₁, w₁)` axes, scaled so the first
    /// nonzero entry agrees with the proof's formula.
    pub eigen: [f64; 3],
    pub label: SaddleLabel,
}

/// Direction field of the blown-up foliation in `W₁`: the cross product of
/// `∇ log(H∘σ₁)` and `∇(u₁w₁)`, multiplied by `(1−v²)(1−w)` to clear poles.
pub fn direction_field_w1(exps: &NormalExponents, p: [f64; 3]) -> [f64; 3] {
    let [u, v, w] = p;
    let (e, ep, em, a) = (exps.eps, exps.eps_plus, exps.eps_minus, exps.a());
    let phi = -ep * (1.0 + v) + em * (1.0 - v);
    [
        u * (1.0 - w) * phi,
        (1.0 - v * v) * (-e * w - a * (1.0 - w)),
        -w * (1.0 - w) * phi,
    ]
}

/// Interior singular point of the `W₁` field off the square: the blown-up center.
pub fn divisor_center_w1(exps: &NormalExponents) -> [f64; 3] {
    let s = exps.eps_plus + exps.eps_minus;
    [0.0, (exps.eps_minus - exps.eps_plus) / s, exps.a() / s]
}

fn jacobian(exps: &NormalExponents, p: [f64; 3]) -> Matrix3<f64> {
    // The field is cubic, so Richardson-extrapolated central differences are exact
    // up to rounding.
    let central = |step: f64| {
        let mut m = Matrix3::zeros();
        for j in 0..3 {
            let mut hi = p;
            let mut lo = p;
            hi[j] += step;
            lo[j] -= step;
            let fh = direction_field_w1(exps, hi);
            let fl = direction_field_w1(exps, lo);
            for i in 0..3 {
                m[(i, j)] = (fh[i] - fl[i]) / (2.0 * step);
            }
        }
        m
    };
    let coarse = central(1e-3);
    let fine = central(5e-4);
    (fine * 4.0 - coarse) / 3.0
}

/// Numerical linearization of the `W₁` direction field at a divisor corner.
pub fn saddle_eigen(exps: &NormalExponents, label: SaddleLabel) -> Result<SaddleData> {
    let loc = label.location();
    let jac = jacobian(exps, loc);
    let values = jac
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            if z.im.abs() > 1e-9 * z.re.abs().max(1.0) {
                Err(Error::Degeneracy {
                    label: label.name().into(),
                })
            } else {
                Ok(z.re)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let scale = jac.abs().max().max(1.0);

    let mut eigen = [f64::NAN; 3];
    let mut vectors = Matrix3::zeros();
    for (k, &mu) in values.iter().enumerate() {
        let shifted = jac - Matrix3::identity() * mu;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| Error::Degeneracy {
            label: label.name().into(),
        })?;
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("three singular values");
        let vec: Vector3<f64> = v_t.row(imin).transpose();
        vectors.set_column(k, &vec);
        let axis = vec.iamax();
        if !eigen[axis].is_nan() {
            return Err(Error::Degeneracy {
                label: label.name().into(),
            });
        }
        eigen[axis] = mu;
    }
    let sing = vectors.singular_values();
    if sing.min() < 1e-8 * sing.max() || eigen.iter().any(|e| e.is_nan()) {
        return Err(Error::Degeneracy {
            label: label.name().into(),
        });
    }
    for e in &mut eigen {
        if e.abs() < 1e-12 * scale {
            *e = 0.0;
        }
    }

    let reference = label.proof_eigen(exps);
    if let Some(k) = (0..3).find(|&k| eigen[k] != 0.0 && reference[k] != 0.0) {
        let factor = reference[k] / eigen[k];
        for e in &mut eigen {
            // `+ 0.0` folds −0 into 0
            *e = *e * factor + 0.0;
        }
    }
    Ok(SaddleData {
        location: ChartPoint::new(Chart::W1, loc),
        eigen,
        label,
    })
}

/// Maps a quasi-homogeneous chart point (including the `V` sub-charts) to
/// `(a, b, c)` with weights `(1/2, 1, 1/2)`.
pub fn qh_chart_map(cp: &ChartPoint) -> Result<[f64; 3]> {
    let [p, q, r] = cp.coords;
    let root = |s: f64| {
        if s < 0.0 {
            Err(Error::ChartDomain(format!(
                "negative radicand {s} in chart {}",
                cp.chart.name()
            )))
        } else {
            Ok(s.sqrt())
        }
    };
    match cp.chart {
        Chart::Tau1 => {
            let s = root(p)?;
            Ok([s, q * p, r * s])
        }
        Chart::Tau2 => {
            let s = root(q)?;
            Ok([p * s, q, r * s])
        }
        Chart::Tau3 => {
            let s = root(r)?;
            Ok([p * s, q * r, s])
        }
        Chart::Vb1 | Chart::Vc1 | Chart::Va3 | Chart::Vb3 => {
            qh_chart_map(&ChartPoint::new(parent_chart(cp.chart), v_to_parent(cp)))
        }
        other => Err(Error::ChartDomain(format!(
            "{} is not a quasi-homogeneous chart",
            other.name()
        ))),
    }
}

fn parent_chart(chart: Chart) -> Chart {
    match chart {
        Chart::Vb1 | Chart::Vc1 => Chart::Tau1,
        _ => Chart::Tau3,
    }
}

fn v_to_parent(cp: &ChartPoint) -> [f64; 3] {
    let [p, q, r] = cp.coords;
    match cp.chart {
        Chart::Vb1 => [p, q, q * r],
        Chart::Vc1 => [p, q * r, r],
        Chart::Va3 => [p, p * q, r],
        Chart::Vb3 => [p * q, p, r],
        _ => cp.coords,
    }
}

/// `ψ(a, b, c) = ca + b`.
pub fn psi(abc: [f64; 3]) -> f64 {
    abc[2] * abc[0] + abc[1]
}

/// Total transform of `ψ` in a quasi-homogeneous chart, factored as
/// `(divisor factor, strict transform)`.
pub fn qh_total_transform(cp: &ChartPoint) -> Result<(f64, f64)> {
    let [p, q, r] = cp.coords;
    match cp.chart {
        Chart::Tau1 => Ok((p, r + q)),
        Chart::Tau2 => Ok((q, p * r + 1.0)),
        Chart::Tau3 => Ok((r, p + q)),
        Chart::Vb1 => Ok((p * q, r + 1.0)),
        Chart::Vc1 => Ok((p * r, 1.0 + q)),
        Chart::Va3 => Ok((p * r, 1.0 + q)),
        Chart::Vb3 => Ok((p * r, q + 1.0)),
        other => Err(Error::ChartDomain(format!(
            "{} is not a quasi-homogeneous chart",
            other.name()
        ))),
    }
}

/// Representative of the reduced function in the chart where `(J₁, J₂, 1/log λ)`
/// is seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhiClass {
    /// `J/log λ`, in `τ₂`.
    JOverLog,
    /// `J₁/log λ`, in `V_{c₁}` or `V_{a₃}`.
    J1OverLog,
    /// `J₂`, in `V_{b₁}` or `V_{b₃}`.
    J2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiReduction {
    pub psi: f64,
    pub class: PhiClass,
    pub chart: Chart,
}

/// `ψ = J₁/log λ + J₂`, tagged with the chart in which `(a, b, c) =
/// (J₁, J₂, 1/log λ)` is seen after the quasi-homogeneous blow-up.
pub fn psi_reduction(j1: f64, j2: f64, log_lambda: f64) -> Result<PsiReduction> {
    if log_lambda == 0.0 || !log_lambda.is_finite() {
        return Err(Error::ChartDomain(format!(
            "log lambda = {log_lambda} must be finite and nonzero"
        )));
    }
    let (a, b, c) = (j1, j2, 1.0 / log_lambda);
    let value = c * a + b;
    let (chart, class) = if a == 0.0 {
        (Chart::Vb3, PhiClass::J2)
    } else if b == 0.0 {
        (Chart::Vc1, PhiClass::J1OverLog)
    } else {
        let (wa, wb, wc) = (a * a, b.abs(), c * c);
        if wb >= wa && wb >= wc {
            (Chart::Tau2, PhiClass::JOverLog)
        } else if wa >= wc {
            // τ₁: b₁ = b/a², c₁ = c/a
            if (b / wa).abs() >= (c / a).abs() {
                (Chart::Vb1, PhiClass::J2)
            } else {
                (Chart::Vc1, PhiClass::J1OverLog)
            }
        } else if (a / c).abs() >= (b / wc).abs() {
            // τ₃: a₃ = a/c, b₃ = b/c²
            (Chart::Va3, PhiClass::J1OverLog)
        } else {
            (Chart::Vb3, PhiClass::J2)
        }
    };
    Ok(PsiReduction {
        psi: value,
        class,
        chart,
    })
}

/// One line of the `blowup-check` table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub label: String,
    pub value: f64,
    pub reference: f64,
    pub residual: f64,
}

impl CheckRow {
    fn new(check: &str, label: impl Into<String>, value: f64, reference: f64, residual: f64) -> Self {
        Self {
            check: check.into(),
            label: label.into(),
            value,
            reference,
            residual,
        }
    }
}

/// Largest relative residual of `G·(H∘σ₁) = (u₁w₁)ᵃ` over `samples` points
/// drawn inside `(0,1) × Q`.
pub fn g_identity_residual(exps: &NormalExponents, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let u = rng.gen_range(1e-3..1.0);
        let v = rng.gen_range(-0.999..0.999);
        let w = rng.gen_range(1e-3..0.999);
        let lhs = exceptional_g(exps, v, w)? * pullback_h_w1(exps, u, v, w);
        let rhs = (u * w).powf(exps.a());
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    Ok(worst)
}

/// Largest `|divisor · strict − ψ∘chart|` per quasi-homogeneous chart.
pub fn qh_identity_residuals(samples: usize, seed: u64) -> Result<Vec<(Chart, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let charts = [
        Chart::Tau1,
        Chart::Tau2,
        Chart::Tau3,
        Chart::Vb1,
        Chart::Vc1,
        Chart::Va3,
        Chart::Vb3,
    ];
    charts
        .iter()
        .map(|&chart| {
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let mut c: [f64; 3] = [
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                ];
                // keep the radicand of the parent τ chart nonnegative
                let k = match chart {
                    Chart::Tau1 | Chart::Vb1 | Chart::Vc1 => 0,
                    Chart::Tau2 => 1,
                    _ => 2,
                };
                c[k] = c[k].abs();
                let cp = ChartPoint::new(chart, c);
                let (d, s) = qh_total_transform(&cp)?;
                worst = worst.max((d * s - psi(qh_chart_map(&cp)?)).abs());
            }
            Ok((chart, worst))
        })
        .collect()
}

/// The `blowup-check` table: chart identities, `t` at the nest top, saddle
/// locations and eigenvalues against both the proof and the printed
/// statement.
pub fn blowup_report(exps: &NormalExponents, lambdas: &[f64], samples: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let g = g_identity_residual(exps, samples, seed)?;
    let mut rows = vec![CheckRow::new("g-identity", "W1", g, 0.0, g)];
    for (chart, r) in qh_identity_residuals(samples, seed.wrapping_add(1))? {
        rows.push(CheckRow::new("qh-total-transform", chart.name(), r, 0.0, r));
    }
    let a = exps.a();
    for &lambda in lambdas {
        let sys = build_normal_form(exps.eps, exps.eps_plus, exps.eps_minus, lambda, None)?;
        let range = find_center(&sys)?;
        let t = rescaled_t(lambda, range.h_max, a);
        // the nest sits at w₁ = λ/x > 1, outside Q, so G is taken from the pullback
        let [_, v, w] = divisor_center_w1(exps);
        let t_ref = w.powf(a) / pullback_h_w1(exps, 1.0, v, w);
        rows.push(CheckRow::new(
            "t-at-nest-top",
            format!("lambda={lambda:e}"),
            t,
            t_ref,
            (t - t_ref).abs() / t_ref,
        ));
    }
    for label in SaddleLabel::ALL {
        let data = saddle_eigen(exps, label)?;
        let field = direction_field_w1(exps, label.location());
        let f_norm = field.iter().map(|x| x.abs()).fold(0.0, f64::max);
        rows.push(CheckRow::new("saddle-location", label.name(), f_norm, 0.0, f_norm));
        let proof = label.proof_eigen(exps);
        let printed = label.printed_eigen(exps);
        for k in 0..3 {
            let axis = ["u1", "v1", "w1"][k];
            rows.push(CheckRow::new(
                "eigen-proof",
                format!("{}:{axis}", label.name()),
                data.eigen[k],
                proof[k],
                (data.eigen[k] - proof[k]).abs(),
            ));
            let gap = (data.eigen[k] - printed[k]).abs();
            if gap > 1e-8 {
                rows.push(CheckRow::new(
                    "eigen-printed-discrepancy",
                    format!("{}:{axis}", label.name()),
                    data.eigen[k],
                    printed[k],
                    gap,
                ));
            }
        }
    }
    Ok(rows)
}

/// CSV `check,label,value,reference,residual`.
pub fn report_csv(rows: &[CheckRow]) -> String {
    let mut s = String::from("check,label,value,reference,residual\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.17e},{:.17e},{:.6e}",
            r.check, r.label, r.value, r.reference, r.residual
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn directional_charts() {
        let p = chart_map(&ChartPoint::new(Chart::W1, [0.1, 0.5, 0.2])).unwrap();
        assert!(close(p, [0.1, 0.05, 0.02], 1e-15));
        let p = chart_map(&ChartPoint::new(Chart::W3, [0.3, 0.4, 0.1])).unwrap();
        assert!(close(p, [0.03, 0.04, 0.1], 1e-15));
        let p = chart_map(&ChartPoint::new(Chart::W1, [0.0, 0.7, -3.0])).unwrap();
        assert_eq!(p, [0.0, 0.0, 0.0]);
        assert!(chart_map(&ChartPoint::new(Chart::Tau1, [1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn transitions_round_trip() {
        let start = ChartPoint::new(Chart::W1, [0.3, -0.4, 0.7]);
        for target in [Chart::W2, Chart::W3] {
            let there = transition(&start, target).unwrap();
            let back = transition(&there, Chart::W1).unwrap();
            assert!(close(back.coords, start.coords, 1e-12));
        }
        assert!(to_chart(Chart::W2, [1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn g_examples() {
        let unit = NormalExponents::unit();
        assert!((exceptional_g(&unit, 0.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(exceptional_g(&unit, 1.0, 0.5).is_err());
        assert!(exceptional_g(&unit, 0.0, 0.0).is_err());
        let e = NormalExponents::new(1.0, 2.0f64.sqrt(), 0.5).unwrap();
        let (u, v, w) = (0.3, -0.2, 0.4);
        let lhs = exceptional_g(&e, v, w).unwrap() * pullback_h_w1(&e, u, v, w);
        let rhs = (u * w).powf(e.a());
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn rescaled_t_examples() {
        assert!((rescaled_t(1.0, 0.1, 3.0) - 10.0).abs() < 1e-14);
        let n = 4.0 * 0.5f64.powi(3) / 27.0;
        assert!((rescaled_t(0.5, n, 3.0) - 6.75).abs() < 1e-13);
    }

    #[test]
    fn unit_saddles_match_proof() {
        let unit = NormalExponents::unit();
        let p = saddle_eigen(&unit, SaddleLabel::PPlus).unwrap();
        assert!(close(p.eigen, [1.0, -3.0, -1.0], 1e-10), "{:?}", p.eigen);
        let m = saddle_eigen(&unit, SaddleLabel::PMinus).unwrap();
        assert!(close(m.eigen, [-1.0, 3.0, 1.0], 1e-10), "{:?}", m.eigen);
        for q in [SaddleLabel::QPlus, SaddleLabel::QMinus] {
            let s = saddle_eigen(&unit, q).unwrap();
            assert!(close(s.eigen, q.proof_eigen(&unit), 1e-10), "{:?}", s.eigen);
        }
    }

    #[test]
    fn asymmetric_saddle_disagrees_with_statement() {
        let e = NormalExponents::new(1.0, 2.0, 1.0).unwrap();
        let p = saddle_eigen(&e, SaddleLabel::PPlus).unwrap();
        assert!(close(p.eigen, [2.0, -4.0, -2.0], 1e-10), "{:?}", p.eigen);
        assert_eq!(SaddleLabel::PPlus.printed_eigen(&e), [2.0, -4.0, -1.0]);
    }

    #[test]
    fn divisor_center_is_singular() {
        let e = NormalExponents::new(1.0, 2.0, 1.0).unwrap();
        let c = divisor_center_w1(&e);
        let f = direction_field_w1(&e, c);
        assert!(f.iter().all(|x| x.abs() < 1e-14));
        // (1,2,1): center at x = λ/w = 0.75, y = v x = -0.25
        assert!((1.0 / c[2] - 0.75).abs() < 1e-15);
        assert!((c[1] / c[2] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn quasi_homogeneous_charts() {
        let p = qh_chart_map(&ChartPoint::new(Chart::Tau1, [0.04, 2.0, 3.0])).unwrap();
        assert!(close(p, [0.2, 0.08, 0.6], 1e-15));
        let p = qh_chart_map(&ChartPoint::new(Chart::Tau2, [1.0, 0.25, 2.0])).unwrap();
        assert!(close(p, [0.5, 0.25, 1.0], 1e-15));
        let p = qh_chart_map(&ChartPoint::new(Chart::Tau3, [2.0, 1.0, 0.09])).unwrap();
        assert!(close(p, [0.6, 0.09, 0.3], 1e-15));
        assert!(qh_chart_map(&ChartPoint::new(Chart::Tau1, [-0.1, 1.0, 1.0])).is_err());
    }

    #[test]
    fn total_transforms_factor_psi() {
        let cases = [
            (Chart::Tau1, [0.04, 2.0, 3.0]),
            (Chart::Tau2, [0.3, 0.25, -2.0]),
            (Chart::Tau3, [2.0, 1.0, 0.09]),
            (Chart::Vb1, [0.5, 0.2, 0.7]),
            (Chart::Vc1, [0.5, -0.2, 0.7]),
            (Chart::Va3, [0.3, 0.6, 0.2]),
            (Chart::Vb3, [0.3, 0.6, 0.2]),
        ];
        for (chart, coords) in cases {
            let cp = ChartPoint::new(chart, coords);
            let (d, s) = qh_total_transform(&cp).unwrap();
            let direct = psi(qh_chart_map(&cp).unwrap());
            assert!((d * s - direct).abs() < 1e-12, "{chart:?}");
        }
        let (d, s) = qh_total_transform(&ChartPoint::new(Chart::Tau1, [0.04, 2.0, 3.0])).unwrap();
        assert!((d * s - 0.2).abs() < 1e-15);
    }

    #[test]
    fn report_flags_printed_discrepancy_only_when_asymmetric() {
        let unit = blowup_report(&NormalExponents::unit(), &[1.0], 50, 3).unwrap();
        assert!(unit.iter().all(|r| r.check != "eigen-printed-discrepancy"));
        let skew = blowup_report(&NormalExponents::new(1.0, 2.0, 1.0).unwrap(), &[1.0], 50, 3).unwrap();
        let d: Vec<_> = skew.iter().filter(|r| r.check == "eigen-printed-discrepancy").collect();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].label, "p+:w1");
        let t = skew.iter().find(|r| r.check == "t-at-nest-top").unwrap();
        assert!(t.residual < 1e-10, "{t:?}");
    }

    #[test]
    fn psi_reduction_examples() {
        let r = psi_reduction(3.0, 2.0, -5.0).unwrap();
        assert!((r.psi - 1.4).abs() < 1e-15);
        assert!((5.0 * r.psi - 7.0).abs() < 1e-12);
        assert_eq!(psi_reduction(3.0, 0.0, -5.0).unwrap().class, PhiClass::J1OverLog);
        assert_eq!(psi_reduction(0.0, 2.0, -5.0).unwrap().class, PhiClass::J2);
        assert!(psi_reduction(1.0, 1.0, 0.0).is_err());
        assert_eq!(psi_reduction(0.1, 5.0, -2.0).unwrap().class, PhiClass::JOverLog);
        assert_eq!(psi_reduction(10.0, 1e-6, -2.0).unwrap().class, PhiClass::J1OverLog);
        assert_eq!(psi_reduction(1e-6, 1e-3, -2.0).unwrap().class, PhiClass::J2);
    }
}
