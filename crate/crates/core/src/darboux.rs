//! Darboux data of the unfolded triple point: the factored first integral
//! `H_λ = ∏ (s_i P_i)^{ε_i} · Δ`, the integrating factor `M_λ = ∏ s_i P_i`
//! and the one-form `ω_λ = M_λ dH_λ / H_λ`.
//!
//! Every factor carries an orientation sign `s_i` so that `s_i P_i > 0` on
//! the nest domain; real powers are only ever taken of positive bases.

use crate::error::{Error, Result};
use crate::poly::{Jet2, Polynomial2};

pub type Point = [f64; 2];

/// One polynomial factor of the first integral together with its exponent
/// and orientation sign.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub poly: Polynomial2,
    pub exponent: f64,
    pub sign: f64,
}

/// The λ-dependent factor `P_λ = P_0 − λ U` with its exponent `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unfolding {
    pub base: Polynomial2,
    pub lambda_coeff: Polynomial2,
    pub exponent: f64,
}

impl Unfolding {
    pub fn at(&self, lambda: f64) -> Polynomial2 {
        self.base.sub(&self.lambda_coeff.scale(lambda))
    }
}

/// How orientation signs are chosen when a system is assembled.
#[derive(Debug, Clone)]
pub enum Orientation {
    /// One sign per factor, unfolding factor first.
    Explicit(Vec<f64>),
    /// Signs of the factors evaluated at this point.
    At(Point),
    /// Signs at the centroid of the triangle of pairwise intersections
    /// of the local factors.
    Centroid,
}

/// A polynomial one-form `η = R dx + S dy` with amplitude `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub r: Polynomial2,
    pub s: Polynomial2,
    pub degree: usize,
    pub kappa: f64,
}

impl Perturbation {
    pub fn new(r: Polynomial2, s: Polynomial2) -> Self {
        let degree = r.degree().max(s.degree());
        Self {
            r,
            s,
            degree,
            kappa: 0.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// `η = x dy`.
    pub fn x_dy() -> Self {
        Self::new(Polynomial2::zero(0), Polynomial2::x())
    }

    /// `η = dx`.
    pub fn dx() -> Self {
        Self::new(Polynomial2::constant(1.0), Polynomial2::zero(0))
    }

    /// The exact form `η = M_λ dF` for which `η / M_λ = dF` integrates to
    /// zero over every closed curve.
    pub fn exact(sys: &DarbouxSystem, potential: &Polynomial2) -> Self {
        let m = sys.integrating_factor_poly();
        Self::new(
            m.mul(&potential.derivative_x()),
            m.mul(&potential.derivative_y()),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.r.add(&other.r), self.s.add(&other.s)).with_kappa(self.kappa)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.r.scale(c), self.s.scale(c)).with_kappa(self.kappa)
    }

    pub fn eval(&self, p: Point) -> [f64; 2] {
        [self.r.eval(p[0], p[1]), self.s.eval(p[0], p[1])]
    }
}

/// Value, gradient and Hessian of `log H`.
#[derive(Debug, Clone, Copy)]
pub struct LogJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl LogJet {
    pub fn grad_norm(&self) -> f64 {
        self.grad[0].hypot(self.grad[1])
    }

    /// Curvature of the level curve through the point.
    pub fn level_curvature(&self) -> f64 {
        let [lx, ly] = self.grad;
        let [[lxx, lxy], [_, lyy]] = self.hess;
        let g = self.grad_norm();
        (lxx * ly * ly - 2.0 * lxy * lx * ly + lyy * lx * lx).abs() / (g * g * g)
    }
}

/// Outcome of the assumption checks on a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericityReport {
    pub a1: bool,
    pub lambda_derivative: f64,
    pub a2: bool,
    pub local_factors: usize,
    pub notes: Vec<String>,
}

/// The Darboux system at a fixed unfolding parameter.
#[derive(Debug, Clone)]
pub struct DarbouxSystem {
    unfolding: Unfolding,
    fixed: Vec<(Polynomial2, f64)>,
    unit: Option<Polynomial2>,
    unit_sign: f64,
    lambda: f64,
    orientation: Vec<f64>,
    // factors materialized at `lambda`; index 0 is the unfolding factor
    factors: Vec<Factor>,
    local: Vec<usize>,
    a: f64,
}

const LOCAL_TOL: f64 = 1e-12;

impl DarbouxSystem {
    pub fn new(
        unfolding: Unfolding,
        fixed: Vec<(Polynomial2, f64)>,
        unit: Option<Polynomial2>,
        lambda: f64,
        orientation: Orientation,
    ) -> Result<Self> {
        if !(unfolding.exponent > 0.0) {
            return Err(Error::InvalidExponent {
                name: "unfolding".into(),
                value: unfolding.exponent,
            });
        }
        for (k, (_, e)) in fixed.iter().enumerate() {
            if !(*e > 0.0) {
                return Err(Error::InvalidExponent {
                    name: format!("factor[{k}]"),
                    value: *e,
                });
            }
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        let unit_sign = match &unit {
            Some(d) => {
                let d0 = d.eval(0.0, 0.0);
                if d0 == 0.0 || !d0.is_finite() {
                    return Err(Error::InvalidUnit { value: d0 });
                }
                d0.signum()
            }
            None => 1.0,
        };
        let mut sys = Self {
            unfolding,
            fixed,
            unit,
            unit_sign,
            lambda,
            orientation: Vec::new(),
            factors: Vec::new(),
            local: Vec::new(),
            a: 0.0,
        };
        sys.materialize(&vec![1.0; sys.fixed.len() + 1]);
        sys.local = sys.find_local_factors();
        sys.a = sys.local.iter().map(|&i| sys.factors[i].exponent).sum();
        let signs = match orientation {
            Orientation::Explicit(signs) => {
                if signs.len() != sys.factors.len() {
                    return Err(Error::InvalidParameter(format!(
                        "expected {} orientation signs, got {}",
                        sys.factors.len(),
                        signs.len()
                    )));
                }
                signs.iter().map(|s| if *s < 0.0 { -1.0 } else { 1.0 }).collect()
            }
            Orientation::At(p) => sys.signs_at(p)?,
            Orientation::Centroid => {
                let c = sys.triangle_centroid().ok_or_else(|| {
                    Error::InvalidParameter("could not locate the nest triangle".into())
                })?;
                sys.signs_at(c)?
            }
        };
        sys.materialize(&signs);
        Ok(sys)
    }

    fn signs_at(&self, p: Point) -> Result<Vec<f64>> {
        self.factors
            .iter()
            .enumerate()
            .map(|(index, f)| {
                let v = f.poly.eval(p[0], p[1]);
                if v == 0.0 {
                    Err(Error::OutOfDomain {
                        x: p[0],
                        y: p[1],
                        index,
                        value: v,
                    })
                } else {
                    Ok(v.signum())
                }
            })
            .collect()
    }

    fn materialize(&mut self, signs: &[f64]) {
        self.orientation = signs.to_vec();
        let mut factors = Vec::with_capacity(self.fixed.len() + 1);
        factors.push(Factor {
            poly: self.unfolding.at(self.lambda),
            exponent: self.unfolding.exponent,
            sign: signs[0],
        });
        for (k, (poly, e)) in self.fixed.iter().enumerate() {
            factors.push(Factor {
                poly: poly.clone(),
                exponent: *e,
                sign: signs[k + 1],
            });
        }
        self.factors = factors;
    }

    fn find_local_factors(&self) -> Vec<usize> {
        let mut local = Vec::new();
        if self.unfolding.base.eval(0.0, 0.0).abs() < LOCAL_TOL {
            local.push(0);
        }
        for (k, (poly, _)) in self.fixed.iter().enumerate() {
            if poly.eval(0.0, 0.0).abs() < LOCAL_TOL {
                local.push(k + 1);
            }
        }
        local
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Sum of the exponents of the factors through the triple point.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn local_factors(&self) -> &[usize] {
        &self.local
    }

    pub fn unit(&self) -> Option<&Polynomial2> {
        self.unit.as_ref()
    }

    /// Orientation sign of the unit factor (the sign of `Δ(0,0)`).
    pub fn unit_sign(&self) -> f64 {
        self.unit_sign
    }

    pub fn unfolding(&self) -> &Unfolding {
        &self.unfolding
    }

    pub fn fixed_factors(&self) -> &[(Polynomial2, f64)] {
        &self.fixed
    }

    pub fn orientation(&self) -> &[f64] {
        &self.orientation
    }

    /// The same Darboux data at another unfolding parameter, keeping the
    /// orientation signs.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.unfolding.clone(),
            self.fixed.clone(),
            self.unit.clone(),
            lambda,
            Orientation::Explicit(self.orientation.clone()),
        )
    }

    /// Oriented factor values `s_i P_i(p)`.
    pub fn oriented_values(&self, p: Point) -> Vec<f64> {
        self.factors
            .iter()
            .map(|f| f.sign * f.poly.eval(p[0], p[1]))
            .collect()
    }

    fn check_domain(&self, p: Point) -> Result<()> {
        for (index, f) in self.factors.iter().enumerate() {
            let v = f.sign * f.poly.eval(p[0], p[1]);
            if !(v > 0.0) {
                return Err(Error::OutOfDomain {
                    x: p[0],
                    y: p[1],
                    index,
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn in_domain(&self, p: Point) -> bool {
        self.factors
            .iter()
            .all(|f| f.sign * f.poly.eval(p[0], p[1]) > 0.0)
            && self
                .unit
                .as_ref()
                .is_none_or(|d| self.unit_sign * d.eval(p[0], p[1]) > 0.0)
    }

    fn unit_value(&self, p: Point) -> Result<f64> {
        match &self.unit {
            None => Ok(1.0),
            Some(d) => {
                let v = self.unit_sign * d.eval(p[0], p[1]);
                if v > 0.0 {
                    Ok(v)
                } else {
                    Err(Error::OutOfDomain {
                        x: p[0],
                        y: p[1],
                        index: self.factors.len(),
                        value: v,
                    })
                }
            }
        }
    }

    /// `H_λ(p)`; requires every oriented factor to be positive at `p`.
    pub fn eval_h(&self, p: Point) -> Result<f64> {
        self.check_domain(p)?;
        let mut h = self.unit_value(p)?;
        for f in &self.factors {
            let base = f.sign * f.poly.eval(p[0], p[1]);
            h *= pow_positive(base, f.exponent);
        }
        Ok(h)
    }

    /// `∏ |P_i|^{ε_i} · |Δ|`, defined off the factor zero sets regardless of
    /// orientation.
    pub fn eval_h_unsigned(&self, p: Point) -> f64 {
        let mut h = self
            .unit
            .as_ref()
            .map_or(1.0, |d| d.eval(p[0], p[1]).abs());
        for f in &self.factors {
            h *= pow_positive(f.poly.eval(p[0], p[1]).abs(), f.exponent);
        }
        h
    }

    pub fn log_h(&self, p: Point) -> Result<f64> {
        self.check_domain(p)?;
        let mut l = self.unit_value(p)?.ln();
        for f in &self.factors {
            l += f.exponent * (f.sign * f.poly.eval(p[0], p[1])).ln();
        }
        Ok(l)
    }

    /// `log H` with gradient and Hessian.
    pub fn log_jet(&self, p: Point) -> Result<LogJet> {
        self.check_domain(p)?;
        let mut out = LogJet {
            value: 0.0,
            grad: [0.0; 2],
            hess: [[0.0; 2]; 2],
        };
        let mut add = |jet: Jet2, e: f64, sign: f64| {
            let v = sign * jet.value;
            let (gx, gy) = (jet.dx / jet.value, jet.dy / jet.value);
            out.value += e * v.ln();
            out.grad[0] += e * gx;
            out.grad[1] += e * gy;
            out.hess[0][0] += e * (jet.dxx / jet.value - gx * gx);
            out.hess[0][1] += e * (jet.dxy / jet.value - gx * gy);
            out.hess[1][1] += e * (jet.dyy / jet.value - gy * gy);
        };
        for f in &self.factors {
            add(f.poly.jet(p[0], p[1]), f.exponent, f.sign);
        }
        if let Some(d) = &self.unit {
            let jet = d.jet(p[0], p[1]);
            if !(self.unit_sign * jet.value > 0.0) {
                return Err(Error::OutOfDomain {
                    x: p[0],
                    y: p[1],
                    index: self.factors.len(),
                    value: self.unit_sign * jet.value,
                });
            }
            add(jet, 1.0, self.unit_sign);
        }
        out.hess[1][0] = out.hess[0][1];
        Ok(out)
    }

    /// `M_λ = ∏ s_i P_i` as a polynomial.
    pub fn integrating_factor_poly(&self) -> Polynomial2 {
        self.factors
            .iter()
            .fold(Polynomial2::constant(1.0), |acc, f| {
                acc.mul(&f.poly.scale(f.sign))
            })
    }

    /// `M_λ(p)`.
    pub fn integrating_factor_value(&self, p: Point) -> f64 {
        self.factors
            .iter()
            .map(|f| f.sign * f.poly.eval(p[0], p[1]))
            .product()
    }

    /// `M_λ(p)` with its gradient.
    pub fn integrating_factor(&self, p: Point) -> (f64, [f64; 2]) {
        let mut m = 1.0;
        let mut grad = [0.0; 2];
        for f in &self.factors {
            let j = f.poly.jet(p[0], p[1]);
            let (v, dx, dy) = (f.sign * j.value, f.sign * j.dx, f.sign * j.dy);
            grad = [grad[0] * v + m * dx, grad[1] * v + m * dy];
            m *= v;
        }
        (m, grad)
    }

    /// Coefficients `(A, B)` of `ω_λ (+ κ η)` at `p`, in the pole-free form
    /// `Σ ε_i (∏_{j≠i} s_j P_j) s_i dP_i + M_λ dΔ/Δ`.
    pub fn eval_omega(&self, eta: Option<&Perturbation>, p: Point) -> Result<[f64; 2]> {
        // running product rule: (m, a, b) absorbs one factor at a time
        let mut m = 1.0;
        let mut a = 0.0;
        let mut b = 0.0;
        for f in &self.factors {
            let j = f.poly.jet(p[0], p[1]);
            let (v, dx, dy) = (f.sign * j.value, f.sign * j.dx, f.sign * j.dy);
            a = a * v + f.exponent * m * dx;
            b = b * v + f.exponent * m * dy;
            m *= v;
        }
        if let Some(d) = &self.unit {
            let dj = d.jet(p[0], p[1]);
            if dj.value == 0.0 {
                return Err(Error::OutOfDomain {
                    x: p[0],
                    y: p[1],
                    index: self.factors.len(),
                    value: 0.0,
                });
            }
            a += m * dj.dx / dj.value;
            b += m * dj.dy / dj.value;
        }
        if let Some(eta) = eta {
            let [r, s] = eta.eval(p);
            a += eta.kappa * r;
            b += eta.kappa * s;
        }
        Ok([a, b])
    }

    /// Pairwise intersection of the zero sets of factors `i` and `j`, found
    /// by Newton iteration from `seed`.
    pub fn intersect(&self, i: usize, j: usize, seed: Point) -> Option<Point> {
        intersect_polys(&self.factors[i].poly, &self.factors[j].poly, seed)
    }

    /// Vertices of the nest triangle: pairwise intersections of the three
    /// local factors closest to the origin.
    pub fn nest_vertices(&self) -> Option<Vec<Point>> {
        if self.local.len() != 3 {
            return None;
        }
        let scale = self.lambda.max(1e-300);
        let seeds = [
            [0.0, 0.0],
            [scale, 0.0],
            [-scale, 0.0],
            [0.0, scale],
            [0.0, -scale],
        ];
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let mut out = Vec::with_capacity(3);
        for (a, b) in pairs {
            let (i, j) = (self.local[a], self.local[b]);
            let best = seeds
                .iter()
                .filter_map(|s| self.intersect(i, j, *s))
                .min_by(|p, q| norm(*p).total_cmp(&norm(*q)))?;
            out.push(best);
        }
        Some(out)
    }

    pub fn triangle_centroid(&self) -> Option<Point> {
        let v = self.nest_vertices()?;
        Some([
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ])
    }

    /// Checks the two genericity assumptions: the unfolding factor moves
    /// with λ at the origin, and the factors meet pairwise transversally with
    /// the origin as the only triple point. `half_width` sets the square box
    /// searched for other intersections.
    pub fn check_genericity(&self, half_width: f64) -> GenericityReport {
        let mut notes = Vec::new();
        let step = 1e-6;
        let p_plus = self.unfolding.at(step).eval(0.0, 0.0);
        let p_minus = self.unfolding.at(-step).eval(0.0, 0.0);
        let lambda_derivative = (p_plus - p_minus) / (2.0 * step);
        let a1 = lambda_derivative.abs() > 1e-9;
        if !a1 {
            notes.push("unfolding factor does not depend on lambda at the origin".into());
        }

        // Transversality is examined at λ = 0, where the triple point sits.
        let polys: Vec<Polynomial2> = std::iter::once(self.unfolding.base.clone())
            .chain(self.fixed.iter().map(|(p, _)| p.clone()))
            .collect();
        let mut a2 = true;
        if self.local.len() != 3 {
            a2 = false;
            notes.push(format!(
                "expected three factors through the origin, found {}",
                self.local.len()
            ));
        }
        for (ai, &i) in self.local.iter().enumerate() {
            for &j in &self.local[ai + 1..] {
                if !transversal(&polys[i], &polys[j], [0.0, 0.0]) {
                    a2 = false;
                    notes.push(format!("factors {i} and {j} are tangent at the origin"));
                }
            }
        }
        let n = 9;
        for i in 0..polys.len() {
            for j in (i + 1)..polys.len() {
                let mut found: Vec<Point> = Vec::new();
                for sx in 0..n {
                    for sy in 0..n {
                        let seed = [
                            -half_width + 2.0 * half_width * sx as f64 / (n - 1) as f64,
                            -half_width + 2.0 * half_width * sy as f64 / (n - 1) as f64,
                        ];
                        if let Some(p) = intersect_polys(&polys[i], &polys[j], seed) {
                            let inside = p[0].abs() <= half_width && p[1].abs() <= half_width;
                            if inside && !found.iter().any(|q| dist(*q, p) < 1e-8) {
                                found.push(p);
                            }
                        }
                    }
                }
                for p in found {
                    let at_origin = norm(p) < 1e-9;
                    if !transversal(&polys[i], &polys[j], p) {
                        a2 = false;
                        notes.push(format!(
                            "factors {i} and {j} meet tangentially at ({:.6}, {:.6})",
                            p[0], p[1]
                        ));
                    }
                    if !at_origin {
                        for (k, q) in polys.iter().enumerate() {
                            if k != i && k != j && q.eval(p[0], p[1]).abs() < 1e-10 {
                                a2 = false;
                                notes.push(format!(
                                    "additional triple point at ({:.6}, {:.6})",
                                    p[0], p[1]
                                ));
                            }
                        }
                    }
                }
            }
        }
        GenericityReport {
            a1,
            lambda_derivative,
            a2,
            local_factors: self.local.len(),
            notes,
        }
    }
}

/// Builds the local normal form `(x−λ)^ε (y−x)^{ε₊} (y+x)^{ε₋} Δ`, oriented
/// to be positive on the triangle with vertices `(0,0), (λ,λ), (λ,−λ)`.
pub fn build_normal_form(
    eps: f64,
    eps_plus: f64,
    eps_minus: f64,
    lambda: f64,
    delta: Option<Polynomial2>,
) -> Result<DarbouxSystem> {
    for (name, value) in [("eps", eps), ("eps_plus", eps_plus), ("eps_minus", eps_minus)] {
        if !(value > 0.0) {
            return Err(Error::InvalidExponent {
                name: name.into(),
                value,
            });
        }
    }
    let x = Polynomial2::x();
    let y = Polynomial2::y();
    let unfolding = Unfolding {
        base: x.clone(),
        lambda_coeff: Polynomial2::constant(1.0),
        exponent: eps,
    };
    let fixed = vec![(y.sub(&x), eps_plus), (y.add(&x), eps_minus)];
    DarbouxSystem::new(
        unfolding,
        fixed,
        delta,
        lambda,
        Orientation::Explicit(vec![-1.0, -1.0, 1.0]),
    )
}

fn pow_positive(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        (exponent * base.ln()).exp()
    }
}

fn transversal(p: &Polynomial2, q: &Polynomial2, at: Point) -> bool {
    let a = p.jet(at[0], at[1]);
    let b = q.jet(at[0], at[1]);
    let cross = a.dx * b.dy - a.dy * b.dx;
    let scale = a.dx.hypot(a.dy) * b.dx.hypot(b.dy);
    scale > 0.0 && cross.abs() > 1e-8 * scale
}

fn intersect_polys(p: &Polynomial2, q: &Polynomial2, seed: Point) -> Option<Point> {
    let mut z = seed;
    for _ in 0..60 {
        let a = p.jet(z[0], z[1]);
        let b = q.jet(z[0], z[1]);
        let det = a.dx * b.dy - a.dy * b.dx;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (a.value * b.dy - b.value * a.dy) / det;
        let dy = (a.dx * b.value - b.dx * a.value) / det;
        z = [z[0] - dx, z[1] - dy];
        let scale = 1.0 + norm(z);
        if dx.hypot(dy) <= 1e-15 * scale {
            let a = p.eval(z[0], z[1]);
            let b = q.eval(z[0], z[1]);
            return (a.abs() < 1e-10 * scale && b.abs() < 1e-10 * scale).then_some(z);
        }
    }
    None
}

pub(crate) fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(lambda: f64) -> DarbouxSystem {
        build_normal_form(1.0, 1.0, 1.0, lambda, None).unwrap()
    }

    #[test]
    fn unit_normal_form_values() {
        let sys = unit(1.0);
        assert_eq!(sys.a(), 3.0);
        assert!((sys.eval_h([0.5, 0.0]).unwrap() - 0.125).abs() < 1e-15);
        assert!((sys.eval_h([2.0 / 3.0, 0.0]).unwrap() - 4.0 / 27.0).abs() < 1e-15);
        let vals = sys.oriented_values([0.5, 0.0]);
        assert!(vals.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn gradient_of_log_h_vanishes_at_center() {
        let sys = unit(1.0);
        let jet = sys.log_jet([2.0 / 3.0, 0.0]).unwrap();
        assert!(jet.grad_norm() < 1e-14);
        let omega = sys.eval_omega(None, [2.0 / 3.0, 0.0]).unwrap();
        assert!(omega[0].abs() < 1e-12 && omega[1].abs() < 1e-12);
    }

    #[test]
    fn factor_zero_set_is_out_of_domain() {
        let sys = unit(1.0);
        match sys.eval_h([0.5, 0.5]) {
            Err(Error::OutOfDomain { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(sys.eval_h([1.0, 0.0]), Err(Error::OutOfDomain { index: 0, .. })));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            build_normal_form(1.0, -1.0, 1.0, 1.0, None),
            Err(Error::InvalidExponent { .. })
        ));
        assert!(matches!(
            build_normal_form(1.0, 1.0, 0.0, 1.0, None),
            Err(Error::InvalidExponent { .. })
        ));
        let vanishing = Polynomial2::x();
        assert!(matches!(
            build_normal_form(1.0, 1.0, 1.0, 1.0, Some(vanishing)),
            Err(Error::InvalidUnit { .. })
        ));
    }

    #[test]
    fn asymmetric_normal_form_is_positive_on_the_triangle() {
        // Dense sampling oracle over the open triangle 0 < x < λ, |y| < x.
        let lambda = 0.1;
        let sys = build_normal_form(0.5, 1.5, 1.0, lambda, None).unwrap();
        assert_eq!(sys.a(), 3.0);
        let mut count = 0;
        for i in 1..=10 {
            for j in 1..=10 {
                let x = lambda * i as f64 / 11.0;
                let y = x * (2.0 * j as f64 / 11.0 - 1.0);
                assert!(sys.eval_h([x, y]).unwrap() > 0.0);
                count += 1;
            }
        }
        assert_eq!(count, 100);
    }

    #[test]
    fn omega_with_perturbation_adds_kappa_eta() {
        let sys = unit(1.0);
        let eta = Perturbation::x_dy().with_kappa(1.0);
        let p = [0.5, 0.1];
        let base = sys.eval_omega(None, p).unwrap();
        let pert = sys.eval_omega(Some(&eta), p).unwrap();
        assert!((pert[0] - base[0]).abs() < 1e-15);
        assert!((pert[1] - base[1] - 0.5).abs() < 1e-15);
        // cross-check the expanded form against finite differences of log H
        let (m, _) = sys.integrating_factor(p);
        let step = 1e-6;
        let d = |q: Point| sys.log_h(q).unwrap();
        let lx = (d([p[0] + step, p[1]]) - d([p[0] - step, p[1]])) / (2.0 * step);
        let ly = (d([p[0], p[1] + step]) - d([p[0], p[1] - step])) / (2.0 * step);
        assert!((base[0] - m * lx).abs() < 1e-8);
        assert!((base[1] - m * ly).abs() < 1e-8);
    }

    #[test]
    fn omega_annihilates_level_tangent() {
        let sys = build_normal_form(0.7, 1.3, 0.9, 0.5, None).unwrap();
        for p in [[0.2, 0.05], [0.3, -0.1], [0.4, 0.2]] {
            let [a, b] = sys.eval_omega(None, p).unwrap();
            let jet = sys.log_jet(p).unwrap();
            let tangent = [jet.grad[1], -jet.grad[0]];
            let dot = (a * tangent[0] + b * tangent[1]) / (a.hypot(b) * jet.grad_norm());
            assert!(dot.abs() < 1e-10);
        }
    }

    #[test]
    fn unit_factor_enters_h_and_omega() {
        let delta = Polynomial2::from_terms(&[(0, 0, 2.0), (1, 0, 0.3), (0, 1, -0.2)]);
        let sys = build_normal_form(1.0, 1.0, 1.0, 1.0, Some(delta.clone())).unwrap();
        let p = [0.6, 0.1];
        let plain = unit(1.0).eval_h(p).unwrap();
        assert!((sys.eval_h(p).unwrap() - plain * delta.eval(p[0], p[1])).abs() < 1e-14);
        let (m, _) = sys.integrating_factor(p);
        let jet = sys.log_jet(p).unwrap();
        let [a, b] = sys.eval_omega(None, p).unwrap();
        assert!((a - m * jet.grad[0]).abs() < 1e-12);
        assert!((b - m * jet.grad[1]).abs() < 1e-12);
    }

    #[test]
    fn genericity_of_normal_form() {
        let report = unit(0.3).check_genericity(2.0);
        assert!(report.a1, "{report:?}");
        assert!((report.lambda_derivative + 1.0).abs() < 1e-9);
        assert!(report.a2, "{report:?}");
        assert_eq!(report.local_factors, 3);
    }

    #[test]
    fn tangential_contact_fails_a2() {
        let x = Polynomial2::x();
        let unfolding = Unfolding {
            base: x.clone(),
            lambda_coeff: Polynomial2::constant(1.0),
            exponent: 1.0,
        };
        let tangent = x.add(&Polynomial2::from_terms(&[(2, 0, 1.0)]));
        let fixed = vec![(tangent, 1.0), (Polynomial2::y().add(&x), 1.0)];
        let sys = DarbouxSystem::new(
            unfolding,
            fixed,
            None,
            0.1,
            Orientation::Explicit(vec![1.0, 1.0, 1.0]),
        )
        .unwrap();
        let report = sys.check_genericity(0.5);
        assert!(report.a1);
        assert!(!report.a2);
        assert!(report.notes.iter().any(|n| n.contains("tangent")));
    }

    #[test]
    fn lambda_independent_unfolding_fails_a1() {
        let x = Polynomial2::x();
        let unfolding = Unfolding {
            base: x.clone(),
            lambda_coeff: Polynomial2::zero(0),
            exponent: 1.0,
        };
        let fixed = vec![
            (Polynomial2::y().sub(&x), 1.0),
            (Polynomial2::y().add(&x), 1.0),
        ];
        let sys = DarbouxSystem::new(
            unfolding,
            fixed,
            None,
            0.1,
            Orientation::Explicit(vec![1.0, 1.0, 1.0]),
        )
        .unwrap();
        assert!(!sys.check_genericity(1.0).a1);
    }

    #[test]
    fn nest_vertices_and_auto_orientation() {
        let sys = unit(0.25);
        let v = sys.nest_vertices().unwrap();
        let expect = [[0.25, 0.25], [0.25, -0.25], [0.0, 0.0]];
        for e in expect {
            assert!(v.iter().any(|p| dist(*p, e) < 1e-14), "{v:?}");
        }
        let auto = DarbouxSystem::new(
            sys.unfolding().clone(),
            sys.fixed_factors().to_vec(),
            None,
            0.25,
            Orientation::Centroid,
        )
        .unwrap();
        assert_eq!(auto.orientation(), sys.orientation());
    }

    #[test]
    fn exact_perturbation_is_m_times_gradient() {
        let sys = unit(1.0);
        let eta = Perturbation::exact(&sys, &Polynomial2::x());
        let p = [0.55, 0.12];
        let (m, _) = sys.integrating_factor(p);
        let [r, s] = eta.eval(p);
        assert!((r - m).abs() < 1e-15);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn lambda_zero_allowed_for_evaluation() {
        let sys = unit(0.0);
        assert!(sys.eval_h_unsigned([0.5, 0.1]) > 0.0);
    }
}
