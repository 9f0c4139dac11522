//! Dense bivariate real polynomials.

use std::fmt;

/// Value, gradient and Hessian of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet2 {
    pub fn grad(&self) -> [f64; 2] {
        [self.dx, self.dy]
    }
}

/// A polynomial in `x` and `y` with coefficients indexed by `(deg_x, deg_y)`.
///
/// `degree` is the stated total-degree bound; coefficients of monomials above
/// it are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial2 {
    degree: usize,
    // row-major (i, j) with stride degree + 1; entries with i + j > degree stay zero
    coeffs: Vec<f64>,
}

impl Polynomial2 {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; (degree + 1) * (degree + 1)],
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero(0);
        p.coeffs[0] = c;
        p
    }

    pub fn x() -> Self {
        Self::from_terms(&[(1, 0, 1.0)])
    }

    pub fn y() -> Self {
        Self::from_terms(&[(0, 1, 1.0)])
    }

    /// Builds a polynomial from `(i, j, c)` triples meaning `c x^i y^j`.
    /// Repeated monomials are summed. The stated degree is the largest
    /// monomial degree present.
    pub fn from_terms(terms: &[(usize, usize, f64)]) -> Self {
        let degree = terms.iter().map(|&(i, j, _)| i + j).max().unwrap_or(0);
        Self::from_terms_with_degree(terms, degree)
    }

    /// Like [`Polynomial2::from_terms`] but with an explicit degree bound,
    /// which must dominate every monomial.
    pub fn from_terms_with_degree(terms: &[(usize, usize, f64)], degree: usize) -> Self {
        let mut p = Self::zero(degree);
        for &(i, j, c) in terms {
            assert!(
                i + j <= degree,
                "monomial x^{i} y^{j} exceeds stated degree {degree}"
            );
            p.coeffs[i * (degree + 1) + j] += c;
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Degree of the highest nonzero monomial (0 for the zero polynomial).
    pub fn actual_degree(&self) -> usize {
        self.terms().map(|(i, j, _)| i + j).max().unwrap_or(0)
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.degree {
            0.0
        } else {
            self.coeffs[i * (self.degree + 1) + j]
        }
    }

    /// Nonzero monomials as `(i, j, c)`, ordered by `i` then `j`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let stride = self.degree + 1;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(move |(k, &c)| (k / stride, k % stride, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = self.degree;
        let stride = d + 1;
        // Horner in x over Horner-in-y rows.
        let mut acc = 0.0;
        for i in (0..=d).rev() {
            let mut row = 0.0;
            for j in (0..=(d - i)).rev() {
                row = row * y + self.coeffs[i * stride + j];
            }
            acc = acc * x + row;
        }
        acc
    }

    /// Value together with first and second partial derivatives.
    pub fn jet(&self, x: f64, y: f64) -> Jet2 {
        let d = self.degree;
        let stride = d + 1;
        let mut xs = [1.0; 16];
        let mut ys = [1.0; 16];
        let mut xv = Vec::new();
        let mut yv = Vec::new();
        let (xp, yp): (&mut [f64], &mut [f64]) = if d < 16 {
            (&mut xs[..], &mut ys[..])
        } else {
            xv.resize(d + 1, 1.0);
            yv.resize(d + 1, 1.0);
            (&mut xv[..], &mut yv[..])
        };
        for k in 1..=d {
            xp[k] = xp[k - 1] * x;
            yp[k] = yp[k - 1] * y;
        }
        let mut jet = Jet2::default();
        for i in 0..=d {
            for j in 0..=(d - i) {
                let c = self.coeffs[i * stride + j];
                if c == 0.0 {
                    continue;
                }
                let (fi, fj) = (i as f64, j as f64);
                jet.value += c * xp[i] * yp[j];
                if i >= 1 {
                    jet.dx += c * fi * xp[i - 1] * yp[j];
                }
                if j >= 1 {
                    jet.dy += c * fj * xp[i] * yp[j - 1];
                }
                if i >= 2 {
                    jet.dxx += c * fi * (fi - 1.0) * xp[i - 2] * yp[j];
                }
                if i >= 1 && j >= 1 {
                    jet.dxy += c * fi * fj * xp[i - 1] * yp[j - 1];
                }
                if j >= 2 {
                    jet.dyy += c * fj * (fj - 1.0) * xp[i] * yp[j - 2];
                }
            }
        }
        jet
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let degree = self.degree.max(other.degree);
        let mut out = Self::zero(degree);
        for p in [self, other] {
            for (i, j, c) in p.terms() {
                out.coeffs[i * (degree + 1) + j] += c;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let degree = self.degree + other.degree;
        let mut out = Self::zero(degree);
        for (i, j, c) in self.terms() {
            for (k, l, e) in other.terms() {
                out.coeffs[(i + k) * (degree + 1) + (j + l)] += c * e;
            }
        }
        out
    }

    pub fn derivative_x(&self) -> Self {
        let degree = self.degree.saturating_sub(1);
        let mut out = Self::zero(degree);
        for (i, j, c) in self.terms() {
            if i >= 1 {
                out.coeffs[(i - 1) * (degree + 1) + j] += c * i as f64;
            }
        }
        out
    }

    pub fn derivative_y(&self) -> Self {
        let degree = self.degree.saturating_sub(1);
        let mut out = Self::zero(degree);
        for (i, j, c) in self.terms() {
            if j >= 1 {
                out.coeffs[i * (degree + 1) + (j - 1)] += c * j as f64;
            }
        }
        out
    }

    /// The polynomial `q(u, v) = p(x0 + u, y0 + v)`.
    pub fn shifted(&self, x0: f64, y0: f64) -> Self {
        let d = self.degree;
        let bx = Self::from_terms(&[(0, 0, x0), (1, 0, 1.0)]);
        let by = Self::from_terms(&[(0, 0, y0), (0, 1, 1.0)]);
        let mut xpow = vec![Self::constant(1.0)];
        let mut ypow = vec![Self::constant(1.0)];
        for k in 1..=d {
            xpow.push(xpow[k - 1].mul(&bx));
            ypow.push(ypow[k - 1].mul(&by));
        }
        let mut out = Self::zero(d);
        for (i, j, c) in self.terms() {
            out = out.add(&xpow[i].mul(&ypow[j]).scale(c));
        }
        out.truncated(d)
    }

    // Restates the degree bound; every monomial must fit.
    fn truncated(&self, degree: usize) -> Self {
        Self::from_terms_with_degree(&self.to_terms(), degree)
    }

    /// Monomial triples, the serialized form used by scenario configs.
    pub fn to_terms(&self) -> Vec<(usize, usize, f64)> {
        self.terms().collect()
    }
}

impl fmt::Debug for Polynomial2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial2(deg {}; ", self.degree)?;
        let mut first = true;
        for (i, j, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}·x^{i}y^{j}")?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_matches_hand_derivatives() {
        // p = 1 + 2x - y + 3x^2 y - x y^2
        let p = Polynomial2::from_terms(&[(0, 0, 1.0), (1, 0, 2.0), (0, 1, -1.0), (2, 1, 3.0), (1, 2, -1.0)]);
        let (x, y) = (0.7, -0.3);
        let j = p.jet(x, y);
        assert!((j.value - (1.0 + 2.0 * x - y + 3.0 * x * x * y - x * y * y)).abs() < 1e-15);
        assert!((j.dx - (2.0 + 6.0 * x * y - y * y)).abs() < 1e-15);
        assert!((j.dy - (-1.0 + 3.0 * x * x - 2.0 * x * y)).abs() < 1e-15);
        assert!((j.dxx - 6.0 * y).abs() < 1e-15);
        assert!((j.dxy - (6.0 * x - 2.0 * y)).abs() < 1e-15);
        assert!((j.dyy - (-2.0 * x)).abs() < 1e-15);
        assert!((p.eval(x, y) - j.value).abs() < 1e-15);
    }

    #[test]
    fn product_and_derivatives() {
        let a = Polynomial2::x().sub(&Polynomial2::y());
        let b = Polynomial2::x().add(&Polynomial2::y());
        let q = a.mul(&b); // x^2 - y^2
        assert_eq!(q.coeff(2, 0), 1.0);
        assert_eq!(q.coeff(0, 2), -1.0);
        assert_eq!(q.coeff(1, 1), 0.0);
        assert_eq!(q.actual_degree(), 2);
        assert_eq!(q.derivative_x().coeff(1, 0), 2.0);
        assert_eq!(q.derivative_y().coeff(0, 1), -2.0);
    }

    #[test]
    fn stated_degree_dominates_actual() {
        let p = Polynomial2::from_terms_with_degree(&[(1, 0, 1.0)], 3);
        assert_eq!(p.degree(), 3);
        assert_eq!(p.actual_degree(), 1);
        assert_eq!(p.eval(2.0, 5.0), 2.0);
    }

    #[test]
    fn shift_matches_evaluation() {
        let p = Polynomial2::from_terms(&[(0, 0, 1.0), (2, 1, 3.0), (1, 2, -1.0), (3, 0, 0.5)]);
        let q = p.shifted(0.3, -0.7);
        assert_eq!(q.degree(), 3);
        for (u, v) in [(0.0, 0.0), (0.1, 0.2), (-0.4, 0.9)] {
            assert!((q.eval(u, v) - p.eval(0.3 + u, -0.7 + v)).abs() < 1e-14);
        }
    }

    #[test]
    #[should_panic]
    fn monomial_above_degree_panics() {
        let _ = Polynomial2::from_terms_with_degree(&[(2, 1, 1.0)], 2);
    }
}
