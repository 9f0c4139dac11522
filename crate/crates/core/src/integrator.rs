//! The pseudo-Abelian integral `I(λ, h) = ∮_{γ(λ,h)} η / M_λ`, by Gauss–Kronrod
//! quadrature on a cubic Hermite re-parametrization of the traced oval, and
//! an independent interior (Stokes) oracle.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::darboux::{dist, DarbouxSystem, Perturbation, Point};
use crate::error::{Error, Result};
use crate::oval::{distance_to_edge, find_center, trace_oval_with, LevelMap, NestRange, Oval, TraceOptions};
use crate::quad::{gk15_pair, integrate_scaled};
use crate::ordered_map;

/// Value of a quadrature with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Quadrature controls for [`pseudo_abelian_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Relative tolerance on the value.
    pub rel_tol: f64,
    /// Floor of the tolerance scale, relative to `∮ |η/M| |dγ|`.
    pub abs_floor: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_floor: 1e-2,
            max_refinements: 3,
        }
    }
}

struct Sums {
    value: f64,
    gauss_gap: f64,
    absolute: f64,
}

fn integrand(sys: &DarbouxSystem, eta: &Perturbation, p: Point, dp: Point) -> f64 {
    let m = sys.integrating_factor_value(p);
    let [r, s] = eta.eval(p);
    (r * dp[0] + s * dp[1]) / m
}

// GK15 over every Hermite arc of the sample.
fn hermite_sums(sys: &DarbouxSystem, eta: &Perturbation, points: &[Point], tangents: &[Point]) -> Sums {
    let mut value = 0.0;
    let mut gauss_gap = 0.0;
    let mut absolute = 0.0;
    for i in 0..points.len() - 1 {
        let (p0, p1) = (points[i], points[i + 1]);
        let l = dist(p0, p1);
        let (m0, m1) = (
            [l * tangents[i][0], l * tangents[i][1]],
            [l * tangents[i + 1][0], l * tangents[i + 1][1]],
        );
        let curve = |s: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
            let (d00, d10, d01, d11) = (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s);
            let p = [
                h00 * p0[0] + h10 * m0[0] + h01 * p1[0] + h11 * m1[0],
                h00 * p0[1] + h10 * m0[1] + h01 * p1[1] + h11 * m1[1],
            ];
            let dp = [
                d00 * p0[0] + d10 * m0[0] + d01 * p1[0] + d11 * m1[0],
                d00 * p0[1] + d10 * m0[1] + d01 * p1[1] + d11 * m1[1],
            ];
            (p, dp)
        };
        let (k, g, ka) = gk15_pair(
            &mut |s| {
                let (p, dp) = curve(s);
                let v = integrand(sys, eta, p, dp);
                (v, v.abs())
            },
            0.0,
            1.0,
        );
        value += k;
        gauss_gap += (k - g).abs();
        absolute += ka;
    }
    Sums {
        value,
        gauss_gap,
        absolute,
    }
}

fn range_of(sys: &DarbouxSystem, oval: &Oval) -> Result<NestRange> {
    Ok(NestRange {
        center: oval.center,
        h_max: sys.eval_h(oval.center)?,
        lambda: oval.lambda,
    })
}

// Inserts the level-projected Hermite midpoint of every arc.
fn refine(map: &LevelMap, level: f64, oval: &Oval, points: &[Point], tangents: &[Point]) -> (Vec<Point>, Vec<Point>) {
    let mut np = Vec::with_capacity(2 * points.len());
    let mut nt = Vec::with_capacity(2 * points.len());
    let probe = Oval {
        points: points.to_vec(),
        tangents: tangents.to_vec(),
        ..oval.clone()
    };
    for i in 0..points.len() - 1 {
        np.push(points[i]);
        nt.push(tangents[i]);
        let guess = probe.hermite_point(i, 0.5);
        let (q, t) = match map.project(guess, level, LevelMap::TOLERANCE) {
            Some((q, jet)) => {
                let g = jet.grad_norm();
                let mut t = [jet.grad[1] / g, -jet.grad[0] / g];
                let chord = [points[i + 1][0] - points[i][0], points[i + 1][1] - points[i][1]];
                if t[0] * chord[0] + t[1] * chord[1] < 0.0 {
                    t = [-t[0], -t[1]];
                }
                (q, t)
            }
            None => {
                let t = [0.5 * (tangents[i][0] + tangents[i + 1][0]), 0.5 * (tangents[i][1] + tangents[i + 1][1])];
                let n = t[0].hypot(t[1]);
                (guess, [t[0] / n, t[1] / n])
            }
        };
        np.push(q);
        nt.push(t);
    }
    np.push(*points.last().expect("nonempty"));
    nt.push(*tangents.last().expect("nonempty"));
    (np, nt)
}

/// `∮ η/M_λ` over the oval with default tolerances.
pub fn pseudo_abelian(sys: &DarbouxSystem, eta: &Perturbation, oval: &Oval) -> Result<Integral> {
    pseudo_abelian_with(sys, eta, oval, &QuadratureOptions::default())
}

/// `∮ η/M_λ` over the oval. The error bound adds the Richardson estimate of
/// the geometric error between successive midpoint refinements to the
/// Kronrod–Gauss gaps.
pub fn pseudo_abelian_with(
    sys: &DarbouxSystem,
    eta: &Perturbation,
    oval: &Oval,
    opts: &QuadratureOptions,
) -> Result<Integral> {
    if oval.points.len() < 3 {
        return Err(Error::InvalidParameter("oval has fewer than three samples".into()));
    }
    // integrate the counterclockwise traversal so reversal is an exact negation
    if oval.signed_area() < 0.0 {
        let forward = pseudo_abelian_with(sys, eta, &oval.reversed(), opts)?;
        return Ok(Integral {
            value: -forward.value,
            error: forward.error,
        });
    }
    let range = range_of(sys, oval)?;
    let map = LevelMap::new(sys, &range)?;
    let level = LevelMap::level_of(&range, oval.h);

    let mut points = oval.points.clone();
    let mut tangents = oval.tangents.clone();
    let mut coarse = hermite_sums(sys, eta, &points, &tangents);
    let mut best = f64::INFINITY;
    for _ in 0..opts.max_refinements.max(1) {
        let (np, nt) = refine(&map, level, oval, &points, &tangents);
        points = np;
        tangents = nt;
        let fine = hermite_sums(sys, eta, &points, &tangents);
        let error = (fine.value - coarse.value).abs() / 15.0 + fine.gauss_gap;
        let tol = opts.rel_tol * fine.value.abs().max(opts.abs_floor * fine.absolute);
        best = best.min(error);
        if error <= tol {
            return Ok(Integral {
                value: fine.value,
                error,
            });
        }
        coarse = fine;
    }
    Err(Error::PrecisionLoss {
        achieved: best,
        tolerance: opts.rel_tol * coarse.value.abs().max(opts.abs_floor * coarse.absolute),
    })
}

/// `∂x(S/M) − ∂y(R/M)` at `p`, with the sum of the magnitudes of its terms.
pub fn curl_over_m(sys: &DarbouxSystem, eta: &Perturbation, p: Point) -> (f64, f64) {
    let (m, gm) = sys.integrating_factor(p);
    let r = eta.r.jet(p[0], p[1]);
    let s = eta.s.jet(p[0], p[1]);
    let terms = [s.dx * m, -s.value * gm[0], -r.dy * m, r.value * gm[1]];
    let m2 = m * m;
    (
        terms.iter().sum::<f64>() / m2,
        terms.iter().map(|t| t.abs()).sum::<f64>() / m2,
    )
}

/// Interior quadrature of `d(η/M)` over `{H ≥ h}` in polar coordinates about
/// the center; by the Stokes theorem it equals the line integral.
pub fn stokes_oracle(sys: &DarbouxSystem, eta: &Perturbation, h: f64) -> Result<f64> {
    let range = find_center(sys)?;
    stokes_oracle_with(sys, &range, eta, h, 1e-11)
}

// Rounding floor relative to the magnitude of the cancelling curl terms.
const CURL_FLOOR: f64 = 1e-12;

pub fn stokes_oracle_with(
    sys: &DarbouxSystem,
    range: &NestRange,
    eta: &Perturbation,
    h: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !range.contains(h) {
        return Err(Error::Range {
            h,
            h_max: range.h_max,
        });
    }
    let map = LevelMap::new(sys, range)?;
    let level = LevelMap::level_of(range, h);
    let c = range.center;
    let boundary = |u: Point| -> Result<f64> {
        let at = |r: f64| [c[0] + r * u[0], c[1] + r * u[1]];
        let edge = distance_to_edge(sys, c, u, 1e-3 * range.lambda)?;
        let (mut lo, mut hi) = (0.0, edge);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if map.value(at(mid)).is_some_and(|l| l > level) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    // coarse magnitude of the integrand, the floor for absolute tolerances
    let mut scale = 0.0;
    for k in 0..32 {
        let theta = 2.0 * PI * (k as f64 + 0.5) / 32.0;
        let u = [theta.cos(), theta.sin()];
        let rb = boundary(u)?;
        let (_, _, m) = gk15_pair(
            &mut |r| {
                let (_, m) = curl_over_m(sys, eta, [c[0] + r * u[0], c[1] + r * u[1]]);
                (0.0, m * r)
            },
            0.0,
            rb,
        );
        scale += m * 2.0 * PI / 32.0;
    }
    let mut failure: Option<String> = None;
    let radial = |theta: f64| -> (f64, f64) {
        let u = [theta.cos(), theta.sin()];
        let at = |r: f64| [c[0] + r * u[0], c[1] + r * u[1]];
        let rb = match boundary(u) {
            Ok(rb) => rb,
            Err(e) => {
                failure.get_or_insert(e.to_string());
                return (0.0, 0.0);
            }
        };
        let q = integrate_scaled(
            |r| {
                let (v, m) = curl_over_m(sys, eta, at(r));
                (v * r, m * r)
            },
            0.0,
            rb,
            0.01 * CURL_FLOOR * scale,
            0.1 * rel_tol,
            0.1 * CURL_FLOOR,
            2000,
        );
        if !q.converged {
            failure.get_or_insert(format!("radial quadrature at theta={theta} did not converge"));
        }
        (q.value, q.magnitude)
    };
    let outer = integrate_scaled(radial, 0.0, 2.0 * PI, CURL_FLOOR * scale, rel_tol, CURL_FLOOR, 4000);
    if let Some(msg) = failure {
        return Err(Error::OracleFailure(msg));
    }
    if !outer.converged {
        return Err(Error::OracleFailure(format!(
            "angular quadrature error {:e} above tolerance",
            outer.error
        )));
    }
    Ok(outer.value)
}

/// `I(λ, h_i)` on a grid of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSeries {
    pub lambda: f64,
    pub h_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
}

impl IntegralSeries {
    pub fn len(&self) -> usize {
        self.h_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_grid.is_empty()
    }

    /// CSV `h,I,err` with a metadata comment line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# lambda={:e}, points={}", self.lambda, self.len());
        s.push_str("h,I,err\n");
        for i in 0..self.len() {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.6e}",
                self.h_grid[i], self.values[i], self.error_estimates[i]
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lambda = f64::NAN;
        let mut header = false;
        let mut out = Self {
            lambda,
            h_grid: Vec::new(),
            values: Vec::new(),
            error_estimates: Vec::new(),
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for item in meta.split(',') {
                    if let Some(v) = item.trim().strip_prefix("lambda=") {
                        lambda = v
                            .parse()
                            .map_err(|_| Error::Schema(format!("bad lambda `{v}`")))?;
                    }
                }
                continue;
            }
            if !header {
                if line != "h,I,err" {
                    return Err(Error::Schema(format!("expected header `h,I,err`, got `{line}`")));
                }
                header = true;
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(Error::Schema(format!("expected 3 columns in `{line}`")));
            }
            let parse = |c: &str| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Schema(format!("bad number `{c}`")))
            };
            out.h_grid.push(parse(cells[0])?);
            out.values.push(parse(cells[1])?);
            out.error_estimates.push(parse(cells[2])?);
        }
        if !header {
            return Err(Error::Schema("missing header `h,I,err`".into()));
        }
        out.lambda = lambda;
        Ok(out)
    }
}

/// Options shared by batch drivers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeriesOptions {
    pub trace: TraceOptions,
    pub quadrature: QuadratureOptions,
    pub parallel: bool,
}

/// Traces a fresh oval at every level and integrates it; results follow
/// the grid order whether or not the points run concurrently.
pub fn integral_series(
    sys: &DarbouxSystem,
    eta: &Perturbation,
    h_grid: &[f64],
    opts: &SeriesOptions,
) -> Result<IntegralSeries> {
    let lambda = sys.lambda();
    if h_grid.is_empty() {
        return Ok(IntegralSeries {
            lambda,
            h_grid: Vec::new(),
            values: Vec::new(),
            error_estimates: Vec::new(),
        });
    }
    let range = find_center(sys)?;
    let results = ordered_map(h_grid, opts.parallel, |&h| {
        let oval = trace_oval_with(sys, &range, h, &opts.trace)?;
        pseudo_abelian_with(sys, eta, &oval, &opts.quadrature)
    });
    let mut values = Vec::with_capacity(h_grid.len());
    let mut errors = Vec::with_capacity(h_grid.len());
    for (index, r) in results.into_iter().enumerate() {
        let integral = r.map_err(|e| e.at_grid_point(index, h_grid[index]))?;
        values.push(integral.value);
        errors.push(integral.error);
    }
    Ok(IntegralSeries {
        lambda,
        h_grid: h_grid.to_vec(),
        values,
        error_estimates: errors,
    })
}

/// `h_i = n(λ)·ratio^i` for `i = first..=last`.
pub fn geometric_grid(h_max: f64, ratio: f64, first: i32, last: i32) -> Vec<f64> {
    (first..=last).map(|i| h_max * ratio.powi(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux::build_normal_form;
    use crate::oval::trace_oval;
    use crate::poly::Polynomial2;

    fn unit() -> DarbouxSystem {
        build_normal_form(1.0, 1.0, 1.0, 1.0, None).unwrap()
    }

    #[test]
    fn exact_form_integrates_to_zero() {
        let sys = unit();
        let eta = Perturbation::exact(&sys, &Polynomial2::x());
        let oval = trace_oval(&sys, 0.1).unwrap();
        let i = pseudo_abelian(&sys, &eta, &oval).unwrap();
        assert!(i.value.abs() < 1e-10, "{i:?}");
        assert!(stokes_oracle(&sys, &eta, 0.1).unwrap().abs() < 1e-8);
    }

    #[test]
    fn dx_vanishes_by_symmetry() {
        let sys = unit();
        let oval = trace_oval(&sys, 0.05).unwrap();
        let i = pseudo_abelian(&sys, &Perturbation::dx(), &oval).unwrap();
        assert!(i.value.abs() < 1e-10, "{i:?}");
    }

    #[test]
    fn line_integral_matches_stokes_oracle() {
        let sys = unit();
        let eta = Perturbation::x_dy();
        let oval = trace_oval(&sys, 0.1).unwrap();
        let i = pseudo_abelian(&sys, &eta, &oval).unwrap();
        let s = stokes_oracle(&sys, &eta, 0.1).unwrap();
        assert!((i.value - s).abs() < 1e-6 * i.value.abs(), "{i:?} vs {s}");
        // unit exponents: H = M, so h·I is the enclosed area, which the
        // inscribed polygon approximates from below
        let area = oval.enclosed_area();
        assert!(0.1 * i.value > area && 0.1 * i.value - area < 1e-5 * area);
    }

    #[test]
    fn reversal_negates_exactly() {
        let sys = build_normal_form(1.0, 2.0, 1.0, 1.0, None).unwrap();
        let eta = Perturbation::new(Polynomial2::from_terms(&[(0, 2, 1.0)]), Polynomial2::x());
        let oval = trace_oval(&sys, 0.01).unwrap();
        let a = pseudo_abelian(&sys, &eta, &oval).unwrap();
        let b = pseudo_abelian(&sys, &eta, &oval.reversed()).unwrap();
        assert_eq!(a.value, -b.value);
    }

    #[test]
    fn series_csv_round_trip() {
        let sys = unit();
        let grid = [0.1, 0.05];
        let s = integral_series(&sys, &Perturbation::x_dy(), &grid, &SeriesOptions::default()).unwrap();
        let back = IntegralSeries::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back.h_grid, s.h_grid);
        assert_eq!(back.values, s.values);
        assert_eq!(back.lambda, 1.0);
        assert!(integral_series(&sys, &Perturbation::x_dy(), &[], &SeriesOptions::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn grid_errors_carry_the_index() {
        let sys = unit();
        let err = integral_series(&sys, &Perturbation::x_dy(), &[0.1, 0.2], &SeriesOptions::default()).unwrap_err();
        assert!(matches!(err, Error::AtGridPoint { index: 1, .. }), "{err:?}");
    }
}
