//! Poincaré displacement of the perturbed foliation `ω_λ + κη = 0`, as an
//! independent check of the zeros of `I(λ, ·)`.

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Vector2;
use ode_solvers::{Dop853, System};

use crate::darboux::{DarbouxSystem, Perturbation, Point};
use crate::error::{Error, Result};
use crate::oval::{find_center, point_on_ray, section_direction, LevelMap, NestRange};
use crate::zeros::ZeroReport;
use crate::ordered_map;

/// A point of the transverse section with its level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub h: f64,
    pub location: Point,
}

/// Direction `(B, −A)` annihilating `ω_λ + κη = A dx + B dy`, before the
/// orientation calibration.
fn raw_field(sys: &DarbouxSystem, eta: &Perturbation, kappa: f64, p: Point) -> Result<[f64; 2]> {
    let [a, b] = sys.eval_omega(None, p)?;
    let [r, s] = eta.eval(p);
    Ok([b + kappa * s, -(a + kappa * r)])
}

/// `+1` or `−1` so that the unperturbed flow turns counterclockwise about the center.
pub fn orientation_sign(sys: &DarbouxSystem, range: &NestRange) -> Result<f64> {
    let c = range.center;
    let dir = section_direction(sys, range);
    let probe = [c[0] + 1e-3 * range.lambda * dir[0], c[1] + 1e-3 * range.lambda * dir[1]];
    let v = raw_field(sys, &Perturbation::dx(), 0.0, probe)?;
    let cross = (probe[0] - c[0]) * v[1] - (probe[1] - c[1]) * v[0];
    Ok(if cross >= 0.0 { 1.0 } else { -1.0 })
}

/// Velocity of the perturbed foliation at `p`, oriented counterclockwise
/// around the center for `κ = 0`.
pub fn vector_field(sys: &DarbouxSystem, eta: &Perturbation, kappa: f64, p: Point) -> Result<[f64; 2]> {
    let range = find_center(sys)?;
    let s = orientation_sign(sys, &range)?;
    let v = raw_field(sys, eta, kappa, p)?;
    Ok([s * v[0], s * v[1]])
}

/// Integration controls for [`displacement`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    /// Absolute tolerance in units of λ.
    pub abs_tol: f64,
    /// Rotation of the section ray from the default direction, in radians.
    pub section_rotation: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            section_rotation: 0.0,
        }
    }
}

// The flow re-parametrized by the polar angle about the center, so one
// revolution is the interval [θ₀, θ₀ + 2π] and the return lands on the
// section ray by construction.
struct AngleFlow<'a> {
    sys: &'a DarbouxSystem,
    eta: &'a Perturbation,
    kappa: f64,
    sign: f64,
    center: Point,
    escaped: Cell<Option<String>>,
}

impl AngleFlow<'_> {
    fn fail(&self, msg: String) {
        let prior = self.escaped.take();
        self.escaped.set(Some(prior.unwrap_or(msg)));
    }
}

impl System<f64, Vector2<f64>> for AngleFlow<'_> {
    fn system(&self, _theta: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        let p = [y[0], y[1]];
        if !self.sys.in_domain(p) {
            self.fail(format!("trajectory left the nest at ({}, {})", p[0], p[1]));
            *dy = Vector2::zeros();
            return;
        }
        let v = match raw_field(self.sys, self.eta, self.kappa, p) {
            Ok(v) => [self.sign * v[0], self.sign * v[1]],
            Err(e) => {
                self.fail(e.to_string());
                *dy = Vector2::zeros();
                return;
            }
        };
        let r = [p[0] - self.center[0], p[1] - self.center[1]];
        let r2 = r[0] * r[0] + r[1] * r[1];
        let turn = r[0] * v[1] - r[1] * v[0];
        if !(turn > 0.0) {
            self.fail(format!("flow stopped turning around the center at ({}, {})", p[0], p[1]));
            *dy = Vector2::zeros();
            return;
        }
        dy[0] = v[0] * r2 / turn;
        dy[1] = v[1] * r2 / turn;
    }

    fn solout(&mut self, _x: f64, _y: &Vector2<f64>, _dy: &Vector2<f64>) -> bool {
        let failed = self.escaped.take();
        let stop = failed.is_some();
        self.escaped.set(failed);
        stop
    }
}

/// Result of one revolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Revolution {
    pub start: SectionPoint,
    pub end: Point,
    /// `H(end) − h`.
    pub displacement: f64,
    pub steps: u32,
}

fn section_dir(sys: &DarbouxSystem, range: &NestRange, rotation: f64) -> Point {
    let d = section_direction(sys, range);
    let (s, c) = rotation.sin_cos();
    [c * d[0] - s * d[1], s * d[0] + c * d[1]]
}

/// One revolution of the perturbed flow from the section point at level `h`.
pub fn revolution(
    sys: &DarbouxSystem,
    range: &NestRange,
    eta: &Perturbation,
    kappa: f64,
    h: f64,
    opts: &OdeOptions,
) -> Result<Revolution> {
    let dir = section_dir(sys, range, opts.section_rotation);
    let start = point_on_ray(sys, range, dir, h)?;
    let c = range.center;
    let theta0 = (start[1] - c[1]).atan2(start[0] - c[0]);
    let flow = AngleFlow {
        sys,
        eta,
        kappa,
        sign: orientation_sign(sys, range)?,
        center: c,
        escaped: Cell::new(None),
    };
    let mut solver = Dop853::new(
        flow,
        theta0,
        theta0 + 2.0 * PI,
        2.0 * PI,
        Vector2::new(start[0], start[1]),
        opts.rel_tol,
        opts.abs_tol * range.lambda,
    );
    let stats = solver
        .integrate()
        .map_err(|e| Error::Escape(format!("integration failed at h = {h:e}: {e}")))?;
    let (thetas, states) = solver.results().get();
    let (last_theta, last) = (*thetas.last().expect("solver output"), *states.last().expect("solver output"));
    if (last_theta - (theta0 + 2.0 * PI)).abs() > 1e-9 {
        return Err(Error::Escape(format!(
            "revolution from h = {h:e} stopped at angle {:.6} of 2π",
            (last_theta - theta0) / (2.0 * PI)
        )));
    }
    let end = [last[0], last[1]];
    let map = LevelMap::new(sys, range)?;
    let level = LevelMap::level_of(range, h);
    let value = map
        .value(end)
        .ok_or_else(|| Error::Escape(format!("return point ({}, {}) left the nest", end[0], end[1])))?;
    Ok(Revolution {
        start: SectionPoint { h, location: start },
        end,
        displacement: h * (value - level).exp_m1(),
        steps: stats.accepted_steps,
    })
}

/// `D(κ, λ, h) = H(return) − h` on the section ray.
pub fn displacement(sys: &DarbouxSystem, eta: &Perturbation, kappa: f64, h: f64) -> Result<f64> {
    let range = find_center(sys)?;
    Ok(revolution(sys, &range, eta, kappa, h, &OdeOptions::default())?.displacement)
}

/// Displacement values on an `h`-grid at one `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementProfile {
    pub kappa: f64,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
}

impl DisplacementProfile {
    /// Sign changes located by linear interpolation, in increasing `h`.
    pub fn sign_changes(&self) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..self.h.len()).collect();
        idx.sort_by(|&a, &b| self.h[a].total_cmp(&self.h[b]));
        idx.windows(2)
            .filter_map(|w| {
                let (h0, h1, d0, d1) = (self.h[w[0]], self.h[w[1]], self.d[w[0]], self.d[w[1]]);
                if d0 != 0.0 && d1 == 0.0 {
                    Some(h1)
                } else {
                    (d0 != 0.0 && d1.signum() != d0.signum()).then(|| h0 + (h1 - h0) * d0 / (d0 - d1))
                }
            })
            .collect()
    }

    /// CSV `h,D,kappa`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,D,kappa\n");
        for i in 0..self.h.len() {
            let _ = writeln!(s, "{:.17e},{:.17e},{:e}", self.h[i], self.d[i], self.kappa);
        }
        s
    }
}

/// [`DisplacementProfile`] over `h_grid`, concurrently when `parallel` is set.
pub fn displacement_profile(
    sys: &DarbouxSystem,
    eta: &Perturbation,
    kappa: f64,
    h_grid: &[f64],
    opts: &OdeOptions,
    parallel: bool,
) -> Result<DisplacementProfile> {
    let range = find_center(sys)?;
    let values = ordered_map(h_grid, parallel, |&h| {
        revolution(sys, &range, eta, kappa, h, opts).map(|r| r.displacement)
    });
    let mut d = Vec::with_capacity(h_grid.len());
    for (index, v) in values.into_iter().enumerate() {
        d.push(v.map_err(|e| e.at_grid_point(index, h_grid[index]))?);
    }
    Ok(DisplacementProfile {
        kappa,
        h: h_grid.to_vec(),
        d,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchReport {
    /// `(zero of I, sign change of D, distance)`.
    pub pairs: Vec<(f64, f64, f64)>,
    pub unmatched_zeros: Vec<f64>,
    pub unmatched_changes: Vec<f64>,
}

impl MatchReport {
    pub fn max_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).fold(0.0, f64::max)
    }

    pub fn is_perfect(&self) -> bool {
        self.unmatched_zeros.is_empty() && self.unmatched_changes.is_empty()
    }
}

/// Pairs each zero of `I` inside the profile's `h`-range with the nearest
/// unused sign change of `D`.
pub fn limit_cycle_match(profile: &DisplacementProfile, zeros: &ZeroReport) -> MatchReport {
    let lo = profile.h.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = profile.h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut changes = profile.sign_changes();
    let mut report = MatchReport::default();
    for z in zeros.zeros.iter().map(|z| z.mid()).filter(|z| *z >= lo && *z <= hi) {
        let nearest = changes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - z).abs().total_cmp(&(b.1 - z).abs()));
        match nearest {
            Some((k, &c)) => {
                report.pairs.push((z, c, (c - z).abs()));
                changes.remove(k);
            }
            None => report.unmatched_zeros.push(z),
        }
    }
    report.unmatched_changes = changes;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux::build_normal_form;
    use crate::zeros::ZeroBracket;

    fn unit() -> DarbouxSystem {
        build_normal_form(1.0, 1.0, 1.0, 1.0, None).unwrap()
    }

    #[test]
    fn unperturbed_field_is_tangent_and_vanishes_at_center() {
        let sys = unit();
        let eta = Perturbation::x_dy();
        for p in [[0.5, 0.1], [0.8, -0.05], [0.3, 0.02]] {
            let v = vector_field(&sys, &eta, 0.0, p).unwrap();
            let g = sys.log_jet(p).unwrap().grad;
            let cos = (g[0] * v[0] + g[1] * v[1]) / (g[0].hypot(g[1]) * v[0].hypot(v[1]));
            assert!(cos.abs() < 1e-10);
        }
        let v = vector_field(&sys, &eta, 0.0, [2.0 / 3.0, 0.0]).unwrap();
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn perturbation_enters_linearly() {
        let sys = unit();
        let eta = Perturbation::x_dy();
        let p = [0.5, 0.1];
        let base = vector_field(&sys, &eta, 0.0, p).unwrap();
        let pert = vector_field(&sys, &eta, 1e-3, p).unwrap();
        let range = find_center(&sys).unwrap();
        let s = orientation_sign(&sys, &range).unwrap();
        assert!((pert[0] - base[0] - s * 1e-3 * 0.5).abs() < 1e-15);
        assert!((pert[1] - base[1]).abs() < 1e-15);
    }

    #[test]
    fn zero_kappa_conserves_level() {
        let sys = unit();
        let range = find_center(&sys).unwrap();
        for f in [0.3, 0.6, 0.9] {
            let h = f * range.h_max;
            let r = revolution(&sys, &range, &Perturbation::x_dy(), 0.0, h, &OdeOptions::default()).unwrap();
            assert!(r.displacement.abs() < 1e-10 * h, "{f}: {:e}", r.displacement / h);
        }
    }

    #[test]
    fn matching_examples() {
        let empty = DisplacementProfile {
            kappa: 1e-3,
            h: vec![0.1, 0.2, 0.3],
            d: vec![1.0, 2.0, 3.0],
        };
        let m = limit_cycle_match(&empty, &ZeroReport::default());
        assert!(m.is_perfect() && m.pairs.is_empty());
        let h: Vec<f64> = (0..=20).map(|i| 0.0123 + 0.005 * i as f64).collect();
        let profile = DisplacementProfile {
            kappa: 1e-3,
            // κ·h·I with I = (h − 0.05)/h
            d: h.iter().map(|x| 1e-3 * x * ((x - 0.05) / x)).collect(),
            h,
        };
        let zeros = ZeroReport {
            zeros: vec![ZeroBracket { lo: 0.05 - 1e-12, hi: 0.05 + 1e-12 }],
            count: 1,
            ..Default::default()
        };
        let m = limit_cycle_match(&profile, &zeros);
        assert_eq!(m.pairs.len(), 1);
        assert!(m.max_distance() < 1e-11);
    }
}
