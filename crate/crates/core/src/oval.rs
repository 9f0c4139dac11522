//! The center of the nest, its level range `(0, n(λ))`, and predictor–corrector
//! tracing of the ovals `γ(λ, h) ⊂ {H_λ = h}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::darboux::{dist, norm, DarbouxSystem, LogJet, Point};
use crate::error::{Error, Result};
use crate::poly::Polynomial2;

/// Center of the nest and the top level `n(λ) = H_λ(center)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestRange {
    pub center: Point,
    pub h_max: f64,
    pub lambda: f64,
}

impl NestRange {
    pub fn log_h_max(&self) -> f64 {
        self.h_max.ln()
    }

    pub fn contains(&self, h: f64) -> bool {
        h > 0.0 && h < self.h_max
    }
}

const CENTER_STEPS: usize = 50;

/// Newton iteration on `∇ log H` from the triangle centroid.
pub fn find_center(sys: &DarbouxSystem) -> Result<NestRange> {
    let lambda = sys.lambda();
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(
            "the nest only exists for lambda > 0".into(),
        ));
    }
    let mut p = sys
        .triangle_centroid()
        .ok_or_else(|| Error::InvalidParameter("could not locate the nest triangle".into()))?;
    let mut converged = false;
    for _ in 0..CENTER_STEPS {
        let jet = sys.log_jet(p).map_err(|_| Error::NoCenter { steps: CENTER_STEPS })?;
        let [[a, b], [_, d]] = jet.hess;
        let det = a * d - b * b;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoCenter { steps: CENTER_STEPS });
        }
        let [gx, gy] = jet.grad;
        let step = [(d * gx - b * gy) / det, (a * gy - b * gx) / det];
        // damp the step until the iterate stays inside the domain
        let mut scale = 1.0;
        let mut next = [p[0] - step[0], p[1] - step[1]];
        while !sys.in_domain(next) {
            scale *= 0.5;
            if scale < 1e-12 {
                return Err(Error::NoCenter { steps: CENTER_STEPS });
            }
            next = [p[0] - scale * step[0], p[1] - scale * step[1]];
        }
        let moved = dist(next, p);
        p = next;
        if moved <= 1e-15 * (lambda + norm(p)) {
            converged = true;
            break;
        }
    }
    let jet = sys.log_jet(p)?;
    if !converged && jet.grad_norm() * lambda > 1e-12 {
        return Err(Error::NoCenter { steps: CENTER_STEPS });
    }
    let [[a, b], [_, d]] = jet.hess;
    if !(a < 0.0 && a * d - b * b > 0.0) {
        return Err(Error::NotACenter { x: p[0], y: p[1] });
    }
    let h_max = sys.eval_h(p)?;
    let r = 1e-3 * lambda;
    for k in 0..16 {
        let th = 2.0 * PI * k as f64 / 16.0;
        let q = [p[0] + r * th.cos(), p[1] + r * th.sin()];
        if !(sys.eval_h(q)? < h_max) {
            return Err(Error::NotACenter { x: p[0], y: p[1] });
        }
    }
    Ok(NestRange {
        center: p,
        h_max,
        lambda,
    })
}

/// Direction of the ray from the center on which every oval starts: the
/// `+x` axis when the center and the triangle centroid coincide, otherwise
/// the direction toward the centroid.
pub fn section_direction(sys: &DarbouxSystem, range: &NestRange) -> Point {
    if let Some(c) = sys.triangle_centroid() {
        let d = [c[0] - range.center[0], c[1] - range.center[1]];
        let n = norm(d);
        if n > 1e-8 * range.lambda {
            return [d[0] / n, d[1] / n];
        }
    }
    [1.0, 0.0]
}

/// `log H − log n(λ)` evaluated from polynomials re-expanded at the center,
/// so that levels just below the top of the nest keep full relative
/// precision.
#[derive(Debug, Clone)]
pub struct LevelMap {
    center: Point,
    parts: Vec<Part>,
}

#[derive(Debug, Clone)]
struct Part {
    // oriented factor and its increment from the center (zero constant term)
    full: Polynomial2,
    increment: Polynomial2,
    base: f64,
    log_base: f64,
    exponent: f64,
}

impl Part {
    // log(q(p)/q(c)): log1p of the increment near the center, direct logs
    // near the factor's zero set where 1 + r/q(c) would cancel.
    fn log_ratio(&self, p: Point, u: f64, v: f64) -> Option<(f64, crate::poly::Jet2)> {
        let j = self.increment.jet(u, v);
        let x = j.value / self.base;
        if x.abs() <= 0.5 {
            return Some((x.ln_1p(), j));
        }
        let q = self.full.eval(p[0], p[1]);
        if !(q > 0.0) {
            return None;
        }
        Some((q.ln() - self.log_base, j))
    }
}

impl LevelMap {
    pub fn new(sys: &DarbouxSystem, range: &NestRange) -> Result<Self> {
        let c = range.center;
        let mut parts = Vec::new();
        let mut push = |poly: &Polynomial2, sign: f64, e: f64| -> Result<()> {
            let base = sign * poly.eval(c[0], c[1]);
            if !(base > 0.0) {
                return Err(Error::NotACenter { x: c[0], y: c[1] });
            }
            let mut terms = poly.shifted(c[0], c[1]).scale(sign).to_terms();
            terms.retain(|&(i, j, _)| i + j > 0);
            parts.push(Part {
                full: poly.scale(sign),
                increment: Polynomial2::from_terms_with_degree(&terms, poly.degree()),
                base,
                log_base: base.ln(),
                exponent: e,
            });
            Ok(())
        };
        for f in sys.factors() {
            push(&f.poly, f.sign, f.exponent)?;
        }
        if let Some(d) = sys.unit() {
            push(d, sys.unit_sign(), 1.0)?;
        }
        Ok(Self { center: c, parts })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// Target value for the level `h`.
    pub fn level_of(range: &NestRange, h: f64) -> f64 {
        ((h - range.h_max) / range.h_max).ln_1p()
    }

    pub fn value(&self, p: Point) -> Option<f64> {
        let (u, v) = (p[0] - self.center[0], p[1] - self.center[1]);
        let mut acc = 0.0;
        for part in &self.parts {
            let (l, _) = part.log_ratio(p, u, v)?;
            acc += part.exponent * l;
        }
        Some(acc)
    }

    pub fn jet(&self, p: Point) -> Option<LogJet> {
        self.jet_with_scale(p).map(|(jet, _)| jet)
    }

    /// The jet together with `Σ |ε_i log(1 + r_i/q_i)|`, the magnitude that
    /// bounds the rounding error of the value.
    pub fn jet_with_scale(&self, p: Point) -> Option<(LogJet, f64)> {
        let mut scale = 0.0;
        let (u, v) = (p[0] - self.center[0], p[1] - self.center[1]);
        let mut out = LogJet {
            value: 0.0,
            grad: [0.0; 2],
            hess: [[0.0; 2]; 2],
        };
        for part in &self.parts {
            let (l, j) = part.log_ratio(p, u, v)?;
            let e = part.exponent;
            let q = part.base + j.value;
            if !(q > 0.0) {
                return None;
            }
            let (gx, gy) = (j.dx / q, j.dy / q);
            let term = e * l;
            out.value += term;
            scale += term.abs();
            out.grad[0] += e * gx;
            out.grad[1] += e * gy;
            out.hess[0][0] += e * (j.dxx / q - gx * gx);
            out.hess[0][1] += e * (j.dxy / q - gx * gy);
            out.hess[1][1] += e * (j.dyy / q - gy * gy);
        }
        out.hess[1][0] = out.hess[0][1];
        Some((out, scale))
    }

    /// Newton along the gradient onto `value = level`; `None` if the
    /// iteration leaves the domain or stalls above `rel_tol` times the
    /// rounding scale of the value.
    pub fn project(&self, mut q: Point, level: f64, rel_tol: f64) -> Option<(Point, LogJet)> {
        for _ in 0..40 {
            let (jet, scale) = self.jet_with_scale(q)?;
            let err = jet.value - level;
            // the level cannot be resolved below one ulp of the position
            let ulp = f64::EPSILON * q[0].abs().max(q[1].abs());
            if err.abs() <= rel_tol * scale.max(level.abs()) + 2.0 * ulp * jet.grad_norm() {
                return Some((q, jet));
            }
            let g2 = jet.grad[0] * jet.grad[0] + jet.grad[1] * jet.grad[1];
            if g2 == 0.0 || !g2.is_finite() {
                return None;
            }
            q = [q[0] - err * jet.grad[0] / g2, q[1] - err * jet.grad[1] / g2];
        }
        None
    }

    /// Relative Newton tolerance used by the tracer.
    pub const TOLERANCE: f64 = 8e-15;
}

/// Distance along `dir` from `from` to the first point leaving the domain.
pub(crate) fn distance_to_edge(sys: &DarbouxSystem, from: Point, dir: Point, scale: f64) -> Result<f64> {
    let at = |s: f64| [from[0] + s * dir[0], from[1] + s * dir[1]];
    let mut hi = scale;
    let mut lo = 0.0;
    let mut tries = 0;
    while sys.in_domain(at(hi)) {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::InvalidParameter("nest domain is unbounded along the section".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sys.in_domain(at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Point on the ray `center + s·dir` where `log H = log h`, by bisection and
/// a final Newton polish.
pub fn point_on_ray(
    sys: &DarbouxSystem,
    range: &NestRange,
    dir: Point,
    h: f64,
) -> Result<Point> {
    if !range.contains(h) {
        return Err(Error::Range {
            h,
            h_max: range.h_max,
        });
    }
    let c = range.center;
    let map = LevelMap::new(sys, range)?;
    let level = LevelMap::level_of(range, h);
    let at = |s: f64| [c[0] + s * dir[0], c[1] + s * dir[1]];
    let edge = distance_to_edge(sys, c, dir, 1e-3 * range.lambda)?;
    let (mut lo, mut hi) = (0.0, edge);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let above = map.value(at(mid)).is_some_and(|l| l > level);
        if above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..3 {
        let Some(jet) = map.jet(at(s)) else { break };
        let slope = jet.grad[0] * dir[0] + jet.grad[1] * dir[1];
        if slope == 0.0 {
            break;
        }
        let next = s - (jet.value - level) / slope;
        if next.is_finite() && next > 0.0 && next < edge {
            s = next;
        }
    }
    Ok(at(s))
}

/// Step control for [`trace_oval_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Arc step in units of λ.
    pub base_step: f64,
    /// Bound on `step · curvature`.
    pub curvature_factor: f64,
    /// Bound on `step / distance to the nearest vertex`.
    pub vertex_factor: f64,
    pub max_steps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            base_step: 1e-3,
            curvature_factor: 0.05,
            vertex_factor: 0.05,
            max_steps: 1_000_000,
        }
    }
}

impl TraceOptions {
    /// The same rules with every step bound scaled by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            base_step: self.base_step * factor,
            curvature_factor: self.curvature_factor * factor,
            vertex_factor: self.vertex_factor * factor,
            max_steps: self.max_steps,
        }
    }
}

/// A closed, counterclockwise sample of the oval `γ(λ, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Oval {
    /// Ordered samples; the last point is the closing point on the start ray.
    pub points: Vec<Point>,
    /// Unit tangents in the direction of traversal.
    pub tangents: Vec<Point>,
    pub h: f64,
    pub lambda: f64,
    pub center: Point,
    pub closure_defect: f64,
    pub level_defect: f64,
    pub length: f64,
}

impl Oval {
    /// Shoelace area, positive for counterclockwise orientation.
    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.points)
    }

    pub fn enclosed_area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Winding number of the polyline around the center.
    pub fn winding_number(&self) -> i64 {
        let mut total = 0.0;
        let c = self.center;
        let n = self.points.len();
        for i in 0..n {
            let p = self.points[i];
            let q = self.points[(i + 1) % n];
            let u = [p[0] - c[0], p[1] - c[1]];
            let v = [q[0] - c[0], q[1] - c[1]];
            total += (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
        }
        (total / (2.0 * PI)).round() as i64
    }

    pub fn self_intersects(&self) -> bool {
        polyline_self_intersects(&self.points)
    }

    pub fn diameter(&self) -> f64 {
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &self.points {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        (xmax - xmin).hypot(ymax - ymin)
    }

    /// Point at parameter `s ∈ [0, 1]` of the cubic Hermite arc from sample
    /// `i` to sample `i + 1`, with tangents scaled by the chord length.
    pub fn hermite_point(&self, i: usize, s: f64) -> Point {
        let (p0, p1) = (self.points[i], self.points[i + 1]);
        let l = dist(p0, p1);
        let (t0, t1) = (self.tangents[i], self.tangents[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        [
            h00 * p0[0] + h10 * l * t0[0] + h01 * p1[0] + h11 * l * t1[0],
            h00 * p0[1] + h10 * l * t0[1] + h01 * p1[1] + h11 * l * t1[1],
        ]
    }

    /// Crossings of the Hermite-interpolated oval with the horizontal line
    /// `y = y0`, excluding the closing arc's endpoint duplicate.
    pub fn crossings_y(&self, y0: f64) -> Vec<Point> {
        let mut out = Vec::new();
        for i in 0..self.points.len() - 1 {
            let (a, b) = (self.points[i][1] - y0, self.points[i + 1][1] - y0);
            let starts_on = a == 0.0 && i == 0;
            if !(starts_on || (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) {
                continue;
            }
            if starts_on {
                out.push(self.points[0]);
                continue;
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let f = self.hermite_point(i, mid)[1] - y0;
                if (f > 0.0) == (a > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(self.hermite_point(i, 0.5 * (lo + hi)));
        }
        out
    }

    /// The oval traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.points.reverse();
        out.tangents.reverse();
        for t in &mut out.tangents {
            *t = [-t[0], -t[1]];
        }
        out
    }

    /// CSV with header `x,y` preceded by metadata comments.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# lambda={:e}, h={:e}, closure_defect={:e}",
            self.lambda, self.h, self.closure_defect
        );
        let _ = writeln!(s, "# level_defect={:e}, length={:e}", self.level_defect, self.length);
        s.push_str("x,y\n");
        for p in &self.points {
            let _ = writeln!(s, "{:.17e},{:.17e}", p[0], p[1]);
        }
        s
    }
}

pub(crate) fn polygon_signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}

/// Traces `γ(λ, h)` with default step rules.
pub fn trace_oval(sys: &DarbouxSystem, h: f64) -> Result<Oval> {
    let range = find_center(sys)?;
    trace_oval_with(sys, &range, h, &TraceOptions::default())
}

struct Stepper<'a> {
    map: &'a LevelMap,
    level: f64,
    tol: f64,
}

impl Stepper<'_> {
    fn correct(&self, q: Point) -> Option<(Point, LogJet)> {
        self.map.project(q, self.level, self.tol)
    }

    /// One predictor–corrector step of arc length `sigma` from `p`.
    fn step(&self, p: Point, jet: &LogJet, sigma: f64) -> Option<(Point, LogJet)> {
        let g = jet.grad_norm();
        let t = [jet.grad[1] / g, -jet.grad[0] / g];
        let pred = [p[0] + sigma * t[0], p[1] + sigma * t[1]];
        let (q, qjet) = self.correct(pred)?;
        // reject corrections that jump to another part of the curve
        if dist(q, pred) > 0.5 * sigma {
            return None;
        }
        let gq = qjet.grad_norm();
        let tq = [qjet.grad[1] / gq, -qjet.grad[0] / gq];
        if t[0] * tq[0] + t[1] * tq[1] < 0.5 {
            return None;
        }
        Some((q, qjet))
    }
}

fn angle_between(c: Point, p: Point, q: Point) -> f64 {
    let u = [p[0] - c[0], p[1] - c[1]];
    let v = [q[0] - c[0], q[1] - c[1]];
    (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1])
}

/// Traces `γ(λ, h)` counterclockwise starting on the section ray, stopping
/// when the accumulated angle around the center reaches `2π`.
pub fn trace_oval_with(
    sys: &DarbouxSystem,
    range: &NestRange,
    h: f64,
    opts: &TraceOptions,
) -> Result<Oval> {
    if !range.contains(h) {
        return Err(Error::Range {
            h,
            h_max: range.h_max,
        });
    }
    let lambda = range.lambda;
    let map = LevelMap::new(sys, range)?;
    let level = LevelMap::level_of(range, h);
    let stepper = Stepper {
        map: &map,
        level,
        tol: LevelMap::TOLERANCE,
    };
    let dir = section_direction(sys, range);
    let start = point_on_ray(sys, range, dir, h)?;
    let (start, mut jet) = stepper
        .correct(start)
        .ok_or(Error::NonClosure { steps: 0 })?;
    let vertices = sys.nest_vertices().unwrap_or_default();
    let c = range.center;

    let unit_tangent = |jet: &LogJet| {
        let g = jet.grad_norm();
        [jet.grad[1] / g, -jet.grad[0] / g]
    };
    let mut points = vec![start];
    let mut tangents = vec![unit_tangent(&jet)];
    let mut p = start;
    let mut angle = 0.0;
    let mut length = 0.0;
    let mut steps = 0;
    let step_limit = |p: Point, jet: &LogJet| {
        let mut s = opts.base_step * lambda;
        let k = jet.level_curvature();
        if k > 0.0 {
            s = s.min(opts.curvature_factor / k);
        }
        for v in &vertices {
            s = s.min(opts.vertex_factor * dist(p, *v));
        }
        // never step past the center's neighbourhood radius
        s.min(0.25 * dist(p, c))
    };
    loop {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::NonClosure { steps: opts.max_steps });
        }
        let mut sigma = step_limit(p, &jet);
        let (q, qjet) = loop {
            match stepper.step(p, &jet, sigma) {
                Some(ok) => break ok,
                None => {
                    sigma *= 0.5;
                    if sigma < 1e-15 * lambda {
                        return Err(Error::NonClosure { steps });
                    }
                }
            }
        };
        let turn = angle_between(c, p, q);
        if turn <= 0.0 {
            return Err(Error::NonClosure { steps });
        }
        if angle + turn >= 2.0 * PI {
            // bisect the step length so the closing point lands on the start ray
            let side = |q: Point| dir[0] * (q[1] - c[1]) - dir[1] * (q[0] - c[0]);
            let (mut lo, mut hi) = (0.0, sigma);
            let mut close = (q, qjet);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let Some(trial) = stepper.step(p, &jet, mid) else {
                    hi = mid;
                    continue;
                };
                let before = side(trial.0) < 0.0;
                close = trial;
                if before {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (qc, qcjet) = close;
            length += dist(p, qc);
            points.push(qc);
            tangents.push(unit_tangent(&qcjet));
            break;
        }
        angle += turn;
        length += dist(p, q);
        points.push(q);
        tangents.push(unit_tangent(&qjet));
        p = q;
        jet = qjet;
    }

    let closing = *points.last().expect("nonempty");
    let closure_defect = dist(closing, start);
    let mut level_defect: f64 = 0.0;
    for q in &points {
        let l = map.value(*q).ok_or(Error::NonClosure { steps })?;
        level_defect = level_defect.max((l - level).exp_m1().abs());
    }
    let oval = Oval {
        points,
        tangents,
        h,
        lambda,
        center: c,
        closure_defect,
        level_defect,
        length,
    };
    if oval.self_intersects() {
        return Err(Error::NonClosure { steps });
    }
    Ok(oval)
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Segment-pair crossing test over the closed polyline, bucketed on a grid
/// so the cost stays near linear.
pub(crate) fn polyline_self_intersects(points: &[Point]) -> bool {
    let n = points.len();
    if n < 4 {
        return false;
    }
    let seg = |i: usize| (points[i], points[(i + 1) % n]);
    let max_len = (0..n).map(|i| { let (a, b) = seg(i); dist(a, b) }).fold(0.0, f64::max);
    if max_len == 0.0 {
        return false;
    }
    let cell = 2.0 * max_len;
    let key = |p: Point| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..n {
        let (a, b) = seg(i);
        let (ka, kb) = (key(a), key(b));
        for gx in ka.0.min(kb.0)..=ka.0.max(kb.0) {
            for gy in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                grid.entry((gx, gy)).or_default().push(i);
            }
        }
    }
    for bucket in grid.values() {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                let gap = (i as i64 - j as i64).rem_euclid(n as i64);
                if gap <= 1 || gap >= n as i64 - 1 {
                    continue;
                }
                let (a, b) = seg(i);
                let (c, d) = seg(j);
                if segments_cross(a, b, c, d) {
                    return true;
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux::build_normal_form;

    #[test]
    fn unit_center() {
        let sys = build_normal_form(1.0, 1.0, 1.0, 1.0, None).unwrap();
        let r = find_center(&sys).unwrap();
        assert!(dist(r.center, [2.0 / 3.0, 0.0]) < 1e-14);
        assert!((r.h_max - 4.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn off_axis_center() {
        let sys = build_normal_form(1.0, 2.0, 1.0, 1.0, None).unwrap();
        let r = find_center(&sys).unwrap();
        assert!(r.center[1].abs() > 0.1);
        assert!(sys.log_jet(r.center).unwrap().grad_norm() < 1e-10);
        assert!(dist(r.center, [0.75, -0.25]) < 1e-12);
    }

    #[test]
    fn lambda_zero_has_no_nest() {
        let sys = build_normal_form(1.0, 1.0, 1.0, 0.0, None).unwrap();
        assert!(find_center(&sys).is_err());
    }

    #[test]
    fn unit_oval_crossings() {
        let sys = build_normal_form(1.0, 1.0, 1.0, 1.0, None).unwrap();
        let oval = trace_oval(&sys, 0.1).unwrap();
        assert!(oval.closure_defect < 1e-8 * oval.length);
        assert!(oval.level_defect < 1e-8);
        assert_eq!(oval.winding_number(), 1);
        assert!(oval.signed_area() > 0.0);
        assert!(!oval.self_intersects());
        let start = oval.points[0];
        assert!(start[1].abs() < 1e-15);
        // roots of x^2 (1 - x) = 0.1
        let roots = [0.412_605_572_254_690_5, 0.866_951_317_595_977_2];
        let xs: Vec<f64> = oval.crossings_y(0.0).iter().map(|p| p[0]).collect();
        assert_eq!(xs.len(), 2, "{xs:?}");
        assert!((xs[0] - roots[1]).abs() < 1e-9, "{xs:?}");
        assert!((xs[1] - roots[0]).abs() < 1e-9, "{xs:?}");
    }

    #[test]
    fn range_errors() {
        let sys = build_normal_form(1.0, 1.0, 1.0, 1.0, None).unwrap();
        let n = 4.0 / 27.0;
        assert!(matches!(trace_oval(&sys, 1.01 * n), Err(Error::Range { .. })));
        assert!(matches!(trace_oval(&sys, 0.0), Err(Error::Range { .. })));
    }

    #[test]
    fn tiny_oval_near_center() {
        let sys = build_normal_form(1.0, 1.0, 1.0, 1.0, None).unwrap();
        let n = 4.0 / 27.0;
        let oval = trace_oval(&sys, n * (1.0 - 1e-9)).unwrap();
        assert!(oval.diameter() < 1e-3);
        assert!(oval.closure_defect < 1e-8 * oval.length);
    }

    #[test]
    fn crossing_polyline_detected() {
        let bow = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(polyline_self_intersects(&bow));
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(!polyline_self_intersects(&square));
    }
}
