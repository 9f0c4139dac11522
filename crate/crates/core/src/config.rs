//! Scenario files: one TOML document per scenario holding the Darboux data,
//! the perturbation, the grids and the tolerances of a run.

use serde::{Deserialize, Serialize};

use crate::asymptotics::PsiFitOptions;
use crate::blowup::NormalExponents;
use crate::darboux::{build_normal_form, DarbouxSystem, Orientation, Perturbation, Unfolding};
use crate::error::{Error, Result};
use crate::integrator::{QuadratureOptions, SeriesOptions};
use crate::ode::OdeOptions;
use crate::oval::TraceOptions;
use crate::poly::Polynomial2;
use crate::zeros::{ScanOptions, UniformityOptions};

/// Polynomial coefficient `(i, j, c)` of `c·xⁱyʲ`.
pub type Coeff = (usize, usize, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Seed of every sampled check.
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub darboux: DarbouxConfig,
    pub degrees: Degrees,
    pub perturbation: PerturbationConfig,
    pub grids: Grids,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarbouxConfig {
    pub lambda: f64,
    /// λ values of the uniformity study.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<NormalFormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralSpec>,
    /// Unit factor Δ; absent means Δ ≡ 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<Coeff>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormSpec {
    pub eps: f64,
    pub eps_plus: f64,
    pub eps_minus: f64,
}

/// `P_λ = P₀ − λU` and fixed factors, each with its exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralSpec {
    pub base: Vec<Coeff>,
    pub lambda_coeff: Vec<Coeff>,
    pub exponent: f64,
    pub factors: Vec<FactorSpec>,
    #[serde(default)]
    pub orientation: OrientationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub coeffs: Vec<Coeff>,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OrientationSpec {
    #[default]
    Centroid,
    Explicit {
        signs: Vec<f64>,
    },
    At {
        point: [f64; 2],
    },
}

/// Degree bounds `deg P_λ ≤ n₀`, `deg P_i ≤ n_i`, `deg(R, S) ≤ n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Degrees {
    pub n0: usize,
    pub factors: Vec<usize>,
    pub form: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub r: Vec<Coeff>,
    #[serde(default)]
    pub s: Vec<Coeff>,
    #[serde(default)]
    pub kappas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// Endpoints included, equal ratios.
    Geometric,
    Linear,
    /// Explicit `values`.
    List,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub spacing: Spacing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    /// Values are fractions of `n(λ)` when set.
    #[serde(default = "yes")]
    pub relative: bool,
}

fn yes() -> bool {
    true
}

impl GridSpec {
    pub fn list(values: Vec<f64>, relative: bool) -> Self {
        Self {
            spacing: Spacing::List,
            min: None,
            max: None,
            points: None,
            values,
            relative,
        }
    }

    /// Raw grid values, before scaling by `n(λ)`.
    pub fn raw(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::List => self.values.clone(),
            Spacing::Geometric | Spacing::Linear => {
                let (lo, hi, k) = (
                    self.min.unwrap_or(f64::NAN),
                    self.max.unwrap_or(f64::NAN),
                    self.points.unwrap_or(0),
                );
                if k == 1 {
                    return vec![lo];
                }
                (0..k)
                    .map(|i| {
                        let s = i as f64 / (k - 1) as f64;
                        match self.spacing {
                            Spacing::Geometric => lo * (hi / lo).powf(s),
                            _ => lo + (hi - lo) * s,
                        }
                    })
                    .collect()
            }
        }
    }

    /// Grid levels for a nest of height `n`.
    pub fn levels(&self, n: f64) -> Vec<f64> {
        let scale = if self.relative { n } else { 1.0 };
        self.raw().into_iter().map(|v| v * scale).collect()
    }

    fn validate(&self, field: &str) -> Result<()> {
        let bad = |message: String| Error::Config {
            field: field.into(),
            message,
        };
        match self.spacing {
            Spacing::List => {
                if self.values.is_empty() {
                    return Err(bad("list grid needs a nonempty `values`".into()));
                }
            }
            Spacing::Geometric | Spacing::Linear => {
                let (lo, hi) = match (self.min, self.max) {
                    (Some(lo), Some(hi)) => (lo, hi),
                    _ => return Err(bad("`min` and `max` are required".into())),
                };
                match self.points {
                    Some(k) if k > 0 => {}
                    _ => return Err(bad("`points` must be a positive integer".into())),
                }
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return Err(bad(format!("need 0 < min <= max, got [{lo}, {hi}]")));
                }
            }
        }
        let raw = self.raw();
        if raw.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(bad("grid values must be finite and positive".into()));
        }
        if self.relative && raw.iter().any(|&v| v >= 1.0) {
            return Err(bad("relative levels must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Series grid of `integrate`.
    pub h: GridSpec,
    /// Dense grid of `zeros`, `uniformity`, `validate-ode` and the model
    /// window; `h` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<GridSpec>,
    /// Levels compared against the Stokes oracle by `integrate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<GridSpec>,
    /// `h/n(λ)` bounds of the power-log model window.
    #[serde(default = "default_model_window")]
    pub model_window: [f64; 2],
    /// `t` values of the log split.
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    /// λ values of the log split.
    #[serde(default)]
    pub lambda: Vec<f64>,
}

fn default_model_window() -> [f64; 2] {
    [1e-5, 1e-2]
}

fn default_t() -> Vec<f64> {
    vec![10.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub quadrature_rel: f64,
    pub quadrature_floor: f64,
    pub quadrature_refinements: usize,
    pub trace_step: f64,
    pub trace_curvature: f64,
    pub trace_vertex: f64,
    pub fit_rel: f64,
    pub fit_window: [f64; 2],
    pub fit_max_log: u32,
    pub fit_max_condition: f64,
    pub candidate_depth: u32,
    pub zero_width: f64,
    pub indeterminate_band: f64,
    pub ode_rel: f64,
    pub ode_abs: f64,
    pub contour_alpha: f64,
    pub golden_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let q = QuadratureOptions::default();
        let t = TraceOptions::default();
        let f = PsiFitOptions::default();
        let s = ScanOptions::default();
        let o = OdeOptions::default();
        Self {
            quadrature_rel: q.rel_tol,
            quadrature_floor: q.abs_floor,
            quadrature_refinements: q.max_refinements,
            trace_step: t.base_step,
            trace_curvature: t.curvature_factor,
            trace_vertex: t.vertex_factor,
            fit_rel: f.rel_tol,
            fit_window: [f.window.0, f.window.1],
            fit_max_log: f.max_log_power,
            fit_max_condition: f.max_condition,
            candidate_depth: 2,
            zero_width: s.rel_width,
            indeterminate_band: s.band,
            ode_rel: o.rel_tol,
            ode_abs: o.abs_tol,
            contour_alpha: 1.0,
            golden_rel: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl ScenarioConfig {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            field: "toml".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            field: "path".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Error::Config {
            field: field.into(),
            message,
        };
        if self.name.trim().is_empty() {
            return Err(bad("name", "must not be empty".into()));
        }
        let d = &self.darboux;
        for (k, &l) in std::iter::once(&d.lambda).chain(&d.lambdas).enumerate() {
            if !(l >= 0.0 && l.is_finite()) {
                let field = if k == 0 {
                    "darboux.lambda".to_string()
                } else {
                    format!("darboux.lambdas[{}]", k - 1)
                };
                return Err(bad(&field, format!("must be finite and >= 0, got {l}")));
            }
        }
        let factor_degrees: Vec<usize> = match (&d.normal_form, &d.general) {
            (Some(nf), None) => {
                for (field, v) in [
                    ("darboux.normal_form.eps", nf.eps),
                    ("darboux.normal_form.eps_plus", nf.eps_plus),
                    ("darboux.normal_form.eps_minus", nf.eps_minus),
                ] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(bad(field, format!("exponent must be positive, got {v}")));
                    }
                }
                if self.degrees.n0 < 1 {
                    return Err(bad("degrees.n0", "the unfolding factor x − λ has degree 1".into()));
                }
                vec![1, 1]
            }
            (None, Some(g)) => {
                if !(g.exponent > 0.0 && g.exponent.is_finite()) {
                    return Err(bad(
                        "darboux.general.exponent",
                        format!("exponent must be positive, got {}", g.exponent),
                    ));
                }
                let d0 = Polynomial2::from_terms(&g.base)
                    .actual_degree()
                    .max(Polynomial2::from_terms(&g.lambda_coeff).actual_degree());
                if d0 > self.degrees.n0 {
                    return Err(bad(
                        "darboux.general.base",
                        format!("degree {d0} exceeds degrees.n0 = {}", self.degrees.n0),
                    ));
                }
                if Polynomial2::from_terms(&g.lambda_coeff).eval(0.0, 0.0) == 0.0 {
                    return Err(bad(
                        "darboux.general.lambda_coeff",
                        "U(0, 0) must be nonzero".into(),
                    ));
                }
                for (k, f) in g.factors.iter().enumerate() {
                    if !(f.exponent > 0.0 && f.exponent.is_finite()) {
                        return Err(bad(
                            &format!("darboux.general.factors[{k}].exponent"),
                            format!("exponent must be positive, got {}", f.exponent),
                        ));
                    }
                }
                if let OrientationSpec::Explicit { signs } = &g.orientation {
                    if signs.len() != g.factors.len() + 1 {
                        return Err(bad(
                            "darboux.general.orientation.signs",
                            format!("expected {} signs", g.factors.len() + 1),
                        ));
                    }
                }
                g.factors
                    .iter()
                    .map(|f| Polynomial2::from_terms(&f.coeffs).actual_degree())
                    .collect()
            }
            _ => {
                return Err(bad(
                    "darboux",
                    "exactly one of [darboux.normal_form] and [darboux.general] is required".into(),
                ))
            }
        };
        if factor_degrees.len() != self.degrees.factors.len() {
            return Err(bad(
                "degrees.factors",
                format!("expected {} bounds", factor_degrees.len()),
            ));
        }
        for (k, (&deg, &bound)) in factor_degrees.iter().zip(&self.degrees.factors).enumerate() {
            if deg > bound {
                return Err(bad(
                    &format!("degrees.factors[{k}]"),
                    format!("factor degree {deg} exceeds the bound {bound}"),
                ));
            }
        }
        if let Some(delta) = &d.delta {
            let v = Polynomial2::from_terms(delta).eval(0.0, 0.0);
            if v == 0.0 || !v.is_finite() {
                return Err(bad("darboux.delta", "Δ(0, 0) must be finite and nonzero".into()));
            }
        }
        for (field, terms) in [("perturbation.r", &self.perturbation.r), ("perturbation.s", &self.perturbation.s)] {
            if terms.iter().any(|t| !t.2.is_finite()) {
                return Err(bad(field, "coefficients must be finite".into()));
            }
            let deg = Polynomial2::from_terms(terms).actual_degree();
            if deg > self.degrees.form {
                return Err(bad(
                    field,
                    format!("degree {deg} exceeds degrees.form = {}", self.degrees.form),
                ));
            }
        }
        for (k, &kappa) in self.perturbation.kappas.iter().enumerate() {
            if !(kappa >= 0.0 && kappa.is_finite()) {
                return Err(bad(
                    &format!("perturbation.kappas[{k}]"),
                    format!("must be finite and >= 0, got {kappa}"),
                ));
            }
        }

        let g = &self.grids;
        g.h.validate("grids.h")?;
        for (field, spec) in [
            ("grids.scan", &g.scan),
            ("grids.trace", &g.trace),
            ("grids.oracle", &g.oracle),
            ("grids.ode", &g.ode),
        ] {
            if let Some(spec) = spec {
                spec.validate(field)?;
            }
        }
        if !self.scan_grid().relative {
            return Err(bad("grids.scan", "the scan grid is shared across λ and must be relative".into()));
        }
        let [w_lo, w_hi] = g.model_window;
        if !(w_lo > 0.0 && w_hi > w_lo && w_hi <= 1.0) {
            return Err(bad("grids.model_window", format!("need 0 < lo < hi <= 1, got [{w_lo}, {w_hi}]")));
        }
        if g.t.is_empty() || g.t.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(bad("grids.t", "needs finite positive values".into()));
        }
        if g.lambda.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(bad("grids.lambda", "needs finite positive values".into()));
        }

        let t = &self.tolerances;
        for (field, v) in [
            ("quadrature_rel", t.quadrature_rel),
            ("quadrature_floor", t.quadrature_floor),
            ("trace_step", t.trace_step),
            ("trace_curvature", t.trace_curvature),
            ("trace_vertex", t.trace_vertex),
            ("fit_rel", t.fit_rel),
            ("fit_max_condition", t.fit_max_condition),
            ("zero_width", t.zero_width),
            ("indeterminate_band", t.indeterminate_band),
            ("ode_rel", t.ode_rel),
            ("ode_abs", t.ode_abs),
            ("contour_alpha", t.contour_alpha),
            ("golden_rel", t.golden_rel),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(&format!("tolerances.{field}"), format!("must be positive, got {v}")));
            }
        }
        if !(t.fit_window[0] < t.fit_window[1]) {
            return Err(bad("tolerances.fit_window", "needs lo < hi".into()));
        }
        if t.contour_alpha > 2.0 {
            return Err(bad("tolerances.contour_alpha", "the sector opening must not exceed 2π".into()));
        }
        Ok(())
    }

    /// The Darboux system at `lambda`.
    pub fn system(&self, lambda: f64) -> Result<DarbouxSystem> {
        let d = &self.darboux;
        let delta = d.delta.as_ref().map(|t| Polynomial2::from_terms(t));
        if let Some(nf) = &d.normal_form {
            return build_normal_form(nf.eps, nf.eps_plus, nf.eps_minus, lambda, delta);
        }
        let g = d.general.as_ref().expect("validated");
        let unfolding = Unfolding {
            base: Polynomial2::from_terms(&g.base),
            lambda_coeff: Polynomial2::from_terms(&g.lambda_coeff),
            exponent: g.exponent,
        };
        let fixed = g
            .factors
            .iter()
            .map(|f| (Polynomial2::from_terms(&f.coeffs), f.exponent))
            .collect();
        let orientation = match &g.orientation {
            OrientationSpec::Centroid => Orientation::Centroid,
            OrientationSpec::Explicit { signs } => Orientation::Explicit(signs.clone()),
            OrientationSpec::At { point } => Orientation::At(*point),
        };
        DarbouxSystem::new(unfolding, fixed, delta, lambda, orientation)
    }

    pub fn normal_exponents(&self) -> Result<NormalExponents> {
        match &self.darboux.normal_form {
            Some(nf) => NormalExponents::new(nf.eps, nf.eps_plus, nf.eps_minus),
            None => Err(Error::Config {
                field: "darboux.normal_form".into(),
                message: "the blow-up check needs the normal form".into(),
            }),
        }
    }

    pub fn perturbation(&self) -> Perturbation {
        let p = &self.perturbation;
        let degree = self.degrees.form;
        Perturbation::new(
            Polynomial2::from_terms_with_degree(&p.r, degree),
            Polynomial2::from_terms_with_degree(&p.s, degree),
        )
    }

    /// λ values of the uniformity study; the scenario λ when none is listed.
    pub fn study_lambdas(&self) -> Vec<f64> {
        if self.darboux.lambdas.is_empty() {
            vec![self.darboux.lambda]
        } else {
            self.darboux.lambdas.clone()
        }
    }

    pub fn scan_grid(&self) -> &GridSpec {
        self.grids.scan.as_ref().unwrap_or(&self.grids.h)
    }

    pub fn trace_options(&self) -> TraceOptions {
        let t = &self.tolerances;
        TraceOptions {
            base_step: t.trace_step,
            curvature_factor: t.trace_curvature,
            vertex_factor: t.trace_vertex,
            ..TraceOptions::default()
        }
    }

    pub fn quadrature_options(&self) -> QuadratureOptions {
        let t = &self.tolerances;
        QuadratureOptions {
            rel_tol: t.quadrature_rel,
            abs_floor: t.quadrature_floor,
            max_refinements: t.quadrature_refinements,
        }
    }

    pub fn series_options(&self, parallel: bool) -> SeriesOptions {
        SeriesOptions {
            trace: self.trace_options(),
            quadrature: self.quadrature_options(),
            parallel,
        }
    }

    pub fn fit_options(&self) -> PsiFitOptions {
        let t = &self.tolerances;
        PsiFitOptions {
            window: (t.fit_window[0], t.fit_window[1]),
            max_log_power: t.fit_max_log,
            rel_tol: t.fit_rel,
            max_condition: t.fit_max_condition,
            ..PsiFitOptions::default()
        }
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            rel_width: self.tolerances.zero_width,
            band: self.tolerances.indeterminate_band,
            ..ScanOptions::default()
        }
    }

    pub fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rel_tol: self.tolerances.ode_rel,
            abs_tol: self.tolerances.ode_abs,
            ..OdeOptions::default()
        }
    }

    pub fn uniformity_options(&self, parallel: bool) -> UniformityOptions {
        UniformityOptions {
            relative_grid: self.scan_grid().raw(),
            model_window: (self.grids.model_window[0], self.grids.model_window[1]),
            candidate_depth: self.tolerances.candidate_depth,
            fit: self.fit_options(),
            alpha: self.tolerances.contour_alpha,
            scan: self.scan_options(),
            series: self.series_options(parallel),
            parallel,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: &str = r#"
name = "unit"

[darboux]
lambda = 1.0

[darboux.normal_form]
eps = 1.0
eps_plus = 1.0
eps_minus = 1.0

[degrees]
n0 = 1
factors = [1, 1]
form = 1

[perturbation]
s = [[1, 0, 1.0]]

[grids]
h = { spacing = "list", values = [0.5, 0.25] }
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ScenarioConfig::parse(UNIT).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.tolerances, Tolerances::default());
        let again = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        let sys = cfg.system(1.0).unwrap();
        assert_eq!(sys.a(), 3.0);
        assert_eq!(cfg.perturbation().eval([0.3, 0.2]), Perturbation::x_dy().eval([0.3, 0.2]));
    }

    fn field_of(text: &str) -> String {
        match ScenarioConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_name_the_field() {
        assert_eq!(
            field_of(&UNIT.replace("eps_plus = 1.0", "eps_plus = -1.0")),
            "darboux.normal_form.eps_plus"
        );
        assert_eq!(field_of(&UNIT.replace("form = 1", "form = 0")), "perturbation.s");
        assert_eq!(field_of(&UNIT.replace("[0.5, 0.25]", "[]")), "grids.h");
        assert_eq!(field_of(&UNIT.replace("lambda = 1.0", "lambda = -1.0")), "darboux.lambda");
        assert_eq!(field_of(&UNIT.replace("name = \"unit\"", "name = 3")), "toml");
        let tol = format!("{UNIT}\n[tolerances]\nquadrature_rel = 0.0\n");
        assert_eq!(field_of(&tol), "tolerances.quadrature_rel");
    }

    #[test]
    fn grids() {
        let g = GridSpec {
            spacing: Spacing::Geometric,
            min: Some(1e-4),
            max: Some(1.0),
            points: Some(5),
            values: vec![],
            relative: true,
        };
        let v = g.levels(2.0);
        assert_eq!(v.len(), 5);
        assert!((v[0] - 2e-4).abs() < 1e-18 && (v[4] - 2.0).abs() < 1e-15);
        assert!((v[2] - 2e-2).abs() < 1e-15);
        let l = GridSpec::list(vec![0.1, 0.2], false);
        assert_eq!(l.levels(5.0), vec![0.1, 0.2]);
    }
}
