//! Scenario files: the JSON input of the command-line front end.

use serde::{Deserialize, Serialize};

use crate::asymptotics::BoundedSequence;
use crate::convex1d::{Extension, PiecewiseConvexFn};
use crate::duality::{BatteryConfig, ConeSpec, GridSpec, SolverConfig, UtilitySpec};
use crate::error::{Error, Result};
use crate::functional::Integrand;
use crate::penalty::Penalty;
use crate::space::{Density, FiniteSpace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Required by every command except `counterexample`.
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub integrand: Option<IntegrandSpec>,
    #[serde(default)]
    pub penalty: Option<PenaltySpec>,
    #[serde(default)]
    pub cone: Option<ConeSpec>,
    #[serde(default)]
    pub utility: Option<UtilitySpecJson>,
    /// Arguments of the functional for `eval` and `battery`.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    /// Arguments of the conjugate for `conjugate`.
    #[serde(default)]
    pub etas: Vec<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub counterexample: Option<CounterexampleSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandSpec {
    /// The same section on every atom.
    Uniform(SectionSpec),
    /// One section per atom.
    Sections(Vec<SectionSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SectionSpec {
    /// An explicit piecewise-linear-quadratic function.
    Plq { function: PiecewiseConvexFn },
    /// `a x² + b x + c`.
    Quadratic { a: f64, b: f64, c: f64 },
    Affine { slope: f64, intercept: f64 },
    /// Slopes `left_slope` and `right_slope` meeting at `kink`, plus `offset`.
    Kinked {
        left_slope: f64,
        right_slope: f64,
        kink: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `0` on `[lo, hi]`, `+∞` elsewhere.
    Indicator { lo: f64, hi: f64 },
    /// `eˣ` interpolated on `knots` points of `[−half_width, half_width]`,
    /// continued with slope `0` on the left and `e^{half_width}` on the right.
    Exponential { half_width: f64, knots: usize },
}

impl SectionSpec {
    pub fn build(&self) -> Result<PiecewiseConvexFn> {
        match self {
            SectionSpec::Plq { function } => Ok(function.clone()),
            SectionSpec::Quadratic { a, b, c } => PiecewiseConvexFn::quadratic(*a, *b, *c),
            SectionSpec::Affine { slope, intercept } => PiecewiseConvexFn::affine(*slope, *intercept),
            SectionSpec::Kinked { left_slope, right_slope, kink, offset } => {
                PiecewiseConvexFn::kinked(*left_slope, *right_slope, *kink)?.add_constant(*offset)
            }
            SectionSpec::Indicator { lo, hi } => PiecewiseConvexFn::indicator(*lo, *hi),
            SectionSpec::Exponential { half_width, knots } => exponential(*half_width, *knots),
        }
    }
}

fn exponential(half_width: f64, knots: usize) -> Result<PiecewiseConvexFn> {
    if !(half_width > 0.0 && half_width.is_finite()) || knots < 2 {
        return Err(Error::Scenario("exponential needs a positive half width and at least 2 knots".into()));
    }
    let pts = PiecewiseConvexFn::uniform_knots(-half_width, half_width, knots);
    PiecewiseConvexFn::sample(f64::exp, &pts, Extension::Slopes { left: 0.0, right: half_width.exp() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltySpec {
    /// A single measure, given by its probabilities; the reference measure
    /// when omitted.
    Dirac(#[serde(default)] DiracData),
    /// Indicator of the convex hull of the listed measures.
    Polyhedral(PolyhedralData),
    /// Relative entropy with respect to the reference measure.
    Entropic,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracData {
    #[serde(default)]
    pub probabilities: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhedralData {
    /// Probabilities of each vertex measure.
    pub vertices: Vec<Vec<f64>>,
}

impl PenaltySpec {
    pub fn build(&self, space: &FiniteSpace) -> Result<Penalty> {
        match self {
            PenaltySpec::Dirac(DiracData { probabilities: None }) => Ok(Penalty::reference(space)),
            PenaltySpec::Dirac(DiracData { probabilities: Some(p) }) => {
                Penalty::dirac(space, Density::from_probabilities(space, p)?)
            }
            PenaltySpec::Polyhedral(PolyhedralData { vertices }) => {
                let v = vertices.iter().map(|p| Density::from_probabilities(space, p)).collect::<Result<Vec<_>>>()?;
                Penalty::polyhedral(space, v)
            }
            PenaltySpec::Entropic => Ok(Penalty::Entropic),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpecJson {
    /// `U(x) = −e^{−x}`, interpolated.
    Exponential { discount: Vec<f64>, claim: Vec<f64>, half_width: f64, knots: usize },
    /// `U(x) = −Ũ(−x)` for an explicit convex nondecreasing `Ũ`.
    Mirrored { mirrored_utility: PiecewiseConvexFn, discount: Vec<f64>, claim: Vec<f64> },
}

impl UtilitySpecJson {
    pub fn build(&self, space: &FiniteSpace) -> Result<UtilitySpec> {
        match self {
            UtilitySpecJson::Exponential { discount, claim, half_width, knots } => {
                if *knots < 2 || !(*half_width > 0.0) {
                    return Err(Error::Scenario("exponential utility needs half_width > 0 and knots ≥ 2".into()));
                }
                UtilitySpec::exponential(space, discount.clone(), claim.clone(), *half_width, *knots)
            }
            UtilitySpecJson::Mirrored { mirrored_utility, discount, claim } => {
                UtilitySpec::new(space, mirrored_utility.clone(), discount.clone(), claim.clone())
            }
        }
    }
}

/// Tolerances, grids and seeds; every field has a default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub radius: f64,
    pub max_restarts: usize,
    pub grid_radius: f64,
    pub grid_level: usize,
    pub truncation: usize,
    pub seed: u64,
    pub battery_samples: usize,
    pub battery_grid_level: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let s = SolverConfig::default();
        let g = GridSpec::default();
        let b = BatteryConfig::default();
        SolverSettings {
            tol: s.tol,
            max_iter: s.max_iter,
            radius: s.radius,
            max_restarts: s.max_restarts,
            grid_radius: g.radius,
            grid_level: g.level,
            truncation: 10_000,
            seed: 0,
            battery_samples: b.samples,
            battery_grid_level: b.grid_level,
        }
    }
}

impl SolverSettings {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tol: self.tol, max_iter: self.max_iter, radius: self.radius, max_restarts: self.max_restarts }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec { radius: self.grid_radius, level: self.grid_level }
    }

    pub fn battery(&self) -> BatteryConfig {
        BatteryConfig {
            seed: self.seed,
            samples: self.battery_samples,
            grid_level: self.battery_grid_level,
            ..BatteryConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.tol.is_finite()
            && self.max_iter > 0
            && self.radius > 0.0
            && self.radius.is_finite()
            && self.grid_radius > 0.0
            && self.grid_radius.is_finite()
            && (1..=12).contains(&self.grid_level)
            && self.truncation >= 2
            && self.battery_grid_level >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Scenario(
                "solver settings need positive tolerances and radii, grid_level in 1..=12, truncation ≥ 2".into(),
            ))
        }
    }
}

/// Inputs of the `counterexample` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleSpec {
    /// Singular masses to tabulate.
    pub masses: Vec<f64>,
    /// Truncation levels of the stability sweep.
    pub truncations: Vec<usize>,
    /// Extra named sequences for the membership table.
    pub sequences: Vec<NamedSequence>,
    /// Include the built-in rule corpus.
    pub include_corpus: bool,
}

impl Default for CounterexampleSpec {
    fn default() -> Self {
        CounterexampleSpec {
            masses: vec![0.5, 1.0, 2.0, 5.0, 10.0, 50.0],
            truncations: vec![100, 1000, 10_000],
            sequences: vec![],
            include_corpus: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSequence {
    pub name: String,
    pub sequence: BoundedSequence,
}

/// A validated scenario with its mathematical objects built.
#[derive(Clone, Debug)]
pub struct Problem {
    pub space: FiniteSpace,
    pub integrand: Integrand,
    pub penalty: Penalty,
    pub cone: Option<ConeSpec>,
    pub utility: Option<UtilitySpec>,
    pub points: Vec<Vec<f64>>,
    pub etas: Vec<Vec<f64>>,
    pub settings: SolverSettings,
    pub counterexample: CounterexampleSpec,
}

impl Scenario {
    /// Parses and validates; every failure is a schema violation.
    pub fn parse(text: &str) -> Result<Scenario> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Scenario(format!("invalid JSON: {e}")))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(Error::Scenario(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
            None => return Err(Error::Scenario("missing integer field schema_version".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn build(&self) -> Result<Problem> {
        let missing = |field: &str| Error::Scenario(format!("missing field {field}"));
        let space = FiniteSpace::new(self.space.as_ref().ok_or_else(|| missing("space"))?.weights.clone())?;
        let sections = match self.integrand.as_ref().ok_or_else(|| missing("integrand"))? {
            IntegrandSpec::Uniform(s) => vec![s.build()?; space.len()],
            IntegrandSpec::Sections(list) => list.iter().map(SectionSpec::build).collect::<Result<Vec<_>>>()?,
        };
        let integrand = Integrand::new(&space, sections)?;
        let penalty = self.penalty.as_ref().ok_or_else(|| missing("penalty"))?.build(&space)?;
        if let Some(c) = &self.cone {
            c.generators(&space)?;
        }
        let utility = self.utility.as_ref().map(|u| u.build(&space)).transpose()?;
        for x in self.points.iter().chain(&self.etas) {
            space.check_len(x.len())?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Scenario("points and etas must be finite".into()));
            }
        }
        self.solver.validate()?;
        let counterexample = self.counterexample_spec()?;
        Ok(Problem {
            space,
            integrand,
            penalty,
            cone: self.cone.clone(),
            utility,
            points: self.points.clone(),
            etas: self.etas.clone(),
            settings: self.solver,
            counterexample,
        })
    }
}

impl Scenario {
    /// The `counterexample` inputs alone; the other sections may be absent.
    pub fn counterexample_spec(&self) -> Result<CounterexampleSpec> {
        self.solver.validate()?;
        let spec = self.counterexample.clone().unwrap_or_default();
        for s in &spec.sequences {
            s.sequence.validate().map_err(|e| Error::Scenario(format!("sequence {}: {e}", s.name)))?;
            if !s.sequence.is_bounded() {
                return Err(Error::Scenario(format!("sequence {} is not bounded", s.name)));
            }
        }
        if spec.masses.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || spec.truncations.iter().any(|n| *n < 2) {
            return Err(Error::Scenario("masses must be finite and nonnegative, truncations at least 2".into()));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "space": {"weights": [0.5, 0.5]},
        "integrand": {"uniform": {"family": "quadratic", "a": 0.5, "b": 0.0, "c": 0.0}},
        "penalty": {"kind": "entropic"}
    }"#;

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        let p = s.build().unwrap();
        assert_eq!(p.space.len(), 2);
        assert_eq!(p.settings, SolverSettings::default());
        assert!(p.cone.is_none() && p.utility.is_none());
    }

    #[test]
    fn penalty_variants_parse() {
        let d: PenaltySpec = serde_json::from_str(r#"{"kind": "dirac", "data": {"probabilities": [0.25, 0.75]}}"#).unwrap();
        let s = FiniteSpace::uniform(2).unwrap();
        match d.build(&s).unwrap() {
            Penalty::Dirac(q) => assert_eq!(q.values(), &[0.5, 1.5]),
            _ => panic!(),
        }
        let r: PenaltySpec = serde_json::from_str(r#"{"kind": "dirac", "data": {}}"#).unwrap();
        assert!(matches!(r.build(&s).unwrap(), Penalty::Dirac(_)));
        let p: PenaltySpec =
            serde_json::from_str(r#"{"kind": "polyhedral", "data": {"vertices": [[0.5, 0.5], [0.9, 0.1]]}}"#).unwrap();
        assert!(matches!(p.build(&s).unwrap(), Penalty::Polyhedral(_)));
    }

    #[test]
    fn schema_violations_are_rejected() {
        assert!(Scenario::parse("{").is_err());
        assert!(Scenario::parse(&MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2")).is_err());
        assert!(Scenario::parse(&MINIMAL.replace("\"space\"", "\"spaces\"")).is_err());
        let bad_dim = MINIMAL.replace("\"penalty\": {\"kind\": \"entropic\"}", "\"penalty\": {\"kind\": \"entropic\"}, \"points\": [[1.0]]");
        assert!(Scenario::parse(&bad_dim).unwrap().build().is_err());
    }

    #[test]
    fn explicit_plq_section() {
        let text = MINIMAL.replace(
            "{\"family\": \"quadratic\", \"a\": 0.5, \"b\": 0.0, \"c\": 0.0}",
            r#"{"family": "plq", "function": {"breakpoints": [0.0], "pieces": [{"a": 0, "b": -1, "c": 0}, {"a": 0, "b": 2, "c": 0}], "domain": {"lo": "-inf", "hi": "inf"}}}"#,
        );
        let p = Scenario::parse(&text).unwrap().build().unwrap();
        assert_eq!(p.integrand.sections()[0].eval_f64(-3.0), 3.0);
    }
}
