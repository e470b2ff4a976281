//! Scenario files: a sectioned key-value (TOML) schema describing one
//! closed-loop simulation. Unknown keys are rejected; optional sections
//! fall back to the documented defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::constraints::{instantaneously_feasible, ConstraintConfig};
use crate::controller::{
    min_weights, ConvexProjection, LoopConfig, SaturationMode, TargetState, Weights, WEIGHT_FLOOR,
};
use crate::dynamics::BodyParams;
use crate::elements::OrbitalElements;
use crate::governor::GovernorConfig;
use crate::propagate::IntegratorOptions;

pub const DEFAULT_LOG_PERIOD_S: f64 = 60.0;
pub const DEFAULT_RESET_PERIOD_S: f64 = 360.0;
pub const DEFAULT_UPDATE_PERIOD_S: f64 = 360.0;
pub const DEFAULT_BISECTION_ITERS: u32 = 10;
pub const DEFAULT_DELTA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid scenario: {field}: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { field: field.to_string(), message: message.into() }
}

/// Serializable saturation descriptor; the callable mode is built per run.
#[derive(Debug, Clone, PartialEq)]
pub enum SaturationSpec {
    TwoNormBall,
    InfNormBox { bounds: [f64; 3] },
    ProjectionBall,
    ProjectionBox { bounds: [f64; 3] },
}

impl SaturationSpec {
    pub fn build(&self, u_max: f64) -> SaturationMode {
        match self {
            SaturationSpec::TwoNormBall => SaturationMode::TwoNormBall { u_max },
            SaturationSpec::InfNormBox { bounds } => SaturationMode::InfNormBox { bounds: *bounds },
            SaturationSpec::ProjectionBall => {
                SaturationMode::ConvexProjection(ConvexProjection::two_norm_ball(u_max))
            }
            SaturationSpec::ProjectionBox { bounds } => {
                SaturationMode::ConvexProjection(ConvexProjection::axis_box(*bounds))
            }
        }
    }
}

/// A fully validated simulation scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub body: BodyParams,
    pub x0: OrbitalElements,
    /// Initial true anomaly, rad.
    pub theta0: f64,
    pub x_des: OrbitalElements,
    pub p_diag: [f64; 5],
    /// Explicit barrier weights; `None` sizes them from the enforcement
    /// bound evaluated at the initial state.
    pub q_weights: Option<(f64, f64)>,
    pub reset_enabled: bool,
    pub reset_period_s: f64,
    pub constraints: ConstraintConfig,
    pub saturation: SaturationSpec,
    pub governor: Option<GovernorConfig>,
    pub t_final_s: f64,
    pub log_period_s: f64,
    pub integ: IntegratorOptions,
}

impl ScenarioConfig {
    /// Initial barrier weights: explicit values, or the enforcement bound
    /// at the initial state, floored to stay positive.
    pub fn initial_weights(&self) -> Weights {
        let (q1, q2) = match self.q_weights {
            Some(q) => q,
            None => {
                let w = Weights::new(self.p_diag, 1.0, 1.0);
                let v0 = crate::controller::lyapunov_quadratic(&self.x0, &self.x_des, &w);
                min_weights(v0, &self.constraints)
            }
        };
        Weights::new(self.p_diag, q1.max(WEIGHT_FLOOR), q2.max(WEIGHT_FLOOR))
    }

    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            body: self.body,
            constraints: self.constraints,
            weights: self.initial_weights(),
            saturation: self.saturation.build(self.constraints.u_max),
            integ: self.integ,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !self.body.mu.is_finite() || self.body.mu <= 0.0 {
            return Err(invalid("body.mu", "must be positive"));
        }
        if let Err(field) = self.x0.validate() {
            return Err(invalid(&format!("initial.{field}"), "violates element invariants"));
        }
        if !self.theta0.is_finite() {
            return Err(invalid("initial.theta", "must be finite"));
        }
        if let Err(field) = self.x_des.validate() {
            return Err(invalid(&format!("target.{field}"), "violates element invariants"));
        }
        if let Err(field) = self.constraints.validate() {
            return Err(invalid(&format!("constraints.{field}"), "violates constraint invariants"));
        }
        if self.p_diag.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(invalid("weights.p_diag", "entries must be positive"));
        }
        if let Some((q1, q2)) = self.q_weights {
            if !q1.is_finite() || q1 <= 0.0 {
                return Err(invalid("weights.q1", "must be positive"));
            }
            if !q2.is_finite() || q2 <= 0.0 {
                return Err(invalid("weights.q2", "must be positive"));
            }
        }
        if !self.reset_period_s.is_finite() || self.reset_period_s <= 0.0 {
            return Err(invalid("weights.reset_period_s", "must be positive"));
        }
        if let SaturationSpec::InfNormBox { bounds } | SaturationSpec::ProjectionBox { bounds } =
            &self.saturation
        {
            if bounds.iter().any(|b| !b.is_finite() || *b <= 0.0) {
                return Err(invalid("saturation.bounds", "must be positive"));
            }
        }
        if let Some(gov) = &self.governor {
            if let Err(field) = gov.validate() {
                return Err(invalid(&format!("governor.{field}"), "violates governor invariants"));
            }
        }
        if !self.t_final_s.is_finite() || self.t_final_s <= 0.0 {
            return Err(invalid("integration.t_final_s", "must be positive"));
        }
        if !self.log_period_s.is_finite() || self.log_period_s <= 0.0 {
            return Err(invalid("integration.log_period_s", "must be positive"));
        }
        if !self.integ.rel_tol.is_finite() || self.integ.rel_tol <= 0.0 {
            return Err(invalid("integration.rel_tol", "must be positive"));
        }
        if !self.integ.abs_tol.is_finite() || self.integ.abs_tol <= 0.0 {
            return Err(invalid("integration.abs_tol", "must be positive"));
        }
        if !instantaneously_feasible(&self.x0, &self.constraints) {
            return Err(invalid("initial", "state is not instantaneously feasible"));
        }
        if TargetState::new(self.x_des, &self.constraints).is_err() {
            return Err(invalid("target", "orbit must clear both constraint margins"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Raw file schema.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    body: Option<BodySection>,
    initial: InitialSection,
    target: TargetSection,
    weights: WeightsSection,
    constraints: ConstraintConfig,
    saturation: Option<SaturationSection>,
    governor: Option<GovernorSection>,
    integration: IntegrationSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodySection {
    mu: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    a: f64,
    e: f64,
    inc: f64,
    raan: f64,
    argp: f64,
    theta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSection {
    a: f64,
    e: f64,
    inc: f64,
    raan: f64,
    argp: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsSection {
    p_diag: [f64; 5],
    q1: Option<f64>,
    q2: Option<f64>,
    reset_enabled: Option<bool>,
    reset_period_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SaturationSection {
    mode: String,
    bounds: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GovernorSection {
    t_hor_s: f64,
    update_period_s: Option<f64>,
    bisection_iters: Option<u32>,
    delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegrationSection {
    t_final_s: f64,
    log_period_s: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let raw: ScenarioFile = toml::from_str(&text)
        .map_err(|source| ScenarioError::Parse { path: path.to_path_buf(), source: Box::new(source) })?;

    let q_weights = match (raw.weights.q1, raw.weights.q2) {
        (Some(q1), Some(q2)) => Some((q1, q2)),
        (None, None) => None,
        _ => {
            return Err(invalid("weights", "q1 and q2 must be given together or both omitted"));
        }
    };

    let u_max = raw.constraints.u_max;
    let saturation = match raw.saturation {
        None => SaturationSpec::TwoNormBall,
        Some(sat) => {
            let bounds = sat.bounds.unwrap_or([u_max; 3]);
            match sat.mode.as_str() {
                "two-norm-ball" => SaturationSpec::TwoNormBall,
                "inf-norm-box" => SaturationSpec::InfNormBox { bounds },
                "projection-ball" => SaturationSpec::ProjectionBall,
                "projection-box" => SaturationSpec::ProjectionBox { bounds },
                other => {
                    return Err(invalid(
                        "saturation.mode",
                        format!(
                            "unknown mode {other:?} (expected two-norm-ball, inf-norm-box, \
                             projection-ball, or projection-box)"
                        ),
                    ));
                }
            }
        }
    };

    let cfg = ScenarioConfig {
        body: raw.body.map(|b| BodyParams { mu: b.mu }).unwrap_or(BodyParams::EARTH),
        x0: OrbitalElements::new(
            raw.initial.a,
            raw.initial.e,
            raw.initial.inc,
            raw.initial.raan,
            raw.initial.argp,
        ),
        theta0: raw.initial.theta,
        x_des: OrbitalElements::new(
            raw.target.a,
            raw.target.e,
            raw.target.inc,
            raw.target.raan,
            raw.target.argp,
        ),
        p_diag: raw.weights.p_diag,
        q_weights,
        reset_enabled: raw.weights.reset_enabled.unwrap_or(true),
        reset_period_s: raw.weights.reset_period_s.unwrap_or(DEFAULT_RESET_PERIOD_S),
        constraints: raw.constraints,
        saturation,
        governor: raw.governor.map(|g| GovernorConfig {
            t_hor_s: g.t_hor_s,
            update_period_s: g.update_period_s.unwrap_or(DEFAULT_UPDATE_PERIOD_S),
            bisection_iters: g.bisection_iters.unwrap_or(DEFAULT_BISECTION_ITERS),
            delta: g.delta.unwrap_or(DEFAULT_DELTA),
        }),
        t_final_s: raw.integration.t_final_s,
        log_period_s: raw.integration.log_period_s.unwrap_or(DEFAULT_LOG_PERIOD_S),
        integ: IntegratorOptions {
            rel_tol: raw.integration.rel_tol.unwrap_or(1e-9),
            abs_tol: raw.integration.abs_tol.unwrap_or(1e-9),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> PathBuf {
        use std::sync::atomic::{AtomicU32, Ordering};
        static COUNTER: AtomicU32 = AtomicU32::new(0);
        let mut path = std::env::temp_dir();
        path.push(format!(
            "gve-scenario-{}-{}.toml",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    const MINIMAL: &str = r#"
[initial]
a = 21378.0
e = 0.65
inc = 0.3141592653589793
raan = 0.0
argp = 3.141592653589793
theta = 3.141592653589793

[target]
a = 6878.0
e = 0.02
inc = 1.5707963267948966
raan = 4.71238898038469
argp = 3.141592653589793

[weights]
p_diag = [5e-11, 0.01, 0.005, 0.0075, 5e-4]

[constraints]
r_min = 6628.0
e_min = 1e-3
u_max = 1e-3
eps1 = 25.0
eps2 = 5e-4

[integration]
t_final_s = 144000.0
"#;

    #[test]
    fn minimal_scenario_takes_defaults() {
        let path = write_temp(MINIMAL);
        let cfg = load_scenario(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(cfg.body.mu, 398600.4418);
        assert!(cfg.governor.is_none());
        assert_eq!(cfg.log_period_s, DEFAULT_LOG_PERIOD_S);
        assert_eq!(cfg.saturation, SaturationSpec::TwoNormBall);
        assert!(cfg.reset_enabled);
        assert!(cfg.q_weights.is_none());
        let w = cfg.initial_weights();
        assert!((w.q1 - 3.0228281246280706e-4).abs() < 1e-15);
        assert!((w.q2 - 755707.0311570177).abs() < 1e-6);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let path = write_temp(&format!("{MINIMAL}\n[extra]\nfoo = 1.0\n"));
        let err = load_scenario(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, ScenarioError::Parse { .. }));
    }

    #[test]
    fn negative_e_min_names_the_field() {
        let bad = MINIMAL.replace("e_min = 1e-3", "e_min = -1e-3");
        let path = write_temp(&bad);
        let err = load_scenario(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        match err {
            ScenarioError::Validation { field, .. } => assert_eq!(field, "constraints.e_min"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn infeasible_initial_state_is_rejected() {
        let bad = MINIMAL.replace("a = 21378.0", "a = 6000.0");
        let path = write_temp(&bad);
        let err = load_scenario(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, ScenarioError::Validation { .. }));
    }
}
