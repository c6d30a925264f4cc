//! Run configuration: TOML with `[section] key = value`, every key checked.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::problems::ProblemFamily;
use crate::profiles::ExtensionProfile;
use crate::propagators::{NyquistPolicy, SourceRule};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    pub solver: SolverSection,
    pub noise: Option<NoiseSection>,
    #[serde(default, rename = "snapshot")]
    pub snapshots: Vec<Snapshot>,
    pub convergence: Option<ConvergenceSection>,
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub family: ProblemFamily,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Number of grid intervals (periodic: nodes).
    pub m: usize,
    #[serde(default = "one")]
    pub horizon: f64,
    /// u_T(x) for the backward families.
    pub terminal: Option<String>,
    /// v_0(x) for convection, or u_0(x) when the terminal data is generated
    /// by a forward solve.
    pub initial: Option<String>,
    /// Whitespace-separated `x re [im]` samples replacing `terminal`.
    pub data_file: Option<String>,
    #[serde(default)]
    pub data_from_forward: bool,
    pub forward_dt: Option<f64>,
    /// Closed-form reference u(t, x).
    pub exact: Option<String>,
    #[serde(default)]
    pub reference: Reference,
    /// a(x) for the variable-coefficient family.
    pub coefficient: Option<String>,
    /// f(t, x) for convection.
    pub source: Option<String>,
    pub n_max: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    #[default]
    Expression,
    /// Forward Crank–Nicolson solve from `initial`.
    Forward,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Half-width πL of the p domain.
    pub pi_l: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EtaChoice {
    Value(f64),
    Keyword(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default = "auto")]
    pub eta_max: EtaChoice,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub s: f64,
    /// Fixed δ(η_max); with `eta_max = "auto"` gives η = (δ/ε)^{1/s}.
    pub delta: Option<f64>,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self { eta_max: auto(), epsilon: default_epsilon(), s: 1.0, delta: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorKind {
    Exact,
    Cn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryChoice {
    Point,
    Integrate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NyquistChoice {
    OneSided,
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceChoice {
    Trapezoid,
    Exponential,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_profile")]
    pub profile: String,
    pub propagator: PropagatorKind,
    pub dt: Option<f64>,
    #[serde(default = "default_nyquist")]
    pub nyquist: NyquistChoice,
    #[serde(default = "default_source")]
    pub source_rule: SourceChoice,
    #[serde(default = "default_recovery")]
    pub recovery: RecoveryChoice,
    pub p_diamond: Option<f64>,
    pub window: f64,
    #[serde(default)]
    pub relaxed_pl: bool,
    #[serde(default = "default_guard")]
    pub unitarity_guard: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub zeta0: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub t: f64,
    pub eta_max: Option<f64>,
    pub p_diamond: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub levels: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub zeta0: Vec<f64>,
    pub eta_max: Vec<f64>,
}

/// Embedded presets, one per experiment.
pub const PRESETS: &[(&str, &str)] = &[
    ("table1", include_str!("../presets/table1.toml")),
    ("table2", include_str!("../presets/table2.toml")),
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("varcoeff", include_str!("../presets/varcoeff.toml")),
];

const ALIASES: &[(&str, &str)] = &[("tent", "fig3"), ("noise", "fig4"), ("convection", "fig5")];

pub fn preset_source(name: &str) -> Option<&'static str> {
    let name = ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, n)| *n);
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

fn one() -> f64 {
    1.0
}
fn auto() -> EtaChoice {
    EtaChoice::Keyword("auto".into())
}
fn default_epsilon() -> f64 {
    1e-3
}
fn default_profile() -> String {
    "hermite:1".into()
}
fn default_nyquist() -> NyquistChoice {
    NyquistChoice::Symmetric
}
fn default_source() -> SourceChoice {
    SourceChoice::Exponential
}
fn default_recovery() -> RecoveryChoice {
    RecoveryChoice::Integrate
}
fn default_guard() -> f64 {
    1e-8
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| cfg_err(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let src = preset_source(name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            cfg_err(format!("unknown preset {name:?}; available: {}", names.join(", ")))
        })?;
        Self::from_toml_str(src).map_err(|e| cfg_err(format!("preset {name}: {e}")))
    }

    pub fn profile(&self) -> Result<ExtensionProfile> {
        self.solver.profile.parse().map_err(|e: Error| cfg_err(format!("solver.profile: {e}")))
    }

    pub fn nyquist(&self) -> NyquistPolicy {
        match self.solver.nyquist {
            NyquistChoice::OneSided => NyquistPolicy::OneSided,
            NyquistChoice::Symmetric => NyquistPolicy::Symmetric,
        }
    }

    pub fn source_rule(&self) -> SourceRule {
        match self.solver.source_rule {
            SourceChoice::Trapezoid => SourceRule::Trapezoid,
            SourceChoice::Exponential => SourceRule::Exponential,
        }
    }

    pub fn expr(&self, key: &str, value: &Option<String>) -> Result<Option<Expr>> {
        value
            .as_deref()
            .map(|s| Expr::parse(s).map_err(|e| cfg_err(format!("problem.{key}: {e}"))))
            .transpose()
    }

    /// Snapshot list, defaulting to a single recovery at t = 0 (backward) or
    /// t = T (convection).
    pub fn snapshot_list(&self) -> Vec<Snapshot> {
        if !self.snapshots.is_empty() {
            return self.snapshots.clone();
        }
        let t = if self.problem.family.is_backward() { 0.0 } else { self.problem.horizon };
        vec![Snapshot { t, eta_max: None, p_diamond: None }]
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        let pow2 = |v: usize| v >= 2 && v.is_power_of_two();
        if !pow2(p.m) {
            return Err(cfg_err(format!("problem.m must be a power of two >= 2, got {}", p.m)));
        }
        if !pow2(self.grid.n) {
            return Err(cfg_err(format!("grid.n must be a power of two >= 2, got {}", self.grid.n)));
        }
        if !(p.x_hi > p.x_lo) {
            return Err(cfg_err("problem.x_hi must exceed problem.x_lo"));
        }
        if !(p.horizon > 0.0) {
            return Err(cfg_err("problem.horizon must be positive"));
        }
        if !(self.grid.pi_l > 0.0) {
            return Err(cfg_err("grid.pi_l must be positive"));
        }
        if !(self.solver.window > 0.0) {
            return Err(cfg_err("solver.window must be positive"));
        }
        self.profile()?;
        for (k, v) in [("terminal", &p.terminal), ("initial", &p.initial), ("exact", &p.exact), ("coefficient", &p.coefficient), ("source", &p.source)] {
            self.expr(k, v)?;
        }
        let needs_dt = self.solver.propagator == PropagatorKind::Cn || p.source.is_some();
        if needs_dt && !self.solver.dt.is_some_and(|d| d > 0.0) {
            return Err(cfg_err("solver.dt must be set and positive for this propagator"));
        }
        match p.family {
            ProblemFamily::Convection => {
                if p.initial.is_none() {
                    return Err(cfg_err("convection needs problem.initial"));
                }
            }
            _ => {
                let sources = [p.terminal.is_some(), p.data_file.is_some(), p.data_from_forward].iter().filter(|b| **b).count();
                if sources != 1 {
                    return Err(cfg_err("give exactly one of problem.terminal, problem.data_file, problem.data_from_forward"));
                }
            }
        }
        let forward_needed = p.data_from_forward || p.reference == Reference::Forward;
        if forward_needed {
            if p.initial.is_none() || !p.forward_dt.is_some_and(|d| d > 0.0) {
                return Err(cfg_err("forward data needs problem.initial and a positive problem.forward_dt"));
            }
            if p.family != ProblemFamily::HeatFd {
                return Err(cfg_err("forward data is only available for the heat-fd family"));
            }
        }
        if p.reference == Reference::Expression && p.exact.is_none() {
            return Err(cfg_err("problem.exact is required unless reference = \"forward\""));
        }
        if p.family == ProblemFamily::VariableCoeff && p.coefficient.is_none() {
            return Err(cfg_err("variable-coeff needs problem.coefficient"));
        }
        if p.family != ProblemFamily::Convection && p.source.is_some() {
            return Err(cfg_err("problem.source is only supported for convection"));
        }
        if let EtaChoice::Keyword(k) = &self.truncation.eta_max {
            if k != "auto" {
                return Err(cfg_err(format!("truncation.eta_max must be a number or \"auto\", got {k:?}")));
            }
        }
        if let EtaChoice::Value(v) = self.truncation.eta_max {
            if !(v > 0.0) {
                return Err(cfg_err("truncation.eta_max must be positive"));
            }
        }
        if !(self.truncation.epsilon > 0.0) || !(self.truncation.s > 0.0) {
            return Err(cfg_err("truncation.epsilon and truncation.s must be positive"));
        }
        if let Some(n) = &self.noise {
            if !(n.zeta0 >= 0.0) {
                return Err(cfg_err("noise.zeta0 must be non-negative"));
            }
        }
        for s in &self.snapshots {
            if !(0.0..=p.horizon).contains(&s.t) {
                return Err(cfg_err(format!("snapshot t = {} outside [0, {}]", s.t, p.horizon)));
            }
        }
        if let Some(c) = &self.convergence {
            if c.levels < 2 {
                return Err(cfg_err("convergence.levels must be at least 2"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.zeta0.len() != s.eta_max.len() || s.zeta0.is_empty() {
                return Err(cfg_err("sweep.zeta0 and sweep.eta_max must be non-empty and of equal length"));
            }
        }
        if !(self.solver.unitarity_guard > 0.0) {
            return Err(cfg_err("solver.unitarity_guard must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[problem]
family = "heat-fd"
x_lo = 0.0
x_hi = 2.0
m = 32
terminal = "exp(-pi^2/4)*sin(pi*x/2)"
exact = "exp(-pi^2*t/4)*sin(pi*x/2)"

[grid]
pi_l = 10.0
n = 128

[solver]
propagator = "cn"
dt = 0.00390625
window = 7.0
p_diamond = 3.0
"#;

    #[test]
    fn parses_base() {
        let c = RunConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.problem.family, ProblemFamily::HeatFd);
        assert_eq!(c.truncation.eta_max, EtaChoice::Keyword("auto".into()));
        assert_eq!(c.nyquist(), NyquistPolicy::Symmetric);
        assert_eq!(c.snapshot_list()[0].t, 0.0);
    }

    #[test]
    fn rejects_unknown_keys_with_location() {
        let bad = BASE.replace("window = 7.0", "window = 7.0\nwindwo = 1.0");
        let e = RunConfig::from_toml_str(&bad).unwrap_err().to_string();
        assert!(e.contains("windwo") && e.contains("line"), "{e}");
        let bad = format!("{BASE}\n[extra]\nx = 1\n");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn presets_parse() {
        for (name, _) in PRESETS {
            RunConfig::preset(name).unwrap();
        }
        assert!(RunConfig::preset("tent").is_ok());
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn rejects_physical_violations() {
        for (from, to) in [
            ("m = 32", "m = 30"),
            ("n = 128", "n = 100"),
            ("dt = 0.00390625", "dt = -1.0"),
            ("terminal = \"exp(-pi^2/4)*sin(pi*x/2)\"", "terminal = \"sin(\""),
            ("x_hi = 2.0", "x_hi = -1.0"),
        ] {
            let bad = BASE.replace(from, to);
            assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))), "{to}");
        }
    }
}
