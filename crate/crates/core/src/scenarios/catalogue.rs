//! Named scenarios and their default parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use toml::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioId {
    Fig1a,
    Fig1b,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
    Fig6a,
    Fig6b,
    Fig7,
    Fig8,
    Coil,
    Custom,
}

/// What a scenario computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Negativity between the two anharmonic oscillators over time.
    Pair,
    /// Wigner function of the mirror at one instant.
    MirrorWigner,
    /// Mirror quadrature variances over time.
    MirrorVariance,
    Coil,
}

const ALL: [ScenarioId; 16] = [
    ScenarioId::Fig1a,
    ScenarioId::Fig1b,
    ScenarioId::Fig2a,
    ScenarioId::Fig2b,
    ScenarioId::Fig3a,
    ScenarioId::Fig3b,
    ScenarioId::Fig4a,
    ScenarioId::Fig4b,
    ScenarioId::Fig5a,
    ScenarioId::Fig5b,
    ScenarioId::Fig6a,
    ScenarioId::Fig6b,
    ScenarioId::Fig7,
    ScenarioId::Fig8,
    ScenarioId::Coil,
    ScenarioId::Custom,
];

impl ScenarioId {
    pub fn all() -> &'static [ScenarioId] {
        &ALL
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::Fig1a => "fig1a",
            ScenarioId::Fig1b => "fig1b",
            ScenarioId::Fig2a => "fig2a",
            ScenarioId::Fig2b => "fig2b",
            ScenarioId::Fig3a => "fig3a",
            ScenarioId::Fig3b => "fig3b",
            ScenarioId::Fig4a => "fig4a",
            ScenarioId::Fig4b => "fig4b",
            ScenarioId::Fig5a => "fig5a",
            ScenarioId::Fig5b => "fig5b",
            ScenarioId::Fig6a => "fig6a",
            ScenarioId::Fig6b => "fig6b",
            ScenarioId::Fig7 => "fig7",
            ScenarioId::Fig8 => "fig8",
            ScenarioId::Coil => "coil",
            ScenarioId::Custom => "custom",
        }
    }

    pub fn family(self) -> Family {
        match self {
            ScenarioId::Fig7 => Family::MirrorWigner,
            ScenarioId::Fig8 => Family::MirrorVariance,
            ScenarioId::Coil => Family::Coil,
            _ => Family::Pair,
        }
    }

    /// One-line provenance.
    pub fn description(self) -> &'static str {
        match self {
            ScenarioId::Fig1a => "Fig. 1(a): negativity, unitary, start |100>, beta/kappa in {0, 0.5}",
            ScenarioId::Fig1b => "Fig. 1(b): negativity, unitary, start |001>, beta/kappa in {0, 0.5}",
            ScenarioId::Fig2a => "Fig. 2(a): negativity, unitary, two excitations, start |200>",
            ScenarioId::Fig2b => "Fig. 2(b): negativity, unitary, two excitations, start |110>",
            ScenarioId::Fig3a => "Fig. 3(a): negativity, unitary, three excitations, start |300>",
            ScenarioId::Fig3b => "Fig. 3(b): negativity, unitary, three excitations, start |111>",
            ScenarioId::Fig4a => "Fig. 4(a): log-negativity, thermal mixture of asymmetric starts, mean occupancy 0.1",
            ScenarioId::Fig4b => "Fig. 4(b): log-negativity, thermal mixture of symmetric starts, mean occupancy 0.1",
            ScenarioId::Fig5a => "Fig. 5(a): negativity with damping gamma_{a,b,c}/kappa = 0.1, start |100>",
            ScenarioId::Fig5b => "Fig. 5(b): negativity with damping gamma_{a,b,c}/kappa = 0.1, start |001>",
            ScenarioId::Fig6a => "Fig. 6(a): mediator-only damping gamma_c/kappa = 2, start |200>, entangled steady state",
            ScenarioId::Fig6b => "Fig. 6(b): mediator-only damping gamma_c/kappa = 2, start |110>, separable steady state",
            ScenarioId::Fig7 => "Fig. 7: mirror Wigner function, |alpha|^2 = 1, g/zeta = 0.01, zeta t = pi/4, beta/zeta in {1e-4, 0}",
            ScenarioId::Fig8 => "Fig. 8: mirror quadrature variances, |alpha|^2 = 5, g/zeta = 0.06, beta/zeta in {1e-4, 0}",
            ScenarioId::Coil => "Helmholtz-coil field, quartic coefficient and beta estimate",
            ScenarioId::Custom => "Mediated pair with free parameters; init may be a Fock label or a seeded random state",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL.iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}` (see `oscnl list`)")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioInfo {
    pub id: &'static str,
    pub family: Family,
    pub description: &'static str,
}

/// Catalogue in stable order.
pub fn list_scenarios() -> Vec<ScenarioInfo> {
    ALL.iter().map(|&id| ScenarioInfo { id: id.as_str(), family: id.family(), description: id.description() }).collect()
}

fn floats(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| Value::Float(v)).collect())
}

fn ints(values: &[i64]) -> Value {
    Value::Array(values.iter().map(|&v| Value::Integer(v)).collect())
}

fn pair_defaults(init: &str, gammas: [f64; 3], t_end: f64, points: i64) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    m.insert("betas".into(), floats(&[0.0, 0.5]));
    m.insert("kappa".into(), Value::Float(1.0));
    m.insert("gamma_a".into(), Value::Float(gammas[0]));
    m.insert("gamma_b".into(), Value::Float(gammas[1]));
    m.insert("gamma_c".into(), Value::Float(gammas[2]));
    m.insert("dims".into(), ints(&[4, 4, 2]));
    m.insert("init".into(), Value::String(init.into()));
    m.insert("thermal_mean".into(), Value::Float(0.1));
    m.insert("excitations".into(), Value::Integer(1));
    m.insert("grid.t_start".into(), Value::Float(0.0));
    m.insert("grid.t_end".into(), Value::Float(t_end));
    m.insert("grid.points".into(), Value::Integer(points));
    m.insert("solver.steps_per_unit".into(), Value::Float(0.0));
    m.insert("solver.halving_tolerance".into(), Value::Float(1e-9));
    m
}

fn mirror_defaults(g: f64, alpha_sq: f64, engine_dims: [i64; 2]) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    m.insert("betas".into(), floats(&[1e-4, 0.0]));
    m.insert("g".into(), Value::Float(g));
    m.insert("alpha_sq".into(), Value::Float(alpha_sq));
    m.insert("eta".into(), floats(&[0.0, 0.0]));
    m.insert("omega_k".into(), Value::Float(10.0));
    m.insert("engine".into(), Value::String("analytic".into()));
    m.insert("dims".into(), ints(&engine_dims));
    m
}

/// Every parameter a scenario accepts, with its default.
pub fn defaults_for(id: ScenarioId) -> BTreeMap<String, Value> {
    const UNITARY: (f64, i64) = (20.0, 401);
    const DAMPED: (f64, i64) = (50.0, 501);
    // Long enough for the steady-state probe to settle at beta/kappa = 0.5.
    const STEADY: (f64, i64) = (200.0, 2001);
    let none = [0.0; 3];
    let weak = [0.1; 3];
    let mediator = [0.0, 0.0, 2.0];
    match id {
        ScenarioId::Fig1a => pair_defaults("100", none, UNITARY.0, UNITARY.1),
        ScenarioId::Fig1b => pair_defaults("001", none, UNITARY.0, UNITARY.1),
        ScenarioId::Fig2a => pair_defaults("200", none, UNITARY.0, UNITARY.1),
        ScenarioId::Fig2b => pair_defaults("110", none, UNITARY.0, UNITARY.1),
        ScenarioId::Fig3a => pair_defaults("300", none, UNITARY.0, UNITARY.1),
        ScenarioId::Fig3b => pair_defaults("111", none, UNITARY.0, UNITARY.1),
        ScenarioId::Fig4a => pair_defaults("thermal_asymmetric", none, UNITARY.0, UNITARY.1),
        ScenarioId::Fig4b => pair_defaults("thermal_symmetric", none, UNITARY.0, UNITARY.1),
        ScenarioId::Fig5a => pair_defaults("100", weak, DAMPED.0, DAMPED.1),
        ScenarioId::Fig5b => pair_defaults("001", weak, DAMPED.0, DAMPED.1),
        ScenarioId::Fig6a => pair_defaults("200", mediator, STEADY.0, STEADY.1),
        ScenarioId::Fig6b => pair_defaults("110", mediator, STEADY.0, STEADY.1),
        ScenarioId::Custom => {
            let mut m = pair_defaults("random", none, UNITARY.0, UNITARY.1);
            m.insert("excitations".into(), Value::Integer(2));
            m
        }
        ScenarioId::Fig7 => {
            let mut m = mirror_defaults(0.01, 1.0, [16, 16]);
            m.insert("zeta_t".into(), Value::Float(std::f64::consts::FRAC_PI_4));
            m.insert("wigner.half_width".into(), Value::Float(3.0));
            m.insert("wigner.resolution".into(), Value::Integer(121));
            m
        }
        ScenarioId::Fig8 => {
            let mut m = mirror_defaults(0.06, 5.0, [28, 40]);
            m.insert("grid.t_start".into(), Value::Float(0.0));
            m.insert("grid.t_end".into(), Value::Float(4.0 * std::f64::consts::PI));
            m.insert("grid.points".into(), Value::Integer(1601));
            m
        }
        ScenarioId::Coil => {
            let mut m = BTreeMap::new();
            m.insert("radius".into(), Value::Float(80e-9));
            m.insert("current".into(), Value::Float(1e-3));
            m.insert("n_turns".into(), Value::Integer(1));
            m.insert("n_mag".into(), Value::Float(1e6));
            m.insert("a0".into(), Value::Float(50e-12));
            m.insert("fit.lo".into(), Value::Float(1e-4));
            m.insert("fit.hi".into(), Value::Float(5e-3));
            m.insert("fit.samples".into(), Value::Integer(41));
            m
        }
    }
}
