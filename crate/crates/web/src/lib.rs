//! Browser bindings. Each operation runs a catalogue scenario with a few
//! overrides and hands the result back as a JSON string, so the page only
//! needs `JSON.parse`.

use oscnl::scenarios::{run_scenario, Dataset, ScenarioConfig, TableData};
use oscnl::Error;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

// Keeps a slider drag from locking the tab.
const MAX_POINTS: usize = 4001;
const MAX_RESOLUTION: usize = 201;

fn run(scenario: &str, overrides: &[String]) -> Result<Dataset, Error> {
    let mut cfg = ScenarioConfig::new(scenario);
    for o in overrides {
        cfg.set(o)?;
    }
    run_scenario(&cfg)
}

fn check_count(what: &str, n: usize, max: usize) -> Result<(), Error> {
    if n < 2 || n > max {
        return Err(Error::Config(format!("{what} must be in 2..={max}, got {n}")));
    }
    Ok(())
}

fn column_with_prefix<'a>(d: &'a Dataset, table: &str, prefix: &str) -> Result<&'a [f64], Error> {
    let t = d.table(table).ok_or_else(|| Error::Schema(format!("missing table `{table}`")))?;
    let name = t
        .column_names()
        .into_iter()
        .find(|n| n.starts_with(prefix))
        .ok_or_else(|| Error::Schema(format!("missing column `{prefix}*`")))?;
    Ok(t.column(name).unwrap_or_default())
}

/// Negativity between the two oscillators for one pair scenario at one beta/kappa.
pub fn negativity_series(scenario: &str, beta: f64, t_end: f64, points: usize) -> Result<Value, Error> {
    check_count("points", points, MAX_POINTS)?;
    let d = run(
        scenario,
        &[format!("betas=[{beta:?}]"), format!("grid.t_end={t_end:?}"), format!("grid.points={points}")],
    )?;
    if d.table("negativity").is_none() {
        return Err(Error::Config(format!("`{scenario}` is not a negativity scenario")));
    }
    let t = column_with_prefix(&d, "negativity", "t")?;
    let n = column_with_prefix(&d, "negativity", "negativity_beta=")?;
    Ok(json!({ "scenario": scenario, "t": t, "negativity": n, "diagnostics": d.metadata.diagnostics }))
}

/// Mirror Wigner function from the closed-form state. `values` is row-major
/// with rows along the imaginary axis.
pub fn mirror_wigner(
    beta: f64,
    alpha_sq: f64,
    g: f64,
    zeta_t: f64,
    half_width: f64,
    resolution: usize,
) -> Result<Value, Error> {
    check_count("resolution", resolution, MAX_RESOLUTION)?;
    let d = run(
        "fig7",
        &[
            format!("betas=[{beta:?}]"),
            format!("alpha_sq={alpha_sq:?}"),
            format!("g={g:?}"),
            format!("zeta_t={zeta_t:?}"),
            format!("wigner.half_width={half_width:?}"),
            format!("wigner.resolution={resolution}"),
        ],
    )?;
    let table = d.tables.first().ok_or_else(|| Error::Schema("no Wigner table".into()))?;
    let TableData::Grid { re_axis, im_axis, values } = &table.data else {
        return Err(Error::Schema("Wigner table is not a grid".into()));
    };
    let rows: Vec<f64> = (0..values.nrows()).flat_map(|i| values.row(i).iter().copied().collect::<Vec<_>>()).collect();
    Ok(json!({
        "re": re_axis,
        "im": im_axis,
        "values": rows,
        "min": values.min(),
        "max": values.max(),
        "diagnostics": d.metadata.diagnostics,
    }))
}

/// Mirror quadrature variances over `[0, zeta_t_end]`.
pub fn mirror_variances(beta: f64, alpha_sq: f64, g: f64, zeta_t_end: f64, points: usize) -> Result<Value, Error> {
    check_count("points", points, MAX_POINTS)?;
    let d = run(
        "fig8",
        &[
            format!("betas=[{beta:?}]"),
            format!("alpha_sq={alpha_sq:?}"),
            format!("g={g:?}"),
            format!("grid.t_end={zeta_t_end:?}"),
            format!("grid.points={points}"),
        ],
    )?;
    let t = column_with_prefix(&d, "variances", "t")?;
    let q = column_with_prefix(&d, "variances", "var_q_beta=")?;
    let p = column_with_prefix(&d, "variances", "var_p_beta=")?;
    Ok(json!({ "t": t, "var_q": q, "var_p": p, "diagnostics": d.metadata.diagnostics }))
}

fn to_js(r: Result<Value, Error>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = negativitySeries)]
pub fn negativity_series_js(scenario: &str, beta: f64, t_end: f64, points: usize) -> Result<String, JsError> {
    to_js(negativity_series(scenario, beta, t_end, points))
}

#[wasm_bindgen(js_name = mirrorWigner)]
pub fn mirror_wigner_js(
    beta: f64,
    alpha_sq: f64,
    g: f64,
    zeta_t: f64,
    half_width: f64,
    resolution: usize,
) -> Result<String, JsError> {
    to_js(mirror_wigner(beta, alpha_sq, g, zeta_t, half_width, resolution))
}

#[wasm_bindgen(js_name = mirrorVariances)]
pub fn mirror_variances_js(beta: f64, alpha_sq: f64, g: f64, zeta_t_end: f64, points: usize) -> Result<String, JsError> {
    to_js(mirror_variances(beta, alpha_sq, g, zeta_t_end, points))
}

/// Scenario ids the negativity plot accepts.
#[wasm_bindgen(js_name = pairScenarios)]
pub fn pair_scenarios() -> Vec<String> {
    oscnl::scenarios::list_scenarios()
        .into_iter()
        .filter(|s| s.family == oscnl::scenarios::Family::Pair)
        .map(|s| s.id.to_string())
        .collect()
}
