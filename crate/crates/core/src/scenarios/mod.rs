//! Config-driven scenario runner with persisted datasets.
//!
//! Each scenario resolves its parameters (defaults plus overrides), runs one
//! computation per nonlinearity value and returns a [`Dataset`]. Output is a
//! pure function of the resolved parameters and the seed.

mod catalogue;
mod config;
mod dataset;

pub use catalogue::{defaults_for, list_scenarios, Family, ScenarioId, ScenarioInfo};
pub use config::{ResolvedParams, ScenarioConfig};
pub use dataset::{
    compare_datasets, ColumnDifference, CompareReport, Dataset, Metadata, Table, TableData, TableEntry, TableKind,
    METADATA_FILE,
};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::analytic::{coherent_product, mirror_reduced_density, MirrorJointState};
use crate::coil::{self, CoilParams};
use crate::dynamics::{self, LindbladOptions, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{
    boltzmann_weights, fock_state, mode_number, partial_trace_pure, thermal_mixture, CompositeSpace, DensityMatrix,
    StateVector, COHERENT_TAIL_TOLERANCE,
};
use crate::linalg::{c, CVector, C64};
use crate::models::{self, Frame, OptomechParams, TripartiteParams};
use crate::quantify::{self, Bipartition, WignerGrid};

type Diagnostics = BTreeMap<String, serde_json::Value>;

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Results keep the input order.
fn map_items<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

fn beta_label(prefix: &str, beta: f64) -> String {
    format!("{prefix}_beta={beta}")
}

// Browsers have no system clock behind std.
#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
fn now_unix() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
fn now_unix() -> u64 {
    0
}

/// Runs a scenario. The returned metadata carries a wall-clock timestamp; the
/// tables do not.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Dataset> {
    let params = cfg.resolve()?;
    let id = params.id;
    let (tables, diagnostics) = match id.family() {
        Family::Pair => run_pair(&params)?,
        Family::MirrorWigner => run_mirror_wigner(&params)?,
        Family::MirrorVariance => run_mirror_variance(&params)?,
        Family::Coil => run_coil(&params)?,
    };
    let created_unix = now_unix();
    let metadata = Metadata {
        scenario: id.to_string(),
        description: id.description().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix,
        seed: params.seed,
        parameters: params.to_json(),
        tables: dataset::table_entries(&tables),
        diagnostics,
    };
    Ok(Dataset { metadata, tables })
}

fn time_grid(p: &ResolvedParams) -> Result<TimeGrid> {
    TimeGrid::new(p.f64("grid.t_start")?, p.f64("grid.t_end")?, p.usize("grid.points")?)
}

// ---------------------------------------------------------------------------
// Mediated pair (figs 1-6, custom)

fn pair_params(p: &ResolvedParams, beta: f64) -> Result<TripartiteParams> {
    let dims = p.usize_list("dims")?;
    let dims: [usize; 3] = dims
        .try_into()
        .map_err(|d: Vec<usize>| Error::Config(format!("`dims` needs three entries, got {}", d.len())))?;
    let tp = TripartiteParams {
        beta,
        kappa: p.f64("kappa")?,
        gamma_a: p.f64("gamma_a")?,
        gamma_b: p.f64("gamma_b")?,
        gamma_c: p.f64("gamma_c")?,
        dims,
        ..TripartiteParams::default()
    };
    tp.validate()?;
    Ok(tp)
}

/// Parses a three-digit Fock label such as `"110"`.
fn parse_fock_label(label: &str) -> Option<[usize; 3]> {
    let digits: Vec<usize> = label.chars().map(|ch| ch.to_digit(10).map(|d| d as usize)).collect::<Option<_>>()?;
    digits.try_into().ok()
}

/// Representatives of the excitation subspaces `N = 0, 1, 2` used for the
/// thermal starts: the vacuum, then either the asymmetric states `|100⟩, |200⟩`
/// or the symmetric states `|001⟩, |110⟩`.
fn thermal_representatives(symmetric: bool) -> [[usize; 3]; 3] {
    if symmetric {
        [[0, 0, 0], [0, 0, 1], [1, 1, 0]]
    } else {
        [[0, 0, 0], [1, 0, 0], [2, 0, 0]]
    }
}

/// Seeded random pure state inside the fixed-excitation subspace.
fn random_subspace_state(space: &CompositeSpace, excitations: usize, seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CVector::zeros(space.total_dim());
    let mut support = 0;
    for i in 0..space.total_dim() {
        if space.occupations(i).iter().sum::<usize>() == excitations {
            v[i] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            support += 1;
        }
    }
    if support == 0 {
        return Err(Error::Config(format!("no basis state holds {excitations} excitations at these dims")));
    }
    StateVector::normalized(space.clone(), v)
}

enum Initial {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl Initial {
    fn density(&self) -> DensityMatrix {
        match self {
            Initial::Pure(psi) => psi.to_density(),
            Initial::Mixed(rho) => rho.clone(),
        }
    }
}

fn initial_state(p: &ResolvedParams, space: &CompositeSpace) -> Result<Initial> {
    let init = p.str("init")?;
    match init {
        "thermal_asymmetric" | "thermal_symmetric" => {
            let reps = thermal_representatives(init == "thermal_symmetric");
            let weights = boltzmann_weights(reps.len(), p.f64("thermal_mean")?)?;
            let components = weights
                .into_iter()
                .zip(reps)
                .map(|(w, occ)| fock_state(space, &occ).map(|psi| (w, psi)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Initial::Mixed(thermal_mixture(&components)?))
        }
        "random" => Ok(Initial::Pure(random_subspace_state(space, p.usize("excitations")?, p.seed)?)),
        label => {
            let occ = parse_fock_label(label).ok_or_else(|| {
                Error::Config(format!(
                    "init `{label}` is not a three-digit Fock label, `random`, `thermal_asymmetric` or `thermal_symmetric`"
                ))
            })?;
            Ok(Initial::Pure(fock_state(space, &occ)?))
        }
    }
}

fn lindblad_options(p: &ResolvedParams) -> Result<LindbladOptions> {
    let spu = p.f64("solver.steps_per_unit")?;
    if spu < 0.0 {
        return Err(Error::Config("`solver.steps_per_unit` must be non-negative (0 selects automatically)".into()));
    }
    Ok(LindbladOptions {
        steps_per_unit: (spu > 0.0).then_some(spu),
        halving_tolerance: p.f64("solver.halving_tolerance")?,
        ..LindbladOptions::default()
    })
}

struct PairRun {
    negativity: Vec<f64>,
    log_negativity: Vec<f64>,
    diagnostics: Diagnostics,
}

fn max_deviation(values: &[f64], reference: f64) -> f64 {
    values.iter().map(|v| (v - reference).abs()).fold(0.0, f64::max)
}

fn run_pair_beta(p: &ResolvedParams, beta: f64, grid: &TimeGrid) -> Result<PairRun> {
    let tp = pair_params(p, beta)?;
    let space = tp.space()?;
    let h = models::build_tripartite_hamiltonian(&tp, Frame::Interaction)?;
    let dissipators = models::build_lindblad_ops(&tp)?;
    let init = initial_state(p, &space)?;
    let mut diagnostics = Diagnostics::new();

    let mut traj: Trajectory = if dissipators.is_empty() {
        match &init {
            Initial::Pure(psi) => dynamics::evolve_unitary(&h, psi, grid)?,
            Initial::Mixed(rho) => dynamics::evolve_unitary_mixed(&h, rho, grid)?,
        }
    } else {
        dynamics::evolve_lindblad_with(&h, &dissipators, &init.density(), grid, &lindblad_options(p)?)?
    };

    let ab = Bipartition::new(&["b"]);
    let negativity = traj.record("negativity", |rho| quantify::pair_negativity(rho, "a", "b"))?.to_vec();
    let log_negativity = if p.str("init")?.starts_with("thermal") {
        traj.record("log_negativity", |rho| quantify::log_negativity(&rho_ab(rho)?, &ab))?.to_vec()
    } else {
        Vec::new()
    };

    let total = mode_number(&space, "a")?.add(&mode_number(&space, "b")?)?.add(&mode_number(&space, "c")?)?;
    let excitations = traj.record("excitations", |rho| total.expectation(rho).map(|z| z.re))?.to_vec();
    let key = |name: &str| format!("{name}_beta={beta}");

    if dissipators.is_empty() {
        diagnostics.insert(key("excitation_drift"), json!(max_deviation(&excitations, excitations[0])));
        if let Some(norms) = traj.scalar("norm") {
            diagnostics.insert(key("norm_drift"), json!(max_deviation(norms, 1.0)));
        }
    } else {
        let trace = traj.scalar("trace").unwrap_or_default();
        let min_eig = traj.scalar("min_eigenvalue").unwrap_or_default().iter().copied().fold(f64::INFINITY, f64::min);
        diagnostics.insert(key("trace_drift"), json!(max_deviation(trace, 1.0)));
        diagnostics.insert(key("min_eigenvalue"), json!(min_eig));
        if let Some(step) = traj.step() {
            diagnostics.insert(key("step"), json!(step));
        }
        let report = dynamics::steady_state_probe(&traj)?;
        diagnostics.insert(key("steady_state_converged"), json!(report.converged));
        diagnostics.insert(key("steady_state_change"), json!(report.max_change));
    }
    diagnostics.insert(key("final_negativity"), json!(negativity.last().copied().unwrap_or(0.0)));
    Ok(PairRun { negativity, log_negativity, diagnostics })
}

fn rho_ab(rho: &DensityMatrix) -> Result<DensityMatrix> {
    crate::hilbert::partial_trace(rho, &["a", "b"])
}

fn run_pair(p: &ResolvedParams) -> Result<(Vec<Table>, Diagnostics)> {
    let grid = time_grid(p)?;
    let betas = p.f64_list("betas")?;
    if betas.is_empty() {
        return Err(Error::Config("`betas` must not be empty".into()));
    }
    let runs = map_items(&betas, |&beta| run_pair_beta(p, beta, &grid))?;
    let mut columns = vec![("t".to_string(), grid.times())];
    let mut diagnostics = Diagnostics::new();
    for (beta, run) in betas.iter().zip(runs) {
        columns.push((beta_label("negativity", *beta), run.negativity));
        if !run.log_negativity.is_empty() {
            columns.push((beta_label("log_negativity", *beta), run.log_negativity));
        }
        diagnostics.extend(run.diagnostics);
    }
    Ok((vec![Table::series("negativity", columns)?], diagnostics))
}

// ---------------------------------------------------------------------------
// Cavity and mirror (figs 7, 8)

#[derive(Clone, Copy, PartialEq, Eq)]
enum Engine {
    Analytic,
    Numeric,
}

struct MirrorSetup {
    g: f64,
    omega_k: f64,
    alpha: C64,
    eta: C64,
    engine: Engine,
    dims: (usize, usize),
}

fn mirror_setup(p: &ResolvedParams) -> Result<MirrorSetup> {
    let alpha_sq = p.f64("alpha_sq")?;
    if alpha_sq < 0.0 {
        return Err(Error::Config("`alpha_sq` must be non-negative".into()));
    }
    let eta = p.f64_list("eta")?;
    let eta = match eta.as_slice() {
        [re, im] => c(*re, *im),
        _ => return Err(Error::Config("`eta` must be [re, im]".into())),
    };
    let engine = match p.str("engine")? {
        "analytic" => Engine::Analytic,
        "numeric" => Engine::Numeric,
        other => return Err(Error::Config(format!("engine `{other}` is neither `analytic` nor `numeric`"))),
    };
    let dims = match p.usize_list("dims")?.as_slice() {
        [k, a] => (*k, *a),
        _ => return Err(Error::Config("`dims` needs two entries (cavity, mirror)".into())),
    };
    Ok(MirrorSetup { g: p.f64("g")?, omega_k: p.f64("omega_k")?, alpha: c(alpha_sq.sqrt(), 0.0), eta, engine, dims })
}

/// Reduced mirror states at the requested times (in units of `1/ζ`).
fn mirror_states(setup: &MirrorSetup, beta: f64, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    let params = OptomechParams::dimensionless(beta, setup.g, setup.omega_k, setup.dims)?;
    match setup.engine {
        Engine::Analytic => {
            map_items(times, |&t| mirror_reduced_density(&MirrorJointState::new(setup.alpha, setup.eta, params, t)))
        }
        Engine::Numeric => {
            let h = models::build_optomech_hamiltonian(&params)?;
            let psi0 = coherent_product(&params, setup.alpha, setup.eta, COHERENT_TAIL_TOLERANCE)?;
            let mut out = Vec::with_capacity(times.len());
            // A regular grid from zero goes through the cached eigenbasis; other time lists use exp(−iHt) per point.
            let grid = if times.len() >= 2 { TimeGrid::new(times[0], times[times.len() - 1], times.len()).ok() } else { None };
            let regular = grid.filter(|g| g.times().iter().zip(times).all(|(a, b)| (a - b).abs() < 1e-12));
            let states: Vec<StateVector> = match regular {
                Some(g) if g.t0 == 0.0 => dynamics::evolve_unitary(&h, &psi0, &g)?.pure_states().unwrap_or_default().to_vec(),
                _ => {
                    let prop = dynamics::Propagator::new(&h)?;
                    times
                        .iter()
                        .map(|&t| StateVector::new(psi0.space().clone(), prop.at(t) * psi0.amplitudes()))
                        .collect::<Result<_>>()?
                }
            };
            for psi in &states {
                out.push(partial_trace_pure(psi, &["a"])?);
            }
            Ok(out)
        }
    }
}

fn run_mirror_wigner(p: &ResolvedParams) -> Result<(Vec<Table>, Diagnostics)> {
    let setup = mirror_setup(p)?;
    let betas = p.f64_list("betas")?;
    let t = p.f64("zeta_t")?;
    let grid = WignerGrid::centered(c(0.0, 0.0), p.f64("wigner.half_width")?, p.usize("wigner.resolution")?)?;
    let maps = map_items(&betas, |&beta| {
        let rho = mirror_states(&setup, beta, &[t])?.pop().expect("one state per time");
        quantify::wigner_auto(&rho, &grid)
    })?;
    let mut tables = Vec::new();
    let mut diagnostics = Diagnostics::new();
    for (beta, map) in betas.iter().zip(maps) {
        diagnostics.insert(beta_label("wigner_min", *beta), json!(map.min()));
        diagnostics.insert(beta_label("wigner_integral", *beta), json!(map.integral()));
        diagnostics.insert(beta_label("wigner_boundary", *beta), json!(map.boundary_max()));
        tables.push(Table::grid(beta_label("wigner", *beta), map.grid.re_axis(), map.grid.im_axis(), map.values)?);
    }
    Ok((tables, diagnostics))
}

fn run_mirror_variance(p: &ResolvedParams) -> Result<(Vec<Table>, Diagnostics)> {
    let setup = mirror_setup(p)?;
    let betas = p.f64_list("betas")?;
    let grid = time_grid(p)?;
    let times = grid.times();
    let series = map_items(&betas, |&beta| {
        let states = mirror_states(&setup, beta, &times)?;
        quantify::quadrature_variances(&times, &states)
    })?;
    let mut columns = vec![("t".to_string(), times)];
    let mut diagnostics = Diagnostics::new();
    for (beta, s) in betas.iter().zip(series) {
        diagnostics.insert(beta_label("min_variance", *beta), json!(s.min_variance()));
        let products = s.uncertainty_products();
        diagnostics.insert(beta_label("min_uncertainty_product", *beta), json!(products.iter().copied().fold(f64::INFINITY, f64::min)));
        columns.push((beta_label("var_q", *beta), s.var_q));
        columns.push((beta_label("var_p", *beta), s.var_p));
    }
    Ok((vec![Table::series("variances", columns)?], diagnostics))
}

// ---------------------------------------------------------------------------
// Coil

pub fn coil_params(p: &ResolvedParams) -> Result<CoilParams> {
    let n_turns = u32::try_from(p.usize("n_turns")?).map_err(|_| Error::Config("`n_turns` is too large".into()))?;
    let cp = CoilParams {
        radius: p.f64("radius")?,
        current: p.f64("current")?,
        n_turns,
        n_mag: p.f64("n_mag")?,
        a0: p.f64("a0")?,
    };
    cp.validate()?;
    Ok(cp)
}

fn run_coil(p: &ResolvedParams) -> Result<(Vec<Table>, Diagnostics)> {
    let cp = coil_params(p)?;
    let (lo, hi, samples) = (p.f64("fit.lo")?, p.f64("fit.hi")?, p.usize("fit.samples")?);
    let fit = coil::fit_quartic_coefficient(&cp, lo, hi, samples)?;
    let mut s_col = Vec::with_capacity(samples);
    let mut drop_col = Vec::with_capacity(samples);
    let mut quartic_col = Vec::with_capacity(samples);
    let mut energy_col = Vec::with_capacity(samples);
    let mut exact_col = Vec::with_capacity(samples);
    for k in 0..samples {
        let s = lo * (hi / lo).powf(k as f64 / (samples - 1) as f64);
        let x = s * cp.radius;
        s_col.push(s);
        drop_col.push(coil::field_drop(x, &cp)?);
        quartic_col.push(coil::QUARTIC_COEFFICIENT * s.powi(4));
        energy_col.push(coil::interaction_energy(x, &cp)?);
        exact_col.push(coil::exact_interaction_energy(x, &cp)?);
    }
    let table = Table::series(
        "coil",
        vec![
            ("x_over_r".into(), s_col),
            ("field_drop".into(), drop_col),
            ("quartic_term".into(), quartic_col),
            ("interaction_energy".into(), energy_col),
            ("exact_energy".into(), exact_col),
        ],
    )?;
    let mut diagnostics = Diagnostics::new();
    diagnostics.insert("b0".into(), json!(coil::helmholtz_field(0.0, &cp)?));
    diagnostics.insert("quartic_coefficient".into(), json!(fit.coefficient));
    diagnostics.insert("quartic_fit_residual".into(), json!(fit.max_relative_residual));
    diagnostics.insert("beta".into(), json!(coil::beta_strength(&cp)?));
    Ok((vec![table], diagnostics))
}
