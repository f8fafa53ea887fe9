//! Experiment commands behind the `spde-euler` binary. Each command reads a
//! [`RunConfig`], writes CSV tables and a JSON summary into an output
//! directory, and returns the summary.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::config::{parse_number, RunConfig};
use crate::diagnostics::{
    convergence_study, deterministic_weak_error, expected_quadratic_variation,
    feldman_hajek_indicator, hellinger_diag, log_affinity_diag, mode_variances,
    quadratic_variation, sobolev_moment, ConvergenceConfig, Horizon, Observable, WeakHorizon,
};
use crate::error::{Error, Result};
use crate::field::{FieldState, Representation};
use crate::integrators::{ergodic_averages, one_step_law, run_coupled, Record, Scheme, Stepper};
use crate::mcmc::{run_chains, ChainConfig};
use crate::noise::NoiseStream;
use crate::operators::{SpatialOperator, SpectralOperator};
use crate::output::{Cell, OutputSink};
use crate::problems::{ProblemSpec, SlowFastSpec};
use crate::slowfast::{
    cos_averaged_drift, epsilon_sweep, limiting_consistency, ConsistencyConfig, SlowFastState,
    SweepConfig,
};
use crate::stats::BatchMeans;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    WeakOrder,
    StrongOrder,
    Invariant,
    Regularity,
    GaussianDiag,
    Ap,
    Mcmc,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Simulate,
        Command::WeakOrder,
        Command::StrongOrder,
        Command::Invariant,
        Command::Regularity,
        Command::GaussianDiag,
        Command::Ap,
        Command::Mcmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::WeakOrder => "weak-order",
            Command::StrongOrder => "strong-order",
            Command::Invariant => "invariant",
            Command::Regularity => "regularity",
            Command::GaussianDiag => "gaussian-diag",
            Command::Ap => "ap",
            Command::Mcmc => "mcmc",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Map<String, Value>,
}

pub fn run(cmd: Command, cfg: &RunConfig, out_dir: &Path) -> Result<RunReport> {
    let seed = cfg.u64_or("seed", 0)?;
    let mut sink = OutputSink::new(out_dir, cmd.name(), seed, cfg)?;
    let mut summary = match cmd {
        Command::Simulate => cmd_simulate(cfg, seed, &mut sink)?,
        Command::WeakOrder => cmd_weak_order(cfg, seed, &mut sink)?,
        Command::StrongOrder => cmd_strong_order(cfg, seed, &mut sink)?,
        Command::Invariant => cmd_invariant(cfg, seed, &mut sink)?,
        Command::Regularity => cmd_regularity(cfg, &mut sink)?,
        Command::GaussianDiag => cmd_gaussian_diag(cfg, &mut sink)?,
        Command::Ap => cmd_ap(cfg, seed, &mut sink)?,
        Command::Mcmc => cmd_mcmc(cfg, seed, &mut sink)?,
    };
    let name = format!("{}_summary.json", cmd.name().replace('-', "_"));
    sink.json(&name, &mut summary)?;
    Ok(RunReport {
        files: sink.into_written(),
        summary,
    })
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn schemes_from(cfg: &RunConfig, default: &[&str]) -> Result<Vec<Scheme>> {
    cfg.str_list_or("schemes", default)
        .iter()
        .map(|s| s.parse())
        .collect()
}

fn observable_from(cfg: &RunConfig, default: Observable) -> Result<Observable> {
    match cfg.get("observable") {
        None => Ok(default),
        Some(name) => [
            Observable::SquaredNorm,
            Observable::ExpNegSquaredNorm,
            Observable::SpatialMean,
            Observable::CosMean,
            Observable::QuadraticVariation,
        ]
        .into_iter()
        .find(|o| o.name() == name)
        .ok_or_else(|| Error::Config(format!("unknown observable `{name}`"))),
    }
}

/// Initial state: `zero`, or `mode:k,amplitude` (a single sine mode).
fn initial_state(cfg: &RunConfig, op: &SpatialOperator) -> Result<FieldState> {
    let spec = cfg.str_or("x0", "zero");
    let zero = FieldState::zeros(op.len(), op.representation());
    if spec == "zero" {
        return Ok(zero);
    }
    let args = spec.strip_prefix("mode:").ok_or_else(|| {
        Error::Config(format!(
            "x0 must be `zero` or `mode:k,amplitude`, got `{spec}`"
        ))
    })?;
    let parts: Vec<&str> = args.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("bad x0 `{spec}`")));
    }
    let k = parse_number(parts[0])? as usize;
    let amp = parse_number(parts[1])?;
    if k == 0 || k > op.len() {
        return Err(Error::Config(format!(
            "x0 mode {k} outside 1..={}",
            op.len()
        )));
    }
    let mut modal = FieldState::unit_mode(op.len(), k);
    modal.scale(amp);
    match op {
        SpatialOperator::Spectral(_) => Ok(modal),
        SpatialOperator::FiniteDifference(_) => {
            let grid = SpectralOperator::dirichlet_laplacian(op.len())?;
            grid.to_nodal(&modal)
        }
    }
}

fn spectral_only(op: &SpatialOperator, what: &'static str) -> Result<SpectralOperator> {
    op.as_spectral().cloned().ok_or(Error::SpectralOnly(what))
}

/// Sine-basis variances of the stationary modified and standard laws on the
/// operator's grid, when these are available in closed form.
fn stationary_mode_variances(
    cfg: &RunConfig,
    op: &SpatialOperator,
    tau: f64,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let lambdas: Vec<f64> = match op {
        SpatialOperator::Spectral(s) => s.eigenvalues().to_vec(),
        SpatialOperator::FiniteDifference(fd) => {
            if parse_number(cfg.str_or("a_coeff", "1")).ok() != Some(1.0) {
                return Ok(None);
            }
            let h = fd.mesh_width();
            (1..=fd.len())
                .map(|j| 4.0 / (h * h) * (j as f64 * std::f64::consts::PI * h / 2.0).sin().powi(2))
                .collect()
        }
    };
    let spec = SpectralOperator::from_eigenvalues(lambdas)?;
    let m = mode_variances(Scheme::Modified, &spec, tau, Horizon::Stationary)?;
    let s = mode_variances(Scheme::Standard, &spec, tau, Horizon::Stationary)?;
    Ok(Some((m.variances, s.variances)))
}

fn path_rows(
    op: &SpatialOperator,
    times: &[f64],
    states: &[FieldState],
    thin: usize,
) -> Result<Vec<Vec<Cell>>> {
    let last = states.len() - 1;
    let mut rows = Vec::new();
    for (k, (t, x)) in times.iter().zip(states).enumerate() {
        if k % thin != 0 && k != last {
            continue;
        }
        let nodal = op.nodal_values(x)?;
        let mut row = vec![Cell::F(*t)];
        row.extend(nodal.values().iter().map(|v| Cell::F(*v)));
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_simulate(cfg: &RunConfig, seed: u64, sink: &mut OutputSink) -> Result<Map<String, Value>> {
    let op = cfg.operator("fd", 255)?;
    let (tau, n) = cfg.time_grid(1.0 / 256.0, 1.0)?;
    let p = ProblemSpec::parse(cfg.str_or("problem", "ou"))?;
    let x0 = initial_state(cfg, &op)?;
    let thin = cfg.usize_or("thin", 8)?.max(1);
    let mut stream = NoiseStream::new(seed, 0);
    let (modified, standard) = run_coupled(&op, &p, &x0, tau, n, &mut stream, Record::Path)?;

    let mut columns = vec!["t".to_string()];
    columns.extend((1..=op.len()).map(|i| format!("xi_{i}")));
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    sink.csv(
        "simulate_modified.csv",
        &columns,
        path_rows(&op, &modified.times, &modified.states, thin)?,
    )?;
    sink.csv(
        "simulate_standard.csv",
        &columns,
        path_rows(&op, &standard.times, &standard.states, thin)?,
    )?;

    let mut qv_rows = Vec::new();
    let (mut qm, mut qs) = (0.0, 0.0);
    for ((t, xm), xs) in modified
        .times
        .iter()
        .zip(&modified.states)
        .zip(&standard.states)
    {
        qm = quadratic_variation(&op.nodal_values(xm)?)?;
        qs = quadratic_variation(&op.nodal_values(xs)?)?;
        qv_rows.push(vec![Cell::F(*t), Cell::F(qm), Cell::F(qs)]);
    }
    sink.csv(
        "simulate_qv.csv",
        &["t", "qv_modified", "qv_standard"],
        qv_rows,
    )?;

    let mut s = Map::new();
    s.insert("J".into(), Value::from(op.len()));
    s.insert("tau".into(), num(tau));
    s.insert("T".into(), num(n as f64 * tau));
    s.insert("qv_modified".into(), num(qm));
    s.insert("qv_standard".into(), num(qs));
    s.insert("qv_standard_below_modified".into(), Value::from(qs < qm));
    if let Some((vm, vs)) = stationary_mode_variances(cfg, &op, tau)? {
        s.insert(
            "qv_stationary_modified".into(),
            num(expected_quadratic_variation(&vm)),
        );
        s.insert(
            "qv_stationary_standard".into(),
            num(expected_quadratic_variation(&vs)),
        );
    }
    Ok(s)
}

fn convergence_config(cfg: &RunConfig, seed: u64, default_m: usize) -> Result<ConvergenceConfig> {
    let taus: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    Ok(ConvergenceConfig {
        taus: cfg.f64_list_or("taus", &taus)?,
        t_end: cfg.f64_or("T", 0.5)?,
        tau_ref: cfg.f64_or("tau_ref", 2f64.powi(-11))?,
        replicas: cfg.usize_or("M", default_m)?,
        master_seed: seed,
    })
}

fn fit_fields(s: &mut Map<String, Value>, key: &str, fit: Result<crate::diagnostics::RateFit>) {
    match fit {
        Ok(f) => {
            s.insert(format!("{key}_slope"), num(f.slope));
            s.insert(format!("{key}_points_used"), Value::from(f.n_used()));
        }
        Err(e) => {
            s.insert(format!("{key}_slope"), Value::Null);
            s.insert(format!("{key}_fit_refused"), Value::from(e.to_string()));
        }
    }
}

fn cmd_weak_order(cfg: &RunConfig, seed: u64, sink: &mut OutputSink) -> Result<Map<String, Value>> {
    let op = cfg.operator("spectral", 64)?;
    let spec = spectral_only(&op, "weak-order")?;
    let p = ProblemSpec::parse(cfg.str_or("problem", "sine"))?;
    let cc = convergence_config(cfg, seed, 1000)?;
    let schemes = schemes_from(cfg, &["modified", "standard"])?;
    let phi = observable_from(cfg, Observable::ExpNegSquaredNorm)?;
    let x0 = initial_state(cfg, &op)?;
    let study = convergence_study(&cc, &spec, &p, &x0, &schemes, phi)?;
    let mut rows = Vec::new();
    for (k, scheme) in schemes.iter().enumerate() {
        for l in &study.weak[k] {
            rows.push(vec![
                Cell::from(scheme.name()),
                l.tau.into(),
                l.mean.abs().into(),
                l.mean.into(),
                l.stderr.into(),
            ]);
        }
    }
    sink.csv(
        "weak_order.csv",
        &["scheme", "tau", "error", "signed_error", "stderr"],
        rows,
    )?;

    // Linear equation, squared norm, closed-form covariances.
    let mut det_rows = Vec::new();
    let mut s = Map::new();
    for (label, horizon) in [
        ("T", WeakHorizon::Time(cc.t_end)),
        ("stationary", WeakHorizon::Stationary),
    ] {
        for scheme in [Scheme::Modified, Scheme::Standard] {
            let r = deterministic_weak_error(&spec, &cc.taus, horizon, scheme, 0.0)?;
            for (t, e) in r.taus.iter().zip(&r.errors) {
                det_rows.push(vec![
                    Cell::from(scheme.name()),
                    Cell::from(label),
                    (*t).into(),
                    (*e).into(),
                ]);
            }
            s.insert(
                format!("deterministic_{}_{label}_slope", scheme.name()),
                r.fit.map_or(Value::Null, |f| num(f.slope)),
            );
        }
    }
    sink.csv(
        "weak_order_deterministic.csv",
        &["scheme", "horizon", "tau", "error"],
        det_rows,
    )?;

    s.insert("observable".into(), Value::from(phi.name()));
    s.insert("replicas".into(), Value::from(cc.replicas));
    s.insert("reference_mean".into(), num(study.reference.0));
    s.insert("reference_stderr".into(), num(study.reference.1));
    for scheme in &schemes {
        fit_fields(
            &mut s,
            &format!("weak_{}", scheme.name()),
            study.weak_fit(*scheme),
        );
    }
    Ok(s)
}

fn cmd_strong_order(
    cfg: &RunConfig,
    seed: u64,
    sink: &mut OutputSink,
) -> Result<Map<String, Value>> {
    let op = cfg.operator("spectral", 64)?;
    let spec = spectral_only(&op, "strong-order")?;
    let p = ProblemSpec::parse(cfg.str_or("problem", "sine"))?;
    let cc = convergence_config(cfg, seed, 2000)?;
    let schemes = schemes_from(cfg, &["exponential", "standard", "modified"])?;
    let x0 = initial_state(cfg, &op)?;
    let study = convergence_study(&cc, &spec, &p, &x0, &schemes, Observable::SquaredNorm)?;
    let mut rows = Vec::new();
    for (k, scheme) in schemes.iter().enumerate() {
        for l in &study.strong[k] {
            rows.push(vec![
                Cell::from(scheme.name()),
                l.tau.into(),
                l.mean.into(),
                l.stderr.into(),
            ]);
        }
    }
    sink.csv(
        "strong_order.csv",
        &["scheme", "tau", "error", "stderr"],
        rows,
    )?;
    let mut s = Map::new();
    s.insert("replicas".into(), Value::from(cc.replicas));
    for scheme in &schemes {
        fit_fields(
            &mut s,
            &format!("strong_{}", scheme.name()),
            study.strong_fit(*scheme),
        );
    }
    Ok(s)
}

/// Iterates `v <- a^2 v + s` from the stationary value `1/(2 lambda)`.
pub fn variance_recursion(scheme: Scheme, tau: f64, lambda: f64, v0: f64, steps: usize) -> f64 {
    let (a, s) = one_step_law(scheme, tau, lambda);
    (0..steps).fold(v0, |v, _| a * a * v + s)
}

fn cmd_invariant(cfg: &RunConfig, seed: u64, sink: &mut OutputSink) -> Result<Map<String, Value>> {
    let taus = cfg.f64_list_or("taus", &[0.5, 0.1, 0.01])?;
    let js = cfg.usize_list_or("J_list", &[16, 64, 256])?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &tau in &taus {
        for &j in &js {
            let op = SpectralOperator::dirichlet_laplacian(j)?;
            let mut max_rel: f64 = 0.0;
            for &l in op.eigenvalues() {
                let target = 1.0 / (2.0 * l);
                let v = variance_recursion(Scheme::Modified, tau, l, target, 1000);
                max_rel = max_rel.max(((v - target) / target).abs());
            }
            worst = worst.max(max_rel);
            rows.push(vec![Cell::F(tau), Cell::from(j), Cell::F(max_rel)]);
        }
    }
    sink.csv(
        "invariant_recursion.csv",
        &["tau", "J", "max_rel_error"],
        rows,
    )?;

    let j = cfg.usize_or("J", 32)?;
    let tau = cfg.f64_or("tau", 0.1)?;
    let n = cfg.usize_or("N", 100_000)?;
    let batch = cfg.usize_or("batch_len", 1000)?;
    let (vars, max_z) = invariant_monte_carlo(j, tau, n, batch, seed)?;
    let op = SpectralOperator::dirichlet_laplacian(j)?;
    let mc_rows = vars
        .iter()
        .zip(op.eigenvalues())
        .enumerate()
        .map(|(k, ((m, se), l))| {
            vec![
                Cell::from(k + 1),
                Cell::F(*l),
                Cell::F(1.0 / (2.0 * l)),
                Cell::F(*m),
                Cell::F(*se),
            ]
        })
        .collect();
    sink.csv(
        "invariant_mc.csv",
        &["mode", "lambda", "target", "mc_variance", "stderr"],
        mc_rows,
    )?;
    let mut s = Map::new();
    s.insert("recursion_max_rel_error".into(), num(worst));
    s.insert("recursion_pass".into(), Value::from(worst <= 1e-12));
    s.insert("mc_max_abs_z".into(), num(max_z));
    s.insert("mc_pass".into(), Value::from(max_z <= 5.0));
    Ok(s)
}

/// Per-mode second moments of the modified scheme (F = 0) started from the
/// stationary law, with batch-means standard errors, and the largest
/// standardized deviation from `1/(2 lambda_j)`.
pub fn invariant_monte_carlo(
    j: usize,
    tau: f64,
    n_steps: usize,
    batch_len: usize,
    seed: u64,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let spec = SpectralOperator::dirichlet_laplacian(j)?;
    let op = SpatialOperator::Spectral(spec.clone());
    let stepper = Stepper::new(Scheme::Modified, &op, tau)?;
    let p = ProblemSpec::ornstein_uhlenbeck();
    let mut stream = NoiseStream::new(seed, 0);
    let mut x = stream.draw_cylindrical(j, Representation::Modal);
    for (v, l) in x.values_mut().iter_mut().zip(spec.eigenvalues()) {
        *v /= (2.0 * l).sqrt();
    }
    let mut batches = vec![BatchMeans::new(batch_len); j];
    for _ in 0..n_steps {
        x = stepper.step(&p, &x, &mut stream)?;
        for (b, v) in batches.iter_mut().zip(x.values()) {
            b.push(v * v);
        }
    }
    let est: Vec<(f64, f64)> = batches.iter().map(|b| b.estimate()).collect();
    let max_z = est
        .iter()
        .zip(spec.eigenvalues())
        .map(|((m, se), l)| ((m - 1.0 / (2.0 * l)) / se).abs())
        .fold(0.0, f64::max);
    Ok((est, max_z))
}

fn cmd_regularity(cfg: &RunConfig, sink: &mut OutputSink) -> Result<Map<String, Value>> {
    let j = cfg.usize_or("J", 4096)?;
    let tau = cfg.f64_or("tau", 0.01)?;
    let alphas = cfg.f64_list_or("alphas", &[0.2, 0.3])?;
    let op = SpectralOperator::dirichlet_laplacian(j)?;
    let horizon = match cfg.get("N") {
        Some(_) => Horizon::Steps(cfg.usize_or("N", 1)?),
        None => Horizon::Stationary,
    };
    let mut rows = Vec::new();
    let mut s = Map::new();
    let mut all_match = true;
    for scheme in [Scheme::ExactOu, Scheme::Modified, Scheme::Standard] {
        let table = mode_variances(scheme, &op, tau, horizon)?;
        for &alpha in &alphas {
            let m = sobolev_moment(&table, alpha)?;
            all_match &= m.converges == m.predicted_converges;
            rows.push(vec![
                Cell::from(scheme.name()),
                Cell::F(alpha),
                Cell::F(m.partial_sum),
                Cell::F(m.last_increment),
                Cell::F(m.increment_ratio),
                Cell::B(m.converges),
                Cell::B(m.predicted_converges),
            ]);
            s.insert(
                format!("{}_alpha_{alpha}_converges", scheme.name()),
                Value::from(m.converges),
            );
        }
    }
    sink.csv(
        "regularity.csv",
        &[
            "scheme",
            "alpha",
            "partial_sum",
            "last_increment",
            "increment_ratio",
            "converges",
            "predicted",
        ],
        rows,
    )?;
    let fh = feldman_hajek_indicator(&op, tau, cfg.usize_or("N", 1)?.max(1))?;
    s.insert(
        "doubling_test_matches_prediction".into(),
        Value::from(all_match),
    );
    s.insert("fh_modified_sum".into(), num(fh.modified_sum));
    s.insert("fh_exact_sum".into(), num(fh.exact_sum));
    s.insert("fh_modified_tail_bound".into(), num(fh.modified_tail_bound));
    s.insert("fh_exact_tail_bound".into(), num(fh.exact_tail_bound));
    s.insert("fh_equivalent".into(), Value::from(fh.equivalent));
    Ok(s)
}

#[derive(Debug, Clone, Copy)]
pub struct HellingerRow {
    pub j: usize,
    pub modified: f64,
    pub standard: f64,
    pub standard_log_affinity: f64,
}

/// Hellinger distances of the stationary modified and standard laws from the
/// exact invariant law, for each truncation in `js`.
pub fn hellinger_sweep(tau: f64, js: &[usize]) -> Result<Vec<HellingerRow>> {
    js.iter()
        .map(|&j| {
            let op = SpectralOperator::dirichlet_laplacian(j)?;
            let exact = mode_variances(Scheme::ExactOu, &op, tau, Horizon::Stationary)?;
            let m = mode_variances(Scheme::Modified, &op, tau, Horizon::Stationary)?;
            let st = mode_variances(Scheme::Standard, &op, tau, Horizon::Stationary)?;
            Ok(HellingerRow {
                j,
                modified: hellinger_diag(&m.variances, &exact.variances)?,
                standard: hellinger_diag(&st.variances, &exact.variances)?,
                standard_log_affinity: log_affinity_diag(&st.variances, &exact.variances)?,
            })
        })
        .collect()
}

fn cmd_gaussian_diag(cfg: &RunConfig, sink: &mut OutputSink) -> Result<Map<String, Value>> {
    let tau = cfg.f64_or("tau", 0.1)?;
    let default_js: Vec<usize> = (3..=12).map(|k| 1usize << k).collect();
    let js = cfg.usize_list_or("J_list", &default_js)?;
    let sweep = hellinger_sweep(tau, &js)?;
    sink.csv(
        "gaussian_diag_hellinger.csv",
        &[
            "J",
            "hellinger_modified",
            "hellinger_standard",
            "standard_log_affinity",
        ],
        sweep
            .iter()
            .map(|r| {
                vec![
                    Cell::from(r.j),
                    Cell::F(r.modified),
                    Cell::F(r.standard),
                    Cell::F(r.standard_log_affinity),
                ]
            })
            .collect(),
    )?;
    let j = cfg.usize_or("J", 64)?;
    let op = SpectralOperator::dirichlet_laplacian(j)?;
    let horizon = match cfg.get("N") {
        Some(_) => Horizon::Steps(cfg.usize_or("N", 1)?),
        None => Horizon::Stationary,
    };
    let tables = [Scheme::ExactOu, Scheme::Modified, Scheme::Standard]
        .iter()
        .map(|s| mode_variances(*s, &op, tau, horizon))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..j)
        .map(|k| {
            vec![
                Cell::from(k + 1),
                Cell::F(op.eigenvalues()[k]),
                Cell::F(tables[0].variances[k]),
                Cell::F(tables[1].variances[k]),
                Cell::F(tables[2].variances[k]),
            ]
        })
        .collect();
    sink.csv(
        "gaussian_diag_modes.csv",
        &["mode", "lambda", "exact", "modified", "standard"],
        rows,
    )?;
    let mut s = Map::new();
    let max_modified = sweep.iter().map(|r| r.modified).fold(0.0, f64::max);
    let monotone = sweep
        .windows(2)
        .all(|w| w[1].standard_log_affinity < w[0].standard_log_affinity);
    let j_star = sweep.iter().find(|r| r.standard >= 0.9).map(|r| r.j);
    s.insert("tau".into(), num(tau));
    s.insert("hellinger_modified_max".into(), num(max_modified));
    s.insert("hellinger_standard_monotone".into(), Value::from(monotone));
    s.insert("j_star".into(), j_star.map_or(Value::Null, Value::from));
    Ok(s)
}

fn cmd_ap(cfg: &RunConfig, seed: u64, sink: &mut OutputSink) -> Result<Map<String, Value>> {
    let op = cfg.operator("spectral", 32)?;
    let spec = spectral_only(&op, "ap")?;
    let sf = SlowFastSpec::cosine(1.0)?;
    let phi = observable_from(cfg, Observable::SpatialMean)?;
    let sweep_cfg = SweepConfig {
        tau: cfg.f64_or("tau", 0.1)?,
        n_steps: cfg.usize_or("N", 4)?,
        epsilons: cfg.f64_list_or("epsilons", &[1e-1, 1e-2, 1e-3, 1e-4])?,
        replicas: cfg.usize_or("M", 20_000)?,
        master_seed: seed,
    };
    let zero = FieldState::zeros(spec.len(), Representation::Modal);
    let init = SlowFastState::new(zero.clone(), zero.clone())?;
    let sweep = epsilon_sweep(&sweep_cfg, &spec, &sf, &init, phi)?;
    sink.csv(
        "ap_sweep.csv",
        &[
            "epsilon",
            "phi_mean",
            "phi_stderr",
            "gap",
            "gap_stderr",
            "standard_gap",
            "standard_gap_stderr",
        ],
        sweep
            .rows
            .iter()
            .map(|r| {
                vec![
                    Cell::F(r.epsilon),
                    Cell::F(r.phi_mean),
                    Cell::F(r.phi_stderr),
                    Cell::F(r.gap),
                    Cell::F(r.gap_stderr),
                    Cell::F(r.standard_gap),
                    Cell::F(r.standard_gap_stderr),
                ]
            })
            .collect(),
    )?;
    let cons_cfg = ConsistencyConfig {
        taus: cfg.f64_list_or("taus", &[1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0])?,
        t_end: cfg.f64_or("T", 0.25)?,
        replicas: cfg.usize_or("M", 20_000)?,
        master_seed: seed,
        refinement: cfg.usize_or("refinement", 16)?,
    };
    let grid = spec.grid();
    let gbar = move |_: &FieldState| {
        FieldState::nodal(grid.iter().map(|&xi| cos_averaged_drift(xi)).collect())
    };
    let cons = limiting_consistency(&cons_cfg, &spec, &sf, &zero, phi, &gbar)?;
    sink.csv(
        "ap_consistency.csv",
        &["tau", "error", "stderr"],
        cons.taus
            .iter()
            .zip(&cons.errors)
            .zip(&cons.stderrs)
            .map(|((t, e), s)| vec![Cell::F(*t), Cell::F(*e), Cell::F(*s)])
            .collect(),
    )?;
    let mut s = Map::new();
    s.insert("limit_mean".into(), num(sweep.limit.0));
    s.insert("limit_stderr".into(), num(sweep.limit.1));
    s.insert(
        "gap_monotone_within_noise".into(),
        Value::from(sweep.monotone_within_noise()),
    );
    s.insert(
        "gap_reaches_noise_floor".into(),
        Value::from(sweep.reaches_noise_floor()),
    );
    if let Some(last) = sweep.rows.last() {
        let z = last.standard_gap.abs() / last.standard_gap_stderr;
        s.insert("standard_gap_z".into(), num(z));
        s.insert("standard_variant_biased".into(), Value::from(z > 5.0));
    }
    fit_fields(&mut s, "consistency", cons.fit);
    Ok(s)
}

fn cmd_mcmc(cfg: &RunConfig, seed: u64, sink: &mut OutputSink) -> Result<Map<String, Value>> {
    let op = cfg.operator("fd", 32)?;
    let tau = cfg.f64_or("tau", 0.1)?;
    let p = ProblemSpec::parse(cfg.str_or("problem", "gradient_cos(0.5)"))?;
    let chain_cfg = ChainConfig {
        n_steps: cfg.usize_or("mcmc_steps", 100_000)?,
        burn_in: cfg.usize_or("burn_in", 1000)?,
        batch_len: cfg.usize_or("batch_len", 1000)?,
        thin: cfg.usize_or("thin", 100)?,
    };
    let observables = [
        Observable::SquaredNorm,
        Observable::CosMean,
        Observable::QuadraticVariation,
    ];
    let x0 = initial_state(cfg, &op)?;
    let f = op.factorize(tau)?;
    let chains = cfg.usize_or("chains", 1)?;
    let pooled = run_chains(&op, &f, &p, &x0, &chain_cfg, seed, chains, &observables)?;
    let mut rows = Vec::new();
    for (c, chain) in pooled.chains.iter().enumerate() {
        for (step, values) in &chain.trace {
            let mut row = vec![Cell::from(c), Cell::from(*step)];
            row.extend(values.iter().map(|v| Cell::F(*v)));
            rows.push(row);
        }
    }
    sink.csv(
        "mcmc_trace.csv",
        &["chain", "step", "sq_norm", "cos_mean", "qv"],
        rows,
    )?;
    let mut s = Map::new();
    s.insert("acceptance_rate".into(), num(pooled.acceptance_rate));
    for (k, o) in observables.iter().enumerate() {
        s.insert(format!("{}_mean", o.name()), num(pooled.means[k]));
        s.insert(format!("{}_stderr", o.name()), num(pooled.stderrs[k]));
    }
    let sde_steps = cfg.usize_or("sde_steps", 0)?;
    if sde_steps > 0 {
        let sde_tau = cfg.f64_or("sde_tau", 0.005)?;
        let stepper = Stepper::new(Scheme::Modified, &op, sde_tau)?;
        let mut stream = NoiseStream::new(seed, chains as u64);
        let est = ergodic_averages(
            &stepper,
            &op,
            &p,
            &x0,
            sde_steps,
            chain_cfg.burn_in,
            chain_cfg.batch_len,
            &mut stream,
            &[Observable::SquaredNorm],
        )?;
        let (m, se) = est[0];
        let z = (m - pooled.means[0]) / (se * se + pooled.stderrs[0].powi(2)).sqrt();
        s.insert("sde_sq_norm_mean".into(), num(m));
        s.insert("sde_sq_norm_stderr".into(), num(se));
        s.insert("sq_norm_z".into(), num(z));
        s.insert("sq_norm_agree".into(), Value::from(z.abs() <= 3.0));
    }
    Ok(s)
}
