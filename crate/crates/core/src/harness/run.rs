//! Sweep execution: point resolution, per-trial evaluation and aggregation.

use std::collections::BTreeSet;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{CovarianceSpec, ExperimentConfig, Output, Sweep};
use crate::covgen::{assumption3_norm, gen_max_entropy, gen_one_ring_uca, CovarianceProfile};
use crate::deteq::{
    compute_a_l, gamma_infinity, gamma_sandwich_holds, solve_gamma_scalar, solve_thm1, solve_thm3, xi_thm3, xi_thm4,
};
use crate::error::{Error, Result};
use crate::linalg::mean_and_stderr;
use crate::model::{derive_ratios, SystemParams};
use crate::mse::{mse_conventional, mse_cov_aided_exact, mse_sinr_form};
use crate::pilotopt::{search_min_length, SearchOptions};
use crate::pilots::{gen_orthogonal, gen_random_phase, PilotModel, PilotSet};
use crate::rng::{stream, Role};

/// One resolved sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub index: usize,
    pub covariance: CovarianceSpec,
    pub m: usize,
    pub k: usize,
    pub l: Option<usize>,
    pub snr: Vec<f64>,
    pub pathloss: Vec<f64>,
}

impl Point {
    pub fn snr0_db(&self) -> f64 {
        10.0 * self.snr[0].log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub std_err: Option<f64>,
}

/// One CSV row: a trial of a point, or the aggregate of a point (`trial = -1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub point: usize,
    pub cov_model: String,
    pub m: usize,
    pub k: usize,
    pub l: Option<usize>,
    pub snr0_db: f64,
    pub trial: i64,
    pub metrics: Vec<Metric>,
    pub diagnostics: Vec<Metric>,
    pub notes: Vec<String>,
}

impl ExperimentRecord {
    pub fn is_aggregate(&self) -> bool {
        self.trial < 0
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.metric(name).map(|m| m.value)
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// Column layout implied by the requested outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Columns {
    pub metrics: Vec<&'static str>,
    pub diagnostics: Vec<&'static str>,
    /// Normalized approximation errors, filled on aggregate rows only.
    pub errors: Vec<&'static str>,
}

impl Columns {
    pub fn for_outputs(outputs: &[Output]) -> Self {
        let has = |o| outputs.contains(&o);
        let mut metrics = Vec::new();
        let mut diagnostics = Vec::new();
        let mut errors = Vec::new();
        if has(Output::ExactMse) {
            metrics.extend(["mse_exact", "mse_conv", "mse_sinr_form"]);
        }
        if has(Output::Thm1) {
            metrics.push("xi_thm1");
            diagnostics.extend(["iters_thm1", "conv_thm1"]);
        }
        if has(Output::Thm3) {
            metrics.push("xi_thm3");
            diagnostics.extend(["iters_thm3", "conv_thm3"]);
        }
        if has(Output::Thm4) {
            metrics.push("xi_thm4");
        }
        if has(Output::Gamma) {
            metrics.extend(["gamma", "gamma_inf", "inv_gamma_lower", "sandwich_ok"]);
        }
        if has(Output::Thm4) || has(Output::Gamma) {
            diagnostics.extend(["iters_gamma", "conv_gamma"]);
        }
        if has(Output::ALLambdaMin) {
            metrics.push("A_L_lambda_min");
        }
        if has(Output::Assumption3) {
            metrics.push("assumption3_norm");
        }
        if has(Output::RankStats) {
            metrics.extend(["rank_norm0", "tau_bar"]);
        }
        if has(Output::PilotLength) {
            metrics.extend(["l_star", "l_approx", "delta", "delta_bar", "feasible"]);
        }
        if has(Output::ExactMse) {
            for (o, name) in [(Output::Thm1, "nerr_thm1"), (Output::Thm3, "nerr_thm3"), (Output::Thm4, "nerr_thm4")] {
                if has(o) {
                    errors.push(name);
                }
            }
        }
        Self { metrics, diagnostics, errors }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub columns: Columns,
    pub points: Vec<Point>,
    /// Trial rows of each point followed by its aggregate row, points in order.
    pub records: Vec<ExperimentRecord>,
    /// Number of solver runs that hit the iteration limit.
    pub nonconverged: usize,
}

/// Expands the sweep into points; every configuration error surfaces here.
pub fn resolve_points(config: &ExperimentConfig) -> Result<Vec<Point>> {
    config.validate()?;
    let values: Vec<(usize, Option<usize>, Option<f64>)> = match &config.sweep {
        Sweep::Antennas(v) => v.iter().map(|&m| (m, None, None)).collect(),
        Sweep::PilotLengths(v) => v.iter().map(|&l| (config.antennas.unwrap_or(0), Some(l), None)).collect(),
        Sweep::SnrDb(v) => v.iter().map(|&s| (config.antennas.unwrap_or(0), None, Some(s))).collect(),
    };
    let mut points = Vec::new();
    for (m, l_override, snr_override) in values {
        for cov in &config.covariances {
            let k = config.interferers.resolve(m);
            let n = k + 1;
            let l = match l_override {
                Some(l) => Some(l),
                None => config.pilot_length.resolve(k),
            };
            if config.pilots == PilotModel::OrthogonalDft && l.is_some_and(|l| l < n) {
                return Err(Error::Config(format!("orthogonal pilots need L >= K+1 = {n} at M={m}")));
            }
            let snr = match snr_override {
                Some(db) => vec![10f64.powf(db / 10.0); n],
                None => config.snr_db.resolve(n)?,
            };
            let pathloss = config.pathloss.resolve(n)?;
            SystemParams::new(m, k, l.unwrap_or(1), snr.clone(), pathloss.clone())
                .map_err(|e| Error::Config(e.to_string()))?;
            if let CovarianceSpec::MaxEntropy { tau } = cov {
                if CovarianceSpec::rank(*tau, m) == 0 {
                    return Err(Error::Config(format!("tau={tau} gives rank zero at M={m}")));
                }
            }
            points.push(Point { index: points.len(), covariance: cov.clone(), m, k, l, snr, pathloss });
        }
    }
    Ok(points)
}

fn draw_covariances(point: &Point, seed: u64, trial: usize) -> Result<Vec<CovarianceProfile>> {
    (0..=point.k)
        .map(|user| {
            let mut rng = stream(seed, &[point.index as u64, trial as u64, Role::Covariance as u64, user as u64]);
            match &point.covariance {
                CovarianceSpec::MaxEntropy { tau } => gen_max_entropy(point.m, CovarianceSpec::rank(*tau, point.m), &mut rng),
                CovarianceSpec::OneRingUca { spread_deg, nodes } => {
                    gen_one_ring_uca(point.m, None, spread_deg.to_radians(), *nodes, &mut rng)
                }
            }
        })
        .collect()
}

struct TrialOutcome {
    values: Vec<(&'static str, f64)>,
    diagnostics: Vec<(&'static str, f64)>,
    notes: BTreeSet<String>,
    nonconverged: usize,
}

impl TrialOutcome {
    fn converged(&mut self, tag: &str, iterations: usize, ok: bool, name_iters: &'static str, name_conv: &'static str) {
        self.diagnostics.push((name_iters, iterations as f64));
        self.diagnostics.push((name_conv, if ok { 1.0 } else { 0.0 }));
        if !ok {
            self.notes.insert(format!("{tag}:not-converged"));
            self.nonconverged += 1;
        }
    }
}

fn run_trial(config: &ExperimentConfig, outputs: &[Output], point: &Point, trial: usize) -> Result<TrialOutcome> {
    let has = |o| outputs.contains(&o);
    let seed = config.seed;
    let covs = draw_covariances(point, seed, trial)?;
    let ranks: Vec<usize> = covs.iter().map(CovarianceProfile::rank).collect();
    let m = point.m;
    let k = point.k;
    let mut out = TrialOutcome { values: Vec::new(), diagnostics: Vec::new(), notes: BTreeSet::new(), nonconverged: 0 };
    let mut pilot_rng = stream(seed, &[point.index as u64, trial as u64, Role::Pilot as u64]);

    let Some(l) = point.l else {
        let params = SystemParams::new(m, k, 1, point.snr.clone(), point.pathloss.clone())?;
        let ratios = derive_ratios(&params, &ranks)?;
        if has(Output::RankStats) {
            out.values.push(("rank_norm0", ratios.tau0()));
            out.values.push(("tau_bar", ratios.tau_bar));
        }
        let r = search_min_length(&covs, &params, pilot_rng.next_u64(), &SearchOptions::default())?;
        out.values.extend([
            ("l_star", r.l_star as f64),
            ("l_approx", r.l_approx as f64),
            ("delta", r.delta),
            ("delta_bar", r.delta_bar),
            ("feasible", if r.feasible { 1.0 } else { 0.0 }),
        ]);
        if !r.feasible {
            out.notes.insert("pilot_length:infeasible".into());
        }
        if r.orthogonal_preferable {
            out.notes.insert("pilot_length:orthogonal-preferable".into());
        }
        return Ok(out);
    };

    let params = SystemParams::new(m, k, l, point.snr.clone(), point.pathloss.clone())?;
    let pilots: PilotSet = match config.pilots {
        PilotModel::OrthogonalDft => gen_orthogonal(l, k + 1)?,
        _ => gen_random_phase(l, k + 1, &mut pilot_rng),
    };
    let ratios = derive_ratios(&params, &ranks)?;
    let isotropic = matches!(point.covariance, CovarianceSpec::MaxEntropy { .. });
    let random_pilots = config.pilots == PilotModel::RandomPhase;
    let (beta0, rho0) = (params.pathloss[0], params.snr[0]);

    if has(Output::ExactMse) {
        let e = mse_cov_aided_exact(&pilots, &covs, &params)?;
        out.values.push(("mse_exact", e.total_mse));
        out.values.push(("mse_conv", mse_conventional(beta0, rho0, k + 1)));
        out.values.push(("mse_sinr_form", mse_sinr_form(&covs[0].eigenvalues, &e.per_mode_sinr, beta0, m)));
    }
    if has(Output::Thm1) {
        let s = solve_thm1(&pilots, &covs[0], &params, &ranks[1..], &config.solver_scalar())?;
        out.values.push(("xi_thm1", s.xi));
        out.converged("thm1", s.report.iterations, s.report.converged, "iters_thm1", "conv_thm1");
        if !isotropic {
            out.notes.insert("thm1:model-mismatch".into());
        }
    }
    if has(Output::Thm3) {
        let g = solve_thm3(&covs[1..], &params, &config.solver_matrix())?;
        out.values.push(("xi_thm3", xi_thm3(&g.solution, &covs[0], &params)?));
        out.converged("thm3", g.iterations, g.converged, "iters_thm3", "conv_thm3");
        if !random_pilots {
            out.notes.insert("thm3:model-mismatch".into());
        }
    }
    if has(Output::Thm4) || has(Output::Gamma) {
        let taus = ratios.interferer_taus();
        let g = solve_gamma_scalar(taus, &params.snr[1..], l, &config.solver_scalar())?;
        let gamma = g.solution;
        if has(Output::Thm4) {
            out.values.push(("xi_thm4", xi_thm4(&covs[0].eigenvalues, beta0, rho0, l, gamma, m)));
            if !isotropic || !random_pilots {
                out.notes.insert("thm4:model-mismatch".into());
            }
        }
        if has(Output::Gamma) {
            let thresholds = config.regime_thresholds.unwrap_or_default();
            let gi = gamma_infinity(&ratios, &params.snr[1..], l, thresholds)?;
            let alpha = ratios.alpha_l.unwrap_or(f64::INFINITY);
            out.values.extend([
                ("gamma", gamma),
                ("gamma_inf", gi.gamma_inf.unwrap_or(f64::NAN)),
                ("inv_gamma_lower", 1.0 - ratios.tau_bar / alpha),
                ("sandwich_ok", if gamma_sandwich_holds(gamma, ratios.tau_bar, alpha) { 1.0 } else { 0.0 }),
            ]);
            out.notes.insert(format!("regime:{}", gi.regime.tag()));
        }
        out.converged("gamma", g.iterations, g.converged, "iters_gamma", "conv_gamma");
    }
    if has(Output::ALLambdaMin) {
        let (_, lmin) = compute_a_l(&pilots, &covs[1..], &params)?;
        out.values.push(("A_L_lambda_min", lmin));
    }
    if has(Output::Assumption3) {
        out.values.push(("assumption3_norm", assumption3_norm(&covs, l)?));
    }
    if has(Output::RankStats) {
        out.values.push(("rank_norm0", ratios.tau0()));
        out.values.push(("tau_bar", ratios.tau_bar));
    }
    Ok(out)
}

fn record_for(point: &Point, trial: i64, metrics: Vec<Metric>, diagnostics: Vec<Metric>, notes: Vec<String>) -> ExperimentRecord {
    ExperimentRecord {
        point: point.index,
        cov_model: point.covariance.tag().to_string(),
        m: point.m,
        k: point.k,
        l: point.l,
        snr0_db: point.snr0_db(),
        trial,
        metrics,
        diagnostics,
        notes,
    }
}

fn plain(name: &str, value: f64) -> Metric {
    Metric { name: name.to_string(), value, std_err: None }
}

fn aggregate(point: &Point, columns: &Columns, trials: &[ExperimentRecord]) -> ExperimentRecord {
    let collect = |name: &str, diag: bool| -> Vec<f64> {
        trials
            .iter()
            .filter_map(|r| if diag { r.diagnostic(name) } else { r.value(name) })
            .collect()
    };
    let mut metrics = Vec::new();
    for &name in &columns.metrics {
        let v = collect(name, false);
        if !v.is_empty() {
            let (mean, se) = mean_and_stderr(&v);
            metrics.push(Metric { name: name.to_string(), value: mean, std_err: Some(se) });
        }
    }
    if let Some(l) = point.l {
        for &name in &columns.errors {
            let xi = name.replace("nerr_", "xi_");
            let dev: Vec<f64> = trials
                .iter()
                .filter_map(|r| Some((r.value("mse_exact")? - r.value(&xi)?).abs() * l as f64))
                .collect();
            if !dev.is_empty() {
                let (mean, se) = mean_and_stderr(&dev);
                metrics.push(Metric { name: name.to_string(), value: mean, std_err: Some(se) });
            }
        }
    }
    let diagnostics = columns
        .diagnostics
        .iter()
        .filter_map(|&name| {
            let v = collect(name, true);
            (!v.is_empty()).then(|| plain(name, mean_and_stderr(&v).0))
        })
        .collect();
    let notes: BTreeSet<String> = trials.iter().flat_map(|r| r.notes.iter().cloned()).collect();
    record_for(point, -1, metrics, diagnostics, notes.into_iter().collect())
}

/// Runs every `(point, trial)` task on a pool of `threads` workers (the
/// global pool when `None`). Records come back in point/trial order, so the
/// output does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    let points = resolve_points(config)?;
    let outputs = config.output_set();
    let columns = Columns::for_outputs(&outputs);
    let tasks: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..config.trials).map(move |t| (p, t))).collect();
    let work = || -> Vec<Result<TrialOutcome>> {
        tasks.par_iter().map(|&(p, t)| run_trial(config, &outputs, &points[p], t)).collect()
    };
    let results = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build a pool of {n} threads: {e}")))?;
            pool.install(work)
        }
        None => work(),
    };

    let mut records = Vec::with_capacity(tasks.len() + points.len());
    let mut nonconverged = 0;
    let mut results = results.into_iter();
    for point in &points {
        let mut rows = Vec::with_capacity(config.trials);
        for trial in 0..config.trials {
            let o = results.next().expect("one result per task")?;
            nonconverged += o.nonconverged;
            let metrics = o.values.into_iter().map(|(n, v)| plain(n, v)).collect();
            let diagnostics = o.diagnostics.into_iter().map(|(n, v)| plain(n, v)).collect();
            rows.push(record_for(point, trial as i64, metrics, diagnostics, o.notes.into_iter().collect()));
        }
        let agg = aggregate(point, &columns, &rows);
        records.extend(rows);
        records.push(agg);
    }
    Ok(ExperimentOutput { columns, points, records, nonconverged })
}

/// `L · mean |mse_exact − <equivalent>|` over the trial rows of each point,
/// for `equivalent` one of `xi_thm1`, `xi_thm3`, `xi_thm4`.
pub fn normalized_approx_error(records: &[ExperimentRecord], equivalent: &str) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    let points: BTreeSet<usize> = records.iter().map(|r| r.point).collect();
    for p in points {
        let dev: Vec<f64> = records
            .iter()
            .filter(|r| r.point == p && !r.is_aggregate())
            .filter_map(|r| Some(r.l? as f64 * (r.value("mse_exact")? - r.value(equivalent)?).abs()))
            .collect();
        if !dev.is_empty() {
            out.push((p, dev.iter().sum::<f64>() / dev.len() as f64));
        }
    }
    out
}
