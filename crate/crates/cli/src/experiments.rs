use std::io::Write;
use std::sync::Arc;

use pvsplit::dynamics::{
    convergence_sweep, FlowEngine, FlowKind, SweepSpec, TauDistribution, TauSchedule, Trajectory,
};
use pvsplit::ensembles::{
    invariance_test, sample_canonical, sample_microcanonical, CanonicalParams, EnsembleSample,
    InvarianceSpec, MicrocanonicalParams,
};
use pvsplit::kernel::{build_kernel_table, KernelTable, PairKernel};
use pvsplit::observables::{hamiltonian, min_pair_distance, relative_drift, ObservableReport};
use pvsplit::torus::min_displacement;
use pvsplit::{Configuration, Error, GreenEvaluator, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{EnsembleSpec, Experiment, ExperimentConfig, InitialSpec};
use crate::output::OutputDir;

pub fn run(cfg: &ExperimentConfig, out: &OutputDir) -> Result<serde_json::Value> {
    match cfg.experiment.expect("resolved config names its experiment") {
        Experiment::Simulate => simulate(cfg, out),
        Experiment::Converge => converge(cfg, out),
        Experiment::Conserve => conserve(cfg, out),
        Experiment::Liouville => liouville(cfg, out),
        Experiment::EnsembleInvariance => ensemble_invariance(cfg, out),
        Experiment::GreenTable => green_table(cfg, out),
        Experiment::MindistSurvey => mindist_survey(cfg, out),
    }
}

fn green(cfg: &ExperimentConfig) -> Result<Arc<GreenEvaluator>> {
    Ok(Arc::new(GreenEvaluator::with_accuracy(cfg.green.target_accuracy)?))
}

fn engine(cfg: &ExperimentConfig) -> Result<FlowEngine> {
    let g = green(cfg)?;
    match &cfg.table_path {
        Some(path) => {
            let table = Arc::new(KernelTable::read(path)?);
            FlowEngine::with_kernel(PairKernel::with_table(g, table), cfg.flow)
        }
        None => FlowEngine::new(g, cfg.flow),
    }
}

fn random_positions(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random(), rng.random()]).collect()
}

fn draw_initial(spec: &InitialSpec, seed: u64) -> Result<Configuration> {
    match spec {
        InitialSpec::Explicit {
            positions,
            intensities,
        } => Configuration::from_raw(positions, intensities),
        InitialSpec::Random {
            intensities,
            min_distance,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100_000 {
                let x = Configuration::from_raw(&random_positions(intensities.len(), &mut rng), intensities)?;
                if min_pair_distance(&x) >= *min_distance {
                    return Ok(x);
                }
            }
            Err(Error::InvalidInput(format!(
                "no random configuration with minimum distance {min_distance} found"
            )))
        }
    }
}

fn initial(cfg: &ExperimentConfig, index: u64) -> Result<Configuration> {
    let spec = cfg.initial.as_ref().expect("resolved config has an initial state");
    draw_initial(spec, TauSchedule::derive_seed(cfg.seed(), index))
}

fn schedule_for(flow: FlowKind) -> bool {
    matches!(flow, FlowKind::Jumping { .. } | FlowKind::Interpolated { .. })
}

fn trajectory(
    e: &FlowEngine,
    x: &Configuration,
    flow: FlowKind,
    times: &[f64],
    sched: &mut TauSchedule,
) -> Result<Trajectory> {
    match flow {
        FlowKind::Deterministic => e.deterministic_trajectory(x, times),
        FlowKind::Single { i } => e.single_vortex_trajectory(x, i, times),
        FlowKind::Jumping { m } => e.jumping_trajectory(x, times, m, sched),
        FlowKind::Interpolated { m } => e.interpolated_trajectory(x, times, m, sched),
    }
}

fn simulate(cfg: &ExperimentConfig, out: &OutputDir) -> Result<serde_json::Value> {
    let sim = cfg.simulate.as_ref().expect("resolved");
    let e = engine(cfg)?;
    let x = initial(cfg, 0)?;
    let mut sched = TauSchedule::new(sim.distribution, cfg.seed());
    let traj = trajectory(&e, &x, sim.flow, &sim.times, &mut sched)?;
    out.write_with("trajectory.csv", |w| traj.write_csv(w))?;
    let h = ObservableReport::hamiltonian(e.green(), &traj)?;
    out.write_with("hamiltonian.csv", |w| h.write_csv(w))?;
    let mut meta = serde_json::to_value(traj.metadata(e.params(), e.table_hash()))?;
    if !schedule_for(sim.flow) {
        meta["schedule"] = serde_json::Value::Null;
    }
    out.write_json("trajectory.json", &meta)?;
    Ok(json!({ "samples": traj.len(), "hamiltonian": h.summary }))
}

fn converge(cfg: &ExperimentConfig, out: &OutputDir) -> Result<serde_json::Value> {
    let c = cfg.converge.as_ref().expect("resolved");
    let e = engine(cfg)?;
    let x = initial(cfg, 0)?;
    let spec = SweepSpec {
        m_list: c.m_list.clone(),
        seeds: (0..c.seed_count as u64)
            .map(|k| TauSchedule::derive_seed(cfg.seed(), 1 + k))
            .collect(),
        distribution: c.distribution,
        times: c.times.clone(),
    };
    let table = convergence_sweep(&e, &x, &spec)?;
    out.write_with("convergence.csv", |w| {
        write!(w, "m,mean_error")?;
        for s in &spec.seeds {
            write!(w, ",seed_{s}")?;
        }
        writeln!(w)?;
        for row in &table.rows {
            write!(w, "{},{:?}", row.m, row.mean_error)?;
            for v in &row.per_seed {
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok(json!({
        "seeds": spec.seeds,
        "decreasing_pairs": table.decreasing_pairs,
        "last_over_first": table.last_over_first,
        "rows": table.rows.iter().map(|r| json!({"m": r.m, "mean_error": r.mean_error})).collect::<Vec<_>>(),
    }))
}

fn conserve(cfg: &ExperimentConfig, out: &OutputDir) -> Result<serde_json::Value> {
    let c = cfg.conserve.as_ref().expect("resolved");
    let e = engine(cfg)?;
    let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..c.trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let x = initial(cfg, 2 * k)?;
            let mut sched = TauSchedule::with_stream(c.distribution, cfg.seed(), k);
            let traj = trajectory(&e, &x, c.flow, &c.times, &mut sched)?;
            let h = traj
                .samples()
                .iter()
                .map(|y| hamiltonian(e.green(), y))
                .collect::<Result<Vec<_>>>()?;
            let drift = h.iter().map(|&v| relative_drift(h[0], v)).collect();
            Ok((h, drift))
        })
        .collect::<Result<_>>()?;
    let mut max_drift: f64 = 0.0;
    out.write_with("drift.csv", |w| {
        writeln!(w, "trajectory,t,hamiltonian,relative_drift")?;
        for (k, (h, d)) in runs.iter().enumerate() {
            for ((t, h), d) in c.times.iter().zip(h).zip(d) {
                max_drift = max_drift.max(*d);
                writeln!(w, "{k},{t:?},{h:?},{d:?}")?;
            }
        }
        Ok(())
    })?;
    Ok(json!({
        "trajectories": c.trajectories,
        "max_relative_drift": max_drift,
        "threshold": c.threshold,
        "passed": max_drift < c.threshold,
    }))
}

fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

/// Central-difference Jacobian determinant of `flow` at `x` in flat coordinates.
fn jacobian_det(
    x: &Configuration,
    h: f64,
    flow: impl Fn(&Configuration) -> Result<Configuration>,
) -> Result<f64> {
    let base = x.flat_coords();
    let dim = base.len();
    let mut jac = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        let shifted = |s: f64| {
            let mut c = base.clone();
            c[j] += s;
            let raw: Vec<[f64; 2]> = c.chunks(2).map(|p| [p[0], p[1]]).collect();
            flow(&Configuration::from_raw(&raw, x.intensities())?)
        };
        let (p, m) = (shifted(h)?, shifted(-h)?);
        for i in 0..x.len() {
            let d = min_displacement(m.position(i), p.position(i));
            jac[2 * i][j] = d[0] / (2.0 * h);
            jac[2 * i + 1][j] = d[1] / (2.0 * h);
        }
    }
    Ok(det(jac))
}

fn liouville(cfg: &ExperimentConfig, out: &OutputDir) -> Result<serde_json::Value> {
    let c = cfg.liouville.as_ref().expect("resolved");
    let e = engine(cfg)?;
    let spec = InitialSpec::Random {
        intensities: c.intensities.clone(),
        min_distance: c.min_distance,
    };
    let rows: Vec<[f64; 3]> = (0..c.points as u64)
        .into_par_iter()
        .map(|k| {
            let x = draw_initial(&spec, TauSchedule::derive_seed(cfg.seed(), 2 * k))?;
            let i = (k as usize) % x.len();
            let sched_seed = TauSchedule::derive_seed(cfg.seed(), 2 * k + 1);
            Ok([
                jacobian_det(&x, c.h, |y| e.deterministic_flow(y, c.t))?,
                jacobian_det(&x, c.h, |y| e.single_vortex_flow(y, i, c.t))?,
                jacobian_det(&x, c.h, |y| {
                    let mut s = TauSchedule::new(TauDistribution::Exponential, sched_seed);
                    e.interpolated_flow(y, c.t, c.m, &mut s)
                })?,
            ])
        })
        .collect::<Result<_>>()?;
    let names = ["deterministic", "single", "interpolated"];
    let mut worst = [0.0f64; 3];
    out.write_with("jacobian.csv", |w| {
        writeln!(w, "point,flow,det")?;
        for (k, dets) in rows.iter().enumerate() {
            for (f, d) in dets.iter().enumerate() {
                worst[f] = worst[f].max((d - 1.0).abs());
                writeln!(w, "{k},{},{d:?}", names[f])?;
            }
        }
        Ok(())
    })?;
    Ok(json!({
        "points": c.points,
        "t": c.t,
        "max_abs_det_minus_one": {
            "deterministic": worst[0], "single": worst[1], "interpolated": worst[2]
        },
        "tolerance": c.tolerance,
        "passed": worst.iter().all(|w| *w < c.tolerance),
    }))
}

fn draw_ensemble(cfg: &ExperimentConfig, g: &GreenEvaluator) -> Result<EnsembleSample> {
    let c = cfg.ensemble_invariance.as_ref().expect("resolved");
    let template = Configuration::from_raw(&vec![[0.0, 0.0]; c.intensities.len()], &c.intensities)?;
    let seed = TauSchedule::derive_seed(cfg.seed(), 0);
    match c.ensemble {
        EnsembleSpec::Canonical {
            beta,
            proposal_scale,
            burn_in,
            thinning,
        } => {
            let p = CanonicalParams {
                beta,
                proposal_scale,
                burn_in,
                thinning,
                seed,
            };
            sample_canonical(g, &template, &p, c.count)
        }
        EnsembleSpec::Microcanonical {
            energy,
            shell_width,
            proposal_scale,
            burn_in,
            thinning,
            search_budget,
        } => {
            let p = MicrocanonicalParams {
                energy,
                shell_width,
                proposal_scale,
                burn_in,
                thinning,
                seed,
                search_budget,
            };
            sample_microcanonical(g, &template, &p, c.count)
        }
    }
}

fn ensemble_invariance(cfg: &ExperimentConfig, out: &OutputDir) -> Result<serde_json::Value> {
    let c = cfg.ensemble_invariance.as_ref().expect("resolved");
    let mut e = engine(cfg)?;
    if let Some(fault) = c.fault {
        log::warn!("running with injected velocity fault {fault:?}");
        e = e.with_fault(fault)?;
    }
    let sample = draw_ensemble(cfg, e.green())?;
    out.write_with("sample.jsonl", |w| sample.write_jsonl(w))?;
    let spec = InvarianceSpec {
        m: c.m,
        t: c.t,
        distribution: c.distribution,
        seed: TauSchedule::derive_seed(cfg.seed(), 1),
        level: c.level,
        observables: c.observables.clone(),
    };
    let report = invariance_test(&e, &sample, &spec)?;
    out.write_with("invariance.csv", |w| {
        writeln!(w, "observable,ks,critical,passed")?;
        for r in &report.rows {
            writeln!(w, "{},{:?},{:?},{}", r.observable.name(), r.ks, r.critical, r.passed)?;
        }
        Ok(())
    })?;
    Ok(json!({
        "samples": sample.len(),
        "acceptance_rate": sample.acceptance_rate(),
        "autocorrelation": sample.autocorrelation(),
        "fault": c.fault,
        "report": report,
        "all_passed": report.all_passed(),
    }))
}

fn green_table(cfg: &ExperimentConfig, out: &OutputDir) -> Result<serde_json::Value> {
    let c = cfg.green_table.as_ref().expect("resolved");
    let g = green(cfg)?;
    let table = build_kernel_table(&g, c.grid_size)?;
    let sidecar = table.write(&out.path(&c.file_name), &g)?;
    Ok(serde_json::to_value(sidecar)?)
}

fn mindist_survey(cfg: &ExperimentConfig, out: &OutputDir) -> Result<serde_json::Value> {
    let c = cfg.mindist_survey.as_ref().expect("resolved");
    let e = engine(cfg)?;
    let spec = InitialSpec::Random {
        intensities: c.intensities.clone(),
        min_distance: 0.0,
    };
    let mins: Vec<(f64, f64)> = (0..c.count as u64)
        .into_par_iter()
        .map(|k| {
            let x = draw_initial(&spec, TauSchedule::derive_seed(cfg.seed(), 2 * k))?;
            let mut sched = TauSchedule::with_stream(c.distribution, cfg.seed(), k);
            let traj = trajectory(&e, &x, c.flow, &c.times, &mut sched)?;
            let m = traj
                .samples()
                .iter()
                .map(min_pair_distance)
                .fold(f64::INFINITY, f64::min);
            Ok((min_pair_distance(&x), m))
        })
        .collect::<Result<_>>()?;
    out.write_with("survey.csv", |w| {
        writeln!(w, "index,initial_min_distance,min_over_time")?;
        for (k, (d0, m)) in mins.iter().enumerate() {
            writeln!(w, "{k},{d0:?},{m:?}")?;
        }
        Ok(())
    })?;
    let mut sorted: Vec<f64> = mins.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    out.write_with("cdf.csv", |w| {
        writeln!(w, "min_over_time,cdf")?;
        for (k, v) in sorted.iter().enumerate() {
            writeln!(w, "{v:?},{:?}", (k + 1) as f64 / n as f64)?;
        }
        Ok(())
    })?;
    let q = |p: f64| sorted[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
    Ok(json!({
        "count": n,
        "flow": c.flow,
        "quantiles": { "0.01": q(0.01), "0.1": q(0.1), "0.5": q(0.5), "0.9": q(0.9) },
    }))
}
