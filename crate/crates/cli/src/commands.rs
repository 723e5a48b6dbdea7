//! Command implementations. Each returns a serializable report and writes
//! its files under the `--out` directory.

use std::collections::BTreeMap;
use std::path::Path;

use gatenet_core::dynamics::factorization_check;
use gatenet_core::fidelity::{fidelity_variance, ChannelPoint, FidelityReport};
use gatenet_core::liealg::{necessary_condition, LieReport};
use gatenet_core::network::to_physical_units;
use gatenet_core::operators::{max_abs_diff, CMatrix, C64};
use gatenet_core::trainer::{self, PerturbResult, PerturbSpec, SweepTable, TrainOutcome};
use serde::Serialize;

use crate::config::{Experiment, Resolved};
use crate::{parse_grid, parse_time, write_atomic, CliError, Command, EXIT_NOT_CONVERGED, EXIT_OK, VERSION};

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// Largest entry difference between `a` and `b` after removing the relative
/// global phase.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    max_abs_diff(&(a / phase), b)
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationSummary {
    pub factorizes: bool,
    pub schmidt_ratio: f64,
    /// Phase-aligned distance between the register factor and the target.
    pub register_distance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub version: &'static str,
    pub preset: String,
    pub experiment: Experiment,
    pub params: BTreeMap<String, f64>,
    pub ancilla_params: Vec<f64>,
    pub f_bar: f64,
    pub expected_fbar: Option<f64>,
    pub sampled: FidelityReport,
    pub factorization: Option<FactorizationSummary>,
}

pub fn evaluate(r: &Resolved, samples: usize, seed: u64) -> Result<EvalReport, CliError> {
    let point = ChannelPoint::new(&r.spec, &r.target, &r.params)?;
    let ancilla = r.spec.ancilla_state(&r.params)?;
    let sampled = fidelity_variance(&r.spec, &r.params, &ancilla, &r.target, samples, seed)?;
    let factorization = if r.spec.ancillae().is_empty() {
        None
    } else {
        let u = gatenet_core::operators::UnitaryMatrix::new(point.propagator().clone())?;
        let positions: Vec<usize> = (0..r.spec.register().len()).collect();
        let f = factorization_check(&u, &positions)?;
        Some(FactorizationSummary {
            factorizes: f.factorizes,
            schmidt_ratio: f.schmidt_ratio(),
            register_distance: f
                .factorizes
                .then(|| phase_aligned_distance(&f.register_factor, r.target.unitary.matrix())),
        })
    };
    Ok(EvalReport {
        version: VERSION,
        preset: r.name.clone(),
        experiment: r.experiment.clone(),
        params: r.named_params(),
        ancilla_params: r.params.ancilla.clone(),
        f_bar: point.avg_fidelity(),
        expected_fbar: r.expected_fbar,
        sampled,
        factorization,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub version: &'static str,
    pub preset: String,
    pub experiment: Experiment,
    pub success: bool,
    pub restarts_run: usize,
    pub final_fbars: Vec<f64>,
    pub best_fbar: Option<f64>,
    pub best_restart: Option<usize>,
    pub best_params: Option<BTreeMap<String, f64>>,
    pub best_wall_time_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub f_bar: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub version: &'static str,
    pub preset: String,
    pub group: String,
    pub seed: u64,
    pub points: usize,
    pub global_maximum: Option<Extremum>,
    pub local_maxima: Vec<Extremum>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbReport {
    pub version: &'static str,
    pub preset: String,
    pub experiment: Experiment,
    pub unperturbed_fbar: f64,
    pub epsilon: f64,
    pub num_draws: usize,
    pub seed: u64,
    pub mean: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LieCheckReport {
    pub version: &'static str,
    pub preset: String,
    pub dropped: Vec<String>,
    pub groups: Vec<String>,
    #[serde(flatten)]
    pub report: LieReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitRow {
    pub group: String,
    pub value: f64,
    pub mhz: f64,
    pub reference_mhz: Option<f64>,
    pub rel_diff: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitsReport {
    pub version: &'static str,
    pub preset: String,
    pub gate_time_s: f64,
    pub rows: Vec<UnitRow>,
}

pub fn train(r: &Resolved, seed: Option<u64>) -> Result<(TrainReport, TrainOutcome), CliError> {
    let mut cfg = r.experiment.train.clone();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let outcome = trainer::train(&r.spec, &r.target, &cfg)?;
    let best = outcome.best.as_ref();
    let mut experiment = r.experiment.clone();
    experiment.train = cfg;
    let report = TrainReport {
        version: VERSION,
        preset: r.name.clone(),
        experiment,
        success: outcome.success,
        restarts_run: outcome.restarts_run,
        final_fbars: outcome.final_fbars.clone(),
        best_fbar: best.map(|t| t.final_fbar),
        best_restart: best.map(|t| t.restart),
        best_params: best.map(|t| {
            r.spec
                .group_names()
                .iter()
                .cloned()
                .zip(t.final_params.values.iter().copied())
                .collect()
        }),
        best_wall_time_s: best.map(|t| t.wall_time_s),
    };
    Ok((report, outcome))
}

pub fn sweep(r: &Resolved, group: &str, grid: &[f64], probes: usize, seed: u64) -> Result<(SweepReport, SweepTable), CliError> {
    let table = trainer::sweep(&r.spec, &r.target, &r.params, group, grid, probes, seed)?;
    let ext = |i: usize| Extremum { value: table.rows[i].value, f_bar: table.rows[i].f_bar };
    let report = SweepReport {
        version: VERSION,
        preset: r.name.clone(),
        group: group.to_string(),
        seed,
        points: table.rows.len(),
        global_maximum: table.global_maximum().map(ext),
        local_maxima: table.local_maxima().into_iter().map(ext).collect(),
    };
    Ok((report, table))
}

pub fn perturb(r: &Resolved, pspec: &PerturbSpec) -> Result<(PerturbReport, PerturbResult), CliError> {
    let res = trainer::perturb_study(&r.spec, &r.target, &r.params, pspec)?;
    let mut experiment = r.experiment.clone();
    experiment.perturb = pspec.clone();
    let report = PerturbReport {
        version: VERSION,
        preset: r.name.clone(),
        experiment,
        unperturbed_fbar: ChannelPoint::new(&r.spec, &r.target, &r.params)?.avg_fidelity(),
        epsilon: pspec.epsilon,
        num_draws: pspec.num_draws,
        seed: pspec.seed,
        mean: res.mean,
        std_err: res.std_err,
        min: res.min,
        max: res.max,
    };
    Ok((report, res))
}

pub fn liecheck(r: &Resolved, drop: &[String]) -> Result<LieCheckReport, CliError> {
    let mut r = r.clone();
    for g in drop {
        r.drop_group(g)?;
    }
    let report = necessary_condition(&r.spec, &r.target)?;
    Ok(LieCheckReport {
        version: VERSION,
        preset: r.name.clone(),
        dropped: drop.to_vec(),
        groups: r.spec.group_names().to_vec(),
        report,
    })
}

pub fn units(r: &Resolved, gate_time: f64) -> Result<UnitsReport, CliError> {
    let mhz = to_physical_units(&r.params.values, gate_time)?;
    let rows = r
        .spec
        .group_names()
        .iter()
        .zip(&r.params.values)
        .zip(mhz)
        .zip(&r.reference_mhz)
        .map(|(((g, &value), mhz), &reference)| UnitRow {
            group: g.clone(),
            value,
            mhz,
            reference_mhz: reference,
            rel_diff: reference.map(|m| (mhz - m).abs() / m.abs()),
        })
        .collect();
    Ok(UnitsReport { version: VERSION, preset: r.name.clone(), gate_time_s: gate_time, rows })
}

fn perturb_csv(res: &PerturbResult) -> String {
    let mut out = String::from("draw,f_bar\n");
    for (k, f) in res.draws.iter().enumerate() {
        out.push_str(&format!("{k},{f}\n"));
    }
    out
}

fn out_file(dir: &Path, name: &str) -> std::path::PathBuf {
    dir.join(name)
}

pub fn dispatch(cmd: &Command) -> Result<i32, CliError> {
    match cmd {
        Command::Eval { input, seed, samples } => {
            let r = input.resolve()?;
            let rep = evaluate(&r, *samples, *seed)?;
            println!("preset      {}", rep.preset);
            println!("F_bar       {:.6}", rep.f_bar);
            if let Some(e) = rep.expected_fbar {
                println!("expected    {e:.6}");
            }
            println!(
                "F_psi       mean {:.6}  var {:.3e}  ({} Haar states, seed {})",
                rep.sampled.sample_mean, rep.sampled.sample_variance, rep.sampled.num_samples, rep.sampled.seed
            );
            if let Some(f) = &rep.factorization {
                let dist = f.register_distance.map_or("-".to_string(), |d| format!("{d:.2e}"));
                println!(
                    "factorizes  {}  (schmidt ratio {:.2e}, register distance {dist})",
                    f.factorizes, f.schmidt_ratio
                );
            }
            write_atomic(&out_file(&input.out, "results.json"), &to_json(&rep))?;
            Ok(EXIT_OK)
        }
        Command::Train { input, seed } => {
            let r = input.resolve()?;
            let (rep, outcome) = train(&r, *seed)?;
            if let Some(best) = &outcome.best {
                write_atomic(&out_file(&input.out, "trace.json"), &to_json(best))?;
                write_atomic(&out_file(&input.out, "trace.csv"), &best.checkpoints_csv())?;
            }
            write_atomic(&out_file(&input.out, "results.json"), &to_json(&rep))?;
            println!("restarts    {}", rep.restarts_run);
            match rep.best_fbar {
                Some(f) => println!("best F_bar  {f:.9} (restart {})", rep.best_restart.unwrap_or(0)),
                None => println!("best F_bar  -"),
            }
            println!("converged   {}", rep.success);
            Ok(if rep.success { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Sweep { input, group, grid, probes, seed } => {
            let r = input.resolve()?;
            let grid = parse_grid(grid)?;
            let (rep, table) = sweep(&r, group, &grid, *probes, *seed)?;
            write_atomic(&out_file(&input.out, "sweep.csv"), &table.to_csv())?;
            write_atomic(&out_file(&input.out, "results.json"), &to_json(&rep))?;
            if let Some(g) = &rep.global_maximum {
                println!("global max  {} = {}  F_bar {:.6}", rep.group, g.value, g.f_bar);
            }
            for m in &rep.local_maxima {
                println!("local max   {} = {}  F_bar {:.6}", rep.group, m.value, m.f_bar);
            }
            Ok(EXIT_OK)
        }
        Command::Perturb { input, eps, draws, seed, include_ancilla } => {
            let r = input.resolve()?;
            let pspec = PerturbSpec {
                epsilon: *eps,
                num_draws: *draws,
                include_ancilla_angles: *include_ancilla || r.experiment.perturb.include_ancilla_angles,
                seed: *seed,
            };
            let (rep, res) = perturb(&r, &pspec)?;
            write_atomic(&out_file(&input.out, "perturb.csv"), &perturb_csv(&res))?;
            write_atomic(&out_file(&input.out, "results.json"), &to_json(&rep))?;
            println!("epsilon     {}", rep.epsilon);
            println!("draws       {} (seed {})", rep.num_draws, rep.seed);
            println!("mean F_bar  {:.6} +- {:.1e}", rep.mean, rep.std_err);
            println!("min / max   {:.6} / {:.6}", rep.min, rep.max);
            Ok(EXIT_OK)
        }
        Command::Liecheck { input, drop } => {
            let r = input.resolve()?;
            let rep = liecheck(&r, drop)?;
            write_atomic(&out_file(&input.out, "liecheck.json"), &to_json(&rep))?;
            println!("{}", if rep.report.passes { "PASS" } else { "FAIL" });
            println!("algebra dim {}", rep.report.algebra_dim);
            println!("residual    {:.3e}", rep.report.residual);
            println!("branch      {}", rep.report.branch);
            println!("note        {}", rep.report.caveat);
            Ok(EXIT_OK)
        }
        Command::Units { input, time } => {
            let r = input.resolve()?;
            let rep = units(&r, parse_time(time)?)?;
            write_atomic(&out_file(&input.out, "units.json"), &to_json(&rep))?;
            println!("{:<10} {:>12} {:>12} {:>12} {:>9}", "group", "value", "MHz", "reference", "rel.diff");
            for row in &rep.rows {
                let reference = row.reference_mhz.map_or("-".into(), |m| format!("{m:.4}"));
                let rel = row.rel_diff.map_or("-".into(), |d| format!("{:.3}%", 100.0 * d));
                println!("{:<10} {:>12.4} {:>12.4} {:>12} {:>9}", row.group, row.value, row.mhz, reference, rel);
            }
            Ok(EXIT_OK)
        }
    }
}
