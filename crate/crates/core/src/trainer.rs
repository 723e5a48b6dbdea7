//! Learning loop: stochastic ascent on single-state fidelities, then
//! deterministic refinement of the average fidelity, with restarts.
//! Also perturbation studies and one-parameter landscape sweeps.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{haar_state_from_seed, mean_variance, ChannelPoint};
use crate::gates::GateTarget;
use crate::network::{NetworkSpec, ParameterVector};

/// Refinement stops once the gradient norm drops below this.
pub const REFINE_GRAD_TOL: f64 = 1e-9;
/// Smallest line-search step tried before giving up.
pub const REFINE_MIN_STEP: f64 = 1e-12;
pub const REFINE_INITIAL_STEP: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub eps0: f64,
    /// Gradient steps per sampled state.
    pub inner_steps: usize,
    pub switch_threshold: f64,
    pub target_fbar: f64,
    pub max_sgd_iters: usize,
    pub max_refine_iters: usize,
    pub num_restarts: usize,
    pub init_range: [f64; 2],
    pub seed: u64,
    pub checkpoint_every: usize,
    /// Restarts evaluated together before checking for success.
    pub batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eps0: 0.3,
            inner_steps: 1,
            switch_threshold: 0.95,
            target_fbar: 1.0 - 1e-6,
            max_sgd_iters: 5000,
            max_refine_iters: 2000,
            num_restarts: 10,
            init_range: [-10.0, 10.0],
            seed: 0,
            checkpoint_every: 50,
            batch: 4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            return bad("eps0 must be positive");
        }
        if self.inner_steps == 0 {
            return bad("inner_steps must be at least 1");
        }
        if !(0.0 < self.switch_threshold && self.switch_threshold < self.target_fbar && self.target_fbar <= 1.0) {
            return bad("need 0 < switch_threshold < target_fbar <= 1");
        }
        let [lo, hi] = self.init_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("init_range must be a finite interval [lo, hi]");
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        Ok(())
    }

    /// Learning rate at iteration `m >= 1`.
    pub fn learning_rate(&self, m: usize) -> f64 {
        self.eps0 / (m as f64).sqrt()
    }
}

/// One stochastic iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub m: usize,
    pub eps: f64,
    pub state_seed: u64,
    pub f_psi_before: f64,
    pub f_psi_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub m: usize,
    pub f_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineRecord {
    pub iter: usize,
    pub f_bar: f64,
    pub step: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A checkpoint exceeded the switch threshold.
    Switched,
    MaxSgdIters,
    NonFiniteGradient,
    GradientTolerance,
    StepTolerance,
    MaxRefineIters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub restart: usize,
    pub seed: u64,
    pub config: TrainConfig,
    pub initial: ParameterVector,
    pub iterations: Vec<IterationRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub refine: Vec<RefineRecord>,
    pub sgd_termination: Option<Termination>,
    pub refine_termination: Option<Termination>,
    pub final_params: ParameterVector,
    pub final_fbar: f64,
    pub success: bool,
    /// Not serialized, so traces from equal seeds compare byte for byte.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl TrainTrace {
    fn empty(restart: usize, seed: u64, config: &TrainConfig, start: &ParameterVector, f: f64) -> TrainTrace {
        TrainTrace {
            restart,
            seed,
            config: config.clone(),
            initial: start.clone(),
            iterations: Vec::new(),
            checkpoints: Vec::new(),
            refine: Vec::new(),
            sgd_termination: None,
            refine_termination: None,
            final_params: start.clone(),
            final_fbar: f,
            success: f >= config.target_fbar,
            wall_time_s: 0.0,
        }
    }

    pub fn switched(&self) -> bool {
        self.sgd_termination == Some(Termination::Switched)
    }

    /// Checkpoint table as CSV (`m,f_bar`), then refinement rows.
    pub fn checkpoints_csv(&self) -> String {
        let mut out = String::from("phase,m,f_bar\n");
        for c in &self.checkpoints {
            out.push_str(&format!("sgd,{},{}\n", c.m, c.f_bar));
        }
        for r in &self.refine {
            out.push_str(&format!("refine,{},{}\n", r.iter, r.f_bar));
        }
        out
    }
}

/// SplitMix64 finalizer; decorrelates seeds derived from one master seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn avg_fidelity_at(spec: &NetworkSpec, target: &GateTarget, lambda: &ParameterVector) -> Result<f64> {
    Ok(ChannelPoint::new(spec, target, lambda)?.avg_fidelity())
}

fn add_scaled(spec: &NetworkSpec, lambda: &ParameterVector, dir: &[f64], s: f64) -> Result<ParameterVector> {
    let flat: Vec<f64> = lambda.flat().iter().zip(dir).map(|(x, d)| x + s * d).collect();
    spec.params_from_flat(&flat)
}

fn check_inputs(spec: &NetworkSpec, target: &GateTarget) -> Result<()> {
    if target.dim() != spec.register_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.register_dim(),
            found: target.dim(),
        });
    }
    Ok(())
}

/// Uniform initial point on `init_range` for every free parameter.
pub fn random_start(spec: &NetworkSpec, config: &TrainConfig, rng: &mut impl Rng) -> Result<ParameterVector> {
    let [lo, hi] = config.init_range;
    let flat: Vec<f64> = (0..spec.num_free_params())
        .map(|_| if hi > lo { rng.random_range(lo..hi) } else { lo })
        .collect();
    spec.params_from_flat(&flat)
}

/// Stochastic phase. Starts from `start` or a random point drawn from `seed`.
pub fn sgd_run(
    spec: &NetworkSpec,
    target: &GateTarget,
    config: &TrainConfig,
    start: Option<&ParameterVector>,
    restart: usize,
    seed: u64,
) -> Result<TrainTrace> {
    config.validate()?;
    check_inputs(spec, target)?;
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambda = match start {
        Some(p) => {
            spec.validate_params(p)?;
            p.clone()
        }
        None => random_start(spec, config, &mut rng)?,
    };
    let dim = spec.register_dim();
    let f0 = avg_fidelity_at(spec, target, &lambda)?;
    let mut trace = TrainTrace::empty(restart, seed, config, &lambda, f0);
    trace.checkpoints.push(Checkpoint { m: 0, f_bar: f0 });
    trace.sgd_termination = Some(Termination::MaxSgdIters);
    if f0 > config.switch_threshold {
        trace.sgd_termination = Some(Termination::Switched);
    } else {
        for m in 1..=config.max_sgd_iters {
            let eps = config.learning_rate(m);
            let state_seed = rng.next_u64();
            let psi = haar_state_from_seed(dim, state_seed);
            let mut point = ChannelPoint::new(spec, target, &lambda)?;
            let f_before = point.state_fidelity(&psi)?;
            let mut finite = true;
            for _ in 0..config.inner_steps {
                let grad = point.grad_state_fidelity(&psi)?;
                if grad.iter().any(|g| !g.is_finite()) {
                    finite = false;
                    break;
                }
                lambda = add_scaled(spec, &lambda, &grad, eps)?;
                point = ChannelPoint::new(spec, target, &lambda)?;
            }
            if !finite {
                trace.sgd_termination = Some(Termination::NonFiniteGradient);
                break;
            }
            let f_after = point.state_fidelity(&psi)?;
            trace.iterations.push(IterationRecord {
                m,
                eps,
                state_seed,
                f_psi_before: f_before,
                f_psi_after: f_after,
            });
            if m % config.checkpoint_every == 0 || m == config.max_sgd_iters {
                let f = point.avg_fidelity();
                trace.checkpoints.push(Checkpoint { m, f_bar: f });
                if f > config.switch_threshold {
                    trace.sgd_termination = Some(Termination::Switched);
                    break;
                }
            }
        }
    }
    trace.final_fbar = trace.checkpoints.last().map(|c| c.f_bar).unwrap_or(f0);
    trace.final_params = lambda;
    trace.success = trace.final_fbar >= config.target_fbar;
    trace.wall_time_s = clock.elapsed().as_secs_f64();
    Ok(trace)
}

/// Gradient ascent on `F_bar` with a halving line search. Each accepted
/// step strictly increases `F_bar`; the next search starts from twice the
/// accepted step.
pub fn refine(
    spec: &NetworkSpec,
    target: &GateTarget,
    start: &ParameterVector,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    check_inputs(spec, target)?;
    spec.validate_params(start)?;
    let f0 = avg_fidelity_at(spec, target, start)?;
    let mut trace = TrainTrace::empty(0, config.seed, config, start, f0);
    refine_into(spec, target, config, &mut trace)?;
    Ok(trace)
}

fn refine_into(spec: &NetworkSpec, target: &GateTarget, config: &TrainConfig, trace: &mut TrainTrace) -> Result<()> {
    let clock = Instant::now();
    let mut lambda = trace.final_params.clone();
    let mut point = ChannelPoint::new(spec, target, &lambda)?;
    let mut f = point.avg_fidelity();
    let mut step = REFINE_INITIAL_STEP;
    let mut termination = Termination::MaxRefineIters;
    for iter in 0..config.max_refine_iters {
        let grad = point.grad_avg_fidelity()?;
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !gnorm.is_finite() {
            termination = Termination::NonFiniteGradient;
            break;
        }
        if gnorm < REFINE_GRAD_TOL {
            termination = Termination::GradientTolerance;
            break;
        }
        let mut accepted = None;
        while step >= REFINE_MIN_STEP {
            let cand = add_scaled(spec, &lambda, &grad, step)?;
            let cp = ChannelPoint::new(spec, target, &cand)?;
            let fc = cp.avg_fidelity();
            if fc > f {
                accepted = Some((cand, cp, fc));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, cp, fc)) => {
                lambda = cand;
                f = fc;
                trace.refine.push(RefineRecord { iter, f_bar: f, step, grad_norm: gnorm });
                point = cp;
                step *= 2.0;
            }
            None => {
                termination = Termination::StepTolerance;
                break;
            }
        }
    }
    trace.refine_termination = Some(termination);
    trace.final_params = lambda;
    trace.final_fbar = f;
    trace.success = f >= config.target_fbar;
    trace.wall_time_s += clock.elapsed().as_secs_f64();
    Ok(())
}

/// Result of `train`: the best restart and a summary of all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub best: Option<TrainTrace>,
    pub restarts_run: usize,
    pub final_fbars: Vec<f64>,
    pub success: bool,
}

fn run_restart(spec: &NetworkSpec, target: &GateTarget, config: &TrainConfig, r: usize) -> Result<TrainTrace> {
    let seed = derive_seed(config.seed, r as u64);
    let mut trace = sgd_run(spec, target, config, None, r, seed)?;
    if trace.switched() {
        refine_into(spec, target, config, &mut trace)?;
    }
    Ok(trace)
}

/// Restarts run in parallel batches of `config.batch`; training stops after
/// the first batch containing a success. The best trace (highest final
/// `F_bar`, lowest restart index on ties) is returned.
pub fn train(spec: &NetworkSpec, target: &GateTarget, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    check_inputs(spec, target)?;
    let mut traces: Vec<TrainTrace> = Vec::new();
    let mut next = 0;
    while next < config.num_restarts {
        let end = (next + config.batch).min(config.num_restarts);
        let batch: Vec<TrainTrace> = (next..end)
            .into_par_iter()
            .map(|r| run_restart(spec, target, config, r))
            .collect::<Result<_>>()?;
        let done = batch.iter().any(|t| t.success);
        traces.extend(batch);
        next = end;
        if done {
            break;
        }
    }
    let final_fbars = traces.iter().map(|t| t.final_fbar).collect();
    let restarts_run = traces.len();
    let best = traces
        .into_iter()
        .reduce(|a, b| if b.final_fbar > a.final_fbar { b } else { a });
    let success = best.as_ref().is_some_and(|t| t.success);
    Ok(TrainOutcome { best, restarts_run, final_fbars, success })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbSpec {
    pub epsilon: f64,
    pub num_draws: usize,
    pub include_ancilla_angles: bool,
    pub seed: u64,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        PerturbSpec { epsilon: 0.0, num_draws: 200, include_ancilla_angles: false, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbResult {
    pub spec: PerturbSpec,
    pub draws: Vec<f64>,
    pub mean: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
}

/// `F_bar` at `lambda + epsilon * r` with `r_k` uniform on [0, 1], one
/// independent stream per draw.
pub fn perturb_study(
    spec: &NetworkSpec,
    target: &GateTarget,
    lambda: &ParameterVector,
    pspec: &PerturbSpec,
) -> Result<PerturbResult> {
    check_inputs(spec, target)?;
    spec.validate_params(lambda)?;
    if !(pspec.epsilon >= 0.0) || !pspec.epsilon.is_finite() {
        return Err(Error::InvalidInput("epsilon must be finite and nonnegative".into()));
    }
    if pspec.num_draws == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    let draws: Vec<f64> = (0..pspec.num_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(pspec.seed);
            rng.set_stream(k as u64);
            let mut p = lambda.clone();
            for v in &mut p.values {
                *v += pspec.epsilon * rng.random::<f64>();
            }
            if pspec.include_ancilla_angles {
                for v in &mut p.ancilla {
                    *v += pspec.epsilon * rng.random::<f64>();
                }
            }
            avg_fidelity_at(spec, target, &p)
        })
        .collect::<Result<_>>()?;
    let (mean, var) = mean_variance(&draws);
    Ok(PerturbResult {
        spec: pspec.clone(),
        mean,
        std_err: (var / draws.len() as f64).sqrt(),
        min: draws.iter().copied().fold(f64::INFINITY, f64::min),
        max: draws.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        draws,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub f_bar: f64,
    pub f_psi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub group: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Header `param_value,f_bar,f_psi_1,...` followed by one line per row.
    pub fn to_csv(&self) -> String {
        let probes = self.rows.first().map_or(0, |r| r.f_psi.len());
        let mut out = String::from("param_value,f_bar");
        for k in 1..=probes {
            out.push_str(&format!(",f_psi_{k}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.value, r.f_bar));
            for f in &r.f_psi {
                out.push_str(&format!(",{f}"));
            }
            out.push('\n');
        }
        out
    }

    /// Row indices of interior local maxima of `F_bar` (plateaus count once,
    /// at their first row).
    pub fn local_maxima(&self) -> Vec<usize> {
        let f: Vec<f64> = self.rows.iter().map(|r| r.f_bar).collect();
        let mut out = Vec::new();
        let mut i = 1;
        while i + 1 < f.len() {
            if f[i] > f[i - 1] {
                let mut j = i;
                while j + 1 < f.len() && f[j + 1] == f[i] {
                    j += 1;
                }
                if j + 1 < f.len() && f[j + 1] < f[i] {
                    out.push(i);
                }
                i = j + 1;
            } else {
                i += 1;
            }
        }
        out
    }

    /// Row index of the largest `F_bar` (first on ties).
    pub fn global_maximum(&self) -> Option<usize> {
        (0..self.rows.len()).reduce(|a, b| if self.rows[b].f_bar > self.rows[a].f_bar { b } else { a })
    }
}

/// Evaluate `F_bar` and `F_psi` for `probe_states` fixed Haar states while
/// one group takes each value in `grid`.
pub fn sweep(
    spec: &NetworkSpec,
    target: &GateTarget,
    lambda: &ParameterVector,
    group: &str,
    grid: &[f64],
    probe_states: usize,
    seed: u64,
) -> Result<SweepTable> {
    check_inputs(spec, target)?;
    spec.validate_params(lambda)?;
    let g = spec.group_id(group)?;
    if grid.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    let dim = spec.register_dim();
    let probes: Vec<_> = (0..probe_states)
        .map(|k| haar_state_from_seed(dim, derive_seed(seed, k as u64)))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&value| {
            let mut p = lambda.clone();
            p.values[g] = value;
            let point = ChannelPoint::new(spec, target, &p)?;
            let f_psi = probes.iter().map(|psi| point.state_fidelity(psi)).collect::<Result<_>>()?;
            Ok(SweepRow { value, f_bar: point.avg_fidelity(), f_psi })
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable { group: group.to_string(), seed, rows })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}
