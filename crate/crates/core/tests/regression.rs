use approx::assert_relative_eq;
use gatenet_core::fidelity::{avg_fidelity, fidelity_variance, grad_avg_fidelity, haar_state_from_seed, ChannelPoint};
use gatenet_core::gates;
use gatenet_core::liealg::{bottom_up, necessary_condition, CandidateGroup};
use gatenet_core::network::{NetworkSpec, ParameterVector};
use gatenet_core::operators::DensityMatrix;
use gatenet_core::presets;
use gatenet_core::trainer::{self, perturb_study, refine, sgd_run, sweep, PerturbSpec, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fbar(spec: &NetworkSpec, lambda: &ParameterVector, target: &gates::GateTarget) -> f64 {
    ChannelPoint::new(spec, target, lambda).unwrap().avg_fidelity()
}

#[test]
fn toffoli_worst_case_over_haar_states() {
    let p = presets::toffoli();
    let point = ChannelPoint::new(&p.spec, &p.target, &p.params).unwrap();
    let worst = (0..100)
        .map(|k| point.state_fidelity(&haar_state_from_seed(8, k)).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(worst >= 0.999, "{worst}");
}

#[test]
fn toffoli_flips_target_on_110() {
    let p = presets::toffoli();
    let anc = p.spec.ancilla_state(&p.params).unwrap();
    let rho = DensityMatrix::basis(8, 0b110);
    let out = gatenet_core::dynamics::apply_channel(&p.spec, &p.params, &anc, &rho).unwrap();
    assert!(out.matrix()[(0b111, 0b111)].re >= 0.999);
    let idle = gatenet_core::dynamics::apply_channel(&p.spec, &p.params, &anc, &DensityMatrix::basis(8, 0b010)).unwrap();
    assert!(idle.matrix()[(0b010, 0b010)].re >= 0.999);
}

#[test]
fn toffoli_preset_is_stationary() {
    let p = presets::toffoli();
    let g = grad_avg_fidelity(&p.spec, &p.params, &p.target).unwrap();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    // parameters are quoted to four digits, so only approximately stationary
    assert!(norm < 5e-3, "{norm}");
}

#[test]
fn gradient_rescales_with_multiplier() {
    // Doubling every multiplier of a group doubles its derivative at the
    // halved coordinate.
    let p = presets::toffoli();
    let mut file = p.network.clone();
    for f in file.fields.iter_mut().filter(|f| f.group == "h_x_3") {
        f.mult *= 2.0;
    }
    let doubled = NetworkSpec::from_file(&file).unwrap();
    let g = p.spec.group_id("h_x_3").unwrap();
    let mut lambda = p.params.clone();
    lambda.values[0] += 0.3;
    let mut half = lambda.clone();
    half.values[g] /= 2.0;
    let a = grad_avg_fidelity(&p.spec, &lambda, &p.target).unwrap();
    let b = grad_avg_fidelity(&doubled, &half, &p.target).unwrap();
    assert_relative_eq!(b[g], 2.0 * a[g], epsilon = 1e-10);
    assert_relative_eq!(fbar(&p.spec, &lambda, &p.target), fbar(&doubled, &half, &p.target), epsilon = 1e-12);
}

#[test]
fn variance_grows_away_from_the_optimum() {
    let p = presets::toffoli();
    let anc = p.spec.ancilla_state(&p.params).unwrap();
    let at = fidelity_variance(&p.spec, &p.params, &anc, &p.target, 1000, 1).unwrap();
    let mut off = p.params.clone();
    for v in off.values.iter_mut() {
        *v += 0.5;
    }
    let away = fidelity_variance(&p.spec, &off, &anc, &p.target, 1000, 1).unwrap();
    assert!(at.sample_variance < away.sample_variance);
}

#[test]
fn bottom_up_restores_missing_field() {
    let p = presets::toffoli();
    let mut base = p.network.clone();
    let (removed, kept): (Vec<_>, Vec<_>) = base.fields.drain(..).partition(|f| f.group == "h_x_3");
    base.fields = kept;
    assert!(!removed.is_empty());
    let base_spec = NetworkSpec::from_file(&base).unwrap();
    assert!(!necessary_condition(&base_spec, &p.target).unwrap().passes);
    let cand = CandidateGroup { name: "h_x_3".into(), couplings: vec![], fields: removed };
    let rep = bottom_up(&base, &[cand], &p.target).unwrap();
    assert!(rep.passes);
    assert_eq!(rep.steps.len(), 2);
    assert_eq!(rep.steps[1].algebra_dim, 39);
}

#[test]
fn sgd_switches_immediately_at_the_optimum() {
    let p = presets::remote_sqswap(1, 0.0).unwrap();
    let cfg = TrainConfig::default();
    let t = sgd_run(&p.spec, &p.target, &cfg, Some(&p.params), 0, 5).unwrap();
    assert!(t.switched());
    assert!(t.iterations.is_empty());
    assert_eq!(t.checkpoints.len(), 1);
}

#[test]
fn refine_recovers_perturbed_toffoli() {
    let p = presets::toffoli();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut start = p.params.clone();
    for v in start.values.iter_mut() {
        *v += 0.05 * rng.random_range(-1.0..1.0);
    }
    let f0 = fbar(&p.spec, &start, &p.target);
    let cfg = TrainConfig { max_refine_iters: 500, ..Default::default() };
    let t = refine(&p.spec, &p.target, &start, &cfg).unwrap();
    assert!(t.final_fbar >= 0.9998, "{f0} -> {}", t.final_fbar);
    assert!(t.refine.windows(2).all(|w| w[1].f_bar > w[0].f_bar));
}

#[test]
fn toy_fidelity_matches_closed_form() {
    // U = exp(-i h X / 2): |Tr(X^dag U)| = 2 sin(h/2), so F_bar = (1 + 2 sin^2(h/2)) / 3.
    let spec = NetworkSpec::from_file(&presets::toy_network()).unwrap();
    let x = gates::pauli_x();
    for k in 0..20 {
        let h = -6.0 + 0.6 * k as f64;
        let s = (h / 2.0).sin();
        assert_relative_eq!(fbar(&spec, &spec.params(vec![h]), &x), (1.0 + 2.0 * s * s) / 3.0, epsilon = 1e-12);
    }
}

#[test]
fn refine_climbs_toy_to_the_gate() {
    let spec = NetworkSpec::from_file(&presets::toy_network()).unwrap();
    let x = gates::pauli_x();
    let t = refine(&spec, &x, &spec.params(vec![2.0]), &TrainConfig::default()).unwrap();
    assert!(t.final_fbar > 1.0 - 1e-9);
    assert_relative_eq!(t.final_params.values[0], std::f64::consts::PI, epsilon = 1e-4);
}

#[test]
fn perfect_state_fidelities_give_perfect_average() {
    let p = presets::fredkin();
    let point = ChannelPoint::new(&p.spec, &p.target, &p.params).unwrap();
    let all = (0..100).all(|k| point.state_fidelity(&haar_state_from_seed(8, 100 + k)).unwrap() > 1.0 - 1e-9);
    assert!(all);
    assert!(point.avg_fidelity() >= 0.999);
}

#[test]
fn detached_group_leaves_fidelity_constant() {
    // An ancilla-only field cannot touch a register that starts uncoupled.
    let mut file = presets::toy_network();
    file.num_qubits = 2;
    file.ancillae = vec![1];
    file.fields = vec![
        gatenet_core::network::FieldEntry { site: 0, axis: "x".into(), group: "h_x".into(), mult: 1.0 },
        gatenet_core::network::FieldEntry { site: 1, axis: "z".into(), group: "idle".into(), mult: 1.0 },
    ];
    let spec = NetworkSpec::from_file(&file).unwrap();
    let x = gates::pauli_x();
    let base = fbar(&spec, &spec.params(vec![1.3, 0.0]), &x);
    for v in [-4.0, 0.5, 9.0] {
        let g = spec.group_id("idle").unwrap();
        let mut values = vec![1.3, 1.3];
        values[g] = v;
        let other = 1 - g;
        values[other] = 1.3;
        assert_relative_eq!(fbar(&spec, &spec.params(values), &x), base, epsilon = 1e-12);
    }
}

#[test]
fn learning_rate_schedule() {
    let cfg = TrainConfig { eps0: 0.3, ..Default::default() };
    for m in [1usize, 4, 9, 100] {
        assert_eq!(cfg.learning_rate(m), 0.3 / (m as f64).sqrt());
    }
}

#[test]
fn single_point_sweep_hits_the_optimum() {
    let p = presets::toffoli();
    let t = sweep(&p.spec, &p.target, &p.params, "J_xx_34", &[15.06], 4, 0).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!(t.rows[0].f_bar >= 0.9998);
    assert_eq!(t.global_maximum(), Some(0));
}

#[test]
fn zero_noise_perturbation_is_exact() {
    let p = presets::toffoli();
    let r = perturb_study(
        &p.spec,
        &p.target,
        &p.params,
        &PerturbSpec { epsilon: 0.0, num_draws: 20, include_ancilla_angles: true, seed: 3 },
    )
    .unwrap();
    assert!(r.draws.iter().all(|&f| f == r.draws[0]));
    assert!(r.std_err < 1e-15);
    let anc = p.spec.ancilla_state(&p.params).unwrap();
    assert_relative_eq!(r.mean, avg_fidelity(&p.spec, &p.params, &anc, &p.target).unwrap(), epsilon = 1e-12);
}

#[test]
fn perturbation_is_reproducible() {
    let p = presets::toffoli();
    let spec = PerturbSpec { epsilon: 0.1, num_draws: 16, include_ancilla_angles: false, seed: 9 };
    let a = perturb_study(&p.spec, &p.target, &p.params, &spec).unwrap();
    let b = perturb_study(&p.spec, &p.target, &p.params, &spec).unwrap();
    assert_eq!(a.draws, b.draws);
}

#[test]
fn training_is_deterministic() {
    let spec = NetworkSpec::from_file(&presets::toy_network()).unwrap();
    let cfg = TrainConfig { num_restarts: 3, batch: 3, seed: 4, max_sgd_iters: 200, ..Default::default() };
    let a = trainer::train(&spec, &gates::pauli_x(), &cfg).unwrap();
    let b = trainer::train(&spec, &gates::pauli_x(), &cfg).unwrap();
    assert_eq!(a.final_fbars, b.final_fbars);
    let ja = serde_json::to_string(&a.best).unwrap();
    let jb = serde_json::to_string(&b.best).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn ancilla_phase_matters_for_toffoli() {
    let mut p = presets::toffoli();
    let f = fbar(&p.spec, &p.params, &p.target);
    p.set("xi", 0.0).unwrap();
    let g = fbar(&p.spec, &p.params, &p.target);
    assert!(f > g);
    assert_relative_eq!(f, 0.999809, epsilon = 5e-6);
}
