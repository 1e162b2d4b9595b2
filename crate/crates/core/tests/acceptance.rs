//! Acceptance criteria. Each test prints one PASS/FAIL line to stderr
//! (uncaptured) and then asserts the criterion.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use marq::distq::{polyak_update, qrdqn_loss, quantile_huber_loss, QuantileQNet, TdSample};
use marq::numkit::{finite_diff_check, softmax, DenseNet};
use marq::regularizers::{
    cql_penalty, cross_entropy, entropy, kl_divergence, prepare_batch, total_loss, AgentModels, CqlMode,
    LossSample, RegularizerConfig, RegularizerVariant, SignMode,
};
use marq::replay::{AgentBuffer, Transition};
use marq::tabular::{
    cross_agent_iterate, fixed_point, value_iteration, QTable, TabularMDP, TabularPolicy, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
use marq::trainer::{run, MetricsRow, Trainer, TrainerConfig, Variant};
use marq::envs::{EnvKind, GridParams};

fn report(id: u32, name: &str, passed: bool, detail: &str) {
    let line = format!("{} [{id}] {name}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(passed, "criterion {id} ({name}) failed: {detail}");
}

fn random_obs(rng: &mut ChaCha8Rng, width: usize) -> Vec<f64> {
    (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// B*Q computed directly from the MDP tables.
fn optimality_backup(mdp: &TabularMDP, q: &QTable, s: usize, a: usize) -> f64 {
    let next: f64 = mdp
        .transition_row(s, a)
        .iter()
        .enumerate()
        .map(|(s2, p)| p * q.row(s2).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum();
    mdp.reward(s, a) + mdp.gamma() * next
}

#[test]
fn c01_cross_agent_iterate_underestimates() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut bound_ok = true;
    let mut mdps = 0;
    for alpha in [0.1, 1.0] {
        for _ in 0..60 {
            let ns = rng.gen_range(1..=16);
            let na = rng.gen_range(1..=4);
            let mdp = TabularMDP::random(ns, na, rng.gen_range(0.5..0.95), &mut rng).unwrap();
            let learner = TabularPolicy::random_positive(ns, na, &mut rng);
            let donor = TabularPolicy::random_positive(ns, na, &mut rng);
            let q = QTable::from_rows((0..ns).map(|_| random_obs(&mut rng, na).iter().map(|x| 5.0 * x).collect()).collect())
                .unwrap();
            let c = cross_agent_iterate(&mdp, &q, &learner, &donor, alpha).unwrap();
            for s in 0..ns {
                for a in 0..na {
                    let expected = optimality_backup(&mdp, &q, s, a) - alpha * learner.prob(s, a) / donor.prob(s, a);
                    worst = worst.max((c.get(s, a) - expected).abs());
                }
            }
            let star = value_iteration(&mdp, QTable::zeros(ns, na)).unwrap();
            let cross = fixed_point(QTable::zeros(ns, na), DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS, |q| {
                cross_agent_iterate(&mdp, q, &learner, &donor, alpha)
            })
            .unwrap();
            bound_ok &= star.converged && cross.converged;
            bound_ok &= cross.q.values().iter().zip(star.q.values()).all(|(c, s)| c <= s);
            mdps += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "cross-agent iterate formula and lower bound",
        worst <= 1e-10 && bound_ok && secs < 10.0,
        &format!("{mdps} MDPs, worst entry error {worst:.2e}, lower bound held: {bound_ok}, {secs:.2}s"),
    );
}

#[test]
fn c02_total_loss_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let variants = [
        ("cql_only", RegularizerVariant::None, SignMode::AsWritten),
        ("marq_shared", RegularizerVariant::SharedExperience, SignMode::AsWritten),
        ("marq_xent/as_written", RegularizerVariant::CrossEntropy, SignMode::AsWritten),
        ("marq_xent/prose", RegularizerVariant::CrossEntropy, SignMode::Prose),
    ];
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    let mut all_passed = true;
    for trial in 0..20 {
        let num_agents = rng.gen_range(2..=3);
        let obs = rng.gen_range(1..=4);
        let actions = rng.gen_range(2..=4);
        let k = rng.gen_range(1..=5);
        let hidden: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(3..=7)).collect();
        let one_hot = rng.gen::<bool>();
        let input = obs + if one_hot { num_agents } else { 0 };
        let kappa = rng.gen_range(0.5..2.0);
        let gamma = rng.gen_range(0.5..0.99);
        let online: Vec<QuantileQNet> =
            (0..num_agents).map(|_| QuantileQNet::new(input, &hidden, actions, k, &mut rng).unwrap()).collect();
        let target: Vec<QuantileQNet> =
            (0..num_agents).map(|_| QuantileQNet::new(input, &hidden, actions, k, &mut rng).unwrap()).collect();
        let models = AgentModels::new(online.iter().collect(), target.iter().collect(), one_hot).unwrap();
        let donor = rng.gen_range(1..num_agents);
        let mut buffer = AgentBuffer::new(donor, 32, obs, actions).unwrap();
        for _ in 0..rng.gen_range(3..=8) {
            buffer
                .push(Transition {
                    agent_id: donor,
                    obs: random_obs(&mut rng, obs),
                    action: rng.gen_range(0..actions),
                    reward: rng.gen_range(-1.0..1.0),
                    next_obs: random_obs(&mut rng, obs),
                    done: rng.gen::<f64>() < 0.3,
                })
                .unwrap();
        }
        let batch: Vec<&Transition> = buffer.iter().collect();
        for (name, variant, sign_mode) in variants {
            let cfg = RegularizerConfig {
                alpha: rng.gen_range(0.05..1.0),
                lambda: rng.gen_range(0.1..2.0),
                variant,
                sign_mode,
                include_self: rng.gen::<bool>(),
                cql_mode: if rng.gen::<bool>() { CqlMode::Expectation } else { CqlMode::Logsumexp },
                ..Default::default()
            };
            let source = if cfg.shared_active() { donor } else { 0 };
            let samples = prepare_batch(&models, 0, source, &batch, buffer.behavior(), 1e-3, &cfg, gamma).unwrap();
            let (_, grads) = total_loss(&online[0], &samples, &cfg, kappa).unwrap();
            let check = finite_diff_check(
                online[0].net(),
                &grads,
                |n| {
                    let q = QuantileQNet::from_net(n.clone(), actions, k).unwrap();
                    total_loss(&q, &samples, &cfg, kappa).map(|(b, _)| b.total).unwrap_or(f64::NAN)
                },
                1e-4,
            );
            all_passed &= check.passed;
            if check.worst_relative_error > worst {
                worst = check.worst_relative_error;
                worst_at = format!("{name} in configuration {trial}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        2,
        "total loss gradient fidelity",
        all_passed && worst < 1e-4 && secs < 60.0,
        &format!("20 configurations x 4 variants, worst relative error {worst:.2e} ({worst_at}), {secs:.2}s"),
    );
}

#[test]
fn c03_information_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut min_kl, mut max_self_kl, mut worst_identity) = (f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=6);
        let p = softmax(&random_obs(&mut rng, n).iter().map(|x| 4.0 * x).collect::<Vec<_>>()).unwrap();
        let q = softmax(&random_obs(&mut rng, n).iter().map(|x| 4.0 * x).collect::<Vec<_>>()).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        min_kl = min_kl.min(kl);
        max_self_kl = max_self_kl.max(kl_divergence(&p, &p).unwrap());
        worst_identity = worst_identity.max((cross_entropy(&p, &q).unwrap() - entropy(&p) - kl).abs());
    }
    report(
        3,
        "information identities",
        min_kl >= 0.0 && max_self_kl < 1e-12 && worst_identity <= 1e-12,
        &format!("10^4 pairs, min KL {min_kl:.2e}, max KL(p||p) {max_self_kl:.2e}, identity error {worst_identity:.2e}"),
    );
}

#[test]
fn c04_cql_vanishes_on_matched_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (obs, actions, k) = (rng.gen_range(1..4), rng.gen_range(2..6), rng.gen_range(1..6));
        let qnet = QuantileQNet::new(obs, &[6], actions, k, &mut rng).unwrap();
        let batch: Vec<LossSample> = (0..rng.gen_range(1..10))
            .map(|_| {
                let input = random_obs(&mut rng, obs);
                let p = softmax(&random_obs(&mut rng, actions).iter().map(|x| 3.0 * x).collect::<Vec<_>>()).unwrap();
                LossSample {
                    input,
                    action: rng.gen_range(0..actions),
                    td_targets: vec![0.0; k],
                    behavior: p.clone(),
                    policy: p,
                    shared: None,
                    peers: None,
                }
            })
            .collect();
        let (value, _) = cql_penalty(&qnet, &batch, rng.gen_range(0.01..10.0), CqlMode::Expectation).unwrap();
        worst = worst.max(value.abs());
    }
    report(4, "conservative penalty matched-distribution zero", worst < 1e-10, &format!("200 batches, worst |penalty| {worst:.2e}"));
}

fn tiny(variant: Variant) -> TrainerConfig {
    TrainerConfig {
        variant,
        env: EnvKind::GridSpread(GridParams {
            num_agents: 3,
            num_landmarks: 2,
            horizon: 6,
            obs_radius: 1,
        }),
        hidden_sizes: vec![8],
        num_quantiles: 4,
        batch_size: 8,
        pretraining_steps: 40,
        steps_per_iteration: 25,
        iterations: 2,
        eval_episodes: 3,
        buffer_capacity: 60,
        ..Default::default()
    }
}

fn bits(v: Vec<f64>) -> Vec<u64> {
    v.into_iter().map(f64::to_bits).collect()
}

fn without_clock(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    rows.iter().cloned().map(|r| MetricsRow { wall_clock_s: 0.0, ..r }).collect()
}

#[test]
fn c05_ablation_identities() {
    let mut ok = true;
    let mut notes = Vec::new();
    for seed in [0, 1, 2] {
        let base = run(&tiny(Variant::CqlOnly), seed, None).unwrap();
        for variant in [Variant::MarqShared, Variant::MarqXent] {
            let out = run(&TrainerConfig { lambda: 0.0, ..tiny(variant) }, seed, None).unwrap();
            ok &= bits(out.trainer.parameters()) == bits(base.trainer.parameters());
            ok &= without_clock(&out.rows) == without_clock(&base.rows);
        }
        let plain = run(&tiny(Variant::IqlPlain), seed, None).unwrap();
        for variant in Variant::ALL {
            let cfg = TrainerConfig { alpha: 0.0, lambda: 0.0, ..tiny(variant) };
            let out = run(&cfg, seed, None).unwrap();
            ok &= bits(out.trainer.parameters()) == bits(plain.trainer.parameters());
        }
    }
    notes.push("lambda=0 vs cql_only and alpha=lambda=0 vs iql_plain over 3 seeds".to_string());

    // One step of the full loss with both weights zero against the plain quantile loss.
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let online: Vec<QuantileQNet> = (0..2).map(|_| QuantileQNet::new(3, &[5], 3, 4, &mut rng).unwrap()).collect();
    let target: Vec<QuantileQNet> = (0..2).map(|_| QuantileQNet::new(3, &[5], 3, 4, &mut rng).unwrap()).collect();
    let models = AgentModels::new(online.iter().collect(), target.iter().collect(), false).unwrap();
    let mut buffer = AgentBuffer::new(0, 16, 3, 3).unwrap();
    for _ in 0..6 {
        buffer
            .push(Transition {
                agent_id: 0,
                obs: random_obs(&mut rng, 3),
                action: rng.gen_range(0..3),
                reward: rng.gen_range(-1.0..1.0),
                next_obs: random_obs(&mut rng, 3),
                done: rng.gen::<bool>(),
            })
            .unwrap();
    }
    let batch: Vec<&Transition> = buffer.iter().collect();
    for variant in [RegularizerVariant::None, RegularizerVariant::SharedExperience, RegularizerVariant::CrossEntropy] {
        let cfg = RegularizerConfig { alpha: 0.0, lambda: 0.0, variant, ..Default::default() };
        let samples = prepare_batch(&models, 0, 0, &batch, buffer.behavior(), 1e-3, &cfg, 0.9).unwrap();
        let td: Vec<TdSample> = samples
            .iter()
            .map(|s| TdSample { input: s.input.clone(), action: s.action, targets: s.td_targets.clone() })
            .collect();
        let (full, g_full) = total_loss(&online[0], &samples, &cfg, 1.0).unwrap();
        let (plain, g_plain) = qrdqn_loss(&online[0], &td, 1.0).unwrap();
        ok &= full.total.to_bits() == plain.to_bits() && bits(g_full.flat()) == bits(g_plain.flat());
    }
    notes.push("zero-weight total loss equals the quantile loss bitwise".to_string());
    report(5, "ablation identities", ok, &notes.join("; "));
}

fn desk(variant: Variant, lambda: f64) -> TrainerConfig {
    TrainerConfig {
        variant,
        lambda,
        env: EnvKind::MatrixCoordination,
        hidden_sizes: vec![32, 32],
        num_quantiles: 8,
        batch_size: 32,
        pretraining_steps: 1000,
        steps_per_iteration: 500,
        iterations: 8,
        eval_episodes: 20,
        ..Default::default()
    }
}

#[test]
fn c06_matrix_game_reaches_optimum() {
    let start = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    for variant in [Variant::MarqXent, Variant::MarqShared, Variant::IqlPlain] {
        let mut hits = 0;
        let mut means = Vec::new();
        let mut steps = 0;
        let mut optimum = 0.0;
        for seed in 0..5 {
            let out = run(&desk(variant, 1.0), seed, None).unwrap();
            optimum = out.summary.optimal_return.unwrap();
            steps = out.summary.env_steps + desk(variant, 1.0).pretraining_steps as u64;
            let mean = out.summary.final_eval_mean;
            if (mean - optimum).abs() <= 0.05 * optimum.abs() {
                hits += 1;
            }
            means.push(mean);
        }
        if variant != Variant::IqlPlain {
            ok &= hits >= 4 && steps <= 20_000;
        }
        let avg = means.iter().sum::<f64>() / means.len() as f64;
        lines.push(format!("{variant} {hits}/5 within 5% of {optimum} (mean {avg:.3}, {steps} steps incl. pretraining)"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    report(6, "desk-scale matrix learning", ok, &format!("{}; {secs:.1}s", lines.join("; ")));
}

#[test]
fn c07_lambda_insensitivity() {
    let mut finals = Vec::new();
    let mut optimum = 0.0;
    for lambda in [0.0, 0.1, 1.0, 10.0] {
        let mut returns = Vec::new();
        for seed in 0..3 {
            let out = run(&desk(Variant::MarqShared, lambda), seed, None).unwrap();
            optimum = out.summary.optimal_return.unwrap();
            returns.push(out.summary.final_eval_mean);
        }
        finals.push((lambda, returns.iter().sum::<f64>() / 3.0));
    }
    let weighted: Vec<f64> = finals.iter().filter(|(l, _)| *l > 0.0).map(|(_, r)| *r).collect();
    let spread = weighted.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - weighted.iter().copied().fold(f64::INFINITY, f64::min);
    let listing: Vec<String> = finals.iter().map(|(l, r)| format!("lambda {l}: {r:.3}")).collect();
    report(
        7,
        "penalty-weight insensitivity",
        spread < 0.15 * optimum.abs(),
        &format!("{}; max pairwise gap {spread:.3} vs bound {:.3}", listing.join(", "), 0.15 * optimum.abs()),
    );
}

#[test]
fn c08_behavior_counts_survive_eviction() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut buffer = AgentBuffer::new(0, 113, 2, 5).unwrap();
    for _ in 0..10_000 {
        let obs = vec![f64::from(rng.gen_range(0..6)) * 0.25, f64::from(rng.gen_range(0..4))];
        buffer
            .push(Transition {
                agent_id: 0,
                next_obs: obs.clone(),
                obs,
                action: rng.gen_range(0..5),
                reward: 0.0,
                done: rng.gen::<bool>(),
            })
            .unwrap();
    }
    let recount = buffer.recount_behavior();
    let exact = *buffer.behavior() == recount && buffer.behavior().nonzero_counts() == recount.nonzero_counts();
    let total: u64 = recount.nonzero_counts().iter().map(|(_, c)| c).sum();
    report(
        8,
        "behavior counts after eviction",
        exact && total == 113,
        &format!("10^4 pushes into 113 slots, {} distinct pairs, counts equal recount: {exact}", recount.nonzero_counts().len()),
    );
}

#[test]
fn c09_reproducible_metrics_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(Variant::MarqXent);
    let a = run(&cfg, 9, Some(&dir.path().join("a"))).unwrap();
    let b = run(&cfg, 9, Some(&dir.path().join("b"))).unwrap();
    let strip = |p: &std::path::Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f[5] = "";
                f.join(",")
            })
            .collect::<Vec<_>>()
    };
    let files_equal = strip(a.metrics_path.as_ref().unwrap()) == strip(b.metrics_path.as_ref().unwrap());

    let mut straight = Trainer::new(cfg.clone(), 9).unwrap();
    straight.train_iteration().unwrap();
    let next = straight.train_iteration().unwrap();
    let mut first = Trainer::new(cfg, 9).unwrap();
    first.train_iteration().unwrap();
    let path = dir.path().join("mid.ckpt");
    first.save_checkpoint(&path).unwrap();
    drop(first);
    let mut resumed = Trainer::load_checkpoint(&path).unwrap();
    let resumed_next = resumed.train_iteration().unwrap();
    let resume_equal = without_clock(&[next]) == without_clock(&[resumed_next])
        && straight.to_checkpoint_bytes().unwrap() == resumed.to_checkpoint_bytes().unwrap();
    report(
        9,
        "determinism and resume",
        files_equal && resume_equal,
        &format!("metrics files identical apart from wall clock: {files_equal}; resumed state identical: {resume_equal}"),
    );
}

fn huber_rho(u: f64, tau: f64, kappa: f64) -> f64 {
    let h = if u.abs() <= kappa { 0.5 * u * u } else { kappa * (u.abs() - 0.5 * kappa) };
    (tau - if u < 0.0 { 1.0 } else { 0.0 }).abs() * h / kappa
}

#[test]
fn c10_quantile_loss_and_polyak() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=12);
        let kappa = rng.gen_range(0.1..3.0);
        let pred: Vec<f64> = (0..k).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let targ: Vec<f64> = (0..k).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let mut oracle = 0.0;
        for (i, p) in pred.iter().enumerate() {
            let tau = (2 * i + 1) as f64 / (2 * k) as f64;
            for t in &targ {
                oracle += huber_rho(t - p, tau, kappa) / k as f64;
            }
        }
        let (loss, _) = quantile_huber_loss(&pred, &targ, kappa).unwrap();
        worst = worst.max((loss - oracle).abs());
    }

    // Dyadic steps and integer weights keep every intermediate exact.
    let sizes = [3, 4, 2];
    let mut online = DenseNet::zeros(&sizes).unwrap();
    let n = online.num_params();
    online.set_params_flat(&(0..n).map(|i| (i % 7) as f64 - 3.0).collect::<Vec<_>>()).unwrap();
    let start: Vec<f64> = (0..n).map(|i| (i % 5) as f64 * 2.0).collect();
    let mut polyak_exact = true;
    for tau in [0.5, 0.25, 0.125] {
        let mut target = DenseNet::zeros(&sizes).unwrap();
        target.set_params_flat(&start).unwrap();
        for step in 1..=16 {
            polyak_update(&online, &mut target, tau).unwrap();
            let decay = (1.0f64 - tau).powi(step);
            let closed: Vec<f64> =
                start.iter().zip(online.params_flat()).map(|(t0, o)| o + decay * (t0 - o)).collect();
            polyak_exact &= bits(target.params_flat()) == bits(closed);
        }
    }
    report(
        10,
        "quantile loss oracle and target averaging",
        worst <= 1e-12 && polyak_exact,
        &format!("10^3 pairs, worst loss error {worst:.2e}; averaging equals geometric decay bitwise: {polyak_exact}"),
    );
}
