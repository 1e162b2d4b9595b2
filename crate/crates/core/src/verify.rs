//! Self-checks runnable from the command line: tabular underestimation,
//! loss gradients, information identities, quantile loss and behavior counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distq::{quantile_huber_loss, quantile_midpoints, QuantileQNet};
use crate::error::Result;
use crate::numkit::{finite_diff_check, softmax};
use crate::regularizers::{
    cross_entropy, entropy, kl_divergence, prepare_batch, total_loss, AgentModels, RegularizerConfig,
    RegularizerVariant, SignMode,
};
use crate::replay::{AgentBuffer, Transition};
use crate::tabular::{
    bellman_optimality_backup, cross_agent_iterate, fixed_point, value_iteration, QTable, TabularMDP, TabularPolicy,
    DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn tabular_underestimation(rng: &mut ChaCha8Rng, trials: usize) -> Result<CheckResult> {
    let mut worst_formula: f64 = 0.0;
    let mut bound_ok = true;
    for _ in 0..trials {
        let ns = rng.gen_range(1..=16);
        let na = rng.gen_range(1..=4);
        let mdp = TabularMDP::random(ns, na, rng.gen_range(0.5..0.95), rng)?;
        let learner = TabularPolicy::random_positive(ns, na, rng);
        let donor = TabularPolicy::random_positive(ns, na, rng);
        let alpha = if rng.gen::<bool>() { 0.1 } else { 1.0 };
        let q = QTable::from_rows((0..ns).map(|_| (0..na).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect())?;
        let b = bellman_optimality_backup(&mdp, &q)?;
        let c = cross_agent_iterate(&mdp, &q, &learner, &donor, alpha)?;
        for s in 0..ns {
            for a in 0..na {
                let expected = b.get(s, a) - alpha * learner.prob(s, a) / donor.prob(s, a);
                worst_formula = worst_formula.max((c.get(s, a) - expected).abs());
                bound_ok &= c.get(s, a) < b.get(s, a);
            }
        }
        let star = value_iteration(&mdp, QTable::zeros(ns, na))?;
        let cross = fixed_point(QTable::zeros(ns, na), DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS, |q| {
            cross_agent_iterate(&mdp, q, &learner, &donor, alpha)
        })?;
        bound_ok &= cross.q.values().iter().zip(star.q.values()).all(|(c, s)| c <= s);
    }
    Ok(result(
        "tabular underestimation",
        worst_formula <= 1e-10 && bound_ok,
        format!("{trials} MDPs, worst formula error {worst_formula:.2e}, lower bound held: {bound_ok}"),
    ))
}

fn loss_gradients(rng: &mut ChaCha8Rng, trials: usize) -> Result<CheckResult> {
    let configs = [
        RegularizerConfig::default(),
        RegularizerConfig {
            variant: RegularizerVariant::SharedExperience,
            ..Default::default()
        },
        RegularizerConfig {
            variant: RegularizerVariant::CrossEntropy,
            ..Default::default()
        },
        RegularizerConfig {
            variant: RegularizerVariant::CrossEntropy,
            sign_mode: SignMode::Prose,
            ..Default::default()
        },
    ];
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for _ in 0..trials {
        let (obs, actions, k) = (3, 3, 4);
        let nets: Vec<QuantileQNet> = (0..2)
            .map(|_| QuantileQNet::new(obs, &[6], actions, k, rng))
            .collect::<Result<_>>()?;
        let targets: Vec<QuantileQNet> = (0..2)
            .map(|_| QuantileQNet::new(obs, &[6], actions, k, rng))
            .collect::<Result<_>>()?;
        let mut buffer = AgentBuffer::new(1, 16, obs, actions)?;
        for _ in 0..5 {
            buffer.push(Transition {
                agent_id: 1,
                obs: (0..obs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                action: rng.gen_range(0..actions),
                reward: rng.gen_range(-1.0..1.0),
                next_obs: (0..obs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                done: rng.gen::<f64>() < 0.3,
            })?;
        }
        let batch: Vec<&Transition> = buffer.iter().collect();
        let models = AgentModels::new(nets.iter().collect(), targets.iter().collect(), false)?;
        for cfg in &configs {
            let donor = if cfg.shared_active() { 1 } else { 0 };
            let samples = prepare_batch(&models, 0, donor, &batch, buffer.behavior(), 1e-3, cfg, 0.9)?;
            let (_, grads) = total_loss(&nets[0], &samples, cfg, 1.0)?;
            let report = finite_diff_check(
                nets[0].net(),
                &grads,
                |n| {
                    let q = QuantileQNet::from_net(n.clone(), actions, k).expect("same shape");
                    total_loss(&q, &samples, cfg, 1.0).map(|(b, _)| b.total).unwrap_or(f64::NAN)
                },
                1e-4,
            );
            worst = worst.max(report.worst_relative_error);
            passed &= report.passed;
        }
    }
    Ok(result(
        "loss gradients",
        passed,
        format!("{trials} configurations x 4 variants, worst relative error {worst:.2e}"),
    ))
}

fn information_identities(rng: &mut ChaCha8Rng, trials: usize) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..trials {
        let n = rng.gen_range(2..6);
        let p = softmax(&(0..n).map(|_| rng.gen_range(-4.0..4.0)).collect::<Vec<_>>())?;
        let q = softmax(&(0..n).map(|_| rng.gen_range(-4.0..4.0)).collect::<Vec<_>>())?;
        let kl = kl_divergence(&p, &q)?;
        ok &= kl >= 0.0 && kl_divergence(&p, &p)? < 1e-12;
        worst = worst.max((cross_entropy(&p, &q)? - entropy(&p) - kl).abs());
    }
    Ok(result(
        "information identities",
        ok && worst <= 1e-12,
        format!("{trials} pairs, worst cross-entropy identity error {worst:.2e}"),
    ))
}

fn quantile_loss(rng: &mut ChaCha8Rng, trials: usize) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let k = rng.gen_range(1..10);
        let kappa = rng.gen_range(0.2..2.0);
        let pred: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let targ: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let taus = quantile_midpoints(k);
        let mut direct = 0.0;
        for i in 0..k {
            for y in &targ {
                let u: f64 = y - pred[i];
                let h = if u.abs() <= kappa { 0.5 * u * u } else { kappa * (u.abs() - 0.5 * kappa) };
                direct += (taus[i] - f64::from(u < 0.0)).abs() * h / kappa;
            }
        }
        let (loss, _) = quantile_huber_loss(&pred, &targ, kappa)?;
        worst = worst.max((loss - direct / k as f64).abs());
    }
    Ok(result(
        "quantile loss",
        worst <= 1e-12,
        format!("{trials} pairs, worst error {worst:.2e}"),
    ))
}

fn behavior_counts(rng: &mut ChaCha8Rng, ops: usize) -> Result<CheckResult> {
    let mut buffer = AgentBuffer::new(0, 97, 2, 4)?;
    for _ in 0..ops {
        let obs = vec![f64::from(rng.gen_range(0..5)), f64::from(rng.gen_range(0..3))];
        buffer.push(Transition {
            agent_id: 0,
            next_obs: obs.clone(),
            obs,
            action: rng.gen_range(0..4),
            reward: 0.0,
            done: false,
        })?;
    }
    let exact = *buffer.behavior() == buffer.recount_behavior();
    Ok(result(
        "behavior counts",
        exact,
        format!("{ops} pushes into a 97-slot ring, incremental counts equal recount: {exact}"),
    ))
}

/// Runs every self-check from a fixed seed.
pub fn run_all(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        tabular_underestimation(&mut rng, 100)?,
        loss_gradients(&mut rng, 5)?,
        information_identities(&mut rng, 10_000)?,
        quantile_loss(&mut rng, 1000)?,
        behavior_counts(&mut rng, 10_000)?,
    ])
}
