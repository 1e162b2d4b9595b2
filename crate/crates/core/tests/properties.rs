use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use marq::distq::{polyak_update, policy_from_values, quantile_huber_loss, PolicyMode};
use marq::envs::{Env, EnvKind, GridParams, GridState};
use marq::numkit::{adam_step, softmax, AdamState, DenseNet, GradBundle};
use marq::replay::{AgentBuffer, Transition};

fn transition(obs: f64, action: usize) -> Transition {
    Transition {
        agent_id: 0,
        obs: vec![obs],
        action,
        reward: obs,
        next_obs: vec![obs],
        done: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn softmax_is_a_simplex_point(logits in prop::collection::vec(-300.0f64..300.0, 1..12)) {
        let p = softmax(&logits).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn adam_with_zero_gradient_keeps_parameters(seed in any::<u64>(), steps in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = DenseNet::random(&[3, 5, 2], &mut rng).unwrap();
        let before = net.params_flat();
        let mut state = AdamState::new(&net, 1e-2).unwrap();
        let zeros = GradBundle::zeros_like(&net);
        for i in 0..steps {
            adam_step(&mut net, &zeros, &mut state).unwrap();
            prop_assert_eq!(state.step_count, i as u64 + 1);
        }
        prop_assert_eq!(net.params_flat(), before);
    }

    #[test]
    fn buffer_is_fifo_and_counts_match_recount(
        capacity in 1usize..20,
        pushes in prop::collection::vec((0u8..4, 0usize..3), 0..80),
    ) {
        let mut buffer = AgentBuffer::new(0, capacity, 1, 3).unwrap();
        for (i, &(s, a)) in pushes.iter().enumerate() {
            let mut t = transition(f64::from(s), a);
            t.reward = i as f64;
            buffer.push(t).unwrap();
            prop_assert!(buffer.len() <= capacity);
        }
        let kept: Vec<f64> = buffer.iter().map(|t| t.reward).collect();
        let first = pushes.len().saturating_sub(capacity);
        let expected: Vec<f64> = (first..pushes.len()).map(|i| i as f64).collect();
        prop_assert_eq!(kept, expected);
        prop_assert_eq!(buffer.behavior(), &buffer.recount_behavior());
    }

    #[test]
    fn quantile_loss_is_nonnegative_and_zero_on_agreement(
        pred in prop::collection::vec(-5.0f64..5.0, 1..10),
        shift in -3.0f64..3.0,
        kappa in 0.1f64..3.0,
    ) {
        let targets: Vec<f64> = pred.iter().map(|p| p + shift).collect();
        let (loss, _) = quantile_huber_loss(&pred, &targets, kappa).unwrap();
        prop_assert!(loss >= 0.0);
        let constant = vec![pred[0]; pred.len()];
        let (zero, grad) = quantile_huber_loss(&constant, &constant, kappa).unwrap();
        prop_assert_eq!(zero, 0.0);
        prop_assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn epsilon_greedy_keeps_a_probability_floor(
        q in prop::collection::vec(-10.0f64..10.0, 2..6),
        epsilon in 0.01f64..1.0,
    ) {
        let p = policy_from_values(&q, PolicyMode::EpsilonGreedy { epsilon }).unwrap();
        let floor = epsilon / q.len() as f64;
        prop_assert!(p.probs.iter().all(|&x| x >= floor - 1e-15));
        prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn polyak_shrinks_the_gap_by_one_minus_tau(seed in any::<u64>(), tau in 0.001f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = DenseNet::random(&[2, 4, 3], &mut rng).unwrap();
        let mut target = DenseNet::random(&[2, 4, 3], &mut rng).unwrap();
        let gap = |t: &DenseNet| {
            t.params_flat().iter().zip(online.params_flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let before = gap(&target);
        polyak_update(&online, &mut target, tau).unwrap();
        prop_assert!((gap(&target) - (1.0 - tau) * before).abs() <= 1e-12);
    }

    #[test]
    fn env_rollouts_are_deterministic_and_bounded(
        kind in prop::sample::select(vec!["matrix_coordination", "grid_spread", "corridor_keepup"]),
        seed in any::<u64>(),
        actions in prop::collection::vec(0usize..3, 1..60),
    ) {
        let mut a = Env::new(EnvKind::from_name(kind).unwrap(), 1.0).unwrap();
        let mut b = a.clone();
        prop_assert_eq!(a.reset(seed), b.reset(seed));
        let (lo, hi) = a.reward_bounds();
        let n = a.spec().num_agents;
        for (i, &act) in actions.iter().enumerate() {
            if a.is_done() {
                break;
            }
            let joint: Vec<usize> = (0..n).map(|j| (act + i + j) % a.spec().num_actions).collect();
            let ra = a.step(&joint).unwrap();
            let rb = b.step(&joint).unwrap();
            prop_assert!(ra.rewards.iter().all(|&r| (lo..=hi).contains(&r)));
            prop_assert_eq!(ra, rb);
        }
    }

    #[test]
    fn grid_observation_ignores_agents_outside_the_radius(
        cells in prop::sample::subsequence((0..25).collect::<Vec<i32>>(), 6).prop_shuffle(),
        order in Just(()).prop_perturb(|_, mut rng| { let mut v = vec![0usize, 1, 2]; v.sort_by_key(|_| rng.next_u32()); v }),
    ) {
        let cell = |c: i32| (c % 5, c / 5);
        let params = GridParams { num_agents: 4, num_landmarks: 2, horizon: 6, obs_radius: 1 };
        let mut env = Env::new(EnvKind::GridSpread(params), 1.0).unwrap();
        let agents: Vec<_> = cells[..4].iter().map(|&c| cell(c)).collect();
        let landmarks: Vec<_> = cells[4..].iter().map(|&c| cell(c)).collect();
        let me = agents[0];
        let hidden: Vec<usize> = (1..4)
            .filter(|&j| (agents[j].0 - me.0).abs().max((agents[j].1 - me.1).abs()) > 1)
            .collect();
        env.reset_grid(GridState { agents: agents.clone(), landmarks: landmarks.clone() }).unwrap();
        let before = env.observations().unwrap()[0].clone();
        let mut moved = agents.clone();
        let shuffled: Vec<usize> = order.iter().map(|&i| i + 1).filter(|j| hidden.contains(j)).collect();
        for (dst, src) in hidden.iter().zip(&shuffled) {
            moved[*dst] = agents[*src];
        }
        env.reset_grid(GridState { agents: moved, landmarks }).unwrap();
        prop_assert_eq!(&env.observations().unwrap()[0], &before);
    }
}
