use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::distq::{argmax, bellman_target_quantiles, polyak_update, qrdqn_loss, QuantileQNet, TdSample};
use crate::envs::{Env, EnvSpec};
use crate::error::{Error, Result};
use crate::numkit::{adam_step, AdamState, GradBundle};
use crate::regularizers::{encode_input, prepare_batch, total_loss, AgentModels, LossBreakdown, RegularizerConfig};
use crate::replay::{io::write_buffer, AgentBuffer, Transition};

use super::config::{TrainerConfig, Variant};
use super::eval::{evaluate, ActionPolicy, EvalStats};

/// Independent random streams of one run, all derived from the run seed.
pub(crate) const STREAM_INIT: u64 = 0;
pub(crate) const STREAM_ROLLOUT: u64 = 1;
pub(crate) const STREAM_SAMPLE: u64 = 2;
pub(crate) const STREAM_ENV: u64 = 3;
pub(crate) const STREAM_EVAL: u64 = 4;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Online network, its Polyak-averaged target and the optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub online: QuantileQNet,
    pub target: QuantileQNet,
    pub adam: AdamState,
}

/// One iteration's record.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub iteration: u64,
    pub env_steps: u64,
    pub seed: u64,
    pub eval_mean: f64,
    pub eval_std: f64,
    pub wall_clock_s: f64,
    pub td_loss: f64,
    pub cql_loss: f64,
    pub reg_loss: f64,
}

#[derive(Debug, Default, Clone, Copy)]
struct LossTotals {
    td: f64,
    cql: f64,
    reg: f64,
    updates: u64,
}

impl LossTotals {
    fn add(&mut self, b: &LossBreakdown) {
        self.td += b.td;
        self.cql += b.cql;
        self.reg += b.regularizer;
        self.updates += 1;
    }

    fn means(&self) -> (f64, f64, f64) {
        let n = self.updates.max(1) as f64;
        (self.td / n, self.cql / n, self.reg / n)
    }
}

/// Full state of a training run. Everything except wall-clock time is
/// captured by checkpoints.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub(crate) config: TrainerConfig,
    pub(crate) seed: u64,
    pub(crate) learners: Vec<Learner>,
    pub(crate) buffers: Vec<AgentBuffer>,
    pub(crate) env: Env,
    pub(crate) rollout_rng: ChaCha8Rng,
    pub(crate) sample_rng: ChaCha8Rng,
    pub(crate) env_rng: ChaCha8Rng,
    pub(crate) iteration: u64,
    pub(crate) env_steps: u64,
}

impl Trainer {
    /// Builds networks and buffers, then fills the buffers with
    /// `pretraining_steps` uniformly random environment steps.
    pub fn new(config: TrainerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let env = Env::new(config.env, config.reward_scale)?;
        let spec = env.spec();
        let mut init_rng = stream(seed, STREAM_INIT);
        let input_width = spec.obs_width + if config.parameter_sharing { spec.num_agents } else { 0 };
        let n_learners = if config.parameter_sharing { 1 } else { spec.num_agents };
        let learners = (0..n_learners)
            .map(|_| {
                let online = QuantileQNet::new(
                    input_width,
                    &config.hidden_sizes,
                    spec.num_actions,
                    config.num_quantiles,
                    &mut init_rng,
                )?;
                let adam = AdamState::new(online.net(), config.learning_rate)?;
                Ok(Learner {
                    target: online.clone(),
                    online,
                    adam,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let buffers = (0..spec.num_agents)
            .map(|i| {
                AgentBuffer::with_key_resolution(
                    i,
                    config.buffer_capacity,
                    spec.obs_width,
                    spec.num_actions,
                    config.key_resolution,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut trainer = Self {
            seed,
            learners,
            buffers,
            env,
            rollout_rng: stream(seed, STREAM_ROLLOUT),
            sample_rng: stream(seed, STREAM_SAMPLE),
            env_rng: stream(seed, STREAM_ENV),
            iteration: 0,
            env_steps: 0,
            config,
        };
        let first = trainer.env_rng.next_u64();
        trainer.env.reset(first);
        for _ in 0..trainer.config.pretraining_steps {
            trainer.env_step(1.0)?;
        }
        Ok(trainer)
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn spec(&self) -> EnvSpec {
        self.env.spec()
    }

    pub fn learners(&self) -> &[Learner] {
        &self.learners
    }

    pub fn buffers(&self) -> &[AgentBuffer] {
        &self.buffers
    }

    fn learner_index(&self, agent: usize) -> usize {
        if self.config.parameter_sharing {
            0
        } else {
            agent
        }
    }

    pub fn learner_for(&self, agent: usize) -> &Learner {
        &self.learners[self.learner_index(agent)]
    }

    fn input(&self, agent: usize, obs: &[f64]) -> Vec<f64> {
        encode_input(obs, agent, self.spec().num_agents, self.config.parameter_sharing)
    }

    /// Greedy action of `agent` under its online network.
    pub fn greedy_action(&self, agent: usize, obs: &[f64]) -> Result<usize> {
        let q = self.learner_for(agent).online.mean_q(&self.input(agent, obs))?;
        Ok(argmax(&q))
    }

    /// All online parameters, learner by learner.
    pub fn parameters(&self) -> Vec<f64> {
        self.learners
            .iter()
            .flat_map(|l| l.online.net().params_flat())
            .collect()
    }

    /// SHA-256 over the serialized replay buffers.
    pub fn buffer_digest(&self) -> Result<[u8; 32]> {
        let mut bytes = Vec::new();
        for b in &self.buffers {
            write_buffer(b, &mut bytes)?;
        }
        Ok(Sha256::digest(&bytes).into())
    }

    /// One epsilon-greedy joint step; stores a transition per agent.
    fn env_step(&mut self, epsilon: f64) -> Result<()> {
        let spec = self.spec();
        let obs = self.env.observations()?;
        let mut actions = Vec::with_capacity(spec.num_agents);
        for (i, o) in obs.iter().enumerate() {
            let explore = self.rollout_rng.gen::<f64>() < epsilon;
            let random_action = self.rollout_rng.gen_range(0..spec.num_actions);
            actions.push(if explore { random_action } else { self.greedy_action(i, o)? });
        }
        let step = self.env.step(&actions)?;
        for (i, (o, next)) in obs.into_iter().zip(&step.observations).enumerate() {
            self.buffers[i].push(Transition {
                agent_id: i,
                obs: o,
                action: actions[i],
                reward: step.rewards[i],
                next_obs: next.clone(),
                done: step.done,
            })?;
        }
        if step.done {
            let s = self.env_rng.next_u64();
            self.env.reset(s);
        }
        Ok(())
    }

    /// Loss and gradients for `agent`'s learner on a batch from `donor`'s buffer.
    fn compute_update(&mut self, agent: usize, donor: usize, reg: &RegularizerConfig) -> Result<(LossBreakdown, GradBundle)> {
        let n_agents = self.spec().num_agents;
        let batch = self.buffers[donor].sample_batch(self.config.batch_size, &mut self.sample_rng)?;
        let li = self.learner_index(agent);
        if self.config.variant == Variant::IqlPlain {
            let learner = &self.learners[li];
            let samples = batch
                .iter()
                .map(|t| {
                    let next = encode_input(&t.next_obs, agent, n_agents, self.config.parameter_sharing);
                    Ok(TdSample {
                        input: encode_input(&t.obs, agent, n_agents, self.config.parameter_sharing),
                        action: t.action,
                        targets: bellman_target_quantiles(&learner.target, &next, t.reward, t.done, self.config.gamma)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (loss, grads) = qrdqn_loss(&learner.online, &samples, self.config.kappa)?;
            return Ok((
                LossBreakdown {
                    td: loss,
                    total: loss,
                    ..Default::default()
                },
                grads,
            ));
        }
        let idx: Vec<usize> = (0..n_agents).map(|a| self.learner_index(a)).collect();
        let models = AgentModels::new(
            idx.iter().map(|&l| &self.learners[l].online).collect(),
            idx.iter().map(|&l| &self.learners[l].target).collect(),
            self.config.parameter_sharing,
        )?;
        let samples = prepare_batch(
            &models,
            agent,
            donor,
            &batch,
            self.buffers[donor].behavior(),
            self.config.key_resolution,
            reg,
            self.config.gamma,
        )?;
        total_loss(&self.learners[li].online, &samples, reg, self.config.kappa)
    }

    fn update(&mut self, agent: usize, donor: usize, reg: &RegularizerConfig, totals: &mut LossTotals) -> Result<()> {
        let (breakdown, grads) = self.compute_update(agent, donor, reg).map_err(|e| match e {
            Error::NonFinite(what) => Error::Divergence(format!(
                "non-finite {what} at iteration {}, env step {}, agent {agent}, donor {donor}",
                self.iteration, self.env_steps
            )),
            e => e,
        })?;
        if !breakdown.total.is_finite() || !grads.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite loss at iteration {}, env step {}, agent {agent}, donor {donor}: {breakdown:?}",
                self.iteration, self.env_steps
            )));
        }
        totals.add(&breakdown);
        let li = self.learner_index(agent);
        let tau = self.config.tau;
        let learner = &mut self.learners[li];
        adam_step(learner.online.net_mut(), &grads, &mut learner.adam)?;
        if !learner.online.net().is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite parameters after the update at iteration {}, env step {}, agent {agent}",
                self.iteration, self.env_steps
            )));
        }
        polyak_update(learner.online.net(), learner.target.net_mut(), tau)
    }

    /// `steps_per_iteration` environment steps, each followed by the
    /// gradient steps of every agent, then a greedy evaluation.
    pub fn train_iteration(&mut self) -> Result<MetricsRow> {
        let n_agents = self.spec().num_agents;
        let reg = self.config.regularizer();
        // Own batches never carry the shared-experience penalty; it applies to
        // donor batches only.
        let own_reg = if reg.shared_active() {
            RegularizerConfig {
                variant: crate::regularizers::RegularizerVariant::None,
                ..reg
            }
        } else {
            reg
        };
        let mut totals = LossTotals::default();
        for _ in 0..self.config.steps_per_iteration {
            let eps = self.config.epsilon_at(self.env_steps);
            self.env_step(eps)?;
            self.env_steps += 1;
            for agent in 0..n_agents {
                self.update(agent, agent, &own_reg, &mut totals)?;
                if reg.shared_active() {
                    for donor in (0..n_agents).filter(|&d| d != agent) {
                        self.update(agent, donor, &reg, &mut totals)?;
                    }
                }
            }
        }
        self.iteration += 1;
        let stats = self.evaluate_greedy(self.config.eval_episodes, self.eval_seed())?;
        let (td, cql, regl) = totals.means();
        Ok(MetricsRow {
            iteration: self.iteration,
            env_steps: self.env_steps,
            seed: self.seed,
            eval_mean: stats.mean,
            eval_std: stats.std,
            wall_clock_s: 0.0,
            td_loss: td,
            cql_loss: cql,
            reg_loss: regl,
        })
    }

    /// Evaluation seed for the current iteration, disjoint from training streams.
    pub fn eval_seed(&self) -> u64 {
        let mut rng = stream(self.seed, STREAM_EVAL);
        rng.set_word_pos(u128::from(self.iteration) * 16);
        rng.next_u64()
    }

    pub fn evaluate_greedy(&self, episodes: usize, seed: u64) -> Result<EvalStats> {
        evaluate(&GreedyPolicy { trainer: self }, self.config.env, self.config.reward_scale, episodes, seed)
    }
}

/// Greedy (epsilon 0) actions from a trainer's online networks.
pub struct GreedyPolicy<'a> {
    pub trainer: &'a Trainer,
}

impl ActionPolicy for GreedyPolicy<'_> {
    fn act(&self, agent: usize, obs: &[f64], _rng: &mut ChaCha8Rng) -> Result<usize> {
        self.trainer.greedy_action(agent, obs)
    }
}
