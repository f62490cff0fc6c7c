//! Sequential RL sampler.
//!
//! The environment walks the candidate pool one sample at a time. At each
//! step the agent sees `[l_bar[0], l_bar[1], pe, mi, |S|/B]` and decides to
//! select or skip. Selecting while budget remains earns
//! `u(x) - lambda * Red(x, S)` with `Red` taken against the selection before
//! insertion; skipping earns 0. An episode ends when the budget is filled or
//! the pool is exhausted.
//!
//! The agent is a dueling DQN trained with uniform experience replay, a
//! periodically synchronized target network and epsilon-greedy exploration.
//! Selection is a single greedy rollout and may leave budget unused.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{class_weights, redundancy, utility, ClassWeights, UtilityParams};
use crate::error::{RadsError, Result};
use crate::nn::{Activation, ForwardCache, Gradients, Mlp, OptimizerState};
use crate::selection::{check_budget, Policy, SelectionResult};
use crate::signals::{estimate_priors, SignalRecord};

pub const STATE_DIM: usize = 5;

pub type StateVector = [f64; STATE_DIM];

/// Which MI value is fed to the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMi {
    #[default]
    Raw,
    Normalized,
}

/// Candidate traversal order of the final greedy rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionOrder {
    #[default]
    MiNormDescending,
    PoolOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub budget: usize,
    pub lambda: f64,
    pub state_mi: StateMi,
}

impl EnvConfig {
    pub fn new(budget: usize, lambda: f64) -> Self {
        EnvConfig {
            budget,
            lambda,
            state_mi: StateMi::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub episodes: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub target_sync_every: usize,
    /// Hidden widths of the shared trunk.
    pub hidden: Vec<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            episodes: 300,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay: 0.995,
            buffer_capacity: 10_000,
            batch_size: 64,
            learning_rate: 1e-4,
            gamma: 0.95,
            target_sync_every: 10,
            hidden: vec![64],
        }
    }
}

impl AgentConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        let field = |name: &str| format!("{path}.{name}");
        if !(0.0 <= self.eps_end && self.eps_end <= self.eps_start && self.eps_start <= 1.0) {
            return Err(RadsError::config(
                field("eps_start"),
                "need 0 <= eps_end <= eps_start <= 1",
            ));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay <= 1.0) {
            return Err(RadsError::config(field("eps_decay"), "must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(RadsError::config(field("gamma"), "must lie in [0, 1)"));
        }
        if self.buffer_capacity == 0 {
            return Err(RadsError::config(field("buffer_capacity"), "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(RadsError::config(field("batch_size"), "must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(RadsError::config(field("learning_rate"), "must be positive"));
        }
        if self.target_sync_every == 0 {
            return Err(RadsError::config(field("target_sync_every"), "must be positive"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(RadsError::config(field("hidden"), "needs at least one positive width"));
        }
        Ok(())
    }

    /// Exploration rate after `episodes` multiplicative decays.
    pub fn epsilon_after(&self, episodes: usize) -> f64 {
        (0..episodes).fold(self.eps_start, |eps, _| (eps * self.eps_decay).max(self.eps_end))
    }
}

/// Everything needed to run the sampler end to end on a scored pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub utility: UtilityParams,
    pub lambda: f64,
    pub agent: AgentConfig,
    pub state_mi: StateMi,
    pub selection_order: SelectionOrder,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            utility: UtilityParams::default(),
            lambda: 0.01,
            agent: AgentConfig::default(),
            state_mi: StateMi::Raw,
            selection_order: SelectionOrder::MiNormDescending,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        self.utility.validate(&format!("{path}.utility"))?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(RadsError::config(format!("{path}.lambda"), "must be non-negative"));
        }
        self.agent.validate(&format!("{path}.agent"))
    }

    pub fn env(&self, budget: usize) -> EnvConfig {
        EnvConfig {
            budget,
            lambda: self.lambda,
            state_mi: self.state_mi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Skip = 0,
    Select = 1,
}

impl Action {
    pub fn from_index(i: usize) -> Action {
        if i == 1 {
            Action::Select
        } else {
            Action::Skip
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    id: String,
    l_bar: Vec<f64>,
    pe: f64,
    state_mi: f64,
    mi_norm: f64,
    utility: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvState {
    pub cursor: usize,
    pub selected: Vec<usize>,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub next_state: StateVector,
    pub reward: f64,
    pub done: bool,
}

/// Budgeted accept/reject environment over a scored pool.
#[derive(Debug, Clone)]
pub struct SelectionEnv {
    candidates: Vec<Candidate>,
    cfg: EnvConfig,
    order: Vec<usize>,
    state: EnvState,
}

impl SelectionEnv {
    pub fn new(records: &[SignalRecord], weights: &ClassWeights, cfg: EnvConfig) -> Result<Self> {
        if records.is_empty() {
            return Err(RadsError::param("selection pool is empty"));
        }
        check_budget(cfg.budget, records.len())?;
        if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
            return Err(RadsError::param("lambda must be non-negative"));
        }
        if let Some(r) = records.iter().find(|r| r.l_bar.len() != 2) {
            return Err(RadsError::param(format!(
                "sampler state needs binary signals, {:?} has {} classes",
                r.id,
                r.l_bar.len()
            )));
        }
        let candidates = records
            .iter()
            .map(|r| Candidate {
                id: r.id.clone(),
                l_bar: r.l_bar.clone(),
                pe: r.pe,
                state_mi: match cfg.state_mi {
                    StateMi::Raw => r.mi,
                    StateMi::Normalized => r.mi_norm,
                },
                mi_norm: r.mi_norm,
                utility: utility(r, weights),
            })
            .collect();
        Ok(SelectionEnv {
            candidates,
            cfg,
            order: (0..records.len()).collect(),
            state: EnvState {
                cursor: 0,
                selected: Vec::new(),
                done: true,
            },
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn utility_of(&self, index: usize) -> f64 {
        self.candidates[index].utility
    }

    pub fn id_of(&self, index: usize) -> &str {
        &self.candidates[index].id
    }

    /// Pool index of the candidate under the cursor.
    pub fn current_index(&self) -> Option<usize> {
        if self.state.done {
            None
        } else {
            Some(self.order[self.state.cursor])
        }
    }

    /// Starts an episode over a seeded shuffle of the pool.
    pub fn reset_shuffled(&mut self, episode_seed: u64) -> StateVector {
        let mut order: Vec<usize> = (0..self.candidates.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(episode_seed));
        self.reset_with_order(order)
    }

    /// Starts an episode with the canonical rollout ordering.
    pub fn reset_ordered(&mut self, order: SelectionOrder) -> StateVector {
        let mut idx: Vec<usize> = (0..self.candidates.len()).collect();
        if order == SelectionOrder::MiNormDescending {
            let c = &self.candidates;
            idx.sort_by(|&a, &b| {
                c[b].mi_norm
                    .total_cmp(&c[a].mi_norm)
                    .then_with(|| c[a].id.cmp(&c[b].id))
            });
        }
        self.reset_with_order(idx)
    }

    pub fn reset_with_order(&mut self, order: Vec<usize>) -> StateVector {
        debug_assert_eq!(order.len(), self.candidates.len());
        self.order = order;
        self.state = EnvState {
            cursor: 0,
            selected: Vec::new(),
            done: false,
        };
        self.state_vector(self.order[0])
    }

    fn state_vector(&self, index: usize) -> StateVector {
        let c = &self.candidates[index];
        [
            c.l_bar[0],
            c.l_bar[1],
            c.pe,
            c.state_mi,
            self.state.selected.len() as f64 / self.cfg.budget as f64,
        ]
    }

    fn selected_lbars(&self) -> Vec<&[f64]> {
        self.state
            .selected
            .iter()
            .map(|&i| self.candidates[i].l_bar.as_slice())
            .collect()
    }

    pub fn step(&mut self, action: Action) -> Result<Step> {
        if self.state.done {
            return Err(RadsError::Protocol("step called on a finished episode".into()));
        }
        let index = self.order[self.state.cursor];
        let mut reward = 0.0;
        if action == Action::Select && self.state.selected.len() < self.cfg.budget {
            let red = redundancy(&self.candidates[index].l_bar, &self.selected_lbars())?;
            reward = self.candidates[index].utility - self.cfg.lambda * red;
            self.state.selected.push(index);
        }
        self.state.cursor += 1;
        self.state.done = self.state.selected.len() == self.cfg.budget || self.state.cursor == self.order.len();
        // The terminal next state is masked out of the TD target; re-emit the
        // current candidate with the updated budget fraction.
        let next = if self.state.done {
            index
        } else {
            self.order[self.state.cursor]
        };
        Ok(Step {
            next_state: self.state_vector(next),
            reward,
            done: self.state.done,
        })
    }
}

/// Mean-centered dueling combine: `Q = V + A - mean(A)`.
pub fn dueling_combine(value: f64, advantages: &[f64]) -> Vec<f64> {
    let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
    advantages.iter().map(|a| value + a - mean).collect()
}

/// Q-network with a shared ReLU trunk and separate value/advantage heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelingQNet {
    pub trunk: Mlp,
    pub value: Mlp,
    pub advantage: Mlp,
}

pub struct QCache {
    trunk: ForwardCache,
    value: ForwardCache,
    advantage: ForwardCache,
}

#[derive(Debug, Clone)]
pub struct QGradients {
    pub trunk: Gradients,
    pub value: Gradients,
    pub advantage: Gradients,
}

impl QGradients {
    pub fn zeros_like(net: &DuelingQNet) -> Self {
        QGradients {
            trunk: Gradients::zeros_like(&net.trunk),
            value: Gradients::zeros_like(&net.value),
            advantage: Gradients::zeros_like(&net.advantage),
        }
    }

    pub fn add_assign(&mut self, other: &QGradients) {
        self.trunk.add_assign(&other.trunk);
        self.value.add_assign(&other.value);
        self.advantage.add_assign(&other.advantage);
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.trunk.slices();
        s.extend(self.value.slices());
        s.extend(self.advantage.slices());
        s
    }
}

impl DuelingQNet {
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Result<Self> {
        if hidden.is_empty() {
            return Err(RadsError::param("dueling trunk needs at least one hidden layer"));
        }
        let mut dims = vec![STATE_DIM];
        dims.extend_from_slice(hidden);
        let width = *hidden.last().unwrap();
        Ok(DuelingQNet {
            trunk: Mlp::new(&dims, 0.0, Activation::Relu, rng)?,
            value: Mlp::new(&[width, 1], 0.0, Activation::Identity, rng)?,
            advantage: Mlp::new(&[width, 2], 0.0, Activation::Identity, rng)?,
        })
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut s = self.trunk.param_sizes();
        s.extend(self.value.param_sizes());
        s.extend(self.advantage.param_sizes());
        s
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.trunk.param_slices_mut();
        s.extend(self.value.param_slices_mut());
        s.extend(self.advantage.param_slices_mut());
        s
    }

    /// Value and raw advantages.
    pub fn streams(&self, state: &[f64]) -> Result<(f64, Vec<f64>)> {
        let h = self.trunk.predict(state)?;
        Ok((self.value.predict(&h)?[0], self.advantage.predict(&h)?))
    }

    pub fn q_values(&self, state: &[f64]) -> Result<[f64; 2]> {
        let (v, a) = self.streams(state)?;
        let q = dueling_combine(v, &a);
        Ok([q[0], q[1]])
    }

    pub fn forward_cached(&self, state: &[f64]) -> Result<([f64; 2], QCache)> {
        let (h, trunk) = self.trunk.forward_eval(state)?;
        let (v, value) = self.value.forward_eval(&h)?;
        let (a, advantage) = self.advantage.forward_eval(&h)?;
        let q = dueling_combine(v[0], &a);
        Ok((
            [q[0], q[1]],
            QCache {
                trunk,
                value,
                advantage,
            },
        ))
    }

    pub fn backward(&self, cache: &QCache, d_q: [f64; 2]) -> QGradients {
        let d_v = d_q[0] + d_q[1];
        let mean = d_v / 2.0;
        let d_a = [d_q[0] - mean, d_q[1] - mean];
        let (gv, dh_v) = self.value.backward(&cache.value, &[d_v]);
        let (ga, dh_a) = self.advantage.backward(&cache.advantage, &d_a);
        let dh: Vec<f64> = dh_v.iter().zip(&dh_a).map(|(a, b)| a + b).collect();
        let (gt, _) = self.trunk.backward(&cache.trunk, &dh);
        QGradients {
            trunk: gt,
            value: gv,
            advantage: ga,
        }
    }
}

/// Greedy action; ties resolve to skipping.
pub fn greedy_action(q: &[f64; 2]) -> Action {
    if q[1] > q[0] {
        Action::Select
    } else {
        Action::Skip
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateVector,
    pub done: bool,
}

/// Fixed-capacity FIFO ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(RadsError::param("replay capacity must be positive"));
        }
        Ok(ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        })
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform minibatch without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Transition> {
        let n = n.min(self.items.len());
        rand::seq::index::sample(rng, self.items.len(), n)
            .into_iter()
            .map(|i| self.items[i])
            .collect()
    }
}

/// One TD step on the online network against `y = r + gamma (1 - d) max_a' Q_target(s', a')`.
/// Returns the mean squared TD error before the update.
pub fn td_update(
    online: &mut DuelingQNet,
    target: &DuelingQNet,
    batch: &[Transition],
    gamma: f64,
    opt: &mut OptimizerState,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(RadsError::param("TD batch must be non-empty"));
    }
    let n = batch.len() as f64;
    let mut grads = QGradients::zeros_like(online);
    let mut loss = 0.0;
    for t in batch {
        let y = td_target(target, t, gamma)?;
        let (q, cache) = online.forward_cached(&t.state)?;
        let diff = q[t.action] - y;
        loss += diff * diff / n;
        let mut d_q = [0.0; 2];
        d_q[t.action] = 2.0 * diff / n;
        grads.add_assign(&online.backward(&cache, d_q));
    }
    if !loss.is_finite() {
        return Err(RadsError::Numeric(format!("non-finite TD loss {loss}")));
    }
    opt.apply(online.param_slices_mut(), grads.slices())?;
    Ok(loss)
}

pub fn td_target(target: &DuelingQNet, t: &Transition, gamma: f64) -> Result<f64> {
    if t.done {
        return Ok(t.reward);
    }
    let q = target.q_values(&t.next_state)?;
    Ok(t.reward + gamma * q[0].max(q[1]))
}

pub struct TrainOutcome {
    pub net: DuelingQNet,
    /// Total reward of each training episode.
    pub returns: Vec<f64>,
    /// Exploration rate after the last decay.
    pub epsilon: f64,
}

pub fn class_weights_for(records: &[SignalRecord], params: &UtilityParams) -> Result<ClassWeights> {
    Ok(class_weights(&estimate_priors(records)?, params))
}

/// Trains the dueling DQN sampler on a scored pool.
pub fn train(
    records: &[SignalRecord],
    weights: &ClassWeights,
    env_cfg: EnvConfig,
    agent: &AgentConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    agent.validate("agent")?;
    let mut env = SelectionEnv::new(records, weights, env_cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut online = DuelingQNet::new(&agent.hidden, &mut rng)?;
    let mut target = online.clone();
    let mut opt = OptimizerState::new(agent.learning_rate, &online.param_sizes())?;
    let mut buffer = ReplayBuffer::new(agent.buffer_capacity)?;
    let mut epsilon = agent.eps_start;
    let mut returns = Vec::with_capacity(agent.episodes);

    for episode in 1..=agent.episodes {
        let mut state = env.reset_shuffled(rng.next_u64());
        let mut total = 0.0;
        loop {
            let action = if rng.random::<f64>() < epsilon {
                Action::from_index(rng.random_range(0..2))
            } else {
                greedy_action(&online.q_values(&state)?)
            };
            let step = env.step(action)?;
            total += step.reward;
            buffer.push(Transition {
                state,
                action: action.index(),
                reward: step.reward,
                next_state: step.next_state,
                done: step.done,
            });
            if buffer.len() >= agent.batch_size {
                let batch = buffer.sample(agent.batch_size, &mut rng);
                td_update(&mut online, &target, &batch, agent.gamma, &mut opt)?;
            }
            state = step.next_state;
            if step.done {
                break;
            }
        }
        returns.push(total);
        if episode % agent.target_sync_every == 0 {
            target = online.clone();
        }
        epsilon = (epsilon * agent.eps_decay).max(agent.eps_end);
    }
    Ok(TrainOutcome {
        net: online,
        returns,
        epsilon,
    })
}

/// Greedy rollout of a trained network; stops early if the policy keeps
/// skipping until the pool is exhausted.
pub fn select(
    net: &DuelingQNet,
    records: &[SignalRecord],
    weights: &ClassWeights,
    env_cfg: EnvConfig,
    order: SelectionOrder,
) -> Result<SelectionResult> {
    let mut env = SelectionEnv::new(records, weights, env_cfg)?;
    let mut state = env.reset_ordered(order);
    let mut selected = Vec::new();
    let mut rewards = Vec::new();
    loop {
        let index = env.current_index().expect("episode in progress");
        let before = env.state().selected.len();
        let step = env.step(greedy_action(&net.q_values(&state)?))?;
        if env.state().selected.len() > before {
            selected.push(env.id_of(index).to_string());
            rewards.push(step.reward);
        }
        state = step.next_state;
        if step.done {
            break;
        }
    }
    Ok(SelectionResult {
        policy: Policy::Rads,
        budget: env_cfg.budget,
        selected,
        rewards,
        episodes_return: None,
    })
}

/// Class weights, training and greedy selection in one call.
pub fn run(records: &[SignalRecord], cfg: &SamplerConfig, budget: usize, seed: u64) -> Result<SelectionResult> {
    cfg.validate("sampler")?;
    let weights = class_weights_for(records, &cfg.utility)?;
    let env_cfg = cfg.env(budget);
    let outcome = train(records, &weights, env_cfg, &cfg.agent, seed)?;
    let mut result = select(&outcome.net, records, &weights, env_cfg, cfg.selection_order)?;
    result.episodes_return = Some(outcome.returns);
    Ok(result)
}
