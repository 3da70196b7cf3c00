#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sen/env.hpp"
#include "sen/net.hpp"
#include "sen/rng.hpp"

namespace sen {

// One stored interaction. Observations and actions are kept per agent so the
// same buffer serves the single-agent algorithms (one entry) and the
// multi-agent one (three entries feeding the centralized critics).
struct Transition {
  std::vector<std::vector<double>> obs;
  std::vector<std::vector<double>> act;
  double reward = 0.0;
  std::vector<std::vector<double>> next_obs;
  bool done = false;
};

// Fixed-capacity ring buffer with uniform sampling without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return store_[i]; }

  // batch distinct transitions, uniformly; throws if batch > size
  std::vector<const Transition*> sample(int batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> store_;
};

// Ornstein-Uhlenbeck exploration noise around zero:
// x += theta * (0 - x) + sigma * N(0, 1), per dimension.
class OuNoise {
 public:
  OuNoise(int dim, double theta = 0.15, double sigma = 0.2);

  void reset();
  void set_sigma(double sigma) { sigma_ = sigma; }
  double sigma() const { return sigma_; }
  const std::vector<double>& sample(Rng& rng);

 private:
  double theta_;
  double sigma_;
  std::vector<double> x_;
};

// Network widths and learning rates shared by the actor-critic algorithms.
struct NetHyper {
  std::vector<int> hidden = {500, 500};
  double lr_actor = 1e-4;
  double lr_critic = 3e-4;
};

// Deterministic-policy agent: tanh actor, scalar critic, and slow-moving
// target copies of both.
struct DdpgAgent {
  MlpNet actor;
  MlpNet critic;
  MlpNet target_actor;
  MlpNet target_critic;
  AdamState actor_opt;
  AdamState critic_opt;
  int obs_dim = 0;
  int act_dim = 0;
  int critic_in = 0;  // critic input width (obs+act; all agents' for MADDPG)

  static DdpgAgent make(int obs_dim, int act_dim, int critic_in, const NetHyper& hyper,
                        Rng& rng);
};

// actor(obs) + OU noise, clamped into [-1, 1] per dimension
std::vector<double> select_action(const DdpgAgent& agent, const std::vector<double>& obs,
                                  OuNoise& noise, Rng& rng);
// noise-free actor output, clamped
std::vector<double> greedy_action(const DdpgAgent& agent, const std::vector<double>& obs);

// One critic descent step on the TD target
//   y = r + gamma * (1 - done) * Q'(s', mu'(s'));
// returns the pre-step mean squared TD error.
double ddpg_critic_update(DdpgAgent& agent, const std::vector<const Transition*>& batch,
                          double gamma);

// One actor ascent step on mean Q(s, mu(s)); the critic's parameters are
// read, never written. Returns the pre-step batch-mean Q.
double ddpg_actor_update(DdpgAgent& agent, const std::vector<const Transition*>& batch);

// Gradient of batch-mean Q(s, mu(s)) w.r.t. the actor parameters (ascent
// direction); exposed so it can be checked against finite differences.
NetGrads ddpg_actor_gradient(const DdpgAgent& agent,
                             const std::vector<const Transition*>& batch);

// MADDPG variants: agent k's critic sees every agent's observation and
// action; its actor is updated through that centralized critic with the
// other agents' actions taken from the batch.
double maddpg_critic_update(std::array<DdpgAgent, 3>& agents, int k,
                            const std::vector<const Transition*>& batch, double gamma);
double maddpg_actor_update(std::array<DdpgAgent, 3>& agents, int k,
                           const std::vector<const Transition*>& batch);

// Uniform grid over [-1, 1]^3 used to discretize the joint action for DQN.
struct ActionGrid {
  int levels = 5;

  int count() const { return levels * levels * levels; }
  JointAction decode(int index) const;
};

// Value-based agent over the discretized joint action space.
struct DqnAgent {
  MlpNet qnet;
  MlpNet target_qnet;
  AdamState opt;
  int obs_dim = 0;
  ActionGrid grid;

  static DqnAgent make(int obs_dim, const ActionGrid& grid, const NetHyper& hyper, Rng& rng);
};

// argmax_a Q(obs, a); ties resolve to the lowest action index
int dqn_greedy_action(const DqnAgent& agent, const std::vector<double>& obs);

// One descent step on the TD target y = r + gamma * (1 - done) * max_a' Q_target;
// transitions store the action index in act[0][0]. Returns the pre-step loss.
double dqn_update(DqnAgent& agent, const std::vector<const Transition*>& batch, double gamma);

// Shared training knobs. Exploration anneals linearly over the first half of
// the episodes and stays at its floor afterwards.
struct TrainParams {
  int episodes = 1000;
  int batch_size = 256;
  double gamma = 0.95;
  double tau = 0.005;
  long warmup = 1000;  // transitions collected before updates start
  std::size_t buffer_capacity = 1000000;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double ou_sigma_final = 0.05;
  double eps_start = 1.0;   // DQN epsilon-greedy
  double eps_final = 0.05;
  int dqn_target_sync = 250;  // gradient steps between hard target refreshes
};

// One row per episode of the training log.
struct TrainLogRow {
  int episode = 0;
  double mean_reward = 0.0;     // average reward per step this episode
  double critic_loss = 0.0;     // mean TD loss over this episode's updates
  double actor_objective = 0.0; // mean Q under the current policy
  double exploration = 0.0;     // OU sigma or epsilon in force this episode
};

struct TrainResult {
  std::vector<TrainLogRow> rows;
};

void write_train_log(const TrainResult& result, std::ostream& out);

TrainResult maddpg_train(SenEnv& env, std::array<DdpgAgent, 3>& agents,
                         const TrainParams& params, Rng& rng);
TrainResult ddpg_train(SenEnv& env, DdpgAgent& agent, const TrainParams& params, Rng& rng);
TrainResult dqn_train(SenEnv& env, DqnAgent& agent, const TrainParams& params, Rng& rng);

// Binary agent snapshots: networks, target networks, and optimizer moments,
// so training can resume and evaluation reproduces results exactly.
void save_agent(std::ostream& out, const DdpgAgent& agent);
DdpgAgent load_ddpg_agent(std::istream& in);
void save_agent(std::ostream& out, const DqnAgent& agent);
DqnAgent load_dqn_agent(std::istream& in);

// --- evaluation -----------------------------------------------------------

struct DayResult {
  long day = 0;
  double reward = 0.0;
  double cost = 0.0;
};

struct EvalResult {
  std::vector<DayResult> days;
  Rollout rollout;  // all evaluated days back to back

  double mean_reward() const;
  double total_cost() const;
};

// Greedy rollout of a policy over the given days of the trace.
EvalResult evaluate_policy(JointPolicy& policy, const SenConfig& cfg,
                           const ExogenousTrace& trace, const std::vector<long>& days);

// Decentralized execution: each actor sees only its own observation.
class MaddpgPolicy : public JointPolicy {
 public:
  explicit MaddpgPolicy(const std::array<DdpgAgent, 3>& agents) : agents_(&agents) {}
  JointAction act(const SenEnv& env, const AgentObs& obs) override;

 private:
  const std::array<DdpgAgent, 3>* agents_;
};

// Single actor driving all three controls from the global observation.
class SingleDdpgPolicy : public JointPolicy {
 public:
  explicit SingleDdpgPolicy(const DdpgAgent& agent) : agent_(&agent) {}
  JointAction act(const SenEnv& env, const AgentObs& obs) override;

 private:
  const DdpgAgent* agent_;
};

class DqnPolicy : public JointPolicy {
 public:
  explicit DqnPolicy(const DqnAgent& agent) : agent_(&agent) {}
  JointAction act(const SenEnv& env, const AgentObs& obs) override;

 private:
  const DqnAgent* agent_;
};

// Uniform over [-1, 1]^3; the comparison floor for the learners.
class RandomPolicy : public JointPolicy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  JointAction act(const SenEnv& env, const AgentObs& obs) override;

 private:
  Rng rng_;
};

}  // namespace sen
