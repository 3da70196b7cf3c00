#include "sen/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

namespace sen {

namespace {

// linear anneal from start to end over the first half of training
double anneal(double start, double end, int episode, int total_episodes) {
  const double half = 0.5 * total_episodes;
  if (half <= 0.0 || episode >= half) return end;
  return start + (end - start) * (episode / half);
}

const std::vector<double>& agent_slot(const std::vector<std::vector<double>>& vecs,
                                      std::size_t k, const char* what) {
  if (k >= vecs.size()) {
    throw std::invalid_argument(std::string("transition is missing ") + what + " for agent " +
                                std::to_string(k));
  }
  return vecs[k];
}

// stack one per-transition vector (obs/action/next-obs of agent k) into a matrix
template <typename Getter>
Matrix stack(const std::vector<const Transition*>& batch, int dim, Getter get,
             const char* what) {
  Matrix m(static_cast<int>(batch.size()), dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::vector<double>& v = get(*batch[i]);
    if (static_cast<int>(v.size()) != dim) {
      throw std::invalid_argument(std::string(what) + " has dimension " +
                                  std::to_string(v.size()) + ", expected " +
                                  std::to_string(dim));
    }
    std::copy(v.begin(), v.end(), m.row(static_cast<int>(i)));
  }
  return m;
}

Matrix concat_cols(const std::vector<const Matrix*>& parts) {
  int cols = 0;
  const int rows = parts.front()->rows;
  for (const Matrix* p : parts) cols += p->cols;
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double* dst = out.row(i);
    for (const Matrix* p : parts) {
      const double* src = p->row(i);
      std::copy(src, src + p->cols, dst);
      dst += p->cols;
    }
  }
  return out;
}

Matrix slice_cols(const Matrix& m, int first, int count) {
  Matrix out(m.rows, count);
  for (int i = 0; i < m.rows; ++i) {
    const double* src = m.row(i) + first;
    std::copy(src, src + count, out.row(i));
  }
  return out;
}

void negate(NetGrads& g) {
  for (auto& l : g.layers) {
    for (double& v : l.w.data) v = -v;
    for (double& v : l.b) v = -v;
  }
}

// one descent step on mean squared error between critic(input) and targets;
// returns the pre-step loss
double critic_mse_step(MlpNet& critic, AdamState& opt, const Matrix& input,
                       const std::vector<double>& targets) {
  ForwardCache cache;
  const Matrix q = forward(critic, input, &cache);
  const int batch = input.rows;
  Matrix dout(batch, 1);
  double loss = 0.0;
  for (int i = 0; i < batch; ++i) {
    const double diff = q.at(i, 0) - targets[i];
    loss += diff * diff;
    dout.at(i, 0) = 2.0 * diff / batch;
  }
  loss /= batch;
  NetGrads grads = backward(critic, cache, dout);
  adam_step(critic, grads, opt);
  return loss;
}

std::vector<double> td_targets(const MlpNet& target_critic, const Matrix& next_input,
                               const std::vector<const Transition*>& batch, double gamma) {
  const Matrix qn = forward(target_critic, next_input);
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double bootstrap = batch[i]->done ? 0.0 : gamma * qn.at(static_cast<int>(i), 0);
    y[i] = batch[i]->reward + bootstrap;
  }
  return y;
}

void check_batch(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  for (const Transition* t : batch) {
    if (t == nullptr) throw std::invalid_argument("null transition in minibatch");
  }
}

}  // namespace

// --- replay buffer ----------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (store_.size() < capacity_) {
    store_.push_back(std::move(t));
  } else {
    store_[next_] = std::move(t);  // overwrite the oldest entry
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(int batch, Rng& rng) const {
  if (batch <= 0) throw std::invalid_argument("batch size must be positive");
  if (static_cast<std::size_t>(batch) > store_.size()) {
    throw std::invalid_argument("batch of " + std::to_string(batch) +
                                " requested from a buffer holding " +
                                std::to_string(store_.size()));
  }
  // Floyd's algorithm: uniform over subsets, no replacement
  const long n = static_cast<long>(store_.size());
  std::unordered_set<long> chosen;
  chosen.reserve(static_cast<std::size_t>(batch) * 2);
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (long j = n - batch; j < n; ++j) {
    const long t = rng.randint(j + 1);
    long pick = t;
    if (!chosen.insert(t).second) {  // t already drawn: take j, which never is yet
      pick = j;
      chosen.insert(j);
    }
    out.push_back(&store_[static_cast<std::size_t>(pick)]);
  }
  return out;
}

// --- exploration noise ------------------------------------------------------

OuNoise::OuNoise(int dim, double theta, double sigma) : theta_(theta), sigma_(sigma) {
  if (dim <= 0) throw std::invalid_argument("noise dimension must be positive");
  x_.assign(static_cast<std::size_t>(dim), 0.0);
}

void OuNoise::reset() { std::fill(x_.begin(), x_.end(), 0.0); }

const std::vector<double>& OuNoise::sample(Rng& rng) {
  for (double& x : x_) {
    x += theta_ * (0.0 - x) + sigma_ * rng.normal();
  }
  return x_;
}

// --- DDPG -------------------------------------------------------------------

DdpgAgent DdpgAgent::make(int obs_dim, int act_dim, int critic_in, const NetHyper& hyper,
                          Rng& rng) {
  if (obs_dim <= 0 || act_dim <= 0 || critic_in <= 0) {
    throw std::invalid_argument("agent dimensions must be positive");
  }
  DdpgAgent a;
  a.obs_dim = obs_dim;
  a.act_dim = act_dim;
  a.critic_in = critic_in;

  std::vector<int> actor_dims = {obs_dim};
  actor_dims.insert(actor_dims.end(), hyper.hidden.begin(), hyper.hidden.end());
  actor_dims.push_back(act_dim);
  std::vector<int> critic_dims = {critic_in};
  critic_dims.insert(critic_dims.end(), hyper.hidden.begin(), hyper.hidden.end());
  critic_dims.push_back(1);

  a.actor = MlpNet::make(actor_dims, Activation::kTanh, rng);
  a.critic = MlpNet::make(critic_dims, Activation::kIdentity, rng);
  a.target_actor = a.actor;
  a.target_critic = a.critic;
  a.actor_opt = make_adam(a.actor, hyper.lr_actor);
  a.critic_opt = make_adam(a.critic, hyper.lr_critic);
  return a;
}

std::vector<double> select_action(const DdpgAgent& agent, const std::vector<double>& obs,
                                  OuNoise& noise, Rng& rng) {
  std::vector<double> a = forward(agent.actor, obs);
  const std::vector<double>& n = noise.sample(rng);
  if (n.size() != a.size()) {
    throw std::invalid_argument("noise dimension does not match the action");
  }
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i] + n[i], -1.0, 1.0);
  return a;
}

std::vector<double> greedy_action(const DdpgAgent& agent, const std::vector<double>& obs) {
  std::vector<double> a = forward(agent.actor, obs);
  for (double& v : a) v = std::clamp(v, -1.0, 1.0);
  return a;
}

double ddpg_critic_update(DdpgAgent& agent, const std::vector<const Transition*>& batch,
                          double gamma) {
  check_batch(batch);
  const Matrix s = stack(batch, agent.obs_dim,
                         [](const Transition& t) -> const std::vector<double>& {
                           return agent_slot(t.obs, 0, "an observation");
                         },
                         "observation");
  const Matrix a = stack(batch, agent.act_dim,
                         [](const Transition& t) -> const std::vector<double>& {
                           return agent_slot(t.act, 0, "an action");
                         },
                         "action");
  const Matrix sn = stack(batch, agent.obs_dim,
                          [](const Transition& t) -> const std::vector<double>& {
                            return agent_slot(t.next_obs, 0, "a next observation");
                          },
                          "next observation");
  const Matrix an = forward(agent.target_actor, sn);
  const Matrix next_in = concat_cols({&sn, &an});
  const std::vector<double> y = td_targets(agent.target_critic, next_in, batch, gamma);
  const Matrix in = concat_cols({&s, &a});
  return critic_mse_step(agent.critic, agent.critic_opt, in, y);
}

namespace {

// shared by the plain update and the finite-difference check
struct ActorGradResult {
  NetGrads grads;  // ascent direction on batch-mean Q
  double mean_q = 0.0;
};

ActorGradResult actor_gradient_impl(const DdpgAgent& agent,
                                    const std::vector<const Transition*>& batch) {
  check_batch(batch);
  const Matrix s = stack(batch, agent.obs_dim,
                         [](const Transition& t) -> const std::vector<double>& {
                           return agent_slot(t.obs, 0, "an observation");
                         },
                         "observation");
  ForwardCache actor_cache;
  const Matrix a = forward(agent.actor, s, &actor_cache);
  const Matrix in = concat_cols({&s, &a});
  ForwardCache critic_cache;
  const Matrix q = forward(agent.critic, in, &critic_cache);

  const int batch_n = s.rows;
  Matrix dq(batch_n, 1);
  double mean_q = 0.0;
  for (int i = 0; i < batch_n; ++i) {
    mean_q += q.at(i, 0);
    dq.at(i, 0) = 1.0 / batch_n;
  }
  mean_q /= batch_n;

  // d(mean Q)/d(action) flows through the critic input, then into the actor
  const NetGrads through_critic = backward(agent.critic, critic_cache, dq, false);
  const Matrix da = slice_cols(through_critic.input, agent.obs_dim, agent.act_dim);
  ActorGradResult out;
  out.grads = backward(agent.actor, actor_cache, da);
  out.mean_q = mean_q;
  return out;
}

}  // namespace

NetGrads ddpg_actor_gradient(const DdpgAgent& agent,
                             const std::vector<const Transition*>& batch) {
  return actor_gradient_impl(agent, batch).grads;
}

double ddpg_actor_update(DdpgAgent& agent, const std::vector<const Transition*>& batch) {
  ActorGradResult r = actor_gradient_impl(agent, batch);
  negate(r.grads);  // Adam descends; the objective is maximized
  adam_step(agent.actor, r.grads, agent.actor_opt);
  return r.mean_q;
}

// --- MADDPG -----------------------------------------------------------------

namespace {

struct JointLayout {
  std::array<int, 3> obs_dim;
  std::array<int, 3> act_dim;
  int total_obs = 0;
  int total_act = 0;
};

JointLayout joint_layout(const std::array<DdpgAgent, 3>& agents) {
  JointLayout l{};
  for (int k = 0; k < 3; ++k) {
    l.obs_dim[k] = agents[k].obs_dim;
    l.act_dim[k] = agents[k].act_dim;
    l.total_obs += agents[k].obs_dim;
    l.total_act += agents[k].act_dim;
  }
  for (int k = 0; k < 3; ++k) {
    if (agents[k].critic_in != l.total_obs + l.total_act) {
      throw std::invalid_argument(
          "centralized critic " + std::to_string(k) + " expects input width " +
          std::to_string(agents[k].critic_in) + " but the joint layout has " +
          std::to_string(l.total_obs + l.total_act));
    }
  }
  return l;
}

Matrix stack_agent(const std::vector<const Transition*>& batch, int k, int dim,
                   std::vector<std::vector<double>> Transition::* field, const char* what) {
  return stack(batch, dim,
               [k, field, what](const Transition& t) -> const std::vector<double>& {
                 return agent_slot(t.*field, static_cast<std::size_t>(k), what);
               },
               what);
}

}  // namespace

double maddpg_critic_update(std::array<DdpgAgent, 3>& agents, int k,
                            const std::vector<const Transition*>& batch, double gamma) {
  if (k < 0 || k > 2) throw std::invalid_argument("agent index out of range");
  check_batch(batch);
  const JointLayout layout = joint_layout(agents);

  std::array<Matrix, 3> obs, act, next_obs, next_act;
  for (int j = 0; j < 3; ++j) {
    obs[j] = stack_agent(batch, j, layout.obs_dim[j], &Transition::obs, "an observation");
    act[j] = stack_agent(batch, j, layout.act_dim[j], &Transition::act, "an action");
    next_obs[j] =
        stack_agent(batch, j, layout.obs_dim[j], &Transition::next_obs, "a next observation");
    next_act[j] = forward(agents[j].target_actor, next_obs[j]);
  }
  const Matrix next_in = concat_cols(
      {&next_obs[0], &next_obs[1], &next_obs[2], &next_act[0], &next_act[1], &next_act[2]});
  const std::vector<double> y =
      td_targets(agents[k].target_critic, next_in, batch, gamma);
  const Matrix in = concat_cols({&obs[0], &obs[1], &obs[2], &act[0], &act[1], &act[2]});
  return critic_mse_step(agents[k].critic, agents[k].critic_opt, in, y);
}

double maddpg_actor_update(std::array<DdpgAgent, 3>& agents, int k,
                           const std::vector<const Transition*>& batch) {
  if (k < 0 || k > 2) throw std::invalid_argument("agent index out of range");
  check_batch(batch);
  const JointLayout layout = joint_layout(agents);

  std::array<Matrix, 3> obs, act;
  for (int j = 0; j < 3; ++j) {
    obs[j] = stack_agent(batch, j, layout.obs_dim[j], &Transition::obs, "an observation");
    act[j] = stack_agent(batch, j, layout.act_dim[j], &Transition::act, "an action");
  }
  // agent k's action comes from its current actor; the others stay as played
  ForwardCache actor_cache;
  act[k] = forward(agents[k].actor, obs[k], &actor_cache);

  const Matrix in = concat_cols({&obs[0], &obs[1], &obs[2], &act[0], &act[1], &act[2]});
  ForwardCache critic_cache;
  const Matrix q = forward(agents[k].critic, in, &critic_cache);

  const int batch_n = in.rows;
  Matrix dq(batch_n, 1);
  double mean_q = 0.0;
  for (int i = 0; i < batch_n; ++i) {
    mean_q += q.at(i, 0);
    dq.at(i, 0) = 1.0 / batch_n;
  }
  mean_q /= batch_n;

  const NetGrads through_critic = backward(agents[k].critic, critic_cache, dq, false);
  int offset = layout.total_obs;
  for (int j = 0; j < k; ++j) offset += layout.act_dim[j];
  const Matrix da = slice_cols(through_critic.input, offset, layout.act_dim[k]);
  NetGrads grads = backward(agents[k].actor, actor_cache, da);
  negate(grads);
  adam_step(agents[k].actor, grads, agents[k].actor_opt);
  return mean_q;
}

// --- DQN --------------------------------------------------------------------

JointAction ActionGrid::decode(int index) const {
  if (levels < 2) throw std::invalid_argument("action grid needs at least 2 levels");
  if (index < 0 || index >= count()) {
    throw std::out_of_range("action index " + std::to_string(index) +
                            " outside the grid of " + std::to_string(count()));
  }
  const auto level_value = [this](int digit) {
    return -1.0 + 2.0 * digit / (levels - 1);
  };
  JointAction a;
  a[0] = level_value(index / (levels * levels));
  a[1] = level_value((index / levels) % levels);
  a[2] = level_value(index % levels);
  return a;
}

DqnAgent DqnAgent::make(int obs_dim, const ActionGrid& grid, const NetHyper& hyper, Rng& rng) {
  if (obs_dim <= 0) throw std::invalid_argument("agent dimensions must be positive");
  if (grid.levels < 2) throw std::invalid_argument("action grid needs at least 2 levels");
  DqnAgent a;
  a.obs_dim = obs_dim;
  a.grid = grid;
  std::vector<int> dims = {obs_dim};
  dims.insert(dims.end(), hyper.hidden.begin(), hyper.hidden.end());
  dims.push_back(grid.count());
  a.qnet = MlpNet::make(dims, Activation::kIdentity, rng);
  a.target_qnet = a.qnet;
  a.opt = make_adam(a.qnet, hyper.lr_critic);
  return a;
}

int dqn_greedy_action(const DqnAgent& agent, const std::vector<double>& obs) {
  const std::vector<double> q = forward(agent.qnet, obs);
  int best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = static_cast<int>(i);  // ties keep the lowest index
  }
  return best;
}

double dqn_update(DqnAgent& agent, const std::vector<const Transition*>& batch, double gamma) {
  check_batch(batch);
  const Matrix s = stack(batch, agent.obs_dim,
                         [](const Transition& t) -> const std::vector<double>& {
                           return agent_slot(t.obs, 0, "an observation");
                         },
                         "observation");
  const Matrix sn = stack(batch, agent.obs_dim,
                          [](const Transition& t) -> const std::vector<double>& {
                            return agent_slot(t.next_obs, 0, "a next observation");
                          },
                          "next observation");
  const Matrix qn = forward(agent.target_qnet, sn);

  const int batch_n = s.rows;
  const int n_actions = agent.grid.count();
  std::vector<double> y(batch_n);
  std::vector<int> taken(batch_n);
  for (int i = 0; i < batch_n; ++i) {
    const Transition& t = *batch[i];
    const std::vector<double>& av = agent_slot(t.act, 0, "an action");
    if (av.size() != 1) throw std::invalid_argument("DQN transitions store one action index");
    const double raw = av[0];
    const int idx = static_cast<int>(raw);
    if (raw != idx || idx < 0 || idx >= n_actions) {
      throw std::invalid_argument("action index " + std::to_string(raw) +
                                  " outside the grid of " + std::to_string(n_actions));
    }
    taken[i] = idx;
    double best = qn.at(i, 0);
    for (int a = 1; a < n_actions; ++a) best = std::max(best, qn.at(i, a));
    y[i] = t.reward + (t.done ? 0.0 : gamma * best);
  }

  ForwardCache cache;
  const Matrix q = forward(agent.qnet, s, &cache);
  Matrix dout(batch_n, n_actions);
  double loss = 0.0;
  for (int i = 0; i < batch_n; ++i) {
    const double diff = q.at(i, taken[i]) - y[i];
    loss += diff * diff;
    dout.at(i, taken[i]) = 2.0 * diff / batch_n;
  }
  loss /= batch_n;
  NetGrads grads = backward(agent.qnet, cache, dout);
  adam_step(agent.qnet, grads, agent.opt);
  return loss;
}

// --- checkpoints --------------------------------------------------------------

namespace {

constexpr char kDdpgMagic[8] = {'D', 'D', 'P', 'G', 'A', 'G', '0', '1'};
constexpr char kDqnMagic[8] = {'D', 'Q', 'N', 'A', 'G', 'T', '0', '1'};

void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out.good()) throw std::runtime_error("checkpoint write failed");
}

void read_bytes(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw std::runtime_error("checkpoint is truncated");
  }
}

void write_i32(std::ostream& out, std::int32_t v) { write_bytes(out, &v, sizeof v); }

std::int32_t read_i32(std::istream& in) {
  std::int32_t v = 0;
  read_bytes(in, &v, sizeof v);
  return v;
}

}  // namespace

void save_agent(std::ostream& out, const DdpgAgent& agent) {
  write_bytes(out, kDdpgMagic, sizeof kDdpgMagic);
  write_i32(out, agent.obs_dim);
  write_i32(out, agent.act_dim);
  write_i32(out, agent.critic_in);
  save_net(out, agent.actor);
  save_net(out, agent.critic);
  save_net(out, agent.target_actor);
  save_net(out, agent.target_critic);
  save_adam(out, agent.actor_opt);
  save_adam(out, agent.critic_opt);
}

DdpgAgent load_ddpg_agent(std::istream& in) {
  char magic[8] = {};
  read_bytes(in, magic, sizeof magic);
  if (std::memcmp(magic, kDdpgMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a deterministic-policy agent checkpoint (bad magic)");
  }
  DdpgAgent a;
  a.obs_dim = read_i32(in);
  a.act_dim = read_i32(in);
  a.critic_in = read_i32(in);
  a.actor = load_net(in);
  a.critic = load_net(in);
  a.target_actor = load_net(in);
  a.target_critic = load_net(in);
  a.actor_opt = load_adam(in, a.actor);
  a.critic_opt = load_adam(in, a.critic);
  if (a.actor.input_dim() != a.obs_dim || a.actor.output_dim() != a.act_dim ||
      a.critic.input_dim() != a.critic_in || a.critic.output_dim() != 1) {
    throw std::runtime_error("agent checkpoint dimensions are inconsistent");
  }
  return a;
}

void save_agent(std::ostream& out, const DqnAgent& agent) {
  write_bytes(out, kDqnMagic, sizeof kDqnMagic);
  write_i32(out, agent.obs_dim);
  write_i32(out, agent.grid.levels);
  save_net(out, agent.qnet);
  save_net(out, agent.target_qnet);
  save_adam(out, agent.opt);
}

DqnAgent load_dqn_agent(std::istream& in) {
  char magic[8] = {};
  read_bytes(in, magic, sizeof magic);
  if (std::memcmp(magic, kDqnMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a value-based agent checkpoint (bad magic)");
  }
  DqnAgent a;
  a.obs_dim = read_i32(in);
  a.grid.levels = read_i32(in);
  a.qnet = load_net(in);
  a.target_qnet = load_net(in);
  a.opt = load_adam(in, a.qnet);
  if (a.grid.levels < 2 || a.qnet.input_dim() != a.obs_dim ||
      a.qnet.output_dim() != a.grid.count()) {
    throw std::runtime_error("agent checkpoint dimensions are inconsistent");
  }
  return a;
}

// --- training loops ---------------------------------------------------------

namespace {

void check_train_params(const TrainParams& p) {
  if (p.episodes <= 0) throw std::invalid_argument("episodes must be positive");
  if (p.batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (!(p.gamma >= 0.0 && p.gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1]");
  }
  if (!(p.tau >= 0.0 && p.tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  if (p.warmup < 0) throw std::invalid_argument("warmup must be non-negative");
  if (p.buffer_capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
}

bool ready_to_update(const ReplayBuffer& buf, const TrainParams& p) {
  return buf.size() >= static_cast<std::size_t>(p.warmup) &&
         buf.size() >= static_cast<std::size_t>(p.batch_size);
}

}  // namespace

void write_train_log(const TrainResult& result, std::ostream& out) {
  out << "episode,mean_reward,critic_loss,actor_objective,exploration\n";
  char buf[256];
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.episode,
                  r.mean_reward, r.critic_loss, r.actor_objective, r.exploration);
    out << buf;
  }
}

TrainResult maddpg_train(SenEnv& env, std::array<DdpgAgent, 3>& agents,
                         const TrainParams& params, Rng& rng) {
  check_train_params(params);
  for (int k = 0; k < 3; ++k) {
    if (agents[k].obs_dim != SenEnv::kObsDims[k] || agents[k].act_dim != 1) {
      throw std::invalid_argument("agent " + std::to_string(k) +
                                  " does not match the environment's observation layout");
    }
  }
  joint_layout(agents);  // validates the centralized critic width

  ReplayBuffer buffer(params.buffer_capacity);
  std::array<OuNoise, 3> noise = {OuNoise(1, params.ou_theta, params.ou_sigma),
                                  OuNoise(1, params.ou_theta, params.ou_sigma),
                                  OuNoise(1, params.ou_theta, params.ou_sigma)};
  const long days = env.episode_days();
  TrainResult result;
  result.rows.reserve(params.episodes);

  for (int ep = 0; ep < params.episodes; ++ep) {
    const double sigma = anneal(params.ou_sigma, params.ou_sigma_final, ep, params.episodes);
    for (auto& n : noise) {
      n.set_sigma(sigma);
      n.reset();
    }
    AgentObs obs = env.reset(rng.randint(days));
    double reward_sum = 0.0, critic_loss = 0.0, actor_obj = 0.0;
    long updates = 0;
    int steps = 0;

    while (!env.done()) {
      std::vector<std::vector<double>> acts(3);
      JointAction joint{};
      for (int k = 0; k < 3; ++k) {
        acts[k] = select_action(agents[k], obs[k], noise[k], rng);
        joint[k] = acts[k][0];
      }
      StepOutcome out = env.step(joint);
      Transition t;
      t.obs = {obs[0], obs[1], obs[2]};
      t.act = std::move(acts);
      t.reward = out.reward;
      t.next_obs = {out.obs[0], out.obs[1], out.obs[2]};
      t.done = out.done;
      buffer.push(std::move(t));
      reward_sum += out.reward;
      obs = std::move(out.obs);
      ++steps;

      if (ready_to_update(buffer, params)) {
        for (int k = 0; k < 3; ++k) {
          const auto batch = buffer.sample(params.batch_size, rng);
          critic_loss += maddpg_critic_update(agents, k, batch, params.gamma);
          actor_obj += maddpg_actor_update(agents, k, batch);
          soft_update(agents[k].target_critic, agents[k].critic, params.tau);
          soft_update(agents[k].target_actor, agents[k].actor, params.tau);
          ++updates;
        }
      }
    }
    TrainLogRow row;
    row.episode = ep;
    row.mean_reward = reward_sum / steps;
    row.critic_loss = updates > 0 ? critic_loss / updates : 0.0;
    row.actor_objective = updates > 0 ? actor_obj / updates : 0.0;
    row.exploration = sigma;
    result.rows.push_back(row);
  }
  return result;
}

TrainResult ddpg_train(SenEnv& env, DdpgAgent& agent, const TrainParams& params, Rng& rng) {
  check_train_params(params);
  if (agent.act_dim != 3) {
    throw std::invalid_argument("single-agent control needs a 3-dimensional action");
  }
  if (agent.critic_in != agent.obs_dim + agent.act_dim) {
    throw std::invalid_argument("critic input width must be obs_dim + act_dim");
  }

  ReplayBuffer buffer(params.buffer_capacity);
  OuNoise noise(3, params.ou_theta, params.ou_sigma);
  const long days = env.episode_days();
  TrainResult result;
  result.rows.reserve(params.episodes);

  for (int ep = 0; ep < params.episodes; ++ep) {
    const double sigma = anneal(params.ou_sigma, params.ou_sigma_final, ep, params.episodes);
    noise.set_sigma(sigma);
    noise.reset();
    env.reset(rng.randint(days));
    std::vector<double> gobs = env.global_obs();
    double reward_sum = 0.0, critic_loss = 0.0, actor_obj = 0.0;
    long updates = 0;
    int steps = 0;

    while (!env.done()) {
      const std::vector<double> a = select_action(agent, gobs, noise, rng);
      StepOutcome out = env.step({a[0], a[1], a[2]});
      std::vector<double> next_gobs = env.global_obs();
      Transition t;
      t.obs = {gobs};
      t.act = {a};
      t.reward = out.reward;
      t.next_obs = {next_gobs};
      t.done = out.done;
      buffer.push(std::move(t));
      reward_sum += out.reward;
      gobs = std::move(next_gobs);
      ++steps;

      if (ready_to_update(buffer, params)) {
        const auto batch = buffer.sample(params.batch_size, rng);
        critic_loss += ddpg_critic_update(agent, batch, params.gamma);
        actor_obj += ddpg_actor_update(agent, batch);
        soft_update(agent.target_critic, agent.critic, params.tau);
        soft_update(agent.target_actor, agent.actor, params.tau);
        ++updates;
      }
    }
    TrainLogRow row;
    row.episode = ep;
    row.mean_reward = reward_sum / steps;
    row.critic_loss = updates > 0 ? critic_loss / updates : 0.0;
    row.actor_objective = updates > 0 ? actor_obj / updates : 0.0;
    row.exploration = sigma;
    result.rows.push_back(row);
  }
  return result;
}

TrainResult dqn_train(SenEnv& env, DqnAgent& agent, const TrainParams& params, Rng& rng) {
  check_train_params(params);
  if (params.dqn_target_sync <= 0) {
    throw std::invalid_argument("target sync interval must be positive");
  }

  ReplayBuffer buffer(params.buffer_capacity);
  const long days = env.episode_days();
  TrainResult result;
  result.rows.reserve(params.episodes);
  long grad_steps = 0;

  for (int ep = 0; ep < params.episodes; ++ep) {
    const double eps = anneal(params.eps_start, params.eps_final, ep, params.episodes);
    env.reset(rng.randint(days));
    std::vector<double> gobs = env.global_obs();
    double reward_sum = 0.0, loss_sum = 0.0;
    long updates = 0;
    int steps = 0;

    while (!env.done()) {
      int idx;
      if (rng.uniform() < eps) {
        idx = static_cast<int>(rng.randint(agent.grid.count()));
      } else {
        idx = dqn_greedy_action(agent, gobs);
      }
      StepOutcome out = env.step(agent.grid.decode(idx));
      std::vector<double> next_gobs = env.global_obs();
      Transition t;
      t.obs = {gobs};
      t.act = {{static_cast<double>(idx)}};
      t.reward = out.reward;
      t.next_obs = {next_gobs};
      t.done = out.done;
      buffer.push(std::move(t));
      reward_sum += out.reward;
      gobs = std::move(next_gobs);
      ++steps;

      if (ready_to_update(buffer, params)) {
        const auto batch = buffer.sample(params.batch_size, rng);
        loss_sum += dqn_update(agent, batch, params.gamma);
        ++updates;
        ++grad_steps;
        if (grad_steps % params.dqn_target_sync == 0) {
          agent.target_qnet = agent.qnet;  // hard refresh of the delayed parameters
        }
      }
    }
    TrainLogRow row;
    row.episode = ep;
    row.mean_reward = reward_sum / steps;
    row.critic_loss = updates > 0 ? loss_sum / updates : 0.0;
    row.actor_objective = 0.0;
    row.exploration = eps;
    result.rows.push_back(row);
  }
  return result;
}

// --- evaluation -------------------------------------------------------------

double EvalResult::mean_reward() const {
  if (days.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& d : days) sum += d.reward;
  return sum / days.size();
}

double EvalResult::total_cost() const {
  double sum = 0.0;
  for (const auto& d : days) sum += d.cost;
  return sum;
}

EvalResult evaluate_policy(JointPolicy& policy, const SenConfig& cfg,
                           const ExogenousTrace& trace, const std::vector<long>& days) {
  if (days.empty()) throw std::invalid_argument("no days to evaluate");
  SenEnv env(cfg, trace);
  EvalResult result;
  result.rollout.dt = cfg.dt;
  result.rollout.carbon_factor = cfg.tariff.carbon_factor;
  for (long day : days) {
    AgentObs obs = env.reset(day);
    policy.begin_episode();
    DayResult dr;
    dr.day = day;
    while (!env.done()) {
      StepOutcome out = env.step(policy.act(env, obs));
      dr.reward += out.reward;
      dr.cost += out.costs.total();
      result.rollout.slots.push_back(out.record);
      obs = std::move(out.obs);
    }
    result.days.push_back(dr);
  }
  return result;
}

JointAction MaddpgPolicy::act(const SenEnv& env, const AgentObs& obs) {
  (void)env;
  JointAction a{};
  for (int k = 0; k < 3; ++k) {
    const std::vector<double> v = greedy_action((*agents_)[k], obs[k]);
    if (v.size() != 1) throw std::invalid_argument("per-asset actors emit one value each");
    a[k] = v[0];
  }
  return a;
}

JointAction SingleDdpgPolicy::act(const SenEnv& env, const AgentObs& obs) {
  (void)obs;
  const std::vector<double> v = greedy_action(*agent_, env.global_obs());
  if (v.size() != 3) throw std::invalid_argument("the single-agent actor emits three values");
  return {v[0], v[1], v[2]};
}

JointAction DqnPolicy::act(const SenEnv& env, const AgentObs& obs) {
  (void)obs;
  return agent_->grid.decode(dqn_greedy_action(*agent_, env.global_obs()));
}

JointAction RandomPolicy::act(const SenEnv& env, const AgentObs& obs) {
  (void)env;
  (void)obs;
  return {rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0)};
}

}  // namespace sen
