#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sen/agents.hpp"

using namespace sen;

namespace {

ExogenousTrace ramp_trace(int days = 1) {
  ExogenousTrace t;
  for (int i = 0; i < 48 * days; ++i) {
    t.pv.push_back(i % 48);
    t.wind.push_back(2.0 * (i % 48));
    t.demand.push_back(100.0 + (i % 48));
  }
  return t;
}

SenConfig default_cfg() {
  SenConfig cfg;
  cfg.tariff = default_tariff();
  return cfg;
}

bool nets_equal(const MlpNet& a, const MlpNet& b) {
  if (a.layers.size() != b.layers.size()) return false;
  if (a.output_act != b.output_act) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].w.rows != b.layers[l].w.rows) return false;
    if (a.layers[l].w.cols != b.layers[l].w.cols) return false;
    if (a.layers[l].w.data != b.layers[l].w.data) return false;
    if (a.layers[l].b != b.layers[l].b) return false;
  }
  return true;
}

bool adam_equal(const AdamState& a, const AdamState& b) {
  if (a.lr != b.lr || a.beta1 != b.beta1 || a.beta2 != b.beta2 || a.eps != b.eps ||
      a.step != b.step || a.m.size() != b.m.size() || a.v.size() != b.v.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.m.size(); ++l) {
    if (a.m[l].w.data != b.m[l].w.data || a.m[l].b != b.m[l].b) return false;
    if (a.v[l].w.data != b.v[l].w.data || a.v[l].b != b.v[l].b) return false;
  }
  return true;
}

double rel_err(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

std::vector<double> rand_vec(int n, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void append(std::vector<double>& into, const std::vector<double>& v) {
  into.insert(into.end(), v.begin(), v.end());
}

// single-agent transitions: one observation slot, one action slot
std::vector<Transition> single_batch(int n, int obs_dim, int act_dim, Rng& rng) {
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.obs = {rand_vec(obs_dim, rng)};
    t.act = {rand_vec(act_dim, rng)};
    t.next_obs = {rand_vec(obs_dim, rng)};
    t.reward = rng.uniform(-2.0, 2.0);
    t.done = (i % 3 == 0);
    out.push_back(std::move(t));
  }
  return out;
}

// three-agent transitions for the 2/3/1 observation split used below
std::vector<Transition> joint_batch(int n, Rng& rng) {
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.obs = {rand_vec(2, rng), rand_vec(3, rng), rand_vec(1, rng)};
    t.act = {rand_vec(1, rng), rand_vec(1, rng), rand_vec(1, rng)};
    t.next_obs = {rand_vec(2, rng), rand_vec(3, rng), rand_vec(1, rng)};
    t.reward = rng.uniform(-2.0, 2.0);
    t.done = (i == 2);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<const Transition*> ptrs(const std::vector<Transition>& v) {
  std::vector<const Transition*> p;
  p.reserve(v.size());
  for (const auto& t : v) p.push_back(&t);
  return p;
}

std::array<DdpgAgent, 3> small_team(Rng& rng) {
  NetHyper hyper;
  hyper.hidden = {8};
  return {DdpgAgent::make(2, 1, 9, hyper, rng), DdpgAgent::make(3, 1, 9, hyper, rng),
          DdpgAgent::make(1, 1, 9, hyper, rng)};
}

// joint critic input: all observations, then all actions, agents in order
std::vector<double> joint_input(const Transition& t) {
  std::vector<double> in;
  for (int j = 0; j < 3; ++j) append(in, t.obs[static_cast<std::size_t>(j)]);
  for (int j = 0; j < 3; ++j) append(in, t.act[static_cast<std::size_t>(j)]);
  return in;
}

void zero_critic_column(DdpgAgent& agent, int col) {
  Matrix& w = agent.critic.layers[0].w;
  for (int r = 0; r < w.rows; ++r) w.at(r, col) = 0.0;
}

Transition tagged(double reward) {
  Transition t;
  t.obs = {{reward}};
  t.act = {{0.0}};
  t.next_obs = {{0.0}};
  t.reward = reward;
  return t;
}

}  // namespace

TEST_CASE("replay buffer evicts the oldest transition first") {
  ReplayBuffer buf(3);
  CHECK(buf.capacity() == 3);
  for (int i = 0; i < 5; ++i) buf.push(tagged(i));
  CHECK(buf.size() == 3);
  // pushes 3 and 4 overwrote slots 0 and 1; slot 2 still holds push 2
  CHECK(buf.at(0).reward == 3.0);
  CHECK(buf.at(1).reward == 4.0);
  CHECK(buf.at(2).reward == 2.0);
  buf.push(tagged(5.0));
  CHECK(buf.at(2).reward == 5.0);
  CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
}

TEST_CASE("sampling returns distinct transitions and validates the batch size") {
  ReplayBuffer buf(8);
  for (int i = 0; i < 8; ++i) buf.push(tagged(i));
  Rng rng(3);
  CHECK_THROWS_AS(buf.sample(0, rng), std::invalid_argument);
  CHECK_THROWS_AS(buf.sample(-2, rng), std::invalid_argument);
  CHECK_THROWS_AS(buf.sample(9, rng), std::invalid_argument);

  std::set<double> seen;
  for (int rep = 0; rep < 60; ++rep) {
    const auto batch = buf.sample(5, rng);
    REQUIRE(batch.size() == 5);
    std::set<const Transition*> uniq(batch.begin(), batch.end());
    CHECK(uniq.size() == 5);
    for (const Transition* t : batch) seen.insert(t->reward);
  }
  CHECK(seen.size() == 8);  // every stored transition is reachable

  // a full-size batch covers the buffer exactly once
  const auto all = buf.sample(8, rng);
  std::set<double> rewards;
  for (const Transition* t : all) rewards.insert(t->reward);
  CHECK(rewards.size() == 8);
}

TEST_CASE("exploration noise follows its mean-reverting recursion") {
  OuNoise noise(3, 0.15, 0.2);
  CHECK(noise.sigma() == 0.2);
  Rng rng(77), twin(77);
  std::vector<double> x(3, 0.0);
  for (int step = 0; step < 5; ++step) {
    const std::vector<double>& got = noise.sample(rng);
    REQUIRE(got.size() == 3);
    for (int d = 0; d < 3; ++d) {
      auto& xd = x[static_cast<std::size_t>(d)];
      xd += 0.15 * (0.0 - xd) + 0.2 * twin.normal();
      CHECK(got[static_cast<std::size_t>(d)] == xd);
    }
  }

  noise.set_sigma(0.05);
  noise.reset();
  std::fill(x.begin(), x.end(), 0.0);
  for (int step = 0; step < 3; ++step) {
    const std::vector<double>& got = noise.sample(rng);
    for (int d = 0; d < 3; ++d) {
      auto& xd = x[static_cast<std::size_t>(d)];
      xd += 0.15 * (0.0 - xd) + 0.05 * twin.normal();
      CHECK(got[static_cast<std::size_t>(d)] == xd);
    }
  }
  CHECK_THROWS_AS(OuNoise(0), std::invalid_argument);
}

TEST_CASE("agent construction wires actor, critic, and matching targets") {
  Rng rng(5);
  NetHyper hyper;
  hyper.hidden = {8, 4};
  const DdpgAgent agent = DdpgAgent::make(3, 2, 5, hyper, rng);
  CHECK(agent.obs_dim == 3);
  CHECK(agent.act_dim == 2);
  CHECK(agent.critic_in == 5);
  CHECK(agent.actor.input_dim() == 3);
  CHECK(agent.actor.output_dim() == 2);
  CHECK(agent.actor.layers.size() == 3);
  CHECK(agent.critic.input_dim() == 5);
  CHECK(agent.critic.output_dim() == 1);
  CHECK(nets_equal(agent.actor, agent.target_actor));
  CHECK(nets_equal(agent.critic, agent.target_critic));
  CHECK(agent.actor_opt.lr == hyper.lr_actor);
  CHECK(agent.critic_opt.lr == hyper.lr_critic);
  CHECK_THROWS_AS(DdpgAgent::make(0, 2, 5, hyper, rng), std::invalid_argument);
  CHECK_THROWS_AS(DdpgAgent::make(3, 0, 5, hyper, rng), std::invalid_argument);
  CHECK_THROWS_AS(DdpgAgent::make(3, 2, 0, hyper, rng), std::invalid_argument);
}

TEST_CASE("action selection perturbs the policy and clamps to the unit cube") {
  Rng rng(5);
  NetHyper hyper;
  hyper.hidden = {8};
  const DdpgAgent agent = DdpgAgent::make(3, 2, 5, hyper, rng);
  const std::vector<double> obs{0.3, -0.7, 0.9};
  const std::vector<double> mu = forward(agent.actor, obs);

  OuNoise noise(2, 0.15, 0.9), twin_noise(2, 0.15, 0.9);
  Rng act_rng(11), twin_rng(11);
  bool clamped = false;
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> a = select_action(agent, obs, noise, act_rng);
    const std::vector<double>& n = twin_noise.sample(twin_rng);
    REQUIRE(a.size() == 2);
    for (std::size_t d = 0; d < 2; ++d) {
      const double raw = mu[d] + n[d];
      CHECK(a[d] == std::clamp(raw, -1.0, 1.0));
      if (raw < -1.0 || raw > 1.0) clamped = true;
    }
  }
  CHECK(clamped);  // sigma 0.9 must push past the bounds within 20 draws

  const std::vector<double> g = greedy_action(agent, obs);
  REQUIRE(g.size() == 2);
  for (std::size_t d = 0; d < 2; ++d) CHECK(g[d] == std::clamp(mu[d], -1.0, 1.0));

  OuNoise wrong_dim(3);
  CHECK_THROWS_AS(select_action(agent, obs, wrong_dim, act_rng), std::invalid_argument);
}

TEST_CASE("critic updates regress toward the reward when gamma is zero") {
  Rng rng(9);
  NetHyper hyper;
  hyper.hidden = {8};
  hyper.lr_critic = 1e-2;
  DdpgAgent agent = DdpgAgent::make(3, 2, 5, hyper, rng);
  Rng data_rng(21);
  const std::vector<Transition> data = single_batch(6, 3, 2, data_rng);
  const auto batch = ptrs(data);

  // pre-step loss under the current weights: mean (Q(s,a) - r)^2
  double expected = 0.0;
  for (const Transition* t : batch) {
    std::vector<double> in = t->obs[0];
    append(in, t->act[0]);
    const double q = forward(agent.critic, in)[0];
    expected += (q - t->reward) * (q - t->reward);
  }
  expected /= static_cast<double>(batch.size());

  const MlpNet critic_before = agent.critic;
  const MlpNet actor_before = agent.actor;
  const MlpNet ta_before = agent.target_actor;
  const MlpNet tc_before = agent.target_critic;

  const double loss = ddpg_critic_update(agent, batch, 0.0);
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
  CHECK(!nets_equal(agent.critic, critic_before));
  CHECK(nets_equal(agent.actor, actor_before));
  CHECK(nets_equal(agent.target_actor, ta_before));
  CHECK(nets_equal(agent.target_critic, tc_before));

  // repeated regression onto fixed targets drives the loss down
  double last = loss;
  for (int i = 0; i < 200; ++i) last = ddpg_critic_update(agent, batch, 0.0);
  CHECK(last < 0.5 * loss);

  CHECK_THROWS_AS(ddpg_critic_update(agent, {}, 0.0), std::invalid_argument);
  const std::vector<const Transition*> with_null{batch[0], nullptr};
  CHECK_THROWS_AS(ddpg_critic_update(agent, with_null, 0.0), std::invalid_argument);
  Transition short_obs = data[0];
  short_obs.obs[0].pop_back();
  const std::vector<const Transition*> bad{&short_obs};
  CHECK_THROWS_AS(ddpg_critic_update(agent, bad, 0.0), std::invalid_argument);
}

TEST_CASE("TD targets bootstrap through the target networks unless terminal") {
  Rng rng(13);
  NetHyper hyper;
  hyper.hidden = {8};
  const DdpgAgent agent = DdpgAgent::make(3, 2, 5, hyper, rng);

  Transition live;
  live.obs = {{0.1, 0.2, 0.3}};
  live.act = {{0.5, -0.5}};
  live.reward = 1.0;
  live.next_obs = {{-0.2, 0.4, 0.0}};
  live.done = false;
  Transition term = live;
  term.done = true;

  const double gamma = 0.95;
  const auto expected_loss = [&](const Transition& t) {
    const std::vector<double> an = forward(agent.target_actor, t.next_obs[0]);
    std::vector<double> nin = t.next_obs[0];
    append(nin, an);
    const double qn = forward(agent.target_critic, nin)[0];
    const double y = t.reward + (t.done ? 0.0 : gamma * qn);
    std::vector<double> in = t.obs[0];
    append(in, t.act[0]);
    const double q = forward(agent.critic, in)[0];
    return (q - y) * (q - y);
  };
  const double el = expected_loss(live);
  const double et = expected_loss(term);
  CHECK(el != et);  // the bootstrap term genuinely contributes

  DdpgAgent live_agent = agent;
  DdpgAgent term_agent = agent;
  const std::vector<const Transition*> lb{&live}, tb{&term};
  CHECK(ddpg_critic_update(live_agent, lb, gamma) == doctest::Approx(el).epsilon(1e-12));
  CHECK(ddpg_critic_update(term_agent, tb, gamma) == doctest::Approx(et).epsilon(1e-12));
}

TEST_CASE("the policy gradient matches finite differences") {
  Rng rng(31);
  NetHyper hyper;
  hyper.hidden = {8};
  DdpgAgent agent = DdpgAgent::make(3, 2, 5, hyper, rng);
  Rng data_rng(41);
  const std::vector<Transition> data = single_batch(4, 3, 2, data_rng);
  const auto batch = ptrs(data);

  const NetGrads grads = ddpg_actor_gradient(agent, batch);
  REQUIRE(grads.layers.size() == agent.actor.layers.size());

  // objective: mean_i Q(s_i, mu(s_i)) under the current critic
  const auto objective = [&]() {
    double sum = 0.0;
    for (const Transition* t : batch) {
      const std::vector<double> a = forward(agent.actor, t->obs[0]);
      std::vector<double> in = t->obs[0];
      append(in, a);
      sum += forward(agent.critic, in)[0];
    }
    return sum / static_cast<double>(batch.size());
  };

  const double h = 1e-6;
  double worst = 0.0;
  const auto probe = [&](double& p, double g) {
    const double saved = p;
    p = saved + h;
    const double up = objective();
    p = saved - h;
    const double dn = objective();
    p = saved;
    worst = std::max(worst, rel_err(g, (up - dn) / (2.0 * h)));
  };
  for (std::size_t l = 0; l < agent.actor.layers.size(); ++l) {
    auto& layer = agent.actor.layers[l];
    for (std::size_t i = 0; i < layer.w.data.size(); ++i) {
      probe(layer.w.data[i], grads.layers[l].w.data[i]);
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
      probe(layer.b[i], grads.layers[l].b[i]);
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("actor updates climb the critic's value estimate") {
  Rng rng(17);
  NetHyper hyper;
  hyper.hidden = {8};
  hyper.lr_actor = 1e-2;
  DdpgAgent agent = DdpgAgent::make(3, 2, 5, hyper, rng);
  Rng data_rng(19);
  const std::vector<Transition> data = single_batch(5, 3, 2, data_rng);
  const auto batch = ptrs(data);

  double expected = 0.0;
  for (const Transition* t : batch) {
    const std::vector<double> a = forward(agent.actor, t->obs[0]);
    std::vector<double> in = t->obs[0];
    append(in, a);
    expected += forward(agent.critic, in)[0];
  }
  expected /= static_cast<double>(batch.size());

  const MlpNet actor_before = agent.actor;
  const MlpNet critic_before = agent.critic;
  const MlpNet ta_before = agent.target_actor;
  const MlpNet tc_before = agent.target_critic;

  const double mean_q = ddpg_actor_update(agent, batch);
  CHECK(mean_q == doctest::Approx(expected).epsilon(1e-12));
  CHECK(!nets_equal(agent.actor, actor_before));
  CHECK(nets_equal(agent.critic, critic_before));
  CHECK(nets_equal(agent.target_actor, ta_before));
  CHECK(nets_equal(agent.target_critic, tc_before));

  // against a frozen critic the objective keeps rising
  double last = mean_q;
  for (int i = 0; i < 50; ++i) last = ddpg_actor_update(agent, batch);
  CHECK(last > mean_q);
}

TEST_CASE("the actor gradient flows only through the critic's action columns") {
  Rng rng(23);
  NetHyper hyper;
  hyper.hidden = {8};
  hyper.lr_actor = 1e-2;
  DdpgAgent agent = DdpgAgent::make(3, 2, 5, hyper, rng);
  // cut every action column out of the critic's first layer
  for (int c = agent.obs_dim; c < agent.critic_in; ++c) zero_critic_column(agent, c);

  Rng data_rng(29);
  const std::vector<Transition> data = single_batch(4, 3, 2, data_rng);
  const auto batch = ptrs(data);
  const MlpNet actor_before = agent.actor;
  ddpg_actor_update(agent, batch);
  // dQ/da == 0 exactly, so a fresh optimizer moves nothing at all
  CHECK(nets_equal(agent.actor, actor_before));
}

TEST_CASE("the centralized critic consumes every agent's observation and action") {
  Rng rng(37);
  std::array<DdpgAgent, 3> agents = small_team(rng);
  Rng data_rng(43);
  const std::vector<Transition> data = joint_batch(5, data_rng);
  const auto batch = ptrs(data);
  const int k = 1;

  // expected pre-step losses from the initial weights
  double expected0 = 0.0;
  for (const Transition* t : batch) {
    const double q = forward(agents[k].critic, joint_input(*t))[0];
    expected0 += (q - t->reward) * (q - t->reward);
  }
  expected0 /= static_cast<double>(batch.size());

  const double gamma = 0.95;
  double expected95 = 0.0;
  for (const Transition* t : batch) {
    std::vector<double> nin;
    for (int j = 0; j < 3; ++j) append(nin, t->next_obs[static_cast<std::size_t>(j)]);
    for (int j = 0; j < 3; ++j) {
      append(nin, forward(agents[static_cast<std::size_t>(j)].target_actor,
                          t->next_obs[static_cast<std::size_t>(j)]));
    }
    const double qn = forward(agents[k].target_critic, nin)[0];
    const double y = t->reward + (t->done ? 0.0 : gamma * qn);
    const double q = forward(agents[k].critic, joint_input(*t))[0];
    expected95 += (q - y) * (q - y);
  }
  expected95 /= static_cast<double>(batch.size());

  std::array<DdpgAgent, 3> run0 = agents;
  std::array<DdpgAgent, 3> run95 = agents;
  CHECK(maddpg_critic_update(run0, k, batch, 0.0) == doctest::Approx(expected0).epsilon(1e-12));
  CHECK(maddpg_critic_update(run95, k, batch, gamma) ==
        doctest::Approx(expected95).epsilon(1e-12));

  // only agent k's critic moved
  CHECK(!nets_equal(run0[1].critic, agents[1].critic));
  CHECK(nets_equal(run0[0].critic, agents[0].critic));
  CHECK(nets_equal(run0[2].critic, agents[2].critic));
  for (int j = 0; j < 3; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    CHECK(nets_equal(run0[ju].actor, agents[ju].actor));
    CHECK(nets_equal(run0[ju].target_actor, agents[ju].target_actor));
    CHECK(nets_equal(run0[ju].target_critic, agents[ju].target_critic));
  }

  CHECK_THROWS_AS(maddpg_critic_update(agents, -1, batch, gamma), std::invalid_argument);
  CHECK_THROWS_AS(maddpg_critic_update(agents, 3, batch, gamma), std::invalid_argument);

  // a critic sized for anything but the joint width is rejected
  Rng rng2(38);
  NetHyper hyper;
  hyper.hidden = {8};
  std::array<DdpgAgent, 3> narrow = {DdpgAgent::make(2, 1, 8, hyper, rng2),
                                     DdpgAgent::make(3, 1, 9, hyper, rng2),
                                     DdpgAgent::make(1, 1, 9, hyper, rng2)};
  CHECK_THROWS_AS(maddpg_critic_update(narrow, 0, batch, gamma), std::invalid_argument);

  // transitions must carry one observation per agent
  Transition two_slots = data[0];
  two_slots.obs.pop_back();
  const std::vector<const Transition*> bad{&two_slots};
  CHECK_THROWS_AS(maddpg_critic_update(agents, 0, bad, gamma), std::invalid_argument);
}

TEST_CASE("each agent's policy gradient uses its own slice of the joint action") {
  Rng rng(47);
  const std::array<DdpgAgent, 3> agents = small_team(rng);
  Rng data_rng(49);
  const std::vector<Transition> data = joint_batch(5, data_rng);
  const auto batch = ptrs(data);
  const int k = 1;

  // expected pre-step objective: agent 1's action re-drawn, the others as played
  double expected = 0.0;
  for (const Transition* t : batch) {
    std::vector<double> in;
    for (int j = 0; j < 3; ++j) append(in, t->obs[static_cast<std::size_t>(j)]);
    append(in, t->act[0]);
    append(in, forward(agents[1].actor, t->obs[1]));
    append(in, t->act[2]);
    expected += forward(agents[1].critic, in)[0];
  }
  expected /= static_cast<double>(batch.size());

  std::array<DdpgAgent, 3> run = agents;
  const double mean_q = maddpg_actor_update(run, k, batch);
  CHECK(mean_q == doctest::Approx(expected).epsilon(1e-12));
  CHECK(!nets_equal(run[1].actor, agents[1].actor));
  CHECK(nets_equal(run[0].actor, agents[0].actor));
  CHECK(nets_equal(run[2].actor, agents[2].actor));
  for (int j = 0; j < 3; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    CHECK(nets_equal(run[ju].critic, agents[ju].critic));
    CHECK(nets_equal(run[ju].target_actor, agents[ju].target_actor));
    CHECK(nets_equal(run[ju].target_critic, agents[ju].target_critic));
  }

  // zeroing agent 1's own action column (6 observations + 1) freezes its actor...
  std::array<DdpgAgent, 3> own_cut = agents;
  zero_critic_column(own_cut[1], 7);
  const MlpNet before = own_cut[1].actor;
  maddpg_actor_update(own_cut, k, batch);
  CHECK(nets_equal(own_cut[1].actor, before));

  // ...while zeroing a neighbour's column leaves the gradient alive
  std::array<DdpgAgent, 3> other_cut = agents;
  zero_critic_column(other_cut[1], 6);
  const MlpNet before2 = other_cut[1].actor;
  maddpg_actor_update(other_cut, k, batch);
  CHECK(!nets_equal(other_cut[1].actor, before2));

  std::array<DdpgAgent, 3> thr = agents;
  CHECK_THROWS_AS(maddpg_actor_update(thr, 5, batch), std::invalid_argument);
}

TEST_CASE("the discrete action grid spans the unit cube") {
  const ActionGrid grid{5};
  CHECK(grid.count() == 125);
  const JointAction lo = grid.decode(0);
  CHECK(lo[0] == -1.0);
  CHECK(lo[1] == -1.0);
  CHECK(lo[2] == -1.0);
  const JointAction hi = grid.decode(124);
  CHECK(hi[0] == 1.0);
  CHECK(hi[1] == 1.0);
  CHECK(hi[2] == 1.0);
  const JointAction mid = grid.decode(62);
  CHECK(mid[0] == 0.0);
  CHECK(mid[1] == 0.0);
  CHECK(mid[2] == 0.0);
  // the last component varies fastest
  const JointAction one = grid.decode(1);
  CHECK(one[0] == -1.0);
  CHECK(one[1] == -1.0);
  CHECK(one[2] == -0.5);
  const JointAction five = grid.decode(5);
  CHECK(five[1] == -0.5);
  CHECK(five[2] == -1.0);
  const JointAction twenty_five = grid.decode(25);
  CHECK(twenty_five[0] == -0.5);
  CHECK(twenty_five[1] == -1.0);

  CHECK_THROWS_AS(grid.decode(-1), std::out_of_range);
  CHECK_THROWS_AS(grid.decode(125), std::out_of_range);
  const ActionGrid degenerate{1};
  CHECK_THROWS_AS(degenerate.decode(0), std::invalid_argument);

  const ActionGrid coarse{2};
  CHECK(coarse.count() == 8);
  const JointAction c3 = coarse.decode(3);
  CHECK(c3[0] == -1.0);
  CHECK(c3[1] == 1.0);
  CHECK(c3[2] == 1.0);
}

TEST_CASE("greedy value selection breaks ties toward the lowest index") {
  Rng rng(51);
  NetHyper hyper;
  hyper.hidden = {4};
  DqnAgent agent = DqnAgent::make(2, ActionGrid{2}, hyper, rng);
  CHECK(agent.qnet.output_dim() == 8);
  CHECK(nets_equal(agent.qnet, agent.target_qnet));

  // flatten the network so every Q value equals its output bias
  for (auto& l : agent.qnet.layers) {
    std::fill(l.w.data.begin(), l.w.data.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  const std::vector<double> obs{0.4, -0.2};
  CHECK(dqn_greedy_action(agent, obs) == 0);
  agent.qnet.layers.back().b[5] = 1.0;
  CHECK(dqn_greedy_action(agent, obs) == 5);
  agent.qnet.layers.back().b[3] = 1.0;  // tied with index 5
  CHECK(dqn_greedy_action(agent, obs) == 3);

  CHECK_THROWS_AS(DqnAgent::make(0, ActionGrid{2}, hyper, rng), std::invalid_argument);
  CHECK_THROWS_AS(DqnAgent::make(2, ActionGrid{1}, hyper, rng), std::invalid_argument);
}

TEST_CASE("value updates regress the taken action toward its TD target") {
  Rng rng(53);
  NetHyper hyper;
  hyper.hidden = {8};
  hyper.lr_critic = 1e-2;
  DqnAgent agent = DqnAgent::make(2, ActionGrid{3}, hyper, rng);
  const int n_actions = agent.grid.count();

  Rng data_rng(59);
  std::vector<Transition> data;
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.obs = {rand_vec(2, data_rng)};
    t.act = {{static_cast<double>((i * 7) % n_actions)}};
    t.next_obs = {rand_vec(2, data_rng)};
    t.reward = data_rng.uniform(-2.0, 2.0);
    t.done = (i == 4);
    data.push_back(std::move(t));
  }
  const auto batch = ptrs(data);

  const double gamma = 0.9;
  double expected = 0.0;
  for (const Transition* t : batch) {
    const std::vector<double> qn = forward(agent.target_qnet, t->next_obs[0]);
    double best = qn[0];
    for (int a = 1; a < n_actions; ++a) best = std::max(best, qn[static_cast<std::size_t>(a)]);
    const double y = t->reward + (t->done ? 0.0 : gamma * best);
    const std::vector<double> q = forward(agent.qnet, t->obs[0]);
    const double diff = q[static_cast<std::size_t>(t->act[0][0])] - y;
    expected += diff * diff;
  }
  expected /= static_cast<double>(batch.size());

  const MlpNet qnet_before = agent.qnet;
  const MlpNet target_before = agent.target_qnet;
  const double loss = dqn_update(agent, batch, gamma);
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
  CHECK(!nets_equal(agent.qnet, qnet_before));
  CHECK(nets_equal(agent.target_qnet, target_before));  // syncs happen in the loop, not here

  // the target stays frozen across updates, so the regression converges
  double last = loss;
  for (int i = 0; i < 200; ++i) last = dqn_update(agent, batch, gamma);
  CHECK(last < 0.5 * loss);

  // malformed action payloads are rejected
  Transition fractional = data[0];
  fractional.act = {{0.5}};
  Transition negative = data[0];
  negative.act = {{-1.0}};
  Transition overflow = data[0];
  overflow.act = {{static_cast<double>(n_actions)}};
  Transition pair = data[0];
  pair.act = {{1.0, 2.0}};
  for (const Transition* bad : {&fractional, &negative, &overflow, &pair}) {
    const std::vector<const Transition*> b{bad};
    CHECK_THROWS_AS(dqn_update(agent, b, gamma), std::invalid_argument);
  }
}

TEST_CASE("multi-agent training is deterministic and logs every episode") {
  SenConfig cfg = default_cfg();
  cfg.horizon = 8;
  const ExogenousTrace trace = ramp_trace();

  TrainParams p;
  p.episodes = 3;
  p.batch_size = 4;
  p.warmup = 4;
  p.buffer_capacity = 64;
  p.gamma = 0.9;
  p.tau = 0.05;
  NetHyper hyper;
  hyper.hidden = {8};

  const auto build = [&hyper](std::uint64_t seed) {
    Rng rng(seed);
    std::array<DdpgAgent, 3> a = {DdpgAgent::make(6, 1, 20, hyper, rng),
                                  DdpgAgent::make(6, 1, 20, hyper, rng),
                                  DdpgAgent::make(5, 1, 20, hyper, rng)};
    return a;
  };

  std::array<DdpgAgent, 3> agents1 = build(100);
  std::array<DdpgAgent, 3> agents2 = build(100);
  const std::array<DdpgAgent, 3> init = agents1;

  SenEnv env1(cfg, trace), env2(cfg, trace);
  Rng r1(7), r2(7);
  const TrainResult res1 = maddpg_train(env1, agents1, p, r1);
  const TrainResult res2 = maddpg_train(env2, agents2, p, r2);

  REQUIRE(res1.rows.size() == 3);
  REQUIRE(res2.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(res1.rows[i].episode == static_cast<int>(i));
    CHECK(res1.rows[i].mean_reward == res2.rows[i].mean_reward);
    CHECK(res1.rows[i].critic_loss == res2.rows[i].critic_loss);
    CHECK(res1.rows[i].actor_objective == res2.rows[i].actor_objective);
    CHECK(res1.rows[i].exploration == res2.rows[i].exploration);
    CHECK(res1.rows[i].mean_reward < 0.0);  // costs make every reward negative
  }
  // exploration decays linearly over the first half, then holds the floor
  CHECK(res1.rows[0].exploration == 0.2);
  CHECK(res1.rows[1].exploration == 0.2 + (0.05 - 0.2) * (1.0 / 1.5));
  CHECK(res1.rows[2].exploration == 0.05);

  for (int k = 0; k < 3; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    CHECK(nets_equal(agents1[ku].actor, agents2[ku].actor));
    CHECK(nets_equal(agents1[ku].critic, agents2[ku].critic));
    CHECK(nets_equal(agents1[ku].target_actor, agents2[ku].target_actor));
    CHECK(!nets_equal(agents1[ku].actor, init[ku].actor));   // learning happened
    CHECK(!nets_equal(agents1[ku].critic, init[ku].critic));
    // soft updates pulled the targets off their initial copy of the actor
    CHECK(!nets_equal(agents1[ku].target_actor, agents1[ku].actor));
  }

  // wrong observation width or critic width is rejected up front
  Rng bad_rng(3);
  std::array<DdpgAgent, 3> bad_obs = {DdpgAgent::make(5, 1, 19, hyper, bad_rng),
                                      DdpgAgent::make(6, 1, 19, hyper, bad_rng),
                                      DdpgAgent::make(5, 1, 19, hyper, bad_rng)};
  SenEnv env3(cfg, trace);
  CHECK_THROWS_AS(maddpg_train(env3, bad_obs, p, r1), std::invalid_argument);
  std::array<DdpgAgent, 3> bad_width = {DdpgAgent::make(6, 1, 19, hyper, bad_rng),
                                        DdpgAgent::make(6, 1, 19, hyper, bad_rng),
                                        DdpgAgent::make(5, 1, 19, hyper, bad_rng)};
  CHECK_THROWS_AS(maddpg_train(env3, bad_width, p, r1), std::invalid_argument);

  std::array<DdpgAgent, 3> ok = build(100);
  TrainParams bad_p = p;
  bad_p.episodes = 0;
  CHECK_THROWS_AS(maddpg_train(env3, ok, bad_p, r1), std::invalid_argument);
  bad_p = p;
  bad_p.gamma = 1.5;
  CHECK_THROWS_AS(maddpg_train(env3, ok, bad_p, r1), std::invalid_argument);
  bad_p = p;
  bad_p.tau = -0.1;
  CHECK_THROWS_AS(maddpg_train(env3, ok, bad_p, r1), std::invalid_argument);
  bad_p = p;
  bad_p.warmup = -1;
  CHECK_THROWS_AS(maddpg_train(env3, ok, bad_p, r1), std::invalid_argument);
  bad_p = p;
  bad_p.buffer_capacity = 0;
  CHECK_THROWS_AS(maddpg_train(env3, ok, bad_p, r1), std::invalid_argument);
}

TEST_CASE("single-agent training accepts only a full-width controller") {
  SenConfig cfg = default_cfg();
  cfg.horizon = 8;
  const ExogenousTrace trace = ramp_trace();
  NetHyper hyper;
  hyper.hidden = {8};
  TrainParams p;
  p.episodes = 2;
  p.batch_size = 4;
  p.warmup = 4;
  p.buffer_capacity = 64;

  Rng rng(9);
  DdpgAgent agent = DdpgAgent::make(7, 3, 10, hyper, rng);
  SenEnv env(cfg, trace);
  Rng train_rng(11);
  const TrainResult res = ddpg_train(env, agent, p, train_rng);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].mean_reward < 0.0);
  CHECK(res.rows[1].episode == 1);

  DdpgAgent two_dim = DdpgAgent::make(7, 2, 9, hyper, rng);
  CHECK_THROWS_AS(ddpg_train(env, two_dim, p, train_rng), std::invalid_argument);
  DdpgAgent wide = DdpgAgent::make(7, 3, 11, hyper, rng);
  CHECK_THROWS_AS(ddpg_train(env, wide, p, train_rng), std::invalid_argument);
}

TEST_CASE("value-based training anneals exploration and syncs its target") {
  SenConfig cfg = default_cfg();
  cfg.horizon = 8;
  const ExogenousTrace trace = ramp_trace();
  NetHyper hyper;
  hyper.hidden = {8};
  TrainParams p;
  p.episodes = 3;
  p.batch_size = 4;
  p.warmup = 4;
  p.buffer_capacity = 64;
  p.dqn_target_sync = 2;

  Rng rng(15);
  DqnAgent agent = DqnAgent::make(7, ActionGrid{3}, hyper, rng);
  const MlpNet init_target = agent.target_qnet;
  SenEnv env(cfg, trace);
  Rng train_rng(17);
  const TrainResult res = dqn_train(env, agent, p, train_rng);

  REQUIRE(res.rows.size() == 3);
  CHECK(res.rows[0].exploration == 1.0);
  CHECK(res.rows[1].exploration == 1.0 + (0.05 - 1.0) * (1.0 / 1.5));
  CHECK(res.rows[2].exploration == 0.05);
  for (const auto& row : res.rows) {
    CHECK(row.mean_reward < 0.0);
    CHECK(row.critic_loss >= 0.0);
    CHECK(row.actor_objective == 0.0);  // no actor in the value-based learner
  }
  CHECK(!nets_equal(agent.target_qnet, init_target));  // hard syncs happened

  TrainParams bad = p;
  bad.dqn_target_sync = 0;
  CHECK_THROWS_AS(dqn_train(env, agent, bad, train_rng), std::invalid_argument);
}

TEST_CASE("the training log serializes one row per episode") {
  TrainResult r;
  TrainLogRow a;
  a.episode = 0;
  a.mean_reward = -1.5;
  a.critic_loss = 2.25;
  a.actor_objective = 0.5;
  a.exploration = 0.2;
  TrainLogRow b;
  b.episode = 1;
  b.mean_reward = -1.25;
  b.critic_loss = 2.0;
  b.actor_objective = 0.75;
  b.exploration = 0.125;
  r.rows = {a, b};

  std::ostringstream out;
  write_train_log(r, out);
  CHECK(out.str() ==
        "episode,mean_reward,critic_loss,actor_objective,exploration\n"
        "0,-1.5,2.25,0.5,0.20000000000000001\n"
        "1,-1.25,2,0.75,0.125\n");
}

TEST_CASE("agent checkpoints round-trip exactly") {
  Rng rng(61);
  NetHyper hyper;
  hyper.hidden = {6};
  DdpgAgent agent = DdpgAgent::make(3, 2, 5, hyper, rng);
  Rng data_rng(67);
  const std::vector<Transition> data = single_batch(4, 3, 2, data_rng);
  const auto batch = ptrs(data);
  ddpg_critic_update(agent, batch, 0.95);  // non-trivial optimizer moments
  ddpg_actor_update(agent, batch);

  std::stringstream ss;
  save_agent(ss, agent);
  const DdpgAgent back = load_ddpg_agent(ss);
  CHECK(back.obs_dim == 3);
  CHECK(back.act_dim == 2);
  CHECK(back.critic_in == 5);
  CHECK(nets_equal(back.actor, agent.actor));
  CHECK(nets_equal(back.critic, agent.critic));
  CHECK(nets_equal(back.target_actor, agent.target_actor));
  CHECK(nets_equal(back.target_critic, agent.target_critic));
  CHECK(adam_equal(back.actor_opt, agent.actor_opt));
  CHECK(adam_equal(back.critic_opt, agent.critic_opt));
  const std::vector<double> obs{0.1, 0.2, 0.3};
  CHECK(greedy_action(back, obs) == greedy_action(agent, obs));

  Rng qrng(71);
  DqnAgent dqn = DqnAgent::make(4, ActionGrid{3}, hyper, qrng);
  std::stringstream qs;
  save_agent(qs, dqn);
  const DqnAgent qback = load_dqn_agent(qs);
  CHECK(qback.obs_dim == 4);
  CHECK(qback.grid.levels == 3);
  CHECK(nets_equal(qback.qnet, dqn.qnet));
  CHECK(nets_equal(qback.target_qnet, dqn.target_qnet));
  CHECK(adam_equal(qback.opt, dqn.opt));
  const std::vector<double> qobs{0.5, -0.5, 0.25, 0.0};
  CHECK(dqn_greedy_action(qback, qobs) == dqn_greedy_action(dqn, qobs));
}

TEST_CASE("checkpoints refuse the wrong agent type or corrupt data") {
  Rng rng(73);
  NetHyper hyper;
  hyper.hidden = {6};
  const DdpgAgent ddpg = DdpgAgent::make(3, 2, 5, hyper, rng);
  const DqnAgent dqn = DqnAgent::make(4, ActionGrid{3}, hyper, rng);

  std::stringstream cross1;
  save_agent(cross1, dqn);
  CHECK_THROWS_AS(load_ddpg_agent(cross1), std::runtime_error);
  std::stringstream cross2;
  save_agent(cross2, ddpg);
  CHECK_THROWS_AS(load_dqn_agent(cross2), std::runtime_error);

  std::stringstream full;
  save_agent(full, ddpg);
  const std::string bytes = full.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_ddpg_agent(truncated), std::runtime_error);

  // a header that contradicts the stored networks is rejected after loading
  std::string tampered = bytes;
  tampered[8] = 99;  // first byte of the little-endian observation width
  std::stringstream bad(tampered);
  CHECK_THROWS_AS(load_ddpg_agent(bad), std::runtime_error);

  std::stringstream empty;
  CHECK_THROWS_AS(load_ddpg_agent(empty), std::runtime_error);
}

TEST_CASE("policy evaluation replays the requested days and aggregates the logs") {
  const SenConfig cfg = default_cfg();
  const ExogenousTrace trace = ramp_trace(3);

  RandomPolicy pol(99), twin(99);
  const EvalResult r1 = evaluate_policy(pol, cfg, trace, {0, 2});
  const EvalResult r2 = evaluate_policy(twin, cfg, trace, {0, 2});

  REQUIRE(r1.days.size() == 2);
  CHECK(r1.days[0].day == 0);
  CHECK(r1.days[1].day == 2);
  CHECK(r1.rollout.slots.size() == 96);
  CHECK(r1.rollout.dt == cfg.dt);
  CHECK(r1.rollout.carbon_factor == cfg.tariff.carbon_factor);

  CHECK(r1.days[0].reward == r2.days[0].reward);
  CHECK(r1.days[1].reward == r2.days[1].reward);
  CHECK(r1.days[0].cost == r2.days[0].cost);
  CHECK(r1.days[1].cost == r2.days[1].cost);
  CHECK(r1.days[0].cost > 0.0);

  CHECK(r1.mean_reward() == (r1.days[0].reward + r1.days[1].reward) / 2.0);
  CHECK(r1.total_cost() == r1.days[0].cost + r1.days[1].cost);

  const EvalResult none{};
  CHECK(none.mean_reward() == 0.0);
  CHECK(none.total_cost() == 0.0);

  CHECK_THROWS_AS(evaluate_policy(pol, cfg, trace, {}), std::invalid_argument);
}

TEST_CASE("policy adapters route observations to the right networks") {
  const SenConfig cfg = default_cfg();
  const ExogenousTrace trace = ramp_trace();
  SenEnv env(cfg, trace);
  const AgentObs obs = env.reset(0);
  NetHyper hyper;
  hyper.hidden = {6};

  Rng rng(81);
  const std::array<DdpgAgent, 3> team = {DdpgAgent::make(6, 1, 20, hyper, rng),
                                         DdpgAgent::make(6, 1, 20, hyper, rng),
                                         DdpgAgent::make(5, 1, 20, hyper, rng)};
  MaddpgPolicy mp(team);
  const JointAction ma = mp.act(env, obs);
  for (int k = 0; k < 3; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double mu = forward(team[ku].actor, obs[ku])[0];
    CHECK(ma[ku] == std::clamp(mu, -1.0, 1.0));
  }

  const DdpgAgent single = DdpgAgent::make(7, 3, 10, hyper, rng);
  SingleDdpgPolicy sp(single);
  const JointAction sa = sp.act(env, obs);
  const std::vector<double> mu = forward(single.actor, env.global_obs());
  for (std::size_t k = 0; k < 3; ++k) CHECK(sa[k] == std::clamp(mu[k], -1.0, 1.0));

  const DqnAgent dqn = DqnAgent::make(7, ActionGrid{3}, hyper, rng);
  DqnPolicy dp(dqn);
  const JointAction da = dp.act(env, obs);
  const JointAction want = dqn.grid.decode(dqn_greedy_action(dqn, env.global_obs()));
  CHECK(da[0] == want[0]);
  CHECK(da[1] == want[1]);
  CHECK(da[2] == want[2]);
}
