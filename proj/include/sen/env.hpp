#pragma once

#include <array>
#include <vector>

#include "sen/data_io.hpp"
#include "sen/metrics.hpp"
#include "sen/model.hpp"

namespace sen {

// Fixed divisors used to map physical observations into [0, 1]; storage
// levels are divided by their upper bounds, prices by the peak import price.
struct ObsScales {
  double pv = 250.0;      // kW
  double wind = 150.0;    // kW
  double demand = 500.0;  // kW
  double price = 0.0;     // 0 means: use the tariff's peak import price
};

// Which assets the controller may actually move; disabled dimensions are
// pinned to zero inside the environment so every policy shares one codepath.
struct AssetMask {
  bool bess = true;
  bool hess = true;
  bool flex = true;
};

// Everything that defines a dispatch problem instance.
struct SenConfig {
  BessParams bess;
  HessParams hess;
  DemandParams demand;
  TariffSchedule tariff;
  double dt = 0.5;          // slot width, hours
  int horizon = 48;         // slots per episode (one day)
  double penalty = 20.0;    // reward penalty when a storage bound is violated
  double e_init = 1600.0;   // battery energy at episode start, kWh
  double h_init = 5.0;      // tank level at episode start, Nm^3
  AssetMask assets;
  ObsScales scales;

  void validate() const;
};

// Normalized joint action: (battery, hydrogen, demand-reduction), each in [-1, 1].
using JointAction = std::array<double, 3>;

// One observation vector per agent: battery agent, hydrogen agent, demand agent.
using AgentObs = std::array<std::vector<double>, 3>;

// Exogenous and price data for the slot about to be executed.
struct ExogView {
  double pv = 0.0;
  double wind = 0.0;
  double d_base = 0.0;
  double import_price = 0.0;
  double export_price = 0.0;
};

struct StepOutcome {
  AgentObs obs;          // next observations (terminal ones repeat the last slot's exogenous data)
  double reward = 0.0;   // shared scalar: -(costs) - penalty if violated
  CostBreakdown costs;
  double p_g = 0.0;
  bool violated = false;
  bool done = false;
  SlotRecord record;     // executed physical quantities for reporting
};

// Discrete-time microgrid dispatch as a three-agent Markov game with a shared
// reward. Costs are always charged on the powers actually executed after
// storage clipping, so the grid balance holds exactly in every outcome.
class SenEnv {
 public:
  static constexpr int kNumAgents = 3;
  static constexpr std::array<int, 3> kObsDims = {6, 6, 5};

  SenEnv(SenConfig cfg, ExogenousTrace trace);

  // Start an episode on the given day of the trace (0-based).
  AgentObs reset(long day_index);

  // Execute one slot. Throws std::logic_error once the episode is done.
  StepOutcome step(const JointAction& raw);

  // Map a normalized action onto physical controls for the current slot:
  // raw[0] scales the battery power, raw[1] the electrolyzer (negative) or
  // fuel cell (positive) power, raw[2] in [-1,1] maps onto a demand
  // reduction in [0, zeta * d_base]. Results are clamped to the rated limits.
  SenAction denormalize_action(const JointAction& raw) const;
  SenAction denormalize_action(const JointAction& raw, double d_base) const;

  AgentObs observations() const;             // per-agent views of the current slot
  std::vector<double> global_obs() const;    // single-agent view (7 entries)
  ExogView view() const;                     // raw exogenous data for the current slot

  const SenState& state() const { return state_; }
  const SenConfig& config() const { return cfg_; }
  const ExogenousTrace& trace() const { return trace_; }
  bool done() const { return done_; }
  long day() const { return day_; }
  long episode_days() const { return trace_.slots() / cfg_.horizon; }

 private:
  long abs_slot(int slot_in_episode) const;
  AgentObs build_obs(int slot_in_episode, double e_b, double h) const;

  SenConfig cfg_;
  ExogenousTrace trace_;
  double price_scale_ = 1.0;
  SenState state_;
  long day_ = 0;
  bool done_ = true;
};

// A fixed decision rule evaluated through the environment.
class JointPolicy {
 public:
  virtual ~JointPolicy() = default;
  virtual void begin_episode() {}
  virtual JointAction act(const SenEnv& env, const AgentObs& obs) = 0;
};

// Total P1 cost (no violation penalties) of running a policy for one episode.
double episode_cost(const SenConfig& cfg, const ExogenousTrace& trace, long day_index,
                    JointPolicy& policy);

}  // namespace sen
