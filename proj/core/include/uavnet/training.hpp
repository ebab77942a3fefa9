#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/autodiff.hpp"
#include "uavnet/comm.hpp"
#include "uavnet/environment.hpp"
#include "uavnet/optim.hpp"
#include "uavnet/policy.hpp"

namespace uavnet::training {

// Sign of the entropy term inside the minimized actor loss:
//   kPenalty -> + beta * H
//   kBonus   -> - beta * H
enum class EntropySign { kPenalty, kBonus };

EntropySign parse_entropy_sign(const std::string& name);
std::string to_string(EntropySign sign);

// Tail value appended to a batch that ends before the episode does:
//   kSpatial -> gamma^(nB-n) * sum_i alpha^d_ji v_i
//   kOwn     -> gamma^(nB-n) * v_j
enum class BootstrapWeighting { kSpatial, kOwn };

BootstrapWeighting parse_bootstrap(const std::string& name);
std::string to_string(BootstrapWeighting weighting);

struct MarlConfig {
  policy::Variant variant = policy::Variant::kOurs;
  double gamma = 0.99;
  double beta = 0.005;
  double alpha = 0.9;
  double lr_actor = 5e-4;
  double lr_critic = 2.5e-4;
  int batch_size = 120;
  int hidden_size = 64;
  int encoder_size = 64;
  int max_degree = -1;  // -1: J - 1
  int episodes = 300;
  EntropySign entropy_sign = EntropySign::kPenalty;
  BootstrapWeighting bootstrap = BootstrapWeighting::kSpatial;
  double reward_scale = 1e-7;
  double log_std_init = -0.5;
  bool share_parameters = false;
  int checkpoint_every = 50;
  double divergence_threshold = 1e6;

  void validate() const;
  std::size_t resolved_max_degree(int num_uavs) const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Actor-critic networks for every UAV; with parameter sharing all agents map
// onto one network.
class MultiAgent {
 public:
  MultiAgent(const env::EnvConfig& env_config, const MarlConfig& marl, std::uint64_t init_seed);

  int num_agents() const { return num_agents_; }
  std::size_t num_networks() const { return networks_.size(); }
  policy::AgentNetwork& network(int agent);
  policy::AgentNetwork& network_at(std::size_t index) { return *networks_[index]; }
  const policy::NetworkDims& dims() const { return dims_; }
  bool shared() const { return networks_.size() == 1 && num_agents_ > 1; }

 private:
  int num_agents_ = 0;
  policy::NetworkDims dims_;
  std::vector<std::unique_ptr<policy::AgentNetwork>> networks_;
};

// Recurrent quantities carried from one slot to the next, stored as plain
// tensors so they can seed a fresh tape.
struct Carry {
  std::vector<ad::Tensor> hidden;
  std::vector<ad::Tensor> cell;
  std::vector<ad::Tensor> fingerprint;
  std::vector<std::vector<double>> previous_onehot;

  static Carry initial(const policy::NetworkDims& dims, int num_agents);
};

// Tape-resident view of a Carry.
struct CarryVars {
  std::vector<policy::BeliefState> belief;
  std::vector<ad::Var> fingerprint;
  std::vector<std::vector<double>> previous_onehot;

  static CarryVars from(ad::Tape& tape, const Carry& carry);
  Carry freeze() const;
};

// Called after messages are composed and before delivery; may replace
// payloads (used to probe latency and gradient reachability).
using MessageHook = std::function<void(int slot, std::vector<comm::Message>& messages, ad::Tape& tape)>;

struct SlotForward {
  std::vector<comm::Message> messages;
  std::vector<policy::BeliefState> beliefs;
  std::vector<policy::PolicyOutput> policies;
};

// One synchronous protocol slot: compose, deliver, update beliefs, act.
// `carry` is advanced in place.
SlotForward forward_slot(ad::Tape& tape, MultiAgent& agents, const comm::CommGraph& graph, int slot,
                         std::span<const ad::Var> states, CarryVars& carry, std::mt19937_64* rng,
                         const MessageHook* hook = nullptr);

// Critic value of every agent given the slot's joint action; beliefs enter as
// constants so the critic loss only reaches critic parameters.
std::vector<ad::Var> critic_values(ad::Tape& tape, MultiAgent& agents, const comm::CommGraph& graph,
                                   const SlotForward& forward);

// alpha^hops with alpha^0 = 1 and alpha^unreachable = 0.
double spatial_weight(double alpha, int hops);

// Spatiotemporal return per slot and agent:
//   R[n]_j = sum_{m >= n} gamma^(m-n) sum_i alpha^d_ji[m] r_i[m]
//            + gamma^(nB-n) sum_i alpha^d_ji[nB] v_i
// rewards[m][i]; hops[m] is the hop matrix at slot m; `bootstrap` may be
// empty (no tail) and uses `bootstrap_hops`.
std::vector<std::vector<double>> spatiotemporal_return(
    const std::vector<std::vector<double>>& rewards,
    const std::vector<std::vector<std::vector<int>>>& hops, double alpha, double gamma,
    const std::vector<double>& bootstrap = {},
    const std::vector<std::vector<int>>& bootstrap_hops = {});

// Same with one hop matrix for every slot and the tail.
std::vector<std::vector<double>> spatiotemporal_return(
    const std::vector<std::vector<double>>& rewards, const std::vector<std::vector<int>>& hops,
    double alpha, double gamma, const std::vector<double>& bootstrap = {});

std::vector<double> advantage(std::span<const double> returns, std::span<const double> values);

// mean_n(-log_prob[n] * adv[n] + s * beta * entropy[n]); advantages enter
// as constants.
ad::Var actor_loss(std::span<const ad::Var> log_probs, std::span<const ad::Var> entropies,
                   std::span<const double> advantages, double beta, EntropySign sign);
// mean_n (returns[n] - values[n])^2.
ad::Var critic_loss(std::span<const ad::Var> values, std::span<const double> returns);

// Replaces each agent's parameters with the mean over itself and its
// neighbors, all agents updated from the same snapshot.
void consensus_update(std::vector<std::vector<ad::Parameter*>>& parameter_sets,
                      const comm::CommGraph& graph);

struct EpisodeTrace {
  std::uint64_t env_seed = 0;
  env::WorldState initial;
  std::vector<env::JointAction> actions;
  std::vector<env::StepOutcome> outcomes;
};

struct EvalResult {
  EpisodeTrace trace;
  double mean_reward = 0.0;  // mean over slots of the raw global reward
  double td_error = 0.0;     // mean |R - V|
  double adv_error = 0.0;    // mean (R - V)^2
};

// Greedy rollout of one episode with returns and critic errors.
EvalResult evaluate_greedy(MultiAgent& agents, const env::EnvConfig& env_config,
                           const MarlConfig& marl, std::uint64_t env_seed);

struct EpisodeMetrics {
  int episode = 0;
  double reward = 0.0;
  double td_error = 0.0;
  double adv_error = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

class Trainer {
 public:
  Trainer(env::EnvConfig env_config, MarlConfig marl, std::uint64_t seed);

  // One sampled episode with an update after every batch, followed by a
  // greedy evaluation rollout for the critic-error metrics.
  EpisodeMetrics run_episode();

  MultiAgent& agents() { return agents_; }
  const env::EnvConfig& env_config() const { return env_config_; }
  const MarlConfig& marl() const { return marl_; }
  std::uint64_t env_seed() const { return env_seed_; }
  int episodes_done() const { return episode_; }

 private:
  void update(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& log_probs,
              const std::vector<std::vector<ad::Var>>& entropies,
              const std::vector<std::vector<ad::Var>>& values,
              const std::vector<std::vector<double>>& returns, const comm::CommGraph& last_graph,
              double& actor_out, double& critic_out);

  env::EnvConfig env_config_;
  MarlConfig marl_;
  std::uint64_t env_seed_ = 0;
  MultiAgent agents_;
  std::mt19937_64 sampler_;
  std::vector<ad::Adam> actor_opt_;
  std::vector<ad::Adam> critic_opt_;
  int episode_ = 0;
};

using EpisodeCallback = std::function<void(const EpisodeMetrics&, Trainer&)>;

std::vector<EpisodeMetrics> train(const env::EnvConfig& env_config, const MarlConfig& marl,
                                  std::uint64_t seed, const EpisodeCallback& on_episode = {});

}  // namespace uavnet::training
