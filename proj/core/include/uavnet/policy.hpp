#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavnet/autodiff.hpp"
#include "uavnet/environment.hpp"
#include "uavnet/tensor.hpp"

namespace uavnet::policy {

enum class Variant { kOurs, kIA2C, kConseNet, kFPrint, kCommNet, kDial };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);
std::vector<Variant> all_variants();

struct NetworkDims {
  Variant variant = Variant::kOurs;
  std::size_t state = env::kStateDim;
  std::size_t encoder = 64;
  std::size_t hidden = 64;
  std::size_t max_degree = 9;
  std::size_t heading = 5;
  std::size_t vertical = 3;
  std::size_t ma = 9;
  std::size_t gt = 6;
  std::size_t phases = 256;
  double min_slot = 1.0;
  double max_slot = 3.0;
  double log_std_init = -0.5;

  static NetworkDims from_env(const env::EnvConfig& config, Variant variant, std::size_t encoder,
                              std::size_t hidden, std::size_t max_degree);

  // Four categorical heads followed by the two continuous-head means.
  std::size_t fingerprint() const { return heading + vertical + ma + gt + 2; }
  std::size_t discrete_onehot() const { return heading + vertical + ma + gt; }
  // One-hots, normalized slot time, phases / pi.
  std::size_t action_encoding() const { return discrete_onehot() + 1 + phases; }
  std::size_t belief_input() const;
  std::size_t critic_input() const { return hidden + max_degree * action_encoding(); }
  void validate() const;
};

// Per-agent actor (encoders, LSTM, heads) and critic parameters, keyed by
// name in a stable order.
class AgentNetwork {
 public:
  AgentNetwork(const NetworkDims& dims, std::mt19937_64& rng);

  const NetworkDims& dims() const { return dims_; }
  ad::Parameter& param(const std::string& name);
  const ad::Parameter& param(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) != 0; }

  std::vector<ad::Parameter*> actor_parameters();
  std::vector<ad::Parameter*> critic_parameters();
  std::vector<ad::Parameter*> all_parameters();
  std::map<std::string, ad::Parameter>& parameters() { return params_; }
  const std::map<std::string, ad::Parameter>& parameters() const { return params_; }

 private:
  void add(const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in,
           std::mt19937_64& rng);

  NetworkDims dims_;
  std::map<std::string, ad::Parameter> params_;
};

struct BeliefState {
  ad::Var hidden;
  ad::Var cell;
};

// Everything a recurrence may read at one slot. Neighbor lists are ordered by
// ascending agent id; each variant uses only the inputs its recurrence names.
struct BeliefInputs {
  ad::Var own_state;
  std::vector<ad::Var> neighbor_states;
  std::vector<ad::Var> neighbor_fingerprints;
  std::vector<ad::Var> neighbor_beliefs;
  BeliefState previous;
  ad::Var previous_action_onehot;  // [discrete_onehot()]
};

BeliefState initial_belief(ad::Tape& tape, const NetworkDims& dims);
// Fingerprint used before any policy has run: uniform heads and mid-range
// continuous means.
ad::Tensor initial_fingerprint(const NetworkDims& dims);

BeliefState encode_belief(ad::Tape& tape, AgentNetwork& net, const BeliefInputs& in);

struct PolicyOutput {
  ad::Var heading_log_probs;
  ad::Var vertical_log_probs;
  ad::Var ma_log_probs;
  ad::Var gt_log_probs;
  ad::Var time_mean;
  ad::Var time_log_std;
  ad::Var phase_mean;
  ad::Var phase_log_std;
  ad::Var fingerprint;
  ad::Var log_prob;
  ad::Var entropy;

  int heading = 0;
  int vertical = 0;
  int ma = 0;  // 0-based
  int gt = 0;
  double time_latent = 0.0;               // pre-squash sample
  std::vector<double> phase_latent;       // pre-squash samples
  env::UavAction action;
};

// Samples every head when `rng` is given; otherwise takes modes and means.
PolicyOutput act(ad::Tape& tape, AgentNetwork& net, ad::Var belief, std::mt19937_64* rng);

// Squashing maps from latent Gaussian samples to action ranges.
double squash_time(const NetworkDims& dims, double latent);
double squash_phase(double latent);
// log |d squash / d latent| for the two maps.
double log_time_jacobian(const NetworkDims& dims, double latent);
double log_phase_jacobian(double latent);

std::vector<double> encode_action(const NetworkDims& dims, const env::UavAction& action);
std::vector<double> discrete_onehot(const NetworkDims& dims, const env::UavAction& action);
// Neighbor action encodings concatenated and zero-padded to max_degree slots.
std::vector<double> neighbor_action_block(const NetworkDims& dims,
                                          std::span<const env::UavAction* const> neighbors);

ad::Var value(ad::Tape& tape, AgentNetwork& net, ad::Var belief,
              const std::vector<double>& neighbor_actions);

}  // namespace uavnet::policy
