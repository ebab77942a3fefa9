#include "uavnet/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace uavnet::policy {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

bool uses_fingerprints(Variant v) { return v == Variant::kOurs || v == Variant::kFPrint; }
bool uses_belief_encoder(Variant v) { return v == Variant::kOurs || v == Variant::kDial; }

Var zeros(Tape& tape, std::size_t n) { return tape.constant(Tensor({n}, 0.0)); }

Var dense(Tape& tape, AgentNetwork& net, const std::string& prefix, Var x) {
  return ad::linear(tape.param(net.param(prefix + "/weight")),
                    tape.param(net.param(prefix + "/bias")), x);
}

// Encodes each item, then pads with zero blocks up to `slots`.
void append_padded(Tape& tape, AgentNetwork& net, const std::string& prefix,
                   const std::vector<Var>& items, std::size_t slots, std::vector<Var>& out) {
  if (items.size() > slots) {
    throw ad::ShapeError("more neighbors (" + std::to_string(items.size()) +
                         ") than the configured max degree (" + std::to_string(slots) + ")");
  }
  for (const Var& item : items) out.push_back(ad::relu(dense(tape, net, prefix, item)));
  for (std::size_t k = items.size(); k < slots; ++k) out.push_back(zeros(tape, net.dims().encoder));
}

int sample_categorical(const Tensor& log_probs, std::mt19937_64* rng) {
  const std::size_t k = log_probs.size();
  if (rng == nullptr) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (log_probs[i] > log_probs[best]) best = i;
    }
    return static_cast<int>(best);
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(*rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += std::exp(log_probs[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(k - 1);
}

// log(1 - tanh(x)^2) without cancellation for large |x|.
double log_one_minus_tanh_sq(double x) {
  const double a = std::abs(x);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

}  // namespace

Variant parse_variant(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "OURS") return Variant::kOurs;
  if (upper == "IA2C") return Variant::kIA2C;
  if (upper == "CONSENET") return Variant::kConseNet;
  if (upper == "FPRINT") return Variant::kFPrint;
  if (upper == "COMMNET") return Variant::kCommNet;
  if (upper == "DIAL") return Variant::kDial;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kOurs: return "OURS";
    case Variant::kIA2C: return "IA2C";
    case Variant::kConseNet: return "CONSENET";
    case Variant::kFPrint: return "FPRINT";
    case Variant::kCommNet: return "COMMNET";
    case Variant::kDial: return "DIAL";
  }
  return "?";
}

std::vector<Variant> all_variants() {
  return {Variant::kOurs, Variant::kIA2C, Variant::kConseNet,
          Variant::kFPrint, Variant::kCommNet, Variant::kDial};
}

NetworkDims NetworkDims::from_env(const env::EnvConfig& config, Variant variant,
                                  std::size_t encoder, std::size_t hidden,
                                  std::size_t max_degree) {
  NetworkDims d;
  d.variant = variant;
  d.encoder = encoder;
  d.hidden = hidden;
  d.max_degree = max_degree;
  d.ma = static_cast<std::size_t>(config.antenna.positions());
  d.gt = static_cast<std::size_t>(config.num_gts);
  d.phases = config.ris.elements();
  d.min_slot = config.limits.min_slot;
  d.max_slot = config.limits.max_slot;
  return d;
}

std::size_t NetworkDims::belief_input() const {
  switch (variant) {
    case Variant::kOurs: return encoder * (1 + 3 * max_degree);
    case Variant::kFPrint: return encoder * (1 + max_degree);
    case Variant::kIA2C:
    case Variant::kConseNet:
    case Variant::kCommNet:
    case Variant::kDial: return encoder;
  }
  return encoder;
}

void NetworkDims::validate() const {
  if (state == 0 || encoder == 0 || hidden == 0) {
    throw std::invalid_argument("network sizes must be positive");
  }
  if (ma == 0 || gt == 0 || phases == 0) throw std::invalid_argument("action heads must be nonempty");
  if (!(max_slot >= min_slot)) throw std::invalid_argument("slot bounds reversed");
  if (variant == Variant::kDial && encoder < discrete_onehot()) {
    throw std::invalid_argument("DIAL needs encoder size >= " + std::to_string(discrete_onehot()) +
                                " to hold the previous-action one-hot");
  }
}

AgentNetwork::AgentNetwork(const NetworkDims& dims, std::mt19937_64& rng) : dims_(dims) {
  dims_.validate();
  const std::size_t E = dims_.encoder;
  const std::size_t H = dims_.hidden;
  add("encoder/state/weight", {E, dims_.state}, dims_.state, rng);
  add("encoder/state/bias", {E}, dims_.state, rng);
  if (uses_fingerprints(dims_.variant)) {
    add("encoder/fingerprint/weight", {E, dims_.fingerprint()}, dims_.fingerprint(), rng);
    add("encoder/fingerprint/bias", {E}, dims_.fingerprint(), rng);
  }
  if (uses_belief_encoder(dims_.variant)) {
    add("encoder/belief/weight", {E, H}, H, rng);
    add("encoder/belief/bias", {E}, H, rng);
  }
  if (dims_.variant == Variant::kCommNet) {
    add("encoder/mean_belief/weight", {E, H}, H, rng);
    add("encoder/mean_belief/bias", {E}, H, rng);
  }
  const std::size_t lstm_in = dims_.belief_input() + H;
  add("lstm/weight", {4 * H, lstm_in}, lstm_in, rng);
  add("lstm/bias", {4 * H}, lstm_in, rng);

  const std::pair<const char*, std::size_t> heads[] = {
      {"head/heading", dims_.heading}, {"head/vertical", dims_.vertical},
      {"head/ma", dims_.ma},           {"head/gt", dims_.gt},
      {"head/time", 1},                {"head/phase", dims_.phases}};
  for (const auto& [name, width] : heads) {
    add(std::string(name) + "/weight", {width, H}, H, rng);
    add(std::string(name) + "/bias", {width}, H, rng);
  }
  params_.emplace("head/time/log_std",
                  Parameter("head/time/log_std", Tensor({1}, dims_.log_std_init)));
  params_.emplace("head/phase/log_std",
                  Parameter("head/phase/log_std", Tensor({dims_.phases}, dims_.log_std_init)));

  add("critic/weight", {1, dims_.critic_input()}, dims_.critic_input(), rng);
  add("critic/bias", {1}, dims_.critic_input(), rng);
}

void AgentNetwork::add(const std::string& name, std::vector<std::size_t> shape,
                       std::size_t fan_in, std::mt19937_64& rng) {
  Parameter p(name, Tensor(std::move(shape)));
  ad::init_uniform_fan_in(p, fan_in, rng);
  params_.emplace(name, std::move(p));
}

Parameter& AgentNetwork::param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

const Parameter& AgentNetwork::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

std::vector<Parameter*> AgentNetwork::actor_parameters() {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) {
    if (name.rfind("critic/", 0) != 0) out.push_back(&p);
  }
  return out;
}

std::vector<Parameter*> AgentNetwork::critic_parameters() {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) {
    if (name.rfind("critic/", 0) == 0) out.push_back(&p);
  }
  return out;
}

std::vector<Parameter*> AgentNetwork::all_parameters() {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) out.push_back(&p);
  return out;
}

BeliefState initial_belief(Tape& tape, const NetworkDims& dims) {
  return {zeros(tape, dims.hidden), zeros(tape, dims.hidden)};
}

Tensor initial_fingerprint(const NetworkDims& dims) {
  std::vector<double> fp;
  fp.reserve(dims.fingerprint());
  for (std::size_t k : {dims.heading, dims.vertical, dims.ma, dims.gt}) {
    fp.insert(fp.end(), k, 1.0 / static_cast<double>(k));
  }
  fp.push_back(0.5);
  fp.push_back(0.5);
  return Tensor::vector(std::move(fp));
}

BeliefState encode_belief(Tape& tape, AgentNetwork& net, const BeliefInputs& in) {
  const NetworkDims& d = net.dims();
  const std::size_t D = d.max_degree;
  Var x;
  switch (d.variant) {
    case Variant::kOurs: {
      std::vector<Var> blocks;
      blocks.push_back(ad::relu(dense(tape, net, "encoder/state", in.own_state)));
      append_padded(tape, net, "encoder/state", in.neighbor_states, D, blocks);
      append_padded(tape, net, "encoder/fingerprint", in.neighbor_fingerprints, D, blocks);
      append_padded(tape, net, "encoder/belief", in.neighbor_beliefs, D, blocks);
      x = ad::concat(blocks);
      break;
    }
    case Variant::kIA2C:
    case Variant::kConseNet:
      x = ad::relu(dense(tape, net, "encoder/state", in.own_state));
      break;
    case Variant::kFPrint: {
      std::vector<Var> blocks;
      blocks.push_back(ad::relu(dense(tape, net, "encoder/state", in.own_state)));
      append_padded(tape, net, "encoder/fingerprint", in.neighbor_fingerprints, D, blocks);
      x = ad::concat(blocks);
      break;
    }
    case Variant::kCommNet: {
      Var states = ad::tanh(dense(tape, net, "encoder/state", in.own_state));
      for (const Var& s : in.neighbor_states) {
        states = states + ad::tanh(dense(tape, net, "encoder/state", s));
      }
      states = states * (1.0 / static_cast<double>(1 + in.neighbor_states.size()));
      Var mean_belief = zeros(tape, d.hidden);
      if (!in.neighbor_beliefs.empty()) {
        mean_belief = in.neighbor_beliefs.front();
        for (std::size_t k = 1; k < in.neighbor_beliefs.size(); ++k) {
          mean_belief = mean_belief + in.neighbor_beliefs[k];
        }
        mean_belief = mean_belief * (1.0 / static_cast<double>(in.neighbor_beliefs.size()));
      }
      x = states + dense(tape, net, "encoder/mean_belief", mean_belief);
      break;
    }
    case Variant::kDial: {
      Var states = ad::relu(dense(tape, net, "encoder/state", in.own_state));
      for (const Var& s : in.neighbor_states) {
        states = states + ad::relu(dense(tape, net, "encoder/state", s));
      }
      const Var own_belief =
          ad::relu(dense(tape, net, "encoder/belief", ad::relu(in.previous.hidden)));
      if (in.previous_action_onehot.size() != d.discrete_onehot()) {
        throw ad::ShapeError("DIAL previous-action one-hot has the wrong width");
      }
      Var onehot = in.previous_action_onehot;
      if (d.encoder > d.discrete_onehot()) {
        const Var parts[] = {onehot, zeros(tape, d.encoder - d.discrete_onehot())};
        onehot = ad::concat(parts);
      }
      x = states + own_belief + onehot;
      break;
    }
  }
  const auto next = ad::lstm_step(tape.param(net.param("lstm/weight")),
                                  tape.param(net.param("lstm/bias")), x, in.previous.hidden,
                                  in.previous.cell);
  return {next.hidden, next.cell};
}

double squash_time(const NetworkDims& dims, double latent) {
  const double t = dims.min_slot + (dims.max_slot - dims.min_slot) * 0.5 * (std::tanh(latent) + 1.0);
  return std::clamp(t, dims.min_slot, dims.max_slot);
}

double squash_phase(double latent) {
  const double p = std::numbers::pi * std::tanh(latent);
  return p >= std::numbers::pi ? std::nextafter(std::numbers::pi, 0.0) : p;
}

double log_time_jacobian(const NetworkDims& dims, double latent) {
  return std::log(0.5 * (dims.max_slot - dims.min_slot)) + log_one_minus_tanh_sq(latent);
}

double log_phase_jacobian(double latent) {
  return std::log(std::numbers::pi) + log_one_minus_tanh_sq(latent);
}

PolicyOutput act(Tape& tape, AgentNetwork& net, Var belief, std::mt19937_64* rng) {
  const NetworkDims& d = net.dims();
  if (!belief.value().all_finite()) throw ad::NonFiniteError("act: non-finite belief");
  PolicyOutput out;
  out.heading_log_probs = ad::log_softmax(dense(tape, net, "head/heading", belief));
  out.vertical_log_probs = ad::log_softmax(dense(tape, net, "head/vertical", belief));
  out.ma_log_probs = ad::log_softmax(dense(tape, net, "head/ma", belief));
  out.gt_log_probs = ad::log_softmax(dense(tape, net, "head/gt", belief));
  out.time_mean = dense(tape, net, "head/time", belief);
  out.phase_mean = dense(tape, net, "head/phase", belief);
  out.time_log_std = tape.param(net.param("head/time/log_std"));
  out.phase_log_std = tape.param(net.param("head/phase/log_std"));

  out.heading = sample_categorical(out.heading_log_probs.value(), rng);
  out.vertical = sample_categorical(out.vertical_log_probs.value(), rng);
  out.ma = sample_categorical(out.ma_log_probs.value(), rng);
  out.gt = sample_categorical(out.gt_log_probs.value(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  const auto draw = [&](double mean, double log_std) {
    return rng ? mean + std::exp(log_std) * normal(*rng) : mean;
  };
  out.time_latent = draw(out.time_mean.value()[0], out.time_log_std.value()[0]);
  out.phase_latent.resize(d.phases);
  for (std::size_t i = 0; i < d.phases; ++i) {
    out.phase_latent[i] = draw(out.phase_mean.value()[i], out.phase_log_std.value()[i]);
  }

  double log_jacobian = log_time_jacobian(d, out.time_latent);
  for (double u : out.phase_latent) log_jacobian += log_phase_jacobian(u);

  const Var logp = ad::pick(out.heading_log_probs, static_cast<std::size_t>(out.heading)) +
                   ad::pick(out.vertical_log_probs, static_cast<std::size_t>(out.vertical)) +
                   ad::pick(out.ma_log_probs, static_cast<std::size_t>(out.ma)) +
                   ad::pick(out.gt_log_probs, static_cast<std::size_t>(out.gt)) +
                   ad::gaussian_log_prob(out.time_mean, out.time_log_std,
                                         Tensor::vector({out.time_latent})) +
                   ad::gaussian_log_prob(out.phase_mean, out.phase_log_std,
                                         Tensor::vector(out.phase_latent));
  out.log_prob = logp + (-log_jacobian);

  out.entropy = ad::categorical_entropy(out.heading_log_probs) +
                ad::categorical_entropy(out.vertical_log_probs) +
                ad::categorical_entropy(out.ma_log_probs) +
                ad::categorical_entropy(out.gt_log_probs) +
                ad::gaussian_entropy(out.time_log_std) + ad::gaussian_entropy(out.phase_log_std);

  const Var time_unit = (ad::tanh(out.time_mean) + 1.0) * 0.5;
  const Var phase_unit = (ad::mean(ad::tanh(out.phase_mean)) + 1.0) * 0.5;
  const Var fp_parts[] = {ad::exp(out.heading_log_probs), ad::exp(out.vertical_log_probs),
                          ad::exp(out.ma_log_probs), ad::exp(out.gt_log_probs), time_unit,
                          phase_unit};
  out.fingerprint = ad::concat(fp_parts);

  env::UavAction& a = out.action;
  a.heading = static_cast<mobility::Heading>(out.heading);
  a.vertical = static_cast<mobility::Vertical>(out.vertical);
  a.ma_index = out.ma + 1;
  a.gt_vote = out.gt;
  a.slot_time = squash_time(d, out.time_latent);
  a.phases.resize(d.phases);
  for (std::size_t i = 0; i < d.phases; ++i) a.phases[i] = squash_phase(out.phase_latent[i]);
  return out;
}

std::vector<double> discrete_onehot(const NetworkDims& dims, const env::UavAction& action) {
  std::vector<double> out(dims.discrete_onehot(), 0.0);
  std::size_t offset = 0;
  out[offset + static_cast<std::size_t>(action.heading)] = 1.0;
  offset += dims.heading;
  out[offset + static_cast<std::size_t>(action.vertical)] = 1.0;
  offset += dims.vertical;
  out[offset + static_cast<std::size_t>(action.ma_index - 1)] = 1.0;
  offset += dims.ma;
  out[offset + static_cast<std::size_t>(action.gt_vote)] = 1.0;
  return out;
}

std::vector<double> encode_action(const NetworkDims& dims, const env::UavAction& action) {
  std::vector<double> out = discrete_onehot(dims, action);
  const double span = dims.max_slot - dims.min_slot;
  out.push_back(span > 0.0 ? (action.slot_time - dims.min_slot) / span : 0.0);
  if (action.phases.size() != dims.phases) throw ad::ShapeError("encode_action: phase count");
  for (double p : action.phases) out.push_back(p / std::numbers::pi);
  return out;
}

std::vector<double> neighbor_action_block(const NetworkDims& dims,
                                          std::span<const env::UavAction* const> neighbors) {
  if (neighbors.size() > dims.max_degree) {
    throw ad::ShapeError("neighbor_action_block: more neighbors than max degree");
  }
  std::vector<double> out;
  out.reserve(dims.max_degree * dims.action_encoding());
  for (const env::UavAction* a : neighbors) {
    const auto enc = encode_action(dims, *a);
    out.insert(out.end(), enc.begin(), enc.end());
  }
  out.resize(dims.max_degree * dims.action_encoding(), 0.0);
  return out;
}

Var value(Tape& tape, AgentNetwork& net, Var belief, const std::vector<double>& neighbor_actions) {
  const NetworkDims& d = net.dims();
  if (neighbor_actions.size() != d.max_degree * d.action_encoding()) {
    throw ad::ShapeError("value: neighbor action block has the wrong width");
  }
  if (neighbor_actions.empty()) return ad::pick(dense(tape, net, "critic", belief), 0);
  const Var parts[] = {belief, tape.constant(Tensor::vector(neighbor_actions))};
  return ad::pick(dense(tape, net, "critic", ad::concat(parts)), 0);
}

}  // namespace uavnet::policy
