#include "uavnet/training.hpp"

#include <cmath>
#include <stdexcept>

#include "uavnet/seeding.hpp"

namespace uavnet::training {

using ad::Tape;
using ad::Tensor;
using ad::Var;

EntropySign parse_entropy_sign(const std::string& name) {
  if (name == "penalty") return EntropySign::kPenalty;
  if (name == "bonus") return EntropySign::kBonus;
  throw std::invalid_argument("unknown entropy sign '" + name + "'");
}

std::string to_string(EntropySign sign) {
  return sign == EntropySign::kPenalty ? "penalty" : "bonus";
}

BootstrapWeighting parse_bootstrap(const std::string& name) {
  if (name == "spatial") return BootstrapWeighting::kSpatial;
  if (name == "own") return BootstrapWeighting::kOwn;
  throw std::invalid_argument("unknown bootstrap weighting '" + name + "'");
}

std::string to_string(BootstrapWeighting weighting) {
  return weighting == BootstrapWeighting::kSpatial ? "spatial" : "own";
}

void MarlConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
  if (!(lr_actor >= 0.0) || !(lr_critic >= 0.0)) {
    throw std::invalid_argument("learning rates must be nonnegative");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (hidden_size < 1 || encoder_size < 1) throw std::invalid_argument("network sizes must be positive");
  if (max_degree < -1) throw std::invalid_argument("max_degree must be -1 or nonnegative");
  if (episodes < 0) throw std::invalid_argument("episodes must be nonnegative");
  if (!(reward_scale > 0.0)) throw std::invalid_argument("reward_scale must be positive");
  if (!std::isfinite(log_std_init)) throw std::invalid_argument("log_std_init must be finite");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be nonnegative");
  if (!(divergence_threshold > 0.0)) throw std::invalid_argument("divergence_threshold must be positive");
}

std::size_t MarlConfig::resolved_max_degree(int num_uavs) const {
  return max_degree < 0 ? static_cast<std::size_t>(num_uavs - 1)
                        : static_cast<std::size_t>(max_degree);
}

MultiAgent::MultiAgent(const env::EnvConfig& env_config, const MarlConfig& marl,
                       std::uint64_t init_seed)
    : num_agents_(env_config.num_uavs) {
  marl.validate();
  dims_ = policy::NetworkDims::from_env(env_config, marl.variant,
                                        static_cast<std::size_t>(marl.encoder_size),
                                        static_cast<std::size_t>(marl.hidden_size),
                                        marl.resolved_max_degree(env_config.num_uavs));
  dims_.log_std_init = marl.log_std_init;
  std::mt19937_64 rng(init_seed);
  const int count = marl.share_parameters ? 1 : num_agents_;
  for (int j = 0; j < count; ++j) {
    networks_.push_back(std::make_unique<policy::AgentNetwork>(dims_, rng));
  }
}

policy::AgentNetwork& MultiAgent::network(int agent) {
  if (agent < 0 || agent >= num_agents_) throw std::out_of_range("agent index out of range");
  return *networks_[networks_.size() == 1 ? 0 : static_cast<std::size_t>(agent)];
}

Carry Carry::initial(const policy::NetworkDims& dims, int num_agents) {
  Carry c;
  const auto n = static_cast<std::size_t>(num_agents);
  c.hidden.assign(n, Tensor({dims.hidden}, 0.0));
  c.cell.assign(n, Tensor({dims.hidden}, 0.0));
  c.fingerprint.assign(n, policy::initial_fingerprint(dims));
  c.previous_onehot.assign(n, std::vector<double>(dims.discrete_onehot(), 0.0));
  return c;
}

CarryVars CarryVars::from(Tape& tape, const Carry& carry) {
  CarryVars v;
  for (std::size_t j = 0; j < carry.hidden.size(); ++j) {
    v.belief.push_back({tape.constant(carry.hidden[j]), tape.constant(carry.cell[j])});
    v.fingerprint.push_back(tape.constant(carry.fingerprint[j]));
  }
  v.previous_onehot = carry.previous_onehot;
  return v;
}

Carry CarryVars::freeze() const {
  Carry c;
  for (std::size_t j = 0; j < belief.size(); ++j) {
    c.hidden.push_back(belief[j].hidden.value());
    c.cell.push_back(belief[j].cell.value());
    c.fingerprint.push_back(fingerprint[j].value());
  }
  for (auto& t : c.hidden) t.set_requires_grad(false);
  for (auto& t : c.cell) t.set_requires_grad(false);
  for (auto& t : c.fingerprint) t.set_requires_grad(false);
  c.previous_onehot = previous_onehot;
  return c;
}

SlotForward forward_slot(Tape& tape, MultiAgent& agents, const comm::CommGraph& graph, int slot,
                         std::span<const Var> states, CarryVars& carry, std::mt19937_64* rng,
                         const MessageHook* hook) {
  const int J = agents.num_agents();
  if (static_cast<int>(states.size()) != J || graph.size() != J) {
    throw std::invalid_argument("forward_slot: agent count mismatch");
  }
  SlotForward out;
  for (int i = 0; i < J; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.messages.push_back(comm::compose_message(i, slot, states[k], carry.fingerprint[k],
                                                 carry.belief[k].hidden));
  }
  if (hook != nullptr && *hook) (*hook)(slot, out.messages, tape);
  const auto inbox = comm::deliver(graph, out.messages);

  const bool dial = agents.dims().variant == policy::Variant::kDial;
  for (int j = 0; j < J; ++j) {
    const auto k = static_cast<std::size_t>(j);
    policy::BeliefInputs in;
    in.own_state = states[k];
    for (const auto& m : inbox[k]) {
      in.neighbor_states.push_back(m.state);
      in.neighbor_fingerprints.push_back(m.fingerprint);
      in.neighbor_beliefs.push_back(m.belief);
    }
    in.previous = carry.belief[k];
    if (dial) in.previous_action_onehot = tape.constant(Tensor::vector(carry.previous_onehot[k]));
    out.beliefs.push_back(policy::encode_belief(tape, agents.network(j), in));
  }
  for (int j = 0; j < J; ++j) {
    const auto k = static_cast<std::size_t>(j);
    out.policies.push_back(policy::act(tape, agents.network(j), out.beliefs[k].hidden, rng));
  }
  for (int j = 0; j < J; ++j) {
    const auto k = static_cast<std::size_t>(j);
    carry.belief[k] = out.beliefs[k];
    carry.fingerprint[k] = out.policies[k].fingerprint;
    carry.previous_onehot[k] = policy::discrete_onehot(agents.dims(), out.policies[k].action);
  }
  return out;
}

std::vector<Var> critic_values(Tape& tape, MultiAgent& agents, const comm::CommGraph& graph,
                               const SlotForward& forward) {
  std::vector<Var> values;
  for (int j = 0; j < agents.num_agents(); ++j) {
    std::vector<const env::UavAction*> neighbors;
    for (int i : graph.neighbors[static_cast<std::size_t>(j)]) {
      neighbors.push_back(&forward.policies[static_cast<std::size_t>(i)].action);
    }
    const auto block = policy::neighbor_action_block(agents.dims(), neighbors);
    const Var belief = ad::stop_gradient(forward.beliefs[static_cast<std::size_t>(j)].hidden);
    values.push_back(policy::value(tape, agents.network(j), belief, block));
  }
  return values;
}

double spatial_weight(double alpha, int hops) {
  if (hops == comm::kUnreachable) return 0.0;
  return std::pow(alpha, hops);
}

std::vector<std::vector<double>> spatiotemporal_return(
    const std::vector<std::vector<double>>& rewards,
    const std::vector<std::vector<std::vector<int>>>& hops, double alpha, double gamma,
    const std::vector<double>& bootstrap, const std::vector<std::vector<int>>& bootstrap_hops) {
  if (rewards.size() != hops.size()) throw std::invalid_argument("spatiotemporal_return: one hop matrix per slot");
  if (rewards.empty()) return {};
  const std::size_t J = rewards.front().size();

  const auto weighted = [&](const std::vector<std::vector<int>>& d, const std::vector<double>& r,
                            std::size_t j) {
    if (d.size() != J || r.size() != J) throw std::invalid_argument("spatiotemporal_return: agent count mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < J; ++i) acc += spatial_weight(alpha, d[j][i]) * r[i];
    return acc;
  };

  std::vector<double> tail(J, 0.0);
  if (!bootstrap.empty()) {
    const auto& d = bootstrap_hops.empty() ? hops.back() : bootstrap_hops;
    for (std::size_t j = 0; j < J; ++j) tail[j] = weighted(d, bootstrap, j);
  }
  std::vector<std::vector<double>> out(rewards.size(), std::vector<double>(J, 0.0));
  for (std::size_t n = rewards.size(); n-- > 0;) {
    for (std::size_t j = 0; j < J; ++j) {
      tail[j] = weighted(hops[n], rewards[n], j) + gamma * tail[j];
      out[n][j] = tail[j];
    }
  }
  return out;
}

std::vector<std::vector<double>> spatiotemporal_return(
    const std::vector<std::vector<double>>& rewards, const std::vector<std::vector<int>>& hops,
    double alpha, double gamma, const std::vector<double>& bootstrap) {
  const std::vector<std::vector<std::vector<int>>> per_slot(rewards.size(), hops);
  return spatiotemporal_return(rewards, per_slot, alpha, gamma, bootstrap, hops);
}

std::vector<double> advantage(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size()) throw std::invalid_argument("advantage: length mismatch");
  std::vector<double> out(returns.size());
  for (std::size_t n = 0; n < returns.size(); ++n) out[n] = returns[n] - values[n];
  return out;
}

Var actor_loss(std::span<const Var> log_probs, std::span<const Var> entropies,
               std::span<const double> advantages, double beta, EntropySign sign) {
  if (log_probs.empty() || log_probs.size() != entropies.size() ||
      log_probs.size() != advantages.size()) {
    throw std::invalid_argument("actor_loss: batch arrays must be nonempty and aligned");
  }
  const double s = sign == EntropySign::kPenalty ? beta : -beta;
  Var total;
  for (std::size_t n = 0; n < log_probs.size(); ++n) {
    if (!std::isfinite(log_probs[n].item())) throw ad::NonFiniteError("actor_loss: non-finite log-prob");
    const Var term = log_probs[n] * (-advantages[n]) + entropies[n] * s;
    total = total.valid() ? total + term : term;
  }
  return total * (1.0 / static_cast<double>(log_probs.size()));
}

Var critic_loss(std::span<const Var> values, std::span<const double> returns) {
  if (values.empty() || values.size() != returns.size()) {
    throw std::invalid_argument("critic_loss: batch arrays must be nonempty and aligned");
  }
  Var total;
  for (std::size_t n = 0; n < values.size(); ++n) {
    const Var term = ad::square(values[n] + (-returns[n]));
    total = total.valid() ? total + term : term;
  }
  return total * (1.0 / static_cast<double>(values.size()));
}

void consensus_update(std::vector<std::vector<ad::Parameter*>>& parameter_sets,
                      const comm::CommGraph& graph) {
  if (static_cast<int>(parameter_sets.size()) != graph.size()) {
    throw std::invalid_argument("consensus_update: one parameter set per agent required");
  }
  std::vector<std::vector<Tensor>> snapshot;
  for (const auto& set : parameter_sets) {
    std::vector<Tensor> copy;
    for (const ad::Parameter* p : set) copy.push_back(p->value);
    snapshot.push_back(std::move(copy));
  }
  for (std::size_t j = 0; j < parameter_sets.size(); ++j) {
    const auto& nbrs = graph.neighbors[j];
    const double inv = 1.0 / static_cast<double>(1 + nbrs.size());
    for (std::size_t k = 0; k < parameter_sets[j].size(); ++k) {
      Tensor& target = parameter_sets[j][k]->value;
      for (std::size_t e = 0; e < target.size(); ++e) {
        double acc = snapshot[j][k][e];
        for (int i : nbrs) acc += snapshot[static_cast<std::size_t>(i)][k][e];
        target[e] = acc * inv;
      }
    }
  }
}

namespace {

struct Batch {
  Tape* tape = nullptr;
  std::vector<std::vector<Var>> log_probs;  // [agent][slot]
  std::vector<std::vector<Var>> entropies;
  std::vector<std::vector<Var>> values;
  std::vector<std::vector<double>> returns;  // [slot][agent]
  comm::CommGraph last_graph;
};

std::vector<Var> state_vars(Tape& tape, const env::Environment& environment) {
  std::vector<Var> states;
  for (int j = 0; j < environment.config().num_uavs; ++j) {
    states.push_back(
        tape.constant(Tensor::vector(env::local_state(environment.config(), environment.state(), j))));
  }
  return states;
}

struct RolloutTotals {
  double reward_sum = 0.0;
  int slots = 0;
};

// Runs one episode in batches of at most batch_size slots; each batch lives
// on its own tape and is handed to `on_batch` with its returns.
RolloutTotals rollout(MultiAgent& agents, const env::EnvConfig& env_config, const MarlConfig& marl,
                      std::uint64_t env_seed, std::mt19937_64* rng, EpisodeTrace* trace,
                      const std::function<void(Batch&)>& on_batch) {
  env::Environment environment(env_config);
  environment.reset(env_seed);
  if (trace != nullptr) {
    trace->env_seed = env_seed;
    trace->initial = environment.state();
    trace->actions.clear();
    trace->outcomes.clear();
  }
  const int J = env_config.num_uavs;
  Carry carry = Carry::initial(agents.dims(), J);
  RolloutTotals totals;

  while (!environment.done()) {
    Tape tape;
    CarryVars cv = CarryVars::from(tape, carry);
    Batch batch;
    batch.tape = &tape;
    batch.log_probs.resize(static_cast<std::size_t>(J));
    batch.entropies.resize(static_cast<std::size_t>(J));
    batch.values.resize(static_cast<std::size_t>(J));
    std::vector<std::vector<double>> rewards;
    std::vector<std::vector<std::vector<int>>> hops;

    while (static_cast<int>(rewards.size()) < marl.batch_size && !environment.done()) {
      const int slot = environment.state().slot_index;
      const auto positions = environment.uav_positions();
      batch.last_graph = comm::build_graph(positions, env_config.comm_radius);
      const auto states = state_vars(tape, environment);
      const SlotForward f = forward_slot(tape, agents, batch.last_graph, slot, states, cv, rng);
      const auto values = critic_values(tape, agents, batch.last_graph, f);

      env::JointAction joint;
      for (const auto& p : f.policies) joint.push_back(p.action);
      env::StepOutcome outcome = environment.step(joint);

      std::vector<double> scaled(outcome.rewards.size());
      for (std::size_t j = 0; j < scaled.size(); ++j) scaled[j] = outcome.rewards[j] * marl.reward_scale;
      rewards.push_back(std::move(scaled));
      hops.push_back(batch.last_graph.hops);
      totals.reward_sum += outcome.global_reward;
      ++totals.slots;
      for (std::size_t j = 0; j < static_cast<std::size_t>(J); ++j) {
        batch.log_probs[j].push_back(f.policies[j].log_prob);
        batch.entropies[j].push_back(f.policies[j].entropy);
        batch.values[j].push_back(values[j]);
      }
      if (trace != nullptr) {
        trace->actions.push_back(std::move(joint));
        trace->outcomes.push_back(std::move(outcome));
      }
    }

    std::vector<double> bootstrap;
    std::vector<std::vector<int>> bootstrap_hops;
    if (!environment.done()) {
      const auto graph = comm::build_graph(environment.uav_positions(), env_config.comm_radius);
      CarryVars lookahead = cv;
      const auto states = state_vars(tape, environment);
      const SlotForward f = forward_slot(tape, agents, graph, environment.state().slot_index, states,
                                         lookahead, nullptr);
      for (const Var& v : critic_values(tape, agents, graph, f)) bootstrap.push_back(v.item());
      bootstrap_hops = graph.hops;
      if (marl.bootstrap == BootstrapWeighting::kOwn) {
        for (std::size_t j = 0; j < bootstrap_hops.size(); ++j) {
          for (std::size_t i = 0; i < bootstrap_hops[j].size(); ++i) {
            bootstrap_hops[j][i] = i == j ? 0 : comm::kUnreachable;
          }
        }
      }
    }
    batch.returns = spatiotemporal_return(rewards, hops, marl.alpha, marl.gamma, bootstrap,
                                          bootstrap_hops);
    on_batch(batch);
    carry = cv.freeze();
  }
  return totals;
}

std::vector<double> item_values(const std::vector<Var>& vars) {
  std::vector<double> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(v.item());
  return out;
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t j) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

}  // namespace

EvalResult evaluate_greedy(MultiAgent& agents, const env::EnvConfig& env_config,
                           const MarlConfig& marl, std::uint64_t env_seed) {
  EvalResult result;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  std::size_t count = 0;
  const RolloutTotals totals =
      rollout(agents, env_config, marl, env_seed, nullptr, &result.trace, [&](Batch& b) {
        for (std::size_t j = 0; j < b.values.size(); ++j) {
          const auto adv = advantage(column(b.returns, j), item_values(b.values[j]));
          for (double a : adv) {
            abs_sum += std::abs(a);
            sq_sum += a * a;
            ++count;
          }
        }
      });
  result.mean_reward = totals.slots > 0 ? totals.reward_sum / totals.slots : 0.0;
  if (count > 0) {
    result.td_error = abs_sum / static_cast<double>(count);
    result.adv_error = sq_sum / static_cast<double>(count);
  }
  return result;
}

Trainer::Trainer(env::EnvConfig env_config, MarlConfig marl, std::uint64_t seed)
    : env_config_(std::move(env_config)),
      marl_(marl),
      env_seed_(derive_seed(seed, SeedStream::kEnvironment)),
      agents_(env_config_, marl_, derive_seed(seed, SeedStream::kInitialization)),
      sampler_(derive_seed(seed, SeedStream::kSampling)) {
  env_config_.validate();
  for (std::size_t k = 0; k < agents_.num_networks(); ++k) {
    auto& net = agents_.network_at(k);
    actor_opt_.emplace_back(net.actor_parameters(), marl_.lr_actor);
    critic_opt_.emplace_back(net.critic_parameters(), marl_.lr_critic);
  }
}

void Trainer::update(Tape& tape, const std::vector<std::vector<Var>>& log_probs,
                     const std::vector<std::vector<Var>>& entropies,
                     const std::vector<std::vector<Var>>& values,
                     const std::vector<std::vector<double>>& returns,
                     const comm::CommGraph& last_graph, double& actor_out, double& critic_out) {
  for (auto& opt : actor_opt_) opt.zero_grad();
  for (auto& opt : critic_opt_) opt.zero_grad();

  Var total;
  actor_out = 0.0;
  critic_out = 0.0;
  const std::size_t J = log_probs.size();
  for (std::size_t j = 0; j < J; ++j) {
    const auto target = column(returns, j);
    const auto adv = advantage(target, item_values(values[j]));
    const Var a = actor_loss(log_probs[j], entropies[j], adv, marl_.beta, marl_.entropy_sign);
    const Var c = critic_loss(values[j], target);
    const double av = a.item();
    const double cv = c.item();
    if (!std::isfinite(av) || !std::isfinite(cv) || std::abs(av) > marl_.divergence_threshold ||
        std::abs(cv) > marl_.divergence_threshold) {
      throw TrainingDiverged("loss exceeded the divergence threshold at episode " +
                             std::to_string(episode_ + 1));
    }
    actor_out += av;
    critic_out += cv;
    const Var both = a + c;
    total = total.valid() ? total + both : both;
  }
  actor_out /= static_cast<double>(J);
  critic_out /= static_cast<double>(J);

  tape.backward(total);
  for (auto& opt : actor_opt_) opt.step();
  for (auto& opt : critic_opt_) opt.step();

  if (marl_.variant == policy::Variant::kConseNet && !agents_.shared()) {
    std::vector<std::vector<ad::Parameter*>> sets;
    for (int j = 0; j < agents_.num_agents(); ++j) {
      sets.push_back(agents_.network(j).critic_parameters());
    }
    consensus_update(sets, last_graph);
  }
}

EpisodeMetrics Trainer::run_episode() {
  EpisodeMetrics m;
  m.episode = ++episode_;
  double actor_sum = 0.0;
  double critic_sum = 0.0;
  int batches = 0;
  const RolloutTotals totals =
      rollout(agents_, env_config_, marl_, env_seed_, &sampler_, nullptr, [&](Batch& b) {
        double a = 0.0;
        double c = 0.0;
        update(*b.tape, b.log_probs, b.entropies, b.values, b.returns, b.last_graph, a, c);
        actor_sum += a;
        critic_sum += c;
        ++batches;
      });
  m.reward = totals.slots > 0 ? totals.reward_sum / totals.slots : 0.0;
  m.actor_loss = batches > 0 ? actor_sum / batches : 0.0;
  m.critic_loss = batches > 0 ? critic_sum / batches : 0.0;

  const EvalResult eval = evaluate_greedy(agents_, env_config_, marl_, env_seed_);
  m.td_error = eval.td_error;
  m.adv_error = eval.adv_error;
  return m;
}

std::vector<EpisodeMetrics> train(const env::EnvConfig& env_config, const MarlConfig& marl,
                                  std::uint64_t seed, const EpisodeCallback& on_episode) {
  Trainer trainer(env_config, marl, seed);
  std::vector<EpisodeMetrics> history;
  history.reserve(static_cast<std::size_t>(marl.episodes));
  for (int e = 0; e < marl.episodes; ++e) {
    history.push_back(trainer.run_episode());
    if (on_episode) on_episode(history.back(), trainer);
  }
  return history;
}

}  // namespace uavnet::training
