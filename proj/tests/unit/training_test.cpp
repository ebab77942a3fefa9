#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "probes.hpp"
#include "uavnet/grad_check.hpp"
#include "uavnet/training.hpp"

namespace uavnet::training {
namespace {

using ad::Tape;
using ad::Tensor;
using ad::Var;

using Field = std::vector<std::vector<double>>;
using HopSeries = std::vector<std::vector<std::vector<int>>>;

Field random_field(std::mt19937_64& rng, int slots, int agents) {
  std::uniform_real_distribution<double> u(-2.0, 5.0);
  Field r(static_cast<std::size_t>(slots), std::vector<double>(static_cast<std::size_t>(agents)));
  for (auto& row : r) {
    for (double& v : row) v = u(rng);
  }
  return r;
}

std::vector<std::vector<int>> random_hops(std::mt19937_64& rng, int agents) {
  std::bernoulli_distribution edge(0.4);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < agents; ++i) {
    for (int j = i + 1; j < agents; ++j) {
      if (edge(rng)) edges.emplace_back(i, j);
    }
  }
  return comm::graph_from_edges(agents, edges).hops;
}

void expect_close(const Field& actual, const Field& expected, double tol) {
  ASSERT_EQ(actual.size(), expected.size());
  for (std::size_t n = 0; n < actual.size(); ++n) {
    for (std::size_t j = 0; j < actual[n].size(); ++j) {
      EXPECT_LE(std::abs(actual[n][j] - expected[n][j]), tol * std::max(1.0, std::abs(expected[n][j])))
          << "slot " << n << " agent " << j;
    }
  }
}

TEST(SpatialReturnTest, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(31);
  for (double alpha : {0.0, 0.8, 0.9, 1.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Field r = random_field(rng, 9, 4);
      HopSeries hops;
      for (int n = 0; n < 9; ++n) hops.push_back(random_hops(rng, 4));
      const auto tail_hops = random_hops(rng, 4);
      const std::vector<double> v{0.3, -1.0, 2.0, 0.7};
      expect_close(spatiotemporal_return(r, hops, alpha, 0.95), oracle::spatial_return(r, hops, alpha, 0.95), 1e-12);
      expect_close(spatiotemporal_return(r, hops, alpha, 0.95, v, tail_hops),
                   oracle::spatial_return(r, hops, alpha, 0.95, v, tail_hops), 1e-12);
    }
  }
}

TEST(SpatialReturnTest, AlphaZeroIsLocalReturn) {
  std::mt19937_64 rng(32);
  const Field r = random_field(rng, 7, 4);
  HopSeries hops;
  for (int n = 0; n < 7; ++n) hops.push_back(random_hops(rng, 4));
  const Field out = spatiotemporal_return(r, hops, 0.0, 0.9);
  for (std::size_t j = 0; j < 4; ++j) {
    double local = 0.0;
    for (std::size_t n = r.size(); n-- > 0;) {
      local = r[n][j] + 0.9 * local;
      EXPECT_EQ(out[n][j], local);
    }
  }
}

TEST(SpatialReturnTest, TwoAgentWorkedExample) {
  const Field r{{1.5, 4.0}};
  const std::vector<std::vector<int>> hops{{0, 1}, {1, 0}};
  const Field out = spatiotemporal_return(r, hops, 0.8, 1.0);
  EXPECT_DOUBLE_EQ(out[0][0], 1.5 + 0.8 * 4.0);
  EXPECT_DOUBLE_EQ(out[0][1], 4.0 + 0.8 * 1.5);
}

TEST(SpatialReturnTest, AlphaOneSingleAgentIsDiscountedSum) {
  const Field r{{1.0}, {2.0}, {4.0}};
  const std::vector<std::vector<int>> hops{{0}};
  const Field out = spatiotemporal_return(r, hops, 1.0, 0.5, {8.0});
  EXPECT_DOUBLE_EQ(out[2][0], 4.0 + 0.5 * 8.0);
  EXPECT_DOUBLE_EQ(out[0][0], 1.0 + 0.5 * 2.0 + 0.25 * 4.0 + 0.125 * 8.0);
}

TEST(SpatialReturnTest, FarAgentsContributeAtMostGeometricShare) {
  std::mt19937_64 rng(33);
  const int agents = 6;
  std::vector<std::pair<int, int>> path;
  for (int i = 0; i + 1 < agents; ++i) path.emplace_back(i, i + 1);
  const auto hops = comm::graph_from_edges(agents, path).hops;
  for (double alpha : {0.3, 0.8, 0.9}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Field r = random_field(rng, 1, agents);
      double max_abs = 0.0;
      for (double v : r[0]) max_abs = std::max(max_abs, std::abs(v));
      for (int j = 0; j < agents; ++j) {
        for (int h = 1; h < agents; ++h) {
          Field far = r;
          for (int i = 0; i < agents; ++i) {
            if (hops[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] < h) far[0][static_cast<std::size_t>(i)] = 0.0;
          }
          const double share = spatiotemporal_return(far, hops, alpha, 0.9)[0][static_cast<std::size_t>(j)];
          EXPECT_LE(std::abs(share), agents * std::pow(alpha, h) * max_abs + 1e-12);
        }
      }
    }
  }
}

TEST(SpatialReturnTest, Validation) {
  const Field r{{1.0, 2.0}};
  EXPECT_THROW(spatiotemporal_return(r, HopSeries{}, 0.5, 0.9), std::invalid_argument);
  const std::vector<std::vector<int>> bad{{0}};
  EXPECT_THROW(spatiotemporal_return(r, bad, 0.5, 0.9), std::invalid_argument);
  EXPECT_TRUE(spatiotemporal_return(Field{}, HopSeries{}, 0.5, 0.9).empty());
  EXPECT_EQ(spatial_weight(0.5, comm::kUnreachable), 0.0);
  EXPECT_EQ(spatial_weight(0.0, 0), 1.0);
}

TEST(LossTest, AdvantageIsReturnMinusValue) {
  const std::vector<double> r{3.0, -1.0};
  const std::vector<double> v{1.0, 0.5};
  EXPECT_EQ(advantage(r, v), (std::vector<double>{2.0, -1.5}));
  EXPECT_THROW(advantage(r, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(LossTest, ActorLossZeroWithoutSignal) {
  Tape tape;
  const Var lp[] = {tape.constant(Tensor::scalar(-1.3)), tape.constant(Tensor::scalar(-0.2))};
  const Var h[] = {tape.constant(Tensor::scalar(2.0)), tape.constant(Tensor::scalar(1.0))};
  const double adv[] = {0.0, 0.0};
  EXPECT_EQ(actor_loss(lp, h, adv, 0.0, EntropySign::kPenalty).item(), 0.0);
}

TEST(LossTest, UniformHeadEntropyTerm) {
  for (int k : {2, 5, 9}) {
    Tape tape;
    const Var log_probs = ad::log_softmax(tape.constant(Tensor({static_cast<std::size_t>(k)}, 0.0)));
    const Var lp[] = {ad::pick(log_probs, 0)};
    const Var h[] = {ad::categorical_entropy(log_probs)};
    const double adv[] = {0.0};
    EXPECT_NEAR(actor_loss(lp, h, adv, 1.0, EntropySign::kPenalty).item(), std::log(k), 1e-14);
    EXPECT_NEAR(actor_loss(lp, h, adv, 1.0, EntropySign::kBonus).item(), -std::log(k), 1e-14);
  }
}

TEST(LossTest, ReinforceGradientOnLogits) {
  const Tensor logits = Tensor::vector({0.2, -0.4, 1.1});
  const double a = 1.7;
  Tape tape;
  const Var x = tape.leaf(logits);
  const Var lp[] = {ad::pick(ad::log_softmax(x), 2)};
  const Var h[] = {tape.constant(Tensor::scalar(0.0))};
  const double adv[] = {a};
  tape.backward(actor_loss(lp, h, adv, 0.0, EntropySign::kPenalty));
  double z = 0.0;
  for (double l : logits.storage()) z += std::exp(l);
  const Tensor g = tape.grad(x);
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = std::exp(logits[i]) / z;
    EXPECT_NEAR(g[i], -a * ((i == 2 ? 1.0 : 0.0) - p), 1e-14);
  }
}

TEST(LossTest, CriticLossAtZeroValues) {
  Tape tape;
  const Var v[] = {tape.constant(Tensor::scalar(0.0)), tape.constant(Tensor::scalar(0.0)),
                   tape.constant(Tensor::scalar(0.0))};
  const double r[] = {1.0, -2.0, 3.0};
  EXPECT_DOUBLE_EQ(critic_loss(v, r).item(), 14.0 / 3.0);
  EXPECT_THROW(critic_loss(std::span<const Var>{}, std::span<const double>{}), std::invalid_argument);
}

TEST(LossTest, GradientsMatchFiniteDifferences) {
  const std::vector<double> r{0.4, -1.2, 2.5};
  const std::vector<double> adv{1.1, -0.3, 0.6};
  const ad::ScalarFunction critic = [&](Tape&, std::span<const Var> in) {
    const Var v[] = {ad::pick(in[0], 0), ad::pick(in[0], 1), ad::pick(in[0], 2)};
    return critic_loss(v, r);
  };
  EXPECT_LT(ad::grad_check(critic, {Tensor::vector({0.1, 0.5, -0.7})}).max_relative_error, 1e-4);
  const ad::ScalarFunction actor = [&](Tape&, std::span<const Var> in) {
    std::vector<Var> lp;
    std::vector<Var> h;
    for (std::size_t n = 0; n < 3; ++n) {
      const Var logp = ad::log_softmax(ad::slice(in[0], 4 * n, 4));
      lp.push_back(ad::pick(logp, n));
      h.push_back(ad::categorical_entropy(logp));
    }
    return actor_loss(lp, h, adv, 0.005, EntropySign::kPenalty);
  };
  std::mt19937_64 rng(34);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor point({12});
  for (double& v : point.storage()) v = normal(rng);
  EXPECT_LT(ad::grad_check(actor, {point}).max_relative_error, 1e-4);
}

std::vector<std::vector<ad::Parameter*>> scalar_sets(std::vector<ad::Parameter>& params) {
  std::vector<std::vector<ad::Parameter*>> sets;
  for (auto& p : params) sets.push_back({&p});
  return sets;
}

TEST(ConsensusTest, PathAverages) {
  std::vector<ad::Parameter> params{{"w", Tensor::vector({0.0})}, {"w", Tensor::vector({3.0})},
                                    {"w", Tensor::vector({6.0})}};
  auto sets = scalar_sets(params);
  const std::pair<int, int> edges[] = {{0, 1}, {1, 2}};
  consensus_update(sets, comm::graph_from_edges(3, edges));
  EXPECT_DOUBLE_EQ(params[0].value[0], 1.5);
  EXPECT_DOUBLE_EQ(params[1].value[0], 3.0);
  EXPECT_DOUBLE_EQ(params[2].value[0], 4.5);
}

TEST(ConsensusTest, FixedPointAndIsolatedAgents) {
  std::vector<ad::Parameter> same{{"w", Tensor::vector({2.0, -1.0})}, {"w", Tensor::vector({2.0, -1.0})}};
  auto sets = scalar_sets(same);
  const std::pair<int, int> edge[] = {{0, 1}};
  consensus_update(sets, comm::graph_from_edges(2, edge));
  EXPECT_EQ(same[0].value, Tensor::vector({2.0, -1.0}));
  std::vector<ad::Parameter> apart{{"w", Tensor::vector({1.0})}, {"w", Tensor::vector({5.0})}};
  auto apart_sets = scalar_sets(apart);
  consensus_update(apart_sets, comm::graph_from_edges(2, std::span<const std::pair<int, int>>{}));
  EXPECT_EQ(apart[0].value[0], 1.0);
  EXPECT_EQ(apart[1].value[0], 5.0);
  EXPECT_THROW(consensus_update(apart_sets, comm::graph_from_edges(3, edge)), std::invalid_argument);
}

TEST(ConsensusTest, RegularGraphPreservesMean) {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ad::Parameter> params;
  double before = 0.0;
  for (int i = 0; i < 6; ++i) {
    params.emplace_back("w", Tensor::vector({normal(rng)}));
    before += params.back().value[0];
  }
  auto sets = scalar_sets(params);
  const std::pair<int, int> ring[] = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}};
  consensus_update(sets, comm::graph_from_edges(6, ring));
  double after = 0.0;
  for (const auto& p : params) after += p.value[0];
  EXPECT_NEAR(after, before, 1e-12);
}

TEST(LatencyTest, PerturbationArrivesAfterHopDelay) {
  for (policy::Variant v : {policy::Variant::kOurs, policy::Variant::kCommNet, policy::Variant::kDial,
                            policy::Variant::kFPrint}) {
    for (int J = 2; J <= 4; ++J) {
      auto setup = probe::chain(J, v);
      MultiAgent agents(setup.env, setup.marl, 40);
      const auto states = probe::random_states(8, J, 41);
      const auto base = probe::belief_trace(agents, setup.graph, states);
      for (int i = 0; i < J; ++i) {
        for (int tau = 0; tau < 3; ++tau) {
          const auto moved = probe::belief_trace(agents, setup.graph, states, probe::Perturbation{i, tau});
          for (int j = 0; j < J; ++j) {
            if (j == i) continue;
            const int d = setup.graph.hop(j, i);
            // DIAL reads raw neighbor states only, so nothing is relayed past one hop.
            const bool relays = v != policy::Variant::kDial || d == 1;
            EXPECT_EQ(probe::first_change(base, moved, j), relays ? tau + d - 1 : -1)
                << policy::to_string(v) << " J=" << J << " i=" << i << " j=" << j << " tau=" << tau;
          }
        }
      }
    }
  }
}

TEST(LatencyTest, IndependentAgentsNeverHearNeighbors) {
  auto setup = probe::chain(3, policy::Variant::kIA2C);
  MultiAgent agents(setup.env, setup.marl, 42);
  const auto states = probe::random_states(6, 3, 43);
  const auto base = probe::belief_trace(agents, setup.graph, states);
  const auto moved = probe::belief_trace(agents, setup.graph, states, probe::Perturbation{1, 0});
  EXPECT_EQ(probe::first_change(base, moved, 0), -1);
  EXPECT_EQ(probe::first_change(base, moved, 2), -1);
}

TEST(LatencyTest, CrossAgentGradientStartsAtHopDistance) {
  for (int J = 2; J <= 4; ++J) {
    auto setup = probe::chain(J);
    MultiAgent agents(setup.env, setup.marl, 44);
    const auto states = probe::random_states(J + 2, J, 45);
    for (int i = 0; i < J; ++i) {
      for (int j = 0; j < J; ++j) {
        if (i == j) continue;
        const int d = setup.graph.hop(j, i);
        for (int n = 0; n <= d + 1 && n < J + 2; ++n) {
          EXPECT_EQ(probe::gradient_reaches(agents, setup.graph, states, i, j, n), n >= d)
              << "J=" << J << " i=" << i << " j=" << j << " n=" << n;
        }
      }
    }
  }
}

TEST(LatencyTest, DisconnectedAgentGetsNoGradient) {
  auto setup = probe::chain(3);
  setup.graph = comm::graph_from_edges(3, std::vector<std::pair<int, int>>{{0, 1}});
  MultiAgent agents(setup.env, setup.marl, 46);
  const auto states = probe::random_states(6, 3, 47);
  for (int n = 0; n < 6; ++n) {
    EXPECT_FALSE(probe::gradient_reaches(agents, setup.graph, states, 2, 0, n));
    EXPECT_FALSE(probe::gradient_reaches(agents, setup.graph, states, 0, 2, n));
  }
}

TEST(CriticTest, CriticLossReachesOnlyCriticParameters) {
  auto setup = probe::chain(2);
  MultiAgent agents(setup.env, setup.marl, 48);
  for (auto* p : agents.network(0).all_parameters()) p->zero_grad();
  Tape tape;
  auto carry = CarryVars::from(tape, Carry::initial(agents.dims(), 2));
  const auto states = probe::random_states(1, 2, 49);
  const Var vars[] = {tape.constant(states[0][0]), tape.constant(states[0][1])};
  const auto f = forward_slot(tape, agents, setup.graph, 0, vars, carry, nullptr);
  const auto values = critic_values(tape, agents, setup.graph, f);
  const double target[] = {1.0};
  tape.backward(critic_loss(std::span<const Var>(values.data(), 1), target));
  double critic_norm = 0.0;
  for (auto* p : agents.network(0).critic_parameters()) {
    for (double g : p->grad.storage()) critic_norm += g * g;
  }
  EXPECT_GT(critic_norm, 0.0);
  for (auto* p : agents.network(0).actor_parameters()) {
    for (double g : p->grad.storage()) ASSERT_EQ(g, 0.0) << p->name;
  }
}

env::EnvConfig tiny_env() {
  env::EnvConfig c;
  c.num_uavs = 3;
  c.num_gts = 2;
  c.num_slots = 6;
  c.ris.rows = 2;
  c.ris.cols = 2;
  return c;
}

MarlConfig tiny_marl() {
  MarlConfig m;
  m.encoder_size = 20;
  m.hidden_size = 6;
  m.batch_size = 4;
  m.episodes = 3;
  return m;
}

TEST(TrainerTest, ZeroLearningRateLeavesParametersUnchanged) {
  MarlConfig m = tiny_marl();
  m.lr_actor = 0.0;
  m.lr_critic = 0.0;
  Trainer trainer(tiny_env(), m, 50);
  std::vector<Tensor> before;
  for (auto* p : trainer.agents().network(1).all_parameters()) before.push_back(p->value);
  const EpisodeMetrics metrics = trainer.run_episode();
  std::size_t k = 0;
  for (auto* p : trainer.agents().network(1).all_parameters()) EXPECT_EQ(p->value, before[k++]) << p->name;
  EXPECT_EQ(metrics.episode, 1);
  EXPECT_TRUE(std::isfinite(metrics.reward));
  EXPECT_TRUE(std::isfinite(metrics.actor_loss));
  EXPECT_GE(metrics.td_error, 0.0);
}

TEST(TrainerTest, UpdatesChangeParameters) {
  Trainer trainer(tiny_env(), tiny_marl(), 51);
  const Tensor before = trainer.agents().network(0).param("head/heading/weight").value;
  const Tensor critic_before = trainer.agents().network(0).param("critic/bias").value;
  trainer.run_episode();
  EXPECT_FALSE(trainer.agents().network(0).param("head/heading/weight").value == before);
  EXPECT_FALSE(trainer.agents().network(0).param("critic/bias").value == critic_before);
}

TEST(TrainerTest, SameSeedSameMetrics) {
  const auto a = train(tiny_env(), tiny_marl(), 52);
  const auto b = train(tiny_env(), tiny_marl(), 52);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t e = 0; e < a.size(); ++e) {
    EXPECT_EQ(a[e].reward, b[e].reward);
    EXPECT_EQ(a[e].td_error, b[e].td_error);
    EXPECT_EQ(a[e].actor_loss, b[e].actor_loss);
    EXPECT_EQ(a[e].critic_loss, b[e].critic_loss);
  }
  const auto c = train(tiny_env(), tiny_marl(), 53);
  EXPECT_NE(a[0].reward, c[0].reward);
}

TEST(TrainerTest, SharedParametersUseOneNetwork) {
  MarlConfig m = tiny_marl();
  m.share_parameters = true;
  MultiAgent agents(tiny_env(), m, 54);
  EXPECT_TRUE(agents.shared());
  EXPECT_EQ(&agents.network(0), &agents.network(2));
}

TEST(EvaluateTest, CriticErrorsAreConsistent) {
  MultiAgent agents(tiny_env(), tiny_marl(), 55);
  const EvalResult r = evaluate_greedy(agents, tiny_env(), tiny_marl(), 56);
  EXPECT_EQ(r.trace.actions.size(), 6u);
  EXPECT_GE(r.td_error, 0.0);
  EXPECT_GE(r.adv_error + 1e-15, r.td_error * r.td_error);
  const EvalResult again = evaluate_greedy(agents, tiny_env(), tiny_marl(), 56);
  EXPECT_EQ(r.mean_reward, again.mean_reward);
  for (const auto& joint : r.trace.actions) {
    for (const auto& a : joint) {
      EXPECT_GE(a.slot_time, 1.0);
      EXPECT_LE(a.slot_time, 3.0);
    }
  }
}

TEST(MarlConfigTest, Validation) {
  MarlConfig m;
  EXPECT_NO_THROW(m.validate());
  m.alpha = 1.5;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = MarlConfig{};
  m.gamma = 0.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = MarlConfig{};
  m.batch_size = 0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  EXPECT_EQ(MarlConfig{}.resolved_max_degree(10), 9u);
  EXPECT_EQ(parse_entropy_sign(to_string(EntropySign::kBonus)), EntropySign::kBonus);
  EXPECT_EQ(parse_bootstrap(to_string(BootstrapWeighting::kOwn)), BootstrapWeighting::kOwn);
  EXPECT_THROW(parse_bootstrap("neighbors"), std::invalid_argument);
}

}  // namespace
}  // namespace uavnet::training
