#include <benchmark/benchmark.h>

#include <random>

#include "uavnet/autodiff.hpp"
#include "uavnet/policy.hpp"

namespace {

using namespace uavnet;

ad::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ad::Tensor t(std::move(shape));
  for (double& v : t.storage()) v = u(rng);
  return t;
}

void BM_LstmStepForwardBackward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const std::size_t input = 10 * hidden;
  std::mt19937_64 rng(2);
  ad::Parameter w("w", random_tensor({4 * hidden, input + hidden}, rng));
  ad::Parameter b("b", random_tensor({4 * hidden}, rng));
  const ad::Tensor x = random_tensor({input}, rng);
  const ad::Tensor h = random_tensor({hidden}, rng);
  for (auto _ : state) {
    ad::Tape tape;
    const auto out = ad::lstm_step(tape.param(w), tape.param(b), tape.constant(x), tape.constant(h),
                                   tape.constant(h));
    tape.backward(ad::sum(out.hidden));
    benchmark::DoNotOptimize(w.grad.storage().data());
  }
}
BENCHMARK(BM_LstmStepForwardBackward)->Arg(16)->Arg(64);

void BM_PolicyAct(benchmark::State& state) {
  env::EnvConfig c;
  c.num_gts = 3;
  const auto dims = policy::NetworkDims::from_env(c, policy::Variant::kOurs, 64, 64, 3);
  std::mt19937_64 rng(3);
  policy::AgentNetwork net(dims, rng);
  const ad::Tensor belief = random_tensor({dims.hidden}, rng);
  for (auto _ : state) {
    ad::Tape tape;
    benchmark::DoNotOptimize(policy::act(tape, net, tape.constant(belief), &rng).log_prob);
  }
}
BENCHMARK(BM_PolicyAct);

}  // namespace

BENCHMARK_MAIN();
