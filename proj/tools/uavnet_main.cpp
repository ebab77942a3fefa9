#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uavnet/config.hpp"
#include "uavnet/export.hpp"
#include "uavnet/run.hpp"

namespace fs = std::filesystem;
using namespace uavnet;

namespace {

config::ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return config::parse_text("{}", overrides);
  return config::parse_file(path, overrides);
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  bool force = false;
};

struct EvaluateArgs {
  std::string checkpoint;
  bool random = false;
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::vector<std::string> overrides;
};

struct SweepArgs {
  std::string config;
  std::vector<std::string> variants;
  std::vector<double> alphas{0.8, 0.9, 1.0};
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::vector<std::string> overrides;
  bool force = false;
};

struct ExportArgs {
  std::string run;
  std::vector<std::string> what;
  std::optional<int> slot;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int do_train(const TrainArgs& a) {
  const auto cfg = load_config(a.config, a.overrides);
  const std::uint64_t seed = a.seed ? *a.seed : cfg.run.seeds.front();
  const fs::path out = a.out.empty()
                           ? fs::path(cfg.run.output_dir) / run::run_name(cfg.marl.variant, cfg.marl.alpha, seed)
                           : fs::path(a.out);
  std::cout << "training " << policy::to_string(cfg.marl.variant) << " seed " << seed << " -> "
            << out.string() << " (config " << config::hash(cfg) << ")\n";
  run::train_run(cfg, seed, out, a.force, &std::cout);
  std::cout << "done: " << out.string() << "\n";
  return 0;
}

int do_evaluate(const EvaluateArgs& a) {
  if (a.checkpoint.empty() && !a.random) throw CLI::ValidationError("evaluate", "--ckpt or --random is required");
  std::string config_path = a.config;
  if (config_path.empty() && !a.checkpoint.empty()) {
    const fs::path guess = fs::path(a.checkpoint).parent_path().parent_path() / "config.json";
    if (fs::exists(guess)) config_path = guess.string();
  }
  const auto cfg = load_config(config_path, a.overrides);
  const auto seeds = a.seeds.empty() ? cfg.run.seeds : a.seeds;
  fs::path out = a.out;
  if (out.empty()) {
    out = a.checkpoint.empty() ? fs::path(cfg.run.output_dir) / "eval_random"
                               : fs::path(a.checkpoint).parent_path().parent_path() / "eval";
  }
  run::evaluate_checkpoint(a.random ? fs::path() : fs::path(a.checkpoint), cfg, seeds, out);
  std::cout << "evaluation logs written to " << out.string() << "\n";
  return 0;
}

int do_sweep(const SweepArgs& a) {
  const auto cfg = load_config(a.config, a.overrides);
  std::vector<policy::Variant> variants;
  if (a.variants.empty()) {
    variants = policy::all_variants();
  } else {
    for (const auto& v : a.variants) variants.push_back(policy::parse_variant(v));
  }
  const auto seeds = a.seeds.empty() ? cfg.run.seeds : a.seeds;
  const fs::path root = a.out.empty() ? fs::path(cfg.run.output_dir) : fs::path(a.out);
  const auto result = run::sweep(cfg, variants, a.alphas, seeds, root, a.force, &std::cout);
  std::cout << result.completed.size() << " runs completed, " << result.failed.size() << " failed\n";
  for (const auto& [dir, why] : result.failed) std::cerr << "failed " << dir.string() << ": " << why << "\n";
  return result.failed.empty() ? 0 : 1;
}

int do_export(const ExportArgs& a) {
  std::vector<exporter::Kind> kinds;
  for (const auto& w : a.what) {
    if (w == "all") {
      kinds = exporter::all_kinds();
      break;
    }
    kinds.push_back(exporter::parse_kind(w));
  }
  for (exporter::Kind k : kinds) {
    exporter::Request req;
    req.run_dir = a.run;
    req.kind = k;
    req.slot = a.slot;
    req.seed = a.seed;
    if (!a.out.empty()) req.out = fs::path(a.out) / ("export_" + exporter::to_string(k) + ".csv");
    std::cout << exporter::export_csv(req).string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAV RIS network simulator and multi-agent actor-critic trainer"};
  app.require_subcommand(1);
  std::function<int()> action;

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one seed and write a run directory");
  t->add_option("--config", train.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  t->add_option("--seed", train.seed, "Master seed (default: first of run.seeds)");
  t->add_option("--out", train.out, "Run directory");
  t->add_option("--set", train.overrides, "Override section.key=value")->take_all();
  t->add_flag("--force", train.force, "Overwrite an existing run directory");
  t->callback([&] { action = [&] { return do_train(train); }; });

  EvaluateArgs eval;
  auto* e = app.add_subcommand("evaluate", "Greedy evaluation of a checkpoint");
  e->add_option("--ckpt", eval.checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
  e->add_flag("--random", eval.random, "Evaluate freshly initialized networks");
  e->add_option("--config", eval.config, "Experiment config (default: the run's config.json)")
      ->check(CLI::ExistingFile);
  e->add_option("--seeds", eval.seeds, "Evaluation seeds")->delimiter(',');
  e->add_option("--out", eval.out, "Output directory");
  e->add_option("--set", eval.overrides, "Override section.key=value")->take_all();
  e->callback([&] { action = [&] { return do_evaluate(eval); }; });

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Train every variant x alpha x seed combination");
  s->add_option("--config", sweep.config, "Base experiment config (JSON)")->check(CLI::ExistingFile);
  s->add_option("--variants", sweep.variants, "Variants (default: all)")->delimiter(',');
  s->add_option("--alphas", sweep.alphas, "Spatial discount factors")->delimiter(',');
  s->add_option("--seeds", sweep.seeds, "Seeds (default: run.seeds)")->delimiter(',');
  s->add_option("--out", sweep.out, "Root directory (default: run.output_dir)");
  s->add_option("--set", sweep.overrides, "Override section.key=value")->take_all();
  s->add_flag("--force", sweep.force, "Overwrite existing run directories");
  s->callback([&] { action = [&] { return do_sweep(sweep); }; });

  ExportArgs exp;
  auto* x = app.add_subcommand("export", "Write plot-ready CSVs from a run directory");
  x->add_option("--run", exp.run, "Run or evaluation directory")->required();
  x->add_option("--what", exp.what, "metrics|trajectories|phases|votes|ma|cdf|all")
      ->required()
      ->delimiter(',');
  x->add_option("--slot", exp.slot, "Slot for the phase matrix (default: min(30, last))");
  x->add_option("--seed", exp.seed, "Seed for the phase matrix (default: first)");
  x->add_option("--out", exp.out, "Output directory (default: the run directory)");
  x->callback([&] { action = [&] { return do_export(exp); }; });

  CLI11_PARSE(app, argc, argv);
  try {
    return action();
  } catch (const CLI::Error& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
