#include "uavnet/run.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "uavnet/checkpoint.hpp"
#include "uavnet/csv.hpp"
#include "uavnet/seeding.hpp"

#ifndef UAVNET_VERSION
#define UAVNET_VERSION "unknown"
#endif

namespace uavnet::run {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> inventory(const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), dir).generic_string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

json manifest_json(const config::ExperimentConfig& config, std::uint64_t seed,
                   const std::string& started, const std::string& finished,
                   const std::string& status, const std::vector<std::string>& files) {
  return json{{"config_hash", config::hash(config)},
              {"seed", seed},
              {"code_version", code_version()},
              {"started_at", started},
              {"finished_at", finished},
              {"status", status},
              {"files", files},
              {"config", json::parse(config::serialize(config))}};
}

std::string checkpoint_name(int episode) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "episode_%05d.bin", episode);
  return buf;
}

std::vector<training::EpisodeMetrics> train_episodes(const config::ExperimentConfig& config,
                                                     std::uint64_t seed, const fs::path& out,
                                                     std::ostream* progress);

}  // namespace

std::string code_version() { return UAVNET_VERSION; }

TrainSummary train_run(const config::ExperimentConfig& config, std::uint64_t seed, const fs::path& out,
                       bool force, std::ostream* progress) {
  config.validate();
  const fs::path manifest_path = out / "manifest.json";
  if (fs::exists(manifest_path) && !force) {
    std::string existing_hash = "?";
    try {
      std::ifstream in(manifest_path);
      existing_hash = json::parse(in).value("config_hash", "?");
    } catch (const std::exception&) {
    }
    throw RunExists("run directory " + out.string() + " already holds a manifest (config hash " +
                    existing_hash + "); pass --force to overwrite");
  }
  fs::create_directories(out / "checkpoints");

  const std::string started = utc_now();
  write_text(manifest_path, manifest_json(config, seed, started, "", "running", {}).dump(2) + "\n");
  write_text(out / "config.json", config::serialize(config));

  TrainSummary summary;
  summary.dir = out;
  try {
    summary.metrics = train_episodes(config, seed, out, progress);
  } catch (const std::exception&) {
    write_text(manifest_path,
               manifest_json(config, seed, started, utc_now(), "failed", inventory(out)).dump(2) + "\n");
    throw;
  }
  write_text(manifest_path,
             manifest_json(config, seed, started, utc_now(), "complete", inventory(out)).dump(2) + "\n");
  return summary;
}

namespace {

std::vector<training::EpisodeMetrics> train_episodes(const config::ExperimentConfig& config,
                                                     std::uint64_t seed, const fs::path& out,
                                                     std::ostream* progress) {
  std::vector<training::EpisodeMetrics> all;
  csv::Writer metrics(out / "metrics.csv",
                      {"episode", "reward", "td_error", "adv_error", "actor_loss", "critic_loss"});
  training::Trainer trainer(config.env, config.marl, seed);
  for (int e = 0; e < config.marl.episodes; ++e) {
    const training::EpisodeMetrics m = trainer.run_episode();
    metrics << m.episode << m.reward << m.td_error << m.adv_error << m.actor_loss << m.critic_loss;
    metrics.end_row();
    all.push_back(m);
    if (config.marl.checkpoint_every > 0 && m.episode % config.marl.checkpoint_every == 0) {
      checkpoint::save(out / "checkpoints" / checkpoint_name(m.episode), trainer.agents());
    }
    if (progress != nullptr && (m.episode % 25 == 0 || m.episode == config.marl.episodes)) {
      *progress << "episode " << m.episode << "/" << config.marl.episodes << " reward "
                << csv::format(m.reward) << " td_error " << csv::format(m.td_error) << "\n";
    }
  }
  metrics.close();
  checkpoint::save(out / "checkpoints" / "final.bin", trainer.agents());

  const auto eval = training::evaluate_greedy(trainer.agents(), config.env, config.marl,
                                              trainer.env_seed());
  write_eval_logs(out, config.env, {seed}, {eval});
  return all;
}

}  // namespace

void write_eval_logs(const fs::path& dir, const env::EnvConfig& env_config,
                     const std::vector<std::uint64_t>& seeds,
                     const std::vector<training::EvalResult>& results) {
  if (seeds.size() != results.size()) throw std::invalid_argument("one result per seed required");
  fs::create_directories(dir);
  csv::Writer steps(dir / "eval_steps.csv",
                    {"seed", "slot", "uav", "cell_x", "cell_y", "altitude_level", "x_m", "y_m",
                     "altitude_m", "ma_index", "heading", "vertical", "gt_vote", "scheduled_gt",
                     "slot_time_s", "speed_h_mps", "speed_v_mps", "energy_j", "rate_bps",
                     "delivered_bits", "reward_bits_per_j"});
  csv::Writer slots(dir / "eval_slots.csv",
                    {"seed", "slot", "scheduled_gt", "scheduled_rate_bps", "global_reward",
                     "energy_j", "delivered_bits", "served_bits", "remaining_demand_bits"});
  csv::Writer phases(dir / "eval_phases.csv", {"seed", "slot", "row", "col", "phase_rad"});
  const auto& lim = env_config.limits;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto& trace = results[s].trace;
    for (std::size_t n = 0; n < trace.outcomes.size(); ++n) {
      const env::StepOutcome& o = trace.outcomes[n];
      const env::JointAction& a = trace.actions[n];
      const double rate = o.gt_rates[static_cast<std::size_t>(o.scheduled_gt)];
      double energy = 0.0;
      double delivered = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        const auto& u = o.next.uavs[j];
        const Vec2 p = lim.cell_position(u.cell);
        steps << seeds[s] << o.slot << static_cast<int>(j) << u.cell.x << u.cell.y << u.altitude_level
              << p.x << p.y << lim.altitude_m(u.altitude_level) << u.ma_index
              << mobility::to_string(a[j].heading) << mobility::to_string(a[j].vertical)
              << a[j].gt_vote << o.scheduled_gt << a[j].slot_time << o.horizontal_speeds[j]
              << o.vertical_speeds[j] << o.energies[j] << rate << o.delivered_bits[j]
              << o.rewards[j];
        steps.end_row();
        energy += o.energies[j];
        delivered += o.delivered_bits[j];
      }
      double served = 0.0;
      double remaining = 0.0;
      for (double b : o.served_bits) served += b;
      for (double d : o.next.gt_remaining_demand) remaining += d;
      slots << seeds[s] << o.slot << o.scheduled_gt << rate << o.global_reward << energy << delivered
            << served << remaining;
      slots.end_row();
      for (int r = 0; r < env_config.ris.rows; ++r) {
        for (int c = 0; c < env_config.ris.cols; ++c) {
          phases << seeds[s] << o.slot << r << c
                 << o.ris_phase[static_cast<std::size_t>(r * env_config.ris.cols + c)];
          phases.end_row();
        }
      }
    }
  }
  steps.close();
  slots.close();
  phases.close();
}

void evaluate_checkpoint(const fs::path& checkpoint_path, const config::ExperimentConfig& config,
                         const std::vector<std::uint64_t>& seeds, const fs::path& out) {
  config.validate();
  if (seeds.empty()) throw std::invalid_argument("evaluate: no seeds given");
  training::MultiAgent agents(config.env, config.marl,
                             derive_seed(seeds.front(), SeedStream::kInitialization));
  if (!checkpoint_path.empty()) checkpoint::load(checkpoint_path, agents);
  std::vector<training::EvalResult> results;
  for (std::uint64_t seed : seeds) {
    results.push_back(training::evaluate_greedy(agents, config.env, config.marl,
                                                derive_seed(seed, SeedStream::kEnvironment)));
  }
  write_eval_logs(out, config.env, seeds, results);
}

std::string run_name(policy::Variant variant, double alpha, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_a%g_s%llu", policy::to_string(variant).c_str(), alpha,
                static_cast<unsigned long long>(seed));
  return buf;
}

SweepResult sweep(const config::ExperimentConfig& base, const std::vector<policy::Variant>& variants,
                  const std::vector<double>& alphas, const std::vector<std::uint64_t>& seeds,
                  const fs::path& root, bool force, std::ostream* progress) {
  SweepResult result;
  for (policy::Variant v : variants) {
    for (double alpha : alphas) {
      for (std::uint64_t seed : seeds) {
        config::ExperimentConfig c = base;
        c.marl.variant = v;
        c.marl.alpha = alpha;
        c.run.seeds = {seed};
        const fs::path dir = root / run_name(v, alpha, seed);
        if (progress != nullptr) *progress << "== " << dir.string() << "\n";
        try {
          train_run(c, seed, dir, force, progress);
          result.completed.push_back(dir);
        } catch (const std::exception& e) {
          if (progress != nullptr) *progress << "failed: " << e.what() << "\n";
          result.failed.emplace_back(dir, e.what());
        }
      }
    }
  }
  return result;
}

}  // namespace uavnet::run
