#include "uavnet/export.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>

#include "uavnet/csv.hpp"

namespace uavnet::exporter {

namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<Kind, std::string>>& kind_names() {
  static const std::vector<std::pair<Kind, std::string>> names = {
      {Kind::kMetrics, "metrics"}, {Kind::kTrajectories, "trajectories"},
      {Kind::kPhases, "phases"},   {Kind::kVotes, "votes"},
      {Kind::kMa, "ma"},           {Kind::kCdf, "cdf"}};
  return names;
}

csv::Table load(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("missing run artifact: " + path.string());
  return csv::read(path);
}

void copy_columns(const csv::Table& in, const std::vector<std::string>& columns, const fs::path& out) {
  std::vector<std::size_t> index;
  for (const auto& c : columns) index.push_back(in.column(c));
  csv::Writer w(out, columns);
  for (const auto& row : in.rows) {
    for (std::size_t i : index) w << row[i];
    w.end_row();
  }
  w.close();
}

void export_phases(const Request& req, const fs::path& out) {
  const csv::Table t = load(req.run_dir / "eval_phases.csv");
  if (t.rows.empty()) throw MissingArtifact("eval_phases.csv has no rows");
  const auto seed = req.seed ? static_cast<long long>(*req.seed) : t.integer(0, "seed");
  long long last_slot = 0;
  long long rows = 0;
  long long cols = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.integer(i, "seed") != seed) continue;
    last_slot = std::max(last_slot, t.integer(i, "slot"));
    rows = std::max(rows, t.integer(i, "row") + 1);
    cols = std::max(cols, t.integer(i, "col") + 1);
  }
  if (last_slot == 0) throw MissingArtifact("no phase rows for seed " + std::to_string(seed));
  const long long slot = req.slot ? *req.slot : std::min(30LL, last_slot);
  if (slot < 1 || slot > last_slot) {
    throw std::out_of_range("slot " + std::to_string(slot) + " outside 1.." + std::to_string(last_slot));
  }
  std::vector<std::string> matrix(static_cast<std::size_t>(rows * cols));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.integer(i, "seed") != seed || t.integer(i, "slot") != slot) continue;
    matrix[static_cast<std::size_t>(t.integer(i, "row") * cols + t.integer(i, "col"))] =
        t.rows[i][t.column("phase_rad")];
  }
  std::vector<std::string> header;
  for (long long c = 0; c < cols; ++c) header.push_back("c" + std::to_string(c));
  csv::Writer w(out, header);
  for (long long r = 0; r < rows; ++r) {
    for (long long c = 0; c < cols; ++c) w << matrix[static_cast<std::size_t>(r * cols + c)];
    w.end_row();
  }
  w.close();
}

void export_cdf(const Request& req, const fs::path& out) {
  const csv::Table t = load(req.run_dir / "eval_steps.csv");
  struct Totals {
    double bits = 0.0;
    double energy = 0.0;
    double time = 0.0;
  };
  std::map<std::pair<long long, long long>, Totals> totals;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Totals& tot = totals[{t.integer(i, "seed"), t.integer(i, "uav")}];
    tot.bits += t.number(i, "delivered_bits");
    tot.energy += t.number(i, "energy_j");
    tot.time += t.number(i, "slot_time_s");
  }
  csv::Writer w(out, {"seed", "uav", "throughput_bits", "energy_j", "throughput_kbps", "mission_time_s"});
  for (const auto& [key, tot] : totals) {
    const double kbps = tot.time > 0.0 ? tot.bits / tot.time / 1e3 : 0.0;
    w << static_cast<std::int64_t>(key.first) << static_cast<std::int64_t>(key.second) << tot.bits
      << tot.energy << kbps << tot.time;
    w.end_row();
  }
  w.close();
}

}  // namespace

Kind parse_kind(const std::string& name) {
  for (const auto& [k, n] : kind_names()) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown export kind: " + name);
}

std::string to_string(Kind kind) {
  for (const auto& [k, n] : kind_names()) {
    if (k == kind) return n;
  }
  throw std::invalid_argument("bad export kind");
}

std::vector<Kind> all_kinds() {
  std::vector<Kind> kinds;
  for (const auto& entry : kind_names()) kinds.push_back(entry.first);
  return kinds;
}

fs::path export_csv(const Request& req) {
  if (!fs::is_directory(req.run_dir)) throw MissingArtifact("run directory not found: " + req.run_dir.string());
  const fs::path out = req.out.empty() ? req.run_dir / ("export_" + to_string(req.kind) + ".csv") : req.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  switch (req.kind) {
    case Kind::kMetrics:
      copy_columns(load(req.run_dir / "metrics.csv"),
                   {"episode", "reward", "td_error", "adv_error", "actor_loss", "critic_loss"}, out);
      break;
    case Kind::kTrajectories:
      copy_columns(load(req.run_dir / "eval_steps.csv"),
                   {"seed", "uav", "slot", "x_m", "y_m", "altitude_m", "ma_index"}, out);
      break;
    case Kind::kPhases:
      export_phases(req, out);
      break;
    case Kind::kVotes:
      copy_columns(load(req.run_dir / "eval_steps.csv"), {"seed", "slot", "uav", "gt_vote", "scheduled_gt"},
                   out);
      break;
    case Kind::kMa:
      copy_columns(load(req.run_dir / "eval_steps.csv"), {"seed", "slot", "uav", "ma_index"}, out);
      break;
    case Kind::kCdf:
      export_cdf(req, out);
      break;
  }
  return out;
}

}  // namespace uavnet::exporter
