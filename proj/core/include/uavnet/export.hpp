#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavnet::exporter {

enum class Kind { kMetrics, kTrajectories, kPhases, kVotes, kMa, kCdf };

Kind parse_kind(const std::string& name);
std::string to_string(Kind kind);
std::vector<Kind> all_kinds();

class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output schemas (header rows):
//   metrics       episode,reward,td_error,adv_error,actor_loss,critic_loss
//   trajectories  seed,uav,slot,x_m,y_m,altitude_m,ma_index
//   phases        c0,...,c{cols-1}; one row per RIS row for a single slot
//   votes         seed,slot,uav,gt_vote,scheduled_gt
//   ma            seed,slot,uav,ma_index
//   cdf           seed,uav,throughput_bits,energy_j,throughput_kbps,mission_time_s
struct Request {
  std::filesystem::path run_dir;
  Kind kind = Kind::kMetrics;
  std::optional<int> slot;  // phases only; default min(30, last slot)
  std::optional<std::uint64_t> seed;  // phases only; default first evaluated seed
  std::filesystem::path out;  // file path; default <run_dir>/export_<kind>.csv
};

std::filesystem::path export_csv(const Request& request);

}  // namespace uavnet::exporter
