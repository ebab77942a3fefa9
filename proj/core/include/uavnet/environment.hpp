#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uavnet/channel.hpp"
#include "uavnet/geometry.hpp"
#include "uavnet/mobility.hpp"

namespace uavnet::env {

struct EnvConfig {
  int num_uavs = 10;
  int num_gts = 6;
  int num_slots = 60;

  mobility::KinematicLimits limits;
  mobility::AntennaGrid antenna;
  mobility::PowerConstants power;
  channel::RisConfig ris;

  mobility::Cell start_cell{0, 0};
  mobility::Cell final_cell{100, 100};
  int initial_level = 30;

  double bandwidth_hz = 2e6;
  double tx_power_w = 0.5;
  double noise_dbm_per_hz = -169.0;
  double blockage_a = 9.61;
  double blockage_b = 0.16;
  double demand_bits = 512e3;
  double comm_radius = 10.0;  // m

  void validate() const;
  double noise_psd() const;
};

struct WorldState {
  std::vector<mobility::UavState> uavs;
  std::vector<Vec2> gt_positions;
  std::vector<double> gt_remaining_demand;
  int slot_index = 1;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct UavAction {
  mobility::Heading heading = mobility::Heading::kHover;
  mobility::Vertical vertical = mobility::Vertical::kStay;
  int ma_index = 5;   // 1-based
  int gt_vote = 0;    // 0-based
  double slot_time = 1.0;
  std::vector<double> phases;
};

using JointAction = std::vector<UavAction>;

struct UavStepFlags {
  bool horizontal_clamped = false;
  bool vertical_clamped = false;
  bool infeasible = false;
  int steering_clamps = 0;
};

struct StepOutcome {
  WorldState next;
  int slot = 0;
  int scheduled_gt = -1;
  std::vector<double> rewards;          // per UAV, bits per joule
  double global_reward = 0.0;           // mean of local rewards
  std::vector<double> gt_gains;         // per GT
  std::vector<double> gt_rates;         // per GT, bits/s; zero unless scheduled
  std::vector<double> energies;         // per UAV, J
  std::vector<double> horizontal_speeds;
  std::vector<double> vertical_speeds;
  std::vector<double> delivered_bits;   // per UAV: t_j * r_scheduled
  std::vector<double> served_bits;      // per GT: demand actually drained
  std::vector<int> votes;
  std::vector<UavStepFlags> flags;
  std::vector<double> ris_phase;        // arg of the averaged reflection diagonal
};

struct EpisodeSummary {
  bool done = false;
  std::vector<double> residual_demand;
  bool demand_met = false;
};

// Averaged reflection diagonal (1/J) sum_j exp(i w_j).
channel::ComplexVector aggregate_ris(std::span<const channel::PhaseVector> recommendations);

// Most voted GT; ties go to the lowest index. Empty input yields nothing.
std::optional<int> tdma_vote(std::span<const int> votes, int num_gts);

// Local observation of one UAV: normalized cell coordinates and altitude.
inline constexpr std::size_t kStateDim = 3;
std::vector<double> local_state(const EnvConfig& config, const WorldState& state, int uav);

WorldState reset(const EnvConfig& config, std::uint64_t seed);
EpisodeSummary episode_done(const EnvConfig& config, const WorldState& state);

// Ratio of total propulsion energy to total delivered bits over an episode.
double episode_objective(std::span<const StepOutcome> steps);

class Environment {
 public:
  explicit Environment(EnvConfig config);

  const WorldState& reset(std::uint64_t seed);
  StepOutcome step(const JointAction& action);

  bool done() const { return state_.slot_index > config_.num_slots; }
  EpisodeSummary summary() const { return episode_done(config_, state_); }

  const EnvConfig& config() const { return config_; }
  const WorldState& state() const { return state_; }
  // Airframe centers in meters, used to build the communication graph.
  std::vector<Vec3> uav_positions() const;

 private:
  EnvConfig config_;
  WorldState state_;
  std::vector<channel::ComplexVector> gt_steering_;
  bool initialized_ = false;
};

}  // namespace uavnet::env
