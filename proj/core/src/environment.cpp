#include "uavnet/environment.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace uavnet::env {

using mobility::Heading;
using mobility::Vertical;

void EnvConfig::validate() const {
  if (num_uavs < 1) throw std::invalid_argument("num_uavs must be at least 1");
  if (num_gts < 1) throw std::invalid_argument("num_gts must be at least 1");
  if (num_slots < 1) throw std::invalid_argument("num_slots must be at least 1");
  limits.validate();
  ris.validate();
  if (antenna.side < 1 || antenna.side % 2 == 0) {
    throw std::invalid_argument("antenna grid side must be a positive odd number");
  }
  if (!(antenna.spacing > 0.0)) throw std::invalid_argument("antenna spacing must be positive");
  if (!limits.cell_in_bounds(start_cell)) throw std::invalid_argument("start cell outside the area");
  if (!limits.level_in_bounds(initial_level)) {
    throw std::invalid_argument("initial altitude level outside [h_min, h_max]");
  }
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (!(tx_power_w > 0.0)) throw std::invalid_argument("transmit power must be positive");
  if (!std::isfinite(noise_dbm_per_hz)) throw std::invalid_argument("noise density must be finite");
  if (!(blockage_a > 0.0) || !(blockage_b > 0.0)) {
    throw std::invalid_argument("blockage constants must be positive");
  }
  if (!(demand_bits >= 0.0)) throw std::invalid_argument("demand must be nonnegative");
  if (!(comm_radius >= 0.0)) throw std::invalid_argument("communication radius must be nonnegative");
}

double EnvConfig::noise_psd() const { return channel::dbm_per_hz_to_w_per_hz(noise_dbm_per_hz); }

channel::ComplexVector aggregate_ris(std::span<const channel::PhaseVector> recommendations) {
  if (recommendations.empty()) throw std::invalid_argument("aggregate_ris: no recommendations");
  const std::size_t m = recommendations.front().size();
  channel::ComplexVector diag(m, channel::Complex{0.0, 0.0});
  for (const auto& rec : recommendations) {
    if (rec.size() != m) throw std::invalid_argument("aggregate_ris: length mismatch");
    for (std::size_t i = 0; i < m; ++i) diag[i] += std::polar(1.0, rec[i]);
  }
  const double inv = 1.0 / static_cast<double>(recommendations.size());
  for (auto& d : diag) d *= inv;
  return diag;
}

std::optional<int> tdma_vote(std::span<const int> votes, int num_gts) {
  if (votes.empty()) return std::nullopt;
  std::vector<int> counts(static_cast<std::size_t>(num_gts), 0);
  for (int v : votes) {
    if (v < 0 || v >= num_gts) throw std::out_of_range("tdma_vote: vote outside [0, K)");
    ++counts[static_cast<std::size_t>(v)];
  }
  int best = 0;
  for (int k = 1; k < num_gts; ++k) {
    if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

std::vector<double> local_state(const EnvConfig& config, const WorldState& state, int uav) {
  const auto& u = state.uavs.at(static_cast<std::size_t>(uav));
  const auto& lim = config.limits;
  const double span = std::max(1, lim.max_level() - lim.min_level());
  return {static_cast<double>(u.cell.x) / lim.grid_x, static_cast<double>(u.cell.y) / lim.grid_y,
          static_cast<double>(u.altitude_level - lim.min_level()) / span};
}

WorldState reset(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  WorldState s;
  const int center = (config.antenna.positions() + 1) / 2;
  mobility::UavState initial;
  initial.cell = config.start_cell;
  initial.altitude_level = config.initial_level;
  initial.ma_index = center;
  initial.slot_duration = config.limits.min_slot;
  s.uavs.assign(static_cast<std::size_t>(config.num_uavs), initial);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, (config.limits.grid_x - 1) * config.limits.cell_size);
  std::uniform_real_distribution<double> uy(0.0, (config.limits.grid_y - 1) * config.limits.cell_size);
  for (int k = 0; k < config.num_gts; ++k) {
    const double x = ux(rng);
    const double y = uy(rng);
    s.gt_positions.push_back({x, y});
  }
  s.gt_remaining_demand.assign(static_cast<std::size_t>(config.num_gts), config.demand_bits);
  s.slot_index = 1;
  return s;
}

EpisodeSummary episode_done(const EnvConfig& config, const WorldState& state) {
  EpisodeSummary out;
  out.done = state.slot_index > config.num_slots;
  out.residual_demand = state.gt_remaining_demand;
  out.demand_met = true;
  for (double d : out.residual_demand) out.demand_met = out.demand_met && d <= 0.0;
  return out;
}

double episode_objective(std::span<const StepOutcome> steps) {
  double energy = 0.0;
  double bits = 0.0;
  for (const auto& s : steps) {
    for (double e : s.energies) energy += e;
    for (double b : s.delivered_bits) bits += b;
  }
  if (!(bits > 0.0)) throw std::domain_error("episode_objective: no bits delivered");
  return energy / bits;
}

Environment::Environment(EnvConfig config) : config_(std::move(config)) { config_.validate(); }

const WorldState& Environment::reset(std::uint64_t seed) {
  state_ = env::reset(config_, seed);
  gt_steering_.clear();
  for (const Vec2& gt : state_.gt_positions) {
    gt_steering_.push_back(channel::steering_rg(config_.ris, gt).response);
  }
  initialized_ = true;
  return state_;
}

std::vector<Vec3> Environment::uav_positions() const {
  std::vector<Vec3> out;
  out.reserve(state_.uavs.size());
  for (const auto& u : state_.uavs) {
    const Vec2 p = config_.limits.cell_position(u.cell);
    out.push_back({p.x, p.y, config_.limits.altitude_m(u.altitude_level)});
  }
  return out;
}

StepOutcome Environment::step(const JointAction& action) {
  if (!initialized_) throw std::logic_error("step called before reset");
  if (state_.slot_index > config_.num_slots) throw std::logic_error("step called past episode end");
  const std::size_t J = state_.uavs.size();
  const std::size_t K = state_.gt_positions.size();
  if (action.size() != J) throw std::invalid_argument("joint action size differs from UAV count");

  const auto& lim = config_.limits;
  StepOutcome out;
  out.slot = state_.slot_index;
  out.next = state_;
  out.flags.resize(J);
  out.energies.resize(J);
  out.horizontal_speeds.resize(J);
  out.vertical_speeds.resize(J);
  out.votes.resize(J);

  std::vector<channel::PhaseVector> recommendations;
  recommendations.reserve(J);
  for (std::size_t j = 0; j < J; ++j) {
    const UavAction& a = action[j];
    if (!(a.slot_time >= lim.min_slot && a.slot_time <= lim.max_slot)) {
      throw std::invalid_argument("slot time outside [t_min, t_max] for UAV " + std::to_string(j));
    }
    if (a.ma_index < 1 || a.ma_index > config_.antenna.positions()) {
      throw std::invalid_argument("antenna index out of range for UAV " + std::to_string(j));
    }
    if (a.gt_vote < 0 || a.gt_vote >= static_cast<int>(K)) {
      throw std::invalid_argument("GT vote out of range for UAV " + std::to_string(j));
    }
    if (a.phases.size() != config_.ris.elements()) {
      throw std::invalid_argument("phase vector length differs from RIS element count");
    }
    for (double p : a.phases) {
      if (!(p >= -std::numbers::pi && p < std::numbers::pi)) {
        throw std::invalid_argument("phase outside [-pi, pi)");
      }
    }

    const mobility::UavState& prev = state_.uavs[j];
    mobility::UavState next = prev;
    const auto h = mobility::apply_horizontal(lim, prev.cell, a.heading);
    const auto v = mobility::apply_vertical(lim, prev.altitude_level, a.vertical);
    next.cell = h.cell;
    next.altitude_level = v.level;
    next.ma_index = a.ma_index;
    next.slot_duration = a.slot_time;
    out.flags[j].horizontal_clamped = h.clamped;
    out.flags[j].vertical_clamped = v.clamped;

    mobility::Speeds sp;
    try {
      sp = mobility::speeds(lim, prev, next, a.slot_time);
    } catch (const mobility::InfeasibleAction&) {
      next.cell = prev.cell;
      next.altitude_level = prev.altitude_level;
      out.flags[j].infeasible = true;
      sp = mobility::Speeds{};
    }
    out.next.uavs[j] = next;
    out.horizontal_speeds[j] = sp.horizontal;
    out.vertical_speeds[j] = sp.vertical;
    out.energies[j] = mobility::propulsion_energy(sp.horizontal, sp.vertical, a.slot_time,
                                                  config_.power);
    out.votes[j] = a.gt_vote;
    recommendations.emplace_back(a.phases);
  }

  const channel::ComplexVector theta = aggregate_ris(recommendations);
  out.ris_phase.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out.ris_phase[i] = channel::wrap_phase(std::arg(theta[i]));
  }
  out.scheduled_gt = *tdma_vote(out.votes, static_cast<int>(K));

  std::vector<channel::ComplexVector> uav_steering(J);
  std::vector<Vec3> antenna_pos(J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto& u = out.next.uavs[j];
    const Vec2 p = lim.cell_position(u.cell) + mobility::ma_offset(config_.antenna, u.ma_index);
    antenna_pos[j] = {p.x, p.y, lim.altitude_m(u.altitude_level)};
    auto s = channel::steering_ur(config_.ris, antenna_pos[j]);
    if (s.clamped) ++out.flags[j].steering_clamps;
    uav_steering[j] = std::move(s.response);
  }

  out.gt_gains.assign(K, 0.0);
  out.gt_rates.assign(K, 0.0);
  std::vector<double> blockage(J), direct(J);
  std::vector<channel::Complex> cascaded(J);
  const double noise = config_.noise_psd();
  for (std::size_t k = 0; k < K; ++k) {
    const Vec2 gt = state_.gt_positions[k];
    for (std::size_t j = 0; j < J; ++j) {
      const Vec3 a = antenna_pos[j];
      const double horizontal = std::hypot(a.x - gt.x, a.y - gt.y);
      blockage[j] = channel::blockage_prob(a.z, horizontal, config_.blockage_a, config_.blockage_b);
      direct[j] = channel::direct_gain(config_.ris.pathloss_const, distance(a, {gt.x, gt.y, 0.0}));
      cascaded[j] = channel::cascaded_gain(gt_steering_[k], theta, uav_steering[j],
                                           config_.ris.reflection_amplitude);
    }
    out.gt_gains[k] = channel::effective_gain(blockage, direct, cascaded);
    const bool scheduled = static_cast<int>(k) == out.scheduled_gt;
    out.gt_rates[k] = channel::achievable_rate(scheduled, out.gt_gains[k], config_.tx_power_w,
                                               config_.bandwidth_hz, noise);
  }

  const double rate = out.gt_rates[static_cast<std::size_t>(out.scheduled_gt)];
  out.rewards.resize(J);
  out.delivered_bits.resize(J);
  double total_bits = 0.0;
  double reward_sum = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    out.delivered_bits[j] = action[j].slot_time * rate;
    total_bits += out.delivered_bits[j];
    if (!(out.energies[j] > 0.0)) throw std::logic_error("non-positive slot energy");
    out.rewards[j] = out.delivered_bits[j] / out.energies[j];
    reward_sum += out.rewards[j];
  }
  out.global_reward = reward_sum / static_cast<double>(J);

  out.served_bits.assign(K, 0.0);
  auto& remaining = out.next.gt_remaining_demand[static_cast<std::size_t>(out.scheduled_gt)];
  const double served = std::min(remaining, total_bits);
  out.served_bits[static_cast<std::size_t>(out.scheduled_gt)] = served;
  remaining -= served;

  out.next.slot_index = state_.slot_index + 1;
  state_ = out.next;
  return out;
}

}  // namespace uavnet::env
