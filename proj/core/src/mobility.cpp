#include "uavnet/mobility.hpp"

#include <cmath>

namespace uavnet::mobility {

std::string to_string(Heading h) {
  switch (h) {
    case Heading::kNorth: return "north";
    case Heading::kSouth: return "south";
    case Heading::kEast: return "east";
    case Heading::kWest: return "west";
    case Heading::kHover: return "hover";
  }
  return "?";
}

std::string to_string(Vertical v) {
  switch (v) {
    case Vertical::kAscend: return "ascend";
    case Vertical::kDescend: return "descend";
    case Vertical::kStay: return "stay";
  }
  return "?";
}

void KinematicLimits::validate() const {
  if (!(max_horizontal_speed > 0.0) || !(max_vertical_speed > 0.0)) {
    throw std::invalid_argument("speed limits must be positive");
  }
  if (!(min_slot > 0.0) || !(max_slot >= min_slot)) {
    throw std::invalid_argument("slot bounds must satisfy 0 < t_min <= t_max");
  }
  if (!(cell_size > 0.0) || !(level_height > 0.0)) {
    throw std::invalid_argument("cell size and level height must be positive");
  }
  if (grid_x < 1 || grid_y < 1) throw std::invalid_argument("grid must have at least one cell");
  if (!(min_altitude >= 0.0) || !(max_altitude >= min_altitude)) {
    throw std::invalid_argument("altitude bounds must satisfy 0 <= h_min <= h_max");
  }
  if (min_level() > max_level()) {
    throw std::invalid_argument("altitude bounds contain no whole level");
  }
}

int KinematicLimits::min_level() const {
  return static_cast<int>(std::ceil(min_altitude / level_height - 1e-9));
}

int KinematicLimits::max_level() const {
  return static_cast<int>(std::floor(max_altitude / level_height + 1e-9));
}

bool KinematicLimits::cell_in_bounds(Cell c) const {
  return c.x >= 0 && c.y >= 0 && c.x < grid_x && c.y < grid_y;
}

bool KinematicLimits::level_in_bounds(int level) const {
  return level >= min_level() && level <= max_level();
}

Vec2 KinematicLimits::cell_position(Cell c) const {
  return {c.x * cell_size, c.y * cell_size};
}

HorizontalMove apply_horizontal(const KinematicLimits& limits, Cell cell, Heading heading) {
  Cell next = cell;
  switch (heading) {
    case Heading::kNorth: ++next.y; break;
    case Heading::kSouth: --next.y; break;
    case Heading::kEast: ++next.x; break;
    case Heading::kWest: --next.x; break;
    case Heading::kHover: break;
  }
  if (!limits.cell_in_bounds(next)) return {cell, true};
  return {next, false};
}

VerticalMove apply_vertical(const KinematicLimits& limits, int level, Vertical action) {
  int next = level;
  if (action == Vertical::kAscend) ++next;
  if (action == Vertical::kDescend) --next;
  if (!limits.level_in_bounds(next)) return {level, true};
  return {next, false};
}

Vec2 ma_offset(const AntennaGrid& grid, int index) {
  if (index < 1 || index > grid.positions()) {
    throw std::out_of_range("antenna index " + std::to_string(index) + " outside [1, " +
                            std::to_string(grid.positions()) + "]");
  }
  const int q = index - 1;
  const int half = grid.side / 2;
  const int ix = q % grid.side - half;
  const int iy = q / grid.side - half;
  return {ix * grid.spacing, iy * grid.spacing};
}

Speeds speeds(const KinematicLimits& limits, const UavState& prev, const UavState& next,
              double duration) {
  if (!(duration >= limits.min_slot && duration <= limits.max_slot)) {
    throw std::invalid_argument("slot duration outside [t_min, t_max]");
  }
  const Vec2 delta = limits.cell_position(next.cell) - limits.cell_position(prev.cell);
  Speeds s;
  s.horizontal = norm(delta) / duration;
  s.vertical = std::abs(limits.altitude_m(next.altitude_level) -
                        limits.altitude_m(prev.altitude_level)) / duration;
  if (s.horizontal > limits.max_horizontal_speed) {
    throw InfeasibleAction("horizontal speed exceeds limit");
  }
  if (s.vertical > limits.max_vertical_speed) {
    throw InfeasibleAction("vertical speed exceeds limit");
  }
  return s;
}

double propulsion_power(double v_h, double v_v, const PowerConstants& c) {
  if (!(v_h >= 0.0) || !(v_v >= 0.0)) throw std::invalid_argument("speeds must be nonnegative");
  const double v2 = v_h * v_h;
  const double v0_2 = c.hover_induced_speed * c.hover_induced_speed;
  const double profile = c.profile_power * (1.0 + 3.0 * v2 / (c.tip_speed * c.tip_speed));
  const double parasite = 0.5 * c.drag_ratio * c.air_density * c.rotor_solidity * c.disc_area *
                          v2 * v_h;
  const double induced =
      c.induced_power * std::sqrt(std::sqrt(1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)) - v2 / (2.0 * v0_2));
  return profile + parasite + induced + c.climb_power * v_v;
}

double propulsion_energy(double v_h, double v_v, double duration, const PowerConstants& c) {
  if (!(duration > 0.0)) throw std::invalid_argument("slot duration must be positive");
  return duration * propulsion_power(v_h, v_v, c);
}

}  // namespace uavnet::mobility
