#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "uavnet/geometry.hpp"

namespace uavnet::mobility {

enum class Heading { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3, kHover = 4 };
enum class Vertical { kAscend = 0, kDescend = 1, kStay = 2 };

inline constexpr int kHeadingCount = 5;
inline constexpr int kVerticalCount = 3;

std::string to_string(Heading h);
std::string to_string(Vertical v);

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct UavState {
  Cell cell;
  int altitude_level = 30;
  int ma_index = 5;  // 1-based, row-major over the antenna grid
  double slot_duration = 1.0;

  friend bool operator==(const UavState&, const UavState&) = default;
};

struct KinematicLimits {
  double max_horizontal_speed = 10.0;  // m/s
  double max_vertical_speed = 10.0;    // m/s
  double min_slot = 1.0;               // s
  double max_slot = 3.0;               // s
  double cell_size = 10.0;             // m per cell
  double level_height = 2.0;           // m per altitude level
  double min_altitude = 30.0;          // m
  double max_altitude = 100.0;         // m
  int grid_x = 100;                    // cells
  int grid_y = 100;                    // cells

  void validate() const;
  int min_level() const;
  int max_level() const;
  bool cell_in_bounds(Cell c) const;
  bool level_in_bounds(int level) const;
  // Horizontal meters of a cell index (cell index times cell size).
  Vec2 cell_position(Cell c) const;
  double altitude_m(int level) const { return level * level_height; }
};

struct HorizontalMove {
  Cell cell;
  bool clamped = false;
};

struct VerticalMove {
  int level = 0;
  bool clamped = false;
};

// One grid step per heading; a move that would leave the area becomes hover.
HorizontalMove apply_horizontal(const KinematicLimits& limits, Cell cell, Heading heading);
// One level per action; a move past the altitude bounds becomes stay.
VerticalMove apply_vertical(const KinematicLimits& limits, int level, Vertical action);

struct AntennaGrid {
  int side = 3;
  double spacing = 0.05;  // m

  int positions() const { return side * side; }
};

// Offset of antenna slot `index` (1-based, row-major, x varying fastest)
// from the airframe center.
Vec2 ma_offset(const AntennaGrid& grid, int index);

class InfeasibleAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Speeds {
  double horizontal = 0.0;
  double vertical = 0.0;
};

// Horizontal and vertical speed over a slot of `duration` seconds. Throws
// InfeasibleAction when a speed limit is exceeded and std::invalid_argument
// when the duration is outside the slot bounds.
Speeds speeds(const KinematicLimits& limits, const UavState& prev, const UavState& next,
              double duration);

// Hover powers of the rotary-wing model from its rotor constants.
inline double hover_profile_power(double air_density, double rotor_solidity, double disc_area) {
  return 12.0 * 27000.0 * 0.064 * air_density * rotor_solidity * disc_area / 8.0;
}
inline double hover_induced_power(double air_density, double disc_area) {
  return 1.1 * std::pow(20.0, 1.5) / std::sqrt(2.0 * air_density * disc_area);
}

struct PowerConstants {
  double tip_speed = 120.0;
  double hover_induced_speed = 4.3;
  double drag_ratio = 0.6;
  double rotor_solidity = 0.05;
  double air_density = 1.225;
  double disc_area = 0.503;
  double profile_power = hover_profile_power(1.225, 0.05, 0.503);
  double induced_power = hover_induced_power(1.225, 0.503);
  double climb_power = 11.46;  // W per m/s of vertical speed
};

double propulsion_power(double v_h, double v_v, const PowerConstants& c);
// Joules spent over one slot at the given speeds.
double propulsion_energy(double v_h, double v_v, double duration, const PowerConstants& c);

}  // namespace uavnet::mobility
