#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uavnet/geometry.hpp"

namespace uavnet::channel {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

// How the per-element phase step depends on the cosine product c:
//   kInverseCosine -> (2 pi / lambda) * spacing / c
//   kConventional  -> (2 pi / lambda) * spacing * c
enum class SteeringConvention { kInverseCosine, kConventional };

SteeringConvention parse_steering_convention(const std::string& name);
std::string to_string(SteeringConvention convention);

// Cosine products smaller in magnitude than this are pushed out to it (sign
// kept, zero maps to +floor) before dividing under kInverseCosine.
inline constexpr double kCosineClampFloor = 1e-3;

struct RisConfig {
  int rows = 16;
  int cols = 16;
  double row_spacing = 0.05;
  double col_spacing = 0.05;
  Vec2 position{500.0, 500.0};
  double height = 100.0;
  double wavelength = 0.1;
  double reflection_amplitude = 1.0;
  double pathloss_const = 1.9952623149688795;  // 10^0.3
  SteeringConvention convention = SteeringConvention::kInverseCosine;

  std::size_t elements() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  Vec3 reference_element() const { return {position.x, position.y, height}; }
  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

// Wraps any real angle into [-pi, pi).
double wrap_phase(double angle);

// Phase shifts of one recommendation, one entry per RIS element, each kept in
// [-pi, pi).
class PhaseVector {
 public:
  PhaseVector() = default;
  explicit PhaseVector(std::vector<double> phases);

  std::span<const double> values() const { return phases_; }
  std::size_t size() const { return phases_.size(); }
  double operator[](std::size_t i) const { return phases_[i]; }

 private:
  std::vector<double> phases_;
};

struct DirectionCosines {
  double cos_azimuth = 0.0;    // phi
  double sin_azimuth = 0.0;    // varphi
  double cos_elevation = 0.0;  // psi
};

struct SteeringResult {
  ComplexVector response;  // row-major: element (r, c) at r * cols + c
  double distance = 0.0;
  DirectionCosines cosines;
  bool clamped = false;
};

// UAV -> RIS far-field array response scaled by sqrt(xi) / d_ur.
SteeringResult steering_ur(const RisConfig& ris, Vec3 uav);
// RIS -> ground terminal response; the terminal sits at z = 0.
SteeringResult steering_rg(const RisConfig& ris, Vec2 gt);

struct LinkGeometry {
  Vec2 ma_position;
  double altitude = 0.0;
  Vec2 gt_position;
  double d_ur = 0.0;
  double d_rg = 0.0;
  double d_ug = 0.0;
  DirectionCosines ur;
  DirectionCosines rg;
};

LinkGeometry link_geometry(const RisConfig& ris, Vec2 ma_position,
                           double altitude, Vec2 gt_position);

// a * sum_i g_rg[i] * theta[i] * g_ur[i], theta being the diagonal of the
// averaged reflection matrix.
Complex cascaded_gain(std::span<const Complex> g_rg,
                      std::span<const Complex> theta_diag,
                      std::span<const Complex> g_ur, double amplitude);

// Elevation angle in degrees from altitude and horizontal distance; 90 when
// the horizontal distance is zero.
double elevation_deg(double altitude, double horizontal_dist);

// Probability that the direct UAV-GT link is blocked (urban air-to-ground
// sigmoid in the elevation angle, degrees).
double blockage_prob(double altitude, double horizontal_dist, double a, double b);

// xi / d^2.
double direct_gain(double pathloss_const, double d_ug);

// sum_j (1 - p_j) * direct_j + sum_j p_j * |cascaded_j|^2.
double effective_gain(std::span<const double> blockage,
                      std::span<const double> direct,
                      std::span<const Complex> cascaded);

// c * B * log2(1 + g P / (B sigma^2)) in bits/s; sigma^2 is a noise power
// spectral density in W/Hz.
double achievable_rate(bool scheduled, double gain, double power_w,
                       double bandwidth_hz, double noise_psd_w_per_hz);

double dbm_per_hz_to_w_per_hz(double dbm_per_hz);

}  // namespace uavnet::channel
