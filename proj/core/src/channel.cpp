#include "uavnet/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace uavnet::channel {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double clamp_cosine(double c, bool& clamped) {
  if (std::abs(c) >= kCosineClampFloor) return c;
  clamped = true;
  return c < 0.0 ? -kCosineClampFloor : kCosineClampFloor;
}

// Far-field response of the array toward a point at offset (dx, dy, dz) from
// the reference element.
SteeringResult steer(const RisConfig& ris, double dx, double dy, double dz) {
  ris.validate();
  SteeringResult out;
  out.distance = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(out.distance > 0.0)) {
    throw std::invalid_argument("steering: endpoint coincides with the RIS reference element");
  }
  const double horizontal = std::sqrt(dx * dx + dy * dy);
  out.cosines.cos_elevation = horizontal / out.distance;
  if (horizontal > 0.0) {
    out.cosines.cos_azimuth = dx / horizontal;
    out.cosines.sin_azimuth = dy / horizontal;
  }

  double row_product = dx / out.distance;
  double col_product = dy / out.distance;
  const double wavenumber = kTwoPi / ris.wavelength;
  double row_step = 0.0;
  double col_step = 0.0;
  if (ris.convention == SteeringConvention::kInverseCosine) {
    row_product = clamp_cosine(row_product, out.clamped);
    col_product = clamp_cosine(col_product, out.clamped);
    row_step = wavenumber * ris.row_spacing / row_product;
    col_step = wavenumber * ris.col_spacing / col_product;
  } else {
    row_step = wavenumber * ris.row_spacing * row_product;
    col_step = wavenumber * ris.col_spacing * col_product;
  }

  const double amplitude = std::sqrt(ris.pathloss_const) / out.distance;
  out.response.resize(ris.elements());
  for (int r = 0; r < ris.rows; ++r) {
    for (int c = 0; c < ris.cols; ++c) {
      const double phase = r * row_step + c * col_step;
      out.response[static_cast<std::size_t>(r) * ris.cols + c] =
          std::polar(amplitude, -phase);
    }
  }
  return out;
}

}  // namespace

SteeringConvention parse_steering_convention(const std::string& name) {
  if (name == "inverse_cosine") return SteeringConvention::kInverseCosine;
  if (name == "conventional") return SteeringConvention::kConventional;
  throw std::invalid_argument("unknown steering convention '" + name + "'");
}

std::string to_string(SteeringConvention convention) {
  return convention == SteeringConvention::kInverseCosine ? "inverse_cosine" : "conventional";
}

void RisConfig::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("RIS needs at least one row and column");
  if (!(row_spacing > 0.0) || !(col_spacing > 0.0)) {
    throw std::invalid_argument("RIS element spacing must be positive");
  }
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  if (!(height > 0.0)) throw std::invalid_argument("RIS height must be positive");
  if (!(pathloss_const > 0.0)) throw std::invalid_argument("path-loss constant must be positive");
  if (!std::isfinite(reflection_amplitude)) {
    throw std::invalid_argument("reflection amplitude must be finite");
  }
}

double wrap_phase(double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("wrap_phase: non-finite angle");
  double w = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= std::numbers::pi;
  // fmod can land exactly on +pi after the shift back for inputs just below
  // an odd multiple of pi.
  if (w >= std::numbers::pi) w -= kTwoPi;
  return w;
}

PhaseVector::PhaseVector(std::vector<double> phases) : phases_(std::move(phases)) {
  for (double& p : phases_) p = wrap_phase(p);
}

SteeringResult steering_ur(const RisConfig& ris, Vec3 uav) {
  return steer(ris, uav.x - ris.position.x, uav.y - ris.position.y, uav.z - ris.height);
}

SteeringResult steering_rg(const RisConfig& ris, Vec2 gt) {
  return steer(ris, gt.x - ris.position.x, gt.y - ris.position.y, -ris.height);
}

LinkGeometry link_geometry(const RisConfig& ris, Vec2 ma_position, double altitude,
                           Vec2 gt_position) {
  LinkGeometry g;
  g.ma_position = ma_position;
  g.altitude = altitude;
  g.gt_position = gt_position;
  const Vec3 uav{ma_position.x, ma_position.y, altitude};
  const Vec3 gt{gt_position.x, gt_position.y, 0.0};
  g.d_ur = distance(uav, ris.reference_element());
  g.d_rg = distance(ris.reference_element(), gt);
  g.d_ug = distance(uav, gt);
  const auto cosines = [](double dx, double dy, double dz) {
    DirectionCosines c;
    const double horizontal = std::sqrt(dx * dx + dy * dy);
    const double d = std::sqrt(horizontal * horizontal + dz * dz);
    if (d > 0.0) c.cos_elevation = horizontal / d;
    if (horizontal > 0.0) {
      c.cos_azimuth = dx / horizontal;
      c.sin_azimuth = dy / horizontal;
    }
    return c;
  };
  g.ur = cosines(uav.x - ris.position.x, uav.y - ris.position.y, uav.z - ris.height);
  g.rg = cosines(gt.x - ris.position.x, gt.y - ris.position.y, -ris.height);
  return g;
}

Complex cascaded_gain(std::span<const Complex> g_rg, std::span<const Complex> theta_diag,
                      std::span<const Complex> g_ur, double amplitude) {
  if (g_rg.size() != theta_diag.size() || g_ur.size() != theta_diag.size()) {
    throw std::invalid_argument("cascaded_gain: length mismatch");
  }
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < theta_diag.size(); ++i) acc += g_rg[i] * theta_diag[i] * g_ur[i];
  return amplitude * acc;
}

double elevation_deg(double altitude, double horizontal_dist) {
  if (horizontal_dist == 0.0) return 90.0;
  return std::atan(altitude / horizontal_dist) * 180.0 / std::numbers::pi;
}

double blockage_prob(double altitude, double horizontal_dist, double a, double b) {
  if (!(altitude >= 0.0) || !(horizontal_dist >= 0.0)) {
    throw std::invalid_argument("blockage_prob: altitude and distance must be nonnegative");
  }
  const double theta = elevation_deg(altitude, horizontal_dist);
  return 1.0 - 1.0 / (1.0 + a * std::exp(-b * (theta - a)));
}

double direct_gain(double pathloss_const, double d_ug) {
  if (!(d_ug > 0.0)) throw std::invalid_argument("direct_gain: distance must be positive");
  return pathloss_const / (d_ug * d_ug);
}

double effective_gain(std::span<const double> blockage, std::span<const double> direct,
                      std::span<const Complex> cascaded) {
  if (blockage.size() != direct.size() || cascaded.size() != direct.size()) {
    throw std::invalid_argument("effective_gain: length mismatch");
  }
  double direct_part = 0.0;
  double cascaded_part = 0.0;
  for (std::size_t j = 0; j < direct.size(); ++j) {
    const double p = blockage[j];
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("effective_gain: probability outside [0,1]");
    if (!(direct[j] >= 0.0) || !std::isfinite(direct[j])) {
      throw std::domain_error("effective_gain: direct gain must be finite and nonnegative");
    }
    if (!std::isfinite(cascaded[j].real()) || !std::isfinite(cascaded[j].imag())) {
      throw std::domain_error("effective_gain: non-finite cascaded gain");
    }
    direct_part += (1.0 - p) * direct[j];
    cascaded_part += p * std::norm(cascaded[j]);
  }
  return direct_part + cascaded_part;
}

double achievable_rate(bool scheduled, double gain, double power_w, double bandwidth_hz,
                       double noise_psd_w_per_hz) {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("achievable_rate: bandwidth must be positive");
  if (!(noise_psd_w_per_hz > 0.0)) throw std::invalid_argument("achievable_rate: noise must be positive");
  if (!scheduled) return 0.0;
  const double snr = gain * power_w / (bandwidth_hz * noise_psd_w_per_hz);
  return bandwidth_hz * std::log2(1.0 + snr);
}

double dbm_per_hz_to_w_per_hz(double dbm_per_hz) {
  return std::pow(10.0, dbm_per_hz / 10.0) * 1e-3;
}

}  // namespace uavnet::channel
