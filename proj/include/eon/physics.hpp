#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace eon {

/// Delays are carried as integer picoseconds throughout the library.
using Picoseconds = std::int64_t;

inline constexpr double kSpeedOfLightKmPerS = 2.99792458e5;
inline constexpr double kPicosecondsPerSecond = 1e12;

class PhysicsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fiber parameters used for delay computations.
///
/// When `slot_width_nm_override` is set it replaces the frequency-to-wavelength
/// conversion of `slot_width_ghz`, which lets callers work with a nominal
/// channel width such as 0.4 nm directly.
struct FiberParams {
  double dispersion_ps_per_nm_km = 17.0;
  double central_frequency_thz = 193.1;
  double slot_width_ghz = 50.0;
  double propagation_speed_km_s = 2e5;
  std::optional<double> slot_width_nm_override;

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw PhysicsError(std::string("fiber parameter must be positive: ") + what);
      }
    };
    positive(dispersion_ps_per_nm_km, "dispersion_ps_per_nm_km");
    positive(central_frequency_thz, "central_frequency_thz");
    positive(slot_width_ghz, "slot_width_ghz");
    positive(propagation_speed_km_s, "propagation_speed_km_s");
    if (slot_width_nm_override) positive(*slot_width_nm_override, "slot_width_nm_override");
  }
};

/// Round-half-up to integer picoseconds. Inputs are non-negative in practice.
inline Picoseconds round_half_up(double ps) {
  return static_cast<Picoseconds>(std::floor(ps + 0.5));
}

/// Wavelength width of a frequency interval at a given centre frequency,
/// d_lambda = c * d_f / f_c^2.
inline double frequency_width_to_nm(double width_ghz, double central_frequency_thz) {
  if (!(central_frequency_thz > 0.0)) {
    throw PhysicsError("central frequency must be positive");
  }
  if (width_ghz < 0.0) {
    throw PhysicsError("frequency width must be non-negative");
  }
  const double c_m_per_s = kSpeedOfLightKmPerS * 1e3;
  const double df_hz = width_ghz * 1e9;
  const double fc_hz = central_frequency_thz * 1e12;
  return c_m_per_s * df_hz / (fc_hz * fc_hz) * 1e9;
}

inline double slot_width_nm(const FiberParams& params) {
  if (params.slot_width_nm_override) return *params.slot_width_nm_override;
  return frequency_width_to_nm(params.slot_width_ghz, params.central_frequency_thz);
}

/// Worst-case intra-band delay spread caused by group velocity dispersion:
/// D * (band_slots * slot width) * L, rounded to integer picoseconds.
inline Picoseconds gvd_differential_delay_ps(const FiberParams& params, int band_slots,
                                             double length_km) {
  if (band_slots < 1) throw PhysicsError("band must span at least one slot");
  if (length_km < 0.0) throw PhysicsError("length must be non-negative");
  const double band_nm = static_cast<double>(band_slots) * slot_width_nm(params);
  return round_half_up(params.dispersion_ps_per_nm_km * band_nm * length_km);
}

inline Picoseconds propagation_delay_ps(double length_km, double speed_km_s) {
  if (length_km < 0.0) throw PhysicsError("length must be non-negative");
  if (!(speed_km_s > 0.0)) throw PhysicsError("propagation speed must be positive");
  return round_half_up(length_km / speed_km_s * kPicosecondsPerSecond);
}

inline Picoseconds propagation_delay_ps(const FiberParams& params, double length_km) {
  return propagation_delay_ps(length_km, params.propagation_speed_km_s);
}

inline constexpr Picoseconds microseconds_to_ps(double us) {
  return static_cast<Picoseconds>(us * 1e6 + (us >= 0 ? 0.5 : -0.5));
}

inline constexpr Picoseconds milliseconds_to_ps(double ms) {
  return static_cast<Picoseconds>(ms * 1e9 + (ms >= 0 ? 0.5 : -0.5));
}

}  // namespace eon
