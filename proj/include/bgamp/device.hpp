#pragma once

#include <string>

namespace bgamp {

inline constexpr double kBoltzmann = 1.380649e-23;      // J/K
inline constexpr double kRoomTemperature = 300.0;       // K
inline constexpr double kThermalVoltage300 = 25.85e-3;  // V

inline constexpr double thermal_voltage(double temp_k) {
  return kThermalVoltage300 * (temp_k / kRoomTemperature);
}

// Output-conductance curvature shapes. The quadratic term rides the per-length
// lambda = lambda0/L; the cubic term rides lambda0 alone, so its contribution to
// the conductance curvature does not fall off with channel length.
inline constexpr double kClmQuadShape = 0.005;   // 1/V
inline constexpr double kClmCubicShape = 0.003;  // 1/V^2

enum class Polarity { N, P };

struct DeviceParams {
  Polarity polarity = Polarity::N;
  double vt0 = 0.5;          // V, threshold at zero back-gate bias
  double kprime = 400e-6;    // A/V^2
  double n_slope = 1.0;      // subthreshold slope factor, >= 1
  double lambda0 = 0.0;      // 1/V * um; lambda = lambda0 / length
  double chi_mag = 0.0;      // back-gate coupling |gmb/gm|, in [0, 1)
  double gamma_noise = 1.0;  // thermal noise factor
  double k_flicker = 0.0;    // V^2 * F
  double cox_area = 6e-3;    // F/m^2
  double width = 1.0;        // um
  double length = 1.0;       // um
};

// Throws std::invalid_argument naming the offending field.
void validate(const DeviceParams& p);

struct BiasTuple {
  double vgs = 0.0;  // raw terminal differences, negative for P in saturation
  double vds = 0.0;
  double vbs = 0.0;
  double ids = 0.0;  // signed terminal current, ids = drain_current(p, vgs, vds, vbs)
};

// Taylor coefficients of the drain current about an operating point,
// already divided by the factorials of their orders:
//   di = sum_k gm_k dvgs^k + gds_k dvds^k + gmb_k dvbs^k
//      + x11 dvgs dvds + x21 dvgs^2 dvds + x12 dvgs dvds^2
//      + y11 dvbs dvds + y21 dvbs^2 dvds + y12 dvbs dvds^2  + ...
// P devices carry the (-1)^(order+1) terminal sign fold, so first-order entries
// are positive in saturation for both polarities and N+P sums combine directly.
struct DerivativeSet {
  double gm1 = 0, gm2 = 0, gm3 = 0;     // A/V, A/V^2, A/V^3
  double gds1 = 0, gds2 = 0, gds3 = 0;
  double gmb1 = 0, gmb2 = 0, gmb3 = 0;
  double x11 = 0, x21 = 0, x12 = 0;     // mixed gate/drain
  double y11 = 0, y21 = 0, y12 = 0;     // mixed back-gate/drain
};

// Smooth weak-to-strong-inversion current. P devices evaluate with all terminal
// voltages sign-flipped and return the flipped (negative) current.
// Throws std::domain_error on non-finite input.
double drain_current(const DeviceParams& p, double vgs, double vds, double vbs,
                     double temp_k = kRoomTemperature);

// Convenience: bias tuple with self-consistent ids.
BiasTuple make_bias(const DeviceParams& p, double vgs, double vds, double vbs,
                    double temp_k = kRoomTemperature);

// Analytic partials up to `order` (1..3); entries above `order` are zero.
// Throws std::domain_error for order outside 1..3.
DerivativeSet derivatives(const DeviceParams& p, const BiasTuple& bias, int order = 3,
                          double temp_k = kRoomTemperature);

// 1/gds1. gds1 == 0 returns +infinity (ideal current source); gds1 < 0 throws.
double ro(const DerivativeSet& d);

}  // namespace bgamp
